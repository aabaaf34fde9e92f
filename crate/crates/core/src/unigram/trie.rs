/// Byte trie mapping token byte strings to dense indices.
#[derive(Clone, Debug, Default)]
pub struct ByteTrie {
    nodes: Vec<Node>,
    max_depth: usize,
}

#[derive(Clone, Debug, Default)]
struct Node {
    children: Vec<(u8, u32)>,
    value: Option<u32>,
}

impl ByteTrie {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::default()],
            max_depth: 0,
        }
    }

    pub fn from_keys<'a>(keys: impl IntoIterator<Item = &'a [u8]>) -> Self {
        let mut t = Self::new();
        for (i, k) in keys.into_iter().enumerate() {
            t.insert(k, i as u32);
        }
        t
    }

    /// Inserts a key, replacing any previous value.
    pub fn insert(&mut self, key: &[u8], value: u32) {
        let mut cur = 0usize;
        for &b in key {
            cur = match self.nodes[cur].children.binary_search_by_key(&b, |c| c.0) {
                Ok(i) => self.nodes[cur].children[i].1 as usize,
                Err(i) => {
                    let id = self.nodes.len() as u32;
                    self.nodes.push(Node::default());
                    self.nodes[cur].children.insert(i, (b, id));
                    id as usize
                }
            };
        }
        self.nodes[cur].value = Some(value);
        self.max_depth = self.max_depth.max(key.len());
    }

    pub fn get(&self, key: &[u8]) -> Option<u32> {
        let mut cur = 0usize;
        for &b in key {
            cur = self.child(cur, b)?;
        }
        self.nodes[cur].value
    }

    fn child(&self, node: usize, b: u8) -> Option<usize> {
        let ch = &self.nodes[node].children;
        ch.binary_search_by_key(&b, |c| c.0).ok().map(|i| ch[i].1 as usize)
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    /// Calls `f(len, value)` for every key that is a prefix of `bytes`, shortest first.
    pub fn for_each_prefix(&self, bytes: &[u8], mut f: impl FnMut(usize, u32)) {
        let mut cur = 0usize;
        for (i, &b) in bytes.iter().enumerate() {
            match self.child(cur, b) {
                Some(n) => cur = n,
                None => return,
            }
            if let Some(v) = self.nodes[cur].value {
                f(i + 1, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixes_found_in_length_order() {
        let t = ByteTrie::from_keys([&b"a"[..], b"ab", b"abc", b"b"]);
        let mut seen = Vec::new();
        t.for_each_prefix(b"abd", |l, v| seen.push((l, v)));
        assert_eq!(seen, [(1, 0), (2, 1)]);
        assert_eq!(t.get(b"abc"), Some(2));
        assert_eq!(t.get(b"ac"), None);
        assert_eq!(t.max_depth(), 3);
    }
}
