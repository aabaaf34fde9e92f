//! Segmentation lattice over one piece: every vocabulary token matching at
//! every position, stored as edges grouped by start position.

use std::cmp::Ordering;

use super::trie::ByteTrie;
use crate::scalar::{log_add_exp, Real};

#[derive(Clone, Debug, Default)]
pub struct Lattice {
    len: usize,
    /// `offsets[i]..offsets[i + 1]` indexes the edges starting at `i`.
    offsets: Vec<u32>,
    /// `(end, token)` pairs, shortest first within a start position.
    edges: Vec<(u32, u32)>,
}

/// Best path over the lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ViterbiPath<R> {
    pub tokens: Vec<u32>,
    /// Token lengths in bytes, parallel to `tokens`.
    pub lengths: Vec<u32>,
    pub score: R,
}

impl Lattice {
    pub fn build(bytes: &[u8], trie: &ByteTrie) -> Self {
        let mut lat = Lattice {
            len: bytes.len(),
            offsets: Vec::with_capacity(bytes.len() + 1),
            edges: Vec::with_capacity(bytes.len() * 2),
        };
        for i in 0..bytes.len() {
            lat.offsets.push(lat.edges.len() as u32);
            let edges = &mut lat.edges;
            trie.for_each_prefix(&bytes[i..], |l, v| edges.push(((i + l) as u32, v)));
        }
        lat.offsets.push(lat.edges.len() as u32);
        lat
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn edges_from(&self, i: usize) -> &[(u32, u32)] {
        &self.edges[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// Maximum-score segmentation. Scores within `R::tie_tolerance()` count as
    /// equal; ties prefer fewer tokens, then the longest token at the
    /// leftmost point of difference. `skip` excludes one token index.
    /// Returns `None` when no full path exists.
    pub fn viterbi<R: Real>(&self, logprob: &[R], skip: Option<u32>) -> Option<ViterbiPath<R>> {
        let n = self.len;
        // best[i] = (score, token count, chosen edge) for the suffix starting at i.
        let mut best: Vec<Option<(R, u32, (u32, u32))>> = vec![None; n + 1];
        let tol = R::tie_tolerance();
        let mut suffix_score = vec![R::zero(); n + 1];
        let mut suffix_count = vec![0u32; n + 1];
        let mut reachable = vec![false; n + 1];
        reachable[n] = true;
        for i in (0..n).rev() {
            let mut cur: Option<(R, u32, (u32, u32))> = None;
            // Longest first, so an equal candidate never displaces a longer one.
            for &(end, tok) in self.edges_from(i).iter().rev() {
                if Some(tok) == skip || !reachable[end as usize] {
                    continue;
                }
                let lp = logprob[tok as usize];
                if !lp.is_finite() {
                    continue;
                }
                let cand = (lp + suffix_score[end as usize], suffix_count[end as usize] + 1, (end, tok));
                cur = Some(match cur {
                    None => cand,
                    Some(c) => {
                        if better(&cand, &c, tol) {
                            cand
                        } else {
                            c
                        }
                    }
                });
            }
            if let Some(c) = cur {
                reachable[i] = true;
                suffix_score[i] = c.0;
                suffix_count[i] = c.1;
            }
            best[i] = cur;
        }
        if !reachable[0] {
            return None;
        }
        let mut path = ViterbiPath {
            tokens: Vec::new(),
            lengths: Vec::new(),
            score: suffix_score[0],
        };
        let mut i = 0usize;
        while i < n {
            let (_, _, (end, tok)) = best[i].expect("reachable");
            path.tokens.push(tok);
            path.lengths.push(end - i as u32);
            i = end as usize;
        }
        Some(path)
    }

    /// Forward–backward pass. Adds `weight * P(edge)` to `expected[token]` for
    /// every edge and returns the log marginal likelihood of the piece.
    pub fn forward_backward<R: Real>(&self, logprob: &[R], weight: R, expected: &mut [R]) -> R {
        let n = self.len;
        if n == 0 {
            return R::zero();
        }
        let ninf = R::neg_infinity();
        let mut alpha = vec![ninf; n + 1];
        alpha[0] = R::zero();
        for i in 0..n {
            if alpha[i] == ninf {
                continue;
            }
            for &(end, tok) in self.edges_from(i) {
                let e = end as usize;
                alpha[e] = log_add_exp(alpha[e], alpha[i] + logprob[tok as usize]);
            }
        }
        let mut beta = vec![ninf; n + 1];
        beta[n] = R::zero();
        for i in (0..n).rev() {
            let mut acc = ninf;
            for &(end, tok) in self.edges_from(i) {
                acc = log_add_exp(acc, logprob[tok as usize] + beta[end as usize]);
            }
            beta[i] = acc;
        }
        let z = alpha[n];
        if z == ninf {
            return z;
        }
        for i in 0..n {
            if alpha[i] == ninf {
                continue;
            }
            for &(end, tok) in self.edges_from(i) {
                let lp = alpha[i] + logprob[tok as usize] + beta[end as usize] - z;
                if lp > ninf {
                    expected[tok as usize] += weight * lp.exp();
                }
            }
        }
        z
    }
}

fn better<R: Real>(a: &(R, u32, (u32, u32)), b: &(R, u32, (u32, u32)), tol: R) -> bool {
    let diff = a.0 - b.0;
    let scale = R::one().max(a.0.abs()).max(b.0.abs());
    if diff > tol * scale {
        return true;
    }
    if diff < -(tol * scale) {
        return false;
    }
    match a.1.cmp(&b.1) {
        Ordering::Less => true,
        Ordering::Greater => false,
        // Equal score and count: keep the longer first token.
        Ordering::Equal => a.2 .0 > b.2 .0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (ByteTrie, Vec<f64>) {
        let keys: [&[u8]; 3] = [b"a", b"b", b"ab"];
        (ByteTrie::from_keys(keys), vec![0.4f64.ln(), 0.3f64.ln(), 0.3f64.ln()])
    }

    #[test]
    fn viterbi_prefers_the_more_probable_path() {
        let (trie, lp) = toy();
        let lat = Lattice::build(b"ab", &trie);
        let path = lat.viterbi(&lp, None).unwrap();
        assert_eq!(path.tokens, [2]);
        assert!((path.score - 0.3f64.ln()).abs() < 1e-12);
        let without = lat.viterbi(&lp, Some(2)).unwrap();
        assert_eq!(without.tokens, [0, 1]);
    }

    #[test]
    fn missing_unit_means_no_path() {
        let (trie, lp) = toy();
        assert!(Lattice::build(b"ac", &trie).viterbi(&lp, None).is_none());
        assert_eq!(Lattice::build(b"", &trie).viterbi(&lp, None).unwrap().tokens, Vec::<u32>::new());
    }

    #[test]
    fn marginals_sum_over_both_paths() {
        let (trie, lp) = toy();
        let lat = Lattice::build(b"ab", &trie);
        let mut exp = vec![0.0; 3];
        let z = lat.forward_backward(&lp, 1.0, &mut exp);
        let total: f64 = 0.3 + 0.4 * 0.3;
        assert!((z - total.ln()).abs() < 1e-12);
        assert!((exp[2] - 0.3 / total).abs() < 1e-12);
        assert!((exp[0] - 0.12 / total).abs() < 1e-12);
        assert!((exp[1] - 0.12 / total).abs() < 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let keys: [&[u8]; 3] = [b"a", b"b", b"ab"];
        let trie = ByteTrie::from_keys(keys);
        let lp: Vec<f32> = vec![0.4f32.ln(), 0.3f32.ln(), 0.3f32.ln()];
        let lat = Lattice::build(b"abab", &trie);
        assert_eq!(lat.viterbi(&lp, None).unwrap().tokens, [2, 2]);
    }

    #[test]
    fn equal_scores_prefer_fewer_tokens_then_longest_first() {
        // p(ab) = p(a) p(b): the single token wins on count.
        let keys: [&[u8]; 5] = [b"a", b"b", b"ab", b"c", b"bc"];
        let trie = ByteTrie::from_keys(keys);
        let lp = vec![0.5f64.ln(), 0.2f64.ln(), 0.1f64.ln(), 0.2f64.ln(), 0.04f64.ln()];
        assert_eq!(Lattice::build(b"ab", &trie).viterbi(&lp, None).unwrap().tokens, [2]);
        // "abc" as ab+c or a+bc: equal score, equal count, so the longer first token.
        assert_eq!(Lattice::build(b"abc", &trie).viterbi(&lp, None).unwrap().tokens, [2, 3]);
    }
}
