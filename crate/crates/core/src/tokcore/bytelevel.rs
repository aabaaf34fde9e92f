//! The fixed byte -> printable character bijection used by byte-level models.
//!
//! Bytes in `'!'..='~'`, `'¡'..='¬'` and `'®'..='ÿ'` map to the code point of
//! the same value. The remaining 68 bytes map, in ascending byte order, to
//! `U+0100`, `U+0101`, ... so that space becomes `Ġ` (U+0120) and newline
//! becomes `Ċ` (U+010A). This is the table used by GPT-2 style byte-level
//! tokenizers.

use std::sync::OnceLock;

struct Tables {
    to_char: [char; 256],
    to_byte: std::collections::HashMap<char, u8>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut to_char = ['\0'; 256];
        let mut extra = 0u32;
        for b in 0..=255u8 {
            let printable = matches!(b, b'!'..=b'~' | 0xA1..=0xAC | 0xAE..=0xFF);
            to_char[b as usize] = if printable {
                char::from(b)
            } else {
                let c = char::from_u32(256 + extra).expect("valid code point");
                extra += 1;
                c
            };
        }
        let to_byte = to_char.iter().enumerate().map(|(b, &c)| (c, b as u8)).collect();
        Tables { to_char, to_byte }
    })
}

pub fn byte_to_char(b: u8) -> char {
    tables().to_char[b as usize]
}

pub fn char_to_byte(c: char) -> Option<u8> {
    tables().to_byte.get(&c).copied()
}

pub fn encode_bytes(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_char(b)).collect()
}

/// Inverse of [`encode_bytes`]; `None` if a character is outside the table.
pub fn decode_str(mapped: &str) -> Option<Vec<u8>> {
    mapped.chars().map(char_to_byte).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_a_bijection() {
        let mut seen = std::collections::HashSet::new();
        for b in 0..=255u8 {
            let c = byte_to_char(b);
            assert!(!c.is_whitespace() && !c.is_control(), "byte {b} maps to {c:?}");
            assert!(seen.insert(c));
            assert_eq!(char_to_byte(c), Some(b));
        }
    }

    #[test]
    fn well_known_entries() {
        assert_eq!(byte_to_char(b' '), 'Ġ');
        assert_eq!(byte_to_char(b'\n'), 'Ċ');
        assert_eq!(byte_to_char(b'a'), 'a');
        assert_eq!(encode_bytes(b"jge addr14\n"), "jgeĠaddr14Ċ");
        assert_eq!(decode_str("jgeĠaddr14Ċ").unwrap(), b"jge addr14\n");
        assert_eq!(decode_str("\u{4e00}"), None);
    }
}
