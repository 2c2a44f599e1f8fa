//! Bit-string helpers. Bits are stored one per byte, each 0 or 1.

use crate::error::{Error, Result};

/// Parses a string of `0`/`1` characters. Whitespace is ignored so that
/// grouped input such as `"0000 1111"` is accepted.
pub fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Input(format!("invalid bit character {other:?}"))),
        })
        .collect()
}

pub fn format_bits(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// Interprets `bits` as an unsigned integer, most significant bit first.
pub fn bits_to_u64(bits: &[u8]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

/// Writes the low `width` bits of `value`, most significant first.
pub fn u64_to_bits(value: u64, width: usize) -> Vec<u8> {
    (0..width)
        .rev()
        .map(|i| ((value >> i) & 1) as u8)
        .collect()
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub(crate) fn check_bits(bits: &[u8]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => Err(Error::Input(format!("value {} at position {i} is not a bit", bits[i]))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        let bits = parse_bits("0011 10").unwrap();
        assert_eq!(bits, vec![0, 0, 1, 1, 1, 0]);
        assert_eq!(format_bits(&bits), "001110");
        assert!(parse_bits("012").is_err());
    }

    #[test]
    fn integer_conversion() {
        assert_eq!(bits_to_u64(&[1, 1, 0, 0]), 12);
        assert_eq!(u64_to_bits(12, 4), vec![1, 1, 0, 0]);
        assert_eq!(u64_to_bits(1, 6), vec![0, 0, 0, 0, 0, 1]);
        assert_eq!(hamming(&[0, 1, 1], &[1, 1, 0]), 2);
    }
}
