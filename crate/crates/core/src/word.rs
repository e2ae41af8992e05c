//! Mixed-radix domains and the words that live in them.
//!
//! Coordinate 1 of the textual form is index 0 here and is the leftmost
//! token. Mixed-radix ranks treat coordinate 1 as the most significant digit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Domain {
    radices: Vec<u32>,
}

impl Domain {
    pub fn new(radices: Vec<u32>) -> Result<Self> {
        if radices.is_empty() {
            return Err(Error::InvalidDomain("a domain needs at least one coordinate".into()));
        }
        if let Some((i, &r)) = radices.iter().enumerate().find(|(_, &r)| r < 2) {
            return Err(Error::InvalidDomain(format!("radix {r} at coordinate {} is below 2", i + 1)));
        }
        Ok(Domain { radices })
    }

    /// `Z_m^n`.
    pub fn uniform(m: u32, n: usize) -> Result<Self> {
        Domain::new(vec![m; n])
    }

    pub fn radices(&self) -> &[u32] {
        &self.radices
    }

    pub fn radix(&self, coord: usize) -> u32 {
        self.radices[coord]
    }

    /// Number of coordinates.
    pub fn width(&self) -> usize {
        self.radices.len()
    }

    /// Total number of words, or `None` on `u128` overflow.
    pub fn size(&self) -> Option<u128> {
        self.radices
            .iter()
            .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
    }

    /// Total number of words if it fits in `u64`.
    pub fn size_u64(&self) -> Option<u64> {
        self.size().and_then(|s| u64::try_from(s).ok())
    }

    pub fn concat(&self, other: &Domain) -> Domain {
        let mut radices = self.radices.clone();
        radices.extend_from_slice(&other.radices);
        Domain { radices }
    }

    /// Words print without separators when every radix fits in one decimal digit.
    pub fn is_compact(&self) -> bool {
        self.radices.iter().all(|&r| r <= 10)
    }

    pub fn contains(&self, digits: &[u32]) -> bool {
        digits.len() == self.width() && digits.iter().zip(&self.radices).all(|(&d, &r)| d < r)
    }

    pub fn check(&self, digits: &[u32]) -> Result<()> {
        if digits.len() != self.width() {
            return Err(Error::WrongLength { expected: self.width(), found: digits.len() });
        }
        for (coord, (&d, &r)) in digits.iter().zip(&self.radices).enumerate() {
            if d >= r {
                return Err(Error::DigitOutOfRange { coord: coord + 1, digit: d as u64, radix: r });
            }
        }
        Ok(())
    }

    pub fn rank(&self, digits: &[u32]) -> u128 {
        digits
            .iter()
            .zip(&self.radices)
            .fold(0u128, |acc, (&d, &r)| acc * r as u128 + d as u128)
    }

    /// Rank as `u64`; only meaningful when [`Domain::size_u64`] is `Some`.
    pub fn rank_u64(&self, digits: &[u32]) -> u64 {
        digits
            .iter()
            .zip(&self.radices)
            .fold(0u64, |acc, (&d, &r)| acc * r as u64 + d as u64)
    }

    pub fn unrank(&self, mut rank: u128) -> Word {
        let mut digits = vec![0u32; self.width()];
        for (d, &r) in digits.iter_mut().zip(&self.radices).rev() {
            *d = (rank % r as u128) as u32;
            rank /= r as u128;
        }
        Word(digits)
    }

    /// Parses comma-separated decimal digits, or contiguous single-character
    /// digits when every radix is at most 10.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        let digits: Vec<u32> = if text.contains(',') || !self.is_compact() {
            text.split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    tok.parse::<u64>()
                        .map_err(|_| Error::MalformedToken(tok.to_string()))
                        .and_then(|v| u32::try_from(v).map_err(|_| Error::MalformedToken(tok.to_string())))
                })
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|c| c.to_digit(10).ok_or_else(|| Error::MalformedToken(c.to_string())))
                .collect::<Result<_>>()?
        };
        self.check(&digits)?;
        Ok(Word(digits))
    }

    pub fn format_word(&self, word: &Word) -> String {
        if self.is_compact() {
            word.0.iter().map(|d| char::from_digit(*d, 10).unwrap_or('?')).collect()
        } else {
            word.0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
        }
    }

    pub fn zero(&self) -> Word {
        Word(vec![0; self.width()])
    }
}

/// A fixed-length digit vector; validity is relative to a [`Domain`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<u32>);

impl Word {
    pub fn new(digits: Vec<u32>) -> Self {
        Word(digits)
    }

    pub fn digits(&self) -> &[u32] {
        &self.0
    }

    pub fn into_digits(self) -> Vec<u32> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of coordinates in which two equal-length words differ.
    pub fn distance(&self, other: &Word) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl From<Vec<u32>> for Word {
    fn from(digits: Vec<u32>) -> Self {
        Word(digits)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_comma_separated() {
        let d = Domain::uniform(3, 3).unwrap();
        assert_eq!(d.parse_word("1,0,2").unwrap(), Word(vec![1, 0, 2]));
    }

    #[test]
    fn parse_contiguous() {
        let d = Domain::uniform(2, 3).unwrap();
        assert_eq!(d.parse_word("000").unwrap(), Word(vec![0, 0, 0]));
    }

    #[test]
    fn parse_rejects_out_of_range() {
        let d = Domain::uniform(3, 2).unwrap();
        assert!(matches!(d.parse_word("3,0"), Err(Error::DigitOutOfRange { coord: 1, digit: 3, radix: 3 })));
    }

    #[test]
    fn parse_rejects_wrong_length_and_garbage() {
        let d = Domain::uniform(3, 2).unwrap();
        assert!(matches!(d.parse_word("012"), Err(Error::WrongLength { expected: 2, found: 3 })));
        assert!(matches!(d.parse_word("1,x"), Err(Error::MalformedToken(_))));
        assert!(matches!(d.parse_word("1a"), Err(Error::MalformedToken(_))));
    }

    #[test]
    fn wide_radices_use_commas() {
        let d = Domain::new(vec![16, 3]).unwrap();
        assert!(!d.is_compact());
        let w = d.parse_word("12,2").unwrap();
        assert_eq!(d.format_word(&w), "12,2");
        assert!(d.parse_word("12").is_err());
    }

    #[test]
    fn rank_is_most_significant_first() {
        let d = Domain::new(vec![2, 3]).unwrap();
        assert_eq!(d.rank(&[1, 0]), 3);
        assert_eq!(d.unrank(5), Word(vec![1, 2]));
        for r in 0..6 {
            assert_eq!(d.rank(d.unrank(r).digits()), r);
        }
    }

    #[test]
    fn domain_rejects_degenerate_radices() {
        assert!(Domain::new(vec![]).is_err());
        assert!(Domain::new(vec![2, 1]).is_err());
    }

    #[test]
    fn size_overflow_is_detected() {
        let d = Domain::uniform(1 << 16, 9).unwrap();
        assert_eq!(d.size(), None);
        assert_eq!(Domain::uniform(3, 4).unwrap().size(), Some(81));
    }
}
