use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SpaceError;

/// Fixed-length digit vector describing an architecture.
///
/// The text form joins the digits with `-` (`"0-1-0-4"`); that form is used
/// as the key in tabular files, in reports, and on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct EncodedArch(Vec<u8>);

impl EncodedArch {
    pub fn new(digits: Vec<u8>) -> Self {
        Self(digits)
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Digits divided by `max_digit`, the input representation of the surrogate.
    pub fn scaled(&self, max_digit: u8) -> Vec<f64> {
        let scale = f64::from(max_digit.max(1));
        self.0.iter().map(|&d| f64::from(d) / scale).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EncodedArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for EncodedArch {
    type Err = SpaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(SpaceError::InvalidEncoding("empty encoding".into()));
        }
        s.split('-')
            .map(|part| {
                part.parse::<u8>()
                    .map_err(|_| SpaceError::InvalidEncoding(format!("bad digit {part:?}")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(EncodedArch)
    }
}

impl Serialize for EncodedArch {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EncodedArch {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Hamming distance between two encodings of the same domain.
pub fn edit_distance(a: &EncodedArch, b: &EncodedArch) -> Result<usize, SpaceError> {
    if a.len() != b.len() {
        return Err(SpaceError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count())
}
