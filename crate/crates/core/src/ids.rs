//! Identifiers for operads and foliage positions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("operad id must not be empty")]
    Empty,
    #[error("operad id `{0}` contains a character outside [A-Za-z0-9_]")]
    BadChar(String),
    #[error("operad id `{0}` must not start with a digit")]
    LeadingDigit(String),
    #[error("operad id `{0}` is reserved for the composition operator")]
    Reserved(String),
    #[error("position must be at least 1")]
    ZeroPosition,
}

/// Name of an operad. A token of letters, digits and underscores that does
/// not start with a digit and is not of the form `o_<digits>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OperadId(String);

impl OperadId {
    pub fn new(name: impl Into<String>) -> Result<Self, IdError> {
        let name = name.into();
        let mut chars = name.chars();
        let first = chars.next().ok_or(IdError::Empty)?;
        if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(IdError::BadChar(name));
        }
        if first.is_ascii_digit() {
            return Err(IdError::LeadingDigit(name));
        }
        if is_operator_word(&name) {
            return Err(IdError::Reserved(name));
        }
        Ok(OperadId(name))
    }

    /// Lower bound for range scans over maps keyed by ids.
    pub(crate) fn min_value() -> Self {
        OperadId(String::new())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// `o_` optionally followed by digits lexes as the composition operator.
pub(crate) fn is_operator_word(word: &str) -> bool {
    word.strip_prefix("o_")
        .is_some_and(|rest| rest.chars().all(|c| c.is_ascii_digit()))
}

impl fmt::Display for OperadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for OperadId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperadId::new(s)
    }
}

impl TryFrom<String> for OperadId {
    type Error = IdError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        OperadId::new(s)
    }
}

impl From<OperadId> for String {
    fn from(id: OperadId) -> String {
        id.0
    }
}

/// A 1-based leaf position in a foliage.
///
/// The upper bound (`max_fol`) depends on the machine configuration and is
/// checked by [`Config::position`](crate::Config::position).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Position(usize);

impl Position {
    pub const ONE: Position = Position(1);

    pub fn new(value: usize) -> Result<Self, IdError> {
        if value == 0 {
            Err(IdError::ZeroPosition)
        } else {
            Ok(Position(value))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Shift up by `by` labels.
    pub(crate) fn shifted(self, by: usize) -> Position {
        Position(self.0 + by)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<usize> for Position {
    type Error = IdError;

    fn try_from(v: usize) -> Result<Self, Self::Error> {
        Position::new(v)
    }
}

impl From<Position> for usize {
    fn from(p: Position) -> usize {
        p.0
    }
}

/// Test and doc helper: `id("f")`. Panics on malformed names.
pub fn id(name: &str) -> OperadId {
    OperadId::new(name).unwrap_or_else(|e| panic!("{e}"))
}

/// Test and doc helper: `pos(3)`. Panics on zero.
pub fn pos(value: usize) -> Position {
    Position::new(value).unwrap_or_else(|e| panic!("{e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_tokens() {
        for ok in ["f", "g2", "_x", "op_1", "o", "o_x", "O_1"] {
            assert!(OperadId::new(ok).is_ok(), "{ok}");
        }
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(OperadId::new(""), Err(IdError::Empty));
        assert!(matches!(OperadId::new("a-b"), Err(IdError::BadChar(_))));
        assert!(matches!(OperadId::new("2f"), Err(IdError::LeadingDigit(_))));
        assert!(matches!(OperadId::new("o_"), Err(IdError::Reserved(_))));
        assert!(matches!(OperadId::new("o_12"), Err(IdError::Reserved(_))));
    }

    #[test]
    fn position_is_one_based() {
        assert_eq!(Position::new(0), Err(IdError::ZeroPosition));
        assert_eq!(pos(4).get(), 4);
        assert_eq!(pos(4).shifted(2), pos(6));
    }
}
