use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::SmallVec;

/// A position in a term: a sequence of 1-based argument indices.
///
/// The empty sequence is the root position. Positions order lexicographically
/// on their indices with a prefix sorting before its extensions, which is the
/// pre-order (document order) of the positions of a term.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Position(SmallVec<[u32; 6]>);

impl Position {
    pub fn root() -> Self {
        Position(SmallVec::new())
    }

    /// Builds a position from 1-based indices.
    ///
    /// Panics if an index is zero.
    pub fn from_indices(indices: &[u32]) -> Self {
        assert!(indices.iter().all(|&i| i > 0), "position indices are 1-based");
        Position(SmallVec::from_slice(indices))
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// `self.i`
    pub fn child(&self, i: u32) -> Position {
        debug_assert!(i > 0);
        let mut v = self.0.clone();
        v.push(i);
        Position(v)
    }

    /// Concatenation `self.other`.
    pub fn concat(&self, other: &Position) -> Position {
        if other.is_root() {
            return self.clone();
        }
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Position(v)
    }

    /// Prefix order: `self <= other` iff `self` is a prefix of `other`.
    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Returns `q` such that `prefix.q == self`.
    pub fn strip_prefix(&self, prefix: &Position) -> Option<Position> {
        self.0
            .strip_prefix(prefix.0.as_slice())
            .map(|rest| Position(SmallVec::from_slice(rest)))
    }

    pub fn parent(&self) -> Option<Position> {
        if self.is_root() {
            None
        } else {
            Some(Position(SmallVec::from_slice(&self.0[..self.0.len() - 1])))
        }
    }

    /// All prefixes from the root up to and including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = Position> + '_ {
        (0..=self.0.len()).map(move |n| Position(SmallVec::from_slice(&self.0[..n])))
    }

    /// Orders shorter positions first, then lexicographically.
    pub fn cmp_shortlex(&self, other: &Position) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

/// Longest common prefix of a non-empty set of positions.
///
/// Returns `None` when `positions` is empty.
pub fn greatest_common_prefix<'a, I>(positions: I) -> Option<Position>
where
    I: IntoIterator<Item = &'a Position>,
{
    let mut iter = positions.into_iter();
    let first = iter.next()?;
    let mut len = first.len();
    for p in iter {
        len = first.0[..len]
            .iter()
            .zip(p.0.iter())
            .take_while(|(a, b)| a == b)
            .count();
        if len == 0 {
            break;
        }
    }
    Some(Position(SmallVec::from_slice(&first.0[..len])))
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (n, i) in self.0.iter().enumerate() {
            if n > 0 {
                f.write_str(".")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid position `{0}`")]
pub struct PositionParseError(pub String);

impl FromStr for Position {
    type Err = PositionParseError;

    /// Accepts `ε`, `e` or the empty string for the root, otherwise
    /// dot-separated positive integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s == "ε" || s == "e" {
            return Ok(Position::root());
        }
        let mut v = SmallVec::new();
        for part in s.split('.') {
            match part.parse::<u32>() {
                Ok(i) if i > 0 => v.push(i),
                _ => return Err(PositionParseError(s.to_string())),
            }
        }
        Ok(Position(v))
    }
}
