//! The eight lex-induced total orders on multisets.
//!
//! Every ordering is a lexicographic composite: zero or more *stratum keys*
//! (cardinality, variety) followed by a lex or colex comparison of the
//! occurrence vectors.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};
use crate::multiset::{same_len, Multiset};

/// Occurrence-vector comparison scanning first-to-last.
pub fn lex_cmp(x: &Multiset, y: &Multiset) -> Result<Ordering> {
    same_len(x, y)?;
    Ok(lex_slice(x.occurrences(), y.occurrences()))
}

/// Occurrence-vector comparison scanning last-to-first.
pub fn colex_cmp(x: &Multiset, y: &Multiset) -> Result<Ordering> {
    same_len(x, y)?;
    Ok(colex_slice(x.occurrences(), y.occurrences()))
}

pub(crate) fn lex_slice(x: &[u32], y: &[u32]) -> Ordering {
    x.cmp(y)
}

pub(crate) fn colex_slice(x: &[u32], y: &[u32]) -> Ordering {
    x.iter().rev().cmp(y.iter().rev())
}

/// A stratum key used by the composite orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Key {
    Cardinality,
    Variety,
}

impl Key {
    pub fn of(self, ms: &Multiset) -> u32 {
        match self {
            Key::Cardinality => ms.cardinality(),
            Key::Variety => ms.variety(),
        }
    }
}

/// Identifies one of the eight induced orderings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingId {
    /// length-lex
    LL,
    /// length-colex
    LC,
    /// variety-lex
    VL,
    /// variety-colex
    VC,
    /// length-variety-lex
    LVL,
    /// length-variety-colex
    LVC,
    /// variety-length-lex
    VLL,
    /// variety-length-colex
    VLC,
}

impl OrderingId {
    pub const ALL: [OrderingId; 8] = [
        OrderingId::LL,
        OrderingId::LC,
        OrderingId::VL,
        OrderingId::VC,
        OrderingId::LVL,
        OrderingId::LVC,
        OrderingId::VLL,
        OrderingId::VLC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingId::LL => "ll",
            OrderingId::LC => "lc",
            OrderingId::VL => "vl",
            OrderingId::VC => "vc",
            OrderingId::LVL => "lvl",
            OrderingId::LVC => "lvc",
            OrderingId::VLL => "vll",
            OrderingId::VLC => "vlc",
        }
    }

    /// Leading stratum keys, most significant first.
    pub fn keys(self) -> &'static [Key] {
        use Key::*;
        match self {
            OrderingId::LL | OrderingId::LC => &[Cardinality],
            OrderingId::VL | OrderingId::VC => &[Variety],
            OrderingId::LVL | OrderingId::LVC => &[Cardinality, Variety],
            OrderingId::VLL | OrderingId::VLC => &[Variety, Cardinality],
        }
    }

    /// Whether the tie-breaking comparison scans last-to-first.
    pub fn is_colex(self) -> bool {
        matches!(
            self,
            OrderingId::LC | OrderingId::VC | OrderingId::LVC | OrderingId::VLC
        )
    }

    /// The ordering with the same keys and the other tie-break direction.
    pub fn mirror(self) -> OrderingId {
        match self {
            OrderingId::LL => OrderingId::LC,
            OrderingId::LC => OrderingId::LL,
            OrderingId::VL => OrderingId::VC,
            OrderingId::VC => OrderingId::VL,
            OrderingId::LVL => OrderingId::LVC,
            OrderingId::LVC => OrderingId::LVL,
            OrderingId::VLL => OrderingId::VLC,
            OrderingId::VLC => OrderingId::VLL,
        }
    }

    /// Stratum key tuple padded with zeros.
    pub fn stratum(self, ms: &Multiset) -> (u32, u32) {
        let keys = self.keys();
        let a = keys[0].of(ms);
        let b = keys.get(1).map_or(0, |k| k.of(ms));
        (a, b)
    }

    /// Three-way comparison under this ordering.
    pub fn cmp(self, x: &Multiset, y: &Multiset) -> Ordering {
        debug_assert_eq!(x.len(), y.len());
        for key in self.keys() {
            match key.of(x).cmp(&key.of(y)) {
                Ordering::Equal => {}
                other => return other,
            }
        }
        if self.is_colex() {
            colex_slice(x.occurrences(), y.occurrences())
        } else {
            lex_slice(x.occurrences(), y.occurrences())
        }
    }

    pub fn min<'a>(self, x: &'a Multiset, y: &'a Multiset) -> &'a Multiset {
        if self.cmp(x, y) == Ordering::Greater {
            y
        } else {
            x
        }
    }

    pub fn max<'a>(self, x: &'a Multiset, y: &'a Multiset) -> &'a Multiset {
        if self.cmp(x, y) == Ordering::Less {
            y
        } else {
            x
        }
    }
}

/// Checked three-way comparison under `ord`.
pub fn alpha_cmp(ord: OrderingId, x: &Multiset, y: &Multiset) -> Result<Ordering> {
    same_len(x, y)?;
    Ok(ord.cmp(x, y))
}

impl fmt::Display for OrderingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderingId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrderingId::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s.trim()))
            .map_or_else(|| usage(format!("unknown ordering `{s}`")), Ok)
    }
}
