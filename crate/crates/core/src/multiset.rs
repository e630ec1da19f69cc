//! Occurrence-vector multisets over a bounded universe.
//!
//! Elements are the contiguous integers `1..=n`. A [`Multiset`] stores
//! `occ(i)` for each element; a [`Universe`] stores the per-element maximum,
//! which is itself a multiset and caps every value a variable may take.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::rank::CountTables;

/// Largest per-element occurrence count a universe may declare.
pub const MAX_OCCURRENCE: u32 = 1 << 16;

/// A multiset over elements `1..=n`, stored as its occurrence vector.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Multiset {
    occ: Vec<u32>,
}

impl Multiset {
    pub fn empty(n: usize) -> Self {
        Multiset { occ: vec![0; n] }
    }

    pub fn from_occurrences(occ: Vec<u32>) -> Self {
        Multiset { occ }
    }

    /// Builds a multiset from an element list with repetitions, e.g. `[1, 2, 2]`.
    pub fn from_elements(n: usize, elems: &[usize]) -> Result<Self> {
        let mut occ = vec![0u32; n];
        for &e in elems {
            if e == 0 || e > n {
                return usage(format!("element {e} outside 1..={n}"));
            }
            occ[e - 1] += 1;
        }
        Ok(Multiset { occ })
    }

    /// Number of elements of the underlying universe.
    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.iter().all(|&o| o == 0)
    }

    pub fn occurrences(&self) -> &[u32] {
        &self.occ
    }

    #[cfg(test)]
    pub(crate) fn occurrences_mut(&mut self) -> &mut [u32] {
        &mut self.occ
    }

    pub fn into_occurrences(self) -> Vec<u32> {
        self.occ
    }

    /// `occ(elem, S)` with 1-based element index.
    pub fn occ_of(&self, elem: usize) -> Result<u32> {
        if elem == 0 || elem > self.occ.len() {
            return usage(format!("element {elem} outside 1..={}", self.occ.len()));
        }
        Ok(self.occ[elem - 1])
    }

    /// `|S|`: number of elements counted with multiplicity.
    pub fn cardinality(&self) -> u32 {
        self.occ.iter().sum()
    }

    /// `‖S‖`: number of distinct elements.
    pub fn variety(&self) -> u32 {
        self.occ.iter().filter(|&&o| o > 0).count() as u32
    }

    /// Element list with repetitions, ascending.
    pub fn elements(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cardinality() as usize);
        for (i, &o) in self.occ.iter().enumerate() {
            out.extend(std::iter::repeat_n(i + 1, o as usize));
        }
        out
    }

    /// Occurrence-wise minimum.
    pub fn intersect(&self, other: &Multiset) -> Result<Multiset> {
        same_len(self, other)?;
        Ok(Multiset {
            occ: self.occ.iter().zip(&other.occ).map(|(a, b)| *a.min(b)).collect(),
        })
    }

    /// Occurrence-wise sum (`⊎`). Overflow past a universe is the caller's check.
    pub fn unionplus(&self, other: &Multiset) -> Result<Multiset> {
        same_len(self, other)?;
        Ok(Multiset {
            occ: self.occ.iter().zip(&other.occ).map(|(a, b)| a + b).collect(),
        })
    }

    /// Reverses the element order (`i ↦ n+1-i`).
    pub fn reversed(&self) -> Multiset {
        let mut occ = self.occ.clone();
        occ.reverse();
        Multiset { occ }
    }

    /// True when every occurrence count is within `universe`.
    pub fn fits(&self, universe: &Universe) -> bool {
        self.occ.len() == universe.len()
            && self.occ.iter().zip(universe.max_occ()).all(|(o, m)| o <= m)
    }
}

pub(crate) fn same_len(x: &Multiset, y: &Multiset) -> Result<()> {
    if x.len() != y.len() {
        return usage(format!(
            "multisets over different element counts ({} vs {})",
            x.len(),
            y.len()
        ));
    }
    Ok(())
}

/// Canonical text form: sorted elements with repetitions, comma separated;
/// the empty multiset prints as `{}`.
impl fmt::Display for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        let mut first = true;
        for (i, &o) in self.occ.iter().enumerate() {
            for _ in 0..o {
                if !first {
                    f.write_str(",")?;
                }
                write!(f, "{}", i + 1)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Multiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⦃{self}⦄")
    }
}

/// The maximal multiset: `max_occ[i]` occurrences of element `i+1`.
///
/// Cheap to clone; ranking tables are built lazily and shared.
#[derive(Clone)]
pub struct Universe {
    inner: Arc<UniverseInner>,
}

struct UniverseInner {
    max_occ: Vec<u32>,
    max_card: u32,
    value_count: u128,
    tables: OnceLock<CountTables>,
}

impl Universe {
    pub fn new(max_occ: Vec<u32>) -> Result<Self> {
        if max_occ.is_empty() {
            return usage("universe needs at least one element");
        }
        if let Some(&m) = max_occ.iter().find(|&&m| m > MAX_OCCURRENCE) {
            return usage(format!("occurrence count {m} exceeds {MAX_OCCURRENCE}"));
        }
        let mut value_count: u128 = 1;
        for &m in &max_occ {
            value_count = match value_count.checked_mul(m as u128 + 1) {
                Some(v) => v,
                None => return usage("universe value count does not fit in 128 bits"),
            };
        }
        let max_card = max_occ.iter().map(|&m| m as u64).sum::<u64>();
        let max_card = match u32::try_from(max_card) {
            Ok(c) => c,
            Err(_) => return usage("universe cardinality does not fit in 32 bits"),
        };
        Ok(Universe {
            inner: Arc::new(UniverseInner {
                max_occ,
                max_card,
                value_count,
                tables: OnceLock::new(),
            }),
        })
    }

    /// Universe with `n` elements each occurring `k` times.
    pub fn uniform(n: usize, k: u32) -> Result<Self> {
        Universe::new(vec![k; n])
    }

    /// Parses either an element list (`1,2,2,3,3`) or the `NxK` shorthand
    /// (`5x10`: elements 1..=5, ten occurrences each).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some((n, k)) = text.split_once(['x', 'X']) {
            let n: usize = n.trim().parse().map_err(|_| bad_universe(text))?;
            let k: u32 = k.trim().parse().map_err(|_| bad_universe(text))?;
            return Universe::uniform(n, k);
        }
        let elems = parse_elements(text)?;
        let n = elems.iter().copied().max().unwrap_or(0);
        if n == 0 {
            return usage(format!("universe `{text}` has no elements"));
        }
        Universe::new(Multiset::from_elements(n, &elems)?.into_occurrences())
    }

    /// Number of distinct elements `n`.
    pub fn len(&self) -> usize {
        self.inner.max_occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.max_card == 0
    }

    pub fn max_occ(&self) -> &[u32] {
        &self.inner.max_occ
    }

    /// `|U|`.
    pub fn max_cardinality(&self) -> u32 {
        self.inner.max_card
    }

    /// Largest variety any value can have.
    pub fn max_variety(&self) -> u32 {
        self.inner.max_occ.iter().filter(|&&m| m > 0).count() as u32
    }

    /// Number of sub-multisets, `∏(max_occ[i] + 1)`.
    pub fn value_count(&self) -> u128 {
        self.inner.value_count
    }

    pub fn empty_multiset(&self) -> Multiset {
        Multiset::empty(self.len())
    }

    /// `U` itself, the maximum under every ordering.
    pub fn full_multiset(&self) -> Multiset {
        Multiset::from_occurrences(self.inner.max_occ.clone())
    }

    /// Universe with the element order reversed.
    pub fn reversed(&self) -> Universe {
        let mut occ = self.inner.max_occ.clone();
        occ.reverse();
        Universe::new(occ).expect("reversal preserves validity")
    }

    /// Parses a multiset literal over this universe and validates it.
    pub fn parse_multiset(&self, text: &str) -> Result<Multiset> {
        let elems = parse_elements(text)?;
        let ms = Multiset::from_elements(self.len(), &elems)?;
        self.check(&ms)?;
        Ok(ms)
    }

    pub fn check(&self, ms: &Multiset) -> Result<()> {
        if ms.len() != self.len() {
            return usage(format!(
                "multiset over {} elements used with universe of {}",
                ms.len(),
                self.len()
            ));
        }
        if !ms.fits(self) {
            return usage(format!("multiset {ms} exceeds the universe"));
        }
        Ok(())
    }

    pub(crate) fn tables(&self) -> &CountTables {
        self.inner.tables.get_or_init(|| CountTables::build(self))
    }
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.max_occ == other.inner.max_occ
    }
}

impl Eq for Universe {}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Universe({})", self.full_multiset())
    }
}

fn bad_universe(text: &str) -> crate::Error {
    crate::Error::Usage(format!("cannot parse universe `{text}`"))
}

/// Parses `1,2,2` style element lists. `{}`, `∅` and the empty string are
/// the empty list.
pub fn parse_elements(text: &str) -> Result<Vec<usize>> {
    let t = text.trim().trim_start_matches('{').trim_end_matches('}').trim();
    if t.is_empty() || t == "∅" {
        return Ok(Vec::new());
    }
    t.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| crate::Error::Usage(format!("bad element `{s}` in `{text}`")))
        })
        .collect()
}
