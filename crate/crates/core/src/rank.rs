//! Counting, ranking and unranking under the eight orderings.
//!
//! Multisets of a universe are counted per `(cardinality, variety)` stratum
//! with a suffix dynamic program over elements; each element contributes any
//! occurrence in `0..=max_occ[i]`. Two-dimensional prefix sums make every
//! box count O(1), so ranking costs O(n · max_occ).

use crate::envelope::Span;
use crate::error::{usage, Error, Result};
use crate::multiset::{Multiset, Universe};
use crate::order::{Key, OrderingId};

/// Above this many table cells the counting tables are refused.
const MAX_TABLE_CELLS: usize = 1 << 26;

/// Suffix count tables for a universe and for its reversal.
pub(crate) struct CountTables {
    forward: std::result::Result<Table, Error>,
    reverse: std::result::Result<Table, Error>,
}

impl CountTables {
    pub(crate) fn build(u: &Universe) -> Self {
        let mut rev = u.max_occ().to_vec();
        rev.reverse();
        CountTables {
            forward: Table::build(u.max_occ()),
            reverse: Table::build(&rev),
        }
    }

    fn table(&self, colex: bool) -> Result<&Table> {
        let t = if colex { &self.reverse } else { &self.forward };
        t.as_ref().map_err(Clone::clone)
    }
}

/// `sums[i]` holds inclusive 2-D prefix sums over `(card, var)` of the number
/// of ways to fill elements `i..n`.
struct Table {
    max_occ: Vec<u32>,
    cdim: usize,
    vdim: usize,
    sums: Vec<u128>,
}

impl Table {
    fn build(max_occ: &[u32]) -> Result<Table> {
        let n = max_occ.len();
        let cdim = max_occ.iter().map(|&m| m as usize).sum::<usize>() + 1;
        let vdim = n + 1;
        let cells = (n + 1).saturating_mul(cdim).saturating_mul(vdim);
        if cells > MAX_TABLE_CELLS {
            return Err(Error::Resource(format!(
                "ranking tables need {cells} cells (limit {MAX_TABLE_CELLS})"
            )));
        }
        let layer = cdim * vdim;
        let mut counts = vec![0u128; (n + 1) * layer];
        counts[n * layer] = 1;
        for i in (0..n).rev() {
            let (head, tail) = counts.split_at_mut((i + 1) * layer);
            let cur = &mut head[i * layer..];
            let next = &tail[..layer];
            for c in 0..cdim {
                for v in 0..vdim {
                    let mut total = next[c * vdim + v];
                    if v > 0 {
                        for o in 1..=(max_occ[i] as usize).min(c) {
                            total += next[(c - o) * vdim + v - 1];
                        }
                    }
                    cur[c * vdim + v] = total;
                }
            }
        }
        let mut sums = counts;
        for i in 0..=n {
            let s = &mut sums[i * layer..(i + 1) * layer];
            for c in 0..cdim {
                for v in 0..vdim {
                    let mut x = s[c * vdim + v];
                    if c > 0 {
                        x = x.wrapping_add(s[(c - 1) * vdim + v]);
                    }
                    if v > 0 {
                        x = x.wrapping_add(s[c * vdim + v - 1]);
                    }
                    if c > 0 && v > 0 {
                        x = x.wrapping_sub(s[(c - 1) * vdim + v - 1]);
                    }
                    s[c * vdim + v] = x;
                }
            }
        }
        Ok(Table {
            max_occ: max_occ.to_vec(),
            cdim,
            vdim,
            sums,
        })
    }

    fn prefix(&self, i: usize, c: i64, v: i64) -> u128 {
        if c < 0 || v < 0 {
            return 0;
        }
        let c = (c as usize).min(self.cdim - 1);
        let v = (v as usize).min(self.vdim - 1);
        self.sums[i * self.cdim * self.vdim + c * self.vdim + v]
    }

    /// Ways to fill elements `i..n` with cardinality in `[c0, c1]` and variety
    /// in `[v0, v1]`.
    fn count(&self, i: usize, c0: i64, c1: i64, v0: i64, v1: i64) -> u128 {
        let c0 = c0.max(0);
        let v0 = v0.max(0);
        if c0 > c1 || v0 > v1 {
            return 0;
        }
        self.prefix(i, c1, v1)
            .wrapping_add(self.prefix(i, c0 - 1, v0 - 1))
            .wrapping_sub(self.prefix(i, c0 - 1, v1))
            .wrapping_sub(self.prefix(i, c1, v0 - 1))
    }

    /// Number of `y` in the stratum box with `y <_lex x`.
    fn lex_less(&self, x: &[u32], cs: (i64, i64), vs: (i64, i64)) -> u128 {
        let mut total = 0u128;
        let (mut pc, mut pv) = (0i64, 0i64);
        for (k, &xk) in x.iter().enumerate() {
            for o in 0..xk as i64 {
                let dv = (o > 0) as i64;
                total += self.count(
                    k + 1,
                    cs.0 - pc - o,
                    cs.1 - pc - o,
                    vs.0 - pv - dv,
                    vs.1 - pv - dv,
                );
            }
            pc += xk as i64;
            pv += (xk > 0) as i64;
        }
        total
    }

    /// The `k`-th (0-based) vector of the stratum box in lex order.
    fn lex_unrank(&self, mut k: u128, cs: (i64, i64), vs: (i64, i64)) -> Vec<u32> {
        let n = self.max_occ.len();
        let mut out = vec![0u32; n];
        let (mut pc, mut pv) = (0i64, 0i64);
        for i in 0..n {
            for o in 0..=self.max_occ[i] as i64 {
                let dv = (o > 0) as i64;
                let c = self.count(
                    i + 1,
                    cs.0 - pc - o,
                    cs.1 - pc - o,
                    vs.0 - pv - dv,
                    vs.1 - pv - dv,
                );
                if k < c {
                    out[i] = o as u32;
                    pc += o;
                    pv += dv;
                    break;
                }
                k -= c;
            }
        }
        out
    }
}

/// A `(cardinality, variety)` box restricting which values are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountBox {
    pub card: Span,
    pub var: Span,
}

impl CountBox {
    pub fn full(u: &Universe) -> Self {
        CountBox {
            card: Span::new(0, u.max_cardinality()),
            var: Span::new(0, u.len() as u32),
        }
    }

    fn contains(&self, ms: &Multiset) -> bool {
        self.card.contains(ms.cardinality()) && self.var.contains(ms.variety())
    }
}

fn span_i64(s: Span) -> (i64, i64) {
    (s.lo as i64, s.hi as i64)
}

fn view(ord: OrderingId, ms: &Multiset) -> Vec<u32> {
    let mut v = ms.occurrences().to_vec();
    if ord.is_colex() {
        v.reverse();
    }
    v
}

/// Number of values `y ≼_α x` whose cardinality and variety lie in `bx`.
pub fn count_leq(u: &Universe, ord: OrderingId, x: &Multiset, bx: CountBox) -> Result<u128> {
    u.check(x)?;
    let t = u.tables().table(ord.is_colex())?;
    let (c, v) = (x.cardinality() as i64, x.variety() as i64);
    let (cb, vb) = (span_i64(bx.card), span_i64(bx.var));
    let keys = ord.keys();
    // Values in strata strictly before x's stratum.
    let before = match keys {
        [Key::Cardinality] => t.count(0, cb.0, cb.1.min(c - 1), vb.0, vb.1),
        [Key::Variety] => t.count(0, cb.0, cb.1, vb.0, vb.1.min(v - 1)),
        [Key::Cardinality, Key::Variety] => {
            t.count(0, cb.0, cb.1.min(c - 1), vb.0, vb.1)
                + if bx.card.contains(c as u32) {
                    t.count(0, c, c, vb.0, vb.1.min(v - 1))
                } else {
                    0
                }
        }
        _ => {
            t.count(0, cb.0, cb.1, vb.0, vb.1.min(v - 1))
                + if bx.var.contains(v as u32) {
                    t.count(0, cb.0, cb.1.min(c - 1), v, v)
                } else {
                    0
                }
        }
    };
    let within = match stratum_box(ord, c, v, cb, vb) {
        Some((cs, vs)) => t.lex_less(&view(ord, x), cs, vs),
        None => 0,
    };
    Ok(before + within + bx.contains(x) as u128)
}

/// The part of x's stratum inside the count box.
fn stratum_box(
    ord: OrderingId,
    c: i64,
    v: i64,
    cb: (i64, i64),
    vb: (i64, i64),
) -> Option<((i64, i64), (i64, i64))> {
    let mut cs = cb;
    let mut vs = vb;
    for key in ord.keys() {
        match key {
            Key::Cardinality => cs = (cs.0.max(c), cs.1.min(c)),
            Key::Variety => vs = (vs.0.max(v), vs.1.min(v)),
        }
    }
    (cs.0 <= cs.1 && vs.0 <= vs.1).then_some((cs, vs))
}

/// 0-based position of `ms` in the enumeration of `u` under `ord`.
pub fn rank(u: &Universe, ord: OrderingId, ms: &Multiset) -> Result<u128> {
    Ok(count_leq(u, ord, ms, CountBox::full(u))? - 1)
}

/// Inverse of [`rank`].
pub fn unrank(u: &Universe, ord: OrderingId, mut k: u128) -> Result<Multiset> {
    if k >= u.value_count() {
        return usage(format!("rank {k} out of range 0..{}", u.value_count()));
    }
    let t = u.tables().table(ord.is_colex())?;
    let cmax = u.max_cardinality() as i64;
    let vmax = u.len() as i64;
    for (a, b) in strata(ord, cmax, vmax) {
        let (cs, vs) = match ord.keys() {
            [Key::Cardinality] => ((a, a), (0, vmax)),
            [Key::Variety] => ((0, cmax), (a, a)),
            [Key::Cardinality, Key::Variety] => ((a, a), (b, b)),
            _ => ((b, b), (a, a)),
        };
        let size = t.count(0, cs.0, cs.1, vs.0, vs.1);
        if k < size {
            let mut occ = t.lex_unrank(k, cs, vs);
            if ord.is_colex() {
                occ.reverse();
            }
            return Ok(Multiset::from_occurrences(occ));
        }
        k -= size;
    }
    unreachable!("rank below value count always lands in a stratum")
}

/// Stratum keys in ordering sequence, as (first key, second key) pairs.
fn strata(ord: OrderingId, cmax: i64, vmax: i64) -> Vec<(i64, i64)> {
    match ord.keys() {
        [Key::Cardinality] => (0..=cmax).map(|c| (c, 0)).collect(),
        [Key::Variety] => (0..=vmax).map(|v| (v, 0)).collect(),
        [Key::Cardinality, Key::Variety] => (0..=cmax)
            .flat_map(|c| (0..=vmax).map(move |v| (c, v)))
            .collect(),
        _ => (0..=vmax)
            .flat_map(|v| (0..=cmax).map(move |c| (v, c)))
            .collect(),
    }
}

/// Number of values in `⟨lb, ub⟩_α` whose cardinality and variety lie in `bx`.
pub fn count_between(
    u: &Universe,
    ord: OrderingId,
    lb: &Multiset,
    ub: &Multiset,
    bx: CountBox,
) -> Result<u128> {
    if ord.cmp(lb, ub) == std::cmp::Ordering::Greater {
        return Ok(0);
    }
    let hi = count_leq(u, ord, ub, bx)?;
    let lo = count_leq(u, ord, lb, bx)?;
    Ok(hi - lo + bx.contains(lb) as u128)
}
