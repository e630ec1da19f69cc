//! Ordered enumeration, successor/predecessor and bound seeking.
//!
//! All searches run on a lex *view* of the occurrence vector (reversed for
//! the colex orderings). A search walks the strata of the ordering in
//! sequence; inside a stratum it builds the lex-least (or lex-greatest)
//! vector meeting the occurrence bounds, checking suffix feasibility in O(1)
//! against the reachable `(cardinality, variety)` set of the remaining
//! elements.

use crate::envelope::{Achievable, Envelope};
use crate::error::{Error, Result};
use crate::multiset::{Multiset, Universe};
use crate::order::{Key, OrderingId};

/// Default limit on the number of values an enumeration may produce.
pub const DEFAULT_VALUE_CAP: u128 = 10_000_000;

/// Enumeration guard: `MSETLEX_VALUE_CAP` when set, else [`DEFAULT_VALUE_CAP`].
pub fn value_cap() -> u128 {
    std::env::var("MSETLEX_VALUE_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_VALUE_CAP)
}

pub(crate) fn check_cap(u: &Universe, cap: u128) -> Result<()> {
    if u.value_count() > cap {
        return Err(Error::Resource(format!(
            "universe has {} values, above the enumeration cap {cap}",
            u.value_count()
        )));
    }
    Ok(())
}

/// Occurrence bounds in view order with suffix reachability.
struct LexRegion {
    lo: Vec<u32>,
    hi: Vec<u32>,
    /// `suffix[i]` summarises elements `i..n`.
    suffix: Vec<Achievable>,
}

/// A cardinality/variety window, in signed arithmetic.
#[derive(Clone, Copy)]
struct Window {
    c0: i64,
    c1: i64,
    v0: i64,
    v1: i64,
}

impl Window {
    fn shifted(self, dc: i64, dv: i64) -> Window {
        Window {
            c0: self.c0 - dc,
            c1: self.c1 - dc,
            v0: self.v0 - dv,
            v1: self.v1 - dv,
        }
    }

    fn is_empty(self) -> bool {
        self.c0 > self.c1 || self.v0 > self.v1 || self.c1 < 0 || self.v1 < 0
    }

    fn contains(self, c: i64, v: i64) -> bool {
        self.c0 <= c && c <= self.c1 && self.v0 <= v && v <= self.v1
    }
}

impl LexRegion {
    fn new(lo: Vec<u32>, hi: Vec<u32>) -> Self {
        let n = lo.len();
        let suffix = (0..=n).map(|i| Achievable::of(&lo[i..], &hi[i..])).collect();
        LexRegion { lo, hi, suffix }
    }

    fn n(&self) -> usize {
        self.lo.len()
    }

    fn fits(&self, i: usize, o: u32) -> bool {
        self.lo[i] <= o && o <= self.hi[i]
    }

    fn suffix_meets(&self, i: usize, w: Window) -> bool {
        !w.is_empty() && self.suffix[i].meets(w.c0, w.c1, w.v0, w.v1)
    }

    /// Fills `out[start..]` with the lex-least (`ascending`) or lex-greatest
    /// completion. Caller guarantees feasibility.
    fn complete(&self, out: &mut [u32], start: usize, mut w: Window, ascending: bool) {
        for j in start..self.n() {
            let pick = |o: u32| {
                let next = w.shifted(o as i64, (o > 0) as i64);
                self.suffix_meets(j + 1, next).then_some(next)
            };
            let found = if ascending {
                (self.lo[j]..=self.hi[j]).find_map(|o| pick(o).map(|nw| (o, nw)))
            } else {
                (self.lo[j]..=self.hi[j]).rev().find_map(|o| pick(o).map(|nw| (o, nw)))
            };
            let (o, nw) = found.expect("completion is feasible");
            out[j] = o;
            w = nw;
        }
    }

    fn extreme(&self, w: Window, ascending: bool) -> Option<Vec<u32>> {
        if !self.suffix_meets(0, w) {
            return None;
        }
        let mut out = vec![0; self.n()];
        self.complete(&mut out, 0, w, ascending);
        Some(out)
    }

    /// Lex-least vector `≥ x` (or `> x` when strict) inside the window.
    fn least_geq(&self, x: &[u32], w: Window, strict: bool) -> Option<Vec<u32>> {
        self.beyond(x, w, strict, true)
    }

    /// Lex-greatest vector `≤ x` (or `< x`) inside the window.
    fn greatest_leq(&self, x: &[u32], w: Window, strict: bool) -> Option<Vec<u32>> {
        self.beyond(x, w, strict, false)
    }

    fn beyond(&self, x: &[u32], w: Window, strict: bool, up: bool) -> Option<Vec<u32>> {
        if w.is_empty() {
            return None;
        }
        let n = self.n();
        // prefix[k] = window left for elements k.. after copying x[..k].
        let mut prefix = Vec::with_capacity(n + 1);
        let mut cur = w;
        let mut valid = 0;
        prefix.push(cur);
        for k in 0..n {
            if !self.fits(k, x[k]) {
                break;
            }
            cur = cur.shifted(x[k] as i64, (x[k] > 0) as i64);
            prefix.push(cur);
            valid = k + 1;
        }
        if !strict && valid == n && cur.contains(0, 0) {
            return Some(x.to_vec());
        }
        for k in (0..n.min(valid + 1)).rev() {
            let base = prefix[k];
            let candidates: Box<dyn Iterator<Item = u32>> = if up {
                Box::new(x[k].saturating_add(1).max(self.lo[k])..=self.hi[k])
            } else if x[k] == 0 {
                continue;
            } else {
                Box::new((self.lo[k]..=(x[k] - 1).min(self.hi[k])).rev())
            };
            for o in candidates {
                let next = base.shifted(o as i64, (o > 0) as i64);
                if self.suffix_meets(k + 1, next) {
                    let mut out = x.to_vec();
                    out[k] = o;
                    self.complete(&mut out, k + 1, next, up);
                    return Some(out);
                }
            }
        }
        None
    }
}

/// Bound seeker for one ordering and feasibility predicate.
pub struct Seeker {
    ord: OrderingId,
    region: LexRegion,
    pred: Window,
    cmax: i64,
    vmax: i64,
}

impl Seeker {
    pub fn new(u: &Universe, ord: OrderingId, pred: &Envelope) -> Self {
        let mut lo = pred.lo.clone();
        let mut hi: Vec<u32> = pred.hi.iter().zip(u.max_occ()).map(|(h, m)| *h.min(m)).collect();
        if ord.is_colex() {
            lo.reverse();
            hi.reverse();
        }
        Seeker {
            ord,
            region: LexRegion::new(lo, hi),
            pred: Window {
                c0: pred.card.lo as i64,
                c1: pred.card.hi as i64,
                v0: pred.var.lo as i64,
                v1: pred.var.hi as i64,
            },
            cmax: u.max_cardinality() as i64,
            vmax: u.len() as i64,
        }
    }

    fn to_view(&self, ms: &Multiset) -> Vec<u32> {
        let mut v = ms.occurrences().to_vec();
        if self.ord.is_colex() {
            v.reverse();
        }
        v
    }

    fn to_multiset(&self, mut v: Vec<u32>) -> Multiset {
        if self.ord.is_colex() {
            v.reverse();
        }
        Multiset::from_occurrences(v)
    }

    /// Window of the stratum with keys `(a, b)` intersected with the predicate.
    fn stratum_window(&self, a: i64, b: i64) -> Window {
        let mut w = self.pred;
        let keys = self.ord.keys();
        for (key, val) in keys.iter().zip([a, b]) {
            match key {
                Key::Cardinality => {
                    w.c0 = w.c0.max(val);
                    w.c1 = w.c1.min(val);
                }
                Key::Variety => {
                    w.v0 = w.v0.max(val);
                    w.v1 = w.v1.min(val);
                }
            }
        }
        w
    }

    fn key_range(&self, key: Key) -> (i64, i64) {
        match key {
            Key::Cardinality => (self.pred.c0.max(0), self.pred.c1.min(self.cmax)),
            Key::Variety => (self.pred.v0.max(0), self.pred.v1.min(self.vmax)),
        }
    }

    /// Strata strictly after (`up`) or before the stratum `(a, b)`, nearest first.
    fn strata_from(&self, a: i64, b: i64, up: bool) -> Vec<(i64, i64)> {
        let keys = self.ord.keys();
        let (a_lo, a_hi) = self.key_range(keys[0]);
        if keys.len() == 1 {
            let single: Vec<i64> = if up {
                ((a + 1).max(a_lo)..=a_hi).collect()
            } else {
                (a_lo..=(a - 1).min(a_hi)).rev().collect()
            };
            return single.into_iter().map(|x| (x, 0)).collect();
        }
        let mut out = Vec::new();
        let (b_lo, b_hi) = self.key_range(keys[1]);
        if up {
            if (a_lo..=a_hi).contains(&a) {
                out.extend(((b + 1).max(b_lo)..=b_hi).map(|y| (a, y)));
            }
            for x in (a + 1).max(a_lo)..=a_hi {
                out.extend((b_lo..=b_hi).map(|y| (x, y)));
            }
        } else {
            if (a_lo..=a_hi).contains(&a) {
                out.extend((b_lo..=(b - 1).min(b_hi)).rev().map(|y| (a, y)));
            }
            for x in (a_lo..=(a - 1).min(a_hi)).rev() {
                out.extend((b_lo..=b_hi).rev().map(|y| (x, y)));
            }
        }
        out
    }

    fn seek(&self, from: &Multiset, strict: bool, up: bool) -> Option<Multiset> {
        let (a, b) = self.ord.stratum(from);
        let (a, b) = (a as i64, b as i64);
        let x = self.to_view(from);
        let w = self.stratum_window(a, b);
        let hit = if up {
            self.region.least_geq(&x, w, strict)
        } else {
            self.region.greatest_leq(&x, w, strict)
        };
        if let Some(v) = hit {
            return Some(self.to_multiset(v));
        }
        for (sa, sb) in self.strata_from(a, b, up) {
            if let Some(v) = self.region.extreme(self.stratum_window(sa, sb), up) {
                return Some(self.to_multiset(v));
            }
        }
        None
    }

    /// α-least member `≽ lb` (strictly `≻` when `strict`).
    pub fn least_geq(&self, lb: &Multiset, strict: bool) -> Option<Multiset> {
        self.seek(lb, strict, true)
    }

    /// α-greatest member `≼ ub` (strictly `≺` when `strict`).
    pub fn greatest_leq(&self, ub: &Multiset, strict: bool) -> Option<Multiset> {
        self.seek(ub, strict, false)
    }

    /// α-least member overall.
    pub fn least(&self) -> Option<Multiset> {
        let empty = Multiset::empty(self.region.n());
        self.least_geq(&empty, false)
    }

    /// α-greatest member overall.
    pub fn greatest(&self) -> Option<Multiset> {
        let top = self.to_multiset(self.region.hi.clone());
        let top_occ = top.occurrences().to_vec();
        // The per-element upper bounds form the α-maximum of the box they span.
        self.greatest_leq(&Multiset::from_occurrences(top_occ), false)
    }
}

/// α-least multiset `≽ lb` satisfying `pred`.
pub fn seek_least_geq(
    u: &Universe,
    ord: OrderingId,
    lb: &Multiset,
    pred: &Envelope,
) -> Result<Option<Multiset>> {
    u.check(lb)?;
    Ok(Seeker::new(u, ord, pred).least_geq(lb, false))
}

/// α-greatest multiset `≼ ub` satisfying `pred`.
pub fn seek_greatest_leq(
    u: &Universe,
    ord: OrderingId,
    ub: &Multiset,
    pred: &Envelope,
) -> Result<Option<Multiset>> {
    u.check(ub)?;
    Ok(Seeker::new(u, ord, pred).greatest_leq(ub, false))
}

/// The next value after `ms` in the ordering; `None` at the maximum `U`.
pub fn successor(u: &Universe, ord: OrderingId, ms: &Multiset) -> Result<Option<Multiset>> {
    u.check(ms)?;
    Ok(Seeker::new(u, ord, &Envelope::full(u)).least_geq(ms, true))
}

/// The value before `ms`; `None` at `∅`.
pub fn predecessor(u: &Universe, ord: OrderingId, ms: &Multiset) -> Result<Option<Multiset>> {
    u.check(ms)?;
    Ok(Seeker::new(u, ord, &Envelope::full(u)).greatest_leq(ms, true))
}

/// Every sub-multiset of `u` in increasing α order.
pub fn enumerate(u: &Universe, ord: OrderingId) -> Result<Enumeration> {
    enumerate_capped(u, ord, value_cap())
}

pub fn enumerate_capped(u: &Universe, ord: OrderingId, cap: u128) -> Result<Enumeration> {
    check_cap(u, cap)?;
    Ok(Enumeration {
        seeker: Seeker::new(u, ord, &Envelope::full(u)),
        next: Some(u.empty_multiset()),
    })
}

/// Iterator returned by [`enumerate`].
pub struct Enumeration {
    seeker: Seeker,
    next: Option<Multiset>,
}

impl Iterator for Enumeration {
    type Item = Multiset;

    fn next(&mut self) -> Option<Multiset> {
        let cur = self.next.take()?;
        self.next = self.seeker.least_geq(&cur, true);
        Some(cur)
    }
}
