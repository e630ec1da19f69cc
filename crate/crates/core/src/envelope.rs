//! Occurrence envelopes: per-element occurrence intervals plus cardinality
//! and variety intervals.
//!
//! An [`Envelope`] is the conjunction predicate accepted by the bound seekers
//! (`card ∈ [a,b] ∧ var ∈ [c,d] ∧ occ(i) ∈ [lo_i, hi_i]`), the relaxation the
//! n-ary propagators reason on, and the storage of the subset-bounds
//! baseline domain.

use serde::{Deserialize, Serialize};

use crate::multiset::{Multiset, Universe};

/// Inclusive integer interval. Empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub lo: u32,
    pub hi: u32,
}

impl Span {
    pub const fn new(lo: u32, hi: u32) -> Self {
        Span { lo, hi }
    }

    pub const fn point(v: u32) -> Self {
        Span { lo: v, hi: v }
    }

    pub fn is_empty(self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(self, v: u32) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(self, other: Span) -> Span {
        Span::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn hull(self, other: Span) -> Span {
        Span::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }
}

/// Reachable `(cardinality, variety)` pairs of a group of elements with
/// occurrence intervals.
///
/// For exactly `w` present elements the reachable cardinalities form the
/// interval `[low(w), high(w)]` with `w` ranging over `[forced, forced +
/// optional]`; both ends grow with `w`, so any union over a variety range is
/// again an interval.
#[derive(Debug, Clone)]
pub(crate) struct Achievable {
    forced: i64,
    optional: i64,
    base_lo: i64,
    base_hi: i64,
    /// Prefix sums of optional upper bounds, largest first.
    top: Vec<i64>,
    empty: bool,
}

impl Achievable {
    pub(crate) fn new<'a>(bounds: impl Iterator<Item = (&'a u32, &'a u32)>) -> Self {
        let mut forced = 0;
        let mut base_lo = 0;
        let mut base_hi = 0;
        let mut opt: Vec<i64> = Vec::new();
        let mut empty = false;
        for (&lo, &hi) in bounds {
            if lo > hi {
                empty = true;
            } else if lo > 0 {
                forced += 1;
                base_lo += lo as i64;
                base_hi += hi as i64;
            } else if hi > 0 {
                opt.push(hi as i64);
            }
        }
        opt.sort_unstable_by(|a, b| b.cmp(a));
        let mut top = Vec::with_capacity(opt.len() + 1);
        top.push(0);
        let mut acc = 0;
        for h in &opt {
            acc += h;
            top.push(acc);
        }
        Achievable {
            forced,
            optional: opt.len() as i64,
            base_lo,
            base_hi,
            top,
            empty,
        }
    }

    pub(crate) fn of(lo: &[u32], hi: &[u32]) -> Self {
        Achievable::new(lo.iter().zip(hi))
    }

    fn low(&self, w: i64) -> i64 {
        self.base_lo + (w - self.forced)
    }

    fn high(&self, w: i64) -> i64 {
        self.base_hi + self.top[(w - self.forced) as usize]
    }

    /// Variety values that can be realised inside `[var_lo, var_hi]`.
    fn var_window(&self, var_lo: i64, var_hi: i64) -> Option<(i64, i64)> {
        if self.empty {
            return None;
        }
        let a = var_lo.max(self.forced);
        let b = var_hi.min(self.forced + self.optional);
        (a <= b).then_some((a, b))
    }

    /// Reachable cardinalities when variety is restricted to `[var_lo, var_hi]`.
    pub(crate) fn card_hull(&self, var_lo: i64, var_hi: i64) -> Option<(i64, i64)> {
        let (a, b) = self.var_window(var_lo, var_hi)?;
        Some((self.low(a), self.high(b)))
    }

    /// Whether some member has cardinality in `[c_lo, c_hi]` and variety in
    /// `[v_lo, v_hi]`.
    pub(crate) fn meets(&self, c_lo: i64, c_hi: i64, v_lo: i64, v_hi: i64) -> bool {
        match self.card_hull(v_lo, v_hi) {
            Some((l, h)) => l <= c_hi && h >= c_lo && c_lo <= c_hi,
            None => false,
        }
    }

    /// Tightest spans for cardinality and variety jointly feasible with the
    /// given ones.
    fn tighten_spans(&self, card: Span, var: Span) -> Option<(Span, Span)> {
        let (a, b) = self.var_window(var.lo as i64, var.hi as i64)?;
        let (c_lo, c_hi) = (card.lo as i64, card.hi as i64);
        let mut vmin = None;
        let mut vmax = None;
        let mut cmin = i64::MAX;
        let mut cmax = i64::MIN;
        for w in a..=b {
            let (l, h) = (self.low(w).max(c_lo), self.high(w).min(c_hi));
            if l <= h {
                vmin.get_or_insert(w);
                vmax = Some(w);
                cmin = cmin.min(l);
                cmax = cmax.max(h);
            }
        }
        let (vmin, vmax) = (vmin?, vmax?);
        Some((
            Span::new(cmin as u32, cmax as u32),
            Span::new(vmin as u32, vmax as u32),
        ))
    }
}

/// Conjunction of occurrence, cardinality and variety intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Envelope {
    pub lo: Vec<u32>,
    pub hi: Vec<u32>,
    pub card: Span,
    pub var: Span,
}

/// The bound seekers accept any envelope as their feasibility predicate.
pub type FeasibilityPredicate = Envelope;

impl Envelope {
    /// Everything in the universe.
    pub fn full(u: &Universe) -> Self {
        Envelope {
            lo: vec![0; u.len()],
            hi: u.max_occ().to_vec(),
            card: Span::new(0, u.max_cardinality()),
            var: Span::new(0, u.len() as u32),
        }
    }

    /// The single multiset `ms`.
    pub fn point(ms: &Multiset) -> Self {
        Envelope {
            lo: ms.occurrences().to_vec(),
            hi: ms.occurrences().to_vec(),
            card: Span::point(ms.cardinality()),
            var: Span::point(ms.variety()),
        }
    }

    pub fn with_card(mut self, lo: u32, hi: u32) -> Self {
        self.card = self.card.intersect(Span::new(lo, hi));
        self
    }

    pub fn with_var(mut self, lo: u32, hi: u32) -> Self {
        self.var = self.var.intersect(Span::new(lo, hi));
        self
    }

    /// Restricts `occ(elem)` (1-based) to `[lo, hi]`.
    pub fn with_occ(mut self, elem: usize, lo: u32, hi: u32) -> Self {
        let i = elem - 1;
        self.lo[i] = self.lo[i].max(lo);
        self.hi[i] = self.hi[i].min(hi);
        self
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.card.is_empty() || self.var.is_empty() || self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, ms: &Multiset) -> bool {
        let occ = ms.occurrences();
        occ.len() == self.lo.len()
            && occ.iter().zip(self.lo.iter().zip(&self.hi)).all(|(o, (l, h))| l <= o && o <= h)
            && self.card.contains(ms.cardinality())
            && self.var.contains(ms.variety())
    }

    /// Intersection; `None` when trivially empty.
    pub fn meet(&self, other: &Envelope) -> Option<Envelope> {
        let env = Envelope {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.max(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.min(b)).collect(),
            card: self.card.intersect(other.card),
            var: self.var.intersect(other.var),
        };
        (!env.is_empty()).then_some(env)
    }

    /// Smallest envelope containing both.
    pub fn hull(&self, other: &Envelope) -> Envelope {
        Envelope {
            lo: self.lo.iter().zip(&other.lo).map(|(a, b)| *a.min(b)).collect(),
            hi: self.hi.iter().zip(&other.hi).map(|(a, b)| *a.max(b)).collect(),
            card: self.card.hull(other.card),
            var: self.var.hull(other.var),
        }
    }

    pub fn reversed(&self) -> Envelope {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo.reverse();
        hi.reverse();
        Envelope { lo, hi, card: self.card, var: self.var }
    }

    /// The multiset when every occurrence interval is a point.
    pub fn fixed_value(&self) -> Option<Multiset> {
        (self.lo == self.hi).then(|| Multiset::from_occurrences(self.lo.clone()))
    }

    pub(crate) fn achievable(&self) -> Achievable {
        Achievable::of(&self.lo, &self.hi)
    }

    /// Whether any multiset satisfies every constraint.
    pub fn is_satisfiable(&self) -> bool {
        !self.is_empty()
            && self.achievable().meets(
                self.card.lo as i64,
                self.card.hi as i64,
                self.var.lo as i64,
                self.var.hi as i64,
            )
    }

    /// The exact per-component hull of the member set: every bound is
    /// attained by some multiset satisfying the whole conjunction. `None`
    /// when there is no member.
    pub fn tighten_exact(&self) -> Option<Envelope> {
        if self.is_empty() {
            return None;
        }
        let (card, var) = self.achievable().tighten_spans(self.card, self.var)?;
        let n = self.lo.len();
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        let (c_lo, c_hi) = (card.lo as i64, card.hi as i64);
        let (v_lo, v_hi) = (var.lo as i64, var.hi as i64);
        for i in 0..n {
            let others = Achievable::new(
                self.lo
                    .iter()
                    .zip(&self.hi)
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, b)| b),
            );
            let zero_ok = self.lo[i] == 0 && others.meets(c_lo, c_hi, v_lo, v_hi);
            // Positive occurrences: others' cardinalities (variety shifted by
            // one) form an interval [l, h]; o works iff c_lo-h <= o <= c_hi-l.
            let positive = others.card_hull(v_lo - 1, v_hi - 1).and_then(|(l, h)| {
                let a = (c_lo - h).max(self.lo[i].max(1) as i64);
                let b = (c_hi - l).min(self.hi[i] as i64);
                (a <= b).then_some((a as u32, b as u32))
            });
            match (zero_ok, positive) {
                (true, None) => {
                    lo[i] = 0;
                    hi[i] = 0;
                }
                (true, Some((_, b))) => {
                    lo[i] = 0;
                    hi[i] = b;
                }
                (false, Some((a, b))) => {
                    lo[i] = a;
                    hi[i] = b;
                }
                (false, None) => return None,
            }
        }
        Some(Envelope { lo, hi, card, var })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn members(u: &Universe, env: &Envelope) -> Vec<Multiset> {
        let mut out = vec![u.empty_multiset()];
        for (i, &m) in u.max_occ().iter().enumerate() {
            let mut next = Vec::new();
            for v in &out {
                for o in 0..=m {
                    let mut w = v.clone();
                    w.occurrences_mut()[i] = o;
                    next.push(w);
                }
            }
            out = next;
        }
        out.retain(|m| env.contains(m));
        out
    }

    fn brute_hull(u: &Universe, env: &Envelope) -> Option<Envelope> {
        let ms = members(u, env);
        let first = Envelope::point(ms.first()?);
        Some(ms.iter().skip(1).fold(first, |acc, m| acc.hull(&Envelope::point(m))))
    }

    #[test]
    fn envelope_of_cardinality_three_variety_one() {
        let u = Universe::uniform(3, 3).unwrap();
        let env = Envelope::full(&u).with_card(3, 3).with_var(1, 1);
        let t = env.tighten_exact().unwrap();
        assert_eq!(t.lo, vec![0, 0, 0]);
        assert_eq!(t.hi, vec![3, 3, 3]);
        assert_eq!(t.card, Span::point(3));
        assert_eq!(t.var, Span::point(1));
    }

    #[test]
    fn infeasible_envelopes() {
        let u = Universe::uniform(2, 1).unwrap();
        assert!(Envelope::full(&u).with_card(3, 3).tighten_exact().is_none());
        assert!(Envelope::full(&u).with_card(2, 2).with_var(1, 1).tighten_exact().is_none());
        assert!(!Envelope::full(&u).with_var(3, 3).is_satisfiable());
    }

    fn arb_envelope() -> impl Strategy<Value = (Vec<u32>, Envelope)> {
        prop::collection::vec(0u32..4, 1..5).prop_flat_map(|max| {
            let n = max.len();
            let total: u32 = max.iter().sum();
            let lows = max.iter().map(|&m| 0..=m).collect::<Vec<_>>();
            let highs = max.iter().map(|&m| 0..=m).collect::<Vec<_>>();
            (
                Just(max),
                lows,
                highs,
                0..=total,
                0..=total,
                0..=n as u32,
                0..=n as u32,
            )
                .prop_map(|(max, lo, hi, c1, c2, v1, v2)| {
                    let env = Envelope {
                        lo,
                        hi,
                        card: Span::new(c1.min(c2), c1.max(c2)),
                        var: Span::new(v1.min(v2), v1.max(v2)),
                    };
                    (max, env)
                })
        })
    }

    proptest! {
        #[test]
        fn tighten_exact_is_the_member_hull((max, env) in arb_envelope()) {
            let u = Universe::new(max).unwrap();
            let expect = brute_hull(&u, &env);
            prop_assert_eq!(env.tighten_exact(), expect.clone());
            prop_assert_eq!(env.is_satisfiable(), expect.is_some());
        }
    }
}
