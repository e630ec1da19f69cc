//! Variable domains: α-intervals and the subset-bounds baseline.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::enumerate::Seeker;
use crate::envelope::{Envelope, Span};
use crate::error::{usage, Result};
use crate::multiset::{Multiset, Universe};
use crate::order::{Key, OrderingId};
use crate::rank::rank;

/// A wiped-out domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Failed;

impl fmt::Display for Failed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("failed")
    }
}

pub type Outcome<T> = std::result::Result<T, Failed>;

/// All multisets between `lb` and `ub` under `ord`, bounds included.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlphaInterval {
    pub ord: OrderingId,
    pub lb: Multiset,
    pub ub: Multiset,
}

impl AlphaInterval {
    pub fn new(u: &Universe, ord: OrderingId, lb: Multiset, ub: Multiset) -> Result<Self> {
        u.check(&lb)?;
        u.check(&ub)?;
        if ord.cmp(&lb, &ub) == Ordering::Greater {
            return usage(format!("interval bounds crossed: {lb} > {ub} under {ord}"));
        }
        Ok(AlphaInterval { ord, lb, ub })
    }

    pub fn full(u: &Universe, ord: OrderingId) -> Self {
        AlphaInterval { ord, lb: u.empty_multiset(), ub: u.full_multiset() }
    }

    pub fn point(ord: OrderingId, ms: Multiset) -> Self {
        AlphaInterval { ord, lb: ms.clone(), ub: ms }
    }

    pub fn contains(&self, ms: &Multiset) -> bool {
        ms.len() == self.lb.len()
            && self.ord.cmp(&self.lb, ms) != Ordering::Greater
            && self.ord.cmp(ms, &self.ub) != Ordering::Greater
    }

    pub fn is_bound(&self) -> bool {
        self.lb == self.ub
    }

    /// Number of members.
    pub fn size(&self, u: &Universe) -> u128 {
        let r = |m| rank(u, self.ord, m).expect("interval bounds fit the universe");
        r(&self.ub) - r(&self.lb) + 1
    }

    /// Moves the bounds inward to the proposals; bounds never move outward.
    pub fn tighten(&self, new_lb: Option<&Multiset>, new_ub: Option<&Multiset>) -> Outcome<AlphaInterval> {
        let lb = match new_lb {
            Some(m) => self.ord.max(&self.lb, m).clone(),
            None => self.lb.clone(),
        };
        let ub = match new_ub {
            Some(m) => self.ord.min(&self.ub, m).clone(),
            None => self.ub.clone(),
        };
        if self.ord.cmp(&lb, &ub) == Ordering::Greater {
            return Err(Failed);
        }
        Ok(AlphaInterval { ord: self.ord, lb, ub })
    }

    /// Nearest bounds inside `pred`: the least member `≽ lb` and the greatest
    /// `≼ ub` satisfying it.
    pub fn restrict(&self, u: &Universe, pred: &Envelope) -> Outcome<AlphaInterval> {
        let seeker = Seeker::new(u, self.ord, pred);
        let lb = seeker.least_geq(&self.lb, false).ok_or(Failed)?;
        let ub = seeker.greatest_leq(&self.ub, false).ok_or(Failed)?;
        if self.ord.cmp(&lb, &ub) == Ordering::Greater {
            return Err(Failed);
        }
        Ok(AlphaInterval { ord: self.ord, lb, ub })
    }

    /// Intersection of two intervals under the same ordering.
    pub fn intersect(&self, other: &AlphaInterval) -> Outcome<AlphaInterval> {
        debug_assert_eq!(self.ord, other.ord);
        self.tighten(Some(&other.lb), Some(&other.ub))
    }

    /// The exact per-component hull of the members.
    pub fn envelope(&self, u: &Universe) -> Envelope {
        let colex = self.ord.is_colex();
        let view = |m: &Multiset| {
            let mut v = m.occurrences().to_vec();
            if colex {
                v.reverse();
            }
            v
        };
        let mut max = u.max_occ().to_vec();
        if colex {
            max.reverse();
        }
        let (lb, ub) = (view(&self.lb), view(&self.ub));
        let full = Envelope {
            lo: vec![0; max.len()],
            hi: max.clone(),
            card: Span::new(0, u.max_cardinality()),
            var: Span::new(0, u.len() as u32),
        };
        let keys = self.ord.keys();
        let (a1, b1) = self.ord.stratum(&self.lb);
        let (a2, b2) = self.ord.stratum(&self.ub);
        let window = |a: Span, b: Span| {
            let mut env = full.clone();
            for (key, span) in keys.iter().zip([a, b]) {
                match key {
                    Key::Cardinality => env.card = env.card.intersect(span),
                    Key::Variety => env.var = env.var.intersect(span),
                }
            }
            env
        };
        let any = Span::new(0, u32::MAX);
        let below = |x: u32| if x == 0 { Span::new(1, 0) } else { Span::new(0, x - 1) };
        let above = |x: u32| Span::new(x.saturating_add(1), u32::MAX);
        let mut parts: Vec<(Envelope, Option<&[u32]>, Option<&[u32]>)> = Vec::new();
        if (a1, b1) == (a2, b2) {
            parts.push((window(Span::point(a1), Span::point(b1)), Some(&lb), Some(&ub)));
        } else {
            parts.push((window(Span::point(a1), Span::point(b1)), Some(&lb), None));
            parts.push((window(Span::point(a2), Span::point(b2)), None, Some(&ub)));
            if keys.len() == 1 {
                parts.push((window(Span::new(a1 + 1, a2.saturating_sub(1)), any), None, None));
            } else if a1 == a2 {
                parts.push((window(Span::point(a1), Span::new(b1 + 1, b2.saturating_sub(1))), None, None));
            } else {
                parts.push((window(Span::point(a1), above(b1)), None, None));
                parts.push((window(Span::new(a1 + 1, a2.saturating_sub(1)), any), None, None));
                parts.push((window(Span::point(a2), below(b2)), None, None));
            }
        }
        let mut hull: Option<Envelope> = None;
        for (win, lo, hi) in parts {
            if win.card.is_empty() || win.var.is_empty() {
                continue;
            }
            for (blo, bhi) in lex_range_boxes(&max, lo, hi) {
                let boxed = Envelope { lo: blo, hi: bhi, card: win.card, var: win.var };
                if let Some(t) = boxed.tighten_exact() {
                    hull = Some(match hull {
                        Some(h) => h.hull(&t),
                        None => t,
                    });
                }
            }
        }
        let env = hull.expect("an interval has at least one member");
        if colex {
            env.reversed()
        } else {
            env
        }
    }
}

impl fmt::Display for AlphaInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}; {}>_{}", self.lb, self.ub, self.ord)
    }
}

/// Splits `{x ≤ max : lo ≤lex x ≤lex hi}` into occurrence boxes. A missing
/// bound means unbounded on that side.
fn lex_range_boxes(max: &[u32], lo: Option<&[u32]>, hi: Option<&[u32]>) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(max.len());
    split(max, lo, hi, &mut prefix, &mut out);
    out
}

fn split(
    max: &[u32],
    lo: Option<&[u32]>,
    hi: Option<&[u32]>,
    prefix: &mut Vec<u32>,
    out: &mut Vec<(Vec<u32>, Vec<u32>)>,
) {
    let i = prefix.len();
    let n = max.len();
    let push_box = |prefix: &[u32], at: Option<(u32, u32)>, out: &mut Vec<_>| {
        let mut l = prefix.to_vec();
        let mut h = prefix.to_vec();
        if let Some((a, b)) = at {
            l.push(a);
            h.push(b);
        }
        let k = l.len();
        l.extend(std::iter::repeat_n(0, n - k));
        h.extend_from_slice(&max[k..]);
        out.push((l, h));
    };
    if i == n || (lo.is_none() && hi.is_none()) {
        push_box(prefix, None, out);
        return;
    }
    let l = lo.map_or(0, |v| v[i]);
    let h = hi.map_or(max[i], |v| v[i].min(max[i]));
    if lo.is_some() && hi.is_some() && l == h {
        prefix.push(l);
        split(max, lo, hi, prefix, out);
        prefix.pop();
        return;
    }
    if lo.is_some() && l <= max[i] {
        prefix.push(l);
        split(max, lo, None, prefix, out);
        prefix.pop();
    }
    let a = l + lo.is_some() as u32;
    let b = if hi.is_some() { h.checked_sub(1) } else { Some(h) };
    if let Some(b) = b {
        if a <= b {
            push_box(prefix, Some((a, b)), out);
        }
    }
    if hi.is_some() {
        prefix.push(h);
        split(max, None, hi, prefix, out);
        prefix.pop();
    }
}

/// The α-closure of a nonempty set: its α-least and α-greatest members.
pub fn closure(ord: OrderingId, set: &[Multiset]) -> Result<AlphaInterval> {
    let Some(first) = set.first() else {
        return usage("closure of an empty set");
    };
    let mut lb = first;
    let mut ub = first;
    for m in &set[1..] {
        if m.len() != first.len() {
            return usage("closure over multisets of different lengths");
        }
        lb = ord.min(lb, m);
        ub = ord.max(ub, m);
    }
    Ok(AlphaInterval { ord, lb: lb.clone(), ub: ub.clone() })
}

pub fn interval_size(u: &Universe, dom: &AlphaInterval) -> u128 {
    dom.size(u)
}

/// Whether the closure of `set` adds no values. Duplicates are ignored.
pub fn is_exact(u: &Universe, ord: OrderingId, set: &[Multiset]) -> Result<bool> {
    for m in set {
        u.check(m)?;
    }
    let cl = closure(ord, set)?;
    let distinct: std::collections::HashSet<&Multiset> = set.iter().collect();
    Ok(cl.size(u) == distinct.len() as u128)
}

/// Subset bounds with cardinality and variety reasoning.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsetBoundsCV {
    pub bounds: Envelope,
}

impl SubsetBoundsCV {
    /// Normalised bounds for `env`.
    pub fn new(u: &Universe, env: Envelope) -> Outcome<Self> {
        let mut env = env;
        for (h, m) in env.hi.iter_mut().zip(u.max_occ()) {
            *h = (*h).min(*m);
        }
        let mut sb = SubsetBoundsCV { bounds: env };
        sb.normalize()?;
        Ok(sb)
    }

    pub fn full(u: &Universe) -> Self {
        SubsetBoundsCV::new(u, Envelope::full(u)).expect("the full universe is consistent")
    }

    pub fn contains(&self, ms: &Multiset) -> bool {
        self.bounds.contains(ms)
    }

    pub fn is_bound(&self) -> bool {
        self.bounds.lo == self.bounds.hi
    }

    /// Number of occurrence vectors inside the per-element bounds.
    pub fn box_size(&self) -> u128 {
        self.bounds
            .lo
            .iter()
            .zip(&self.bounds.hi)
            .map(|(l, h)| (h - l + 1) as u128)
            .product()
    }

    /// Applies the cardinality/variety rules until nothing changes.
    pub fn normalize(&mut self) -> Outcome<()> {
        let e = &mut self.bounds;
        loop {
            if e.is_empty() {
                return Err(Failed);
            }
            let before = e.clone();
            let sum_lo: u32 = e.lo.iter().sum();
            let sum_hi: u32 = e.hi.iter().sum();
            let forced = e.lo.iter().filter(|&&l| l > 0).count() as u32;
            let possible = e.hi.iter().filter(|&&h| h > 0).count() as u32;

            e.card = e.card.intersect(Span::new(sum_lo, sum_hi));
            e.var = e.var.intersect(Span::new(forced, possible));
            e.var.hi = e.var.hi.min(e.card.hi);
            e.card.lo = e.card.lo.max(e.var.lo);
            if e.card.is_empty() || e.var.is_empty() {
                return Err(Failed);
            }
            // Each extra distinct element costs at least one occurrence.
            e.card.lo = e.card.lo.max(sum_lo + e.var.lo.saturating_sub(forced));
            e.var.hi = e.var.hi.min(forced + (e.card.hi - sum_lo.min(e.card.hi)));
            if e.card.is_empty() || e.var.is_empty() {
                return Err(Failed);
            }
            for i in 0..e.lo.len() {
                let rest_lo = sum_lo - e.lo[i];
                let rest_hi = sum_hi - e.hi[i];
                e.hi[i] = e.hi[i].min(e.card.hi.saturating_sub(rest_lo));
                e.lo[i] = e.lo[i].max(e.card.lo.saturating_sub(rest_hi));
            }
            if e.var.hi == forced {
                for i in 0..e.lo.len() {
                    if e.lo[i] == 0 {
                        e.hi[i] = 0;
                    }
                }
            }
            if e.var.lo == possible {
                for i in 0..e.lo.len() {
                    if e.hi[i] > 0 {
                        e.lo[i] = e.lo[i].max(1);
                    }
                }
            }
            if *e == before {
                return Ok(());
            }
        }
    }

    pub fn restrict(&self, u: &Universe, pred: &Envelope) -> Outcome<SubsetBoundsCV> {
        let env = self.bounds.meet(pred).ok_or(Failed)?;
        SubsetBoundsCV::new(u, env)
    }
}

/// Sound subset bounds for an interval: the exact hull of its members.
pub fn sb_from_interval(u: &Universe, dom: &AlphaInterval) -> SubsetBoundsCV {
    SubsetBoundsCV { bounds: dom.envelope(u) }
}

/// The tightest `ord`-interval containing every multiset the bounds admit.
pub fn interval_from_sb(u: &Universe, ord: OrderingId, sb: &SubsetBoundsCV) -> Outcome<AlphaInterval> {
    AlphaInterval::full(u, ord).restrict(u, &sb.bounds)
}

/// A variable domain under one of the representations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Interval { dom: AlphaInterval, env: Envelope },
    Bounds(SubsetBoundsCV),
}

impl Domain {
    pub fn interval(u: &Universe, dom: AlphaInterval) -> Domain {
        let env = dom.envelope(u);
        Domain::Interval { dom, env }
    }

    /// Occurrence/cardinality/variety relaxation of the domain.
    pub fn envelope(&self) -> &Envelope {
        match self {
            Domain::Interval { env, .. } => env,
            Domain::Bounds(sb) => &sb.bounds,
        }
    }

    pub fn contains(&self, ms: &Multiset) -> bool {
        match self {
            Domain::Interval { dom, .. } => dom.contains(ms),
            Domain::Bounds(sb) => sb.contains(ms),
        }
    }

    pub fn value(&self) -> Option<Multiset> {
        match self {
            Domain::Interval { dom, .. } => dom.is_bound().then(|| dom.lb.clone()),
            Domain::Bounds(sb) => sb.bounds.fixed_value(),
        }
    }

    pub fn is_bound(&self) -> bool {
        match self {
            Domain::Interval { dom, .. } => dom.is_bound(),
            Domain::Bounds(sb) => sb.is_bound(),
        }
    }

    /// Keeps only values inside `pred` (exactly at the interval endpoints).
    /// `None` when nothing changed.
    pub fn restrict(&self, u: &Universe, pred: &Envelope) -> Outcome<Option<Domain>> {
        match self {
            Domain::Interval { dom, env } => {
                if env.meet(pred).as_ref() == Some(env) {
                    return Ok(None);
                }
                let next = dom.restrict(u, pred)?;
                Ok((next != *dom).then(|| Domain::interval(u, next)))
            }
            Domain::Bounds(sb) => {
                let next = sb.restrict(u, pred)?;
                Ok((next != *sb).then_some(Domain::Bounds(next)))
            }
        }
    }

    /// Domain intersection. `None` when nothing changed.
    pub fn intersect(&self, u: &Universe, other: &Domain) -> Outcome<Option<Domain>> {
        match (self, other) {
            (Domain::Interval { dom: a, .. }, Domain::Interval { dom: b, .. }) if a.ord == b.ord => {
                let next = a.intersect(b)?;
                Ok((next != *a).then(|| Domain::interval(u, next)))
            }
            _ => self.restrict(u, other.envelope()),
        }
    }
}
