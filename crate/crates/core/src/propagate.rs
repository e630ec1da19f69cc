//! Bounds propagators over multiset variables and the fixpoint engine.
//!
//! Filtering works on each domain's occurrence envelope with interval
//! arithmetic, then moves interval bounds to the nearest values inside the
//! filtered envelope. Sound, deliberately incomplete.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::domain::{AlphaInterval, Domain, Failed, Outcome};
use crate::envelope::{Envelope, Span};
use crate::multiset::{Multiset, Universe};

pub type Var = usize;

/// A constraint over store variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Propagator {
    /// `x` lies inside `env`.
    Within { x: Var, env: Envelope },
    /// `|x| ∈ [lo, hi]`
    Cardinality { x: Var, lo: u32, hi: u32 },
    /// `‖x‖ ∈ [lo, hi]`
    Variety { x: Var, lo: u32, hi: u32 },
    /// `x ∩ y = z`
    Intersection { x: Var, y: Var, z: Var },
    /// `x ⊎ y = z`
    UnionPlus { x: Var, y: Var, z: Var },
    /// `|x ∩ y| ≤ limit`
    IntersectCardAtMost { x: Var, y: Var, limit: u32 },
    /// `x ≼ y`: the domain ordering for intervals, lex on occurrence vectors
    /// for subset bounds.
    AlphaLess { x: Var, y: Var },
    /// `Σ‖x‖ ≥` the store bound.
    VarietySumAtLeast { vars: Vec<Var> },
    /// Repeat meetings between distinct elements over `groups` `≤` the store
    /// bound.
    MeetingCostAtMost { groups: Vec<Var> },
}

impl Propagator {
    pub fn scope(&self) -> Vec<Var> {
        match self {
            Propagator::Within { x, .. } | Propagator::Cardinality { x, .. } | Propagator::Variety { x, .. } => {
                vec![*x]
            }
            Propagator::Intersection { x, y, z } | Propagator::UnionPlus { x, y, z } => vec![*x, *y, *z],
            Propagator::IntersectCardAtMost { x, y, .. } | Propagator::AlphaLess { x, y } => vec![*x, *y],
            Propagator::VarietySumAtLeast { vars } => vars.clone(),
            Propagator::MeetingCostAtMost { groups } => groups.clone(),
        }
    }

    /// Whether every variable being bound to the given values satisfies the
    /// constraint. Objective constraints compare against `bound`.
    pub fn check(&self, values: &[Multiset], bound: Option<i64>) -> bool {
        let v = |i: &Var| &values[*i];
        match self {
            Propagator::Within { x, env } => env.contains(v(x)),
            Propagator::Cardinality { x, lo, hi } => Span::new(*lo, *hi).contains(v(x).cardinality()),
            Propagator::Variety { x, lo, hi } => Span::new(*lo, *hi).contains(v(x).variety()),
            Propagator::Intersection { x, y, z } => v(x).intersect(v(y)).ok().as_ref() == Some(v(z)),
            Propagator::UnionPlus { x, y, z } => v(x).unionplus(v(y)).ok().as_ref() == Some(v(z)),
            Propagator::IntersectCardAtMost { x, y, limit } => {
                v(x).intersect(v(y)).is_ok_and(|m| m.cardinality() <= *limit)
            }
            Propagator::AlphaLess { .. } => true,
            Propagator::VarietySumAtLeast { vars } => {
                let sum: i64 = vars.iter().map(|i| v(i).variety() as i64).sum();
                bound.is_none_or(|b| sum >= b)
            }
            Propagator::MeetingCostAtMost { groups } => {
                let vals: Vec<Multiset> = groups.iter().map(|i| v(i).clone()).collect();
                bound.is_none_or(|b| meeting_cost(&vals) as i64 <= b)
            }
        }
    }
}

/// `Σ over element pairs of max(0, meetings − 1)`, where two distinct
/// elements meet in a group when both occur in it.
pub fn meeting_cost(groups: &[Multiset]) -> u64 {
    let Some(first) = groups.first() else {
        return 0;
    };
    let n = first.len();
    let mut cost = 0;
    for a in 0..n {
        for b in a + 1..n {
            let meets = groups
                .iter()
                .filter(|g| g.occurrences()[a] > 0 && g.occurrences()[b] > 0)
                .count() as u64;
            cost += meets.saturating_sub(1);
        }
    }
    cost
}

/// Variable domains plus the objective bound used by branch-and-bound.
#[derive(Debug, Clone)]
pub struct Store {
    pub universe: Universe,
    pub domains: Vec<Domain>,
    pub bound: Option<i64>,
}

impl Store {
    pub fn new(universe: Universe, domains: Vec<Domain>) -> Self {
        Store { universe, domains, bound: None }
    }

    fn env(&self, v: Var) -> &Envelope {
        self.domains[v].envelope()
    }

    /// Values when every variable is bound.
    pub fn assignment(&self) -> Option<Vec<Multiset>> {
        self.domains.iter().map(Domain::value).collect()
    }
}

/// Records domain updates made by one propagator run.
struct Changes<'a> {
    store: &'a mut Store,
    touched: Vec<(Var, Domain)>,
}

impl<'a> Changes<'a> {
    fn restrict(&mut self, v: Var, pred: &Envelope) -> Outcome<()> {
        let next = self.store.domains[v].restrict(&self.store.universe, pred)?;
        self.set(v, next);
        Ok(())
    }

    fn intersect(&mut self, v: Var, other: Var) -> Outcome<()> {
        let other = self.store.domains[other].clone();
        let next = self.store.domains[v].intersect(&self.store.universe, &other)?;
        self.set(v, next);
        Ok(())
    }

    fn set(&mut self, v: Var, next: Option<Domain>) {
        if let Some(d) = next {
            let old = std::mem::replace(&mut self.store.domains[v], d);
            self.touched.push((v, old));
        }
    }
}

fn spans(lo: &[u32], hi: &[u32]) -> Vec<(i64, i64)> {
    lo.iter().zip(hi).map(|(&l, &h)| (l as i64, h as i64)).collect()
}

fn to_env(occ: &[(i64, i64)], card: (i64, i64), var: (i64, i64)) -> Outcome<Envelope> {
    let clamp = |x: i64| x.clamp(0, u32::MAX as i64) as u32;
    if occ.iter().any(|&(l, h)| l > h || h < 0) || card.0 > card.1 || var.0 > var.1 || card.1 < 0 || var.1 < 0 {
        return Err(Failed);
    }
    Ok(Envelope {
        lo: occ.iter().map(|&(l, _)| clamp(l)).collect(),
        hi: occ.iter().map(|&(_, h)| clamp(h)).collect(),
        card: Span::new(clamp(card.0), clamp(card.1)),
        var: Span::new(clamp(var.0), clamp(var.1)),
    })
}

fn sp(s: Span) -> (i64, i64) {
    (s.lo as i64, s.hi as i64)
}

fn cap(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    (a.0.max(b.0), a.1.min(b.1))
}

impl Propagator {
    /// Runs once; returns the variables whose domains changed.
    pub fn propagate(&self, store: &mut Store) -> Outcome<Vec<Var>> {
        let mut ch = Changes { store, touched: Vec::new() };
        let result = self.run(&mut ch);
        let touched: Vec<Var> = ch.touched.iter().map(|(v, _)| *v).collect();
        result.map(|_| touched)
    }

    fn run(&self, ch: &mut Changes<'_>) -> Outcome<()> {
        let u = ch.store.universe.clone();
        match self {
            Propagator::Within { x, env } => ch.restrict(*x, env),
            Propagator::Cardinality { x, lo, hi } => ch.restrict(*x, &Envelope::full(&u).with_card(*lo, *hi)),
            Propagator::Variety { x, lo, hi } => ch.restrict(*x, &Envelope::full(&u).with_var(*lo, *hi)),
            Propagator::Intersection { x, y, z } => intersection(ch, *x, *y, *z),
            Propagator::UnionPlus { x, y, z } => unionplus(ch, *x, *y, *z),
            Propagator::IntersectCardAtMost { x, y, limit } => intersect_card_at_most(ch, *x, *y, *limit),
            Propagator::AlphaLess { x, y } => alpha_less(ch, *x, *y),
            Propagator::VarietySumAtLeast { vars } => variety_sum(ch, vars),
            Propagator::MeetingCostAtMost { groups } => meeting_cost_at_most(ch, groups),
        }
    }
}

fn intersection(ch: &mut Changes<'_>, x: Var, y: Var, z: Var) -> Outcome<()> {
    for _ in 0..2 {
        let (ex, ey, ez) = (ch.store.env(x).clone(), ch.store.env(y).clone(), ch.store.env(z).clone());
        let (ox, oy, oz) = (spans(&ex.lo, &ex.hi), spans(&ey.lo, &ey.hi), spans(&ez.lo, &ez.hi));
        let n = ox.len();
        let (mut nx, mut ny, mut nz) = (ox.clone(), oy.clone(), oz.clone());
        for i in 0..n {
            nz[i].0 = nz[i].0.max(ox[i].0.min(oy[i].0));
            nz[i].1 = nz[i].1.min(ox[i].1.min(oy[i].1));
            nx[i].0 = nx[i].0.max(nz[i].0);
            ny[i].0 = ny[i].0.max(nz[i].0);
            // Whichever side is certainly above z must not be the minimum.
            if ny[i].0 > nz[i].1 {
                nx[i].1 = nx[i].1.min(nz[i].1);
            }
            if nx[i].0 > nz[i].1 {
                ny[i].1 = ny[i].1.min(nz[i].1);
            }
        }
        let (cx, cy, cz) = (sp(ex.card), sp(ey.card), sp(ez.card));
        let (vx, vy, vz) = (sp(ex.var), sp(ey.var), sp(ez.var));
        let cz2 = (cz.0, cz.1.min(cx.1).min(cy.1));
        let cx2 = (cx.0.max(cz.0), cx.1);
        let cy2 = (cy.0.max(cz.0), cy.1);
        let vz2 = (vz.0, vz.1.min(vx.1).min(vy.1));
        let vx2 = (vx.0.max(vz.0), vx.1);
        let vy2 = (vy.0.max(vz.0), vy.1);
        ch.restrict(x, &to_env(&nx, cx2, vx2)?)?;
        ch.restrict(y, &to_env(&ny, cy2, vy2)?)?;
        ch.restrict(z, &to_env(&nz, cz2, vz2)?)?;
        // z ⊆ x with |z| ≥ |x| forces x = z.
        let mut again = false;
        for w in [x, y] {
            let (cw, czn) = (ch.store.env(w).card, ch.store.env(z).card);
            if czn.lo >= cw.hi {
                let before = ch.touched.len();
                ch.intersect(w, z)?;
                ch.intersect(z, w)?;
                again |= ch.touched.len() > before;
            }
        }
        if !again {
            break;
        }
    }
    Ok(())
}

fn unionplus(ch: &mut Changes<'_>, x: Var, y: Var, z: Var) -> Outcome<()> {
    let (ex, ey, ez) = (ch.store.env(x).clone(), ch.store.env(y).clone(), ch.store.env(z).clone());
    let (ox, oy, oz) = (spans(&ex.lo, &ex.hi), spans(&ey.lo, &ey.hi), spans(&ez.lo, &ez.hi));
    let n = ox.len();
    let (mut nx, mut ny, mut nz) = (ox.clone(), oy.clone(), oz.clone());
    for i in 0..n {
        nz[i] = cap(oz[i], (ox[i].0 + oy[i].0, ox[i].1 + oy[i].1));
        nx[i] = cap(ox[i], (nz[i].0 - oy[i].1, nz[i].1 - oy[i].0));
        ny[i] = cap(oy[i], (nz[i].0 - nx[i].1, nz[i].1 - nx[i].0));
    }
    let (cx, cy, cz) = (sp(ex.card), sp(ey.card), sp(ez.card));
    let cz2 = cap(cz, (cx.0 + cy.0, cx.1 + cy.1));
    let cx2 = cap(cx, (cz2.0 - cy.1, cz2.1 - cy.0));
    let cy2 = cap(cy, (cz2.0 - cx2.1, cz2.1 - cx2.0));
    let (vx, vy, vz) = (sp(ex.var), sp(ey.var), sp(ez.var));
    let vz2 = cap(vz, (vx.0.max(vy.0), vx.1 + vy.1));
    let vx2 = cap(vx, (vz2.0 - vy.1, vz2.1));
    let vy2 = cap(vy, (vz2.0 - vx2.1, vz2.1));
    ch.restrict(z, &to_env(&nz, cz2, vz2)?)?;
    ch.restrict(x, &to_env(&nx, cx2, vx2)?)?;
    ch.restrict(y, &to_env(&ny, cy2, vy2)?)?;
    Ok(())
}

fn intersect_card_at_most(ch: &mut Changes<'_>, x: Var, y: Var, limit: u32) -> Outcome<()> {
    let (ex, ey) = (ch.store.env(x).clone(), ch.store.env(y).clone());
    let mins: Vec<u32> = ex.lo.iter().zip(&ey.lo).map(|(a, b)| *a.min(b)).collect();
    let forced: u32 = mins.iter().sum();
    if forced > limit {
        return Err(Failed);
    }
    // Distinct elements shared by x and y number at least
    // ‖x‖ + ‖y‖ − |support(x) ∪ support(y)|, each adding one to the overlap.
    let union = ex.hi.iter().zip(&ey.hi).filter(|(a, b)| **a > 0 || **b > 0).count() as u32;
    if ex.var.lo + ey.var.lo > limit + union {
        return Err(Failed);
    }
    let mut nx = ex.clone();
    let mut ny = ey.clone();
    nx.var.hi = nx.var.hi.min(limit + union - ey.var.lo);
    ny.var.hi = ny.var.hi.min(limit + union - ex.var.lo);
    for i in 0..mins.len() {
        let r = limit - (forced - mins[i]);
        if ex.lo[i] > r {
            ny.hi[i] = ny.hi[i].min(r);
        }
        if ey.lo[i] > r {
            nx.hi[i] = nx.hi[i].min(r);
        }
    }
    ch.restrict(x, &nx)?;
    ch.restrict(y, &ny)?;
    // An interval endpoint is unsupported when every multiset the partner's
    // envelope admits overlaps it by more than the limit.
    for (a, b) in [(x, y), (y, x)] {
        let partner = ch.store.env(b).clone();
        endpoint_skip(ch, a, |m| min_overlap(m, &partner).is_none_or(|o| o > limit))?;
    }
    Ok(())
}

/// Least `|m ∩ y|` over multisets `y` inside `env`; `None` when `env` has
/// no member.
pub(crate) fn min_overlap(m: &Multiset, env: &Envelope) -> Option<u32> {
    const INF: u32 = u32::MAX;
    let (cmax, vmax) = (env.card.hi as usize, env.var.hi as usize);
    // best[c][v]: least overlap with cardinality c and variety v so far.
    let mut best = vec![vec![INF; vmax + 1]; cmax + 1];
    best[0][0] = 0;
    for (i, &mi) in m.occurrences().iter().enumerate() {
        let mut next = vec![vec![INF; vmax + 1]; cmax + 1];
        for c in 0..=cmax {
            for v in 0..=vmax {
                let cur = best[c][v];
                if cur == INF {
                    continue;
                }
                for o in env.lo[i]..=env.hi[i] {
                    let (nc, nv) = (c + o as usize, v + (o > 0) as usize);
                    if nc > cmax || nv > vmax {
                        break;
                    }
                    let cost = cur + mi.min(o);
                    if cost < next[nc][nv] {
                        next[nc][nv] = cost;
                    }
                }
            }
        }
        best = next;
    }
    let mut out = INF;
    for c in env.card.lo as usize..=cmax {
        for v in env.var.lo as usize..=vmax {
            out = out.min(best[c][v]);
        }
    }
    (out != INF).then_some(out)
}

const ENDPOINT_STEPS: usize = 16;

/// Moves interval endpoints of `v` past values rejected by `bad`, a few steps
/// at a time.
fn endpoint_skip(ch: &mut Changes<'_>, v: Var, bad: impl Fn(&Multiset) -> bool) -> Outcome<()> {
    let Domain::Interval { dom, env } = &ch.store.domains[v] else {
        return Ok(());
    };
    let u = ch.store.universe.clone();
    let seeker = crate::enumerate::Seeker::new(&u, dom.ord, env);
    let mut lb = dom.lb.clone();
    let mut ub = dom.ub.clone();
    for _ in 0..ENDPOINT_STEPS {
        if !bad(&lb) {
            break;
        }
        lb = seeker.least_geq(&lb, true).ok_or(Failed)?;
        if dom.ord.cmp(&lb, &ub).is_gt() {
            return Err(Failed);
        }
    }
    for _ in 0..ENDPOINT_STEPS {
        if !bad(&ub) {
            break;
        }
        ub = seeker.greatest_leq(&ub, true).ok_or(Failed)?;
        if dom.ord.cmp(&lb, &ub).is_gt() {
            return Err(Failed);
        }
    }
    if lb != dom.lb || ub != dom.ub {
        let next = AlphaInterval { ord: dom.ord, lb, ub };
        let d = Domain::interval(&u, next);
        ch.set(v, Some(d));
    }
    Ok(())
}

fn alpha_less(ch: &mut Changes<'_>, x: Var, y: Var) -> Outcome<()> {
    let u = ch.store.universe.clone();
    match (&ch.store.domains[x], &ch.store.domains[y]) {
        (Domain::Interval { dom: dx, .. }, Domain::Interval { dom: dy, .. }) => {
            let nx = dx.tighten(None, Some(&dy.ub))?;
            let ny = dy.tighten(Some(&dx.lb), None)?;
            let (cx, cy) = (nx != *dx, ny != *dy);
            if cx {
                ch.set(x, Some(Domain::interval(&u, nx)));
            }
            if cy {
                ch.set(y, Some(Domain::interval(&u, ny)));
            }
            Ok(())
        }
        _ => lex_leq(ch, x, y),
    }
}

/// `x ≤lex y` on occurrence vectors, pruning at the first undecided position.
fn lex_leq(ch: &mut Changes<'_>, x: Var, y: Var) -> Outcome<()> {
    let (ex, ey) = (ch.store.env(x).clone(), ch.store.env(y).clone());
    for i in 0..ex.lo.len() {
        let fixed_equal = ex.lo[i] == ex.hi[i] && ey.lo[i] == ey.hi[i] && ex.lo[i] == ey.lo[i];
        if fixed_equal {
            continue;
        }
        if ex.hi[i] < ey.lo[i] {
            return Ok(());
        }
        let mut nx = ex.clone();
        let mut ny = ey.clone();
        nx.hi[i] = nx.hi[i].min(ey.hi[i]);
        ny.lo[i] = ny.lo[i].max(ex.lo[i]);
        ch.restrict(x, &nx)?;
        ch.restrict(y, &ny)?;
        return Ok(());
    }
    Ok(())
}

fn variety_sum(ch: &mut Changes<'_>, vars: &[Var]) -> Outcome<()> {
    let Some(bound) = ch.store.bound else {
        return Ok(());
    };
    let his: Vec<i64> = vars.iter().map(|&v| ch.store.env(v).var.hi as i64).collect();
    let total: i64 = his.iter().sum();
    if total < bound {
        return Err(Failed);
    }
    let u = ch.store.universe.clone();
    for (k, &v) in vars.iter().enumerate() {
        let need = bound - (total - his[k]);
        if need > ch.store.env(v).var.lo as i64 {
            ch.restrict(v, &Envelope::full(&u).with_var(need as u32, u.len() as u32))?;
        }
    }
    Ok(())
}

fn meeting_cost_at_most(ch: &mut Changes<'_>, groups: &[Var]) -> Outcome<()> {
    let Some(bound) = ch.store.bound else {
        return Ok(());
    };
    let u = ch.store.universe.clone();
    let n = u.len();
    let mut definite = vec![vec![0i64; n]; n];
    for &g in groups {
        let e = ch.store.env(g);
        let present: Vec<usize> = (0..n).filter(|&i| e.lo[i] > 0).collect();
        for (k, &a) in present.iter().enumerate() {
            for &b in &present[k + 1..] {
                definite[a][b] += 1;
                definite[b][a] += 1;
            }
        }
    }
    let mut lower = 0;
    for a in 0..n {
        for b in a + 1..n {
            lower += (definite[a][b] - 1).max(0);
        }
    }
    if lower > bound {
        return Err(Failed);
    }
    if lower < bound {
        return Ok(());
    }
    // At the bound: no further repeat meeting may be created.
    for &g in groups {
        let e = ch.store.env(g).clone();
        let mut pred = Envelope::full(&u);
        for b in 0..n {
            if e.lo[b] > 0 || e.hi[b] == 0 {
                continue;
            }
            if (0..n).any(|a| a != b && e.lo[a] > 0 && definite[a][b] >= 1) {
                pred.hi[b] = 0;
            }
        }
        if pred.hi != u.max_occ() {
            ch.restrict(g, &pred)?;
        }
    }
    Ok(())
}

/// Runs propagators until nothing changes. FIFO queue with dirty flags.
pub fn fixpoint(store: &mut Store, props: &[Propagator]) -> Outcome<()> {
    fixpoint_trailed(store, props, &mut Vec::new())
}

/// [`fixpoint`], pushing every overwritten domain onto `trail`.
pub fn fixpoint_trailed(store: &mut Store, props: &[Propagator], trail: &mut Vec<(Var, Domain)>) -> Outcome<()> {
    let mut watchers: Vec<Vec<usize>> = vec![Vec::new(); store.domains.len()];
    for (k, p) in props.iter().enumerate() {
        for v in p.scope() {
            watchers[v].push(k);
        }
    }
    let mut queued = vec![true; props.len()];
    let mut queue: VecDeque<usize> = (0..props.len()).collect();
    while let Some(k) = queue.pop_front() {
        queued[k] = false;
        let mut ch = Changes { store: &mut *store, touched: Vec::new() };
        let result = props[k].run(&mut ch);
        let touched = ch.touched;
        for (v, _) in &touched {
            for &w in &watchers[*v] {
                if !queued[w] {
                    queued[w] = true;
                    queue.push_back(w);
                }
            }
        }
        trail.extend(touched);
        result?;
    }
    Ok(())
}

/// `|dom| ∈ [lo, hi]` on a single interval.
pub fn propagate_cardinality(u: &Universe, dom: &AlphaInterval, lo: u32, hi: u32) -> Outcome<AlphaInterval> {
    dom.restrict(u, &Envelope::full(u).with_card(lo, hi))
}

/// `‖dom‖ ∈ [lo, hi]` on a single interval.
pub fn propagate_variety(u: &Universe, dom: &AlphaInterval, lo: u32, hi: u32) -> Outcome<AlphaInterval> {
    dom.restrict(u, &Envelope::full(u).with_var(lo, hi))
}

fn run_on_intervals(u: &Universe, doms: &[&AlphaInterval], prop: Propagator) -> Outcome<Vec<AlphaInterval>> {
    let domains = doms.iter().map(|d| Domain::interval(u, (*d).clone())).collect();
    let mut store = Store::new(u.clone(), domains);
    fixpoint(&mut store, &[prop])?;
    Ok(store
        .domains
        .into_iter()
        .map(|d| match d {
            Domain::Interval { dom, .. } => dom,
            Domain::Bounds(_) => unreachable!("interval store"),
        })
        .collect())
}

pub fn propagate_intersection(
    u: &Universe,
    x: &AlphaInterval,
    y: &AlphaInterval,
    z: &AlphaInterval,
) -> Outcome<(AlphaInterval, AlphaInterval, AlphaInterval)> {
    let mut r = run_on_intervals(u, &[x, y, z], Propagator::Intersection { x: 0, y: 1, z: 2 })?;
    let z = r.pop().unwrap();
    let y = r.pop().unwrap();
    Ok((r.pop().unwrap(), y, z))
}

pub fn propagate_unionplus(
    u: &Universe,
    x: &AlphaInterval,
    y: &AlphaInterval,
    z: &AlphaInterval,
) -> Outcome<(AlphaInterval, AlphaInterval, AlphaInterval)> {
    let mut r = run_on_intervals(u, &[x, y, z], Propagator::UnionPlus { x: 0, y: 1, z: 2 })?;
    let z = r.pop().unwrap();
    let y = r.pop().unwrap();
    Ok((r.pop().unwrap(), y, z))
}

pub fn propagate_intersect_card_atmost(
    u: &Universe,
    x: &AlphaInterval,
    y: &AlphaInterval,
    limit: u32,
) -> Outcome<(AlphaInterval, AlphaInterval)> {
    let mut r = run_on_intervals(u, &[x, y], Propagator::IntersectCardAtMost { x: 0, y: 1, limit })?;
    let y = r.pop().unwrap();
    Ok((r.pop().unwrap(), y))
}
