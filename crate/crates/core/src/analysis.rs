//! Closure-size experiments and exhaustive/sampled checks of the
//! expressiveness and compactness relations between the orderings.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{check_cap, enumerate_capped, seek_greatest_leq, seek_least_geq, value_cap};
use crate::envelope::{Envelope, Span};
use crate::error::{usage, Result};
use crate::multiset::{Multiset, Universe};
use crate::order::OrderingId::{self, *};
use crate::rank::{count_between, rank, unrank, CountBox};

/// Every value of `u` in mixed-radix order (first element most significant).
pub fn all_values(u: &Universe) -> Result<Vec<Multiset>> {
    check_cap(u, value_cap())?;
    let mut out: Vec<Vec<u32>> = vec![Vec::new()];
    for &m in u.max_occ() {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..=m).map(move |o| {
                    let mut w = v.clone();
                    w.push(o);
                    w
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(Multiset::from_occurrences).collect())
}

fn value_index(u: &Universe, ms: &Multiset) -> usize {
    ms.occurrences()
        .iter()
        .zip(u.max_occ())
        .fold(0usize, |acc, (&o, &m)| acc * (m as usize + 1) + o as usize)
}

/// `pos[o][i]`: position of value `i` (mixed-radix index) under ordering `o`.
fn positions(u: &Universe) -> Result<Vec<Vec<u32>>> {
    let cap = value_cap();
    check_cap(u, cap)?;
    OrderingId::ALL
        .par_iter()
        .map(|&ord| {
            let mut pos = vec![0u32; u.value_count() as usize];
            for (k, ms) in enumerate_capped(u, ord, cap)?.enumerate() {
                pos[value_index(u, &ms)] = k as u32;
            }
            Ok(pos)
        })
        .collect()
}

/// Settings for [`closure_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureConfig {
    pub trials: usize,
    pub seed: u64,
    /// Inclusion probability of each value in a drawn domain.
    pub inclusion: f64,
}

/// One CSV row: an ordering's result in one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureRow {
    pub ordering: OrderingId,
    pub trial: usize,
    pub d_size: u64,
    /// Size of `cl_α(D)` after bounds tightening against the constraint.
    pub closure_size: u64,
    /// Whether every member of that interval satisfies the constraint.
    pub exact: bool,
    #[serde(skip)]
    pub satisfying: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSummary {
    pub ordering: OrderingId,
    pub trials: usize,
    pub mean_closure: f64,
    pub min_closure: u64,
    pub max_closure: u64,
    pub exact_rate: f64,
    /// Mean number of satisfying members of the closure.
    pub mean_satisfying: f64,
    /// Mean closure size under LL divided by this ordering's.
    pub reduction_vs_ll: f64,
    /// Mean closure size under VL divided by this ordering's.
    pub reduction_vs_vl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureExperiment {
    pub universe: String,
    pub card: Span,
    pub var: Span,
    pub config: ClosureConfig,
    pub rows: Vec<ClosureRow>,
    pub summary: Vec<OrderingSummary>,
}

/// Draws random domains `D` among the constraint-satisfying values of `u`
/// and, for every ordering, measures `cl_α(D)` tightened to the constraint.
/// A row is exact when that interval contains no unsatisfying value.
pub fn closure_experiment(u: &Universe, constraint: &Envelope, cfg: ClosureConfig) -> Result<ClosureExperiment> {
    if !(0.0..=1.0).contains(&cfg.inclusion) || cfg.inclusion == 0.0 {
        return usage("inclusion probability must be in (0, 1]");
    }
    if constraint.len() != u.len() {
        return usage("constraint does not match the universe");
    }
    let bx = CountBox { card: constraint.card, var: constraint.var };
    let mut exp = ClosureExperiment {
        universe: u.full_multiset().to_string(),
        card: constraint.card,
        var: constraint.var,
        config: cfg,
        rows: Vec::new(),
        summary: Vec::new(),
    };
    check_cap(u, value_cap())?;
    if cfg.trials == 0 {
        return Ok(exp);
    }
    if !constraint.is_satisfiable() {
        return usage("no multiset satisfies the constraint");
    }
    let pos = positions(u)?;
    let feasible: Vec<usize> = all_values(u)?
        .iter()
        .enumerate()
        .filter(|(_, ms)| constraint.contains(ms))
        .map(|(i, _)| i)
        .collect();
    let per_trial: Vec<Vec<ClosureRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial as u64);
            let (d_size, lo, hi) = loop {
                let mut lo = [u32::MAX; 8];
                let mut hi = [0u32; 8];
                let mut size = 0u64;
                for &i in &feasible {
                    if rng.gen_bool(cfg.inclusion) {
                        size += 1;
                        for o in 0..8 {
                            lo[o] = lo[o].min(pos[o][i]);
                            hi[o] = hi[o].max(pos[o][i]);
                        }
                    }
                }
                if size > 0 {
                    break (size, lo, hi);
                }
            };
            OrderingId::ALL
                .iter()
                .enumerate()
                .map(|(o, &ord)| {
                    let dmin = unrank(u, ord, lo[o] as u128)?;
                    let dmax = unrank(u, ord, hi[o] as u128)?;
                    let lb = seek_least_geq(u, ord, &dmin, constraint)?;
                    let ub = seek_greatest_leq(u, ord, &dmax, constraint)?;
                    // D is nonempty and feasible, so both seeks succeed.
                    let (lb, ub) = (lb.expect("feasible member"), ub.expect("feasible member"));
                    let size = rank(u, ord, &ub)? - rank(u, ord, &lb)? + 1;
                    let inside = count_between(u, ord, &lb, &ub, bx)?;
                    Ok(ClosureRow {
                        ordering: ord,
                        trial,
                        d_size,
                        closure_size: size as u64,
                        exact: size == inside,
                        satisfying: inside as u64,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    exp.rows = per_trial.into_iter().flatten().collect();
    exp.summary = summarize(&exp.rows, cfg.trials);
    Ok(exp)
}

fn summarize(rows: &[ClosureRow], trials: usize) -> Vec<OrderingSummary> {
    let mean_of = |ord: OrderingId| {
        let v: Vec<u64> = rows.iter().filter(|r| r.ordering == ord).map(|r| r.closure_size).collect();
        v.iter().map(|&x| x as f64).sum::<f64>() / v.len().max(1) as f64
    };
    let (ll, vl) = (mean_of(LL), mean_of(VL));
    OrderingId::ALL
        .iter()
        .map(|&ord| {
            let mine: Vec<&ClosureRow> = rows.iter().filter(|r| r.ordering == ord).collect();
            let mean = mean_of(ord);
            let ratio = |base: f64| if mean > 0.0 { base / mean } else { f64::NAN };
            OrderingSummary {
                ordering: ord,
                trials,
                mean_closure: mean,
                min_closure: mine.iter().map(|r| r.closure_size).min().unwrap_or(0),
                max_closure: mine.iter().map(|r| r.closure_size).max().unwrap_or(0),
                exact_rate: mine.iter().filter(|r| r.exact).count() as f64 / mine.len().max(1) as f64,
                mean_satisfying: mine.iter().map(|r| r.satisfying as f64).sum::<f64>() / mine.len().max(1) as f64,
                reduction_vs_ll: ratio(ll),
                reduction_vs_vl: ratio(vl),
            }
        })
        .collect()
}

/// Which sets `S` a proposition check quantifies over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Population {
    /// Every nonempty set of values.
    AllSubsets,
    /// Sets of the form `{x : |x| ∈ [a,b], ‖x‖ ∈ [c,d]}`.
    ConstraintDefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampled { seed: u64, count: u64 },
}

/// Above this many values the exhaustive mode falls back to sampling.
pub const EXHAUSTIVE_MAX_VALUES: u128 = 20;
pub const FALLBACK_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Cond {
    Any,
    FixedCard,
    FixedVar,
    FixedBoth,
}

#[derive(Debug, Clone, Copy)]
enum Check {
    /// Exact under one iff exact under the other.
    SameExactness(OrderingId, OrderingId),
    /// Exact under the second implies exact under the first.
    ExactImplies(OrderingId, OrderingId),
    /// Some set is exact under the first and not under the second.
    ExistsExactOnly(OrderingId, OrderingId),
    /// The first closure is never larger.
    NoLarger(OrderingId, OrderingId),
    /// Some set has a strictly smaller first closure.
    ExistsSmaller(OrderingId, OrderingId),
}

impl Check {
    fn universal(self) -> bool {
        matches!(self, Check::SameExactness(..) | Check::ExactImplies(..) | Check::NoLarger(..))
    }

    /// Whether this set violates (universal) or witnesses (existential).
    fn hit(self, st: &SetStats) -> bool {
        let i = |o: OrderingId| o as usize;
        match self {
            Check::SameExactness(a, b) => st.exact[i(a)] != st.exact[i(b)],
            Check::ExactImplies(a, b) => st.exact[i(b)] && !st.exact[i(a)],
            Check::ExistsExactOnly(a, b) => st.exact[i(a)] && !st.exact[i(b)],
            Check::NoLarger(a, b) => st.size[i(a)] > st.size[i(b)],
            Check::ExistsSmaller(a, b) => st.size[i(a)] < st.size[i(b)],
        }
    }

    fn describe(self) -> String {
        match self {
            Check::SameExactness(a, b) => format!("exact({a}) <-> exact({b})"),
            Check::ExactImplies(a, b) => format!("exact({b}) -> exact({a})"),
            Check::ExistsExactOnly(a, b) => format!("exists S: exact({a}) and not exact({b})"),
            Check::NoLarger(a, b) => format!("|cl_{a}(S)| <= |cl_{b}(S)|"),
            Check::ExistsSmaller(a, b) => format!("exists S: |cl_{a}(S)| < |cl_{b}(S)|"),
        }
    }
}

struct Clause {
    id: &'static str,
    cond: Cond,
    check: Check,
}

fn clauses() -> Vec<Clause> {
    use Check::*;
    let mut out = Vec::new();
    let mut add = |id, cond, check| out.push(Clause { id, cond, check });
    let both = Cond::FixedBoth;
    add("1(i)", both, SameExactness(LVL, VLL));
    add("1(i)", both, SameExactness(LVC, VLC));
    for (a, b) in [(LVL, LL), (LVC, LC), (VLL, VL), (VLC, VC)] {
        add("1(ii)", both, ExactImplies(a, b));
        add("1(ii)", both, ExistsExactOnly(a, b));
    }
    add("1(iii)", both, SameExactness(LVL, LVC));
    add("1(iii)", both, SameExactness(VLL, VLC));
    for (a, b) in [(LVL, VLL), (LVC, VLC), (LVL, LL), (LVC, LC), (LVL, VL), (LVC, VC)] {
        add("2(i)", Cond::FixedCard, ExactImplies(a, b));
        add("2(i)", Cond::FixedCard, ExistsExactOnly(a, b));
    }
    add("2(ii)", Cond::FixedCard, SameExactness(LL, LC));
    for (a, b) in [(VLL, LVL), (VLC, LVC), (VLL, LL), (VLC, LC), (VLL, VL), (VLC, VC)] {
        add("3(i)", Cond::FixedVar, ExactImplies(a, b));
        add("3(i)", Cond::FixedVar, ExistsExactOnly(a, b));
    }
    add("3(ii)", Cond::FixedVar, SameExactness(VL, VC));
    for (a, b) in [(LVL, LL), (LVC, LC)] {
        add("4(i)", Cond::Any, NoLarger(a, b));
        add("4(i)", Cond::Any, ExistsSmaller(a, b));
    }
    for (a, b) in [(LVL, VLL), (VLL, LVL), (LVC, VLC), (VLC, LVC)] {
        add("4(i)", Cond::Any, ExistsSmaller(a, b));
    }
    for (a, b) in [(VLL, VL), (VLC, VC)] {
        add("4(ii)", Cond::Any, NoLarger(a, b));
        add("4(ii)", Cond::Any, ExistsSmaller(a, b));
    }
    for (a, b) in [(LL, VL), (VL, LL), (LC, VC), (VC, LC)] {
        add("4(iii)", Cond::Any, ExistsSmaller(a, b));
    }
    out
}

struct SetStats {
    size: [u64; 8],
    exact: [bool; 8],
    fixed_card: bool,
    fixed_var: bool,
}

impl SetStats {
    fn applies(&self, c: Cond) -> bool {
        match c {
            Cond::Any => true,
            Cond::FixedCard => self.fixed_card,
            Cond::FixedVar => self.fixed_var,
            Cond::FixedBoth => self.fixed_card && self.fixed_var,
        }
    }
}

/// Precomputed per-value data for fast set statistics.
struct Space {
    values: Vec<Multiset>,
    pos: Vec<[u32; 8]>,
    card: Vec<u32>,
    var: Vec<u32>,
}

impl Space {
    fn new(u: &Universe) -> Result<Space> {
        let values = all_values(u)?;
        let by_ord = positions(u)?;
        let pos = (0..values.len())
            .map(|i| std::array::from_fn(|o| by_ord[o][i]))
            .collect();
        let card = values.iter().map(Multiset::cardinality).collect();
        let var = values.iter().map(Multiset::variety).collect();
        Ok(Space { values, pos, card, var })
    }

    fn stats(&self, members: impl Iterator<Item = usize>) -> Option<SetStats> {
        let mut lo = [u32::MAX; 8];
        let mut hi = [0u32; 8];
        let mut count = 0u64;
        let mut first: Option<(u32, u32)> = None;
        let (mut fixed_card, mut fixed_var) = (true, true);
        for i in members {
            count += 1;
            let (c, v) = (self.card[i], self.var[i]);
            match first {
                None => first = Some((c, v)),
                Some((c0, v0)) => {
                    fixed_card &= c == c0;
                    fixed_var &= v == v0;
                }
            }
            for o in 0..8 {
                lo[o] = lo[o].min(self.pos[i][o]);
                hi[o] = hi[o].max(self.pos[i][o]);
            }
        }
        first?;
        let size: [u64; 8] = std::array::from_fn(|o| (hi[o] - lo[o]) as u64 + 1);
        Some(SetStats { size, exact: size.map(|s| s == count), fixed_card, fixed_var })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub proposition: String,
    pub statement: String,
    pub universal: bool,
    /// Sets satisfying the clause's cardinality/variety condition.
    pub checked: u64,
    /// Violations (universal) or witnesses (existential) found.
    pub hits: u64,
    /// First counterexample or witness, as canonical multisets.
    pub example: Option<Vec<String>>,
    pub passed: bool,
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropositionReport {
    pub universe: String,
    pub population: Population,
    pub mode: Mode,
    pub sets_examined: u64,
    pub clauses: Vec<ClauseResult>,
}

impl PropositionReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ClauseResult> {
        self.clauses.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for PropositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "universe {} population {:?} mode {:?} sets {}", self.universe, self.population, self.mode, self.sets_examined)?;
        for c in &self.clauses {
            let verdict = match (c.passed, c.vacuous) {
                (true, true) => "VACUOUS",
                (true, false) => "PASS",
                (false, _) => "FAIL",
            };
            write!(f, "{verdict:7} P{:7} {:45} checked={} hits={}", c.proposition, c.statement, c.checked, c.hits)?;
            if let Some(ex) = &c.example {
                write!(f, " example=[{}]", ex.join(" ; "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Tallies for every clause, mergeable across parallel chunks.
#[derive(Clone)]
struct Tally {
    checked: Vec<u64>,
    hits: Vec<u64>,
    /// `(order key, member indices)` of the earliest hit.
    example: Vec<Option<(u64, Vec<usize>)>>,
    sets: u64,
}

impl Tally {
    fn new(k: usize) -> Tally {
        Tally { checked: vec![0; k], hits: vec![0; k], example: vec![None; k], sets: 0 }
    }

    fn record(&mut self, cls: &[Clause], st: &SetStats, key: u64, members: impl Fn() -> Vec<usize>) {
        self.sets += 1;
        for (k, c) in cls.iter().enumerate() {
            if !st.applies(c.cond) {
                continue;
            }
            self.checked[k] += 1;
            if c.check.hit(st) {
                self.hits[k] += 1;
                if self.example[k].as_ref().is_none_or(|(kk, _)| key < *kk) {
                    self.example[k] = Some((key, members()));
                }
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.sets += other.sets;
        for k in 0..self.checked.len() {
            self.checked[k] += other.checked[k];
            self.hits[k] += other.hits[k];
            let take = match (&self.example[k], &other.example[k]) {
                (None, Some(_)) => true,
                (Some((a, _)), Some((b, _))) => b < a,
                _ => false,
            };
            if take {
                self.example[k] = other.example[k].clone();
            }
        }
        self
    }
}

/// Checks every clause of the four propositions over the chosen population.
pub fn proposition_report(u: &Universe, population: Population, mode: Mode) -> Result<PropositionReport> {
    let space = Space::new(u)?;
    let cls = clauses();
    let nvals = space.values.len();
    let mode = match mode {
        Mode::Exhaustive if population == Population::AllSubsets && nvals as u128 > EXHAUSTIVE_MAX_VALUES => {
            Mode::Sampled { seed: 0, count: FALLBACK_SAMPLES }
        }
        m => m,
    };
    let tally = match (population, mode) {
        (Population::AllSubsets, Mode::Exhaustive) => {
            let total: u64 = 1 << nvals;
            let chunk = 1u64 << 12;
            (0..total.div_ceil(chunk))
                .into_par_iter()
                .map(|c| {
                    let mut t = Tally::new(cls.len());
                    for mask in (c * chunk).max(1)..((c + 1) * chunk).min(total) {
                        let members = move || (0..nvals).filter(move |i| mask >> i & 1 == 1);
                        if let Some(st) = space.stats(members()) {
                            t.record(&cls, &st, mask, || members().collect());
                        }
                    }
                    t
                })
                .reduce(|| Tally::new(cls.len()), Tally::merge)
        }
        (Population::AllSubsets, Mode::Sampled { seed, count }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Tally::new(cls.len());
            for s in 0..count {
                let members = sample_set(&space, &mut rng, s);
                if let Some(st) = space.stats(members.iter().copied()) {
                    t.record(&cls, &st, s, || members.clone());
                }
            }
            t
        }
        (Population::ConstraintDefined, _) => {
            let mut t = Tally::new(cls.len());
            let (cmax, vmax) = (u.max_cardinality(), u.len() as u32);
            let mut key = 0;
            for a in 0..=cmax {
                for b in a..=cmax {
                    for c in 0..=vmax {
                        for d in c..=vmax {
                            let inside = |i: &usize| {
                                (a..=b).contains(&space.card[*i]) && (c..=d).contains(&space.var[*i])
                            };
                            let members: Vec<usize> = (0..nvals).filter(inside).collect();
                            if let Some(st) = space.stats(members.iter().copied()) {
                                t.record(&cls, &st, key, || members.clone());
                            }
                            key += 1;
                        }
                    }
                }
            }
            t
        }
    };
    let clauses = cls
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let universal = c.check.universal();
            let (checked, hits) = (tally.checked[k], tally.hits[k]);
            let vacuous = checked == 0;
            let passed = vacuous || if universal { hits == 0 } else { hits > 0 };
            ClauseResult {
                proposition: c.id.to_string(),
                statement: c.check.describe(),
                universal,
                checked,
                hits,
                example: tally.example[k]
                    .as_ref()
                    .map(|(_, m)| m.iter().map(|&i| space.values[i].to_string()).collect()),
                passed,
                vacuous,
            }
        })
        .collect();
    Ok(PropositionReport {
        universe: u.full_multiset().to_string(),
        population,
        mode,
        sets_examined: tally.sets,
        clauses,
    })
}

/// Random nonempty set. Samples rotate between sets confined to one
/// cardinality/variety stratum, one cardinality, one variety, and no
/// restriction; half are small uniform draws, half Bernoulli(1/2).
fn sample_set(space: &Space, rng: &mut ChaCha8Rng, s: u64) -> Vec<usize> {
    let n = space.values.len();
    let anchor = rng.gen_range(0..n);
    let (c, v) = (space.card[anchor], space.var[anchor]);
    let pool: Vec<usize> = (0..n)
        .filter(|&i| match s % 4 {
            0 => space.card[i] == c && space.var[i] == v,
            1 => space.card[i] == c,
            2 => space.var[i] == v,
            _ => true,
        })
        .collect();
    loop {
        let picked: Vec<usize> = if rng.gen_bool(0.5) {
            let k = rng.gen_range(1..=pool.len().min(8));
            let mut idx: Vec<usize> = sample(rng, pool.len(), k).into_iter().map(|j| pool[j]).collect();
            idx.sort_unstable();
            idx
        } else {
            pool.iter().copied().filter(|_| rng.gen_bool(0.5)).collect()
        };
        if !picked.is_empty() {
            return picked;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_give_empty_table() {
        let u = Universe::uniform(2, 2).unwrap();
        let cfg = ClosureConfig { trials: 0, seed: 1, inclusion: 0.5 };
        let exp = closure_experiment(&u, &Envelope::full(&u), cfg).unwrap();
        assert!(exp.rows.is_empty() && exp.summary.is_empty());
    }

    #[test]
    fn experiment_is_reproducible() {
        let u = Universe::uniform(3, 3).unwrap();
        let env = Envelope::full(&u).with_var(2, 2);
        let cfg = ClosureConfig { trials: 6, seed: 9, inclusion: 0.3 };
        let a = closure_experiment(&u, &env, cfg).unwrap();
        let b = closure_experiment(&u, &env, cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 48);
    }

    #[test]
    fn sampled_zero_is_vacuous() {
        let u = Universe::parse("1,2,2,3,3").unwrap();
        let r = proposition_report(&u, Population::AllSubsets, Mode::Sampled { seed: 1, count: 0 }).unwrap();
        assert!(r.clauses.iter().all(|c| c.vacuous && c.passed));
    }

    #[test]
    fn exhaustive_falls_back_to_sampling() {
        let u = Universe::uniform(3, 2).unwrap();
        let r = proposition_report(&u, Population::AllSubsets, Mode::Exhaustive).unwrap();
        assert_eq!(r.mode, Mode::Sampled { seed: 0, count: FALLBACK_SAMPLES });
    }
}
