//! Depth-first branch-and-bound over multiset variables.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{AlphaInterval, Domain, SubsetBoundsCV};
use crate::enumerate::Seeker;
use crate::envelope::Envelope;
use crate::error::{usage, Error, Result};
use crate::multiset::{Multiset, Universe};
use crate::order::OrderingId;
use crate::propagate::{fixpoint_trailed, meeting_cost, Propagator, Store, Var};

/// How every variable's domain is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Representation {
    Interval(OrderingId),
    SubsetBounds,
}

impl Representation {
    pub const ALL: [Representation; 9] = [
        Representation::Interval(OrderingId::LL),
        Representation::Interval(OrderingId::LC),
        Representation::Interval(OrderingId::VL),
        Representation::Interval(OrderingId::VC),
        Representation::Interval(OrderingId::LVL),
        Representation::Interval(OrderingId::LVC),
        Representation::Interval(OrderingId::VLL),
        Representation::Interval(OrderingId::VLC),
        Representation::SubsetBounds,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Interval(o) => o.name(),
            Representation::SubsetBounds => "sb",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("sb") {
            return Ok(Representation::SubsetBounds);
        }
        s.parse().map(Representation::Interval)
    }
}

impl From<Representation> for String {
    fn from(r: Representation) -> String {
        r.name().to_string()
    }
}

impl TryFrom<String> for Representation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    None,
    /// Maximise the summed variety of the listed variables.
    MaximizeVarietySum(Vec<Var>),
    /// Minimise repeat meetings across the listed group variables.
    MinimizeMeetingCost(Vec<Var>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    /// Initial restriction; the representation turns it into a domain.
    pub initial: Envelope,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub universe: Universe,
    pub representation: Representation,
    pub vars: Vec<VarDecl>,
    pub propagators: Vec<Propagator>,
    pub objective: Objective,
}

impl Model {
    pub fn new(universe: Universe, representation: Representation) -> Self {
        Model {
            universe,
            representation,
            vars: Vec::new(),
            propagators: Vec::new(),
            objective: Objective::None,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        let initial = Envelope::full(&self.universe);
        self.vars.push(VarDecl { name: name.into(), initial });
        self.vars.len() - 1
    }

    pub fn post(&mut self, p: Propagator) {
        self.propagators.push(p);
    }

    pub fn with_representation(mut self, r: Representation) -> Self {
        self.representation = r;
        self
    }

    /// Scope and objective indices all name declared variables.
    pub fn validate(&self) -> Result<()> {
        let n = self.vars.len();
        let obj_vars: &[Var] = match &self.objective {
            Objective::None => &[],
            Objective::MaximizeVarietySum(v) | Objective::MinimizeMeetingCost(v) => v,
        };
        let bad = self
            .propagators
            .iter()
            .flat_map(|p| p.scope())
            .chain(obj_vars.iter().copied())
            .find(|&v| v >= n);
        if let Some(v) = bad {
            return usage(format!("variable {v} is not declared"));
        }
        for d in &self.vars {
            if d.initial.len() != self.universe.len() {
                return usage(format!("variable `{}` does not match the universe", d.name));
            }
        }
        Ok(())
    }

    /// Objective value of a full assignment.
    pub fn objective_value(&self, values: &[Multiset]) -> Option<i64> {
        match &self.objective {
            Objective::None => None,
            Objective::MaximizeVarietySum(vs) => Some(vs.iter().map(|&v| values[v].variety() as i64).sum()),
            Objective::MinimizeMeetingCost(gs) => {
                let groups: Vec<Multiset> = gs.iter().map(|&g| values[g].clone()).collect();
                Some(meeting_cost(&groups) as i64)
            }
        }
    }

    /// Whether a full assignment satisfies every posted constraint.
    pub fn satisfied_by(&self, values: &[Multiset]) -> bool {
        values.len() == self.vars.len()
            && values.iter().zip(&self.vars).all(|(m, d)| d.initial.contains(m))
            && self.propagators.iter().all(|p| match p {
                Propagator::AlphaLess { x, y } => self.precedes(&values[*x], &values[*y]),
                other => other.check(values, None),
            })
    }

    fn precedes(&self, x: &Multiset, y: &Multiset) -> bool {
        match self.representation {
            Representation::Interval(o) => o.cmp(x, y).is_le(),
            Representation::SubsetBounds => x.occurrences() <= y.occurrences(),
        }
    }

    fn initial_domain(&self, env: &Envelope) -> Option<Domain> {
        let u = &self.universe;
        match self.representation {
            Representation::Interval(o) => {
                AlphaInterval::full(u, o).restrict(u, env).ok().map(|d| Domain::interval(u, d))
            }
            Representation::SubsetBounds => SubsetBoundsCV::new(u, env.clone()).ok().map(Domain::Bounds),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    #[serde(default, with = "opt_secs")]
    pub timeout: Option<Duration>,
    #[serde(default)]
    pub node_cap: Option<u64>,
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        d.map(|d| d.as_secs_f64()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let secs = Option::<f64>::deserialize(d)?;
        secs.map(|s| Duration::try_from_secs_f64(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Satisfiable,
    Unsatisfiable,
    Timeout,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Satisfiable => "satisfiable",
            Status::Unsatisfiable => "unsatisfiable",
            Status::Timeout => "timeout",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub fails: u64,
    pub nodes: u64,
    pub wall_time: f64,
    pub best_objective: Option<i64>,
    pub status: Status,
}

/// Splits a domain into `X = lb` and the rest.
pub fn branch(u: &Universe, dom: &AlphaInterval) -> Result<(AlphaInterval, AlphaInterval)> {
    if dom.is_bound() {
        return usage("cannot branch on a bound variable");
    }
    let left = AlphaInterval::point(dom.ord, dom.lb.clone());
    let next = Seeker::new(u, dom.ord, &Envelope::full(u))
        .least_geq(&dom.lb, true)
        .expect("an unbound interval has a successor of its lower bound");
    let right = AlphaInterval { ord: dom.ord, lb: next, ub: dom.ub.clone() };
    Ok((left, right))
}

/// Left and right children; `None` for a child that is already empty.
fn branch_domain(u: &Universe, dom: &Domain) -> (Option<Domain>, Option<Domain>) {
    match dom {
        Domain::Interval { dom, .. } => {
            let (l, r) = branch(u, dom).expect("branching on an unbound variable");
            (Some(Domain::interval(u, l)), Some(Domain::interval(u, r)))
        }
        Domain::Bounds(sb) => {
            let e = &sb.bounds;
            let i = (0..e.lo.len()).find(|&i| e.lo[i] < e.hi[i]).expect("unbound subset bounds");
            let l = e.clone().with_occ(i + 1, e.lo[i], e.lo[i]);
            let r = e.clone().with_occ(i + 1, e.lo[i] + 1, e.hi[i]);
            let mk = |env| SubsetBoundsCV::new(u, env).ok().map(Domain::Bounds);
            (mk(l), mk(r))
        }
    }
}

/// What to do after a solution is found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

struct Choice {
    mark: usize,
    var: Var,
    right: Option<Domain>,
}

/// Core depth-first search. `on_solution` sees every solution reached; with
/// an objective each one tightens the bound for the rest of the search.
pub fn search(
    model: &Model,
    limits: Limits,
    mut on_solution: impl FnMut(&[Multiset]) -> Control,
) -> Result<SearchStats> {
    model.validate()?;
    let start = Instant::now();
    let u = model.universe.clone();
    let mut props = model.propagators.clone();
    match &model.objective {
        Objective::None => {}
        Objective::MaximizeVarietySum(v) => props.push(Propagator::VarietySumAtLeast { vars: v.clone() }),
        Objective::MinimizeMeetingCost(g) => props.push(Propagator::MeetingCostAtMost { groups: g.clone() }),
    }
    // Interval domains only honour the initial envelope at their endpoints.
    if matches!(model.representation, Representation::Interval(_)) {
        let full = Envelope::full(&u);
        for (x, d) in model.vars.iter().enumerate() {
            if d.initial != full {
                props.push(Propagator::Within { x, env: d.initial.clone() });
            }
        }
    }
    let mut stats = SearchStats {
        fails: 0,
        nodes: 0,
        wall_time: 0.0,
        best_objective: None,
        status: Status::Unsatisfiable,
    };
    let domains: Option<Vec<Domain>> = model.vars.iter().map(|d| model.initial_domain(&d.initial)).collect();
    let Some(domains) = domains else {
        stats.fails = 1;
        stats.nodes = 1;
        stats.wall_time = start.elapsed().as_secs_f64();
        return Ok(stats);
    };
    let mut store = Store::new(u.clone(), domains);
    let mut trail: Vec<(Var, Domain)> = Vec::new();
    let mut stack: Vec<Choice> = Vec::new();
    let mut found = false;
    let mut stopped = false;
    let mut limited = false;
    let mut dead = false;

    'nodes: loop {
        stats.nodes += 1;
        let out_of_budget = limits.timeout.is_some_and(|t| start.elapsed() >= t)
            || limits.node_cap.is_some_and(|c| stats.nodes > c);
        if out_of_budget {
            limited = true;
            break;
        }
        let alive = !dead && fixpoint_trailed(&mut store, &props, &mut trail).is_ok();
        dead = false;
        if alive {
            match store.domains.iter().position(|d| !d.is_bound()) {
                Some(v) => {
                    let (left, right) = branch_domain(&u, &store.domains[v]);
                    stack.push(Choice { mark: trail.len(), var: v, right });
                    match left {
                        Some(d) => {
                            let old = std::mem::replace(&mut store.domains[v], d);
                            trail.push((v, old));
                        }
                        None => dead = true,
                    }
                    continue 'nodes;
                }
                None => {
                    let values = store.assignment().expect("all variables bound");
                    debug_assert!(model.satisfied_by(&values), "search reached an invalid assignment");
                    found = true;
                    if let Some(obj) = model.objective_value(&values) {
                        stats.best_objective = Some(obj);
                        store.bound = Some(match model.objective {
                            Objective::MaximizeVarietySum(_) => obj + 1,
                            _ => obj - 1,
                        });
                    }
                    if on_solution(&values) == Control::Stop {
                        stopped = true;
                        break;
                    }
                }
            }
        } else {
            stats.fails += 1;
        }
        // Backtrack to the most recent open right branch.
        let Some(choice) = stack.pop() else {
            break;
        };
        while trail.len() > choice.mark {
            let (v, d) = trail.pop().expect("trail entry");
            store.domains[v] = d;
        }
        match choice.right {
            Some(d) => {
                let old = std::mem::replace(&mut store.domains[choice.var], d);
                trail.push((choice.var, old));
            }
            None => dead = true,
        }
    }

    stats.wall_time = start.elapsed().as_secs_f64();
    stats.status = match (limited, found, &model.objective) {
        (true, _, _) => Status::Timeout,
        (false, false, _) => Status::Unsatisfiable,
        (false, true, Objective::None) => Status::Satisfiable,
        (false, true, _) if stopped => Status::Satisfiable,
        (false, true, _) => Status::Optimal,
    };
    Ok(stats)
}

/// First solution, or the optimum when the model has an objective.
pub fn solve(model: &Model, limits: Limits) -> Result<(Option<Vec<Multiset>>, SearchStats)> {
    let mut best = None;
    let optimizing = model.objective != Objective::None;
    let stats = search(model, limits, |vals| {
        best = Some(vals.to_vec());
        if optimizing {
            Control::Continue
        } else {
            Control::Stop
        }
    })?;
    Ok((best, stats))
}

/// Every solution, ignoring the objective.
pub fn solve_all(model: &Model, limits: Limits) -> Result<(Vec<Vec<Multiset>>, SearchStats)> {
    let mut plain = model.clone();
    plain.objective = Objective::None;
    let mut all = Vec::new();
    let stats = search(&plain, limits, |vals| {
        all.push(vals.to_vec());
        Control::Continue
    })?;
    Ok((all, stats))
}

/// Solves independent models in parallel on `jobs` threads; results keep
/// the input order.
pub fn run_many(
    models: &[Model],
    limits: Limits,
    jobs: usize,
) -> Result<Vec<(Option<Vec<Multiset>>, SearchStats)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    pool.install(|| models.par_iter().map(|m| solve(m, limits)).collect())
}
