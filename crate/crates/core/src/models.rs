//! Benchmark model builders: extended Steiner systems and social golfers
//! over teams.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::multiset::{Multiset, Universe};
use crate::propagate::{meeting_cost, Propagator, Var};
use crate::search::{Limits, Model, Objective, Representation};

/// Blocks of `k` elements drawn with repetition from `u` elements; any two of
/// the `b` blocks share fewer than `t` elements; each block has at least `v`
/// distinct elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SteinerParams {
    pub t: u32,
    pub k: u32,
    pub u: u32,
    pub b: u32,
    pub v: u32,
}

impl fmt::Display for SteinerParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ES({},{},{},{},{})", self.t, self.k, self.u, self.b, self.v)
    }
}

/// `m` teams of `n` members play in `g` groups of `p` over `w` weeks; every
/// group has at least `v` teams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GolferParams {
    pub w: u32,
    pub m: u32,
    pub n: u32,
    pub g: u32,
    pub p: u32,
    pub v: u32,
}

impl fmt::Display for GolferParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SG({},{},{},{},{},{})", self.w, self.m, self.n, self.g, self.p, self.v)
    }
}

pub fn build_steiner(params: SteinerParams, repr: Representation) -> Result<Model> {
    let SteinerParams { t, k, u, b, v } = params;
    if t < 1 || k < 1 || u < 1 || b < 2 {
        return usage(format!("{params}: need t, k, u >= 1 and b >= 2"));
    }
    if v < 1 || v > k.min(u) {
        return usage(format!("{params}: need 1 <= v <= min(k, u)"));
    }
    let universe = Universe::uniform(u as usize, k)?;
    let mut model = Model::new(universe, repr);
    let blocks: Vec<Var> = (1..=b).map(|j| model.add_var(format!("X{j}"))).collect();
    for &x in &blocks {
        model.post(Propagator::Cardinality { x, lo: k, hi: k });
        model.post(Propagator::Variety { x, lo: v, hi: u });
    }
    for (i, &x) in blocks.iter().enumerate() {
        for &y in &blocks[i + 1..] {
            model.post(Propagator::IntersectCardAtMost { x, y, limit: t - 1 });
        }
    }
    for pair in blocks.windows(2) {
        model.post(Propagator::AlphaLess { x: pair[0], y: pair[1] });
    }
    model.objective = Objective::MaximizeVarietySum(blocks);
    Ok(model)
}

/// Golfer model. Groups are declared week by week before the auxiliary
/// partial-sum variables, so search branches on groups first.
///
/// When `g·p < m·n` not every member plays each week; the weekly sum is then
/// only bounded by the roster.
pub fn build_golfer(params: GolferParams, repr: Representation) -> Result<Model> {
    let GolferParams { w, m, n, g, p, v } = params;
    if w < 1 || m < 1 || n < 1 || g < 1 || p < 1 {
        return usage(format!("{params}: all parameters must be positive"));
    }
    if v < 1 || v > p.min(m) {
        return usage(format!("{params}: need 1 <= v <= min(p, m)"));
    }
    if g as u64 * p as u64 > m as u64 * n as u64 {
        return usage(format!("{params}: {g} groups of {p} exceed the {m}x{n} roster"));
    }
    let universe = Universe::uniform(m as usize, n)?;
    let mut model = Model::new(universe, repr);
    let mut weeks: Vec<Vec<Var>> = Vec::new();
    for wk in 1..=w {
        let groups = (1..=g)
            .map(|j| {
                let x = model.add_var(format!("G{wk}_{j}"));
                for h in model.vars[x].initial.hi.iter_mut() {
                    *h = (*h).min(p);
                }
                model.post(Propagator::Cardinality { x, lo: p, hi: p });
                model.post(Propagator::Variety { x, lo: v, hi: m });
                x
            })
            .collect();
        weeks.push(groups);
    }
    for (wk, groups) in weeks.iter().enumerate() {
        let mut level = groups.clone();
        let mut aux = 0;
        while level.len() > 1 {
            let mut next = Vec::with_capacity(level.len().div_ceil(2));
            for pair in level.chunks(2) {
                if let [x, y] = *pair {
                    aux += 1;
                    let z = model.add_var(format!("S{}_{aux}", wk + 1));
                    model.post(Propagator::UnionPlus { x, y, z });
                    next.push(z);
                } else {
                    next.push(pair[0]);
                }
            }
            level = next;
        }
        let total = g * p;
        model.post(Propagator::Cardinality { x: level[0], lo: total, hi: total });
        for pair in groups.windows(2) {
            model.post(Propagator::AlphaLess { x: pair[0], y: pair[1] });
        }
    }
    for pair in weeks.windows(2) {
        model.post(Propagator::AlphaLess { x: pair[0][0], y: pair[1][0] });
    }
    model.objective = Objective::MinimizeMeetingCost(weeks.concat());
    Ok(model)
}

/// Checks blocks against the Steiner conditions directly; returns the summed
/// variety.
pub fn validate_steiner(params: SteinerParams, blocks: &[Multiset]) -> std::result::Result<u64, String> {
    if blocks.len() != params.b as usize {
        return Err(format!("expected {} blocks, got {}", params.b, blocks.len()));
    }
    for (j, x) in blocks.iter().enumerate() {
        let occ = x.occurrences();
        if occ.len() != params.u as usize {
            return Err(format!("block {} has the wrong length", j + 1));
        }
        let size: u32 = occ.iter().sum();
        let distinct = occ.iter().filter(|&&o| o > 0).count() as u32;
        if size != params.k {
            return Err(format!("block {} has {size} elements", j + 1));
        }
        if distinct < params.v {
            return Err(format!("block {} has {distinct} distinct elements", j + 1));
        }
    }
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            let shared: u32 = blocks[i]
                .occurrences()
                .iter()
                .zip(blocks[j].occurrences())
                .map(|(a, b)| *a.min(b))
                .sum();
            if shared >= params.t {
                return Err(format!("blocks {} and {} share {shared} elements", i + 1, j + 1));
            }
        }
    }
    Ok(blocks.iter().map(|x| x.occurrences().iter().filter(|&&o| o > 0).count() as u64).sum())
}

/// Checks a schedule given as `w·g` groups, week-major; returns the number
/// of repeat meetings.
pub fn validate_golfer(params: GolferParams, groups: &[Multiset]) -> std::result::Result<u64, String> {
    let (w, g) = (params.w as usize, params.g as usize);
    if groups.len() != w * g {
        return Err(format!("expected {} groups, got {}", w * g, groups.len()));
    }
    for (wk, week) in groups.chunks(g).enumerate() {
        let mut played = vec![0u32; params.m as usize];
        for (j, grp) in week.iter().enumerate() {
            let occ = grp.occurrences();
            if occ.len() != params.m as usize {
                return Err(format!("group {}/{} has the wrong length", wk + 1, j + 1));
            }
            let size: u32 = occ.iter().sum();
            let teams = occ.iter().filter(|&&o| o > 0).count() as u32;
            if size != params.p || teams < params.v {
                return Err(format!("group {}/{} has size {size} with {teams} teams", wk + 1, j + 1));
            }
            for (t, o) in occ.iter().enumerate() {
                played[t] += o;
            }
        }
        if let Some(t) = played.iter().position(|&c| c > params.n) {
            return Err(format!("team {} fields {} members in week {}", t + 1, played[t], wk + 1));
        }
    }
    // Pair meetings recounted here rather than through the solver helper.
    let m = params.m as usize;
    let mut cost = 0;
    for a in 0..m {
        for b in a + 1..m {
            let meets = groups
                .iter()
                .filter(|grp| grp.occurrences()[a] > 0 && grp.occurrences()[b] > 0)
                .count() as u64;
            cost += meets.saturating_sub(1);
        }
    }
    debug_assert_eq!(cost, meeting_cost(groups));
    Ok(cost)
}

/// One benchmark family with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum Family {
    Steiner(SteinerParams),
    Golfer(GolferParams),
}

impl Family {
    pub fn build(self, repr: Representation) -> Result<Model> {
        match self {
            Family::Steiner(p) => build_steiner(p, repr),
            Family::Golfer(p) => build_golfer(p, repr),
        }
    }

    /// Independent check of a solution; returns its objective value.
    pub fn validate(self, solution: &[Multiset]) -> std::result::Result<u64, String> {
        match self {
            Family::Steiner(p) => validate_steiner(p, &solution[..p.b as usize]),
            Family::Golfer(p) => validate_golfer(p, &solution[..(p.w * p.g) as usize]),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Steiner(p) => p.fmt(f),
            Family::Golfer(p) => p.fmt(f),
        }
    }
}

/// Instance file: `{"family": …, "params": {…}, "representation": "lvl",
/// "limits": {"timeout": 60}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(flatten)]
    pub family: Family,
    /// A representation name or `all`.
    #[serde(default = "default_repr")]
    pub representation: String,
    #[serde(default)]
    pub limits: Limits,
}

fn default_repr() -> String {
    "all".to_string()
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Instance> {
        serde_json::from_str(text).map_err(|e| crate::Error::Usage(format!("bad instance file: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order::OrderingId;
    use crate::search::{solve, Status};

    const LVL: Representation = Representation::Interval(OrderingId::LVL);

    #[test]
    fn steiner_parameter_checks() {
        let p = |t, k, u, b, v| SteinerParams { t, k, u, b, v };
        assert!(build_steiner(p(3, 4, 4, 4, 5), LVL).is_err());
        assert!(build_steiner(p(3, 4, 4, 1, 2), LVL).is_err());
        assert!(build_steiner(p(0, 4, 4, 4, 2), LVL).is_err());
        let m = build_steiner(p(3, 4, 4, 4, 2), LVL).unwrap();
        assert_eq!(m.vars.len(), 4);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn tiny_steiner_optima() {
        let p = SteinerParams { t: 3, k: 2, u: 3, b: 2, v: 1 };
        let (sol, stats) = solve(&build_steiner(p, LVL).unwrap(), Limits::default()).unwrap();
        assert_eq!(stats.status, Status::Optimal);
        assert_eq!(stats.best_objective, Some(4));
        assert_eq!(validate_steiner(p, &sol.unwrap()), Ok(4));

        let p = SteinerParams { t: 1, k: 1, u: 3, b: 3, v: 1 };
        let (_, stats) = solve(&build_steiner(p, LVL).unwrap(), Limits::default()).unwrap();
        assert_eq!(stats.best_objective, Some(3));
    }

    #[test]
    fn golfer_parameter_checks() {
        let p = |w, m, n, g, p, v| GolferParams { w, m, n, g, p, v };
        assert!(build_golfer(p(1, 2, 2, 3, 2, 1), LVL).is_err());
        assert!(build_golfer(p(1, 2, 2, 1, 2, 3), LVL).is_err());
        assert!(build_golfer(p(3, 3, 3, 2, 4, 2), LVL).is_ok());
    }

    #[test]
    fn golfer_small_cases() {
        let p = GolferParams { w: 1, m: 3, n: 2, g: 2, p: 3, v: 2 };
        let (sol, stats) = solve(&build_golfer(p, LVL).unwrap(), Limits::default()).unwrap();
        assert_eq!(stats.status, Status::Optimal);
        assert_eq!(stats.best_objective, Some(0));
        assert_eq!(validate_golfer(p, &sol.unwrap()[..2]), Ok(0));

        let p = GolferParams { w: 2, m: 3, n: 2, g: 3, p: 2, v: 1 };
        let (_, stats) = solve(&build_golfer(p, LVL).unwrap(), Limits::default()).unwrap();
        assert_eq!(stats.best_objective, Some(0));
    }

    #[test]
    fn instance_file_round_trip() {
        let text = r#"{"family":"steiner","params":{"t":3,"k":4,"u":4,"b":4,"v":2},"representation":"lvl","limits":{"timeout":60}}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.family, Family::Steiner(SteinerParams { t: 3, k: 4, u: 4, b: 4, v: 2 }));
        assert_eq!(inst.limits.timeout, Some(std::time::Duration::from_secs(60)));
        let back = Instance::from_json(&serde_json::to_string(&inst).unwrap()).unwrap();
        assert_eq!(back, inst);
        assert!(Instance::from_json(r#"{"family":"knapsack","params":{}}"#).is_err());
    }
}
