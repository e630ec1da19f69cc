//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line.

use std::cmp::Ordering;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use msetlex::analysis::{ClosureConfig, Mode, Population};
use msetlex::{
    closure, closure_experiment, fixpoint, interval_size, is_exact, predecessor, proposition_report, rank,
    run_many, seek_least_geq, successor, unrank, AlphaInterval, Domain, Envelope, Family, GolferParams, Limits,
    Multiset, OrderingId, Propagator, Representation, SteinerParams, Status, Store, SubsetBoundsCV, Universe,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use OrderingId::*;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Verdict {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn out_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn u5() -> Universe {
    Universe::parse("1,2,2,3,3").unwrap()
}

fn ms(u: &Universe, s: &str) -> Multiset {
    u.parse_multiset(s).unwrap()
}

/// Every value, generated independently of the library's enumerators.
fn all_values(u: &Universe) -> Vec<Multiset> {
    let mut out: Vec<Vec<u32>> = vec![vec![]];
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
    out.into_iter().map(Multiset::from_occurrences).collect()
}

/// Reference comparator written from the ordering definitions.
fn ref_cmp(ord: OrderingId, x: &Multiset, y: &Multiset) -> Ordering {
    let card = |m: &Multiset| m.occurrences().iter().sum::<u32>();
    let var = |m: &Multiset| m.occurrences().iter().filter(|&&o| o > 0).count() as u32;
    let keys = |m: &Multiset| -> Vec<u32> {
        match ord {
            LL | LC => vec![card(m)],
            VL | VC => vec![var(m)],
            LVL | LVC => vec![card(m), var(m)],
            VLL | VLC => vec![var(m), card(m)],
        }
    };
    let tail = |m: &Multiset| -> Vec<u32> {
        let mut v = m.occurrences().to_vec();
        if matches!(ord, LC | VC | LVC | VLC) {
            v.reverse();
        }
        v
    };
    keys(x).cmp(&keys(y)).then_with(|| tail(x).cmp(&tail(y)))
}

fn ref_sorted(u: &Universe, ord: OrderingId) -> Vec<Multiset> {
    let mut v = all_values(u);
    v.sort_by(|a, b| ref_cmp(ord, a, b));
    v
}

fn criterion_1() -> Verdict {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut worst = Duration::ZERO;
    for ord in ["ll", "vl", "lvl", "vll"] {
        let want = fs::read(fixtures.join(format!("order_{ord}.txt"))).unwrap();
        let t = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_msetlex"))
            .args(["order", "--universe", "1,2,2,3,3", "--repr", ord])
            .output()
            .unwrap();
        worst = worst.max(t.elapsed());
        if !out.status.success() || out.stdout != want {
            return Err(format!("{ord} listing differs from fixture"));
        }
    }
    check(worst < Duration::from_secs(1), format!("4 listings identical, slowest {worst:.2?}"), format!("too slow: {worst:.2?}"))
}

fn criterion_2() -> Verdict {
    let u = u5();
    let set = [ms(&u, "1"), ms(&u, "2,2"), ms(&u, "2,3")];
    let cl = closure(LVL, &set).unwrap();
    let exact = is_exact(&u, LVL, &set).unwrap();
    let ok = cl.lb == ms(&u, "1") && cl.ub == ms(&u, "2,3") && !exact && cl.contains(&ms(&u, "3,3"));
    check(ok, format!("{cl}, inexact, contains 3,3"), format!("got {cl} exact={exact}"))
}

fn criterion_3() -> Verdict {
    let u = u5();
    let s: Vec<Multiset> = all_values(&u).into_iter().filter(|m| m.variety() == 2).collect();
    let lvl = interval_size(&u, &closure(LVL, &s).unwrap());
    let ll = interval_size(&u, &closure(LL, &s).unwrap());
    check(lvl == 9 && ll == 10, format!("|cl_lvl| = {lvl}, |cl_ll| = {ll}"), format!("|cl_lvl| = {lvl}, |cl_ll| = {ll}"))
}

fn bc_sizes(ord: OrderingId) -> (Vec<u128>, Duration) {
    let u = Universe::uniform(3, 3).unwrap();
    let full = Domain::interval(&u, AlphaInterval::full(&u, ord));
    let mut store = Store::new(u.clone(), vec![full; 3]);
    let props = [
        Propagator::Cardinality { x: 0, lo: 3, hi: 3 },
        Propagator::Cardinality { x: 1, lo: 3, hi: 3 },
        Propagator::Cardinality { x: 2, lo: 3, hi: 3 },
        Propagator::Variety { x: 2, lo: 1, hi: 1 },
        Propagator::Intersection { x: 0, y: 1, z: 2 },
    ];
    let t = Instant::now();
    fixpoint(&mut store, &props).expect("consistent");
    let took = t.elapsed();
    let sizes = store
        .domains
        .iter()
        .map(|d| match d {
            Domain::Interval { dom, .. } => interval_size(&u, dom),
            Domain::Bounds(_) => unreachable!(),
        })
        .collect();
    (sizes, took)
}

fn criterion_4() -> Verdict {
    let (lvl, t1) = bc_sizes(LVL);
    let (ll, t2) = bc_sizes(LL);
    let took = t1 + t2;
    let ok = lvl == [3, 3, 3] && ll == [10, 10, 10] && took < Duration::from_millis(100);
    check(ok, format!("lvl {lvl:?}, ll {ll:?} in {took:.2?}"), format!("lvl {lvl:?}, ll {ll:?} in {took:.2?}"))
}

fn criterion_5() -> Verdict {
    let t = Instant::now();
    let mut reports = vec![proposition_report(&u5(), Population::AllSubsets, Mode::Exhaustive).unwrap()];
    for (k, text) in ["1,1,2,2,3,3", "1,2,2,3,3,3,4"].iter().enumerate() {
        let u = Universe::parse(text).unwrap();
        let mode = Mode::Sampled { seed: 1000 + k as u64, count: 10_000 };
        reports.push(proposition_report(&u, Population::AllSubsets, mode).unwrap());
    }
    let path = out_dir().join("proposition_reports.json");
    fs::write(&path, serde_json::to_string_pretty(&reports).unwrap()).unwrap();
    let took = t.elapsed();
    let witnesses_found = reports.iter().all(|r| {
        r.clauses
            .iter()
            .filter(|c| !c.universal && (c.proposition == "4(i)" || c.proposition == "4(iii)"))
            .all(|c| c.example.is_some())
    });
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().map(move |c| format!("{} P{} {}", r.universe, c.proposition, c.statement)))
        .collect();
    let ok = failed.is_empty() && witnesses_found && took < Duration::from_secs(300);
    check(
        ok,
        format!("all clauses hold on 3 universes, witnesses in {}", path.display()),
        format!(
            "{} clause failures (first: {}), witnesses found: {witnesses_found}, report in {}",
            failed.len(),
            failed.first().map_or("-", String::as_str),
            path.display()
        ),
    )
}

fn random_universe(rng: &mut ChaCha8Rng) -> Universe {
    loop {
        let n = rng.gen_range(1..=6);
        let occ: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=6)).collect();
        if let Ok(u) = Universe::new(occ) {
            if (2..=100_000).contains(&u.value_count()) {
                return u;
            }
        }
    }
}

fn random_envelope(rng: &mut ChaCha8Rng, u: &Universe) -> Envelope {
    let mut env = Envelope::full(u);
    for i in 0..u.len() {
        let m = u.max_occ()[i];
        let (a, b) = (rng.gen_range(0..=m), rng.gen_range(0..=m));
        env = env.with_occ(i + 1, a.min(b), a.max(b));
    }
    let cmax = u.max_cardinality();
    let (a, b) = (rng.gen_range(0..=cmax), rng.gen_range(0..=cmax));
    env = env.with_card(a.min(b), a.max(b));
    let n = u.len() as u32;
    let (a, b) = (rng.gen_range(0..=n), rng.gen_range(0..=n));
    env.with_var(a.min(b), a.max(b))
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut queries, mut mismatches) = (0u64, Vec::new());
    for _ in 0..12 {
        let u = random_universe(&mut rng);
        for ord in OrderingId::ALL {
            let list = ref_sorted(&u, ord);
            for _ in 0..15 {
                queries += 1;
                let i = rng.gen_range(0..list.len());
                let x = &list[i];
                let mut bad = |what: &str| mismatches.push(format!("{what} {ord} {x} in {:?}", u));
                if successor(&u, ord, x).unwrap().as_ref() != list.get(i + 1) {
                    bad("successor");
                }
                if predecessor(&u, ord, x).unwrap().as_ref() != i.checked_sub(1).map(|j| &list[j]) {
                    bad("predecessor");
                }
                if rank(&u, ord, x).unwrap() != i as u128 || unrank(&u, ord, i as u128).unwrap() != *x {
                    bad("rank/unrank");
                }
                let env = random_envelope(&mut rng, &u);
                let want = list[i..].iter().find(|m| env.contains(m));
                if seek_least_geq(&u, ord, x, &env).unwrap().as_ref() != want {
                    bad("seek_least_geq");
                }
                let j = rng.gen_range(i..list.len());
                let iv = AlphaInterval::new(&u, ord, x.clone(), list[j].clone()).unwrap();
                if interval_size(&u, &iv) != (j - i + 1) as u128 {
                    bad("interval_size");
                }
            }
        }
    }
    check(
        mismatches.is_empty() && queries >= 1000,
        format!("{queries} queries over 12 universes, 0 mismatches"),
        format!("{} mismatches, first: {}", mismatches.len(), mismatches.first().map_or("-", String::as_str)),
    )
}

struct SmallModel {
    u: Universe,
    repr: Representation,
    domains: Vec<Domain>,
    props: Vec<Propagator>,
    bound: Option<i64>,
}

fn random_domain(rng: &mut ChaCha8Rng, u: &Universe, repr: Representation) -> Option<Domain> {
    match repr {
        Representation::Interval(ord) => {
            let list = ref_sorted(u, ord);
            let a = rng.gen_range(0..list.len());
            let b = rng.gen_range(a..list.len());
            let iv = AlphaInterval::new(u, ord, list[a].clone(), list[b].clone()).ok()?;
            Some(Domain::interval(u, iv))
        }
        Representation::SubsetBounds => {
            let env = if rng.gen_bool(0.3) { Envelope::full(u) } else { random_envelope(rng, u) };
            SubsetBoundsCV::new(u, env).ok().map(Domain::Bounds)
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> Option<SmallModel> {
    let n = rng.gen_range(1..=3);
    let u = Universe::new((0..n).map(|_| rng.gen_range(1..=2)).collect()).ok()?;
    let repr = Representation::ALL[rng.gen_range(0..9)];
    let nvars = 3;
    let domains = (0..nvars).map(|_| random_domain(rng, &u, repr)).collect::<Option<Vec<_>>>()?;
    let mut props = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let (x, y, z) = (rng.gen_range(0..nvars), rng.gen_range(0..nvars), rng.gen_range(0..nvars));
        let (lo, hi) = {
            let a = rng.gen_range(0..=u.max_cardinality());
            (a, rng.gen_range(a..=u.max_cardinality()))
        };
        let p = match rng.gen_range(0..8) {
            0 => Propagator::Cardinality { x, lo, hi },
            1 => Propagator::Variety { x, lo: lo.min(n as u32), hi: hi.min(n as u32) },
            2 => Propagator::Intersection { x, y, z },
            3 => Propagator::UnionPlus { x, y, z },
            4 => Propagator::IntersectCardAtMost { x, y, limit: rng.gen_range(0..=2) },
            5 => Propagator::AlphaLess { x, y },
            6 => Propagator::VarietySumAtLeast { vars: vec![x, y] },
            _ => Propagator::MeetingCostAtMost { groups: vec![0, 1, 2] },
        };
        if matches!(p, Propagator::Intersection { .. } | Propagator::UnionPlus { .. } if x == y || y == z || x == z) {
            continue;
        }
        if matches!(p, Propagator::IntersectCardAtMost { .. } | Propagator::AlphaLess { .. } if x == y) {
            continue;
        }
        props.push(p);
    }
    let bound = rng.gen_bool(0.5).then(|| rng.gen_range(0..=4));
    Some(SmallModel { u, repr, domains, props, bound })
}

fn holds(m: &SmallModel, vals: &[Multiset]) -> bool {
    m.props.iter().all(|p| match p {
        Propagator::AlphaLess { x, y } => match m.repr {
            Representation::Interval(o) => ref_cmp(o, &vals[*x], &vals[*y]).is_le(),
            Representation::SubsetBounds => vals[*x].occurrences() <= vals[*y].occurrences(),
        },
        other => other.check(vals, m.bound),
    })
}

fn solutions(m: &SmallModel) -> Vec<Vec<Multiset>> {
    let values = all_values(&m.u);
    let members: Vec<Vec<&Multiset>> =
        m.domains.iter().map(|d| values.iter().filter(|v| d.contains(v)).collect()).collect();
    let mut out = Vec::new();
    for a in &members[0] {
        for b in &members[1] {
            for c in &members[2] {
                let vals = vec![(*a).clone(), (*b).clone(), (*c).clone()];
                if holds(m, &vals) {
                    out.push(vals);
                }
            }
        }
    }
    out
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut models, mut violations) = (0, Vec::new());
    let (mut feasible, mut pruned) = (0, 0);
    while models < 1500 {
        let Some(m) = random_model(&mut rng) else { continue };
        models += 1;
        let sols = solutions(&m);
        feasible += usize::from(!sols.is_empty());
        let mut store = Store::new(m.u.clone(), m.domains.clone());
        store.bound = m.bound;
        match fixpoint(&mut store, &m.props) {
            Err(_) if !sols.is_empty() => violations.push(format!("{} wiped out {:?}", m.repr, m.props)),
            Err(_) => {}
            Ok(()) => {
                pruned += usize::from(store.domains != m.domains);
                if let Some(s) = sols.iter().find(|s| !s.iter().zip(&store.domains).all(|(v, d)| d.contains(v))) {
                    violations.push(format!("{} removed {:?} under {:?}", m.repr, s, m.props));
                }
            }
        }
    }
    check(
        violations.is_empty(),
        format!("{models} random models ({feasible} satisfiable, {pruned} pruned), 0 violations"),
        format!("{} violations, first: {}", violations.len(), violations.first().map_or("-", String::as_str)),
    )
}

fn criterion_8() -> Verdict {
    let u = Universe::uniform(5, 10).unwrap();
    let regimes = [
        ("card 10, variety 3", Envelope::full(&u).with_card(10, 10).with_var(3, 3), true),
        ("variety 3", Envelope::full(&u).with_var(3, 3), false),
        ("card 10", Envelope::full(&u).with_card(10, 10), false),
        ("card 8..12, variety 2..3", Envelope::full(&u).with_card(8, 12).with_var(2, 3), false),
    ];
    let t = Instant::now();
    let mut problems = Vec::new();
    let mut csv = String::from("regime,ordering,trial,d_size,closure_size,exact\n");
    for (k, (name, env, both_fixed)) in regimes.iter().enumerate() {
        let cfg = ClosureConfig { trials: 100, seed: 800 + k as u64, inclusion: 0.5 };
        let exp = closure_experiment(&u, env, cfg).unwrap();
        for r in &exp.rows {
            csv.push_str(&format!("{name},{},{},{},{},{}\n", r.ordering, r.trial, r.d_size, r.closure_size, r.exact));
        }
        let size = |trial: usize, o: OrderingId| {
            exp.rows.iter().find(|r| r.trial == trial && r.ordering == o).unwrap().closure_size
        };
        let lvl_ll = (0..100).filter(|&t| size(t, LVL) <= size(t, LL)).count();
        let vll_vl = (0..100).filter(|&t| size(t, VLL) <= size(t, VL)).count();
        if lvl_ll < 100 || vll_vl < 100 {
            problems.push(format!("{name}: lvl<=ll {lvl_ll}/100, vll<=vl {vll_vl}/100"));
        }
        if *both_fixed {
            for s in exp.summary.iter().filter(|s| matches!(s.ordering, LVL | LVC | VLL | VLC)) {
                if s.exact_rate < 1.0 {
                    problems.push(format!("{name}: {} exact rate {}", s.ordering, s.exact_rate));
                }
            }
        }
    }
    let path = out_dir().join("closure_trials.csv");
    fs::write(&path, csv).unwrap();
    let took = t.elapsed();
    if took > Duration::from_secs(600) {
        problems.push(format!("took {took:.2?}"));
    }
    check(
        problems.is_empty(),
        format!("4 regimes x 100 trials hold in {took:.2?}"),
        format!("{} (trials in {})", problems.join("; "), path.display()),
    )
}

fn criterion_9() -> Verdict {
    let reprs: Vec<Representation> =
        ["lvl", "vll", "ll", "vl", "sb"].iter().map(|s| s.parse().unwrap()).collect();
    let limits = Limits { timeout: Some(Duration::from_secs(60)), node_cap: None };
    let fails = |family: Family| -> Result<Vec<u64>, String> {
        let models: Vec<_> = reprs.iter().map(|&r| family.build(r).unwrap()).collect();
        let results = run_many(&models, limits, reprs.len()).unwrap();
        let mut objective = None;
        let mut out = Vec::new();
        for (r, (sol, stats)) in reprs.iter().zip(&results) {
            if stats.status != Status::Optimal {
                return Err(format!("{family} {r}: {}", stats.status));
            }
            let checked = family.validate(sol.as_ref().unwrap()).map_err(|e| format!("{family} {r}: {e}"))?;
            if stats.best_objective != Some(checked as i64) || objective.is_some_and(|o| o != checked) {
                return Err(format!("{family} {r}: objective mismatch"));
            }
            objective = Some(checked);
            out.push(stats.fails);
        }
        Ok(out)
    };
    let steiner = fails(Family::Steiner(SteinerParams { t: 3, k: 4, u: 4, b: 4, v: 2 }))?;
    let golfer = fails(Family::Golfer(GolferParams { w: 3, m: 3, n: 3, g: 2, p: 4, v: 2 }))?;
    let [s_lvl, _, s_ll, _, s_sb] = steiner[..] else { unreachable!() };
    let [_, g_vll, g_ll, _, _] = golfer[..] else { unreachable!() };
    let detail = format!("steiner fails lvl/vll/ll/vl/sb {steiner:?}; golfer {golfer:?}");
    check(s_lvl < s_ll && s_ll < s_sb && g_vll <= g_ll, detail.clone(), format!("fail-count order differs: {detail}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("ordering listings", criterion_1),
        ("closure example", criterion_2),
        ("compactness example", criterion_3),
        ("bounds consistency example", criterion_4),
        ("proposition suite", criterion_5),
        ("oracle equivalence", criterion_6),
        ("propagator soundness", criterion_7),
        ("empirical compactness", criterion_8),
        ("benchmark directionality", criterion_9),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.iter().any(|o| o == &id.to_string() || name.contains(o.as_str())) {
            continue;
        }
        let t = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("criterion {id} ({name}): PASS [{secs:.2}s] {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} ({name}): FAIL [{secs:.2}s] {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
