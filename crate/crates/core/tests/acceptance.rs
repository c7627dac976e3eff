//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use tcrisk::consistency::{audit, demo_avar, demo_variance, rollout, AuditScope};
use tcrisk::dp::{backward_induction, compute_feasibility_bounds, solve, BackupMode, SolveError};
use tcrisk::fixtures::{self, measure_family, random_mdp, random_threshold, RandomInstanceConfig};
use tcrisk::mdp::{History, HistoryPolicy, Mdp};
use tcrisk::oracle::{brute_force_opt, OracleError};
use tcrisk::policy::{extract_policy, martingale_check, risk_to_go_from_policy};
use tcrisk::risk::{OneStepMeasure, RiskMeasureSpec};
use tcrisk::report::num;
use tcrisk::staircase::ThresholdValueFunction;

const TOL: f64 = 1e-9;
const SEEDS: u64 = 120;
const THRESHOLDS_PER_INSTANCE: usize = 3;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tcrisk"))
        .args(args)
        .output()
        .expect("run tcrisk");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn field<'a>(doc: &'a Value, section: &str, key: &str) -> &'a Value {
    &doc["sections"][section]["fields"][key]
}

fn staircase(f: &ThresholdValueFunction) -> Vec<(f64, f64)> {
    f.breakpoints().iter().map(|b| (b.threshold, b.value)).collect()
}

fn same_points(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(p, q)| (p.0 - q.0).abs() <= TOL && (p.1 - q.1).abs() <= TOL)
}

fn markov_on(mdp: &Mdp, choices: &[(&str, &str)]) -> HistoryPolicy {
    let map: Vec<_> = choices
        .iter()
        .map(|(s, a)| (mdp.state_id(s).unwrap(), mdp.action_id(a).unwrap()))
        .collect();
    HistoryPolicy::markov(mdp, mdp.initial_state(), 0, |_, x| {
        map.iter()
            .find(|(y, _)| *y == x)
            .map_or(mdp.choices(x)[0].action, |(_, u)| *u)
    })
    .unwrap()
}

/// Random instances `(seed, mdp, measure)` for the property criteria.
fn family() -> Vec<(u64, Mdp, OneStepMeasure)> {
    let cfg = RandomInstanceConfig::default();
    let mut out = Vec::new();
    for seed in 0..SEEDS {
        let mdp = random_mdp(seed, &cfg);
        for m in measure_family() {
            out.push((seed, mdp.clone(), m));
        }
    }
    out
}

fn thresholds(seed: u64, mdp: &Mdp, spec: &RiskMeasureSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d));
    (0..THRESHOLDS_PER_INSTANCE)
        .map(|_| random_threshold(mdp, spec, &mut rng))
        .collect()
}

fn c1_stage_one_value_functions() -> Check {
    let sc = fixtures::squander_save();
    let sol = solve(&sc.mdp, &sc.risk, sc.r0).map_err(|e| e.to_string())?;
    let win = sc.mdp.state_id("win").unwrap();
    let lose = sc.mdp.state_id("lose").unwrap();
    let vw = sol.value_function(1, win);
    let vl = sol.value_function(1, lose);
    ensure(
        same_points(&staircase(vw), &[(0.05, -30.0), (1.0, -50.0)]),
        format!("V_1(win) = {:?}", staircase(vw)),
    )?;
    ensure(
        same_points(&staircase(vl), &[(0.2, -10.0), (0.4, -20.0)]),
        format!("V_1(lose) = {:?}", staircase(vl)),
    )?;
    let probes = [
        (vw, 0.049, f64::INFINITY),
        (vw, 0.05, -30.0),
        (vw, 0.999, -30.0),
        (vw, 1.0, -50.0),
        (vw, 7.0, -50.0),
        (vl, 0.199, f64::INFINITY),
        (vl, 0.2, -10.0),
        (vl, 0.399, -10.0),
        (vl, 0.4, -20.0),
        (vl, 3.0, -20.0),
    ];
    for (f, r, want) in probes {
        let got = f.value_at(r);
        ensure(
            got == want || (got - want).abs() <= TOL,
            format!("V({r}) = {got}, expected {want}"),
        )?;
    }
    Ok("V_1(win) = {(0.05,-30),(1,-50)}, V_1(lose) = {(0.2,-10),(0.4,-20)}".into())
}

fn c2_save_save_risk_to_go() -> Check {
    let sc = fixtures::squander_save();
    let p = markov_on(&sc.mdp, &[("win", "save"), ("lose", "save")]);
    let rtg = risk_to_go_from_policy(&sc.mdp, &sc.risk, &p, 0.3).map_err(|e| e.to_string())?;
    let mut win = None;
    let mut lose = None;
    for e in &rtg.root.children {
        match sc.mdp.state_label(e.node.state) {
            "win" => win = Some(e.node.threshold),
            "lose" => lose = Some(e.node.threshold),
            _ => {}
        }
    }
    let (w, l) = (win.ok_or("no win node")?, lose.ok_or("no lose node")?);
    ensure(
        (w - 0.165).abs() <= TOL && (l - 0.315).abs() <= TOL,
        format!("got ({w}, {l})"),
    )?;
    Ok(format!("r~_1(win) = {}, r~_1(lose) = {}", num(w), num(l)))
}

fn c3_solver_matches_oracle_and_reports_reference() -> Check {
    let sc = fixtures::squander_save();
    let sol = solve(&sc.mdp, &sc.risk, 0.3).map_err(|e| e.to_string())?;
    let orc = brute_force_opt(&sc.mdp, &sc.risk, sc.mdp.initial_state(), 0.3)
        .map_err(|e| e.to_string())?;
    ensure(
        (sol.value - orc.value).abs() <= TOL,
        format!("solver {} vs oracle {}", sol.value, orc.value),
    )?;
    let (code, out, err) = cli(&[
        "solve",
        "fixtures/squander_save",
        "--r0",
        "0.3",
        "--oracle",
        "--format",
        "structured",
    ]);
    ensure(code == 0, format!("exit {code}: {err}"))?;
    let doc: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    ensure(field(&doc, "oracle", "match") == &Value::Bool(true), "report match flag not set")?;
    ensure(
        field(&doc, "reference", "published_value").as_f64() == Some(-12.0),
        "report lacks the published -12",
    )?;
    let computed = field(&doc, "reference", "computed_value").as_f64().unwrap_or(f64::NAN);
    let oracle = field(&doc, "oracle", "value").as_f64().unwrap_or(f64::NAN);
    ensure(
        (computed - oracle).abs() <= TOL,
        format!("report computed {computed} vs oracle {oracle}"),
    )?;
    ensure(
        field(&doc, "reference", "discrepancy").is_string(),
        "report lacks a discrepancy note",
    )?;
    Ok(format!(
        "solver {} = oracle {}; report shows published -12 with discrepancy note",
        sol.value, orc.value
    ))
}

fn c4_constant_threshold_inconsistency() -> Check {
    let (code, out, err) = cli(&["demo", "squander", "--format", "structured"]);
    ensure(code == 0, format!("exit {code}: {err}"))?;
    let doc: Value = serde_json::from_str(&out).map_err(|e| e.to_string())?;
    let sec = |s: &str| &doc["sections"][s];
    ensure(
        sec("solver_plan")["fields"]["overall_consistent"] == Value::Bool(true),
        "solver plan failed audit",
    )?;
    let nodes = sec("solver_plan")["tables"]["nodes"].as_array().ok_or("no audit table")?;
    ensure(
        nodes.iter().all(|n| n["consistent"] == Value::Bool(true)),
        "a solver node is inconsistent",
    )?;
    ensure(
        sec("constant_threshold")["fields"]["overall_consistent"] == Value::Bool(false),
        "constant-threshold plan not flagged",
    )?;
    let bad: Vec<&Value> = sec("constant_threshold")["tables"]["nodes"]
        .as_array()
        .ok_or("no baseline table")?
        .iter()
        .filter(|n| n["consistent"] == Value::Bool(false))
        .collect();
    ensure(bad.len() == 1, format!("{} flagged nodes", bad.len()))?;
    let n = bad[0];
    ensure(
        n["state"] == "win" && n["stage"] == 1 && n["action_planned"] == "squander" && n["actions_resolved"] == "save",
        format!("flagged node {n}"),
    )?;
    Ok(format!(
        "solver plan consistent at {} nodes; baseline flags win (stage-0 squander vs stage-1 save)",
        nodes.len()
    ))
}

fn c5_variance_demo() -> Check {
    let d = demo_variance(10.0);
    ensure(d.policies[0].variance == 25.0, format!("var(π1) = {}", d.policies[0].variance))?;
    ensure(d.policies[1].variance == 0.0, format!("var(π2) = {}", d.policies[1].variance))?;
    let mut r0s: Vec<f64> = (0..100).map(|i| i as f64 * 0.25).collect();
    r0s.extend([24.9, 24.999, 25.0 - 1e-6]);
    for r0 in r0s {
        let d = demo_variance(r0);
        ensure(
            d.selected.as_deref() == Some("π2") && d.seeks_losses,
            format!("r0 = {r0}: selected {:?}", d.selected),
        )?;
    }
    let at = demo_variance(25.0);
    ensure(at.policies[0].feasible, "π1 infeasible at r0 = 25")?;
    Ok("var(π1) = 25, var(π2) = 0, π2 selected for all 103 sampled r0 < 25".into())
}

/// AVaR by direct tail averaging: worst `1 - alpha` mass, split atom at the cut.
fn tail_average(mut outcomes: Vec<(f64, f64)>, alpha: f64) -> f64 {
    outcomes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut need = 1.0 - alpha;
    let mut acc = 0.0;
    for (p, v) in outcomes {
        let w = p.min(need);
        acc += w * v;
        need -= w;
        if need <= 0.0 {
            break;
        }
    }
    acc / (1.0 - alpha)
}

/// AVaR by midpoint quadrature of the quantile function over `(alpha, 1)`.
fn quantile_integral(mut outcomes: Vec<(f64, f64)>, alpha: f64) -> f64 {
    outcomes.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let steps = 300_000;
    let h = (1.0 - alpha) / steps as f64;
    let mut sum = 0.0;
    for i in 0..steps {
        let tau = alpha + (i as f64 + 0.5) * h;
        let mut cum = 0.0;
        let mut q = outcomes.last().unwrap().1;
        for &(p, v) in &outcomes {
            cum += p;
            if tau <= cum {
                q = v;
                break;
            }
        }
        sum += q * h;
    }
    sum / (1.0 - alpha)
}

fn c6_avar_demo() -> Check {
    let d = demo_avar();
    let c = fixtures::AVAR_DEFAULT_COSTS;
    let all: Vec<(f64, f64)> = c.iter().map(|v| (0.25, *v)).collect();
    let s1 = vec![(0.5, c[0]), (0.5, c[1])];
    let s2 = vec![(0.5, c[2]), (0.5, c[3])];
    let alpha = 1.0 / 3.0;
    let (root, a1, a2) = (
        tail_average(all.clone(), alpha),
        tail_average(s1.clone(), alpha),
        tail_average(s2.clone(), alpha),
    );
    ensure(
        (d.root_avar - root).abs() <= TOL,
        format!("root {} vs brute force {root}", d.root_avar),
    )?;
    ensure((d.stage1_avar[0].1 - a1).abs() <= TOL, "s1 AVaR mismatch")?;
    ensure((d.stage1_avar[1].1 - a2).abs() <= TOL, "s2 AVaR mismatch")?;
    for (outcomes, v) in [(all, root), (s1, a1), (s2, a2)] {
        let q = quantile_integral(outcomes, alpha);
        ensure((q - v).abs() <= 1e-4, format!("quadrature {q} vs {v}"))?;
    }
    ensure(root > 0.0 && a1 <= 0.0 && a2 <= 0.0, format!("root {root}, s1 {a1}, s2 {a2}"))?;
    ensure(!d.root_acceptable && d.stage1_acceptable, "acceptability flags wrong")?;
    Ok(format!(
        "root AVaR_1/3 = {} > 0; from s1 {}, from s2 {} (<= 0)",
        num(root),
        num(a1),
        num(a2)
    ))
}

fn c7_operator_equality(fam: &[(u64, Mdp, OneStepMeasure)]) -> Check {
    let mut checked = 0;
    let mut most = 0;
    for (seed, mdp, m) in fam {
        let spec = RiskMeasureSpec::uniform(*m, mdp.horizon());
        let bounds = compute_feasibility_bounds(mdp, &spec).map_err(|e| e.to_string())?;
        let a = backward_induction(mdp, &spec, &bounds, 0, BackupMode::Inequality)
            .map_err(|e| e.to_string())?;
        let b = backward_induction(mdp, &spec, &bounds, 0, BackupMode::Equality)
            .map_err(|e| e.to_string())?;
        for k in 0..=mdp.horizon() {
            for x in mdp.state_ids() {
                let (fa, fb) = (&a.at(k, x).value, &b.at(k, x).value);
                most = most.max(fa.breakpoints().len());
                ensure(
                    fa.approx_eq(fb, TOL),
                    format!("seed {seed} {} stage {k} state {}: {:?} vs {:?}", m.name(), x.0, staircase(fa), staircase(fb)),
                )?;
            }
        }
        checked += 1;
    }
    Ok(format!(
        "{checked} instance/measure pairs, all staircases identical (up to {most} breakpoints)"
    ))
}

fn c8_oracle_equivalence(fam: &[(u64, Mdp, OneStepMeasure)]) -> Check {
    let (mut feasible, mut infeasible) = (0, 0);
    for (seed, mdp, m) in fam {
        let spec = RiskMeasureSpec::uniform(*m, mdp.horizon());
        for r0 in thresholds(*seed, mdp, &spec) {
            let dp = solve(mdp, &spec, r0);
            let orc = brute_force_opt(mdp, &spec, mdp.initial_state(), r0);
            match (dp, orc) {
                (Ok(s), Ok(o)) => {
                    ensure(
                        (s.value - o.value).abs() <= TOL,
                        format!("seed {seed} {} r0 {r0}: dp {} oracle {}", m.name(), s.value, o.value),
                    )?;
                    feasible += 1;
                }
                (Err(SolveError::Infeasible { .. }), Err(OracleError::Infeasible { .. })) => infeasible += 1,
                (d, o) => {
                    return Err(format!(
                        "seed {seed} {} r0 {r0}: dp {:?} vs oracle {:?}",
                        m.name(),
                        d.map(|s| s.value),
                        o.map(|o| o.value)
                    ))
                }
            }
        }
    }
    Ok(format!("{feasible} feasible matches within 1e-9, {infeasible} infeasible agreements"))
}

fn c9_audit(fam: &[(u64, Mdp, OneStepMeasure)]) -> Check {
    let (mut plans, mut nodes) = (0, 0);
    for (seed, mdp, m) in fam {
        let spec = RiskMeasureSpec::uniform(*m, mdp.horizon());
        for r0 in thresholds(*seed, mdp, &spec) {
            let Ok(sol) = solve(mdp, &spec, r0) else { continue };
            let (pol, rtg) = extract_policy(&sol, mdp.initial_state(), r0).map_err(|e| e.to_string())?;
            let rep = audit(mdp, &spec, &sol, &pol, &rtg, AuditScope::Reachable).map_err(|e| e.to_string())?;
            if !rep.overall {
                let bad = rep.inconsistent().next().unwrap();
                return Err(format!("seed {seed} {} r0 {r0}: {bad:?}", m.name()));
            }
            plans += 1;
            nodes += rep.nodes.len();
        }
    }
    Ok(format!("{plans} plans, {nodes} reachable nodes, all consistent"))
}

fn c10_martingale(fam: &[(u64, Mdp, OneStepMeasure)]) -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut check = |mdp: &Mdp, spec: &RiskMeasureSpec, r0: f64, label: &str| -> Result<(), String> {
        let sol = solve(mdp, spec, r0).map_err(|e| format!("{label}: {e}"))?;
        let (_, rtg) = extract_policy(&sol, mdp.initial_state(), r0).map_err(|e| e.to_string())?;
        let hp = rtg.to_history_policy(mdp).map_err(|e| e.to_string())?;
        let dev = martingale_check(mdp, spec, &hp, &rtg);
        let planned = risk_to_go_from_policy(mdp, spec, &hp, r0).map_err(|e| e.to_string())?;
        let dev2 = martingale_check(mdp, spec, &hp, &planned);
        worst = worst.max(dev).max(dev2);
        count += 1;
        ensure(dev <= TOL && dev2 <= TOL, format!("{label}: deviation {dev} / {dev2}"))
    };
    for name in fixtures::NAMES {
        let sc = fixtures::by_name(name).unwrap();
        let bounds = compute_feasibility_bounds(&sc.mdp, &sc.risk).unwrap();
        let x0 = sc.mdp.initial_state();
        for r0 in [sc.r0, bounds.lower(0, x0), bounds.upper(0, x0) + 1.0] {
            if r0 >= bounds.lower(0, x0) - TOL {
                check(&sc.mdp, &sc.risk, r0, name)?;
            }
        }
    }
    let sc = fixtures::squander_save();
    let p = markov_on(&sc.mdp, &[("win", "save"), ("lose", "save")]);
    let rtg = risk_to_go_from_policy(&sc.mdp, &sc.risk, &p, 0.3).map_err(|e| e.to_string())?;
    let dev = martingale_check(&sc.mdp, &sc.risk, &p, &rtg);
    ensure(dev <= TOL, format!("save/save deviation {dev}"))?;
    for (seed, mdp, m) in fam {
        let spec = RiskMeasureSpec::uniform(*m, mdp.horizon());
        for r0 in thresholds(*seed, mdp, &spec) {
            let floor = compute_feasibility_bounds(mdp, &spec).unwrap().lower(0, mdp.initial_state());
            if r0 >= floor - TOL {
                check(mdp, &spec, r0, &format!("seed {seed} {}", m.name()))?;
            }
        }
    }
    Ok(format!("{count} plans, max deviation {worst:e}"))
}

fn c11_rollout_feasibility() -> Check {
    let sc = fixtures::squander_save();
    let (mdp, spec, r0) = (&sc.mdp, &sc.risk, sc.r0);
    let x0 = mdp.initial_state();
    let sol = solve(mdp, spec, r0).map_err(|e| e.to_string())?;
    let (pol, rtg) = extract_policy(&sol, x0, r0).map_err(|e| e.to_string())?;
    let rep = rollout(mdp, spec, &pol, &rtg, x0, r0, 100_000, 7).map_err(|e| e.to_string())?;
    ensure(rep.trajectories.len() == 100_000, "wrong trajectory count")?;
    let bounds = &sol.bounds;
    for (i, t) in rep.trajectories.iter().enumerate() {
        for (k, (label, r)) in t.states.iter().zip(&t.thresholds).enumerate() {
            let x = mdp.state_id(label).unwrap();
            ensure(
                *r >= bounds.lower(k, x) - TOL,
                format!("trajectory {i} stage {k}: r = {r} below floor {}", bounds.lower(k, x)),
            )?;
        }
        let last = *t.thresholds.last().unwrap();
        ensure(last >= -TOL, format!("trajectory {i}: r_N = {last}"))?;
    }
    let p = rtg.to_history_policy(mdp).map_err(|e| e.to_string())?;
    let analytic = tcrisk::risk::eval_dynamic_risk(mdp, spec, &p, &History::root(x0, 0))
        .map_err(|e| e.to_string())?;
    let gap = (rep.mean_constraint_cost - analytic).abs();
    ensure(
        gap <= 3.0 * rep.std_error,
        format!("mean {} vs R {analytic}: gap {gap} > 3 SE {}", rep.mean_constraint_cost, 3.0 * rep.std_error),
    )?;
    ensure(analytic <= r0 + TOL, format!("plan risk {analytic} above r0"))?;
    Ok(format!(
        "100000 trajectories feasible; mean constraint cost {:.5} vs R = {analytic} (3 SE = {:.5})",
        rep.mean_constraint_cost,
        3.0 * rep.std_error
    ))
}

fn random_atoms(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.gen_range(1..=6);
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64)).collect();
    if rng.gen_bool(0.2) {
        w[0] = 0.0;
    }
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        return vec![1.0];
    }
    w.iter().map(|x| x / s).collect()
}

fn random_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
}

fn eval(m: &OneStepMeasure, p: &[f64], v: &[f64]) -> f64 {
    let atoms: Vec<(f64, f64)> = p.iter().copied().zip(v.iter().copied()).collect();
    m.evaluate(&atoms)
}

fn c12_risk_axioms() -> Check {
    const SAMPLES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let kinds = ["expectation", "cvar", "worst_case", "semideviation"];
    for kind in kinds {
        for axiom in ["convexity", "monotonicity", "translation", "homogeneity"] {
            for i in 0..SAMPLES {
                let m = match kind {
                    "expectation" => OneStepMeasure::Expectation,
                    "cvar" => OneStepMeasure::CVaR {
                        alpha: rng.gen_range(0.001..0.999),
                    },
                    "worst_case" => OneStepMeasure::WorstCase,
                    _ => OneStepMeasure::MeanUpperSemideviation {
                        c: rng.gen_range(0.0..=1.0),
                    },
                };
                let p = random_atoms(&mut rng);
                let z = random_values(&mut rng, p.len());
                let w = random_values(&mut rng, p.len());
                let ok = match axiom {
                    "convexity" => {
                        let l: f64 = rng.gen_range(0.0..=1.0);
                        let mix: Vec<f64> = z.iter().zip(&w).map(|(a, b)| l * a + (1.0 - l) * b).collect();
                        eval(&m, &p, &mix) <= l * eval(&m, &p, &z) + (1.0 - l) * eval(&m, &p, &w) + TOL
                    }
                    "monotonicity" => {
                        let up: Vec<f64> = z.iter().map(|a| a + rng.gen_range(0.0..3.0)).collect();
                        eval(&m, &p, &z) <= eval(&m, &p, &up) + TOL
                    }
                    "translation" => {
                        let a: f64 = rng.gen_range(-10.0..10.0);
                        let shifted: Vec<f64> = w.iter().map(|v| v + a).collect();
                        (eval(&m, &p, &shifted) - (a + eval(&m, &p, &w))).abs() <= TOL
                    }
                    _ => {
                        let l: f64 = rng.gen_range(0.0..5.0);
                        let scaled: Vec<f64> = z.iter().map(|v| l * v).collect();
                        (eval(&m, &p, &scaled) - l * eval(&m, &p, &z)).abs() <= TOL
                    }
                };
                ensure(ok, format!("{kind} fails {axiom} on sample {i}: p {p:?} z {z:?} w {w:?}"))?;
            }
        }
    }
    Ok(format!("4 measures x 4 axioms x {SAMPLES} samples"))
}

type Criterion<'a> = Box<dyn Fn() -> Check + 'a>;

fn main() -> ExitCode {
    let start = Instant::now();
    let fam = family();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("stage-1 value functions of squander-save", Box::new(c1_stage_one_value_functions)),
        ("save/save risk-to-go at r0 = 0.3", Box::new(c2_save_save_risk_to_go)),
        ("solver optimum equals oracle; report shows published value", Box::new(c3_solver_matches_oracle_and_reports_reference)),
        ("constant-threshold plan inconsistent, solver plan consistent", Box::new(c4_constant_threshold_inconsistency)),
        ("variance demo", Box::new(c5_variance_demo)),
        ("AVaR demo", Box::new(c6_avar_demo)),
        ("inequality and equality backups agree", Box::new(|| c7_operator_equality(&fam))),
        ("solver matches oracle on random instances", Box::new(|| c8_oracle_equivalence(&fam))),
        ("solver plans pass audit on random instances", Box::new(|| c9_audit(&fam))),
        ("martingale identity", Box::new(|| c10_martingale(&fam))),
        ("rollout feasibility and mean constraint cost", Box::new(c11_rollout_feasibility)),
        ("risk-measure axioms", Box::new(c12_risk_axioms)),
    ];
    let prev = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    panic::set_hook(prev);
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
