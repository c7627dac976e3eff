//! Time-consistency audits, the constant-threshold baseline, the static-risk
//! counterexamples, and Monte-Carlo rollout of augmented policies.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dp::{backward_induction, compute_feasibility_bounds, BackupMode, Solution, SolveError, ValueTables};
use crate::fixtures;
use crate::mdp::{policy_paths, HistoryPolicy, Mdp, StateId};
use crate::oracle::{brute_force_opt, brute_force_tail, OracleError};
use crate::policy::{plan_from, AugmentedPolicy, PlanNode, PolicyError, RiskToGoMap};
use crate::risk::{
    eval_dynamic_risk, static_avar_of_total_cost, static_variance_of_constraint_cost,
    total_constraint_cost_distribution, RiskError, RiskMeasureSpec,
};
use crate::TOL;

/// Which augmented states [`audit`] visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditScope {
    /// Nodes of the risk-to-go tree reachable from `(x0, r0)`.
    #[default]
    Reachable,
    /// Additionally every `(k, x, b)` with `b` a breakpoint of `V_k(x, ·)`.
    AllBreakpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditNode {
    pub stage: usize,
    pub state: String,
    /// Path from the root, or `None` for off-path breakpoint nodes.
    pub history: Option<String>,
    pub threshold: f64,
    pub planned_value: f64,
    pub planned_risk: f64,
    /// Optimal value of the tail problem at this threshold (`inf` if infeasible).
    pub resolved_value: f64,
    pub action_planned: String,
    pub actions_resolved: Vec<String>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub nodes: Vec<AuditNode>,
    pub overall: bool,
    pub tolerance: f64,
}

impl AuditReport {
    fn new(nodes: Vec<AuditNode>) -> Self {
        let overall = nodes.iter().all(|n| n.consistent);
        AuditReport {
            nodes,
            overall,
            tolerance: TOL,
        }
    }

    pub fn inconsistent(&self) -> impl Iterator<Item = &AuditNode> {
        self.nodes.iter().filter(|n| !n.consistent)
    }
}

/// Tail value tables re-solved from scratch, one per first stage.
struct TailSolver<'a> {
    mdp: &'a Mdp,
    spec: &'a RiskMeasureSpec,
    tables: BTreeMap<usize, ValueTables>,
}

impl<'a> TailSolver<'a> {
    fn tables(&mut self, k: usize) -> Result<&ValueTables, SolveError> {
        if !self.tables.contains_key(&k) {
            let bounds = compute_feasibility_bounds(self.mdp, self.spec)?;
            let t = backward_induction(self.mdp, self.spec, &bounds, k, BackupMode::Inequality)?;
            self.tables.insert(k, t);
        }
        Ok(&self.tables[&k])
    }

    fn check(&mut self, node: &PlanNode, history: Option<String>) -> Result<AuditNode, SolveError> {
        let mdp = self.mdp;
        let u = node.action.expect("audited nodes carry a decision");
        let planned_value = node.expected_cost(mdp);
        let planned_risk = node.risk(mdp, self.spec);
        let tables = self.tables(node.stage)?;
        let backup = tables.at(node.stage, node.state);
        let resolved_value = backup.value.value_at(node.threshold);
        let optimal = backup.optimal_actions(node.threshold);
        let consistent = (resolved_value - planned_value).abs() <= TOL
            && optimal.contains(&u)
            && planned_risk <= node.threshold + TOL;
        Ok(AuditNode {
            stage: node.stage,
            state: mdp.state_label(node.state).to_string(),
            history,
            threshold: node.threshold,
            planned_value,
            planned_risk,
            resolved_value,
            action_planned: mdp.action_label(u).to_string(),
            actions_resolved: optimal.iter().map(|a| mdp.action_label(*a).to_string()).collect(),
            consistent,
        })
    }
}

/// Re-solves the tail problem at every audited node and compares its optimum
/// with the plan's tail. A node is consistent when the values agree, the
/// planned action is among the tail optimizers, and the planned tail meets
/// the node's threshold.
pub fn audit(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    solution: &Solution,
    policy: &AugmentedPolicy,
    rtg: &RiskToGoMap,
    scope: AuditScope,
) -> Result<AuditReport, SolveError> {
    let mut solver = TailSolver {
        mdp,
        spec,
        tables: BTreeMap::new(),
    };
    let mut nodes = Vec::new();
    for (h, n) in rtg.nodes() {
        if n.action.is_some() {
            nodes.push(solver.check(n, Some(mdp.display_history(&h)))?);
        }
    }
    if scope == AuditScope::AllBreakpoints {
        for k in 0..mdp.horizon() {
            for x in mdp.state_ids() {
                for b in solution.value_function(k, x).breakpoints() {
                    let plan = plan_from(mdp, policy, k, x, b.threshold)
                        .expect("breakpoints are feasible thresholds");
                    nodes.push(solver.check(&plan.root, None)?);
                }
            }
        }
    }
    Ok(AuditReport::new(nodes))
}

/// Plans once at stage 0 (by enumeration) and then re-solves every later
/// reachable node with the original threshold `r0` left unchanged.
pub fn audit_constant_threshold(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    r0: f64,
) -> Result<AuditReport, OracleError> {
    let x0 = mdp.initial_state();
    let plan = brute_force_opt(mdp, spec, x0, r0)?;
    let policy = &plan.minimizers[0];
    let mut nodes = Vec::new();
    for (h, u) in policy.decisions() {
        let tail = policy.tail(h);
        let (planned_value, planned_risk) = tail_cost_and_risk(mdp, spec, &tail)?;
        let stage = h.stage();
        let x = h.last_state();
        let (resolved_value, optimal) = if stage == 0 {
            (plan.value, first_actions(mdp, &plan.minimizers))
        } else {
            match brute_force_tail(mdp, spec, x, stage, r0) {
                Ok(res) => (res.value, first_actions(mdp, &res.minimizers)),
                Err(OracleError::Infeasible { .. }) => (f64::INFINITY, Vec::new()),
                Err(e) => return Err(e),
            }
        };
        let action = mdp.action_label(u).to_string();
        let consistent = (resolved_value - planned_value).abs() <= TOL
            && optimal.contains(&action)
            && planned_risk <= r0 + TOL;
        nodes.push(AuditNode {
            stage,
            state: mdp.state_label(x).to_string(),
            history: Some(mdp.display_history(h)),
            threshold: r0,
            planned_value,
            planned_risk,
            resolved_value,
            action_planned: action,
            actions_resolved: optimal,
            consistent,
        });
    }
    nodes.sort_by(|a, b| a.stage.cmp(&b.stage).then(a.history.cmp(&b.history)));
    Ok(AuditReport::new(nodes))
}

fn first_actions(mdp: &Mdp, policies: &[HistoryPolicy]) -> Vec<String> {
    let mut out: Vec<String> = policies
        .iter()
        .filter_map(|p| p.decide(p.root()))
        .map(|u| mdp.action_label(u).to_string())
        .collect();
    out.sort();
    out.dedup();
    out
}

fn tail_cost_and_risk(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    tail: &HistoryPolicy,
) -> Result<(f64, f64), RiskError> {
    let cost = policy_paths(mdp, tail)?
        .iter()
        .map(|w| w.prob * w.total_objective_cost(mdp))
        .sum();
    let risk = eval_dynamic_risk(mdp, spec, tail, tail.root())?;
    Ok((cost, risk))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariancePolicyRow {
    pub name: String,
    /// Action taken at `s1`.
    pub action: String,
    pub expected_cost: f64,
    pub mean_constraint_cost: f64,
    pub variance: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceDemo {
    pub r0: f64,
    pub policies: Vec<VariancePolicyRow>,
    pub selected: Option<String>,
    /// The selected policy takes the costlier action at `s1`.
    pub seeks_losses: bool,
    pub instance: serde_json::Value,
}

/// Two policies on the variance instance: `π1` (cheap at `s1`) and `π2`
/// (costly at `s1`). Picks the cheapest one whose total-cost variance is at
/// most `r0`.
pub fn demo_variance(r0: f64) -> VarianceDemo {
    let sc = fixtures::variance();
    let mdp = &sc.mdp;
    let s1 = mdp.state_id("s1").expect("fixture state");
    let mut rows = Vec::new();
    for (name, action) in [("π1", "cheap"), ("π2", "costly")] {
        let a = mdp.action_id(action).expect("fixture action");
        let p = HistoryPolicy::markov(mdp, mdp.initial_state(), 0, |_, x| {
            if x == s1 {
                a
            } else {
                mdp.choices(x)[0].action
            }
        })
        .expect("fixture policy");
        let (mean, variance) = static_variance_of_constraint_cost(mdp, &p).expect("fixture policy");
        let expected_cost = policy_paths(mdp, &p)
            .expect("fixture policy")
            .iter()
            .map(|w| w.prob * w.total_objective_cost(mdp))
            .sum();
        rows.push(VariancePolicyRow {
            name: name.to_string(),
            action: action.to_string(),
            expected_cost,
            mean_constraint_cost: mean,
            variance,
            feasible: variance <= r0 + TOL,
        });
    }
    let selected = rows
        .iter()
        .filter(|r| r.feasible)
        .min_by(|a, b| a.expected_cost.total_cmp(&b.expected_cost));
    let seeks_losses = selected.is_some_and(|r| r.action == "costly");
    VarianceDemo {
        r0,
        selected: selected.map(|r| r.name.clone()),
        seeks_losses,
        policies: rows,
        instance: sc.to_document(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvarOutcome {
    pub leaf: String,
    pub prob: f64,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvarDemo {
    pub alpha: f64,
    pub threshold: f64,
    pub outcomes: Vec<AvarOutcome>,
    pub root_avar: f64,
    /// `(state, AVaR of the total cost from that state)` at stage 1.
    pub stage1_avar: Vec<(String, f64)>,
    pub root_acceptable: bool,
    pub stage1_acceptable: bool,
    pub instance: serde_json::Value,
}

/// The AVaR counterexample with the default leaf costs.
pub fn demo_avar() -> AvarDemo {
    demo_avar_with(fixtures::AVAR_DEFAULT_COSTS)
}

/// Static AVaR at level 1/3 of the total constraint cost on the AVaR tree,
/// from the root and from each stage-1 state, against threshold 0.
pub fn demo_avar_with(terminal_costs: [f64; 4]) -> AvarDemo {
    let alpha = 1.0 / 3.0;
    let threshold = 0.0;
    let mdp = fixtures::avar_tree(terminal_costs);
    let x0 = mdp.initial_state();
    let p = HistoryPolicy::markov(&mdp, x0, 0, |_, x| mdp.choices(x)[0].action)
        .expect("single-action tree");
    let root = p.root().clone();
    let root_avar = static_avar_of_total_cost(&mdp, &p, alpha, &root).expect("valid level");
    let mut stage1_avar = Vec::new();
    let go = mdp.choices(x0)[0].action;
    for label in ["s1", "s2"] {
        let h = root.extended(go, mdp.state_id(label).expect("tree state"));
        let v = static_avar_of_total_cost(&mdp, &p, alpha, &h).expect("valid level");
        stage1_avar.push((label.to_string(), v));
    }
    let outcomes = policy_paths(&mdp, &p)
        .expect("single-action tree")
        .iter()
        .map(|w| AvarOutcome {
            leaf: mdp.state_label(w.history.states[2]).to_string(),
            prob: w.prob,
            total_cost: w.total_constraint_cost(&mdp),
        })
        .collect();
    debug_assert_eq!(
        total_constraint_cost_distribution(&mdp, &p).map(|d| d.len()).ok(),
        Some(4)
    );
    let scenario = crate::scenario::Scenario {
        name: "avar".to_string(),
        risk: RiskMeasureSpec::uniform(crate::risk::OneStepMeasure::CVaR { alpha }, mdp.horizon()),
        mdp,
        r0: threshold,
        reference: None,
    };
    AvarDemo {
        alpha,
        threshold,
        outcomes,
        root_acceptable: root_avar <= threshold + TOL,
        stage1_acceptable: stage1_avar.iter().all(|(_, v)| *v <= threshold + TOL),
        root_avar,
        stage1_avar,
        instance: scenario.to_document(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    /// `r_0, …, r_N` along the trajectory.
    pub thresholds: Vec<f64>,
    pub objective_cost: f64,
    pub constraint_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutReport {
    pub n: usize,
    pub seed: u64,
    pub mean_objective_cost: f64,
    pub mean_constraint_cost: f64,
    pub std_constraint_cost: f64,
    /// `std / sqrt(n)` of the constraint cost.
    pub std_error: f64,
    /// Expected objective cost of the plan.
    pub analytic_objective_cost: f64,
    /// Nested risk of the plan from the root.
    pub analytic_risk: f64,
    /// Smallest `r_k - R_min(x_k)` over all visited decision nodes.
    pub min_floor_slack: f64,
    /// Smallest `r_N` over all trajectories.
    pub min_terminal_threshold: f64,
    /// Largest gap between online thresholds and the risk-to-go tree.
    pub max_tree_deviation: f64,
    pub trajectories: Vec<Trajectory>,
}

/// Samples `n` trajectories from `(x0, r0)`, choosing actions and successor
/// thresholds online from the augmented policy. Sampling uses ChaCha8
/// seeded with `seed` and inverse-CDF draws over successors in label order,
/// so results are identical across platforms.
#[allow(clippy::too_many_arguments)]
pub fn rollout(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    policy: &AugmentedPolicy,
    rtg: &RiskToGoMap,
    x0: StateId,
    r0: f64,
    n: usize,
    seed: u64,
) -> Result<RolloutReport, PolicyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = mdp.horizon();
    let mut trajectories = Vec::with_capacity(n);
    let (mut mean_c, mut mean_d, mut m2_d) = (0.0, 0.0, 0.0);
    let mut min_floor_slack = f64::INFINITY;
    let mut min_terminal = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    for i in 0..n.max(1) {
        let mut x = x0;
        let mut r = r0;
        let mut node = Some(&rtg.root);
        let mut t = Trajectory {
            states: vec![mdp.state_label(x).to_string()],
            actions: Vec::new(),
            thresholds: vec![r],
            objective_cost: 0.0,
            constraint_cost: 0.0,
        };
        for k in 0..horizon {
            if let Some(nd) = node {
                max_dev = max_dev.max((nd.threshold - r).abs());
            }
            min_floor_slack = min_floor_slack.min(r - policy.floor(k, x));
            let d = policy.decide(k, x, r)?;
            let choice = mdp.choice(x, d.action).expect("policy actions are admissible");
            let draw: f64 = rng.gen();
            let mut acc = 0.0;
            let mut j = choice.successors.len() - 1;
            for (i, &(_, p)) in choice.successors.iter().enumerate() {
                acc += p;
                if draw < acc {
                    j = i;
                    break;
                }
            }
            let (y, _) = choice.successors[j];
            t.objective_cost += choice.cost_c;
            t.constraint_cost += choice.cost_d;
            t.actions.push(mdp.action_label(d.action).to_string());
            t.states.push(mdp.state_label(y).to_string());
            r = d.successor_thresholds[j].1;
            t.thresholds.push(r);
            node = node
                .filter(|nd| nd.action == Some(d.action))
                .and_then(|nd| nd.children.iter().find(|e| e.node.state == y))
                .map(|e| &e.node);
            x = y;
        }
        if let Some(nd) = node {
            max_dev = max_dev.max((nd.threshold - r).abs());
        } else {
            max_dev = f64::INFINITY;
        }
        min_terminal = min_terminal.min(r);
        let count = (i + 1) as f64;
        mean_c += (t.objective_cost - mean_c) / count;
        let delta = t.constraint_cost - mean_d;
        mean_d += delta / count;
        m2_d += delta * (t.constraint_cost - mean_d);
        trajectories.push(t);
    }
    let n_eff = trajectories.len();
    let std = if n_eff > 1 {
        (m2_d / (n_eff - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RolloutReport {
        n: n_eff,
        seed,
        mean_objective_cost: mean_c,
        mean_constraint_cost: mean_d,
        std_constraint_cost: std,
        std_error: std / (n_eff as f64).sqrt(),
        analytic_objective_cost: rtg.root.expected_cost(mdp),
        analytic_risk: rtg.root.risk(mdp, spec),
        min_floor_slack,
        min_terminal_threshold: min_terminal,
        max_tree_deviation: max_dev,
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::solve;
    use crate::mdp::History;
    use crate::policy::extract_policy;

    fn solved(name: &str, r0: f64) -> (crate::scenario::Scenario, Solution, AugmentedPolicy, RiskToGoMap) {
        let sc = fixtures::by_name(name).unwrap();
        let sol = solve(&sc.mdp, &sc.risk, r0).unwrap();
        let (pol, rtg) = extract_policy(&sol, sc.mdp.initial_state(), r0).unwrap();
        (sc, sol, pol, rtg)
    }

    #[test]
    fn solver_plan_passes_audit() {
        let (sc, sol, pol, rtg) = solved("squander_save", 0.3);
        let rep = audit(&sc.mdp, &sc.risk, &sol, &pol, &rtg, AuditScope::Reachable).unwrap();
        assert!(rep.overall);
        assert_eq!(rep.nodes.len(), 3);
        let all = audit(&sc.mdp, &sc.risk, &sol, &pol, &rtg, AuditScope::AllBreakpoints).unwrap();
        assert!(all.overall);
        assert!(all.nodes.len() > rep.nodes.len());
    }

    #[test]
    fn trivial_plan_passes_audit() {
        let (sc, sol, pol, rtg) = solved("trivial", 0.0);
        assert!(audit(&sc.mdp, &sc.risk, &sol, &pol, &rtg, AuditScope::Reachable).unwrap().overall);
    }

    #[test]
    fn constant_threshold_flags_win() {
        let sc = fixtures::squander_save();
        let rep = audit_constant_threshold(&sc.mdp, &sc.risk, 0.3).unwrap();
        assert!(!rep.overall);
        let bad: Vec<_> = rep.inconsistent().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].state, "win");
        assert_eq!(bad[0].action_planned, "squander");
        assert_eq!(bad[0].actions_resolved, vec!["save".to_string()]);
        assert!((bad[0].resolved_value + 30.0).abs() < 1e-12);
    }

    #[test]
    fn constant_threshold_inactive_constraint() {
        let sc = fixtures::squander_save();
        assert!(audit_constant_threshold(&sc.mdp, &sc.risk, 1.5).unwrap().overall);
        let t = fixtures::trivial();
        assert!(audit_constant_threshold(&t.mdp, &t.risk, 0.0).unwrap().overall);
    }

    #[test]
    fn variance_demo() {
        let d = demo_variance(10.0);
        assert_eq!(d.policies[0].variance, 25.0);
        assert_eq!(d.policies[1].variance, 0.0);
        assert_eq!(d.selected.as_deref(), Some("π2"));
        assert!(d.seeks_losses);
        let d = demo_variance(25.0);
        assert!(d.policies[0].feasible);
        assert_eq!(d.selected.as_deref(), Some("π1"));
        assert!(!d.seeks_losses);
        assert_eq!(demo_variance(1000.0).selected.as_deref(), Some("π1"));
    }

    #[test]
    fn avar_demo() {
        let d = demo_avar();
        assert!(d.root_avar > 0.0);
        assert!(!d.root_acceptable);
        assert!(d.stage1_acceptable);
        assert!((d.root_avar - 0.125).abs() < 1e-12);
        assert!((d.stage1_avar[0].1 + 0.25).abs() < 1e-12);
        assert!((d.stage1_avar[1].1 + 1.0).abs() < 1e-12);
        let neg = demo_avar_with([-1.0; 4]);
        assert!(neg.root_acceptable && neg.stage1_acceptable);
        let pos = demo_avar_with([1.0; 4]);
        assert!(!pos.root_acceptable && !pos.stage1_acceptable);
    }

    #[test]
    fn rollout_is_reproducible() {
        let (sc, _, pol, rtg) = solved("squander_save", 0.3);
        let x0 = sc.mdp.initial_state();
        let a = rollout(&sc.mdp, &sc.risk, &pol, &rtg, x0, 0.3, 500, 7).unwrap();
        let b = rollout(&sc.mdp, &sc.risk, &pol, &rtg, x0, 0.3, 500, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_tree_deviation, 0.0);
        assert!(a.min_floor_slack >= -1e-9);
        assert!(a.min_terminal_threshold >= -1e-9);
    }

    #[test]
    fn rollout_single_sample() {
        let (sc, _, pol, rtg) = solved("squander_save", 0.3);
        let rep = rollout(&sc.mdp, &sc.risk, &pol, &rtg, sc.mdp.initial_state(), 0.3, 1, 0).unwrap();
        assert_eq!(rep.trajectories.len(), 1);
        assert_eq!(rep.trajectories[0].thresholds.len(), 3);
        assert!(*rep.trajectories[0].thresholds.last().unwrap() >= -1e-9);
    }

    #[test]
    fn rollout_on_deterministic_chain_is_exact() {
        let (sc, _, pol, rtg) = solved("trivial", 0.0);
        let rep = rollout(&sc.mdp, &sc.risk, &pol, &rtg, sc.mdp.initial_state(), 0.0, 50, 3).unwrap();
        assert_eq!(rep.mean_constraint_cost, rep.analytic_risk);
        assert_eq!(rep.mean_objective_cost, rep.analytic_objective_cost);
    }

    #[test]
    fn audit_history_is_reported() {
        let sc = fixtures::squander_save();
        let rep = audit_constant_threshold(&sc.mdp, &sc.risk, 0.3).unwrap();
        let root = History::root(sc.mdp.initial_state(), 0);
        assert_eq!(rep.nodes[0].history.as_deref(), Some(sc.mdp.display_history(&root).as_str()));
    }
}
