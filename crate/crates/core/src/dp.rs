//! Backward induction on the augmented state `(x, r)`.
//!
//! For each stage and state the value function over the threshold `r` is an
//! exact staircase. A backup enumerates, for every admissible action, every
//! assignment of successor thresholds drawn from the successors' breakpoints.
//! Each assignment has an objective `c + Σ Q·V_next` and an activation
//! threshold `d + ρ_k(r')`; the new staircase is the lower-left envelope of
//! those pairs. Restricting `r'` to breakpoints is exact because `V_next` is
//! non-increasing and attains each value at its breakpoint, and `ρ_k` is
//! monotone.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::mdp::{ActionId, Mdp, StateId};
use crate::risk::{RiskError, RiskMeasureSpec};
use crate::staircase::ThresholdValueFunction;
use crate::TOL;

/// Upper bound on successor-threshold assignments examined per `(x, u)`.
pub const MAX_ASSIGNMENTS: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("threshold {r0} is below the feasibility floor {floor}")]
    Infeasible { r0: f64, floor: f64 },
    #[error("threshold must be finite, got {0}")]
    InvalidThreshold(f64),
    #[error("stage {stage} out of range for horizon {horizon}")]
    StageOutOfRange { stage: usize, horizon: usize },
    #[error("state '{state}' action '{action}' needs {count} threshold assignments (limit {limit})")]
    TooManyAssignments {
        state: String,
        action: String,
        count: usize,
        limit: usize,
    },
}

/// Minimal and maximal achievable tail risk per `(stage, state)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityBounds {
    /// `lower[k][x]`: min over tail policies of `R^π_N(x_k)`.
    pub lower: Vec<Vec<f64>>,
    /// `upper_cap[k][x]`: max over tail policies of `R^π_N(x_k)`.
    pub upper_cap: Vec<Vec<f64>>,
    /// `(min, max)` of `d` over admissible pairs.
    pub stage_cost_bounds: (f64, f64),
}

impl FeasibilityBounds {
    pub fn lower(&self, stage: usize, x: StateId) -> f64 {
        self.lower[stage][x.0]
    }

    pub fn upper(&self, stage: usize, x: StateId) -> f64 {
        self.upper_cap[stage][x.0]
    }
}

/// Risk-minimizing and risk-maximizing backward recursions.
pub fn compute_feasibility_bounds(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
) -> Result<FeasibilityBounds, SolveError> {
    spec.validate(mdp.horizon())?;
    let n = mdp.horizon();
    let s = mdp.num_states();
    let mut lower = vec![vec![0.0; s]; n + 1];
    let mut upper = vec![vec![0.0; s]; n + 1];
    for k in (0..n).rev() {
        let rho = spec.at(k);
        for x in mdp.state_ids() {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for choice in mdp.choices(x) {
                let atoms_lo: Vec<(f64, f64)> = choice
                    .successors
                    .iter()
                    .map(|&(y, p)| (p, lower[k + 1][y.0]))
                    .collect();
                let atoms_hi: Vec<(f64, f64)> = choice
                    .successors
                    .iter()
                    .map(|&(y, p)| (p, upper[k + 1][y.0]))
                    .collect();
                lo = lo.min(choice.cost_d + rho.evaluate(&atoms_lo));
                hi = hi.max(choice.cost_d + rho.evaluate(&atoms_hi));
            }
            lower[k][x.0] = lo;
            upper[k][x.0] = hi;
        }
    }
    Ok(FeasibilityBounds {
        lower,
        upper_cap: upper,
        stage_cost_bounds: mdp.constraint_cost_range(),
    })
}

/// Minimizer recorded at one breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellmanCell {
    /// Breakpoint threshold `b_i`.
    pub threshold: f64,
    /// `V(x, b_i)`.
    pub value: f64,
    pub action: ActionId,
    /// `d(x, u) + ρ_k(r')` for the recorded assignment.
    pub activation: f64,
    /// Successor threshold per positive-probability successor.
    pub successor_thresholds: Vec<(StateId, f64)>,
}

/// Backup result for one `(stage, state)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateBackup {
    pub value: ThresholdValueFunction,
    /// One cell per breakpoint of `value`.
    pub cells: Vec<BellmanCell>,
    /// Per-action staircases (the state-action value over thresholds).
    pub by_action: Vec<(ActionId, ThresholdValueFunction)>,
}

impl StateBackup {
    fn terminal() -> Self {
        StateBackup {
            value: ThresholdValueFunction::terminal(),
            cells: Vec::new(),
            by_action: Vec::new(),
        }
    }

    /// Cell governing threshold `r` (largest breakpoint `≤ r`).
    pub fn cell_at(&self, r: f64) -> Option<&BellmanCell> {
        self.value.index_at(r).map(|i| &self.cells[i])
    }

    /// Every action whose own staircase attains the optimal value at `r`.
    pub fn optimal_actions(&self, r: f64) -> Vec<ActionId> {
        let best = self.value.value_at(r);
        if !best.is_finite() {
            return Vec::new();
        }
        self.by_action
            .iter()
            .filter(|(_, q)| (q.value_at(r) - best).abs() <= TOL)
            .map(|(u, _)| *u)
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    action: ActionId,
    activation: f64,
    objective: f64,
    thresholds: Vec<f64>,
}

/// Tie-break order: lower activation, then action label, then successor
/// thresholds; activations and thresholds within [`TOL`] compare equal.
fn tie_break(a: &Candidate, b: &Candidate) -> Ordering {
    cmp_tol(a.activation, b.activation)
        .then(a.action.cmp(&b.action))
        .then_with(|| {
            a.thresholds
                .iter()
                .zip(&b.thresholds)
                .map(|(x, y)| cmp_tol(*x, *y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

fn cmp_tol(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= TOL {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Every breakpoint assignment for every admissible action at `(stage, x)`,
/// discarding those whose activation exceeds `cap`.
fn candidates(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    stage: usize,
    x: StateId,
    v_next: &[ThresholdValueFunction],
    cap: f64,
) -> Result<Vec<Candidate>, SolveError> {
    let rho = spec.at(stage);
    let mut out = Vec::new();
    for choice in mdp.choices(x) {
        let stairs: Vec<&ThresholdValueFunction> =
            choice.successors.iter().map(|(y, _)| &v_next[y.0]).collect();
        if stairs.iter().any(|f| f.is_infeasible()) {
            continue;
        }
        let count = stairs
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.breakpoints().len()))
            .unwrap_or(usize::MAX);
        if count > MAX_ASSIGNMENTS {
            return Err(SolveError::TooManyAssignments {
                state: mdp.state_label(x).to_string(),
                action: mdp.action_label(choice.action).to_string(),
                count,
                limit: MAX_ASSIGNMENTS,
            });
        }
        let mut idx = vec![0usize; stairs.len()];
        let mut atoms = vec![(0.0, 0.0); stairs.len()];
        loop {
            let mut objective = choice.cost_c;
            for (j, f) in stairs.iter().enumerate() {
                let b = f.breakpoints()[idx[j]];
                let p = choice.successors[j].1;
                atoms[j] = (p, b.threshold);
                objective += p * b.value;
            }
            let activation = choice.cost_d + rho.evaluate(&atoms);
            if activation <= cap + TOL {
                out.push(Candidate {
                    action: choice.action,
                    activation,
                    objective,
                    thresholds: atoms.iter().map(|a| a.1).collect(),
                });
            }
            // odometer
            let mut j = 0;
            while j < idx.len() {
                idx[j] += 1;
                if idx[j] < stairs[j].breakpoints().len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

fn per_action(cands: &[Candidate], mdp: &Mdp, x: StateId) -> Vec<(ActionId, ThresholdValueFunction)> {
    mdp.admissible(x)
        .map(|u| {
            let f = ThresholdValueFunction::envelope(
                cands
                    .iter()
                    .filter(|c| c.action == u)
                    .map(|c| (c.activation, c.objective)),
            );
            (u, f)
        })
        .collect()
}

fn successor_pairs(mdp: &Mdp, x: StateId, u: ActionId, thresholds: &[f64]) -> Vec<(StateId, f64)> {
    let choice = mdp.choice(x, u).expect("candidate actions are admissible");
    choice
        .successors
        .iter()
        .zip(thresholds)
        .map(|(&(y, _), &t)| (y, t))
        .collect()
}

fn check_stage(mdp: &Mdp, stage: usize) -> Result<(), SolveError> {
    if stage >= mdp.horizon() {
        return Err(SolveError::StageOutOfRange {
            stage,
            horizon: mdp.horizon(),
        });
    }
    Ok(())
}

/// One application of the inequality-constrained operator at `stage`.
///
/// `v_next[x]` is the stage `k+1` value function of state `x`.
pub fn bellman_backup(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    stage: usize,
    v_next: &[ThresholdValueFunction],
    bounds: &FeasibilityBounds,
) -> Result<Vec<StateBackup>, SolveError> {
    check_stage(mdp, stage)?;
    mdp.state_ids()
        .map(|x| {
            let cands = candidates(mdp, spec, stage, x, v_next, bounds.upper(stage, x))?;
            let value = ThresholdValueFunction::envelope(
                cands.iter().map(|c| (c.activation, c.objective)),
            );
            let cells = value
                .breakpoints()
                .iter()
                .map(|b| {
                    let best = cands
                        .iter()
                        .filter(|c| c.activation <= b.threshold + TOL && c.objective <= b.value + TOL)
                        .min_by(|p, q| tie_break(p, q))
                        .expect("every breakpoint comes from a candidate");
                    BellmanCell {
                        threshold: b.threshold,
                        value: b.value,
                        action: best.action,
                        activation: best.activation,
                        successor_thresholds: successor_pairs(mdp, x, best.action, &best.thresholds),
                    }
                })
                .collect();
            Ok(StateBackup {
                by_action: per_action(&cands, mdp, x),
                value,
                cells,
            })
        })
        .collect()
}

/// One application of the equality-constrained operator at `stage`.
///
/// Every assignment with activation `a ≤ r` is lifted to the equality
/// constraint at `r` by shifting all successor thresholds by the constant
/// `r - a`; the value at `r` is the best lifted objective, with `V_next`
/// read at the shifted thresholds.
pub fn bellman_backup_equality(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    stage: usize,
    v_next: &[ThresholdValueFunction],
    bounds: &FeasibilityBounds,
) -> Result<Vec<StateBackup>, SolveError> {
    check_stage(mdp, stage)?;
    mdp.state_ids()
        .map(|x| {
            let mut cands = candidates(mdp, spec, stage, x, v_next, bounds.upper(stage, x))?;
            cands.sort_by(|a, b| a.activation.total_cmp(&b.activation));
            let lifted = |c: &Candidate, r: f64| -> (f64, Vec<f64>) {
                let shift = (r - c.activation).max(0.0);
                let choice = mdp.choice(x, c.action).expect("admissible");
                let mut objective = choice.cost_c;
                let mut shifted = Vec::with_capacity(c.thresholds.len());
                for ((&(y, p), &t), f) in choice
                    .successors
                    .iter()
                    .zip(&c.thresholds)
                    .zip(std::iter::repeat(v_next))
                {
                    let t = t + shift;
                    objective += p * f[y.0].value_at(t);
                    shifted.push(t);
                }
                (objective, shifted)
            };
            let best_at = |r: f64| -> Option<(f64, &Candidate, Vec<f64>)> {
                let mut best: Option<(f64, &Candidate, Vec<f64>)> = None;
                for c in cands.iter().take_while(|c| c.activation <= r + TOL) {
                    let (obj, shifted) = lifted(c, r);
                    let better = match &best {
                        None => true,
                        Some((b_obj, b_c, _)) => {
                            obj < b_obj - TOL || (obj <= b_obj + TOL && tie_break(c, b_c).is_lt())
                        }
                    };
                    if better {
                        best = Some((obj, c, shifted));
                    }
                }
                best
            };

            let mut queries: Vec<f64> = Vec::new();
            for c in &cands {
                match queries.last() {
                    Some(&q) if c.activation <= q + TOL => {}
                    _ => queries.push(c.activation),
                }
            }
            let value = ThresholdValueFunction::envelope(
                queries
                    .iter()
                    .filter_map(|&r| best_at(r).map(|(obj, _, _)| (r, obj))),
            );
            let cells = value
                .breakpoints()
                .iter()
                .map(|b| {
                    let (_, c, shifted) = best_at(b.threshold).expect("breakpoint is a query");
                    BellmanCell {
                        threshold: b.threshold,
                        value: b.value,
                        action: c.action,
                        activation: b.threshold,
                        successor_thresholds: successor_pairs(mdp, x, c.action, &shifted),
                    }
                })
                .collect();
            Ok(StateBackup {
                by_action: per_action(&cands, mdp, x),
                value,
                cells,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BackupMode {
    #[default]
    Inequality,
    Equality,
}

/// Value functions and minimizers for stages `first_stage..=N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTables {
    pub first_stage: usize,
    /// `stages[k - first_stage][x]`, including the terminal stage.
    pub stages: Vec<Vec<StateBackup>>,
}

impl ValueTables {
    pub fn at(&self, stage: usize, x: StateId) -> &StateBackup {
        &self.stages[stage - self.first_stage][x.0]
    }

    pub fn value(&self, stage: usize, x: StateId, r: f64) -> f64 {
        self.at(stage, x).value.value_at(r)
    }
}

/// Backward induction from the terminal stage down to `first_stage`.
pub fn backward_induction(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    bounds: &FeasibilityBounds,
    first_stage: usize,
    mode: BackupMode,
) -> Result<ValueTables, SolveError> {
    let n = mdp.horizon();
    if first_stage > n {
        return Err(SolveError::StageOutOfRange {
            stage: first_stage,
            horizon: n,
        });
    }
    let mut stages = vec![vec![StateBackup::terminal(); mdp.num_states()]];
    for k in (first_stage..n).rev() {
        let v_next: Vec<ThresholdValueFunction> =
            stages.last().unwrap().iter().map(|b| b.value.clone()).collect();
        let backup = match mode {
            BackupMode::Inequality => bellman_backup(mdp, spec, k, &v_next, bounds)?,
            BackupMode::Equality => bellman_backup_equality(mdp, spec, k, &v_next, bounds)?,
        };
        stages.push(backup);
    }
    stages.reverse();
    Ok(ValueTables {
        first_stage,
        stages,
    })
}

/// Full solution of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub mdp: Mdp,
    pub spec: RiskMeasureSpec,
    pub bounds: FeasibilityBounds,
    pub tables: ValueTables,
    pub initial_state: StateId,
    pub r0: f64,
    /// `V_0(x_0, r0)`.
    pub value: f64,
}

impl Solution {
    pub fn at(&self, stage: usize, x: StateId) -> &StateBackup {
        self.tables.at(stage, x)
    }

    pub fn value_function(&self, stage: usize, x: StateId) -> &ThresholdValueFunction {
        &self.tables.at(stage, x).value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub mode: BackupMode,
}

/// Solves from the MDP's initial state with threshold `r0`.
pub fn solve(mdp: &Mdp, spec: &RiskMeasureSpec, r0: f64) -> Result<Solution, SolveError> {
    solve_with(mdp, spec, mdp.initial_state(), r0, SolveOptions::default())
}

pub fn solve_with(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    x0: StateId,
    r0: f64,
    options: SolveOptions,
) -> Result<Solution, SolveError> {
    if !r0.is_finite() {
        return Err(SolveError::InvalidThreshold(r0));
    }
    mdp.check_state(x0)
        .map_err(|e| SolveError::Risk(RiskError::Mdp(e)))?;
    let bounds = compute_feasibility_bounds(mdp, spec)?;
    let floor = bounds.lower(0, x0);
    if r0 < floor - TOL {
        return Err(SolveError::Infeasible { r0, floor });
    }
    let tables = backward_induction(mdp, spec, &bounds, 0, options.mode)?;
    let value = tables.value(0, x0, r0);
    Ok(Solution {
        mdp: mdp.clone(),
        spec: spec.clone(),
        bounds,
        tables,
        initial_state: x0,
        r0,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mdp::MdpBuilder;
    use crate::risk::OneStepMeasure;

    fn pts(f: &ThresholdValueFunction) -> Vec<(f64, f64)> {
        f.breakpoints().iter().map(|b| (b.threshold, b.value)).collect()
    }

    fn close(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(p, q)| (p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12)
    }

    #[test]
    fn squander_save_bounds() {
        let sc = fixtures::squander_save();
        let b = compute_feasibility_bounds(&sc.mdp, &sc.risk).unwrap();
        let win = sc.mdp.state_id("win").unwrap();
        let lose = sc.mdp.state_id("lose").unwrap();
        let root = sc.mdp.initial_state();
        assert!((b.lower(1, win) - 0.05).abs() < 1e-12);
        assert!((b.lower(1, lose) - 0.2).abs() < 1e-12);
        assert!((b.lower(0, root) - 0.185).abs() < 1e-12);
        assert!((b.upper(0, root) - 0.46).abs() < 1e-12);
        assert_eq!(b.lower(2, win), 0.0);
        assert_eq!(b.upper(2, win), 0.0);
    }

    #[test]
    fn squander_save_stage_one_staircases() {
        let sc = fixtures::squander_save();
        let sol = solve(&sc.mdp, &sc.risk, 0.3).unwrap();
        let win = sc.mdp.state_id("win").unwrap();
        let lose = sc.mdp.state_id("lose").unwrap();
        assert!(close(&pts(sol.value_function(1, win)), &[(0.05, -30.0), (1.0, -50.0)]));
        assert!(close(&pts(sol.value_function(1, lose)), &[(0.2, -10.0), (0.4, -20.0)]));
    }

    #[test]
    fn squander_save_stage_zero() {
        let sc = fixtures::squander_save();
        let sol = solve(&sc.mdp, &sc.risk, 0.3).unwrap();
        let root = pts(sol.value_function(0, sc.mdp.initial_state()));
        // the four stage-1 policies: save/save, squander/save, save/squander,
        // squander/squander (action on win / on lose)
        assert!(close(
            &root,
            &[(0.185, -12.0), (0.28, -14.0), (0.365, -21.0), (0.46, -23.0)]
        ));
        assert!((sol.value + 14.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_threshold_reports_floor() {
        let sc = fixtures::squander_save();
        match solve(&sc.mdp, &sc.risk, 0.1) {
            Err(SolveError::Infeasible { floor, .. }) => assert!((floor - 0.185).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn large_threshold_gives_unconstrained_optimum() {
        let sc = fixtures::squander_save();
        let sol = solve(&sc.mdp, &sc.risk, 10.0).unwrap();
        // 0.1·(-50) + 0.9·(-20)
        assert!((sol.value + 23.0).abs() < 1e-12);
    }

    #[test]
    fn one_action_zero_costs() {
        let mdp = MdpBuilder::new(2)
            .state("a", &["go"])
            .state("b", &["go"])
            .transition("a", "go", "a", 0.5)
            .transition("a", "go", "b", 0.5)
            .transition("b", "go", "b", 1.0)
            .costs("a", "go", 0.0, 0.0)
            .costs("b", "go", 0.0, 0.0)
            .build()
            .unwrap();
        for m in [OneStepMeasure::Expectation, OneStepMeasure::CVaR { alpha: 0.5 }, OneStepMeasure::WorstCase] {
            let spec = RiskMeasureSpec::uniform(m, 2);
            let sol = solve(&mdp, &spec, 0.0).unwrap();
            for k in 0..2 {
                for x in mdp.state_ids() {
                    assert_eq!(pts(sol.value_function(k, x)), vec![(0.0, 0.0)]);
                }
            }
        }
    }

    #[test]
    fn equality_backup_matches_on_squander_save() {
        let sc = fixtures::squander_save();
        let b = compute_feasibility_bounds(&sc.mdp, &sc.risk).unwrap();
        let ineq = backward_induction(&sc.mdp, &sc.risk, &b, 0, BackupMode::Inequality).unwrap();
        let eq = backward_induction(&sc.mdp, &sc.risk, &b, 0, BackupMode::Equality).unwrap();
        for k in 0..=2 {
            for x in sc.mdp.state_ids() {
                assert!(ineq.at(k, x).value.approx_eq(&eq.at(k, x).value, 1e-9));
            }
        }
        // equality cells hit their breakpoint exactly
        let cells = &eq.at(0, sc.mdp.initial_state()).cells;
        for c in cells {
            let choice = sc.mdp.choice(sc.mdp.initial_state(), c.action).unwrap();
            let atoms: Vec<(f64, f64)> = choice
                .successors
                .iter()
                .zip(&c.successor_thresholds)
                .map(|(&(_, p), &(_, t))| (p, t))
                .collect();
            let act = choice.cost_d + sc.risk.at(0).evaluate(&atoms);
            assert!((act - c.threshold).abs() < 1e-12);
        }
    }

    #[test]
    fn single_successor_equality_shift() {
        // r' = r - d under translation invariance
        let mdp = MdpBuilder::new(2)
            .state("a", &["go"])
            .state("b", &["cheap", "dear"])
            .transition("a", "go", "b", 1.0)
            .transition("b", "cheap", "b", 1.0)
            .transition("b", "dear", "b", 1.0)
            .costs("a", "go", 0.0, 0.25)
            .costs("b", "cheap", 5.0, 0.0)
            .costs("b", "dear", 1.0, 1.0)
            .build()
            .unwrap();
        let spec = RiskMeasureSpec::uniform(OneStepMeasure::Expectation, 2);
        let b = compute_feasibility_bounds(&mdp, &spec).unwrap();
        let eq = backward_induction(&mdp, &spec, &b, 0, BackupMode::Equality).unwrap();
        for c in &eq.at(0, StateId(0)).cells {
            assert!((c.successor_thresholds[0].1 - (c.threshold - 0.25)).abs() < 1e-12);
        }
    }

    #[test]
    fn cells_are_feasible_and_reproduce_values() {
        let sc = fixtures::squander_save();
        let sol = solve(&sc.mdp, &sc.risk, 0.3).unwrap();
        for k in 0..2 {
            for x in sc.mdp.state_ids() {
                let sb = sol.at(k, x);
                for c in &sb.cells {
                    assert!(c.activation <= c.threshold + TOL);
                    let choice = sc.mdp.choice(x, c.action).unwrap();
                    let obj: f64 = choice.cost_c
                        + choice
                            .successors
                            .iter()
                            .zip(&c.successor_thresholds)
                            .map(|(&(y, p), &(_, t))| p * sol.value_function(k + 1, y).value_at(t))
                            .sum::<f64>();
                    assert!((obj - c.value).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn optimal_action_sets() {
        let sc = fixtures::squander_save();
        let sol = solve(&sc.mdp, &sc.risk, 0.3).unwrap();
        let win = sc.mdp.state_id("win").unwrap();
        let save = sc.mdp.action_id("save").unwrap();
        let squander = sc.mdp.action_id("squander").unwrap();
        assert_eq!(sol.at(1, win).optimal_actions(0.3), vec![save]);
        assert_eq!(sol.at(1, win).optimal_actions(1.02), vec![squander]);
        assert!(sol.at(1, win).optimal_actions(0.01).is_empty());
    }
}
