//! Brute-force reference solver.
//!
//! Enumerates every deterministic history-dependent policy over the
//! reachable history tree and evaluates objective and nested risk directly.
//! Nothing here uses the threshold dynamic program.
//!
//! The tails of a history-dependent policy below different nodes are chosen
//! independently, so the tail policies available at `(stage, state)` are the
//! same wherever that node occurs. They are enumerated once per
//! `(stage, state)` and combined at the root.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::mdp::{ActionId, History, HistoryPolicy, Mdp, MdpError, StateId};
use crate::risk::{RiskError, RiskMeasureSpec};
use crate::TOL;

/// Largest policy count the oracle will enumerate.
pub const MAX_POLICIES: u128 = 10_000_000;

/// Largest policy count for which the full policy table is produced.
pub const MAX_TABLE_ROWS: u128 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{count} policies exceed the enumeration limit {limit}")]
    TooLarge { count: u128, limit: u128 },
    #[error("no policy meets threshold {r0}; the least risky policy has risk {min_risk}")]
    Infeasible { r0: f64, min_risk: f64 },
    #[error("stage {stage} out of range for horizon {horizon}")]
    StageOutOfRange { stage: usize, horizon: usize },
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// A tail policy below one node; `children` follow the successor order of
/// the chosen action.
#[derive(Debug)]
struct TailPlan {
    action: Option<ActionId>,
    children: Vec<Rc<TailPlan>>,
}

#[derive(Debug, Clone)]
struct Tail {
    cost: f64,
    risk: f64,
    plan: Rc<TailPlan>,
}

/// Lazily enumerated deterministic policies rooted at `(state, stage)`.
pub struct PolicyEnumeration<'a> {
    mdp: &'a Mdp,
    spec: &'a RiskMeasureSpec,
    state: StateId,
    stage: usize,
    count: u128,
    memo: HashMap<(usize, StateId), Rc<Vec<Tail>>>,
}

impl<'a> PolicyEnumeration<'a> {
    pub fn new(
        mdp: &'a Mdp,
        spec: &'a RiskMeasureSpec,
        state: StateId,
        stage: usize,
    ) -> Result<Self, OracleError> {
        mdp.check_state(state)?;
        spec.validate(mdp.horizon())?;
        if stage > mdp.horizon() {
            return Err(OracleError::StageOutOfRange {
                stage,
                horizon: mdp.horizon(),
            });
        }
        let mut counts = HashMap::new();
        let count = count_policies(mdp, stage, state, &mut counts);
        Ok(PolicyEnumeration {
            mdp,
            spec,
            state,
            stage,
            count,
            memo: HashMap::new(),
        })
    }

    /// Number of policies: `Σ_u Π_{successors} count(successor)` at each node.
    pub fn count(&self) -> u128 {
        self.count
    }

    fn check_size(&self) -> Result<(), OracleError> {
        if self.count > MAX_POLICIES {
            Err(OracleError::TooLarge {
                count: self.count,
                limit: MAX_POLICIES,
            })
        } else {
            Ok(())
        }
    }

    /// Visits every policy as `(cost, risk, root action, child tails)`,
    /// in action-label order then lexicographic order over child indices.
    fn for_each(&mut self, mut f: impl FnMut(f64, f64, ActionId, &[&Tail])) {
        let (k, x) = (self.stage, self.state);
        if k == self.mdp.horizon() {
            return;
        }
        let mdp = self.mdp;
        for choice in mdp.choices(x) {
            let lists: Vec<Rc<Vec<Tail>>> = choice
                .successors
                .iter()
                .map(|&(y, _)| self.tails(k + 1, y))
                .collect();
            let measure = *self.spec.at(k);
            odometer(&lists, |picked| {
                let cost = choice.cost_c
                    + choice
                        .successors
                        .iter()
                        .zip(picked)
                        .map(|(&(_, p), t)| p * t.cost)
                        .sum::<f64>();
                let atoms: Vec<(f64, f64)> = choice
                    .successors
                    .iter()
                    .zip(picked)
                    .map(|(&(_, p), t)| (p, t.risk))
                    .collect();
                let risk = choice.cost_d + measure.evaluate(&atoms);
                f(cost, risk, choice.action, picked);
            });
        }
    }

    /// Every tail policy at `(k, x)` with its cost and risk.
    fn tails(&mut self, k: usize, x: StateId) -> Rc<Vec<Tail>> {
        if let Some(t) = self.memo.get(&(k, x)) {
            return t.clone();
        }
        let mdp = self.mdp;
        let out = if k == mdp.horizon() {
            vec![Tail {
                cost: 0.0,
                risk: 0.0,
                plan: Rc::new(TailPlan {
                    action: None,
                    children: Vec::new(),
                }),
            }]
        } else {
            let measure = *self.spec.at(k);
            let mut out = Vec::new();
            for choice in mdp.choices(x) {
                let lists: Vec<Rc<Vec<Tail>>> = choice
                    .successors
                    .iter()
                    .map(|&(y, _)| self.tails(k + 1, y))
                    .collect();
                odometer(&lists, |picked| {
                    let mut cost = choice.cost_c;
                    let mut atoms = Vec::with_capacity(picked.len());
                    for (&(_, p), t) in choice.successors.iter().zip(picked) {
                        cost += p * t.cost;
                        atoms.push((p, t.risk));
                    }
                    out.push(Tail {
                        cost,
                        risk: choice.cost_d + measure.evaluate(&atoms),
                        plan: Rc::new(TailPlan {
                            action: Some(choice.action),
                            children: picked.iter().map(|t| t.plan.clone()).collect(),
                        }),
                    });
                });
            }
            out
        };
        let out = Rc::new(out);
        self.memo.insert((k, x), out.clone());
        out
    }

    fn to_policy(&self, action: ActionId, picked: &[&Tail]) -> HistoryPolicy {
        let root_plan = TailPlan {
            action: Some(action),
            children: picked.iter().map(|t| t.plan.clone()).collect(),
        };
        let mut decisions = BTreeMap::new();
        collect(
            self.mdp,
            &root_plan,
            History::root(self.state, self.stage),
            &mut decisions,
        );
        HistoryPolicy::from_decisions(self.mdp, self.state, self.stage, decisions)
            .expect("enumerated plans cover the reachable tree")
    }

    fn empty_policy(&self) -> HistoryPolicy {
        HistoryPolicy::from_decisions(self.mdp, self.state, self.stage, BTreeMap::new())
            .expect("no decisions at the horizon")
    }

    /// All policies in enumeration order.
    pub fn policies(&mut self) -> Result<Vec<HistoryPolicy>, OracleError> {
        self.check_size()?;
        if self.stage == self.mdp.horizon() {
            return Ok(vec![self.empty_policy()]);
        }
        let mut raw = Vec::new();
        self.for_each(|_, _, u, picked| {
            raw.push((u, picked.iter().map(|t| (*t).clone()).collect::<Vec<_>>()));
        });
        Ok(raw
            .iter()
            .map(|(u, tails)| self.to_policy(*u, &tails.iter().collect::<Vec<_>>()))
            .collect())
    }
}

fn count_policies(
    mdp: &Mdp,
    k: usize,
    x: StateId,
    memo: &mut HashMap<(usize, StateId), u128>,
) -> u128 {
    if k == mdp.horizon() {
        return 1;
    }
    if let Some(&c) = memo.get(&(k, x)) {
        return c;
    }
    let mut total: u128 = 0;
    for choice in mdp.choices(x) {
        let mut prod: u128 = 1;
        for &(y, _) in &choice.successors {
            prod = prod.saturating_mul(count_policies(mdp, k + 1, y, memo));
        }
        total = total.saturating_add(prod);
    }
    memo.insert((k, x), total);
    total
}

/// Calls `f` on every element of the Cartesian product of `lists`, last
/// index fastest.
fn odometer(lists: &[Rc<Vec<Tail>>], mut f: impl FnMut(&[&Tail])) {
    if lists.iter().any(|l| l.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; lists.len()];
    let mut picked: Vec<&Tail> = lists.iter().map(|l| &l[0]).collect();
    loop {
        f(&picked);
        let mut i = lists.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < lists[i].len() {
                picked[i] = &lists[i][idx[i]];
                break;
            }
            idx[i] = 0;
            picked[i] = &lists[i][0];
        }
    }
}

fn collect(mdp: &Mdp, plan: &TailPlan, h: History, out: &mut BTreeMap<History, ActionId>) {
    let Some(u) = plan.action else { return };
    let choice = mdp
        .choice(h.last_state(), u)
        .expect("enumerated actions are admissible");
    for (&(y, _), child) in choice.successors.iter().zip(&plan.children) {
        collect(mdp, child, h.extended(u, y), out);
    }
    out.insert(h, u);
}

/// One row of the policy table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    /// `(history, action)` pairs with labels.
    pub decisions: Vec<(String, String)>,
    pub cost: f64,
    pub risk: f64,
    pub feasible: bool,
}

/// Optimum of a (tail) problem with every minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: f64,
    pub minimizers: Vec<HistoryPolicy>,
    pub policy_count: u128,
    pub feasible_count: usize,
    /// Every policy with its cost and risk, when at most [`MAX_TABLE_ROWS`].
    pub table: Option<Vec<PolicyRow>>,
}

/// Solves `min J^π(x0) s.t. R^π(x0) ≤ r0` by enumeration from stage 0.
pub fn brute_force_opt(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    x0: StateId,
    r0: f64,
) -> Result<OracleResult, OracleError> {
    brute_force_tail(mdp, spec, x0, 0, r0)
}

/// The tail subproblem at `(x_k, k)` with threshold `r_k`.
pub fn brute_force_tail(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    x: StateId,
    k: usize,
    r: f64,
) -> Result<OracleResult, OracleError> {
    let mut en = PolicyEnumeration::new(mdp, spec, x, k)?;
    en.check_size()?;
    let count = en.count();
    let with_table = count <= MAX_TABLE_ROWS;
    if k == mdp.horizon() {
        if r < -TOL {
            return Err(OracleError::Infeasible { r0: r, min_risk: 0.0 });
        }
        let p = en.empty_policy();
        let table = with_table.then(|| {
            vec![PolicyRow {
                decisions: Vec::new(),
                cost: 0.0,
                risk: 0.0,
                feasible: true,
            }]
        });
        return Ok(OracleResult {
            value: 0.0,
            minimizers: vec![p],
            policy_count: 1,
            feasible_count: 1,
            table,
        });
    }

    let mut best = f64::INFINITY;
    let mut min_risk = f64::INFINITY;
    let mut feasible_count = 0;
    let mut rows: Vec<(f64, f64, ActionId, Vec<Tail>)> = Vec::new();
    let mut argmins: Vec<(ActionId, Vec<Tail>)> = Vec::new();
    en.for_each(|cost, risk, u, picked| {
        min_risk = min_risk.min(risk);
        if with_table {
            rows.push((cost, risk, u, picked.iter().map(|t| (*t).clone()).collect()));
        }
        if risk > r + TOL {
            return;
        }
        feasible_count += 1;
        if cost < best - TOL {
            argmins.clear();
            best = cost;
        }
        if cost <= best + TOL {
            argmins.push((u, picked.iter().map(|t| (*t).clone()).collect()));
        }
    });
    if feasible_count == 0 {
        return Err(OracleError::Infeasible { r0: r, min_risk });
    }
    // a later, slightly better cost may leave stale entries within 2·TOL
    let minimizers = argmins
        .iter()
        .filter(|(u, tails)| {
            let refs: Vec<&Tail> = tails.iter().collect();
            let cost = tail_cost(mdp, x, *u, &refs);
            cost <= best + TOL
        })
        .map(|(u, tails)| en.to_policy(*u, &tails.iter().collect::<Vec<_>>()))
        .collect();
    let table = with_table.then(|| {
        rows.iter()
            .map(|(cost, risk, u, tails)| PolicyRow {
                decisions: en
                    .to_policy(*u, &tails.iter().collect::<Vec<_>>())
                    .describe(mdp),
                cost: *cost,
                risk: *risk,
                feasible: *risk <= r + TOL,
            })
            .collect()
    });
    Ok(OracleResult {
        value: best,
        minimizers,
        policy_count: count,
        feasible_count,
        table,
    })
}

fn tail_cost(mdp: &Mdp, x: StateId, u: ActionId, picked: &[&Tail]) -> f64 {
    let choice = mdp.choice(x, u).expect("enumerated actions are admissible");
    choice.cost_c
        + choice
            .successors
            .iter()
            .zip(picked)
            .map(|(&(_, p), t)| p * t.cost)
            .sum::<f64>()
}
