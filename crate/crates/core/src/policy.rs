//! Augmented-state policies and risk-to-go.
//!
//! An [`AugmentedPolicy`] maps `(stage, state, threshold)` to an action and to
//! successor thresholds that satisfy the risk constraint with equality. A
//! [`RiskToGoMap`] is the tree of thresholds realised along every reachable
//! path from a given `(x0, r0)`; it is built either by walking an augmented
//! policy forward ([`extract_policy`]) or from a history policy and its
//! nested tail risks ([`risk_to_go_from_policy`]), where each increment is the
//! difference of tail risks between a node and its parent.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::dp::{BellmanCell, Solution};
use crate::mdp::{ActionId, History, HistoryPolicy, Mdp, MdpError, StateId};
use crate::risk::{dynamic_risk_by_node, RiskError, RiskMeasureSpec};
use crate::TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("threshold {threshold} is below the feasibility floor {floor} at stage {stage}, state {state}")]
    InfeasibleThreshold {
        stage: usize,
        state: String,
        threshold: f64,
        floor: f64,
    },
    #[error("policy risk {risk} exceeds threshold {r0}")]
    PolicyInfeasibleAtThreshold { risk: f64, r0: f64 },
    #[error("stage {0} has no decision")]
    NoDecisionAtStage(usize),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Action and successor thresholds chosen at one augmented state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub action: ActionId,
    pub successor_thresholds: Vec<(StateId, f64)>,
}

/// Feedback policy on `(stage, state, threshold)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPolicy {
    horizon: usize,
    state_labels: Vec<String>,
    /// `cells[k][x]`: minimizers at the breakpoints of `V_k(x, ·)`.
    cells: Vec<Vec<Vec<BellmanCell>>>,
}

impl AugmentedPolicy {
    pub fn from_solution(solution: &Solution) -> Self {
        let mdp = &solution.mdp;
        let cells = (0..mdp.horizon())
            .map(|k| {
                mdp.state_ids()
                    .map(|x| solution.at(k, x).cells.clone())
                    .collect()
            })
            .collect();
        AugmentedPolicy {
            horizon: mdp.horizon(),
            state_labels: mdp.state_labels().to_vec(),
            cells,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cells(&self, stage: usize, x: StateId) -> &[BellmanCell] {
        &self.cells[stage][x.0]
    }

    pub fn floor(&self, stage: usize, x: StateId) -> f64 {
        self.cells[stage][x.0]
            .first()
            .map_or(f64::INFINITY, |c| c.threshold)
    }

    /// Decision at `(stage, x, r)`. The cell of the largest breakpoint `≤ r`
    /// is used, with its successor thresholds raised by the constant that
    /// makes `d + ρ_k(r') = r` hold exactly.
    pub fn decide(&self, stage: usize, x: StateId, r: f64) -> Result<Decision, PolicyError> {
        if stage >= self.horizon {
            return Err(PolicyError::NoDecisionAtStage(stage));
        }
        let cells = &self.cells[stage][x.0];
        let i = cells.partition_point(|c| c.threshold <= r + TOL);
        let Some(cell) = i.checked_sub(1).map(|i| &cells[i]) else {
            return Err(PolicyError::InfeasibleThreshold {
                stage,
                state: self.state_labels[x.0].clone(),
                threshold: r,
                floor: self.floor(stage, x),
            });
        };
        let shift = (r - cell.activation).max(0.0);
        Ok(Decision {
            action: cell.action,
            successor_thresholds: cell
                .successor_thresholds
                .iter()
                .map(|&(y, t)| (y, t + shift))
                .collect(),
        })
    }

    /// Decision table: one row per `(stage, state, threshold interval)`.
    pub fn table(&self, mdp: &Mdp) -> Vec<DecisionRow> {
        let mut rows = Vec::new();
        for (k, per_state) in self.cells.iter().enumerate() {
            for (xi, cells) in per_state.iter().enumerate() {
                for (i, c) in cells.iter().enumerate() {
                    rows.push(DecisionRow {
                        stage: k,
                        state: mdp.state_label(StateId(xi)).to_string(),
                        lower: c.threshold,
                        upper: cells.get(i + 1).map_or(f64::INFINITY, |n| n.threshold),
                        value: c.value,
                        action: mdp.action_label(c.action).to_string(),
                        successor_thresholds: c
                            .successor_thresholds
                            .iter()
                            .map(|&(y, t)| {
                                (mdp.state_label(y).to_string(), t + (c.threshold - c.activation))
                            })
                            .collect(),
                    });
                }
            }
        }
        rows
    }
}

/// One interval `[lower, upper)` of the decision table. Successor thresholds
/// are those used at `r = lower`; at larger `r` they all rise by `r - lower`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionRow {
    pub stage: usize,
    pub state: String,
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
    pub action: String,
    pub successor_thresholds: Vec<(String, f64)>,
}

/// A node of the risk-to-go tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanNode {
    pub stage: usize,
    pub state: StateId,
    /// Risk-to-go `r_k` held at this node.
    pub threshold: f64,
    /// `None` at the horizon.
    pub action: Option<ActionId>,
    pub children: Vec<PlanEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanEdge {
    pub prob: f64,
    /// `L(x') = r_{k+1} - r_k`.
    pub increment: f64,
    pub node: PlanNode,
}

impl PlanNode {
    /// Expected objective cost of the plan below this node.
    pub fn expected_cost(&self, mdp: &Mdp) -> f64 {
        match self.action {
            None => 0.0,
            Some(u) => {
                mdp.choice(self.state, u).expect("plan actions are admissible").cost_c
                    + self
                        .children
                        .iter()
                        .map(|e| e.prob * e.node.expected_cost(mdp))
                        .sum::<f64>()
            }
        }
    }

    /// Nested risk of the plan below this node.
    pub fn risk(&self, mdp: &Mdp, spec: &RiskMeasureSpec) -> f64 {
        match self.action {
            None => 0.0,
            Some(u) => {
                let atoms: Vec<(f64, f64)> = self
                    .children
                    .iter()
                    .map(|e| (e.prob, e.node.risk(mdp, spec)))
                    .collect();
                mdp.choice(self.state, u).expect("plan actions are admissible").cost_d
                    + spec.at(self.stage).evaluate(&atoms)
            }
        }
    }

    /// Visits every node with its history relative to this node.
    pub fn visit(&self, mut f: impl FnMut(&History, &PlanNode)) {
        fn go(n: &PlanNode, h: History, f: &mut impl FnMut(&History, &PlanNode)) {
            f(&h, n);
            if let Some(u) = n.action {
                for e in &n.children {
                    go(&e.node, h.extended(u, e.node.state), f);
                }
            }
        }
        go(self, History::root(self.state, self.stage), &mut f);
    }

    /// Node reached along `h` (a history rooted at this node).
    pub fn find(&self, h: &History) -> Option<&PlanNode> {
        let mut node = self;
        for (u, y) in h.actions.iter().zip(h.states.iter().skip(1)) {
            if node.action != Some(*u) {
                return None;
            }
            node = &node.children.iter().find(|e| e.node.state == *y)?.node;
        }
        Some(node)
    }
}

/// Risk-to-go tree over the reachable nodes from `(x0, r0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskToGoMap {
    pub r0: f64,
    pub root: PlanNode,
}

impl RiskToGoMap {
    /// The plan's actions as a history policy.
    pub fn to_history_policy(&self, mdp: &Mdp) -> Result<HistoryPolicy, MdpError> {
        let mut decisions = BTreeMap::new();
        self.root.visit(|h, n| {
            if let Some(u) = n.action {
                decisions.insert(h.clone(), u);
            }
        });
        HistoryPolicy::from_decisions(mdp, self.root.state, self.root.stage, decisions)
    }

    /// `(history, node)` for every node, in depth-first order.
    pub fn nodes(&self) -> Vec<(History, &PlanNode)> {
        let mut out = Vec::new();
        fn go<'a>(n: &'a PlanNode, h: History, out: &mut Vec<(History, &'a PlanNode)>) {
            out.push((h.clone(), n));
            if let Some(u) = n.action {
                for e in &n.children {
                    go(&e.node, h.extended(u, e.node.state), out);
                }
            }
        }
        go(&self.root, History::root(self.root.state, self.root.stage), &mut out);
        out
    }

    /// Increments `L_k(x_{k+1})` keyed by the child's history.
    pub fn increments(&self) -> Vec<(History, f64)> {
        let mut out = Vec::new();
        for (h, n) in self.nodes() {
            if let Some(u) = n.action {
                for e in &n.children {
                    out.push((h.extended(u, e.node.state), e.increment));
                }
            }
        }
        out
    }
}

/// Walks the augmented policy forward from `(x0, r0)` at stage `stage`.
pub fn plan_from(
    mdp: &Mdp,
    policy: &AugmentedPolicy,
    stage: usize,
    x0: StateId,
    r0: f64,
) -> Result<RiskToGoMap, PolicyError> {
    fn walk(
        mdp: &Mdp,
        policy: &AugmentedPolicy,
        k: usize,
        x: StateId,
        r: f64,
    ) -> Result<PlanNode, PolicyError> {
        if k == mdp.horizon() {
            return Ok(PlanNode {
                stage: k,
                state: x,
                threshold: r,
                action: None,
                children: Vec::new(),
            });
        }
        let d = policy.decide(k, x, r)?;
        let choice = mdp.choice(x, d.action).expect("cells hold admissible actions");
        let mut children = Vec::with_capacity(choice.successors.len());
        for (&(y, p), &(_, t)) in choice.successors.iter().zip(&d.successor_thresholds) {
            children.push(PlanEdge {
                prob: p,
                increment: t - r,
                node: walk(mdp, policy, k + 1, y, t)?,
            });
        }
        Ok(PlanNode {
            stage: k,
            state: x,
            threshold: r,
            action: Some(d.action),
            children,
        })
    }
    Ok(RiskToGoMap {
        r0,
        root: walk(mdp, policy, stage, x0, r0)?,
    })
}

/// Augmented policy of a solution and its risk-to-go tree from `(x0, r0)`.
pub fn extract_policy(
    solution: &Solution,
    x0: StateId,
    r0: f64,
) -> Result<(AugmentedPolicy, RiskToGoMap), PolicyError> {
    let policy = AugmentedPolicy::from_solution(solution);
    let floor = solution.bounds.lower(0, x0);
    if r0 < floor - TOL {
        return Err(PolicyError::InfeasibleThreshold {
            stage: 0,
            state: solution.mdp.state_label(x0).to_string(),
            threshold: r0,
            floor,
        });
    }
    let rtg = plan_from(&solution.mdp, &policy, 0, x0, r0)?;
    Ok((policy, rtg))
}

/// Risk-to-go induced by a feasible history policy: `r̃_0 = r0` and
/// `r̃_{k+1} = r̃_k + R^π_N(x_{k+1}) - R^π_N(x_k)` along every edge.
pub fn risk_to_go_from_policy(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    policy: &HistoryPolicy,
    r0: f64,
) -> Result<RiskToGoMap, PolicyError> {
    let risk = dynamic_risk_by_node(mdp, spec, policy)?;
    let root_risk = risk[policy.root()];
    if root_risk > r0 + TOL {
        return Err(PolicyError::PolicyInfeasibleAtThreshold {
            risk: root_risk,
            r0,
        });
    }
    fn build(
        mdp: &Mdp,
        policy: &HistoryPolicy,
        risk: &BTreeMap<History, f64>,
        h: &History,
        r: f64,
    ) -> PlanNode {
        let x = h.last_state();
        let Some(u) = policy.decide(h) else {
            return PlanNode {
                stage: h.stage(),
                state: x,
                threshold: r,
                action: None,
                children: Vec::new(),
            };
        };
        let here = risk[h];
        let children = mdp
            .choice(x, u)
            .expect("policy checked by risk evaluation")
            .successors
            .iter()
            .map(|&(y, p)| {
                let child = h.extended(u, y);
                let increment = risk[&child] - here;
                PlanEdge {
                    prob: p,
                    increment,
                    node: build(mdp, policy, risk, &child, r + increment),
                }
            })
            .collect();
        PlanNode {
            stage: h.stage(),
            state: x,
            threshold: r,
            action: Some(u),
            children,
        }
    }
    Ok(RiskToGoMap {
        r0,
        root: build(mdp, policy, &risk, policy.root(), r0),
    })
}

/// Largest `|ρ_k(M_{k+1}) - M_k|` over the tree, where
/// `M_k = r_k + Σ_{j<k} d(x_j, u_j)` along each path.
pub fn martingale_check(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    policy: &HistoryPolicy,
    rtg: &RiskToGoMap,
) -> f64 {
    fn go(
        mdp: &Mdp,
        spec: &RiskMeasureSpec,
        policy: &HistoryPolicy,
        n: &PlanNode,
        h: &History,
        paid: f64,
        worst: &mut f64,
    ) {
        let Some(u) = policy.decide(h).or(n.action) else {
            return;
        };
        let d = mdp.choice(n.state, u).map_or(0.0, |c| c.cost_d);
        let m_here = n.threshold + paid;
        let atoms: Vec<(f64, f64)> = n
            .children
            .iter()
            .map(|e| (e.prob, e.node.threshold + paid + d))
            .collect();
        if !atoms.is_empty() {
            let dev = (spec.at(n.stage).evaluate(&atoms) - m_here).abs();
            *worst = worst.max(dev);
        }
        for e in &n.children {
            go(mdp, spec, policy, &e.node, &h.extended(u, e.node.state), paid + d, worst);
        }
    }
    let mut worst = 0.0;
    let root = History::root(rtg.root.state, rtg.root.stage);
    go(mdp, spec, policy, &rtg.root, &root, 0.0, &mut worst);
    worst
}
