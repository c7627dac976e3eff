//! Coherent one-step risk measures, their nested (dynamic) composition along a
//! policy tree, and the static metrics used to exhibit inconsistent planning.
//!
//! Larger values are worse everywhere: the measures act on costs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{policy_paths, History, HistoryPolicy, Mdp, MdpError};

const DIST_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid risk parameter: {0}")]
    InvalidParameter(String),
    #[error("risk specification has {got} stage measures, horizon is {horizon}")]
    StageCount { got: usize, horizon: usize },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// A coherent one-step conditional risk measure acting on a finite
/// distribution of next-stage costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneStepMeasure {
    Expectation,
    /// Average of the worst `1 - alpha` probability mass.
    #[serde(rename = "cvar")]
    CVaR { alpha: f64 },
    WorstCase,
    /// `E[X] + c · E[(X - E[X])_+]`.
    #[serde(rename = "semideviation")]
    MeanUpperSemideviation { c: f64 },
}

impl OneStepMeasure {
    pub fn validate(&self) -> Result<(), RiskError> {
        match *self {
            OneStepMeasure::CVaR { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(
                RiskError::InvalidParameter(format!("cvar alpha must lie in (0,1), got {alpha}")),
            ),
            OneStepMeasure::MeanUpperSemideviation { c } if !(0.0..=1.0).contains(&c) => Err(
                RiskError::InvalidParameter(format!("semideviation c must lie in [0,1], got {c}")),
            ),
            _ => Ok(()),
        }
    }

    /// Evaluates the measure on `(probability, value)` atoms. The atoms must
    /// form a valid distribution; see [`eval_one_step`] for the checked form.
    pub fn evaluate(&self, atoms: &[(f64, f64)]) -> f64 {
        match *self {
            OneStepMeasure::Expectation => mean(atoms),
            OneStepMeasure::WorstCase => atoms
                .iter()
                .filter(|(p, _)| *p > 0.0)
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max),
            OneStepMeasure::CVaR { alpha } => upper_tail_mean(atoms, 1.0 - alpha),
            OneStepMeasure::MeanUpperSemideviation { c } => {
                let m = mean(atoms);
                let upper: f64 = atoms.iter().map(|(p, v)| p * (v - m).max(0.0)).sum();
                m + c * upper
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            OneStepMeasure::Expectation => "expectation".into(),
            OneStepMeasure::CVaR { alpha } => format!("cvar(alpha={alpha})"),
            OneStepMeasure::WorstCase => "worst_case".into(),
            OneStepMeasure::MeanUpperSemideviation { c } => format!("semideviation(c={c})"),
        }
    }
}

fn mean(atoms: &[(f64, f64)]) -> f64 {
    atoms.iter().map(|(p, v)| p * v).sum()
}

/// Mean of the worst `tail` probability mass. An atom straddling the cut is
/// weighted fractionally so the tail has exactly `tail` mass.
fn upper_tail_mean(atoms: &[(f64, f64)], tail: f64) -> f64 {
    let mut sorted: Vec<(f64, f64)> = atoms.iter().copied().filter(|(p, _)| *p > 0.0).collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut remaining = tail;
    let mut acc = 0.0;
    for (p, v) in sorted {
        if remaining <= 0.0 {
            break;
        }
        let w = p.min(remaining);
        acc += w * v;
        remaining -= w;
    }
    // rounding can leave a sliver of mass unassigned; the worst atoms cover it
    acc / (tail - remaining.max(0.0))
}

/// Random next-stage value: `(state label, probability, value)` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDistributionValue {
    pub support: Vec<(String, f64, f64)>,
}

impl FiniteDistributionValue {
    pub fn new(support: Vec<(String, f64, f64)>) -> Self {
        FiniteDistributionValue { support }
    }

    pub fn validate(&self) -> Result<(), RiskError> {
        if self.support.is_empty() {
            return Err(RiskError::InvalidDistribution("empty support".into()));
        }
        let mut sum = 0.0;
        for (label, p, v) in &self.support {
            if !p.is_finite() || *p < 0.0 {
                return Err(RiskError::InvalidDistribution(format!(
                    "probability {p} for '{label}'"
                )));
            }
            if !v.is_finite() {
                return Err(RiskError::InvalidDistribution(format!(
                    "value {v} for '{label}'"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(RiskError::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(())
    }

    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.support.iter().map(|(_, p, v)| (*p, *v)).collect()
    }
}

/// Checked evaluation of one measure on one distribution.
pub fn eval_one_step(
    measure: &OneStepMeasure,
    dist: &FiniteDistributionValue,
) -> Result<f64, RiskError> {
    measure.validate()?;
    dist.validate()?;
    Ok(measure.evaluate(&dist.atoms()))
}

/// One measure per decision stage `0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureSpec {
    pub per_stage: Vec<OneStepMeasure>,
}

impl RiskMeasureSpec {
    pub fn uniform(measure: OneStepMeasure, horizon: usize) -> Self {
        RiskMeasureSpec {
            per_stage: vec![measure; horizon],
        }
    }

    pub fn at(&self, stage: usize) -> &OneStepMeasure {
        &self.per_stage[stage]
    }

    pub fn validate(&self, horizon: usize) -> Result<(), RiskError> {
        if self.per_stage.len() != horizon {
            return Err(RiskError::StageCount {
                got: self.per_stage.len(),
                horizon,
            });
        }
        self.per_stage.iter().try_for_each(|m| m.validate())
    }

    /// True when every stage uses the same measure.
    pub fn is_uniform(&self) -> bool {
        self.per_stage.windows(2).all(|w| w[0] == w[1])
    }
}

/// Nested risk `R^π_N` of the constraint costs from node `from` of the
/// policy's tree, by depth-first recursion.
pub fn eval_dynamic_risk(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    policy: &HistoryPolicy,
    from: &History,
) -> Result<f64, RiskError> {
    fn go(
        mdp: &Mdp,
        spec: &RiskMeasureSpec,
        policy: &HistoryPolicy,
        h: &History,
    ) -> Result<f64, RiskError> {
        let k = h.stage();
        if k == mdp.horizon() {
            return Ok(0.0);
        }
        let u = policy.require(mdp, h)?;
        let choice = mdp.choice(h.last_state(), u).expect("checked by require");
        let mut atoms = Vec::with_capacity(choice.successors.len());
        for &(y, p) in &choice.successors {
            atoms.push((p, go(mdp, spec, policy, &h.extended(u, y))?));
        }
        Ok(choice.cost_d + spec.at(k).evaluate(&atoms))
    }
    check_node(mdp, policy, from)?;
    go(mdp, spec, policy, from)
}

fn check_node(mdp: &Mdp, policy: &HistoryPolicy, from: &History) -> Result<(), RiskError> {
    if !policy.root().is_prefix_of(from) {
        return Err(MdpError::PolicyUndefinedOnHistory(mdp.display_history(from)).into());
    }
    Ok(())
}

/// `R^π_N` at every reachable node of the policy tree (stage-N leaves hold 0),
/// computed by a stage-by-stage backward sweep.
pub fn dynamic_risk_by_node(
    mdp: &Mdp,
    spec: &RiskMeasureSpec,
    policy: &HistoryPolicy,
) -> Result<BTreeMap<History, f64>, RiskError> {
    let n = mdp.horizon();
    let mut levels: Vec<Vec<History>> = vec![Vec::new(); n + 1];
    let mut frontier = vec![policy.root().clone()];
    while let Some(h) = frontier.pop() {
        let k = h.stage();
        if k < n {
            let u = policy.require(mdp, &h)?;
            let choice = mdp.choice(h.last_state(), u).expect("checked by require");
            frontier.extend(choice.successors.iter().map(|&(y, _)| h.extended(u, y)));
        }
        levels[k].push(h);
    }
    let mut risk = BTreeMap::new();
    for h in levels[n].drain(..) {
        risk.insert(h, 0.0);
    }
    for k in (policy.root_stage()..n).rev() {
        for h in &levels[k] {
            let u = policy.require(mdp, h)?;
            let choice = mdp.choice(h.last_state(), u).expect("checked by require");
            let atoms: Vec<(f64, f64)> = choice
                .successors
                .iter()
                .map(|&(y, p)| (p, risk[&h.extended(u, y)]))
                .collect();
            risk.insert(h.clone(), choice.cost_d + spec.at(k).evaluate(&atoms));
        }
    }
    Ok(risk)
}

/// Exact mean and variance of the cumulative constraint cost under `policy`.
pub fn static_variance_of_constraint_cost(
    mdp: &Mdp,
    policy: &HistoryPolicy,
) -> Result<(f64, f64), RiskError> {
    let atoms = total_constraint_cost_distribution(mdp, policy)?;
    let m = mean(&atoms);
    let var = atoms.iter().map(|(p, v)| p * (v - m) * (v - m)).sum();
    Ok((m, var))
}

/// Static AVaR at level `alpha` of the cumulative constraint cost from node
/// `from` of the policy's tree.
pub fn static_avar_of_total_cost(
    mdp: &Mdp,
    policy: &HistoryPolicy,
    alpha: f64,
    from: &History,
) -> Result<f64, RiskError> {
    OneStepMeasure::CVaR { alpha }.validate()?;
    check_node(mdp, policy, from)?;
    let atoms = total_constraint_cost_distribution(mdp, &policy.tail(from))?;
    Ok(upper_tail_mean(&atoms, 1.0 - alpha))
}

/// `(path probability, total constraint cost)` over the policy's complete paths.
pub fn total_constraint_cost_distribution(
    mdp: &Mdp,
    policy: &HistoryPolicy,
) -> Result<Vec<(f64, f64)>, RiskError> {
    Ok(policy_paths(mdp, policy)?
        .iter()
        .map(|w| (w.prob, w.total_constraint_cost(mdp)))
        .collect())
}
