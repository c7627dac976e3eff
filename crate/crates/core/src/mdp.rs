//! Finite MDP model, histories and deterministic history-dependent policies.
//!
//! Costs and the transition kernel are stage-invariant; problems whose data
//! depend on time encode the stage in the state label. Terminal costs are
//! always zero.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on kernel row sums.
pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionId(pub usize);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdpError {
    #[error("horizon must be at least 1, got {0}")]
    InvalidHorizon(usize),
    #[error("no states declared")]
    NoStates,
    #[error("state '{0}' declared twice")]
    DuplicateState(String),
    #[error("unknown state '{0}'")]
    StateUnknown(String),
    #[error("state id {0} out of range")]
    StateIdOutOfRange(usize),
    #[error("stage {stage} exceeds horizon {horizon}")]
    StageOutOfRange { stage: usize, horizon: usize },
    #[error("state '{0}' has an empty admissible action set")]
    EmptyAdmissibleSet(String),
    #[error("action '{action}' listed twice for state '{state}'")]
    DuplicateAction { state: String, action: String },
    #[error("action '{action}' is not admissible in state '{state}'")]
    ActionNotAdmissible { state: String, action: String },
    #[error("transition ({state}, {action}) -> {to} declared twice")]
    DuplicateTransition { state: String, action: String, to: String },
    #[error("transition ({state}, {action}) -> {to} has invalid probability {prob}")]
    InvalidProbability { state: String, action: String, to: String, prob: f64 },
    #[error("transition row ({state}, {action}) sums to {sum}, expected 1")]
    ProbabilityRowNotNormalized { state: String, action: String, sum: f64 },
    #[error("{which} cost undefined for ({state}, {action})")]
    UndefinedCost { state: String, action: String, which: &'static str },
    #[error("{which} cost for ({state}, {action}) declared twice")]
    DuplicateCost { state: String, action: String, which: &'static str },
    #[error("{which} cost for ({state}, {action}) is not finite")]
    NonFiniteCost { state: String, action: String, which: &'static str },
    #[error("policy has no decision for history {0}")]
    PolicyUndefinedOnHistory(String),
}

/// One admissible `(x, u)` pair with its costs and successor distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub action: ActionId,
    pub cost_c: f64,
    pub cost_d: f64,
    /// Positive-probability successors, ordered by state label.
    pub successors: Vec<(StateId, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    horizon: usize,
    states: Vec<String>,
    actions: Vec<String>,
    choices: Vec<Vec<Choice>>,
}

impl Mdp {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    /// The first declared state; scenarios start there.
    pub fn initial_state(&self) -> StateId {
        StateId(0)
    }

    pub fn state_label(&self, x: StateId) -> &str {
        &self.states[x.0]
    }

    pub fn action_label(&self, u: ActionId) -> &str {
        &self.actions[u.0]
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    /// Union of all admissible actions, sorted by label.
    pub fn action_labels(&self) -> &[String] {
        &self.actions
    }

    pub fn state_id(&self, label: &str) -> Result<StateId, MdpError> {
        self.states
            .iter()
            .position(|s| s == label)
            .map(StateId)
            .ok_or_else(|| MdpError::StateUnknown(label.to_string()))
    }

    pub fn action_id(&self, label: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == label).map(ActionId)
    }

    pub fn check_state(&self, x: StateId) -> Result<(), MdpError> {
        if x.0 < self.states.len() {
            Ok(())
        } else {
            Err(MdpError::StateIdOutOfRange(x.0))
        }
    }

    /// Admissible choices at `x`, ordered by action label.
    pub fn choices(&self, x: StateId) -> &[Choice] {
        &self.choices[x.0]
    }

    pub fn choice(&self, x: StateId, u: ActionId) -> Option<&Choice> {
        self.choices[x.0].iter().find(|c| c.action == u)
    }

    pub fn admissible(&self, x: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.choices[x.0].iter().map(|c| c.action)
    }

    /// Smallest and largest constraint cost over admissible pairs.
    pub fn constraint_cost_range(&self) -> (f64, f64) {
        self.choices
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.cost_d), hi.max(c.cost_d))
            })
    }

    pub fn display_history(&self, h: &History) -> String {
        let mut out = String::new();
        for (i, x) in h.states.iter().enumerate() {
            if i > 0 {
                out.push_str(" > ");
                out.push_str(self.action_label(h.actions[i - 1]));
                out.push_str(" > ");
            }
            out.push_str(self.state_label(*x));
        }
        out
    }
}

/// Incremental constructor; [`MdpBuilder::build`] checks every model invariant.
#[derive(Debug, Clone, Default)]
pub struct MdpBuilder {
    horizon: usize,
    states: Vec<String>,
    admissible: Vec<Vec<String>>,
    transitions: Vec<(String, String, String, f64)>,
    cost_c: Vec<(String, String, f64)>,
    cost_d: Vec<(String, String, f64)>,
}

impl MdpBuilder {
    pub fn new(horizon: usize) -> Self {
        MdpBuilder {
            horizon,
            ..Default::default()
        }
    }

    pub fn state(mut self, label: &str, actions: &[&str]) -> Self {
        self.states.push(label.to_string());
        self.admissible
            .push(actions.iter().map(|a| a.to_string()).collect());
        self
    }

    pub fn add_state(&mut self, label: &str, actions: Vec<String>) {
        self.states.push(label.to_string());
        self.admissible.push(actions);
    }

    pub fn transition(mut self, from: &str, action: &str, to: &str, prob: f64) -> Self {
        self.add_transition(from, action, to, prob);
        self
    }

    pub fn add_transition(&mut self, from: &str, action: &str, to: &str, prob: f64) {
        self.transitions
            .push((from.into(), action.into(), to.into(), prob));
    }

    /// Sets both stage costs of `(state, action)`.
    pub fn costs(mut self, state: &str, action: &str, c: f64, d: f64) -> Self {
        self.add_cost_c(state, action, c);
        self.add_cost_d(state, action, d);
        self
    }

    pub fn add_cost_c(&mut self, state: &str, action: &str, value: f64) {
        self.cost_c.push((state.into(), action.into(), value));
    }

    pub fn add_cost_d(&mut self, state: &str, action: &str, value: f64) {
        self.cost_d.push((state.into(), action.into(), value));
    }

    pub fn build(self) -> Result<Mdp, MdpError> {
        if self.horizon < 1 {
            return Err(MdpError::InvalidHorizon(self.horizon));
        }
        if self.states.is_empty() {
            return Err(MdpError::NoStates);
        }
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if index.insert(s.as_str(), i).is_some() {
                return Err(MdpError::DuplicateState(s.clone()));
            }
        }
        let state_index = |label: &str| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| MdpError::StateUnknown(label.to_string()))
        };

        let mut actions: Vec<String> = self.admissible.iter().flatten().cloned().collect();
        actions.sort();
        actions.dedup();
        let action_index = |label: &str| actions.binary_search_by(|a| a.as_str().cmp(label));

        // (state, action label) -> slot in that state's choice list
        let mut choices: Vec<Vec<Choice>> = Vec::with_capacity(self.states.len());
        let mut defined: Vec<Vec<[bool; 2]>> = Vec::with_capacity(self.states.len());
        for (i, list) in self.admissible.iter().enumerate() {
            if list.is_empty() {
                return Err(MdpError::EmptyAdmissibleSet(self.states[i].clone()));
            }
            let mut sorted = list.clone();
            sorted.sort();
            for w in sorted.windows(2) {
                if w[0] == w[1] {
                    return Err(MdpError::DuplicateAction {
                        state: self.states[i].clone(),
                        action: w[0].clone(),
                    });
                }
            }
            choices.push(
                sorted
                    .iter()
                    .map(|a| Choice {
                        action: ActionId(action_index(a).expect("collected above")),
                        cost_c: f64::NAN,
                        cost_d: f64::NAN,
                        successors: Vec::new(),
                    })
                    .collect(),
            );
            defined.push(vec![[false; 2]; sorted.len()]);
        }

        let slot = |choices: &Vec<Vec<Choice>>, state: &str, action: &str| -> Result<(usize, usize), MdpError> {
            let x = state_index(state)?;
            let not_admissible = || MdpError::ActionNotAdmissible {
                state: state.to_string(),
                action: action.to_string(),
            };
            let u = action_index(action).map_err(|_| not_admissible())?;
            let j = choices[x]
                .iter()
                .position(|c| c.action.0 == u)
                .ok_or_else(not_admissible)?;
            Ok((x, j))
        };

        for (which, list, k) in [("c", &self.cost_c, 0usize), ("d", &self.cost_d, 1usize)] {
            for (state, action, value) in list {
                let (x, j) = slot(&choices, state, action)?;
                if defined[x][j][k] {
                    return Err(MdpError::DuplicateCost {
                        state: state.clone(),
                        action: action.clone(),
                        which,
                    });
                }
                if !value.is_finite() {
                    return Err(MdpError::NonFiniteCost {
                        state: state.clone(),
                        action: action.clone(),
                        which,
                    });
                }
                defined[x][j][k] = true;
                if k == 0 {
                    choices[x][j].cost_c = *value;
                } else {
                    choices[x][j].cost_d = *value;
                }
            }
        }

        for (from, action, to, prob) in &self.transitions {
            let (x, j) = slot(&choices, from, action)?;
            let y = state_index(to)?;
            if !prob.is_finite() || *prob < 0.0 || *prob > 1.0 + ROW_SUM_TOL {
                return Err(MdpError::InvalidProbability {
                    state: from.clone(),
                    action: action.clone(),
                    to: to.clone(),
                    prob: *prob,
                });
            }
            let row = &mut choices[x][j].successors;
            if row.iter().any(|(s, _)| s.0 == y) {
                return Err(MdpError::DuplicateTransition {
                    state: from.clone(),
                    action: action.clone(),
                    to: to.clone(),
                });
            }
            row.push((StateId(y), *prob));
        }

        for (x, list) in choices.iter_mut().enumerate() {
            for (j, choice) in list.iter_mut().enumerate() {
                let action = actions[choice.action.0].clone();
                let state = self.states[x].clone();
                if !defined[x][j][0] {
                    return Err(MdpError::UndefinedCost { state, action, which: "c" });
                }
                if !defined[x][j][1] {
                    return Err(MdpError::UndefinedCost { state, action, which: "d" });
                }
                let sum: f64 = choice.successors.iter().map(|(_, p)| p).sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MdpError::ProbabilityRowNotNormalized { state, action, sum });
                }
                choice.successors.retain(|(_, p)| *p > 0.0);
                let labels = &self.states;
                choice
                    .successors
                    .sort_by(|a, b| labels[a.0 .0].cmp(&labels[b.0 .0]));
            }
        }

        Ok(Mdp {
            horizon: self.horizon,
            states: self.states,
            actions,
            choices,
        })
    }
}

/// `(x_k, u_k, …, x_j)`: a history starting at stage `start_stage`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct History {
    pub start_stage: usize,
    pub states: Vec<StateId>,
    pub actions: Vec<ActionId>,
}

impl History {
    pub fn root(state: StateId, stage: usize) -> Self {
        History {
            start_stage: stage,
            states: vec![state],
            actions: Vec::new(),
        }
    }

    /// Stage of the last state.
    pub fn stage(&self) -> usize {
        self.start_stage + self.actions.len()
    }

    pub fn last_state(&self) -> StateId {
        *self.states.last().expect("history always holds a state")
    }

    pub fn extended(&self, u: ActionId, x: StateId) -> History {
        let mut h = self.clone();
        h.actions.push(u);
        h.states.push(x);
        h
    }

    pub fn is_prefix_of(&self, other: &History) -> bool {
        self.start_stage == other.start_stage
            && self.states.len() <= other.states.len()
            && other.states[..self.states.len()] == self.states[..]
            && other.actions[..self.actions.len()] == self.actions[..]
    }

    /// Re-roots `self` at the last state of `prefix`.
    fn strip_prefix(&self, prefix: &History) -> History {
        let n = prefix.actions.len();
        History {
            start_stage: prefix.stage(),
            states: self.states[n..].to_vec(),
            actions: self.actions[n..].to_vec(),
        }
    }
}

impl fmt::Display for History {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}:", self.start_stage)?;
        for (i, x) in self.states.iter().enumerate() {
            if i > 0 {
                write!(f, ",u{}", self.actions[i - 1].0)?;
            }
            write!(f, ",x{}", x.0)?;
        }
        Ok(())
    }
}

/// Deterministic history-dependent policy over the tree rooted at one
/// `(state, stage)`. Only positive-probability histories carry decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryPolicy {
    root: History,
    decisions: BTreeMap<History, ActionId>,
}

impl HistoryPolicy {
    /// Records `rule` on every history reachable from `(state, stage)` under
    /// the decisions it makes.
    pub fn from_fn(
        mdp: &Mdp,
        state: StateId,
        stage: usize,
        mut rule: impl FnMut(&History) -> ActionId,
    ) -> Result<Self, MdpError> {
        mdp.check_state(state)?;
        check_stage(mdp, stage)?;
        let root = History::root(state, stage);
        let mut decisions = BTreeMap::new();
        let mut stack = vec![root.clone()];
        while let Some(h) = stack.pop() {
            if h.stage() >= mdp.horizon() {
                continue;
            }
            let x = h.last_state();
            let u = rule(&h);
            let choice = mdp.choice(x, u).ok_or_else(|| MdpError::ActionNotAdmissible {
                state: mdp.state_label(x).to_string(),
                action: mdp.action_label(u).to_string(),
            })?;
            for &(y, _) in &choice.successors {
                stack.push(h.extended(u, y));
            }
            decisions.insert(h, u);
        }
        Ok(HistoryPolicy { root, decisions })
    }

    /// Policy whose decision depends only on `(stage, state)`.
    pub fn markov(
        mdp: &Mdp,
        state: StateId,
        stage: usize,
        mut rule: impl FnMut(usize, StateId) -> ActionId,
    ) -> Result<Self, MdpError> {
        Self::from_fn(mdp, state, stage, |h| rule(h.stage(), h.last_state()))
    }

    /// Builds a policy from explicit decisions, checking it is defined and
    /// admissible on every reachable history.
    pub fn from_decisions(
        mdp: &Mdp,
        state: StateId,
        stage: usize,
        decisions: BTreeMap<History, ActionId>,
    ) -> Result<Self, MdpError> {
        let mut missing = None;
        let policy = Self::from_fn(mdp, state, stage, |h| match decisions.get(h) {
            Some(u) => *u,
            None => {
                missing.get_or_insert_with(|| mdp.display_history(h));
                mdp.choices(h.last_state())[0].action
            }
        })?;
        match missing {
            Some(h) => Err(MdpError::PolicyUndefinedOnHistory(h)),
            None => Ok(policy),
        }
    }

    pub fn root(&self) -> &History {
        &self.root
    }

    pub fn root_state(&self) -> StateId {
        self.root.last_state()
    }

    pub fn root_stage(&self) -> usize {
        self.root.start_stage
    }

    pub fn decide(&self, h: &History) -> Option<ActionId> {
        self.decisions.get(h).copied()
    }

    pub fn decisions(&self) -> impl Iterator<Item = (&History, ActionId)> {
        self.decisions.iter().map(|(h, u)| (h, *u))
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    /// The tail policy from node `prefix` (a history of this policy's tree).
    pub fn tail(&self, prefix: &History) -> HistoryPolicy {
        let decisions = self
            .decisions
            .iter()
            .filter(|(h, _)| prefix.is_prefix_of(h))
            .map(|(h, u)| (h.strip_prefix(prefix), *u))
            .collect();
        HistoryPolicy {
            root: History::root(prefix.last_state(), prefix.stage()),
            decisions,
        }
    }

    /// `history -> action` lines using labels, in tree order.
    pub fn describe(&self, mdp: &Mdp) -> Vec<(String, String)> {
        self.decisions
            .iter()
            .map(|(h, u)| (mdp.display_history(h), mdp.action_label(*u).to_string()))
            .collect()
    }

    /// The decision at `h`, as an error when missing or inadmissible.
    pub fn require(&self, mdp: &Mdp, h: &History) -> Result<ActionId, MdpError> {
        let u = self
            .decide(h)
            .ok_or_else(|| MdpError::PolicyUndefinedOnHistory(mdp.display_history(h)))?;
        if mdp.choice(h.last_state(), u).is_none() {
            return Err(MdpError::ActionNotAdmissible {
                state: mdp.state_label(h.last_state()).to_string(),
                action: mdp.action_label(u).to_string(),
            });
        }
        Ok(u)
    }
}

fn check_stage(mdp: &Mdp, stage: usize) -> Result<(), MdpError> {
    if stage > mdp.horizon() {
        Err(MdpError::StageOutOfRange {
            stage,
            horizon: mdp.horizon(),
        })
    } else {
        Ok(())
    }
}

/// A complete history (ending at stage N) with its path probability.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHistory {
    pub history: History,
    pub prob: f64,
}

impl WeightedHistory {
    /// Sum of constraint costs along the history.
    pub fn total_constraint_cost(&self, mdp: &Mdp) -> f64 {
        self.total(mdp, |c| c.cost_d)
    }

    /// Sum of objective costs along the history.
    pub fn total_objective_cost(&self, mdp: &Mdp) -> f64 {
        self.total(mdp, |c| c.cost_c)
    }

    fn total(&self, mdp: &Mdp, f: impl Fn(&Choice) -> f64) -> f64 {
        let h = &self.history;
        h.actions
            .iter()
            .zip(&h.states)
            .map(|(&u, &x)| f(mdp.choice(x, u).expect("histories are admissible")))
            .sum()
    }
}

/// All positive-probability histories from `(from, stage)` to the horizon,
/// branching on every admissible action.
pub fn enumerate_histories(
    mdp: &Mdp,
    from: StateId,
    stage: usize,
) -> Result<Vec<WeightedHistory>, MdpError> {
    enumerate_histories_with(mdp, from, stage, |h| {
        Ok(mdp.admissible(h.last_state()).collect())
    })
}

/// Histories from `(from, stage)` to the horizon, branching on the actions
/// returned by `choose` at each decision history.
pub fn enumerate_histories_with(
    mdp: &Mdp,
    from: StateId,
    stage: usize,
    mut choose: impl FnMut(&History) -> Result<Vec<ActionId>, MdpError>,
) -> Result<Vec<WeightedHistory>, MdpError> {
    mdp.check_state(from)?;
    check_stage(mdp, stage)?;
    let mut out = Vec::new();
    let mut stack = vec![(History::root(from, stage), 1.0)];
    while let Some((h, prob)) = stack.pop() {
        if h.stage() == mdp.horizon() {
            out.push(WeightedHistory { history: h, prob });
            continue;
        }
        let x = h.last_state();
        for u in choose(&h)? {
            let choice = mdp.choice(x, u).ok_or_else(|| MdpError::ActionNotAdmissible {
                state: mdp.state_label(x).to_string(),
                action: mdp.action_label(u).to_string(),
            })?;
            for &(y, p) in choice.successors.iter().rev() {
                stack.push((h.extended(u, y), prob * p));
            }
        }
    }
    out.sort_by(|a, b| a.history.cmp(&b.history));
    Ok(out)
}

/// Complete histories generated by `policy` from its root.
pub fn policy_paths(mdp: &Mdp, policy: &HistoryPolicy) -> Result<Vec<WeightedHistory>, MdpError> {
    enumerate_histories_with(mdp, policy.root_state(), policy.root_stage(), |h| {
        policy.require(mdp, h).map(|u| vec![u])
    })
}
