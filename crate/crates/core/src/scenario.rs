//! Scenario documents: JSON files describing an MDP, its risk measure and an
//! initial threshold.
//!
//! ```json
//! {
//!   "horizon": 2,
//!   "states": ["s0", "win", "lose", "..."],
//!   "actions": {"s0": ["none"], "win": ["save", "squander"], "...": []},
//!   "transitions": [{"from": "s0", "action": "none", "to": "win", "prob": 0.1}],
//!   "cost_c": [{"state": "win", "action": "save", "value": -30}],
//!   "cost_d": [{"state": "win", "action": "save", "value": 0.05}],
//!   "risk": {"kind": "expectation"},
//!   "r0": 0.3
//! }
//! ```
//!
//! The first entry of `states` is the initial state. `risk` is one measure
//! record used at every stage, or a list with one record per stage. Two
//! optional keys are accepted: `name`, and `reference` (a published value to
//! show next to the computed optimum, optionally with the stage-independent
//! policy it came from). Any other key is rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::mdp::{HistoryPolicy, Mdp, MdpBuilder, MdpError};
use crate::risk::{OneStepMeasure, RiskError, RiskMeasureSpec};

const REQUIRED_KEYS: [&str; 8] = [
    "horizon",
    "states",
    "actions",
    "transitions",
    "cost_c",
    "cost_d",
    "risk",
    "r0",
];
const OPTIONAL_KEYS: [&str; 2] = ["name", "reference"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario document: {0}")]
    Json(String),
    #[error("scenario document must be a JSON object")]
    NotAnObject,
    #[error("missing field '{0}'")]
    MissingField(&'static str),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid field '{field}': {message}")]
    InvalidField { field: &'static str, message: String },
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    from: String,
    action: String,
    to: String,
    prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostDoc {
    state: String,
    action: String,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum RiskDoc {
    Uniform(OneStepMeasure),
    PerStage(Vec<OneStepMeasure>),
}

/// A published value for the scenario, shown beside the computed optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Stage-independent policy `state -> action` the value refers to;
    /// states not listed use their first admissible action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<BTreeMap<String, String>>,
}

impl Reference {
    /// The reference policy on the tree rooted at the initial state.
    pub fn history_policy(&self, mdp: &Mdp) -> Result<Option<HistoryPolicy>, MdpError> {
        let Some(map) = &self.policy else {
            return Ok(None);
        };
        let mut by_state = vec![None; mdp.num_states()];
        for (state, action) in map {
            let x = mdp.state_id(state)?;
            let u = mdp
                .action_id(action)
                .filter(|u| mdp.choice(x, *u).is_some())
                .ok_or_else(|| MdpError::ActionNotAdmissible {
                    state: state.clone(),
                    action: action.clone(),
                })?;
            by_state[x.0] = Some(u);
        }
        HistoryPolicy::markov(mdp, mdp.initial_state(), 0, |_, x| {
            by_state[x.0].unwrap_or_else(|| mdp.choices(x)[0].action)
        })
        .map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub mdp: Mdp,
    pub risk: RiskMeasureSpec,
    pub r0: f64,
    pub reference: Option<Reference>,
}

fn field<T: for<'de> Deserialize<'de>>(
    obj: &serde_json::Map<String, Value>,
    name: &'static str,
) -> Result<T, ScenarioError> {
    let v = obj.get(name).ok_or(ScenarioError::MissingField(name))?;
    serde_json::from_value(v.clone()).map_err(|e| ScenarioError::InvalidField {
        field: name,
        message: e.to_string(),
    })
}

/// Checks a parsed scenario document and builds the validated model.
pub fn validate_scenario(raw: &Value, default_name: &str) -> Result<Scenario, ScenarioError> {
    let obj = raw.as_object().ok_or(ScenarioError::NotAnObject)?;
    if let Some(k) = obj
        .keys()
        .find(|k| !REQUIRED_KEYS.contains(&k.as_str()) && !OPTIONAL_KEYS.contains(&k.as_str()))
    {
        return Err(ScenarioError::UnknownKey(k.clone()));
    }
    for k in REQUIRED_KEYS {
        if !obj.contains_key(k) {
            return Err(ScenarioError::MissingField(k));
        }
    }

    let horizon: usize = field(obj, "horizon")?;
    let states: Vec<String> = field(obj, "states")?;
    let actions: BTreeMap<String, Vec<String>> = field(obj, "actions")?;
    let transitions: Vec<TransitionDoc> = field(obj, "transitions")?;
    let cost_c: Vec<CostDoc> = field(obj, "cost_c")?;
    let cost_d: Vec<CostDoc> = field(obj, "cost_d")?;
    let risk: RiskDoc = field(obj, "risk")?;
    let r0: f64 = field(obj, "r0")?;
    let name = match obj.get("name") {
        Some(_) => field::<String>(obj, "name")?,
        None => default_name.to_string(),
    };
    let reference = match obj.get("reference") {
        Some(_) => Some(field::<Reference>(obj, "reference")?),
        None => None,
    };

    for s in actions.keys() {
        if !states.contains(s) {
            return Err(MdpError::StateUnknown(s.clone()).into());
        }
    }
    let mut b = MdpBuilder::new(horizon);
    for s in &states {
        b.add_state(s, actions.get(s).cloned().unwrap_or_default());
    }
    for t in &transitions {
        b.add_transition(&t.from, &t.action, &t.to, t.prob);
    }
    for c in &cost_c {
        b.add_cost_c(&c.state, &c.action, c.value);
    }
    for c in &cost_d {
        b.add_cost_d(&c.state, &c.action, c.value);
    }
    let mdp = b.build()?;

    let risk = match risk {
        RiskDoc::Uniform(m) => RiskMeasureSpec::uniform(m, horizon),
        RiskDoc::PerStage(list) => RiskMeasureSpec { per_stage: list },
    };
    risk.validate(horizon)?;
    if !r0.is_finite() {
        return Err(ScenarioError::InvalidField {
            field: "r0",
            message: format!("must be finite, got {r0}"),
        });
    }
    if let Some(r) = &reference {
        r.history_policy(&mdp)?;
    }
    Ok(Scenario {
        name,
        mdp,
        risk,
        r0,
        reference,
    })
}

impl Scenario {
    pub fn from_json_str(text: &str, default_name: &str) -> Result<Self, ScenarioError> {
        let raw: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))?;
        validate_scenario(&raw, default_name)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario");
        Self::from_json_str(&text, stem)
    }

    /// Canonical document for this scenario.
    pub fn to_document(&self) -> Value {
        let mdp = &self.mdp;
        let mut actions = serde_json::Map::new();
        let mut transitions = Vec::new();
        let mut cost_c = Vec::new();
        let mut cost_d = Vec::new();
        for x in mdp.state_ids() {
            let s = mdp.state_label(x).to_string();
            actions.insert(
                s.clone(),
                Value::from(
                    mdp.admissible(x)
                        .map(|u| mdp.action_label(u).to_string())
                        .collect::<Vec<_>>(),
                ),
            );
            for ch in mdp.choices(x) {
                let a = mdp.action_label(ch.action).to_string();
                for &(y, p) in &ch.successors {
                    transitions.push(TransitionDoc {
                        from: s.clone(),
                        action: a.clone(),
                        to: mdp.state_label(y).to_string(),
                        prob: p,
                    });
                }
                cost_c.push(CostDoc {
                    state: s.clone(),
                    action: a.clone(),
                    value: ch.cost_c,
                });
                cost_d.push(CostDoc {
                    state: s.clone(),
                    action: a,
                    value: ch.cost_d,
                });
            }
        }
        let risk = if self.risk.is_uniform() && !self.risk.per_stage.is_empty() {
            RiskDoc::Uniform(self.risk.per_stage[0])
        } else {
            RiskDoc::PerStage(self.risk.per_stage.clone())
        };
        let mut doc = serde_json::json!({
            "name": self.name,
            "horizon": mdp.horizon(),
            "states": mdp.state_labels(),
            "actions": actions,
            "transitions": transitions,
            "cost_c": cost_c,
            "cost_d": cost_d,
            "risk": risk,
            "r0": self.r0,
        });
        if let Some(r) = &self.reference {
            doc["reference"] = serde_json::to_value(r).expect("reference serializes");
        }
        doc
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }
}
