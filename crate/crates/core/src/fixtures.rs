//! Scenarios shipped with the crate and a seeded random-instance generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dp::compute_feasibility_bounds;
use crate::mdp::{Mdp, MdpBuilder};
use crate::risk::{OneStepMeasure, RiskMeasureSpec};
use crate::scenario::Scenario;

pub const SQUANDER_SAVE_JSON: &str = include_str!("../fixtures/squander_save.json");
pub const VARIANCE_JSON: &str = include_str!("../fixtures/variance.json");
pub const AVAR_JSON: &str = include_str!("../fixtures/avar.json");
pub const TRIVIAL_JSON: &str = include_str!("../fixtures/trivial.json");

pub const NAMES: [&str; 4] = ["squander_save", "variance", "avar", "trivial"];

/// Shipped fixture by name.
pub fn by_name(name: &str) -> Option<Scenario> {
    let text = match name {
        "squander_save" => SQUANDER_SAVE_JSON,
        "variance" => VARIANCE_JSON,
        "avar" => AVAR_JSON,
        "trivial" => TRIVIAL_JSON,
        _ => return None,
    };
    Some(Scenario::from_json_str(text, name).expect("shipped fixtures are valid"))
}

/// Lottery, then squander or save; expectation risk, `r0 = 0.3`.
pub fn squander_save() -> Scenario {
    by_name("squander_save").unwrap()
}

/// Two-branch instance where a variance cap forces the costly action.
pub fn variance() -> Scenario {
    by_name("variance").unwrap()
}

/// Single-policy tree whose total constraint cost looks acceptable from each
/// stage-1 state but not from the root (AVaR at level 1/3, threshold 0).
pub fn avar() -> Scenario {
    by_name("avar").unwrap()
}

/// One state, one action, horizon 1, zero costs.
pub fn trivial() -> Scenario {
    by_name("trivial").unwrap()
}

pub const AVAR_LEAVES: [&str; 4] = ["s1_a", "s1_b", "s2_a", "s2_b"];
pub const AVAR_DEFAULT_COSTS: [f64; 4] = [2.0, -7.0, -1.0, -1.0];

/// The AVaR tree with custom terminal constraint costs for the leaves
/// `s1_a, s1_b, s2_a, s2_b`. The terminal cost is carried by a final
/// `settle` step into an absorbing `end` state.
pub fn avar_tree(terminal_costs: [f64; 4]) -> Mdp {
    let mut b = MdpBuilder::new(3)
        .state("s0", &["go"])
        .state("s1", &["go"])
        .state("s2", &["go"]);
    for leaf in AVAR_LEAVES {
        b = b.state(leaf, &["settle"]);
    }
    b = b
        .state("end", &["none"])
        .transition("s0", "go", "s1", 0.5)
        .transition("s0", "go", "s2", 0.5)
        .transition("s1", "go", "s1_a", 0.5)
        .transition("s1", "go", "s1_b", 0.5)
        .transition("s2", "go", "s2_a", 0.5)
        .transition("s2", "go", "s2_b", 0.5)
        .transition("end", "none", "end", 1.0)
        .costs("s0", "go", 0.0, 0.0)
        .costs("s1", "go", 0.0, 0.0)
        .costs("s2", "go", 0.0, 0.0)
        .costs("end", "none", 0.0, 0.0);
    for (leaf, cost) in AVAR_LEAVES.iter().zip(terminal_costs) {
        b = b
            .transition(leaf, "settle", "end", 1.0)
            .costs(leaf, "settle", 0.0, cost);
    }
    b.build().expect("avar tree is well formed")
}

/// Size limits for [`random_mdp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomInstanceConfig {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_horizon: usize,
    /// Largest number of successors per `(x, u)`.
    pub max_support: usize,
}

impl Default for RandomInstanceConfig {
    fn default() -> Self {
        RandomInstanceConfig {
            max_states: 6,
            max_actions: 3,
            max_horizon: 3,
            max_support: 2,
        }
    }
}

const ACTION_LABELS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Random MDP drawn from a ChaCha8 stream seeded with `seed`. Costs and
/// probabilities sit on coarse grids so ties between policies are common.
pub fn random_mdp(seed: u64, cfg: &RandomInstanceConfig) -> Mdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_states = rng.gen_range(2..=cfg.max_states.max(2));
    let horizon = rng.gen_range(1..=cfg.max_horizon.max(1));
    let n_actions = cfg.max_actions.clamp(1, ACTION_LABELS.len());
    let labels: Vec<String> = (0..n_states).map(|i| format!("x{i}")).collect();
    let mut b = MdpBuilder::new(horizon);
    let mut admissible = Vec::new();
    for s in &labels {
        let k = rng.gen_range(1..=n_actions);
        let mut acts: Vec<&str> = ACTION_LABELS[..n_actions].to_vec();
        acts.shuffle(&mut rng);
        acts.truncate(k);
        acts.sort();
        b.add_state(s, acts.iter().map(|a| a.to_string()).collect());
        admissible.push(acts);
    }
    for (s, acts) in labels.iter().zip(&admissible) {
        for a in acts {
            let support = rng.gen_range(1..=cfg.max_support.clamp(1, n_states));
            let mut targets: Vec<&String> = labels.iter().collect();
            targets.shuffle(&mut rng);
            targets.truncate(support);
            let mut weights: Vec<u32> = (0..support).map(|_| rng.gen_range(1..=9)).collect();
            let total: u32 = weights.iter().sum();
            // exact tenths for two successors, normalized weights otherwise
            if support == 2 {
                let p = rng.gen_range(1..=9);
                weights = vec![p, 10 - p];
            }
            let denom = if support == 2 { 10.0 } else { total as f64 };
            let mut acc = 0.0;
            for (i, (t, w)) in targets.iter().zip(&weights).enumerate() {
                let p = if i + 1 == support {
                    1.0 - acc
                } else {
                    *w as f64 / denom
                };
                acc += p;
                b.add_transition(s, a, t, p);
            }
            let c = rng.gen_range(-10i32..=10) as f64 / 2.0;
            let d = rng.gen_range(-2i32..=10) as f64 / 10.0;
            b.add_cost_c(s, a, c);
            b.add_cost_d(s, a, d);
        }
    }
    b.build().expect("generator respects model invariants")
}

/// Measures exercised by the randomized checks.
pub fn measure_family() -> Vec<OneStepMeasure> {
    vec![
        OneStepMeasure::Expectation,
        OneStepMeasure::CVaR { alpha: 0.1 },
        OneStepMeasure::CVaR { alpha: 0.33 },
        OneStepMeasure::CVaR { alpha: 0.9 },
        OneStepMeasure::WorstCase,
    ]
}

/// Random scenario: random MDP, a measure from [`measure_family`] (or the
/// semideviation), and `r0` drawn around the feasible threshold range, with
/// roughly one draw in eight below the feasibility floor.
pub fn random_scenario(seed: u64, cfg: &RandomInstanceConfig) -> Scenario {
    let mdp = random_mdp(seed, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut family = measure_family();
    family.push(OneStepMeasure::MeanUpperSemideviation { c: 0.5 });
    let measure = family[rng.gen_range(0..family.len())];
    let risk = RiskMeasureSpec::uniform(measure, mdp.horizon());
    let r0 = random_threshold(&mdp, &risk, &mut rng);
    Scenario {
        name: format!("random_{seed}"),
        mdp,
        risk,
        r0,
        reference: None,
    }
}

/// Threshold on a 0.05 grid spanning `[R_min - 0.1, R_max + 0.1]` at the
/// initial state.
pub fn random_threshold(mdp: &Mdp, risk: &RiskMeasureSpec, rng: &mut impl Rng) -> f64 {
    let b = compute_feasibility_bounds(mdp, risk).expect("valid spec");
    let x0 = mdp.initial_state();
    let lo = b.lower(0, x0) - 0.1;
    let hi = b.upper(0, x0) + 0.1;
    let t: f64 = rng.gen_range(lo..=hi);
    (t * 20.0).round() / 20.0
}
