//! Finite-horizon Markov decision processes with dynamic, time-consistent
//! risk constraints.
//!
//! The crate solves
//!
//! ```text
//!   min_π  E[ Σ_k c(x_k, u_k) ]   s.t.   ρ_{0,N}(d(x_0,u_0), …, d(x_{N-1},u_{N-1}), 0) ≤ r0
//! ```
//!
//! where `ρ_{0,N}` is a nested composition of coherent one-step risk measures.
//! The risk threshold is carried as an extra state coordinate and the value
//! function of every `(stage, state)` pair is stored as an exact staircase over
//! that coordinate ([`staircase::ThresholdValueFunction`]).
//!
//! Module map:
//!
//! * [`mdp`]: finite MDP model, histories and deterministic history policies.
//! * [`scenario`]: scenario documents and their validation.
//! * [`risk`]: one-step risk measures, nested dynamic risk, static metrics.
//! * [`staircase`]: threshold-indexed value functions.
//! * [`dp`]: feasibility bounds and the augmented-state backward induction.
//! * [`policy`]: augmented policies, risk-to-go construction, martingale check.
//! * [`consistency`]: time-consistency audits, demos and Monte-Carlo rollout.
//! * [`oracle`]: brute-force policy enumeration used as an independent reference.
//! * [`fixtures`]: shipped scenarios and the seeded random-instance generator.
//! * [`report`]: structured and text reports.

pub mod consistency;
pub mod dp;
pub mod fixtures;
pub mod mdp;
pub mod oracle;
pub mod policy;
pub mod report;
pub mod risk;
pub mod scenario;
pub mod staircase;

/// Absolute tolerance used for every feasibility and equality comparison.
pub const TOL: f64 = 1e-9;

pub use dp::{solve, Solution, SolveError};
pub use mdp::{ActionId, History, HistoryPolicy, Mdp, MdpError, StateId};
pub use risk::{OneStepMeasure, RiskMeasureSpec};
pub use scenario::{Scenario, ScenarioError};
pub use staircase::ThresholdValueFunction;
