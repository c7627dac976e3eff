//! Exact threshold-indexed value functions.
//!
//! `V(x, ·)` for a fixed `(stage, state)` is a non-increasing, right-continuous
//! step function of the risk threshold. It is `+∞` below the first breakpoint
//! (the feasibility floor) and constant after the last one.

use serde::{Deserialize, Serialize};

use crate::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub threshold: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdValueFunction {
    breakpoints: Vec<Breakpoint>,
}

impl ThresholdValueFunction {
    /// `+∞` for every threshold.
    pub fn infeasible() -> Self {
        ThresholdValueFunction::default()
    }

    /// Terminal value: 0 on `[0, ∞)`.
    pub fn terminal() -> Self {
        ThresholdValueFunction {
            breakpoints: vec![Breakpoint {
                threshold: 0.0,
                value: 0.0,
            }],
        }
    }

    /// Lower-left envelope of `(activation threshold, value)` pairs:
    /// `V(r) = min { v : (a, v) in points, a ≤ r }`.
    ///
    /// Thresholds closer than [`TOL`] are merged into the earlier one, and
    /// improvements smaller than [`TOL`] are ignored.
    pub fn envelope(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut pts: Vec<(f64, f64)> = points.into_iter().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut breakpoints: Vec<Breakpoint> = Vec::new();
        let mut best = f64::INFINITY;
        for (a, v) in pts {
            if v >= best - TOL || v.is_nan() {
                continue;
            }
            match breakpoints.last_mut() {
                Some(last) if a <= last.threshold + TOL => last.value = v,
                _ => breakpoints.push(Breakpoint {
                    threshold: a,
                    value: v,
                }),
            }
            best = v;
        }
        ThresholdValueFunction { breakpoints }
    }

    /// Builds from explicit breakpoints, checking the staircase invariants.
    pub fn from_breakpoints(breakpoints: Vec<Breakpoint>) -> Result<Self, String> {
        let f = ThresholdValueFunction { breakpoints };
        f.check_invariants()?;
        Ok(f)
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn is_infeasible(&self) -> bool {
        self.breakpoints.is_empty()
    }

    /// Smallest feasible threshold (`+∞` when infeasible everywhere).
    pub fn floor(&self) -> f64 {
        self.breakpoints
            .first()
            .map_or(f64::INFINITY, |b| b.threshold)
    }

    /// Index of the largest breakpoint `≤ r` (within [`TOL`]).
    pub fn index_at(&self, r: f64) -> Option<usize> {
        let n = self
            .breakpoints
            .partition_point(|b| b.threshold <= r + TOL);
        n.checked_sub(1)
    }

    pub fn value_at(&self, r: f64) -> f64 {
        self.index_at(r)
            .map_or(f64::INFINITY, |i| self.breakpoints[i].value)
    }

    /// Value once the constraint no longer binds.
    pub fn unconstrained_value(&self) -> f64 {
        self.breakpoints.last().map_or(f64::INFINITY, |b| b.value)
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for b in &self.breakpoints {
            if !b.threshold.is_finite() || !b.value.is_finite() {
                return Err(format!("non-finite breakpoint {b:?}"));
            }
        }
        for w in self.breakpoints.windows(2) {
            if w[1].threshold <= w[0].threshold {
                return Err(format!("thresholds not increasing: {:?}", w));
            }
            if w[1].value >= w[0].value {
                return Err(format!("values not decreasing: {:?}", w));
            }
        }
        Ok(())
    }

    /// Same breakpoints and values within `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.breakpoints.len() == other.breakpoints.len()
            && self
                .breakpoints
                .iter()
                .zip(&other.breakpoints)
                .all(|(a, b)| {
                    (a.threshold - b.threshold).abs() <= tol && (a.value - b.value).abs() <= tol
                })
    }
}
