use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Relative objective decrease that ends a proximal run (together with
    /// `tol_prox`) and the outer stray-field loop.
    pub tol_outer: f64,
    /// Relative residual of the elastic CG solve.
    pub tol_cg: f64,
    /// Per-node step size below which the proximal iteration stops.
    pub tol_prox: f64,
    pub max_outer: usize,
    pub max_cg: usize,
    pub max_prox: usize,
    /// Initial proximal step.
    pub prox_step: f64,
    /// Backtracking factor in (0, 1).
    pub backtrack: f64,
    pub n_stability_samples: usize,
    pub perturbation_scale: f64,
    pub tol_stability: f64,
    pub rng_seed: u64,
    /// Also start the alternation from uniform states and keep the best.
    pub global_restarts: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_outer: 1e-10,
            tol_cg: 1e-10,
            tol_prox: 1e-7,
            max_outer: 100,
            max_cg: 20_000,
            max_prox: 20_000,
            prox_step: 1.0,
            backtrack: 0.5,
            n_stability_samples: 200,
            perturbation_scale: 0.3,
            tol_stability: 1e-6,
            rng_seed: 0,
            global_restarts: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("solver.{name} must be positive (got {v})")))
            }
        };
        pos("tol_outer", self.tol_outer)?;
        pos("tol_cg", self.tol_cg)?;
        pos("tol_prox", self.tol_prox)?;
        pos("prox_step", self.prox_step)?;
        pos("tol_stability", self.tol_stability)?;
        pos("perturbation_scale", self.perturbation_scale)?;
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config(format!("solver.backtrack must lie in (0, 1) (got {})", self.backtrack)));
        }
        for (name, v) in [("max_outer", self.max_outer), ("max_cg", self.max_cg), ("max_prox", self.max_prox)] {
            if v < 1 {
                return Err(Error::Config(format!("solver.{name} must be at least 1")));
            }
        }
        Ok(())
    }
}
