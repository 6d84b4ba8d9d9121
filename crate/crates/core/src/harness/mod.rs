//! Run configuration, experiment drivers and result files.
//!
//! Every file an experiment produces carries the SHA-256 of the canonical
//! configuration and the seed. Numbers are written in shortest round-trip
//! form, so identical runs give identical bytes.

pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;

pub use config::{Experiment, RunConfig, OUTPUT_DIR_ENV};
pub use experiments::{
    gamma_sweep, nonincreasing_with_slack, rate_independence, run_evolve, run_gamma_sweep, run_static,
    run_stray_diag, static_minimize, stray_diag, EvolveRun, EvolveSummary, GammaSweep, RateCheck, StaticRun,
    SweepRow,
};
pub use output::{Artifacts, CsvTable, Stamp};
pub use validate::{validate, Check, Status, ValidationReport};

use crate::error::Result;

/// Result of one experiment: its files and whether every invariant held.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: Experiment,
    pub artifacts: Artifacts,
    pub invariants_hold: bool,
    /// One-line human summary.
    pub summary: String,
}

/// Runs `experiment` (the configured one when `None`).
pub fn run(cfg: &RunConfig, experiment: Option<Experiment>) -> Result<Outcome> {
    let experiment = experiment.unwrap_or(cfg.experiment);
    let (artifacts, invariants_hold, summary) = match experiment {
        Experiment::Static => {
            let (r, a) = run_static(cfg)?;
            (a, r.energy.feasible, format!("E = {:e}", r.energy.total))
        }
        Experiment::Evolve => {
            let (r, a) = run_evolve(cfg)?;
            let s = &r.summary;
            let line = format!(
                "{} steps, max balance residual {:.3e}, diss {:.6e}, audits {}",
                s.steps,
                s.max_balance_residual,
                s.diss_total,
                if s.all_audits_passed { "passed" } else { "FAILED" }
            );
            (a, true, line)
        }
        Experiment::GammaSweep => {
            let (r, a) = run_gamma_sweep(cfg)?;
            let gaps: Vec<f64> = r.rows.iter().map(|x| x.total_gap).collect();
            (a, true, format!("E_0 = {:e}, gaps {:?}", r.plate.total, gaps))
        }
        Experiment::StrayDiag => {
            let (rows, a) = run_stray_diag(cfg)?;
            let gaps: Vec<f64> = rows.iter().map(|x| x.gap).collect();
            (a, true, format!("stray gaps {gaps:?}"))
        }
        Experiment::Validate => {
            let report = validate(cfg);
            let mut a = Artifacts::default();
            a.add("validate.json", output::render_json(&report, &experiments::stamp(cfg)));
            let failed: Vec<String> = report.failures().map(|c| format!("{}.{}", c.suite, c.name)).collect();
            let line = if failed.is_empty() {
                format!("{} checks passed", report.checks.len())
            } else {
                format!("failed: {}", failed.join(", "))
            };
            (a, report.passed, line)
        }
    };
    Ok(Outcome { experiment, artifacts, invariants_hold, summary })
}
