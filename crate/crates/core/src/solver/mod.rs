//! Time-incremental minimization: elastic CG solves, proximal magnetization
//! updates, evolutions and stability audits.

mod audit;
mod cg;
mod config;
mod mstep;
mod step;

pub use audit::{competitor, stability_audit, AuditReport};
pub use cg::{elastic_solve, pcg, ElasticSolution};
pub use config::SolverConfig;
pub use mstep::{magnetization_step, MStepResult};
pub use step::{evolve, incremental_step, initial_state, StepOutcome, StepStats, TrajectoryRecord};
