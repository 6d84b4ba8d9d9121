//! Energies, dissipation distances, powers and the energy-balance residual.

mod balance;
mod dissipation;
mod elastic;
mod problem;
mod schedule;

pub use balance::{balance_residual, BalanceResidual};
pub use dissipation::{dissipation_distance, trajectory_dissipation};
pub use elastic::ElasticSystem;
pub use problem::{energy_bulk, energy_plate, BulkState, EnergyBreakdown, PlateState, Problem, State};
pub use schedule::{FieldLaw, Lerp, LoadSchedule, Side, Table};
