//! Whole-space magnetostatics by FFT convolution and the thin-film surrogate.

mod fft;
mod kernel;
mod limit;
mod solver;

pub use kernel::demag_tensor;
pub use limit::{extrusion_layers, stray_energy_limit, stray_limit_diagnostic, StrayDiagRow};
pub use solver::{energy_from_field, solve_stray_fft, StrayFieldSolution, StraySolver};
