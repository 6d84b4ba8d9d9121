//! Grids, finite-difference operators, magnetization fields and plate
//! kinematics.

mod grid;
mod kinematics;
mod magnetization;
mod stencil;

pub use grid::{Edge, Grid, Thickness};
pub use kinematics::{
    gradient, lift_displacement, symmetric_gradient, validate_kl, DirichletDatum, ModeKind, ModeSample,
    PlateDisplacement, TOL_KL,
};
pub use magnetization::{project_node, project_sphere, MagnetizationField};
pub use stencil::Stencil1d;
