//! Quasistatic rate-independent evolution of magnetoelastic films, for the
//! rescaled three-dimensional body and its Kirchhoff-Love plate limit.

pub mod energetics;
pub mod error;
pub mod fields;
pub mod harness;
pub mod material;
pub mod par;
pub mod solver;
pub mod stray;

pub use error::{Error, Result};
pub use fields::{Edge, Grid, MagnetizationField, Thickness};
