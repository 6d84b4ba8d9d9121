//! Constitutive objects: stiffness and its plane reduction, magnetostrictive
//! strain, anisotropy potentials and dissipation densities. Everything here
//! is immutable after construction.

mod anisotropy;
mod dissipation;
mod magnetostriction;
mod tensor;

pub use anisotropy::{AnisotropyModel, Density, OffPlane, ThicknessScaling, TOL_CONSTRAINT};
pub(crate) use anisotropy::check_h;
pub use dissipation::{DissipationParams, R3Law};
pub use magnetostriction::{
    check_saturated, eps_mag, eps_mag_voigt, eps_mag_voigt_pullback, norm3, TOL_SAT,
};
pub use tensor::{
    quadratic_form_q, reduce_tensor, strain_to_voigt, voigt_index, ElasticityTensor,
    PlaneReducedTensor, RelaxedPlanar,
};

use crate::error::{Error, Result};

/// All constitutive data of one run.
#[derive(Debug, Clone)]
pub struct Materials {
    pub m_sat: f64,
    /// Exchange constant `alpha`.
    pub exchange: f64,
    pub elasticity: ElasticityTensor,
    pub reduced: PlaneReducedTensor,
    pub anisotropy: AnisotropyModel,
    pub dissipation: DissipationParams,
}

impl Materials {
    pub fn new(
        m_sat: f64,
        exchange: f64,
        elasticity: ElasticityTensor,
        anisotropy: AnisotropyModel,
        dissipation: DissipationParams,
    ) -> Result<Self> {
        if !(m_sat > 0.0 && m_sat.is_finite()) {
            return Err(Error::Material { invariant: "saturation_positive", detail: format!("{m_sat}") });
        }
        if !(exchange >= 0.0 && exchange.is_finite()) {
            return Err(Error::Material { invariant: "exchange_nonnegative", detail: format!("{exchange}") });
        }
        if (anisotropy.m_sat - m_sat).abs() > 0.0 {
            return Err(Error::invalid("anisotropy model built for a different m_sat"));
        }
        let reduced = reduce_tensor(&elasticity)?;
        Ok(Self { m_sat, exchange, elasticity, reduced, anisotropy, dissipation })
    }

    /// Same materials with the dissipation switched off.
    pub fn without_dissipation(&self) -> Self {
        Self { dissipation: DissipationParams::none(), ..self.clone() }
    }
}
