use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Thickness;

/// Off-plane yield coefficient as a function of thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum R3Law {
    Constant { value: f64 },
    /// `R3(h) = at_zero + slope * h`.
    Affine { at_zero: f64, slope: f64 },
}

impl R3Law {
    pub fn at(&self, thickness: Thickness) -> f64 {
        match (*self, thickness) {
            (R3Law::Constant { value }, _) => value,
            (R3Law::Affine { at_zero, .. }, Thickness::Limit) => at_zero,
            (R3Law::Affine { at_zero, slope }, Thickness::Finite(h)) => at_zero + slope * h,
        }
    }
}

/// Yield coefficients of the 1-homogeneous dissipation potential
/// `R_p |dm_p| + R3(h) |dm_3|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationParams {
    pub r_p: f64,
    pub r3: R3Law,
}

impl DissipationParams {
    pub fn new(r_p: f64, r3: R3Law) -> Result<Self> {
        if !(r_p >= 0.0 && r_p.is_finite()) {
            return Err(Error::Material {
                invariant: "dissipation_nonnegative",
                detail: format!("R_p = {r_p}"),
            });
        }
        // affine law: nonnegative on (0, 1] iff nonnegative at both ends
        let ends = [r3.at(Thickness::Limit), r3.at(Thickness::Finite(1.0))];
        if ends.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Material {
                invariant: "dissipation_nonnegative",
                detail: format!("R3 law {r3:?}"),
            });
        }
        Ok(Self { r_p, r3 })
    }

    pub fn none() -> Self {
        Self { r_p: 0.0, r3: R3Law::Constant { value: 0.0 } }
    }

    pub fn is_zero(&self) -> bool {
        self.r_p == 0.0 && self.r3.at(Thickness::Limit) == 0.0 && self.r3.at(Thickness::Finite(1.0)) == 0.0
    }

    /// `R_p |(dm1, dm2)| + R3 |dm3|`.
    #[inline]
    pub fn density(&self, thickness: Thickness, dm: &[f64; 3]) -> f64 {
        self.r_p * dm[0].hypot(dm[1]) + self.r3.at(thickness) * dm[2].abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let p = DissipationParams::new(2.0, R3Law::Affine { at_zero: 0.5, slope: 1.0 }).unwrap();
        assert_eq!(p.density(Thickness::Finite(0.3), &[0.0; 3]), 0.0);
        assert_eq!(p.density(Thickness::Finite(0.3), &[3.0, 4.0, 0.0]), 10.0);
        assert_eq!(p.density(Thickness::Limit, &[0.0, 0.0, 1.0]), 0.5);
        assert_eq!(p.density(Thickness::Finite(0.5), &[0.0, 0.0, -1.0]), 1.0);
    }

    #[test]
    fn rejects_negative() {
        assert!(DissipationParams::new(-0.1, R3Law::Constant { value: 0.0 }).is_err());
        assert!(DissipationParams::new(0.1, R3Law::Affine { at_zero: 0.1, slope: -1.0 }).is_err());
    }
}
