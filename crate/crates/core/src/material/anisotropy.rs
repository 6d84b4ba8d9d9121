use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Thickness;

/// Tolerance for membership in the constraint set `{phi_p = 0}`.
pub const TOL_CONSTRAINT: f64 = 1e-10;

/// An energy density that may be `+inf` (constraint violated). Infeasible
/// values absorb everything they are added to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Finite(f64),
    Infeasible,
}

impl Density {
    pub fn finite(self) -> Option<f64> {
        match self {
            Density::Finite(v) => Some(v),
            Density::Infeasible => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, Density::Finite(_))
    }

    pub fn scale(self, w: f64) -> Density {
        match self {
            Density::Finite(v) => Density::Finite(v * w),
            Density::Infeasible => Density::Infeasible,
        }
    }
}

impl Add for Density {
    type Output = Density;
    fn add(self, rhs: Density) -> Density {
        match (self, rhs) {
            (Density::Finite(a), Density::Finite(b)) => Density::Finite(a + b),
            _ => Density::Infeasible,
        }
    }
}

/// Thickness scaling `f(h)` of the planar part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThicknessScaling {
    /// `f(h) = scale / h`, right limit `+inf`.
    Inverse { scale: f64 },
    /// `f(h) = value`.
    Constant { value: f64 },
}

impl ThicknessScaling {
    pub fn at(&self, h: f64) -> f64 {
        match *self {
            ThicknessScaling::Inverse { scale } => scale / h,
            ThicknessScaling::Constant { value } => value,
        }
    }

    /// `f(0+)`, `None` when infinite.
    pub fn limit(&self) -> Option<f64> {
        match *self {
            ThicknessScaling::Inverse { .. } => None,
            ThicknessScaling::Constant { value } => Some(value),
        }
    }
}

/// Off-plane part `phi_3`, vanishing exactly on the easy axes.
#[derive(Debug, Clone, PartialEq)]
pub enum OffPlane {
    /// `k3 (m_sat^2 - (m . s)^2)` with unit `s`.
    Uniaxial { k3: f64, axis: [f64; 3] },
    /// `k3 sum_{i<j} (m . a_i)^2 (m . a_j)^2 / m_sat^2` over an orthonormal triad.
    Cubic { k3: f64, axes: [[f64; 3]; 3] },
    /// Uniaxial with one easy axis per node.
    Tabulated { k3: f64, axes: Vec<[f64; 3]> },
}

/// `phi_h = f(h) phi_p + phi_3` with `phi_p(m_p) = k_p |m_p|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyModel {
    pub k_p: f64,
    pub offplane: OffPlane,
    pub scaling: ThicknessScaling,
    pub m_sat: f64,
}

fn unit(v: [f64; 3]) -> Result<[f64; 3]> {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Material {
            invariant: "easy_axis_nonzero",
            detail: format!("{v:?}"),
        });
    }
    Ok([v[0] / n, v[1] / n, v[2] / n])
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl AnisotropyModel {
    pub fn new(k_p: f64, offplane: OffPlane, scaling: ThicknessScaling, m_sat: f64) -> Result<Self> {
        let bad = |invariant, detail: String| Err(Error::Material { invariant, detail });
        if !(k_p >= 0.0) {
            return bad("anisotropy_nonnegative", format!("k_p = {k_p}"));
        }
        if !(m_sat > 0.0) {
            return bad("saturation_positive", format!("m_sat = {m_sat}"));
        }
        match scaling {
            ThicknessScaling::Inverse { scale } if !(scale > 0.0) => {
                return bad("scaling_positive", format!("scale = {scale}"))
            }
            ThicknessScaling::Constant { value } if !(value >= 0.0) => {
                return bad("scaling_positive", format!("value = {value}"))
            }
            _ => {}
        }
        let offplane = match offplane {
            OffPlane::Uniaxial { k3, axis } => {
                if !(k3 >= 0.0) {
                    return bad("anisotropy_nonnegative", format!("k3 = {k3}"));
                }
                OffPlane::Uniaxial { k3, axis: unit(axis)? }
            }
            OffPlane::Cubic { k3, axes } => {
                if !(k3 >= 0.0) {
                    return bad("anisotropy_nonnegative", format!("k3 = {k3}"));
                }
                let axes = [unit(axes[0])?, unit(axes[1])?, unit(axes[2])?];
                for i in 0..3 {
                    for j in 0..i {
                        if dot(&axes[i], &axes[j]).abs() > 1e-10 {
                            return bad("cubic_axes_orthogonal", format!("{axes:?}"));
                        }
                    }
                }
                OffPlane::Cubic { k3, axes }
            }
            OffPlane::Tabulated { k3, axes } => {
                if !(k3 >= 0.0) {
                    return bad("anisotropy_nonnegative", format!("k3 = {k3}"));
                }
                let axes = axes.into_iter().map(unit).collect::<Result<Vec<_>>>()?;
                OffPlane::Tabulated { k3, axes }
            }
        };
        Ok(Self { k_p, offplane, scaling, m_sat })
    }

    /// Easy directions (unit vectors) at a node.
    pub fn easy_axes(&self, node: usize) -> Vec<[f64; 3]> {
        match &self.offplane {
            OffPlane::Uniaxial { axis, .. } => vec![*axis],
            OffPlane::Cubic { axes, .. } => axes.to_vec(),
            OffPlane::Tabulated { axes, .. } => vec![axes[node % axes.len()]],
        }
    }

    pub fn planar(&self, m: &[f64; 3]) -> f64 {
        self.k_p * (m[0] * m[0] + m[1] * m[1])
    }

    pub fn offplane(&self, node: usize, m: &[f64; 3]) -> f64 {
        let ms2 = self.m_sat * self.m_sat;
        match &self.offplane {
            OffPlane::Uniaxial { k3, axis } => {
                let p = dot(m, axis);
                k3 * (ms2 - p * p).max(0.0)
            }
            OffPlane::Cubic { k3, axes } => {
                let p: Vec<f64> = axes.iter().map(|a| dot(m, a).powi(2)).collect();
                k3 * (p[0] * p[1] + p[1] * p[2] + p[2] * p[0]) / ms2
            }
            OffPlane::Tabulated { k3, axes } => {
                let p = dot(m, &axes[node % axes.len()]);
                k3 * (ms2 - p * p).max(0.0)
            }
        }
    }

    fn offplane_grad(&self, node: usize, m: &[f64; 3]) -> [f64; 3] {
        let uniaxial = |k3: f64, a: &[f64; 3]| {
            let p = dot(m, a);
            [-2.0 * k3 * p * a[0], -2.0 * k3 * p * a[1], -2.0 * k3 * p * a[2]]
        };
        match &self.offplane {
            OffPlane::Uniaxial { k3, axis } => uniaxial(*k3, axis),
            OffPlane::Tabulated { k3, axes } => uniaxial(*k3, &axes[node % axes.len()]),
            OffPlane::Cubic { k3, axes } => {
                let ms2 = self.m_sat * self.m_sat;
                let p: Vec<f64> = axes.iter().map(|a| dot(m, a)).collect();
                let q: Vec<f64> = p.iter().map(|v| v * v).collect();
                let mut g = [0.0; 3];
                for i in 0..3 {
                    let coef = 2.0 * k3 * p[i] * (q[(i + 1) % 3] + q[(i + 2) % 3]) / ms2;
                    for c in 0..3 {
                        g[c] += coef * axes[i][c];
                    }
                }
                g
            }
        }
    }

    /// True when the limit model replaces `f(0+) phi_p` by the hard
    /// constraint `{phi_p = 0}`.
    pub fn hard_planar_limit(&self) -> bool {
        self.scaling.limit().is_none() && self.k_p > 0.0
    }

    /// `phi_h(x, m)` at a node, or the limit density `phi_0`.
    pub fn density(&self, thickness: Thickness, node: usize, m: &[f64; 3]) -> Result<Density> {
        let off = self.offplane(node, m);
        match thickness {
            Thickness::Finite(h) => {
                check_h(h)?;
                Ok(Density::Finite(self.scaling.at(h) * self.planar(m) + off))
            }
            Thickness::Limit => match self.scaling.limit() {
                Some(f0) => Ok(Density::Finite(f0 * self.planar(m) + off)),
                None if self.k_p == 0.0 => Ok(Density::Finite(off)),
                None => {
                    if self.planar(m) <= TOL_CONSTRAINT {
                        Ok(Density::Finite(off))
                    } else {
                        Ok(Density::Infeasible)
                    }
                }
            },
        }
    }

    /// Gradient of the finite part of the density in `m`. Under a hard planar
    /// limit the planar term is a constraint and contributes nothing here.
    pub fn gradient(&self, thickness: Thickness, node: usize, m: &[f64; 3]) -> [f64; 3] {
        let f = match thickness {
            Thickness::Finite(h) => self.scaling.at(h),
            Thickness::Limit => self.scaling.limit().unwrap_or(0.0),
        };
        let mut g = self.offplane_grad(node, m);
        g[0] += 2.0 * f * self.k_p * m[0];
        g[1] += 2.0 * f * self.k_p * m[1];
        g
    }
}

pub(crate) fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::invalid(format!("thickness {h} outside (0, 1]")));
    }
    Ok(())
}
