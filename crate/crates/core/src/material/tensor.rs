use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

/// Voigt slot of the symmetric index pair `(i, j)` (0-based), ordered
/// 11, 22, 33, 23, 13, 12.
pub const fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Planar Voigt slots (11, 22, 12) inside the 3D ordering.
const PLANAR: [usize; 3] = [0, 1, 5];
/// Transverse slots (33, 23, 13) inside the 3D ordering.
const TRANSVERSE: [usize; 3] = [2, 3, 4];

/// Strain in engineering Voigt form `(e11, e22, e33, 2e23, 2e13, 2e12)`.
pub fn strain_to_voigt(e: &[[f64; 3]; 3]) -> [f64; 6] {
    [
        e[0][0],
        e[1][1],
        e[2][2],
        e[1][2] + e[2][1],
        e[0][2] + e[2][0],
        e[0][1] + e[1][0],
    ]
}

/// Full three-dimensional stiffness stored as a 6x6 Voigt matrix acting on
/// engineering strains, so that `C e : e = e^T [C] e`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityTensor {
    voigt: Matrix6<f64>,
}

impl ElasticityTensor {
    /// Validates symmetry, positive definiteness and `C_3333 > 0`.
    pub fn new(voigt: [[f64; 6]; 6]) -> Result<Self> {
        let m = Matrix6::from_fn(|i, j| voigt[i][j]);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Material {
                invariant: "elasticity_finite",
                detail: "non-finite stiffness entry".into(),
            });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..6 {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Material {
                        invariant: "elasticity_symmetric",
                        detail: format!("C[{i}][{j}] != C[{j}][{i}]"),
                    });
                }
            }
        }
        if m[(2, 2)] <= 0.0 {
            return Err(Error::Material {
                invariant: "elasticity_c3333_positive",
                detail: format!("C_3333 = {}", m[(2, 2)]),
            });
        }
        let sym = (m + m.transpose()) * 0.5;
        let min_eig = sym.symmetric_eigenvalues().min();
        if min_eig <= 1e-12 * scale {
            return Err(Error::Material {
                invariant: "elasticity_positive_definite",
                detail: format!("smallest eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(Self { voigt: sym })
    }

    /// Isotropic stiffness from the Lamé pair.
    pub fn isotropic(lambda: f64, mu: f64) -> Result<Self> {
        let mut c = [[0.0; 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = lambda;
            }
            c[i][i] = lambda + 2.0 * mu;
            c[i + 3][i + 3] = mu;
        }
        Self::new(c)
    }

    pub fn voigt(&self) -> &Matrix6<f64> {
        &self.voigt
    }

    /// Tensor component `C_ijkl` (0-based indices).
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.voigt[(voigt_index(i, j), voigt_index(k, l))]
    }

    /// Stress `C e` for an engineering Voigt strain.
    pub fn stress(&self, e: &[f64; 6]) -> [f64; 6] {
        let s = self.voigt * Vector6::from_column_slice(e);
        [s[0], s[1], s[2], s[3], s[4], s[5]]
    }

    /// `C e : e`.
    pub fn energy_density(&self, e: &[f64; 6]) -> f64 {
        let v = Vector6::from_column_slice(e);
        v.dot(&(self.voigt * v))
    }

    /// Blocks of the partition into planar and transverse slots.
    fn blocks(&self) -> (Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) {
        let pp = Matrix3::from_fn(|a, b| self.voigt[(PLANAR[a], PLANAR[b])]);
        let pt = Matrix3::from_fn(|a, b| self.voigt[(PLANAR[a], TRANSVERSE[b])]);
        let tt = Matrix3::from_fn(|a, b| self.voigt[(TRANSVERSE[a], TRANSVERSE[b])]);
        (pp, pt, tt)
    }
}

/// Plane-relaxed stiffness acting on planar engineering strains
/// `(A11, A22, 2 A12)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneReducedTensor {
    voigt2: Matrix3<f64>,
}

impl PlaneReducedTensor {
    pub fn voigt2(&self) -> &Matrix3<f64> {
        &self.voigt2
    }

    /// Component `C0_ijkl` with `i, j, k, l` in {0, 1}.
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let slot = |a: usize, b: usize| if a == b { a } else { 2 };
        self.voigt2[(slot(i, j), slot(k, l))]
    }

    /// `C0 x : y` for planar engineering strains.
    #[inline]
    pub fn contract(&self, x: &[f64; 3], y: &[f64; 3]) -> f64 {
        let c = &self.voigt2;
        let mut acc = 0.0;
        for a in 0..3 {
            let mut row = 0.0;
            for b in 0..3 {
                row += c[(a, b)] * y[b];
            }
            acc += x[a] * row;
        }
        acc
    }

    /// `C0 x`.
    #[inline]
    pub fn apply(&self, x: &[f64; 3]) -> [f64; 3] {
        let c = &self.voigt2;
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = c[(a, 0)] * x[0] + c[(a, 1)] * x[1] + c[(a, 2)] * x[2];
        }
        out
    }
}

/// Relaxes the transverse strain components pointwise: the Schur complement
/// of the (33, 23, 13) block. When the stiffness has no coupling between the
/// planar and the transverse shear slots this is
/// `C0_ijkl = C_ijkl - C_ij33 C_kl33 / C_3333`.
pub fn reduce_tensor(c: &ElasticityTensor) -> Result<PlaneReducedTensor> {
    let (pp, pt, tt) = c.blocks();
    let chol = tt.cholesky().ok_or_else(|| Error::Material {
        invariant: "elasticity_positive_definite",
        detail: "transverse block is not positive definite".into(),
    })?;
    let reduced = pp - pt * chol.solve(&pt.transpose());
    let reduced = (reduced + reduced.transpose()) * 0.5;
    if reduced.symmetric_eigenvalues().min() <= 0.0 {
        return Err(Error::Material {
            invariant: "reduced_positive_definite",
            detail: "plane-reduced stiffness lost definiteness".into(),
        });
    }
    Ok(PlaneReducedTensor { voigt2: reduced })
}

/// Value and minimizer of the relaxed planar energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxedPlanar {
    pub value: f64,
    /// Minimizing transverse shear `(e13, e23)`.
    pub a: [f64; 2],
    /// Minimizing transverse normal strain `e33`.
    pub b: f64,
}

/// `Q(A) = min_{a, b} C [[A, a], [a^T, b]] : [[A, a], [a^T, b]]` for a
/// symmetric 2x2 matrix `A`.
pub fn quadratic_form_q(c: &ElasticityTensor, a: &[[f64; 2]; 2]) -> Result<RelaxedPlanar> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if (a[0][1] - a[1][0]).abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::invalid("planar strain must be symmetric"));
    }
    let (pp, pt, tt) = c.blocks();
    let ap = Vector3::new(a[0][0], a[1][1], a[0][1] + a[1][0]);
    let chol = tt.cholesky().ok_or_else(|| Error::Material {
        invariant: "elasticity_positive_definite",
        detail: "transverse block is not positive definite".into(),
    })?;
    // transverse engineering strains (e33, 2e23, 2e13)
    let t = -chol.solve(&(pt.transpose() * ap));
    let value = ap.dot(&(pp * ap)) + 2.0 * ap.dot(&(pt * t)) + t.dot(&(tt * t));
    Ok(RelaxedPlanar {
        value,
        a: [0.5 * t[2], 0.5 * t[1]],
        b: t[0],
    })
}
