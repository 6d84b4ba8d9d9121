use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{Edge, Grid, MagnetizationField};
use crate::par;

/// Per-node gradient `[d1 f, d2 f, d3 f]` (`d3 = 0` on plate grids).
pub fn gradient(f: &[f64], grid: &Grid) -> Result<Vec<[f64; 3]>> {
    if f.len() != grid.n_nodes() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", f.len(), grid.n_nodes())));
    }
    let d0 = grid.d(0, f);
    let d1 = grid.d(1, f);
    let d2 = if grid.nz > 1 { grid.d(2, f) } else { vec![0.0; f.len()] };
    Ok(par::map(f.len(), |n| [d0[n], d1[n], d2[n]]))
}

/// Per-node symmetric gradient of a vector field.
pub fn symmetric_gradient(u: &[[f64; 3]], grid: &Grid) -> Result<Vec<[[f64; 3]; 3]>> {
    if u.len() != grid.n_nodes() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", u.len(), grid.n_nodes())));
    }
    let mut g = Vec::with_capacity(3);
    for c in 0..3 {
        let comp: Vec<f64> = u.iter().map(|v| v[c]).collect();
        g.push(gradient(&comp, grid)?);
    }
    Ok(par::map(u.len(), |n| {
        let mut e = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                e[i][j] = 0.5 * (g[i][n][j] + g[j][n][i]);
            }
        }
        e
    }))
}

/// Shape of the boundary displacement, in coordinates attached to the
/// Dirichlet edge: `s` runs along the edge (centered), `n` points inward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Zero,
    /// In-plane tangential displacement `s`.
    Stretch,
    /// In-plane normal displacement `s`.
    Shear,
    /// Transverse displacement `s^2 / 2`.
    EdgeBend,
}

/// Plate-side mode `(w1, w2, w)` with planar derivatives of `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub w: [f64; 3],
    pub grad_w: [f64; 2],
}

/// Kirchhoff-Love boundary datum: a mode shape scaled by the load amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletDatum {
    pub kind: ModeKind,
    pub edge: Edge,
    pub lx: f64,
    pub ly: f64,
}

impl DirichletDatum {
    pub fn new(kind: ModeKind, grid: &Grid) -> Self {
        Self { kind, edge: grid.dirichlet_edge, lx: grid.lx, ly: grid.ly }
    }

    /// Unit tangent, inward normal and tangential coordinate at `(x1, x2)`.
    fn frame(&self, x1: f64, x2: f64) -> ([f64; 2], [f64; 2], f64) {
        match self.edge {
            Edge::Left => ([0.0, 1.0], [1.0, 0.0], x2 - 0.5 * self.ly),
            Edge::Right => ([0.0, 1.0], [-1.0, 0.0], x2 - 0.5 * self.ly),
            Edge::Bottom => ([1.0, 0.0], [0.0, 1.0], x1 - 0.5 * self.lx),
            Edge::Top => ([1.0, 0.0], [0.0, -1.0], x1 - 0.5 * self.lx),
        }
    }

    pub fn plate_sample(&self, x1: f64, x2: f64) -> ModeSample {
        let (tan, nor, s) = self.frame(x1, x2);
        match self.kind {
            ModeKind::Zero => ModeSample { w: [0.0; 3], grad_w: [0.0; 2] },
            ModeKind::Stretch => ModeSample { w: [s * tan[0], s * tan[1], 0.0], grad_w: [0.0; 2] },
            ModeKind::Shear => ModeSample { w: [s * nor[0], s * nor[1], 0.0], grad_w: [0.0; 2] },
            ModeKind::EdgeBend => ModeSample { w: [0.0, 0.0, 0.5 * s * s], grad_w: [s * tan[0], s * tan[1]] },
        }
    }

    /// Planar mode components on every node of `grid` as `(w1, w2, w)`.
    pub fn plate_fields(&self, grid: &Grid) -> [Vec<f64>; 3] {
        let mut out = [vec![0.0; grid.n_nodes()], vec![0.0; grid.n_nodes()], vec![0.0; grid.n_nodes()]];
        for n in 0..grid.n_nodes() {
            let x = grid.coords(n);
            let s = self.plate_sample(x[0], x[1]);
            for c in 0..3 {
                out[c][n] = s.w[c];
            }
        }
        out
    }

    /// Three-dimensional mode `(w1 - z dw/dx1, w2 - z dw/dx2, w)` on the
    /// rescaled grid.
    pub fn bulk_field(&self, grid: &Grid) -> Vec<[f64; 3]> {
        (0..grid.n_nodes())
            .map(|n| {
                let x = grid.coords(n);
                let s = self.plate_sample(x[0], x[1]);
                [s.w[0] - x[2] * s.grad_w[0], s.w[1] - x[2] * s.grad_w[1], s.w[2]]
            })
            .collect()
    }
}

/// Tolerance for analytically Kirchhoff-Love modes.
pub const TOL_KL: f64 = 1e-10;

/// Largest transverse strain `|eps_i3|` of a sampled displacement.
pub fn validate_kl(u: &[[f64; 3]], grid: &Grid) -> Result<f64> {
    let e = symmetric_gradient(u, grid)?;
    Ok(e.iter().map(|t| t[0][2].abs().max(t[1][2].abs()).max(t[2][2].abs())).fold(0.0, f64::max))
}

/// Planar unknowns of a plate state, each with one value per plate node.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateDisplacement {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub v: Vec<f64>,
}

impl PlateDisplacement {
    pub fn zeros(n: usize) -> Self {
        Self { v1: vec![0.0; n], v2: vec![0.0; n], v: vec![0.0; n] }
    }

    /// Unknown vector in block order `v1, v2, v`.
    pub fn to_flat(&self) -> Vec<f64> {
        [self.v1.as_slice(), &self.v2, &self.v].concat()
    }

    pub fn from_flat(x: &[f64]) -> Self {
        let n = x.len() / 3;
        Self { v1: x[..n].to_vec(), v2: x[n..2 * n].to_vec(), v: x[2 * n..].to_vec() }
    }
}

/// Lifts a plate state to a displacement on the rescaled bulk grid so that its
/// transverse strains reproduce those of the magnetostrictive strain.
pub fn lift_displacement(
    disp: &PlateDisplacement,
    m: &MagnetizationField,
    plate: &Grid,
    bulk: &Grid,
) -> Result<Vec<[f64; 3]>> {
    if !m.planar_only() {
        return Err(Error::invalid("lift needs a planar magnetization"));
    }
    if m.dims()[0] != plate.nx || m.dims()[1] != plate.ny || bulk.nx != plate.nx || bulk.ny != plate.ny {
        return Err(Error::GridMismatch("lift grids differ".into()));
    }
    let np = plate.n_planar();
    if disp.v1.len() != np || disp.v2.len() != np || disp.v.len() != np {
        return Err(Error::GridMismatch("plate displacement has wrong length".into()));
    }
    let m = m.planar_layer();
    let ms2 = m.m_sat() * m.m_sat();
    let m3: Vec<f64> = m.values().iter().map(|v| v[2]).collect();
    let d_m3 = [plate.d(0, &m3), plate.d(1, &m3)];
    let d_v = [plate.d(0, &disp.v), plate.d(1, &disp.v)];
    Ok(par::map(bulk.n_nodes(), |n| {
        let p = n % np;
        let z = bulk.coords(n)[2];
        let mv = m.values()[p];
        let g = mv[2] * mv[2] - ms2 / 3.0;
        let base = [disp.v1[p], disp.v2[p]];
        let mut u = [0.0; 3];
        for i in 0..2 {
            let t = mv[i] * mv[2];
            let dg = 2.0 * mv[2] * d_m3[i][p];
            u[i] = base[i] + z * (2.0 * t - d_v[i][p]) - 0.5 * z * z * dg;
        }
        u[2] = disp.v[p] + z * g;
        u
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_strain_exact() {
        let g = Grid::bulk(5, 4, 3, 1.0, 2.0, 0.5, Edge::Left).unwrap();
        let a = [[0.3, -1.2, 0.5], [0.7, 0.1, -0.4], [2.0, 0.0, 1.5]];
        let u: Vec<[f64; 3]> = (0..g.n_nodes())
            .map(|n| {
                let x = g.coords(n);
                let mut r = [0.0; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        r[i] += a[i][j] * x[j];
                    }
                }
                r
            })
            .collect();
        for e in symmetric_gradient(&u, &g).unwrap() {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((e[i][j] - 0.5 * (a[i][j] + a[j][i])).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bulk_modes_are_kirchhoff_love() {
        let g = Grid::bulk(7, 6, 3, 1.0, 1.0, 0.25, Edge::Bottom).unwrap();
        for kind in [ModeKind::Stretch, ModeKind::Shear, ModeKind::EdgeBend] {
            let u = DirichletDatum::new(kind, &g).bulk_field(&g);
            assert!(validate_kl(&u, &g).unwrap() < TOL_KL, "{kind:?}");
        }
    }

    #[test]
    fn uniform_lift() {
        let p = Grid::plate(5, 5, 1.0, 1.0, Edge::Left).unwrap();
        let b = p.with_layers(3, 1.0).unwrap();
        let m = MagnetizationField::uniform(&p, [0.0, 0.0, 1.0], 1.0).unwrap();
        let u = lift_displacement(&PlateDisplacement::zeros(25), &m, &p, &b).unwrap();
        for n in 0..b.n_nodes() {
            let z = b.coords(n)[2];
            assert!(u[n][0].abs() < 1e-15 && u[n][1].abs() < 1e-15);
            assert!((u[n][2] - 2.0 * z / 3.0).abs() < 1e-15);
        }
    }
}
