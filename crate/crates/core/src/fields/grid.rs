use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::stencil::Stencil1d;

/// Film thickness: a finite `h` in (0, 1] or the plate limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thickness {
    Finite(f64),
    Limit,
}

/// Side of the rectangle carrying the Dirichlet datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    /// `x1 = 0`
    #[default]
    Left,
    /// `x1 = Lx`
    Right,
    /// `x2 = 0`
    Bottom,
    /// `x2 = Ly`
    Top,
}

/// Tensor-product node grid on `S x (0, 1)` (rescaled thickness coordinate).
///
/// Plate grids carry a single layer and `Thickness::Limit`; bulk grids carry
/// `nz >= 2` layers spanning `z3 in [0, 1]`.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub thickness: Thickness,
    pub dirichlet_edge: Edge,
    wx: Vec<f64>,
    wy: Vec<f64>,
    wz: Vec<f64>,
    diff: [Stencil1d; 3],
    diff_t: [Stencil1d; 3],
}

fn trapezoid(n: usize, d: f64) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let mut w = vec![d; n];
    w[0] = 0.5 * d;
    w[n - 1] = 0.5 * d;
    w
}

fn simpson(n: usize, d: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for i in (0..n - 1).step_by(2) {
        w[i] += d / 3.0;
        w[i + 1] += 4.0 * d / 3.0;
        w[i + 2] += d / 3.0;
    }
    w
}

impl Grid {
    fn build(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, thickness: Thickness, edge: Edge) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::invalid(format!("grid needs nx, ny >= 3 (got {nx} x {ny})")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::invalid(format!("side lengths must be positive (got {lx}, {ly})")));
        }
        let dx = lx / (nx - 1) as f64;
        let dy = ly / (ny - 1) as f64;
        let dz = if nz > 1 { 1.0 / (nz - 1) as f64 } else { 1.0 };
        // through-thickness: Simpson on odd layer counts, trapezoid otherwise
        let wz = if nz >= 3 && nz % 2 == 1 { simpson(nz, dz) } else { trapezoid(nz, dz) };
        let diff = [
            Stencil1d::first_derivative(nx, dx),
            Stencil1d::first_derivative(ny, dy),
            Stencil1d::first_derivative(nz, dz),
        ];
        let diff_t = [diff[0].transpose(), diff[1].transpose(), diff[2].transpose()];
        Ok(Self {
            nx,
            ny,
            nz,
            lx,
            ly,
            thickness,
            dirichlet_edge: edge,
            wx: trapezoid(nx, dx),
            wy: trapezoid(ny, dy),
            wz,
            diff,
            diff_t,
        })
    }

    /// Single-layer grid for the plate limit.
    pub fn plate(nx: usize, ny: usize, lx: f64, ly: f64, edge: Edge) -> Result<Self> {
        Self::build(nx, ny, 1, lx, ly, Thickness::Limit, edge)
    }

    /// Rescaled bulk grid `S x [0, 1]` for thickness `h`.
    pub fn bulk(nx: usize, ny: usize, nz: usize, lx: f64, ly: f64, h: f64, edge: Edge) -> Result<Self> {
        if nz < 2 {
            return Err(Error::invalid("bulk grid needs nz >= 2"));
        }
        crate::material::check_h(h)?;
        Self::build(nx, ny, nz, lx, ly, Thickness::Finite(h), edge)
    }

    /// Bulk grid over the same planar layout.
    pub fn with_layers(&self, nz: usize, h: f64) -> Result<Self> {
        Self::bulk(self.nx, self.ny, nz, self.lx, self.ly, h, self.dirichlet_edge)
    }

    /// Plate grid over the same planar layout.
    pub fn planar(&self) -> Self {
        Self::build(self.nx, self.ny, 1, self.lx, self.ly, Thickness::Limit, self.dirichlet_edge)
            .expect("planar layout already validated")
    }

    pub fn is_plate(&self) -> bool {
        self.nz == 1
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn n_planar(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn dx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }

    pub fn dz(&self) -> f64 {
        if self.nz > 1 { 1.0 / (self.nz - 1) as f64 } else { 1.0 }
    }

    /// Largest planar spacing.
    pub fn spacing(&self) -> f64 {
        self.dx().max(self.dy())
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    #[inline]
    pub fn ijk(&self, n: usize) -> (usize, usize, usize) {
        let i = n % self.nx;
        let j = (n / self.nx) % self.ny;
        (i, j, n / (self.nx * self.ny))
    }

    /// Planar index of a node (drops the layer).
    #[inline]
    pub fn planar_index(&self, n: usize) -> usize {
        n % (self.nx * self.ny)
    }

    /// Node position `(x1, x2, z3)` with `z3` in the rescaled interval.
    pub fn coords(&self, n: usize) -> [f64; 3] {
        let (i, j, k) = self.ijk(n);
        let z = if self.nz > 1 { k as f64 * self.dz() } else { 0.0 };
        [i as f64 * self.dx(), j as f64 * self.dy(), z]
    }

    /// Quadrature weight of a node; weights sum to `|S|`.
    #[inline]
    pub fn weight(&self, n: usize) -> f64 {
        let (i, j, k) = self.ijk(n);
        self.wx[i] * self.wy[j] * self.wz[k]
    }

    pub fn planar_weights(&self) -> (&[f64], &[f64]) {
        (&self.wx, &self.wy)
    }

    pub fn layer_weights(&self) -> &[f64] {
        &self.wz
    }

    /// Whether the planar position `(i, j)` lies on the Dirichlet edge.
    pub fn on_dirichlet_edge(&self, i: usize, j: usize) -> bool {
        match self.dirichlet_edge {
            Edge::Left => i == 0,
            Edge::Right => i == self.nx - 1,
            Edge::Bottom => j == 0,
            Edge::Top => j == self.ny - 1,
        }
    }

    /// Nodes whose displacement is pinned. On bulk grids this is the edge
    /// fiber of the bottom face `z3 = 0`, the counterpart of the pinned plate
    /// unknowns.
    pub fn is_pinned(&self, n: usize) -> bool {
        let (i, j, k) = self.ijk(n);
        k == 0 && self.on_dirichlet_edge(i, j)
    }

    pub fn stencil(&self, axis: usize) -> &Stencil1d {
        &self.diff[axis]
    }

    /// First derivative along `axis` (central inside, second-order one-sided
    /// at the ends).
    pub fn d(&self, axis: usize, f: &[f64]) -> Vec<f64> {
        self.diff[axis].apply_axis(f, self.dims(), axis)
    }

    /// Adjoint of [`Grid::d`] with respect to the plain Euclidean product.
    pub fn d_t(&self, axis: usize, f: &[f64]) -> Vec<f64> {
        self.diff_t[axis].apply_axis(f, self.dims(), axis)
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nz == other.nz
            && self.lx == other.lx
            && self.ly == other.ly
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_area() {
        let g = Grid::bulk(5, 7, 3, 2.0, 0.5, 0.25, Edge::Left).unwrap();
        let s: f64 = (0..g.n_nodes()).map(|n| g.weight(n)).sum();
        assert!((s - 1.0).abs() < 1e-14);
        let p = Grid::plate(4, 6, 2.0, 0.5, Edge::Top).unwrap();
        let s: f64 = (0..p.n_nodes()).map(|n| p.weight(n)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_or_degenerate() {
        assert!(Grid::plate(2, 5, 1.0, 1.0, Edge::Left).is_err());
        assert!(Grid::plate(5, 5, 0.0, 1.0, Edge::Left).is_err());
        assert!(Grid::bulk(5, 5, 1, 1.0, 1.0, 0.5, Edge::Left).is_err());
        assert!(Grid::bulk(5, 5, 3, 1.0, 1.0, 1.5, Edge::Left).is_err());
    }

    #[test]
    fn pinned_nodes_follow_edge() {
        let g = Grid::bulk(4, 4, 3, 1.0, 1.0, 0.5, Edge::Right).unwrap();
        let pinned: Vec<_> = (0..g.n_nodes()).filter(|&n| g.is_pinned(n)).collect();
        assert_eq!(pinned.len(), 4);
        assert!(pinned.iter().all(|&n| g.ijk(n).0 == 3 && g.ijk(n).2 == 0));
    }
}
