use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::material::{norm3, TOL_SAT};

/// Per-node magnetization with `|m| = m_sat`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationField {
    values: Vec<[f64; 3]>,
    m_sat: f64,
    dims: [usize; 3],
    planar_only: bool,
}

fn columns_identical(values: &[[f64; 3]], dims: [usize; 3]) -> bool {
    let np = dims[0] * dims[1];
    (np..values.len()).all(|n| values[n] == values[n % np])
}

impl MagnetizationField {
    /// Wraps saturated values; fails if any node is off the sphere.
    pub fn new(grid: &Grid, values: Vec<[f64; 3]>, m_sat: f64) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        for (n, v) in values.iter().enumerate() {
            let r = norm3(v);
            if !r.is_finite() || (r - m_sat).abs() > TOL_SAT * m_sat {
                return Err(Error::invalid(format!("node {n}: |m| = {r}, expected {m_sat}")));
            }
        }
        let dims = grid.dims();
        let planar_only = columns_identical(&values, dims);
        Ok(Self { values, m_sat, dims, planar_only })
    }

    /// Uniform field along `dir` (normalized).
    pub fn uniform(grid: &Grid, dir: [f64; 3], m_sat: f64) -> Result<Self> {
        project_sphere(grid, vec![dir; grid.n_nodes()], m_sat)
    }

    /// Field from a function of planar position, constant across layers.
    pub fn from_planar<F>(grid: &Grid, m_sat: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> [f64; 3],
    {
        let raw = (0..grid.n_nodes())
            .map(|n| {
                let x = grid.coords(n);
                f(x[0], x[1])
            })
            .collect();
        project_sphere(grid, raw, m_sat)
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn into_values(self) -> Vec<[f64; 3]> {
        self.values
    }

    pub fn m_sat(&self) -> f64 {
        self.m_sat
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn planar_only(&self) -> bool {
        self.planar_only
    }

    pub fn matches(&self, grid: &Grid) -> bool {
        self.dims == grid.dims()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[c]).collect()
    }

    /// Bottom layer as a single-layer field.
    pub fn planar_layer(&self) -> Self {
        let np = self.dims[0] * self.dims[1];
        Self {
            values: self.values[..np].to_vec(),
            m_sat: self.m_sat,
            dims: [self.dims[0], self.dims[1], 1],
            planar_only: true,
        }
    }

    /// Copies a planar field to every layer of `grid`.
    pub fn extrude(&self, grid: &Grid) -> Result<Self> {
        if !self.planar_only {
            return Err(Error::invalid("only planar fields can be extruded"));
        }
        if grid.nx != self.dims[0] || grid.ny != self.dims[1] {
            return Err(Error::GridMismatch("planar layouts differ".into()));
        }
        let np = grid.n_planar();
        let values = (0..grid.n_nodes()).map(|n| self.values[n % np]).collect();
        Ok(Self { values, m_sat: self.m_sat, dims: grid.dims(), planar_only: true })
    }

    /// Largest saturation defect over nodes.
    pub fn saturation_defect(&self) -> f64 {
        self.values.iter().map(|v| (norm3(v) - self.m_sat).abs()).fold(0.0, f64::max)
    }

    /// Quadrature mean over the grid.
    pub fn mean(&self, grid: &Grid) -> [f64; 3] {
        let mut s = [0.0; 3];
        let mut w = 0.0;
        for (n, v) in self.values.iter().enumerate() {
            let wn = grid.weight(n);
            for c in 0..3 {
                s[c] += wn * v[c];
            }
            w += wn;
        }
        s.map(|x| x / w)
    }
}

/// Scales every node onto the sphere of radius `m_sat`.
pub fn project_sphere(grid: &Grid, raw: Vec<[f64; 3]>, m_sat: f64) -> Result<MagnetizationField> {
    if !(m_sat > 0.0 && m_sat.is_finite()) {
        return Err(Error::invalid(format!("m_sat must be positive (got {m_sat})")));
    }
    if raw.len() != grid.n_nodes() {
        return Err(Error::GridMismatch(format!("{} values for {} nodes", raw.len(), grid.n_nodes())));
    }
    let mut values = raw;
    for (n, v) in values.iter_mut().enumerate() {
        *v = project_node(v, m_sat)
            .ok_or_else(|| Error::invalid(format!("node {n}: cannot project {v:?} onto the sphere")))?;
    }
    let dims = grid.dims();
    let planar_only = columns_identical(&values, dims);
    Ok(MagnetizationField { values, m_sat, dims, planar_only })
}

/// Single-node projection; `None` for zero or non-finite input.
pub fn project_node(v: &[f64; 3], m_sat: f64) -> Option<[f64; 3]> {
    let r = norm3(v);
    if !(r > 0.0 && r.is_finite()) {
        return None;
    }
    if r == m_sat {
        return Some(*v);
    }
    let s = m_sat / r;
    Some([v[0] * s, v[1] * s, v[2] * s])
}
