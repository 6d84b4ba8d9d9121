use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{Grid, MagnetizationField, Thickness};
use crate::par;
use crate::stray::fft::Fft3;
use crate::stray::kernel::demag_tensor;

/// Stray field at the sample cells and its normalized energy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrayFieldSolution {
    /// `-grad xi` per node.
    pub hfield: Vec<[f64; 3]>,
    /// `(1 / (2 |S| h)) int m . grad xi`.
    pub energy: f64,
}

/// Zero-padded FFT convolution with the cell-averaged demagnetizing tensor.
///
/// Each node of an `nx x ny x nz` grid owns a box of size
/// `Lx/nx x Ly/ny x h/nz`; the boxes tile the film exactly.
#[derive(Debug, Clone)]
pub struct StraySolver {
    dims: [usize; 3],
    cell: [f64; 3],
    fft: Fft3,
    kernel: [Vec<Complex64>; 6],
}

fn wrapped_offset(a: usize, n: usize, padded: usize) -> Option<isize> {
    if a < n {
        Some(a as isize)
    } else if a + n > padded {
        Some(a as isize - padded as isize)
    } else {
        None
    }
}

impl StraySolver {
    /// Solver for the physical film of thickness `h` sampled by `grid`.
    pub fn new(grid: &Grid) -> Result<Self> {
        let h = match grid.thickness {
            Thickness::Finite(h) => h,
            Thickness::Limit => return Err(Error::invalid("stray solve needs a finite thickness")),
        };
        Self::with_cells(grid.dims(), [grid.lx / grid.nx as f64, grid.ly / grid.ny as f64, h / grid.nz as f64])
    }

    /// Solver on an explicit box lattice.
    pub fn with_cells(dims: [usize; 3], cell: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::invalid(format!("stray grid too small: {dims:?}")));
        }
        if cell.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::invalid(format!("bad cell size {cell:?}")));
        }
        let padded = dims.map(|n| 2 * n);
        let fft = Fft3::new(padded);
        let len = fft.len();
        let [px, py, _] = padded;
        let raw = par::map(len, |q| {
            let a = q % px;
            let b = (q / px) % py;
            let c = q / (px * py);
            match (
                wrapped_offset(a, dims[0], padded[0]),
                wrapped_offset(b, dims[1], padded[1]),
                wrapped_offset(c, dims[2], padded[2]),
            ) {
                (Some(i), Some(j), Some(k)) => {
                    demag_tensor([i as f64 * cell[0], j as f64 * cell[1], k as f64 * cell[2]], cell)
                }
                _ => [0.0; 6],
            }
        });
        let kernel = std::array::from_fn(|c| {
            let mut buf: Vec<Complex64> = raw.iter().map(|t| Complex64::new(t[c], 0.0)).collect();
            fft.forward(&mut buf);
            buf
        });
        Ok(Self { dims, cell, fft, kernel })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell(&self) -> [f64; 3] {
        self.cell
    }

    /// Field `H = -N * m` for raw per-cell vectors.
    pub fn field(&self, m: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
        let [nx, ny, nz] = self.dims;
        if m.len() != nx * ny * nz {
            return Err(Error::GridMismatch(format!("{} values for {} cells", m.len(), nx * ny * nz)));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite magnetization"));
        }
        let [px, py, _] = self.fft.dims;
        let len = self.fft.len();
        let mut mh: Vec<Vec<Complex64>> = (0..3)
            .map(|c| {
                let mut buf = vec![Complex64::new(0.0, 0.0); len];
                for (n, v) in m.iter().enumerate() {
                    let i = n % nx;
                    let j = (n / nx) % ny;
                    let k = n / (nx * ny);
                    buf[i + px * (j + py * k)] = Complex64::new(v[c], 0.0);
                }
                self.fft.forward(&mut buf);
                buf
            })
            .collect();
        let k = &self.kernel;
        let spec = par::map(len, |q| {
            let (a, b, c) = (mh[0][q], mh[1][q], mh[2][q]);
            [
                -(k[0][q] * a + k[3][q] * b + k[4][q] * c),
                -(k[3][q] * a + k[1][q] * b + k[5][q] * c),
                -(k[4][q] * a + k[5][q] * b + k[2][q] * c),
            ]
        });
        for (c, buf) in mh.iter_mut().enumerate() {
            for (q, s) in spec.iter().enumerate() {
                buf[q] = s[c];
            }
            self.fft.inverse(buf);
        }
        Ok(par::map(m.len(), |n| {
            let i = n % nx;
            let j = (n / nx) % ny;
            let k = n / (nx * ny);
            let q = i + px * (j + py * k);
            [mh[0][q].re, mh[1][q].re, mh[2][q].re]
        }))
    }

    pub fn solve(&self, m: &[[f64; 3]]) -> Result<StrayFieldSolution> {
        let hfield = self.field(m)?;
        let energy = energy_from_field(m, &hfield);
        Ok(StrayFieldSolution { hfield, energy })
    }
}

/// `-(1 / 2N) sum m . H` over the `N` cells.
pub fn energy_from_field(m: &[[f64; 3]], h: &[[f64; 3]]) -> f64 {
    let s = par::sum(m.len(), |n| m[n][0] * h[n][0] + m[n][1] * h[n][1] + m[n][2] * h[n][2]);
    -0.5 * s / m.len() as f64
}

/// One-shot stray solve on a bulk grid.
pub fn solve_stray_fft(m: &MagnetizationField, grid: &Grid) -> Result<StrayFieldSolution> {
    if !m.matches(grid) {
        return Err(Error::GridMismatch("magnetization does not match grid".into()));
    }
    StraySolver::new(grid)?.solve(m.values())
}
