//! Complex 3D FFT assembled from 1D passes.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

#[derive(Clone)]
pub(crate) struct Fft3 {
    pub dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("dims", &self.dims).finish()
    }
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.map(|n| planner.plan_fft_forward(n));
        let inverse = dims.map(|n| planner.plan_fft_inverse(n));
        Self { dims, forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.forward);
    }

    /// Inverse transform including the `1/len` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inverse);
        let s = 1.0 / self.len() as f64;
        par::chunks_mut(buf, par::CHUNK, |_, c| c.iter_mut().for_each(|v| *v *= s));
    }

    fn transform(&self, buf: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [nx, ny, nz] = self.dims;
        debug_assert_eq!(buf.len(), nx * ny * nz);
        // x lines are contiguous
        par::chunks_mut(buf, nx, |_, line| plans[0].process(line));
        // y and z lines are gathered into contiguous scratch rows
        for (axis, stride, n) in [(1, nx, ny), (2, nx * ny, nz)] {
            if n == 1 {
                continue;
            }
            let lines = buf.len() / n;
            let mut scratch = vec![Complex64::new(0.0, 0.0); buf.len()];
            let src: &[Complex64] = buf;
            par::chunks_mut(&mut scratch, n, |l, row| {
                let base = line_base(l, axis, nx, ny);
                for (p, r) in row.iter_mut().enumerate() {
                    *r = src[base + p * stride];
                }
                plans[axis].process(row);
            });
            for l in 0..lines {
                let base = line_base(l, axis, nx, ny);
                for p in 0..n {
                    buf[base + p * stride] = scratch[l * n + p];
                }
            }
        }
    }
}

/// Flat index of the first element of line `l` along `axis`.
fn line_base(l: usize, axis: usize, nx: usize, ny: usize) -> usize {
    if axis == 1 {
        // lines indexed by (i, k)
        let i = l % nx;
        let k = l / nx;
        i + nx * ny * k
    } else {
        // lines indexed by (i, j)
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft() {
        let dims = [4, 3, 2];
        let n = 24;
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut y = x.clone();
        Fft3::new(dims).forward(&mut y);
        for (k, yk) in y.iter().enumerate() {
            let (a, b, c) = (k % 4, (k / 4) % 3, k / 12);
            let mut s = Complex64::new(0.0, 0.0);
            for (m, xm) in x.iter().enumerate() {
                let (i, j, l) = (m % 4, (m / 4) % 3, m / 12);
                let ph = -2.0 * std::f64::consts::PI
                    * (a as f64 * i as f64 / 4.0 + b as f64 * j as f64 / 3.0 + c as f64 * l as f64 / 2.0);
                s += xm * Complex64::from_polar(1.0, ph);
            }
            assert!((s - yk).norm() < 1e-12);
        }
        let fft = Fft3::new(dims);
        fft.inverse(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
