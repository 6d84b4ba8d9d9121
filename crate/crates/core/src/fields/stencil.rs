use crate::par;

/// Sparse 1D operator stored row by row.
#[derive(Debug, Clone)]
pub struct Stencil1d {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Stencil1d {
    /// First derivative on `n` equispaced nodes: central differences inside,
    /// three-point one-sided formulas at the ends (exact on quadratics).
    /// Two nodes give the forward difference; one node gives zero.
    pub fn first_derivative(n: usize, h: f64) -> Self {
        let rows = match n {
            0 | 1 => vec![Vec::new(); n],
            2 => vec![vec![(0, -1.0 / h), (1, 1.0 / h)]; 2],
            _ => {
                let c = 0.5 / h;
                let mut rows = Vec::with_capacity(n);
                rows.push(vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]);
                for i in 1..n - 1 {
                    rows.push(vec![(i - 1, -c), (i + 1, c)]);
                }
                rows.push(vec![(n - 3, c), (n - 2, -4.0 * c), (n - 1, 3.0 * c)]);
                rows
            }
        };
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn transpose(&self) -> Self {
        let n = self.rows.len();
        let mut rows = vec![Vec::new(); n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                rows[c].push((r, v));
            }
        }
        Self { rows }
    }

    /// Applies the operator along `axis` of a field with the given dims
    /// (x fastest).
    pub fn apply_axis(&self, f: &[f64], dims: [usize; 3], axis: usize) -> Vec<f64> {
        debug_assert_eq!(f.len(), dims[0] * dims[1] * dims[2]);
        debug_assert_eq!(self.rows.len(), dims[axis]);
        let stride = match axis {
            0 => 1,
            1 => dims[0],
            _ => dims[0] * dims[1],
        };
        let len = dims[axis];
        let mut out = vec![0.0; f.len()];
        par::fill(&mut out, |n| {
            let p = (n / stride) % len;
            let base = n - p * stride;
            self.rows[p].iter().map(|&(c, v)| v * f[base + c * stride]).sum()
        });
        out
    }

    /// Dense copy, for tests and small oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.rows.len();
        let mut d = vec![vec![0.0; n]; n];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                d[r][c] += v;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics() {
        let n = 7;
        let h = 0.3;
        let s = Stencil1d::first_derivative(n, h);
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2) - 2.0 * i as f64 * h + 1.0).collect();
        let d = s.apply_axis(&f, [n, 1, 1], 0);
        for i in 0..n {
            let x = i as f64 * h;
            assert!((d[i] - (2.0 * x - 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let dims = [5, 4, 3];
        let n = 60;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let g: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        for axis in 0..3 {
            let s = Stencil1d::first_derivative(dims[axis], 0.5);
            let t = s.transpose();
            let lhs: f64 = s.apply_axis(&f, dims, axis).iter().zip(&g).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.iter().zip(t.apply_axis(&g, dims, axis)).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
