//! Matrix-free elastic energy `(1 / 2|S|) sum_n w_n e_n . K e_n` with
//! `e = S x + c(m, lambda)`.
//!
//! Plate strains stack the membrane, first- and second-order parts
//! `(A, B, C)` of `X(z) = A + z B + z^2 C` (9 slots), and `K` carries the
//! exact moments of `z` on `(0, 1)`. Bulk strains are engineering Voigt
//! vectors (6 slots) with the thickness scaling folded into `K`.

use crate::error::{Error, Result};
use crate::fields::{DirichletDatum, Grid, MagnetizationField, ModeKind, Thickness};
use crate::material::{eps_mag_voigt, eps_mag_voigt_pullback, Materials};
use crate::par;
use nalgebra::{Cholesky, DMatrix};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ElasticSystem {
    grid: Grid,
    stride: usize,
    k: Vec<f64>,
    weights: Vec<f64>,
    mode: Vec<f64>,
    free: Vec<bool>,
    diag: Vec<f64>,
    factor: Option<Factor>,
    m_sat: f64,
}

#[derive(Debug, Clone)]
enum Factor {
    /// Exact dense factor of small systems, column-major lower triangle.
    Dense(Arc<DenseFactor>),
    /// Regularized sparse factor in node-major order.
    Sparse(Arc<CscCholesky<f64>>),
}

/// Largest unknown count for which the dense factor is used.
const DENSE_LIMIT: usize = 1200;

/// Largest `unknowns * bandwidth` for which the sparse factor is built.
const FACTOR_BUDGET: usize = 40_000_000;

/// Moments `int_0^1 z^k dz`.
const MOMENTS: [f64; 5] = [1.0, 0.5, 1.0 / 3.0, 0.25, 0.2];

impl ElasticSystem {
    pub fn new(grid: &Grid, materials: &Materials, mode: ModeKind) -> Result<Self> {
        let n = grid.n_nodes();
        let (stride, k) = match grid.thickness {
            Thickness::Limit => {
                if !grid.is_plate() {
                    return Err(Error::invalid("limit model needs a single-layer grid"));
                }
                let c0 = materials.reduced.voigt2();
                let mut k = vec![0.0; 81];
                for a in 0..3 {
                    for b in 0..3 {
                        for i in 0..3 {
                            for j in 0..3 {
                                k[(3 * a + i) * 9 + 3 * b + j] = MOMENTS[a + b] * c0[(i, j)];
                            }
                        }
                    }
                }
                (9, k)
            }
            Thickness::Finite(h) => {
                if grid.is_plate() {
                    return Err(Error::invalid("bulk model needs nz >= 2"));
                }
                let c = materials.elasticity.voigt();
                let s = [1.0, 1.0, 1.0 / (h * h), 1.0 / h, 1.0 / h, 1.0];
                let mut k = vec![0.0; 36];
                for i in 0..6 {
                    for j in 0..6 {
                        k[i * 6 + j] = s[i] * c[(i, j)] * s[j];
                    }
                }
                (6, k)
            }
        };
        let area = grid.area();
        let weights = (0..n).map(|q| grid.weight(q) / area).collect();
        let mut free = vec![true; 3 * n];
        for q in 0..n {
            if grid.is_pinned(q) {
                for c in 0..3 {
                    free[c * n + q] = false;
                }
            }
        }
        let mut sys = Self {
            grid: grid.clone(),
            stride,
            k,
            weights,
            mode: Vec::new(),
            free,
            diag: Vec::new(),
            factor: None,
            m_sat: materials.m_sat,
        };
        sys.mode = sys.mode_strain(&DirichletDatum::new(mode, grid));
        let band = 3 * grid.nx * (if grid.is_plate() { 8 } else { 4 * grid.ny });
        if sys.n_unknowns() * band <= FACTOR_BUDGET {
            let entries = sys.assemble();
            sys.diag = vec![1.0; sys.n_unknowns()];
            for &(i, j, v) in &entries {
                if i == j && v > 0.0 {
                    sys.diag[i] = v;
                }
            }
            sys.factor = sys.factorize(&entries);
        } else {
            sys.diag = sys.probe_diagonal();
        }
        Ok(sys)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n_unknowns(&self) -> usize {
        3 * self.grid.n_nodes()
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.free[i]
    }

    /// Jacobi diagonal of the reduced operator (1 on pinned unknowns).
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    fn mode_strain(&self, datum: &DirichletDatum) -> Vec<f64> {
        let g = &self.grid;
        if g.is_plate() {
            let [w1, w2, w] = datum.plate_fields(g);
            let x = [w1, w2, w].concat();
            self.strain(&x)
        } else {
            let u = datum.bulk_field(g);
            let x: Vec<f64> = (0..3).flat_map(|c| u.iter().map(move |v| v[c])).collect();
            self.strain(&x)
        }
    }

    /// Linear part `S x` of the strain.
    pub fn strain(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let n = g.n_nodes();
        let (a, b, c) = (&x[..n], &x[n..2 * n], &x[2 * n..]);
        if g.is_plate() {
            let d1a = g.d(0, a);
            let d2a = g.d(1, a);
            let d1b = g.d(0, b);
            let d2b = g.d(1, b);
            let d1c = g.d(0, c);
            let d2c = g.d(1, c);
            let h11 = g.d(0, &d1c);
            let h22 = g.d(1, &d2c);
            let h12 = g.d(1, &d1c);
            let mut e = vec![0.0; 9 * n];
            par::chunks_mut(&mut e, 9, |q, s| {
                s[0] = d1a[q];
                s[1] = d2b[q];
                s[2] = d2a[q] + d1b[q];
                s[3] = -h11[q];
                s[4] = -h22[q];
                s[5] = -2.0 * h12[q];
            });
            e
        } else {
            let da: Vec<Vec<f64>> = (0..3).map(|ax| g.d(ax, a)).collect();
            let db: Vec<Vec<f64>> = (0..3).map(|ax| g.d(ax, b)).collect();
            let dc: Vec<Vec<f64>> = (0..3).map(|ax| g.d(ax, c)).collect();
            let mut e = vec![0.0; 6 * n];
            par::chunks_mut(&mut e, 6, |q, s| {
                s[0] = da[0][q];
                s[1] = db[1][q];
                s[2] = dc[2][q];
                s[3] = db[2][q] + dc[1][q];
                s[4] = da[2][q] + dc[0][q];
                s[5] = da[1][q] + db[0][q];
            });
            e
        }
    }

    /// Adjoint of [`ElasticSystem::strain`].
    pub fn strain_t(&self, s: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let n = g.n_nodes();
        let slot = |k: usize| -> Vec<f64> { (0..n).map(|q| s[q * self.stride + k]).collect() };
        let add = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.into_iter().zip(b).map(|(x, y)| x + y).collect() };
        if g.is_plate() {
            let (s0, s1, s2) = (slot(0), slot(1), slot(2));
            let (s3, s4, s5) = (slot(3), slot(4), slot(5));
            let ga = add(g.d_t(0, &s0), g.d_t(1, &s2));
            let gb = add(g.d_t(1, &s1), g.d_t(0, &s2));
            let t11 = g.d_t(0, &g.d_t(0, &s3));
            let t22 = g.d_t(1, &g.d_t(1, &s4));
            let t12 = g.d_t(0, &g.d_t(1, &s5));
            let gc = par::map(n, |q| -t11[q] - t22[q] - 2.0 * t12[q]);
            [ga, gb, gc].concat()
        } else {
            let sl: Vec<Vec<f64>> = (0..6).map(slot).collect();
            let ga = add(add(g.d_t(0, &sl[0]), g.d_t(2, &sl[4])), g.d_t(1, &sl[5]));
            let gb = add(add(g.d_t(1, &sl[1]), g.d_t(2, &sl[3])), g.d_t(0, &sl[5]));
            let gc = add(add(g.d_t(2, &sl[2]), g.d_t(1, &sl[3])), g.d_t(0, &sl[4]));
            [ga, gb, gc].concat()
        }
    }

    /// Affine part `c(m, lambda)` of the strain.
    pub fn offset(&self, m: &MagnetizationField, lambda: f64) -> Vec<f64> {
        let g = &self.grid;
        let n = g.n_nodes();
        let ms = self.m_sat;
        let v = m.values();
        if g.is_plate() {
            let third = ms * ms / 3.0;
            let t1: Vec<f64> = v.iter().map(|m| m[0] * m[2]).collect();
            let t2: Vec<f64> = v.iter().map(|m| m[1] * m[2]).collect();
            let m3: Vec<f64> = v.iter().map(|m| m[2]).collect();
            let q1: Vec<f64> = g.d(0, &m3).iter().zip(&m3).map(|(d, m)| 2.0 * m * d).collect();
            let q2: Vec<f64> = g.d(1, &m3).iter().zip(&m3).map(|(d, m)| 2.0 * m * d).collect();
            let (d1t1, d2t1, d1t2, d2t2) = (g.d(0, &t1), g.d(1, &t1), g.d(0, &t2), g.d(1, &t2));
            let (d1q1, d2q1, d1q2, d2q2) = (g.d(0, &q1), g.d(1, &q1), g.d(0, &q2), g.d(1, &q2));
            let mut e = vec![0.0; 9 * n];
            par::chunks_mut(&mut e, 9, |q, s| {
                let mv = v[q];
                let md = &self.mode[9 * q..9 * q + 9];
                s[0] = lambda * md[0] - (mv[0] * mv[0] - third);
                s[1] = lambda * md[1] - (mv[1] * mv[1] - third);
                s[2] = lambda * md[2] - 2.0 * mv[0] * mv[1];
                s[3] = lambda * md[3] + 2.0 * d1t1[q];
                s[4] = lambda * md[4] + 2.0 * d2t2[q];
                s[5] = lambda * md[5] + 2.0 * (d2t1[q] + d1t2[q]);
                s[6] = -0.5 * d1q1[q];
                s[7] = -0.5 * d2q2[q];
                s[8] = -0.5 * (d2q1[q] + d1q2[q]);
            });
            e
        } else {
            let mut e = vec![0.0; 6 * n];
            par::chunks_mut(&mut e, 6, |q, s| {
                let em = eps_mag_voigt(&v[q], ms);
                for k in 0..6 {
                    s[k] = lambda * self.mode[6 * q + k] - em[k];
                }
            });
            e
        }
    }

    /// Gradient in `m` of `sum_n sigma_n . c_n(m)`.
    pub fn offset_pullback(&self, m: &MagnetizationField, sigma: &[f64]) -> Vec<[f64; 3]> {
        let g = &self.grid;
        let n = g.n_nodes();
        let v = m.values();
        if !g.is_plate() {
            return par::map(n, |q| {
                let s: [f64; 6] = std::array::from_fn(|k| sigma[6 * q + k]);
                eps_mag_voigt_pullback(&v[q], &s).map(|x| -x)
            });
        }
        let slot = |k: usize| -> Vec<f64> { (0..n).map(|q| sigma[9 * q + k]).collect() };
        let sb: Vec<Vec<f64>> = (3..6).map(slot).collect();
        let sc: Vec<Vec<f64>> = (6..9).map(slot).collect();
        let gt1: Vec<f64> = g.d_t(0, &sb[0]).iter().zip(g.d_t(1, &sb[2])).map(|(a, b)| 2.0 * (a + b)).collect();
        let gt2: Vec<f64> = g.d_t(1, &sb[1]).iter().zip(g.d_t(0, &sb[2])).map(|(a, b)| 2.0 * (a + b)).collect();
        let gq1: Vec<f64> = g.d_t(0, &sc[0]).iter().zip(g.d_t(1, &sc[2])).map(|(a, b)| -0.5 * (a + b)).collect();
        let gq2: Vec<f64> = g.d_t(1, &sc[1]).iter().zip(g.d_t(0, &sc[2])).map(|(a, b)| -0.5 * (a + b)).collect();
        let m3: Vec<f64> = v.iter().map(|m| m[2]).collect();
        let d1m3 = g.d(0, &m3);
        let d2m3 = g.d(1, &m3);
        let w1: Vec<f64> = (0..n).map(|q| 2.0 * m3[q] * gq1[q]).collect();
        let w2: Vec<f64> = (0..n).map(|q| 2.0 * m3[q] * gq2[q]).collect();
        let tw1 = g.d_t(0, &w1);
        let tw2 = g.d_t(1, &w2);
        par::map(n, |q| {
            let mv = v[q];
            let (s0, s1, s2) = (sigma[9 * q], sigma[9 * q + 1], sigma[9 * q + 2]);
            [
                -2.0 * (s0 * mv[0] + s2 * mv[1]) + mv[2] * gt1[q],
                -2.0 * (s1 * mv[1] + s2 * mv[0]) + mv[2] * gt2[q],
                mv[0] * gt1[q] + mv[1] * gt2[q] + 2.0 * (d1m3[q] * gq1[q] + d2m3[q] * gq2[q]) + tw1[q] + tw2[q],
            ]
        })
    }

    /// Weighted stress `w_n K e_n`.
    pub fn stress(&self, e: &[f64]) -> Vec<f64> {
        let st = self.stride;
        let mut s = vec![0.0; e.len()];
        par::chunks_mut(&mut s, st, |q, out| {
            let en = &e[st * q..st * q + st];
            let w = self.weights[q];
            for i in 0..st {
                let row = &self.k[i * st..i * st + st];
                out[i] = w * row.iter().zip(en).map(|(a, b)| a * b).sum::<f64>();
            }
        });
        s
    }

    /// `1/2 sum e . stress(e)`.
    pub fn energy_of_strain(&self, e: &[f64]) -> f64 {
        let s = self.stress(e);
        0.5 * par::dot(e, &s)
    }

    /// Total strain `S x + c`.
    pub fn total_strain(&self, x: &[f64], c: &[f64]) -> Vec<f64> {
        let mut e = self.strain(x);
        par::axpy(1.0, c, &mut e);
        e
    }

    /// Reduced operator `P S^T W K S P p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let masked: Vec<f64> = par::map(p.len(), |i| if self.free[i] { p[i] } else { 0.0 });
        let mut r = self.strain_t(&self.stress(&self.strain(&masked)));
        self.mask(&mut r);
        r
    }

    /// Reduced gradient of the energy at `x` for offset `c`.
    pub fn gradient(&self, x: &[f64], c: &[f64]) -> Vec<f64> {
        let mut r = self.strain_t(&self.stress(&self.total_strain(x, c)));
        self.mask(&mut r);
        r
    }

    pub fn mask(&self, r: &mut [f64]) {
        r.iter_mut().zip(&self.free).for_each(|(v, f)| {
            if !f {
                *v = 0.0
            }
        });
    }

    /// `d e / d lambda` slots per node.
    pub fn mode(&self) -> &[f64] {
        &self.mode
    }

    /// Whether a sparse Cholesky preconditioner is available.
    pub fn has_factor(&self) -> bool {
        self.factor.is_some()
    }

    /// Whether the preconditioner is an exact solve.
    pub fn exact_factor(&self) -> bool {
        matches!(self.factor, Some(Factor::Dense(_)))
    }

    /// Applies the preconditioner: a Cholesky solve when available, Jacobi
    /// otherwise.
    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let f = match &self.factor {
            None => return par::map(r.len(), |i| r[i] / self.diag[i]),
            Some(Factor::Dense(f)) => {
                let mut z = r.to_vec();
                f.solve(&mut z);
                self.mask(&mut z);
                return z;
            }
            Some(Factor::Sparse(f)) => f,
        };
        let n = self.grid.n_nodes();
        let mut b = vec![0.0; r.len()];
        for c in 0..3 {
            for q in 0..n {
                b[3 * q + c] = r[c * n + q];
            }
        }
        cholesky_solve(f.l(), &mut b);
        let mut z = vec![0.0; r.len()];
        for c in 0..3 {
            for q in 0..n {
                z[c * n + q] = b[3 * q + c];
            }
        }
        self.mask(&mut z);
        z
    }

    /// Nonzeros `(row, col, value)` of the reduced operator, by colored
    /// probing with colors far enough apart that every row sees at most one
    /// probed column per color.
    pub fn assemble(&self) -> Vec<(usize, usize, f64)> {
        let g = &self.grid;
        let n = g.n_nodes();
        let radius = if g.is_plate() { 8 } else { 4 };
        let spacing = 2 * radius + 1;
        let colors = [spacing.min(g.nx), spacing.min(g.ny), spacing.min(g.nz)];
        let mut out = Vec::new();
        for comp in 0..3 {
            for cx in 0..colors[0] {
                for cy in 0..colors[1] {
                    for cz in 0..colors[2] {
                        let hit = |q: usize| {
                            let (i, j, k) = g.ijk(q);
                            i % colors[0] == cx && j % colors[1] == cy && k % colors[2] == cz
                        };
                        let mut p = vec![0.0; 3 * n];
                        for q in 0..n {
                            if hit(q) && self.free[comp * n + q] {
                                p[comp * n + q] = 1.0;
                            }
                        }
                        let kp = self.apply(&p);
                        for (row, &v) in kp.iter().enumerate() {
                            if v == 0.0 {
                                continue;
                            }
                            let (i, j, k) = g.ijk(row % n);
                            let pick = |x: usize, c: usize, ncol: usize| -> usize {
                                if ncol < spacing {
                                    return c;
                                }
                                let d = (c + spacing - x % spacing) % spacing;
                                if d > radius { x + d - spacing } else { x + d }
                            };
                            let ci = pick(i, cx, colors[0]);
                            let cj = pick(j, cy, colors[1]);
                            let ck = pick(k, cz, colors[2]);
                            out.push((row, comp * n + g.idx(ci, cj, ck), v));
                        }
                    }
                }
            }
        }
        for i in 0..3 * n {
            if !self.free[i] {
                out.push((i, i, 1.0));
            }
        }
        out
    }

    fn factorize(&self, entries: &[(usize, usize, f64)]) -> Option<Factor> {
        let n = self.grid.n_nodes();
        let dim = 3 * n;
        if dim <= DENSE_LIMIT {
            let mut a = DMatrix::zeros(dim, dim);
            for &(i, j, v) in entries {
                a[(i, j)] += v;
            }
            if let Some(f) = Cholesky::new(a) {
                let l = f.unpack();
                return Some(Factor::Dense(Arc::new(DenseFactor { n: dim, l: l.as_slice().to_vec() })));
            }
        }
        let perm = |i: usize| 3 * (i % n) + i / n;
        let mean = self.diag.iter().sum::<f64>() / dim as f64;
        let eps = 1e-8 * mean;
        let mut coo = CooMatrix::new(dim, dim);
        for &(i, j, v) in entries {
            coo.push(perm(i), perm(j), v);
        }
        for i in 0..dim {
            coo.push(i, i, eps);
        }
        let f = CscCholesky::factor(&CscMatrix::from(&coo)).ok()?;
        let l = f.l();
        let diagonal_first = (0..dim).all(|j| {
            let lo = l.col_offsets()[j];
            lo < l.col_offsets()[j + 1] && l.row_indices()[lo] == j
        });
        diagonal_first.then(|| Factor::Sparse(Arc::new(f)))
    }

    /// Diagonal of the reduced operator by colored probing.
    fn probe_diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let n = g.n_nodes();
        let spacing = if g.is_plate() { 9 } else { 5 };
        let colors = [spacing.min(g.nx), spacing.min(g.ny), spacing.min(g.nz)];
        let mut diag = vec![1.0; 3 * n];
        for comp in 0..3 {
            for cx in 0..colors[0] {
                for cy in 0..colors[1] {
                    for cz in 0..colors[2] {
                        let hit = |q: usize| {
                            let (i, j, k) = g.ijk(q);
                            i % spacing == cx && j % spacing == cy && k % spacing == cz
                        };
                        let mut p = vec![0.0; 3 * n];
                        for q in 0..n {
                            if hit(q) {
                                p[comp * n + q] = 1.0;
                            }
                        }
                        let kp = self.apply(&p);
                        for q in 0..n {
                            let i = comp * n + q;
                            if hit(q) && self.free[i] && kp[i] > 0.0 {
                                diag[i] = kp[i];
                            }
                        }
                    }
                }
            }
        }
        diag
    }
}



#[derive(Debug)]
struct DenseFactor {
    n: usize,
    l: Vec<f64>,
}

impl DenseFactor {
    /// Solves `L L^T x = b` in place.
    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let col = &self.l[j * n..(j + 1) * n];
            let x = b[j] / col[j];
            b[j] = x;
            for (bi, lij) in b[j + 1..].iter_mut().zip(&col[j + 1..]) {
                *bi -= lij * x;
            }
        }
        for j in (0..n).rev() {
            let col = &self.l[j * n..(j + 1) * n];
            b[j] = (b[j] - dot(&col[j + 1..], &b[j + 1..])) / col[j];
        }
    }
}

/// Dot product with independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Solves `L L^T x = b` in place for a lower-triangular CSC factor whose
/// columns store the diagonal first.
fn cholesky_solve(l: &CscMatrix<f64>, b: &mut [f64]) {
    let (offsets, rows, vals) = (l.col_offsets(), l.row_indices(), l.values());
    for j in 0..b.len() {
        let (lo, hi) = (offsets[j], offsets[j + 1]);
        let x = b[j] / vals[lo];
        b[j] = x;
        for p in lo + 1..hi {
            b[rows[p]] -= vals[p] * x;
        }
    }
    for j in (0..b.len()).rev() {
        let (lo, hi) = (offsets[j], offsets[j + 1]);
        let mut x = b[j];
        for p in lo + 1..hi {
            x -= vals[p] * b[rows[p]];
        }
        b[j] = x / vals[lo];
    }
}
