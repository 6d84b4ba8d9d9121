use crate::energetics::{ElasticSystem, Problem};
use crate::error::{Error, Result};
use crate::fields::MagnetizationField;
use crate::par;
use crate::solver::SolverConfig;

/// Displacement minimizing the elastic energy for fixed magnetization.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticSolution {
    pub disp: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned CG. Returns the iterate, the iteration count and the
/// final relative residual.
pub fn pcg<A, P>(apply: A, precond: P, b: &[f64], x0: Vec<f64>, tol: f64, max_iter: usize) -> (Vec<f64>, usize, f64)
where
    A: Fn(&[f64]) -> Vec<f64>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let bnorm = par::dot(b, b).sqrt();
    let mut x = x0;
    let ax = apply(&x);
    let mut r: Vec<f64> = par::map(b.len(), |i| b[i] - ax[i]);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut rnorm = par::dot(&r, &r).sqrt();
    if rnorm <= tol * scale {
        return (x, 0, rnorm / scale);
    }
    let mut z: Vec<f64> = precond(&r);
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = par::dot(&p, &ap);
        if !(pap > 0.0) {
            return (x, it, rnorm / scale);
        }
        let alpha = rz / pap;
        par::axpy(alpha, &p, &mut x);
        par::axpy(-alpha, &ap, &mut r);
        rnorm = par::dot(&r, &r).sqrt();
        if rnorm <= tol * scale {
            return (x, it, rnorm / scale);
        }
        z = precond(&r);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = par::map(p.len(), |i| z[i] + beta * p[i]);
    }
    (x, max_iter, rnorm / scale)
}

/// Solves for the displacement given the strain offset `c`.
pub(crate) fn solve_offset(
    sys: &ElasticSystem,
    c: &[f64],
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<ElasticSolution> {
    let n = sys.n_unknowns();
    let mut b = sys.strain_t(&sys.stress(c));
    sys.mask(&mut b);
    b.iter_mut().for_each(|v| *v = -*v);
    let mut x0 = match warm {
        _ if sys.exact_factor() => sys.precondition(&b),
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![0.0; n],
    };
    sys.mask(&mut x0);
    let (disp, iterations, residual) = pcg(|p| sys.apply(p), |r| sys.precondition(r), &b, x0, cfg.tol_cg, cfg.max_cg);
    if residual > cfg.tol_cg || !residual.is_finite() {
        return Err(Error::NonConvergence { what: "elastic CG", iterations, residual });
    }
    Ok(ElasticSolution { disp, iterations, residual })
}

/// Minimizes the elastic energy at time `t` over the free displacement
/// unknowns (pinned ones stay zero). `warm` seeds CG.
pub fn elastic_solve(
    problem: &Problem,
    m: &MagnetizationField,
    t: f64,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<ElasticSolution> {
    if !m.matches(&problem.grid) {
        return Err(Error::GridMismatch("magnetization does not match grid".into()));
    }
    let c = problem.elastic.offset(m, problem.schedule.lambda(t));
    solve_offset(&problem.elastic, &c, warm, cfg)
}
