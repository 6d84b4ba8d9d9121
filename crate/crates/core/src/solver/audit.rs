use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::Serialize;

use crate::energetics::{dissipation_distance, Problem, State};
use crate::error::Result;
use crate::fields::{project_node, MagnetizationField};
use crate::par;
use crate::solver::cg::elastic_solve;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditReport {
    /// `max E(t, q) - E(t, q') - D(m, m')` over the sampled competitors.
    pub worst: f64,
    pub energy: f64,
    pub samples: usize,
    /// `tol_stability (1 + |E|)`.
    pub tolerance: f64,
    pub passed: bool,
}

fn rotate(v: &[f64; 3], axis: &[f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let d = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let x = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    std::array::from_fn(|i| v[i] * c + x[i] * s + axis[i] * d * (1.0 - c))
}

/// Competitor magnetization number `sample`; kinds cycle through global
/// rotations, per-node perturbations and region flips across easy axes.
pub fn competitor(
    problem: &Problem,
    m: &MagnetizationField,
    cfg: &SolverConfig,
    stream: u64,
    sample: u64,
) -> Result<MagnetizationField> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream((stream << 24) ^ sample);
    let g = &problem.grid;
    let ms = m.m_sat();
    let v = m.values();
    let out: Vec<[f64; 3]> = match sample % 3 {
        0 => {
            let axis: [f64; 3] = UnitSphere.sample(&mut rng);
            let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            v.iter().map(|x| rotate(x, &axis, angle)).collect()
        }
        1 => {
            let scale = cfg.perturbation_scale * ms;
            v.iter()
                .map(|x| {
                    let z: [f64; 3] = std::array::from_fn(|c| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x[c] + scale * e
                    });
                    project_node(&z, ms).unwrap_or(*x)
                })
                .collect()
        }
        _ => {
            let i0 = rng.random_range(0..g.nx);
            let i1 = rng.random_range(i0..g.nx);
            let j0 = rng.random_range(0..g.ny);
            let j1 = rng.random_range(j0..g.ny);
            let np = g.n_planar();
            let aniso = &problem.materials.anisotropy;
            v.iter()
                .enumerate()
                .map(|(n, x)| {
                    let (i, j, _) = g.ijk(n);
                    if i < i0 || i > i1 || j < j0 || j > j1 {
                        return *x;
                    }
                    let s = aniso
                        .easy_axes(n % np)
                        .into_iter()
                        .max_by(|a, b| {
                            let da = (a[0] * x[0] + a[1] * x[1] + a[2] * x[2]).abs();
                            let db = (b[0] * x[0] + b[1] * x[1] + b[2] * x[2]).abs();
                            da.total_cmp(&db)
                        })
                        .unwrap_or([0.0, 0.0, 1.0]);
                    let d = s[0] * x[0] + s[1] * x[1] + s[2] * x[2];
                    std::array::from_fn(|c| x[c] - 2.0 * d * s[c])
                })
                .collect()
        }
    };
    crate::fields::project_sphere(g, out, ms)
}

/// Samples competitors `(u', m')` with `u'` elastically relaxed and reports
/// the worst violation of `E(t, q) <= E(t, q') + D(m, m')`. The unchanged
/// magnetization is always included.
pub fn stability_audit(
    problem: &Problem,
    state: &State,
    t: f64,
    n_samples: usize,
    cfg: &SolverConfig,
    stream: u64,
) -> Result<AuditReport> {
    let energy = problem.energy(t, &state.clone())?.total;
    let th = problem.thickness();
    let params = &problem.materials.dissipation;
    let violations = par::map(n_samples + 1, |s| -> Result<f64> {
        let m_hat = if s == 0 {
            state.m.clone()
        } else {
            competitor(problem, &state.m, cfg, stream, s as u64 - 1)?
        };
        let u_hat = elastic_solve(problem, &m_hat, t, Some(&state.disp), cfg)?;
        let q_hat = State::new(u_hat.disp, m_hat);
        let e_hat = problem.energy(t, &q_hat)?.total;
        let d = dissipation_distance(&state.m, &q_hat.m, &problem.grid, th, params)?;
        Ok(energy - e_hat - d)
    });
    let mut worst = f64::NEG_INFINITY;
    for v in violations {
        let v = v?;
        if v.is_nan() {
            continue;
        }
        worst = worst.max(v);
    }
    let tolerance = cfg.tol_stability * (1.0 + energy.abs());
    Ok(AuditReport { worst, energy, samples: n_samples, tolerance, passed: worst <= tolerance })
}
