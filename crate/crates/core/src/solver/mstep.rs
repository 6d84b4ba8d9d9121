use std::cell::Cell;

use crate::energetics::{dissipation_distance, Problem};
use crate::error::{Error, Result};
use crate::fields::{project_node, MagnetizationField, Thickness};
use crate::material::Density;
use crate::par;
use crate::solver::cg::solve_offset;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct MStepResult {
    pub m: MagnetizationField,
    /// Incremental objective at `m` (with the stray model used in the step).
    pub objective: f64,
    pub iterations: usize,
    /// Largest per-node change in the last accepted iteration.
    pub last_move: f64,
    pub converged: bool,
}

/// Evaluated iterate: smooth energy, dissipation and the displacement used.
#[derive(Debug, Clone)]
pub(crate) struct Point {
    pub m: MagnetizationField,
    pub smooth: f64,
    pub diss: f64,
    pub disp: Vec<f64>,
}

impl Point {
    pub fn total(&self) -> f64 {
        self.smooth + self.diss
    }
}

/// Frozen stray field at `m` with a unit quadratic majorizer.
pub(crate) struct Lag {
    field: Vec<[f64; 3]>,
    m: Vec<[f64; 3]>,
    energy: f64,
}

impl Lag {
    /// `None` on plates, where the stray term is local.
    pub fn at(problem: &Problem, m: &MagnetizationField) -> Result<Option<Self>> {
        Ok(problem.stray_field(m)?.map(|field| {
            let energy = crate::stray::energy_from_field(m.values(), &field);
            Self { field, m: m.values().to_vec(), energy }
        }))
    }

    fn energy(&self, m: &MagnetizationField) -> f64 {
        let v = m.values();
        let s = par::sum(v.len(), |q| {
            (0..3)
                .map(|c| {
                    let d = v[q][c] - self.m[q][c];
                    -self.field[q][c] * d + 0.5 * d * d
                })
                .sum::<f64>()
        });
        self.energy + s / v.len() as f64
    }

    fn gradient(&self, m: &MagnetizationField) -> Vec<[f64; 3]> {
        let v = m.values();
        let inv = 1.0 / v.len() as f64;
        par::map(v.len(), |q| std::array::from_fn(|c| (v[q][c] - self.m[q][c] - self.field[q][c]) * inv))
    }
}

/// Smooth part of `E(t, u, m) + D(m_prev, m)` as a function of `m`, with
/// `u` either fixed or relaxed (re-solved at every evaluation).
pub(crate) struct Objective<'a> {
    problem: &'a Problem,
    t: f64,
    m_prev: &'a MagnetizationField,
    fixed: Option<Vec<f64>>,
    lag: Option<Lag>,
    cfg: &'a SolverConfig,
    pub cg: Cell<usize>,
}

impl<'a> Objective<'a> {
    pub fn new(
        problem: &'a Problem,
        t: f64,
        m_prev: &'a MagnetizationField,
        fixed: Option<Vec<f64>>,
        lag: Option<Lag>,
        cfg: &'a SolverConfig,
    ) -> Self {
        Self { problem, t, m_prev, fixed, lag, cfg, cg: Cell::new(0) }
    }

    pub fn eval(&self, m: MagnetizationField, warm: &[f64]) -> Result<Point> {
        let p = self.problem;
        let diss = dissipation_distance(self.m_prev, &m, &p.grid, p.thickness(), &p.materials.dissipation)?;
        let aniso = match p.anisotropy_energy(&m)? {
            Density::Finite(a) => a,
            Density::Infeasible => {
                return Ok(Point { m, smooth: f64::INFINITY, diss, disp: warm.to_vec() });
            }
        };
        let c = p.elastic.offset(&m, p.schedule.lambda(self.t));
        let disp = match &self.fixed {
            Some(d) => d.clone(),
            None => {
                let sol = solve_offset(&p.elastic, &c, Some(warm), self.cfg)?;
                self.cg.set(self.cg.get() + sol.iterations);
                sol.disp
            }
        };
        let elastic = p.elastic.energy_of_strain(&p.elastic.total_strain(&disp, &c));
        let stray = match &self.lag {
            Some(l) => l.energy(&m),
            None => p.stray_energy(&m)?,
        };
        let smooth = p.exchange_energy(&m) + aniso + p.zeeman_energy(self.t, &m) + stray + elastic;
        Ok(Point { m, smooth, diss, disp })
    }

    pub fn cfg(&self) -> &'a SolverConfig {
        self.cfg
    }

    /// Objective at `pt` with a fresh stray solve.
    pub fn exact(&self, pt: &Point) -> Result<f64> {
        match &self.lag {
            Some(l) => Ok(pt.total() - l.energy(&pt.m) + self.problem.stray_energy(&pt.m)?),
            None => Ok(pt.total()),
        }
    }

    /// Gradient of the smooth part; for relaxed `u` this is the envelope
    /// gradient at the optimal displacement.
    pub fn gradient(&self, pt: &Point) -> Vec<[f64; 3]> {
        let p = self.problem;
        let m = &pt.m;
        let el = &p.elastic;
        let c = el.offset(m, p.schedule.lambda(self.t));
        let ge = el.offset_pullback(m, &el.stress(&el.total_strain(&pt.disp, &c)));
        let gx = p.exchange_gradient(m);
        let ga = p.anisotropy_gradient(m);
        let gz = p.zeeman_gradient(self.t);
        let gs = match &self.lag {
            Some(l) => l.gradient(m),
            None => p.stray_gradient(m, None),
        };
        par::map(m.len(), |q| std::array::from_fn(|c| ge[q][c] + gx[q][c] + ga[q][c] + gz[q][c] + gs[q][c]))
    }
}

fn soft(x: f64, k: f64) -> f64 {
    x.signum() * (x.abs() - k).max(0.0)
}

/// One shrink-then-project update of every node.
fn prox_update(
    problem: &Problem,
    m: &MagnetizationField,
    m_prev: &MagnetizationField,
    grad: &[[f64; 3]],
    metric: &[f64],
    tau: f64,
) -> Result<MagnetizationField> {
    let ms = m.m_sat();
    let ms2 = ms * ms;
    let w = problem.weights();
    let th = problem.thickness();
    let r = &problem.materials.dissipation;
    let (rp0, r30) = (tau * r.r_p, tau * r.r3.at(th));
    let hard = hard_limit(problem);
    let v = m.values();
    let vp = m_prev.values();
    let out = par::map(v.len(), |q| {
        let mut g = grad[q].map(|x| x / metric[q]);
        let (rp, r3) = (rp0 * w[q] / metric[q], r30 * w[q] / metric[q]);
        let gm = (g[0] * v[q][0] + g[1] * v[q][1] + g[2] * v[q][2]) / ms2;
        for c in 0..3 {
            g[c] -= gm * v[q][c];
        }
        let mut d: [f64; 3] = std::array::from_fn(|c| v[q][c] - tau * g[c] - vp[q][c]);
        let dp = d[0].hypot(d[1]);
        let shrink = if dp > rp { 1.0 - rp / dp } else { 0.0 };
        d[0] *= shrink;
        d[1] *= shrink;
        d[2] = soft(d[2], r3);
        let z: [f64; 3] = std::array::from_fn(|c| vp[q][c] + d[c]);
        if hard {
            let s = if z[2] > 0.0 || (z[2] == 0.0 && v[q][2] >= 0.0) { 1.0 } else { -1.0 };
            [0.0, 0.0, s * ms]
        } else {
            project_node(&z, ms).unwrap_or(v[q])
        }
    });
    MagnetizationField::new(&problem.grid, out, ms)
}

fn node_metric(problem: &Problem) -> Vec<f64> {
    let w = problem.weights();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    vec![mean; w.len()]
}

fn hard_limit(problem: &Problem) -> bool {
    problem.thickness() == Thickness::Limit && problem.materials.anisotropy.hard_planar_limit()
}

fn max_move(a: &MagnetizationField, b: &MagnetizationField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Extrapolated point `x + beta (x - x_old)` pulled back onto the sphere.
fn extrapolate(problem: &Problem, x: &MagnetizationField, x_old: &MagnetizationField, beta: f64) -> Result<MagnetizationField> {
    let ms = x.m_sat();
    let (a, b) = (x.values(), x_old.values());
    let out = par::map(a.len(), |q| {
        let y: [f64; 3] = std::array::from_fn(|c| a[q][c] + beta * (a[q][c] - b[q][c]));
        project_node(&y, ms).unwrap_or(a[q])
    });
    MagnetizationField::new(&problem.grid, out, ms)
}

/// Outcome of [`minimize`].
pub(crate) struct Descent {
    pub point: Point,
    pub iterations: usize,
    pub last_move: f64,
    pub converged: bool,
}

/// Relative decrease below which an iteration counts as stalled.
const STALL: f64 = 1e-14;

/// Accelerated proximal gradient with backtracking and adaptive restart.
pub(crate) fn minimize(s: &Objective<'_>, start: Point, cfg: &SolverConfig, max_iter: usize) -> Result<Descent> {
    let problem = s.problem;
    let w = node_metric(problem);
    let w = &w[..];
    let momentum = !hard_limit(problem);
    let tau_min = cfg.prox_step * 1e-16;
    let tau_max = cfg.prox_step * 1e6;
    let mut x = start;
    let mut x_old = x.m.clone();
    let mut theta = 1.0_f64;
    let mut tau = cfg.prox_step;
    let mut last_move = f64::INFINITY;
    let mut stalled = 0;
        for it in 0..max_iter {
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = if momentum { (theta - 1.0) / theta_next } else { 0.0 };
        let y = if beta > 0.0 {
            let ym = extrapolate(problem, &x.m, &x_old, beta)?;
            let p = s.eval(ym, &x.disp)?;
            if p.smooth.is_finite() { p } else { x.clone() }
        } else {
            x.clone()
        };
        let g = s.gradient(&y);
        let z = loop {
            let zm = prox_update(problem, &y.m, s.m_prev, &g, w, tau)?;
            let z = s.eval(zm, &y.disp)?;
            let (yv, zv) = (y.m.values(), z.m.values());
            let lin = par::sum(yv.len(), |q| (0..3).map(|c| g[q][c] * (zv[q][c] - yv[q][c])).sum::<f64>());
            let quad = par::sum(yv.len(), |q| w[q] * (0..3).map(|c| (zv[q][c] - yv[q][c]).powi(2)).sum::<f64>());
            let model = y.smooth + lin + quad / (2.0 * tau);
            if z.smooth <= model + 1e-13 * (1.0 + y.smooth.abs()) {
                break Some(z);
            }
            tau *= cfg.backtrack;
            if tau < tau_min {
                break None;
            }
        };
        let Some(z) = z else {
            if beta > 0.0 {
                theta = 1.0;
                tau = cfg.prox_step;
                continue;
            }
            return Ok(Descent { point: x, iterations: it, last_move, converged: true });
        };
        if z.total() > x.total() {
            if beta > 0.0 {
                theta = 1.0;
                continue;
            }
            tau *= cfg.backtrack;
            if tau < tau_min {
                return Ok(Descent { point: x, iterations: it, last_move, converged: true });
            }
            continue;
        }
        last_move = max_move(&z.m, &x.m);
        let decrease = x.total() - z.total();
        x_old = std::mem::replace(&mut x, z).m;
        theta = theta_next;
        tau = (tau / cfg.backtrack.sqrt()).min(tau_max);
        let rel = decrease / (1.0 + x.total().abs());
        stalled = if rel <= STALL { stalled + 1 } else { 0 };
        if (last_move < cfg.tol_prox && rel < cfg.tol_outer) || stalled >= 3 {
            return Ok(Descent { point: x, iterations: it + 1, last_move, converged: true });
        }
    }
    Ok(Descent { point: x, iterations: max_iter, last_move, converged: false })
}

/// Minimizes `E(t, u, .) + D(m_prev, .)` over saturated fields for fixed
/// displacement, starting from `m_init`. In the bulk the stray field is
/// frozen at `m_init` and majorized.
pub fn magnetization_step(
    problem: &Problem,
    m_prev: &MagnetizationField,
    m_init: &MagnetizationField,
    disp: &[f64],
    t: f64,
    cfg: &SolverConfig,
) -> Result<MStepResult> {
    problem.schedule.check_time(t)?;
    if !m_prev.matches(&problem.grid) || !m_init.matches(&problem.grid) || disp.len() != problem.elastic.n_unknowns() {
        return Err(Error::GridMismatch("magnetization step inputs do not match grid".into()));
    }
    let model = Objective::new(problem, t, m_prev, Some(disp.to_vec()), Lag::at(problem, m_init)?, cfg);
    let start = model.eval(m_init.clone(), disp)?;
    let r = minimize(&model, start, cfg, cfg.max_prox)?;
    if !r.converged {
        return Err(Error::NonConvergence { what: "magnetization step", iterations: r.iterations, residual: r.last_move });
    }
    Ok(MStepResult { objective: r.point.total(), m: r.point.m, iterations: r.iterations, last_move: r.last_move, converged: true })
}
