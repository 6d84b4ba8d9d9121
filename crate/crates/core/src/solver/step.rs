use serde::Serialize;

use crate::energetics::{dissipation_distance, EnergyBreakdown, Problem, Side, State};
use crate::error::{Error, Result};
use crate::fields::MagnetizationField;
use crate::solver::audit::{stability_audit, AuditReport};
use crate::solver::cg::elastic_solve;
use crate::solver::mstep::{minimize, Lag, Objective, Point};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepStats {
    pub outer: usize,
    pub cg: usize,
    pub prox: usize,
    /// Final incremental objective `E(t_k, q_k) + D(m_{k-1}, m_k)`.
    pub objective: f64,
    /// Largest per-node change in the last proximal iteration.
    pub last_move: f64,
    /// Whether a restart from a uniform state won.
    pub restarted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    pub stats: StepStats,
    /// Objective after each outer iteration of the winning run.
    pub history: Vec<f64>,
}

/// Minimizes the incremental objective from `start` with the displacement
/// relaxed at every trial magnetization. In the bulk the stray field is
/// frozen per outer iteration and re-solved between them.
fn descend(problem: &Problem, prev: &State, start: MagnetizationField, t: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    let mut stats = StepStats::default();
    let mut m = start;
    let mut disp = prev.disp.clone();
    let mut history: Vec<f64> = Vec::new();
    for outer in 1..=cfg.max_outer {
        let lag = Lag::at(problem, &m)?;
        let lagged = lag.is_some();
        let model = Objective::new(problem, t, &prev.m, None, lag, cfg);
        let p0 = model.eval(m, &disp)?;
        if history.is_empty() {
            history.push(p0.total());
        }
        let r = minimize(&model, p0, cfg, cfg.max_prox)?;
        stats.outer = outer;
        stats.prox += r.iterations;
        stats.cg += model.cg.get();
        stats.last_move = r.last_move;
        if !r.converged {
            return Err(Error::NonConvergence { what: "incremental step", iterations: r.iterations, residual: r.last_move });
        }
        let exact = if lagged { model.exact(&r.point)? } else { r.point.total() };
        let before = *history.last().expect("nonempty");
        history.push(exact);
        m = r.point.m;
        disp = r.point.disp;
        if !lagged || before - exact <= cfg.tol_outer * (1.0 + exact.abs()) {
            stats.objective = exact;
            return Ok(StepOutcome { state: State::new(disp, m), stats, history });
        }
    }
    Err(Error::NonConvergence { what: "incremental step", iterations: cfg.max_outer, residual: stats.last_move })
}

/// Uniform starting fields for restarts: easy axes, coordinate axes and the
/// applied field direction, each with both signs.
fn restart_candidates(problem: &Problem, t: f64) -> Vec<[f64; 3]> {
    let mut dirs: Vec<[f64; 3]> = problem.materials.anisotropy.easy_axes(0);
    dirs.extend([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let h = problem.schedule.field(t);
    if h.iter().any(|&x| x != 0.0) {
        dirs.push(h);
    }
    let mut out: Vec<[f64; 3]> = Vec::new();
    for d in dirs {
        for s in [1.0, -1.0] {
            let c = d.map(|x| s * x);
            if !out.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

/// One step of the time-incremental scheme: approximately minimizes
/// `E(t, u, m) + D(prev.m, m)` starting from the previous state.
pub fn incremental_step(problem: &Problem, prev: &State, t: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    problem.schedule.check_time(t)?;
    problem.check_state(prev)?;
    let mut best = descend(problem, prev, prev.m.clone(), t, cfg)?;
    if !cfg.global_restarts {
        return Ok(best);
    }
    let mut starts = vec![flipped(problem, &prev.m)?];
    for dir in restart_candidates(problem, t) {
        starts.push(MagnetizationField::uniform(&problem.grid, dir, problem.materials.m_sat)?);
    }
    let mut screens = Vec::with_capacity(starts.len());
    for start in starts {
        if screens.iter().any(|s: &Screen<'_>| s.start == start) {
            continue;
        }
        screens.push(Screen::new(problem, prev, start, t, cfg)?);
    }
    for s in screens.iter_mut() {
        s.advance(SCREEN_ITERS[0])?;
    }
    screens.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    screens.truncate(SCREEN_KEEP);
    for s in screens.iter_mut() {
        s.advance(SCREEN_ITERS[1])?;
    }
    let screened = screens.into_iter().min_by(|a, b| a.phi.total_cmp(&b.phi)).map(|s| (s.phi, s.point.m));
    let margin = 1e-9 * (1.0 + best.stats.objective.abs());
    if let Some((phi, m)) = screened {
        if phi < best.stats.objective - margin {
            if let Ok(mut run) = descend(problem, prev, m, t, cfg) {
                if run.stats.objective < best.stats.objective - margin {
                    run.stats.restarted = true;
                    run.stats.cg += best.stats.cg;
                    run.stats.prox += best.stats.prox;
                    best = run;
                }
            }
        }
    }
    Ok(best)
}

/// Iterations of the two screening rounds, and the candidates kept after
/// the first.
const SCREEN_ITERS: [usize; 2] = [25, 75];
const SCREEN_KEEP: usize = 3;

/// `-m` node by node.
fn flipped(problem: &Problem, m: &MagnetizationField) -> Result<MagnetizationField> {
    let v = m.values().iter().map(|x| x.map(|c| -c)).collect();
    MagnetizationField::new(&problem.grid, v, m.m_sat())
}

/// Short descent from a restart candidate; `phi` is the exact objective
/// reached so far.
struct Screen<'a> {
    start: MagnetizationField,
    model: Objective<'a>,
    point: Point,
    phi: f64,
}

impl<'a> Screen<'a> {
    fn new(problem: &'a Problem, prev: &'a State, start: MagnetizationField, t: f64, cfg: &'a SolverConfig) -> Result<Self> {
        let model = Objective::new(problem, t, &prev.m, None, Lag::at(problem, &start)?, cfg);
        let point = model.eval(start.clone(), &prev.disp)?;
        let phi = model.exact(&point)?;
        Ok(Self { start, model, point, phi })
    }

    fn advance(&mut self, iters: usize) -> Result<()> {
        let r = minimize(&self.model, self.point.clone(), self.model.cfg(), iters)?;
        self.phi = self.model.exact(&r.point)?;
        self.point = r.point;
        Ok(())
    }
}

/// Initial datum: given magnetization with the elastically relaxed
/// displacement at time `t`.
pub fn initial_state(problem: &Problem, m: MagnetizationField, t: f64, cfg: &SolverConfig) -> Result<State> {
    let sol = elastic_solve(problem, &m, t, None, cfg)?;
    Ok(State::new(sol.disp, m))
}

/// Per-step record of an evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub energies: Vec<EnergyBreakdown>,
    pub diss_cum: Vec<f64>,
    /// Power at `t_k` for the state `q_k` with left rates.
    pub power_left: Vec<f64>,
    /// Power at `t_k` for the state `q_k` with right rates.
    pub power_right: Vec<f64>,
    /// Power at `t_k` for the state `q_{k-1}` with left rates (end of the
    /// step that produced `q_k`).
    pub power_end: Vec<f64>,
    pub snapshots: Vec<State>,
    pub stats: Vec<StepStats>,
    pub audits: Vec<Option<AuditReport>>,
    pub breakpoints: Vec<bool>,
    pub warnings: Vec<String>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn worst_audit(&self) -> Option<f64> {
        self.audits.iter().flatten().map(|a| a.worst - a.tolerance).reduce(f64::max)
    }
}

/// Runs the incremental scheme over `partition`. With `audit`, every state
/// (including the initial one) is checked against sampled competitors.
pub fn evolve(
    problem: &Problem,
    initial: State,
    partition: &[f64],
    cfg: &SolverConfig,
    audit: bool,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    if partition.is_empty() || partition.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("partition must be nonempty and strictly increasing"));
    }
    problem.check_state(&initial)?;
    let t0 = partition[0];
    let mut rec = TrajectoryRecord {
        times: vec![t0],
        energies: vec![problem.energy(t0, &initial)?],
        diss_cum: vec![0.0],
        power_left: vec![problem.power(t0, &initial, Side::Left)?],
        power_right: vec![problem.power(t0, &initial, Side::Right)?],
        power_end: vec![problem.power(t0, &initial, Side::Left)?],
        snapshots: Vec::with_capacity(partition.len()),
        stats: vec![StepStats::default()],
        audits: Vec::with_capacity(partition.len()),
        breakpoints: vec![problem.schedule.is_breakpoint(t0)],
        warnings: Vec::new(),
    };
    if audit {
        let a = stability_audit(problem, &initial, t0, cfg.n_stability_samples, cfg, 0)?;
        if !a.passed {
            rec.warnings.push(format!("initial state is not stable: violation {:.3e}", a.worst));
        }
        rec.audits.push(Some(a));
    } else {
        rec.audits.push(None);
    }
    rec.snapshots.push(initial);
    for (k, &t) in partition.iter().enumerate().skip(1) {
        let prev = rec.snapshots.last().expect("nonempty");
        let out = incremental_step(problem, prev, t, cfg)?;
        let d = dissipation_distance(&prev.m, &out.state.m, &problem.grid, problem.thickness(), &problem.materials.dissipation)?;
        rec.times.push(t);
        rec.energies.push(problem.energy(t, &out.state)?);
        rec.diss_cum.push(rec.diss_cum[k - 1] + d);
        rec.power_end.push(problem.power(t, prev, Side::Left)?);
        rec.power_left.push(problem.power(t, &out.state, Side::Left)?);
        rec.power_right.push(problem.power(t, &out.state, Side::Right)?);
        rec.breakpoints.push(problem.schedule.is_breakpoint(t));
        rec.stats.push(out.stats);
        rec.audits.push(if audit {
            Some(stability_audit(problem, &out.state, t, cfg.n_stability_samples, cfg, k as u64)?)
        } else {
            None
        });
        rec.snapshots.push(out.state);
    }
    Ok(rec)
}
