use serde::Serialize;

use crate::energetics::{balance_residual, BalanceResidual, EnergyBreakdown, Problem, State};
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::harness::output::{flag, int, num, render_json, render_state, Artifacts, CsvTable, Stamp};
use crate::solver::{evolve, incremental_step, initial_state, StepStats, TrajectoryRecord};
use crate::stray::{stray_limit_diagnostic, StrayDiagRow};

pub const TRAJECTORY_COLUMNS: [&str; 29] = [
    "t", "lambda", "h1", "h2", "h3", "exchange", "anisotropy", "stray", "zeeman", "elastic", "total",
    "diss_cum", "residual", "residual_nodal", "power_left", "power_right", "m1", "m2", "m3", "outer", "cg",
    "prox", "restarted", "last_move", "objective", "audit_worst", "audit_tolerance", "audit_passed",
    "breakpoint",
];

const ENERGY_COLUMNS: [&str; 7] = ["exchange", "anisotropy", "stray", "zeeman", "elastic", "total", "feasible"];

fn energy_cells(e: &EnergyBreakdown) -> Vec<String> {
    vec![
        num(e.exchange),
        num(e.anisotropy),
        num(e.stray),
        num(e.zeeman),
        num(e.elastic),
        num(e.total),
        flag(e.feasible),
    ]
}

pub fn stamp(cfg: &RunConfig) -> Stamp {
    Stamp { config_sha256: cfg.hash(), seed: cfg.seed }
}

/// Static minimum of one problem with the dissipation switched off.
#[derive(Debug, Clone)]
pub struct StaticRun {
    pub state: State,
    pub energy: EnergyBreakdown,
    pub stats: StepStats,
}

/// Minimizes `E(0, .)` from the configured initial magnetization.
pub fn static_minimize(cfg: &RunConfig, problem: &Problem) -> Result<StaticRun> {
    let solver = cfg.solver_config();
    let p = problem.with_materials(problem.materials.without_dissipation());
    let m0 = cfg.initial_m(&p.grid, &p.materials)?;
    let s0 = initial_state(&p, m0, 0.0, &solver)?;
    let out = incremental_step(&p, &s0, 0.0, &solver)?;
    let energy = p.energy(0.0, &out.state)?;
    Ok(StaticRun { state: out.state, energy, stats: out.stats })
}

pub fn run_static(cfg: &RunConfig) -> Result<(StaticRun, Artifacts)> {
    let problem = cfg.problem()?;
    let run = static_minimize(cfg, &problem)?;
    let st = stamp(cfg);
    let mut cols: Vec<&'static str> = ENERGY_COLUMNS.to_vec();
    cols.extend(["outer", "cg", "prox", "restarted", "last_move"]);
    let mut table = CsvTable::new(cols);
    let mut row = energy_cells(&run.energy);
    let s = run.stats;
    row.extend([int(s.outer), int(s.cg), int(s.prox), flag(s.restarted), num(s.last_move)]);
    table.push(row);
    let mut art = Artifacts::default();
    art.add("static_energy.csv", table.render(&st));
    art.add("static_state.txt", render_state(&problem, &run.state, 0.0, &st));
    Ok((run, art))
}

#[derive(Debug, Clone, Serialize)]
pub struct StepAudit {
    pub t: f64,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Audit summary written next to the trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub steps: usize,
    pub max_stability_violation: Option<f64>,
    pub all_audits_passed: bool,
    pub max_balance_residual: f64,
    pub max_balance_residual_nodal: f64,
    pub diss_total: f64,
    pub final_energy: f64,
    pub warnings: Vec<String>,
    pub audits: Vec<StepAudit>,
}

#[derive(Debug, Clone)]
pub struct EvolveRun {
    pub record: TrajectoryRecord,
    pub residual: BalanceResidual,
    pub summary: EvolveSummary,
    pub trajectory: CsvTable,
}

/// Initial datum: uniform (or textured) magnetization with the relaxed
/// displacement, optionally followed by one incremental step at `t = 0`.
pub fn initial_datum(cfg: &RunConfig, problem: &Problem) -> Result<State> {
    let solver = cfg.solver_config();
    let m0 = cfg.initial_m(&problem.grid, &problem.materials)?;
    let s0 = initial_state(problem, m0, 0.0, &solver)?;
    if cfg.initial.relax {
        Ok(incremental_step(problem, &s0, 0.0, &solver)?.state)
    } else {
        Ok(s0)
    }
}

/// Runs the incremental scheme of `problem` on `steps` equal steps.
pub fn evolve_problem(cfg: &RunConfig, problem: &Problem, steps: usize) -> Result<EvolveRun> {
    let solver = cfg.solver_config();
    let s0 = initial_datum(cfg, problem)?;
    let partition = problem.schedule.uniform_partition(steps);
    let record = evolve(problem, s0, &partition, &solver, cfg.output.audit)?;
    let residual = balance_residual(&record);
    let trajectory = trajectory_table(problem, &record, &residual);
    let audits: Vec<StepAudit> = record
        .audits
        .iter()
        .zip(&record.times)
        .filter_map(|(a, &t)| a.map(|a| StepAudit { t, worst: a.worst, tolerance: a.tolerance, passed: a.passed }))
        .collect();
    let summary = EvolveSummary {
        steps,
        max_stability_violation: audits.iter().map(|a| a.worst).reduce(f64::max),
        all_audits_passed: audits.iter().all(|a| a.passed),
        max_balance_residual: residual.max_abs,
        max_balance_residual_nodal: residual.nodal.iter().fold(0.0f64, |m, r| m.max(r.abs())),
        diss_total: *record.diss_cum.last().expect("nonempty"),
        final_energy: record.energies.last().expect("nonempty").total,
        warnings: record.warnings.clone(),
        audits,
    };
    Ok(EvolveRun { record, residual, summary, trajectory })
}

fn trajectory_table(problem: &Problem, rec: &TrajectoryRecord, res: &BalanceResidual) -> CsvTable {
    let mut table = CsvTable::new(TRAJECTORY_COLUMNS.to_vec());
    for k in 0..rec.len() {
        let t = rec.times[k];
        let e = &rec.energies[k];
        let h = problem.schedule.field(t);
        let m = rec.snapshots[k].m.mean(&problem.grid);
        let s = rec.stats[k];
        let (aw, at, ap) = match rec.audits[k] {
            Some(a) => (num(a.worst), num(a.tolerance), flag(a.passed)),
            None => (String::new(), String::new(), String::new()),
        };
        table.push(vec![
            num(t),
            num(problem.schedule.lambda(t)),
            num(h[0]),
            num(h[1]),
            num(h[2]),
            num(e.exchange),
            num(e.anisotropy),
            num(e.stray),
            num(e.zeeman),
            num(e.elastic),
            num(e.total),
            num(rec.diss_cum[k]),
            num(res.series[k]),
            num(res.nodal[k]),
            num(rec.power_left[k]),
            num(rec.power_right[k]),
            num(m[0]),
            num(m[1]),
            num(m[2]),
            int(s.outer),
            int(s.cg),
            int(s.prox),
            flag(s.restarted),
            num(s.last_move),
            num(s.objective),
            aw,
            at,
            ap,
            flag(rec.breakpoints[k]),
        ]);
    }
    table
}

pub fn run_evolve(cfg: &RunConfig) -> Result<(EvolveRun, Artifacts)> {
    let problem = cfg.problem()?;
    let run = evolve_problem(cfg, &problem, cfg.schedule.steps)?;
    let st = stamp(cfg);
    let mut art = Artifacts::default();
    art.add("trajectory.csv", run.trajectory.render(&st));
    art.add("audit.json", render_json(&run.summary, &st));
    if cfg.output.snapshots {
        for (k, s) in run.record.snapshots.iter().enumerate() {
            art.add(format!("snapshots/state_{k:04}.txt"), render_state(&problem, s, run.record.times[k], &st));
        }
    }
    Ok((run, art))
}

/// Same path traversed `factor` times slower on the matched partition.
#[derive(Debug, Clone, Serialize)]
pub struct RateCheck {
    pub factor: f64,
    pub steps: usize,
    pub identical: bool,
    /// Largest nodal difference between corresponding states.
    pub max_difference: f64,
}

pub fn rate_independence(cfg: &RunConfig, factor: f64) -> Result<RateCheck> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::Config(format!("time factor must be positive (got {factor})")));
    }
    let quiet = RunConfig { output: crate::harness::config::OutputConfig { audit: false, ..cfg.output.clone() }, ..cfg.clone() };
    let p = quiet.problem()?;
    let slow = p.with_schedule(p.schedule.time_scaled(factor));
    let a = evolve_problem(&quiet, &p, cfg.schedule.steps)?;
    let b = evolve_problem(&quiet, &slow, cfg.schedule.steps)?;
    let mut identical = true;
    let mut max_difference = 0.0f64;
    for (x, y) in a.record.snapshots.iter().zip(&b.record.snapshots) {
        identical &= x == y;
        for (u, v) in x.m.values().iter().zip(y.m.values()) {
            for c in 0..3 {
                max_difference = max_difference.max((u[c] - v[c]).abs());
            }
        }
        for (u, v) in x.disp.iter().zip(&y.disp) {
            max_difference = max_difference.max((u - v).abs());
        }
    }
    Ok(RateCheck { factor, steps: cfg.schedule.steps, identical, max_difference })
}

/// One thickness of the static sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub h: f64,
    pub nz: usize,
    pub total: f64,
    pub total_gap: f64,
    pub elastic: f64,
    pub elastic_gap: f64,
    pub stray: f64,
    pub stray_gap: f64,
    pub magnetic_gap: f64,
    /// Elastic energy with the initial planar magnetization held fixed.
    pub fixed_elastic: f64,
    pub fixed_elastic_gap: f64,
}

#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub plate: EnergyBreakdown,
    pub plate_fixed_elastic: f64,
    pub rows: Vec<SweepRow>,
    pub table: CsvTable,
}

/// Static minimization on the plate and on bulk grids with `geometry.nz`
/// layers for every thickness of `geometry.h_list`.
pub fn gamma_sweep(cfg: &RunConfig) -> Result<GammaSweep> {
    let solver = cfg.solver_config();
    let plate = cfg.problem_on(cfg.plate_grid()?)?;
    let e0 = static_minimize(cfg, &plate)?.energy;
    let fixed = |p: &Problem| -> Result<f64> {
        let m = cfg.initial_m(&p.grid, &p.materials)?;
        let s = initial_state(p, m, 0.0, &solver)?;
        Ok(p.energy(0.0, &s)?.elastic)
    };
    let fixed0 = fixed(&plate)?;
    let mut rows = Vec::with_capacity(cfg.geometry.h_list.len());
    for &h in &cfg.geometry.h_list {
        let grid = plate.grid.with_layers(cfg.geometry.nz, h)?;
        let bulk = cfg.problem_on(grid)?;
        let eh = static_minimize(cfg, &bulk)?.energy;
        let fh = fixed(&bulk)?;
        rows.push(SweepRow {
            h,
            nz: cfg.geometry.nz,
            total: eh.total,
            total_gap: (eh.total - e0.total).abs(),
            elastic: eh.elastic,
            elastic_gap: (eh.elastic - e0.elastic).abs(),
            stray: eh.stray,
            stray_gap: (eh.stray - e0.stray).abs(),
            magnetic_gap: (eh.magnetic() - e0.magnetic()).abs(),
            fixed_elastic: fh,
            fixed_elastic_gap: (fh - fixed0).abs(),
        });
    }
    let mut table = CsvTable::new(vec![
        "h",
        "nz",
        "total_h",
        "total_0",
        "total_gap",
        "elastic_h",
        "elastic_0",
        "elastic_gap",
        "stray_h",
        "stray_0",
        "stray_gap",
        "magnetic_gap",
        "fixed_elastic_h",
        "fixed_elastic_0",
        "fixed_elastic_gap",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.h),
            int(r.nz),
            num(r.total),
            num(e0.total),
            num(r.total_gap),
            num(r.elastic),
            num(e0.elastic),
            num(r.elastic_gap),
            num(r.stray),
            num(e0.stray),
            num(r.stray_gap),
            num(r.magnetic_gap),
            num(r.fixed_elastic),
            num(fixed0),
            num(r.fixed_elastic_gap),
        ]);
    }
    Ok(GammaSweep { plate: e0, plate_fixed_elastic: fixed0, rows, table })
}

/// Whether `v` is nonincreasing up to a relative slack.
pub fn nonincreasing_with_slack(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

pub fn run_gamma_sweep(cfg: &RunConfig) -> Result<(GammaSweep, Artifacts)> {
    let sweep = gamma_sweep(cfg)?;
    let mut art = Artifacts::default();
    art.add("gamma_sweep.csv", sweep.table.render(&stamp(cfg)));
    Ok((sweep, art))
}

/// Extrudes the initial planar magnetization to each thickness of
/// `geometry.h_list` and compares stray energies with the surrogate.
pub fn stray_diag(cfg: &RunConfig) -> Result<(Vec<StrayDiagRow>, CsvTable)> {
    let grid = cfg.plate_grid()?;
    let materials = cfg.materials()?;
    let m = cfg.initial_m(&grid, &materials)?;
    let rows = stray_limit_diagnostic(&m, &grid, &cfg.geometry.h_list, cfg.geometry.nz_cap)?;
    let mut table = CsvTable::new(vec!["h", "nz", "fft_energy", "surrogate", "gap", "relative_gap"]);
    for r in &rows {
        let rel = if r.surrogate != 0.0 { r.gap / r.surrogate.abs() } else { r.gap };
        table.push(vec![num(r.h), int(r.nz), num(r.fft_energy), num(r.surrogate), num(r.gap), num(rel)]);
    }
    Ok((rows, table))
}

pub fn run_stray_diag(cfg: &RunConfig) -> Result<(Vec<StrayDiagRow>, Artifacts)> {
    let (rows, table) = stray_diag(cfg)?;
    let mut art = Artifacts::default();
    art.add("stray_diag.csv", table.render(&stamp(cfg)));
    Ok((rows, art))
}
