use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::Serialize;

use crate::energetics::{dissipation_distance, Problem, State};
use crate::error::{Error, Result};
use crate::fields::{Grid, MagnetizationField};
use crate::harness::config::RunConfig;
use crate::material::{eps_mag, quadratic_form_q, Materials};
use crate::solver::{incremental_step, initial_state, stability_audit};
use crate::stray::{demag_tensor, StraySolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, suite: &'static str, name: &'static str, outcome: Result<(bool, String)>) {
        let (status, detail) = match outcome {
            Ok((true, d)) => (Status::Pass, d),
            Ok((false, d)) => (Status::Fail, d),
            Err(Error::Material { invariant, detail }) => (Status::Fail, format!("{invariant}: {detail}")),
            Err(e) => (Status::Fail, e.to_string()),
        };
        self.checks.push(Check { suite, name, status, detail });
    }

    fn skip(&mut self, suite: &'static str, names: &[&'static str], why: &str) {
        for &name in names {
            self.checks.push(Check { suite, name, status: Status::Skip, detail: why.to_string() });
        }
    }
}

fn random_field(grid: &Grid, m_sat: f64, rng: &mut ChaCha8Rng) -> Result<MagnetizationField> {
    let np = grid.n_planar();
    let planar: Vec<[f64; 3]> = (0..np).map(|_| UnitSphere.sample(rng)).collect();
    let values = (0..grid.n_nodes()).map(|n| planar[n % np]).collect();
    crate::fields::project_sphere(grid, values, m_sat)
}

const MATERIAL_CHECKS: [&str; 4] =
    ["plane_reduction_minimum", "magnetostriction_trace", "anisotropy_easy_axes", "dissipation_metric"];
const PROBLEM_CHECKS: [&str; 6] = [
    "stray_energy_nonnegative",
    "energy_finite",
    "elastic_minimality",
    "incremental_decrease",
    "step_stability",
    "exchange_nonnegative",
];

/// Runs the invariant suites on small grids (5 x 5 plate, 4 x 4 x 3 bulk)
/// with the configured constitutive data.
pub fn validate(cfg: &RunConfig) -> ValidationReport {
    let mut s = Suite { checks: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    s.record("config", "schema", cfg.check(None).map(|_| (true, String::new())));
    let elasticity = cfg.elasticity();
    s.record("material", "elasticity_spd", elasticity.as_ref().map(|_| (true, String::new())).map_err(clone_err));
    s.record("material", "anisotropy_model", cfg.anisotropy_model().map(|_| (true, String::new())));
    s.record("material", "dissipation_nonnegative", cfg.dissipation_params().map(|_| (true, String::new())));
    let materials = cfg.materials();
    let materials = match materials {
        Ok(m) => m,
        Err(e) => {
            s.record("material", "materials", Err(e));
            s.skip("material", &MATERIAL_CHECKS, "materials unavailable");
            s.skip("problem", &PROBLEM_CHECKS, "materials unavailable");
            return finish(s);
        }
    };

    s.record("material", "plane_reduction_minimum", plane_reduction(&materials, &mut rng));
    s.record("material", "magnetostriction_trace", magnetostriction(&materials, &mut rng));
    s.record("material", "anisotropy_easy_axes", anisotropy(&materials, &mut rng));
    s.record("material", "dissipation_metric", dissipation(cfg, &materials, &mut rng));
    s.record("fields", "stencil_adjoint", stencil_adjoint(&mut rng));
    s.record("stray", "demag_self_trace", demag_trace());

    let geo = &cfg.geometry;
    let small = |nx, ny| Grid::plate(nx, ny, geo.lx, geo.ly, geo.edge);
    let problems = (|| -> Result<(Problem, Problem)> {
        let plate = cfg.problem_on(small(5, 5)?)?;
        let bulk = cfg.problem_on(small(4, 4)?.with_layers(3, geo.h.unwrap_or(0.5))?)?;
        Ok((plate, bulk))
    })();
    let (plate, bulk) = match problems {
        Ok(p) => p,
        Err(e) => {
            s.record("problem", "construction", Err(e));
            s.skip("problem", &PROBLEM_CHECKS, "problems unavailable");
            return finish(s);
        }
    };
    s.record("stray", "stray_energy_nonnegative", stray_nonnegative(&bulk, &mut rng));
    s.record("energetics", "exchange_nonnegative", exchange_nonnegative(&bulk, &mut rng));
    for (label, p) in [("plate", &plate), ("bulk", &bulk)] {
        let out = problem_checks(cfg, p, &mut rng);
        for (name, r) in out {
            let suite = if label == "plate" { "plate" } else { "bulk" };
            s.record(suite, name, r);
        }
    }
    finish(s)
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::Material { invariant, detail } => Error::Material { invariant, detail: detail.clone() },
        other => Error::InvalidInput(other.to_string()),
    }
}

fn finish(s: Suite) -> ValidationReport {
    let passed = s.checks.iter().all(|c| c.status == Status::Pass);
    ValidationReport { passed, checks: s.checks }
}

fn plane_reduction(mat: &Materials, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let c = &mat.elasticity;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (a11, a22, a12): (f64, f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let q = quadratic_form_q(c, &[[a11, a12], [a12, a22]])?;
        let full = |e33: f64, e23: f64, e13: f64| {
            c.energy_density(&[a11, a22, e33, 2.0 * e23, 2.0 * e13, 2.0 * a12])
        };
        let at_min = full(q.b, q.a[1], q.a[0]);
        worst = worst.max((at_min - q.value).abs() / (1.0 + q.value.abs()));
        for _ in 0..10 {
            let d: [f64; 3] = std::array::from_fn(|_| rng.random_range(-0.5..0.5));
            let trial = full(q.b + d[0], q.a[1] + d[1], q.a[0] + d[2]);
            worst = worst.max(q.value - trial);
        }
    }
    Ok((worst <= 1e-10, format!("worst excess {worst:.3e}")))
}

fn magnetostriction(mat: &Materials, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v: [f64; 3] = UnitSphere.sample(rng);
        let m = v.map(|c| c * mat.m_sat);
        let e = eps_mag(&m, mat.m_sat)?;
        worst = worst.max((e[0][0] + e[1][1] + e[2][2]).abs());
    }
    Ok((worst <= 1e-12, format!("max |trace| {worst:.3e}")))
}

fn anisotropy(mat: &Materials, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let a = &mat.anisotropy;
    let mut on_axis = 0.0f64;
    for ax in a.easy_axes(0) {
        on_axis = on_axis.max(a.offplane(0, &ax.map(|c| c * mat.m_sat)).abs());
    }
    let mut min_val = f64::INFINITY;
    for _ in 0..100 {
        let v: [f64; 3] = UnitSphere.sample(rng);
        min_val = min_val.min(a.offplane(0, &v.map(|c| c * mat.m_sat)));
    }
    let ok = on_axis <= 1e-12 && min_val >= -1e-12;
    Ok((ok, format!("on easy axes {on_axis:.3e}, minimum {min_val:.3e}")))
}

fn dissipation(cfg: &RunConfig, mat: &Materials, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let grid = Grid::plate(5, 5, cfg.geometry.lx, cfg.geometry.ly, cfg.geometry.edge)?;
    let th = grid.thickness;
    let p = &mat.dissipation;
    let mut slack = 0.0f64;
    for _ in 0..20 {
        let [a, b, c] = [0, 1, 2].map(|_| random_field(&grid, mat.m_sat, rng));
        let (a, b, c) = (a?, b?, c?);
        let ab = dissipation_distance(&a, &b, &grid, th, p)?;
        let ba = dissipation_distance(&b, &a, &grid, th, p)?;
        let bc = dissipation_distance(&b, &c, &grid, th, p)?;
        let ac = dissipation_distance(&a, &c, &grid, th, p)?;
        let aa = dissipation_distance(&a, &a, &grid, th, p)?;
        slack = slack.max((ab - ba).abs()).max(ac - ab - bc).max(aa.abs());
    }
    Ok((slack <= 1e-12, format!("worst slack {slack:.3e}")))
}

fn stencil_adjoint(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let g = Grid::bulk(6, 5, 4, 1.3, 0.7, 0.5, Default::default())?;
    let n = g.n_nodes();
    let mut worst = 0.0f64;
    for axis in 0..3 {
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = g.d(axis, &f).iter().zip(&h).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(g.d_t(axis, &h)).map(|(a, b)| a * b).sum();
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    Ok((worst <= 1e-12, format!("worst mismatch {worst:.3e}")))
}

fn demag_trace() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for cell in [[1.0, 1.0, 1.0], [1.0, 0.5, 0.2], [0.1, 0.3, 2.0]] {
        let n = demag_tensor([0.0; 3], cell);
        worst = worst.max((n[0] + n[1] + n[2] - 1.0).abs());
    }
    Ok((worst <= 1e-9, format!("worst trace defect {worst:.3e}")))
}

fn stray_nonnegative(bulk: &Problem, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let solver = StraySolver::new(&bulk.grid)?;
    let mut least = f64::INFINITY;
    for _ in 0..5 {
        let m = random_field(&bulk.grid, bulk.materials.m_sat, rng)?;
        least = least.min(solver.solve(m.values())?.energy);
    }
    Ok((least >= -1e-14, format!("smallest energy {least:.3e}")))
}

fn exchange_nonnegative(bulk: &Problem, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let uniform = MagnetizationField::uniform(&bulk.grid, [0.3, -0.2, 0.9], bulk.materials.m_sat)?;
    let zero = bulk.exchange_energy(&uniform);
    let m = random_field(&bulk.grid, bulk.materials.m_sat, rng)?;
    let e = bulk.exchange_energy(&m);
    Ok((zero.abs() <= 1e-14 && e >= 0.0, format!("uniform {zero:.3e}, random {e:.3e}")))
}

fn problem_checks(
    cfg: &RunConfig,
    p: &Problem,
    rng: &mut ChaCha8Rng,
) -> Vec<(&'static str, Result<(bool, String)>)> {
    let solver = cfg.solver_config();
    let mut out = Vec::new();
    let m0 = match cfg.initial_m(&p.grid, &p.materials) {
        Ok(m) => m,
        Err(e) => return vec![("initial_state", Err(e))],
    };
    let s0 = match initial_state(p, m0, 0.0, &solver) {
        Ok(s) => s,
        Err(e) => return vec![("initial_state", Err(e))],
    };
    out.push((
        "energy_finite",
        p.energy(0.0, &s0).map(|e| (e.total.is_finite(), format!("E = {:e}", e.total))),
    ));
    out.push(("elastic_minimality", elastic_minimality(p, &s0, rng)));
    let t1 = p.schedule.horizon / cfg.schedule.steps as f64;
    let step = incremental_step(p, &s0, t1, &solver);
    out.push((
        "incremental_decrease",
        step.as_ref().map_err(clone_err).and_then(|o| {
            let before = p.energy(t1, &s0)?.total;
            let after = o.stats.objective;
            Ok((after <= before + 1e-9 * (1.0 + before.abs()), format!("{before:e} -> {after:e}")))
        }),
    ));
    out.push((
        "step_stability",
        step.map_err(|e| clone_err(&e)).and_then(|o| {
            let samples = solver.n_stability_samples.min(50);
            let a = stability_audit(p, &o.state, t1, samples, &solver, 0)?;
            Ok((a.passed, format!("worst {:.3e}, tolerance {:.3e}", a.worst, a.tolerance)))
        }),
    ));
    out
}

fn elastic_minimality(p: &Problem, s: &State, rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let e = p.elastic_energy(0.0, &s.disp, &s.m);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut d: Vec<f64> = (0..s.disp.len()).map(|_| rng.random_range(-1e-3..1e-3)).collect();
        p.elastic.mask(&mut d);
        let trial: Vec<f64> = s.disp.iter().zip(&d).map(|(a, b)| a + b).collect();
        worst = worst.max(e - p.elastic_energy(0.0, &trial, &s.m));
    }
    Ok((worst <= 1e-10 * (1.0 + e.abs()), format!("E_el = {e:e}, worst descent {worst:.3e}")))
}
