mod common;

use common::*;
use thinmag::energetics::*;
use thinmag::fields::*;
use thinmag::solver::*;

/// Energy plus dissipation of a uniform plate state with negligible
/// elasticity: `k3 (1 - (m.a)^2) + m3^2/2 - H.m + R |dm|`.
fn uniform_objective(m: [f64; 3], k3: f64, axis: [f64; 3], h: [f64; 3], prev: [f64; 3], r: f64) -> f64 {
    let p = m[0] * axis[0] + m[1] * axis[1] + m[2] * axis[2];
    let d = [m[0] - prev[0], m[1] - prev[1], m[2] - prev[2]];
    k3 * (1.0 - p * p) + 0.5 * m[2] * m[2] - (h[0] * m[0] + h[1] * m[1] + h[2] * m[2])
        + r * (d[0] * d[0] + d[1] * d[1]).sqrt()
        + r * d[2].abs()
}

/// Grid search over the sphere, then two zooms around the best point.
fn sphere_min(f: impl Fn([f64; 3]) -> f64) -> ([f64; 3], f64) {
    let at = |th: f64, ph: f64| [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
    let (mut th0, mut ph0, mut span_t, mut span_p) = (std::f64::consts::FRAC_PI_2, 0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI);
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for _ in 0..4 {
        let n = 400;
        for i in 0..=n {
            for j in 0..=n {
                let th = th0 - span_t + 2.0 * span_t * i as f64 / n as f64;
                let ph = ph0 - span_p + 2.0 * span_p * j as f64 / n as f64;
                let v = f(at(th, ph));
                if v < best.0 {
                    best = (v, th, ph);
                }
            }
        }
        th0 = best.1;
        ph0 = best.2;
        span_t *= 0.02;
        span_p *= 0.02;
    }
    (at(best.1, best.2), best.0)
}

fn soft(k3: f64, axis: [f64; 3], r: f64) -> thinmag::material::Materials {
    materials(k3, axis, 0.01, 1e-6, r)
}

#[test]
fn uniform_steps_match_sphere_search() {
    let e1 = [1.0, 0.0, 0.0];
    let cases = [
        // stick: the field is below the threshold
        (0.0, e1, [0.0, 0.5, 0.0], e1, 0.8),
        // slip
        (0.0, e1, [0.0, 1.2, 0.0], e1, 0.3),
        (0.5, e1, [0.4, 0.9, 0.3], [0.0, 1.0, 0.0], 0.2),
        (0.3, [0.0, 0.6, 0.8], [0.2, 0.0, 1.5], e1, 0.1),
        // strong field against the starting state
        (0.5, e1, [3.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 0.2),
    ];
    let mut cfg = SolverConfig::default();
    cfg.global_restarts = true;
    for (k3, axis, h, prev, r) in cases {
        let p = plate_problem(3, soft(k3, axis, r), LoadSchedule::frozen(0.0, h, 1.0));
        let s0 = initial_state(&p, MagnetizationField::uniform(&p.grid, prev, 1.0).unwrap(), 0.0, &cfg).unwrap();
        let out = incremental_step(&p, &s0, 0.5, &cfg).unwrap();
        let (m_star, f_star) = sphere_min(|m| uniform_objective(m, k3, axis, h, prev, r));
        assert!((out.stats.objective - f_star).abs() < 1e-5, "{h:?}: {} vs {f_star}", out.stats.objective);
        let mean = out.state.m.mean(&p.grid);
        let dist = (0..3).map(|c| (mean[c] - m_star[c]).powi(2)).sum::<f64>().sqrt();
        assert!(dist < 1e-3, "{h:?}: {mean:?} vs {m_star:?}");
    }
}

#[test]
fn stick_slip_threshold() {
    let cfg = SolverConfig::default();
    let r = 0.4;
    for (scale, sticks) in [(0.9, true), (1.1, false)] {
        let p = plate_problem(3, soft(0.0, [1.0, 0.0, 0.0], r), LoadSchedule::frozen(0.0, [0.0, scale * r, 0.0], 1.0));
        let s0 = initial_state(&p, MagnetizationField::uniform(&p.grid, [1.0, 0.0, 0.0], 1.0).unwrap(), 0.0, &cfg).unwrap();
        let out = incremental_step(&p, &s0, 0.5, &cfg).unwrap();
        let moved = out.state.m.values().iter().map(|v| (v[1]).abs()).fold(0.0, f64::max);
        assert_eq!(moved < 1e-6, sticks, "scale {scale}: {moved}");
    }
}

#[test]
fn incremental_objective_matches_dense_alternating() {
    for (label, objective, oracle) in oracle_cases() {
        assert!((objective - oracle).abs() < 1e-6, "{label}: {objective} vs {oracle}");
    }
}

#[test]
fn magnetization_step_minimizes_at_fixed_displacement() {
    let mut cfg = SolverConfig::default();
    cfg.tol_prox = 1e-9;
    let p = plate_problem(4, materials(0.5, [1.0, 0.0, 0.0], 0.05, 0.5, 0.0), harmonic([0.3, 0.5, 0.0]));
    let m0 = MagnetizationField::from_planar(&p.grid, 1.0, |x, y| [1.0, 0.2 * x, 0.3 * y - 0.1]).unwrap();
    let disp: Vec<f64> = (0..p.elastic.n_unknowns()).map(|i| if p.elastic.is_free(i) { 0.01 * (i as f64).sin() } else { 0.0 }).collect();
    let t = 0.2;
    let r = magnetization_step(&p, &m0, &m0, &disp, t, &cfg).unwrap();
    let obj = |a: &[f64]| p.energy(t, &State::new(disp.clone(), from_angles(&p.grid, a))).unwrap().total;
    let (_, oracle) = bfgs(obj, to_angles(&m0), 2000, 1e-10);
    assert!((r.objective - oracle).abs() < 1e-7, "{} vs {oracle}", r.objective);
    assert!(r.m.saturation_defect() < 1e-12);
}

#[test]
fn dissipation_is_recorded_only_with_positive_resistance() {
    let cfg = SolverConfig::default();
    for (r, positive) in [(0.2, true), (0.0, false)] {
        let p = plate_problem(4, materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.1, r), harmonic([1.5, 0.15, 0.0]));
        let s0 = initial_state(&p, MagnetizationField::uniform(&p.grid, [1.0, 0.0, 0.0], 1.0).unwrap(), 0.0, &cfg).unwrap();
        let rec = evolve(&p, s0, &p.schedule.uniform_partition(8), &cfg, false).unwrap();
        let last = *rec.diss_cum.last().unwrap();
        if positive {
            assert!(last > 0.0);
            assert!(rec.diss_cum.windows(2).all(|w| w[1] >= w[0]));
        } else {
            assert!(rec.diss_cum.iter().all(|&d| d == 0.0));
        }
    }
}

#[test]
fn rescaled_time_gives_identical_states() {
    let cfg = SolverConfig::default();
    let p = plate_problem(4, materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.1, 0.2), harmonic([1.5, 0.15, 0.0]));
    let slow = p.with_schedule(p.schedule.time_scaled(2.0));
    let s0 = initial_state(&p, MagnetizationField::uniform(&p.grid, [1.0, 0.0, 0.0], 1.0).unwrap(), 0.0, &cfg).unwrap();
    let a = evolve(&p, s0.clone(), &p.schedule.uniform_partition(6), &cfg, false).unwrap();
    let b = evolve(&slow, s0, &slow.schedule.uniform_partition(6), &cfg, false).unwrap();
    assert_eq!(a.snapshots, b.snapshots);
    assert_eq!(a.diss_cum, b.diss_cum);
    for (x, y) in a.times.iter().zip(&b.times) {
        assert_eq!(2.0 * x, *y);
    }
}

#[test]
fn audit_accepts_minimizers_and_rejects_bad_states() {
    let mut cfg = SolverConfig::default();
    cfg.n_stability_samples = 60;
    let p = plate_problem(4, materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.1, 0.0), LoadSchedule::frozen(0.0, [1.0, 0.2, 0.0], 1.0));
    let bad = initial_state(&p, MagnetizationField::uniform(&p.grid, [-1.0, 0.0, 0.0], 1.0).unwrap(), 0.0, &cfg).unwrap();
    let report = stability_audit(&p, &bad, 0.0, cfg.n_stability_samples, &cfg, 0).unwrap();
    assert!(!report.passed && report.worst > 1.0);
    cfg.global_restarts = true;
    let good = incremental_step(&p, &bad, 0.0, &cfg).unwrap().state;
    let report = stability_audit(&p, &good, 0.0, cfg.n_stability_samples, &cfg, 0).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.worst >= -1e-12 && report.samples == 60);
    assert_eq!(report, stability_audit(&p, &good, 0.0, cfg.n_stability_samples, &cfg, 0).unwrap());
}

#[test]
fn solver_config_is_validated() {
    let p = plate_problem(3, materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.1, 0.0), harmonic([0.0; 3]));
    let s0 = State::new(vec![0.0; 27], MagnetizationField::uniform(&p.grid, [1.0, 0.0, 0.0], 1.0).unwrap());
    let mut cfg = SolverConfig::default();
    cfg.backtrack = 1.5;
    assert!(matches!(evolve(&p, s0.clone(), &[0.0, 1.0], &cfg, false), Err(thinmag::Error::Config(_))));
    assert!(evolve(&p, s0, &[0.0, 0.5, 0.5], &SolverConfig::default(), false).is_err());
}
