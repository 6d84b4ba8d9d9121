mod common;

use common::*;
use proptest::prelude::*;
use thinmag::energetics::*;
use thinmag::fields::*;
use thinmag::material::*;
use thinmag::solver::{elastic_solve, evolve, incremental_step, initial_state, SolverConfig};

fn ramp() -> LoadSchedule {
    LoadSchedule::new(
        Table::new(vec![(0.0, 0.0), (0.5, 0.04), (1.0, -0.02)]).unwrap(),
        FieldLaw::Harmonic { offset: [0.1, 0.0, 0.0], amplitude: [0.8, 0.3, 0.1], period: 1.0, phase: 0.3 },
        1.0,
    )
    .unwrap()
}

fn textured(g: &Grid) -> MagnetizationField {
    MagnetizationField::from_planar(g, 1.0, |x, y| [0.8 + 0.3 * (3.0 * x).sin(), 0.4 * y - 0.2, 0.5 * x * y + 0.1]).unwrap()
}

fn layered(g: &Grid) -> MagnetizationField {
    let v = (0..g.n_nodes())
        .map(|n| {
            let x = g.coords(n);
            [0.8 + 0.3 * (3.0 * x[0]).sin(), 0.4 * x[1] - 0.2 + 0.3 * x[2], 0.5 * x[0] * x[1] - 0.4 * x[2]]
        })
        .collect();
    project_sphere(g, v, 1.0).unwrap()
}

#[test]
fn elastic_solve_matches_dense_minimizer() {
    let cfg = SolverConfig::default();
    let mats = materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.7, 0.0);
    let plate = Problem::new(plate(5), mats.clone(), ramp(), ModeKind::Stretch).unwrap();
    let bulk = Problem::new(Grid::bulk(4, 4, 3, 1.0, 1.0, 0.5, Edge::Bottom).unwrap(), mats, ramp(), ModeKind::EdgeBend).unwrap();
    for (p, m) in [(&plate, textured(&plate.grid)), (&bulk, layered(&bulk.grid))] {
        for t in [0.25, 0.5, 0.9] {
            let dense = DenseElastic::new(p, t, &m);
            let (_, oracle) = dense.solve(p, t, &m);
            assert!((dense.solve_fast(p, t, &m).1 - oracle).abs() <= 1e-12 * (1.0 + oracle));
            let sol = elastic_solve(p, &m, t, None, &cfg).unwrap();
            let e = p.elastic_energy(t, &sol.disp, &m);
            assert!((e - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), "t = {t}: {e} vs {oracle}");
            assert!(oracle > 0.0);
        }
    }
}

/// Derivative of `f` along the great circle through `m` in the direction
/// of the tangent part of `dir`, by central differences.
fn tangent_fd(g: &Grid, m: &MagnetizationField, dir: &[[f64; 3]], f: &dyn Fn(&MagnetizationField) -> f64) -> (f64, Vec<[f64; 3]>) {
    let tau: Vec<[f64; 3]> = m
        .values()
        .iter()
        .zip(dir)
        .map(|(v, d)| {
            let p = v[0] * d[0] + v[1] * d[1] + v[2] * d[2];
            std::array::from_fn(|c| d[c] - p * v[c])
        })
        .collect();
    let s = 1e-5;
    let at = |s: f64| {
        let v = m.values().iter().zip(&tau).map(|(v, t)| std::array::from_fn(|c| v[c] * s.cos() + t[c] * s.sin())).collect();
        project_sphere(g, v, 1.0).unwrap()
    };
    ((f(&at(s)) - f(&at(-s))) / (2.0 * s), tau)
}

fn pair(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1] + x[2] * y[2]).sum()
}

#[test]
fn energy_gradients_match_finite_differences() {
    let mats = materials(0.7, [0.6, 0.0, 0.8], 0.05, 0.3, 0.0);
    let bulk = Problem::new(Grid::bulk(5, 4, 3, 1.0, 0.8, 0.3, Edge::Left).unwrap(), mats.clone(), ramp(), ModeKind::Zero).unwrap();
    let plate = Problem::new(plate(6), mats, ramp(), ModeKind::Zero).unwrap();
    let t = 0.3;
    for p in [&plate, &bulk] {
        let g = &p.grid;
        let m = layered(g);
        let dir: Vec<[f64; 3]> = (0..g.n_nodes()).map(|n| {
            let x = g.coords(n);
            [(5.0 * x[0]).cos(), x[1] * x[2] - 0.3, (2.0 * x[0] + x[1]).sin()]
        }).collect();
        let checks: Vec<(&str, Box<dyn Fn(&MagnetizationField) -> f64>, Vec<[f64; 3]>)> = vec![
            ("exchange", Box::new(|m| p.exchange_energy(m)), p.exchange_gradient(&m)),
            ("anisotropy", Box::new(|m| p.anisotropy_energy(m).unwrap().finite().unwrap()), p.anisotropy_gradient(&m)),
            ("zeeman", Box::new(|m| p.zeeman_energy(t, m)), p.zeeman_gradient(t)),
            ("stray", Box::new(|m| p.stray_energy(m).unwrap()), {
                let h = p.stray_field(&m).unwrap();
                p.stray_gradient(&m, h.as_deref())
            }),
        ];
        for (name, f, grad) in checks {
            let (fd, tau) = tangent_fd(g, &m, &dir, f.as_ref());
            let an = pair(&grad, &tau);
            assert!((fd - an).abs() < 1e-7 * (1.0 + an.abs()), "{name}: {fd} vs {an}");
        }
    }
}

#[test]
fn power_is_time_derivative_at_fixed_state() {
    let mats = materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.4, 0.0);
    let p = Problem::new(plate(6), mats, ramp(), ModeKind::Shear).unwrap();
    let m = textured(&p.grid);
    let s = initial_state(&p, m, 0.2, &SolverConfig::default()).unwrap();
    let e = |t: f64| p.energy(t, &s).unwrap().total;
    let d = 1e-6;
    for t in [0.2, 0.7] {
        let fd = (e(t + d) - e(t - d)) / (2.0 * d);
        let pw = p.power(t, &s, Side::Left).unwrap();
        assert!((fd - pw).abs() < 1e-6, "t = {t}: {fd} vs {pw}");
        assert_eq!(pw, p.power(t, &s, Side::Right).unwrap());
    }
    // kink of the lambda table
    let right = (e(0.5 + d) - e(0.5)) / d;
    let left = (e(0.5) - e(0.5 - d)) / d;
    assert!((right - p.power(0.5, &s, Side::Right).unwrap()).abs() < 1e-5);
    assert!((left - p.power(0.5, &s, Side::Left).unwrap()).abs() < 1e-5);
    assert!((right - left).abs() > 1e-4);
}

#[test]
fn energy_components_are_consistent() {
    let mats = materials(0.5, [1.0, 0.0, 0.0], 0.02, 0.2, 0.1);
    let p = Problem::new(plate(5), mats.clone(), ramp(), ModeKind::Zero).unwrap();
    let s = State::new(vec![0.0; 75], textured(&p.grid));
    let e = energy_plate(&p, 0.4, &s).unwrap();
    assert!(e.exchange > 0.0 && e.anisotropy >= 0.0 && e.stray >= 0.0 && e.elastic > 0.0);
    let sum = e.exchange + e.anisotropy + e.stray + e.zeeman + e.elastic;
    assert!((e.total - sum).abs() < 1e-14);
    assert!(energy_bulk(&p, 0.4, &s).is_err());
    assert!(p.energy(1.5, &s).is_err());
    // uniform field has no exchange energy
    let u = State::new(vec![0.0; 75], MagnetizationField::uniform(&p.grid, [0.0, 1.0, 0.0], 1.0).unwrap());
    assert_eq!(p.energy(0.0, &u).unwrap().exchange, 0.0);
    let b = Grid::bulk(3, 3, 2, 1.0, 1.0, 0.4, Edge::Left).unwrap();
    assert!(matches!(p.check_state(&State::new(vec![0.0; 54], MagnetizationField::uniform(&b, [0.0, 1.0, 0.0], 1.0).unwrap())), Err(thinmag::Error::GridMismatch(_))));
}

#[test]
fn hard_planar_limit_makes_out_of_plane_infeasible() {
    let an = AnisotropyModel::new(2.0, OffPlane::Uniaxial { k3: 1.0, axis: [0.0, 0.0, 1.0] }, ThicknessScaling::Inverse { scale: 1.0 }, 1.0).unwrap();
    let mats = Materials::new(1.0, 0.01, ElasticityTensor::isotropic(0.1, 0.1).unwrap(), an, DissipationParams::none()).unwrap();
    let p = Problem::new(plate(4), mats, harmonic([0.0; 3]), ModeKind::Zero).unwrap();
    let tilted = State::new(vec![0.0; 48], MagnetizationField::uniform(&p.grid, [0.6, 0.0, 0.8], 1.0).unwrap());
    let e = p.energy(0.0, &tilted).unwrap();
    assert!(!e.feasible && e.total == f64::INFINITY);
    let normal = State::new(vec![0.0; 48], MagnetizationField::uniform(&p.grid, [0.0, 0.0, 1.0], 1.0).unwrap());
    assert!(p.energy(0.0, &normal).unwrap().feasible);
}

#[test]
fn constant_load_from_relaxed_state_balances() {
    let mats = materials(0.5, [1.0, 0.0, 0.0], 0.01, 0.1, 0.2);
    let p = Problem::new(plate(6), mats, LoadSchedule::frozen(0.01, [0.3, 0.2, 0.0], 1.0), ModeKind::Stretch).unwrap();
    let cfg = SolverConfig::default();
    let s0 = initial_state(&p, textured(&p.grid), 0.0, &cfg).unwrap();
    let s0 = incremental_step(&p, &s0, 0.0, &cfg).unwrap().state;
    let rec = evolve(&p, s0, &p.schedule.uniform_partition(5), &cfg, false).unwrap();
    let r = balance_residual(&rec);
    assert!(r.max_abs < 1e-8, "{:?}", r.series);
    assert!(rec.diss_cum.iter().all(|&d| d < 1e-8));
    assert_eq!(r.series.len(), 6);
}

#[test]
fn trajectory_dissipation_sums_steps() {
    let g = plate(4);
    let params = DissipationParams::new(0.3, R3Law::Constant { value: 0.7 }).unwrap();
    let a = MagnetizationField::uniform(&g, [1.0, 0.0, 0.0], 1.0).unwrap();
    let b = MagnetizationField::uniform(&g, [0.0, 1.0, 0.0], 1.0).unwrap();
    let c = MagnetizationField::uniform(&g, [0.0, 0.0, 1.0], 1.0).unwrap();
    let th = Thickness::Finite(0.5);
    let total = trajectory_dissipation(&[a.clone(), b.clone(), c.clone()], &g, th, &params).unwrap();
    let ab = dissipation_distance(&a, &b, &g, th, &params).unwrap();
    let bc = dissipation_distance(&b, &c, &g, th, &params).unwrap();
    assert!((total - ab - bc).abs() < 1e-15);
    assert!((ab - 0.3 * 2f64.sqrt()).abs() < 1e-14 && (bc - (0.3 + 0.7)).abs() < 1e-14);
    assert_eq!(dissipation_distance(&a, &c, &g, Thickness::Limit, &params).unwrap(), dissipation_distance(&a, &c, &g, th, &params).unwrap());
    let other = MagnetizationField::uniform(&plate(5), [1.0, 0.0, 0.0], 1.0).unwrap();
    assert!(matches!(dissipation_distance(&a, &other, &g, th, &params), Err(thinmag::Error::GridMismatch(_))));
    assert!(trajectory_dissipation(&[], &g, th, &params).is_err());
}

fn field(g: &Grid) -> impl Strategy<Value = MagnetizationField> {
    let n = g.n_nodes();
    let g = g.clone();
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), n)
        .prop_filter("nonzero", |v| v.iter().all(|x| x.iter().map(|c| c * c).sum::<f64>() > 1e-4))
        .prop_map(move |v| project_sphere(&g, v, 1.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dissipation_distance_is_a_metric(
        (a, b, c) in {
            let g = Grid::bulk(3, 3, 2, 1.0, 1.0, 0.4, Edge::Left).unwrap();
            (field(&g), field(&g), field(&g))
        },
        r_p in 0.0f64..2.0,
        r3 in 0.0f64..2.0,
    ) {
        let g = Grid::bulk(3, 3, 2, 1.0, 1.0, 0.4, Edge::Left).unwrap();
        let p = DissipationParams::new(r_p, R3Law::Constant { value: r3 }).unwrap();
        let th = Thickness::Finite(0.4);
        let d = |x: &MagnetizationField, y: &MagnetizationField| dissipation_distance(x, y, &g, th, &p).unwrap();
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-12);
    }
}
