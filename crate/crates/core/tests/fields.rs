mod common;

use common::lift_error;
use proptest::prelude::*;
use thinmag::fields::*;

#[test]
fn lift_reproduces_transverse_strain_at_second_order() {
    let errs: Vec<f64> = [33, 65, 129].iter().map(|&n| lift_error(n)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "errors {errs:?}, order {order}");
    }
}

#[test]
fn lift_of_uniform_field_is_exact() {
    let plate = Grid::plate(6, 5, 1.0, 2.0, Edge::Top).unwrap();
    let bulk = plate.with_layers(4, 0.1).unwrap();
    let m = MagnetizationField::uniform(&plate, [0.3, -0.5, 0.8], 1.0).unwrap();
    let u = lift_displacement(&PlateDisplacement::zeros(30), &m, &plate, &bulk).unwrap();
    let v = m.values()[0];
    for t in symmetric_gradient(&u, &bulk).unwrap() {
        assert!((t[0][2] - v[0] * v[2]).abs() < 1e-13);
        assert!((t[1][2] - v[1] * v[2]).abs() < 1e-13);
        assert!((t[2][2] - v[2] * v[2] + 1.0 / 3.0).abs() < 1e-13);
    }
}

#[test]
fn derivative_is_exact_on_quadratics_and_second_order() {
    let err = |n: usize| {
        let g = Grid::plate(n, 4, 2.0, 1.0, Edge::Left).unwrap();
        let f: Vec<f64> = (0..g.n_nodes()).map(|k| g.coords(k)[0].sin()).collect();
        let d = g.d(0, &f);
        (0..g.n_nodes()).map(|k| (d[k] - g.coords(k)[0].cos()).abs()).fold(0.0, f64::max)
    };
    let (a, b) = (err(11), err(21));
    assert!((a / b).log2() > 1.9);
    let g = Grid::bulk(5, 6, 3, 1.0, 1.0, 0.5, Edge::Left).unwrap();
    let f: Vec<f64> = (0..g.n_nodes()).map(|k| {
        let x = g.coords(k);
        x[0] * x[0] - 3.0 * x[1] * x[2] + x[2] * x[2]
    }).collect();
    let grad = gradient(&f, &g).unwrap();
    for (k, gk) in grad.iter().enumerate() {
        let x = g.coords(k);
        let exact = [2.0 * x[0], -3.0 * x[2], -3.0 * x[1] + 2.0 * x[2]];
        for c in 0..3 {
            assert!((gk[c] - exact[c]).abs() < 1e-12);
        }
    }
}

#[test]
fn quadrature_weights() {
    let g = Grid::bulk(7, 5, 5, 1.5, 0.8, 0.3, Edge::Left).unwrap();
    let total: f64 = (0..g.n_nodes()).map(|n| g.weight(n)).sum();
    assert!((total - g.area()).abs() < 1e-13);
    // Simpson through the thickness integrates z^3 exactly
    let cubic: f64 = (0..g.n_nodes()).map(|n| g.weight(n) * g.coords(n)[2].powi(3)).sum();
    assert!((cubic - 0.25 * g.area()).abs() < 1e-13);
}

#[test]
fn edge_modes_are_kirchhoff_love() {
    for edge in [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top] {
        let g = Grid::bulk(6, 7, 3, 1.0, 1.3, 0.2, edge).unwrap();
        for kind in [ModeKind::Stretch, ModeKind::Shear, ModeKind::EdgeBend] {
            let u = DirichletDatum::new(kind, &g).bulk_field(&g);
            assert!(validate_kl(&u, &g).unwrap() < TOL_KL);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stencil_transpose_is_adjoint(nx in 3usize..9, ny in 3usize..9, nz in 2usize..5, axis in 0usize..3, seed in any::<u64>()) {
        let g = Grid::bulk(nx, ny, nz, 1.0, 1.7, 0.4, Edge::Left).unwrap();
        let n = g.n_nodes();
        let val = |k: usize, s: u64| (((k as u64 + 1) * 2654435761 ^ s) % 1000) as f64 / 500.0 - 1.0;
        let f: Vec<f64> = (0..n).map(|k| val(k, seed)).collect();
        let h: Vec<f64> = (0..n).map(|k| val(k, seed.rotate_left(17))).collect();
        let lhs: f64 = g.d(axis, &f).iter().zip(&h).map(|(a, b)| a * b).sum();
        let rhs: f64 = f.iter().zip(g.d_t(axis, &h)).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn projection_lands_on_sphere(v in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 9), m_sat in 0.5f64..2.0) {
        prop_assume!(v.iter().all(|x| x.iter().map(|c| c * c).sum::<f64>() > 1e-6));
        let g = Grid::plate(3, 3, 1.0, 1.0, Edge::Left).unwrap();
        let m = project_sphere(&g, v, m_sat).unwrap();
        prop_assert!(m.saturation_defect() <= 1e-12 * m_sat);
    }
}
