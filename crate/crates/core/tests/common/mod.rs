#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use thinmag::energetics::{FieldLaw, LoadSchedule, Problem, State, Table};
use thinmag::fields::{
    lift_displacement, project_sphere, symmetric_gradient, Edge, Grid, MagnetizationField, ModeKind, PlateDisplacement,
};
use thinmag::material::{
    AnisotropyModel, DissipationParams, ElasticityTensor, Materials, OffPlane, R3Law, ThicknessScaling,
};
use thinmag::solver::{incremental_step, initial_state, SolverConfig};

pub fn materials(k3: f64, axis: [f64; 3], alpha: f64, elastic: f64, r: f64) -> Materials {
    let an = AnisotropyModel::new(0.0, OffPlane::Uniaxial { k3, axis }, ThicknessScaling::Constant { value: 1.0 }, 1.0)
        .unwrap();
    Materials::new(
        1.0,
        alpha,
        ElasticityTensor::isotropic(elastic, elastic).unwrap(),
        an,
        DissipationParams::new(r, R3Law::Constant { value: r }).unwrap(),
    )
    .unwrap()
}

pub fn harmonic(amplitude: [f64; 3]) -> LoadSchedule {
    LoadSchedule::new(
        Table::constant(0.0),
        FieldLaw::Harmonic { offset: [0.0; 3], amplitude, period: 1.0, phase: 0.0 },
        1.0,
    )
    .unwrap()
}

pub fn plate(n: usize) -> Grid {
    Grid::plate(n, n, 1.0, 1.0, Edge::Left).unwrap()
}

/// Dense quadratic model of `u -> E_el(t, u, m)` over the free unknowns,
/// built from energy values only (polarization). The Hessian does not
/// depend on `(t, m)`; its pseudo-inverse is kept.
pub struct DenseElastic {
    free: Vec<usize>,
    n: usize,
    pinv: DMatrix<f64>,
}

impl DenseElastic {
    pub fn new(problem: &Problem, t: f64, m: &MagnetizationField) -> Self {
        let n = 3 * problem.grid.n_nodes();
        let free: Vec<usize> = (0..n).filter(|&i| problem.elastic.is_free(i)).collect();
        let k = free.len();
        let e = |x: &[f64]| problem.elastic_energy(t, x, m);
        let zero = vec![0.0; n];
        let e0 = e(&zero);
        let mut x = zero.clone();
        let ep: Vec<f64> = (0..k)
            .map(|i| {
                x[free[i]] = 1.0;
                let v = e(&x);
                x[free[i]] = 0.0;
                v
            })
            .collect();
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            x[free[i]] = -1.0;
            h[(i, i)] = ep[i] + e(&x) - 2.0 * e0;
            x[free[i]] = 1.0;
            for j in 0..i {
                x[free[j]] = 1.0;
                let v = e(&x) - ep[i] - ep[j] + e0;
                x[free[j]] = 0.0;
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
            x[free[i]] = 0.0;
        }
        let pinv = h.svd(true, true).pseudo_inverse(1e-10).unwrap();
        Self { free, n, pinv }
    }

    /// Minimizer and minimum of the elastic energy at `(t, m)`, the linear
    /// term also by polarization.
    pub fn solve(&self, problem: &Problem, t: f64, m: &MagnetizationField) -> (Vec<f64>, f64) {
        let e = |x: &[f64]| problem.elastic_energy(t, x, m);
        let mut x = vec![0.0; self.n];
        let g = DVector::from_fn(self.free.len(), |i, _| {
            x[self.free[i]] = 1.0;
            let a = e(&x);
            x[self.free[i]] = -1.0;
            let b = e(&x);
            x[self.free[i]] = 0.0;
            0.5 * (a - b)
        });
        self.finish(problem, t, m, g)
    }

    /// Same with the linear term from the assembly-free gradient at zero.
    pub fn solve_fast(&self, problem: &Problem, t: f64, m: &MagnetizationField) -> (Vec<f64>, f64) {
        let c = problem.elastic.offset(m, problem.schedule.lambda(t));
        let full = problem.elastic.gradient(&vec![0.0; self.n], &c);
        let g = DVector::from_fn(self.free.len(), |i, _| full[self.free[i]]);
        self.finish(problem, t, m, g)
    }

    fn finish(&self, problem: &Problem, t: f64, m: &MagnetizationField, g: DVector<f64>) -> (Vec<f64>, f64) {
        let y = -&self.pinv * g;
        let mut x = vec![0.0; self.n];
        for (i, &f) in self.free.iter().enumerate() {
            x[f] = y[i];
        }
        let val = problem.elastic_energy(t, &x, m);
        (x, val)
    }
}

pub fn dense_elastic(problem: &Problem, t: f64, m: &MagnetizationField) -> (Vec<f64>, f64) {
    DenseElastic::new(problem, t, m).solve(problem, t, m)
}

/// Angles `(theta, phi)` per node.
pub fn to_angles(m: &MagnetizationField) -> Vec<f64> {
    m.values().iter().flat_map(|v| [v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0])]).collect()
}

pub fn from_angles(grid: &Grid, a: &[f64]) -> MagnetizationField {
    let v = a.chunks(2).map(|c| [c[0].sin() * c[1].cos(), c[0].sin() * c[1].sin(), c[0].cos()]).collect();
    project_sphere(grid, v, 1.0).unwrap()
}

/// Dense BFGS with central finite-difference gradients.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: Vec<f64>, iters: usize, gtol: f64) -> (Vec<f64>, f64) {
    let n = x0.len();
    let fd = 1e-6;
    let grad = |x: &[f64]| {
        let mut g = vec![0.0; n];
        let mut y = x.to_vec();
        for i in 0..n {
            y[i] = x[i] + fd;
            let a = f(&y);
            y[i] = x[i] - fd;
            let b = f(&y);
            y[i] = x[i];
            g[i] = (a - b) / (2.0 * fd);
        }
        DVector::from_vec(g)
    };
    let mut x = DVector::from_vec(x0);
    let mut fx = f(x.as_slice());
    let mut g = grad(x.as_slice());
    let mut hinv = DMatrix::<f64>::identity(n, n);
    for _ in 0..iters {
        if g.amax() < gtol {
            break;
        }
        let mut p = -(&hinv * &g);
        if p.dot(&g) >= 0.0 {
            hinv = DMatrix::identity(n, n);
            p = -g.clone();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = &x + &p * step;
            let fnew = f(xn.as_slice());
            if fnew <= fx + 1e-4 * step * p.dot(&g) {
                accepted = Some((xn, fnew));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let gn = grad(xn.as_slice());
        let s = &xn - &x;
        let yv = &gn - &g;
        let sy = s.dot(&yv);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let a = &i - &s * yv.transpose() * rho;
            let b = &i - &yv * s.transpose() * rho;
            hinv = &a * &hinv * &b + &s * s.transpose() * rho;
        }
        x = xn;
        fx = fnew;
        g = gn;
    }
    (x.as_slice().to_vec(), fx)
}

/// Alternating minimization of `E(t, u, m)` (no dissipation): the
/// displacement is eliminated by the dense elastic solve at every trial
/// magnetization, and the node angles are minimized by BFGS.
pub fn dense_alternating(problem: &Problem, t: f64, m0: &MagnetizationField) -> (State, f64) {
    let g = &problem.grid;
    let el = DenseElastic::new(problem, t, m0);
    let obj = |a: &[f64]| {
        let m = from_angles(g, a);
        let (u, _) = el.solve_fast(problem, t, &m);
        problem.energy(t, &State::new(u, m)).unwrap().total
    };
    let (a, _) = bfgs(obj, to_angles(m0), 2000, 1e-9);
    let m = from_angles(g, &a);
    let (u, _) = el.solve(problem, t, &m);
    let s = State::new(u, m);
    let e = problem.energy(t, &s).unwrap().total;
    (s, e)
}

pub fn plate_problem(n: usize, mats: Materials, schedule: LoadSchedule) -> Problem {
    Problem::new(plate(n), mats, schedule, ModeKind::Zero).unwrap()
}

fn smooth_m(x: f64, y: f64) -> [f64; 3] {
    [0.4 * (2.0 * x).sin() + 0.2, 0.3 * (3.0 * y).cos(), 1.0 + 0.2 * x * y]
}

/// Worst `|eps_i3(lift) - eps_mag_i3|` over the bulk nodes, `i = 1, 2, 3`.
pub fn lift_error(n: usize) -> f64 {
    let plate = Grid::plate(n, n, 1.0, 1.0, Edge::Left).unwrap();
    let bulk = plate.with_layers(3, 0.5).unwrap();
    let m = MagnetizationField::from_planar(&plate, 1.0, smooth_m).unwrap();
    let np = plate.n_planar();
    let f = |g: &dyn Fn(f64, f64) -> f64| (0..np).map(|p| {
        let x = plate.coords(p);
        g(x[0], x[1])
    }).collect::<Vec<_>>();
    let disp = PlateDisplacement {
        v1: f(&|x, y| 0.1 * x * x + 0.05 * (2.0 * y).sin()),
        v2: f(&|x, y| -0.07 * x * y),
        v: f(&|x, y| 0.2 * x * x * (1.0 + y)),
    };
    let u = lift_displacement(&disp, &m, &plate, &bulk).unwrap();
    let e = symmetric_gradient(&u, &bulk).unwrap();
    let mut worst = 0.0f64;
    for (node, t) in e.iter().enumerate() {
        let v = m.values()[node % np];
        let target = [v[0] * v[2], v[1] * v[2], v[2] * v[2] - 1.0 / 3.0];
        for i in 0..3 {
            worst = worst.max((t[i][2] - target[i]).abs());
        }
    }
    worst
}

/// `(label, incremental objective, dense alternating minimum)` for one step
/// on a 5x5 plate and a 4x4x3 bulk grid.
pub fn oracle_cases() -> Vec<(&'static str, f64, f64)> {
    let mut cfg = SolverConfig::default();
    cfg.tol_prox = 1e-9;
    let sched = LoadSchedule::new(
        Table::new(vec![(0.0, 0.0), (1.0, 0.02)]).unwrap(),
        FieldLaw::Harmonic { offset: [0.2, 0.0, 0.0], amplitude: [0.3, 0.4, 0.1], period: 1.0, phase: 0.0 },
        1.0,
    )
    .unwrap();
    let mats = materials(0.5, [1.0, 0.0, 0.0], 0.05, 0.5, 0.0);
    let plate = Problem::new(plate(5), mats.clone(), sched.clone(), ModeKind::Stretch).unwrap();
    let bulk = Problem::new(Grid::bulk(4, 4, 3, 1.0, 1.0, 0.5, Edge::Left).unwrap(), mats, sched, ModeKind::Zero).unwrap();
    [("plate 5x5", &plate), ("bulk 4x4x3", &bulk)]
        .into_iter()
        .map(|(label, p)| {
            let m0 = MagnetizationField::from_planar(&p.grid, 1.0, |x, y| [1.0, 0.3 * (3.0 * x).sin(), 0.2 * y]).unwrap();
            let s0 = initial_state(p, m0.clone(), 0.0, &cfg).unwrap();
            let t = 0.3;
            let out = incremental_step(p, &s0, t, &cfg).unwrap();
            let (_, oracle) = dense_alternating(p, t, &m0);
            (label, out.stats.objective, oracle)
        })
        .collect()
}
