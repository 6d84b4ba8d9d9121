use serde::Serialize;

use crate::energetics::{ElasticSystem, LoadSchedule, Side};
use crate::error::{Error, Result};
use crate::fields::{Grid, MagnetizationField, ModeKind, Thickness};
use crate::material::{Density, Materials};
use crate::par;
use crate::stray::{stray_energy_limit, StraySolver};

/// Displacement unknowns and magnetization.
///
/// On a plate grid `disp` holds `(v1, v2, v)` in three blocks of one value per
/// node; on a bulk grid it holds `(u1, u2, u3)` the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub disp: Vec<f64>,
    pub m: MagnetizationField,
}

impl State {
    pub fn new(disp: Vec<f64>, m: MagnetizationField) -> Self {
        Self { disp, m }
    }

    /// Displacement block `c` (one value per node).
    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.disp.len() / 3;
        &self.disp[c * n..(c + 1) * n]
    }
}

pub type PlateState = State;
pub type BulkState = State;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub exchange: f64,
    pub anisotropy: f64,
    pub stray: f64,
    pub zeeman: f64,
    pub elastic: f64,
    pub total: f64,
    pub feasible: bool,
}

impl EnergyBreakdown {
    fn assemble(exchange: f64, anisotropy: Density, stray: f64, zeeman: f64, elastic: f64) -> Self {
        match anisotropy {
            Density::Finite(a) => Self {
                exchange,
                anisotropy: a,
                stray,
                zeeman,
                elastic,
                total: exchange + a + stray + zeeman + elastic,
                feasible: true,
            },
            Density::Infeasible => Self {
                exchange,
                anisotropy: f64::INFINITY,
                stray,
                zeeman,
                elastic,
                total: f64::INFINITY,
                feasible: false,
            },
        }
    }

    pub fn magnetic(&self) -> f64 {
        self.total - self.elastic
    }
}

/// Everything needed to evaluate energies on one grid: plate when the grid
/// thickness is the limit, bulk otherwise.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: Grid,
    pub materials: Materials,
    pub schedule: LoadSchedule,
    pub mode: ModeKind,
    pub elastic: ElasticSystem,
    stray: Option<StraySolver>,
    weights: Vec<f64>,
}

impl Problem {
    pub fn new(grid: Grid, materials: Materials, schedule: LoadSchedule, mode: ModeKind) -> Result<Self> {
        let elastic = ElasticSystem::new(&grid, &materials, mode)?;
        let stray = match grid.thickness {
            Thickness::Finite(_) => Some(StraySolver::new(&grid)?),
            Thickness::Limit => None,
        };
        let area = grid.area();
        let weights = (0..grid.n_nodes()).map(|n| grid.weight(n) / area).collect();
        Ok(Self { grid, materials, schedule, mode, elastic, stray, weights })
    }

    /// Same problem with a different schedule (operators are reused).
    pub fn with_schedule(&self, schedule: LoadSchedule) -> Self {
        Self { schedule, ..self.clone() }
    }

    /// Same problem with different materials of identical stiffness.
    pub fn with_materials(&self, materials: Materials) -> Self {
        Self { materials, ..self.clone() }
    }

    pub fn thickness(&self) -> Thickness {
        self.grid.thickness
    }

    pub fn is_plate(&self) -> bool {
        self.grid.thickness == Thickness::Limit
    }

    /// Normalized quadrature weights `w_n / |S|`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn check_state(&self, state: &State) -> Result<()> {
        if state.disp.len() != 3 * self.grid.n_nodes() || !state.m.matches(&self.grid) {
            return Err(Error::GridMismatch("state does not match grid".into()));
        }
        if state.m.m_sat() != self.materials.m_sat {
            return Err(Error::invalid("state saturation differs from materials"));
        }
        Ok(())
    }

    /// Transverse exchange factor: `1/h^2` in the bulk, unused on plates.
    fn z_factor(&self) -> f64 {
        match self.grid.thickness {
            Thickness::Finite(h) => 1.0 / (h * h),
            Thickness::Limit => 0.0,
        }
    }

    /// Edge-difference coefficients `(neighbor, c)` with energy
    /// `sum c |m_a - m_b|^2` over edges.
    fn exchange_edges(&self, n: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let g = &self.grid;
        let (wx, wy) = g.planar_weights();
        let wz = g.layer_weights();
        let (i, j, k) = g.ijk(n);
        let alpha = self.materials.exchange / g.area();
        let cx = alpha * wy[j] * wz[k] / g.dx();
        let cy = alpha * wx[i] * wz[k] / g.dy();
        let cz = alpha * self.z_factor() * wx[i] * wy[j] / g.dz();
        let mut out = Vec::with_capacity(6);
        if i > 0 {
            out.push((g.idx(i - 1, j, k), cx));
        }
        if i + 1 < g.nx {
            out.push((g.idx(i + 1, j, k), cx));
        }
        if j > 0 {
            out.push((g.idx(i, j - 1, k), cy));
        }
        if j + 1 < g.ny {
            out.push((g.idx(i, j + 1, k), cy));
        }
        if k > 0 {
            out.push((g.idx(i, j, k - 1), cz));
        }
        if k + 1 < g.nz {
            out.push((g.idx(i, j, k + 1), cz));
        }
        out.into_iter()
    }

    pub fn exchange_energy(&self, m: &MagnetizationField) -> f64 {
        let v = m.values();
        // every edge is visited from both ends
        0.5 * par::sum(v.len(), |n| {
            self.exchange_edges(n)
                .map(|(b, c)| c * ((v[n][0] - v[b][0]).powi(2) + (v[n][1] - v[b][1]).powi(2) + (v[n][2] - v[b][2]).powi(2)))
                .sum::<f64>()
        })
    }

    pub fn exchange_gradient(&self, m: &MagnetizationField) -> Vec<[f64; 3]> {
        let v = m.values();
        par::map(v.len(), |n| {
            let mut g = [0.0; 3];
            for (b, c) in self.exchange_edges(n) {
                for d in 0..3 {
                    g[d] += 2.0 * c * (v[n][d] - v[b][d]);
                }
            }
            g
        })
    }

    pub fn anisotropy_energy(&self, m: &MagnetizationField) -> Result<Density> {
        let th = self.thickness();
        let np = self.grid.n_planar();
        let mut total = Density::Finite(0.0);
        for (n, v) in m.values().iter().enumerate() {
            total = total + self.materials.anisotropy.density(th, n % np, v)?.scale(self.weights[n]);
        }
        Ok(total)
    }

    pub fn anisotropy_gradient(&self, m: &MagnetizationField) -> Vec<[f64; 3]> {
        let th = self.thickness();
        let np = self.grid.n_planar();
        let v = m.values();
        par::map(v.len(), |n| {
            self.materials.anisotropy.gradient(th, n % np, &v[n]).map(|x| x * self.weights[n])
        })
    }

    pub fn zeeman_energy(&self, t: f64, m: &MagnetizationField) -> f64 {
        let h = self.schedule.field(t);
        let v = m.values();
        -par::sum(v.len(), |n| self.weights[n] * (h[0] * v[n][0] + h[1] * v[n][1] + h[2] * v[n][2]))
    }

    pub fn zeeman_gradient(&self, t: f64) -> Vec<[f64; 3]> {
        let h = self.schedule.field(t);
        self.weights.iter().map(|w| h.map(|x| -w * x)).collect()
    }

    /// Bulk: FFT stray field at the cells. Plate: `None`.
    pub fn stray_field(&self, m: &MagnetizationField) -> Result<Option<Vec<[f64; 3]>>> {
        match &self.stray {
            Some(s) => Ok(Some(s.field(m.values())?)),
            None => Ok(None),
        }
    }

    /// Stray energy: FFT solve in the bulk, `1/2 m3^2` surrogate on plates.
    pub fn stray_energy(&self, m: &MagnetizationField) -> Result<f64> {
        match &self.stray {
            Some(s) => Ok(s.solve(m.values())?.energy),
            None => stray_energy_limit(m, &self.grid),
        }
    }

    /// Plate surrogate gradient `w m3 e3`; bulk gradient `-H / N` for a given field.
    pub fn stray_gradient(&self, m: &MagnetizationField, field: Option<&[[f64; 3]]>) -> Vec<[f64; 3]> {
        let v = m.values();
        match field {
            Some(h) => {
                let inv = 1.0 / v.len() as f64;
                h.iter().map(|x| x.map(|c| -c * inv)).collect()
            }
            None => v.iter().zip(&self.weights).map(|(m, w)| [0.0, 0.0, w * m[2]]).collect(),
        }
    }

    /// Elastic energy of given unknowns.
    pub fn elastic_energy(&self, t: f64, disp: &[f64], m: &MagnetizationField) -> f64 {
        let c = self.elastic.offset(m, self.schedule.lambda(t));
        self.elastic.energy_of_strain(&self.elastic.total_strain(disp, &c))
    }

    pub fn energy(&self, t: f64, state: &State) -> Result<EnergyBreakdown> {
        self.schedule.check_time(t)?;
        self.check_state(state)?;
        let m = &state.m;
        Ok(EnergyBreakdown::assemble(
            self.exchange_energy(m),
            self.anisotropy_energy(m)?,
            self.stray_energy(m)?,
            self.zeeman_energy(t, m),
            self.elastic_energy(t, &state.disp, m),
        ))
    }

    /// `d/dt E(t, state)` at fixed state, with one-sided rates at kinks.
    pub fn power(&self, t: f64, state: &State, side: Side) -> Result<f64> {
        self.check_state(state)?;
        let dl = self.schedule.lambda_rate(t, side);
        let dh = self.schedule.field_rate(t, side);
        let v = state.m.values();
        let zeeman = -par::sum(v.len(), |n| self.weights[n] * (dh[0] * v[n][0] + dh[1] * v[n][1] + dh[2] * v[n][2]));
        if dl == 0.0 {
            return Ok(zeeman);
        }
        let c = self.elastic.offset(&state.m, self.schedule.lambda(t));
        let s = self.elastic.stress(&self.elastic.total_strain(&state.disp, &c));
        Ok(dl * par::dot(&s, self.elastic.mode()) + zeeman)
    }
}

/// Plate energy `E_0` of a state on a single-layer grid.
pub fn energy_plate(problem: &Problem, t: f64, state: &State) -> Result<EnergyBreakdown> {
    if !problem.is_plate() {
        return Err(Error::invalid("energy_plate needs a plate problem"));
    }
    problem.energy(t, state)
}

/// Bulk energy `E_h` of a state on a rescaled grid.
pub fn energy_bulk(problem: &Problem, t: f64, state: &State) -> Result<EnergyBreakdown> {
    if problem.is_plate() {
        return Err(Error::invalid("energy_bulk needs a bulk problem"));
    }
    problem.energy(t, state)
}
