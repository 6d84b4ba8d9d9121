use serde::Serialize;

use crate::solver::TrajectoryRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceResidual {
    /// Residual of the piecewise-constant trajectory: on each step the
    /// power is integrated at the state the step started from.
    pub series: Vec<f64>,
    pub max_abs: f64,
    /// Same with the trapezoid taken through the recorded states at the
    /// step ends.
    pub nodal: Vec<f64>,
}

/// `r_k = E(t_k) + Diss[0, t_k] - E(0) - int_0^{t_k} power`, the power
/// integral by the trapezoid rule on every step with right rates at its
/// start and left rates at its end.
pub fn balance_residual(record: &TrajectoryRecord) -> BalanceResidual {
    let n = record.len();
    let mut series = Vec::with_capacity(n);
    let mut nodal = Vec::with_capacity(n);
    let (mut work, mut work_nodal) = (0.0, 0.0);
    let e0 = record.energies.first().map_or(0.0, |e| e.total);
    for k in 0..n {
        if k > 0 {
            let dt = record.times[k] - record.times[k - 1];
            work += 0.5 * dt * (record.power_right[k - 1] + record.power_end[k]);
            work_nodal += 0.5 * dt * (record.power_right[k - 1] + record.power_left[k]);
        }
        let lhs = record.energies[k].total + record.diss_cum[k] - e0;
        series.push(lhs - work);
        nodal.push(lhs - work_nodal);
    }
    let max_abs = series.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    BalanceResidual { series, max_abs, nodal }
}
