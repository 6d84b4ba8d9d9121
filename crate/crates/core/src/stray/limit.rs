use crate::error::{Error, Result};
use crate::fields::{Grid, MagnetizationField};
use crate::par;
use crate::stray::StraySolver;

/// Thin-film surrogate `(1/|S|) int_S m3^2 / 2`.
pub fn stray_energy_limit(m: &MagnetizationField, grid: &Grid) -> Result<f64> {
    if !m.planar_only() {
        return Err(Error::invalid("surrogate needs a planar magnetization"));
    }
    if m.dims()[0] != grid.nx || m.dims()[1] != grid.ny {
        return Err(Error::GridMismatch("magnetization does not match grid".into()));
    }
    let plate = grid.planar();
    let v = m.values();
    Ok(par::sum(plate.n_nodes(), |n| plate.weight(n) * 0.5 * v[n][2] * v[n][2]) / plate.area())
}

/// One row of the thickness sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrayDiagRow {
    pub h: f64,
    pub nz: usize,
    pub fft_energy: f64,
    pub surrogate: f64,
    pub gap: f64,
}

/// Layer count used when extruding a plate field to thickness `h`.
pub fn extrusion_layers(h: f64, spacing: f64, cap: usize) -> usize {
    ((h / spacing).round() as usize).clamp(2, cap.max(2))
}

/// Extrudes a planar field to each thickness and compares the FFT stray
/// energy with the surrogate.
pub fn stray_limit_diagnostic(
    m: &MagnetizationField,
    grid: &Grid,
    h_list: &[f64],
    nz_cap: usize,
) -> Result<Vec<StrayDiagRow>> {
    if h_list.is_empty() {
        return Err(Error::invalid("empty thickness list"));
    }
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("thickness list must be strictly decreasing"));
    }
    let surrogate = stray_energy_limit(m, grid)?;
    let planar = m.planar_layer();
    h_list
        .iter()
        .map(|&h| {
            let nz = extrusion_layers(h, grid.spacing(), nz_cap);
            let bulk = grid.with_layers(nz, h)?;
            let mb = planar.extrude(&bulk)?;
            let fft_energy = StraySolver::new(&bulk)?.solve(mb.values())?.energy;
            Ok(StrayDiagRow { h, nz, fft_energy, surrogate, gap: (fft_energy - surrogate).abs() })
        })
        .collect()
}
