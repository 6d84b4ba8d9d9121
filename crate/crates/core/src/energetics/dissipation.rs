use crate::error::{Error, Result};
use crate::fields::{Grid, MagnetizationField, Thickness};
use crate::material::DissipationParams;
use crate::par;

/// `(1/|S|) int R_p |dm_p| + R_3 |dm_3|`.
pub fn dissipation_distance(
    m1: &MagnetizationField,
    m2: &MagnetizationField,
    grid: &Grid,
    thickness: Thickness,
    params: &DissipationParams,
) -> Result<f64> {
    if !m1.matches(grid) || !m2.matches(grid) {
        return Err(Error::GridMismatch("fields do not match grid".into()));
    }
    if thickness == Thickness::Limit && !(m1.planar_only() && m2.planar_only()) {
        return Err(Error::invalid("limit dissipation needs planar fields"));
    }
    let (a, b) = (m1.values(), m2.values());
    let area = grid.area();
    Ok(par::sum(a.len(), |n| {
        let dm = [a[n][0] - b[n][0], a[n][1] - b[n][1], a[n][2] - b[n][2]];
        grid.weight(n) * params.density(thickness, &dm)
    }) / area)
}

/// Partition sum of consecutive distances (a lower bound for the total
/// variation, exact for piecewise-constant paths jumping at the nodes).
pub fn trajectory_dissipation(
    snapshots: &[MagnetizationField],
    grid: &Grid,
    thickness: Thickness,
    params: &DissipationParams,
) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(Error::invalid("no snapshots"));
    }
    snapshots
        .windows(2)
        .map(|w| dissipation_distance(&w[0], &w[1], grid, thickness, params))
        .sum()
}
