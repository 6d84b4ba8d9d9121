use crate::error::{Error, Result};

/// Relative saturation tolerance: `| |m| - m_sat | <= TOL_SAT * m_sat`.
pub const TOL_SAT: f64 = 1e-8;

#[inline]
pub fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn check_saturated(m: &[f64; 3], m_sat: f64) -> Result<()> {
    let n = norm3(m);
    if !n.is_finite() || (n - m_sat).abs() > TOL_SAT * m_sat {
        return Err(Error::invalid(format!(
            "magnetization {m:?} has norm {n}, expected {m_sat}"
        )));
    }
    Ok(())
}

/// Stress-free strain `m (x) m - (m_sat^2 / 3) I` of a saturated magnetization.
pub fn eps_mag(m: &[f64; 3], m_sat: f64) -> Result<[[f64; 3]; 3]> {
    check_saturated(m, m_sat)?;
    let third = m_sat * m_sat / 3.0;
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = m[i] * m[j];
        }
        e[i][i] -= third;
    }
    Ok(e)
}

/// Engineering Voigt form of `eps_mag` without the saturation check.
#[inline]
pub fn eps_mag_voigt(m: &[f64; 3], m_sat: f64) -> [f64; 6] {
    let third = m_sat * m_sat / 3.0;
    [
        m[0] * m[0] - third,
        m[1] * m[1] - third,
        m[2] * m[2] - third,
        2.0 * m[1] * m[2],
        2.0 * m[0] * m[2],
        2.0 * m[0] * m[1],
    ]
}

/// Gradient with respect to `m` of `s . eps_mag_voigt(m)` for a Voigt
/// stress-like vector `s`.
#[inline]
pub fn eps_mag_voigt_pullback(m: &[f64; 3], s: &[f64; 6]) -> [f64; 3] {
    [
        2.0 * (s[0] * m[0] + s[4] * m[2] + s[5] * m[1]),
        2.0 * (s[1] * m[1] + s[3] * m[2] + s[5] * m[0]),
        2.0 * (s[2] * m[2] + s[3] * m[1] + s[4] * m[0]),
    ]
}
