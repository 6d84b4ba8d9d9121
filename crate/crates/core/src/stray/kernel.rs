//! Cell-averaged demagnetizing tensor of uniformly magnetized boxes.

use std::f64::consts::PI;

/// Newell's auxiliary function for the diagonal entries.
fn newell_f(x: f64, y: f64, z: f64) -> f64 {
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r = (x2 + y2 + z2).sqrt();
    if r == 0.0 {
        return 0.0;
    }
    let mut s = (2.0 * x2 - y2 - z2) * r / 6.0;
    if y > 0.0 && x2 + z2 > 0.0 {
        s += 0.5 * y * (z2 - x2) * (y / (x2 + z2).sqrt()).asinh();
    }
    if z > 0.0 && x2 + y2 > 0.0 {
        s += 0.5 * z * (y2 - x2) * (z / (x2 + y2).sqrt()).asinh();
    }
    if x > 0.0 && y > 0.0 && z > 0.0 {
        s -= x * y * z * (y * z / (x * r)).atan();
    }
    s
}

/// Newell's auxiliary function for the off-diagonal entries (odd in x and y).
fn newell_g(x: f64, y: f64, z: f64) -> f64 {
    let sign = x.signum() * y.signum();
    let (x, y, z) = (x.abs(), y.abs(), z.abs());
    if x == 0.0 || y == 0.0 {
        return 0.0;
    }
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let r = (x2 + y2 + z2).sqrt();
    let mut s = -x * y * r / 3.0;
    if z > 0.0 {
        s += x * y * z * (z / (x2 + y2).sqrt()).asinh();
        s -= z * z2 / 6.0 * (x * y / (z * r)).atan();
        s -= 0.5 * z * y2 * (x * z / (y * r)).atan();
        s -= 0.5 * z * x2 * (y * z / (x * r)).atan();
    }
    s += y / 6.0 * (3.0 * z2 - y2) * (x / (y2 + z2).sqrt()).asinh();
    s += x / 6.0 * (3.0 * z2 - x2) * (y / (x2 + z2).sqrt()).asinh();
    sign * s
}

fn second_difference<F: Fn(f64, f64, f64) -> f64>(f: F, r: [f64; 3], d: [f64; 3]) -> f64 {
    const W: [f64; 3] = [-1.0, 2.0, -1.0];
    let mut s = 0.0;
    for (i, wi) in W.iter().enumerate() {
        for (j, wj) in W.iter().enumerate() {
            for (k, wk) in W.iter().enumerate() {
                let x = r[0] + (i as f64 - 1.0) * d[0];
                let y = r[1] + (j as f64 - 1.0) * d[1];
                let z = r[2] + (k as f64 - 1.0) * d[2];
                s += wi * wj * wk * f(x, y, z);
            }
        }
    }
    s
}

/// Demagnetizing tensor between two boxes of size `cell` whose centers are
/// `offset` apart, averaged over the target box. Components are ordered
/// `xx, yy, zz, xy, xz, yz`; the self term has unit trace.
pub fn demag_tensor(offset: [f64; 3], cell: [f64; 3]) -> [f64; 6] {
    let [x, y, z] = offset;
    let [dx, dy, dz] = cell;
    let c = 1.0 / (4.0 * PI * dx * dy * dz);
    [
        c * second_difference(newell_f, [x, y, z], [dx, dy, dz]),
        c * second_difference(|a, b, c| newell_f(b, a, c), [x, y, z], [dx, dy, dz]),
        c * second_difference(|a, b, c| newell_f(c, b, a), [x, y, z], [dx, dy, dz]),
        c * second_difference(newell_g, [x, y, z], [dx, dy, dz]),
        c * second_difference(|a, b, c| newell_g(a, c, b), [x, y, z], [dx, dy, dz]),
        c * second_difference(|a, b, c| newell_g(b, c, a), [x, y, z], [dx, dy, dz]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_self_term_is_one_third() {
        let n = demag_tensor([0.0; 3], [1.0, 1.0, 1.0]);
        for d in &n[..3] {
            assert!((d - 1.0 / 3.0).abs() < 1e-12, "{n:?}");
        }
        for o in &n[3..] {
            assert!(o.abs() < 1e-14);
        }
    }

    #[test]
    fn self_term_has_unit_trace() {
        let n = demag_tensor([0.0; 3], [1.0, 0.7, 0.2]);
        assert!((n[0] + n[1] + n[2] - 1.0).abs() < 1e-12);
        assert!(n[2] > n[0] && n[0] > 0.0);
    }

    #[test]
    fn far_field_is_dipolar() {
        let r = 12.0;
        let n = demag_tensor([r, 0.0, 0.0], [1.0, 1.0, 1.0]);
        // point dipole: N_xx = -2 V / (4 pi r^3)
        let dip = -2.0 / (4.0 * PI * r * r * r);
        assert!((n[0] - dip).abs() < 1e-3 * dip.abs(), "{} vs {}", n[0], dip);
    }
}
