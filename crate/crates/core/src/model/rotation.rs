//! Axis-angle helpers and projection of arbitrary 3x3 matrices onto SO(3).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Rotation matrix for an axis-angle vector (direction = axis, norm = angle in radians).
pub fn axis_angle_to_matrix(aa: [f64; 3]) -> Matrix3<f64> {
    Rotation3::from_scaled_axis(Vector3::from(aa)).into_inner()
}

/// Axis-angle vector of a proper rotation matrix, angle in `[0, π]`.
pub fn matrix_to_axis_angle(m: &Matrix3<f64>) -> [f64; 3] {
    let v = Rotation3::from_matrix_unchecked(*m).scaled_axis();
    [v.x, v.y, v.z]
}

/// Rewrite an axis-angle vector so that its magnitude lies in `[0, π]`
/// while describing the same rotation.
pub fn canonicalize_axis_angle(aa: [f64; 3]) -> Result<[f64; 3]> {
    if aa.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidData(format!(
            "non-finite axis-angle component in {aa:?}"
        )));
    }
    let angle = (aa[0] * aa[0] + aa[1] * aa[1] + aa[2] * aa[2]).sqrt();
    if angle <= PI {
        return Ok(aa);
    }
    let axis = [aa[0] / angle, aa[1] / angle, aa[2] / angle];
    let mut wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped -= 2.0 * PI;
    }
    Ok([axis[0] * wrapped, axis[1] * wrapped, axis[2] * wrapped])
}

/// Nearest special-orthogonal matrix to `m` in Frobenius norm.
///
/// Computes `U diag(1, 1, det(U Vᵀ)) Vᵀ` from the singular-value factorization,
/// with the sign correction applied on the smallest singular direction.
pub fn orthogonalize_rot9(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    if m.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateInput("SVD did not converge".into())),
    };
    let s = svd.singular_values;
    let mut sorted = [s[0], s[1], s[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted[0] < 1e-9 || sorted[1] < 1e-9 * sorted[0].max(1.0) {
        return Err(Error::DegenerateInput(format!(
            "matrix rank below 2 (singular values {sorted:?})"
        )));
    }
    let smallest = (0..3)
        .min_by(|&a, &b| s[a].total_cmp(&s[b]))
        .expect("three singular values");
    let det = (u * v_t).determinant();
    let mut d = Matrix3::identity();
    d[(smallest, smallest)] = det.signum();
    Ok(u * d * v_t)
}
