//! Rotation and coordinate kernel.
//!
//! Posture uses the yaw-pitch-roll composition `Rz(yaw) * Ry(pitch) * Rx(roll)`.
//! Directions use azimuth measured from +x toward +y and elevation measured
//! from the xy-plane toward +z.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Posture matrix for roll `omega`, pitch `gamma` and yaw `phi` (radians).
///
/// Maps body-frame vectors into the world frame. Written out entry by entry;
/// the factored product is kept as a regression test.
pub fn posture_matrix(omega: f64, gamma: f64, phi: f64) -> Mat3 {
    let (sw, cw) = omega.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Mat3::new(
        cp * cg,
        cp * sg * sw - sp * cw,
        cp * sg * cw + sp * sw,
        sp * cg,
        sp * sg * sw + cp * cw,
        sp * sg * cw - cp * sw,
        -sg,
        cg * sw,
        cg * cw,
    )
}

/// Unit direction for azimuth `alpha` and elevation `beta`.
pub fn angle_unit_vector(alpha: f64, beta: f64) -> Result<Vec3> {
    if !beta.is_finite() || !(-FRAC_PI_2..=FRAC_PI_2).contains(&beta) {
        return Err(Error::domain(
            "angle_unit_vector",
            format!("elevation {beta} outside [-pi/2, pi/2]"),
        ));
    }
    if !alpha.is_finite() {
        return Err(Error::domain("angle_unit_vector", "azimuth is not finite"));
    }
    let (sb, cb) = beta.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    Ok(Vec3::new(cb * ca, cb * sa, sb))
}

/// Azimuth/elevation of a non-zero vector: `atan2(y, x)` and `asin(z / |v|)`.
///
/// The elevation is evaluated as `atan2(z, hypot(x, y))`, which equals the
/// arcsine form but keeps full precision near the poles. On the poles the
/// azimuth is reported as 0.
pub fn vector_angles(v: &Vec3) -> Option<(f64, f64)> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    let beta = v.z.atan2(v.x.hypot(v.y));
    let alpha = if v.x == 0.0 && v.y == 0.0 {
        0.0
    } else {
        v.y.atan2(v.x)
    };
    Some((alpha, beta))
}

/// Rotation taking the array reference x-axis onto the direction of travel.
///
/// Identity for a stationary terminal.
pub fn velocity_rotation_matrix(v: &Vec3) -> Mat3 {
    match vector_angles(v) {
        Some((azimuth, elevation)) => rot_z(azimuth) * rot_y(-elevation),
        None => Mat3::identity(),
    }
}

/// Wraps into `[0, 2pi)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps into `(-pi, pi]`.
pub fn wrap_pi(angle: f64) -> f64 {
    let r = wrap_two_pi(angle);
    if r > PI {
        r - TAU
    } else {
        r
    }
}
