//! Per-path kernels: delays, powers, ramps, posture fading, angles and phases.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scenario::rotation::{vector_angles, wrap_two_pi, Mat3, Vec3};

pub type PolarisationMatrix = Matrix2<Complex64>;

/// Line-of-sight delay between element positions `tx + e_p` and `rx + e_q`.
pub fn los_delay(tx: &Vec3, rx: &Vec3, e_p: &Vec3, e_q: &Vec3, wave_speed: f64) -> Result<f64> {
    let d = ((tx + e_p) - (rx + e_q)).norm();
    if d == 0.0 {
        return Err(Error::degenerate("los_delay", "transmit and receive elements coincide"));
    }
    Ok(d / wave_speed)
}

/// NLoS delay as the sum of the near-UAV detour, the free-space run down to
/// height `xi_ngs` and the two near-ground legs.
///
/// `elevation` is the elevation of the aerial terminal seen from the ground
/// terminal (positive when the UAV is above the horizon); `height` is the
/// antenna height above ground.
#[allow(clippy::too_many_arguments)]
pub fn nlos_delay(
    detour: f64,
    height: f64,
    xi_ngs: f64,
    elevation: f64,
    a: &Vec3,
    b: &Vec3,
    wave_speed: f64,
) -> Result<f64> {
    let s = elevation.sin();
    if !(s > 0.0) {
        return Err(Error::degenerate(
            "nlos_delay",
            format!("elevation {elevation} rad puts the UAV on or below the horizon"),
        ));
    }
    let (na, nb) = (a.norm(), b.norm());
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::degenerate("nlos_delay", "near-ground leg has zero length"));
    }
    Ok((detour + (height - xi_ngs) / s + na + nb) / wave_speed)
}

/// Near-ground legs of one sub-path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgsVectors {
    /// From the receive element to the last-bounce scatterer.
    pub a: Vec3,
    /// From the (element-shifted) entry point of the near-ground segment to the scatterer.
    pub b: Vec3,
}

impl NgsVectors {
    pub fn length(&self) -> f64 {
        self.a.norm() + self.b.norm()
    }
}

/// Drifts the near-ground legs inside a stationary segment.
///
/// `a0` points from the receive array centre to the scatterer at the segment
/// start `t0`; `e_q` is the receive element's displacement from that centre
/// (terminal motion since `t0` plus the rotated array offset); `e_p` is the
/// rotated transmit element offset; `entry` is where the link enters the
/// near-ground segment and `rx0` the receive array centre at `t0`.
pub fn update_ngs_geometry(a0: &Vec3, e_p: &Vec3, e_q: &Vec3, entry: &Vec3, rx0: &Vec3) -> Result<NgsVectors> {
    let a = a0 - e_q;
    let b = (rx0 + a0) - (entry + e_p);
    if a.norm() < 1e-12 || b.norm() < 1e-12 {
        return Err(Error::degenerate("update_ngs_geometry", "a near-ground leg collapsed to zero length"));
    }
    Ok(NgsVectors { a, b })
}

/// Distance from the receiver to a last-bounce scatterer in direction
/// `arrival` such that the near-ground detour exceeds the direct run from the
/// entry point `entry_offset` (entry minus receiver) by `excess` metres.
pub fn scatterer_distance(entry_offset: &Vec3, arrival: &Vec3, excess: f64) -> Result<f64> {
    let d = entry_offset.norm();
    if !(d > 0.0) || !(excess > 0.0) {
        return Err(Error::degenerate("scatterer_distance", "need a non-zero entry offset and positive excess"));
    }
    let cos = (entry_offset.dot(arrival) / (d * arrival.norm())).clamp(-1.0, 1.0);
    Ok((2.0 * d * excess + excess * excess) / (2.0 * (d * (1.0 - cos) + excess)))
}

/// Normalised powers `exp(-tau (r - 1) / (r sigma)) 10^(-SF / 10)`.
///
/// `delays` are measured from any common reference (the normalisation
/// cancels it); passing excess delays avoids needless underflow.
pub fn path_powers(delays: &[f64], delay_scalar: f64, delay_spread: f64, shadow_db: &[f64]) -> Result<Vec<f64>> {
    if !(delay_scalar > 1.0) {
        return Err(Error::domain("path_powers", "delay scalar must exceed 1"));
    }
    if !(delay_spread > 0.0) {
        return Err(Error::domain("path_powers", "delay spread must be positive"));
    }
    if delays.len() != shadow_db.len() {
        return Err(Error::domain("path_powers", "one shadowing value per delay is required"));
    }
    let rate = (delay_scalar - 1.0) / (delay_scalar * delay_spread);
    let raw: Vec<f64> = delays
        .iter()
        .zip(shadow_db)
        .map(|(tau, sf)| (-tau * rate).exp() * 10f64.powf(-sf / 10.0))
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::PowerUnderflow);
    }
    Ok(raw.into_iter().map(|p| p / total).collect())
}

/// Squared-sine ramp `sin^2(pi w / 2)`.
pub fn ramp_weight(w: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::domain("ramp_weight", format!("{w} outside [0, 1]")));
    }
    Ok((0.5 * PI * w).sin().powi(2))
}

/// Single-axis posture fading factor for rotation `angle` and projected
/// half-power beam width `hpbw` in `[0, pi]`.
///
/// 1 inside the forward lobe, a raised-cosine roll-off across
/// `((pi - hpbw)/2, (pi + hpbw)/2)`, 0 around the back direction, mirrored
/// about `pi`.
pub fn pvf_factor(angle: f64, hpbw: f64) -> f64 {
    let mut v = wrap_two_pi(angle);
    if v > PI {
        v = TAU - v;
    }
    let lo = 0.5 * (PI - hpbw);
    let hi = 0.5 * (PI + hpbw);
    if v <= lo {
        1.0
    } else if v < hi {
        (PI / (2.0 * hpbw) * v + PI * (hpbw - PI) / (4.0 * hpbw)).cos()
    } else {
        0.0
    }
}

/// Posture fading coefficient: product of the roll, pitch and yaw factors.
pub fn pvf_coefficient(roll: f64, pitch: f64, yaw: f64, hpbw: &[f64; 3]) -> Result<f64> {
    if hpbw.iter().any(|h| !(0.0..=PI).contains(h)) {
        return Err(Error::domain("pvf_coefficient", "beam-width projections must lie in [0, pi]"));
    }
    Ok(pvf_factor(roll, hpbw[0]) * pvf_factor(pitch, hpbw[1]) * pvf_factor(yaw, hpbw[2]))
}

/// Line-of-sight departure and arrival angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosAngles {
    pub departure_azimuth: f64,
    pub departure_elevation: f64,
    pub arrival_azimuth: f64,
    pub arrival_elevation: f64,
}

/// Departure angles of `rx - tx`; arrival angles are the reverse direction.
pub fn los_path_angles(tx: &Vec3, rx: &Vec3) -> Result<LosAngles> {
    let (az, el) =
        vector_angles(&(rx - tx)).ok_or_else(|| Error::degenerate("los_path_angles", "terminals coincide"))?;
    Ok(LosAngles {
        departure_azimuth: az,
        departure_elevation: el,
        arrival_azimuth: wrap_two_pi(az + PI),
        arrival_elevation: -el,
    })
}

fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

/// LoS polarisation matrix `diag(e^{j phi_VV}, e^{j phi_HH})`.
pub fn draw_los_phases<R: Rng + ?Sized>(rng: &mut R) -> PolarisationMatrix {
    let vv = unit_phase(rng);
    let hh = unit_phase(rng);
    PolarisationMatrix::new(vv, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), hh)
}

/// NLoS polarisation matrix with co-polar unit entries and cross-polar
/// entries of magnitude `kappa^(-1/2)` (`kappa` linear).
pub fn draw_nlos_phases<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> Result<PolarisationMatrix> {
    if !(kappa > 0.0) {
        return Err(Error::domain("draw_nlos_phases", "cross-polar ratio must be positive"));
    }
    let x = kappa.powf(-0.5);
    let vv = unit_phase(rng);
    let vh = unit_phase(rng) * x;
    let hv = unit_phase(rng) * x;
    let hh = unit_phase(rng);
    Ok(PolarisationMatrix::new(vv, vh, hv, hh))
}

/// Propagation phase `2 pi L / lambda` of a path of length `L`.
pub fn doppler_phase(length: f64, wavelength: f64) -> f64 {
    TAU * length / wavelength
}

/// Plane-wave array phase `2 pi / lambda * r . (R s)`.
pub fn antenna_phase(offset: &Vec3, rotation: &Mat3, direction: &Vec3, wavelength: f64) -> f64 {
    TAU / wavelength * offset.dot(&(rotation * direction))
}

/// `F_tx^T M F_rx` for `(F_V, F_H)` pairs.
pub fn polarised_gain(f_tx: (f64, f64), m: &PolarisationMatrix, f_rx: (f64, f64)) -> Complex64 {
    let (tv, th) = f_tx;
    let (rv, rh) = f_rx;
    m[(0, 0)] * (tv * rv) + m[(0, 1)] * (tv * rh) + m[(1, 0)] * (th * rv) + m[(1, 1)] * (th * rh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::rotation::{angle_unit_vector, posture_matrix};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    const C: f64 = 299_792_458.0;

    #[test]
    fn los_delay_examples() {
        let tx = Vec3::new(0.0, 0.0, 150.0);
        let z = Vec3::zeros();
        let d = los_delay(&tx, &z, &z, &z, C).unwrap();
        assert!((d - 150.0 / C).abs() < 1e-22);
        assert!((d - 5.0035e-7).abs() < 1e-10);
        let shift = Vec3::new(3.0, -7.0, 2.0);
        let moved = los_delay(&(tx + shift), &shift, &z, &z, C).unwrap();
        assert!((moved - d).abs() < 1e-20);
        assert_eq!(los_delay(&z, &tx, &z, &z, C).unwrap(), d);
        assert!(los_delay(&z, &z, &z, &z, C).is_err());
    }

    #[test]
    fn nlos_delay_examples() {
        let a = Vec3::new(10.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 10.0, 0.0);
        let t = nlos_delay(0.0, 145.0, 15.0, FRAC_PI_2, &a, &b, C).unwrap();
        assert!((t - 150.0 / C).abs() < 1e-20);
        let t30 = nlos_delay(0.0, 145.0, 15.0, FRAC_PI_6, &a, &b, C).unwrap();
        assert!(((t30 - 20.0 / C) - 2.0 * (t - 20.0 / C)).abs() < 1e-18);
        assert!(nlos_delay(0.0, 145.0, 15.0, 0.0, &a, &b, C).is_err());
        assert!(nlos_delay(0.0, 145.0, 15.0, 1.0, &Vec3::zeros(), &b, C).is_err());
    }

    #[test]
    fn ngs_update_static_and_bounded() {
        let a0 = Vec3::new(30.0, 5.0, 2.0);
        let rx0 = Vec3::new(0.0, 0.0, 1.5);
        let entry = Vec3::new(5.0, 5.0, 15.0);
        let z = Vec3::zeros();
        let s = update_ngs_geometry(&a0, &z, &z, &entry, &rx0).unwrap();
        assert_eq!(s.a, a0);
        assert_eq!(s.b, rx0 + a0 - entry);
        let half = 0.0625;
        let moved = update_ngs_geometry(&a0, &z, &Vec3::new(half, 0.0, 0.0), &entry, &rx0).unwrap();
        assert!((moved.a.norm() - a0.norm()).abs() <= half + 1e-12);
        assert_eq!(moved.b, s.b);
    }

    #[test]
    fn scatterer_distance_hits_requested_excess() {
        let entry = Vec3::new(20.0, 5.0, 13.5);
        for (dir, excess) in [
            (angle_unit_vector(0.3, 0.1).unwrap(), 5.0),
            (angle_unit_vector(2.9, 0.4).unwrap(), 120.0),
            (entry.normalize(), 0.01),
        ] {
            let rho = scatterer_distance(&entry, &dir, excess).unwrap();
            let detour = rho + (dir * rho - entry).norm();
            assert!((detour - entry.norm() - excess).abs() < 1e-9);
        }
    }

    #[test]
    fn power_examples() {
        let p = path_powers(&[1e-7; 8], 2.3, 0.3e-6, &[0.0; 8]).unwrap();
        assert!(p.iter().all(|x| (x - 0.125).abs() < 1e-15));
        let p = path_powers(&[0.0, 1e-7], 2.3, 0.3e-6, &[0.0, 0.0]).unwrap();
        assert!(p[0] > p[1]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(path_powers(&[0.0], 1.0, 0.3e-6, &[0.0]).is_err());
        assert!(matches!(path_powers(&[1.0, 1.0], 2.3, 1e-9, &[0.0, 0.0]), Err(Error::PowerUnderflow)));
    }

    #[test]
    fn ramp_examples() {
        assert_eq!(ramp_weight(0.0).unwrap(), 0.0);
        assert!((ramp_weight(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((ramp_weight(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(ramp_weight(1.5).is_err());
        // flat at both ends
        let h = 1e-6;
        assert!(ramp_weight(h).unwrap() / h < 1e-5);
        assert!((1.0 - ramp_weight(1.0 - h).unwrap()) / h < 1e-5);
    }

    #[test]
    fn pvf_examples() {
        let th = [FRAC_PI_2; 3];
        assert_eq!(pvf_coefficient(0.0, 0.0, 0.0, &th).unwrap(), 1.0);
        assert_eq!(pvf_coefficient(0.0, PI, 0.0, &th).unwrap(), 0.0);
        let v = pvf_coefficient(0.0, FRAC_PI_2, 0.0, &th).unwrap();
        assert!((v - FRAC_PI_4.cos()).abs() < 1e-12);
        assert!(pvf_coefficient(0.0, 0.0, 0.0, &[-0.1, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pvf_is_continuous_at_region_edges() {
        for th in [FRAC_PI_6, FRAC_PI_2, PI] {
            for edge in [(PI - th) / 2.0, (PI + th) / 2.0, (3.0 * PI - th) / 2.0, (3.0 * PI + th) / 2.0] {
                let eps = 1e-12;
                let jump = (pvf_factor(edge - eps, th) - pvf_factor(edge + eps, th)).abs();
                assert!(jump < 1e-9, "theta {th} edge {edge} jump {jump}");
            }
        }
    }

    #[test]
    fn los_angle_examples() {
        let a = los_path_angles(&Vec3::new(0.0, 0.0, 100.0), &Vec3::zeros()).unwrap();
        assert!((a.departure_elevation + FRAC_PI_2).abs() < 1e-15);
        assert!((a.arrival_elevation - FRAC_PI_2).abs() < 1e-15);
        let a = los_path_angles(&Vec3::zeros(), &Vec3::x()).unwrap();
        assert_eq!(a.departure_azimuth, 0.0);
        assert!((a.arrival_azimuth - PI).abs() < 1e-15);
        assert!(los_path_angles(&Vec3::x(), &Vec3::x()).is_err());
    }

    #[test]
    fn los_angle_reciprocity() {
        let mut rng = crate::rng::substream(5, 0);
        for _ in 0..1000 {
            let tx = Vec3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(0.0..300.0));
            let rx = Vec3::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0), rng.random_range(0.0..3.0));
            let a = los_path_angles(&tx, &rx).unwrap();
            let back = los_path_angles(&rx, &tx).unwrap();
            assert!((wrap_two_pi(a.departure_azimuth + PI) - a.arrival_azimuth).abs() < 1e-12);
            assert!((a.arrival_elevation + a.departure_elevation).abs() < 1e-12);
            assert!((back.departure_elevation - a.arrival_elevation).abs() < 1e-12);
            let d = (back.departure_azimuth - a.arrival_azimuth).rem_euclid(TAU);
            assert!(d < 1e-12 || TAU - d < 1e-12);
        }
    }

    #[test]
    fn polarisation_matrices() {
        let mut rng = crate::rng::substream(8, 0);
        let los = draw_los_phases(&mut rng);
        assert!((los[(0, 0)].norm() - 1.0).abs() < 1e-15 && los[(0, 1)].norm() == 0.0);
        let n = draw_nlos_phases(&mut rng, 1e12).unwrap();
        assert!(n[(0, 1)].norm() < 1e-5 && (n[(1, 1)].norm() - 1.0).abs() < 1e-15);
        let n = draw_nlos_phases(&mut rng, 4.0).unwrap();
        assert!((n[(1, 0)].norm() - 0.5).abs() < 1e-15);
        assert!(draw_nlos_phases(&mut rng, 0.0).is_err());
        let a = draw_nlos_phases(&mut crate::rng::substream(3, 3), 6.3).unwrap();
        let b = draw_nlos_phases(&mut crate::rng::substream(3, 3), 6.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phase_examples() {
        assert!((doppler_phase(0.125, 0.125) - TAU).abs() < 1e-15);
        let lambda = 0.125;
        let s = Vec3::x();
        assert_eq!(antenna_phase(&Vec3::zeros(), &Mat3::identity(), &s, lambda), 0.0);
        let r = s * lambda / 2.0;
        assert!((antenna_phase(&r, &Mat3::identity(), &s, lambda) - PI).abs() < 1e-12);
        let flip = posture_matrix(0.0, 0.0, PI);
        assert!((antenna_phase(&r, &flip, &s, lambda) + PI).abs() < 1e-12);
    }

    #[test]
    fn exact_element_phase_matches_plane_wave_term() {
        // far-field: moving an element by r shortens the path by r . s
        let lambda = 0.125;
        let far = Vec3::new(3000.0, 1000.0, -1500.0);
        let s = far.normalize();
        let r = Vec3::new(0.03125, 0.0, 0.0);
        let rot = posture_matrix(0.2, -0.1, 0.7);
        let exact = doppler_phase(far.norm(), lambda) - doppler_phase((far - rot * r).norm(), lambda);
        let plane = antenna_phase(&r, &rot.transpose(), &s, lambda);
        assert!((exact - plane).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn pvf_bounded_and_smooth(a in -10.0f64..10.0, th in 0.01f64..PI) {
            let v = pvf_factor(a, th);
            prop_assert!((0.0..=1.0).contains(&v));
            let step = (pvf_factor(a + 1e-6, th) - v).abs();
            prop_assert!(step < 1e-4);
        }
    }
}
