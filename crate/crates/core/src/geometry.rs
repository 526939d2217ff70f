//! Spherical and chord geometry on the constellation sphere.
//!
//! Everything is computed on unit 3-vectors internally; spherical
//! coordinates only appear at the API boundary.

use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::ops::{Add, Mul, Neg, Sub};

use libm::{acos, asin, atan2, cos, fabs, sin, sqrt};

use crate::{Error, Result};

/// Dome angles above `PI - ANTIPODAL_TOLERANCE` have no unique shortest arc.
pub const ANTIPODAL_TOLERANCE: f64 = 1e-9;

/// Relative tolerance used when checking that two points share a radius.
const RADIUS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    /// Returns `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > 1e-300 && n.is_finite() {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    /// Angle between two vectors in `[0, PI]`, accurate at both ends of the range.
    pub fn angle_to(self, other: Self) -> f64 {
        atan2(self.cross(other).norm(), self.dot(other))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A position on the constellation sphere: radial distance (km), polar angle
/// `theta` in `[0, PI]` and azimuth `phi` in `[0, TAU)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpherePoint {
    r: f64,
    theta: f64,
    phi: f64,
}

impl SpherePoint {
    /// Builds a point, normalizing `phi` into `[0, TAU)`.
    pub fn new(r: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidInput("radius must be positive and finite"));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidInput("polar angle must lie in [0, pi]"));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidInput("azimuth must be finite"));
        }
        Ok(Self { r, theta, phi: normalize_azimuth(phi) })
    }

    /// Point at radius `r` in the direction of `v` (need not be unit length).
    pub fn from_direction(r: f64, v: Vec3) -> Result<Self> {
        let u = v.normalized().ok_or(Error::InvalidInput("zero direction vector"))?;
        let theta = acos(u.z.clamp(-1.0, 1.0));
        let phi = atan2(u.y, u.x);
        Self::new(r, theta, phi)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit(&self) -> Vec3 {
        let s = sin(self.theta);
        Vec3::new(s * cos(self.phi), s * sin(self.phi), cos(self.theta))
    }

    pub fn to_cartesian(&self) -> Vec3 {
        self.unit() * self.r
    }
}

fn normalize_azimuth(phi: f64) -> f64 {
    let mut p = phi % TAU;
    if p < 0.0 {
        p += TAU;
    }
    // `-tiny % TAU + TAU` rounds to TAU.
    if p >= TAU {
        p = 0.0;
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhysicalConstants {
    pub r_earth_km: f64,
    /// Propagation speed in km/ms.
    pub c_km_per_ms: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { r_earth_km: 6371.0, c_km_per_ms: 300.0 }
    }
}

impl PhysicalConstants {
    pub fn new(r_earth_km: f64, c_km_per_ms: f64) -> Result<Self> {
        if !(r_earth_km > 0.0 && r_earth_km.is_finite()) {
            return Err(Error::InvalidInput("earth radius must be positive"));
        }
        if !(c_km_per_ms > 0.0 && c_km_per_ms.is_finite()) {
            return Err(Error::InvalidInput("propagation speed must be positive"));
        }
        Ok(Self { r_earth_km, c_km_per_ms })
    }
}

fn check_same_radius(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    let scale = a.r.max(b.r);
    if fabs(a.r - b.r) > RADIUS_TOLERANCE * scale {
        return Err(Error::InvalidInput("points lie on spheres of different radius"));
    }
    Ok(a.r)
}

/// Straight-line distance between two points on the same sphere.
pub fn chord_distance(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    let r = check_same_radius(a, b)?;
    Ok(r * (a.unit() - b.unit()).norm())
}

/// Central angle at the sphere's center between `a` and `b`, in `[0, PI]`.
pub fn dome_angle(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    check_same_radius(a, b)?;
    Ok(a.unit().angle_to(b.unit()))
}

/// Chord length on a sphere of radius `r` subtending dome angle `angle`.
pub fn chord_from_dome_angle(r: f64, angle: f64) -> f64 {
    2.0 * r * sin(0.5 * angle)
}

/// Dome angle subtended by a chord of length `chord` on a sphere of radius `r`.
pub fn dome_angle_from_chord(r: f64, chord: f64) -> f64 {
    2.0 * asin((chord / (2.0 * r)).clamp(0.0, 1.0))
}

/// Point a fraction `t` of the way along the shortest arc from `a` to `b`.
pub fn slerp(a: &SpherePoint, b: &SpherePoint, t: f64) -> Result<SpherePoint> {
    let r = check_same_radius(a, b)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput("interpolation fraction must lie in [0, 1]"));
    }
    let (ua, ub) = (a.unit(), b.unit());
    if ua.angle_to(ub) == 0.0 {
        return Ok(*a);
    }
    if t == 0.0 {
        return Ok(*a);
    }
    if t == 1.0 {
        return Ok(*b);
    }
    let arc = GreatArc::between(ua, ub)?;
    SpherePoint::from_direction(r, arc.point_at(t))
}

/// Angular distance from `p` to the great circle through `a` and `b`, in `[0, PI/2]`.
pub fn deflection_angle(p: &SpherePoint, a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    check_same_radius(a, b)?;
    let arc = GreatArc::between(a.unit(), b.unit())?;
    Ok(arc.deflection(p.unit()))
}

/// Longest chord between two points at radius `r` that clears a sphere of
/// radius `r_earth`.
pub fn los_chord_limit(r: f64, r_earth: f64) -> Result<f64> {
    if !(r_earth >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput("radii must be finite and non-negative"));
    }
    if r < r_earth {
        return Err(Error::InvalidInput("orbit radius below earth radius"));
    }
    Ok(2.0 * sqrt(r * r - r_earth * r_earth))
}

/// An oriented great-circle arc on the unit sphere.
///
/// `pole` is the unit normal of the circle's plane, oriented so that the arc
/// runs counter-clockwise about it from `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreatArc {
    start: Vec3,
    pole: Vec3,
    angle: f64,
}

impl GreatArc {
    /// Shortest arc between two unit vectors.
    pub fn between(a: Vec3, b: Vec3) -> Result<Self> {
        let angle = a.angle_to(b);
        if angle > PI - ANTIPODAL_TOLERANCE || angle == 0.0 {
            return Err(Error::DegenerateArc);
        }
        let pole = a.cross(b).normalized().ok_or(Error::DegenerateArc)?;
        Ok(Self { start: a, pole, angle })
    }

    /// Arc from `a` to `b` on the great circle with normal `pole`.
    ///
    /// Needed for antipodal endpoints, where the circle is a free choice.
    /// `pole` is projected to be exactly orthogonal to `a`.
    pub fn with_pole(a: Vec3, b: Vec3, pole: Vec3) -> Result<Self> {
        let pole = (pole - a * pole.dot(a)).normalized().ok_or(Error::DegenerateArc)?;
        if fabs(pole.dot(b)) > 1e-6 {
            return Err(Error::InvalidInput("pole is not orthogonal to the arc endpoints"));
        }
        let forward = pole.cross(a);
        let angle = atan2(forward.dot(b), a.dot(b));
        let angle = if angle < 0.0 { angle + TAU } else { angle };
        Ok(Self { start: a, pole, angle })
    }

    pub fn start(&self) -> Vec3 {
        self.start
    }

    pub fn pole(&self) -> Vec3 {
        self.pole
    }

    /// Arc length in radians.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// Unit vector a fraction `t` along the arc.
    pub fn point_at(&self, t: f64) -> Vec3 {
        let s = t * self.angle;
        let forward = self.pole.cross(self.start);
        self.start * cos(s) + forward * sin(s)
    }

    /// Angular distance from `p` to the plane of the great circle.
    pub fn deflection(&self, p: Vec3) -> f64 {
        let p = p.normalized().unwrap_or(p);
        // |PI/2 - angle(p, pole)|
        fabs(FRAC_PI_2 - p.angle_to(self.pole))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn pt(theta: f64, phi: f64) -> SpherePoint {
        SpherePoint::new(1.0, theta, phi).unwrap()
    }

    #[test]
    fn chord_examples() {
        let a = pt(0.7, 1.3);
        assert_eq!(chord_distance(&a, &a).unwrap(), 0.0);
        let n = SpherePoint::new(6921.0, 0.0, 0.0).unwrap();
        let s = SpherePoint::new(6921.0, PI, 0.0).unwrap();
        assert!((chord_distance(&n, &s).unwrap() - 2.0 * 6921.0).abs() < 1e-9);
        let d = chord_distance(&pt(FRAC_PI_2, 0.0), &pt(FRAC_PI_2, FRAC_PI_2)).unwrap();
        assert!((d - core::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn chord_matches_spherical_formula() {
        let (a, b) = (pt(0.4, 0.2), pt(2.1, 4.0));
        let direct = sqrt(2.0 * (1.0 - cos(a.theta) * cos(b.theta) - sin(a.theta) * sin(b.theta) * cos(a.phi - b.phi)));
        assert!((chord_distance(&a, &b).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn mismatched_radius_is_rejected() {
        let a = SpherePoint::new(1.0, 0.3, 0.0).unwrap();
        let b = SpherePoint::new(2.0, 0.3, 0.0).unwrap();
        assert!(matches!(chord_distance(&a, &b), Err(Error::InvalidInput(_))));
        assert!(dome_angle(&a, &b).is_err());
    }

    #[test]
    fn dome_angle_examples() {
        let a = pt(1.0, 2.0);
        assert_eq!(dome_angle(&a, &a).unwrap(), 0.0);
        let anti = SpherePoint::from_direction(1.0, -a.unit()).unwrap();
        assert!((dome_angle(&a, &anti).unwrap() - PI).abs() < 1e-12);
        // chord == r  ->  pi/3
        let b = pt(FRAC_PI_2, 0.0);
        let c = pt(FRAC_PI_2, PI / 3.0);
        assert!((chord_distance(&b, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!((dome_angle(&b, &c).unwrap() - PI / 3.0).abs() < 1e-12);
        assert!((dome_angle_from_chord(1.0, 1.0) - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn azimuth_is_normalized() {
        let p = SpherePoint::new(1.0, 1.0, -FRAC_PI_2).unwrap();
        assert!((p.phi() - 1.5 * PI).abs() < 1e-12);
        let q = SpherePoint::new(1.0, 1.0, 5.0 * PI).unwrap();
        assert!((q.phi() - PI).abs() < 1e-12);
        assert!(SpherePoint::new(1.0, -0.1, 0.0).is_err());
        assert!(SpherePoint::new(0.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn slerp_endpoints_and_midpoint() {
        let (a, b) = (pt(0.3, 0.1), pt(1.9, 2.5));
        assert_eq!(slerp(&a, &b, 0.0).unwrap(), a);
        assert_eq!(slerp(&a, &b, 1.0).unwrap(), b);
        let m = slerp(&a, &b, 0.5).unwrap();
        let (da, db) = (dome_angle(&a, &m).unwrap(), dome_angle(&m, &b).unwrap());
        assert!((da - db).abs() < 1e-10);
    }

    #[test]
    fn slerp_rejects_antipodal() {
        let a = pt(0.8, 0.4);
        let anti = SpherePoint::from_direction(1.0, -a.unit()).unwrap();
        assert_eq!(slerp(&a, &anti, 0.5), Err(Error::DegenerateArc));
        assert_eq!(deflection_angle(&a, &a, &anti), Err(Error::DegenerateArc));
    }

    /// Relay targets in the frame where both endpoints share a polar angle and
    /// sit at azimuths 0 and PI: polar angle `theta0 * |2i/n - 1|`, azimuth 0 on
    /// the first half of the route and PI on the second.
    #[test]
    fn slerp_matches_canonical_frame_relays() {
        for &theta0 in &[0.05, 0.4, 1.0, 1.5] {
            let a = pt(theta0, 0.0);
            let b = pt(theta0, PI);
            for n in 2..=25usize {
                for i in 0..=n {
                    let t = i as f64 / n as f64;
                    let polar = theta0 * fabs(2.0 * t - 1.0);
                    let azimuth = if 2 * i <= n { 0.0 } else { PI };
                    let expected = pt(polar, azimuth).unit();
                    let got = slerp(&a, &b, t).unwrap().unit();
                    assert!(expected.angle_to(got) < 1e-9, "theta0={theta0} n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn deflection_examples() {
        let (a, b) = (pt(FRAC_PI_2, 0.0), pt(FRAC_PI_2, 1.0));
        let on_arc = pt(FRAC_PI_2, 0.5);
        assert!(deflection_angle(&on_arc, &a, &b).unwrap() < 1e-12);
        let pole = pt(0.0, 0.0);
        assert!((deflection_angle(&pole, &a, &b).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn deflection_matches_dense_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (a, b) = (pt(0.9, 0.2), pt(2.0, 1.7));
        let circle = GreatArc::between(a.unit(), b.unit()).unwrap();
        let full = GreatArc { angle: TAU, ..circle };
        let samples: Vec<Vec3> = (0..100_000).map(|k| full.point_at(k as f64 / 100_000.0)).collect();
        for _ in 0..20 {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let p = pt(acos(z), rng.gen_range(0.0..TAU));
            let brute = samples.iter().map(|s| p.unit().angle_to(*s)).fold(f64::INFINITY, f64::min);
            let d = deflection_angle(&p, &a, &b).unwrap();
            assert!((d - brute).abs() < 1e-4, "{d} vs {brute}");
        }
    }

    #[test]
    fn los_limit_examples() {
        assert_eq!(los_chord_limit(6371.0, 6371.0).unwrap(), 0.0);
        let d = los_chord_limit(6921.0, 6371.0).unwrap();
        assert!((d - 5407.6).abs() < 0.05, "{d}");
        assert_eq!(los_chord_limit(7000.0, 0.0).unwrap(), 14000.0);
        assert!(los_chord_limit(6000.0, 6371.0).is_err());
    }

    #[test]
    fn with_pole_handles_antipodes() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let arc = GreatArc::with_pole(a, -a, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((arc.angle() - PI).abs() < 1e-12);
        let mid = arc.point_at(0.5);
        assert!(mid.angle_to(Vec3::new(0.0, 1.0, 0.0)) < 1e-12);
        assert!(arc.point_at(1.0).angle_to(-a) < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = SpherePoint> {
        (-1.0f64..1.0, 0.0f64..TAU).prop_map(|(z, phi)| pt(acos(z), phi))
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ab = chord_distance(&a, &b).unwrap();
            let bc = chord_distance(&b, &c).unwrap();
            let ac = chord_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn dome_angle_symmetric_and_consistent(a in arb_point(), b in arb_point()) {
            let ab = dome_angle(&a, &b).unwrap();
            prop_assert!((ab - dome_angle(&b, &a).unwrap()).abs() < 1e-14);
            let chord = chord_distance(&a, &b).unwrap();
            prop_assert!((chord - chord_from_dome_angle(1.0, ab)).abs() < 1e-12);
        }

        #[test]
        fn cartesian_round_trip(z in -0.999_999f64..0.999_999, phi in 0.0f64..TAU) {
            let p = pt(acos(z), phi);
            let q = SpherePoint::from_direction(3.0, p.to_cartesian()).unwrap();
            prop_assert!((p.theta() - q.theta()).abs() < 1e-12);
            let dphi = (p.phi() - q.phi()).abs();
            prop_assert!(dphi.min(TAU - dphi) < 1e-12);
        }

        #[test]
        fn slerp_is_uniform_along_arc(a in arb_point(), b in arb_point(),
                                      t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let total = dome_angle(&a, &b).unwrap();
            prop_assume!(total > 1e-6 && total < PI - 1e-6);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let p = slerp(&a, &b, lo).unwrap();
            let q = slerp(&a, &b, hi).unwrap();
            prop_assert!((dome_angle(&p, &q).unwrap() - (hi - lo) * total).abs() < 1e-9);
            prop_assert!(deflection_angle(&p, &a, &b).unwrap() < 1e-10);
        }
    }
}
