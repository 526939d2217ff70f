//! Satellite sets: uniform sampling on the sphere, the reference
//! constellation presets, and nearest-satellite queries.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;
use core::str::FromStr;

use libm::{cos, fabs, sin, sqrt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{SpherePoint, Vec3};
use crate::{Error, Result};

/// 0-based index of a satellite within its constellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SatId(pub usize);

impl SatId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for SatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deployed/planned constellations, each modeled as a single shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Preset {
    Starlink,
    OneWeb,
    Kuiper,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Starlink, Preset::OneWeb, Preset::Kuiper];

    pub fn altitude_km(self) -> f64 {
        match self {
            Preset::Starlink => 550.0,
            Preset::OneWeb => 1200.0,
            // Kuiper's 590/610/630 km shells collapsed onto the middle one.
            Preset::Kuiper => 610.0,
        }
    }

    pub fn n_sat(self) -> usize {
        match self {
            Preset::Starlink => 11927,
            Preset::OneWeb => 650,
            Preset::Kuiper => 3236,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Starlink => "starlink",
            Preset::OneWeb => "oneweb",
            Preset::Kuiper => "kuiper",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "starlink" => Ok(Preset::Starlink),
            "oneweb" | "one-web" => Ok(Preset::OneWeb),
            "kuiper" => Ok(Preset::Kuiper),
            _ => Err(Error::InvalidInput("unknown constellation preset")),
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-trial seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `base_seed`: independent of execution order.
pub fn trial_seed(base_seed: u64, index: u64) -> u64 {
    base_seed ^ splitmix64(index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform direction on the unit sphere via inverse CDF: `cos(theta)` uniform
/// on `[-1, 1]`, `phi` uniform on `[0, TAU)`.
pub fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
    let phi: f64 = TAU * rng.gen::<f64>();
    let s = sqrt((1.0 - z * z).max(0.0));
    Vec3::new(s * cos(phi), s * sin(phi), z)
}

/// An immutable set of satellites on one spherical shell.
#[derive(Debug, Clone)]
pub struct Constellation {
    r_earth_km: f64,
    altitude_km: f64,
    units: Vec<Vec3>,
    seed: Option<u64>,
    index: NeighborIndex,
}

impl Constellation {
    /// Samples `n_sat` satellites i.i.d. uniformly on the shell of radius
    /// `r_earth + altitude`. Bit-reproducible for a given seed.
    pub fn sample_bpp(n_sat: usize, r_earth_km: f64, altitude_km: f64, seed: u64) -> Result<Self> {
        if n_sat == 0 {
            return Err(Error::InvalidInput("constellation needs at least one satellite"));
        }
        let mut rng = rng_from_seed(seed);
        let units = (0..n_sat).map(|_| sample_unit(&mut rng)).collect();
        Self::build(r_earth_km, altitude_km, units, Some(seed))
    }

    pub fn from_points(r_earth_km: f64, altitude_km: f64, points: &[SpherePoint]) -> Result<Self> {
        let r = r_earth_km + altitude_km;
        if points.iter().any(|p| fabs(p.r() - r) > 1e-9 * r) {
            return Err(Error::InvalidInput("satellite radius does not match the shell"));
        }
        Self::build(r_earth_km, altitude_km, points.iter().map(SpherePoint::unit).collect(), None)
    }

    /// Builds a constellation from directions; each vector is normalized.
    pub fn from_directions(
        r_earth_km: f64,
        altitude_km: f64,
        directions: Vec<Vec3>,
        seed: Option<u64>,
    ) -> Result<Self> {
        let units = directions
            .into_iter()
            .map(|v| v.normalized().ok_or(Error::InvalidInput("zero direction vector")))
            .collect::<Result<Vec<_>>>()?;
        Self::build(r_earth_km, altitude_km, units, seed)
    }

    fn build(r_earth_km: f64, altitude_km: f64, units: Vec<Vec3>, seed: Option<u64>) -> Result<Self> {
        if !(r_earth_km >= 0.0 && r_earth_km.is_finite()) {
            return Err(Error::InvalidInput("earth radius must be finite and non-negative"));
        }
        if !(altitude_km.is_finite() && r_earth_km + altitude_km > 0.0) {
            return Err(Error::InvalidInput("shell radius must be positive"));
        }
        if units.is_empty() {
            return Err(Error::InvalidInput("constellation needs at least one satellite"));
        }
        let index = NeighborIndex::new(&units);
        Ok(Self { r_earth_km, altitude_km, units, seed, index })
    }

    pub fn r_earth_km(&self) -> f64 {
        self.r_earth_km
    }

    pub fn altitude_km(&self) -> f64 {
        self.altitude_km
    }

    /// Shell radius in km.
    pub fn radius(&self) -> f64 {
        self.r_earth_km + self.altitude_km
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn unit(&self, id: SatId) -> Vec3 {
        self.units[id.0]
    }

    pub fn units(&self) -> &[Vec3] {
        &self.units
    }

    pub fn position(&self, id: SatId) -> SpherePoint {
        // Units are normalized on construction, so this cannot fail.
        SpherePoint::from_direction(self.radius(), self.units[id.0]).expect("unit direction")
    }

    pub fn positions(&self) -> impl Iterator<Item = SpherePoint> + '_ {
        (0..self.len()).map(move |i| self.position(SatId(i)))
    }

    pub fn ids(&self) -> impl Iterator<Item = SatId> {
        (0..self.len()).map(SatId)
    }

    pub(crate) fn index(&self) -> &NeighborIndex {
        &self.index
    }

    /// Satellite closest (by chord) to the direction of `target`, skipping
    /// `exclude`. Ties go to the lowest ID. Exhaustive scan.
    pub fn nearest(&self, target: &SpherePoint, exclude: &BTreeSet<SatId>) -> Result<SatId> {
        let t = target.unit();
        nearest_scan(&self.units, t, |id| !exclude.contains(&id)).ok_or(Error::NoCandidate)
    }

    /// Same query as [`Constellation::nearest`], answered through the z-sorted index.
    pub fn nearest_indexed(&self, target: &SpherePoint, exclude: &BTreeSet<SatId>) -> Result<SatId> {
        self.index.nearest(&self.units, target.unit(), |id| !exclude.contains(&id)).ok_or(Error::NoCandidate)
    }

    /// Picks a uniformly random satellite and the satellite whose dome angle
    /// from it is closest to `target_dome_angle`.
    pub fn random_endpoints(&self, target_dome_angle: f64, seed: u64) -> Result<(SatId, SatId)> {
        if self.len() < 2 {
            return Err(Error::InvalidInput("need at least two satellites"));
        }
        if !(target_dome_angle > 0.0 && target_dome_angle <= core::f64::consts::PI) {
            return Err(Error::InvalidInput("target dome angle must lie in (0, pi]"));
        }
        let mut rng = rng_from_seed(seed);
        let src = SatId(rng.gen_range(0..self.len()));
        let us = self.unit(src);
        let mut best: Option<(f64, SatId)> = None;
        for (j, u) in self.units.iter().enumerate() {
            if j == src.0 {
                continue;
            }
            let gap = fabs(us.angle_to(*u) - target_dome_angle);
            if best.is_none_or(|(g, _)| gap < g) {
                best = Some((gap, SatId(j)));
            }
        }
        let (_, dst) = best.ok_or(Error::NoCandidate)?;
        Ok((src, dst))
    }
}

fn chord2(a: Vec3, b: Vec3) -> f64 {
    let d = a - b;
    d.dot(d)
}

pub(crate) fn nearest_scan(units: &[Vec3], target: Vec3, allowed: impl Fn(SatId) -> bool) -> Option<SatId> {
    let mut best: Option<(f64, usize)> = None;
    for (j, u) in units.iter().enumerate() {
        if !allowed(SatId(j)) {
            continue;
        }
        let d = chord2(*u, target);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, j));
        }
    }
    best.map(|(_, j)| SatId(j))
}

/// Satellites sorted by their z coordinate. Since the chord between two unit
/// vectors is at least their z difference, scans can stop early.
#[derive(Debug, Clone)]
pub(crate) struct NeighborIndex {
    order: Vec<u32>,
    z: Vec<f64>,
}

impl NeighborIndex {
    fn new(units: &[Vec3]) -> Self {
        let mut order: Vec<u32> = (0..units.len() as u32).collect();
        order.sort_by(|&a, &b| units[a as usize].z.total_cmp(&units[b as usize].z).then(a.cmp(&b)));
        let z = order.iter().map(|&i| units[i as usize].z).collect();
        Self { order, z }
    }

    pub(crate) fn nearest(&self, units: &[Vec3], target: Vec3, allowed: impl Fn(SatId) -> bool) -> Option<SatId> {
        let n = self.order.len();
        let start = self.z.partition_point(|&z| z < target.z);
        let (mut lo, mut hi) = (start, start); // lo: next below is lo-1, hi: next above
        let mut best: Option<(f64, usize)> = None;
        loop {
            let dz_lo = if lo > 0 { target.z - self.z[lo - 1] } else { f64::INFINITY };
            let dz_hi = if hi < n { self.z[hi] - target.z } else { f64::INFINITY };
            let (dz, slot) = if dz_lo <= dz_hi { (dz_lo, lo.wrapping_sub(1)) } else { (dz_hi, hi) };
            if dz == f64::INFINITY {
                break;
            }
            if let Some((bd, _)) = best {
                if dz * dz > bd {
                    break;
                }
            }
            if dz_lo <= dz_hi {
                lo -= 1;
            } else {
                hi += 1;
            }
            let j = self.order[slot] as usize;
            if !allowed(SatId(j)) {
                continue;
            }
            let d = chord2(units[j], target);
            let better = match best {
                None => true,
                Some((bd, bj)) => d < bd || (d == bd && j < bj),
            };
            if better {
                best = Some((d, j));
            }
        }
        best.map(|(_, j)| SatId(j))
    }

    /// Appends every satellite within unit-sphere chord `max_chord` of
    /// `center` to `out`, in ascending ID order.
    pub(crate) fn within(&self, units: &[Vec3], center: Vec3, max_chord: f64, out: &mut Vec<SatId>) {
        let lo = self.z.partition_point(|&z| z < center.z - max_chord);
        let hi = self.z.partition_point(|&z| z <= center.z + max_chord);
        let start = out.len();
        let limit = max_chord * max_chord;
        for &i in &self.order[lo..hi] {
            if chord2(units[i as usize], center) <= limit {
                out.push(SatId(i as usize));
            }
        }
        out[start..].sort_unstable();
    }
}
