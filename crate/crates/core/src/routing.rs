//! Route construction: the ideal equally spaced route, the equal-interval
//! nearest-neighbor search with per-hop repair, and the two greedy baselines.

use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::{ideal_latency, n_min_ideal, HopPlan, LinkSpec};
use crate::constellation::{Constellation, SatId};
use crate::geometry::{GreatArc, SpherePoint, Vec3, ANTIPODAL_TOLERANCE};
use crate::{Error, Result};

/// Relative slack on the hop-length constraint, absorbing rounding in the
/// chord computation.
pub const HOP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RouteStatus {
    Ok,
    Repaired,
    Type2Interrupted,
}

/// A materialized multi-hop route.
///
/// For an interrupted route `hops` holds whatever was built before the
/// failure and `latency_ms` sums only those hops.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Route {
    pub hops: Vec<SatId>,
    pub hop_distances_km: Vec<f64>,
    pub latency_ms: f64,
    pub status: RouteStatus,
    /// Ideal relay positions the route was snapped from (equal-interval only).
    pub relay_targets: Vec<SpherePoint>,
    /// Source and destination were linked directly.
    pub direct: bool,
}

impl Route {
    fn from_hops(c: &Constellation, spec: &LinkSpec, hops: Vec<SatId>, status: RouteStatus) -> Self {
        let r = c.radius();
        let hop_distances_km: Vec<f64> = hops.windows(2).map(|w| r * (c.unit(w[0]) - c.unit(w[1])).norm()).collect();
        let latency_ms = hop_distances_km.iter().sum::<f64>() / spec.constants.c_km_per_ms;
        let direct = hops.len() == 2 && status == RouteStatus::Ok;
        Self { hops, hop_distances_km, latency_ms, status, relay_targets: Vec::new(), direct }
    }

    pub fn n_hops(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn is_interrupted(&self) -> bool {
        self.status == RouteStatus::Type2Interrupted
    }

    /// Latency of a completed route; `None` when interrupted.
    pub fn completed_latency(&self) -> Option<f64> {
        (!self.is_interrupted()).then_some(self.latency_ms)
    }
}

/// Equally spaced relays along the shortest arc.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdealRoute {
    pub n_hops: usize,
    /// Positions at fractions `i / n_hops`, endpoints included.
    pub positions: Vec<SpherePoint>,
    pub latency_ms: f64,
    /// Latency of the single direct hop, when the endpoints are within range.
    pub direct_latency_ms: Option<f64>,
}

impl IdealRoute {
    /// Lowest latency the routes below are compared against: the direct hop
    /// when it exists, the equally spaced route otherwise.
    pub fn reference_latency(&self) -> f64 {
        self.direct_latency_ms.unwrap_or(self.latency_ms)
    }
}

/// Great circle from `a` to `b`. Antipodal endpoints need `pole`.
pub fn route_arc(a: Vec3, b: Vec3, pole: Option<Vec3>) -> Result<GreatArc> {
    match (GreatArc::between(a, b), pole) {
        (Ok(arc), _) => Ok(arc),
        (Err(Error::DegenerateArc), Some(p)) if a.angle_to(b) > core::f64::consts::PI - ANTIPODAL_TOLERANCE => {
            GreatArc::with_pole(a, b, p)
        }
        (Err(e), _) => Err(e),
    }
}

/// Route with `N_min` equal hops between two positions.
pub fn route_ideal(src: &SpherePoint, dst: &SpherePoint, spec: &LinkSpec) -> Result<IdealRoute> {
    let r = src.r();
    let arc = route_arc(src.unit(), dst.unit(), spec.arc_pole)?;
    let theta = arc.angle();
    let n = n_min_ideal(theta, spec.theta_max(r)?)?;
    let positions = (0..=n)
        .map(|i| match i {
            0 => Ok(*src),
            i if i == n => Ok(*dst),
            i => SpherePoint::from_direction(r, arc.point_at(i as f64 / n as f64)),
        })
        .collect::<Result<Vec<_>>>()?;
    let c = spec.constants.c_km_per_ms;
    let chord = r * (src.unit() - dst.unit()).norm();
    let direct_latency_ms = (chord <= spec.max_hop_km(r)? * (1.0 + HOP_SLACK)).then(|| chord / c);
    Ok(IdealRoute { n_hops: n, positions, latency_ms: ideal_latency(theta, n, r, c)?, direct_latency_ms })
}

/// Shared state of one route construction: hop limit on the unit sphere and
/// the set of satellites already on the route.
struct Builder<'a> {
    c: &'a Constellation,
    max_unit_chord: f64,
    used: Vec<bool>,
    scratch: Vec<SatId>,
}

impl<'a> Builder<'a> {
    fn new(c: &'a Constellation, spec: &LinkSpec) -> Result<Self> {
        if spec.src == spec.dst {
            return Err(Error::InvalidInput("source and destination coincide"));
        }
        if spec.src.0 >= c.len() || spec.dst.0 >= c.len() {
            return Err(Error::InvalidInput("endpoint id out of range"));
        }
        let max_unit_chord = spec.max_hop_km(c.radius())? / c.radius();
        let mut used = vec![false; c.len()];
        used[spec.src.0] = true;
        used[spec.dst.0] = true;
        Ok(Self { c, max_unit_chord, used, scratch: Vec::new() })
    }

    fn admissible(&self, a: SatId, b: SatId) -> bool {
        (self.c.unit(a) - self.c.unit(b)).norm() <= self.max_unit_chord * (1.0 + HOP_SLACK)
    }

    fn take(&mut self, id: SatId) {
        self.used[id.0] = true;
    }

    /// Unused satellites within range of `from` that are strictly closer to
    /// `to` than `from` is, in ascending ID order.
    fn progress_candidates(&mut self, from: SatId, to: SatId) -> Vec<(SatId, Vec3)> {
        let units = self.c.units();
        let (uf, ut) = (units[from.0], units[to.0]);
        let here = uf.angle_to(ut);
        self.scratch.clear();
        self.c.index().within(units, uf, self.max_unit_chord * (1.0 + HOP_SLACK), &mut self.scratch);
        self.scratch
            .iter()
            .filter(|id| !self.used[id.0])
            .map(|&id| (id, units[id.0]))
            .filter(|(_, u)| u.angle_to(ut) < here)
            .collect()
    }

    /// Minimum-deflection walk from `from` until `to` is one admissible hop
    /// away. Returns the intermediates in order.
    fn repair(&mut self, from: SatId, to: SatId, arc: &GreatArc) -> Result<Vec<SatId>> {
        let mut cur = from;
        let mut path = Vec::new();
        while !self.admissible(cur, to) {
            let next = self
                .progress_candidates(cur, to)
                .into_iter()
                .map(|(id, u)| (arc.deflection(u), id))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(_, id)| id)
                .ok_or(Error::RepairFailed)?;
            self.take(next);
            path.push(next);
            cur = next;
        }
        Ok(path)
    }
}

/// Replaces an inadmissible hop `from -> to` with a chain of admissible hops,
/// each step taking the in-range satellite that is closer to `to` and
/// deflects least from the `from -> to` great circle.
///
/// Returns the intermediate satellites; empty when the hop is already
/// admissible.
pub fn hop_repair(c: &Constellation, from: SatId, to: SatId, spec: &LinkSpec) -> Result<Vec<SatId>> {
    let hop_spec = LinkSpec { src: from, dst: to, ..*spec };
    let mut b = Builder::new(c, &hop_spec)?;
    let arc = route_arc(c.unit(from), c.unit(to), spec.arc_pole)?;
    b.repair(from, to, &arc)
}

fn link_arc(c: &Constellation, spec: &LinkSpec) -> Result<GreatArc> {
    route_arc(c.unit(spec.src), c.unit(spec.dst), spec.arc_pole)
}

/// Equal-interval nearest-neighbor route.
///
/// Relay targets sit at fractions `i / n_hat` of the arc; each is snapped to
/// the nearest satellite not already on the route (endpoints excluded, ties
/// to the lowest ID). Every inadmissible hop is then repaired. A directly
/// reachable destination gives a single-hop route.
///
/// The plan is used as given even when it is type-I interrupted.
pub fn route_equal_interval(c: &Constellation, spec: &LinkSpec, plan: &HopPlan) -> Result<Route> {
    let mut b = Builder::new(c, spec)?;
    if b.admissible(spec.src, spec.dst) {
        return Ok(Route::from_hops(c, spec, vec![spec.src, spec.dst], RouteStatus::Ok));
    }
    if plan.n_hat == 0 {
        return Err(Error::InvalidInput("plan has no hops"));
    }
    let arc = link_arc(c, spec)?;
    let n = plan.n_hat;
    let mut targets = Vec::with_capacity(n.saturating_sub(1));
    let mut skeleton = Vec::with_capacity(n + 1);
    skeleton.push(spec.src);
    for i in 1..n {
        let t = arc.point_at(i as f64 / n as f64);
        let used = &b.used;
        let Some(id) = c.index().nearest(c.units(), t, |id| !used[id.0]) else {
            // fewer satellites than relays
            let mut route = Route::from_hops(c, spec, skeleton, RouteStatus::Type2Interrupted);
            route.relay_targets = targets;
            route.direct = false;
            return Ok(route);
        };
        b.take(id);
        skeleton.push(id);
        targets.push(SpherePoint::from_direction(c.radius(), t)?);
    }
    skeleton.push(spec.dst);

    let mut hops = Vec::with_capacity(skeleton.len());
    hops.push(spec.src);
    let mut status = RouteStatus::Ok;
    for w in skeleton.windows(2) {
        let (from, to) = (w[0], w[1]);
        if !b.admissible(from, to) && status != RouteStatus::Type2Interrupted {
            let hop_arc = route_arc(c.unit(from), c.unit(to), spec.arc_pole)?;
            match b.repair(from, to, &hop_arc) {
                Ok(mid) => {
                    hops.extend(mid);
                    status = RouteStatus::Repaired;
                }
                Err(Error::RepairFailed) => status = RouteStatus::Type2Interrupted,
                Err(e) => return Err(e),
            }
        }
        hops.push(to);
    }
    let mut route = Route::from_hops(c, spec, hops, status);
    route.relay_targets = targets;
    route.direct = false;
    Ok(route)
}

/// Hop cap applied to the greedy baselines.
pub fn baseline_hop_cap(plan: &HopPlan) -> usize {
    4 * plan.n_hat.max(1)
}

fn greedy(
    c: &Constellation,
    spec: &LinkSpec,
    hop_cap: usize,
    pick: impl Fn(&[(SatId, Vec3)], Vec3) -> Option<SatId>,
) -> Result<Route> {
    let mut b = Builder::new(c, spec)?;
    let mut hops = vec![spec.src];
    let mut cur = spec.src;
    loop {
        if b.admissible(cur, spec.dst) {
            hops.push(spec.dst);
            return Ok(Route::from_hops(c, spec, hops, RouteStatus::Ok));
        }
        if hops.len() >= hop_cap {
            break;
        }
        let candidates = b.progress_candidates(cur, spec.dst);
        let Some(next) = pick(&candidates, c.unit(cur)) else {
            break;
        };
        b.take(next);
        hops.push(next);
        cur = next;
    }
    Ok(Route::from_hops(c, spec, hops, RouteStatus::Type2Interrupted))
}

/// Greedy baseline: each hop goes to the in-range satellite, closer to the
/// destination, with the least deflection from the source-destination arc.
pub fn route_min_deflection(c: &Constellation, spec: &LinkSpec, hop_cap: usize) -> Result<Route> {
    let arc = link_arc(c, spec)?;
    greedy(c, spec, hop_cap, |cands, _| {
        cands
            .iter()
            .map(|&(id, u)| (arc.deflection(u), id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    })
}

/// Greedy baseline: each hop goes to the farthest in-range satellite that is
/// closer to the destination and within `belt_halfwidth` of the arc.
pub fn route_max_stepsize(c: &Constellation, spec: &LinkSpec, belt_halfwidth: f64, hop_cap: usize) -> Result<Route> {
    if !(belt_halfwidth >= 0.0) {
        return Err(Error::InvalidInput("belt half-width must be non-negative"));
    }
    let arc = link_arc(c, spec)?;
    greedy(c, spec, hop_cap, |cands, here| {
        cands
            .iter()
            .filter(|(_, u)| arc.deflection(*u) <= belt_halfwidth)
            .map(|&(id, u)| ((u - here).norm(), id))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
            .map(|(_, id)| id)
    })
}
