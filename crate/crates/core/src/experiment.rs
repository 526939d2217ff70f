//! Single Monte Carlo trials: a fresh uniform constellation, two endpoints at
//! an exact dome-angle separation, and one route per strategy.
//!
//! Parallel execution and aggregation across trials live in the `satlink`
//! crate; everything here is a pure function of the trial seed.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use libm::{cos, sin, sqrt};

use crate::analysis::{ideal_latency, n_min_ideal, plan_hops, theta_max, HopPlan, LinkSpec};
use crate::constellation::{rng_from_seed, sample_unit, trial_seed, Constellation, Preset, SatId};
use crate::efficiency::{efficiency_binomial, efficiency_contour, HopAngleConvention};
use crate::geometry::{PhysicalConstants, Vec3};
use crate::routing::{
    baseline_hop_cap, route_equal_interval, route_max_stepsize, route_min_deflection, Route, RouteStatus,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Strategy {
    Ideal,
    EqualInterval,
    MinDeflection,
    MaxStepsize,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::Ideal, Strategy::EqualInterval, Strategy::MinDeflection, Strategy::MaxStepsize];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ideal => "ideal",
            Strategy::EqualInterval => "equal-interval",
            Strategy::MinDeflection => "min-deflection",
            Strategy::MaxStepsize => "max-stepsize",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or(Error::InvalidInput("unknown strategy"))
    }
}

/// Parameters shared by every trial of one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub n_sat: usize,
    pub altitude_km: f64,
    pub d_max_km: f64,
    pub epsilon: f64,
    /// Dome angle between the endpoints.
    pub theta_02n: f64,
    pub constants: PhysicalConstants,
    /// Max-stepsize belt; defaults to the planned reliable angle.
    pub belt_halfwidth: Option<f64>,
}

impl Scenario {
    /// Antipodal endpoints, `d_max` = 3000 km.
    pub fn for_preset(preset: Preset, epsilon: f64) -> Self {
        Self {
            n_sat: preset.n_sat(),
            altitude_km: preset.altitude_km(),
            d_max_km: 3000.0,
            epsilon,
            theta_02n: core::f64::consts::PI,
            constants: PhysicalConstants::default(),
            belt_halfwidth: None,
        }
    }

    pub fn radius(&self) -> f64 {
        self.constants.r_earth_km + self.altitude_km
    }

    pub fn prepare(&self) -> Result<PreparedScenario> {
        if self.n_sat == 0 {
            return Err(Error::InvalidInput("n_sat must be at least 1"));
        }
        let r = self.radius();
        let theta_max = theta_max(r, self.constants.r_earth_km, self.d_max_km)?;
        let spec = LinkSpec::new(SatId(0), SatId(1), self.d_max_km, self.epsilon, self.constants)?;
        let plan = plan_hops(self.theta_02n, &spec, self.n_sat, theta_max)?;
        let n_min = n_min_ideal(self.theta_02n, theta_max)?;
        let c = self.constants.c_km_per_ms;
        let chord = 2.0 * r * sin(0.5 * self.theta_02n);
        let direct = chord <= spec.max_hop_km(r)?;
        let reference_latency_ms = if direct { chord / c } else { ideal_latency(self.theta_02n, n_min, r, c)? };
        let belt = self.belt_halfwidth.unwrap_or(plan.theta_r);
        Ok(PreparedScenario { scenario: *self, theta_max, plan, n_min, direct, reference_latency_ms, belt })
    }
}

/// A [`Scenario`] with its planning results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedScenario {
    pub scenario: Scenario,
    pub theta_max: f64,
    pub plan: HopPlan,
    pub n_min: usize,
    /// Endpoints are one admissible hop apart.
    pub direct: bool,
    /// Latency every route is measured against: the direct hop when
    /// possible, `N_min` equal hops otherwise.
    pub reference_latency_ms: f64,
    pub belt: f64,
}

impl PreparedScenario {
    pub fn efficiency_contour(&self, convention: HopAngleConvention) -> Result<f64> {
        let s = &self.scenario;
        efficiency_contour(s.theta_02n, self.n_min, self.plan.n_hat, s.n_sat, self.theta_max, convention)
    }

    pub fn efficiency_binomial(&self) -> Result<f64> {
        let s = &self.scenario;
        efficiency_binomial(s.theta_02n, self.n_min, self.plan.n_hat, s.n_sat, self.theta_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    pub strategy: Strategy,
    pub status: RouteStatus,
    pub latency_ms: Option<f64>,
    pub n_hops_final: usize,
    pub efficiency: Option<f64>,
}

/// Constellation of one trial: `n_sat` uniform satellites plus the two
/// endpoints (IDs `n_sat` and `n_sat + 1`) separated by exactly `theta_02n`
/// along a uniformly random great circle.
pub fn trial_constellation(prep: &PreparedScenario, seed: u64) -> Result<(Constellation, LinkSpec)> {
    let s = &prep.scenario;
    let mut rng = rng_from_seed(seed);
    let mut dirs: Vec<Vec3> = (0..s.n_sat).map(|_| sample_unit(&mut rng)).collect();
    let src = sample_unit(&mut rng);
    let w = loop {
        let v = sample_unit(&mut rng);
        if let Some(w) = (v - src * v.dot(src)).normalized() {
            break w;
        }
    };
    let dst = src * cos(s.theta_02n) + w * sin(s.theta_02n);
    dirs.push(src);
    dirs.push(dst);
    let c = Constellation::from_directions(s.constants.r_earth_km, s.altitude_km, dirs, Some(seed))?;
    let spec = LinkSpec::new(SatId(s.n_sat), SatId(s.n_sat + 1), s.d_max_km, s.epsilon, s.constants)?
        .with_arc_pole(src.cross(w));
    Ok((c, spec))
}

/// Routes the given strategy on a trial constellation.
pub fn route_strategy(
    prep: &PreparedScenario,
    c: &Constellation,
    spec: &LinkSpec,
    strategy: Strategy,
) -> Result<Route> {
    let cap = baseline_hop_cap(&prep.plan);
    match strategy {
        Strategy::Ideal => Err(Error::InvalidInput("the ideal strategy has no materialized route")),
        Strategy::EqualInterval => route_equal_interval(c, spec, &prep.plan),
        Strategy::MinDeflection => route_min_deflection(c, spec, cap),
        Strategy::MaxStepsize => route_max_stepsize(c, spec, prep.belt, cap),
    }
}

/// Runs every strategy in `strategies` on trial `trial_index`, in order.
pub fn run_trial(
    prep: &PreparedScenario,
    strategies: &[Strategy],
    base_seed: u64,
    trial_index: u64,
) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(base_seed, trial_index);
    let needs_sample = strategies.iter().any(|&s| s != Strategy::Ideal);
    let sample = if needs_sample { Some(trial_constellation(prep, seed)?) } else { None };
    let ideal = prep.reference_latency_ms;
    strategies
        .iter()
        .map(|&strategy| {
            let record = |status, latency_ms: Option<f64>, n_hops_final| TrialRecord {
                trial_index,
                seed,
                strategy,
                status,
                latency_ms,
                n_hops_final,
                efficiency: latency_ms.map(|l| ideal / l),
            };
            match (strategy, &sample) {
                (Strategy::Ideal, _) => {
                    Ok(record(RouteStatus::Ok, Some(ideal), if prep.direct { 1 } else { prep.n_min }))
                }
                (_, Some((c, spec))) => {
                    let route = route_strategy(prep, c, spec, strategy)?;
                    Ok(record(route.status, route.completed_latency(), route.n_hops()))
                }
                (_, None) => Err(Error::Internal("trial constellation missing")),
            }
        })
        .collect()
}

/// Totals over a set of trial records of one strategy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Summary {
    pub trials: u64,
    pub interrupted: u64,
    pub repaired: u64,
    /// Mean over completed trials.
    pub mean_latency_ms: f64,
    /// Mean over completed trials.
    pub mean_efficiency: f64,
}

impl Summary {
    pub fn type2_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.interrupted as f64 / self.trials as f64
        }
    }

    pub fn completed(&self) -> u64 {
        self.trials - self.interrupted
    }
}

/// Sums in the order given; callers sort by trial index first so that the
/// result does not depend on scheduling.
pub fn summarize<'a>(records: impl IntoIterator<Item = &'a TrialRecord>) -> Summary {
    let mut s = Summary::default();
    let (mut lat, mut eff) = (0.0, 0.0);
    for r in records {
        s.trials += 1;
        match r.status {
            RouteStatus::Type2Interrupted => s.interrupted += 1,
            RouteStatus::Repaired => s.repaired += 1,
            RouteStatus::Ok => {}
        }
        if let (Some(l), Some(e)) = (r.latency_ms, r.efficiency) {
            lat += l;
            eff += e;
        }
    }
    let done = s.completed();
    if done > 0 {
        s.mean_latency_ms = lat / done as f64;
        s.mean_efficiency = eff / done as f64;
    } else {
        s.mean_latency_ms = f64::NAN;
        s.mean_efficiency = f64::NAN;
    }
    s
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // the bounds at k = 0 and k = n are exact; rounding would exclude p
    let lo = if p == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if p == 1.0 { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fastest".parse::<Strategy>().is_err());
    }

    #[test]
    fn trial_endpoints_have_exact_separation() {
        let prep = Scenario { theta_02n: 1.3, ..Scenario::for_preset(Preset::Kuiper, 0.1) }.prepare().unwrap();
        let (c, spec) = trial_constellation(&prep, 11).unwrap();
        assert_eq!(c.len(), 3238);
        let a = c.unit(spec.src).angle_to(c.unit(spec.dst));
        assert!((a - 1.3).abs() < 1e-12);

        let prep = Scenario::for_preset(Preset::Kuiper, 0.1).prepare().unwrap();
        let (c, spec) = trial_constellation(&prep, 12).unwrap();
        assert!(c.unit(spec.src).angle_to(c.unit(spec.dst)) > PI - 1e-9);
    }

    #[test]
    fn trials_are_deterministic() {
        let prep =
            Scenario { n_sat: 800, altitude_km: 500.0, theta_02n: 1.5, ..Scenario::for_preset(Preset::OneWeb, 0.01) }
                .prepare()
                .unwrap();
        let a = run_trial(&prep, &Strategy::ALL, 5, 17).unwrap();
        let b = run_trial(&prep, &Strategy::ALL, 5, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, run_trial(&prep, &Strategy::ALL, 5, 18).unwrap());
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].efficiency, Some(1.0));
    }

    #[test]
    fn infeasible_cell_always_interrupts() {
        let prep =
            Scenario { n_sat: 10, d_max_km: 50.0, ..Scenario::for_preset(Preset::Starlink, 0.1) }.prepare().unwrap();
        for i in 0..20 {
            let r = run_trial(&prep, &[Strategy::EqualInterval], 1, i).unwrap();
            assert_eq!(r[0].status, RouteStatus::Type2Interrupted);
            assert_eq!(r[0].latency_ms, None);
        }
    }

    #[test]
    fn summary_counts() {
        let rec = |status, latency_ms: Option<f64>| TrialRecord {
            trial_index: 0,
            seed: 0,
            strategy: Strategy::EqualInterval,
            status,
            latency_ms,
            n_hops_final: 3,
            efficiency: latency_ms.map(|l| 10.0 / l),
        };
        let rs = [
            rec(RouteStatus::Ok, Some(10.0)),
            rec(RouteStatus::Repaired, Some(20.0)),
            rec(RouteStatus::Type2Interrupted, None),
        ];
        let s = summarize(&rs);
        assert_eq!((s.trials, s.interrupted, s.repaired), (3, 1, 1));
        assert!((s.mean_latency_ms - 15.0).abs() < 1e-12);
        assert!((s.mean_efficiency - 0.75).abs() < 1e-12);
        assert!((s.type2_rate() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10_000, 1.96);
        assert_eq!(lo, 0.0);
        assert!((hi - 3.84e-4).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }
}
