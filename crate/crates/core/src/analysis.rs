//! Closed-form stochastic-geometry results for a uniform constellation:
//! contact-angle distribution, reliable angle, hop-count planning, the
//! sufficient constellation size and the ideal-scenario latency.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{acos, asin, ceil, cos, exp, expm1, fabs, log, log1p, round, sin, sqrt};

use crate::constellation::SatId;
use crate::geometry::{los_chord_limit, PhysicalConstants, Vec3};
use crate::quadrature::integrate_breakpoints;
use crate::{Error, Result};

/// One routing problem.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkSpec {
    pub src: SatId,
    pub dst: SatId,
    pub d_max_km: f64,
    /// Tolerable probability that some hop finds no satellite within the reliable angle.
    pub epsilon: f64,
    pub constants: PhysicalConstants,
    /// Normal of the great circle to route along when `src` and `dst` are
    /// antipodal. Ignored otherwise.
    pub arc_pole: Option<Vec3>,
}

impl LinkSpec {
    pub fn new(src: SatId, dst: SatId, d_max_km: f64, epsilon: f64, constants: PhysicalConstants) -> Result<Self> {
        if !(d_max_km > 0.0) {
            return Err(Error::InvalidInput("d_max must be positive"));
        }
        check_epsilon(epsilon)?;
        Ok(Self { src, dst, d_max_km, epsilon, constants, arc_pole: None })
    }

    pub fn with_arc_pole(mut self, pole: Vec3) -> Self {
        self.arc_pole = Some(pole);
        self
    }

    pub fn theta_max(&self, r: f64) -> Result<f64> {
        theta_max(r, self.constants.r_earth_km, self.d_max_km)
    }

    /// Longest admissible hop chord: both the line-of-sight and `d_max` limits.
    pub fn max_hop_km(&self, r: f64) -> Result<f64> {
        Ok(los_chord_limit(r, self.constants.r_earth_km)?.min(self.d_max_km))
    }
}

/// Output of the iterative hop-count planner.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HopPlan {
    /// Ideal-scenario hop count the planner started from.
    pub n_min: usize,
    pub n_hat: usize,
    pub theta_r: f64,
    pub type1_interrupted: bool,
    pub iterations_used: usize,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput("epsilon must lie in (0, 1)"))
    }
}

/// `ceil`, except that values within 1e-9 (relative) of an integer snap to it.
/// Ratios like `theta / (theta / n)` are meant to be exact integers.
fn ceil_snapped(x: f64) -> f64 {
    let r = round(x);
    if fabs(x - r) <= 1e-9 * r.max(1.0) {
        r
    } else {
        ceil(x)
    }
}

/// Largest dome angle a single hop may span: line of sight and `d_max`.
pub fn theta_max(r: f64, r_earth: f64, d_max: f64) -> Result<f64> {
    if !(r > r_earth) {
        return Err(Error::InvalidInput("orbit radius must exceed earth radius"));
    }
    if !(d_max > 0.0) {
        return Err(Error::InvalidInput("d_max must be positive"));
    }
    let los = 2.0 * acos(r_earth / r);
    let range = 2.0 * asin(d_max.min(2.0 * r) / (2.0 * r));
    Ok(los.min(range))
}

/// `ln(((1 + cos theta) / 2)^n)`, i.e. the log-probability that a cap of
/// angular radius `theta` holds none of `n` satellites.
fn log_empty_cap(theta: f64, n: f64) -> f64 {
    // ln cos^2(x) = ln(1 - sin^2 x) keeps full precision for small x
    if n == 0.0 {
        return 0.0;
    }
    let s = sin(0.5 * theta);
    n * log1p(-s * s)
}

/// Contact-angle CDF: probability that the nearest of `n_sat` satellites lies
/// within dome angle `theta` of a reference point.
pub fn contact_cdf(theta: f64, n_sat: usize) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    if theta >= PI {
        return 1.0;
    }
    -expm1(log_empty_cap(theta, n_sat as f64))
}

pub fn contact_pdf(theta: f64, n_sat: usize) -> f64 {
    if !(0.0..PI).contains(&theta) {
        return 0.0;
    }
    let n = n_sat as f64;
    0.5 * n * sin(theta) * exp(log_empty_cap(theta, n - 1.0))
}

/// Angle beyond which the contact-angle tail is below 1e-30.
pub fn contact_support(n_sat: usize) -> f64 {
    let half = acos(exp(log(1e-30) / (2.0 * n_sat.max(1) as f64)));
    (2.0 * half).min(PI)
}

/// Breakpoints that resolve the contact-angle density on `[0, upper]`.
pub(crate) fn contact_breakpoints(n_sat: usize, upper: f64) -> Vec<f64> {
    let s = contact_support(n_sat);
    let mut edges = Vec::from([0.0]);
    for e in [s / 16.0, s / 4.0, s / 2.0, s] {
        if e < upper {
            edges.push(e);
        }
    }
    edges.push(upper);
    edges
}

/// Expected contact angle by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactMean {
    /// Integral of the survival function over `[0, PI]`.
    pub quadrature: f64,
    /// `PI * prod_{i=1}^{n} (2i - 1) / (2i)`, accumulated in log space.
    pub wallis: f64,
}

pub fn contact_mean(n_sat: usize) -> Result<ContactMean> {
    if n_sat == 0 {
        return Err(Error::InvalidInput("n_sat must be at least 1"));
    }
    let n = n_sat as f64;
    let survival = |t: f64| exp(log_empty_cap(t.min(PI - 1e-300), n));
    let quadrature = integrate_breakpoints(survival, &contact_breakpoints(n_sat, PI), 8, 1e-12);
    let log_prod: f64 = (1..=n_sat).map(|i| log1p(-1.0 / (2.0 * i as f64))).sum();
    Ok(ContactMean { quadrature, wallis: PI * exp(log_prod) })
}

/// Smallest search radius that finds a satellite with per-hop probability
/// `(1 - epsilon)^(1/n)`.
pub fn reliable_angle(n: usize, epsilon: f64, n_sat: usize) -> Result<f64> {
    if n == 0 || n_sat == 0 {
        return Err(Error::InvalidInput("hop and satellite counts must be positive"));
    }
    check_epsilon(epsilon)?;
    // per-hop failure budget 1 - (1 - eps)^(1/n)
    let per_hop = -expm1(log1p(-epsilon) / n as f64);
    // cos^2(theta_r / 2) = per_hop^(1/n_sat)
    let empty = exp(log(per_hop) / n_sat as f64);
    let arg = 2.0 * empty - 1.0;
    if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&arg) {
        return Err(Error::Numeric("reliable-angle arccos argument out of range"));
    }
    Ok(2.0 * asin(sqrt((-expm1(log(per_hop) / n_sat as f64)).clamp(0.0, 1.0))))
}

/// Ideal-scenario hop count `ceil(theta_02n / theta_max) + 1`.
pub fn n_min_ideal(theta_02n: f64, theta_max: f64) -> Result<usize> {
    if !(theta_02n > 0.0 && theta_02n <= PI) || !(theta_max > 0.0 && theta_max <= PI) {
        return Err(Error::InvalidInput("angles must lie in (0, pi]"));
    }
    Ok(ceil_snapped(theta_02n / theta_max) as usize + 1)
}

/// Upper bound on the planned hop count when no type-I interruption occurs:
/// the largest `n` with `reliable_angle(n) <= theta_max / 2`.
///
/// Returns `+inf` when the empty-cap probability underflows.
pub fn iteration_bound(epsilon: f64, theta_max: f64, n_sat: usize) -> f64 {
    let empty = exp(log_empty_cap(0.5 * theta_max, n_sat as f64));
    let denom = log1p(-empty);
    if denom == 0.0 {
        return f64::INFINITY;
    }
    log1p(-epsilon) / denom
}

const MAX_PLAN_ITERATIONS: usize = 10_000_000;

/// Iterative hop-count planner.
///
/// Starting from the ideal hop count, `n` grows while
/// `(theta_max - theta_02n / n) / 2 <= theta_r(n) <= theta_max / 2`.
/// Leaving through the upper bound means no hop count meets `epsilon`
/// (type-I interruption); `n_hat` and `theta_r` then describe the last
/// iterate.
pub fn plan_hops(theta_02n: f64, spec: &LinkSpec, n_sat: usize, theta_max: f64) -> Result<HopPlan> {
    plan_hops_eps(theta_02n, spec.epsilon, n_sat, theta_max)
}

pub fn plan_hops_eps(theta_02n: f64, epsilon: f64, n_sat: usize, theta_max: f64) -> Result<HopPlan> {
    check_epsilon(epsilon)?;
    let n_min = n_min_ideal(theta_02n, theta_max)?;
    let bound = iteration_bound(epsilon, theta_max, n_sat);
    let cap =
        if bound < MAX_PLAN_ITERATIONS as f64 { (ceil(bound) as usize + 1).max(n_min) } else { MAX_PLAN_ITERATIONS };
    let mut n = n_min;
    let mut theta_r = reliable_angle(n, epsilon, n_sat)?;
    let mut iterations = 0;
    while 0.5 * (theta_max - theta_02n / n as f64) <= theta_r && theta_r <= 0.5 * theta_max {
        if n >= cap {
            return Err(Error::Internal("hop planner exceeded its iteration bound"));
        }
        n += 1;
        iterations += 1;
        theta_r = reliable_angle(n, epsilon, n_sat)?;
    }
    Ok(HopPlan { n_min, n_hat: n, theta_r, type1_interrupted: theta_r > 0.5 * theta_max, iterations_used: iterations })
}

/// The planner's stopping rule restated as a sign-change search: the first
/// `n` where either `theta_max - 2 theta_r(n)` or
/// `theta_max - theta_02n / n - 2 theta_r(n)` changes sign relative to `n - 1`.
pub fn n_hat_closed_form(theta_02n: f64, epsilon: f64, n_sat: usize, theta_max: f64) -> Result<usize> {
    let n_min = n_min_ideal(theta_02n, theta_max)?;
    let upper = |n: usize| -> Result<f64> { Ok(theta_max - 2.0 * reliable_angle(n, epsilon, n_sat)?) };
    let lower = |n: usize| -> Result<f64> { Ok(upper(n)? - theta_02n / n as f64) };
    // already outside the loop region at the start
    if lower(n_min)? > 0.0 || upper(n_min)? < 0.0 {
        return Ok(n_min);
    }
    let mut n = n_min + 1;
    while n < MAX_PLAN_ITERATIONS {
        if upper(n - 1)? * upper(n)? < 0.0 || lower(n - 1)? * lower(n)? < 0.0 {
            return Ok(n);
        }
        n += 1;
    }
    Err(Error::Internal("closed-form hop count did not terminate"))
}

/// Smallest constellation size for which search radius `theta_t` guarantees
/// the interruption tolerance `epsilon`.
pub fn min_sats_sufficient(theta_02n: f64, theta_max: f64, epsilon: f64, theta_t: f64) -> Result<u64> {
    check_epsilon(epsilon)?;
    if !(theta_t > 0.0) || theta_t >= 0.5 * theta_max {
        return Err(Error::InvalidInput("theta_t must lie in (0, theta_max / 2)"));
    }
    let hops = ceil_snapped(theta_02n / (theta_max - 2.0 * theta_t)) + 1.0;
    let numer = log(-expm1(log1p(-epsilon) / hops));
    let denom = log(0.5 * (1.0 + cos(theta_t)));
    let n = ceil(numer / denom);
    if !(n.is_finite() && n < u64::MAX as f64) {
        return Err(Error::Numeric("sufficient constellation size overflows"));
    }
    Ok(n as u64)
}

/// Search radius `(theta_max - theta_02n / (n_min + k)) / 2` of the practical grid.
pub fn practical_theta_t(theta_02n: f64, theta_max: f64, n_min: usize, k: usize) -> f64 {
    0.5 * (theta_max - theta_02n / (n_min + k) as f64)
}

/// Minimum of [`min_sats_sufficient`] over the practical grid `k = 0..=k_max`.
/// Returns the size and the grid index that attains it.
pub fn min_sats_over_grid(theta_02n: f64, theta_max: f64, epsilon: f64, k_max: usize) -> Result<(u64, usize)> {
    let n_min = n_min_ideal(theta_02n, theta_max)?;
    let mut best: Option<(u64, usize)> = None;
    for k in 0..=k_max {
        let theta_t = practical_theta_t(theta_02n, theta_max, n_min, k);
        let n = min_sats_sufficient(theta_02n, theta_max, epsilon, theta_t)?;
        if best.is_none_or(|(b, _)| n < b) {
            best = Some((n, k));
        }
    }
    best.ok_or(Error::InvalidInput("empty grid"))
}

/// Latency of `n` equal hops along an arc of `theta_02n`: `(2rn/c) sin(theta_02n / 2n)` ms.
pub fn ideal_latency(theta_02n: f64, n: usize, r: f64, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("hop count must be positive"));
    }
    let n = n as f64;
    Ok(2.0 * r * n / c * sin(theta_02n / (2.0 * n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const RE: f64 = 6371.0;

    fn tmax(alt: f64) -> f64 {
        theta_max(RE + alt, RE, 3000.0).unwrap()
    }

    #[test]
    fn theta_max_examples() {
        assert!((0.5 * tmax(1200.0) - 0.1994).abs() < 5e-5);
        assert!((tmax(550.0) - 0.43692).abs() < 5e-5);
        // huge d_max: line of sight dominates
        let t = theta_max(6921.0, RE, 1e6).unwrap();
        assert!((t - 2.0 * acos(RE / 6921.0)).abs() < 1e-15);
        assert!(theta_max(RE, RE, 3000.0).is_err());
    }

    #[test]
    fn contact_cdf_examples() {
        assert_eq!(contact_cdf(0.0, 100), 0.0);
        assert_eq!(contact_cdf(PI, 100), 1.0);
        assert!((contact_cdf(PI / 2.0, 1) - 0.5).abs() < 1e-15);
        assert!(contact_cdf(0.1, 200) > contact_cdf(0.1, 100));
        assert!(contact_cdf(0.2, 100) > contact_cdf(0.1, 100));
    }

    #[test]
    fn contact_pdf_examples() {
        assert_eq!(contact_pdf(0.0, 10), 0.0);
        assert!((contact_pdf(PI / 2.0, 1) - 0.5).abs() < 1e-15);
        assert!(contact_pdf(PI - 1e-8, 1).is_finite());
        for &n in &[1usize, 10, 650, 11927] {
            let total = integrate_breakpoints(|t| contact_pdf(t, n), &contact_breakpoints(n, PI), 8, 1e-12);
            assert!((total - 1.0).abs() < 1e-10, "n={n}: {total}");
        }
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for &n in &[1usize, 50, 650, 3236] {
            let s = contact_support(n);
            for k in 1..200 {
                let t = s * k as f64 / 200.0;
                let h = 1e-6 * s;
                let fd = (contact_cdf(t + h, n) - contact_cdf(t - h, n)) / (2.0 * h);
                let pdf = contact_pdf(t, n);
                assert!((fd - pdf).abs() <= 1e-6 * pdf.max(1.0), "n={n} t={t}: {fd} vs {pdf}");
            }
        }
    }

    #[test]
    fn contact_mean_reference_values() {
        for (n, expected) in [(11927usize, 0.0162), (650, 0.0695), (3236, 0.0312)] {
            let m = contact_mean(n).unwrap();
            assert!((m.quadrature - expected).abs() < 5e-5, "{n}: {m:?}");
            assert!((m.wallis - expected).abs() < 5e-5, "{n}: {m:?}");
        }
    }

    #[test]
    fn contact_mean_routes_agree() {
        for n in [1usize, 2, 10, 100, 1000, 20000] {
            let m = contact_mean(n).unwrap();
            assert!((m.quadrature - m.wallis).abs() <= 1e-8 * m.wallis, "{n}: {m:?}");
        }
        assert!((contact_mean(1).unwrap().wallis - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn reliable_angle_reference_values() {
        let r = |n, eps| reliable_angle(n, eps, 11927).unwrap();
        assert!((r(9, 0.1) - 0.0386).abs() < 5e-5);
        assert!((r(10, 0.01) - 0.0481).abs() < 5e-5);
        assert!(reliable_angle(5, 1.0 - 1e-15, 100).unwrap() < 0.01);
        assert!(reliable_angle(5, 1e-12, 100).unwrap() > 1.0);
        assert!(reliable_angle(0, 0.1, 10).is_err());
        assert!(reliable_angle(3, 1.0, 10).is_err());
    }

    #[test]
    fn reliable_angle_solves_its_defining_equation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let n = rng.gen_range(1..200);
            let eps = rng.gen_range(1e-4..0.5);
            let n_sat = rng.gen_range(10..20000);
            let tr = reliable_angle(n, eps, n_sat).unwrap();
            let target = exp(log1p(-eps) / n as f64);
            assert!((contact_cdf(tr, n_sat) - target).abs() < 1e-12);
        }
    }

    #[test]
    fn reliable_angle_monotonicity() {
        for n in 1..50 {
            assert!(reliable_angle(n + 1, 0.05, 800).unwrap() >= reliable_angle(n, 0.05, 800).unwrap());
        }
        assert!(reliable_angle(5, 0.05, 801).unwrap() <= reliable_angle(5, 0.05, 800).unwrap());
    }

    #[test]
    fn n_min_examples() {
        assert_eq!(n_min_ideal(PI, 0.43692).unwrap(), 9);
        assert_eq!(n_min_ideal(0.3, 0.3).unwrap(), 2);
        assert_eq!(n_min_ideal(PI, 0.43312).unwrap(), 9);
        assert!(n_min_ideal(0.0, 0.3).is_err());
    }

    #[test]
    fn planner_reference_constellations() {
        let p = plan_hops_eps(PI, 0.01, 11927, tmax(550.0)).unwrap();
        assert_eq!(p.n_hat, 10);
        assert!((p.theta_r - 0.0481).abs() < 5e-5);
        assert!(!p.type1_interrupted);

        let p = plan_hops_eps(PI, 0.1, 3236, tmax(610.0)).unwrap();
        assert_eq!(p.n_hat, 12);
        assert!((p.theta_r - 0.0765).abs() < 5e-5);
        assert_eq!(p.iterations_used, 3);

        let p = plan_hops_eps(PI, 0.01, 650, tmax(1200.0)).unwrap();
        assert!(p.type1_interrupted);
        assert_eq!(p.iterations_used, 0);
        assert!(p.theta_r > 0.5 * tmax(1200.0));
    }

    #[test]
    fn closed_form_matches_planner() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let alt = rng.gen_range(300.0..1500.0);
            let tm = theta_max(RE + alt, RE, rng.gen_range(1000.0..5000.0)).unwrap();
            let theta = rng.gen_range(0.1..PI);
            let eps = rng.gen_range(0.001..0.3);
            let n_sat = rng.gen_range(100..20000);
            let plan = plan_hops_eps(theta, eps, n_sat, tm).unwrap();
            assert_eq!(plan.n_hat, n_hat_closed_form(theta, eps, n_sat, tm).unwrap());
            if !plan.type1_interrupted {
                assert!(plan.n_hat as f64 <= iteration_bound(eps, tm, n_sat));
                assert!(plan.theta_r < 0.5 * (tm - theta / plan.n_hat as f64));
                assert!(2.0 * plan.theta_r <= tm);
            }
        }
    }

    #[test]
    fn iteration_bound_examples() {
        // the reference value is quoted against theta_max / 2 rounded to 0.1994
        let b = iteration_bound(0.1, 2.0 * 0.1994, 650);
        assert!((b - 68.077).abs() < 0.01, "{b}");
        let exact = iteration_bound(0.1, tmax(1200.0), 650);
        assert!((exact - 68.273).abs() < 1e-3, "{exact}");
        assert!(iteration_bound(1e-12, tmax(1200.0), 650) < 1e-6);
        assert!(iteration_bound(0.1, tmax(550.0), 11927) > 1e60);
        assert_eq!(iteration_bound(0.1, tmax(550.0), 100_000), f64::INFINITY);
        let p = plan_hops_eps(PI, 0.1, 3236, tmax(610.0)).unwrap();
        assert!(iteration_bound(0.1, tmax(610.0), 3236) >= p.iterations_used as f64);
    }

    #[test]
    fn oneweb_loose_tolerance_hits_the_upper_bound() {
        let tm = tmax(1200.0);
        let p = plan_hops_eps(PI, 0.1, 650, tm).unwrap();
        assert!(p.type1_interrupted);
        assert_eq!(p.n_hat, 69);
        assert!((p.theta_r - 0.1996).abs() < 5e-5);
        assert_eq!(p.n_hat, ceil(iteration_bound(0.1, tm, 650)) as usize);
    }

    #[test]
    fn min_sats_errors_and_divergence() {
        let tm = tmax(550.0);
        assert!(min_sats_sufficient(PI, tm, 0.1, 0.5 * tm).is_err());
        assert!(min_sats_sufficient(PI, tm, 0.1, 0.0).is_err());
        let near = min_sats_sufficient(PI, tm, 0.1, 0.5 * tm * (1.0 - 1e-9)).unwrap();
        let mid = min_sats_sufficient(PI, tm, 0.1, 0.3 * tm).unwrap();
        assert!(near > mid);
    }

    #[test]
    fn min_sats_grid_values() {
        // frozen from direct evaluation over k = 0..=20
        assert_eq!(min_sats_over_grid(PI, tmax(550.0), 0.1, 20).unwrap(), (837, 20));
        assert_eq!(min_sats_over_grid(PI, tmax(550.0), 0.01, 20).unwrap(), (1185, 20));
        assert_eq!(min_sats_over_grid(PI, tmax(1200.0), 0.1, 20).unwrap(), (1071, 20));
        assert_eq!(min_sats_over_grid(PI, tmax(610.0), 0.01, 20).unwrap(), (1213, 20));
    }

    #[test]
    fn ideal_latency_examples() {
        let d = ideal_latency(PI, 1, 6921.0, 300.0).unwrap();
        assert!((d - 2.0 * 6921.0 / 300.0).abs() < 1e-12);
        let t = ideal_latency(PI, 9, 6921.0, 300.0).unwrap();
        assert!((t - 72.1).abs() < 0.05, "{t}");
        for n in 1..100 {
            assert!(ideal_latency(PI, n + 1, 6921.0, 300.0).unwrap() > ideal_latency(PI, n, 6921.0, 300.0).unwrap());
        }
    }
}
