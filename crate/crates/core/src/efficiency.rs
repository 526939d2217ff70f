//! Efficiency: ideal latency over achieved latency, measured from routes or
//! approximated from the contact-angle distribution.

use core::f64::consts::PI;

use libm::{cos, sin, sqrt};

use crate::analysis::{contact_breakpoints, contact_pdf};
use crate::quadrature::{adaptive_simpson, integrate_breakpoints};
use crate::{Error, Result};

const OUTER_TOL: f64 = 1e-8;
/// Inner integrals are scaled by the outer density, so their tolerance is
/// divided by it to keep the outer integrand accurate to this.
const INNER_TOL: f64 = 1e-9;
const PANELS: usize = 4;

/// Which angle is passed to the perturbation factor in [`efficiency_contour`].
///
/// `AsPrinted` passes half the hop angle, `theta / (2 n_hat)`; `FullHop`
/// passes the hop angle `theta / n_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HopAngleConvention {
    #[default]
    AsPrinted,
    FullHop,
}

fn check_args(theta_h: f64, n_sat: usize, theta_max: f64) -> Result<()> {
    if !(theta_h > 0.0 && theta_h < PI) {
        return Err(Error::InvalidInput("theta_h must lie in (0, pi)"));
    }
    if n_sat == 0 {
        return Err(Error::InvalidInput("n_sat must be at least 1"));
    }
    if !(theta_max > 0.0 && theta_max <= PI) {
        return Err(Error::InvalidInput("theta_max must lie in (0, pi]"));
    }
    Ok(())
}

/// Integrand of the mean perturbed chord, normalized by the unperturbed one:
/// `sqrt(1 - cos a cos h - sin a sin h cos phi)` written without cancellation.
pub(crate) fn alpha_kernel(theta: f64, theta_h: f64, phi: f64) -> f64 {
    let d = sin(0.5 * (theta - theta_h));
    let s = sin(0.5 * phi);
    sqrt(2.0 * d * d + 2.0 * sin(theta) * sin(theta_h) * s * s)
}

/// Mean chord factor when one end of a chord of dome angle `theta_h` is
/// displaced by a contact angle in a uniformly random direction.
///
/// Double integral over `theta in [0, theta_max]`, `phi in [0, PI]` of
/// `(sqrt 2 / 2 PI) f(theta) / sin(theta_h / 2) * kernel`. Tends to 1 as
/// the contact angle concentrates at 0.
pub fn alpha_bar(theta_h: f64, n_sat: usize, theta_max: f64) -> Result<f64> {
    check_args(theta_h, n_sat, theta_max)?;
    let inner = |theta: f64| {
        let f = contact_pdf(theta, n_sat);
        if f == 0.0 {
            return 0.0;
        }
        f * adaptive_simpson(|phi| alpha_kernel(theta, theta_h, phi), 0.0, PI, INNER_TOL / f.max(1.0))
    };
    let edges = contact_breakpoints(n_sat, theta_max);
    let total = integrate_breakpoints(inner, &edges, PANELS, OUTER_TOL);
    Ok(core::f64::consts::SQRT_2 / (2.0 * PI) * total / sin(0.5 * theta_h))
}

/// Four-term form averaged over two independent contact angles by double quadrature.
pub fn eta(theta_h: f64, n_sat: usize, theta_max: f64) -> Result<f64> {
    check_args(theta_h, n_sat, theta_max)?;
    let edges = contact_breakpoints(n_sat, theta_max);
    let h = theta_h;
    let inner = |t1: f64| {
        let f1 = contact_pdf(t1, n_sat);
        if f1 == 0.0 {
            return 0.0;
        }
        let g = |t2: f64| {
            contact_pdf(t2, n_sat) * (sin(h - t1 - t2) + sin(h + t1 - t2) + sin(h - t1 + t2) + sin(h + t1 + t2))
        };
        0.25 * f1 * integrate_breakpoints(g, &edges, PANELS, INNER_TOL / f1.max(1.0))
    };
    Ok(integrate_breakpoints(inner, &edges, PANELS, OUTER_TOL))
}

/// `E[cos theta_0]` truncated to `[0, theta_max]`.
pub fn truncated_mean_cos(n_sat: usize, theta_max: f64) -> f64 {
    let edges = contact_breakpoints(n_sat, theta_max);
    integrate_breakpoints(|t| contact_pdf(t, n_sat) * cos(t), &edges, PANELS, 1e-12)
}

/// [`eta`] reduced by product-to-sum: `sin(theta_h) * E[cos theta_0]^2`.
pub fn eta_closed_form(theta_h: f64, n_sat: usize, theta_max: f64) -> Result<f64> {
    check_args(theta_h, n_sat, theta_max)?;
    let m = truncated_mean_cos(n_sat, theta_max);
    Ok(sin(theta_h) * m * m)
}

fn check_hops(theta_02n: f64, n_min: usize, n_hat: usize) -> Result<()> {
    if n_min == 0 || n_hat < n_min {
        return Err(Error::InvalidInput("need n_hat >= n_min >= 1"));
    }
    if !(theta_02n > 0.0 && theta_02n <= PI) {
        return Err(Error::InvalidInput("theta_02n must lie in (0, pi]"));
    }
    Ok(())
}

/// Efficiency approximation from the mean perturbed chord:
/// `N_min sin(theta / 2 N_min) / (n_hat sin(theta / 2 n_hat) (2 alpha_bar - 1))`.
pub fn efficiency_contour(
    theta_02n: f64,
    n_min: usize,
    n_hat: usize,
    n_sat: usize,
    theta_max: f64,
    convention: HopAngleConvention,
) -> Result<f64> {
    check_hops(theta_02n, n_min, n_hat)?;
    let half = theta_02n / (2.0 * n_hat as f64);
    let arg = match convention {
        HopAngleConvention::AsPrinted => half,
        HopAngleConvention::FullHop => 2.0 * half,
    };
    let a = alpha_bar(arg, n_sat, theta_max)?;
    let ideal = n_min as f64 * sin(theta_02n / (2.0 * n_min as f64));
    Ok(ideal / (n_hat as f64 * sin(half) * (2.0 * a - 1.0)))
}

/// Efficiency approximation from the binomial contact model:
/// `N_min sin(theta / 2 N_min) / (n_hat eta(theta / 2 n_hat))`.
pub fn efficiency_binomial(theta_02n: f64, n_min: usize, n_hat: usize, n_sat: usize, theta_max: f64) -> Result<f64> {
    check_hops(theta_02n, n_min, n_hat)?;
    let e = eta(theta_02n / (2.0 * n_hat as f64), n_sat, theta_max)?;
    let ideal = n_min as f64 * sin(theta_02n / (2.0 * n_min as f64));
    Ok(ideal / (n_hat as f64 * e))
}

/// `ideal / achieved`. Errors when the achieved latency undercuts the ideal.
pub fn measured_efficiency(ideal_ms: f64, achieved_ms: f64) -> Result<f64> {
    if !(ideal_ms > 0.0 && achieved_ms > 0.0) {
        return Err(Error::InvalidInput("latencies must be positive"));
    }
    if achieved_ms < ideal_ms - 1e-9 {
        return Err(Error::Internal("achieved latency below the ideal lower bound"));
    }
    Ok(ideal_ms / achieved_ms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EfficiencyParams {
    pub theta_02n: f64,
    pub n_min: usize,
    pub n_hat: usize,
    pub n_sat: usize,
    pub theta_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EfficiencyEstimates {
    pub e1_contour: f64,
    pub e2_binomial: f64,
    pub e_measured: Option<f64>,
    pub params: EfficiencyParams,
}

impl EfficiencyEstimates {
    pub fn compute(params: EfficiencyParams, convention: HopAngleConvention) -> Result<Self> {
        let EfficiencyParams { theta_02n, n_min, n_hat, n_sat, theta_max } = params;
        Ok(Self {
            e1_contour: efficiency_contour(theta_02n, n_min, n_hat, n_sat, theta_max, convention)?,
            e2_binomial: efficiency_binomial(theta_02n, n_min, n_hat, n_sat, theta_max)?,
            e_measured: None,
            params,
        })
    }

    pub fn with_measured(mut self, e: f64) -> Self {
        self.e_measured = Some(e);
        self
    }
}
