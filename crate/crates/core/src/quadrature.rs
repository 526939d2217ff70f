//! Adaptive Simpson quadrature in one and two dimensions.
//!
//! Contact-angle densities for large constellations are spikes that occupy a
//! tiny fraction of the integration range, so callers split the range into
//! panels (see [`integrate_panels`]) to make sure the initial Simpson samples
//! see the spike.

const MAX_DEPTH: u32 = 48;

struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn refine<F: Fn(f64) -> f64>(f: &F, seg: Segment, tol: f64, depth: u32) -> f64 {
    let Segment { a, b, fa, fm, fb, whole } = seg;
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // tolerance below what double precision can resolve on this segment
    let floor = 16.0 * f64::EPSILON * libm::fabs(left + right);
    if depth == 0 || libm::fabs(delta) <= (15.0 * tol).max(floor) {
        return left + right + delta / 15.0;
    }
    refine(f, Segment { a, b: m, fa, fm: flm, fb: fm, whole: left }, 0.5 * tol, depth - 1)
        + refine(f, Segment { a: m, b, fa: fm, fm: frm, fb, whole: right }, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    refine(&f, Segment { a, b, fa, fm, fb, whole }, tol, MAX_DEPTH)
}

/// Splits `[a, b]` into `panels` equal pieces and integrates each adaptively,
/// sharing the tolerance budget evenly.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let tol = tol / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == panels { b } else { lo + h };
            adaptive_simpson(&f, lo, hi, tol)
        })
        .sum()
}

/// Integrates over a list of breakpoints `edges`, each consecutive interval
/// split into `panels` pieces.
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(f: F, edges: &[f64], panels: usize, tol: f64) -> f64 {
    if edges.len() < 2 {
        return 0.0;
    }
    let pieces = (edges.len() - 1) as f64;
    edges.windows(2).filter(|w| w[1] > w[0]).map(|w| integrate_panels(&f, w[0], w[1], panels, tol / pieces)).sum()
}
