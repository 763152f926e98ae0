//! Globally adaptive quadrature on panels with an embedded Gauss-Legendre
//! pair (10/20 nodes). Nodes are generated at startup by Newton iteration on
//! the Legendre recurrence, so no tabulated constants are needed.

use crate::rat::C64;
use num_complex::Complex;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not reach tolerance {tol} (error estimate {err}) on [{a}, {b}]")]
    NoConvergence { a: f64, b: f64, tol: f64, err: f64 },
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            // Chebyshev initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..64 {
                let (p, dp) = legendre_and_deriv(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_and_deriv(n, x);
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        GaussRule { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, f: &mut F) -> C64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = Complex::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn rules() -> &'static (GaussRule, GaussRule) {
    static RULES: OnceLock<(GaussRule, GaussRule)> = OnceLock::new();
    RULES.get_or_init(|| (GaussRule::new(10), GaussRule::new(20)))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive integration of a complex-valued integrand over `[a, b]` to an
/// absolute tolerance. Bisects the worst panel first.
pub fn integrate_1d<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult, QuadError> {
    integrate_segments(&mut f, &[(a, b)], tol, max_panels)
}

/// Same, but starting from a list of panels (breakpoints already inserted).
pub fn integrate_segments<F: FnMut(f64) -> C64>(
    f: &mut F,
    segments: &[(f64, f64)],
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult, QuadError> {
    let (low, high) = rules();
    let mut evals = 0usize;
    let mut eval_panel = |a: f64, b: f64, f: &mut F| -> (C64, f64) {
        let coarse = low.integrate(a, b, f);
        let fine = high.integrate(a, b, f);
        evals += low.nodes.len() + high.nodes.len();
        (fine, (fine - coarse).norm())
    };

    struct Panel {
        a: f64,
        b: f64,
        value: C64,
        err: f64,
    }
    let mut panels: Vec<Panel> = Vec::new();
    for &(a, b) in segments {
        if a == b {
            continue;
        }
        let (v, e) = eval_panel(a, b, f);
        panels.push(Panel { a, b, value: v, err: e });
    }
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol {
            break;
        }
        if panels.len() >= max_panels {
            return Err(QuadError::NoConvergence {
                a: segments.first().map(|s| s.0).unwrap_or(0.0),
                b: segments.last().map(|s| s.1).unwrap_or(0.0),
                tol,
                err: total_err,
            });
        }
        // split the worst panel
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("nonempty");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval at float resolution; accept the local estimate
            let (v, _) = eval_panel(a, b, f);
            panels.push(Panel { a, b, value: v, err: 0.0 });
            continue;
        }
        for (lo, hi) in [(a, mid), (mid, b)] {
            let (v, e) = eval_panel(lo, hi, f);
            panels.push(Panel { a: lo, b: hi, value: v, err: e });
        }
    }
    let value = panels.iter().fold(Complex::new(0.0, 0.0), |s, p| s + p.value);
    let error_estimate = panels.iter().map(|p| p.err).sum();
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations: evals,
    })
}

/// Iterated 2D integral `int_{t in segments} int_{x in [xa, xb]} f(x, t)`.
/// The inner tolerance is tightened relative to the outer one.
pub fn integrate_2d<F: FnMut(f64, f64) -> C64>(
    mut f: F,
    xa: f64,
    xb: f64,
    t_segments: &[(f64, f64)],
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult, QuadError> {
    let inner_tol = tol * 0.05;
    let mut inner_error: f64 = 0.0;
    let mut inner_evals = 0usize;
    let mut failed: Option<QuadError> = None;
    let mut outer = |t: f64| -> C64 {
        match integrate_1d(|x| f(x, t), xa, xb, inner_tol, max_panels) {
            Ok(r) => {
                inner_error = inner_error.max(r.error_estimate);
                inner_evals += r.evaluations;
                r.value
            }
            Err(e) => {
                failed.get_or_insert(e);
                Complex::new(0.0, 0.0)
            }
        }
    };
    let result = integrate_segments(&mut outer, t_segments, tol, max_panels)?;
    if let Some(e) = failed {
        return Err(e);
    }
    Ok(QuadResult {
        value: result.value,
        error_estimate: result.error_estimate + inner_error,
        evaluations: result.evaluations * inner_evals.max(1) / result.evaluations.max(1),
    })
}

/// Composite fixed-order rule over `n_panels` equal panels; used for smooth
/// frequency integrals where adaptivity is unnecessary but determinism and
/// known cost matter.
pub fn integrate_fixed<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    n_panels: usize,
) -> C64 {
    let (_, high) = rules();
    let mut acc = Complex::new(0.0, 0.0);
    let h = (b - a) / n_panels as f64;
    for i in 0..n_panels {
        let lo = a + i as f64 * h;
        acc += high.integrate(lo, lo + h, &mut f);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = GaussRule::new(10);
        // degree-19 polynomial must integrate exactly
        let mut f = |x: f64| Complex::new(x.powi(19) + 3.0 * x.powi(8) + 1.0, 0.0);
        let v = rule.integrate(-1.0, 1.0, &mut f);
        let expected = 2.0 * (3.0 / 9.0 + 1.0);
        assert!((v.re - expected).abs() < 1e-13);
    }

    #[test]
    fn adaptive_gaussian() {
        let r = integrate_1d(
            |x| Complex::new((-x * x).exp(), 0.0),
            -8.0,
            8.0,
            1e-10,
            1000,
        )
        .unwrap();
        assert!((r.value.re - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn adaptive_near_singular() {
        // steep but integrable: int_a^1 x^{-1/2} dx = 2 (1 - sqrt(a))
        let a = 1e-12;
        let r = integrate_1d(
            |x| Complex::new(x.powf(-0.5), 0.0),
            a,
            1.0,
            1e-8,
            20000,
        )
        .unwrap();
        let expected = 2.0 * (1.0 - a.sqrt());
        assert!((r.value.re - expected).abs() < 1e-7);
    }

    #[test]
    fn two_dimensional_product() {
        let r = integrate_2d(
            |x, t| Complex::new((-x * x - t * t).exp(), 0.0),
            -6.0,
            6.0,
            &[(-6.0, 0.0), (0.0, 6.0)],
            1e-9,
            4000,
        )
        .unwrap();
        assert!((r.value.re - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn reports_non_convergence() {
        // panel budget too small for the near-singularity
        let r = integrate_1d(
            |x| Complex::new(1.0 / x, 0.0),
            1e-14,
            1.0,
            1e-10,
            12,
        );
        assert!(matches!(r, Err(QuadError::NoConvergence { .. })));
    }
}
