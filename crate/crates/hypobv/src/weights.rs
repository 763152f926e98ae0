//! Weight-sequence toolkit: Gevrey and custom sequences, growth-condition
//! verdicts, associated functions, power/star transforms, sequence relations
//! and the cutoff truncation index.
//!
//! All sequence arithmetic is done on `log M_p` in doubles; `p!^sigma`
//! overflows doubles near `p = 170`, log-space does not. Every verdict is a
//! statement about the stored truncation, never about the infinite sequence.

use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_PMAX: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("associated-function maximizer hit the truncation boundary at rho = {rho}")]
    TruncationSuspect { rho: f64, maximizer: usize },
    #[error("quotient sequence never reaches 1/rho = {inv_rho} within the truncation")]
    TruncationExceeded { inv_rho: f64 },
    #[error("no admissible constant fit: {0}")]
    NoFit(String),
    #[error("invalid sequence data: {0}")]
    BadData(String),
}

/// A positive sequence stored as `log M_p`, `p = 0..=p_max`.
#[derive(Debug, Clone)]
pub struct WeightSeq {
    log_m: Vec<f64>,
    label: String,
}

fn log_factorial(p: usize) -> f64 {
    (2..=p).map(|k| (k as f64).ln()).sum()
}

impl WeightSeq {
    /// Gevrey sequence `M_p = p!^sigma`.
    pub fn gevrey(sigma: f64, p_max: usize) -> Self {
        assert!(sigma > 0.0);
        let mut log_m = Vec::with_capacity(p_max + 1);
        let mut lfact = 0.0;
        for p in 0..=p_max {
            if p >= 2 {
                lfact += (p as f64).ln();
            }
            log_m.push(sigma * lfact);
        }
        WeightSeq {
            log_m,
            label: format!("gevrey({sigma})"),
        }
    }

    /// Explicit table; rescaled geometrically so that `M_0 = M_1 = 1` (this
    /// preserves log-convexity and all condition verdicts).
    pub fn explicit(values: &[f64]) -> Result<Self, WeightError> {
        if values.len() < 2 {
            return Err(WeightError::BadData("need at least M_0, M_1".into()));
        }
        if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(WeightError::BadData("entries must be positive finite".into()));
        }
        let l0 = values[0].ln();
        let l1 = values[1].ln();
        let log_m = values
            .iter()
            .enumerate()
            .map(|(p, &v)| v.ln() - l0 - p as f64 * (l1 - l0))
            .collect();
        Ok(WeightSeq {
            log_m,
            label: "explicit".into(),
        })
    }

    /// Raw log-values, no normalization; used for transforms.
    pub fn from_log_values(log_m: Vec<f64>, label: String) -> Self {
        assert!(!log_m.is_empty());
        WeightSeq { log_m, label }
    }

    pub fn p_max(&self) -> usize {
        self.log_m.len() - 1
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn log_value(&self, p: usize) -> f64 {
        self.log_m[p]
    }

    pub fn value(&self, p: usize) -> f64 {
        self.log_m[p].exp()
    }

    /// `log m_p = log(M_p / M_{p-1})`, `p >= 1`.
    pub fn log_quotient(&self, p: usize) -> f64 {
        assert!(p >= 1 && p <= self.p_max());
        self.log_m[p] - self.log_m[p - 1]
    }

    /// `M^a` (star = false) or `M^{a,*} = M^a_p / p!` (star = true), same
    /// truncation. The `M_0 = M_1 = 1` normalization is intentionally NOT
    /// re-applied to transforms.
    pub fn transform(&self, a: f64, star: bool) -> WeightSeq {
        assert!(a > 0.0);
        let log_m = self
            .log_m
            .iter()
            .enumerate()
            .map(|(p, &l)| a * l - if star { log_factorial(p) } else { 0.0 })
            .collect();
        let label = if star {
            format!("{}^({a},*)", self.label)
        } else {
            format!("{}^{a}", self.label)
        };
        WeightSeq { log_m, label }
    }

    /// `N asymp 1` detector used by the associated-function convention:
    /// all entries stay within a fixed factor of 1 (sub-linear log drift).
    pub fn is_asymp_one(&self) -> bool {
        self.log_m
            .iter()
            .enumerate()
            .all(|(p, &l)| l.abs() <= 2.0 + 0.01 * p as f64)
    }
}

// ---------------------------------------------------------------------------
// Associated function
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OmegaValue {
    pub value: f64,
    pub maximizer: usize,
}

/// `omega_M(rho) = sup_p log(rho^p M_0 / M_p)`, in log space.
///
/// For `M asymp 1` the step convention applies: `0` for `rho <= 1`,
/// `infinity` for `rho > 1`.
pub fn omega(m: &WeightSeq, rho: f64) -> Result<OmegaValue, WeightError> {
    assert!(rho >= 0.0);
    if m.is_asymp_one() {
        return Ok(OmegaValue {
            value: if rho <= 1.0 { 0.0 } else { f64::INFINITY },
            maximizer: 0,
        });
    }
    if rho == 0.0 {
        // rho^p M_0/M_p: only p = 0 contributes (0^0 = 1 convention)
        return Ok(OmegaValue {
            value: 0.0,
            maximizer: 0,
        });
    }
    let lr = rho.ln();
    let l0 = m.log_value(0);
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    let mut decreases = 0usize;
    for p in 0..=m.p_max() {
        let v = p as f64 * lr + l0 - m.log_value(p);
        if v > best {
            best = v;
            arg = p;
            decreases = 0;
        } else {
            decreases += 1;
            // under (M.1) the argument is unimodal; a sustained decrease
            // means the supremum is behind us
            if decreases > 16 && v < best - 40.0 {
                break;
            }
        }
    }
    if arg == m.p_max() {
        return Err(WeightError::TruncationSuspect {
            rho,
            maximizer: arg,
        });
    }
    Ok(OmegaValue {
        value: best,
        maximizer: arg,
    })
}

/// Truncation index `Gamma(rho) = min{ p : m*_{p+1} >= 1/rho }` of a star
/// sequence.
pub fn gamma_cut(mstar: &WeightSeq, rho: f64) -> Result<usize, WeightError> {
    assert!(rho > 0.0);
    let target = -rho.ln(); // log(1/rho)
    for p in 0..mstar.p_max() {
        if mstar.log_quotient(p + 1) >= target {
            return Ok(p);
        }
    }
    Err(WeightError::TruncationExceeded { inv_rho: 1.0 / rho })
}

/// Both sides of the stationary identity
/// `rho^Gamma M*_Gamma = exp(-omega_{M*}(1/rho))`, returned in log space.
pub fn gamma_stationary_logs(mstar: &WeightSeq, rho: f64) -> Result<(f64, f64), WeightError> {
    let g = gamma_cut(mstar, rho)?;
    let lhs = g as f64 * rho.ln() + mstar.log_value(g) - mstar.log_value(0);
    let om = omega(mstar, 1.0 / rho)?;
    Ok((lhs, -om.value))
}

// ---------------------------------------------------------------------------
// Condition verdicts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "verdict")]
pub enum CondVerdict {
    HoldsOnTruncation {
        constants: BTreeMap<String, f64>,
    },
    Fails {
        witness_p: usize,
        witness_q: Option<usize>,
        detail: String,
    },
    Inconclusive {
        detail: String,
    },
}

impl CondVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, CondVerdict::HoldsOnTruncation { .. })
    }

    pub fn failed(&self) -> bool {
        matches!(self, CondVerdict::Fails { .. })
    }

    fn holds_with(pairs: &[(&str, f64)]) -> Self {
        CondVerdict::HoldsOnTruncation {
            constants: pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Dichotomy {
    /// `p!^{1/a}` strictly below `M` (prec).
    FactorialPrec,
    /// `p!^{1/a} asymp M`.
    FactorialAsymp,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct M4aReport {
    pub a: f64,
    pub verdict: CondVerdict,
    pub dichotomy: Dichotomy,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub label: String,
    pub p_max: usize,
    pub m1: CondVerdict,
    pub m2: CondVerdict,
    pub m2_star: CondVerdict,
    pub m3_prime: CondVerdict,
    pub m3_partial_sums: Vec<f64>,
    pub m4a: Option<M4aReport>,
}

const LOG_EPS: f64 = 1e-9;

pub fn check_conditions(m: &WeightSeq, a: Option<f64>) -> ConditionReport {
    ConditionReport {
        label: m.label().to_string(),
        p_max: m.p_max(),
        m1: check_m1(m),
        m2: check_m2(m),
        m2_star: check_m2_star(m),
        m3_prime: check_m3_prime(m).0,
        m3_partial_sums: check_m3_prime(m).1,
        m4a: a.map(|a| check_m4a(m, a)),
    }
}

/// `(M.1)`: log-convexity `M_p^2 <= M_{p-1} M_{p+1}`.
pub fn check_m1(m: &WeightSeq) -> CondVerdict {
    for p in 1..m.p_max() {
        let lhs = 2.0 * m.log_value(p);
        let rhs = m.log_value(p - 1) + m.log_value(p + 1);
        if lhs > rhs + LOG_EPS * (1.0 + lhs.abs()) {
            return CondVerdict::Fails {
                witness_p: p,
                witness_q: None,
                detail: format!("M_p^2 > M_(p-1) M_(p+1) at p = {p}"),
            };
        }
    }
    CondVerdict::holds_with(&[])
}

/// `(M.2)`: moderate growth `M_{p+q} <= C H^{p+q} M_p M_q`; fits `(C, H)`.
pub fn check_m2(m: &WeightSeq) -> CondVerdict {
    let pm = m.p_max();
    let g = |p: usize, q: usize| m.log_value(p + q) - m.log_value(p) - m.log_value(q);
    let mut log_h_tail: f64 = 0.0;
    let mut log_h_head: f64 = 0.0;
    for p in 0..=pm {
        for q in p..=(pm - p) {
            let slope = g(p, q) / ((p + q).max(1) as f64);
            if p + q >= pm / 2 {
                log_h_tail = log_h_tail.max(slope);
            } else if p + q >= pm / 8 {
                log_h_head = log_h_head.max(slope);
            }
        }
    }
    if log_h_tail > 2.0 * log_h_head + 0.5 && log_h_tail > 1.0 {
        return CondVerdict::Inconclusive {
            detail: format!(
                "fitted log H drifts from {log_h_head:.3} to {log_h_tail:.3} with the truncation"
            ),
        };
    }
    let log_h = log_h_tail.max(0.0);
    let mut log_c: f64 = 0.0;
    for p in 0..=pm {
        for q in p..=(pm - p) {
            log_c = log_c.max(g(p, q) - (p + q) as f64 * log_h);
        }
    }
    CondVerdict::holds_with(&[("C", log_c.exp()), ("H", log_h.exp())])
}

/// `(M.2)*`: `2 m_p <= m_{Np}` for `p >= p_0`; searches small `(p_0, N)`.
pub fn check_m2_star(m: &WeightSeq) -> CondVerdict {
    let pm = m.p_max();
    let log2 = std::f64::consts::LN_2;
    let mut last_witness = 1;
    for n in 2..=8usize {
        let p_hi = pm / n;
        if p_hi < 8 {
            break;
        }
        // smallest p0 from which the inequality holds through the window
        let mut p0 = None;
        let mut run_start = None;
        for p in 1..=p_hi {
            let ok = log2 + m.log_quotient(p) <= m.log_quotient(n * p) + LOG_EPS;
            if ok {
                run_start.get_or_insert(p);
            } else {
                run_start = None;
                last_witness = p;
            }
        }
        if let Some(start) = run_start {
            if start <= p_hi / 2 {
                p0 = Some(start);
            }
        }
        if let Some(p0) = p0 {
            return CondVerdict::holds_with(&[("p0", p0 as f64), ("N", n as f64)]);
        }
    }
    CondVerdict::Fails {
        witness_p: last_witness,
        witness_q: None,
        detail: "2 m_p > m_(N p) persists for N <= 8".into(),
    }
}

/// `(M.3)'`: summability of `M_p^{-1/p}`; returns the verdict and the
/// partial-sum trace (sampled).
pub fn check_m3_prime(m: &WeightSeq) -> (CondVerdict, Vec<f64>) {
    let pm = m.p_max();
    let term = |p: usize| (-m.log_value(p) / p as f64).exp();
    let mut partial = 0.0;
    let mut trace = Vec::new();
    for p in 1..=pm {
        partial += term(p);
        if p % (pm / 16).max(1) == 0 {
            trace.push(partial);
        }
    }
    // decay exponent of the terms on the tail: term ~ p^{-s}
    let p1 = pm / 2;
    let p2 = pm;
    let s = (term(p1).ln() - term(p2).ln()) / ((p2 as f64).ln() - (p1 as f64).ln());
    let verdict = if s >= 1.1 {
        CondVerdict::holds_with(&[("tail_decay_exponent", s)])
    } else if s <= 1.02 {
        CondVerdict::Fails {
            witness_p: pm,
            witness_q: None,
            detail: format!("terms decay like p^-{s:.3}; series diverges on truncation"),
        }
    } else {
        CondVerdict::Inconclusive {
            detail: format!("tail decay exponent {s:.3} too close to 1"),
        }
    };
    (verdict, trace)
}

/// `(M.4)_a`: the quotients of `M^{a,*}` are almost non-decreasing. The
/// required constant is tracked as a function of the truncation; a constant
/// that still grows at the boundary is a failure, a stabilized one a pass.
pub fn check_m4a(m: &WeightSeq, a: f64) -> M4aReport {
    let pm = m.p_max();
    // log m^{a,*}_p = a log m_p - log p
    let lq: Vec<f64> = (1..=pm)
        .map(|p| a * m.log_quotient(p) - (p as f64).ln())
        .collect();
    let required_log_c = |upto: usize| -> (f64, (usize, usize)) {
        let mut best = 0.0f64;
        let mut pair = (1usize, 1usize);
        let mut suffix_min = f64::INFINITY;
        let mut suffix_arg = upto;
        for p in (0..upto).rev() {
            if lq[p] < suffix_min {
                suffix_min = lq[p];
                suffix_arg = p;
            }
            let gap = lq[p] - suffix_min;
            if gap > best {
                best = gap;
                pair = (p + 1, suffix_arg + 1);
            }
        }
        (best, pair)
    };
    let (full, witness) = required_log_c(pm);
    let (half, _) = required_log_c(pm / 2);
    let verdict = if full > half + 1e-6 && full > 0.05 {
        CondVerdict::Fails {
            witness_p: witness.0,
            witness_q: Some(witness.1),
            detail: format!(
                "required constant still grows with the truncation (log C: {half:.4} -> {full:.4})"
            ),
        }
    } else {
        CondVerdict::holds_with(&[("C", full.max(0.0).exp())])
    };
    let fact = WeightSeq::gevrey(1.0 / a, pm);
    let dichotomy = match relation(&fact, m).verdict {
        RelationVerdict::Prec => Dichotomy::FactorialPrec,
        RelationVerdict::Asymp => Dichotomy::FactorialAsymp,
        _ => Dichotomy::Inconclusive,
    };
    M4aReport {
        a,
        verdict,
        dichotomy,
    }
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RelationVerdict {
    /// `M subset N` with some `C, L`, without evidence for more.
    Subset,
    /// `M prec N`: the ratio beats every fixed geometric factor.
    Prec,
    /// Subset both ways.
    Asymp,
    /// No subset relation `M -> N` on the truncation.
    None,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationResult {
    pub verdict: RelationVerdict,
    /// Fitted `L` for `M_p <= C L^p N_p` (tail fit), when finite.
    pub fitted_l_forward: Option<f64>,
    /// Fitted `L` for the reverse containment.
    pub fitted_l_reverse: Option<f64>,
    pub detail: String,
}

/// Heuristic relation of `M` to `N` from the tail of `(N_p/M_p)^{1/p}`.
pub fn relation(m: &WeightSeq, n: &WeightSeq) -> RelationResult {
    let pm = m.p_max().min(n.p_max());
    let u = |p: usize| (n.log_value(p) - m.log_value(p)) / p as f64;
    if pm < 16 {
        return RelationResult {
            verdict: RelationVerdict::Inconclusive,
            fitted_l_forward: None,
            fitted_l_reverse: None,
            detail: "truncation too short".into(),
        };
    }
    let u_end = u(pm);
    let u_q3 = u(3 * pm / 4);
    let u_q2 = u(pm / 2);
    let tail_max_neg_u = ((pm / 2)..=pm).map(|p| -u(p)).fold(f64::NEG_INFINITY, f64::max);
    let tail_max_u = ((pm / 2)..=pm).map(u).fold(f64::NEG_INFINITY, f64::max);
    let head_max_u = (1..=(pm / 4)).map(u).fold(f64::NEG_INFINITY, f64::max);
    let tail_min_u = ((3 * pm / 4)..=pm).map(u).fold(f64::INFINITY, f64::min);

    let jitter = 0.02 * (1.0 + u_end.abs());
    let rising = u_end - u_q3 > jitter && u_q3 - u_q2 > jitter && tail_min_u > head_max_u + jitter;
    let falling =
        u_q3 - u_end > jitter && u_q2 - u_q3 > jitter && tail_min_u < -head_max_u.abs() - 1.0;
    let stable = (u_end - u_q2).abs() <= jitter && (u_end - u_q3).abs() <= jitter;

    let fwd = Some(tail_max_neg_u.exp());
    let rev = Some(tail_max_u.exp());
    if rising {
        RelationResult {
            verdict: RelationVerdict::Prec,
            fitted_l_forward: fwd,
            fitted_l_reverse: None,
            detail: format!("(N/M)^(1/p) grows through the last quartile (u: {u_q2:.3} -> {u_end:.3})"),
        }
    } else if stable {
        RelationResult {
            verdict: RelationVerdict::Asymp,
            fitted_l_forward: fwd,
            fitted_l_reverse: rev,
            detail: format!("(N/M)^(1/p) stabilizes near {u_end:.4} in log"),
        }
    } else if falling {
        RelationResult {
            verdict: RelationVerdict::None,
            fitted_l_forward: None,
            fitted_l_reverse: rev,
            detail: "(N/M)^(1/p) falls without bound; reverse containment only".into(),
        }
    } else if tail_min_u > head_max_u - jitter {
        RelationResult {
            verdict: RelationVerdict::Subset,
            fitted_l_forward: fwd,
            fitted_l_reverse: None,
            detail: "bounded below on the tail without a stable limit".into(),
        }
    } else {
        RelationResult {
            verdict: RelationVerdict::Inconclusive,
            fitted_l_forward: None,
            fitted_l_reverse: None,
            detail: "tail behavior mixed on the truncation".into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Floor-power fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FloorPowerFit {
    pub c: f64,
    pub l: f64,
    pub max_p: usize,
}

/// Fits `(C, L)` with `M_{floor(a p)} <= C L^p M^a_p` over the checkable range.
pub fn floor_power_fit(m: &WeightSeq, a: f64) -> Result<FloorPowerFit, WeightError> {
    assert!(a > 0.0);
    let pm = m.p_max();
    let p_eff = ((pm as f64) / a.max(1.0)).floor() as usize;
    if p_eff < 8 {
        return Err(WeightError::NoFit("truncation too short for this a".into()));
    }
    let w = |p: usize| m.log_value((a * p as f64).floor() as usize) - a * m.log_value(p);
    let slope = ((w(p_eff) - w(p_eff / 2)) / (p_eff as f64 / 2.0)).max(0.0);
    // candidate L grid up to just past the tail slope; C is minimal per candidate
    let candidates: Vec<(f64, f64, usize)> = (0..=9)
        .map(|j| {
            let log_l = slope * j as f64 / 8.0;
            let mut log_c = 0.0f64;
            let mut arg = 0usize;
            for p in 0..=p_eff {
                let v = w(p) - p as f64 * log_l;
                if v > log_c {
                    log_c = v;
                    arg = p;
                }
            }
            (log_l, log_c, arg)
        })
        .collect();
    let c_floor = candidates
        .iter()
        .map(|&(_, c, _)| c)
        .fold(f64::INFINITY, f64::min);
    // smallest L that is within a couple of nats of the flat regime
    let (log_l, log_c, max_p) = candidates
        .into_iter()
        .find(|&(_, c, _)| c <= c_floor + 2.0)
        .expect("grid is nonempty");
    if log_c > 50.0 {
        return Err(WeightError::NoFit(format!(
            "required constant exp({log_c:.1}) is implausible; preconditions likely violated"
        )));
    }
    Ok(FloorPowerFit {
        c: log_c.exp(),
        l: log_l.exp(),
        max_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms() {
        let m = WeightSeq::gevrey(2.0, 100);
        // gevrey(2)^(2,*) has entries p!^4/p! = p!^3
        let star = m.transform(2.0, true);
        let cube = WeightSeq::gevrey(3.0, 100);
        for p in 0..=100 {
            assert!((star.log_value(p) - cube.log_value(p)).abs() < 1e-9);
        }
        // a = 1, no star: identity
        let id = m.transform(1.0, false);
        for p in 0..=100 {
            assert_eq!(id.log_value(p), m.log_value(p));
        }
        // gevrey(1)^(1,*) is the constant sequence 1
        let flat = WeightSeq::gevrey(1.0, 100).transform(1.0, true);
        assert!(flat.is_asymp_one());
        for p in 0..=100 {
            assert!(flat.log_value(p).abs() < 1e-9);
        }
    }

    #[test]
    fn m1_and_planted_violation() {
        let m = WeightSeq::gevrey(2.0, DEFAULT_PMAX);
        assert!(check_m1(&m).holds());
        // plant M_2^2 > M_1 M_3
        let mut vals = vec![1.0, 1.0, 10.0, 20.0, 2000.0, 300000.0];
        vals.extend((6..60).map(|p| (p as f64).powf(2.0 * p as f64)));
        let bad = WeightSeq::explicit(&vals).unwrap();
        match check_m1(&bad) {
            CondVerdict::Fails { witness_p, .. } => assert_eq!(witness_p, 2),
            v => panic!("expected failure, got {v:?}"),
        }
    }

    #[test]
    fn m2_fit_for_gevrey() {
        let m = WeightSeq::gevrey(2.0, 200);
        match check_m2(&m) {
            CondVerdict::HoldsOnTruncation { constants } => {
                let h = constants["H"];
                // (p+q)! <= 2^(p+q) p! q! gives H = 2^sigma = 4
                assert!(h <= 4.0 + 1e-6, "H = {h}");
                assert!(h > 3.0, "H = {h}");
                assert!(constants["C"] < 1.5);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn m2_star_and_m3_prime() {
        let m = WeightSeq::gevrey(2.0, DEFAULT_PMAX);
        assert!(check_m2_star(&m).holds());
        let (v, _) = check_m3_prime(&m);
        assert!(v.holds());
        // sigma = 1: divergent on truncation
        let m1 = WeightSeq::gevrey(1.0, DEFAULT_PMAX);
        let (v, _) = check_m3_prime(&m1);
        assert!(v.failed());
        // geometric sequence fails (M.2)*
        let geo = WeightSeq::from_log_values(
            (0..=200).map(|p| p as f64 * 0.7).collect(),
            "2.01^p".into(),
        );
        assert!(check_m2_star(&geo).failed());
    }

    #[test]
    fn m4a_matches_sigma_threshold() {
        for &(sigma, a, expect) in &[
            (2.0f64, 1.0f64, true),
            (1.2, 0.5, false),
            (1.2, 1.0, true),
            (1.5, 0.5, false),
            (2.0, 0.5, true),
            (3.0, 2.0, true),
            (0.8, 1.0, false),
        ] {
            let m = WeightSeq::gevrey(sigma, DEFAULT_PMAX);
            let rep = check_m4a(&m, a);
            assert_eq!(
                rep.verdict.holds(),
                expect,
                "gevrey({sigma}), a = {a}: {:?}",
                rep.verdict
            );
            if expect {
                if let CondVerdict::HoldsOnTruncation { constants } = &rep.verdict {
                    assert!((constants["C"] - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn omega_examples() {
        // omega(1) = 0 for nondecreasing M with M_0 = 1
        let m = WeightSeq::gevrey(2.0, DEFAULT_PMAX);
        let v = omega(&m, 1.0).unwrap();
        assert_eq!(v.value, 0.0);
        // omega_{p!^2}(4) = log 4, maximizer in {1, 2}
        let v = omega(&m, 4.0).unwrap();
        assert!((v.value - 4.0f64.ln()).abs() < 1e-12);
        assert!(v.maximizer == 1 || v.maximizer == 2);
        // step convention
        let flat = WeightSeq::gevrey(1.0, 100).transform(1.0, true);
        assert_eq!(omega(&flat, 2.0).unwrap().value, f64::INFINITY);
        assert_eq!(omega(&flat, 0.5).unwrap().value, 0.0);
        // truncation suspect for huge rho
        let small = WeightSeq::gevrey(2.0, 60);
        assert!(matches!(
            omega(&small, 1e200),
            Err(WeightError::TruncationSuspect { .. })
        ));
    }

    #[test]
    fn omega_monotone_and_convex_in_log_rho() {
        let m = WeightSeq::gevrey(1.5, 40_000);
        let mut prev = -1.0;
        let mut vals = Vec::new();
        for k in 0..24 {
            let rho = 10f64.powf(k as f64 * 0.25);
            let v = omega(&m, rho).unwrap().value;
            assert!(v >= prev - 1e-12, "omega not nondecreasing");
            prev = v;
            vals.push(v);
        }
        // discrete convexity in log rho
        for w in vals.windows(3) {
            assert!(w[1] <= (w[0] + w[2]) / 2.0 + 1e-9);
        }
        // log rho = o(omega): ratio shrinks along powers of 10
        let r1 = 10f64.ln() / omega(&m, 10.0).unwrap().value.max(1e-12);
        let r2 = 1e4f64.ln() / omega(&m, 1e4).unwrap().value;
        let r3 = 1e6f64.ln() / omega(&m, 1e6).unwrap().value;
        assert!(r2 < r1 && r3 < r2);
    }

    #[test]
    fn omega_m2_functional_inequality() {
        let m = WeightSeq::gevrey(2.0, DEFAULT_PMAX);
        let (c, h) = match check_m2(&m) {
            CondVerdict::HoldsOnTruncation { constants } => (constants["C"], constants["H"]),
            _ => unreachable!(),
        };
        for k in 0..10 {
            let rho = 2f64.powi(k);
            let lhs = 2.0 * omega(&m, rho).unwrap().value;
            let rhs = omega(&m, h * rho).unwrap().value + c.ln();
            assert!(lhs <= rhs + 1e-9, "2 omega(rho) > omega(H rho) + log C at rho = {rho}");
        }
    }

    #[test]
    fn gamma_cut_examples() {
        // Mstar = p!^3: Gamma(1/100) = 4, the smallest p with (p+1)^3 >= 100
        let mstar = WeightSeq::gevrey(2.0, DEFAULT_PMAX).transform(2.0, true);
        assert_eq!(gamma_cut(&mstar, 0.01).unwrap(), 4);
        // rho >= 1/m*_1 = 1 gives Gamma = 0
        assert_eq!(gamma_cut(&mstar, 1.0).unwrap(), 0);
        assert_eq!(gamma_cut(&mstar, 10.0).unwrap(), 0);
        // stationary identity at rho = 1/100
        let (lhs, rhs) = gamma_stationary_logs(&mstar, 0.01).unwrap();
        assert!((lhs - rhs).abs() < 1e-10, "stationary gap {lhs} vs {rhs}");
        // both sides equal 1.3824e-4 here
        assert!((lhs.exp() - 1.3824e-4).abs() < 1e-8);
        // truncation exhaustion
        let flat = WeightSeq::gevrey(1.0, 100).transform(1.0, true);
        assert!(matches!(
            gamma_cut(&flat, 0.5),
            Err(WeightError::TruncationExceeded { .. })
        ));
    }

    #[test]
    fn relation_examples() {
        let fac1 = WeightSeq::gevrey(1.0, DEFAULT_PMAX);
        let fac2 = WeightSeq::gevrey(2.0, DEFAULT_PMAX);
        assert_eq!(relation(&fac1, &fac2).verdict, RelationVerdict::Prec);
        assert_eq!(relation(&fac2, &fac2).verdict, RelationVerdict::Asymp);
        // M = 2^p p!, N = p!: asymp with L = 2 and 1/2
        let m = WeightSeq::from_log_values(
            (0..=DEFAULT_PMAX)
                .map(|p| p as f64 * std::f64::consts::LN_2 + log_factorial(p))
                .collect(),
            "2^p p!".into(),
        );
        let r = relation(&m, &fac1);
        assert_eq!(r.verdict, RelationVerdict::Asymp);
        let lf = r.fitted_l_forward.unwrap();
        let lr = r.fitted_l_reverse.unwrap();
        assert!((lf - 2.0).abs() < 0.05, "forward L = {lf}");
        assert!((lr - 0.5).abs() < 0.02, "reverse L = {lr}");
        // reversed prec gives none
        assert_eq!(relation(&fac2, &fac1).verdict, RelationVerdict::None);
    }

    #[test]
    fn floor_power_fits() {
        let m = WeightSeq::gevrey(2.0, DEFAULT_PMAX);
        // a = 1: equality with (C, L) = (1, 1)
        let fit = floor_power_fit(&m, 1.0).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-9 && (fit.l - 1.0).abs() < 1e-9);
        // a = 2: the binomial bound (2p)! <= 4^p (p!)^2 makes L = 16 admissible
        let fit = floor_power_fit(&m, 2.0).unwrap();
        assert!(fit.l <= 16.0 + 1e-6, "L = {}", fit.l);
        assert!(fit.c < 10.0);
        // the fitted pair actually dominates on the checkable range
        let p_eff = DEFAULT_PMAX / 2;
        for p in 0..=p_eff {
            let lhs = m.log_value(2 * p);
            let rhs = fit.c.ln() + p as f64 * fit.l.ln() + 2.0 * m.log_value(p);
            assert!(lhs <= rhs + 1e-6, "fit violated at p = {p}");
        }
        // a = 0.5 fit exists
        let fit = floor_power_fit(&m, 0.5).unwrap();
        assert!(fit.c >= 1.0 - 1e-9);
    }
}
