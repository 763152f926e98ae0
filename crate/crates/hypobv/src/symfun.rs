//! A differentiation-closed, exactly integrable test-function class: finite
//! sums of Hermite-Gaussian terms `c * (x-c0)^alpha * exp(-a|x-c0|^2)`, plus
//! the scalar cutoff bump used by the extension builders.
//!
//! Widths, centers and coefficients are rational, so derivatives, operator
//! applications and mutual `L^2(R^d)`-type pairings are exact up to the final
//! float conversion.

use crate::polyops::{MultiIndex, MultiPoly};
use crate::rat::{
    crat_to_c64, factorial, neg_i_pow, rat_from_string, rat_to_f64, rat_to_string, CRat, Rat, C64,
};
use crate::weights::WeightSeq;
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymFunError {
    #[error("operator depends on t; only x-operators act on test functions")]
    TDependence,
    #[error("bump derivative order {got} exceeds configured maximum {max}")]
    OrderTooHigh { got: usize, max: usize },
    #[error("invalid test-function data: {0}")]
    BadData(String),
}

/// Identifies a Hermite-Gaussian shape: `(x-center)^exp * exp(-width*|x-center|^2)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct TermKey {
    width: Rat,
    center: Vec<Rat>,
    exp: MultiIndex,
}

/// Finite sum of Hermite-Gaussian terms on `R^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymFun {
    d: usize,
    terms: BTreeMap<TermKey, CRat>,
}

impl SymFun {
    pub fn zero(d: usize) -> Self {
        SymFun {
            d,
            terms: BTreeMap::new(),
        }
    }

    /// Plain Gaussian `exp(-width |x - center|^2)`.
    pub fn gaussian(width: Rat, center: Vec<Rat>) -> Self {
        let d = center.len();
        let mut f = SymFun::zero(d);
        f.add_term(
            TermKey {
                width,
                center,
                exp: MultiIndex::zeros(d),
            },
            CRat::one(),
        );
        f
    }

    /// `coeff * (x-center)^exp * exp(-width |x-center|^2)`.
    pub fn hermite_term(coeff: CRat, exp: Vec<u32>, width: Rat, center: Vec<Rat>) -> Self {
        let d = center.len();
        assert_eq!(exp.len(), d);
        assert!(width > Rat::zero(), "width must be positive");
        let mut f = SymFun::zero(d);
        f.add_term(
            TermKey {
                width,
                center,
                exp: MultiIndex(exp),
            },
            coeff,
        );
        f
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, key: TermKey, c: CRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &SymFun) -> SymFun {
        assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &SymFun) -> SymFun {
        self.add(&other.scale(&-CRat::one()))
    }

    pub fn scale(&self, c: &CRat) -> SymFun {
        if c.is_zero() {
            return SymFun::zero(self.d);
        }
        let mut out = SymFun::zero(self.d);
        for (k, a) in &self.terms {
            out.add_term(k.clone(), a.clone() * c.clone());
        }
        out
    }

    /// Exact `partial_{x_j}`; stays in the class.
    pub fn differentiate(&self, j: usize) -> SymFun {
        assert!(j < self.d);
        let mut out = SymFun::zero(self.d);
        for (k, c) in &self.terms {
            // power rule part: alpha_j (x-c)^{alpha - e_j}
            if k.exp.0[j] > 0 {
                let mut exp = k.exp.0.clone();
                exp[j] -= 1;
                let factor = CRat::new(Rat::from_integer(k.exp.0[j].into()), Rat::zero());
                out.add_term(
                    TermKey {
                        width: k.width.clone(),
                        center: k.center.clone(),
                        exp: MultiIndex(exp),
                    },
                    c.clone() * factor,
                );
            }
            // envelope part: -2a (x-c)^{alpha + e_j}
            let mut exp = k.exp.0.clone();
            exp[j] += 1;
            let factor = CRat::new(-Rat::from_integer(2.into()) * k.width.clone(), Rat::zero());
            out.add_term(
                TermKey {
                    width: k.width.clone(),
                    center: k.center.clone(),
                    exp: MultiIndex(exp),
                },
                c.clone() * factor,
            );
        }
        out
    }

    /// Plain `partial^order`.
    pub fn differentiate_multi(&self, order: &[u32]) -> SymFun {
        assert_eq!(order.len(), self.d);
        let mut acc = self.clone();
        for (j, &k) in order.iter().enumerate() {
            for _ in 0..k {
                acc = acc.differentiate(j);
            }
        }
        acc
    }

    /// Multiplication by the coordinate `x_j`; stays in the class.
    pub fn mul_by_var(&self, j: usize) -> SymFun {
        assert!(j < self.d);
        let mut out = SymFun::zero(self.d);
        for (k, c) in &self.terms {
            // x_j = (x_j - c_j) + c_j
            let mut exp = k.exp.0.clone();
            exp[j] += 1;
            out.add_term(
                TermKey {
                    width: k.width.clone(),
                    center: k.center.clone(),
                    exp: MultiIndex(exp),
                },
                c.clone(),
            );
            let shift = CRat::new(k.center[j].clone(), Rat::zero());
            if !shift.is_zero() {
                out.add_term(k.clone(), c.clone() * shift);
            }
        }
        out
    }

    /// Shifts every center by `delta` (translation of the function).
    pub fn translate(&self, delta: &[Rat]) -> SymFun {
        assert_eq!(delta.len(), self.d);
        let mut out = SymFun::zero(self.d);
        for (k, c) in &self.terms {
            let center = k
                .center
                .iter()
                .zip(delta)
                .map(|(a, b)| a.clone() + b.clone())
                .collect();
            out.add_term(
                TermKey {
                    width: k.width.clone(),
                    center,
                    exp: k.exp.clone(),
                },
                c.clone(),
            );
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        assert_eq!(x.len(), self.d);
        let mut acc = Complex::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let a = rat_to_f64(&k.width);
            let mut poly = 1.0;
            let mut r2 = 0.0;
            for j in 0..self.d {
                let dx = x[j] - rat_to_f64(&k.center[j]);
                r2 += dx * dx;
                for _ in 0..k.exp.0[j] {
                    poly *= dx;
                }
            }
            acc += crat_to_c64(c) * poly * (-a * r2).exp();
        }
        acc
    }

    /// Radius beyond which every term is below `tol` in magnitude.
    pub fn support_radius(&self, tol: f64) -> f64 {
        let mut radius: f64 = 1.0;
        for (k, c) in &self.terms {
            let a = rat_to_f64(&k.width);
            let amp = crat_to_c64(c).norm().max(1.0);
            let deg = k.exp.total_degree() as f64;
            let center_norm = k
                .center
                .iter()
                .map(|ci| rat_to_f64(ci).abs())
                .fold(0.0, f64::max);
            // solve amp * r^deg * exp(-a r^2) < tol, crudely and with margin
            let mut r: f64 = 1.0;
            for _ in 0..64 {
                let need = (amp / tol).ln().max(1.0) + deg * r.max(1.0).ln();
                let next = (need / a).sqrt();
                if (next - r).abs() < 1e-9 {
                    break;
                }
                r = next;
            }
            radius = radius.max(center_norm + 1.2 * r);
        }
        radius
    }
}

/// Applies `Q(D_x)` with `D = -i partial`; `Q` may be given in x-variables or
/// as a full-variable polynomial with zero t-degree.
pub fn apply_operator(q: &MultiPoly, f: &SymFun) -> Result<SymFun, SymFunError> {
    let q_x = if q.nvars() == f.d {
        q.clone()
    } else if q.nvars() == f.d + 1 {
        if q.degree_in(f.d) > 0 {
            return Err(SymFunError::TDependence);
        }
        let mut projected = MultiPoly::zero(f.d);
        for (e, c) in q.terms() {
            projected.add_term(MultiIndex(e.0[..f.d].to_vec()), c.clone());
        }
        projected
    } else {
        return Err(SymFunError::BadData(format!(
            "operator arity {} does not match dimension {}",
            q.nvars(),
            f.d
        )));
    };
    let mut out = SymFun::zero(f.d);
    for (beta, c) in q_x.terms() {
        let df = f.differentiate_multi(&beta.0);
        let phase = neg_i_pow(beta.total_degree() as usize);
        out = out.add(&df.scale(&(c.clone() * phase)));
    }
    Ok(out)
}

/// Exact `int_{R^d} f * g dx` via Gaussian moment formulas (bilinear, no
/// conjugation).
pub fn integrate_product(f: &SymFun, g: &SymFun) -> C64 {
    assert_eq!(f.d, g.d);
    let d = f.d;
    let mut acc = Complex::new(0.0, 0.0);
    for (ka, ca) in &f.terms {
        for (kb, cb) in &g.terms {
            let s = ka.width.clone() + kb.width.clone();
            // combined center m = (a*c_a + b*c_b)/s, offset kappa = a*b/s * |c_a - c_b|^2
            let mut mid = Vec::with_capacity(d);
            let mut dist2 = Rat::zero();
            for j in 0..d {
                mid.push(
                    (ka.width.clone() * ka.center[j].clone()
                        + kb.width.clone() * kb.center[j].clone())
                        / s.clone(),
                );
                let diff = ka.center[j].clone() - kb.center[j].clone();
                dist2 += diff.clone() * diff;
            }
            let kappa = ka.width.clone() * kb.width.clone() / s.clone() * dist2;

            // per-axis rational moment sum
            let mut axes_product = Rat::one();
            let mut vanished = false;
            for j in 0..d {
                let m_j = axis_moment_sum(
                    ka.exp.0[j],
                    &(mid[j].clone() - ka.center[j].clone()),
                    kb.exp.0[j],
                    &(mid[j].clone() - kb.center[j].clone()),
                    &s,
                );
                if m_j.is_zero() {
                    vanished = true;
                    break;
                }
                axes_product *= m_j;
            }
            if vanished {
                continue;
            }
            let coeff = ca.clone() * cb.clone() * CRat::new(axes_product, Rat::zero());
            let sf = rat_to_f64(&s);
            let scale = (std::f64::consts::PI / sf).powf(d as f64 / 2.0)
                * (-rat_to_f64(&kappa)).exp();
            acc += crat_to_c64(&coeff) * scale;
        }
    }
    acc
}

/// `int y^gamma exp(-s y^2) dy / sqrt(pi/s)` accumulated over the binomial
/// expansion of `(y + u)^p (y + v)^q`.
fn axis_moment_sum(p: u32, u: &Rat, q: u32, v: &Rat, s: &Rat) -> Rat {
    let mut total = Rat::zero();
    for i in 0..=p {
        for j in 0..=q {
            let gamma = i + j;
            if gamma % 2 == 1 {
                continue;
            }
            let c = binom(p, i) * binom(q, j);
            let shift = u.pow((p - i) as i32) * v.pow((q - j) as i32);
            total += Rat::from_integer(c) * shift * centered_moment(gamma, s);
        }
    }
    total
}

/// `int y^gamma exp(-s y^2) dy = (gamma-1)!!/(2s)^{gamma/2} * sqrt(pi/s)` for
/// even `gamma`; this returns the rational factor only.
fn centered_moment(gamma: u32, s: &Rat) -> Rat {
    let k = gamma / 2;
    let mut dfact = BigInt::one();
    let mut n = gamma as i64 - 1;
    while n > 1 {
        dfact *= BigInt::from(n);
        n -= 2;
    }
    let denom = (Rat::from_integer(2.into()) * s.clone()).pow(k as i32);
    Rat::from_integer(dfact) / denom
}

fn binom(n: u32, k: u32) -> BigInt {
    factorial(n as usize) / (factorial(k as usize) * factorial((n - k) as usize))
}

// ---------------------------------------------------------------------------
// Seminorm
// ---------------------------------------------------------------------------

/// Query for the truncated weighted-derivative seminorm
/// `sup_{|alpha| <= A_max} sup_{x in K} |D^alpha f(x)| / (h^{|alpha|} M_{|alpha|})`.
#[derive(Debug, Clone)]
pub struct SeminormQuery {
    pub weights: WeightSeq,
    pub h: f64,
    /// Box `K`, one `(lo, hi)` pair per axis.
    pub k_box: Vec<(f64, f64)>,
    pub a_max: usize,
    pub grid_per_axis: usize,
}

impl SeminormQuery {
    pub fn new(weights: WeightSeq, h: f64, k_box: Vec<(f64, f64)>, a_max: usize) -> Self {
        SeminormQuery {
            weights,
            h,
            k_box,
            a_max,
            grid_per_axis: 41,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormResult {
    pub value: f64,
    pub max_alpha: Vec<u32>,
    pub max_x: Vec<f64>,
}

/// Truncated seminorm with the maximizing `(alpha, x)` reported, so
/// convergence in `a_max` can be audited.
pub fn seminorm(f: &SymFun, q: &SeminormQuery) -> SeminormResult {
    assert_eq!(q.k_box.len(), f.d);
    let mut best = SeminormResult {
        value: 0.0,
        max_alpha: vec![0; f.d],
        max_x: q.k_box.iter().map(|&(lo, _)| lo).collect(),
    };
    let mut frontier: Vec<(MultiIndex, SymFun)> =
        vec![(MultiIndex::zeros(f.d), f.clone())];
    let mut order = 0usize;
    loop {
        for (alpha, g) in &frontier {
            let weight = q.h.powi(order as i32) * q.weights.value(order);
            let (sup, arg) = sup_on_box(g, &q.k_box, q.grid_per_axis);
            let val = sup / weight;
            if val > best.value {
                best.value = val;
                best.max_alpha = alpha.0.clone();
                best.max_x = arg;
            }
        }
        if order == q.a_max {
            break;
        }
        order += 1;
        // grow the derivative frontier one order, deduplicating by index
        let mut next: BTreeMap<MultiIndex, SymFun> = BTreeMap::new();
        for (alpha, g) in &frontier {
            for j in 0..f.d {
                let mut e = alpha.0.clone();
                e[j] += 1;
                next.entry(MultiIndex(e))
                    .or_insert_with(|| g.differentiate(j));
            }
        }
        frontier = next.into_iter().collect();
    }
    best
}

fn sup_on_box(f: &SymFun, k_box: &[(f64, f64)], n: usize) -> (f64, Vec<f64>) {
    let d = k_box.len();
    let mut idx = vec![0usize; d];
    let mut best = (0.0f64, vec![0.0; d]);
    loop {
        let x: Vec<f64> = (0..d)
            .map(|j| {
                let (lo, hi) = k_box[j];
                if n <= 1 {
                    lo
                } else {
                    lo + (hi - lo) * idx[j] as f64 / (n - 1) as f64
                }
            })
            .collect();
        let v = f.eval(&x).norm();
        if v > best.0 {
            best = (v, x);
        }
        // odometer
        let mut j = 0;
        loop {
            if j == d {
                return best;
            }
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RatJson {
    Text(String),
    Number(f64),
}

impl RatJson {
    fn to_rat(&self) -> Result<Rat, SymFunError> {
        match self {
            RatJson::Text(s) => rat_from_string(s).map_err(SymFunError::BadData),
            RatJson::Number(x) => Rat::from_float(*x)
                .ok_or_else(|| SymFunError::BadData(format!("non-finite number {x}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    re: RatJson,
    im: RatJson,
}

#[derive(Serialize, Deserialize)]
struct SymTermJson {
    coeff: CoeffJson,
    exp: Vec<u32>,
    width: RatJson,
    center: Vec<RatJson>,
}

#[derive(Serialize, Deserialize)]
struct SymFunJson {
    terms: Vec<SymTermJson>,
}

impl SymFun {
    pub fn from_json(json: &str) -> Result<SymFun, SymFunError> {
        let parsed: SymFunJson =
            serde_json::from_str(json).map_err(|e| SymFunError::BadData(e.to_string()))?;
        if parsed.terms.is_empty() {
            return Err(SymFunError::BadData("empty term list".into()));
        }
        let d = parsed.terms[0].center.len();
        let mut f = SymFun::zero(d);
        for t in parsed.terms {
            if t.center.len() != d || t.exp.len() != d {
                return Err(SymFunError::BadData(
                    "terms disagree on the dimension".into(),
                ));
            }
            let width = t.width.to_rat()?;
            if width <= Rat::zero() {
                return Err(SymFunError::BadData("width must be positive".into()));
            }
            let center = t
                .center
                .iter()
                .map(|c| c.to_rat())
                .collect::<Result<Vec<_>, _>>()?;
            let coeff = Complex::new(t.coeff.re.to_rat()?, t.coeff.im.to_rat()?);
            f.add_term(
                TermKey {
                    width,
                    center,
                    exp: MultiIndex(t.exp),
                },
                coeff,
            );
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| SymTermJson {
                coeff: CoeffJson {
                    re: RatJson::Text(rat_to_string(&c.re)),
                    im: RatJson::Text(rat_to_string(&c.im)),
                },
                exp: k.exp.0.clone(),
                width: RatJson::Text(rat_to_string(&k.width)),
                center: k.center.iter().map(|x| RatJson::Text(rat_to_string(x))).collect(),
            })
            .collect();
        serde_json::to_string(&SymFunJson { terms }).expect("symfun serialization cannot fail")
    }
}

// ---------------------------------------------------------------------------
// Bump cutoff
// ---------------------------------------------------------------------------

/// Smooth even cutoff: `1` on `[-r1, r1]`, `0` outside `(-r2, r2)`, glued by
/// the normalized `exp(-1/s)` transition. Derivatives up to `k_max` come from
/// the closed-form recurrence for `exp(-1/s)` plus a quotient-rule recursion.
#[derive(Debug, Clone)]
pub struct BumpFun {
    pub r1: f64,
    pub r2: f64,
    k_max: usize,
    /// `glue_polys[k]` holds the coefficients of `P_k` with
    /// `(d/ds)^k exp(-1/s) = P_k(1/s) exp(-1/s)`.
    glue_polys: Vec<Vec<f64>>,
}

pub const BUMP_DEFAULT_KMAX: usize = 12;

impl BumpFun {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self::with_max_order(r1, r2, BUMP_DEFAULT_KMAX)
    }

    pub fn with_max_order(r1: f64, r2: f64, k_max: usize) -> Self {
        assert!(r1 > 0.0 && r2 > r1, "need 0 < r1 < r2");
        // P_{k+1}(u) = u^2 (P_k(u) - P_k'(u))
        let mut glue_polys: Vec<Vec<f64>> = Vec::with_capacity(k_max + 1);
        glue_polys.push(vec![1.0]);
        for _ in 0..k_max {
            let prev = glue_polys.last().unwrap();
            let mut diff = prev.clone();
            for (pow, &c) in prev.iter().enumerate() {
                if pow >= 1 {
                    diff[pow - 1] -= pow as f64 * c;
                }
            }
            let mut next = vec![0.0; diff.len() + 2];
            for (pow, &c) in diff.iter().enumerate() {
                next[pow + 2] = c;
            }
            glue_polys.push(next);
        }
        BumpFun {
            r1,
            r2,
            k_max,
            glue_polys,
        }
    }

    pub fn max_order(&self) -> usize {
        self.k_max
    }

    /// `psi^{(k)}(t)`.
    pub fn eval_deriv(&self, k: usize, t: f64) -> Result<f64, SymFunError> {
        if k > self.k_max {
            return Err(SymFunError::OrderTooHigh {
                got: k,
                max: self.k_max,
            });
        }
        Ok(self.derivs_upto(k, t)[k])
    }

    /// `[psi(t), psi'(t), ..., psi^{(k)}(t)]` in one pass.
    pub fn derivs_upto(&self, k: usize, t: f64) -> Vec<f64> {
        assert!(k <= self.k_max);
        let u = t.abs();
        if u <= self.r1 {
            let mut out = vec![0.0; k + 1];
            out[0] = 1.0;
            return out;
        }
        if u >= self.r2 {
            return vec![0.0; k + 1];
        }
        let w = self.r2 - self.r1;
        let s = (self.r2 - u) / w;
        // derivative arrays of N(u) = g(s), D(u) = g(1-s) with respect to u
        let gn = self.glue_derivs(s, k);
        let gd = self.glue_derivs(1.0 - s, k);
        let mut n = vec![0.0; k + 1];
        let mut dd = vec![0.0; k + 1];
        for j in 0..=k {
            let chain = (-1.0f64 / w).powi(j as i32);
            n[j] = gn[j] * chain;
            dd[j] = gd[j] * (1.0f64 / w).powi(j as i32);
        }
        // quotient recursion for Q = N / (N + D)
        let mut total = vec![0.0; k + 1];
        for j in 0..=k {
            total[j] = n[j] + dd[j];
        }
        let mut q = vec![0.0; k + 1];
        for j in 0..=k {
            let mut acc = n[j];
            for l in 0..j {
                acc -= binom_f64(j, l) * q[l] * total[j - l];
            }
            q[j] = acc / total[0];
        }
        if t >= 0.0 {
            q
        } else {
            // psi(t) = Q(|t|) so odd orders flip sign
            q.iter()
                .enumerate()
                .map(|(j, &v)| if j % 2 == 1 { -v } else { v })
                .collect()
        }
    }

    /// `(d/ds)^j exp(-1/s)` for `j = 0..=k`.
    fn glue_derivs(&self, s: f64, k: usize) -> Vec<f64> {
        let base = (-1.0 / s).exp();
        let u = 1.0 / s;
        (0..=k)
            .map(|j| {
                let mut val = 0.0;
                let mut upow = 1.0;
                for &c in &self.glue_polys[j] {
                    val += c * upow;
                    upow *= u;
                }
                val * base
            })
            .collect()
    }
}

fn binom_f64(n: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Convenience: smallest index with `psi == 0` guaranteed, i.e. `|t| >= r2`.
pub fn bump(b: &BumpFun, t: f64, derivative_order: usize) -> Result<f64, SymFunError> {
    b.eval_deriv(derivative_order, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{crat_int, rat, rat_int};

    fn gauss1() -> SymFun {
        SymFun::gaussian(rat_int(1), vec![rat_int(0)])
    }

    fn x_gauss() -> SymFun {
        SymFun::hermite_term(crat_int(1, 0), vec![1], rat_int(1), vec![rat_int(0)])
    }

    #[test]
    fn derivative_examples() {
        // d/dx e^{-x^2} = -2x e^{-x^2}
        let df = gauss1().differentiate(0);
        let expected = SymFun::hermite_term(crat_int(-2, 0), vec![1], rat_int(1), vec![rat_int(0)]);
        assert_eq!(df, expected);

        // d/dx (x e^{-x^2}) = (1 - 2x^2) e^{-x^2}
        let df = x_gauss().differentiate(0);
        let expected = SymFun::hermite_term(crat_int(1, 0), vec![0], rat_int(1), vec![rat_int(0)])
            .add(&SymFun::hermite_term(
                crat_int(-2, 0),
                vec![2],
                rat_int(1),
                vec![rat_int(0)],
            ));
        assert_eq!(df, expected);

        // second derivative of e^{-x^2} = (4x^2 - 2) e^{-x^2}
        let ddf = gauss1().differentiate(0).differentiate(0);
        let expected = SymFun::hermite_term(crat_int(4, 0), vec![2], rat_int(1), vec![rat_int(0)])
            .add(&SymFun::hermite_term(
                crat_int(-2, 0),
                vec![0],
                rat_int(1),
                vec![rat_int(0)],
            ));
        assert_eq!(ddf, expected);
    }

    #[test]
    fn operator_examples() {
        // Q = x^2: Q(D) = -partial^2, on e^{-x^2} gives (2 - 4x^2) e^{-x^2}
        let q = MultiPoly::monomial(1, &[2], crat_int(1, 0));
        let out = apply_operator(&q, &gauss1()).unwrap();
        let expected = SymFun::hermite_term(crat_int(2, 0), vec![0], rat_int(1), vec![rat_int(0)])
            .add(&SymFun::hermite_term(
                crat_int(-4, 0),
                vec![2],
                rat_int(1),
                vec![rat_int(0)],
            ));
        assert_eq!(out, expected);

        // Q = 1: identity
        let q = MultiPoly::one(1);
        assert_eq!(apply_operator(&q, &x_gauss()).unwrap(), x_gauss());

        // Q = -i x: Q(D) = -partial, on e^{-x^2} gives 2x e^{-x^2}
        let q = MultiPoly::monomial(1, &[1], crat_int(0, -1));
        let out = apply_operator(&q, &gauss1()).unwrap();
        let expected = SymFun::hermite_term(crat_int(2, 0), vec![1], rat_int(1), vec![rat_int(0)]);
        assert_eq!(out, expected);

        // t-dependent operator is rejected
        let q = MultiPoly::monomial(2, &[0, 1], crat_int(1, 0));
        assert_eq!(apply_operator(&q, &gauss1()), Err(SymFunError::TDependence));
    }

    #[test]
    fn integral_examples() {
        let half_pi = (std::f64::consts::PI / 2.0).sqrt();
        // int e^{-2x^2} = sqrt(pi/2)
        let v = integrate_product(&gauss1(), &gauss1());
        assert!((v.re - half_pi).abs() < 1e-14 && v.im.abs() < 1e-16);
        // odd moment vanishes
        let v = integrate_product(&x_gauss(), &gauss1());
        assert!(v.norm() < 1e-16);
        // int x^2 e^{-2x^2} = sqrt(pi/2)/4
        let x2 = SymFun::hermite_term(crat_int(1, 0), vec![2], rat_int(1), vec![rat_int(0)]);
        let v = integrate_product(&x2, &gauss1());
        assert!((v.re - half_pi / 4.0).abs() < 1e-14);
        assert!((v.re - 0.31333).abs() < 1e-4);
    }

    #[test]
    fn integral_with_offset_centers() {
        // int e^{-(x-1)^2} e^{-x^2} dx = sqrt(pi/2) e^{-1/2}
        let shifted = SymFun::gaussian(rat_int(1), vec![rat_int(1)]);
        let v = integrate_product(&shifted, &gauss1());
        let expected = (std::f64::consts::PI / 2.0).sqrt() * (-0.5f64).exp();
        assert!((v.re - expected).abs() < 1e-14);
    }

    #[test]
    fn translation_covariance() {
        let delta = vec![rat(1, 3)];
        let a = gauss1().differentiate(0).translate(&delta);
        let b = gauss1().translate(&delta).differentiate(0);
        assert_eq!(a, b);
    }

    #[test]
    fn seminorm_examples() {
        let m = WeightSeq::gevrey(2.0, 60);
        let q = SeminormQuery::new(m.clone(), 1.0, vec![(-2.0, 2.0)], 0);
        let r = seminorm(&gauss1(), &q);
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.max_alpha, vec![0]);

        let r0 = seminorm(&SymFun::zero(1), &q);
        assert_eq!(r0.value, 0.0);

        // high h suppresses all higher orders: value equals the order-0 value
        let q8 = SeminormQuery::new(m, 10.0, vec![(-2.0, 2.0)], 8);
        let r8 = seminorm(&gauss1(), &q8);
        assert!((r8.value - r.value).abs() < 1e-12);
    }

    #[test]
    fn seminorm_monotonicity() {
        let m = WeightSeq::gevrey(2.0, 60);
        let mk = |h: f64, a: usize| {
            let q = SeminormQuery::new(m.clone(), h, vec![(-1.5, 1.5)], a);
            seminorm(&x_gauss(), &q).value
        };
        // nonincreasing in h
        assert!(mk(0.5, 4) >= mk(1.0, 4) - 1e-12);
        assert!(mk(1.0, 4) >= mk(2.0, 4) - 1e-12);
        // nondecreasing in a_max
        assert!(mk(1.0, 0) <= mk(1.0, 2) + 1e-12);
        assert!(mk(1.0, 2) <= mk(1.0, 6) + 1e-12);
    }

    #[test]
    fn bump_plateau_support_and_midpoint() {
        let b = BumpFun::new(1.0, 2.0);
        assert_eq!(b.eval_deriv(0, 0.5).unwrap(), 1.0);
        assert_eq!(b.eval_deriv(1, 0.5).unwrap(), 0.0);
        assert_eq!(b.eval_deriv(0, 3.0).unwrap(), 0.0);
        assert_eq!(b.eval_deriv(0, -3.0).unwrap(), 0.0);
        // symmetric glue pins the midpoint value
        let mid = b.eval_deriv(0, 1.5).unwrap();
        assert!((mid - 0.5).abs() < 1e-15);
        // nonincreasing everywhere, strictly decreasing away from the
        // saturated edges of the transition
        let mut last = 1.0;
        for i in 1..40 {
            let t = 1.0 + i as f64 * 0.025;
            let v = b.eval_deriv(0, t).unwrap();
            assert!(v <= last, "bump not monotone at t = {t}");
            if (1.1..=1.9).contains(&t) {
                assert!(v < last, "bump not strictly decreasing at t = {t}");
                assert!(v > 0.0 && v < 1.0);
            }
            last = v;
        }
        assert!(matches!(
            b.eval_deriv(13, 1.5),
            Err(SymFunError::OrderTooHigh { .. })
        ));
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let b = BumpFun::new(1.0, 2.0);
        let h = 1e-5;
        for &t in &[1.2, 1.5, 1.8, -1.3] {
            let d1 = b.eval_deriv(1, t).unwrap();
            let fd = (b.eval_deriv(0, t + h).unwrap() - b.eval_deriv(0, t - h).unwrap()) / (2.0 * h);
            assert!(
                (d1 - fd).abs() < 1e-5 * (1.0 + d1.abs()),
                "psi' mismatch at {t}: {d1} vs {fd}"
            );
            let d2 = b.eval_deriv(2, t).unwrap();
            let fd2 = (b.eval_deriv(1, t + h).unwrap() - b.eval_deriv(1, t - h).unwrap()) / (2.0 * h);
            assert!(
                (d2 - fd2).abs() < 1e-4 * (1.0 + d2.abs()),
                "psi'' mismatch at {t}: {d2} vs {fd2}"
            );
        }
    }

    #[test]
    fn json_round_trip() {
        let f = x_gauss().add(&SymFun::gaussian(rat(1, 2), vec![rat(1, 4)]));
        let back = SymFun::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
        // float widths are accepted
        let json = r#"{"terms":[{"coeff":{"re":1.0,"im":0.0},"exp":[0],"width":0.5,"center":[0.25]}]}"#;
        let g = SymFun::from_json(json).unwrap();
        assert_eq!(g, SymFun::gaussian(rat(1, 2), vec![rat(1, 4)]));
    }
}
