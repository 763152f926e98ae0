//! Exact multivariate polynomial and differential-operator algebra over
//! complex rationals.
//!
//! Polynomials on `R^{d+1}` keep the `t`-variable in the last exponent slot.
//! The t-decomposition `P = sum_k Q_k(x) t^k`, the shifted family `P_(j)` and
//! the reflection `P_check(xi) = P(-xi)` all live here; everything is exact so
//! the operator identities downstream can be checked with zero tolerance.

use crate::rat::{
    crat_to_c64, crat_zero, rat_from_string, rat_to_string, CRat, Rat, C64,
};
use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("leading t-coefficient depends on x; operator not of the treated shape")]
    NonConstantLeading,
    #[error("polynomial is constant")]
    ConstantPoly,
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial depends on t where an x-only operator is required")]
    TDependence,
    #[error("invalid polynomial data: {0}")]
    BadData(String),
}

/// Exponent vector; in full-variable context the last slot is the t-exponent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }
}

/// Sparse polynomial with complex-rational coefficients.
///
/// Terms are kept in a sorted map so iteration order, and therefore every
/// derived artifact, is reproducible byte-for-byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<MultiIndex, CRat>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: CRat) -> Self {
        let mut p = MultiPoly::zero(nvars);
        p.add_term(MultiIndex::zeros(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        MultiPoly::constant(nvars, CRat::one())
    }

    /// Monomial `c * v_0^{e_0} ... v_{n-1}^{e_{n-1}}`.
    pub fn monomial(nvars: usize, exps: &[u32], c: CRat) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = MultiPoly::zero(nvars);
        p.add_term(MultiIndex(exps.to_vec()), c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &CRat)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, exp: MultiIndex, c: CRat) {
        assert_eq!(exp.len(), self.nvars, "exponent arity mismatch");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
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

    pub fn add(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &MultiPoly) -> MultiPoly {
        self.add(&other.scale(&CRat::new(-Rat::one(), Rat::zero())))
    }

    pub fn scale(&self, c: &CRat) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.nvars);
        }
        let mut out = MultiPoly::zero(self.nvars);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a.clone() * c.clone());
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.add_term(ea.add(eb), ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> MultiPoly {
        let mut acc = MultiPoly::one(self.nvars);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact mixed partial derivative `partial^order` (plain `partial`, not `D`).
    pub fn derivative(&self, order: &MultiIndex) -> MultiPoly {
        assert_eq!(order.len(), self.nvars);
        let mut out = MultiPoly::zero(self.nvars);
        'terms: for (e, c) in &self.terms {
            let mut coeff = c.clone();
            let mut exp = e.0.clone();
            for (j, &k) in order.0.iter().enumerate() {
                if exp[j] < k {
                    continue 'terms;
                }
                for _ in 0..k {
                    coeff = coeff * CRat::new(Rat::from_integer(exp[j].into()), Rat::zero());
                    exp[j] -= 1;
                }
            }
            out.add_term(MultiIndex(exp), coeff);
        }
        out
    }

    /// Single-axis derivative, convenience over [`MultiPoly::derivative`].
    pub fn derivative_axis(&self, j: usize) -> MultiPoly {
        self.derivative(&MultiIndex::unit(self.nvars, j))
    }

    pub fn eval(&self, point: &[C64]) -> Result<C64, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut acc = Complex::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut term = crat_to_c64(c);
            for (j, &k) in e.0.iter().enumerate() {
                for _ in 0..k {
                    term *= point[j];
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Exact evaluation at complex-rational points.
    pub fn eval_exact(&self, point: &[CRat]) -> Result<CRat, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::DimensionMismatch {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut acc = crat_zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (j, &k) in e.0.iter().enumerate() {
                for _ in 0..k {
                    term = term * point[j].clone();
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.total_degree())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e.0[var]).max().unwrap_or(0)
    }

    /// `P(-xi)`: flips the sign of every odd-total-degree term.
    pub fn reflect(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let c = if e.total_degree() % 2 == 0 {
                c.clone()
            } else {
                -c.clone()
            };
            out.add_term(e.clone(), c);
        }
        out
    }

    /// Largest coefficient magnitude, as a float; used to scale thresholds.
    pub fn coeff_scale(&self) -> f64 {
        self.terms
            .values()
            .map(|c| crat_to_c64(c).norm())
            .fold(0.0, f64::max)
    }

    /// Extends an x-only polynomial to the full variable list by a zero t-exponent.
    pub fn lift_to_full(&self) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars + 1);
        for (e, c) in &self.terms {
            let mut exp = e.0.clone();
            exp.push(0);
            out.add_term(MultiIndex(exp), c.clone());
        }
        out
    }

    /// Multiplies by `t^k` (full-variable polynomials only).
    pub fn mul_t_power(&self, k: u32) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        let last = self.nvars - 1;
        for (e, c) in &self.terms {
            let mut exp = e.0.clone();
            exp[last] += k;
            out.add_term(MultiIndex(exp), c.clone());
        }
        out
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}+{}i)", c.re, c.im)?;
            for (j, &k) in e.0.iter().enumerate() {
                if k > 0 {
                    write!(f, "*v{j}^{k}")?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON wire format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Vec<u32>,
    re: String,
    im: String,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    d: usize,
    terms: Vec<TermJson>,
}

impl MultiPoly {
    /// Parses the wire format `{"d": int, "terms": [{"exp": [...], "re": "p/q", "im": "p/q"}]}`.
    /// `d` counts the x-variables; exponent vectors carry `d + 1` entries.
    pub fn from_json(json: &str) -> Result<MultiPoly, PolyError> {
        let parsed: PolyJson =
            serde_json::from_str(json).map_err(|e| PolyError::BadData(e.to_string()))?;
        let nvars = parsed.d + 1;
        let mut poly = MultiPoly::zero(nvars);
        for term in parsed.terms {
            if term.exp.len() != nvars {
                return Err(PolyError::BadData(format!(
                    "exponent vector {:?} does not have {} entries",
                    term.exp, nvars
                )));
            }
            let re = rat_from_string(&term.re).map_err(PolyError::BadData)?;
            let im = rat_from_string(&term.im).map_err(PolyError::BadData)?;
            poly.add_term(MultiIndex(term.exp), Complex::new(re, im));
        }
        Ok(poly)
    }

    pub fn to_json(&self) -> String {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| TermJson {
                exp: e.0.clone(),
                re: rat_to_string(&c.re),
                im: rat_to_string(&c.im),
            })
            .collect();
        let json = PolyJson {
            d: self.nvars - 1,
            terms,
        };
        serde_json::to_string(&json).expect("poly serialization cannot fail")
    }
}

// ---------------------------------------------------------------------------
// Operator profile
// ---------------------------------------------------------------------------

/// A normalized operator `P = sum_{k=0}^m Q_k(x) t^k` with `Q_m = 1`,
/// its shifted family `P_(j)` and the reflection `P_check`.
#[derive(Debug, Clone)]
pub struct OperatorProfile {
    poly: MultiPoly,
    d: usize,
    m: usize,
    q: Vec<MultiPoly>,
    /// Leading t-coefficient of the input before normalization.
    lead: CRat,
}

impl OperatorProfile {
    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `Q_k` as an x-only polynomial (`d` variables).
    pub fn q(&self, k: usize) -> &MultiPoly {
        &self.q[k]
    }

    pub fn q_list(&self) -> &[MultiPoly] {
        &self.q
    }

    pub fn lead(&self) -> &CRat {
        &self.lead
    }

    /// `P_(j) = sum_{k=j}^m Q_k(x) t^{k-j}` for `j = 1..=m`, as a full-variable polynomial.
    pub fn p_shifted(&self, j: usize) -> MultiPoly {
        assert!((1..=self.m).contains(&j));
        let mut acc = MultiPoly::zero(self.d + 1);
        for k in j..=self.m {
            acc = acc.add(&self.q[k].lift_to_full().mul_t_power((k - j) as u32));
        }
        acc
    }

    /// `P_check(xi) = P(-xi)`.
    pub fn p_check(&self) -> MultiPoly {
        self.poly.reflect()
    }
}

/// Splits `P` along powers of `t` and normalizes the leading coefficient to 1.
pub fn decompose_t(p: &MultiPoly) -> Result<OperatorProfile, PolyError> {
    let nvars = p.nvars();
    assert!(nvars >= 2, "need at least one x variable plus t");
    let d = nvars - 1;
    let m = p.degree_in(d) as usize;
    if m == 0 {
        return Err(PolyError::ConstantPoly);
    }
    let mut q: Vec<MultiPoly> = (0..=m).map(|_| MultiPoly::zero(d)).collect();
    for (e, c) in p.terms() {
        let k = e.0[d] as usize;
        let xexp = MultiIndex(e.0[..d].to_vec());
        q[k].add_term(xexp, c.clone());
    }
    let lead = &q[m];
    if lead.is_zero() || lead.total_degree() > 0 {
        return Err(PolyError::NonConstantLeading);
    }
    let c = lead.terms().next().expect("nonzero constant").1.clone();
    let inv = CRat::one() / c.clone();
    let q: Vec<MultiPoly> = q.iter().map(|qk| qk.scale(&inv)).collect();
    let poly = p.scale(&inv);
    Ok(OperatorProfile {
        poly,
        d,
        m,
        q,
        lead: c,
    })
}

/// The `P_(j)` family, the reflection and the exact base-change verification
/// `t^0 = P_(m)`, `t^j = P_(m-j) - sum_{k<j} Q_{k+m-j} t^k`.
pub struct PFamily {
    pub shifted: Vec<MultiPoly>,
    pub pcheck: MultiPoly,
    pub recursion_check: bool,
}

pub fn p_family(profile: &OperatorProfile) -> PFamily {
    let m = profile.m();
    let d = profile.d();
    let shifted: Vec<MultiPoly> = (1..=m).map(|j| profile.p_shifted(j)).collect();
    let pcheck = profile.p_check();

    let t_mono = |j: u32| {
        let mut exps = vec![0u32; d + 1];
        exps[d] = j;
        MultiPoly::monomial(d + 1, &exps, CRat::one())
    };

    let mut ok = t_mono(0) == shifted[m - 1];
    for j in 1..m {
        // t^j = P_(m-j) - sum_{k=0}^{j-1} Q_{k+m-j} t^k
        let mut rhs = shifted[m - j - 1].clone();
        for k in 0..j {
            let term = profile.q(k + m - j).lift_to_full().mul_t_power(k as u32);
            rhs = rhs.sub(&term);
        }
        ok &= rhs == t_mono(j as u32);
    }
    PFamily {
        shifted,
        pcheck,
        recursion_check: ok,
    }
}

/// Exact mixed partial derivative of `P`; callers apply the `(-i)` powers of
/// the `D`-convention themselves.
pub fn poly_derivative(p: &MultiPoly, order: &MultiIndex) -> MultiPoly {
    p.derivative(order)
}

pub fn poly_eval(p: &MultiPoly, point: &[C64]) -> Result<C64, PolyError> {
    p.eval(point)
}

// ---------------------------------------------------------------------------
// Convenience constructors for the reference operators
// ---------------------------------------------------------------------------

/// `t - i x^2` on `R^2` (heat).
pub fn heat_poly() -> MultiPoly {
    let mut p = MultiPoly::zero(2);
    p.add_term(MultiIndex(vec![0, 1]), crate::rat::crat_int(1, 0));
    p.add_term(MultiIndex(vec![2, 0]), crate::rat::crat_int(0, -1));
    p
}

/// `x^2 + t^2` on `R^2` (Laplace).
pub fn laplace_poly() -> MultiPoly {
    let mut p = MultiPoly::zero(2);
    p.add_term(MultiIndex(vec![2, 0]), crate::rat::crat_int(1, 0));
    p.add_term(MultiIndex(vec![0, 2]), crate::rat::crat_int(1, 0));
    p
}

/// `t - i x` on `R^2` (Cauchy-Riemann).
pub fn cauchy_riemann_poly() -> MultiPoly {
    let mut p = MultiPoly::zero(2);
    p.add_term(MultiIndex(vec![0, 1]), crate::rat::crat_int(1, 0));
    p.add_term(MultiIndex(vec![1, 0]), crate::rat::crat_int(0, -1));
    p
}

/// `t^2 + x1^2 + x2^4` on `R^3`.
pub fn anisotropic_poly() -> MultiPoly {
    let mut p = MultiPoly::zero(3);
    p.add_term(MultiIndex(vec![0, 0, 2]), crate::rat::crat_int(1, 0));
    p.add_term(MultiIndex(vec![2, 0, 0]), crate::rat::crat_int(1, 0));
    p.add_term(MultiIndex(vec![0, 4, 0]), crate::rat::crat_int(1, 0));
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{crat, crat_int, rat, rat_int};

    #[test]
    fn decompose_heat() {
        let profile = decompose_t(&heat_poly()).unwrap();
        assert_eq!(profile.m(), 1);
        assert_eq!(profile.d(), 1);
        // Q_0 = -i x^2
        let q0 = profile.q(0);
        assert_eq!(q0.num_terms(), 1);
        assert_eq!(
            q0.terms().next().unwrap(),
            (&MultiIndex(vec![2]), &crat_int(0, -1))
        );
        assert_eq!(profile.q(1), &MultiPoly::one(1));
    }

    #[test]
    fn decompose_laplace() {
        let profile = decompose_t(&laplace_poly()).unwrap();
        assert_eq!(profile.m(), 2);
        assert!(profile.q(1).is_zero());
        assert_eq!(profile.q(2), &MultiPoly::one(1));
        let q0 = profile.q(0);
        assert_eq!(q0.degree_in(0), 2);
    }

    #[test]
    fn decompose_rejects_nonconstant_leading() {
        // x * t^2 + 1
        let mut p = MultiPoly::zero(2);
        p.add_term(MultiIndex(vec![1, 2]), crat_int(1, 0));
        p.add_term(MultiIndex(vec![0, 0]), crat_int(1, 0));
        assert!(matches!(decompose_t(&p), Err(PolyError::NonConstantLeading)));
    }

    #[test]
    fn decompose_rejects_constant() {
        let p = MultiPoly::constant(2, crat_int(3, 0));
        assert!(matches!(decompose_t(&p), Err(PolyError::ConstantPoly)));
    }

    #[test]
    fn normalization_divides_by_leading() {
        // 2t - x
        let mut p = MultiPoly::zero(2);
        p.add_term(MultiIndex(vec![0, 1]), crat_int(2, 0));
        p.add_term(MultiIndex(vec![1, 0]), crat_int(-1, 0));
        let profile = decompose_t(&p).unwrap();
        assert_eq!(profile.lead(), &crat_int(2, 0));
        assert_eq!(profile.q(1), &MultiPoly::one(1));
        // reassembly equals P / 2 exactly
        let mut reassembled = MultiPoly::zero(2);
        for k in 0..=profile.m() {
            reassembled = reassembled.add(&profile.q(k).lift_to_full().mul_t_power(k as u32));
        }
        assert_eq!(&reassembled, profile.poly());
        assert_eq!(reassembled, p.scale(&crat(rat(1, 2), rat_int(0))));
    }

    #[test]
    fn derivative_examples() {
        // d/dt (t - i x^2) = 1
        let dt = heat_poly().derivative(&MultiIndex(vec![0, 1]));
        assert_eq!(dt, MultiPoly::one(2));
        // d^2/dx^2 (x^2 + t^2) = 2
        let dxx = laplace_poly().derivative(&MultiIndex(vec![2, 0]));
        assert_eq!(dxx, MultiPoly::constant(2, crat_int(2, 0)));
        // d/dx d/dt (x^2 t^2) = 4 x t
        let p = MultiPoly::monomial(2, &[2, 2], crat_int(1, 0));
        let dxt = p.derivative(&MultiIndex(vec![1, 1]));
        assert_eq!(dxt, MultiPoly::monomial(2, &[1, 1], crat_int(4, 0)));
    }

    #[test]
    fn eval_examples() {
        let one = Complex::new(1.0, 0.0);
        let i = Complex::new(0.0, 1.0);
        // (t - i x^2)(x=1, t=0) = -i
        let v = heat_poly().eval(&[one, Complex::new(0.0, 0.0)]).unwrap();
        assert!((v + i).norm() < 1e-15);
        // (x^2 + t^2)(x=3, t=4) = 25
        let v = laplace_poly()
            .eval(&[Complex::new(3.0, 0.0), Complex::new(4.0, 0.0)])
            .unwrap();
        assert!((v - Complex::new(25.0, 0.0)).norm() < 1e-12);
        // (t - i x)(x=1, t=i) = 0
        let v = cauchy_riemann_poly().eval(&[one, i]).unwrap();
        assert!(v.norm() < 1e-15);
        // dimension mismatch
        assert!(matches!(
            heat_poly().eval(&[one]),
            Err(PolyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn family_examples() {
        let laplace = decompose_t(&laplace_poly()).unwrap();
        let fam = p_family(&laplace);
        assert!(fam.recursion_check);
        // P_(1) = t, P_(2) = 1
        assert_eq!(fam.shifted[0], MultiPoly::monomial(2, &[0, 1], crat_int(1, 0)));
        assert_eq!(fam.shifted[1], MultiPoly::one(2));

        let heat = decompose_t(&heat_poly()).unwrap();
        let fam = p_family(&heat);
        assert!(fam.recursion_check);
        assert_eq!(fam.shifted[0], MultiPoly::one(2));
        // P_check = -t - i x^2
        let mut expected = MultiPoly::zero(2);
        expected.add_term(MultiIndex(vec![0, 1]), crat_int(-1, 0));
        expected.add_term(MultiIndex(vec![2, 0]), crat_int(0, -1));
        assert_eq!(fam.pcheck, expected);

        let cr = decompose_t(&cauchy_riemann_poly()).unwrap();
        let fam = p_family(&cr);
        assert!(fam.recursion_check);
        assert_eq!(fam.shifted[0], MultiPoly::one(2));
        let mut expected = MultiPoly::zero(2);
        expected.add_term(MultiIndex(vec![0, 1]), crat_int(-1, 0));
        expected.add_term(MultiIndex(vec![1, 0]), crat_int(0, 1));
        assert_eq!(fam.pcheck, expected);
    }

    #[test]
    fn json_round_trip() {
        let p = anisotropic_poly();
        let json = p.to_json();
        let back = MultiPoly::from_json(&json).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn derivative_commutes_with_t_split() {
        let p = anisotropic_poly();
        let profile = decompose_t(&p).unwrap();
        // d/dx1 of sum Q_k t^k equals sum (d/dx1 Q_k) t^k, term by term
        let full = p.derivative(&MultiIndex(vec![1, 0, 0]));
        let mut termwise = MultiPoly::zero(3);
        for k in 0..=profile.m() {
            let dq = profile.q(k).derivative(&MultiIndex(vec![1, 0]));
            termwise = termwise.add(&dq.lift_to_full().mul_t_power(k as u32));
        }
        assert_eq!(full, termwise);
    }
}
