//! Exact complex-rational scalars used by the symbolic layer.
//!
//! All symbolic identities are checked with zero tolerance, so coefficients
//! stay in `Q(i)` until they cross a quadrature or evaluation boundary.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rat = BigRational;
pub type CRat = Complex<Rat>;
pub type C64 = Complex<f64>;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn crat(re: Rat, im: Rat) -> CRat {
    Complex::new(re, im)
}

pub fn crat_int(re: i64, im: i64) -> CRat {
    Complex::new(rat_int(re), rat_int(im))
}

pub fn crat_zero() -> CRat {
    Complex::new(Rat::zero(), Rat::zero())
}

pub fn crat_one() -> CRat {
    Complex::new(Rat::one(), Rat::zero())
}

/// `(-i)^k`, the operator-convention phase for a derivative of order `k`.
pub fn neg_i_pow(k: usize) -> CRat {
    match k % 4 {
        0 => crat_int(1, 0),
        1 => crat_int(0, -1),
        2 => crat_int(-1, 0),
        _ => crat_int(0, 1),
    }
}

/// `i^k`.
pub fn i_pow(k: usize) -> CRat {
    match k % 4 {
        0 => crat_int(1, 0),
        1 => crat_int(0, 1),
        2 => crat_int(-1, 0),
        _ => crat_int(0, -1),
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // fall back to a quotient of approximations for huge numerators
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn crat_to_c64(c: &CRat) -> C64 {
    Complex::new(rat_to_f64(&c.re), rat_to_f64(&c.im))
}

/// Serializes a rational as `"p/q"`.
pub fn rat_to_string(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or a plain integer string.
pub fn rat_from_string(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let numer = BigInt::from_str(n.trim()).map_err(|e| format!("bad numerator {n:?}: {e}"))?;
        let denom = BigInt::from_str(d.trim()).map_err(|e| format!("bad denominator {d:?}: {e}"))?;
        if denom.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rat::new(numer, denom))
    } else {
        let numer = BigInt::from_str(s).map_err(|e| format!("bad rational {s:?}: {e}"))?;
        Ok(Rat::from_integer(numer))
    }
}

pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// `|beta|! / (beta_1! ... beta_m!)` as an exact rational.
pub fn multinomial(beta: &[usize]) -> Rat {
    let total: usize = beta.iter().sum();
    let mut denom = BigInt::one();
    for &b in beta {
        denom *= factorial(b);
    }
    Rat::new(factorial(total), denom)
}

pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}
