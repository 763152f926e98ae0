//! Hypoellipticity indices: the degree-ratio index from the t-decomposition,
//! exact index formulas for semi-elliptic polynomials, root margins of the
//! symbol, and numerical maximality probes for the root-margin exponent.

use crate::polyops::{MultiIndex, MultiPoly, OperatorProfile};
use crate::rat::{Rat, C64};
use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("companion-matrix eigensolver failed to converge")]
    RootSolverFailed,
}

// ---------------------------------------------------------------------------
// Degree-ratio index
// ---------------------------------------------------------------------------

/// `max { deg Q_k / (m - k) : k < m, Q_k != 0 }` as an exact rational.
pub fn b0_exact(profile: &OperatorProfile) -> Rat {
    let m = profile.m();
    let mut best = Rat::zero();
    for k in 0..m {
        let qk = profile.q(k);
        if qk.is_zero() {
            continue;
        }
        let ratio = Rat::new(
            BigInt::from(qk.total_degree()),
            BigInt::from((m - k) as u32),
        );
        if ratio > best {
            best = ratio;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Semi-elliptic analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum SemiEllipticVerdict {
    Yes {
        /// Per-variable degrees, t-slot last.
        n: Vec<u32>,
    },
    No {
        reason: NoReason,
    },
    Inconclusive {
        min_modulus: f64,
        at: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub enum NoReason {
    /// A term exceeds the anisotropic unit simplex for the forced degrees.
    ExcessTerm { exponent: Vec<u32> },
    /// A real zero of the principal part off the origin.
    PrincipalZero { xi: Vec<f64>, modulus: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum CaseTag {
    Elliptic,
    ParabolicLike,
    CaseIii,
    NotSemiElliptic,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactIndices {
    pub n: Vec<u32>,
    #[serde(serialize_with = "crate::indices::ser_rat")]
    pub a0: Rat,
    #[serde(serialize_with = "crate::indices::ser_rat")]
    pub b0: Rat,
    #[serde(serialize_with = "crate::indices::ser_rat")]
    pub gamma0: Rat,
    #[serde(serialize_with = "crate::indices::ser_rat")]
    pub mu0: Rat,
}

pub(crate) fn ser_rat<S: serde::Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::rat::rat_to_string(r))
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    #[serde(serialize_with = "crate::indices::ser_rat")]
    pub b0: Rat,
    pub semi_elliptic: SemiEllipticVerdict,
    pub exact: Option<ExactIndices>,
    pub case_tag: CaseTag,
    /// `deg Q_k <= deg Q_0` for all k >= 1 (checked, not assumed).
    pub q_degree_ok: bool,
    /// `deg P == max_j deg_{x_j} P`, asserted for semi-elliptic profiles.
    pub degree_consistent: bool,
    pub grid_points: usize,
    pub grid_min_modulus: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SemiEllipticConfig {
    pub grid_points: usize,
    pub threshold_rel: f64,
    pub zero_certificate_rel: f64,
    pub halton_skip: usize,
}

impl Default for SemiEllipticConfig {
    fn default() -> Self {
        SemiEllipticConfig {
            grid_points: 100_000,
            threshold_rel: 1e-8,
            zero_certificate_rel: 1e-12,
            halton_skip: 17,
        }
    }
}

/// Low-discrepancy scalar sequence.
pub fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

const HALTON_BASES: [usize; 6] = [2, 3, 5, 7, 11, 13];

/// Maps a raw point onto the anisotropic sphere `sum_j |xi_j|^{n_j} = 1`.
fn to_aniso_sphere(y: &[f64], n: &[u32]) -> Option<Vec<f64>> {
    let norm: f64 = y
        .iter()
        .zip(n)
        .map(|(v, &nj)| v.abs().powi(nj as i32))
        .sum();
    if norm < 1e-12 {
        return None;
    }
    Some(
        y.iter()
            .zip(n)
            .map(|(v, &nj)| v * (1.0 / norm).powf(1.0 / nj as f64))
            .collect(),
    )
}

/// Full exact/numeric analysis of a profile per the anisotropic principal
/// part: degrees, principal-part positivity on the anisotropic sphere, and
/// the four indices when semi-ellipticity is certified by the grid.
pub fn semi_elliptic_analyze(profile: &OperatorProfile, cfg: &SemiEllipticConfig) -> IndexReport {
    let p = profile.poly();
    let d = profile.d();
    let nv = d + 1;
    let b0_def = b0_exact(profile);
    let q_degree_ok = (1..=profile.m())
        .all(|k| profile.q(k).total_degree() <= profile.q(0).total_degree());

    // forced anisotropy vector
    let n: Vec<u32> = (0..nv).map(|j| p.degree_in(j)).collect();
    let m = profile.m() as u32;
    debug_assert_eq!(n[d], m);

    // structural screen: every term must satisfy |beta : n| <= 1, exactly
    let mut principal = MultiPoly::zero(nv);
    for (e, c) in p.terms() {
        let mut weight = Rat::zero();
        for j in 0..nv {
            if e.0[j] > 0 {
                weight += Rat::new(BigInt::from(e.0[j]), BigInt::from(n[j]));
            }
        }
        if weight > Rat::from_integer(1.into()) {
            return IndexReport {
                b0: b0_def,
                semi_elliptic: SemiEllipticVerdict::No {
                    reason: NoReason::ExcessTerm {
                        exponent: e.0.clone(),
                    },
                },
                exact: None,
                case_tag: CaseTag::NotSemiElliptic,
                q_degree_ok,
                degree_consistent: true,
                grid_points: 0,
                grid_min_modulus: 0.0,
            };
        }
        if weight == Rat::from_integer(1.into()) {
            principal.add_term(e.clone(), c.clone());
        }
    }

    // quasi-random positivity scan of the principal part on the anisotropic sphere
    let scale = principal.coeff_scale().max(1e-300);
    let threshold = cfg.threshold_rel * scale;
    let mut min_mod = f64::INFINITY;
    let mut min_at = vec![0.0; nv];
    let eval_modulus = |xi: &[f64]| -> f64 {
        let pt: Vec<C64> = xi.iter().map(|&v| Complex::new(v, 0.0)).collect();
        principal.eval(&pt).expect("dimension checked").norm()
    };
    for i in 0..cfg.grid_points {
        let y: Vec<f64> = (0..nv)
            .map(|j| 2.0 * halton(i + cfg.halton_skip, HALTON_BASES[j % HALTON_BASES.len()]) - 1.0)
            .collect();
        let Some(xi) = to_aniso_sphere(&y, &n) else {
            continue;
        };
        let v = eval_modulus(&xi);
        if v < min_mod {
            min_mod = v;
            min_at = xi;
        }
    }

    // local descent from the grid argmin; a grid cannot certify a zero by
    // itself, and positivity is claimed only when the descent stalls high
    let mut y = min_at.clone();
    let mut best = min_mod;
    let mut step = 0.05;
    for _ in 0..400 {
        let mut improved = false;
        for j in 0..nv {
            for dir in [-1.0, 1.0] {
                let mut cand = y.clone();
                cand[j] += dir * step;
                if let Some(xi) = to_aniso_sphere(&cand, &n) {
                    let v = eval_modulus(&xi);
                    if v < best {
                        best = v;
                        y = xi;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
    }
    let semi = if best < cfg.zero_certificate_rel * scale {
        SemiEllipticVerdict::No {
            reason: NoReason::PrincipalZero {
                xi: y,
                modulus: best,
            },
        }
    } else if min_mod > threshold && best > threshold {
        SemiEllipticVerdict::Yes { n: n.clone() }
    } else {
        SemiEllipticVerdict::Inconclusive {
            min_modulus: best,
            at: y,
        }
    };

    let deg_p = *n.iter().max().expect("nonempty");
    let degree_consistent = p.total_degree() == deg_p;

    let (exact, case_tag) = match &semi {
        SemiEllipticVerdict::Yes { n } => {
            let nx_min = *n[..d].iter().min().expect("d >= 1");
            let nx_max = *n[..d].iter().max().expect("d >= 1");
            let exact = ExactIndices {
                n: n.clone(),
                a0: Rat::new(BigInt::from(nx_min), BigInt::from(m)),
                b0: Rat::new(BigInt::from(nx_max), BigInt::from(m)),
                gamma0: Rat::new(BigInt::from(nx_min), BigInt::from(deg_p)),
                mu0: Rat::new(BigInt::from(m), BigInt::from(deg_p)),
            };
            let tag = if m == deg_p && nx_min == deg_p {
                CaseTag::Elliptic
            } else if m < deg_p {
                CaseTag::ParabolicLike
            } else {
                CaseTag::CaseIii
            };
            (Some(exact), tag)
        }
        _ => (None, CaseTag::NotSemiElliptic),
    };

    IndexReport {
        b0: b0_def,
        semi_elliptic: semi,
        exact,
        case_tag,
        q_degree_ok,
        degree_consistent,
        grid_points: cfg.grid_points,
        grid_min_modulus: min_mod,
    }
}

// ---------------------------------------------------------------------------
// Root margins
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RootMargin {
    pub x: Vec<f64>,
    pub value: f64,
    pub roots_im: Vec<f64>,
}

/// `d(x) = min |Im zeta|` over the roots of `t -> P(x, t)`.
pub fn root_margin(profile: &OperatorProfile, x: &[f64]) -> Result<RootMargin, IndexError> {
    assert_eq!(x.len(), profile.d());
    let m = profile.m();
    let xc: Vec<C64> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    // monic coefficients c_k = Q_k(x), c_m = 1
    let coeffs: Vec<C64> = (0..=m)
        .map(|k| profile.q(k).eval(&xc).expect("dimension checked"))
        .collect();
    let roots = polynomial_roots(&coeffs)?;
    let value = roots
        .iter()
        .map(|z| z.im.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(RootMargin {
        x: x.to_vec(),
        value,
        roots_im: roots.iter().map(|z| z.im).collect(),
    })
}

/// All roots of `sum_k c_k z^k` (`c_m` nonzero) by companion-matrix
/// eigenvalues: shifted QR on the (already Hessenberg) companion matrix.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>, IndexError> {
    let m = coeffs.len() - 1;
    assert!(m >= 1);
    let lead = coeffs[m];
    if lead.norm() == 0.0 {
        return Err(IndexError::RootSolverFailed);
    }
    if m == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let monic: Vec<C64> = coeffs[..m].iter().map(|c| c / lead).collect();
    if m == 2 {
        return Ok(quadratic_roots(monic[1], monic[0]).to_vec());
    }
    // companion matrix, upper Hessenberg by construction
    let mut h = vec![vec![Complex::new(0.0, 0.0); m]; m];
    for i in 1..m {
        h[i][i - 1] = Complex::new(1.0, 0.0);
    }
    for i in 0..m {
        h[i][m - 1] = -monic[i];
    }
    hessenberg_eigenvalues(h)
}

fn quadratic_roots(b: C64, c: C64) -> [C64; 2] {
    // z^2 + b z + c
    let disc = (b * b - c * 4.0).sqrt();
    // pick the sign that avoids cancellation
    let q = if (b + disc).norm() >= (b - disc).norm() {
        -(b + disc) * 0.5
    } else {
        -(b - disc) * 0.5
    };
    if q.norm() == 0.0 {
        [Complex::new(0.0, 0.0), Complex::new(0.0, 0.0)]
    } else {
        [q, c / q]
    }
}

/// Complex shifted QR with Givens rotations and deflation.
fn hessenberg_eigenvalues(mut h: Vec<Vec<C64>>) -> Result<Vec<C64>, IndexError> {
    let n = h.len();
    let mut eigs: Vec<C64> = Vec::with_capacity(n);
    let mut hi = n; // active block is 0..hi
    let mut iters_on_block = 0usize;
    while hi > 0 {
        if hi == 1 {
            eigs.push(h[0][0]);
            hi = 0;
            continue;
        }
        // deflate negligible subdiagonals from the bottom
        let mut deflated = false;
        for i in (1..hi).rev() {
            let eps = 1e-15 * (h[i - 1][i - 1].norm() + h[i][i].norm()) + 1e-300;
            if h[i][i - 1].norm() <= eps {
                if i == hi - 1 {
                    eigs.push(h[hi - 1][hi - 1]);
                    hi -= 1;
                    iters_on_block = 0;
                    deflated = true;
                    break;
                }
            }
        }
        if deflated {
            continue;
        }
        if hi == 2 || (hi >= 2 && h[hi - 1][hi - 2].norm() < 1e-300) {
            // handled above; fallthrough for hi == 2 block
        }
        if hi == 2 {
            let r = quadratic_roots(
                -(h[0][0] + h[1][1]),
                h[0][0] * h[1][1] - h[0][1] * h[1][0],
            );
            eigs.push(r[0]);
            eigs.push(r[1]);
            hi = 0;
            continue;
        }
        iters_on_block += 1;
        if iters_on_block > 200 {
            return Err(IndexError::RootSolverFailed);
        }
        // Wilkinson shift from the trailing 2x2
        let a = h[hi - 2][hi - 2];
        let b = h[hi - 2][hi - 1];
        let c = h[hi - 1][hi - 2];
        let dd = h[hi - 1][hi - 1];
        let r = quadratic_roots(-(a + dd), a * dd - b * c);
        let mut shift = if (r[0] - dd).norm() < (r[1] - dd).norm() {
            r[0]
        } else {
            r[1]
        };
        if iters_on_block % 24 == 0 {
            // rare exceptional shift against stagnation
            shift += Complex::new(c.norm() + 1e-3, 0.0);
        }
        for i in 0..hi {
            h[i][i] -= shift;
        }
        // QR by Givens on the Hessenberg band, then RQ
        let mut rots: Vec<(usize, f64, C64)> = Vec::with_capacity(hi - 1);
        for i in 0..hi - 1 {
            let f = h[i][i];
            let g = h[i + 1][i];
            let (cc, ss) = givens(f, g);
            for j in i..hi {
                let x = h[i][j];
                let y = h[i + 1][j];
                h[i][j] = x * cc + y * ss;
                h[i + 1][j] = -x * ss.conj() + y * cc;
            }
            rots.push((i, cc, ss));
        }
        for &(i, cc, ss) in &rots {
            for rrow in h.iter_mut().take((i + 2).min(hi)) {
                let x = rrow[i];
                let y = rrow[i + 1];
                rrow[i] = x * cc + y * ss.conj();
                rrow[i + 1] = -x * ss + y * cc;
            }
        }
        for i in 0..hi {
            h[i][i] += shift;
        }
    }
    Ok(eigs)
}

/// Givens pair `(c, s)` with real `c` zeroing `g` against `f`.
fn givens(f: C64, g: C64) -> (f64, C64) {
    if g.norm() == 0.0 {
        return (1.0, Complex::new(0.0, 0.0));
    }
    if f.norm() == 0.0 {
        return (0.0, g.conj() / g.norm());
    }
    let fn_ = f.norm();
    let r = (fn_ * fn_ + g.norm_sqr()).sqrt();
    let c = fn_ / r;
    let s = (f / fn_) * g.conj() / r;
    (c, s)
}

// ---------------------------------------------------------------------------
// Numerical maximality probe
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ProbeConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub shells_per_decade: usize,
    pub random_directions: usize,
    pub epsilon: f64,
    /// Ratio of outer to inner shell constant that counts as "explodes".
    pub growth_fail: f64,
    /// Largest ratio still accepted as bounded.
    pub growth_pass: f64,
    pub halton_skip: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            r_min: 1e-2,
            r_max: 1e3,
            shells_per_decade: 6,
            random_directions: 8,
            epsilon: 0.1,
            growth_fail: 8.0,
            growth_pass: 5.0,
            halton_skip: 101,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthScan {
    /// sup over the whole grid of the tested ratio.
    pub fitted_c: f64,
    /// max over directions/derivative orders of outer/inner shell ratio.
    pub growth: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericProbe {
    pub a: f64,
    pub derivative_scan: GrowthScan,
    pub margin_scan: GrowthScan,
    pub bounded: bool,
    /// Scans at `a (1 + epsilon)`; maximality requires these to explode.
    pub probe_derivative_scan: GrowthScan,
    pub probe_margin_scan: GrowthScan,
    pub maximality_confirmed: bool,
    pub pass: bool,
}

fn directions(d: usize, cfg: &ProbeConfig) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for j in 0..d {
        for sign in [1.0, -1.0] {
            let mut u = vec![0.0; d];
            u[j] = sign;
            dirs.push(u);
        }
    }
    let mut i = cfg.halton_skip;
    while dirs.len() < 2 * d + cfg.random_directions {
        let y: Vec<f64> = (0..d)
            .map(|j| 2.0 * halton(i, HALTON_BASES[j % HALTON_BASES.len()]) - 1.0)
            .collect();
        i += 1;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 0.3 {
            continue;
        }
        dirs.push(y.iter().map(|v| v / norm).collect());
    }
    dirs
}

fn t_samples() -> Vec<f64> {
    let mut t = vec![0.0];
    for k in -2..=3 {
        let v = 10f64.powi(k);
        t.push(v);
        t.push(-v);
    }
    t
}

/// Scans `|x|^{a l} |d_t^l P| / |P|` over rays and derivative orders `l >= 1`.
fn scan_derivative_ratios(profile: &OperatorProfile, a: f64, cfg: &ProbeConfig) -> GrowthScan {
    let d = profile.d();
    let m = profile.m();
    let nv = d + 1;
    let dt_polys: Vec<MultiPoly> = (0..=m)
        .map(|l| {
            let mut order = vec![0u32; nv];
            order[d] = l as u32;
            profile.poly().derivative(&MultiIndex(order))
        })
        .collect();
    let shells = shell_radii(cfg);
    let ts = t_samples();
    let mut fitted_c = 0.0f64;
    let mut growth = 0.0f64;
    for dir in directions(d, cfg) {
        for l in 1..=m {
            let ratio_at = |r: f64| -> f64 {
                let mut best = 0.0f64;
                for &t in &ts {
                    let mut pt: Vec<C64> = dir.iter().map(|&u| Complex::new(r * u, 0.0)).collect();
                    pt.push(Complex::new(t, 0.0));
                    let denom = profile.poly().eval(&pt).expect("dim").norm();
                    if denom < 1e-280 {
                        continue;
                    }
                    let numer = dt_polys[l].eval(&pt).expect("dim").norm();
                    best = best.max(r.powf(a * l as f64) * numer / denom);
                }
                best
            };
            let first = ratio_at(shells[0]);
            let last = ratio_at(*shells.last().unwrap());
            for &r in &shells {
                fitted_c = fitted_c.max(ratio_at(r));
            }
            if first > 0.0 {
                growth = growth.max(last / first);
            }
        }
    }
    GrowthScan { fitted_c, growth }
}

/// Scans `|x|^a / d(x)` along rays.
fn scan_margin_ratios(profile: &OperatorProfile, a: f64, cfg: &ProbeConfig) -> GrowthScan {
    let shells = shell_radii(cfg);
    let mut fitted_c = 0.0f64;
    let mut growth = 0.0f64;
    for dir in directions(profile.d(), cfg) {
        let ratio_at = |r: f64| -> f64 {
            let x: Vec<f64> = dir.iter().map(|&u| r * u).collect();
            match root_margin(profile, &x) {
                Ok(rm) if rm.value > 1e-280 => r.powf(a) / rm.value,
                _ => 0.0,
            }
        };
        let first = ratio_at(shells[0]);
        let last = ratio_at(*shells.last().unwrap());
        for &r in &shells {
            fitted_c = fitted_c.max(ratio_at(r));
        }
        if first > 0.0 {
            growth = growth.max(last / first);
        }
    }
    GrowthScan { fitted_c, growth }
}

fn shell_radii(cfg: &ProbeConfig) -> Vec<f64> {
    let decades = (cfg.r_max / cfg.r_min).log10();
    let count = (decades * cfg.shells_per_decade as f64).round() as usize;
    (0..=count)
        .map(|i| cfg.r_min * 10f64.powf(decades * i as f64 / count as f64))
        .collect()
}

/// Checks both root-margin characterizations of the exponent `a` on a ray
/// grid and probes maximality by re-scanning at `a (1 + epsilon)`.
pub fn verify_a0_numeric(profile: &OperatorProfile, a: f64, cfg: &ProbeConfig) -> NumericProbe {
    let derivative_scan = scan_derivative_ratios(profile, a, cfg);
    let margin_scan = scan_margin_ratios(profile, a, cfg);
    let bounded = derivative_scan.growth <= cfg.growth_pass && margin_scan.growth <= cfg.growth_pass;
    let a_probe = a * (1.0 + cfg.epsilon);
    let probe_derivative_scan = scan_derivative_ratios(profile, a_probe, cfg);
    let probe_margin_scan = scan_margin_ratios(profile, a_probe, cfg);
    let maximality_confirmed = probe_derivative_scan.growth >= cfg.growth_fail
        || probe_margin_scan.growth >= cfg.growth_fail;
    NumericProbe {
        a,
        derivative_scan,
        margin_scan,
        bounded,
        probe_derivative_scan,
        probe_margin_scan,
        maximality_confirmed,
        pass: bounded && maximality_confirmed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyops::{
        anisotropic_poly, cauchy_riemann_poly, decompose_t, heat_poly, laplace_poly,
    };
    use crate::rat::rat;

    #[test]
    fn b0_values() {
        let heat = decompose_t(&heat_poly()).unwrap();
        assert_eq!(b0_exact(&heat), rat(2, 1));
        let laplace = decompose_t(&laplace_poly()).unwrap();
        assert_eq!(b0_exact(&laplace), rat(1, 1));
        let aniso = decompose_t(&anisotropic_poly()).unwrap();
        assert_eq!(b0_exact(&aniso), rat(2, 1));
    }

    fn quick_cfg() -> SemiEllipticConfig {
        SemiEllipticConfig {
            grid_points: 20_000,
            ..Default::default()
        }
    }

    #[test]
    fn laplace_is_elliptic() {
        let profile = decompose_t(&laplace_poly()).unwrap();
        let report = semi_elliptic_analyze(&profile, &quick_cfg());
        let exact = report.exact.expect("semi-elliptic");
        assert_eq!(exact.n, vec![2, 2]);
        assert_eq!(exact.a0, rat(1, 1));
        assert_eq!(exact.b0, rat(1, 1));
        assert_eq!(exact.gamma0, rat(1, 1));
        assert_eq!(exact.mu0, rat(1, 1));
        assert_eq!(report.case_tag, CaseTag::Elliptic);
        assert!(report.q_degree_ok && report.degree_consistent);
    }

    #[test]
    fn heat_is_parabolic_like() {
        let profile = decompose_t(&heat_poly()).unwrap();
        let report = semi_elliptic_analyze(&profile, &quick_cfg());
        let exact = report.exact.expect("semi-elliptic");
        assert_eq!(exact.n, vec![2, 1]);
        assert_eq!(exact.a0, rat(2, 1));
        assert_eq!(exact.b0, rat(2, 1));
        assert_eq!(exact.gamma0, rat(1, 1));
        assert_eq!(exact.mu0, rat(1, 2));
        assert_eq!(report.case_tag, CaseTag::ParabolicLike);
    }

    #[test]
    fn anisotropic_example() {
        let profile = decompose_t(&anisotropic_poly()).unwrap();
        let report = semi_elliptic_analyze(&profile, &quick_cfg());
        let exact = report.exact.expect("semi-elliptic");
        assert_eq!(exact.n, vec![2, 4, 2]);
        assert_eq!(exact.a0, rat(1, 1));
        assert_eq!(exact.b0, rat(2, 1));
        assert_eq!(exact.gamma0, rat(1, 2));
        assert_eq!(exact.mu0, rat(1, 2));
    }

    #[test]
    fn index_ordering_chain() {
        // gamma0 <= a0 <= b0 and gamma0, mu0 <= 1 on every semi-elliptic output
        for poly in [
            heat_poly(),
            laplace_poly(),
            anisotropic_poly(),
            cauchy_riemann_poly(),
        ] {
            let profile = decompose_t(&poly).unwrap();
            let report = semi_elliptic_analyze(&profile, &quick_cfg());
            let e = report.exact.expect("reference operators are semi-elliptic");
            let one = rat(1, 1);
            assert!(e.gamma0 <= e.a0 && e.a0 <= e.b0);
            assert!(e.gamma0 <= one && e.mu0 <= one);
            assert_eq!(e.b0, b0_exact(&profile), "degree-ratio route disagrees");
            assert!(report.degree_consistent);
        }
    }

    #[test]
    fn wave_operator_is_rejected() {
        // t^2 - x^2 has a real principal zero on the diagonal
        let mut p = MultiPoly::zero(2);
        p.add_term(MultiIndex(vec![0, 2]), crate::rat::crat_int(1, 0));
        p.add_term(MultiIndex(vec![2, 0]), crate::rat::crat_int(-1, 0));
        let profile = decompose_t(&p).unwrap();
        let report = semi_elliptic_analyze(&profile, &quick_cfg());
        match report.semi_elliptic {
            SemiEllipticVerdict::No {
                reason: NoReason::PrincipalZero { .. },
            } => {}
            ref v => panic!("expected a principal zero, got {v:?}"),
        }
        assert_eq!(report.case_tag, CaseTag::NotSemiElliptic);
    }

    #[test]
    fn excess_term_is_structural_no() {
        // x^2 t^2 + x^3 + t^3: the mixed term exceeds the simplex
        let mut p = MultiPoly::zero(2);
        p.add_term(MultiIndex(vec![2, 2]), crate::rat::crat_int(1, 0));
        p.add_term(MultiIndex(vec![3, 0]), crate::rat::crat_int(1, 0));
        p.add_term(MultiIndex(vec![0, 3]), crate::rat::crat_int(1, 0));
        let profile = decompose_t(&p).unwrap();
        let report = semi_elliptic_analyze(&profile, &quick_cfg());
        assert!(matches!(
            report.semi_elliptic,
            SemiEllipticVerdict::No {
                reason: NoReason::ExcessTerm { .. }
            }
        ));
    }

    #[test]
    fn root_margins() {
        let heat = decompose_t(&heat_poly()).unwrap();
        for &x in &[0.5, 1.0, 2.0, 7.0] {
            let rm = root_margin(&heat, &[x]).unwrap();
            assert!((rm.value - x * x).abs() < 1e-10 * (1.0 + x * x));
        }
        let laplace = decompose_t(&laplace_poly()).unwrap();
        for &x in &[0.5, 3.0] {
            let rm = root_margin(&laplace, &[x]).unwrap();
            assert!((rm.value - x.abs()).abs() < 1e-10);
        }
        let cr = decompose_t(&cauchy_riemann_poly()).unwrap();
        let rm = root_margin(&cr, &[2.0]).unwrap();
        assert!((rm.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn roots_of_random_polynomials() {
        // residual check against the defining polynomial
        let polys: Vec<Vec<C64>> = vec![
            vec![
                Complex::new(1.0, -2.0),
                Complex::new(0.0, 1.5),
                Complex::new(-3.0, 0.2),
                Complex::new(1.0, 0.0),
            ],
            vec![
                Complex::new(0.5, 0.5),
                Complex::new(2.0, -1.0),
                Complex::new(0.0, 0.0),
                Complex::new(-1.0, 2.0),
                Complex::new(1.0, 0.0),
            ],
            vec![
                Complex::new(-1.0, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(1.0, 0.0),
            ],
        ];
        for coeffs in polys {
            let roots = polynomial_roots(&coeffs).unwrap();
            assert_eq!(roots.len(), coeffs.len() - 1);
            for z in roots {
                let mut val = Complex::new(0.0, 0.0);
                let mut pow = Complex::new(1.0, 0.0);
                for c in &coeffs {
                    val += c * pow;
                    pow *= z;
                }
                assert!(val.norm() < 1e-8, "residual {} at root {z}", val.norm());
            }
        }
    }

    #[test]
    fn heat_probe_passes_and_probes_fail_above() {
        let heat = decompose_t(&heat_poly()).unwrap();
        let cfg = ProbeConfig {
            shells_per_decade: 3,
            random_directions: 2,
            ..Default::default()
        };
        let probe = verify_a0_numeric(&heat, 2.0, &cfg);
        assert!(probe.bounded, "{probe:?}");
        assert!(probe.maximality_confirmed, "{probe:?}");
        assert!(probe.pass);
        // asking for a0 = 2.2 directly must fail boundedness
        let over = verify_a0_numeric(&heat, 2.2, &cfg);
        assert!(!over.bounded);
        assert!(!over.pass);
    }
}
