//! Batch driver: command dispatch, JSON job ingestion, deterministic report
//! emission.
//!
//! Every run emits one JSON report carrying the schema tag, an echo of the
//! job, the results, a provenance block and accumulated warnings. Exit codes:
//! 0 success, 2 verdict failure (an asserted identity failed), 3 numeric
//! non-convergence, 64 malformed input.

use crate::boundary::{
    bv_direct, bv_stokes, growth_fit, stokes_check, BvError, BvSchedule, FundSolConfig,
    FundamentalSolution1D, KernelKind, StokesCfg, TestField, ZeroSolution,
};
use crate::cauchyext::{
    build_extension, cauchy_explicit, cauchy_recursive, verify_extension, ExtMode, VerifyConfig,
};
use crate::indices::{
    b0_exact, semi_elliptic_analyze, verify_a0_numeric, ProbeConfig, SemiEllipticConfig,
};
use crate::polyops::{decompose_t, MultiPoly};
use crate::symfun::{BumpFun, SymFun};
use crate::weights::{check_conditions, WeightSeq, DEFAULT_PMAX};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

pub const REPORT_SCHEMA: &str = "hypobv-report/1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_SCHEMA: i32 = 64;

/// Fixed skip offsets of the low-discrepancy generators; echoed into every
/// report so inconclusive/pass boundaries are reproducible.
pub const GRID_SEED: u64 = 17;

fn parse_probe(raw: &str) -> Result<f64, String> {
    let raw = raw.trim();
    let raw = raw.strip_prefix("a=").unwrap_or(raw);
    raw.parse().map_err(|e| format!("bad probe value: {e}"))
}

#[derive(Parser, Debug)]
#[command(name = "hypobv", version, about = "symbolic-numeric lab for boundary values of hypoelliptic operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reserved; jobs run deterministically regardless.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Echo the grid seed in the report (always on; flag kept for scripts).
    #[arg(long, global = true, default_value_t = true)]
    pub seed_echo: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Index report of a polynomial (semi-elliptic analysis + probes).
    Indices {
        #[arg(long)]
        poly: PathBuf,
        /// Numeric maximality probe at this exponent (accepts `a=V` or `V`).
        #[arg(long, value_parser = parse_probe)]
        probe: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
    },
    /// Condition verdicts for a weight sequence.
    Weights {
        /// Gevrey exponent, mutually exclusive with --sequence.
        #[arg(long)]
        sigma: Option<f64>,
        /// CSV file of (index, value) pairs.
        #[arg(long)]
        sequence: Option<PathBuf>,
        /// Exponent for the quotient condition.
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_PMAX)]
        p_max: usize,
    },
    /// Build both recursion-operator tables and compare exactly.
    Cauchy {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, default_value_t = 8)]
        order: usize,
    },
    /// Build an extension of boundary data and verify it.
    Extend {
        #[arg(long)]
        poly: PathBuf,
        /// JSON array of test functions, one per trace order.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "plain")]
        mode: String,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        #[arg(long, default_value_t = 16)]
        order: usize,
        /// CSV of (t, residual, weighted residual) rows.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Boundary value of a reference kernel against a datum.
    Bv {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value = "both")]
        method: String,
        #[arg(long, default_value_t = 0.25)]
        t0: f64,
        #[arg(long, default_value_t = 12)]
        steps: usize,
        /// Component index for the interior route.
        #[arg(long, default_value_t = 0)]
        j: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// CSV of the approximant trail.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Both sides of the interior integration-by-parts identity.
    Stokes {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        a: f64,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Fundamental solution diagnostics (one space variable).
    Fundsol {
        #[arg(long)]
        poly: PathBuf,
        /// JSON array [phi_x, phi_t] for the delta check.
        #[arg(long)]
        check_delta: Option<PathBuf>,
        /// Evaluate E at "x,t".
        #[arg(long)]
        eval: Option<String>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Run a JSON job file.
    Run { job: PathBuf },
    /// Run every job file in a directory.
    Suite { dir: PathBuf },
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub job: Value,
    pub results: Value,
    pub provenance: Value,
    pub warnings: Vec<String>,
}

pub struct Outcome {
    pub report: Report,
    pub exit: i32,
}

fn provenance() -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "grid_seed": GRID_SEED,
    })
}

fn report(command: &str, job: Value, results: Value, warnings: Vec<String>, exit: i32) -> Outcome {
    Outcome {
        report: Report {
            schema: REPORT_SCHEMA,
            command: command.into(),
            job,
            results,
            provenance: provenance(),
            warnings,
        },
        exit,
    }
}

fn schema_error(command: &str, job: Value, msg: String) -> Outcome {
    report(
        command,
        job,
        json!({ "error": msg }),
        vec!["schema error".into()],
        EXIT_SCHEMA,
    )
}

fn numeric_error(command: &str, job: Value, msg: String) -> Outcome {
    report(
        command,
        job,
        json!({ "error": msg }),
        vec!["numeric non-convergence".into()],
        EXIT_NUMERIC,
    )
}

// ---------------------------------------------------------------------------
// Input loading
// ---------------------------------------------------------------------------

fn load_poly(path: &Path) -> Result<MultiPoly, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    MultiPoly::from_json(&text).map_err(|e| e.to_string())
}

fn load_phis(path: &Path) -> Result<Vec<SymFun>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    match value {
        Value::Array(items) => items
            .iter()
            .map(|item| SymFun::from_json(&item.to_string()).map_err(|e| e.to_string()))
            .collect(),
        obj @ Value::Object(_) => Ok(vec![
            SymFun::from_json(&obj.to_string()).map_err(|e| e.to_string())?
        ]),
        _ => Err("expected a test function or an array of them".into()),
    }
}

fn load_sequence_csv(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut indexed: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let idx: usize = parts
            .next()
            .ok_or_else(|| format!("line {}: missing index", lineno + 1))?
            .trim()
            .parse()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let val: f64 = parts
            .next()
            .ok_or_else(|| format!("line {}: missing value", lineno + 1))?
            .trim()
            .parse()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        indexed.push((idx, val));
    }
    indexed.sort_by_key(|&(i, _)| i);
    for (expect, &(i, _)) in indexed.iter().enumerate() {
        if i != expect {
            return Err(format!("sequence indices must be 0..n, got {i}"));
        }
    }
    Ok(indexed.into_iter().map(|(_, v)| v).collect())
}

fn kernel_kind(name: &str) -> Result<KernelKind, String> {
    match name {
        "heat" => Ok(KernelKind::Heat),
        "poisson" => Ok(KernelKind::Poisson),
        "cauchy" => Ok(KernelKind::Cauchy),
        "smooth" | "smooth-heat" => Ok(KernelKind::SmoothHeat),
        other => Err(format!("unknown kernel {other:?}")),
    }
}

fn kernel_with_profile(
    name: &str,
) -> Result<(ZeroSolution, crate::polyops::OperatorProfile), String> {
    let kind = kernel_kind(name)?;
    let kernel = ZeroSolution::kind(kind);
    let poly = kernel.operator().expect("canonical kernels");
    let profile = decompose_t(&poly).map_err(|e| e.to_string())?;
    Ok((kernel, profile))
}

// ---------------------------------------------------------------------------
// Command execution
// ---------------------------------------------------------------------------

pub fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Indices { poly, probe, grid } => run_indices(poly, *probe, *grid),
        Command::Weights {
            sigma,
            sequence,
            a,
            p_max,
        } => run_weights(*sigma, sequence.as_deref(), *a, *p_max),
        Command::Cauchy { poly, order } => run_cauchy(poly, *order),
        Command::Extend {
            poly,
            data,
            mode,
            sigma,
            h,
            order,
            csv,
        } => run_extend(poly, data, mode, *sigma, *h, *order, csv.as_deref()),
        Command::Bv {
            kernel,
            phi,
            method,
            t0,
            steps,
            j,
            tol,
            csv,
        } => run_bv(kernel, phi, method, *t0, *steps, *j, *tol, csv.as_deref()),
        Command::Stokes {
            kernel,
            phi,
            a,
            b,
            tol,
        } => run_stokes(kernel, phi, *a, *b, *tol),
        Command::Fundsol {
            poly,
            check_delta,
            eval,
            tol,
        } => run_fundsol(poly, check_delta.as_deref(), eval.as_deref(), *tol),
        Command::Run { job } => run_job_file(job),
        Command::Suite { dir } => run_suite(dir),
    }
}

fn run_indices(poly_path: &Path, probe: Option<f64>, grid: usize) -> Outcome {
    let job = json!({ "poly": poly_path.display().to_string(), "probe": probe, "grid": grid });
    let poly = match load_poly(poly_path) {
        Ok(p) => p,
        Err(e) => return schema_error("indices", job, e),
    };
    let profile = match decompose_t(&poly) {
        Ok(p) => p,
        Err(e) => return schema_error("indices", job, e.to_string()),
    };
    let cfg = SemiEllipticConfig {
        grid_points: grid,
        ..Default::default()
    };
    let idx = semi_elliptic_analyze(&profile, &cfg);
    let mut warnings = Vec::new();
    if !idx.q_degree_ok {
        warnings.push("deg Q_k exceeds deg Q_0 for some k >= 1".into());
    }
    if matches!(
        idx.semi_elliptic,
        crate::indices::SemiEllipticVerdict::Inconclusive { .. }
    ) {
        warnings.push("semi-ellipticity inconclusive on the grid".into());
    }
    let numeric = probe.map(|a| verify_a0_numeric(&profile, a, &ProbeConfig::default()));
    let pass = numeric.as_ref().map(|p| p.pass).unwrap_or(true);
    let results = json!({
        "b0": crate::rat::rat_to_string(&idx.b0),
        "report": serde_json::to_value(&idx).expect("serializable"),
        "probe": numeric.map(|p| serde_json::to_value(&p).expect("serializable")),
    });
    let exit = if pass { EXIT_OK } else { EXIT_VERDICT };
    report("indices", job, results, warnings, exit)
}

fn run_weights(
    sigma: Option<f64>,
    sequence: Option<&Path>,
    a: Option<f64>,
    p_max: usize,
) -> Outcome {
    let job = json!({
        "sigma": sigma,
        "sequence": sequence.map(|p| p.display().to_string()),
        "a": a,
        "p_max": p_max,
    });
    let seq = match (sigma, sequence) {
        (Some(s), None) => WeightSeq::gevrey(s, p_max),
        (None, Some(path)) => match load_sequence_csv(path).and_then(|vals| {
            WeightSeq::explicit(&vals).map_err(|e| e.to_string())
        }) {
            Ok(m) => m,
            Err(e) => return schema_error("weights", job, e),
        },
        _ => {
            return schema_error(
                "weights",
                job,
                "provide exactly one of --sigma or --sequence".into(),
            )
        }
    };
    let rep = check_conditions(&seq, a);
    // a failed condition verdict is a verdict failure for the job
    let any_failed = rep.m1.failed()
        || rep.m2.failed()
        || rep.m2_star.failed()
        || rep.m3_prime.failed()
        || rep.m4a.as_ref().map(|r| r.verdict.failed()).unwrap_or(false);
    let results = serde_json::to_value(&rep).expect("serializable");
    let exit = if any_failed { EXIT_VERDICT } else { EXIT_OK };
    report("weights", job, results, Vec::new(), exit)
}

fn run_cauchy(poly_path: &Path, order: usize) -> Outcome {
    let job = json!({ "poly": poly_path.display().to_string(), "order": order });
    let poly = match load_poly(poly_path) {
        Ok(p) => p,
        Err(e) => return schema_error("cauchy", job, e),
    };
    let profile = match decompose_t(&poly) {
        Ok(p) => p,
        Err(e) => return schema_error("cauchy", job, e.to_string()),
    };
    let l_max = profile.m() + order;
    let rec = cauchy_recursive(&profile, l_max);
    let exp = cauchy_explicit(&profile, l_max);
    let tables_equal = (0..=l_max).all(|l| rec.op(l) == exp.op(l));
    let identity = rec.defining_identity_holds();
    let results = json!({
        "l_max": l_max,
        "tables_equal": tables_equal,
        "defining_identity": identity,
        "ops": (0..=l_max).map(|l| rec.op(l).to_string()).collect::<Vec<_>>(),
    });
    let exit = if tables_equal && identity {
        EXIT_OK
    } else {
        EXIT_VERDICT
    };
    report("cauchy", job, results, Vec::new(), exit)
}

fn run_extend(
    poly_path: &Path,
    data_path: &Path,
    mode: &str,
    sigma: Option<f64>,
    h: f64,
    order: usize,
    csv: Option<&Path>,
) -> Outcome {
    let job = json!({
        "poly": poly_path.display().to_string(),
        "data": data_path.display().to_string(),
        "mode": mode, "sigma": sigma, "h": h, "order": order,
    });
    let poly = match load_poly(poly_path) {
        Ok(p) => p,
        Err(e) => return schema_error("extend", job, e),
    };
    let profile = match decompose_t(&poly) {
        Ok(p) => p,
        Err(e) => return schema_error("extend", job, e.to_string()),
    };
    let phis = match load_phis(data_path) {
        Ok(p) => p,
        Err(e) => return schema_error("extend", job, e),
    };
    if phis.len() != profile.m() {
        return schema_error(
            "extend",
            job,
            format!("need {} data slots, got {}", profile.m(), phis.len()),
        );
    }
    let (ext_mode, gevrey_cfg) = match mode {
        "plain" => (ExtMode::Plain { order }, None),
        "finite" => (
            ExtMode::FiniteOrder {
                residual_order: order,
                bump: BumpFun::new(0.125, 0.5),
            },
            None,
        ),
        "gevrey" => {
            let Some(sigma) = sigma else {
                return schema_error("extend", job, "gevrey mode needs --sigma".into());
            };
            let weights = WeightSeq::gevrey(sigma, DEFAULT_PMAX);
            let b0 = crate::rat::rat_to_f64(&b0_exact(&profile));
            (
                ExtMode::GevreyCutoff {
                    weights: weights.clone(),
                    h,
                    b0,
                    amplitude: None,
                    bump: BumpFun::new(1.0, 2.0),
                    window_t_min: 2f64.powi(-10),
                },
                Some((weights, h, b0)),
            )
        }
        other => return schema_error("extend", job, format!("unknown mode {other:?}")),
    };
    let table = cauchy_recursive(&profile, profile.m() + order.max(4) + 2);
    let ext = match build_extension(&table, &phis, &ext_mode) {
        Ok(e) => e,
        Err(e) => return numeric_error("extend", job, e.to_string()),
    };
    let cfg = VerifyConfig {
        gevrey: gevrey_cfg,
        ..Default::default()
    };
    let rep = verify_extension(&ext, &cfg);
    if let Some(csv_path) = csv {
        let mut text = String::from("t,residual,weighted\n");
        let weighted = rep
            .weighted_fit
            .as_ref()
            .map(|w| w.weighted_profile.clone())
            .unwrap_or_default();
        for (i, (t, r)) in rep.residual_profile.iter().enumerate() {
            let w = weighted.get(i).map(|&(_, v)| v).unwrap_or(f64::NAN);
            text.push_str(&format!("{t},{r},{w}\n"));
        }
        if let Err(e) = std::fs::write(csv_path, text) {
            return numeric_error("extend", job, format!("csv write: {e}"));
        }
    }
    let traces_ok = rep.traces_exact.iter().all(|&b| b);
    let results = serde_json::to_value(&rep).expect("serializable");
    let exit = if traces_ok { EXIT_OK } else { EXIT_VERDICT };
    report("extend", job, results, Vec::new(), exit)
}

#[allow(clippy::too_many_arguments)]
fn run_bv(
    kernel: &str,
    phi_path: &Path,
    method: &str,
    t0: f64,
    steps: usize,
    j: usize,
    tol: f64,
    csv: Option<&Path>,
) -> Outcome {
    let job = json!({
        "kernel": kernel, "phi": phi_path.display().to_string(),
        "method": method, "t0": t0, "steps": steps, "j": j, "tol": tol,
    });
    let (f, profile) = match kernel_with_profile(kernel) {
        Ok(p) => p,
        Err(e) => return schema_error("bv", job, e),
    };
    if j >= profile.m() {
        return schema_error(
            "bv",
            job,
            format!("component {j} out of range for t-degree {}", profile.m()),
        );
    }
    let smooth = matches!(f, ZeroSolution::SmoothHeat);
    if smooth && t0 >= 0.2 {
        return schema_error(
            "bv",
            job,
            "the smooth reference lives on |t| < 1/4; use --t0 below 0.2".into(),
        );
    }
    let phis = match load_phis(phi_path) {
        Ok(p) => p,
        Err(e) => return schema_error("bv", job, e),
    };
    let phi = &phis[0];
    let schedule = BvSchedule {
        t0,
        steps,
        quad_tol: (tol * 1e-3).min(1e-9),
    };
    let run_direct = method == "direct" || method == "both";
    let run_stokes = method == "stokes" || method == "both";
    if !run_direct && !run_stokes {
        return schema_error("bv", job, format!("unknown method {method:?}"));
    }
    let mut results = serde_json::Map::new();
    let mut warnings = Vec::new();
    let mut trail_csv = String::from("t,s,re,im\n");
    let mut direct_v = None;
    let mut stokes_v = None;
    if run_direct {
        match bv_direct(&f, phi, &schedule) {
            Ok(r) => {
                for e in &r.trail {
                    trail_csv.push_str(&format!("{},{},{},{}\n", e.t, e.s, e.partial.0, e.partial.1));
                }
                direct_v = Some(r.value_c());
                results.insert("direct".into(), serde_json::to_value(&r).expect("ser"));
            }
            Err(e) => return numeric_error("bv", job, e.to_string()),
        }
    }
    if run_stokes {
        let growth = growth_fit(&f, (2f64.powi(-9), 0.25), None);
        let cfg = StokesCfg {
            kernel_growth: growth.poly_order,
            residual_order: growth.poly_order + 5,
            window: if smooth { 0.3 } else { 0.5 },
            ..Default::default()
        };
        match bv_stokes(&f, phi, j, &profile, &cfg) {
            Ok(r) => {
                stokes_v = Some(r.value_c());
                results.insert("stokes".into(), serde_json::to_value(&r).expect("ser"));
            }
            Err(e) => return numeric_error("bv", job, e.to_string()),
        }
    }
    let mut exit = EXIT_OK;
    if let (Some(a), Some(b)) = (direct_v, stokes_v) {
        let gap = (a - b).norm();
        results.insert("cross_method_gap".into(), json!(gap));
        if gap > tol {
            warnings.push(format!("methods disagree by {gap:.3e} (tol {tol:.1e})"));
            exit = EXIT_VERDICT;
        }
    }
    if let Some(csv_path) = csv {
        if let Err(e) = std::fs::write(csv_path, trail_csv) {
            return numeric_error("bv", job, format!("csv write: {e}"));
        }
    }
    report("bv", job, Value::Object(results), warnings, exit)
}

fn run_stokes(kernel: &str, phi_path: &Path, a: f64, b: f64, tol: f64) -> Outcome {
    let job = json!({
        "kernel": kernel, "phi": phi_path.display().to_string(),
        "a": a, "b": b, "tol": tol,
    });
    let (f, profile) = match kernel_with_profile(kernel) {
        Ok(p) => p,
        Err(e) => return schema_error("stokes", job, e),
    };
    let phis = match load_phis(phi_path) {
        Ok(p) => p,
        Err(e) => return schema_error("stokes", job, e),
    };
    let field = TestField::Separable {
        phi: phis[0].clone(),
        bump: BumpFun::new(b * 0.75, b * 1.5),
    };
    let x_rad = phis[0].support_radius(1e-16) + 1.0;
    match stokes_check(&f, &field, &profile, a, b, (-x_rad, x_rad), tol) {
        Ok(r) => {
            let ok = r.abs_diff < 10.0 * tol.max(1e-10);
            let exit = if ok { EXIT_OK } else { EXIT_VERDICT };
            report(
                "stokes",
                job,
                serde_json::to_value(&r).expect("ser"),
                Vec::new(),
                exit,
            )
        }
        Err(e) => numeric_error("stokes", job, e.to_string()),
    }
}

fn run_fundsol(
    poly_path: &Path,
    check_delta: Option<&Path>,
    eval: Option<&str>,
    tol: f64,
) -> Outcome {
    let job = json!({
        "poly": poly_path.display().to_string(),
        "check_delta": check_delta.map(|p| p.display().to_string()),
        "eval": eval,
        "tol": tol,
    });
    let poly = match load_poly(poly_path) {
        Ok(p) => p,
        Err(e) => return schema_error("fundsol", job, e),
    };
    let profile = match decompose_t(&poly) {
        Ok(p) => p,
        Err(e) => return schema_error("fundsol", job, e.to_string()),
    };
    let e_sol = match FundamentalSolution1D::new(&profile, &FundSolConfig::default()) {
        Ok(e) => e,
        Err(e) => return numeric_error("fundsol", job, e.to_string()),
    };
    let mut results = serde_json::Map::new();
    results.insert("ball_radius".into(), json!(e_sol.ball_radius));
    results.insert("contour_shift".into(), json!(e_sol.a_shift));
    let mut exit = EXIT_OK;
    if let Some(path) = check_delta {
        let phis = match load_phis(path) {
            Ok(p) => p,
            Err(e) => return schema_error("fundsol", job, e),
        };
        if phis.len() != 2 {
            return schema_error("fundsol", job, "delta check needs [phi_x, phi_t]".into());
        }
        match e_sol.check_delta(&phis[0], &phis[1]) {
            Ok((value, expected)) => {
                let gap = (value - num_complex::Complex::new(expected, 0.0)).norm();
                results.insert(
                    "delta".into(),
                    json!({ "value": [value.re, value.im], "expected": expected, "gap": gap }),
                );
                if gap > tol {
                    exit = EXIT_VERDICT;
                }
            }
            Err(e) => return numeric_error("fundsol", job, e.to_string()),
        }
    }
    if let Some(spec) = eval {
        let parts: Vec<f64> = spec
            .split(',')
            .filter_map(|s| s.trim().parse().ok())
            .collect();
        if parts.len() != 2 {
            return schema_error("fundsol", job, "eval expects \"x,t\"".into());
        }
        match e_sol.eval(parts[0], parts[1]) {
            Ok((v, gap)) => {
                results.insert(
                    "eval".into(),
                    json!({ "x": parts[0], "t": parts[1], "value": [v.re, v.im], "stability_gap": gap }),
                );
            }
            Err(e) => return numeric_error("fundsol", job, e.to_string()),
        }
    }
    report("fundsol", job, Value::Object(results), Vec::new(), exit)
}

// ---------------------------------------------------------------------------
// Job files and suites
// ---------------------------------------------------------------------------

fn cli_from_job(path: &Path, job: &Value) -> Result<Cli, String> {
    let obj = job.as_object().ok_or("job must be a JSON object")?;
    let command = obj
        .get("command")
        .and_then(Value::as_str)
        .ok_or("job needs a \"command\" string")?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let resolve = |v: &Value| -> Result<PathBuf, String> {
        let s = v.as_str().ok_or("path fields must be strings")?;
        let p = PathBuf::from(s);
        Ok(if p.is_relative() { dir.join(p) } else { p })
    };
    let get_f64 = |key: &str| obj.get(key).and_then(Value::as_f64);
    let get_usize = |key: &str| obj.get(key).and_then(Value::as_u64).map(|v| v as usize);
    let command = match command {
        "indices" => Command::Indices {
            poly: resolve(obj.get("poly").ok_or("indices needs \"poly\"")?)?,
            probe: get_f64("probe"),
            grid: get_usize("grid").unwrap_or(100_000),
        },
        "weights" => Command::Weights {
            sigma: get_f64("sigma"),
            sequence: obj.get("sequence").map(|v| resolve(v)).transpose()?,
            a: get_f64("a"),
            p_max: get_usize("p_max").unwrap_or(DEFAULT_PMAX),
        },
        "cauchy" => Command::Cauchy {
            poly: resolve(obj.get("poly").ok_or("cauchy needs \"poly\"")?)?,
            order: get_usize("order").unwrap_or(8),
        },
        "extend" => Command::Extend {
            poly: resolve(obj.get("poly").ok_or("extend needs \"poly\"")?)?,
            data: resolve(obj.get("data").ok_or("extend needs \"data\"")?)?,
            mode: obj
                .get("mode")
                .and_then(Value::as_str)
                .unwrap_or("plain")
                .to_string(),
            sigma: get_f64("sigma"),
            h: get_f64("h").unwrap_or(1.0),
            order: get_usize("order").unwrap_or(16),
            csv: obj.get("csv").map(|v| resolve(v)).transpose()?,
        },
        "bv" => Command::Bv {
            kernel: obj
                .get("kernel")
                .and_then(Value::as_str)
                .ok_or("bv needs \"kernel\"")?
                .to_string(),
            phi: resolve(obj.get("phi").ok_or("bv needs \"phi\"")?)?,
            method: obj
                .get("method")
                .and_then(Value::as_str)
                .unwrap_or("both")
                .to_string(),
            t0: get_f64("t0").unwrap_or(0.25),
            steps: get_usize("steps").unwrap_or(12),
            j: get_usize("j").unwrap_or(0),
            tol: get_f64("tol").unwrap_or(1e-3),
            csv: obj.get("csv").map(|v| resolve(v)).transpose()?,
        },
        "stokes" => Command::Stokes {
            kernel: obj
                .get("kernel")
                .and_then(Value::as_str)
                .ok_or("stokes needs \"kernel\"")?
                .to_string(),
            phi: resolve(obj.get("phi").ok_or("stokes needs \"phi\"")?)?,
            a: get_f64("a").unwrap_or(0.05),
            b: get_f64("b").unwrap_or(0.5),
            tol: get_f64("tol").unwrap_or(1e-8),
        },
        "fundsol" => Command::Fundsol {
            poly: resolve(obj.get("poly").ok_or("fundsol needs \"poly\"")?)?,
            check_delta: obj.get("check_delta").map(|v| resolve(v)).transpose()?,
            eval: obj
                .get("eval")
                .and_then(Value::as_str)
                .map(|s| s.to_string()),
            tol: get_f64("tol").unwrap_or(1e-3),
        },
        other => return Err(format!("unknown command {other:?}")),
    };
    Ok(Cli {
        command,
        out: None,
        threads: 1,
        seed_echo: true,
    })
}

pub fn run_job_file(path: &Path) -> Outcome {
    let job_echo = json!({ "job_file": path.display().to_string() });
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return schema_error("run", job_echo, format!("{}: {e}", path.display())),
    };
    let job: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return schema_error("run", job_echo, format!("malformed job JSON: {e}")),
    };
    let cli = match cli_from_job(path, &job) {
        Ok(c) => c,
        Err(e) => return schema_error("run", job_echo, e),
    };
    let mut outcome = execute(&cli);
    outcome.report.job = job;
    outcome
}

#[derive(Serialize)]
struct SuiteRow {
    job: String,
    command: String,
    exit: i32,
    expected_fail: bool,
    ok: bool,
}

pub fn run_suite(dir: &Path) -> Outcome {
    let job_echo = json!({ "dir": dir.display().to_string() });
    let mut entries: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(read) => read
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
            .collect(),
        Err(e) => return schema_error("suite", job_echo, format!("{}: {e}", dir.display())),
    };
    entries.sort();
    if entries.is_empty() {
        return report(
            "suite",
            job_echo,
            json!({ "rows": [] }),
            vec!["empty corpus".into()],
            EXIT_OK,
        );
    }
    let mut rows = Vec::new();
    let mut all_ok = true;
    for path in entries {
        let text = std::fs::read_to_string(&path).unwrap_or_default();
        let parsed = serde_json::from_str::<Value>(&text).ok();
        // data assets live next to the jobs; only objects with a command are jobs
        if parsed
            .as_ref()
            .map(|v| v.get("command").is_none())
            .unwrap_or(true)
        {
            continue;
        }
        let expected_fail = parsed
            .as_ref()
            .and_then(|v| v.get("expect").and_then(Value::as_str).map(|s| s == "fail"))
            .unwrap_or(false);
        let outcome = run_job_file(&path);
        let ok = if expected_fail {
            outcome.exit != EXIT_OK
        } else {
            outcome.exit == EXIT_OK
        };
        all_ok &= ok;
        rows.push(SuiteRow {
            job: path.display().to_string(),
            command: outcome.report.command.clone(),
            exit: outcome.exit,
            expected_fail,
            ok,
        });
    }
    let exit = if all_ok { EXIT_OK } else { EXIT_VERDICT };
    report(
        "suite",
        job_echo,
        json!({ "rows": serde_json::to_value(&rows).expect("ser") }),
        Vec::new(),
        exit,
    )
}

/// Full entry point used by the binary.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let outcome = execute(&cli);
    let rendered =
        serde_json::to_string_pretty(&outcome.report).expect("reports are serializable");
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered + "\n") {
                eprintln!("cannot write report to {}: {e}", path.display());
                return EXIT_SCHEMA;
            }
        }
        None => println!("{rendered}"),
    }
    outcome.exit
}

// keep the unused-variable lint quiet for errors only used through Display
impl From<BvError> for String {
    fn from(e: BvError) -> String {
        e.to_string()
    }
}
