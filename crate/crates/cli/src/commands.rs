use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use supjcir_core::estimation::{empirical_stats, fit_acf, fit_moments};
use supjcir_core::io::{parse_series_csv, FitProvenance, ModelFile};
use supjcir_core::orlicz::{
    admissibility_check, normalized_disutility, normalized_ratio, stationary_baseline,
    stationary_log_disutility,
};
use supjcir_core::validation::{builtin_models, run_checks};
use supjcir_core::{Bound, JumpMeasure, MixingMeasure, OrliczFunction, RiskQuery, SupJcirModel};

use crate::error::{CliError, CliResult};
use crate::format::{json12, json12_opt, num12, GridSpec};

pub struct FitArgs {
    pub input: PathBuf,
    pub y: f64,
    pub include_skew: bool,
    pub max_lag: usize,
    pub out: PathBuf,
}

pub struct QueryArgs {
    pub model: PathBuf,
    pub p: f64,
    pub phi: String,
    pub q: f64,
    pub bound: String,
    pub lambda_diff: f64,
    pub lambda_jump: f64,
}

pub struct SurfaceArgs {
    pub query: QueryArgs,
    pub ldiff_grid: GridSpec,
    pub ljump_grid: GridSpec,
    pub out: PathBuf,
    pub workers: Option<usize>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

fn read_model(path: &Path) -> CliResult<ModelFile> {
    ModelFile::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn moment_row(empirical: f64, theoretical: f64) -> Value {
    json!({
        "empirical": json12(empirical),
        "theoretical": json12(theoretical),
        "rel_error": json12((theoretical - empirical) / empirical),
    })
}

fn parameters(model: &SupJcirModel) -> Value {
    let mut p = Map::new();
    if let MixingMeasure::Gamma { omega, theta } = model.mixing {
        p.insert("theta".into(), json12(theta));
        p.insert("omega".into(), json12(omega));
    }
    p.insert("a".into(), json12(model.a));
    p.insert("sigma".into(), json12(model.sigma));
    match model.jumps {
        JumpMeasure::Exponential { mu, beta } => {
            p.insert("mu".into(), json12(mu));
            p.insert("beta".into(), json12(beta));
        }
        JumpMeasure::TemperedStable { gamma, beta, alpha } => {
            p.insert("gamma".into(), json12(gamma));
            p.insert("beta".into(), json12(beta));
            p.insert("alpha".into(), json12(alpha));
        }
        JumpMeasure::None => {}
    }
    p.insert("R".into(), json12(model.inverse_moment()));
    Value::Object(p)
}

/// Fit a series, write the model file and return the JSON report.
pub fn fit(args: &FitArgs) -> CliResult<String> {
    let bytes = std::fs::read(&args.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not valid UTF-8", args.input.display())))?;
    let name = args
        .input
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let series = parse_series_csv(&text, &name)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;

    let stats = empirical_stats(&series, args.max_lag)
        .map_err(|e| CliError::from_fit("empirical statistics", e))?;
    let acf = fit_acf(&stats.acf).map_err(|e| CliError::from_fit("ACF fit", e))?;
    let fitted = fit_moments(
        &stats.moments(),
        acf.theta,
        acf.omega,
        args.y,
        args.include_skew,
    )
    .map_err(|e| CliError::from_fit("moment fit", e))?;

    let digest = sha256_hex(&bytes);
    let file = ModelFile {
        model: fitted.model.clone(),
        provenance: Some(FitProvenance {
            y: fitted.y,
            error_metric: fitted.error_metric,
            include_skew: fitted.include_skew,
            data_sha256: digest.clone(),
        }),
    };
    file.write(&args.out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;

    let model = &fitted.model;
    let mo = model
        .stationary_moments()
        .map_err(|e| CliError::from_fit("moment fit", e))?;
    let samples: Vec<Value> = stats
        .acf
        .iter()
        .map(|&(h, v)| json!({ "lag": json12(h), "empirical": json12(v), "theoretical": json12(model.acf(h)) }))
        .collect();
    let report = json!({
        "data_sha256": digest,
        "observations": series.len(),
        "y": json12(args.y),
        "include_skew": args.include_skew,
        "parameters": parameters(model),
        "acf": { "residual": json12(acf.residual), "samples": samples },
        "moments": {
            "mean": moment_row(stats.mean, mo.mean),
            "variance": moment_row(stats.variance, mo.variance),
            "skewness": moment_row(stats.skewness, mo.skewness),
        },
        "error_metric": json12(fitted.error_metric),
    });
    Ok(pretty(&report))
}

fn build_query(args: &QueryArgs) -> CliResult<(SupJcirModel, RiskQuery)> {
    let model = read_model(&args.model)?.model;
    let phi: OrliczFunction = args.phi.parse().map_err(CliError::input)?;
    let bound: Bound = args.bound.parse().map_err(CliError::input)?;
    let query = RiskQuery::new(
        args.p,
        phi,
        args.q,
        args.lambda_diff,
        args.lambda_jump,
        bound,
    )
    .map_err(CliError::input)?;
    Ok((model, query))
}

fn inadmissible(model: &SupJcirModel, query: &RiskQuery) -> CliResult<()> {
    admissibility_check(model, query)
        .map_err(|reason| CliError::Inadmissible(format!("inadmissible query: {reason}")))
}

pub fn risk(args: &QueryArgs) -> CliResult<String> {
    let (model, query) = build_query(args)?;
    inadmissible(&model, &query)?;
    let r = normalized_disutility(&model, &query).map_err(CliError::from_query)?;
    let (theta_eff, omega) = match r.distorted_mixing {
        Some(MixingMeasure::Gamma { omega, theta }) => (Some(theta), Some(omega)),
        _ => (None, None),
    };
    let report = json!({
        "bound": query.bound.to_string(),
        "p": json12(query.p),
        "phi": query.phi.to_string(),
        "q": json12(query.q),
        "lambda_diff": json12(query.lambda_diff),
        "lambda_jump": json12(query.lambda_jump),
        "disutility": json12(r.disutility),
        "baseline": json12(r.baseline_disutility()),
        "log_disutility": json12(r.log_disutility),
        "U": json12(r.normalized_u),
        "xi": json12(r.xi),
        "acf_theta_eff": json12_opt(theta_eff),
        "acf_omega": json12_opt(omega),
        "A": json12_opt(r.normalized_a),
        "V": json12_opt(r.normalized_v),
        "entropy_diff": json12_opt(r.entropy.map(|e| e.diff_rate)),
        "entropy_jump": json12_opt(r.entropy.map(|e| e.jump_rate)),
    });
    Ok(pretty(&report))
}

fn worker_count(requested: Option<usize>) -> usize {
    let mut n = requested
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    if let Some(cap) = std::env::var("ORLICZ_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        n = n.min(cap.max(1));
    }
    n
}

enum Cell {
    Value { u: f64, tau: f64 },
    Divergent,
}

/// Evaluate U over the grid and write `lambda_diff,lambda_jump,U,log_disutility,status`.
pub fn risk_surface(args: &SurfaceArgs) -> CliResult<usize> {
    let (model, query) = build_query(&args.query)?;
    let ld = args.ldiff_grid.values();
    let lj = args.ljump_grid.values();
    // both limits shrink (or stay put) as the λ's grow, so the grid origin
    // decides global admissibility
    inadmissible(&model, &query.with_lambdas(ld[0], lj[0]))?;
    let base = stationary_baseline(&model, &query).map_err(CliError::from_query)?;

    let cells: Vec<(f64, f64)> = ld
        .iter()
        .flat_map(|&d| lj.iter().map(move |&j| (d, j)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(args.workers))
        .build()
        .map_err(|e| CliError::Numeric(format!("cannot start workers: {e}")))?;
    let results: Vec<CliResult<Cell>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(d, j)| {
                let q = query.with_lambdas(d, j);
                if admissibility_check(&model, &q).is_err() {
                    return Ok(Cell::Divergent);
                }
                match stationary_log_disutility(&model, &q) {
                    Ok(tau) => {
                        let u = normalized_ratio(tau, base, q.bound);
                        let in_range = match q.bound {
                            Bound::Upper => u >= 1.0,
                            Bound::Lower => u <= 1.0,
                        };
                        Ok(if in_range && u.is_finite() {
                            Cell::Value { u, tau }
                        } else {
                            Cell::Divergent
                        })
                    }
                    Err(e) => match CliError::from_query(e) {
                        CliError::Inadmissible(_) => Ok(Cell::Divergent),
                        other => Err(other),
                    },
                }
            })
            .collect()
    });

    let mut out = String::from("lambda_diff,lambda_jump,U,log_disutility,status\n");
    for (&(d, j), cell) in cells.iter().zip(results) {
        match cell? {
            Cell::Value { u, tau } => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},ok",
                    num12(d),
                    num12(j),
                    num12(u),
                    num12(tau)
                );
            }
            Cell::Divergent => {
                let _ = writeln!(out, "{},{},,,divergent", num12(d), num12(j));
            }
        }
    }
    std::fs::write(&args.out, out)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.out.display())))?;
    Ok(cells.len())
}

/// Run the cross-checks; `Err(Validation)` lists the failures.
pub fn validate(model: Option<&Path>, tol: Option<f64>) -> CliResult<String> {
    if let Some(t) = tol {
        if t.is_nan() || t <= 0.0 {
            return Err(CliError::Input(format!("--tol must be positive, got {t}")));
        }
    }
    let models = match model {
        Some(path) => vec![read_model(path)?.model],
        None => builtin_models(),
    };
    let results = run_checks(&models, tol)
        .map_err(|e| CliError::Numeric(format!("validation aborted: {e}")))?;
    let mut out = String::new();
    for r in &results {
        let _ = writeln!(
            out,
            "{:<28} max_error = {:.3e}  tol = {:.1e}  {}",
            r.name,
            r.max_error,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name)
        .collect();
    if failed.is_empty() {
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::Validation(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}
