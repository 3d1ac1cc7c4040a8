use std::fs::File;
use std::io::{self, BufWriter};

use rayon::prelude::*;
use serde_json::{json, Value};
use werner_core::biquadratic::{
    check_unitary_invariance, max_relative_spread, phi_matrix, phi_oracle, phi_vector, MatrixQuadruple, ORACLE_MAX_D,
};
use werner_core::detpoly::{certify_psd_continuation, det_h, PairDistribution, Verdict};
use werner_core::diagonal::{random_diagonal_pair, verify_diagonal_blocks};
use werner_core::hmatrix::{build_h, check_transform_ab, check_transform_lambda, leading_minor_check, quadratic_eval, MoebiusParam};
use werner_core::linalg::{c, frobenius, is_psd, CMatrix};
use werner_core::sampling::{derive_seed, random_complex, random_complex_matrix, random_unitary, rng_from_seed, SampleRng};
use werner_core::search::{aggregate, monotonicity_report, run_restart, t_grid, ScanPoint, SearchConfig, SearchPoint};
use werner_core::werner::{classify, flip_operator, me_projector, partial_transpose, werner_pair, WernerFamily};

use crate::config::{CommandKind, RunConfig, UsageError};
use crate::output::{row, RecordSink, Row};

/// Records computed between interruption checks and flushes.
pub const CHUNK: usize = 64;

#[derive(Debug)]
pub enum DriverError {
    Core(werner_core::Error),
    Io(io::Error),
}

impl From<werner_core::Error> for DriverError {
    fn from(e: werner_core::Error) -> Self {
        DriverError::Core(e)
    }
}

impl From<io::Error> for DriverError {
    fn from(e: io::Error) -> Self {
        DriverError::Io(e)
    }
}

impl From<csv::Error> for DriverError {
    fn from(e: csv::Error) -> Self {
        DriverError::Io(e.into())
    }
}

impl std::fmt::Display for DriverError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DriverError::Core(e) => write!(f, "{e}"),
            DriverError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

type CoreResult<T> = werner_core::Result<T>;

pub struct Report {
    pub interrupted: bool,
    pub summary: Value,
    pub headline: String,
}

/// Command-specific checks that make a config unusable.
pub fn validate(cfg: &RunConfig) -> Result<(), UsageError> {
    let d = cfg.d;
    let err = |msg: String| Err(UsageError(msg));
    match cfg.command {
        CommandKind::DetSample | CommandKind::Search | CommandKind::Continuation if d < 3 => {
            err(format!("{} needs d >= 3; D = det H vanishes identically for d = {d}", cfg.command.name()))
        }
        CommandKind::OracleCrosscheck if d > ORACLE_MAX_D => {
            err(format!("oracle-crosscheck builds 2-copy operators only up to d = {ORACLE_MAX_D}"))
        }
        CommandKind::OnedistillScan if d < 2 => err("onedistill-scan needs d >= 2".into()),
        _ => Ok(()),
    }
}

pub fn dispatch(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    match cfg.command {
        CommandKind::Identities => identities(cfg, sink, interrupted),
        CommandKind::PsdScan => psd_scan(cfg, sink, interrupted),
        CommandKind::DiagVerify => diag_verify(cfg, sink, interrupted),
        CommandKind::DetSample => det_sample(cfg, sink, interrupted),
        CommandKind::Search => search(cfg, sink, interrupted),
        CommandKind::OnedistillScan => onedistill_scan(cfg, sink, interrupted),
        CommandKind::OracleCrosscheck => oracle_crosscheck(cfg, sink, interrupted),
        CommandKind::Continuation => continuation(cfg, sink, interrupted),
    }
}

/// Evaluates `f` on `0..n` in parallel chunks, writing each chunk before the
/// next starts. Returns the side values and whether every chunk ran.
fn sampled<T: Send>(
    n: usize,
    sink: &mut RecordSink,
    interrupted: &dyn Fn() -> bool,
    f: impl Fn(usize) -> CoreResult<(Row, T)> + Sync,
) -> Result<(Vec<T>, bool), DriverError> {
    let mut side = Vec::with_capacity(n);
    for start in (0..n).step_by(CHUNK) {
        if interrupted() {
            return Ok((side, false));
        }
        let end = (start + CHUNK).min(n);
        let chunk = (start..end).into_par_iter().map(&f).collect::<CoreResult<Vec<_>>>()?;
        let (rows, values): (Vec<Row>, Vec<T>) = chunk.into_iter().unzip();
        sink.write_chunk(rows)?;
        side.extend(values);
    }
    Ok((side, true))
}

fn sample_rng(cfg: &RunConfig, index: usize) -> (u64, SampleRng) {
    let seed = derive_seed(cfg.seed, index as u64);
    (seed, rng_from_seed(seed))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

fn structural_facts(d: usize) -> CoreResult<(Value, bool)> {
    const BOUND: f64 = 1e-12;
    let h = build_h(&CMatrix::identity(d, d), &CMatrix::zeros(d, d))?;
    let dp = me_projector(d) * c(d as f64, 0.0);
    let dp_residual = frobenius(&(dp - partial_transpose(&flip_operator(d), d)?));
    let mut sigma_residual = 0.0f64;
    for t in [-0.5, 0.2, 0.5, 1.0] {
        let (rho, sigma) = werner_pair(WernerFamily::new(d, t)?);
        sigma_residual = sigma_residual.max(frobenius(&(sigma - partial_transpose(&rho, d)?)));
    }
    let ok = h.order() == 2 * d * d && dp_residual <= BOUND && sigma_residual <= BOUND;
    Ok((
        json!({
            "h_order": h.order(),
            "h_order_expected": 2 * d * d,
            "dp_vs_partial_transpose_f": dp_residual,
            "sigma_vs_partial_transpose_rho": sigma_residual,
            "passed": ok,
        }),
        ok,
    ))
}

fn identities(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let (tol_phi, tol_cov, tol_det) = (cfg.tol("phi"), cfg.tol("covariance"), cfg.tol("det"));
    let (structural, structural_ok) = structural_facts(d)?;
    if !structural_ok {
        sink.add_violation();
    }
    let (side, complete) = sampled(cfg.count(), sink, interrupted, |i| {
        let (seed, mut rng) = sample_rng(cfg, i);
        let mut m = || random_complex_matrix(&mut rng, d, d);
        let q = MatrixQuadruple::new(m(), m(), m(), m())?;
        let hf = build_h(&q.x, &q.y)?;
        let mut values = vec![phi_vector(&q).phi, phi_matrix(&q).phi, quadratic_eval(&hf, &q.u, &q.v)?.value];
        if d <= ORACLE_MAX_D {
            values.push(phi_oracle(&q)?);
        }
        let spread = max_relative_spread(&values, q.scale());
        let a = random_unitary(&mut rng, d);
        let b = random_unitary(&mut rng, d);
        let lam = MoebiusParam::new(
            random_complex(&mut rng),
            random_complex(&mut rng),
            random_complex(&mut rng),
            random_complex(&mut rng),
        );
        let invariance = check_unitary_invariance(&q, &a, &b)?;
        let cov_ab = check_transform_ab(&q.x, &q.y, &a, &b)?.max();
        let cov_lambda = check_transform_lambda(&q.x, &q.y, &lam)?.max();
        let det = if d >= 3 {
            Some(werner_core::detpoly::check_det_identities(&q.x, &q.y, &a, &b, &lam)?)
        } else {
            None
        };
        let det_dev = det.map_or(0.0, |r| r.unitary_dev.max(r.gl_dev));
        let violation =
            !(spread <= tol_phi && invariance <= tol_cov && cov_ab <= tol_cov && cov_lambda <= tol_cov && det_dev <= tol_det);
        let worst = [spread, invariance, cov_ab, cov_lambda, det_dev];
        Ok((
            row(json!({
                "index": i,
                "seed": seed,
                "d": d,
                "phi_spread": spread,
                "unitary_invariance": invariance,
                "covariance_ab": cov_ab,
                "covariance_lambda": cov_lambda,
                "det_unitary_dev": det.map(|r| r.unitary_dev),
                "det_gl_dev": det.map(|r| r.gl_dev),
                "violation": violation,
            })),
            worst,
        ))
    })?;
    let col = |k: usize| max_of(side.iter().map(|w| w[k]));
    let summary = json!({
        "structural": structural,
        "max_phi_spread": col(0),
        "max_unitary_invariance": col(1),
        "max_covariance_ab": col(2),
        "max_covariance_lambda": col(3),
        "max_det_dev": if d >= 3 { json!(col(4)) } else { Value::Null },
    });
    Ok(Report {
        interrupted: !complete,
        headline: format!(
            "max Φ spread {:.3e}, covariance {:.3e}, det {:.3e}",
            col(0),
            col(2).max(col(3)),
            col(4)
        ),
        summary,
    })
}

fn psd_scan(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let tol = cfg.tol("psd");
    let order = 10.min(2 * d * d);
    let mut warnings = Vec::new();
    if d <= 2 {
        let w = format!("D = det H vanishes identically for d = {d}; only positive semidefiniteness is checked");
        eprintln!("warning: {w}");
        warnings.push(w);
    }
    let (side, complete) = sampled(cfg.count(), sink, interrupted, |i| {
        let (seed, mut rng) = sample_rng(cfg, i);
        let x = random_complex_matrix(&mut rng, d, d);
        let y = random_complex_matrix(&mut rng, d, d);
        let hf = build_h(&x, &y)?;
        let lambda_min = hf.lambda_min()?;
        let norm_h = hf.norm();
        let minor = leading_minor_check(&hf, order)?;
        let floor = -tol * norm_h;
        let relative = lambda_min / norm_h;
        Ok((
            row(json!({
                "index": i,
                "seed": seed,
                "d": d,
                "lambda_min": lambda_min,
                "norm_h": norm_h,
                "relative_lambda_min": relative,
                "minor_order": order,
                "minor_lambda_min": minor,
                "violation": !(lambda_min >= floor && minor >= floor),
            })),
            (relative, minor / norm_h),
        ))
    })?;
    let min_rel = min_of(side.iter().map(|s| s.0));
    let summary = json!({
        "min_relative_lambda_min": min_rel,
        "min_relative_minor": min_of(side.iter().map(|s| s.1)),
        "minor_order": order,
        "warnings": warnings,
    });
    Ok(Report {
        interrupted: !complete,
        headline: format!("min λ_min/‖H‖ = {min_rel:.3e}"),
        summary,
    })
}

fn diag_verify(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let tol = cfg.tol("residual");
    let (side, complete) = sampled(cfg.count(), sink, interrupted, |i| {
        let (seed, mut rng) = sample_rng(cfg, i);
        let pair = random_diagonal_pair(&mut rng, d);
        let r = verify_diagonal_blocks(&pair)?;
        let residual_ok = r.residual <= tol * r.norm_h.max(1.0);
        Ok((
            row(json!({
                "index": i,
                "seed": seed,
                "d": d,
                "generic": r.generic,
                "residual": r.residual,
                "norm_h": r.norm_h,
                "min_block_eig": r.min_block_eig,
                "lambda_min_h": r.lambda_min_h,
                "all_small_pd": r.all_small_pd,
                "big_pd": r.big_pd,
                "holds": r.holds,
                "violation": !(r.holds && residual_ok),
            })),
            (r.residual / r.norm_h.max(1.0), r.lambda_min_h / r.norm_h),
        ))
    })?;
    let max_res = max_of(side.iter().map(|s| s.0));
    let min_rel = min_of(side.iter().map(|s| s.1));
    Ok(Report {
        interrupted: !complete,
        headline: format!("max residual/‖H‖ = {max_res:.3e}, min λ_min/‖H‖ = {min_rel:.3e}"),
        summary: json!({ "max_relative_residual": max_res, "min_relative_lambda_min": min_rel }),
    })
}

fn det_sample(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let tol = cfg.tol("zero");
    let (side, complete) = sampled(cfg.count(), sink, interrupted, |i| {
        let (seed, mut rng) = sample_rng(cfg, i);
        let distribution = PairDistribution::ALL[i % PairDistribution::ALL.len()];
        let (x, y) = distribution.sample(&mut rng, d);
        let rec = det_h(&x, &y)?;
        let candidate = rec.generic && rec.vanishes(tol);
        let confirmed = candidate && rec.confirmed_zero();
        Ok((
            row(json!({
                "index": i,
                "seed": seed,
                "distribution": distribution,
                "generic": rec.generic,
                "value": rec.value,
                "log_abs": rec.log_abs,
                "sign": rec.sign,
                "relative_log": rec.relative_log(),
                "zero_candidate": candidate,
                "confirmed_zero": confirmed,
                "violation": confirmed,
            })),
            (rec.generic, candidate, rec.relative_log()),
        ))
    })?;
    let generic: Vec<_> = side.iter().filter(|s| s.0).collect();
    let n_candidates = side.iter().filter(|s| s.1).count();
    let min_rel = min_of(generic.iter().map(|s| s.2));
    Ok(Report {
        interrupted: !complete,
        headline: format!(
            "{} generic pairs, {n_candidates} zero candidates, min ln(|D|/scale) = {min_rel:.3}",
            generic.len()
        ),
        summary: json!({
            "n_generic": generic.len(),
            "n_candidates": n_candidates,
            "min_relative_log": min_rel,
        }),
    })
}

fn search(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let scfg = SearchConfig {
        d: cfg.d,
        restarts: cfg.count(),
        max_iters: cfg.max_iters.unwrap_or(500),
        tol: cfg.tol("convergence"),
        seed: cfg.seed,
        mode: werner_core::search::SearchMode::TwoCopyPhi,
    };
    scfg.validate()?;
    let threshold = -cfg.tol("candidate");
    let mut traces = match &cfg.traces {
        Some(p) => {
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(p)?));
            w.write_record(["restart", "iter", "value"])?;
            Some(w)
        }
        None => None,
    };
    let (outcomes, complete) = sampled(scfg.restarts, sink, interrupted, |r| {
        let out = run_restart(&scfg, r)?;
        let candidate = out.final_value < threshold;
        let oracle_value = match (&out.point, candidate) {
            (SearchPoint::TwoCopy(q), true) if q.d() <= ORACLE_MAX_D => Some(phi_oracle(q)?),
            (SearchPoint::TwoCopy(q), true) => Some(phi_vector(q).phi),
            _ => None,
        };
        let confirmed = oracle_value.is_some_and(|v| v < threshold);
        let rec = row(json!({
            "restart": r,
            "seed": out.seed,
            "structured_start": out.structured_start,
            "final_value": out.final_value,
            "iterations": out.iterations,
            "converged": out.converged,
            "monotone": out.monotone,
            "fixed_point_gap": out.fixed_point_gap,
            "candidate": candidate,
            "oracle_value": oracle_value,
            "point": if candidate { out.point.to_json() } else { Value::Null },
            "violation": confirmed || !out.monotone,
        }));
        Ok((rec, (out, candidate)))
    })?;
    if let Some(w) = traces.as_mut() {
        for (out, _) in &outcomes {
            for (k, v) in out.trace.iter().enumerate() {
                w.write_record([out.restart.to_string(), k.to_string(), Value::from(*v).to_string()])?;
            }
        }
        w.flush()?;
    }
    let n_candidates = outcomes.iter().filter(|o| o.1).count();
    let restarts: Vec<_> = outcomes.into_iter().map(|o| o.0).collect();
    if restarts.is_empty() {
        return Ok(Report {
            interrupted: true,
            headline: "interrupted before the first restart".into(),
            summary: json!({ "traces_path": cfg.traces }),
        });
    }
    let agg = aggregate(&scfg, restarts)?;
    Ok(Report {
        interrupted: !complete,
        headline: format!(
            "best value {:.3e} (restart {}), {n_candidates} candidates, traces {}",
            agg.best_value,
            agg.best_restart,
            if agg.all_monotone { "monotone" } else { "NOT monotone" }
        ),
        summary: json!({
            "search": scfg,
            "best_value": agg.best_value,
            "best_restart": agg.best_restart,
            "best_point": agg.best_point.to_json(),
            "n_candidates": n_candidates,
            "all_monotone": agg.all_monotone,
            "traces_path": cfg.traces,
        }),
    })
}

fn onedistill_scan(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let [start, end, step] = cfg.t_grid.expect("scan config has a grid");
    let (sign_tol, psd_tol) = (cfg.tol("sign"), cfg.tol("psd"));
    let mut scan: Vec<ScanPoint> = Vec::new();
    let mut complete = true;
    for t in t_grid(start, end, step) {
        if interrupted() {
            complete = false;
            break;
        }
        let scfg = SearchConfig {
            d,
            restarts: cfg.count(),
            max_iters: cfg.max_iters.unwrap_or(500),
            tol: cfg.tol("convergence"),
            seed: cfg.seed,
            mode: werner_core::search::SearchMode::OneCopy { t },
        };
        let min_value = werner_core::search::run_search(&scfg)?.best_value;
        let fam = WernerFamily::new(d, t)?;
        let (_, sigma) = werner_pair(fam);
        let psd = is_psd(&sigma, psd_tol)?;
        let psd_expected = t <= 1.0 / d as f64;
        let negative = min_value < -sign_tol;
        let negative_expected = t > 0.5;
        let monotone_step = scan
            .last()
            .is_none_or(|p| min_value <= p.min_value + werner_core::search::SCAN_MONOTONE_TOL);
        scan.push(ScanPoint { t, min_value });
        sink.write_chunk(vec![row(json!({
            "t": t,
            "min_value": min_value,
            "class": classify(fam),
            "sigma_lambda_min": psd.lambda_min,
            "sigma_psd": psd.is_psd,
            "sigma_psd_expected": psd_expected,
            "negative": negative,
            "negative_expected": negative_expected,
            "monotone_step": monotone_step,
            "violation": psd.is_psd != psd_expected || negative != negative_expected || !monotone_step,
        }))])?;
    }
    let sign_change = scan
        .windows(2)
        .find(|w| w[0].min_value >= -sign_tol && w[1].min_value < -sign_tol)
        .map(|w| [w[0].t, w[1].t]);
    let monotone = monotonicity_report(&scan);
    Ok(Report {
        interrupted: !complete,
        headline: format!(
            "sign change in {}, minima {}",
            sign_change.map_or("(none)".into(), |[a, b]| format!("({a}, {b}]")),
            if monotone { "nonincreasing in t" } else { "NOT monotone" }
        ),
        summary: json!({ "sign_change": sign_change, "monotone": monotone }),
    })
}

fn oracle_crosscheck(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let tol = cfg.tol("phi");
    let (side, complete) = sampled(cfg.count(), sink, interrupted, |i| {
        let (seed, mut rng) = sample_rng(cfg, i);
        let mut m = || random_complex_matrix(&mut rng, d, d);
        let q = MatrixQuadruple::new(m(), m(), m(), m())?;
        let pv = phi_vector(&q).phi;
        let pm = phi_matrix(&q).phi;
        let po = phi_oracle(&q)?;
        let ph = quadratic_eval(&build_h(&q.x, &q.y)?, &q.u, &q.v)?.value;
        let spread = max_relative_spread(&[pv, pm, po, ph], q.scale());
        Ok((
            row(json!({
                "index": i,
                "seed": seed,
                "d": d,
                "phi_vector": pv,
                "phi_matrix": pm,
                "phi_oracle": po,
                "phi_h": ph,
                "spread": spread,
                "violation": spread.is_nan() || spread > tol,
            })),
            spread,
        ))
    })?;
    let worst = max_of(side);
    Ok(Report {
        interrupted: !complete,
        headline: format!("max relative spread {worst:.3e}"),
        summary: json!({ "max_spread": worst }),
    })
}

fn continuation(cfg: &RunConfig, sink: &mut RecordSink, interrupted: &dyn Fn() -> bool) -> Result<Report, DriverError> {
    let d = cfg.d;
    let steps = cfg.steps.unwrap_or(64);
    let (side, complete) = sampled(cfg.count(), sink, interrupted, |i| {
        let (seed, mut rng) = sample_rng(cfg, i);
        let x = random_complex_matrix(&mut rng, d, d);
        let y = random_complex_matrix(&mut rng, d, d);
        let rec = match certify_psd_continuation(&x, &y, steps, seed) {
            Ok(out) => {
                let pd = out.verdict == Verdict::PositiveDefinite;
                let t_fail = match out.verdict {
                    Verdict::NotPositiveDefinite { t, .. } => Some(t),
                    Verdict::PositiveDefinite => None,
                };
                let consistent = pd == out.direct_psd;
                json!({
                    "index": i,
                    "seed": seed,
                    "verdict": if pd { "positive_definite" } else { "not_positive_definite" },
                    "t_fail": t_fail,
                    "attempts": out.attempts,
                    "refinements": out.refinements,
                    "direct_lambda_min": out.direct_lambda_min,
                    "direct_psd": out.direct_psd,
                    "consistent": consistent,
                    "path": out.path.samples,
                    "violation": !(pd && consistent),
                })
            }
            Err(e @ (werner_core::Error::GenericityLost(_) | werner_core::Error::CertificationInconclusive { .. })) => {
                let verdict = match e {
                    werner_core::Error::GenericityLost(_) => "genericity_lost",
                    _ => "inconclusive",
                };
                json!({
                    "index": i,
                    "seed": seed,
                    "verdict": verdict,
                    "t_fail": null,
                    "attempts": null,
                    "refinements": null,
                    "direct_lambda_min": null,
                    "direct_psd": null,
                    "consistent": null,
                    "path": [],
                    "violation": true,
                })
            }
            Err(e) => return Err(e),
        };
        let ok = rec["violation"] == false;
        Ok((row(rec), ok))
    })?;
    let certified = side.iter().filter(|ok| **ok).count();
    Ok(Report {
        interrupted: !complete,
        headline: format!("{certified} of {} targets certified positive definite", side.len()),
        summary: json!({ "certified": certified, "targets": side.len(), "steps": steps }),
    })
}
