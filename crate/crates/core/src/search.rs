//! Counterexample search by alternating smallest-eigenvector steps.
//!
//! Two-copy mode minimizes `Φ(X, Y, U, V)` with `||(X, Y)|| = ||(U, V)|| = 1`:
//! with one block fixed, `Φ` is a hermitian form in the other, so each
//! half-step is an exact minimization. One-copy mode minimizes the Rayleigh
//! quotient `<ψ|σ|ψ> / <ψ|ψ>` over `ψ = x ⊗ u + y ⊗ v`; the fixed side is
//! orthonormalized first so the free side enters with the identity Gram matrix.

use rayon::prelude::*;
use serde::Serialize;

use crate::biquadratic::{phi_oracle, phi_vector, MatrixQuadruple, ORACLE_MAX_D};
use crate::error::{Error, Result};
use crate::hmatrix::{build_g_polarized, build_h, polarize, unstack};
use crate::json::{MatrixJson, QuadrupleJson};
use crate::linalg::{c, frobenius_sqr, hermitian_eig, orthonormalize, CMatrix, CVector};
use crate::sampling::{derive_seed, random_complex_matrix, random_complex_vector, random_positive, rng_from_seed, SampleRng};
use crate::werner::{eval_sigma_form, PureStateVector, WernerFamily};

/// Restarts ending below this value are counterexample candidates.
pub const CANDIDATE_THRESHOLD: f64 = -1e-6;
/// Slack allowed for rounding when asserting a nonincreasing trace.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Slack of [`monotonicity_report`].
pub const SCAN_MONOTONE_TOL: f64 = 1e-7;
/// Values below `-SIGN_TOL` count as negative in [`locate_sign_change`].
pub const SIGN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SearchMode {
    TwoCopyPhi,
    OneCopy { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub d: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub mode: SearchMode,
}

impl SearchConfig {
    pub fn two_copy(d: usize, restarts: usize, seed: u64) -> Self {
        SearchConfig {
            d,
            restarts,
            max_iters: 500,
            tol: 1e-12,
            seed,
            mode: SearchMode::TwoCopyPhi,
        }
    }

    pub fn one_copy(d: usize, t: f64, restarts: usize, seed: u64) -> Self {
        SearchConfig {
            mode: SearchMode::OneCopy { t },
            ..Self::two_copy(d, restarts, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        match self.mode {
            SearchMode::TwoCopyPhi if self.d < 3 => Err(Error::InvalidParameter(format!(
                "two-copy search needs d >= 3, got {}",
                self.d
            ))),
            SearchMode::OneCopy { t } if !(-1.0..=1.0).contains(&t) => {
                Err(Error::InvalidParameter(format!("t = {t} outside [-1, 1]")))
            }
            SearchMode::OneCopy { .. } if self.d < 2 => {
                Err(Error::InvalidParameter(format!("one-copy search needs d >= 2, got {}", self.d)))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SearchPoint {
    TwoCopy(MatrixQuadruple),
    /// `ψ = x ⊗ u + y ⊗ v`.
    OneCopy { x: CVector, y: CVector, u: CVector, v: CVector },
}

impl SearchPoint {
    pub fn to_json(&self) -> serde_json::Value {
        let col = |v: &CVector| MatrixJson::from(&CMatrix::from_column_slice(v.len(), 1, v.as_slice()));
        match self {
            SearchPoint::TwoCopy(q) => serde_json::to_value(QuadrupleJson::from(q)),
            SearchPoint::OneCopy { x, y, u, v } => serde_json::to_value(serde_json::json!({
                "x": col(x), "y": col(y), "u": col(u), "v": col(v),
            })),
        }
        .expect("matrices serialize")
    }
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub restart: usize,
    pub seed: u64,
    pub structured_start: bool,
    pub final_value: f64,
    /// Full alternations performed.
    pub iterations: usize,
    /// Objective after every half-step.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub monotone: bool,
    /// `|λ_min(H(X, Y)) - λ_min(G(U, V))|` at the final point.
    pub fixed_point_gap: f64,
    pub point: SearchPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub restart: usize,
    pub value: f64,
    /// Direct evaluation at the returned point; `None` above the oracle size.
    pub oracle_value: Option<f64>,
    pub confirmed: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub config: SearchConfig,
    pub best_value: f64,
    pub best_restart: usize,
    pub best_point: SearchPoint,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub restarts: Vec<RestartOutcome>,
    pub candidates: Vec<Candidate>,
    pub all_monotone: bool,
}

pub fn is_nonincreasing(trace: &[f64], slack: f64) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + slack)
}

fn normalize_pair(x: CMatrix, y: CMatrix) -> (CMatrix, CMatrix) {
    let n = (frobenius_sqr(&x) + frobenius_sqr(&y)).sqrt();
    let s = c(1.0 / n, 0.0);
    (x * s, y * s)
}

fn two_copy_start(rng: &mut SampleRng, d: usize, structured: bool) -> (CMatrix, CMatrix) {
    let x = if structured {
        let entries: Vec<f64> = (0..d).map(|_| random_positive(rng)).collect();
        crate::linalg::diag_real(&entries)
    } else {
        random_complex_matrix(rng, d, d)
    };
    let y = random_complex_matrix(rng, d, d);
    normalize_pair(x, y)
}

fn run_two_copy(cfg: &SearchConfig, restart: usize) -> Result<RestartOutcome> {
    let d = cfg.d;
    let seed = derive_seed(cfg.seed, restart as u64);
    let mut rng = rng_from_seed(seed);
    let structured = restart % 2 == 1;
    let (mut x, mut y) = two_copy_start(&mut rng, d, structured);
    let (mut u, mut v) = (CMatrix::zeros(d, d), CMatrix::zeros(d, d));
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        let eh = hermitian_eig(&build_h(&x, &y)?.h)?;
        (u, v) = unstack(&eh.min_vector(), d)?;
        trace.push(eh.min());
        let eg = hermitian_eig(&build_g_polarized(&u, &v)?)?;
        (x, y) = unstack(&eg.min_vector(), d)?;
        let value = eg.min();
        trace.push(value);
        if prev - value < cfg.tol {
            converged = true;
            break;
        }
        prev = value;
    }
    let final_value = *trace.last().expect("at least one iteration");
    let lambda_h = hermitian_eig(&build_h(&x, &y)?.h)?.min();
    Ok(RestartOutcome {
        restart,
        seed,
        structured_start: structured,
        final_value,
        iterations,
        monotone: is_nonincreasing(&trace, MONOTONE_SLACK),
        trace,
        converged,
        fixed_point_gap: (lambda_h - final_value).abs(),
        point: SearchPoint::TwoCopy(MatrixQuadruple { x, y, u, v }),
    })
}

/// Orthonormal basis of `span{a, b}`, completed by a random direction when the
/// span is degenerate.
fn orthonormal_pair(rng: &mut SampleRng, a: &CVector, b: &CVector) -> (CVector, CVector) {
    let d = a.len();
    let mut cols = vec![a.clone(), b.clone()];
    loop {
        let basis = orthonormalize(&cols, 1e-12);
        if basis.len() >= 2 {
            return (basis[0].clone(), basis[1].clone());
        }
        cols = basis;
        cols.push(random_complex_vector(rng, d));
    }
}

/// Smallest eigenpair of `w -> <ψ(w)|σ|ψ(w)>` on `C^{2d}` where `ψ(w)` is
/// `e1 ⊗ w_1 + e2 ⊗ w_2` (Alice fixed) or `w_1 ⊗ e1 + w_2 ⊗ e2` (Bob fixed).
fn one_copy_block(fam: WernerFamily, e1: &CVector, e2: &CVector, alice_fixed: bool) -> Result<(f64, CVector, CVector)> {
    let d = e1.len();
    let mut err = None;
    let m = polarize(2 * d, |w| {
        let a = w.rows(0, d).into_owned();
        let b = w.rows(d, d).into_owned();
        let psi = if alice_fixed {
            PureStateVector::one_copy_rank2(e1, &a, e2, &b)
        } else {
            PureStateVector::one_copy_rank2(&a, e1, &b, e2)
        };
        match psi.and_then(|p| eval_sigma_form(&p, fam, 1)) {
            Ok(f) => f.value,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let eig = hermitian_eig(&m)?;
    let w = eig.min_vector();
    Ok((eig.min(), w.rows(0, d).into_owned(), w.rows(d, d).into_owned()))
}

fn run_one_copy(cfg: &SearchConfig, t: f64, restart: usize) -> Result<RestartOutcome> {
    let d = cfg.d;
    let fam = WernerFamily::new(d, t)?;
    let seed = derive_seed(cfg.seed, restart as u64);
    let mut rng = rng_from_seed(seed);
    let mut x = random_complex_vector(&mut rng, d);
    let mut y = random_complex_vector(&mut rng, d);
    let (mut u, mut v) = (CVector::zeros(d), CVector::zeros(d));
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        iterations += 1;
        (x, y) = orthonormal_pair(&mut rng, &x, &y);
        let (bob_value, bu, bv) = one_copy_block(fam, &x, &y, true)?;
        (u, v) = (bu, bv);
        trace.push(bob_value);
        (u, v) = orthonormal_pair(&mut rng, &u, &v);
        let (value, ax, ay) = one_copy_block(fam, &u, &v, false)?;
        (x, y) = (ax, ay);
        trace.push(value);
        if prev - value < cfg.tol {
            converged = true;
            break;
        }
        prev = value;
    }
    let final_value = *trace.last().expect("at least one iteration");
    let (xo, yo) = orthonormal_pair(&mut rng, &x, &y);
    let lambda_alice = one_copy_block(fam, &xo, &yo, true)?.0;
    Ok(RestartOutcome {
        restart,
        seed,
        structured_start: false,
        final_value,
        iterations,
        monotone: is_nonincreasing(&trace, MONOTONE_SLACK),
        trace,
        converged,
        fixed_point_gap: (lambda_alice - final_value).abs(),
        point: SearchPoint::OneCopy { x, y, u, v },
    })
}

pub fn verify_candidate(r: &RestartOutcome) -> Result<Candidate> {
    let oracle_value = match &r.point {
        SearchPoint::TwoCopy(q) if q.d() <= ORACLE_MAX_D => Some(phi_oracle(q)?),
        SearchPoint::TwoCopy(q) => Some(phi_vector(q).phi),
        SearchPoint::OneCopy { .. } => None,
    };
    Ok(Candidate {
        restart: r.restart,
        value: r.final_value,
        oracle_value,
        confirmed: oracle_value.is_none_or(|v| v < CANDIDATE_THRESHOLD),
    })
}

/// One restart of the configured search; depends only on `cfg` and `restart`.
pub fn run_restart(cfg: &SearchConfig, restart: usize) -> Result<RestartOutcome> {
    match cfg.mode {
        SearchMode::TwoCopyPhi => run_two_copy(cfg, restart),
        SearchMode::OneCopy { t } => run_one_copy(cfg, t, restart),
    }
}

/// Min-reduces restarts with ties going to the lower index. Candidates are
/// re-verified.
pub fn aggregate(cfg: &SearchConfig, restarts: Vec<RestartOutcome>) -> Result<SearchOutcome> {
    let best = restarts
        .iter()
        .min_by(|a, b| a.final_value.total_cmp(&b.final_value).then(a.restart.cmp(&b.restart)))
        .ok_or_else(|| Error::InvalidParameter("no restarts to aggregate".into()))?;
    let candidates = restarts
        .iter()
        .filter(|r| r.final_value < CANDIDATE_THRESHOLD)
        .map(verify_candidate)
        .collect::<Result<Vec<_>>>()?;
    Ok(SearchOutcome {
        config: *cfg,
        best_value: best.final_value,
        best_restart: best.restart,
        best_point: best.point.clone(),
        iterations: best.iterations,
        trace: best.trace.clone(),
        all_monotone: restarts.iter().all(|r| r.monotone),
        candidates,
        restarts,
    })
}

/// Runs every restart in parallel; the outcome depends only on the config.
pub fn run_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let restarts = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(cfg, r))
        .collect::<Result<Vec<_>>>()?;
    aggregate(cfg, restarts)
}

/// Two-copy minimization of `Φ` at unit block norms.
pub fn minimize_phi_alternating(cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.mode != SearchMode::TwoCopyPhi {
        return Err(Error::InvalidParameter("minimize_phi_alternating needs two-copy mode".into()));
    }
    run_search(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub t: f64,
    pub min_value: f64,
}

/// One-copy minimum for each `t`, using `cfg` for everything but the mode.
pub fn scan_one_distill(d: usize, t_grid: &[f64], cfg: &SearchConfig) -> Result<Vec<ScanPoint>> {
    t_grid
        .iter()
        .map(|&t| {
            let run = SearchConfig {
                d,
                mode: SearchMode::OneCopy { t },
                ..*cfg
            };
            Ok(ScanPoint {
                t,
                min_value: run_search(&run)?.best_value,
            })
        })
        .collect()
}

/// True iff the minima are nonincreasing in `t` up to [`SCAN_MONOTONE_TOL`].
pub fn monotonicity_report(scan: &[ScanPoint]) -> bool {
    scan.windows(2).all(|w| w[1].min_value <= w[0].min_value + SCAN_MONOTONE_TOL)
}

/// First grid interval `(t_k, t_{k+1}]` where the minimum turns negative.
pub fn locate_sign_change(scan: &[ScanPoint]) -> Option<(f64, f64)> {
    scan.windows(2)
        .find(|w| w[0].min_value >= -SIGN_TOL && w[1].min_value < -SIGN_TOL)
        .map(|w| (w[0].t, w[1].t))
}

/// Evenly spaced points from `start` up to `end` inclusive.
/// Points are rounded to 12 decimals so grid values such as 0.5 are exact.
pub fn t_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SearchConfig::two_copy(3, 1, 0).validate().is_ok());
        assert!(SearchConfig::two_copy(2, 1, 0).validate().is_err());
        assert!(SearchConfig::two_copy(3, 0, 0).validate().is_err());
        assert!(SearchConfig::one_copy(3, 1.5, 1, 0).validate().is_err());
        let mut cfg = SearchConfig::two_copy(3, 1, 0);
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn two_copy_traces_monotone_and_nonnegative() {
        let out = minimize_phi_alternating(&SearchConfig::two_copy(3, 6, 11)).unwrap();
        assert!(out.all_monotone);
        assert!(out.best_value >= -1e-8, "{}", out.best_value);
        assert!(out.candidates.is_empty());
        for r in &out.restarts {
            if r.converged {
                assert!(r.fixed_point_gap <= 1e-8, "{}", r.fixed_point_gap);
            }
        }
        if let SearchPoint::TwoCopy(q) = &out.best_point {
            assert!((phi_vector(q).phi - out.best_value).abs() < 1e-9);
        } else {
            panic!("two-copy search returned a one-copy point");
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SearchConfig::two_copy(3, 3, 5);
        let a = minimize_phi_alternating(&cfg).unwrap();
        let b = minimize_phi_alternating(&cfg).unwrap();
        assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn one_copy_values() {
        let at = |t: f64| run_search(&SearchConfig::one_copy(3, t, 4, 9)).unwrap();
        let r = at(0.6);
        assert!((r.best_value + 0.2).abs() < 1e-6 && r.best_value <= -0.19, "{}", r.best_value);
        assert!(at(0.5).best_value.abs() <= 1e-6);
        assert!(at(0.4).best_value >= -1e-8);
        assert!(r.all_monotone);
    }

    #[test]
    fn one_copy_point_matches_value() {
        let r = run_search(&SearchConfig::one_copy(3, 0.7, 2, 1)).unwrap();
        let SearchPoint::OneCopy { x, y, u, v } = &r.best_point else {
            panic!("expected a one-copy point");
        };
        let psi = PureStateVector::one_copy_rank2(x, u, y, v).unwrap();
        let val = eval_sigma_form(&psi, WernerFamily::new(3, 0.7).unwrap(), 1).unwrap().value;
        assert!((val / psi.norm_sqr() - r.best_value).abs() < 1e-9);
    }

    #[test]
    fn scan_and_reports() {
        let cfg = SearchConfig::one_copy(3, 0.0, 2, 3);
        let scan = scan_one_distill(3, &[0.3, 0.4, 0.5, 0.6], &cfg).unwrap();
        assert!(monotonicity_report(&scan));
        assert_eq!(locate_sign_change(&scan), Some((0.5, 0.6)));
        let constant: Vec<_> = (0..4).map(|k| ScanPoint { t: k as f64, min_value: 1.0 }).collect();
        assert!(monotonicity_report(&constant));
        let mut shuffled = scan.clone();
        shuffled[0].min_value = scan[3].min_value;
        shuffled[3].min_value = scan[0].min_value;
        assert!(!monotonicity_report(&shuffled));
    }

    #[test]
    fn grid() {
        let g = t_grid(0.0, 1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(t_grid(0.45, 0.55, 0.01).len(), 11);
    }

    #[test]
    fn candidate_verification_uses_oracle() {
        let mut rng = rng_from_seed(2);
        let q = MatrixQuadruple {
            x: random_complex_matrix(&mut rng, 3, 3),
            y: random_complex_matrix(&mut rng, 3, 3),
            u: random_complex_matrix(&mut rng, 3, 3),
            v: random_complex_matrix(&mut rng, 3, 3),
        };
        let phi = phi_vector(&q).phi;
        let r = RestartOutcome {
            restart: 0,
            seed: 0,
            structured_start: false,
            final_value: -1.0,
            iterations: 1,
            trace: vec![-1.0],
            converged: true,
            monotone: true,
            fixed_point_gap: 0.0,
            point: SearchPoint::TwoCopy(q),
        };
        let cand = verify_candidate(&r).unwrap();
        assert!((cand.oracle_value.unwrap() - phi).abs() < 1e-9 * phi.abs().max(1.0));
        assert_eq!(cand.confirmed, phi < CANDIDATE_THRESHOLD);
    }
}

