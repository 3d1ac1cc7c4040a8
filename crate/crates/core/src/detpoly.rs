//! The real polynomial `D(X, Y) = det H(X, Y)` evaluated in log space, its
//! unitary and `GL_2` identities, nonvanishing samples on generic pairs and
//! PSD certification by continuation from a diagonal pair.
//!
//! Zero tests use the conditioning scale `||H||_2 * prod_{i != min} |λ_i|`,
//! the size of `||H|| ||adj H||` that bounds the rounding error of `D`, so
//! `|D| / scale = min |λ_i| / ||H||_2`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagonal::{is_generic, random_diagonal_pair, PD_TOL};
use crate::error::{Error, Result};
use crate::hmatrix::{build_h, MoebiusParam};
use crate::linalg::{
    c, det_from_eigenvalues, frobenius, hermitian_eigenvalues, identity, require_unitary, scale_of, CMatrix,
};
use crate::sampling::{derive_seed, random_complex_matrix, random_complex_vector, rng_from_seed};

/// `|D| < ZERO_TOL * scale` marks a zero candidate.
pub const ZERO_TOL: f64 = 1e-12;
/// Candidates are confirmed only if some eigenvalue of `H` is below this
/// fraction of `||H||`.
pub const CONFIRM_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct DetRecord {
    pub d: usize,
    #[serde(skip)]
    pub x: CMatrix,
    #[serde(skip)]
    pub y: CMatrix,
    pub value: f64,
    pub log_abs: f64,
    pub sign: i8,
    pub generic: bool,
    /// `ln(||H||_2 * prod_{i != min} |λ_i|)`.
    pub log_scale: f64,
    pub lambda_min: f64,
    pub min_abs_eig: f64,
    pub norm_h: f64,
}

impl DetRecord {
    /// `ln(|D| / scale)`, at most 0.
    pub fn relative_log(&self) -> f64 {
        if self.log_scale == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.log_abs - self.log_scale
    }

    /// `|D| / scale`.
    pub fn relative_magnitude(&self) -> f64 {
        self.relative_log().exp()
    }

    pub fn vanishes(&self, tol: f64) -> bool {
        self.relative_log() < tol.ln()
    }

    pub fn is_zero_candidate(&self) -> bool {
        self.vanishes(ZERO_TOL)
    }

    /// Tightened check: an eigenvalue of `H` is numerically zero.
    pub fn confirmed_zero(&self) -> bool {
        self.min_abs_eig <= CONFIRM_TOL * self.norm_h
    }
}

fn conditioning_log_scale(eig: &[f64]) -> f64 {
    let mut abs: Vec<f64> = eig.iter().map(|l| l.abs()).collect();
    abs.sort_by(f64::total_cmp);
    match abs.last() {
        Some(&top) if top > 0.0 => top.ln() + abs[1..].iter().map(|l| l.ln()).sum::<f64>(),
        _ => f64::NEG_INFINITY,
    }
}

pub fn det_h(x: &CMatrix, y: &CMatrix) -> Result<DetRecord> {
    let hf = build_h(x, y)?;
    let eig = hermitian_eigenvalues(&hf.h)?;
    let det = det_from_eigenvalues(&eig);
    Ok(DetRecord {
        d: hf.d,
        x: x.clone(),
        y: y.clone(),
        value: det.value,
        log_abs: det.log_abs,
        sign: det.sign,
        generic: is_generic(x, y),
        log_scale: conditioning_log_scale(&eig),
        lambda_min: eig[0],
        min_abs_eig: eig.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min),
        norm_h: frobenius(&hf.h),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetIdentityReport {
    /// Relative log-space deviation of `D(AXB, AYB) = D(X, Y)`.
    pub unitary_dev: f64,
    /// Relative log-space deviation of `D(ΛZ) = |det Λ|^{2d^2} D(Z)`; for
    /// singular `Λ`, the relative magnitude `|D(ΛZ)| / scale`.
    pub gl_dev: f64,
    pub lambda_singular: bool,
}

fn log_dev(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

pub fn check_det_identities(
    x: &CMatrix,
    y: &CMatrix,
    a: &CMatrix,
    b: &CMatrix,
    lam: &MoebiusParam,
) -> Result<DetIdentityReport> {
    require_unitary(a, 1e-10)?;
    require_unitary(b, 1e-10)?;
    let d = x.nrows();
    let base = det_h(x, y)?;
    let moved = det_h(&(a * x * b), &(a * y * b))?;
    let unitary_dev = if base.is_zero_candidate() {
        base.relative_magnitude().max(moved.relative_magnitude())
    } else if moved.sign != base.sign {
        f64::INFINITY
    } else {
        log_dev(moved.log_abs, base.log_abs)
    };

    let (x2, y2) = lam.apply(x, y);
    let mixed = det_h(&x2, &y2)?;
    let lambda_singular = lam.det().norm() == 0.0 || lam.is_singular();
    let gl_dev = if lambda_singular {
        mixed.relative_magnitude()
    } else if base.is_zero_candidate() {
        base.relative_magnitude().max(mixed.relative_magnitude())
    } else if mixed.sign != base.sign {
        f64::INFINITY
    } else {
        let exponent = 2.0 * (d * d) as f64;
        log_dev(mixed.log_abs, base.log_abs + exponent * lam.det().norm().ln())
    };
    Ok(DetIdentityReport {
        unitary_dev,
        gl_dev,
        lambda_singular,
    })
}

/// `log2(|D(αX + βY, γX + δY)| / |D(X, Y)|)`.
pub fn log2_det_ratio(x: &CMatrix, y: &CMatrix, lam: &MoebiusParam) -> Result<f64> {
    let base = det_h(x, y)?;
    let (x2, y2) = lam.apply(x, y);
    let mixed = det_h(&x2, &y2)?;
    Ok((mixed.log_abs - base.log_abs) / std::f64::consts::LN_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairDistribution {
    Gaussian,
    DiagonalPlusPerturbation,
    LowRankPlusIdentity,
}

impl PairDistribution {
    pub const ALL: [PairDistribution; 3] = [
        PairDistribution::Gaussian,
        PairDistribution::DiagonalPlusPerturbation,
        PairDistribution::LowRankPlusIdentity,
    ];

    pub fn sample(self, rng: &mut impl Rng, d: usize) -> (CMatrix, CMatrix) {
        match self {
            PairDistribution::Gaussian => (random_complex_matrix(rng, d, d), random_complex_matrix(rng, d, d)),
            PairDistribution::DiagonalPlusPerturbation => {
                let pair = random_diagonal_pair(rng, d);
                let eps = c(0.1, 0.0);
                (
                    pair.x() + random_complex_matrix(rng, d, d) * eps,
                    pair.y() + random_complex_matrix(rng, d, d) * eps,
                )
            }
            PairDistribution::LowRankPlusIdentity => {
                let rank_one = |rng: &mut _| {
                    let a = random_complex_vector(rng, d);
                    let b = random_complex_vector(rng, d);
                    a * b.adjoint()
                };
                let x = identity(d) + rank_one(rng);
                let y = rank_one(rng) + rank_one(rng);
                (x, y)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DetSample {
    pub seed: u64,
    pub distribution: PairDistribution,
    pub generic: bool,
    /// `None` for non-generic draws, which are excluded.
    pub record: Option<DetRecord>,
    pub zero_candidate: bool,
    pub confirmed_zero: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetSampleSummary {
    pub d: usize,
    pub n_samples: usize,
    pub n_generic: usize,
    pub n_candidates: usize,
    /// Smallest `ln(|D| / scale)` over generic samples.
    pub min_relative_log: f64,
    pub min_log_abs: f64,
    pub any_zero: bool,
    /// Generic diagonal-type samples with `D <= 0`.
    pub n_nonpositive: usize,
    #[serde(skip)]
    pub samples: Vec<DetSample>,
}

pub fn sample_det_one(d: usize, master_seed: u64, index: u64) -> Result<DetSample> {
    let seed = derive_seed(master_seed, index);
    let distribution = PairDistribution::ALL[(index % 3) as usize];
    let (x, y) = distribution.sample(&mut rng_from_seed(seed), d);
    if !is_generic(&x, &y) {
        return Ok(DetSample {
            seed,
            distribution,
            generic: false,
            record: None,
            zero_candidate: false,
            confirmed_zero: false,
        });
    }
    let rec = det_h(&x, &y)?;
    let zero_candidate = rec.is_zero_candidate();
    let confirmed_zero = zero_candidate && rec.confirmed_zero();
    Ok(DetSample {
        seed,
        distribution,
        generic: true,
        record: Some(rec),
        zero_candidate,
        confirmed_zero,
    })
}

pub fn summarize_det_samples(d: usize, samples: Vec<DetSample>) -> DetSampleSummary {
    let generic: Vec<&DetRecord> = samples.iter().filter_map(|s| s.record.as_ref()).collect();
    DetSampleSummary {
        d,
        n_samples: samples.len(),
        n_generic: generic.len(),
        n_candidates: samples.iter().filter(|s| s.zero_candidate).count(),
        min_relative_log: generic.iter().map(|r| r.relative_log()).fold(f64::INFINITY, f64::min),
        min_log_abs: generic.iter().map(|r| r.log_abs).fold(f64::INFINITY, f64::min),
        any_zero: samples.iter().any(|s| s.confirmed_zero),
        n_nonpositive: generic.iter().filter(|r| r.sign <= 0).count(),
        samples,
    }
}

/// Draws `n_samples` pairs cycling through [`PairDistribution::ALL`], one
/// derived seed per sample.
pub fn sample_det_nonvanishing(d: usize, n_samples: usize, seed: u64) -> Result<DetSampleSummary> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!("D vanishes identically for d = {d} < 3")));
    }
    let samples = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| sample_det_one(d, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize_det_samples(d, samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub lambda_min: f64,
    pub log_abs_d: f64,
    pub norm_h: f64,
    pub generic: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationPath {
    #[serde(skip)]
    pub start: (CMatrix, CMatrix),
    #[serde(skip)]
    pub end: (CMatrix, CMatrix),
    /// Polyline corners, including both endpoints.
    #[serde(skip)]
    pub waypoints: Vec<(CMatrix, CMatrix)>,
    /// Strictly increasing in `t`.
    pub samples: Vec<PathSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    PositiveDefinite,
    /// `H` lost positive definiteness at parameter `t`.
    NotPositiveDefinite { t: f64, lambda_min: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationOutcome {
    pub verdict: Verdict,
    pub path: ContinuationPath,
    /// Starts tried before a generic path was found.
    pub attempts: usize,
    pub refinements: usize,
    /// `λ_min(H(X1, Y1))` computed directly.
    pub direct_lambda_min: f64,
    pub direct_psd: bool,
}

pub const MAX_RESTARTS: usize = 5;
pub const MAX_DEPTH: usize = 20;
/// Required ratio between `λ_min` and the eigenvalue motion over an interval.
pub const MOTION_MARGIN: f64 = 10.0;

struct Polyline<'a> {
    points: &'a [(CMatrix, CMatrix)],
}

impl Polyline<'_> {
    fn at(&self, t: f64) -> (CMatrix, CMatrix) {
        let segments = self.points.len() - 1;
        let s = (t.clamp(0.0, 1.0) * segments as f64).min(segments as f64);
        let k = (s.floor() as usize).min(segments - 1);
        let w = s - k as f64;
        let (x0, y0) = &self.points[k];
        let (x1, y1) = &self.points[k + 1];
        let (a, b) = (c(1.0 - w, 0.0), c(w, 0.0));
        (x0 * a + x1 * b, y0 * a + y1 * b)
    }
}

struct Probe {
    sample: PathSample,
    h: CMatrix,
}

fn probe(line: &Polyline, t: f64) -> Result<Probe> {
    let (x, y) = line.at(t);
    let hf = build_h(&x, &y)?;
    let eig = hermitian_eigenvalues(&hf.h)?;
    let norm_h = frobenius(&hf.h);
    Ok(Probe {
        sample: PathSample {
            t,
            lambda_min: eig[0],
            log_abs_d: det_from_eigenvalues(&eig).log_abs,
            norm_h,
            generic: is_generic(&x, &y),
        },
        h: hf.h,
    })
}

enum Walk {
    Done { samples: Vec<PathSample>, verdict: Verdict, refinements: usize },
    NonGeneric,
}

fn walk(points: &[(CMatrix, CMatrix)], steps: usize) -> Result<Walk> {
    let line = Polyline { points };
    let mut probes = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let p = probe(&line, k as f64 / steps as f64)?;
        if !p.sample.generic {
            return Ok(Walk::NonGeneric);
        }
        probes.push(p);
    }
    let mut samples: Vec<PathSample> = probes.iter().map(|p| p.sample).collect();
    let mut refinements = 0;
    let mut verdict = Verdict::PositiveDefinite;
    'outer: for p in &probes {
        if !positive(&p.sample) {
            verdict = Verdict::NotPositiveDefinite {
                t: p.sample.t,
                lambda_min: p.sample.lambda_min,
            };
            break 'outer;
        }
    }
    if verdict == Verdict::PositiveDefinite {
        for pair in probes.windows(2) {
            match refine(&line, &pair[0], &pair[1], 0, &mut samples, &mut refinements)? {
                Some(Verdict::PositiveDefinite) | None => {}
                Some(v) => {
                    verdict = v;
                    break;
                }
            }
            if samples.iter().any(|s| !s.generic) {
                return Ok(Walk::NonGeneric);
            }
        }
    }
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(Walk::Done {
        samples,
        verdict,
        refinements,
    })
}

fn positive(s: &PathSample) -> bool {
    s.lambda_min > PD_TOL * s.norm_h
}

/// Certifies `[a, b]` when both ends clear the motion margin, bisecting
/// otherwise.
fn refine(
    line: &Polyline,
    a: &Probe,
    b: &Probe,
    depth: usize,
    samples: &mut Vec<PathSample>,
    refinements: &mut usize,
) -> Result<Option<Verdict>> {
    let motion = frobenius(&(&b.h - &a.h));
    if a.sample.lambda_min.min(b.sample.lambda_min) > MOTION_MARGIN * motion {
        return Ok(None);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::CertificationInconclusive {
            depth,
            t: 0.5 * (a.sample.t + b.sample.t),
        });
    }
    *refinements += 1;
    let mid = probe(line, 0.5 * (a.sample.t + b.sample.t))?;
    samples.push(mid.sample);
    if !mid.sample.generic {
        return Ok(None);
    }
    if !positive(&mid.sample) {
        return Ok(Some(Verdict::NotPositiveDefinite {
            t: mid.sample.t,
            lambda_min: mid.sample.lambda_min,
        }));
    }
    if let Some(v) = refine(line, a, &mid, depth + 1, samples, refinements)? {
        return Ok(Some(v));
    }
    refine(line, &mid, b, depth + 1, samples, refinements)
}

fn outcome(
    points: Vec<(CMatrix, CMatrix)>,
    samples: Vec<PathSample>,
    verdict: Verdict,
    attempts: usize,
    refinements: usize,
) -> Result<ContinuationOutcome> {
    let end = points.last().expect("path has endpoints").clone();
    let hf = build_h(&end.0, &end.1)?;
    let direct_lambda_min = hermitian_eigenvalues(&hf.h)?[0];
    Ok(ContinuationOutcome {
        verdict,
        path: ContinuationPath {
            start: points[0].clone(),
            end,
            waypoints: points,
            samples,
        },
        attempts,
        refinements,
        direct_lambda_min,
        direct_psd: direct_lambda_min >= -crate::hmatrix::PSD_TOL * scale_of(&hf.h),
    })
}

/// Walks the straight line from `start` to `target`.
pub fn certify_from(
    start: (CMatrix, CMatrix),
    target: (CMatrix, CMatrix),
    steps: usize,
) -> Result<ContinuationOutcome> {
    let steps = steps.max(1);
    let points = vec![start, target];
    match walk(&points, steps)? {
        Walk::Done {
            samples,
            verdict,
            refinements,
        } => outcome(points, samples, verdict, 1, refinements),
        Walk::NonGeneric => Err(Error::GenericityLost(1)),
    }
}

/// Certifies that `H(X1, Y1)` is positive definite by following a generic
/// path from a seeded random diagonal pair, along which `H` stays positive
/// definite.
///
/// Up to [`MAX_RESTARTS`] straight-line paths from re-seeded diagonal starts
/// are tried; after that the path midpoint is displaced by a small seeded
/// offset, again up to [`MAX_RESTARTS`] times.
pub fn certify_psd_continuation(x1: &CMatrix, y1: &CMatrix, steps: usize, seed: u64) -> Result<ContinuationOutcome> {
    if !is_generic(x1, y1) {
        return Err(Error::InvalidParameter("continuation target must be a generic pair".into()));
    }
    let d = x1.nrows();
    let steps = steps.max(1);
    let target = (x1.clone(), y1.clone());
    let target_scale = (frobenius(x1) + frobenius(y1)) / (2.0 * (d as f64).sqrt());
    let start_for = |rng: &mut crate::sampling::SampleRng| loop {
        let pair = random_diagonal_pair(rng, d);
        if pair.is_generic() {
            let s = c(target_scale / 2f64.sqrt(), 0.0);
            break (pair.x() * s, pair.y() * s);
        }
    };

    let mut attempts = 0;
    for attempt in 0..2 * MAX_RESTARTS {
        attempts += 1;
        let mut rng = rng_from_seed(derive_seed(seed, attempt as u64));
        let start = start_for(&mut rng);
        let points = if attempt < MAX_RESTARTS {
            vec![start, target.clone()]
        } else {
            let eps = c(0.05 * target_scale, 0.0);
            let mid_x = (&start.0 + &target.0) * c(0.5, 0.0) + random_complex_matrix(&mut rng, d, d) * eps;
            let mid_y = (&start.1 + &target.1) * c(0.5, 0.0) + random_complex_matrix(&mut rng, d, d) * eps;
            vec![start, (mid_x, mid_y), target.clone()]
        };
        match walk(&points, steps)? {
            Walk::Done {
                samples,
                verdict,
                refinements,
            } => return outcome(points, samples, verdict, attempts, refinements),
            Walk::NonGeneric => continue,
        }
    }
    Err(Error::GenericityLost(attempts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::DiagonalPair;
    use crate::linalg::diag_real;
    use crate::sampling::random_unitary;

    fn random_pair(seed: u64, d: usize) -> (CMatrix, CMatrix) {
        let mut rng = rng_from_seed(seed);
        (random_complex_matrix(&mut rng, d, d), random_complex_matrix(&mut rng, d, d))
    }

    #[test]
    fn vanishes_for_small_d() {
        for d in [1, 2] {
            for seed in 0..10 {
                let (x, y) = random_pair(seed, d);
                let r = det_h(&x, &y).unwrap();
                assert!(r.vanishes(1e-9), "d = {d}: {r:?}");
            }
        }
    }

    #[test]
    fn vanishes_for_dependent_pairs() {
        let (x, _) = random_pair(1, 3);
        let r = det_h(&x, &(&x * c(3.0, 0.0))).unwrap();
        assert!(r.vanishes(1e-9));
        assert!(!r.generic);
        let r = det_h(&x, &CMatrix::zeros(3, 3)).unwrap();
        assert!(r.vanishes(1e-9));
    }

    #[test]
    fn positive_for_diagonal_example() {
        let r = det_h(&diag_real(&[1.0, 2.0, 3.0]), &identity(3)).unwrap();
        assert!(r.value > 0.0 && r.sign == 1 && r.generic);
        assert!(!r.is_zero_candidate());
        assert!(r.relative_log() <= 0.0);
    }

    #[test]
    fn gl_exponent() {
        let (x, y) = random_pair(2, 3);
        let lam = MoebiusParam::real(2.0, 0.0, 0.0, 1.0);
        let r = log2_det_ratio(&x, &y, &lam).unwrap();
        assert!((r - 18.0).abs() < 1e-6, "{r}");
        let base = det_h(&x, &y).unwrap();
        let (x2, y2) = lam.apply(&x, &y);
        let scaled = det_h(&x2, &y2).unwrap();
        assert!((scaled.value / base.value - 262144.0).abs() < 1e-6 * 262144.0);
    }

    #[test]
    fn identities_hold() {
        let mut rng = rng_from_seed(3);
        for d in [3, 4] {
            let (x, y) = random_pair(10 + d as u64, d);
            for _ in 0..5 {
                let a = random_unitary(&mut rng, d);
                let b = random_unitary(&mut rng, d);
                let lam = MoebiusParam::new(
                    crate::sampling::random_complex(&mut rng),
                    crate::sampling::random_complex(&mut rng),
                    crate::sampling::random_complex(&mut rng),
                    crate::sampling::random_complex(&mut rng),
                );
                let r = check_det_identities(&x, &y, &a, &b, &lam).unwrap();
                assert!(r.unitary_dev <= 1e-6 && r.gl_dev <= 1e-6 && !r.lambda_singular, "{r:?}");
            }
        }
        let (x, y) = random_pair(20, 3);
        let singular = MoebiusParam::real(1.0, 1.0, 1.0, 1.0);
        let r = check_det_identities(&x, &y, &identity(3), &identity(3), &singular).unwrap();
        assert!(r.lambda_singular && r.gl_dev <= 1e-9);
    }

    #[test]
    fn det_sampling() {
        let s = sample_det_nonvanishing(3, 60, 5).unwrap();
        assert_eq!(s.n_samples, 60);
        assert_eq!(s.n_candidates, 0);
        assert!(!s.any_zero);
        assert!(s.n_generic > 50);
        let again = sample_det_nonvanishing(3, 60, 5).unwrap();
        assert_eq!(s.min_relative_log, again.min_relative_log);
        assert!(sample_det_nonvanishing(2, 10, 5).is_err());
    }

    #[test]
    fn diagonal_generic_determinants_positive() {
        let mut rng = rng_from_seed(6);
        for _ in 0..20 {
            let p = random_diagonal_pair(&mut rng, 3);
            let r = det_h(&p.x(), &p.y()).unwrap();
            assert_eq!(r.sign, 1);
        }
    }

    #[test]
    fn continuation_between_diagonal_pairs() {
        let out = certify_psd_continuation(&diag_real(&[1.0, 2.0, 3.0]), &identity(3), 32, 1).unwrap();
        assert_eq!(out.verdict, Verdict::PositiveDefinite);
        assert!(out.path.samples.iter().all(|s| s.lambda_min > 0.0 && s.generic));
        assert!(out.path.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(out.path.samples.first().unwrap().t, 0.0);
        assert_eq!(out.path.samples.last().unwrap().t, 1.0);
        assert!(out.direct_psd);
    }

    #[test]
    fn continuation_to_random_targets() {
        for seed in 0..5 {
            let (x, y) = random_pair(100 + seed, 3);
            let out = certify_psd_continuation(&x, &y, 32, seed).unwrap();
            assert_eq!(out.verdict, Verdict::PositiveDefinite);
            assert!(out.direct_psd);
        }
    }

    #[test]
    fn trivial_path() {
        let p = DiagonalPair::real(&[1.0, 2.0, 3.0], &[1.0, -1.0, 0.5]).unwrap();
        let out = certify_from((p.x(), p.y()), (p.x(), p.y()), 8).unwrap();
        assert_eq!(out.verdict, Verdict::PositiveDefinite);
        assert_eq!(out.refinements, 0);
    }

    #[test]
    fn continuation_rejects_non_generic_target() {
        let (x, _) = random_pair(4, 3);
        assert!(certify_psd_continuation(&x, &(&x * c(2.0, 0.0)), 16, 0).is_err());
    }
}
