//! Block structure of `H(X, Y)` for diagonal `X = diag(λ)`, `Y = diag(μ)`.
//!
//! After a symmetric permutation, `H` is the direct sum of `d^2 - d` blocks of
//! order 2 (one per off-diagonal position `p = i*d + j`, pairing stacked
//! indices `p` and `p + d^2`) and one block `B` of order `2d` on the stacked
//! indices of the diagonal entries of `U` and `V`. Indices here are
//! zero-based; reports convert to one-based where noted.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmatrix::build_h;
use crate::linalg::{
    c, diag, frobenius, hermitian_eigenvalues, inner, permute_symmetric, principal_submatrix, scale_of, CMatrix,
};
use crate::sampling::{random_complex, rng_from_seed};

/// Positive definiteness threshold, relative to the block norm.
pub const PD_TOL: f64 = 1e-10;
/// Off-block residual allowed in [`decompose`], relative to `||H||`.
pub const DECOMPOSE_TOL: f64 = 1e-10;

const GRAM_RANK_TOL: f64 = 1e-12;
const DET_TOL: f64 = 1e-10;
const GENERIC_RANDOM_TRIALS: usize = 20;
const GENERIC_SEED: u64 = 0x006e_6572_6963;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalPair {
    pub lambda: Vec<Complex64>,
    pub mu: Vec<Complex64>,
}

impl DiagonalPair {
    pub fn new(lambda: Vec<Complex64>, mu: Vec<Complex64>) -> Result<Self> {
        if lambda.is_empty() || lambda.len() != mu.len() {
            return Err(Error::DimensionMismatch(format!(
                "diagonal vectors of lengths {} and {}",
                lambda.len(),
                mu.len()
            )));
        }
        Ok(DiagonalPair { lambda, mu })
    }

    pub fn real(lambda: &[f64], mu: &[f64]) -> Result<Self> {
        Self::new(
            lambda.iter().map(|&l| c(l, 0.0)).collect(),
            mu.iter().map(|&m| c(m, 0.0)).collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.lambda.len()
    }

    pub fn x(&self) -> CMatrix {
        diag(&self.lambda)
    }

    pub fn y(&self) -> CMatrix {
        diag(&self.mu)
    }

    pub fn scaled(&self, k: Complex64) -> Self {
        DiagonalPair {
            lambda: self.lambda.iter().map(|l| l * k).collect(),
            mu: self.mu.iter().map(|m| m * k).collect(),
        }
    }

    /// Exact genericity for diagonal pairs: `λ, μ` independent and no index
    /// with `λ_k = μ_k = 0` (the latter makes every `αX + βY` singular).
    pub fn is_generic(&self) -> bool {
        let no_common_zero = self
            .lambda
            .iter()
            .zip(&self.mu)
            .all(|(l, m)| *l != Complex64::default() || *m != Complex64::default());
        no_common_zero && gram_rank_two(&self.x(), &self.y())
    }
}

fn gram_rank_two(x: &CMatrix, y: &CMatrix) -> bool {
    let xx = inner(x, x).re;
    let yy = inner(y, y).re;
    if xx == 0.0 || yy == 0.0 {
        return false;
    }
    let xy = inner(x, y).norm_sqr();
    (xx * yy - xy) > GRAM_RANK_TOL * xx * yy
}

/// `X, Y` linearly independent (Gram determinant test) and `det(αX + βY) != 0`
/// for some `(α, β)` among a fixed trial set plus seeded random retries.
pub fn is_generic(x: &CMatrix, y: &CMatrix) -> bool {
    let d = x.nrows();
    if x.shape() != (d, d) || y.shape() != (d, d) || !gram_rank_two(x, y) {
        return false;
    }
    let bound = DET_TOL * (frobenius(x) + frobenius(y)).powi(d as i32);
    let nonsingular = |a: Complex64, b: Complex64| (x * a + y * b).determinant().norm() >= bound;
    let fixed = [
        (c(1.0, 0.0), c(0.0, 0.0)),
        (c(0.0, 0.0), c(1.0, 0.0)),
        (c(1.0, 0.0), c(1.0, 0.0)),
        (c(1.0, 0.0), c(-1.0, 0.0)),
        (c(1.0, 0.0), c(0.0, 1.0)),
    ];
    if fixed.iter().any(|&(a, b)| nonsingular(a, b)) {
        return true;
    }
    let mut rng = rng_from_seed(GENERIC_SEED);
    (0..GENERIC_RANDOM_TRIALS).any(|_| {
        let a = random_complex(&mut rng);
        let b = random_complex(&mut rng);
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        nonsingular(a / n, b / n)
    })
}

/// `[[|λ|^2, λ* μ], [λ μ*, |μ|^2]]`.
fn rank_one_term(l: Complex64, m: Complex64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(l.norm_sqr(), 0.0), l.conj() * m, l * m.conj(), c(m.norm_sqr(), 0.0)])
}

fn check_index(pair: &DiagonalPair, i: usize) -> Result<()> {
    if i >= pair.d() {
        return Err(Error::IndexError(format!("index {i} outside 0..{}", pair.d())));
    }
    Ok(())
}

/// Weights `c_k`: 1 except `c_i = c_j = 1/2`.
pub fn small_block_weights(d: usize, i: usize, j: usize) -> Vec<f64> {
    (0..d).map(|k| if k == i || k == j { 0.5 } else { 1.0 }).collect()
}

/// `H(p) = sum_k c_k [[|λ_k|^2, λ_k* μ_k], [λ_k μ_k*, |μ_k|^2]]` for `p = i*d + j`, `i != j`.
pub fn small_block(pair: &DiagonalPair, i: usize, j: usize) -> Result<CMatrix> {
    check_index(pair, i)?;
    check_index(pair, j)?;
    if i == j {
        return Err(Error::IndexError(format!("small blocks need i != j, got {i}")));
    }
    let weights = small_block_weights(pair.d(), i, j);
    Ok((0..pair.d()).fold(CMatrix::zeros(2, 2), |acc, k| {
        acc + rank_one_term(pair.lambda[k], pair.mu[k]) * c(weights[k], 0.0)
    }))
}

/// `G(i) = sum_{k != i} [[|λ_k|^2, λ_k* μ_k], [λ_k μ_k*, |μ_k|^2]]`.
pub fn sub_block_g(pair: &DiagonalPair, i: usize) -> Result<CMatrix> {
    check_index(pair, i)?;
    Ok((0..pair.d())
        .filter(|&k| k != i)
        .fold(CMatrix::zeros(2, 2), |acc, k| acc + rank_one_term(pair.lambda[k], pair.mu[k])))
}

#[derive(Debug, Clone, Serialize)]
pub struct SmallBlock {
    pub i: usize,
    pub j: usize,
    /// `i*d + j`; stacked indices `p` and `p + d^2`.
    pub p: usize,
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub block: CMatrix,
}

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub d: usize,
    /// `(Π H Π^T)[a, b] = H[permutation[a], permutation[b]]`.
    pub permutation: Vec<usize>,
    pub small_blocks: Vec<SmallBlock>,
    /// Principal submatrix of `H` on the stacked diagonal positions of `U`
    /// then of `V`.
    pub big_block: CMatrix,
    /// `B' = B1 - (B2 + B3)/2` on the same indices.
    pub big_block_prime: CMatrix,
    pub sub_blocks: Vec<CMatrix>,
    pub norm_h: f64,
    /// Off-block Frobenius mass of `Π H Π^T`, relative to `||H||`.
    pub residual: f64,
    /// Distance of the paired `B'` from `⊕ G(i)`, relative to `||B'||`.
    pub b_prime_residual: f64,
}

fn big_block_indices(d: usize) -> Vec<usize> {
    let n = d * d;
    let diag_pos: Vec<usize> = (0..d).map(|i| i * d + i).collect();
    diag_pos.iter().copied().chain(diag_pos.iter().map(|p| p + n)).collect()
}

pub fn decompose(pair: &DiagonalPair) -> Result<BlockDecomposition> {
    let d = pair.d();
    let n = d * d;
    let hf = build_h(&pair.x(), &pair.y())?;
    let h = &hf.h;
    let norm_h = frobenius(h);
    let bound = DECOMPOSE_TOL * norm_h.max(f64::MIN_POSITIVE);

    let mut permutation = Vec::with_capacity(2 * n);
    let mut small_blocks = Vec::with_capacity(n - d);
    let mut formula_gap = 0.0f64;
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            let p = i * d + j;
            permutation.extend([p, p + n]);
            let block = principal_submatrix(h, &[p, p + n]);
            formula_gap = formula_gap.max(frobenius(&(&block - small_block(pair, i, j)?)));
            small_blocks.push(SmallBlock {
                i,
                j,
                p,
                weights: small_block_weights(d, i, j),
                block,
            });
        }
    }
    let big_idx = big_block_indices(d);
    permutation.extend(&big_idx);

    let permuted = permute_symmetric(h, &permutation);
    let mut sizes = vec![2; n - d];
    sizes.push(2 * d);
    let residual = off_block_mass(&permuted, &sizes) / norm_h.max(f64::MIN_POSITIVE);
    if residual * norm_h > bound || formula_gap > bound {
        return Err(Error::DecompositionMismatch {
            residual: residual.max(formula_gap / norm_h.max(f64::MIN_POSITIVE)),
            bound: DECOMPOSE_TOL,
        });
    }

    let big_block = principal_submatrix(h, &big_idx);
    let [h1, h2, h3, _] = &hf.components;
    let big_block_prime = principal_submatrix(&(h1 - (h2 + h3) * c(0.5, 0.0)), &big_idx);

    // B' pairs position i with d + i.
    let pairing: Vec<usize> = (0..d).flat_map(|i| [i, d + i]).collect();
    let paired = permute_symmetric(&big_block_prime, &pairing);
    let sub_blocks: Vec<CMatrix> = (0..d).map(|i| sub_block_g(pair, i)).collect::<Result<_>>()?;
    let mut expected = CMatrix::zeros(2 * d, 2 * d);
    for (i, g) in sub_blocks.iter().enumerate() {
        expected.view_mut((2 * i, 2 * i), (2, 2)).copy_from(g);
    }
    let b_prime_residual = frobenius(&(paired - expected)) / scale_of(&big_block_prime);

    Ok(BlockDecomposition {
        d,
        permutation,
        small_blocks,
        big_block,
        big_block_prime,
        sub_blocks,
        norm_h,
        residual,
        b_prime_residual,
    })
}

fn off_block_mass(m: &CMatrix, sizes: &[usize]) -> f64 {
    let mut owner = Vec::with_capacity(m.nrows());
    for (b, &s) in sizes.iter().enumerate() {
        owner.extend(std::iter::repeat_n(b, s));
    }
    let mut total = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if owner[i] != owner[j] {
                total += m[(i, j)].norm_sqr();
            }
        }
    }
    total.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagonalReport {
    pub generic: bool,
    pub all_small_pd: bool,
    pub big_pd: bool,
    pub lambda_min_h: f64,
    pub norm_h: f64,
    /// Smallest eigenvalue over all small blocks and `B`.
    pub min_block_eig: f64,
    pub residual: f64,
    /// Generic pairs must be positive definite blockwise and overall;
    /// non-generic pairs only need `H` to be PSD.
    pub holds: bool,
}

fn is_pd(m: &CMatrix) -> Result<(bool, f64)> {
    let l = hermitian_eigenvalues(m)?[0];
    Ok((l > PD_TOL * frobenius(m), l))
}

pub fn verify_diagonal_blocks(pair: &DiagonalPair) -> Result<DiagonalReport> {
    let dec = decompose(pair)?;
    let generic = pair.is_generic();
    let mut all_small_pd = true;
    let mut min_block_eig = f64::INFINITY;
    for sb in &dec.small_blocks {
        let (pd, l) = is_pd(&sb.block)?;
        all_small_pd &= pd;
        min_block_eig = min_block_eig.min(l);
    }
    let (big_pd, lb) = is_pd(&dec.big_block)?;
    min_block_eig = min_block_eig.min(lb);
    let h = build_h(&pair.x(), &pair.y())?;
    let lambda_min_h = h.lambda_min()?;
    let holds = if generic {
        all_small_pd && big_pd && lambda_min_h > PD_TOL * dec.norm_h
    } else {
        lambda_min_h >= -PD_TOL * dec.norm_h
    };
    Ok(DiagonalReport {
        generic,
        all_small_pd,
        big_pd,
        lambda_min_h,
        norm_h: dec.norm_h,
        min_block_eig,
        residual: dec.residual,
        holds,
    })
}

/// Random diagonal pair with complex Gaussian entries (generic almost surely).
pub fn random_diagonal_pair(rng: &mut impl Rng, d: usize) -> DiagonalPair {
    DiagonalPair {
        lambda: (0..d).map(|_| random_complex(rng)).collect(),
        mu: (0..d).map(|_| random_complex(rng)).collect(),
    }
}
