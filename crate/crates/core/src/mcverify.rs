//! Monte Carlo checks for the squared-Gaussian case `b = 1/2`: sampling
//! `(eta_1^2, ..., eta_n^2)` with `eta ~ N(0, G)`, empirical Laplace
//! transforms, and the conditioning identity behind the tilted kernel.
//!
//! Draws are produced in fixed blocks of [`BLOCK_SIZE`]; block `i` uses its
//! own ChaCha stream seeded with `seed + i`, so results do not depend on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{SquareMatrix, Tolerance};
use crate::permanent::Exponent;
use crate::reduce::conditioning_kernel;

/// Draws per independently seeded block.
pub const BLOCK_SIZE: usize = 8192;

/// `G = L L^T` with `L` of size `n x rank`, rows in the original index order.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdFactor {
    n: usize,
    rank: usize,
    l: Vec<f64>,
}

impl PsdFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.rank + j]
    }

    /// `L z` for `z` of length `rank`.
    fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.l[i * self.rank..(i + 1) * self.rank];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    pub fn reconstruct(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.n, |i, j| {
            (0..self.rank)
                .map(|k| self.get(i, k) * self.get(j, k))
                .sum()
        })
    }
}

/// Pivoted Cholesky factorization of a symmetric positive semidefinite
/// matrix. Residual pivots within `zero_tol * scale` of zero are clamped,
/// which admits rank-deficient covariances.
pub fn psd_factor(g: &SquareMatrix, tol: &Tolerance) -> Result<PsdFactor> {
    let n = g.n();
    let scale = g.scale();
    for i in 0..n {
        for j in i + 1..n {
            if !tol.close(g.get(i, j), g.get(j, i), scale) {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    gap: (g.get(i, j) - g.get(j, i)).abs(),
                });
            }
        }
    }
    let sym = SquareMatrix::from_fn(n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)));
    let mut work: Vec<f64> = sym.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    // columns of L in permuted order
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let cut = tol.zero_tol * scale;

    for k in 0..n {
        let (p, dmax) = (k..n)
            .map(|t| (t, work[perm[t] * n + perm[t]]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty range");
        if dmax <= cut {
            break;
        }
        perm.swap(k, p);
        let piv = perm[k];
        let root = dmax.sqrt();
        let mut col = vec![0.0; n];
        col[piv] = root;
        for &r in &perm[k + 1..] {
            col[r] = work[r * n + piv] / root;
        }
        for &r in &perm[k + 1..] {
            for &c in &perm[k + 1..] {
                work[r * n + c] -= col[r] * col[c];
            }
        }
        for t in 0..n {
            work[piv * n + t] = 0.0;
            work[t * n + piv] = 0.0;
        }
        cols.push(col);
    }

    let residual_cut = tol.zero_tol.sqrt() * scale;
    for r in 0..n {
        let d = work[r * n + r];
        if d < -cut {
            return Err(Error::NotPsd { value: d });
        }
        for c in 0..n {
            if work[r * n + c].abs() > residual_cut {
                return Err(Error::NotPsd {
                    value: -work[r * n + c].abs(),
                });
            }
        }
    }

    let rank = cols.len();
    let mut l = vec![0.0; n * rank];
    for (k, col) in cols.iter().enumerate() {
        for i in 0..n {
            l[i * rank + k] = col[i];
        }
    }
    Ok(PsdFactor { n, rank, l })
}

/// Squared coordinates of centered Gaussian draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub count: usize,
    /// `count x n`, row-major.
    pub draws: Vec<f64>,
}

impl SampleBatch {
    pub fn draw(&self, k: usize) -> &[f64] {
        &self.draws[k * self.n..(k + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks_exact(self.n)
    }
}

/// `count` draws of `(eta_1^2, ..., eta_n^2)` with `eta ~ N(0, G)`.
pub fn sample_squared_gaussian(
    g: &SquareMatrix,
    count: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let factor = psd_factor(g, tol)?;
    let n = g.n();
    let blocks = count.div_ceil(BLOCK_SIZE);
    let chunks: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(count - b * BLOCK_SIZE);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(b as u64));
            let mut z = vec![0.0; factor.rank()];
            let mut eta = vec![0.0; n];
            let mut out = Vec::with_capacity(len * n);
            for _ in 0..len {
                for x in z.iter_mut() {
                    *x = StandardNormal.sample(&mut rng);
                }
                factor.apply(&z, &mut eta);
                out.extend(eta.iter().map(|e| e * e));
            }
            out
        })
        .collect();
    Ok(SampleBatch {
        n,
        count,
        draws: chunks.concat(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LtEstimate {
    pub point_estimate: f64,
    pub std_error: f64,
    pub count: usize,
}

impl LtEstimate {
    /// `|estimate - target| <= k * SE`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.point_estimate - target).abs() <= k * self.std_error
    }
}

fn check_alphas(alphas: &[f64], n: usize) -> Result<()> {
    if alphas.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alphas.len(),
        });
    }
    if let Some(a) = alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "alphas must be finite and nonnegative, got {a}"
        )));
    }
    Ok(())
}

fn mean_and_se(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let mut count = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for x in values {
        count += 1;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
    }
    let se = if count > 1 {
        (m2 / (count - 1) as f64 / count as f64).sqrt()
    } else {
        0.0
    };
    (mean, se, count)
}

/// Sample mean and standard error of `exp(-1/2 sum alpha_i psi_i)`.
pub fn empirical_laplace(batch: &SampleBatch, alphas: &[f64]) -> Result<LtEstimate> {
    check_alphas(alphas, batch.n)?;
    let (mean, se, count) = mean_and_se(batch.iter().map(|psi| {
        let s: f64 = psi.iter().zip(alphas).map(|(p, a)| p * a).sum();
        (-0.5 * s).exp()
    }));
    Ok(LtEstimate {
        point_estimate: mean,
        std_error: se,
        count,
    })
}

/// `det(I + diag(alpha) G)^{-b}`.
pub fn closed_form_laplace(g: &SquareMatrix, alphas: &[f64], b: Exponent) -> Result<f64> {
    check_alphas(alphas, g.n())?;
    let m = SquareMatrix::from_fn(g.n(), |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id + alphas[i] * g.get(i, j)
    });
    let det = m.determinant();
    if det.is_nan() || det <= 0.0 {
        return Err(Error::NonpositiveDeterminant { det });
    }
    Ok(det.powf(-b.value()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditioningCheck {
    pub lhs: LtEstimate,
    pub rhs: f64,
}

impl ConditioningCheck {
    pub fn agrees(&self, k: f64) -> bool {
        self.lhs.agrees_with(self.rhs, k)
    }
}

/// Tilting by `exp(-sigma psi_n / 2)` and comparing the Laplace transform of
/// the first `n - 1` coordinates with the closed form for the conditioning
/// kernel `H(sigma, G, n)`. The left side is a ratio estimator with a
/// delta-method standard error.
pub fn verify_conditioning(
    g: &SquareMatrix,
    sigma: f64,
    alphas: &[f64],
    count: usize,
    seed: u64,
    tol: &Tolerance,
) -> Result<ConditioningCheck> {
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "conditioning needs dimension at least 2".into(),
        ));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    check_alphas(alphas, n - 1)?;
    let batch = sample_squared_gaussian(g, count, seed, tol)?;
    let pairs: Vec<(f64, f64)> = batch
        .iter()
        .map(|psi| {
            let s: f64 = psi[..n - 1].iter().zip(alphas).map(|(p, a)| p * a).sum();
            let w = (-0.5 * sigma * psi[n - 1]).exp();
            ((-0.5 * s).exp() * w, w)
        })
        .collect();
    let (num, _, _) = mean_and_se(pairs.iter().map(|p| p.0));
    let (den, _, _) = mean_and_se(pairs.iter().map(|p| p.1));
    let ratio = num / den;
    let (_, z_se, _) = mean_and_se(pairs.iter().map(|(xy, y)| xy - ratio * y));
    let h = conditioning_kernel(g, sigma, n - 1)?;
    let rhs = closed_form_laplace(&h, alphas, Exponent::new(0.5)?)?;
    Ok(ConditioningCheck {
        lhs: LtEstimate {
            point_estimate: ratio,
            std_error: z_se / den,
            count,
        },
        rhs,
    })
}
