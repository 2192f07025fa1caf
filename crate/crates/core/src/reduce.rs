//! Kernel transformations used to reduce dimension: the conditioning kernel
//! obtained by exponential tilting in one coordinate, the ratio matrix and
//! the breakpoints where a tilted 3x3 block becomes symmetrizable, block
//! doubling, Schur complements and the Johnson-Smith block criterion for
//! inverse M-matrices.

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    count_symmetrizable_3subsets, find_positivity_signature, is_inverse_m_matrix,
};
use crate::error::{Error, Result};
use crate::matcore::{k_subsets, Signature, SquareMatrix, Tolerance};
use crate::serde_util::{one_based, one_based_sets};

/// `H(sigma, G, k)`: the kernel over indices other than `k` with entries
/// `G(i,j) - sigma / (1 + sigma G(k,k)) * G(i,k) G(k,j)`.
pub fn conditioning_kernel(g: &SquareMatrix, sigma: f64, k: usize) -> Result<SquareMatrix> {
    let n = g.n();
    if k >= n {
        return Err(Error::IndexOutOfRange { index: k, n });
    }
    if n < 2 {
        return Err(Error::InvalidParameter(
            "conditioning needs dimension at least 2".into(),
        ));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    let denom = 1.0 + sigma * g.get(k, k);
    if denom.abs() <= 1e-12 * (1.0 + (sigma * g.get(k, k)).abs()) {
        return Err(Error::PoleAtSigma { sigma, k });
    }
    let coef = sigma / denom;
    let keep: Vec<usize> = (0..n).filter(|&i| i != k).collect();
    Ok(SquareMatrix::from_fn(n - 1, |a, b| {
        let (i, j) = (keep[a], keep[b]);
        g.get(i, j) - coef * g.get(i, k) * g.get(k, j)
    }))
}

/// The tilting coefficient `c = sigma / (1 + sigma G(p,p))`.
pub fn tilt_coefficient(sigma: f64, pivot_diag: f64) -> f64 {
    sigma / (1.0 + sigma * pivot_diag)
}

/// Inverse of [`tilt_coefficient`]: `sigma = c / (1 - c G(p,p))`.
pub fn sigma_for_coefficient(c: f64, pivot_diag: f64) -> f64 {
    c / (1.0 - c * pivot_diag)
}

/// `Gamma(i,j) = G(i,j) / (G(i,p) G(p,j))` over all indices. The pivot row
/// and column must have no zero entry.
pub fn ratio_matrix(g: &SquareMatrix, p: usize, tol: &Tolerance) -> Result<SquareMatrix> {
    let n = g.n();
    if p >= n {
        return Err(Error::IndexOutOfRange { index: p, n });
    }
    let scale = g.scale();
    for i in 0..n {
        if tol.is_zero(g.get(i, p), scale) {
            return Err(Error::ZeroPivotEntry { row: i, col: p });
        }
        if tol.is_zero(g.get(p, i), scale) {
            return Err(Error::ZeroPivotEntry { row: p, col: i });
        }
    }
    Ok(SquareMatrix::from_fn(n, |i, j| {
        g.get(i, j) / (g.get(i, p) * g.get(p, j))
    }))
}

/// Values of `c` where `(Gamma - c)` restricted to a triple is
/// symmetrizable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointSet {
    /// Sorted, inside `(0, 1/pivot_diag)`.
    pub values: Vec<f64>,
    /// The block is symmetrizable for every `c`.
    pub degenerate: bool,
}

/// Solves `(G12-c)(G23-c)(G31-c) = (G21-c)(G13-c)(G32-c)` on the triple
/// `(i, j, k)`. The cubic terms cancel, leaving a polynomial of degree at
/// most 2 whose coefficients are computed in closed form.
pub fn symmetrizability_breakpoints(
    gamma: &SquareMatrix,
    triple: [usize; 3],
    pivot_diag: f64,
    tol: &Tolerance,
) -> Result<BreakpointSet> {
    let n = gamma.n();
    if let Some(&bad) = triple.iter().find(|&&t| t >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    if triple[0] == triple[1] || triple[1] == triple[2] || triple[0] == triple[2] {
        return Err(Error::InvalidParameter(
            "triple indices must be distinct".into(),
        ));
    }
    let [i, j, k] = triple;
    let fwd = [gamma.get(i, j), gamma.get(j, k), gamma.get(k, i)];
    let bwd = [gamma.get(j, i), gamma.get(i, k), gamma.get(k, j)];
    // prod(x - c) = -c^3 + e1 c^2 - e2 c + e3
    let e1 = |x: &[f64; 3]| x[0] + x[1] + x[2];
    let e2 = |x: &[f64; 3]| x[0] * x[1] + x[1] * x[2] + x[2] * x[0];
    let e3 = |x: &[f64; 3]| x[0] * x[1] * x[2];
    let quad = e1(&fwd) - e1(&bwd);
    let lin = -(e2(&fwd) - e2(&bwd));
    let cst = e3(&fwd) - e3(&bwd);

    let m = fwd
        .iter()
        .chain(&bwd)
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
        .max(f64::MIN_POSITIVE);
    let q_zero = quad.abs() <= tol.zero_tol * m;
    let l_zero = lin.abs() <= tol.zero_tol * m * m;
    let c_zero = cst.abs() <= tol.zero_tol * m * m * m;
    if q_zero && l_zero && c_zero {
        return Ok(BreakpointSet {
            values: Vec::new(),
            degenerate: true,
        });
    }

    let mut roots = Vec::new();
    if q_zero {
        if !l_zero {
            roots.push(-cst / lin);
        }
    } else {
        let disc = lin * lin - 4.0 * quad * cst;
        let disc_floor = tol.zero_tol * (lin * lin).max((4.0 * quad * cst).abs());
        if disc.abs() <= disc_floor {
            roots.push(-lin / (2.0 * quad));
        } else if disc > 0.0 {
            // numerically stable pair
            let s = disc.sqrt();
            let t = -0.5 * (lin + lin.signum() * s);
            let t = if t == 0.0 { -0.5 * s } else { t };
            roots.push(t / quad);
            if t != 0.0 {
                roots.push(cst / t);
            }
        }
    }
    let upper = if pivot_diag > 0.0 {
        1.0 / pivot_diag
    } else {
        f64::INFINITY
    };
    roots.retain(|&c| c > 0.0 && c < upper);
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol.rel_tol * a.abs().max(b.abs()));
    Ok(BreakpointSet {
        values: roots,
        degenerate: false,
    })
}

/// `H(alpha) = [[G, alpha G], [alpha G, G]]` for `alpha` in `[0, 1]`.
pub fn block_double(g: &SquareMatrix, alpha: f64) -> Result<SquareMatrix> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let n = g.n();
    Ok(SquareMatrix::from_fn(2 * n, |i, j| {
        let v = g.get(i % n, j % n);
        if (i < n) == (j < n) {
            v
        } else {
            alpha * v
        }
    }))
}

/// Which diagonal block is eliminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchurBlock {
    /// `H/H11 = H22 - H21 H11^{-1} H12`.
    UpperLeft,
    /// `H/H22 = H11 - H12 H22^{-1} H21`.
    LowerRight,
}

/// Dense row-major rectangular buffer for off-diagonal blocks.
#[derive(Debug, Clone)]
struct Block {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Block {
    fn of(h: &SquareMatrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Block {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            for j in cols.clone() {
                data.push(h.get(i, j));
            }
        }
        Block {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    fn square(m: &SquareMatrix) -> Block {
        Block {
            rows: m.n(),
            cols: m.n(),
            data: m.as_slice().to_vec(),
        }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn mul(&self, other: &Block) -> Block {
        assert_eq!(self.cols, other.rows);
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Block {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

struct Partition {
    h11: SquareMatrix,
    h12: Block,
    h21: Block,
    h22: SquareMatrix,
}

fn partition(h: &SquareMatrix, split: usize) -> Result<Partition> {
    let n = h.n();
    if split == 0 || split >= n {
        return Err(Error::InvalidParameter(format!(
            "split must be in 1..{n}, got {split}"
        )));
    }
    let upper: Vec<usize> = (0..split).collect();
    let lower: Vec<usize> = (split..n).collect();
    Ok(Partition {
        h11: h.submatrix_unchecked(&upper),
        h12: Block::of(h, 0..split, split..n),
        h21: Block::of(h, split..n, 0..split),
        h22: h.submatrix_unchecked(&lower),
    })
}

fn complement(
    keep: &SquareMatrix,
    left: &Block,
    inv: &SquareMatrix,
    right: &Block,
) -> SquareMatrix {
    let corr = left.mul(&Block::square(inv)).mul(right);
    SquareMatrix::from_fn(keep.n(), |i, j| keep.get(i, j) - corr.get(i, j))
}

/// Schur complement of the chosen diagonal block, with the upper-left block
/// of size `split`.
pub fn schur_complement(
    h: &SquareMatrix,
    block: SchurBlock,
    split: usize,
    tol: &Tolerance,
) -> Result<SquareMatrix> {
    let p = partition(h, split)?;
    match block {
        SchurBlock::UpperLeft => {
            let inv = p
                .h11
                .inverse(tol)
                .map_err(|_| Error::SingularBlock { block: "H11" })?;
            Ok(complement(&p.h22, &p.h21, &inv, &p.h12))
        }
        SchurBlock::LowerRight => {
            let inv = p
                .h22
                .inverse(tol)
                .map_err(|_| Error::SingularBlock { block: "H22" })?;
            Ok(complement(&p.h11, &p.h12, &inv, &p.h21))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JsCondition {
    /// `H/H11` is an inverse M-matrix.
    I,
    /// `H/H22` is an inverse M-matrix.
    Ii,
    /// `H22^{-1} H21 (H/H22)^{-1}` is entrywise nonnegative.
    Iii,
    /// `(H/H22)^{-1} H12 H22^{-1}` is entrywise nonnegative.
    Iv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JsVerdict {
    pub verdict: bool,
    pub failed_condition: Option<JsCondition>,
}

/// Johnson-Smith block test: `H` is an inverse M-matrix iff both Schur
/// complements are inverse M-matrices and the two off-diagonal blocks of
/// `-H^{-1}` are nonnegative. Reports the first failing condition.
pub fn johnson_smith_inverse_m(
    h: &SquareMatrix,
    split: usize,
    tol: &Tolerance,
) -> Result<JsVerdict> {
    let p = partition(h, split)?;
    let h11_inv = p
        .h11
        .inverse(tol)
        .map_err(|_| Error::SingularBlock { block: "H11" })?;
    let h22_inv = p
        .h22
        .inverse(tol)
        .map_err(|_| Error::SingularBlock { block: "H22" })?;
    let s11 = complement(&p.h22, &p.h21, &h11_inv, &p.h12);
    let s22 = complement(&p.h11, &p.h12, &h22_inv, &p.h21);
    let s22_inv = s22
        .inverse(tol)
        .map_err(|_| Error::SingularBlock { block: "H/H22" })?;

    let fail = |c| {
        Ok(JsVerdict {
            verdict: false,
            failed_condition: Some(c),
        })
    };
    if !is_inverse_m_matrix(&s11, tol) {
        return fail(JsCondition::I);
    }
    if !is_inverse_m_matrix(&s22, tol) {
        return fail(JsCondition::Ii);
    }
    let lower = Block::square(&h22_inv)
        .mul(&p.h21)
        .mul(&Block::square(&s22_inv));
    if lower.min() < -tol.zero_tol * lower.max_abs().max(f64::MIN_POSITIVE) {
        return fail(JsCondition::Iii);
    }
    let upper = Block::square(&s22_inv)
        .mul(&p.h12)
        .mul(&Block::square(&h22_inv));
    if upper.min() < -tol.zero_tol * upper.max_abs().max(f64::MIN_POSITIVE) {
        return fail(JsCondition::Iv);
    }
    Ok(JsVerdict {
        verdict: true,
        failed_condition: None,
    })
}

/// Breakpoints of one triple, in both the `c` and the `sigma` scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleBreakpoints {
    #[serde(serialize_with = "one_based")]
    pub triple: Vec<usize>,
    pub breakpoints: BreakpointSet,
    pub sigma_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaPoint {
    pub sigma: f64,
    pub c: f64,
    /// Symmetrizable 3-subsets of the conditioning kernel, labelled by the
    /// original indices.
    #[serde(serialize_with = "one_based_sets")]
    pub conditioned_sym3: Vec<Vec<usize>>,
    /// Positivity signature of the resolvent `(I + sigma G)^{-1} G`.
    pub resolvent_signature: Option<Signature>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReduceScan {
    #[serde(serialize_with = "crate::serde_util::one_based_index")]
    pub pivot: usize,
    /// Signature applied before forming the ratio matrix, when one exists.
    pub normalizing_signature: Option<Signature>,
    pub triples: Vec<TripleBreakpoints>,
    pub points: Vec<SigmaPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ReduceScan {
    /// Grid points where the conditioning kernel could be formed.
    pub fn evaluated_points(&self) -> usize {
        self.points.iter().filter(|p| p.note.is_none()).count()
    }
}

/// Scans `sigma` over a grid for one pivot: breakpoints of every triple not
/// containing the pivot, symmetrizable 3-subsets of each conditioning
/// kernel, and the sign pattern of each resolvent. Points at poles are
/// skipped with a note.
pub fn reduce_scan(
    g: &SquareMatrix,
    pivot: usize,
    sigma_grid: &[f64],
    tol: &Tolerance,
) -> Result<ReduceScan> {
    let n = g.n();
    if pivot >= n {
        return Err(Error::IndexOutOfRange { index: pivot, n });
    }
    if sigma_grid.is_empty() {
        return Err(Error::InvalidParameter("sigma grid is empty".into()));
    }
    let normalizing_signature = find_positivity_signature(g, tol);
    let work = match &normalizing_signature {
        Some(s) => g.signature_conjugate(s)?,
        None => g.clone(),
    };
    let pivot_diag = work.get(pivot, pivot);
    let rest: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();

    let mut notes = Vec::new();
    let mut triples = Vec::new();
    match ratio_matrix(&work, pivot, tol) {
        Ok(gamma) => {
            for t in k_subsets(rest.len(), 3) {
                let triple = [rest[t[0]], rest[t[1]], rest[t[2]]];
                let breakpoints = symmetrizability_breakpoints(&gamma, triple, pivot_diag, tol)?;
                let sigma_values = breakpoints
                    .values
                    .iter()
                    .map(|&c| sigma_for_coefficient(c, pivot_diag))
                    .collect();
                triples.push(TripleBreakpoints {
                    triple: triple.to_vec(),
                    breakpoints,
                    sigma_values,
                });
            }
        }
        Err(e) => notes.push(format!("ratio matrix unavailable: {e}")),
    }

    let points = sigma_grid
        .par_iter()
        .map(|&sigma| {
            let c = tilt_coefficient(sigma, pivot_diag);
            match conditioning_kernel(&work, sigma, pivot) {
                Ok(h) => {
                    let conditioned_sym3 = count_symmetrizable_3subsets(&h, tol)
                        .into_iter()
                        .map(|idx| idx.into_iter().map(|a| rest[a]).collect())
                        .collect();
                    let (resolvent_signature, note) = match g.resolvent(sigma, tol) {
                        Ok(r) => (find_positivity_signature(&r, tol), None),
                        Err(e) => (None, Some(format!("resolvent: {e}"))),
                    };
                    SigmaPoint {
                        sigma,
                        c,
                        conditioned_sym3,
                        resolvent_signature,
                        note,
                    }
                }
                Err(e) => SigmaPoint {
                    sigma,
                    c,
                    conditioned_sym3: Vec::new(),
                    resolvent_signature: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(ReduceScan {
        pivot,
        normalizing_signature,
        triples,
        points,
        notes,
    })
}
