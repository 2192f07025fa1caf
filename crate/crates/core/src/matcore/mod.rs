//! Dense real square matrices and the handful of operations the kernel
//! classifiers need: determinants, inverses, resolvents, principal
//! submatrices, signature and diagonal conjugation, and effective
//! equivalence (equality of all principal minors).
//!
//! Everything here is small-dimensional. Indices in the Rust API are
//! 0-based; reports rendered for humans convert to 1-based.

pub mod io;

use std::fmt;
use std::ops::{Index, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension accepted by routines that enumerate index subsets.
pub const MAX_ENUMERATION_DIM: usize = 16;

/// Absolute and relative thresholds used by every numerical decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Values with magnitude at most `zero_tol * scale` are treated as zero.
    pub zero_tol: f64,
    /// Relative threshold for equality comparisons.
    pub rel_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            zero_tol: 1e-9,
            rel_tol: 1e-9,
        }
    }
}

impl Tolerance {
    pub fn new(zero_tol: f64, rel_tol: f64) -> Result<Self> {
        if !(zero_tol > 0.0 && zero_tol.is_finite()) || !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive and finite (zero_tol = {zero_tol}, rel_tol = {rel_tol})"
            )));
        }
        Ok(Tolerance { zero_tol, rel_tol })
    }

    /// Whether `x` counts as zero relative to `scale`.
    pub fn is_zero(&self, x: f64, scale: f64) -> bool {
        x.abs() <= self.zero_tol * scale
    }

    /// Relative equality, with `floor` bounding the denominator from below so
    /// that two tiny values compare equal.
    pub fn close(&self, a: f64, b: f64, floor: f64) -> bool {
        let denom = a.abs().max(b.abs()).max(floor);
        (a - b).abs() <= self.rel_tol * denom
    }
}

/// Dense real `n x n` matrix stored row-major. All entries are finite.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "io::MatrixDocument", into = "io::MatrixDocument")]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SquareMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl fmt::Display for SquareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:>10.6}")).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl SquareMatrix {
    /// Builds a matrix from row-major data of length `n * n`.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if data.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / n + 1,
                pos % n + 1
            )));
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::InvalidMatrix(format!(
                    "row {} has {} entries, expected {n} (matrix must be square)",
                    i + 1,
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        SquareMatrix::new(n, data)
    }

    /// Builds a matrix from an entry function. Panics on non-finite output
    /// or `n == 0`; meant for values computed internally.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n > 0, "dimension must be at least 1");
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite entry at ({i}, {j})");
                data.push(v);
            }
        }
        SquareMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        SquareMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SquareMatrix::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        SquareMatrix::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        SquareMatrix::from_fn(self.n, |i, j| f(self.get(i, j)))
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    pub fn add(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(SquareMatrix::from_fn(self.n, |i, j| {
            self.get(i, j) + other.get(i, j)
        }))
    }

    pub fn sub(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_same_dim(other)?;
        Ok(SquareMatrix::from_fn(self.n, |i, j| {
            self.get(i, j) - other.get(i, j)
        }))
    }

    pub fn matmul(&self, other: &SquareMatrix) -> Result<Self> {
        self.check_same_dim(other)?;
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.get(k, j);
                }
            }
        }
        SquareMatrix::new(n, out)
    }

    /// `I + c * self`.
    pub fn shifted_identity(&self, c: f64) -> Self {
        SquareMatrix::from_fn(self.n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id + c * self.get(i, j)
        })
    }

    /// Largest absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Scale used for zero thresholds: the max-norm, or 1 for the zero matrix.
    pub fn scale(&self) -> f64 {
        let m = self.max_norm();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    pub fn max_abs_diff(&self, other: &SquareMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: &Tolerance) -> bool {
        let scale = self.scale();
        (0..self.n)
            .all(|i| (i + 1..self.n).all(|j| tol.close(self.get(i, j), self.get(j, i), scale)))
    }

    fn check_same_dim(&self, other: &SquareMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    /// Determinant by partial-pivoted elimination. Exactly singular input
    /// gives 0.
    pub fn determinant(&self) -> f64 {
        let lu = Lu::factor(self);
        lu.determinant()
    }

    /// Inverse by partial-pivoted elimination. Fails when a pivot falls
    /// below `zero_tol * scale`.
    pub fn inverse(&self, tol: &Tolerance) -> Result<Self> {
        let lu = Lu::factor(self);
        if lu.min_pivot_abs() <= tol.zero_tol * self.scale() {
            return Err(Error::SingularMatrix { op: "inverse" });
        }
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[j] = 1.0;
            lu.solve_in_place(&mut col);
            for i in 0..n {
                inv[i * n + j] = col[i];
            }
        }
        SquareMatrix::new(n, inv).map_err(|_| Error::SingularMatrix { op: "inverse" })
    }

    /// The resolvent `(I + sigma G)^{-1} G`.
    pub fn resolvent(&self, sigma: f64, tol: &Tolerance) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "resolvent parameter must be finite and >= 0, got {sigma}"
            )));
        }
        let shifted = self.shifted_identity(sigma);
        let lu = Lu::factor(&shifted);
        if lu.min_pivot_abs() <= tol.zero_tol * shifted.scale() {
            return Err(Error::SingularMatrix { op: "resolvent" });
        }
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = self.get(i, j);
            }
            lu.solve_in_place(&mut col);
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        SquareMatrix::new(n, out).map_err(|_| Error::SingularMatrix { op: "resolvent" })
    }

    /// Rows and columns selected by `idx`, which must be nonempty, strictly
    /// increasing and in range.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::InvalidParameter("empty index set".into()));
        }
        for (pos, &i) in idx.iter().enumerate() {
            if i >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    n: self.n,
                });
            }
            if pos > 0 && idx[pos - 1] >= i {
                return Err(Error::InvalidParameter(
                    "index set must be strictly increasing".into(),
                ));
            }
        }
        Ok(self.submatrix_unchecked(idx))
    }

    /// Principal submatrix without ordering checks; indices may repeat.
    pub(crate) fn submatrix_unchecked(&self, idx: &[usize]) -> Self {
        SquareMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Matrix with row and column `k` removed. Requires `n >= 2`.
    pub fn without_index(&self, k: usize) -> Result<Self> {
        if k >= self.n {
            return Err(Error::IndexOutOfRange {
                index: k,
                n: self.n,
            });
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(
                "cannot delete an index from a 1x1 matrix".into(),
            ));
        }
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != k).collect();
        Ok(self.submatrix_unchecked(&keep))
    }

    /// `D A D^{-1}`, entries `d_i A_ij / d_j`.
    pub fn diagonal_conjugate(&self, d: &DiagonalScaling) -> Result<Self> {
        if d.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: d.len(),
            });
        }
        let d = d.values();
        Ok(SquareMatrix::from_fn(self.n, |i, j| {
            d[i] * self.get(i, j) / d[j]
        }))
    }

    /// `S A S` for a signature `S`, entries `s_i A_ij s_j`.
    pub fn signature_conjugate(&self, s: &Signature) -> Result<Self> {
        if s.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: s.len(),
            });
        }
        Ok(SquareMatrix::from_fn(self.n, |i, j| {
            s.sign(i) * self.get(i, j) * s.sign(j)
        }))
    }

    /// All `2^n - 1` principal minors, indexed by the bitmask of the subset
    /// (entry 0, the empty minor, is 1).
    pub fn principal_minors(&self) -> Result<Vec<f64>> {
        if self.n > MAX_ENUMERATION_DIM {
            return Err(Error::DimensionTooLarge {
                n: self.n,
                max: MAX_ENUMERATION_DIM,
                op: "principal minor enumeration",
            });
        }
        let count = 1usize << self.n;
        let mut minors = vec![1.0; count];
        let mut idx = Vec::with_capacity(self.n);
        for (mask, slot) in minors.iter_mut().enumerate().skip(1) {
            idx.clear();
            idx.extend((0..self.n).filter(|&i| mask & (1 << i) != 0));
            *slot = self.submatrix_unchecked(&idx).determinant();
        }
        Ok(minors)
    }
}

impl SquareMatrix {
    /// Eigenvalues as `(re, im)` pairs, from a real Schur decomposition.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let m = nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.data);
        m.complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect()
    }
}

impl Index<(usize, usize)> for SquareMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl Mul for &SquareMatrix {
    type Output = SquareMatrix;

    fn mul(self, rhs: &SquareMatrix) -> SquareMatrix {
        self.matmul(rhs)
            .expect("dimension mismatch in matrix product")
    }
}

/// Whether two matrices have equal principal minors for every nonempty index
/// subset, i.e. `|I + xA| = |I + xB|` for every diagonal `x`.
pub fn effectively_equivalent(a: &SquareMatrix, b: &SquareMatrix, tol: &Tolerance) -> Result<bool> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.n(),
        });
    }
    let ma = a.principal_minors()?;
    let mb = b.principal_minors()?;
    let scale = a.scale().max(b.scale());
    Ok(ma
        .iter()
        .zip(&mb)
        .enumerate()
        .skip(1)
        .all(|(mask, (x, y))| {
            let order = (mask as u32).count_ones() as i32;
            tol.close(*x, *y, scale.powi(order))
        }))
}

/// A diagonal matrix with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Signature(Vec<i8>);

impl Signature {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidParameter("empty signature".into()));
        }
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "signature components must be -1 or +1, got {bad}"
            )));
        }
        Ok(Signature(signs))
    }

    pub fn all_positive(n: usize) -> Self {
        Signature(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sign(&self, i: usize) -> f64 {
        f64::from(self.0[i])
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    /// The same signature with every component flipped.
    pub fn negated(&self) -> Self {
        Signature(self.0.iter().map(|s| -s).collect())
    }

    /// Equal to `other` or to its negation.
    pub fn eq_up_to_global_sign(&self, other: &Signature) -> bool {
        self == other || *self == other.negated()
    }
}

impl TryFrom<Vec<i8>> for Signature {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Signature::new(v)
    }
}

impl From<Signature> for Vec<i8> {
    fn from(s: Signature) -> Vec<i8> {
        s.0
    }
}

/// Positive diagonal scaling `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalScaling(Vec<f64>);

impl DiagonalScaling {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParameter("empty scaling".into()));
        }
        if let Some(bad) = diag.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "diagonal scaling entries must be positive and finite, got {bad}"
            )));
        }
        Ok(DiagonalScaling(diag))
    }

    pub fn ones(n: usize) -> Self {
        DiagonalScaling(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Partial-pivoted LU factorization, `P A = L U` packed into one buffer.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    fn factor(a: &SquareMatrix) -> Lu {
        let n = a.n();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            if pmax == 0.0 {
                continue;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= factor * lu[k * n + j];
                    }
                }
            }
        }
        Lu { n, lu, perm, swaps }
    }

    fn determinant(&self) -> f64 {
        let prod: f64 = (0..self.n).map(|k| self.lu[k * self.n + k]).product();
        if self.swaps.is_multiple_of(2) {
            prod
        } else {
            -prod
        }
    }

    fn min_pivot_abs(&self) -> f64 {
        (0..self.n)
            .map(|k| self.lu[k * self.n + k].abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let permuted: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&permuted);
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
