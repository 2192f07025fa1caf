//! Structural classification of kernels: M-matrix and inverse M-matrix
//! tests, sign normalization, symmetrizability of 3x3 blocks, and the
//! verdict of the "at most one symmetrizable 3x3 block" theorem.

use std::collections::VecDeque;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::{k_subsets, Signature, SquareMatrix, Tolerance};
use crate::permanent::{default_gamma_grid, vere_jones_check, Exponent, VjReport};
use crate::serde_util::{one_based, one_based_pairs, one_based_sets};

/// Nonsingular, nonpositive off-diagonal entries, entrywise nonnegative
/// inverse.
pub fn is_m_matrix(a: &SquareMatrix, tol: &Tolerance) -> bool {
    let n = a.n();
    let scale = a.scale();
    let off_ok = (0..n).all(|i| (0..n).all(|j| i == j || a.get(i, j) <= tol.zero_tol * scale));
    if !off_ok {
        return false;
    }
    match a.inverse(tol) {
        Ok(inv) => {
            let s = inv.scale();
            inv.as_slice().iter().all(|&x| x >= -tol.zero_tol * s)
        }
        Err(_) => false,
    }
}

/// `A` is invertible and `A^{-1}` is an M-matrix.
pub fn is_inverse_m_matrix(a: &SquareMatrix, tol: &Tolerance) -> bool {
    match a.inverse(tol) {
        Ok(inv) => is_m_matrix(&inv, tol),
        Err(_) => false,
    }
}

/// Why a matrix fails to be an inverse M-matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InverseMObstruction {
    Singular,
    NegativeEntry {
        #[serde(serialize_with = "one_based_index")]
        row: usize,
        #[serde(serialize_with = "one_based_index")]
        col: usize,
        value: f64,
    },
    /// A positive off-diagonal entry of the inverse.
    PositiveInverseEntry {
        #[serde(serialize_with = "one_based_index")]
        row: usize,
        #[serde(serialize_with = "one_based_index")]
        col: usize,
        value: f64,
    },
}

fn one_based_index<S: serde::Serializer>(i: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*i as u64 + 1)
}

/// The first obstruction to the inverse M-matrix property, scanning the
/// inverse's off-diagonal entries before the matrix's own signs.
pub fn inverse_m_obstruction(a: &SquareMatrix, tol: &Tolerance) -> Option<InverseMObstruction> {
    let n = a.n();
    let inv = match a.inverse(tol) {
        Ok(inv) => inv,
        Err(_) => return Some(InverseMObstruction::Singular),
    };
    let s = inv.scale();
    for i in 0..n {
        for j in 0..n {
            let v = inv.get(i, j);
            if i != j && v > tol.zero_tol * s {
                return Some(InverseMObstruction::PositiveInverseEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    let s = a.scale();
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if v < -tol.zero_tol * s {
                return Some(InverseMObstruction::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    None
}

/// Reason no positivity signature exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoSignature {
    ZeroOffDiagonal {
        #[serde(serialize_with = "one_based_index")]
        row: usize,
        #[serde(serialize_with = "one_based_index")]
        col: usize,
    },
    NonpositiveDiagonal {
        #[serde(serialize_with = "one_based_index")]
        index: usize,
    },
    /// `S(row) A(row,col) S(col)` is negative for the propagated signs.
    SignConflict {
        #[serde(serialize_with = "one_based_index")]
        row: usize,
        #[serde(serialize_with = "one_based_index")]
        col: usize,
    },
}

impl fmt::Display for NoSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NoSignature::ZeroOffDiagonal { row, col } => {
                write!(f, "zero off-diagonal entry at ({}, {})", row + 1, col + 1)
            }
            NoSignature::NonpositiveDiagonal { index } => {
                write!(f, "nonpositive diagonal entry at {}", index + 1)
            }
            NoSignature::SignConflict { row, col } => {
                write!(f, "sign conflict at ({}, {})", row + 1, col + 1)
            }
        }
    }
}

/// Signature `S` with `S_i A_ij S_j > 0` for every entry, found by fixing
/// `S_1 = +1`, propagating `S_j = sign(A_1j)` and verifying the rest.
pub fn positivity_signature(
    a: &SquareMatrix,
    tol: &Tolerance,
) -> std::result::Result<Signature, NoSignature> {
    let n = a.n();
    let scale = a.scale();
    for i in 0..n {
        for j in 0..n {
            if i != j && tol.is_zero(a.get(i, j), scale) {
                return Err(NoSignature::ZeroOffDiagonal { row: i, col: j });
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| a.get(i, i) <= tol.zero_tol * scale) {
        return Err(NoSignature::NonpositiveDiagonal { index: i });
    }
    let signs: Vec<i8> = (0..n)
        .map(|j| if j == 0 || a.get(0, j) > 0.0 { 1 } else { -1 })
        .collect();
    let s = Signature::new(signs).expect("signs are +-1");
    for i in 0..n {
        for j in 0..n {
            if i != j && s.sign(i) * a.get(i, j) * s.sign(j) <= 0.0 {
                return Err(NoSignature::SignConflict { row: i, col: j });
            }
        }
    }
    Ok(s)
}

pub fn find_positivity_signature(a: &SquareMatrix, tol: &Tolerance) -> Option<Signature> {
    positivity_signature(a, tol).ok()
}

/// Signature making every entry nonnegative, propagated along the graph of
/// nonzero entries (zeros allowed). Components are anchored at `+1`.
fn nonnegativity_signature(a: &SquareMatrix, tol: &Tolerance) -> Option<Signature> {
    let n = a.n();
    let scale = a.scale();
    let nz = |i: usize, j: usize| !tol.is_zero(a.get(i, j), scale);
    let mut signs = vec![0i8; n];
    for root in 0..n {
        if signs[root] != 0 {
            continue;
        }
        signs[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if signs[j] != 0 || !(nz(i, j) || nz(j, i)) {
                    continue;
                }
                let v = if nz(i, j) { a.get(i, j) } else { a.get(j, i) };
                signs[j] = if v > 0.0 { signs[i] } else { -signs[i] };
                queue.push_back(j);
            }
        }
    }
    let s = Signature::new(signs).expect("signs are +-1");
    let ok = (0..n)
        .all(|i| (0..n).all(|j| s.sign(i) * a.get(i, j) * s.sign(j) >= -tol.zero_tol * scale));
    ok.then_some(s)
}

/// Whether `D A D^{-1}` is symmetric for some positive diagonal `D`: every
/// pair `A_ij A_ji` is positive and every 3-cycle balances,
/// `A_ij A_jk A_ki = A_ji A_kj A_ik`. Requires nonzero off-diagonal entries.
pub fn is_diag_equiv_symmetric(a: &SquareMatrix, tol: &Tolerance) -> Result<bool> {
    let n = a.n();
    let scale = a.scale();
    for i in 0..n {
        for j in 0..n {
            if i != j && tol.is_zero(a.get(i, j), scale) {
                return Err(Error::HasZeroEntry { row: i, col: j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if a.get(i, j) * a.get(j, i) <= 0.0 {
                return Ok(false);
            }
        }
    }
    for t in k_subsets(n, 3) {
        let (i, j, k) = (t[0], t[1], t[2]);
        let fwd = a.get(i, j) * a.get(j, k) * a.get(k, i);
        let bwd = a.get(j, i) * a.get(k, j) * a.get(i, k);
        if !tol.close(fwd, bwd, 0.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Symmetrizability of a 3x3 kernel. A zero off-diagonal entry makes it
/// effectively equivalent to a symmetric matrix; otherwise some signature
/// must turn every off-diagonal entry positive and the two 3-cycles must
/// have equal magnitude, `|K12 K23 K31| = |K21 K13 K32|`.
///
/// Pairs with `K_ij K_ji < 0` rule out both routes and give `false`.
pub fn is_symmetrizable_3x3(k: &SquareMatrix, tol: &Tolerance) -> Result<bool> {
    if k.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: k.n(),
        });
    }
    let scale = k.scale();
    let zero = |x: f64| tol.is_zero(x, scale);
    let mut has_zero = false;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let (x, y) = (k.get(i, j), k.get(j, i));
        if zero(x) || zero(y) {
            has_zero = true;
        } else if x * y < 0.0 {
            return Ok(false);
        }
    }
    if has_zero {
        return Ok(true);
    }
    // Signs propagated from index 1; the pair products above are positive,
    // so only the 3-cycle sign can obstruct.
    let s1 = k.get(0, 1).signum();
    let s2 = k.get(0, 2).signum();
    if s1 * k.get(1, 2) * s2 <= 0.0 {
        return Ok(false);
    }
    let fwd = (k.get(0, 1) * k.get(1, 2) * k.get(2, 0)).abs();
    let bwd = (k.get(1, 0) * k.get(0, 2) * k.get(2, 1)).abs();
    Ok(tol.close(fwd, bwd, 0.0))
}

/// Every 3-element index set whose principal block is symmetrizable, in
/// lexicographic order. Empty for `n < 3`.
pub fn count_symmetrizable_3subsets(g: &SquareMatrix, tol: &Tolerance) -> Vec<Vec<usize>> {
    k_subsets(g.n(), 3)
        .into_par_iter()
        .filter(|idx| is_symmetrizable_3x3(&g.submatrix_unchecked(idx), tol).expect("block is 3x3"))
        .collect()
}

/// A signature `S` with `S G S` an inverse M-matrix, if one exists.
///
/// An inverse M-matrix is entrywise nonnegative, so `S` must make every
/// nonzero entry positive; that fixes `S` up to sign on each connected
/// component of the nonzero pattern. Positive diagonal scaling does not
/// change the inverse-M property.
pub fn is_diag_equiv_inverse_m(g: &SquareMatrix, tol: &Tolerance) -> Option<Signature> {
    let s = find_positivity_signature(g, tol).or_else(|| nonnegativity_signature(g, tol))?;
    let normalized = g.signature_conjugate(&s).expect("dimensions agree");
    is_inverse_m_matrix(&normalized, tol).then_some(s)
}

/// `G(i,j) G(k,k) >= G(i,k) G(k,j)` for every `i, j` and pivot `k` of a
/// 3x3 block, up to `zero_tol` times the squared scale. Inverse M-matrices
/// satisfy it.
pub fn willoughby_inequality(g: &SquareMatrix, tol: &Tolerance) -> Result<bool> {
    if g.n() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: g.n(),
        });
    }
    let slack = tol.zero_tol * g.scale() * g.scale();
    Ok((0..3).all(|k| {
        (0..3)
            .all(|i| (0..3).all(|j| g.get(i, j) * g.get(k, k) >= g.get(i, k) * g.get(k, j) - slack))
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MClass {
    #[serde(rename = "inverse-M")]
    InverseM,
    #[serde(rename = "diag-equiv-inverse-M")]
    DiagEquivInverseM,
    #[serde(rename = "M-matrix")]
    MMatrix,
    #[serde(rename = "none")]
    None,
}

impl MClass {
    /// Whether some signature conjugate is inverse-M.
    pub fn inverse_m_up_to_signature(self) -> bool {
        matches!(self, MClass::InverseM | MClass::DiagEquivInverseM)
    }
}

impl fmt::Display for MClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MClass::InverseM => "inverse-M",
            MClass::DiagEquivInverseM => "diag-equiv-inverse-M",
            MClass::MMatrix => "M-matrix",
            MClass::None => "none",
        })
    }
}

pub fn m_class(g: &SquareMatrix, tol: &Tolerance) -> MClass {
    if is_inverse_m_matrix(g, tol) {
        MClass::InverseM
    } else if is_diag_equiv_inverse_m(g, tol).is_some() {
        MClass::DiagEquivInverseM
    } else if is_m_matrix(g, tol) {
        MClass::MMatrix
    } else {
        MClass::None
    }
}

/// Verdict of the theorem for kernels of dimension above 3 with at most one
/// symmetrizable 3x3 principal block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem1 {
    /// Hypotheses hold and the kernel is diagonally equivalent to an inverse
    /// M-matrix: infinitely divisible.
    #[serde(rename = "hypotheses-met-ID")]
    HypothesesMetId,
    /// Hypotheses hold but the kernel is not diagonally equivalent to an
    /// inverse M-matrix, so it cannot be a permanental kernel. This is a
    /// logical consequence, not a numerically found violation.
    #[serde(rename = "hypotheses-met-not-kernel")]
    HypothesesMetNotKernel,
    #[serde(rename = "not-applicable")]
    NotApplicable,
}

impl fmt::Display for Theorem1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem1::HypothesesMetId => "hypotheses-met-ID",
            Theorem1::HypothesesMetNotKernel => "hypotheses-met-not-kernel",
            Theorem1::NotApplicable => "not-applicable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Signature turning the kernel into an inverse M-matrix.
    InverseMSignature {
        signs: Signature,
    },
    NoPositivitySignature {
        reason: NoSignature,
    },
    /// Obstruction for `S G S` (or `G` when no signature exists).
    NotInverseM {
        obstruction: InverseMObstruction,
    },
    SymmetrizableSubset {
        #[serde(serialize_with = "one_based")]
        indices: Vec<usize>,
    },
    DimensionTooSmall {
        n: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyConfig {
    pub gamma_grid: Vec<f64>,
    pub max_order: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            gamma_grid: default_gamma_grid(),
            max_order: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub n: usize,
    #[serde(serialize_with = "one_based_pairs")]
    pub zero_pattern: Vec<(usize, usize)>,
    pub signature: Option<Signature>,
    #[serde(serialize_with = "one_based_sets")]
    pub sym3_subsets: Vec<Vec<usize>>,
    pub m_class: MClass,
    pub vere_jones: VjReport,
    pub theorem1: Theorem1,
    pub witnesses: Vec<Witness>,
}

/// Full classification: zero pattern, sign normalization, symmetrizable
/// 3-subsets, M-class, the theorem verdict, and an independent Vere-Jones
/// scan.
pub fn classify_kernel(
    g: &SquareMatrix,
    b: Exponent,
    cfg: &ClassifyConfig,
    tol: &Tolerance,
) -> Result<KernelReport> {
    let n = g.n();
    let scale = g.scale();
    let zero_pattern: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| tol.is_zero(g.get(i, j), scale))
        .collect();

    let mut witnesses = Vec::new();
    let signature = match positivity_signature(g, tol) {
        Ok(s) => Some(s),
        Err(reason) => {
            witnesses.push(Witness::NoPositivitySignature { reason });
            None
        }
    };
    let sym3_subsets = count_symmetrizable_3subsets(g, tol);
    let m_class = m_class(g, tol);

    let diag_equiv = is_diag_equiv_inverse_m(g, tol);
    match &diag_equiv {
        Some(s) => witnesses.push(Witness::InverseMSignature { signs: s.clone() }),
        None => {
            let target = match &signature {
                Some(s) => g.signature_conjugate(s)?,
                None => g.clone(),
            };
            if let Some(obstruction) = inverse_m_obstruction(&target, tol) {
                witnesses.push(Witness::NotInverseM { obstruction });
            }
        }
    }

    let theorem1 = if n <= 3 {
        witnesses.push(Witness::DimensionTooSmall { n });
        Theorem1::NotApplicable
    } else if sym3_subsets.len() <= 1 {
        for idx in &sym3_subsets {
            witnesses.push(Witness::SymmetrizableSubset {
                indices: idx.clone(),
            });
        }
        if diag_equiv.is_some() {
            Theorem1::HypothesesMetId
        } else {
            Theorem1::HypothesesMetNotKernel
        }
    } else {
        Theorem1::NotApplicable
    };

    let vere_jones = vere_jones_check(g, b, &cfg.gamma_grid, cfg.max_order, tol)?;

    Ok(KernelReport {
        n,
        zero_pattern,
        signature,
        sym3_subsets,
        m_class,
        vere_jones,
        theorem1,
        witnesses,
    })
}
