//! b-permanents and b-positive definiteness.
//!
//! `per_b(A) = sum over permutations t of b^{c(t)} * prod_i A(i, t(i))`,
//! where `c(t)` is the number of cycles of `t`. With this convention
//! `per_1` is the ordinary permanent, `per_{-1}(A) = (-1)^m det(A)`, and
//! `|I - zA|^{-b}` expands in `z` with these coefficients.
//!
//! A matrix is b-positive definite when `per_b` is nonnegative on every
//! repeated principal matrix `(M(k_i, k_j))`. The check here is finite: it
//! stops at a maximum selection size and at a finite grid of resolvent
//! parameters, so a clean scan means "no violation found".

use rayon::prelude::*;
use serde::Serialize;

use crate::classify::is_diag_equiv_inverse_m;
use crate::error::{Error, Result};
use crate::matcore::{SquareMatrix, Tolerance};
use crate::mcverify::psd_factor;
use crate::serde_util::one_based;

/// Largest matrix accepted by [`per_b`].
pub const MAX_PERMANENT_DIM: usize = 12;

/// Largest selection size accepted by [`is_b_positive_definite`].
pub const MAX_SEARCH_ORDER: usize = 8;

/// Below this size the permutation search stays on one thread.
const PARALLEL_MIN_DIM: usize = 8;

/// The exponent `b` in `|I + alpha G|^{-b}`. The squared-Gaussian case is
/// `b = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(b: f64) -> Result<Self> {
        if b > 0.0 && b.is_finite() {
            Ok(Exponent(b))
        } else {
            Err(Error::InvalidParameter(format!(
                "exponent must be positive and finite, got {b}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Whether `2b` is a positive integer, i.e. `b` is a sum of squared
    /// Gaussian halves.
    pub fn is_half_integer(self) -> bool {
        let twice = 2.0 * self.0;
        (twice - twice.round()).abs() < 1e-12 && twice.round() >= 1.0
    }
}

/// Indices `(k_1, ..., k_m)` with repetition allowed, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Selection(#[serde(serialize_with = "one_based")] Vec<usize>);

impl Selection {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Selection(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coefficients of `per_b(A)` as a polynomial in `b`: entry `c` is the sum of
/// `prod_i A(i, t(i))` over permutations with exactly `c` cycles.
pub fn cycle_polynomial(a: &SquareMatrix) -> Result<Vec<f64>> {
    Ok(cycle_polynomials(a)?.0)
}

/// Signed and absolute cycle polynomials in one pass.
fn cycle_polynomials(a: &SquareMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = a.n();
    if m > MAX_PERMANENT_DIM {
        return Err(Error::DimensionTooLarge {
            n: m,
            max: MAX_PERMANENT_DIM,
            op: "per_b",
        });
    }
    if m < PARALLEL_MIN_DIM {
        let mut search = CycleSearch::new(a);
        search.run(0, 1.0, 1.0, 0);
        return Ok((search.coef, search.abs_coef));
    }
    // Split on the image of row 0; each branch owns its search state.
    let branches: Vec<(Vec<f64>, Vec<f64>)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut search = CycleSearch::new(a);
            search.step(0, j, 1.0, 1.0, 0);
            (search.coef, search.abs_coef)
        })
        .collect();
    let mut coef = vec![0.0; m + 1];
    let mut abs_coef = vec![0.0; m + 1];
    for (c, ac) in branches {
        for k in 0..=m {
            coef[k] += c[k];
            abs_coef[k] += ac[k];
        }
    }
    Ok((coef, abs_coef))
}

fn eval_poly(coef: &[f64], b: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * b + c)
}

/// Depth-first permutation enumeration tracking the cycle count
/// incrementally. Rows are assigned in order; a partial assignment is a set
/// of disjoint paths, and `start_of[end]` / `end_of[start]` locate the other
/// endpoint of each open path.
struct CycleSearch<'a> {
    a: &'a SquareMatrix,
    m: usize,
    used: Vec<bool>,
    start_of: Vec<usize>,
    end_of: Vec<usize>,
    coef: Vec<f64>,
    abs_coef: Vec<f64>,
}

impl<'a> CycleSearch<'a> {
    fn new(a: &'a SquareMatrix) -> Self {
        let m = a.n();
        CycleSearch {
            a,
            m,
            used: vec![false; m],
            start_of: (0..m).collect(),
            end_of: (0..m).collect(),
            coef: vec![0.0; m + 1],
            abs_coef: vec![0.0; m + 1],
        }
    }

    fn run(&mut self, row: usize, prod: f64, abs_prod: f64, cycles: usize) {
        if row == self.m {
            self.coef[cycles] += prod;
            self.abs_coef[cycles] += abs_prod;
            return;
        }
        for col in 0..self.m {
            if !self.used[col] {
                self.step(row, col, prod, abs_prod, cycles);
            }
        }
    }

    fn step(&mut self, row: usize, col: usize, prod: f64, abs_prod: f64, cycles: usize) {
        let entry = self.a.get(row, col);
        if entry == 0.0 {
            return;
        }
        let s = self.start_of[row];
        let e = self.end_of[col];
        self.used[col] = true;
        if col == s {
            self.run(row + 1, prod * entry, abs_prod * entry.abs(), cycles + 1);
        } else {
            let (old_end, old_start) = (self.end_of[s], self.start_of[e]);
            self.end_of[s] = e;
            self.start_of[e] = s;
            self.run(row + 1, prod * entry, abs_prod * entry.abs(), cycles);
            self.end_of[s] = old_end;
            self.start_of[e] = old_start;
        }
        self.used[col] = false;
    }
}

/// `per_b(A)` for any real `b`; `A` at most 12x12.
pub fn per_b(a: &SquareMatrix, b: f64) -> Result<f64> {
    Ok(eval_poly(&cycle_polynomial(a)?, b))
}

/// `(A(k_i, k_j))_{i,j}` for the selection `(k_1, ..., k_m)`.
pub fn repeated_matrix(a: &SquareMatrix, sel: &Selection) -> Result<SquareMatrix> {
    if let Some(&bad) = sel.indices().iter().find(|&&k| k >= a.n()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            n: a.n(),
        });
    }
    Ok(a.submatrix_unchecked(sel.indices()))
}

/// Outcome of a bounded b-positive-definiteness search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Positivity {
    /// No negative `per_b` found up to the searched order.
    Pass,
    Fail {
        witness: Selection,
        value: f64,
    },
}

impl Positivity {
    pub fn passed(&self) -> bool {
        matches!(self, Positivity::Pass)
    }
}

/// Nondecreasing index sequences of every length in `1..=max_order`, shorter
/// ones first, each length in lexicographic order. One representative per
/// multiset suffices because `per_b` is invariant under simultaneous
/// row/column relabeling.
pub fn multisets(n: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for len in 1..=max_order {
        let mut cur = vec![0usize; len];
        loop {
            out.push(cur.clone());
            // advance to the next nondecreasing sequence
            let mut i = len;
            while i > 0 && cur[i - 1] == n - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            let v = cur[i - 1] + 1;
            for x in &mut cur[i - 1..] {
                *x = v;
            }
        }
    }
    out
}

/// Searches all multisets of size up to `max_order` for a repeated matrix
/// with `per_b < -zero_tol * scale`, where `scale` is `per_b` of the
/// entrywise absolute values (the size of the terms that could cancel).
pub fn is_b_positive_definite(
    a: &SquareMatrix,
    b: Exponent,
    max_order: usize,
    tol: &Tolerance,
) -> Result<Positivity> {
    if max_order == 0 || max_order > MAX_SEARCH_ORDER {
        return Err(Error::InvalidParameter(format!(
            "max_order must be in 1..={MAX_SEARCH_ORDER}, got {max_order}"
        )));
    }
    let candidates = multisets(a.n(), max_order);
    let found = candidates.par_iter().find_map_first(|idx| {
        let rep = a.submatrix_unchecked(idx);
        let (coef, abs_coef) = cycle_polynomials(&rep).expect("order is bounded");
        let value = eval_poly(&coef, b.value());
        let scale = eval_poly(&abs_coef, b.value());
        (value < -tol.zero_tol * scale).then(|| (idx.clone(), value))
    });
    Ok(match found {
        None => Positivity::Pass,
        Some((idx, value)) => Positivity::Fail {
            witness: Selection(idx),
            value,
        },
    })
}

/// 16 log-spaced points in `[1e-3, 1e3]`.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..16)
        .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 15.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenvalueCheck {
    pub passed: bool,
    /// Eigenvalues whose imaginary part is negligible, ascending.
    pub real_eigenvalues: Vec<f64>,
    pub complex_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GammaOutcome {
    Pass,
    Fail { witness: Selection, value: f64 },
    Skipped { note: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaCheck {
    pub gamma: f64,
    #[serde(flatten)]
    pub outcome: GammaOutcome,
}

/// Structural reason the condition on resolvents holds for every parameter
/// and every order, not just on the searched grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Some `S G S` is an inverse M-matrix, so every resolvent is entrywise
    /// nonnegative after the same signature.
    DiagEquivInverseM,
    /// Symmetric positive semidefinite kernel with `2b` a positive integer:
    /// a sum of independent squared Gaussian vectors.
    SymmetricPsdHalfInteger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VjVerdict {
    /// Condition (I) holds, no violation on the grid, and a certificate
    /// covers all parameters.
    Pass,
    Fail,
    /// Condition (I) holds and no violation was found, without certificate.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VjReport {
    pub exponent: f64,
    pub max_order: usize,
    pub condition_i: EigenvalueCheck,
    pub condition_ii: Vec<GammaCheck>,
    pub certificate: Option<Certificate>,
    pub verdict: VjVerdict,
}

impl VjReport {
    /// Number of grid points where the resolvent could be formed.
    pub fn evaluated_points(&self) -> usize {
        self.condition_ii
            .iter()
            .filter(|c| !matches!(c.outcome, GammaOutcome::Skipped { .. }))
            .count()
    }

    pub fn first_violation(&self) -> Option<&GammaCheck> {
        self.condition_ii
            .iter()
            .find(|c| matches!(c.outcome, GammaOutcome::Fail { .. }))
    }
}

/// Real eigenvalues must be nonnegative. Complex eigenvalues are ignored.
pub fn eigenvalue_condition(g: &SquareMatrix, tol: &Tolerance) -> EigenvalueCheck {
    let scale = g.scale();
    // Defective real eigenvalues split into pairs of size ~sqrt(eps).
    let imag_cut = tol.rel_tol.sqrt() * scale;
    let mut real = Vec::new();
    let mut complex = 0;
    for (re, im) in g.eigenvalues() {
        if im.abs() <= imag_cut {
            real.push(re);
        } else {
            complex += 1;
        }
    }
    real.sort_by(f64::total_cmp);
    let passed = real.iter().all(|&x| x >= -tol.zero_tol * scale);
    EigenvalueCheck {
        passed,
        real_eigenvalues: real,
        complex_pairs: complex / 2,
    }
}

/// Vere-Jones scan: condition (I) on the eigenvalues of `G`, condition (II)
/// on `K_gamma = (I + gamma G)^{-1} G` for every grid point.
pub fn vere_jones_check(
    g: &SquareMatrix,
    b: Exponent,
    gamma_grid: &[f64],
    max_order: usize,
    tol: &Tolerance,
) -> Result<VjReport> {
    if gamma_grid.is_empty() {
        return Err(Error::InvalidParameter("gamma grid is empty".into()));
    }
    if let Some(bad) = gamma_grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "gamma grid values must be positive, got {bad}"
        )));
    }
    if max_order == 0 || max_order > MAX_SEARCH_ORDER {
        return Err(Error::InvalidParameter(format!(
            "max_order must be in 1..={MAX_SEARCH_ORDER}, got {max_order}"
        )));
    }
    let condition_i = eigenvalue_condition(g, tol);
    let condition_ii = gamma_grid
        .par_iter()
        .map(|&gamma| {
            let outcome = match g.resolvent(gamma, tol) {
                Err(_) => GammaOutcome::Skipped {
                    note: format!("I + {gamma} G is singular (pole of the resolvent)"),
                },
                Ok(k) => match is_b_positive_definite(&k, b, max_order, tol) {
                    Ok(Positivity::Pass) => GammaOutcome::Pass,
                    Ok(Positivity::Fail { witness, value }) => {
                        GammaOutcome::Fail { witness, value }
                    }
                    Err(e) => GammaOutcome::Skipped {
                        note: e.to_string(),
                    },
                },
            };
            GammaCheck { gamma, outcome }
        })
        .collect::<Vec<_>>();

    let certificate = if is_diag_equiv_inverse_m(g, tol).is_some() {
        Some(Certificate::DiagEquivInverseM)
    } else if b.is_half_integer() && g.is_symmetric(tol) && psd_factor(g, tol).is_ok() {
        Some(Certificate::SymmetricPsdHalfInteger)
    } else {
        None
    };

    let violated = condition_ii
        .iter()
        .any(|c| matches!(c.outcome, GammaOutcome::Fail { .. }));
    let verdict = if !condition_i.passed || violated {
        VjVerdict::Fail
    } else if certificate.is_some() {
        VjVerdict::Pass
    } else {
        VjVerdict::Inconclusive
    };
    Ok(VjReport {
        exponent: b.value(),
        max_order,
        condition_i,
        condition_ii,
        certificate,
        verdict,
    })
}
