//! Example kernels: the two 4x4 matrices from Johnson and Smith's inverse
//! M-matrix work and the two parametric 4x4 families used to probe the
//! "at most one symmetrizable 3x3 block" hypothesis.

use serde::Serialize;

use crate::classify::is_inverse_m_matrix;
use crate::error::{Error, Result};
use crate::matcore::{SquareMatrix, Tolerance};

/// Every 3x3 block is inverse-M and nonsymmetrizable, yet `A^{-1}(2,3) > 0`.
pub fn matrix_a() -> SquareMatrix {
    SquareMatrix::from_rows(&[
        [1.00, 0.10, 0.40, 0.30],
        [0.40, 1.00, 0.40, 0.65],
        [0.10, 0.20, 1.00, 0.60],
        [0.15, 0.30, 0.60, 1.00],
    ])
    .expect("fixture is square")
}

/// Symmetric covariance whose triples are all infinitely divisible while
/// `B^{-1}(2,4) > 0`.
pub fn matrix_b() -> SquareMatrix {
    SquareMatrix::from_rows(&[
        [1.00, 0.50, 0.35, 0.40],
        [0.50, 1.00, 0.50, 0.26],
        [0.35, 0.50, 1.00, 0.50],
        [0.40, 0.26, 0.50, 1.00],
    ])
    .expect("fixture is square")
}

/// Nonsymmetrizable inverse-M family with two symmetrizable 3x3 blocks.
///
/// ```text
/// [ d1  a   a   d4 ]
/// [ b   d2  e   d4 ]
/// [ b   e   d3  d4 ]
/// [ d4  d4  d4  d4 ]
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaFamily {
    pub diag: [f64; 4],
    pub a: f64,
    pub b: f64,
    pub e: f64,
}

impl Default for GammaFamily {
    fn default() -> Self {
        GammaFamily {
            diag: [3.0, 3.0, 3.0, 1.0],
            a: 2.2,
            b: 2.0,
            e: 2.5,
        }
    }
}

impl GammaFamily {
    /// `diag[i] > e` for i < 3, `a, b, e > diag[3]`, `e > a, b`, `a != b`.
    pub fn check_constraints(&self) -> Result<()> {
        let [d1, d2, d3, d4] = self.diag;
        let ok = [d1, d2, d3].iter().all(|&d| d > self.e)
            && [self.a, self.b, self.e].iter().all(|&x| x > d4)
            && self.e > self.a
            && self.e > self.b
            && self.a != self.b;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "Gamma family parameters violate the admissibility constraints: {self:?}"
            )))
        }
    }

    pub fn matrix(&self) -> SquareMatrix {
        let [d1, d2, d3, d4] = self.diag;
        let (a, b, e) = (self.a, self.b, self.e);
        SquareMatrix::from_rows(&[
            [d1, a, a, d4],
            [b, d2, e, d4],
            [b, e, d3, d4],
            [d4, d4, d4, d4],
        ])
        .expect("fixture is square")
    }
}

/// Inverse-M family with a unique symmetrizable 3x3 block `{1,2,3}`.
///
/// ```text
/// [ d1  e   a   d4 ]
/// [ b   d2  a   d4 ]
/// [ b   e   d3  d4 ]
/// [ d4  d4  d4  d4 ]
/// ```
///
/// The printed constraints alone do not force the inverse-M property (for
/// instance diag (5,5,5,1), a=2, b=3, e=4 has a positive off-diagonal
/// inverse entry), so the check below also verifies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KFamily {
    pub diag: [f64; 4],
    pub a: f64,
    pub b: f64,
    pub e: f64,
}

impl Default for KFamily {
    fn default() -> Self {
        KFamily {
            diag: [5.0, 5.0, 5.0, 1.0],
            a: 2.0,
            b: 2.5,
            e: 3.0,
        }
    }
}

impl KFamily {
    /// Positive `a, b, e`, pairwise distinct; `diag[i] > diag[3]` and
    /// `diag[i] > max(a, b, e)` for i < 3; `min(a, b, e) > diag[3]`; and the
    /// resulting matrix is inverse-M.
    pub fn check_constraints(&self) -> Result<()> {
        let [d1, d2, d3, d4] = self.diag;
        let (a, b, e) = (self.a, self.b, self.e);
        let sup = a.max(b).max(e);
        let inf = a.min(b).min(e);
        let ok = inf > 0.0
            && a != b
            && b != e
            && a != e
            && [d1, d2, d3].iter().all(|&d| d > d4 && d > sup)
            && inf > d4;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "K family parameters violate the admissibility constraints: {self:?}"
            )));
        }
        if !is_inverse_m_matrix(&self.matrix(), &Tolerance::default()) {
            return Err(Error::InvalidParameter(format!(
                "K family instance is admissible but not an inverse M-matrix: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> SquareMatrix {
        let [d1, d2, d3, d4] = self.diag;
        let (a, b, e) = (self.a, self.b, self.e);
        SquareMatrix::from_rows(&[
            [d1, e, a, d4],
            [b, d2, a, d4],
            [b, e, d3, d4],
            [d4, d4, d4, d4],
        ])
        .expect("fixture is square")
    }
}
