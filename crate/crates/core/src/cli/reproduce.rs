//! The worked examples as a self-checking suite: each group runs a few
//! checks on the shipped fixtures and reports pass/fail per line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{
    classify_kernel, count_symmetrizable_3subsets, is_diag_equiv_inverse_m,
    is_diag_equiv_symmetric, is_inverse_m_matrix, is_symmetrizable_3x3, m_class, ClassifyConfig,
    Theorem1,
};
use crate::error::Result;
use crate::fixtures::{matrix_a, matrix_b, GammaFamily, KFamily};
use crate::matcore::{k_subsets, SquareMatrix, Tolerance};
use crate::mcverify::{
    closed_form_laplace, empirical_laplace, sample_squared_gaussian, verify_conditioning,
};
use crate::permanent::{default_gamma_grid, Exponent};
use crate::reduce::{
    block_double, johnson_smith_inverse_m, schur_complement, JsCondition, SchurBlock,
};
use crate::serde_util::format_set;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproduceOptions {
    pub seed: u64,
    /// Exponent used for the closed form in the Monte Carlo group. The
    /// samples are always squared Gaussians, which match `0.5`.
    pub mc_exponent: f64,
    pub mc_samples: usize,
    pub max_order: usize,
    pub tol: Tolerance,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            seed: 7,
            mc_exponent: 0.5,
            mc_samples: 200_000,
            max_order: 5,
            tol: Tolerance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckLine {
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckGroup {
    pub name: String,
    pub passed: bool,
    pub lines: Vec<CheckLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproduceReport {
    pub passed: bool,
    pub groups: Vec<CheckGroup>,
}

struct GroupBuilder {
    name: &'static str,
    lines: Vec<CheckLine>,
}

impl GroupBuilder {
    fn new(name: &'static str) -> Self {
        GroupBuilder {
            name,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, description: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.lines.push(CheckLine {
            description: description.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Records an error from a computation as a failed line.
    fn attempt<T>(&mut self, description: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(description, false, format!("error: {e}"));
                None
            }
        }
    }

    fn finish(self) -> CheckGroup {
        CheckGroup {
            name: self.name.to_string(),
            passed: !self.lines.is_empty() && self.lines.iter().all(|l| l.passed),
            lines: self.lines,
        }
    }
}

fn blocks3(g: &SquareMatrix) -> Vec<(Vec<usize>, SquareMatrix)> {
    k_subsets(g.n(), 3)
        .into_iter()
        .map(|idx| {
            let sub = g.principal_submatrix(&idx).expect("valid subset");
            (idx, sub)
        })
        .collect()
}

fn sets_text(sets: &[Vec<usize>]) -> String {
    if sets.is_empty() {
        "none".into()
    } else {
        sets.iter()
            .map(|s| format_set(s))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn classify_cfg(opts: &ReproduceOptions) -> ClassifyConfig {
    ClassifyConfig {
        gamma_grid: default_gamma_grid(),
        max_order: opts.max_order,
    }
}

fn group_matrix_a(opts: &ReproduceOptions) -> CheckGroup {
    let tol = &opts.tol;
    let mut grp = GroupBuilder::new("matrix A");
    let a = matrix_a();
    if let Some(inv) = grp.attempt("A is invertible", a.inverse(tol)) {
        let v = inv.get(1, 2);
        grp.check(
            "A^{-1}(2,3) > 0, so A is not inverse-M",
            v > 0.0,
            format!("A^{{-1}}(2,3) = {v:.6}"),
        );
    }
    grp.check(
        "A fails the inverse-M test",
        !is_inverse_m_matrix(&a, tol),
        "",
    );
    let blocks = blocks3(&a);
    let bad: Vec<Vec<usize>> = blocks
        .iter()
        .filter(|(_, b)| !is_inverse_m_matrix(b, tol))
        .map(|(i, _)| i.clone())
        .collect();
    grp.check(
        "all four 3x3 blocks are inverse-M",
        bad.is_empty(),
        format!("failing blocks: {}", sets_text(&bad)),
    );
    let sym: Vec<Vec<usize>> = blocks
        .iter()
        .filter(|(_, b)| is_symmetrizable_3x3(b, tol).unwrap_or(true))
        .map(|(i, _)| i.clone())
        .collect();
    grp.check(
        "no 3x3 block is symmetrizable",
        sym.is_empty(),
        format!("symmetrizable blocks: {}", sets_text(&sym)),
    );
    if let Some(rep) = grp.attempt(
        "classification of A",
        classify_kernel(
            &a,
            Exponent::new(0.5).expect("valid"),
            &classify_cfg(opts),
            tol,
        ),
    ) {
        grp.check(
            "theorem verdict: A is not a permanental kernel",
            rep.theorem1 == Theorem1::HypothesesMetNotKernel,
            format!("theorem1 = {}", rep.theorem1),
        );
    }
    grp.finish()
}

fn group_gamma(opts: &ReproduceOptions) -> CheckGroup {
    let tol = &opts.tol;
    let mut grp = GroupBuilder::new("family Gamma");
    let fam = GammaFamily::default();
    grp.check(
        "default parameters are admissible",
        fam.check_constraints().is_ok(),
        format!("{fam:?}"),
    );
    let g = fam.matrix();
    if let Some(sym) = grp.attempt(
        "symmetrizability of Gamma",
        is_diag_equiv_symmetric(&g, tol),
    ) {
        grp.check("Gamma is not symmetrizable", !sym, "");
    }
    let subsets = count_symmetrizable_3subsets(&g, tol);
    grp.check(
        "exactly two symmetrizable 3-subsets {1,2,3} and {2,3,4}",
        subsets == vec![vec![0, 1, 2], vec![1, 2, 3]],
        format!("found: {}", sets_text(&subsets)),
    );
    let class = m_class(&g, tol);
    grp.check(
        "inverse-M after a signature change",
        class.inverse_m_up_to_signature(),
        format!("M-class = {class}"),
    );
    grp.finish()
}

fn group_k(opts: &ReproduceOptions) -> CheckGroup {
    let tol = &opts.tol;
    let mut grp = GroupBuilder::new("family K");
    let fam = KFamily::default();
    grp.check(
        "default parameters are admissible",
        fam.check_constraints().is_ok(),
        format!("{fam:?}"),
    );
    let k = fam.matrix();
    let subsets = count_symmetrizable_3subsets(&k, tol);
    grp.check(
        "unique symmetrizable 3-subset {1,2,3}",
        subsets == vec![vec![0, 1, 2]],
        format!("found: {}", sets_text(&subsets)),
    );
    grp.check("K is inverse-M", is_inverse_m_matrix(&k, tol), "");
    if let Some(rep) = grp.attempt(
        "classification of K",
        classify_kernel(
            &k,
            Exponent::new(0.5).expect("valid"),
            &classify_cfg(opts),
            tol,
        ),
    ) {
        grp.check(
            "theorem verdict: infinitely divisible",
            rep.theorem1 == Theorem1::HypothesesMetId,
            format!("theorem1 = {}", rep.theorem1),
        );
    }
    grp.finish()
}

fn group_matrix_b(opts: &ReproduceOptions) -> CheckGroup {
    let tol = &opts.tol;
    let mut grp = GroupBuilder::new("matrix B");
    let b = matrix_b();
    if let Some(inv) = grp.attempt("B is invertible", b.inverse(tol)) {
        let v = inv.get(1, 3);
        grp.check(
            "B^{-1}(2,4) > 0",
            v > 0.0,
            format!("B^{{-1}}(2,4) = {v:.6}"),
        );
    }
    let bad: Vec<Vec<usize>> = blocks3(&b)
        .iter()
        .filter(|(_, blk)| is_diag_equiv_inverse_m(blk, tol).is_none())
        .map(|(i, _)| i.clone())
        .collect();
    grp.check(
        "every 3x3 block is diagonally equivalent to an inverse M-matrix",
        bad.is_empty(),
        format!("failing blocks: {}", sets_text(&bad)),
    );
    grp.check(
        "B fails the inverse-M test",
        !is_inverse_m_matrix(&b, tol),
        "",
    );
    grp.finish()
}

/// `det(lambda I - m)`.
fn char_poly_at(m: &SquareMatrix, lambda: f64) -> f64 {
    SquareMatrix::from_fn(m.n(), |i, j| {
        let d = if i == j { lambda } else { 0.0 };
        d - m.get(i, j)
    })
    .determinant()
}

fn group_block_double(opts: &ReproduceOptions) -> CheckGroup {
    let tol = &opts.tol;
    let mut grp = GroupBuilder::new("H(alpha) block doubling");
    let g = KFamily::default().matrix();
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let lambdas: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..12.0)).collect();
    let g_inv = match grp.attempt("K is invertible", g.inverse(tol)) {
        Some(v) => v,
        None => return grp.finish(),
    };
    for alpha in [0.25, 0.5, 0.75] {
        let h = match grp.attempt("H(alpha) construction", block_double(&g, alpha)) {
            Some(h) => h,
            None => continue,
        };
        let worst = lambdas
            .iter()
            .map(|&l| {
                let lhs = char_poly_at(&h, l);
                let rhs = char_poly_at(&g.scaled(1.0 + alpha), l)
                    * char_poly_at(&g.scaled(1.0 - alpha), l);
                (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
            })
            .fold(0.0_f64, f64::max);
        grp.check(
            format!("alpha = {alpha}: spectrum splits as (1+alpha)K and (1-alpha)K"),
            worst <= 1e-8,
            format!("max relative gap over 20 points = {worst:.2e}"),
        );
        if let Some(v) = grp.attempt("Johnson-Smith test", johnson_smith_inverse_m(&h, n, tol)) {
            let ok = !v.verdict
                && matches!(
                    v.failed_condition,
                    Some(JsCondition::Iii) | Some(JsCondition::Iv)
                );
            grp.check(
                format!(
                    "alpha = {alpha}: H(alpha) is not inverse-M, failing condition (iii) or (iv)"
                ),
                ok,
                format!(
                    "verdict = {}, failed condition = {}",
                    v.verdict,
                    v.failed_condition
                        .map(|c| serde_json::to_string(&c)
                            .unwrap_or_default()
                            .replace('"', ""))
                        .unwrap_or_else(|| "none".into())
                ),
            );
        }
        if let Some(s) = grp.attempt(
            "Schur complement",
            schur_complement(&h, SchurBlock::LowerRight, n, tol),
        ) {
            let gap = s.max_abs_diff(&g.scaled(1.0 - alpha * alpha));
            grp.check(
                format!("alpha = {alpha}: H/H22 = (1 - alpha^2) K"),
                gap <= 1e-10,
                format!("max gap = {gap:.2e}"),
            );
        }
        if let Some(h_inv) = grp.attempt("H(alpha) inverse", h.inverse(tol)) {
            let expected = g_inv.scaled(-alpha / (1.0 - alpha * alpha));
            let off = SquareMatrix::from_fn(n, |i, j| h_inv.get(i, n + j));
            let gap = off.max_abs_diff(&expected) / expected.max_norm().max(1.0);
            grp.check(
                format!("alpha = {alpha}: off-diagonal block of H^{{-1}} = -alpha/(1 - alpha^2) K^{{-1}}"),
                gap <= 1e-8,
                format!("relative gap = {gap:.2e}"),
            );
        }
    }
    grp.finish()
}

fn group_monte_carlo(opts: &ReproduceOptions) -> CheckGroup {
    let tol = &opts.tol;
    let mut grp = GroupBuilder::new("Gaussian Monte Carlo");
    let g = SquareMatrix::from_rows(&[[2.0, 0.6, 0.3], [0.6, 1.5, 0.4], [0.3, 0.4, 1.0]])
        .expect("fixture is square");
    let b = match grp.attempt("Monte Carlo exponent", Exponent::new(opts.mc_exponent)) {
        Some(b) => b,
        None => return grp.finish(),
    };
    let batch = match grp.attempt(
        "squared-Gaussian sampling",
        sample_squared_gaussian(&g, opts.mc_samples, opts.seed, tol),
    ) {
        Some(v) => v,
        None => return grp.finish(),
    };
    let alpha_points = [
        [0.25, 0.25, 0.25],
        [0.5, 1.0, 0.0],
        [1.0, 0.5, 2.0],
        [2.0, 2.0, 2.0],
    ];
    let mut agree = 0;
    let mut details = Vec::new();
    for alphas in &alpha_points {
        let est = empirical_laplace(&batch, alphas);
        let exact = closed_form_laplace(&g, alphas, b);
        if let (Ok(est), Ok(exact)) = (est, exact) {
            if est.agrees_with(exact, 3.0) {
                agree += 1;
            }
            details.push(format!(
                "{:.5}+-{:.5} vs {:.5}",
                est.point_estimate, est.std_error, exact
            ));
        }
    }
    grp.check(
        format!(
            "empirical Laplace transform matches det(I + alpha G)^(-{})",
            b.value()
        ),
        agree >= 3,
        format!("{agree}/4 within 3 SE: {}", details.join("; ")),
    );
    if let Some(c) = grp.attempt(
        "conditioning identity",
        verify_conditioning(
            &g,
            1.0,
            &[0.5, 0.5],
            opts.mc_samples,
            opts.seed.wrapping_add(1 << 32),
            tol,
        ),
    ) {
        grp.check(
            "tilted Laplace transform matches the conditioning kernel at sigma = 1",
            c.agrees(3.0),
            format!(
                "{:.5}+-{:.5} vs {:.5}",
                c.lhs.point_estimate, c.lhs.std_error, c.rhs
            ),
        );
    }
    grp.finish()
}

/// Runs the six example groups in order.
pub fn reproduce_paper(opts: &ReproduceOptions) -> ReproduceReport {
    let groups = vec![
        group_matrix_a(opts),
        group_gamma(opts),
        group_k(opts),
        group_matrix_b(opts),
        group_block_double(opts),
        group_monte_carlo(opts),
    ];
    ReproduceReport {
        passed: groups.iter().all(|g| g.passed),
        groups,
    }
}
