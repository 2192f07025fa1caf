//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use permkernel::classify::{
    classify_kernel, count_symmetrizable_3subsets, is_diag_equiv_inverse_m,
    is_diag_equiv_symmetric, is_inverse_m_matrix, is_symmetrizable_3x3, ClassifyConfig, Theorem1,
};
use permkernel::fixtures::{matrix_a, matrix_b, GammaFamily, KFamily};
use permkernel::matcore::{effectively_equivalent, k_subsets};
use permkernel::mcverify::{
    closed_form_laplace, empirical_laplace, sample_squared_gaussian, verify_conditioning,
};
use permkernel::permanent::{is_b_positive_definite, per_b, Positivity};
use permkernel::reduce::{
    block_double, conditioning_kernel, johnson_smith_inverse_m, ratio_matrix, schur_complement,
    sigma_for_coefficient, symmetrizability_breakpoints, JsCondition, SchurBlock,
};
use permkernel::{DiagonalScaling, Exponent, Signature, SquareMatrix, Tolerance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        summary: summary.into(),
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn half() -> Exponent {
    Exponent::new(0.5).unwrap()
}

fn quick_cfg() -> ClassifyConfig {
    ClassifyConfig {
        gamma_grid: vec![1.0],
        max_order: 2,
    }
}

/// `A^{-1}(i,j)` by the adjugate: `(-1)^{i+j} M_{ji} / det A`.
fn cofactor_inverse_entry(a: &SquareMatrix, i: usize, j: usize) -> f64 {
    let rows: Vec<usize> = (0..a.n()).filter(|&r| r != j).collect();
    let cols: Vec<usize> = (0..a.n()).filter(|&c| c != i).collect();
    let minor = SquareMatrix::from_fn(a.n() - 1, |r, c| a.get(rows[r], cols[c]));
    let sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * leibniz_det(&minor) / leibniz_det(a)
}

fn criterion_1() -> Outcome {
    let a = matrix_a();
    let entry = cofactor_inverse_entry(&a, 1, 2);
    let lib_entry = a.inverse(&tol()).unwrap().get(1, 2);
    let blocks: Vec<SquareMatrix> = k_subsets(4, 3).iter().map(|s| sub(&a, s)).collect();
    let all_inv_m = blocks.iter().all(|b| is_inverse_m_matrix(b, &tol()));
    let none_sym = blocks
        .iter()
        .all(|b| !is_symmetrizable_3x3(b, &tol()).unwrap());
    let report = classify_kernel(&a, half(), &ClassifyConfig::default(), &tol()).unwrap();
    let passed = entry > 0.0
        && (entry - lib_entry).abs() <= 1e-9
        && !is_inverse_m_matrix(&a, &tol())
        && all_inv_m
        && none_sym
        && report.theorem1 == Theorem1::HypothesesMetNotKernel;
    outcome(
        passed,
        format!(
            "A^-1(2,3) = {entry:.6} (library {lib_entry:.6}); blocks inverse-M: {all_inv_m}; \
             none symmetrizable: {none_sym}; theorem1 = {}",
            report.theorem1
        ),
    )
}

fn criterion_2() -> Outcome {
    let b = matrix_b();
    let entry = cofactor_inverse_entry(&b, 1, 3);
    let mut blocks_ok = 0;
    for s in k_subsets(4, 3) {
        let blk = sub(&b, &s);
        if let Some(sig) = is_diag_equiv_inverse_m(&blk, &tol()) {
            let conj = SquareMatrix::from_fn(3, |i, j| sig.sign(i) * blk.get(i, j) * sig.sign(j));
            // oracle: the conjugate's inverse has nonpositive off-diagonal entries
            let inv = gauss_jordan_inverse(&conj);
            let oracle = (0..3).all(|i| (0..3).all(|j| i == j || inv.get(i, j) <= 1e-12));
            if oracle && is_inverse_m_matrix(&conj, &tol()) {
                blocks_ok += 1;
            }
        }
    }
    let b_inv_m = is_inverse_m_matrix(&b, &tol());
    outcome(
        entry > 0.0 && blocks_ok == 4 && !b_inv_m,
        format!("B^-1(2,4) = {entry:.6}; diag-equiv inverse-M blocks: {blocks_ok}/4; B inverse-M: {b_inv_m}"),
    )
}

fn criterion_3() -> Outcome {
    let gamma = GammaFamily::default();
    let k = KFamily::default();
    let g = gamma.matrix();
    let km = k.matrix();
    let g_sym = is_diag_equiv_symmetric(&g, &tol()).unwrap();
    let g_sets = count_symmetrizable_3subsets(&g, &tol());
    let k_sets = count_symmetrizable_3subsets(&km, &tol());
    let k_inv_m = is_inverse_m_matrix(&km, &tol());
    let k_report = classify_kernel(&km, half(), &ClassifyConfig::default(), &tol()).unwrap();
    let passed = gamma.check_constraints().is_ok()
        && k.check_constraints().is_ok()
        && !g_sym
        && g_sets == vec![vec![0, 1, 2], vec![1, 2, 3]]
        && k_sets == vec![vec![0, 1, 2]]
        && k_inv_m
        && k_report.theorem1 == Theorem1::HypothesesMetId;
    outcome(
        passed,
        format!(
            "Gamma symmetrizable: {g_sym}, sym3 = {:?}; K sym3 = {:?}, inverse-M: {k_inv_m}, theorem1 = {}",
            one_based(&g_sets),
            one_based(&k_sets),
            k_report.theorem1
        ),
    )
}

fn one_based(sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    sets.iter()
        .map(|s| s.iter().map(|i| i + 1).collect())
        .collect()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let m = rng.random_range(1..=6);
        let a = uniform(&mut rng, m, -1.0, 1.0);
        let perm = per_b(&a, 1.0).unwrap();
        let det = per_b(&a, -1.0).unwrap();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let e1 = (perm - brute_permanent(&a)).abs() / abs_per_b(&a, 1.0);
        let e2 = (det - sign * leibniz_det(&a)).abs() / abs_per_b(&a, 1.0);
        worst = worst.max(e1).max(e2);
    }
    let mut exact = true;
    for n in 1..=8 {
        for b in [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, -1.0] {
            exact &= per_b(&SquareMatrix::identity(n), b).unwrap() == f64::powi(b, n as i32);
        }
    }
    outcome(
        worst <= 1e-10 && exact,
        format!("worst relative error over 200 matrices = {worst:.2e}; identity gives b^n exactly: {exact}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = log_grid(1e-3, 1e3, 8);
    let psd: Vec<SquareMatrix> = (0..50).map(|_| random_psd(&mut rng, 3)).collect();
    let inv_m: Vec<SquareMatrix> = (0..50).map(|_| random_inverse_m(&mut rng, 4)).collect();
    let mut parts = Vec::new();
    let mut total = 0;
    for (label, family) in [("PSD 3x3", &psd), ("inverse-M 4x4", &inv_m)] {
        for b in [0.25, 0.5, 1.0] {
            let exp = Exponent::new(b).unwrap();
            let mut bad_kernels = 0;
            let mut frustrated = 0;
            for g in family.iter() {
                let failed = grid.iter().any(|&gamma| {
                    let k = g.resolvent(gamma, &tol()).unwrap();
                    matches!(
                        is_b_positive_definite(&k, exp, 5, &tol()).unwrap(),
                        Positivity::Fail { .. }
                    )
                });
                bad_kernels += failed as usize;
                // kernels diagonally equivalent to an inverse M-matrix are
                // infinitely divisible, so positivity must hold for every b
                frustrated += (failed && is_diag_equiv_inverse_m(g, &tol()).is_none()) as usize;
            }
            total += bad_kernels;
            let mut line = format!("{label} b={b}: {bad_kernels}/50 with violations");
            if bad_kernels > 0 {
                line.push_str(&format!(
                    " ({frustrated} of them not diagonally equivalent to an inverse M-matrix)"
                ));
            }
            parts.push(line);
        }
    }
    outcome(total == 0, parts.join("; "))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eq_tol = Tolerance::new(1e-9, 1e-8).unwrap();
    let mut transpose_ok = 0;
    let mut similar_ok = 0;
    for _ in 0..100 {
        let g = uniform(&mut rng, 4, -1.0, 1.0);
        let d = DiagonalScaling::new((0..4).map(|_| rng.random_range(0.2..5.0)).collect()).unwrap();
        let dgd = g.diagonal_conjugate(&d).unwrap();
        let gt = g.transpose();
        if effectively_equivalent(&g, &gt, &eq_tol).unwrap() && minors_agree(&g, &gt, 1e-8) {
            transpose_ok += 1;
        }
        if effectively_equivalent(&g, &dgd, &eq_tol).unwrap() && minors_agree(&g, &dgd, 1e-8) {
            similar_ok += 1;
        }
    }
    let mut semigroup_worst: f64 = 0.0;
    for _ in 0..50 {
        let g = SquareMatrix::from_fn(4, |i, j| {
            rng.random_range(0.0..1.0) + if i == j { 4.0 } else { 0.0 }
        });
        let s = rng.random_range(0.0..2.0);
        let a = rng.random_range(0.0..2.0);
        let lhs = g
            .resolvent(s, &tol())
            .unwrap()
            .resolvent(a, &tol())
            .unwrap();
        let rhs = g.resolvent(s + a, &tol()).unwrap();
        semigroup_worst = semigroup_worst.max(lhs.max_abs_diff(&rhs));
    }
    let mut step1_ok = 0;
    for _ in 0..50 {
        let g = uniform(&mut rng, 4, 0.1, 1.0);
        let ok = [0.1, 1.0, 10.0].iter().all(|&sigma| {
            let top = sub(&g.resolvent(sigma, &tol()).unwrap(), &[0, 1, 2]);
            let r = conditioning_kernel(&g, sigma, 3)
                .unwrap()
                .resolvent(sigma, &tol())
                .unwrap();
            effectively_equivalent(&top, &r, &eq_tol).unwrap() && minors_agree(&top, &r, 1e-8)
        });
        step1_ok += ok as usize;
    }
    outcome(
        transpose_ok == 100 && similar_ok == 100 && semigroup_worst <= 1e-8 && step1_ok == 50,
        format!(
            "(G, G^T): {transpose_ok}/100; (G, DGD^-1): {similar_ok}/100; semigroup max gap {semigroup_worst:.2e}; \
             conditioning/resolvent equivalence: {step1_ok}/50"
        ),
    )
}

fn criterion_7() -> Outcome {
    let g = KFamily::default().matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let char_poly = |m: &SquareMatrix, l: f64| {
        leibniz_det(&SquareMatrix::from_fn(m.n(), |i, j| {
            (if i == j { l } else { 0.0 }) - m.get(i, j)
        }))
    };
    let mut factor_worst: f64 = 0.0;
    let mut js_ok = 0;
    let mut schur_worst: f64 = 0.0;
    for alpha in [0.25, 0.5, 0.75] {
        let h = block_double(&g, alpha).unwrap();
        for _ in 0..20 {
            let l = rng.random_range(-2.0..12.0);
            let lhs = char_poly(&h, l);
            let rhs = char_poly(&g.scaled(1.0 + alpha), l) * char_poly(&g.scaled(1.0 - alpha), l);
            factor_worst = factor_worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
        let v = johnson_smith_inverse_m(&h, 4, &tol()).unwrap();
        if !v.verdict && matches!(v.failed_condition, Some(JsCondition::Iii | JsCondition::Iv)) {
            js_ok += 1;
        }
        let s = schur_complement(&h, SchurBlock::LowerRight, 4, &tol()).unwrap();
        schur_worst = schur_worst.max(s.max_abs_diff(&g.scaled(1.0 - alpha * alpha)));
    }
    let mut agree = 0;
    let mut inverse_m_cases = 0;
    for i in 0..100 {
        let m = if i % 2 == 0 {
            random_inverse_m(&mut rng, 4)
        } else {
            uniform(&mut rng, 4, 0.05, 1.0)
        };
        let direct = is_inverse_m_matrix(&m, &tol());
        inverse_m_cases += direct as usize;
        if johnson_smith_inverse_m(&m, 2, &tol()).unwrap().verdict == direct {
            agree += 1;
        }
    }
    outcome(
        factor_worst <= 1e-8 && js_ok == 3 && schur_worst <= 1e-10 && agree == 100,
        format!(
            "factorization gap {factor_worst:.2e}; Johnson-Smith fails at (iii)/(iv): {js_ok}/3; \
             H/H22 gap {schur_worst:.2e}; agreement with direct test {agree}/100 ({inverse_m_cases} inverse-M)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut within = 0;
    let mut cond_ok = 0;
    for k in 0..5u64 {
        let g = random_psd(&mut rng, 3);
        let batch = sample_squared_gaussian(&g, 200_000, 1000 + 100 * k, &tol()).unwrap();
        for _ in 0..4 {
            let alphas: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..2.0)).collect();
            let est = empirical_laplace(&batch, &alphas).unwrap();
            let exact = closed_form_laplace(&g, &alphas, half()).unwrap();
            within += est.agrees_with(exact, 3.0) as usize;
        }
        let alphas: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..2.0)).collect();
        let c = verify_conditioning(&g, 1.0, &alphas, 200_000, 5000 + k, &tol()).unwrap();
        cond_ok += c.agrees(3.0) as usize;
    }
    outcome(
        within >= 19 && cond_ok == 5,
        format!("{within}/20 Laplace points within 3 SE; conditioning identity within 3 SE for {cond_ok}/5 kernels"),
    )
}

fn random_kernel(rng: &mut ChaCha8Rng, i: usize) -> SquareMatrix {
    match i % 5 {
        0 => uniform(rng, 4, 0.1, 1.0),
        1 => random_inverse_m(rng, 4),
        2 => {
            let k = KFamily {
                a: rng.random_range(1.5..1.9),
                b: rng.random_range(2.0..2.4),
                e: rng.random_range(2.6..3.0),
                ..KFamily::default()
            };
            k.matrix()
        }
        3 => GammaFamily {
            a: rng.random_range(2.1..2.4),
            ..GammaFamily::default()
        }
        .matrix(),
        _ => random_psd(rng, 4),
    }
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let verdicts = |g: &SquareMatrix| {
        let r = classify_kernel(g, half(), &quick_cfg(), &tol()).unwrap();
        (
            r.sym3_subsets.len(),
            r.m_class.inverse_m_up_to_signature(),
            r.theorem1,
        )
    };
    let mut invariant = 0;
    for i in 0..50 {
        let g = random_kernel(&mut rng, i);
        let s = Signature::new(
            (0..4)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect(),
        )
        .unwrap();
        let d = DiagonalScaling::new((0..4).map(|_| rng.random_range(0.2..5.0)).collect()).unwrap();
        let base = verdicts(&g);
        let sgs = verdicts(&g.signature_conjugate(&s).unwrap());
        let dgd = verdicts(&g.diagonal_conjugate(&d).unwrap());
        invariant += (base == sgs && base == dgd) as usize;
    }
    outcome(
        invariant == 50,
        format!("verdicts invariant for {invariant}/50 (G, S, D) triples"),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let sigmas = log_grid(0.01, 100.0, 10);
    let mut max_roots = 0;
    let mut residual_worst: f64 = 0.0;
    let mut kernels_ok = 0;
    let mut checked = 0;
    let mut made = 0;
    while made < 20 {
        let g = uniform(&mut rng, 4, 0.1, 1.0);
        if is_diag_equiv_symmetric(&g, &tol()).unwrap() {
            continue;
        }
        made += 1;
        let pivot = 3;
        let gamma = ratio_matrix(&g, pivot, &tol()).unwrap();
        let bp =
            symmetrizability_breakpoints(&gamma, [0, 1, 2], g.get(pivot, pivot), &tol()).unwrap();
        max_roots = max_roots.max(bp.values.len());
        let x = |i: usize, j: usize, c: f64| gamma.get(i, j) - c;
        for &c in &bp.values {
            let f = x(0, 1, c) * x(1, 2, c) * x(2, 0, c) - x(1, 0, c) * x(0, 2, c) * x(2, 1, c);
            let scale = (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| x(i, j, c).abs())
                .fold(0.0, f64::max)
                .powi(3);
            residual_worst = residual_worst.max(f.abs() / scale);
        }
        let bp_sigmas: Vec<f64> = bp
            .values
            .iter()
            .map(|&c| sigma_for_coefficient(c, g.get(pivot, pivot)))
            .collect();
        let mut ok = !bp.degenerate;
        for &sigma in &sigmas {
            if bp_sigmas.iter().any(|s| (s - sigma).abs() <= 1e-3 * s) {
                continue;
            }
            checked += 1;
            let h = conditioning_kernel(&g, sigma, pivot).unwrap();
            ok &= !is_symmetrizable_3x3(&h, &tol()).unwrap();
        }
        kernels_ok += ok as usize;
    }
    outcome(
        max_roots <= 3 && residual_worst <= 1e-8 && kernels_ok == 20,
        format!(
            "max breakpoints per triple {max_roots}; breakpoint residual {residual_worst:.2e}; \
             {kernels_ok}/20 kernels nonsymmetrizable at all {checked} checked sigma values"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "matrix A", criterion_1),
        (2, "matrix B", criterion_2),
        (3, "families Gamma and K", criterion_3),
        (4, "b-permanent identities", criterion_4),
        (5, "Vere-Jones positivity sanity", criterion_5),
        (6, "effective equivalence", criterion_6),
        (7, "H(alpha) block doubling", criterion_7),
        (8, "Monte Carlo Laplace transform", criterion_8),
        (9, "signature and scaling invariance", criterion_9),
        (10, "breakpoint scan", criterion_10),
    ];
    let mut failures = 0;
    for (n, name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failures += (!result.passed) as usize;
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.1}s]",
            if result.passed { "PASS" } else { "FAIL" },
            result.summary,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
