//! Property tests for the matrix, classification and reduction invariants.

mod common;

use common::{leibniz_det, minors_agree, sub};
use permkernel::classify::{
    count_symmetrizable_3subsets, find_positivity_signature, is_diag_equiv_inverse_m,
    is_diag_equiv_symmetric, is_inverse_m_matrix, is_symmetrizable_3x3, m_class,
    willoughby_inequality,
};
use permkernel::fixtures::KFamily;
use permkernel::matcore::{effectively_equivalent, k_subsets};
use permkernel::permanent::{is_b_positive_definite, Positivity};
use permkernel::reduce::{block_double, conditioning_kernel, schur_complement, SchurBlock};
use permkernel::{DiagonalScaling, Exponent, Signature, SquareMatrix, Tolerance};
use proptest::prelude::*;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn matrix(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = SquareMatrix> {
    prop::collection::vec(lo..hi, n * n).prop_map(move |v| SquareMatrix::new(n, v).expect("square"))
}

fn signature(n: usize) -> impl Strategy<Value = Signature> {
    prop::collection::vec(prop::bool::ANY, n).prop_map(|v| {
        Signature::new(v.into_iter().map(|b| if b { 1 } else { -1 }).collect()).unwrap()
    })
}

fn scaling(n: usize) -> impl Strategy<Value = DiagonalScaling> {
    prop::collection::vec(0.2f64..5.0, n).prop_map(|v| DiagonalScaling::new(v).unwrap())
}

/// Strictly diagonally dominant with positive diagonal: every eigenvalue
/// has positive real part, so all resolvents exist.
fn well_posed(n: usize) -> impl Strategy<Value = SquareMatrix> {
    matrix(n, 0.0, 1.0).prop_map(move |m| {
        SquareMatrix::from_fn(n, |i, j| m.get(i, j) + if i == j { n as f64 } else { 0.0 })
    })
}

/// Inverse of a random M-matrix: entrywise positive and inverse-M.
fn inverse_m(n: usize) -> impl Strategy<Value = SquareMatrix> {
    (matrix(n, 0.05, 1.0), 1.05f64..2.0).prop_map(move |(p, f)| {
        let s = (0..n)
            .map(|i| (0..n).map(|j| p.get(i, j)).sum::<f64>())
            .fold(0.0, f64::max)
            * f;
        let m = SquareMatrix::from_fn(n, |i, j| (if i == j { s } else { 0.0 }) - p.get(i, j));
        common::gauss_jordan_inverse(&m)
    })
}

/// A mix of kernels that exercise every verdict.
fn kernel4() -> impl Strategy<Value = SquareMatrix> {
    prop_oneof![
        matrix(4, 0.1, 1.0),
        matrix(4, -1.0, 1.0),
        inverse_m(4),
        (1.5f64..1.9, 2.0f64..2.4, 2.6f64..3.0).prop_map(|(a, b, e)| KFamily {
            a,
            b,
            e,
            ..KFamily::default()
        }
        .matrix()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn determinant_is_signature_invariant(a in matrix(5, -1.0, 1.0), s in signature(5)) {
        let c = a.signature_conjugate(&s).unwrap();
        prop_assert!((c.determinant() - a.determinant()).abs() <= 1e-12);
        prop_assert!((a.determinant() - leibniz_det(&a)).abs() <= 1e-12);
    }

    #[test]
    fn resolvent_semigroup(g in well_posed(5), s in 0.0f64..2.0, a in 0.0f64..2.0) {
        let lhs = g.resolvent(s, &tol()).unwrap().resolvent(a, &tol()).unwrap();
        let rhs = g.resolvent(s + a, &tol()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-8);
    }

    #[test]
    fn effective_equivalence_is_an_equivalence(
        g in matrix(4, -1.0, 1.0),
        d1 in scaling(4),
        d2 in scaling(4),
    ) {
        let t = Tolerance::new(1e-9, 1e-8).unwrap();
        let h = g.diagonal_conjugate(&d1).unwrap().transpose();
        let k = h.diagonal_conjugate(&d2).unwrap();
        prop_assert!(effectively_equivalent(&g, &g, &t).unwrap());
        prop_assert_eq!(
            effectively_equivalent(&g, &h, &t).unwrap(),
            effectively_equivalent(&h, &g, &t).unwrap()
        );
        prop_assert!(effectively_equivalent(&g, &h, &t).unwrap());
        prop_assert!(effectively_equivalent(&h, &k, &t).unwrap());
        prop_assert!(effectively_equivalent(&g, &k, &t).unwrap());
    }

    #[test]
    fn diagonal_conjugate_preserves_minors(n in 1usize..=5, seed in matrix(5, -1.0, 1.0), d in scaling(5)) {
        let g = SquareMatrix::from_fn(n, |i, j| seed.get(i, j));
        let d = DiagonalScaling::new(d.values()[..n].to_vec()).unwrap();
        let c = g.diagonal_conjugate(&d).unwrap();
        prop_assert!(minors_agree(&g, &c, 1e-10));
    }

    #[test]
    fn principal_submatrix_commutes_with_signature(
        g in matrix(5, -1.0, 1.0),
        s in signature(5),
        mask in 1u32..32,
    ) {
        let idx: Vec<usize> = (0..5).filter(|i| mask >> i & 1 == 1).collect();
        let restricted = Signature::new(idx.iter().map(|&i| s.signs()[i]).collect()).unwrap();
        let lhs = g.signature_conjugate(&s).unwrap().principal_submatrix(&idx).unwrap();
        let rhs = g.principal_submatrix(&idx).unwrap().signature_conjugate(&restricted).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn verdicts_invariant_under_signature_scaling_and_transpose(
        g in kernel4(),
        s in signature(4),
        d in scaling(4),
    ) {
        let verdicts = |m: &SquareMatrix| {
            let blocks: Vec<bool> = k_subsets(4, 3)
                .iter()
                .map(|idx| is_symmetrizable_3x3(&sub(m, idx), &tol()).unwrap())
                .collect();
            (
                m_class(m, &tol()).inverse_m_up_to_signature(),
                blocks,
                count_symmetrizable_3subsets(m, &tol()),
            )
        };
        let base = verdicts(&g);
        prop_assert_eq!(&base, &verdicts(&g.signature_conjugate(&s).unwrap()));
        prop_assert_eq!(&base, &verdicts(&g.diagonal_conjugate(&d).unwrap()));
        prop_assert_eq!(&base, &verdicts(&g.transpose()));
    }

    #[test]
    fn diag_equiv_symmetric_implies_symmetrizable_blocks(
        sym in matrix(4, 0.1, 1.0),
        d in scaling(4),
        s in signature(4),
    ) {
        let sym = SquareMatrix::from_fn(4, |i, j| sym.get(i.min(j), i.max(j)));
        let g = sym.diagonal_conjugate(&d).unwrap().signature_conjugate(&s).unwrap();
        prop_assert!(is_diag_equiv_symmetric(&g, &tol()).unwrap());
        for idx in k_subsets(4, 3) {
            prop_assert!(is_symmetrizable_3x3(&sub(&g, &idx), &tol()).unwrap());
        }
    }

    #[test]
    fn inverse_m_implies_willoughby(g in prop_oneof![inverse_m(3), matrix(3, 0.05, 1.0)]) {
        if is_inverse_m_matrix(&g, &tol()) {
            prop_assert!(willoughby_inequality(&g, &tol()).unwrap());
        }
    }

    #[test]
    fn conditioning_preserves_cross_products(g in matrix(4, 0.1, 1.0), sigma in 0.05f64..20.0) {
        let gs = g.resolvent(sigma, &tol());
        let r = conditioning_kernel(&g, sigma, 3).and_then(|h| h.resolvent(sigma, &tol()));
        if let (Ok(gs), Ok(r)) = (gs, r) {
            for i in 0..3 {
                for j in 0..3 {
                    let lhs = gs.get(i, j) * gs.get(j, i);
                    let rhs = r.get(i, j) * r.get(j, i);
                    prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
                }
            }
        }
    }

    #[test]
    fn resolvent_signs_persist_for_inverse_m_kernels(g in inverse_m(4), s in signature(4)) {
        // positivity of S G_sigma S along a dense grid
        let g = g.signature_conjugate(&s).unwrap();
        let sig = is_diag_equiv_inverse_m(&g, &tol()).unwrap();
        prop_assert!(sig.eq_up_to_global_sign(&s));
        for k in 0..=40 {
            let sigma = 10f64.powf(-3.0 + 6.0 * k as f64 / 40.0);
            let r = g.resolvent(sigma, &tol()).unwrap();
            let found = find_positivity_signature(&r, &tol()).unwrap();
            prop_assert!(found.eq_up_to_global_sign(&s));
        }
    }

    #[test]
    fn block_double_spectrum_splits(lambda in -3.0f64..15.0) {
        let g = KFamily::default().matrix();
        let poly = |m: &SquareMatrix| {
            SquareMatrix::from_fn(m.n(), |i, j| (if i == j { lambda } else { 0.0 }) - m.get(i, j))
                .determinant()
        };
        for k in 0..=10 {
            let alpha = k as f64 / 10.0;
            let h = block_double(&g, alpha).unwrap();
            let lhs = poly(&h);
            let rhs = poly(&g.scaled(1.0 + alpha)) * poly(&g.scaled(1.0 - alpha));
            prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1.0));
        }
    }

    #[test]
    fn schur_determinant_identity(g in well_posed(5), split in 1usize..5) {
        let s = schur_complement(&g, SchurBlock::LowerRight, split, &tol()).unwrap();
        let lower: Vec<usize> = (split..5).collect();
        let h22 = g.principal_submatrix(&lower).unwrap();
        let lhs = g.determinant();
        let rhs = h22.determinant() * s.determinant();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(1.0));
    }

    #[test]
    fn inverse_m_kernels_pass_positivity(g in inverse_m(3), gamma in 0.001f64..100.0, b in 0.05f64..2.0) {
        let k = g.resolvent(gamma, &tol()).unwrap();
        let r = is_b_positive_definite(&k, Exponent::new(b).unwrap(), 4, &tol()).unwrap();
        prop_assert_eq!(r, Positivity::Pass);
    }
}

/// Three-way split for entrywise-positive 3x3 kernels: a kernel that
/// passes the positivity scan should be inverse-M or symmetrizable. The
/// scan is only a necessary condition, so escapes are counted and printed
/// rather than asserted.
#[test]
fn trichotomy_escapes_are_recorded() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let grid = common::log_grid(1e-3, 1e3, 8);
    let b = Exponent::new(0.5).unwrap();
    let (mut passed, mut escapes) = (0, 0);
    for _ in 0..60 {
        let g = SquareMatrix::from_fn(3, |i, j| {
            rng.random_range(0.05..1.0) + if i == j { 1.0 } else { 0.0 }
        });
        let scan_ok = grid.iter().all(|&gamma| {
            let k = g.resolvent(gamma, &tol()).unwrap();
            is_b_positive_definite(&k, b, 5, &tol()).unwrap().passed()
        });
        if scan_ok {
            passed += 1;
            if !(is_inverse_m_matrix(&g, &tol()) || is_diag_equiv_symmetric(&g, &tol()).unwrap()) {
                escapes += 1;
            }
        }
    }
    println!("positivity scan passed for {passed}/60 kernels; {escapes} escapes from the three-way split");
    assert!(escapes <= passed);
}
