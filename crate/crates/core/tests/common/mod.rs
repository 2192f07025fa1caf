//! Brute-force oracles and random generators shared by the integration
//! tests. Nothing here calls into the library's linear algebra.

#![allow(dead_code)]

use permkernel::SquareMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// All permutations of `0..n` with their sign and cycle count.
pub fn permutations(n: usize) -> Vec<(Vec<usize>, f64, usize)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let n = used.len();
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut perms = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut perms);
    perms
        .into_iter()
        .map(|p| {
            let mut seen = vec![false; n];
            let mut cycles = 0;
            for s in 0..n {
                if !seen[s] {
                    cycles += 1;
                    let mut j = s;
                    while !seen[j] {
                        seen[j] = true;
                        j = p[j];
                    }
                }
            }
            let sign = if (n - cycles).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            (p, sign, cycles)
        })
        .collect()
}

fn term(a: &SquareMatrix, p: &[usize]) -> f64 {
    p.iter().enumerate().map(|(i, &j)| a.get(i, j)).product()
}

/// Leibniz expansion.
pub fn leibniz_det(a: &SquareMatrix) -> f64 {
    permutations(a.n())
        .iter()
        .map(|(p, s, _)| s * term(a, p))
        .sum()
}

pub fn brute_permanent(a: &SquareMatrix) -> f64 {
    permutations(a.n()).iter().map(|(p, _, _)| term(a, p)).sum()
}

/// Sum of `b^cycles * |term|`, the cancellation-free scale of `per_b`.
pub fn abs_per_b(a: &SquareMatrix, b: f64) -> f64 {
    permutations(a.n())
        .iter()
        .map(|(p, _, c)| b.abs().powi(*c as i32) * term(a, p).abs())
        .sum()
}

pub fn sub(a: &SquareMatrix, idx: &[usize]) -> SquareMatrix {
    SquareMatrix::from_fn(idx.len(), |i, j| a.get(idx[i], idx[j]))
}

/// Every principal minor by Leibniz expansion, indexed by bitmask.
pub fn all_principal_minors(a: &SquareMatrix) -> Vec<f64> {
    let n = a.n();
    (1usize..1 << n)
        .map(|mask| {
            let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            leibniz_det(&sub(a, &idx))
        })
        .collect()
}

pub fn minors_agree(a: &SquareMatrix, b: &SquareMatrix, rel: f64) -> bool {
    let scale = a.max_norm().max(b.max_norm()).max(1e-300);
    let ma = all_principal_minors(a);
    let mb = all_principal_minors(b);
    (1usize..1 << a.n())
        .zip(ma.iter().zip(&mb))
        .all(|(mask, (x, y))| {
            let k = mask.count_ones() as i32;
            (x - y).abs() <= rel * x.abs().max(y.abs()).max(scale.powi(k))
        })
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SquareMatrix {
    SquareMatrix::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// `B B^T` with Gaussian `B`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
    let b: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(rng)).collect();
    SquareMatrix::from_fn(n, |i, j| (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum())
}

/// `s I - P` with `P` entrywise positive and `s` above the largest row sum
/// of `P`, so the result is a nonsingular M-matrix with positive inverse.
pub fn random_m_matrix(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
    let p = uniform(rng, n, 0.05, 1.0);
    let row_max = (0..n)
        .map(|i| (0..n).map(|j| p.get(i, j)).sum::<f64>())
        .fold(0.0, f64::max);
    let s = row_max * rng.random_range(1.05..2.0);
    SquareMatrix::from_fn(n, |i, j| (if i == j { s } else { 0.0 }) - p.get(i, j))
}

/// Gauss-Jordan inverse, independent of the library's LU.
pub fn gauss_jordan_inverse(a: &SquareMatrix) -> SquareMatrix {
    let n = a.n();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a.get(i, j)).collect();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
            .unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                let pivot_row = m[c].clone();
                for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    SquareMatrix::from_fn(n, |i, j| m[i][n + j])
}

pub fn random_inverse_m(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
    gauss_jordan_inverse(&random_m_matrix(rng, n))
}

pub fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (k - 1) as f64).exp())
        .collect()
}
