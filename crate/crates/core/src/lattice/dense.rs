//! Dense exact helpers: fraction-free determinants, the minor-gcd oracle,
//! Smith normal form with unimodular transforms (for small matrices where the
//! coordinate change itself is needed), and completion of a saturated
//! sublattice basis to a basis of the ambient `ℤ^n`.

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::IntMatrix;

/// Determinant by Bareiss fraction-free elimination. Exact; all intermediate
/// divisions are known to be exact.
pub fn bareiss_det(a: &[Vec<BigInt>]) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    assert!(a.iter().all(|r| r.len() == n), "determinant of non-square matrix");
    let mut m: Vec<Vec<BigInt>> = a.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                m[i][j] = q;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    sign * m[n - 1][n - 1].clone()
}

/// Gcd of all `k×k` minors of `m` (zero when every minor vanishes).
///
/// Exponential in the dimensions; intended as an oracle for small matrices.
pub fn minors_gcd(m: &IntMatrix, k: usize) -> BigInt {
    let mut g = BigInt::zero();
    if k == 0 {
        return BigInt::one();
    }
    if k > m.rows() || k > m.cols() {
        return BigInt::zero();
    }
    for rsel in (0..m.rows()).combinations(k) {
        for csel in (0..m.cols()).combinations(k) {
            let sub: Vec<Vec<BigInt>> =
                rsel.iter().map(|&r| csel.iter().map(|&c| m.get(r, c)).collect()).collect();
            g = g.gcd(&bareiss_det(&sub));
            if g.is_one() {
                return g;
            }
        }
    }
    g
}

/// Smith normal form with transforms: returns `(u, d, v)` with `u·m·v = d`,
/// `u` and `v` unimodular, `d` diagonal with a divisibility chain and
/// nonnegative entries. Dense; meant for small matrices (group moduli,
/// rank-3 kernels) where the coordinate change matters.
pub fn snf_with_transforms(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let rows = m.rows();
    let cols = m.cols();
    let mut a: Vec<Vec<BigInt>> =
        (0..rows).map(|r| (0..cols).map(|c| m.get(r, c)).collect()).collect();
    let mut u: Vec<Vec<BigInt>> = identity_dense(rows);
    let mut v: Vec<Vec<BigInt>> = identity_dense(cols);

    let limit = rows.min(cols);
    'restart: loop {
        for k in 0..limit {
            // pivot: least absolute value in the trailing block
            let mut best: Option<(BigInt, usize, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(k) {
                for (j, val) in row.iter().enumerate().skip(k) {
                    if val.is_zero() {
                        continue;
                    }
                    let av = val.abs();
                    if best.as_ref().is_none_or(|(b, _, _)| av < *b) {
                        best = Some((av, i, j));
                    }
                }
            }
            let Some((_, pi, pj)) = best else { break };
            a.swap(k, pi);
            u.swap(k, pi);
            if pj != k {
                for row in a.iter_mut() {
                    row.swap(k, pj);
                }
                for row in v.iter_mut() {
                    row.swap(k, pj);
                }
            }
            loop {
                let mut clean = true;
                for i in k + 1..rows {
                    if a[i][k].is_zero() {
                        continue;
                    }
                    let (q, rem) = a[i][k].clone().div_rem(&a[k][k]);
                    for j in 0..cols {
                        let d = &q * &a[k][j];
                        a[i][j] -= d;
                    }
                    for j in 0..rows {
                        let d = &q * &u[k][j];
                        u[i][j] -= d;
                    }
                    if !rem.is_zero() {
                        a.swap(k, i);
                        u.swap(k, i);
                        clean = false;
                    }
                }
                for j in k + 1..cols {
                    if a[k][j].is_zero() {
                        continue;
                    }
                    let (q, rem) = a[k][j].clone().div_rem(&a[k][k]);
                    for arow in a.iter_mut() {
                        let d = &q * &arow[k];
                        arow[j] -= d;
                    }
                    for vrow in v.iter_mut() {
                        let d = &q * &vrow[k];
                        vrow[j] -= d;
                    }
                    if !rem.is_zero() {
                        for row in a.iter_mut() {
                            row.swap(k, j);
                        }
                        for row in v.iter_mut() {
                            row.swap(k, j);
                        }
                        clean = false;
                    }
                }
                let row_clear = (k + 1..cols).all(|j| a[k][j].is_zero());
                let col_clear = (k + 1..rows).all(|i| a[i][k].is_zero());
                if clean && row_clear && col_clear {
                    break;
                }
            }
        }
        // enforce the divisibility chain; any fix re-runs elimination
        for k in 0..limit {
            if a[k][k].is_zero() {
                continue;
            }
            for j in k + 1..limit {
                if a[j][j].is_zero() {
                    continue;
                }
                if !(&a[j][j] % &a[k][k]).is_zero() {
                    // fold column j into column k and start over
                    for arow in a.iter_mut() {
                        let add = arow[j].clone();
                        arow[k] += add;
                    }
                    for vrow in v.iter_mut() {
                        let add = vrow[j].clone();
                        vrow[k] += add;
                    }
                    continue 'restart;
                }
            }
        }
        break;
    }
    // positive diagonal
    for k in 0..limit {
        if a[k][k].is_negative() {
            for j in 0..cols {
                a[k][j] = -a[k][j].clone();
            }
            for j in 0..rows {
                u[k][j] = -u[k][j].clone();
            }
        }
    }
    (from_dense(&u), from_dense(&a), from_dense(&v))
}

fn identity_dense(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

fn from_dense(a: &[Vec<BigInt>]) -> IntMatrix {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut m = IntMatrix::zero(rows, cols);
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_zero() {
                m.set(i, j, v.clone());
            }
        }
    }
    m
}

/// Completes a saturated full-column-rank sublattice basis `n` (an `r×k`
/// matrix of columns) to a basis of `ℤ^r`: returns `w` with `[n | w]`
/// unimodular. Panics if the input is not saturated or not of full column
/// rank — completion is then impossible.
pub fn complement_basis(n: &IntMatrix) -> IntMatrix {
    let rows = n.rows();
    let k = n.cols();
    let mut a: Vec<Vec<BigInt>> =
        (0..rows).map(|r| (0..k).map(|c| n.get(r, c)).collect()).collect();
    // t_inv tracks the inverse of the accumulated row transform, by columns
    let mut t_inv = identity_dense(rows);
    for j in 0..k {
        loop {
            let mut best: Option<(BigInt, usize)> = None;
            for (i, row) in a.iter().enumerate().skip(j) {
                if row[j].is_zero() {
                    continue;
                }
                let av = row[j].abs();
                if best.as_ref().is_none_or(|(b, _)| av < *b) {
                    best = Some((av, i));
                }
            }
            let Some((_, pi)) = best else {
                panic!("complement_basis: input does not have full column rank");
            };
            if pi != j {
                a.swap(j, pi);
                // row swap on T mirrors as column swap on T^{-1}
                for row in t_inv.iter_mut() {
                    row.swap(j, pi);
                }
            }
            let mut clean = true;
            for i in j + 1..rows {
                if a[i][j].is_zero() {
                    continue;
                }
                let (q, rem) = a[i][j].clone().div_rem(&a[j][j]);
                for col in 0..k {
                    let d = &q * &a[j][col];
                    a[i][col] -= d;
                }
                // row_i -= q*row_j on T mirrors as col_j += q*col_i on T^{-1}
                for row in t_inv.iter_mut() {
                    let d = &q * &row[i];
                    row[j] += d;
                }
                if !rem.is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
    }
    // saturation <=> the triangular block is unimodular
    let det: BigInt = (0..k).map(|j| a[j][j].clone()).product();
    assert!(det.abs().is_one(), "complement_basis: lattice is not saturated (index {det})");
    let mut w = IntMatrix::zero(rows, rows - k);
    for (i, row) in t_inv.iter().enumerate() {
        for j in k..rows {
            if !row[j].is_zero() {
                w.set(i, j - k, row[j].clone());
            }
        }
    }
    w
}

/// Applies random elementary row/column operations (test helper for the
/// unimodular-invariance property of the Smith form).
pub fn random_unimodular_transform<R: Rng>(m: &IntMatrix, rng: &mut R) -> IntMatrix {
    let rows = m.rows();
    let cols = m.cols();
    let mut a: Vec<Vec<BigInt>> =
        (0..rows).map(|r| (0..cols).map(|c| m.get(r, c)).collect()).collect();
    let steps = rng.gen_range(4..20);
    for _ in 0..steps {
        match rng.gen_range(0..6) {
            0 if rows >= 2 => {
                let i = rng.gen_range(0..rows);
                let mut j = rng.gen_range(0..rows);
                if i == j {
                    j = (j + 1) % rows;
                }
                let q = BigInt::from(rng.gen_range(-3i64..=3));
                for c in 0..cols {
                    let d = &q * &a[j][c];
                    a[i][c] += d;
                }
            }
            1 if cols >= 2 => {
                let i = rng.gen_range(0..cols);
                let mut j = rng.gen_range(0..cols);
                if i == j {
                    j = (j + 1) % cols;
                }
                let q = BigInt::from(rng.gen_range(-3i64..=3));
                for row in a.iter_mut() {
                    let d = &q * &row[j];
                    row[i] += d;
                }
            }
            2 if rows >= 2 => {
                let i = rng.gen_range(0..rows);
                let j = rng.gen_range(0..rows);
                a.swap(i, j);
            }
            3 if cols >= 2 => {
                let i = rng.gen_range(0..cols);
                let j = rng.gen_range(0..cols);
                for row in a.iter_mut() {
                    row.swap(i, j);
                }
            }
            4 if rows >= 1 => {
                let i = rng.gen_range(0..rows);
                for c in 0..cols {
                    a[i][c] = -a[i][c].clone();
                }
            }
            _ if cols >= 1 => {
                let j = rng.gen_range(0..cols);
                for row in a.iter_mut() {
                    row[j] = -row[j].clone();
                }
            }
            _ => {}
        }
    }
    from_dense(&a)
}
