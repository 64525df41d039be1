//! The `3m²` lines on the degree-`m` Fermat surface, their exact intersection
//! Gram matrix, and rank/discriminant extraction for the lattice they span.
//!
//! Lines come in three families, one per coordinate pairing `(01)(23)`,
//! `(02)(13)`, `(03)(12)`. A line in family `(0i)(jk)` is cut out by
//! `z_i = ε z_0`, `z_k = ε' z_j` with `ε^m = ε'^m = −1`; the label `k` stands
//! for the root `exp(iπ(2k+1)/m)`.
//!
//! Distinct lines meet in at most one point, transversally, so off-diagonal
//! intersection numbers are 0 or 1 and reduce to congruences on the labels:
//!
//! - same family: meet iff exactly one of the two labels agrees;
//! - families 0,1: `k − k' ≡ l − l' (mod m)`;
//! - families 0,2: `k + k' + l' + 1 ≡ l (mod m)`;
//! - families 1,2: `k + k' ≡ l + l' (mod m)`.
//!
//! The rule table is derived by eliminating coordinates; [`oracle`] rechecks
//! every entry symbolically in the cyclotomic field, with no floating point
//! in the verdict. Self-intersections are `2 − m` by adjunction
//! (`L·(L+K) = −2` with `K = (m−4)H`, `L·H = 1`), and the plane section `H`
//! has `H·H = m`, `H·L = 1`.

use num_bigint::BigInt;

use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{bareiss_det, complement_basis, kernel, snf, IntMatrix};
use crate::{Error, Result};

/// One of the `3m²` lines, labelled by family and two root-of-(−1) indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Line {
    pub family: u8,
    pub eps: u32,
    pub eps_prime: u32,
}

/// All lines for degree `m ≥ 3`, in (family, eps, eps') order.
pub fn enumerate_lines(m: u64) -> Result<Vec<Line>> {
    if m <= 2 {
        return Err(Error::DegreeTooSmall(m));
    }
    let mut out = Vec::with_capacity((3 * m * m) as usize);
    for family in 0..3u8 {
        for eps in 0..m as u32 {
            for eps_prime in 0..m as u32 {
                out.push(Line { family, eps, eps_prime });
            }
        }
    }
    Ok(out)
}

/// Intersection number of two lines; `2 − m` on the diagonal.
pub fn intersection(l1: &Line, l2: &Line, m: u64) -> Result<i64> {
    if m <= 2 {
        return Err(Error::DegreeTooSmall(m));
    }
    let valid = |l: &Line| l.family < 3 && (l.eps as u64) < m && (l.eps_prime as u64) < m;
    if !valid(l1) || !valid(l2) {
        return Err(Error::PreconditionViolated("line labels out of range".into()));
    }
    if l1 == l2 {
        return Ok(2 - m as i64);
    }
    Ok(incidence_rule(l1, l2, m) as i64)
}

fn incidence_rule(l1: &Line, l2: &Line, m: u64) -> bool {
    let (a, b) = if l1.family <= l2.family { (l1, l2) } else { (l2, l1) };
    let m = m as i64;
    let (k, kp) = (a.eps as i64, a.eps_prime as i64);
    let (l, lp) = (b.eps as i64, b.eps_prime as i64);
    let congruent = |x: i64, y: i64| (x - y).rem_euclid(m) == 0;
    match (a.family, b.family) {
        (f, g) if f == g => (k == l) != (kp == lp),
        (0, 1) => congruent(k - kp, l - lp),
        (0, 2) => congruent(k + kp + lp + 1, l),
        (1, 2) => congruent(k + kp, l + lp),
        _ => unreachable!("families are ordered"),
    }
}

/// The exact Gram matrix of the line classes, optionally with the plane
/// section appended as the last index.
#[derive(Clone, Debug)]
pub struct LineLattice {
    pub m: u64,
    pub lines: Vec<Line>,
    pub include_hyperplane: bool,
    pub gram: IntMatrix,
}

pub fn gram_matrix(m: u64, include_hyperplane: bool) -> Result<LineLattice> {
    let lines = enumerate_lines(m)?;
    let n = lines.len() + usize::from(include_hyperplane);
    let diag = 2 - m as i64;
    let rows: Vec<Vec<(usize, i64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..n {
                let v = if i >= lines.len() || j >= lines.len() {
                    // plane section pairings
                    if i == j {
                        m as i64
                    } else {
                        1
                    }
                } else if i == j {
                    diag
                } else if incidence_rule(&lines[i], &lines[j], m) {
                    1
                } else {
                    0
                };
                if v != 0 {
                    row.push((j, v));
                }
            }
            row
        })
        .collect();
    let mut gram = IntMatrix::zero(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            gram.set(i, j, BigInt::from(v));
        }
    }
    Ok(LineLattice { m, lines, include_hyperplane, gram })
}

impl LineLattice {
    /// CSV export of the line labels: `family,eps,eps_prime`.
    pub fn lines_csv(&self) -> String {
        let mut s = String::from("family,eps,eps_prime\n");
        for l in &self.lines {
            s.push_str(&format!("{},{},{}\n", l.family, l.eps, l.eps_prime));
        }
        s
    }
}

/// Rank of the lattice spanned by the lines and the plane section.
///
/// The intersection form is nondegenerate on the span (it contains the ample
/// class), so the integer rank of the Gram matrix is the rank of the lattice.
pub fn rank_s(m: u64) -> Result<usize> {
    let lat = gram_matrix(m, true)?;
    Ok(snf(&lat.gram).len())
}

/// Corank: the rank of the kernel of (classes of the `3m²` lines and the
/// plane section) → (second homology of the surface).
pub fn rank_k(m: u64) -> Result<usize> {
    let lat = gram_matrix(m, true)?;
    Ok(lat.gram.rows() - snf(&lat.gram).len())
}

/// Discriminant of the spanned lattice: the Gram determinant on a basis.
///
/// The integer kernel of the Gram matrix is exactly the relation lattice
/// among the classes (and is saturated); completing it to a basis of the
/// ambient `ℤ^n` and restricting the form to the complementary block gives a
/// Gram matrix of the lattice itself.
pub fn discriminant_s(m: u64) -> Result<BigInt> {
    let lat = gram_matrix(m, true)?;
    let n = lat.gram.rows();
    let ker = kernel(&lat.gram);
    let w = if ker.cols() == 0 { IntMatrix::identity(n) } else { complement_basis(&ker) };
    let restricted = w.transpose().mul(&lat.gram).mul(&w);
    let dense: Vec<Vec<BigInt>> = (0..restricted.rows())
        .map(|i| (0..restricted.cols()).map(|j| restricted.get(i, j)).collect())
        .collect();
    Ok(bareiss_det(&dense))
}

/// Independent incidence checks: exact linear algebra over the cyclotomic
/// field, plus a floating-point cross-check of the same 4×4 system. The rule
/// table in [`intersection`] is validated against these in the test suite.
pub mod oracle {
    use super::Line;
    use num_bigint::BigInt;
    use num_traits::Zero;

    /// Coefficients of the `n`-th cyclotomic polynomial.
    pub fn cyclotomic(n: u64) -> Vec<BigInt> {
        // x^n - 1 divided by the cyclotomic polynomials of the proper divisors
        let mut num = vec![BigInt::zero(); n as usize + 1];
        num[0] = BigInt::from(-1);
        num[n as usize] = BigInt::from(1);
        for d in 1..n {
            if n % d == 0 {
                num = poly_div_exact(&num, &cyclotomic(d));
            }
        }
        num
    }

    fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
        let mut rem: Vec<BigInt> = num.to_vec();
        let dd = den.len() - 1;
        assert!(!den[dd].is_zero());
        let mut quot = vec![BigInt::zero(); rem.len().saturating_sub(dd)];
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let c = &rem[i] / &den[dd];
            quot[i - dd] = c.clone();
            for (j, dc) in den.iter().enumerate() {
                let sub = &c * dc;
                rem[i - dd + j] -= sub;
            }
        }
        assert!(rem.iter().all(|c| c.is_zero()), "non-exact polynomial division");
        while quot.len() > 1 && quot.last().unwrap().is_zero() {
            quot.pop();
        }
        quot
    }

    fn poly_mul_mod(a: &[BigInt], b: &[BigInt], modulus: &[BigInt]) -> Vec<BigInt> {
        let mut out = vec![BigInt::zero(); a.len() + b.len()];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                out[i + j] += ai * bj;
            }
        }
        poly_rem(&out, modulus)
    }

    fn poly_rem(p: &[BigInt], modulus: &[BigInt]) -> Vec<BigInt> {
        let mut rem = p.to_vec();
        let dd = modulus.len() - 1;
        // cyclotomic polynomials are monic, so the division is integral
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let c = rem[i].clone();
            for (j, mc) in modulus.iter().enumerate() {
                let sub = &c * mc;
                rem[i - dd + j] -= sub;
            }
        }
        rem.truncate(dd.max(1));
        rem
    }

    /// The four linear forms (rows over `ℤ[x]/Φ_{2m}`) cutting out a line.
    /// Entries are constants or `−x^{2k+1}`.
    fn line_rows(l: &Line, modulus: &[BigInt]) -> [[Vec<BigInt>; 4]; 2] {
        let root = |k: u32| -> Vec<BigInt> {
            let mut p = vec![BigInt::zero(); (2 * k + 2) as usize];
            *p.last_mut().unwrap() = BigInt::from(-1);
            poly_rem(&p, modulus)
        };
        let zero = || vec![BigInt::zero()];
        let one = || vec![BigInt::from(1)];
        let e = root(l.eps);
        let ep = root(l.eps_prime);
        match l.family {
            // z1 = eps z0, z3 = eps' z2
            0 => [[e, one(), zero(), zero()], [zero(), zero(), ep, one()]],
            // z2 = eps z0, z3 = eps' z1
            1 => [[e, zero(), one(), zero()], [zero(), ep, zero(), one()]],
            // z3 = eps z0, z2 = eps' z1
            2 => [[e, zero(), zero(), one()], [zero(), ep, one(), zero()]],
            _ => panic!("invalid family"),
        }
    }

    /// Exact verdict: the stacked 4×4 system is rank-deficient over the
    /// cyclotomic field iff its determinant vanishes in `ℤ[x]/Φ_{2m}`.
    pub fn lines_meet_symbolic(l1: &Line, l2: &Line, m: u64) -> bool {
        let modulus = cyclotomic(2 * m);
        let r1 = line_rows(l1, &modulus);
        let r2 = line_rows(l2, &modulus);
        let rows = [&r1[0], &r1[1], &r2[0], &r2[1]];
        // Laplace expansion over the 24 permutations of 4 indices
        let mut det = vec![BigInt::zero()];
        let perms: [([usize; 4], i64); 24] = permutations4();
        for (perm, sign) in perms {
            let mut term = vec![BigInt::from(sign)];
            for (i, &j) in perm.iter().enumerate() {
                term = poly_mul_mod(&term, &rows[i][j], &modulus);
            }
            det = poly_add(&det, &term);
        }
        det.iter().all(|c| c.is_zero())
    }

    fn poly_add(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
        let n = a.len().max(b.len());
        let mut out = vec![BigInt::zero(); n];
        for (i, v) in a.iter().enumerate() {
            out[i] += v;
        }
        for (i, v) in b.iter().enumerate() {
            out[i] += v;
        }
        out
    }

    fn permutations4() -> [([usize; 4], i64); 24] {
        let mut out = [([0usize; 4], 0i64); 24];
        let mut idx = 0;
        let mut perm = [0usize, 1, 2, 3];
        heap_permute(&mut perm, 4, &mut out, &mut idx);
        out
    }

    fn heap_permute(perm: &mut [usize; 4], k: usize, out: &mut [([usize; 4], i64); 24], idx: &mut usize) {
        if k == 1 {
            out[*idx] = (*perm, permutation_sign(perm));
            *idx += 1;
            return;
        }
        for i in 0..k {
            heap_permute(perm, k - 1, out, idx);
            if k % 2 == 0 {
                perm.swap(i, k - 1);
            } else {
                perm.swap(0, k - 1);
            }
        }
    }

    fn permutation_sign(perm: &[usize; 4]) -> i64 {
        let mut sign = 1i64;
        for i in 0..4 {
            for j in i + 1..4 {
                if perm[i] > perm[j] {
                    sign = -sign;
                }
            }
        }
        sign
    }

    /// Floating-point cross-check of the same determinant.
    pub fn lines_meet_numeric(l1: &Line, l2: &Line, m: u64) -> bool {
        let root = |k: u32| {
            let theta = std::f64::consts::PI * (2.0 * k as f64 + 1.0) / m as f64;
            (theta.cos(), theta.sin())
        };
        let cmul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
        let rows_of = |l: &Line| -> [[(f64, f64); 4]; 2] {
            let z = (0.0, 0.0);
            let o = (1.0, 0.0);
            let e = {
                let r = root(l.eps);
                (-r.0, -r.1)
            };
            let ep = {
                let r = root(l.eps_prime);
                (-r.0, -r.1)
            };
            match l.family {
                0 => [[e, o, z, z], [z, z, ep, o]],
                1 => [[e, z, o, z], [z, ep, z, o]],
                2 => [[e, z, z, o], [z, ep, o, z]],
                _ => panic!("invalid family"),
            }
        };
        let r1 = rows_of(l1);
        let r2 = rows_of(l2);
        let rows = [r1[0], r1[1], r2[0], r2[1]];
        let mut det = (0.0, 0.0);
        for (perm, sign) in permutations4() {
            let mut term = (sign as f64, 0.0);
            for (i, &j) in perm.iter().enumerate() {
                term = cmul(term, rows[i][j]);
            }
            det = (det.0 + term.0, det.1 + term.1);
        }
        (det.0 * det.0 + det.1 * det.1).sqrt() < 1e-8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Signed};

    #[test]
    fn line_counts() {
        assert_eq!(enumerate_lines(3).unwrap().len(), 27);
        assert_eq!(enumerate_lines(4).unwrap().len(), 48);
        assert_eq!(enumerate_lines(5).unwrap().len(), 75);
        assert!(matches!(enumerate_lines(2), Err(Error::DegreeTooSmall(2))));
    }

    #[test]
    fn self_intersection_by_adjunction() {
        let l = Line { family: 0, eps: 0, eps_prime: 0 };
        assert_eq!(intersection(&l, &l, 3).unwrap(), -1);
        assert_eq!(intersection(&l, &l, 5).unwrap(), -3);
    }

    #[test]
    fn same_family_rule() {
        let m = 5;
        let base = Line { family: 1, eps: 2, eps_prime: 3 };
        let same_eps = Line { family: 1, eps: 2, eps_prime: 4 };
        let same_prime = Line { family: 1, eps: 0, eps_prime: 3 };
        let both_diff = Line { family: 1, eps: 0, eps_prime: 4 };
        assert_eq!(intersection(&base, &same_eps, m).unwrap(), 1);
        assert_eq!(intersection(&base, &same_prime, m).unwrap(), 1);
        assert_eq!(intersection(&base, &both_diff, m).unwrap(), 0);
    }

    #[test]
    fn rule_agrees_with_symbolic_oracle() {
        for m in 3..=7u64 {
            let lines = enumerate_lines(m).unwrap();
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    let rule = incidence_rule(&lines[i], &lines[j], m);
                    let sym = oracle::lines_meet_symbolic(&lines[i], &lines[j], m);
                    assert_eq!(
                        rule, sym,
                        "rule/oracle mismatch at m={m}, {:?} vs {:?}",
                        lines[i], lines[j]
                    );
                }
            }
        }
    }

    #[test]
    fn numeric_oracle_agrees_with_symbolic() {
        for m in [3u64, 5, 6] {
            let lines = enumerate_lines(m).unwrap();
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    assert_eq!(
                        oracle::lines_meet_symbolic(&lines[i], &lines[j], m),
                        oracle::lines_meet_numeric(&lines[i], &lines[j], m),
                    );
                }
            }
        }
    }

    #[test]
    fn incidence_count_per_line() {
        // every line meets 4m - 2 others: 2(m-1) in its family, m in each other
        for m in [3u64, 4, 5] {
            let lines = enumerate_lines(m).unwrap();
            for l in &lines {
                let count: i64 = lines
                    .iter()
                    .filter(|o| *o != l)
                    .map(|o| intersection(l, o, m).unwrap())
                    .sum();
                assert_eq!(count, 4 * m as i64 - 2, "m = {m}, line {l:?}");
            }
        }
    }

    #[test]
    fn gram_symmetry_and_entry_range() {
        for m in [3u64, 4] {
            let lat = gram_matrix(m, true).unwrap();
            let g = &lat.gram;
            assert_eq!(g.rows(), (3 * m * m + 1) as usize);
            for (r, c, v) in g.iter() {
                assert_eq!(*v, g.get(c, r), "gram not symmetric");
                if r == c {
                    continue;
                }
                if r < lat.lines.len() && c < lat.lines.len() {
                    assert!(v.is_one(), "off-diagonal line entries are 0 or 1");
                }
            }
        }
    }

    #[test]
    fn gram_invariant_under_deck_and_coordinate_symmetries() {
        let m = 4i64;
        let lat = gram_matrix(m as u64, true).unwrap();
        let idx = |f: i64, k: i64, kp: i64| -> usize {
            let k = k.rem_euclid(m);
            let kp = kp.rem_euclid(m);
            (f * m * m + k * m + kp) as usize
        };
        // deck translation by (a,b,c)
        let deck = |a: i64, b: i64, c: i64, l: &Line| -> usize {
            let (k, kp) = (l.eps as i64, l.eps_prime as i64);
            match l.family {
                0 => idx(0, k + a, kp + c - b),
                1 => idx(1, k + b, kp + c - a),
                2 => idx(2, k + c, kp + b - a),
                _ => unreachable!(),
            }
        };
        // coordinate swap z0 <-> z1
        let swap01 = |l: &Line| -> usize {
            let (k, kp) = (l.eps as i64, l.eps_prime as i64);
            match l.family {
                0 => idx(0, m - 1 - k, kp),
                1 => idx(2, kp, k),
                2 => idx(1, kp, k),
                _ => unreachable!(),
            }
        };
        let h = lat.lines.len();
        for perm in [
            lat.lines.iter().map(|l| deck(1, 2, 3, l)).collect::<Vec<_>>(),
            lat.lines.iter().map(swap01).collect::<Vec<_>>(),
        ] {
            for i in 0..lat.lines.len() {
                for j in 0..lat.lines.len() {
                    assert_eq!(lat.gram.get(i, j), lat.gram.get(perm[i], perm[j]));
                }
                assert_eq!(lat.gram.get(i, h), lat.gram.get(perm[i], h));
            }
        }
    }

    #[test]
    fn plane_section_is_a_row_sum_of_lines() {
        // for each eps the m lines (0, eps, *) sum to the plane section in
        // the lattice: the difference lies in the kernel of the Gram matrix
        let m = 4u64;
        let lat = gram_matrix(m, true).unwrap();
        let n = lat.gram.rows();
        let mut v = IntMatrix::zero(n, 1);
        for kp in 0..m as usize {
            v.set(m as usize + kp, 0, BigInt::one()); // family 0, eps = 1
        }
        v.set(n - 1, 0, BigInt::from(-1));
        assert_eq!(lat.gram.mul(&v), IntMatrix::zero(n, 1));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_s(3).unwrap(), 7);
        assert_eq!(rank_s(4).unwrap(), 20);
        assert_eq!(rank_s(5).unwrap(), 37);
        assert_eq!(rank_k(3).unwrap(), 21);
        assert_eq!(rank_k(4).unwrap(), 29);
        assert_eq!(rank_k(5).unwrap(), 39);
    }

    #[test]
    fn cubic_surface_lattice_is_unimodular() {
        let d = discriminant_s(3).unwrap();
        assert!(d.abs().is_one(), "disc = {d}");
    }

    #[test]
    fn discriminant_magnitude_matches_invariant_factors() {
        // |disc| equals the product of the nonzero invariant factors of the
        // Gram matrix: the column lattice has that index in its saturation
        for m in [3u64, 4] {
            let lat = gram_matrix(m, true).unwrap();
            let product: BigInt = snf(&lat.gram).factors.iter().product();
            assert_eq!(discriminant_s(m).unwrap().abs(), product, "m = {m}");
        }
    }

    #[test]
    fn csv_export_shape() {
        let lat = gram_matrix(3, false).unwrap();
        let csv = lat.lines_csv();
        assert_eq!(csv.lines().count(), 28);
        assert!(csv.starts_with("family,eps,eps_prime\n0,0,0\n"));
    }
}

#[cfg(test)]
mod probes {
    use super::*;
    use std::time::Instant;

    #[test]
    #[ignore]
    fn probe_gram_snf_timing() {
        for m in [3u64, 4, 5, 6, 7, 8, 9, 10] {
            let lat = gram_matrix(m, true).unwrap();
            let t0 = Instant::now();
            let k = kernel(&lat.gram);
            let t_ker = t0.elapsed();
            let t0 = Instant::now();
            let f = crate::lattice::snf_unverified(&lat.gram);
            let t_snf = t0.elapsed();
            println!(
                "m={m}: n={} kernel {:?} (dim {}), snf {:?} (rank {})",
                lat.gram.rows(),
                t_ker,
                k.cols(),
                t_snf,
                f.len()
            );
        }
    }
}
