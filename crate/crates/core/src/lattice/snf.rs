//! Smith normal form by sparse fraction-free elimination.
//!
//! Pivoting prefers ±1 entries (they cause no coefficient growth) and breaks
//! ties by Markowitz fill count; once the active submatrix passes a density
//! threshold it is finished densely. The matrix is first diagonalized without
//! enforcing divisibility; the diagonal multiset is then normalized into the
//! invariant-factor chain by repeated gcd/lcm exchanges, which leaves the
//! equivalence class unchanged.
//!
//! Every public `snf` result is certified: the rank must agree with the
//! modular rank at two random primes in `[2^50, 2^62)` not dividing any
//! invariant factor, and a determinant-of-minor spot check must pass.
//! A discrepancy is an arithmetic bug and panics.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dense::{bareiss_det, minors_gcd};
use super::modular::{modular_rank, random_prime};
use super::{IntMatrix, InvariantFactors};

/// Density above which the remaining active block is eliminated densely.
const DENSE_DENSITY: f64 = 0.20;
/// Largest active block (rows*cols) eligible for the dense fallback.
const DENSE_CELL_CAP: usize = 1 << 21;

/// Quotient and remainder with `|r| <= |p|/2`.
fn div_rem_nearest(a: &BigInt, p: &BigInt) -> (BigInt, BigInt) {
    let (mut q, mut r) = a.div_rem(p);
    let twice = &r + &r;
    if twice.abs() > p.abs() {
        if (r.is_positive()) == (p.is_positive()) {
            q += 1;
            r -= p;
        } else {
            q -= 1;
            r += p;
        }
    }
    (q, r)
}

struct Elim {
    rows: Vec<BTreeMap<usize, BigInt>>,
    col_rows: Vec<BTreeSet<usize>>,
    row_alive: Vec<bool>,
    col_alive: Vec<bool>,
    units: BTreeSet<(usize, usize)>,
    nnz: usize,
    active_rows: usize,
    active_cols: usize,
}

impl Elim {
    fn new(m: &IntMatrix) -> Self {
        let mut e = Elim {
            rows: vec![BTreeMap::new(); m.rows()],
            col_rows: vec![BTreeSet::new(); m.cols()],
            row_alive: vec![true; m.rows()],
            col_alive: vec![true; m.cols()],
            units: BTreeSet::new(),
            nnz: 0,
            active_rows: m.rows(),
            active_cols: m.cols(),
        };
        for (r, c, v) in m.iter() {
            e.write(r, c, v.clone());
        }
        e
    }

    fn write(&mut self, r: usize, c: usize, v: BigInt) {
        let existed = if v.is_zero() {
            self.col_rows[c].remove(&r);
            self.units.remove(&(r, c));
            self.rows[r].remove(&c).is_some()
        } else {
            if v.abs().is_one() {
                self.units.insert((r, c));
            } else {
                self.units.remove(&(r, c));
            }
            self.col_rows[c].insert(r);
            self.rows[r].insert(c, v).is_some()
        };
        match (existed, self.rows[r].contains_key(&c)) {
            (false, true) => self.nnz += 1,
            (true, false) => self.nnz -= 1,
            _ => {}
        }
    }

    fn get(&self, r: usize, c: usize) -> Option<&BigInt> {
        self.rows[r].get(&c)
    }

    /// row_dst -= q * row_src
    fn row_sub(&mut self, dst: usize, q: &BigInt, src: usize) {
        if q.is_zero() {
            return;
        }
        let updates: Vec<(usize, BigInt)> =
            self.rows[src].iter().map(|(&c, v)| (c, q * v)).collect();
        for (c, dv) in updates {
            let cur = self.get(dst, c).cloned().unwrap_or_else(BigInt::zero);
            self.write(dst, c, cur - dv);
        }
    }

    /// col_dst -= q * col_src
    fn col_sub(&mut self, dst: usize, q: &BigInt, src: usize) {
        if q.is_zero() {
            return;
        }
        let src_rows: Vec<usize> = self.col_rows[src].iter().copied().collect();
        for r in src_rows {
            let dv = q * self.rows[r].get(&src).expect("column index out of sync");
            let cur = self.get(r, dst).cloned().unwrap_or_else(BigInt::zero);
            self.write(r, dst, cur - dv);
        }
    }

    fn deactivate(&mut self, r: usize, c: usize) {
        let row_cols: Vec<usize> = self.rows[r].keys().copied().collect();
        for cc in row_cols {
            self.write(r, cc, BigInt::zero());
        }
        let col_rs: Vec<usize> = self.col_rows[c].iter().copied().collect();
        for rr in col_rs {
            self.write(rr, c, BigInt::zero());
        }
        self.row_alive[r] = false;
        self.col_alive[c] = false;
        self.active_rows -= 1;
        self.active_cols -= 1;
    }

    fn markowitz(&self, r: usize, c: usize) -> usize {
        (self.rows[r].len() - 1) * (self.col_rows[c].len() - 1)
    }

    /// Chooses the next pivot: a ±1 entry with small Markowitz cost when one
    /// exists, otherwise the entry of least absolute value.
    fn choose_pivot(&self) -> Option<(usize, usize)> {
        if !self.units.is_empty() {
            let mut best: Option<(usize, usize, usize)> = None;
            for &(r, c) in self.units.iter().take(64) {
                let cost = self.markowitz(r, c);
                if best.as_ref().is_none_or(|&(bc, _, _)| cost < bc) {
                    best = Some((cost, r, c));
                }
                if cost == 0 {
                    break;
                }
            }
            return best.map(|(_, r, c)| (r, c));
        }
        let mut best: Option<(BigInt, usize, usize, usize)> = None;
        for (r, row) in self.rows.iter().enumerate() {
            if !self.row_alive[r] {
                continue;
            }
            for (&c, v) in row {
                let a = v.abs();
                let cost = self.markowitz(r, c);
                let better = match &best {
                    None => true,
                    Some((ba, bcost, _, _)) => a < *ba || (a == *ba && cost < *bcost),
                };
                if better {
                    best = Some((a, cost, r, c));
                }
            }
        }
        best.map(|(_, _, r, c)| (r, c))
    }

    fn density(&self) -> f64 {
        let cells = self.active_rows * self.active_cols;
        if cells == 0 {
            return 0.0;
        }
        self.nnz as f64 / cells as f64
    }

    /// Extracts the active block as a dense matrix, consuming the entries.
    fn take_dense(&mut self) -> Vec<Vec<BigInt>> {
        let live_rows: Vec<usize> =
            (0..self.rows.len()).filter(|&r| self.row_alive[r]).collect();
        let live_cols: Vec<usize> =
            (0..self.col_rows.len()).filter(|&c| self.col_alive[c]).collect();
        let col_pos: BTreeMap<usize, usize> =
            live_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut dense = vec![vec![BigInt::zero(); live_cols.len()]; live_rows.len()];
        for (i, &r) in live_rows.iter().enumerate() {
            for (&c, v) in &self.rows[r] {
                dense[i][col_pos[&c]] = v.clone();
            }
        }
        dense
    }
}

/// Diagonalizes (up to equivalence) and returns the absolute diagonal values.
fn diagonal_values(m: &IntMatrix) -> Vec<BigInt> {
    let mut e = Elim::new(m);
    let mut diag = Vec::new();
    loop {
        if e.nnz == 0 {
            break;
        }
        // Once no ±1 entries remain, sparse Euclid elimination is the
        // coefficient-explosion regime: hand the block to the dense endgame,
        // which works modulo a determinant.
        let cells = e.active_rows * e.active_cols;
        if (e.density() >= DENSE_DENSITY && cells <= DENSE_CELL_CAP)
            || (e.units.is_empty() && cells <= 4 * DENSE_CELL_CAP)
        {
            diag.extend(dense_diagonal(e.take_dense()));
            break;
        }
        let (mut r, mut c) = e.choose_pivot().expect("nnz > 0 but no pivot found");
        // Clear the pivot row and column; a nonzero remainder yields a
        // smaller pivot and restarts the sweep.
        'sweep: loop {
            let p = e.get(r, c).expect("pivot vanished").clone();
            let col_others: Vec<usize> =
                e.col_rows[c].iter().copied().filter(|&rr| rr != r).collect();
            for rr in col_others {
                let a = e.get(rr, c).expect("stale column index").clone();
                let (q, rem) = div_rem_nearest(&a, &p);
                e.row_sub(rr, &q, r);
                if !rem.is_zero() {
                    r = rr;
                    continue 'sweep;
                }
            }
            let row_others: Vec<usize> =
                e.rows[r].keys().copied().filter(|&cc| cc != c).collect();
            for cc in row_others {
                let a = e.get(r, cc).expect("stale row entry").clone();
                let (q, rem) = div_rem_nearest(&a, &p);
                e.col_sub(cc, &q, c);
                if !rem.is_zero() {
                    c = cc;
                    continue 'sweep;
                }
            }
            break;
        }
        diag.push(e.get(r, c).expect("pivot vanished").abs());
        e.deactivate(r, c);
    }
    diag
}

/// Dense diagonalization used once the active block is small and dense.
///
/// Unit pivots are consumed first (their Schur complements are exact minors,
/// so entries stay Hadamard-bounded). The remaining unit-free block is the
/// coefficient-explosion regime, so it is finished modulo a determinant:
/// a Bareiss pass yields the rank `r` and a nonzero `r×r` minor `δ`, and the
/// block is diagonalized augmented with `δ·I`, every entry reduced into
/// `[−δ/2, δ/2]`. The augmentation is harmless because `δ·ℤ^rows` lies inside
/// the augmented column lattice, and it turns the quotient into
/// `T ⊕ (ℤ/δ)^{rows−r}` with `T` the original torsion (its exponent divides
/// every nonzero maximal minor); dropping `rows − r` top factors `δ` from the
/// chain recovers the true factors.
fn dense_diagonal(mut a: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let nrows = a.len();
    let ncols = if nrows == 0 { 0 } else { a[0].len() };
    let mut diag = Vec::new();
    let mut top = 0;
    // phase 1: unit pivots only
    while top < nrows.min(ncols) {
        let mut unit: Option<(usize, usize)> = None;
        'scan: for (i, row) in a.iter().enumerate().skip(top) {
            for (j, v) in row.iter().enumerate().skip(top) {
                if v.abs().is_one() {
                    unit = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((pi, pj)) = unit else { break };
        a.swap(top, pi);
        for row in a.iter_mut() {
            row.swap(top, pj);
        }
        let pivot = a[top][top].clone();
        for i in top + 1..nrows {
            if a[i][top].is_zero() {
                continue;
            }
            let q = &a[i][top] * &pivot; // pivot is ±1, so q·pivot = entry
            for j in top..ncols {
                let d = &q * &a[top][j];
                a[i][j] -= d;
            }
        }
        for j in top + 1..ncols {
            if a[top][j].is_zero() {
                continue;
            }
            let q = &a[top][j] * &pivot;
            for i in top..nrows {
                let d = &q * &a[i][top];
                a[i][j] -= d;
            }
        }
        diag.push(BigInt::one());
        top += 1;
    }
    // phase 2: the unit-free tail
    let block: Vec<Vec<BigInt>> =
        a.iter().skip(top).map(|row| row.iter().skip(top).cloned().collect()).collect();
    if block.iter().any(|row| row.iter().any(|v| !v.is_zero())) {
        diag.extend(unit_free_diagonal(block));
    }
    diag
}

/// Rank and the absolute determinant of the pivoted `rank×rank` submatrix,
/// by fraction-free (Bareiss) elimination with full pivoting.
fn bareiss_rank_and_minor(mut a: Vec<Vec<BigInt>>) -> (usize, BigInt) {
    let nrows = a.len();
    let ncols = if nrows == 0 { 0 } else { a[0].len() };
    let mut prev = BigInt::one();
    let mut k = 0;
    while k < nrows.min(ncols) {
        let mut best: Option<(BigInt, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, v) in row.iter().enumerate().skip(k) {
                if v.is_zero() {
                    continue;
                }
                let av = v.abs();
                if best.as_ref().is_none_or(|(b, _, _)| av < *b) {
                    best = Some((av, i, j));
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        a.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        for i in k + 1..nrows {
            for j in k + 1..ncols {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                let (q, r) = num.div_rem(&prev);
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                a[i][j] = q;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
        k += 1;
    }
    (k, prev.abs())
}

fn reduce_sym(v: &mut BigInt, delta: &BigInt) {
    let (_, r) = div_rem_nearest(v, delta);
    *v = r;
}

/// Diagonalizes a block with no ±1 entries: augment with `δ·I` and keep all
/// entries reduced symmetrically mod `δ`.
fn unit_free_diagonal(block: Vec<Vec<BigInt>>) -> Vec<BigInt> {
    let nrows = block.len();
    let (rank, delta) = bareiss_rank_and_minor(block.clone());
    if rank == 0 {
        return Vec::new();
    }
    let ncols = block[0].len() + nrows;
    let mut a: Vec<Vec<BigInt>> = block;
    for (i, row) in a.iter_mut().enumerate() {
        for v in row.iter_mut() {
            reduce_sym(v, &delta);
        }
        let mut aug = vec![BigInt::zero(); nrows];
        aug[i] = delta.clone();
        row.extend(aug);
    }
    let mut raw = Vec::new();
    let mut top = 0;
    while top < nrows {
        let mut best: Option<(BigInt, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(top) {
            for (j, v) in row.iter().enumerate().skip(top) {
                if v.is_zero() {
                    continue;
                }
                let av = v.abs();
                if best.as_ref().is_none_or(|(b, _, _)| av < *b) {
                    best = Some((av, i, j));
                }
            }
        }
        let Some((_, pi, pj)) = best else { break };
        a.swap(top, pi);
        for row in a.iter_mut() {
            row.swap(top, pj);
        }
        loop {
            let mut clean = true;
            for i in top + 1..nrows {
                if a[i][top].is_zero() {
                    continue;
                }
                let (q, rem) = div_rem_nearest(&a[i][top].clone(), &a[top][top].clone());
                for j in top..ncols {
                    let d = &q * &a[top][j];
                    a[i][j] -= d;
                    reduce_sym(&mut a[i][j], &delta);
                }
                a[i][top] = rem.clone();
                if !rem.is_zero() {
                    a.swap(top, i);
                    clean = false;
                }
            }
            for j in top + 1..ncols {
                if a[top][j].is_zero() {
                    continue;
                }
                let (q, rem) = div_rem_nearest(&a[top][j].clone(), &a[top][top].clone());
                for i in top..nrows {
                    let d = &q * &a[i][top];
                    a[i][j] -= d;
                    reduce_sym(&mut a[i][j], &delta);
                }
                a[top][j] = rem.clone();
                if !rem.is_zero() {
                    for row in a.iter_mut() {
                        row.swap(top, j);
                    }
                    clean = false;
                }
            }
            let row_clear = (top + 1..ncols).all(|j| a[top][j].is_zero());
            let col_clear = (top + 1..nrows).all(|i| a[i][top].is_zero());
            if clean && row_clear && col_clear {
                break;
            }
        }
        raw.push(a[top][top].abs());
        top += 1;
    }
    // The lattice carries an implicit δ·ℤ^rows summand throughout (entries are
    // only meaningful mod δ), so a pivot v contributes ℤ/gcd(v, δ) and every
    // unpivoted row a full ℤ/δ.
    let mut values: Vec<BigInt> = raw.into_iter().map(|v| v.gcd(&delta)).collect();
    values.resize(nrows, delta.clone());
    let normalized = normalize_diagonal(values);
    let mut factors = normalized.factors;
    for _ in rank..nrows {
        let dropped = factors.pop().expect("chain long enough");
        debug_assert_eq!(dropped, delta, "dropped factors must equal the minor");
    }
    factors
}

/// Normalizes a diagonal multiset into the invariant-factor chain.
fn normalize_diagonal(diag: Vec<BigInt>) -> InvariantFactors {
    let ones = diag.iter().filter(|d| d.abs().is_one()).count();
    let mut rest: Vec<BigInt> =
        diag.into_iter().map(|d| d.abs()).filter(|d| !d.is_one()).collect();
    debug_assert!(rest.iter().all(|d| !d.is_zero()));
    loop {
        let mut changed = false;
        for i in 0..rest.len() {
            for j in i + 1..rest.len() {
                if !(&rest[j] % &rest[i]).is_zero() {
                    let g = rest[i].gcd(&rest[j]);
                    let l = &rest[i] / &g * &rest[j];
                    rest[i] = g;
                    rest[j] = l;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    rest.sort();
    let mut factors = vec![BigInt::one(); ones];
    factors.extend(rest);
    InvariantFactors::new(factors)
}

/// Smith invariant factors without the certification pass.
///
/// The cokernel of `M : ℤ^cols → ℤ^rows` is `ℤ^(rows−k) ⊕ ⊕ᵢ ℤ/dᵢ` where `k`
/// is the number of factors returned.
pub fn snf_unverified(m: &IntMatrix) -> InvariantFactors {
    normalize_diagonal(diagonal_values(m))
}

/// Smith invariant factors, certified.
///
/// Cross-checks the rank against the modular rank at two random primes in
/// `[2^50, 2^62)` (re-drawn if the prime divides an invariant factor) and
/// spot-checks minor determinants against factor products. Panics on any
/// discrepancy: a wrong normal form would invalidate every torsion claim
/// downstream.
pub fn snf(m: &IntMatrix) -> InvariantFactors {
    let factors = snf_unverified(m);
    // Deterministic randomness: identical inputs give identical certificates.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed ^ ((m.rows() as u64) << 32) ^ m.cols() as u64);
    let mut checked = 0;
    let mut guard = 0;
    while checked < 2 {
        let p = random_prime(&mut rng);
        guard += 1;
        assert!(guard < 100, "could not find verification primes");
        if factors.factors.iter().any(|d| (d % BigInt::from(p)).is_zero()) {
            continue;
        }
        let mr = modular_rank(m, p).expect("internally generated prime");
        assert_eq!(
            mr,
            factors.len(),
            "modular rank at p={p} disagrees with Smith rank on {}x{} matrix",
            m.rows(),
            m.cols()
        );
        checked += 1;
    }
    minor_spot_check(m, &factors, &mut rng);
    factors
}

/// Determinant-of-minor spot check.
///
/// Small matrices get the full minor-gcd oracle; for larger ones random k×k
/// minors must be divisible by `d₁…d_k` (a consequence of the minor-gcd
/// characterization of invariant factors).
fn minor_spot_check(m: &IntMatrix, factors: &InvariantFactors, rng: &mut ChaCha8Rng) {
    let small = m.rows().min(m.cols());
    if small == 0 {
        return;
    }
    if small <= 6 && m.rows().max(m.cols()) <= 8 {
        for k in 1..=factors.len() {
            let expected: BigInt = factors.factors.iter().take(k).product();
            let g = minors_gcd(m, k);
            assert_eq!(g, expected, "minor gcd mismatch at k={k}");
        }
        return;
    }
    let k = factors.len().min(3);
    if k == 0 {
        return;
    }
    let product: BigInt = factors.factors.iter().take(k).product();
    if product.is_one() {
        return;
    }
    for _ in 0..16 {
        let rsel = sample_indices(rng, m.rows(), k);
        let csel = sample_indices(rng, m.cols(), k);
        let mut sub = vec![vec![BigInt::zero(); k]; k];
        for (i, &r) in rsel.iter().enumerate() {
            for (j, &c) in csel.iter().enumerate() {
                sub[i][j] = m.get(r, c);
            }
        }
        let det = bareiss_det(&sub);
        assert!(
            (&det % &product).is_zero(),
            "random {k}x{k} minor {det} not divisible by d1..dk = {product}"
        );
    }
}

fn sample_indices(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut chosen = BTreeSet::new();
    while chosen.len() < k {
        chosen.insert(rng.gen_range(0..n));
    }
    chosen.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::cokernel_group;

    fn factors_of(rows: &[Vec<i64>]) -> Vec<i64> {
        snf(&IntMatrix::from_rows(rows))
            .factors
            .iter()
            .map(|d| i64::try_from(d).unwrap())
            .collect()
    }

    #[test]
    fn identity_and_zero() {
        assert_eq!(factors_of(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]), vec![1, 1, 1]);
        let z = IntMatrix::zero(2, 5);
        assert!(snf(&z).is_empty());
    }

    #[test]
    fn two_by_two_hand_reduction() {
        // d1 = gcd of entries = 2, d1*d2 = |det| = |16 - 24| = 8
        assert_eq!(factors_of(&[vec![2, 4], vec![6, 8]]), vec![2, 4]);
    }

    #[test]
    fn cokernel_examples() {
        let g = cokernel_group(&IntMatrix::from_rows(&[vec![1, 0], vec![0, 2], vec![0, 0]]));
        assert_eq!(g.rank, 1);
        assert_eq!(g.torsion, vec![BigInt::from(2)]);

        let g = cokernel_group(&IntMatrix::zero(4, 0));
        assert_eq!(g.rank, 4);
        assert!(g.torsion.is_empty());

        // presentation of Z/6 + Z via diag(2,3) stacked with a zero row
        let g = cokernel_group(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3], vec![0, 0]]));
        assert_eq!(g.rank, 1);
        assert_eq!(g.torsion, vec![BigInt::from(6)]);
    }

    #[test]
    fn diagonal_normalization() {
        assert_eq!(factors_of(&[vec![6, 0], vec![0, 4]]), vec![2, 12]);
        assert_eq!(factors_of(&[vec![4, 0, 0], vec![0, 6, 0], vec![0, 0, 10]]), vec![2, 2, 60]);
    }

    #[test]
    fn random_unimodular_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let r = rng.gen_range(1..5);
            let c = rng.gen_range(1..5);
            let mut m = IntMatrix::zero(r, c);
            for i in 0..r {
                for j in 0..c {
                    m.set(i, j, BigInt::from(rng.gen_range(-5i64..=5)));
                }
            }
            let base = snf(&m);
            let t = crate::lattice::dense::random_unimodular_transform(&m, &mut rng);
            assert_eq!(snf(&t), base, "snf not invariant under unimodular transforms");
        }
    }

    #[test]
    fn minor_gcd_oracle_on_random_small_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..60 {
            let r = rng.gen_range(1..=6);
            let c = rng.gen_range(1..=6);
            let mut m = IntMatrix::zero(r, c);
            for i in 0..r {
                for j in 0..c {
                    m.set(i, j, BigInt::from(rng.gen_range(-5i64..=5)));
                }
            }
            let f = snf(&m);
            let mut prev = BigInt::one();
            for k in 1..=f.len() {
                let dk = minors_gcd(&m, k);
                let expect: BigInt = f.factors.iter().take(k).product();
                assert_eq!(dk, expect);
                assert_eq!(&dk / &prev, f.factors[k - 1].clone());
                prev = dk;
            }
            if f.len() < r.min(c) {
                assert!(minors_gcd(&m, f.len() + 1).is_zero());
            }
        }
    }
}
