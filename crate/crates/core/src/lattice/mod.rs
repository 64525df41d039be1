//! Sparse arbitrary-precision integer matrices and the normal forms built on
//! them: Smith (invariant factors, cokernel structure), Hermite (canonical
//! column bases, kernels, lattice intersections) and modular rank.
//!
//! All values are immutable after construction and every operation is a pure
//! function, so concurrent use from independent tasks is safe.

mod dense;
mod hnf;
mod modular;
mod snf;

pub use dense::{
    bareiss_det, complement_basis, minors_gcd, random_unimodular_transform, snf_with_transforms,
};
pub use hnf::{
    express_columns, express_in_hnf, hnf, hnf_basis, kernel, lattice_intersect, HnfBasis,
};
pub use modular::{is_prime_u64, modular_rank, random_prime, random_prime_one_mod};
pub use snf::{snf, snf_unverified};

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

/// A sparse integer matrix with arbitrary-precision entries.
///
/// Entries are stored row-major in a `BTreeMap`; zero entries are never
/// stored. Rows and columns may be zero-sized (all operations are total on
/// degenerate matrices).
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::from(1));
        }
        m
    }

    /// Builds a matrix from dense rows of machine integers (test convenience).
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        let mut m = IntMatrix::zero(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, BigInt::from(v));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> BigInt {
        self.entries.get(&(r, c)).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Sets an entry, dropping it from storage when the value is zero.
    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: &BigInt) {
        if v.is_zero() {
            return;
        }
        let cur = self.get(r, c);
        self.set(r, c, cur + v);
    }

    /// Iterates stored (nonzero) entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &BigInt)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for (r, c, v) in self.iter() {
            t.set(c, r, v.clone());
        }
        t
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut m = IntMatrix::zero(self.rows, self.cols + other.cols);
        for (r, c, v) in self.iter() {
            m.set(r, c, v.clone());
        }
        for (r, c, v) in other.iter() {
            m.set(r, c + self.cols, v.clone());
        }
        m
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut m = IntMatrix::zero(self.rows, other.cols);
        // group right factor rows for sparse access
        let mut rows_of_other: Vec<Vec<(usize, &BigInt)>> = vec![Vec::new(); other.rows];
        for (r, c, v) in other.iter() {
            rows_of_other[r].push((c, v));
        }
        for (r, k, v) in self.iter() {
            for &(c, w) in &rows_of_other[k] {
                m.add_to(r, c, &(v * w));
            }
        }
        m
    }

    /// Columns of `self` restricted to the listed rows, preserving order.
    pub fn select_rows(&self, rows: &[usize]) -> IntMatrix {
        let pos: BTreeMap<usize, usize> =
            rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut m = IntMatrix::zero(rows.len(), self.cols);
        for (r, c, v) in self.iter() {
            if let Some(&nr) = pos.get(&r) {
                m.set(nr, c, v.clone());
            }
        }
        m
    }

    pub fn column(&self, c: usize) -> BTreeMap<usize, BigInt> {
        let mut col = BTreeMap::new();
        for (r, cc, v) in self.iter() {
            if cc == c {
                col.insert(r, v.clone());
            }
        }
        col
    }

    /// All columns at once, as sparse row→value maps.
    pub fn columns(&self) -> Vec<BTreeMap<usize, BigInt>> {
        let mut cols = vec![BTreeMap::new(); self.cols];
        for (r, c, v) in self.iter() {
            cols[c].insert(r, v.clone());
        }
        cols
    }

    /// Builds a matrix from sparse columns.
    pub fn from_columns(rows: usize, cols: &[BTreeMap<usize, BigInt>]) -> IntMatrix {
        let mut m = IntMatrix::zero(rows, cols.len());
        for (c, col) in cols.iter().enumerate() {
            for (&r, v) in col {
                m.set(r, c, v.clone());
            }
        }
        m
    }

    /// Serializes in the sparse text format: header `rows cols M`, one
    /// `i j value` line per nonzero entry (1-based, row-major), terminated by
    /// `0 0 0`. Round-trips bit-exactly.
    pub fn to_sms(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{} {} M\n", self.rows, self.cols));
        for (r, c, v) in self.iter() {
            s.push_str(&format!("{} {} {}\n", r + 1, c + 1, v));
        }
        s.push_str("0 0 0\n");
        s
    }

    pub fn from_sms(input: &str) -> crate::Result<IntMatrix> {
        use crate::Error;
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::Parse(format!("bad header: {header:?}")));
        }
        let rows: usize =
            head[0].parse().map_err(|_| Error::Parse(format!("bad row count {:?}", head[0])))?;
        let cols: usize =
            head[1].parse().map_err(|_| Error::Parse(format!("bad col count {:?}", head[1])))?;
        let mut m = IntMatrix::zero(rows, cols);
        let mut terminated = false;
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != 3 {
                return Err(Error::Parse(format!("bad entry line: {line:?}")));
            }
            if toks == ["0", "0", "0"] {
                terminated = true;
                break;
            }
            let r: usize =
                toks[0].parse().map_err(|_| Error::Parse(format!("bad row index {:?}", toks[0])))?;
            let c: usize =
                toks[1].parse().map_err(|_| Error::Parse(format!("bad col index {:?}", toks[1])))?;
            let v: BigInt =
                toks[2].parse().map_err(|_| Error::Parse(format!("bad value {:?}", toks[2])))?;
            if r == 0 || c == 0 || r > rows || c > cols {
                return Err(Error::Parse(format!("entry ({r},{c}) out of range")));
            }
            m.set(r - 1, c - 1, v);
        }
        if !terminated {
            return Err(Error::Parse("missing 0 0 0 terminator".into()));
        }
        Ok(m)
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} ({} nnz)", self.rows, self.cols, self.nnz())?;
        if self.rows <= 12 && self.cols <= 12 {
            for r in 0..self.rows {
                let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Invariant factors `d₁ | d₂ | … | d_k` of a Smith normal form.
///
/// Factors equal to 1 are stored but suppressed in reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantFactors {
    pub factors: Vec<BigInt>,
}

impl InvariantFactors {
    pub fn new(factors: Vec<BigInt>) -> Self {
        for w in factors.windows(2) {
            debug_assert!((&w[1] % &w[0]).is_zero(), "invariant factors must form a chain");
        }
        debug_assert!(factors.iter().all(|d| d.is_positive()));
        InvariantFactors { factors }
    }

    /// Number of invariant factors (the rank of the matrix).
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The factors greater than 1, i.e. the torsion coefficients.
    pub fn nontrivial(&self) -> Vec<BigInt> {
        self.factors.iter().filter(|d| **d > BigInt::from(1)).cloned().collect()
    }
}

impl fmt::Display for InvariantFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = self.nontrivial().iter().map(|d| d.to_string()).collect();
        write!(f, "({})", shown.join(", "))
    }
}

/// A finitely generated abelian group: free rank plus torsion coefficients
/// (each at least 2, forming a divisibility chain).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FpAbelianGroup {
    pub rank: usize,
    pub torsion: Vec<BigInt>,
}

impl FpAbelianGroup {
    pub fn free(rank: usize) -> Self {
        FpAbelianGroup { rank, torsion: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.rank == 0 && self.torsion.is_empty()
    }

    pub fn is_torsion_free(&self) -> bool {
        self.torsion.is_empty()
    }

    /// Length: the minimal number of generators, `rank + #torsion`.
    pub fn len(&self) -> usize {
        self.rank + self.torsion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_trivial()
    }

    /// The torsion coefficients as `(d1, d2, …)`.
    pub fn torsion_string(&self) -> String {
        let parts: Vec<String> = self.torsion.iter().map(|d| d.to_string()).collect();
        format!("({})", parts.join(", "))
    }
}

impl fmt::Display for FpAbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        for d in &self.torsion {
            parts.push(format!("Z/{d}"));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Structure of the cokernel of `M : ℤ^cols → ℤ^rows`.
///
/// The rank is `rows` minus the number of invariant factors; the torsion is
/// the list of factors exceeding 1.
pub fn cokernel_group(m: &IntMatrix) -> FpAbelianGroup {
    let factors = snf(m);
    FpAbelianGroup { rank: m.rows() - factors.len(), torsion: factors.nontrivial() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sms_round_trip_bit_exact() {
        let m = IntMatrix::from_rows(&[vec![2, 0, -3], vec![0, 0, 7]]);
        let s = m.to_sms();
        assert_eq!(s, "2 3 M\n1 1 2\n1 3 -3\n2 3 7\n0 0 0\n");
        let back = IntMatrix::from_sms(&s).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_sms(), s);
    }

    #[test]
    fn sms_rejects_malformed() {
        assert!(IntMatrix::from_sms("").is_err());
        assert!(IntMatrix::from_sms("2 2 M\n3 1 5\n0 0 0\n").is_err());
        assert!(IntMatrix::from_sms("2 2 M\n1 1 5\n").is_err());
    }

    #[test]
    fn degenerate_dimensions_are_fine() {
        let m = IntMatrix::zero(0, 5);
        assert_eq!(m.to_sms(), "0 5 M\n0 0 0\n");
        let g = cokernel_group(&IntMatrix::zero(4, 0));
        assert_eq!(g, FpAbelianGroup::free(4));
    }
}
