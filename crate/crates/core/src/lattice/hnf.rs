//! Column-style Hermite normal form and the lattice operations built on it:
//! canonical bases, membership/expression by back-substitution, integer
//! kernels, and intersections of column lattices.
//!
//! Convention: columns ordered by strictly increasing pivot row, pivots
//! positive, and in each pivot row the entries of the other columns are
//! reduced into `[0, pivot)`. This fixes bit-exact outputs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::IntMatrix;

type SparseCol = BTreeMap<usize, BigInt>;

/// An echelon column basis: the output of [`hnf`] plus pivot bookkeeping.
#[derive(Clone, Debug)]
pub struct HnfBasis {
    pub rows: usize,
    /// Columns in pivot-row order.
    pub columns: Vec<SparseCol>,
    /// Pivot row of each column (strictly increasing).
    pub pivot_rows: Vec<usize>,
}

impl HnfBasis {
    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn to_matrix(&self) -> IntMatrix {
        IntMatrix::from_columns(self.rows, &self.columns)
    }
}

fn col_sub(dst: &mut SparseCol, q: &BigInt, src: &SparseCol) {
    if q.is_zero() {
        return;
    }
    for (&r, v) in src {
        let cur = dst.remove(&r).unwrap_or_else(BigInt::zero);
        let next = cur - q * v;
        if !next.is_zero() {
            dst.insert(r, next);
        }
    }
}

fn col_neg(col: &mut SparseCol) {
    for v in col.values_mut() {
        *v = -v.clone();
    }
}

/// Core reduction. When `track` is set, mirrors all column operations on an
/// identity transform and returns the transform columns of the input columns
/// that reduced to zero — a basis of the kernel of the column map.
fn reduce(
    rows: usize,
    mut cols: Vec<SparseCol>,
    track: bool,
) -> (HnfBasis, Vec<SparseCol>) {
    let n = cols.len();
    let mut trans: Vec<SparseCol> = if track {
        (0..n).map(|j| BTreeMap::from([(j, BigInt::from(1))])).collect()
    } else {
        Vec::new()
    };
    let mut unprocessed: Vec<usize> = (0..n).collect();
    let mut basis_cols: Vec<usize> = Vec::new();
    let mut pivot_rows: Vec<usize> = Vec::new();

    for row in 0..rows {
        loop {
            let mut live: Vec<usize> = unprocessed
                .iter()
                .copied()
                .filter(|&j| cols[j].contains_key(&row))
                .collect();
            if live.len() <= 1 {
                break;
            }
            live.sort_by(|&a, &b| {
                let va = cols[a].get(&row).unwrap().abs();
                let vb = cols[b].get(&row).unwrap().abs();
                va.cmp(&vb).then(a.cmp(&b))
            });
            let j0 = live[0];
            let p = cols[j0].get(&row).unwrap().clone();
            for &j in &live[1..] {
                let a = cols[j].get(&row).unwrap().clone();
                let (q, _) = a.div_rem(&p);
                let (src, dst) = split_two(&mut cols, j0, j);
                col_sub(dst, &q, src);
                if track {
                    let (tsrc, tdst) = split_two(&mut trans, j0, j);
                    col_sub(tdst, &q, tsrc);
                }
            }
        }
        let survivor = unprocessed.iter().copied().find(|&j| cols[j].contains_key(&row));
        if let Some(j) = survivor {
            if cols[j].get(&row).unwrap().is_negative() {
                col_neg(&mut cols[j]);
                if track {
                    col_neg(&mut trans[j]);
                }
            }
            // normalize earlier pivots' columns at this row into [0, pivot)
            let pivot = cols[j].get(&row).unwrap().clone();
            for &b in &basis_cols {
                if let Some(v) = cols[b].get(&row) {
                    let q = v.div_floor(&pivot);
                    if !q.is_zero() {
                        let (src, dst) = split_two(&mut cols, j, b);
                        col_sub(dst, &q, src);
                        if track {
                            let (tsrc, tdst) = split_two(&mut trans, j, b);
                            col_sub(tdst, &q, tsrc);
                        }
                    }
                }
            }
            unprocessed.retain(|&u| u != j);
            basis_cols.push(j);
            pivot_rows.push(row);
        }
    }

    let kernel_cols: Vec<SparseCol> = if track {
        unprocessed
            .iter()
            .map(|&j| {
                debug_assert!(cols[j].is_empty(), "unprocessed column must be zero");
                trans[j].clone()
            })
            .collect()
    } else {
        Vec::new()
    };
    let columns: Vec<SparseCol> = basis_cols.into_iter().map(|j| std::mem::take(&mut cols[j])).collect();
    (HnfBasis { rows, columns, pivot_rows }, kernel_cols)
}

fn split_two<T>(v: &mut [T], a: usize, b: usize) -> (&T, &mut T) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = v.split_at_mut(b);
        (&lo[a], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(a);
        (&hi[0], &mut lo[b])
    }
}

/// Canonical column-style Hermite normal form of the column lattice of `m`.
///
/// The result has one column per lattice rank; zero columns are dropped.
pub fn hnf(m: &IntMatrix) -> IntMatrix {
    hnf_basis(m).to_matrix()
}

/// Hermite normal form with pivot bookkeeping kept for back-substitution.
pub fn hnf_basis(m: &IntMatrix) -> HnfBasis {
    let (basis, _) = reduce(m.rows(), m.columns(), false);
    basis
}

/// Basis of the integer kernel `{x : Mx = 0}`, HNF-canonicalized.
///
/// Kernels computed this way are saturated: they contain every integer vector
/// annihilated by `m`.
pub fn kernel(m: &IntMatrix) -> IntMatrix {
    let (_, kernel_cols) = reduce(m.rows(), m.columns(), true);
    let raw = IntMatrix::from_columns(m.cols(), &kernel_cols);
    hnf(&raw)
}

/// Expresses `target` in an echelon basis: returns `x` with `basis · x =
/// target`, or `None` when `target` is outside the column lattice.
pub fn express_in_hnf(basis: &HnfBasis, target: &SparseCol) -> Option<Vec<BigInt>> {
    let mut residual = target.clone();
    let mut coeffs = vec![BigInt::zero(); basis.columns.len()];
    for (j, (&prow, col)) in basis.pivot_rows.iter().zip(basis.columns.iter()).enumerate() {
        if let Some((&first, _)) = residual.iter().next() {
            if first < prow {
                return None; // entry above every remaining pivot cannot be cleared
            }
        } else {
            break;
        }
        if let Some(v) = residual.get(&prow).cloned() {
            let pivot = col.get(&prow).unwrap();
            let (q, r) = v.div_rem(pivot);
            if !r.is_zero() {
                return None;
            }
            col_sub(&mut residual, &q, col);
            coeffs[j] = q;
        }
    }
    if residual.is_empty() {
        Some(coeffs)
    } else {
        None
    }
}

/// Expresses every column of `targets` in the basis; `None` if any column
/// falls outside the lattice.
pub fn express_columns(basis: &HnfBasis, targets: &IntMatrix) -> Option<IntMatrix> {
    let mut out = IntMatrix::zero(basis.rank(), targets.cols());
    for (c, col) in targets.columns().iter().enumerate() {
        let x = express_in_hnf(basis, col)?;
        for (r, v) in x.into_iter().enumerate() {
            out.set(r, c, v);
        }
    }
    Some(out)
}

/// Intersection of two column lattices in `ℤ³`.
///
/// Any common vector `Au = Bv` corresponds to a kernel element of `[A | -B]`;
/// the intersection is generated by the `A`-halves of a kernel basis.
pub fn lattice_intersect(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    assert_eq!(a.rows(), 3, "lattice_intersect expects sublattices of Z^3");
    assert_eq!(b.rows(), 3, "lattice_intersect expects sublattices of Z^3");
    let mut neg_b = IntMatrix::zero(3, b.cols());
    for (r, c, v) in b.iter() {
        neg_b.set(r, c, -v.clone());
    }
    let stacked = a.hstack(&neg_b);
    let ker = kernel(&stacked);
    let mut top = IntMatrix::zero(a.cols(), ker.cols());
    for (r, c, v) in ker.iter() {
        if r < a.cols() {
            top.set(r, c, v.clone());
        }
    }
    hnf(&a.mul(&top))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    #[test]
    fn hnf_identity_and_single_column() {
        let id = IntMatrix::identity(3);
        assert_eq!(hnf(&id), id);
        // one generator: the lattice (and hence its basis) is unchanged
        let col = IntMatrix::from_rows(&[vec![4], vec![6]]);
        assert_eq!(hnf(&col), col);
    }

    #[test]
    fn hnf_of_index_two_lattice() {
        // columns (2,0) and (1,1) span an index-2 sublattice of Z^2
        let m = IntMatrix::from_rows(&[vec![2, 1], vec![0, 1]]);
        let h = hnf(&m);
        assert_eq!(h, IntMatrix::from_rows(&[vec![1, 0], vec![1, 2]]));
        // same lattice both ways
        let hb = hnf_basis(&m);
        for col in m.columns() {
            assert!(express_in_hnf(&hb, &col).is_some());
        }
        let mb = hnf_basis(&IntMatrix::from_rows(&[vec![1, 0], vec![1, 2]]));
        for col in hnf(&m).columns() {
            assert!(express_in_hnf(&mb, &col).is_some());
        }
    }

    #[test]
    fn hnf_convention_pivot_row_normalization() {
        let m = IntMatrix::from_rows(&[vec![7, 4], vec![0, 5]]);
        let h = hnf(&m);
        // pivots positive, entries right of each pivot in [0, pivot)
        for c in 0..h.cols() {
            let col = h.column(c);
            let (&prow, pivot) = col.iter().next().unwrap();
            assert!(pivot.is_positive());
            for c2 in 0..h.cols() {
                if c2 == c {
                    continue;
                }
                let v = h.get(prow, c2);
                assert!(v >= BigInt::zero() && v < *pivot, "entry {v} not reduced mod {pivot}");
            }
        }
    }

    #[test]
    fn kernel_is_saturated_and_annihilates() {
        let m = IntMatrix::from_rows(&[vec![2, 4, 6], vec![1, 2, 3]]);
        let k = kernel(&m);
        assert_eq!(k.cols(), 2);
        assert_eq!(m.mul(&k), IntMatrix::zero(2, 2));
        // (1,-2,1)-style primitive vectors must be present: saturation
        let kb = hnf_basis(&k);
        let mut v = std::collections::BTreeMap::new();
        v.insert(0, BigInt::from(-2));
        v.insert(1, BigInt::one());
        assert!(express_in_hnf(&kb, &v).is_some());
    }

    #[test]
    fn intersect_examples() {
        let id = IntMatrix::identity(3);
        assert_eq!(lattice_intersect(&id, &id), id);

        let e1 = IntMatrix::from_rows(&[vec![1], vec![0], vec![0]]);
        let e2 = IntMatrix::from_rows(&[vec![0], vec![1], vec![0]]);
        assert_eq!(lattice_intersect(&e1, &e2).cols(), 0);

        let two = IntMatrix::from_rows(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
        let three = IntMatrix::from_rows(&[vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3]]);
        let six = IntMatrix::from_rows(&[vec![6, 0, 0], vec![0, 6, 0], vec![0, 0, 6]]);
        assert_eq!(lattice_intersect(&two, &three), six);
    }

    #[test]
    fn intersect_commutative_idempotent() {
        let a = IntMatrix::from_rows(&[vec![2, 1, 0], vec![0, 3, 0], vec![1, 0, 4]]);
        let b = IntMatrix::from_rows(&[vec![1, 0], vec![1, 2], vec![0, 2]]);
        let ab = lattice_intersect(&a, &b);
        let ba = lattice_intersect(&b, &a);
        assert_eq!(ab, ba);
        assert_eq!(lattice_intersect(&a, &a), hnf(&a));
    }

    #[test]
    fn express_detects_non_membership() {
        let basis = hnf_basis(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 2]]));
        let mut odd = BTreeMap::new();
        odd.insert(0usize, BigInt::one());
        assert!(express_in_hnf(&basis, &odd).is_none());
    }
}
