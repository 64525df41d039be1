//! Finite abelian groups, epimorphisms `ℤ³ ↠ G`, the group ring `ℤ[G]`, and
//! characters of `G`.
//!
//! Group elements live in Smith-form coordinates (moduli in divisibility
//! order, trivial factors dropped); user-supplied moduli are kept for display
//! and input parsing. Enumeration order is lexicographic on Smith exponent
//! vectors, most significant coordinate first — fixed, so every downstream
//! flattening is deterministic.
//!
//! The deck group of a covering classified by `α : ℤ³ ↠ G` is `G`, with the
//! free generators `γ₁, γ₂, γ₃` of `ℤ³` mapping to the distinguished monomials
//! `t₁, t₂, t₃` of `ℤ[G]`; the fourth canonical generator is determined by
//! `γ₀ + γ₁ + γ₂ + γ₃ = 0`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::lattice::{snf, snf_with_transforms, IntMatrix};
use crate::{Error, Result};

/// Exponent vector in Smith coordinates; always reduced mod the Smith moduli.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupElem(pub Vec<u64>);

/// A finite abelian group `⊕ᵢ ℤ/nᵢ`.
#[derive(Debug)]
pub struct FiniteAbelianGroup {
    user_moduli: Vec<u64>,
    /// Smith moduli `d₁ | d₂ | …`, each ≥ 2; empty for the trivial group.
    moduli: Vec<u64>,
    /// Rows of the unimodular transform carrying user exponent vectors to
    /// Smith coordinates (one row per Smith modulus).
    user_to_smith: Vec<Vec<BigInt>>,
    order: u64,
}

impl PartialEq for FiniteAbelianGroup {
    fn eq(&self, other: &Self) -> bool {
        self.moduli == other.moduli && self.user_moduli == other.user_moduli
    }
}
impl Eq for FiniteAbelianGroup {}

impl FiniteAbelianGroup {
    /// Builds the group `⊕ ℤ/nᵢ` from user moduli (each ≥ 1).
    pub fn new(user_moduli: &[u64]) -> Result<Arc<Self>> {
        if let Some(&bad) = user_moduli.iter().find(|&&n| n == 0) {
            return Err(Error::InvalidModulus(bad));
        }
        let r = user_moduli.len();
        let mut diag = IntMatrix::zero(r, r);
        for (i, &n) in user_moduli.iter().enumerate() {
            diag.set(i, i, BigInt::from(n));
        }
        let (u, d, _v) = snf_with_transforms(&diag);
        let mut moduli = Vec::new();
        let mut user_to_smith = Vec::new();
        for i in 0..r {
            let di = d.get(i, i);
            let di = u64::try_from(&di).expect("modulus fits u64");
            if di >= 2 {
                moduli.push(di);
                user_to_smith.push((0..r).map(|j| u.get(i, j)).collect());
            }
        }
        let order = moduli.iter().product();
        Ok(Arc::new(FiniteAbelianGroup {
            user_moduli: user_moduli.to_vec(),
            moduli,
            user_to_smith,
            order,
        }))
    }

    pub fn user_moduli(&self) -> &[u64] {
        &self.user_moduli
    }

    /// Smith moduli in divisibility order (empty for the trivial group).
    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_trivial(&self) -> bool {
        self.moduli.is_empty()
    }

    /// Exponent of the group: the largest Smith modulus (1 when trivial).
    pub fn exponent(&self) -> u64 {
        self.moduli.last().copied().unwrap_or(1)
    }

    pub fn zero(&self) -> GroupElem {
        GroupElem(vec![0; self.moduli.len()])
    }

    /// Converts a user-coordinate exponent vector into Smith coordinates.
    pub fn elem_from_user(&self, exps: &[i64]) -> Result<GroupElem> {
        if exps.len() != self.user_moduli.len() {
            return Err(Error::PreconditionViolated(format!(
                "expected {} exponents, got {}",
                self.user_moduli.len(),
                exps.len()
            )));
        }
        let mut coords = Vec::with_capacity(self.moduli.len());
        for (row, &d) in self.user_to_smith.iter().zip(&self.moduli) {
            let mut acc = BigInt::zero();
            for (c, &e) in row.iter().zip(exps) {
                acc += c * BigInt::from(e);
            }
            coords.push(reduce_mod_u64(&acc, d));
        }
        Ok(GroupElem(coords))
    }

    pub fn elem(&self, coords: &[i64]) -> GroupElem {
        assert_eq!(coords.len(), self.moduli.len());
        GroupElem(
            coords
                .iter()
                .zip(&self.moduli)
                .map(|(&c, &d)| reduce_mod_u64(&BigInt::from(c), d))
                .collect(),
        )
    }

    pub fn add(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        GroupElem(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((&x, &y), &d)| (x + y) % d)
                .collect(),
        )
    }

    pub fn neg(&self, a: &GroupElem) -> GroupElem {
        GroupElem(a.0.iter().zip(&self.moduli).map(|(&x, &d)| (d - x) % d).collect())
    }

    pub fn sub(&self, a: &GroupElem, b: &GroupElem) -> GroupElem {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, k: i64, a: &GroupElem) -> GroupElem {
        GroupElem(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &d)| reduce_mod_u64(&(BigInt::from(k) * BigInt::from(x)), d))
                .collect(),
        )
    }

    /// Order of an element: `lcm(dᵢ / gcd(dᵢ, xᵢ))`.
    pub fn order_of(&self, a: &GroupElem) -> u64 {
        a.0.iter()
            .zip(&self.moduli)
            .map(|(&x, &d)| d / x.gcd(&d))
            .fold(1u64, |acc, o| acc.lcm(&o))
    }

    /// Index in the fixed enumeration (lexicographic, first coordinate most
    /// significant).
    pub fn index_of(&self, a: &GroupElem) -> usize {
        let mut idx = 0usize;
        for (&x, &d) in a.0.iter().zip(&self.moduli) {
            idx = idx * d as usize + x as usize;
        }
        idx
    }

    pub fn elem_at(&self, mut idx: usize) -> GroupElem {
        let mut coords = vec![0u64; self.moduli.len()];
        for i in (0..self.moduli.len()).rev() {
            let d = self.moduli[i] as usize;
            coords[i] = (idx % d) as u64;
            idx /= d;
        }
        GroupElem(coords)
    }

    /// All elements in enumeration order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElem> + '_ {
        (0..self.order as usize).map(move |i| self.elem_at(i))
    }
}

fn reduce_mod_u64(v: &BigInt, d: u64) -> u64 {
    let m = v.mod_floor(&BigInt::from(d));
    u64::try_from(&m).expect("reduced residue fits u64")
}

/// A surjection `α : ℤ³ ↠ G`, recorded by the images of the free generators
/// `γ₁, γ₂, γ₃`; the image of `γ₀` is `−(α(γ₁)+α(γ₂)+α(γ₃))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Epimorphism {
    group: Arc<FiniteAbelianGroup>,
    images: [GroupElem; 3],
}

impl Epimorphism {
    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    /// Image of the canonical generator `γ_j`, `j ∈ {0,1,2,3}`.
    pub fn gamma(&self, j: usize) -> GroupElem {
        match j {
            1 | 2 | 3 => self.images[j - 1].clone(),
            0 => {
                let g = &self.group;
                let s = g.add(&g.add(&self.images[0], &self.images[1]), &self.images[2]);
                g.neg(&s)
            }
            _ => panic!("generator index must be 0..=3"),
        }
    }

    /// Image of `v₁γ₁ + v₂γ₂ + v₃γ₃`.
    pub fn apply(&self, v: [i64; 3]) -> GroupElem {
        let g = &self.group;
        let mut acc = g.zero();
        for (k, img) in v.iter().zip(&self.images) {
            acc = g.add(&acc, &g.scale(*k, img));
        }
        acc
    }

    /// Relabels the four branch generators by a permutation of `{0,1,2,3}`:
    /// the new `γ_i` is the old `γ_{perm[i]}`.
    pub fn permuted(&self, perm: [usize; 4]) -> Epimorphism {
        let images = [
            self.gamma(perm[1]),
            self.gamma(perm[2]),
            self.gamma(perm[3]),
        ];
        Epimorphism { group: Arc::clone(&self.group), images }
    }

    pub fn images(&self) -> &[GroupElem; 3] {
        &self.images
    }
}

/// Constructs `α : ℤ³ ↠ G` from user moduli and user-coordinate images of
/// `γ₁, γ₂, γ₃`. Fails with [`Error::NotSurjective`] when the images do not
/// generate.
pub fn make_epimorphism(moduli: &[u64], images_user: &[Vec<i64>; 3]) -> Result<Epimorphism> {
    let group = FiniteAbelianGroup::new(moduli)?;
    let images = [
        group.elem_from_user(&images_user[0])?,
        group.elem_from_user(&images_user[1])?,
        group.elem_from_user(&images_user[2])?,
    ];
    make_epimorphism_smith(group, images)
}

/// Same as [`make_epimorphism`] but with images already in Smith coordinates.
pub fn make_epimorphism_smith(
    group: Arc<FiniteAbelianGroup>,
    images: [GroupElem; 3],
) -> Result<Epimorphism> {
    let r = group.moduli().len();
    // surjective iff [images | diag(moduli)] has trivial cokernel
    let mut m = IntMatrix::zero(r, 3 + r);
    for (j, img) in images.iter().enumerate() {
        for (i, &x) in img.0.iter().enumerate() {
            m.set(i, j, BigInt::from(x));
        }
    }
    for (i, &d) in group.moduli().iter().enumerate() {
        m.set(i, 3 + i, BigInt::from(d));
    }
    let f = snf(&m);
    let trivial = f.len() == r && f.factors.iter().all(|d| d.is_one());
    if !trivial {
        return Err(Error::NotSurjective);
    }
    Ok(Epimorphism { group, images })
}

/// The Fermat covering datum of degree `m`: group `(ℤ/m)³`, standard images.
pub fn fermat_epimorphism(m: u64) -> Epimorphism {
    assert!(m >= 1);
    let group = FiniteAbelianGroup::new(&[m, m, m]).expect("positive moduli");
    let images = [
        group.elem_from_user(&[1, 0, 0]).expect("standard basis vector"),
        group.elem_from_user(&[0, 1, 0]).expect("standard basis vector"),
        group.elem_from_user(&[0, 0, 1]).expect("standard basis vector"),
    ];
    make_epimorphism_smith(group, images).expect("standard basis generates")
}

/// An element of the group ring `ℤ[G]`: a finitely supported integer-valued
/// function on `G`. No zero coefficients are stored.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupRingElem {
    group: Arc<FiniteAbelianGroup>,
    coeffs: BTreeMap<GroupElem, BigInt>,
}

impl GroupRingElem {
    pub fn zero(group: &Arc<FiniteAbelianGroup>) -> Self {
        GroupRingElem { group: Arc::clone(group), coeffs: BTreeMap::new() }
    }

    pub fn one(group: &Arc<FiniteAbelianGroup>) -> Self {
        Self::monomial(group, group.zero())
    }

    pub fn monomial(group: &Arc<FiniteAbelianGroup>, g: GroupElem) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(g, BigInt::one());
        GroupRingElem { group: Arc::clone(group), coeffs }
    }

    pub fn group(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, g: &GroupElem) -> BigInt {
        self.coeffs.get(g).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElem, &BigInt)> {
        self.coeffs.iter()
    }

    fn insert(&mut self, g: GroupElem, v: BigInt) {
        if !v.is_zero() {
            self.coeffs.insert(g, v);
        }
    }

    pub fn add(&self, other: &GroupRingElem) -> GroupRingElem {
        assert!(self.group == other.group, "group mismatch");
        let mut out = self.clone();
        for (g, v) in &other.coeffs {
            let cur = out.coeffs.remove(g).unwrap_or_else(BigInt::zero);
            out.insert(g.clone(), cur + v);
        }
        out
    }

    pub fn neg(&self) -> GroupRingElem {
        let mut out = GroupRingElem::zero(&self.group);
        for (g, v) in &self.coeffs {
            out.insert(g.clone(), -v.clone());
        }
        out
    }

    pub fn sub(&self, other: &GroupRingElem) -> GroupRingElem {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> GroupRingElem {
        let mut out = GroupRingElem::zero(&self.group);
        if k.is_zero() {
            return out;
        }
        for (g, v) in &self.coeffs {
            out.insert(g.clone(), k * v);
        }
        out
    }

    /// Multiplication by the monomial at `g` (a deck translation).
    pub fn translate(&self, g: &GroupElem) -> GroupRingElem {
        let mut out = GroupRingElem::zero(&self.group);
        for (h, v) in &self.coeffs {
            out.insert(self.group.add(h, g), v.clone());
        }
        out
    }

    /// Augmentation `ε(Σ c_g·g) = Σ c_g`.
    pub fn augmentation(&self) -> BigInt {
        self.coeffs.values().sum()
    }
}

impl fmt::Debug for GroupRingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.coeffs.iter().map(|(g, v)| format!("{v}*t^{:?}", g.0)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Exact convolution product in `ℤ[G]`. Errors on a group mismatch.
pub fn ring_mul(a: &GroupRingElem, b: &GroupRingElem) -> Result<GroupRingElem> {
    if a.group != b.group {
        return Err(Error::GroupMismatch);
    }
    let mut out = GroupRingElem::zero(&a.group);
    for (g, v) in &a.coeffs {
        for (h, w) in &b.coeffs {
            let key = a.group.add(g, h);
            let cur = out.coeffs.remove(&key).unwrap_or_else(BigInt::zero);
            out.insert(key, cur + v * w);
        }
    }
    Ok(out)
}

/// The distinguished monomial `t_i = α(γ_i)` for `i ∈ {0,1,2,3}`.
///
/// `t₀` is provided for completeness; the chain complex only uses `t₁..t₃`.
pub fn t(alpha: &Epimorphism, i: usize) -> GroupRingElem {
    GroupRingElem::monomial(alpha.group(), alpha.gamma(i))
}

/// `t_i − 1`.
pub fn t_minus_one(alpha: &Epimorphism, i: usize) -> GroupRingElem {
    t(alpha, i).sub(&GroupRingElem::one(alpha.group()))
}

/// `φ_n(t_i) = 1 + t_i + … + t_i^{n−1}` reduced in `ℤ[G]`.
pub fn phi(n: u64, var: usize, alpha: &Epimorphism) -> GroupRingElem {
    assert!((1..=3).contains(&var), "variable index must be 1, 2 or 3");
    let g = alpha.group();
    let step = alpha.gamma(var);
    let mut out = GroupRingElem::zero(g);
    let mut cur = g.zero();
    for _ in 0..n {
        let old = out.coeffs.remove(&cur).unwrap_or_else(BigInt::zero);
        out.insert(cur.clone(), old + 1);
        cur = g.add(&cur, &step);
    }
    out
}

/// A character `χ : G → μ_N`, stored exactly as exponents modulo the group
/// exponent `N`: `χ(gen_i) = ζ_N^{exponents[i]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Character {
    pub order: u64,
    pub exponents: Vec<u64>,
}

impl Character {
    /// Exponent `e` with `χ(x) = ζ_N^e`.
    pub fn eval_exponent(&self, x: &GroupElem) -> u64 {
        let mut acc: u128 = 0;
        for (&e, &c) in self.exponents.iter().zip(&x.0) {
            acc += e as u128 * c as u128;
        }
        (acc % self.order as u128) as u64
    }

    /// Evaluates a ring element under `χ` into `𝔽_p`, sending `ζ_N ↦ ω`.
    ///
    /// `ω` must have multiplicative order `N` in `𝔽_p`.
    pub fn eval_ring_elem_mod_p(&self, elem: &GroupRingElem, omega: u64, p: u64) -> u64 {
        let mut acc: u64 = 0;
        for (g, c) in elem.iter() {
            let e = self.eval_exponent(g);
            let root = powmod_u64(omega, e, p);
            let c_mod = c.mod_floor(&BigInt::from(p));
            let c_mod = u64::try_from(&c_mod).expect("residue fits");
            acc = ((acc as u128 + root as u128 * c_mod as u128) % p as u128) as u64;
        }
        acc
    }
}

fn powmod_u64(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = ((acc as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// All `|G|` characters of `G`, in the fixed element-enumeration order: the
/// character labelled by `y` sends the `i`-th Smith generator to
/// `ζ_N^{yᵢ·N/dᵢ}`.
pub fn characters(group: &Arc<FiniteAbelianGroup>) -> Vec<Character> {
    let n = group.exponent();
    group
        .elements()
        .map(|y| Character {
            order: n,
            exponents: y
                .0
                .iter()
                .zip(group.moduli())
                .map(|(&yi, &di)| ((yi as u128 * (n / di) as u128) % n as u128) as u64)
                .collect(),
        })
        .collect()
}
