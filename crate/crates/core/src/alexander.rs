//! Presentations over `ℤ[G]` of the modules attached to a covering
//! `α : ℤ³ ↠ G` branched over the Ceva-7 arrangement, and their deterministic
//! flattening to sparse integer matrices.
//!
//! The six-generator module has generators `a₁,a₂,a₃` (unwrapped, with
//! boundary `∂₁aᵢ = tᵢ−1`) and `c₁,c₂,c₃` (latent, `∂₁cⱼ = 0`), subject to
//! six fixed relations: each `cₖ` is invariant under the product of the two
//! complementary translations, and three linking relations tie the `a`-s to
//! the `c`-s. Working directly in `ℤ[G]` absorbs the covering relation
//! `t₁^{r₁}t₂^{r₂}t₃^{r₃} = 1` for `r ∈ Ker α`.
//!
//! On top of that:
//! - the Fermat quotient of degree `m` adds `φ_m(tᵢ)aᵢ = 0` (whole `G`-orbits,
//!   annihilating the ramification);
//! - its reduced variant further kills `c₂` and `c₃`;
//! - the latent submodule spanned by `c₁,c₂,c₃` is computed exactly, and its
//!   known single-relation model is built independently for cross-checking.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::group_ring::{
    fermat_epimorphism, phi, ring_mul, t, t_minus_one, Epimorphism, GroupRingElem,
};
use crate::lattice::{hnf, kernel, IntMatrix};

/// Default generator names for the six-generator module.
pub const GEN_NAMES_FULL: [&str; 6] = ["a1", "a2", "a3", "c1", "c2", "c3"];
/// Generator names for the latent three-generator submodule.
pub const GEN_NAMES_LATENT: [&str; 3] = ["c1", "c2", "c3"];

/// One module relation: a named vector of `ℤ[G]` coefficients, one per
/// generator.
#[derive(Clone, Debug)]
pub struct Relation {
    pub name: String,
    pub coords: Vec<GroupRingElem>,
}

impl Relation {
    pub fn new(name: impl Into<String>, coords: Vec<GroupRingElem>) -> Self {
        Relation { name: name.into(), coords }
    }
}

/// An element of the free module `ℤ[G]^gens`, used for subgroup and quotient
/// constructions.
pub type ModuleElement = Vec<GroupRingElem>;

/// A finitely presented `ℤ[G]`-module, flattenable to an integer matrix.
///
/// Flattening is deterministic: ℤ-generators are ordered (generator index,
/// group element) lexicographically, ℤ-relations are all `G`-translates of
/// each module relation, translates ordered by the group enumeration.
#[derive(Clone, Debug)]
pub struct ModulePresentation {
    epi: Epimorphism,
    gen_names: Vec<String>,
    relations: Vec<Relation>,
    /// `∂₁` of each generator, when this presentation carries boundary data.
    boundary: Option<Vec<GroupRingElem>>,
}

impl ModulePresentation {
    pub fn epimorphism(&self) -> &Epimorphism {
        &self.epi
    }

    pub fn num_gens(&self) -> usize {
        self.gen_names.len()
    }

    pub fn gen_names(&self) -> &[String] {
        &self.gen_names
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn boundary(&self) -> Option<&[GroupRingElem]> {
        self.boundary.as_deref()
    }

    pub fn group_order(&self) -> usize {
        self.epi.group().order() as usize
    }

    /// The free-module element with a single `ℤ[G]` coefficient at `gen`.
    pub fn elem(&self, gen: usize, coeff: GroupRingElem) -> ModuleElement {
        let g = self.epi.group();
        let mut v = vec![GroupRingElem::zero(g); self.num_gens()];
        v[gen] = coeff;
        v
    }

    /// Appends relations (all `G`-translates arise on flattening).
    pub fn with_relations(&self, extra: Vec<Relation>) -> ModulePresentation {
        let mut out = self.clone();
        out.relations.extend(extra);
        out
    }

    /// Row index of the ℤ-generator (generator `gen`, group element `g`).
    pub fn row_index(&self, gen: usize, g: &crate::group_ring::GroupElem) -> usize {
        gen * self.group_order() + self.epi.group().index_of(g)
    }

    /// Flattens to the integer relation matrix: one row per ℤ-generator, one
    /// column per (relation, group element) pair.
    pub fn flatten(&self) -> IntMatrix {
        let order = self.group_order();
        let rows = self.num_gens() * order;
        let cols = self.relations.len() * order;
        let mut m = IntMatrix::zero(rows, cols);
        let group = self.epi.group();
        for (ri, rel) in self.relations.iter().enumerate() {
            for (gi, g) in group.elements().enumerate() {
                let col = ri * order + gi;
                for (gen, coeff) in rel.coords.iter().enumerate() {
                    for (h, c) in coeff.iter() {
                        let row = gen * order + group.index_of(&group.add(h, &g));
                        m.add_to(row, col, c);
                    }
                }
            }
        }
        m
    }

    /// Flattens a single module element to an integer column vector.
    pub fn flatten_element(&self, elem: &ModuleElement) -> BTreeMap<usize, BigInt> {
        assert_eq!(elem.len(), self.num_gens());
        let mut col = BTreeMap::new();
        for (gen, coeff) in elem.iter().enumerate() {
            for (h, c) in coeff.iter() {
                let row = self.row_index(gen, h);
                let cur: BigInt = col.remove(&row).unwrap_or_else(BigInt::zero);
                let next = cur + c;
                if !next.is_zero() {
                    col.insert(row, next);
                }
            }
        }
        col
    }

    /// Flattens module elements and all their `G`-translates into columns.
    pub fn flatten_elements_with_translates(&self, elems: &[ModuleElement]) -> IntMatrix {
        let order = self.group_order();
        let rows = self.num_gens() * order;
        let group = self.epi.group();
        let mut m = IntMatrix::zero(rows, elems.len() * order);
        for (ei, elem) in elems.iter().enumerate() {
            for (gi, g) in group.elements().enumerate() {
                let col = ei * order + gi;
                for (gen, coeff) in elem.iter().enumerate() {
                    for (h, c) in coeff.iter() {
                        let row = gen * order + group.index_of(&group.add(h, &g));
                        m.add_to(row, col, c);
                    }
                }
            }
        }
        m
    }

    /// The flattened boundary `∂₁`: a `|G| × gens·|G|` matrix. Panics when the
    /// presentation carries no boundary data.
    pub fn flatten_boundary(&self) -> IntMatrix {
        let boundary = self
            .boundary
            .as_ref()
            .expect("presentation carries no boundary data");
        let order = self.group_order();
        let group = self.epi.group();
        let mut m = IntMatrix::zero(order, self.num_gens() * order);
        for (gen, target) in boundary.iter().enumerate() {
            for (gi, g) in group.elements().enumerate() {
                let col = gen * order + gi;
                for (h, c) in target.iter() {
                    m.add_to(group.index_of(&group.add(h, &g)), col, c);
                }
            }
        }
        m
    }

    /// Sparse-matrix export plus a JSON sidecar naming generators, group
    /// moduli and relation tags.
    pub fn export_sidecar(&self) -> (String, String) {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            generators: &'a [String],
            group_moduli: &'a [u64],
            group_order: u64,
            relations: Vec<&'a str>,
            rows: usize,
            cols: usize,
        }
        let m = self.flatten();
        let sidecar = Sidecar {
            generators: &self.gen_names,
            group_moduli: self.epi.group().moduli(),
            group_order: self.epi.group().order(),
            relations: self.relations.iter().map(|r| r.name.as_str()).collect(),
            rows: m.rows(),
            cols: m.cols(),
        };
        (m.to_sms(), serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n")
    }
}

/// The six fixed relation vectors, in presentation order.
///
/// With generators ordered `a₁,a₂,a₃,c₁,c₂,c₃`:
///
/// ```text
/// inv_c1:  (t₂t₃−1)c₁
/// link_23: (t₃−1)c₁ + (t₃−1)a₂ − (t₂−1)a₃
/// inv_c2:  (t₁t₃−1)c₂
/// link_13: (t₃−1)c₂ + (t₃−1)a₁ − (t₁−1)a₃
/// inv_c3:  (t₁t₂−1)c₃
/// link_12: (t₁−1)c₃ + (t₁−1)a₂ − (t₂−1)a₁
/// ```
pub fn universal_relations(alpha: &Epimorphism) -> Vec<Relation> {
    let g = alpha.group();
    let zero = || GroupRingElem::zero(g);
    let one = GroupRingElem::one(g);
    let tm = |i: usize| t_minus_one(alpha, i);
    let prod_minus_one =
        |i: usize, j: usize| ring_mul(&t(alpha, i), &t(alpha, j)).expect("same group").sub(&one);

    vec![
        Relation::new("inv_c1", vec![zero(), zero(), zero(), prod_minus_one(2, 3), zero(), zero()]),
        Relation::new(
            "link_23",
            vec![zero(), tm(3), tm(2).neg(), tm(3), zero(), zero()],
        ),
        Relation::new("inv_c2", vec![zero(), zero(), zero(), zero(), prod_minus_one(1, 3), zero()]),
        Relation::new(
            "link_13",
            vec![tm(3), zero(), tm(1).neg(), zero(), tm(3), zero()],
        ),
        Relation::new("inv_c3", vec![zero(), zero(), zero(), zero(), zero(), prod_minus_one(1, 2)]),
        Relation::new(
            "link_12",
            vec![tm(2).neg(), tm(1), zero(), zero(), zero(), tm(1)],
        ),
    ]
}

fn standard_boundary(alpha: &Epimorphism) -> Vec<GroupRingElem> {
    let g = alpha.group();
    vec![
        t_minus_one(alpha, 1),
        t_minus_one(alpha, 2),
        t_minus_one(alpha, 3),
        GroupRingElem::zero(g),
        GroupRingElem::zero(g),
        GroupRingElem::zero(g),
    ]
}

/// The six-generator module of the branch complement for the covering `α`.
pub fn build_a(alpha: &Epimorphism) -> ModulePresentation {
    ModulePresentation {
        epi: alpha.clone(),
        gen_names: GEN_NAMES_FULL.iter().map(|s| s.to_string()).collect(),
        relations: universal_relations(alpha),
        boundary: Some(standard_boundary(alpha)),
    }
}

/// The degree-`m` Fermat quotient: `(ℤ/m)³` covering with the three
/// ramification relations `φ_m(tᵢ)aᵢ = 0` adjoined.
pub fn build_tilde_a(m: u64) -> ModulePresentation {
    assert!(m >= 1);
    let alpha = fermat_epimorphism(m);
    let mut p = build_a(&alpha);
    for i in 1..=3usize {
        let coeff = phi(m, i, &alpha);
        let rel = Relation::new(format!("ram_a{i}"), p.elem(i - 1, coeff));
        p.relations.push(rel);
    }
    p
}

/// The reduced Fermat module: [`build_tilde_a`] with `c₂ = c₃ = 0`.
pub fn build_tilde_a_prime(m: u64) -> ModulePresentation {
    let mut p = build_tilde_a(m);
    let one = GroupRingElem::one(p.epi.group());
    let kill2 = Relation::new("kill_c2", p.elem(4, one.clone()));
    let kill3 = Relation::new("kill_c3", p.elem(5, one));
    p.relations.push(kill2);
    p.relations.push(kill3);
    p
}

/// The latent submodule spanned by `c₁,c₂,c₃` inside [`build_a`]`(α)`,
/// presented on those three generators.
///
/// The relation lattice is the exact kernel of `ℤ[G]³ → A(α)`: a combination
/// of `c`-translates dies in the module iff it is the `c`-part of a relation
/// combination whose `a`-part vanishes, so the kernel is
/// `M_c · ker(M_a)` for the `a`-rows/`c`-rows split of the flattened relation
/// matrix. The kernel is a `ℤ[G]`-submodule, so re-adding translates on
/// flattening loses nothing.
pub fn build_b(alpha: &Epimorphism) -> ModulePresentation {
    let a = build_a(alpha);
    let m = a.flatten();
    let order = a.group_order();
    let a_rows: Vec<usize> = (0..3 * order).collect();
    let c_rows: Vec<usize> = (3 * order..6 * order).collect();
    let m_a = m.select_rows(&a_rows);
    let m_c = m.select_rows(&c_rows);
    let ker_a = kernel(&m_a);
    let k = hnf(&m_c.mul(&ker_a));

    // convert kernel columns to ZG-relation vectors on c1,c2,c3
    let group = alpha.group();
    let mut relations = Vec::new();
    for ci in 0..k.cols() {
        let mut coords = vec![GroupRingElem::zero(group); 3];
        for (r, v) in k.column(ci) {
            let gen = r / order;
            let g = group.elem_at(r % order);
            let mono = GroupRingElem::monomial(group, g).scale(&v);
            coords[gen] = coords[gen].add(&mono);
        }
        relations.push(Relation::new(format!("ker{ci}"), coords));
    }
    ModulePresentation {
        epi: alpha.clone(),
        gen_names: GEN_NAMES_LATENT.iter().map(|s| s.to_string()).collect(),
        relations,
        boundary: None,
    }
}

/// The single-linking-relation model of the latent submodule for the
/// degree-`m` Fermat covering: generators `c₁,c₂,c₃`, each invariant under
/// the product of the two complementary translations (so each generator
/// really lives over a quotient ring), tied by the one relation
/// `(t₁−1)(t₃−1)c₁ = (t₂−1)(t₃−1)c₂ + (t₁−1)(t₃−1)c₃`.
///
/// The linking relation is the syzygy of the boundary coefficients: scaling
/// the three mixed relations by `(t₁−1), −(t₂−1), −(t₃−1)` cancels every
/// `a`-generator and leaves exactly this combination of the `c`-s.
pub fn build_b_onerelator(m: u64) -> ModulePresentation {
    assert!(m >= 1);
    let alpha = fermat_epimorphism(m);
    let g = alpha.group();
    let zero = || GroupRingElem::zero(g);
    let one = GroupRingElem::one(g);
    let inv = |i: usize, j: usize| {
        ring_mul(&t(&alpha, i), &t(&alpha, j)).expect("same group").sub(&one)
    };
    let p13 = ring_mul(&t_minus_one(&alpha, 1), &t_minus_one(&alpha, 3)).expect("same group");
    let p23 = ring_mul(&t_minus_one(&alpha, 2), &t_minus_one(&alpha, 3)).expect("same group");
    let relations = vec![
        Relation::new("inv_c1", vec![inv(2, 3), zero(), zero()]),
        Relation::new("inv_c2", vec![zero(), inv(1, 3), zero()]),
        Relation::new("inv_c3", vec![zero(), zero(), inv(1, 2)]),
        Relation::new("c_link", vec![p13.clone(), p23.neg(), p13.neg()]),
    ];
    ModulePresentation {
        epi: alpha,
        gen_names: GEN_NAMES_LATENT.iter().map(|s| s.to_string()).collect(),
        relations,
        boundary: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_ring::make_epimorphism;
    use crate::lattice::cokernel_group;
    use num_traits::One;

    #[test]
    fn relation_vectors_are_as_printed() {
        let alpha = fermat_epimorphism(3);
        let rels = universal_relations(&alpha);
        assert_eq!(rels.len(), 6);
        let g = alpha.group();
        let one = GroupRingElem::one(g);
        let t2t3 = ring_mul(&t(&alpha, 2), &t(&alpha, 3)).unwrap().sub(&one);
        // relation 1 = (0,0,0, t2t3 - 1, 0, 0)
        assert!(rels[0].coords[0].is_zero());
        assert_eq!(rels[0].coords[3], t2t3);
        // relation 2 = (0, t3-1, -(t2-1), t3-1, 0, 0)
        assert_eq!(rels[1].coords[1], t_minus_one(&alpha, 3));
        assert_eq!(rels[1].coords[2], t_minus_one(&alpha, 2).neg());
        assert_eq!(rels[1].coords[3], t_minus_one(&alpha, 3));
        assert!(rels[1].coords[0].is_zero());
        // every coefficient is a difference of monomials: augmentation zero
        for rel in &rels {
            for coord in &rel.coords {
                assert!(coord.augmentation().is_zero());
            }
        }
    }

    #[test]
    fn boundary_annihilates_relations() {
        // ∂₁∘∂₂ = 0: for each relation, Σ_gen coeff·∂₁(gen) = 0 in Z[G]
        let cases: Vec<Epimorphism> = vec![
            fermat_epimorphism(1),
            fermat_epimorphism(2),
            fermat_epimorphism(3),
            make_epimorphism(&[2, 4], &[vec![1, 0], vec![0, 1], vec![1, 2]]).unwrap(),
            make_epimorphism(&[5], &[vec![1], vec![2], vec![0]]).unwrap(),
        ];
        for alpha in cases {
            let p = build_a(&alpha);
            let boundary = p.boundary().unwrap();
            for rel in p.relations() {
                let mut acc = GroupRingElem::zero(alpha.group());
                for (coeff, d) in rel.coords.iter().zip(boundary) {
                    acc = acc.add(&ring_mul(coeff, d).unwrap());
                }
                assert!(acc.is_zero(), "d1(d2(rel {})) != 0", rel.name);
            }
        }
    }

    #[test]
    fn fermat_ramification_relations_are_cycles() {
        for m in 1..=4u64 {
            let p = build_tilde_a(m);
            let boundary = p.boundary().unwrap();
            for rel in p.relations() {
                let mut acc = GroupRingElem::zero(p.epimorphism().group());
                for (coeff, d) in rel.coords.iter().zip(boundary) {
                    acc = acc.add(&ring_mul(coeff, d).unwrap());
                }
                assert!(acc.is_zero());
            }
        }
    }

    #[test]
    fn trivial_covering_gives_free_module() {
        let alpha = fermat_epimorphism(1);
        let p = build_a(&alpha);
        let m = p.flatten();
        assert_eq!((m.rows(), m.cols()), (6, 6));
        let g = cokernel_group(&m);
        assert_eq!(g.rank, 6);
        assert!(g.torsion.is_empty());
    }

    #[test]
    fn flatten_dimensions_m2() {
        let p = build_a(&fermat_epimorphism(2));
        let m = p.flatten();
        assert_eq!((m.rows(), m.cols()), (48, 48));
        // universal relation columns have zero column sums
        let mut col_sums = vec![BigInt::zero(); m.cols()];
        for (_, c, v) in m.iter() {
            col_sums[c] += v;
        }
        assert!(col_sums.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn tilde_a_small_lengths() {
        // m=1: ramification kills a1,a2,a3 and the free part Z^3 remains
        let g1 = cokernel_group(&build_tilde_a(1).flatten());
        assert_eq!(g1.rank, 3);
        assert!(g1.torsion.is_empty());

        // m=2: length 18 = 8 + 18 - 7 - 1, torsion-free
        let g2 = cokernel_group(&build_tilde_a(2).flatten());
        assert_eq!(g2.rank, 18);
        assert!(g2.torsion.is_empty());

        // m=3: rank 47 = 27 + 27 - 7, torsion-free
        let g3 = cokernel_group(&build_tilde_a(3).flatten());
        assert_eq!(g3.rank, 47);
        assert!(g3.torsion.is_empty());
    }

    #[test]
    fn tilde_a_prime_small_lengths() {
        // m^3 + 2m - 2 at m = 1, 2, 3
        for (m, expected) in [(1u64, 1usize), (2, 10), (3, 31)] {
            let g = cokernel_group(&build_tilde_a_prime(m).flatten());
            assert_eq!(g.rank, expected, "m = {m}");
            assert!(g.torsion.is_empty(), "m = {m}");
        }
    }

    #[test]
    fn latent_submodule_trivial_group() {
        let alpha = fermat_epimorphism(1);
        let b = build_b(&alpha);
        let g = cokernel_group(&b.flatten());
        assert_eq!(g.rank, 3);
        assert!(g.torsion.is_empty());
    }

    #[test]
    fn onerelator_m1_is_free() {
        let b = build_b_onerelator(1);
        let g = cokernel_group(&b.flatten());
        assert_eq!(g.rank, 3);
        assert!(g.torsion.is_empty());
    }

    #[test]
    fn onerelator_matches_exact_submodule_m2() {
        let exact = cokernel_group(&build_b(&fermat_epimorphism(2)).flatten());
        let model = cokernel_group(&build_b_onerelator(2).flatten());
        assert_eq!(exact, model);
    }

    #[test]
    fn export_sidecar_roundtrip() {
        let p = build_tilde_a(2);
        let (sms, sidecar) = p.export_sidecar();
        let m = IntMatrix::from_sms(&sms).unwrap();
        assert_eq!(m, p.flatten());
        let parsed: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
        assert_eq!(parsed["generators"].as_array().unwrap().len(), 6);
        assert_eq!(parsed["relations"].as_array().unwrap().len(), 9);
        assert_eq!(parsed["group_moduli"], serde_json::json!([2, 2, 2]));
    }

    #[test]
    fn boundary_image_has_corank_one() {
        // the cokernel of ∂₁ is the augmentation Z: rank Im ∂₁ = |G| - 1
        for alpha in [
            fermat_epimorphism(2),
            fermat_epimorphism(3),
            make_epimorphism(&[6], &[vec![1], vec![2], vec![3]]).unwrap(),
        ] {
            let p = build_a(&alpha);
            let d = p.flatten_boundary();
            let rank = crate::lattice::snf(&d).len();
            assert_eq!(rank, alpha.group().order() as usize - 1);
        }
    }

    #[test]
    fn one_is_not_dropped() {
        let p = build_tilde_a(2);
        assert_eq!(p.relations().len(), 9);
        assert_eq!(p.num_gens(), 6);
        assert!(BigInt::one().is_one());
    }
}
