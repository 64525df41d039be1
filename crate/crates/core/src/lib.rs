//! Exact computational algebra for abelian plane coverings branched over the
//! Ceva-7 line arrangement, and for the lattice spanned by the `3m²` lines on
//! the degree-`m` Fermat surface.
//!
//! Everything here is exact integer arithmetic: module presentations over
//! group rings `ℤ[G]` of finite abelian groups are flattened to sparse integer
//! matrices, and ranks, lengths and ℤ-torsion are read off Smith normal forms.
//! Modular ranks at large random primes serve as certificates for every normal
//! form, never as final answers.
//!
//! Module map:
//!
//! - [`lattice`] — sparse arbitrary-precision integer matrices, Smith/Hermite
//!   normal forms, kernels, lattice intersections, modular rank.
//! - [`group_ring`] — finite abelian groups, epimorphisms `ℤ³ ↠ G`, the group
//!   ring `ℤ[G]`, characters.
//! - [`alexander`] — presentations of the modules attached to a covering:
//!   the six-generator module of the branch complement, its Fermat quotients,
//!   and the three-generator submodule spanned by the latent generators.
//! - [`homology`] — turning presentations into finitely generated abelian
//!   groups: rank, length, torsion, subgroups, quotients, character ranks.
//! - [`fermat_lines`] — the `3m²` lines on the Fermat surface, their exact
//!   intersection Gram matrix, rank and discriminant of the spanned lattice.
//! - [`filtration`] — the seven-step filtration of the Fermat module and its
//!   per-step length ledger.
//! - [`coverings`] — covering-level checks: first homology of the covering
//!   surface, the unramified-line criterion, and batch searches over
//!   epimorphism classes.

pub mod alexander;
pub mod coverings;
pub mod fermat_lines;
pub mod filtration;
pub mod group_ring;
pub mod homology;
pub mod lattice;
pub mod report;

/// Crate version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parity indicator: 1 for even `m`, 0 for odd.
pub fn delta(m: u64) -> usize {
    usize::from(m % 2 == 0)
}

/// Errors surfaced by the public operations.
///
/// Internal arithmetic invariants (e.g. a Smith normal form disagreeing with
/// its modular-rank certificate) are bugs, not user errors, and panic instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("group moduli must be positive, got {0}")]
    InvalidModulus(u64),
    #[error("images do not generate the target group")]
    NotSurjective,
    #[error("group ring elements belong to different groups")]
    GroupMismatch,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("no suitable prime found (need p = 1 mod {0})")]
    PrimeSearchFailed(u64),
    #[error("character ranks disagree at three primes")]
    CharacterRankDisagreement,
    #[error("degree {0} has infinitely many lines; need m >= 3")]
    DegreeTooSmall(u64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("matrix parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
