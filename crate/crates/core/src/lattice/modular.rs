//! Rank computation over prime fields and the prime machinery behind it.
//!
//! Modular ranks are certificates: they bound the integer rank from below and
//! agree with it for all but finitely many primes, so agreement at two random
//! 50+-bit primes certifies a Smith rank without ever being trusted alone for
//! torsion.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::Rng;

use super::IntMatrix;
use crate::{Error, Result};

const PRIME_LO: u64 = 1 << 50;
const PRIME_HI: u64 = 1 << 62;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin, valid for all `u64`.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A random prime in `[2^50, 2^62)`.
pub fn random_prime<R: Rng>(rng: &mut R) -> u64 {
    loop {
        let candidate = rng.gen_range(PRIME_LO..PRIME_HI) | 1;
        if is_prime_u64(candidate) {
            return candidate;
        }
    }
}

/// A random prime `p` in `[2^50, 2^62)` with `p ≡ 1 (mod n)`.
pub fn random_prime_one_mod<R: Rng>(rng: &mut R, n: u64) -> Result<u64> {
    assert!(n >= 1);
    let lo = PRIME_LO / n + 1;
    let hi = PRIME_HI / n;
    if lo >= hi {
        return Err(Error::PrimeSearchFailed(n));
    }
    for _ in 0..100_000 {
        let k = rng.gen_range(lo..hi);
        let candidate = k * n + 1;
        if candidate >= PRIME_LO && candidate < PRIME_HI && is_prime_u64(candidate) {
            return Ok(candidate);
        }
    }
    Err(Error::PrimeSearchFailed(n))
}

fn reduce_mod(v: &BigInt, p: u64) -> u64 {
    let m = (v % BigInt::from(p)).to_i128().expect("residue fits i128");
    let m = if m < 0 { m + p as i128 } else { m };
    m as u64
}

/// Rank of `m` over the field with `p` elements.
///
/// Errors when `p` is not prime. The result is at most the integer rank, with
/// equality for all primes not dividing the relevant invariant factors.
pub fn modular_rank(m: &IntMatrix, p: u64) -> Result<usize> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    // rows bucketed by leading column; eliminate leading entries in column order
    let mut rows: Vec<HashMap<usize, u64>> = vec![HashMap::new(); m.rows()];
    for (r, c, v) in m.iter() {
        let red = reduce_mod(v, p);
        if red != 0 {
            rows[r].insert(c, red);
        }
    }
    let leading = |row: &HashMap<usize, u64>| row.keys().min().copied();
    let mut buckets: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut store: Vec<HashMap<usize, u64>> = Vec::with_capacity(m.rows());
    for row in rows {
        if let Some(l) = leading(&row) {
            let idx = store.len();
            store.push(row);
            buckets.entry(l).or_default().push(idx);
        }
    }
    let mut rank = 0;
    for col in 0..m.cols() {
        let Some(mut bucket) = buckets.remove(&col) else { continue };
        // shortest row as pivot limits fill
        bucket.sort_by_key(|&i| store[i].len());
        let pivot_idx = bucket[0];
        rank += 1;
        let pivot_row = store[pivot_idx].clone();
        let pv = pivot_row[&col];
        let pv_inv = powmod(pv, p - 2, p);
        for &ri in &bucket[1..] {
            let factor = mulmod(store[ri][&col], pv_inv, p);
            let target = &mut store[ri];
            for (&c2, &v2) in &pivot_row {
                let delta = mulmod(factor, v2, p);
                let entry = target.entry(c2).or_insert(0);
                *entry = (*entry + p - delta) % p;
                if *entry == 0 {
                    target.remove(&c2);
                }
            }
            if let Some(l) = leading(target) {
                debug_assert!(l > col);
                buckets.entry(l).or_default().push(ri);
            }
        }
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_basics() {
        assert!(is_prime_u64(2));
        assert!(is_prime_u64((1 << 61) - 1)); // Mersenne prime
        assert!(!is_prime_u64(1));
        assert!(!is_prime_u64(561)); // Carmichael
        assert!(!is_prime_u64((1 << 62) - 1));
    }

    #[test]
    fn rank_examples() {
        let id = IntMatrix::identity(4);
        assert_eq!(modular_rank(&id, 5).unwrap(), 4);

        let m = IntMatrix::from_rows(&[vec![5]]);
        assert_eq!(modular_rank(&m, 5).unwrap(), 0);
        assert_eq!(modular_rank(&m, 7).unwrap(), 1);

        // det = -8, nonzero mod 5
        let m = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]);
        assert_eq!(modular_rank(&m, 5).unwrap(), 2);
        // every entry is even: the whole matrix vanishes mod 2
        assert_eq!(modular_rank(&m, 2).unwrap(), 0);
        // invariant factors are (2,4): mod 3 the rank is full
        assert_eq!(modular_rank(&m, 3).unwrap(), 2);
    }

    #[test]
    fn rejects_composite_modulus() {
        let id = IntMatrix::identity(2);
        assert!(matches!(modular_rank(&id, 6), Err(Error::NotPrime(6))));
    }

    #[test]
    fn prime_one_mod_n() {
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let p = random_prime_one_mod(&mut rng, 12).unwrap();
        assert!(is_prime_u64(p));
        assert_eq!(p % 12, 1);
    }
}
