//! Integer and rational helpers: factorization, divisors, the divisor-power
//! sums, Euler's totient, Bernoulli numbers and the two Kronecker symbols
//! that appear in the elliptic-point counts.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

/// Exact rational scalar used throughout the crate.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("argument must be positive, got {0}")]
    NonPositive(i64),
    #[error("Bernoulli index must be even and at least 2, got {0}")]
    BadBernoulliIndex(u32),
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// Build a rational from a pair of machine integers.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: impl Into<BigInt>) -> Rational {
    BigRational::from_integer(n.into())
}

/// Prime factorization as `(prime, exponent)` pairs with increasing primes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn pairs(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    /// Number of distinct prime factors.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Exponent of `p` in the factored integer (zero when `p` does not divide it).
    pub fn valuation(&self, p: u64) -> u32 {
        self.factors.iter().find(|&&(q, _)| q == p).map_or(0, |&(_, e)| e)
    }

    /// Product of the distinct primes.
    pub fn radical(&self) -> u64 {
        self.primes().product()
    }

    pub fn value(&self) -> u64 {
        self.factors.iter().map(|&(p, e)| p.pow(e)).product()
    }

    pub fn divisor_count(&self) -> usize {
        self.factors.iter().map(|&(_, e)| e as usize + 1).product()
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for the whole `u64` range.
pub fn is_prime(n: u64) -> bool {
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for a in SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Trial division, stopping early once the cofactor is prime. Meant for
/// levels, not for cryptographic sizes.
pub fn factorize(n: u64) -> Result<Factorization, ArithError> {
    if n == 0 {
        return Err(ArithError::NonPositive(0));
    }
    let mut factors = Vec::new();
    let mut rest = n;
    let mut p = 2u64;
    while rest > 1 {
        if is_prime(rest) {
            factors.push((rest, 1));
            break;
        }
        if rest.is_multiple_of(p) {
            let mut e = 0;
            while rest.is_multiple_of(p) {
                rest /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    factors.sort_unstable();
    Ok(Factorization { factors })
}

/// All positive divisors of `n`, increasing.
pub fn divisors(n: u64) -> Result<Vec<u64>, ArithError> {
    let fac = factorize(n)?;
    let mut divs = vec![1u64];
    for &(p, e) in fac.pairs() {
        let current = divs.clone();
        let mut pk = 1u64;
        for _ in 0..e {
            pk *= p;
            divs.extend(current.iter().map(|d| d * pk));
        }
    }
    divs.sort_unstable();
    Ok(divs)
}

/// Sum of `d^k` over the positive divisors `d` of `n`.
pub fn sigma(k: u32, n: u64) -> Result<BigInt, ArithError> {
    if k == 0 {
        return Err(ArithError::NonPositive(0));
    }
    let fac = factorize(n)?;
    // multiplicative: sigma_k(p^e) = 1 + p^k + ... + p^{ek}
    let mut acc = BigInt::one();
    for &(p, e) in fac.pairs() {
        let pk: BigInt = Pow::pow(BigInt::from(p), k);
        let mut term = BigInt::one();
        let mut local = BigInt::one();
        for _ in 0..e {
            term *= &pk;
            local += &term;
        }
        acc *= local;
    }
    Ok(acc)
}

pub fn euler_phi(n: u64) -> Result<u64, ArithError> {
    let fac = factorize(n)?;
    Ok(fac.pairs().iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product())
}

fn bernoulli_cache() -> &'static Mutex<HashMap<u32, Rational>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Rational>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The `m`-th Bernoulli number for even `m >= 2` (Akiyama-Tanigawa table, memoized).
pub fn bernoulli(m: u32) -> Result<Rational, ArithError> {
    if m < 2 || m % 2 == 1 {
        return Err(ArithError::BadBernoulliIndex(m));
    }
    if let Some(b) = bernoulli_cache().lock().unwrap().get(&m) {
        return Ok(b.clone());
    }
    let mut row: Vec<Rational> = Vec::with_capacity(m as usize + 1);
    for j in 0..=m as i64 {
        row.push(rat(1, j + 1));
        for i in (1..=j as usize).rev() {
            let diff = &row[i - 1] - &row[i];
            row[i - 1] = diff * rat_int(i as i64);
        }
    }
    let b = row.swap_remove(0);
    bernoulli_cache().lock().unwrap().insert(m, b.clone());
    Ok(b)
}

/// Kronecker symbol `(-4/p)` at a prime `p`.
pub fn kronecker_minus4(p: u64) -> Result<i8, ArithError> {
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    Ok(match p % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    })
}

/// Kronecker symbol `(-3/p)` at a prime `p`.
pub fn kronecker_minus3(p: u64) -> Result<i8, ArithError> {
    if !is_prime(p) {
        return Err(ArithError::NotPrime(p));
    }
    Ok(match p % 3 {
        1 => 1,
        2 => -1,
        _ => 0,
    })
}

/// Greatest common divisor on `u64`.
pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// True when the rational is the square of a rational. In lowest terms this
/// holds iff numerator and denominator are both perfect squares.
pub fn is_rational_square(r: &Rational) -> bool {
    if r.is_zero() {
        return true;
    }
    if r.numer() < &BigInt::zero() {
        return false;
    }
    is_integer_square(r.numer()) && is_integer_square(r.denom())
}

fn is_integer_square(n: &BigInt) -> bool {
    let root = n.sqrt();
    &(&root * &root) == n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_divisors(n: u64) -> Vec<u64> {
        (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
    }

    // Independent route: sum_{j=0}^{m} C(m+1, j) B_j = 0 with B_0 = 1.
    fn bernoulli_by_recurrence(max: usize) -> Vec<Rational> {
        let mut b = vec![rat(1, 1)];
        for m in 1..=max {
            let mut s = rat(0, 1);
            let mut binom = BigInt::one();
            for (j, bj) in b.iter().enumerate() {
                s += bj * rat_int(binom.clone());
                binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
            }
            b.push(-s / rat_int(m as i64 + 1));
        }
        b
    }

    #[test]
    fn factorize_examples() {
        assert!(factorize(1).unwrap().is_empty());
        assert_eq!(factorize(60).unwrap().pairs(), &[(2, 2), (3, 1), (5, 1)]);
        assert_eq!(factorize(210).unwrap().pairs(), &[(2, 1), (3, 1), (5, 1), (7, 1)]);
        assert_eq!(factorize(0), Err(ArithError::NonPositive(0)));
        let big = 1_000_003u64 * 999_983;
        assert_eq!(factorize(big).unwrap().pairs(), &[(999_983, 1), (1_000_003, 1)]);
    }

    #[test]
    fn divisor_examples() {
        assert_eq!(divisors(1).unwrap(), vec![1]);
        assert_eq!(divisors(12).unwrap(), vec![1, 2, 3, 4, 6, 12]);
        for p in [3u64, 5, 7, 11] {
            assert_eq!(divisors(2 * p).unwrap(), vec![1, 2, p, 2 * p]);
        }
        assert!(divisors(0).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(1, 1).unwrap(), BigInt::from(1));
        assert_eq!(sigma(3, 2).unwrap(), BigInt::from(9));
        assert_eq!(sigma(1, 6).unwrap(), BigInt::from(12));
        assert!(sigma(0, 4).is_err());
        assert!(sigma(1, 0).is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(euler_phi(6).unwrap(), 2);
        assert_eq!(euler_phi(9).unwrap(), 6);
        assert!(euler_phi(0).is_err());
    }

    #[test]
    fn phi_matches_counting() {
        for n in 1..=1000u64 {
            let count = (1..=n).filter(|&m| gcd(m, n) == 1).count() as u64;
            assert_eq!(euler_phi(n).unwrap(), count, "n = {n}");
        }
    }

    #[test]
    fn bernoulli_examples() {
        assert_eq!(bernoulli(2).unwrap(), rat(1, 6));
        assert_eq!(bernoulli(4).unwrap(), rat(-1, 30));
        assert_eq!(bernoulli(12).unwrap(), rat(-691, 2730));
        assert!(bernoulli(3).is_err());
        assert!(bernoulli(0).is_err());
    }

    #[test]
    fn bernoulli_matches_recurrence() {
        let oracle = bernoulli_by_recurrence(40);
        for m in (2..=40u32).step_by(2) {
            assert_eq!(bernoulli(m).unwrap(), oracle[m as usize], "B_{m}");
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker_minus4(2).unwrap(), 0);
        assert_eq!(kronecker_minus4(5).unwrap(), 1);
        assert_eq!(kronecker_minus4(7).unwrap(), -1);
        assert_eq!(kronecker_minus3(3).unwrap(), 0);
        assert_eq!(kronecker_minus3(7).unwrap(), 1);
        assert_eq!(kronecker_minus3(5).unwrap(), -1);
        assert_eq!(kronecker_minus4(9), Err(ArithError::NotPrime(9)));
        assert_eq!(kronecker_minus3(1), Err(ArithError::NotPrime(1)));
    }

    #[test]
    fn kronecker_matches_residue_search() {
        for p in (2..200u64).filter(|&p| is_prime(p)) {
            let has_root = |a: i64| (0..p as i64).any(|x| (x * x - a).rem_euclid(p as i64) == 0);
            let want4 = if p == 2 {
                0
            } else if has_root(-4) {
                1
            } else {
                -1
            };
            let want3 = if p == 3 {
                0
            } else if p == 2 {
                -1
            } else if has_root(-3) {
                1
            } else {
                -1
            };
            assert_eq!(kronecker_minus4(p).unwrap(), want4, "p = {p}");
            assert_eq!(kronecker_minus3(p).unwrap(), want3, "p = {p}");
        }
    }

    #[test]
    fn primality_agrees_with_trial_division() {
        for n in 0..5000u64 {
            let slow = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
            assert_eq!(is_prime(n), slow, "n = {n}");
        }
    }

    #[test]
    fn rational_squares() {
        assert!(is_rational_square(&rat(1, 256)));
        assert!(is_rational_square(&rat(9, 4)));
        assert!(!is_rational_square(&rat(1, 3)));
        assert!(!is_rational_square(&rat(-4, 1)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sigma_is_multiplicative(m in 1u64..10_000, n in 1u64..10_000, k in 1u32..4) {
                prop_assume!(gcd(m, n) == 1);
                prop_assert_eq!(sigma(k, m * n).unwrap(), sigma(k, m).unwrap() * sigma(k, n).unwrap());
            }

            #[test]
            fn sigma_matches_enumeration(n in 1u64..3000, k in 1u32..4) {
                let want: BigInt = brute_divisors(n).into_iter().map(|d| Pow::pow(BigInt::from(d), k)).sum();
                prop_assert_eq!(sigma(k, n).unwrap(), want);
            }

            #[test]
            fn divisor_count_matches_factorization(n in 1u64..100_000) {
                let fac = factorize(n).unwrap();
                prop_assert_eq!(fac.value(), n);
                prop_assert_eq!(divisors(n).unwrap().len(), fac.divisor_count());
                prop_assert!(fac.primes().all(is_prime));
            }

            #[test]
            fn rational_add_round_trips(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
                let x = rat(a, b);
                let y = rat(c, d);
                prop_assert_eq!(&(&x + &y) - &y, x);
            }
        }
    }
}
