//! Dimensions of `M_{2k}`, `S_{2k}` and `E_{2k}` for `Gamma_0(N)`.

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, rat, ArithError, Rational};
use crate::delta;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("weight index k must be at least 1, got {0}")]
    BadWeight(i64),
    #[error("genus formula produced a non-integer {0} at level {1}")]
    NonIntegralGenus(Rational, u64),
}

/// Level invariants of `Gamma_0(N)`: index, elliptic point counts, cusp
/// count and genus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionProfile {
    pub level: u64,
    pub mu0: i64,
    pub mu0_2: i64,
    pub mu0_3: i64,
    pub c0: i64,
    pub g0: i64,
}

pub fn profile(level: u64) -> Result<DimensionProfile, DimError> {
    let fac = arith::factorize(level)?;
    let mut mu0 = 1i64;
    let mut mu0_2 = if level.is_multiple_of(4) { 0 } else { 1 };
    let mut mu0_3 = if level.is_multiple_of(2) || level.is_multiple_of(9) {
        0
    } else {
        1
    };
    for &(p, e) in fac.pairs() {
        mu0 *= (p as i64).pow(e) + (p as i64).pow(e - 1);
        if mu0_2 != 0 {
            mu0_2 *= 1 + i64::from(arith::kronecker_minus4(p)?);
        }
        if mu0_3 != 0 {
            mu0_3 *= 1 + i64::from(arith::kronecker_minus3(p)?);
        }
    }
    let c0 = arith::divisors(level)?
        .into_iter()
        .map(|d| arith::euler_phi(arith::gcd(d, level / d)).map(|v| v as i64))
        .sum::<Result<i64, _>>()?;
    let g = Rational::one() + rat(mu0, 12) - rat(mu0_2, 4) - rat(mu0_3, 3) - rat(c0, 2);
    if !g.is_integer() || g < Rational::zero() {
        return Err(DimError::NonIntegralGenus(g, level));
    }
    let g0 = g.to_integer().to_i64().expect("genus fits in i64");
    Ok(DimensionProfile {
        level,
        mu0,
        mu0_2,
        mu0_3,
        c0,
        g0,
    })
}

impl DimensionProfile {
    fn elliptic(&self, k: i64) -> i64 {
        self.mu0_2 * (k / 2) + self.mu0_3 * (2 * k / 3)
    }

    pub fn dim_m(&self, k: i64) -> Result<i64, DimError> {
        check_k(k)?;
        Ok((2 * k - 1) * (self.g0 - 1) + k * self.c0 + self.elliptic(k))
    }

    pub fn dim_s(&self, k: i64) -> Result<i64, DimError> {
        check_k(k)?;
        if k == 1 {
            return Ok(self.g0);
        }
        Ok((2 * k - 1) * (self.g0 - 1) + (k - 1) * self.c0 + self.elliptic(k))
    }

    pub fn dim_e(&self, k: i64) -> Result<i64, DimError> {
        check_k(k)?;
        Ok(if k == 1 { self.c0 - 1 } else { self.c0 })
    }
}

fn check_k(k: i64) -> Result<(), DimError> {
    if k < 1 {
        Err(DimError::BadWeight(k))
    } else {
        Ok(())
    }
}

/// Dimension of `M_{2k}(Gamma_0(N))`.
pub fn dim_m(level: u64, k: i64) -> Result<i64, DimError> {
    profile(level)?.dim_m(k)
}

/// Dimension of the cusp forms `S_{2k}(Gamma_0(N))`.
pub fn dim_s(level: u64, k: i64) -> Result<i64, DimError> {
    profile(level)?.dim_s(k)
}

/// Dimension of the Eisenstein part `E_{2k}(Gamma_0(N))`.
pub fn dim_e(level: u64, k: i64) -> Result<i64, DimError> {
    profile(level)?.dim_e(k)
}

/// Checks `dim M_{2k + rho_N} - dim M_{2k} = nu(Delta_N)` for `1 <= k <= k_max`.
pub fn dim_recurrence_check(level: u64, k_max: i64) -> Result<bool, DimError> {
    check_k(k_max)?;
    let prof = profile(level)?;
    let rho = delta::rho(level)?;
    let nu = delta::nu(level)?;
    debug_assert_eq!(rho % 2, 0);
    for k in 1..=k_max {
        if prof.dim_m(k + rho / 2)? - prof.dim_m(k)? != nu {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One row of a dimension report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub schema: u32,
    #[serde(rename = "N")]
    pub level: u64,
    pub k: i64,
    #[serde(rename = "dim_M")]
    pub dim_m: i64,
    #[serde(rename = "dim_S")]
    pub dim_s: i64,
    #[serde(rename = "dim_E")]
    pub dim_e: i64,
    pub profile: DimensionProfile,
}

pub fn report(level: u64, k: i64) -> Result<DimensionReport, DimError> {
    let prof = profile(level)?;
    Ok(DimensionReport {
        schema: 1,
        level,
        k,
        dim_m: prof.dim_m(k)?,
        dim_s: prof.dim_s(k)?,
        dim_e: prof.dim_e(k)?,
        profile: prof,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Index of `Gamma_0(N)`: pairs `(c, d)` mod `N` with `gcd(c, d, N) = 1`, up to units.
    fn index_by_counting(n: u64) -> i64 {
        let pairs = (0..n)
            .flat_map(|c| (0..n).map(move |d| (c, d)))
            .filter(|&(c, d)| arith::gcd(arith::gcd(c, d), n) == 1)
            .count() as i64;
        let units = (1..=n).filter(|&u| arith::gcd(u, n) == 1).count() as i64;
        pairs / units
    }

    /// Solutions of `x^2 + 1 = 0` and `x^2 + x + 1 = 0` mod `N`.
    fn elliptic_by_counting(n: u64) -> (i64, i64) {
        let two = (0..n).filter(|&x| (x * x + 1) % n == 0).count() as i64;
        let three = (0..n).filter(|&x| (x * x + x + 1) % n == 0).count() as i64;
        (two, three)
    }

    #[test]
    fn profile_examples() {
        let p = profile(1).unwrap();
        assert_eq!((p.mu0, p.mu0_2, p.mu0_3, p.c0, p.g0), (1, 1, 1, 1, 0));
        assert_eq!(profile(4).unwrap().mu0_2, 0);
        let p = profile(11).unwrap();
        assert_eq!((p.mu0, p.mu0_2, p.mu0_3, p.c0, p.g0), (12, 0, 0, 2, 1));
        assert_eq!(profile(36).unwrap().c0, 12);
        assert_eq!(profile(6).unwrap().c0, 4);
        assert!(profile(0).is_err());
    }

    #[test]
    fn profile_matches_counting() {
        for n in 2..=60u64 {
            let p = profile(n).unwrap();
            assert_eq!(p.mu0, index_by_counting(n), "index at {n}");
            assert_eq!((p.mu0_2, p.mu0_3), elliptic_by_counting(n), "elliptic at {n}");
        }
    }

    #[test]
    fn known_genera() {
        // classical genera of X_0(N)
        let table = [
            (1, 0),
            (11, 1),
            (22, 2),
            (23, 2),
            (37, 2),
            (60, 7),
            (64, 3),
            (100, 7),
            (144, 13),
        ];
        for (n, g) in table {
            assert_eq!(profile(n).unwrap().g0, g, "N = {n}");
        }
    }

    #[test]
    fn dim_examples() {
        assert_eq!(dim_s(11, 1).unwrap(), 1);
        assert_eq!(dim_s(1, 6).unwrap(), 1);
        assert_eq!(dim_s(1, 1).unwrap(), 0);
        assert_eq!(dim_e(1, 1).unwrap(), 0);
        assert_eq!(dim_e(6, 1).unwrap(), 3);
        for p in [2u64, 3, 5, 7, 101] {
            assert_eq!(dim_e(p, 2).unwrap(), 2);
        }
        assert_eq!(dim_m(2, 1).unwrap(), 1);
        assert_eq!(dim_m(3, 2).unwrap(), 2);
        assert_eq!(dim_m(3, 3).unwrap(), 3);
        for k in 1..=20 {
            assert_eq!(dim_m(2, k).unwrap(), 1 + k / 2);
        }
        assert_eq!(dim_m(2, 0), Err(DimError::BadWeight(0)));
    }

    #[test]
    fn level_one_dimensions() {
        // dim M_{2k}(SL_2(Z)) = floor(k/6) + (0 if k = 1 mod 6 else 1)
        for k in 1..=60i64 {
            let want = k / 6 + if k % 6 == 1 { 0 } else { 1 };
            assert_eq!(dim_m(1, k).unwrap(), want, "k = {k}");
        }
    }

    #[test]
    fn recurrence_examples() {
        assert!(dim_recurrence_check(5, 20).unwrap());
        assert!(dim_recurrence_check(1, 20).unwrap());
        assert!(dim_recurrence_check(36, 10).unwrap());
        assert_eq!(dim_m(5, 3).unwrap() - dim_m(5, 1).unwrap(), 2);
        assert_eq!(dim_m(36, 2).unwrap() - dim_m(36, 1).unwrap(), 12);
    }

    #[test]
    fn recurrence_up_to_100() {
        for n in 1..=100 {
            assert!(dim_recurrence_check(n, 24).unwrap(), "N = {n}");
        }
    }

    #[test]
    fn split_adds_up() {
        for n in 1..=100u64 {
            let p = profile(n).unwrap();
            for k in 1..=30 {
                assert_eq!(p.dim_m(k).unwrap(), p.dim_s(k).unwrap() + p.dim_e(k).unwrap());
            }
        }
    }

    #[test]
    fn genus_is_integral_to_ten_thousand() {
        for n in 1..=10_000u64 {
            assert!(profile(n).unwrap().g0 >= 0);
        }
    }

    #[test]
    fn report_json_shape() {
        let r = report(3, 3).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["N"], 3);
        assert_eq!(v["dim_M"], 3);
        let back: DimensionReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn recurrence_holds(n in 1u64..2000, k in 1i64..40) {
            let rho = delta::rho(n).unwrap();
            let nu = delta::nu(n).unwrap();
            prop_assert_eq!(dim_m(n, k + rho / 2).unwrap() - dim_m(n, k).unwrap(), nu);
        }

        #[test]
        fn dims_are_nonnegative(n in 1u64..2000, k in 1i64..40) {
            let p = profile(n).unwrap();
            prop_assert!(p.dim_s(k).unwrap() >= 0);
            prop_assert!(p.dim_e(k).unwrap() >= 0);
        }
    }
}
