//! The strong modular unit `Delta_N` for every level `N >= 1`.
//!
//! The construction works on the prime factorization of `N`: a core eta
//! quotient is chosen at a small level (the radical of `N`, or 4 / 9 for
//! the powers of 2 and 3) and then dilated by `tau -> d tau` up to level `N`.
//! Dilation keeps the weight and multiplies the valuation by `d`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{self, ArithError, Factorization};
use crate::etaquot::{EtaError, EtaQuotient};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeltaUnit {
    pub level: u64,
    /// Undilated quotient.
    pub core: EtaQuotient,
    /// `quotient = core.dilate(dilation)`.
    pub dilation: u64,
    pub quotient: EtaQuotient,
    /// Weight `rho_N`.
    pub rho: i64,
    /// Valuation at infinity.
    pub nu: i64,
}

fn core_quotient(level: u64, exps: &[(u64, i64)]) -> EtaQuotient {
    EtaQuotient::new(level, exps.iter().copied()).expect("core exponents sit on divisors")
}

/// `prod eta(m tau)^{alpha(m) m}` over the divisors `m` of a squarefree
/// `rad`, with sign `(-1)^{(number of primes of rad) - (number of primes of m)}`.
fn alternating_core(primes: &[u64]) -> EtaQuotient {
    let n = primes.len();
    let rad: u64 = primes.iter().product();
    let mut exps = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let m: u64 = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| primes[i]).product();
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) {
            1
        } else {
            -1
        };
        exps.push((m, sign * m as i64));
    }
    core_quotient(rad, &exps)
}

fn core_and_dilation(level: u64, fac: &Factorization) -> (EtaQuotient, u64) {
    match *fac.pairs() {
        [] => (core_quotient(1, &[(1, 24)]), 1),
        [(2, 1)] => (core_quotient(2, &[(1, -8), (2, 16)]), 1),
        [(2, r)] => (core_quotient(4, &[(2, -4), (4, 8)]), 2u64.pow(r - 2)),
        [(3, 1)] => (core_quotient(3, &[(1, -6), (3, 18)]), 1),
        [(3, r)] => (core_quotient(9, &[(3, -2), (9, 6)]), 3u64.pow(r - 2)),
        [(p, r)] => (core_quotient(p, &[(1, -2), (p, 2 * p as i64)]), p.pow(r - 1)),
        [(2, _), (p, _)] => {
            let core = core_quotient(2 * p, &[(1, 2), (2, -4), (p, -2 * p as i64), (2 * p, 4 * p as i64)]);
            (core, level / (2 * p))
        }
        [(p1, _), (p2, _)] => {
            let core = core_quotient(
                p1 * p2,
                &[
                    (1, 1),
                    (p1, -(p1 as i64)),
                    (p2, -(p2 as i64)),
                    (p1 * p2, (p1 * p2) as i64),
                ],
            );
            (core, level / (p1 * p2))
        }
        _ => {
            let primes: Vec<u64> = fac.primes().collect();
            (alternating_core(&primes), level / fac.radical())
        }
    }
}

/// Builds `Delta_N`.
pub fn delta_unit(level: u64) -> Result<DeltaUnit, EtaError> {
    let fac = arith::factorize(level)?;
    let (core, dilation) = core_and_dilation(level, &fac);
    let quotient = core.dilate(dilation);
    debug_assert_eq!(quotient.level(), level);
    let rho = quotient.weight()?;
    let nu = quotient.valuation();
    debug_assert!(nu.is_integer());
    let nu: i64 = nu.to_integer().try_into().expect("valuation fits in i64");
    Ok(DeltaUnit {
        level,
        core,
        dilation,
        quotient,
        rho,
        nu,
    })
}

/// Serializable summary of a [`DeltaUnit`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub schema: u32,
    #[serde(rename = "N")]
    pub level: u64,
    pub exponents: BTreeMap<u64, i64>,
    pub rho: i64,
    pub nu: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<String>,
}

impl DeltaUnit {
    /// Report with the q-expansion to `expand` coefficients when requested.
    pub fn report(&self, expand: Option<usize>) -> Result<DeltaReport, EtaError> {
        let expansion = match expand {
            Some(prec) => Some(self.quotient.expand(prec)?.to_string()),
            None => None,
        };
        Ok(DeltaReport {
            schema: 1,
            level: self.level,
            exponents: self.quotient.exponents().clone(),
            rho: self.rho,
            nu: self.nu,
            expansion,
        })
    }
}

/// Closed-form weight of `Delta_N`.
pub fn rho(level: u64) -> Result<i64, ArithError> {
    let fac = arith::factorize(level)?;
    let odd_part: i64 = fac.primes().filter(|&p| p != 2).map(|p| p as i64 - 1).product();
    Ok(match *fac.pairs() {
        [] => 12,
        [(2, 1)] => 4,
        [(2, _)] => 2,
        [(3, 1)] => 6,
        [(3, _)] => 2,
        [(p, _)] => p as i64 - 1,
        [(2, _), (p, _)] => p as i64 - 1,
        _ => odd_part / 2,
    })
}

/// Closed-form valuation of `Delta_N`.
pub fn nu(level: u64) -> Result<i64, ArithError> {
    let fac = arith::factorize(level)?;
    let sq = |p: u64| (p as i64) * (p as i64) - 1;
    // N / rad(N)
    let dilation: i64 = fac.pairs().iter().map(|&(p, r)| (p as i64).pow(r - 1)).product();
    Ok(match *fac.pairs() {
        [] => 1,
        [(2, 1)] => 1,
        [(2, r)] => 2i64.pow(r - 2),
        [(3, 1)] => 2,
        [(3, r)] => 2 * 3i64.pow(r - 2),
        [(p, _)] => dilation * sq(p) / 12,
        [(2, _), (p, _)] => dilation * sq(p) / 4,
        _ => dilation * fac.primes().map(sq).product::<i64>() / 24,
    })
}
