//! Eta quotients `prod_{m | N} eta(m tau)^{a_m}` at a fixed level `N`.
//!
//! Everything here is symbolic: weight, valuation at infinity, orders at the
//! cusps `1/c`, the Ligozat-type criteria for weak modularity and for being a
//! strong modular unit, plus the q-expansion of quotients whose valuation is
//! a nonnegative integer.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, rat, rat_int, ArithError, Rational};
use crate::qseries::{euler_factor, QSeries, QSeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EtaError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Series(#[from] QSeriesError),
    #[error("{m} does not divide the level {level}")]
    NotADivisor { m: u64, level: u64 },
    #[error("odd exponent sum {0}: the weight is not an integer")]
    OddExponentSum(i64),
    #[error("fractional valuation {0}")]
    FractionalValuation(Rational),
    #[error("negative valuation {0}")]
    NegativeValuation(Rational),
    #[error("cusp parameter {c} outside 1..={level}")]
    CuspOutOfRange { c: u64, level: u64 },
    #[error("levels differ: {0} vs {1}")]
    LevelMismatch(u64, u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawEtaQuotient")]
pub struct EtaQuotient {
    level: u64,
    /// Nonzero exponents only, keyed by divisor.
    exponents: BTreeMap<u64, i64>,
}

#[derive(Deserialize)]
struct RawEtaQuotient {
    level: u64,
    exponents: BTreeMap<u64, i64>,
}

impl TryFrom<RawEtaQuotient> for EtaQuotient {
    type Error = EtaError;
    fn try_from(raw: RawEtaQuotient) -> Result<Self, EtaError> {
        EtaQuotient::new(raw.level, raw.exponents)
    }
}

impl EtaQuotient {
    /// Repeated divisors accumulate; zero exponents are dropped.
    pub fn new(level: u64, exponents: impl IntoIterator<Item = (u64, i64)>) -> Result<Self, EtaError> {
        if level == 0 {
            return Err(ArithError::NonPositive(0).into());
        }
        let mut map = BTreeMap::new();
        for (m, a) in exponents {
            if m == 0 || !level.is_multiple_of(m) {
                return Err(EtaError::NotADivisor { m, level });
            }
            *map.entry(m).or_insert(0) += a;
        }
        map.retain(|_, a| *a != 0);
        Ok(Self { level, exponents: map })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn exponents(&self) -> &BTreeMap<u64, i64> {
        &self.exponents
    }

    pub fn exponent(&self, m: u64) -> i64 {
        self.exponents.get(&m).copied().unwrap_or(0)
    }

    /// The weight `2k = (1/2) sum a_m`.
    pub fn weight(&self) -> Result<i64, EtaError> {
        let total: i64 = self.exponents.values().sum();
        if total % 2 != 0 {
            return Err(EtaError::OddExponentSum(total));
        }
        Ok(total / 2)
    }

    /// Order at infinity in `q`: `(1/24) sum m a_m`.
    pub fn valuation(&self) -> Rational {
        let s: i128 = self.exponents.iter().map(|(&m, &a)| m as i128 * a as i128).sum();
        rat_int(s) / rat(24, 1)
    }

    /// `(1/24) sum (N/m) a_m`.
    pub fn dual_valuation(&self) -> Rational {
        let s: i128 = self
            .exponents
            .iter()
            .map(|(&m, &a)| (self.level / m) as i128 * a as i128)
            .sum();
        rat_int(s) / rat(24, 1)
    }

    /// `sum gcd(c, m)^2 / m * a_m`, the cusp order without the `N/24` factor.
    fn cusp_sum(&self, c: u64) -> Rational {
        self.exponents
            .iter()
            .map(|(&m, &a)| {
                let g = arith::gcd(c, m) as i128;
                rat_int(g * g * a as i128) / rat_int(m)
            })
            .fold(Rational::zero(), |acc, x| acc + x)
    }

    /// Order at the cusp `1/c`: `(N/24) sum gcd(c, m)^2 / m * a_m`.
    pub fn cusp_order(&self, c: u64) -> Result<Rational, EtaError> {
        if c == 0 || c > self.level {
            return Err(EtaError::CuspOutOfRange { c, level: self.level });
        }
        Ok(self.cusp_sum(c) * rat_int(self.level) / rat(24, 1))
    }

    /// Orders at the cusps `1/c` for every divisor `c` of the level.
    pub fn cusp_orders(&self) -> Result<CuspOrderReport, EtaError> {
        let entries = arith::divisors(self.level)?
            .into_iter()
            .map(|c| Ok((c, self.cusp_order(c)?)))
            .collect::<Result<_, EtaError>>()?;
        Ok(CuspOrderReport {
            level: self.level,
            entries,
        })
    }

    /// Prime-exponent form of `prod (N/m)^{a_m}`.
    fn dual_product_exponents(&self) -> Result<BTreeMap<u64, i64>, EtaError> {
        let mut out: BTreeMap<u64, i64> = BTreeMap::new();
        for (&m, &a) in &self.exponents {
            for &(p, e) in arith::factorize(self.level / m)?.pairs() {
                *out.entry(p).or_insert(0) += e as i64 * a;
            }
        }
        out.retain(|_, e| *e != 0);
        Ok(out)
    }

    fn square_condition(&self) -> Result<(Rational, bool), EtaError> {
        let exps = self.dual_product_exponents()?;
        let square = exps.values().all(|e| e % 2 == 0);
        let value = exps.iter().fold(rat(1, 1), |acc, (&p, &e)| {
            let pe = rat_int(num_bigint::BigInt::from(p).pow(e.unsigned_abs() as u32));
            if e > 0 {
                acc * pe
            } else {
                acc / pe
            }
        });
        Ok((value, square))
    }

    /// The three sufficient conditions for weak modularity on `Gamma_0(N)`.
    pub fn weak_modularity(&self) -> Result<WeakModularityReport, EtaError> {
        let (square_product, square) = self.square_condition()?;
        Ok(WeakModularityReport {
            square_product,
            square,
            integral_valuation: self.valuation().is_integer(),
            integral_dual_valuation: self.dual_valuation().is_integer(),
        })
    }

    pub fn is_weakly_modular(&self) -> Result<bool, EtaError> {
        Ok(self.weak_modularity()?.holds())
    }

    /// Conditions for a strong modular unit. The vanishing of the cusp sums is
    /// checked on the divisors `c < N` only: the sum depends on `c` through
    /// `gcd(c, N)`.
    pub fn strong_unit_report(&self) -> Result<StrongUnitReport, EtaError> {
        let (square_product, square) = self.square_condition()?;
        let valuation = self.valuation();
        let positive_integral_valuation = valuation.is_integer() && valuation.is_positive();
        let mut cusp_orders = Vec::new();
        for c in arith::divisors(self.level)? {
            if c < self.level {
                cusp_orders.push((c, self.cusp_order(c)?));
            }
        }
        let nonvanishing_at_finite_cusps = cusp_orders.iter().all(|(_, o)| o.is_zero());
        let order_at_infinity = self.cusp_order(self.level)?;
        Ok(StrongUnitReport {
            square_product,
            square,
            valuation,
            positive_integral_valuation,
            cusp_orders,
            nonvanishing_at_finite_cusps,
            vanishes_at_infinity: order_at_infinity.is_positive(),
            order_at_infinity,
        })
    }

    pub fn is_strong_unit(&self) -> Result<bool, EtaError> {
        Ok(self.strong_unit_report()?.holds())
    }

    /// `q^nu * prod_m prod_n (1 - q^{m n})^{a_m}` modulo `q^prec`.
    pub fn expand(&self, prec: usize) -> Result<QSeries, EtaError> {
        let nu = self.valuation();
        if !nu.is_integer() {
            return Err(EtaError::FractionalValuation(nu));
        }
        if nu.is_negative() {
            return Err(EtaError::NegativeValuation(nu));
        }
        let shift: usize = nu.to_integer().try_into().expect("valuation fits in usize");
        if shift >= prec {
            return Ok(QSeries::zero(prec.max(1))?);
        }
        let body_prec = prec - shift;
        let mut body = QSeries::one(body_prec)?;
        for (&m, &a) in &self.exponents {
            body = body.mul(&euler_factor(m as usize, a, body_prec)?);
        }
        Ok(body.shift(shift))
    }

    /// `f(n tau)`: level `n N`, exponent of `m` moved to `n m`.
    pub fn dilate(&self, n: u64) -> EtaQuotient {
        assert!(n >= 1, "dilation factor must be positive");
        EtaQuotient {
            level: self.level * n,
            exponents: self.exponents.iter().map(|(&m, &a)| (m * n, a)).collect(),
        }
    }

    /// Product of two quotients at the same level.
    pub fn mul(&self, other: &EtaQuotient) -> Result<EtaQuotient, EtaError> {
        if self.level != other.level {
            return Err(EtaError::LevelMismatch(self.level, other.level));
        }
        EtaQuotient::new(
            self.level,
            self.exponents.iter().chain(&other.exponents).map(|(&m, &a)| (m, a)),
        )
    }

    pub fn pow(&self, n: i64) -> EtaQuotient {
        let mut out = self.clone();
        out.exponents.values_mut().for_each(|a| *a *= n);
        out.exponents.retain(|_, a| *a != 0);
        out
    }

    /// The same quotient viewed at a multiple of its level.
    pub fn at_level(&self, level: u64) -> Result<EtaQuotient, EtaError> {
        EtaQuotient::new(level, self.exponents.iter().map(|(&m, &a)| (m, a)))
    }
}

/// `eta(m*tau)^a * ...` ordered by divisor; `1` for the empty product.
impl fmt::Display for EtaQuotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponents.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .exponents
            .iter()
            .map(|(m, a)| format!("eta({m}*tau)^{a}"))
            .collect();
        write!(f, "{}", parts.join(" * "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CuspOrderReport {
    pub level: u64,
    #[serde(serialize_with = "serialize_orders")]
    pub entries: Vec<(u64, Rational)>,
}

fn serialize_orders<S: serde::Serializer>(entries: &[(u64, Rational)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (c, o) in entries {
        map.serialize_entry(&c.to_string(), &o.to_string())?;
    }
    map.end()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeakModularityReport {
    /// `prod (N/m)^{a_m}`.
    pub square_product: Rational,
    pub square: bool,
    pub integral_valuation: bool,
    pub integral_dual_valuation: bool,
}

impl WeakModularityReport {
    pub fn holds(&self) -> bool {
        self.square && self.integral_valuation && self.integral_dual_valuation
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongUnitReport {
    pub square_product: Rational,
    /// (i) `prod (N/m)^{a_m}` is a rational square.
    pub square: bool,
    pub valuation: Rational,
    /// (ii) the valuation is a positive integer.
    pub positive_integral_valuation: bool,
    /// Orders at `1/c` for the divisors `c < N`.
    pub cusp_orders: Vec<(u64, Rational)>,
    /// (iii) all of those orders vanish.
    pub nonvanishing_at_finite_cusps: bool,
    pub order_at_infinity: Rational,
    pub vanishes_at_infinity: bool,
}

impl StrongUnitReport {
    pub fn holds(&self) -> bool {
        self.square
            && self.positive_integral_valuation
            && self.nonvanishing_at_finite_cusps
            && self.vanishes_at_infinity
    }

    /// One line per condition, `ok`/`FAIL` prefixed.
    pub fn lines(&self) -> Vec<String> {
        let mark = |b: bool| if b { "ok  " } else { "FAIL" };
        let mut out = vec![
            format!(
                "{} (i)   prod (N/m)^a_m = {} is a rational square",
                mark(self.square),
                self.square_product
            ),
            format!(
                "{} (ii)  valuation (1/24) sum m*a_m = {} is a positive integer",
                mark(self.positive_integral_valuation),
                self.valuation
            ),
            format!(
                "{} (iii) order vanishes at every cusp 1/c with c | N, c < N",
                mark(self.nonvanishing_at_finite_cusps)
            ),
        ];
        for (c, o) in &self.cusp_orders {
            out.push(format!("        ord(1/{c}) = {o}"));
        }
        out.push(format!(
            "{} order at infinity (c = N) = {} is positive",
            mark(self.vanishes_at_infinity),
            self.order_at_infinity
        ));
        out
    }
}

/// Strong units among all exponent vectors with `|a_m| <= exp_bound` and
/// weight at most `max_weight`, sorted by weight, then valuation.
///
/// The exponent of `eta(N tau)` is not enumerated: the vanishing order at
/// the cusp `1/1` forces `a_N = -N sum_{m < N} a_m / m`.
pub fn search_eta_units(level: u64, max_weight: i64, exp_bound: i64) -> Result<Vec<EtaQuotient>, EtaError> {
    let divs = arith::divisors(level)?;
    if divs.len() < 2 {
        return Ok(Vec::new());
    }
    let free = &divs[..divs.len() - 1];
    let width = (2 * exp_bound + 1) as usize;
    let firsts: Vec<i64> = (-exp_bound..=exp_bound).collect();

    let scan = |a0: i64| -> Vec<EtaQuotient> {
        let mut hits = Vec::new();
        let mut digits = vec![0usize; free.len() - 1];
        loop {
            let mut exps: Vec<i64> = Vec::with_capacity(divs.len());
            exps.push(a0);
            exps.extend(digits.iter().map(|&d| d as i64 - exp_bound));
            // a_N = -N * sum a_m / m, must be an integer within the bound
            let total = free
                .iter()
                .zip(&exps)
                .fold(Rational::zero(), |acc, (&m, &a)| acc + rat(a, m as i64));
            let last = -total * rat_int(level);
            if last.is_integer() {
                let last = last.to_integer();
                if last.abs() <= exp_bound.into() {
                    let last: i64 = last.try_into().expect("bounded exponent");
                    exps.push(last);
                    let f = EtaQuotient::new(level, divs.iter().copied().zip(exps.iter().copied()))
                        .expect("divisors of the level");
                    if f.weight().is_ok_and(|w| w <= max_weight) && f.is_strong_unit().unwrap_or(false) {
                        hits.push(f);
                    }
                }
            }
            // odometer over the remaining free exponents
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return hits;
                }
                digits[i] += 1;
                if digits[i] < width {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    };

    #[cfg(feature = "parallel")]
    let mut found: Vec<EtaQuotient> = {
        use rayon::prelude::*;
        firsts.par_iter().flat_map_iter(|&a0| scan(a0)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut found: Vec<EtaQuotient> = firsts.iter().flat_map(|&a0| scan(a0)).collect();

    found.sort_by(|a, b| {
        let key = |f: &EtaQuotient| (f.weight().unwrap_or(i64::MAX), f.valuation());
        key(a).cmp(&key(b)).then_with(|| a.exponents.cmp(&b.exponents))
    });
    Ok(found)
}
