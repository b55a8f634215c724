//! Dense truncated power series in `q` with exact rational coefficients.
//!
//! A [`QSeries`] of precision `p` stores the coefficients of `q^0 .. q^{p-1}`
//! and stands for the class of the series modulo `q^p`. Every operation
//! returns the largest precision that is actually determined by its inputs,
//! so unknown coefficients never leak into results.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::arith::{rat_int, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QSeriesError {
    #[error("division by zero series")]
    DivisionByZero,
    #[error("valuation mismatch: numerator valuation {numerator} < denominator valuation {denominator}")]
    ValuationMismatch { numerator: usize, denominator: usize },
    #[error("precision must be at least 1")]
    ZeroPrecision,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    coeffs: Vec<Rational>,
}

impl QSeries {
    /// Series from its first `coeffs.len()` coefficients; that length is the precision.
    pub fn from_coeffs(coeffs: Vec<Rational>) -> Result<Self, QSeriesError> {
        if coeffs.is_empty() {
            return Err(QSeriesError::ZeroPrecision);
        }
        Ok(Self { coeffs })
    }

    pub fn from_integers<I, T>(coeffs: I) -> Result<Self, QSeriesError>
    where
        I: IntoIterator<Item = T>,
        T: Into<BigInt>,
    {
        Self::from_coeffs(coeffs.into_iter().map(rat_int).collect())
    }

    /// Polynomial given by `terms` (exponent, coefficient), truncated at `prec`.
    pub fn from_terms(terms: &[(usize, i64)], prec: usize) -> Result<Self, QSeriesError> {
        let mut s = Self::zero(prec)?;
        for &(e, c) in terms {
            if e < prec {
                s.coeffs[e] += rat_int(c);
            }
        }
        Ok(s)
    }

    pub fn zero(prec: usize) -> Result<Self, QSeriesError> {
        if prec == 0 {
            return Err(QSeriesError::ZeroPrecision);
        }
        Ok(Self {
            coeffs: vec![Rational::zero(); prec],
        })
    }

    pub fn one(prec: usize) -> Result<Self, QSeriesError> {
        Self::monomial(0, prec)
    }

    /// `q^exponent` modulo `q^prec`.
    pub fn monomial(exponent: usize, prec: usize) -> Result<Self, QSeriesError> {
        let mut s = Self::zero(prec)?;
        if exponent < prec {
            s.coeffs[exponent] = Rational::one();
        }
        Ok(s)
    }

    /// Exclusive truncation order.
    pub fn prec(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `q^n`, `None` when `n` is beyond the precision.
    pub fn coeff(&self, n: usize) -> Option<&Rational> {
        self.coeffs.get(n)
    }

    /// Index of the first nonzero coefficient; `None` when the series vanishes
    /// to its whole precision.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    /// Leading coefficient, if any.
    pub fn leading(&self) -> Option<&Rational> {
        self.valuation().map(|v| &self.coeffs[v])
    }

    pub fn truncate(&self, prec: usize) -> Self {
        assert!(prec >= 1, "truncation to zero precision");
        let prec = prec.min(self.prec());
        Self {
            coeffs: self.coeffs[..prec].to_vec(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiply by `q^n`; the precision grows by `n`.
    pub fn shift(&self, n: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); n];
        coeffs.extend(self.coeffs.iter().cloned());
        Self { coeffs }
    }

    /// Series with the same leading term scaled to 1. Zero series are returned unchanged.
    pub fn normalized(&self) -> Self {
        match self.leading() {
            Some(lead) => {
                let inv = lead.recip();
                self.scale(&inv)
            }
            None => self.clone(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        let prec = self.prec().min(other.prec());
        Self {
            coeffs: self.coeffs[..prec]
                .iter()
                .zip(&other.coeffs[..prec])
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Self) -> Self {
        let prec = self.prec().min(other.prec());
        let mut out = vec![Rational::zero(); prec];
        for (i, a) in self.coeffs[..prec].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..prec - i].iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self { coeffs: out }
    }

    /// Exact quotient `self / other`. The common power of `q` is cancelled
    /// first, which costs `valuation(other)` coefficients of precision.
    pub fn div(&self, other: &Self) -> Result<Self, QSeriesError> {
        let shift = other.valuation().ok_or(QSeriesError::DivisionByZero)?;
        if let Some(v) = self.valuation() {
            if v < shift {
                return Err(QSeriesError::ValuationMismatch {
                    numerator: v,
                    denominator: shift,
                });
            }
        }
        let prec = self.prec().min(other.prec()) - shift;
        if prec == 0 {
            return Err(QSeriesError::ZeroPrecision);
        }
        let num = &self.coeffs[shift..shift + prec];
        let den = &other.coeffs[shift..shift + prec];
        let lead_inv = den[0].recip();
        let mut out: Vec<Rational> = Vec::with_capacity(prec);
        for n in 0..prec {
            let mut acc = num[n].clone();
            for (j, c) in out.iter().enumerate().take(n) {
                let d = &den[n - j];
                if !d.is_zero() && !c.is_zero() {
                    acc -= c * d;
                }
            }
            out.push(acc * &lead_inv);
        }
        Ok(Self { coeffs: out })
    }

    /// Integer power by repeated squaring. Negative exponents go through
    /// [`QSeries::div`] and therefore require a nonzero constant term.
    pub fn pow(&self, e: i64) -> Result<Self, QSeriesError> {
        let mut base = if e < 0 {
            Self::one(self.prec())?.div(self)?
        } else {
            self.clone()
        };
        let mut n = e.unsigned_abs();
        let mut acc = Self::one(base.prec())?;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    /// The substitution `q -> q^n`; precision is multiplied by `n`.
    pub fn dilate(&self, n: usize) -> Self {
        assert!(n >= 1, "dilation factor must be positive");
        let mut coeffs = vec![Rational::zero(); self.prec() * n];
        for (j, c) in self.coeffs.iter().enumerate() {
            coeffs[j * n] = c.clone();
        }
        Self { coeffs }
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }
}

/// Expansion of `prod_{n>=1} (1 - q^{m n})^e` modulo `q^prec`.
///
/// Each factor `(1 - q^s)^e` is expanded by its binomial series and folded in
/// with a sparse product, so the cost does not depend on `|e|`.
pub fn euler_factor(m: usize, e: i64, prec: usize) -> Result<QSeries, QSeriesError> {
    assert!(m >= 1, "euler_factor needs m >= 1");
    if prec == 0 {
        return Err(QSeriesError::ZeroPrecision);
    }
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); prec];
    acc[0] = BigInt::one();
    if e != 0 {
        let mut s = m;
        while s < prec {
            let binom = binomial_series(e, (prec - 1) / s);
            let mut next = vec![BigInt::zero(); prec];
            for (i, a) in acc.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (j, b) in binom.iter().enumerate() {
                    let idx = i + j * s;
                    if idx >= prec {
                        break;
                    }
                    next[idx] += a * b;
                }
            }
            acc = next;
            s += m;
        }
    }
    QSeries::from_integers(acc)
}

/// Coefficients of `(1 - x)^e` up to `x^len`.
fn binomial_series(e: i64, len: usize) -> Vec<BigInt> {
    // c_{j+1} = c_j * (j - e) / (j + 1)
    let mut out = Vec::with_capacity(len + 1);
    let mut c = BigInt::one();
    for j in 0..=len as i64 {
        out.push(c.clone());
        c = c * BigInt::from(j - e) / BigInt::from(j + 1);
    }
    out
}

impl Add for &QSeries {
    type Output = QSeries;
    fn add(self, rhs: &QSeries) -> QSeries {
        QSeries::add(self, rhs)
    }
}

impl Sub for &QSeries {
    type Output = QSeries;
    fn sub(self, rhs: &QSeries) -> QSeries {
        QSeries::sub(self, rhs)
    }
}

impl Mul for &QSeries {
    type Output = QSeries;
    fn mul(self, rhs: &QSeries) -> QSeries {
        QSeries::mul(self, rhs)
    }
}

impl Neg for &QSeries {
    type Output = QSeries;
    fn neg(self) -> QSeries {
        QSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Renders `c0 + c1*q + c2*q^2 + ... + O(q^prec)`, skipping zero terms.
impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let negative = c.is_negative();
            if first {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            first = false;
            let mag = c.abs();
            let unit = mag.is_one();
            match e {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !unit {
                        write!(f, "{mag}*")?;
                    }
                    if e == 1 {
                        write!(f, "q")?;
                    } else {
                        write!(f, "q^{e}")?;
                    }
                }
            }
        }
        if first {
            write!(f, "O(q^{})", self.prec())
        } else {
            write!(f, " + O(q^{})", self.prec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    fn s(coeffs: &[i64]) -> QSeries {
        QSeries::from_integers(coeffs.iter().copied()).unwrap()
    }

    // Brute force: multiply the factors (1 - q^n)^{sign} one at a time, |e| times each.
    fn euler_factor_oracle(e: i64, prec: usize) -> Vec<i64> {
        let mut c = vec![0i64; prec];
        c[0] = 1;
        for n in 1..prec {
            for _ in 0..e.abs() {
                if e > 0 {
                    for i in (n..prec).rev() {
                        c[i] -= c[i - n];
                    }
                } else {
                    for i in n..prec {
                        c[i] += c[i - n];
                    }
                }
            }
        }
        c
    }

    #[test]
    fn add_examples() {
        assert_eq!(&s(&[1, 1]) + &s(&[1, -1]), s(&[2, 0]));
        let x = s(&[3, 0, 7, 1]);
        assert_eq!(&QSeries::zero(4).unwrap() + &x, x);
        assert_eq!(&s(&[0, 1, 3]) + &s(&[0, 0, 2]), s(&[0, 1, 5]));
        assert_eq!((&s(&[1, 2, 3]) + &s(&[1, 1])).prec(), 2);
    }

    #[test]
    fn mul_examples() {
        assert_eq!(&s(&[1, 1, 0]) * &s(&[1, -1, 0]), s(&[1, 0, -1]));
        let x = s(&[2, -1, 5]);
        assert_eq!(&QSeries::one(3).unwrap() * &x, x);
        let ones = s(&[1; 8]);
        assert_eq!(&ones * &ones, s(&[1, 2, 3, 4, 5, 6, 7, 8]));
    }

    #[test]
    fn div_examples() {
        assert_eq!(s(&[1, 0, -1, 0]).div(&s(&[1, -1, 0, 0])).unwrap(), s(&[1, 1, 0, 0]));
        let x = s(&[3, 1, 4, 1, 5]);
        assert_eq!(x.div(&x).unwrap(), QSeries::one(5).unwrap());
        // shift case loses one coefficient of precision
        assert_eq!(s(&[0, 0, 1, 1, 0]).div(&s(&[0, 1, 0, 0, 0])).unwrap(), s(&[0, 1, 1, 0]));
    }

    #[test]
    fn div_errors() {
        let z = QSeries::zero(5).unwrap();
        assert_eq!(s(&[1, 2]).div(&z), Err(QSeriesError::DivisionByZero));
        assert_eq!(
            s(&[0, 1, 0]).div(&s(&[0, 0, 1])),
            Err(QSeriesError::ValuationMismatch {
                numerator: 1,
                denominator: 2
            })
        );
    }

    #[test]
    fn pow_examples() {
        assert_eq!(s(&[1, 1, 0, 0]).pow(0).unwrap(), QSeries::one(4).unwrap());
        assert_eq!(s(&[1, -1, 0, 0, 0]).pow(-1).unwrap(), s(&[1, 1, 1, 1, 1]));
        // (1-q)^{-8} = sum C(n+7, 7) q^n
        let oracle: Vec<i64> = (0..6).map(|n| (1..=7).fold(1, |acc, i| acc * (n + i) / i)).collect();
        assert_eq!(s(&[1, -1, 0, 0, 0, 0]).pow(-8).unwrap(), s(&oracle));
        assert_eq!(&oracle[..3], &[1, 8, 36]);
        assert!(QSeries::zero(3).unwrap().pow(-2).is_err());
    }

    #[test]
    fn euler_factor_examples() {
        let d = euler_factor(1, 24, 3).unwrap().shift(1);
        assert_eq!(d, s(&[0, 1, -24, 252]));
        assert_eq!(euler_factor(2, 1, 3).unwrap(), s(&[1, 0, -1]));
        let inv8 = euler_factor(1, -8, 3).unwrap();
        assert_eq!(inv8, s(&euler_factor_oracle(-8, 3)));
        assert_eq!(inv8, s(&[1, 8, 44]));
    }

    #[test]
    fn euler_factor_matches_brute_force() {
        for e in [-24, -8, -3, -1, 1, 2, 5, 24] {
            assert_eq!(
                euler_factor(1, e, 30).unwrap(),
                s(&euler_factor_oracle(e, 30)),
                "e = {e}"
            );
        }
    }

    #[test]
    fn dilate_examples() {
        assert_eq!(s(&[1, 1]).dilate(3), s(&[1, 0, 0, 1, 0, 0]));
        let x = s(&[4, 0, 2]);
        assert_eq!(x.dilate(1), x);
        assert_eq!(s(&[0, 1, -24]).dilate(2), s(&[0, 0, 1, 0, -24, 0]));
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(s(&[0, 0, 0, 1, 0, 1]).valuation(), Some(3));
        assert_eq!(QSeries::one(4).unwrap().valuation(), Some(0));
        assert_eq!(QSeries::zero(10).unwrap().valuation(), None);
    }

    #[test]
    fn rendering() {
        let d = euler_factor(1, 24, 3).unwrap().shift(1);
        assert_eq!(d.to_string(), "q - 24*q^2 + 252*q^3 + O(q^4)");
        let r = QSeries::from_coeffs(vec![rat(-1, 2), rat(0, 1), rat(3, 4), rat(-1, 1)]).unwrap();
        assert_eq!(r.to_string(), "-1/2 + 3/4*q^2 - q^3 + O(q^4)");
        assert_eq!(QSeries::zero(7).unwrap().to_string(), "O(q^7)");
        assert_eq!(s(&[1, 12]).to_string(), "1 + 12*q + O(q^2)");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn series(len: usize) -> impl Strategy<Value = QSeries> {
            proptest::collection::vec(-20i64..20, len).prop_map(|v| s(&v))
        }

        fn unit_series(len: usize) -> impl Strategy<Value = QSeries> {
            (1i64..6, proptest::collection::vec(-20i64..20, len - 1)).prop_map(|(c0, rest)| {
                let mut v = vec![c0];
                v.extend(rest);
                s(&v)
            })
        }

        proptest! {
            #[test]
            fn ring_axioms(a in series(8), b in series(8), c in series(8)) {
                prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
                prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
                prop_assert_eq!(&a * &b, &b * &a);
                prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            }

            #[test]
            fn div_then_mul_recovers(a in unit_series(10), b in series(10), shift in 0usize..3) {
                let a = a.shift(shift).truncate(10);
                let b = b.shift(shift).truncate(10);
                if b.valuation().is_some_and(|v| v < shift) { return Ok(()); }
                let q = b.div(&a).unwrap();
                let back = &a * &q;
                prop_assert_eq!(back, b.truncate(q.prec()));
            }

            #[test]
            fn euler_factor_is_power_of_base(m in 1usize..4, e in -6i64..7, prec in 1usize..25) {
                let base = euler_factor(m, 1, prec).unwrap();
                prop_assert_eq!(euler_factor(m, e, prec).unwrap(), base.pow(e).unwrap());
            }

            #[test]
            fn dilation_is_multiplicative(a in series(6), b in series(6), n in 1usize..4) {
                prop_assert_eq!((&a * &b).dilate(n), &a.dilate(n) * &b.dilate(n));
            }
        }
    }
}
