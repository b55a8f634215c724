//! Explicit q-expansions of modular forms on `Gamma_0(N)` and unitary
//! upper triangular bases of `M_{2k}(Gamma_0(N))`.
//!
//! Seed weights `2 <= 2k <= rho_N + 2` are spanned by products of Eisenstein
//! series `E_{2j}(d tau)`, the weight 2 forms `H_d(e tau)`, the valuation 1
//! form `W_N` and `Delta_N`; elimination is exact. Higher weights follow
//! the decomposition `M_{2k} = Delta_N M_{2k - rho_N} + (heads of valuation
//! < nu(Delta_N))`.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, rat, rat_int, ArithError, Rational};
use crate::delta::{self, DeltaUnit};
use crate::dims::{self, DimError};
use crate::etaquot::EtaError;
use crate::qseries::{QSeries, QSeriesError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormsError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Series(#[from] QSeriesError),
    #[error(transparent)]
    Eta(#[from] EtaError),
    #[error("{0}")]
    Dim(String),
    #[error("Eisenstein series need an even weight >= 4, got {0}")]
    BadEisensteinWeight(u32),
    #[error("level must be at least {min}, got {got}")]
    BadLevel { got: u64, min: u64 },
    #[error("weight index k must be at least 1, got {0}")]
    BadWeight(i64),
    #[error("E4 - H^2 has vanishing q coefficient at level {0}")]
    VanishingLeadingCoefficient(u64),
    #[error("candidate {label} has level {level} and weight {weight}, expected {want_level} and {want_weight}")]
    Mismatch {
        label: String,
        level: u64,
        weight: i64,
        want_level: u64,
        want_weight: i64,
    },
    #[error("rank deficient: got {got}, expected {expected}")]
    RankDeficient { got: usize, expected: usize },
    #[error("precision insufficient: {prec} coefficients, need {needed} to separate the candidates")]
    PrecisionInsufficient { prec: usize, needed: usize },
    #[error("internal contradiction: rank {got} exceeds the dimension {expected}")]
    RankExcess { got: usize, expected: usize },
    #[error("head shortfall: {found} elements of valuation below {needed} at weight {weight}")]
    HeadShortfall { found: usize, needed: usize, weight: i64 },
}

impl From<DimError> for FormsError {
    fn from(e: DimError) -> Self {
        FormsError::Dim(e.to_string())
    }
}

/// A q-expansion together with the recipe that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormExpansion {
    pub level: u64,
    /// The weight `2k`.
    pub weight: i64,
    pub series: QSeries,
    pub label: String,
}

impl FormExpansion {
    pub fn new(level: u64, weight: i64, series: QSeries, label: impl Into<String>) -> Self {
        FormExpansion {
            level,
            weight,
            series,
            label: label.into(),
        }
    }

    pub fn valuation(&self) -> Option<usize> {
        self.series.valuation()
    }

    /// Product of two expansions; labels are merged as multisets.
    pub fn mul(&self, other: &FormExpansion) -> FormExpansion {
        FormExpansion {
            level: self.level,
            weight: self.weight + other.weight,
            series: self.series.mul(&other.series),
            label: label_product(&self.label, &other.label),
        }
    }
}

/// Splits a product label into its factors with multiplicities. Factors
/// inside parentheses are atomic.
fn parse_label(label: &str) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    if label == "1" || label.is_empty() {
        return out;
    }
    let mut depth = 0i32;
    let mut start = 0;
    let mut parts = Vec::new();
    for (i, ch) in label.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '*' if depth == 0 => {
                parts.push(&label[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&label[start..]);
    for part in parts {
        let (name, power) = match part.rfind('^') {
            Some(i) if !part[i..].contains(')') => match part[i + 1..].parse::<u32>() {
                Ok(p) => (&part[..i], p),
                Err(_) => (part, 1),
            },
            _ => (part, 1),
        };
        *out.entry(name.to_string()).or_insert(0) += power;
    }
    out
}

fn render_label(factors: &BTreeMap<String, u32>) -> String {
    if factors.is_empty() {
        return "1".to_string();
    }
    factors
        .iter()
        .map(|(name, &p)| if p == 1 { name.clone() } else { format!("{name}^{p}") })
        .collect::<Vec<_>>()
        .join("*")
}

pub fn label_product(a: &str, b: &str) -> String {
    let mut fa = parse_label(a);
    for (name, p) in parse_label(b) {
        *fa.entry(name).or_insert(0) += p;
    }
    render_label(&fa)
}

fn label_power(a: &str, n: u32) -> String {
    let fa = parse_label(a).into_iter().map(|(name, p)| (name, p * n)).collect();
    render_label(&fa)
}

/// `E_{k2} = 1 - (2 k2 / B_{k2}) sum sigma_{k2-1}(n) q^n`.
pub fn eisenstein_series(k2: u32, prec: usize) -> Result<QSeries, FormsError> {
    if k2 < 4 || k2 % 2 == 1 {
        return Err(FormsError::BadEisensteinWeight(k2));
    }
    let c = -rat(2 * i64::from(k2), 1) / arith::bernoulli(k2)?;
    let mut coeffs = Vec::with_capacity(prec);
    coeffs.push(Rational::one());
    for n in 1..prec as u64 {
        coeffs.push(&c * rat_int(arith::sigma(k2 - 1, n)?));
    }
    Ok(QSeries::from_coeffs(coeffs)?)
}

/// The weight 2 form `1 + 24/(N-1) sum (sigma(n) - N sigma(n/N)) q^n` on
/// `Gamma_0(N)`, the second term present only when `N | n`.
pub fn h2n(level: u64, prec: usize) -> Result<QSeries, FormsError> {
    if level < 2 {
        return Err(FormsError::BadLevel { got: level, min: 2 });
    }
    let scale = rat(24, level as i64 - 1);
    let mut coeffs = Vec::with_capacity(prec);
    coeffs.push(Rational::one());
    for n in 1..prec as u64 {
        let mut c = rat_int(arith::sigma(1, n)?);
        if n % level == 0 {
            c -= rat_int(arith::sigma(1, n / level)?) * rat(level as i64, 1);
        }
        coeffs.push(&scale * c);
    }
    Ok(QSeries::from_coeffs(coeffs)?)
}

/// `E_4 - H_N^2` rescaled to be monic; its valuation is 1.
pub fn weight4_val1(level: u64, prec: usize) -> Result<QSeries, FormsError> {
    let h = h2n(level, prec)?;
    let diff = eisenstein_series(4, prec)?.sub(&h.mul(&h));
    match diff.coeff(1) {
        Some(c) if !c.is_zero() => Ok(diff.normalized()),
        Some(_) => Err(FormsError::VanishingLeadingCoefficient(level)),
        None => Ok(diff),
    }
}

/// Leading coefficient of `E_4 - H_N^2`, i.e. `240 + 48/(1-N)`.
pub fn weight4_val1_leading(level: u64) -> Result<Rational, FormsError> {
    let h = h2n(level, 2)?;
    let diff = eisenstein_series(4, 2)?.sub(&h.mul(&h));
    Ok(diff.coeff(1).cloned().unwrap_or_else(Rational::zero))
}

/// `f(q^d)` to precision `prec`.
fn dilated(f: impl Fn(usize) -> Result<QSeries, FormsError>, d: u64, prec: usize) -> Result<QSeries, FormsError> {
    let d = d as usize;
    Ok(f(prec.div_ceil(d).max(1))?.dilate(d).truncate(prec))
}

fn dilated_label(base: String, d: u64) -> String {
    if d == 1 {
        base
    } else {
        format!("{base}(q^{d})")
    }
}

/// Sturm-type bound: number of leading coefficients that determine a form
/// of weight `2k` on `Gamma_0(N)`.
pub fn sturm_bound(level: u64, k: i64) -> Result<usize, FormsError> {
    let mu0 = dims::profile(level)?.mu0;
    Ok((k.max(0) * mu0 / 6) as usize + 1)
}

/// Default precision for weight `2k`: `ceil(k mu0 / 6) + nu(Delta_N) + slack`.
pub fn precision_policy(level: u64, k: i64, slack: usize) -> Result<usize, FormsError> {
    let mu0 = dims::profile(level)?.mu0;
    let nu = delta::nu(level)?;
    let sturm = (k.max(0) * mu0 + 5) / 6;
    Ok((sturm + nu) as usize + slack)
}

/// Generators of weight at most `max_weight` used by [`spanning_set`].
fn generators(level: u64, max_weight: i64, prec: usize) -> Result<Vec<FormExpansion>, FormsError> {
    let divs = arith::divisors(level)?;
    let mut gens = Vec::new();
    if max_weight >= 2 {
        for &d in divs.iter().filter(|&&d| d >= 2) {
            for &e in divs.iter().filter(|&&e| level.is_multiple_of(d * e)) {
                let s = dilated(|p| h2n(d, p), e, prec)?;
                gens.push(FormExpansion::new(level, 2, s, dilated_label(format!("H{d}"), e)));
            }
        }
    }
    for k2 in (4..=max_weight).step_by(2) {
        for &d in &divs {
            let s = dilated(|p| eisenstein_series(k2 as u32, p), d, prec)?;
            gens.push(FormExpansion::new(level, k2, s, dilated_label(format!("E{k2}"), d)));
        }
    }
    if level >= 2 && max_weight >= 4 {
        gens.push(FormExpansion::new(
            level,
            4,
            weight4_val1(level, prec)?,
            format!("W{level}"),
        ));
    }
    let unit = delta::delta_unit(level)?;
    if unit.rho <= max_weight {
        gens.push(FormExpansion::new(
            level,
            unit.rho,
            unit.quotient.expand(prec)?,
            format!("Delta{level}"),
        ));
    }
    Ok(gens)
}

/// All products of generators with total weight exactly `2k`, deduplicated
/// by label and ordered by label.
pub fn spanning_set(level: u64, k: i64, prec: usize) -> Result<Vec<FormExpansion>, FormsError> {
    if k < 1 {
        return Err(FormsError::BadWeight(k));
    }
    let target = 2 * k;
    let gens = generators(level, target, prec)?;
    // multisets as index lists, non-decreasing
    let mut combos: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<(Vec<usize>, i64)> = vec![(Vec::new(), 0)];
    while let Some((picked, weight)) = stack.pop() {
        if weight == target {
            combos.push(picked);
            continue;
        }
        let start = picked.last().copied().unwrap_or(0);
        for (i, g) in gens.iter().enumerate().skip(start) {
            if weight + g.weight <= target {
                let mut next = picked.clone();
                next.push(i);
                stack.push((next, weight + g.weight));
            }
        }
    }
    let build = |combo: &Vec<usize>| -> FormExpansion {
        let mut it = combo.iter();
        let first = gens[*it.next().expect("nonempty product")].clone();
        it.fold(first, |acc, &i| acc.mul(&gens[i]))
    };
    #[cfg(feature = "parallel")]
    let products: Vec<FormExpansion> = {
        use rayon::prelude::*;
        combos.par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let products: Vec<FormExpansion> = combos.iter().map(build).collect();
    let mut by_label: BTreeMap<String, FormExpansion> = BTreeMap::new();
    for f in products {
        by_label.entry(f.label.clone()).or_insert(f);
    }
    Ok(by_label.into_values().collect())
}

/// Unitary basis with strictly increasing valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularBasis {
    pub level: u64,
    pub weight: i64,
    pub elements: Vec<FormExpansion>,
    pub prec: usize,
}

impl TriangularBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn valuations(&self) -> Vec<usize> {
        self.elements
            .iter()
            .map(|e| e.valuation().expect("basis elements are nonzero"))
            .collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.elements.iter().map(|e| e.label.as_str()).collect()
    }

    /// Remainder of `s` after eliminating every pivot of the basis.
    pub fn reduce(&self, s: &QSeries) -> QSeries {
        let mut r = s.truncate(self.prec);
        for e in &self.elements {
            let v = e.valuation().expect("basis elements are nonzero");
            if let Some(c) = r.coeff(v).cloned() {
                if !c.is_zero() {
                    r = r.sub(&e.series.scale(&c));
                }
            }
        }
        r
    }

    /// Whether `s` lies in the span, up to the basis precision.
    pub fn contains(&self, s: &QSeries) -> bool {
        self.reduce(s).is_zero()
    }

    pub fn dump(&self) -> BasisDump {
        BasisDump {
            schema: 1,
            level: self.level,
            weight: self.weight,
            prec: self.prec,
            elements: self
                .elements
                .iter()
                .map(|e| ElementDump {
                    label: e.label.clone(),
                    valuation: e.valuation().expect("basis elements are nonzero"),
                    coefficients: e.series.coeffs().iter().map(|c| c.to_string()).collect(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for TriangularBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "M_{}(Gamma_0({})): dimension {}, precision {}",
            self.weight,
            self.level,
            self.len(),
            self.prec
        )?;
        for e in &self.elements {
            writeln!(f, "  [{}] {}: {}", e.valuation().unwrap_or(0), e.label, e.series)?;
        }
        Ok(())
    }
}

/// JSON form of a basis. Coefficients are exact rationals as strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDump {
    pub schema: u32,
    pub level: u64,
    pub weight: i64,
    pub prec: usize,
    pub elements: Vec<ElementDump>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDump {
    pub label: String,
    pub valuation: usize,
    pub coefficients: Vec<String>,
}

/// Exact forward elimination. Candidates are processed in order of
/// (valuation, label), untouched candidates before reduced ones at the same
/// valuation; each either opens a new pivot or is reduced to zero. A
/// candidate that had to be modified is relabelled `reduce(label)`.
pub fn echelonize(
    level: u64,
    weight: i64,
    cands: Vec<FormExpansion>,
    expected_dim: usize,
) -> Result<TriangularBasis, FormsError> {
    for c in &cands {
        if c.level != level || c.weight != weight {
            return Err(FormsError::Mismatch {
                label: c.label.clone(),
                level: c.level,
                weight: c.weight,
                want_level: level,
                want_weight: weight,
            });
        }
    }
    let prec = cands.iter().map(|c| c.series.prec()).min().unwrap_or(0);
    // min-heap on (valuation, modified, label, arrival); series kept aside
    let mut pending: Vec<Option<QSeries>> = Vec::new();
    let mut heap = BinaryHeap::new();
    for c in cands {
        let series = c.series.truncate(prec);
        if let Some(v) = series.valuation() {
            heap.push(Reverse((v, false, c.label, pending.len())));
            pending.push(Some(series));
        }
    }

    let mut pivots: BTreeMap<usize, FormExpansion> = BTreeMap::new();
    while let Some(Reverse((v, modified, label, slot))) = heap.pop() {
        let mut s = pending[slot].take().expect("each slot is popped once");
        match pivots.get(&v) {
            Some(p) => {
                let c = s.coeff(v).cloned().expect("valuation inside precision");
                s = s.sub(&p.series.scale(&c));
                if let Some(w) = s.valuation() {
                    let label = if modified { label } else { format!("reduce({label})") };
                    heap.push(Reverse((w, true, label, slot)));
                    pending[slot] = Some(s);
                }
            }
            None => {
                let lead_is_one = s.leading().is_some_and(|c| c.is_one());
                let series = if lead_is_one { s } else { s.normalized() };
                pivots.insert(
                    v,
                    FormExpansion {
                        level,
                        weight,
                        series,
                        label,
                    },
                );
            }
        }
    }
    let rank = pivots.len();
    if rank > expected_dim {
        return Err(FormsError::RankExcess {
            got: rank,
            expected: expected_dim,
        });
    }
    if rank < expected_dim {
        let needed = sturm_bound(level, weight / 2)?;
        if prec < needed {
            return Err(FormsError::PrecisionInsufficient { prec, needed });
        }
        return Err(FormsError::RankDeficient {
            got: rank,
            expected: expected_dim,
        });
    }
    Ok(TriangularBasis {
        level,
        weight,
        elements: pivots.into_values().collect(),
        prec,
    })
}

/// True when the first `min(nu(Delta_N), len)` valuations are `0, 1, 2, ...`.
pub fn verify_staircase(b: &TriangularBasis) -> Result<bool, FormsError> {
    let nu = delta::nu(b.level)? as usize;
    let vals = b.valuations();
    Ok(vals.iter().take(nu).enumerate().all(|(i, &v)| i == v))
}

/// Builds structured bases at a fixed level and precision, caching every
/// weight it visits.
pub struct BasisBuilder {
    level: u64,
    prec: usize,
    unit: DeltaUnit,
    delta: FormExpansion,
    h: Option<FormExpansion>,
    cache: HashMap<i64, TriangularBasis>,
}

impl BasisBuilder {
    pub fn new(level: u64, prec: usize) -> Result<Self, FormsError> {
        if prec == 0 {
            return Err(QSeriesError::ZeroPrecision.into());
        }
        let unit = delta::delta_unit(level)?;
        let delta = FormExpansion::new(level, unit.rho, unit.quotient.expand(prec)?, format!("Delta{level}"));
        let h = if level >= 2 {
            Some(FormExpansion::new(level, 2, h2n(level, prec)?, format!("H{level}")))
        } else {
            None
        };
        Ok(BasisBuilder {
            level,
            prec,
            unit,
            delta,
            h,
            cache: HashMap::new(),
        })
    }

    pub fn delta(&self) -> &DeltaUnit {
        &self.unit
    }

    /// Canonical valuation 0 element of weight `2k`: `H_N^k`, or `E_{2k}` at level 1.
    fn head_zero(&self, k: i64) -> Result<FormExpansion, FormsError> {
        match &self.h {
            Some(h) => Ok(FormExpansion::new(
                self.level,
                2 * k,
                h.series.pow(k)?,
                label_power(&h.label, k as u32),
            )),
            None => Ok(FormExpansion::new(
                self.level,
                2 * k,
                eisenstein_series(2 * k as u32, self.prec)?,
                format!("E{}", 2 * k),
            )),
        }
    }

    pub fn basis(&mut self, k: i64) -> Result<TriangularBasis, FormsError> {
        if k < 1 {
            return Err(FormsError::BadWeight(k));
        }
        if let Some(b) = self.cache.get(&k) {
            return Ok(b.clone());
        }
        let rho = self.unit.rho;
        let dim = dims::dim_m(self.level, k)? as usize;
        let b = if 2 * k <= rho + 2 {
            let mut b = echelonize(self.level, 2 * k, spanning_set(self.level, k, self.prec)?, dim)?;
            if b.valuations().first() == Some(&0) {
                b.elements[0] = self.head_zero(k)?;
            }
            b
        } else {
            let lower = self.basis(k - rho / 2)?;
            let mut union: Vec<FormExpansion> = lower.elements.iter().map(|e| self.delta.mul(e)).collect();
            union.extend(self.heads(k)?);
            echelonize(self.level, 2 * k, union, dim)?
        };
        self.cache.insert(k, b.clone());
        Ok(b)
    }

    /// The `nu(Delta_N)` elements of valuation below `nu(Delta_N)` at weight `2k`.
    fn heads(&mut self, k: i64) -> Result<Vec<FormExpansion>, FormsError> {
        let nu = self.unit.nu as usize;
        if self.h.is_none() {
            return Ok(vec![self.head_zero(k)?]);
        }
        let k0 = self.unit.rho / 2 + 1;
        let seed = self.basis(k0)?;
        let low: Vec<FormExpansion> = seed
            .elements
            .into_iter()
            .filter(|e| e.valuation().is_some_and(|v| v < nu))
            .collect();
        if low.len() < nu {
            return Err(FormsError::HeadShortfall {
                found: low.len(),
                needed: nu,
                weight: 2 * k0,
            });
        }
        let lift = self.head_zero(k - k0)?;
        Ok(low.iter().map(|e| e.mul(&lift)).collect())
    }

    /// Quotients by `Delta_N` of the elements with valuation at least
    /// `nu(Delta_N)`, re-echelonized at weight `2k - rho_N`.
    pub fn divide_by_delta(&self, b: &TriangularBasis) -> Result<TriangularBasis, FormsError> {
        let nu = self.unit.nu as usize;
        let prefix = format!("{}*", self.delta.label);
        let quotients = b
            .elements
            .iter()
            .filter(|e| e.valuation().is_some_and(|v| v >= nu))
            .map(|e| {
                let label = match e.label.strip_prefix(&prefix) {
                    Some(rest) => rest.to_string(),
                    None if e.label == self.delta.label => "1".to_string(),
                    None => format!("{}/{}", e.label, self.delta.label),
                };
                Ok(FormExpansion::new(
                    b.level,
                    b.weight - self.unit.rho,
                    e.series.div(&self.delta.series)?,
                    label,
                ))
            })
            .collect::<Result<Vec<_>, FormsError>>()?;
        let count = quotients.len();
        echelonize(b.level, b.weight - self.unit.rho, quotients, count)
    }

    /// Valuations of `M_{2k}` for any integer `k`: empty below weight 0 and
    /// `[0]` at weight 0.
    pub fn valuations_at(&mut self, k: i64) -> Result<Vec<usize>, FormsError> {
        Ok(match k {
            k if k < 0 => Vec::new(),
            0 => vec![0],
            k => self.basis(k)?.valuations(),
        })
    }
}

/// Structured basis of `M_{2k}(Gamma_0(N))` at precision `prec`.
pub fn structured_basis(level: u64, k: i64, prec: usize) -> Result<TriangularBasis, FormsError> {
    BasisBuilder::new(level, prec)?.basis(k)
}
