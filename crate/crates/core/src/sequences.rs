//! Weight sequences Λ = (λ_i) and exponent sequences q(n).
//!
//! Both come either as explicit finite lists or as one of a few symbolic
//! families. Every consumer in this crate reads them through prefixes
//! (λ_1..λ_n, S_1..S_n) so the two representations are interchangeable.

use std::fmt;
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{argument, domain, Result};

/// Partial sums beyond this index are evaluated with an Euler–Maclaurin tail
/// instead of direct summation (symbolic families only).
pub const DIRECT_SUM_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitLambda {
    pub explicit: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum LambdaFamily {
    /// λ_i = i^alpha
    Power { alpha: f64 },
    /// λ_i = a·i + b
    Affine { a: f64, b: f64 },
}

/// Serialized description of a weight sequence.
///
/// JSON forms: `{"explicit":[1,2,4]}`, `{"family":"power","alpha":1.0}`,
/// `{"family":"affine","a":1.0,"b":0.5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Explicit(ExplicitLambda),
    Family(LambdaFamily),
}

impl LambdaSpec {
    pub fn explicit(values: Vec<f64>) -> Self {
        LambdaSpec::Explicit(ExplicitLambda { explicit: values })
    }

    pub fn power(alpha: f64) -> Self {
        LambdaSpec::Family(LambdaFamily::Power { alpha })
    }

    pub fn affine(a: f64, b: f64) -> Self {
        LambdaSpec::Family(LambdaFamily::Affine { a, b })
    }
}

/// Whether Σ 1/λ_i diverges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Divergence {
    Diverges,
    Converges,
    Undetermined,
}

/// A validated, nondecreasing sequence of positive weights with cached
/// reciprocal partial sums S_k = Σ_{i≤k} 1/λ_i.
///
/// Explicit lists are finite: weights past the end behave as +∞ wherever a
/// family of intervals is paired with the sequence (their terms vanish), while
/// partial sums past the end are an error.
pub struct LambdaSequence {
    spec: LambdaSpec,
    sums: RwLock<Vec<f64>>,
}

impl Clone for LambdaSequence {
    fn clone(&self) -> Self {
        let sums = self.sums.read().expect("partial-sum cache poisoned").clone();
        LambdaSequence {
            spec: self.spec.clone(),
            sums: RwLock::new(sums),
        }
    }
}

impl fmt::Debug for LambdaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LambdaSequence").field("spec", &self.spec).finish()
    }
}

/// The first `n` weights together with their reciprocal partial sums.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPrefix {
    pub weights: Vec<f64>,
    pub partial_sums: Vec<f64>,
}

impl LambdaSequence {
    pub fn new(spec: LambdaSpec) -> Result<Self> {
        let (violations, _) = lambda_findings(&spec);
        if !violations.is_empty() {
            return Err(domain(violations.join("; ")));
        }
        Ok(LambdaSequence {
            spec,
            sums: RwLock::new(Vec::new()),
        })
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::new(LambdaSpec::explicit(values))
    }

    pub fn power(alpha: f64) -> Result<Self> {
        Self::new(LambdaSpec::power(alpha))
    }

    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::new(LambdaSpec::affine(a, b))
    }

    /// λ_i ≡ 1.
    pub fn constant_one() -> Self {
        Self::power(0.0).expect("constant weights are valid")
    }

    pub fn spec(&self) -> &LambdaSpec {
        &self.spec
    }

    /// Number of available weights; `None` for infinite families.
    pub fn len(&self) -> Option<usize> {
        match &self.spec {
            LambdaSpec::Explicit(e) => Some(e.explicit.len()),
            LambdaSpec::Family(_) => None,
        }
    }

    pub fn divergence(&self) -> Divergence {
        match &self.spec {
            LambdaSpec::Explicit(_) => Divergence::Undetermined,
            LambdaSpec::Family(LambdaFamily::Power { alpha }) => {
                if *alpha <= 1.0 {
                    Divergence::Diverges
                } else {
                    Divergence::Converges
                }
            }
            LambdaSpec::Family(LambdaFamily::Affine { .. }) => Divergence::Diverges,
        }
    }

    /// λ_i for 1-based `i`.
    pub fn weight(&self, i: usize) -> Result<f64> {
        if i == 0 {
            return Err(argument("weight index is 1-based"));
        }
        match &self.spec {
            LambdaSpec::Explicit(e) => e.explicit.get(i - 1).copied().ok_or_else(|| {
                argument(format!(
                    "Λ prefix has only {} terms, index {} requested",
                    e.explicit.len(),
                    i
                ))
            }),
            LambdaSpec::Family(fam) => Ok(family_weight(fam, i as f64)),
        }
    }

    /// 1/λ_i for i = 1..=n, with zeros past the end of an explicit list.
    pub fn inverse_weights(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| self.weight(i).map(|w| 1.0 / w).unwrap_or(0.0))
            .collect()
    }

    /// S_k = Σ_{i=1}^k 1/λ_i.
    pub fn partial_sum(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(argument("partial sum index must be at least 1"));
        }
        if let Some(len) = self.len() {
            if k > len {
                return Err(argument(format!(
                    "Λ prefix has only {len} terms, S_{k} requested"
                )));
            }
        }
        if let LambdaSpec::Family(fam) = &self.spec {
            if let Some(s) = closed_form_sum(fam, k) {
                return Ok(s);
            }
            if k > DIRECT_SUM_LIMIT {
                let base = self.partial_sum(DIRECT_SUM_LIMIT)?;
                return Ok(base + euler_maclaurin_tail(fam, DIRECT_SUM_LIMIT as f64, k as f64));
            }
        }
        {
            let sums = self.sums.read().expect("partial-sum cache poisoned");
            if k <= sums.len() {
                return Ok(sums[k - 1]);
            }
        }
        let mut sums = self.sums.write().expect("partial-sum cache poisoned");
        let mut acc = sums.last().copied().unwrap_or(0.0);
        for i in sums.len() + 1..=k {
            acc += 1.0 / self.weight(i)?;
            sums.push(acc);
        }
        Ok(sums[k - 1])
    }

    pub fn prefix(&self, n: usize) -> Result<LambdaPrefix> {
        if n == 0 {
            return Ok(LambdaPrefix {
                weights: Vec::new(),
                partial_sums: Vec::new(),
            });
        }
        self.partial_sum(n)?;
        let weights = (1..=n).map(|i| self.weight(i)).collect::<Result<Vec<_>>>()?;
        let partial_sums = (1..=n).map(|k| self.partial_sum(k)).collect::<Result<Vec<_>>>()?;
        Ok(LambdaPrefix {
            weights,
            partial_sums,
        })
    }

    /// Exact S_k for integer-valued weights (explicit integer lists, integer
    /// power exponents, integer affine coefficients). `None` otherwise.
    pub fn partial_sum_exact(&self, k: usize) -> Option<BigRational> {
        if k == 0 {
            return None;
        }
        let integral = |x: f64| x.fract() == 0.0 && x.abs() < 9.0e15;
        let mut acc = BigRational::zero();
        for i in 1..=k {
            let w = match &self.spec {
                LambdaSpec::Explicit(e) => {
                    let v = *e.explicit.get(i - 1)?;
                    if !integral(v) {
                        return None;
                    }
                    BigInt::from(v as i64)
                }
                LambdaSpec::Family(LambdaFamily::Power { alpha }) => {
                    if !integral(*alpha) || *alpha > 64.0 {
                        return None;
                    }
                    num_traits::pow(BigInt::from(i as u64), *alpha as usize)
                }
                LambdaSpec::Family(LambdaFamily::Affine { a, b }) => {
                    if !integral(*a) || !integral(*b) {
                        return None;
                    }
                    BigInt::from(*a as i64) * BigInt::from(i as u64) + BigInt::from(*b as i64)
                }
            };
            acc += BigRational::new(BigInt::one(), w);
        }
        Some(acc)
    }

    /// Smallest k ≤ `limit` with S_k > `bound`, if one exists.
    pub fn divergence_witness(&self, bound: f64, limit: u64) -> Option<u64> {
        let limit = match self.len() {
            Some(len) => limit.min(len as u64),
            None => limit,
        };
        if limit == 0 {
            return None;
        }
        let exceeds = |k: u64| self.partial_sum(k as usize).map(|s| s > bound).unwrap_or(false);
        let mut hi = 1u64;
        while !exceeds(hi) {
            if hi >= limit {
                return None;
            }
            hi = hi.saturating_mul(2).min(limit);
        }
        let mut lo = hi / 2;
        // invariant: !exceeds(lo) (or lo == 0), exceeds(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if exceeds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

fn family_weight(fam: &LambdaFamily, x: f64) -> f64 {
    match *fam {
        LambdaFamily::Power { alpha } => {
            if alpha == 0.0 {
                1.0
            } else if alpha == 1.0 {
                x
            } else if alpha == 2.0 {
                x * x
            } else {
                x.powf(alpha)
            }
        }
        LambdaFamily::Affine { a, b } => a * x + b,
    }
}

fn closed_form_sum(fam: &LambdaFamily, k: usize) -> Option<f64> {
    match *fam {
        LambdaFamily::Power { alpha } if alpha == 0.0 => Some(k as f64),
        LambdaFamily::Affine { a, b } if a == 0.0 => Some(k as f64 / b),
        _ => None,
    }
}

/// Σ_{i=m+1}^{k} 1/λ_i via Euler–Maclaurin with the B_2 and B_4 corrections.
fn euler_maclaurin_tail(fam: &LambdaFamily, m: f64, k: f64) -> f64 {
    let (f, d1, d3, integral): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, f64) =
        match *fam {
            LambdaFamily::Power { alpha } => {
                let integral = if alpha == 1.0 {
                    (k / m).ln()
                } else {
                    (k.powf(1.0 - alpha) - m.powf(1.0 - alpha)) / (1.0 - alpha)
                };
                (
                    Box::new(move |x: f64| x.powf(-alpha)),
                    Box::new(move |x: f64| -alpha * x.powf(-alpha - 1.0)),
                    Box::new(move |x: f64| -alpha * (alpha + 1.0) * (alpha + 2.0) * x.powf(-alpha - 3.0)),
                    integral,
                )
            }
            LambdaFamily::Affine { a, b } => (
                Box::new(move |x: f64| 1.0 / (a * x + b)),
                Box::new(move |x: f64| -a / (a * x + b).powi(2)),
                Box::new(move |x: f64| -6.0 * a.powi(3) / (a * x + b).powi(4)),
                ((a * k + b) / (a * m + b)).ln() / a,
            ),
        };
    integral + (f(k) - f(m)) / 2.0 + (d1(k) - d1(m)) / 12.0 - (d3(k) - d3(m)) / 720.0
}

/// Declared limit q of an exponent sequence; `Unbounded` stands for q = ∞.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QLimit {
    Finite(f64),
    Unbounded,
}

impl QLimit {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, QLimit::Unbounded)
    }
}

impl Serialize for QLimit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            QLimit::Finite(q) => s.serialize_f64(*q),
            QLimit::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for QLimit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct LimitVisitor;
        impl Visitor<'_> for LimitVisitor {
            type Value = QLimit;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"unbounded\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<QLimit, E> {
                Ok(QLimit::Finite(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<QLimit, E> {
                Ok(QLimit::Finite(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<QLimit, E> {
                Ok(QLimit::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<QLimit, E> {
                match v {
                    "unbounded" | "inf" | "infinity" => Ok(QLimit::Unbounded),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(LimitVisitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitQ {
    pub explicit: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<QLimit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum QFamily {
    /// q(n) ≡ q
    Constant { q: f64 },
    /// q(n) = max(1, c·log₂log₂(n + n0))
    Loglog { c: f64, n0: f64 },
    /// q(n) = min(cap, a·n + b)
    Linear {
        a: f64,
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
}

/// Serialized description of an exponent sequence. A bare number is a
/// constant sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QSpec {
    Constant(f64),
    Explicit(ExplicitQ),
    Family(QFamily),
}

impl QSpec {
    pub fn constant(q: f64) -> Self {
        QSpec::Family(QFamily::Constant { q })
    }

    pub fn loglog(c: f64, n0: f64) -> Self {
        QSpec::Family(QFamily::Loglog { c, n0 })
    }

    pub fn linear(a: f64, b: f64, cap: Option<f64>) -> Self {
        QSpec::Family(QFamily::Linear { a, b, cap })
    }

    pub fn explicit(values: Vec<f64>, limit: Option<QLimit>) -> Self {
        QSpec::Explicit(ExplicitQ {
            explicit: values,
            limit,
        })
    }
}

/// A validated nondecreasing exponent sequence with q(n) ≥ 1.
#[derive(Clone, Debug, PartialEq)]
pub struct QSequence {
    spec: QSpec,
}

impl QSequence {
    pub fn new(spec: QSpec) -> Result<Self> {
        let violations = q_violations(&spec);
        if !violations.is_empty() {
            return Err(domain(violations.join("; ")));
        }
        Ok(QSequence { spec })
    }

    pub fn constant(q: f64) -> Result<Self> {
        Self::new(QSpec::constant(q))
    }

    pub fn loglog(c: f64, n0: f64) -> Result<Self> {
        Self::new(QSpec::loglog(c, n0))
    }

    pub fn linear(a: f64, b: f64, cap: Option<f64>) -> Result<Self> {
        Self::new(QSpec::linear(a, b, cap))
    }

    pub fn explicit(values: Vec<f64>, limit: Option<QLimit>) -> Result<Self> {
        Self::new(QSpec::explicit(values, limit))
    }

    pub fn spec(&self) -> &QSpec {
        &self.spec
    }

    /// q(n) for 1-based `n`.
    pub fn q(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(argument("q(n) is defined for n ≥ 1"));
        }
        Ok(match &self.spec {
            QSpec::Constant(q) | QSpec::Family(QFamily::Constant { q }) => *q,
            QSpec::Explicit(e) => *e.explicit.get(n as usize - 1).ok_or_else(|| {
                argument(format!(
                    "q sequence has only {} terms, q({n}) requested",
                    e.explicit.len()
                ))
            })?,
            QSpec::Family(QFamily::Loglog { c, n0 }) => {
                let inner = (n as f64 + n0).log2().log2();
                (c * inner).max(1.0)
            }
            QSpec::Family(QFamily::Linear { a, b, cap }) => {
                let v = a * n as f64 + b;
                match cap {
                    Some(cap) => v.min(*cap),
                    None => v,
                }
            }
        })
    }

    pub fn limit(&self) -> QLimit {
        match &self.spec {
            QSpec::Constant(q) | QSpec::Family(QFamily::Constant { q }) => QLimit::Finite(*q),
            QSpec::Explicit(e) => e
                .limit
                .unwrap_or_else(|| QLimit::Finite(e.explicit.last().copied().unwrap_or(1.0))),
            QSpec::Family(QFamily::Loglog { .. }) => QLimit::Unbounded,
            QSpec::Family(QFamily::Linear { a, b, cap }) => match cap {
                Some(cap) => QLimit::Finite(*cap),
                None if *a == 0.0 => QLimit::Finite(*b),
                None => QLimit::Unbounded,
            },
        }
    }
}

/// Combined sequence description, as read from `{"lambda": …, "q": …}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSpec {
    pub lambda: LambdaSpec,
    pub q: QSpec,
}

/// Outcome of [`validate_sequences`]. Violations make a sequence unusable;
/// warnings do not block computation.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_sequences(lambda: &LambdaSpec, q: &QSpec) -> ValidationReport {
    let (mut violations, warnings) = lambda_findings(lambda);
    violations.extend(q_violations(q));
    ValidationReport {
        violations,
        warnings,
    }
}

fn lambda_findings(spec: &LambdaSpec) -> (Vec<String>, Vec<String>) {
    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    match spec {
        LambdaSpec::Explicit(e) => {
            if e.explicit.is_empty() {
                violations.push("λ list is empty".to_string());
            }
            for (i, &v) in e.explicit.iter().enumerate() {
                if !(v.is_finite() && v > 0.0) {
                    violations.push(format!("λ_{} = {v} is not a positive finite number", i + 1));
                }
            }
            if e.explicit.windows(2).any(|w| w[1] < w[0]) {
                violations.push("λ not nondecreasing".to_string());
            }
            warnings.push("divergence of Σ1/λ is undetermined for a finite list".to_string());
        }
        LambdaSpec::Family(LambdaFamily::Power { alpha }) => {
            if !(alpha.is_finite() && *alpha >= 0.0) {
                violations.push(format!("λ not nondecreasing (power exponent {alpha} < 0)"));
            } else if *alpha > 1.0 {
                warnings.push("Σ1/λ converges; Waterman hypothesis violated".to_string());
            }
        }
        LambdaSpec::Family(LambdaFamily::Affine { a, b }) => {
            if !(a.is_finite() && b.is_finite()) {
                violations.push("affine coefficients must be finite".to_string());
            } else {
                if *a < 0.0 {
                    violations.push("λ not nondecreasing".to_string());
                }
                if a + b <= 0.0 {
                    violations.push("λ_1 = a + b must be positive".to_string());
                }
            }
        }
    }
    (violations, warnings)
}

fn q_violations(spec: &QSpec) -> Vec<String> {
    let mut out = Vec::new();
    match spec {
        QSpec::Constant(q) | QSpec::Family(QFamily::Constant { q }) => {
            if !(q.is_finite() && *q >= 1.0) {
                out.push(format!("q(n) = {q} < 1"));
            }
        }
        QSpec::Explicit(e) => {
            if e.explicit.is_empty() {
                out.push("q list is empty".to_string());
            }
            for (i, &v) in e.explicit.iter().enumerate() {
                if !(v.is_finite() && v >= 1.0) {
                    out.push(format!("q({}) = {v} < 1", i + 1));
                }
            }
            if e.explicit.windows(2).any(|w| w[1] < w[0]) {
                out.push("q not nondecreasing".to_string());
            }
            if let Some(QLimit::Finite(lim)) = e.limit {
                if e.explicit.iter().any(|&v| v > lim) {
                    out.push(format!("q(n) exceeds declared limit {lim}"));
                }
                if lim < 1.0 {
                    out.push(format!("declared limit {lim} < 1"));
                }
            }
        }
        QSpec::Family(QFamily::Loglog { c, n0 }) => {
            if !(c.is_finite() && *c > 0.0) {
                out.push(format!("loglog coefficient c = {c} must be positive"));
            }
            if !(n0.is_finite() && *n0 >= 1.0) {
                out.push(format!("loglog offset n0 = {n0} must be at least 1"));
            }
        }
        QSpec::Family(QFamily::Linear { a, b, cap }) => {
            if !(a.is_finite() && *a >= 0.0) {
                out.push("q not nondecreasing (negative slope)".to_string());
            }
            if !(b.is_finite() && a + b >= 1.0) {
                out.push(format!("q(1) = {} < 1", a + b));
            }
            if let Some(cap) = cap {
                if !(*cap >= 1.0) {
                    out.push(format!("q cap {cap} < 1"));
                }
            }
        }
    }
    out
}
