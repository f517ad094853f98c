//! The inclusion criterion M(n) = max_k k^{1/q(n)} / S_k^{1/p}, its scan over
//! a finite horizon, and the bound it gives on mesh-2^{-n} partition sums.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::sequences::{LambdaSequence, QSequence};
use crate::variation_1d::check_p;

/// Range of k in the maximum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum KRange {
    /// 1 ≤ k ≤ n.
    #[default]
    #[serde(rename = "n")]
    UpToN,
    /// 1 ≤ k ≤ 2^n.
    #[serde(rename = "2n")]
    UpTo2N,
}

impl std::str::FromStr for KRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(KRange::UpToN),
            "2n" => Ok(KRange::UpTo2N),
            other => Err(argument(format!("k range must be \"n\" or \"2n\", got {other:?}"))),
        }
    }
}

/// Largest k the criterion scans by default.
pub const DEFAULT_MAX_K: u64 = 1 << 22;

impl KRange {
    /// Upper end of the k range for `n`.
    pub fn upper(self, n: u64, max_k: u64) -> Result<u64> {
        let k = match self {
            KRange::UpToN => n,
            KRange::UpTo2N => {
                if n >= 63 {
                    u64::MAX
                } else {
                    1u64 << n
                }
            }
        };
        if k > max_k {
            let hint = match self {
                KRange::UpTo2N => "; use the k ≤ n range for long horizons",
                KRange::UpToN => "",
            };
            return Err(Error::Capacity {
                what: format!("criterion at n = {n} needs k up to {k}{hint}"),
                cap: max_k,
            });
        }
        Ok(k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionPoint {
    pub n: u64,
    pub q: f64,
    pub value: f64,
    pub argmax_k: u64,
}

/// ln k and ln S_k for k = 1..=len, grown on demand.
struct LogTable<'a> {
    lambda: &'a LambdaSequence,
    ln_k: Vec<f64>,
    ln_s: Vec<f64>,
}

impl<'a> LogTable<'a> {
    fn new(lambda: &'a LambdaSequence) -> Self {
        LogTable {
            lambda,
            ln_k: Vec::new(),
            ln_s: Vec::new(),
        }
    }

    fn ensure(&mut self, len: usize) -> Result<()> {
        if len > self.ln_s.len() {
            let prefix = self.lambda.prefix(len)?;
            self.ln_s = prefix.partial_sums.iter().map(|s| s.ln()).collect();
            self.ln_k = (1..=len).map(|k| (k as f64).ln()).collect();
        }
        Ok(())
    }

    /// Argmax over k ≤ `upper` of ln k / q − ln S_k / p (first on ties), and
    /// the value recomputed directly at that k.
    fn point(&mut self, n: u64, q: f64, p: f64, upper: u64) -> Result<CriterionPoint> {
        self.ensure(upper as usize)?;
        let (iq, ip) = (1.0 / q, 1.0 / p);
        let mut best = (f64::NEG_INFINITY, 0usize);
        for k in 0..upper as usize {
            let v = self.ln_k[k] * iq - self.ln_s[k] * ip;
            if v > best.0 {
                best = (v, k);
            }
        }
        let k = best.1 + 1;
        let s = self.lambda.partial_sum(k)?;
        Ok(CriterionPoint {
            n,
            q,
            value: (k as f64).powf(iq) / s.powf(ip),
            argmax_k: k as u64,
        })
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        Err(argument("n must be at least 1"))
    } else {
        Ok(())
    }
}

/// M(n) and the smallest k attaining it.
pub fn criterion_value(
    lambda: &LambdaSequence,
    q: &QSequence,
    p: f64,
    n: u64,
    k_range: KRange,
) -> Result<CriterionPoint> {
    criterion_value_capped(lambda, q, p, n, k_range, DEFAULT_MAX_K)
}

pub fn criterion_value_capped(
    lambda: &LambdaSequence,
    q: &QSequence,
    p: f64,
    n: u64,
    k_range: KRange,
    max_k: u64,
) -> Result<CriterionPoint> {
    check_p(p)?;
    check_n(n)?;
    let upper = k_range.upper(n, max_k)?;
    LogTable::new(lambda).point(n, q.q(n)?, p, upper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    BoundedOnHorizon,
    Growing,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub n: u64,
    pub q: f64,
    pub value: f64,
    pub argmax_k: u64,
    pub running_max: f64,
}

/// Running max at the start of the last quarter and at the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthStatistic {
    pub tail_start: u64,
    pub max_before_tail: f64,
    pub max_at_horizon: f64,
    pub ratio: f64,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub n_max: u64,
    pub k_range: KRange,
    pub p: f64,
    pub rows: Vec<CriterionRow>,
    pub sup: f64,
    pub verdict: Verdict,
    pub statistic: GrowthStatistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub k_range: KRange,
    /// The running max must grow by more than this factor over the last
    /// quarter of the horizon for a "growing" verdict.
    pub growth_factor: f64,
    pub max_k: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            k_range: KRange::UpToN,
            growth_factor: 2.0,
            max_k: DEFAULT_MAX_K,
        }
    }
}

/// M(n) for n = 1..=n_max with a horizon-qualified verdict.
pub fn criterion_scan(
    lambda: &LambdaSequence,
    q: &QSequence,
    p: f64,
    n_max: u64,
    opts: &ScanOptions,
) -> Result<CriterionReport> {
    check_p(p)?;
    if n_max < 2 {
        return Err(argument("the scan horizon n_max must be at least 2"));
    }
    if !(opts.growth_factor.is_finite() && opts.growth_factor >= 1.0) {
        return Err(argument("growth factor must be a finite number ≥ 1"));
    }
    let mut table = LogTable::new(lambda);
    table.ensure(opts.k_range.upper(n_max, opts.max_k)? as usize)?;
    let mut rows = Vec::with_capacity(n_max as usize);
    let mut running = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let upper = opts.k_range.upper(n, opts.max_k)?;
        let pt = table.point(n, q.q(n)?, p, upper)?;
        running = running.max(pt.value);
        rows.push(CriterionRow {
            n,
            q: pt.q,
            value: pt.value,
            argmax_k: pt.argmax_k,
            running_max: running,
        });
    }
    let tail_start = (3 * n_max / 4).max(1);
    let before = rows[tail_start as usize - 1].running_max;
    let ratio = running / before;
    let verdict = if ratio > opts.growth_factor {
        Verdict::Growing
    } else if running == before {
        Verdict::BoundedOnHorizon
    } else {
        Verdict::Inconclusive
    };
    Ok(CriterionReport {
        n_max,
        k_range: opts.k_range,
        p,
        rows,
        sup: running,
        verdict,
        statistic: GrowthStatistic {
            tail_start,
            max_before_tail: before,
            max_at_horizon: running,
            ratio,
            factor: opts.growth_factor,
        },
    })
}

/// V_f · (max_k k / S_k^{q(n)/p})^{1/q(n)}, an upper bound on the ℓ^{q(n)}
/// partition sums at mesh 2^{-n} of a function with p-Λ-variation V_f when
/// such partitions have at most as many intervals as the k range allows.
pub fn sufficiency_bound(
    lambda: &LambdaSequence,
    q: &QSequence,
    p: f64,
    n: u64,
    v_f: f64,
    k_range: KRange,
) -> Result<f64> {
    if !(v_f.is_finite() && v_f >= 0.0) {
        return Err(argument(format!("V_f = {v_f} must be a nonnegative finite number")));
    }
    if v_f == 0.0 {
        return Ok(0.0);
    }
    // (max_k k/S_k^{q/p})^{1/q} = max_k k^{1/q}/S_k^{1/p} = M(n)
    Ok(v_f * criterion_value(lambda, q, p, n, k_range)?.value)
}
