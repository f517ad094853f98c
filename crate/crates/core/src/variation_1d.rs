//! Oscillations, p-Λ-variation and BV(q(n)↑q) variation of 1-periodic
//! functions of one variable sampled on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::engine::{self, Oscillations, MAX_BNB_CELLS};
use crate::error::{argument, domain, Error, Result};
use crate::sequences::{LambdaSequence, QSequence};

/// How the function behaves between grid points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleModel {
    /// Constant on each `[t_i, t_{i+1})`.
    Step,
    /// Linear between consecutive grid points.
    Linear,
    /// Known only at the grid points.
    #[default]
    Samples,
}

/// A 1-periodic function sampled at t_i = i/N, i = 0..N−1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFunction1DRepr", into = "GridFunction1DRepr")]
pub struct GridFunction1D {
    samples: Vec<f64>,
    model: SampleModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFunction1DRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    resolution: usize,
    samples: Vec<f64>,
    #[serde(default)]
    model: SampleModel,
}

impl TryFrom<GridFunction1DRepr> for GridFunction1D {
    type Error = Error;

    fn try_from(r: GridFunction1DRepr) -> Result<Self> {
        if r.resolution != r.samples.len() {
            return Err(domain(format!(
                "resolution {} does not match {} samples",
                r.resolution,
                r.samples.len()
            )));
        }
        Ok(GridFunction1D::new(r.samples)?.with_model(r.model))
    }
}

impl From<GridFunction1D> for GridFunction1DRepr {
    fn from(f: GridFunction1D) -> Self {
        GridFunction1DRepr {
            schema: None,
            resolution: f.samples.len(),
            samples: f.samples,
            model: f.model,
        }
    }
}

impl GridFunction1D {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("a grid function needs at least one sample"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(domain(format!("sample {i} is not finite")));
        }
        Ok(GridFunction1D {
            samples,
            model: SampleModel::Samples,
        })
    }

    pub fn from_fn(resolution: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..resolution).map(|i| f(i as f64 / resolution as f64)).collect())
    }

    pub fn with_model(mut self, model: SampleModel) -> Self {
        self.model = model;
        self
    }

    pub fn resolution(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn model(&self) -> SampleModel {
        self.model
    }

    /// Value at grid index `i`, reduced modulo the period.
    pub fn value(&self, i: usize) -> f64 {
        self.samples[i % self.samples.len()]
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction1D {
            samples: self.samples.iter().map(|v| c * v).collect(),
            model: self.model,
        }
    }

    /// Repeats every sample `factor` times (N → factor·N).
    pub fn upsampled(&self, factor: usize) -> Self {
        GridFunction1D {
            samples: self
                .samples
                .iter()
                .flat_map(|&v| std::iter::repeat_n(v, factor))
                .collect(),
            model: self.model,
        }
    }
}

pub(crate) struct SampleOsc<'a>(pub &'a [f64]);

impl Oscillations for SampleOsc<'_> {
    fn cells(&self) -> usize {
        self.0.len()
    }

    fn osc(&self, a: usize, b: usize) -> f64 {
        let n = self.0.len();
        (self.0[b % n] - self.0[a % n]).abs()
    }

    fn max_osc(&self) -> f64 {
        let (lo, hi) = self
            .0
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

/// One interval of a family with its oscillation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
    pub oscillation: f64,
}

/// Nonoverlapping grid intervals, sorted by start.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalFamily {
    pub intervals: Vec<Interval>,
}

impl IntervalFamily {
    pub(crate) fn from_pairs<O: Oscillations + ?Sized>(osc: &O, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        IntervalFamily {
            intervals: pairs
                .into_iter()
                .map(|(start, end)| Interval {
                    start,
                    end,
                    oscillation: osc.osc(start, end),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn oscillations(&self) -> Vec<f64> {
        self.intervals.iter().map(|i| i.oscillation).collect()
    }

    /// True when no two intervals share a cell of a `cells`-cell period.
    pub fn is_nonoverlapping(&self, cells: usize, wrap: bool) -> bool {
        let mut used = vec![false; cells];
        for iv in &self.intervals {
            if iv.start >= iv.end || iv.end > iv.start + cells || (!wrap && iv.end > cells) {
                return false;
            }
            for c in iv.start..iv.end {
                if std::mem::replace(&mut used[c % cells], true) {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Exact,
    Heuristic,
}

/// How a variation value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exhaustive branch-and-bound over all grid families.
    BranchAndBound,
    /// A heuristic family that meets the oscillation-range upper bound.
    RangeCertificate,
    /// Best family found by the heuristic; a lower bound.
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariationOptions {
    pub strategy: Strategy,
    /// Allow intervals that cross the end of the period.
    pub wrap: bool,
    /// Largest grid for which branch-and-bound is attempted.
    pub exact_cap: usize,
}

impl Default for VariationOptions {
    fn default() -> Self {
        VariationOptions {
            strategy: Strategy::Exact,
            wrap: false,
            exact_cap: 14,
        }
    }
}

impl VariationOptions {
    pub fn heuristic() -> Self {
        VariationOptions {
            strategy: Strategy::Heuristic,
            ..Default::default()
        }
    }

    pub fn with_wrap(mut self, wrap: bool) -> Self {
        self.wrap = wrap;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationResult {
    pub value: f64,
    pub witness: IntervalFamily,
    pub method: Method,
    /// `value` is the supremum over grid-aligned families.
    pub grid_exact: bool,
    /// `value` is also the supremum for the underlying function (step or
    /// piecewise-linear model with grid breakpoints).
    pub function_exact: bool,
}

impl VariationResult {
    /// Recomputes the objective of the witness family.
    pub fn witness_objective(&self, lambda: &LambdaSequence, p: f64) -> Result<f64> {
        assigned_objective(&self.witness.oscillations(), lambda, p)
    }
}

const CERTIFICATE_RTOL: f64 = 1e-12;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(argument(format!("p = {p} must satisfy 1 ≤ p < ∞")))
    }
}

/// |f(b/N) − f(a/N)| for grid indices `a < b ≤ a + N`.
pub fn oscillation(f: &GridFunction1D, a: usize, b: usize) -> Result<f64> {
    let n = f.resolution();
    if a >= b || b > a + n {
        return Err(argument(format!(
            "interval ({a}, {b}) must satisfy a < b ≤ a + {n}"
        )));
    }
    Ok(SampleOsc(f.samples()).osc(a, b))
}

/// (Σ o_(i)^p / λ_i)^{1/p} with the oscillations sorted in descending order.
pub fn assigned_objective(oscillations: &[f64], lambda: &LambdaSequence, p: f64) -> Result<f64> {
    check_p(p)?;
    if let Some(o) = oscillations.iter().find(|o| !(o.is_finite() && **o >= 0.0)) {
        return Err(argument(format!("oscillation {o} is not a nonnegative finite number")));
    }
    let inv = lambda.inverse_weights(oscillations.len());
    let mut w: Vec<f64> = oscillations.iter().map(|o| o.powf(p)).collect();
    Ok(engine::rank_sum(&mut w, &inv).powf(1.0 / p))
}

/// Local extrema of the sample sequence (first index of each plateau).
/// Without wrap the sequence runs over points 0..=N and both ends are kept.
fn extrema(samples: &[f64], wrap: bool) -> Vec<usize> {
    let n = samples.len();
    let v = |i: usize| samples[i % n];
    if wrap {
        let reps: Vec<usize> = (0..n).filter(|&i| v(i) != v(i + n - 1)).collect();
        let m = reps.len();
        (0..m)
            .filter(|&j| {
                let prev = v(reps[(j + m - 1) % m]);
                let next = v(reps[(j + 1) % m]);
                let cur = v(reps[j]);
                (cur - prev) * (next - cur) < 0.0
            })
            .map(|j| reps[j])
            .collect()
    } else {
        let reps: Vec<usize> = (0..=n).filter(|&i| i == 0 || v(i) != v(i - 1)).collect();
        let m = reps.len();
        (0..m)
            .filter(|&j| {
                j == 0 || j == m - 1 || {
                    let cur = v(reps[j]);
                    (cur - v(reps[j - 1])) * (v(reps[j + 1]) - cur) < 0.0
                }
            })
            .map(|j| reps[j])
            .collect()
    }
}

/// Beyond this many extrema, candidate pairs are limited to a window.
const ALL_PAIRS_LIMIT: usize = 256;
const PAIR_WINDOW: usize = 8;

type CandidateSet = (Vec<(usize, usize)>, Vec<usize>, Vec<Vec<(usize, usize)>>);

/// Candidate intervals between extrema, the split points, and the family of
/// maximal monotone runs as a seed.
fn sample_candidates(samples: &[f64], wrap: bool) -> CandidateSet {
    let n = samples.len();
    let ext = extrema(samples, wrap);
    let m = ext.len();
    let window = if m <= ALL_PAIRS_LIMIT { m } else { PAIR_WINDOW };
    let mut candidates = Vec::new();
    let mut runs = Vec::new();
    if wrap {
        for x in 0..m {
            for d in 1..m.min(window + 1) {
                let y = x + d;
                let pair = if y < m {
                    (ext[x], ext[y])
                } else {
                    (ext[x], ext[y - m] + n)
                };
                candidates.push(pair);
                if d == 1 {
                    runs.push(pair);
                }
            }
        }
    } else {
        for x in 0..m {
            for y in x + 1..m.min(x + window + 1) {
                candidates.push((ext[x], ext[y]));
                if y == x + 1 {
                    runs.push((ext[x], ext[y]));
                }
            }
        }
    }
    (candidates, ext, vec![runs])
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_family<O: Oscillations + ?Sized>(
    osc: &O,
    lambda: &LambdaSequence,
    p: f64,
    opts: &VariationOptions,
    candidates: &[(usize, usize)],
    split_points: &[usize],
    seeds: Vec<Vec<(usize, usize)>>,
    function_exact: bool,
) -> Result<VariationResult> {
    check_p(p)?;
    let cells = osc.cells();
    let inv = lambda.inverse_weights(cells);
    let (found, method) = match opts.strategy {
        Strategy::Exact if cells <= opts.exact_cap.min(MAX_BNB_CELLS) => (
            engine::branch_and_bound(osc, opts.wrap, &inv, p),
            Method::BranchAndBound,
        ),
        Strategy::Exact => {
            let h = engine::heuristic(osc, opts.wrap, &inv, p, candidates, split_points, seeds);
            let bound = engine::range_bound(osc, &inv, p);
            if h.sum >= bound * (1.0 - CERTIFICATE_RTOL) {
                (h, Method::RangeCertificate)
            } else {
                return Err(Error::Capacity {
                    what: format!("exact Λ-variation on a {cells}-cell grid"),
                    cap: opts.exact_cap.min(MAX_BNB_CELLS) as u64,
                });
            }
        }
        Strategy::Heuristic => (
            engine::heuristic(osc, opts.wrap, &inv, p, candidates, split_points, seeds),
            Method::Heuristic,
        ),
    };
    let grid_exact = method != Method::Heuristic;
    Ok(VariationResult {
        value: found.sum.powf(1.0 / p),
        witness: IntervalFamily::from_pairs(osc, found.intervals),
        method,
        grid_exact,
        function_exact: grid_exact && function_exact,
    })
}

/// p-Λ-variation over grid-aligned families of nonoverlapping intervals.
///
/// The exact strategy runs branch-and-bound up to `opts.exact_cap` cells;
/// above it, the result is still exact when the heuristic family meets the
/// oscillation-range upper bound, and a capacity error otherwise.
pub fn lambda_p_variation(
    f: &GridFunction1D,
    lambda: &LambdaSequence,
    p: f64,
    opts: &VariationOptions,
) -> Result<VariationResult> {
    let osc = SampleOsc(f.samples());
    let (candidates, split_points, seeds) = sample_candidates(f.samples(), opts.wrap);
    solve_family(
        &osc,
        lambda,
        p,
        opts,
        &candidates,
        &split_points,
        seeds,
        f.model() != SampleModel::Samples,
    )
}

/// Per-n entry of a BV(q(n)↑q) computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvqRow {
    pub n: u64,
    pub q: f64,
    /// Required minimum interval length 2^{-n}.
    pub mesh: f64,
    /// Minimum interval length in grid cells actually used.
    pub min_gap: usize,
    /// 2^{-n} is finer than the grid; the constraint was clamped to one cell.
    pub clamped: bool,
    pub value: f64,
    /// Partition points t_0 < … < t_{s−1}; the last interval ends at t_0 + N.
    pub partition: Vec<usize>,
    /// Indices of the other coordinates (multivariable case).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complementary: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvqResult {
    /// Supremum of the per-n values.
    pub value: f64,
    pub argmax_n: u64,
    pub rows: Vec<BvqRow>,
}

impl BvqResult {
    pub(crate) fn from_rows(rows: Vec<BvqRow>) -> Self {
        let (value, argmax_n) = rows
            .iter()
            .fold((f64::NEG_INFINITY, 0), |(v, k), r| if r.value > v { (r.value, r.n) } else { (v, k) });
        BvqResult {
            value,
            argmax_n,
            rows,
        }
    }
}

/// Minimum gap in cells for mesh 2^{-n} on an N-cell grid, and whether the
/// constraint had to be clamped to the grid spacing.
pub(crate) fn mesh_gap(cells: usize, n: u64) -> (usize, bool) {
    if n >= 63 || (1u64 << n) > cells as u64 {
        (1, true)
    } else {
        let scale = 1u64 << n;
        ((cells as u64).div_ceil(scale) as usize, false)
    }
}

pub(crate) fn bvq_row<O: Oscillations + ?Sized>(osc: &O, q: &QSequence, n: u64) -> Result<BvqRow> {
    let qn = q.q(n)?;
    let (min_gap, clamped) = mesh_gap(osc.cells(), n);
    let (sum, partition) = engine::partition_max(osc, min_gap, qn);
    Ok(BvqRow {
        n,
        q: qn,
        mesh: 0.5f64.powi(n.min(1100) as i32),
        min_gap,
        clamped,
        value: sum.powf(1.0 / qn),
        partition,
        complementary: None,
    })
}

/// Per-n maxima of (Σ |f(I_k)|^{q(n)})^{1/q(n)} over periodic grid partitions
/// with every interval at least 2^{-n} long, for n = 1..=n_max.
pub fn bvq_variation(f: &GridFunction1D, q: &QSequence, n_max: u64) -> Result<BvqResult> {
    if n_max == 0 {
        return Err(argument("n_max must be at least 1"));
    }
    let osc = SampleOsc(f.samples());
    let rows = (1..=n_max).map(|n| bvq_row(&osc, q, n)).collect::<Result<Vec<_>>>()?;
    Ok(BvqResult::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use proptest::strategy::Strategy as Gen;

    fn grid(v: &[f64]) -> GridFunction1D {
        GridFunction1D::new(v.to_vec()).unwrap()
    }

    fn lambdas(v: &[f64]) -> LambdaSequence {
        LambdaSequence::explicit(v.to_vec()).unwrap()
    }

    #[test]
    fn oscillation_examples() {
        assert_eq!(oscillation(&grid(&[0.0, 1.0, 0.0]), 0, 1).unwrap(), 1.0);
        assert_eq!(oscillation(&grid(&[2.5; 4]), 1, 3).unwrap(), 0.0);
        let o = oscillation(&grid(&[0.0, 0.3, 0.9, 0.2]), 1, 3).unwrap();
        assert!((o - 0.1).abs() < 1e-15);
    }

    #[test]
    fn oscillation_rejects_bad_intervals() {
        let f = grid(&[0.0, 1.0, 0.0]);
        assert!(matches!(oscillation(&f, 2, 2), Err(Error::Argument(_))));
        assert!(matches!(oscillation(&f, 0, 4), Err(Error::Argument(_))));
        assert!(oscillation(&f, 2, 5).is_ok());
    }

    #[test]
    fn assigned_objective_examples() {
        let l = lambdas(&[1.0, 2.0]);
        assert_eq!(assigned_objective(&[1.0, 1.0], &l, 1.0).unwrap(), 1.5);
        let v = assigned_objective(&[1.0, 1.0], &l, 2.0).unwrap();
        assert!((v - 1.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(assigned_objective(&[], &l, 3.0).unwrap(), 0.0);
        assert!(assigned_objective(&[-1.0], &l, 1.0).is_err());
        assert!(assigned_objective(&[1.0], &l, 0.5).is_err());
    }

    #[test]
    fn lambda_p_variation_examples() {
        let l = lambdas(&[1.0, 2.0]);
        let f = grid(&[0.0, 1.0]);
        for wrap in [false, true] {
            let r = lambda_p_variation(&f, &l, 1.0, &VariationOptions::default().with_wrap(wrap)).unwrap();
            assert_eq!(r.value, 1.5);
            assert_eq!(r.witness.len(), 2);
            assert_eq!(r.method, Method::BranchAndBound);
        }
        let flat = grid(&[0.7; 6]);
        let r = lambda_p_variation(&flat, &l, 2.0, &VariationOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.witness.is_empty());
        let single = lambda_p_variation(&grid(&[0.0, 1.0]), &lambdas(&[1.0]), 2.0, &VariationOptions::default())
            .unwrap();
        assert_eq!(single.value, 1.0);
    }

    #[test]
    fn exact_beyond_cap_is_a_capacity_error_unless_certified() {
        let l = LambdaSequence::power(1.0).unwrap();
        let rough: Vec<f64> = (0..20).map(|i| ((i * 7919) % 13) as f64).collect();
        let err = lambda_p_variation(&grid(&rough), &l, 1.0, &VariationOptions::default()).unwrap_err();
        assert_eq!(
            err,
            Error::Capacity {
                what: "exact Λ-variation on a 20-cell grid".into(),
                cap: 14
            }
        );
        // a two-level step function is certified exact at any size
        let steps: Vec<f64> = (0..40).map(|i| if i % 4 < 2 { 0.0 } else { 3.0 }).collect();
        let r = lambda_p_variation(&grid(&steps), &l, 2.0, &VariationOptions::default()).unwrap();
        assert_eq!(r.method, Method::RangeCertificate);
        let expected = (9.0 * l.partial_sum(20).unwrap()).sqrt();
        assert!((r.value - expected).abs() < 1e-12);
    }

    #[test]
    fn witness_objective_reproduces_value() {
        let f = grid(&[0.1, 0.9, 0.4, 0.5, 0.0, 0.8, 0.3]);
        let l = LambdaSequence::power(0.7).unwrap();
        for opts in [VariationOptions::default(), VariationOptions::heuristic()] {
            let r = lambda_p_variation(&f, &l, 1.5, &opts).unwrap();
            assert_eq!(r.witness_objective(&l, 1.5).unwrap(), r.value);
            assert!(r.witness.is_nonoverlapping(7, false));
        }
    }

    #[test]
    fn exactness_flags_follow_the_model() {
        let l = LambdaSequence::constant_one();
        let f = grid(&[0.0, 1.0, 0.0]);
        let r = lambda_p_variation(&f, &l, 1.0, &VariationOptions::default()).unwrap();
        assert!(r.grid_exact && !r.function_exact);
        let r = lambda_p_variation(&f.clone().with_model(SampleModel::Step), &l, 1.0, &VariationOptions::default())
            .unwrap();
        assert!(r.function_exact);
        let r = lambda_p_variation(&f.with_model(SampleModel::Step), &l, 1.0, &VariationOptions::heuristic()).unwrap();
        assert!(!r.grid_exact && !r.function_exact);
    }

    #[test]
    fn bvq_examples() {
        let q2 = QSequence::constant(2.0).unwrap();
        let r = bvq_variation(&grid(&[0.0, 1.0]), &q2, 3).unwrap();
        assert!((r.value - 2f64.sqrt()).abs() < 1e-15);
        assert!(!r.rows[0].clamped && r.rows[1].clamped && r.rows[2].clamped);

        let r = bvq_variation(&grid(&[4.0; 8]), &q2, 3).unwrap();
        assert_eq!(r.value, 0.0);

        let q1 = QSequence::constant(1.0).unwrap();
        let r = bvq_variation(&grid(&[0.0, 1.0, 0.0, 1.0]), &q1, 2).unwrap();
        assert_eq!(r.value, 4.0);
        assert_eq!(r.argmax_n, 2);
        assert_eq!(r.rows[0].value, 0.0);
        assert_eq!(r.rows[1].partition.len(), 4);
        assert!(bvq_variation(&grid(&[0.0]), &q1, 0).is_err());
    }

    #[test]
    fn mesh_gap_rounds_up_and_clamps() {
        assert_eq!(mesh_gap(10, 1), (5, false));
        assert_eq!(mesh_gap(10, 2), (3, false));
        assert_eq!(mesh_gap(10, 3), (2, false));
        assert_eq!(mesh_gap(10, 4), (1, true));
        assert_eq!(mesh_gap(8, 3), (1, false));
        assert_eq!(mesh_gap(8, 70), (1, true));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let f: GridFunction1D = serde_json::from_str(r#"{"resolution":3,"samples":[0,1,0]}"#).unwrap();
        assert_eq!(f.samples(), &[0.0, 1.0, 0.0]);
        assert_eq!(f.model(), SampleModel::Samples);
        let back: GridFunction1D = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<GridFunction1D>(r#"{"resolution":2,"samples":[0,1,0]}"#).is_err());
        assert!(serde_json::from_str::<GridFunction1D>(r#"{"resolution":1,"samples":[0],"x":1}"#).is_err());
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut p = perm.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }

    fn samples_strategy(max_n: usize) -> impl Gen<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, 1..=max_n)
    }

    fn lambda_strategy() -> impl Gen<Value = Vec<f64>> {
        prop::collection::vec(0.5f64..5.0, 16).prop_map(|mut v| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sorted_pairing_beats_every_permutation(
            osc in prop::collection::vec(0.0f64..2.0, 0..=6),
            lam in lambda_strategy(),
            p in 1.0f64..4.0,
        ) {
            let l = lambdas(&lam);
            let best = assigned_objective(&osc, &l, p).unwrap();
            for perm in permutations(osc.len()) {
                let s: f64 = perm.iter().enumerate().map(|(rank, &i)| osc[i].powf(p) / lam[rank]).sum();
                prop_assert!(best >= s.powf(1.0 / p) - 1e-12);
            }
        }

        #[test]
        fn heuristic_never_exceeds_exact(
            s in samples_strategy(10),
            lam in lambda_strategy(),
            p in 1.0f64..3.0,
            wrap in any::<bool>(),
        ) {
            let f = grid(&s);
            let l = lambdas(&lam);
            let exact = lambda_p_variation(&f, &l, p, &VariationOptions::default().with_wrap(wrap)).unwrap();
            let heur = lambda_p_variation(&f, &l, p, &VariationOptions::heuristic().with_wrap(wrap)).unwrap();
            prop_assert!(heur.value <= exact.value + 1e-12);
            prop_assert!(heur.witness.is_nonoverlapping(s.len(), wrap));
            prop_assert!(exact.witness.is_nonoverlapping(s.len(), wrap));
        }

        #[test]
        fn scaling_is_absolutely_homogeneous(
            s in samples_strategy(8),
            c in -3.0f64..3.0,
            p in 1.0f64..3.0,
        ) {
            let f = grid(&s);
            let l = LambdaSequence::power(1.0).unwrap();
            let base = lambda_p_variation(&f, &l, p, &VariationOptions::default()).unwrap().value;
            let scaled = lambda_p_variation(&f.scaled(c), &l, p, &VariationOptions::default()).unwrap().value;
            prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * (1.0 + base));

            let q = QSequence::linear(0.5, 1.0, None).unwrap();
            let b0 = bvq_variation(&f, &q, 3).unwrap().value;
            let b1 = bvq_variation(&f.scaled(c), &q, 3).unwrap().value;
            prop_assert!((b1 - c.abs() * b0).abs() <= 1e-12 * (1.0 + b0));
        }

        #[test]
        fn larger_weights_never_increase_variation(
            s in samples_strategy(9),
            lam in lambda_strategy(),
            bump in prop::collection::vec(0.0f64..3.0, 16),
        ) {
            let mut bigger: Vec<f64> = lam.iter().zip(&bump).map(|(a, b)| a + b).collect();
            // keep it nondecreasing while staying pointwise ≥ lam
            for i in 1..bigger.len() {
                bigger[i] = bigger[i].max(bigger[i - 1]);
            }
            let f = grid(&s);
            let v = lambda_p_variation(&f, &lambdas(&lam), 1.0, &VariationOptions::default()).unwrap().value;
            let w = lambda_p_variation(&f, &lambdas(&bigger), 1.0, &VariationOptions::default()).unwrap().value;
            prop_assert!(w <= v + 1e-12);
        }

        #[test]
        fn duplicating_samples_keeps_the_step_variation(s in samples_strategy(7), p in 1.0f64..3.0) {
            let f = grid(&s).with_model(SampleModel::Step);
            let l = LambdaSequence::power(1.0).unwrap();
            let v = lambda_p_variation(&f, &l, p, &VariationOptions::default()).unwrap().value;
            let w = lambda_p_variation(&f.upsampled(2), &l, p, &VariationOptions::default()).unwrap().value;
            prop_assert!((v - w).abs() <= 1e-12 * (1.0 + v));
        }

        #[test]
        fn bvq_rows_grow_with_n_for_constant_q(s in samples_strategy(12), q in 1.0f64..4.0) {
            let f = grid(&s);
            let r = bvq_variation(&f, &QSequence::constant(q).unwrap(), 4).unwrap();
            let unclamped: Vec<&BvqRow> = r.rows.iter().filter(|row| !row.clamped).collect();
            for pair in unclamped.windows(2) {
                prop_assert!(pair[1].value >= pair[0].value - 1e-12);
            }
        }
    }
}
