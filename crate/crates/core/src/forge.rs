//! Step-function witnesses for a failing criterion.
//!
//! Stage k is a function g_k equal to A_k = 2^{-k} Φ_k^{1/p} on N_k blocks of
//! width 1/n_k starting at 2^{-k}, separated by gaps of the same width, and 0
//! elsewhere. The stages live in disjoint dyadic ranges [2^{-k}, 2^{1-k}), so
//! g = Σ g_k is a step function with exact rational breakpoints.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Error, Result};
use crate::sequences::{LambdaSequence, QSequence};
use crate::variation_1d::{
    check_p, lambda_p_variation, GridFunction1D, Method, SampleModel, VariationOptions,
};

/// Which index the exponent q(·) is read at for stage k.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QIndexing {
    /// q(n_k).
    #[default]
    StageSize,
    /// q(⌈log₂ n_k⌉), the smallest n with 2^{-n} ≤ 1/n_k.
    MeshLevel,
}

impl std::str::FromStr for QIndexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stage-size" => Ok(QIndexing::StageSize),
            "mesh-level" => Ok(QIndexing::MeshLevel),
            other => Err(argument(format!(
                "q indexing must be \"stage-size\" or \"mesh-level\", got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeConfig {
    /// Largest n_k examined.
    pub search_cap: u64,
    pub q_indexing: QIndexing,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig {
            search_cap: 1 << 20,
            q_indexing: QIndexing::StageSize,
        }
    }
}

/// Which term decided N_k = min(m_k, s_k).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    BlocksEqualM,
    BlocksEqualS,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessStage {
    pub k: u32,
    pub n: u64,
    pub m: u64,
    pub s: u64,
    /// N_k = min(m_k, s_k).
    pub blocks: u64,
    pub p: f64,
    /// Φ_k = 1/S_{m_k}.
    pub phi: f64,
    /// 2^{-k} Φ_k^{1/p}.
    pub amplitude: f64,
    pub q_indexing: QIndexing,
    pub q_at_n: f64,
    pub mesh_level: u64,
    pub q_at_mesh_level: f64,
    pub q_used: f64,
    /// S_m^{1/p} / m^{1/q_used}.
    pub ratio: f64,
    /// 2^{-4k}.
    pub threshold: f64,
    pub branch: Branch,
}

fn mesh_level(n: u64) -> u64 {
    // ⌈log₂ n⌉
    64 - (n - 1).leading_zeros() as u64
}

fn stage_q(q: &QSequence, n: u64, indexing: QIndexing) -> Result<(f64, f64, f64)> {
    let at_n = q.q(n)?;
    let at_mesh = q.q(mesh_level(n).max(1))?;
    let used = match indexing {
        QIndexing::StageSize => at_n,
        QIndexing::MeshLevel => at_mesh,
    };
    Ok((at_n, at_mesh, used))
}

impl WitnessStage {
    /// Checks n_k ≥ 2^{k+2}, m_k ≤ n_k, the ratio bound, the definitions of
    /// s_k and N_k, (2s_k − 1)/n_k ≥ 2^{-k-1}, and that the support ends by
    /// 2^{1-k}. Integer conditions are checked exactly.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Verification(format!("stage {}: {what}", self.k)));
        let (k, n, m, s) = (self.k, self.n as u128, self.m as u128, self.s as u128);
        let two_k = 1u128 << k;
        if n < 4 * two_k {
            return fail("n_k < 2^{k+2}");
        }
        if m == 0 || m > n {
            return fail("m_k outside 1..=n_k");
        }
        if !(self.ratio < self.threshold) {
            return fail("ratio bound violated");
        }
        // s = max{ j : 2j ≤ n/2^k + 1 }  ⇔  2s·2^k ≤ n + 2^k < 2(s+1)·2^k
        if !(2 * s * two_k <= n + two_k && n + two_k < 2 * (s + 1) * two_k) {
            return fail("s_k does not match its definition");
        }
        if self.blocks as u128 != m.min(s) {
            return fail("N_k ≠ min(m_k, s_k)");
        }
        if s == 0 || 2 * two_k * (2 * s - 1) < n {
            return fail("(2s_k − 1)/n_k < 2^{-k-1}");
        }
        if two_k * (2 * self.blocks as u128 - 1) > n {
            return fail("support extends past 2^{1-k}");
        }
        Ok(())
    }

    /// Left end 2^{-k} of the support.
    pub fn support_start(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::one() << self.k)
    }

    /// Right end 2^{-k} + (2N_k − 1)/n_k of the support.
    pub fn support_end(&self) -> BigRational {
        self.support_start() + BigRational::new(BigInt::from(2 * self.blocks - 1), BigInt::from(self.n))
    }

    /// Block j (1-based): [2^{-k} + (2j−2)/n_k, 2^{-k} + (2j−1)/n_k).
    pub fn block(&self, j: u64) -> (BigRational, BigRational) {
        let base = self.support_start();
        let n = BigInt::from(self.n);
        (
            &base + BigRational::new(BigInt::from(2 * j - 2), n.clone()),
            base + BigRational::new(BigInt::from(2 * j - 1), n),
        )
    }

    /// (2N_k − 1)·A_k^{q_used}: the partition sum over the consecutive
    /// block/gap increments.
    pub fn divergence_value(&self) -> f64 {
        (2 * self.blocks - 1) as f64 * self.amplitude.powf(self.q_used)
    }

    /// 2^{-k}·2^{1/p}.
    pub fn norm_cap(&self, p: f64) -> f64 {
        0.5f64.powi(self.k as i32) * 2f64.powf(1.0 / p)
    }
}

/// Searches n = 2^{k+2}, 2^{k+2} + 1, … up to the cap for the first n whose
/// maximiser m of ρ/S_ρ^{1/p} over ρ ≤ n satisfies S_m^{1/p}/m^{1/q} < 2^{-4k}.
pub fn find_stage(
    lambda: &LambdaSequence,
    q: &QSequence,
    p: f64,
    k: u32,
    cfg: &ForgeConfig,
) -> Result<WitnessStage> {
    check_p(p)?;
    if k == 0 {
        return Err(argument("stages are numbered from 1"));
    }
    if k + 2 >= 64 || (1u64 << (k + 2)) > cfg.search_cap {
        return Err(argument(format!(
            "stage {k} needs n ≥ 2^{}, above the search cap {}",
            k + 2,
            cfg.search_cap
        )));
    }
    let start = 1u64 << (k + 2);
    let cap = match lambda.len() {
        Some(len) => cfg.search_cap.min(len as u64),
        None => cfg.search_cap,
    };
    let threshold = 0.5f64.powi(4 * k as i32);
    let ip = 1.0 / p;

    let mut m = 0u64;
    let mut best_score = f64::NEG_INFINITY;
    let mut best_ratio = f64::INFINITY;
    let mut best_n = start;
    for n in 1..=cap {
        let s = lambda.partial_sum(n as usize)?;
        let score = (n as f64).ln() - s.ln() * ip;
        if score > best_score {
            best_score = score;
            m = n;
        }
        if n < start {
            continue;
        }
        let (_, _, q_used) = stage_q(q, n, cfg.q_indexing)?;
        let ratio = lambda.partial_sum(m as usize)?.powf(ip) / (m as f64).powf(1.0 / q_used);
        if ratio < best_ratio {
            best_ratio = ratio;
            best_n = n;
        }
        if ratio < threshold {
            let stage = make_stage(lambda, q, p, k, n, m, ratio, threshold, cfg.q_indexing)?;
            stage.check_invariants()?;
            return Ok(stage);
        }
    }
    Err(Error::SearchExhausted {
        stage: k,
        cap,
        best_ratio,
        best_n,
        threshold,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_stage(
    lambda: &LambdaSequence,
    q: &QSequence,
    p: f64,
    k: u32,
    n: u64,
    m: u64,
    ratio: f64,
    threshold: f64,
    q_indexing: QIndexing,
) -> Result<WitnessStage> {
    let (q_at_n, q_at_mesh_level, q_used) = stage_q(q, n, q_indexing)?;
    let s = (n + (1u64 << k)) >> (k + 1);
    let blocks = m.min(s);
    let phi = 1.0 / lambda.partial_sum(m as usize)?;
    Ok(WitnessStage {
        k,
        n,
        m,
        s,
        blocks,
        p,
        phi,
        amplitude: 0.5f64.powi(k as i32) * phi.powf(1.0 / p),
        q_indexing,
        q_at_n,
        mesh_level: mesh_level(n),
        q_at_mesh_level,
        q_used,
        ratio,
        threshold,
        branch: if blocks == m {
            Branch::BlocksEqualM
        } else {
            Branch::BlocksEqualS
        },
    })
}

/// One constant piece of the witness.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub stage: u32,
    pub start: BigRational,
    pub end: BigRational,
    pub value: f64,
}

/// g = Σ g_k on [0, 1), extended with period 1, and its separable
/// multivariable assembly f(x_1, …, x_d) = Σ_j g(x_j).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Witness {
    stages: Vec<WitnessStage>,
    blocks: Vec<Block>,
}

/// Assembles the stages after checking that their supports are disjoint.
pub fn build_witness(stages: &[WitnessStage]) -> Result<Witness> {
    for (i, a) in stages.iter().enumerate() {
        for b in &stages[i + 1..] {
            let disjoint = a.support_end() <= b.support_start() || b.support_end() <= a.support_start();
            if !disjoint {
                return Err(domain(format!(
                    "stages k = {} and k = {} have overlapping supports",
                    a.k, b.k
                )));
            }
        }
    }
    let mut blocks: Vec<Block> = stages
        .iter()
        .flat_map(|st| {
            (1..=st.blocks).map(move |j| {
                let (start, end) = st.block(j);
                Block {
                    stage: st.k,
                    start,
                    end,
                    value: st.amplitude,
                }
            })
        })
        .collect();
    blocks.sort_by(|a, b| a.start.cmp(&b.start));
    Ok(Witness {
        stages: stages.to_vec(),
        blocks,
    })
}

fn fractional(t: &BigRational) -> BigRational {
    t - t.floor()
}

impl Witness {
    pub fn stages(&self) -> &[WitnessStage] {
        &self.stages
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn stage(&self, k: u32) -> Option<&WitnessStage> {
        self.stages.iter().find(|s| s.k == k)
    }

    /// g(t), exact in t.
    pub fn eval(&self, t: &BigRational) -> f64 {
        let t = fractional(t);
        let idx = self.blocks.partition_point(|b| b.start <= t);
        match idx.checked_sub(1).map(|i| &self.blocks[i]) {
            Some(b) if t < b.end => b.value,
            _ => 0.0,
        }
    }

    /// f(x) = Σ_j g(x_j).
    pub fn eval_assembled(&self, x: &[BigRational]) -> f64 {
        x.iter().map(|t| self.eval(t)).sum()
    }

    /// Sorted distinct breakpoints in [0, 1), starting with 0.
    pub fn breakpoints(&self) -> Vec<BigRational> {
        let one = BigRational::one();
        let mut pts = vec![BigRational::zero()];
        for b in &self.blocks {
            pts.push(b.start.clone());
            if b.end < one {
                pts.push(b.end.clone());
            }
        }
        pts.sort();
        pts.dedup();
        pts
    }

    /// g as a step function on its breakpoint grid: cell i holds the value
    /// on [t_i, t_{i+1}). Interval oscillations of a step function only
    /// depend on this value sequence.
    pub fn step_function(&self) -> Result<GridFunction1D> {
        let values = self.breakpoints().iter().map(|t| self.eval(t)).collect();
        Ok(GridFunction1D::new(values)?.with_model(SampleModel::Step))
    }

    /// Breakpoints formatted as "num/den".
    pub fn breakpoint_strings(&self) -> Vec<String> {
        self.breakpoints().iter().map(|t| t.to_string()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageNorm {
    pub k: u32,
    /// p-Λ-variation of g_k on its breakpoint grid.
    pub norm: f64,
    pub method: Method,
    /// (Σ_{j≤2N_k} A_k^p / λ_j)^{1/p}.
    pub analytic: f64,
    /// 2^{-k}·2^{1/p}.
    pub cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// Σ_k 2^{-k}·2^{1/p} over the given stages.
    pub bound: f64,
    pub stages: Vec<StageNorm>,
}

/// Variation of one stage, exact on its breakpoint grid.
pub fn stage_norm(stage: &WitnessStage, lambda: &LambdaSequence, p: f64) -> Result<StageNorm> {
    let g = build_witness(std::slice::from_ref(stage))?.step_function()?;
    let r = lambda_p_variation(&g, lambda, p, &VariationOptions::default())?;
    let inv = lambda.inverse_weights(2 * stage.blocks as usize);
    let analytic = (stage.amplitude.powf(p) * inv.iter().sum::<f64>()).powf(1.0 / p);
    Ok(StageNorm {
        k: stage.k,
        norm: r.value,
        method: r.method,
        analytic,
        cap: stage.norm_cap(p),
    })
}

/// Σ_k 2^{-k}·2^{1/p}, after checking every ‖g_k‖ against its 2^{-k}·2^{1/p}.
pub fn witness_norm_bound(stages: &[WitnessStage], lambda: &LambdaSequence, p: f64) -> Result<NormReport> {
    check_p(p)?;
    let norms = stages
        .iter()
        .map(|st| stage_norm(st, lambda, p))
        .collect::<Result<Vec<_>>>()?;
    for n in &norms {
        if n.norm > n.cap * (1.0 + 1e-12) {
            return Err(Error::Verification(format!(
                "‖g_{}‖ = {:e} exceeds 2^-k·2^(1/p) = {:e}",
                n.k, n.norm, n.cap
            )));
        }
    }
    Ok(NormReport {
        bound: norms.iter().map(|n| n.cap).sum(),
        stages: norms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub k: u32,
    /// False when the witness has no stage k; the value is then 0.
    pub applicable: bool,
    /// Σ of |increment|^q over the 2N_k − 1 consecutive mesh-1/n_k intervals
    /// inside the support, along the first axis.
    pub value: f64,
    /// 2^k.
    pub threshold: f64,
    pub q_used: f64,
    pub terms: u64,
    pub branch: Option<Branch>,
}

/// Lower bound on the q-partition sum at mesh 1/n_k from the increments of
/// f along the first axis (other coordinates at 0), checked against 2^k.
pub fn witness_divergence_check(witness: &Witness, k: u32, dim: usize) -> Result<DivergenceReport> {
    if dim == 0 {
        return Err(argument("dimension must be at least 1"));
    }
    let threshold = 2f64.powi(k as i32);
    let Some(stage) = witness.stage(k) else {
        return Ok(DivergenceReport {
            k,
            applicable: false,
            value: 0.0,
            threshold,
            q_used: f64::NAN,
            terms: 0,
            branch: None,
        });
    };
    let step = BigRational::new(BigInt::one(), BigInt::from(stage.n));
    let mut point = vec![BigRational::zero(); dim];
    let terms = 2 * stage.blocks - 1;
    let mut t = stage.support_start();
    let mut value = 0.0;
    for _ in 0..terms {
        point[0] = t.clone();
        let a = witness.eval_assembled(&point);
        t += &step;
        point[0] = t.clone();
        let b = witness.eval_assembled(&point);
        value += (b - a).abs().powf(stage.q_used);
    }
    if value < threshold * (1.0 - 1e-12) {
        return Err(Error::Verification(format!(
            "divergence check failed for stage {k}: partition sum {value:e} < 2^{k}"
        )));
    }
    Ok(DivergenceReport {
        k,
        applicable: true,
        value,
        threshold,
        q_used: stage.q_used,
        terms,
        branch: Some(stage.branch),
    })
}

/// Ensures a rational lies in [0, 1).
pub fn in_unit_interval(t: &BigRational) -> bool {
    !t.is_negative() && t < &BigRational::one()
}
