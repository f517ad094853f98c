//! Maximisation of F(x) = Σ x_i^q over ordered vectors x_1 ≥ … ≥ x_n ≥ 0
//! with Σ x_i/λ_i ≤ 1.
//!
//! Writing d_i = x_i − x_{i+1} (x_{n+1} = 0) turns the feasible boundary into
//! a simplex whose vertices are the vectors with k leading entries equal to
//! 1/S_k. For q ≥ 1 the convex F peaks at a vertex; for 0 < q < 1 the
//! maximum over vertices sits at k = n.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::sequences::LambdaSequence;

/// Dominance checks allow this much absolute slack in double precision.
pub const DOMINANCE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalProblem {
    weights: Vec<f64>,
    q: f64,
    #[serde(skip)]
    partial_sums: Vec<f64>,
}

impl ExtremalProblem {
    /// The problem on the first `n` weights of `lambda`.
    pub fn new(lambda: &LambdaSequence, n: usize, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(argument("the extremal problem needs n ≥ 1"));
        }
        check_q(q)?;
        let prefix = lambda.prefix(n)?;
        Ok(ExtremalProblem {
            weights: prefix.weights,
            q,
            partial_sums: prefix.partial_sums,
        })
    }

    pub fn from_weights(weights: Vec<f64>, q: f64) -> Result<Self> {
        let n = weights.len();
        Self::new(&LambdaSequence::explicit(weights)?, n, q)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// S_k for 1-based `k`.
    pub fn partial_sum(&self, k: usize) -> f64 {
        self.partial_sums[k - 1]
    }

    /// F(x) = Σ x_i^q.
    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.powf(self.q)).sum()
    }

    /// Σ x_i/λ_i.
    pub fn constraint(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.weights).map(|(v, l)| v / l).sum()
    }

    /// x_1 = … = x_k = 1/S_k, remaining entries 0.
    pub fn vertex(&self, k: usize) -> Vec<f64> {
        let v = 1.0 / self.partial_sum(k);
        (0..self.n()).map(|i| if i < k { v } else { 0.0 }).collect()
    }

    /// Checks in exact rational arithmetic that vertex `k` satisfies the
    /// constraint with equality (the weights are read as exact binary values).
    pub fn vertex_is_tight_exact(&self, k: usize) -> Result<bool> {
        self.check_k(k)?;
        let weights: Vec<BigRational> = self
            .weights
            .iter()
            .map(|&w| BigRational::from_float(w).ok_or_else(|| domain(format!("weight {w} is not finite"))))
            .collect::<Result<_>>()?;
        let s: BigRational = weights[..k]
            .iter()
            .fold(BigRational::zero(), |acc, w| acc + w.recip());
        let x = s.recip();
        let total = weights[..k]
            .iter()
            .fold(BigRational::zero(), |acc, w| acc + &x / w);
        Ok(total == BigRational::new(BigInt::one(), BigInt::one()))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if (1..=self.n()).contains(&k) {
            Ok(())
        } else {
            Err(argument(format!("k = {k} outside 1..={}", self.n())))
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 {
        Ok(())
    } else {
        Err(argument(format!("exponent q = {q} must be positive and finite")))
    }
}

/// k / S_k^q.
pub fn candidate_value(problem: &ExtremalProblem, k: usize) -> Result<f64> {
    problem.check_k(k)?;
    Ok(k as f64 / problem.partial_sum(k).powf(problem.q))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// q ≥ 1: F is convex and the best vertex is optimal.
    Convex,
    /// 0 < q < 1: the optimum is taken at k = n.
    Concave,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSolution {
    pub k_star: usize,
    pub x: Vec<f64>,
    pub value: f64,
    /// candidate_value(k) for k = 1..=n.
    pub candidates: Vec<f64>,
    /// Every k whose candidate is within relative 1e-12 of the maximum.
    pub optimal_ks: Vec<usize>,
    pub regime: Regime,
    /// In the concave regime, whether k = n is also the candidate argmax.
    /// Always true in the convex regime.
    pub argmax_consistent: bool,
}

pub fn solve_extremal(problem: &ExtremalProblem) -> Result<ExtremalSolution> {
    check_q(problem.q)?;
    let n = problem.n();
    let candidates = (1..=n)
        .map(|k| candidate_value(problem, k))
        .collect::<Result<Vec<_>>>()?;
    let best = candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = candidates.iter().position(|&v| v == best).expect("nonempty") + 1;
    let optimal_ks: Vec<usize> = (1..=n)
        .filter(|&k| candidates[k - 1] >= best - 1e-12 * best.abs().max(1.0))
        .collect();
    let (regime, k_star, argmax_consistent) = if problem.q >= 1.0 {
        (Regime::Convex, argmax, true)
    } else {
        (Regime::Concave, n, optimal_ks.contains(&n))
    };
    Ok(ExtremalSolution {
        k_star,
        x: problem.vertex(k_star),
        value: candidates[k_star - 1],
        candidates,
        optimal_ks,
        regime,
        argmax_consistent,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexReport {
    pub trials: usize,
    pub optimum: f64,
    pub max_observed: f64,
    /// max_observed − optimum; nonpositive when no sample beats the optimum.
    pub max_gap: f64,
    /// Samples exceeding the optimum by more than [`DOMINANCE_TOL`].
    pub violations: usize,
}

impl VertexReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// A random point of the ordered feasible boundary: sorted uniform variates
/// scaled so that Σ x_i/λ_i = 1.
pub fn random_feasible_point<R: Rng + ?Sized>(problem: &ExtremalProblem, rng: &mut R) -> Vec<f64> {
    loop {
        let mut x: Vec<f64> = (0..problem.n()).map(|_| rng.gen::<f64>()).collect();
        x.sort_by(|a, b| b.total_cmp(a));
        let c = problem.constraint(&x);
        if c > 0.0 {
            return x.into_iter().map(|v| v / c).collect();
        }
    }
}

/// Samples `trials` feasible ordered points and compares F against the
/// closed-form optimum.
pub fn verify_vertex_optimality<R: Rng + ?Sized>(
    problem: &ExtremalProblem,
    trials: usize,
    rng: &mut R,
) -> Result<VertexReport> {
    if trials == 0 {
        return Err(argument("at least one trial is required"));
    }
    let optimum = solve_extremal(problem)?.value;
    let mut max_observed = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..trials {
        let x = random_feasible_point(problem, rng);
        let v = problem.objective(&x);
        max_observed = max_observed.max(v);
        if v > optimum + DOMINANCE_TOL {
            violations += 1;
        }
    }
    Ok(VertexReport {
        trials,
        optimum,
        max_observed,
        max_gap: max_observed - optimum,
        violations,
    })
}
