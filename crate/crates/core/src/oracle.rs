//! Brute-force reference computations for tests and `--verify` runs. They
//! share no search code with the engines they check.

use crate::error::{argument, Error, Result};
use crate::extremal::ExtremalProblem;
use crate::sequences::LambdaSequence;
use crate::variation_1d::{check_p, GridFunction1D};

pub const ORACLE_MAX_CELLS: usize = 12;
pub const ORACLE_MAX_VARIABLES: usize = 4;

/// Maximum of (Σ o_(i)^p / λ_i)^{1/p} over every family of nonoverlapping
/// grid intervals, found by listing all families.
pub fn oracle_lambda_p_variation(f: &GridFunction1D, lambda: &LambdaSequence, p: f64, wrap: bool) -> Result<f64> {
    check_p(p)?;
    let n = f.resolution();
    if n > ORACLE_MAX_CELLS {
        return Err(Error::Capacity {
            what: format!("exhaustive enumeration on a {n}-cell grid"),
            cap: ORACLE_MAX_CELLS as u64,
        });
    }
    let s = f.samples();
    let mut intervals = Vec::new();
    for a in 0..n {
        let last = if wrap { a + n } else { n };
        for b in a + 1..=last {
            let mask = (a..b).fold(0u32, |m, c| m | 1 << (c % n));
            intervals.push((mask, (s[b % n] - s[a]).abs()));
        }
    }
    let weights: Vec<f64> = (1..=n).map(|i| lambda.weight(i).unwrap_or(f64::INFINITY)).collect();
    let mut best = 0.0f64;
    let mut chosen = Vec::with_capacity(n);
    enumerate(&intervals, 0, 0, &mut chosen, &mut |family| {
        let mut o = family.to_vec();
        o.sort_by(|x, y| y.partial_cmp(x).expect("finite oscillations"));
        let v: f64 = o.iter().zip(&weights).map(|(o, l)| o.powf(p) / l).sum();
        best = best.max(v);
    });
    Ok(best.powf(1.0 / p))
}

fn enumerate(
    intervals: &[(u32, f64)],
    from: usize,
    used: u32,
    chosen: &mut Vec<f64>,
    visit: &mut impl FnMut(&[f64]),
) {
    visit(chosen);
    for (i, &(mask, o)) in intervals.iter().enumerate().skip(from) {
        if mask & used == 0 {
            chosen.push(o);
            enumerate(intervals, i + 1, used | mask, chosen, visit);
            chosen.pop();
        }
    }
}

/// Grid search for max Σ x_i^q over ordered x with Σ x_i/λ_i = 1.
///
/// Ordered feasible points are the convex combinations Σ u_j v_j of the
/// vertices v_j = (1/S_j, …, 1/S_j, 0, …, 0); the weights u run over the grid
/// u_j ∈ {0, 1/D, …, 1} with Σ u_j = 1. Along the last grid edge F is convex
/// (q ≥ 1) or concave (q < 1), so that edge is searched at its endpoints or by
/// integer ternary search instead of point by point.
pub fn oracle_extremal(problem: &ExtremalProblem, density: usize) -> Result<f64> {
    let n = problem.n();
    if n > ORACLE_MAX_VARIABLES {
        return Err(Error::Capacity {
            what: format!("grid search in {n} variables"),
            cap: ORACLE_MAX_VARIABLES as u64,
        });
    }
    if density == 0 {
        return Err(argument("grid density must be at least 1"));
    }
    let q = problem.q();
    let inv_s: Vec<f64> = (1..=n).map(|j| 1.0 / problem.partial_sum(j)).collect();
    let d = density as f64;
    let value = |counts: &[usize]| -> f64 {
        // x_i = Σ_{j ≥ i} u_j / S_j
        let mut acc = 0.0;
        let mut total = 0.0;
        for j in (0..n).rev() {
            acc += counts[j] as f64 / d * inv_s[j];
            total += acc.powf(q);
        }
        total
    };
    if n == 1 {
        return Ok(value(&[density]));
    }
    let mut best = f64::NEG_INFINITY;
    let mut counts = vec![0usize; n];
    outer(&mut counts, 0, density, &mut |counts: &mut Vec<usize>, rest| {
        let mut at = |t: usize| {
            counts[n - 2] = t;
            counts[n - 1] = rest - t;
            value(counts)
        };
        let edge_max = if q >= 1.0 {
            at(0).max(at(rest))
        } else {
            let (mut lo, mut hi) = (0usize, rest);
            while hi - lo > 2 {
                let m1 = lo + (hi - lo) / 3;
                let m2 = hi - (hi - lo) / 3;
                if at(m1) < at(m2) {
                    lo = m1 + 1;
                } else {
                    hi = m2;
                }
            }
            (lo..=hi).map(&mut at).fold(f64::NEG_INFINITY, f64::max)
        };
        best = best.max(edge_max);
    });
    Ok(best)
}

/// Assigns the first n − 2 counts in every way that leaves `rest` ≥ 0.
fn outer(counts: &mut Vec<usize>, pos: usize, rest: usize, edge: &mut impl FnMut(&mut Vec<usize>, usize)) {
    if pos + 2 == counts.len() {
        edge(counts, rest);
        return;
    }
    for c in 0..=rest {
        counts[pos] = c;
        outer(counts, pos + 1, rest - c, edge);
    }
}
