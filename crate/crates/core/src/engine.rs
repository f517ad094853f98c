//! Interval-family optimisation shared by the one- and multi-variable
//! variation routines.
//!
//! Grid points are integers; a period has `cells` unit cells. An interval
//! `(a, b)` satisfies `a < b <= a + cells` and covers the cells `a..b`
//! (taken modulo the period when wrapping is allowed). Two intervals are
//! nonoverlapping when they share no cell.
//!
//! All objectives are accumulated in rank order: the largest weight is paired
//! with 1/λ_1, the next with 1/λ_2, and so on. Keeping one summation order
//! everywhere makes values from different routes bit-identical when they pick
//! the same family.

use std::cmp::Ordering;

/// Oscillation of a function over grid intervals.
pub(crate) trait Oscillations: Sync {
    fn cells(&self) -> usize;

    /// |f(b) − f(a)| with both indices read modulo `cells`.
    fn osc(&self, a: usize, b: usize) -> f64;

    /// Largest oscillation over any interval.
    fn max_osc(&self) -> f64 {
        let n = self.cells();
        let mut m = 0.0f64;
        for a in 0..n {
            for b in a + 1..=a + n {
                m = m.max(self.osc(a, b));
            }
        }
        m
    }
}

/// Every interval of one period, in (start, end) order.
pub(crate) fn all_intervals(cells: usize, wrap: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..cells {
        let last = if wrap { a + cells } else { cells };
        for b in a + 1..=last {
            out.push((a, b));
        }
    }
    out
}

/// Σ_r w_(r) · inv[r] with the weights sorted in descending order; ranks past
/// the end of `inv` contribute nothing.
pub(crate) fn rank_sum(weights: &mut [f64], inv: &[f64]) -> f64 {
    weights.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    for (w, i) in weights.iter().zip(inv) {
        acc += w * i;
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Found {
    /// Objective before the outer 1/p power.
    pub sum: f64,
    pub intervals: Vec<(usize, usize)>,
}

#[derive(Clone, Copy)]
struct Candidate {
    a: usize,
    b: usize,
    weight: f64,
    mask: u64,
}

fn cell_mask(a: usize, b: usize, cells: usize) -> u64 {
    (a..b).fold(0u64, |m, c| m | (1u64 << (c % cells)))
}

fn by_weight_then_start(x: &(f64, usize, usize), y: &(f64, usize, usize)) -> Ordering {
    y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2))
}

/// Largest grid period the bitmask search supports.
pub(crate) const MAX_BNB_CELLS: usize = 63;

/// Exact maximisation by depth-first search over candidates sorted by
/// descending weight. Because candidates are taken in that order, the rank of
/// each new interval is the current family size, and a completion can gain at
/// most the next compatible weights paired with the next free ranks.
pub(crate) fn branch_and_bound<O: Oscillations + ?Sized>(
    osc: &O,
    wrap: bool,
    inv: &[f64],
    p: f64,
) -> Found {
    let cells = osc.cells();
    assert!(cells <= MAX_BNB_CELLS, "bitmask search limited to {MAX_BNB_CELLS} cells");
    let mut keyed: Vec<(f64, usize, usize)> = all_intervals(cells, wrap)
        .into_iter()
        .filter_map(|(a, b)| {
            let o = osc.osc(a, b);
            (o > 0.0).then(|| (o.powf(p), a, b))
        })
        .collect();
    keyed.sort_by(by_weight_then_start);
    let candidates = keyed
        .into_iter()
        .map(|(weight, a, b)| Candidate {
            a,
            b,
            weight,
            mask: cell_mask(a, b, cells),
        })
        .collect();

    let mut search = Search {
        candidates,
        inv,
        cells,
        best: 0.0,
        best_family: Vec::new(),
        stack: Vec::new(),
    };
    search.descend(0, 0, 0, 0.0);
    Found {
        sum: search.best,
        intervals: search.best_family,
    }
}

struct Search<'a> {
    candidates: Vec<Candidate>,
    inv: &'a [f64],
    cells: usize,
    best: f64,
    best_family: Vec<(usize, usize)>,
    stack: Vec<(usize, usize)>,
}

impl Search<'_> {
    fn descend(&mut self, start: usize, used: u64, rank: usize, sum: f64) {
        if sum > self.best {
            self.best = sum;
            self.best_family = self.stack.clone();
        }
        if rank >= self.inv.len() || self.inv[rank] == 0.0 {
            return;
        }
        let free = self.cells - used.count_ones() as usize;
        let mut bound = sum;
        let mut r = rank;
        for c in &self.candidates[start..] {
            if r - rank == free || r >= self.inv.len() {
                break;
            }
            if c.mask & used == 0 {
                bound += c.weight * self.inv[r];
                r += 1;
            }
        }
        if bound <= self.best {
            return;
        }
        for j in start..self.candidates.len() {
            let c = self.candidates[j];
            if c.mask & used != 0 {
                continue;
            }
            self.stack.push((c.a, c.b));
            self.descend(j + 1, used | c.mask, rank + 1, sum + c.weight * self.inv[rank]);
            self.stack.pop();
        }
    }
}

/// Cell occupancy for families on large grids.
struct Occupancy {
    cells: usize,
    used: Vec<bool>,
}

impl Occupancy {
    fn new(cells: usize) -> Self {
        Occupancy {
            cells,
            used: vec![false; cells],
        }
    }

    fn is_free(&self, a: usize, b: usize) -> bool {
        (a..b).all(|c| !self.used[c % self.cells])
    }

    fn mark(&mut self, a: usize, b: usize) {
        for c in a..b {
            self.used[c % self.cells] = true;
        }
    }
}

pub(crate) fn family_sum<O: Oscillations + ?Sized>(
    osc: &O,
    family: &[(usize, usize)],
    inv: &[f64],
    p: f64,
) -> f64 {
    let mut w: Vec<f64> = family.iter().map(|&(a, b)| osc.osc(a, b).powf(p)).collect();
    rank_sum(&mut w, inv)
}

/// Families larger than this skip the split/merge local search.
const LOCAL_SEARCH_LIMIT: usize = 256;
const LOCAL_SEARCH_ROUNDS: usize = 200;

/// Greedy selection by descending oscillation, followed by split/merge local
/// search and a final fill with any still-compatible candidate. `seeds` are
/// extra starting families that go through the same improvement steps.
pub(crate) fn heuristic<O: Oscillations + ?Sized>(
    osc: &O,
    wrap: bool,
    inv: &[f64],
    p: f64,
    candidates: &[(usize, usize)],
    split_points: &[usize],
    seeds: Vec<Vec<(usize, usize)>>,
) -> Found {
    let cells = osc.cells();
    let mut ordered: Vec<(f64, usize, usize)> = candidates
        .iter()
        .map(|&(a, b)| (osc.osc(a, b), a, b))
        .filter(|c| c.0 > 0.0)
        .collect();
    ordered.sort_by(by_weight_then_start);
    let ordered: Vec<(usize, usize)> = ordered.into_iter().map(|(_, a, b)| (a, b)).collect();

    let fill = |family: &mut Vec<(usize, usize)>| {
        let mut occ = Occupancy::new(cells);
        for &(a, b) in family.iter() {
            occ.mark(a, b);
        }
        for &(a, b) in &ordered {
            if occ.is_free(a, b) {
                occ.mark(a, b);
                family.push((a, b));
            }
        }
    };

    let mut starts = seeds;
    starts.push(Vec::new()); // empty start + fill = plain greedy

    let mut best = Found {
        sum: 0.0,
        intervals: Vec::new(),
    };
    for mut family in starts {
        family.retain(|&(a, b)| osc.osc(a, b) > 0.0);
        fill(&mut family);
        if family.len() <= LOCAL_SEARCH_LIMIT {
            local_search(osc, wrap, inv, p, &mut family, split_points);
            fill(&mut family);
        }
        let sum = family_sum(osc, &family, inv, p);
        if sum > best.sum {
            best = Found {
                sum,
                intervals: family,
            };
        }
    }
    best.intervals.sort_unstable();
    best
}

fn local_search<O: Oscillations + ?Sized>(
    osc: &O,
    wrap: bool,
    inv: &[f64],
    p: f64,
    family: &mut Vec<(usize, usize)>,
    split_points: &[usize],
) {
    let cells = osc.cells();
    let mut current = family_sum(osc, family, inv, p);
    for _ in 0..LOCAL_SEARCH_ROUNDS {
        let mut best_move: Option<(f64, Vec<(usize, usize)>)> = None;
        let mut consider = |trial: Vec<(usize, usize)>| {
            let s = family_sum(osc, &trial, inv, p);
            if s > current && best_move.as_ref().is_none_or(|(b, _)| s > *b) {
                best_move = Some((s, trial));
            }
        };
        for (idx, &(a, b)) in family.iter().enumerate() {
            let interior = split_points.iter().flat_map(|&c| {
                let lifted = if wrap { Some(c + cells) } else { None };
                std::iter::once(c).chain(lifted)
            });
            for c in interior.filter(|&c| a < c && c < b) {
                let mut trial = family.clone();
                trial.swap_remove(idx);
                trial.push((a, c));
                trial.push((c, b));
                consider(trial);
            }
        }
        for i in 0..family.len() {
            for j in 0..family.len() {
                let (a, b) = family[i];
                let (c, d) = family[j];
                if i == j || b % cells != c % cells {
                    continue;
                }
                // shift the second interval so it starts where the first ends
                let len = d - c;
                if b - a + len > cells || (!wrap && b + len > cells) {
                    continue;
                }
                let mut trial: Vec<(usize, usize)> = family
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, &iv)| iv)
                    .collect();
                trial.push((a, b + len));
                consider(trial);
            }
        }
        match best_move {
            Some((s, trial)) => {
                current = s;
                *family = normalise(trial, cells, wrap);
                family.retain(|&(a, b)| osc.osc(a, b) > 0.0);
            }
            None => break,
        }
    }
}

fn normalise(family: Vec<(usize, usize)>, cells: usize, wrap: bool) -> Vec<(usize, usize)> {
    family
        .into_iter()
        .map(|(a, b)| {
            if wrap && a >= cells {
                (a - cells, b - cells)
            } else {
                (a, b)
            }
        })
        .collect()
}

/// Upper bound on the objective sum from the oscillation range alone.
///
/// An interval with positive oscillation contains a cell with positive
/// oscillation, so a family has at most `active` useful members, each of weight
/// at most `max_osc^p`.
pub(crate) fn range_bound<O: Oscillations + ?Sized>(osc: &O, inv: &[f64], p: f64) -> f64 {
    let cells = osc.cells();
    let active = (0..cells).filter(|&c| osc.osc(c, c + 1) > 0.0).count();
    let w = osc.max_osc().powf(p);
    let mut acc = 0.0;
    for i in inv.iter().take(active) {
        acc += w * i;
    }
    acc
}

/// Maximum of Σ osc(t_{i−1}, t_i)^q over periodic partitions of one period
/// whose consecutive points are at least `min_gap` cells apart.
/// Returns the sum and the partition points (t_0 < … < t_{s−1}, t_s = t_0 + cells).
pub(crate) fn partition_max<O: Oscillations + ?Sized>(
    osc: &O,
    min_gap: usize,
    q: f64,
) -> (f64, Vec<usize>) {
    let cells = osc.cells();
    assert!(min_gap >= 1 && min_gap <= cells);
    // weight[a][len - 1] = osc(a, a + len)^q
    let weight: Vec<Vec<f64>> = (0..cells)
        .map(|a| (1..=cells).map(|len| osc.osc(a, a + len).powf(q)).collect())
        .collect();

    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut dp = vec![f64::NEG_INFINITY; cells + 1];
    let mut prev = vec![usize::MAX; cells + 1];
    for t0 in 0..cells {
        dp.fill(f64::NEG_INFINITY);
        prev.fill(usize::MAX);
        dp[0] = 0.0;
        for j in min_gap..=cells {
            for i in 0..=j - min_gap {
                if dp[i] == f64::NEG_INFINITY {
                    continue;
                }
                let v = dp[i] + weight[(t0 + i) % cells][j - i - 1];
                if v > dp[j] {
                    dp[j] = v;
                    prev[j] = i;
                }
            }
        }
        if dp[cells] > best.0 {
            let mut points = Vec::new();
            let mut j = cells;
            while j != 0 {
                j = prev[j];
                points.push(t0 + j);
            }
            points.reverse();
            best = (dp[cells], points);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Samples(Vec<f64>);

    impl Oscillations for Samples {
        fn cells(&self) -> usize {
            self.0.len()
        }
        fn osc(&self, a: usize, b: usize) -> f64 {
            let n = self.0.len();
            (self.0[b % n] - self.0[a % n]).abs()
        }
    }

    #[test]
    fn interval_counts() {
        assert_eq!(all_intervals(4, false).len(), 10);
        assert_eq!(all_intervals(4, true).len(), 16);
    }

    #[test]
    fn rank_sum_pairs_largest_with_first_weight() {
        let mut w = vec![1.0, 3.0, 2.0];
        assert_eq!(rank_sum(&mut w, &[1.0, 0.5, 0.25]), 3.0 + 1.0 + 0.25);
        let mut w = vec![1.0, 1.0];
        assert_eq!(rank_sum(&mut w, &[1.0]), 1.0);
    }

    #[test]
    fn bnb_alternating_sequence_takes_every_cell() {
        let f = Samples(vec![0.0, 1.0, 0.0, 1.0]);
        let inv = [1.0, 0.5, 1.0 / 3.0, 0.25];
        let found = branch_and_bound(&f, false, &inv, 1.0);
        assert!((found.sum - (1.0 + 0.5 + 1.0 / 3.0 + 0.25)).abs() < 1e-15);
        assert_eq!(found.intervals.len(), 4);
    }

    #[test]
    fn bnb_prefers_one_long_interval_under_steep_weights() {
        // 0 → 10 → 9 → 20: one interval of 20 beats the three runs
        let f = Samples(vec![0.0, 10.0, 9.0, 20.0]);
        let inv = [1.0, 0.01, 0.0001, 0.0];
        let found = branch_and_bound(&f, false, &inv, 1.0);
        assert!(found.sum >= 20.0 + 20.0 * 0.01 - 1e-12, "{found:?}");
    }

    #[test]
    fn range_bound_is_tight_for_two_level_steps() {
        let f = Samples(vec![0.0, 2.0, 0.0, 2.0, 0.0, 0.0]);
        let inv = [1.0, 0.5, 0.25, 0.2, 0.1, 0.05];
        let bound = range_bound(&f, &inv, 2.0);
        assert_eq!(bound, 4.0 * (1.0 + 0.5 + 0.25 + 0.2));
        let h = heuristic(&f, false, &inv, 2.0, &all_intervals(6, false), &[0, 1, 2, 3, 4], vec![]);
        assert_eq!(h.sum, bound);
    }

    #[test]
    fn partition_examples() {
        let f = Samples(vec![0.0, 1.0]);
        assert_eq!(partition_max(&f, 1, 2.0).0, 2.0);
        let f = Samples(vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(partition_max(&f, 1, 1.0).0, 4.0);
        assert_eq!(partition_max(&f, 2, 1.0).0, 0.0);
        let (s, pts) = partition_max(&Samples(vec![3.0; 5]), 2, 1.5);
        assert_eq!(s, 0.0);
        assert!(!pts.is_empty());
    }
}
