//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not listed in `DOCUMENTED_FAILURES`.

use std::time::{Duration, Instant};

use gbv_core::criterion::{criterion_scan, sufficiency_bound, KRange, ScanOptions};
use gbv_core::extremal::{random_feasible_point, solve_extremal, ExtremalProblem};
use gbv_core::forge::{
    build_witness, find_stage, witness_divergence_check, witness_norm_bound, ForgeConfig, WitnessStage,
};
use gbv_core::oracle::{oracle_extremal, oracle_lambda_p_variation};
use gbv_core::{
    assigned_objective, bvq_variation, bvq_variation_axis, lambda_p_variation, lambda_sharp_variation, Error,
    GridFunction1D, GridFunctionND, LambdaSequence, QSequence, SampleModel, VariationOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXTREMAL_INSTANCES: usize = 200;
const EXTREMAL_GRID_DENSITY: usize = 1000;
const EXTREMAL_GRID_TOL: f64 = 1e-3;
const EXTREMAL_POINTS: usize = 10_000;
const EXTREMAL_POINT_TOL: f64 = 1e-9;
const EXTREMAL_TIME: Duration = Duration::from_secs(60);

const CONCAVE_INSTANCES: usize = 100;

const VARIATION_INSTANCES: usize = 100;
const VARIATION_MAX_N: usize = 10;
const VARIATION_TOL: f64 = 1e-12;
const VARIATION_TIME: Duration = Duration::from_secs(120);

const SORTING_INSTANCES: usize = 100;
const SORTING_MAX_LEN: usize = 6;

const BOUND_INSTANCES: usize = 100;
const BOUND_TOL: f64 = 1e-9;

const CLOSED_FORM_HORIZON: u64 = 10_000;

const WITNESS_STAGES: u32 = 4;
const WITNESS_CAP: u64 = 1 << 20;
const WITNESS_TIME: Duration = Duration::from_secs(300);

const REDUCTION_INSTANCES: usize = 50;
const REDUCTION_MAX_N: usize = 8;
const REDUCTION_TOL: f64 = 1e-12;

/// Criteria that fail for reasons recorded in the project notes.
const DOCUMENTED_FAILURES: &[u32] = &[5, 7];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn sorted_uniform(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.5..5.0)).collect();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    w
}

fn c1_vertex_dominance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_grid = f64::NEG_INFINITY;
    let mut worst_point = f64::NEG_INFINITY;
    for _ in 0..EXTREMAL_INSTANCES {
        let n = rng.gen_range(1..=4);
        let q = [0.5, 1.0, 1.5, 2.0, 3.0][rng.gen_range(0..5)];
        let problem = ExtremalProblem::from_weights(sorted_uniform(&mut rng, n), q).unwrap();
        let value = solve_extremal(&problem).unwrap().value;
        let grid = oracle_extremal(&problem, EXTREMAL_GRID_DENSITY).unwrap();
        worst_grid = worst_grid.max(grid - value);
        for _ in 0..EXTREMAL_POINTS {
            let x = random_feasible_point(&problem, &mut rng);
            worst_point = worst_point.max(problem.objective(&x) - value);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst_grid <= EXTREMAL_GRID_TOL && worst_point <= EXTREMAL_POINT_TOL && elapsed < EXTREMAL_TIME,
        format!(
            "{EXTREMAL_INSTANCES} instances; max(grid − closed form) = {worst_grid:.3e}, max(sample − closed form) = {worst_point:.3e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_concave_argmax() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..CONCAVE_INSTANCES {
        let n = rng.gen_range(1..=12);
        let q = rng.gen_range(0.001..0.999);
        let problem = ExtremalProblem::from_weights(sorted_uniform(&mut rng, n), q).unwrap();
        let sol = solve_extremal(&problem).unwrap();
        let best = sol.candidates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let argmax = sol.candidates.iter().position(|&v| v == best).unwrap() + 1;
        if argmax != n {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("{CONCAVE_INSTANCES} instances with 0 < q < 1; argmax ≠ n in {bad}"))
}

fn c3_variation_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..VARIATION_INSTANCES {
        let n = rng.gen_range(1..=VARIATION_MAX_N);
        let f = GridFunction1D::new((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let lambda = LambdaSequence::explicit(sorted_uniform(&mut rng, VARIATION_MAX_N)).unwrap();
        let p = [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)];
        for wrap in [false, true] {
            let exact = lambda_p_variation(&f, &lambda, p, &VariationOptions::default().with_wrap(wrap))
                .unwrap()
                .value;
            let oracle = oracle_lambda_p_variation(&f, &lambda, p, wrap).unwrap();
            worst = worst.max((exact - oracle).abs() / oracle.max(1.0));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= VARIATION_TOL && elapsed < VARIATION_TIME,
        format!(
            "{VARIATION_INSTANCES} grids (N ≤ {VARIATION_MAX_N}, with and without wrap); max relative gap {worst:.3e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
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

fn c4_sorting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    let mut checked = 0;
    for _ in 0..SORTING_INSTANCES {
        let len = rng.gen_range(0..=SORTING_MAX_LEN);
        let osc: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..2.0)).collect();
        let lam = sorted_uniform(&mut rng, SORTING_MAX_LEN);
        let p = rng.gen_range(1.0..4.0);
        let best = assigned_objective(&osc, &LambdaSequence::explicit(lam.clone()).unwrap(), p).unwrap();
        for perm in permutations(len) {
            let s: f64 = perm.iter().enumerate().map(|(r, &i)| osc[i].powf(p) / lam[r]).sum();
            checked += 1;
            if s.powf(1.0 / p) > best + 1e-12 {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("{SORTING_INSTANCES} lists, {checked} pairings; {bad} beat the sorted pairing"),
    )
}

fn random_q(rng: &mut impl Rng) -> QSequence {
    match rng.gen_range(0..3) {
        0 => QSequence::constant(rng.gen_range(1.0..4.0)).unwrap(),
        1 => QSequence::linear(rng.gen_range(0.0..1.0), rng.gen_range(1.0..2.0), None).unwrap(),
        _ => QSequence::loglog(rng.gen_range(1.0..3.0), 3.0).unwrap(),
    }
}

fn c5_sufficiency_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut checks = 0;
    let mut worst = (0.0f64, String::new());
    for _ in 0..BOUND_INSTANCES {
        let n = rng.gen_range(1..=VARIATION_MAX_N);
        let f = GridFunction1D::new((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let lambda = LambdaSequence::explicit(sorted_uniform(&mut rng, 16)).unwrap();
        let q = random_q(&mut rng);
        let p = [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)];
        let v = lambda_p_variation(&f, &lambda, p, &VariationOptions::default().with_wrap(true))
            .unwrap()
            .value;
        for row in bvq_variation(&f, &q, 4).unwrap().rows.iter().filter(|r| !r.clamped) {
            let bound = sufficiency_bound(&lambda, &q, p, row.n, v, KRange::UpToN).unwrap();
            checks += 1;
            let excess = row.value - bound;
            if excess > BOUND_TOL {
                violations += 1;
                if excess > worst.0 {
                    worst = (excess, format!("N = {n}, n = {}: {:.4} > {:.4}", row.n, row.value, bound));
                }
            }
        }
    }
    let detail = if violations == 0 {
        format!("{BOUND_INSTANCES} instances, {checks} per-n checks with k ≤ n; all within {BOUND_TOL:e}")
    } else {
        format!(
            "{BOUND_INSTANCES} instances, {checks} per-n checks with k ≤ n; {violations} exceed the bound (worst {})",
            worst.1
        )
    };
    outcome(violations == 0, detail)
}

fn c6_closed_form() -> Outcome {
    let one = LambdaSequence::constant_one();
    let q = QSequence::linear(1.0, 1.0, None).unwrap();
    let r = criterion_scan(&one, &q, 1.0, CLOSED_FORM_HORIZON, &ScanOptions::default()).unwrap();
    let bad = r.rows.iter().filter(|row| row.value != 1.0 || row.argmax_k != 1).count();
    outcome(
        bad == 0,
        format!("λ ≡ 1, p = 1, q(n) = n + 1, n ≤ {CLOSED_FORM_HORIZON}: {bad} rows differ from M = 1 at k = 1"),
    )
}

fn c7_witness() -> Outcome {
    let start = Instant::now();
    let lambda = LambdaSequence::power(1.0).unwrap();
    let q = QSequence::loglog(1.0, 3.0).unwrap();
    let cfg = ForgeConfig {
        search_cap: WITNESS_CAP,
        ..Default::default()
    };
    let mut stages: Vec<WitnessStage> = Vec::new();
    let mut notes = Vec::new();
    for k in 1..=WITNESS_STAGES {
        match find_stage(&lambda, &q, 1.0, k, &cfg) {
            Ok(st) => stages.push(st),
            Err(Error::SearchExhausted { best_ratio, best_n, threshold, .. }) => notes.push(format!(
                "k = {k} exhausted (best ratio {best_ratio:.4} at n = {best_n}, needs < {threshold:.3e})"
            )),
            Err(e) => notes.push(format!("k = {k}: {e}")),
        }
    }
    let mut ok = stages.len() == WITNESS_STAGES as usize;
    if !stages.is_empty() {
        let witness = build_witness(&stages).unwrap();
        match witness_norm_bound(&stages, &lambda, 1.0) {
            Ok(n) => {
                ok &= n.bound < 2.0;
                notes.push(format!("norm bound {:.4}", n.bound));
            }
            Err(e) => {
                ok = false;
                notes.push(e.to_string());
            }
        }
        for st in &stages {
            ok &= st.check_invariants().is_ok();
            match witness_divergence_check(&witness, st.k, 2) {
                Ok(d) => notes.push(format!("k = {}: divergence {:.3}", st.k, d.value)),
                Err(e) => {
                    ok = false;
                    notes.push(e.to_string());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < WITNESS_TIME;
    outcome(
        ok,
        format!(
            "{} of {WITNESS_STAGES} stages found under cap 2^20; {}; {:.1}s",
            stages.len(),
            notes.join("; "),
            elapsed.as_secs_f64()
        ),
    )
}

fn c8_negative_control() -> Outcome {
    let q = QSequence::linear(1.0, 1.0, None).unwrap();
    let cfg = ForgeConfig {
        search_cap: WITNESS_CAP,
        ..Default::default()
    };
    match find_stage(&LambdaSequence::constant_one(), &q, 1.0, 1, &cfg) {
        Err(e @ Error::SearchExhausted { .. }) => outcome(true, e.to_string()),
        other => outcome(false, format!("expected an exhausted search, got {other:?}")),
    }
}

fn c9_multivariable_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lambda = LambdaSequence::power(1.0).unwrap();
    let opts = VariationOptions::default();
    let q = QSequence::loglog(1.0, 3.0).unwrap();
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for _ in 0..REDUCTION_INSTANCES {
        let n = rng.gen_range(1..=REDUCTION_MAX_N);
        let g = GridFunction1D::new((0..n).map(|_| rng.gen::<f64>()).collect())
            .unwrap()
            .with_model(SampleModel::Step);
        let p = [1.0, 2.0, 3.0][rng.gen_range(0..3)];
        let one = lambda_p_variation(&g, &lambda, p, &opts).unwrap().value;
        let f = GridFunctionND::separable(&g, 2).unwrap();
        let sharp = lambda_sharp_variation(&f, &lambda, p, &opts).unwrap().value;
        worst = worst.max((sharp - 2.0 * one).abs() / one.max(1.0));
        let h = GridFunctionND::along_axis(&g, 2, 0).unwrap();
        if bvq_variation_axis(&h, 1, &q, 4).unwrap().value != 0.0 {
            nonzero += 1;
        }
    }
    outcome(
        worst <= REDUCTION_TOL && nonzero == 0,
        format!(
            "{REDUCTION_INSTANCES} step functions (N ≤ {REDUCTION_MAX_N}); max relative gap {worst:.3e}; nonzero second-axis values {nonzero}"
        ),
    )
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let status = gbv_cli::run_with(std::iter::once("gbv").chain(args.iter().copied()), &mut out, &mut err);
    (status, out)
}

fn c10_determinism() -> Outcome {
    let commands: Vec<Vec<&str>> = vec![
        vec!["extremal", "--lambda", r#"{"explicit":[1,2,4]}"#, "--q", "2", "--n", "3"],
        vec!["extremal", "--lambda", r#"{"explicit":[1,2,4]}"#, "--q", "0.5", "--n", "3", "--verify", "1000"],
        vec![
            "criterion", "--lambda", r#"{"family":"power","alpha":1}"#, "--q", r#"{"family":"loglog","c":1,"n0":3}"#,
            "--p", "1", "--n-max", "16384",
        ],
        vec![
            "criterion", "--lambda", r#"{"family":"power","alpha":0}"#, "--q", r#"{"family":"linear","a":1,"b":1}"#,
            "--p", "1", "--n-max", "64", "--format", "csv",
        ],
        vec!["variation", "--input", r#"{"resolution":3,"samples":[0.5,0.5,0.5]}"#, "--lambda", r#"{"explicit":[1]}"#, "--p", "1"],
        vec!["variation", "--input", r#"{"resolution":5,"samples":[0,0.7,0.2,0.9,0.1]}"#, "--lambda", r#"{"family":"power","alpha":1}"#, "--p", "2", "--verify"],
        vec!["bvq", "--input", r#"{"resolution":4,"samples":[0,1,0,1]}"#, "--q", "1", "--n-max", "3", "--format", "csv"],
        vec!["multivar", "--input", r#"{"dims":[2,2],"samples":[0,1,1,2]}"#, "--lambda", r#"{"explicit":[1,2]}"#, "--p", "1", "--q", "2"],
        vec!["forge", "--lambda", r#"{"family":"power","alpha":1}"#, "--q", "1", "--p", "4", "--stages", "2"],
        vec!["forge", "--lambda", r#"{"family":"power","alpha":0}"#, "--q", r#"{"family":"linear","a":1,"b":1}"#, "--p", "1", "--stages", "1", "--cap", "4096"],
    ];
    let mut differing = Vec::new();
    for cmd in &commands {
        let (s1, a) = run_cli(cmd);
        let (s2, b) = run_cli(cmd);
        if a != b || s1 != s2 || a.is_empty() {
            differing.push(cmd[0]);
        }
    }
    outcome(
        differing.is_empty(),
        format!("{} commands run twice; differing: {:?}", commands.len(), differing),
    )
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "extremal vertex dominance", c1_vertex_dominance),
        (2, "concave regime argmax at n", c2_concave_argmax),
        (3, "variation oracle equivalence", c3_variation_oracle),
        (4, "sorting optimality", c4_sorting),
        (5, "sufficiency bound soundness (k ≤ n)", c5_sufficiency_bound),
        (6, "criterion closed form", c6_closed_form),
        (7, "witness end-to-end (λ_i = i, iterated-log q)", c7_witness),
        (8, "witness negative control", c8_negative_control),
        (9, "multivariable reduction", c9_multivariable_reduction),
        (10, "report determinism", c10_determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let o = check();
        let tag = match (o.passed, DOCUMENTED_FAILURES.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented)",
            (false, false) => {
                unexpected.push(id);
                "FAIL"
            }
        };
        println!("{tag} criterion {id} {name}: {}", o.detail);
    }
    if unexpected.is_empty() {
        println!("acceptance: no unexpected failures");
    } else {
        println!("acceptance: unexpected failures in criteria {unexpected:?}");
        std::process::exit(1);
    }
}
