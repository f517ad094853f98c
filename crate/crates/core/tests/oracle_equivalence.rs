use gbv_core::extremal::{random_feasible_point, ExtremalProblem};
use gbv_core::oracle::{oracle_extremal, oracle_lambda_p_variation};
use gbv_core::{lambda_p_variation, solve_extremal, GridFunction1D, LambdaSequence, SampleModel, VariationOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_lambda(rng: &mut impl Rng, len: usize) -> LambdaSequence {
    let mut w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.5..5.0)).collect();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    LambdaSequence::explicit(w).unwrap()
}

#[test]
fn exact_strategy_agrees_with_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..60 {
        let n = rng.gen_range(1..=9);
        let f = GridFunction1D::new((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let lambda = random_lambda(&mut rng, 12);
        let p = [1.0, 1.5, 2.0, 3.0][rng.gen_range(0..4)];
        for wrap in [false, true] {
            let opts = VariationOptions::default().with_wrap(wrap);
            let exact = lambda_p_variation(&f, &lambda, p, &opts).unwrap();
            let heur = lambda_p_variation(&f, &lambda, p, &VariationOptions::heuristic().with_wrap(wrap)).unwrap();
            let oracle = oracle_lambda_p_variation(&f, &lambda, p, wrap).unwrap();
            assert!((exact.value - oracle).abs() <= 1e-12 * oracle.max(1.0), "{} vs {oracle}", exact.value);
            assert!(heur.value <= oracle + 1e-12);
        }
    }
}

#[test]
fn short_weight_lists_act_as_infinite_weights() {
    // only two intervals can carry weight
    let f = GridFunction1D::new(vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
    let lambda = LambdaSequence::explicit(vec![1.0, 2.0]).unwrap();
    let exact = lambda_p_variation(&f, &lambda, 1.0, &VariationOptions::default()).unwrap();
    assert_eq!(exact.value, 1.5);
    assert_eq!(oracle_lambda_p_variation(&f, &lambda, 1.0, false).unwrap(), 1.5);
}

#[test]
fn refining_a_step_function_keeps_its_variation() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lambda = LambdaSequence::power(0.8).unwrap();
    for _ in 0..20 {
        let n = rng.gen_range(1..=6);
        let f = GridFunction1D::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
            .with_model(SampleModel::Step);
        let v = lambda_p_variation(&f, &lambda, 2.0, &VariationOptions::default()).unwrap();
        let w = lambda_p_variation(&f.upsampled(2), &lambda, 2.0, &VariationOptions::default()).unwrap();
        assert!((v.value - w.value).abs() <= 1e-12 * v.value.max(1.0));
        assert!(w.function_exact);
    }
}

#[test]
fn closed_form_extremum_dominates_grid_and_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..25 {
        let n = rng.gen_range(1..=3);
        let q = [0.5, 1.0, 1.5, 2.0, 3.0][rng.gen_range(0..5)];
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let problem = ExtremalProblem::from_weights(w, q).unwrap();
        let sol = solve_extremal(&problem).unwrap();
        assert!(sol.value >= oracle_extremal(&problem, 200).unwrap() - 1e-3);
        for _ in 0..200 {
            let x = random_feasible_point(&problem, &mut rng);
            assert!(problem.objective(&x) <= sol.value + 1e-9);
        }
    }
}
