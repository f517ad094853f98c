use std::fs;

use gbv_core::criterion::{criterion_scan, KRange, ScanOptions};
use gbv_core::extremal::{solve_extremal, verify_vertex_optimality, ExtremalProblem};
use gbv_core::forge::{
    build_witness, find_stage, witness_divergence_check, witness_norm_bound, ForgeConfig, QIndexing,
};
use gbv_core::oracle::{oracle_extremal, oracle_lambda_p_variation, ORACLE_MAX_CELLS, ORACLE_MAX_VARIABLES};
use gbv_core::{
    bvq_variation, bvq_variation_all_axes, lambda_p_variation, lambda_sharp_variation, validate_sequences,
    GridFunction1D, GridFunctionND, LambdaSequence, LambdaSpec, QSequence, QSpec, Strategy, VariationOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::report::{envelope, format_float, to_value};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// A finished command: the report text and the exit status to return.
pub struct Outcome {
    pub body: String,
    pub status: i32,
}

impl Outcome {
    fn json(command: &str, config: Value, result: Value, status: i32) -> Self {
        Outcome {
            body: crate::report::canonical_json(&envelope(command, config, result)),
            status,
        }
    }
}

fn read_source(arg: &str, what: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if let Some(path) = arg.strip_prefix('@') {
        return fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_string(),
            source,
        });
    }
    let inline = trimmed
        .chars()
        .next()
        .is_some_and(|c| matches!(c, '{' | '[' | '"' | '-' | '0'..='9'));
    if inline {
        Ok(arg.to_string())
    } else {
        fs::read_to_string(arg).map_err(|source| CliError::Io {
            path: format!("{what} {arg}"),
            source,
        })
    }
}

/// Parses inline JSON, `@path` or a file path into `T`, also returning the
/// parsed JSON for the config echo.
fn load<T: DeserializeOwned>(arg: &str, what: &str) -> Result<(T, Value)> {
    let text = read_source(arg, what)?;
    let parsed = serde_json::from_str(&text).map_err(|source| CliError::Json {
        what: what.to_string(),
        source,
    })?;
    let value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        what: what.to_string(),
        source,
    })?;
    Ok((parsed, value))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SequencesDoc {
    #[serde(default)]
    #[allow(dead_code)]
    schema: Option<String>,
    #[serde(default)]
    lambda: Option<LambdaSpec>,
    #[serde(default)]
    q: Option<QSpec>,
}

fn sequences_doc(arg: Option<&str>) -> Result<Option<SequencesDoc>> {
    arg.map(|a| load::<SequencesDoc>(a, "sequences").map(|(d, _)| d)).transpose()
}

fn resolve_lambda(args: &SequenceArgs) -> Result<LambdaSpec> {
    if let Some(l) = &args.lambda {
        return Ok(load::<LambdaSpec>(l, "lambda")?.0);
    }
    sequences_doc(args.sequences.as_deref())?
        .and_then(|d| d.lambda)
        .ok_or_else(|| CliError::Usage("a Λ spec is required (--lambda or --sequences)".into()))
}

fn resolve_q(q: Option<&str>, sequences: Option<&str>) -> Result<QSpec> {
    if let Some(q) = q {
        return Ok(load::<QSpec>(q, "q")?.0);
    }
    sequences_doc(sequences)?
        .and_then(|d| d.q)
        .ok_or_else(|| CliError::Usage("a q(n) spec is required (--q or --sequences)".into()))
}

fn warnings(lambda: &LambdaSpec, q: Option<&QSpec>) -> Vec<String> {
    validate_sequences(lambda, q.unwrap_or(&QSpec::Constant(1.0))).warnings
}

fn json_only(format: Format, command: &str) -> Result<()> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(CliError::Usage(format!("{command} reports are JSON only"))),
    }
}

fn options(strategy: StrategyArg, wrap: bool, exact_cap: usize) -> VariationOptions {
    VariationOptions {
        strategy: match strategy {
            StrategyArg::Exact => Strategy::Exact,
            StrategyArg::Heuristic => Strategy::Heuristic,
        },
        wrap,
        exact_cap,
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn variation(a: &VariationArgs) -> Result<Outcome> {
    json_only(a.output.format, "variation")?;
    let (f, _): (GridFunction1D, _) = load(&a.input, "input")?;
    let spec = resolve_lambda(&a.sequences)?;
    let lambda = LambdaSequence::new(spec.clone())?;
    let opts = options(a.strategy, a.wrap, a.exact_cap);
    let r = lambda_p_variation(&f, &lambda, a.p, &opts)?;
    let mut result = json!({ "variation": to_value(&r), "warnings": warnings(&spec, None) });
    let mut status = 0;
    if a.verify {
        let verification = if f.resolution() <= ORACLE_MAX_CELLS {
            let oracle = oracle_lambda_p_variation(&f, &lambda, a.p, a.wrap)?;
            let tol = 1e-12 * oracle.max(1.0);
            let passed = if r.grid_exact {
                (r.value - oracle).abs() <= tol
            } else {
                r.value <= oracle + tol
            };
            if !passed {
                status = 3;
            }
            json!({ "oracle": oracle, "passed": passed })
        } else {
            json!({ "skipped": format!("oracle limited to {ORACLE_MAX_CELLS} cells") })
        };
        result["verification"] = verification;
    }
    let config = json!({ "args": to_value(a), "lambda": to_value(&spec) });
    Ok(Outcome::json("variation", config, result, status))
}

pub fn bvq(a: &BvqArgs) -> Result<Outcome> {
    let (f, _): (GridFunction1D, _) = load(&a.input, "input")?;
    let spec = resolve_q(a.q.as_deref(), a.sequences.as_deref())?;
    let q = QSequence::new(spec.clone())?;
    let r = bvq_variation(&f, &q, a.n_max)?;
    if a.output.format == Format::Csv {
        let rows = r.rows.iter().map(|row| {
            vec![
                row.n.to_string(),
                format_float(row.q),
                format_float(row.mesh),
                format_float(row.value),
            ]
        });
        return Ok(Outcome {
            body: csv_text(&["n", "q(n)", "mesh", "value"], rows)?,
            status: 0,
        });
    }
    let config = json!({ "args": to_value(a), "q": to_value(&spec) });
    Ok(Outcome::json("bvq", config, to_value(&r), 0))
}

pub fn multivar(a: &MultivarArgs) -> Result<Outcome> {
    json_only(a.output.format, "multivar")?;
    let (f, _): (GridFunctionND, _) = load(&a.input, "input")?;
    let spec = resolve_lambda(&a.sequences)?;
    let lambda = LambdaSequence::new(spec.clone())?;
    let opts = options(a.strategy, a.wrap, a.exact_cap);
    let sharp = lambda_sharp_variation(&f, &lambda, a.p, &opts)?;
    let mut result = json!({ "lambda_sharp": to_value(&sharp), "warnings": warnings(&spec, None) });
    let mut config = json!({ "args": to_value(a), "lambda": to_value(&spec) });
    // per-axis BV(q(n)↑q) only runs when some q(n) is given
    let q_spec = match &a.q {
        Some(q) => Some(load::<QSpec>(q, "q")?.0),
        None => sequences_doc(a.sequences.sequences.as_deref())?.and_then(|d| d.q),
    };
    if let Some(spec) = q_spec {
        let q = QSequence::new(spec.clone())?;
        result["bvq"] = to_value(&bvq_variation_all_axes(&f, &q, a.n_max)?);
        config["q"] = to_value(&spec);
    }
    Ok(Outcome::json("multivar", config, result, 0))
}

pub fn criterion(a: &CriterionArgs) -> Result<Outcome> {
    let lambda_spec = resolve_lambda(&a.sequences)?;
    let q_spec = resolve_q(a.q.as_deref(), a.sequences.sequences.as_deref())?;
    let lambda = LambdaSequence::new(lambda_spec.clone())?;
    let q = QSequence::new(q_spec.clone())?;
    let opts = ScanOptions {
        k_range: a.k_range.parse::<KRange>()?,
        growth_factor: a.growth_factor,
        max_k: a.max_k,
    };
    let r = criterion_scan(&lambda, &q, a.p, a.n_max, &opts)?;
    if a.output.format == Format::Csv {
        let rows = r.rows.iter().map(|row| {
            vec![
                row.n.to_string(),
                format_float(row.q),
                format_float(row.value),
                row.argmax_k.to_string(),
                format_float(row.running_max),
            ]
        });
        return Ok(Outcome {
            body: csv_text(&["n", "q(n)", "M(n)", "argmax_k", "running_max"], rows)?,
            status: 0,
        });
    }
    let mut result = to_value(&r);
    result["warnings"] = to_value(&warnings(&lambda_spec, Some(&q_spec)));
    let config = json!({ "args": to_value(a), "lambda": to_value(&lambda_spec), "q": to_value(&q_spec) });
    Ok(Outcome::json("criterion", config, result, 0))
}

pub fn extremal(a: &ExtremalArgs) -> Result<Outcome> {
    json_only(a.output.format, "extremal")?;
    let spec = resolve_lambda(&a.sequences)?;
    let lambda = LambdaSequence::new(spec.clone())?;
    let problem = ExtremalProblem::new(&lambda, a.n, a.q)?;
    let sol = solve_extremal(&problem)?;
    let mut result = to_value(&sol);
    let mut status = 0;
    if let Some(trials) = a.verify {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        let sampled = verify_vertex_optimality(&problem, trials, &mut rng)?;
        let mut passed = sampled.passed() && sol.argmax_consistent;
        let mut verification = json!({ "sampling": to_value(&sampled) });
        if problem.n() <= ORACLE_MAX_VARIABLES {
            let grid = oracle_extremal(&problem, a.density)?;
            passed &= sol.value >= grid - 1e-3;
            verification["grid_search"] = json!({ "density": a.density, "value": grid });
        }
        verification["passed"] = passed.into();
        if !passed {
            status = 3;
        }
        result["verification"] = verification;
    }
    let config = json!({ "args": to_value(a), "lambda": to_value(&spec) });
    Ok(Outcome::json("extremal", config, result, status))
}

pub fn forge(a: &ForgeArgs) -> Result<Outcome> {
    json_only(a.output.format, "forge")?;
    let lambda_spec = resolve_lambda(&a.sequences)?;
    let q_spec = resolve_q(a.q.as_deref(), a.sequences.sequences.as_deref())?;
    let lambda = LambdaSequence::new(lambda_spec.clone())?;
    let q = QSequence::new(q_spec.clone())?;
    let cfg = ForgeConfig {
        search_cap: a.cap,
        q_indexing: a.q_indexing.parse::<QIndexing>()?,
    };
    if a.stages == 0 {
        return Err(CliError::Usage("--stages must be at least 1".into()));
    }
    let mut stages = Vec::new();
    let mut exhausted = Value::Null;
    let mut status = 0;
    for k in 1..=a.stages {
        match find_stage(&lambda, &q, a.p, k, &cfg) {
            Ok(st) => stages.push(st),
            Err(e @ (gbv_core::Error::SearchExhausted { .. } | gbv_core::Error::Capacity { .. })) => {
                exhausted = json!({ "stage": k, "message": e.to_string(), "error": to_value(&ErrorEcho::from(&e)) });
                status = 2;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let witness = build_witness(&stages)?;
    let norms = witness_norm_bound(&stages, &lambda, a.p)?;
    let mut per_stage = Vec::new();
    for (st, norm) in stages.iter().zip(&norms.stages) {
        let div = witness_divergence_check(&witness, st.k, a.dim)?;
        per_stage.push(json!({ "stage": to_value(st), "norm": to_value(norm), "divergence": to_value(&div) }));
    }
    let mut result = json!({
        "stages": per_stage,
        "norm_bound": norms.bound,
        "exhausted": exhausted,
        "warnings": warnings(&lambda_spec, Some(&q_spec)),
    });
    if !a.no_breakpoints {
        result["breakpoints"] = to_value(&witness.breakpoint_strings());
        result["values"] = to_value(&witness.step_function()?.samples());
    }
    let config = json!({ "args": to_value(a), "lambda": to_value(&lambda_spec), "q": to_value(&q_spec) });
    Ok(Outcome::json("forge", config, result, status))
}

/// Machine-readable fields of a search failure.
#[derive(serde::Serialize)]
struct ErrorEcho {
    kind: &'static str,
    best_ratio: Option<f64>,
    best_n: Option<u64>,
    threshold: Option<f64>,
    cap: Option<u64>,
}

impl From<&gbv_core::Error> for ErrorEcho {
    fn from(e: &gbv_core::Error) -> Self {
        match e {
            gbv_core::Error::SearchExhausted {
                cap,
                best_ratio,
                best_n,
                threshold,
                ..
            } => ErrorEcho {
                kind: "search_exhausted",
                best_ratio: Some(*best_ratio),
                best_n: Some(*best_n),
                threshold: Some(*threshold),
                cap: Some(*cap),
            },
            gbv_core::Error::Capacity { cap, .. } => ErrorEcho {
                kind: "capacity",
                best_ratio: None,
                best_n: None,
                threshold: None,
                cap: Some(*cap),
            },
            _ => ErrorEcho {
                kind: "other",
                best_ratio: None,
                best_n: None,
                threshold: None,
                cap: None,
            },
        }
    }
}
