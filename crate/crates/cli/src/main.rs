//! `frlab`: experiment driver for Frobenius-Rieffel seminorms on
//! Effros-Shen and UHF ladders. Every command echoes its effective
//! configuration into the report, and all randomness is seeded, so
//! replays with the same flags are byte-identical.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use frlab_core::ladder::{cf_expand, BaireSequence, ContinuedFraction, EsLadder, UhfLadder};
use frlab_core::metric::{
    es_propinquity_bound, kantorovich_distance, kantorovich_lp_oracle, uhf_propinquity_bound,
    KantorovichBudget, State,
};
use frlab_core::sample::trial_rng;
use frlab_core::trace::TraceState;
use frlab_core::verify::{run_suite, SuiteOptions, SUITE_NAMES};
use frlab_core::{AlgebraShape, Error, Result};

#[derive(Parser)]
#[command(name = "frlab", version, about = "Frobenius-Rieffel seminorm laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized suite.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Trials per randomized property.
    #[arg(long, global = true, default_value_t = 500)]
    trials: u64,
    /// Pass/fail tolerance for verification suites.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Linear-dimension budget for ladder levels.
    #[arg(long, global = true, default_value_t = frlab_core::DEFAULT_DIM_BUDGET)]
    max_dim: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LadderKind {
    Es,
    Uhf,
}

#[derive(Subcommand)]
enum Command {
    /// Per-level Effros-Shen data: convergents, trace weight, beta,
    /// kappa, and the propinquity upper bound.
    EsReport {
        /// Parameter as a decimal; expanded to a continued fraction.
        #[arg(long, conflicts_with = "digits")]
        theta: Option<f64>,
        /// Authoritative continued-fraction digits, comma separated.
        #[arg(long, value_delimiter = ',')]
        digits: Option<Vec<u64>>,
        /// Digits repeated after the given ones (default: last digit).
        #[arg(long, value_delimiter = ',', requires = "digits")]
        period: Option<Vec<u64>>,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Per-level UHF data for an eventually periodic multiplicity
    /// sequence.
    UhfReport {
        #[arg(long, value_delimiter = ',', default_value = "1")]
        prefix: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        period: Vec<u64>,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Run a named verification suite; exits 1 on any failed check.
    Verify {
        /// One of the named suites (see --help for the list).
        suite: String,
        /// Negative control: halve the first rung constant on the left
        /// side of the Leibniz suites, which must then fail.
        #[arg(long)]
        corrupt_kappa: bool,
    },
    /// Solve a Kantorovich problem file (commutative problems also get
    /// the exact transport oracle and the gap).
    Kantorovich { problem: PathBuf },
    /// Compare the explicit step constant with a seeded sharp estimate.
    SharpKappa {
        #[arg(long, conflicts_with = "digits")]
        theta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        digits: Option<Vec<u64>>,
        #[arg(long, default_value_t = 2)]
        level: usize,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 120)]
        iters: usize,
    },
    /// Certified propinquity-type upper bound 4 sum_{j>=n} beta(j).
    Bound {
        #[arg(long, value_enum)]
        ladder: LadderKind,
        #[arg(long, conflicts_with = "digits")]
        theta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        digits: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        period: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        prefix: Option<Vec<u64>>,
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
}

/// Effros-Shen parameter data: enough digits for the requested levels
/// plus an eventually periodic extension for tail-certified sums.
struct EsParam {
    cf: ContinuedFraction,
    tail: BaireSequence,
    source: &'static str,
}

fn resolve_es(theta: Option<f64>, digits: Option<Vec<u64>>, period: Option<Vec<u64>>, need: usize) -> Result<EsParam> {
    match (theta, digits) {
        (_, Some(d)) => {
            let period = period.unwrap_or_else(|| vec![*d.last().unwrap_or(&1)]);
            let tail = BaireSequence::new(d, period)?;
            let m = need.max(8) + 30;
            let cf = ContinuedFraction::new((0..m).map(|j| tail.get(j)).collect())?;
            Ok(EsParam { cf, tail, source: "digits" })
        }
        (Some(t), None) => {
            // Floating-point expansion is trustworthy for roughly 18
            // digits; beyond those the sequence is extended by
            // repeating the last digit.
            let cf = cf_expand(t, need.max(8).min(18))?;
            let d = cf.digits().to_vec();
            let last = *d.last().unwrap();
            let tail = BaireSequence::new(d, vec![last])?;
            let m = need.max(8) + 30;
            let cf = ContinuedFraction::new((0..m).map(|j| tail.get(j)).collect())?;
            Ok(EsParam { cf, tail, source: "theta" })
        }
        (None, None) => Err(Error::Invalid("pass either --theta or --digits".into())),
    }
}

fn read_to_string(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

/// Key-sorted JSON: serde_json object maps are BTreeMaps, so
/// round-tripping through `Value` canonicalizes key order.
fn to_sorted_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Invalid(format!("serialization failed: {e}")))
}

struct Output {
    json: Value,
    csv: Option<String>,
}

fn emit(cli: &Cli, out: Output) -> Result<()> {
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json)
                .map_err(|e| Error::Invalid(format!("serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        Format::Csv => out
            .csv
            .ok_or_else(|| Error::Invalid("this command has no CSV form".into()))?,
    };
    match &cli.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn base_config(cli: &Cli) -> Value {
    json!({
        "seed": cli.seed,
        "trials": cli.trials,
        "tol": cli.tol,
        "max_dim": cli.max_dim,
        "format": if cli.format == Format::Json { "json" } else { "csv" },
    })
}

fn merge_config(cli: &Cli, extra: Value) -> Value {
    let mut config = base_config(cli);
    if let (Value::Object(c), Value::Object(e)) = (&mut config, extra) {
        c.extend(e);
    }
    config
}

fn cmd_es_report(cli: &Cli, theta: Option<f64>, digits: Option<Vec<u64>>, period: Option<Vec<u64>>, levels: usize) -> Result<Output> {
    let param = resolve_es(theta, digits, period, levels + 1)?;
    let ladder = EsLadder::from_cf_with_budget(&param.cf, levels, cli.max_dim)?;
    let mut rows = Vec::new();
    for n in 0..=levels {
        let lv = ladder.level(n);
        let bound = es_propinquity_bound(&param.tail, n)?.report();
        rows.push(json!({
            "n": n,
            "q_n": ladder.convergents().q(n as isize),
            "q_prev": ladder.convergents().q(n as isize - 1),
            "t": lv.t,
            "beta": lv.beta,
            "kappa": lv.kappa,
            "propinquity_bound": bound.total,
        }));
    }
    let mut csv = String::from("n,q_n,q_prev,t,beta,kappa,propinquity_bound\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r["n"], r["q_n"], r["q_prev"], r["t"], r["beta"], r["kappa"], r["propinquity_bound"]
        ));
    }
    let json = json!({
        "command": "es-report",
        "config": merge_config(cli, json!({
            "theta": ladder.theta(),
            "theta_digits": param.cf.digits(),
            "theta_source": param.source,
            "levels": levels,
        })),
        "rows": rows,
    });
    Ok(Output { json, csv: Some(csv) })
}

fn cmd_uhf_report(cli: &Cli, prefix: Vec<u64>, period: Vec<u64>, levels: usize) -> Result<Output> {
    let beta = BaireSequence::new(prefix.clone(), period.clone())?;
    let ladder = UhfLadder::with_budget(beta.clone(), levels, cli.max_dim)?;
    let mut rows = Vec::new();
    for n in 0..=levels {
        let lv = ladder.level(n);
        let bound = uhf_propinquity_bound(&beta, n)?.report();
        rows.push(json!({
            "n": n,
            "dim": lv.dim,
            "gamma": lv.gamma,
            "lambda": lv.lambda,
            "propinquity_bound": bound.total,
        }));
    }
    let mut csv = String::from("n,dim,gamma,lambda,propinquity_bound\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r["n"], r["dim"], r["gamma"], r["lambda"], r["propinquity_bound"]
        ));
    }
    let json = json!({
        "command": "uhf-report",
        "config": merge_config(cli, json!({
            "prefix": prefix,
            "period": period,
            "levels": levels,
        })),
        "rows": rows,
    });
    Ok(Output { json, csv: Some(csv) })
}

fn cmd_verify(cli: &Cli, suite: &str, corrupt_kappa: bool) -> Result<(Output, bool)> {
    let opts = SuiteOptions {
        trials: cli.trials,
        seed: cli.seed,
        tolerance: cli.tol,
        corrupt_kappa,
    };
    let report = run_suite(suite, &opts)?;
    let passes = report.passes();
    let mut csv = String::from("property,trials,max_violation,seed,pass\n");
    for c in &report.checks {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            c.property,
            c.trials,
            c.max_violation,
            c.seed,
            c.passes(report.tolerance)
        ));
    }
    let json = json!({
        "command": "verify",
        "config": merge_config(cli, json!({
            "suite": suite,
            "corrupt_kappa": corrupt_kappa,
            "known_suites": SUITE_NAMES,
        })),
        "report": to_sorted_value(&report)?,
        "passes": passes,
    });
    Ok((Output { json, csv: Some(csv) }, passes))
}

#[derive(serde::Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
enum Problem {
    /// Diagonal algebra with a Lipschitz seminorm from a point metric.
    Commutative {
        metric: Vec<Vec<f64>>,
        mu: Vec<f64>,
        nu: Vec<f64>,
    },
    /// Ladder seminorm at one level, with two seeded random states.
    EffrosShen { theta: f64, level: usize },
}

fn cmd_kantorovich(cli: &Cli, path: &PathBuf) -> Result<Output> {
    let text = read_to_string(path)?;
    let problem: Problem = serde_json::from_str(&text)
        .map_err(|e| Error::Invalid(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    let budget = KantorovichBudget::default();
    let json = match problem {
        Problem::Commutative { metric, mu, nu } => {
            let n = metric.len();
            let shape = AlgebraShape::new(vec![1; n])?;
            let tau = TraceState::new(shape.clone(), vec![1.0 / n as f64; n])?;
            let phi = State::mixture(&shape, &mu)?;
            let psi = State::mixture(&shape, &nu)?;
            let l = frlab_core::metric::commutative_lipschitz(metric.clone());
            let result = kantorovich_distance(&l, &tau, &phi, &psi, budget, cli.seed)?;
            let oracle = kantorovich_lp_oracle(&metric, &mu, &nu)?;
            json!({
                "command": "kantorovich",
                "config": merge_config(cli, json!({
                    "problem": path.display().to_string(),
                    "type": "commutative",
                    "points": n,
                })),
                "result": to_sorted_value(&result.to_json())?,
                "oracle": oracle,
                "gap": (result.value - oracle).abs(),
            })
        }
        Problem::EffrosShen { theta, level } => {
            let ladder = EsLadder::with_options(theta, level, true, cli.max_dim)?;
            let seminorm = ladder.seminorm(level)?;
            let shape = ladder.level(level).shape.clone();
            let tau = ladder.level(level).trace.clone();
            let phi = State::random(&shape, &mut trial_rng(cli.seed, 0));
            let psi = State::random(&shape, &mut trial_rng(cli.seed, 1));
            let l = |a: &frlab_core::Element| seminorm.evaluate(a);
            let result = kantorovich_distance(&l, &tau, &phi, &psi, budget, cli.seed)?;
            json!({
                "command": "kantorovich",
                "config": merge_config(cli, json!({
                    "problem": path.display().to_string(),
                    "type": "effros-shen",
                    "theta": theta,
                    "level": level,
                })),
                "result": to_sorted_value(&result.to_json())?,
            })
        }
    };
    let mut csv = String::from("key,value\n");
    for key in ["result", "oracle", "gap"] {
        if let Some(v) = json.get(key) {
            let flat = if key == "result" { &v["value"] } else { v };
            csv.push_str(&format!("{key},{flat}\n"));
        }
    }
    Ok(Output { json, csv: Some(csv) })
}

fn cmd_sharp_kappa(cli: &Cli, theta: Option<f64>, digits: Option<Vec<u64>>, level: usize, starts: usize, iters: usize) -> Result<Output> {
    if level == 0 {
        return Err(Error::Invalid("the explicit constant starts at level 1".into()));
    }
    let param = resolve_es(theta, digits, None, level + 2)?;
    let ladder = EsLadder::from_cf_with_budget(&param.cf, level + 1, cli.max_dim)?;
    let explicit = ladder.level(level).kappa;
    let estimate = ladder.sharp_kappa_estimate(level, starts, iters, cli.seed)?;
    let json = json!({
        "command": "sharp-kappa",
        "config": merge_config(cli, json!({
            "theta": ladder.theta(),
            "theta_digits": param.cf.digits(),
            "theta_source": param.source,
            "level": level,
            "starts": starts,
            "iters": iters,
        })),
        "explicit_kappa": explicit,
        "sharp_estimate": estimate,
        "estimate_minus_explicit": estimate - explicit,
    });
    let csv = format!(
        "key,value\nexplicit_kappa,{explicit}\nsharp_estimate,{estimate}\nestimate_minus_explicit,{}\n",
        estimate - explicit
    );
    Ok(Output { json, csv: Some(csv) })
}

fn cmd_bound(cli: &Cli, ladder: LadderKind, theta: Option<f64>, digits: Option<Vec<u64>>, period: Option<Vec<u64>>, prefix: Option<Vec<u64>>, level: usize) -> Result<Output> {
    let (report, config) = match ladder {
        LadderKind::Es => {
            let param = resolve_es(theta, digits, period, level + 1)?;
            let report = es_propinquity_bound(&param.tail, level)?.report();
            let config = json!({
                "ladder": "es",
                "theta_digits": param.cf.digits(),
                "theta_source": param.source,
                "level": level,
            });
            (report, config)
        }
        LadderKind::Uhf => {
            let beta = BaireSequence::new(
                prefix.unwrap_or_default(),
                period.unwrap_or_else(|| vec![1]),
            )?;
            let report = uhf_propinquity_bound(&beta, level)?.report();
            let config = json!({
                "ladder": "uhf",
                "prefix": beta.prefix(),
                "period": beta.period(),
                "level": level,
            });
            (report, config)
        }
    };
    let json = json!({
        "command": "bound",
        "config": merge_config(cli, config),
        "bound": to_sorted_value(&report)?,
    });
    let csv = format!(
        "key,value\nlevel,{}\npartial_sum,{}\ntail_bound,{}\ntotal,{}\n",
        report.level, report.partial_sum, report.tail_bound, report.total
    );
    Ok(Output { json, csv: Some(csv) })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::EsReport { theta, digits, period, levels } => {
            let out = cmd_es_report(cli, *theta, digits.clone(), period.clone(), *levels)?;
            emit(cli, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::UhfReport { prefix, period, levels } => {
            let out = cmd_uhf_report(cli, prefix.clone(), period.clone(), *levels)?;
            emit(cli, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, corrupt_kappa } => {
            let (out, passes) = cmd_verify(cli, suite, *corrupt_kappa)?;
            emit(cli, out)?;
            Ok(if passes { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Kantorovich { problem } => {
            let out = cmd_kantorovich(cli, problem)?;
            emit(cli, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SharpKappa { theta, digits, level, starts, iters } => {
            let out = cmd_sharp_kappa(cli, *theta, digits.clone(), *level, *starts, *iters)?;
            emit(cli, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bound { ladder, theta, digits, period, prefix, level } => {
            let out = cmd_bound(cli, *ladder, *theta, digits.clone(), period.clone(), prefix.clone(), *level)?;
            emit(cli, out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric_guard() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
