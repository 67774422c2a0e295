mod error;
mod report;
mod spec;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use homc::acceptance::{self, MonteCarloConfig, Outcome};
use homc::fixtures;
use homc::limiting::{
    limit_via_powers, limiting_distribution, stationary_distribution, StationaryMethod,
};
use homc::mfpt::solve_mfpt;
use homc::passage::{ever_reaching, kstep, return_sums, PassageOptions};
use homc::reduction::{export_dot, reduce_chain};
use homc::simulate::{estimate, Quantity, DEFAULT_MFPT_HORIZON};
use homc::structure::{
    analyze, classify_states, verify_class_consistency, Ergodicity, DEFAULT_ORBIT_HORIZON,
};
use homc::tensor::{tuple_at, StochasticTensor};
use serde_json::{json, Map, Value};

use crate::error::{CliError, Result};
use crate::report::{nested, ChainInfo, Report};
use crate::spec::{ChainSpecFile, LOAD_TOL};

const DEFAULT_LIMIT_TOL: f64 = 1e-10;
const DEFAULT_LIMIT_STEPS: usize = 100_000;
const DEFAULT_EVER_REACH_HORIZON: usize = 1_000;

/// Analyze higher-order Markov chains given by their transition tensors.
#[derive(Debug, Parser)]
#[command(name = "homc", version)]
struct Cli {
    /// Convergence tolerance (series terms, or tail spread for `limit --method powers`).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Iteration cap (series terms, power steps, or pattern-orbit horizon).
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Report format; defaults to json, or text for `examples`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a chain file holds a stochastic tensor.
    Validate { file: PathBuf },
    /// Build the reduced first-order chain on histories.
    Reduce {
        file: PathBuf,
        /// Also write the reduced chain as a Graphviz digraph.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Irreducibility, ergodicity and regularity verdicts.
    Analyze { file: PathBuf },
    /// Recurrent/transient labels and communication classes.
    Classify {
        file: PathBuf,
        /// Also report partial sums of return probabilities up to this many terms.
        #[arg(long)]
        return_terms: Option<usize>,
    },
    /// Ever-reaching probability tensor F.
    Everreach { file: PathBuf },
    /// k-step transition tensor.
    Kstep {
        file: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Mean first passage time tensor.
    Mfpt { file: PathBuf },
    /// Limiting probability distribution.
    Limit {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "stationary")]
        method: LimitMethod,
    },
    /// Monte Carlo estimate of one quantity.
    Simulate(SimulateArgs),
    /// Built-in example chains.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LimitMethod {
    Powers,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuantityKind {
    Kstep,
    Everreach,
    Mfpt,
    Occupancy,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    quantity: QuantityKind,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Index tuple (i1,...,im), comma separated; kstep, everreach and mfpt.
    #[arg(long, value_delimiter = ',')]
    tuple: Vec<usize>,
    /// Step count for kstep.
    #[arg(long)]
    k: Option<usize>,
    /// Step horizon for everreach (default 1000) and mfpt (default 10^6).
    #[arg(long)]
    horizon: Option<usize>,
    /// Target state for occupancy.
    #[arg(long)]
    state: Option<usize>,
    /// Steps before the occupancy is read.
    #[arg(long, default_value_t = 10_000)]
    t_max: usize,
}

#[derive(Debug, Subcommand)]
enum ExamplesAction {
    /// List the built-in chains.
    List,
    /// Check the expected outputs of one example, or the full acceptance suite.
    Run {
        name: Option<String>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
    },
    /// Write an example as a chain file.
    Export {
        name: String,
        #[arg(long)]
        sparse: bool,
    },
}

/// A finished command: its report (absent when the command wrote its own
/// output) and how many expectations failed.
struct Output {
    report: Option<Report>,
    /// Replaces the generic text rendering of `report`.
    text: Option<String>,
    failures: usize,
    default_format: Format,
}

impl From<Report> for Output {
    fn from(report: Report) -> Self {
        Self {
            report: Some(report),
            text: None,
            failures: 0,
            default_format: Format::Json,
        }
    }
}

fn settings(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn info(path: &Path, p: &StochasticTensor) -> Option<ChainInfo> {
    Some(ChainInfo {
        order: p.order() - 1,
        states: p.dim(),
        source: path.display().to_string(),
    })
}

fn passage_options(cli: &Cli) -> PassageOptions {
    let d = PassageOptions::default();
    PassageOptions {
        tol: cli.tol.unwrap_or(d.tol),
        max_terms: cli.kmax.unwrap_or(d.max_terms),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Validate { file } => {
            let p = spec::load(file)?;
            let result = json!({ "stochastic": true, "entries": p.shape().len() });
            Ok(Report::new(
                "validate",
                info(file, &p),
                settings(&[("load_tol", json!(LOAD_TOL))]),
                result,
            )
            .into())
        }
        Command::Reduce { file, dot } => {
            let p = spec::load(file)?;
            let q = reduce_chain(&p)?;
            if let Some(path) = dot {
                write_file(path, &export_dot(&q))?;
            }
            let labels = |sets: Vec<Vec<usize>>| -> Vec<Vec<String>> {
                sets.iter()
                    .map(|s| s.iter().map(|&i| q.label(i + 1)).collect())
                    .collect()
            };
            let rows: Vec<Vec<f64>> = q
                .matrix()
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect();
            let result = json!({
                "size": q.size(),
                "labels": q.labels(),
                "irreducible": q.is_irreducible(),
                "strong_components": labels(q.strong_components()),
                "closed_classes": labels(q.closed_classes()),
                "matrix": rows,
            });
            Ok(Report::new("reduce", info(file, &p), Map::new(), result).into())
        }
        Command::Analyze { file } => {
            let p = spec::load(file)?;
            let horizon = cli.kmax.unwrap_or(DEFAULT_ORBIT_HORIZON);
            let a = analyze(&p, horizon)?;
            let (ergodic, witness) = match &a.ergodicity {
                Ergodicity::Ergodic => (json!(true), Value::Null),
                Ergodicity::NotErgodic { witness } => (json!(false), json!(witness)),
                Ergodicity::Undetermined { .. } => (Value::Null, Value::Null),
            };
            let result = json!({
                "irreducible": a.irreducibility.irreducible,
                "ergodic": ergodic,
                "ergodic_witness": witness,
                "regularity_index": a.regularity.index,
            });
            let s = settings(&[
                ("orbit_horizon", json!(horizon)),
                ("regularity_decided", json!(a.regularity.decided)),
            ]);
            Ok(Report::new("analyze", info(file, &p), s, result).into())
        }
        Command::Classify { file, return_terms } => {
            let p = spec::load(file)?;
            let opts = passage_options(cli);
            let f = ever_reaching(&p, &opts)?;
            let report = classify_states(&p, &f)?;
            let mut result = json!({
                "labels": report.labels,
                "classes": report.classes,
                "reachability": report.reachability.rows(),
                "return_probabilities": report.return_probabilities,
                "consistency": verify_class_consistency(&report),
                "series_converged": f.converged(),
            });
            if let Some(k) = return_terms {
                let len = p.order() - 2;
                let mut sums = Vec::new();
                for state in 1..=p.dim() {
                    for l in 1..=p.dim().pow(len as u32) {
                        let tail = tuple_at(l, len, p.dim())?;
                        let r = return_sums(&p, state, &tail, *k)?;
                        let mut index = vec![state, state];
                        index.extend(&tail);
                        sums.push(json!({
                            "index": index,
                            "partial_sum": r.partial.last(),
                            "last_increment": r.increments.last(),
                            "trend": r.trend,
                        }));
                    }
                }
                result["return_sums"] = Value::Array(sums);
            }
            let s = settings(&[
                ("tol", json!(opts.tol)),
                ("kmax", json!(opts.max_terms)),
                ("return_terms", json!(return_terms)),
            ]);
            Ok(Report::new("classify", info(file, &p), s, result).into())
        }
        Command::Everreach { file } => {
            let p = spec::load(file)?;
            let opts = passage_options(cli);
            let f = ever_reaching(&p, &opts)?;
            let result = json!({
                "converged": f.converged(),
                "terms": f.terms,
                "last_increment": f.last_increment,
                "max_residual": f.residual.max_abs(),
                "F": nested(&f.ever),
            });
            let s = settings(&[("tol", json!(opts.tol)), ("kmax", json!(opts.max_terms))]);
            Ok(Report::new("everreach", info(file, &p), s, result).into())
        }
        Command::Kstep { file, k } => {
            let p = spec::load(file)?;
            let pk = kstep(&p, *k)?;
            let result = json!({ "k": k, "P_k": nested(&pk) });
            Ok(Report::new("kstep", info(file, &p), Map::new(), result).into())
        }
        Command::Mfpt { file } => {
            let p = spec::load(file)?;
            let sol = solve_mfpt(&p)?;
            let result = json!({ "residual": sol.residual, "mu": nested(&sol.mu) });
            let s = settings(&[
                ("singular_pivot_tol", json!(homc::mfpt::SINGULAR_PIVOT_TOL)),
                ("residual_tol", json!(homc::mfpt::RESIDUAL_TOL)),
            ]);
            Ok(Report::new("mfpt", info(file, &p), s, result).into())
        }
        Command::Limit { file, method } => {
            let p = spec::load(file)?;
            let (s, result) = match method {
                LimitMethod::Powers => {
                    let tol = cli.tol.unwrap_or(DEFAULT_LIMIT_TOL);
                    let kmax = cli.kmax.unwrap_or(DEFAULT_LIMIT_STEPS);
                    let pl = limit_via_powers(&p, tol, kmax)?;
                    (
                        settings(&[
                            ("method", json!("powers")),
                            ("tol", json!(tol)),
                            ("kmax", json!(kmax)),
                        ]),
                        json!({ "pi": pl.distribution.pi, "steps": pl.steps, "spread": pl.spread }),
                    )
                }
                LimitMethod::Stationary => {
                    let q = reduce_chain(&p)?;
                    let xi = stationary_distribution(&q, StationaryMethod::Cesaro)?;
                    let l = limiting_distribution(&p, &xi)?;
                    (
                        settings(&[
                            ("method", json!("stationary")),
                            ("stationary_method", json!(xi.method)),
                            ("step_tol", json!(homc::limiting::CESARO_STEP_TOL)),
                        ]),
                        json!({ "pi": l.pi, "stationary_residual": xi.residual, "xi": xi.xi }),
                    )
                }
            };
            Ok(Report::new("limit", info(file, &p), s, result).into())
        }
        Command::Simulate(args) => simulate(args),
        Command::Examples { action } => examples(cli, action),
    }
}

fn simulate(args: &SimulateArgs) -> Result<Output> {
    let p = spec::load(&args.file)?;
    let need_tuple = || -> Result<Vec<usize>> {
        if args.tuple.len() != p.order() {
            return Err(CliError::Usage(format!(
                "--tuple needs {} comma-separated states, got {:?}",
                p.order(),
                args.tuple
            )));
        }
        Ok(args.tuple.clone())
    };
    let quantity = match args.quantity {
        QuantityKind::Kstep => Quantity::Kstep {
            k: args
                .k
                .ok_or_else(|| CliError::Usage("kstep needs --k".into()))?,
            tuple: need_tuple()?,
        },
        QuantityKind::Everreach => Quantity::EverReach {
            tuple: need_tuple()?,
            horizon: args.horizon.unwrap_or(DEFAULT_EVER_REACH_HORIZON),
        },
        QuantityKind::Mfpt => Quantity::Mfpt {
            tuple: need_tuple()?,
            horizon: args.horizon.unwrap_or(DEFAULT_MFPT_HORIZON),
        },
        QuantityKind::Occupancy => Quantity::Occupancy {
            state: args
                .state
                .ok_or_else(|| CliError::Usage("occupancy needs --state".into()))?,
            t_max: args.t_max,
        },
    };
    let e = estimate(&p, &quantity, args.samples, args.seed)?;
    let s = settings(&[
        (
            "quantity",
            serde_json::to_value(&quantity).expect("serializable"),
        ),
        ("samples", json!(args.samples)),
        ("seed", json!(args.seed)),
        ("generator", json!("xoshiro256++")),
    ]);
    let result = json!({
        "mean": e.mean,
        "std_error": e.std_error,
        "samples_used": e.samples,
        "censored": e.censored,
        "censored_fraction": e.censored_fraction(),
        "reliable": e.reliable(),
    });
    Ok(Report::new("simulate", info(&args.file, &p), s, result).into())
}

fn outcome_json(o: &Outcome) -> Value {
    json!({
        "criterion": o.criterion,
        "title": o.title,
        "pass": o.pass(),
        "checks": o.checks.iter().map(|c| json!({
            "label": c.label,
            "pass": c.pass,
            "detail": c.detail.lines().collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn examples(cli: &Cli, action: &ExamplesAction) -> Result<Output> {
    let text = |report: Report, failures: usize| Output {
        report: Some(report),
        text: None,
        failures,
        default_format: Format::Text,
    };
    match action {
        ExamplesAction::List => {
            let list: Vec<Value> = fixtures::registry()
                .iter()
                .map(|f| {
                    json!({
                        "name": f.name,
                        "description": f.description,
                        "order": f.chain.order() - 1,
                        "states": f.chain.dim(),
                        "criteria": acceptance::criteria_for_fixture(f.name),
                    })
                })
                .collect();
            Ok(text(
                Report::new(
                    "examples list",
                    None,
                    Map::new(),
                    json!({ "examples": list }),
                ),
                0,
            ))
        }
        ExamplesAction::Run { name, all } => {
            let mc = MonteCarloConfig::default();
            let (command, outcomes) = match (name, all) {
                (_, true) => ("examples run --all".to_string(), acceptance::run_all(&mc)),
                (Some(name), false) => {
                    let fixture = fixtures::by_name(name).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown example `{name}`; see `homc examples list`"
                        ))
                    })?;
                    let outcomes = acceptance::criteria_for_fixture(fixture.name)
                        .iter()
                        .filter_map(|&c| acceptance::run_criterion(c, &mc))
                        .collect();
                    (format!("examples run {name}"), outcomes)
                }
                (None, false) => {
                    return Err(CliError::Usage("give an example name or --all".into()))
                }
            };
            let failures = outcomes.iter().filter(|o| !o.pass()).count();
            let s = settings(&[
                ("monte_carlo_samples", json!(mc.samples)),
                ("monte_carlo_seeds", json!(mc.seeds)),
                ("monte_carlo_z", json!(mc.z)),
            ]);
            let result = json!({
                "pass": failures == 0,
                "criteria": outcomes.iter().map(outcome_json).collect::<Vec<_>>(),
            });
            let mut rendered = format!("homc {command} ({})\n", env!("CARGO_PKG_VERSION"));
            for o in &outcomes {
                rendered.push_str(&format!("{o}\n"));
                for c in &o.checks {
                    let mut lines = c.detail.lines();
                    let mark = if c.pass { "ok" } else { "FAILED" };
                    rendered.push_str(&format!(
                        "  [{mark}] {}: {}\n",
                        c.label,
                        lines.next().unwrap_or("")
                    ));
                    for line in lines {
                        rendered.push_str(&format!("      {line}\n"));
                    }
                }
            }
            rendered.push_str(&format!(
                "{} of {} criteria passed\n",
                outcomes.len() - failures,
                outcomes.len()
            ));
            Ok(Output {
                text: Some(rendered),
                ..text(Report::new(&command, None, s, result), failures)
            })
        }
        ExamplesAction::Export { name, sparse } => {
            let fixture = fixtures::by_name(name).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown example `{name}`; see `homc examples list`"
                ))
            })?;
            let spec = if *sparse {
                ChainSpecFile::sparse(&fixture.chain)
            } else {
                ChainSpecFile::dense(&fixture.chain)
            };
            // a chain file, not a report
            let body = serde_json::to_string_pretty(&spec).expect("serializable") + "\n";
            match &cli.output {
                Some(path) => write_file(path, &body)?,
                None => print!("{body}"),
            }
            Ok(Output {
                report: None,
                text: None,
                failures: 0,
                default_format: Format::Json,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(&cli) {
        Ok(Output { report: None, .. }) => ExitCode::SUCCESS,
        Ok(Output {
            report: Some(report),
            text,
            failures,
            default_format,
        }) => {
            let body = match cli.format.unwrap_or(default_format) {
                Format::Json => report.to_json(),
                Format::Text => text.unwrap_or_else(|| report.to_text()),
            };
            let written = match &cli.output {
                Some(path) => write_file(path, &body),
                None => {
                    let mut stdout = std::io::stdout().lock();
                    let _ = stdout.write_all(body.as_bytes());
                    Ok(())
                }
            };
            let status = match (written, failures) {
                (Err(e), _) => Err(e),
                (Ok(()), 0) => Ok(()),
                (Ok(()), n) => Err(CliError::ExpectationsFailed(n)),
            };
            match status {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
