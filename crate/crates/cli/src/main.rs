//! `expord` command-line tool.
//!
//! Exit codes: 0 success (or dominance holds), 3 dominance fails or a sweep
//! found a problem, 1 usage or input error, 2 internal error.

mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use expord::exactnum::{parse_rational, render_rational};
use expord::io::{
    counterexample_doc, environment_json, from_json, posteriors_doc, relations_doc, sweep_doc, to_json,
    parse_prior, EnvironmentDoc, ExperimentDoc, SolutionDoc, VerdictDoc,
};
use expord::moralhazard::{self, Environment, UtilitySpec};
use expord::oracle::{self, QuadraticCost, SimplexGrid};
use expord::orders::{self, Order};
use expord::plot::{self, Layer, SetKind};
use expord::sweep;
use expord::{Error, Experiment, Prior, RatVector};

use report::RunReport;

#[derive(Parser)]
#[command(name = "expord", version, about = "Exact comparison of finite experiments")]
struct Cli {
    /// Seed for randomized commands.
    #[arg(long, global = true, env = "EXPORD_SEED", default_value_t = 0)]
    seed: u64,

    /// Also write a run report (inputs, digests, payload) to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// Include elapsed time in the run report.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check experiment, prior or environment files.
    Validate { files: Vec<PathBuf> },
    /// Decide whether A dominates B.
    Compare {
        #[arg(value_enum)]
        order: OrderArg,
        a: PathBuf,
        b: PathBuf,
    },
    /// Posterior distribution induced by an experiment.
    Posteriors {
        experiment: PathBuf,
        #[arg(long)]
        prior: Option<PathBuf>,
    },
    /// Moral-hazard cost problems.
    Mh {
        #[command(subcommand)]
        command: MhCommand,
    },
    /// Randomized cost comparisons for theorem 1, 2 or 3.
    Sweep {
        theorem: u8,
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Independent brute-force checks.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Draw cones, zonotopes or posteriors as SVG.
    Plot {
        #[arg(value_enum)]
        kind: PlotKind,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum MhCommand {
    Solve {
        experiment: PathBuf,
        environment: PathBuf,
    },
    Implementable {
        experiment: PathBuf,
        environment: PathBuf,
        /// Keep the participation constraint.
        #[arg(long)]
        keep_pc: bool,
    },
    /// Build an environment where A is strictly costlier than B.
    Counterexample {
        #[arg(long, value_enum)]
        order: OrderArg,
        a: PathBuf,
        b: PathBuf,
        /// Use the budget-only construction (cone order).
        #[arg(long)]
        budget_only: bool,
        /// Write the environment here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Zonotope membership by facet enumeration.
    Facets {
        experiment: PathBuf,
        /// Comma-separated rationals.
        #[arg(long)]
        point: String,
    },
    /// Best grid response to a contract under a quadratic cost.
    Bestresponse {
        experiment: PathBuf,
        #[arg(long)]
        t: String,
        #[arg(long)]
        center: String,
        #[arg(long)]
        scale: String,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        /// Take the utility from this environment file (risk neutral otherwise).
        #[arg(long)]
        env: Option<PathBuf>,
    },
    /// Monte Carlo linear convex order check.
    Lcx {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
    /// Both sides of the Lagrangian comparison at a direction.
    Lagrangian {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long)]
        env: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Col,
    Cone,
    Zon,
    Blackwell,
    All,
}

impl OrderArg {
    fn order(self) -> Option<Order> {
        match self {
            OrderArg::Col => Some(Order::Col),
            OrderArg::Cone => Some(Order::Cone),
            OrderArg::Zon => Some(Order::Zon),
            OrderArg::Blackwell => Some(Order::Blackwell),
            OrderArg::All => None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Cone,
    Zon,
    Posteriors,
}

/// Failure of a command, already classified by exit code.
enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) | Error::NoReversal(_) => Failure::Internal(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult<T> = Result<T, Failure>;

/// What a command produced: text for stdout, a payload for the report and
/// the exit code.
struct Outcome {
    stdout: String,
    payload: Value,
    code: u8,
}

impl Outcome {
    fn json<T: Serialize>(doc: &T, code: u8) -> Self {
        Outcome {
            stdout: to_json(doc),
            payload: serde_json::to_value(doc).expect("documents serialize"),
            code,
        }
    }
}

struct Inputs(Vec<PathBuf>);

impl Inputs {
    fn read(&mut self, path: &Path) -> CmdResult<String> {
        self.0.push(path.to_path_buf());
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
    }

    fn experiment(&mut self, path: &Path) -> CmdResult<Experiment> {
        let text = self.read(path)?;
        Ok(from_json::<ExperimentDoc>(&text)
            .and_then(|d| d.to_experiment())
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?)
    }

    fn prior(&mut self, path: Option<&Path>, n: usize) -> CmdResult<Prior> {
        match path {
            None => Ok(Prior::uniform(n)),
            Some(p) => {
                let text = self.read(p)?;
                parse_prior(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
            }
        }
    }

    fn environment(&mut self, path: &Path) -> CmdResult<Environment> {
        let text = self.read(path)?;
        Ok(from_json::<EnvironmentDoc>(&text)
            .and_then(|d| d.to_environment())
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?)
    }
}

fn parse_vector(text: &str) -> CmdResult<RatVector> {
    Ok(text
        .split(',')
        .map(|s| parse_rational(s.trim()))
        .collect::<Result<_, _>>()?)
}

fn name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Distinct display names for two inputs.
fn names(a: &Path, b: &Path) -> (String, String) {
    let (na, nb) = (name_of(a), name_of(b));
    if na == nb {
        (na.clone(), format!("{nb}'"))
    } else {
        (na, nb)
    }
}

fn validate(files: &[PathBuf], inputs: &mut Inputs) -> CmdResult<Outcome> {
    #[derive(Serialize)]
    struct Entry {
        file: String,
        kind: &'static str,
        #[serde(skip_serializing_if = "Option::is_none")]
        states: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        realizations: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
    }
    let mut out = Vec::new();
    for path in files {
        let text = inputs.read(path)?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("{}: invalid JSON: {e}", path.display())))?;
        let with_path = |e: Error| Failure::Usage(format!("{}: {e}", path.display()));
        let entry = if value.get("rows").is_some() {
            let e = from_json::<ExperimentDoc>(&text)
                .and_then(|d| d.to_experiment())
                .map_err(with_path)?;
            Entry {
                file: path.display().to_string(),
                kind: "experiment",
                states: Some(e.n_states()),
                realizations: Some(e.n_realizations()),
                rank: Some(e.rank()),
            }
        } else if value.get("mu0").is_some() {
            let env = from_json::<EnvironmentDoc>(&text)
                .and_then(|d| d.to_environment())
                .map_err(with_path)?;
            Entry {
                file: path.display().to_string(),
                kind: "environment",
                states: Some(env.mu0.len()),
                realizations: None,
                rank: None,
            }
        } else if value.get("mu").is_some() {
            let p = parse_prior(&text).map_err(with_path)?;
            Entry {
                file: path.display().to_string(),
                kind: "prior",
                states: Some(p.len()),
                realizations: None,
                rank: None,
            }
        } else {
            return Err(Failure::Usage(format!(
                "{}: not an experiment, prior or environment document",
                path.display()
            )));
        };
        out.push(entry);
    }
    Ok(Outcome::json(&serde_json::json!({ "valid": true, "files": out }), 0))
}

fn compare(order: OrderArg, a: &Path, b: &Path, inputs: &mut Inputs) -> CmdResult<Outcome> {
    let ea = inputs.experiment(a)?;
    let eb = inputs.experiment(b)?;
    match order.order() {
        Some(order) => {
            let v = orders::dominates(order, &ea, &eb)?;
            if !v.verify(ea.matrix(), eb.matrix()) {
                return Err(Failure::Internal("certificate failed re-verification".into()));
            }
            Ok(Outcome::json(&VerdictDoc::from_verdict(&v), if v.dominates { 0 } else { 3 }))
        }
        None => {
            let rows = orders::relations_summary(&ea, &eb)?;
            Ok(Outcome::json(&relations_doc(&rows), 0))
        }
    }
}

fn mh(cmd: &MhCommand, inputs: &mut Inputs) -> CmdResult<(Outcome, Option<(PathBuf, String)>)> {
    match cmd {
        MhCommand::Solve { experiment, environment } => {
            let e = inputs.experiment(experiment)?;
            let env = inputs.environment(environment)?;
            let s = moralhazard::solve(&e, &env)?;
            Ok((Outcome::json(&SolutionDoc::from_solution(&s), 0), None))
        }
        MhCommand::Implementable {
            experiment,
            environment,
            keep_pc,
        } => {
            let e = inputs.experiment(experiment)?;
            let env = inputs.environment(environment)?;
            let ok = moralhazard::implementable_with(&e, &env, *keep_pc)?;
            Ok((Outcome::json(&serde_json::json!({ "implementable": ok }), 0), None))
        }
        MhCommand::Counterexample {
            order,
            a,
            b,
            budget_only,
            out,
        } => {
            let ea = inputs.experiment(a)?;
            let eb = inputs.experiment(b)?;
            let order = order
                .order()
                .ok_or_else(|| Failure::Usage("counterexample needs a single order".into()))?;
            let ce = if *budget_only {
                if order != Order::Cone {
                    return Err(Failure::Usage("--budget-only applies to the cone order".into()));
                }
                moralhazard::construct_budget_counterexample(&ea, &eb)?
            } else {
                moralhazard::construct_counterexample(order, &ea, &eb)?
            };
            let (na, nb) = names(a, b);
            let doc = counterexample_doc(&ce, &na, &nb);
            let file = out.as_ref().map(|p| (p.clone(), environment_json(&ce.env) + "\n"));
            Ok((Outcome::json(&doc, 0), file))
        }
    }
}

fn oracle_cmd(cmd: &OracleCommand, seed: u64, inputs: &mut Inputs) -> CmdResult<Outcome> {
    let utility_from = |inputs: &mut Inputs, env: &Option<PathBuf>| -> CmdResult<UtilitySpec> {
        Ok(match env {
            Some(p) => inputs.environment(p)?.utility,
            None => UtilitySpec::RiskNeutral,
        })
    };
    match cmd {
        OracleCommand::Facets { experiment, point } => {
            let e = inputs.experiment(experiment)?;
            let p = parse_vector(point)?;
            let member = oracle::zon_membership_by_facets(&e, &p)?;
            Ok(Outcome::json(&serde_json::json!({ "member": member }), 0))
        }
        OracleCommand::Bestresponse {
            experiment,
            t,
            center,
            scale,
            resolution,
            env,
        } => {
            let e = inputs.experiment(experiment)?;
            let u = utility_from(inputs, env)?;
            let cost = QuadraticCost {
                center: Prior::new(parse_vector(center)?)?,
                scale: parse_rational(scale)?,
            };
            let grid = SimplexGrid::new(e.n_states(), *resolution);
            let mu = oracle::grid_best_response(&e, &parse_vector(t)?, &u, &cost, &grid)?;
            let mu: Vec<String> = mu.as_slice().iter().map(render_rational).collect();
            Ok(Outcome::json(&serde_json::json!({ "mu": mu }), 0))
        }
        OracleCommand::Lcx { a, b, prior, trials } => {
            let ea = inputs.experiment(a)?;
            let eb = inputs.experiment(b)?;
            let mu0 = inputs.prior(prior.as_deref(), ea.n_states())?;
            let holds = oracle::mc_lcx_check(&ea, &eb, &mu0, *trials, seed)?;
            Ok(Outcome::json(
                &serde_json::json!({ "holds": holds, "trials": trials, "seed": seed }),
                0,
            ))
        }
        OracleCommand::Lagrangian {
            a,
            b,
            beta,
            prior,
            env,
        } => {
            let ea = inputs.experiment(a)?;
            let eb = inputs.experiment(b)?;
            let mu0 = inputs.prior(prior.as_deref(), ea.n_states())?;
            let u = utility_from(inputs, env)?;
            let (left, right) = oracle::lagrangian_gap(&ea, &eb, &parse_vector(beta)?, &mu0, &u)?;
            Ok(Outcome::json(
                &serde_json::json!({ "left": render_rational(&left), "right": render_rational(&right) }),
                0,
            ))
        }
    }
}

fn run(cli: &Cli, inputs: &mut Inputs) -> CmdResult<(Outcome, Option<(PathBuf, String)>)> {
    let plain = |o: Outcome| (o, None);
    match &cli.command {
        Command::Validate { files } => validate(files, inputs).map(plain),
        Command::Compare { order, a, b } => compare(*order, a, b, inputs).map(plain),
        Command::Posteriors { experiment, prior } => {
            let e = inputs.experiment(experiment)?;
            let mu0 = inputs.prior(prior.as_deref(), e.n_states())?;
            let d = expord::experiments::posteriors(&e, &mu0)?;
            Ok(plain(Outcome::json(&posteriors_doc(&e, &mu0, &d), 0)))
        }
        Command::Mh { command } => mh(command, inputs),
        Command::Sweep { theorem, a, b, trials } => {
            let ea = inputs.experiment(a)?;
            let eb = inputs.experiment(b)?;
            let r = sweep::sweep(*theorem, &ea, &eb, *trials, cli.seed)?;
            let (na, nb) = names(a, b);
            let clean = r.violations.is_empty() && r.failures.is_empty();
            Ok(plain(Outcome::json(&sweep_doc(&r, &na, &nb), if clean { 0 } else { 3 })))
        }
        Command::Oracle { command } => oracle_cmd(command, cli.seed, inputs).map(plain),
        Command::Plot {
            kind,
            files,
            prior,
            out,
        } => {
            let mut layers = Vec::new();
            for f in files {
                layers.push(Layer {
                    label: name_of(f),
                    experiment: inputs.experiment(f)?,
                });
            }
            let kind = match kind {
                PlotKind::Cone => SetKind::Cone,
                PlotKind::Zon => SetKind::Zon,
                PlotKind::Posteriors => SetKind::Posteriors,
            };
            let n = layers[0].experiment.n_states();
            let mu0 = match prior {
                Some(p) => Some(inputs.prior(Some(p), n)?),
                None => None,
            };
            let svg = plot::render(kind, &layers, mu0.as_ref())?;
            let payload = serde_json::json!({ "svg_bytes": svg.len() });
            match out {
                Some(path) => Ok((
                    Outcome {
                        stdout: String::new(),
                        payload,
                        code: 0,
                    },
                    Some((path.clone(), svg)),
                )),
                None => Ok(plain(Outcome {
                    stdout: svg,
                    payload,
                    code: 0,
                })),
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Validate { .. } => "validate",
        Command::Compare { .. } => "compare",
        Command::Posteriors { .. } => "posteriors",
        Command::Mh { command } => match command {
            MhCommand::Solve { .. } => "mh solve",
            MhCommand::Implementable { .. } => "mh implementable",
            MhCommand::Counterexample { .. } => "mh counterexample",
        },
        Command::Sweep { .. } => "sweep",
        Command::Oracle { command } => match command {
            OracleCommand::Facets { .. } => "oracle facets",
            OracleCommand::Bestresponse { .. } => "oracle bestresponse",
            OracleCommand::Lcx { .. } => "oracle lcx",
            OracleCommand::Lagrangian { .. } => "oracle lagrangian",
        },
        Command::Plot { .. } => "plot",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let mut inputs = Inputs(Vec::new());
    let result = run(&cli, &mut inputs);
    let (outcome, file) = match result {
        Ok(r) => r,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            return ExitCode::from(2);
        }
    };
    if let Some((path, content)) = file {
        if let Err(e) = fs::write(&path, content) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if !outcome.stdout.is_empty() {
        let mut text = outcome.stdout;
        if !text.ends_with('\n') {
            text.push('\n');
        }
        // a closed pipe (`| head`) is not an error worth reporting
        let _ = io::stdout().lock().write_all(text.as_bytes());
    }
    if let Some(path) = &cli.report {
        let elapsed = cli.timing.then(|| start.elapsed().as_millis() as u64);
        let report = match RunReport::new(command_name(&cli.command), &inputs.0, cli.seed, outcome.payload, elapsed) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        };
        if let Err(e) = fs::write(path, to_json(&report) + "\n") {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(outcome.code)
}
