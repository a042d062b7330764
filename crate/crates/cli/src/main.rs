//! `duality`: identity checks, Monte Carlo experiments and trace export.
//!
//! Exit status: 0 when every test passes, 1 when one fails, 2 on usage or
//! configuration errors.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use duality::particles::{bus_stop_run, write_snapshots_csv, zero_range_run};
use duality::queue_store::QueueTrace;
use duality::rsk::identity_sweep;
use duality::sampling::{RateParams, Seed};
use duality::schur::WeightVector;
use duality::stattest::{
    burke_experiment, interchange_experiment, laguerre_check, noncolliding_experiment, shape_law_experiment,
    zigzag_law_experiment, Check, ExperimentReport,
};
use duality::tandem::{queue_departures, store_flow, ServiceMatrix};

#[derive(Parser)]
#[command(
    name = "duality",
    version,
    about = "Queue/store duality: identities, experiments and traces"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand; a config file may set the same keys.
#[derive(Args, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    /// TOML file with default values for any flag of the subcommand.
    #[arg(long, global = true)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Master seed [default: 1].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replications; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file [default: standard output].
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format [default: json, csv for trace].
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

const COMMON_KEYS: [&str; 4] = ["seed", "threads", "output", "format"];

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Model {
    /// Bernoulli arrivals, geometric services.
    Geom,
    /// Poisson arrivals, exponential services.
    Mm1,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum ParticleModel {
    ZeroRange,
    BusStop,
}

#[derive(Subcommand)]
enum Command {
    /// RSK rows against operator chains, lattice paths and both tandems.
    VerifyIdentities(VerifyArgs),
    /// Joint output theorem for a stable single-server queue.
    Burke(BurkeArgs),
    /// Zigzag trajectory law of busy periods (geometric model).
    ZigzagLaw(ZigzagArgs),
    /// Conditioned partial sums against the max/min prefix functionals.
    Noncolliding(NoncollidingArgs),
    /// Permuting the stages of a geometric tandem.
    Interchange(InterchangeArgs),
    /// RSK shape law and the partition chain.
    ShapeLaw(ShapeArgs),
    /// Law of the store output of a square exponential tandem.
    Laguerre(LaguerreArgs),
    /// Zero-range or bus-stop run of a service matrix.
    Particles(ParticlesArgs),
    /// Queue trace of given arrival epochs and services.
    Trace(TraceArgs),
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct VerifyArgs {
    /// Customers N [default: 6].
    #[arg(long)]
    n: Option<usize>,
    /// Stages K [default: 4].
    #[arg(long)]
    k: Option<usize>,
    /// Entries are uniform on 0..=max-entry [default: 5].
    #[arg(long)]
    max_entry: Option<u64>,
    /// Random matrices to check [default: 10000].
    #[arg(long)]
    cases: Option<usize>,
}

/// Queue parameters: `p`/`q` for the geometric model, `lambda`/`mu` for M/M/1.
#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct QueueArgs {
    /// Input model [default: geom].
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Arrival parameter of the geometric model.
    #[arg(long)]
    p: Option<f64>,
    /// Service parameter of the geometric model.
    #[arg(long)]
    q: Option<f64>,
    /// Arrival rate of the M/M/1 model.
    #[arg(long)]
    lambda: Option<f64>,
    /// Service rate of the M/M/1 model.
    #[arg(long)]
    mu: Option<f64>,
}

impl QueueArgs {
    fn params(&self, default_q: f64) -> RateParams {
        match self.model.unwrap_or(Model::Geom) {
            Model::Geom => RateParams::GeomGeom1 {
                arrival: self.p.unwrap_or(0.3),
                service: self.q.unwrap_or(default_q),
            },
            Model::Mm1 => RateParams::Mm1 {
                arrival: self.lambda.unwrap_or(0.3),
                service: self.mu.unwrap_or(0.7),
            },
        }
    }
}

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct BurkeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    queue: QueueArgs,
    /// Departure pairs collected after burn-in [default: 100000].
    #[arg(long)]
    horizon: Option<usize>,
    /// Departures discarded first [default: 10000].
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ZigzagArgs {
    /// Arrival parameter [default: 0.3].
    #[arg(long)]
    p: Option<f64>,
    /// Service parameter [default: 0.7].
    #[arg(long)]
    q: Option<f64>,
    /// Busy periods sampled [default: 100000].
    #[arg(long)]
    busy_periods: Option<usize>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct NoncollidingArgs {
    #[command(flatten)]
    #[serde(flatten)]
    queue: QueueArgs,
    /// Order of the partial sums [default: 3].
    #[arg(long)]
    n: Option<usize>,
    /// Steps over which the conditioning event is checked [default: 50].
    #[arg(long)]
    trunc: Option<usize>,
    /// Accepted samples and unconditional samples [default: 100000].
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct InterchangeArgs {
    /// Geometric parameters of the stages [default: 0.3,0.6].
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Stage order compared with the original, zero-based [default: reversed].
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    /// Customers [default: 4].
    #[arg(long)]
    n: Option<usize>,
    /// Replications per ordering [default: 100000].
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ShapeArgs {
    /// Geometric parameters of the columns [default: 0.3,0.5].
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    /// Rows [default: 4].
    #[arg(long)]
    n: Option<usize>,
    /// Replications [default: 100000].
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct LaguerreArgs {
    /// Size of the square matrix [default: 3].
    #[arg(long)]
    k: Option<usize>,
    /// Replications [default: 1000000].
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct ParticlesArgs {
    /// Particle system [default: zero-range].
    #[arg(long, value_enum)]
    model: Option<ParticleModel>,
    /// Headerless CSV service matrix; a random one is drawn otherwise.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Rows of the random matrix [default: 5].
    #[arg(long)]
    n: Option<usize>,
    /// Columns of the random matrix [default: 3].
    #[arg(long)]
    k: Option<usize>,
    /// Entries of the random matrix are uniform on 0..=max-entry [default: 4].
    #[arg(long)]
    max_entry: Option<u64>,
}

#[derive(Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct TraceArgs {
    /// Arrival epochs, strictly increasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Option<Vec<String>>,
    /// Service times.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<String>>,
    /// Initial waiting time [default: 0].
    #[arg(long)]
    w1: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl From<duality::Error> for Failure {
    fn from(e: duality::Error) -> Self {
        use duality::Error::*;
        match e {
            InvalidParameter(_) | Domain(_) | TooLarge { .. } | Csv(_) => Failure::Usage(e.to_string()),
            _ => Failure::Run(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

/// Reads the config file and splits it into shared and subcommand keys.
fn read_config(path: Option<&Path>) -> Result<(Common, Map<String, Value>), Failure> {
    let Some(path) = path else {
        return Ok((Common::default(), Map::new()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let Value::Object(mut keys) = serde_json::to_value(table).expect("TOML maps to JSON") else {
        unreachable!("a TOML document is a table")
    };
    let shared: Map<String, Value> = COMMON_KEYS
        .iter()
        .filter_map(|&k| keys.remove(k).map(|v| (k.to_string(), v)))
        .collect();
    let common = serde_json::from_value(Value::Object(shared)).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    Ok((common, keys))
}

/// Subcommand arguments with flags taking precedence over the config file.
fn merged<T: Serialize + DeserializeOwned>(flags: &T, mut file: Map<String, Value>) -> Result<T, Failure> {
    let Value::Object(given) = serde_json::to_value(flags).expect("arguments serialize") else {
        unreachable!("argument structs serialize to maps")
    };
    let Value::Object(known) = serde_json::to_value(flags).expect("arguments serialize") else {
        unreachable!("argument structs serialize to maps")
    };
    if let Some(unknown) = file.keys().find(|k| !known.contains_key(*k)) {
        return Err(Failure::Usage(format!("config: unknown key `{unknown}`")));
    }
    file.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    serde_json::from_value(Value::Object(file)).map_err(|e| Failure::Usage(format!("config: {e}")))
}

struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn open(&self) -> io::Result<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(File::create(p)?),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn report(&self, report: &ExperimentReport) -> Outcome {
        let mut out = self.open()?;
        match self.format {
            Format::Json => writeln!(out, "{}", report.to_json())?,
            Format::Csv => report_csv(report, &mut out).map_err(|e| Failure::Run(e.to_string()))?,
        }
        out.flush()?;
        Ok(report.verdict)
    }
}

fn report_csv(report: &ExperimentReport, out: &mut dyn Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "name", "value", "p_value", "dof", "n_samples", "passed"])?;
    for t in &report.tests {
        let dof = t.dof.map(|d| d.to_string()).unwrap_or_default();
        let record = [
            "test",
            &t.name,
            &t.statistic.to_string(),
            &t.p_value.to_string(),
            &dof,
            &t.n_samples.to_string(),
            &t.passed.to_string(),
        ];
        w.write_record(record)?;
    }
    for c in &report.checks {
        w.write_record([
            "check",
            &c.name,
            &c.value.to_string(),
            "",
            "",
            "",
            &c.passed.to_string(),
        ])?;
    }
    for d in &report.diagnostics {
        w.write_record([
            "diagnostic",
            &d.name,
            &d.value.to_string(),
            "",
            "",
            "",
            &(!d.flagged).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn weights(q: Option<Vec<f64>>, default: &[f64]) -> Result<WeightVector, Failure> {
    Ok(WeightVector::new(q.unwrap_or_else(|| default.to_vec()))?)
}

fn verify(args: VerifyArgs, seed: Seed, sink: &Sink) -> Outcome {
    let (n, k) = (args.n.unwrap_or(6), args.k.unwrap_or(4));
    let (max_entry, cases) = (args.max_entry.unwrap_or(5), args.cases.unwrap_or(10_000));
    let sweep = identity_sweep(n, k, max_entry, cases, seed)?;
    let params = json!({ "n": n, "k": k, "max_entry": max_entry, "cases": cases });
    let mut report = ExperimentReport::new("verify-identities", params, seed);
    report.check(Check::within(
        "matrices violating an identity",
        sweep.failures as f64,
        0.0,
        0.0,
    ));
    if let Some((rows, readings)) = &sweep.first_failure {
        report.diagnostic("first failure", 1.0, true, format!("{rows:?}: {readings:?}"));
    }
    sink.report(&report.finish())
}

fn particles(args: ParticlesArgs, seed: Seed, sink: &Sink) -> Outcome {
    let u = match &args.matrix {
        Some(path) => {
            ServiceMatrix::read_csv(File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?)?
        }
        None => {
            let (n, k) = (args.n.unwrap_or(5), args.k.unwrap_or(3));
            random_matrix(n, k, args.max_entry.unwrap_or(4), seed)?
        }
    };
    let model = args.model.unwrap_or(ParticleModel::ZeroRange);
    let (matches, log, snapshots) = match model {
        ParticleModel::ZeroRange => {
            let run = zero_range_run(&u);
            let d = queue_departures(&u);
            let ok = run.jumps.iter().all(|j| j.slot == d.at(j.particle, j.site));
            (ok, json!({ "jumps": run.jumps }), run.snapshots)
        }
        ParticleModel::BusStop => {
            let run = bus_stop_run(&u);
            let flow = store_flow(&u);
            let k = u.stages();
            let ok = run
                .transports
                .iter()
                .all(|t| t.amount == flow.departure(t.slot as usize, k + 1 - t.site));
            (ok, json!({ "transports": run.transports }), run.snapshots)
        }
    };
    let mut out = sink.open()?;
    match sink.format {
        Format::Csv => write_snapshots_csv(&snapshots, &mut out)?,
        Format::Json => {
            let body = json!({
                "name": "particles",
                "model": model,
                "matrix": u.rows().collect::<Vec<_>>(),
                "log": log,
                "snapshots": snapshots,
                "verdict": matches,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&body).expect("serializable"))?;
        }
    }
    out.flush()?;
    Ok(matches)
}

fn random_matrix(n: usize, k: usize, max_entry: u64, seed: Seed) -> Result<ServiceMatrix<u64>, Failure> {
    use rand::Rng;
    let mut rng = seed.rng();
    Ok(ServiceMatrix::from_fn(n, k, |_, _| rng.random_range(0..=max_entry))?)
}

fn trace(args: TraceArgs, sink: &Sink) -> Outcome {
    let (Some(a), Some(s)) = (args.a, args.s) else {
        return Err(Failure::Usage("trace needs --a and --s".into()));
    };
    let w1 = args.w1.unwrap_or_else(|| "0".into());
    let all: Vec<&String> = a.iter().chain(&s).chain(std::iter::once(&w1)).collect();
    if all.iter().all(|x| x.trim().parse::<i64>().is_ok()) {
        let parse = |v: &[String]| {
            v.iter()
                .map(|x| x.trim().parse::<i64>().expect("checked"))
                .collect::<Vec<_>>()
        };
        let t = QueueTrace::build(parse(&a), parse(&s), w1.trim().parse().expect("checked"))?;
        write_trace(&t, sink)
    } else {
        let parse = |x: &String| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Usage(format!("{x:?}: {e}")))
        };
        let a = a.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
        let s = s.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
        let t = QueueTrace::build(a, s, parse(&w1)?)?;
        write_trace(&t, sink)
    }
}

fn write_trace<T: duality::Quantity + Serialize>(t: &QueueTrace<T>, sink: &Sink) -> Outcome {
    let mut out = sink.open()?;
    match sink.format {
        Format::Csv => t.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(t).expect("serializable"))?,
    }
    out.flush()?;
    Ok(true)
}

fn run(cli: Cli) -> Outcome {
    let (file_common, file_keys) = read_config(cli.common.config.as_deref())?;
    let seed = Seed::new(cli.common.seed.or(file_common.seed).unwrap_or(1));
    if let Some(threads) = cli.common.threads.or(file_common.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let default_format = if matches!(cli.command, Command::Trace(_)) {
        Format::Csv
    } else {
        Format::Json
    };
    let sink = Sink {
        path: cli.common.output.or(file_common.output),
        format: cli.common.format.or(file_common.format).unwrap_or(default_format),
    };
    match cli.command {
        Command::VerifyIdentities(a) => verify(merged(&a, file_keys)?, seed, &sink),
        Command::Burke(a) => {
            let a = merged(&a, file_keys)?;
            let params = a.queue.params(0.6);
            let report = burke_experiment(params, a.horizon.unwrap_or(100_000), a.burn_in.unwrap_or(10_000), seed)?;
            sink.report(&report)
        }
        Command::ZigzagLaw(a) => {
            let a = merged(&a, file_keys)?;
            let busy = a.busy_periods.unwrap_or(100_000);
            sink.report(&zigzag_law_experiment(
                a.p.unwrap_or(0.3),
                a.q.unwrap_or(0.7),
                busy,
                seed,
            )?)
        }
        Command::Noncolliding(a) => {
            let a = merged(&a, file_keys)?;
            let params = a.queue.params(0.7);
            let (n, trunc, reps) = (a.n.unwrap_or(3), a.trunc.unwrap_or(50), a.reps.unwrap_or(100_000));
            sink.report(&noncolliding_experiment(params, n, trunc, reps, seed)?)
        }
        Command::Interchange(a) => {
            let a = merged(&a, file_keys)?;
            let q = weights(a.q, &[0.3, 0.6])?;
            let order = a.order.unwrap_or_else(|| (0..q.len()).rev().collect());
            sink.report(&interchange_experiment(
                &q,
                &order,
                a.n.unwrap_or(4),
                a.reps.unwrap_or(100_000),
                seed,
            )?)
        }
        Command::ShapeLaw(a) => {
            let a = merged(&a, file_keys)?;
            let q = weights(a.q, &[0.3, 0.5])?;
            sink.report(&shape_law_experiment(
                &q,
                a.n.unwrap_or(4),
                a.reps.unwrap_or(100_000),
                seed,
            )?)
        }
        Command::Laguerre(a) => {
            let a = merged(&a, file_keys)?;
            sink.report(&laguerre_check(a.k.unwrap_or(3), a.reps.unwrap_or(1_000_000), seed)?)
        }
        Command::Particles(a) => particles(merged(&a, file_keys)?, seed, &sink),
        Command::Trace(a) => trace(merged(&a, file_keys)?, &sink),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
