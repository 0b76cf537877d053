use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stopgap::bounds::TheoremId;
use stopgap::criteria::CriterionKind;
use stopgap::harness::{self, BetaMode, ExperimentConfig, PlotSelector, Stat};
use stopgap::instances::{DoSource, InstanceSpec};
use stopgap::oracle::{self, VerificationConfig};
use stopgap::pdhg::{GateConvention, PdhgVersion};
use stopgap::problem::Family;
use stopgap::{Error, Result};

/// File name looked up under `STOPGAP_DATA_DIR` for the distributed family.
const DO_DATASET: &str = "bodyfat";

#[derive(Parser)]
#[command(name = "stopgap", version, about = "PDHG stopping-criteria experiments")]
struct Cli {
    /// Directory holding external datasets (LIBSVM format).
    #[arg(long, env = "STOPGAP_DATA_DIR", global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one instance and write trace.csv, table1.json and table2.json.
    Run(RunArgs),
    /// Run the oracle suite and write verification.json.
    Verify(VerifyArgs),
    /// Run every desk-scale instance and write the combined tables.
    Tables(TablesArgs),
    /// Extract a plot series from a trace file.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Criteria to record and gate on.
    #[arg(long, value_delimiter = ',', default_values_t = ["kkt".to_string(), "sdg".to_string(), "pdg".to_string()])]
    criterion: Vec<String>,
    /// `grid`, `fixed:<b>` or `fixed:<bx>,<by>`.
    #[arg(long, default_value = "grid")]
    beta_mode: String,
    /// Update order; defaults to v2 for the QP family and v1 otherwise.
    #[arg(long)]
    version: Option<String>,
    /// `commensurate` or `raw`.
    #[arg(long, default_value = "commensurate")]
    gate: String,
    /// Record criteria and bounds every this many iterations.
    #[arg(long, default_value_t = 1)]
    record_every: usize,
}

#[derive(Args)]
struct RunArgs {
    /// One of 1d, iidg, ntc, do, pqp, bp.
    #[arg(long, required_unless_present = "config")]
    instance: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Bounds to evaluate (labels such as T4_SDG_KKT); all applicable when absent.
    #[arg(long, value_delimiter = ',')]
    bounds: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// JSON experiment config; replaces the instance and solver flags.
    #[arg(long, conflicts_with = "instance")]
    config: Option<PathBuf>,
    /// Also run the oracle suite on the instance.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to these families; all six when absent.
    #[arg(long, value_delimiter = ',')]
    instance: Vec<String>,
    /// JSON verification config; replaces the other flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip the basis-pursuit update-order probe.
    #[arg(long)]
    no_probe: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct TablesArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Seed for the random families; the QP family keeps its feasible seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = 6)]
    jobs: usize,
}

#[derive(Args)]
struct PlotArgs {
    /// trace.csv written by `run`.
    #[arg(long)]
    trace: PathBuf,
    /// `criterion:<name>` or `bound:<label>`.
    #[arg(long)]
    select: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_version(s: &str) -> Result<PdhgVersion> {
    match s {
        "v1" | "1" => Ok(PdhgVersion::V1),
        "v2" | "2" => Ok(PdhgVersion::V2),
        _ => Err(Error::InvalidConfig(format!("unknown PDHG version `{s}`"))),
    }
}

fn parse_family(s: &str) -> Result<Family> {
    Family::parse(&s.to_ascii_lowercase())
        .filter(|f| *f != Family::Custom)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown instance `{s}`")))
}

fn parse_criteria(names: &[String]) -> Result<Vec<CriterionKind>> {
    names
        .iter()
        .map(|n| CriterionKind::parse(n).ok_or_else(|| Error::InvalidConfig(format!("unknown criterion `{n}`"))))
        .collect()
}

/// The distributed family reads the dataset file when the data directory has it.
fn attach_data(spec: &mut InstanceSpec, data_dir: Option<&Path>) {
    if spec.family != Family::Do {
        return;
    }
    if let Some(path) = data_dir.map(|d| d.join(DO_DATASET)).filter(|p| p.is_file()) {
        spec.data = Some(DoSource::Libsvm(path));
    }
}

fn configure(config: &mut ExperimentConfig, args: &SolverArgs) -> Result<()> {
    let s = &mut config.solver;
    s.epsilon = args.epsilon;
    s.max_iters = args.max_iters;
    s.beta_mode = args.beta_mode.parse::<BetaMode>()?;
    s.version = args.version.as_deref().map(parse_version).transpose()?;
    s.gate = match args.gate.as_str() {
        "commensurate" => GateConvention::Commensurate,
        "raw" => GateConvention::Raw,
        g => return Err(Error::InvalidConfig(format!("unknown gate `{g}`"))),
    };
    s.record_every = args.record_every;
    config.validate()
}

fn run(args: RunArgs, data_dir: Option<&Path>) -> Result<bool> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => {
            let family = parse_family(args.instance.as_deref().unwrap_or_default())?;
            let mut spec = InstanceSpec::new(family, args.seed);
            attach_data(&mut spec, data_dir);
            let mut config = ExperimentConfig::new(spec, parse_criteria(&args.solver.criterion)?, &args.out);
            if !args.bounds.is_empty() {
                let ids = args
                    .bounds
                    .iter()
                    .map(|b| TheoremId::parse(b).ok_or_else(|| Error::InvalidConfig(format!("unknown bound `{b}`"))))
                    .collect::<Result<Vec<_>>>()?;
                config.bounds = Some(ids);
            }
            config.verify = args.verify;
            configure(&mut config, &args.solver)?;
            config
        }
    };
    let artifacts = harness::run_experiment(&config)?;
    print_table1(std::slice::from_ref(&artifacts.table1));
    let violations: usize = artifacts.table2.rows.iter().map(|r| r.violations).sum();
    println!("bound violations: {violations}");
    let verified = artifacts.verification.as_ref().is_none_or(|v| v.passed);
    if artifacts.verification.is_some() {
        println!("verification: {}", if verified { "passed" } else { "FAILED" });
    }
    println!("wrote {}", config.out.display());
    Ok(violations == 0 && verified)
}

fn verify(args: VerifyArgs, data_dir: Option<&Path>) -> Result<bool> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<VerificationConfig>(&std::fs::read_to_string(path)?)?,
        None => VerificationConfig { seed: args.seed, ..VerificationConfig::default() },
    };
    if !args.instance.is_empty() {
        let wanted = args.instance.iter().map(|s| parse_family(s)).collect::<Result<Vec<_>>>()?;
        config.instances.retain(|spec| wanted.contains(&spec.family));
        if !wanted.contains(&Family::Bp) {
            config.probe = None;
        }
    }
    if args.no_probe {
        config.probe = None;
    }
    for spec in &mut config.instances {
        attach_data(spec, data_dir);
    }
    let run = || oracle::run_verification(&config);
    let report = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    std::fs::create_dir_all(&args.out)?;
    harness::write_json(&report, &args.out.join("verification.json"))?;
    for f in &report.families {
        println!("{:<10} {}", f.label, if f.passed { "passed" } else { "FAILED" });
    }
    println!("counterexamples {}", if report.counterexamples.passed { "passed" } else { "FAILED" });
    if let Some(p) = report.probe_passed {
        println!("probe      {}", if p { "passed" } else { "FAILED" });
    }
    println!("verification: {}", if report.passed { "passed" } else { "FAILED" });
    Ok(report.passed)
}

fn tables(args: TablesArgs, data_dir: Option<&Path>) -> Result<bool> {
    let criteria = parse_criteria(&args.solver.criterion)?;
    let mut configs = Vec::new();
    for mut spec in oracle::desk_instances() {
        if let Some(seed) = args.seed.filter(|_| !matches!(spec.family, Family::OneDim | Family::Pqp)) {
            spec.seed = seed;
            if let Some(DoSource::Synthetic { seed: s, .. }) = &mut spec.data {
                *s = seed;
            }
        }
        attach_data(&mut spec, data_dir);
        let out = args.out.join(harness::instance_dir_name(&spec));
        let mut config = ExperimentConfig::new(spec, criteria.clone(), out);
        configure(&mut config, &args.solver)?;
        configs.push(config);
    }
    let artifacts = harness::run_batch(&configs, args.jobs)?;
    let t1: Vec<_> = artifacts.iter().map(|a| a.table1.clone()).collect();
    let t2: Vec<_> = artifacts.iter().map(|a| a.table2.clone()).collect();
    harness::write_json(&t1, &args.out.join("table1.json"))?;
    harness::write_json(&t2, &args.out.join("table2.json"))?;
    print_table1(&t1);
    println!();
    print_table2(&t2);
    let violations: usize = t2.iter().flat_map(|t| &t.rows).map(|r| r.violations).sum();
    println!("bound violations: {violations}");
    Ok(violations == 0)
}

fn plot(args: PlotArgs) -> Result<bool> {
    let selector: PlotSelector = args.select.parse()?;
    let csv = harness::emit_plot_data(&args.trace, &selector)?;
    match args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn print_table1(rows: &[harness::Table1]) {
    for t in rows {
        let counts: Vec<String> = t
            .iterations
            .iter()
            .map(|(k, v)| format!("{k}={}", v.map_or_else(|| format!(">{}", t.max_iters), |n| n.to_string())))
            .collect();
        println!("{:<10} {}", t.instance, counts.join(" "));
    }
}

fn stat(s: Stat) -> String {
    match s {
        Stat::Value(v) => format!("{v:.3e}"),
        Stat::Inf => "inf".into(),
        Stat::Undefined => "undefined".into(),
    }
}

fn print_table2(tables: &[harness::Table2]) {
    let shown = [TheoremId::SdgKkt, TheoremId::KktSdg, TheoremId::SdgPdg, TheoremId::PdgSdgManifold];
    for t in tables {
        let cells: Vec<String> = shown
            .iter()
            // Without a conjugate split the Lipschitz-conjugate bound fills the last column.
            .map(|&id| {
                match t
                    .row(id)
                    .or_else(|| (id == TheoremId::PdgSdgManifold).then(|| t.row(TheoremId::PdgSdgLipschitz)).flatten())
                {
                    Some(r) => format!("{}={}±{}", r.theorem.label(), stat(r.mean), stat(r.std_dev)),
                    None => format!("{}=n/a", id.label()),
                }
            })
            .collect();
        println!("{:<10} {}", t.instance, cells.join(" "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let data_dir = cli.data_dir.as_deref();
    let outcome = match cli.command {
        Command::Run(a) => run(a, data_dir),
        Command::Verify(a) => verify(a, data_dir),
        Command::Tables(a) => tables(a, data_dir),
        Command::Plot(a) => plot(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
