//! Experiment runs: trajectories, per-iterate traces and the two summary tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{ratio_stats, BoundEvaluator, BoundReport, Ratio, TheoremId};
use crate::criteria::{CriterionKind, SmoothingParams};
use crate::error::{Error, Result};
use crate::ext::Ext;
use crate::instances::InstanceSpec;
use crate::oracle::{self, VerificationConfig};
use crate::pdhg::{self, BetaPolicy, GateConvention, PdhgVersion};
use crate::problem::{Family, ProblemInstance};

/// Zeros and negatives in plot series are replaced by this value.
pub const PLOT_FLOOR: f64 = 1e-16;

/// How the smoothed-gap gate picks β.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaMode {
    #[default]
    Grid,
    Fixed {
        beta_x: f64,
        beta_y: f64,
    },
}

impl FromStr for BetaMode {
    type Err = Error;

    /// `grid`, `fixed:<β>` or `fixed:<βx>,<βy>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "grid" {
            return Ok(BetaMode::Grid);
        }
        let bad = || Error::InvalidConfig(format!("beta mode `{s}` is not `grid` or `fixed:<b>[,<b>]`"));
        let rest = s.strip_prefix("fixed:").ok_or_else(bad)?;
        let parts: Vec<f64> = rest.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        match parts[..] {
            [b] => Ok(BetaMode::Fixed { beta_x: b, beta_y: b }),
            [bx, by] => Ok(BetaMode::Fixed { beta_x: bx, beta_y: by }),
            _ => Err(bad()),
        }
    }
}

impl BetaMode {
    pub fn policy(self) -> Result<BetaPolicy<f64>> {
        Ok(match self {
            BetaMode::Grid => BetaPolicy::Grid,
            BetaMode::Fixed { beta_x, beta_y } => BetaPolicy::Fixed(SmoothingParams::new(beta_x, beta_y)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Defaults to version 2 for the quadratic program and version 1 otherwise.
    #[serde(default)]
    pub version: Option<PdhgVersion>,
    #[serde(default)]
    pub gate: GateConvention,
    #[serde(default)]
    pub beta_mode: BetaMode,
    /// Store every k-th iterate in the trace; the final iterate is always kept.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_epsilon() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    100_000
}
fn default_record_every() -> usize {
    1
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            max_iters: default_max_iters(),
            version: None,
            gate: GateConvention::default(),
            beta_mode: BetaMode::default(),
            record_every: default_record_every(),
        }
    }
}

impl SolverSettings {
    pub fn version_for(&self, family: Family) -> PdhgVersion {
        self.version.unwrap_or(if family == Family::Pqp { PdhgVersion::V2 } else { PdhgVersion::V1 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFormats {
    #[serde(default = "yes")]
    pub trace_csv: bool,
    #[serde(default = "yes")]
    pub tables_json: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputFormats {
    fn default() -> Self {
        Self { trace_csv: true, tables_json: true }
    }
}

/// Everything one run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub solver: SolverSettings,
    /// Measures to gate on and record; the run stops once all have fired.
    pub criteria: Vec<CriterionKind>,
    /// Inequalities to evaluate; every applicable one when absent.
    #[serde(default)]
    pub bounds: Option<Vec<TheoremId>>,
    pub out: PathBuf,
    #[serde(default)]
    pub formats: OutputFormats,
    /// Also run the oracle suite on this instance.
    #[serde(default)]
    pub verify: bool,
}

impl ExperimentConfig {
    pub fn new(instance: InstanceSpec, criteria: Vec<CriterionKind>, out: impl Into<PathBuf>) -> Self {
        Self {
            instance,
            solver: SolverSettings::default(),
            criteria,
            bounds: None,
            out: out.into(),
            formats: OutputFormats::default(),
            verify: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.criteria.is_empty() {
            return Err(Error::InvalidConfig("criteria list is empty".into()));
        }
        let mut seen = self.criteria.clone();
        seen.sort_by_key(|k| k.label());
        seen.dedup();
        if seen.len() != self.criteria.len() {
            return Err(Error::InvalidConfig("criteria list has duplicates".into()));
        }
        let s = &self.solver;
        if !(s.epsilon > 0.0 && s.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if s.max_iters == 0 || s.record_every == 0 {
            return Err(Error::InvalidConfig("max_iters and record_every must be at least 1".into()));
        }
        s.beta_mode.policy().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.bounds.as_ref().is_some_and(|b| b.is_empty()) {
            return Err(Error::InvalidConfig("bounds list is empty".into()));
        }
        if self.instance.family == Family::Custom {
            return Err(Error::InvalidConfig("custom instances cannot be built from a config".into()));
        }
        Ok(())
    }
}

/// Iterations until each gate fired.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1 {
    pub instance: String,
    pub epsilon: f64,
    pub version: PdhgVersion,
    pub gate: GateConvention,
    pub max_iters: usize,
    /// `None` when the gate did not fire within the budget.
    pub iterations: BTreeMap<String, Option<usize>>,
}

/// A statistic that may be infinite or undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stat {
    Value(f64),
    Inf,
    Undefined,
}

impl Serialize for Stat {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Stat::Value(v) => s.serialize_f64(*v),
            Stat::Inf => s.serialize_str("inf"),
            Stat::Undefined => s.serialize_str("undefined"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Row {
    pub theorem: TheoremId,
    pub mean: Stat,
    pub std_dev: Stat,
    pub count: usize,
    pub infinite_count: usize,
    pub undefined_count: usize,
    /// Iterates where `lhs ≤ rhs` failed beyond the slack.
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2 {
    pub instance: String,
    pub rows: Vec<Table2Row>,
}

impl Table2 {
    pub fn row(&self, theorem: TheoremId) -> Option<&Table2Row> {
        self.rows.iter().find(|r| r.theorem == theorem)
    }
}

/// One recorded iterate.
#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iteration: usize,
    /// Raw measure values, aligned with [`Trace::criteria`].
    pub values: Vec<Ext<f64>>,
    /// β of the smoothed-gap gate when it is recorded.
    pub sdg_beta: Option<SmoothingParams<f64>>,
    /// Aligned with [`Trace::theorems`].
    pub bounds: Vec<BoundReport<f64>>,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub criteria: Vec<CriterionKind>,
    pub theorems: Vec<TheoremId>,
    pub rows: Vec<TraceRow>,
}

/// Results of [`run_experiment`], also written to `config.out`.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub trace: Trace,
    pub table1: Table1,
    pub table2: Table2,
    pub verification: Option<oracle::VerificationReport>,
}

fn theorems_for(config: &ExperimentConfig, evaluator: &BoundEvaluator<f64>) -> Result<Vec<TheoremId>> {
    let applicable = evaluator.theorems();
    match &config.bounds {
        None => Ok(applicable),
        Some(list) => {
            for t in list {
                if !applicable.contains(t) {
                    return Err(Error::NotApplicable(t.label()));
                }
            }
            Ok(applicable.into_iter().filter(|t| list.contains(t)).collect())
        }
    }
}

/// Runs PDHG from the origin, recording every criterion and inequality.
pub fn run_trajectory(problem: &ProblemInstance<f64>, config: &ExperimentConfig) -> Result<(Trace, Table1)> {
    config.validate()?;
    let s = &config.solver;
    if config.criteria.contains(&CriterionKind::Og) && problem.reference().is_none() {
        return Err(Error::MissingReference(problem.label().to_string()));
    }
    let version = s.version_for(problem.family());
    let policy = s.beta_mode.policy()?;
    let steps = pdhg::default_step_sizes(problem.constraint())?;
    let evaluator = BoundEvaluator::new(problem)?;
    let theorems = theorems_for(config, &evaluator)?;
    let mut fired: Vec<Option<usize>> = vec![None; config.criteria.len()];
    let mut rows = Vec::new();
    let mut z = problem.origin();
    let mut k = 0;
    loop {
        let mut values = Vec::with_capacity(config.criteria.len());
        let mut sdg_beta = None;
        for (slot, &kind) in fired.iter_mut().zip(&config.criteria) {
            let (value, score) = pdhg::gate_value(problem, &z, kind, policy, s.gate)?;
            if slot.is_none() && score <= Ext::Finite(pdhg::gate_threshold(kind, s.gate, s.epsilon)) {
                *slot = Some(k);
            }
            if kind == CriterionKind::Sdg {
                sdg_beta = value.beta;
            }
            values.push(value.value);
        }
        let done = fired.iter().all(Option::is_some);
        let last = done || k == s.max_iters;
        if last || k % s.record_every == 0 {
            let all = evaluator.evaluate(&z)?;
            let bounds = theorems
                .iter()
                .map(|t| *all.iter().find(|r| r.theorem == *t).expect("evaluated every applicable inequality"))
                .collect();
            rows.push(TraceRow { iteration: k, values, sdg_beta, bounds });
        }
        if last {
            break;
        }
        k += 1;
        z = pdhg::advance(problem, &z, steps, version, k)?;
    }
    let table1 = Table1 {
        instance: problem.label().to_string(),
        epsilon: s.epsilon,
        version,
        gate: s.gate,
        max_iters: s.max_iters,
        iterations: config.criteria.iter().zip(&fired).map(|(k, f)| (k.label().to_ascii_uppercase(), *f)).collect(),
    };
    Ok((Trace { criteria: config.criteria.clone(), theorems, rows }, table1))
}

/// Ratio statistics of every inequality over a trace.
pub fn table2(instance: &str, trace: &Trace) -> Result<Table2> {
    let mut rows = Vec::new();
    for (j, &theorem) in trace.theorems.iter().enumerate() {
        let reports: Vec<BoundReport<f64>> = trace.rows.iter().map(|r| r.bounds[j]).collect();
        let violations = reports.iter().filter(|r| !r.holds).count();
        let row = match ratio_stats(&reports) {
            Ok(st) => Table2Row {
                theorem,
                mean: Stat::Value(st.mean),
                std_dev: Stat::Value(st.std_dev),
                count: st.count,
                infinite_count: st.infinite_count,
                undefined_count: st.undefined_count,
                violations,
            },
            Err(Error::NoFiniteRatios { infinite, undefined }) => {
                let s = if infinite > 0 { Stat::Inf } else { Stat::Undefined };
                Table2Row {
                    theorem,
                    mean: s,
                    std_dev: s,
                    count: 0,
                    infinite_count: infinite,
                    undefined_count: undefined,
                    violations,
                }
            }
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(Table2 { instance: instance.to_string(), rows })
}

/// Decimal with 17 significant digits; `inf`, `-inf` and `nan` otherwise.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse { line: 0, message: format!("not a number: `{s}`") })
}

pub fn trace_header(trace: &Trace) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    for k in &trace.criteria {
        h.push(k.label().to_string());
        if *k == CriterionKind::Sdg {
            h.push("sdg_beta_x".into());
            h.push("sdg_beta_y".into());
        }
    }
    for t in &trace.theorems {
        for suffix in ["lhs", "rhs", "ratio", "beta_x", "beta_y", "holds"] {
            h.push(format!("{}_{suffix}", t.label()));
        }
    }
    h
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trace_header(trace))?;
    for row in &trace.rows {
        let mut rec = vec![row.iteration.to_string()];
        for (k, v) in trace.criteria.iter().zip(&row.values) {
            rec.push(format_number(v.value()));
            if *k == CriterionKind::Sdg {
                let b = row.sdg_beta.map_or((f64::NAN, f64::NAN), |b| (b.beta_x, b.beta_y));
                rec.push(format_number(b.0));
                rec.push(format_number(b.1));
            }
        }
        for r in &row.bounds {
            let b = r.beta.map_or((f64::NAN, f64::NAN), |b| (b.beta_x, b.beta_y));
            rec.push(format_number(r.lhs));
            rec.push(format_number(r.rhs.value()));
            rec.push(format_number(match r.ratio {
                Ratio::Finite(v) => v,
                other => other.as_f64(),
            }));
            rec.push(format_number(b.0));
            rec.push(format_number(b.1));
            rec.push(r.holds.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<S: Serialize>(value: &S, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Builds the instance, runs it and writes the artifacts under `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Artifacts> {
    config.validate()?;
    let problem = config.instance.build::<f64>()?;
    let (trace, table1) = run_trajectory(&problem, config)?;
    let table2 = table2(problem.label(), &trace)?;
    fs::create_dir_all(&config.out)?;
    if config.formats.trace_csv {
        write_trace(&trace, &config.out.join("trace.csv"))?;
    }
    if config.formats.tables_json {
        write_json(&table1, &config.out.join("table1.json"))?;
        write_json(&table2, &config.out.join("table2.json"))?;
    }
    let verification = if config.verify {
        let vc = VerificationConfig {
            instances: vec![config.instance.clone()],
            seed: config.instance.seed,
            probe: (config.instance.family == Family::Bp).then(|| config.instance.clone()),
            ..VerificationConfig::default()
        };
        let report = oracle::run_verification(&vc)?;
        write_json(&report, &config.out.join("verification.json"))?;
        Some(report)
    } else {
        None
    };
    Ok(Artifacts { trace, table1, table2, verification })
}

/// Directory name of one instance inside a batch output directory.
pub fn instance_dir_name(spec: &InstanceSpec) -> String {
    match spec.family {
        Family::OneDim => "1d".to_string(),
        f => format!("{}-s{}", f.label(), spec.seed),
    }
}

/// Runs each config on a pool of `jobs` workers; results keep input order.
pub fn run_batch(configs: &[ExperimentConfig], jobs: usize) -> Result<Vec<Artifacts>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| configs.par_iter().map(run_experiment).collect())
}

/// Which series to extract from a trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlotSelector {
    /// A measure against the iteration count.
    Criterion(CriterionKind),
    /// Both sides of an inequality against the iteration count.
    Bound(TheoremId),
}

impl FromStr for PlotSelector {
    type Err = Error;

    /// `criterion:<name>` or `bound:<label>`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownSelector(s.to_string());
        match s.split_once(':') {
            Some(("criterion", name)) => CriterionKind::parse(name).map(PlotSelector::Criterion).ok_or_else(unknown),
            Some(("bound", name)) => TheoremId::parse(name).map(PlotSelector::Bound).ok_or_else(unknown),
            _ => Err(unknown()),
        }
    }
}

fn clamp(v: f64) -> (f64, bool) {
    if v > PLOT_FLOOR || v.is_nan() {
        (v, false)
    } else {
        (PLOT_FLOOR, true)
    }
}

/// Extracts a log-scale-ready series from a trace file and returns it as CSV
/// with a flag column per value marking clamped entries.
pub fn emit_plot_data(trace_path: &Path, selector: &PlotSelector) -> Result<String> {
    let mut r = csv::Reader::from_path(trace_path)?;
    let header = r.headers()?.clone();
    let col =
        |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::UnknownSelector(name.to_string()));
    let (names, cols): (Vec<String>, Vec<usize>) = match selector {
        PlotSelector::Criterion(k) => (vec![k.label().to_string()], vec![col(k.label())?]),
        PlotSelector::Bound(t) => {
            let (l, h) = (format!("{}_lhs", t.label()), format!("{}_rhs", t.label()));
            (vec!["lhs".into(), "rhs".into()], vec![col(&l)?, col(&h)?])
        }
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["iteration".to_string()];
    head.extend(names.iter().cloned());
    head.extend(names.iter().map(|n| format!("{n}_clamped")));
    w.write_record(&head)?;
    let mut count = 0;
    for rec in r.records() {
        let rec = rec?;
        let mut out = vec![rec[0].to_string()];
        let mut flags = Vec::new();
        for &c in &cols {
            let (v, clamped) = clamp(parse_number(&rec[c])?);
            out.push(format_number(v));
            flags.push(u8::from(clamped).to_string());
        }
        out.extend(flags);
        w.write_record(&out)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::Empty("trace"));
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
