//! Command-line front end: `flab gen|boxdim|lemma3c|triples|multiplicity|report`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Value, json};

use crate::experiments::{MAX_ARC_FAILURE_RATE, lemma3c_suite, run_multiplicity, run_triples};
use crate::fractal::{FractalError, PointCloud};
use crate::generators::{DiscretizedFurstenbergSet, FurstenbergConfig, GeneratorError, assemble_furstenberg};
use crate::incidence::{
    ANNULUS_AREA_CONSTANT, arc_count_reference, box_counts, default_eta, dimension_bound, dimension_slope,
    from_fixed, per_arc_cover_counts,
};

pub const SCHEMA: &str = "flab.run/1";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Invariant(String),
    Io(String),
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
            CliError::Degenerate(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate experiment: {m}"),
        }
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Fractal(f) => f.into(),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<FractalError> for CliError {
    fn from(e: FractalError) -> Self {
        match e {
            FractalError::Io(_) => CliError::Io(e.to_string()),
            FractalError::Parse { .. } => CliError::Config(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "flab", version, about = "Experiments on discretized circular Furstenberg sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the circle family and point cloud.
    Gen(RunArgs),
    /// Box counts and dimension slope of a cloud.
    Boxdim(BoxdimArgs),
    /// Randomized three-circle lemma suite.
    Lemma3c(Lemma3cArgs),
    /// Arc trisection and triple counts.
    Triples(TriplesArgs),
    /// Multiplicity field and low-multiplicity statistics.
    Multiplicity(RunArgs),
    /// Everything above in one run with a combined summary.
    Report(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; falls back to the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoxdimArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Cloud CSV to measure instead of regenerating from the config.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TriplesArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Content level η; defaults to `k1^-2`.
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Lemma3cArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Working exponents, scales and generator for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_prime: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_range: Option<Vec<u32>>,
    pub generator: FurstenbergConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_c0")]
    pub c0: f64,
    /// Constant `C` in `A = C δ^{-η}`.
    #[serde(default = "default_constant")]
    pub threshold_constant: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_c0() -> f64 {
    ANNULUS_AREA_CONSTANT
}

fn default_constant() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_generator(generator: FurstenbergConfig) -> Self {
        Self {
            s_prime: None,
            t_prime: None,
            epsilon: default_epsilon(),
            k_range: None,
            generator,
            output_dir: None,
            seed: None,
            c0: default_c0(),
            threshold_constant: default_constant(),
        }
    }

    /// Parses either a full experiment config or a bare generator config.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let is_experiment = value.get("generator").is_some();
        let config = if is_experiment {
            serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            Self::from_generator(serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?)
        };
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn s_prime(&self) -> f64 {
        self.s_prime.unwrap_or(self.generator.s)
    }

    pub fn t_prime(&self) -> f64 {
        self.t_prime.unwrap_or(self.generator.t)
    }

    /// Scales for box counting; by default the five finest up to `k1`.
    pub fn k_range(&self) -> Vec<u32> {
        self.k_range.clone().unwrap_or_else(|| {
            let k1 = self.generator.k1;
            (k1.saturating_sub(4).max(1)..=k1).collect()
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.generator.validate()?;
        let (s, t) = (self.s_prime(), self.t_prime());
        if !(s > 0.0 && s <= self.generator.s) {
            return Err(CliError::Invariant(format!("s' = {s} outside (0, s = {}]", self.generator.s)));
        }
        if !(t > 0.0 && t <= self.generator.t) {
            return Err(CliError::Invariant(format!("t' = {t} outside (0, t = {}]", self.generator.t)));
        }
        if !(self.epsilon >= 0.0) {
            return Err(CliError::Invariant(format!("epsilon = {} negative", self.epsilon)));
        }
        let ks = self.k_range();
        if ks.len() < 3 || ks.windows(2).any(|w| w[0] >= w[1]) || ks[0] == 0 || ks[ks.len() - 1] > 30 {
            return Err(CliError::Invariant(format!("k_range {ks:?} must be at least 3 ascending scales in [1, 30]")));
        }
        Ok(())
    }
}

struct Run {
    config: ExperimentConfig,
    out: PathBuf,
}

impl Run {
    fn new(args: &RunArgs) -> Result<Self, CliError> {
        let mut config = ExperimentConfig::load(&args.config)?;
        if let Some(seed) = args.seed.or(config.seed) {
            config.generator.seed = seed;
            config.seed = Some(seed);
        }
        config.validate()?;
        let out = args
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .ok_or_else(|| CliError::Config("no output directory (--out or output_dir)".into()))?;
        fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        Ok(Self { config, out })
    }

    fn assemble(&self) -> Result<DiscretizedFurstenbergSet, CliError> {
        let started = Instant::now();
        let set = assemble_furstenberg(&self.config.generator)?;
        eprintln!(
            "generated {} circles, {} points (realized s = {:.4}, t = {:.4}) in {:.2?}",
            set.circles().len(),
            set.cloud.len(),
            set.realized_s(),
            set.realized_t(),
            started.elapsed()
        );
        Ok(set)
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn generator_summary(set: &DiscretizedFurstenbergSet) -> Value {
    json!({
        "circles": set.circles().len(),
        "cloud_points": set.cloud.len(),
        "realized_s": set.realized_s(),
        "realized_t": set.realized_t(),
        "non_concentration": set.family.set.conc_measured,
    })
}

fn angles_csv(set: &DiscretizedFurstenbergSet) -> String {
    let mut out = String::from("z_index,angle\n");
    for (i, angles) in set.angular.iter().enumerate() {
        for a in angles {
            writeln!(out, "{i},{a}").expect("string write");
        }
    }
    out
}

fn counts_csv(counts: &[(u32, usize)]) -> String {
    let mut out = String::from("k,N\n");
    for (k, n) in counts {
        writeln!(out, "{k},{n}").expect("string write");
    }
    out
}

/// Box counts over `ks` (which must be ascending) and the fitted slope.
fn measure_counts(cloud: &PointCloud, ks: &[u32]) -> Result<(Vec<(u32, usize)>, f64), CliError> {
    if cloud.is_empty() {
        return Err(CliError::Invariant("empty cloud".into()));
    }
    if cloud.dim() != 2 {
        return Err(CliError::Invariant("box counting needs a planar cloud".into()));
    }
    let all = box_counts(cloud, ks[0], ks[ks.len() - 1]);
    let counts: Vec<(u32, usize)> = all.into_iter().filter(|c| ks.contains(&c.0)).collect();
    let slope = dimension_slope(&counts).map_err(|e| CliError::Invariant(e.to_string()))?;
    Ok((counts, slope))
}

fn boxdim_summary(run: &Run, counts: &[(u32, usize)], slope: f64) -> Value {
    let (s, t) = (run.config.generator.s, run.config.generator.t);
    let bound = dimension_bound(s, t);
    json!({
        "counts": counts.iter().map(|&(k, n)| json!({"k": k, "N": n})).collect::<Vec<_>>(),
        "slope": slope,
        "bound": bound,
        "slope_minus_bound": slope - bound,
    })
}

fn cmd_gen(args: &RunArgs) -> Result<Value, CliError> {
    let run = Run::new(args)?;
    let set = run.assemble()?;
    set.family.set.cloud.write_csv(&run.out.join("V.csv"))?;
    set.cloud.write_csv(&run.out.join("cloud.csv"))?;
    run.write("angles.csv", &angles_csv(&set))?;
    let summary = json!({
        "schema": SCHEMA,
        "command": "gen",
        "config": run.config,
        "generator": generator_summary(&set),
    });
    write_json(&run.out, "summary.json", &summary)?;
    Ok(summary)
}

fn cmd_boxdim(args: &BoxdimArgs) -> Result<Value, CliError> {
    let run = Run::new(&args.run)?;
    let cloud = match &args.input {
        Some(path) => PointCloud::read_csv(path)?,
        None => run.assemble()?.cloud,
    };
    let (counts, slope) = measure_counts(&cloud, &run.config.k_range())?;
    eprintln!("slope {slope:.4}, bound {:.4}", dimension_bound(run.config.generator.s, run.config.generator.t));
    run.write("boxcounts.csv", &counts_csv(&counts))?;
    let summary = json!({
        "schema": SCHEMA,
        "command": "boxdim",
        "config": run.config,
        "input": args.input.as_ref().map(|p| p.display().to_string()),
        "boxdim": boxdim_summary(&run, &counts, slope),
    });
    write_json(&run.out, "summary.json", &summary)?;
    Ok(summary)
}

fn cmd_lemma3c(args: &Lemma3cArgs) -> Result<Value, CliError> {
    if args.trials == 0 {
        return Err(CliError::Invariant("trials must be at least 1".into()));
    }
    fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    let report = lemma3c_suite(args.trials, args.seed);
    eprintln!(
        "lemma3c: {} trials, max diam/(a/c^2) = {:.3}, violations {} (allowance {}), collinear nonempty {}/{}, rejected {}",
        report.trials,
        report.max_ratio,
        report.violations,
        report.allowance,
        report.collinear_nonempty,
        report.collinear_injected,
        report.rejected_inputs
    );
    let summary = json!({
        "schema": SCHEMA,
        "command": "lemma3c",
        "passed": report.passed(),
        "lemma3c": report,
    });
    write_json(&args.out, "summary.json", &summary)?;
    if !report.passed() {
        return Err(CliError::Invariant(format!("{} three-circle violations", report.violations)));
    }
    Ok(summary)
}

fn triples_section(run: &Run, set: &DiscretizedFurstenbergSet, eta: f64) -> Result<Value, CliError> {
    let s = run.config.s_prime();
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(CliError::Invariant(format!("eta = {eta} outside (0, 1]")));
    }
    let result = run_triples(set, s, eta);
    let mut arcs = String::from("z_index,content_plus,content_minus,content_times,tau\n");
    for (i, triple) in &result.arcs {
        if let Ok(t) = triple {
            writeln!(arcs, "{i},{},{},{},{}", t.contents[0], t.contents[1], t.contents[2], t.tau).expect("string write");
        }
    }
    run.write("arcs.csv", &arcs)?;
    let mut cover = String::from("z_index,cells_plus,cells_minus,cells_times,entries\n");
    for c in per_arc_cover_counts(&result.index) {
        let product: u128 = c.counts.iter().map(|&n| n as u128).product();
        writeln!(cover, "{},{},{},{},{product}", c.z_index, c.counts[0], c.counts[1], c.counts[2]).expect("string write");
    }
    run.write("arc_cells.csv", &cover)?;
    eprintln!(
        "triples: #T = {}, ratio {:.4e}, arc failures {}/{}",
        result.index.count(),
        result.ratio,
        result.failures(),
        result.arcs.len()
    );
    let section = json!({
        "eta": eta,
        "tau": result.tau,
        "occupied_cells": result.grid.len(),
        "triple_count": result.index.count().to_string(),
        "ratio": result.ratio,
        "arc_failures": result.failures(),
        "circles": result.arcs.len(),
        "arc_count_reference": arc_count_reference(set.config.k1, s),
    });
    if result.failure_rate() > MAX_ARC_FAILURE_RATE {
        return Err(CliError::Degenerate(format!(
            "arc extraction failed on {}/{} circles",
            result.failures(),
            result.arcs.len()
        )));
    }
    Ok(section)
}

fn cmd_triples(args: &TriplesArgs) -> Result<Value, CliError> {
    let run = Run::new(&args.run)?;
    let set = run.assemble()?;
    let eta = args.eta.unwrap_or_else(|| default_eta(run.config.generator.k1));
    let section = triples_section(&run, &set, eta)?;
    let summary = json!({"schema": SCHEMA, "command": "triples", "config": run.config, "triples": section});
    write_json(&run.out, "summary.json", &summary)?;
    Ok(summary)
}

fn multiplicity_section(run: &Run, set: &DiscretizedFurstenbergSet) -> Result<Value, CliError> {
    let c = &run.config;
    let result = run_multiplicity(set, c.s_prime(), c.t_prime(), c.epsilon, c.threshold_constant, c.c0)
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    let mut field = String::from("cell_x,cell_y,m\n");
    for ((i, j), v) in result.field.nonzero() {
        writeln!(field, "{i},{j},{}", from_fixed(v)).expect("string write");
    }
    run.write("multiplicity.csv", &field)?;
    let mut low = String::from("z_index,s1_cells,s2_cells,ratio,area_s1,area_bound\n");
    for (i, l) in result.low.iter().enumerate() {
        writeln!(low, "{i},{},{},{},{},{}", l.s1.len(), l.s2.len(), l.ratio, l.area_s1, l.area_bound)
            .expect("string write");
    }
    run.write("low_multiplicity.csv", &low)?;
    let (lhs, rhs) = result.fubini;
    if lhs != rhs {
        return Err(CliError::Invariant(format!("multiplicity total {lhs} differs from annulus sum {rhs}")));
    }
    eprintln!(
        "multiplicity: max m = {:.4e}, threshold {:.4e}, half-share {:.3}",
        from_fixed(result.field.max()),
        result.params.threshold,
        result.half_share()
    );
    Ok(json!({
        "params": result.params,
        "total_mass": result.measure.total_mass(),
        "max_m": from_fixed(result.field.max()),
        "nonzero_cells": result.field.nonzero().count(),
        "half_share": result.half_share(),
        "fubini_exact": true,
    }))
}

fn cmd_multiplicity(args: &RunArgs) -> Result<Value, CliError> {
    let run = Run::new(args)?;
    let set = run.assemble()?;
    let section = multiplicity_section(&run, &set)?;
    let summary = json!({"schema": SCHEMA, "command": "multiplicity", "config": run.config, "multiplicity": section});
    write_json(&run.out, "summary.json", &summary)?;
    Ok(summary)
}

fn cmd_report(args: &RunArgs) -> Result<Value, CliError> {
    let run = Run::new(args)?;
    let mut timings = serde_json::Map::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timings: &mut serde_json::Map<String, Value>| {
        let secs = clock.elapsed().as_secs_f64();
        eprintln!("{name}: {secs:.3}s");
        timings.insert(name.to_owned(), json!(secs));
        clock = Instant::now();
    };
    let set = run.assemble()?;
    set.family.set.cloud.write_csv(&run.out.join("V.csv"))?;
    set.cloud.write_csv(&run.out.join("cloud.csv"))?;
    run.write("angles.csv", &angles_csv(&set))?;
    lap("gen", &mut timings);
    let (counts, slope) = measure_counts(&set.cloud, &run.config.k_range())?;
    run.write("boxcounts.csv", &counts_csv(&counts))?;
    lap("boxdim", &mut timings);
    let triples = triples_section(&run, &set, default_eta(run.config.generator.k1))?;
    lap("triples", &mut timings);
    // Thresholds need s' > 1/2; below that the field is skipped.
    let multiplicity =
        if run.config.s_prime() > 0.5 { Some(multiplicity_section(&run, &set)?) } else { None };
    lap("multiplicity", &mut timings);
    let summary = json!({
        "schema": SCHEMA,
        "command": "report",
        "config": run.config,
        "generator": generator_summary(&set),
        "boxdim": boxdim_summary(&run, &counts, slope),
        "triples": triples,
        "multiplicity": multiplicity,
    });
    write_json(&run.out, "summary.json", &summary)?;
    write_json(&run.out, "timings.json", &Value::Object(timings))?;
    Ok(summary)
}

pub fn execute(cli: &Cli) -> Result<Value, CliError> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Boxdim(a) => cmd_boxdim(a),
        Command::Lemma3c(a) => cmd_lemma3c(a),
        Command::Triples(a) => cmd_triples(a),
        Command::Multiplicity(a) => cmd_multiplicity(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var("FLAB_THREADS") else { return };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: FLAB_THREADS ignored: {e}");
            }
        }
        _ => eprintln!("warning: FLAB_THREADS={value:?} is not a positive integer; ignored"),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
