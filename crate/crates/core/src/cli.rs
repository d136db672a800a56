//! The `interchange` command line.
//!
//! Every run writes `<subcommand>.manifest.json` into `--out` before any
//! result file, then rewrites it with the end timestamp. The manifest records
//! the full argument vector, so re-running `argv` reproduces the result files
//! byte for byte.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loops::build_loops;
use crate::oracle::{analytic_two_point_n2, gw_survival};
use crate::sampler::{SamplerConfig, SamplerConfigFile, WeightSpec};
use crate::stats::{
    fmt_float, median, quantum_cross_check, red_poisson_experiment, run_replicas,
    twist_equivalence_experiment, CycleStats, ExperimentOptions, ReplicaRecord, SamplerKind,
    CSV_HEADER,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "interchange",
    version,
    about = "Cycle-weighted interchange process simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample on K_n and record cycle statistics per replica.
    Sample(SampleArgs),
    /// Cycle statistics over a grid of (n, lambda, theta).
    Sweep(SweepArgs),
    /// Poisson test of red-cross counts against the red-region measure.
    VerifyColouring(VerifyArgs),
    /// Law of the red permutation against its twisted reconstruction.
    VerifyTwist(VerifyArgs),
    /// Spin correlations against a quarter of the theta = 2 two-point function.
    XcheckQuantum(QuantumArgs),
    /// Survival probability of a Poisson Galton-Watson process.
    Gw(GwArgs),
    /// Summary table and plot-ready CSV from a sample or sweep CSV.
    Report(ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Sweep(_) => "sweep",
            Command::VerifyColouring(_) => "verify-colouring",
            Command::VerifyTwist(_) => "verify-twist",
            Command::XcheckQuantum(_) => "xcheck-quantum",
            Command::Gw(_) => "gw",
            Command::Report(_) => "report",
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Sample(a) => &a.common,
            Command::Sweep(a) => &a.common,
            Command::VerifyColouring(a) | Command::VerifyTwist(a) => &a.common,
            Command::XcheckQuantum(a) => &a.common,
            Command::Gw(a) => &a.common,
            Command::Report(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// External-field loop weight 2cosh(h * length) instead of constant theta.
    #[arg(long)]
    pub field_h: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Probability of a time-shift proposal in the MCMC chain.
    #[arg(long)]
    pub shift_prob: Option<f64>,
    /// JSON sampler configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SamplerArgs {
    #[arg(long)]
    pub replicas: Option<usize>,
    /// mcmc or rejection.
    #[arg(long)]
    pub sampler: Option<String>,
    /// MCMC chains (0 = one per replica).
    #[arg(long)]
    pub chains: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplerArgs,
    /// Write the loops of replica 0 as JSON.
    #[arg(long)]
    pub dump_loops: Option<PathBuf>,
    /// Write every sampled configuration as JSONL.
    #[arg(long)]
    pub spool: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub theta: Vec<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub shift_prob: Option<f64>,
    #[command(flatten)]
    pub sampling: SamplerArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub sampling: SamplerArgs,
    /// Colour with red probability 1 / colour_theta (default: the model theta).
    #[arg(long)]
    pub colour_theta: Option<f64>,
    /// verify-colouring: fail when p <= this. verify-twist: fail when TV >= this.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuantumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub replicas: usize,
    /// Largest accepted |z| per pair.
    #[arg(long, default_value_t = 3.0)]
    pub max_z: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GwArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV written by `sample` or `sweep`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub start_unix_ms: u128,
    pub end_unix_ms: Option<u128>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    fn path(&self, out: &Path) -> PathBuf {
        out.join(format!("{}.manifest.json", self.subcommand))
    }

    fn write(&self, out: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(self.path(out))?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        let argv = v["argv"]
            .as_array()
            .ok_or_else(|| Error::InvalidConfig("manifest has no argv".into()))?
            .iter()
            .map(|a| a.as_str().unwrap_or_default().to_string())
            .collect();
        Ok(Self {
            subcommand: v["subcommand"].as_str().unwrap_or_default().to_string(),
            argv,
            parameters: v["parameters"].clone(),
            seed: v["seed"].as_u64().unwrap_or_default(),
            version: v["version"].as_str().unwrap_or_default().to_string(),
            start_unix_ms: v["start_unix_ms"].as_u64().unwrap_or_default() as u128,
            end_unix_ms: v["end_unix_ms"].as_u64().map(u128::from),
            outputs: v["outputs"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .filter_map(|s| s.as_str().map(String::from))
                        .collect()
                })
                .unwrap_or_default(),
        })
    }
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

/// Result of a subcommand: files written and whether verification passed.
struct Outcome {
    outputs: Vec<String>,
    passed: bool,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match execute(&cli.command, &argv) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidGraph(_)
        | Error::Precondition(_)
        | Error::ThetaBelowOne(_)
        | Error::Sampler(_)
        | Error::Underpowered { .. }
        | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

fn execute(cmd: &Command, argv: &[OsString]) -> Result<bool> {
    let common = cmd.common();
    fs::create_dir_all(&common.out)?;
    let mut manifest = RunManifest {
        subcommand: cmd.name().to_string(),
        argv: argv
            .iter()
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        parameters: serde_json::to_value(cmd)?,
        seed: common.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        start_unix_ms: now_ms(),
        end_unix_ms: None,
        outputs: Vec::new(),
    };
    manifest.write(&common.out)?;
    let outcome = match cmd {
        Command::Sample(a) => cmd_sample(a)?,
        Command::Sweep(a) => cmd_sweep(a)?,
        Command::VerifyColouring(a) => cmd_verify_colouring(a)?,
        Command::VerifyTwist(a) => cmd_verify_twist(a)?,
        Command::XcheckQuantum(a) => cmd_xcheck(a)?,
        Command::Gw(a) => cmd_gw(a)?,
        Command::Report(a) => cmd_report(a)?,
    };
    manifest.outputs = outcome.outputs;
    manifest.end_unix_ms = Some(now_ms());
    manifest.write(&common.out)?;
    Ok(outcome.passed)
}

fn sampler_config(
    model: &ModelArgs,
    seed: u64,
    defaults: (usize, f64, f64),
) -> Result<SamplerConfig> {
    let mut file = match &model.config {
        Some(p) => serde_json::from_reader::<_, SamplerConfigFile>(BufReader::new(File::open(p)?))?,
        None => SamplerConfigFile {
            n: defaults.0,
            lambda: defaults.1,
            theta: None,
            field_h: None,
            burn_in: None,
            thin: None,
            seed: None,
            shift_prob: None,
        },
    };
    if let Some(n) = model.n {
        file.n = n;
    }
    if let Some(l) = model.lambda {
        file.lambda = l;
    }
    if model.theta.is_some() && model.field_h.is_some() {
        return Err(Error::InvalidConfig(
            "--theta and --field-h are exclusive".into(),
        ));
    }
    if model.theta.is_some() {
        file.theta = model.theta;
        file.field_h = None;
    }
    if model.field_h.is_some() {
        file.field_h = model.field_h;
        file.theta = None;
    }
    if file.theta.is_none() && file.field_h.is_none() {
        file.theta = Some(defaults.2);
    }
    file.burn_in = model.burn_in.or(file.burn_in);
    file.thin = model.thin.or(file.thin);
    file.shift_prob = model.shift_prob.or(file.shift_prob);
    if model.config.is_none() || file.seed.is_none() {
        file.seed = Some(seed);
    }
    file.into_config()
}

fn options(
    s: &SamplerArgs,
    threads: usize,
    defaults: (usize, SamplerKind, usize),
) -> Result<ExperimentOptions> {
    Ok(ExperimentOptions {
        replicas: s.replicas.unwrap_or(defaults.0),
        sampler: match &s.sampler {
            Some(name) => name.parse()?,
            None => defaults.1,
        },
        chains: s.chains.unwrap_or(defaults.2),
        threads,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn out_file(common: &CommonArgs, name: &str) -> (PathBuf, String) {
    (common.out.join(name), name.to_string())
}

#[derive(Serialize)]
struct TwoPoint {
    estimate: f64,
    standard_error: f64,
    analytic: Option<f64>,
}

fn cmd_sample(a: &SampleArgs) -> Result<Outcome> {
    let config = sampler_config(&a.model, a.common.seed, (0, 0.0, 1.0))?;
    let opts = options(&a.sampling, a.common.threads, (1000, SamplerKind::Mcmc, 0))?;
    let keep = a.spool.is_some() || a.dump_loops.is_some();
    let run = run_replicas(&config, opts, |i, cfg, d| {
        let keep_this = a.spool.is_some() || (a.dump_loops.is_some() && i == 0);
        Ok((
            ReplicaRecord::from_decomposition(i, d),
            (keep && keep_this).then(|| cfg.clone()),
        ))
    })?;
    let (records, configs): (Vec<_>, Vec<_>) = run.outputs.into_iter().unzip();
    let stats = CycleStats::from_run(
        &config,
        crate::stats::ReplicaRun {
            outputs: records,
            telemetry: run.telemetry,
            ess_ell: run.ess_ell,
        },
    );
    let mut outputs = Vec::new();
    let (csv, name) = out_file(&a.common, "sample.csv");
    let mut w = BufWriter::new(File::create(&csv)?);
    stats.write_csv(&mut w)?;
    w.flush()?;
    outputs.push(name);

    if let Some(path) = &a.spool {
        let mut w = BufWriter::new(File::create(path)?);
        for cfg in configs.iter().flatten() {
            cfg.write_jsonl(config.n, &mut w)?;
        }
        w.flush()?;
        outputs.push(path.display().to_string());
    }
    if let Some(path) = &a.dump_loops {
        let cfg = configs[0].as_ref().expect("replica 0 kept");
        fs::write(path, build_loops(cfg, config.n)?.to_json()? + "\n")?;
        outputs.push(path.display().to_string());
    }

    let summary = stats.summary(a.common.seed);
    let (estimate, standard_error) = stats.two_point_estimate();
    let analytic = (config.n == 2 && matches!(config.weight, WeightSpec::Constant { .. }))
        .then(|| analytic_two_point_n2(config.weight.theta_max(), config.beta()));
    let two_point = TwoPoint {
        estimate,
        standard_error,
        analytic,
    };
    let (js, name) = out_file(&a.common, "sample_summary.json");
    write_json(
        &js,
        &serde_json::json!({"summary": summary, "two_point_1_2": two_point}),
    )?;
    outputs.push(name);

    println!(
        "n={} lambda={} theta={} replicas={}",
        config.n,
        fmt_float(config.lambda),
        fmt_float(config.weight.theta_max()),
        stats.records.len()
    );
    println!(
        "mean |C1|/n = {}  median |C1|/n = {}  mean l = {}",
        fmt_float(summary.mean_c1_frac),
        fmt_float(summary.median_c1_frac),
        fmt_float(summary.mean_ell)
    );
    if config.n >= 2 {
        println!(
            "P(1<->2) = {} +- {}",
            fmt_float(estimate),
            fmt_float(standard_error)
        );
    }
    if let Some(v) = analytic {
        println!(
            "analytic P(1<->2) = {}  z = {}",
            fmt_float(v),
            fmt_float((estimate - v) / standard_error.max(f64::MIN_POSITIVE))
        );
    }
    if let (Some(t), Some(ess)) = (stats.telemetry, stats.ess_ell) {
        println!(
            "birth acceptance = {}  death acceptance = {}  ESS(l) = {}",
            fmt_float(t.birth_rate()),
            fmt_float(t.death_rate()),
            fmt_float(ess)
        );
    }
    Ok(Outcome {
        outputs,
        passed: true,
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    let opts = options(&a.sampling, a.common.threads, (200, SamplerKind::Mcmc, 0))?;
    let (csv, name) = out_file(&a.common, "sweep.csv");
    let mut w = BufWriter::new(File::create(&csv)?);
    writeln!(w, "{CSV_HEADER}")?;
    let mut summaries = Vec::new();
    for (cell, (&n, &lambda, &theta)) in
        a.n.iter()
            .flat_map(|n| {
                a.lambda
                    .iter()
                    .flat_map(move |l| a.theta.iter().map(move |t| (n, l, t)))
            })
            .enumerate()
    {
        let model = ModelArgs {
            n: Some(n),
            lambda: Some(lambda),
            theta: Some(theta),
            field_h: None,
            burn_in: a.burn_in,
            thin: a.thin,
            shift_prob: a.shift_prob,
            config: None,
        };
        let seed = crate::seed::derive_seed(a.common.seed, "sweep-cell", cell as u64);
        let config = sampler_config(&model, seed, (n, lambda, theta))?;
        let stats = crate::stats::largest_cycle_experiment(&config, opts)?;
        stats.write_csv_rows(&mut w)?;
        let s = stats.summary(seed);
        println!(
            "n={} lambda={} theta={}  mean |C1|/n = {}  P(|C1| >= 0.01n) = {}",
            n,
            fmt_float(lambda),
            fmt_float(theta),
            fmt_float(s.mean_c1_frac),
            fmt_float(s.tail[0].prob)
        );
        summaries.push(s);
    }
    w.flush()?;
    let (js, js_name) = out_file(&a.common, "sweep_summary.json");
    write_json(&js, &summaries)?;
    Ok(Outcome {
        outputs: vec![name, js_name],
        passed: true,
    })
}

fn cmd_verify_colouring(a: &VerifyArgs) -> Result<Outcome> {
    let config = sampler_config(&a.model, a.common.seed, (50, 1.0, 2.0))?;
    let opts = options(
        &a.sampling,
        a.common.threads,
        (10_000, SamplerKind::Mcmc, 100),
    )?;
    let colour_theta = a.colour_theta.unwrap_or(config.weight.theta_max());
    let threshold = a.threshold.unwrap_or(0.01);
    let report = red_poisson_experiment(&config, opts, colour_theta)?;
    let passed = report.passes(threshold);
    let (js, name) = out_file(&a.common, "verify-colouring.json");
    write_json(
        &js,
        &serde_json::json!({"report": report, "threshold": threshold, "passed": passed}),
    )?;
    println!(
        "red-cross Poisson test: statistic = {}  p = {}  samples = {}  {}",
        fmt_float(report.statistic),
        fmt_float(report.p_value),
        report.n_samples,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(Outcome {
        outputs: vec![name],
        passed,
    })
}

fn cmd_verify_twist(a: &VerifyArgs) -> Result<Outcome> {
    let config = sampler_config(&a.model, a.common.seed, (5, 1.0, 2.0))?;
    let opts = options(
        &a.sampling,
        a.common.threads,
        (100_000, SamplerKind::Rejection, 100),
    )?;
    let colour_theta = a.colour_theta.unwrap_or(config.weight.theta_max());
    let threshold = a.threshold.unwrap_or(0.02);
    let report = twist_equivalence_experiment(&config, opts, colour_theta)?;
    let passed = report.tv.distance < threshold;
    let (js, name) = out_file(&a.common, "verify-twist.json");
    write_json(
        &js,
        &serde_json::json!({"report": report, "threshold": threshold, "passed": passed}),
    )?;
    println!(
        "twist reconstruction: TV = {}  95% CI = [{}, {}]  TV with red set = {}  {}",
        fmt_float(report.tv.distance),
        fmt_float(report.tv.ci.0),
        fmt_float(report.tv.ci.1),
        fmt_float(report.tv_with_red_set.distance),
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(Outcome {
        outputs: vec![name],
        passed,
    })
}

fn cmd_xcheck(a: &QuantumArgs) -> Result<Outcome> {
    let mut checks = Vec::new();
    let mut passed = true;
    for (i, &n) in a.n.iter().enumerate() {
        let seed = crate::seed::derive_seed(a.common.seed, "xcheck", i as u64);
        let c = quantum_cross_check(n, a.beta, a.replicas, seed, a.common.threads)?;
        let ok = c.passes(a.max_z, 1e-10);
        passed &= ok;
        for p in &c.pairs {
            println!(
                "n={} ({},{}): quantum = {}  P/4 = {} +- {}  z = {}",
                n,
                p.x,
                p.y,
                fmt_float(p.quantum),
                fmt_float(p.quarter_estimate),
                fmt_float(p.quarter_se),
                fmt_float(p.z)
            );
        }
        if let Some(e) = c.exact_error {
            println!("n=2 closed form error = {e:e}");
        }
        checks.push(c);
    }
    let (js, name) = out_file(&a.common, "xcheck-quantum.json");
    write_json(
        &js,
        &serde_json::json!({"checks": checks, "passed": passed}),
    )?;
    println!("{}", if passed { "PASS" } else { "FAIL" });
    Ok(Outcome {
        outputs: vec![name],
        passed,
    })
}

fn cmd_gw(a: &GwArgs) -> Result<Outcome> {
    let s = gw_survival(a.lambda);
    let (js, name) = out_file(&a.common, "gw.json");
    write_json(&js, &s)?;
    println!(
        "lambda = {}  z = {}  residual = {:e}",
        fmt_float(s.lambda),
        fmt_float(s.z),
        s.residual
    );
    Ok(Outcome {
        outputs: vec![name],
        passed: true,
    })
}

#[derive(Default)]
struct Cell {
    fractions: Vec<f64>,
}

fn cmd_report(a: &ReportArgs) -> Result<Outcome> {
    let reader = BufReader::new(File::open(&a.input)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "{} is not a cycle CSV",
            a.input.display()
        )));
    }
    // keyed by (theta, n, lambda) with numeric ordering
    let mut cells: BTreeMap<(u64, usize, u64), (String, String, Cell)> = BTreeMap::new();
    for line in lines {
        let line = line?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(Error::InvalidConfig(format!("bad CSV row: {line}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::InvalidConfig(format!("bad number '{s}'")))
        };
        let n: usize = f[1]
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad n '{}'", f[1])))?;
        let (lambda, theta, frac) = (parse(f[2])?, parse(f[3])?, parse(f[7])?);
        cells
            .entry((theta.to_bits(), n, lambda.to_bits()))
            .or_insert_with(|| (f[2].to_string(), f[3].to_string(), Cell::default()))
            .2
            .fractions
            .push(frac);
    }
    let stem = a
        .input
        .file_stem()
        .map_or("report".into(), |s| s.to_string_lossy().into_owned());
    let name = format!("{stem}_plot.csv");
    let mut w = BufWriter::new(File::create(a.common.out.join(&name))?);
    writeln!(
        w,
        "theta,n,lambda,replicas,mean_c1_over_n,median_c1_over_n,p_c1_ge_0.01n"
    )?;
    println!(
        "{:>8} {:>7} {:>8} {:>8} {:>14} {:>14} {:>14}",
        "theta", "n", "lambda", "replicas", "mean |C1|/n", "median |C1|/n", "P(|C1|>=.01n)"
    );
    for ((_, n, _), (lambda, theta, cell)) in &cells {
        let m = cell.fractions.len() as f64;
        let mean = cell.fractions.iter().sum::<f64>() / m;
        let med = median(&cell.fractions);
        let tail = cell.fractions.iter().filter(|&&x| x >= 0.01).count() as f64 / m;
        writeln!(
            w,
            "{theta},{n},{lambda},{},{},{},{}",
            cell.fractions.len(),
            fmt_float(mean),
            fmt_float(med),
            fmt_float(tail)
        )?;
        println!(
            "{:>8} {:>7} {:>8} {:>8} {:>14} {:>14} {:>14}",
            theta,
            n,
            lambda,
            cell.fractions.len(),
            fmt_float(mean),
            fmt_float(med),
            fmt_float(tail)
        );
    }
    w.flush()?;
    Ok(Outcome {
        outputs: vec![name],
        passed: true,
    })
}
