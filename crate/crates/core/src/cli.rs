//! Command-line front end. [`run`] parses arguments, writes results to `out`
//! and diagnostics to `err`, and returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::Error;
use crate::estimators::{EstimatorKind, RichnessEstimate};
use crate::freqtab::{parse_abundances, parse_frequency_table, FrequencyCountTable};
use crate::simlab::{self, curve_csv, subsample_curve, SimulationConfig, SimulationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ALL_FAILED: i32 = 2;

/// Replicate counts below this get a warning from `calibrate-se`.
pub const LOW_REPLICATE_WARNING: usize = 100;

const TOOL: &str = "richness";

#[derive(Debug, Parser)]
#[command(
    name = "richness",
    version,
    about = "Species richness estimation from frequency count ratios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate richness from a frequency table or an abundance list.
    Estimate(EstimateArgs),
    /// Replicated simulation from a negative binomial population.
    Simulate(SimulateArgs),
    /// Compare reported standard errors with the spread of estimates over a grid.
    CalibrateSe(CalibrateArgs),
    /// Estimates under repeated subsampling of an abundance list.
    Rarefy(RarefyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// `j f_j` pairs, one per line.
    Freq,
    /// One abundance per line.
    Abundance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorChoice {
    Nof1,
    Breakaway,
    Chao1,
    All,
}

impl EstimatorChoice {
    fn kinds(self) -> Vec<EstimatorKind> {
        match self {
            Self::Nof1 => vec![EstimatorKind::Nof1],
            Self::Breakaway => vec![EstimatorKind::Breakaway],
            Self::Chao1 => vec![EstimatorKind::Chao1],
            Self::All => EstimatorKind::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridMode {
    /// Element-wise; length-1 lists are broadcast.
    Zip,
    /// Every combination.
    Cross,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "freq")]
    pub format: InputFormat,
    #[arg(long, value_enum, default_value = "all")]
    pub estimator: EstimatorChoice,
    #[arg(long, value_enum, default_value = "json")]
    pub output: OutputFormat,
    /// Decimal places in CSV output.
    #[arg(long, default_value_t = 4)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// True richness.
    #[arg(long = "C", value_name = "C")]
    pub true_richness: u64,
    #[arg(long)]
    pub size: u64,
    #[arg(long)]
    pub prob: f64,
    /// Percentage change applied to the observed singleton count.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rate: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Drawn at random and echoed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.2)]
    pub trim: f64,
    #[arg(long, value_delimiter = ',', default_value = "nof1,breakaway,chao1")]
    pub estimators: Vec<EstimatorKind>,
    /// Report file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the format implied by `--out`.
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
    #[arg(long, default_value_t = 4)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(
        long = "C-list",
        value_name = "C,...",
        value_delimiter = ',',
        required = true
    )]
    pub c_list: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub size_list: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub prob_list: Vec<f64>,
    #[arg(long, value_enum, default_value = "zip")]
    pub grid: GridMode,
    #[arg(long, default_value = "nof1")]
    pub estimator: EstimatorKind,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub rate: f64,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub output: Option<OutputFormat>,
    #[arg(long, default_value_t = 4)]
    pub precision: usize,
}

#[derive(Debug, Args)]
pub struct RarefyArgs {
    /// One abundance per line.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "abundance")]
    pub format: InputFormat,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "nof1,breakaway,chao1")]
    pub estimators: Vec<EstimatorKind>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub precision: usize,
}

/// A failure that maps onto an exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::input(e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(&a, out, err),
        Command::Simulate(a) => cmd_simulate(&a, out, err),
        Command::CalibrateSe(a) => cmd_calibrate_se(&a, out, err),
        Command::Rarefy(a) => cmd_rarefy(&a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn envelope(command: &str, config: Value, warnings: &[String], results: Value) -> Value {
    json!({
        "tool": TOOL,
        "version": crate::VERSION,
        "command": command,
        "config": config,
        "warnings": warnings,
        "results": results,
    })
}

fn write_json(out: &mut dyn Write, value: &Value) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serialisable value");
    writeln!(out, "{text}").map_err(|e| Failure::input(format!("write failed: {e}")))
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(format!("write failed: {e}"))),
    }
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn report_warnings(err: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn resolve_seed(seed: Option<u64>, err: &mut dyn Write) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        let _ = writeln!(err, "seed: {s}");
        s
    })
}

/// Output format from an explicit flag, else the file extension, else JSON.
fn resolve_format(explicit: Option<OutputFormat>, path: Option<&Path>) -> OutputFormat {
    explicit.unwrap_or_else(
        || match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
            Some(_) => OutputFormat::Csv,
            None => OutputFormat::Json,
        },
    )
}

fn load_table(
    a: &EstimateArgs,
) -> std::result::Result<(FrequencyCountTable, Vec<String>), Failure> {
    let text = read_input(&a.input)?;
    let located = |e: Error| Failure::input(format!("{}: {e}", a.input.display()));
    match a.format {
        InputFormat::Freq => {
            let parsed = parse_frequency_table(&text).map_err(located)?;
            Ok((parsed.value, parsed.warnings))
        }
        InputFormat::Abundance => {
            let abundances = parse_abundances(&text).map_err(located)?;
            Ok((
                FrequencyCountTable::from_abundances(&abundances)?,
                Vec::new(),
            ))
        }
    }
}

fn estimate_json(kind: EstimatorKind, result: &crate::Result<RichnessEstimate>) -> Value {
    match result {
        Ok(e) => json!({
            "estimator": kind,
            "status": "ok",
            "C_hat": e.c_hat,
            "se": e.se,
            "f0_hat": e.f0_hat,
            "f1_hat": e.f1_hat,
            "model": e.model.as_ref().map(|m| json!({
                "p": m.p(),
                "q": m.q(),
                "beta": m.beta,
                "alpha": m.alpha,
            })),
            "trace": e.trace.as_ref().map(|t| t.summary()),
            "warnings": e.warnings,
        }),
        Err(err) => json!({
            "estimator": kind,
            "status": "failed",
            "error": err.to_string(),
        }),
    }
}

const ESTIMATE_CSV_HEADER: [&str; 9] = [
    "estimator",
    "C_hat",
    "se",
    "f0_hat",
    "f1_hat",
    "p",
    "q",
    "warnings",
    "error",
];

fn estimate_csv(
    rows: &[(EstimatorKind, crate::Result<RichnessEstimate>)],
    precision: usize,
) -> String {
    let num = |v: f64| format!("{v:.precision$}");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(ESTIMATE_CSV_HEADER)
        .expect("in-memory write");
    for (kind, result) in rows {
        let record: Vec<String> = match result {
            Ok(e) => {
                let (p, q) = e.degrees().map_or(("NA".into(), "NA".into()), |(p, q)| {
                    (p.to_string(), q.to_string())
                });
                vec![
                    kind.to_string(),
                    num(e.c_hat),
                    num(e.se),
                    num(e.f0_hat),
                    e.f1_hat.map_or("NA".into(), num),
                    p,
                    q,
                    e.warnings.join("; "),
                    String::new(),
                ]
            }
            Err(err) => {
                let mut r = vec![kind.to_string()];
                r.extend(std::iter::repeat_n("NA".to_string(), 6));
                r.push(String::new());
                r.push(err.to_string());
                r
            }
        };
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn cmd_estimate(a: &EstimateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let (table, warnings) = load_table(a)?;
    report_warnings(err, &warnings);
    let kinds = a.estimator.kinds();
    let rows: Vec<(EstimatorKind, crate::Result<RichnessEstimate>)> =
        kinds.iter().map(|&k| (k, k.estimate(&table))).collect();
    for (kind, result) in &rows {
        if let Err(e) = result {
            let _ = writeln!(err, "{kind}: {e}");
        }
    }

    match a.output {
        OutputFormat::Json => {
            let config = json!({
                "input": a.input.display().to_string(),
                "format": format!("{:?}", a.format).to_lowercase(),
                "estimators": kinds,
                "observed_richness": table.observed_richness(),
            });
            let results: Vec<Value> = rows.iter().map(|(k, r)| estimate_json(*k, r)).collect();
            write_json(
                out,
                &envelope("estimate", config, &warnings, Value::from(results)),
            )?;
        }
        OutputFormat::Csv => emit(out, None, &estimate_csv(&rows, a.precision))?,
    }

    Ok(if rows.iter().all(|(_, r)| r.is_err()) {
        EXIT_ALL_FAILED
    } else {
        EXIT_OK
    })
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let seed = resolve_seed(a.seed, err);
    let cfg = SimulationConfig {
        true_richness: a.true_richness,
        size: a.size,
        prob: a.prob,
        chimeric_rate: a.rate,
        reps: a.reps,
        seed,
        estimators: a.estimators.clone(),
        trim: a.trim,
    };
    cfg.validate()?;
    let _ = writeln!(
        err,
        "simulate: C={} size={} prob={} rate={} reps={} seed={} trim={} estimators={}",
        cfg.true_richness,
        cfg.size,
        cfg.prob,
        cfg.chimeric_rate,
        cfg.reps,
        cfg.seed,
        cfg.trim,
        cfg.estimators
            .iter()
            .map(|k| k.name())
            .collect::<Vec<_>>()
            .join(",")
    );
    let report = simlab::run_replications(&cfg)?;

    let mut warnings = Vec::new();
    for s in &report.estimators {
        if s.failures > 0 {
            warnings.push(format!(
                "{}: {} of {} replicates failed",
                s.estimator, s.failures, cfg.reps
            ));
        }
    }
    report_warnings(err, &warnings);

    let text = match resolve_format(a.output, a.out.as_deref()) {
        OutputFormat::Csv => report.to_csv(a.precision),
        OutputFormat::Json => json_text(&simulate_envelope(&report, &warnings)),
    };
    emit(out, a.out.as_deref(), &text)?;

    Ok(if report.estimators.iter().all(|s| s.successes == 0) {
        EXIT_ALL_FAILED
    } else {
        EXIT_OK
    })
}

fn simulate_envelope(report: &SimulationReport, warnings: &[String]) -> Value {
    let body = report.to_json();
    envelope(
        "simulate",
        body["config"].clone(),
        warnings,
        body["estimators"].clone(),
    )
}

fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable value");
    s.push('\n');
    s
}

/// `(C, size, prob)` triples for a calibration grid.
fn calibration_grid(a: &CalibrateArgs) -> std::result::Result<Vec<(u64, u64, f64)>, Failure> {
    match a.grid {
        GridMode::Cross => Ok(a
            .c_list
            .iter()
            .flat_map(|&c| {
                a.size_list
                    .iter()
                    .flat_map(move |&n| a.prob_list.iter().map(move |&p| (c, n, p)))
            })
            .collect()),
        GridMode::Zip => {
            let lens = [a.c_list.len(), a.size_list.len(), a.prob_list.len()];
            let len = *lens.iter().max().expect("three lists");
            if lens.iter().any(|&l| l != len && l != 1) {
                return Err(Failure::input(format!(
                    "zipped lists must have equal length or length 1, got {}/{}/{}",
                    lens[0], lens[1], lens[2]
                )));
            }
            let pick = |l: usize, i: usize| if l == 1 { 0 } else { i };
            Ok((0..len)
                .map(|i| {
                    (
                        a.c_list[pick(lens[0], i)],
                        a.size_list[pick(lens[1], i)],
                        a.prob_list[pick(lens[2], i)],
                    )
                })
                .collect())
        }
    }
}

const CALIBRATION_CSV_HEADER: [&str; 9] = [
    "C",
    "size",
    "prob",
    "estimator",
    "median_se",
    "scaled_mad",
    "relative_error_percent",
    "successes",
    "failures",
];

fn cmd_calibrate_se(a: &CalibrateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let grid = calibration_grid(a)?;
    let seed = resolve_seed(a.seed, err);
    let mut warnings = Vec::new();
    if a.reps < LOW_REPLICATE_WARNING {
        warnings.push(format!(
            "only {} replicates per configuration; calibration is unreliable below {LOW_REPLICATE_WARNING}",
            a.reps
        ));
    }

    let mut rows = Vec::new();
    for &(c, size, prob) in &grid {
        let cfg = SimulationConfig {
            true_richness: c,
            size,
            prob,
            chimeric_rate: a.rate,
            reps: a.reps,
            seed,
            estimators: vec![a.estimator],
            trim: 0.2,
        };
        cfg.validate()?;
        let report = simlab::run_replications(&cfg)?;
        let summary = report.estimators[0].clone();
        if summary.calibration.is_none() {
            warnings.push(format!("({c},{size},{prob}): no standard errors available"));
        }
        rows.push((c, size, prob, summary));
    }
    report_warnings(err, &warnings);

    let text = match resolve_format(a.output, a.out.as_deref()) {
        OutputFormat::Csv => {
            let p = a.precision;
            let num = |v: Option<f64>| v.map_or("NA".to_string(), |v| format!("{v:.p$}"));
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CALIBRATION_CSV_HEADER)
                .expect("in-memory write");
            for (c, size, prob, s) in &rows {
                let cal = s.calibration;
                w.write_record([
                    c.to_string(),
                    size.to_string(),
                    prob.to_string(),
                    s.estimator.to_string(),
                    num(cal.map(|c| c.median_se)),
                    num(cal.map(|c| c.mad)),
                    num(cal.and_then(|c| c.relative_error_percent)),
                    s.successes.to_string(),
                    s.failures.to_string(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
        }
        OutputFormat::Json => {
            let results: Vec<Value> = rows
                .iter()
                .map(|(c, size, prob, s)| {
                    json!({
                        "C": c,
                        "size": size,
                        "prob": prob,
                        "estimator": s.estimator,
                        "median_se": s.calibration.map(|c| c.median_se),
                        "scaled_mad": s.calibration.map(|c| c.mad),
                        "relative_error_percent": s.calibration.and_then(|c| c.relative_error_percent),
                        "successes": s.successes,
                        "failures": s.failures,
                    })
                })
                .collect();
            let config = json!({
                "grid": format!("{:?}", a.grid).to_lowercase(),
                "configurations": grid.iter().map(|&(c, n, p)| json!([c, n, p])).collect::<Vec<_>>(),
                "estimator": a.estimator,
                "rate": a.rate,
                "reps": a.reps,
                "seed": seed,
            });
            json_text(&envelope(
                "calibrate-se",
                config,
                &warnings,
                Value::from(results),
            ))
        }
    };
    emit(out, a.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_rarefy(a: &RarefyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    const NEEDS_ABUNDANCES: &str =
        "rarefaction needs abundance input (one abundance per line), not a frequency table";
    if a.format == InputFormat::Freq {
        return Err(Failure::input(NEEDS_ABUNDANCES));
    }
    let text = read_input(&a.input)?;
    let abundances = match parse_abundances(&text) {
        Ok(v) => v,
        Err(Error::Parse { message, .. }) if message.contains("fields") => {
            return Err(Failure::input(format!(
                "{}: {NEEDS_ABUNDANCES}",
                a.input.display()
            )))
        }
        Err(e) => return Err(Failure::input(format!("{}: {e}", a.input.display()))),
    };

    let mut fractions = a.fractions.clone();
    let mut warnings = Vec::new();
    if fractions.windows(2).any(|w| w[0] > w[1]) {
        fractions.sort_by(f64::total_cmp);
        warnings.push("fractions were not ascending and have been sorted".to_string());
    }
    let seed = resolve_seed(a.seed, err);
    report_warnings(err, &warnings);

    let rows = subsample_curve(&abundances, &fractions, a.reps, &a.estimators, seed)?;
    emit(out, a.out.as_deref(), &curve_csv(&rows, a.precision))?;
    Ok(if rows.iter().all(|r| r.mean_c_hat.is_none()) {
        EXIT_ALL_FAILED
    } else {
        EXIT_OK
    })
}
