//! `driftbench`: prequential runs, strategy comparisons and synthetic streams.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use driftgan::eval::{compare_reports, prequential_run, write_drift_log, write_report, RunReport};
use driftgan::strategy::{Strategy, StrategyConfig, StrategyKind};
use driftgan::stream::{self, parse_key_values, FileFormat, StreamSource, StreamSpec, SyntheticSpec};
use driftgan::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "driftbench", version, about, args_override_self = true)]
struct Cli {
    /// Flat key = value file of flag defaults; command-line flags win
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// error, info or debug [default: DRIFTBENCH_LOG, else info]
    #[arg(long, global = true, value_name = "LEVEL")]
    verbosity: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Prequential run of one strategy
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "driftgan")]
        strategy: String,
    },
    /// Run several strategies on one dataset and tabulate accuracies
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated strategies, or "all"
        #[arg(long, default_value = "all")]
        strategies: String,
    },
    /// Write a synthetic recurring-drift stream and its ground truth
    Synth {
        /// Concept letters, one per segment
        #[arg(long, default_value = "A,B,A,B")]
        order: String,
        /// Instances per segment
        #[arg(long, default_value_t = 2000)]
        len: usize,
        #[arg(long, default_value_t = 10)]
        features: usize,
        /// Concept center offset in noise standard deviations
        #[arg(long, default_value_t = 4.0)]
        separation: f64,
        /// Label flip probability
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// CSV or ARFF file (last column is the label), or a synthetic stream config
    #[arg(long, value_name = "PATH")]
    dataset: PathBuf,
    /// Instances per distribution window and initial training set
    #[arg(long, default_value_t = 100)]
    rho: usize,
    /// Vectors that must agree before a drift is signalled
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    /// Vectors per generator input sequence
    #[arg(long, default_value_t = 4)]
    seq_len: usize,
    /// Fraction of stored exemplars replayed on recurrence
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// regular_retrain rebuild interval [default: rho]
    #[arg(long)]
    retrain_interval: Option<usize>,
    /// Truncate the stream [default: no limit]
    #[arg(long)]
    max_instances: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Splices `--config` file entries in front of the command-line flags so
/// that explicit flags override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let text: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut i = 0;
    while i < args.len() {
        if text[i] == "--config" && i + 1 < args.len() {
            path = Some(PathBuf::from(&args[i + 1]));
            i += 2;
            continue;
        }
        if let Some(p) = text[i].strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(args[i].clone());
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let body = fs::read_to_string(&path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    let mut injected = Vec::new();
    for (key, (_, value)) in parse_key_values(&body, &path)? {
        injected.push(OsString::from(format!("--{}", key.replace('_', "-"))));
        injected.push(OsString::from(value));
    }
    let at = rest
        .iter()
        .position(|a| matches!(a.to_str(), Some("run" | "compare" | "synth")))
        .map_or(rest.len(), |p| p + 1);
    rest.splice(at..at, injected);
    Ok(rest)
}

fn init_logging(verbosity: Option<&str>) -> Result<()> {
    let level = verbosity
        .map(str::to_string)
        .or_else(|| std::env::var("DRIFTBENCH_LOG").ok())
        .unwrap_or_else(|| "info".into());
    let filter = match level.to_ascii_lowercase().as_str() {
        "error" => LevelFilter::Error,
        "info" => LevelFilter::Info,
        "debug" => LevelFilter::Debug,
        other => return Err(Error::Usage(format!("unknown log level '{other}' (expected error, info or debug)"))),
    };
    env_logger::Builder::new().filter_level(filter).format_timestamp(None).init();
    Ok(())
}

fn load_stream(common: &Common) -> Result<stream::Stream> {
    let source = match FileFormat::from_path(&common.dataset) {
        Some(format) => StreamSource::File {
            path: common.dataset.clone(),
            format,
        },
        None => {
            let text = fs::read_to_string(&common.dataset).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::Usage(format!("{}: no such dataset", common.dataset.display())),
                _ => Error::Io {
                    path: common.dataset.clone(),
                    source: e,
                },
            })?;
            StreamSource::Synthetic(SyntheticSpec::from_config_str(&text)?)
        }
    };
    stream::load(&StreamSpec {
        source,
        max_instances: common.max_instances,
    })
}

fn strategy_config(common: &Common, kind: StrategyKind) -> Result<StrategyConfig> {
    let mut cfg = StrategyConfig::new(kind);
    cfg.retrain_interval = common.retrain_interval;
    cfg.detector.rho = common.rho;
    cfg.detector.batch_size = common.batch_size;
    cfg.detector.seq_len = common.seq_len;
    cfg.detector.lambda = common.lambda;
    cfg.detector.seed = common.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.into(),
        source: e,
    })
}

fn run_one(common: &Common, s: &stream::Stream, kind: StrategyKind) -> Result<RunReport> {
    let cfg = strategy_config(common, kind)?;
    let max_delay = 3 * cfg.detector.batch_size;
    let mut strategy = Strategy::new(cfg, s.info.features, s.info.labels.len())?;
    info!("{kind} on {} ({} instances)", s.info.name, s.len());
    let report = prequential_run(s, &mut strategy, max_delay)?;
    write_report(&report, common.out.join(format!("report_{kind}.json")))?;
    write_drift_log(&report.drift_events, common.out.join(format!("drifts_{kind}.csv")))?;
    println!(
        "{kind}: accuracy {:.4} over {} instances, {} drifts",
        report.accuracy,
        report.scored,
        report.drift_count()
    );
    Ok(report)
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyKind>> {
    if list == "all" {
        return Ok(StrategyKind::ALL.to_vec());
    }
    list.split(',').map(|s| s.trim().parse()).collect()
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, strategy } => {
            let kind: StrategyKind = strategy.parse()?;
            strategy_config(&common, kind)?;
            let s = load_stream(&common)?;
            create_dir(&common.out)?;
            run_one(&common, &s, kind)?;
        }
        Command::Compare { common, strategies } => {
            let kinds = parse_strategies(&strategies)?;
            for &k in &kinds {
                strategy_config(&common, k)?;
            }
            let s = load_stream(&common)?;
            create_dir(&common.out)?;
            let reports = kinds
                .iter()
                .map(|&k| run_one(&common, &s, k))
                .collect::<Result<Vec<_>>>()?;
            compare_reports(&reports, common.out.join("comparison.csv"))?;
        }
        Command::Synth {
            order,
            len,
            features,
            separation,
            noise,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                features,
                separation,
                noise,
                ..SyntheticSpec::recurring(&order, len, seed)?
            };
            let s = stream::synth_recurring(&spec)?;
            create_dir(&out)?;
            stream::write_csv(&s, out.join("stream.csv"))?;
            let truth = serde_json::to_string_pretty(&s.info.ground_truth)?;
            let truth_path = out.join("ground_truth.json");
            fs::write(&truth_path, truth + "\n").map_err(|e| Error::Io {
                path: truth_path,
                source: e,
            })?;
            let spec_path = out.join("stream.synth");
            fs::write(&spec_path, spec.to_config_string()).map_err(|e| Error::Io {
                path: spec_path,
                source: e,
            })?;
            println!("wrote {} instances to {}", s.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("driftbench: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = init_logging(cli.verbosity.as_deref()) {
        eprintln!("driftbench: {e}");
        return ExitCode::from(1);
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("driftbench: {e}");
            ExitCode::from(if matches!(e, Error::Usage(_)) { 1 } else { 2 })
        }
    }
}
