use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use cdkit_cli::config::{ExperimentConfig, Pipeline};
use cdkit_cli::plot::{emit_plot, PlotSpec};
use cdkit_cli::{execute, CliError, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdkit", version, about = "Counterdiabatic, adiabatic and randomized-channel experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counterdiabatic pipeline at each epsilon.
    Cd(RunArgs),
    /// Trotterized adiabatic evolution at each epsilon.
    Aqc(RunArgs),
    /// Randomized channel at each epsilon.
    Qdrift(RunArgs),
    /// Measure each error bound against its parameter choice.
    VerifyBounds(RunArgs),
    /// Epsilon sweep, or a model-parameter sweep from the [sweep] table.
    Sweep(RunArgs),
    /// SVG plot of two columns of a CSV file.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// One value or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to $CDKIT_OUT_DIR/<pipeline>, else ./cdkit-out/<pipeline>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long, default_value = "")]
    title: String,
    /// SVG file to write.
    #[arg(long)]
    out: PathBuf,
}

fn resolve(args: RunArgs) -> Result<(ExperimentConfig, BTreeMap<String, String>)> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut flags = BTreeMap::new();
    if let Some(path) = &args.config {
        flags.insert("config".into(), path.display().to_string());
    }
    if let Some(m) = args.model {
        flags.insert("model".into(), m.clone());
        cfg.model.name = m;
    }
    if let Some(e) = args.eps {
        flags.insert("eps".into(), e.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        cfg.eps = e;
    }
    if let Some(q) = args.q {
        flags.insert("q".into(), q.to_string());
        cfg.q = q;
    }
    if let Some(k) = args.k {
        flags.insert("k".into(), k.to_string());
        cfg.k = k;
    }
    if let Some(s) = args.seed {
        flags.insert("seed".into(), s.to_string());
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        flags.insert("workers".into(), w.to_string());
        cfg.workers = w;
    }
    if let Some(o) = args.out {
        flags.insert("out".into(), o.display().to_string());
        cfg.out_dir = Some(o);
    }
    Ok((cfg, flags))
}

fn out_dir(cfg: &ExperimentConfig, pipeline: Pipeline) -> PathBuf {
    if let Some(dir) = &cfg.out_dir {
        return dir.clone();
    }
    let root = std::env::var_os("CDKIT_OUT_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cdkit-out"));
    root.join(pipeline.name())
}

fn run(cli: Cli) -> Result<u8> {
    let (args, pipeline) = match cli.command {
        Command::Cd(a) => (a, Pipeline::Cd),
        Command::Aqc(a) => (a, Pipeline::Aqc),
        Command::Qdrift(a) => (a, Pipeline::Qdrift),
        Command::VerifyBounds(a) => (a, Pipeline::VerifyBounds),
        Command::Sweep(a) => (a, Pipeline::Sweep),
        Command::Plot(p) => {
            let spec = PlotSpec { x: p.x, y: p.y, log_x: p.log_x, log_y: p.log_y, title: p.title };
            emit_plot(&p.csv, &spec, &p.out)?;
            println!("wrote {}", p.out.display());
            return Ok(0);
        }
    };
    let (cfg, flags) = resolve(args)?;
    let dir = out_dir(&cfg, pipeline);
    let report = execute(&cfg, pipeline, flags)?;
    report.write(&dir)?;
    for line in &report.summary {
        println!("{line}");
    }
    println!("wrote {}", dir.display());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e))
        }
    }
}
