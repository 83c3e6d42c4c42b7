use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use psifno_cli::config::{Experiment, ExperimentConfig};
use psifno_cli::run;

#[derive(Parser)]
#[command(name = "psifno", version, about = "Pseudo-spectral FNO experiments: convergence studies and property suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (JSON). Without it the built-in defaults are used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Transforms, norms, de-aliased products and Leray projection.
    SpectralCheck(RunArgs),
    /// Darcy solver convergence against a manufactured solution.
    DarcyConverge(RunArgs),
    /// Navier-Stokes temporal convergence on the Taylor-Green vortex.
    NsConverge(RunArgs),
    /// Darcy emulator accuracy and size growth.
    DarcyEmulate(RunArgs),
    /// Navier-Stokes emulator accuracy.
    NsEmulate(RunArgs),
    /// Fourier and inverse Fourier coefficient emulators.
    FtEmulate(RunArgs),
    /// Ψ-FNO to DeepONet conversion.
    DeeponetExport(RunArgs),
    /// Darcy contraction and Navier-Stokes stability.
    PropertySuite(RunArgs),
    /// Print the default config of an experiment kind.
    DefaultConfig {
        kind: String,
    },
    /// Convert a CSV table to whitespace-separated columns for gnuplot.
    Gnuplot {
        csv: PathBuf,
        /// Output file (default: the input with a `.dat` extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(kind: &str, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if cfg.experiment.kind() != kind {
                bail!("config {} is a {} experiment, not {kind}", path.display(), cfg.experiment.kind());
            }
            cfg
        }
        None => ExperimentConfig::new(Experiment::default_for(kind)?, 0),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn execute(kind: &str, args: &RunArgs) -> Result<bool> {
    let cfg = load(kind, args)?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("results").join(kind));
    let result = run(&cfg, &out, args.jobs).with_context(|| format!("{kind} failed"))?;
    fs::write(out.join("config.json"), cfg.to_json() + "\n").context("writing config.json")?;
    for c in &result.report.criteria {
        println!("{}", c.summary_line());
    }
    for f in &result.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(result.report.pass)
}

fn gnuplot(csv_path: &Path, out: Option<&Path>) -> Result<PathBuf> {
    let mut reader = csv::Reader::from_path(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    let mut text = String::from("#");
    for h in reader.headers()? {
        text.push(' ');
        text.push_str(h);
    }
    text.push('\n');
    for rec in reader.records() {
        let rec = rec?;
        let cells: Vec<&str> = rec.iter().map(|c| if c.is_empty() { "NaN" } else { c }).collect();
        text.push_str(&cells.join(" "));
        text.push('\n');
    }
    let dest = out.map(Path::to_path_buf).unwrap_or_else(|| csv_path.with_extension("dat"));
    fs::write(&dest, text).with_context(|| format!("writing {}", dest.display()))?;
    Ok(dest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::SpectralCheck(a) => execute("spectral-check", a),
        Command::DarcyConverge(a) => execute("darcy-converge", a),
        Command::NsConverge(a) => execute("ns-converge", a),
        Command::DarcyEmulate(a) => execute("darcy-emulate", a),
        Command::NsEmulate(a) => execute("ns-emulate", a),
        Command::FtEmulate(a) => execute("ft-emulate", a),
        Command::DeeponetExport(a) => execute("deeponet-export", a),
        Command::PropertySuite(a) => execute("property-suite", a),
        Command::DefaultConfig { kind } => Experiment::default_for(kind)
            .map(|e| {
                println!("{}", ExperimentConfig::new(e, 0).to_json());
                true
            })
            .map_err(Into::into),
        Command::Gnuplot { csv, out } => gnuplot(csv, out.as_deref()).map(|p| {
            eprintln!("wrote {}", p.display());
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
