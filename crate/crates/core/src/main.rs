use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pe_lab::error::Error;
use pe_lab::harness::{exit_code, run, Experiment, ExperimentConfig};

/// Numerical laboratory for renormalized functionals and Ricci flow
/// stability on radial asymptotically hyperbolic metrics.
#[derive(Debug, Parser)]
#[command(name = "pe-lab", version)]
struct Cli {
    experiment: Experiment,
    /// Experiment configuration (TOML or JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension of the manifold.
    #[arg(long)]
    n: Option<usize>,
    /// Number of grid nodes.
    #[arg(long = "N")]
    nodes: Option<usize>,
    /// Truncation radius.
    #[arg(long = "Rmax")]
    r_max: Option<f64>,
    /// Perturbation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn configure(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = cli.experiment;
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(nodes) = cli.nodes {
        cfg.grid.nodes = nodes;
    }
    if let Some(r) = cli.r_max {
        cfg.grid.r_max = r;
    }
    if let Some(seed) = cli.seed {
        cfg.perturbation.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = configure(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(manifest) => {
            println!("{}: {}", if manifest.success { "success" } else { "failure" }, manifest.verdict);
            ExitCode::from(if manifest.success { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
