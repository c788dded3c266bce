use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfspec::app::{error_json, run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "mfspec", version, about = "Multifractal spectra of Birkhoff averages on subshifts")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact pressure and partition-sum brackets
    Pressure(Flags),
    /// Ball-cover counts, D-hat and the Bowen root
    Balls(Flags),
    /// Lambda-hat and E-hat on a grid of levels
    Spectrum(Flags),
    /// Dimension of a localized level set
    Fdim(Flags),
    /// Fixed points in the asymptotic average on a carpet
    Fixedset(Flags),
    /// Moran-set sampler report
    Moran(Flags),
    /// Randomized invariant suite
    Check(Flags),
}

#[derive(Args)]
struct Flags {
    /// full2, full3, golden or an SFT JSON file
    #[arg(long)]
    model: Option<String>,
    /// standard, ratios:r1,r2,... or a potential JSON file
    #[arg(long)]
    metric: Option<String>,
    /// digit:j or a potential JSON file
    #[arg(long)]
    potential: Option<String>,
    /// Catalog IFS (s0_3x3, s1, s2, times_m(3), brooks15, ...) or an IFS JSON file
    #[arg(long)]
    carpet: Option<String>,
    /// constant:a,..., identity or a target JSON file
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value_t = 21)]
    alpha_grid: usize,
    #[arg(long, default_value_t = 24)]
    n: usize,
    /// A positive radius or `auto`
    #[arg(long, default_value = "auto")]
    eps: String,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Moran block lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1)]
    paths: usize,
    #[arg(long, default_value_t = 500)]
    instances: usize,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, f) = match cli.command {
        Cmd::Pressure(f) => (Command::Pressure, f),
        Cmd::Balls(f) => (Command::Balls, f),
        Cmd::Spectrum(f) => (Command::Spectrum, f),
        Cmd::Fdim(f) => (Command::Fdim, f),
        Cmd::Fixedset(f) => (Command::Fixedset, f),
        Cmd::Moran(f) => (Command::Moran, f),
        Cmd::Check(f) => (Command::Check, f),
    };
    if let Some(t) = f.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let eps = match f.eps.as_str() {
        "auto" => Ok(None),
        s => s.parse::<f64>().map(Some).map_err(|_| mfspec::Error::InvalidModel(format!("bad eps `{s}`"))),
    };
    let result = eps.and_then(|eps| {
        let defaults = RunConfig::default();
        let cfg = RunConfig {
            model: f.model,
            metric: f.metric,
            potential: f.potential,
            carpet: f.carpet,
            target: f.target,
            alpha_grid: f.alpha_grid,
            n: f.n,
            eps,
            k: f.k,
            depth: f.depth,
            seed: f.seed,
            blocks: f.blocks.unwrap_or(defaults.blocks),
            paths: f.paths,
            instances: f.instances,
            out: f.out,
        };
        run(command, &cfg, &mut std::io::stdout().lock())
    });
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}
