mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, RunConfig};

/// Hall-MHD pseudo-spectral solver and Besov-norm diagnostics.
#[derive(Parser, Debug)]
#[command(name = "hmhd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration shared by every simulation subcommand.
#[derive(Args, Debug, Clone)]
struct Common {
    /// `section.key = value` file; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set grid.n=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (same as `output.dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Shorthand for `data.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for `grid.n`.
    #[arg(long)]
    n: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        for kv in &self.set {
            cfg.apply_override(kv)?;
        }
        if let Some(dir) = &self.out {
            cfg.set("output.dir", &dir.to_string_lossy())?;
        }
        if let Some(seed) = self.seed {
            cfg.set("data.seed", &seed.to_string())?;
        }
        if let Some(n) = self.n {
            cfg.set("grid.n", &n.to_string())?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate initial data and write it as an HMH1 snapshot.
    Fields(Common),
    /// Besov norm of one field of a snapshot.
    Besov {
        snapshot: PathBuf,
        /// Regularity; defaults to the critical `3/p − 1`.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Include per-shell contributions.
        #[arg(long)]
        per_shell: bool,
        /// Field within the snapshot: u, b or j.
        #[arg(long, default_value = "u")]
        field: String,
        /// Also write `besov.json` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-march configured data (or a snapshot) and write a trajectory.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Start from this snapshot instead of generated data.
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Picard iteration on configured data; `--threshold` searches the
    /// contraction threshold first.
    Picard {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        threshold: bool,
    },
    /// Global functional bound experiment.
    Bound(Common),
    /// Windowed decay-rate experiment.
    Decay(Common),
    /// Pilot calibration plus held-out stability runs.
    Stability(Common),
    /// Scaling equivariance experiment.
    Scaling(Common),
    /// Check the integral-inequality bootstrap on a series file with X, D, W.
    Gronwall {
        series: PathBuf,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Reduced resolutions and horizons.
        #[arg(long)]
        quick: bool,
    },
}

/// Failure kinds mapped to exit codes.
pub enum Failure {
    /// Verdict failure (exit 1).
    Verdict(String),
    /// Usage, configuration or input error (exit 2).
    Usage(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<hmhd_core::Error> for Failure {
    fn from(e: hmhd_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("HMHD_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure::Usage(format!("HMHD_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(args: impl IntoIterator<Item = std::ffi::OsString>) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Fields(c) => commands::fields(&c.resolve()?),
        Command::Besov { snapshot, s, p, r, per_shell, field, out } => commands::besov(&snapshot, s, p, r, per_shell, &field, out.as_deref()),
        Command::Evolve { common, from } => commands::evolve_cmd(&common.resolve()?, from.as_deref()),
        Command::Picard { common, threshold } => commands::picard(&common.resolve()?, threshold),
        Command::Bound(c) => commands::bound(&c.resolve()?),
        Command::Decay(c) => commands::decay(&c.resolve()?),
        Command::Stability(c) => commands::stability(&c.resolve()?),
        Command::Scaling(c) => commands::scaling(&c.resolve()?),
        Command::Gronwall { series, c, mu, out } => commands::gronwall(&series, c, mu, out.as_deref()),
        Command::Verify { common, quick } => commands::verify(&common.resolve()?, quick),
    });
    match result {
        Ok(()) => 0,
        Err(Failure::Verdict(msg)) => {
            eprintln!("verdict: {msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(std::env::args_os()))
}
