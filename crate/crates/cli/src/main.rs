//! `spectra`: command-line front end for spectra-core.
//!
//! Exit codes: 0 when the run completes, 2 when the checked property is
//! falsified, 1 on bad input.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] spectra_core::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// `start:stop:count`, inclusive of both ends, `count ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("grid `{s}` is not start:stop:count"));
        };
        let num = |x: &str| -> Result<f64, String> {
            x.parse::<spectra_core::Scalar>()
                .map(|v| v.value())
                .map_err(|e| format!("grid `{s}`: {e}"))
        };
        let count: usize = c.parse().map_err(|_| format!("grid `{s}`: bad count `{c}`"))?;
        if count < 2 {
            return Err(format!("grid `{s}`: count must be at least 2"));
        }
        let (start, stop) = (num(a)?, num(b)?);
        if !(start.is_finite() && stop.is_finite()) {
            return Err(format!("grid `{s}`: endpoints must be finite"));
        }
        Ok(GridSpec { start, stop, count })
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        spectra_core::criteria::linspace(self.start, self.stop, self.count)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spectra",
    version,
    about = "Fourier transforms and spectral checks for fractal measures"
)]
pub struct Cli {
    /// Absolute tolerance for transforms and checks.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Directory for the JSON report and CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 runs everything on the calling thread).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record wall-clock time in the report, which makes it non-reproducible.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MeasureAndLambda {
    #[arg(long)]
    pub measure: PathBuf,
    #[arg(long)]
    pub lambda: PathBuf,
    /// Evaluation grid for h (one-dimensional); defaults to 512 points per
    /// axis over one period of Λ.
    #[arg(long)]
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
pub struct PointsAndLambda {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long)]
    pub lambda: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the transform at points or on a grid.
    MuHat {
        #[arg(long)]
        measure: PathBuf,
        /// A frequency such as `0.5`, `1/3` or `0.5,1/4` for two dimensions.
        #[arg(long = "t")]
        t: Vec<String>,
        #[arg(long)]
        grid: Option<GridSpec>,
    },
    /// Classify Λ and fail unless it is orthogonal.
    Check(MeasureAndLambda),
    /// Classify Λ: not orthogonal, orthogonal, maximal or spectrum candidate.
    Classify(MeasureAndLambda),
    /// Backtracking search for a spectrum of a finite set.
    SearchSpectrum {
        #[arg(long)]
        points: PathBuf,
        #[arg(long = "den", default_value_t = 16)]
        max_denominator: u64,
        #[arg(long, default_value = "0")]
        lo: String,
        #[arg(long, default_value = "1")]
        hi: String,
        #[arg(long)]
        max_nodes: Option<u64>,
        /// Seconds before the search gives up.
        #[arg(long, default_value_t = 60)]
        time_limit: u64,
    },
    /// Test whether (A, Λ) gives a unitary exponential matrix.
    CheckPair(PointsAndLambda),
    /// Check the local-translation group of a spectral pair and recover Λ.
    GroupVerify {
        #[command(flatten)]
        pair: PointsAndLambda,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// Overlap of the pieces τ_b(X) and the non-spectrality certificate.
    Overlap {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Geometry of the pieces τ_b(X).
    Pieces {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Bernoulli convolutions, their exact zeros and the digit spectrum Γ_m.
    #[command(subcommand)]
    Bernoulli(BernoulliCommand),
    /// Bohr means and the embedding of trigonometric polynomials.
    #[command(subcommand)]
    Bohr(BohrCommand),
    /// Overlap estimates for Bernoulli maps λx ± 1 over a range of λ.
    Sweep {
        #[arg(long, default_value = "0.5:0.95:10")]
        lambdas: GridSpec,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        depth: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BernoulliCommand {
    /// Certify an exact zero of the Bernoulli transform.
    Zeros {
        #[arg(long)]
        lambda: String,
        #[arg(long = "t")]
        t: String,
        /// Also certify the same point as a zero for λ = 3/4.
        #[arg(long)]
        inclusion: bool,
    },
    /// The digit set Γ_m and exact orthogonality certificates.
    Gamma {
        #[arg(long, default_value = "1/4")]
        lambda: String,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        check_orthogonality: bool,
    },
    /// h for Γ_m on a grid.
    Probe {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value = "0:1:512")]
        grid: GridSpec,
    },
}

#[derive(Debug, Subcommand)]
pub enum BohrCommand {
    /// Finite-T cube means against their limit.
    Mean {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long = "T", value_delimiter = ',', default_values_t = [10.0, 100.0, 1000.0])]
        horizons: Vec<f64>,
    },
    /// Compare the L²(μ) and Bohr norms of a polynomial on Λ.
    Isometry {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        lambda: PathBuf,
        #[arg(long)]
        poly: PathBuf,
    },
    /// Translate then embed against embed then multiply by a character.
    Intertwine {
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        a: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        assert_eq!(
            "0:1:512".parse::<GridSpec>().unwrap(),
            GridSpec {
                start: 0.0,
                stop: 1.0,
                count: 512
            }
        );
        assert_eq!("0:1/2:3".parse::<GridSpec>().unwrap().points(), vec![0.0, 0.25, 0.5]);
        assert!("0:1:1".parse::<GridSpec>().is_err());
        assert!("0:1".parse::<GridSpec>().is_err());
        assert!("a:1:4".parse::<GridSpec>().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
