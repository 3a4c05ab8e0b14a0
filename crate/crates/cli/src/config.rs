//! Command-line arguments and the validated run configuration.

use clap::{Parser, ValueEnum};
use qcascade_core::cascade::{Degeneracy, Truncation};
use serde::Serialize;
use std::path::PathBuf;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Check the standing assumptions on a network.
    Validate,
    /// Locate zeros and poles in a window.
    Poles,
    /// Scan, factorize and compare against the exact transfer function.
    Factorize,
    /// Re-run the checks on a directory written by `factorize`.
    Verify,
    /// Write the squeezer/beamsplitter/delay preset and factorize it.
    Example,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DegeneracyArg {
    #[value(name = "phase_shift")]
    PhaseShift,
    #[value(name = "perturb")]
    Perturb,
}

fn parse_truncation(s: &str) -> Result<Truncation, String> {
    if s.eq_ignore_ascii_case("closed") {
        return Ok(Truncation::ClosedForm);
    }
    match s.parse::<usize>() {
        Ok(0) => Err("the factor count must be at least 1".into()),
        Ok(k) => Ok(Truncation::Factors(k)),
        Err(_) => Err(format!("expected a factor count or \"closed\", got {s:?}")),
    }
}

/// Cascade factorization of delayed-feedback linear quantum networks.
#[derive(Debug, Parser)]
#[command(name = "qcascade", version)]
pub struct Args {
    #[arg(long, value_enum)]
    pub command: Command,

    /// Network description (JSON or TOML); for `verify`, a directory written by `factorize`.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Half-height of the scan window; defaults to 1.5 pole periods.
    #[arg(long)]
    pub window_im: Option<f64>,

    /// Ladder factors per group, or `closed` for closed-form ladder products.
    #[arg(long, value_parser = parse_truncation, default_value = "closed")]
    pub truncation: Truncation,

    #[arg(long, value_enum, default_value = "perturb")]
    pub degeneracy: DegeneracyArg,

    /// Loop phase used by the phase-shift strategy.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    pub delta: f64,

    /// Eigenvector perturbation used by the perturbation strategy.
    #[arg(long, default_value_t = 1e-3)]
    pub perturb_eps: f64,

    /// Tolerance of the per-factor structural checks.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_structural: f64,

    /// Points of the frequency grid used for comparisons and samples.
    #[arg(long, default_value_t = 401)]
    pub grid_points: usize,

    #[arg(long, default_value = "qcascade-out")]
    pub out: PathBuf,

    /// Seed for the random probe points of the symmetry checks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Everything that determines the outputs of a run. Written to `config.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<String>,
    pub window_im: Option<f64>,
    pub truncation: Truncation,
    pub degeneracy: Degeneracy,
    pub tol_structural: f64,
    pub grid_points: usize,
    pub seed: u64,
    #[serde(skip)]
    pub input_path: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl RunConfig {
    pub fn from_args(a: Args) -> Result<Self, CliError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(CliError::Usage(format!("--{name} must be positive and finite, got {v}")))
            }
        };
        positive("tol-structural", a.tol_structural)?;
        positive("perturb-eps", a.perturb_eps)?;
        if let Some(w) = a.window_im {
            positive("window-im", w)?;
        }
        if !a.delta.is_finite() {
            return Err(CliError::Usage(format!("--delta must be finite, got {}", a.delta)));
        }
        if a.grid_points < 2 {
            return Err(CliError::Usage("--grid-points must be at least 2".into()));
        }
        let needs_input = !matches!(a.command, Command::Example);
        if needs_input && a.input.is_none() {
            return Err(CliError::Usage(format!("--input is required for {:?}", a.command).to_lowercase()));
        }
        let degeneracy = match a.degeneracy {
            DegeneracyArg::PhaseShift => Degeneracy::PhaseShift { delta: a.delta },
            DegeneracyArg::Perturb => Degeneracy::Perturb { eps: a.perturb_eps },
        };
        Ok(Self {
            command: a.command,
            input: a.input.as_ref().map(|p| p.display().to_string()),
            window_im: a.window_im,
            truncation: a.truncation,
            degeneracy,
            tol_structural: a.tol_structural,
            grid_points: a.grid_points,
            seed: a.seed,
            input_path: a.input,
            out: a.out,
        })
    }
}
