//! Error type shared by every module.

use crate::linalg::C64;
use std::fmt;

/// Standing assumptions on the open system and the delay network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Assumption {
    /// The open transfer function is proper rational.
    FiniteDimensional,
    /// The open transfer function is doubled-up and J-unitary.
    PhysicallyRealizable,
    /// `T2`, `T3`, `T4` have singular values bounded away from zero at infinity.
    Proper,
    /// Delays are integer multiples of a common base period.
    Commensurate,
    /// Zeros and poles never share a location.
    ZeroPoleDisjoint,
    /// Every zero and pole is simple with a one-dimensional eigenspace.
    Simple,
}

impl Assumption {
    /// Ordinal used in reports (1 to 6).
    pub fn number(self) -> u8 {
        match self {
            Assumption::FiniteDimensional => 1,
            Assumption::PhysicallyRealizable => 2,
            Assumption::Proper => 3,
            Assumption::Commensurate => 4,
            Assumption::ZeroPoleDisjoint => 5,
            Assumption::Simple => 6,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Assumption::FiniteDimensional => "open system is proper rational",
            Assumption::PhysicallyRealizable => "open system is doubled-up and J-unitary",
            Assumption::Proper => "T2, T3, T4 invertible with singular values bounded away from zero at infinity",
            Assumption::Commensurate => "delays are commensurate",
            Assumption::ZeroPoleDisjoint => "zeros and poles do not coincide",
            Assumption::Simple => "zeros and poles are simple with one-dimensional eigenspaces",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assumption {} ({})", self.number(), self.describe())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: dimension mismatch: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("{op}: z = {z} lies within the guard radius of the pole {pole}")]
    PoleProximity { op: &'static str, z: C64, pole: C64 },

    #[error("{op}: singular matrix: {detail}")]
    Singular { op: &'static str, detail: String },

    #[error("{op}: degenerate input: {detail}")]
    Degenerate { op: &'static str, detail: String },

    #[error("{op}: {assumption} violated: {detail}")]
    AssumptionViolated { op: &'static str, assumption: Assumption, detail: String },

    #[error("{op}: root or pole near the contour at z = {z}; {hint}")]
    NearBoundary { op: &'static str, z: C64, hint: String },

    #[error("{op}: winding number not resolved (rounding residual {residual:.3})")]
    Resolution { op: &'static str, residual: f64 },

    #[error("{op}: iteration did not converge: {detail}")]
    NotConverged { op: &'static str, detail: String },

    #[error("pair_records: {count} unpaired record(s): {detail}; rescan with a shifted window")]
    Unpaired { count: usize, detail: String },

    #[error("{op}: count mismatch: {detail}")]
    CountMismatch { op: &'static str, detail: String },

    #[error("{op}: unsupported case: {detail}")]
    Unsupported { op: &'static str, detail: String },

    #[error("{op}: not physically realizable: {detail}")]
    NotRealizable { op: &'static str, detail: String },

    #[error("{op}: step {step}: {detail}")]
    Removability { op: &'static str, step: usize, detail: String },

    #[error("{op}: {detail}")]
    Correspondence { op: &'static str, detail: String },

    #[error("{op}: {detail}")]
    Periodicity { op: &'static str, detail: String },

    #[error("{op}: invalid input: {detail}")]
    Invalid { op: &'static str, detail: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error reports a violated standing assumption or an invalid input.
    pub fn is_assumption(&self) -> bool {
        matches!(
            self,
            Error::AssumptionViolated { .. } | Error::NotRealizable { .. } | Error::Invalid { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
