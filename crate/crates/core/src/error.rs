use std::path::PathBuf;

use thiserror::Error;

use crate::sim::SlotRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("SNR vector is not ascending at index {index}: {prev} > {next}")]
    UnsortedGains { index: usize, prev: f64, next: f64 },

    #[error("user {user} has zero bandwidth but transmit power {power}")]
    ZeroBandwidth { user: usize, power: f64 },

    #[error("transmit energy {requested} J exceeds the {available} J available above E_min")]
    InsufficientEnergy { requested: f64, available: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("Lambert W0 is undefined for {0} < -1/e")]
    LambertDomain(f64),

    #[error("channel rejection sampling exceeded {0} draws; the clamp window is inconsistent")]
    RejectionLimit(usize),

    #[error("slot infeasible: minimum power {p_th} W for the rate floors exceeds P_max = {p_max} W")]
    SlotInfeasible { p_th: f64, p_max: f64 },

    #[error("infeasible battery configuration: {0}")]
    InfeasibleBattery(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("monitor violation at slot {}: {violation}", record.t)]
    Monitor {
        violation: String,
        record: Box<SlotRecord>,
    },

    #[error("{failed} of {total} sweep runs failed")]
    RunsFailed { failed: usize, total: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from configuration checks rather than from a
    /// running simulation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InfeasibleBattery(_) | Error::InvalidArgument(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Csv(_))
    }
}
