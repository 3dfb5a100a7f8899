use std::path::PathBuf;

use crate::agents::AgentError;
use crate::calibration::CalibrationError;
use crate::config::ConfigError;
use crate::geo::GeoError;
use crate::ingest::IngestError;
use crate::scheduler::ScheduleError;

/// Any failure surfaced to a caller of the run, calibrate, ingest, or port
/// workflows. The message starts with the module that failed.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("geo: {0}")]
    Geo(#[from] GeoError),
    #[error("agents: {0}")]
    Agents(#[from] AgentError),
    #[error("scheduler: {0}")]
    Schedule(#[from] ScheduleError),
    #[error("ingest: {0}")]
    Ingest(#[from] IngestError),
    #[error("calibration: {0}")]
    Calibration(#[from] CalibrationError),
    #[error("output: cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("usage: {0}")]
    Usage(String),
    #[error("simulation: {0}")]
    Internal(String),
    #[error("port: step \"{step}\" failed: {source}")]
    Port {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schedule(_) | Error::Usage(_) => EXIT_USAGE,
            Error::Agents(AgentError::NoAgents) => EXIT_USAGE,
            Error::Ingest(IngestError::Usage(_)) => EXIT_USAGE,
            Error::Calibration(CalibrationError::LengthMismatch { .. } | CalibrationError::EmptySeries) => {
                EXIT_USAGE
            }
            Error::Geo(_) | Error::Agents(_) | Error::Ingest(_) | Error::Calibration(_) => EXIT_DATA,
            Error::Output { .. } | Error::Internal(_) => EXIT_INTERNAL,
            Error::Port { source, .. } => source.exit_code(),
        }
    }

    pub fn hint(&self) -> Option<String> {
        match self {
            Error::Agents(e) => e.hint().map(str::to_string),
            Error::Geo(GeoError::EmptyBoundary(_)) => {
                Some("the boundary file needs at least one Polygon or MultiPolygon feature".into())
            }
            Error::Geo(GeoError::Io { .. }) | Error::Config(ConfigError::Io { .. }) => {
                Some("check that the path exists; relative paths in a config resolve against its directory".into())
            }
            Error::Config(ConfigError::UnknownKey { .. }) => {
                Some("see the README for the list of config keys".into())
            }
            Error::Port { step, source } => Some(match source.hint() {
                Some(h) => format!("fix the inputs of the \"{step}\" step: {h}"),
                None => format!("fix the inputs of the \"{step}\" step"),
            }),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
