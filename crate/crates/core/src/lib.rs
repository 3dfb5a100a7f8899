//! City-scale agent-based epidemic simulation with SEIHRD disease states,
//! POI-mediated transmission, and a hill-climbing calibrator.
//!
//! Geometry, spatial queries, and calibration are generic over the scalar
//! type; the simulation engine runs in `f64`, and the aliases below fix the
//! generic types to it.

pub mod agents;
pub mod calibration;
pub mod config;
pub mod epidemic;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod movement;
pub mod rng;
pub mod scalar;
pub mod scheduler;
pub mod sim;
pub mod synth;
pub mod workflow;

pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use geo::distance;
pub use scalar::Scalar;

pub type Point = geo::Point<f64>;
pub type CityMap = geo::CityMap<f64>;
pub type PoiLocation = geo::PoiLocation<f64>;
pub type SpatialIndex = geo::SpatialIndex<f64>;
pub type LoadedCity = geo::LoadedCity<f64>;
pub type ParamVector = calibration::ParamVector<f64>;
