//! Individual and POI agents, the SEIHRD state machine, and spawning.

mod individual;
mod poi;
mod spawn;
mod state;
mod susceptibility;

pub use individual::{AgentId, Demographics, IndividualAgent, Profession};
pub use poi::{
    default_spread_probability, PoiAgent, PoiCategoryParams, PoiParamTable, CLOSE_QUARTERS_SPREAD,
    LOW_COMMINGLING_SPREAD, POI_TABLE_HEADER,
};
pub use spawn::{assign_professional_pois, spawn_pois, spawn_population};
pub use state::{transition, SeihrdState, TransitionEvent};
pub use susceptibility::{combine as combine_multipliers, SusceptibilityModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error("illegal transition: {state} on {event}")]
    IllegalTransition {
        state: SeihrdState,
        event: TransitionEvent,
    },
    #[error("unknown {dimension} label {label:?} (known: {})", known.join(", "))]
    UnknownLabel {
        dimension: &'static str,
        label: String,
        known: Vec<String>,
    },
    #[error("n_agents is 0")]
    NoAgents,
    #[error("no POIs available")]
    NoPois,
    #[error("no {category:?} POI while hospitalization is enabled")]
    NoHospital { category: String },
    #[error("city map has no neighborhood with positive area")]
    NoNeighborhoods,
    #[error("POI parameter table, line {line}: {message}")]
    PoiTable { line: usize, message: String },
}

impl AgentError {
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            AgentError::NoHospital { .. } => Some(
                "add at least one POI with the hospital category, set poi.hospital_category, \
                 or set hospitalization_probability=0",
            ),
            AgentError::NoPois => Some("check pois_file: no POI inside the boundary was loaded"),
            AgentError::NoAgents => Some("set n_agents to a positive value"),
            _ => None,
        }
    }
}
