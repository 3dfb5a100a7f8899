use std::fmt;
use std::str::FromStr;

use super::{transition, AgentError, SeihrdState, TransitionEvent};
use crate::scheduler::DailySchedule;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentId(pub u32);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Profession {
    Worker,
    Student,
    Medical,
    Other,
}

impl Profession {
    pub const ALL: [Profession; 4] = [
        Profession::Worker,
        Profession::Student,
        Profession::Medical,
        Profession::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Profession::Worker => "worker",
            Profession::Student => "student",
            Profession::Medical => "medical",
            Profession::Other => "other",
        }
    }
}

impl fmt::Display for Profession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profession {
    type Err = AgentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profession::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| AgentError::UnknownLabel {
                dimension: "profession",
                label: s.to_string(),
                known: Profession::ALL.iter().map(|p| p.as_str().to_string()).collect(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Demographics {
    pub age_band: String,
    pub gender: String,
    pub income_band: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndividualAgent {
    pub id: AgentId,
    pub state: SeihrdState,
    pub profession: Profession,
    pub susceptibility: f64,
    pub home: Point,
    pub position: Point,
    pub schedule: DailySchedule,
    /// Days spent in I or H; zero in every other state.
    pub days_sick: u32,
    pub vaccinated: bool,
    pub demographics: Demographics,
    /// Slot of the POI used for professional tasks.
    pub assigned_poi: Option<usize>,
}

impl IndividualAgent {
    /// Applies a disease transition, keeping `days_sick` consistent.
    pub fn apply(&mut self, event: TransitionEvent) -> Result<SeihrdState, AgentError> {
        let next = transition(self.state, event)?;
        self.state = next;
        if !matches!(next, SeihrdState::I | SeihrdState::H) {
            self.days_sick = 0;
        }
        Ok(next)
    }

    pub fn is_home(&self) -> bool {
        self.position == self.home
    }
}
