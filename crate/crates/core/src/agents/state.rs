use std::fmt;

use super::AgentError;

/// Disease compartment of an individual agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeihrdState {
    S,
    E,
    I,
    H,
    R,
    D,
}

impl SeihrdState {
    pub const ALL: [SeihrdState; 6] = [
        SeihrdState::S,
        SeihrdState::E,
        SeihrdState::I,
        SeihrdState::H,
        SeihrdState::R,
        SeihrdState::D,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SeihrdState::S => "S",
            SeihrdState::E => "E",
            SeihrdState::I => "I",
            SeihrdState::H => "H",
            SeihrdState::R => "R",
            SeihrdState::D => "D",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    /// R and D have no outgoing transitions.
    pub fn is_absorbing(&self) -> bool {
        matches!(self, SeihrdState::R | SeihrdState::D)
    }

    /// Has ever been infectious.
    pub fn ever_infectious(&self) -> bool {
        matches!(self, SeihrdState::I | SeihrdState::H | SeihrdState::R | SeihrdState::D)
    }
}

impl fmt::Display for SeihrdState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionEvent {
    Exposed,
    BecameInfectious,
    Hospitalized,
    Recovered,
    Died,
}

impl TransitionEvent {
    pub const ALL: [TransitionEvent; 5] = [
        TransitionEvent::Exposed,
        TransitionEvent::BecameInfectious,
        TransitionEvent::Hospitalized,
        TransitionEvent::Recovered,
        TransitionEvent::Died,
    ];
}

impl fmt::Display for TransitionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TransitionEvent::Exposed => "exposed",
            TransitionEvent::BecameInfectious => "infectious",
            TransitionEvent::Hospitalized => "hospitalized",
            TransitionEvent::Recovered => "recovered",
            TransitionEvent::Died => "died",
        };
        f.write_str(s)
    }
}

/// Successor state for a legal `(state, event)` pair.
pub fn transition(state: SeihrdState, event: TransitionEvent) -> Result<SeihrdState, AgentError> {
    use SeihrdState::*;
    use TransitionEvent::*;
    match (state, event) {
        (S, Exposed) => Ok(E),
        (E, BecameInfectious) => Ok(I),
        (I, Hospitalized) => Ok(H),
        (I, Recovered) | (H, Recovered) => Ok(R),
        (I, Died) | (H, Died) => Ok(D),
        _ => Err(AgentError::IllegalTransition { state, event }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(transition(SeihrdState::S, TransitionEvent::Exposed).unwrap(), SeihrdState::E);
        assert!(transition(SeihrdState::R, TransitionEvent::Exposed).is_err());
        for event in TransitionEvent::ALL {
            assert!(transition(SeihrdState::D, event).is_err());
        }
        let err = transition(SeihrdState::R, TransitionEvent::BecameInfectious).unwrap_err();
        assert_eq!(err.to_string(), "illegal transition: R on infectious");
    }

    #[test]
    fn exactly_seven_legal_pairs() {
        let legal: Vec<_> = SeihrdState::ALL
            .iter()
            .flat_map(|&s| TransitionEvent::ALL.iter().map(move |&e| (s, e)))
            .filter_map(|(s, e)| transition(s, e).ok().map(|t| (s, t)))
            .collect();
        use SeihrdState::*;
        assert_eq!(
            legal,
            vec![(S, E), (E, I), (I, H), (I, R), (I, D), (H, R), (H, D)]
        );
        assert!(legal.iter().all(|(from, _)| !from.is_absorbing()));
    }
}
