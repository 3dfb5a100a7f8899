//! Movement rules: target selection, bounded per-iteration moves with the
//! home waypoint, end-of-day return, and stationarity.

use rand::Rng;

use crate::agents::{IndividualAgent, PoiAgent, SeihrdState};
use crate::scheduler::{poi_active, SimulationClock, TaskTarget};
use crate::{distance, Point, SpatialIndex};

/// Infectious agents stop moving once sick for more than this many days.
pub const STATIONARY_AFTER_DAYS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementParams {
    /// Maximum displacement per iteration, meters.
    pub mobility_range: f64,
    /// Radius around a POI inside which visitors take part in transmission.
    pub exposure_distance: f64,
}

impl MovementParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mobility_range > 0.0 && self.mobility_range.is_finite()) {
            return Err(format!("mobility_range must be > 0, got {}", self.mobility_range));
        }
        if !(self.exposure_distance > 0.0 && self.exposure_distance.is_finite()) {
            return Err(format!("exposure_distance must be > 0, got {}", self.exposure_distance));
        }
        Ok(())
    }
}

pub fn movement_allowed(agent: &IndividualAgent) -> bool {
    match agent.state {
        SeihrdState::D | SeihrdState::H => false,
        SeihrdState::I => agent.days_sick <= STATIONARY_AFTER_DAYS,
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveTarget {
    Poi(usize),
    Home,
    Stay,
}

/// Where the agent heads this iteration.
///
/// Professional tasks go to the assigned POI. Service tasks go to the
/// nearest active, non-full POI of the task's category, breaking exact
/// distance ties uniformly at random. Targets farther than the mobility
/// range from home cannot be reached even through the home waypoint and are
/// dropped in favour of going home.
pub fn choose_target<R: Rng + ?Sized>(
    agent: &IndividualAgent,
    clock: &SimulationClock,
    index: &SpatialIndex,
    pois: &[PoiAgent],
    params: &MovementParams,
    rng: &mut R,
) -> MoveTarget {
    if !movement_allowed(agent) {
        return MoveTarget::Stay;
    }
    let Some(task) = agent.schedule.task_at(clock.clock_hours()) else {
        return MoveTarget::Home;
    };
    let range = params.mobility_range;
    let reachable = |slot: usize| distance(agent.home, pois[slot].position) <= range;
    match &task.target {
        TaskTarget::Home => MoveTarget::Home,
        TaskTarget::Assigned(slot) => {
            if reachable(*slot) {
                MoveTarget::Poi(*slot)
            } else {
                MoveTarget::Home
            }
        }
        TaskTarget::NearestOfCategory(category) => {
            let eligible = |slot: usize| {
                let p = &pois[slot];
                !p.is_hospital && !p.is_full() && poi_active(p, clock) && reachable(slot)
            };
            let tied = index.nearest_tied(agent.position, category.as_deref(), eligible);
            match tied.len() {
                0 => {
                    log::trace!("agent {}: no eligible {:?} POI, task skipped", agent.id, category);
                    MoveTarget::Home
                }
                1 => MoveTarget::Poi(tied[0].slot),
                n => MoveTarget::Poi(tied[rng.random_range(0..n)].slot),
            }
        }
    }
}

/// One iteration of motion toward `target`.
///
/// Within range the agent arrives. Otherwise it goes to its home as the
/// waypoint when home is within range, and stays put when it is already
/// home (the target is then out of reach).
pub fn step_move(current: Point, home: Point, target: Point, params: &MovementParams) -> Point {
    let range = params.mobility_range;
    if distance(current, target) <= range {
        target
    } else if current != home && distance(current, home) <= range {
        home
    } else {
        current
    }
}

/// Sends every agent except H and D back home.
pub fn end_of_day_return(agents: &mut [IndividualAgent]) {
    for a in agents.iter_mut() {
        if !matches!(a.state, SeihrdState::H | SeihrdState::D) {
            a.position = a.home;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::test_support::{agent, poi};
    use crate::agents::Profession;
    use crate::geo::PoiLocation;
    use crate::scheduler::{DailySchedule, Task, TaskKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const PARAMS: MovementParams = MovementParams {
        mobility_range: 10_000.0,
        exposure_distance: 100.0,
    };

    fn p(x: f64) -> Point {
        Point::new(x, 0.0)
    }

    fn index_of(pois: &[PoiAgent]) -> SpatialIndex {
        let locs: Vec<PoiLocation<f64>> = pois
            .iter()
            .map(|q| PoiLocation {
                poi_id: q.poi_id.clone(),
                category: q.category.clone(),
                position: q.position,
                neighborhood_id: "n".into(),
                occupancy: None,
                spread_probability: None,
            })
            .collect();
        SpatialIndex::build(&locs).unwrap()
    }

    fn with_task(mut a: IndividualAgent, kind: TaskKind, target: TaskTarget) -> IndividualAgent {
        a.schedule = DailySchedule {
            tasks: vec![
                Task { kind, start_hours: 8.0, end_hours: 18.0, target },
                Task { kind: TaskKind::ReturnHome, start_hours: 18.0, end_hours: 24.0, target: TaskTarget::Home },
            ],
        };
        a
    }

    #[test]
    fn stationarity_rules() {
        let mut a = agent(0, Profession::Worker);
        assert!(movement_allowed(&a));
        a.state = SeihrdState::D;
        assert!(!movement_allowed(&a));
        a.state = SeihrdState::H;
        assert!(!movement_allowed(&a));
        a.state = SeihrdState::I;
        a.days_sick = 8;
        assert!(!movement_allowed(&a));
        a.days_sick = 7;
        assert!(movement_allowed(&a));
    }

    #[test]
    fn step_move_examples() {
        assert_eq!(step_move(p(0.0), p(0.0), p(5000.0), &PARAMS), p(5000.0));
        // home=0, agent=4000, target=19000: 15000 away, so detour via home
        assert_eq!(step_move(p(4000.0), p(0.0), p(19000.0), &PARAMS), p(0.0));
        // from home the target is still out of reach
        assert_eq!(step_move(p(0.0), p(0.0), p(19000.0), &PARAMS), p(0.0));
        assert_eq!(step_move(p(123.0), p(0.0), p(123.0), &PARAMS), p(123.0));
    }

    #[test]
    fn single_eligible_service_poi() {
        let pois = vec![poi("a", 500.0, 0.0)];
        let index = index_of(&pois);
        let a = with_task(agent(0, Profession::Other), TaskKind::ServiceVisit, TaskTarget::NearestOfCategory(None));
        let clock = SimulationClock::at(5); // 10:00
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(choose_target(&a, &clock, &index, &pois, &PARAMS, &mut rng), MoveTarget::Poi(0));
    }

    #[test]
    fn tie_broken_uniformly() {
        let pois = vec![poi("a", 100.0, 0.0), poi("b", -100.0, 0.0), poi("c", 0.0, 300.0)];
        let index = index_of(&pois);
        let a = with_task(agent(0, Profession::Other), TaskKind::ServiceVisit, TaskTarget::NearestOfCategory(Some("shop".into())));
        let clock = SimulationClock::at(5);
        let trials = 10_000;
        let mut first = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match choose_target(&a, &clock, &index, &pois, &PARAMS, &mut rng) {
                MoveTarget::Poi(0) => first += 1,
                MoveTarget::Poi(1) => {}
                other => panic!("{other:?}"),
            }
        }
        let freq = first as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.03, "{freq}");
    }

    #[test]
    fn full_inactive_and_hospital_pois_skipped() {
        let mut pois = vec![poi("a", 100.0, 0.0), poi("b", 200.0, 0.0), poi("c", 300.0, 0.0), poi("d", 400.0, 0.0)];
        pois[0].occupancy_quota = 0;
        pois[1].activity_slots = "0".parse().unwrap();
        pois[2].is_hospital = true;
        let index = index_of(&pois);
        let a = with_task(agent(0, Profession::Other), TaskKind::ServiceVisit, TaskTarget::NearestOfCategory(None));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(choose_target(&a, &SimulationClock::at(5), &index, &pois, &PARAMS, &mut rng), MoveTarget::Poi(3));
        pois[3].occupancy_quota = 0;
        assert_eq!(choose_target(&a, &SimulationClock::at(5), &index, &pois, &PARAMS, &mut rng), MoveTarget::Home);
    }

    #[test]
    fn work_goes_to_assigned_poi_regardless_of_distance() {
        let pois = vec![poi("near", 10.0, 0.0), poi("work", 9000.0, 0.0)];
        let index = index_of(&pois);
        let a = with_task(agent(0, Profession::Worker), TaskKind::Work, TaskTarget::Assigned(1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(choose_target(&a, &SimulationClock::at(5), &index, &pois, &PARAMS, &mut rng), MoveTarget::Poi(1));
        // before the first task: head home
        assert_eq!(choose_target(&a, &SimulationClock::at(0), &index, &pois, &PARAMS, &mut rng), MoveTarget::Home);
        let mut sick = a.clone();
        sick.state = SeihrdState::I;
        sick.days_sick = 8;
        assert_eq!(choose_target(&sick, &SimulationClock::at(5), &index, &pois, &PARAMS, &mut rng), MoveTarget::Stay);
    }

    #[test]
    fn out_of_range_assignment_dropped() {
        let pois = vec![poi("far", 20_000.0, 0.0)];
        let index = index_of(&pois);
        let a = with_task(agent(0, Profession::Worker), TaskKind::Work, TaskTarget::Assigned(0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(choose_target(&a, &SimulationClock::at(5), &index, &pois, &PARAMS, &mut rng), MoveTarget::Home);
    }

    #[test]
    fn end_of_day_examples() {
        let mut s = agent(0, Profession::Worker);
        s.position = p(500.0);
        let mut h = agent(1, Profession::Worker);
        h.state = SeihrdState::H;
        h.position = p(900.0);
        let mut d = agent(2, Profession::Worker);
        d.state = SeihrdState::D;
        d.position = p(300.0);
        let mut all = vec![s, h, d];
        end_of_day_return(&mut all);
        assert!(all[0].is_home());
        assert_eq!(all[1].position, p(900.0));
        assert_eq!(all[2].position, p(300.0));
    }

    #[test]
    fn params_validate() {
        assert!(PARAMS.validate().is_ok());
        assert!(MovementParams { mobility_range: 0.0, exposure_distance: 1.0 }.validate().is_err());
        assert!(MovementParams { mobility_range: 1.0, exposure_distance: -1.0 }.validate().is_err());
    }
}
