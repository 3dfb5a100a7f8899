//! Disease mechanics: POI-mediated exposure, daily compartment progression,
//! hospitalization, and daily tallies.

use rand::Rng;

use crate::agents::{AgentError, AgentId, IndividualAgent, PoiAgent, SeihrdState, TransitionEvent};
use crate::movement::MovementParams;
use crate::{distance, Point, SpatialIndex};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    /// Daily E→I probability (inverse incubation period).
    pub alpha: f64,
    /// Average contact rate, contacts per day. Only used when deriving
    /// spread probabilities from data.
    pub beta: f64,
    /// Daily recovery probability (inverse mean infectious period).
    pub gamma: f64,
    /// Daily death probability for I; scaled by `1 - healthcare_quality` in H.
    pub delta: f64,
    pub hospitalization_probability: f64,
    /// Damps spread at outdoor POIs by `1 - weather_factor`.
    pub weather_factor: f64,
    pub healthcare_quality: f64,
}

impl EpidemicParams {
    pub fn validate(&self) -> Result<(), String> {
        let in_unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} must be in [0,1], got {v}"))
            }
        };
        for (name, v) in [("alpha", self.alpha), ("gamma", self.gamma)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(format!("{name} must be in (0,1], got {v}"));
            }
        }
        in_unit("delta", self.delta)?;
        in_unit("hospitalization_probability", self.hospitalization_probability)?;
        in_unit("weather_factor", self.weather_factor)?;
        in_unit("healthcare_quality", self.healthcare_quality)?;
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(format!("beta must be a non-negative number, got {}", self.beta));
        }
        Ok(())
    }

    /// Death probability for a hospitalized agent.
    pub fn hospital_death_probability(&self) -> f64 {
        self.delta * (1.0 - self.healthcare_quality)
    }
}

pub fn weather_multiplier(poi: &PoiAgent, weather_factor: f64) -> f64 {
    if poi.outdoor {
        1.0 - weather_factor
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Visitor {
    pub agent_id: AgentId,
    pub state: SeihrdState,
    pub susceptibility: f64,
    pub position: Point,
    /// Already counted against today's quota at this POI.
    pub already_admitted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureEvent {
    pub poi_id: String,
    pub agent_id: AgentId,
    pub iteration: u64,
    pub draw: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExposureOutcome {
    pub newly_admitted: Vec<AgentId>,
    pub passed_through: Vec<AgentId>,
    pub exposures: Vec<ExposureEvent>,
}

/// Transmission at one active POI for one iteration.
///
/// Arrivals within the exposure distance are admitted in order until the
/// daily quota is full; later arrivals pass through without exposure. If any
/// admitted visitor is infectious, each susceptible admitted visitor becomes
/// exposed with probability `spread × susceptibility × weather multiplier`.
pub fn exposure_step<R: Rng + ?Sized>(
    poi: &mut PoiAgent,
    arrivals: &[Visitor],
    params: &EpidemicParams,
    movement: &MovementParams,
    iteration: u64,
    rng: &mut R,
) -> ExposureOutcome {
    let mut outcome = ExposureOutcome::default();
    let mut present: Vec<&Visitor> = Vec::with_capacity(arrivals.len());
    for v in arrivals {
        if distance(v.position, poi.position) > movement.exposure_distance {
            continue;
        }
        if v.already_admitted {
            present.push(v);
        } else if poi.try_admit() {
            outcome.newly_admitted.push(v.agent_id);
            present.push(v);
        } else {
            outcome.passed_through.push(v.agent_id);
        }
    }
    if !present.iter().any(|v| v.state == SeihrdState::I) {
        return outcome;
    }
    let base = poi.spread_probability * weather_multiplier(poi, params.weather_factor);
    for v in present.iter().filter(|v| v.state == SeihrdState::S) {
        let draw: f64 = rng.random();
        if draw < base * v.susceptibility {
            outcome.exposures.push(ExposureEvent {
                poi_id: poi.poi_id.clone(),
                agent_id: v.agent_id,
                iteration,
                draw,
            });
        }
    }
    outcome
}

/// One day of disease progression for one agent.
///
/// E becomes I with probability alpha. An I agent dies with probability
/// delta, else is hospitalized, else recovers with gamma, else stays sick
/// one more day. An H agent dies with probability `delta × (1 − P)`, else
/// recovers with gamma, else stays. Returns the transition taken, if any.
pub fn daily_progression<R: Rng + ?Sized>(
    agent: &mut IndividualAgent,
    params: &EpidemicParams,
    rng: &mut R,
) -> Result<Option<TransitionEvent>, AgentError> {
    let event = match agent.state {
        SeihrdState::E => rng
            .random_bool(params.alpha)
            .then_some(TransitionEvent::BecameInfectious),
        SeihrdState::I => {
            if rng.random_bool(params.delta) {
                Some(TransitionEvent::Died)
            } else if rng.random_bool(params.hospitalization_probability) {
                Some(TransitionEvent::Hospitalized)
            } else if rng.random_bool(params.gamma) {
                Some(TransitionEvent::Recovered)
            } else {
                None
            }
        }
        SeihrdState::H => {
            if rng.random_bool(params.hospital_death_probability()) {
                Some(TransitionEvent::Died)
            } else if rng.random_bool(params.gamma) {
                Some(TransitionEvent::Recovered)
            } else {
                None
            }
        }
        SeihrdState::S | SeihrdState::R | SeihrdState::D => None,
    };
    match event {
        Some(e) => {
            agent.apply(e)?;
        }
        None if matches!(agent.state, SeihrdState::I | SeihrdState::H) => agent.days_sick += 1,
        None => {}
    }
    Ok(event)
}

/// Places a newly hospitalized agent at the nearest hospital (smallest id
/// on ties).
pub fn hospitalize(
    agent: &mut IndividualAgent,
    index: &SpatialIndex,
    hospital_category: &str,
) -> Result<(), AgentError> {
    let nearest = index
        .nearest(agent.position, Some(hospital_category), |_| true)
        .ok_or_else(|| AgentError::NoHospital {
            category: hospital_category.to_string(),
        })?;
    agent.position = index.entry(nearest.slot).position;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DailyCounts {
    pub day: u32,
    pub s: usize,
    pub e: usize,
    pub i: usize,
    pub h: usize,
    pub r: usize,
    pub d: usize,
}

impl DailyCounts {
    pub fn total(&self) -> usize {
        self.s + self.e + self.i + self.h + self.r + self.d
    }

    /// Agents that have ever been infectious.
    pub fn cumulative_infected(&self) -> usize {
        self.i + self.h + self.r + self.d
    }

    pub fn get(&self, state: SeihrdState) -> usize {
        match state {
            SeihrdState::S => self.s,
            SeihrdState::E => self.e,
            SeihrdState::I => self.i,
            SeihrdState::H => self.h,
            SeihrdState::R => self.r,
            SeihrdState::D => self.d,
        }
    }
}

pub fn collect_counts(agents: &[IndividualAgent], day: u32) -> DailyCounts {
    let mut c = DailyCounts {
        day,
        ..Default::default()
    };
    for a in agents {
        match a.state {
            SeihrdState::S => c.s += 1,
            SeihrdState::E => c.e += 1,
            SeihrdState::I => c.i += 1,
            SeihrdState::H => c.h += 1,
            SeihrdState::R => c.r += 1,
            SeihrdState::D => c.d += 1,
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::test_support::{agent, poi};
    use crate::agents::Profession;
    use crate::geo::PoiLocation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const MOVE: MovementParams = MovementParams {
        mobility_range: 10_000.0,
        exposure_distance: 100.0,
    };

    fn params() -> EpidemicParams {
        EpidemicParams {
            alpha: 0.2,
            beta: 0.5,
            gamma: 0.1,
            delta: 0.01,
            hospitalization_probability: 0.05,
            weather_factor: 0.25,
            healthcare_quality: 0.5,
        }
    }

    fn visitor(id: u32, state: SeihrdState) -> Visitor {
        Visitor {
            agent_id: AgentId(id),
            state,
            susceptibility: 1.0,
            position: Point::new(0.0, 0.0),
            already_admitted: false,
        }
    }

    /// Central interval of Binomial(n, p) holding at least `mass`, by direct
    /// summation of the pmf.
    fn binomial_interval(n: u64, p: f64, mass: f64) -> (u64, u64) {
        let mut pmf = vec![0.0f64; n as usize + 1];
        for (k, slot) in pmf.iter_mut().enumerate() {
            let k = k as u64;
            let ln_choose: f64 = (1..=k).map(|j| ((n - k + j) as f64 / j as f64).ln()).sum();
            *slot = (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
        }
        let tail = (1.0 - mass) / 2.0;
        let mut acc = 0.0;
        let mut lo = 0;
        while acc + pmf[lo as usize] <= tail {
            acc += pmf[lo as usize];
            lo += 1;
        }
        let mut acc = 0.0;
        let mut hi = n;
        while acc + pmf[hi as usize] <= tail {
            acc += pmf[hi as usize];
            hi -= 1;
        }
        (lo, hi)
    }

    #[test]
    fn binomial_oracle_sanity() {
        // frozen from the summation above, cross-checked against scipy.stats.binom
        assert_eq!(binomial_interval(100, 0.9, 0.999), (79, 98));
    }

    #[test]
    fn high_spread_poi_exposes_about_ninety_percent() {
        let (lo, hi) = binomial_interval(100, 0.9, 0.999);
        let mut p = params();
        p.weather_factor = 0.0;
        for seed in 0..30 {
            let mut venue = poi("v", 0.0, 0.0);
            venue.spread_probability = 0.9;
            let mut arrivals: Vec<Visitor> = (0..100).map(|i| visitor(i, SeihrdState::S)).collect();
            arrivals.push(visitor(100, SeihrdState::I));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = exposure_step(&mut venue, &arrivals, &p, &MOVE, 0, &mut rng);
            let n = out.exposures.len() as u64;
            assert!((lo..=hi).contains(&n), "seed {seed}: {n} outside [{lo},{hi}]");
            assert!(out.exposures.iter().all(|e| e.draw < 0.9));
        }
    }

    #[test]
    fn no_infectious_no_exposure() {
        let mut venue = poi("v", 0.0, 0.0);
        venue.spread_probability = 1.0;
        let arrivals: Vec<Visitor> = (0..50).map(|i| visitor(i, SeihrdState::S)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = exposure_step(&mut venue, &arrivals, &params(), &MOVE, 0, &mut rng);
        assert!(out.exposures.is_empty());
        assert_eq!(out.newly_admitted.len(), 50);
    }

    #[test]
    fn quota_limits_admission() {
        let mut venue = poi("v", 0.0, 0.0);
        venue.occupancy_quota = 10;
        let arrivals: Vec<Visitor> = (0..25).map(|i| visitor(i, SeihrdState::S)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = exposure_step(&mut venue, &arrivals, &params(), &MOVE, 0, &mut rng);
        assert_eq!(out.newly_admitted.len(), 10);
        assert_eq!(out.passed_through.len(), 15);
        assert_eq!(venue.visitors_today, 10);
        // the infectious arrival is past the quota, so nobody is exposed
        let mut venue = poi("v", 0.0, 0.0);
        venue.occupancy_quota = 10;
        venue.spread_probability = 1.0;
        let mut arrivals: Vec<Visitor> = (0..10).map(|i| visitor(i, SeihrdState::S)).collect();
        arrivals.push(visitor(10, SeihrdState::I));
        let out = exposure_step(&mut venue, &arrivals, &params(), &MOVE, 0, &mut rng);
        assert!(out.exposures.is_empty());
        assert_eq!(out.passed_through, vec![AgentId(10)]);
    }

    #[test]
    fn readmission_does_not_count_twice() {
        let mut venue = poi("v", 0.0, 0.0);
        venue.occupancy_quota = 1;
        let mut v = visitor(0, SeihrdState::S);
        v.already_admitted = true;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = exposure_step(&mut venue, &[v, visitor(1, SeihrdState::S)], &params(), &MOVE, 0, &mut rng);
        assert_eq!(out.newly_admitted, vec![AgentId(1)]);
        assert_eq!(venue.visitors_today, 1);
    }

    #[test]
    fn far_visitors_ignored_and_outdoor_damped() {
        let mut venue = poi("v", 0.0, 0.0);
        venue.spread_probability = 1.0;
        venue.outdoor = true;
        let mut p = params();
        p.weather_factor = 1.0;
        let mut far = visitor(2, SeihrdState::S);
        far.position = Point::new(150.0, 0.0);
        let arrivals = [visitor(0, SeihrdState::I), visitor(1, SeihrdState::S), far];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = exposure_step(&mut venue, &arrivals, &p, &MOVE, 0, &mut rng);
        assert!(out.exposures.is_empty());
        assert_eq!(venue.visitors_today, 2);
        assert_eq!(weather_multiplier(&venue, 0.25), 0.75);
        venue.outdoor = false;
        assert_eq!(weather_multiplier(&venue, 0.25), 1.0);
    }

    #[test]
    fn certain_transitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = params();
        p.alpha = 1.0;
        let mut a = agent(0, Profession::Worker);
        a.state = SeihrdState::E;
        daily_progression(&mut a, &p, &mut rng).unwrap();
        assert_eq!(a.state, SeihrdState::I);

        let mut p = params();
        p.delta = 0.0;
        p.gamma = 1.0;
        p.hospitalization_probability = 0.0;
        a.days_sick = 3;
        assert_eq!(daily_progression(&mut a, &p, &mut rng).unwrap(), Some(TransitionEvent::Recovered));
        assert_eq!((a.state, a.days_sick), (SeihrdState::R, 0));
        assert_eq!(daily_progression(&mut a, &p, &mut rng).unwrap(), None);
        assert_eq!(a.state, SeihrdState::R);
    }

    #[test]
    fn full_healthcare_quality_prevents_hospital_deaths() {
        let mut p = params();
        p.delta = 0.5;
        p.healthcare_quality = 1.0;
        p.gamma = 0.01;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut deaths = 0;
        for day in 0..10_000 {
            let mut a = agent(day, Profession::Other);
            a.state = SeihrdState::H;
            if daily_progression(&mut a, &p, &mut rng).unwrap() == Some(TransitionEvent::Died) {
                deaths += 1;
            }
        }
        assert_eq!(deaths, 0);
    }

    #[test]
    fn sick_days_accumulate() {
        let mut p = params();
        p.delta = 0.0;
        p.hospitalization_probability = 0.0;
        p.gamma = 1e-9;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = agent(0, Profession::Other);
        a.state = SeihrdState::I;
        for _ in 0..9 {
            daily_progression(&mut a, &p, &mut rng).unwrap();
        }
        assert_eq!((a.state, a.days_sick), (SeihrdState::I, 9));
    }

    #[test]
    fn hospitalize_picks_nearest() {
        let locs: Vec<PoiLocation<f64>> = [("h1", 500.0), ("h2", 900.0)]
            .iter()
            .map(|(id, x)| PoiLocation {
                poi_id: id.to_string(),
                category: "hospital".into(),
                position: Point::new(*x, 0.0),
                neighborhood_id: "n".into(),
                occupancy: None,
                spread_probability: None,
            })
            .collect();
        let index = SpatialIndex::build(&locs).unwrap();
        let mut a = agent(0, Profession::Other);
        a.state = SeihrdState::H;
        hospitalize(&mut a, &index, "hospital").unwrap();
        assert_eq!(a.position, Point::new(500.0, 0.0));
        hospitalize(&mut a, &index, "hospital").unwrap();
        assert_eq!(a.position, Point::new(500.0, 0.0));
        assert!(hospitalize(&mut a, &index, "clinic").is_err());
    }

    #[test]
    fn counts_conserve() {
        let mut agents: Vec<_> = (0..100).map(|i| agent(i, Profession::Other)).collect();
        assert_eq!(
            collect_counts(&agents, 1),
            DailyCounts { day: 1, s: 100, ..Default::default() }
        );
        for (i, a) in agents.iter_mut().enumerate() {
            a.state = SeihrdState::ALL[i % 6];
        }
        let c = collect_counts(&agents, 2);
        assert_eq!(c.total(), 100);
        assert_eq!(c.cumulative_infected(), c.i + c.h + c.r + c.d);
    }

    #[test]
    fn params_validate() {
        assert!(params().validate().is_ok());
        let mut p = params();
        p.alpha = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.weather_factor = 1.5;
        assert!(p.validate().is_err());
    }
}
