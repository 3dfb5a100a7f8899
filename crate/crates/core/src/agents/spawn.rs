use rand::seq::{index, IndexedRandom};
use rand::Rng;
use rayon::prelude::*;

use super::{
    AgentError, Demographics, IndividualAgent, PoiAgent, PoiParamTable, Profession, SeihrdState,
    default_spread_probability,
};
use crate::config::{Band, ScenarioConfig};
use crate::rng::{RngStreams, Stream};
use crate::scheduler::{DailySchedule, SlotSet, TaskKind};
use crate::{distance, CityMap, PoiLocation};

/// Creates `n_agents` agents. Each agent draws from its own substream, so
/// the population is identical for a given seed regardless of threading.
pub fn spawn_population(
    config: &ScenarioConfig,
    map: &CityMap,
    streams: &RngStreams,
) -> Result<Vec<IndividualAgent>, AgentError> {
    if config.n_agents == 0 {
        return Err(AgentError::NoAgents);
    }
    if map.neighborhoods.is_empty() || !(map.area() > 0.0) {
        return Err(AgentError::NoNeighborhoods);
    }
    let model = config.susceptibility_model();
    let professions: Vec<(Profession, f64)> = config
        .professions
        .iter()
        .map(|(p, c)| (*p, c.share))
        .collect();

    (0..config.n_agents)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.stream(Stream::Spawn, i as u64, 0);
            let infected = rng.random_bool(config.p_initial_infected);
            let vaccinated = rng.random_bool(config.p_initial_vaccinated);
            let profession = professions
                .choose_weighted(&mut rng, |(_, share)| *share)
                .map(|(p, _)| *p)
                .unwrap_or(Profession::Other);
            let demographics = Demographics {
                age_band: pick_band(&config.age, &mut rng),
                gender: pick_band(&config.gender, &mut rng),
                income_band: pick_band(&config.income, &mut rng),
            };
            let home = map.sample_point(&mut rng).ok_or(AgentError::NoNeighborhoods)?;
            let susceptibility =
                model.susceptibility(&demographics, profession, vaccinated, config.social_distancing)?;
            Ok(IndividualAgent {
                id: super::AgentId(i as u32),
                state: if infected { SeihrdState::I } else { SeihrdState::S },
                profession,
                susceptibility,
                home,
                position: home,
                schedule: DailySchedule::default(),
                days_sick: 0,
                vaccinated,
                demographics,
                assigned_poi: None,
            })
        })
        .collect()
}

fn pick_band<R: Rng + ?Sized>(bands: &[Band], rng: &mut R) -> String {
    bands
        .choose_weighted(rng, |b| b.share)
        .map(|b| b.label.clone())
        .unwrap_or_default()
}

/// Selects up to `n_pois` POIs and gives each its activity slots, quota, and
/// spread probability. Hospitals are always kept so hospitalization has a
/// destination; the rest are sampled without replacement. The result is
/// sorted by `poi_id`, matching [`crate::SpatialIndex`] slot order.
///
/// Parameter precedence: config `spread.<category>` override, then the
/// POI's own file properties, then `table`, then the bundled category
/// defaults, then config defaults.
pub fn spawn_pois(
    config: &ScenarioConfig,
    pois: &[PoiLocation],
    table: Option<&PoiParamTable>,
    streams: &RngStreams,
) -> Result<Vec<PoiAgent>, AgentError> {
    if pois.is_empty() {
        return Err(AgentError::NoPois);
    }
    let hospital_cat = config.poi.hospital_category.as_str();
    let (hospitals, others): (Vec<usize>, Vec<usize>) =
        (0..pois.len()).partition(|&i| pois[i].category == hospital_cat);
    if config.epidemic.hospitalization_probability > 0.0 && hospitals.is_empty() {
        return Err(AgentError::NoHospital {
            category: hospital_cat.to_string(),
        });
    }

    let wanted = config.n_pois.min(pois.len());
    let mut rng = streams.stream(Stream::PoiSpawn, 0, 0);
    let mut chosen: Vec<usize> = if hospitals.len() >= wanted {
        index::sample(&mut rng, hospitals.len(), wanted)
            .into_iter()
            .map(|i| hospitals[i])
            .collect()
    } else {
        let rest = wanted - hospitals.len();
        let mut picked = hospitals.clone();
        picked.extend(index::sample(&mut rng, others.len(), rest).into_iter().map(|i| others[i]));
        picked
    };
    chosen.sort_by(|&a, &b| pois[a].poi_id.cmp(&pois[b].poi_id));

    Ok(chosen
        .into_iter()
        .map(|i| {
            let loc = &pois[i];
            let row = table.and_then(|t| t.get(&loc.category));
            let is_hospital = loc.category == hospital_cat;
            let spread = config
                .spread_overrides
                .get(&loc.category)
                .copied()
                .or(loc.spread_probability)
                .or(row.map(|r| r.spread_probability))
                .or_else(|| default_spread_probability(&loc.category))
                .unwrap_or(config.poi.spread_probability);
            let activity_slots = match row {
                Some(r) => r.activity_slots,
                None if is_hospital => SlotSet::all(),
                None => config.poi.activity_slots,
            };
            PoiAgent {
                poi_id: loc.poi_id.clone(),
                category: loc.category.clone(),
                position: loc.position,
                activity_slots,
                occupancy_quota: loc
                    .occupancy
                    .or(row.map(|r| r.occupancy))
                    .unwrap_or(config.poi.occupancy),
                visitors_today: 0,
                spread_probability: spread,
                is_hospital,
                outdoor: config.poi.outdoor_categories.contains(&loc.category),
            }
        })
        .collect())
}

/// Gives every agent whose profession has a work, school, or hospital task a
/// fixed POI of an eligible category, uniformly among those within mobility
/// range of home, falling back to the nearest eligible POI.
pub fn assign_professional_pois(
    agents: &mut [IndividualAgent],
    pois: &[PoiAgent],
    config: &ScenarioConfig,
    streams: &RngStreams,
) {
    let range = config.movement.mobility_range;
    let eligible: Vec<(Profession, Vec<usize>)> = config
        .professions
        .iter()
        .map(|(prof, pc)| {
            let kind = pc.template.professional_kind();
            let slots = match kind {
                None => Vec::new(),
                Some(kind) => (0..pois.len())
                    .filter(|&s| {
                        let p = &pois[s];
                        if pc.poi_categories.is_empty() {
                            match kind {
                                TaskKind::HospitalVisit => p.is_hospital,
                                _ => !p.is_hospital,
                            }
                        } else {
                            pc.poi_categories.contains(&p.category)
                        }
                    })
                    .collect(),
            };
            if kind.is_some() && slots.is_empty() {
                log::warn!("no POI matches the {prof} categories; professional tasks will be skipped");
            }
            (*prof, slots)
        })
        .collect();

    agents.par_iter_mut().for_each(|agent| {
        let Some((_, slots)) = eligible.iter().find(|(p, _)| *p == agent.profession) else {
            return;
        };
        if slots.is_empty() {
            agent.assigned_poi = None;
            return;
        }
        let mut rng = streams.stream(Stream::Assignment, agent.id.0 as u64, 0);
        let mut choice = None;
        for _ in 0..64 {
            let s = slots[rng.random_range(0..slots.len())];
            if distance(agent.home, pois[s].position) <= range {
                choice = Some(s);
                break;
            }
        }
        agent.assigned_poi = choice.or_else(|| {
            slots.iter().copied().min_by(|&a, &b| {
                distance(agent.home, pois[a].position)
                    .total_cmp(&distance(agent.home, pois[b].position))
                    .then(a.cmp(&b))
            })
        });
    });
}
