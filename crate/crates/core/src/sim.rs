//! The simulation loop and its outputs.
//!
//! Each day starts by recording the compartment counts (and optionally a
//! snapshot). Then come 12 iterations of schedule lookup, movement, and
//! exposure. At the rollover the loop draws disease progression, sends
//! agents home, resets POI quotas, and builds the next day's schedules.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::agents::{
    assign_professional_pois, spawn_pois, spawn_population, IndividualAgent, PoiAgent, PoiParamTable,
    SeihrdState, TransitionEvent,
};
use crate::config::ScenarioConfig;
use crate::epidemic::{collect_counts, daily_progression, exposure_step, hospitalize, DailyCounts, Visitor};
use crate::error::{Error, Result};
use crate::geo::load_city;
use crate::movement::{choose_target, end_of_day_return, movement_allowed, step_move, MoveTarget};
use crate::rng::{RngStreams, Stream};
use crate::scheduler::{generate_daily_schedule, poi_active, ProfessionTemplate, SimulationClock};
use crate::{distance, CityMap, PoiLocation, SpatialIndex};

pub const COUNTS_HEADER: &str = "day,S,E,I,H,R,D";

/// The static inputs of a run: map, candidate POI locations, and the
/// optional per-category parameter table. Loaded once and shared by many
/// runs during calibration.
#[derive(Debug, Clone)]
pub struct CityData {
    pub map: CityMap,
    pub locations: Vec<PoiLocation>,
    pub poi_table: Option<PoiParamTable>,
}

impl CityData {
    pub fn load(config: &ScenarioConfig) -> Result<Self> {
        let (Some(boundary), Some(pois)) = (&config.files.boundary, &config.files.pois) else {
            return Err(Error::Usage("config must set boundary_file and pois_file".into()));
        };
        let loaded = load_city(boundary, pois)?;
        for w in &loaded.report.warnings {
            log::warn!("{w}");
        }
        log::info!("{}", loaded.report.lines().join(", "));
        let poi_table = match &config.files.poi_params {
            Some(path) => {
                let f = fs::File::open(path).map_err(|source| {
                    Error::Config(crate::config::ConfigError::Io {
                        path: path.clone(),
                        source,
                    })
                })?;
                Some(PoiParamTable::read(f)?)
            }
            None => None,
        };
        Ok(Self {
            map: loaded.map,
            locations: loaded.pois,
            poi_table,
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads for the parallel sections; `None` uses rayon's
    /// global pool. Results do not depend on this.
    pub workers: Option<usize>,
    pub snapshots: bool,
    /// Check the movement, occupancy, and state-machine rules every
    /// iteration.
    pub audit: bool,
}

/// Rule violations and transition tallies gathered by an audited run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub displacement: u64,
    pub containment: u64,
    pub stationary_hd: u64,
    pub stationary_sick: u64,
    pub not_home_at_rollover: u64,
    pub over_quota: u64,
    pub illegal_transitions: u64,
    pub max_displacement: f64,
    pub max_visitors: u32,
    pub transitions: BTreeMap<(SeihrdState, SeihrdState), u64>,
    /// First few violations in words.
    pub examples: Vec<String>,
}

const MAX_EXAMPLES: usize = 20;

impl AuditReport {
    pub fn movement_violations(&self) -> u64 {
        self.displacement
            + self.containment
            + self.stationary_hd
            + self.stationary_sick
            + self.not_home_at_rollover
    }

    pub fn total_violations(&self) -> u64 {
        self.movement_violations() + self.over_quota + self.illegal_transitions
    }

    fn note(&mut self, msg: impl FnOnce() -> String) {
        if self.examples.len() < MAX_EXAMPLES {
            self.examples.push(msg());
        }
    }

    fn transition(&mut self, from: SeihrdState, to: SeihrdState) {
        *self.transitions.entry((from, to)).or_default() += 1;
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub daily_counts: Vec<DailyCounts>,
    /// `(day, GeoJSON text)` for each day when snapshots are enabled.
    pub snapshots: Vec<(u32, String)>,
    pub manifest: String,
    pub initial_infected: usize,
    pub audit: Option<AuditReport>,
}

impl RunOutput {
    pub fn counts_csv(&self) -> String {
        let mut s = String::from(COUNTS_HEADER);
        s.push('\n');
        for c in &self.daily_counts {
            s.push_str(&format!("{},{},{},{},{},{},{}\n", c.day, c.s, c.e, c.i, c.h, c.r, c.d));
        }
        s
    }

    /// Ever-infectious agents at the start of each day.
    pub fn cumulative_infected(&self) -> Vec<f64> {
        self.daily_counts
            .iter()
            .map(|c| c.cumulative_infected() as f64)
            .collect()
    }

    /// Writes `daily_counts.csv`, `manifest.txt`, and any snapshots into
    /// `dir`. Files written before a failure are removed again.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written: Vec<PathBuf> = Vec::new();
        let result = (|| {
            fs::create_dir_all(dir).map_err(|source| Error::Output {
                path: dir.to_path_buf(),
                source,
            })?;
            let mut put = |name: String, body: &str| {
                let path = dir.join(name);
                fs::write(&path, body).map_err(|source| Error::Output {
                    path: path.clone(),
                    source,
                })?;
                written.push(path);
                Ok::<_, Error>(())
            };
            put("daily_counts.csv".into(), &self.counts_csv())?;
            put("manifest.txt".into(), &self.manifest)?;
            for (day, text) in &self.snapshots {
                put(format!("snapshot_{day}.geojson"), text)?;
            }
            Ok(())
        })();
        match result {
            Ok(()) => Ok(written),
            Err(e) => {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                Err(e)
            }
        }
    }
}

pub fn manifest_text(config: &ScenarioConfig) -> String {
    format!(
        "# cbabm {} manifest; run again with `cbabm run --config manifest.txt`\n{}",
        env!("CARGO_PKG_VERSION"),
        config.to_config_string()
    )
}

/// Loads the city named by `config` and runs it.
pub fn run_simulation(config: &ScenarioConfig, options: &RunOptions) -> Result<RunOutput> {
    let city = CityData::load(config)?;
    run_with_city(config, &city, options)
}

pub fn run_with_city(config: &ScenarioConfig, city: &CityData, options: &RunOptions) -> Result<RunOutput> {
    config.validate()?;
    match options.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
            pool.install(|| Simulation::new(config, city, options)?.run())
        }
        None => Simulation::new(config, city, options)?.run(),
    }
}

struct Simulation<'a> {
    config: &'a ScenarioConfig,
    map: &'a CityMap,
    streams: RngStreams,
    agents: Vec<IndividualAgent>,
    pois: Vec<PoiAgent>,
    index: SpatialIndex,
    /// POI slots that admitted each agent today.
    admitted: Vec<Vec<usize>>,
    templates: BTreeMap<crate::agents::Profession, ProfessionTemplate>,
    audit: Option<AuditReport>,
    snapshots: bool,
}

impl<'a> Simulation<'a> {
    fn new(config: &'a ScenarioConfig, city: &'a CityData, options: &RunOptions) -> Result<Self> {
        let streams = RngStreams::new(config.rng_seed);
        let mut agents = spawn_population(config, &city.map, &streams)?;
        let pois = spawn_pois(config, &city.locations, city.poi_table.as_ref(), &streams)?;
        let selected: Vec<PoiLocation> = pois
            .iter()
            .map(|p| PoiLocation {
                poi_id: p.poi_id.clone(),
                category: p.category.clone(),
                position: p.position,
                neighborhood_id: String::new(),
                occupancy: None,
                spread_probability: None,
            })
            .collect();
        let index = SpatialIndex::build(&selected)?;
        assign_professional_pois(&mut agents, &pois, config, &streams);
        let templates = config
            .professions
            .iter()
            .map(|(p, c)| (*p, c.template.clone()))
            .collect();
        let n = agents.len();
        let mut sim = Self {
            config,
            map: &city.map,
            streams,
            agents,
            pois,
            index,
            admitted: vec![Vec::new(); n],
            templates,
            audit: options.audit.then(AuditReport::default),
            snapshots: options.snapshots,
        };
        sim.regenerate_schedules(0);
        Ok(sim)
    }

    fn regenerate_schedules(&mut self, day: u64) {
        let streams = &self.streams;
        let templates = &self.templates;
        let categories = &self.config.service_categories;
        let empty = ProfessionTemplate::default();
        self.agents.par_iter_mut().for_each(|a| {
            let mut rng = streams.stream(Stream::Schedule, a.id.0 as u64, day);
            let template = templates.get(&a.profession).unwrap_or(&empty);
            a.schedule = generate_daily_schedule(a, template, categories, &mut rng);
        });
    }

    fn run(mut self) -> Result<RunOutput> {
        let initial_infected = self.agents.iter().filter(|a| a.state.ever_infectious()).count();
        let mut daily_counts = Vec::with_capacity(self.config.days as usize);
        let mut snapshots = Vec::new();
        let mut clock = SimulationClock::new();
        for day in 1..=self.config.days {
            daily_counts.push(collect_counts(&self.agents, day));
            if self.snapshots {
                snapshots.push((day, self.snapshot()));
            }
            loop {
                self.iteration(&clock)?;
                if clock.advance() {
                    break;
                }
            }
            self.rollover(u64::from(day))?;
        }
        Ok(RunOutput {
            daily_counts,
            snapshots,
            manifest: manifest_text(self.config),
            initial_infected,
            audit: self.audit,
        })
    }

    fn iteration(&mut self, clock: &SimulationClock) -> Result<()> {
        let params = self.config.movement;
        let streams = &self.streams;
        let index = &self.index;
        let pois = &self.pois;
        let iteration = clock.iteration();

        let before: Vec<crate::Point> = match self.audit {
            Some(_) => self.agents.iter().map(|a| a.position).collect(),
            None => Vec::new(),
        };

        // Movement: every agent decides and moves independently on its own
        // substream, reading POI state as of the previous iteration.
        let arrivals: Vec<Option<usize>> = self
            .agents
            .par_iter_mut()
            .map(|a| {
                let mut rng = streams.stream(Stream::Movement, a.id.0 as u64, iteration);
                let target = choose_target(a, clock, index, pois, &params, &mut rng);
                let goal = match target {
                    MoveTarget::Stay => return None,
                    MoveTarget::Home => a.home,
                    MoveTarget::Poi(slot) => pois[slot].position,
                };
                a.position = step_move(a.position, a.home, goal, &params);
                match target {
                    MoveTarget::Poi(slot) if a.position == pois[slot].position => Some(slot),
                    _ => None,
                }
            })
            .collect();

        if let Some(audit) = self.audit.as_mut() {
            audit_moves(audit, &before, &self.agents, self.map, params.mobility_range, iteration);
        }

        // Exposure at each active POI among the agents that arrived there,
        // in agent-id order.
        let mut by_poi: Vec<Vec<Visitor>> = vec![Vec::new(); self.pois.len()];
        for (a, slot) in self.agents.iter().zip(&arrivals) {
            if let Some(slot) = *slot {
                by_poi[slot].push(Visitor {
                    agent_id: a.id,
                    state: a.state,
                    susceptibility: a.susceptibility,
                    position: a.position,
                    already_admitted: self.admitted[a.id.0 as usize].contains(&slot),
                });
            }
        }
        let epi = &self.config.epidemic;
        let outcomes: Vec<_> = self
            .pois
            .par_iter_mut()
            .zip(by_poi.par_iter())
            .enumerate()
            .filter(|(_, (poi, visitors))| !visitors.is_empty() && poi_active(poi, clock))
            .map(|(slot, (poi, visitors))| {
                let mut rng = streams.stream(Stream::Exposure, slot as u64, iteration);
                (slot, exposure_step(poi, visitors, epi, &params, iteration, &mut rng))
            })
            .collect();

        for (slot, outcome) in outcomes {
            for id in &outcome.newly_admitted {
                self.admitted[id.0 as usize].push(slot);
            }
            for ev in &outcome.exposures {
                let agent = &mut self.agents[ev.agent_id.0 as usize];
                apply_event(agent, TransitionEvent::Exposed, self.audit.as_mut())?;
            }
        }

        if let Some(audit) = self.audit.as_mut() {
            for p in &self.pois {
                audit.max_visitors = audit.max_visitors.max(p.visitors_today);
                if p.visitors_today > p.occupancy_quota {
                    audit.over_quota += 1;
                    audit.note(|| format!("iteration {iteration}: POI {} over quota", p.poi_id));
                }
            }
        }
        Ok(())
    }

    /// End of `day`: progression, hospital placement, return home, quota
    /// reset, and tomorrow's schedules.
    fn rollover(&mut self, day: u64) -> Result<()> {
        let streams = &self.streams;
        let epi = &self.config.epidemic;
        let index = &self.index;
        let hospital = self.config.poi.hospital_category.as_str();
        let events: Vec<(SeihrdState, Option<TransitionEvent>)> = self
            .agents
            .par_iter_mut()
            .map(|a| {
                let from = a.state;
                let mut rng = streams.stream(Stream::Progression, a.id.0 as u64, day);
                let ev = daily_progression(a, epi, &mut rng)?;
                if ev == Some(TransitionEvent::Hospitalized) {
                    hospitalize(a, index, hospital)?;
                }
                Ok((from, ev))
            })
            .collect::<std::result::Result<_, crate::agents::AgentError>>()?;
        if let Some(audit) = self.audit.as_mut() {
            for ((from, ev), a) in events.iter().zip(&self.agents) {
                if ev.is_some() {
                    audit.transition(*from, a.state);
                }
            }
        }

        let before: Vec<crate::Point> = match self.audit {
            Some(_) => self.agents.iter().map(|a| a.position).collect(),
            None => Vec::new(),
        };
        end_of_day_return(&mut self.agents);
        if let Some(audit) = self.audit.as_mut() {
            let range = self.config.movement.mobility_range;
            for (a, prev) in self.agents.iter().zip(&before) {
                let placed = matches!(events[a.id.0 as usize].1, Some(TransitionEvent::Hospitalized));
                if !placed && distance(*prev, a.position) > range {
                    audit.displacement += 1;
                    audit.note(|| format!("day {day}: agent {} return trip exceeds range", a.id));
                }
                if !matches!(a.state, SeihrdState::H | SeihrdState::D) && !a.is_home() {
                    audit.not_home_at_rollover += 1;
                    audit.note(|| format!("day {day}: agent {} not home at rollover", a.id));
                }
                if matches!(a.state, SeihrdState::D) && a.position != *prev {
                    audit.stationary_hd += 1;
                }
            }
        }
        for p in &mut self.pois {
            p.reset_day();
        }
        for a in &mut self.admitted {
            a.clear();
        }
        self.regenerate_schedules(day);
        Ok(())
    }

    fn snapshot(&self) -> String {
        let proj = self.map.projection;
        let features: Vec<serde_json::Value> = self
            .agents
            .iter()
            .map(|a| {
                let (lon, lat) = proj.inverse(a.position.x, a.position.y);
                serde_json::json!({
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [lon, lat]},
                    "properties": {"agent_id": a.id.0, "state": a.state.as_str()},
                })
            })
            .collect();
        serde_json::json!({"type": "FeatureCollection", "features": features}).to_string()
    }
}

fn apply_event(agent: &mut IndividualAgent, event: TransitionEvent, audit: Option<&mut AuditReport>) -> Result<()> {
    let from = agent.state;
    match agent.apply(event) {
        Ok(to) => {
            if let Some(a) = audit {
                a.transition(from, to);
            }
            Ok(())
        }
        Err(e) => {
            if let Some(a) = audit {
                a.illegal_transitions += 1;
            }
            Err(e.into())
        }
    }
}

fn audit_moves(
    audit: &mut AuditReport,
    before: &[crate::Point],
    agents: &[IndividualAgent],
    map: &CityMap,
    range: f64,
    iteration: u64,
) {
    for (a, prev) in agents.iter().zip(before) {
        let d = distance(*prev, a.position);
        audit.max_displacement = audit.max_displacement.max(d);
        if d > range {
            audit.displacement += 1;
            audit.note(|| format!("iteration {iteration}: agent {} moved {d} m", a.id));
        }
        if !map.contains(a.position) {
            audit.containment += 1;
            audit.note(|| format!("iteration {iteration}: agent {} left the city", a.id));
        }
        if d > 0.0 {
            if matches!(a.state, SeihrdState::H | SeihrdState::D) {
                audit.stationary_hd += 1;
                audit.note(|| format!("iteration {iteration}: {} agent {} moved", a.state, a.id));
            } else if !movement_allowed(a) {
                audit.stationary_sick += 1;
                audit.note(|| format!("iteration {iteration}: long-sick agent {} moved", a.id));
            }
        }
    }
}
