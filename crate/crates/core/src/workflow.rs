//! End-to-end workflows built on the simulation: calibration against
//! observed cases, and porting the model to a new city.

use std::fs;
use std::path::{Path, PathBuf};

use crate::calibration::{hill_climb, CalibrationConfig, CalibrationResult, ParamEntry, ScenarioRunner};
use crate::config::{Band, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geo::load_city;
use crate::ingest::{self, RATE_DIMENSIONS};
use crate::rng::{RngStreams, Stream};
use crate::sim::{run_with_city, CityData, RunOptions};
use crate::ParamVector;

/// Runs the full simulation as the black box behind [`hill_climb`]. The
/// severity scale multiplies the initial infected fraction and the
/// replicate index offsets the seed, so every candidate is scored on the
/// same set of seeds.
pub struct SimulationRunner<'a> {
    pub base: &'a ScenarioConfig,
    pub city: &'a CityData,
}

impl SimulationRunner<'_> {
    pub fn config_for(&self, params: &ParamVector, severity: f64, replicate: usize) -> ScenarioConfig {
        let mut c = apply_params(self.base, params);
        c.p_initial_infected = (self.base.p_initial_infected * severity).clamp(0.0, 1.0);
        c.rng_seed = self.base.rng_seed.wrapping_add(replicate as u64);
        c
    }
}

impl ScenarioRunner<f64> for SimulationRunner<'_> {
    fn run(&self, params: &ParamVector, severity: f64, replicate: usize) -> std::result::Result<Vec<f64>, String> {
        let config = self.config_for(params, severity, replicate);
        run_with_city(&config, self.city, &RunOptions::default())
            .map(|out| out.cumulative_infected())
            .map_err(|e| e.to_string())
    }
}

pub fn apply_params(base: &ScenarioConfig, params: &ParamVector) -> ScenarioConfig {
    let mut c = base.clone();
    for e in params.entries() {
        c.set_param(&e.name, e.value);
    }
    c
}

/// The tunable parameters named in `calibration.bounds`, at their current
/// config values.
pub fn initial_params(config: &ScenarioConfig) -> Result<ParamVector> {
    let entries = config
        .calibration
        .bounds
        .iter()
        .map(|(name, b)| {
            let value = config
                .param(name)
                .ok_or_else(|| Error::Usage(format!("{name} is not a tunable parameter")))?;
            Ok(ParamEntry {
                name: name.clone(),
                value,
                lower: b.lower,
                upper: b.upper,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParamVector::new(entries)?)
}

#[derive(Debug, Clone)]
pub struct CalibrationOutcome {
    pub best_config: ScenarioConfig,
    pub result: CalibrationResult<f64>,
}

impl CalibrationOutcome {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("batch,fitness\n");
        for (i, f) in self.result.trace.iter().enumerate() {
            s.push_str(&format!("{i},{f}\n"));
        }
        s
    }

    /// Writes `best_params.txt` (config syntax) and `trace.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        let out = |path: PathBuf, body: String| {
            fs::write(&path, body).map_err(|source| Error::Output {
                path: path.clone(),
                source,
            })?;
            Ok::<_, Error>(path)
        };
        fs::create_dir_all(dir).map_err(|source| Error::Output {
            path: dir.to_path_buf(),
            source,
        })?;
        let best = out(dir.join("best_params.txt"), self.best_config.to_config_string())?;
        let trace = out(dir.join("trace.csv"), self.trace_csv())?;
        Ok((best, trace))
    }
}

/// Fits the tunable parameters of `config` to `observed` daily cumulative
/// infections. `observed` must cover every simulated day; extra days are
/// ignored.
pub fn run_calibration(
    config: &ScenarioConfig,
    city: &CityData,
    observed: &[f64],
    batches: Option<usize>,
) -> Result<CalibrationOutcome> {
    let days = config.days as usize;
    if observed.len() < days {
        return Err(Error::Usage(format!(
            "observed series has {} days but the scenario runs {days}",
            observed.len()
        )));
    }
    let observed = &observed[..days];
    let cal = &config.calibration;
    let settings = CalibrationConfig {
        batches: batches.unwrap_or(cal.batches),
        severity_levels: cal.severity_scales.clone(),
        seeds_per_eval: cal.seeds_per_eval,
        step_fraction: cal.step_fraction,
    };
    let initial = initial_params(config)?;
    let runner = SimulationRunner { base: config, city };
    let mut rng = RngStreams::new(config.rng_seed).stream(Stream::Calibration, 0, 0);
    let result = hill_climb(initial, observed, &runner, &settings, &mut rng)?;
    Ok(CalibrationOutcome {
        best_config: apply_params(config, &result.best),
        result,
    })
}

pub const STEP_BASEMAP: &str = "Change Basemap";
pub const STEP_PARAMETERS: &str = "Modify Parameters";
pub const STEP_MOVEMENT: &str = "Update Movement Data";
pub const STEP_SMOKE: &str = "Smoke Run";

/// Names of the files `port_city` looks for in its data directory.
pub const PATTERNS_FILE: &str = "patterns.csv";
pub const DISTANCING_FILE: &str = "distancing.csv";
pub const CENSUS_FILE: &str = "census.csv";
pub const POI_PARAMS_FILE: &str = "poi_params.csv";

pub fn rates_file(dimension: &str) -> String {
    format!("rates_{dimension}.csv")
}

#[derive(Debug, Clone)]
pub struct PortReport {
    pub config: ScenarioConfig,
    pub config_path: PathBuf,
    pub poi_params_path: PathBuf,
    pub warnings: Vec<String>,
}

fn step<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Port {
        step: name,
        source: Box::new(e),
    })
}

/// Re-targets `base` to a new city.
///
/// 1. Change Basemap: load the boundary and POI files.
/// 2. Modify Parameters: susceptibility multipliers from `rates_<dim>.csv`
///    (at least one of age, gender, income) and band shares from the
///    optional `census.csv`.
/// 3. Update Movement Data: POI count and per-category POI parameters from
///    `patterns.csv`, social distancing from the optional `distancing.csv`.
///
/// The resulting config is checked with a one-day run before it and the
/// POI parameter table are written next to `out`.
pub fn port_city(
    base: &ScenarioConfig,
    boundary: &Path,
    pois: &Path,
    data_dir: &Path,
    out: &Path,
) -> Result<PortReport> {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let mut config = base.clone();
    let mut warnings = Vec::new();

    let loaded = step(STEP_BASEMAP, load_city::<f64>(boundary, pois).map_err(Error::from))?;
    warnings.extend(loaded.report.warnings.iter().cloned());
    if loaded.pois.is_empty() {
        return step(STEP_BASEMAP, Err(crate::agents::AgentError::NoPois.into()));
    }
    config.files.boundary = Some(abs(boundary));
    config.files.pois = Some(abs(pois));

    step(STEP_PARAMETERS, (|| {
        let census = match data_dir.join(CENSUS_FILE) {
            p if p.exists() => {
                let f = fs::File::open(&p).map_err(|source| ingest::IngestError::Io { path: p, source })?;
                ingest::read_census(f)?
            }
            _ => Default::default(),
        };
        let mut found = 0;
        for dim in RATE_DIMENSIONS {
            let path = data_dir.join(rates_file(dim));
            if !path.exists() {
                continue;
            }
            found += 1;
            let table = ingest::parse_health_rates(&path, dim)?;
            warnings.extend(table.warnings);
            let shares = census.get(dim);
            let multipliers = table.value.susceptibility_multipliers();
            let n = multipliers.len() as f64;
            let bands: Vec<Band> = multipliers
                .into_iter()
                .map(|(label, m)| Band {
                    share: shares
                        .and_then(|s| s.iter().find(|(b, _)| *b == label))
                        .map_or(1.0 / n, |(_, s)| *s),
                    label,
                    susceptibility: m,
                })
                .collect();
            match dim {
                "age" => config.age = bands,
                "gender" => config.gender = bands,
                _ => config.income = bands,
            }
        }
        if found == 0 {
            return Err(Error::Usage(format!(
                "no rate table in {}; expected at least one of {}",
                data_dir.display(),
                RATE_DIMENSIONS.map(rates_file).join(", ")
            )));
        }
        Ok(())
    })())?;

    let poi_params_path = abs(&out.with_file_name(POI_PARAMS_FILE));
    let table = step(STEP_MOVEMENT, (|| {
        let patterns = ingest::load_patterns(&data_dir.join(PATTERNS_FILE))?;
        config.n_pois = ingest::derive_poi_count(&patterns, config.n_agents, loaded.pois.len())?;
        let table = ingest::patterns_to_table(&patterns, config.activity_peak_fraction, config.poi.spread_probability);
        warnings.extend(table.warnings);
        let distancing = data_dir.join(DISTANCING_FILE);
        if distancing.exists() {
            let d = ingest::derive_social_distancing(&distancing)?;
            warnings.extend(d.warnings);
            config.social_distancing = d.value;
        }
        Ok(table.value)
    })())?;
    config.files.poi_params = Some(poi_params_path.clone());

    let city = CityData {
        map: loaded.map,
        locations: loaded.pois,
        poi_table: Some(table.clone()),
    };
    let mut smoke = config.clone();
    smoke.days = 1;
    step(STEP_SMOKE, run_with_city(&smoke, &city, &RunOptions::default()).map(|_| ()))?;

    let write = |path: &Path, body: Vec<u8>| {
        fs::write(path, body).map_err(|source| Error::Output {
            path: path.to_path_buf(),
            source,
        })
    };
    if let Some(dir) = poi_params_path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let mut buf = Vec::new();
    table.write(&mut buf)?;
    write(&poi_params_path, buf)?;
    write(out, config.to_config_string().into_bytes())?;
    Ok(PortReport {
        config,
        config_path: out.to_path_buf(),
        poi_params_path,
        warnings,
    })
}
