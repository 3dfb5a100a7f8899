//! Scenario configuration: a flat `key=value` text format with dotted keys.
//!
//! ```text
//! # comment
//! n_agents=10000
//! profession.worker.share=0.45
//! profession.worker.task=work,8,16
//! profession.worker.task=service_visit,16,18
//! spread.restaurant=0.8
//! ```
//!
//! Keys not set in a file keep their defaults. Repeating
//! `profession.<name>.task` builds that profession's template, replacing the
//! default one; every other key may appear once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::{default_spread_probability, Profession, SusceptibilityModel};
use crate::epidemic::EpidemicParams;
use crate::movement::MovementParams;
use crate::scheduler::{ProfessionTemplate, SlotSet, TemplateTask};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("{0}")]
    Invalid(String),
}

/// One demographic band: its population share and susceptibility multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub label: String,
    pub share: f64,
    pub susceptibility: f64,
}

impl Band {
    fn new(label: &str, share: f64, susceptibility: f64) -> Self {
        Self {
            label: label.to_string(),
            share,
            susceptibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfessionConfig {
    pub share: f64,
    pub template: ProfessionTemplate,
    /// Categories eligible as the assigned work/school/hospital POI. Empty
    /// means any non-hospital POI (hospitals for `hospital_visit`).
    pub poi_categories: Vec<String>,
    pub susceptibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiDefaults {
    pub occupancy: u32,
    pub spread_probability: f64,
    pub activity_slots: SlotSet,
    pub hospital_category: String,
    pub outdoor_categories: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputFiles {
    pub boundary: Option<PathBuf>,
    pub pois: Option<PathBuf>,
    pub poi_params: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub batches: usize,
    pub seeds_per_eval: usize,
    /// Multipliers on `p_initial_infected`, one scenario per entry.
    pub severity_scales: Vec<f64>,
    pub step_fraction: f64,
    /// Tunable parameters by name with their search bounds.
    pub bounds: BTreeMap<String, Bounds>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub n_pois: usize,
    pub days: u32,
    pub p_initial_infected: f64,
    pub p_initial_vaccinated: f64,
    pub vaccination_multiplier: f64,
    /// Mobility fraction in [0,1]; 0 is full lockdown.
    pub social_distancing: f64,
    pub rng_seed: u64,
    pub epidemic: EpidemicParams,
    pub movement: MovementParams,
    pub poi: PoiDefaults,
    pub service_categories: Vec<String>,
    pub spread_overrides: BTreeMap<String, f64>,
    pub activity_peak_fraction: f64,
    pub professions: BTreeMap<Profession, ProfessionConfig>,
    pub age: Vec<Band>,
    pub gender: Vec<Band>,
    pub income: Vec<Band>,
    pub files: InputFiles,
    pub calibration: CalibrationSettings,
}

fn template(tasks: &[&str]) -> ProfessionTemplate {
    ProfessionTemplate::new(tasks.iter().map(|t| t.parse().expect("built-in task")).collect())
        .expect("built-in template")
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut professions = BTreeMap::new();
        let mut add = |p, share, tasks: &[&str], cats: &[&str]| {
            professions.insert(
                p,
                ProfessionConfig {
                    share,
                    template: template(tasks),
                    poi_categories: strings(cats),
                    susceptibility: 1.0,
                },
            );
        };
        add(
            Profession::Worker,
            0.45,
            &["work,8,16", "service_visit,16,18"],
            &["office", "retail", "grocery", "restaurant"],
        );
        add(Profession::Student, 0.25, &["school,8,14", "service_visit,14,16"], &["school"]);
        add(Profession::Medical, 0.05, &["work,8,20"], &["hospital"]);
        add(
            Profession::Other,
            0.25,
            &["service_visit,10,12", "service_visit,14,16"],
            &[],
        );

        let service_categories = strings(&["grocery", "restaurant", "retail", "pharmacy", "park"]);
        let mut bounds = BTreeMap::new();
        for (name, lower, upper) in [
            ("alpha", 0.05, 1.0),
            ("gamma", 0.02, 1.0),
            ("delta", 0.0, 0.05),
            ("hospitalization_probability", 0.0, 0.2),
        ] {
            bounds.insert(name.to_string(), Bounds { lower, upper });
        }
        for c in &service_categories {
            bounds.insert(format!("spread.{c}"), Bounds { lower: 0.0, upper: 1.0 });
        }

        Self {
            n_agents: 10_000,
            n_pois: 4_000,
            days: 30,
            p_initial_infected: 0.01,
            p_initial_vaccinated: 0.575,
            vaccination_multiplier: 0.2,
            social_distancing: 1.0,
            rng_seed: 1,
            epidemic: EpidemicParams {
                alpha: 0.2,
                beta: 0.5,
                gamma: 0.1,
                delta: 0.001,
                hospitalization_probability: 0.01,
                weather_factor: 0.25,
                healthcare_quality: 0.5,
            },
            movement: MovementParams {
                mobility_range: 10_000.0,
                exposure_distance: 100.0,
            },
            poi: PoiDefaults {
                occupancy: 100,
                spread_probability: 0.5,
                activity_slots: SlotSet::from_slots(4..=9).expect("static slots"),
                hospital_category: "hospital".to_string(),
                outdoor_categories: strings(&["park"]),
            },
            service_categories,
            spread_overrides: BTreeMap::new(),
            activity_peak_fraction: 0.5,
            professions,
            age: vec![
                Band::new("0-17", 0.21, 0.5),
                Band::new("18-44", 0.40, 1.0),
                Band::new("45-64", 0.25, 1.0),
                Band::new("65-74", 0.08, 1.0),
                Band::new("75+", 0.06, 1.0),
            ],
            gender: vec![Band::new("female", 0.52, 1.0), Band::new("male", 0.48, 1.0)],
            income: vec![
                Band::new("low", 0.4, 1.0),
                Band::new("middle", 0.4, 1.0),
                Band::new("high", 0.2, 1.0),
            ],
            files: InputFiles::default(),
            calibration: CalibrationSettings {
                batches: 250,
                seeds_per_eval: 3,
                severity_scales: vec![0.5, 1.0, 2.0, 4.0],
                step_fraction: 0.1,
                bounds,
            },
        }
    }
}

fn parse_num<V: FromStr>(line: usize, key: &str, v: &str) -> Result<V, ConfigError> {
    v.parse().map_err(|_| ConfigError::Syntax {
        line,
        message: format!("{key}: cannot parse {v:?}"),
    })
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn join_list(items: &[String]) -> String {
    items.join(";")
}

fn band_mut<'a>(bands: &'a mut Vec<Band>, label: &str) -> &'a mut Band {
    match bands.iter().position(|b| b.label == label) {
        Some(i) => &mut bands[i],
        None => {
            bands.push(Band::new(label, 0.0, 1.0));
            bands.last_mut().expect("just pushed")
        }
    }
}

fn resolve(base: Option<&Path>, v: &str) -> PathBuf {
    let p = PathBuf::from(v);
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(|d| {
            if d.as_os_str().is_empty() {
                PathBuf::from(".")
            } else {
                d.to_path_buf()
            }
        });
        let base = base.map(|d| std::path::absolute(&d).unwrap_or(d));
        Self::parse(&text, base.as_deref())
    }

    /// Parses config text over the defaults. Relative file paths are
    /// resolved against `base_dir` when given.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut c = ScenarioConfig::default();
        let mut seen = BTreeSet::new();
        let mut new_tasks: BTreeMap<Profession, Vec<TemplateTask>> = BTreeMap::new();
        // Band lists named in a file replace the default band list.
        let mut touched_bands: BTreeSet<&'static str> = BTreeSet::new();
        let mut bounds_touched = false;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected key=value, got {trimmed:?}"),
                });
            };
            let (key, v) = (key.trim(), value.trim());
            let parts: Vec<&str> = key.split('.').collect();
            let is_task = parts.len() == 3 && parts[0] == "profession" && parts[2] == "task";
            if !is_task && !seen.insert(key.to_string()) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key {key:?}"),
                });
            }
            let unknown = || ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            };
            let syntax = |message: String| ConfigError::Syntax { line, message };

            match parts.as_slice() {
                ["n_agents"] => c.n_agents = parse_num(line, key, v)?,
                ["n_pois"] => c.n_pois = parse_num(line, key, v)?,
                ["days"] => c.days = parse_num(line, key, v)?,
                ["p_initial_infected"] => c.p_initial_infected = parse_num(line, key, v)?,
                ["p_initial_vaccinated"] => c.p_initial_vaccinated = parse_num(line, key, v)?,
                ["vaccination_multiplier"] => c.vaccination_multiplier = parse_num(line, key, v)?,
                ["social_distancing"] => c.social_distancing = parse_num(line, key, v)?,
                ["rng_seed"] => c.rng_seed = parse_num(line, key, v)?,
                ["alpha"] => c.epidemic.alpha = parse_num(line, key, v)?,
                ["beta"] => c.epidemic.beta = parse_num(line, key, v)?,
                ["gamma"] => c.epidemic.gamma = parse_num(line, key, v)?,
                ["delta"] => c.epidemic.delta = parse_num(line, key, v)?,
                ["hospitalization_probability"] => {
                    c.epidemic.hospitalization_probability = parse_num(line, key, v)?
                }
                ["weather_factor"] => c.epidemic.weather_factor = parse_num(line, key, v)?,
                ["healthcare_quality"] => c.epidemic.healthcare_quality = parse_num(line, key, v)?,
                ["exposure_distance"] => c.movement.exposure_distance = parse_num(line, key, v)?,
                ["mobility_range"] => c.movement.mobility_range = parse_num(line, key, v)?,
                ["activity_peak_fraction"] => c.activity_peak_fraction = parse_num(line, key, v)?,
                ["boundary_file"] => c.files.boundary = Some(resolve(base_dir, v)),
                ["pois_file"] => c.files.pois = Some(resolve(base_dir, v)),
                ["poi_params_file"] => c.files.poi_params = Some(resolve(base_dir, v)),
                ["poi", "occupancy"] => c.poi.occupancy = parse_num(line, key, v)?,
                ["poi", "spread_probability"] => c.poi.spread_probability = parse_num(line, key, v)?,
                ["poi", "activity_slots"] => {
                    c.poi.activity_slots = v.parse().map_err(|e| syntax(format!("{key}: {e}")))?
                }
                ["poi", "hospital_category"] => c.poi.hospital_category = v.to_string(),
                ["poi", "outdoor_categories"] => c.poi.outdoor_categories = parse_list(v),
                ["schedule", "service_categories"] => c.service_categories = parse_list(v),
                ["spread", cat] => {
                    c.spread_overrides.insert(cat.to_string(), parse_num(line, key, v)?);
                }
                ["profession", name, field] => {
                    let prof: Profession = name.parse().map_err(|_| unknown())?;
                    let entry = c.professions.entry(prof).or_insert_with(|| ProfessionConfig {
                        share: 0.0,
                        template: ProfessionTemplate::default(),
                        poi_categories: Vec::new(),
                        susceptibility: 1.0,
                    });
                    match *field {
                        "share" => entry.share = parse_num(line, key, v)?,
                        "poi_categories" => entry.poi_categories = parse_list(v),
                        "susceptibility" => entry.susceptibility = parse_num(line, key, v)?,
                        "task" => {
                            let t: TemplateTask =
                                v.parse().map_err(|e| syntax(format!("{key}: {e}")))?;
                            new_tasks.entry(prof).or_default().push(t);
                        }
                        "tasks" if v == "none" => {
                            new_tasks.entry(prof).or_default();
                        }
                        _ => return Err(unknown()),
                    }
                }
                [section @ ("population" | "susceptibility"), dim, label] => {
                    let (bands, dim_name) = match *dim {
                        "age" => (&mut c.age, "age"),
                        "gender" => (&mut c.gender, "gender"),
                        "income" => (&mut c.income, "income"),
                        _ => return Err(unknown()),
                    };
                    if touched_bands.insert(dim_name) {
                        bands.clear();
                    }
                    let value: f64 = parse_num(line, key, v)?;
                    let band = band_mut(bands, label);
                    if *section == "population" {
                        band.share = value;
                    } else {
                        band.susceptibility = value;
                    }
                }
                ["calibration", "batches"] => c.calibration.batches = parse_num(line, key, v)?,
                ["calibration", "seeds_per_eval"] => {
                    c.calibration.seeds_per_eval = parse_num(line, key, v)?
                }
                ["calibration", "step_fraction"] => {
                    c.calibration.step_fraction = parse_num(line, key, v)?
                }
                ["calibration", "severity_scales"] => {
                    c.calibration.severity_scales = parse_list(v)
                        .iter()
                        .map(|s| parse_num(line, key, s))
                        .collect::<Result<_, _>>()?
                }
                ["calibration", "bounds", rest @ ..] if !rest.is_empty() => {
                    if !bounds_touched {
                        c.calibration.bounds.clear();
                        bounds_touched = true;
                    }
                    let name = rest.join(".");
                    let (lo, hi) = v
                        .split_once(',')
                        .ok_or_else(|| syntax(format!("{key}: expected lower,upper")))?;
                    c.calibration.bounds.insert(
                        name,
                        Bounds {
                            lower: parse_num(line, key, lo.trim())?,
                            upper: parse_num(line, key, hi.trim())?,
                        },
                    );
                }
                _ => return Err(unknown()),
            }
        }

        for (prof, tasks) in new_tasks {
            let template = ProfessionTemplate::new(tasks)
                .map_err(|e| ConfigError::Invalid(format!("profession.{prof}: {e}")))?;
            c.professions.get_mut(&prof).expect("entry created on first key").template = template;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                invalid(format!("{name} must be in [0,1], got {v}"))
            }
        };
        unit("p_initial_infected", self.p_initial_infected)?;
        unit("p_initial_vaccinated", self.p_initial_vaccinated)?;
        unit("vaccination_multiplier", self.vaccination_multiplier)?;
        unit("social_distancing", self.social_distancing)?;
        unit("poi.spread_probability", self.poi.spread_probability)?;
        unit("activity_peak_fraction", self.activity_peak_fraction)?;
        for (cat, p) in &self.spread_overrides {
            unit(&format!("spread.{cat}"), *p)?;
        }
        if self.days < 1 {
            return invalid("days must be at least 1".into());
        }
        self.epidemic.validate().map_err(ConfigError::Invalid)?;
        self.movement.validate().map_err(ConfigError::Invalid)?;
        if self.poi.hospital_category.is_empty() {
            return invalid("poi.hospital_category is empty".into());
        }
        if self.professions.values().map(|p| p.share).sum::<f64>() <= 0.0 {
            return invalid("profession shares must sum to a positive value".into());
        }
        for (prof, pc) in &self.professions {
            if !(pc.share >= 0.0 && pc.susceptibility >= 0.0) {
                return invalid(format!("profession.{prof}: share and susceptibility must be >= 0"));
            }
        }
        for (dim, bands) in [("age", &self.age), ("gender", &self.gender), ("income", &self.income)] {
            if bands.is_empty() || bands.iter().map(|b| b.share).sum::<f64>() <= 0.0 {
                return invalid(format!("population.{dim}: shares must sum to a positive value"));
            }
            if let Some(b) = bands.iter().find(|b| !(b.share >= 0.0 && b.susceptibility >= 0.0)) {
                return invalid(format!("{dim} band {:?}: negative share or susceptibility", b.label));
            }
        }
        let cal = &self.calibration;
        if cal.severity_scales.is_empty() {
            return invalid("calibration.severity_scales must not be empty".into());
        }
        if cal.seeds_per_eval == 0 {
            return invalid("calibration.seeds_per_eval must be at least 1".into());
        }
        if !(cal.step_fraction >= 0.0 && cal.step_fraction <= 1.0) {
            return invalid(format!("calibration.step_fraction must be in [0,1], got {}", cal.step_fraction));
        }
        for (name, b) in &cal.bounds {
            if !(b.lower <= b.upper) {
                return invalid(format!("calibration.bounds.{name}: lower exceeds upper"));
            }
            if self.param(name).is_none() {
                return invalid(format!("calibration.bounds.{name}: not a tunable parameter"));
            }
        }
        Ok(())
    }

    pub fn susceptibility_model(&self) -> SusceptibilityModel {
        let table = |bands: &[Band]| {
            bands
                .iter()
                .map(|b| (b.label.clone(), b.susceptibility))
                .collect::<BTreeMap<_, _>>()
        };
        SusceptibilityModel {
            age: table(&self.age),
            gender: table(&self.gender),
            income: table(&self.income),
            profession: self
                .professions
                .iter()
                .map(|(p, c)| (*p, c.susceptibility))
                .collect(),
            vaccinated_multiplier: self.vaccination_multiplier,
        }
    }

    /// Spread probability used for `category` absent a per-POI value or a
    /// table row.
    pub fn category_spread(&self, category: &str) -> f64 {
        self.spread_overrides
            .get(category)
            .copied()
            .or_else(|| default_spread_probability(category))
            .unwrap_or(self.poi.spread_probability)
    }

    /// Reads a tunable parameter by name.
    pub fn param(&self, name: &str) -> Option<f64> {
        let e = &self.epidemic;
        Some(match name {
            "alpha" => e.alpha,
            "beta" => e.beta,
            "gamma" => e.gamma,
            "delta" => e.delta,
            "hospitalization_probability" => e.hospitalization_probability,
            "weather_factor" => e.weather_factor,
            "healthcare_quality" => e.healthcare_quality,
            "exposure_distance" => self.movement.exposure_distance,
            "mobility_range" => self.movement.mobility_range,
            "social_distancing" => self.social_distancing,
            "vaccination_multiplier" => self.vaccination_multiplier,
            _ => return name.strip_prefix("spread.").map(|cat| self.category_spread(cat)),
        })
    }

    /// Writes a tunable parameter by name; false when the name is unknown.
    pub fn set_param(&mut self, name: &str, value: f64) -> bool {
        let e = &mut self.epidemic;
        let slot = match name {
            "alpha" => &mut e.alpha,
            "beta" => &mut e.beta,
            "gamma" => &mut e.gamma,
            "delta" => &mut e.delta,
            "hospitalization_probability" => &mut e.hospitalization_probability,
            "weather_factor" => &mut e.weather_factor,
            "healthcare_quality" => &mut e.healthcare_quality,
            "exposure_distance" => &mut self.movement.exposure_distance,
            "mobility_range" => &mut self.movement.mobility_range,
            "social_distancing" => &mut self.social_distancing,
            "vaccination_multiplier" => &mut self.vaccination_multiplier,
            _ => match name.strip_prefix("spread.") {
                Some(cat) if !cat.is_empty() => {
                    self.spread_overrides.insert(cat.to_string(), value);
                    return true;
                }
                _ => return false,
            },
        };
        *slot = value;
        true
    }

    /// Serializes every key. Parsing the result yields an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("n_agents", &self.n_agents);
        kv("n_pois", &self.n_pois);
        kv("days", &self.days);
        kv("rng_seed", &self.rng_seed);
        kv("p_initial_infected", &self.p_initial_infected);
        kv("p_initial_vaccinated", &self.p_initial_vaccinated);
        kv("vaccination_multiplier", &self.vaccination_multiplier);
        kv("social_distancing", &self.social_distancing);
        let e = &self.epidemic;
        kv("alpha", &e.alpha);
        kv("beta", &e.beta);
        kv("gamma", &e.gamma);
        kv("delta", &e.delta);
        kv("hospitalization_probability", &e.hospitalization_probability);
        kv("weather_factor", &e.weather_factor);
        kv("healthcare_quality", &e.healthcare_quality);
        kv("exposure_distance", &self.movement.exposure_distance);
        kv("mobility_range", &self.movement.mobility_range);
        kv("activity_peak_fraction", &self.activity_peak_fraction);
        for (key, path) in [
            ("boundary_file", &self.files.boundary),
            ("pois_file", &self.files.pois),
            ("poi_params_file", &self.files.poi_params),
        ] {
            if let Some(p) = path {
                kv(key, &p.display());
            }
        }
        kv("poi.occupancy", &self.poi.occupancy);
        kv("poi.spread_probability", &self.poi.spread_probability);
        kv("poi.activity_slots", &self.poi.activity_slots);
        kv("poi.hospital_category", &self.poi.hospital_category);
        kv("poi.outdoor_categories", &join_list(&self.poi.outdoor_categories));
        kv("schedule.service_categories", &join_list(&self.service_categories));
        for (cat, p) in &self.spread_overrides {
            kv(&format!("spread.{cat}"), p);
        }
        for (prof, pc) in &self.professions {
            kv(&format!("profession.{prof}.share"), &pc.share);
            kv(&format!("profession.{prof}.susceptibility"), &pc.susceptibility);
            kv(&format!("profession.{prof}.poi_categories"), &join_list(&pc.poi_categories));
            if pc.template.tasks().is_empty() {
                kv(&format!("profession.{prof}.tasks"), &"none");
            }
            for t in pc.template.tasks() {
                kv(&format!("profession.{prof}.task"), t);
            }
        }
        for (dim, bands) in [("age", &self.age), ("gender", &self.gender), ("income", &self.income)] {
            for b in bands {
                kv(&format!("population.{dim}.{}", b.label), &b.share);
                kv(&format!("susceptibility.{dim}.{}", b.label), &b.susceptibility);
            }
        }
        let cal = &self.calibration;
        kv("calibration.batches", &cal.batches);
        kv("calibration.seeds_per_eval", &cal.seeds_per_eval);
        kv("calibration.step_fraction", &cal.step_fraction);
        let scales: Vec<String> = cal.severity_scales.iter().map(f64::to_string).collect();
        kv("calibration.severity_scales", &scales.join(";"));
        for (name, b) in &cal.bounds {
            kv(&format!("calibration.bounds.{name}"), &format!("{},{}", b.lower, b.upper));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_reference_table() {
        let c = ScenarioConfig::default();
        assert_eq!(c.n_agents, 10_000);
        assert_eq!(c.n_pois, 4_000);
        assert_eq!(c.epidemic.weather_factor, 0.25);
        assert_eq!(c.epidemic.healthcare_quality, 0.5);
        assert_eq!(c.days, 30);
        assert_eq!(c.movement.exposure_distance, 100.0);
        assert_eq!(c.movement.mobility_range, 10_000.0);
        assert_eq!(c.p_initial_infected, 0.01);
        assert_eq!(c.p_initial_vaccinated, 0.575);
        c.validate().unwrap();
    }

    #[test]
    fn round_trip_defaults() {
        let c = ScenarioConfig::default();
        let text = c.to_config_string();
        assert_eq!(ScenarioConfig::parse(&text, None).unwrap(), c);
    }

    #[test]
    fn overrides_and_templates() {
        let text = "\
# small run
n_agents = 50
days=3
spread.grocery=0.7
profession.worker.task=work,9,17
profession.worker.task=service_visit,17,19
profession.other.tasks=none
population.age.young=0.5
population.age.old=0.5
susceptibility.age.old=0.9
boundary_file=city/boundary.geojson
calibration.bounds.alpha=0.1,0.9
";
        let c = ScenarioConfig::parse(text, Some(Path::new("/data"))).unwrap();
        assert_eq!(c.n_agents, 50);
        assert_eq!(c.spread_overrides["grocery"], 0.7);
        assert_eq!(c.category_spread("grocery"), 0.7);
        let worker = &c.professions[&Profession::Worker];
        assert_eq!(worker.template.tasks().len(), 2);
        assert_eq!(worker.template.tasks()[0].start_hours, 9.0);
        assert!(c.professions[&Profession::Other].template.tasks().is_empty());
        assert_eq!(c.age.len(), 2);
        assert_eq!(c.age[1].susceptibility, 0.9);
        assert_eq!(c.files.boundary.as_deref(), Some(Path::new("/data/city/boundary.geojson")));
        assert_eq!(c.calibration.bounds.len(), 1);
        assert_eq!(ScenarioConfig::parse(&c.to_config_string(), None).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        let err = |t: &str| ScenarioConfig::parse(t, None).unwrap_err().to_string();
        assert!(err("bogus=1").contains("unknown key"));
        assert!(err("n_agents=1\nn_agents=2").contains("duplicate"));
        assert!(err("p_initial_infected=1.5").contains("[0,1]"));
        assert!(err("days=0").contains("days"));
        assert!(err("no equals sign").contains("line 1"));
        assert!(err("profession.pilot.share=1").contains("unknown key"));
        assert!(err("profession.worker.task=work,8,30").contains("worker"));
        assert!(err("calibration.bounds.nonsense=0,1").contains("tunable"));
        assert!(err("mobility_range=0").contains("mobility_range"));
    }

    #[test]
    fn params_by_name() {
        let mut c = ScenarioConfig::default();
        assert_eq!(c.param("alpha"), Some(0.2));
        assert!(c.set_param("alpha", 0.3));
        assert_eq!(c.epidemic.alpha, 0.3);
        assert_eq!(c.param("spread.park"), Some(0.3));
        assert!(c.set_param("spread.park", 0.1));
        assert_eq!(c.param("spread.park"), Some(0.1));
        assert_eq!(c.param("nope"), None);
        assert!(!c.set_param("nope", 1.0));
    }

    #[test]
    fn susceptibility_model_from_bands() {
        let m = ScenarioConfig::default().susceptibility_model();
        assert_eq!(m.age["0-17"], 0.5);
        assert_eq!(m.vaccinated_multiplier, 0.2);
        assert_eq!(m.profession.len(), 4);
    }

    proptest! {
        #[test]
        fn numeric_fields_round_trip(
            n in 1usize..100_000,
            p in 0.0f64..=1.0,
            w in 0.0f64..=1.0,
            range in 1.0f64..1e6,
            seed in any::<u64>(),
        ) {
            let mut c = ScenarioConfig::default();
            c.n_agents = n;
            c.p_initial_infected = p;
            c.epidemic.weather_factor = w;
            c.movement.mobility_range = range;
            c.rng_seed = seed;
            c.spread_overrides.insert("bar".into(), p);
            let back = ScenarioConfig::parse(&c.to_config_string(), None).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
