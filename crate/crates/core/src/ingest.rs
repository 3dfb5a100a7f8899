//! Parameter extraction from mobility-pattern, health-rate, distancing, and
//! observed-case files.
//!
//! File schemas (comma-separated, header row required):
//!
//! | file | header |
//! |------|--------|
//! | patterns | `poi_id,category,daily_visits,hourly_profile` (lists `;`-separated, 24 hourly values) |
//! | health rates | `band,infection_per_100k,hospitalization_per_100k,death_per_100k` |
//! | distancing | `date,total_devices,at_home_devices` |
//! | observed cases | `day,infections` |
//! | census | `dimension,band,share` |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::agents::{default_spread_probability, PoiCategoryParams, PoiParamTable};
use crate::scheduler::{SlotSet, ITERATIONS_PER_DAY};

pub const PATTERNS_HEADER: [&str; 4] = ["poi_id", "category", "daily_visits", "hourly_profile"];
pub const RATES_HEADER: [&str; 4] = [
    "band",
    "infection_per_100k",
    "hospitalization_per_100k",
    "death_per_100k",
];
pub const DISTANCING_HEADER: [&str; 3] = ["date", "total_devices", "at_home_devices"];
pub const OBSERVED_HEADER: [&str; 2] = ["day", "infections"];
pub const CENSUS_HEADER: [&str; 3] = ["dimension", "band", "share"];

const PER_100K: f64 = 100_000.0;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("header must be {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Usage(String),
}

/// A derived value plus the non-fatal problems met on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

impl<T> Ingested<T> {
    fn new(value: T, warnings: Vec<String>) -> Self {
        for w in &warnings {
            log::warn!("{w}");
        }
        Self { value, warnings }
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader<R: Read>(reader: R, header: &[&str]) -> Result<csv::Reader<R>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| format_err(1, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(IngestError::Header {
            expected: header.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    Ok(rdr)
}

fn format_err(line: u64, e: impl std::fmt::Display) -> IngestError {
    IngestError::Format {
        line,
        message: e.to_string(),
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoiPatternRecord {
    pub poi_id: String,
    pub category: String,
    pub daily_visits: Vec<u64>,
    pub hourly_profile: [u64; 24],
}

impl PoiPatternRecord {
    pub fn mean_daily_visits(&self) -> f64 {
        if self.daily_visits.is_empty() {
            return 0.0;
        }
        self.daily_visits.iter().sum::<u64>() as f64 / self.daily_visits.len() as f64
    }
}

fn int_list(s: &str) -> Result<Vec<u64>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<u64>().map_err(|_| format!("not a non-negative integer: {v:?}")))
        .collect()
}

pub fn read_patterns<R: Read>(reader: R) -> Result<Vec<PoiPatternRecord>, IngestError> {
    let mut rdr = csv_reader(reader, &PATTERNS_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format_err(0, e))?;
        let line = line_of(&rec);
        let daily = int_list(&rec[2]).map_err(|m| format_err(line, m))?;
        let hourly = int_list(&rec[3]).map_err(|m| format_err(line, m))?;
        let hourly_profile: [u64; 24] = hourly.as_slice().try_into().map_err(|_| {
            format_err(line, format!("hourly_profile has {} values, expected 24", hourly.len()))
        })?;
        out.push(PoiPatternRecord {
            poi_id: rec[0].to_string(),
            category: rec[1].to_string(),
            daily_visits: daily,
            hourly_profile,
        });
    }
    Ok(out)
}

pub fn load_patterns(path: &Path) -> Result<Vec<PoiPatternRecord>, IngestError> {
    read_patterns(open(path)?)
}

/// Number of POI agents for a population: `population / r`, where `r` is
/// the mean daily number of visitors per tracked location, rounded and
/// clamped to `[1, available]`.
pub fn derive_poi_count(
    patterns: &[PoiPatternRecord],
    population: usize,
    available: usize,
) -> Result<usize, IngestError> {
    if patterns.is_empty() {
        return Err(IngestError::Usage("no tracked locations in the patterns data".into()));
    }
    if available == 0 {
        return Err(IngestError::Usage("no POI locations available".into()));
    }
    if let Some(p) = patterns.iter().find(|p| p.daily_visits.is_empty()) {
        return Err(IngestError::Usage(format!("POI {:?} has no daily visit counts", p.poi_id)));
    }
    let daily_total: f64 = patterns.iter().map(PoiPatternRecord::mean_daily_visits).sum();
    let r = daily_total / patterns.len() as f64;
    if r <= 0.0 {
        return Err(IngestError::Usage("tracked locations record no visits".into()));
    }
    let count = (population as f64 / r).round();
    Ok((count as usize).clamp(1, available))
}

/// Iteration slots during which a POI is busiest: the hourly profile is
/// folded into two-hour bins, and bins holding at least `peak_fraction` of
/// the largest bin are kept. An all-zero profile keeps every slot.
pub fn derive_activity_period(profile: &[u64; 24], peak_fraction: f64) -> Ingested<SlotSet> {
    let mut bins = [0u64; ITERATIONS_PER_DAY as usize];
    for (h, &c) in profile.iter().enumerate() {
        bins[h / 2] += c;
    }
    let max = bins.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Ingested::new(
            SlotSet::all(),
            vec!["all-zero hourly profile; POI treated as active all day".into()],
        );
    }
    let threshold = peak_fraction * max as f64;
    let slots = SlotSet::from_slots((0..bins.len()).filter(|&i| bins[i] as f64 >= threshold))
        .expect("the peak bin always qualifies");
    Ingested::new(slots, Vec::new())
}

/// Per-category POI parameters from pattern records. Activity slots come
/// from the category's summed hourly profile; occupancy is the category's
/// mean daily visitors per POI, at least 1; spread uses the bundled
/// category value, else `fallback_spread`.
pub fn patterns_to_table(
    patterns: &[PoiPatternRecord],
    peak_fraction: f64,
    fallback_spread: f64,
) -> Ingested<PoiParamTable> {
    let mut by_cat: BTreeMap<&str, Vec<&PoiPatternRecord>> = BTreeMap::new();
    for p in patterns {
        by_cat.entry(p.category.as_str()).or_default().push(p);
    }
    let mut warnings = Vec::new();
    let mut table = PoiParamTable::default();
    for (cat, recs) in by_cat {
        let mut profile = [0u64; 24];
        for r in &recs {
            for (acc, v) in profile.iter_mut().zip(r.hourly_profile) {
                *acc += v;
            }
        }
        let period = derive_activity_period(&profile, peak_fraction);
        warnings.extend(period.warnings.into_iter().map(|w| format!("category {cat}: {w}")));
        let mean = recs.iter().map(|r| r.mean_daily_visits()).sum::<f64>() / recs.len() as f64;
        table.rows.insert(
            cat.to_string(),
            PoiCategoryParams {
                activity_slots: period.value,
                occupancy: (mean.round() as u32).max(1),
                spread_probability: default_spread_probability(cat).unwrap_or(fallback_spread),
            },
        );
    }
    Ingested {
        value: table,
        warnings,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub band: String,
    pub infection_rate: f64,
    pub hospitalization_rate: f64,
    pub death_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    /// `age`, `gender`, or `income`.
    pub dimension: String,
    pub rows: Vec<RateRow>,
}

pub const RATE_DIMENSIONS: [&str; 3] = ["age", "gender", "income"];

impl RateTable {
    /// Susceptibility multipliers: each band's infection rate relative to
    /// the highest band's, so the most affected band gets 1.0.
    pub fn susceptibility_multipliers(&self) -> Vec<(String, f64)> {
        let max = self.rows.iter().map(|r| r.infection_rate).fold(0.0, f64::max);
        self.rows
            .iter()
            .map(|r| {
                let m = if max > 0.0 { r.infection_rate / max } else { 1.0 };
                (r.band.clone(), m)
            })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| format_err(0, e);
        w.write_record(["band", "infection_rate", "hospitalization_rate", "death_rate"])
            .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.band.clone(),
                r.infection_rate.to_string(),
                r.hospitalization_rate.to_string(),
                r.death_rate.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| format_err(0, e))
    }
}

/// Reads per-100,000 rates and converts them to probabilities. Rows with a
/// rate outside `[0, 100000]` or an unreadable number are skipped with a
/// warning; a table left without rows is an error.
pub fn read_health_rates<R: Read>(reader: R, dimension: &str) -> Result<Ingested<RateTable>, IngestError> {
    if !RATE_DIMENSIONS.contains(&dimension) {
        return Err(IngestError::Usage(format!(
            "unknown rate dimension {dimension:?}; expected one of {RATE_DIMENSIONS:?}"
        )));
    }
    let mut rdr = csv_reader(reader, &RATES_HEADER)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format_err(0, e))?;
        let line = line_of(&rec);
        let rates: Result<Vec<f64>, String> = (1..4)
            .map(|i| {
                let v: f64 = rec[i]
                    .parse()
                    .map_err(|_| format!("{} is not a number: {:?}", RATES_HEADER[i], &rec[i]))?;
                if (0.0..=PER_100K).contains(&v) {
                    Ok(v / PER_100K)
                } else {
                    Err(format!("{} = {v} outside [0, 100000]", RATES_HEADER[i]))
                }
            })
            .collect();
        match rates {
            Ok(r) => rows.push(RateRow {
                band: rec[0].to_string(),
                infection_rate: r[0],
                hospitalization_rate: r[1],
                death_rate: r[2],
            }),
            Err(m) => warnings.push(format!("line {line}: row rejected: {m}")),
        }
    }
    if rows.is_empty() {
        return Err(IngestError::Empty(format!("{dimension} rate table has no usable rows")));
    }
    Ok(Ingested::new(
        RateTable {
            dimension: dimension.to_string(),
            rows,
        },
        warnings,
    ))
}

pub fn parse_health_rates(path: &Path, dimension: &str) -> Result<Ingested<RateTable>, IngestError> {
    read_health_rates(open(path)?, dimension)
}

/// Mean over days of the fraction of devices that left home. Days with no
/// devices are skipped with a warning.
pub fn read_social_distancing<R: Read>(reader: R) -> Result<Ingested<f64>, IngestError> {
    let mut rdr = csv_reader(reader, &DISTANCING_HEADER)?;
    let mut fractions = Vec::new();
    let mut warnings = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format_err(0, e))?;
        let line = line_of(&rec);
        let num = |i: usize| {
            rec[i]
                .parse::<u64>()
                .map_err(|_| format_err(line, format!("{} is not a count: {:?}", DISTANCING_HEADER[i], &rec[i])))
        };
        let (total, home) = (num(1)?, num(2)?);
        if total == 0 {
            warnings.push(format!("line {line}: day {} has no devices; skipped", &rec[0]));
            continue;
        }
        if home > total {
            return Err(format_err(line, "at_home_devices exceeds total_devices"));
        }
        fractions.push(1.0 - home as f64 / total as f64);
    }
    if fractions.is_empty() {
        return Err(IngestError::Empty("distancing file has no day with devices".into()));
    }
    let mean = fractions.iter().sum::<f64>() / fractions.len() as f64;
    Ok(Ingested::new(mean.clamp(0.0, 1.0), warnings))
}

pub fn derive_social_distancing(path: &Path) -> Result<Ingested<f64>, IngestError> {
    read_social_distancing(open(path)?)
}

/// Observed daily infections, indexed by day starting at 1. Days must be
/// consecutive.
pub fn read_observed<R: Read>(reader: R) -> Result<Vec<f64>, IngestError> {
    let mut rdr = csv_reader(reader, &OBSERVED_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format_err(0, e))?;
        let line = line_of(&rec);
        let day: usize = rec[0]
            .parse()
            .map_err(|_| format_err(line, format!("bad day {:?}", &rec[0])))?;
        if day != out.len() + 1 {
            return Err(format_err(line, format!("expected day {}, found {day}", out.len() + 1)));
        }
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| format_err(line, format!("bad infections {:?}", &rec[1])))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(format_err(line, format!("infections must be >= 0, got {v}")));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(IngestError::Empty("observed series is empty".into()));
    }
    Ok(out)
}

pub fn load_observed(path: &Path) -> Result<Vec<f64>, IngestError> {
    read_observed(open(path)?)
}

/// Band population shares by dimension, in file order.
pub fn read_census<R: Read>(reader: R) -> Result<BTreeMap<String, Vec<(String, f64)>>, IngestError> {
    let mut rdr = csv_reader(reader, &CENSUS_HEADER)?;
    let mut out: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| format_err(0, e))?;
        let line = line_of(&rec);
        if !RATE_DIMENSIONS.contains(&&rec[0]) {
            return Err(format_err(line, format!("unknown dimension {:?}", &rec[0])));
        }
        let share: f64 = rec[2]
            .parse()
            .ok()
            .filter(|s: &f64| *s >= 0.0 && s.is_finite())
            .ok_or_else(|| format_err(line, format!("bad share {:?}", &rec[2])))?;
        out.entry(rec[0].to_string()).or_default().push((rec[1].to_string(), share));
    }
    Ok(out)
}
