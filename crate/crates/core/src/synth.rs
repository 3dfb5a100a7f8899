//! Synthetic city data in the same file formats as real inputs: a square
//! boundary split into a grid of neighborhoods, categorized POIs, and the
//! ingest tables. Used for demos and tests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::workflow::{rates_file, CENSUS_FILE, DISTANCING_FILE, PATTERNS_FILE};

const METERS_PER_DEGREE: f64 = 111_195.08;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    /// Southwest corner.
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub side_m: f64,
    /// Neighborhoods per side.
    pub grid: usize,
    /// `(category, count)`.
    pub categories: Vec<(String, usize)>,
    /// Days of visit counts in the patterns table.
    pub pattern_days: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let cats = [
            ("hospital", 12),
            ("school", 300),
            ("office", 1200),
            ("grocery", 1100),
            ("restaurant", 1400),
            ("retail", 900),
            ("pharmacy", 300),
            ("park", 788),
        ];
        Self {
            seed: 7,
            origin_lon: -73.93,
            origin_lat: 40.80,
            side_m: 12_000.0,
            grid: 3,
            categories: cats.iter().map(|(c, n)| (c.to_string(), *n)).collect(),
            pattern_days: 28,
        }
    }
}

impl SynthSpec {
    pub fn total_pois(&self) -> usize {
        self.categories.iter().map(|(_, n)| n).sum()
    }

    fn deg_lat(&self, m: f64) -> f64 {
        m / METERS_PER_DEGREE
    }

    fn deg_lon(&self, m: f64) -> f64 {
        m / (METERS_PER_DEGREE * self.origin_lat.to_radians().cos())
    }

    pub fn boundary_geojson(&self) -> String {
        let cell = self.side_m / self.grid as f64;
        let mut feats = Vec::new();
        for row in 0..self.grid {
            for col in 0..self.grid {
                let x0 = self.origin_lon + self.deg_lon(col as f64 * cell);
                let x1 = self.origin_lon + self.deg_lon((col + 1) as f64 * cell);
                let y0 = self.origin_lat + self.deg_lat(row as f64 * cell);
                let y1 = self.origin_lat + self.deg_lat((row + 1) as f64 * cell);
                feats.push(format!(
                    r#"{{"type":"Feature","properties":{{"name":"district-{row}-{col}"}},"geometry":{{"type":"Polygon","coordinates":[[[{x0},{y0}],[{x1},{y0}],[{x1},{y1}],[{x0},{y1}],[{x0},{y0}]]]}}}}"#
                ));
            }
        }
        format!("{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n", feats.join(",\n"))
    }

    /// POI points strictly inside the boundary, ids `poi-00000` onward.
    pub fn pois_geojson(&self) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let margin = 20.0;
        let mut feats = Vec::new();
        let mut id = 0;
        for (cat, n) in &self.categories {
            for _ in 0..*n {
                let x = rng.random_range(margin..self.side_m - margin);
                let y = rng.random_range(margin..self.side_m - margin);
                let lon = self.origin_lon + self.deg_lon(x);
                let lat = self.origin_lat + self.deg_lat(y);
                feats.push(format!(
                    r#"{{"type":"Feature","properties":{{"poi_id":"poi-{id:05}","category":"{cat}"}},"geometry":{{"type":"Point","coordinates":[{lon:.7},{lat:.7}]}}}}"#
                ));
                id += 1;
            }
        }
        format!("{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n", feats.join(",\n"))
    }

    /// A patterns table covering one POI in ten.
    pub fn patterns_csv(&self) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        let mut s = String::from("poi_id,category,daily_visits,hourly_profile\n");
        let mut id = 0;
        for (cat, n) in &self.categories {
            let (open, close) = opening_hours(cat);
            for _ in 0..*n {
                if id % 10 == 0 {
                    let base = rng.random_range(10..40u64);
                    let daily: Vec<String> = (0..self.pattern_days)
                        .map(|_| (base + rng.random_range(0..10u64)).to_string())
                        .collect();
                    let hourly: Vec<String> = (0..24)
                        .map(|h| {
                            if (open..close).contains(&h) {
                                rng.random_range(5..20u64).to_string()
                            } else {
                                rng.random_range(0..2u64).to_string()
                            }
                        })
                        .collect();
                    let _ = writeln!(s, "poi-{id:05},{cat},{},{}", daily.join(";"), hourly.join(";"));
                }
                id += 1;
            }
        }
        s
    }
}

fn opening_hours(category: &str) -> (usize, usize) {
    match category {
        "hospital" => (0, 24),
        "school" => (8, 15),
        "office" => (8, 18),
        "restaurant" => (11, 22),
        "park" => (7, 20),
        _ => (8, 21),
    }
}

pub const AGE_RATES: &str = "band,infection_per_100k,hospitalization_per_100k,death_per_100k
0-17,9500,120,2
18-44,19000,600,40
45-64,21000,1900,300
65-74,17000,3600,1100
75+,15000,6000,3400
";

pub const GENDER_RATES: &str = "band,infection_per_100k,hospitalization_per_100k,death_per_100k
female,17500,1200,180
male,16800,1500,260
";

pub const CENSUS: &str = "dimension,band,share
age,0-17,0.21
age,18-44,0.40
age,45-64,0.25
age,65-74,0.08
age,75+,0.06
gender,female,0.52
gender,male,0.48
";

pub fn distancing_csv(days: usize) -> String {
    let mut s = String::from("date,total_devices,at_home_devices\n");
    for d in 0..days {
        let _ = writeln!(s, "2021-12-{:02},10000,{}", d + 1, 3500 + 50 * (d % 7));
    }
    s
}

#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub boundary: PathBuf,
    pub pois: PathBuf,
    /// Directory holding the ingest tables.
    pub data: PathBuf,
}

/// Writes `boundary.geojson`, `pois.geojson`, and a `data/` directory of
/// ingest tables under `dir`.
pub fn write_synthetic_city(dir: &Path, spec: &SynthSpec) -> Result<SynthPaths> {
    let data = dir.join("data");
    let put = |path: PathBuf, body: &str| {
        fs::write(&path, body).map_err(|source| Error::Output {
            path: path.clone(),
            source,
        })?;
        Ok::<_, Error>(path)
    };
    fs::create_dir_all(&data).map_err(|source| Error::Output {
        path: data.clone(),
        source,
    })?;
    let boundary = put(dir.join("boundary.geojson"), &spec.boundary_geojson())?;
    let pois = put(dir.join("pois.geojson"), &spec.pois_geojson())?;
    put(data.join(PATTERNS_FILE), &spec.patterns_csv())?;
    put(data.join(rates_file("age")), AGE_RATES)?;
    put(data.join(rates_file("gender")), GENDER_RATES)?;
    put(data.join(CENSUS_FILE), CENSUS)?;
    put(data.join(DISTANCING_FILE), &distancing_csv(spec.pattern_days))?;
    Ok(SynthPaths { boundary, pois, data })
}
