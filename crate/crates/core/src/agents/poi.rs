use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::AgentError;
use crate::scheduler::SlotSet;
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct PoiAgent {
    pub poi_id: String,
    pub category: String,
    pub position: Point,
    pub activity_slots: SlotSet,
    /// Maximum distinct visitors admitted per day.
    pub occupancy_quota: u32,
    pub visitors_today: u32,
    pub spread_probability: f64,
    pub is_hospital: bool,
    /// Outdoor POIs have their spread damped by the weather factor.
    pub outdoor: bool,
}

impl PoiAgent {
    pub fn is_full(&self) -> bool {
        self.visitors_today >= self.occupancy_quota
    }

    /// Counts one more visitor if the quota allows it.
    pub fn try_admit(&mut self) -> bool {
        if self.is_full() {
            false
        } else {
            self.visitors_today += 1;
            true
        }
    }

    pub fn reset_day(&mut self) {
        self.visitors_today = 0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoiCategoryParams {
    pub activity_slots: SlotSet,
    pub occupancy: u32,
    pub spread_probability: f64,
}

pub const POI_TABLE_HEADER: [&str; 4] = ["category", "activity_slots", "occupancy", "spread_probability"];

/// Per-category POI parameters, stored as
/// `category,activity_slots,occupancy,spread_probability`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoiParamTable {
    pub rows: BTreeMap<String, PoiCategoryParams>,
}

impl PoiParamTable {
    pub fn get(&self, category: &str) -> Option<&PoiCategoryParams> {
        self.rows.get(category)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, AgentError> {
        let bad = |line: usize, msg: String| AgentError::PoiTable { line, message: msg };
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = csv.headers().map_err(|e| bad(1, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != POI_TABLE_HEADER {
            return Err(bad(1, format!("expected header {}", POI_TABLE_HEADER.join(","))));
        }
        let mut rows = BTreeMap::new();
        for (i, record) in csv.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| bad(line, e.to_string()))?;
            let slots = record[1].parse().map_err(|e: crate::scheduler::ScheduleError| bad(line, e.to_string()))?;
            let occupancy = record[2]
                .parse()
                .map_err(|_| bad(line, format!("bad occupancy {:?}", &record[2])))?;
            let spread: f64 = record[3]
                .parse()
                .map_err(|_| bad(line, format!("bad spread_probability {:?}", &record[3])))?;
            if !(0.0..=1.0).contains(&spread) {
                return Err(bad(line, format!("spread_probability {spread} outside [0,1]")));
            }
            rows.insert(
                record[0].to_string(),
                PoiCategoryParams {
                    activity_slots: slots,
                    occupancy,
                    spread_probability: spread,
                },
            );
        }
        Ok(Self { rows })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<(), AgentError> {
        let io = |e: csv::Error| AgentError::PoiTable { line: 0, message: e.to_string() };
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(POI_TABLE_HEADER).map_err(io)?;
        for (cat, p) in &self.rows {
            csv.write_record([
                cat.clone(),
                p.activity_slots.to_string(),
                p.occupancy.to_string(),
                p.spread_probability.to_string(),
            ])
            .map_err(io)?;
        }
        csv.flush().map_err(|e| AgentError::PoiTable { line: 0, message: e.to_string() })?;
        Ok(())
    }
}

/// Qualitative commingling score per category: 0 for open, sparse venues up
/// to 1 for close-quarters venues.
const COMMINGLING: &[(&str, f64)] = &[
    ("bar", 1.0),
    ("close-quarters venue", 1.0),
    ("entertainment", 1.0),
    ("gym", 0.75),
    ("place_of_worship", 0.75),
    ("restaurant", 0.75),
    ("school", 0.75),
    ("hospital", 0.5),
    ("office", 0.5),
    ("grocery", 0.25),
    ("pharmacy", 0.25),
    ("retail", 0.25),
    ("low-commingling venue", 0.0),
    ("park", 0.0),
];

pub const LOW_COMMINGLING_SPREAD: f64 = 0.3;
pub const CLOSE_QUARTERS_SPREAD: f64 = 0.9;

/// Bundled spread probability for a known category: linear between the
/// low-commingling (0.3) and close-quarters (0.9) anchors, to two decimals.
pub fn default_spread_probability(category: &str) -> Option<f64> {
    COMMINGLING
        .iter()
        .find(|(c, _)| *c == category)
        .map(|(_, score)| {
            let p = LOW_COMMINGLING_SPREAD + (CLOSE_QUARTERS_SPREAD - LOW_COMMINGLING_SPREAD) * score;
            (p * 100.0).round() / 100.0
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anchors() {
        assert_eq!(default_spread_probability("close-quarters venue"), Some(0.9));
        assert_eq!(default_spread_probability("low-commingling venue"), Some(0.3));
        assert_eq!(default_spread_probability("grocery"), Some(0.45));
        assert_eq!(default_spread_probability("spaceport"), None);
        for (cat, _) in COMMINGLING {
            let p = default_spread_probability(cat).unwrap();
            assert!((0.3..=0.9).contains(&p));
        }
    }

    #[test]
    fn quota_admission() {
        let mut poi = crate::agents::test_support::poi("p", 0.0, 0.0);
        poi.occupancy_quota = 10;
        let admitted = (0..25).filter(|_| poi.try_admit()).count();
        assert_eq!(admitted, 10);
        assert_eq!(poi.visitors_today, 10);
        poi.reset_day();
        assert!(!poi.is_full());
    }

    #[test]
    fn table_rejects_bad_rows() {
        let bad_header = "cat,slots,occ,spread\nshop,1,2,0.5\n";
        assert!(PoiParamTable::read(bad_header.as_bytes()).is_err());
        let bad_spread = "category,activity_slots,occupancy,spread_probability\nshop,4;5,10,1.5\n";
        let err = PoiParamTable::read(bad_spread.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let bad_slots = "category,activity_slots,occupancy,spread_probability\nshop,4;12,10,0.5\n";
        assert!(PoiParamTable::read(bad_slots.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn table_round_trips(
            rows in proptest::collection::btree_map(
                "[a-z ]{1,12}",
                (1u16..4096, 0u32..100_000, 0.0f64..=1.0),
                0..20,
            )
        ) {
            let table = PoiParamTable {
                rows: rows
                    .into_iter()
                    .filter(|(k, _)| k.trim() == k.as_str() && !k.is_empty())
                    .map(|(k, (bits, occ, p))| {
                        let slots = SlotSet::from_slots((0..12).filter(|s| bits & (1 << s) != 0)).unwrap();
                        (k, PoiCategoryParams { activity_slots: slots, occupancy: occ, spread_probability: p })
                    })
                    .collect(),
            };
            let mut buf = Vec::new();
            table.write(&mut buf).unwrap();
            let back = PoiParamTable::read(buf.as_slice()).unwrap();
            prop_assert_eq!(back, table);
        }
    }
}
