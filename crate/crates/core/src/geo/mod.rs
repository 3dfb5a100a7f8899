//! City geometry: boundary and neighborhood polygons, POI locations, and the
//! spatial index used for nearest and radius queries.

mod index;
mod load;
mod point;
mod polygon;

pub use index::{IndexEntry, Neighbor, SpatialIndex};
pub use load::{load_city, parse_city, LoadReport, LoadedCity, Projection};
pub use point::{distance, BoundingBox, Point};
pub use polygon::{Polygon, RingProblem};

use rand::Rng;

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum GeoError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: not a GeoJSON FeatureCollection: {message}")]
    Parse { file: String, message: String },
    #[error("{file}: feature {feature}: {reason}")]
    Geometry {
        file: String,
        feature: usize,
        reason: String,
    },
    #[error("{0}: boundary file has no polygon features")]
    EmptyBoundary(String),
    #[error("duplicate poi_id {0:?}")]
    DuplicatePoi(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood<T> {
    pub id: String,
    pub name: String,
    pub polygon: Polygon<T>,
}

/// The projected city: its neighborhoods, whose union is the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct CityMap<T> {
    pub neighborhoods: Vec<Neighborhood<T>>,
    pub projection: Projection,
    pub crs_note: String,
}

impl<T: Scalar> CityMap<T> {
    /// Boundary membership; points on an edge count as inside.
    pub fn contains(&self, p: Point<T>) -> bool {
        self.neighborhoods.iter().any(|n| n.polygon.contains(p))
    }

    pub fn neighborhood_of(&self, p: Point<T>) -> Option<&Neighborhood<T>> {
        self.neighborhoods.iter().find(|n| n.polygon.contains(p))
    }

    pub fn bbox(&self) -> Option<BoundingBox<T>> {
        self.neighborhoods
            .iter()
            .map(|n| n.polygon.bbox())
            .reduce(|a, b| a.union(&b))
    }

    pub fn area(&self) -> T {
        self.neighborhoods
            .iter()
            .fold(T::zero(), |acc, n| acc + n.polygon.area())
    }

    /// Uniform point inside a neighborhood chosen with probability
    /// proportional to its area. `None` only for a map without area.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Point<T>> {
        let total = self.area().to_f64_lossy();
        if !(total > 0.0) {
            return None;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = self.neighborhoods.last()?;
        for n in &self.neighborhoods {
            let a = n.polygon.area().to_f64_lossy();
            if pick < a {
                chosen = n;
                break;
            }
            pick -= a;
        }
        let bbox = chosen.polygon.bbox();
        loop {
            let x = bbox.min.x + T::of(rng.random::<f64>()) * bbox.width();
            let y = bbox.min.y + T::of(rng.random::<f64>()) * bbox.height();
            let p = Point::new(x, y);
            if chosen.polygon.contains(p) {
                return Some(p);
            }
        }
    }
}

/// A POI as loaded from file, already projected and inside the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiLocation<T> {
    pub poi_id: String,
    pub category: String,
    pub position: Point<T>,
    pub neighborhood_id: String,
    pub occupancy: Option<u32>,
    pub spread_probability: Option<f64>,
}
