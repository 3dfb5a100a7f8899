use std::path::Path;

use geojson::{Feature, GeoJson, JsonObject, Value};

use super::{CityMap, GeoError, Neighborhood, Point, PoiLocation, Polygon};
use crate::scalar::Scalar;

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Equirectangular projection about a reference longitude/latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub lon0: f64,
    pub lat0: f64,
}

impl Projection {
    pub fn forward(&self, lon: f64, lat: f64) -> (f64, f64) {
        let k = self.lat0.to_radians().cos();
        (
            EARTH_RADIUS_M * (lon - self.lon0).to_radians() * k,
            EARTH_RADIUS_M * (lat - self.lat0).to_radians(),
        )
    }

    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let k = self.lat0.to_radians().cos();
        (
            self.lon0 + (x / (EARTH_RADIUS_M * k)).to_degrees(),
            self.lat0 + (y / EARTH_RADIUS_M).to_degrees(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub loaded: usize,
    /// Valid POIs outside the city boundary.
    pub dropped: usize,
    /// POIs missing a required property.
    pub rejected: usize,
    pub warnings: Vec<String>,
}

impl LoadReport {
    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("dropped: {}", self.dropped),
            format!("loaded: {}", self.loaded),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCity<T> {
    pub map: CityMap<T>,
    pub pois: Vec<PoiLocation<T>>,
    pub report: LoadReport,
}

pub fn load_city<T: Scalar>(boundary: &Path, pois: &Path) -> Result<LoadedCity<T>, GeoError> {
    let read = |path: &Path| {
        std::fs::read_to_string(path).map_err(|source| GeoError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    let boundary_text = read(boundary)?;
    let pois_text = read(pois)?;
    parse_city_named(
        &boundary_text,
        &boundary.display().to_string(),
        &pois_text,
        &pois.display().to_string(),
    )
}

/// Same as [`load_city`] over in-memory GeoJSON text.
pub fn parse_city<T: Scalar>(boundary: &str, pois: &str) -> Result<LoadedCity<T>, GeoError> {
    parse_city_named(boundary, "boundary", pois, "pois")
}

fn parse_city_named<T: Scalar>(
    boundary: &str,
    boundary_name: &str,
    pois: &str,
    pois_name: &str,
) -> Result<LoadedCity<T>, GeoError> {
    let boundary_features = features(boundary, boundary_name)?;
    let raw = raw_polygons(&boundary_features, boundary_name)?;
    if raw.is_empty() {
        return Err(GeoError::EmptyBoundary(boundary_name.to_string()));
    }

    let (mut sum_lon, mut sum_lat, mut n) = (0.0, 0.0, 0usize);
    for (_, _, rings) in &raw {
        for pos in &rings[0] {
            sum_lon += pos[0];
            sum_lat += pos[1];
            n += 1;
        }
    }
    let projection = Projection {
        lon0: sum_lon / n as f64,
        lat0: sum_lat / n as f64,
    };
    let project = |pos: &[f64]| {
        let (x, y) = projection.forward(pos[0], pos[1]);
        Point::new(T::of(x), T::of(y))
    };

    let mut neighborhoods = Vec::with_capacity(raw.len());
    for (feature, (index, name, rings)) in raw.into_iter().enumerate() {
        let mut rings = rings.into_iter().map(|r| r.iter().map(|p| project(p)).collect());
        let exterior = rings.next().expect("checked non-empty");
        let polygon = Polygon::new(exterior, rings.collect()).map_err(|e| GeoError::Geometry {
            file: boundary_name.to_string(),
            feature: index,
            reason: e.to_string(),
        })?;
        neighborhoods.push(Neighborhood {
            id: name.clone().unwrap_or_else(|| format!("n{feature}")),
            name: name.unwrap_or_else(|| format!("neighborhood {feature}")),
            polygon,
        });
    }
    let map = CityMap {
        neighborhoods,
        projection,
        crs_note: format!(
            "source: WGS84 lon/lat; projected: equirectangular meters about lon0={:.6}, lat0={:.6}",
            projection.lon0, projection.lat0
        ),
    };

    let mut report = LoadReport::default();
    let mut out = Vec::new();
    let poi_features = if pois.trim().is_empty() {
        Vec::new()
    } else {
        features(pois, pois_name)?
    };
    if poi_features.is_empty() {
        warn(&mut report, format!("{pois_name}: no POI features"));
    }
    for (index, feature) in poi_features.iter().enumerate() {
        let position = match feature.geometry.as_ref().map(|g| &g.value) {
            Some(Value::Point(pos)) => {
                check_position(pos, pois_name, index)?;
                project(pos)
            }
            Some(other) => {
                return Err(GeoError::Geometry {
                    file: pois_name.to_string(),
                    feature: index,
                    reason: format!("expected Point geometry, found {}", other.type_name()),
                })
            }
            None => {
                return Err(GeoError::Geometry {
                    file: pois_name.to_string(),
                    feature: index,
                    reason: "missing geometry".to_string(),
                })
            }
        };
        let props = feature.properties.as_ref();
        let Some(category) = string_prop(props, "category") else {
            report.rejected += 1;
            warn(&mut report, format!("{pois_name}: feature {index}: missing category, skipped"));
            continue;
        };
        let Some(poi_id) = string_prop(props, "poi_id") else {
            report.rejected += 1;
            warn(&mut report, format!("{pois_name}: feature {index}: missing poi_id, skipped"));
            continue;
        };
        let Some(neighborhood) = map.neighborhood_of(position) else {
            report.dropped += 1;
            continue;
        };
        let occupancy = props
            .and_then(|p| p.get("occupancy"))
            .and_then(|v| v.as_u64())
            .map(|v| v.min(u32::MAX as u64) as u32);
        let spread_probability = props
            .and_then(|p| p.get("spread_probability"))
            .and_then(|v| v.as_f64())
            .filter(|p| (0.0..=1.0).contains(p));
        out.push(PoiLocation {
            poi_id,
            category,
            position,
            neighborhood_id: neighborhood.id.clone(),
            occupancy,
            spread_probability,
        });
    }
    report.loaded = out.len();
    Ok(LoadedCity {
        map,
        pois: out,
        report,
    })
}

fn warn(report: &mut LoadReport, message: String) {
    log::warn!("{message}");
    report.warnings.push(message);
}

fn features(text: &str, name: &str) -> Result<Vec<Feature>, GeoError> {
    let parse_err = |message: String| GeoError::Parse {
        file: name.to_string(),
        message,
    };
    match text.parse::<GeoJson>() {
        Ok(GeoJson::FeatureCollection(fc)) => Ok(fc.features),
        Ok(_) => Err(parse_err("top-level object is not a FeatureCollection".to_string())),
        Err(e) => Err(parse_err(e.to_string())),
    }
}

type RawPolygon = (usize, Option<String>, Vec<Vec<Vec<f64>>>);

fn raw_polygons(features: &[Feature], name: &str) -> Result<Vec<RawPolygon>, GeoError> {
    let mut out = Vec::new();
    for (index, feature) in features.iter().enumerate() {
        let label = string_prop(feature.properties.as_ref(), "name")
            .or_else(|| string_prop(feature.properties.as_ref(), "id"));
        let polys = match feature.geometry.as_ref().map(|g| &g.value) {
            Some(Value::Polygon(rings)) => vec![rings.clone()],
            Some(Value::MultiPolygon(polys)) => polys.clone(),
            Some(other) => {
                return Err(GeoError::Geometry {
                    file: name.to_string(),
                    feature: index,
                    reason: format!("expected Polygon or MultiPolygon, found {}", other.type_name()),
                })
            }
            None => {
                return Err(GeoError::Geometry {
                    file: name.to_string(),
                    feature: index,
                    reason: "missing geometry".to_string(),
                })
            }
        };
        let multi = polys.len() > 1;
        for (part, rings) in polys.into_iter().enumerate() {
            if rings.is_empty() {
                return Err(GeoError::Geometry {
                    file: name.to_string(),
                    feature: index,
                    reason: "polygon without rings".to_string(),
                });
            }
            for ring in &rings {
                for pos in ring {
                    check_position(pos, name, index)?;
                }
            }
            let label = match (&label, multi) {
                (Some(l), true) => Some(format!("{l}#{part}")),
                (l, _) => l.clone(),
            };
            out.push((index, label, rings));
        }
    }
    Ok(out)
}

fn check_position(pos: &[f64], name: &str, index: usize) -> Result<(), GeoError> {
    let ok = pos.len() >= 2
        && (-180.0..=180.0).contains(&pos[0])
        && (-90.0..=90.0).contains(&pos[1]);
    if ok {
        Ok(())
    } else {
        Err(GeoError::Geometry {
            file: name.to_string(),
            feature: index,
            reason: format!("invalid lon/lat position {pos:?}"),
        })
    }
}

fn string_prop(props: Option<&JsonObject>, key: &str) -> Option<String> {
    match props?.get(key)? {
        serde_json::Value::String(s) if !s.is_empty() => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT_SQUARE: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"name":"sq"},"geometry":{"type":"Polygon",
         "coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}}]}"#;

    fn pois(points: &[(&str, Option<&str>, f64, f64)]) -> String {
        let feats: Vec<String> = points
            .iter()
            .map(|(id, cat, x, y)| {
                let cat = cat.map(|c| format!(r#","category":"{c}""#)).unwrap_or_default();
                format!(
                    r#"{{"type":"Feature","properties":{{"poi_id":"{id}"{cat}}},"geometry":{{"type":"Point","coordinates":[{x},{y}]}}}}"#
                )
            })
            .collect();
        format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, feats.join(","))
    }

    #[test]
    fn all_valid_pois_load() {
        let text = pois(&[("a", Some("shop"), 0.5, 0.5), ("b", Some("shop"), 0.2, 0.9), ("c", Some("park"), 0.7, 0.1)]);
        let city = parse_city::<f64>(UNIT_SQUARE, &text).unwrap();
        assert_eq!(city.map.neighborhoods.len(), 1);
        assert_eq!(city.pois.len(), 3);
        assert_eq!(city.report.dropped, 0);
        assert_eq!(city.report.lines(), vec!["dropped: 0", "loaded: 3"]);
    }

    #[test]
    fn outside_poi_dropped() {
        let text = pois(&[("a", Some("shop"), 0.5, 0.5), ("b", Some("shop"), 0.2, 0.9), ("c", Some("shop"), 2.0, 2.0)]);
        let city = parse_city::<f64>(UNIT_SQUARE, &text).unwrap();
        let ids: Vec<_> = city.pois.iter().map(|p| p.poi_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(city.report.lines(), vec!["dropped: 1", "loaded: 2"]);
        assert!(city.pois.iter().all(|p| city.map.contains(p.position)));
    }

    #[test]
    fn poi_on_edge_kept() {
        let text = pois(&[("edge", Some("shop"), 0.0, 0.5), ("corner", Some("shop"), 1.0, 1.0)]);
        let city = parse_city::<f64>(UNIT_SQUARE, &text).unwrap();
        assert_eq!(city.pois.len(), 2);
    }

    #[test]
    fn missing_category_rejected_with_warning() {
        let text = pois(&[("a", Some("shop"), 0.5, 0.5), ("b", None, 0.2, 0.2)]);
        let city = parse_city::<f64>(UNIT_SQUARE, &text).unwrap();
        assert_eq!(city.pois.len(), 1);
        assert_eq!(city.report.rejected, 1);
        assert!(city.report.warnings[0].contains("feature 1"));
    }

    #[test]
    fn empty_poi_file_warns() {
        for text in ["", r#"{"type":"FeatureCollection","features":[]}"#] {
            let city = parse_city::<f64>(UNIT_SQUARE, text).unwrap();
            assert!(city.pois.is_empty());
            assert_eq!(city.report.warnings.len(), 1);
        }
    }

    #[test]
    fn empty_boundary_is_fatal() {
        let empty = r#"{"type":"FeatureCollection","features":[]}"#;
        assert!(matches!(parse_city::<f64>(empty, ""), Err(GeoError::EmptyBoundary(_))));
    }

    #[test]
    fn malformed_geometry_names_feature() {
        let bad = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
            {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,1],[1,0],[0,1],[0,0]]]}}]}"#;
        match parse_city::<f64>(bad, "") {
            Err(GeoError::Geometry { feature, reason, .. }) => {
                assert_eq!(feature, 1);
                assert!(reason.contains("self-intersecting"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let line = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}}]}"#;
        assert!(matches!(parse_city::<f64>(line, ""), Err(GeoError::Geometry { feature: 0, .. })));
        assert!(matches!(parse_city::<f64>("{not json", ""), Err(GeoError::Parse { .. })));
    }

    #[test]
    fn projection_round_trips_and_scales() {
        let proj = Projection { lon0: -73.9, lat0: 40.85 };
        let (x, y) = proj.forward(-73.8, 40.9);
        let (lon, lat) = proj.inverse(x, y);
        assert!((lon + 73.8).abs() < 1e-9 && (lat - 40.9).abs() < 1e-9);
        // 0.05 degrees of latitude is about 5.56 km
        assert!((y - 5559.75).abs() < 1.0, "{y}");
    }

    #[test]
    fn multipolygon_boundary_yields_parts() {
        let text = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"name":"twin"},
            "geometry":{"type":"MultiPolygon","coordinates":[[[[0,0],[1,0],[1,1],[0,1],[0,0]]],[[[2,0],[3,0],[3,1],[2,1],[2,0]]]]}}]}"#;
        let city = parse_city::<f32>(text, "").unwrap();
        let ids: Vec<_> = city.map.neighborhoods.iter().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, ["twin#0", "twin#1"]);
    }
}
