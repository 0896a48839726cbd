//! Equirectangular local-tangent projection and lagoon boundary handling.

use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Mean Earth radius used by the local projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Projects geographic coordinates to metres east (`x`) and north (`y`) of `origin`.
pub fn latlon_to_local(lat: f64, lon: f64, origin: (f64, f64)) -> (f64, f64) {
    let (lat0, lon0) = origin;
    let x = EARTH_RADIUS_M * lat0.to_radians().cos() * (lon - lon0).to_radians();
    let y = EARTH_RADIUS_M * (lat - lat0).to_radians();
    (x, y)
}

/// Inverse of [`latlon_to_local`]; returns `(lat, lon)` in degrees.
pub fn local_to_latlon(x: f64, y: f64, origin: (f64, f64)) -> (f64, f64) {
    let (lat0, lon0) = origin;
    let lat = lat0 + (y / EARTH_RADIUS_M).to_degrees();
    let lon = lon0 + (x / (EARTH_RADIUS_M * lat0.to_radians().cos())).to_degrees();
    (lat, lon)
}

/// Lagoon outline in the local metric frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LagoonBoundary {
    /// Ring vertices without the repeated closing vertex.
    pub vertices: Vec<(f64, f64)>,
    /// Projection origin `(lat, lon)` in degrees.
    pub origin: (f64, f64),
}

impl LagoonBoundary {
    pub fn new(vertices: Vec<(f64, f64)>, origin: (f64, f64)) -> Result<Self> {
        let b = Self { vertices, origin };
        b.validate()?;
        Ok(b)
    }

    /// Reads a GeoJSON `Polygon` (bare geometry, `Feature`, or the first
    /// feature of a `FeatureCollection`) in WGS-84. The exterior ring is used.
    /// When `origin` is `None` the first ring vertex becomes the origin.
    pub fn from_geojson(text: &str, origin: Option<(f64, f64)>) -> Result<Self> {
        let doc: Value = serde_json::from_str(text)?;
        let geometry = find_polygon(&doc)
            .ok_or_else(|| Error::InvalidBoundary("no Polygon geometry found".into()))?;
        let ring = geometry
            .get("coordinates")
            .and_then(|c| c.get(0))
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidBoundary("polygon has no exterior ring".into()))?;
        let mut lonlat = Vec::with_capacity(ring.len());
        for p in ring {
            let pair = p.as_array().filter(|a| a.len() >= 2);
            let (Some(lon), Some(lat)) = (
                pair.and_then(|a| a[0].as_f64()),
                pair.and_then(|a| a[1].as_f64()),
            ) else {
                return Err(Error::InvalidBoundary(format!("bad position {p}")));
            };
            if lat.abs() > 90.0 {
                return Err(Error::InvalidBoundary(format!("latitude {lat} out of range")));
            }
            lonlat.push((lon, lat));
        }
        if lonlat.len() < 4 || lonlat.first() != lonlat.last() {
            return Err(Error::InvalidBoundary("ring is not closed".into()));
        }
        lonlat.pop();
        let origin = origin.unwrap_or((lonlat[0].1, lonlat[0].0));
        let vertices = lonlat.iter().map(|&(lon, lat)| latlon_to_local(lat, lon, origin)).collect();
        Self::new(vertices, origin)
    }

    /// Closed, at least three distinct vertices, no self-intersection.
    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        if v.len() < 3 {
            return Err(Error::InvalidBoundary(format!("{} vertices, need at least 3", v.len())));
        }
        if v.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::InvalidBoundary("non-finite vertex".into()));
        }
        let n = v.len();
        for i in 0..n {
            if v[i] == v[(i + 1) % n] {
                return Err(Error::InvalidBoundary(format!("repeated vertex {i}")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return Err(Error::InvalidBoundary(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            .abs()
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: (f64, f64)) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (a, b) = (v[i], v[j]);
            if (a.1 > p.1) != (b.1 > p.1) && p.0 < (b.0 - a.0) * (p.1 - a.1) / (b.1 - a.1) + a.0 {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

fn find_polygon(doc: &Value) -> Option<&Value> {
    match doc.get("type")?.as_str()? {
        "Polygon" => Some(doc),
        "Feature" => find_polygon(doc.get("geometry")?),
        "FeatureCollection" => doc.get("features")?.as_array()?.iter().find_map(find_polygon),
        _ => None,
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// GeoJSON `Feature` with a `LineString` of the local points projected back to WGS-84.
pub fn linestring_geojson(points: &[(f64, f64)], origin: (f64, f64), properties: Value) -> Value {
    let coords: Vec<Value> = points
        .iter()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .map(|&(x, y)| {
            let (lat, lon) = local_to_latlon(x, y, origin);
            json!([lon, lat])
        })
        .collect();
    json!({
        "type": "Feature",
        "properties": properties,
        "geometry": { "type": "LineString", "coordinates": coords },
    })
}
