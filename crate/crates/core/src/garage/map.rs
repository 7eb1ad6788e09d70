use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::localization::{Beacon, Point2};

/// Stall pitch along a row, metres.
pub const DEFAULT_STALL_WIDTH: f64 = 2.45;
/// Distance between the two walls of the default layout, metres.
pub const LANE_WIDTH: f64 = 8.0;
pub const DEFAULT_STALL_THRESHOLD: f64 = 1.5;
const DEFAULT_TX_POWER: f64 = -59.0;
/// Perpendicular distance from a stall centre to the patrol line in front of it.
const ROUTE_OFFSET: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("map: {0}")]
    Invalid(String),
    #[error("unknown stall {0:?}")]
    UnknownStall(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "StallRecord", into = "StallRecord")]
pub struct Stall {
    pub stall_id: String,
    pub center: Point2,
    pub width: f64,
}

#[derive(Serialize, Deserialize)]
struct StallRecord {
    id: String,
    x_m: f64,
    y_m: f64,
    #[serde(default = "default_width")]
    width_m: f64,
}

fn default_width() -> f64 {
    DEFAULT_STALL_WIDTH
}

impl From<StallRecord> for Stall {
    fn from(r: StallRecord) -> Self {
        Stall { stall_id: r.id, center: Point2::new(r.x_m, r.y_m), width: r.width_m }
    }
}

impl From<Stall> for StallRecord {
    fn from(s: Stall) -> Self {
        StallRecord { id: s.stall_id, x_m: s.center.x, y_m: s.center.y, width_m: s.width }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarageMap {
    #[serde(rename = "width_m")]
    pub width: f64,
    #[serde(rename = "height_m")]
    pub height: f64,
    pub stalls: Vec<Stall>,
    pub beacons: Vec<Beacon>,
    #[serde(with = "route_serde")]
    pub route: Vec<Point2>,
}

mod route_serde {
    use super::Point2;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(route: &[Point2], s: S) -> Result<S::Ok, S::Error> {
        route.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point2>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(|[x, y]| Point2::new(x, y)).collect())
    }
}

impl GarageMap {
    /// Two rows of `per_row` stalls against opposite walls 8 m apart, pitch
    /// 2.45 m. Beacons sit on both walls at every second stall boundary. The
    /// patrol route runs past the bottom row left to right and returns past
    /// the top row.
    pub fn default_layout(per_row: usize) -> Self {
        let pitch = DEFAULT_STALL_WIDTH;
        let width = per_row as f64 * pitch;
        let height = LANE_WIDTH;
        let depth = 2.5;
        let (bottom, top) = (depth / 2.0, height - depth / 2.0);

        let mut stalls = Vec::with_capacity(2 * per_row);
        for k in 0..per_row {
            stalls.push((k, bottom));
        }
        for k in (0..per_row).rev() {
            stalls.push((k, top));
        }
        let stalls = stalls
            .into_iter()
            .enumerate()
            .map(|(i, (k, y))| Stall {
                stall_id: format!("E-{:02}", i + 1),
                center: Point2::new((k as f64 + 0.5) * pitch, y),
                width: pitch,
            })
            .collect();

        let mut columns: Vec<f64> = (0..=per_row).step_by(2).map(|k| k as f64 * pitch).collect();
        if per_row % 2 == 1 {
            columns.push(width);
        }
        let mut beacons = Vec::new();
        for (wall, y) in [("S", 0.0), ("N", height)] {
            for (c, &x) in columns.iter().enumerate() {
                beacons.push(Beacon::new(format!("B-{wall}{c}"), x, y, DEFAULT_TX_POWER));
            }
        }

        let (x0, x1) = (pitch / 4.0, width - pitch / 4.0);
        let (y0, y1) = (bottom + ROUTE_OFFSET, top - ROUTE_OFFSET);
        let route = vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ];
        Self { width, height, stalls, beacons, route }
    }

    pub fn stall(&self, stall_id: &str) -> Option<&Stall> {
        self.stalls.iter().find(|s| s.stall_id == stall_id)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.is_finite() && (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let bad = |msg: String| Err(MapError::Invalid(msg));
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return bad(format!("dimensions {}x{} must be positive", self.width, self.height));
        }
        let mut ids = HashSet::new();
        for s in &self.stalls {
            if !ids.insert(s.stall_id.as_str()) {
                return bad(format!("duplicate stall id {:?}", s.stall_id));
            }
            if !self.contains(s.center) {
                return bad(format!("stall {:?} lies outside the map", s.stall_id));
            }
            if !(s.width > 0.0) {
                return bad(format!("stall {:?} has non-positive width", s.stall_id));
            }
        }
        let mut beacon_ids = HashSet::new();
        for b in &self.beacons {
            if !beacon_ids.insert(b.id.as_str()) {
                return bad(format!("duplicate beacon id {:?}", b.id));
            }
            if !b.position.is_finite() || !b.tx_power.is_finite() {
                return bad(format!("beacon {:?} has non-finite fields", b.id));
            }
        }
        if self.route.is_empty() {
            return bad("route needs at least one waypoint".into());
        }
        if let Some(i) = self.route.iter().position(|p| !self.contains(*p)) {
            return bad(format!("route waypoint {i} lies outside the map"));
        }
        Ok(())
    }
}

/// Nearest stall centre within `threshold` metres; equal distances go to the
/// lexicographically smaller id.
pub fn stall_for_position(map: &GarageMap, pos: Point2, threshold: f64) -> Option<&str> {
    if !pos.is_finite() {
        return None;
    }
    map.stalls
        .iter()
        .map(|s| (s.center.distance(pos), s.stall_id.as_str()))
        .filter(|(d, _)| *d <= threshold)
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, id)| id)
}
