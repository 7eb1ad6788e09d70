use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::map::GarageMap;
use crate::localization::{PathLossModel, Point2, RssiReading};
use crate::plates::{is_valid_plate, PlateCandidate};

pub const DEFAULT_CAMERA_RANGE: f64 = 3.0;
/// Route sampling step: twenty frames per 2.45 m stall.
pub const DEFAULT_STEP: f64 = 0.1225;
pub const DEFAULT_CONFUSIONS: [(char, char); 4] = [('0', 'O'), ('1', 'I'), ('8', 'B'), ('5', 'S')];
const MIN_RANGE: f64 = 0.1;
const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario line {line} column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("scenario {path}: {msg}")]
    Invalid { path: String, msg: String },
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { path: path.into(), msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub rssi_sigma_db: f64,
    /// Per-character corruption probability for emitted plate reads.
    pub ocr_char_p: f64,
    #[serde(default = "default_confusions")]
    pub confusion_pairs: Vec<(char, char)>,
}

fn default_confusions() -> Vec<(char, char)> {
    DEFAULT_CONFUSIONS.to_vec()
}

fn default_camera_range() -> f64 {
    DEFAULT_CAMERA_RANGE
}

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_exponent() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub map: GarageMap,
    /// Parked plate per stall; `null` or a missing stall means empty.
    #[serde(default)]
    pub truth: BTreeMap<String, Option<String>>,
    pub noise: NoiseConfig,
    pub seed: u64,
    #[serde(default = "default_step")]
    pub step_m: f64,
    #[serde(default = "default_camera_range")]
    pub camera_range_m: f64,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.map.validate().map_err(|e| invalid("map", e.to_string()))?;
        for (stall, plate) in &self.truth {
            if self.map.stall(stall).is_none() {
                return Err(invalid(format!("truth.{stall}"), "unknown stall"));
            }
            if let Some(p) = plate {
                if !is_valid_plate(p) {
                    return Err(invalid(format!("truth.{stall}"), format!("invalid plate {p:?}")));
                }
            }
        }
        let n = &self.noise;
        if !(n.rssi_sigma_db >= 0.0 && n.rssi_sigma_db.is_finite()) {
            return Err(invalid("noise.rssi_sigma_db", "must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&n.ocr_char_p) {
            return Err(invalid("noise.ocr_char_p", "must lie in [0, 1]"));
        }
        if !(self.step_m > 0.0 && self.step_m.is_finite()) {
            return Err(invalid("step_m", "must be positive"));
        }
        if !(self.camera_range_m > 0.0) {
            return Err(invalid("camera_range_m", "must be positive"));
        }
        PathLossModel::new(self.path_loss_exponent)
            .map_err(|e| invalid("path_loss_exponent", e.to_string()))?;
        Ok(())
    }

    pub fn path_loss(&self) -> PathLossModel {
        PathLossModel::new(self.path_loss_exponent).expect("validated scenario")
    }

    pub fn plate_at(&self, stall_id: &str) -> Option<&str> {
        self.truth.get(stall_id).and_then(|p| p.as_deref())
    }
}

pub fn parse_scenario(json: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(json).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// What the camera reports for the stall in view. The stall itself is not
/// named; the report binds detections through the estimated position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub vehicle_present: bool,
    pub plate_candidates: Vec<PlateCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatrolEvent {
    pub tick: u64,
    /// Ground truth, used only for scoring.
    pub true_pose: Point2,
    pub rssi_readings: Vec<RssiReading>,
    pub detections: Vec<Detection>,
}

fn sample_rssi(
    map: &GarageMap,
    pose: Point2,
    model: &PathLossModel,
    noise: Option<&Normal<f64>>,
    tick: u64,
    rng: &mut impl Rng,
) -> Vec<RssiReading> {
    map.beacons
        .iter()
        .map(|b| {
            let d = b.position.distance(pose).max(MIN_RANGE);
            let mut rssi = b.tx_power - 10.0 * model.exponent() * d.log10();
            if let Some(n) = noise {
                rssi += n.sample(rng);
            }
            RssiReading { tick, beacon_id: b.id.clone(), rssi }
        })
        .collect()
}

/// One reading per beacon at `pose`: `tx_power − 10·n·log10(max(d, 0.1))`
/// plus zero-mean Gaussian noise of `noise_sigma_db`.
pub fn simulate_rssi(
    map: &GarageMap,
    pose: Point2,
    model: &PathLossModel,
    noise_sigma_db: f64,
    seed: u64,
) -> Vec<RssiReading> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = gaussian(noise_sigma_db);
    sample_rssi(map, pose, model, noise.as_ref(), 0, &mut rng)
}

fn gaussian(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite positive sigma"))
}

/// Confidence of a read with `corrupted` wrong characters.
pub fn ocr_confidence(corrupted: usize) -> f64 {
    (90.0 - 15.0 * corrupted as f64).max(20.0)
}

/// Replaces each character with probability `p`: by its confusion partner
/// when it has one, otherwise by a different random letter or digit.
/// Returns the read and the number of corrupted characters.
pub fn corrupt_plate(plate: &str, p: f64, pairs: &[(char, char)], rng: &mut impl Rng) -> (String, usize) {
    let mut corrupted = 0;
    let read = plate
        .chars()
        .map(|c| {
            if p <= 0.0 || !rng.random_bool(p) {
                return c;
            }
            corrupted += 1;
            let partner = pairs.iter().find_map(|&(a, b)| match c {
                _ if c == a => Some(b),
                _ if c == b => Some(a),
                _ => None,
            });
            partner.unwrap_or_else(|| loop {
                let r = ALPHABET[rng.random_range(0..ALPHABET.len())] as char;
                if r != c {
                    break r;
                }
            })
        })
        .collect();
    (read, corrupted)
}

fn route_samples(route: &[Point2], step: f64) -> Vec<Point2> {
    let mut out = vec![route[0]];
    // Distance already travelled past the last emitted sample.
    let mut carry = 0.0;
    for seg in route.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = a.distance(b);
        if len == 0.0 {
            continue;
        }
        let mut s = step - carry;
        while s <= len + 1e-9 {
            let t = (s / len).min(1.0);
            out.push(Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
            s += step;
        }
        carry = len - (s - step);
    }
    out
}

/// Walks the route at `step_m`, emitting beacon readings every tick and a
/// detection of the nearest stall whenever it is within camera range.
pub fn simulate_patrol(scenario: &Scenario) -> Result<Vec<PatrolEvent>, ScenarioError> {
    scenario.validate()?;
    let map = &scenario.map;
    let model = scenario.path_loss();
    let noise = gaussian(scenario.noise.rssi_sigma_db);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let events = route_samples(&map.route, scenario.step_m)
        .into_iter()
        .enumerate()
        .map(|(i, pose)| {
            let tick = i as u64;
            let rssi_readings = sample_rssi(map, pose, &model, noise.as_ref(), tick, &mut rng);
            let in_view = map
                .stalls
                .iter()
                .map(|s| (s.center.distance(pose), s))
                .filter(|(d, _)| *d <= scenario.camera_range_m)
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.stall_id.cmp(&b.1.stall_id)));
            let detections = in_view
                .map(|(_, stall)| match scenario.plate_at(&stall.stall_id) {
                    Some(plate) => {
                        let (raw, bad) = corrupt_plate(
                            plate,
                            scenario.noise.ocr_char_p,
                            &scenario.noise.confusion_pairs,
                            &mut rng,
                        );
                        Detection {
                            vehicle_present: true,
                            plate_candidates: vec![PlateCandidate { tick, raw, confidence: ocr_confidence(bad) }],
                        }
                    }
                    None => Detection { vehicle_present: false, plate_candidates: vec![] },
                })
                .into_iter()
                .collect();
            PatrolEvent { tick, true_pose: pose, rssi_readings, detections }
        })
        .collect();
    Ok(events)
}
