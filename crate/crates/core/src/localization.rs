//! Beacon ranging and 2-D trilateration.
//!
//! Each beacon `i` at `p_i` with range `d_i` gives a circle
//! `‖x − p_i‖² = d_i²`. Subtracting the circles of consecutive beacons
//! (cyclically) cancels `‖x‖²` and leaves one linear row per pair:
//!
//! ```text
//! (p_i − p_j) · x = (d_j² − d_i² + ‖p_i‖² − ‖p_j‖²) / 2
//! ```
//!
//! The stacked rows are rank 2, so the position is the least-squares
//! solution of `Aᵀ A x = Aᵀ Y`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solvers::{
    gauss_eliminate, gauss_seidel, is_diagonally_dominant, jacobi, LinearSystem, SolverError,
};
use crate::Scalar;

/// Relative tolerance under which all pairwise rows count as parallel.
pub const COLLINEAR_TOLERANCE: f64 = 1e-9;
const ITERATIVE_MAX_ITER: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalizationError {
    #[error("reading for beacon {reading:?} applied to beacon {beacon:?}")]
    Identity { reading: String, beacon: String },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("degenerate beacon geometry: {0}")]
    DegenerateGeometry(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm_sq(self) -> T {
        self.x * self.x + self.y * self.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> std::ops::Add for Point2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> std::ops::Sub for Point2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

/// Fixed transmitter. `tx_power` is the expected RSSI at 1 m, in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    from = "BeaconRecord<T>",
    into = "BeaconRecord<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Beacon<T: Scalar = f64> {
    pub id: String,
    pub position: Point2<T>,
    pub tx_power: T,
}

#[derive(Serialize, Deserialize)]
struct BeaconRecord<T> {
    id: String,
    x_m: T,
    y_m: T,
    tx_power_dbm: T,
}

impl<T: Scalar> From<BeaconRecord<T>> for Beacon<T> {
    fn from(r: BeaconRecord<T>) -> Self {
        Beacon {
            id: r.id,
            position: Point2::new(r.x_m, r.y_m),
            tx_power: r.tx_power_dbm,
        }
    }
}

impl<T: Scalar> From<Beacon<T>> for BeaconRecord<T> {
    fn from(b: Beacon<T>) -> Self {
        BeaconRecord {
            id: b.id,
            x_m: b.position.x,
            y_m: b.position.y,
            tx_power_dbm: b.tx_power,
        }
    }
}

impl<T: Scalar> Beacon<T> {
    pub fn new(id: impl Into<String>, x: T, y: T, tx_power: T) -> Self {
        Self {
            id: id.into(),
            position: Point2::new(x, y),
            tx_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssiReading<T = f64> {
    pub tick: u64,
    pub beacon_id: String,
    #[serde(rename = "rssi_dbm")]
    pub rssi: T,
}

/// Log-distance path-loss model: `rssi = tx_power − 10·n·log10(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel<T = f64> {
    exponent: T,
}

impl<T: Scalar> PathLossModel<T> {
    pub fn new(exponent: T) -> Result<Self, LocalizationError> {
        if exponent >= T::one() && exponent <= T::of(6.0) {
            Ok(Self { exponent })
        } else {
            Err(LocalizationError::Input(format!(
                "path-loss exponent {exponent} outside [1, 6]"
            )))
        }
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }
}

impl<T: Scalar> Default for PathLossModel<T> {
    fn default() -> Self {
        Self { exponent: T::of(2.0) }
    }
}

/// Inverts the path-loss model: `d = 10^((tx_power − rssi) / (10·n))`.
pub fn rssi_to_distance<T: Scalar>(
    reading: &RssiReading<T>,
    beacon: &Beacon<T>,
    model: &PathLossModel<T>,
) -> Result<T, LocalizationError> {
    if reading.beacon_id != beacon.id {
        return Err(LocalizationError::Identity {
            reading: reading.beacon_id.clone(),
            beacon: beacon.id.clone(),
        });
    }
    if !reading.rssi.is_finite() {
        return Err(LocalizationError::Input(format!(
            "non-finite rssi for beacon {}",
            beacon.id
        )));
    }
    let exp = (beacon.tx_power - reading.rssi) / (T::of(10.0) * model.exponent);
    Ok(T::of(10.0).powf(exp))
}

/// Mean RSSI in dBm per beacon id, over all given readings.
pub fn average_readings<T: Scalar>(readings: &[RssiReading<T>]) -> BTreeMap<String, T> {
    let mut acc: BTreeMap<String, (T, usize)> = BTreeMap::new();
    for r in readings {
        let slot = acc.entry(r.beacon_id.clone()).or_insert((T::zero(), 0));
        slot.0 += r.rssi;
        slot.1 += 1;
    }
    acc.into_iter()
        .map(|(id, (sum, n))| (id, sum / T::of(n as f64)))
        .collect()
}

/// Averages readings per beacon, keeps the `max_beacons` strongest (all when
/// `None`), and converts them to ranges. Beacons are returned in deployment
/// order.
pub fn ranges_from_readings<T: Scalar>(
    deployment: &[Beacon<T>],
    readings: &[RssiReading<T>],
    model: &PathLossModel<T>,
    max_beacons: Option<usize>,
) -> Result<(Vec<Beacon<T>>, Vec<T>), LocalizationError> {
    let averaged = average_readings(readings);
    if let Some(unknown) = averaged.keys().find(|id| !deployment.iter().any(|b| &b.id == *id)) {
        return Err(LocalizationError::Input(format!("reading references unknown beacon {unknown:?}")));
    }
    let mut heard: Vec<(usize, T)> = deployment
        .iter()
        .enumerate()
        .filter_map(|(i, b)| averaged.get(&b.id).map(|&rssi| (i, rssi)))
        .collect();
    if let Some(k) = max_beacons {
        // Strongest first; deployment order breaks ties. Collinear picks are
        // widened with the next strongest beacon until the set spans the plane.
        heard.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        let mut take = k.min(heard.len());
        while take < heard.len()
            && !spans_plane(heard[..take].iter().map(|&(i, _)| deployment[i].position))
        {
            take += 1;
        }
        heard.truncate(take);
        heard.sort_by_key(|&(i, _)| i);
    }
    let mut beacons = Vec::with_capacity(heard.len());
    let mut ranges = Vec::with_capacity(heard.len());
    for (i, rssi) in heard {
        let b = &deployment[i];
        let reading = RssiReading { tick: 0, beacon_id: b.id.clone(), rssi };
        ranges.push(rssi_to_distance(&reading, b, model)?);
        beacons.push(b.clone());
    }
    Ok((beacons, ranges))
}

/// True when some pair of difference vectors is not parallel within
/// [`COLLINEAR_TOLERANCE`] (relative).
fn rows_span_plane<T: Scalar>(rows: &[Point2<T>]) -> bool {
    rows.iter().enumerate().any(|(a, ra)| {
        rows[a + 1..].iter().any(|rb| {
            let cross = (ra.x * rb.y - ra.y * rb.x).abs();
            let scale = ra.norm_sq().sqrt() * rb.norm_sq().sqrt();
            cross > T::of(COLLINEAR_TOLERANCE) * scale
        })
    })
}

fn spans_plane<T: Scalar>(points: impl Iterator<Item = Point2<T>>) -> bool {
    let points: Vec<_> = points.collect();
    let k = points.len();
    let rows: Vec<_> = (0..k).map(|i| points[i] - points[(i + 1) % k]).collect();
    k >= 3 && rows_span_plane(&rows)
}

/// Builds the cyclic-pair linear system. Row `k` pairs beacon `k` with beacon
/// `(k + 1) mod len`, so the rows of `A` sum to zero.
pub fn build_trilateration_system<T: Scalar>(
    beacons: &[Beacon<T>],
    distances: &[T],
) -> Result<LinearSystem<T>, LocalizationError> {
    if beacons.len() != distances.len() {
        return Err(LocalizationError::Dimension(format!(
            "{} beacons but {} distances",
            beacons.len(),
            distances.len()
        )));
    }
    if beacons.len() < 3 {
        return Err(LocalizationError::Dimension(format!(
            "at least 3 beacons required, got {}",
            beacons.len()
        )));
    }
    if let Some(b) = beacons.iter().find(|b| !b.position.is_finite()) {
        return Err(LocalizationError::Input(format!("beacon {} has a non-finite position", b.id)));
    }
    if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d >= T::zero())) {
        return Err(LocalizationError::Input(format!("invalid distance {d}")));
    }

    let k = beacons.len();
    let half = T::of(0.5);
    let mut rows = Vec::with_capacity(k);
    let mut y = Vec::with_capacity(k);
    for i in 0..k {
        let j = (i + 1) % k;
        let (pi, pj) = (beacons[i].position, beacons[j].position);
        let (di, dj) = (distances[i], distances[j]);
        rows.push(pi - pj);
        y.push((dj * dj - di * di + pi.norm_sq() - pj.norm_sq()) * half);
    }

    if !rows_span_plane(&rows) {
        return Err(LocalizationError::DegenerateGeometry(
            "beacon positions are collinear".into(),
        ));
    }

    let flat = rows.iter().map(|r| vec![r.x, r.y]).collect();
    Ok(LinearSystem::new(flat, y)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalizationMethod {
    Gauss,
    Jacobi,
    GaussSeidel,
    #[default]
    LeastSquares,
}

impl LocalizationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            LocalizationMethod::Gauss => "gauss",
            LocalizationMethod::Jacobi => "jacobi",
            LocalizationMethod::GaussSeidel => "gauss-seidel",
            LocalizationMethod::LeastSquares => "least-squares",
        }
    }
}

impl fmt::Display for LocalizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LocalizationMethod {
    type Err = LocalizationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gauss" => Ok(Self::Gauss),
            "jacobi" => Ok(Self::Jacobi),
            "gauss-seidel" => Ok(Self::GaussSeidel),
            "least-squares" => Ok(Self::LeastSquares),
            other => Err(LocalizationError::Input(format!("unknown localization method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositionEstimate<T = f64> {
    #[serde(flatten)]
    pub position: Point2<T>,
    pub residual: T,
    pub beacons_used: Vec<String>,
    pub method: LocalizationMethod,
    /// Set when an iterative method was requested but the dominance gate
    /// failed (or iteration stalled) and Gaussian elimination was used.
    pub gate_fallback: bool,
}

/// Trilaterates a position from beacon ranges.
///
/// Coordinates are shifted to the beacon centroid before the system is
/// assembled; the rows of `A` are translation invariant and the smaller
/// `‖p‖²` terms keep the right-hand side well scaled.
pub fn estimate_position<T: Scalar>(
    beacons: &[Beacon<T>],
    distances: &[T],
    method: LocalizationMethod,
) -> Result<PositionEstimate<T>, LocalizationError> {
    if beacons.is_empty() {
        return Err(LocalizationError::Dimension("no beacons".into()));
    }
    let count = T::of(beacons.len() as f64);
    let centroid = beacons
        .iter()
        .fold(Point2::new(T::zero(), T::zero()), |acc, b| acc + b.position);
    let centroid = Point2::new(centroid.x / count, centroid.y / count);
    let shifted: Vec<Beacon<T>> = beacons
        .iter()
        .map(|b| Beacon { position: b.position - centroid, ..b.clone() })
        .collect();

    let system = build_trilateration_system(&shifted, distances)?;
    let normal = system.normal_equations();

    let direct = |normal: &LinearSystem<T>| match gauss_eliminate(normal) {
        Ok(r) => Ok(r.x),
        Err(SolverError::Singular { .. }) => Err(LocalizationError::DegenerateGeometry(
            "normal equations are singular".into(),
        )),
        Err(e) => Err(e.into()),
    };

    let mut gate_fallback = false;
    let x = match method {
        LocalizationMethod::Gauss | LocalizationMethod::LeastSquares => direct(&normal)?,
        LocalizationMethod::Jacobi | LocalizationMethod::GaussSeidel => {
            let scale = normal.rhs().iter().fold(T::one(), |m, v| m.max(v.abs()));
            let tol = T::epsilon() * T::of(64.0) * scale;
            let attempt = if is_diagonally_dominant(&normal)? {
                let r = if method == LocalizationMethod::Jacobi {
                    jacobi(&normal, tol, ITERATIVE_MAX_ITER, 1)?
                } else {
                    gauss_seidel(&normal, tol, ITERATIVE_MAX_ITER)?
                };
                r.converged.then_some(r.x)
            } else {
                None
            };
            match attempt {
                Some(x) => x,
                None => {
                    gate_fallback = true;
                    direct(&normal)?
                }
            }
        }
    };

    let residual = system.residual_norm(&x);
    Ok(PositionEstimate {
        position: Point2::new(x[0], x[1]) + centroid,
        residual,
        beacons_used: beacons.iter().map(|b| b.id.clone()).collect(),
        method,
        gate_fallback,
    })
}

/// Parses a deployment: a JSON array of `{id, x_m, y_m, tx_power_dbm}`.
pub fn parse_beacons<T>(json: &str) -> Result<Vec<Beacon<T>>, LocalizationError>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    let beacons: Vec<Beacon<T>> = serde_json::from_str(json)
        .map_err(|e| LocalizationError::Input(format!("beacon file: {e}")))?;
    let mut seen = HashSet::new();
    for b in &beacons {
        if !seen.insert(b.id.as_str()) {
            return Err(LocalizationError::Input(format!("duplicate beacon id {:?}", b.id)));
        }
        if !(b.position.is_finite() && b.tx_power.is_finite()) {
            return Err(LocalizationError::Input(format!("beacon {:?} has non-finite fields", b.id)));
        }
    }
    Ok(beacons)
}

/// Parses a reading log: one `{tick, beacon_id, rssi_dbm}` object per line.
/// Blank lines are skipped.
pub fn parse_readings<T>(jsonl: &str) -> Result<Vec<RssiReading<T>>, LocalizationError>
where
    T: Scalar + for<'de> Deserialize<'de>,
{
    jsonl
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| LocalizationError::Input(format!("readings line {}: {e}", i + 1)))
        })
        .collect()
}
