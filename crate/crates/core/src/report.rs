//! Per-stall occupancy verdicts from a patrol's event stream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::garage::{stall_for_position, GarageMap, PatrolEvent, DEFAULT_STALL_THRESHOLD};
use crate::localization::{
    estimate_position, ranges_from_readings, LocalizationMethod, PathLossModel, Point2,
};
use crate::plates::{consensus, PlateCandidate, RankedPlate, DEFAULT_TOP_K};
use crate::registry::{LookupOutcome, OwnerClient, OwnerRecord, Registry};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown stall {0:?}")]
    UnknownStall(String),
    #[error("registry integrity: tenant {tenant:?} holds stall {stall:?} which is not on the map")]
    Integrity { tenant: String, stall: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub const DEFAULT_READING_WINDOW: u64 = 2;

/// How each patrol tick is turned into a position and bound to a stall.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationConfig {
    pub method: LocalizationMethod,
    pub path_loss: PathLossModel,
    /// Use only the strongest readings; `None` uses every heard beacon.
    pub max_beacons: Option<usize>,
    pub stall_threshold: f64,
    pub top_k: usize,
    /// Readings from events within this many ticks of an event are averaged
    /// (per beacon, in dBm) before ranging. Zero uses the event's own readings.
    pub reading_window: u64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        Self {
            method: LocalizationMethod::LeastSquares,
            path_loss: PathLossModel::default(),
            max_beacons: Some(4),
            stall_threshold: DEFAULT_STALL_THRESHOLD,
            top_k: DEFAULT_TOP_K,
            reading_window: DEFAULT_READING_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OccupancyStatus {
    Empty,
    OccupiedByOwner,
    /// The plate belongs to a tenant registered to another stall.
    OccupiedByOtherTenant { plate: String },
    /// Plate in no registry record, or `None` when nothing readable was seen.
    OccupiedByUnknown { plate: Option<String> },
}

impl OccupancyStatus {
    pub fn label(&self) -> &'static str {
        match self {
            OccupancyStatus::Empty => "empty",
            OccupancyStatus::OccupiedByOwner => "owner",
            OccupancyStatus::OccupiedByOtherTenant { .. } => "other-tenant",
            OccupancyStatus::OccupiedByUnknown { .. } => "unknown",
        }
    }
}

/// What the patrol saw at one stall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StallObservation<'a> {
    pub vehicle_present: bool,
    pub winner: Option<&'a str>,
}

pub fn classify_stall(
    stall_id: &str,
    observed: StallObservation<'_>,
    registry: &Registry,
    map: &GarageMap,
) -> Result<OccupancyStatus, ReportError> {
    if map.stall(stall_id).is_none() {
        return Err(ReportError::UnknownStall(stall_id.to_string()));
    }
    if !observed.vehicle_present {
        return Ok(OccupancyStatus::Empty);
    }
    let Some(plate) = observed.winner else {
        return Ok(OccupancyStatus::OccupiedByUnknown { plate: None });
    };
    Ok(match registry.find_by_plate(plate) {
        Some(t) if t.stall_id == stall_id => OccupancyStatus::OccupiedByOwner,
        Some(_) => OccupancyStatus::OccupiedByOtherTenant { plate: plate.to_string() },
        None => OccupancyStatus::OccupiedByUnknown { plate: Some(plate.to_string()) },
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Evidence {
    /// Ticks whose detection was bound to this stall.
    pub ticks: Vec<u64>,
    pub vehicle_sightings: usize,
    pub ranked: Vec<RankedPlate>,
    pub positions: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallReport {
    pub stall_id: String,
    #[serde(flatten)]
    pub status: OccupancyStatus,
    pub registered_plate: Option<String>,
    pub evidence: Evidence,
    pub zero_evidence: bool,
    pub owner_lookup: Option<OwnerRecord>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Ticks that could not be localized.
    pub skipped_events: usize,
    /// Detections whose estimated position was near no stall.
    pub unbound_detections: usize,
    pub lookup_errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringReport {
    pub stalls: Vec<StallReport>,
    pub diagnostics: Diagnostics,
}

impl MonitoringReport {
    pub fn stall(&self, stall_id: &str) -> Option<&StallReport> {
        self.stalls.iter().find(|s| s.stall_id == stall_id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<8} {:<13} {:<8} {:<10} {:>6} {:>5}  {}\n",
            "stall", "status", "plate", "registered", "score", "seen", "owner"
        );
        for s in &self.stalls {
            let plate = match &s.status {
                OccupancyStatus::Empty => "-".to_string(),
                OccupancyStatus::OccupiedByOwner => {
                    s.registered_plate.clone().unwrap_or_else(|| "-".into())
                }
                OccupancyStatus::OccupiedByOtherTenant { plate } => plate.clone(),
                OccupancyStatus::OccupiedByUnknown { plate } => {
                    plate.clone().unwrap_or_else(|| "?".into())
                }
            };
            let score = s
                .evidence
                .ranked
                .first()
                .map_or("-".to_string(), |r| format!("{:.0}", r.score));
            out += &format!(
                "{:<8} {:<13} {:<8} {:<10} {:>6} {:>5}  {}\n",
                s.stall_id,
                s.status.label(),
                plate,
                s.registered_plate.as_deref().unwrap_or("-"),
                score,
                s.evidence.ticks.len(),
                s.owner_lookup.as_ref().map_or("-", |o| o.owner_name.as_str()),
            );
        }
        out += &format!(
            "skipped events: {}  unbound detections: {}\n",
            self.diagnostics.skipped_events, self.diagnostics.unbound_detections
        );
        out
    }
}

#[derive(Default)]
struct Accumulator {
    ticks: Vec<u64>,
    vehicle_sightings: usize,
    candidates: Vec<PlateCandidate>,
    positions: Vec<Point2>,
}

/// Localizes every event, binds its detections to the stall nearest the
/// estimated position, and classifies each stall from the accumulated reads.
/// Unknown plates are looked up through `lookup` when one is given.
pub fn build_report(
    events: &[PatrolEvent],
    registry: &Registry,
    map: &GarageMap,
    config: &LocalizationConfig,
    lookup: Option<&OwnerClient>,
) -> Result<MonitoringReport, ReportError> {
    if config.top_k == 0 {
        return Err(ReportError::Config("top_k must be at least 1".into()));
    }
    if let Some(t) = registry.records().iter().find(|t| map.stall(&t.stall_id).is_none()) {
        return Err(ReportError::Integrity { tenant: t.name.clone(), stall: t.stall_id.clone() });
    }

    let mut acc: Vec<Accumulator> = map.stalls.iter().map(|_| Accumulator::default()).collect();
    let mut diagnostics = Diagnostics::default();

    let mut order: Vec<&PatrolEvent> = events.iter().collect();
    order.sort_by_key(|e| e.tick);
    let mut window = Vec::new();
    for (i, event) in order.iter().enumerate() {
        window.clear();
        let lo = order[..i].partition_point(|e| e.tick + config.reading_window < event.tick);
        for other in order[lo..].iter().take_while(|e| e.tick <= event.tick + config.reading_window) {
            window.extend(other.rssi_readings.iter().cloned());
        }
        let estimate = ranges_from_readings(&map.beacons, &window, &config.path_loss, config.max_beacons)
            .and_then(|(beacons, ranges)| estimate_position(&beacons, &ranges, config.method));
        let Ok(estimate) = estimate else {
            diagnostics.skipped_events += 1;
            continue;
        };
        for det in &event.detections {
            let Some(stall_id) = stall_for_position(map, estimate.position, config.stall_threshold) else {
                diagnostics.unbound_detections += 1;
                continue;
            };
            let idx = map.stalls.iter().position(|s| s.stall_id == stall_id).expect("stall from map");
            let slot = &mut acc[idx];
            if slot.ticks.last() != Some(&event.tick) {
                slot.ticks.push(event.tick);
                slot.positions.push(estimate.position);
            }
            if det.vehicle_present {
                slot.vehicle_sightings += 1;
            }
            slot.candidates.extend(det.plate_candidates.iter().cloned());
        }
    }

    let mut stalls = Vec::with_capacity(map.stalls.len());
    for (stall, slot) in map.stalls.iter().zip(acc) {
        let consensus = consensus(&slot.candidates, config.top_k).expect("top_k checked");
        let observed = StallObservation {
            vehicle_present: slot.vehicle_sightings > 0,
            winner: consensus.winner.as_deref(),
        };
        let status = classify_stall(&stall.stall_id, observed, registry, map)?;

        let mut owner_lookup = None;
        if let (OccupancyStatus::OccupiedByUnknown { plate: Some(plate) }, Some(client)) = (&status, lookup) {
            match client.query_owner(plate) {
                Ok(LookupOutcome::Found(record)) => owner_lookup = Some(record),
                Ok(LookupOutcome::NotFound) => {}
                Err(e) => diagnostics.lookup_errors.push(format!("{}: {e}", stall.stall_id)),
            }
        }

        let registered_plate = registry
            .find_by_stall(&stall.stall_id)
            .map(|t| t.plate.clone())
            .filter(|p| !p.is_empty());
        stalls.push(StallReport {
            stall_id: stall.stall_id.clone(),
            status,
            registered_plate,
            zero_evidence: slot.ticks.is_empty(),
            evidence: Evidence {
                ticks: slot.ticks,
                vehicle_sightings: slot.vehicle_sightings,
                ranked: consensus.ranked,
                positions: slot.positions,
            },
            owner_lookup,
        });
    }

    Ok(MonitoringReport { stalls, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::garage::Detection;
    use crate::localization::RssiReading;
    use crate::registry::FixtureBackend;

    const TENANTS: &str = "apartment,name,stall_id,vehicle_type,plate,stored_goods\n\
        101,Ana,E-01,sedan,ABC123,\n\
        105,Luis,E-05,suv,DEF456,\n";

    fn map() -> GarageMap {
        GarageMap::default_layout(3)
    }

    fn registry() -> Registry {
        Registry::parse_csv(TENANTS).unwrap()
    }

    fn seen(plate: Option<&str>) -> StallObservation<'_> {
        StallObservation { vehicle_present: true, winner: plate }
    }

    #[test]
    fn rule_table() {
        let (m, r) = (map(), registry());
        assert_eq!(classify_stall("E-01", seen(Some("ABC123")), &r, &m).unwrap(), OccupancyStatus::OccupiedByOwner);
        assert_eq!(
            classify_stall("E-01", seen(Some("DEF456")), &r, &m).unwrap(),
            OccupancyStatus::OccupiedByOtherTenant { plate: "DEF456".into() }
        );
        assert_eq!(classify_stall("E-01", seen(None), &r, &m).unwrap(), OccupancyStatus::OccupiedByUnknown { plate: None });
        assert_eq!(
            classify_stall("E-02", seen(Some("ZZZ999")), &r, &m).unwrap(),
            OccupancyStatus::OccupiedByUnknown { plate: Some("ZZZ999".into()) }
        );
        assert_eq!(classify_stall("E-03", StallObservation::default(), &r, &m).unwrap(), OccupancyStatus::Empty);
        assert!(matches!(classify_stall("E-42", seen(None), &r, &m), Err(ReportError::UnknownStall(_))));
    }

    #[test]
    fn zero_events_cover_every_stall() {
        let m = map();
        let report = build_report(&[], &registry(), &m, &LocalizationConfig::default(), None).unwrap();
        assert_eq!(report.stalls.len(), m.stalls.len());
        assert!(report.stalls.iter().all(|s| s.zero_evidence && s.status == OccupancyStatus::Empty));
    }

    fn event_at(m: &GarageMap, tick: u64, pos: Point2, det: Detection) -> PatrolEvent {
        let rssi_readings = m
            .beacons
            .iter()
            .map(|b| RssiReading {
                tick,
                beacon_id: b.id.clone(),
                rssi: b.tx_power - 20.0 * b.position.distance(pos).max(0.1).log10(),
            })
            .collect();
        PatrolEvent { tick, true_pose: pos, rssi_readings, detections: vec![det] }
    }

    fn car(plate: &str) -> Detection {
        Detection { vehicle_present: true, plate_candidates: vec![PlateCandidate { tick: 0, raw: plate.into(), confidence: 80.0 }] }
    }

    #[test]
    fn binds_by_estimated_position_and_looks_up_intruders() {
        let m = map();
        let front = |id: &str| {
            let c = m.stall(id).unwrap().center;
            Point2::new(c.x, if c.y < 4.0 { c.y + 1.0 } else { c.y - 1.0 })
        };
        let events = vec![
            event_at(&m, 0, front("E-01"), car("ABC123")),
            event_at(&m, 10, front("E-02"), car("XYZ789")),
            event_at(&m, 20, front("E-03"), car("DEF456")),
            event_at(&m, 30, Point2::new(3.6, 4.0), car("QQQ111")),
        ];
        let stub = FixtureBackend::from_json(r#"{"XYZ789": "M. RAMOS"}"#).unwrap();
        let client = OwnerClient::new(stub, std::time::Duration::from_secs(1));
        let report = build_report(&events, &registry(), &m, &LocalizationConfig::default(), Some(&client)).unwrap();

        assert_eq!(report.stall("E-01").unwrap().status, OccupancyStatus::OccupiedByOwner);
        let e02 = report.stall("E-02").unwrap();
        assert_eq!(e02.status, OccupancyStatus::OccupiedByUnknown { plate: Some("XYZ789".into()) });
        assert_eq!(e02.owner_lookup.as_ref().unwrap().owner_name, "M. RAMOS");
        assert_eq!(
            report.stall("E-03").unwrap().status,
            OccupancyStatus::OccupiedByOtherTenant { plate: "DEF456".into() }
        );
        assert_eq!(report.stall("E-05").unwrap().status, OccupancyStatus::Empty);
        assert_eq!(report.diagnostics.unbound_detections, 1);
        assert_eq!(report.stall("E-01").unwrap().evidence.ticks, [0]);
    }

    #[test]
    fn window_averages_neighbouring_ticks() {
        let m = map();
        let front = Point2::new(m.stall("E-01").unwrap().center.x, 2.25);
        let mut noisy = event_at(&m, 1, front, car("ABC123"));
        let mut low = event_at(&m, 0, front, Detection { vehicle_present: false, plate_candidates: vec![] });
        let mut high = event_at(&m, 2, front, Detection { vehicle_present: false, plate_candidates: vec![] });
        // ±3 dB offsets on the neighbours cancel in the window mean.
        for r in &mut low.rssi_readings {
            r.rssi -= 3.0;
        }
        for r in &mut high.rssi_readings {
            r.rssi += 3.0;
        }
        noisy.detections[0].plate_candidates[0].tick = 1;
        let cfg = LocalizationConfig { reading_window: 1, ..Default::default() };
        let report = build_report(&[high, noisy, low], &registry(), &m, &cfg, None).unwrap();
        let e01 = report.stall("E-01").unwrap();
        let at = e01.evidence.ticks.iter().position(|&t| t == 1).unwrap();
        assert!(e01.evidence.positions[at].distance(front) < 1e-9);
    }

    #[test]
    fn unlocalizable_events_are_skipped() {
        let m = map();
        let mut e = event_at(&m, 0, Point2::new(1.0, 2.0), car("ABC123"));
        e.rssi_readings.truncate(2);
        let report = build_report(&[e], &registry(), &m, &LocalizationConfig::default(), None).unwrap();
        assert_eq!(report.diagnostics.skipped_events, 1);
        assert_eq!(report.stall("E-01").unwrap().status, OccupancyStatus::Empty);
    }

    #[test]
    fn tenant_off_map_aborts() {
        let r = Registry::parse_csv("apartment,name,stall_id,vehicle_type,plate,stored_goods\n1,A,Z-01,,,\n").unwrap();
        assert!(matches!(
            build_report(&[], &r, &map(), &LocalizationConfig::default(), None),
            Err(ReportError::Integrity { .. })
        ));
    }

    #[test]
    fn json_and_table() {
        let m = map();
        let report = build_report(&[], &registry(), &m, &LocalizationConfig::default(), None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["stalls"][0]["status"], "empty");
        assert_eq!(v["diagnostics"]["skipped_events"], 0);
        let back: MonitoringReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, report);
        assert_eq!(report.to_table().lines().count(), m.stalls.len() + 2);
    }
}
