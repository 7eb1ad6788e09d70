//! Tenant registry persisted as CSV, plus owner lookup by plate.

mod lookup;

pub use lookup::{
    query_owner, BackendConfig, FixtureBackend, LookupBackend, LookupConfig, LookupError,
    LookupOutcome, OwnerClient, OwnerRecord, OwnerSource, SocketBackend, StubServer,
    DEFAULT_LOOKUP_DEADLINE,
};

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plates::{is_valid_plate, normalize_plate};

pub const REGISTRY_HEADER: [&str; 6] =
    ["apartment", "name", "stall_id", "vehicle_type", "plate", "stored_goods"];

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("registry line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("registry integrity: duplicate {field} {value:?}")]
    Integrity { field: &'static str, value: String },
    #[error("registry io: {0}")]
    Io(#[from] io::Error),
}

/// One tenant row. `plate` is empty for a stall with no registered vehicle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TenantRecord {
    pub apartment: String,
    pub name: String,
    pub stall_id: String,
    pub vehicle_type: String,
    pub plate: String,
    pub stored_goods: Vec<String>,
}

/// Immutable after construction; lookups are exact string matches.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    records: Vec<TenantRecord>,
    by_plate: HashMap<String, usize>,
    by_stall: HashMap<String, usize>,
}

impl Registry {
    pub fn new(records: Vec<TenantRecord>) -> Result<Self, RegistryError> {
        let mut by_plate = HashMap::new();
        let mut by_stall = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if by_stall.insert(r.stall_id.clone(), i).is_some() {
                return Err(RegistryError::Integrity { field: "stall_id", value: r.stall_id.clone() });
            }
            if !r.plate.is_empty() && by_plate.insert(r.plate.clone(), i).is_some() {
                return Err(RegistryError::Integrity { field: "plate", value: r.plate.clone() });
            }
        }
        Ok(Self { records, by_plate, by_stall })
    }

    pub fn records(&self) -> &[TenantRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn find_by_plate(&self, plate: &str) -> Option<&TenantRecord> {
        self.by_plate.get(plate).map(|&i| &self.records[i])
    }

    pub fn find_by_stall(&self, stall_id: &str) -> Option<&TenantRecord> {
        self.by_stall.get(stall_id).map(|&i| &self.records[i])
    }

    pub fn parse_csv(text: &str) -> Result<Self, RegistryError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| RegistryError::Parse { line: 1, msg: e.to_string() })?;
        if header.iter().map(str::trim).ne(REGISTRY_HEADER) {
            return Err(RegistryError::Parse {
                line: 1,
                msg: format!("expected header {:?}", REGISTRY_HEADER.join(",")),
            });
        }

        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| RegistryError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = row.position().map_or(0, |p| p.line());
            let raw_plate = row[4].trim();
            let plate = normalize_plate(raw_plate);
            if !plate.is_empty() && !is_valid_plate(&plate) {
                return Err(RegistryError::Parse {
                    line,
                    msg: format!("plate {raw_plate:?} is not six alphanumeric characters"),
                });
            }
            let stall_id = row[2].trim().to_string();
            if stall_id.is_empty() {
                return Err(RegistryError::Parse { line, msg: "empty stall_id".into() });
            }
            records.push(TenantRecord {
                apartment: row[0].trim().to_string(),
                name: row[1].trim().to_string(),
                stall_id,
                vehicle_type: row[3].trim().to_string(),
                plate,
                stored_goods: row[5]
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            });
        }
        Self::new(records)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REGISTRY_HEADER).expect("writing to memory");
        for r in &self.records {
            let goods = r.stored_goods.join(";");
            w.write_record([
                r.apartment.as_str(),
                &r.name,
                &r.stall_id,
                &r.vehicle_type,
                &r.plate,
                &goods,
            ])
            .expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
    }
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry, RegistryError> {
    Registry::parse_csv(&fs::read_to_string(path)?)
}

pub fn save_registry(registry: &Registry, path: impl AsRef<Path>) -> Result<(), RegistryError> {
    Ok(fs::write(path, registry.to_csv())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ROWS: &str = "apartment,name,stall_id,vehicle_type,plate,stored_goods\n\
        101,Ana Quispe,E-01,sedan,abc-123,bicycle;tires\n\
        102,Luis Rojas,E-07,suv,DEF456,\n";

    #[test]
    fn loads_rows() {
        let reg = Registry::parse_csv(TWO_ROWS).unwrap();
        assert_eq!(reg.len(), 2);
        let r = reg.find_by_plate("ABC123").unwrap();
        assert_eq!(r.stall_id, "E-01");
        assert_eq!(r.stored_goods, ["bicycle", "tires"]);
        assert_eq!(reg.find_by_stall("E-07").unwrap().name, "Luis Rojas");
        assert!(reg.find_by_plate("ZZZ999").is_none());
        assert!(reg.find_by_stall("E-99").is_none());
    }

    #[test]
    fn header_only_is_empty() {
        let reg = Registry::parse_csv("apartment,name,stall_id,vehicle_type,plate,stored_goods\n").unwrap();
        assert!(reg.is_empty());
    }

    #[test]
    fn duplicate_plate_is_integrity_error() {
        let text = format!("{TWO_ROWS}103,Eva Soto,E-02,sedan,ABC123,\n");
        let err = Registry::parse_csv(&text).unwrap_err();
        assert!(matches!(err, RegistryError::Integrity { field: "plate", .. }));
        assert!(err.to_string().contains("ABC123"));
    }

    #[test]
    fn duplicate_stall_is_integrity_error() {
        let text = format!("{TWO_ROWS}103,Eva Soto,E-01,,,\n");
        assert!(matches!(
            Registry::parse_csv(&text),
            Err(RegistryError::Integrity { field: "stall_id", .. })
        ));
    }

    #[test]
    fn empty_plates_do_not_collide() {
        let text = "apartment,name,stall_id,vehicle_type,plate,stored_goods\n1,A,E-01,,,\n2,B,E-02,,,\n";
        assert_eq!(Registry::parse_csv(text).unwrap().len(), 2);
    }

    #[test]
    fn parse_errors_carry_line() {
        let bad_plate = format!("{TWO_ROWS}103,Eva Soto,E-03,sedan,AB12,\n");
        assert!(matches!(Registry::parse_csv(&bad_plate), Err(RegistryError::Parse { line: 4, .. })));
        let short_row = "apartment,name,stall_id,vehicle_type,plate,stored_goods\n1,A,E-01\n";
        assert!(matches!(Registry::parse_csv(short_row), Err(RegistryError::Parse { line: 2, .. })));
        assert!(matches!(Registry::parse_csv("a,b\n"), Err(RegistryError::Parse { line: 1, .. })));
    }

    #[test]
    fn save_load_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tenants.csv");
        let reg = Registry::parse_csv(TWO_ROWS).unwrap();
        save_registry(&reg, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let again = load_registry(&path).unwrap();
        assert_eq!(again.records(), reg.records());
        save_registry(&again, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
    }
}
