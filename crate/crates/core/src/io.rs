//! File formats: state JSON, coincidence-table JSON, counts JSON,
//! calibration JSON, timestamp CSV, and analysis-report JSON.
//!
//! Complex numbers serialize as two-element [re, im] arrays. Channel keys
//! appear in the fixed Alice-major order of
//! [`CoincidenceTable::CHANNEL_KEYS`]; floats go through serde_json's
//! shortest round-trip encoding, so every file reads back bit-identical.

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

use crate::correlations::AnalysisReport;
use crate::countsim::{
    CalibrationRecord, CountError, CountsRecord, TimestampEvent, TimestampStream,
};
use crate::optics::{CoincidenceTable, OpticsError, TableKind};
use crate::states::{CMat4, PolarizationState, StateError};

/// Canonical basis tag written into every state file.
pub const BASIS_TAG: &str = "HH,HV,VH,VV";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Table(#[from] OpticsError),
    #[error(transparent)]
    Counts(#[from] CountError),
}

// ---------------------------------------------------------------------------
// Polarization state JSON: { "basis", "rho": 4x4 of [re, im], "label" }

#[derive(Serialize, Deserialize)]
struct StateWire {
    basis: String,
    rho: [[[f64; 2]; 4]; 4],
    label: String,
}

pub fn state_to_json(state: &PolarizationState) -> String {
    let mut rho = [[[0.0; 2]; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let z = state.rho()[(r, c)];
            rho[r][c] = [z.re, z.im];
        }
    }
    let wire = StateWire {
        basis: BASIS_TAG.to_string(),
        rho,
        label: state.label().unwrap_or_default().to_string(),
    };
    serde_json::to_string_pretty(&wire).expect("state serialization")
}

pub fn state_from_json(text: &str) -> Result<PolarizationState, IoError> {
    let wire: StateWire = serde_json::from_str(text)?;
    if wire.basis != BASIS_TAG {
        return Err(IoError::Schema(format!(
            "unsupported basis '{}', expected '{BASIS_TAG}'",
            wire.basis
        )));
    }
    let mut rho = CMat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            rho[(r, c)] = num_complex::Complex64::new(wire.rho[r][c][0], wire.rho[r][c][1]);
        }
    }
    let state = PolarizationState::new(rho)?;
    Ok(if wire.label.is_empty() {
        state
    } else {
        state.with_label(wire.label)
    })
}

pub fn write_state(path: impl AsRef<Path>, state: &PolarizationState) -> Result<(), IoError> {
    Ok(fs::write(path, state_to_json(state) + "\n")?)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<PolarizationState, IoError> {
    state_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Coincidence table JSON: 16 channel keys, "kind", optional "singles".

fn serialize_singles<S: SerializeMap>(map: &mut S, singles: &[f64; 8]) -> Result<(), S::Error> {
    let ordered: Vec<(&str, f64)> = CoincidenceTable::DETECTOR_KEYS
        .iter()
        .zip(singles)
        .map(|(k, &v)| (*k, v))
        .collect();
    map.serialize_entry("singles", &OrderedPairs(ordered))
}

struct OrderedPairs<'a>(Vec<(&'a str, f64)>);

impl Serialize for OrderedPairs<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for CoincidenceTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries = 17 + usize::from(self.singles().is_some());
        let mut map = serializer.serialize_map(Some(entries))?;
        for (key, value) in Self::CHANNEL_KEYS.iter().zip(self.values()) {
            map.serialize_entry(key, value)?;
        }
        map.serialize_entry(
            "kind",
            match self.kind() {
                TableKind::Probability => "probability",
                TableKind::Count => "count",
            },
        )?;
        if let Some(singles) = self.singles() {
            serialize_singles(&mut map, singles)?;
        }
        map.end()
    }
}

fn channels_from_map<E: serde::de::Error>(
    map: &serde_json::Map<String, serde_json::Value>,
) -> Result<[f64; 16], E> {
    let mut values = [0.0; 16];
    for (slot, key) in values.iter_mut().zip(CoincidenceTable::CHANNEL_KEYS) {
        *slot = map
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| E::custom(format!("missing or non-numeric channel '{key}'")))?;
    }
    Ok(values)
}

fn singles_from_value<E: serde::de::Error>(value: &serde_json::Value) -> Result<[f64; 8], E> {
    let map = value
        .as_object()
        .ok_or_else(|| E::custom("'singles' must be an object"))?;
    let mut singles = [0.0; 8];
    for (slot, key) in singles.iter_mut().zip(CoincidenceTable::DETECTOR_KEYS) {
        *slot = map
            .get(key)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| E::custom(format!("missing or non-numeric detector '{key}'")))?;
    }
    Ok(singles)
}

impl<'de> Deserialize<'de> for CoincidenceTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let map = serde_json::Map::deserialize(deserializer)?;
        let values = channels_from_map::<D::Error>(&map)?;
        let kind = map
            .get("kind")
            .and_then(|v| v.as_str())
            .ok_or_else(|| D::Error::custom("missing 'kind'"))?;
        let singles = map
            .get("singles")
            .map(singles_from_value::<D::Error>)
            .transpose()?;
        match kind {
            "probability" => {
                CoincidenceTable::from_probabilities(values, singles).map_err(D::Error::custom)
            }
            "count" => {
                let singles =
                    singles.ok_or_else(|| D::Error::custom("count tables require 'singles'"))?;
                CoincidenceTable::from_counts(values, singles).map_err(D::Error::custom)
            }
            other => Err(D::Error::custom(format!("unknown table kind '{other}'"))),
        }
    }
}

pub fn table_to_json(table: &CoincidenceTable) -> String {
    serde_json::to_string_pretty(table).expect("table serialization")
}

pub fn table_from_json(text: &str) -> Result<CoincidenceTable, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_table(path: impl AsRef<Path>, table: &CoincidenceTable) -> Result<(), IoError> {
    Ok(fs::write(path, table_to_json(table) + "\n")?)
}

pub fn read_table(path: impl AsRef<Path>) -> Result<CoincidenceTable, IoError> {
    table_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Counts record JSON: 16 channel keys, "singles", "duration", flags.

impl Serialize for CountsRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(20))?;
        for (key, value) in CoincidenceTable::CHANNEL_KEYS.iter().zip(self.values()) {
            map.serialize_entry(key, value)?;
        }
        serialize_singles(&mut map, self.singles())?;
        map.serialize_entry("duration", &self.duration)?;
        map.serialize_entry("accidental_corrected", &self.accidental_corrected)?;
        map.serialize_entry("normalized", &self.normalized)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for CountsRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let map = serde_json::Map::deserialize(deserializer)?;
        let values = channels_from_map::<D::Error>(&map)?;
        let singles = map
            .get("singles")
            .map(singles_from_value::<D::Error>)
            .transpose()?
            .ok_or_else(|| D::Error::custom("missing 'singles'"))?;
        let duration = map
            .get("duration")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| D::Error::custom("missing 'duration'"))?;
        let accidental_corrected = map
            .get("accidental_corrected")
            .and_then(|v| v.as_bool())
            .ok_or_else(|| D::Error::custom("missing 'accidental_corrected'"))?;
        let normalized = map
            .get("normalized")
            .and_then(|v| v.as_bool())
            .ok_or_else(|| D::Error::custom("missing 'normalized'"))?;
        if normalized && !accidental_corrected {
            return Err(D::Error::custom(
                "normalized counts must be corrected first",
            ));
        }
        Ok(CountsRecord {
            coincidences: CoincidenceTable::from_counts(values, singles)
                .map_err(D::Error::custom)?,
            duration,
            accidental_corrected,
            normalized,
        })
    }
}

pub fn counts_to_json(record: &CountsRecord) -> String {
    serde_json::to_string_pretty(record).expect("counts serialization")
}

pub fn counts_from_json(text: &str) -> Result<CountsRecord, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_counts(path: impl AsRef<Path>, record: &CountsRecord) -> Result<(), IoError> {
    Ok(fs::write(path, counts_to_json(record) + "\n")?)
}

pub fn read_counts(path: impl AsRef<Path>) -> Result<CountsRecord, IoError> {
    counts_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Calibration JSON: 16 channel keys plus "source_tag".

impl Serialize for CalibrationRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(17))?;
        for (key, value) in CoincidenceTable::CHANNEL_KEYS
            .iter()
            .zip(self.relative_efficiency())
        {
            map.serialize_entry(key, value)?;
        }
        map.serialize_entry("source_tag", self.source_tag())?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for CalibrationRecord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let map = serde_json::Map::deserialize(deserializer)?;
        let factors = channels_from_map::<D::Error>(&map)?;
        let tag = map
            .get("source_tag")
            .and_then(|v| v.as_str())
            .ok_or_else(|| D::Error::custom("missing 'source_tag'"))?;
        CalibrationRecord::new(factors, tag).map_err(D::Error::custom)
    }
}

pub fn calibration_to_json(cal: &CalibrationRecord) -> String {
    serde_json::to_string_pretty(cal).expect("calibration serialization")
}

pub fn calibration_from_json(text: &str) -> Result<CalibrationRecord, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_calibration(path: impl AsRef<Path>, cal: &CalibrationRecord) -> Result<(), IoError> {
    Ok(fs::write(path, calibration_to_json(cal) + "\n")?)
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<CalibrationRecord, IoError> {
    calibration_from_json(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Timestamp CSV: header "detector,timestamp_ns", ascending timestamps.

pub fn write_timestamps(path: impl AsRef<Path>, stream: &TimestampStream) -> Result<(), IoError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["detector", "timestamp_ns"])?;
    for event in &stream.events {
        writer.write_record([event.detector.to_string(), event.timestamp_ns.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_timestamps(path: impl AsRef<Path>) -> Result<TimestampStream, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "detector" || &headers[1] != "timestamp_ns" {
        return Err(IoError::Schema(format!(
            "timestamp CSV header must be 'detector,timestamp_ns', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut events = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |field: &str, name: &str| {
            field
                .parse::<u64>()
                .map_err(|_| IoError::Schema(format!("row {}: invalid {name} '{field}'", line + 2)))
        };
        let detector = parse(&record[0], "detector")? as u8;
        let timestamp_ns = parse(&record[1], "timestamp_ns")?;
        events.push(TimestampEvent {
            detector,
            timestamp_ns,
        });
    }
    Ok(TimestampStream { events })
}

// ---------------------------------------------------------------------------
// Analysis report JSON.

pub fn report_to_json(report: &AnalysisReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialization")
}

pub fn write_report(path: impl AsRef<Path>, report: &AnalysisReport) -> Result<(), IoError> {
    Ok(fs::write(path, report_to_json(report) + "\n")?)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<AnalysisReport, IoError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Either file the analyze pipeline accepts: an exact probability table
/// (from the analytic simulator) or a counts record (from a measurement run).
#[derive(Debug, Clone, PartialEq)]
pub enum TableFile {
    Probability(CoincidenceTable),
    Counts(CountsRecord),
}

/// Sniff a JSON file: counts records carry a "duration" key, bare tables a
/// "kind" key.
pub fn read_table_file(path: impl AsRef<Path>) -> Result<TableFile, IoError> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let object = value
        .as_object()
        .ok_or_else(|| IoError::Schema("expected a JSON object".into()))?;
    if object.contains_key("duration") {
        Ok(TableFile::Counts(counts_from_json(&text)?))
    } else if object.contains_key("kind") {
        Ok(TableFile::Probability(table_from_json(&text)?))
    } else {
        Err(IoError::Schema(
            "file is neither a counts record nor a coincidence table".into(),
        ))
    }
}
