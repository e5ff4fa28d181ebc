//! Campaign configuration, CSV artifacts, manifests and atomic writes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::estimators::EstimatorConfig;
use crate::model::{QubitModel, SyntheticDevice};
use crate::protocol::{
    CampaignPlan, ScanGrid, Schedule, SpectroscopyMap, T1Entry, T1Protocol, T1TimeSeries,
    DEFAULT_MAX_SHIFT_MHZ, DEFAULT_POINTS_PER_DIRECTION, DEFAULT_SCAN_SHOTS, DEFAULT_TAU_US,
    DEFAULT_TONE_DETUNING_MHZ,
};
use crate::rng::SeedStream;

pub const T1_HEADER: [&str; 4] = ["qubit_id", "time_hr", "t1_us", "stderr_us"];
pub const MAP_HEADER: [&str; 5] = ["qubit_id", "time_hr", "shift_mhz", "p1", "shots"];

/// Errors from loading a config, carrying the JSON path of the bad field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

/// Compact description of a symmetric spectroscopy grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub max_shift_mhz: f64,
    pub points_per_direction: usize,
    pub tau_us: f64,
    pub shots: u64,
    pub noiseless: bool,
    pub tone_detuning_mhz: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            max_shift_mhz: DEFAULT_MAX_SHIFT_MHZ,
            points_per_direction: DEFAULT_POINTS_PER_DIRECTION,
            tau_us: DEFAULT_TAU_US,
            shots: DEFAULT_SCAN_SHOTS,
            noiseless: false,
            tone_detuning_mhz: DEFAULT_TONE_DETUNING_MHZ,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<ScanGrid> {
        if !(self.tone_detuning_mhz > 0.0) {
            return Err(invalid("tone_detuning_mhz", "must be > 0"));
        }
        let mut g = ScanGrid::symmetric(
            self.max_shift_mhz,
            self.points_per_direction,
            self.tau_us,
            self.shots,
        )?;
        g.noiseless = self.noiseless;
        g.detuning_negative = -self.tone_detuning_mhz;
        g.detuning_positive = self.tone_detuning_mhz;
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceSpec {
    Qubits(Vec<QubitModel>),
    Synthetic(SyntheticDevice),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub master_seed: u64,
    pub device: DeviceSpec,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub t1: T1Protocol,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::at(
                if path == "." {
                    "$".into()
                } else {
                    format!("$.{path}")
                },
                e.into_inner(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        match &self.device {
            DeviceSpec::Qubits(qs) => {
                if qs.is_empty() {
                    return Err(ConfigError::at(
                        "$.device.qubits",
                        "must list at least one qubit",
                    ));
                }
                for (i, q) in qs.iter().enumerate() {
                    q.validate()
                        .map_err(|e| ConfigError::at(format!("$.device.qubits[{i}]"), e))?;
                }
            }
            DeviceSpec::Synthetic(s) => s
                .validate()
                .map_err(|e| ConfigError::at("$.device.synthetic", e))?,
        }
        self.schedule
            .validate()
            .map_err(|e| ConfigError::at("$.schedule", e))?;
        self.grid
            .build()
            .map_err(|e| ConfigError::at("$.grid", e))?;
        self.t1.validate().map_err(|e| ConfigError::at("$.t1", e))?;
        self.estimator
            .validate()
            .map_err(|e| ConfigError::at("$.estimator", e))?;
        Ok(())
    }

    /// The qubits the campaign runs on. Synthetic devices draw from
    /// `master_seed` under a label separate from the campaign streams.
    pub fn qubits(&self) -> Vec<QubitModel> {
        match &self.device {
            DeviceSpec::Qubits(qs) => qs.clone(),
            DeviceSpec::Synthetic(s) => s.generate(self.device_seeds()),
        }
    }

    pub fn device_seeds(&self) -> SeedStream {
        SeedStream::new(self.master_seed).child(DEVICE_STREAM)
    }

    pub fn campaign_seeds(&self) -> SeedStream {
        SeedStream::new(self.master_seed).child(CAMPAIGN_STREAM)
    }

    pub fn plan(&self) -> Result<CampaignPlan> {
        Ok(CampaignPlan {
            schedule: self.schedule,
            grid: self.grid.build()?,
            t1: self.t1,
        })
    }

    /// Canonical serialisation; this is what gets hashed into the manifest.
    pub fn canonical_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("config serialises");
        v.push(b'\n');
        v
    }
}

const DEVICE_STREAM: u64 = 0xD0;
const CAMPAIGN_STREAM: u64 = 0xCA;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub master_seed: Option<u64>,
    /// SHA-256 of the config bytes as written next to the manifest.
    pub config_sha256: Option<String>,
    /// SHA-256 of each emitted file, keyed by file name.
    pub files: BTreeMap<String, String>,
    /// Free-form parameters echoed from the command line.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(seed: Option<u64>, config_bytes: Option<&[u8]>) -> Self {
        Self {
            tool: "tlsdyn".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: seed,
            config_sha256: config_bytes.map(sha256_hex),
            files: BTreeMap::new(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, name: &str, bytes: &[u8]) {
        self.files.insert(name.to_string(), sha256_hex(bytes));
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("manifest serialises");
        v.push(b'\n');
        v
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write via a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    invalid("csv", e.to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(field: &str, column: &'static str, line: u64) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| invalid(column, format!("line {line}: `{field}` is not a number")))
}

fn parse_opt(field: &str, column: &'static str, line: u64) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, column, line).map(Some)
    }
}

/// Map each expected column to its index, failing on any that are absent.
fn column_index<const N: usize>(
    headers: &csv::StringRecord,
    want: [&'static str; N],
) -> Result<[usize; N]> {
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(want) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| invalid(name, "missing column"))?;
    }
    Ok(out)
}

pub fn t1_csv_bytes(series: &[T1TimeSeries]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(T1_HEADER).expect("in-memory write");
    for s in series {
        for e in &s.entries {
            w.write_record([
                s.qubit_id.clone(),
                e.time_hr.to_string(),
                fmt_opt(e.t1_us),
                fmt_opt(e.stderr_us),
            ])
            .expect("in-memory write");
        }
    }
    w.into_inner().expect("in-memory flush")
}

pub fn read_t1_csv(reader: impl Read) -> Result<Vec<T1TimeSeries>> {
    let mut r = csv::Reader::from_reader(reader);
    let [id, time, t1, se] = column_index(r.headers().map_err(csv_err)?, T1_HEADER)?;
    let mut out: Vec<T1TimeSeries> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let qid = &rec[id];
        let entry = T1Entry {
            time_hr: parse_f64(&rec[time], "time_hr", line)?,
            t1_us: parse_opt(&rec[t1], "t1_us", line)?,
            stderr_us: parse_opt(&rec[se], "stderr_us", line)?,
        };
        match out.iter_mut().find(|s| s.qubit_id == qid) {
            Some(s) => s.entries.push(entry),
            None => out.push(T1TimeSeries {
                qubit_id: qid.to_string(),
                entries: vec![entry],
            }),
        }
    }
    for s in &out {
        s.validate()?;
    }
    Ok(out)
}

pub fn map_csv_bytes(maps: &[SpectroscopyMap]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MAP_HEADER).expect("in-memory write");
    for m in maps {
        let shots = m.grid.shots.to_string();
        for (t, row) in m.times.iter().zip(&m.p1) {
            let t = t.to_string();
            for (s, p) in m.grid.shifts.iter().zip(row) {
                w.write_record([
                    m.qubit_id.as_str(),
                    &t,
                    &s.to_string(),
                    &fmt_opt(*p),
                    &shots,
                ])
                .expect("in-memory write");
            }
        }
    }
    w.into_inner().expect("in-memory flush")
}

/// Parse a map CSV. The delay `tau` and tone detunings are not part of the
/// file; the defaults are used for detunings and `tau` is supplied here.
pub fn read_map_csv(reader: impl Read, tau: f64) -> Result<Vec<SpectroscopyMap>> {
    struct Partial {
        id: String,
        shots: u64,
        times: Vec<f64>,
        shifts: Vec<f64>,
        rows: Vec<Vec<Option<f64>>>,
        cursor: usize,
    }
    let mut r = csv::Reader::from_reader(reader);
    let [id, time, shift, p1, shots] = column_index(r.headers().map_err(csv_err)?, MAP_HEADER)?;
    let mut parts: Vec<Partial> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let qid = &rec[id];
        let t = parse_f64(&rec[time], "time_hr", line)?;
        let s = parse_f64(&rec[shift], "shift_mhz", line)?;
        let p = parse_opt(&rec[p1], "p1", line)?;
        let n: u64 = rec[shots].trim().parse().map_err(|_| {
            invalid(
                "shots",
                format!("line {line}: `{}` is not a count", &rec[shots]),
            )
        })?;
        let idx = match parts.iter().position(|m| m.id == qid) {
            Some(i) => i,
            None => {
                parts.push(Partial {
                    id: qid.to_string(),
                    shots: n,
                    times: Vec::new(),
                    shifts: Vec::new(),
                    rows: Vec::new(),
                    cursor: 0,
                });
                parts.len() - 1
            }
        };
        let m = &mut parts[idx];
        if n != m.shots {
            return Err(invalid(
                "shots",
                format!("line {line}: shots must be constant per qubit"),
            ));
        }
        let new_slice = m.times.last() != Some(&t);
        if new_slice {
            if m.rows.len() > 1 && m.cursor != m.shifts.len() {
                return Err(invalid(
                    "shift_mhz",
                    format!("line {line}: previous slice is incomplete"),
                ));
            }
            m.times.push(t);
            m.rows.push(Vec::new());
            m.cursor = 0;
        }
        if m.rows.len() == 1 {
            m.shifts.push(s);
        } else if m.shifts.get(m.cursor) != Some(&s) {
            return Err(invalid(
                "shift_mhz",
                format!("line {line}: shift {s} does not match the first slice"),
            ));
        }
        m.cursor += 1;
        m.rows.last_mut().expect("slice pushed above").push(p);
    }
    parts
        .into_iter()
        .map(|m| {
            let grid = ScanGrid {
                shifts: m.shifts,
                tau,
                shots: m.shots,
                noiseless: false,
                detuning_negative: -DEFAULT_TONE_DETUNING_MHZ,
                detuning_positive: DEFAULT_TONE_DETUNING_MHZ,
            };
            let map = SpectroscopyMap {
                qubit_id: m.id,
                times: m.times,
                grid,
                p1: m.rows,
            };
            map.validate()?;
            Ok(map)
        })
        .collect()
}
