//! Episode recording and replay in a fixed CSV layout.
//!
//! ```text
//! # rcm-episode schema=1 dt=2.0000000000000000e-3 config=<32 hex chars>
//! time_s,flange_px,flange_py,flange_pz,flange_qw,flange_qx,flange_qy,flange_qz,tip_x,tip_y,tip_z,cmd_mode,cmd_0,cmd_1,cmd_2,cmd_3,twist_vx,twist_vy,twist_vz,twist_wx,twist_wy,twist_wz,rcm_x,rcm_y,rcm_z
//! 0.0000000000000000e0,...
//! ```
//!
//! Every float is written with 17 significant digits in scientific notation, so
//! reading a file back yields bit-identical values and rewriting it yields
//! identical bytes. Row `k` holds the state at `time_s` together with the
//! command and twist applied during the following control period.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{pose, quat_wxyz, rotation_from_wxyz_unchecked, Pose, Twist, Vec3};
use crate::sim::SimState;
use crate::solver::{CommandMode, RateCommand, RcmConfig, ShaftCalibration};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "# rcm-episode";

pub const COLUMNS: [&str; 25] = [
    "time_s",
    "flange_px",
    "flange_py",
    "flange_pz",
    "flange_qw",
    "flange_qx",
    "flange_qy",
    "flange_qz",
    "tip_x",
    "tip_y",
    "tip_z",
    "cmd_mode",
    "cmd_0",
    "cmd_1",
    "cmd_2",
    "cmd_3",
    "twist_vx",
    "twist_vy",
    "twist_vz",
    "twist_wx",
    "twist_wy",
    "twist_wz",
    "rcm_x",
    "rcm_y",
    "rcm_z",
];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("time does not increase at row {row}")]
    NonMonotoneTime { row: usize },
    #[error("quaternion at row {row} is not unit length")]
    NonUnitQuaternion { row: usize },
    #[error("tip position at row {row} disagrees with the flange pose by {error:e} m")]
    TipInconsistent { row: usize, error: f64 },
    #[error("episode has no rows")]
    Empty,
}

impl RecordError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        RecordError::Io { path: path.to_path_buf(), source }
    }
}

/// Short fingerprint of the trocar and instrument calibration an episode was
/// recorded with.
pub fn config_fingerprint(rcm: &RcmConfig, calib: &ShaftCalibration) -> String {
    let canonical = serde_json::to_string(&(rcm, calib)).expect("plain structs serialize");
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeHeader {
    pub schema_version: u32,
    pub dt: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub time: f64,
    pub flange: Pose,
    pub tip: Vec3,
    pub command: RateCommand,
    pub twist: Twist,
    pub rcm_target: Vec3,
}

impl EpisodeRow {
    pub fn capture(state: &SimState, command: RateCommand, twist: Twist, rcm_target: Vec3) -> Self {
        Self { time: state.time, flange: state.flange, tip: state.instrument.p_tip, command, twist, rcm_target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub header: EpisodeHeader,
    pub rows: Vec<EpisodeRow>,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

impl EpisodeRecord {
    pub fn new(dt: f64, config_hash: impl Into<String>) -> Self {
        Self {
            header: EpisodeHeader { schema_version: SCHEMA_VERSION, dt, config_hash: config_hash.into() },
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.time - a.time,
            _ => 0.0,
        }
    }

    /// Structural checks shared by the writer and the reader.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.rows.is_empty() {
            return Err(RecordError::Empty);
        }
        for (i, row) in self.rows.iter().enumerate() {
            let n = row.flange.rotation.quaternion().norm();
            if !((n - 1.0).abs() <= 1e-9) {
                return Err(RecordError::NonUnitQuaternion { row: i + 1 });
            }
            if i > 0 && !(row.time > self.rows[i - 1].time) {
                return Err(RecordError::NonMonotoneTime { row: i + 1 });
            }
        }
        Ok(())
    }

    /// Checks every stored tip against the flange pose under `calib`.
    pub fn verify_tips(&self, calib: &ShaftCalibration, tol: f64) -> Result<(), RecordError> {
        for (i, row) in self.rows.iter().enumerate() {
            let (tip, _) = calib.shaft_line(&row.flange);
            let error = (tip - row.tip).norm();
            if !(error <= tol) {
                return Err(RecordError::TipInconsistent { row: i + 1, error });
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), RecordError> {
        self.validate()?;
        let mut out = BufWriter::new(out);
        writeln!(
            out,
            "{MAGIC} schema={} dt={} config={}",
            self.header.schema_version,
            fmt(self.header.dt),
            self.header.config_hash
        )?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(COLUMNS).map_err(csv_io)?;
        for row in &self.rows {
            let p = row.flange.translation.vector;
            let q = quat_wxyz(&row.flange.rotation);
            let c = row.command.values();
            let mut fields = Vec::with_capacity(COLUMNS.len());
            fields.push(fmt(row.time));
            fields.extend(p.iter().map(|v| fmt(*v)));
            fields.extend(q.iter().map(|v| fmt(*v)));
            fields.extend(row.tip.iter().map(|v| fmt(*v)));
            fields.push(row.command.mode().as_str().to_string());
            fields.extend(c.iter().map(|v| fmt(*v)));
            fields.extend(row.twist.linear.iter().map(|v| fmt(*v)));
            fields.extend(row.twist.angular.iter().map(|v| fmt(*v)));
            fields.extend(row.rcm_target.iter().map(|v| fmt(*v)));
            w.write_record(&fields).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<(), RecordError> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| RecordError::io(path, e))?;
        self.write_csv(file).map_err(|e| match e {
            RecordError::Stream(source) => RecordError::io(path, source),
            other => other,
        })
    }

    pub fn to_csv_string(&self) -> Result<String, RecordError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("writer emits ASCII"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, RecordError> {
        let mut input = BufReader::new(input);
        let mut first = String::new();
        input.read_line(&mut first)?;
        let header = parse_header(first.trim_end_matches(['\n', '\r']))?;

        let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let columns =
            reader.headers().map_err(|e| RecordError::SchemaMismatch(format!("unreadable column header: {e}")))?;
        if columns.iter().ne(COLUMNS.iter().copied()) {
            return Err(RecordError::SchemaMismatch("column names differ from the expected layout".into()));
        }

        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let row_no = i + 1;
            let rec = rec.map_err(|e| RecordError::MalformedRow { row: row_no, reason: e.to_string() })?;
            rows.push(parse_row(&rec, row_no)?);
        }
        let record = EpisodeRecord { header, rows };
        record.validate()?;
        Ok(record)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self, RecordError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| RecordError::io(path, e))?;
        Self::read_csv(file).map_err(|e| match e {
            RecordError::Stream(source) => RecordError::io(path, source),
            other => other,
        })
    }
}

fn csv_io(e: csv::Error) -> RecordError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RecordError::Stream(io),
        other => RecordError::Stream(std::io::Error::other(format!("{other:?}"))),
    }
}

fn parse_header(line: &str) -> Result<EpisodeHeader, RecordError> {
    let rest =
        line.strip_prefix(MAGIC).ok_or_else(|| RecordError::SchemaMismatch("missing episode header line".into()))?;
    let (mut schema, mut dt, mut hash) = (None, None, None);
    for kv in rest.split_whitespace() {
        match kv.split_once('=') {
            Some(("schema", v)) => schema = v.parse::<u32>().ok(),
            Some(("dt", v)) => dt = v.parse::<f64>().ok(),
            Some(("config", v)) => hash = Some(v.to_string()),
            _ => return Err(RecordError::SchemaMismatch(format!("unexpected header field `{kv}`"))),
        }
    }
    let schema_version = schema.ok_or_else(|| RecordError::SchemaMismatch("header lacks schema".into()))?;
    if schema_version != SCHEMA_VERSION {
        return Err(RecordError::SchemaMismatch(format!("schema {schema_version}, expected {SCHEMA_VERSION}")));
    }
    Ok(EpisodeHeader {
        schema_version,
        dt: dt.ok_or_else(|| RecordError::SchemaMismatch("header lacks dt".into()))?,
        config_hash: hash.ok_or_else(|| RecordError::SchemaMismatch("header lacks config".into()))?,
    })
}

fn parse_row(rec: &csv::StringRecord, row: usize) -> Result<EpisodeRow, RecordError> {
    if rec.len() != COLUMNS.len() {
        return Err(RecordError::MalformedRow {
            row,
            reason: format!("{} columns, expected {}", rec.len(), COLUMNS.len()),
        });
    }
    let num = |i: usize| -> Result<f64, RecordError> {
        rec[i].parse::<f64>().map_err(|_| RecordError::MalformedRow {
            row,
            reason: format!("column {} is not a number: `{}`", COLUMNS[i], &rec[i]),
        })
    };
    let v3 = |i: usize| -> Result<Vec3, RecordError> { Ok(Vec3::new(num(i)?, num(i + 1)?, num(i + 2)?)) };
    let mode = CommandMode::parse(&rec[11])
        .ok_or_else(|| RecordError::MalformedRow { row, reason: format!("unknown mode `{}`", &rec[11]) })?;
    let orientation = rotation_from_wxyz_unchecked([num(4)?, num(5)?, num(6)?, num(7)?]);
    Ok(EpisodeRow {
        time: num(0)?,
        flange: pose(v3(1)?, orientation),
        tip: v3(8)?,
        command: RateCommand::from_values(mode, [num(12)?, num(13)?, num(14)?, num(15)?]),
        twist: Twist::new(v3(16)?, v3(19)?),
        rcm_target: v3(22)?,
    })
}
