//! Trajectory CSV and run metadata.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Overrides, RunConfig};
use crate::scenario::{TrajectoryRecord, CHANNELS};

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError { path: path.to_owned(), source }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WriteSummary {
    pub path: PathBuf,
    pub rows: usize,
}

/// Render with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write every `decimation`-th record (starting with the first) as CSV.
pub fn write_trajectory(
    records: &[TrajectoryRecord],
    path: &Path,
    decimation: usize,
) -> Result<WriteSummary, OutputError> {
    let invalid = |msg: &str| OutputError {
        path: path.to_owned(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidInput, msg.to_owned()),
    };
    if records.is_empty() {
        return Err(invalid("no records to write"));
    }
    if decimation == 0 {
        return Err(invalid("decimation must be at least 1"));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let to_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::other(format!("{other:?}")),
    };
    w.write_record(CHANNELS).map_err(to_io).map_err(io_err(path))?;
    let mut rows = 0;
    for r in records.iter().step_by(decimation) {
        w.write_record(r.channels().map(format_value)).map_err(to_io).map_err(io_err(path))?;
        rows += 1;
    }
    w.flush().map_err(io_err(path))?;
    Ok(WriteSummary { path: path.to_owned(), rows })
}

/// Read a trajectory CSV back as rows of [`CHANNELS`] values.
pub fn read_trajectory(path: &Path) -> Result<Vec<[f64; 20]>, OutputError> {
    let bad = |msg: String| OutputError {
        path: path.to_owned(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, msg),
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().ne(CHANNELS) {
        return Err(bad(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut row = [0.0; 20];
        for (j, field) in rec.iter().enumerate() {
            row[j] = field
                .parse()
                .map_err(|_| bad(format!("row {}: column {} is not a number: {field:?}", i + 2, CHANNELS[j])))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub version: &'static str,
    pub config_path: Option<PathBuf>,
    pub config_sha256: String,
    pub formulation: String,
    pub hydrostatics: crate::hydrostatics::HydrostaticsMode,
    pub dt: f64,
    pub duration: f64,
    pub decimate: usize,
    pub rows: usize,
    pub overrides: Overrides,
    pub notes: Vec<String>,
    /// Error that ended the run early, if any.
    pub failure: Option<String>,
}

impl RunMetadata {
    pub fn new(cfg: &RunConfig, config_path: Option<&Path>, config_text: &str, overrides: &Overrides) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            config_path: config_path.map(Path::to_owned),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            formulation: cfg.formulation.to_string(),
            hydrostatics: cfg.hydrostatics,
            dt: cfg.scenario.dt,
            duration: cfg.scenario.duration,
            decimate: cfg.decimate,
            rows: 0,
            overrides: overrides.clone(),
            notes: cfg.notes.clone(),
            failure: None,
        }
    }
}

/// `run.csv` -> `run.meta.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), OutputError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| OutputError {
        path: path.to_owned(),
        source: std::io::Error::other(e),
    })?;
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, REMUS100};
    use crate::scenario::run_scenario;

    fn records(duration: f64) -> Vec<TrajectoryRecord> {
        let mut cfg = parse_config(REMUS100).unwrap();
        cfg.scenario.duration = duration;
        run_scenario(&cfg.model().unwrap(), &cfg.scenario).into_result().unwrap()
    }

    #[test]
    fn two_records_three_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let s = write_trajectory(&records(0.01), &path, 1).unwrap();
        assert_eq!(s.rows, 2);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(!text.contains('\r'));
        assert!(text.starts_with("t,x,y,z,phi,theta,psi,u,v,w,p,q,r,x_p,vpx,vpy,vpz,tau_X,tau_Xp,kinetic\n"));
    }

    #[test]
    fn decimation_arithmetic() {
        let recs = vec![records(0.01)[0]; 50_001];
        let dir = tempfile::tempdir().unwrap();
        let s = write_trajectory(&recs, &dir.path().join("d.csv"), 10).unwrap();
        assert_eq!(s.rows, 5_001);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let recs = records(1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_trajectory(&recs, &path, 1).unwrap();
        let rows = read_trajectory(&path).unwrap();
        assert_eq!(rows.len(), recs.len());
        for (row, r) in rows.iter().zip(&recs) {
            assert_eq!(row[0].to_bits(), r.t.to_bits());
            assert_eq!(row[3].to_bits(), r.eta[2].to_bits());
            assert_eq!(*row, r.channels());
        }
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_value(0.1), "1.0000000000000001e-1");
        assert_eq!(format_value(1.0).parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_trajectory(&records(0.01), &blocker.join("out.csv"), 1).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
        assert!(write_trajectory(&[], &dir.path().join("e.csv"), 1).is_err());
    }

    #[test]
    fn metadata_records_hash_and_overrides() {
        let cfg = parse_config(REMUS100).unwrap();
        let o = Overrides { dt: Some(0.02), ..Default::default() };
        let m = RunMetadata::new(&cfg, None, REMUS100, &o);
        assert_eq!(m.config_sha256.len(), 64);
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["overrides"]["dt"], 0.02);
        assert_eq!(json["formulation"], "newton-euler");
        assert_eq!(metadata_path(Path::new("a/run.csv")), PathBuf::from("a/run.meta.json"));
    }
}
