//! CSV pose files with JSON sidecars, dataset directories and manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrajectoryRecord;
use crate::error::{BiltsError, Result};
use crate::se3::Pose;

pub const CSV_HEADER: [&str; 8] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"];
/// Largest tolerated deviation of a stored quaternion from unit norm.
pub const UNIT_TOLERANCE: f64 = 1e-6;
pub const SCHEMA_VERSION: &str = "1";
pub const MANIFEST_NAME: &str = "manifest.json";

/// Sidecar metadata stored next to each pose file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub class: String,
    pub context: String,
    pub trial: usize,
    pub dt: f64,
    pub seed: u64,
}

const SIDECAR_FIELDS: [&str; 5] = ["class", "context", "trial", "dt", "seed"];

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Relative location of a record inside a dataset directory.
pub fn record_path(class: &str, context: &str, trial: usize) -> PathBuf {
    Path::new(class).join(context).join(format!("trial_{trial}.csv"))
}

fn csv_text(record: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(record.poses.len() * 160);
    out.push_str(&CSV_HEADER.join(","));
    out.push('\n');
    let mut prev: Option<Quaternion<f64>> = None;
    for (k, p) in record.poses.iter().enumerate() {
        let mut q = p.quaternion().into_inner();
        if let Some(pq) = prev
            && pq.coords.dot(&q.coords) < 0.0 {
                q = -q;
            }
        prev = Some(q);
        let t = k as f64 * record.dt;
        let v = [t, p.translation.x, p.translation.y, p.translation.z, q.w, q.i, q.j, q.k];
        let fields: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes `<path>` and its sidecar.
pub fn write_record(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| BiltsError::io(dir, e))?;
    }
    fs::write(path, csv_text(record)).map_err(|e| BiltsError::io(path, e))?;
    let sc = sidecar_path(path);
    let json = serde_json::to_string_pretty(&record.sidecar()).expect("sidecar serializes");
    fs::write(&sc, json + "\n").map_err(|e| BiltsError::io(&sc, e))
}

fn parse_poses(path: &Path) -> Result<(Vec<f64>, Vec<Pose>)> {
    let file = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => BiltsError::io(path, io),
            other => BiltsError::Parse { file: file.clone(), line: 1, message: format!("{other:?}") },
        })?;
    let headers = rdr
        .headers()
        .map_err(|e| BiltsError::Parse { file: file.clone(), line: 1, message: e.to_string() })?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got.iter().all(|h| h.is_empty()) {
        return Err(BiltsError::Parse { file, line: 1, message: "empty file".into() });
    }
    let missing: Vec<&str> = CSV_HEADER.iter().copied().filter(|h| !got.contains(h)).collect();
    if !missing.is_empty() {
        return Err(BiltsError::Schema { file, message: format!("missing columns: {}", missing.join(", ")) });
    }
    let col = |name: &str| got.iter().position(|h| *h == name).unwrap();
    let idx: Vec<usize> = CSV_HEADER.iter().map(|h| col(h)).collect();

    let mut times = Vec::new();
    let mut poses = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            BiltsError::Parse { file: file.clone(), line, message: e.to_string() }
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut v = [0.0; 8];
        for (c, (slot, &i)) in v.iter_mut().zip(&idx).enumerate() {
            let field = row.get(i).unwrap_or("");
            *slot = field.parse::<f64>().map_err(|_| BiltsError::Parse {
                file: file.clone(),
                line,
                message: format!("column {} holds non-numeric value {field:?}", CSV_HEADER[c]),
            })?;
            if !slot.is_finite() {
                return Err(BiltsError::Parse { file: file.clone(), line, message: format!("non-finite value {field:?}") });
            }
        }
        let q = Quaternion::new(v[4], v[5], v[6], v[7]);
        let dev = (q.norm() - 1.0).abs();
        if dev > UNIT_TOLERANCE {
            return Err(BiltsError::Schema {
                file: file.clone(),
                message: format!("line {line}: rotation is not orthonormal (quaternion norm off by {dev:e})"),
            });
        }
        times.push(v[0]);
        poses.push(Pose::from_quaternion(&UnitQuaternion::from_quaternion(q), Vector3::new(v[1], v[2], v[3])));
    }
    Ok((times, poses))
}

fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    let sc = sidecar_path(path);
    if !sc.exists() {
        return Ok(None);
    }
    let file = sc.display().to_string();
    let text = fs::read_to_string(&sc).map_err(|e| BiltsError::io(&sc, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| BiltsError::Parse {
        file: file.clone(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let missing: Vec<&str> = SIDECAR_FIELDS.iter().copied().filter(|f| value.get(f).is_none()).collect();
    if !missing.is_empty() {
        return Err(BiltsError::Schema { file, message: format!("missing fields: {}", missing.join(", ")) });
    }
    serde_json::from_value(value)
        .map(Some)
        .map_err(|e| BiltsError::Schema { file, message: e.to_string() })
}

/// Reads a pose file. Without a sidecar the sample period comes from the time
/// column and the labels from the file name.
pub fn read_record(path: &Path) -> Result<TrajectoryRecord> {
    if !path.exists() {
        return Err(BiltsError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "file not found")));
    }
    let (times, poses) = parse_poses(path)?;
    let file = path.display().to_string();
    if poses.len() < 2 {
        return Err(BiltsError::Schema { file, message: format!("need at least 2 poses, found {}", poses.len()) });
    }
    let meta = match read_sidecar(path)? {
        Some(m) => m,
        None => Sidecar {
            class: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "unlabeled".into()),
            context: "unlabeled".into(),
            trial: 0,
            dt: times[1] - times[0],
            seed: 0,
        },
    };
    if !(meta.dt > 0.0) || !meta.dt.is_finite() {
        return Err(BiltsError::Schema { file, message: format!("dt must be positive, got {}", meta.dt) });
    }
    Ok(TrajectoryRecord {
        class: meta.class,
        context: meta.context,
        trial: meta.trial,
        dt: meta.dt,
        seed: meta.seed,
        poses,
    })
}

/// Loads every pose file below `root`, ordered by class, context and trial.
pub fn load_dataset(root: &Path) -> Result<Vec<TrajectoryRecord>> {
    if !root.is_dir() {
        return Err(BiltsError::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found")));
    }
    let mut records = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| BiltsError::io(root, e.into()))?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|e| e == "csv") {
            records.push(read_record(entry.path())?);
        }
    }
    records.sort_by(|a, b| (&a.class, &a.context, a.trial).cmp(&(&b.class, &b.context, b.trial)));
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub class: String,
    pub context: String,
    pub trial: usize,
    pub sha256: String,
}

/// Index of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: String,
    pub library_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub records: Vec<ManifestEntry>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| BiltsError::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_all(dir: &Path, records: &[TrajectoryRecord], seed: u64, config: &serde_json::Value) -> Result<Manifest> {
    let mut entries = Vec::with_capacity(records.len());
    for r in records {
        let rel = record_path(&r.class, &r.context, r.trial);
        let full = dir.join(&rel);
        write_record(r, &full)?;
        entries.push(ManifestEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            class: r.class.clone(),
            context: r.context.clone(),
            trial: r.trial,
            sha256: sha256_file(&full)?,
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION.into(),
        library_version: crate::VERSION.into(),
        seed,
        config: config.clone(),
        records: entries,
    };
    let mpath = dir.join(MANIFEST_NAME);
    let mut f = fs::File::create(&mpath).map_err(|e| BiltsError::io(&mpath, e))?;
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    f.write_all(text.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(|e| BiltsError::io(&mpath, e))?;
    Ok(manifest)
}

/// Writes a dataset into `root`, which must be absent or empty. Files are
/// staged next to `root` and moved into place only when all writes succeed.
pub fn write_dataset(root: &Path, records: &[TrajectoryRecord], seed: u64, config: &serde_json::Value) -> Result<Manifest> {
    if root.exists() {
        let mut it = fs::read_dir(root).map_err(|e| BiltsError::io(root, e))?;
        if it.next().is_some() {
            return Err(BiltsError::io(
                root,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output directory is not empty"),
            ));
        }
    }
    let name = root.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into());
    let staging = root.with_file_name(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| BiltsError::io(&staging, e))?;
    }
    match write_all(&staging, records, seed, config) {
        Ok(manifest) => {
            if root.exists() {
                fs::remove_dir(root).map_err(|e| BiltsError::io(root, e))?;
            }
            fs::rename(&staging, root).map_err(|e| {
                let _ = fs::remove_dir_all(&staging);
                BiltsError::io(root, e)
            })?;
            Ok(manifest)
        }
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::rotation_about;

    fn record() -> TrajectoryRecord {
        TrajectoryRecord {
            class: "circular".into(),
            context: "original".into(),
            trial: 2,
            dt: 0.01,
            seed: 7,
            poses: (0..5)
                .map(|k| Pose::new(rotation_about(&Vector3::new(0.1, 0.2, 1.0), 0.7 * k as f64), Vector3::new(0.1 * k as f64, -1.0 / 3.0, 2.0)))
                .collect(),
        }
    }

    #[test]
    fn roundtrip_preserves_poses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/trial_2.csv");
        let r = record();
        write_record(&r, &path).unwrap();
        let back = read_record(&path).unwrap();
        assert_eq!(back.class, r.class);
        assert_eq!(back.trial, 2);
        assert_eq!(back.seed, 7);
        for (a, b) in r.poses.iter().zip(&back.poses) {
            assert!((a.rotation - b.rotation).amax() < 1e-15);
            assert_eq!(a.translation, b.translation);
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "t,px,py,pz,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n0.1,abc,0,0,1,0,0,0\n").unwrap();
        match read_record(&path) {
            Err(BiltsError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_unit_rotation_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "t,px,py,pz,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n0.1,0,0,0,1.001,0,0,0\n").unwrap();
        assert!(matches!(read_record(&path), Err(BiltsError::Schema { .. })));
    }

    #[test]
    fn sidecar_missing_fields_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_record(&record(), &path).unwrap();
        fs::write(sidecar_path(&path), r#"{"class": "a", "trial": 1}"#).unwrap();
        match read_record(&path) {
            Err(BiltsError::Schema { message, .. }) => {
                assert!(message.contains("context") && message.contains("dt") && message.contains("seed"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_empty_target_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("keep.txt"), "x").unwrap();
        let err = write_dataset(dir.path(), &[record()], 0, &serde_json::Value::Null);
        assert!(err.is_err());
        assert!(dir.path().join("keep.txt").exists());
    }
}
