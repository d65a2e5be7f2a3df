//! Artifact I/O: the binary field-snapshot format, CSV curves and traces,
//! and hashed run manifests.
//!
//! The control plane (configs, summaries) is JSON and the data plane
//! (fields) is a small binary format, so runs stay human-diffable without
//! bloating the field files. Every artifact is written atomically — to a
//! temporary file in the destination directory, then renamed — and a run's
//! manifest lists each output with its SHA-256, so a run directory can be
//! audited after the fact.
//!
//! Snapshot wire format (little-endian throughout):
//!
//! ```text
//! magic "EDGP" | version u32 | n₁ n₂ n₃ u32 | L₁ L₂ L₃ f64
//! | n₁·n₂·n₃ × (re f64, im f64), x₁ fastest
//! ```

use std::fs::{self, File};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::ConservationTrace;
use crate::error::{EdgpeError, Result};
use crate::gaussian::ScanRow;
use crate::grid::{Grid, WaveField};
use crate::ground_state::{GammaCurve, GammaWitness};

/// Leading bytes of every field snapshot.
pub const FIELD_MAGIC: [u8; 4] = *b"EDGP";
/// Current snapshot format version.
pub const FIELD_VERSION: u32 = 1;

const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 3 * 8;

/// Serializes a field to the snapshot wire format.
pub fn field_to_bytes(u: &WaveField) -> Vec<u8> {
    let grid = u.grid();
    let n = grid.n();
    let l = grid.l();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * u.data().len());
    out.extend_from_slice(&FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    for na in n {
        out.extend_from_slice(&(na as u32).to_le_bytes());
    }
    for la in l {
        out.extend_from_slice(&la.to_le_bytes());
    }
    for z in u.data() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

/// Parses the snapshot wire format back into a field.
pub fn field_from_bytes(bytes: &[u8]) -> Result<WaveField> {
    let bad = |msg: String| EdgpeError::BadSnapshot(msg);
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if bytes[..4] != FIELD_MAGIC {
        return Err(bad("leading magic is not \"EDGP\"".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != FIELD_VERSION {
        return Err(bad(format!(
            "unsupported snapshot version {version}, expected {FIELD_VERSION}"
        )));
    }
    let n = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let l = [f64_at(20), f64_at(28), f64_at(36)];
    let count = n[0]
        .checked_mul(n[1])
        .and_then(|v| v.checked_mul(n[2]))
        .ok_or_else(|| bad(format!("point count overflows: n = {n:?}")))?;
    let expected = HEADER_LEN + 16 * count;
    if bytes.len() != expected {
        return Err(bad(format!(
            "payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let grid = Grid::new(l, n).map_err(|e| bad(format!("bad geometry: {e}")))?;
    let mut data = Vec::with_capacity(count);
    let mut off = HEADER_LEN;
    for _ in 0..count {
        data.push(Complex64::new(f64_at(off), f64_at(off + 8)));
        off += 16;
    }
    WaveField::from_vec(grid, data)
}

/// Writes a field snapshot atomically.
pub fn write_field(path: &Path, u: &WaveField) -> Result<()> {
    atomic_write(path, &field_to_bytes(u))
}

/// Reads a field snapshot.
pub fn read_field(path: &Path) -> Result<WaveField> {
    field_from_bytes(&fs::read(path)?)
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes `bytes` to `path` via a temporary file in the same directory
/// followed by a rename, so readers never observe a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let stem = path
        .file_name()
        .ok_or_else(|| EdgpeError::InvalidArgument(format!("not a file path: {path:?}")))?
        .to_string_lossy()
        .into_owned();
    let tmp = dir.join(format!(
        ".{stem}.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let write = (|| -> std::io::Result<()> {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()
    })();
    if let Err(e) = write {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Conservation trace as CSV with columns `t,mass,energy,h1norm`.
pub fn trace_to_csv(trace: &ConservationTrace) -> Vec<u8> {
    csv_bytes(
        &["t", "mass", "energy", "h1norm"],
        (0..trace.times.len()).map(|i| {
            vec![
                trace.times[i].to_string(),
                trace.mass[i].to_string(),
                trace.energy[i].to_string(),
                trace.h1norm[i].to_string(),
            ]
        }),
    )
}

/// γ-curve as CSV with columns `mass,gamma,witness`.
pub fn gamma_to_csv(curve: &GammaCurve) -> Vec<u8> {
    csv_bytes(
        &["mass", "gamma", "witness"],
        (0..curve.masses.len()).map(|i| {
            let label = match &curve.witnesses[i] {
                GammaWitness::Minimizer { converged: true, .. } => "minimizer",
                GammaWitness::Minimizer { converged: false, .. } => "candidate",
                GammaWitness::NoMinimizerEvidence { .. } => "spreading",
                GammaWitness::Invalid { .. } => "invalid",
            };
            vec![
                curve.masses[i].to_string(),
                curve.gammas[i].to_string(),
                label.to_string(),
            ]
        }),
    )
}

/// Gaussian-scan rows as CSV with columns
/// `sigma,tau,c,Atilde,Btilde,Ctilde,E`.
pub fn scan_to_csv(rows: &[ScanRow]) -> Vec<u8> {
    csv_bytes(
        &["sigma", "tau", "c", "Atilde", "Btilde", "Ctilde", "E"],
        rows.iter().map(|r| {
            vec![
                r.sigma.to_string(),
                r.tau.to_string(),
                r.c.to_string(),
                r.atilde.to_string(),
                r.btilde.to_string(),
                r.ctilde.to_string(),
                r.e.to_string(),
            ]
        }),
    )
}

/// One artifact in a run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// File name relative to the run directory.
    pub path: String,
    pub bytes: u64,
    /// Lowercase hex SHA-256 of the content.
    pub sha256: String,
}

/// Index of every artifact a run wrote. Contains no timestamps, so equal
/// runs produce byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Entries sorted by path; the manifest itself is not listed.
    pub entries: Vec<ManifestEntry>,
}

/// Collects artifacts for one run directory and finishes with a manifest.
pub struct RunWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl RunWriter {
    /// Creates (or reuses) the run directory.
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(RunWriter {
            dir,
            entries: Vec::new(),
        })
    }

    /// The run directory.
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes one artifact and records it for the manifest.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        if name.is_empty()
            || name.contains(['/', '\\'])
            || name == "."
            || name == ".."
            || name == "manifest.json"
        {
            return Err(EdgpeError::InvalidArgument(format!(
                "artifact name {name:?} must be a plain file name"
            )));
        }
        let path = self.dir.join(name);
        atomic_write(&path, bytes)?;
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex_sha256(bytes),
        });
        Ok(path)
    }

    /// Writes pretty JSON (shortest round-trip floats) plus newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| EdgpeError::InvalidArgument(format!("json encoding: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes a field snapshot.
    pub fn write_field(&mut self, name: &str, u: &WaveField) -> Result<PathBuf> {
        self.write_bytes(name, &field_to_bytes(u))
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(mut self) -> Result<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            tool: "edgpe".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            entries: self.entries,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| EdgpeError::InvalidArgument(format!("json encoding: {e}")))?;
        bytes.push(b'\n');
        atomic_write(&self.dir.join("manifest.json"), &bytes)?;
        Ok(manifest)
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::fft::Fft3;
    use crate::rng::smooth_random_field;

    fn sample_field() -> WaveField {
        let grid = Grid::new([8.0, 8.0, 12.0], [8, 8, 12]).unwrap();
        let mut fft = Fft3::new(Arc::clone(&grid));
        smooth_random_field(&mut fft, 42, 1.5)
    }

    #[test]
    fn snapshots_round_trip_bitwise() {
        let u = sample_field();
        let v = field_from_bytes(&field_to_bytes(&u)).unwrap();
        assert_eq!(v.grid().n(), u.grid().n());
        assert_eq!(v.grid().l(), u.grid().l());
        assert!(u
            .data()
            .iter()
            .zip(v.data())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits()
                && a.im.to_bits() == b.im.to_bits()));
    }

    #[test]
    fn corrupted_snapshots_are_rejected() {
        let good = field_to_bytes(&sample_field());

        let mut magic = good.clone();
        magic[0] = b'X';
        assert!(matches!(
            field_from_bytes(&magic),
            Err(EdgpeError::BadSnapshot(_))
        ));

        let mut version = good.clone();
        version[4] = 9;
        assert!(matches!(
            field_from_bytes(&version),
            Err(EdgpeError::BadSnapshot(_))
        ));

        let truncated = &good[..good.len() - 8];
        assert!(matches!(
            field_from_bytes(truncated),
            Err(EdgpeError::BadSnapshot(_))
        ));

        assert!(matches!(
            field_from_bytes(&good[..10]),
            Err(EdgpeError::BadSnapshot(_))
        ));
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.bin");
        atomic_write(&path, b"payload").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"payload");
        let names: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names.len(), 1, "stray files: {names:?}");
    }

    #[test]
    fn manifest_lists_every_artifact_with_correct_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut writer = RunWriter::create(dir.path().join("run")).unwrap();
        writer.write_json("summary.json", &serde_json::json!({"ok": true})).unwrap();
        writer.write_field("state.edgp", &sample_field()).unwrap();
        writer.write_bytes("trace.csv", b"t,mass\n0,1\n").unwrap();
        let manifest = writer.finish().unwrap();

        let paths: Vec<_> = manifest.entries.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["state.edgp", "summary.json", "trace.csv"]);
        for entry in &manifest.entries {
            let bytes = fs::read(dir.path().join("run").join(&entry.path)).unwrap();
            assert_eq!(bytes.len() as u64, entry.bytes);
            assert_eq!(hex_sha256(&bytes), entry.sha256);
        }
        let reread: Manifest = serde_json::from_slice(
            &fs::read(dir.path().join("run").join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(reread, manifest);
    }

    #[test]
    fn artifact_names_must_be_plain() {
        let dir = tempfile::tempdir().unwrap();
        let mut writer = RunWriter::create(dir.path()).unwrap();
        for bad in ["../escape", "a/b", "", "manifest.json"] {
            assert!(writer.write_bytes(bad, b"x").is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn trace_csv_has_the_documented_columns() {
        let trace = ConservationTrace {
            times: vec![0.0, 0.5],
            mass: vec![1.0, 1.0],
            energy: vec![-2.25, -2.25],
            h1norm: vec![3.0, 3.0],
        };
        let text = String::from_utf8(trace_to_csv(&trace)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,mass,energy,h1norm"));
        assert_eq!(lines.next(), Some("0,1,-2.25,3"));
        assert_eq!(lines.next(), Some("0.5,1,-2.25,3"));
    }
}
