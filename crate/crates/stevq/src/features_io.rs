//! Feature CSV serialization and the content-addressed feature cache.
//!
//! Cache entries are keyed by the SHA-256 of both input files, the
//! extractor version and the extraction-parameter digest, so renamed or
//! copied inputs still hit. Each entry carries a digest of its own body;
//! tampered entries are discarded with a warning and recomputed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use stevq_core::features::{FeatureParams, FeatureTable, FEATURE_COLUMNS};
use stevq_core::FEATURE_EXTRACTOR_VERSION;

use crate::error::{AppError, Result};

/// Writes `frame,<columns...>` rows; `columns` must be canonical names.
pub fn render_feature_csv(table: &FeatureTable, columns: &[&str]) -> Result<String> {
    let mut indices = Vec::with_capacity(columns.len());
    for name in columns {
        let idx = stevq_core::features::column_index(name)
            .ok_or_else(|| AppError::Config(format!("unknown feature column '{name}'")))?;
        indices.push(idx);
    }
    let mut out = String::new();
    out.push_str("frame");
    for name in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (frame, row) in table.rows().iter().enumerate() {
        out.push_str(&frame.to_string());
        for &i in &indices {
            out.push(',');
            out.push_str(&row[i].to_string());
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_feature_csv(path: &Path, table: &FeatureTable, columns: &[&str]) -> Result<()> {
    let body = render_feature_csv(table, columns)?;
    fs::write(path, body).map_err(|e| AppError::io(path, e))
}

/// Parses a feature CSV that contains every canonical column.
pub fn parse_feature_csv(text: &str) -> Result<FeatureTable> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| AppError::Config("empty feature csv".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    if names.first() != Some(&"frame") {
        return Err(AppError::Config(
            "feature csv must start with a 'frame' column".into(),
        ));
    }
    let mut positions = Vec::with_capacity(FEATURE_COLUMNS.len());
    for canonical in FEATURE_COLUMNS {
        let pos = names.iter().position(|n| *n == canonical).ok_or_else(|| {
            AppError::Config(format!("feature csv is missing column '{canonical}'"))
        })?;
        positions.push(pos);
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(AppError::Config(format!(
                "feature csv row {i} has {} fields, header has {}",
                fields.len(),
                names.len()
            )));
        }
        let mut row = [0.0f64; 16];
        for (slot, &pos) in row.iter_mut().zip(&positions) {
            *slot = fields[pos]
                .parse()
                .map_err(|_| AppError::Config(format!("bad value '{}' in row {i}", fields[pos])))?;
        }
        rows.push(row);
    }
    FeatureTable::from_rows(rows).map_err(AppError::from)
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Content-addressed cache of canonical feature tables.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    dir: PathBuf,
}

impl FeatureCache {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        Ok(Self { dir })
    }

    /// Cache key for a (reference, distorted) pair under given parameters.
    pub fn key(&self, ref_path: &Path, dist_path: &Path, params: &FeatureParams) -> Result<String> {
        let ref_bytes = fs::read(ref_path).map_err(|e| AppError::io(ref_path, e))?;
        let dist_bytes = fs::read(dist_path).map_err(|e| AppError::io(dist_path, e))?;
        let mut hasher = Sha256::new();
        hasher.update(sha256_hex(&ref_bytes).as_bytes());
        hasher.update(sha256_hex(&dist_bytes).as_bytes());
        hasher.update(format!("v{FEATURE_EXTRACTOR_VERSION}").as_bytes());
        hasher.update(params.digest().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        Ok(out)
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.csv"))
    }

    /// Returns the cached table, or `None` on a miss or a corrupt entry
    /// (the latter is reported on stderr and recomputed by the caller).
    pub fn load(&self, key: &str) -> Option<FeatureTable> {
        let path = self.entry_path(key);
        let text = fs::read_to_string(&path).ok()?;
        let (first, body) = text.split_once('\n')?;
        let expected = first.strip_prefix("# stevq-cache 1 body=")?;
        if sha256_hex(body.as_bytes()) != expected {
            eprintln!(
                "warning: cache entry {} failed its integrity check; recomputing",
                path.display()
            );
            return None;
        }
        match parse_feature_csv(body) {
            Ok(table) => Some(table),
            Err(e) => {
                eprintln!(
                    "warning: cache entry {} is unreadable ({e}); recomputing",
                    path.display()
                );
                None
            }
        }
    }

    pub fn store(&self, key: &str, table: &FeatureTable) -> Result<()> {
        let body = render_feature_csv(table, &FEATURE_COLUMNS)?;
        let path = self.entry_path(key);
        let mut file = fs::File::create(&path).map_err(|e| AppError::io(&path, e))?;
        (|| -> std::io::Result<()> {
            writeln!(file, "# stevq-cache 1 body={}", sha256_hex(body.as_bytes()))?;
            file.write_all(body.as_bytes())
        })()
        .map_err(|e| AppError::io(&path, e))
    }
}
