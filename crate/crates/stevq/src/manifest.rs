//! Dataset manifests: CSV files listing (reference, distorted, score)
//! triples plus the geometry needed to decode headerless videos.
//!
//! Required columns: `content_id,ref_path,dist_path,width,height,pix_fmt,
//! fps,mos`. Geometry cells may be empty for self-describing `.y4m` inputs,
//! and `mos` may be empty where a subcommand does not need scores.
//! Optional columns: `dataset` (evaluation grouping), `res` and `crf`
//! (monotonicity grid coordinates).

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{AppError, Result};
use crate::video::{PixelFormat, RawGeometry};

pub const REQUIRED_COLUMNS: [&str; 8] = [
    "content_id",
    "ref_path",
    "dist_path",
    "width",
    "height",
    "pix_fmt",
    "fps",
    "mos",
];

#[derive(Debug, Clone)]
pub struct ManifestRecord {
    pub content_id: String,
    pub ref_path: PathBuf,
    pub dist_path: PathBuf,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub pix_fmt: Option<PixelFormat>,
    pub fps: Option<f64>,
    pub mos: Option<f64>,
    pub dataset: Option<String>,
    pub res: Option<String>,
    pub crf: Option<String>,
}

impl ManifestRecord {
    /// Geometry for headerless decoding, when fully specified.
    pub fn raw_geometry(&self) -> Option<RawGeometry> {
        Some(RawGeometry {
            format: self.pix_fmt?,
            width: self.width?,
            height: self.height?,
            frame_rate: self.fps?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;

        let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        let mut index = HashMap::new();
        for (i, name) in headers.iter().enumerate() {
            index.insert(name.to_string(), i);
        }
        for required in REQUIRED_COLUMNS {
            if !index.contains_key(required) {
                return Err(AppError::Config(format!(
                    "manifest {} is missing required column '{required}'",
                    path.display()
                )));
            }
        }

        let field = |record: &csv::StringRecord, name: &str| -> String {
            index
                .get(name)
                .and_then(|&i| record.get(i))
                .unwrap_or("")
                .to_string()
        };

        let mut records = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = row + 2; // header is line 1
            let content_id = field(&record, "content_id");
            if content_id.is_empty() {
                return Err(AppError::Config(format!(
                    "{} line {line}: content_id must not be empty",
                    path.display()
                )));
            }
            let ref_path = field(&record, "ref_path");
            let dist_path = field(&record, "dist_path");
            if ref_path.is_empty() || dist_path.is_empty() {
                return Err(AppError::Config(format!(
                    "{} line {line}: ref_path and dist_path must not be empty",
                    path.display()
                )));
            }
            let parse_num = |name: &str| -> Result<Option<f64>> {
                let raw = field(&record, name);
                if raw.is_empty() {
                    return Ok(None);
                }
                raw.parse::<f64>().map(Some).map_err(|_| {
                    AppError::Config(format!(
                        "{} line {line}: column '{name}' has non-numeric value '{raw}'",
                        path.display()
                    ))
                })
            };
            let pix_fmt = {
                let raw = field(&record, "pix_fmt");
                if raw.is_empty() {
                    None
                } else {
                    Some(PixelFormat::from_id(&raw).ok_or_else(|| {
                        AppError::Config(format!(
                            "{} line {line}: unsupported pixel format '{raw}'",
                            path.display()
                        ))
                    })?)
                }
            };
            let optional = |name: &str| -> Option<String> {
                if !index.contains_key(name) {
                    return None;
                }
                let v = field(&record, name);
                if v.is_empty() {
                    None
                } else {
                    Some(v)
                }
            };

            records.push(ManifestRecord {
                content_id,
                ref_path: PathBuf::from(ref_path),
                dist_path: PathBuf::from(dist_path),
                width: parse_num("width")?.map(|v| v as usize),
                height: parse_num("height")?.map(|v| v as usize),
                pix_fmt,
                fps: parse_num("fps")?,
                mos: parse_num("mos")?,
                dataset: optional("dataset"),
                res: optional("res"),
                crf: optional("crf"),
            });
        }
        if records.is_empty() {
            return Err(AppError::Config(format!(
                "manifest {} has no records",
                path.display()
            )));
        }
        Ok(Self { records })
    }

    /// Fails with a row-numbered error when any record lacks a score.
    pub fn require_mos(&self, path: &Path) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.mos.is_none() {
                return Err(AppError::Config(format!(
                    "{} line {}: mos is required for this command",
                    path.display(),
                    i + 2
                )));
            }
        }
        Ok(())
    }

    /// Fails when any record lacks the monotonicity grid coordinates.
    pub fn require_grid(&self, path: &Path) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.res.is_none() || r.crf.is_none() {
                return Err(AppError::Config(format!(
                    "{} line {}: 'res' and 'crf' columns are required for the grid",
                    path.display(),
                    i + 2
                )));
            }
        }
        Ok(())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> AppError {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                AppError::io(path, io)
            } else {
                unreachable!()
            }
        }
        _ => AppError::Config(format!("malformed manifest {}: {e}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn tmp(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("stevq-manifest-tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn loads_a_well_formed_manifest() {
        let path = tmp(
            "good.csv",
            "content_id,ref_path,dist_path,width,height,pix_fmt,fps,mos,dataset\n\
             a,ref.yuv,dist.yuv,64,64,yuv420p8b,24,80.5,live\n\
             b,ref.y4m,dist.y4m,,,,,60,\n",
        );
        let m = DatasetManifest::load(&path).unwrap();
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[0].mos, Some(80.5));
        assert_eq!(m.records[0].dataset.as_deref(), Some("live"));
        assert!(m.records[1].raw_geometry().is_none());
        assert!(m.records[0].raw_geometry().is_some());
        assert!(m.require_mos(&path).is_ok());
    }

    #[test]
    fn missing_mos_column_names_the_column() {
        let path = tmp(
            "nomos.csv",
            "content_id,ref_path,dist_path,width,height,pix_fmt,fps\na,r,d,64,64,yuv420p8b,24\n",
        );
        let err = DatasetManifest::load(&path).unwrap_err();
        assert!(err.to_string().contains("'mos'"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn bad_values_are_row_numbered() {
        let path = tmp(
            "badrow.csv",
            "content_id,ref_path,dist_path,width,height,pix_fmt,fps,mos\n\
             a,r,d,64,64,yuv420p8b,24,80\n\
             b,r,d,64,64,yuv420p8b,24,not-a-number\n",
        );
        let err = DatasetManifest::load(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn empty_mos_is_checked_on_demand() {
        let path = tmp(
            "optmos.csv",
            "content_id,ref_path,dist_path,width,height,pix_fmt,fps,mos\n\
             a,r,d,64,64,yuv420p8b,24,\n",
        );
        let m = DatasetManifest::load(&path).unwrap();
        let err = m.require_mos(&path).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn unsupported_pixel_format_is_rejected() {
        let path = tmp(
            "fmt.csv",
            "content_id,ref_path,dist_path,width,height,pix_fmt,fps,mos\n\
             a,r,d,64,64,nv12,24,1\n",
        );
        let err = DatasetManifest::load(&path).unwrap_err();
        assert!(err.to_string().contains("nv12"), "{err}");
    }
}
