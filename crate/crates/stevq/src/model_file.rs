//! Self-describing text serialization of trained regression models.
//!
//! A `key value` header carries the format version, layout, kernel and
//! normalization constants, followed by one row per support vector (dual
//! coefficient first). Floats are written in Rust's shortest round-trip
//! decimal form, so save/load reproduces bit-identical predictions.
//! Loading any other format version fails closed.

use std::fs;
use std::path::Path;

use stevq_core::features::ModelLayout;
use stevq_core::svr::{FeatureScaler, RegressionModel, SvrParams};

use crate::error::{AppError, Result};

pub const FORMAT_LINE: &str = "stevq-model 1";

pub fn save_model(path: &Path, model: &RegressionModel) -> Result<()> {
    let mut out = String::new();
    out.push_str(FORMAT_LINE);
    out.push('\n');
    out.push_str(&format!("layout {}\n", model.layout.id()));
    out.push_str("kernel rbf\n");
    out.push_str(&format!("c {}\n", model.params.c));
    out.push_str(&format!("gamma {}\n", model.params.gamma));
    out.push_str(&format!("epsilon {}\n", model.params.epsilon));
    out.push_str(&format!("gap_tolerance {}\n", model.params.gap_tolerance));
    out.push_str(&format!("max_iterations {}\n", model.params.max_iterations));
    out.push_str(&format!("iterations {}\n", model.solver_iterations));
    out.push_str(&format!("bias {}\n", model.bias));
    out.push_str(&format!("score_min {}\n", model.score_range.0));
    out.push_str(&format!("score_max {}\n", model.score_range.1));
    out.push_str(&format!("norm_min {}\n", join_floats(&model.scaler.mins)));
    out.push_str(&format!("norm_max {}\n", join_floats(&model.scaler.maxs)));
    for w in &model.warnings {
        out.push_str(&format!("warning {w}\n"));
    }
    out.push_str(&format!(
        "support_vectors {}\n",
        model.support_vectors.len()
    ));
    for (sv, coef) in model.support_vectors.iter().zip(&model.coefficients) {
        out.push_str(&format!("{} {}\n", coef, join_floats(sv)));
    }
    fs::write(path, out).map_err(|e| AppError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<RegressionModel> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let bad = |msg: String| AppError::Config(format!("model file {}: {msg}", path.display()));
    let mut lines = text.lines();

    match lines.next() {
        Some(line) if line == FORMAT_LINE => {}
        Some(other) => {
            return Err(bad(format!(
                "unknown format '{other}' (expected '{FORMAT_LINE}')"
            )))
        }
        None => return Err(bad("file is empty".into())),
    }

    let mut layout = None;
    let mut params = SvrParams {
        c: f64::NAN,
        gamma: f64::NAN,
        epsilon: f64::NAN,
        gap_tolerance: 1e-6,
        max_iterations: 10_000_000,
    };
    let mut bias = None;
    let mut score_min = None;
    let mut score_max = None;
    let mut mins: Option<Vec<f64>> = None;
    let mut maxs: Option<Vec<f64>> = None;
    let mut warnings = Vec::new();
    let mut sv_count: Option<usize> = None;
    let mut iterations = 0u64;

    for line in lines.by_ref() {
        let Some((key, value)) = line.split_once(' ') else {
            return Err(bad(format!("malformed header line '{line}'")));
        };
        match key {
            "layout" => {
                layout = Some(
                    ModelLayout::from_id(value)
                        .ok_or_else(|| bad(format!("unknown layout '{value}'")))?,
                );
            }
            "kernel" => {
                if value != "rbf" {
                    return Err(bad(format!("unsupported kernel '{value}'")));
                }
            }
            "c" => params.c = parse_float(value).map_err(&bad)?,
            "gamma" => params.gamma = parse_float(value).map_err(&bad)?,
            "epsilon" => params.epsilon = parse_float(value).map_err(&bad)?,
            "gap_tolerance" => params.gap_tolerance = parse_float(value).map_err(&bad)?,
            "max_iterations" => {
                params.max_iterations = value
                    .parse()
                    .map_err(|_| bad(format!("bad max_iterations '{value}'")))?
            }
            "iterations" => {
                iterations = value
                    .parse()
                    .map_err(|_| bad(format!("bad iterations '{value}'")))?
            }
            "bias" => bias = Some(parse_float(value).map_err(&bad)?),
            "score_min" => score_min = Some(parse_float(value).map_err(&bad)?),
            "score_max" => score_max = Some(parse_float(value).map_err(&bad)?),
            "norm_min" => mins = Some(parse_floats(value).map_err(&bad)?),
            "norm_max" => maxs = Some(parse_floats(value).map_err(&bad)?),
            "warning" => warnings.push(value.to_string()),
            "support_vectors" => {
                sv_count = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad count '{value}'")))?,
                );
                break;
            }
            _ => return Err(bad(format!("unknown header key '{key}'"))),
        }
    }

    let layout = layout.ok_or_else(|| bad("missing layout".into()))?;
    let dim = layout.dimension();
    let sv_count = sv_count.ok_or_else(|| bad("missing support_vectors".into()))?;
    let mins = mins.ok_or_else(|| bad("missing norm_min".into()))?;
    let maxs = maxs.ok_or_else(|| bad("missing norm_max".into()))?;
    if mins.len() != dim || maxs.len() != dim {
        return Err(bad(format!(
            "normalization width {} does not match layout {} ({dim})",
            mins.len(),
            layout.id()
        )));
    }
    if !(params.c.is_finite() && params.gamma.is_finite() && params.epsilon.is_finite()) {
        return Err(bad("missing kernel parameters".into()));
    }

    let mut support_vectors = Vec::with_capacity(sv_count);
    let mut coefficients = Vec::with_capacity(sv_count);
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let values = parse_floats(line).map_err(&bad)?;
        if values.len() != dim + 1 {
            return Err(bad(format!(
                "support vector {i} has {} fields, expected {}",
                values.len(),
                dim + 1
            )));
        }
        coefficients.push(values[0]);
        support_vectors.push(values[1..].to_vec());
    }
    if support_vectors.len() != sv_count {
        return Err(bad(format!(
            "expected {sv_count} support vectors, found {}",
            support_vectors.len()
        )));
    }

    Ok(RegressionModel {
        layout,
        params,
        scaler: FeatureScaler { mins, maxs },
        support_vectors,
        coefficients,
        bias: bias.ok_or_else(|| bad("missing bias".into()))?,
        score_range: (
            score_min.ok_or_else(|| bad("missing score_min".into()))?,
            score_max.ok_or_else(|| bad("missing score_max".into()))?,
        ),
        solver_iterations: iterations,
        warnings,
    })
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_float(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("bad float '{s}'"))
}

fn parse_floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split_whitespace().map(parse_float).collect()
}
