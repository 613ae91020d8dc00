//! Evaluation report rendering: a human-readable table, a machine-readable
//! key-value dump, and plot-ready CSVs for the monotonicity grid.

use stevq_core::eval::{MonotonicityAxis, ScoreGrid, Violation};

/// Correlation metrics for one dataset tag.
#[derive(Debug, Clone)]
pub struct TagMetrics {
    pub srocc: f64,
    pub plcc: f64,
    pub rmse: f64,
    pub logistic: [f64; 4],
    pub linear_fallback: bool,
}

/// Outcome for one dataset tag; failed tags carry the error instead.
#[derive(Debug, Clone)]
pub struct TagReport {
    pub tag: String,
    pub n: usize,
    pub metrics: Option<TagMetrics>,
    pub error: Option<String>,
}

/// Whole-run evaluation report.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub tags: Vec<TagReport>,
    pub aggregate_srocc: Option<f64>,
    pub aggregate_plcc: Option<f64>,
    /// Correlations clamped away from |r| = 1 during aggregation.
    pub clamped: usize,
}

impl EvalReport {
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:>5} {:>8} {:>8} {:>8}  note\n",
            "dataset", "n", "srocc", "plcc", "rmse"
        ));
        for t in &self.tags {
            match (&t.metrics, &t.error) {
                (Some(m), _) => {
                    let note = if m.linear_fallback {
                        "linear fallback"
                    } else {
                        ""
                    };
                    out.push_str(&format!(
                        "{:<16} {:>5} {:>8.4} {:>8.4} {:>8.4}  {note}\n",
                        t.tag, t.n, m.srocc, m.plcc, m.rmse
                    ));
                }
                (None, Some(e)) => {
                    out.push_str(&format!(
                        "{:<16} {:>5} {:>8} {:>8} {:>8}  {e}\n",
                        t.tag, t.n, "-", "-", "-"
                    ));
                }
                (None, None) => {}
            }
        }
        match (self.aggregate_srocc, self.aggregate_plcc) {
            (Some(s), Some(p)) => {
                out.push_str(&format!(
                    "{:<16} {:>5} {:>8.4} {:>8.4} {:>8}\n",
                    "aggregate", "-", s, p, "-"
                ));
            }
            _ => out.push_str("aggregate        unavailable (no tag produced correlations)\n"),
        }
        if self.clamped > 0 {
            out.push_str(&format!(
                "note: {} correlation(s) clamped away from |r| = 1 before z-averaging\n",
                self.clamped
            ));
        }
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        for t in &self.tags {
            let prefix = format!("dataset.{}", t.tag);
            out.push_str(&format!("{prefix}.n = {}\n", t.n));
            match (&t.metrics, &t.error) {
                (Some(m), _) => {
                    out.push_str(&format!("{prefix}.srocc = {}\n", m.srocc));
                    out.push_str(&format!("{prefix}.plcc = {}\n", m.plcc));
                    out.push_str(&format!("{prefix}.rmse = {}\n", m.rmse));
                    for (i, b) in m.logistic.iter().enumerate() {
                        out.push_str(&format!("{prefix}.logistic.beta{} = {b}\n", i + 1));
                    }
                    out.push_str(&format!(
                        "{prefix}.linear_fallback = {}\n",
                        m.linear_fallback
                    ));
                }
                (None, Some(e)) => {
                    out.push_str(&format!("{prefix}.error = {e}\n"));
                }
                (None, None) => {}
            }
        }
        if let Some(s) = self.aggregate_srocc {
            out.push_str(&format!("aggregate.srocc = {s}\n"));
        }
        if let Some(p) = self.aggregate_plcc {
            out.push_str(&format!("aggregate.plcc = {p}\n"));
        }
        out.push_str(&format!("aggregate.clamped = {}\n", self.clamped));
        out
    }
}

/// Grid CSV with CRF columns and one row per resolution.
pub fn render_grid_csv(grid: &ScoreGrid) -> String {
    let mut out = String::from("res\\crf");
    for crf in grid.crfs() {
        out.push(',');
        out.push_str(crf);
    }
    out.push('\n');
    for (ri, res) in grid.resolutions().iter().enumerate() {
        out.push_str(res);
        for ci in 0..grid.crfs().len() {
            out.push(',');
            out.push_str(&grid.get(ri, ci).to_string());
        }
        out.push('\n');
    }
    out
}

/// Human-readable audit summary.
pub fn render_violations(grid: &ScoreGrid, violations: &[Violation]) -> String {
    if violations.is_empty() {
        return "monotonicity audit: no violations\n".to_string();
    }
    let mut out = format!("monotonicity audit: {} violation(s)\n", violations.len());
    for v in violations {
        match v.axis {
            MonotonicityAxis::Compression => {
                let res = &grid.resolutions()[v.fixed_index];
                let c0 = &grid.crfs()[v.pair_index];
                let c1 = &grid.crfs()[v.pair_index + 1];
                out.push_str(&format!(
                    "  res {res}: score rises by {:.6} from crf {c0} to {c1}\n",
                    v.magnitude
                ));
            }
            MonotonicityAxis::Resolution => {
                let crf = &grid.crfs()[v.fixed_index];
                let r0 = &grid.resolutions()[v.pair_index];
                let r1 = &grid.resolutions()[v.pair_index + 1];
                out.push_str(&format!(
                    "  crf {crf}: score drops by {:.6} from res {r0} to {r1}\n",
                    v.magnitude
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_render_both_shapes() {
        let report = EvalReport {
            tags: vec![
                TagReport {
                    tag: "live".into(),
                    n: 8,
                    metrics: Some(TagMetrics {
                        srocc: 0.9,
                        plcc: 0.88,
                        rmse: 4.2,
                        logistic: [90.0, 10.0, 50.0, 12.0],
                        linear_fallback: false,
                    }),
                    error: None,
                },
                TagReport {
                    tag: "flat".into(),
                    n: 4,
                    metrics: None,
                    error: Some("correlation undefined for constant input".into()),
                },
            ],
            aggregate_srocc: Some(0.9),
            aggregate_plcc: Some(0.88),
            clamped: 0,
        };
        let table = report.render_table();
        assert!(table.contains("live"), "{table}");
        assert!(table.contains("constant input"), "{table}");
        let kv = report.render_kv();
        assert!(kv.contains("dataset.live.srocc = 0.9"), "{kv}");
        assert!(kv.contains("dataset.flat.error"), "{kv}");
        assert!(kv.contains("aggregate.srocc = 0.9"), "{kv}");
    }

    #[test]
    fn grid_csv_layout() {
        let grid = ScoreGrid::new(
            vec!["240".into(), "480".into()],
            vec!["22".into(), "28".into()],
            vec![10.0, 5.0, 20.0, 15.0],
        )
        .unwrap();
        let csv = render_grid_csv(&grid);
        assert_eq!(csv, "res\\crf,22,28\n240,10,5\n480,20,15\n");
    }
}
