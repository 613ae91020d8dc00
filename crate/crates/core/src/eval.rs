//! Benchmark math: rank and linear correlation, BT.500-style logistic
//! mapping, Fisher-z aggregation across datasets, and the grid
//! monotonicity audit used to sanity-check trained predictors.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::{solve_spd, SquareMatrix};
use crate::{Error, Result};

/// Spearman rank correlation with average ranks on ties.
pub fn srocc(pred: &[f64], mos: &[f64]) -> Result<f64> {
    check_paired(pred, mos)?;
    let ra = ranks(pred);
    let rb = ranks(mos);
    pearson(&ra, &rb)
}

/// Pearson correlation and RMSE of mapped predictions against scores.
pub fn plcc_rmse(mapped_pred: &[f64], mos: &[f64]) -> Result<(f64, f64)> {
    check_paired(mapped_pred, mos)?;
    let plcc = pearson(mapped_pred, mos)?;
    let mse: f64 = mapped_pred
        .iter()
        .zip(mos)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / mapped_pred.len() as f64;
    Ok((plcc, mse.sqrt()))
}

fn check_paired(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Evaluation(format!(
            "paired series differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 3 {
        return Err(Error::Evaluation(format!(
            "correlation needs at least 3 points, got {}",
            a.len()
        )));
    }
    Ok(())
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Evaluation(
            "correlation undefined for constant input".into(),
        ));
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Average ranks (1-based); tied values share the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite scores"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Four-parameter logistic fit of predictions to subjective scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    /// `beta1, beta2, beta3, beta4` of
    /// `q(x) = beta2 + (beta1 - beta2) / (1 + exp(-(x - beta3)/|beta4|))`.
    pub params: [f64; 4],
    /// Mapped predictions, aligned with the inputs.
    pub mapped: Vec<f64>,
    /// True when the optimizer degenerated and a linear fit was used.
    pub fallback_linear: bool,
}

const LOGISTIC_MAX_ITERATIONS: usize = 10_000;

fn logistic(x: f64, b: &[f64; 4]) -> f64 {
    let scale = b[3].abs().max(1e-12);
    b[1] + (b[0] - b[1]) / (1.0 + (-(x - b[2]) / scale).exp())
}

/// Least-squares logistic mapping (Levenberg-Marquardt with analytic
/// Jacobian), initialized from the data range. Falls back to a linear fit
/// when the data or the optimizer degenerates.
pub fn logistic_fit(pred: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    if pred.len() != mos.len() {
        return Err(Error::Evaluation(format!(
            "paired series differ in length: {} vs {}",
            pred.len(),
            mos.len()
        )));
    }
    if pred.len() < 5 {
        return Err(Error::Evaluation(format!(
            "logistic fit needs at least 5 points, got {}",
            pred.len()
        )));
    }

    let mos_min = mos.iter().copied().fold(f64::INFINITY, f64::min);
    let mos_max = mos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pred_std = std_dev(pred);
    if mos_max == mos_min || pred_std == 0.0 {
        return Ok(linear_fallback(pred, mos));
    }

    let mut beta = [mos_max, mos_min, median(pred), pred_std];
    let mut sse = sum_sq_err(pred, mos, &beta);
    let mut lambda = 1e-3;
    let n = pred.len();

    for _ in 0..LOGISTIC_MAX_ITERATIONS {
        // residuals and Jacobian at the current point
        let mut jtj = SquareMatrix::zeros(4);
        let mut jtr = [0.0f64; 4];
        let scale = beta[3].abs().max(1e-12);
        for k in 0..n {
            let u = (pred[k] - beta[2]) / scale;
            let s = 1.0 / (1.0 + (-u).exp());
            let q = beta[1] + (beta[0] - beta[1]) * s;
            let r = q - mos[k];
            let ds = s * (1.0 - s);
            let sign = if beta[3] < 0.0 { -1.0 } else { 1.0 };
            let j = [
                s,
                1.0 - s,
                -(beta[0] - beta[1]) * ds / scale,
                -(beta[0] - beta[1]) * ds * u / scale * sign,
            ];
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in a..4 {
                    jtj.set(a, b, jtj.get(a, b) + j[a] * j[b]);
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                jtj.set(a, b, jtj.get(b, a));
            }
        }

        // damped normal equations; grow lambda until a step helps
        let mut improved = false;
        for _ in 0..16 {
            let mut damped = jtj.clone();
            for d in 0..4 {
                damped.set(d, d, jtj.get(d, d) * (1.0 + lambda) + 1e-12);
            }
            let rhs = [-jtr[0], -jtr[1], -jtr[2], -jtr[3]];
            let Ok(step) = solve_spd(&damped, &rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = beta;
            for d in 0..4 {
                trial[d] += step[d];
            }
            let trial_sse = sum_sq_err(pred, mos, &trial);
            if trial_sse.is_finite() && trial_sse < sse {
                let rel = (sse - trial_sse) / sse.max(1e-300);
                beta = trial;
                sse = trial_sse;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    return Ok(finish(pred, beta));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }

    if !beta.iter().all(|v| v.is_finite()) {
        return Ok(linear_fallback(pred, mos));
    }
    Ok(finish(pred, beta))
}

fn finish(pred: &[f64], beta: [f64; 4]) -> LogisticFit {
    let mapped = pred.iter().map(|&x| logistic(x, &beta)).collect();
    LogisticFit {
        params: beta,
        mapped,
        fallback_linear: false,
    }
}

fn linear_fallback(pred: &[f64], mos: &[f64]) -> LogisticFit {
    let n = pred.len() as f64;
    let mx = pred.iter().sum::<f64>() / n;
    let my = mos.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in pred.iter().zip(mos) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let mapped = pred.iter().map(|&x| slope * x + intercept).collect();
    LogisticFit {
        params: [slope, intercept, 0.0, 0.0],
        mapped,
        fallback_linear: true,
    }
}

fn sum_sq_err(pred: &[f64], mos: &[f64], beta: &[f64; 4]) -> f64 {
    pred.iter()
        .zip(mos)
        .map(|(&x, &y)| {
            let r = logistic(x, beta) - y;
            r * r
        })
        .sum()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Fisher-z aggregate of correlations across datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherAggregate {
    pub value: f64,
    /// Number of inputs clamped away from |r| = 1 where z diverges.
    pub clamped: usize,
}

const FISHER_CLAMP: f64 = 0.999999;

/// Averages correlations in z-space (`z = atanh r`) and transforms back.
/// Inputs at or beyond |r| = 1 are clamped to +-0.999999.
pub fn fisher_aggregate(correlations: &[f64]) -> Result<FisherAggregate> {
    if correlations.is_empty() {
        return Err(Error::Empty("no correlations to aggregate"));
    }
    let mut clamped = 0usize;
    let mut acc = 0.0;
    for &r in correlations {
        if !r.is_finite() {
            return Err(Error::Evaluation(format!("non-finite correlation {r}")));
        }
        let r = if r.abs() >= 1.0 {
            clamped += 1;
            FISHER_CLAMP.copysign(r)
        } else {
            r
        };
        acc += 0.5 * ((1.0 + r) / (1.0 - r)).ln();
    }
    Ok(FisherAggregate {
        value: (acc / correlations.len() as f64).tanh(),
        clamped,
    })
}

/// Complete matrix of pooled scores over ordered resolution and CRF axes.
/// Rows follow the resolution list (ascending), columns the CRF list
/// (ascending, so rightward means more compression).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    resolutions: Vec<String>,
    crfs: Vec<String>,
    scores: Vec<f64>,
}

impl ScoreGrid {
    pub fn new(resolutions: Vec<String>, crfs: Vec<String>, scores: Vec<f64>) -> Result<Self> {
        if resolutions.is_empty() || crfs.is_empty() {
            return Err(Error::Empty("score grid needs both axes populated"));
        }
        if scores.len() != resolutions.len() * crfs.len() {
            return Err(Error::Evaluation(format!(
                "incomplete grid: {} resolutions x {} CRFs needs {} cells, got {}",
                resolutions.len(),
                crfs.len(),
                resolutions.len() * crfs.len(),
                scores.len()
            )));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation("grid scores must be finite".into()));
        }
        Ok(Self {
            resolutions,
            crfs,
            scores,
        })
    }

    #[inline]
    pub fn resolutions(&self) -> &[String] {
        &self.resolutions
    }

    #[inline]
    pub fn crfs(&self) -> &[String] {
        &self.crfs
    }

    #[inline]
    pub fn get(&self, res_idx: usize, crf_idx: usize) -> f64 {
        self.scores[res_idx * self.crfs.len() + crf_idx]
    }
}

/// Which ordering a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotonicityAxis {
    /// Score increased although compression got heavier.
    Compression,
    /// Score decreased although the encoding resolution grew.
    Resolution,
}

/// One adjacent-pair ordering violation in the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub axis: MonotonicityAxis,
    /// Index on the axis held fixed (resolution row for compression
    /// violations, CRF column for resolution violations).
    pub fixed_index: usize,
    /// First index of the offending adjacent pair along the moving axis.
    pub pair_index: usize,
    pub magnitude: f64,
}

/// Scans the grid for adjacent-pair violations: scores must not increase
/// with CRF and must not decrease with resolution.
pub fn monotonicity_audit(grid: &ScoreGrid) -> Vec<Violation> {
    let mut out = Vec::new();
    for r in 0..grid.resolutions.len() {
        for c in 0..grid.crfs.len() - 1 {
            let here = grid.get(r, c);
            let next = grid.get(r, c + 1);
            if next > here {
                out.push(Violation {
                    axis: MonotonicityAxis::Compression,
                    fixed_index: r,
                    pair_index: c,
                    magnitude: next - here,
                });
            }
        }
    }
    for c in 0..grid.crfs.len() {
        for r in 0..grid.resolutions.len() - 1 {
            let here = grid.get(r, c);
            let next = grid.get(r + 1, c);
            if next < here {
                out.push(Violation {
                    axis: MonotonicityAxis::Resolution,
                    fixed_index: c,
                    pair_index: r,
                    magnitude: here - next,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn srocc_of_identical_series_is_one() {
        let v = [3.0, 1.0, 4.0, 1.5, 9.0];
        assert!((srocc(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn srocc_of_reversed_ranking_is_minus_one() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [9.0, 7.0, 5.0, 3.0, 1.0];
        assert!((srocc(&a, &b).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn srocc_single_swap_example() {
        let pred = [1.0, 2.0, 3.0, 5.0, 4.0];
        let mos = [1.0, 2.0, 3.0, 4.0, 5.0];
        // d^2 sums to 2 over n = 5: 1 - 12/120 = 0.9
        assert!((srocc(&pred, &mos).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn srocc_handles_ties_with_average_ranks() {
        let pred = [1.0, 2.0, 2.0, 3.0];
        let mos = [10.0, 20.0, 20.0, 30.0];
        assert!((srocc(&pred, &mos).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn srocc_rejects_degenerate_input() {
        assert!(srocc(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(srocc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(srocc(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn plcc_and_rmse_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let (plcc, rmse) = plcc_rmse(&a, &a).unwrap();
        assert!((plcc - 1.0).abs() < 1e-12);
        assert_eq!(rmse, 0.0);

        let b = [2.0, 3.0, 4.0, 5.0];
        let (plcc, rmse) = plcc_rmse(&b, &a).unwrap();
        assert!((plcc - 1.0).abs() < 1e-12);
        assert!((rmse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plcc_four_point_hand_case() {
        let pred = [1.0, 2.0, 4.0, 5.0];
        let mos = [1.0, 3.0, 3.0, 5.0];
        // direct formula
        let n = 4.0;
        let mx = 3.0;
        let my = 3.0;
        let (mut sxy, mut sxx, mut syy, mut sq) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..4 {
            sxy += (pred[i] - mx) * (mos[i] - my);
            sxx += (pred[i] - mx) * (pred[i] - mx);
            syy += (mos[i] - my) * (mos[i] - my);
            sq += (pred[i] - mos[i]) * (pred[i] - mos[i]);
        }
        let (plcc, rmse) = plcc_rmse(&pred, &mos).unwrap();
        assert!((plcc - sxy / (sxx * syy).sqrt()).abs() < 1e-12);
        assert!((rmse - (sq / n).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn logistic_generate_and_recover() {
        let truth = [90.0, 10.0, 50.0, 12.0];
        let pred: Vec<f64> = (0..40).map(|i| 20.0 + 1.5 * i as f64).collect();
        let mos: Vec<f64> = pred.iter().map(|&x| logistic(x, &truth)).collect();
        let fit = logistic_fit(&pred, &mos).unwrap();
        assert!(!fit.fallback_linear);
        let rmse = (fit
            .mapped
            .iter()
            .zip(&mos)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / mos.len() as f64)
            .sqrt();
        assert!(rmse < 1e-3, "residual rmse {rmse}");
    }

    #[test]
    fn logistic_nests_linear_relations() {
        let pred: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mos: Vec<f64> = pred.iter().map(|&x| 2.0 * x).collect();
        let fit = logistic_fit(&pred, &mos).unwrap();
        let (plcc, _) = plcc_rmse(&fit.mapped, &mos).unwrap();
        assert!(plcc >= 0.9999, "plcc {plcc}");
    }

    #[test]
    fn constant_mos_falls_back_to_linear() {
        let pred = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mos = [7.0; 5];
        let fit = logistic_fit(&pred, &mos).unwrap();
        assert!(fit.fallback_linear);
        assert!(fit.mapped.iter().all(|&v| (v - 7.0).abs() < 1e-12));
    }

    #[test]
    fn mapping_never_hurts_the_fit_set_plcc() {
        let pred: Vec<f64> = (0..25)
            .map(|i| (i as f64 * 0.8).sin() * 30.0 + 50.0)
            .collect();
        let mos: Vec<f64> = pred
            .iter()
            .enumerate()
            .map(|(i, &x)| x * 0.7 + (i % 5) as f64)
            .collect();
        let raw = pearson(&pred, &mos).unwrap();
        let fit = logistic_fit(&pred, &mos).unwrap();
        let mapped = pearson(&fit.mapped, &mos).unwrap();
        assert!(mapped >= raw - 1e-9, "mapped {mapped} vs raw {raw}");
    }

    #[test]
    fn fisher_aggregate_basics() {
        assert_eq!(fisher_aggregate(&[0.0, 0.0]).unwrap().value, 0.0);
        let same = fisher_aggregate(&[0.8, 0.8]).unwrap();
        assert!((same.value - 0.8).abs() < 1e-12);
        // closed form: tanh((atanh .8 + atanh .6)/2) = 5/7
        let agg = fisher_aggregate(&[0.8, 0.6]).unwrap();
        assert!((agg.value - 5.0 / 7.0).abs() < 1e-12);
        assert_eq!(agg.clamped, 0);
    }

    #[test]
    fn fisher_clamps_perfect_correlations() {
        let agg = fisher_aggregate(&[1.0, 0.5]).unwrap();
        assert_eq!(agg.clamped, 1);
        assert!(agg.value < 1.0 && agg.value > 0.5);
    }

    #[test]
    fn grid_requires_completeness() {
        let r = vec!["240".into(), "480".into()];
        let c = vec!["22".into(), "25".into(), "28".into()];
        assert!(ScoreGrid::new(r.clone(), c.clone(), vec![1.0; 5]).is_err());
        assert!(ScoreGrid::new(r, c, vec![1.0; 6]).is_ok());
    }

    #[test]
    fn monotone_grid_has_no_violations() {
        // higher resolution -> higher score; higher CRF -> lower score
        let grid = demo_grid(|r, c| 50.0 + 10.0 * r as f64 - 3.0 * c as f64);
        assert!(monotonicity_audit(&grid).is_empty());
    }

    #[test]
    fn single_swap_is_localized() {
        let mut scores = Vec::new();
        for r in 0..3 {
            for c in 0..4 {
                scores.push(50.0 + 10.0 * r as f64 - 3.0 * c as f64);
            }
        }
        // swap one adjacent CRF pair in row 1
        scores.swap(4 + 1, 4 + 2);
        let grid = ScoreGrid::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["20".into(), "22".into(), "24".into(), "26".into()],
            scores,
        )
        .unwrap();
        let violations = monotonicity_audit(&grid);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].axis, MonotonicityAxis::Compression);
        assert_eq!(violations[0].fixed_index, 1);
        assert_eq!(violations[0].pair_index, 1);
        assert!((violations[0].magnitude - 3.0).abs() < 1e-12);
    }

    fn demo_grid(f: impl Fn(usize, usize) -> f64) -> ScoreGrid {
        let mut scores = Vec::new();
        for r in 0..3 {
            for c in 0..4 {
                scores.push(f(r, c));
            }
        }
        ScoreGrid::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["20".into(), "22".into(), "24".into(), "26".into()],
            scores,
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn srocc_is_invariant_under_monotone_transforms(
            values in proptest::collection::vec(-100.0f64..100.0, 4..30),
            other in proptest::collection::vec(-100.0f64..100.0, 4..30)
        ) {
            let n = values.len().min(other.len());
            let a = &values[..n];
            let b = &other[..n];
            let Ok(base) = srocc(a, b) else { return Ok(()); };
            // strictly increasing transform of one argument
            let ta: Vec<f64> = a.iter().map(|v| (v * 0.05).exp() + 3.0 * v).collect();
            let t = srocc(&ta, b).unwrap();
            prop_assert!((base - t).abs() < 1e-9);
        }

        #[test]
        fn audit_is_clean_iff_all_ordered_pairs_hold(
            rows in 2usize..5,
            cols in 2usize..6,
            cells in proptest::collection::vec(0.0f64..100.0, 4..30)
        ) {
            if cells.len() < rows * cols { return Ok(()); }
            let scores: Vec<f64> = cells[..rows * cols].to_vec();
            let grid = ScoreGrid::new(
                (0..rows).map(|r| alloc::format!("r{r}")).collect(),
                (0..cols).map(|c| alloc::format!("c{c}")).collect(),
                scores.clone(),
            ).unwrap();
            let adjacent_clean = monotonicity_audit(&grid).is_empty();

            // brute force over all ordered pairs on every line
            let mut all_pairs_clean = true;
            for r in 0..rows {
                for c1 in 0..cols {
                    for c2 in (c1 + 1)..cols {
                        if scores[r * cols + c2] > scores[r * cols + c1] {
                            all_pairs_clean = false;
                        }
                    }
                }
            }
            for c in 0..cols {
                for r1 in 0..rows {
                    for r2 in (r1 + 1)..rows {
                        if scores[r2 * cols + c] < scores[r1 * cols + c] {
                            all_pairs_clean = false;
                        }
                    }
                }
            }
            prop_assert_eq!(adjacent_clean, all_pairs_clean);
        }
    }
}
