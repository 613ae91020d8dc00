//! Epsilon-SVR with an RBF kernel, trained by sequential minimal
//! optimization over the standard paired-variable dual.
//!
//! Feature columns are min-max normalized to [0, 1] before the kernel sees
//! them, which is what makes a fixed kernel width meaningful across feature
//! sets. Training is deterministic: no randomness, fixed scan order, so the
//! same inputs always produce the same model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::features::{FeatureVector, ModelLayout};
use crate::{Error, Result};

/// Kernel and solver constants for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrParams {
    /// Regularization weight.
    pub c: f64,
    /// RBF kernel width.
    pub gamma: f64,
    /// Epsilon-insensitive tube half-width, on the raw score scale.
    pub epsilon: f64,
    /// Stop once the maximal KKT violating-pair gap falls below this.
    pub gap_tolerance: f64,
    /// Hard cap on SMO iterations; exceeding it is a training error.
    pub max_iterations: u64,
}

impl SvrParams {
    /// Deployed defaults per feature layout: the twelve-feature model is
    /// regularized harder (C = 0.5) than the six-feature models (C = 4).
    pub fn for_layout(layout: ModelLayout) -> Self {
        let c = match layout {
            ModelLayout::StVmaf => 0.5,
            ModelLayout::M1 | ModelLayout::M2 => 4.0,
        };
        Self {
            c,
            gamma: 0.04,
            epsilon: 1.0,
            gap_tolerance: 1e-6,
            max_iterations: 10_000_000,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

/// Per-column min-max normalization fitted on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(columns: usize, samples: &[Vec<f64>]) -> Self {
        let mut mins = vec![f64::INFINITY; columns];
        let mut maxs = vec![f64::NEG_INFINITY; columns];
        for row in samples {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Self { mins, maxs }
    }

    /// Column indices where max == min; their normalized value is defined
    /// as zero.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        self.mins
            .iter()
            .zip(&self.maxs)
            .enumerate()
            .filter(|(_, (lo, hi))| hi == lo)
            .map(|(j, _)| j)
            .collect()
    }

    /// Maps a raw vector into [0, 1] per column, clipping out-of-range
    /// values; training rows are in range by construction.
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.maxs[j] - self.mins[j];
                if span == 0.0 {
                    0.0
                } else {
                    ((v - self.mins[j]) / span).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

/// A trained epsilon-SVR: everything needed to reproduce predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub layout: ModelLayout,
    pub params: SvrParams,
    pub scaler: FeatureScaler,
    /// Support vectors in normalized feature space.
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficients, one per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    /// (min, max) of the training scores; predictions clip here by default.
    pub score_range: (f64, f64),
    /// SMO iterations spent reaching the gap tolerance.
    pub solver_iterations: u64,
    /// Non-fatal conditions observed while training.
    pub warnings: Vec<String>,
}

impl RegressionModel {
    /// Kernel expansion at a raw feature vector of the model's layout.
    pub fn predict(&self, v: &FeatureVector, clip_to_range: bool) -> Result<f64> {
        if v.layout != self.layout {
            return Err(Error::DimensionMismatch(format!(
                "model expects layout {}, got {}",
                self.layout.id(),
                v.layout.id()
            )));
        }
        Ok(self.predict_raw(&v.values, clip_to_range))
    }

    fn predict_raw(&self, raw: &[f64], clip_to_range: bool) -> f64 {
        let x = self.scaler.apply(raw);
        let mut acc = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.coefficients) {
            acc += coef * rbf(sv, &x, self.params.gamma);
        }
        if clip_to_range {
            acc.clamp(self.score_range.0, self.score_range.1)
        } else {
            acc
        }
    }
}

/// Unweighted mean of two models' predictions on their own feature vectors.
pub fn ensemble_predict(
    m1: &RegressionModel,
    m2: &RegressionModel,
    v1: &FeatureVector,
    v2: &FeatureVector,
    clip_to_range: bool,
) -> Result<f64> {
    let a = m1.predict(v1, clip_to_range)?;
    let b = m2.predict(v2, clip_to_range)?;
    Ok(0.5 * (a + b))
}

#[inline]
fn rbf(u: &[f64], v: &[f64], gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for (a, b) in u.iter().zip(v) {
        let d = a - b;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Trains an epsilon-SVR on per-video feature vectors and scores.
pub fn svr_train(
    layout: ModelLayout,
    samples: &[Vec<f64>],
    scores: &[f64],
    params: &SvrParams,
) -> Result<RegressionModel> {
    let n = samples.len();
    if n != scores.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} samples but {} scores",
            scores.len()
        )));
    }
    if n < 2 {
        return Err(Error::Training(format!("need at least 2 samples, got {n}")));
    }
    let dim = layout.dimension();
    for (i, row) in samples.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} has {} features, layout {} expects {dim}",
                row.len(),
                layout.id()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training(format!(
                "sample {i} has non-finite features"
            )));
        }
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite training score".into()));
    }
    if params.c <= 0.0 || params.gamma <= 0.0 || params.epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need C > 0, gamma > 0, epsilon >= 0; got C={} gamma={} epsilon={}",
            params.c, params.gamma, params.epsilon
        )));
    }

    let scaler = FeatureScaler::fit(dim, samples);
    let mut warnings = Vec::new();
    for j in scaler.degenerate_columns() {
        warnings.push(format!(
            "feature '{}' is constant in the training set; normalized value pinned to 0",
            layout.feature_names()[j]
        ));
    }
    let x: Vec<Vec<f64>> = samples.iter().map(|row| scaler.apply(row)).collect();

    let solution = solve_smo(&x, scores, params)?;

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, beta) in solution.betas.iter().enumerate() {
        if *beta != 0.0 {
            support_vectors.push(x[i].clone());
            coefficients.push(*beta);
        }
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in scores {
        lo = lo.min(s);
        hi = hi.max(s);
    }

    Ok(RegressionModel {
        layout,
        params: params.clone(),
        scaler,
        support_vectors,
        coefficients,
        bias: solution.bias,
        score_range: (lo, hi),
        solver_iterations: solution.iterations,
        warnings,
    })
}

struct SmoSolution {
    betas: Vec<f64>,
    bias: f64,
    iterations: u64,
}

/// LIBSVM-style SMO on the unified 2n-variable dual: variables `0..n` carry
/// label +1 (the alpha side), `n..2n` label -1 (the alpha-star side).
/// Working pairs are chosen by maximal violation with a second-order gain
/// tie-break; the KKT gap doubles as the stopping criterion.
fn solve_smo(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SmoSolution> {
    let n = x.len();
    let c = params.c;
    let tau = 1e-12;

    // dense kernel cache; training sets are per-video aggregates, so n is
    // modest and n^2 doubles are affordable
    let mut kernel = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let k = rbf(&x[i], &x[j], params.gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let kval = |s: usize, t: usize| kernel[(s % n) * n + (t % n)];
    let label = |s: usize| if s < n { 1.0 } else { -1.0 };

    let mut alpha = vec![0.0f64; 2 * n];
    let mut grad = vec![0.0f64; 2 * n];
    for i in 0..n {
        grad[i] = params.epsilon - y[i];
        grad[i + n] = params.epsilon + y[i];
    }

    let mut iterations = 0u64;
    loop {
        // working-set selection: first index maximizes -y G over I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for s in 0..2 * n {
            let in_up = if s < n { alpha[s] < c } else { alpha[s] > 0.0 };
            if in_up {
                let v = -label(s) * grad[s];
                if v >= gmax {
                    gmax = v;
                    i = s;
                }
            }
        }

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY;
        for t in 0..2 * n {
            let in_low = if t < n { alpha[t] > 0.0 } else { alpha[t] < c };
            if !in_low {
                continue;
            }
            let yg = label(t) * grad[t];
            if yg >= gmax2 {
                gmax2 = yg;
            }
            let grad_diff = gmax + yg;
            if grad_diff > 0.0 && i != usize::MAX {
                let mut quad = kval(i, i) + kval(t, t) - 2.0 * kval(i, t);
                if quad <= 0.0 {
                    quad = tau;
                }
                let gain = -(grad_diff * grad_diff) / quad;
                if gain <= best_gain {
                    best_gain = gain;
                    j = t;
                }
            }
        }

        if gmax + gmax2 < params.gap_tolerance || j == usize::MAX {
            break;
        }
        iterations += 1;
        if iterations > params.max_iterations {
            return Err(Error::Training(format!(
                "solver did not converge within {} iterations (gap {:.3e})",
                params.max_iterations,
                gmax + gmax2
            )));
        }

        // two-variable update under the equality constraint
        let old_ai = alpha[i];
        let old_aj = alpha[j];
        if label(i) != label(j) {
            let mut quad = kval(i, i) + kval(j, j) - 2.0 * kval(i, j);
            if quad <= 0.0 {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = kval(i, i) + kval(j, j) - 2.0 * kval(i, j);
            if quad <= 0.0 {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let dai = alpha[i] - old_ai;
        let daj = alpha[j] - old_aj;
        for (t, g) in grad.iter_mut().enumerate() {
            *g += label(t) * (label(i) * kval(t, i) * dai + label(j) * kval(t, j) * daj);
        }
    }

    // bias from the KKT conditions: average over free variables, midpoint
    // of the feasibility interval otherwise
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut nr_free = 0usize;
    for s in 0..2 * n {
        let yg = label(s) * grad[s];
        if alpha[s] >= c {
            if label(s) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[s] <= 0.0 {
            if label(s) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            nr_free += 1;
            sum_free += yg;
        }
    }
    let rho = if nr_free > 0 {
        sum_free / nr_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let betas = (0..n).map(|i| alpha[i] - alpha[i + n]).collect();
    Ok(SmoSolution {
        betas,
        bias: -rho,
        iterations,
    })
}
