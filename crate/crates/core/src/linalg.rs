//! Minimal dense symmetric-matrix helpers: just enough for 25x25 GSM
//! covariances and 4x4 least-squares normal equations.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{n}x{n} matrix needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> SquareMatrix {
        let mut out = SquareMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, 0.5 * (self.get(i, j) + self.get(j, i)));
            }
        }
        out
    }

    pub fn frobenius_distance(&self, other: &SquareMatrix) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += (a - b) * (a - b);
        }
        acc.sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for a in &self.data {
            acc += a * a;
        }
        acc.sqrt()
    }
}

/// `ln det M` for a symmetric positive definite matrix, via Cholesky.
///
/// Fails with [`Error::NotPositiveSemiDefinite`] when a pivot is not
/// strictly positive.
pub fn cholesky_log_det(m: &SquareMatrix) -> Result<f64> {
    let n = m.size();
    let mut l = vec![0.0f64; n * n];
    let mut log_det = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::NotPositiveSemiDefinite);
                }
                let d = sum.sqrt();
                l[i * n + i] = d;
                log_det += 2.0 * d.ln();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(log_det)
}

/// Solves `A x = b` for small symmetric positive definite `A` (Cholesky).
pub fn solve_spd(a: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.size();
    if b.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "rhs length {} for {n}x{n} system",
            b.len()
        )));
    }
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::NotPositiveSemiDefinite);
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // forward substitution L y = b
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    // back substitution L^T x = y
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_scaled_identity() {
        let mut m = SquareMatrix::identity(25);
        for i in 0..25 {
            m.set(i, i, 0.1);
        }
        let ld = cholesky_log_det(&m).unwrap();
        assert!((ld - 25.0 * 0.1f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_det_rejects_indefinite_matrices() {
        let mut m = SquareMatrix::identity(3);
        m.set(2, 2, -1.0);
        assert!(matches!(
            cholesky_log_det(&m),
            Err(Error::NotPositiveSemiDefinite)
        ));
    }

    #[test]
    fn solve_round_trips() {
        // A = B^T B + I is SPD
        let b =
            SquareMatrix::from_rows(3, vec![1.0, 2.0, 0.0, 0.5, 1.0, 3.0, 2.0, 0.0, 1.0]).unwrap();
        let mut a = SquareMatrix::zeros(3);
        for i in 0..3 {
            for j in 0..3 {
                let mut sum = if i == j { 1.0 } else { 0.0 };
                for k in 0..3 {
                    sum += b.get(k, i) * b.get(k, j);
                }
                a.set(i, j, sum);
            }
        }
        let x_true = [1.0, -2.0, 0.5];
        let mut rhs = [0.0; 3];
        for (i, r) in rhs.iter_mut().enumerate() {
            for (j, x) in x_true.iter().enumerate() {
                *r += a.get(i, j) * x;
            }
        }
        let x = solve_spd(&a, &rhs).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-10);
        }
    }
}
