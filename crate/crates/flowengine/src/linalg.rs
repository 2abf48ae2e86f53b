//! Dense least-squares via Householder QR.
//!
//! Small and self-contained: the design matrices in this crate are tall and
//! narrow (tens of columns at most), so an unblocked column-major QR is both
//! simple and fast enough, and it keeps results bit-reproducible across
//! platforms.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Column-major dense matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let cols = columns.len();
        if cols == 0 {
            return Err(LinalgError::Shape("matrix needs at least one column".into()));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(LinalgError::Shape("columns have unequal lengths".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for col in columns {
            data.extend_from_slice(&col);
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for c in 0..self.cols {
            let col = self.col(c);
            let xc = x[c];
            for (yi, a) in y.iter_mut().zip(col) {
                *yi += a * xc;
            }
        }
        y
    }

    /// y = Aᵀ x
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|c| self.col(c).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Solve min ||y - X b||^2 by Householder QR. Errors with the offending
/// column index when X is (numerically) rank deficient.
pub fn solve_least_squares(x: &Mat, y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let (m, p) = (x.rows, x.cols);
    if y.len() != m {
        return Err(LinalgError::Shape(format!(
            "response length {} does not match {} rows",
            y.len(),
            m
        )));
    }
    if m < p {
        return Err(LinalgError::Shape(format!(
            "need at least as many rows ({m}) as columns ({p})"
        )));
    }
    let mut a = x.clone();
    let mut rhs = y.to_vec();

    // Scale reference for the rank test.
    let max_col_norm = (0..p)
        .map(|c| a.col(c).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    if max_col_norm == 0.0 {
        return Err(LinalgError::RankDeficient { column: 0 });
    }
    let tol = 1e-12 * max_col_norm * (m as f64).sqrt().max(1.0);

    for k in 0..p {
        // Householder vector for column k, rows k..m.
        let norm_x: f64 = (k..m).map(|r| a.get(r, k).powi(2)).sum::<f64>().sqrt();
        if norm_x <= tol {
            return Err(LinalgError::RankDeficient { column: k });
        }
        let x_kk = a.get(k, k);
        let alpha = if x_kk >= 0.0 { -norm_x } else { norm_x };
        // v = x - alpha e1 (only rows k..m), stored in place of column k.
        a.set(k, k, x_kk - alpha);
        let v_norm_sq: f64 = (k..m).map(|r| a.get(r, k).powi(2)).sum();
        if v_norm_sq == 0.0 {
            return Err(LinalgError::RankDeficient { column: k });
        }

        // Apply H = I - 2 v vᵀ / (vᵀv) to the remaining columns and rhs.
        for c in (k + 1)..p {
            let mut dot = 0.0;
            for r in k..m {
                dot += a.get(r, k) * a.get(r, c);
            }
            let scale = 2.0 * dot / v_norm_sq;
            for r in k..m {
                let v_r = a.get(r, k);
                let val = a.get(r, c) - scale * v_r;
                a.set(r, c, val);
            }
        }
        let mut dot = 0.0;
        for r in k..m {
            dot += a.get(r, k) * rhs[r];
        }
        let scale = 2.0 * dot / v_norm_sq;
        for r in k..m {
            rhs[r] -= scale * a.get(r, k);
        }

        // The diagonal entry of R; the v entries below it are dead.
        a.set(k, k, alpha);
    }

    // Back substitution on R (upper p x p part).
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = rhs[k];
        for c in (k + 1)..p {
            s -= a.get(k, c) * beta[c];
        }
        beta[k] = s / a.get(k, k);
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    /// Independent oracle: solve the normal equations XᵀX b = Xᵀy by
    /// Gaussian elimination with partial pivoting.
    fn normal_equations_oracle(x: &Mat, y: &[f64]) -> Vec<f64> {
        let p = x.cols();
        let mut g = vec![vec![0.0; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                g[i][j] = x.col(i).iter().zip(x.col(j)).map(|(a, b)| a * b).sum();
            }
            g[i][p] = x.col(i).iter().zip(y).map(|(a, b)| a * b).sum();
        }
        for k in 0..p {
            let pivot = (k..p).max_by(|&a, &b| g[a][k].abs().total_cmp(&g[b][k].abs())).unwrap();
            g.swap(k, pivot);
            for i in (k + 1)..p {
                let f = g[i][k] / g[k][k];
                for j in k..=p {
                    g[i][j] -= f * g[k][j];
                }
            }
        }
        let mut b = vec![0.0; p];
        for k in (0..p).rev() {
            let mut s = g[k][p];
            for j in (k + 1)..p {
                s -= g[k][j] * b[j];
            }
            b[k] = s / g[k][k];
        }
        b
    }

    fn random_problem(rng: &mut SplitMix64, m: usize, p: usize) -> (Mat, Vec<f64>) {
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|c| {
                (0..m)
                    .map(|_| if c == 0 { 1.0 } else { rng.normal(0.0, 1.0) })
                    .collect()
            })
            .collect();
        let x = Mat::from_columns(cols).unwrap();
        let y: Vec<f64> = (0..m).map(|_| rng.normal(0.0, 1.0)).collect();
        (x, y)
    }

    #[test]
    fn exact_interpolation() {
        // y = 2x + 1 with no noise.
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let x = Mat::from_columns(vec![vec![1.0; 20], xs]).unwrap();
        let beta = solve_least_squares(&x, &y).unwrap();
        assert!((beta[0] - 1.0).abs() < 1e-10);
        assert!((beta[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..50 {
            let (x, y) = random_problem(&mut rng, 50, 4);
            let qr = solve_least_squares(&x, &y).unwrap();
            let ne = normal_equations_oracle(&x, &y);
            for (a, b) in qr.iter().zip(&ne) {
                assert!((a - b).abs() < 1e-8, "qr {a} vs oracle {b}");
            }
        }
    }

    #[test]
    fn residual_orthogonality() {
        let mut rng = SplitMix64::new(9);
        for _ in 0..20 {
            let (x, y) = random_problem(&mut rng, 80, 5);
            let beta = solve_least_squares(&x, &y).unwrap();
            let fitted = x.mul_vec(&beta);
            let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
            let grad = x.tr_mul_vec(&resid);
            let inf_norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(inf_norm < 1e-6, "X'r inf-norm {inf_norm}");
        }
    }

    #[test]
    fn detects_rank_deficiency() {
        let c0 = vec![1.0; 10];
        let c1: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let c2: Vec<f64> = c1.iter().map(|v| 2.0 * v).collect();
        let x = Mat::from_columns(vec![c0, c1, c2]).unwrap();
        let y = vec![1.0; 10];
        match solve_least_squares(&x, &y) {
            Err(LinalgError::RankDeficient { column }) => assert_eq!(column, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wide_matrix() {
        let x = Mat::from_columns(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert!(matches!(
            solve_least_squares(&x, &[1.0, 2.0]),
            Err(LinalgError::Shape(_))
        ));
    }
}
