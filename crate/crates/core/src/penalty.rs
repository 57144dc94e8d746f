//! Second-order difference penalty pieces: the difference operator D, the
//! fixed-effect design G (intercept + linear trend), and the random-effect
//! precision Q for each transformation.
//!
//! D, DD', D'D and (DD')^2 are built in integer arithmetic first; the
//! stencils are small integers and the products stay exact.

use crate::band::{BandSymMatrix, BorderedBandMatrix};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Second-order difference operator, (m-2) x m with rows (1, -2, 1).
#[derive(Debug, Clone, Copy)]
pub struct DiffOp {
    pub m: usize,
}

impl DiffOp {
    pub fn rows(&self) -> usize {
        self.m - 2
    }

    /// Entry (k, j); stencil (1, -2, 1) at columns k, k+1, k+2.
    pub fn entry(&self, k: usize, j: usize) -> f64 {
        if j == k {
            1.0
        } else if j == k + 1 {
            -2.0
        } else if j == k + 2 {
            1.0
        } else {
            0.0
        }
    }

    /// `D' u`: maps m-2 random effects onto m spline coefficients.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.rows());
        let mut a = vec![0.0; self.m];
        for (k, &uk) in u.iter().enumerate() {
            a[k] += uk;
            a[k + 1] -= 2.0 * uk;
            a[k + 2] += uk;
        }
        a
    }

    /// `D a`: second differences of a coefficient vector.
    pub fn apply(&self, a: &[f64]) -> Vec<f64> {
        assert_eq!(a.len(), self.m);
        (0..self.rows())
            .map(|k| a[k] - 2.0 * a[k + 1] + a[k + 2])
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows(), self.m, |k, j| self.entry(k, j))
    }
}

/// Fixed-effect design G, m x 2 with columns (1,...,1) and (1,2,...,m).
#[derive(Debug, Clone, Copy)]
pub struct FixedDesign {
    pub m: usize,
}

impl FixedDesign {
    pub const P: usize = 2;

    /// Entry (j, col), 0-based row.
    pub fn entry(&self, j: usize, col: usize) -> f64 {
        match col {
            0 => 1.0,
            1 => (j + 1) as f64,
            _ => panic!("fixed design has two columns"),
        }
    }

    /// `G b` for b = (b0, b1).
    pub fn apply(&self, b: &[f64; 2]) -> Vec<f64> {
        (0..self.m).map(|j| b[0] + b[1] * (j + 1) as f64).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, 2, |j, c| self.entry(j, c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionKind {
    /// Currie-Durban transformation: Q = I.
    Identity,
    /// Mixed-model B-splines: Q = (DD')^2, bandwidth 4.
    SquaredGram,
}

/// Random-effect precision matrix of dimension m-2, with its cached
/// log-determinant (the lambda-independent part of the REML constant).
#[derive(Debug, Clone)]
pub struct Precision {
    pub kind: PrecisionKind,
    pub band: BandSymMatrix,
    pub log_det: f64,
}

pub fn build_d(m: usize) -> Result<DiffOp> {
    if m < 3 {
        return Err(Error::SizeTooSmall { m, min: 3 });
    }
    Ok(DiffOp { m })
}

pub fn build_g(m: usize) -> Result<FixedDesign> {
    if m < 3 {
        return Err(Error::SizeTooSmall { m, min: 3 });
    }
    Ok(FixedDesign { m })
}

/// DD', the (m-2) x (m-2) Gram matrix of second differences: exact Toeplitz
/// band (6, -4, 1) since every row of D carries the full stencil.
pub fn gram_dd_t(m: usize) -> Result<BandSymMatrix> {
    if m < 3 {
        return Err(Error::SizeTooSmall { m, min: 3 });
    }
    let dim = m - 2;
    let coeffs: [i64; 3] = [6, -4, 1];
    let w = 2.min(dim - 1);
    let mut band = BandSymMatrix::zeros(dim, w);
    for d in 0..=w {
        for j in 0..dim - d {
            band.set(j + d, j, coeffs[d] as f64);
        }
    }
    Ok(band)
}

/// D'D, the m x m penalty matrix of the direct P-spline objective.
pub fn gram_dt_d(m: usize) -> Result<BandSymMatrix> {
    if m < 3 {
        return Err(Error::SizeTooSmall { m, min: 3 });
    }
    let stencil: [i64; 3] = [1, -2, 1];
    let mut acc = vec![[0i64; 3]; m]; // acc[j][d] holds entry (j+d, j)
    for k in 0..m - 2 {
        for a in 0..3 {
            for b in a..3 {
                acc[k + a][b - a] += stencil[a] * stencil[b];
            }
        }
    }
    let w = 2.min(m - 1);
    let mut band = BandSymMatrix::zeros(m, w);
    for j in 0..m {
        for d in 0..=w.min(m - 1 - j) {
            band.set(j + d, j, acc[j][d] as f64);
        }
    }
    Ok(band)
}

/// Build the precision matrix for a transformation, with log|Q| attached.
pub fn build_q(m: usize, kind: PrecisionKind) -> Result<Precision> {
    if m < 3 {
        return Err(Error::SizeTooSmall { m, min: 3 });
    }
    let dim = m - 2;
    match kind {
        PrecisionKind::Identity => Ok(Precision {
            kind,
            band: BandSymMatrix::identity(dim),
            log_det: 0.0,
        }),
        PrecisionKind::SquaredGram => {
            // integer square of the Toeplitz band (6, -4, 1)
            let c = |d: i64| -> i64 {
                match d.abs() {
                    0 => 6,
                    1 => -4,
                    2 => 1,
                    _ => 0,
                }
            };
            let w = 4.min(dim - 1);
            let mut band = BandSymMatrix::zeros(dim, w);
            for j in 0..dim {
                for i in j..(j + w + 1).min(dim) {
                    let lo = (i as i64 - 2).max(0);
                    let hi = (j as i64 + 2).min(dim as i64 - 1);
                    let mut s = 0i64;
                    for k in lo..=hi {
                        s += c(i as i64 - k) * c(k - j as i64);
                    }
                    band.set(i, j, s as f64);
                }
            }
            // log|Q| = 2 log|DD'|; factoring DD' instead of Q halves the
            // condition number's exponent and keeps the constant accurate
            let gram = gram_dd_t(m)?;
            let factor = crate::band::cholesky(&BorderedBandMatrix::without_border(gram))?;
            Ok(Precision {
                kind,
                band,
                log_det: 2.0 * factor.log_det,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_matrix_small() {
        let d = build_d(4).unwrap();
        let dense = d.to_dense();
        let want = DMatrix::from_row_slice(2, 4, &[1.0, -2.0, 1.0, 0.0, 0.0, 1.0, -2.0, 1.0]);
        assert_eq!(dense, want);
    }

    #[test]
    fn d_rows_sum_to_zero_and_kill_g() {
        for m in 3..=200 {
            let d = build_d(m).unwrap();
            let g = build_g(m).unwrap();
            let dg = d.to_dense() * g.to_dense();
            assert!(dg.iter().all(|&v| v == 0.0), "D*G != 0 at m={m}");
            for k in 0..d.rows() {
                let s: f64 = (0..m).map(|j| d.entry(k, j)).sum();
                assert_eq!(s, 0.0);
            }
        }
    }

    #[test]
    fn g_columns() {
        let g = build_g(3).unwrap();
        assert_eq!(
            g.to_dense(),
            DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0])
        );
        assert_eq!(build_g(12).unwrap().to_dense().shape(), (12, 2));
    }

    #[test]
    fn size_errors() {
        assert!(matches!(build_d(2), Err(Error::SizeTooSmall { .. })));
        assert!(matches!(build_g(1), Err(Error::SizeTooSmall { .. })));
        assert!(matches!(
            build_q(2, PrecisionKind::Identity),
            Err(Error::SizeTooSmall { .. })
        ));
    }

    #[test]
    fn q_hand_values_m4() {
        let dd = gram_dd_t(4).unwrap().to_dense();
        assert_eq!(dd, DMatrix::from_row_slice(2, 2, &[6.0, -4.0, -4.0, 6.0]));
        let q = build_q(4, PrecisionKind::SquaredGram).unwrap();
        assert_eq!(
            q.band.to_dense(),
            DMatrix::from_row_slice(2, 2, &[52.0, -48.0, -48.0, 52.0])
        );
    }

    #[test]
    fn q_identity_kind() {
        let q = build_q(4, PrecisionKind::Identity).unwrap();
        assert_eq!(q.band.to_dense(), DMatrix::identity(2, 2));
        assert_eq!(q.log_det, 0.0);
    }

    #[test]
    fn q_bandwidth_is_four() {
        let q = build_q(20, PrecisionKind::SquaredGram).unwrap();
        assert_eq!(q.band.width(), 4);
        let dense = q.band.to_dense();
        // band 4 is genuinely populated, nothing beyond it by storage
        assert!(dense[(4, 0)] != 0.0);
    }

    #[test]
    fn q_matches_dense_product() {
        for m in 5..=50 {
            let d = build_d(m).unwrap().to_dense();
            let ddt = &d * d.transpose();
            let want = &ddt * &ddt;
            let q = build_q(m, PrecisionKind::SquaredGram).unwrap();
            assert!((q.band.to_dense() - &want).amax() < 1e-12, "m={m}");
        }
    }

    /// Exact determinant of an integer matrix by fraction-free (Bareiss)
    /// elimination; all intermediate divisions are exact.
    fn integer_det(mut mat: Vec<Vec<num_bigint::BigInt>>) -> num_bigint::BigInt {
        use num_bigint::BigInt;
        let n = mat.len();
        let mut prev = BigInt::from(1);
        for k in 0..n - 1 {
            assert!(mat[k][k] != BigInt::from(0));
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (&mat[i][j] * &mat[k][k] - &mat[i][k] * &mat[k][j]) / &prev;
                    mat[i][j] = v;
                }
            }
            prev = mat[k][k].clone();
        }
        mat[n - 1][n - 1].clone()
    }

    #[test]
    fn q_log_det_matches_exact_determinant() {
        use num_traits::ToPrimitive;
        let c = |d: i64| -> i64 {
            match d.abs() {
                0 => 6,
                1 => -4,
                2 => 1,
                _ => 0,
            }
        };
        for m in 5..=50usize {
            let dim = m - 2;
            let ddt: Vec<Vec<num_bigint::BigInt>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| num_bigint::BigInt::from(c(i as i64 - j as i64)))
                        .collect()
                })
                .collect();
            let det = integer_det(ddt).to_f64().unwrap();
            let q = build_q(m, PrecisionKind::SquaredGram).unwrap();
            assert!((q.log_det - 2.0 * det.ln()).abs() < 1e-8, "m={m}");
        }
    }

    #[test]
    fn q_positive_definite_up_to_200() {
        for m in 3..=200 {
            assert!(build_q(m, PrecisionKind::SquaredGram).is_ok(), "m={m}");
        }
    }

    #[test]
    fn dt_d_matches_dense() {
        for m in 3..=40 {
            let d = build_d(m).unwrap().to_dense();
            let want = d.transpose() * &d;
            let got = gram_dt_d(m).unwrap().to_dense();
            assert!((got - want).amax() < 1e-12, "m={m}");
        }
    }
}
