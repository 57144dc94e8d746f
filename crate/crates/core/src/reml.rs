//! Mixed model equations for both transformations and the REML profile
//! log-likelihood L(lambda).
//!
//! Inner-product blocks are assembled once per dataset; each likelihood
//! evaluation only re-forms Z'Z + lambda*Q and factorizes. The sparse path
//! keeps that matrix banded with a two-column fixed-effect border, so one
//! evaluation costs O(m). The Currie-Durban path stores Z'Z densely and uses
//! a dense Cholesky, deliberately keeping the O(m^3) cost of the baseline.

use crate::band::{self, BandSymMatrix, BorderedBandMatrix};
use crate::basis::{BasisSpec, SparseBasis};
use crate::error::{Error, Result};
use crate::penalty::{self, FixedDesign, Precision, PrecisionKind};
use nalgebra::{DMatrix, DVector, Dyn};

/// Number of fixed effects: intercept and linear trend.
pub const P: usize = 2;

/// Relative slack under which a nonpositive residual sum of squares is
/// treated as an exact fit rather than an error.
const SIGMA_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Sparse transformation a = G b + D' u with Q = (DD')^2.
    Mmb,
    /// Dense baseline a = G b + D'(DD')^{-1} u with Q = I.
    CurrieDurban,
}

impl Transform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transform::Mmb => "mmb",
            Transform::CurrieDurban => "cd",
        }
    }
}

#[derive(Debug, Clone)]
pub enum ZtZStore {
    Band(BandSymMatrix),
    Dense(DMatrix<f64>),
}

/// Lambda-independent inner products of one (data, basis, transformation).
pub struct ModelBlocks {
    pub kind: Transform,
    pub n: usize,
    pub m: usize,
    pub xtx: [f64; 4],
    pub xty: [f64; 2],
    pub yty: f64,
    /// P x (m-2), row-major.
    pub xtz: Vec<f64>,
    pub ztz: ZtZStore,
    pub zty: Vec<f64>,
    pub precision: Precision,
    pub log_det_q: f64,
    /// Bandwidth of the sparse coefficient block (mmb only).
    pub band_width: usize,
    /// Factorization of DD', kept for the Currie-Durban back-transformation.
    gram_chol: Option<nalgebra::Cholesky<f64, Dyn>>,
}

/// One evaluation of the profile likelihood at a fixed lambda.
#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub lambda: f64,
    pub loglik: f64,
    pub sigma2_hat: f64,
    pub b_hat: [f64; 2],
    pub u_hat: Vec<f64>,
    /// Set when the residual sum of squares vanished to rounding and
    /// sigma2_hat was clamped to zero (exact interpolation).
    pub degenerate: bool,
}

/// Assemble the model blocks for either transformation.
///
/// The sparse path never forms Z: each basis row touches at most
/// `degree + 3` consecutive columns of Z = B D', and Z'Z is accumulated
/// directly in band storage. The dense baseline applies (DD')^{-1} to the
/// sparse blocks afterwards.
pub fn assemble(
    basis: &SparseBasis,
    y: &[f64],
    spec: &BasisSpec,
    kind: Transform,
) -> Result<ModelBlocks> {
    let n = basis.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response vector",
            expected: n,
            actual: y.len(),
        });
    }
    let m = spec.m();
    if basis.m_cols() != m {
        return Err(Error::DimensionMismatch {
            what: "basis columns",
            expected: m,
            actual: basis.m_cols(),
        });
    }
    if m < 3 {
        return Err(Error::SizeTooSmall { m, min: 3 });
    }
    if n <= P {
        return Err(Error::TooFewObservations { n, min: P });
    }
    let q = spec.degree;
    let mr = m - 2;
    let band_width = (q + 2).max(4).min(mr - 1);

    let mut xtx = [0.0f64; 4];
    let mut xty = [0.0f64; 2];
    let mut yty = 0.0f64;
    let mut xtz = vec![0.0f64; P * mr];
    let mut zty = vec![0.0f64; mr];
    let mut ztz = BandSymMatrix::zeros(mr, band_width);

    // scratch for one sparse Z row: at most q + 3 entries
    let mut zrow = [0.0f64; 8];
    for i in 0..n {
        let (first, bvals) = basis.row(i);
        let bval = |col: usize| -> f64 {
            if col >= first && col <= first + q {
                bvals[col - first]
            } else {
                0.0
            }
        };
        // fixed-effect row of X = B G; g0 sums the row, g1 weights columns
        let x0: f64 = bvals.iter().sum();
        let x1: f64 = bvals
            .iter()
            .enumerate()
            .map(|(t, v)| v * (first + t + 1) as f64)
            .sum();
        // sparse row of Z = B D': column c pulls B columns c..c+2
        let lo = first.saturating_sub(2);
        let hi = (first + q).min(mr - 1);
        for c in lo..=hi {
            zrow[c - lo] = bval(c) - 2.0 * bval(c + 1) + bval(c + 2);
        }
        let yi = y[i];
        yty += yi * yi;
        xty[0] += x0 * yi;
        xty[1] += x1 * yi;
        xtx[0] += x0 * x0;
        xtx[1] += x0 * x1;
        xtx[3] += x1 * x1;
        for c in lo..=hi {
            let zc = zrow[c - lo];
            zty[c] += zc * yi;
            xtz[c] += x0 * zc;
            xtz[mr + c] += x1 * zc;
            for cc in lo..=c {
                ztz.add(c, cc, zc * zrow[cc - lo]);
            }
        }
    }
    xtx[2] = xtx[1];

    match kind {
        Transform::Mmb => {
            let precision = penalty::build_q(m, PrecisionKind::SquaredGram)?;
            let log_det_q = precision.log_det;
            Ok(ModelBlocks {
                kind,
                n,
                m,
                xtx,
                xty,
                yty,
                xtz,
                ztz: ZtZStore::Band(ztz),
                zty,
                precision,
                log_det_q,
                band_width,
                gram_chol: None,
            })
        }
        Transform::CurrieDurban => {
            // Z_cd = Z (DD')^{-1}: push the inverse through every block
            let gram = penalty::gram_dd_t(m)?.to_dense();
            let chol = nalgebra::Cholesky::new(gram).ok_or(Error::DenseNotPositiveDefinite)?;
            let s = ztz.to_dense();
            let half = chol.solve(&s);
            let ztz_cd = chol.solve(&half.transpose());
            let xtz_mat = DMatrix::from_fn(mr, P, |r, c| xtz[c * mr + r]);
            let xtz_cd = chol.solve(&xtz_mat);
            let mut xtz_out = vec![0.0; P * mr];
            for c in 0..P {
                for r in 0..mr {
                    xtz_out[c * mr + r] = xtz_cd[(r, c)];
                }
            }
            let zty_cd = chol.solve(&DVector::from_column_slice(&zty));
            let precision = penalty::build_q(m, PrecisionKind::Identity)?;
            Ok(ModelBlocks {
                kind,
                n,
                m,
                xtx,
                xty,
                yty,
                xtz: xtz_out,
                ztz: ZtZStore::Dense(ztz_cd),
                zty: zty_cd.as_slice().to_vec(),
                precision,
                log_det_q: 0.0,
                band_width,
                gram_chol: Some(chol),
            })
        }
    }
}

/// Evaluate the REML profile log-likelihood at `lambda`.
///
/// Solves the mixed model equations with random effects ordered first, so
/// the sparse path factorizes a banded block with a dense two-column border.
pub fn profile_loglik(blocks: &ModelBlocks, lambda: f64) -> Result<ProfilePoint> {
    assert!(lambda > 0.0, "lambda must be positive");
    let mr = blocks.m - 2;
    let n = blocks.n;

    let (u_hat, b_hat, log_det_c) = match &blocks.ztz {
        ZtZStore::Band(ztz) => {
            let mut band = ztz.clone();
            band.axpy(lambda, &blocks.precision.band);
            let mut border = vec![0.0; mr * P];
            for r in 0..mr {
                for c in 0..P {
                    border[r * P + c] = blocks.xtz[c * mr + r];
                }
            }
            let matrix = BorderedBandMatrix::new(band, border, blocks.xtx.to_vec(), P);
            let factor = band::cholesky(&matrix)?;
            let mut rhs = blocks.zty.clone();
            rhs.extend_from_slice(&blocks.xty);
            let sol = band::solve(&factor, &rhs)?;
            let u = sol[..mr].to_vec();
            let b = [sol[mr], sol[mr + 1]];
            (u, b, factor.log_det)
        }
        ZtZStore::Dense(ztz) => {
            let dim = mr + P;
            let mut c_mat = DMatrix::zeros(dim, dim);
            for i in 0..mr {
                for j in 0..mr {
                    c_mat[(i, j)] = ztz[(i, j)];
                }
                c_mat[(i, i)] += lambda * blocks.precision.band.get(i, i);
                for r in 0..P {
                    c_mat[(i, mr + r)] = blocks.xtz[r * mr + i];
                    c_mat[(mr + r, i)] = blocks.xtz[r * mr + i];
                }
            }
            for r in 0..P {
                for c in 0..P {
                    c_mat[(mr + r, mr + c)] = blocks.xtx[r * P + c];
                }
            }
            let chol = nalgebra::Cholesky::new(c_mat).ok_or(Error::DenseNotPositiveDefinite)?;
            let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
            let mut rhs = DVector::zeros(dim);
            for i in 0..mr {
                rhs[i] = blocks.zty[i];
            }
            rhs[mr] = blocks.xty[0];
            rhs[mr + 1] = blocks.xty[1];
            let sol = chol.solve(&rhs);
            let u = sol.as_slice()[..mr].to_vec();
            let b = [sol[mr], sol[mr + 1]];
            (u, b, log_det)
        }
    };

    let fitted_inner: f64 = b_hat[0] * blocks.xty[0]
        + b_hat[1] * blocks.xty[1]
        + u_hat.iter().zip(&blocks.zty).map(|(a, b)| a * b).sum::<f64>();
    let rss = blocks.yty - fitted_inner;
    let dof = (n - P) as f64;
    if rss < -SIGMA_SLACK * blocks.yty {
        return Err(Error::NonpositiveSigma { value: rss / dof });
    }
    // anything inside the rounding slack is an exact interpolation; clamping
    // the whole band keeps the profile single-branched as lambda varies
    let degenerate = rss <= SIGMA_SLACK * blocks.yty;
    let sigma2 = if degenerate { 0.0 } else { rss / dof };
    // floor the variance inside the log so an exact interpolation still
    // yields a finite (huge) likelihood instead of poisoning the search
    let constant = dof - blocks.log_det_q;
    let loglik = -0.5
        * (log_det_c - (blocks.m - P) as f64 * lambda.ln()
            + dof * sigma2.max(f64::MIN_POSITIVE).ln()
            + constant);
    Ok(ProfilePoint {
        lambda,
        loglik,
        sigma2_hat: sigma2,
        b_hat,
        u_hat,
        degenerate,
    })
}

/// Reconstruct the m spline coefficients from a profile point.
pub fn coefficients(blocks: &ModelBlocks, point: &ProfilePoint) -> Result<Vec<f64>> {
    let mr = blocks.m - 2;
    if point.u_hat.len() != mr {
        return Err(Error::KindMismatch);
    }
    let d = penalty::build_d(blocks.m)?;
    let g = FixedDesign { m: blocks.m };
    let mut a = g.apply(&point.b_hat);
    let spread = match blocks.kind {
        Transform::Mmb => d.apply_transpose(&point.u_hat),
        Transform::CurrieDurban => {
            let chol = blocks.gram_chol.as_ref().ok_or(Error::KindMismatch)?;
            let v = chol.solve(&DVector::from_column_slice(&point.u_hat));
            d.apply_transpose(v.as_slice())
        }
    };
    for (ai, si) in a.iter_mut().zip(&spread) {
        *ai += si;
    }
    Ok(a)
}

/// Solve the direct penalized objective (B'B + lambda D'D) a = B'y as a
/// banded SPD system. Independent route used as the oracle for both
/// mixed-model transformations.
pub fn direct_pspline_solve(
    basis: &SparseBasis,
    y: &[f64],
    d: &penalty::DiffOp,
    lambda: f64,
) -> Result<Vec<f64>> {
    assert!(lambda > 0.0, "lambda must be positive");
    let n = basis.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            what: "response vector",
            expected: n,
            actual: y.len(),
        });
    }
    let m = basis.m_cols();
    if d.m != m {
        return Err(Error::DimensionMismatch {
            what: "difference operator",
            expected: m,
            actual: d.m,
        });
    }
    let q = basis.degree();
    let w = q.max(2).min(m - 1);
    let mut btb = BandSymMatrix::zeros(m, w);
    let mut bty = vec![0.0; m];
    for i in 0..n {
        let (first, vals) = basis.row(i);
        for (t, &v) in vals.iter().enumerate() {
            bty[first + t] += v * y[i];
            for (s, &vv) in vals.iter().enumerate().take(t + 1) {
                btb.add(first + t, first + s, v * vv);
            }
        }
    }
    btb.axpy(lambda, &penalty::gram_dt_d(m)?);
    let factor = band::cholesky(&BorderedBandMatrix::without_border(btb))?;
    band::solve(&factor, &bty)
}

/// Fitted values B a at the basis rows.
pub fn fitted_values(basis: &SparseBasis, a: &[f64]) -> Vec<f64> {
    (0..basis.n_rows()).map(|i| basis.dot_row(i, a)).collect()
}
