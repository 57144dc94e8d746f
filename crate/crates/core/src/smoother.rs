//! High-level fit/predict API over basis, penalty, mixed model and optimizer.

use crate::basis::{self, BasisSpec, SparseBasis};
use crate::error::{Error, Result};
use crate::optim;
use crate::reml::{self, ModelBlocks, Transform, P};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictMode {
    /// B(x0) a: the full smooth.
    Full,
    /// B(x0) G b: the fixed-effect linear trend only.
    Linear,
}

/// A fitted penalized smooth with everything needed for prediction.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub spec: BasisSpec,
    pub kind: Transform,
    pub lambda: f64,
    pub a_hat: Vec<f64>,
    pub b_hat: [f64; 2],
    pub u_hat: Vec<f64>,
    pub sigma2_hat: f64,
    pub loglik: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Wall time of the lambda search (or single evaluation) only.
    pub timing_seconds: f64,
    /// Wall time of block assembly, reported separately.
    pub assembly_seconds: f64,
}

/// Fit the model; with `lambda = None` the penalty is chosen by maximizing
/// the REML profile likelihood over the default bracket.
pub fn fit(
    x: &[f64],
    y: &[f64],
    spec: &BasisSpec,
    kind: Transform,
    lambda: Option<f64>,
) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "x and y",
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < P + 1 {
        return Err(Error::TooFewObservations {
            n: x.len(),
            min: P,
        });
    }
    let sparse = basis::eval_basis(spec, x)?;

    let t0 = Instant::now();
    let blocks = reml::assemble(&sparse, y, spec, kind)?;
    let assembly_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let (point, evaluations, converged) = match lambda {
        Some(l) => (reml::profile_loglik(&blocks, l)?, 1, true),
        None => {
            let opt = optim::maximize(
                |l| reml::profile_loglik(&blocks, l).map(|p| p.loglik),
                optim::DEFAULT_LO_LOG10,
                optim::DEFAULT_HI_LOG10,
                optim::DEFAULT_TOL,
            )?;
            let best = reml::profile_loglik(&blocks, opt.lambda_max)?;
            (best, opt.evaluations + 1, opt.converged)
        }
    };
    let timing_seconds = t1.elapsed().as_secs_f64();

    let a_hat = reml::coefficients(&blocks, &point)?;
    Ok(FitResult {
        spec: *spec,
        kind,
        lambda: point.lambda,
        a_hat,
        b_hat: point.b_hat,
        u_hat: point.u_hat,
        sigma2_hat: point.sigma2_hat,
        loglik: point.loglik,
        evaluations,
        converged,
        timing_seconds,
        assembly_seconds,
    })
}

/// Predict on new points inside the fitted domain. Extrapolation is an
/// error: the basis is undefined outside [x_min, x_max].
pub fn predict(fit: &FitResult, x0: &[f64], mode: PredictMode) -> Result<Vec<f64>> {
    let sparse = basis::eval_basis(&fit.spec, x0)?;
    Ok(predict_with_basis(fit, &sparse, mode))
}

pub fn predict_with_basis(fit: &FitResult, sparse: &SparseBasis, mode: PredictMode) -> Vec<f64> {
    match mode {
        PredictMode::Full => reml::fitted_values(sparse, &fit.a_hat),
        PredictMode::Linear => {
            // B G b: g0 row-sums to one, g1 weights the active columns
            (0..sparse.n_rows())
                .map(|i| {
                    let (first, vals) = sparse.row(i);
                    let s0: f64 = vals.iter().sum();
                    let s1: f64 = vals
                        .iter()
                        .enumerate()
                        .map(|(t, v)| v * (first + t + 1) as f64)
                        .sum();
                    fit.b_hat[0] * s0 + fit.b_hat[1] * s1
                })
                .collect()
        }
    }
}

/// Check that a_hat agrees with its reconstruction from (b_hat, u_hat).
pub fn self_consistency_error(fit: &FitResult) -> f64 {
    let d = crate::penalty::DiffOp { m: fit.spec.m() };
    let g = crate::penalty::FixedDesign { m: fit.spec.m() };
    let mut a = g.apply(&fit.b_hat);
    let spread = match fit.kind {
        Transform::Mmb => d.apply_transpose(&fit.u_hat),
        Transform::CurrieDurban => {
            let gram = crate::penalty::gram_dd_t(fit.spec.m()).unwrap().to_dense();
            let chol = nalgebra::Cholesky::new(gram).unwrap();
            let v = chol.solve(&nalgebra::DVector::from_column_slice(&fit.u_hat));
            d.apply_transpose(v.as_slice())
        }
    };
    for (ai, si) in a.iter_mut().zip(&spread) {
        *ai += si;
    }
    a.iter()
        .zip(&fit.a_hat)
        .fold(0.0f64, |acc, (r, s)| acc.max((r - s).abs()))
}

/// Convenience: assemble blocks once for external timing loops.
pub fn assemble_blocks(
    x: &[f64],
    y: &[f64],
    spec: &BasisSpec,
    kind: Transform,
) -> Result<(SparseBasis, ModelBlocks)> {
    let sparse = basis::eval_basis(spec, x)?;
    let blocks = reml::assemble(&sparse, y, spec, kind)?;
    Ok((sparse, blocks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_spec;
    use crate::sim;

    #[test]
    fn constant_data_fits_exactly() {
        let spec = build_spec(0.0, 10.0, 10, 2).unwrap();
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 10.0 / 49.0).collect();
        let y = vec![5.0; 50];
        for kind in [Transform::Mmb, Transform::CurrieDurban] {
            let f = fit(&x, &y, &spec, kind, Some(1.0)).unwrap();
            let pred = predict(&f, &x, PredictMode::Full).unwrap();
            assert!(pred.iter().all(|&v| (v - 5.0).abs() < 1e-10));
        }
    }

    #[test]
    fn noiseless_linear_data_pins_lambda_to_upper_bracket() {
        let spec = build_spec(0.0, 10.0, 10, 2).unwrap();
        let x: Vec<f64> = (0..80).map(|i| i as f64 * 10.0 / 79.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| 2.0 + 3.0 * v).collect();
        let f = fit(&x, &y, &spec, Transform::Mmb, None).unwrap();
        assert!(!f.converged);
        assert!(f.lambda.log10() > 7.5, "lambda = {}", f.lambda);
        let pred = predict(&f, &x, PredictMode::Full).unwrap();
        for (p, yy) in pred.iter().zip(&y) {
            assert!((p - yy).abs() < 1e-6);
        }
    }

    #[test]
    fn paper_style_simulation_recovers_truth() {
        let (x, y) = sim::simulate(1000, 0.0, 10.0, 0.5, 0);
        let spec = build_spec(0.0, 10.0, 100, 2).unwrap();
        let f = fit(&x, &y, &spec, Transform::Mmb, None).unwrap();
        assert!(f.converged);
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let pred = predict(&f, &grid, PredictMode::Full).unwrap();
        let mse: f64 = grid
            .iter()
            .zip(&pred)
            .map(|(g, p)| (p - sim::sim_fun(*g)).powi(2))
            .sum::<f64>()
            / grid.len() as f64;
        assert!(mse.sqrt() < 0.1, "rmse = {}", mse.sqrt());
        assert!(f.lambda > 0.01 && f.lambda < 100.0, "lambda = {}", f.lambda);
    }

    #[test]
    fn linear_mode_is_affine_on_a_grid() {
        let (x, y) = sim::simulate(300, 0.0, 10.0, 0.5, 4);
        let spec = build_spec(0.0, 10.0, 20, 2).unwrap();
        let f = fit(&x, &y, &spec, Transform::Mmb, Some(1.0)).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let lin = predict(&f, &grid, PredictMode::Linear).unwrap();
        for w in lin.windows(3) {
            assert!((w[0] - 2.0 * w[1] + w[2]).abs() < 1e-10);
        }
    }

    #[test]
    fn in_sample_prediction_matches_fitted_values() {
        let (x, y) = sim::simulate(200, 0.0, 10.0, 0.5, 8);
        let spec = build_spec(0.0, 10.0, 15, 2).unwrap();
        let f = fit(&x, &y, &spec, Transform::Mmb, Some(0.5)).unwrap();
        let sparse = crate::basis::eval_basis(&spec, &x).unwrap();
        let direct = crate::reml::fitted_values(&sparse, &f.a_hat);
        let pred = predict(&f, &x, PredictMode::Full).unwrap();
        for (a, b) in pred.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn kinds_predict_identically_at_fixed_lambda() {
        let (x, y) = sim::simulate(250, 0.0, 10.0, 0.5, 21);
        let spec = build_spec(0.0, 10.0, 18, 2).unwrap();
        let fa = fit(&x, &y, &spec, Transform::Mmb, Some(2.0)).unwrap();
        let fb = fit(&x, &y, &spec, Transform::CurrieDurban, Some(2.0)).unwrap();
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
        let pa = predict(&fa, &grid, PredictMode::Full).unwrap();
        let pb = predict(&fb, &grid, PredictMode::Full).unwrap();
        let scale = pa.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        for (a, b) in pa.iter().zip(&pb) {
            assert!((a - b).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn self_consistency_of_coefficients() {
        let (x, y) = sim::simulate(150, 0.0, 10.0, 0.5, 30);
        let spec = build_spec(0.0, 10.0, 12, 2).unwrap();
        for kind in [Transform::Mmb, Transform::CurrieDurban] {
            let f = fit(&x, &y, &spec, kind, Some(1.0)).unwrap();
            assert!(self_consistency_error(&f) < 1e-12);
        }
    }

    #[test]
    fn shift_invariance() {
        let (x, y) = sim::simulate(200, 0.0, 10.0, 0.5, 44);
        let spec = build_spec(0.0, 10.0, 14, 2).unwrap();
        let spec_shift = build_spec(100.0, 110.0, 14, 2).unwrap();
        let x_shift: Vec<f64> = x.iter().map(|v| v + 100.0).collect();
        let fa = fit(&x, &y, &spec, Transform::Mmb, Some(1.0)).unwrap();
        let fb = fit(&x_shift, &y, &spec_shift, Transform::Mmb, Some(1.0)).unwrap();
        let pa = predict(&fa, &x, PredictMode::Full).unwrap();
        let pb = predict(&fb, &x_shift, PredictMode::Full).unwrap();
        for (a, b) in pa.iter().zip(&pb) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn extrapolation_is_an_error() {
        let spec = build_spec(0.0, 10.0, 10, 2).unwrap();
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y = vec![1.0; 20];
        let f = fit(&x, &y, &spec, Transform::Mmb, Some(1.0)).unwrap();
        assert!(matches!(
            predict(&f, &[10.6], PredictMode::Full),
            Err(Error::OutOfDomain { .. })
        ));
    }
}
