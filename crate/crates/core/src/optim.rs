//! Golden-section maximization of the profile likelihood over log10(lambda).

use crate::error::{Error, Result};

/// Inverse golden ratio; each iteration shrinks the bracket by this factor.
pub const SHRINK: f64 = 0.618_033_988_749_894_9;

/// Default search bracket in log10(lambda).
pub const DEFAULT_LO_LOG10: f64 = -8.0;
pub const DEFAULT_HI_LOG10: f64 = 8.0;
/// Default bracket-width tolerance in log10(lambda).
pub const DEFAULT_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct OptResult {
    pub lambda_max: f64,
    pub loglik_max: f64,
    pub evaluations: usize,
    /// False when the best point sits on the bracket boundary within tol.
    pub converged: bool,
    /// Final bracket in log10(lambda).
    pub bracket: (f64, f64),
}

/// Maximize `eval(lambda)` by golden-section search on t = log10(lambda).
///
/// Assumes a unimodal profile; a non-finite likelihood at any probe is an
/// error rather than silently skipped.
pub fn maximize<F>(mut eval: F, lo_log10: f64, hi_log10: f64, tol: f64) -> Result<OptResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo_log10 < hi_log10) || !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidBracket {
            lo: lo_log10,
            hi: hi_log10,
        });
    }
    let mut probe = |t: f64, evals: &mut usize| -> Result<f64> {
        let lambda = 10f64.powf(t);
        let v = eval(lambda)?;
        *evals += 1;
        if !v.is_finite() {
            return Err(Error::NonFiniteLikelihood { lambda });
        }
        Ok(v)
    };

    let (mut a, mut b) = (lo_log10, hi_log10);
    let mut evals = 0usize;
    let mut c = b - SHRINK * (b - a);
    let mut d = a + SHRINK * (b - a);
    let mut fc = probe(c, &mut evals)?;
    let mut fd = probe(d, &mut evals)?;

    loop {
        // ties move right so a monotone or plateaued profile keeps the
        // bracket pinned to the boundary it is climbing toward
        if fc <= fd {
            a = c;
            c = d;
            fc = fd;
            d = a + SHRINK * (b - a);
            fd = probe(d, &mut evals)?;
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - SHRINK * (b - a);
            fc = probe(c, &mut evals)?;
        }
        if b - a < tol {
            break;
        }
    }

    let (t_best, f_best) = if fc >= fd { (c, fc) } else { (d, fd) };
    let converged = t_best - lo_log10 > tol && hi_log10 - t_best > tol;
    Ok(OptResult {
        lambda_max: 10f64.powf(t_best),
        loglik_max: f_best,
        evaluations: evals,
        converged,
        bracket: (a, b),
    })
}
