//! Timing harness comparing the sparse and dense transformations as the
//! basis grows, with the data domain growing at fixed knot spacing h = 0.1.
//!
//! Assembly runs once per cell; the reported seconds cover only the
//! lambda-evaluation loop, so the number compares per-method solve cost.

use crate::basis::build_spec;
use crate::error::{Error, Result};
use crate::optim;
use crate::reml::{self, Transform};
use crate::sim;
use std::time::Instant;

/// Dense storage guard for the Currie-Durban baseline.
const CD_MAX_M: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalBudget {
    /// Full golden-section REML search per repeat.
    FullReml,
    /// Fixed number of likelihood evaluations on a log-spaced lambda grid.
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub m: usize,
    pub method: Transform,
    /// Median wall time of the lambda loop over the repeats.
    pub seconds: f64,
    pub n: usize,
    /// Likelihood evaluations per repeat.
    pub evaluations: usize,
}

/// Time one (m, method) cell. `m` is the number of B-splines; the quadratic
/// basis uses nseg = m - 2 segments on [0, 0.1 * nseg].
pub fn run_cell(
    m: usize,
    method: Transform,
    n_per_segment: f64,
    repeats: usize,
    budget: EvalBudget,
    seed: u64,
) -> Result<BenchRecord> {
    assert!(repeats >= 1);
    if method == Transform::CurrieDurban && m > CD_MAX_M {
        let mib = m * m * 8 / (1 << 20);
        return Err(Error::CdProblemTooLarge { m, mib });
    }
    let degree = 2usize;
    let nseg = m - degree;
    let x_max = 0.1 * nseg as f64;
    let n = (n_per_segment * nseg as f64).ceil() as usize;
    let spec = build_spec(0.0, x_max, nseg, degree)?;
    let (x, y) = sim::simulate(n, 0.0, x_max, 0.5, seed);
    let (_, blocks) = crate::smoother::assemble_blocks(&x, &y, &spec, method)?;

    let lambdas: Vec<f64> = match budget {
        EvalBudget::Fixed(k) => {
            assert!(k >= 1);
            // the grid stays in the territory a REML search explores near
            // its optimum; far larger penalties amplify the squared-gram
            // precision's conditioning beyond f64 at the largest sizes
            (0..k)
                .map(|i| {
                    let t = if k == 1 {
                        0.0
                    } else {
                        -2.0 + 3.0 * i as f64 / (k - 1) as f64
                    };
                    10f64.powf(t)
                })
                .collect()
        }
        EvalBudget::FullReml => Vec::new(),
    };

    let mut times = Vec::with_capacity(repeats);
    let mut evaluations = 0usize;
    for _ in 0..repeats {
        let t0 = Instant::now();
        match budget {
            EvalBudget::FullReml => {
                let opt = optim::maximize(
                    |l| reml::profile_loglik(&blocks, l).map(|p| p.loglik),
                    optim::DEFAULT_LO_LOG10,
                    optim::DEFAULT_HI_LOG10,
                    optim::DEFAULT_TOL,
                )?;
                evaluations = opt.evaluations;
            }
            EvalBudget::Fixed(_) => {
                let mut sink = 0.0f64;
                for &l in &lambdas {
                    sink += reml::profile_loglik(&blocks, l)?.loglik;
                }
                std::hint::black_box(sink);
                evaluations = lambdas.len();
            }
        }
        times.push(t0.elapsed().as_secs_f64());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let seconds = times[times.len() / 2];
    Ok(BenchRecord {
        m,
        method,
        seconds,
        n,
        evaluations,
    })
}

/// Least-squares slope of log(seconds) against log(m).
pub fn loglog_slope(records: &[BenchRecord]) -> f64 {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.m as f64).ln(), r.seconds.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}
