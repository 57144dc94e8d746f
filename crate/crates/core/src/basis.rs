//! Equidistant-knot B-spline bases with sparse row evaluation.
//!
//! The knot grid extends `degree` spacings beyond each end of the domain, so a
//! basis on `nseg` segments of degree `q` has `m = nseg + q` functions and
//! every in-domain point activates exactly `q + 1` consecutive ones.

use crate::error::{Error, Result};

/// Maximum internal degree; degree 4 is needed by the second-derivative check.
const MAX_DEGREE: usize = 4;

/// Geometry of an equidistant B-spline basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nseg: usize,
    pub degree: usize,
}

impl BasisSpec {
    /// Knot spacing `h = (x_max - x_min) / nseg`.
    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.nseg as f64
    }

    /// Number of basis functions `m = nseg + degree`.
    pub fn m(&self) -> usize {
        self.nseg + self.degree
    }

    /// Knot position `a` on the extended grid; knot `degree` sits at `x_min`.
    fn knot(&self, a: usize) -> f64 {
        self.x_min + (a as f64 - self.degree as f64) * self.h()
    }

    /// Segment index of `x`, clamped so `x_max` evaluates left-continuously.
    fn segment(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.h()).floor() as isize;
        k.clamp(0, self.nseg as isize - 1) as usize
    }
}

/// Build a basis specification, validating the domain and degree.
pub fn build_spec(x_min: f64, x_max: f64, nseg: usize, degree: usize) -> Result<BasisSpec> {
    if !(x_min < x_max) {
        return Err(Error::EmptyDomain { x_min, x_max });
    }
    if !(2..=3).contains(&degree) {
        return Err(Error::UnsupportedDegree(degree));
    }
    if nseg < 3 {
        return Err(Error::TooFewSegments(nseg));
    }
    Ok(BasisSpec {
        x_min,
        x_max,
        nseg,
        degree,
    })
}

/// Row-sparse evaluation of a B-spline basis at `n_rows` points.
///
/// Each row stores the first active column and the `degree + 1` nonzero
/// values for that point.
#[derive(Debug, Clone)]
pub struct SparseBasis {
    n_rows: usize,
    m_cols: usize,
    degree: usize,
    first: Vec<usize>,
    values: Vec<f64>,
}

impl SparseBasis {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn m_cols(&self) -> usize {
        self.m_cols
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// First active column and the nonzero values of row `i`.
    pub fn row(&self, i: usize) -> (usize, &[f64]) {
        let w = self.degree + 1;
        (self.first[i], &self.values[i * w..(i + 1) * w])
    }

    /// Value at (row, col); zero outside the active window.
    pub fn value(&self, i: usize, col: usize) -> f64 {
        let (first, vals) = self.row(i);
        if col >= first && col < first + vals.len() {
            vals[col - first]
        } else {
            0.0
        }
    }

    /// Dot product of row `i` with a full-length coefficient vector.
    pub fn dot_row(&self, i: usize, coef: &[f64]) -> f64 {
        let (first, vals) = self.row(i);
        vals.iter()
            .zip(&coef[first..first + vals.len()])
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Nonzero basis values at `x` via the two-term de Boor recursion.
///
/// Returns the first active column and `degree + 1` values; `buf` must hold
/// at least `degree + 1` entries.
fn basis_row(spec: &BasisSpec, x: f64, buf: &mut [f64]) -> usize {
    let q = spec.degree;
    debug_assert!(q <= MAX_DEGREE);
    let k = spec.segment(x);
    let span = k + q; // knot span index: knot(span) <= x <= knot(span + 1)

    let mut left = [0.0f64; MAX_DEGREE + 1];
    let mut right = [0.0f64; MAX_DEGREE + 1];
    buf[0] = 1.0;
    for d in 1..=q {
        left[d] = x - spec.knot(span + 1 - d);
        right[d] = spec.knot(span + d) - x;
        let mut saved = 0.0;
        for r in 0..d {
            let temp = buf[r] / (right[r + 1] + left[d - r]);
            buf[r] = saved + right[r + 1] * temp;
            saved = left[d - r] * temp;
        }
        buf[d] = saved;
    }
    k
}

/// Evaluate the basis at every point of `x`, row-sparse.
pub fn eval_basis(spec: &BasisSpec, x: &[f64]) -> Result<SparseBasis> {
    let q = spec.degree;
    let w = q + 1;
    let mut first = Vec::with_capacity(x.len());
    let mut values = vec![0.0; x.len() * w];
    for (i, &xi) in x.iter().enumerate() {
        if !(xi >= spec.x_min && xi <= spec.x_max) {
            return Err(Error::OutOfDomain {
                index: i,
                value: xi,
                x_min: spec.x_min,
                x_max: spec.x_max,
            });
        }
        let k = basis_row(spec, xi, &mut values[i * w..(i + 1) * w]);
        first.push(k);
    }
    Ok(SparseBasis {
        n_rows: x.len(),
        m_cols: spec.m(),
        degree: q,
        first,
        values,
    })
}

/// Cardinal (uniform-knot) B-spline of degree `d` on support `[0, d + 1]`.
///
/// Kept recursive and independent of the de Boor path; used by the
/// second-derivative check and as a cross-check in tests.
pub fn cardinal_bspline(u: f64, d: usize) -> f64 {
    if u < 0.0 || u >= (d + 1) as f64 {
        return 0.0;
    }
    if d == 0 {
        return 1.0;
    }
    let df = d as f64;
    (u * cardinal_bspline(u, d - 1) + (df + 1.0 - u) * cardinal_bspline(u - 1.0, d - 1)) / df
}

/// Largest discrepancy between h^2 B''(quartic) by central differences and
/// the second difference of three quadratic splines, over the given points.
pub fn check_second_derivative_identity(spec: &BasisSpec, x: &[f64]) -> Result<f64> {
    const STEP: f64 = 1e-4;
    let h = spec.h();
    let mut worst = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        if !(xi > spec.x_min && xi < spec.x_max) {
            return Err(Error::OutOfDomain {
                index: i,
                value: xi,
                x_min: spec.x_min,
                x_max: spec.x_max,
            });
        }
        let u = (xi - spec.x_min) / h;
        // every quartic with support covering xi starts at one of these knots
        let base = u.floor() as isize;
        for a in (base - 4)..=base {
            let s = spec.x_min + a as f64 * h;
            let b4 = |x: f64| cardinal_bspline((x - s) / h, 4);
            let fd = (b4(xi + STEP) - 2.0 * b4(xi) + b4(xi - STEP)) / (STEP * STEP);
            let lhs = h * h * fd;
            let v = (xi - s) / h;
            let rhs = cardinal_bspline(v, 2) - 2.0 * cardinal_bspline(v - 1.0, 2)
                + cardinal_bspline(v - 2.0, 2);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}
