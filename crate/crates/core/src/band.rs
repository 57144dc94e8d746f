//! Symmetric band storage and a bordered-banded Cholesky factorization.
//!
//! The factorization runs in O(dim * w^2) + O(dim * p^2) time, which is what
//! makes the sparse mixed-model path linear in the basis size. The fixed
//! effects live in a small dense border so the band stays intact during
//! elimination.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Symmetric banded matrix, stored by sub-diagonal.
///
/// Entry `(j + d, j)` of the lower triangle lives at `data[d * dim + j]`
/// for `d in 0..=width`.
#[derive(Debug, Clone)]
pub struct BandSymMatrix {
    dim: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandSymMatrix {
    pub fn zeros(dim: usize, width: usize) -> Self {
        assert!(dim > 0 && width < dim);
        BandSymMatrix {
            dim,
            width,
            data: vec![0.0; (width + 1) * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut b = BandSymMatrix::zeros(dim, 0);
        for j in 0..dim {
            b.data[j] = 1.0;
        }
        b
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Symmetric read access; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.width {
            0.0
        } else {
            self.data[d * self.dim + lo]
        }
    }

    /// Accumulate into the lower-triangle entry `(i, j)`; requires `i >= j`
    /// within the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.width, "entry ({i},{j}) outside bandwidth {}", self.width);
        self.data[d * self.dim + lo] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.width);
        self.data[d * self.dim + lo] = v;
    }

    /// `self += scale * other`; `other` may have a narrower band.
    pub fn axpy(&mut self, scale: f64, other: &BandSymMatrix) {
        assert_eq!(self.dim, other.dim);
        assert!(other.width <= self.width);
        for d in 0..=other.width {
            let dst = &mut self.data[d * self.dim..(d + 1) * self.dim];
            let src = &other.data[d * other.dim..(d + 1) * other.dim];
            for (a, b) in dst.iter_mut().zip(src) {
                *a += scale * b;
            }
        }
    }

    /// Add `scale` to every diagonal entry.
    pub fn shift_diagonal(&mut self, scale: f64) {
        for j in 0..self.dim {
            self.data[j] += scale;
        }
    }

    /// Symmetric matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        for j in 0..self.dim {
            y[j] += self.data[j] * x[j];
            for d in 1..=self.width.min(self.dim - 1 - j) {
                let v = self.data[d * self.dim + j];
                y[j + d] += v * x[j];
                y[j] += v * x[j + d];
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }
}

/// Symmetric matrix with a banded leading block and a dense p-column border:
/// `[[band, border], [border', corner]]`.
#[derive(Debug, Clone)]
pub struct BorderedBandMatrix {
    pub band: BandSymMatrix,
    /// dim x p, row-major.
    pub border: Vec<f64>,
    /// p x p, row-major.
    pub corner: Vec<f64>,
    pub p: usize,
}

impl BorderedBandMatrix {
    pub fn new(band: BandSymMatrix, border: Vec<f64>, corner: Vec<f64>, p: usize) -> Self {
        assert_eq!(border.len(), band.dim() * p);
        assert_eq!(corner.len(), p * p);
        BorderedBandMatrix {
            band,
            border,
            corner,
            p,
        }
    }

    pub fn without_border(band: BandSymMatrix) -> Self {
        BorderedBandMatrix {
            band,
            border: Vec::new(),
            corner: Vec::new(),
            p: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.band.dim() + self.p
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.band.dim();
        let p = self.p;
        let mut full = DMatrix::zeros(n + p, n + p);
        for i in 0..n {
            for j in 0..n {
                full[(i, j)] = self.band.get(i, j);
            }
            for c in 0..p {
                full[(i, n + c)] = self.border[i * p + c];
                full[(n + c, i)] = self.border[i * p + c];
            }
        }
        for r in 0..p {
            for c in 0..p {
                full[(n + r, n + c)] = self.corner[r * p + c];
            }
        }
        full
    }
}

/// Lower-triangular factor of a bordered-banded matrix.
///
/// The log-determinant of the factored matrix is `2 * sum(log diag)`, kept
/// here as `log_det`.
#[derive(Debug, Clone)]
pub struct TriangularFactor {
    dim: usize,
    width: usize,
    p: usize,
    band_l: Vec<f64>,
    /// dim x p, row-major: the border rows of the factor, transposed.
    border_f: Vec<f64>,
    /// p x p lower triangle, row-major.
    corner_l: Vec<f64>,
    pub log_det: f64,
}

impl TriangularFactor {
    pub fn dim(&self) -> usize {
        self.dim + self.p
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i >= j && i - j <= self.width);
        self.band_l[(i - j) * self.dim + j]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, p) = (self.dim, self.p);
        let mut full = DMatrix::zeros(n + p, n + p);
        for j in 0..n {
            for i in j..(j + self.width + 1).min(n) {
                full[(i, j)] = self.l(i, j);
            }
            for r in 0..p {
                full[(n + r, j)] = self.border_f[j * p + r];
            }
        }
        for r in 0..p {
            for c in 0..=r {
                full[(n + r, n + c)] = self.corner_l[r * p + c];
            }
        }
        full
    }
}

/// Cholesky factorization preserving the band; fails on a nonpositive pivot.
pub fn cholesky(matrix: &BorderedBandMatrix) -> Result<TriangularFactor> {
    let n = matrix.band.dim();
    let w = matrix.band.width();
    let p = matrix.p;

    // banded block
    let mut l = vec![0.0; (w + 1) * n];
    let at = |store: &Vec<f64>, i: usize, j: usize| store[(i - j) * n + j];
    for j in 0..n {
        let lo = j.saturating_sub(w);
        let mut s = matrix.band.get(j, j);
        for k in lo..j {
            let v = at(&l, j, k);
            s -= v * v;
        }
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let diag = s.sqrt();
        l[j] = diag;
        for i in (j + 1)..(j + w + 1).min(n) {
            let lo_i = i.saturating_sub(w);
            let mut s = matrix.band.get(i, j);
            for k in lo_i.max(lo)..j {
                s -= at(&l, i, k) * at(&l, j, k);
            }
            l[(i - j) * n + j] = s / diag;
        }
    }

    // border: forward-solve L * F = border, one column per fixed effect
    let mut f = vec![0.0; n * p];
    for c in 0..p {
        for i in 0..n {
            let mut s = matrix.border[i * p + c];
            for k in i.saturating_sub(w)..i {
                s -= at(&l, i, k) * f[k * p + c];
            }
            f[i * p + c] = s / l[i];
        }
    }

    // corner: dense Cholesky of the Schur complement
    let mut schur = vec![0.0; p * p];
    for r in 0..p {
        for c in 0..p {
            let mut s = matrix.corner[r * p + c];
            for i in 0..n {
                s -= f[i * p + r] * f[i * p + c];
            }
            schur[r * p + c] = s;
        }
    }
    let mut lc = vec![0.0; p * p];
    for j in 0..p {
        let mut s = schur[j * p + j];
        for k in 0..j {
            s -= lc[j * p + k] * lc[j * p + k];
        }
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: n + j });
        }
        lc[j * p + j] = s.sqrt();
        for i in (j + 1)..p {
            let mut s = schur[i * p + j];
            for k in 0..j {
                s -= lc[i * p + k] * lc[j * p + k];
            }
            lc[i * p + j] = s / lc[j * p + j];
        }
    }

    let mut log_det = 0.0;
    for j in 0..n {
        log_det += l[j].ln();
    }
    for j in 0..p {
        log_det += lc[j * p + j].ln();
    }
    Ok(TriangularFactor {
        dim: n,
        width: w,
        p,
        band_l: l,
        border_f: f,
        corner_l: lc,
        log_det: 2.0 * log_det,
    })
}

/// Solve `C x = rhs` through one forward and one backward triangular sweep.
pub fn solve(factor: &TriangularFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    let (n, w, p) = (factor.dim, factor.width, factor.p);
    if rhs.len() != n + p {
        return Err(Error::DimensionMismatch {
            what: "solve right-hand side",
            expected: n + p,
            actual: rhs.len(),
        });
    }

    // forward: L z = rhs
    let mut z = vec![0.0; n + p];
    for i in 0..n {
        let mut s = rhs[i];
        for k in i.saturating_sub(w)..i {
            s -= factor.l(i, k) * z[k];
        }
        z[i] = s / factor.l(i, i);
    }
    for r in 0..p {
        let mut s = rhs[n + r];
        for i in 0..n {
            s -= factor.border_f[i * p + r] * z[i];
        }
        for c in 0..r {
            s -= factor.corner_l[r * p + c] * z[n + c];
        }
        z[n + r] = s / factor.corner_l[r * p + r];
    }

    // backward: L' x = z
    let mut x = vec![0.0; n + p];
    for r in (0..p).rev() {
        let mut s = z[n + r];
        for c in (r + 1)..p {
            s -= factor.corner_l[c * p + r] * x[n + c];
        }
        x[n + r] = s / factor.corner_l[r * p + r];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for c in 0..p {
            s -= factor.border_f[i * p + c] * x[n + c];
        }
        for k in (i + 1)..(i + w + 1).min(n) {
            s -= factor.l(k, i) * x[k];
        }
        x[i] = s / factor.l(i, i);
    }
    Ok(x)
}
