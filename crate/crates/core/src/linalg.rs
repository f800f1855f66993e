//! Small dense complex linear-algebra helpers shared by the rate evaluators
//! and the solver. All matrices here are at most a few dozen rows, so every
//! routine works on owned `DMatrix` values.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Pivot ratio (squared) below which a Cholesky factor is treated as singular.
const MIN_RCOND: f64 = 1e-13;

/// Eigenvalues below this fraction of the largest are treated as zero by the
/// pseudo-inverse routines.
pub const PINV_RTOL: f64 = 1e-12;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// `(m + mᴴ) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entry of `m - mᴴ` relative to the largest entry of `m`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max) / scale
}

/// Cholesky factorisation of a Hermitian positive-definite matrix, rejecting
/// factors whose pivots span more than `1 / MIN_RCOND` in squared magnitude.
pub fn cholesky(a: &CMat, context: &'static str) -> Result<Cholesky<C64, Dyn>> {
    let chol = Cholesky::new(a.clone()).ok_or(Error::SingularMatrix(context))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
        let v = d.re * d.re;
        (lo.min(v), hi.max(v))
    });
    if !(lo > 0.0) || lo < MIN_RCOND * hi {
        return Err(Error::SingularMatrix(context));
    }
    Ok(chol)
}

pub fn solve_hpd(a: &CMat, b: &CMat, context: &'static str) -> Result<CMat> {
    Ok(cholesky(a, context)?.solve(b))
}

pub fn inverse_hpd(a: &CMat, context: &'static str) -> Result<CMat> {
    Ok(hermitian_part(&cholesky(a, context)?.inverse()))
}

/// `log₂ det(a)` for Hermitian positive-definite `a`, accumulated in log space.
pub fn log2_det_hpd(a: &CMat, context: &'static str) -> Result<f64> {
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite(context))?;
    // Complex square roots never fail, so a negative pivot shows up as a
    // (nearly) imaginary diagonal entry rather than a factorisation error.
    let diag = chol.l_dirty().diagonal();
    if diag.iter().any(|d| !(d.re > 0.0) || d.im.abs() > 1e-8 * d.re) {
        return Err(Error::NotPositiveDefinite(context));
    }
    let ln_det: f64 = diag.iter().map(|d| 2.0 * d.re.ln()).sum();
    if !ln_det.is_finite() {
        return Err(Error::NotPositiveDefinite(context));
    }
    Ok(ln_det / std::f64::consts::LN_2)
}

/// Minimum-norm solution of `a x = b` for Hermitian positive-semidefinite `a`.
/// Components of `b` outside the numerical range of `a` are discarded.
pub fn solve_psd_pinv(a: &CMat, b: &CMat) -> CMat {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let proj = eig.eigenvectors.adjoint() * b;
    let mut scaled = proj;
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let inv = if lam > PINV_RTOL * lmax && lam > 0.0 {
            1.0 / lam
        } else {
            0.0
        };
        scaled.row_mut(j).scale_mut(inv);
    }
    &eig.eigenvectors * scaled
}

/// Solve against a Hermitian PSD matrix: Cholesky when well conditioned,
/// pseudo-inverse otherwise.
pub fn solve_psd(a: &CMat, b: &CMat) -> CMat {
    match cholesky(a, "psd solve") {
        Ok(chol) => chol.solve(b),
        Err(_) => solve_psd_pinv(a, b),
    }
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Split the columns of an `n × (k·m)` matrix into `k` blocks of width `m`.
pub fn split_columns(stacked: &CMat, block: usize) -> Vec<CMat> {
    let k = stacked.ncols() / block;
    (0..k)
        .map(|i| stacked.columns(i * block, block).into_owned())
        .collect()
}

/// Horizontal concatenation of equally tall blocks.
pub fn hstack(blocks: &[CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(b);
        c0 += b.ncols();
    }
    out
}

/// Real trace of a matrix expected to be Hermitian.
pub fn re_trace(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
