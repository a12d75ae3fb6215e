//! Unit-diagonal Hermitian SDP:
//!
//! ```text
//!   maximize  tr(W Q)   subject to  W ⪰ 0,  W_mm = 1 for all m
//!   minimize  sum(y)    subject to  Diag(y) - Q ⪰ 0          (dual)
//! ```
//!
//! Solved with a primal-dual path-following interior-point method (the
//! max-cut scheme of Helmberg, Rendl, Vanderbei and Wolkowicz, carried over to
//! Hermitian matrices). The returned upper bound does not rely on the solver
//! having converged: any `y` becomes dual feasible after shifting it by
//! `lambda_max(Q - Diag(y))`, and the shifted sum is what gets reported.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative Hermitian-symmetry tolerance accepted on input.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Converged,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpReport {
    /// `tr(W Q)` at the returned feasible `W`.
    pub primal_value: f64,
    /// Certified upper bound on the SDP optimum.
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub status: SdpStatus,
    /// Absolute gap tolerance the run was held to.
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub report: SdpReport,
    /// Feasible primal matrix (PSD, unit diagonal).
    pub w: CMatrix,
    /// Certified dual vector: `Diag(y) - Q ⪰ 0`.
    pub y: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    /// Absolute gap tolerance; `None` means `1e-6 * (1 + ||Q||_F)`.
    pub tol: Option<f64>,
    /// Gap tolerance relative to the scale of `Q`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: None,
            rel_tol: 1e-9,
            max_iter: 5000,
        }
    }
}

pub fn frobenius_norm(q: &CMatrix) -> f64 {
    q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest `|Q_ij - conj(Q_ji)|`.
pub fn hermitian_defect(q: &CMatrix) -> f64 {
    let n = q.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((q[(i, j)] - q[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn diag_minus(y: &DVector<f64>, l: &CMatrix) -> CMatrix {
    let mut z = -l.clone();
    for i in 0..y.len() {
        z[(i, i)] += Complex64::new(y[i], 0.0);
    }
    z
}

fn max_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `Re tr(A B)` for Hermitian `A`, `B`.
fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.transpose().iter())
        .map(|(x, y)| (x * y).re)
        .sum()
}

/// Rescales a PSD matrix to unit diagonal: `D^{-1/2} X D^{-1/2}`.
fn unit_diagonal(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let d: Vec<f64> = (0..n).map(|i| x[(i, i)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut w = x.clone();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] /= d[i] * d[j];
        }
        w[(i, i)] = Complex64::new(1.0, 0.0);
    }
    hermitize(&mut w);
    w
}

/// Lower Cholesky factor of a Hermitian matrix, `None` unless positive definite.
/// (nalgebra's complex Cholesky takes complex square roots and so does not
/// reject indefinite input.)
fn cholesky(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Inverse of a Hermitian positive definite matrix.
fn hpd_inverse(m: &CMatrix) -> Option<CMatrix> {
    let l = cholesky(m)?;
    let l_inv = l.solve_lower_triangular(&CMatrix::identity(m.nrows(), m.nrows()))?;
    let mut inv = l_inv.adjoint() * l_inv;
    hermitize(&mut inv);
    Some(inv)
}

/// Largest step in (0, 1] keeping `x + step * dx` positive definite,
/// backtracked by 0.8 and damped by 0.95.
fn step_length(x: &CMatrix, dx: &CMatrix) -> f64 {
    let mut alpha = 1.0;
    while alpha > 1e-14 {
        if cholesky(&(x + dx * Complex64::new(alpha, 0.0))).is_some() {
            return if alpha < 1.0 { 0.95 * alpha } else { alpha };
        }
        alpha *= 0.8;
    }
    0.0
}

/// Certified dual value for an arbitrary `y`: `sum(y) + n * lambda_max(Q - Diag(y))`.
fn certify(y: &DVector<f64>, l: &CMatrix) -> DVector<f64> {
    let lambda = max_eigenvalue(&(-diag_minus(y, l)));
    y.map(|v| v + lambda)
}

pub fn solve_diag_sdp(q: &CMatrix, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = q.nrows();
    if q.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "SDP matrix columns",
            expected: n,
            found: q.ncols(),
        });
    }
    let max_abs = q.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let defect = hermitian_defect(q);
    if defect > HERMITIAN_TOL * max_abs {
        return Err(Error::NotHermitian(defect));
    }
    let mut qh = q.clone();
    hermitize(&mut qh);

    let scale = frobenius_norm(&qh);
    let tolerance = opts.tol.unwrap_or(1e-6 * (1.0 + scale));
    if tolerance < 0.0 {
        return Err(Error::NegativeTolerance(tolerance));
    }

    let off_diagonal_zero = (0..n).all(|i| (0..n).all(|j| i == j || qh[(i, j)] == Complex64::new(0.0, 0.0)));
    if scale == 0.0 || off_diagonal_zero {
        // W = I is optimal and y = diag(Q) is dual feasible with zero gap.
        let y: Vec<f64> = (0..n).map(|i| qh[(i, i)].re).collect();
        let value = y.iter().sum();
        return Ok(SdpSolution {
            report: SdpReport {
                primal_value: value,
                dual_value: value,
                gap: 0.0,
                iterations: 0,
                status: SdpStatus::Converged,
                tolerance,
            },
            w: CMatrix::identity(n, n),
            y,
        });
    }

    let l = qh.map(|z| z / scale);
    let nf = n as f64;
    let target = (tolerance / scale).min(f64::INFINITY);

    let mut x = CMatrix::identity(n, n);
    let mut y = DVector::from_fn(n, |i, _| {
        1.1 * (0..n).map(|j| l[(i, j)].norm()).sum::<f64>() + 0.1
    });
    let mut z = diag_minus(&y, &l);
    let mut mu = trace_product(&z, &x) / (2.0 * nf);

    let mut best_w = unit_diagonal(&x);
    let mut best_primal = trace_product(&best_w, &l);
    let mut best_y = certify(&y, &l);
    let mut best_dual = best_y.sum();
    let mut iterations = 0;
    let mut stalled = 0;
    let mut status = SdpStatus::MaxIter;

    loop {
        let gap = best_dual - best_primal;
        if gap <= target && gap <= opts.rel_tol * (1.0 + best_dual.abs()) {
            status = SdpStatus::Converged;
            break;
        }
        if iterations >= opts.max_iter || stalled >= 20 {
            break;
        }
        iterations += 1;

        let Some(zi) = hpd_inverse(&z) else {
            break;
        };

        // Schur complement (Z^-1 ∘ X^T), real part, for the diagonal update dy.
        let schur = DMatrix::<f64>::from_fn(n, n, |i, j| (zi[(i, j)] * x[(i, j)].conj()).re);
        let rhs = DVector::<f64>::from_fn(n, |i, _| mu * zi[(i, i)].re - 1.0);
        let dy = match Cholesky::<f64, Dyn>::new(schur.clone()) {
            Some(c) => c.solve(&rhs),
            None => match schur.lu().solve(&rhs) {
                Some(v) => v,
                None => break,
            },
        };

        let dy_c = CMatrix::from_diagonal(&dy.map(|v| Complex64::new(v, 0.0)));
        let mut dx = &zi * Complex64::new(mu, 0.0) - &x - &zi * &dy_c * &x;
        hermitize(&mut dx);

        let alpha_p = step_length(&x, &dx);
        let alpha_d = step_length(&z, &dy_c);
        if alpha_p + alpha_d < 1e-10 {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x += dx * Complex64::new(alpha_p, 0.0);
        hermitize(&mut x);
        y += dy * alpha_d;
        z = diag_minus(&y, &l);

        mu = trace_product(&z, &x) / (2.0 * nf);
        if alpha_p + alpha_d > 1.6 {
            mu *= 0.5;
        }
        if alpha_p + alpha_d > 1.9 {
            mu /= 5.0;
        }

        let w = unit_diagonal(&x);
        let primal = trace_product(&w, &l);
        if primal > best_primal {
            best_primal = primal;
            best_w = w;
        }
        let y_cert = certify(&y, &l);
        let dual = y_cert.sum();
        if dual < best_dual {
            best_dual = dual;
            best_y = y_cert;
        }
    }

    Ok(SdpSolution {
        report: SdpReport {
            primal_value: best_primal * scale,
            dual_value: best_dual * scale,
            gap: (best_dual - best_primal) * scale,
            iterations,
            status,
            tolerance,
        },
        w: best_w,
        y: best_y.iter().map(|v| v * scale).collect(),
    })
}
