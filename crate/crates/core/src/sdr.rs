//! Semidefinite-relaxation outer bound on the centralized capacity region.
//!
//! The weighted received power `P0(phi) = P1 |h1(phi)|^2 + P2 |h2(phi)|^2` is
//! a Hermitian quadratic form in `[phi; 1]`:
//!
//! ```text
//!   P0 = [phi; 1]^H Q [phi; 1] + c,   Q = [[A, v], [v^H, 0]],
//!   A = P1 q1 q1^H + P2 q2 q2^H,   v = P1 h_bar_1 q1 + P2 h_bar_2 q2,
//!   q_k = conj(g ∘ h_k),           c = P1 |h_bar_1|^2 + P2 |h_bar_2|^2.
//! ```
//!
//! Lifting `[phi; 1][phi; 1]^H` to a unit-diagonal PSD matrix bounds the
//! largest achievable `P0`, hence the sum rate. Per-user caps come from
//! aligning all elements to one user.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{Pentagon, RateRegion};
use crate::sdp::{solve_diag_sdp, CMatrix, SdpOptions, SdpReport};

#[derive(Clone, Debug)]
pub struct QuadraticForm {
    /// `(M+1) x (M+1)` Hermitian matrix.
    pub q: CMatrix,
    pub constant: f64,
    /// `q_k = conj(g_m h_km)` per element.
    pub q_vecs: [Vec<Complex64>; 2],
    pub v: Vec<Complex64>,
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `[phi; 1]^H Q [phi; 1] + c`.
    pub fn evaluate(&self, phases: &[Complex64]) -> Result<f64> {
        let m = self.dim() - 1;
        if phases.len() != m {
            return Err(Error::DimensionMismatch {
                context: "reflection phases",
                expected: m,
                found: phases.len(),
            });
        }
        let x: Vec<Complex64> = phases.iter().copied().chain([Complex64::new(1.0, 0.0)]).collect();
        let mut acc = 0.0;
        for (i, xi) in x.iter().enumerate() {
            let row: Complex64 = x.iter().enumerate().map(|(j, xj)| self.q[(i, j)] * xj).sum();
            acc += (xi.conj() * row).re;
        }
        Ok(acc + self.constant)
    }
}

pub fn build_quadratic_form(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<QuadraticForm> {
    real.check_against(cfg)?;
    let p = cfg.p_max;
    let m = real.m_total();
    let q_vecs = [0, 1].map(|k| {
        real.g_cent
            .iter()
            .zip(&real.h_cent[k])
            .map(|(g, h)| (g * h).conj())
            .collect::<Vec<_>>()
    });
    let v: Vec<Complex64> = (0..m)
        .map(|i| real.h_bar[0] * q_vecs[0][i] * p[0] + real.h_bar[1] * q_vecs[1][i] * p[1])
        .collect();
    let mut q = CMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            q[(i, j)] = q_vecs[0][i] * q_vecs[0][j].conj() * p[0] + q_vecs[1][i] * q_vecs[1][j].conj() * p[1];
        }
        q[(i, m)] = v[i];
        q[(m, i)] = v[i].conj();
    }
    let constant = p[0] * real.h_bar[0].norm_sqr() + p[1] * real.h_bar[1].norm_sqr();
    Ok(QuadraticForm {
        q,
        constant,
        q_vecs,
        v,
    })
}

/// `P1 |h1(phi)|^2 + P2 |h2(phi)|^2` evaluated directly from the channels.
pub fn weighted_power(real: &ChannelRealization, cfg: &ScenarioConfig, phases: &[Complex64]) -> Result<f64> {
    if phases.len() != real.m_total() {
        return Err(Error::DimensionMismatch {
            context: "reflection phases",
            expected: real.m_total(),
            found: phases.len(),
        });
    }
    let [h1, h2] = real.centralized_channels(phases);
    Ok(cfg.p_max[0] * h1.norm_sqr() + cfg.p_max[1] * h2.norm_sqr())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OuterBound {
    pub region: RateRegion,
    pub pentagon: Pentagon,
    pub r1_cap: f64,
    pub r2_cap: f64,
    pub r12_cap: f64,
    /// Certified upper bound on `max_phi P0(phi)`.
    pub p0_upper: f64,
    pub sdp: SdpReport,
}

pub fn outer_bound(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<OuterBound> {
    outer_bound_with(real, cfg, &SdpOptions::default())
}

pub fn outer_bound_with(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    opts: &SdpOptions,
) -> Result<OuterBound> {
    let form = build_quadratic_form(real, cfg)?;
    let sol = solve_diag_sdp(&form.q, opts)?;
    let sigma2 = cfg.noise_power;
    let caps = [0, 1].map(|k| {
        let g = real.centralized_gain_bound(k);
        (1.0 + cfg.p_max[k] * g * g / sigma2).log2()
    });
    let p0_upper = form.constant + sol.report.dual_value;
    let r12_cap = (1.0 + p0_upper.max(0.0) / sigma2).log2();
    let pentagon = Pentagon::new(caps[0], caps[1], r12_cap);
    Ok(OuterBound {
        region: pentagon.region(),
        pentagon,
        r1_cap: caps[0],
        r2_cap: caps[1],
        r12_cap,
        p0_upper,
        sdp: sol.report,
    })
}

/// Gaussian randomization from a lifted solution `W`: draws `xi ~ CN(0, W)`,
/// projects `xi_m / xi_{M+1}` to unit modulus and keeps the best `P0`.
/// Gives a feasible phase vector (a lower bound on `max P0`).
pub fn gaussian_randomization<R: Rng>(
    form: &QuadraticForm,
    w: &CMatrix,
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<Complex64>, f64)> {
    let n = form.dim();
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "lifted matrix",
            expected: n,
            found: w.nrows(),
        });
    }
    let eig = w.clone().symmetric_eigen();
    let factor = CMatrix::from_fn(n, n, |i, j| {
        eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt()
    });
    let mut best = (vec![Complex64::new(1.0, 0.0); n - 1], form.evaluate(&vec![Complex64::new(1.0, 0.0); n - 1])?);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for _ in 0..samples {
        let r: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        let xi: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|j| factor[(i, j)] * r[j]).sum())
            .collect();
        let anchor = crate::channel::phase(xi[n - 1]);
        let phases: Vec<Complex64> = xi[..n - 1]
            .iter()
            .map(|z| crate::channel::unit(crate::channel::phase(*z) - anchor))
            .collect();
        let value = form.evaluate(&phases)?;
        if value > best.1 {
            best = (phases, value);
        }
    }
    Ok(best)
}
