//! Achievable region of the centralized deployment by the rate-profile method.
//!
//! For a decoding order `(first, second)` and a rate split `alpha`, the first
//! decoded user gets `alpha * r` and the second `(1 - alpha) * r`. With
//! `beta = 2^{(1 - alpha) r}` and `s_k = P_k |h_k|^2 / sigma^2`, the largest
//! `r` reachable by successive decoding (second user's power lowered until its
//! rate constraint is tight) is the largest `beta` with
//!
//! ```text
//!   s_first  >= beta^{1/(1-alpha)} - beta
//!   s_second >= beta - 1
//! ```
//!
//! Both effective gains are affine in any single reflection coefficient, so
//! one element at a time the problem reduces to intersecting two arcs on the
//! unit circle. Elements are updated round-robin until the sweep stops
//! improving.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::channel::{
    aligned_phases, is_twin, unit, ChannelRealization, ReflectionConfig, ScenarioConfig,
};
use crate::distributed::distributed_capacity_region;
use crate::error::{Error, Result};
use crate::geometry::{Pentagon, RatePair, RateRegion};

/// Successive decoding order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodingOrder {
    /// User 1 decoded first.
    I,
    /// User 2 decoded first.
    II,
}

impl DecodingOrder {
    /// `[first, second]` user indices.
    pub fn users(self) -> [usize; 2] {
        match self {
            Self::I => [0, 1],
            Self::II => [1, 0],
        }
    }

    pub fn other(self) -> Self {
        match self {
            Self::I => Self::II,
            Self::II => Self::I,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::I => "I",
            Self::II => "II",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateProfileQuery {
    pub alpha: f64,
    pub order: DecodingOrder,
}

impl RateProfileQuery {
    pub fn new(alpha: f64, order: DecodingOrder) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("rate ratio must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { alpha, order })
    }

    /// Rate pair in (user 1, user 2) coordinates for sum-rate `r`.
    pub fn pair(&self, r: f64) -> RatePair {
        let first = self.alpha * r;
        let second = (1.0 - self.alpha) * r;
        match self.order {
            DecodingOrder::I => RatePair::new(first, second),
            DecodingOrder::II => RatePair::new(second, first),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Stop when a full sweep improves beta by less than this fraction.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Number of starting points: the aligned warm start plus `restarts - 1` random ones.
    pub restarts: usize,
    pub restart_seed: u64,
    /// Absolute bisection tolerance on beta.
    pub beta_tol: f64,
    /// Refine the profile grid where the hull misses more than this (bps/Hz);
    /// 0 keeps the uniform grid only.
    pub refine_tol: f64,
    pub refine_depth: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            max_sweeps: 200,
            restarts: 1,
            restart_seed: 0,
            beta_tol: 1e-10,
            refine_tol: 1e-4,
            refine_depth: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AltOptTrace {
    pub query: RateProfileQuery,
    /// Beta after the initialization and after every element update.
    pub beta_history: Vec<f64>,
    /// Completed sweeps.
    pub outer_iterations: usize,
    pub converged: bool,
    pub final_phases: ReflectionConfig,
    pub final_beta: f64,
    /// Sum rate `log2(beta) / (1 - alpha)`.
    pub final_r: f64,
}

/// `(f1, f2)` with `|h_k|^2 = f1 + 2 Re{f2 phi_m}` for any unit-modulus `phi_m`.
pub fn affine_coefficients(
    real: &ChannelRealization,
    phases: &ReflectionConfig,
    m: usize,
    user: usize,
) -> Result<(f64, Complex64)> {
    let phi = phases.centralized_phases()?;
    if user > 1 {
        return Err(Error::IndexOutOfRange {
            context: "user",
            index: user,
            len: 2,
        });
    }
    if phi.len() != real.m_total() {
        return Err(Error::DimensionMismatch {
            context: "reflection phases",
            expected: real.m_total(),
            found: phi.len(),
        });
    }
    if m >= phi.len() {
        return Err(Error::IndexOutOfRange {
            context: "reflecting element",
            index: m,
            len: phi.len(),
        });
    }
    let g = &real.g_cent;
    let h = &real.h_cent[user];
    let residual = real.h_bar[user]
        + (0..phi.len())
            .filter(|&i| i != m)
            .map(|i| g[i] * phi[i] * h[i])
            .sum::<Complex64>();
    let b = g[m] * h[m];
    Ok(element_coefficients(residual, b))
}

fn element_coefficients(residual: Complex64, b: Complex64) -> (f64, Complex64) {
    (residual.norm_sqr() + b.norm_sqr(), b * residual.conj())
}

/// `{theta : 2 |f2| cos(theta + arg f2) >= c}` on the circle.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Arc {
    Full,
    Empty,
    Span { center: f64, half_width: f64 },
}

fn constraint_arc(f2: Complex64, c: f64) -> Arc {
    let r = 2.0 * f2.norm();
    if r == 0.0 {
        return if c <= 0.0 { Arc::Full } else { Arc::Empty };
    }
    let t = c / r;
    if t <= -1.0 {
        Arc::Full
    } else if t > 1.0 || t.is_nan() {
        Arc::Empty
    } else {
        Arc::Span {
            center: -f2.arg(),
            half_width: t.acos(),
        }
    }
}

/// Wraps an angle to (-pi, pi].
fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}

/// A common point of two arcs, if any.
fn intersect(a: Arc, b: Arc) -> Option<f64> {
    match (a, b) {
        (Arc::Empty, _) | (_, Arc::Empty) => None,
        (Arc::Full, Arc::Full) => Some(0.0),
        (Arc::Full, Arc::Span { center, .. }) | (Arc::Span { center, .. }, Arc::Full) => Some(center),
        (
            Arc::Span {
                center: c1,
                half_width: w1,
            },
            Arc::Span {
                center: c2,
                half_width: w2,
            },
        ) => {
            let d = wrap(c2 - c1);
            if d.abs() > w1 + w2 {
                return None;
            }
            let lo = (-w1).max(d - w2);
            let hi = w1.min(d + w2);
            Some(c1 + 0.5 * (lo + hi))
        }
    }
}

/// Inputs of one element update, ordered `[first, second]` by decoding order.
#[derive(Clone, Copy, Debug)]
pub struct ElementProblem {
    pub f: [(f64, Complex64); 2],
    pub alpha: f64,
    pub powers: [f64; 2],
    pub noise_power: f64,
}

impl ElementProblem {
    fn feasible_at(&self, beta: f64) -> Option<f64> {
        let exponent = 1.0 / (1.0 - self.alpha);
        let need = [beta.powf(exponent) - beta, beta - 1.0];
        let arcs = [0, 1].map(|i| {
            let (f1, f2) = self.f[i];
            constraint_arc(f2, need[i] * self.noise_power / self.powers[i] - f1)
        });
        intersect(arcs[0], arcs[1])
    }
}

/// Largest feasible beta (to `beta_tol`) for one element and a phase attaining it.
pub fn solve_element(problem: &ElementProblem, beta_tol: f64) -> Result<(f64, Complex64)> {
    if !(0.0..1.0).contains(&problem.alpha) {
        return Err(Error::Domain(format!(
            "element update needs alpha in [0, 1), got {}",
            problem.alpha
        )));
    }
    let mut theta = problem.feasible_at(1.0).ok_or(Error::InfeasibleElement)?;
    let (f1, f2) = problem.f[1];
    let mut lo = 1.0;
    let mut hi = 1.0 + problem.powers[1] * (f1 + 2.0 * f2.norm()) / problem.noise_power;
    if let Some(t) = problem.feasible_at(hi) {
        return Ok((hi, unit(t)));
    }
    while hi - lo > beta_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match problem.feasible_at(mid) {
            Some(t) => {
                lo = mid;
                theta = t;
            }
            None => hi = mid,
        }
    }
    Ok((lo, unit(theta)))
}

/// Largest beta supported by received SNRs `s_first`, `s_second`.
pub fn beta_from_snrs(s_first: f64, s_second: f64, alpha: f64) -> f64 {
    let cap = 1.0 + s_second;
    if alpha == 0.0 {
        return cap;
    }
    let exponent = 1.0 / (1.0 - alpha);
    let g = |b: f64| b.powf(exponent) - b;
    if g(cap) <= s_first {
        return cap;
    }
    let (mut lo, mut hi) = (1.0, cap);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return lo;
        }
        if g(mid) <= s_first {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Received SNRs of both users under a centralized phase vector.
pub fn centralized_snrs(real: &ChannelRealization, cfg: &ScenarioConfig, phases: &[Complex64]) -> [f64; 2] {
    let h = real.centralized_channels(phases);
    [0, 1].map(|k| cfg.p_max[k] * h[k].norm_sqr() / cfg.noise_power)
}

pub fn centralized_pentagon(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    phases: &[Complex64],
) -> Result<Pentagon> {
    if phases.len() != real.m_total() {
        return Err(Error::DimensionMismatch {
            context: "reflection phases",
            expected: real.m_total(),
            found: phases.len(),
        });
    }
    let [s1, s2] = centralized_snrs(real, cfg, phases);
    Ok(Pentagon::from_snrs(s1, s2))
}

/// Default starting point: the single-user aligned phases of the user with
/// the larger rate share.
pub fn warm_start(real: &ChannelRealization, query: &RateProfileQuery) -> ReflectionConfig {
    let [first, second] = query.order.users();
    let user = if query.alpha >= 0.5 { first } else { second };
    ReflectionConfig::Centralized {
        phases: aligned_phases(real.h_bar[user], &real.g_cent, &real.h_cent[user]),
    }
}

/// Sum-rate maximization along one rate profile from the given start.
pub fn maximize_rate_profile(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    query: &RateProfileQuery,
    init: &ReflectionConfig,
    opts: &ProfileOptions,
) -> Result<AltOptTrace> {
    real.check_against(cfg)?;
    let query = RateProfileQuery::new(query.alpha, query.order)?;
    let [first, second] = query.order.users();

    if query.alpha == 1.0 {
        let phases = aligned_phases(real.h_bar[first], &real.g_cent, &real.h_cent[first]);
        let gain = real.centralized_gain_bound(first);
        let r = (1.0 + cfg.p_max[first] * gain * gain / cfg.noise_power).log2();
        return Ok(AltOptTrace {
            query,
            beta_history: Vec::new(),
            outer_iterations: 0,
            converged: true,
            final_phases: ReflectionConfig::Centralized { phases },
            final_beta: 1.0,
            final_r: r,
        });
    }

    let mut phases = init.centralized_phases()?.to_vec();
    if phases.len() != real.m_total() {
        return Err(Error::DimensionMismatch {
            context: "initial phases",
            expected: real.m_total(),
            found: phases.len(),
        });
    }
    let powers = [cfg.p_max[first], cfg.p_max[second]];
    let sigma2 = cfg.noise_power;
    let alpha = query.alpha;
    let beta_of = |h: &[Complex64; 2]| {
        beta_from_snrs(
            powers[0] * h[first].norm_sqr() / sigma2,
            powers[1] * h[second].norm_sqr() / sigma2,
            alpha,
        )
    };

    let mut h = real.centralized_channels(&phases);
    let mut beta = beta_of(&h);
    let mut history = vec![beta];
    let mut sweeps = 0;
    let mut converged = phases.is_empty();

    while !converged && sweeps < opts.max_sweeps {
        let start = beta;
        #[allow(clippy::needless_range_loop)]
        for m in 0..phases.len() {
            let b = [0, 1].map(|k| real.g_cent[m] * real.h_cent[k][m]);
            let residual = [0, 1].map(|k| h[k] - b[k] * phases[m]);
            let problem = ElementProblem {
                f: [
                    element_coefficients(residual[first], b[first]),
                    element_coefficients(residual[second], b[second]),
                ],
                alpha,
                powers,
                noise_power: sigma2,
            };
            let (_, phi) = solve_element(&problem, opts.beta_tol)?;
            let candidate = [0, 1].map(|k| residual[k] + b[k] * phi);
            let candidate_beta = beta_of(&candidate);
            // keep the old coefficient when bisection round-off would lose ground
            if candidate_beta >= beta {
                phases[m] = phi;
                h = candidate;
                beta = candidate_beta;
            }
            history.push(beta);
        }
        sweeps += 1;
        if beta - start <= opts.epsilon * start {
            if let Some((p, hh, b)) = joint_ascent(real, cfg, &query, &phases, beta, opts.epsilon) {
                phases = p;
                h = hh;
                beta = b;
                history.push(beta);
            }
        }
        converged = beta - start <= opts.epsilon * start;
    }

    Ok(AltOptTrace {
        query,
        beta_history: history,
        outer_iterations: sweeps,
        converged,
        final_phases: ReflectionConfig::Centralized { phases },
        final_beta: beta,
        final_r: beta.log2() / (1.0 - alpha),
    })
}

/// Smallest `beta >= 1` with `beta^{1/(1-alpha)} - beta >= s`, for `0 < alpha < 1`.
fn first_user_cap(s: f64, alpha: f64) -> f64 {
    let exponent = 1.0 / (1.0 - alpha);
    let g = |b: f64| b.powf(exponent) - b;
    let mut hi = 2.0;
    while g(hi) <= s {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return lo;
        }
        if g(mid) <= s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Joint moves of all phases, used when a sweep stalls.
///
/// Element-wise updates stop at points where both rate constraints are
/// active and no single coefficient can relax both. There the steepest
/// ascent direction of `min(cap_first, cap_second)` is the minimum-norm
/// convex combination of the two caps' gradients (in the phase angles),
/// which raises both caps at the same rate. Steps are halved until beta
/// improves, then doubled while it keeps improving; moves repeat while the
/// relative gain exceeds `epsilon`.
fn joint_ascent(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    query: &RateProfileQuery,
    phases: &[Complex64],
    beta: f64,
    epsilon: f64,
) -> Option<(Vec<Complex64>, [Complex64; 2], f64)> {
    const MAX_MOVES: usize = 50;
    let mut best: Option<(Vec<Complex64>, [Complex64; 2], f64)> = None;
    let mut current = (phases.to_vec(), beta);
    for _ in 0..MAX_MOVES {
        match joint_step(real, cfg, query, &current.0, current.1) {
            Some((p, h, b)) => {
                let gain = b - current.1;
                current = (p.clone(), b);
                best = Some((p, h, b));
                if gain <= epsilon * b {
                    break;
                }
            }
            None => break,
        }
    }
    best
}

fn joint_step(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    query: &RateProfileQuery,
    phases: &[Complex64],
    beta: f64,
) -> Option<(Vec<Complex64>, [Complex64; 2], f64)> {
    let [first, second] = query.order.users();
    let alpha = query.alpha;
    let m = phases.len();
    if m == 0 {
        return None;
    }
    let h = real.centralized_channels(phases);
    let scale = [0, 1].map(|k| cfg.p_max[k] / cfg.noise_power);
    let snr = [0, 1].map(|k| scale[k] * h[k].norm_sqr());
    // d s_k / d theta_m
    let grad = |k: usize| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let c = real.g_cent[i] * real.h_cent[k][i] * phases[i];
                -2.0 * scale[k] * (h[k].conj() * c).im
            })
            .collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    // gradient of cap_second = 1 + s_second
    let g2 = grad(second);
    let cap_second = 1.0 + snr[second];
    let direction = if alpha == 0.0 {
        g2
    } else {
        let exponent = 1.0 / (1.0 - alpha);
        let cap_first = first_user_cap(snr[first], alpha);
        // cap_first solves cap^e - cap = s_first
        let slope = exponent * cap_first.powf(exponent - 1.0) - 1.0;
        let g1: Vec<f64> = grad(first).into_iter().map(|x| x / slope).collect();
        let near = |a: f64, b: f64| a <= b * (1.0 + 1e-6);
        match (near(cap_first, cap_second), near(cap_second, cap_first)) {
            (true, true) => {
                let (a, b, c) = (dot(&g1, &g1), dot(&g2, &g2), dot(&g1, &g2));
                let denom = a + b - 2.0 * c;
                let w = if denom > 0.0 { ((b - c) / denom).clamp(0.0, 1.0) } else { 0.5 };
                g1.iter().zip(&g2).map(|(x, y)| w * x + (1.0 - w) * y).collect()
            }
            (true, false) => g1,
            _ => g2,
        }
    };
    let largest = direction.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    if largest <= 0.0 || !largest.is_finite() {
        return None;
    }
    let evaluate = |step: f64| {
        let moved: Vec<Complex64> = phases
            .iter()
            .zip(&direction)
            .map(|(phi, d)| phi * unit(step * d))
            .collect();
        let hh = real.centralized_channels(&moved);
        let s = [0, 1].map(|k| scale[k] * hh[k].norm_sqr());
        let b = beta_from_snrs(s[first], s[second], alpha);
        (moved, hh, b)
    };
    let mut step = 0.25 / largest;
    let mut found = None;
    for _ in 0..50 {
        let trial = evaluate(step);
        if trial.2 > beta {
            found = Some(trial);
            break;
        }
        step *= 0.5;
    }
    let mut found = found?;
    for _ in 0..20 {
        step *= 2.0;
        if step * largest > std::f64::consts::PI {
            break;
        }
        let trial = evaluate(step);
        if trial.2 > found.2 {
            found = trial;
        } else {
            break;
        }
    }
    Some(found)
}

/// Best of the warm start and `opts.restarts - 1` random starts.
pub fn best_rate_profile(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    query: &RateProfileQuery,
    opts: &ProfileOptions,
) -> Result<AltOptTrace> {
    let mut best = maximize_rate_profile(real, cfg, query, &warm_start(real, query), opts)?;
    if query.alpha == 1.0 {
        return Ok(best);
    }
    for restart in 1..opts.restarts {
        let mut rng = ChaCha20Rng::seed_from_u64(opts.restart_seed);
        rng.set_stream(restart as u64);
        let init = ReflectionConfig::Centralized {
            phases: (0..real.m_total()).map(|_| unit(rng.random_range(0.0..TAU))).collect(),
        };
        let trace = maximize_rate_profile(real, cfg, query, &init, opts)?;
        if trace.final_r > best.final_r {
            best = trace;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileSample {
    pub alpha: f64,
    pub order: DecodingOrder,
    pub pair: RatePair,
    pub sum_rate: f64,
    /// Trace of the chosen order.
    pub trace: AltOptTrace,
    /// Trace of the other order.
    pub rejected: AltOptTrace,
}

/// Rate pair on profile `alpha` using the better of the two decoding orders
/// (order I on ties).
pub fn rate_pair_from_profile(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    alpha: f64,
    opts: &ProfileOptions,
) -> Result<ProfileSample> {
    let one = best_rate_profile(real, cfg, &RateProfileQuery::new(alpha, DecodingOrder::I)?, opts)?;
    let two = best_rate_profile(real, cfg, &RateProfileQuery::new(alpha, DecodingOrder::II)?, opts)?;
    let (trace, rejected) = if one.final_r >= two.final_r { (one, two) } else { (two, one) };
    Ok(ProfileSample {
        alpha,
        order: trace.query.order,
        pair: trace.query.pair(trace.final_r),
        sum_rate: trace.final_r,
        trace,
        rejected,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InnerBound {
    pub region: RateRegion,
    pub samples: Vec<ProfileSample>,
    /// Single-user corners `(r1 max, 0)` and `(0, r2 max)` of the
    /// all-rate-to-one-user profiles, whichever order the samples selected.
    pub axis_corners: [RatePair; 2],
    /// Successive-decoding corners of every optimized design (both orders).
    pub design_corners: Vec<RatePair>,
    /// Extra profiles solved by adaptive refinement.
    pub refinements: Vec<AltOptTrace>,
    pub l: usize,
}

/// Share of the sum rate that goes to user 1 along a trace's profile.
fn user1_share(q: &RateProfileQuery) -> f64 {
    match q.order {
        DecodingOrder::I => q.alpha,
        DecodingOrder::II => 1.0 - q.alpha,
    }
}

fn design_corners_of(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    traces: &[&AltOptTrace],
) -> Result<Vec<RatePair>> {
    let mut corners = Vec::with_capacity(2 * traces.len());
    for t in traces {
        let p = centralized_pentagon(real, cfg, t.final_phases.centralized_phases()?)?;
        corners.extend(p.corners());
    }
    Ok(corners)
}

/// Hull of `l` uniformly spaced rate profiles (endpoints included), refined
/// adaptively when `opts.refine_tol > 0`.
///
/// The hull takes in, besides the profile rate pairs, both successive-decoding
/// corners of every optimized design. Refinement works on the ray through
/// the origin that a profile follows: between two neighbouring rays, the
/// middle ray is solved with both decoding orders. If its corners stick out
/// of the current hull by more than `refine_tol`, both halves are refined
/// again, up to `refine_depth` levels.
pub fn inner_bound(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    l: usize,
    opts: &ProfileOptions,
) -> Result<InnerBound> {
    if l < 2 {
        return Err(Error::Domain(format!("need at least 2 rate profiles, got {l}")));
    }
    real.check_against(cfg)?;
    let samples: Vec<ProfileSample> = (0..l)
        .into_par_iter()
        .map(|i| rate_pair_from_profile(real, cfg, i as f64 / (l - 1) as f64, opts))
        .collect::<Result<_>>()?;
    let axis_corners = [DecodingOrder::I, DecodingOrder::II].map(|order| {
        let user = order.users()[0];
        let g = real.centralized_gain_bound(user);
        let r = (1.0 + cfg.p_max[user] * g * g / cfg.noise_power).log2();
        RateProfileQuery { alpha: 1.0, order }.pair(r)
    });
    let sample_traces: Vec<&AltOptTrace> = samples.iter().flat_map(|s| [&s.trace, &s.rejected]).collect();
    let mut design_corners = design_corners_of(real, cfg, &sample_traces)?;
    let mut points: Vec<RatePair> = samples.iter().map(|s| s.pair).collect();
    points.extend(axis_corners);
    points.extend(design_corners.iter().copied());

    let mut refinements: Vec<AltOptTrace> = Vec::new();
    if opts.refine_tol > 0.0 {
        let mut shares: Vec<f64> = sample_traces.iter().map(|t| user1_share(&t.query)).collect();
        shares.sort_by(f64::total_cmp);
        shares.dedup();
        let mut pending: Vec<(f64, f64)> = shares.windows(2).map(|w| (w[0], w[1])).collect();
        for _ in 0..opts.refine_depth {
            if pending.is_empty() {
                break;
            }
            let region = RateRegion::from_points(&points)?;
            let solved: Vec<(f64, f64, [AltOptTrace; 2])> = pending
                .par_iter()
                .map(|&(lo, hi)| {
                    let share = 0.5 * (lo + hi);
                    let one = best_rate_profile(real, cfg, &RateProfileQuery::new(share, DecodingOrder::I)?, opts)?;
                    let two =
                        best_rate_profile(real, cfg, &RateProfileQuery::new(1.0 - share, DecodingOrder::II)?, opts)?;
                    Ok((lo, hi, [one, two]))
                })
                .collect::<Result<_>>()?;
            let mut next = Vec::new();
            for (lo, hi, traces) in solved {
                let corners = design_corners_of(real, cfg, &[&traces[0], &traces[1]])?;
                let bulge = corners.iter().map(|p| region.distance_to(*p)).fold(0.0, f64::max);
                if bulge > opts.refine_tol {
                    let mid = 0.5 * (lo + hi);
                    next.push((lo, mid));
                    next.push((mid, hi));
                }
                points.extend(corners.iter().copied());
                design_corners.extend(corners);
                refinements.extend(traces);
            }
            pending = next;
        }
    }

    Ok(InnerBound {
        region: RateRegion::from_points(&points)?,
        samples,
        axis_corners,
        design_corners,
        refinements,
        l,
    })
}

fn require_twin(real: &ChannelRealization) -> Result<()> {
    if is_twin(real) {
        Ok(())
    } else {
        Err(Error::AssumptionViolation(
            "centralized channels are not the twin of the distributed ones".into(),
        ))
    }
}

/// Centralized phases built from the distributed-optimal designs: sub-surface
/// k (the elements twinned with IRS k) reuses user k's aligned phases,
/// rotated by `theta_k`.
pub fn heuristic_twin_phases(real: &ChannelRealization, theta1: f64, theta2: f64) -> Result<ReflectionConfig> {
    require_twin(real)?;
    let rotation = [unit(theta1), unit(theta2)];
    let phases = (0..2)
        .flat_map(|k| {
            aligned_phases(real.h_bar[k], &real.g_dist[k], &real.h_dist[k])
                .into_iter()
                .map(move |phi| phi * rotation[k])
        })
        .collect();
    Ok(ReflectionConfig::Centralized { phases })
}

/// Pentagon of the unrotated heuristic design.
pub fn heuristic_pentagon(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<Pentagon> {
    let refl = heuristic_twin_phases(real, 0.0, 0.0)?;
    centralized_pentagon(real, cfg, refl.centralized_phases()?)
}

/// Grid resolution of the rotation search in [`twin_dominance_check`].
pub const ROTATION_GRID: usize = 64;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwinDominance {
    pub holds: bool,
    /// Rotations `(theta1, theta2)` of the dominating heuristic design.
    pub witness: Option<(f64, f64)>,
    /// Whether the witness came from the grid (as opposed to the exact construction).
    pub from_grid: bool,
    pub distributed: Pentagon,
    pub centralized: Option<Pentagon>,
}

/// Searches rotated heuristic designs for a centralized pentagon containing
/// the distributed capacity region (twin channels, no direct links).
///
/// The grid is tried first; if no grid point dominates within `1e-9`, the
/// exact construction is used: with `delta = theta2 - theta1`, user 1 gains
/// `|A1 + e^{j delta} B1|` and user 2 `|A2 + e^{-j delta} C2|`, where `A_k` is
/// the distributed gain. Each condition `|A + e^{j delta} B| >= A` holds on a
/// closed arc of length at least pi, so the two arcs always meet.
pub fn twin_dominance_check(real: &ChannelRealization, cfg: &ScenarioConfig) -> Result<TwinDominance> {
    require_twin(real)?;
    real.check_against(cfg)?;
    let zero = Complex64::new(0.0, 0.0);
    if real.h_bar != [zero; 2] {
        return Err(Error::AssumptionViolation("direct links must be zero".into()));
    }
    let distributed = distributed_capacity_region(real, cfg)?.pentagon;
    let tol = 1e-9;
    let margin = |p: &Pentagon| {
        (p.cap1 - distributed.cap1)
            .min(p.cap2 - distributed.cap2)
            .min(p.cap_sum - distributed.cap_sum)
    };

    let mut best: Option<(f64, (f64, f64), Pentagon)> = None;
    for i in 0..ROTATION_GRID {
        for j in 0..ROTATION_GRID {
            let thetas = (
                TAU * i as f64 / ROTATION_GRID as f64,
                TAU * j as f64 / ROTATION_GRID as f64,
            );
            let refl = heuristic_twin_phases(real, thetas.0, thetas.1)?;
            let p = centralized_pentagon(real, cfg, refl.centralized_phases()?)?;
            let score = margin(&p);
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, thetas, p));
            }
        }
    }
    if let Some((score, thetas, p)) = best {
        if score >= -tol {
            return Ok(TwinDominance {
                holds: true,
                witness: Some(thetas),
                from_grid: true,
                distributed,
                centralized: Some(p),
            });
        }
    }

    // Exact construction on delta = theta2 - theta1, theta1 = 0.
    let refl = heuristic_twin_phases(real, 0.0, 0.0)?;
    let phases = refl.centralized_phases()?;
    let [m1, _] = real.m_split();
    let part = |user: usize, range: std::ops::Range<usize>| -> Complex64 {
        range
            .map(|m| real.g_cent[m] * phases[m] * real.h_cent[user][m])
            .sum()
    };
    let m = real.m_total();
    let a = [part(0, 0..m1).norm(), part(1, m1..m).norm()];
    let b1 = part(0, m1..m);
    let c2 = part(1, 0..m1);
    let arcs = [
        constraint_arc(b1 * a[0], -b1.norm_sqr()),
        constraint_arc(c2.conj() * a[1], -c2.norm_sqr()),
    ];
    let witness = intersect(arcs[0], arcs[1]).map(|delta| (0.0, wrap(delta).rem_euclid(TAU)));
    let centralized = match witness {
        Some((t1, t2)) => {
            let refl = heuristic_twin_phases(real, t1, t2)?;
            Some(centralized_pentagon(real, cfg, refl.centralized_phases()?)?)
        }
        None => None,
    };
    let holds = centralized.as_ref().is_some_and(|p| margin(p) >= -tol);
    Ok(TwinDominance {
        holds,
        witness,
        from_grid: false,
        distributed,
        centralized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_channel, generate_realization};
    use crate::geometry::contains;
    use crate::sdr::outer_bound;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn centralized_only(h_bar: [Complex64; 2], g: Vec<Complex64>, h: [Vec<Complex64>; 2]) -> (ChannelRealization, ScenarioConfig) {
        let m = g.len();
        let real = ChannelRealization {
            h_bar,
            h_dist: [vec![c(1.0, 0.0); m], vec![]],
            g_dist: [vec![c(1.0, 0.0); m], vec![]],
            h_cent: h,
            g_cent: g,
        };
        let cfg = ScenarioConfig {
            m_total: m,
            m_split: [m, 0],
            ..ScenarioConfig::normalized(m)
        };
        (real, cfg)
    }

    #[test]
    fn affine_examples() {
        let (real, _) = centralized_only([c(0.0, 0.0); 2], vec![c(1.0, 0.0)], [vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]]);
        let phases = ReflectionConfig::centralized_from_angles(&[0.3]);
        let (f1, f2) = affine_coefficients(&real, &phases, 0, 0).unwrap();
        assert_eq!(f1, 1.0);
        assert_eq!(f2, c(0.0, 0.0));

        let (real, _) = centralized_only(
            [c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            [vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(1.0, 0.0)]],
        );
        let phases = ReflectionConfig::centralized_from_angles(&[0.7, 0.0]);
        let (f1, f2) = affine_coefficients(&real, &phases, 0, 0).unwrap();
        assert!((f1 - 5.0).abs() < 1e-15);
        assert!((f2 - c(2.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            affine_coefficients(&real, &phases, 2, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn affine_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut worst: f64 = 0.0;
        for seed in 0..20 {
            let cfg = ScenarioConfig::normalized(5).with_seed(seed);
            let real = generate_realization(&cfg).unwrap();
            let angles: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..TAU)).collect();
            for m in 0..5 {
                for user in 0..2 {
                    let base = ReflectionConfig::centralized_from_angles(&angles);
                    let (f1, f2) = affine_coefficients(&real, &base, m, user).unwrap();
                    for _ in 0..100 {
                        let mut a = angles.clone();
                        a[m] = rng.random_range(0.0..TAU);
                        let refl = ReflectionConfig::centralized_from_angles(&a);
                        let direct = effective_channel(&real, &refl, user).unwrap().norm_sqr();
                        let affine = f1 + 2.0 * (f2 * unit(a[m])).re;
                        worst = worst.max((direct - affine).abs() / direct);
                    }
                }
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn arc_geometry() {
        assert_eq!(
            constraint_arc(c(1.0, 0.0), 0.0),
            Arc::Span {
                center: 0.0,
                half_width: PI / 2.0
            }
        );
        assert_eq!(constraint_arc(c(0.0, 0.0), 0.0), Arc::Full);
        assert_eq!(constraint_arc(c(0.0, 0.0), 1e-300), Arc::Empty);
        assert_eq!(constraint_arc(c(1.0, 0.0), -2.0), Arc::Full);
        assert_eq!(constraint_arc(c(1.0, 0.0), 2.5), Arc::Empty);
        // arcs around 0 and pi, each of half width 1: disjoint
        let a = Arc::Span { center: 0.0, half_width: 1.0 };
        let b = Arc::Span { center: PI, half_width: 1.0 };
        assert_eq!(intersect(a, b), None);
        // across the branch cut
        let a = Arc::Span { center: 3.0, half_width: 0.3 };
        let b = Arc::Span { center: -3.0, half_width: 0.3 };
        let t = intersect(a, b).unwrap();
        assert!(wrap(t - 3.0).abs() <= 0.3 && wrap(t + 3.0).abs() <= 0.3);
    }

    #[test]
    fn phase_independent_constraints() {
        // f2 = 0 for both users: beta = min(1 + s2, root of beta^2 - beta = s1) at alpha = 0.5
        let p = ElementProblem {
            f: [(3.0, c(0.0, 0.0)), (8.0, c(0.0, 0.0))],
            alpha: 0.5,
            powers: [1.0, 1.0],
            noise_power: 1.0,
        };
        let (beta, phi) = solve_element(&p, 1e-12).unwrap();
        let root = 0.5 * (1.0 + 13f64.sqrt());
        assert!((beta - root).abs() < 1e-10);
        assert_eq!(phi, c(1.0, 0.0));
    }

    /// Largest beta over a dense two-stage grid on theta.
    fn grid_beta(p: &ElementProblem) -> f64 {
        let eval = |t: f64| {
            let s = [0, 1].map(|i| {
                let (f1, f2) = p.f[i];
                p.powers[i] * (f1 + 2.0 * (f2 * unit(t)).re).max(0.0) / p.noise_power
            });
            beta_from_snrs(s[0], s[1], p.alpha)
        };
        let n = 10_000;
        let coarse = (0..n).map(|i| TAU * i as f64 / n as f64);
        let best = coarse.max_by(|a, b| eval(*a).total_cmp(&eval(*b))).unwrap();
        let step = TAU / n as f64;
        (0..=10_000)
            .map(|i| best - step + 2.0 * step * i as f64 / 10_000.0)
            .map(eval)
            .fold(f64::MIN, f64::max)
    }

    #[test]
    fn element_update_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let mut f = [(0.0, c(0.0, 0.0)); 2];
            for fi in &mut f {
                let a = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let b = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                *fi = element_coefficients(a, b);
            }
            let p = ElementProblem {
                f,
                alpha: rng.random_range(0.0..0.95),
                powers: [rng.random_range(0.5..2.0), rng.random_range(0.5..2.0)],
                noise_power: 0.3,
            };
            let (beta, phi) = solve_element(&p, 1e-12).unwrap();
            let oracle = grid_beta(&p);
            assert!(beta >= oracle - 1e-6, "{beta} < {oracle}");
            assert!(beta <= oracle + 1e-6, "{beta} > {oracle}");
            // the returned phase attains it
            let s = [0, 1].map(|i| p.powers[i] * (p.f[i].0 + 2.0 * (p.f[i].1 * phi).re) / p.noise_power);
            assert!(beta_from_snrs(s[0], s[1], p.alpha) >= beta * (1.0 - 1e-9));
        }
    }

    #[test]
    fn beta_cap_function_is_monotone() {
        for alpha in [0.0, 0.1, 0.5, 0.9, 0.99] {
            let g = |b: f64| b.powf(1.0 / (1.0 - alpha)) - b;
            let mut prev = g(1.0);
            for i in 1..1000 {
                let v = g(1.0 + i as f64 * 0.01);
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn extreme_profiles() {
        let cfg = ScenarioConfig::normalized(4).with_seed(2);
        let real = generate_realization(&cfg).unwrap();
        let outer = outer_bound(&real, &cfg).unwrap();
        let opts = ProfileOptions::default();
        let one = rate_pair_from_profile(&real, &cfg, 1.0, &opts).unwrap();
        let expected = match one.order {
            DecodingOrder::I => (outer.r1_cap, 0.0),
            DecodingOrder::II => (0.0, outer.r2_cap),
        };
        assert!((one.pair.r1 - expected.0).abs() < 1e-12 && (one.pair.r2 - expected.1).abs() < 1e-12);

        // alpha = 0: the first decoded user gets nothing, the other its single-user optimum
        let q = RateProfileQuery::new(0.0, DecodingOrder::I).unwrap();
        let t = maximize_rate_profile(&real, &cfg, &q, &warm_start(&real, &q), &opts).unwrap();
        assert!((t.final_r - outer.r2_cap).abs() < 1e-9);
        assert_eq!(q.pair(t.final_r).r1, 0.0);
    }

    #[test]
    fn traces_are_monotone_and_satisfy_sic() {
        let opts = ProfileOptions::default();
        for seed in 0..5 {
            let cfg = ScenarioConfig::normalized(4).with_seed(seed);
            let real = generate_realization(&cfg).unwrap();
            for alpha in [0.1, 0.3, 0.5, 0.8] {
                for order in [DecodingOrder::I, DecodingOrder::II] {
                    let q = RateProfileQuery::new(alpha, order).unwrap();
                    let t = maximize_rate_profile(&real, &cfg, &q, &warm_start(&real, &q), &opts).unwrap();
                    assert!(t.beta_history.windows(2).all(|w| w[1] >= w[0]));
                    assert!(t.converged);
                    assert!((t.final_beta - 2f64.powf((1.0 - alpha) * t.final_r)).abs() < 1e-9 * t.final_beta);

                    // SIC substitution: second user's power set so its rate is tight
                    let [first, second] = order.users();
                    let phases = t.final_phases.centralized_phases().unwrap();
                    let gains = real.centralized_channels(phases).map(|h| h.norm_sqr());
                    let sigma2 = cfg.noise_power;
                    let r_second = (1.0 - alpha) * t.final_r;
                    let p_second = (2f64.powf(r_second) - 1.0) * sigma2 / gains[second];
                    assert!(p_second <= cfg.p_max[second] * (1.0 + 1e-9));
                    let r_first = (1.0 + cfg.p_max[first] * gains[first] / (sigma2 + p_second * gains[second])).log2();
                    assert!(r_first >= alpha * t.final_r - 1e-9, "{r_first} < {}", alpha * t.final_r);
                }
            }
        }
    }

    #[test]
    fn symmetric_channels_tie_to_order_one() {
        let g = vec![c(0.6, 0.2), c(-0.3, 0.9)];
        let h = vec![c(1.0, -0.4), c(0.2, 0.5)];
        let (real, cfg) = centralized_only([c(0.3, 0.1); 2], g, [h.clone(), h]);
        let s = rate_pair_from_profile(&real, &cfg, 0.5, &ProfileOptions::default()).unwrap();
        assert_eq!(s.order, DecodingOrder::I);
        assert!((s.pair.sum() - s.sum_rate).abs() < 1e-12);
    }

    #[test]
    fn no_reflection_gives_direct_link_pentagon() {
        let m = 3;
        let (real, cfg) = centralized_only(
            [c(0.8, -0.1), c(0.2, 0.5)],
            vec![c(0.0, 0.0); m],
            [vec![c(1.0, 0.0); m], vec![c(0.5, 0.0); m]],
        );
        let ib = inner_bound(&real, &cfg, 101, &ProfileOptions::default()).unwrap();
        let mac = crate::distributed::direct_link_pentagon(&real, &cfg).region();
        assert!(crate::geometry::hausdorff_distance(&ib.region, &mac) < 1e-6);
    }

    #[test]
    fn inner_bound_within_outer_bound() {
        for seed in 0..10 {
            let cfg = ScenarioConfig::normalized(4).with_seed(seed);
            let real = generate_realization(&cfg).unwrap();
            let ib = inner_bound(&real, &cfg, 20, &ProfileOptions::default()).unwrap();
            let ob = outer_bound(&real, &cfg).unwrap();
            assert!(contains(&ob.region, &ib.region, 1e-9).unwrap());
            for s in &ib.samples {
                assert!((s.pair.sum() - s.sum_rate).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heuristic_structure() {
        let cfg = ScenarioConfig {
            m_total: 3,
            m_split: [3, 0],
            direct_links_enabled: false,
            ..ScenarioConfig::normalized(3)
        }
        .with_seed(4);
        let real = generate_realization(&cfg).unwrap();
        let refl = heuristic_twin_phases(&real, 0.0, 0.0).unwrap();
        let h1 = effective_channel(&real, &refl, 0).unwrap().norm();
        assert!(h1 >= real.distributed_gain_bound(0) * (1.0 - 1e-12));

        let mut broken = real.clone();
        broken.g_cent[0] *= 2.0;
        assert!(matches!(
            heuristic_twin_phases(&broken, 0.0, 0.0),
            Err(Error::AssumptionViolation(_))
        ));
    }

    #[test]
    fn twin_dominance_on_random_draws() {
        for seed in 0..30 {
            let m = 2 + 2 * (seed as usize % 3);
            let cfg = ScenarioConfig {
                direct_links_enabled: false,
                ..ScenarioConfig::normalized(m)
            }
            .with_seed(seed);
            let real = generate_realization(&cfg).unwrap();
            let out = twin_dominance_check(&real, &cfg).unwrap();
            assert!(out.holds, "seed {seed}: {out:?}");
        }
    }

    #[test]
    fn exact_construction_dominates() {
        // the fallback alone must also succeed
        for seed in 0..30 {
            let cfg = ScenarioConfig {
                direct_links_enabled: false,
                ..ScenarioConfig::normalized(3)
            }
            .with_seed(seed);
            let real = generate_realization(&cfg).unwrap();
            let refl = heuristic_twin_phases(&real, 0.0, 0.0).unwrap();
            let phases = refl.centralized_phases().unwrap();
            let [m1, _] = real.m_split();
            let m = real.m_total();
            let part = |user: usize, r: std::ops::Range<usize>| -> Complex64 {
                r.map(|i| real.g_cent[i] * phases[i] * real.h_cent[user][i]).sum()
            };
            let a = [part(0, 0..m1).norm(), part(1, m1..m).norm()];
            let b1 = part(0, m1..m);
            let c2 = part(1, 0..m1);
            let delta = intersect(
                constraint_arc(b1 * a[0], -b1.norm_sqr()),
                constraint_arc(c2.conj() * a[1], -c2.norm_sqr()),
            )
            .unwrap();
            let refl = heuristic_twin_phases(&real, 0.0, delta).unwrap();
            for k in 0..2 {
                let g = effective_channel(&real, &refl, k).unwrap().norm();
                assert!(g >= real.distributed_gain_bound(k) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn dominance_with_one_empty_surface() {
        let cfg = ScenarioConfig {
            m_total: 2,
            m_split: [0, 2],
            direct_links_enabled: false,
            ..ScenarioConfig::normalized(2)
        };
        let real = generate_realization(&cfg).unwrap();
        let out = twin_dominance_check(&real, &cfg).unwrap();
        assert!(out.holds);
        assert_eq!(out.distributed.cap1, 0.0);
    }
}
