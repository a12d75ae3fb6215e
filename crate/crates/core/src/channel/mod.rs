//! Channel model for both deployments: path loss, Rayleigh fading draws,
//! twin-channel construction and effective user-to-AP channels.

mod generate;
mod scenario;

pub use generate::{generate_draw, generate_realization, is_twin, twin_channels, LinkStream};
pub use scenario::{db_to_linear, dbm_to_watts, Point3, ScenarioConfig};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `|phi| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;

/// `gamma0 * (1/d)^alpha_bar`.
pub fn path_loss(distance: f64, gamma0: f64, alpha_bar: f64) -> Result<f64> {
    if distance <= 0.0 || !distance.is_finite() {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {distance}")));
    }
    Ok(gamma0 * distance.recip().powf(alpha_bar))
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Argument of `z`, with `arg(0) = 0`.
pub fn phase(z: Complex64) -> f64 {
    if z == Complex64::new(0.0, 0.0) {
        0.0
    } else {
        z.arg()
    }
}

/// `e^{j theta}`.
pub fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// Element-wise product `g_m h_m` (the cascaded user-IRS-AP coefficients).
pub fn cascade(g: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    g.iter().zip(h).map(|(a, b)| a * b).collect()
}

/// `|h_bar| + ||diag(g) h||_1`, the largest effective gain reachable by phase alignment.
pub fn aligned_gain(h_bar: Complex64, g: &[Complex64], h: &[Complex64]) -> f64 {
    h_bar.norm() + g.iter().zip(h).map(|(a, b)| (a * b).norm()).sum::<f64>()
}

/// Phases that co-phase every cascaded term with the direct link.
/// Zero cascaded coefficients get phase 1.
pub fn aligned_phases(h_bar: Complex64, g: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let reference = phase(h_bar);
    g.iter()
        .zip(h)
        .map(|(a, b)| {
            let c = a * b;
            if c.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                unit(reference - c.arg())
            }
        })
        .collect()
}

/// One fading draw of every link, for both deployments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Direct user-AP channels.
    pub h_bar: [Complex64; 2],
    /// User k to its serving IRS (lengths M1, M2).
    pub h_dist: [Vec<Complex64>; 2],
    /// Serving IRS k to AP (lengths M1, M2).
    pub g_dist: [Vec<Complex64>; 2],
    /// User k to the centralized IRS (length M each).
    pub h_cent: [Vec<Complex64>; 2],
    /// Centralized IRS to AP (length M).
    pub g_cent: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn m_split(&self) -> [usize; 2] {
        [self.h_dist[0].len(), self.h_dist[1].len()]
    }

    pub fn m_total(&self) -> usize {
        self.g_cent.len()
    }

    /// Checks every vector length for internal consistency.
    pub fn validate(&self) -> Result<()> {
        let m = self.m_total();
        for k in 0..2 {
            check_len("g_dist", self.h_dist[k].len(), self.g_dist[k].len())?;
            check_len("h_cent", m, self.h_cent[k].len())?;
        }
        check_len("m_split", m, self.h_dist[0].len() + self.h_dist[1].len())?;
        Ok(())
    }

    pub fn check_against(&self, cfg: &ScenarioConfig) -> Result<()> {
        self.validate()?;
        check_len("m_total", cfg.m_total, self.m_total())?;
        check_len("m_split[0]", cfg.m_split[0], self.m_split()[0])?;
        check_len("m_split[1]", cfg.m_split[1], self.m_split()[1])
    }

    /// The realization with both direct links removed.
    pub fn without_direct_links(&self) -> Self {
        Self {
            h_bar: [Complex64::new(0.0, 0.0); 2],
            ..self.clone()
        }
    }

    /// Distributed-deployment upper gain `|h_bar_k| + ||diag(g_k^D) h_k^D||_1`.
    pub fn distributed_gain_bound(&self, user: usize) -> f64 {
        aligned_gain(self.h_bar[user], &self.g_dist[user], &self.h_dist[user])
    }

    /// Centralized-deployment upper gain `|h_bar_k| + ||diag(g^C) h_k^C||_1`.
    pub fn centralized_gain_bound(&self, user: usize) -> f64 {
        aligned_gain(self.h_bar[user], &self.g_cent, &self.h_cent[user])
    }

    /// Effective centralized channels of both users for a raw phase vector.
    pub fn centralized_channels(&self, phases: &[Complex64]) -> [Complex64; 2] {
        let mut out = self.h_bar;
        for (m, phi) in phases.iter().enumerate() {
            let g = self.g_cent[m] * phi;
            out[0] += g * self.h_cent[0][m];
            out[1] += g * self.h_cent[1][m];
        }
        out
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Deployment {
    Distributed,
    Centralized,
}

impl Deployment {
    pub fn name(self) -> &'static str {
        match self {
            Deployment::Distributed => "distributed",
            Deployment::Centralized => "centralized",
        }
    }
}

/// Unit-modulus reflection coefficients: one vector per IRS (distributed) or
/// a single vector (centralized). The diagonal reflection matrices are
/// stored as their diagonals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "deployment", rename_all = "lowercase")]
pub enum ReflectionConfig {
    Distributed { surfaces: [Vec<Complex64>; 2] },
    Centralized { phases: Vec<Complex64> },
}

fn check_unit(values: &[Complex64]) -> Result<()> {
    for (index, z) in values.iter().enumerate() {
        let modulus = z.norm();
        if (modulus - 1.0).abs() > UNIT_MODULUS_TOL {
            return Err(Error::NotUnitModulus { index, modulus });
        }
    }
    Ok(())
}

impl ReflectionConfig {
    pub fn centralized(phases: Vec<Complex64>) -> Result<Self> {
        check_unit(&phases)?;
        Ok(Self::Centralized { phases })
    }

    pub fn distributed(surfaces: [Vec<Complex64>; 2]) -> Result<Self> {
        check_unit(&surfaces[0])?;
        check_unit(&surfaces[1])?;
        Ok(Self::Distributed { surfaces })
    }

    pub fn centralized_from_angles(angles: &[f64]) -> Self {
        Self::Centralized {
            phases: angles.iter().map(|&t| unit(t)).collect(),
        }
    }

    pub fn deployment(&self) -> Deployment {
        match self {
            Self::Distributed { .. } => Deployment::Distributed,
            Self::Centralized { .. } => Deployment::Centralized,
        }
    }

    /// Centralized phase vector, or an error for a distributed config.
    pub fn centralized_phases(&self) -> Result<&[Complex64]> {
        match self {
            Self::Centralized { phases } => Ok(phases),
            Self::Distributed { .. } => Err(Error::DeploymentMismatch {
                expected: "centralized",
                found: "distributed",
            }),
        }
    }

    pub fn distributed_surfaces(&self) -> Result<&[Vec<Complex64>; 2]> {
        match self {
            Self::Distributed { surfaces } => Ok(surfaces),
            Self::Centralized { .. } => Err(Error::DeploymentMismatch {
                expected: "distributed",
                found: "centralized",
            }),
        }
    }
}

/// Effective channel `h_bar_k + sum_m g_m phi_m h_km` of `user` (0 or 1) under `refl`.
pub fn effective_channel(
    real: &ChannelRealization,
    refl: &ReflectionConfig,
    user: usize,
) -> Result<Complex64> {
    if user > 1 {
        return Err(Error::IndexOutOfRange {
            context: "user",
            index: user,
            len: 2,
        });
    }
    let (g, h, phases) = match refl {
        ReflectionConfig::Distributed { surfaces } => {
            (&real.g_dist[user], &real.h_dist[user], &surfaces[user])
        }
        ReflectionConfig::Centralized { phases } => (&real.g_cent, &real.h_cent[user], phases),
    };
    check_len("reflection phases", g.len(), phases.len())?;
    Ok(real.h_bar[user]
        + g.iter()
            .zip(h)
            .zip(phases)
            .map(|((g, h), phi)| g * phi * h)
            .sum::<Complex64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_user(h_bar: Complex64, g: Vec<Complex64>, h: Vec<Complex64>) -> ChannelRealization {
        ChannelRealization {
            h_bar: [h_bar, h_bar],
            h_dist: [h.clone(), vec![]],
            g_dist: [g.clone(), vec![]],
            h_cent: [h.clone(), h],
            g_cent: g,
        }
    }

    #[test]
    fn path_loss_examples() {
        assert_eq!(path_loss(1.0, 1e-3, 3.0).unwrap(), 1e-3);
        assert!((path_loss(500.0, 1e-3, 3.0).unwrap() - 8e-12).abs() < 1e-25);
        assert_eq!(path_loss(2.0, 1.0, 0.0).unwrap(), 1.0);
        assert!(path_loss(0.0, 1.0, 3.0).is_err());
        assert!(path_loss(-1.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn coherent_sum() {
        let real = single_user(c(0.0, 0.0), vec![c(1.0, 0.0); 2], vec![c(1.0, 0.0); 2]);
        let refl = ReflectionConfig::centralized(vec![c(1.0, 0.0); 2]).unwrap();
        let h = effective_channel(&real, &refl, 0).unwrap();
        assert!((h - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn phase_cancellation() {
        let real = single_user(c(0.0, 0.0), vec![c(1.0, 0.0), c(0.0, 1.0)], vec![c(1.0, 0.0); 2]);
        let refl = ReflectionConfig::centralized(vec![c(1.0, 0.0), c(0.0, -1.0)]).unwrap();
        let h = effective_channel(&real, &refl, 0).unwrap();
        assert!((h - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn aligned_phases_reach_the_bound() {
        let g = vec![c(0.3, -1.2), c(-0.7, 0.1), c(0.0, 2.0)];
        let h = vec![c(1.1, 0.4), c(-0.2, -0.9), c(0.5, 0.5)];
        let h_bar = c(-0.4, 0.8);
        let real = single_user(h_bar, g.clone(), h.clone());
        let refl = ReflectionConfig::centralized(aligned_phases(h_bar, &g, &h)).unwrap();
        let eff = effective_channel(&real, &refl, 0).unwrap();
        assert!((eff.norm() - aligned_gain(h_bar, &g, &h)).abs() < 1e-12);
    }

    #[test]
    fn arg_zero_convention() {
        assert_eq!(phase(c(0.0, 0.0)), 0.0);
        let p = aligned_phases(c(0.0, 0.0), &[c(1.0, 0.0)], &[c(1.0, 0.0)]);
        assert!((p[0] - c(1.0, 0.0)).norm() < 1e-15);
        let p = aligned_phases(c(1.0, 0.0), &[c(0.0, 0.0)], &[c(1.0, 0.0)]);
        assert_eq!(p[0], c(1.0, 0.0));
        // h_bar = 1, g h = e^{j pi/2} -> phi = e^{-j pi/2}
        let p = aligned_phases(c(1.0, 0.0), &[unit(FRAC_PI_2)], &[c(1.0, 0.0)]);
        assert!((p[0] - unit(-FRAC_PI_2)).norm() < 1e-15);
    }

    #[test]
    fn errors() {
        let real = single_user(c(0.0, 0.0), vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]);
        let refl = ReflectionConfig::centralized(vec![c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            effective_channel(&real, &refl, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        let short = ReflectionConfig::centralized(vec![]).unwrap();
        assert!(effective_channel(&real, &short, 0).is_err());
        assert!(ReflectionConfig::centralized(vec![c(0.5, 0.0)]).is_err());
        assert!(refl.distributed_surfaces().is_err());
    }

    #[test]
    fn json_uses_re_im_pairs() {
        let real = single_user(c(1.5, -2.0), vec![c(1.0, 0.0)], vec![c(0.0, 1.0)]);
        let json = serde_json::to_value(&real).unwrap();
        assert_eq!(json["h_bar"][0], serde_json::json!([1.5, -2.0]));
        let back: ChannelRealization = serde_json::from_value(json).unwrap();
        assert_eq!(back, real);
    }
}
