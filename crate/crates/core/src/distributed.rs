//! Closed-form capacity region of the distributed deployment.
//!
//! Each user's effective channel depends only on its own IRS, so a single
//! phase design (every cascaded term co-phased with the direct link)
//! maximizes both gains at once, and the region is one pentagon.

use serde::{Deserialize, Serialize};

use crate::channel::{aligned_phases, ChannelRealization, ReflectionConfig, ScenarioConfig};
use crate::error::Result;
use crate::geometry::{Pentagon, RateRegion};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistributedSolution {
    pub region: RateRegion,
    pub pentagon: Pentagon,
    pub phases: ReflectionConfig,
    /// `|h_bar_k| + ||diag(g_k^D) h_k^D||_1` for k = 1, 2.
    pub gains: [f64; 2],
}

/// Capacity-achieving phases `phi_km = exp(j(arg h_bar_k - arg(g_km h_km)))`.
pub fn optimal_distributed_phases(real: &ChannelRealization) -> ReflectionConfig {
    ReflectionConfig::Distributed {
        surfaces: [0, 1].map(|k| aligned_phases(real.h_bar[k], &real.g_dist[k], &real.h_dist[k])),
    }
}

pub fn distributed_capacity_region(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> Result<DistributedSolution> {
    real.check_against(cfg)?;
    let gains = [real.distributed_gain_bound(0), real.distributed_gain_bound(1)];
    let pentagon = Pentagon::from_snrs(
        cfg.p_max[0] * gains[0] * gains[0] / cfg.noise_power,
        cfg.p_max[1] * gains[1] * gains[1] / cfg.noise_power,
    );
    Ok(DistributedSolution {
        region: pentagon.region(),
        pentagon,
        phases: optimal_distributed_phases(real),
        gains,
    })
}

/// Pentagon of the MAC without any IRS (direct links only).
pub fn direct_link_pentagon(real: &ChannelRealization, cfg: &ScenarioConfig) -> Pentagon {
    Pentagon::from_snrs(
        cfg.p_max[0] * real.h_bar[0].norm_sqr() / cfg.noise_power,
        cfg.p_max[1] * real.h_bar[1].norm_sqr() / cfg.noise_power,
    )
}

/// Pentagon induced by an arbitrary distributed phase design.
pub fn distributed_pentagon(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    refl: &ReflectionConfig,
) -> Result<Pentagon> {
    refl.distributed_surfaces()?;
    let h1 = crate::channel::effective_channel(real, refl, 0)?;
    let h2 = crate::channel::effective_channel(real, refl, 1)?;
    Ok(Pentagon::from_snrs(
        cfg.p_max[0] * h1.norm_sqr() / cfg.noise_power,
        cfg.p_max[1] * h2.norm_sqr() / cfg.noise_power,
    ))
}
