//! Exhaustive phase-grid search on small instances.
//!
//! Every reflecting element takes one of `l0` phases `2 pi l / l0`; all
//! `l0^M` tuples are visited. Used as ground truth for the closed-form,
//! rate-profile and relaxation routines.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{unit, ChannelRealization, Deployment, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{Pentagon, RatePair, RateRegion};

/// Points kept per worker before the buffer is reduced to its hull.
const COMPACT_AT: usize = 1 << 16;
const PROGRESS_EVERY: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub l0: usize,
    pub max_elements: usize,
    /// Largest number of tuples a single call may enumerate.
    pub budget: f64,
}

impl GridSpec {
    pub fn new(l0: usize) -> Self {
        Self {
            l0,
            ..Self::default()
        }
    }

    fn check(&self, elements: usize) -> Result<()> {
        if self.l0 < 2 {
            return Err(Error::Domain(format!("grid needs at least 2 phases, got {}", self.l0)));
        }
        if elements > self.max_elements {
            return Err(Error::Domain(format!(
                "{elements} elements exceed the grid limit of {}",
                self.max_elements
            )));
        }
        let needed = (self.l0 as f64).powi(elements as i32);
        if needed > self.budget {
            return Err(Error::BudgetExceeded {
                needed,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            l0: 64,
            max_elements: 8,
            budget: 1e8,
        }
    }
}

/// Per element and grid phase, the contribution `g phi h` to both users.
fn contribution_table(
    real: &ChannelRealization,
    deployment: Deployment,
    l0: usize,
) -> Vec<Vec<[Complex64; 2]>> {
    let zero = Complex64::new(0.0, 0.0);
    let grid: Vec<Complex64> = (0..l0)
        .map(|l| unit(std::f64::consts::TAU * l as f64 / l0 as f64))
        .collect();
    match deployment {
        Deployment::Centralized => (0..real.m_total())
            .map(|m| {
                let c = [0, 1].map(|k| real.g_cent[m] * real.h_cent[k][m]);
                grid.iter().map(|phi| [c[0] * phi, c[1] * phi]).collect()
            })
            .collect(),
        Deployment::Distributed => (0..2)
            .flat_map(|k| {
                let grid = &grid;
                real.g_dist[k].iter().zip(&real.h_dist[k]).map(move |(g, h)| {
                    let c = g * h;
                    grid.iter()
                        .map(|phi| if k == 0 { [c * phi, zero] } else { [zero, c * phi] })
                        .collect()
                })
            })
            .collect(),
    }
}

/// Visits the effective channels of every tuple, one accumulator per value
/// of the leading element.
fn enumerate<A, I, V>(table: &[Vec<[Complex64; 2]>], base: [Complex64; 2], init: I, visit: V) -> Vec<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    V: Fn(&mut A, [Complex64; 2]) + Sync,
{
    let Some((lead, rest)) = table.split_first() else {
        let mut acc = init();
        visit(&mut acc, base);
        return vec![acc];
    };
    let per_lead = rest.iter().map(|row| row.len() as u64).product::<u64>();
    lead.par_iter()
        .enumerate()
        .map(|(i, first)| {
            let mut acc = init();
            let mut idx = vec![0usize; rest.len()];
            loop {
                let mut h = [base[0] + first[0], base[1] + first[1]];
                for (row, &l) in rest.iter().zip(&idx) {
                    h[0] += row[l][0];
                    h[1] += row[l][1];
                }
                visit(&mut acc, h);
                // odometer
                let mut d = 0;
                while d < idx.len() {
                    idx[d] += 1;
                    if idx[d] < rest[d].len() {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == idx.len() {
                    break;
                }
            }
            let done = (i as u64 + 1) * per_lead;
            if done % PROGRESS_EVERY < per_lead {
                log::debug!("oracle: leading phase {i} done ({per_lead} tuples each)");
            }
            acc
        })
        .collect()
}

fn compact(points: Vec<RatePair>) -> Vec<RatePair> {
    match RateRegion::from_points(&points) {
        Ok(r) => r.vertices().to_vec(),
        Err(_) => points,
    }
}

/// Hull of the pentagons of every grid design of `deployment`.
pub fn oracle_region(
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    grid: &GridSpec,
    deployment: Deployment,
) -> Result<RateRegion> {
    real.check_against(cfg)?;
    grid.check(real.m_total())?;
    let table = contribution_table(real, deployment, grid.l0);
    let sigma2 = cfg.noise_power;
    let p = cfg.p_max;
    let buffers = enumerate(&table, real.h_bar, Vec::new, |points: &mut Vec<RatePair>, h| {
        let pent = Pentagon::from_snrs(p[0] * h[0].norm_sqr() / sigma2, p[1] * h[1].norm_sqr() / sigma2);
        points.extend(pent.corners());
        if points.len() > COMPACT_AT {
            *points = compact(std::mem::take(points));
        }
    });
    let all: Vec<RatePair> = buffers.into_iter().flat_map(compact).collect();
    RateRegion::from_points(&all)
}

/// Largest `P1 |h1|^2 + P2 |h2|^2` over the centralized phase grid.
pub fn oracle_p0_max(real: &ChannelRealization, cfg: &ScenarioConfig, grid: &GridSpec) -> Result<f64> {
    real.check_against(cfg)?;
    grid.check(real.m_total())?;
    let table = contribution_table(real, Deployment::Centralized, grid.l0);
    let p = cfg.p_max;
    let best = enumerate(&table, real.h_bar, || f64::NEG_INFINITY, |best: &mut f64, h| {
        *best = best.max(p[0] * h[0].norm_sqr() + p[1] * h[1].norm_sqr());
    });
    Ok(best.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::generate_realization;
    use crate::distributed::{direct_link_pentagon, distributed_capacity_region};
    use crate::geometry::{contains, hausdorff_distance};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn no_elements_is_direct_link_pentagon() {
        let cfg = ScenarioConfig::normalized(0);
        let real = generate_realization(&cfg).unwrap();
        for d in [Deployment::Centralized, Deployment::Distributed] {
            let r = oracle_region(&real, &cfg, &GridSpec::new(8), d).unwrap();
            assert_eq!(r, direct_link_pentagon(&real, &cfg).region());
        }
    }

    #[test]
    fn distributed_grid_approaches_closed_form() {
        for seed in 0..5 {
            let cfg = ScenarioConfig::normalized(2).with_seed(seed);
            let real = generate_realization(&cfg).unwrap();
            let exact = distributed_capacity_region(&real, &cfg).unwrap().region;
            let grid = oracle_region(&real, &cfg, &GridSpec::new(256), Deployment::Distributed).unwrap();
            assert!(contains(&exact, &grid, 1e-9).unwrap());
            assert!(hausdorff_distance(&exact, &grid) < 1e-3);
        }
    }

    #[test]
    fn single_element_without_direct_link_ignores_phase() {
        let real = ChannelRealization {
            h_bar: [c(0.0, 0.0); 2],
            h_dist: [vec![c(1.0, 0.0)], vec![]],
            g_dist: [vec![c(1.0, 0.0)], vec![]],
            h_cent: [vec![c(0.5, 0.5)], vec![c(-1.0, 0.2)]],
            g_cent: vec![c(0.3, -0.9)],
        };
        let cfg = ScenarioConfig {
            m_total: 1,
            m_split: [1, 0],
            ..ScenarioConfig::normalized(1)
        };
        let coarse = oracle_region(&real, &cfg, &GridSpec::new(2), Deployment::Centralized).unwrap();
        let fine = oracle_region(&real, &cfg, &GridSpec::new(64), Deployment::Centralized).unwrap();
        assert!(hausdorff_distance(&coarse, &fine) < 1e-12);
    }

    #[test]
    fn budget_and_limits() {
        let cfg = ScenarioConfig::normalized(4);
        let real = generate_realization(&cfg).unwrap();
        let tight = GridSpec {
            l0: 16,
            max_elements: 8,
            budget: 1000.0,
        };
        assert!(matches!(
            oracle_p0_max(&real, &cfg, &tight),
            Err(Error::BudgetExceeded { .. })
        ));
        let few = GridSpec {
            max_elements: 3,
            ..GridSpec::new(4)
        };
        assert!(matches!(oracle_p0_max(&real, &cfg, &few), Err(Error::Domain(_))));
        assert!(matches!(oracle_p0_max(&real, &cfg, &GridSpec::new(1)), Err(Error::Domain(_))));
    }

    #[test]
    fn p0_grid_matches_brute_force_loop() {
        let cfg = ScenarioConfig::normalized(2).with_seed(3);
        let real = generate_realization(&cfg).unwrap();
        let l0 = 16;
        let mut best: f64 = 0.0;
        for a in 0..l0 {
            for b in 0..l0 {
                let phases = [a, b].map(|l| unit(std::f64::consts::TAU * l as f64 / l0 as f64));
                let [h1, h2] = real.centralized_channels(&phases);
                best = best.max(h1.norm_sqr() + h2.norm_sqr());
            }
        }
        let grid = oracle_p0_max(&real, &cfg, &GridSpec::new(l0)).unwrap();
        assert!((grid - best).abs() < 1e-12 * best);
    }
}
