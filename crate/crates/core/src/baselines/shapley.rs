use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loo::check_players;
use super::utility::Utility;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from};
use crate::values::{digest_str, DataValues, Method};

/// Largest player count accepted by [`exact_shapley`].
pub const EXACT_MAX_PLAYERS: usize = 12;

/// Shapley values by full subset enumeration.
pub fn exact_shapley(utility: &dyn Utility, ids: &[String]) -> Result<DataValues> {
    let n = check_players(utility, ids)?;
    if n > EXACT_MAX_PLAYERS {
        return Err(Error::config(format!(
            "exact Shapley enumerates 2^n subsets; n = {n} exceeds {EXACT_MAX_PLAYERS}"
        )));
    }
    let scores = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            utility.evaluate(&subset)
        })
        .collect::<Result<Vec<f64>>>()?;

    // weight(s) = s! (n - s - 1)! / n!
    let fact: Vec<f64> = (0..=n).scan(1.0, |f, i| {
        if i > 0 {
            *f *= i as f64;
        }
        Some(*f)
    }).collect();
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();

    let values = (0..n)
        .map(|k| {
            let bit = 1usize << k;
            (0..scores.len())
                .filter(|m| m & bit == 0)
                .map(|m| weight[m.count_ones() as usize] * (scores[m | bit] - scores[m]))
                .sum()
        })
        .collect();
    let mut dv = DataValues::new(ids.to_vec(), values, Method::ExactShapley)?;
    dv.config_digest = digest_str(&format!("exact-shapley|{}", utility.describe()));
    Ok(dv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyConfig {
    /// Number of sampled permutations.
    pub budget: usize,
    /// A permutation scan stops once the running utility is strictly within
    /// this distance of the full-set utility; 0 disables truncation.
    pub tolerance: f64,
    /// Permutations between the two estimates compared by the convergence diagnostic.
    pub convergence_window: usize,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self {
            budget: 100,
            tolerance: 0.01,
            convergence_window: 10,
        }
    }
}

impl ShapleyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::config("permutation budget must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::config(format!(
                "truncation tolerance must be a nonnegative number, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TmcOutcome {
    pub values: DataValues,
    /// Mean absolute change of the estimates over the last `convergence_window`
    /// permutations, relative to their mean magnitude. `None` when the budget
    /// does not exceed the window.
    pub convergence: Option<f64>,
}

/// Truncated Monte-Carlo Shapley values.
pub fn tmc_shapley(
    utility: &dyn Utility,
    ids: &[String],
    config: &ShapleyConfig,
    seed: u64,
) -> Result<DataValues> {
    Ok(tmc_shapley_with_diagnostics(utility, ids, config, seed)?.values)
}

/// Permutations per parallel block; bounds memory at `BLOCK * n` marginals.
const BLOCK: usize = 64;

pub fn tmc_shapley_with_diagnostics(
    utility: &dyn Utility,
    ids: &[String],
    config: &ShapleyConfig,
    seed: u64,
) -> Result<TmcOutcome> {
    let n = check_players(utility, ids)?;
    config.validate()?;
    let all: Vec<usize> = (0..n).collect();
    let full = utility.evaluate(&all)?;
    let empty = utility.evaluate(&[])?;

    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    let mut earlier: Option<Vec<f64>> = None;
    let checkpoint = config.budget.checked_sub(config.convergence_window).filter(|&c| c > 0);

    for block_start in (0..config.budget).step_by(BLOCK) {
        let block_end = (block_start + BLOCK).min(config.budget);
        let scans = (block_start..block_end)
            .into_par_iter()
            .map(|p| scan_permutation(utility, n, derive_seed(seed, p as u64), full, empty, config.tolerance))
            .collect::<Result<Vec<_>>>()?;
        for (offset, (marginals, evaluated)) in scans.into_iter().enumerate() {
            for k in 0..n {
                sums[k] += marginals[k];
            }
            for k in evaluated {
                counts[k] += 1;
            }
            if Some(block_start + offset + 1) == checkpoint {
                let done = (block_start + offset + 1) as f64;
                earlier = Some(sums.iter().map(|s| s / done).collect());
            }
        }
    }

    let budget = config.budget as f64;
    let values: Vec<f64> = sums.iter().map(|s| s / budget).collect();
    let convergence = earlier.map(|prev| {
        let change = values.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum::<f64>();
        let scale = values.iter().map(|v| v.abs()).sum::<f64>();
        if scale > 0.0 {
            change / scale
        } else {
            change
        }
    });

    let mut dv = DataValues::new(ids.to_vec(), values, Method::TmcShapley)?;
    dv.config_digest = digest_str(&format!(
        "tmc-shapley|{}|{}",
        serde_json::to_string(config).expect("config serializes"),
        utility.describe()
    ));
    dv.seeds = vec![seed];
    dv.sample_counts = Some(counts);
    Ok(TmcOutcome {
        values: dv,
        convergence,
    })
}

/// Marginal contribution of every player along one random permutation, plus
/// the players whose marginal was actually evaluated before truncation.
fn scan_permutation(
    utility: &dyn Utility,
    n: usize,
    seed: u64,
    full: f64,
    empty: f64,
    tolerance: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from(seed));
    let mut marginals = vec![0.0; n];
    let mut evaluated = Vec::with_capacity(n);
    let mut prev = empty;
    for j in 0..n {
        if (full - prev).abs() < tolerance {
            break;
        }
        let score = if j + 1 == n { full } else { utility.evaluate(&perm[..=j])? };
        marginals[perm[j]] = score - prev;
        evaluated.push(perm[j]);
        prev = score;
    }
    Ok((marginals, evaluated))
}
