//! Seeded parallel Monte Carlo over (policy, horizon, run) cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::UcbFamily;
use crate::harness::config::Experiment;
use crate::policies::{episode_seed, run_episode, EpisodeResult, PolicyKind};
use crate::problem::NormParam;
use crate::theory::{regret_bound_leading, BoundFamily};

/// One finished episode together with its cell coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub policy: PolicyKind,
    pub p: NormParam,
    pub horizon: u64,
    pub run: u64,
    pub result: EpisodeResult,
}

/// Aggregate of one (policy, p, T) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub policy: PolicyKind,
    pub p: NormParam,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub runs: u64,
    pub mean_regret: f64,
    /// Sample standard deviation over `sqrt(runs)`; zero for a single run.
    pub std_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub min_regret: f64,
    pub max_regret: f64,
    pub mean_achieved: f64,
    /// Leading-term Variance-UCB regret bound for the instance family at this `(p, T)`.
    pub vucb_bound_leading: Option<f64>,
}

/// Mean and standard error of `xs` (Welford).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m: crate::estimation::OnlineMoments = xs.iter().copied().collect();
    let se = m
        .sample_std()
        .map(|s| s / (xs.len() as f64).sqrt())
        .unwrap_or(0.0);
    (m.mean(), se)
}

impl RegretSummary {
    fn from_records(records: &[EpisodeRecord], bound: Option<f64>) -> Self {
        let first = &records[0];
        let regrets: Vec<f64> = records.iter().map(|r| r.result.regret).collect();
        let achieved: Vec<f64> = records.iter().map(|r| r.result.achieved).collect();
        let (mean, se) = mean_and_se(&regrets);
        Self {
            policy: first.policy,
            p: first.p,
            horizon: first.horizon,
            runs: records.len() as u64,
            mean_regret: mean,
            std_error: se,
            ci95_low: mean - 1.96 * se,
            ci95_high: mean + 1.96 * se,
            min_regret: regrets.iter().cloned().fold(f64::INFINITY, f64::min),
            max_regret: regrets.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean_achieved: mean_and_se(&achieved).0,
            vucb_bound_leading: bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutput {
    /// Ordered by policy, then horizon, then run, as listed in the config.
    pub episodes: Vec<EpisodeRecord>,
    pub summaries: Vec<RegretSummary>,
}

fn bound_family(ucb: &UcbFamily) -> BoundFamily {
    match ucb {
        UcbFamily::Gaussian => BoundFamily::Gaussian,
        UcbFamily::Exponential => BoundFamily::Exponential,
        UcbFamily::SubGaussian { .. } => BoundFamily::SubGaussian,
    }
}

/// Run every episode of `exp` on a pool of `workers` threads.
///
/// Episode `run` uses seed `episode_seed(master, run)` under every policy
/// and horizon, so cells share random numbers. Results are merged in task
/// order, which makes the output independent of `workers`.
pub fn run_monte_carlo(exp: &Experiment, workers: usize) -> Result<MonteCarloOutput> {
    let cfg = &exp.config;
    let tasks: Vec<(PolicyKind, u64, u64)> = cfg
        .policies
        .iter()
        .flat_map(|&k| {
            cfg.horizons
                .iter()
                .flat_map(move |&t| (0..cfg.runs).map(move |r| (k, t, r)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let episodes: Vec<EpisodeRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(kind, t, run)| {
                let seed = episode_seed(cfg.seed, run);
                let result = run_episode(&exp.policy(kind), &exp.instance, cfg.p, t, seed)?;
                Ok(EpisodeRecord {
                    policy: kind,
                    p: cfg.p,
                    horizon: t,
                    run,
                    result,
                })
            })
            .collect::<Result<_>>()
    })?;

    let sigma = exp.sigmas();
    let family = bound_family(&exp.ucb);
    let c_hat = cfg.c_hat.as_deref();
    let summaries = episodes
        .chunks(cfg.runs as usize)
        .map(|cell| {
            let bound = regret_bound_leading(family, &sigma, c_hat, None, cfg.p, cell[0].horizon as f64).ok();
            RegretSummary::from_records(cell, bound)
        })
        .collect();
    Ok(MonteCarloOutput {
        episodes,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::problem::Family;

    fn config(policies: Vec<PolicyKind>, horizons: Vec<u64>, runs: u64) -> Experiment {
        ExperimentConfig {
            schema_version: 1,
            instance: vec![
                Family::Gaussian { mean: 0.0, sd: 1.0 },
                Family::Gaussian { mean: 1.0, sd: 2.0 },
            ],
            p: NormParam::INFINITE,
            horizons,
            policies,
            runs,
            seed: 11,
            c_hat: None,
            procedure: None,
            warmup: None,
            out_dir: None,
            workers: None,
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn deterministic_baselines() {
        let exp = config(vec![PolicyKind::Oracle, PolicyKind::Uniform], vec![10], 5);
        let out = run_monte_carlo(&exp, 2).unwrap();
        assert_eq!(out.summaries.len(), 2);
        let oracle = &out.summaries[0];
        assert_eq!((oracle.mean_regret, oracle.std_error), (0.0, 0.0));
        let uniform = &out.summaries[1];
        assert!((uniform.mean_regret - 0.6).abs() < 1e-12);
        assert!(uniform.std_error < 1e-15);
        assert_eq!(uniform.runs, 5);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let exp = config(vec![PolicyKind::Vucb], vec![50, 200], 12);
        let a = run_monte_carlo(&exp, 1).unwrap();
        let b = run_monte_carlo(&exp, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summary_matches_episodes() {
        let exp = config(vec![PolicyKind::Vucb], vec![100], 20);
        let out = run_monte_carlo(&exp, 3).unwrap();
        let s = &out.summaries[0];
        let mean = out.episodes.iter().map(|e| e.result.regret).sum::<f64>() / 20.0;
        assert!((s.mean_regret - mean).abs() < 1e-12);
        assert!(s.mean_regret >= 0.0);
        assert!(s.min_regret <= s.mean_regret && s.mean_regret <= s.max_regret);
        let bound = s.vucb_bound_leading.unwrap();
        let direct = regret_bound_leading(BoundFamily::Gaussian, &[1.0, 2.0], None, None, NormParam::INFINITE, 100.0).unwrap();
        assert_eq!(bound, direct);
    }

    #[test]
    fn common_seeds_across_cells() {
        let exp = config(vec![PolicyKind::Vucb, PolicyKind::Uniform], vec![20], 3);
        let out = run_monte_carlo(&exp, 1).unwrap();
        let seeds: Vec<u64> = out.episodes.iter().map(|e| e.result.seed).collect();
        assert_eq!(seeds[..3], seeds[3..]);
        assert_eq!(seeds[1], episode_seed(11, 1));
    }

    #[test]
    fn standard_error_formula() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_and_se(&[3.0]), (3.0, 0.0));
    }
}
