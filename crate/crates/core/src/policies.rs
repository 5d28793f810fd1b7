//! Sequential sampling policies and the single-episode runner.
//!
//! Every policy picks one group per step. Variance-UCB scores group `g` by
//! `UCB_g^q / n_g` and pulls the argmax. Groups below the warm-up count
//! score `+∞`, so the first `warmup · G` steps are a deterministic
//! round-robin. Ties always go to the lowest index.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{OnlineMoments, UcbFamily, UcbProcedure};
use crate::oracle::{normalized_regret, optimal_allocation};
use crate::problem::{objective, CountVector, Instance, NormParam};

/// Fewest samples for which every UCB procedure is defined.
pub const MIN_WARMUP: u64 = 2;

/// Default samples per group before the UCB rule takes over.
pub const DEFAULT_WARMUP: u64 = 5;

const TIE_EPS: f64 = 1e-12;

/// Policy names as they appear in configs and output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Vucb,
    Uniform,
    Oracle,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Vucb => "vucb",
            PolicyKind::Uniform => "uniform",
            PolicyKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vucb" => Ok(PolicyKind::Vucb),
            "uniform" => Ok(PolicyKind::Uniform),
            "oracle" => Ok(PolicyKind::Oracle),
            other => Err(Error::InvalidParameter(format!("unknown policy {other:?}"))),
        }
    }
}

/// A fully specified policy.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Vucb { family: UcbFamily, warmup: u64 },
    Uniform,
    Oracle,
}

impl Policy {
    /// Variance-UCB with the default warm-up.
    pub fn vucb(family: UcbFamily) -> Self {
        Policy::Vucb {
            family,
            warmup: DEFAULT_WARMUP,
        }
    }

    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Vucb { .. } => PolicyKind::Vucb,
            Policy::Uniform => PolicyKind::Uniform,
            Policy::Oracle => PolicyKind::Oracle,
        }
    }
}

/// Index of the largest `ucb_g^q / n_g`, lowest index on ties.
///
/// This is the rule once every group is past warm-up; an empty group scores `+∞`.
pub fn argmax_ratio(ucb: &[f64], counts: &[u64], q: f64) -> usize {
    let scores: Vec<f64> = ucb
        .iter()
        .zip(counts)
        .map(|(&u, &n)| ratio_score(u, n, q))
        .collect();
    argmax(&scores)
}

fn ratio_score(ucb: f64, n: u64, q: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let u = if q == 2.0 { ucb * ucb } else { ucb.powf(q) };
    u / n as f64
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (g, &s) in scores.iter().enumerate().skip(1) {
        // Strictly greater keeps the lowest index on exact ties.
        if s > scores[best] {
            best = g;
        }
    }
    best
}

/// Mutable state of one episode: per-group moments and the clock.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    moments: Vec<OnlineMoments>,
    t: u64,
    horizon: u64,
    p: NormParam,
}

impl PolicyState {
    pub fn new(groups: usize, horizon: u64, p: NormParam) -> Self {
        Self {
            moments: vec![OnlineMoments::new(); groups],
            t: 0,
            horizon,
            p,
        }
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn p(&self) -> NormParam {
        self.p
    }

    pub fn moments(&self) -> &[OnlineMoments] {
        &self.moments
    }

    pub fn counts(&self) -> Vec<u64> {
        self.moments.iter().map(OnlineMoments::count).collect()
    }

    pub fn means(&self) -> Vec<f64> {
        self.moments.iter().map(OnlineMoments::mean).collect()
    }

    /// Record observation `y` from group `g`.
    pub fn step(&mut self, g: usize, y: f64) -> Result<()> {
        if self.t >= self.horizon {
            return Err(Error::HorizonExceeded(self.horizon));
        }
        let m = self
            .moments
            .get_mut(g)
            .ok_or_else(|| Error::InvalidParameter(format!("no group {g}")))?;
        m.push(y);
        self.t += 1;
        Ok(())
    }

    /// Variance-UCB choice under `proc`, sampling each group `warmup` times first.
    pub fn vucb_select(&self, proc: &UcbProcedure, warmup: u64) -> Result<usize> {
        let q = self.p.exponent();
        let scores = self
            .moments
            .iter()
            .enumerate()
            .map(|(g, m)| vucb_score(proc, g, m, q, warmup))
            .collect::<Result<Vec<_>>>()?;
        Ok(argmax(&scores))
    }

    /// Round-robin: `t mod G`.
    pub fn uniform_select(&self) -> usize {
        (self.t % self.moments.len() as u64) as usize
    }

    /// Most under-sampled group relative to the target `t · lambda`.
    pub fn oracle_select(&self, lambda: &[f64]) -> usize {
        let t = self.t as f64;
        let mut best = 0;
        let mut best_gap = f64::INFINITY;
        for (g, (m, l)) in self.moments.iter().zip(lambda).enumerate() {
            let gap = m.count() as f64 - t * l;
            if gap < best_gap - TIE_EPS {
                best = g;
                best_gap = gap;
            }
        }
        best
    }
}

fn vucb_score(proc: &UcbProcedure, g: usize, m: &OnlineMoments, q: f64, warmup: u64) -> Result<f64> {
    if m.count() < warmup {
        return Ok(f64::INFINITY);
    }
    Ok(ratio_score(proc.ucb_value(g, m)?, m.count(), q))
}

/// Outcome of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    /// Achieved objective under the true standard deviations.
    pub achieved: f64,
    pub regret: f64,
    pub seed: u64,
}

impl EpisodeResult {
    pub fn count_vector(&self) -> CountVector {
        CountVector::integer(&self.counts)
    }
}

/// Run `policy` on `inst` for `horizon` steps with a ChaCha8 stream seeded by `seed`.
pub fn run_episode(
    policy: &Policy,
    inst: &Instance,
    p: NormParam,
    horizon: u64,
    seed: u64,
) -> Result<EpisodeResult> {
    let g_count = inst.len();
    let sigma = inst.sigmas();
    let opt = optimal_allocation(&sigma, p, horizon as f64)?;
    let mut state = PolicyState::new(g_count, horizon, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    match policy {
        Policy::Vucb { family, warmup } => {
            let warmup = *warmup;
            if warmup < MIN_WARMUP {
                return Err(Error::InvalidParameter(format!(
                    "warm-up must be at least {MIN_WARMUP}, got {warmup}"
                )));
            }
            let needed = warmup * g_count as u64;
            if horizon < needed {
                return Err(Error::HorizonTooSmall { horizon, needed });
            }
            let proc = UcbProcedure::new(family.clone(), horizon)?;
            let q = p.exponent();
            // Only the pulled group's score moves, so cache the rest.
            let mut scores = vec![f64::INFINITY; g_count];
            for _ in 0..horizon {
                let g = argmax(&scores);
                let y = inst.groups[g].sample(&mut rng);
                state.step(g, y)?;
                scores[g] = vucb_score(&proc, g, &state.moments[g], q, warmup)?;
            }
        }
        Policy::Uniform => {
            for _ in 0..horizon {
                let g = state.uniform_select();
                let y = inst.groups[g].sample(&mut rng);
                state.step(g, y)?;
            }
        }
        Policy::Oracle => {
            for _ in 0..horizon {
                let g = state.oracle_select(&opt.lambda_star);
                let y = inst.groups[g].sample(&mut rng);
                state.step(g, y)?;
            }
        }
    }

    let counts = state.counts();
    let n: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let achieved = objective(&n, &sigma, p)?;
    Ok(EpisodeResult {
        means: state.means(),
        counts,
        achieved,
        regret: normalized_regret(achieved, opt.r_star)?,
        seed,
    })
}

/// SplitMix64 output for state `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of episode `run` under `master`.
pub fn episode_seed(master: u64, run: u64) -> u64 {
    splitmix64(master.wrapping_add(run.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}
