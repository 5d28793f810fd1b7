//! Problem primitives: norm parameters, group distributions, instances,
//! allocation vectors and the objective `R_p`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The objective's norm parameter `p ∈ [1, ∞]` together with the exponent
/// `q = 2p/(p+1)` that drives both the optimal allocation and the selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParam {
    p: Option<f64>,
    q: f64,
}

impl NormParam {
    pub const INFINITE: NormParam = NormParam { p: None, q: 2.0 };

    pub fn finite(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "norm parameter p must be >= 1, got {p}"
            )));
        }
        Ok(Self {
            p: Some(p),
            q: 2.0 * p / (p + 1.0),
        })
    }

    /// `2p/(p+1)`, or 2 for the infinite norm.
    pub fn exponent(&self) -> f64 {
        self.q
    }

    /// `p` as a float; `f64::INFINITY` for the infinite norm.
    pub fn p(&self) -> f64 {
        self.p.unwrap_or(f64::INFINITY)
    }

    pub fn is_infinite(&self) -> bool {
        self.p.is_none()
    }
}

impl fmt::Display for NormParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.p {
            None => f.write_str("inf"),
            Some(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for NormParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::INFINITE),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse p from {s:?}")))?;
                if p.is_infinite() && p > 0.0 {
                    Ok(Self::INFINITE)
                } else {
                    Self::finite(p)
                }
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NormRepr {
    Number(f64),
    Text(String),
}

impl Serialize for NormParam {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.p {
            None => NormRepr::Text("inf".into()).serialize(s),
            Some(p) => NormRepr::Number(p).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for NormParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match NormRepr::deserialize(d)? {
            NormRepr::Number(p) => NormParam::finite(p).map_err(serde::de::Error::custom),
            NormRepr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parametric family of one group's data distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    /// Two-point law on `{lower, upper}` with the given mean. Bounded, hence sub-Gaussian.
    ShiftedBounded { lower: f64, upper: f64, mean: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Exponential { .. } => "exponential",
            Family::ShiftedBounded { .. } => "shifted_bounded",
        }
    }
}

/// A group's distribution with its derived mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct GroupDistribution {
    family: Family,
    mean: f64,
    sd: f64,
}

impl GroupDistribution {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mean, sd })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn shifted_bounded(lower: f64, upper: f64, mean: f64) -> Result<Self> {
        Self::new(Family::ShiftedBounded { lower, upper, mean })
    }

    pub fn new(family: Family) -> Result<Self> {
        let (mean, sd) = match family {
            Family::Gaussian { mean, sd } => {
                if !(sd.is_finite() && sd > 0.0) || !mean.is_finite() {
                    return Err(Error::DegenerateGroup(format!(
                        "gaussian needs finite mean and sd > 0, got mean={mean} sd={sd}"
                    )));
                }
                (mean, sd)
            }
            Family::Exponential { rate } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(Error::DegenerateGroup(format!(
                        "exponential needs rate > 0, got {rate}"
                    )));
                }
                (1.0 / rate, 1.0 / rate)
            }
            Family::ShiftedBounded { lower, upper, mean } => {
                if !(lower.is_finite() && upper.is_finite() && lower < mean && mean < upper) {
                    return Err(Error::DegenerateGroup(format!(
                        "shifted-bounded needs lower < mean < upper, got [{lower}, {upper}] mean={mean}"
                    )));
                }
                let pi = (mean - lower) / (upper - lower);
                (mean, (upper - lower) * (pi * (1.0 - pi)).sqrt())
            }
        };
        Ok(Self { family, mean, sd })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            Family::Gaussian { mean, sd } => Normal::new(mean, sd)
                .expect("validated at construction")
                .sample(rng),
            Family::Exponential { rate } => Exp::new(rate)
                .expect("validated at construction")
                .sample(rng),
            Family::ShiftedBounded { lower, upper, mean } => {
                let pi = (mean - lower) / (upper - lower);
                if rng.random::<f64>() < pi {
                    upper
                } else {
                    lower
                }
            }
        }
    }
}

impl TryFrom<Family> for GroupDistribution {
    type Error = Error;

    fn try_from(f: Family) -> Result<Self> {
        Self::new(f)
    }
}

impl From<GroupDistribution> for Family {
    fn from(g: GroupDistribution) -> Self {
        g.family
    }
}

/// `G >= 2` group distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub groups: Vec<GroupDistribution>,
}

impl Instance {
    pub fn new(groups: Vec<GroupDistribution>) -> Result<Self> {
        validate_instance(Self { groups })
    }

    /// Gaussian instance with zero means.
    pub fn gaussian(sigma: &[f64]) -> Result<Self> {
        let groups = sigma
            .iter()
            .map(|&s| GroupDistribution::gaussian(0.0, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn exponential(rates: &[f64]) -> Result<Self> {
        let groups = rates
            .iter()
            .map(|&r| GroupDistribution::exponential(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.sd()).collect()
    }
}

pub fn validate_instance(inst: Instance) -> Result<Instance> {
    if inst.groups.len() < 2 {
        return Err(Error::DegenerateGroup(format!(
            "need at least 2 groups, got {}",
            inst.groups.len()
        )));
    }
    if let Some((g, d)) = inst
        .groups
        .iter()
        .enumerate()
        .find(|(_, d)| !(d.sd() > 0.0))
    {
        return Err(Error::DegenerateGroup(format!(
            "group {g} has non-positive sd {}",
            d.sd()
        )));
    }
    Ok(inst)
}

/// Per-group sample counts summing to the horizon `T`.
///
/// Realized policies produce integer counts; the complete-information
/// benchmark is a relaxed (real-valued) vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector {
    counts: Vec<f64>,
    horizon: f64,
    relaxed: bool,
}

impl CountVector {
    pub fn integer(counts: &[u64]) -> Self {
        let horizon = counts.iter().sum::<u64>() as f64;
        Self {
            counts: counts.iter().map(|&c| c as f64).collect(),
            horizon,
            relaxed: false,
        }
    }

    pub fn relaxed(counts: Vec<f64>, horizon: f64) -> Result<Self> {
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter(
                "relaxed counts must be finite and non-negative".into(),
            ));
        }
        let total: f64 = counts.iter().sum();
        if (total - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "counts sum to {total}, expected horizon {horizon}"
            )));
        }
        Ok(Self {
            counts,
            horizon,
            relaxed: true,
        })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// `2p/(p+1)`; 2 for the infinite norm.
pub fn exponent(p: NormParam) -> f64 {
    p.exponent()
}

/// `‖(sigma_g^2 / n_g)_g‖_p`.
pub fn objective(counts: &[f64], sigma: &[f64], p: NormParam) -> Result<f64> {
    if counts.len() != sigma.len() {
        return Err(Error::InvalidParameter(format!(
            "{} counts for {} groups",
            counts.len(),
            sigma.len()
        )));
    }
    if let Some(g) = counts.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::ZeroCount { group: g });
    }
    let v: Vec<f64> = sigma
        .iter()
        .zip(counts)
        .map(|(s, n)| s * s / n)
        .collect();
    Ok(p_norm(&v, p))
}

/// Objective evaluated on a [`CountVector`].
pub fn objective_rp(n: &CountVector, sigma: &[f64], p: NormParam) -> Result<f64> {
    objective(n.counts(), sigma, p)
}

/// p-norm of a non-negative vector, scaled by its max so large `p` cannot overflow.
pub(crate) fn p_norm(v: &[f64], p: NormParam) -> f64 {
    let max = v.iter().cloned().fold(0.0_f64, f64::max);
    match p.p {
        None => max,
        Some(_) if max == 0.0 => 0.0,
        Some(p) if p == 1.0 => v.iter().sum(),
        Some(p) => max * v.iter().map(|x| (x / max).powf(p)).sum::<f64>().powf(1.0 / p),
    }
}
