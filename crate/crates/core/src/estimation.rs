//! Streaming moments, upper confidence bounds on group standard deviations,
//! and the admissible widths that bound the relative UCB error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Family, Instance};

/// Single-pass count / mean / sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OnlineMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl OnlineMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, y: f64) {
        self.count += 1;
        let delta = y - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (y - self.mean);
    }

    /// Value-style update: returns the moments after observing `y`.
    pub fn update(mut self, y: f64) -> Self {
        self.push(y);
        self
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Unbiased variance `m2 / (n - 1)`.
    pub fn variance(&self) -> Result<f64> {
        if self.count < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                have: self.count,
            });
        }
        Ok(self.m2 / (self.count - 1) as f64)
    }

    pub fn sample_std(&self) -> Result<f64> {
        self.variance().map(f64::sqrt)
    }
}

impl FromIterator<f64> for OnlineMoments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Self::new();
        for y in iter {
            m.push(y);
        }
        m
    }
}

/// Which concentration argument backs the UCB on `sigma_g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UcbFamily {
    /// `sigma_hat + c_hat_g · sqrt(3 log T / n)`.
    SubGaussian { c_hat: Vec<f64> },
    /// `sigma_hat · (1 + sqrt(3 log T / n) + 3 log T / n)`.
    Gaussian,
    /// `mu_hat · (1 + sqrt(3 log T / n))`; the mean of an exponential equals its sd.
    Exponential,
}

impl UcbFamily {
    pub fn name(&self) -> &'static str {
        match self {
            UcbFamily::SubGaussian { .. } => "sub-gaussian",
            UcbFamily::Gaussian => "gaussian",
            UcbFamily::Exponential => "exponential",
        }
    }

    /// The tightest family covering every group of `inst`: Gaussian or
    /// exponential when the instance is homogeneous in that family,
    /// sub-Gaussian with the supplied `c_hat` otherwise.
    pub fn infer(inst: &Instance, c_hat: Option<&[f64]>) -> Result<Self> {
        let all = |f: fn(&Family) -> bool| inst.groups.iter().all(|g| f(&g.family()));
        if all(|f| matches!(f, Family::Gaussian { .. })) {
            Ok(UcbFamily::Gaussian)
        } else if all(|f| matches!(f, Family::Exponential { .. })) {
            Ok(UcbFamily::Exponential)
        } else {
            let c = c_hat.ok_or(Error::MissingParameter("c_hat"))?;
            if c.len() != inst.len() {
                return Err(Error::InvalidParameter(format!(
                    "c_hat has {} entries for {} groups",
                    c.len(),
                    inst.len()
                )));
            }
            Ok(UcbFamily::SubGaussian { c_hat: c.to_vec() })
        }
    }
}

/// A UCB procedure tied to a horizon `T` (the confidence level is `T^-3`).
#[derive(Debug, Clone, PartialEq)]
pub struct UcbProcedure {
    family: UcbFamily,
    horizon: u64,
    log_t3: f64,
}

impl UcbProcedure {
    pub fn new(family: UcbFamily, horizon: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidParameter(format!(
                "UCB horizon must be >= 2, got {horizon}"
            )));
        }
        if let UcbFamily::SubGaussian { c_hat } = &family {
            if c_hat.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(Error::InvalidParameter(
                    "every c_hat must be positive".into(),
                ));
            }
        }
        Ok(Self {
            family,
            horizon,
            log_t3: 3.0 * (horizon as f64).ln(),
        })
    }

    pub fn family(&self) -> &UcbFamily {
        &self.family
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Fewest samples for which the UCB is defined.
    pub fn min_count(&self) -> u64 {
        match self.family {
            UcbFamily::Exponential => 1,
            _ => 2,
        }
    }

    pub fn ucb_value(&self, g: usize, m: &OnlineMoments) -> Result<f64> {
        if m.count() < self.min_count() {
            return Err(Error::InsufficientSamples {
                needed: self.min_count(),
                have: m.count(),
            });
        }
        let ratio = self.log_t3 / m.count() as f64;
        Ok(match &self.family {
            UcbFamily::SubGaussian { c_hat } => {
                let c = *c_hat.get(g).ok_or(Error::MissingParameter("c_hat"))?;
                m.sample_std()? + c * ratio.sqrt()
            }
            UcbFamily::Gaussian => m.sample_std()? * (1.0 + ratio.sqrt() + ratio),
            UcbFamily::Exponential => m.mean() * (1.0 + ratio.sqrt()),
        })
    }
}

/// Deterministic width envelope `w_g(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum WidthFamily {
    /// `2 c_hat_g / sigma_g · sqrt(3 log T / x)`.
    SubGaussian { c_hat: Vec<f64>, sigma: Vec<f64> },
    /// `sqrt(3 log T / x) + 3 log T / x`.
    Gaussian,
    /// `sqrt(6 log T / x)`: the exponential-mean deviation radius at confidence `T^-3`.
    Exponential,
    Zero,
    /// `scale · x^-power`.
    Custom { scale: f64, power: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleWidth {
    family: WidthFamily,
    log_t: f64,
    multiplier: f64,
}

impl AdmissibleWidth {
    pub fn new(family: WidthFamily, horizon: f64) -> Result<Self> {
        if !(horizon > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "width horizon must exceed 1, got {horizon}"
            )));
        }
        match &family {
            WidthFamily::SubGaussian { c_hat, sigma } => {
                if c_hat.len() != sigma.len() {
                    return Err(Error::InvalidParameter(
                        "c_hat and sigma lengths differ".into(),
                    ));
                }
                if c_hat.iter().chain(sigma).any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(Error::InvalidParameter(
                        "c_hat and sigma must be positive".into(),
                    ));
                }
            }
            WidthFamily::Custom { scale, power } => {
                if !(*scale >= 0.0 && *power > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "custom width needs scale >= 0 and power > 0, got {scale}, {power}"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self {
            family,
            log_t: horizon.ln(),
            multiplier: 1.0,
        })
    }

    pub fn zero() -> Self {
        Self {
            family: WidthFamily::Zero,
            log_t: 0.0,
            multiplier: 1.0,
        }
    }

    pub fn family(&self) -> &WidthFamily {
        &self.family
    }

    /// The same envelope multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            multiplier: self.multiplier * c,
            ..self.clone()
        }
    }

    /// `w_g(x)`; `+∞` for `x <= 0`.
    pub fn eval(&self, g: usize, x: f64) -> f64 {
        if !(x > 0.0) {
            return f64::INFINITY;
        }
        let w = match &self.family {
            WidthFamily::SubGaussian { c_hat, sigma } => {
                2.0 * c_hat[g] / sigma[g] * (3.0 * self.log_t / x).sqrt()
            }
            WidthFamily::Gaussian => {
                let r = 3.0 * self.log_t / x;
                r.sqrt() + r
            }
            WidthFamily::Exponential => (6.0 * self.log_t / x).sqrt(),
            WidthFamily::Zero => return 0.0,
            WidthFamily::Custom { scale, power } => scale * x.powf(-power),
        };
        self.multiplier * w
    }
}

/// Distribution family for [`coverage_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageFamily {
    /// Event `|s^2/sigma^2 - 1| <= sqrt(2L/n) + 2L/n` for the unbiased sample variance.
    Gaussian,
    /// Event `|mu_hat/sigma - 1| <= sqrt(2L/n)` for the sample mean.
    Exponential,
}

/// Monte Carlo frequency of the deviation event at confidence `eps`
/// (`L = ln(1/eps)`), over `trials` independent samples of size `n`.
pub fn coverage_probe(
    family: CoverageFamily,
    n: usize,
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if n < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            have: n as u64,
        });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be in (0, 1], got {eps}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let l = (1.0 / eps).ln();
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(1.0).expect("unit rate");
    let mut hits = 0usize;
    for _ in 0..trials {
        let held = match family {
            CoverageFamily::Gaussian => {
                let m: OnlineMoments = (0..n)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let dev = (m.variance()? - 1.0).abs();
                dev <= (2.0 * l / nf).sqrt() + 2.0 * l / nf
            }
            CoverageFamily::Exponential => {
                let mean = (0..n).map(|_| exp.sample(&mut rng)).sum::<f64>() / nf;
                (mean - 1.0).abs() <= (2.0 * l / nf).sqrt()
            }
        };
        if held {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
