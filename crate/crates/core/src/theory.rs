//! Analytical side of Variance-UCB as plain numerics.
//!
//! [`TheoryInputs`] bundles `(sigma, width, p, T)` and evaluates the decision
//! error, the potential `F_T`, its fixed point, and the per-group lower
//! bound on the relative distance. Free functions cover leading-term regret
//! bounds, sample-size inversion and the second-order Taylor check on `R_p`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{AdmissibleWidth, WidthFamily};
use crate::oracle::optimal_allocation;
use crate::problem::{CountVector, NormParam};

/// `delta_g = 1 - n_g / n*_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeDistance {
    pub delta: Vec<f64>,
    pub delta_max: f64,
}

pub fn relative_distance(n: &CountVector, n_star: &CountVector) -> Result<RelativeDistance> {
    if n.len() != n_star.len() {
        return Err(Error::InvalidParameter(format!(
            "{} counts against {} targets",
            n.len(),
            n_star.len()
        )));
    }
    if let Some(g) = n_star.counts().iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateTarget(g));
    }
    let delta: Vec<f64> = n
        .counts()
        .iter()
        .zip(n_star.counts())
        .map(|(a, b)| 1.0 - a / b)
        .collect();
    let delta_max = delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(RelativeDistance { delta, delta_max })
}

/// First and second moments of the width-induced allocation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionError {
    pub w1: f64,
    pub w2: f64,
    pub w_bar: f64,
    pub p: NormParam,
}

/// Iterates of `f <- F_T(f)` starting at the initial rate.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointTrace {
    pub f0: f64,
    /// `f0, F(f0), F(F(f0)), ...`
    pub iterates: Vec<f64>,
    pub f_inf: f64,
    pub converged: bool,
}

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 100_000;

/// Inputs shared by the potential-function machinery.
#[derive(Debug, Clone)]
pub struct TheoryInputs {
    lambda: Vec<f64>,
    n_star: Vec<f64>,
    width: AdmissibleWidth,
    p: NormParam,
    horizon: f64,
}

impl TheoryInputs {
    pub fn new(sigma: &[f64], width: AdmissibleWidth, p: NormParam, horizon: f64) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::DegenerateGroup("no groups".into()));
        }
        if !(horizon > sigma.len() as f64) {
            return Err(Error::HorizonTooSmall {
                horizon: horizon.max(0.0) as u64,
                needed: sigma.len() as u64 + 1,
            });
        }
        let opt = optimal_allocation(sigma, p, horizon)?;
        Ok(Self {
            n_star: opt.n_star.counts().to_vec(),
            lambda: opt.lambda_star,
            width,
            p,
            horizon,
        })
    }

    pub fn lambda_star(&self) -> &[f64] {
        &self.lambda
    }

    pub fn n_star(&self) -> &[f64] {
        &self.n_star
    }

    fn groups(&self) -> f64 {
        self.lambda.len() as f64
    }

    fn pow_q(&self, x: f64) -> f64 {
        let q = self.p.exponent();
        if q == 2.0 {
            x * x
        } else {
            x.powf(q)
        }
    }

    /// `(1 + w_g(n*_g - 1))^q - 1`, or `WidthInfinite` when `n*_g <= 1`.
    fn excess(&self, g: usize) -> Result<f64> {
        let arg = self.n_star[g] - 1.0;
        if !(arg > 0.0) {
            return Err(Error::WidthInfinite { group: g, arg });
        }
        Ok(self.pow_q(1.0 + self.width.eval(g, arg)) - 1.0)
    }

    pub fn decision_error(&self) -> Result<DecisionError> {
        let mut w1 = 0.0;
        let mut second = 0.0;
        for (g, l) in self.lambda.iter().enumerate() {
            let a = self.excess(g)?;
            w1 += l * a;
            second += l * a * a;
        }
        let w2 = second.sqrt();
        let w_bar = if self.p.is_infinite() {
            w1
        } else {
            w1.hypot(w2)
        };
        Ok(DecisionError {
            w1,
            w2,
            w_bar,
            p: self.p,
        })
    }

    /// `F_T(u) = 1 - (1 - G/T) / Σ_h λ*_h (1 + w_h(λ*_h T (1 - u) - 1))^q`.
    ///
    /// Any non-positive width argument means an infinite width and `F = 1`.
    pub fn potential(&self, u: f64) -> f64 {
        let mut denom = 0.0;
        for (g, l) in self.lambda.iter().enumerate() {
            let arg = l * self.horizon * (1.0 - u) - 1.0;
            let w = self.width.eval(g, arg);
            if !w.is_finite() {
                return 1.0;
            }
            denom += l * self.pow_q(1.0 + w);
        }
        1.0 - (1.0 - self.groups() / self.horizon) / denom
    }

    /// `f0 = 1 - (1/2) / (1 + max_h w_h(λ*_h T / 2))^q`.
    pub fn initial_rate(&self) -> f64 {
        let w_max = self
            .lambda
            .iter()
            .enumerate()
            .map(|(g, l)| self.width.eval(g, l * self.horizon / 2.0))
            .fold(0.0, f64::max);
        1.0 - 0.5 / self.pow_q(1.0 + w_max)
    }

    pub fn fixed_point(&self, tol: f64, max_iter: usize) -> Result<FixedPointTrace> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
        }
        let f0 = self.initial_rate();
        let mut iterates = vec![f0];
        let mut f = f0;
        for _ in 0..max_iter {
            let next = self.potential(f);
            iterates.push(next);
            let gap = (next - f).abs();
            f = next;
            if gap < tol {
                return Ok(FixedPointTrace {
                    f0,
                    iterates,
                    f_inf: f,
                    converged: true,
                });
            }
        }
        Err(Error::NotConverged(Box::new(FixedPointTrace {
            f0,
            iterates,
            f_inf: f,
            converged: false,
        })))
    }

    /// `a_g = -[1/n*_g + ((1 + w_g(n*_g - 1))^q - 1)]`; `-∞` where `n*_g <= 1`.
    pub fn delta_lower_bound(&self) -> Vec<f64> {
        (0..self.lambda.len())
            .map(|g| match self.excess(g) {
                Ok(a) => -(1.0 / self.n_star[g] + a),
                Err(_) => f64::NEG_INFINITY,
            })
            .collect()
    }
}

/// Family selector for leading-term regret bounds and theory widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundFamily {
    SubGaussian,
    Gaussian,
    Exponential,
    BasSubGaussian,
    BasGaussian,
}

impl BoundFamily {
    pub fn name(self) -> &'static str {
        match self {
            BoundFamily::SubGaussian => "sub-gaussian",
            BoundFamily::Gaussian => "gaussian",
            BoundFamily::Exponential => "exponential",
            BoundFamily::BasSubGaussian => "bas-sub-gaussian",
            BoundFamily::BasGaussian => "bas-gaussian",
        }
    }
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "sub-gaussian" | "subgaussian" => BoundFamily::SubGaussian,
            "gaussian" => BoundFamily::Gaussian,
            "exponential" => BoundFamily::Exponential,
            "bas-sub-gaussian" | "bas-subgaussian" => BoundFamily::BasSubGaussian,
            "bas-gaussian" => BoundFamily::BasGaussian,
            other => {
                return Err(Error::InvalidParameter(format!("unknown bound family {other:?}")))
            }
        })
    }
}

/// Width envelope used by the Variance-UCB analysis for `family`.
pub fn width_for(
    family: BoundFamily,
    sigma: &[f64],
    c_hat: Option<&[f64]>,
    horizon: f64,
) -> Result<AdmissibleWidth> {
    let wf = match family {
        BoundFamily::Gaussian => WidthFamily::Gaussian,
        BoundFamily::Exponential => WidthFamily::Exponential,
        BoundFamily::SubGaussian => WidthFamily::SubGaussian {
            c_hat: c_hat.ok_or(Error::MissingParameter("c_hat"))?.to_vec(),
            sigma: sigma.to_vec(),
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other} has no Variance-UCB width"
            )))
        }
    };
    AdmissibleWidth::new(wf, horizon)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Leading term of the normalized-regret bound at horizon `T`, without the `1 + o(1)` factor.
///
/// `c_hat` is required for the sub-Gaussian families. `sigma_hat_total` is
/// the B-AS upper bound on `‖sigma‖_2^2` and defaults to the exact value.
pub fn regret_bound_leading(
    family: BoundFamily,
    sigma: &[f64],
    c_hat: Option<&[f64]>,
    sigma_hat_total: Option<f64>,
    p: NormParam,
    horizon: f64,
) -> Result<f64> {
    if sigma.is_empty() || sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::DegenerateGroup("sigma must be non-empty and positive".into()));
    }
    if !(horizon > 1.0) {
        return Err(Error::InvalidParameter(format!("horizon must exceed 1, got {horizon}")));
    }
    let g = sigma.len() as f64;
    let log_t = horizon.ln();
    let need_c = || -> Result<&[f64]> {
        let c = c_hat.ok_or(Error::MissingParameter("c_hat"))?;
        if c.len() != sigma.len() {
            return Err(Error::InvalidParameter(format!(
                "c_hat has {} entries for {} groups",
                c.len(),
                sigma.len()
            )));
        }
        Ok(c)
    };
    let s2 = norm2(sigma);
    Ok(match (family, p.is_infinite()) {
        (BoundFamily::Gaussian | BoundFamily::Exponential, true) => {
            let s1: f64 = sigma.iter().sum();
            2.0 * 3f64.sqrt() * (s1 / s2) * (log_t / horizon).sqrt()
        }
        (BoundFamily::SubGaussian, true) => {
            4.0 * 3f64.sqrt() * (norm2(need_c()?) / s2) * (g * log_t / horizon).sqrt()
        }
        (BoundFamily::Gaussian | BoundFamily::Exponential, false) => {
            43.0 * p.p() * g * log_t / horizon
        }
        (BoundFamily::SubGaussian, false) => {
            let ratio: f64 = need_c()?
                .iter()
                .zip(sigma)
                .map(|(c, s)| c * c / (s * s))
                .sum();
            85.0 * p.p() * ratio * log_t / horizon
        }
        (BoundFamily::BasSubGaussian, true) => {
            let c_max = need_c()?.iter().cloned().fold(0.0, f64::max);
            let s_min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
            76_400.0 * c_max * g * g * log_t * log_t / (s_min * s_min * horizon.sqrt())
        }
        (BoundFamily::BasGaussian, true) => {
            let total = sigma_hat_total.unwrap_or(s2 * s2);
            1.05e5 * (total / (s2 * s2)) * g * log_t * log_t / horizon.sqrt()
        }
        (f @ (BoundFamily::BasSubGaussian | BoundFamily::BasGaussian), false) => {
            return Err(Error::UnsupportedNorm(format!("{f} at p = {p}")))
        }
    })
}

/// Worst case of the Gaussian `p = ∞` bound over all sigma: `2√3 · sqrt(G log T / T)`.
pub fn gaussian_worst_case_bound(groups: usize, horizon: f64) -> f64 {
    2.0 * 3f64.sqrt() * (groups as f64 * horizon.ln() / horizon).sqrt()
}

/// Worst-case B-AS Gaussian bound with exact `‖sigma‖_2^2`: `1.05e5 · G log²T / √T`.
pub fn bas_gaussian_worst_case_bound(groups: usize, horizon: f64) -> f64 {
    let l = horizon.ln();
    1.05e5 * groups as f64 * l * l / horizon.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSizeFamily {
    VucbGaussian,
    BasGaussian,
}

impl SampleSizeFamily {
    pub fn name(self) -> &'static str {
        match self {
            SampleSizeFamily::VucbGaussian => "vucb-gaussian",
            SampleSizeFamily::BasGaussian => "bas-gaussian",
        }
    }

    /// The bound being inverted.
    pub fn bound(self, groups: usize, horizon: f64) -> f64 {
        match self {
            SampleSizeFamily::VucbGaussian => gaussian_worst_case_bound(groups, horizon),
            SampleSizeFamily::BasGaussian => bas_gaussian_worst_case_bound(groups, horizon),
        }
    }

    /// Smallest horizon searched; the bound is decreasing from here on.
    pub fn min_horizon(self, groups: usize) -> u128 {
        let floor = 2 * groups as u128;
        match self {
            // ln(T)/T decreases for T >= 3.
            SampleSizeFamily::VucbGaussian => floor.max(3),
            // ln²(T)/√T peaks at e^4.
            SampleSizeFamily::BasGaussian => floor.max(55),
        }
    }
}

impl fmt::Display for SampleSizeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SampleSizeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vucb-gaussian" => Ok(SampleSizeFamily::VucbGaussian),
            "bas-gaussian" => Ok(SampleSizeFamily::BasGaussian),
            other => Err(Error::InvalidParameter(format!(
                "unknown sample-size family {other:?}"
            ))),
        }
    }
}

/// Published worst-case sample sizes, by `(G, [eps = 0.10, 0.05, 0.01])`.
const PUBLISHED_VUCB: [(usize, [f64; 3]); 3] = [
    (3, [9.6e2, 1.9e3, 9.6e3]),
    (50, [1.6e4, 3.2e4, 1.6e5]),
    (1000, [3.2e5, 6.4e5, 3.2e6]),
];
const PUBLISHED_BAS: [(usize, [f64; 3]); 3] = [
    (3, [9.9e12, 3.9e13, 9.9e14]),
    (50, [2.7e15, 1.1e16, 2.7e17]),
    (1000, [1.1e18, 4.4e18, 1.1e20]),
];
pub const PUBLISHED_EPS: [f64; 3] = [0.10, 0.05, 0.01];
pub const PUBLISHED_GROUPS: [usize; 3] = [3, 50, 1000];

/// Published sample size for `(family, G, eps)` when it is on the reference grid.
pub fn published_sample_size(family: SampleSizeFamily, groups: usize, eps: f64) -> Option<f64> {
    let table = match family {
        SampleSizeFamily::VucbGaussian => &PUBLISHED_VUCB,
        SampleSizeFamily::BasGaussian => &PUBLISHED_BAS,
    };
    let col = PUBLISHED_EPS.iter().position(|e| (e - eps).abs() < 1e-12)?;
    table
        .iter()
        .find(|(g, _)| *g == groups)
        .map(|(_, row)| row[col])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSizeReport {
    pub family: SampleSizeFamily,
    pub eps: f64,
    pub groups: usize,
    /// Smallest `T` with `bound(T) <= eps`, by bisection.
    pub bisection: u128,
    /// `⌈12 G ε⁻² log(12 G ε⁻²)⌉`; only defined for Variance-UCB.
    pub closed_form: Option<u128>,
    pub published: Option<f64>,
}

pub fn sample_size(eps: f64, groups: usize, family: SampleSizeFamily) -> Result<SampleSizeReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must be in (0, 1), got {eps}")));
    }
    if groups < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 groups, got {groups}")));
    }
    let bound = |t: u128| family.bound(groups, t as f64);
    let lo_start = family.min_horizon(groups);
    let bisection = if bound(lo_start) <= eps {
        lo_start
    } else {
        // Invariant: bound(lo) > eps >= bound(hi).
        let mut lo = lo_start;
        let mut hi = lo_start * 2;
        while bound(hi) > eps {
            lo = hi;
            hi = hi.checked_mul(2).ok_or_else(|| {
                Error::InvalidParameter(format!("no horizon reaches eps = {eps}"))
            })?;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if bound(mid) <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let closed_form = match family {
        SampleSizeFamily::VucbGaussian => {
            let k = 12.0 * groups as f64 / (eps * eps);
            Some((k * k.ln()).ceil() as u128)
        }
        SampleSizeFamily::BasGaussian => None,
    };
    Ok(SampleSizeReport {
        family,
        eps,
        groups,
        bisection,
        closed_form,
        published: published_sample_size(family, groups, eps),
    })
}

/// Both sides of the second-order expansion of `R_p` around the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGap {
    /// `|‖λ^{1/p} / (1 - δ)‖_p - 1 - (p+1)/2 · Σ λ δ²|`.
    pub lhs: f64,
    /// `6 p² ‖δ‖∞³ / (1 - δ_max)^{3p+3}`.
    pub rhs: f64,
    /// The tighter `p² ‖δ‖∞³ / (1 - δ_max)^{2p+3}`, reported for comparison.
    pub rhs_header: f64,
}

pub fn taylor_gap(lambda: &[f64], delta: &[f64], p: NormParam) -> Result<TaylorGap> {
    if p.is_infinite() {
        return Err(Error::PreconditionViolated("Taylor check needs finite p".into()));
    }
    if lambda.len() != delta.len() || lambda.is_empty() {
        return Err(Error::PreconditionViolated(format!(
            "lambda has {} entries, delta has {}",
            lambda.len(),
            delta.len()
        )));
    }
    if lambda.iter().any(|l| !(*l > 0.0)) || (lambda.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::PreconditionViolated(
            "lambda must be a positive probability vector".into(),
        ));
    }
    let dot: f64 = lambda.iter().zip(delta).map(|(l, d)| l * d).sum();
    if dot.abs() > 1e-12 {
        return Err(Error::PreconditionViolated(format!(
            "delta not orthogonal to lambda: {dot:e}"
        )));
    }
    let delta_max = delta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if delta_max > 1.0 - 1e-6 {
        return Err(Error::PreconditionViolated(format!(
            "delta_max = {delta_max} too close to 1"
        )));
    }
    let pp = p.p();
    let norm = lambda
        .iter()
        .zip(delta)
        .map(|(l, d)| l / (1.0 - d).powf(pp))
        .sum::<f64>()
        .powf(1.0 / pp);
    let quad: f64 = lambda.iter().zip(delta).map(|(l, d)| l * d * d).sum();
    let lhs = (norm - 1.0 - (pp + 1.0) / 2.0 * quad).abs();
    let sup = delta.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let cube = sup.powi(3);
    let slack = 1.0 - delta_max.max(0.0);
    Ok(TaylorGap {
        lhs,
        rhs: 6.0 * pp * pp * cube / slack.powf(3.0 * pp + 3.0),
        rhs_header: pp * pp * cube / slack.powf(2.0 * pp + 3.0),
    })
}

/// A random admissible Taylor input: a probability vector, a direction
/// orthogonal to it with `‖δ‖∞ <= max_sup`, and `p ∈ {1, 2, 5}`.
pub fn random_taylor_case<R: Rng + ?Sized>(rng: &mut R, max_sup: f64) -> (Vec<f64>, Vec<f64>, NormParam) {
    let g = rng.random_range(2..=6);
    let raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let lambda: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let mut delta: Vec<f64> = (0..g).map(|_| rng.random_range(-0.5..0.5)).collect();
    let mean: f64 = lambda.iter().zip(&delta).map(|(l, d)| l * d).sum();
    delta.iter_mut().for_each(|d| *d -= mean);
    let sup = delta.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    if sup > 0.0 {
        let target = max_sup * rng.random_range(0.01..=1.0);
        delta.iter_mut().for_each(|d| *d *= target / sup);
    }
    let p = [1.0, 2.0, 5.0][rng.random_range(0..3)];
    (lambda, delta, NormParam::finite(p).expect("valid p"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorSweep {
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs / rhs`.
    pub worst_ratio: f64,
    pub header_violations: usize,
    /// Largest `lhs / rhs_header`.
    pub worst_header_ratio: f64,
}

/// Check `lhs <= rhs` on `trials` random admissible inputs with `δ_max <= 0.5`.
pub fn taylor_sweep(trials: usize, seed: u64) -> Result<TaylorSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = TaylorSweep {
        trials,
        violations: 0,
        worst_ratio: 0.0,
        header_violations: 0,
        worst_header_ratio: 0.0,
    };
    for _ in 0..trials {
        let (lambda, delta, p) = random_taylor_case(&mut rng, 0.5);
        let gap = taylor_gap(&lambda, &delta, p)?;
        if gap.lhs > gap.rhs {
            out.violations += 1;
        }
        if gap.lhs > gap.rhs_header {
            out.header_violations += 1;
        }
        if gap.rhs > 0.0 {
            out.worst_ratio = out.worst_ratio.max(gap.lhs / gap.rhs);
            out.worst_header_ratio = out.worst_header_ratio.max(gap.lhs / gap.rhs_header);
        }
    }
    Ok(out)
}
