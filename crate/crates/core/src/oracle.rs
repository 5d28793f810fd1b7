//! Complete-information benchmark: the closed-form optimal allocation, the
//! normalized regret against it, and an independent numerical minimizer.

use crate::error::{Error, Result};
use crate::problem::{objective, CountVector, NormParam};

/// Optimal static allocation when every `sigma_g` is known.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalAllocation {
    /// `sigma^q / Σ_p(sigma)`.
    pub lambda_star: Vec<f64>,
    /// `T · lambda_star`.
    pub n_star: CountVector,
    /// Optimal objective value `R*_p`.
    pub r_star: f64,
    /// Normalizer `Σ_p(sigma) = Σ_g sigma_g^q`.
    pub sigma_p: f64,
}

pub fn optimal_allocation(sigma: &[f64], p: NormParam, horizon: f64) -> Result<OptimalAllocation> {
    if let Some(g) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::DegenerateGroup(format!(
            "group {g} has non-positive sd {}",
            sigma[g]
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let q = p.exponent();
    let weights: Vec<f64> = sigma.iter().map(|s| s.powf(q)).collect();
    let sigma_p: f64 = weights.iter().sum();
    let lambda_star: Vec<f64> = weights.iter().map(|w| w / sigma_p).collect();
    let n_star = lambda_star.iter().map(|l| l * horizon).collect();
    let r_star = if p.is_infinite() {
        sigma.iter().map(|s| s * s).sum::<f64>() / horizon
    } else {
        sigma_p.powf(1.0 + 1.0 / p.p()) / horizon
    };
    Ok(OptimalAllocation {
        lambda_star,
        n_star: CountVector::relaxed(n_star, horizon)?,
        r_star,
        sigma_p,
    })
}

/// `(achieved - R*) / R*`, clamped at zero to absorb rounding jitter.
pub fn normalized_regret(achieved: f64, r_star: f64) -> Result<f64> {
    if !(r_star > 0.0 && r_star.is_finite()) {
        return Err(Error::InvalidBenchmark(r_star));
    }
    Ok(((achieved - r_star) / r_star).max(0.0))
}

/// Numerical minimizer of the objective over `{n >= 0, Σ n = T}` for `G <= 4`.
///
/// Works by nested golden-section search on the first `G - 1` coordinates:
/// the objective is convex in `n`, so minimizing out the trailing coordinates
/// leaves a convex function of the leading ones. `resolution` is relative to `T`.
pub fn brute_force_optimal(
    sigma: &[f64],
    p: NormParam,
    horizon: f64,
    resolution: f64,
) -> Result<(CountVector, f64)> {
    let g = sigma.len();
    if g > 4 {
        return Err(Error::TooLarge(g));
    }
    if g == 0 {
        return Err(Error::DegenerateGroup("no groups".into()));
    }
    if !(resolution > 0.0 && resolution <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "resolution must be in (0, 1e-3], got {resolution}"
        )));
    }
    let tol = resolution * horizon * 1e-3;
    let mut prefix = Vec::with_capacity(g);
    let (value, alloc) = minimize_tail(sigma, p, horizon, &mut prefix, tol);
    Ok((CountVector::relaxed(alloc, horizon)?, value))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes over the remaining coordinates given a fixed prefix, returning the
/// value and the full allocation.
fn minimize_tail(
    sigma: &[f64],
    p: NormParam,
    budget: f64,
    prefix: &mut Vec<f64>,
    tol: f64,
) -> (f64, Vec<f64>) {
    let remaining = sigma.len() - prefix.len();
    if remaining == 1 {
        let mut n = prefix.clone();
        n.push(budget);
        let v = objective(&n, sigma, p).unwrap_or(f64::INFINITY);
        return (v, n);
    }
    let mut eval = |x: f64| {
        prefix.push(x);
        let r = minimize_tail(sigma, p, budget - x, prefix, tol);
        prefix.pop();
        r
    };
    let (mut a, mut b) = (0.0, budget);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c);
    let mut fd = eval(d);
    while b - a > tol {
        if fc.0 <= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
    }
    if fc.0 <= fd.0 {
        fc
    } else {
        fd
    }
}
