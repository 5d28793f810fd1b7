//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS/FAIL line regardless of output capture.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use vucb::estimation::{coverage_probe, AdmissibleWidth, CoverageFamily, WidthFamily};
use vucb::harness::output::write_episodes_csv;
use vucb::harness::{run_monte_carlo, ExperimentConfig, RegretSummary};
use vucb::oracle::{brute_force_optimal, optimal_allocation};
use vucb::policies::PolicyKind;
use vucb::problem::{Family, NormParam};
use vucb::theory::{
    regret_bound_leading, sample_size, taylor_sweep, BoundFamily, SampleSizeFamily, TheoryInputs,
    FIXED_POINT_MAX_ITER, FIXED_POINT_TOL, PUBLISHED_EPS, PUBLISHED_GROUPS,
};

type Outcome = Result<String, String>;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn config(instance: Vec<Family>, p: NormParam, horizons: Vec<u64>, policies: Vec<PolicyKind>, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: 1,
        instance,
        p,
        horizons,
        policies,
        runs: 300,
        seed,
        c_hat: None,
        procedure: None,
        warmup: None,
        out_dir: None,
        workers: None,
    }
}

fn gaussians(sigma: &[f64]) -> Vec<Family> {
    sigma.iter().map(|&sd| Family::Gaussian { mean: 0.0, sd }).collect()
}

fn simulate(cfg: &ExperimentConfig) -> Result<Vec<RegretSummary>, String> {
    let exp = cfg.validate().map_err(|e| e.to_string())?;
    Ok(run_monte_carlo(&exp, workers()).map_err(|e| e.to_string())?.summaries)
}

fn oracle_matches_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let norms = [NormParam::finite(1.0).unwrap(), NormParam::finite(2.0).unwrap(), NormParam::INFINITE];
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let g = rng.random_range(2..=3);
        let sigma: Vec<f64> = (0..g).map(|_| rng.random_range(0.1..=3.0)).collect();
        let p = norms[rng.random_range(0..3)];
        let closed = optimal_allocation(&sigma, p, 30.0).map_err(|e| e.to_string())?.r_star;
        let (_, brute) = brute_force_optimal(&sigma, p, 30.0, 1e-4).map_err(|e| e.to_string())?;
        worst = worst.max((brute - closed).abs() / closed);
    }
    if worst <= 1e-4 {
        Ok(format!("worst relative gap {worst:.2e} over 200 instances"))
    } else {
        Err(format!("worst relative gap {worst:.2e} exceeds 1e-4"))
    }
}

fn neyman_special_case() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p1 = NormParam::finite(1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let g = rng.random_range(2..=8);
        let sigma: Vec<f64> = (0..g).map(|_| rng.random_range(0.01..=10.0)).collect();
        let total: f64 = sigma.iter().sum();
        let opt = optimal_allocation(&sigma, p1, 1000.0).map_err(|e| e.to_string())?;
        for (l, s) in opt.lambda_star.iter().zip(&sigma) {
            worst = worst.max((l - s / total).abs());
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max |lambda - sigma/sum| = {worst:.1e}"))
    } else {
        Err(format!("max |lambda - sigma/sum| = {worst:.1e} exceeds 1e-12"))
    }
}

fn gaussian_regret_decay() -> Outcome {
    let sigma = [1.0, 2.0, 3.0];
    let horizons = vec![1_000, 10_000, 100_000];
    let s = simulate(&config(gaussians(&sigma), NormParam::INFINITE, horizons, vec![PolicyKind::Vucb], 3))?;
    let desc: Vec<String> = s.iter().map(|c| format!("T={} {:.4}±{:.4}", c.horizon, c.mean_regret, c.std_error)).collect();
    for w in s.windows(2) {
        let gap = w[0].mean_regret - w[1].mean_regret;
        let se = w[0].std_error.hypot(w[1].std_error);
        if gap <= 2.0 * se {
            return Err(format!("gap {gap:.4} not above 2 s.e. {:.4}: {}", 2.0 * se, desc.join(", ")));
        }
    }
    let lead = regret_bound_leading(BoundFamily::Gaussian, &sigma, None, None, NormParam::INFINITE, 1e5).unwrap();
    let last = s[2].mean_regret;
    if last <= 2.0 * lead {
        Ok(format!("{}; threshold {:.4}", desc.join(", "), 2.0 * lead))
    } else {
        Err(format!("mean regret {last:.4} above {:.4}", 2.0 * lead))
    }
}

fn exponential_regret() -> Outcome {
    let inst = vec![Family::Exponential { rate: 1.0 }, Family::Exponential { rate: 0.5 }];
    let s = simulate(&config(inst, NormParam::INFINITE, vec![10_000], vec![PolicyKind::Vucb], 4))?;
    let lead = regret_bound_leading(BoundFamily::Exponential, &[1.0, 2.0], None, None, NormParam::INFINITE, 1e4).unwrap();
    let m = s[0].mean_regret;
    if m <= 2.0 * lead {
        Ok(format!("mean regret {m:.4} ± {:.4}, threshold {:.4}", s[0].std_error, 2.0 * lead))
    } else {
        Err(format!("mean regret {m:.4} above {:.4}", 2.0 * lead))
    }
}

fn finite_p_regret() -> Outcome {
    let sigma = [1.0, 2.0, 3.0];
    let p2 = NormParam::finite(2.0).unwrap();
    let s = simulate(&config(gaussians(&sigma), p2, vec![100_000], vec![PolicyKind::Vucb], 5))?;
    let lead = regret_bound_leading(BoundFamily::Gaussian, &sigma, None, None, p2, 1e5).unwrap();
    let m = s[0].mean_regret;
    if m <= 2.0 * lead {
        Ok(format!("mean regret {m:.5} ± {:.5}, threshold {:.4}", s[0].std_error, 2.0 * lead))
    } else {
        Err(format!("mean regret {m:.5} above {:.4}", 2.0 * lead))
    }
}

fn vucb_beats_uniform() -> Outcome {
    let cfg = config(
        gaussians(&[0.1, 1.0]),
        NormParam::INFINITE,
        vec![10_000],
        vec![PolicyKind::Vucb, PolicyKind::Uniform],
        6,
    );
    let exp = cfg.validate().map_err(|e| e.to_string())?;
    let out = run_monte_carlo(&exp, workers()).map_err(|e| e.to_string())?;
    let achieved = |k: PolicyKind| -> Vec<f64> {
        out.episodes.iter().filter(|e| e.policy == k).map(|e| e.result.achieved).collect()
    };
    let (v, u) = (achieved(PolicyKind::Vucb), achieved(PolicyKind::Uniform));
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var, n)
    };
    let ((mv, vv, nv), (mu, vu, nu)) = (stats(&v), stats(&u));
    let (av, au) = (vv / nv, vu / nu);
    let se = (av + au).sqrt();
    let t = (mu - mv) / se;
    let df = (av + au).powi(2) / (av * av / (nv - 1.0) + au * au / (nu - 1.0));
    let pval = if se == 0.0 {
        if mu > mv { 0.0 } else { 1.0 }
    } else {
        1.0 - StudentsT::new(0.0, 1.0, df).map_err(|e| e.to_string())?.cdf(t)
    };
    let line = format!("R_inf V-UCB {mv:.3e} vs uniform {mu:.3e}, Welch t = {t:.1}, one-sided p = {pval:.1e}");
    if mv < mu && pval < 0.01 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn fixed_point_machinery() -> Outcome {
    let sigma = [1.0, 2.0, 3.0];
    let mut ratios = Vec::new();
    for t in [1e4, 1e5, 1e6, 1e7] {
        let w = AdmissibleWidth::new(WidthFamily::Gaussian, t).unwrap();
        let th = TheoryInputs::new(&sigma, w, NormParam::INFINITE, t).map_err(|e| e.to_string())?;
        let tr = th.fixed_point(FIXED_POINT_TOL, FIXED_POINT_MAX_ITER).map_err(|e| e.to_string())?;
        if !tr.iterates.windows(2).all(|w| w[1] <= w[0]) {
            return Err(format!("trace increases at T = {t:e}"));
        }
        let w1 = th.decision_error().map_err(|e| e.to_string())?.w1;
        ratios.push(tr.f_inf / (w1 + 3.0 / t));
    }
    let desc = format!("ratios {:?}", ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>());
    if !(0.8..=1.25).contains(&ratios[2]) {
        return Err(format!("ratio at T=1e6 outside [0.8, 1.25]: {desc}"));
    }
    if !ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs()) {
        return Err(format!("|ratio - 1| not non-increasing: {desc}"));
    }
    Ok(desc)
}

fn taylor_inequality() -> Outcome {
    let s = taylor_sweep(1000, 8).map_err(|e| e.to_string())?;
    let line = format!(
        "{} violations in {} trials, worst lhs/rhs {:.3e}; against the p^2 constant: {} violations, worst ratio {:.3e}",
        s.violations, s.trials, s.worst_ratio, s.header_violations, s.worst_header_ratio
    );
    if s.violations == 0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn concentration_coverage() -> Outcome {
    let trials = 20_000;
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, fam, seed) in [("gaussian", CoverageFamily::Gaussian, 9), ("exponential", CoverageFamily::Exponential, 10)] {
        let r = coverage_probe(fam, 50, 0.05, trials, seed).map_err(|e| e.to_string())?;
        let se = (r * (1.0 - r) / trials as f64).sqrt();
        ok &= r >= 0.95 - 3.0 * se;
        parts.push(format!("{name} {r:.4} (floor {:.4})", 0.95 - 3.0 * se));
    }
    if ok {
        Ok(parts.join(", "))
    } else {
        Err(parts.join(", "))
    }
}

fn sample_size_solver() -> Outcome {
    let mut rows = Vec::new();
    for fam in [SampleSizeFamily::VucbGaussian, SampleSizeFamily::BasGaussian] {
        for g in PUBLISHED_GROUPS {
            for eps in PUBLISHED_EPS {
                let r = sample_size(eps, g, fam).map_err(|e| e.to_string())?;
                let t = r.bisection;
                let lower = (2 * g as u128).max(t / 2);
                if !(fam.bound(g, t as f64) <= eps && eps < fam.bound(g, lower as f64)) {
                    return Err(format!("{fam} G={g} eps={eps}: T={t} fails the bracket"));
                }
                rows.push(format!(
                    "{fam} G={g} eps={eps}: T={t:.2e} closed={} ref={:.1e}",
                    r.closed_form.map_or("-".into(), |c| format!("{c:.2e}")),
                    r.published.unwrap_or(f64::NAN)
                ));
            }
        }
    }
    for r in &rows {
        println!("    {r}");
    }
    Ok("bisection bracket holds on the 3x3 grid for both families (reference values listed above, not compared)".into())
}

fn determinism_across_workers() -> Outcome {
    let mut cfg = config(
        gaussians(&[1.0, 2.0, 3.0]),
        NormParam::finite(2.0).unwrap(),
        vec![200, 2_000],
        vec![PolicyKind::Vucb, PolicyKind::Uniform, PolicyKind::Oracle],
        11,
    );
    cfg.runs = 40;
    let exp = cfg.validate().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for w in [1, 4, 8] {
        let out = run_monte_carlo(&exp, w).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        write_episodes_csv(&mut buf, &out.episodes).map_err(|e| e.to_string())?;
        outputs.push(buf);
    }
    if outputs.iter().all(|o| *o == outputs[0]) {
        Ok(format!("{} identical CSV bytes for 1, 4 and 8 workers", outputs[0].len()))
    } else {
        Err("episode CSV differs across worker counts".into())
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 11] = [
        ("oracle closed form vs brute force", oracle_matches_brute_force, 30),
        ("neyman allocation at p = 1", neyman_special_case, 30),
        ("gaussian regret decay at p = inf", gaussian_regret_decay, 120),
        ("exponential regret at p = inf", exponential_regret, 30),
        ("gaussian regret at p = 2", finite_p_regret, 60),
        ("V-UCB beats uniform", vucb_beats_uniform, 60),
        ("fixed-point machinery", fixed_point_machinery, 5),
        ("taylor inequality", taylor_inequality, 5),
        ("concentration coverage", concentration_coverage, 10),
        ("sample-size solver", sample_size_solver, 30),
        ("determinism across worker counts", determinism_across_workers, 60),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(*limit) => {
                Err(format!("{msg}; took {took:.1?}, limit {limit}s"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg} [{took:.2?}]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg} [{took:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
