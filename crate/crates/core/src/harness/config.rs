//! Experiment configuration: a versioned JSON document, validated into
//! field-level diagnostics before anything runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::estimation::UcbFamily;
use crate::policies::{Policy, PolicyKind, DEFAULT_WARMUP, MIN_WARMUP};
use crate::problem::{Family, GroupDistribution, Instance, NormParam};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "VUCB_WORKERS";

/// UCB procedure names accepted in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcedureName {
    Gaussian,
    Exponential,
    SubGaussian,
}

/// Experiment description as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// One entry per group.
    pub instance: Vec<Family>,
    pub p: NormParam,
    pub horizons: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    pub runs: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_hat: Option<Vec<f64>>,
    /// Inferred from the instance when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub procedure: Option<ProcedureName>,
    /// Variance-UCB samples per group before the UCB rule applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// A validated configuration, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub instance: Instance,
    pub ucb: UcbFamily,
    pub warmup: u64,
}

impl Experiment {
    pub fn policy(&self, kind: PolicyKind) -> Policy {
        match kind {
            PolicyKind::Vucb => Policy::Vucb {
                family: self.ucb.clone(),
                warmup: self.warmup,
            },
            PolicyKind::Uniform => Policy::Uniform,
            PolicyKind::Oracle => Policy::Oracle,
        }
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.instance.sigmas()
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Config(vec![FieldError::new("<document>", e.to_string())]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(vec![FieldError::new(
                "<file>",
                format!("cannot read {}: {e}", path.display()),
            )])
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Check every field and collect all problems at once.
    pub fn validate(&self) -> Result<Experiment> {
        let mut errs = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errs.push(FieldError::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }

        let mut groups = Vec::with_capacity(self.instance.len());
        for (i, fam) in self.instance.iter().enumerate() {
            match GroupDistribution::new(*fam) {
                Ok(g) => groups.push(g),
                Err(e) => errs.push(FieldError::new(format!("instance[{i}]"), e.to_string())),
            }
        }
        if self.instance.len() < 2 {
            errs.push(FieldError::new("instance", "need at least 2 groups"));
        }
        let g = self.instance.len() as u64;
        let warmup = self.warmup.unwrap_or(DEFAULT_WARMUP);
        if warmup < MIN_WARMUP {
            errs.push(FieldError::new(
                "warmup",
                format!("must be at least {MIN_WARMUP}, got {warmup}"),
            ));
        }
        let per_group = if self.policies.contains(&PolicyKind::Vucb) {
            warmup.max(MIN_WARMUP)
        } else {
            MIN_WARMUP
        };

        if self.horizons.is_empty() {
            errs.push(FieldError::new("horizons", "list is empty"));
        }
        for (i, &t) in self.horizons.iter().enumerate() {
            if t < per_group * g {
                errs.push(FieldError::new(
                    format!("horizons[{i}]"),
                    format!("horizon {t} is below {per_group}G = {}", per_group * g),
                ));
            }
        }
        if self.policies.is_empty() {
            errs.push(FieldError::new("policies", "list is empty"));
        }
        if self.runs == 0 {
            errs.push(FieldError::new("runs", "must be at least 1"));
        }
        if self.workers == Some(0) {
            errs.push(FieldError::new("workers", "must be at least 1"));
        }

        if let Some(c) = &self.c_hat {
            if c.len() != self.instance.len() {
                errs.push(FieldError::new(
                    "c_hat",
                    format!("has {} entries for {} groups", c.len(), self.instance.len()),
                ));
            }
            if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                errs.push(FieldError::new("c_hat", "entries must be positive"));
            }
        }

        let all = |f: fn(&Family) -> bool| !self.instance.is_empty() && self.instance.iter().all(f);
        let gaussian = all(|f| matches!(f, Family::Gaussian { .. }));
        let exponential = all(|f| matches!(f, Family::Exponential { .. }));
        let procedure = match self.procedure {
            Some(p) => Some(p),
            None if self.c_hat.is_some() => Some(ProcedureName::SubGaussian),
            None if gaussian => Some(ProcedureName::Gaussian),
            None if exponential => Some(ProcedureName::Exponential),
            None => {
                errs.push(FieldError::new(
                    "c_hat",
                    "required: a mixed or bounded instance uses the sub-gaussian procedure",
                ));
                None
            }
        };
        let ucb = match procedure {
            Some(ProcedureName::SubGaussian) => match &self.c_hat {
                Some(c) => Some(UcbFamily::SubGaussian { c_hat: c.clone() }),
                None => {
                    errs.push(FieldError::new("c_hat", "required by the sub-gaussian procedure"));
                    None
                }
            },
            Some(other) => {
                if self.c_hat.is_some() {
                    errs.push(FieldError::new(
                        "c_hat",
                        "only used by the sub-gaussian procedure",
                    ));
                }
                let (ok, fam) = match other {
                    ProcedureName::Gaussian => (gaussian, UcbFamily::Gaussian),
                    _ => (exponential, UcbFamily::Exponential),
                };
                if !ok {
                    errs.push(FieldError::new(
                        "procedure",
                        format!("{} procedure needs every group in that family", fam.name()),
                    ));
                }
                Some(fam)
            }
            None => None,
        };

        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        Ok(Experiment {
            config: self.clone(),
            instance: Instance::new(groups)?,
            ucb: ucb.expect("resolved when no diagnostics"),
            warmup,
        })
    }
}

/// Worker count: explicit value, else `VUCB_WORKERS`, else all cores.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize> {
    if let Some(w) = explicit {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().ok().filter(|&w| w > 0).ok_or_else(|| {
            Error::Config(vec![FieldError::new(
                WORKERS_ENV,
                format!("expected a positive integer, got {v:?}"),
            )])
        }),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
