//! Persistence: an episode-level CSV and a pretty-printed summary JSON.
//!
//! Both files depend only on the configuration, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::runner::{EpisodeRecord, MonteCarloOutput, RegretSummary};

pub const EPISODES_FILE: &str = "episodes.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CSV_HEADER: [&str; 8] = ["policy", "p", "T", "run", "seed", "n_counts", "R_p", "regret_norm"];

/// Summary document: the configuration that produced it plus one entry per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub config: ExperimentConfig,
    pub summaries: Vec<RegretSummary>,
}

pub fn write_episodes_csv<W: Write>(out: W, episodes: &[EpisodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for e in episodes {
        let counts = e
            .result
            .counts
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            e.policy.to_string(),
            e.p.to_string(),
            e.horizon.to_string(),
            e.run.to_string(),
            e.result.seed.to_string(),
            counts,
            e.result.achieved.to_string(),
            e.result.regret.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => std::io::Error::other(format!("{other:?}")).into(),
    }
}

pub fn summary_json(config: &ExperimentConfig, summaries: &[RegretSummary]) -> Result<String> {
    let doc = SummaryDocument {
        config: config.clone(),
        summaries: summaries.to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Write `episodes.csv` and `summary.json` under `dir`, creating it if needed.
pub fn emit_results(config: &ExperimentConfig, out: &MonteCarloOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(EPISODES_FILE);
    write_episodes_csv(fs::File::create(&csv_path)?, &out.episodes)?;
    let json_path = dir.join(SUMMARY_FILE);
    fs::write(&json_path, summary_json(config, &out.summaries)?)?;
    Ok(vec![csv_path, json_path])
}
