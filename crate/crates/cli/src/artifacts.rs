//! Per-repetition output directory `rep-{r}/`.
//!
//! Chains are saved whole as JSON so later stages reload them exactly; the
//! CSV files alongside are for inspection and plotting.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ffbm::analysis::EvaluationReport;
use ffbm::io::{write_feature_scores, write_objective_trace, write_partition_samples, write_responsibilities, write_trace, write_weight_samples};
use ffbm::pipeline::BlockStage;
use ffbm::{Error, MalaOutput, ReducedFeatureSet};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const BLOCK_CHAIN: &str = "block_chain.json";
pub const THETA_CHAIN: &str = "theta_chain.json";
const THETA_CHAIN_REDUCED: &str = "theta_chain_reduced.json";
const REDUCTION: &str = "reduction.json";

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> ffbm::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> ffbm::Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        location: path.display().to_string(),
        message: e.to_string(),
    })
}

fn create(path: PathBuf) -> ffbm::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub struct RepDir {
    dir: PathBuf,
}

impl RepDir {
    pub fn path(out: &Path, rep: usize) -> PathBuf {
        out.join(format!("rep-{rep}"))
    }

    pub fn create(out: &Path, rep: usize) -> ffbm::Result<Self> {
        let dir = Self::path(out, rep);
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn open(out: &Path, rep: usize) -> ffbm::Result<Self> {
        let dir = Self::path(out, rep);
        if !dir.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{} does not exist; run the earlier stages first", dir.display()),
            )));
        }
        Ok(Self { dir })
    }

    pub fn write_blocks(&self, blocks: &BlockStage) -> ffbm::Result<()> {
        let chain = &blocks.chain;
        write_json(&self.dir.join(BLOCK_CHAIN), chain)?;
        write_partition_samples(&chain.retained_indices, &chain.samples, create(self.dir.join("partitions.csv"))?)?;
        write_trace("S", &chain.s_trace, create(self.dir.join("s_trace.csv"))?)?;
        write_responsibilities(&blocks.responsibilities.matrix, create(self.dir.join("responsibilities.csv"))?)
    }

    pub fn read_blocks(&self, num_blocks: usize) -> ffbm::Result<BlockStage> {
        super::block_stage(read_json(&self.dir.join(BLOCK_CHAIN))?, num_blocks)
    }

    pub fn write_theta(&self, chain: &MalaOutput, feature_names: &[String], reduced: bool) -> ffbm::Result<()> {
        let suffix = if reduced { "_reduced" } else { "" };
        write_json(&self.dir.join(if reduced { THETA_CHAIN_REDUCED } else { THETA_CHAIN }), chain)?;
        write_weight_samples(
            &chain.retained_indices,
            &chain.samples,
            feature_names,
            create(self.dir.join(format!("weights{suffix}.csv")))?,
        )?;
        write_objective_trace(&chain.u_trace, &chain.accepted, create(self.dir.join(format!("u_trace{suffix}.csv")))?)?;
        write_json(
            &self.dir.join(format!("theta{suffix}.json")),
            &serde_json::json!({
                "acceptance_rate": chain.acceptance_rate(),
                "mean_objective": chain.mean_objective(),
                "retained": chain.samples.len(),
            }),
        )
    }

    pub fn read_theta(&self, reduced: bool) -> ffbm::Result<MalaOutput> {
        read_json(&self.dir.join(if reduced { THETA_CHAIN_REDUCED } else { THETA_CHAIN }))
    }

    pub fn has_reduced_theta(&self) -> bool {
        self.dir.join(THETA_CHAIN_REDUCED).exists() && self.dir.join(REDUCTION).exists()
    }

    pub fn write_reduction(&self, set: &ReducedFeatureSet, names: &[String]) -> ffbm::Result<()> {
        write_json(&self.dir.join(REDUCTION), set)?;
        write_feature_scores(set, names, create(self.dir.join("feature_scores.csv"))?)
    }

    pub fn read_reduction(&self) -> ffbm::Result<ReducedFeatureSet> {
        read_json(&self.dir.join(REDUCTION))
    }

    pub fn write_report(&self, report: &EvaluationReport) -> ffbm::Result<()> {
        write_json(&self.dir.join("report.json"), report)
    }
}
