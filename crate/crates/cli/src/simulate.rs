//! `simulate`: synthetic tag and ground-truth CSVs from a lap scenario.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lapswim_core::ingest::write_tag_csv;
use lapswim_core::simulator::{generate_truth, synthesize_tag, write_truth_csv};
use lapswim_core::LapScenario;

#[derive(Debug, Clone)]
pub struct SimulatedFiles {
    pub tag: PathBuf,
    pub truth: PathBuf,
    pub scenario: PathBuf,
    pub imu_rows: usize,
    pub truth_rows: usize,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

/// Writes `<name>.tag.csv`, `<name>.truth.csv` and the resolved `<name>.scenario.toml`.
pub fn cmd_simulate(sc: &LapScenario, out_dir: &Path) -> anyhow::Result<SimulatedFiles> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let truth = generate_truth(sc)?;
    let tag = synthesize_tag(&truth);
    let files = SimulatedFiles {
        tag: out_dir.join(format!("{}.tag.csv", sc.name)),
        truth: out_dir.join(format!("{}.truth.csv", sc.name)),
        scenario: out_dir.join(format!("{}.scenario.toml", sc.name)),
        imu_rows: tag.imu.len(),
        truth_rows: truth.samples.len(),
    };
    write_tag_csv(create(&files.tag)?, &tag).with_context(|| format!("cannot write {}", files.tag.display()))?;
    write_truth_csv(create(&files.truth)?, &truth).with_context(|| format!("cannot write {}", files.truth.display()))?;
    let text = toml::to_string(sc).context("cannot serialise scenario")?;
    std::fs::write(&files.scenario, text).with_context(|| format!("cannot write {}", files.scenario.display()))?;
    Ok(files)
}
