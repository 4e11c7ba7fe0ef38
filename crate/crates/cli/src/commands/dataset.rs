//! `generate-dataset`: write a synthetic task set to disk.

use std::path::PathBuf;

use clap::Args;
use smolpipe_lab::{save_dataset, DatasetManifest, TaskKind};

use crate::error::Result;
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// caption, temporal or ocr-grid.
    #[arg(long)]
    pub task: TaskKind,
    /// Number of samples; defaults to the task's standard size.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &DatasetArgs) -> Result<()> {
    RunManifest::new("generate-dataset", &args.out)
        .seed(args.seed)
        .write()?;
    let manifest = DatasetManifest {
        task: args.task,
        count: args.count.unwrap_or_else(|| args.task.default_count()),
        seed: args.seed,
    };
    let set = manifest.generate();
    save_dataset(&args.out, &manifest, &set)?;
    println!(
        "wrote {} {} samples to {}",
        set.samples.len(),
        args.task,
        args.out.display()
    );
    Ok(())
}
