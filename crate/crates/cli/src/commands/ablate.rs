//! `ablate`: sweep one pipeline setting on its synthetic task.

use std::path::{Path, PathBuf};

use clap::Args;
use smolpipe_lab::{run_ablation, write_ablation_csv, AblationConfig, Axis};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// shuffle, frames, posmode or ropebase.
    #[arg(long)]
    pub axis: Axis,
    /// Run settings file (steps, lr, batch_size, train_count, eval_count,
    /// seed, target_loss); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_config(path: &Path) -> Result<AblationConfig> {
    let kv = super::load_kv(path)?;
    let parse = || -> std::result::Result<AblationConfig, smolpipe_core::kv::KvError> {
        kv.deny_unknown(&[
            "steps",
            "lr",
            "batch_size",
            "train_count",
            "eval_count",
            "seed",
            "target_loss",
        ])?;
        let d = AblationConfig::default();
        Ok(AblationConfig {
            steps: kv.get_or("steps", d.steps)?,
            lr: kv.get_or("lr", d.lr)?,
            batch_size: kv.get_or("batch_size", d.batch_size)?,
            train_count: kv.get_or("train_count", d.train_count)?,
            eval_count: kv.get_or("eval_count", d.eval_count)?,
            seed: kv.get_or("seed", d.seed)?,
            target_loss: kv.get_or("target_loss", d.target_loss)?,
        })
    };
    parse().map_err(|e| CliError::from(e).context(path.display()))
}

pub fn run(args: &AblateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => AblationConfig::default(),
    };
    cfg.steps = args.steps.unwrap_or(cfg.steps);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    RunManifest::new("ablate", &args.out)
        .config(args.config.as_deref())
        .seed(cfg.seed)
        .write()?;
    if cfg.train_count == 0 || cfg.eval_count == 0 || cfg.batch_size == 0 {
        return Err(CliError::input(
            "train_count, eval_count and batch_size must be positive",
        ));
    }
    eprintln!("ablating {} over {:?}", args.axis, args.axis.settings());
    let rows = run_ablation(args.axis, &cfg)?;
    let mut table = Vec::new();
    write_ablation_csv(&mut table, &rows)?;
    print!("{}", String::from_utf8_lossy(&table));
    super::write_file(&args.out.join(format!("ablation-{}.csv", args.axis)), &table)
}
