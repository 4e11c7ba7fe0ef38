//! `budget`: token, context and memory accounting for one or more configs.

use std::path::PathBuf;

use clap::Args;
use smolpipe_core::budget::{compare_configs, write_csv, Workload};

use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Pipeline config files or preset names.
    #[arg(required = true)]
    pub configs: Vec<String>,
    /// Workload file; defaults to one 1920x1080 image and 256 text tokens.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &BudgetArgs) -> Result<()> {
    let loaded = args
        .configs
        .iter()
        .map(|c| super::pipeline_config(c))
        .collect::<Result<Vec<_>>>()?;
    let paths: Vec<&std::path::Path> = loaded.iter().filter_map(|(_, p)| p.as_deref()).collect();
    RunManifest::new("budget", &args.out)
        .config(args.workload.as_deref())
        .inputs(paths)
        .write()?;
    let workload = match &args.workload {
        Some(path) => {
            Workload::from_kv(&super::load_kv(path)?).map_err(|e| CliError::from(e).context(path.display()))?
        }
        None => Workload::default(),
    };
    let configs: Vec<_> = loaded.into_iter().map(|(c, _)| c).collect();
    for c in &configs {
        c.validate().map_err(|e| CliError::from(e).context(&c.name))?;
    }
    let rows = compare_configs(&configs, &workload)?;
    let mut table = Vec::new();
    write_csv(&mut table, &rows)?;
    print!("{}", String::from_utf8_lossy(&table));
    super::write_file(&args.out.join("budget.csv"), &table)
}
