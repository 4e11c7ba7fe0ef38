//! `train-toy`: fit the toy model on a dataset directory.

use std::path::{Path, PathBuf};

use clap::Args;
use smolpipe_core::model::{ModelConfig, ToyVlm};
use smolpipe_core::vision::{capped_dims, grid_layout};
use smolpipe_lab::{evaluate, fit, load_dataset, FitConfig, Pipeline, SampleMedia, TaskSet};

use crate::error::{CliError, Kind, Result};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `generate-dataset`.
    pub dataset: PathBuf,
    /// Model config file; `vocab_size` is taken from the dataset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    /// Seeds the initialization and minibatch order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3e-3)]
    pub lr: f64,
    /// Stop once a step's loss falls below this; 0 runs every step.
    #[arg(long, default_value_t = 0.05)]
    pub target_loss: f64,
    /// Examples per step; 0 trains on the whole set.
    #[arg(long, default_value_t = 0)]
    pub batch_size: usize,
    /// Greedy-decode every sample after training and report exact matches.
    #[arg(long)]
    pub eval: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn model_config(path: &Path, vocab_size: usize) -> Result<ModelConfig> {
    let mut kv = super::load_kv(path)?;
    kv.insert("vocab_size", vocab_size);
    ModelConfig::from_kv(&kv).map_err(|e| CliError::from(e).context(path.display()))
}

/// Largest tile grid any image in `set` is split into.
fn max_grid(set: &TaskSet, cap: usize, tile: usize) -> usize {
    set.samples
        .iter()
        .filter_map(|s| match &s.media {
            SampleMedia::Image(img) => {
                let (w, h) = capped_dims(img.width(), img.height(), cap);
                let g = grid_layout(w, h, tile);
                Some(g.rows.max(g.cols))
            }
            SampleMedia::Video(_) => None,
        })
        .max()
        .unwrap_or(0)
        .max(1)
}

fn build_pipeline(set: &TaskSet, config: Option<&Path>) -> Result<Pipeline> {
    let probe = Pipeline::for_tasks([set], 1)?;
    let tile = match config {
        Some(path) => model_config(path, probe.vocab.len())?.tile_size,
        None => probe.model.tile_size,
    };
    let mut pipeline = Pipeline::for_tasks([set], max_grid(set, probe.longest_edge_cap, tile))?;
    if let Some(path) = config {
        pipeline.model = model_config(path, pipeline.vocab.len())?;
        pipeline.chat.tokens_per_tile = pipeline.model.tokens_per_tile();
        pipeline.chat.tokens_per_frame = pipeline.model.tokens_per_tile();
    }
    Ok(pipeline)
}

pub fn run(args: &TrainArgs) -> Result<()> {
    RunManifest::new("train-toy", &args.out)
        .config(args.config.as_deref())
        .seed(args.seed)
        .inputs([args.dataset.as_path()])
        .write()?;
    let (_, set) = load_dataset(&args.dataset)?;
    let pipeline = build_pipeline(&set, args.config.as_deref())?;

    let limit = pipeline.model.context_limit;
    let mut overflowing = Vec::new();
    for s in &set.samples {
        let len = pipeline.conversation(s)?.0.len();
        if len > limit {
            overflowing.push(format!("{} ({len} tokens)", s.id));
        }
    }
    if !overflowing.is_empty() {
        return Err(CliError::new(
            Kind::ContextOverflow,
            format!("context limit {limit} exceeded by sample {}", overflowing.join(", ")),
        ));
    }

    let examples = pipeline.train_examples(&set.samples)?;
    let mut model = ToyVlm::init(pipeline.model.clone(), args.seed)?;
    let mut fc = FitConfig::new(args.steps, args.lr);
    fc.seed = args.seed;
    fc.batch_size = (args.batch_size > 0).then_some(args.batch_size);
    if args.target_loss > 0.0 {
        fc = fc.with_target(args.target_loss);
    }
    eprintln!(
        "training {} parameters on {} samples for up to {} steps",
        model.num_params(),
        examples.len(),
        args.steps
    );
    let report = fit(&mut model, &examples, &fc, |row| {
        if row.step % 50 == 0 {
            eprintln!("step {:>5} loss {:.4}", row.step, row.loss);
        }
    })?;

    model.save(args.out.join("checkpoint"))?;
    pipeline.vocab.save(args.out.join("vocab.txt"))?;
    report.log.save(args.out.join("loss.csv"))?;
    if report.steps == 0 {
        println!("steps=0 checkpoint=initialization");
    } else {
        println!("steps={} final_loss={:.6}", report.steps, report.final_loss);
    }
    if args.eval {
        let max_new = set
            .samples
            .iter()
            .map(|s| pipeline.vocab.encode(&s.answer).len())
            .max()
            .unwrap_or(0)
            + 2;
        let ev = evaluate(&model, &pipeline, &set.samples, max_new)?;
        println!("exact_match={}/{}", ev.correct, ev.total());
    }
    Ok(())
}
