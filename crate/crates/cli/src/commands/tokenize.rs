//! `tokenize-image`: tile an image with a pipeline config and dump the
//! rendered token block.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use smolpipe_core::prompt::{extend_vocab, render_image_block, PositionMode, Vocab};
use smolpipe_core::vision::{preprocess_image, RawImage, MAX_GRID};

use crate::error::{CliError, Kind, Result};
use crate::manifest::RunManifest;

#[derive(Debug, Args)]
pub struct TokenizeArgs {
    /// PPM (P6) image.
    pub image: PathBuf,
    /// Pipeline config file or preset name.
    #[arg(long, default_value = "smolvlm-256m")]
    pub config: String,
    /// How tile coordinates are spelled: learned or string.
    #[arg(long, default_value = "learned")]
    pub mode: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &TokenizeArgs) -> Result<()> {
    let (cfg, cfg_path) = super::pipeline_config(&args.config)?;
    RunManifest::new("tokenize-image", &args.out)
        .config(cfg_path.as_deref())
        .inputs([args.image.as_path()])
        .write()?;
    let mode: PositionMode = args.mode.parse()?;
    cfg.validate()?;
    let img = RawImage::load_ppm(&args.image)?;
    let grid = preprocess_image(&img, cfg.longest_edge_cap, cfg.tile_size)?;
    let layout = grid.layout();
    let vocab = extend_vocab(&Vocab::byte_level(), MAX_GRID, MAX_GRID)?;
    let per_tile = cfg.tokens_per_tile();
    let block = render_image_block(layout, mode, &vocab, per_tile)?;
    if block.len() > cfg.context_limit {
        return Err(CliError::new(
            Kind::Geometry,
            format!(
                "image block of {} tokens exceeds the context limit {}",
                block.len(),
                cfg.context_limit
            ),
        ));
    }

    let mut report = format!(
        "tiles={} global=1 visual_tokens={}\ngrid={}x{} mode={mode} total_tokens={}\n",
        layout.tile_count(),
        block.placeholders.len(),
        layout.rows,
        layout.cols,
        block.len()
    );
    for row in 0..layout.rows {
        for col in 0..layout.cols {
            let _ = writeln!(report, "tile row={} col={} tokens={per_tile}", row + 1, col + 1);
        }
    }
    let _ = writeln!(report, "global tokens={per_tile}");
    print!("{report}");
    super::write_file(&args.out.join("layout.txt"), report.as_bytes())?;

    let dump_path = args.out.join("tokens.csv");
    let dump = || -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(&dump_path)?;
        w.write_record(["position", "token_id", "token"])?;
        for (i, &id) in block.ids.iter().enumerate() {
            let text = vocab.token_str(id).unwrap_or_default();
            w.write_record([i.to_string(), id.to_string(), text])?;
        }
        w.flush()?;
        Ok(())
    };
    dump().map_err(|e| CliError::new(Kind::Internal, e.to_string()).context(dump_path.display()))
}
