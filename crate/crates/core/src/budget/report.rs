use std::io::Write;

use super::{
    allocation_report, image_token_count, ram_estimate, video_token_count, BudgetError, PipelineConfig, Regime, Result,
    Workload,
};

/// One configuration's token, context and memory budget for a workload.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetReport {
    pub name: String,
    pub encoder_params: u64,
    pub lm_params: u64,
    pub total_params: u64,
    pub encoder_ratio: f64,
    pub regime: Regime,
    pub sub_images: usize,
    pub image_visual_tokens: usize,
    pub image_markers: usize,
    pub video_tokens: usize,
    pub seq_len: usize,
    pub context_limit: usize,
    /// `seq_len / context_limit`.
    pub occupancy: f64,
    pub overflow: bool,
    pub kv_bytes: u64,
    pub param_bytes: u64,
    pub activation_bytes: u64,
    pub ram_bytes: u64,
}

impl BudgetReport {
    pub fn new(cfg: &PipelineConfig, work: &Workload) -> Self {
        let image = image_token_count(cfg, work.image_width, work.image_height);
        let frames = work.video_frames.unwrap_or(cfg.frames_per_video);
        let video = video_token_count(cfg, frames);
        let seq_len = work.images * image.total() + work.videos * video + work.text_tokens;
        let alloc = allocation_report(cfg.encoder_params, cfg.lm_params);
        let ram = ram_estimate(cfg, seq_len as u64, work.batch, work.bytes_per_scalar);
        Self {
            name: cfg.name.clone(),
            encoder_params: cfg.encoder_params,
            lm_params: cfg.lm_params,
            total_params: cfg.total_params(),
            encoder_ratio: alloc.ratio,
            regime: alloc.regime,
            sub_images: image.sub_images,
            image_visual_tokens: image.visual,
            image_markers: image.markers,
            video_tokens: video,
            seq_len,
            context_limit: cfg.context_limit,
            occupancy: seq_len as f64 / cfg.context_limit as f64,
            overflow: seq_len > cfg.context_limit,
            kv_bytes: ram.kv,
            param_bytes: ram.params,
            activation_bytes: ram.activations,
            ram_bytes: ram.total(),
        }
    }
}

/// Reports for every config, ordered by total parameters (ties keep input order).
pub fn compare_configs(configs: &[PipelineConfig], work: &Workload) -> Result<Vec<BudgetReport>> {
    if configs.is_empty() {
        return Err(BudgetError::Empty);
    }
    let mut rows: Vec<BudgetReport> = configs.iter().map(|c| BudgetReport::new(c, work)).collect();
    rows.sort_by_key(|r| r.total_params);
    Ok(rows)
}

const HEADER: [&str; 18] = [
    "name",
    "encoder_params",
    "lm_params",
    "total_params",
    "encoder_ratio",
    "regime",
    "sub_images",
    "image_visual_tokens",
    "image_markers",
    "video_tokens",
    "seq_len",
    "context_limit",
    "occupancy",
    "overflow",
    "kv_bytes",
    "param_bytes",
    "activation_bytes",
    "ram_bytes",
];

pub fn write_csv<W: Write>(out: W, rows: &[BudgetReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.encoder_params.to_string(),
            r.lm_params.to_string(),
            r.total_params.to_string(),
            format!("{:.4}", r.encoder_ratio),
            r.regime.to_string(),
            r.sub_images.to_string(),
            r.image_visual_tokens.to_string(),
            r.image_markers.to_string(),
            r.video_tokens.to_string(),
            r.seq_len.to_string(),
            r.context_limit.to_string(),
            format!("{:.4}", r.occupancy),
            r.overflow.to_string(),
            r.kv_bytes.to_string(),
            r.param_bytes.to_string(),
            r.activation_bytes.to_string(),
            r.ram_bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
