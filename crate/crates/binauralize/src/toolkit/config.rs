//! Pipeline configuration with flat `key=value` file support. Every field
//! defaults to the stock processing constants.

use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{StftConfig, WindowKind};

/// End-to-end pipeline settings.
#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub stft: StftConfig,
    /// Inference segment length in samples (0.63 s at 16 kHz).
    pub seg_len: usize,
    /// Inference hop between segment starts (0.05 s at 16 kHz).
    pub infer_hop: usize,
    /// Visual crops per segment.
    pub k_crops: usize,
    pub crop_height: usize,
    pub crop_width: usize,
    pub lambda_rl: f64,
    pub lambda0: f64,
    /// Guard epsilon in the confidence weights.
    pub eps: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            stft: StftConfig::default(),
            seg_len: 10_080,
            infer_hop: 800,
            k_crops: 3,
            crop_height: 224,
            crop_width: 448,
            lambda_rl: 5.0,
            lambda0: 2.0,
            eps: 1e-8,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        if self.sample_rate == 0 {
            return Err(Error::InvalidArg("sample_rate must be positive".into()));
        }
        if self.infer_hop == 0 || self.seg_len < self.infer_hop {
            return Err(Error::InvalidArg(
                "need seg_len >= infer_hop >= 1".into(),
            ));
        }
        if self.k_crops == 0 {
            return Err(Error::InvalidArg("k_crops must be at least 1".into()));
        }
        if self.crop_height == 0 || self.crop_width == 0 {
            return Err(Error::InvalidArg("crop dims must be positive".into()));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad value '{}' for key '{}'", value, key)))
}

/// Parses `key=value` lines over the defaults. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Format(format!("line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim();
        match key {
            "sample_rate" => cfg.sample_rate = parse_num(key, value)?,
            "window" => cfg.stft.window_len = parse_num(key, value)?,
            "hop" => cfg.stft.hop_len = parse_num(key, value)?,
            "fft" => cfg.stft.fft_len = parse_num(key, value)?,
            "window_kind" => match value.trim() {
                "hann" => cfg.stft.window_kind = WindowKind::Hann,
                other => {
                    return Err(Error::Format(format!("unknown window kind '{}'", other)))
                }
            },
            "seg_len" => cfg.seg_len = parse_num(key, value)?,
            "infer_hop" => cfg.infer_hop = parse_num(key, value)?,
            "k_crops" => cfg.k_crops = parse_num(key, value)?,
            "crop_height" => cfg.crop_height = parse_num(key, value)?,
            "crop_width" => cfg.crop_width = parse_num(key, value)?,
            "lambda_rl" => cfg.lambda_rl = parse_num(key, value)?,
            "lambda0" => cfg.lambda0 = parse_num(key, value)?,
            "eps" => cfg.eps = parse_num(key, value)?,
            other => return Err(Error::Format(format!("unknown config key '{}'", other))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a config file over the defaults.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
