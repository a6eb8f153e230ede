//! End-to-end clip spatialization: segment planning, per-segment candidate
//! generation, two-stage fusion, and reassembly.

use crate::audionet::{spatialize_segment, NetParams};
use crate::error::{Error, Result};
use crate::refine::{
    fuse_inter_segment, fuse_intra_segment, plan_segments, FusionCandidate, Segment,
    SegmentPrediction, WeightMode,
};
use crate::spectral::{stft, ComplexSpectrogram, Waveform};
use crate::toolkit::config::PipelineConfig;
use crate::visual::{EncoderParams, FrameTensor};

/// Produces the candidate triples for one segment. The network path applies
/// the model per visual crop; tests inject hand-built candidates through the
/// same interface.
pub trait CandidateSource {
    fn candidates(
        &self,
        seg_index: usize,
        segment: &Segment,
        seg_mono: &ComplexSpectrogram,
    ) -> Result<Vec<FusionCandidate>>;
}

/// Where the per-segment video frame comes from.
#[derive(Debug, Clone, Copy)]
pub enum FrameSource<'a> {
    /// One frame serves every segment (synthetic runs).
    Single(&'a FrameTensor),
    /// One frame per segment, indexed by segment position.
    PerSegment(&'a [FrameTensor]),
}

impl<'a> FrameSource<'a> {
    fn frame(&self, seg_index: usize) -> Result<&'a FrameTensor> {
        match self {
            FrameSource::Single(frame) => Ok(frame),
            FrameSource::PerSegment(frames) => frames.get(seg_index).ok_or_else(|| {
                Error::InvalidArg(format!("no frame for segment {}", seg_index))
            }),
        }
    }
}

/// Evenly spaced horizontal crop offsets: left, center, right for `k = 3`.
pub fn horizontal_crops(
    frame: &FrameTensor,
    crop_height: usize,
    crop_width: usize,
    k: usize,
) -> Result<Vec<FrameTensor>> {
    if crop_height > frame.height() || crop_width > frame.width() {
        return Err(Error::InvalidArg(format!(
            "crop {}x{} exceeds frame {}x{}",
            crop_height,
            crop_width,
            frame.height(),
            frame.width()
        )));
    }
    let top = (frame.height() - crop_height) / 2;
    let span = frame.width() - crop_width;
    let mut crops = Vec::with_capacity(k);
    for i in 0..k {
        let left = if k == 1 {
            span / 2
        } else {
            (i * span) / (k - 1)
        };
        crops.push(frame.crop(top, left, crop_height, crop_width)?);
    }
    Ok(crops)
}

/// The model-backed candidate source: K crop-wise forward passes per segment.
pub struct NetworkCandidates<'a> {
    pub frames: FrameSource<'a>,
    pub enc: &'a EncoderParams,
    pub net: &'a NetParams,
    pub cfg: &'a PipelineConfig,
}

impl CandidateSource for NetworkCandidates<'_> {
    fn candidates(
        &self,
        seg_index: usize,
        _segment: &Segment,
        seg_mono: &ComplexSpectrogram,
    ) -> Result<Vec<FusionCandidate>> {
        let frame = self.frames.frame(seg_index)?;
        let crops = horizontal_crops(
            frame,
            self.cfg.crop_height,
            self.cfg.crop_width,
            self.cfg.k_crops,
        )?;
        crops
            .iter()
            .map(|crop| spatialize_segment(seg_mono, crop, self.enc, self.net))
            .collect()
    }
}

/// Runs the segment pipeline over any candidate source. With `refine_on`
/// false both fusion stages fall back to uniform averaging.
pub fn run_pipeline(
    mono: &Waveform,
    source: &dyn CandidateSource,
    cfg: &PipelineConfig,
    refine_on: bool,
) -> Result<(Waveform, Waveform)> {
    cfg.validate()?;
    if mono.is_empty() {
        return Err(Error::EmptyInput);
    }
    if mono.sample_rate() != cfg.sample_rate {
        return Err(Error::InvalidArg(format!(
            "clip is at {} Hz but the pipeline expects {}",
            mono.sample_rate(),
            cfg.sample_rate
        )));
    }
    let mode = if refine_on {
        WeightMode::Confidence { eps: cfg.eps }
    } else {
        WeightMode::Uniform
    };
    let plan = plan_segments(mono.len(), cfg.seg_len, cfg.infer_hop)?;

    let mut predictions = Vec::with_capacity(plan.segments.len());
    for (i, seg) in plan.segments.iter().enumerate() {
        let seg_wave = Waveform::new(
            mono.samples()[seg.start..seg.end()].to_vec(),
            mono.sample_rate(),
        )?;
        let seg_mono = stft(&seg_wave, cfg.stft)?;
        let cands = source.candidates(i, seg, &seg_mono)?;
        let fusion = fuse_intra_segment(&cands, &seg_mono, seg.len, mode)?;
        predictions.push(SegmentPrediction {
            segment: *seg,
            fusion,
            mono_spec: seg_mono,
        });
    }
    fuse_inter_segment(&plan, &predictions, mode)
}

/// Full model path: mono clip plus frames through the encoder, network and
/// two-stage fusion. Output length always equals the input length.
pub fn spatialize_clip(
    mono: &Waveform,
    frames: FrameSource<'_>,
    enc: &EncoderParams,
    net: &NetParams,
    cfg: &PipelineConfig,
    refine_on: bool,
) -> Result<(Waveform, Waveform)> {
    let source = NetworkCandidates {
        frames,
        enc,
        net,
        cfg,
    };
    run_pipeline(mono, &source, cfg, refine_on)
}
