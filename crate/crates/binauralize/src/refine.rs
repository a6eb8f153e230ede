//! Confidence-weighted two-stage test-time refinement.
//!
//! Any binaural candidate `(S_L, S_R, S_D)` is scored by two physically
//! motivated checks: how well its implied mono `(S_L + S_R)/2` matches the
//! input mono magnitude, and how consistent the phase of the reconstructed
//! difference `S_L - S_R` is with the auxiliary difference branch. The two
//! reliability weights combine multiplicatively (product of experts). Stage 1
//! fuses the K crop-wise candidates of one segment into a single waveform;
//! stage 2 fuses the overlapping segment-level waveforms over each hop frame
//! and reassembles the clip.

use crate::error::{Error, Result};
use crate::spectral::{istft, ComplexSpectrogram, Waveform};

/// One `(S_L, S_R, S_D)` prediction triple over a shared grid.
#[derive(Debug, Clone)]
pub struct FusionCandidate {
    pub s_l: ComplexSpectrogram,
    pub s_r: ComplexSpectrogram,
    pub s_d: ComplexSpectrogram,
}

impl FusionCandidate {
    pub fn new(
        s_l: ComplexSpectrogram,
        s_r: ComplexSpectrogram,
        s_d: ComplexSpectrogram,
    ) -> Result<Self> {
        if !s_l.same_shape(&s_r) || !s_l.same_shape(&s_d) {
            return Err(Error::ShapeMismatch(
                "candidate spectrograms must share dims and config".into(),
            ));
        }
        Ok(Self { s_l, s_r, s_d })
    }

    /// Convex (or arbitrary linear) combination of candidate triples.
    pub fn weighted_sum(cands: &[FusionCandidate], weights: &[f64]) -> Result<FusionCandidate> {
        if cands.is_empty() {
            return Err(Error::NoCandidates);
        }
        if cands.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} candidates vs {} weights",
                cands.len(),
                weights.len()
            )));
        }
        let terms_l: Vec<_> = weights
            .iter()
            .zip(cands)
            .map(|(w, c)| (*w, &c.s_l))
            .collect();
        let terms_r: Vec<_> = weights
            .iter()
            .zip(cands)
            .map(|(w, c)| (*w, &c.s_r))
            .collect();
        let terms_d: Vec<_> = weights
            .iter()
            .zip(cands)
            .map(|(w, c)| (*w, &c.s_d))
            .collect();
        FusionCandidate::new(
            ComplexSpectrogram::weighted_sum(&terms_l)?,
            ComplexSpectrogram::weighted_sum(&terms_r)?,
            ComplexSpectrogram::weighted_sum(&terms_d)?,
        )
    }
}

/// The two consistency errors, their reciprocal weights, and the combined
/// product-of-experts weight.
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceScore {
    pub e_mono: f64,
    pub w_mono: f64,
    pub e_phase: f64,
    pub w_phase: f64,
    pub w: f64,
    pub eps: f64,
}

/// Mono consistency: mean absolute magnitude gap between the candidate's
/// implied mono `(S_L + S_R)/2` and the input mono.
pub fn mono_consistency(
    c: &FusionCandidate,
    s_m: &ComplexSpectrogram,
    eps: f64,
) -> Result<(f64, f64)> {
    if !c.s_l.same_shape(s_m) {
        return Err(Error::ShapeMismatch(
            "candidate vs mono spectrogram".into(),
        ));
    }
    let n = s_m.data().len() as f64;
    let mut acc = 0.0;
    for ((l, r), m) in c.s_l.data().iter().zip(c.s_r.data()).zip(s_m.data()) {
        let pred = (l + r) * 0.5;
        acc += (pred.norm() - m.norm()).abs();
    }
    let e_mono = acc / n;
    Ok((e_mono, 1.0 / (e_mono + eps)))
}

/// Principal-value wrap of a phase difference to `(-pi, pi]`.
#[inline]
fn wrap_phase(d: f64) -> f64 {
    d.sin().atan2(d.cos())
}

/// Interaural phase consistency: mean absolute wrapped phase gap between the
/// reconstructed difference `S_L - S_R` and the auxiliary difference branch,
/// taken over all cells.
pub fn phase_consistency(c: &FusionCandidate, eps: f64) -> Result<(f64, f64)> {
    let n = c.s_d.data().len() as f64;
    let mut acc = 0.0;
    for ((l, r), d) in c.s_l.data().iter().zip(c.s_r.data()).zip(c.s_d.data()) {
        let recon = l - r;
        let delta = wrap_phase(recon.im.atan2(recon.re) - d.im.atan2(d.re));
        acc += delta.abs();
    }
    let e_phase = acc / n;
    Ok((e_phase, 1.0 / (e_phase + eps)))
}

/// Product-of-experts confidence `W = W_mono * W_phase`.
pub fn score_candidate(
    c: &FusionCandidate,
    s_m: &ComplexSpectrogram,
    eps: f64,
) -> Result<ConfidenceScore> {
    let (e_mono, w_mono) = mono_consistency(c, s_m, eps)?;
    let (e_phase, w_phase) = phase_consistency(c, eps)?;
    Ok(ConfidenceScore {
        e_mono,
        w_mono,
        e_phase,
        w_phase,
        w: w_mono * w_phase,
        eps,
    })
}

/// How fusion weights are assigned.
#[derive(Debug, Clone, Copy)]
pub enum WeightMode {
    /// Confidence scoring with the given epsilon guard.
    Confidence { eps: f64 },
    /// Equal weights; the naive averaging baseline.
    Uniform,
}

/// Stage-1 output for one segment: fused waveforms plus the identically
/// weighted segment-level candidate triple.
#[derive(Debug, Clone)]
pub struct SegmentFusion {
    pub wave_l: Waveform,
    pub wave_r: Waveform,
    pub candidate: FusionCandidate,
    /// Normalized candidate weights (sum 1).
    pub weights: Vec<f64>,
}

fn normalized_weights(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Stage 1: fuse the K crop-wise candidates of one segment.
///
/// Waveforms are fused post-iSTFT; by linearity the returned candidate triple
/// is exactly consistent with the waveform sum.
pub fn fuse_intra_segment(
    cands: &[FusionCandidate],
    s_m: &ComplexSpectrogram,
    seg_len: usize,
    mode: WeightMode,
) -> Result<SegmentFusion> {
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    let raw: Vec<f64> = match mode {
        WeightMode::Uniform => vec![1.0; cands.len()],
        WeightMode::Confidence { eps } => cands
            .iter()
            .map(|c| score_candidate(c, s_m, eps).map(|s| s.w))
            .collect::<Result<_>>()?,
    };
    let weights = normalized_weights(&raw);

    let mut wave_l = vec![0.0f64; seg_len];
    let mut wave_r = vec![0.0f64; seg_len];
    for (c, w) in cands.iter().zip(&weights) {
        let al = istft(&c.s_l, seg_len)?;
        let ar = istft(&c.s_r, seg_len)?;
        for (acc, s) in wave_l.iter_mut().zip(al.samples()) {
            *acc += w * s;
        }
        for (acc, s) in wave_r.iter_mut().zip(ar.samples()) {
            *acc += w * s;
        }
    }
    let sample_rate = cands[0].s_l.sample_rate();
    Ok(SegmentFusion {
        wave_l: Waveform::new(wave_l, sample_rate)?,
        wave_r: Waveform::new(wave_r, sample_rate)?,
        candidate: FusionCandidate::weighted_sum(cands, &weights)?,
        weights,
    })
}

/// One inference window `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

impl Segment {
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn contains(&self, sample: usize) -> bool {
        sample >= self.start && sample < self.end()
    }
}

/// The minimal overlap unit `[start, end)`, one hop long except at the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopFrame {
    pub start: usize,
    pub end: usize,
}

/// Sliding-window decomposition of a clip with the hop-frame coverage map.
#[derive(Debug, Clone)]
pub struct SegmentPlan {
    pub total_len: usize,
    pub seg_len: usize,
    pub hop: usize,
    pub segments: Vec<Segment>,
    pub hop_frames: Vec<HopFrame>,
    /// Per hop frame, indices of every segment intersecting it.
    pub coverage: Vec<Vec<usize>>,
}

impl SegmentPlan {
    /// Number of hop-aligned (non-tail) segments.
    pub fn regular_segments(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.start % self.hop == 0 && s.len == self.seg_len.min(self.total_len))
            .count()
    }
}

/// Plans segment starts at multiples of `hop`, an optional clamped tail
/// segment, and the hop frames tiling `[0, total_len)`.
pub fn plan_segments(total_len: usize, seg_len: usize, hop: usize) -> Result<SegmentPlan> {
    if hop == 0 || seg_len < hop {
        return Err(Error::InvalidArg(format!(
            "need seg_len >= hop >= 1, got seg_len {} hop {}",
            seg_len, hop
        )));
    }
    if total_len == 0 {
        return Err(Error::EmptyInput);
    }

    let mut segments = Vec::new();
    if total_len < seg_len {
        segments.push(Segment {
            start: 0,
            len: total_len,
        });
    } else {
        let mut start = 0;
        while start + seg_len <= total_len {
            segments.push(Segment {
                start,
                len: seg_len,
            });
            start += hop;
        }
        let last_end = segments.last().map(Segment::end).unwrap_or(0);
        if last_end < total_len {
            segments.push(Segment {
                start: total_len - seg_len,
                len: seg_len,
            });
        }
    }

    let mut hop_frames = Vec::new();
    let mut start = 0;
    while start < total_len {
        hop_frames.push(HopFrame {
            start,
            end: (start + hop).min(total_len),
        });
        start += hop;
    }

    let coverage = hop_frames
        .iter()
        .map(|hf| {
            segments
                .iter()
                .enumerate()
                .filter(|(_, seg)| seg.start < hf.end && hf.start < seg.end())
                .map(|(i, _)| i)
                .collect()
        })
        .collect();

    Ok(SegmentPlan {
        total_len,
        seg_len,
        hop,
        segments,
        hop_frames,
        coverage,
    })
}

/// Everything stage 2 needs from one processed segment.
#[derive(Debug, Clone)]
pub struct SegmentPrediction {
    pub segment: Segment,
    pub fusion: SegmentFusion,
    /// The segment's own mono spectrogram, used to re-score its candidate.
    pub mono_spec: ComplexSpectrogram,
}

/// Stage 2: score each segment-level candidate once, then fuse waveforms per
/// hop frame and assemble the full clip.
///
/// Because `seg_len` need not be a multiple of `hop`, a covering segment may
/// overlap only part of a hop frame; weights are renormalized per sample over
/// the segments actually containing that sample, keeping every output sample
/// a convex combination of candidate samples.
pub fn fuse_inter_segment(
    plan: &SegmentPlan,
    segs: &[SegmentPrediction],
    mode: WeightMode,
) -> Result<(Waveform, Waveform)> {
    if segs.len() != plan.segments.len() {
        return Err(Error::ShapeMismatch(format!(
            "plan has {} segments, got {} predictions",
            plan.segments.len(),
            segs.len()
        )));
    }
    for (pred, seg) in segs.iter().zip(&plan.segments) {
        if pred.segment != *seg {
            return Err(Error::ShapeMismatch(
                "segment predictions out of order".into(),
            ));
        }
        if pred.fusion.wave_l.len() != seg.len || pred.fusion.wave_r.len() != seg.len {
            return Err(Error::ShapeMismatch(format!(
                "segment at {} expects {} samples",
                seg.start, seg.len
            )));
        }
    }

    let scores: Vec<f64> = match mode {
        WeightMode::Uniform => vec![1.0; segs.len()],
        WeightMode::Confidence { eps } => segs
            .iter()
            .map(|p| score_candidate(&p.fusion.candidate, &p.mono_spec, eps).map(|s| s.w))
            .collect::<Result<_>>()?,
    };

    let mut out_l = vec![0.0f64; plan.total_len];
    let mut out_r = vec![0.0f64; plan.total_len];
    for (hf, cover) in plan.hop_frames.iter().zip(&plan.coverage) {
        if cover.is_empty() {
            return Err(Error::InvalidArg(format!(
                "internal: hop frame at {} has no covering segment",
                hf.start
            )));
        }
        for n in hf.start..hf.end {
            let mut norm = 0.0;
            for &s in cover {
                if plan.segments[s].contains(n) {
                    norm += scores[s];
                }
            }
            if norm <= 0.0 {
                return Err(Error::InvalidArg(format!(
                    "internal: sample {} has no covering segment",
                    n
                )));
            }
            let mut acc_l = 0.0;
            let mut acc_r = 0.0;
            for &s in cover {
                let seg = plan.segments[s];
                if seg.contains(n) {
                    let w = scores[s] / norm;
                    acc_l += w * segs[s].fusion.wave_l.samples()[n - seg.start];
                    acc_r += w * segs[s].fusion.wave_r.samples()[n - seg.start];
                }
            }
            out_l[n] = acc_l;
            out_r[n] = acc_r;
        }
    }
    let sample_rate = segs[0].fusion.wave_l.sample_rate();
    Ok((
        Waveform::new(out_l, sample_rate)?,
        Waveform::new(out_r, sample_rate)?,
    ))
}
