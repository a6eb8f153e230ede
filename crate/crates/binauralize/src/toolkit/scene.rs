//! Synthetic audio-visual scenes: a Gaussian blob frame plus a stereo pair
//! with controlled interaural level and time differences.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{mono_mix, Waveform};
use crate::visual::FrameTensor;

/// Largest |ITD| accepted, one analysis hop at the stock config.
pub const MAX_ITD_SAMPLES: i32 = 160;

/// Audio source inside a scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    Tone { freq_hz: f64 },
    Noise,
}

/// A synthetic scene: where the source sits visually and how its audio is
/// panned.
#[derive(Debug, Clone, Copy)]
pub struct SceneSpec {
    /// Lateral position in `[-1, 1]`; -1 is far left.
    pub azimuth: f64,
    /// Gaussian blob sigma in pixels.
    pub blob_radius: f64,
    /// Interaural level difference (dB); the near ear is louder.
    pub ild_db: f64,
    /// Integer delay applied to the far ear.
    pub itd_samples: i32,
    pub source: SourceKind,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub frame_height: usize,
    pub frame_width: usize,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            azimuth: 0.0,
            blob_radius: 40.0,
            ild_db: 0.0,
            itd_samples: 0,
            source: SourceKind::Tone { freq_hz: 440.0 },
            duration_s: 1.0,
            sample_rate: 16_000,
            frame_height: 240,
            frame_width: 480,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.azimuth) {
            return Err(Error::InvalidArg(format!(
                "azimuth {} outside [-1, 1]",
                self.azimuth
            )));
        }
        if !self.blob_radius.is_finite() || self.blob_radius <= 0.0 {
            return Err(Error::InvalidArg("blob radius must be positive".into()));
        }
        if !self.ild_db.is_finite() {
            return Err(Error::InvalidArg("ild must be finite".into()));
        }
        if self.itd_samples.abs() >= MAX_ITD_SAMPLES {
            return Err(Error::InvalidArg(format!(
                "|itd| {} must stay below one hop ({})",
                self.itd_samples, MAX_ITD_SAMPLES
            )));
        }
        if !self.duration_s.is_finite() || self.duration_s <= 0.0 {
            return Err(Error::InvalidArg("duration must be positive".into()));
        }
        if self.sample_rate == 0 || self.frame_height == 0 || self.frame_width == 0 {
            return Err(Error::InvalidArg("rates and dims must be positive".into()));
        }
        Ok(())
    }
}

fn blob_frame(spec: &SceneSpec) -> Result<FrameTensor> {
    let (h, w) = (spec.frame_height, spec.frame_width);
    // Map azimuth -1..1 onto the discrete column range so a centered source
    // is exactly symmetric on the pixel grid.
    let cx = (spec.azimuth + 1.0) / 2.0 * (w as f64 - 1.0);
    let cy = (h as f64 - 1.0) / 2.0;
    let two_sigma_sq = 2.0 * spec.blob_radius * spec.blob_radius;
    let mut data = Vec::with_capacity(3 * h * w);
    for _c in 0..3 {
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let v = 0.05 + 0.95 * (-(dx * dx + dy * dy) / two_sigma_sq).exp();
                data.push(v.min(1.0));
            }
        }
    }
    FrameTensor::new(h, w, data)
}

fn delay(samples: &[f64], by: usize) -> Vec<f64> {
    let mut out = vec![0.0; samples.len()];
    for (i, s) in samples.iter().enumerate() {
        if i + by < out.len() {
            out[i + by] = *s;
        }
    }
    out
}

/// Builds a scene: the frame, the panned/delayed left and right waveforms,
/// and their mono mix `A_M = A_L + A_R`.
pub fn synth_scene(
    spec: &SceneSpec,
    seed: u64,
) -> Result<(FrameTensor, Waveform, Waveform, Waveform)> {
    spec.validate()?;
    let frame = blob_frame(spec)?;
    let len = (spec.duration_s * spec.sample_rate as f64).round() as usize;
    if len == 0 {
        return Err(Error::InvalidArg("duration rounds to zero samples".into()));
    }

    let base: Vec<f64> = match spec.source {
        SourceKind::Tone { freq_hz } => (0..len)
            .map(|i| {
                0.5 * (2.0 * std::f64::consts::PI * freq_hz * i as f64
                    / spec.sample_rate as f64)
                    .sin()
            })
            .collect(),
        SourceKind::Noise => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect()
        }
    };

    // Level: the near ear gets +ild/2 dB, the far ear -ild/2 dB.
    let side = if spec.azimuth == 0.0 {
        0.0
    } else {
        spec.azimuth.signum()
    };
    let g_l = 10f64.powf(-side * spec.ild_db / 40.0);
    let g_r = 10f64.powf(side * spec.ild_db / 40.0);

    let mut left: Vec<f64> = base.iter().map(|s| s * g_l).collect();
    let mut right: Vec<f64> = base.iter().map(|s| s * g_r).collect();

    // Time: the far ear is delayed. For a centered source the right ear is
    // the conventional "far" side.
    let d = spec.itd_samples.unsigned_abs() as usize;
    if d > 0 {
        if spec.azimuth > 0.0 {
            left = delay(&left, d);
        } else {
            right = delay(&right, d);
        }
    }

    let a_l = Waveform::new(left, spec.sample_rate)?;
    let a_r = Waveform::new(right, spec.sample_rate)?;
    let a_m = mono_mix(&a_l, &a_r)?;
    Ok((frame, a_l, a_r, a_m))
}

/// The stock left-blob scenes used by the prior-training demonstration:
/// wide blobs on the left half so the toy features vary smoothly across the
/// full width.
pub fn demo_scenes() -> Vec<SceneSpec> {
    [(-0.8, 240.0), (-0.5, 280.0), (-0.3, 320.0)]
        .into_iter()
        .map(|(azimuth, blob_radius)| SceneSpec {
            azimuth,
            blob_radius,
            frame_height: 224,
            frame_width: 448,
            ..SceneSpec::default()
        })
        .collect()
}
