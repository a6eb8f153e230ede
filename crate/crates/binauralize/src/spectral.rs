//! Complex STFT analysis/synthesis and elementary spectrogram algebra.
//!
//! Analysis zero-pads the signal by half a window on each side so every
//! retained sample is covered by a full set of windows, which makes the frame
//! count deterministic: `U = 1 + (len + 2*pad - window_len) / hop_len`.
//! Synthesis is normalized weighted overlap-add (divide by the squared-window
//! overlap sum), so `istft(stft(x))` reproduces `x` to floating-point
//! precision even for hop/window pairs that do not satisfy plain COLA.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Analysis/synthesis window shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Periodic Hann window `0.5 * (1 - cos(2*pi*n/N))`.
    Hann,
}

/// STFT framing parameters.
///
/// The default is the 16 kHz processing setup used throughout the crate:
/// 512-sample Hann window, hop 160 (10 ms), 512-point FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop_len: usize,
    pub fft_len: usize,
    pub window_kind: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 512,
            hop_len: 160,
            fft_len: 512,
            window_kind: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    /// Checks `0 < hop_len <= window_len <= fft_len`.
    pub fn validate(&self) -> Result<()> {
        if self.hop_len == 0 {
            return Err(Error::BadStftConfig("hop_len must be positive".into()));
        }
        if self.hop_len > self.window_len {
            return Err(Error::BadStftConfig(format!(
                "hop_len {} exceeds window_len {}",
                self.hop_len, self.window_len
            )));
        }
        if self.window_len > self.fft_len {
            return Err(Error::BadStftConfig(format!(
                "window_len {} exceeds fft_len {}",
                self.window_len, self.fft_len
            )));
        }
        Ok(())
    }

    /// Zero padding added on each side before framing.
    pub fn pad_len(&self) -> usize {
        self.window_len / 2
    }

    /// One-sided frequency bin count `fft_len/2 + 1`.
    pub fn freq_bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    /// Frame count for a signal of `len` samples under the padding scheme.
    pub fn num_frames(&self, len: usize) -> usize {
        1 + (len + 2 * self.pad_len() - self.window_len) / self.hop_len
    }

    pub(crate) fn window(&self) -> Vec<f64> {
        match self.window_kind {
            WindowKind::Hann => {
                let n = self.window_len as f64;
                (0..self.window_len)
                    .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n).cos()))
                    .collect()
            }
        }
    }
}

/// A single-channel sample sequence with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    /// Builds a waveform, rejecting a zero sample rate and non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidArg("sample_rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// All-zero waveform of the given length.
    pub fn zeros(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// An `F x U` grid of complex STFT values plus the configuration that
/// produced it. Storage is frequency-major (`f * frames + u`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    data: Vec<Complex64>,
    freq_bins: usize,
    frames: usize,
    config: StftConfig,
    sample_rate: u32,
}

impl ComplexSpectrogram {
    /// All-zero spectrogram with the dimensions implied by `config`.
    pub fn zeros(config: StftConfig, sample_rate: u32, frames: usize) -> Self {
        let freq_bins = config.freq_bins();
        Self {
            data: vec![Complex64::default(); freq_bins * frames],
            freq_bins,
            frames,
            config,
            sample_rate,
        }
    }

    /// Builds a spectrogram from raw frequency-major data, validating the
    /// element count and finiteness.
    pub fn from_data(
        config: StftConfig,
        sample_rate: u32,
        frames: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        let freq_bins = config.freq_bins();
        if data.len() != freq_bins * frames {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{} = {} entries, got {}",
                freq_bins,
                frames,
                freq_bins * frames,
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectrogram entries"));
        }
        Ok(Self {
            data,
            freq_bins,
            frames,
            config,
            sample_rate,
        })
    }

    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn config(&self) -> StftConfig {
        self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    #[inline]
    pub fn at(&self, f: usize, u: usize) -> Complex64 {
        self.data[f * self.frames + u]
    }

    #[inline]
    pub fn set(&mut self, f: usize, u: usize, value: Complex64) {
        self.data[f * self.frames + u] = value;
    }

    /// Frequency-major raw data.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// True when dimensions, config and sample rate all agree.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.freq_bins == other.freq_bins
            && self.frames == other.frames
            && self.config == other.config
            && self.sample_rate == other.sample_rate
    }

    /// Linear combination `sum_k alpha_k * X_k` over matching spectrograms.
    pub fn weighted_sum(terms: &[(f64, &ComplexSpectrogram)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::EmptyInput)?;
        let mut out = ComplexSpectrogram::zeros(first.config, first.sample_rate, first.frames);
        for (alpha, spec) in terms {
            if !spec.same_shape(first) {
                return Err(Error::ShapeMismatch(
                    "weighted_sum over mismatched spectrograms".into(),
                ));
            }
            for (dst, src) in out.data.iter_mut().zip(spec.data.iter()) {
                *dst += *alpha * *src;
            }
        }
        Ok(out)
    }
}

/// Forward STFT with symmetric zero padding of half a window per side.
pub fn stft(wave: &Waveform, cfg: StftConfig) -> Result<ComplexSpectrogram> {
    cfg.validate()?;
    if wave.is_empty() {
        return Err(Error::EmptyInput);
    }

    let pad = cfg.pad_len();
    let window = cfg.window();
    let frames = cfg.num_frames(wave.len());
    let freq_bins = cfg.freq_bins();

    let mut padded = vec![0.0f64; wave.len() + 2 * pad];
    padded[pad..pad + wave.len()].copy_from_slice(wave.samples());

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.fft_len);

    let mut spec = ComplexSpectrogram::zeros(cfg, wave.sample_rate(), frames);
    let mut buf = vec![Complex64::default(); cfg.fft_len];
    for u in 0..frames {
        let start = u * cfg.hop_len;
        for (n, w) in window.iter().enumerate() {
            buf[n] = Complex64::new(padded[start + n] * w, 0.0);
        }
        for slot in buf.iter_mut().take(cfg.fft_len).skip(cfg.window_len) {
            *slot = Complex64::default();
        }
        fft.process(&mut buf);
        for (f, value) in buf.iter().take(freq_bins).enumerate() {
            spec.set(f, u, *value);
        }
    }
    Ok(spec)
}

/// Inverse STFT via normalized weighted overlap-add.
///
/// `target_len` is the number of samples to keep after removing the analysis
/// padding; for a round trip it is the original signal length.
pub fn istft(spec: &ComplexSpectrogram, target_len: usize) -> Result<Waveform> {
    let cfg = spec.config();
    cfg.validate()?;
    if spec.frames() == 0 {
        return Err(Error::EmptyInput);
    }

    let pad = cfg.pad_len();
    let window = cfg.window();
    let n = cfg.fft_len;
    let synth_len = (spec.frames() - 1) * cfg.hop_len + cfg.window_len;
    if pad + target_len > synth_len {
        return Err(Error::InvalidArg(format!(
            "target length {} exceeds the {} synthesizable samples",
            target_len,
            synth_len - pad
        )));
    }

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(n);

    let mut acc = vec![0.0f64; synth_len];
    let mut den = vec![0.0f64; synth_len];
    let mut buf = vec![Complex64::default(); n];
    let scale = 1.0 / n as f64;
    for u in 0..spec.frames() {
        for (f, slot) in buf.iter_mut().take(spec.freq_bins()).enumerate() {
            *slot = spec.at(f, u);
        }
        // Conjugate symmetry for the one-sided spectrum of a real signal.
        for k in 1..=(n - 1) / 2 {
            buf[n - k] = buf[k].conj();
        }
        ifft.process(&mut buf);
        let start = u * cfg.hop_len;
        for (m, w) in window.iter().enumerate() {
            acc[start + m] += buf[m].re * scale * w;
            den[start + m] += w * w;
        }
    }

    let mut out = Vec::with_capacity(target_len);
    for i in 0..target_len {
        let j = pad + i;
        if den[j] <= 1e-12 {
            return Err(Error::NonInvertibleConfig(i));
        }
        out.push(acc[j] / den[j]);
    }
    Waveform::new(out, spec.sample_rate())
}

/// Elementwise sum of the two ears: the mono mix `A_M = A_L + A_R`.
pub fn mono_mix(left: &Waveform, right: &Waveform) -> Result<Waveform> {
    if left.len() != right.len() {
        return Err(Error::ShapeMismatch(format!(
            "mono_mix lengths {} vs {}",
            left.len(),
            right.len()
        )));
    }
    if left.sample_rate() != right.sample_rate() {
        return Err(Error::ShapeMismatch(format!(
            "mono_mix sample rates {} vs {}",
            left.sample_rate(),
            right.sample_rate()
        )));
    }
    let samples = left
        .samples()
        .iter()
        .zip(right.samples())
        .map(|(l, r)| l + r)
        .collect();
    Waveform::new(samples, left.sample_rate())
}

/// Elementwise complex subtraction `S_D = S_L - S_R`.
pub fn diff_spectrogram(
    sl: &ComplexSpectrogram,
    sr: &ComplexSpectrogram,
) -> Result<ComplexSpectrogram> {
    if !sl.same_shape(sr) {
        return Err(Error::ShapeMismatch(format!(
            "diff_spectrogram {}x{} vs {}x{}",
            sl.freq_bins(),
            sl.frames(),
            sr.freq_bins(),
            sr.frames()
        )));
    }
    let data = sl
        .data()
        .iter()
        .zip(sr.data())
        .map(|(a, b)| a - b)
        .collect();
    ComplexSpectrogram::from_data(sl.config(), sl.sample_rate(), sl.frames(), data)
}
