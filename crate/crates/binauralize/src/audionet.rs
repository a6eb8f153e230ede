//! FiLM-conditioned spectrogram U-Net with left/right refinement heads.
//!
//! The encoder ingests the complex mono spectrogram with real and imaginary
//! parts stacked as two channels. Three stride-2 stages (widths 8/16/32)
//! downsample; the decoder mirrors them with nearest-neighbor upsampling,
//! skip concatenation, and a FiLM modulation from the pooled visual
//! descriptor at every stage. The decoder emits the initial difference
//! estimate and a coarse-to-fine feature pyramid; two refinement heads
//! combine the pyramid with the ear-specific visual features and emit the
//! left/right complex spectrograms.
//!
//! Everything here is a pure function of immutable parameters: repeated calls
//! with identical arguments are bit-identical.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::refine::FusionCandidate;
use crate::spectral::{ComplexSpectrogram, StftConfig};
use crate::visual::{
    dual_head_attention, encode_frame, modulate_lr, pool_descriptor, EncoderParams, FeatureMap,
    FrameTensor,
};

/// Complex spectrogram as a real 2-channel `2 x F x U` stack
/// (channel 0 real, channel 1 imaginary).
#[derive(Debug, Clone)]
pub struct RealSpectrogramStack {
    freq_bins: usize,
    frames: usize,
    config: StftConfig,
    sample_rate: u32,
    data: Vec<f64>,
}

impl RealSpectrogramStack {
    pub fn from_spectrogram(spec: &ComplexSpectrogram) -> Self {
        let (f, u) = (spec.freq_bins(), spec.frames());
        let mut data = vec![0.0; 2 * f * u];
        for i in 0..f {
            for j in 0..u {
                let c = spec.at(i, j);
                data[i * u + j] = c.re;
                data[f * u + i * u + j] = c.im;
            }
        }
        Self {
            freq_bins: f,
            frames: u,
            config: spec.config(),
            sample_rate: spec.sample_rate(),
            data,
        }
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

    fn as_feature_map(&self) -> FeatureMap {
        FeatureMap::from_data(2, self.freq_bins, self.frames, self.data.clone())
            .expect("stack data is finite by construction")
    }
}

/// Reinterprets a 2-channel feature map as a complex spectrogram.
fn stack_to_spectrogram(
    map: &FeatureMap,
    config: StftConfig,
    sample_rate: u32,
) -> Result<ComplexSpectrogram> {
    if map.channels() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "expected 2-channel stack, got {}",
            map.channels()
        )));
    }
    let (f, u) = (map.height(), map.width());
    let mut data = Vec::with_capacity(f * u);
    for i in 0..f {
        for j in 0..u {
            data.push(Complex64::new(map.at(0, i, j), map.at(1, i, j)));
        }
    }
    // The stack need not match the config's nominal bin count (the network
    // never changes the grid), so build directly.
    let mut spec = ComplexSpectrogram::zeros(config, sample_rate, u);
    if spec.freq_bins() != f {
        return Err(Error::ShapeMismatch(format!(
            "stack has {} bins but config expects {}",
            f,
            spec.freq_bins()
        )));
    }
    for i in 0..f {
        for j in 0..u {
            spec.set(i, j, data[i * u + j]);
        }
    }
    Ok(spec)
}

const INIT_RANGE: f64 = 0.05;

fn init_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE)).collect()
}

fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.2 * x
    }
}

/// Plain 2D convolution with 'same' zero padding.
#[derive(Debug, Clone)]
pub struct Conv2d {
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl Conv2d {
    fn init(rng: &mut ChaCha8Rng, in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            weight: init_vec(rng, out_ch * in_ch * kernel * kernel),
            bias: init_vec(rng, out_ch),
        }
    }

    fn out_dim(&self, dim: usize) -> usize {
        dim.div_ceil(self.stride)
    }

    fn views_mut(&mut self, prefix: &str) -> Vec<(String, Vec<u32>, &mut Vec<f64>)> {
        let dims = vec![
            self.out_ch as u32,
            self.in_ch as u32,
            self.kernel as u32,
            self.kernel as u32,
        ];
        let bias_dims = vec![self.out_ch as u32];
        let Conv2d { weight, bias, .. } = self;
        vec![
            (format!("{prefix}_weight"), dims, weight),
            (format!("{prefix}_bias"), bias_dims, bias),
        ]
    }

    fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        if x.channels() != self.in_ch {
            return Err(Error::ShapeMismatch(format!(
                "conv expects {} input channels, got {}",
                self.in_ch,
                x.channels()
            )));
        }
        let (h, w) = (x.height(), x.width());
        let (oh, ow) = (self.out_dim(h), self.out_dim(w));
        let pad = self.kernel / 2;
        let mut out = FeatureMap::zeros(self.out_ch, oh, ow);
        for o in 0..self.out_ch {
            for yy in 0..oh {
                for xx in 0..ow {
                    let mut acc = self.bias[o];
                    for i in 0..self.in_ch {
                        for kh in 0..self.kernel {
                            let sy = (yy * self.stride + kh).wrapping_sub(pad);
                            if sy >= h {
                                continue;
                            }
                            for kw in 0..self.kernel {
                                let sx = (xx * self.stride + kw).wrapping_sub(pad);
                                if sx >= w {
                                    continue;
                                }
                                let wgt = self.weight
                                    [((o * self.in_ch + i) * self.kernel + kh) * self.kernel + kw];
                                acc += wgt * x.at(i, sy, sx);
                            }
                        }
                    }
                    out.set(o, yy, xx, acc);
                }
            }
        }
        Ok(out)
    }
}

/// Per-stage FiLM generators: affine maps from the descriptor to per-channel
/// `(gamma, beta)`. Gamma is produced as `1 + W_g d + b_g` so zero weights
/// give the identity modulation.
#[derive(Debug, Clone)]
pub struct FilmParams {
    channels: usize,
    desc_dim: usize,
    gamma_w: Vec<f64>,
    gamma_b: Vec<f64>,
    beta_w: Vec<f64>,
    beta_b: Vec<f64>,
}

impl FilmParams {
    fn init(rng: &mut ChaCha8Rng, channels: usize, desc_dim: usize) -> Self {
        Self {
            channels,
            desc_dim,
            gamma_w: init_vec(rng, channels * desc_dim),
            gamma_b: init_vec(rng, channels),
            beta_w: init_vec(rng, channels * desc_dim),
            beta_b: init_vec(rng, channels),
        }
    }

    /// Generators with zero weights and the given constant offsets, giving
    /// `gamma = 1 + gamma_off` and `beta = beta_off` for any descriptor.
    pub fn constant(channels: usize, desc_dim: usize, gamma_off: f64, beta_off: f64) -> Self {
        Self {
            channels,
            desc_dim,
            gamma_w: vec![0.0; channels * desc_dim],
            gamma_b: vec![gamma_off; channels],
            beta_w: vec![0.0; channels * desc_dim],
            beta_b: vec![beta_off; channels],
        }
    }

    fn views_mut(&mut self, prefix: &str) -> Vec<(String, Vec<u32>, &mut Vec<f64>)> {
        let mat = vec![self.channels as u32, self.desc_dim as u32];
        let vec_dims = vec![self.channels as u32];
        let FilmParams {
            gamma_w,
            gamma_b,
            beta_w,
            beta_b,
            ..
        } = self;
        vec![
            (format!("{prefix}_gamma_w"), mat.clone(), gamma_w),
            (format!("{prefix}_gamma_b"), vec_dims.clone(), gamma_b),
            (format!("{prefix}_beta_w"), mat, beta_w),
            (format!("{prefix}_beta_b"), vec_dims, beta_b),
        ]
    }

    fn generate(&self, descriptor: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if descriptor.len() != self.desc_dim {
            return Err(Error::ShapeMismatch(format!(
                "descriptor len {} vs generator input {}",
                descriptor.len(),
                self.desc_dim
            )));
        }
        let mut gamma = vec![0.0; self.channels];
        let mut beta = vec![0.0; self.channels];
        for c in 0..self.channels {
            let gw = &self.gamma_w[c * self.desc_dim..(c + 1) * self.desc_dim];
            let bw = &self.beta_w[c * self.desc_dim..(c + 1) * self.desc_dim];
            gamma[c] =
                1.0 + gw.iter().zip(descriptor).map(|(a, b)| a * b).sum::<f64>() + self.gamma_b[c];
            beta[c] = bw.iter().zip(descriptor).map(|(a, b)| a * b).sum::<f64>() + self.beta_b[c];
        }
        Ok((gamma, beta))
    }
}

/// Per-channel affine modulation `out_c = gamma_c(d) * x_c + beta_c(d)`.
pub fn film_modulate(
    features: &FeatureMap,
    descriptor: &[f64],
    params: &FilmParams,
) -> Result<FeatureMap> {
    if features.channels() != params.channels {
        return Err(Error::ShapeMismatch(format!(
            "film expects {} channels, got {}",
            params.channels,
            features.channels()
        )));
    }
    let (gamma, beta) = params.generate(descriptor)?;
    let cells = features.cells();
    let mut data = Vec::with_capacity(features.data().len());
    for c in 0..features.channels() {
        let plane = &features.data()[c * cells..(c + 1) * cells];
        for x in plane {
            data.push(gamma[c] * x + beta[c]);
        }
    }
    FeatureMap::from_data(features.channels(), features.height(), features.width(), data)
}

/// Network hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct NetConfig {
    /// Encoder stage widths, shallow to deep.
    pub widths: [usize; 3],
    /// Length of the FiLM conditioning descriptor.
    pub descriptor_dim: usize,
    /// Channel count of the visual features fed to the heads.
    pub visual_dim: usize,
    /// Length of the projected per-ear side vector.
    pub side_dim: usize,
    /// Hidden channels inside each refinement head.
    pub head_hidden: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            widths: [8, 16, 32],
            descriptor_dim: 16,
            visual_dim: 32,
            side_dim: 4,
            head_hidden: 8,
        }
    }
}

/// One refinement head: a side projection of the ear-specific visual feature
/// plus a small convolutional stack over the pyramid.
#[derive(Debug, Clone)]
pub struct HeadParams {
    side_w: Vec<f64>,
    side_b: Vec<f64>,
    conv1: Conv2d,
    conv2: Conv2d,
}

impl HeadParams {
    fn init(rng: &mut ChaCha8Rng, cfg: &NetConfig) -> Self {
        let pyramid_ch = cfg.widths[1] + cfg.widths[0] + cfg.widths[0];
        Self {
            side_w: init_vec(rng, cfg.side_dim * cfg.visual_dim),
            side_b: init_vec(rng, cfg.side_dim),
            conv1: Conv2d::init(rng, pyramid_ch + cfg.side_dim, cfg.head_hidden, 3, 1),
            conv2: Conv2d::init(rng, cfg.head_hidden, 2, 1, 1),
        }
    }

    fn views_mut(
        &mut self,
        prefix: &str,
        cfg: &NetConfig,
    ) -> Vec<(String, Vec<u32>, &mut Vec<f64>)> {
        let HeadParams {
            side_w,
            side_b,
            conv1,
            conv2,
        } = self;
        let mut out = vec![
            (
                format!("{prefix}_side_w"),
                vec![cfg.side_dim as u32, cfg.visual_dim as u32],
                side_w,
            ),
            (
                format!("{prefix}_side_b"),
                vec![cfg.side_dim as u32],
                side_b,
            ),
        ];
        out.extend(conv1.views_mut(&format!("{prefix}_conv1")));
        out.extend(conv2.views_mut(&format!("{prefix}_conv2")));
        out
    }
}

/// All learnable audio-network state, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct NetParams {
    cfg: NetConfig,
    enc: [Conv2d; 3],
    dec: [Conv2d; 3],
    film: [FilmParams; 3],
    out_conv: Conv2d,
    pub head_l: HeadParams,
    pub head_r: HeadParams,
    seed: u64,
}

impl NetParams {
    /// Seeded uniform(-0.05, 0.05) initialization of every tensor.
    pub fn new(cfg: NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [w1, w2, w3] = cfg.widths;
        let enc = [
            Conv2d::init(&mut rng, 2, w1, 3, 2),
            Conv2d::init(&mut rng, w1, w2, 3, 2),
            Conv2d::init(&mut rng, w2, w3, 3, 2),
        ];
        let dec = [
            Conv2d::init(&mut rng, w3 + w2, w2, 3, 1),
            Conv2d::init(&mut rng, w2 + w1, w1, 3, 1),
            Conv2d::init(&mut rng, w1 + 2, w1, 3, 1),
        ];
        let film = [
            FilmParams::init(&mut rng, w2, cfg.descriptor_dim),
            FilmParams::init(&mut rng, w1, cfg.descriptor_dim),
            FilmParams::init(&mut rng, w1, cfg.descriptor_dim),
        ];
        let out_conv = Conv2d::init(&mut rng, w1, 2, 1, 1);
        let head_l = HeadParams::init(&mut rng, &cfg);
        let head_r = HeadParams::init(&mut rng, &cfg);
        Self {
            cfg,
            enc,
            dec,
            film,
            out_conv,
            head_l,
            head_r,
            seed,
        }
    }

    pub fn config(&self) -> NetConfig {
        self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Makes the right head an exact copy of the left one.
    pub fn tie_heads(&mut self) {
        self.head_r = self.head_l.clone();
    }

    fn views_mut(&mut self) -> Vec<(String, Vec<u32>, &mut Vec<f64>)> {
        let cfg = self.cfg;
        let NetParams {
            enc,
            dec,
            film,
            out_conv,
            head_l,
            head_r,
            ..
        } = self;
        let mut out = Vec::new();
        for (i, conv) in enc.iter_mut().enumerate() {
            out.extend(conv.views_mut(&format!("enc{i}")));
        }
        for (i, conv) in dec.iter_mut().enumerate() {
            out.extend(conv.views_mut(&format!("dec{i}")));
        }
        for (i, stage) in film.iter_mut().enumerate() {
            out.extend(stage.views_mut(&format!("film{i}")));
        }
        out.extend(out_conv.views_mut("out"));
        out.extend(head_l.views_mut("head_l", &cfg));
        out.extend(head_r.views_mut("head_r", &cfg));
        out
    }

    /// All tensors in a fixed order, for the toolkit parameter container.
    pub fn named_tensors(&self) -> Vec<(String, Vec<u32>, Vec<f32>)> {
        let mut copy = self.clone();
        copy.views_mut()
            .into_iter()
            .map(|(name, dims, values)| {
                (name, dims, values.iter().map(|&x| x as f32).collect())
            })
            .collect()
    }

    /// Rebuilds parameters from tensors produced by [`named_tensors`].
    pub fn from_named_tensors(
        cfg: NetConfig,
        tensors: &[(String, Vec<u32>, Vec<f32>)],
    ) -> Result<Self> {
        let mut params = Self::new(cfg, 0);
        {
            let views = params.views_mut();
            if tensors.len() != views.len() {
                return Err(Error::Format(format!(
                    "network expects {} tensors, got {}",
                    views.len(),
                    tensors.len()
                )));
            }
            for ((name, dims, data), (want_name, want_dims, slot)) in
                tensors.iter().zip(views)
            {
                if *name != want_name || *dims != want_dims || data.len() != slot.len() {
                    return Err(Error::Format(format!(
                        "tensor '{}' {:?} does not match expected '{}' {:?}",
                        name, dims, want_name, want_dims
                    )));
                }
                *slot = data.iter().map(|&x| x as f64).collect();
            }
        }
        Ok(params)
    }
}

/// Decoder stage outputs, coarse to fine, plus the grid bookkeeping needed to
/// emit spectrograms.
#[derive(Debug, Clone)]
pub struct FeaturePyramid {
    levels: Vec<FeatureMap>,
    config: StftConfig,
    sample_rate: u32,
}

impl FeaturePyramid {
    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }

    /// Finest-level grid, which matches the input `F x U`.
    pub fn output_dims(&self) -> (usize, usize) {
        let finest = self.levels.last().expect("pyramid is never empty");
        (finest.height(), finest.width())
    }
}

fn lrelu_map(mut map: FeatureMap) -> FeatureMap {
    let data: Vec<f64> = map.data().iter().map(|&x| leaky_relu(x)).collect();
    map = FeatureMap::from_data(map.channels(), map.height(), map.width(), data)
        .expect("leaky relu preserves finiteness");
    map
}

/// Nearest-neighbor 2x upsampling cropped to the target dims.
fn upsample_to(x: &FeatureMap, th: usize, tw: usize) -> Result<FeatureMap> {
    if th > 2 * x.height() || tw > 2 * x.width() {
        return Err(Error::ShapeMismatch(format!(
            "cannot upsample {}x{} to {}x{}",
            x.height(),
            x.width(),
            th,
            tw
        )));
    }
    let mut out = FeatureMap::zeros(x.channels(), th, tw);
    for c in 0..x.channels() {
        for h in 0..th {
            for w in 0..tw {
                out.set(c, h, w, x.at(c, h / 2, w / 2));
            }
        }
    }
    Ok(out)
}

/// Generic nearest-neighbor resize used to align pyramid levels.
fn resize_nearest(x: &FeatureMap, th: usize, tw: usize) -> FeatureMap {
    let mut out = FeatureMap::zeros(x.channels(), th, tw);
    for c in 0..x.channels() {
        for h in 0..th {
            let sh = h * x.height() / th;
            for w in 0..tw {
                let sw = w * x.width() / tw;
                out.set(c, h, w, x.at(c, sh, sw));
            }
        }
    }
    out
}

fn concat_channels(maps: &[&FeatureMap]) -> Result<FeatureMap> {
    let (h, w) = (maps[0].height(), maps[0].width());
    let mut channels = 0;
    for m in maps {
        if m.height() != h || m.width() != w {
            return Err(Error::ShapeMismatch("concat over mismatched grids".into()));
        }
        channels += m.channels();
    }
    let mut data = Vec::with_capacity(channels * h * w);
    for m in maps {
        data.extend_from_slice(m.data());
    }
    FeatureMap::from_data(channels, h, w, data)
}

/// Runs the U-Net: returns the initial difference estimate and the decoder
/// pyramid (coarse to fine).
///
/// For the default 257x64 input the stage grids are 129x32, 65x16 and 33x8
/// on the way down, and the pyramid levels are 16x65x16, 8x129x32 and
/// 8x257x64.
pub fn unet_forward(
    x: &RealSpectrogramStack,
    descriptor: &[f64],
    params: &NetParams,
) -> Result<(ComplexSpectrogram, FeaturePyramid)> {
    if x.freq_bins() < 8 || x.frames() < 8 {
        return Err(Error::SpectrogramTooSmall(format!(
            "{}x{} (need at least 8x8)",
            x.freq_bins(),
            x.frames()
        )));
    }
    let input = x.as_feature_map();
    let e1 = lrelu_map(params.enc[0].forward(&input)?);
    let e2 = lrelu_map(params.enc[1].forward(&e1)?);
    let e3 = lrelu_map(params.enc[2].forward(&e2)?);

    let mut levels = Vec::with_capacity(3);
    let up1 = upsample_to(&e3, e2.height(), e2.width())?;
    let d1 = params.dec[0].forward(&concat_channels(&[&up1, &e2])?)?;
    let p1 = lrelu_map(film_modulate(&d1, descriptor, &params.film[0])?);
    let up2 = upsample_to(&p1, e1.height(), e1.width())?;
    let d2 = params.dec[1].forward(&concat_channels(&[&up2, &e1])?)?;
    let p2 = lrelu_map(film_modulate(&d2, descriptor, &params.film[1])?);
    let up3 = upsample_to(&p2, input.height(), input.width())?;
    let d3 = params.dec[2].forward(&concat_channels(&[&up3, &input])?)?;
    let p3 = lrelu_map(film_modulate(&d3, descriptor, &params.film[2])?);

    let s_d = stack_to_spectrogram(&params.out_conv.forward(&p3)?, x.config(), x.sample_rate())?;
    levels.push(p1);
    levels.push(p2);
    levels.push(p3);
    Ok((
        s_d,
        FeaturePyramid {
            levels,
            config: x.config(),
            sample_rate: x.sample_rate(),
        },
    ))
}

fn run_head(
    pyramid_stack: &FeatureMap,
    side_feature: &FeatureMap,
    head: &HeadParams,
    cfg: &NetConfig,
    stft_cfg: StftConfig,
    sample_rate: u32,
) -> Result<ComplexSpectrogram> {
    if side_feature.channels() != cfg.visual_dim {
        return Err(Error::ShapeMismatch(format!(
            "side feature has {} channels, head expects {}",
            side_feature.channels(),
            cfg.visual_dim
        )));
    }
    let pooled = side_feature.channel_means();
    let mut side = vec![0.0; cfg.side_dim];
    for (r, s) in side.iter_mut().enumerate() {
        let row = &head.side_w[r * cfg.visual_dim..(r + 1) * cfg.visual_dim];
        *s = row.iter().zip(&pooled).map(|(a, b)| a * b).sum::<f64>() + head.side_b[r];
    }
    let (h, w) = (pyramid_stack.height(), pyramid_stack.width());
    let mut side_map = FeatureMap::zeros(cfg.side_dim, h, w);
    for (c, value) in side.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                side_map.set(c, y, x, *value);
            }
        }
    }
    let joined = concat_channels(&[pyramid_stack, &side_map])?;
    let hidden = lrelu_map(head.conv1.forward(&joined)?);
    let out = head.conv2.forward(&hidden)?;
    stack_to_spectrogram(&out, stft_cfg, sample_rate)
}

/// Emits the left/right complex spectrograms from the pyramid and the
/// ear-specific visual features. The left head sees only `v_l`, the right
/// head only `v_r`.
pub fn refine_heads(
    pyramid: &FeaturePyramid,
    v_l: &FeatureMap,
    v_r: &FeatureMap,
    params: &NetParams,
) -> Result<(ComplexSpectrogram, ComplexSpectrogram)> {
    let (fh, fw) = pyramid.output_dims();
    let aligned: Vec<FeatureMap> = pyramid
        .levels()
        .iter()
        .map(|level| resize_nearest(level, fh, fw))
        .collect();
    let refs: Vec<&FeatureMap> = aligned.iter().collect();
    let stack = concat_channels(&refs)?;
    let s_l = run_head(
        &stack,
        v_l,
        &params.head_l,
        &params.cfg,
        pyramid.config,
        pyramid.sample_rate,
    )?;
    let s_r = run_head(
        &stack,
        v_r,
        &params.head_r,
        &params.cfg,
        pyramid.config,
        pyramid.sample_rate,
    )?;
    Ok((s_l, s_r))
}

/// Full forward pass for one segment: visual encoding, dual-head attention,
/// FiLM-conditioned U-Net and the two refinement heads.
pub fn spatialize_segment(
    s_m: &ComplexSpectrogram,
    frame: &FrameTensor,
    enc: &EncoderParams,
    net: &NetParams,
) -> Result<FusionCandidate> {
    let v = encode_frame(frame, enc)?;
    let pair = dual_head_attention(&v, enc)?;
    let (v_l, v_r) = modulate_lr(&v, &pair)?;
    let descriptor = pool_descriptor(&v, enc)?;
    let stack = RealSpectrogramStack::from_spectrogram(s_m);
    let (s_d, pyramid) = unet_forward(&stack, &descriptor, net)?;
    let (s_l, s_r) = refine_heads(&pyramid, &v_l, &v_r, net)?;
    FusionCandidate::new(s_l, s_r, s_d)
}
