//! Toy visual encoder and transformer-native dual-head L/R attention.
//!
//! The encoder is a desk-scale stand-in for a pretrained ViT backbone with
//! the same interface contracts: non-overlapping patch embedding, one
//! self-attention mixing block over the tokens, a shared `C x H x W` feature
//! map, two softmax-normalized spatial attention heads, and a pooled global
//! descriptor for FiLM conditioning.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An RGB frame, channel-major `3 x H x W`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FrameTensor {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArg("frame dims must be positive".into()));
        }
        if data.len() != Self::CHANNELS * height * width {
            return Err(Error::ShapeMismatch(format!(
                "frame expects {} values, got {}",
                Self::CHANNELS * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidArg(
                "frame values must be finite and in [0, 1]".into(),
            ));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Constant-color frame.
    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; Self::CHANNELS * height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn at(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[(c * self.height + h) * self.width + w]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Crop of size `height x width` with top-left corner `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::InvalidArg(format!(
                "crop {}x{}+{}+{} exceeds frame {}x{}",
                height, width, top, left, self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(Self::CHANNELS * height * width);
        for c in 0..Self::CHANNELS {
            for h in 0..height {
                for w in 0..width {
                    data.push(self.at(c, top + h, left + w));
                }
            }
        }
        Self::new(height, width, data)
    }

    /// Horizontal mirror (flips the width axis).
    pub fn mirrored(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..Self::CHANNELS {
            for h in 0..self.height {
                for w in 0..self.width {
                    data.push(self.at(c, h, self.width - 1 - w));
                }
            }
        }
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// A channel-major `C x H x W` real-valued feature grid. Shared by the visual
/// encoder (patch-grid features) and the audio network (spectrogram features).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "feature map expects {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn at(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[(c * self.height + h) * self.width + w]
    }

    #[inline]
    pub fn set(&mut self, c: usize, h: usize, w: usize, value: f64) {
        self.data[(c * self.height + h) * self.width + w] = value;
    }

    /// Channel vector at flattened cell index `i = h * width + w`.
    pub fn cell_vector(&self, i: usize) -> Vec<f64> {
        (0..self.channels)
            .map(|c| self.data[c * self.cells() + i])
            .collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Spatial mean per channel.
    pub fn channel_means(&self) -> Vec<f64> {
        let cells = self.cells() as f64;
        (0..self.channels)
            .map(|c| {
                self.data[c * self.cells()..(c + 1) * self.cells()]
                    .iter()
                    .sum::<f64>()
                    / cells
            })
            .collect()
    }
}

/// A softmax-normalized `H x W` spatial attention map.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl AttentionMap {
    /// Validates nonnegativity and unit mass.
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "attention map expects {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArg(
                "attention values must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArg(format!(
                "attention mass {} is not 1",
                total
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        let n = height * width;
        Self {
            height,
            width,
            values: vec![1.0 / n as f64; n],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, h: usize, w: usize) -> f64 {
        self.values[h * self.width + w]
    }

    /// Total mass in columns strictly left of the grid midline.
    pub fn left_half_mass(&self) -> f64 {
        let half = self.width / 2;
        let mut sum = 0.0;
        for h in 0..self.height {
            for w in 0..half {
                sum += self.at(h, w);
            }
        }
        sum
    }
}

/// The left/right attention maps produced by the dual heads.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionPair {
    pub attn_l: AttentionMap,
    pub attn_r: AttentionMap,
}

/// Encoder hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct EncoderConfig {
    pub patch_size: usize,
    pub embed_dim: usize,
    pub mlp_hidden: usize,
    pub descriptor_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            patch_size: 16,
            embed_dim: 32,
            mlp_hidden: 32,
            descriptor_dim: 16,
        }
    }
}

/// All learnable encoder state, reproducible from its seed.
#[derive(Debug, Clone)]
pub struct EncoderParams {
    cfg: EncoderConfig,
    /// Patch embedding, `embed_dim x (3 * patch^2)`.
    patch_weight: Vec<f64>,
    patch_bias: Vec<f64>,
    /// Mixing block projections, each `embed_dim x embed_dim`.
    wq: Vec<f64>,
    wk: Vec<f64>,
    wv: Vec<f64>,
    /// Per-head score projections over the shared map.
    pub score_l: Vec<f64>,
    pub bias_l: f64,
    pub score_r: Vec<f64>,
    pub bias_r: f64,
    /// Descriptor MLP.
    mlp_w1: Vec<f64>,
    mlp_b1: Vec<f64>,
    mlp_w2: Vec<f64>,
    mlp_b2: Vec<f64>,
    seed: u64,
}

const INIT_RANGE: f64 = 0.05;

fn init_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE)).collect()
}

impl EncoderParams {
    /// Seeded uniform(-0.05, 0.05) initialization of every tensor.
    pub fn new(cfg: EncoderConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = cfg.embed_dim;
        let patch_in = FrameTensor::CHANNELS * cfg.patch_size * cfg.patch_size;
        Self {
            cfg,
            patch_weight: init_vec(&mut rng, d * patch_in),
            patch_bias: init_vec(&mut rng, d),
            wq: init_vec(&mut rng, d * d),
            wk: init_vec(&mut rng, d * d),
            wv: init_vec(&mut rng, d * d),
            score_l: init_vec(&mut rng, d),
            bias_l: rng.gen_range(-INIT_RANGE..INIT_RANGE),
            score_r: init_vec(&mut rng, d),
            bias_r: rng.gen_range(-INIT_RANGE..INIT_RANGE),
            mlp_w1: init_vec(&mut rng, cfg.mlp_hidden * d),
            mlp_b1: init_vec(&mut rng, cfg.mlp_hidden),
            mlp_w2: init_vec(&mut rng, cfg.descriptor_dim * cfg.mlp_hidden),
            mlp_b2: init_vec(&mut rng, cfg.descriptor_dim),
            seed,
        }
    }

    pub fn config(&self) -> EncoderConfig {
        self.cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Swaps the two head score projections in place.
    pub fn swap_heads(&mut self) {
        std::mem::swap(&mut self.score_l, &mut self.score_r);
        std::mem::swap(&mut self.bias_l, &mut self.bias_r);
    }

    /// All tensors in a fixed order, for the toolkit parameter container.
    pub fn named_tensors(&self) -> Vec<(String, Vec<u32>, Vec<f32>)> {
        let d = self.cfg.embed_dim as u32;
        let patch_in = (FrameTensor::CHANNELS * self.cfg.patch_size * self.cfg.patch_size) as u32;
        let f32s = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        vec![
            ("patch_weight".into(), vec![d, patch_in], f32s(&self.patch_weight)),
            ("patch_bias".into(), vec![d], f32s(&self.patch_bias)),
            ("wq".into(), vec![d, d], f32s(&self.wq)),
            ("wk".into(), vec![d, d], f32s(&self.wk)),
            ("wv".into(), vec![d, d], f32s(&self.wv)),
            ("score_l".into(), vec![d], f32s(&self.score_l)),
            ("bias_l".into(), vec![1], vec![self.bias_l as f32]),
            ("score_r".into(), vec![d], f32s(&self.score_r)),
            ("bias_r".into(), vec![1], vec![self.bias_r as f32]),
            (
                "mlp_w1".into(),
                vec![self.cfg.mlp_hidden as u32, d],
                f32s(&self.mlp_w1),
            ),
            (
                "mlp_b1".into(),
                vec![self.cfg.mlp_hidden as u32],
                f32s(&self.mlp_b1),
            ),
            (
                "mlp_w2".into(),
                vec![self.cfg.descriptor_dim as u32, self.cfg.mlp_hidden as u32],
                f32s(&self.mlp_w2),
            ),
            (
                "mlp_b2".into(),
                vec![self.cfg.descriptor_dim as u32],
                f32s(&self.mlp_b2),
            ),
        ]
    }

    /// Rebuilds parameters from tensors produced by [`named_tensors`].
    pub fn from_named_tensors(
        cfg: EncoderConfig,
        tensors: &[(String, Vec<u32>, Vec<f32>)],
    ) -> Result<Self> {
        let mut params = Self::new(cfg, 0);
        let expected = params.named_tensors();
        if tensors.len() != expected.len() {
            return Err(Error::Format(format!(
                "encoder expects {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for ((name, dims, data), (want_name, want_dims, want_data)) in
            tensors.iter().zip(&expected)
        {
            if name != want_name || dims != want_dims || data.len() != want_data.len() {
                return Err(Error::Format(format!(
                    "tensor '{}' {:?} does not match expected '{}' {:?}",
                    name, dims, want_name, want_dims
                )));
            }
            let f64s: Vec<f64> = data.iter().map(|&x| x as f64).collect();
            match name.as_str() {
                "patch_weight" => params.patch_weight = f64s,
                "patch_bias" => params.patch_bias = f64s,
                "wq" => params.wq = f64s,
                "wk" => params.wk = f64s,
                "wv" => params.wv = f64s,
                "score_l" => params.score_l = f64s,
                "bias_l" => params.bias_l = f64s[0],
                "score_r" => params.score_r = f64s,
                "bias_r" => params.bias_r = f64s[0],
                "mlp_w1" => params.mlp_w1 = f64s,
                "mlp_b1" => params.mlp_b1 = f64s,
                "mlp_w2" => params.mlp_w2 = f64s,
                "mlp_b2" => params.mlp_b2 = f64s,
                other => return Err(Error::Format(format!("unknown tensor '{}'", other))),
            }
        }
        Ok(params)
    }

    /// Makes the patch embedding commute with a within-patch horizontal flip
    /// by averaging each weight with its mirrored counterpart.
    pub fn symmetrize_patch_weights(&mut self) {
        let p = self.cfg.patch_size;
        let patch_in = FrameTensor::CHANNELS * p * p;
        for d in 0..self.cfg.embed_dim {
            for c in 0..FrameTensor::CHANNELS {
                for dh in 0..p {
                    for dw in 0..p / 2 {
                        let a = d * patch_in + (c * p + dh) * p + dw;
                        let b = d * patch_in + (c * p + dh) * p + (p - 1 - dw);
                        let mean = 0.5 * (self.patch_weight[a] + self.patch_weight[b]);
                        self.patch_weight[a] = mean;
                        self.patch_weight[b] = mean;
                    }
                }
            }
        }
    }
}

fn matvec(mat: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &mat[r * cols..(r + 1) * cols];
        out[r] = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in values.iter_mut() {
        *v /= total;
    }
}

fn leaky_relu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.2 * x
    }
}

/// Patch embedding followed by one self-attention mixing block.
///
/// Output grid is `(H_img/patch) x (W_img/patch)` with `embed_dim` channels.
pub fn encode_frame(frame: &FrameTensor, params: &EncoderParams) -> Result<FeatureMap> {
    let p = params.cfg.patch_size;
    if !frame.height().is_multiple_of(p) || !frame.width().is_multiple_of(p) {
        return Err(Error::BadPatchGrid(format!(
            "frame {}x{} not divisible by patch {}",
            frame.height(),
            frame.width(),
            p
        )));
    }
    let grid_h = frame.height() / p;
    let grid_w = frame.width() / p;
    let tokens = grid_h * grid_w;
    let d = params.cfg.embed_dim;
    let patch_in = FrameTensor::CHANNELS * p * p;

    // Patch tokens.
    let mut tok = vec![0.0f64; tokens * d];
    let mut patch = vec![0.0f64; patch_in];
    for gh in 0..grid_h {
        for gw in 0..grid_w {
            let mut k = 0;
            for c in 0..FrameTensor::CHANNELS {
                for dh in 0..p {
                    for dw in 0..p {
                        patch[k] = frame.at(c, gh * p + dh, gw * p + dw);
                        k += 1;
                    }
                }
            }
            let t = gh * grid_w + gw;
            matvec(
                &params.patch_weight,
                d,
                patch_in,
                &patch,
                &mut tok[t * d..(t + 1) * d],
            );
            for (slot, b) in tok[t * d..(t + 1) * d].iter_mut().zip(&params.patch_bias) {
                *slot += b;
            }
        }
    }

    // One softmax self-attention block with a residual connection.
    let mut q = vec![0.0f64; tokens * d];
    let mut key = vec![0.0f64; tokens * d];
    let mut val = vec![0.0f64; tokens * d];
    for t in 0..tokens {
        let x = &tok[t * d..(t + 1) * d];
        matvec(&params.wq, d, d, x, &mut q[t * d..(t + 1) * d]);
        matvec(&params.wk, d, d, x, &mut key[t * d..(t + 1) * d]);
        matvec(&params.wv, d, d, x, &mut val[t * d..(t + 1) * d]);
    }
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    let mut mixed = vec![0.0f64; tokens * d];
    let mut scores = vec![0.0f64; tokens];
    for i in 0..tokens {
        for (j, score) in scores.iter_mut().enumerate() {
            let qi = &q[i * d..(i + 1) * d];
            let kj = &key[j * d..(j + 1) * d];
            *score = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * inv_sqrt_d;
        }
        softmax_in_place(&mut scores);
        let out = &mut mixed[i * d..(i + 1) * d];
        for (j, w) in scores.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&val[j * d..(j + 1) * d]) {
                *o += w * v;
            }
        }
    }

    // Residual, then scatter tokens back onto the spatial grid channel-major.
    let mut map = FeatureMap::zeros(d, grid_h, grid_w);
    for gh in 0..grid_h {
        for gw in 0..grid_w {
            let t = gh * grid_w + gw;
            for c in 0..d {
                map.set(c, gh, gw, tok[t * d + c] + mixed[t * d + c]);
            }
        }
    }
    Ok(map)
}

/// Per head, a scalar score per spatial cell of `v`, softmax-normalized over
/// all cells.
pub fn dual_head_attention(v: &FeatureMap, params: &EncoderParams) -> Result<AttentionPair> {
    let attn_l = head_attention(v, &params.score_l, params.bias_l)?;
    let attn_r = head_attention(v, &params.score_r, params.bias_r)?;
    Ok(AttentionPair { attn_l, attn_r })
}

/// Attention map from an explicit per-cell score projection: softmax over
/// all cells of `score . v[:, h, w] + bias`.
pub fn head_attention(v: &FeatureMap, score: &[f64], bias: f64) -> Result<AttentionMap> {
    if score.len() != v.channels() {
        return Err(Error::ShapeMismatch(format!(
            "head projection len {} vs {} channels",
            score.len(),
            v.channels()
        )));
    }
    let mut values = head_scores(v, score, bias);
    softmax_in_place(&mut values);
    AttentionMap::new(v.height(), v.width(), values)
}

/// Raw (pre-softmax) per-cell head scores.
pub(crate) fn head_scores(v: &FeatureMap, score: &[f64], bias: f64) -> Vec<f64> {
    let cells = v.cells();
    let mut out = vec![bias; cells];
    for (c, w) in score.iter().enumerate() {
        let plane = &v.data()[c * cells..(c + 1) * cells];
        for (o, x) in out.iter_mut().zip(plane) {
            *o += w * x;
        }
    }
    out
}

/// `v_L = v .* Attn_L`, `v_R = v .* Attn_R`, the maps broadcast across
/// channels.
pub fn modulate_lr(v: &FeatureMap, pair: &AttentionPair) -> Result<(FeatureMap, FeatureMap)> {
    Ok((
        modulate_one(v, &pair.attn_l)?,
        modulate_one(v, &pair.attn_r)?,
    ))
}

fn modulate_one(v: &FeatureMap, attn: &AttentionMap) -> Result<FeatureMap> {
    if attn.height() != v.height() || attn.width() != v.width() {
        return Err(Error::ShapeMismatch(format!(
            "attention {}x{} vs features {}x{}",
            attn.height(),
            attn.width(),
            v.height(),
            v.width()
        )));
    }
    let cells = v.cells();
    let mut data = Vec::with_capacity(v.data().len());
    for c in 0..v.channels() {
        let plane = &v.data()[c * cells..(c + 1) * cells];
        for (x, a) in plane.iter().zip(attn.values()) {
            data.push(x * a);
        }
    }
    FeatureMap::from_data(v.channels(), v.height(), v.width(), data)
}

/// Global average over the grid followed by a two-layer MLP.
pub fn pool_descriptor(v: &FeatureMap, params: &EncoderParams) -> Result<Vec<f64>> {
    if v.channels() != params.cfg.embed_dim {
        return Err(Error::ShapeMismatch(format!(
            "feature channels {} vs embed dim {}",
            v.channels(),
            params.cfg.embed_dim
        )));
    }
    let pooled = v.channel_means();
    let mut hidden = vec![0.0f64; params.cfg.mlp_hidden];
    matvec(
        &params.mlp_w1,
        params.cfg.mlp_hidden,
        params.cfg.embed_dim,
        &pooled,
        &mut hidden,
    );
    for (h, b) in hidden.iter_mut().zip(&params.mlp_b1) {
        *h = leaky_relu(*h + b);
    }
    let mut desc = vec![0.0f64; params.cfg.descriptor_dim];
    matvec(
        &params.mlp_w2,
        params.cfg.descriptor_dim,
        params.cfg.mlp_hidden,
        &hidden,
        &mut desc,
    );
    for (o, b) in desc.iter_mut().zip(&params.mlp_b2) {
        *o += b;
    }
    Ok(desc)
}
