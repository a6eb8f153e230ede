//! Training objectives, a finite-difference gradient oracle, and a small
//! prior-loss training demonstration for the dual attention heads.

use crate::error::{Error, Result};
use crate::priors::{anneal_weight, logistic_targets, prior_loss, AnnealSchedule, PriorConfig, TargetMap};
use crate::spectral::ComplexSpectrogram;
use crate::visual::{encode_frame, head_attention, AttentionMap, EncoderConfig, EncoderParams, FeatureMap, FrameTensor};

/// Weights of the total objective.
#[derive(Debug, Clone, Copy)]
pub struct LossWeights {
    pub lambda_rl: f64,
    pub anneal: AnnealSchedule,
}

impl LossWeights {
    /// The stock weights: `lambda_rl = 5`, prior `lambda_0 = 2` decayed over
    /// the given horizon.
    pub fn standard(t_anneal: u64) -> Result<Self> {
        Ok(Self {
            lambda_rl: 5.0,
            anneal: AnnealSchedule::new(2.0, t_anneal)?,
        })
    }
}

/// Frobenius norm of the complex difference `sqrt(sum |pred - target|^2)`.
pub fn loss_d(pred: &ComplexSpectrogram, target: &ComplexSpectrogram) -> Result<f64> {
    if pred.freq_bins() != target.freq_bins() || pred.frames() != target.frames() {
        return Err(Error::ShapeMismatch(format!(
            "loss_d {}x{} vs {}x{}",
            pred.freq_bins(),
            pred.frames(),
            target.freq_bins(),
            target.frames()
        )));
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| {
            let d = p - t;
            d.re * d.re + d.im * d.im
        })
        .sum();
    Ok(sum.sqrt())
}

/// Sum of the per-ear reconstruction norms.
pub fn loss_rl(
    pl: &ComplexSpectrogram,
    pr: &ComplexSpectrogram,
    tl: &ComplexSpectrogram,
    tr: &ComplexSpectrogram,
) -> Result<f64> {
    Ok(loss_d(pr, tr)? + loss_d(pl, tl)?)
}

/// The three loss components. `l_prior_raw` is the unweighted bracket
/// `MSE(Attn_L, W_L) + MSE(Attn_R, W_R)`; the annealed lambda is applied
/// exactly once, inside [`total_loss`].
#[derive(Debug, Clone, Copy)]
pub struct LossParts {
    pub l_d: f64,
    pub l_rl: f64,
    pub l_prior_raw: f64,
}

/// `L_D + lambda_RL * L_RL + lambda_prior(t) * L_prior_raw`.
pub fn total_loss(parts: &LossParts, weights: &LossWeights, t: u64) -> f64 {
    parts.l_d
        + weights.lambda_rl * parts.l_rl
        + anneal_weight(t, &weights.anneal) * parts.l_prior_raw
}

/// Central finite differences `(f(p + h e_i) - f(p - h e_i)) / 2h`.
pub fn finite_diff_grad<F>(mut f: F, p: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidArg("step size must be positive".into()));
    }
    let mut grad = Vec::with_capacity(p.len());
    let mut probe = p.to_vec();
    for i in 0..p.len() {
        probe[i] = p[i] + h;
        let up = f(&probe)?;
        probe[i] = p[i] - h;
        let down = f(&probe)?;
        probe[i] = p[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("finite difference evaluation"));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Analytic gradient of the weighted prior loss with respect to the
/// dual-head score parameters.
#[derive(Debug, Clone)]
pub struct PriorHeadGradient {
    pub score_l: Vec<f64>,
    pub bias_l: f64,
    pub score_r: Vec<f64>,
    pub bias_r: f64,
}

impl PriorHeadGradient {
    /// Flattened as `[score_l.., bias_l, score_r.., bias_r]`, matching the
    /// demo's parameter packing.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.score_l.clone();
        out.push(self.bias_l);
        out.extend_from_slice(&self.score_r);
        out.push(self.bias_r);
        out
    }
}

/// Gradient of one head's `lambda * MSE(softmax(w . v + b), target)` through
/// the softmax, accumulated over cells.
fn head_gradient(
    v: &FeatureMap,
    attn: &AttentionMap,
    target: &TargetMap,
    lambda_t: f64,
) -> (Vec<f64>, f64) {
    let cells = v.cells();
    let n = cells as f64;
    let a = attn.values();
    let t = target.values();
    // s_dot = sum_j (a_j - t_j) a_j, shared by every dL/ds_i.
    let s_dot: f64 = a.iter().zip(t).map(|(ai, ti)| (ai - ti) * ai).sum();
    let mut ds = vec![0.0; cells];
    for i in 0..cells {
        ds[i] = lambda_t * (2.0 / n) * a[i] * ((a[i] - t[i]) - s_dot);
    }
    let mut grad_w = vec![0.0; v.channels()];
    for (c, gw) in grad_w.iter_mut().enumerate() {
        let plane = &v.data()[c * cells..(c + 1) * cells];
        *gw = plane.iter().zip(&ds).map(|(x, d)| x * d).sum();
    }
    let grad_b = ds.iter().sum();
    (grad_w, grad_b)
}

/// Analytic gradient of [`prior_loss`] over the attention produced from `v`
/// by the current head projections of `params`.
pub fn prior_loss_head_gradient(
    v: &FeatureMap,
    params: &EncoderParams,
    targets: &(TargetMap, TargetMap),
    lambda_t: f64,
) -> Result<PriorHeadGradient> {
    let attn_l = head_attention(v, &params.score_l, params.bias_l)?;
    let attn_r = head_attention(v, &params.score_r, params.bias_r)?;
    if attn_l.height() != targets.0.height() || attn_l.width() != targets.0.width() {
        return Err(Error::ShapeMismatch(format!(
            "attention {}x{} vs target {}x{}",
            attn_l.height(),
            attn_l.width(),
            targets.0.height(),
            targets.0.width()
        )));
    }
    let (score_l, bias_l) = head_gradient(v, &attn_l, &targets.0, lambda_t);
    let (score_r, bias_r) = head_gradient(v, &attn_r, &targets.1, lambda_t);
    Ok(PriorHeadGradient {
        score_l,
        bias_l,
        score_r,
        bias_r,
    })
}

/// One row of the demo trace.
#[derive(Debug, Clone, Copy)]
pub struct DemoRecord {
    pub step: u64,
    pub loss: f64,
    pub lambda_t: f64,
    /// Mean over scenes of the left-half mass of `Attn_L`.
    pub left_mass: f64,
}

/// Finite-difference step size used by the demo and the gradient checks.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Default demo learning rate.
///
/// The prior loss is a mean of squared differences between unit-mass maps,
/// so its gradients w.r.t. the head scores sit around 1e-6 on a 14x28 grid;
/// plain gradient descent needs a step size of this order to move the
/// softmax at all within a few hundred steps.
pub const DEMO_LEARNING_RATE: f64 = 2e5;

fn pack_head_params(params: &EncoderParams) -> Vec<f64> {
    let mut p = params.score_l.clone();
    p.push(params.bias_l);
    p.extend_from_slice(&params.score_r);
    p.push(params.bias_r);
    p
}

fn unpack_head_params(params: &mut EncoderParams, p: &[f64]) {
    let d = params.score_l.len();
    params.score_l.copy_from_slice(&p[..d]);
    params.bias_l = p[d];
    params.score_r.copy_from_slice(&p[d + 1..2 * d + 1]);
    params.bias_r = p[2 * d + 1];
}

fn batch_prior_loss(
    features: &[FeatureMap],
    p: &[f64],
    targets: &(TargetMap, TargetMap),
    lambda_t: f64,
) -> Result<f64> {
    let d = (p.len() - 2) / 2;
    let mut total = 0.0;
    for v in features {
        let attn_l = head_attention(v, &p[..d], p[d])?;
        let attn_r = head_attention(v, &p[d + 1..2 * d + 1], p[2 * d + 1])?;
        total += prior_loss(&attn_l, &attn_r, targets, lambda_t)?;
    }
    Ok(total / features.len() as f64)
}

fn batch_left_mass(features: &[FeatureMap], p: &[f64]) -> Result<f64> {
    let d = (p.len() - 2) / 2;
    let mut total = 0.0;
    for v in features {
        let attn_l = head_attention(v, &p[..d], p[d])?;
        total += attn_l.left_half_mass();
    }
    Ok(total / features.len() as f64)
}

/// Trains the dual-head score parameters against the logistic targets by
/// plain gradient descent on the annealed prior loss, with gradients from
/// [`finite_diff_grad`].
///
/// Returns the trained encoder parameters and a trace with one record per
/// step plus a final post-update record (`steps + 1` rows).
pub fn train_prior_demo(
    scenes: &[FrameTensor],
    prior_cfg: &PriorConfig,
    sched: &AnnealSchedule,
    steps: u64,
    lr: f64,
    seed: u64,
) -> Result<(EncoderParams, Vec<DemoRecord>)> {
    if scenes.is_empty() {
        return Err(Error::EmptyInput);
    }
    if steps == 0 {
        return Err(Error::InvalidArg("demo needs at least one step".into()));
    }
    let mut params = EncoderParams::new(EncoderConfig::default(), seed);
    let features: Vec<FeatureMap> = scenes
        .iter()
        .map(|frame| encode_frame(frame, &params))
        .collect::<Result<_>>()?;
    for v in &features {
        if v.height() != prior_cfg.height || v.width() != prior_cfg.width {
            return Err(Error::ShapeMismatch(format!(
                "feature grid {}x{} vs prior grid {}x{}",
                v.height(),
                v.width(),
                prior_cfg.height,
                prior_cfg.width
            )));
        }
    }
    let targets = logistic_targets(prior_cfg)?;

    let mut p = pack_head_params(&params);
    let mut trace = Vec::with_capacity(steps as usize + 1);
    for t in 0..steps {
        let lambda_t = anneal_weight(t, sched);
        let loss = batch_prior_loss(&features, &p, &targets, lambda_t)?;
        if !loss.is_finite() {
            return Err(Error::Diverged);
        }
        trace.push(DemoRecord {
            step: t,
            loss,
            lambda_t,
            left_mass: batch_left_mass(&features, &p)?,
        });
        let grad = finite_diff_grad(
            |q| batch_prior_loss(&features, q, &targets, lambda_t),
            &p,
            GRAD_CHECK_STEP,
        )?;
        for (pi, gi) in p.iter_mut().zip(&grad) {
            *pi -= lr * gi;
        }
    }
    let lambda_final = anneal_weight(steps, sched);
    let final_loss = batch_prior_loss(&features, &p, &targets, lambda_final)?;
    if !final_loss.is_finite() {
        return Err(Error::Diverged);
    }
    trace.push(DemoRecord {
        step: steps,
        loss: final_loss,
        lambda_t: lambda_final,
        left_mass: batch_left_mass(&features, &p)?,
    });
    unpack_head_params(&mut params, &p);
    Ok((params, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{stft, StftConfig, Waveform};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rustfft::num_complex::Complex64;

    fn random_spec(frames: usize, seed: u64) -> ComplexSpectrogram {
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..cfg.freq_bins() * frames)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexSpectrogram::from_data(cfg, 16_000, frames, data).unwrap()
    }

    #[test]
    fn loss_d_zero_on_equal_inputs() {
        let s = random_spec(6, 1);
        assert_eq!(loss_d(&s, &s).unwrap(), 0.0);
    }

    #[test]
    fn loss_d_unit_offsets_on_1x4_grid() {
        // Four cells each off by 1+0i: sqrt(4) = 2.
        let cfg = StftConfig {
            window_len: 2,
            hop_len: 1,
            fft_len: 2,
            window_kind: crate::spectral::WindowKind::Hann,
        };
        let pred = ComplexSpectrogram::from_data(
            cfg,
            16_000,
            2,
            vec![Complex64::new(1.0, 0.0); 4],
        )
        .unwrap();
        let target =
            ComplexSpectrogram::from_data(cfg, 16_000, 2, vec![Complex64::default(); 4]).unwrap();
        assert!((loss_d(&pred, &target).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn loss_d_matches_double_loop_oracle() {
        let a = random_spec(64, 2);
        let b = random_spec(64, 3);
        let fast = loss_d(&a, &b).unwrap();
        let mut acc = 0.0;
        for f in 0..a.freq_bins() {
            for u in 0..a.frames() {
                let d = a.at(f, u) - b.at(f, u);
                acc += d.re * d.re + d.im * d.im;
            }
        }
        assert!((fast - acc.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn loss_d_triangle_inequality() {
        for seed in 0..5 {
            let a = random_spec(8, 10 + seed);
            let b = random_spec(8, 20 + seed);
            let c = random_spec(8, 30 + seed);
            let ab = loss_d(&a, &b).unwrap();
            let bc = loss_d(&b, &c).unwrap();
            let ac = loss_d(&a, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn loss_rl_additivity_and_symmetry() {
        let tl = random_spec(6, 41);
        let tr = random_spec(6, 42);
        let pl = tl.clone();
        let pr = random_spec(6, 43);
        let rl = loss_rl(&pl, &pr, &tl, &tr).unwrap();
        assert!((rl - loss_d(&pr, &tr).unwrap()).abs() < 1e-12);
        let swapped = loss_rl(&pr, &pl, &tr, &tl).unwrap();
        assert!((rl - swapped).abs() < 1e-12);
        assert_eq!(loss_rl(&tl, &tr, &tl, &tr).unwrap(), 0.0);
    }

    #[test]
    fn total_loss_weighted_sum() {
        let weights = LossWeights::standard(100).unwrap();
        let parts = LossParts {
            l_d: 0.0,
            l_rl: 0.0,
            l_prior_raw: 0.0,
        };
        assert_eq!(total_loss(&parts, &weights, 0), 0.0);

        let parts = LossParts {
            l_d: 1.0,
            l_rl: 1.0,
            l_prior_raw: 0.3,
        };
        // Past the anneal horizon only L_D + 5 * L_RL remains.
        assert!((total_loss(&parts, &weights, 200) - 6.0).abs() < 1e-12);

        let parts = LossParts {
            l_d: 0.0,
            l_rl: 0.0,
            l_prior_raw: 0.5,
        };
        assert!((total_loss(&parts, &weights, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn total_loss_linear_in_rl_and_prior() {
        let weights = LossWeights::standard(50).unwrap();
        let base = LossParts {
            l_d: 0.2,
            l_rl: 0.0,
            l_prior_raw: 0.0,
        };
        let with_rl = LossParts {
            l_rl: 2.0,
            ..base
        };
        let t = 10;
        let delta = total_loss(&with_rl, &weights, t) - total_loss(&base, &weights, t);
        assert!((delta - 5.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn finite_diff_on_square() {
        let grad = finite_diff_grad(|p| Ok(p[0] * p[0]), &[3.0], 1e-4).unwrap();
        assert!((grad[0] - 6.0).abs() < 1e-7);
    }

    #[test]
    fn finite_diff_on_sum_is_ones() {
        let p = [0.3, -1.2, 4.0, 0.0];
        let grad = finite_diff_grad(|p| Ok(p.iter().sum()), &p, 1e-5).unwrap();
        for g in grad {
            assert!((g - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_diff_rejects_bad_step() {
        assert!(finite_diff_grad(|p| Ok(p[0]), &[1.0], 0.0).is_err());
    }

    fn random_features(c: usize, h: usize, w: usize, seed: u64) -> FeatureMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect();
        FeatureMap::from_data(c, h, w, data).unwrap()
    }

    #[test]
    fn analytic_prior_gradient_matches_finite_differences() {
        let cfg = PriorConfig::for_grid(6, 10);
        let targets = logistic_targets(&cfg).unwrap();
        for seed in 0..5 {
            let v = random_features(32, 6, 10, 100 + seed);
            let params = EncoderParams::new(EncoderConfig::default(), 200 + seed);
            let lambda_t = 1.7;
            let analytic = prior_loss_head_gradient(&v, &params, &targets, lambda_t)
                .unwrap()
                .flatten();

            let p0 = pack_head_params(&params);
            let fd = finite_diff_grad(
                |p| {
                    let d = (p.len() - 2) / 2;
                    let attn_l = head_attention(&v, &p[..d], p[d])?;
                    let attn_r = head_attention(&v, &p[d + 1..2 * d + 1], p[2 * d + 1])?;
                    prior_loss(&attn_l, &attn_r, &targets, lambda_t)
                },
                &p0,
                GRAD_CHECK_STEP,
            )
            .unwrap();

            let num: f64 = analytic
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let den: f64 = fd.iter().map(|g| g * g).sum::<f64>().sqrt();
            assert!(num / den < 1e-6, "seed {seed}: rel err {}", num / den);
        }
    }

    fn blob_frame(height: usize, width: usize, center_frac: f64, sigma: f64) -> FrameTensor {
        let cx = center_frac * width as f64;
        let cy = height as f64 / 2.0;
        let mut data = Vec::with_capacity(3 * height * width);
        for _c in 0..3 {
            for h in 0..height {
                for w in 0..width {
                    let dx = w as f64 - cx;
                    let dy = h as f64 - cy;
                    let v = 0.05 + 0.9 * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                    data.push(v.min(1.0));
                }
            }
        }
        FrameTensor::new(height, width, data).unwrap()
    }

    #[test]
    fn demo_single_step_traces_before_and_after() {
        let scenes = vec![blob_frame(224, 448, 0.25, 260.0)];
        let cfg = PriorConfig::for_grid(14, 28);
        let sched = AnnealSchedule::new(2.0, 10).unwrap();
        let (_, trace) = train_prior_demo(&scenes, &cfg, &sched, 1, 1.0, 3).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].step, 0);
        assert_eq!(trace[1].step, 1);
        assert!(trace.iter().all(|r| r.loss.is_finite()));
    }

    #[test]
    fn demo_zero_steps_rejected() {
        let scenes = vec![blob_frame(224, 448, 0.25, 260.0)];
        let cfg = PriorConfig::for_grid(14, 28);
        let sched = AnnealSchedule::new(2.0, 10).unwrap();
        assert!(train_prior_demo(&scenes, &cfg, &sched, 0, 1.0, 3).is_err());
    }

    #[test]
    fn demo_with_zero_lambda_keeps_parameters() {
        let scenes = vec![blob_frame(224, 448, 0.25, 260.0)];
        let cfg = PriorConfig::for_grid(14, 28);
        let sched = AnnealSchedule::new(0.0, 10).unwrap();
        let (trained, trace) =
            train_prior_demo(&scenes, &cfg, &sched, 3, DEMO_LEARNING_RATE, 7).unwrap();
        let fresh = EncoderParams::new(EncoderConfig::default(), 7);
        assert_eq!(trained.score_l, fresh.score_l);
        assert_eq!(trained.score_r, fresh.score_r);
        assert_eq!(trained.bias_l, fresh.bias_l);
        assert!(trace.iter().all(|r| r.loss == 0.0));
    }

    #[test]
    fn demo_shifts_attention_leftward() {
        // Short run; the full 500-step check lives in the acceptance suite.
        let scenes = vec![
            blob_frame(224, 448, 0.2, 260.0),
            blob_frame(224, 448, 0.3, 300.0),
        ];
        let cfg = PriorConfig::for_grid(14, 28);
        let sched = AnnealSchedule::new(2.0, 50).unwrap();
        let (_, trace) =
            train_prior_demo(&scenes, &cfg, &sched, 60, DEMO_LEARNING_RATE, 11).unwrap();
        let first = trace.first().unwrap();
        let last = trace.last().unwrap();
        assert!(last.left_mass > first.left_mass + 0.05);
        assert_eq!(last.lambda_t, 0.0);
    }

    #[test]
    fn stereo_losses_from_real_spectrograms() {
        // loss_rl over stft outputs, exercising the full plumbing once.
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let l: Vec<f64> = (0..2000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let r: Vec<f64> = (0..2000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let sl = stft(&Waveform::new(l, 16_000).unwrap(), cfg).unwrap();
        let sr = stft(&Waveform::new(r, 16_000).unwrap(), cfg).unwrap();
        assert_eq!(loss_rl(&sl, &sr, &sl, &sr).unwrap(), 0.0);
        let shifted = ComplexSpectrogram::from_data(
            cfg,
            16_000,
            sl.frames(),
            sl.data().iter().map(|c| c + Complex64::new(0.1, 0.0)).collect(),
        )
        .unwrap();
        let rl = loss_rl(&shifted, &sr, &sl, &sr).unwrap();
        assert!((rl - loss_d(&shifted, &sl).unwrap()).abs() < 1e-12);
    }
}
