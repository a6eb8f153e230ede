//! Evaluation metrics for predicted vs ground-truth binaural audio: complex
//! spectrogram distance, envelope distance, phase distance and SNR.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::losses::loss_d;
use crate::spectral::{stft, ComplexSpectrogram, StftConfig, Waveform};

/// SNR cap applied when the error energy falls below 1e-12 of the signal
/// energy; such pairs are flagged identical.
pub const SNR_CAP_DB: f64 = 120.0;

/// Per-clip metric values.
#[derive(Debug, Clone, Copy)]
pub struct ClipMetrics {
    pub stft_l2: f64,
    pub env_dist: f64,
    pub phase_dist: f64,
    pub snr_db: f64,
    /// True when prediction and ground truth were numerically identical and
    /// the SNR was capped.
    pub snr_identical: bool,
}

/// Per-clip values plus their mean.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub per_clip: Vec<(String, ClipMetrics)>,
    pub aggregate: ClipMetrics,
}

impl MetricReport {
    pub fn from_clips(per_clip: Vec<(String, ClipMetrics)>) -> Result<Self> {
        if per_clip.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = per_clip.len() as f64;
        let mut agg = ClipMetrics {
            stft_l2: 0.0,
            env_dist: 0.0,
            phase_dist: 0.0,
            snr_db: 0.0,
            snr_identical: true,
        };
        for (_, m) in &per_clip {
            agg.stft_l2 += m.stft_l2;
            agg.env_dist += m.env_dist;
            agg.phase_dist += m.phase_dist;
            agg.snr_db += m.snr_db;
            agg.snr_identical &= m.snr_identical;
        }
        agg.stft_l2 /= n;
        agg.env_dist /= n;
        agg.phase_dist /= n;
        agg.snr_db /= n;
        Ok(Self {
            per_clip,
            aggregate: agg,
        })
    }
}

fn check_pair(pred: &ComplexSpectrogram, gt: &ComplexSpectrogram) -> Result<()> {
    if pred.freq_bins() != gt.freq_bins() || pred.frames() != gt.frames() {
        return Err(Error::ShapeMismatch(format!(
            "spectrograms {}x{} vs {}x{}",
            pred.freq_bins(),
            pred.frames(),
            gt.freq_bins(),
            gt.frames()
        )));
    }
    Ok(())
}

/// Sum over ears of the Frobenius distance between complex spectrograms.
pub fn stft_l2(
    pred: (&ComplexSpectrogram, &ComplexSpectrogram),
    gt: (&ComplexSpectrogram, &ComplexSpectrogram),
) -> Result<f64> {
    check_pair(pred.0, gt.0)?;
    check_pair(pred.1, gt.1)?;
    Ok(loss_d(pred.0, gt.0)? + loss_d(pred.1, gt.1)?)
}

/// Magnitude of the analytic signal via the full-length frequency-domain
/// Hilbert construction.
pub fn envelope(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    // Analytic signal: keep DC (and Nyquist for even n), double positive
    // frequencies, zero negative frequencies.
    let half = n / 2;
    for (k, slot) in buf.iter_mut().enumerate().take(n).skip(1) {
        if k < half || (!n.is_multiple_of(2) && k == half) {
            *slot *= 2.0;
        } else if !(n.is_multiple_of(2) && k == half) {
            *slot = Complex64::default();
        }
    }
    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| (c * scale).norm()).collect()
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sum over ears of the l2 distance between time-domain envelopes.
pub fn env_distance(
    pred: (&Waveform, &Waveform),
    gt: (&Waveform, &Waveform),
) -> Result<f64> {
    for (p, g) in [(pred.0, gt.0), (pred.1, gt.1)] {
        if p.len() != g.len() {
            return Err(Error::ShapeMismatch(format!(
                "waveform lengths {} vs {}",
                p.len(),
                g.len()
            )));
        }
    }
    let mut total = 0.0;
    for (p, g) in [(pred.0, gt.0), (pred.1, gt.1)] {
        total += l2_distance(&envelope(p.samples()), &envelope(g.samples()));
    }
    Ok(total)
}

#[inline]
fn wrap_phase(d: f64) -> f64 {
    d.sin().atan2(d.cos())
}

/// Mean over ears and cells of the wrapped absolute phase difference,
/// bounded by pi.
pub fn phase_distance(
    pred: (&ComplexSpectrogram, &ComplexSpectrogram),
    gt: (&ComplexSpectrogram, &ComplexSpectrogram),
) -> Result<f64> {
    check_pair(pred.0, gt.0)?;
    check_pair(pred.1, gt.1)?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for (p, g) in [(pred.0, gt.0), (pred.1, gt.1)] {
        for (pc, gc) in p.data().iter().zip(g.data()) {
            let delta = wrap_phase(pc.im.atan2(pc.re) - gc.im.atan2(gc.re));
            acc += delta.abs();
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// Signal-to-noise ratio result.
#[derive(Debug, Clone, Copy)]
pub struct SnrResult {
    pub db: f64,
    /// True when the error energy was below 1e-12 of the signal energy and
    /// the value was capped at [`SNR_CAP_DB`].
    pub identical: bool,
}

/// `10 log10(sum gt^2 / sum (gt - pred)^2)` with both ears pooled.
pub fn snr(pred: (&Waveform, &Waveform), gt: (&Waveform, &Waveform)) -> Result<SnrResult> {
    for (p, g) in [(pred.0, gt.0), (pred.1, gt.1)] {
        if p.len() != g.len() {
            return Err(Error::ShapeMismatch(format!(
                "waveform lengths {} vs {}",
                p.len(),
                g.len()
            )));
        }
    }
    let mut signal = 0.0;
    let mut noise = 0.0;
    for (p, g) in [(pred.0, gt.0), (pred.1, gt.1)] {
        for (ps, gs) in p.samples().iter().zip(g.samples()) {
            signal += gs * gs;
            let e = gs - ps;
            noise += e * e;
        }
    }
    if signal == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    if noise < 1e-12 * signal {
        return Ok(SnrResult {
            db: SNR_CAP_DB,
            identical: true,
        });
    }
    Ok(SnrResult {
        db: 10.0 * (signal / noise).log10(),
        identical: false,
    })
}

/// Computes all four metrics for one stereo clip, taking spectrograms with
/// the given config.
pub fn evaluate_clip(
    pred: (&Waveform, &Waveform),
    gt: (&Waveform, &Waveform),
    cfg: StftConfig,
) -> Result<ClipMetrics> {
    let pl = stft(pred.0, cfg)?;
    let pr = stft(pred.1, cfg)?;
    let gl = stft(gt.0, cfg)?;
    let gr = stft(gt.1, cfg)?;
    let snr_res = snr(pred, gt)?;
    Ok(ClipMetrics {
        stft_l2: stft_l2((&pl, &pr), (&gl, &gr))?,
        env_dist: env_distance(pred, gt)?,
        phase_dist: phase_distance((&pl, &pr), (&gl, &gr))?,
        snr_db: snr_res.db,
        snr_identical: snr_res.identical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_wave(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new(
            (0..len).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            16_000,
        )
        .unwrap()
    }

    fn random_spec(frames: usize, seed: u64) -> ComplexSpectrogram {
        let cfg = StftConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..cfg.freq_bins() * frames)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexSpectrogram::from_data(cfg, 16_000, frames, data).unwrap()
    }

    #[test]
    fn stft_l2_zero_and_single_ear() {
        let l = random_spec(8, 1);
        let r = random_spec(8, 2);
        assert_eq!(stft_l2((&l, &r), (&l, &r)).unwrap(), 0.0);

        let r2 = random_spec(8, 3);
        let only_right = stft_l2((&l, &r2), (&l, &r)).unwrap();
        assert!((only_right - loss_d(&r2, &r).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn stft_l2_matches_brute_force() {
        let pl = random_spec(16, 4);
        let pr = random_spec(16, 5);
        let gl = random_spec(16, 6);
        let gr = random_spec(16, 7);
        let fast = stft_l2((&pl, &pr), (&gl, &gr)).unwrap();
        let mut acc_l = 0.0;
        let mut acc_r = 0.0;
        for f in 0..pl.freq_bins() {
            for u in 0..pl.frames() {
                acc_l += (pl.at(f, u) - gl.at(f, u)).norm_sqr();
                acc_r += (pr.at(f, u) - gr.at(f, u)).norm_sqr();
            }
        }
        assert!((fast - (acc_l.sqrt() + acc_r.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn stft_l2_triangle_inequality() {
        for seed in 0..5 {
            let a = (random_spec(8, 50 + seed), random_spec(8, 60 + seed));
            let b = (random_spec(8, 70 + seed), random_spec(8, 80 + seed));
            let c = (random_spec(8, 90 + seed), random_spec(8, 100 + seed));
            let ab = stft_l2((&a.0, &a.1), (&b.0, &b.1)).unwrap();
            let bc = stft_l2((&b.0, &b.1), (&c.0, &c.1)).unwrap();
            let ac = stft_l2((&a.0, &a.1), (&c.0, &c.1)).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn envelope_of_sine_is_flat_in_the_interior() {
        let sr = 16_000;
        let amp = 0.8;
        let n = 8000;
        let sine: Vec<f64> = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / sr as f64).sin())
            .collect();
        let env = envelope(&sine);
        for v in &env[n / 10..9 * n / 10] {
            assert!((v - amp).abs() < 0.02 * amp, "envelope {v}");
        }
    }

    #[test]
    fn env_distance_zero_sine_vs_silence() {
        // Envelope of a pure tone is ~constant A, so distance to silence is
        // ~A*sqrt(T); check within a few percent (edges deviate slightly).
        let sr = 16_000;
        let amp = 0.5;
        let n = 8000usize;
        let sine = Waveform::new(
            (0..n)
                .map(|i| amp * (2.0 * std::f64::consts::PI * 500.0 * i as f64 / sr as f64).sin())
                .collect(),
            sr,
        )
        .unwrap();
        let silence = Waveform::zeros(n, sr);
        let d = env_distance((&sine, &silence), (&silence, &silence)).unwrap();
        let expect = amp * (n as f64).sqrt();
        assert!((d - expect).abs() < 0.05 * expect, "{d} vs {expect}");
    }

    #[test]
    fn env_distance_ignores_polarity() {
        let x = random_wave(4000, 8);
        assert_eq!(env_distance((&x, &x), (&x, &x)).unwrap(), 0.0);
        let neg = Waveform::new(x.samples().iter().map(|s| -s).collect(), 16_000).unwrap();
        let d = env_distance((&neg, &neg), (&x, &x)).unwrap();
        assert!(d < 1e-9);
    }

    #[test]
    fn env_distance_triangle_inequality() {
        for seed in 0..5 {
            let a = (random_wave(1500, 300 + seed), random_wave(1500, 310 + seed));
            let b = (random_wave(1500, 320 + seed), random_wave(1500, 330 + seed));
            let c = (random_wave(1500, 340 + seed), random_wave(1500, 350 + seed));
            let ab = env_distance((&a.0, &a.1), (&b.0, &b.1)).unwrap();
            let bc = env_distance((&b.0, &b.1), (&c.0, &c.1)).unwrap();
            let ac = env_distance((&a.0, &a.1), (&c.0, &c.1)).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn phase_distance_quarter_turn() {
        let l = random_spec(8, 9);
        let r = random_spec(8, 10);
        assert_eq!(phase_distance((&l, &r), (&l, &r)).unwrap(), 0.0);

        let rot = |s: &ComplexSpectrogram| {
            ComplexSpectrogram::from_data(
                s.config(),
                s.sample_rate(),
                s.frames(),
                s.data()
                    .iter()
                    .map(|c| Complex64::new(0.0, 1.0) * c)
                    .collect(),
            )
            .unwrap()
        };
        let d = phase_distance((&rot(&l), &rot(&r)), (&l, &r)).unwrap();
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn phase_distance_bounded_by_pi() {
        for seed in 0..5 {
            let p = (random_spec(6, 200 + seed), random_spec(6, 210 + seed));
            let g = (random_spec(6, 220 + seed), random_spec(6, 230 + seed));
            let d = phase_distance((&p.0, &p.1), (&g.0, &g.1)).unwrap();
            assert!((0.0..=std::f64::consts::PI).contains(&d));
        }
    }

    #[test]
    fn snr_identical_is_capped_and_flagged() {
        let x = random_wave(2000, 11);
        let res = snr((&x, &x), (&x, &x)).unwrap();
        assert!(res.identical);
        assert_eq!(res.db, SNR_CAP_DB);
    }

    #[test]
    fn snr_at_constructed_noise_power() {
        // Noise at 1e-2 of signal power gives 20 dB.
        let sr = 16_000;
        let n = 16_000usize;
        let gt_l = random_wave(n, 12);
        let gt_r = random_wave(n, 13);
        let signal: f64 = gt_l
            .samples()
            .iter()
            .chain(gt_r.samples())
            .map(|s| s * s)
            .sum();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let raw_l: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let raw_r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let raw_power: f64 = raw_l.iter().chain(&raw_r).map(|s| s * s).sum();
        let scale = (signal * 1e-2 / raw_power).sqrt();
        let pred_l = Waveform::new(
            gt_l.samples()
                .iter()
                .zip(&raw_l)
                .map(|(s, e)| s + scale * e)
                .collect(),
            sr,
        )
        .unwrap();
        let pred_r = Waveform::new(
            gt_r.samples()
                .iter()
                .zip(&raw_r)
                .map(|(s, e)| s + scale * e)
                .collect(),
            sr,
        )
        .unwrap();
        let res = snr((&pred_l, &pred_r), (&gt_l, &gt_r)).unwrap();
        assert!((res.db - 20.0).abs() < 0.5, "snr {}", res.db);
        assert!(!res.identical);
    }

    #[test]
    fn snr_zero_prediction_is_zero_db() {
        let x = random_wave(3000, 15);
        let zero = Waveform::zeros(3000, 16_000);
        let res = snr((&zero, &zero), (&x, &x)).unwrap();
        assert!(res.db.abs() < 1e-12);
    }

    #[test]
    fn snr_rejects_silent_ground_truth() {
        let zero = Waveform::zeros(100, 16_000);
        assert!(matches!(
            snr((&zero, &zero), (&zero, &zero)),
            Err(Error::UndefinedSnr)
        ));
    }

    #[test]
    fn snr_scale_invariance() {
        let gt = random_wave(2000, 16);
        let pred = random_wave(2000, 17);
        let a = snr((&pred, &pred), (&gt, &gt)).unwrap();
        let scale = 3.7;
        let gts = Waveform::new(gt.samples().iter().map(|s| s * scale).collect(), 16_000).unwrap();
        let preds =
            Waveform::new(pred.samples().iter().map(|s| s * scale).collect(), 16_000).unwrap();
        let b = snr((&preds, &preds), (&gts, &gts)).unwrap();
        assert!((a.db - b.db).abs() < 1e-9);
    }

    #[test]
    fn metrics_symmetric_under_lr_swap() {
        let pl = random_wave(3000, 18);
        let pr = random_wave(3000, 19);
        let gl = random_wave(3000, 20);
        let gr = random_wave(3000, 21);
        let cfg = StftConfig::default();
        let a = evaluate_clip((&pl, &pr), (&gl, &gr), cfg).unwrap();
        let b = evaluate_clip((&pr, &pl), (&gr, &gl), cfg).unwrap();
        assert!((a.stft_l2 - b.stft_l2).abs() < 1e-9);
        assert!((a.env_dist - b.env_dist).abs() < 1e-9);
        assert!((a.phase_dist - b.phase_dist).abs() < 1e-9);
        assert!((a.snr_db - b.snr_db).abs() < 1e-9);
    }

    #[test]
    fn report_aggregates_means() {
        let m1 = ClipMetrics {
            stft_l2: 1.0,
            env_dist: 0.2,
            phase_dist: 0.4,
            snr_db: 10.0,
            snr_identical: false,
        };
        let m2 = ClipMetrics {
            stft_l2: 3.0,
            env_dist: 0.4,
            phase_dist: 0.8,
            snr_db: 30.0,
            snr_identical: false,
        };
        let report =
            MetricReport::from_clips(vec![("a".into(), m1), ("b".into(), m2)]).unwrap();
        assert!((report.aggregate.stft_l2 - 2.0).abs() < 1e-12);
        assert!((report.aggregate.env_dist - 0.3).abs() < 1e-12);
        assert!((report.aggregate.phase_dist - 0.6).abs() < 1e-12);
        assert!((report.aggregate.snr_db - 20.0).abs() < 1e-12);
    }
}
