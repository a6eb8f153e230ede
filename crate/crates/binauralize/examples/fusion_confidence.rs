//! Score hand-built binaural candidates with the mono/phase consistency
//! checks and fuse them, showing how the product-of-experts weight singles
//! out the trustworthy one.

use binauralize::refine::{
    fuse_intra_segment, score_candidate, FusionCandidate, WeightMode,
};
use binauralize::spectral::{diff_spectrogram, mono_mix, stft, ComplexSpectrogram, StftConfig, Waveform};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

fn noisy(spec: &ComplexSpectrogram, scale: f64, rng: &mut ChaCha8Rng) -> ComplexSpectrogram {
    let data = spec
        .data()
        .iter()
        .map(|c| c + Complex64::new(scale * rng.gen_range(-1.0..1.0), scale * rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexSpectrogram::from_data(spec.config(), spec.sample_rate(), spec.frames(), data).unwrap()
}

fn main() -> binauralize::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let len = 10_080;
    let cfg = StftConfig::default();
    let left = Waveform::new((0..len).map(|_| rng.gen_range(-0.4..0.4)).collect(), 16_000)?;
    let right = Waveform::new((0..len).map(|_| rng.gen_range(-0.4..0.4)).collect(), 16_000)?;
    let mono = mono_mix(&left, &right)?;

    let s_l = stft(&left, cfg)?;
    let s_r = stft(&right, cfg)?;
    let s_m = stft(&mono, cfg)?;
    let s_d = diff_spectrogram(&s_l, &s_r)?;

    let eps = 1e-8;
    let truth = FusionCandidate::new(s_l.clone(), s_r.clone(), s_d.clone())?;
    let mild = FusionCandidate::new(
        noisy(&s_l, 0.05, &mut rng),
        noisy(&s_r, 0.05, &mut rng),
        noisy(&s_d, 0.05, &mut rng),
    )?;
    let harsh = FusionCandidate::new(
        noisy(&s_l, 0.3, &mut rng),
        noisy(&s_r, 0.3, &mut rng),
        noisy(&s_d, 0.3, &mut rng),
    )?;

    println!("candidate scores against the mono input:");
    for (name, cand) in [("truth", &truth), ("mild", &mild), ("harsh", &harsh)] {
        let s = score_candidate(cand, &s_m, eps)?;
        println!(
            "  {:<6} e_mono {:.4e}  e_phase {:.4}  W {:.4e}",
            name, s.e_mono, s.e_phase, s.w
        );
    }

    let cands = [truth, mild, harsh];
    let refined = fuse_intra_segment(&cands, &s_m, len, WeightMode::Confidence { eps })?;
    let uniform = fuse_intra_segment(&cands, &s_m, len, WeightMode::Uniform)?;
    println!(
        "normalized confidence weights: {:?}",
        refined
            .weights
            .iter()
            .map(|w| (w * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );

    let err = |w: &Waveform, reference: &Waveform| -> f64 {
        (w.samples()
            .iter()
            .zip(reference.samples())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / w.len() as f64)
            .sqrt()
    };
    println!(
        "left-ear rmse vs truth: confidence {:.3e}, uniform {:.3e}",
        err(&refined.wave_l, &left),
        err(&uniform.wave_l, &left)
    );
    Ok(())
}
