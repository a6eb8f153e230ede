//! Compute the four binaural metrics between a clean stereo pair and
//! progressively noisier copies.

use binauralize::metrics::evaluate_clip;
use binauralize::spectral::{StftConfig, Waveform};
use binauralize::toolkit::{synth_scene, SceneSpec, SourceKind};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn add_noise(w: &Waveform, scale: f64, rng: &mut ChaCha8Rng) -> Waveform {
    Waveform::new(
        w.samples()
            .iter()
            .map(|s| s + scale * rng.gen_range(-1.0..1.0))
            .collect(),
        w.sample_rate(),
    )
    .unwrap()
}

fn main() -> binauralize::Result<()> {
    let scene = SceneSpec {
        azimuth: 0.4,
        ild_db: 5.0,
        itd_samples: 9,
        source: SourceKind::Noise,
        duration_s: 1.0,
        ..SceneSpec::default()
    };
    let (_, left, right, _) = synth_scene(&scene, 3)?;
    let cfg = StftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    println!(
        "{:<12} {:>10} {:>10} {:>10} {:>10}",
        "corruption", "STFT", "ENV", "Phs", "SNR(dB)"
    );
    for scale in [0.0, 0.01, 0.05, 0.2] {
        let pl = add_noise(&left, scale, &mut rng);
        let pr = add_noise(&right, scale, &mut rng);
        let m = evaluate_clip((&pl, &pr), (&left, &right), cfg)?;
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>10.4} {:>10.2}{}",
            format!("noise {scale}"),
            m.stft_l2,
            m.env_dist,
            m.phase_dist,
            m.snr_db,
            if m.snr_identical { " (identical)" } else { "" }
        );
    }
    Ok(())
}
