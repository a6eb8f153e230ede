//! Analyze and resynthesize a chirp, demonstrating that the padded STFT with
//! normalized weighted overlap-add reconstructs the signal exactly.

use binauralize::spectral::{istft, stft, StftConfig, Waveform};

fn main() -> binauralize::Result<()> {
    let sr = 16_000u32;
    let len = 10_080;
    let samples: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / sr as f64;
            let freq = 200.0 + 1800.0 * t;
            0.7 * (2.0 * std::f64::consts::PI * freq * t).sin()
        })
        .collect();
    let wave = Waveform::new(samples, sr)?;

    let cfg = StftConfig::default();
    let spec = stft(&wave, cfg)?;
    println!(
        "chirp: {} samples -> {} bins x {} frames (window {}, hop {})",
        wave.len(),
        spec.freq_bins(),
        spec.frames(),
        cfg.window_len,
        cfg.hop_len
    );

    let back = istft(&spec, wave.len())?;
    let num: f64 = wave
        .samples()
        .iter()
        .zip(back.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = wave.samples().iter().map(|a| a * a).sum();
    println!("round-trip relative l2 error: {:.3e}", (num / den).sqrt());

    // Peak bin per frame tracks the chirp upward.
    for u in [2usize, spec.frames() / 2, spec.frames() - 3] {
        let peak = (0..spec.freq_bins())
            .max_by(|&a, &b| {
                spec.at(a, u)
                    .norm()
                    .partial_cmp(&spec.at(b, u).norm())
                    .unwrap()
            })
            .unwrap();
        let hz = peak as f64 * sr as f64 / cfg.fft_len as f64;
        println!("frame {:>2}: peak bin {:>3} (~{:.0} Hz)", u, peak, hz);
    }
    Ok(())
}
