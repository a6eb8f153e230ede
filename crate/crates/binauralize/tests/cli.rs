//! Integration tests for the command-line surface: subcommands, file
//! conventions, and exit codes (0 ok, 2 usage, 3 data format, 4 numeric).

use std::path::Path;
use std::process::Command;

use binauralize::refine::plan_segments;
use binauralize::spectral::{diff_spectrogram, stft, Waveform};
use binauralize::toolkit::{
    read_tensor, read_wav, write_spectrogram, write_wav, PipelineConfig, WavFormat,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_binauralize"))
}

#[test]
fn unknown_arguments_exit_with_usage_code() {
    let status = bin().arg("--definitely-not-a-flag").status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["synth", "--azimuth", "2.5"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_input_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["spatialize", "--input"])
        .arg(dir.path().join("nope.wav"))
        .arg("--output")
        .arg(dir.path().join("out.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn stereo_input_to_spatialize_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let wave = Waveform::zeros(2_000, 16_000);
    let path = dir.path().join("stereo.wav");
    write_wav(&path, &[&wave, &wave], WavFormat::Float32).unwrap();
    let status = bin()
        .args(["spatialize", "--input"])
        .arg(&path)
        .arg("--output")
        .arg(dir.path().join("out.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn synth_writes_the_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scene");
    let status = bin()
        .args([
            "synth",
            "--azimuth",
            "-0.3",
            "--duration",
            "0.25",
            "--out-dir",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["frame.btf", "left.wav", "right.wav", "stereo.wav", "mono.wav"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let mono = read_wav(&out.join("mono.wav")).unwrap();
    assert_eq!(mono.len(), 1);
    assert_eq!(mono[0].len(), 4_000);
}

fn write_candidates(
    dir: &Path,
    left: &Waveform,
    right: &Waveform,
    cfg: &PipelineConfig,
    noise: f64,
) {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rustfft::num_complex::Complex64;

    let plan = plan_segments(left.len(), cfg.seg_len, cfg.infer_hop).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (i, seg) in plan.segments.iter().enumerate() {
        let slice = |w: &Waveform| {
            Waveform::new(
                w.samples()[seg.start..seg.end()].to_vec(),
                w.sample_rate(),
            )
            .unwrap()
        };
        let s_l = stft(&slice(left), cfg.stft).unwrap();
        let s_r = stft(&slice(right), cfg.stft).unwrap();
        let s_d = diff_spectrogram(&s_l, &s_r).unwrap();
        for (k, scale) in [0.0, noise].iter().enumerate() {
            let mut corrupt = |s: &binauralize::spectral::ComplexSpectrogram| {
                binauralize::spectral::ComplexSpectrogram::from_data(
                    s.config(),
                    s.sample_rate(),
                    s.frames(),
                    s.data()
                        .iter()
                        .map(|c| {
                            c + Complex64::new(
                                scale * rng.gen_range(-1.0..1.0),
                                scale * rng.gen_range(-1.0..1.0),
                            )
                        })
                        .collect(),
                )
                .unwrap()
            };
            let base = format!("seg{:04}_cand{:02}", i, k);
            write_spectrogram(&dir.join(format!("{base}_sl.btf")), &corrupt(&s_l)).unwrap();
            write_spectrogram(&dir.join(format!("{base}_sr.btf")), &corrupt(&s_r)).unwrap();
            write_spectrogram(&dir.join(format!("{base}_sd.btf")), &corrupt(&s_d)).unwrap();
        }
    }
}

#[test]
fn fuse_recovers_ground_truth_from_candidate_tensors() {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    let dir = tempfile::tempdir().unwrap();
    let cand_dir = dir.path().join("cands");
    std::fs::create_dir_all(&cand_dir).unwrap();

    let cfg = PipelineConfig {
        seg_len: 4_000,
        infer_hop: 1_000,
        ..PipelineConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let len = 8_000;
    let left = Waveform::new(
        (0..len).map(|_| rng.gen_range(-0.4..0.4)).collect(),
        16_000,
    )
    .unwrap();
    let right = Waveform::new(
        (0..len).map(|_| rng.gen_range(-0.4..0.4)).collect(),
        16_000,
    )
    .unwrap();
    let mono = binauralize::spectral::mono_mix(&left, &right).unwrap();
    let mono_path = dir.path().join("mono.wav");
    write_wav(&mono_path, &[&mono], WavFormat::Float32).unwrap();
    write_candidates(&cand_dir, &left, &right, &cfg, 0.2);

    let out_path = dir.path().join("fused.wav");
    let status = bin()
        .args(["fuse", "--seg-len", "4000", "--hop", "1000", "--input"])
        .arg(&mono_path)
        .arg("--candidates")
        .arg(&cand_dir)
        .arg("--output")
        .arg(&out_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let fused = read_wav(&out_path).unwrap();
    assert_eq!(fused.len(), 2);
    assert_eq!(fused[0].len(), len);
    // The clean candidate dominates, so the fused output sits near the truth
    // (tensor storage is f32, so allow quantization slack).
    let rmse = |a: &Waveform, b: &Waveform| {
        (a.samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            / a.len() as f64)
            .sqrt()
    };
    assert!(rmse(&fused[0], &left) < 1e-3, "rmse {}", rmse(&fused[0], &left));
    assert!(rmse(&fused[1], &right) < 1e-3);
}

#[test]
fn fuse_with_empty_candidate_dir_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cand_dir = dir.path().join("empty");
    std::fs::create_dir_all(&cand_dir).unwrap();
    let mono = Waveform::zeros(4_000, 16_000);
    let mono_path = dir.path().join("mono.wav");
    write_wav(&mono_path, &[&mono], WavFormat::Float32).unwrap();
    let status = bin()
        .args(["fuse", "--seg-len", "4000", "--hop", "1000", "--input"])
        .arg(&mono_path)
        .arg("--candidates")
        .arg(&cand_dir)
        .arg("--output")
        .arg(dir.path().join("out.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn evaluate_writes_table_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let wave = Waveform::new(
        (0..4_000)
            .map(|i| 0.4 * (2.0 * std::f64::consts::PI * 330.0 * i as f64 / 16_000.0).sin())
            .collect(),
        16_000,
    )
    .unwrap();
    let gt = dir.path().join("gt.wav");
    let pred = dir.path().join("pred.wav");
    write_wav(&gt, &[&wave, &wave], WavFormat::Float32).unwrap();
    write_wav(&pred, &[&wave, &wave], WavFormat::Float32).unwrap();

    let records = dir.path().join("records.txt");
    let output = bin()
        .args(["evaluate", "--pred"])
        .arg(&pred)
        .arg("--gt")
        .arg(&gt)
        .arg("--records")
        .arg(&records)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("STFT"), "table header missing: {stdout}");
    assert!(stdout.contains("identical"));
    let recorded = std::fs::read_to_string(&records).unwrap();
    assert!(recorded.lines().count() >= 2);
    assert!(recorded.contains("clip=pred.wav"));
    assert!(recorded.contains("__aggregate__"));
}

#[test]
fn priors_dump_normalized_maps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("maps");
    let status = bin()
        .args(["priors", "--height", "7", "--width", "18", "--out-dir"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for name in ["wl.btf", "wr.btf"] {
        let (dims, data) = read_tensor(&out.join(name)).unwrap();
        assert_eq!(dims, vec![7, 18]);
        let total: f64 = data.iter().map(|&v| v as f64).sum();
        assert!((total - 1.0).abs() < 1e-4, "{name} sums to {total}");
    }
}

#[test]
fn demo_train_emits_one_record_per_step_plus_final() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("trace.txt");
    let status = bin()
        .args(["demo-train", "--steps", "5", "--records"])
        .arg(&records)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&records).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("step=0 "));
    assert!(lines[5].starts_with("step=5 "));
    for line in lines {
        assert!(line.contains("loss=") && line.contains("lambda_t=") && line.contains("left_mass="));
    }
}

#[test]
fn saved_parameters_reproduce_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    assert!(bin()
        .args(["synth", "--duration", "0.3", "--out-dir"])
        .arg(&scene)
        .status()
        .unwrap()
        .success());

    let params_dir = dir.path().join("params");
    let out_a = dir.path().join("a.wav");
    let status = bin()
        .args(["spatialize", "--seed", "9", "--seg-len", "2000", "--hop", "500"])
        .arg("--input")
        .arg(scene.join("mono.wav"))
        .arg("--frame")
        .arg(scene.join("frame.btf"))
        .arg("--output")
        .arg(&out_a)
        .arg("--save-params")
        .arg(&params_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(params_dir.join("encoder/manifest.txt").exists());
    assert!(params_dir.join("network/manifest.txt").exists());

    // Loading the saved tensors (a different seed is irrelevant) gives a
    // deterministic run again; outputs agree up to the f32 storage of the
    // parameters themselves.
    let out_b = dir.path().join("b.wav");
    let status = bin()
        .args(["spatialize", "--seed", "1234", "--seg-len", "2000", "--hop", "500"])
        .arg("--input")
        .arg(scene.join("mono.wav"))
        .arg("--frame")
        .arg(scene.join("frame.btf"))
        .arg("--output")
        .arg(&out_b)
        .arg("--load-params")
        .arg(&params_dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let a = read_wav(&out_a).unwrap();
    let b = read_wav(&out_b).unwrap();
    for (ca, cb) in a.iter().zip(&b) {
        let worst = ca
            .samples()
            .iter()
            .zip(cb.samples())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        let scale = ca.samples().iter().fold(0.0f64, |m, s| m.max(s.abs()));
        assert!(worst <= 1e-4 * scale.max(1e-9), "worst {worst} scale {scale}");
    }

    // A second load-params run is byte-identical to the first.
    let out_c = dir.path().join("c.wav");
    assert!(bin()
        .args(["spatialize", "--seg-len", "2000", "--hop", "500"])
        .arg("--input")
        .arg(scene.join("mono.wav"))
        .arg("--frame")
        .arg(scene.join("frame.btf"))
        .arg("--output")
        .arg(&out_c)
        .arg("--load-params")
        .arg(&params_dir)
        .status()
        .unwrap()
        .success());
    assert_eq!(
        std::fs::read(&out_b).unwrap(),
        std::fs::read(&out_c).unwrap()
    );
}

#[test]
fn numeric_failures_exit_with_code_4() {
    // A Hann window with hop == window has overlap-add zeros, and its
    // 5-bin spectrogram is too small for the network: either way the run
    // dies with a numeric failure.
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("degenerate.cfg");
    std::fs::write(
        &cfg_path,
        "window=8\nhop=8\nfft=8\nseg_len=4000\ninfer_hop=1000\n",
    )
    .unwrap();
    let mono = Waveform::new(
        (0..4_000)
            .map(|i| 0.3 * (i as f64 * 0.01).sin())
            .collect(),
        16_000,
    )
    .unwrap();
    let mono_path = dir.path().join("mono.wav");
    write_wav(&mono_path, &[&mono], WavFormat::Float32).unwrap();
    let status = bin()
        .args(["spatialize", "--config"])
        .arg(&cfg_path)
        .arg("--input")
        .arg(&mono_path)
        .arg("--output")
        .arg(dir.path().join("out.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));

    // SNR against all-zero ground truth is undefined.
    let zero = Waveform::zeros(2_000, 16_000);
    let gt_path = dir.path().join("zero.wav");
    write_wav(&gt_path, &[&zero, &zero], WavFormat::Float32).unwrap();
    let pred_path = dir.path().join("pred.wav");
    let short = Waveform::new(mono.samples()[..2_000].to_vec(), 16_000).unwrap();
    write_wav(&pred_path, &[&short, &short], WavFormat::Float32).unwrap();
    let status = bin()
        .args(["evaluate", "--pred"])
        .arg(&pred_path)
        .arg("--gt")
        .arg(&gt_path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn config_file_overrides_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("pipeline.cfg");
    std::fs::write(&cfg_path, "seg_len=2000\ninfer_hop=500\n").unwrap();

    let scene = dir.path().join("scene");
    assert!(bin()
        .args(["synth", "--duration", "0.3", "--out-dir"])
        .arg(&scene)
        .status()
        .unwrap()
        .success());

    let out = dir.path().join("out.wav");
    let status = bin()
        .args(["spatialize", "--config"])
        .arg(&cfg_path)
        .arg("--input")
        .arg(scene.join("mono.wav"))
        .arg("--frame")
        .arg(scene.join("frame.btf"))
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let channels = read_wav(&out).unwrap();
    assert_eq!(channels.len(), 2);
    assert_eq!(channels[0].len(), 4_800);

    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "mystery=1\n").unwrap();
    let status = bin()
        .args(["spatialize", "--config"])
        .arg(&bad_cfg)
        .arg("--input")
        .arg(scene.join("mono.wav"))
        .arg("--output")
        .arg(dir.path().join("out2.wav"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
