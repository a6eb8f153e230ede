//! Command-line front end for the spatialization library.
//!
//! Exit codes: 0 success, 2 usage error, 3 data-format error, 4 numeric
//! failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use binauralize::audionet::{NetConfig, NetParams};
use binauralize::error::{Error, Result};
use binauralize::losses::{train_prior_demo, DEMO_LEARNING_RATE};
use binauralize::metrics::{evaluate_clip, ClipMetrics, MetricReport};
use binauralize::priors::{logistic_targets, AnnealSchedule, PriorConfig};
use binauralize::refine::plan_segments;
use binauralize::spectral::Waveform;
use binauralize::toolkit::{
    self, load_config, FrameSource, PipelineConfig, SceneSpec, SourceKind, WavFormat,
};
use binauralize::visual::{EncoderConfig, EncoderParams, FrameTensor};

#[derive(Parser)]
#[command(
    name = "binauralize",
    version,
    about = "Visually guided mono-to-binaural audio spatialization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Tone,
    Noise,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene: frame tensor plus left/right/mono WAVs.
    Synth {
        /// Lateral source position in [-1, 1]; -1 is far left.
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        azimuth: f64,
        /// Gaussian blob radius in pixels.
        #[arg(long, default_value_t = 40.0)]
        radius: f64,
        /// Interaural level difference in dB.
        #[arg(long, default_value_t = 3.0)]
        ild_db: f64,
        /// Interaural delay in samples applied to the far ear.
        #[arg(long, default_value_t = 8)]
        itd: i32,
        #[arg(long, value_enum, default_value_t = SourceArg::Tone)]
        source: SourceArg,
        /// Tone frequency in Hz (tone source only).
        #[arg(long, default_value_t = 440.0)]
        freq: f64,
        /// Clip duration in seconds.
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for frame.btf, left.wav, right.wav, mono.wav.
        #[arg(long, default_value = "scene")]
        out_dir: PathBuf,
    },
    /// Spatialize a mono WAV into stereo using the model pipeline.
    Spatialize {
        /// Mono input WAV (resampled to the pipeline rate on load).
        #[arg(long)]
        input: PathBuf,
        /// Video frame as a [3, H, W] tensor file; a synthetic frame is
        /// generated when omitted.
        #[arg(long)]
        frame: Option<PathBuf>,
        /// Azimuth of the synthetic frame used when --frame is omitted.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        synth_azimuth: f64,
        #[arg(long)]
        output: PathBuf,
        /// Seed for the encoder and network parameters.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Disable confidence weighting (uniform averaging baseline).
        #[arg(long)]
        no_refine: bool,
        /// Load encoder/network weights from this parameter directory
        /// (written by --save-params) instead of seeding them.
        #[arg(long)]
        load_params: Option<PathBuf>,
        /// Save the encoder/network weights used for this run.
        #[arg(long)]
        save_params: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seg_len: Option<usize>,
        #[arg(long)]
        hop: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Fuse precomputed per-segment candidate tensors into a stereo WAV.
    Fuse {
        /// Mono input WAV.
        #[arg(long)]
        input: PathBuf,
        /// Directory of candidate tensors named
        /// seg{i:04}_cand{k:02}_{sl,sr,sd}.btf.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        no_refine: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seg_len: Option<usize>,
        #[arg(long)]
        hop: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Compare predicted against ground-truth stereo WAVs.
    Evaluate {
        /// Predicted stereo WAV or a directory of them.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth stereo WAV or a directory of them.
        #[arg(long)]
        gt: PathBuf,
        /// Also write line-delimited records to this file.
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dump the logistic prior target maps as tensor files.
    Priors {
        #[arg(long, default_value_t = 14)]
        height: usize,
        #[arg(long, default_value_t = 28)]
        width: usize,
        /// Logistic slope; defaults to 8/width.
        #[arg(long)]
        slope: Option<f64>,
        /// Ramp center in 1-based columns; defaults to (width+1)/2.
        #[arg(long)]
        center: Option<f64>,
        #[arg(long, default_value = "priors")]
        out_dir: PathBuf,
    },
    /// Train the dual attention heads against the spatial prior and emit the
    /// trace as line-delimited records.
    DemoTrain {
        #[arg(long, default_value_t = 500)]
        steps: u64,
        #[arg(long, default_value_t = DEMO_LEARNING_RATE)]
        lr: f64,
        #[arg(long, default_value_t = 2.0)]
        lambda0: f64,
        /// Anneal horizon; defaults to a quarter of the steps.
        #[arg(long)]
        t_anneal: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

fn load_pipeline_config(
    config: &Option<PathBuf>,
    seg_len: Option<usize>,
    hop: Option<usize>,
    eps: Option<f64>,
) -> Result<PipelineConfig> {
    let mut cfg = match config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seg_len {
        cfg.seg_len = s;
    }
    if let Some(h) = hop {
        cfg.infer_hop = h;
    }
    if let Some(e) = eps {
        cfg.eps = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_mono(path: &Path, rate: u32) -> Result<Waveform> {
    let channels = toolkit::read_wav_at(path, rate)?;
    match channels.len() {
        1 => Ok(channels.into_iter().next().unwrap()),
        n => Err(Error::InvalidArg(format!(
            "{} has {} channels, expected mono",
            path.display(),
            n
        ))),
    }
}

fn read_stereo(path: &Path, rate: u32) -> Result<(Waveform, Waveform)> {
    let mut channels = toolkit::read_wav_at(path, rate)?;
    if channels.len() != 2 {
        return Err(Error::InvalidArg(format!(
            "{} has {} channels, expected stereo",
            path.display(),
            channels.len()
        )));
    }
    let right = channels.pop().unwrap();
    let left = channels.pop().unwrap();
    Ok((left, right))
}

#[allow(clippy::too_many_arguments)]
fn run_synth(
    azimuth: f64,
    radius: f64,
    ild_db: f64,
    itd: i32,
    source: SourceArg,
    freq: f64,
    duration: f64,
    seed: u64,
    out_dir: &Path,
) -> Result<()> {
    let spec = SceneSpec {
        azimuth,
        blob_radius: radius,
        ild_db,
        itd_samples: itd,
        source: match source {
            SourceArg::Tone => SourceKind::Tone { freq_hz: freq },
            SourceArg::Noise => SourceKind::Noise,
        },
        duration_s: duration,
        ..SceneSpec::default()
    };
    let (frame, left, right, mono) = toolkit::synth_scene(&spec, seed)?;
    std::fs::create_dir_all(out_dir)?;
    toolkit::write_frame(&out_dir.join("frame.btf"), &frame)?;
    toolkit::write_wav(&out_dir.join("left.wav"), &[&left], WavFormat::Float32)?;
    toolkit::write_wav(&out_dir.join("right.wav"), &[&right], WavFormat::Float32)?;
    toolkit::write_wav(
        &out_dir.join("stereo.wav"),
        &[&left, &right],
        WavFormat::Float32,
    )?;
    toolkit::write_wav(&out_dir.join("mono.wav"), &[&mono], WavFormat::Float32)?;
    println!(
        "wrote scene ({} samples at {} Hz) to {}",
        mono.len(),
        mono.sample_rate(),
        out_dir.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_spatialize(
    input: &Path,
    frame: &Option<PathBuf>,
    synth_azimuth: f64,
    output: &Path,
    seed: u64,
    no_refine: bool,
    load_params: &Option<PathBuf>,
    save_params: &Option<PathBuf>,
    cfg: &PipelineConfig,
) -> Result<()> {
    let mono = read_mono(input, cfg.sample_rate)?;
    let frame_tensor: FrameTensor = match frame {
        Some(path) => toolkit::read_frame(path)?,
        None => {
            let spec = SceneSpec {
                azimuth: synth_azimuth,
                ..SceneSpec::default()
            };
            toolkit::synth_scene(&spec, seed)?.0
        }
    };
    let (enc, net) = match load_params {
        Some(dir) => (
            EncoderParams::from_named_tensors(
                EncoderConfig::default(),
                &toolkit::load_params(&dir.join("encoder"))?,
            )?,
            NetParams::from_named_tensors(
                NetConfig::default(),
                &toolkit::load_params(&dir.join("network"))?,
            )?,
        ),
        None => (
            EncoderParams::new(EncoderConfig::default(), seed),
            NetParams::new(NetConfig::default(), seed.wrapping_add(1)),
        ),
    };
    if let Some(dir) = save_params {
        toolkit::save_params(&dir.join("encoder"), &enc.named_tensors())?;
        toolkit::save_params(&dir.join("network"), &net.named_tensors())?;
    }
    let (left, right) = toolkit::spatialize_clip(
        &mono,
        FrameSource::Single(&frame_tensor),
        &enc,
        &net,
        cfg,
        !no_refine,
    )?;
    toolkit::write_wav(output, &[&left, &right], WavFormat::Float32)?;
    println!(
        "spatialized {} samples into {}",
        mono.len(),
        output.display()
    );
    Ok(())
}

/// Candidate source backed by tensor files on disk.
struct DiskCandidates<'a> {
    dir: &'a Path,
    cfg: &'a PipelineConfig,
}

impl toolkit::CandidateSource for DiskCandidates<'_> {
    fn candidates(
        &self,
        seg_index: usize,
        _segment: &binauralize::refine::Segment,
        seg_mono: &binauralize::spectral::ComplexSpectrogram,
    ) -> Result<Vec<binauralize::refine::FusionCandidate>> {
        let mut out = Vec::new();
        for k in 0.. {
            let name = |part: &str| {
                self.dir
                    .join(format!("seg{:04}_cand{:02}_{}.btf", seg_index, k, part))
            };
            if !name("sl").exists() {
                break;
            }
            let read = |part: &str| {
                toolkit::read_spectrogram(&name(part), self.cfg.stft, self.cfg.sample_rate)
            };
            let (s_l, s_r, s_d) = (read("sl")?, read("sr")?, read("sd")?);
            for spec in [&s_l, &s_r, &s_d] {
                if spec.frames() != seg_mono.frames() {
                    return Err(Error::Format(format!(
                        "segment {} candidate {} has {} frames, expected {}",
                        seg_index,
                        k,
                        spec.frames(),
                        seg_mono.frames()
                    )));
                }
            }
            out.push(binauralize::refine::FusionCandidate::new(s_l, s_r, s_d)?);
        }
        if out.is_empty() {
            return Err(Error::Format(format!(
                "no candidate tensors for segment {} in {}",
                seg_index,
                self.dir.display()
            )));
        }
        Ok(out)
    }
}

fn run_fuse(
    input: &Path,
    candidates: &Path,
    output: &Path,
    no_refine: bool,
    cfg: &PipelineConfig,
) -> Result<()> {
    let mono = read_mono(input, cfg.sample_rate)?;
    let source = DiskCandidates {
        dir: candidates,
        cfg,
    };
    let plan = plan_segments(mono.len(), cfg.seg_len, cfg.infer_hop)?;
    let (left, right) = toolkit::run_pipeline(&mono, &source, cfg, !no_refine)?;
    toolkit::write_wav(output, &[&left, &right], WavFormat::Float32)?;
    println!(
        "fused {} segments into {}",
        plan.segments.len(),
        output.display()
    );
    Ok(())
}

fn wav_entries(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("wav") {
            let name = path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

fn record_line(name: &str, m: &ClipMetrics) -> String {
    format!(
        "clip={} stft={:.6} env={:.6} phase={:.6} snr_db={:.3} identical={}",
        name, m.stft_l2, m.env_dist, m.phase_dist, m.snr_db, m.snr_identical
    )
}

fn run_evaluate(
    pred: &Path,
    gt: &Path,
    records: &Option<PathBuf>,
    cfg: &PipelineConfig,
) -> Result<()> {
    let pairs: Vec<(String, PathBuf, PathBuf)> = if pred.is_dir() && gt.is_dir() {
        let gt_entries = wav_entries(gt)?;
        wav_entries(pred)?
            .into_iter()
            .filter_map(|(name, p)| {
                gt_entries
                    .iter()
                    .find(|(g, _)| *g == name)
                    .map(|(_, gp)| (name, p, gp.clone()))
            })
            .collect()
    } else if pred.is_dir() || gt.is_dir() {
        return Err(Error::InvalidArg(
            "pred and gt must both be files or both be directories".into(),
        ));
    } else {
        vec![(
            pred.file_name()
                .and_then(|n| n.to_str())
                .unwrap_or("clip")
                .to_string(),
            pred.to_path_buf(),
            gt.to_path_buf(),
        )]
    };
    if pairs.is_empty() {
        return Err(Error::InvalidArg(
            "no matching wav files between pred and gt".into(),
        ));
    }

    let mut per_clip = Vec::new();
    for (name, pred_path, gt_path) in &pairs {
        let (pl, pr) = read_stereo(pred_path, cfg.sample_rate)?;
        let (gl, gr) = read_stereo(gt_path, cfg.sample_rate)?;
        let m = evaluate_clip((&pl, &pr), (&gl, &gr), cfg.stft)?;
        per_clip.push((name.clone(), m));
    }
    let report = MetricReport::from_clips(per_clip)?;

    println!(
        "{:<24} {:>10} {:>10} {:>10} {:>10}",
        "clip", "STFT", "ENV", "Phs", "SNR(dB)"
    );
    for (name, m) in &report.per_clip {
        println!(
            "{:<24} {:>10.4} {:>10.4} {:>10.4} {:>10.2}{}",
            name,
            m.stft_l2,
            m.env_dist,
            m.phase_dist,
            m.snr_db,
            if m.snr_identical { " (identical)" } else { "" }
        );
    }
    let agg = &report.aggregate;
    println!(
        "{:<24} {:>10.4} {:>10.4} {:>10.4} {:>10.2}",
        "mean", agg.stft_l2, agg.env_dist, agg.phase_dist, agg.snr_db
    );

    if let Some(path) = records {
        let mut lines: Vec<String> = report
            .per_clip
            .iter()
            .map(|(name, m)| record_line(name, m))
            .collect();
        lines.push(record_line("__aggregate__", agg));
        std::fs::write(path, lines.join("\n") + "\n")?;
    }
    Ok(())
}

fn run_priors(
    height: usize,
    width: usize,
    slope: Option<f64>,
    center: Option<f64>,
    out_dir: &Path,
) -> Result<()> {
    let mut cfg = PriorConfig::for_grid(height, width);
    if let Some(q) = slope {
        cfg.slope = q;
    }
    if let Some(x0) = center {
        cfg.center = x0;
    }
    let (wl, wr) = logistic_targets(&cfg)?;
    std::fs::create_dir_all(out_dir)?;
    toolkit::write_map(&out_dir.join("wl.btf"), height, width, wl.values())?;
    toolkit::write_map(&out_dir.join("wr.btf"), height, width, wr.values())?;
    println!(
        "wrote {}x{} target maps (left-half masses {:.3}/{:.3}) to {}",
        height,
        width,
        wl.left_half_mass(),
        wr.left_half_mass(),
        out_dir.display()
    );
    Ok(())
}

fn run_demo_train(
    steps: u64,
    lr: f64,
    lambda0: f64,
    t_anneal: Option<u64>,
    seed: u64,
    records: &Option<PathBuf>,
) -> Result<()> {
    let scenes: Vec<FrameTensor> = toolkit::demo_scenes()
        .iter()
        .map(|spec| toolkit::synth_scene(spec, seed).map(|(frame, _, _, _)| frame))
        .collect::<Result<_>>()?;
    let prior_cfg = PriorConfig::for_grid(14, 28);
    let sched = AnnealSchedule::new(lambda0, t_anneal.unwrap_or((steps / 4).max(1)))?;
    let (_, trace) = train_prior_demo(&scenes, &prior_cfg, &sched, steps, lr, seed)?;

    let lines: Vec<String> = trace
        .iter()
        .map(|r| {
            format!(
                "step={} loss={:.9e} lambda_t={:.6} left_mass={:.6}",
                r.step, r.loss, r.lambda_t, r.left_mass
            )
        })
        .collect();
    match records {
        Some(path) => std::fs::write(path, lines.join("\n") + "\n")?,
        None => {
            for line in &lines {
                println!("{}", line);
            }
        }
    }
    let last = trace.last().unwrap();
    eprintln!(
        "demo finished: loss {:.3e}, left mass {:.3}",
        last.loss, last.left_mass
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            azimuth,
            radius,
            ild_db,
            itd,
            source,
            freq,
            duration,
            seed,
            out_dir,
        } => run_synth(
            azimuth, radius, ild_db, itd, source, freq, duration, seed, &out_dir,
        ),
        Command::Spatialize {
            input,
            frame,
            synth_azimuth,
            output,
            seed,
            no_refine,
            load_params,
            save_params,
            config,
            seg_len,
            hop,
            eps,
        } => {
            let cfg = load_pipeline_config(&config, seg_len, hop, eps)?;
            run_spatialize(
                &input,
                &frame,
                synth_azimuth,
                &output,
                seed,
                no_refine,
                &load_params,
                &save_params,
                &cfg,
            )
        }
        Command::Fuse {
            input,
            candidates,
            output,
            no_refine,
            config,
            seg_len,
            hop,
            eps,
        } => {
            let cfg = load_pipeline_config(&config, seg_len, hop, eps)?;
            run_fuse(&input, &candidates, &output, no_refine, &cfg)
        }
        Command::Evaluate {
            pred,
            gt,
            records,
            config,
        } => {
            let cfg = load_pipeline_config(&config, None, None, None)?;
            run_evaluate(&pred, &gt, &records, &cfg)
        }
        Command::Priors {
            height,
            width,
            slope,
            center,
            out_dir,
        } => run_priors(height, width, slope, center, &out_dir),
        Command::DemoTrain {
            steps,
            lr,
            lambda0,
            t_anneal,
            seed,
            records,
        } => run_demo_train(steps, lr, lambda0, t_anneal, seed, &records),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err);
        std::process::exit(err.exit_code());
    }
}
