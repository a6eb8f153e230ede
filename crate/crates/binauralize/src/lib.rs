//! Visually guided mono-to-binaural audio spatialization.
//!
//! The crate turns a mono clip plus a video frame into a stereo pair with
//! interaural cues, using complex STFT processing, a toy visual encoder with
//! dual-head left/right attention, a FiLM-conditioned spectrogram U-Net, and
//! confidence-weighted two-stage test-time fusion. It also ships the spatial
//! prior machinery used to bias the attention heads early in training and the
//! standard binaural evaluation metrics.
//!
//! ## Module map
//!
//! - [`spectral`] — STFT/iSTFT (normalized weighted overlap-add), mono mix,
//!   difference spectrograms.
//! - [`priors`] — logistic left/right target maps, annealing schedule, the
//!   spatial prior loss.
//! - [`visual`] — toy patch encoder, dual-head attention, L/R feature
//!   modulation, pooled descriptor.
//! - [`audionet`] — FiLM-conditioned U-Net and the channel refinement heads.
//! - [`losses`] — training objectives, finite-difference gradient oracle, and
//!   the prior-training demonstration.
//! - [`refine`] — confidence scoring and the two-stage fusion of crops and
//!   overlapping segments.
//! - [`metrics`] — STFT distance, envelope distance, phase distance, SNR.
//! - [`toolkit`] — WAV and tensor file formats, synthetic scenes,
//!   configuration, and the end-to-end pipeline.
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! ```text
//! cargo run --release --example stft_roundtrip
//! cargo run --release --example spatial_priors
//! cargo run --release --example attention_maps
//! cargo run --release --example train_priors
//! cargo run --release --example synth_scene
//! cargo run --release --example fusion_confidence
//! cargo run --release --example spatialize_clip
//! cargo run --release --example evaluate_metrics
//! ```

pub mod audionet;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod priors;
pub mod refine;
pub mod spectral;
pub mod toolkit;
pub mod visual;

pub use error::{Error, Result};
