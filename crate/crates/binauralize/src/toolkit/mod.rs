//! File formats, WAV I/O, synthetic scenes, configuration, and the
//! end-to-end clip pipeline.

pub mod config;
pub mod params;
pub mod pipeline;
pub mod scene;
pub mod tensor;
pub mod wav;

pub use config::{load_config, parse_config, PipelineConfig};
pub use params::{load_params, save_params};
pub use pipeline::{
    horizontal_crops, run_pipeline, spatialize_clip, CandidateSource, FrameSource,
    NetworkCandidates,
};
pub use scene::{demo_scenes, synth_scene, SceneSpec, SourceKind, MAX_ITD_SAMPLES};
pub use tensor::{
    read_frame, read_spectrogram, read_tensor, write_frame, write_map, write_spectrogram,
    write_tensor, TENSOR_MAGIC,
};
pub use wav::{read_wav, read_wav_at, resample, write_wav, WavFormat};
