//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A waveform or candidate list was empty where content is required.
    #[error("empty input")]
    EmptyInput,

    /// An [`StftConfig`](crate::spectral::StftConfig) violates its invariants.
    #[error("bad stft config: {0}")]
    BadStftConfig(String),

    /// The squared-window overlap sum vanishes inside the retained region,
    /// so weighted-overlap-add synthesis cannot divide it out.
    #[error("non-invertible config: zero overlap-add weight at output sample {0}")]
    NonInvertibleConfig(usize),

    /// Two grids that must share dimensions do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Frame dimensions are not divisible by the patch size.
    #[error("bad patch grid: {0}")]
    BadPatchGrid(String),

    /// Spectrogram too small for the number of down/up stages.
    #[error("spectrogram too small: {0}")]
    SpectrogramTooSmall(String),

    /// Fusion was asked to combine an empty candidate set.
    #[error("no candidates")]
    NoCandidates,

    /// A NaN or infinity appeared where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A precondition on an argument failed.
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    /// SNR of an all-zero reference signal.
    #[error("undefined SNR: ground truth is all zero")]
    UndefinedSnr,

    /// The training demo produced a non-finite loss.
    #[error("demo diverged; reduce lr")]
    Diverged,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed file contents (WAV header, tensor container, config file).
    #[error("format error: {0}")]
    Format(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 usage, 3 data format, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArg(_) | Error::EmptyInput | Error::BadStftConfig(_) => 2,
            Error::Io(_) | Error::Format(_) | Error::ShapeMismatch(_) => 3,
            Error::NonInvertibleConfig(_)
            | Error::BadPatchGrid(_)
            | Error::SpectrogramTooSmall(_)
            | Error::NoCandidates
            | Error::NonFinite(_)
            | Error::UndefinedSnr
            | Error::Diverged => 4,
        }
    }
}
