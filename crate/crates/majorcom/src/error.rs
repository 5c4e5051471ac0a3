use thiserror::Error;

/// Errors produced by the library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("arithmetic overflow while {0}")]
    Overflow(String),

    #[error("bit payload has {got} bits but the codebook addresses {want}")]
    BitLength { got: u32, want: u32 },

    #[error("codeword lies outside the addressable 2^b prefix ({detail})")]
    CodewordOutOfRange { detail: String },

    #[error("degenerate density: sigma^2 must be positive")]
    DegenerateDensity,

    #[error("codebook too large for exact bound evaluation: {size} > cap {cap}")]
    CodebookTooLarge { size: usize, cap: usize },

    #[error("tones are not orthogonal (T_p * delta_f is not an integer); pass force=true to override")]
    NonOrthogonalTones,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
