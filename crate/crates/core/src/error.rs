use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the simulator and the processing chain.
///
/// Each variant names the module that raised it so front ends can
/// attribute failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("waveform: {0}")]
    Waveform(String),

    #[error("photonics: {0}")]
    Photonics(String),

    #[error("scene: {0}")]
    Scene(String),

    #[error("receiver: {0}")]
    Receiver(String),

    #[error("fusion: {0}")]
    Fusion(String),

    #[error("imaging: {0}")]
    Imaging(String),

    #[error("pulse {index}: {source}")]
    Pulse {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Waveform(_) => "waveform",
            Error::Photonics(_) => "photonics",
            Error::Scene(_) => "scene",
            Error::Receiver(_) => "receiver",
            Error::Fusion(_) => "fusion",
            Error::Imaging(_) => "imaging",
            Error::Pulse { source, .. } => source.module(),
        }
    }
}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(format!($($arg)*)))
    };
}
pub(crate) use bail;
