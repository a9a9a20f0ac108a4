use std::path::PathBuf;

/// Failures while decoding a voxel file.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("bad magic: expected `{expected}`, found `{found}`")]
    BadMagic { expected: &'static str, found: String },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("dimension overflow: {0:?} does not describe an addressable grid")]
    DimensionOverflow([u64; 3]),
    #[error("truncated stream: expected {expected} voxels/bytes, found {found}")]
    Truncated { expected: u64, found: u64 },
    #[error("trailing data: {extra} unexpected bytes after payload")]
    TrailingData { extra: u64 },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid frames differ: {0}")]
    FrameMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid structuring element: {0}")]
    InvalidMmn(String),

    #[error("invalid threshold: {0}")]
    InvalidLambda(String),

    #[error("thresholds must be strictly ascending (position {0})")]
    UnsortedLambdas(usize),

    #[error(
        "transform precision failure: max deviation {deviation:.3e} from an integer \
         (limit {limit}); split the grid or use the direct path"
    )]
    Precision { deviation: f64, limit: f64 },

    #[error("direct correlation needs {work} voxel visits, above the bound {bound}")]
    WorkBoundExceeded { work: u128, bound: u128 },

    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },

    #[error(transparent)]
    Decode(#[from] ParseError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
