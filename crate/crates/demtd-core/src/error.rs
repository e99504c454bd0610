use std::fmt;
use std::path::PathBuf;

/// Errors produced by any stage of the pipeline.
#[derive(Debug)]
pub enum Error {
    /// A header or payload file does not exist or could not be read.
    MissingFile(PathBuf, std::io::Error),
    /// The JSON sidecar header failed to parse.
    HeaderParse(PathBuf, String),
    /// Raw payload byte count disagrees with dims product x sample width.
    SizeMismatch {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    /// A NaN/Inf sample was encountered where finite data is required.
    NonFinite(String),
    /// A mask sample was outside {0, 1}.
    NonBinary { path: PathBuf, value: u8 },
    /// A mask with no set voxels was used where one is required.
    EmptyMask,
    /// Volume dims too small for the requested stencil.
    TooSmall {
        dims: (usize, usize, usize),
        needed: usize,
    },
    /// Invalid numeric parameter (alpha <= 0, even window, n outside 1..=9, ...).
    BadParam(String),
    /// Determinant-ratio invariants requested on a singular Hessian.
    SingularH,
    /// Affine map with |det P| below the singularity floor.
    SingularP,
    /// Paired fields have mismatched dims.
    DimMismatch {
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    },
    /// Feature dimension disagreement between a model/basis and a sample.
    FeatureDimMismatch { expected: usize, actual: usize },
    /// KL basis applied to a vector it was not fitted for.
    BasisMismatch(String),
    /// GLCM direction with no co-occurring masked voxel pair.
    NoValidPairs { direction: (i32, i32, i32) },
    /// Training attempted with only one class present.
    SingleClass,
    /// Training attempted with no samples.
    EmptyTrainSet,
    /// Too few samples for the requested statistical operation.
    TooFewSamples { needed: usize, actual: usize },
    /// Both t-test samples constant with different means: the statistic is undefined.
    ZeroVariance,
    /// Duplicate lesion id in a manifest.
    DuplicateId(String),
    /// Generic I/O failure writing an output artifact.
    Io(PathBuf, std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MissingFile(p, e) => write!(f, "cannot read {}: {}", p.display(), e),
            Error::HeaderParse(p, e) => write!(f, "malformed header {}: {}", p.display(), e),
            Error::SizeMismatch {
                path,
                expected,
                actual,
            } => write!(
                f,
                "payload {} holds {} bytes, header implies {}",
                path.display(),
                actual,
                expected
            ),
            Error::NonFinite(what) => write!(f, "non-finite sample in {what}"),
            Error::NonBinary { path, value } => {
                write!(
                    f,
                    "mask {} holds non-binary value {}",
                    path.display(),
                    value
                )
            }
            Error::EmptyMask => write!(f, "mask has no set voxels"),
            Error::TooSmall { dims, needed } => write!(
                f,
                "dims {}x{}x{} too small, need at least {} along each axis",
                dims.0, dims.1, dims.2, needed
            ),
            Error::BadParam(msg) => write!(f, "bad parameter: {msg}"),
            Error::SingularH => write!(f, "Hessian is singular"),
            Error::SingularP => write!(f, "affine map is singular"),
            Error::DimMismatch { expected, actual } => write!(
                f,
                "dims mismatch: expected {}x{}x{}, got {}x{}x{}",
                expected.0, expected.1, expected.2, actual.0, actual.1, actual.2
            ),
            Error::FeatureDimMismatch { expected, actual } => {
                write!(
                    f,
                    "feature dimension mismatch: expected {expected}, got {actual}"
                )
            }
            Error::BasisMismatch(msg) => write!(f, "KL basis mismatch: {msg}"),
            Error::NoValidPairs { direction } => write!(
                f,
                "no valid voxel pair along direction ({},{},{})",
                direction.0, direction.1, direction.2
            ),
            Error::SingleClass => write!(f, "training set contains a single class"),
            Error::EmptyTrainSet => write!(f, "training set is empty"),
            Error::TooFewSamples { needed, actual } => {
                write!(f, "too few samples: need {needed}, got {actual}")
            }
            Error::ZeroVariance => {
                write!(
                    f,
                    "both samples constant with different means; t statistic undefined"
                )
            }
            Error::DuplicateId(id) => write!(f, "duplicate id '{id}' in manifest"),
            Error::Io(p, e) => write!(f, "i/o error on {}: {}", p.display(), e),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
