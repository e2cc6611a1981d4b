use std::path::PathBuf;

/// Everything that can go wrong between building a map and printing a bound.
///
/// Numerical failures are never papered over: a stage that cannot certify its
/// output returns one of these instead of a plausible-looking number.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("derivative enclosure contains zero on {lo}..{hi}; branch is not certifiably monotone")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("no root in the search interval")]
    NoRoot,

    #[error("distortion is unbounded on branch {branch}")]
    UnboundedDistortion { branch: usize },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("unknown map `{0}`")]
    UnknownMap(String),

    #[error("bad parameter `{name}`: {detail}")]
    BadParameter { name: String, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Lasota-Yorke contraction not certified (A = {a}); {hint}")]
    ContractionNotCertified { a: f64, hint: String },

    #[error("variant `{variant}` does not apply: {reason}")]
    VariantNotApplicable { variant: &'static str, reason: String },

    #[error("normalization failure: |i(u) - 1| <= {eps2} is not below 1")]
    NormalizationFailure { eps2: f64 },

    #[error("eigensolver did not converge (residual {residual:e} after {iterations} iterations)")]
    EigenNotConverged { residual: f64, iterations: usize },

    #[error("rounding-error constant undefined: z*u = {zu} >= 1")]
    GammaOverflow { zu: f64 },

    #[error("no computed norm bound is below one up to k = {k_max}")]
    NoContraction { k_max: usize },

    #[error("the observable is unbounded on the support of the density")]
    UnboundedObservable,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
