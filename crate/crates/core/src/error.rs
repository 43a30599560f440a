use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("signal has zero norm")]
    ZeroNorm,

    #[error("frequency set is empty")]
    EmptySet,

    #[error("need at least two frequencies to define a separation")]
    SingletonSet,

    #[error("split L = {split} out of range for M = {degree} (need 1 <= L and 2L <= M + 1)")]
    SplitOutOfRange { split: usize, degree: usize },

    #[error("SVD did not converge within {0} iterations")]
    SvdNoConvergence(usize),

    #[error("eigenvalue QR iteration exceeded {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("matrix is rank deficient: sigma_{rank} = {sigma:e} vs sigma_1 = {sigma_max:e}")]
    RankDeficient { rank: usize, sigma: f64, sigma_max: f64 },

    #[error("sparsity undetectable: largest singular value ratio {best_ratio:.3} is below 10; supply s explicitly")]
    SparsityUndetectable { best_ratio: f64 },

    #[error("rank collapse: sigma_{sparsity} = {sigma:e} is below 1e-12 * sigma_1 = {sigma_max:e}")]
    RankCollapse {
        sparsity: usize,
        sigma: f64,
        sigma_max: f64,
    },

    #[error("eigenvalue is zero; frequency undefined")]
    ZeroEigenvalue,

    #[error("separation infeasible: {0}")]
    InfeasibleSeparation(String),

    #[error("random model generation gave up after {0} attempts")]
    RetriesExhausted(usize),

    #[error("pseudospectrum has {found} local maxima, need {needed}")]
    TooFewPeaks { found: usize, needed: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical pipeline itself, as opposed to bad
    /// input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SvdNoConvergence(_)
                | Error::EigenNoConvergence(_)
                | Error::RankDeficient { .. }
                | Error::SparsityUndetectable { .. }
                | Error::RankCollapse { .. }
                | Error::ZeroEigenvalue
                | Error::RetriesExhausted(_)
                | Error::TooFewPeaks { .. }
        )
    }
}
