use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
///
/// Every hard failure carries enough context (stage, subject, time) for the
/// CLI to print an actionable diagnostic.
#[derive(Debug, Error)]
pub enum TirError {
    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("invalid target range: lower {lower} must be below upper {upper}")]
    Range { lower: f64, upper: f64 },

    #[error("ingestion failed: {0}")]
    Ingest(String),

    #[error("no follow-up duration supplied for subject `{0}`")]
    UnknownSubject(String),

    #[error("subject `{subject}` has follow-up {followup_days} d, below one grid step")]
    FollowupTooShort { subject: String, followup_days: f64 },

    #[error("oracle TIR requires a fully observed trajectory; subject `{subject}` is missing at t = {time_minutes} min")]
    IncompleteForOracle { subject: String, time_minutes: f64 },

    #[error("naive TIR undefined: subject `{0}` has no available readings")]
    NoAvailableReadings(String),

    #[error(
        "positivity violated: zero inverse-weight denominator at t = {time_minutes} min \
         (no available subject); the availability condition inf E{{delta(t)}} > 0 fails \
         over the requested horizon — consider a shorter tau"
    )]
    Positivity { time_minutes: f64 },

    #[error("Cox fit requires at least one event before tau; none found")]
    NoEvents,

    #[error("Cox information matrix is singular; covariate column {column} carries no usable variation")]
    SingularInformation { column: usize },

    #[error("Cox partial-likelihood maximization did not converge after {iterations} iterations (score norm {score_norm:.3e})")]
    CoxNotConverged { iterations: usize, score_norm: f64 },

    #[error("bootstrap discarded {failed} of {total} resamples (> 10% failure ceiling)")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("bootstrap difference covariance is singular; increase the number of bootstrap samples")]
    SingularCovariance,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("simulation failed: {0}")]
    Simulation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<TirError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl TirError {
    /// Wraps an error with a pipeline stage label.
    pub fn at_stage(self, stage: &'static str) -> TirError {
        TirError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, TirError>;
