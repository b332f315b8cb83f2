use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discriminant core d = {d}: 2d must be squarefree (d odd and squarefree)")]
    InvalidDiscriminant { d: u64 },

    #[error("parameter `{field}` out of range: {message}")]
    ParamOutOfRange { field: String, message: String },

    #[error(
        "degenerate schedule: Y = {y:.6} must exceed e^e = 15.154; \
         asymptotic mode needs D > {min_d:.3e} for a = {a}"
    )]
    DegenerateSchedule { y: f64, a: f64, min_d: f64 },

    #[error("work estimate for {what} is {estimate:.3e}, above the limit {limit:.3e}; {suggestion}")]
    WorkEstimate {
        what: String,
        estimate: f64,
        limit: f64,
        suggestion: String,
    },

    #[error("resonator support exceeds the cap of {cap} entries (reached while enumerating products up to Z = {z:.3e}); lower Z or narrow the prime bands")]
    SupportTooLarge { cap: usize, z: f64 },

    #[error("{what}: accuracy {requested:.3e} not reached (achieved {achieved:.3e})")]
    Accuracy {
        what: String,
        requested: f64,
        achieved: f64,
    },

    #[error("Euler factor of H vanishes (or nearly) at p = {p}")]
    VanishingFactor { p: u64 },

    #[error("no admissible discriminant carries positive weight in the scanned range")]
    EmptyAdmissibleSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
