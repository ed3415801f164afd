use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("non-finite amplitude at node {index}")]
    NonFinite { index: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid invalid: {0}")]
    BadGrid(String),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("CFL violation: max|v| dt/dx = {measured:.3e} exceeds safety {safety:.3e}; try dt <= {suggested_dt:.3e}")]
    Cfl { measured: f64, safety: f64, suggested_dt: f64 },
    #[error("probability budget violated: |interior + surface - 1| = {drift:.3e} > {tol:.3e} at step {step}")]
    Budget { drift: f64, tol: f64, step: usize },
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("field blew up (non-finite values) at step {step}")]
    Blowup { step: usize },
    #[error("density mask grew over {masked} of {support} initially supported nodes (> 20%); the hydrodynamic form is invalid across density zeros")]
    MaskGrowth { masked: usize, support: usize },
    #[error("engine does not support this configuration: {0}")]
    Unsupported(String),
    #[error("singular tridiagonal system (zero pivot at row {row})")]
    SingularSystem { row: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error)]
pub enum AccountingError {
    #[error("arrival statistics are only defined for ideal-detector records; this record was produced by a {kind} engine (flux may re-enter, so surface probability is not an arrival probability)")]
    NotAnArrivalRecord { kind: String },
    #[error("conditional undefined: surface probability is zero")]
    UndefinedConditional,
    #[error("region lies outside the domain: {0}")]
    RegionOutsideDomain(String),
    #[error("time {t} outside the record horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },
    #[error("invalid binning: {0}")]
    BadBinning(String),
    #[error("snapshot does not carry the field needed here: {0}")]
    MissingField(String),
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no backflow witness found: scanned weights ratio in [{r_lo}, {r_hi}], phases in [0, 2pi), {t_samples} time samples up to t = {horizon}; minimum flux seen was {best_flux:.3e}")]
    NoBackflowFound {
        r_lo: f64,
        r_hi: f64,
        t_samples: usize,
        horizon: f64,
        best_flux: f64,
    },
    #[error("degenerate construction: {0}")]
    Degenerate(String),
}
