//! Arrival-time statistics for wave packets hitting an absorbing detector
//! surface. The crate evolves a wave function (or its hydrodynamic
//! density/velocity form) on a truncated domain whose right face is the
//! detector, transfers probability to the surface only while the outward
//! flux is positive, and turns the accumulated surface density into
//! arrival-time and screen distributions.
//!
//! Everything numeric is generic over the scalar type through [`scalar::Real`];
//! `f64` aliases for the main types live at the crate root.

pub mod accounting;
pub mod constants;
pub mod convergence;
pub mod engines;
pub mod error;
pub mod grid;
pub mod madelung;
pub mod oracle;
pub mod record;
pub mod scalar;
pub mod surface;
pub mod wave;

pub use constants::Constants;
pub use engines::{run_evolution, EngineConfig, EngineKind, InitialState};
pub use error::{AccountingError, EngineError, FieldError, OracleError};
pub use grid::{Grid1, Grid2};
pub use madelung::MadelungState;
pub use record::{DetectorRecord, Snapshot};
pub use scalar::{r, Real, C};
pub use wave::{Wave1, Wave2};

pub type Grid1f64 = grid::Grid1<f64>;
pub type Grid2f64 = grid::Grid2<f64>;
pub type Wave1f64 = wave::Wave1<f64>;
pub type Wave2f64 = wave::Wave2<f64>;
pub type Constantsf64 = constants::Constants<f64>;
pub type MadelungStatef64 = madelung::MadelungState<f64>;
pub type EngineConfigf64 = engines::EngineConfig<f64>;
pub type DetectorRecordf64 = record::DetectorRecord<f64>;
pub type GaussianParamsf64 = oracle::GaussianParams<f64>;
