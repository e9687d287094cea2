//! Collective spin squeezing of N two-level particles.
//!
//! * [`dicke`]: the symmetric subspace, collective operators, rotations and
//!   transverse spin covariance.
//! * [`squeezing`]: coherent spin states, one-axis twisting, the squeezing
//!   parameter ξ and probe-overlap maps.
//! * [`gate`]: the state-dependent displacement gate on a truncated oscillator
//!   that realizes one-axis twisting through a geometric phase.
//! * [`sweep`]: tabular results with byte-stable CSV/JSON output.

pub mod cli;
pub mod dicke;
pub mod error;
pub mod gate;
#[doc(hidden)]
pub mod oracle;
pub mod squeezing;
pub mod sweep;

pub use dicke::{
    apply, build_operator, covariance_tangent, expectation, rotate, Axis, CollectiveOperator,
    DickeBasis, OperatorLabel, Rotator, SpinState, TangentCovariance,
};
pub use error::{Error, Result};
pub use squeezing::{
    coherent_state, oat_evolve, overlap_grid, squeezing_db, squeezing_xi, xi_sweep, OverlapGrid,
    SqueezeParams,
};
pub use sweep::SweepResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
