//! Exact Riemann solvers for two-phase (free/congested) vehicular-traffic
//! models, with and without a point constraint on the flux at x = 0, plus the
//! invariant-domain and total-variation analysis machinery and a
//! wave-front-tracking simulator.

pub mod analysis;
pub mod constrained;
pub mod error;
pub mod model;
pub mod presets;
pub mod riemann;
pub mod wavefan;
pub mod wft;

pub use error::{Error, Result};
pub use model::{Convexity, Level, ModelParams, PhaseClass, Side, State, Variant};
pub use wavefan::{Wave, WaveFan, WaveKind};
