//! Numerical laboratory for traveling waves of the parabolic Keller-Segel
//! system with logistic source
//!
//! ```text
//! u_t = u_xx − χ(u v_x)_x + u(a − bu)
//! τ v_t = v_xx − λv + μu
//! ```
//!
//! in one space dimension.
//!
//! * [`constants`]: kernel rates, decay/speed map, thresholds, hypotheses.
//! * [`kernel`]: the chemical field `Ψ(·; u, c, τ)` and its derivatives.
//! * [`solver`]: time stepping in a frame moving at speed `c`.
//! * [`wave`]: sub/super-solution envelopes and the monotone fixed-point
//!   construction of traveling waves.

pub mod constants;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod solver;
pub mod wave;

pub use constants::{DecayRates, Hypotheses, SystemParams, Thresholds};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use kernel::{PsiField, Tail, TailModel};
pub use solver::{FrameSolver, SolverConfig};
pub use wave::{Envelope, FixedPointConfig, WaveProfile};
