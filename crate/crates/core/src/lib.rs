//! Exact closed-form moments and covariances for Heston-type stochastic
//! volatility models.
//!
//! The crate derives moment, central-moment and lag-1 covariance formulae of
//! arbitrary order for the one-factor stochastic volatility model
//!
//! ```text
//! dp(t) = (mu - v(t)/2) dt + sqrt(v(t)) dw_s(t)
//! dv(t) = k (theta - v(t)) dt + sigma_v sqrt(v(t)) dw_v(t)
//! ```
//!
//! and its extension with compound-Poisson jumps in the return process. The
//! formulae are exact: every derivation step works on sparse generalized
//! polynomials over arbitrary-precision rationals ([`poly::GPoly`]), so the
//! printed coefficients are true fractions, not floats.
//!
//! Module map:
//!
//! * [`poly`] — the generalized sparse polynomial type and its ring
//!   operations, JSON serialization and canonical rendering.
//! * [`combinatorics`] — exact binomial/multinomial/double-factorial helpers.
//! * [`ito`] — the closed-form integral table and the recursive derivation of
//!   conditional Itô product moments, plus stationary variance moments.
//! * [`cpp`] — moments of compound Poisson increments with normal jumps.
//! * [`heston`] — assembly of return moments, central moments and lag-1
//!   covariances for the pure-diffusion model.
//! * [`svj`] — the same quantities for the jump-in-return extension.
//! * [`eval`] — numeric evaluation and exact symbolic differentiation with
//!   respect to the model parameters.
//! * [`mc`] — Euler-scheme simulators, sample statistics with batch-means
//!   standard errors, an Itô-integral Monte Carlo oracle and comparison
//!   reports.

pub mod combinatorics;
pub mod cpp;
pub mod eval;
pub mod heston;
pub mod ito;
pub mod mc;
pub mod poly;
pub mod svj;

pub use eval::{HestonParams, SlotRegistry, SvjParams};
pub use ito::IndexTriple;
pub use mc::{McReport, McRow, SimConfig};
pub use poly::{GPoly, PolyError, Rational, SlotSignature};
