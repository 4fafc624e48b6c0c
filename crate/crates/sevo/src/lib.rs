//! Simulator and decay-rate verifier for the weakly coupled system of
//! semilinear sigma-evolution equations with visco-elastic damping
//!
//! ```text
//!     u_tt + (-Delta)^{sigma1} u + (-Delta)^{sigma1} u_t = |v|^{p1}
//!     v_tt + (-Delta)^{sigma2} v + (-Delta)^{sigma2} v_t = |u|^{p2}
//! ```
//!
//! The crate has three layers:
//!
//! * **Arithmetic** ([`exponent_calculus`]): the derived constants
//!   (alpha, beta, gamma, kappa_j, Young index r), the admissibility
//!   conditions of the four decay theorems, the classification of a
//!   parameter tuple into a loss / no-loss / inapplicable regime, and the
//!   predicted decay-rate tables.
//! * **Numerics** ([`multiplier_kernels`], [`transforms`],
//!   [`evolution_engine`]): stable evaluation of the Fourier-side
//!   propagators of the damped linear equation, radial (odd n <= 7) and
//!   full-grid (n <= 2) transforms, exact per-mode linear evolution, and
//!   exponential-integrator time stepping of the coupled system via the
//!   Duhamel representation, including a Picard iteration mirroring the
//!   fixed-point construction of the solution.
//! * **Verification** ([`decay_harness`]): kernel-norm decay suites,
//!   linear decay-estimate envelopes, the weighted solution-space norm
//!   X(t), Gagliardo-Nirenberg envelope checks, and log-log rate fitting.
//!
//! [`config`] and [`report`] provide the JSON-configured CLI driver and
//! the run-directory persistence (series CSV, verdict JSON, markdown
//! report, gnuplot script).

// Negated float comparisons in validation guards are deliberate:
// `!(x > 0.0)` rejects NaN, while `x <= 0.0` would let it through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod decay_harness;
pub mod evolution_engine;
pub mod exponent_calculus;
pub mod multiplier_kernels;
pub mod report;
pub mod transforms;
