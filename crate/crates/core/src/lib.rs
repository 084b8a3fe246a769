//! Numerical dynamics of the quadratic family
//!
//! ```text
//! f_λ[z : w_1 : … : w_{k-1} : t] = [(z-2w_1)^2 : … : (z-2w_{k-1})^2 : z^2 : t^2 + λz^2]
//! ```
//!
//! on complex projective space P^k, its attracting set K_λ near the hyperplane
//! Π = {t = 0}, the invariant measure μ_λ carried by K_λ, and estimators and
//! checkers for the dynamical properties of the pair (f_λ, μ_λ).
//!
//! Module map:
//!
//! * [`projective`]: points of P^m, the Fubini–Study chordal metric, charts.
//! * [`maps`]: the map family, preimage solvers, chart Jacobians.
//! * [`trap`]: the trapping region U_ρ, fiber contraction, the semiconjugacy φ_λ.
//! * [`history`]: truncated backward orbits and the hat metric.
//! * [`green`]: Green function, samplers for μ₀ and μ_λ.
//! * [`ergodic`]: periodic points, entropy, Lyapunov exponents, mixing.
//! * [`verify`]: executable lemma checkers and the nonalgebraicity witness.
//! * [`io`]: CSV / PGM formats used by the command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ergodic;
pub mod error;
pub mod green;
pub mod history;
pub mod io;
pub mod maps;
pub mod partition;
pub mod projective;
pub mod rng;
pub mod trap;
pub mod verify;

pub use error::{Error, Result};
pub use green::Cloud;
pub use maps::{HomogeneousMap, MapKind, Params};
pub use projective::{ProjPoint, C64};
