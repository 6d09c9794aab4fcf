//! Ergodic mean-field games on the unit box with an attractive Riesz coupling.
//!
//! The state space is the unit box `[0,1]^n` (`n` in {1, 2}) with reflecting
//! boundary. A unit-mass density `m`, a value function `u`, and an ergodic
//! constant `lambda` solve the stationary system
//!
//! ```text
//!   -lap(u) + C_H |grad u|^gamma + lambda = -C_f (K_alpha * m)
//!    lap(m) + C_H gamma div(m |grad u|^{gamma-2} grad u) = 0
//!    du/dn = 0,  zero density flux on the boundary,  int m = 1,  int u = 0,
//! ```
//!
//! where `K_alpha(x) = |x|^{alpha-n}` with `0 < alpha < n` and `*` is
//! convolution over the box (no wraparound). The same triple is characterized
//! variationally: with `w = -C_H gamma m |grad u|^{gamma-2} grad u` the pair
//! `(m, w)` minimizes
//!
//! ```text
//!   E(m, w) = C_L int |w/m|^{gamma'} m  -  (C_f/2) int m (K_alpha * m)
//! ```
//!
//! over unit-mass pairs coupled by `lap(m) = div(w)` with zero boundary flux,
//! where `gamma' = gamma/(gamma-1)` and `C_L` is the Legendre constant of the
//! Hamiltonian `C_H |p|^gamma`. The mass-critical exponent `alpha = n - gamma'`
//! separates couplings this energy controls from couplings where concentration
//! wins; the solvers and diagnostics here verify both sides at desk scale.
//!
//! Module map:
//! - [`grid`]: cell-centered scalars, face-centered vectors, exact
//!   summation-by-parts calculus on the staggered grid.
//! - [`riesz`]: dense Riesz interaction matrix and a mass-preserving mollifier.
//! - [`hamiltonian`]: parameter pack, Hamiltonian/Lagrangian closed forms and
//!   the brute-force Legendre gate, kinetic (Benamou-Brenier) density.
//! - [`energy`]: admissible pairs, the energy and its mollified and linearized
//!   relatives, norm interpolation.
//! - [`linalg`]: dense LU, the only linear-algebra backend needed at desk scale.
//! - [`hjb`]: Godunov-upwind Hamilton-Jacobi-Bellman solver with an augmented
//!   Newton iteration for `(u, lambda)`.
//! - [`fp`]: stationary Fokker-Planck kernel extraction through an upwind
//!   M-matrix; flux assembly for the minimizing pair.
//! - [`solver`]: damped fixed-point coupling of the two equations, mollifier
//!   continuation, minimality and stationarity audits.
//! - [`diagnostics`]: regime classification, concentration families, scaling
//!   dichotomy, defocusing Schroedinger residual, coupling-strength threshold
//!   probe, Hardy-Littlewood-Sobolev invariance audit.
//!
//! Everything is generic over the scalar through [`Real`]; `f64` aliases sit at
//! the crate root (`ScalarField64`, `Params64`, ...) and are what the CLI and
//! the acceptance suite use.

use std::fmt;

pub mod diagnostics;
pub mod energy;
pub mod fp;
pub mod grid;
pub mod hamiltonian;
pub mod hjb;
pub mod riesz;
pub mod solver;
pub mod linalg;

/// Floating-point scalar the whole library is generic over.
///
/// `f32` and `f64` implement it. Everything numerical (fields, operators,
/// solvers) takes any `Real`; tolerances in the documentation are quoted for
/// `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::float::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::ops::DivAssign
    + std::iter::Sum
    + fmt::Debug
    + fmt::Display
    + Default
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand cast from `f64` literals into the generic scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 must convert into the scalar type")
}

/// Errors shared across the library.
///
/// Numeric payloads are reported as `f64` so the error type stays independent
/// of the scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation rejected an argument; `name` is the offending
    /// parameter.
    InvalidParameter { name: &'static str, message: String },
    /// Two objects built over different grids (or dimensions) were combined.
    GridMismatch { context: &'static str },
    /// A linear system had no usable pivot.
    SingularSystem { context: &'static str },
    /// Newton failed to reach the requested residual.
    NewtonDiverged { iterations: usize, residual: f64 },
    /// A density that must be strictly positive was not; aborts the caller.
    NonPositiveDensity { min_value: f64 },
    /// A post-condition residual check failed.
    ResidualAboveTolerance {
        context: &'static str,
        residual: f64,
        tol: f64,
    },
    /// A verification probe could not certify its claim (for example the
    /// Legendre maximizer landed on the search-grid boundary).
    InconclusiveCheck { context: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, message } => {
                write!(f, "invalid parameter `{name}`: {message}")
            }
            Error::GridMismatch { context } => write!(f, "grid mismatch in {context}"),
            Error::SingularSystem { context } => {
                write!(f, "singular linear system in {context}")
            }
            Error::NewtonDiverged {
                iterations,
                residual,
            } => write!(
                f,
                "Newton diverged after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::NonPositiveDensity { min_value } => {
                write!(f, "density lost positivity (min {min_value:.3e})")
            }
            Error::ResidualAboveTolerance {
                context,
                residual,
                tol,
            } => write!(
                f,
                "{context}: residual {residual:.3e} exceeds tolerance {tol:.3e}"
            ),
            Error::InconclusiveCheck { context } => write!(f, "inconclusive check: {context}"),
        }
    }
}

impl std::error::Error for Error {}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

pub use energy::AdmissiblePair;
pub use grid::{GridSpec, ScalarField, VectorField};
pub use hamiltonian::MFGParams;
pub use riesz::{Mollifier, RieszOperator};
pub use solver::{MFGSolution, SolveConfig};

/// Double-precision admissible pair.
pub type Pair64 = energy::AdmissiblePair<f64>;
/// Single-precision admissible pair.
pub type Pair32 = energy::AdmissiblePair<f32>;

/// Double-precision parameter pack.
pub type Params64 = hamiltonian::MFGParams<f64>;
/// Single-precision parameter pack.
pub type Params32 = hamiltonian::MFGParams<f32>;

/// `f64` aliases, the concrete instantiation used by the CLI and tests.
pub type ScalarField64 = grid::ScalarField<f64>;
pub type VectorField64 = grid::VectorField<f64>;

/// `f32` aliases; compiled against the same generic code paths.
pub type ScalarField32 = grid::ScalarField<f32>;
pub type VectorField32 = grid::VectorField<f32>;

/// Double-precision interaction operator and mollifier.
pub type Riesz64 = riesz::RieszOperator<f64>;
pub type Mollifier64 = riesz::Mollifier<f64>;
/// Single-precision interaction operator and mollifier.
pub type Riesz32 = riesz::RieszOperator<f32>;
pub type Mollifier32 = riesz::Mollifier<f32>;

/// Double-precision solver state and controls.
pub type Solution64 = solver::MFGSolution<f64>;
pub type SolveConfig64 = solver::SolveConfig<f64>;
/// Single-precision solver state and controls.
pub type Solution32 = solver::MFGSolution<f32>;
pub type SolveConfig32 = solver::SolveConfig<f32>;
