//! Numerical solver for the generalised complex Monge–Ampère equation
//!
//! ```text
//! (ω + ddc φ)³ − α ∧ (ω + ddc φ) = η,    ∫ φ = 0
//! ```
//!
//! on flat complex tori, together with the constant-form algebra, positivity
//! cone checks and the line-bundle application that prescribes top Chern
//! character forms.
//!
//! Module map:
//! - [`herm`], [`forms`]: constant (1,1) and (2,2) forms, mixed
//!   discriminants, cone margins and the convexity probes.
//! - [`grid`], [`io`]: periodic grids, spectral differentiation, field dumps.
//! - [`solver`], [`krylov`], [`jequation`]: residual, linearisation, Newton
//!   with cone-guarded line search, continuity path.
//! - [`chern_weil`]: direct sums of line bundles and their reductions.
//! - [`lemmas`]: randomized property suites over the cone lemmas.

pub mod chern_weil;
pub mod error;
pub mod forms;
pub mod grid;
pub mod herm;
pub mod io;
pub mod jequation;
pub mod krylov;
pub mod lemmas;
pub mod oracle;
pub mod random;
pub mod solver;

pub use error::{GmaError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use forms::{ConeMargins, DualForm22};
pub use grid::{GridSpec, HermitianField, ScalarField, Spectral};
pub use herm::{HermForm, C64};
pub use solver::{ContinuitySettings, Forcing, NewtonSettings, ProblemSpec, SolveResult};
