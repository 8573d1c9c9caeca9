//! Desk-scale toolkit for small-ball probabilities of random sums
//! `X = Σ η_j v_j` under star-shaped quasi-norm bodies.
//!
//! The crate is organised around the objects of that problem:
//!
//! - [`geometry`] — star-shaped bodies `K`, their quasi-norms `‖·‖_K`,
//!   and the measured body constants (volume, gaussian measure, κ).
//! - [`noise`] — laws of the i.i.d. coefficients η, the torus norm
//!   `‖·‖_T`, the η-norm, and two anti-concentration audits.
//! - [`smallball`] — exact and Monte Carlo evaluation of the
//!   concentration function `ρ_R^K(X) = sup_x P(X ∈ x + RK)`.
//! - [`esseen`] — the characteristic-function side: the gaussian-weighted
//!   integral `I(X)` and the Esseen-type upper bounds built from it.
//! - [`hyperplane`] — detection of near-hyperplane concentration of the
//!   vector system and the associated threshold formulas.
//! - [`gap`] — generalized arithmetic progressions, sumset calculus, and
//!   the full level-set → rounding → GAP-fitting pipeline with per-part
//!   verification records.
//!
//! Everything is deterministic given a seed: Monte Carlo loops run as a
//! parallel map over fixed-size sample blocks with a block-ordered
//! reduction, so results do not depend on thread scheduling.

pub mod error;
pub mod esseen;
pub mod gap;
pub mod geometry;
pub mod hyperplane;
mod linalg;
pub mod mc;
pub mod noise;
pub mod smallball;

pub use error::{Error, Result};
pub use geometry::{BodyConstants, StarBody};
pub use noise::NoiseModel;
pub use smallball::{AtomDistribution, SmallBallResult, VectorSystem};
