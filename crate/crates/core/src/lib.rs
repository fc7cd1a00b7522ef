//! Numerical laboratory for twistor spaces of vector bundles.
//!
//! Given a real vector bundle `E` of rank `2n` over a coordinate chart, the
//! fiberwise space of almost complex structures
//!
//! ```text
//! C(E_x) = { J in End(E_x) : J^2 = -1 }
//! ```
//!
//! (and its metric companion `T(E_x, g) = C(E_x) ∩ O(E_x, g)`) assembles into a
//! bundle whose total space carries almost complex structures induced by a
//! connection on `E` and a complex structure on the base. This crate builds all
//! of that concretely — dense matrices over explicit charts — and verifies the
//! structural claims numerically against independent finite-difference and
//! algebraic oracles:
//!
//! * [`linalg`]: the fiberwise kernel. Tangent spaces as anticommutators,
//!   spectral projectors, conjugation flows, rank/kernel decisions, seeded
//!   random structures.
//! * [`fiber`]: a single fiber. The vertical complex structure `A -> JA`, the
//!   plane embedding `J -> E^{0,1}_J` into the complex Grassmannian, graph
//!   charts, and the `-A/2` pushforward law.
//! * [`chart`]: calculus on base charts. Richardson-extrapolated central
//!   differences, exterior derivatives, `(p,q)` typing of forms, Nijenhuis
//!   tensors, `d^c`, and the four-dimensional Hodge split.
//! * [`conn`]: connections as matrix-valued coefficient fields. Curvature with
//!   a holonomy oracle, Levi-Civita, Chern, Bismut-type pairs, twisted
//!   variants, and `(1,1)`-type residuals.
//! * [`twistor`]: the twistor total space over a chart. Horizontal/vertical
//!   splitting, the two induced structures, closed-form vs. bracket-oracle
//!   Nijenhuis comparison, integrability criteria, and holomorphic section
//!   checks.
//! * [`grassmann`]: the Grassmannian picture. Parallel transport of planes,
//!   the embedding of the twistor space, and the cohomology-level
//!   intertwiners for twisted Dolbeault operators.
//! * [`gallery`]: a fixed gallery of example geometries with frozen expected
//!   verdicts, including engineered negative controls.
//! * [`report`]: deterministic check execution and the JSON report document.
//!
//! Conventions used throughout:
//!
//! * `J` denotes a fiberwise almost complex structure, `I` one on the base.
//! * `P^{1,0} = (1 - iJ)/2` projects onto the `+i` eigenspace, `P^{0,1} =
//!   (1 + iJ)/2` onto the `-i` eigenspace; `E^{0,1}_J` is the `-i` eigenspace.
//! * Complex charts interleave coordinates: `z_a = x_{2a-1} + i x_{2a}`, and
//!   the standard structure maps `e_{2a-1} -> e_{2a}`.
//! * Connections act as `∇_v s = ∂_v s + A(v) s`; curvature is
//!   `R(e_i, e_j) = ∂_i A_j - ∂_j A_i + [A_i, A_j]`, validated by transporting
//!   around small square loops.
//! * All pairings extend complex-bilinearly (never sesquilinearly) unless a
//!   Hermitian metric is explicitly involved.

pub mod chart;
pub mod conn;
pub mod error;
pub mod fiber;
pub mod gallery;
pub mod grassmann;
pub mod linalg;
pub mod report;
pub mod twistor;

pub use error::{Error, Result};

use nalgebra::{Complex, DMatrix, DVector};

/// Dense real matrix.
pub type RMat = DMatrix<f64>;
/// Dense complex matrix.
pub type CMat = DMatrix<Complex<f64>>;
/// Dense real vector.
pub type RVec = DVector<f64>;
/// Dense complex vector.
pub type CVec = DVector<Complex<f64>>;
/// Complex scalar.
pub type C64 = Complex<f64>;

/// Default algebraic tolerance for exact-identity residuals.
pub const EPS_ALG: f64 = 1e-12;
/// Default relative singular-value cutoff for rank decisions.
pub const EPS_RANK: f64 = 1e-9;
