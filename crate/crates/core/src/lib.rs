//! Group-sparse sensor selection for generalized eigenvalue problems.
//!
//! The crate implements a family of methods that pick `M` out of `C`
//! sensors so that a spatio-temporal filterbank computed on the reduced
//! covariance pair keeps the generalized Rayleigh quotient (GRQ) as high as
//! possible:
//!
//! * [`gs_select`] — the group-sparse l1,inf selector built on a
//!   semidefinite relaxation with iterative reweighting and a binary search
//!   on the regularization strength, plus a diagonal-blocks-only variant.
//! * [`baselines`] — exhaustive search, random selection, greedy forward
//!   selection, and greedy backward elimination.
//! * [`stecs`] — a non-convex proxy objective with an l1,2 group penalty
//!   solved by proximal gradient descent.
//!
//! Supporting layers: [`linalg`] (GEVD, GRQ, covariance handling), [`sdp`]
//! (a small ADMM conic solver for the specific SDP family used here),
//! [`simkit`] (a point-source sensor-network simulator), and [`bench`]
//! (a seeded Monte Carlo benchmark harness with CSV export).

pub mod baselines;
pub mod bench;
pub mod error;
pub mod gs_select;
pub mod io;
pub mod linalg;
pub mod mat;
pub mod sdp;
pub mod simkit;
pub mod stecs;

pub use error::{Error, Result};
pub use linalg::{CovariancePair, GevdSolution, ProblemDims};
pub use mat::{Mat, SymMat};
