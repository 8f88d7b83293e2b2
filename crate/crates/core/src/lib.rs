//! Discrete conformal geometry laboratory.
//!
//! Piecewise-linear and piecewise-hyperbolic metrics on triangulated disk
//! patches, discrete conformal changes `l'_ij = e^{(u_i+u_j)/2} l_ij`,
//! cotangent-weighted harmonic theory, a curvature-pinned conformal flow,
//! vertex extremal length, and the layout/verification harnesses built on
//! top of them.
//!
//! Numerical contracts (tolerances, slacks, classification thresholds) live
//! next to the operation they govern; suite-level checks are in [`suites`].

pub mod complex;
pub mod delaunay;
pub mod flow;
pub mod harmonic;
pub mod hyperbolic;
pub mod layout;
pub mod mesh_io;
pub mod metric;
pub mod network;
pub mod par;
pub mod predicates;
pub mod rng;
pub mod suites;
