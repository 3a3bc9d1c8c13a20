//! Analysis-suitable T-splines by bisection, Galerkin assembly of the Poisson
//! problem, and additive multilevel (BPX) preconditioning.
//!
//! The crate is organized bottom-up:
//!
//! * [`dyadic`] — exact dyadic-rational arithmetic for index-domain geometry,
//! * [`bspline`] — univariate B-spline evaluation, knot insertion and dual
//!   functionals,
//! * [`tmesh`] — bisection T-meshes with generations and admissible refinement,
//! * [`tspline`] — anchors, blending functions, Bézier meshes, space
//!   decompositions and changes of basis,
//! * [`assembly`] — geometry maps, quadrature and the Poisson system on
//!   single-patch and glued multi-patch domains,
//! * [`multilevel`] — subspace decompositions, smoothers, the BPX operator,
//!   PCG and condition-number estimation,
//! * [`refine`] — the corner and alternative refinement drivers,
//! * [`svg`] — deterministic mesh figures.

pub mod assembly;
pub mod bspline;
pub mod dyadic;
pub mod geometry;
pub mod multilevel;
pub mod quadrature;
pub mod refine;
pub mod sparse;
pub mod svg;
pub mod tmesh;
pub mod tspline;

pub use dyadic::{DyadicIndex, IndexRect, IndexVec2};
pub use tmesh::TMesh;
pub use tspline::TSplineSpace;
