//! From a T-mesh to an analysis-suitable T-spline space: anchors, index
//! vectors, blending functions, Bézier mesh, dual compatibility, per-step
//! function sets and the change of basis into a refined space.

mod levels;
mod skeleton;
mod space;

pub use levels::{
    change_of_basis, embed_function, fine_embedding, function_sets_for_batches, level_sets,
    projector, ConstInput, FunctionSets, LevelSets, LineLevel, ProjectorInput, SplineInput,
};
pub use skeleton::Skeleton;
pub use space::{extension_crossings, mesh_extensions, TSplineSpace};

use crate::bspline::LocalKnotVector;
use crate::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use thiserror::Error;

#[derive(Error, Debug)]
pub enum TSplineError {
    #[error("index-vector trace ran out of skeleton intersections at anchor {0:?}")]
    TraceExhausted(Anchor),
    #[error("space is not analysis-suitable; operation requires the AS certificate")]
    NotAnalysisSuitable,
    #[error("function is not representable in the target space (residual {0:.3e})")]
    NotInSpan(f64),
    #[error("embedding level {requested} is below the function's finest level {required}")]
    LevelTooCoarse { requested: u32, required: u32 },
}

/// The mesh entity a blending function is traced from; which kind applies is
/// fixed by the degree parities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Anchor {
    /// Both degrees odd.
    Vertex(IndexVec2),
    /// Both degrees even.
    Element(IndexRect),
    /// `p1` even, `p2` odd: a horizontal elementary edge at height `y`.
    HEdge {
        y: DyadicIndex,
        x0: DyadicIndex,
        x1: DyadicIndex,
    },
    /// `p1` odd, `p2` even: a vertical elementary edge at `x`.
    VEdge {
        x: DyadicIndex,
        y0: DyadicIndex,
        y1: DyadicIndex,
    },
}

impl Anchor {
    /// Lexicographic sort key (location-based, deterministic).
    pub fn sort_key(&self) -> (DyadicIndex, DyadicIndex, DyadicIndex, DyadicIndex) {
        match self {
            Anchor::Vertex(v) => (v.x, v.y, v.x, v.y),
            Anchor::Element(r) => (r.lo.x, r.lo.y, r.hi.x, r.hi.y),
            Anchor::HEdge { y, x0, x1 } => (*x0, *y, *x1, *y),
            Anchor::VEdge { x, y0, y1 } => (*x, *y0, *x, *y1),
        }
    }
}

/// Identity of a blending function: the ordered pair of index vectors.
/// A function whose anchor persists but whose knot vectors changed counts as
/// a different function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionKey {
    pub hv: Vec<(i64, u32)>,
    pub vv: Vec<(i64, u32)>,
}

impl FunctionKey {
    fn from_vectors(hv: &[DyadicIndex], vv: &[DyadicIndex]) -> Self {
        FunctionKey {
            hv: hv.iter().map(|d| (d.numerator(), d.exponent())).collect(),
            vv: vv.iter().map(|d| (d.numerator(), d.exponent())).collect(),
        }
    }
}

/// One T-spline blending function: a product of two local B-splines.
#[derive(Clone, Debug)]
pub struct TSplineFunction {
    pub anchor: Anchor,
    pub hv: Vec<DyadicIndex>,
    pub vv: Vec<DyadicIndex>,
    pub lkv_x: LocalKnotVector,
    pub lkv_y: LocalKnotVector,
    /// Index-domain bounding rectangle of the support.
    pub support: IndexRect,
    /// Generation: the finest refinement level its knot vectors require.
    pub generation: u32,
}

impl TSplineFunction {
    pub fn key(&self) -> FunctionKey {
        FunctionKey::from_vectors(&self.hv, &self.vv)
    }

    /// Parametric support `(x0, x1, y0, y1)`.
    pub fn param_support(&self) -> (f64, f64, f64, f64) {
        let (x0, x1) = self.lkv_x.support();
        let (y0, y1) = self.lkv_y.support();
        (x0, x1, y0, y1)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.lkv_x.eval(x) * self.lkv_y.eval(y)
    }

    /// Mixed partial derivative of order `(kx, ky)`.
    pub fn derivative(&self, x: f64, y: f64, kx: usize, ky: usize) -> f64 {
        self.lkv_x.eval_derivative(x, kx) * self.lkv_y.eval_derivative(y, ky)
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        (self.derivative(x, y, 1, 0), self.derivative(x, y, 0, 1))
    }

    /// True when the function has a nonzero trace on the boundary of the
    /// parametric domain. With open knot vectors the trace on an edge is a
    /// single tensor factor evaluated at the edge.
    pub fn nonzero_on_boundary(&self) -> bool {
        let tol = 1e-12;
        self.lkv_x.eval(0.0).abs() > tol
            || self.lkv_x.eval(1.0).abs() > tol
            || self.lkv_y.eval(0.0).abs() > tol
            || self.lkv_y.eval(1.0).abs() > tol
    }

    /// Edges of the parametric square on which the trace is nonzero, as
    /// (x=0, x=1, y=0, y=1).
    pub fn boundary_edges(&self) -> (bool, bool, bool, bool) {
        let tol = 1e-12;
        (
            self.lkv_x.eval(0.0).abs() > tol,
            self.lkv_x.eval(1.0).abs() > tol,
            self.lkv_y.eval(0.0).abs() > tol,
            self.lkv_y.eval(1.0).abs() > tol,
        )
    }
}

/// Generation implied by the index vectors: the smallest level whose
/// per-direction dyadic grids contain them (x refines at odd generations).
pub(crate) fn generation_of(hv: &[DyadicIndex], vv: &[DyadicIndex]) -> u32 {
    let lx = hv.iter().map(|d| d.exponent()).max().unwrap_or(0);
    let ly = vv.iter().map(|d| d.exponent()).max().unwrap_or(0);
    if lx > ly {
        2 * lx - 1
    } else {
        2 * ly
    }
}

/// A Bézier element: one cell of the partition induced by the extended
/// T-mesh, with a positive-measure parametric image.
#[derive(Clone, Debug)]
pub struct BezierElement {
    pub index_rect: IndexRect,
    /// `(x0, x1, y0, y1)` in the parametric domain.
    pub param: (f64, f64, f64, f64),
}

impl BezierElement {
    pub fn area(&self) -> f64 {
        (self.param.1 - self.param.0) * (self.param.3 - self.param.2)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.param.0 + self.param.1),
            0.5 * (self.param.2 + self.param.3),
        )
    }
}

/// A T-junction extension segment in the index domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extension {
    pub junction: IndexVec2,
    /// True for a horizontal extension (a line of constant `y`).
    pub horizontal: bool,
    pub span: (DyadicIndex, DyadicIndex),
}
