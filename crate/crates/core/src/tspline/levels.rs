//! Per-bisection function sets, embeddings into refined tensor spaces, the
//! change of basis into a target space, and the dual-functional projector.

use super::skeleton::Skeleton;
use super::space::{enumerate_anchors, trace_function, TSplineSpace};
use super::{Anchor, FunctionKey, TSplineError, TSplineFunction};
use crate::bspline::{dual_functional, dual_weights, LocalKnotVector};
use crate::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use crate::sparse::SparseVec;
use crate::tmesh::{Bisection, TMesh};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// Functions added and removed by one batch of bisections, together with the
/// index-domain supports of the added set (the step support region) and of
/// the functions whose support meets it (its extension).
#[derive(Clone, Debug)]
pub struct FunctionSets {
    /// Generation (or driver round) label shared by the batch.
    pub label: u32,
    pub added: Vec<TSplineFunction>,
    pub removed: Vec<TSplineFunction>,
    /// Supports of the added functions; their union is the step support.
    pub step_support: Vec<IndexRect>,
    /// Supports of all functions (in the post-batch space) whose support
    /// interior meets the step support.
    pub support_extension: Vec<IndexRect>,
}

/// The full replay: step 0 is the tensor-product basis of the initial mesh.
#[derive(Clone, Debug)]
pub struct LevelSets {
    pub steps: Vec<FunctionSets>,
}

impl LevelSets {
    /// Number of generations present (maximum label).
    pub fn max_label(&self) -> u32 {
        self.steps.iter().map(|s| s.label).max().unwrap_or(0)
    }
}

fn anchor_bbox(anchor: &Anchor) -> IndexRect {
    match anchor {
        Anchor::Vertex(v) => IndexRect::new(*v, *v),
        Anchor::Element(r) => *r,
        Anchor::HEdge { y, x0, x1 } => {
            IndexRect::new(IndexVec2::new(*x0, *y), IndexVec2::new(*x1, *y))
        }
        Anchor::VEdge { x, y0, y1 } => {
            IndexRect::new(IndexVec2::new(*x, *y0), IndexVec2::new(*x, *y1))
        }
    }
}

fn rect_intersects(a: &IndexRect, b: &IndexRect) -> bool {
    a.lo.x <= b.hi.x && b.lo.x <= a.hi.x && a.lo.y <= b.hi.y && b.lo.y <= a.hi.y
}

fn inflate(rect: &IndexRect, dx: i64, dy: i64, m: (i64, i64)) -> IndexRect {
    let zero = DyadicIndex::zero();
    let lo_x = if rect.lo.x.floor() - dx <= 0 { zero } else { DyadicIndex::from_integer(rect.lo.x.floor() - dx) };
    let lo_y = if rect.lo.y.floor() - dy <= 0 { zero } else { DyadicIndex::from_integer(rect.lo.y.floor() - dy) };
    let hi_x = DyadicIndex::from_integer((rect.hi.x.floor() + dx + 1).min(m.0));
    let hi_y = DyadicIndex::from_integer((rect.hi.y.floor() + dy + 1).min(m.1));
    IndexRect::new(IndexVec2::new(lo_x, lo_y), IndexVec2::new(hi_x, hi_y))
}

/// Anchors whose location meets any of the window rectangles.
fn anchors_in_windows(mesh: &TMesh, skeleton: &Skeleton, windows: &[IndexRect]) -> Vec<Anchor> {
    let (p1, p2) = mesh.degree();
    let (m1, m2) = mesh.extents();
    let a1 = (p1 as i64 + 1) / 2;
    let a2 = (p2 as i64 + 1) / 2;
    let active = IndexRect::from_integers(a1, a2, m1 - a1, m2 - a2);
    let mut anchors: Vec<Anchor> = match (p1 % 2 == 0, p2 % 2 == 0) {
        (false, false) => {
            let mut vs: Vec<IndexVec2> = Vec::new();
            for w in windows {
                vs.extend(skeleton.vertices_in(w));
            }
            vs.sort();
            vs.dedup();
            vs.into_iter()
                .filter(|v| active.contains_point(v))
                .map(Anchor::Vertex)
                .collect()
        }
        (true, true) => {
            let mut rects: Vec<IndexRect> = Vec::new();
            for w in windows {
                rects.extend(mesh.elements_intersecting(w));
            }
            rects.sort();
            rects.dedup();
            rects
                .into_iter()
                .filter(|r| active.contains_rect(r))
                .map(Anchor::Element)
                .collect()
        }
        _ => {
            // mixed parities: enumerate all and filter by window
            enumerate_anchors(mesh, skeleton)
                .into_iter()
                .filter(|a| {
                    let bb = anchor_bbox(a);
                    windows.iter().any(|w| rect_intersects(&bb, w))
                })
                .collect()
        }
    };
    anchors.sort_by_key(|a| a.sort_key());
    anchors
}

/// Replays batches of bisections on the initial mesh, reporting the function
/// sets added/removed by each batch. Step 0 holds the initial tensor-product
/// basis. The final function collection is validated against a fresh build
/// of the final space.
pub fn function_sets_for_batches(
    degree: (usize, usize),
    n: (i64, i64),
    batches: &[(u32, Vec<Bisection>)],
) -> Result<LevelSets, TSplineError> {
    let mut mesh = TMesh::initial(degree, n).expect("replay of a valid mesh");
    let mut skeleton = Skeleton::from_mesh(&mesh);
    let m = mesh.extents();
    let (p1, p2) = degree;

    let mut current: BTreeMap<FunctionKey, TSplineFunction> = BTreeMap::new();
    let mut steps = Vec::with_capacity(batches.len() + 1);
    {
        let mut added = Vec::new();
        for anchor in enumerate_anchors(&mesh, &skeleton) {
            let f = trace_function(&mesh, &skeleton, &anchor)?;
            current.insert(f.key(), f.clone());
            added.push(f);
        }
        let step_support: Vec<IndexRect> = added.iter().map(|f| f.support).collect();
        steps.push(FunctionSets {
            label: 0,
            added,
            removed: Vec::new(),
            step_support: step_support.clone(),
            support_extension: step_support,
        });
    }

    for (label, batch) in batches {
        let mut windows: Vec<IndexRect> = Vec::with_capacity(batch.len());
        for bis in batch {
            let children = mesh.bisection_children(&bis.parent, bis.direction);
            let split = children.len() == 2;
            mesh.bisect_element_dir(&bis.parent, bis.direction)
                .expect("batch parent exists in replay");
            skeleton.apply_bisection(&bis.parent, bis.direction, split);
            windows.push(inflate(
                &bis.parent,
                p1 as i64 + 2,
                p2 as i64 + 2,
                m,
            ));
        }
        let before: BTreeMap<FunctionKey, TSplineFunction> = current
            .iter()
            .filter(|(_, f)| {
                let bb = anchor_bbox(&f.anchor);
                windows.iter().any(|w| rect_intersects(&bb, w))
            })
            .map(|(k, f)| (k.clone(), f.clone()))
            .collect();
        let mut after: BTreeMap<FunctionKey, TSplineFunction> = BTreeMap::new();
        for anchor in anchors_in_windows(&mesh, &skeleton, &windows) {
            let f = trace_function(&mesh, &skeleton, &anchor)?;
            after.insert(f.key(), f);
        }
        let mut added: Vec<TSplineFunction> = Vec::new();
        let mut removed: Vec<TSplineFunction> = Vec::new();
        for (key, f) in &after {
            if !before.contains_key(key) {
                added.push(f.clone());
            }
        }
        for (key, f) in &before {
            if !after.contains_key(key) {
                removed.push(f.clone());
            }
        }
        for f in &removed {
            current.remove(&f.key());
        }
        for f in &added {
            current.insert(f.key(), f.clone());
        }
        let step_support: Vec<IndexRect> = added.iter().map(|f| f.support).collect();
        let support_extension: Vec<IndexRect> = current
            .values()
            .filter(|g| step_support.iter().any(|s| g.support.interior_intersects(s)))
            .map(|g| g.support)
            .collect();
        steps.push(FunctionSets {
            label: *label,
            added,
            removed,
            step_support,
            support_extension,
        });
    }

    // consistency: the incremental map must equal a fresh final build
    let final_space = TSplineSpace::build_with_skeleton(&mesh, &skeleton)?;
    assert_eq!(
        current.len(),
        final_space.dim(),
        "incremental replay lost or invented functions"
    );
    for f in final_space.functions() {
        assert!(
            current.contains_key(&f.key()),
            "incremental replay missed function at {:?}",
            f.anchor
        );
    }
    Ok(LevelSets { steps })
}

/// Per-bisection function sets over the generation-sorted history.
pub fn level_sets(mesh: &TMesh) -> Result<LevelSets, TSplineError> {
    let batches: Vec<(u32, Vec<Bisection>)> = mesh
        .history_by_generation()
        .into_iter()
        .map(|b| (b.generation, vec![b]))
        .collect();
    function_sets_for_batches(mesh.degree(), mesh.basis_counts(), &batches)
}

// ---------------------------------------------------------------------------
// Embedding into refined tensor-product spaces
// ---------------------------------------------------------------------------

/// One direction of the dyadic knot-line layout: degree, basis count and
/// refinement level.
#[derive(Clone, Copy, Debug)]
pub struct LineLevel {
    pub degree: i64,
    pub n: i64,
    pub level: u32,
}

impl LineLevel {
    /// Number of basis functions on this line at this level.
    pub fn num_basis(&self) -> i64 {
        (self.n - self.degree) * (1i64 << self.level) + self.degree
    }

    /// Knot-sequence position of a dyadic index, exact.
    fn position(&self, idx: &DyadicIndex) -> Result<i64, TSplineError> {
        let p = self.degree;
        let n = self.n;
        if *idx <= DyadicIndex::from_integer(p) {
            debug_assert!(idx.is_integer());
            Ok(idx.floor())
        } else if *idx < DyadicIndex::from_integer(n) {
            let offset = idx.abs_diff(&DyadicIndex::from_integer(p));
            if offset.exponent() > self.level {
                return Err(TSplineError::LevelTooCoarse {
                    requested: self.level,
                    required: offset.exponent(),
                });
            }
            Ok(p + offset.scaled_numerator(self.level))
        } else {
            debug_assert!(idx.is_integer());
            Ok(p + (n - p) * (1i64 << self.level) + (idx.floor() - n))
        }
    }

    /// Inverse of [`LineLevel::position`].
    fn index_at(&self, pos: i64) -> DyadicIndex {
        let p = self.degree;
        let interior = (self.n - p) * (1i64 << self.level);
        if pos <= p {
            DyadicIndex::from_integer(pos)
        } else if pos < p + interior {
            DyadicIndex::from_integer(p).add(&DyadicIndex::new(pos - p, self.level))
        } else {
            DyadicIndex::from_integer(self.n + (pos - p - interior))
        }
    }

    pub fn param(&self, idx: &DyadicIndex) -> f64 {
        let clamped = idx.clamp_to(self.degree, self.n);
        clamped.abs_diff(&DyadicIndex::from_integer(self.degree)).to_f64()
            / (self.n - self.degree) as f64
    }

    /// The global uniform knot vector of this line at this level.
    pub fn knot_vector(&self) -> crate::bspline::KnotVector {
        crate::bspline::KnotVector::uniform_open(self.degree as usize, self.num_basis() as usize)
    }
}

/// Expands a single local B-spline (given by its dyadic index vector) in the
/// uniform basis of the line at the requested level. Returns `(function
/// index, coefficient)` pairs.
fn embed_1d(
    hv: &[DyadicIndex],
    line: &LineLevel,
) -> Result<Vec<(i64, f64)>, TSplineError> {
    let p = line.degree as usize;
    type Key = Vec<(i64, u32)>;
    let key_of = |v: &[DyadicIndex]| -> Key {
        v.iter().map(|d| (d.numerator(), d.exponent())).collect()
    };
    let mut work: BTreeMap<Key, (Vec<DyadicIndex>, f64)> = BTreeMap::new();
    work.insert(key_of(hv), (hv.to_vec(), 1.0));
    let mut done: BTreeMap<i64, f64> = BTreeMap::new();
    while let Some((_, (v, c))) = work.pop_first() {
        let positions: Vec<i64> = v
            .iter()
            .map(|d| line.position(d))
            .collect::<Result<_, _>>()?;
        let gap = positions.windows(2).position(|w| w[1] - w[0] > 1);
        match gap {
            None => {
                *done.entry(positions[0]).or_insert(0.0) += c;
            }
            Some(j) => {
                let t = line.index_at(positions[j] + 1);
                let tx = line.param(&t);
                let knots: Vec<f64> = v.iter().map(|d| line.param(d)).collect();
                let mut merged = v.clone();
                merged.insert(j + 1, t);
                let left: Vec<DyadicIndex> = merged[..p + 2].to_vec();
                let right: Vec<DyadicIndex> = merged[1..].to_vec();
                let a = if knots[p] > knots[0] {
                    ((tx - knots[0]) / (knots[p] - knots[0])).min(1.0)
                } else {
                    1.0
                };
                let b = if knots[p + 1] > knots[1] {
                    ((knots[p + 1] - tx) / (knots[p + 1] - knots[1])).min(1.0)
                } else {
                    1.0
                };
                if a != 0.0 {
                    let e = work.entry(key_of(&left)).or_insert((left.clone(), 0.0));
                    e.1 += c * a;
                }
                if b != 0.0 {
                    let e = work.entry(key_of(&right)).or_insert((right.clone(), 0.0));
                    e.1 += c * b;
                }
            }
        }
    }
    Ok(done.into_iter().filter(|&(_, c)| c != 0.0).collect())
}

/// Exact sparse coefficients of the tensor-product expansion of a blending
/// function in the uniform basis at per-direction levels `(lx, ly)`.
pub fn embed_function(
    f: &TSplineFunction,
    degree: (usize, usize),
    n: (i64, i64),
    lx: u32,
    ly: u32,
) -> Result<Vec<((i64, i64), f64)>, TSplineError> {
    let line_x = LineLevel { degree: degree.0 as i64, n: n.0, level: lx };
    let line_y = LineLevel { degree: degree.1 as i64, n: n.1, level: ly };
    let ex = embed_1d(&f.hv, &line_x)?;
    let ey = embed_1d(&f.vv, &line_y)?;
    let mut out = Vec::with_capacity(ex.len() * ey.len());
    for &(i, a) in &ex {
        for &(j, b) in &ey {
            out.push(((i, j), a * b));
        }
    }
    Ok(out)
}

/// Spec-level wrapper: embedding at generation `level`, whose per-direction
/// dyadic levels are `ceil(level/2)` in x and `floor(level/2)` in y.
pub fn fine_embedding(
    f: &TSplineFunction,
    degree: (usize, usize),
    n: (i64, i64),
    level: u32,
) -> Result<Vec<((i64, i64), f64)>, TSplineError> {
    embed_function(f, degree, n, level.div_ceil(2), level / 2)
}

// ---------------------------------------------------------------------------
// Change of basis
// ---------------------------------------------------------------------------

/// Expresses each coarse function in the basis of `target`: column `j` holds
/// the coefficients of `coarse[j]` over `target.functions()`. Coefficients
/// come from the target's dual functionals; every column is then verified
/// against the exact fine-level embedding identity to a 1e-10 residual.
pub fn change_of_basis(
    coarse: &[TSplineFunction],
    target: &TSplineSpace,
) -> Result<Vec<SparseVec>, TSplineError> {
    if !target.is_analysis_suitable() {
        return Err(TSplineError::NotAnalysisSuitable);
    }
    let degree = target.degree();
    let n = target.basis_counts();
    let columns: Vec<Result<SparseVec, TSplineError>> = coarse
        .par_iter()
        .map(|f| change_of_basis_column(f, target, degree, n))
        .collect();
    columns.into_iter().collect()
}

fn change_of_basis_column(
    f: &TSplineFunction,
    target: &TSplineSpace,
    degree: (usize, usize),
    n: (i64, i64),
) -> Result<SparseVec, TSplineError> {
    // candidate target functions: support boxes meeting f's support
    let mut cands: Vec<usize> = Vec::new();
    let x0 = f.support.lo.x.floor().clamp(0, target.extents().0 - 1);
    let x1 = f.support.hi.x.floor().clamp(0, target.extents().0 - 1);
    let y0 = f.support.lo.y.floor().clamp(0, target.extents().1 - 1);
    let y1 = f.support.hi.y.floor().clamp(0, target.extents().1 - 1);
    for ix in x0..=x1 {
        for iy in y0..=y1 {
            cands.extend_from_slice(target.functions_near(ix, iy));
        }
    }
    cands.sort_unstable();
    cands.dedup();

    // dual-functional coefficients: separable for a product input
    let mut column: SparseVec = Vec::new();
    for &j in &cands {
        let g = &target.functions()[j];
        let cx = dual_functional(&g.lkv_x, &f.lkv_x).map_err(|_| TSplineError::NotInSpan(f64::NAN))?;
        let cy = dual_functional(&g.lkv_y, &f.lkv_y).map_err(|_| TSplineError::NotInSpan(f64::NAN))?;
        let c = cx * cy;
        if c.abs() > 1e-12 {
            column.push((j, c));
        }
    }

    // verify the fine-level identity at the local refinement level
    let mut lx = f.hv.iter().map(|d| d.exponent()).max().unwrap_or(0);
    let mut ly = f.vv.iter().map(|d| d.exponent()).max().unwrap_or(0);
    for &(j, _) in &column {
        let g = &target.functions()[j];
        lx = lx.max(g.hv.iter().map(|d| d.exponent()).max().unwrap_or(0));
        ly = ly.max(g.vv.iter().map(|d| d.exponent()).max().unwrap_or(0));
    }
    let mut residual: HashMap<(i64, i64), f64> = HashMap::new();
    for ((i, j), v) in embed_function(f, degree, n, lx, ly)? {
        *residual.entry((i, j)).or_insert(0.0) += v;
    }
    let norm_f: f64 = residual.values().map(|v| v * v).sum::<f64>().sqrt();
    for &(j, c) in &column {
        for ((a, b), v) in embed_function(&target.functions()[j], degree, n, lx, ly)? {
            *residual.entry((a, b)).or_insert(0.0) -= c * v;
        }
    }
    let err: f64 = residual.values().map(|v| v * v).sum::<f64>().sqrt();
    if err > 1e-10 * norm_f.max(1.0) {
        return Err(TSplineError::NotInSpan(err));
    }
    Ok(column)
}

// ---------------------------------------------------------------------------
// Projector
// ---------------------------------------------------------------------------

/// Input to the dual-functional projector: mixed partial derivatives up to
/// the requested orders at a point, right-sided at breakpoints.
pub trait ProjectorInput: Sync {
    /// `out[r][s]` is the `(d/dx)^r (d/dy)^s` derivative at `(x, y)`.
    fn mixed_derivatives(&self, x: f64, y: f64, kx: usize, ky: usize) -> Vec<Vec<f64>>;
}

/// A spline given as a combination of separable terms.
pub struct SplineInput {
    terms: Vec<(LocalKnotVector, LocalKnotVector, f64)>,
}

impl SplineInput {
    pub fn new(terms: Vec<(LocalKnotVector, LocalKnotVector, f64)>) -> Self {
        SplineInput { terms }
    }

    pub fn from_space(space: &TSplineSpace, coeffs: &[f64]) -> Self {
        assert_eq!(coeffs.len(), space.dim());
        SplineInput {
            terms: space
                .functions()
                .iter()
                .zip(coeffs)
                .filter(|(_, &c)| c != 0.0)
                .map(|(f, &c)| (f.lkv_x.clone(), f.lkv_y.clone(), c))
                .collect(),
        }
    }

    /// A tensor-product spline over a pair of global knot vectors, with a
    /// row-major coefficient grid (`x` index slow).
    pub fn from_tensor(
        kv_x: &crate::bspline::KnotVector,
        kv_y: &crate::bspline::KnotVector,
        coeffs: &[f64],
    ) -> Self {
        let nx = kv_x.num_basis();
        let ny = kv_y.num_basis();
        assert_eq!(coeffs.len(), nx * ny);
        let mut terms = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let c = coeffs[i * ny + j];
                if c != 0.0 {
                    terms.push((kv_x.local(i), kv_y.local(j), c));
                }
            }
        }
        SplineInput { terms }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, b, c)| c * a.eval(x) * b.eval(y))
            .sum()
    }
}

impl ProjectorInput for SplineInput {
    fn mixed_derivatives(&self, x: f64, y: f64, kx: usize, ky: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; ky + 1]; kx + 1];
        for (a, b, c) in &self.terms {
            let (ax0, ax1) = a.support();
            let (ay0, ay1) = b.support();
            if x < ax0 || x > ax1 || y < ay0 || y > ay1 {
                continue;
            }
            let dx = a.derivatives(x, kx);
            let dy = b.derivatives(y, ky);
            for r in 0..=kx {
                for s in 0..=ky {
                    out[r][s] += c * dx[r] * dy[s];
                }
            }
        }
        out
    }
}

/// The constant function.
pub struct ConstInput(pub f64);

impl ProjectorInput for ConstInput {
    fn mixed_derivatives(&self, _x: f64, _y: f64, kx: usize, ky: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; ky + 1]; kx + 1];
        out[0][0] = self.0;
        out
    }
}

/// Coefficients of the dual-functional quasi-interpolant of `f` in the given
/// analysis-suitable space. Exact on members of the space.
pub fn projector(space: &TSplineSpace, f: &dyn ProjectorInput) -> Result<Vec<f64>, TSplineError> {
    if !space.is_analysis_suitable() {
        return Err(TSplineError::NotAnalysisSuitable);
    }
    let mut coeffs = Vec::with_capacity(space.dim());
    for g in space.functions() {
        let wx = dual_weights(&g.lkv_x).map_err(|_| TSplineError::NotAnalysisSuitable)?;
        let wy = dual_weights(&g.lkv_y).map_err(|_| TSplineError::NotAnalysisSuitable)?;
        let d = f.mixed_derivatives(wx.tau, wy.tau, wx.weights.len() - 1, wy.weights.len() - 1);
        let mut lambda = 0.0;
        for (r, wr) in wx.weights.iter().enumerate() {
            for (s, ws) in wy.weights.iter().enumerate() {
                lambda += wr * ws * d[r][s];
            }
        }
        coeffs.push(lambda);
    }
    Ok(coeffs)
}
