//! Construction of the T-spline space over a bisection T-mesh.

use super::skeleton::Skeleton;
use super::{
    generation_of, Anchor, BezierElement, Extension, FunctionKey, TSplineError, TSplineFunction,
};
use crate::bspline::LocalKnotVector;
use crate::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use crate::tmesh::{Axis, TMesh};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// An analysis-suitable T-spline space over a bisection T-mesh: the blending
/// functions, the Bézier mesh, the element-to-function incidence, and the
/// analysis-suitability certificates.
#[derive(Clone, Debug)]
pub struct TSplineSpace {
    degree: (usize, usize),
    n: (i64, i64),
    m: (i64, i64),
    functions: Vec<TSplineFunction>,
    key_index: HashMap<FunctionKey, usize>,
    bezier: Vec<BezierElement>,
    incidence: Vec<Vec<usize>>,
    extensions: Vec<Extension>,
    dual_compatible: bool,
    crossing_free: bool,
    fn_buckets: Vec<Vec<usize>>,
}

impl TSplineSpace {
    /// Builds the space: anchors, index vectors, extensions, Bézier mesh and
    /// both analysis-suitability checks.
    pub fn build(mesh: &TMesh) -> Result<Self, TSplineError> {
        let skeleton = Skeleton::from_mesh(mesh);
        Self::build_with_skeleton(mesh, &skeleton)
    }

    pub(crate) fn build_with_skeleton(
        mesh: &TMesh,
        skeleton: &Skeleton,
    ) -> Result<Self, TSplineError> {
        let degree = mesh.degree();
        let n = mesh.basis_counts();
        let m = mesh.extents();
        let anchors = enumerate_anchors(mesh, skeleton);
        let mut functions = Vec::with_capacity(anchors.len());
        for anchor in anchors {
            functions.push(trace_function(mesh, skeleton, &anchor)?);
        }
        let mut key_index = HashMap::with_capacity(functions.len());
        for (i, f) in functions.iter().enumerate() {
            key_index.insert(f.key(), i);
        }
        let extensions = compute_extensions(mesh, skeleton);
        let crossing_free = extension_crossings(&extensions).is_empty();
        let mut space = TSplineSpace {
            degree,
            n,
            m,
            functions,
            key_index,
            bezier: Vec::new(),
            incidence: Vec::new(),
            extensions,
            dual_compatible: false,
            crossing_free,
            fn_buckets: vec![Vec::new(); (m.0 * m.1) as usize],
        };
        for (i, f) in space.functions.iter().enumerate() {
            let x0 = f.support.lo.x.floor().clamp(0, m.0 - 1);
            let x1 = (f.support.hi.x.floor() - if f.support.hi.x.is_integer() { 1 } else { 0 })
                .clamp(0, m.0 - 1);
            let y0 = f.support.lo.y.floor().clamp(0, m.1 - 1);
            let y1 = (f.support.hi.y.floor() - if f.support.hi.y.is_integer() { 1 } else { 0 })
                .clamp(0, m.1 - 1);
            for ix in x0..=x1 {
                for iy in y0..=y1 {
                    space.fn_buckets[(ix * m.1 + iy) as usize].push(i);
                }
            }
        }
        space.dual_compatible = space.dual_compatibility_violations().is_empty();
        let (bezier, incidence) = space.build_bezier(mesh);
        space.bezier = bezier;
        space.incidence = incidence;
        Ok(space)
    }

    pub fn degree(&self) -> (usize, usize) {
        self.degree
    }

    pub fn basis_counts(&self) -> (i64, i64) {
        self.n
    }

    pub fn extents(&self) -> (i64, i64) {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.functions.len()
    }

    pub fn functions(&self) -> &[TSplineFunction] {
        &self.functions
    }

    pub fn function_index(&self, key: &FunctionKey) -> Option<usize> {
        self.key_index.get(key).copied()
    }

    pub fn bezier_mesh(&self) -> &[BezierElement] {
        &self.bezier
    }

    /// Function indices not vanishing on Bézier element `q`.
    pub fn incident_functions(&self, q: usize) -> &[usize] {
        &self.incidence[q]
    }

    pub fn extensions(&self) -> &[Extension] {
        &self.extensions
    }

    /// The analysis-suitability certificate (dual compatibility).
    pub fn is_analysis_suitable(&self) -> bool {
        self.dual_compatible
    }

    /// The independent classical criterion: no horizontal T-junction
    /// extension crosses a vertical one.
    pub fn is_extension_crossing_free(&self) -> bool {
        self.crossing_free
    }

    pub fn index_to_param(&self, axis: Axis, idx: &DyadicIndex) -> f64 {
        let (p, nd) = match axis {
            Axis::X => (self.degree.0 as i64, self.n.0),
            Axis::Y => (self.degree.1 as i64, self.n.1),
        };
        let clamped = idx.clamp_to(p, nd);
        clamped.abs_diff(&DyadicIndex::from_integer(p)).to_f64() / (nd - p) as f64
    }

    /// Candidate functions whose support bounding box meets the integer cell
    /// holding the given index point.
    pub fn functions_near(&self, ix: i64, iy: i64) -> &[usize] {
        &self.fn_buckets[(ix.clamp(0, self.m.0 - 1) * self.m.1 + iy.clamp(0, self.m.1 - 1)) as usize]
    }

    /// Sum of all blending functions at a parametric point.
    pub fn partition_sum(&self, x: f64, y: f64) -> f64 {
        self.functions.iter().map(|f| f.value(x, y)).sum()
    }

    /// Pairs of anchors violating dual compatibility (empty when the space
    /// is analysis-suitable). Pairs with disjoint open supports are vacuously
    /// compatible.
    pub fn dual_compatibility_violations(&self) -> Vec<(usize, usize)> {
        let mut pairs = BTreeSet::new();
        for bucket in &self.fn_buckets {
            for (a, &i) in bucket.iter().enumerate() {
                for &j in bucket.iter().skip(a + 1) {
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    pairs.insert((lo, hi));
                }
            }
        }
        let mut violations = Vec::new();
        for (i, j) in pairs {
            let fi = &self.functions[i];
            let fj = &self.functions[j];
            if !param_open_overlap(fi, fj) {
                continue;
            }
            let x_ok = fi.hv != fj.hv && overlap_as_consecutive(&fi.hv, &fj.hv);
            let y_ok = fi.vv != fj.vv && overlap_as_consecutive(&fi.vv, &fj.vv);
            if !(x_ok || y_ok) {
                violations.push((i, j));
            }
        }
        violations
    }

    /// Support extension of Bézier element `q`: the supports of all incident
    /// functions and the smallest rectangle containing their union.
    pub fn support_extension(&self, q: usize) -> (Vec<IndexRect>, IndexRect) {
        let rects: Vec<IndexRect> = self.incidence[q]
            .iter()
            .map(|&i| self.functions[i].support)
            .collect();
        let mut bound = self.bezier[q].index_rect;
        for r in &rects {
            bound = IndexRect::new(
                IndexVec2::new(bound.lo.x.min(r.lo.x), bound.lo.y.min(r.lo.y)),
                IndexVec2::new(bound.hi.x.max(r.hi.x), bound.hi.y.max(r.hi.y)),
            );
        }
        (rects, bound)
    }

    fn build_bezier(&self, mesh: &TMesh) -> (Vec<BezierElement>, Vec<Vec<usize>>) {
        let mut v_cuts: Vec<(DyadicIndex, DyadicIndex, DyadicIndex)> = Vec::new();
        let mut h_cuts: Vec<(DyadicIndex, DyadicIndex, DyadicIndex)> = Vec::new();
        for ext in &self.extensions {
            if ext.horizontal {
                h_cuts.push((ext.junction.y, ext.span.0, ext.span.1));
            } else {
                v_cuts.push((ext.junction.x, ext.span.0, ext.span.1));
            }
        }
        let certified = self.dual_compatible && self.crossing_free;
        let mut bezier = Vec::new();
        for (rect, _) in mesh.elements() {
            let empty_x = mesh.param_equal(Axis::X, &rect.lo.x, &rect.hi.x);
            let empty_y = mesh.param_equal(Axis::Y, &rect.lo.y, &rect.hi.y);
            if empty_x || empty_y {
                continue;
            }
            let mut xs: Vec<DyadicIndex> = vec![rect.lo.x, rect.hi.x];
            for &(x, y0, y1) in &v_cuts {
                if rect.lo.x < x && x < rect.hi.x && y0 < rect.hi.y && rect.lo.y < y1 {
                    if certified {
                        debug_assert!(
                            y0 <= rect.lo.y && rect.hi.y <= y1,
                            "extension chord must span the element on AS meshes"
                        );
                    }
                    xs.push(x);
                }
            }
            let mut ys: Vec<DyadicIndex> = vec![rect.lo.y, rect.hi.y];
            for &(y, x0, x1) in &h_cuts {
                if rect.lo.y < y && y < rect.hi.y && x0 < rect.hi.x && rect.lo.x < x1 {
                    if certified {
                        debug_assert!(x0 <= rect.lo.x && rect.hi.x <= x1);
                    }
                    ys.push(y);
                }
            }
            xs.sort();
            xs.dedup();
            ys.sort();
            ys.dedup();
            for wx in xs.windows(2) {
                for wy in ys.windows(2) {
                    let cell = IndexRect::new(
                        IndexVec2::new(wx[0], wy[0]),
                        IndexVec2::new(wx[1], wy[1]),
                    );
                    let param = (
                        self.index_to_param(Axis::X, &wx[0]),
                        self.index_to_param(Axis::X, &wx[1]),
                        self.index_to_param(Axis::Y, &wy[0]),
                        self.index_to_param(Axis::Y, &wy[1]),
                    );
                    debug_assert!(param.1 > param.0 && param.3 > param.2);
                    bezier.push(BezierElement { index_rect: cell, param });
                }
            }
        }
        bezier.sort_by(|a, b| a.index_rect.cmp(&b.index_rect));
        let mut incidence = Vec::with_capacity(bezier.len());
        for q in &bezier {
            let ix = q.index_rect.lo.x.floor();
            let iy = q.index_rect.lo.y.floor();
            let mut inc: Vec<usize> = self
                .functions_near(ix, iy)
                .iter()
                .copied()
                .filter(|&i| {
                    let f = &self.functions[i];
                    let (sx0, sx1, sy0, sy1) = f.param_support();
                    sx0 <= q.param.0 && q.param.1 <= sx1 && sy0 <= q.param.2 && q.param.3 <= sy1
                })
                .collect();
            inc.sort_unstable();
            inc.dedup();
            incidence.push(inc);
        }
        (bezier, incidence)
    }

    /// JSON dump of the basis: anchors, index vectors, knot vectors and
    /// generations.
    pub fn to_json(&self) -> String {
        use serde_json::{json, Value};
        let funcs: Vec<Value> = self
            .functions
            .iter()
            .map(|f| {
                json!({
                    "anchor": format!("{:?}", f.anchor),
                    "hv": f.hv.iter().map(|d| format!("{d}")).collect::<Vec<_>>(),
                    "vv": f.vv.iter().map(|d| format!("{d}")).collect::<Vec<_>>(),
                    "knots_x": f.lkv_x.knots(),
                    "knots_y": f.lkv_y.knots(),
                    "generation": f.generation,
                })
            })
            .collect();
        serde_json::to_string_pretty(&json!({
            "degree": [self.degree.0, self.degree.1],
            "dim": self.dim(),
            "analysis_suitable": self.dual_compatible,
            "functions": funcs,
        }))
        .expect("space serialization")
    }
}

/// Both local knot vectors can be read as consecutive runs of one global
/// knot line: the union must contain each vector as a contiguous block.
pub(crate) fn overlap_as_consecutive(a: &[DyadicIndex], b: &[DyadicIndex]) -> bool {
    let mut union: Vec<DyadicIndex> = a.iter().chain(b.iter()).copied().collect();
    union.sort();
    union.dedup();
    let contiguous = |v: &[DyadicIndex]| -> bool {
        let start = union.partition_point(|u| u < &v[0]);
        union[start..].starts_with(v)
    };
    contiguous(a) && contiguous(b)
}

fn param_open_overlap(a: &TSplineFunction, b: &TSplineFunction) -> bool {
    let (ax0, ax1, ay0, ay1) = a.param_support();
    let (bx0, bx1, by0, by1) = b.param_support();
    ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1
}

fn active_rect(mesh: &TMesh) -> IndexRect {
    let (p1, p2) = mesh.degree();
    let (m1, m2) = mesh.extents();
    let a1 = (p1 as i64 + 1) / 2;
    let a2 = (p2 as i64 + 1) / 2;
    IndexRect::from_integers(a1, a2, m1 - a1, m2 - a2)
}

/// All anchors of the parity-appropriate kind inside the active region,
/// in lexicographic order.
pub(crate) fn enumerate_anchors(mesh: &TMesh, skeleton: &Skeleton) -> Vec<Anchor> {
    let (p1, p2) = mesh.degree();
    let active = active_rect(mesh);
    let mut anchors: Vec<Anchor> = match (p1 % 2 == 0, p2 % 2 == 0) {
        (false, false) => skeleton
            .vertices()
            .filter(|v| active.contains_point(v))
            .map(|v| Anchor::Vertex(*v))
            .collect(),
        (true, true) => mesh
            .elements()
            .filter(|(r, _)| active.contains_rect(r))
            .map(|(r, _)| Anchor::Element(*r))
            .collect(),
        (true, false) => elementary_edges(skeleton, true)
            .into_iter()
            .filter(|(y, x0, x1)| {
                active.contains_point(&IndexVec2::new(*x0, *y))
                    && active.contains_point(&IndexVec2::new(*x1, *y))
            })
            .map(|(y, x0, x1)| Anchor::HEdge { y, x0, x1 })
            .collect(),
        (false, true) => elementary_edges(skeleton, false)
            .into_iter()
            .map(|(x, y0, y1)| Anchor::VEdge { x, y0, y1 })
            .filter(|a| match a {
                Anchor::VEdge { x, y0, y1 } => {
                    active.contains_point(&IndexVec2::new(*x, *y0))
                        && active.contains_point(&IndexVec2::new(*x, *y1))
                }
                _ => unreachable!(),
            })
            .collect(),
    };
    anchors.sort_by_key(|a| a.sort_key());
    anchors
}

/// Elementary edges: maximal segments split at every vertex lying on them.
/// Returns `(fixed, lo, hi)` tuples; `horizontal` picks the line family.
fn elementary_edges(
    skeleton: &Skeleton,
    horizontal: bool,
) -> Vec<(DyadicIndex, DyadicIndex, DyadicIndex)> {
    // group vertices by the fixed coordinate
    let mut by_line: BTreeMap<DyadicIndex, Vec<DyadicIndex>> = BTreeMap::new();
    for v in skeleton.vertices() {
        if horizontal {
            by_line.entry(v.y).or_default().push(v.x);
        } else {
            by_line.entry(v.x).or_default().push(v.y);
        }
    }
    let mut edges = Vec::new();
    let lines: Vec<(&DyadicIndex, &super::skeleton::IntervalSet)> = if horizontal {
        skeleton.horizontal_lines().collect()
    } else {
        skeleton.vertical_lines().collect()
    };
    for (fixed, set) in lines {
        let Some(stops) = by_line.get(fixed) else { continue };
        let mut stops = stops.clone();
        stops.sort();
        stops.dedup();
        for (a, b) in set.iter() {
            let inside: Vec<DyadicIndex> = stops
                .iter()
                .copied()
                .filter(|s| a <= s && s <= b)
                .collect();
            for w in inside.windows(2) {
                edges.push((*fixed, w[0], w[1]));
            }
        }
    }
    edges
}

/// Traces the index vectors of one anchor and assembles the function.
pub(crate) fn trace_function(
    mesh: &TMesh,
    skeleton: &Skeleton,
    anchor: &Anchor,
) -> Result<TSplineFunction, TSplineError> {
    let (p1, p2) = mesh.degree();
    let hv = trace_direction(skeleton, anchor, p1, true)
        .ok_or(TSplineError::TraceExhausted(*anchor))?;
    let vv = trace_direction(skeleton, anchor, p2, false)
        .ok_or(TSplineError::TraceExhausted(*anchor))?;
    let knots_x: Vec<f64> = hv.iter().map(|d| mesh.parametric_coord(Axis::X, d)).collect();
    let knots_y: Vec<f64> = vv.iter().map(|d| mesh.parametric_coord(Axis::Y, d)).collect();
    let lkv_x = LocalKnotVector::new(knots_x, p1).expect("traced vector has p+2 entries");
    let lkv_y = LocalKnotVector::new(knots_y, p2).expect("traced vector has p+2 entries");
    let support = IndexRect::new(
        IndexVec2::new(hv[0], vv[0]),
        IndexVec2::new(hv[p1 + 1], vv[p2 + 1]),
    );
    let generation = generation_of(&hv, &vv);
    Ok(TSplineFunction {
        anchor: *anchor,
        hv,
        vv,
        lkv_x,
        lkv_y,
        support,
        generation,
    })
}

fn trace_direction(
    skeleton: &Skeleton,
    anchor: &Anchor,
    p: usize,
    x_direction: bool,
) -> Option<Vec<DyadicIndex>> {
    // (line coordinate, left start, right start, own index for odd degree)
    let (line, start_lo, start_hi, own) = match (anchor, x_direction) {
        (Anchor::Vertex(v), true) => (v.y, v.x, v.x, Some(v.x)),
        (Anchor::Vertex(v), false) => (v.x, v.y, v.y, Some(v.y)),
        (Anchor::Element(r), true) => (
            DyadicIndex::midpoint(&r.lo.y, &r.hi.y),
            r.lo.x,
            r.hi.x,
            None,
        ),
        (Anchor::Element(r), false) => (
            DyadicIndex::midpoint(&r.lo.x, &r.hi.x),
            r.lo.y,
            r.hi.y,
            None,
        ),
        (Anchor::HEdge { y, x0, x1 }, true) => (*y, *x0, *x1, None),
        (Anchor::HEdge { y, x0, x1 }, false) => {
            (DyadicIndex::midpoint(x0, x1), *y, *y, Some(*y))
        }
        (Anchor::VEdge { x, y0, y1 }, true) => {
            (DyadicIndex::midpoint(y0, y1), *x, *x, Some(*x))
        }
        (Anchor::VEdge { x, y0, y1 }, false) => (*x, *y0, *y1, None),
    };
    let per_side = (p + 2) / 2;
    let inclusive = own.is_none();
    let (lo_hits, hi_hits) = if x_direction {
        (
            skeleton.vertical_hits(&line, &start_lo, per_side, true, inclusive),
            skeleton.vertical_hits(&line, &start_hi, per_side, false, inclusive),
        )
    } else {
        (
            skeleton.horizontal_hits(&line, &start_lo, per_side, true, inclusive),
            skeleton.horizontal_hits(&line, &start_hi, per_side, false, inclusive),
        )
    };
    if lo_hits.len() < per_side || hi_hits.len() < per_side {
        return None;
    }
    let mut out = lo_hits;
    if let Some(idx) = own {
        out.push(idx);
    }
    out.extend(hi_hits);
    debug_assert_eq!(out.len(), p + 2);
    Some(out)
}

/// All T-junction extensions of the mesh (both parities).
pub(crate) fn compute_extensions(mesh: &TMesh, skeleton: &Skeleton) -> Vec<Extension> {
    let (p1, p2) = mesh.degree();
    let (m1, m2) = mesh.extents();
    let mut extensions = Vec::new();
    for v in skeleton.vertices() {
        if v.x == DyadicIndex::zero()
            || v.x == DyadicIndex::from_integer(m1)
            || v.y == DyadicIndex::zero()
            || v.y == DyadicIndex::from_integer(m2)
        {
            continue;
        }
        let (left, right, down, up) = skeleton.directions_at(v);
        let valence = [left, right, down, up].iter().filter(|&&b| b).count();
        if valence != 3 {
            continue;
        }
        if !right || !left {
            // horizontal T-junction: extension along the horizontal line
            let (toward_missing, toward_stem) = (p1.div_ceil(2), p1 / 2);
            let (count_left, count_right) = if right {
                (toward_missing, toward_stem) // missing left
            } else {
                (toward_stem, toward_missing) // missing right
            };
            let lo_hits = skeleton.vertical_hits(&v.y, &v.x, count_left, true, false);
            let hi_hits = skeleton.vertical_hits(&v.y, &v.x, count_right, false, false);
            if lo_hits.len() < count_left || hi_hits.len() < count_right {
                continue;
            }
            let x0 = lo_hits.first().copied().unwrap_or(v.x);
            let x1 = hi_hits.last().copied().unwrap_or(v.x);
            extensions.push(Extension {
                junction: *v,
                horizontal: true,
                span: (x0, x1),
            });
        } else {
            // vertical T-junction
            let (toward_missing, toward_stem) = (p2.div_ceil(2), p2 / 2);
            let (count_down, count_up) = if up {
                (toward_missing, toward_stem) // missing down
            } else {
                (toward_stem, toward_missing) // missing up
            };
            let lo_hits = skeleton.horizontal_hits(&v.x, &v.y, count_down, true, false);
            let hi_hits = skeleton.horizontal_hits(&v.x, &v.y, count_up, false, false);
            if lo_hits.len() < count_down || hi_hits.len() < count_up {
                continue;
            }
            let y0 = lo_hits.first().copied().unwrap_or(v.y);
            let y1 = hi_hits.last().copied().unwrap_or(v.y);
            extensions.push(Extension {
                junction: *v,
                horizontal: false,
                span: (y0, y1),
            });
        }
    }
    extensions
}

/// T-junction extensions of a mesh, without building the space (cheap
/// enough for closure loops).
pub fn mesh_extensions(mesh: &TMesh, skeleton: &Skeleton) -> Vec<Extension> {
    compute_extensions(mesh, skeleton)
}

/// Crossing pairs between horizontal and vertical extensions (closed
/// segments). Analysis-suitable meshes have none.
pub fn extension_crossings(extensions: &[Extension]) -> Vec<(usize, usize)> {
    let mut crossings = Vec::new();
    for (i, h) in extensions.iter().enumerate() {
        if !h.horizontal {
            continue;
        }
        for (j, v) in extensions.iter().enumerate() {
            if v.horizontal {
                continue;
            }
            if h.span.0 <= v.junction.x
                && v.junction.x <= h.span.1
                && v.span.0 <= h.junction.y
                && h.junction.y <= v.span.1
            {
                crossings.push((i, j));
            }
        }
    }
    crossings
}
