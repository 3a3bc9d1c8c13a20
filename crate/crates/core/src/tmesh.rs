//! Bisection T-meshes in the index domain.
//!
//! A mesh starts as the Cartesian grid of unit index squares on
//! `[0, m_1] x [0, m_2]` with `m_d = n_d + p_d`, and is refined by element
//! bisection with the direction alternating by generation parity. The
//! bisection history is the source of truth: the element set, admissibility
//! audits and all space decompositions are replay-based.

use crate::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum TMeshError {
    #[error("n_d = {0} is too small for an open knot vector of degree {1}")]
    TooFewBasisFunctions(i64, usize),
    #[error("element {0:?} is not in the mesh")]
    NoSuchElement(IndexRect),
    #[error("refinement closure exceeded the generation bound at {0:?}")]
    ClosureDepthExceeded(IndexRect),
    #[error("mesh deserialization failed: {0}")]
    Deserialize(String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Split in the first coordinate: adds a vertical edge.
    X,
    /// Split in the second coordinate: adds a horizontal edge.
    Y,
}

/// One recorded bisection. `generation` is the generation of the bisection,
/// i.e. the parent's generation plus one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bisection {
    pub parent: IndexRect,
    pub direction: Axis,
    pub generation: u32,
}

/// The neighborhood radius: componentwise distance bound for elements of
/// generation `gen`, exact in dyadic arithmetic.
pub fn neighborhood_radius(degree: (usize, usize), gen: u32) -> (DyadicIndex, DyadicIndex) {
    let (p1, p2) = (degree.0 as i64, degree.1 as i64);
    if gen % 2 == 0 {
        let s = gen / 2;
        (
            DyadicIndex::new(2 * (p1 / 2) + 1, s + 1),
            DyadicIndex::new(2 * ((p2 + 1) / 2) + 1, s + 1),
        )
    } else {
        let s = (gen + 1) / 2;
        (
            DyadicIndex::new(2 * ((p1 + 1) / 2) + 1, s + 1),
            DyadicIndex::new(2 * (p2 / 2) + 1, s),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibilityViolation {
    pub step: usize,
    pub bisection: Bisection,
    pub coarser_neighbor: IndexRect,
    pub neighbor_generation: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct MeshDocument {
    version: u32,
    degree: (usize, usize),
    n: (i64, i64),
    history: Vec<Bisection>,
}

/// A bisection T-mesh with generations and replayable history.
#[derive(Clone, Debug)]
pub struct TMesh {
    degree: (usize, usize),
    n: (i64, i64),
    m: (i64, i64),
    elements: BTreeMap<IndexRect, u32>,
    buckets: Vec<Vec<IndexRect>>,
    history: Vec<Bisection>,
    parity_respected: bool,
}

impl TMesh {
    /// The Cartesian grid of unit index squares, all of generation zero.
    pub fn initial(degree: (usize, usize), n: (i64, i64)) -> Result<Self, TMeshError> {
        for (nd, pd) in [(n.0, degree.0), (n.1, degree.1)] {
            if nd < pd as i64 + 1 {
                return Err(TMeshError::TooFewBasisFunctions(nd, pd));
            }
        }
        let m = (n.0 + degree.0 as i64, n.1 + degree.1 as i64);
        let mut mesh = TMesh {
            degree,
            n,
            m,
            elements: BTreeMap::new(),
            buckets: vec![Vec::new(); (m.0 * m.1) as usize],
            history: Vec::new(),
            parity_respected: true,
        };
        for i in 0..m.0 {
            for j in 0..m.1 {
                let rect = IndexRect::from_integers(i, j, i + 1, j + 1);
                mesh.insert_element(rect, 0);
            }
        }
        Ok(mesh)
    }

    pub fn degree(&self) -> (usize, usize) {
        self.degree
    }

    /// Basis functions per direction of the level-zero tensor space.
    pub fn basis_counts(&self) -> (i64, i64) {
        self.n
    }

    /// Index-domain extents `(m_1, m_2)`.
    pub fn extents(&self) -> (i64, i64) {
        self.m
    }

    /// True when every bisection followed the generation-parity rule.
    pub fn parity_respected(&self) -> bool {
        self.parity_respected
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Elements in lexicographic order with their generations.
    pub fn elements(&self) -> impl Iterator<Item = (&IndexRect, u32)> {
        self.elements.iter().map(|(r, &g)| (r, g))
    }

    pub fn generation(&self, rect: &IndexRect) -> Option<u32> {
        self.elements.get(rect).copied()
    }

    pub fn contains(&self, rect: &IndexRect) -> bool {
        self.elements.contains_key(rect)
    }

    pub fn history(&self) -> &[Bisection] {
        &self.history
    }

    /// History stably re-sorted by non-decreasing bisection generation.
    /// Only meaningful on parity-respecting meshes; replaying it reproduces
    /// the same element set.
    pub fn history_by_generation(&self) -> Vec<Bisection> {
        let mut sorted = self.history.clone();
        sorted.sort_by_key(|b| b.generation);
        sorted
    }

    /// The finest dyadic level used by element corners, per direction.
    pub fn finest_levels(&self) -> (u32, u32) {
        let mut lx = 0;
        let mut ly = 0;
        for (rect, _) in self.elements() {
            lx = lx.max(rect.lo.x.exponent()).max(rect.hi.x.exponent());
            ly = ly.max(rect.lo.y.exponent()).max(rect.hi.y.exponent());
        }
        (lx, ly)
    }

    fn bucket_of(&self, rect: &IndexRect) -> usize {
        let ix = rect.lo.x.floor().min(self.m.0 - 1);
        let iy = rect.lo.y.floor().min(self.m.1 - 1);
        (ix * self.m.1 + iy) as usize
    }

    fn insert_element(&mut self, rect: IndexRect, gen: u32) {
        let b = self.bucket_of(&rect);
        self.buckets[b].push(rect);
        self.elements.insert(rect, gen);
    }

    fn remove_element(&mut self, rect: &IndexRect) {
        let b = self.bucket_of(rect);
        self.buckets[b].retain(|r| r != rect);
        self.elements.remove(rect);
    }

    /// Parametric equality of two index coordinates along an axis: true when
    /// both clamp to the same point of the non-empty region `[p_d, n_d]`.
    pub fn param_equal(&self, axis: Axis, a: &DyadicIndex, b: &DyadicIndex) -> bool {
        let (p, n) = self.axis_range(axis);
        a.clamp_to(p, n) == b.clamp_to(p, n)
    }

    fn axis_range(&self, axis: Axis) -> (i64, i64) {
        match axis {
            Axis::X => (self.degree.0 as i64, self.n.0),
            Axis::Y => (self.degree.1 as i64, self.n.1),
        }
    }

    /// Parametric coordinate of an index value: internal knots are equally
    /// spaced, repeated boundary knots collapse the frame.
    pub fn parametric_coord(&self, axis: Axis, idx: &DyadicIndex) -> f64 {
        let (p, n) = self.axis_range(axis);
        let clamped = idx.clamp_to(p, n);
        let offset = clamped.abs_diff(&DyadicIndex::from_integer(p));
        offset.to_f64() / (n - p) as f64
    }

    /// Translated midpoint of an element: clamped into the non-empty region.
    pub fn translated_midpoint(&self, rect: &IndexRect) -> IndexVec2 {
        rect.midpoint().translate(
            (self.degree.0 as i64, self.degree.1 as i64),
            (self.n.0, self.n.1),
        )
    }

    /// Componentwise distance between two elements via translated midpoints.
    pub fn element_dist(&self, a: &IndexRect, b: &IndexRect) -> (DyadicIndex, DyadicIndex) {
        self.translated_midpoint(a)
            .componentwise_dist(&self.translated_midpoint(b))
    }

    /// True when the index point is within the neighborhood radius of the
    /// element (diagnostic region predicate).
    pub fn point_in_neighborhood_region(&self, rect: &IndexRect, point: &IndexVec2) -> bool {
        let gen = self.generation(rect).expect("element in mesh");
        let radius = neighborhood_radius(self.degree, gen);
        let translated = point.translate(
            (self.degree.0 as i64, self.degree.1 as i64),
            (self.n.0, self.n.1),
        );
        let dist = self.translated_midpoint(rect).componentwise_dist(&translated);
        dist.0 <= radius.0 && dist.1 <= radius.1
    }

    /// All mesh elements within the neighborhood radius of `rect`,
    /// in lexicographic order. `rect` itself is always included.
    pub fn neighborhood(&self, rect: &IndexRect) -> Vec<IndexRect> {
        let gen = self.generation(rect).expect("neighborhood of a mesh element");
        self.neighborhood_at(rect, gen)
    }

    fn neighborhood_at(&self, rect: &IndexRect, gen: u32) -> Vec<IndexRect> {
        let radius = neighborhood_radius(self.degree, gen);
        let mid = self.translated_midpoint(rect);
        // Raw-coordinate scan windows accounting for the clamp: when the
        // translated window reaches the non-empty region boundary, the whole
        // frame on that side can be within distance.
        let (p1, n1) = self.axis_range(Axis::X);
        let (p2, n2) = self.axis_range(Axis::Y);
        let lo_x = if mid.x.abs_diff(&DyadicIndex::from_integer(p1)) <= radius.0 { 0 } else { (mid.x.to_f64() - radius.0.to_f64()).floor() as i64 - 1 };
        let hi_x = if DyadicIndex::from_integer(n1).abs_diff(&mid.x) <= radius.0 { self.m.0 } else { (mid.x.to_f64() + radius.0.to_f64()).ceil() as i64 + 1 };
        let lo_y = if mid.y.abs_diff(&DyadicIndex::from_integer(p2)) <= radius.1 { 0 } else { (mid.y.to_f64() - radius.1.to_f64()).floor() as i64 - 1 };
        let hi_y = if DyadicIndex::from_integer(n2).abs_diff(&mid.y) <= radius.1 { self.m.1 } else { (mid.y.to_f64() + radius.1.to_f64()).ceil() as i64 + 1 };
        let mut out = Vec::new();
        for ix in lo_x.max(0)..hi_x.min(self.m.0) {
            for iy in lo_y.max(0)..hi_y.min(self.m.1) {
                for cand in &self.buckets[(ix * self.m.1 + iy) as usize] {
                    let dist = self.element_dist(rect, cand);
                    if dist.0 <= radius.0 && dist.1 <= radius.1 {
                        out.push(*cand);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Elements whose closed rectangle intersects `window`.
    pub fn elements_intersecting(&self, window: &IndexRect) -> Vec<IndexRect> {
        // elements are at most one index unit wide, so the bucket one below
        // the window can still hold elements touching its closed boundary
        let x0 = (window.lo.x.floor() - 1).clamp(0, self.m.0 - 1);
        let x1 = window.hi.x.floor().clamp(0, self.m.0 - 1);
        let y0 = (window.lo.y.floor() - 1).clamp(0, self.m.1 - 1);
        let y1 = window.hi.y.floor().clamp(0, self.m.1 - 1);
        let mut out = Vec::new();
        for ix in x0..=x1 {
            for iy in y0..=y1 {
                for rect in &self.buckets[(ix * self.m.1 + iy) as usize] {
                    if rect.lo.x <= window.hi.x
                        && window.lo.x <= rect.hi.x
                        && rect.lo.y <= window.hi.y
                        && window.lo.y <= rect.hi.y
                    {
                        out.push(*rect);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Children of bisecting `rect` along `axis`; a single child (the same
    /// rectangle) when the parametric length in that direction is zero.
    pub fn bisection_children(&self, rect: &IndexRect, axis: Axis) -> Vec<IndexRect> {
        match axis {
            Axis::X => {
                if self.param_equal(Axis::X, &rect.lo.x, &rect.hi.x) {
                    vec![*rect]
                } else {
                    let mid = DyadicIndex::midpoint(&rect.lo.x, &rect.hi.x);
                    vec![
                        IndexRect::new(rect.lo, IndexVec2::new(mid, rect.hi.y)),
                        IndexRect::new(IndexVec2::new(mid, rect.lo.y), rect.hi),
                    ]
                }
            }
            Axis::Y => {
                if self.param_equal(Axis::Y, &rect.lo.y, &rect.hi.y) {
                    vec![*rect]
                } else {
                    let mid = DyadicIndex::midpoint(&rect.lo.y, &rect.hi.y);
                    vec![
                        IndexRect::new(rect.lo, IndexVec2::new(rect.hi.x, mid)),
                        IndexRect::new(IndexVec2::new(rect.lo.x, mid), rect.hi),
                    ]
                }
            }
        }
    }

    /// Bisection direction mandated by the generation parity.
    pub fn parity_axis(gen: u32) -> Axis {
        if gen % 2 == 0 {
            Axis::X
        } else {
            Axis::Y
        }
    }

    /// Bisects one element, direction chosen by its generation parity.
    pub fn bisect_element(&mut self, rect: &IndexRect) -> Result<(), TMeshError> {
        let gen = self
            .generation(rect)
            .ok_or(TMeshError::NoSuchElement(*rect))?;
        self.apply_bisection(rect, Self::parity_axis(gen))
    }

    /// Bisects one element in an explicit direction, bypassing the parity
    /// rule (used by the alternative refinement driver).
    pub fn bisect_element_dir(&mut self, rect: &IndexRect, axis: Axis) -> Result<(), TMeshError> {
        let gen = self
            .generation(rect)
            .ok_or(TMeshError::NoSuchElement(*rect))?;
        if Self::parity_axis(gen) != axis {
            self.parity_respected = false;
        }
        self.apply_bisection(rect, axis)
    }

    fn apply_bisection(&mut self, rect: &IndexRect, axis: Axis) -> Result<(), TMeshError> {
        let gen = self
            .generation(rect)
            .ok_or(TMeshError::NoSuchElement(*rect))?;
        let children = self.bisection_children(rect, axis);
        self.history.push(Bisection {
            parent: *rect,
            direction: axis,
            generation: gen + 1,
        });
        self.remove_element(rect);
        for child in children {
            self.insert_element(child, gen + 1);
        }
        Ok(())
    }

    /// Recursively bisects every strictly coarser neighbor first, then
    /// bisects `rect`. The resulting mesh is admissible when the input was.
    pub fn refine_admissible(&mut self, rect: &IndexRect) -> Result<(), TMeshError> {
        self.refine_admissible_depth(rect, 0)
    }

    fn refine_admissible_depth(&mut self, rect: &IndexRect, depth: u32) -> Result<(), TMeshError> {
        let gen = self
            .generation(rect)
            .ok_or(TMeshError::NoSuchElement(*rect))?;
        // Each recursion level strictly decreases the generation, so the
        // depth can never exceed the representable generation range.
        if depth > 2 * crate::dyadic::MAX_EXPONENT + 4 {
            return Err(TMeshError::ClosureDepthExceeded(*rect));
        }
        loop {
            let coarser: Vec<IndexRect> = self
                .neighborhood(rect)
                .into_iter()
                .filter(|r| self.generation(r).expect("neighbor in mesh") < gen)
                .collect();
            if coarser.is_empty() {
                break;
            }
            for neighbor in coarser {
                // the neighbor may have been refined by an earlier sibling
                if self.contains(&neighbor) {
                    self.refine_admissible_depth(&neighbor, depth + 1)?;
                }
            }
        }
        self.bisect_element(rect)
    }

    /// Replays the generation-sorted history and reports every bisection
    /// whose neighborhood contained a strictly coarser element at bisection
    /// time (plus any bisection that broke the parity rule).
    pub fn check_admissible(&self) -> (bool, Vec<AdmissibilityViolation>) {
        let mut violations = Vec::new();
        let mut replay = TMesh::initial(self.degree, self.n).expect("valid parameters");
        let ordered = if self.parity_respected {
            self.history_by_generation()
        } else {
            self.history.clone()
        };
        for (step, bis) in ordered.iter().enumerate() {
            let gen = match replay.generation(&bis.parent) {
                Some(g) => g,
                None => {
                    violations.push(AdmissibilityViolation {
                        step,
                        bisection: bis.clone(),
                        coarser_neighbor: bis.parent,
                        neighbor_generation: 0,
                    });
                    continue;
                }
            };
            let admissible_dir = TMesh::parity_axis(gen) == bis.direction;
            for neighbor in replay.neighborhood(&bis.parent) {
                let ng = replay.generation(&neighbor).unwrap();
                if ng < gen || !admissible_dir {
                    violations.push(AdmissibilityViolation {
                        step,
                        bisection: bis.clone(),
                        coarser_neighbor: neighbor,
                        neighbor_generation: ng,
                    });
                    if !admissible_dir {
                        break;
                    }
                }
            }
            replay
                .apply_bisection(&bis.parent, bis.direction)
                .expect("replay parent exists");
        }
        (violations.is_empty(), violations)
    }

    /// Max over elements and their neighborhoods of `g(tau) - g(tau')`.
    /// Admissible meshes stay at or below one.
    pub fn generation_gap_audit(&self) -> i64 {
        let mut max_gap = 0i64;
        for (rect, gen) in self.elements.clone() {
            for neighbor in self.neighborhood(&rect) {
                let ng = self.elements[&neighbor];
                max_gap = max_gap.max(gen as i64 - ng as i64);
            }
        }
        max_gap
    }

    pub fn to_json(&self) -> String {
        let doc = MeshDocument {
            version: 1,
            degree: self.degree,
            n: self.n,
            history: if self.parity_respected {
                self.history_by_generation()
            } else {
                self.history.clone()
            },
        };
        serde_json::to_string_pretty(&doc).expect("mesh serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, TMeshError> {
        let doc: MeshDocument =
            serde_json::from_str(text).map_err(|e| TMeshError::Deserialize(e.to_string()))?;
        if doc.version != 1 {
            return Err(TMeshError::Deserialize(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        let mut mesh = TMesh::initial(doc.degree, doc.n)?;
        for bis in &doc.history {
            mesh.bisect_element_dir(&bis.parent, bis.direction)
                .map_err(|e| TMeshError::Deserialize(e.to_string()))?;
        }
        Ok(mesh)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dy(num: i64, exp: u32) -> DyadicIndex {
        DyadicIndex::new(num, exp)
    }

    #[test]
    fn initial_mesh_element_counts() {
        let mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
        assert_eq!(mesh.num_elements(), 81);
        let mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        assert_eq!(mesh.num_elements(), 121);
        assert!(TMesh::initial((3, 3), (3, 3)).is_err());
    }

    #[test]
    fn initial_mesh_tiles_domain() {
        let mesh = TMesh::initial((2, 3), (7, 8)).unwrap();
        let (m1, m2) = mesh.extents();
        // exact area in quarter units of the coarsest representable cell
        let total: f64 = mesh
            .elements()
            .map(|(r, _)| r.width().to_f64() * r.height().to_f64())
            .sum();
        assert_eq!(total, (m1 * m2) as f64);
    }

    #[test]
    fn bisection_alternates_by_parity() {
        let mut mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
        let e = IndexRect::from_integers(4, 4, 5, 5);
        mesh.bisect_element(&e).unwrap();
        // vertical split first
        let left = IndexRect::new(
            IndexVec2::new(dy(4, 0), dy(4, 0)),
            IndexVec2::new(dy(9, 1), dy(5, 0)),
        );
        assert_eq!(mesh.generation(&left), Some(1));
        // second-generation split is horizontal
        mesh.bisect_element(&left).unwrap();
        let bottom = IndexRect::new(
            IndexVec2::new(dy(4, 0), dy(4, 0)),
            IndexVec2::new(dy(9, 1), dy(9, 1)),
        );
        assert_eq!(mesh.generation(&bottom), Some(2));
    }

    #[test]
    fn zero_length_frame_cell_keeps_rect_and_increments_generation() {
        let mut mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
        // cell [0,1] x [4,5] has zero parametric width (indices <= p = 2)
        let frame = IndexRect::from_integers(0, 4, 1, 5);
        mesh.bisect_element(&frame).unwrap();
        assert_eq!(mesh.generation(&frame), Some(1));
        assert_eq!(mesh.num_elements(), 81);
    }

    #[test]
    fn neighborhood_radius_matches_parity_formula() {
        assert_eq!(
            neighborhood_radius((3, 3), 0),
            (dy(3, 1), dy(5, 1)) // (1.5, 2.5)
        );
        assert_eq!(
            neighborhood_radius((3, 3), 1),
            (dy(5, 2), dy(3, 1)) // 2^-1 * (2.5, 3)
        );
        assert_eq!(
            neighborhood_radius((2, 2), 0),
            (dy(3, 1), dy(3, 1)) // (1.5, 1.5)
        );
        assert_eq!(
            neighborhood_radius((2, 2), 1),
            (dy(3, 2), dy(3, 1)) // 2^-1 * (1.5, 3)
        );
    }

    #[test]
    fn neighborhood_contains_self_and_matches_brute_force() {
        let mut mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        let center = IndexRect::from_integers(5, 5, 6, 6);
        mesh.refine_admissible(&center).unwrap();
        for (rect, gen) in mesh.elements.clone() {
            let fast = mesh.neighborhood(&rect);
            assert!(fast.contains(&rect));
            let radius = neighborhood_radius(mesh.degree(), gen);
            let mut brute: Vec<IndexRect> = mesh
                .elements()
                .filter(|(r, _)| {
                    let d = mesh.element_dist(&rect, r);
                    d.0 <= radius.0 && d.1 <= radius.1
                })
                .map(|(r, _)| *r)
                .collect();
            brute.sort();
            assert_eq!(fast, brute, "neighborhood mismatch at {rect:?}");
        }
    }

    #[test]
    fn interior_neighborhood_block() {
        // p = (3,3), generation 0: radius (1.5, 2.5) selects a 3 x 5 block of
        // unit cells around an element far enough from the frame.
        let mesh = TMesh::initial((3, 3), (12, 12)).unwrap();
        let center = IndexRect::from_integers(7, 7, 8, 8);
        let hood = mesh.neighborhood(&center);
        assert_eq!(hood.len(), 15);
        // near the frame the translated distance pulls frame cells in
        let mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        let center = IndexRect::from_integers(5, 5, 6, 6);
        assert!(mesh.neighborhood(&center).len() > 15);
    }

    #[test]
    fn refine_admissible_on_uniform_mesh_bisects_only_target() {
        let mut mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
        let e = IndexRect::from_integers(4, 4, 5, 5);
        mesh.refine_admissible(&e).unwrap();
        assert_eq!(mesh.history().len(), 1);
        assert!(mesh.check_admissible().0);
    }

    #[test]
    fn closure_refines_coarser_neighbors_first() {
        let mut mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        let e = IndexRect::from_integers(5, 5, 6, 6);
        // drive one element up several generations; closure must grade around it
        for _ in 0..4 {
            // find the current descendant of e's lower-left corner
            let target = *mesh
                .elements()
                .map(|(r, _)| r)
                .find(|r| r.contains_point(&IndexVec2::new(dy(21, 2), dy(21, 2))))
                .unwrap();
            mesh.refine_admissible(&target).unwrap();
        }
        assert!(mesh.history().len() > 4, "closure must have bisected neighbors");
        let (ok, violations) = mesh.check_admissible();
        assert!(ok, "violations: {violations:?}");
        assert!(mesh.generation_gap_audit() <= 1);
        let _ = e;
    }

    #[test]
    fn raw_double_bisection_without_closure_is_flagged() {
        let mut mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        let e = IndexRect::from_integers(5, 5, 6, 6);
        mesh.bisect_element(&e).unwrap();
        let child = IndexRect::new(
            IndexVec2::new(dy(5, 0), dy(5, 0)),
            IndexVec2::new(dy(11, 1), dy(6, 0)),
        );
        mesh.bisect_element(&child).unwrap();
        let (ok, violations) = mesh.check_admissible();
        assert!(!ok);
        assert!(!violations.is_empty());
        assert!(mesh.generation_gap_audit() >= 2);
    }

    #[test]
    fn generation_widths_follow_parity() {
        let mut mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
        let mut target = IndexRect::from_integers(4, 4, 5, 5);
        for step in 0..4 {
            mesh.refine_admissible(&target).unwrap();
            // follow the lower-left child
            target = *mesh
                .elements()
                .map(|(r, _)| r)
                .find(|r| {
                    r.lo == IndexVec2::new(dy(4, 0), dy(4, 0))
                })
                .unwrap();
            let g = mesh.generation(&target).unwrap();
            assert_eq!(g, step + 1);
            let expected_w = dy(1, g.div_ceil(2));
            let expected_h = dy(1, g / 2);
            assert_eq!(target.width(), expected_w);
            assert_eq!(target.height(), expected_h);
        }
    }

    #[test]
    fn tiling_preserved_under_refinement() {
        let mut mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
        mesh.refine_admissible(&IndexRect::from_integers(2, 2, 3, 3)).unwrap();
        mesh.refine_admissible(&IndexRect::from_integers(6, 6, 7, 7)).unwrap();
        let total: f64 = mesh
            .elements()
            .map(|(r, _)| r.width().to_f64() * r.height().to_f64())
            .sum();
        assert_eq!(total, 81.0);
        // pairwise disjoint interiors
        let rects: Vec<IndexRect> = mesh.elements().map(|(r, _)| *r).collect();
        for (i, a) in rects.iter().enumerate() {
            for b in rects.iter().skip(i + 1) {
                assert!(!a.interior_intersects(b), "{a:?} overlaps {b:?}");
            }
        }
    }

    #[test]
    fn serialization_round_trips_exactly() {
        let mut mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        mesh.refine_admissible(&IndexRect::from_integers(4, 4, 5, 5)).unwrap();
        let child = IndexRect::new(
            IndexVec2::new(dy(4, 0), dy(4, 0)),
            IndexVec2::new(dy(9, 1), dy(5, 0)),
        );
        mesh.refine_admissible(&child).unwrap();
        let json = mesh.to_json();
        let back = TMesh::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        let a: Vec<_> = mesh.elements().map(|(r, g)| (*r, g)).collect();
        let b: Vec<_> = back.elements().map(|(r, g)| (*r, g)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_call_sequences_are_byte_identical() {
        let build = || {
            let mut mesh = TMesh::initial((2, 2), (7, 7)).unwrap();
            mesh.refine_admissible(&IndexRect::from_integers(3, 3, 4, 4)).unwrap();
            let child = IndexRect::new(
                IndexVec2::new(dy(3, 0), dy(3, 0)),
                IndexVec2::new(dy(7, 1), dy(4, 0)),
            );
            mesh.refine_admissible(&child).unwrap();
            mesh.to_json()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn sorted_history_replay_reproduces_mesh() {
        let mut mesh = TMesh::initial((3, 3), (8, 8)).unwrap();
        for _ in 0..3 {
            let target = *mesh
                .elements()
                .map(|(r, _)| r)
                .find(|r| r.contains_point(&IndexVec2::new(dy(7, 1), dy(7, 1))))
                .unwrap();
            mesh.refine_admissible(&target).unwrap();
        }
        let mut replay = TMesh::initial((3, 3), (8, 8)).unwrap();
        for bis in mesh.history_by_generation() {
            replay.bisect_element_dir(&bis.parent, bis.direction).unwrap();
        }
        let a: Vec<_> = mesh.elements().map(|(r, g)| (*r, g)).collect();
        let b: Vec<_> = replay.elements().map(|(r, g)| (*r, g)).collect();
        assert_eq!(a, b);
    }
}
