//! The mesh skeleton: merged maximal vertical/horizontal segments plus the
//! vertex set, with the ray-hit queries used to trace index vectors and
//! T-junction extensions. Bisections only ever add edges, so the skeleton
//! updates incrementally.

use crate::dyadic::{DyadicIndex, IndexVec2};
use crate::tmesh::{Axis, TMesh};
use std::collections::{BTreeMap, BTreeSet};

type Interval = (DyadicIndex, DyadicIndex);

/// Sorted, pairwise-disjoint, maximal closed intervals.
#[derive(Clone, Debug, Default)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn insert(&mut self, lo: DyadicIndex, hi: DyadicIndex) {
        debug_assert!(lo <= hi);
        let mut merged = (lo, hi);
        let mut out: Vec<Interval> = Vec::with_capacity(self.intervals.len() + 1);
        let mut placed = false;
        for &(a, b) in &self.intervals {
            if b < merged.0 {
                out.push((a, b));
            } else if merged.1 < a {
                if !placed {
                    out.push(merged);
                    placed = true;
                }
                out.push((a, b));
            } else {
                merged.0 = merged.0.min(a);
                merged.1 = merged.1.max(b);
            }
        }
        if !placed {
            out.push(merged);
        }
        self.intervals = out;
    }

    pub fn contains(&self, v: &DyadicIndex) -> bool {
        self.intervals
            .binary_search_by(|&(a, b)| {
                if b < *v {
                    std::cmp::Ordering::Less
                } else if *v < a {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }

    /// True when some interval contains `v` and extends strictly beyond it.
    pub fn extends_above(&self, v: &DyadicIndex) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= *v && *v < b)
    }

    pub fn extends_below(&self, v: &DyadicIndex) -> bool {
        self.intervals.iter().any(|&(a, b)| a < *v && *v <= b)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter()
    }
}

/// Union of all mesh edges, organized for exact ray queries.
#[derive(Clone, Debug, Default)]
pub struct Skeleton {
    /// Vertical lines: x -> closed y-intervals.
    vertical: BTreeMap<DyadicIndex, IntervalSet>,
    /// Horizontal lines: y -> closed x-intervals.
    horizontal: BTreeMap<DyadicIndex, IntervalSet>,
    vertices: BTreeSet<IndexVec2>,
}

impl Skeleton {
    pub fn from_mesh(mesh: &TMesh) -> Self {
        let mut sk = Skeleton::default();
        for (rect, _) in mesh.elements() {
            sk.add_segment(Axis::X, rect.lo.x, rect.lo.y, rect.hi.y);
            sk.add_segment(Axis::X, rect.hi.x, rect.lo.y, rect.hi.y);
            sk.add_segment(Axis::Y, rect.lo.y, rect.lo.x, rect.hi.x);
            sk.add_segment(Axis::Y, rect.hi.y, rect.lo.x, rect.hi.x);
            sk.vertices.insert(rect.lo);
            sk.vertices.insert(rect.hi);
            sk.vertices.insert(IndexVec2::new(rect.lo.x, rect.hi.y));
            sk.vertices.insert(IndexVec2::new(rect.hi.x, rect.lo.y));
        }
        sk
    }

    /// Adds one segment. For `Axis::X` the segment is vertical at `fixed = x`
    /// spanning `[lo, hi]` in y, and vice versa.
    pub fn add_segment(&mut self, axis: Axis, fixed: DyadicIndex, lo: DyadicIndex, hi: DyadicIndex) {
        let map = match axis {
            Axis::X => &mut self.vertical,
            Axis::Y => &mut self.horizontal,
        };
        map.entry(fixed).or_default().insert(lo, hi);
    }

    pub fn add_vertex(&mut self, v: IndexVec2) {
        self.vertices.insert(v);
    }

    pub fn vertices(&self) -> impl Iterator<Item = &IndexVec2> {
        self.vertices.iter()
    }

    /// Vertices inside a closed window rectangle.
    pub fn vertices_in(&self, window: &crate::dyadic::IndexRect) -> Vec<IndexVec2> {
        let lo = IndexVec2::new(window.lo.x, DyadicIndex::zero());
        self.vertices
            .range(lo..)
            .take_while(|v| v.x <= window.hi.x)
            .filter(|v| window.lo.y <= v.y && v.y <= window.hi.y)
            .copied()
            .collect()
    }

    /// Applies the skeleton update of bisecting `parent` along `axis`.
    /// Zero-parametric-length bisections add no edge; the caller passes
    /// `split = false` for those.
    pub fn apply_bisection(&mut self, parent: &crate::dyadic::IndexRect, axis: Axis, split: bool) {
        if !split {
            return;
        }
        match axis {
            Axis::X => {
                let mid = DyadicIndex::midpoint(&parent.lo.x, &parent.hi.x);
                self.add_segment(Axis::X, mid, parent.lo.y, parent.hi.y);
                self.add_vertex(IndexVec2::new(mid, parent.lo.y));
                self.add_vertex(IndexVec2::new(mid, parent.hi.y));
            }
            Axis::Y => {
                let mid = DyadicIndex::midpoint(&parent.lo.y, &parent.hi.y);
                self.add_segment(Axis::Y, mid, parent.lo.x, parent.hi.x);
                self.add_vertex(IndexVec2::new(parent.lo.x, mid));
                self.add_vertex(IndexVec2::new(parent.hi.x, mid));
            }
        }
    }

    pub fn is_vertex(&self, v: &IndexVec2) -> bool {
        self.vertices.contains(v)
    }

    pub fn vertical_lines(&self) -> impl Iterator<Item = (&DyadicIndex, &IntervalSet)> {
        self.vertical.iter()
    }

    pub fn horizontal_lines(&self) -> impl Iterator<Item = (&DyadicIndex, &IntervalSet)> {
        self.horizontal.iter()
    }

    /// Does the point lie on any vertical edge (closed)?
    pub fn on_vertical(&self, x: &DyadicIndex, y: &DyadicIndex) -> bool {
        self.vertical.get(x).is_some_and(|set| set.contains(y))
    }

    pub fn on_horizontal(&self, x: &DyadicIndex, y: &DyadicIndex) -> bool {
        self.horizontal.get(y).is_some_and(|set| set.contains(x))
    }

    /// Nearest distinct positions where the horizontal line at height `y`
    /// meets the vertical skeleton, walking left or right from `from`.
    /// `inclusive` keeps a hit exactly at `from`.
    pub fn vertical_hits(
        &self,
        y: &DyadicIndex,
        from: &DyadicIndex,
        count: usize,
        leftward: bool,
        inclusive: bool,
    ) -> Vec<DyadicIndex> {
        let mut out = Vec::with_capacity(count);
        if leftward {
            for (x, set) in self.vertical.range(..=*from).rev() {
                if !inclusive && x == from {
                    continue;
                }
                if set.contains(y) {
                    out.push(*x);
                    if out.len() == count {
                        break;
                    }
                }
            }
            out.reverse();
        } else {
            for (x, set) in self.vertical.range(*from..) {
                if !inclusive && x == from {
                    continue;
                }
                if set.contains(y) {
                    out.push(*x);
                    if out.len() == count {
                        break;
                    }
                }
            }
        }
        out
    }

    /// Vertical-ray counterpart of [`Skeleton::vertical_hits`].
    pub fn horizontal_hits(
        &self,
        x: &DyadicIndex,
        from: &DyadicIndex,
        count: usize,
        downward: bool,
        inclusive: bool,
    ) -> Vec<DyadicIndex> {
        let mut out = Vec::with_capacity(count);
        if downward {
            for (y, set) in self.horizontal.range(..=*from).rev() {
                if !inclusive && y == from {
                    continue;
                }
                if set.contains(x) {
                    out.push(*y);
                    if out.len() == count {
                        break;
                    }
                }
            }
            out.reverse();
        } else {
            for (y, set) in self.horizontal.range(*from..) {
                if !inclusive && y == from {
                    continue;
                }
                if set.contains(x) {
                    out.push(*y);
                    if out.len() == count {
                        break;
                    }
                }
            }
        }
        out
    }

    /// Edge directions present at a vertex: (left, right, down, up).
    pub fn directions_at(&self, v: &IndexVec2) -> (bool, bool, bool, bool) {
        let left = self
            .horizontal
            .get(&v.y)
            .is_some_and(|set| set.extends_below(&v.x));
        let right = self
            .horizontal
            .get(&v.y)
            .is_some_and(|set| set.extends_above(&v.x));
        let down = self
            .vertical
            .get(&v.x)
            .is_some_and(|set| set.extends_below(&v.y));
        let up = self
            .vertical
            .get(&v.x)
            .is_some_and(|set| set.extends_above(&v.y));
        (left, right, down, up)
    }
}
