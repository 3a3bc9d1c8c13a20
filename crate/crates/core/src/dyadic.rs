//! Exact arithmetic for dyadic rational index coordinates.
//!
//! All mesh combinatorics (containment, adjacency, neighborhood distances)
//! are evaluated on numbers of the form `num / 2^exp`, so no floating point
//! ever enters mesh predicates. Canonical form: the numerator is odd or the
//! exponent is zero.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Exponents above this are a hard error; they indicate runaway refinement.
pub const MAX_EXPONENT: u32 = 62;

/// A non-negative dyadic rational `num / 2^exp` in canonical form.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicIndex {
    num: i64,
    exp: u32,
}

impl DyadicIndex {
    /// Canonicalizes on construction. Panics on negative values or exponent
    /// overflow: both indicate a logic error upstream, not a recoverable
    /// condition.
    pub fn new(num: i64, exp: u32) -> Self {
        assert!(num >= 0, "dyadic index must be non-negative, got {num}/2^{exp}");
        assert!(exp <= MAX_EXPONENT, "dyadic exponent {exp} exceeds cap {MAX_EXPONENT}");
        let mut d = DyadicIndex { num, exp };
        d.canonicalize();
        d
    }

    pub fn from_integer(k: i64) -> Self {
        Self::new(k, 0)
    }

    pub fn zero() -> Self {
        DyadicIndex { num: 0, exp: 0 }
    }

    fn canonicalize(&mut self) {
        while self.exp > 0 && self.num % 2 == 0 {
            self.num /= 2;
            self.exp -= 1;
        }
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    /// Numerator after rescaling to denominator `2^exp`. Panics if `exp` is
    /// too coarse to represent the value.
    pub fn scaled_numerator(&self, exp: u32) -> i64 {
        assert!(exp >= self.exp, "cannot rescale {self:?} to coarser exponent {exp}");
        assert!(exp <= MAX_EXPONENT);
        self.num << (exp - self.exp)
    }

    pub fn is_integer(&self) -> bool {
        self.exp == 0
    }

    pub fn floor(&self) -> i64 {
        self.num >> self.exp
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / (1u64 << self.exp) as f64
    }

    pub fn add(&self, other: &DyadicIndex) -> DyadicIndex {
        let exp = self.exp.max(other.exp);
        DyadicIndex::new(self.scaled_numerator(exp) + other.scaled_numerator(exp), exp)
    }

    /// Componentwise absolute difference; exact.
    pub fn abs_diff(&self, other: &DyadicIndex) -> DyadicIndex {
        let exp = self.exp.max(other.exp);
        DyadicIndex::new((self.scaled_numerator(exp) - other.scaled_numerator(exp)).abs(), exp)
    }

    /// Exact mean `(a + b) / 2` in canonical form.
    pub fn midpoint(a: &DyadicIndex, b: &DyadicIndex) -> DyadicIndex {
        let exp = a.exp.max(b.exp);
        DyadicIndex::new(a.scaled_numerator(exp) + b.scaled_numerator(exp), exp + 1)
    }

    /// Exact halving.
    pub fn half(&self) -> DyadicIndex {
        DyadicIndex::new(self.num, self.exp + 1)
    }

    pub fn clamp_to(&self, lo: i64, hi: i64) -> DyadicIndex {
        if *self < DyadicIndex::from_integer(lo) {
            DyadicIndex::from_integer(lo)
        } else if *self > DyadicIndex::from_integer(hi) {
            DyadicIndex::from_integer(hi)
        } else {
            *self
        }
    }
}

impl PartialOrd for DyadicIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DyadicIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let exp = self.exp.max(other.exp);
        self.scaled_numerator(exp).cmp(&other.scaled_numerator(exp))
    }
}

impl fmt::Debug for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, 1u64 << self.exp)
        }
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<i64> for DyadicIndex {
    fn from(k: i64) -> Self {
        DyadicIndex::from_integer(k)
    }
}

/// A point in the index domain.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexVec2 {
    pub x: DyadicIndex,
    pub y: DyadicIndex,
}

impl IndexVec2 {
    pub fn new(x: DyadicIndex, y: DyadicIndex) -> Self {
        IndexVec2 { x, y }
    }

    /// Componentwise absolute differences, exact in dyadic arithmetic.
    pub fn componentwise_dist(&self, other: &IndexVec2) -> (DyadicIndex, DyadicIndex) {
        (self.x.abs_diff(&other.x), self.y.abs_diff(&other.y))
    }

    /// Clamps each coordinate into `[p_d, n_d]`: points in the frame region
    /// are measured from the boundary of the non-empty parametric region.
    pub fn translate(&self, p: (i64, i64), n: (i64, i64)) -> IndexVec2 {
        IndexVec2 {
            x: self.x.clamp_to(p.0, n.0),
            y: self.y.clamp_to(p.1, n.1),
        }
    }
}

/// An axis-aligned rectangle in the index domain with dyadic corners.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexRect {
    pub lo: IndexVec2,
    pub hi: IndexVec2,
}

impl IndexRect {
    pub fn new(lo: IndexVec2, hi: IndexVec2) -> Self {
        assert!(lo.x <= hi.x && lo.y <= hi.y, "index rect must have lo <= hi");
        IndexRect { lo, hi }
    }

    pub fn from_integers(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        IndexRect::new(
            IndexVec2::new(x0.into(), y0.into()),
            IndexVec2::new(x1.into(), y1.into()),
        )
    }

    pub fn midpoint(&self) -> IndexVec2 {
        IndexVec2 {
            x: DyadicIndex::midpoint(&self.lo.x, &self.hi.x),
            y: DyadicIndex::midpoint(&self.lo.y, &self.hi.y),
        }
    }

    pub fn width(&self) -> DyadicIndex {
        self.hi.x.abs_diff(&self.lo.x)
    }

    pub fn height(&self) -> DyadicIndex {
        self.hi.y.abs_diff(&self.lo.y)
    }

    /// Closed containment of a point.
    pub fn contains_point(&self, p: &IndexVec2) -> bool {
        self.lo.x <= p.x && p.x <= self.hi.x && self.lo.y <= p.y && p.y <= self.hi.y
    }

    /// Closed containment of another rectangle.
    pub fn contains_rect(&self, r: &IndexRect) -> bool {
        self.lo.x <= r.lo.x && r.hi.x <= self.hi.x && self.lo.y <= r.lo.y && r.hi.y <= self.hi.y
    }

    /// True when the open interiors intersect.
    pub fn interior_intersects(&self, r: &IndexRect) -> bool {
        self.lo.x < r.hi.x && r.lo.x < self.hi.x && self.lo.y < r.hi.y && r.lo.y < self.hi.y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dy(num: i64, exp: u32) -> DyadicIndex {
        DyadicIndex::new(num, exp)
    }

    #[test]
    fn canonical_form() {
        assert_eq!(dy(6, 1), dy(3, 0));
        assert_eq!(dy(4, 2), dy(1, 0));
        assert_eq!(dy(0, 5), dy(0, 0));
        let d = dy(5, 4);
        assert_eq!(d.numerator(), 5);
        assert_eq!(d.exponent(), 4);
    }

    #[test]
    fn midpoint_examples() {
        // (3, 4) -> 7/2
        assert_eq!(
            DyadicIndex::midpoint(&dy(3, 0), &dy(4, 0)),
            dy(7, 1)
        );
        // (1/2, 1/2) -> 1/2
        assert_eq!(
            DyadicIndex::midpoint(&dy(1, 1), &dy(1, 1)),
            dy(1, 1)
        );
        // (5/4, 7/4) -> 3/2
        assert_eq!(
            DyadicIndex::midpoint(&dy(5, 2), &dy(7, 2)),
            dy(3, 1)
        );
    }

    #[test]
    fn componentwise_dist_examples() {
        let a = IndexVec2::new(dy(1, 0), dy(2, 0));
        let b = IndexVec2::new(dy(3, 0), dy(5, 0));
        assert_eq!(a.componentwise_dist(&b), (dy(2, 0), dy(3, 0)));
        assert_eq!(a.componentwise_dist(&a), (dy(0, 0), dy(0, 0)));

        let c = IndexVec2::new(dy(7, 1), dy(1, 0));
        let d = IndexVec2::new(dy(2, 0), dy(5, 1));
        assert_eq!(c.componentwise_dist(&d), (dy(3, 1), dy(3, 1)));
    }

    #[test]
    fn translate_point_examples() {
        let p = (3, 8);
        let t = IndexVec2::new(dy(1, 0), dy(5, 0)).translate((3, 3), (8, 8));
        assert_eq!(t, IndexVec2::new(dy(3, 0), dy(5, 0)));

        let t = IndexVec2::new(dy(4, 0), dy(4, 0)).translate((3, 3), (8, 8));
        assert_eq!(t, IndexVec2::new(dy(4, 0), dy(4, 0)));

        let t = IndexVec2::new(dy(9, 0), dy(2, 0)).translate((2, 2), (8, 8));
        assert_eq!(t, IndexVec2::new(dy(8, 0), dy(2, 0)));
        let _ = p;
    }

    #[test]
    #[should_panic]
    fn exponent_cap_is_hard_error() {
        let _ = dy(1, 63);
    }

    #[test]
    fn exhaustive_comparison_level_6() {
        // All values k/2^6 in [0, 4]; comparison must agree with exact integer
        // comparison of scaled numerators and have no ties between distinct values.
        let vals: Vec<DyadicIndex> = (0..=(4 << 6)).map(|k| dy(k, 6)).collect();
        for (i, a) in vals.iter().enumerate() {
            for (j, b) in vals.iter().enumerate() {
                assert_eq!(a.cmp(b), i.cmp(&j));
            }
        }
    }

    proptest! {
        #[test]
        fn canonicalization_idempotent(num in 0i64..1_000_000, exp in 0u32..40) {
            let d = dy(num, exp);
            let again = dy(d.numerator(), d.exponent());
            prop_assert_eq!(d, again);
        }

        #[test]
        fn midpoint_symmetric_and_between(a_num in 0i64..10_000, a_exp in 0u32..20,
                                          b_num in 0i64..10_000, b_exp in 0u32..20) {
            let a = dy(a_num, a_exp);
            let b = dy(b_num, b_exp);
            let m = DyadicIndex::midpoint(&a, &b);
            prop_assert_eq!(m, DyadicIndex::midpoint(&b, &a));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(lo <= m && m <= hi);
        }

        #[test]
        fn add_then_diff_roundtrip(a_num in 0i64..10_000, a_exp in 0u32..20,
                                   b_num in 0i64..10_000, b_exp in 0u32..20) {
            let a = dy(a_num, a_exp);
            let b = dy(b_num, b_exp);
            prop_assert_eq!(a.add(&b).abs_diff(&b), a);
        }
    }
}
