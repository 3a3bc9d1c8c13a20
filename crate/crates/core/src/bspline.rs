//! Univariate B-spline machinery: Cox–de Boor evaluation, derivatives, knot
//! insertion, and de Boor–Fix dual functionals.
//!
//! These are the tensor factors of every T-spline blending function. Knot
//! values entering any equality test must be produced by a single generator
//! (see `tspline::KnotLine`), so `f64` comparison is exact by construction.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum BsplineError {
    #[error("knot vector is not {0}-open: first/last knot must repeat {1} times")]
    NotOpen(usize, usize),
    #[error("knots must be non-decreasing")]
    NotSorted,
    #[error("internal knots must be strictly increasing")]
    RepeatedInternalKnot,
    #[error("local knot vector needs exactly {expected} knots for degree {degree}, got {got}")]
    LocalLength { degree: usize, expected: usize, got: usize },
    #[error("knot vectors are not nested: {0} is missing from the fine vector")]
    NotNested(f64),
    #[error("dual functional is undefined on a zero-length support")]
    ZeroSupport,
}

/// A `p`-open global knot vector on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl KnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self, BsplineError> {
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(BsplineError::NotOpen(p, p + 1));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(BsplineError::NotSorted);
        }
        let first = knots[0];
        let last = *knots.last().unwrap();
        if knots[..=p].iter().any(|&k| k != first) || knots[knots.len() - p - 1..].iter().any(|&k| k != last) {
            return Err(BsplineError::NotOpen(p, p + 1));
        }
        // Internal knots strictly increasing.
        let n = knots.len() - p - 1;
        if knots[p..=n].windows(2).any(|w| w[0] >= w[1]) {
            return Err(BsplineError::RepeatedInternalKnot);
        }
        Ok(KnotVector { knots, degree })
    }

    /// Open knot vector with `n` basis functions and equally spaced internal
    /// knots on `[0, 1]`.
    pub fn uniform_open(degree: usize, n: usize) -> Self {
        let p = degree;
        assert!(n >= p + 1, "need at least p+1 basis functions for an open vector");
        let spans = (n - p) as f64;
        let mut knots = vec![0.0; p];
        knots.extend((0..=(n - p)).map(|k| k as f64 / spans));
        knots.extend(std::iter::repeat(1.0).take(p));
        KnotVector { knots, degree }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Local knot vector of basis function `i`.
    pub fn local(&self, i: usize) -> LocalKnotVector {
        LocalKnotVector::new(self.knots[i..=i + self.degree + 1].to_vec(), self.degree).unwrap()
    }

    /// Knot span index `mu` with `knots[mu] <= x < knots[mu+1]`, using the
    /// left-limit convention at the right end of the domain.
    pub fn span(&self, x: f64) -> usize {
        let p = self.degree;
        let n = self.num_basis();
        if x >= self.knots[n] {
            return n - 1;
        }
        // binary search in knots[p..=n]
        let mut lo = p;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Values of all basis functions not vanishing at `x`: returns the index
    /// of the first one and the `p+1` values. They sum to one.
    pub fn eval_all_nonzero(&self, x: f64) -> (usize, Vec<f64>) {
        let p = self.degree;
        let mu = self.span(x);
        let mut values = vec![0.0; p + 1];
        values[0] = 1.0;
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        for k in 1..=p {
            left[k] = x - self.knots[mu + 1 - k];
            right[k] = self.knots[mu + k] - x;
            let mut saved = 0.0;
            for r in 0..k {
                let tmp = values[r] / (right[r + 1] + left[k - r]);
                values[r] = saved + right[r + 1] * tmp;
                saved = left[k - r] * tmp;
            }
            values[k] = saved;
        }
        (mu - p, values)
    }
}

/// The `p+2` knots defining a single B-spline.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalKnotVector {
    knots: Vec<f64>,
    degree: usize,
}

impl LocalKnotVector {
    pub fn new(knots: Vec<f64>, degree: usize) -> Result<Self, BsplineError> {
        if knots.len() != degree + 2 {
            return Err(BsplineError::LocalLength {
                degree,
                expected: degree + 2,
                got: knots.len(),
            });
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(BsplineError::NotSorted);
        }
        Ok(LocalKnotVector { knots, degree })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Span index `s` such that the polynomial piece on `[t_s, t_{s+1})`
    /// is the one evaluated at `x`; at the right end of the support the piece
    /// to the left is used.
    fn piece(&self, x: f64) -> Option<usize> {
        let t = &self.knots;
        let last = *t.last().unwrap();
        if x < t[0] || x > last {
            return None;
        }
        if x == last {
            // left limit: last non-empty span
            return (0..=self.degree).rev().find(|&j| t[j] < t[j + 1]);
        }
        (0..=self.degree).find(|&j| t[j] <= x && x < t[j + 1])
    }

    /// Value of the single B-spline; exactly zero outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        let Some(s) = self.piece(x) else { return 0.0 };
        let p = self.degree;
        let t = &self.knots;
        // Triangular de Boor scheme seeded on span s.
        let mut nv = vec![0.0; p + 1];
        nv[s] = 1.0;
        for k in 1..=p {
            for j in 0..=(p - k) {
                let a = if t[j + k] > t[j] { (x - t[j]) / (t[j + k] - t[j]) } else { 0.0 };
                let b = if t[j + k + 1] > t[j + 1] {
                    (t[j + k + 1] - x) / (t[j + k + 1] - t[j + 1])
                } else {
                    0.0
                };
                nv[j] = a * nv[j] + b * nv[j + 1];
            }
        }
        nv[0]
    }

    /// Derivative of any order; orders above the degree return zero.
    /// At a knot, the one-sided limit from the right is taken (from the left
    /// at the right end of the support).
    pub fn eval_derivative(&self, x: f64, order: usize) -> f64 {
        if order == 0 {
            return self.eval(x);
        }
        if order > self.degree {
            return 0.0;
        }
        let p = self.degree;
        let t = &self.knots;
        // d/dx B[t_0..t_{p+1}] = p * ( B[t_0..t_p]/(t_p - t_0) - B[t_1..t_{p+1}]/(t_{p+1} - t_1) )
        let mut result = 0.0;
        if t[p] > t[0] {
            let left = LocalKnotVector::new(t[..=p].to_vec(), p - 1).unwrap();
            result += left.eval_derivative(x, order - 1) / (t[p] - t[0]);
        }
        if t[p + 1] > t[1] {
            let right = LocalKnotVector::new(t[1..].to_vec(), p - 1).unwrap();
            result -= right.eval_derivative(x, order - 1) / (t[p + 1] - t[1]);
        }
        p as f64 * result
    }

    /// Value and all derivatives up to `max_order` at `x`.
    pub fn derivatives(&self, x: f64, max_order: usize) -> Vec<f64> {
        (0..=max_order).map(|r| self.eval_derivative(x, r)).collect()
    }
}

/// A function handle exposing derivatives up to a requested order at a point,
/// as needed by the de Boor–Fix dual functionals.
pub trait SmoothFn {
    /// Returns `[f(x), f'(x), ..., f^(max_order)(x)]`, one-sided from the
    /// right at breakpoints.
    fn derivatives(&self, x: f64, max_order: usize) -> Vec<f64>;
}

impl SmoothFn for LocalKnotVector {
    fn derivatives(&self, x: f64, max_order: usize) -> Vec<f64> {
        LocalKnotVector::derivatives(self, x, max_order)
    }
}

/// Constant function.
pub struct ConstFn(pub f64);

impl SmoothFn for ConstFn {
    fn derivatives(&self, _x: f64, max_order: usize) -> Vec<f64> {
        let mut d = vec![0.0; max_order + 1];
        d[0] = self.0;
        d
    }
}

/// The de Boor–Fix dual functional in precomputed form: `lambda(f) =
/// sum_r weights[r] * f^(r)(tau)`. Tensorizing two of these gives the
/// bivariate dual functionals of a dual-compatible T-spline space.
#[derive(Clone, Debug)]
pub struct DualWeights {
    pub tau: f64,
    pub weights: Vec<f64>,
}

impl DualWeights {
    pub fn apply(&self, f: &dyn SmoothFn) -> f64 {
        let fd = f.derivatives(self.tau, self.weights.len() - 1);
        self.weights.iter().zip(&fd).map(|(w, d)| w * d).sum()
    }
}

/// Derivative weights of the de Boor–Fix functional for the B-spline on
/// `lkv`, evaluated at the midpoint of its widest knot span (which keeps
/// derivative evaluation away from breakpoints).
pub fn dual_weights(lkv: &LocalKnotVector) -> Result<DualWeights, BsplineError> {
    let p = lkv.degree();
    let t = lkv.knots();
    let (a, b) = lkv.support();
    if a == b {
        return Err(BsplineError::ZeroSupport);
    }
    // widest span midpoint
    let mut tau = 0.5 * (a + b);
    let mut best = 0.0;
    for j in 0..=p {
        let w = t[j + 1] - t[j];
        if w > best {
            best = w;
            tau = 0.5 * (t[j] + t[j + 1]);
        }
    }
    // psi(y) = prod_{j=1..p} (y - t_j), expanded in the monomial basis
    let mut psi = vec![0.0; p + 1];
    psi[0] = 1.0;
    let mut deg = 0;
    for j in 1..=p {
        // multiply by (y - t_j)
        for k in (0..=deg).rev() {
            psi[k + 1] += psi[k];
            psi[k] *= -t[j];
        }
        deg += 1;
    }
    // psi^{(m)}(tau)
    let psi_deriv = |m: usize| -> f64 {
        let mut val = 0.0;
        for (k, &c) in psi.iter().enumerate().skip(m) {
            let mut fall = 1.0;
            for i in 0..m {
                fall *= (k - i) as f64;
            }
            val += c * fall * tau.powi((k - m) as i32);
        }
        val
    };
    let mut factorial = 1.0;
    for i in 2..=p {
        factorial *= i as f64;
    }
    let mut weights = Vec::with_capacity(p + 1);
    let mut sign = 1.0;
    for r in 0..=p {
        weights.push(sign * psi_deriv(p - r) / factorial);
        sign = -sign;
    }
    Ok(DualWeights { tau, weights })
}

/// The de Boor–Fix dual functional of the B-spline on `lkv`, applied to `f`.
/// For `f` a B-spline on an overlapping local knot vector of the same global
/// line this reproduces the Kronecker property.
pub fn dual_functional(lkv: &LocalKnotVector, f: &dyn SmoothFn) -> Result<f64, BsplineError> {
    Ok(dual_weights(lkv)?.apply(f))
}

/// Sparse matrix mapping coarse spline coefficients to fine ones under knot
/// insertion: rows index the fine basis, columns the coarse basis.
#[derive(Clone, Debug)]
pub struct RefinementMatrix {
    rows: Vec<Vec<(usize, f64)>>,
    cols: usize,
}

impl RefinementMatrix {
    pub fn identity(n: usize) -> Self {
        RefinementMatrix {
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
            cols: n,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn apply(&self, coarse: &[f64]) -> Vec<f64> {
        assert_eq!(coarse.len(), self.cols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * coarse[j]).sum())
            .collect()
    }

    /// Left-composition: `self` after `first`.
    fn compose(&self, first: &RefinementMatrix) -> RefinementMatrix {
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for &(k, v) in row {
                for &(j, w) in &first.rows[k] {
                    match acc.iter_mut().find(|(jj, _)| *jj == j) {
                        Some((_, x)) => *x += v * w,
                        None => acc.push((j, v * w)),
                    }
                }
            }
            acc.sort_by_key(|&(j, _)| j);
            rows.push(acc);
        }
        RefinementMatrix { rows, cols: first.cols }
    }
}

/// Single Boehm knot-insertion step on a global vector, as a sparse matrix.
fn boehm_step(kv: &KnotVector, x: f64) -> (RefinementMatrix, KnotVector) {
    let p = kv.degree();
    let knots = kv.knots();
    let n = kv.num_basis();
    let l = kv.span(x);
    let mut rows = Vec::with_capacity(n + 1);
    for i in 0..=n {
        if i + p <= l {
            rows.push(vec![(i, 1.0)]);
        } else if i > l {
            rows.push(vec![(i - 1, 1.0)]);
        } else {
            let denom = knots[i + p] - knots[i];
            let lam = if denom > 0.0 { (x - knots[i]) / denom } else { 0.0 };
            let mut row = Vec::new();
            if 1.0 - lam != 0.0 {
                row.push((i - 1, 1.0 - lam));
            }
            if lam != 0.0 {
                row.push((i, lam));
            }
            rows.push(row);
        }
    }
    let mut new_knots = knots.to_vec();
    new_knots.insert(l + 1, x);
    let fine = KnotVector::new(new_knots, p).expect("insertion preserves validity");
    (RefinementMatrix { rows, cols: n }, fine)
}

/// Matrix `M` with `fine_coeffs = M * coarse_coeffs` representing the same
/// spline after inserting the knots of `fine` missing from `coarse`.
/// Implemented by repeated single-knot Boehm steps.
pub fn knot_insertion_matrix(
    coarse: &KnotVector,
    fine: &KnotVector,
) -> Result<RefinementMatrix, BsplineError> {
    assert_eq!(coarse.degree(), fine.degree());
    // Multiset difference fine \ coarse; exact f64 matching by construction.
    let mut missing: Vec<f64> = Vec::new();
    {
        let mut ci = coarse.knots().iter().peekable();
        for &f in fine.knots() {
            match ci.peek() {
                Some(&&c) if c == f => {
                    ci.next();
                }
                _ => missing.push(f),
            }
        }
        if ci.peek().is_some() {
            return Err(BsplineError::NotNested(**ci.peek().unwrap()));
        }
    }
    let mut matrix = RefinementMatrix::identity(coarse.num_basis());
    let mut current = coarse.clone();
    for x in missing {
        let (step, next) = boehm_step(&current, x);
        matrix = step.compose(&matrix);
        current = next;
    }
    if current.knots() != fine.knots() {
        return Err(BsplineError::NotNested(f64::NAN));
    }
    Ok(matrix)
}

/// Expansion of a single B-spline in a refined basis on the same line:
/// `B[old] = sum_i c_i B[new_i]` after inserting knot `x` into `old`.
/// Returns the two children and their coefficients (children with zero
/// coefficient are omitted).
pub fn insert_into_local(
    old: &LocalKnotVector,
    x: f64,
) -> Vec<(LocalKnotVector, f64)> {
    let p = old.degree();
    let t = old.knots();
    debug_assert!(t[0] < x && x < t[p + 1], "insertion point must be interior to the support");
    let mut merged = t.to_vec();
    let pos = merged.partition_point(|&k| k <= x);
    merged.insert(pos, x);
    let left = LocalKnotVector::new(merged[..=p + 1].to_vec(), p).unwrap();
    let right = LocalKnotVector::new(merged[1..].to_vec(), p).unwrap();
    let a = if t[p] > t[0] { ((x - t[0]) / (t[p] - t[0])).min(1.0) } else { 1.0 };
    let b = if t[p + 1] > t[1] { ((t[p + 1] - x) / (t[p + 1] - t[1])).min(1.0) } else { 1.0 };
    let mut out = Vec::new();
    if a != 0.0 {
        out.push((left, a));
    }
    if b != 0.0 {
        out.push((right, b));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: naive Cox-de Boor recursion at full depth.
    fn naive_cox_de_boor(t: &[f64], p: usize, x: f64, rightmost: f64) -> f64 {
        if p == 0 {
            let inside = if t[1] == rightmost && x == rightmost {
                t[0] < x && x <= t[1]
            } else {
                t[0] <= x && x < t[1]
            };
            return if inside { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        if t[p] > t[0] {
            v += (x - t[0]) / (t[p] - t[0]) * naive_cox_de_boor(&t[..=p], p - 1, x, rightmost);
        }
        if t[p + 1] > t[1] {
            v += (t[p + 1] - x) / (t[p + 1] - t[1]) * naive_cox_de_boor(&t[1..], p - 1, x, rightmost);
        }
        v
    }

    fn lkv(knots: &[f64], p: usize) -> LocalKnotVector {
        LocalKnotVector::new(knots.to_vec(), p).unwrap()
    }

    #[test]
    fn bernstein_value() {
        // (1-x)^2 at 0.5
        let b = lkv(&[0.0, 0.0, 0.0, 1.0], 2);
        assert_abs_diff_eq!(b.eval(0.5), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(b.eval(0.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hat_peak() {
        let b = lkv(&[0.0, 0.5, 1.0], 1);
        assert_abs_diff_eq!(b.eval(0.5), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.eval(0.25), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cubic_matches_naive_recursion() {
        let knots = [0.0, 0.25, 0.5, 0.75, 1.0];
        let b = lkv(&knots, 3);
        let expected = naive_cox_de_boor(&knots, 3, 0.5, 1.0);
        assert_abs_diff_eq!(b.eval(0.5), expected, epsilon = 1e-14);
        // a few more points, including knots
        for &x in &[0.1, 0.25, 0.3, 0.6, 0.75, 0.99, 1.0] {
            assert_abs_diff_eq!(
                b.eval(x),
                naive_cox_de_boor(&knots, 3, x, 1.0),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn local_support_is_exact() {
        let b = lkv(&[0.2, 0.3, 0.5, 0.6, 0.8], 3);
        assert_eq!(b.eval(0.1), 0.0);
        assert_eq!(b.eval(0.19999), 0.0);
        assert_eq!(b.eval(0.80001), 0.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert!(b.eval(0.4) > 0.0);
    }

    #[test]
    fn eval_all_nonzero_endpoint_interpolation() {
        let kv = KnotVector::uniform_open(2, 5);
        let (first, vals) = kv.eval_all_nonzero(0.0);
        assert_eq!(first, 0);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(vals[2], 0.0, epsilon = 1e-15);
        // left-limit convention at 1: last function evaluates to 1
        let (first, vals) = kv.eval_all_nonzero(1.0);
        assert_eq!(first + 2, kv.num_basis() - 1);
        assert_abs_diff_eq!(vals[2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn eval_all_matches_per_function_locals() {
        let kv = KnotVector::new(vec![0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0], 2).unwrap();
        let x = 0.25;
        let (first, vals) = kv.eval_all_nonzero(x);
        for (k, &v) in vals.iter().enumerate() {
            let b = kv.local(first + k);
            assert_abs_diff_eq!(v, b.eval(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn partition_of_unity_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in 1..=4 {
            let kv = KnotVector::uniform_open(p, p + 6);
            for _ in 0..1000 {
                let x: f64 = rng.gen();
                let (_, vals) = kv.eval_all_nonzero(x);
                let sum: f64 = vals.iter().sum();
                assert!((sum - 1.0).abs() < 1e-13, "p={p} x={x} sum={sum}");
            }
        }
    }

    #[test]
    fn hat_slope() {
        let b = lkv(&[0.0, 0.5, 1.0], 1);
        assert_abs_diff_eq!(b.eval_derivative(0.25, 1), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_spline_zero_slope_at_center() {
        let b = lkv(&[0.0, 0.25, 0.5, 0.75, 1.0], 3);
        assert_abs_diff_eq!(b.eval_derivative(0.5, 1), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            (vec![0.0, 0.25, 0.5, 0.75, 1.0], 3usize),
            (vec![0.0, 0.0, 0.3, 0.7, 1.0], 3),
            (vec![0.1, 0.4, 0.5, 0.9], 2),
        ];
        for (knots, p) in cases {
            let b = lkv(&knots, p);
            for _ in 0..100 {
                let x: f64 = 0.05 + 0.9 * rng.gen::<f64>();
                if knots.iter().any(|&k| (k - x).abs() < 1e-4) {
                    continue;
                }
                let h = 1e-6;
                let fd = (b.eval(x + h) - b.eval(x - h)) / (2.0 * h);
                let d = b.eval_derivative(x, 1);
                let scale = fd.abs().max(1.0);
                assert!((fd - d).abs() / scale < 1e-6, "x={x} fd={fd} d={d}");
            }
        }
        // order above degree is the zero function
        let b = lkv(&[0.0, 0.5, 1.0], 1);
        assert_eq!(b.eval_derivative(0.3, 2), 0.0);
    }

    #[test]
    fn insertion_identity_case() {
        let kv = KnotVector::uniform_open(2, 6);
        let m = knot_insertion_matrix(&kv, &kv).unwrap();
        assert_eq!(m.num_rows(), 6);
        for i in 0..6 {
            assert_eq!(m.row(i), &[(i, 1.0)]);
        }
    }

    #[test]
    fn insertion_p1_midpoint() {
        let coarse = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0], 1).unwrap();
        let fine = KnotVector::new(vec![0.0, 0.0, 0.5, 1.0, 1.0], 1).unwrap();
        let m = knot_insertion_matrix(&coarse, &fine).unwrap();
        // expansions agree pointwise
        let coarse_coeffs = vec![0.7, -0.3];
        let fine_coeffs = m.apply(&coarse_coeffs);
        assert_abs_diff_eq!(fine_coeffs[1], 0.5 * (0.7 - 0.3), epsilon = 1e-15);
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            let (fc, cv) = coarse.eval_all_nonzero(x);
            let coarse_val: f64 = cv.iter().enumerate().map(|(i, &v)| v * coarse_coeffs[fc + i]).sum();
            let (ff, fv) = fine.eval_all_nonzero(x);
            let fine_val: f64 = fv.iter().enumerate().map(|(i, &v)| v * fine_coeffs[ff + i]).sum();
            assert!((coarse_val - fine_val).abs() < 1e-14);
        }
    }

    #[test]
    fn insertion_preserves_partition_of_unity() {
        for p in 1..=4 {
            let coarse = KnotVector::uniform_open(p, p + 4);
            let mut fine_knots = coarse.knots().to_vec();
            for x in [0.125, 0.3125, 0.6875] {
                let pos = fine_knots.partition_point(|&k| k <= x);
                fine_knots.insert(pos, x);
            }
            let fine = KnotVector::new(fine_knots, p).unwrap();
            let m = knot_insertion_matrix(&coarse, &fine).unwrap();
            let ones = vec![1.0; coarse.num_basis()];
            for v in m.apply(&ones) {
                assert_abs_diff_eq!(v, 1.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn insertion_rejects_non_nested() {
        let a = KnotVector::uniform_open(2, 6);
        let b = KnotVector::uniform_open(2, 5);
        assert!(knot_insertion_matrix(&a, &b).is_err());
    }

    #[test]
    fn insertion_exactness_random_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [2usize, 3] {
            let coarse = KnotVector::uniform_open(p, p + 5);
            let mut fine_knots = coarse.knots().to_vec();
            for x in [0.1, 0.35, 0.85] {
                let pos = fine_knots.partition_point(|&k| k <= x);
                fine_knots.insert(pos, x);
            }
            let fine = KnotVector::new(fine_knots, p).unwrap();
            let m = knot_insertion_matrix(&coarse, &fine).unwrap();
            let coarse_coeffs: Vec<f64> = (0..coarse.num_basis()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let fine_coeffs = m.apply(&coarse_coeffs);
            for k in 0..=200 {
                let x = k as f64 / 200.0;
                let (fc, cv) = coarse.eval_all_nonzero(x);
                let a: f64 = cv.iter().enumerate().map(|(i, &v)| v * coarse_coeffs[fc + i]).sum();
                let (ff, fv) = fine.eval_all_nonzero(x);
                let b: f64 = fv.iter().enumerate().map(|(i, &v)| v * fine_coeffs[ff + i]).sum();
                assert!((a - b).abs() < 1e-13, "p={p} x={x}");
            }
        }
    }

    #[test]
    fn single_function_insertion_is_exact() {
        let b = lkv(&[0.0, 0.25, 0.5, 0.75, 1.0], 3);
        let children = insert_into_local(&b, 0.4);
        for k in 0..=100 {
            let x = k as f64 / 100.0;
            let sum: f64 = children.iter().map(|(c, w)| w * c.eval(x)).sum();
            assert!((sum - b.eval(x)).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn dual_functional_kronecker() {
        for p in 1..=4 {
            let kv = KnotVector::uniform_open(p, p + 5);
            let n = kv.num_basis();
            for j in 0..n {
                let lam = kv.local(j);
                for i in 0..n {
                    let b = kv.local(i);
                    let v = dual_functional(&lam, &b).unwrap();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (v - expected).abs() < 1e-10,
                        "p={p} lambda_{j}(B_{i}) = {v}"
                    );
                }
            }
        }
    }

    #[test]
    fn dual_functional_reproduces_constants() {
        for p in 1..=4 {
            let kv = KnotVector::uniform_open(p, p + 5);
            for j in 0..kv.num_basis() {
                let v = dual_functional(&kv.local(j), &ConstFn(1.0)).unwrap();
                assert!((v - 1.0).abs() < 1e-11, "p={p} j={j} v={v}");
            }
        }
    }

    #[test]
    fn dual_functional_rejects_zero_support() {
        let b = lkv(&[0.5, 0.5, 0.5], 1);
        assert!(dual_functional(&b, &ConstFn(1.0)).is_err());
    }

    proptest! {
        #[test]
        fn partition_of_unity_prop(p in 1usize..=4, x in 0.0f64..1.0) {
            let kv = KnotVector::uniform_open(p, p + 7);
            let (_, vals) = kv.eval_all_nonzero(x);
            let sum: f64 = vals.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-13);
            prop_assert!(vals.iter().all(|&v| v >= -1e-15));
        }

        #[test]
        fn eval_matches_naive(x in 0.0f64..1.0) {
            let knots = [0.0, 0.2, 0.45, 0.7, 1.0];
            let b = lkv(&knots, 3);
            let naive = naive_cox_de_boor(&knots, 3, x, 1.0);
            prop_assert!((b.eval(x) - naive).abs() < 1e-13);
        }
    }
}
