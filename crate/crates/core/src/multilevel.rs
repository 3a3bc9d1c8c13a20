//! Additive multilevel preconditioning: subspace decompositions built from
//! the bisection history, one-sweep subspace smoothers, the parallel
//! subspace-correction operator, PCG, and condition-number estimation.

use crate::assembly::BoundaryEdges;
use crate::sparse::{
    backward_substitute, forward_substitute, galerkin_product, sparse_axpy, sparse_dot_dense,
    CsrMatrix, SparseVec,
};
use crate::tmesh::{Bisection, TMesh};
use crate::tspline::{change_of_basis, function_sets_for_batches, TSplineError, TSplineSpace};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum MultilevelError {
    #[error("change of basis failed: {0}")]
    ChangeOfBasis(#[from] TSplineError),
    #[error("interior subspace member has a nonzero coefficient {0:.3e} on an eliminated dof")]
    BoundaryLeak(f64),
    #[error("operator is not symmetric positive definite (curvature {0:.3e})")]
    NotSpd(f64),
    #[error("zero diagonal entry in subspace stiffness at {0}")]
    ZeroDiagonal(usize),
}

/// How bisections are grouped into subspaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecompositionKind {
    /// One subspace per bisection.
    Micro,
    /// Consecutive same-generation bisections with collinear, contiguous new
    /// edges share a subspace.
    AlignedMicro,
    /// One subspace per generation.
    Macro,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmootherKind {
    Jacobi,
    SymmetricGaussSeidel,
}

/// The problem-side context a decomposition is built against: the glued dof
/// layout, the retained interior dofs and the reduced stiffness matrix.
/// Single-patch problems use one identity patch map.
#[derive(Clone, Debug)]
pub struct Problem {
    pub patch_boundary: Vec<BoundaryEdges>,
    pub local_to_global: Vec<Vec<usize>>,
    pub num_global: usize,
    pub interior: Vec<usize>,
    pub matrix: CsrMatrix,
}

impl Problem {
    pub fn single_patch(space: &TSplineSpace, interior: Vec<usize>, matrix: CsrMatrix) -> Self {
        Problem {
            patch_boundary: vec![(true, true, true, true)],
            local_to_global: vec![(0..space.dim()).collect()],
            num_global: space.dim(),
            interior,
            matrix,
        }
    }

    pub fn from_multipatch(
        mp: &crate::assembly::MultiPatchSpace,
        interior: Vec<usize>,
        matrix: CsrMatrix,
    ) -> Self {
        Problem {
            patch_boundary: mp.patch_boundary.clone(),
            local_to_global: mp.local_to_global.clone(),
            num_global: mp.num_global,
            interior,
            matrix,
        }
    }

    pub fn reduced_dim(&self) -> usize {
        self.interior.len()
    }

    /// A subspace member survives Dirichlet elimination when its trace
    /// vanishes on every physical boundary edge of every patch.
    fn member_is_interior(&self, f: &crate::tspline::TSplineFunction) -> bool {
        let (fx0, fx1, fy0, fy1) = f.boundary_edges();
        !self.patch_boundary.iter().any(|edges| {
            (fx0 && edges.0) || (fx1 && edges.1) || (fy0 && edges.2) || (fy1 && edges.3)
        })
    }
}

/// One subspace: its basis expressed in the reduced global dofs and the
/// Galerkin restriction of the stiffness matrix.
#[derive(Clone, Debug)]
pub struct Subspace {
    pub label: u32,
    pub basis: Vec<SparseVec>,
    pub stiffness: CsrMatrix,
    diag: Vec<f64>,
}

/// An ordered collection of subspaces with a fixed one-sweep smoother.
#[derive(Clone, Debug)]
pub struct SubspaceDecomposition {
    pub subspaces: Vec<Subspace>,
    pub smoother: SmootherKind,
    reduced_dim: usize,
}

/// Groups the generation-sorted history one bisection per batch.
pub fn micro_batches(mesh: &TMesh) -> Vec<(u32, Vec<Bisection>)> {
    mesh.history_by_generation()
        .into_iter()
        .map(|b| (b.generation, vec![b]))
        .collect()
}

/// Groups consecutive same-generation bisections whose new edges are
/// collinear and contiguous. Bisections of parametrically empty elements add
/// no edge and attach to the current group.
pub fn aligned_micro_batches(mesh: &TMesh) -> Vec<(u32, Vec<Bisection>)> {
    use crate::dyadic::DyadicIndex;
    use crate::tmesh::Axis;
    struct Run {
        generation: u32,
        axis: Axis,
        line: Option<DyadicIndex>,
        span: Option<(DyadicIndex, DyadicIndex)>,
        items: Vec<Bisection>,
    }
    let mut batches: Vec<(u32, Vec<Bisection>)> = Vec::new();
    let mut run: Option<Run> = None;
    let mut replay = TMesh::initial(mesh.degree(), mesh.basis_counts()).expect("valid mesh");
    for bis in mesh.history_by_generation() {
        let children = replay.bisection_children(&bis.parent, bis.direction);
        let split = children.len() == 2;
        replay
            .bisect_element_dir(&bis.parent, bis.direction)
            .expect("replay parent");
        let (line, lo, hi) = match bis.direction {
            Axis::X => (
                DyadicIndex::midpoint(&bis.parent.lo.x, &bis.parent.hi.x),
                bis.parent.lo.y,
                bis.parent.hi.y,
            ),
            Axis::Y => (
                DyadicIndex::midpoint(&bis.parent.lo.y, &bis.parent.hi.y),
                bis.parent.lo.x,
                bis.parent.hi.x,
            ),
        };
        let start_new = match &run {
            None => true,
            Some(r) => {
                if r.generation != bis.generation || r.axis != bis.direction {
                    true
                } else if !split {
                    false // edgeless bisections ride along
                } else {
                    match (&r.line, &r.span) {
                        (None, _) => false, // run has no edge yet; adopt this one
                        (Some(l), Some((a, b))) => !(*l == line && lo <= *b && *a <= hi),
                        _ => true,
                    }
                }
            }
        };
        if start_new {
            if let Some(r) = run.take() {
                batches.push((r.generation, r.items));
            }
            run = Some(Run {
                generation: bis.generation,
                axis: bis.direction,
                line: None,
                span: None,
                items: Vec::new(),
            });
        }
        let r = run.as_mut().unwrap();
        if split {
            match (&mut r.line, &mut r.span) {
                (l @ None, s) => {
                    *l = Some(line);
                    *s = Some((lo, hi));
                }
                (Some(_), Some((a, b))) => {
                    if lo < *a {
                        *a = lo;
                    }
                    if hi > *b {
                        *b = hi;
                    }
                }
                _ => unreachable!(),
            }
        }
        r.items.push(bis);
    }
    if let Some(r) = run.take() {
        batches.push((r.generation, r.items));
    }
    batches
}

/// Groups all bisections of a generation into one batch.
pub fn macro_batches(mesh: &TMesh) -> Vec<(u32, Vec<Bisection>)> {
    let mut batches: Vec<(u32, Vec<Bisection>)> = Vec::new();
    for bis in mesh.history_by_generation() {
        match batches.last_mut() {
            Some((g, items)) if *g == bis.generation => items.push(bis),
            _ => batches.push((bis.generation, vec![bis])),
        }
    }
    batches
}

pub fn batches_for(kind: DecompositionKind, mesh: &TMesh) -> Vec<(u32, Vec<Bisection>)> {
    match kind {
        DecompositionKind::Micro => micro_batches(mesh),
        DecompositionKind::AlignedMicro => aligned_micro_batches(mesh),
        DecompositionKind::Macro => macro_batches(mesh),
    }
}

/// Builds the decomposition: per batch, the added functions are kept if they
/// survive Dirichlet elimination, expressed in the final basis, mapped to
/// reduced dofs, and equipped with their Galerkin stiffness. Batches left
/// empty after elimination are dropped.
pub fn build_decomposition(
    mesh: &TMesh,
    space: &TSplineSpace,
    problem: &Problem,
    batches: &[(u32, Vec<Bisection>)],
    smoother: SmootherKind,
) -> Result<SubspaceDecomposition, MultilevelError> {
    let sets = function_sets_for_batches(mesh.degree(), mesh.basis_counts(), batches)?;
    let mut interior_pos = vec![usize::MAX; problem.num_global];
    for (r, &g) in problem.interior.iter().enumerate() {
        interior_pos[g] = r;
    }
    let mut subspaces = Vec::new();
    for step in &sets.steps {
        let members: Vec<&crate::tspline::TSplineFunction> = step
            .added
            .iter()
            .filter(|f| problem.member_is_interior(f))
            .collect();
        if members.is_empty() {
            continue;
        }
        let owned: Vec<crate::tspline::TSplineFunction> =
            members.iter().map(|f| (*f).clone()).collect();
        let parametric_cols = change_of_basis(&owned, space)?;
        let mut basis: Vec<SparseVec> = Vec::with_capacity(parametric_cols.len());
        for col in &parametric_cols {
            let mut global: std::collections::BTreeMap<usize, f64> =
                std::collections::BTreeMap::new();
            let norm = col.iter().map(|&(_, c)| c * c).sum::<f64>().sqrt();
            for map in &problem.local_to_global {
                for &(j, c) in col {
                    let g = map[j];
                    let r = interior_pos[g];
                    if r == usize::MAX {
                        if c.abs() > 1e-9 * norm.max(1.0) {
                            return Err(MultilevelError::BoundaryLeak(c));
                        }
                        continue;
                    }
                    if let Some(prev) = global.get(&r) {
                        debug_assert!(
                            (prev - c).abs() <= 1e-9 * norm.max(1.0),
                            "glued copies disagree"
                        );
                    } else {
                        global.insert(r, c);
                    }
                }
            }
            basis.push(global.into_iter().collect());
        }
        let stiffness = galerkin_product(&problem.matrix, &basis);
        let diag = stiffness.diagonal();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(MultilevelError::ZeroDiagonal(i));
        }
        subspaces.push(Subspace {
            label: step.label,
            basis,
            stiffness,
            diag,
        });
    }
    Ok(SubspaceDecomposition {
        subspaces,
        smoother,
        reduced_dim: problem.reduced_dim(),
    })
}

/// One application of the subspace smoother to a subspace residual.
pub fn smoother_apply(kind: SmootherKind, stiffness: &CsrMatrix, diag: &[f64], r: &[f64]) -> Vec<f64> {
    match kind {
        SmootherKind::Jacobi => r.iter().zip(diag).map(|(v, d)| v / d).collect(),
        SmootherKind::SymmetricGaussSeidel => {
            // z = (D + U)^{-1} D (L + D)^{-1} r
            let y = forward_substitute(stiffness, r);
            let scaled: Vec<f64> = y.iter().zip(diag).map(|(v, d)| v * d).collect();
            backward_substitute(stiffness, &scaled)
        }
    }
}

impl SubspaceDecomposition {
    pub fn reduced_dim(&self) -> usize {
        self.reduced_dim
    }

    /// The additive correction `z = sum_i P_i R_i P_i^T r`, evaluated over
    /// subspaces in parallel and summed in a fixed order.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        let corrections: Vec<SparseVec> = self
            .subspaces
            .par_iter()
            .map(|s| {
                let local_r: Vec<f64> = s.basis.iter().map(|col| sparse_dot_dense(col, r)).collect();
                let local_z = smoother_apply(self.smoother, &s.stiffness, &s.diag, &local_r);
                let mut out: SparseVec = Vec::new();
                for (col, &z) in s.basis.iter().zip(&local_z) {
                    for &(row, v) in col {
                        out.push((row, v * z));
                    }
                }
                out
            })
            .collect();
        let mut z = vec![0.0; self.reduced_dim];
        for corr in corrections {
            sparse_axpy(1.0, &corr, &mut z);
        }
        z
    }

    /// Total number of subspaces.
    pub fn len(&self) -> usize {
        self.subspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subspaces.is_empty()
    }
}

// ---------------------------------------------------------------------------
// PCG and condition-number estimation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub wall_seconds: f64,
}

/// Preconditioned conjugate gradients. The stopping rule is the ratio of
/// preconditioned residual norms; the Lanczos tridiagonal assembled from the
/// CG scalars provides eigenvalue estimates of the preconditioned operator.
pub fn pcg_solve(
    a: &CsrMatrix,
    b: &[f64],
    precond: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<f64>, SolveReport), MultilevelError> {
    let start = std::time::Instant::now();
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut rho = dot(&r, &z);
    if rho < 0.0 {
        return Err(MultilevelError::NotSpd(rho));
    }
    let rho0 = rho.max(f64::MIN_POSITIVE);
    let mut p = z.clone();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut residual_history = vec![1.0];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iterations {
        let q = a.mul_vec(&p);
        let curvature = dot(&p, &q);
        if curvature <= 0.0 {
            return Err(MultilevelError::NotSpd(curvature));
        }
        let alpha = rho / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        z = precond(&r);
        let rho_next = dot(&r, &z);
        if rho_next < 0.0 {
            return Err(MultilevelError::NotSpd(rho_next));
        }
        let beta = rho_next / rho;
        alphas.push(alpha);
        betas.push(beta);
        iterations += 1;
        let rel = (rho_next / rho0).sqrt();
        residual_history.push(rel);
        rho = rho_next;
        if rel < tol {
            converged = true;
            break;
        }
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let (lambda_min, lambda_max) = tridiagonal_extremes(&alphas, &betas);
    let report = SolveReport {
        iterations,
        converged,
        residual_history,
        lambda_min,
        lambda_max,
        kappa: if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY },
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Extreme eigenvalues of the PCG Lanczos tridiagonal.
fn tridiagonal_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let k = alphas.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        let mut d = 1.0 / alphas[i];
        if i > 0 {
            d += betas[i - 1] / alphas[i - 1];
        }
        t[(i, i)] = d;
        if i + 1 < k {
            let off = betas[i].sqrt() / alphas[i];
            t[(i, i + 1)] = off;
            t[(i + 1, i)] = off;
        }
    }
    let eig = t.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    (min, max)
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Extreme eigenvalues of the preconditioned operator by the Lanczos
/// three-term recurrence in the preconditioner inner product, with full
/// reorthogonalization. Runs until the extreme Ritz values settle (relative
/// change below 1e-4 over five consecutive steps) or the iteration cap.
pub fn estimate_condition(
    a: &CsrMatrix,
    precond: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    seed: u64,
    max_iterations: usize,
) -> EigenEstimate {
    let n = a.nrows();
    let cap = max_iterations.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut z = precond(&v);
    let norm = dot(&v, &z).sqrt();
    for i in 0..n {
        v[i] /= norm;
        z[i] /= norm;
    }
    let mut vs: Vec<Vec<f64>> = vec![v.clone()];
    let mut zs: Vec<Vec<f64>> = vec![z.clone()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut converged = false;
    while alphas.len() < cap {
        let j = alphas.len();
        let w0 = a.mul_vec(&zs[j]);
        let alpha = dot(&zs[j], &w0);
        alphas.push(alpha);
        let mut w = w0;
        for i in 0..n {
            w[i] -= alpha * vs[j][i];
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            for i in 0..n {
                w[i] -= beta_prev * vs[j - 1][i];
            }
        }
        // full reorthogonalization (twice) against the z-basis
        for _ in 0..2 {
            for (vi, zi) in vs.iter().zip(&zs) {
                let c = dot(zi, &w);
                for i in 0..n {
                    w[i] -= c * vi[i];
                }
            }
        }
        let zw = precond(&w);
        let beta = dot(&w, &zw).max(0.0).sqrt();
        if beta < 1e-14 {
            converged = true;
            break;
        }
        betas.push(beta);
        let mut v_next = w;
        let mut z_next = zw;
        for i in 0..n {
            v_next[i] /= beta;
            z_next[i] /= beta;
        }
        vs.push(v_next);
        zs.push(z_next);

        // Ritz convergence check every five steps: both extremes must move
        // by less than 1e-4 relative between consecutive evaluations.
        let k = alphas.len();
        if k % 5 == 0 {
            let mut t = DMatrix::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
            let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            if let Some(&(old_min, old_max)) = history.last() {
                let dmin = (min - old_min).abs() / min.abs().max(1e-300);
                let dmax = (max - old_max).abs() / max.abs().max(1e-300);
                if dmin < 1e-4 && dmax < 1e-4 {
                    history.push((min, max));
                    converged = true;
                    break;
                }
            }
            history.push((min, max));
        }
    }
    let final_extremes = || {
        let k = alphas.len();
        if k == 0 {
            return (0.0, 0.0);
        }
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        (
            eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min),
            eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max),
        )
    };
    // exact-breakdown runs report the full-space extremes, which are exact;
    // otherwise the last five-step evaluation stands
    let (lambda_min, lambda_max) = if alphas.len() == betas.len() + 1 {
        final_extremes()
    } else {
        history.last().copied().unwrap_or_else(final_extremes)
    };
    EigenEstimate {
        lambda_min,
        lambda_max,
        kappa: if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY },
        iterations: alphas.len(),
        converged,
    }
}

/// Dense oracle: eigenvalue extremes of the preconditioned operator via the
/// Cholesky congruence, feasible for small systems.
pub fn dense_condition(a: &CsrMatrix, precond: &(dyn Fn(&[f64]) -> Vec<f64> + Sync)) -> (f64, f64, f64) {
    let n = a.nrows();
    let dense_a = a.to_dense();
    let mut dense_b = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = precond(&e);
        for i in 0..n {
            dense_b[(i, j)] = col[i];
        }
    }
    let chol = dense_a.clone().cholesky().expect("stiffness must be SPD");
    let l = chol.l();
    let m = l.transpose() * dense_b * &l;
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    (min, max, max / min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spd() -> CsrMatrix {
        CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)])
    }

    #[test]
    fn jacobi_smoother() {
        let a = small_spd();
        let d = a.diagonal();
        let z = smoother_apply(SmootherKind::Jacobi, &a, &d, &[1.0, 0.0]);
        assert_eq!(z, vec![0.5, 0.0]);
    }

    #[test]
    fn sgs_matches_dense_formula() {
        // z = (D+U)^{-1} D (L+D)^{-1} r against an explicit 2x2 computation
        let a = small_spd();
        let d = a.diagonal();
        let r = [1.0, 0.0];
        let z = smoother_apply(SmootherKind::SymmetricGaussSeidel, &a, &d, &r);
        // (L+D)^{-1} r = [0.5, -0.25]; D * that = [1.0, -0.5];
        // (D+U)^{-1} [1.0, -0.5] = [(1.0 - 1.0*(-0.25))/2, -0.25]
        assert!((z[1] + 0.25).abs() < 1e-15);
        assert!((z[0] - 0.625).abs() < 1e-15);
    }

    #[test]
    fn identity_smoothers_pass_through() {
        let eye = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let d = eye.diagonal();
        let r = [0.3, -0.7, 2.0];
        assert_eq!(smoother_apply(SmootherKind::Jacobi, &eye, &d, &r), r.to_vec());
        assert_eq!(
            smoother_apply(SmootherKind::SymmetricGaussSeidel, &eye, &d, &r),
            r.to_vec()
        );
    }

    #[test]
    fn pcg_identity_converges_in_one_iteration() {
        let eye = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        let b = vec![1.0, 2.0, 3.0];
        let (x, report) = pcg_solve(&eye, &b, &|r| r.to_vec(), 1e-12, 10).unwrap();
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        for (a, b) in x.iter().zip(&b) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pcg_rejects_indefinite() {
        let m = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let b = vec![0.0, 1.0];
        assert!(pcg_solve(&m, &b, &|r| r.to_vec(), 1e-10, 10).is_err());
    }

    #[test]
    fn residual_decreases_monotonically_in_preconditioned_norm() {
        // Laplacian-like tridiagonal system
        let n = 20;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let (_, report) = pcg_solve(&a, &b, &|r| r.to_vec(), 1e-10, 100).unwrap();
        assert!(report.converged);
    }

    #[test]
    fn condition_estimates_known_spectra() {
        // B = I, A = diag(1..10): kappa = 10
        let n = 10;
        let t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, (i + 1) as f64)).collect();
        let a = CsrMatrix::from_triplets(n, n, &t);
        let est = estimate_condition(&a, &|r| r.to_vec(), 7, 400);
        assert!((est.kappa - 10.0).abs() < 1e-8, "kappa {}", est.kappa);
        // exact preconditioner: kappa = 1
        let inv = |r: &[f64]| -> Vec<f64> {
            r.iter().enumerate().map(|(i, v)| v / (i + 1) as f64).collect()
        };
        let est = estimate_condition(&a, &inv, 7, 400);
        assert!((est.kappa - 1.0).abs() < 1e-8, "kappa {}", est.kappa);
        let (_, _, dense) = dense_condition(&a, &|r| r.to_vec());
        assert!((dense - 10.0).abs() < 1e-10);
    }
}
