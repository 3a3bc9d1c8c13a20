//! Galerkin assembly of the Poisson system over the Bézier mesh, Dirichlet
//! elimination by boundary-trace testing, and the glued three-patch space on
//! the curved L-shaped domain.

use crate::geometry::GeometryMap;
use crate::quadrature::gauss_legendre_on;
use crate::sparse::CsrMatrix;
use crate::tspline::TSplineSpace;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum AssemblyError {
    #[error("geometry Jacobian is singular at parametric point ({0}, {1})")]
    SingularJacobian(f64, f64),
    #[error("space is not analysis-suitable")]
    NotAnalysisSuitable,
    #[error("interface knot lines do not match between patches")]
    InterfaceMismatch,
}

/// Assembled system on the full (uneliminated) basis.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// System after Dirichlet elimination, with the kept dof indices.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Indices (into the full numbering) of the retained dofs.
    pub interior: Vec<usize>,
}

type Triplet = (usize, usize, f64);

/// Per-element stiffness and load contributions over one patch, indexed by
/// the space's function numbering. Elements are processed in parallel and
/// merged in a fixed order, so results are bit-stable across thread counts.
fn assemble_patch(
    space: &TSplineSpace,
    geo: &GeometryMap,
    quad_order: usize,
    load: Option<&(dyn Fn(f64, f64) -> f64 + Sync)>,
) -> Result<(Vec<Triplet>, Vec<f64>), AssemblyError> {
    let elements: Vec<usize> = (0..space.bezier_mesh().len()).collect();
    let per_element: Result<Vec<(Vec<Triplet>, Vec<(usize, f64)>)>, AssemblyError> = elements
        .par_iter()
        .map(|&q| {
            let cell = &space.bezier_mesh()[q];
            let funcs = space.incident_functions(q);
            let (x0, x1, y0, y1) = cell.param;
            let (qx, wx) = gauss_legendre_on(x0, x1, quad_order);
            let (qy, wy) = gauss_legendre_on(y0, y1, quad_order);
            let k = funcs.len();
            let mut local = vec![0.0; k * k];
            let mut local_rhs = vec![0.0; k];
            for (ix, &x) in qx.iter().enumerate() {
                for (iy, &y) in qy.iter().enumerate() {
                    let jac = geo.jacobian(x, y);
                    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                    if det.abs() < 1e-12 {
                        return Err(AssemblyError::SingularJacobian(x, y));
                    }
                    let w = wx[ix] * wy[iy] * det.abs();
                    let inv = [
                        [jac[1][1] / det, -jac[0][1] / det],
                        [-jac[1][0] / det, jac[0][0] / det],
                    ];
                    let grads: Vec<(f64, f64)> = funcs
                        .iter()
                        .map(|&i| {
                            let f = &space.functions()[i];
                            let (gx, gy) = f.gradient(x, y);
                            (
                                gx * inv[0][0] + gy * inv[1][0],
                                gx * inv[0][1] + gy * inv[1][1],
                            )
                        })
                        .collect();
                    for a in 0..k {
                        for b in a..k {
                            let val = w * (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1);
                            local[a * k + b] += val;
                            if a != b {
                                local[b * k + a] += val;
                            }
                        }
                    }
                    if let Some(f) = load {
                        let (px, py) = geo.eval(x, y);
                        let fv = f(px, py);
                        for (a, &i) in funcs.iter().enumerate() {
                            local_rhs[a] += w * fv * space.functions()[i].value(x, y);
                        }
                    }
                }
            }
            let mut triplets = Vec::with_capacity(k * k);
            for (a, &i) in funcs.iter().enumerate() {
                for (b, &j) in funcs.iter().enumerate() {
                    let v = local[a * k + b];
                    if v != 0.0 {
                        triplets.push((i, j, v));
                    }
                }
            }
            let rhs: Vec<(usize, f64)> = funcs
                .iter()
                .enumerate()
                .map(|(a, &i)| (i, local_rhs[a]))
                .collect();
            Ok((triplets, rhs))
        })
        .collect();
    let per_element = per_element?;
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; space.dim()];
    for (t, r) in per_element {
        triplets.extend(t);
        for (i, v) in r {
            rhs[i] += v;
        }
    }
    Ok((triplets, rhs))
}

/// Stiffness matrix of the Poisson bilinear form on the full basis.
pub fn assemble_stiffness(
    space: &TSplineSpace,
    geo: &GeometryMap,
    quad_order: usize,
) -> Result<CsrMatrix, AssemblyError> {
    if !space.is_analysis_suitable() {
        return Err(AssemblyError::NotAnalysisSuitable);
    }
    let (triplets, _) = assemble_patch(space, geo, quad_order, None)?;
    Ok(CsrMatrix::from_triplets(space.dim(), space.dim(), &triplets))
}

/// Load vector for a right-hand side given in physical coordinates.
pub fn assemble_rhs(
    space: &TSplineSpace,
    geo: &GeometryMap,
    f: &(dyn Fn(f64, f64) -> f64 + Sync),
    quad_order: usize,
) -> Result<Vec<f64>, AssemblyError> {
    let elements: Vec<usize> = (0..space.bezier_mesh().len()).collect();
    let per_element: Result<Vec<Vec<(usize, f64)>>, AssemblyError> = elements
        .par_iter()
        .map(|&q| {
            let cell = &space.bezier_mesh()[q];
            let funcs = space.incident_functions(q);
            let (x0, x1, y0, y1) = cell.param;
            let (qx, wx) = gauss_legendre_on(x0, x1, quad_order);
            let (qy, wy) = gauss_legendre_on(y0, y1, quad_order);
            let mut local = vec![0.0; funcs.len()];
            for (ix, &x) in qx.iter().enumerate() {
                for (iy, &y) in qy.iter().enumerate() {
                    let det = geo.jacobian_det(x, y);
                    if det.abs() < 1e-12 {
                        return Err(AssemblyError::SingularJacobian(x, y));
                    }
                    let w = wx[ix] * wy[iy] * det.abs();
                    let (px, py) = geo.eval(x, y);
                    let fv = f(px, py);
                    for (a, &i) in funcs.iter().enumerate() {
                        local[a] += w * fv * space.functions()[i].value(x, y);
                    }
                }
            }
            Ok(funcs.iter().enumerate().map(|(a, &i)| (i, local[a])).collect())
        })
        .collect();
    let mut rhs = vec![0.0; space.dim()];
    for contributions in per_element? {
        for (i, v) in contributions {
            rhs[i] += v;
        }
    }
    Ok(rhs)
}

/// Indices of functions with zero trace on the whole parametric boundary.
pub fn interior_functions(space: &TSplineSpace) -> Vec<usize> {
    space
        .functions()
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.nonzero_on_boundary())
        .map(|(i, _)| i)
        .collect()
}

/// Removes rows and columns of boundary functions.
pub fn apply_dirichlet(matrix: &CsrMatrix, rhs: &[f64], interior: &[usize]) -> ReducedSystem {
    let reduced = matrix.restrict(interior);
    let reduced_rhs: Vec<f64> = interior.iter().map(|&i| rhs[i]).collect();
    ReducedSystem {
        matrix: reduced,
        rhs: reduced_rhs,
        interior: interior.to_vec(),
    }
}

/// Plain-text vector export: one value per line.
pub fn vector_to_text(v: &[f64]) -> String {
    let mut out = String::with_capacity(v.len() * 24);
    for x in v {
        out.push_str(&format!("{x:.17e}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Multi-patch gluing
// ---------------------------------------------------------------------------

/// Which parametric edges of a patch lie on the physical domain boundary,
/// ordered `(x = 0, x = 1, y = 0, y = 1)`.
pub type BoundaryEdges = (bool, bool, bool, bool);

/// A conforming multi-patch space: one parametric T-spline space shared by
/// all patches, interface functions identified into global dofs.
#[derive(Clone, Debug)]
pub struct MultiPatchSpace {
    pub space: TSplineSpace,
    pub geos: Vec<GeometryMap>,
    pub patch_boundary: Vec<BoundaryEdges>,
    pub local_to_global: Vec<Vec<usize>>,
    pub num_global: usize,
}

impl MultiPatchSpace {
    /// The three-patch curved L-shaped domain. Patches 0 and 1 glue along
    /// their `x = 0` edges, patches 1 and 2 along their `y = 0` edges, both
    /// with C0 continuity; the reentrant corner is the image of the origin.
    /// All patches carry the same parametric mesh, so traces match exactly.
    pub fn curved_l(space: TSplineSpace) -> Result<Self, AssemblyError> {
        if !space.is_analysis_suitable() {
            return Err(AssemblyError::NotAnalysisSuitable);
        }
        let geos = crate::geometry::curved_l_patches().to_vec();
        let patch_boundary = vec![
            (false, true, true, true),  // patch 0: x0 is the interface to patch 1
            (false, true, false, true), // patch 1: x0 and y0 are interfaces
            (true, true, false, true),  // patch 2: y0 is the interface to patch 1
        ];
        let dim = space.dim();
        // union-find over (patch, function)
        let mut parent: Vec<usize> = (0..3 * dim).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            let mut root = i;
            while parent[root] != root {
                root = parent[root];
            }
            let mut cur = i;
            while parent[cur] != root {
                let next = parent[cur];
                parent[cur] = root;
                cur = next;
            }
            root
        }
        for (i, f) in space.functions().iter().enumerate() {
            let (x0, _, y0, _) = f.boundary_edges();
            if x0 {
                let a = find(&mut parent, i);
                let b = find(&mut parent, dim + i);
                parent[a.max(b)] = a.min(b);
            }
            if y0 {
                let a = find(&mut parent, dim + i);
                let b = find(&mut parent, 2 * dim + i);
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut global_of_root: std::collections::BTreeMap<usize, usize> =
            std::collections::BTreeMap::new();
        let mut local_to_global = vec![vec![0usize; dim]; 3];
        let mut num_global = 0;
        for patch in 0..3 {
            for i in 0..dim {
                let root = find(&mut parent, patch * dim + i);
                let id = *global_of_root.entry(root).or_insert_with(|| {
                    let id = num_global;
                    num_global += 1;
                    id
                });
                local_to_global[patch][i] = id;
            }
        }
        Ok(MultiPatchSpace {
            space,
            geos,
            patch_boundary,
            local_to_global,
            num_global,
        })
    }

    /// Global dofs with zero trace on the physical boundary.
    pub fn interior_dofs(&self) -> Vec<usize> {
        let mut eliminated = vec![false; self.num_global];
        for (patch, edges) in self.patch_boundary.iter().enumerate() {
            for (i, f) in self.space.functions().iter().enumerate() {
                let (fx0, fx1, fy0, fy1) = f.boundary_edges();
                if (fx0 && edges.0) || (fx1 && edges.1) || (fy0 && edges.2) || (fy1 && edges.3) {
                    eliminated[self.local_to_global[patch][i]] = true;
                }
            }
        }
        (0..self.num_global).filter(|&g| !eliminated[g]).collect()
    }

    /// Assembles the glued stiffness matrix and load vector on the full
    /// global numbering.
    pub fn assemble(
        &self,
        load: &(dyn Fn(f64, f64) -> f64 + Sync),
        quad_order: usize,
    ) -> Result<LinearSystem, AssemblyError> {
        let mut triplets: Vec<Triplet> = Vec::new();
        let mut rhs = vec![0.0; self.num_global];
        for (patch, geo) in self.geos.iter().enumerate() {
            let (local_triplets, local_rhs) =
                assemble_patch(&self.space, geo, quad_order, Some(load))?;
            let map = &self.local_to_global[patch];
            triplets.extend(
                local_triplets
                    .into_iter()
                    .map(|(i, j, v)| (map[i], map[j], v)),
            );
            for (i, v) in local_rhs.into_iter().enumerate() {
                rhs[map[i]] += v;
            }
        }
        Ok(LinearSystem {
            matrix: CsrMatrix::from_triplets(self.num_global, self.num_global, &triplets),
            rhs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tmesh::TMesh;
    use approx::assert_abs_diff_eq;

    fn tensor_space(p: usize, n: i64) -> TSplineSpace {
        TSplineSpace::build(&TMesh::initial((p, p), (n, n)).unwrap()).unwrap()
    }

    #[test]
    fn bilinear_single_element_matrix() {
        // one-element bilinear patch: the classical Laplacian element matrix
        let space = tensor_space(1, 2);
        assert_eq!(space.dim(), 4);
        let a = assemble_stiffness(&space, &GeometryMap::IdentitySquare, 3).unwrap();
        // diagonal 2/3, edge-adjacent -1/6, diagonally opposite -1/3
        for i in 0..4 {
            assert_abs_diff_eq!(a.get(i, i), 2.0 / 3.0, epsilon = 1e-14);
        }
        // functions sorted by anchor: (0,0), (0,1), (1,0), (1,1)
        assert_abs_diff_eq!(a.get(0, 1), -1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.get(0, 2), -1.0 / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.get(0, 3), -1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a.get(1, 2), -1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn constants_in_nullspace_before_elimination() {
        for (p, n) in [(2usize, 7i64), (3, 8)] {
            let space = tensor_space(p, n);
            let a = assemble_stiffness(&space, &GeometryMap::IdentitySquare, p + 1).unwrap();
            let ones = vec![1.0; space.dim()];
            let az = a.mul_vec(&ones);
            let scale = a.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
            for v in az {
                assert!(v.abs() < 1e-11 * scale.max(1.0), "A*1 entry {v}");
            }
        }
    }

    #[test]
    fn rhs_zero_and_partition_integral() {
        let space = tensor_space(2, 7);
        let zero = assemble_rhs(&space, &GeometryMap::IdentitySquare, &|_, _| 0.0, 3).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let one = assemble_rhs(&space, &GeometryMap::IdentitySquare, &|_, _| 1.0, 3).unwrap();
        let total: f64 = one.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetry_and_sparsity() {
        let space = tensor_space(3, 8);
        let a = assemble_stiffness(&space, &GeometryMap::IdentitySquare, 4).unwrap();
        assert!(a.relative_asymmetry() < 1e-12);
        assert!(a.max_nnz_per_row() <= (2 * 3 + 1) * (2 * 3 + 1));
    }

    #[test]
    fn quadrature_order_insensitive_on_identity_map() {
        let space = tensor_space(2, 7);
        let a1 = assemble_stiffness(&space, &GeometryMap::IdentitySquare, 3).unwrap();
        let a2 = assemble_stiffness(&space, &GeometryMap::IdentitySquare, 4).unwrap();
        let scale = a1.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for i in 0..a1.nrows() {
            let (cols, vals) = a1.row(i);
            for (c, v) in cols.iter().zip(vals) {
                assert!((v - a2.get(i, *c)).abs() <= 1e-12 * scale, "entry ({i},{c})");
            }
        }
    }

    #[test]
    fn dirichlet_elimination_counts_and_spd() {
        let space = tensor_space(2, 7);
        let a = assemble_stiffness(&space, &GeometryMap::IdentitySquare, 3).unwrap();
        let rhs = assemble_rhs(&space, &GeometryMap::IdentitySquare, &|_, _| 1.0, 3).unwrap();
        let interior = interior_functions(&space);
        assert_eq!(interior.len(), 25); // (n-2)^2
        let reduced = apply_dirichlet(&a, &rhs, &interior);
        let dense = reduced.matrix.to_dense();
        let eig = dense.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min > 0.0, "reduced system must be SPD, min eig {min}");
    }

    #[test]
    fn curved_l_gluing_structure() {
        let space = tensor_space(2, 7);
        let dim = space.dim();
        let mp = MultiPatchSpace::curved_l(space).unwrap();
        // n functions are nonzero on each interface edge; each interface
        // merge removes one copy (the corner function loses two copies, one
        // per interface).
        let n_edge = 7;
        assert_eq!(mp.num_global, 3 * dim - 2 * n_edge);
        // constant vector in the nullspace of the glued matrix
        let sys = mp.assemble(&|_, _| 1.0, 3).unwrap();
        let ones = vec![1.0; mp.num_global];
        let az = sys.matrix.mul_vec(&ones);
        let scale = sys.matrix.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for v in az {
            assert!(v.abs() < 1e-11 * scale, "glued A*1 entry {v}");
        }
        // interface points coincide in physical space
        for k in 0..50 {
            let t = (k as f64 + 0.5) / 50.0;
            let p0 = mp.geos[0].eval(0.0, t);
            let p1 = mp.geos[1].eval(0.0, t);
            assert!((p0.0 - p1.0).abs() < 1e-12 && (p0.1 - p1.1).abs() < 1e-12);
            let p1b = mp.geos[1].eval(t, 0.0);
            let p2 = mp.geos[2].eval(t, 0.0);
            assert!((p1b.0 - p2.0).abs() < 1e-12 && (p1b.1 - p2.1).abs() < 1e-12);
        }
    }
}
