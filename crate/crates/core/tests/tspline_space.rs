//! Space-construction checks: anchors, index vectors, Bézier mesh, dual
//! compatibility, embeddings, change of basis and the projector.

use tsbpx::bspline::KnotVector;
use tsbpx::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use tsbpx::tmesh::{Axis, TMesh};
use tsbpx::tspline::{
    change_of_basis, embed_function, level_sets, projector, ConstInput, SplineInput, TSplineSpace,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

fn dy(num: i64, exp: u32) -> DyadicIndex {
    DyadicIndex::new(num, exp)
}

fn tensor_mesh(p: usize, n: i64) -> TMesh {
    TMesh::initial((p, p), (n, n)).unwrap()
}

/// One admissible refinement toward the parametric origin corner.
fn corner_refined_mesh(p: usize, n: i64, steps: usize) -> TMesh {
    let mut mesh = tensor_mesh(p, n);
    for _ in 0..steps {
        let probe = IndexVec2::new(
            dy(4 * (p as i64) + 1, 2).min(dy(p as i64 + 1, 0)),
            dy(4 * (p as i64) + 1, 2).min(dy(p as i64 + 1, 0)),
        );
        let target = *mesh
            .elements()
            .map(|(r, _)| r)
            .find(|r| r.contains_point(&probe) && !mesh.param_equal(Axis::X, &r.lo.x, &r.hi.x))
            .unwrap();
        mesh.refine_admissible(&target).unwrap();
    }
    mesh
}

#[test]
fn tensor_product_anchor_counts() {
    let space = TSplineSpace::build(&tensor_mesh(3, 8)).unwrap();
    assert_eq!(space.dim(), 64);
    let space = TSplineSpace::build(&tensor_mesh(2, 7)).unwrap();
    assert_eq!(space.dim(), 49);
    let space = TSplineSpace::build(&tensor_mesh(4, 10)).unwrap();
    assert_eq!(space.dim(), 100);
    // mixed parity: dimension is still n1 * n2
    let space = TSplineSpace::build(&TMesh::initial((2, 3), (7, 8)).unwrap()).unwrap();
    assert_eq!(space.dim(), 56);
    let space = TSplineSpace::build(&TMesh::initial((3, 2), (8, 7)).unwrap()).unwrap();
    assert_eq!(space.dim(), 56);
}

#[test]
fn tensor_product_index_vectors_are_consecutive() {
    let mesh = tensor_mesh(3, 8);
    let space = TSplineSpace::build(&mesh).unwrap();
    for f in space.functions() {
        let xs: Vec<i64> = f.hv.iter().map(|d| d.floor()).collect();
        assert!(f.hv.iter().all(|d| d.is_integer()));
        for w in xs.windows(2) {
            assert_eq!(w[1] - w[0], 1);
        }
    }
    // global knot vectors are recovered exactly
    let kv = KnotVector::uniform_open(3, 8);
    for (i, f) in space.functions().iter().enumerate() {
        let iy = i % 8;
        let expected = kv.local(iy);
        let got = &f.lkv_y;
        assert_eq!(got.knots(), expected.knots(), "function {i}");
    }
}

#[test]
fn anchor_count_increases_under_refinement() {
    let mut mesh = tensor_mesh(3, 8);
    let before = TSplineSpace::build(&mesh).unwrap().dim();
    mesh.refine_admissible(&IndexRect::from_integers(5, 5, 6, 6)).unwrap();
    let after = TSplineSpace::build(&mesh).unwrap().dim();
    assert!(after > before, "{after} vs {before}");
}

#[test]
fn tensor_product_has_no_extensions_and_full_bezier_grid() {
    for (p, n, cells) in [(2usize, 7i64, 5i64), (3, 8, 5), (4, 10, 6)] {
        let space = TSplineSpace::build(&tensor_mesh(p, n)).unwrap();
        assert!(space.extensions().is_empty());
        assert_eq!(space.bezier_mesh().len() as i64, cells * cells);
        let area: f64 = space.bezier_mesh().iter().map(|q| q.area()).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert!(space.is_analysis_suitable());
        assert!(space.is_extension_crossing_free());
    }
}

#[test]
fn admissible_refinements_stay_analysis_suitable() {
    for p in [2usize, 3, 4] {
        let n = match p {
            2 => 7,
            3 => 8,
            _ => 10,
        };
        let mesh = corner_refined_mesh(p, n, 6);
        let space = TSplineSpace::build(&mesh).unwrap();
        assert!(space.is_analysis_suitable(), "p={p}");
        assert!(space.is_extension_crossing_free(), "p={p}");
        let area: f64 = space.bezier_mesh().iter().map(|q| q.area()).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }
}

#[test]
fn non_admissible_mesh_fails_both_as_checks() {
    // bisect one element three times without closure: a sharp level jump
    let mut mesh = tensor_mesh(3, 8);
    let e = IndexRect::from_integers(5, 5, 6, 6);
    mesh.bisect_element(&e).unwrap();
    let child = IndexRect::new(
        IndexVec2::new(dy(5, 0), dy(5, 0)),
        IndexVec2::new(dy(11, 1), dy(6, 0)),
    );
    mesh.bisect_element(&child).unwrap();
    let grandchild = IndexRect::new(
        IndexVec2::new(dy(5, 0), dy(5, 0)),
        IndexVec2::new(dy(11, 1), dy(11, 1)),
    );
    mesh.bisect_element(&grandchild).unwrap();
    let ggchild = IndexRect::new(
        IndexVec2::new(dy(5, 0), dy(5, 0)),
        IndexVec2::new(dy(21, 2), dy(11, 1)),
    );
    mesh.bisect_element(&ggchild).unwrap();
    assert!(!mesh.check_admissible().0);
    let space = TSplineSpace::build(&mesh).unwrap();
    assert_eq!(
        space.is_analysis_suitable(),
        space.is_extension_crossing_free(),
        "the two analysis-suitability tests must agree"
    );
    assert!(!space.is_analysis_suitable());
    assert!(!space.dual_compatibility_violations().is_empty());
}

#[test]
fn partition_of_unity_on_refined_spaces() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for p in [2usize, 3] {
        let n = if p == 2 { 7 } else { 8 };
        let mesh = corner_refined_mesh(p, n, 5);
        let space = TSplineSpace::build(&mesh).unwrap();
        for _ in 0..200 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let s = space.partition_sum(x, y);
            assert!((s - 1.0).abs() < 1e-12, "p={p} at ({x},{y}): {s}");
        }
    }
}

#[test]
fn incidence_counts_are_bounded() {
    for p in [2usize, 3] {
        let n = if p == 2 { 7 } else { 8 };
        let mesh = corner_refined_mesh(p, n, 6);
        let space = TSplineSpace::build(&mesh).unwrap();
        let bound = (p + 1) * (p + 1);
        let mut interior_full = 0;
        for q in 0..space.bezier_mesh().len() {
            let k = space.incident_functions(q).len();
            assert!(k <= bound, "p={p}: {k} > {bound}");
            if k == bound {
                interior_full += 1;
            }
        }
        assert!(interior_full > 0);
    }
}

#[test]
fn incidence_matches_pointwise_nonvanishing() {
    let mesh = corner_refined_mesh(2, 7, 4);
    let space = TSplineSpace::build(&mesh).unwrap();
    for (q, cell) in space.bezier_mesh().iter().enumerate() {
        let (cx, cy) = cell.center();
        for (i, f) in space.functions().iter().enumerate() {
            let v = f.value(cx, cy);
            let incident = space.incident_functions(q).contains(&i);
            if v.abs() > 1e-13 {
                assert!(incident, "nonzero function missing from incidence");
            }
            if incident {
                assert!(v.abs() > 1e-13, "incident function vanishes at center");
            }
        }
    }
}

#[test]
fn embedding_identity_and_pointwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mesh = corner_refined_mesh(3, 8, 5);
    let space = TSplineSpace::build(&mesh).unwrap();
    let degree = space.degree();
    let n = space.basis_counts();
    // identity embedding: a level-0 function at level (0,0)
    let f0 = space
        .functions()
        .iter()
        .find(|f| f.generation == 0)
        .expect("a coarse function persists away from the corner");
    let e = embed_function(f0, degree, n, 0, 0).unwrap();
    assert_eq!(e.len(), 1);
    assert!((e[0].1 - 1.0).abs() < 1e-14);

    // pointwise oracle at mixed levels for every function
    let kv_cache: std::collections::HashMap<u32, KnotVector> = (0..=4)
        .map(|l| {
            (
                l,
                tsbpx::tspline::LineLevel { degree: 3, n: 8, level: l }.knot_vector(),
            )
        })
        .collect();
    for f in space.functions().iter().step_by(7) {
        let lx = f.hv.iter().map(|d| d.exponent()).max().unwrap();
        let ly = f.vv.iter().map(|d| d.exponent()).max().unwrap();
        let e = embed_function(f, degree, n, lx, ly).unwrap();
        let kvx = &kv_cache[&lx];
        let kvy = &kv_cache[&ly];
        for _ in 0..50 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let direct = f.value(x, y);
            let expanded: f64 = e
                .iter()
                .map(|&((i, j), c)| {
                    c * kvx.local(i as usize).eval(x) * kvy.local(j as usize).eval(y)
                })
                .sum();
            assert!(
                (direct - expanded).abs() < 1e-13,
                "embedding mismatch at ({x},{y}): {direct} vs {expanded}"
            );
        }
    }
}

#[test]
fn change_of_basis_identity_case() {
    let mesh = corner_refined_mesh(2, 7, 3);
    let space = TSplineSpace::build(&mesh).unwrap();
    let cols = change_of_basis(space.functions(), &space).unwrap();
    for (j, col) in cols.iter().enumerate() {
        assert_eq!(col.len(), 1, "column {j} should be a unit vector");
        assert_eq!(col[0].0, j);
        assert!((col[0].1 - 1.0).abs() < 1e-10);
    }
}

#[test]
fn change_of_basis_coarse_into_fine_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let coarse_space = TSplineSpace::build(&tensor_mesh(2, 7)).unwrap();
    let fine_mesh = corner_refined_mesh(2, 7, 5);
    let fine_space = TSplineSpace::build(&fine_mesh).unwrap();
    let cols = change_of_basis(coarse_space.functions(), &fine_space).unwrap();
    for (j, f) in coarse_space.functions().iter().enumerate().step_by(5) {
        for _ in 0..100 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let direct = f.value(x, y);
            let expanded: f64 = cols[j]
                .iter()
                .map(|&(i, c)| c * fine_space.functions()[i].value(x, y))
                .sum();
            assert!(
                (direct - expanded).abs() < 1e-10,
                "column {j} at ({x},{y}): {direct} vs {expanded}"
            );
        }
    }
    // constants map to constants: sum of columns weighted by 1 = all-ones
    let mut ones = vec![0.0; fine_space.dim()];
    for col in &cols {
        for &(i, c) in col {
            ones[i] += c;
        }
    }
    for v in ones {
        assert!((v - 1.0).abs() < 1e-10);
    }
}

#[test]
fn projector_reproduces_space_members_and_constants() {
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let mesh = corner_refined_mesh(3, 8, 4);
    let space = TSplineSpace::build(&mesh).unwrap();
    let coeffs: Vec<f64> = (0..space.dim()).map(|_| rng.gen::<f64>() - 0.5).collect();
    let input = SplineInput::from_space(&space, &coeffs);
    let out = projector(&space, &input).unwrap();
    for (a, b) in coeffs.iter().zip(&out) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    let ones = projector(&space, &ConstInput(1.0)).unwrap();
    for v in ones {
        assert!((v - 1.0).abs() < 1e-10);
    }
}

#[test]
fn level_sets_initial_step_is_full_basis_and_replay_consistent() {
    let mesh = corner_refined_mesh(2, 7, 4);
    let sets = level_sets(&mesh).unwrap();
    assert_eq!(sets.steps[0].added.len(), 49);
    // every step's added functions exist, removed ones are gone, and the
    // final collection equals the final space (validated inside level_sets).
    let space = TSplineSpace::build(&mesh).unwrap();
    let mut count = sets.steps[0].added.len() as i64;
    for step in &sets.steps[1..] {
        count += step.added.len() as i64 - step.removed.len() as i64;
        for f in &step.added {
            assert_eq!(f.generation, step.label, "derived generation disagrees");
        }
    }
    assert_eq!(count, space.dim() as i64);
}

#[test]
fn generation_gap_and_tiled_floor_on_refined_meshes() {
    for p in [2usize, 3] {
        let n = if p == 2 { 7 } else { 8 };
        let mesh = corner_refined_mesh(p, n, 6);
        assert!(mesh.generation_gap_audit() <= 1, "p={p}");
        let space = TSplineSpace::build(&mesh).unwrap();
        // admitted tiled-floor cell lengths per generation (index-space):
        // x-direction: 2^-ceil((g-?)/2) rules; checked via exponent bounds
        for f in space.functions() {
            let g = f.generation;
            for w in f.hv.windows(2) {
                let d = w[1].abs_diff(&w[0]);
                if mesh.param_equal(Axis::X, &w[0], &w[1]) {
                    continue;
                }
                let expected = if g % 2 == 0 {
                    vec![dy(1, g / 2)]
                } else {
                    vec![dy(1, (g + 1) / 2), dy(1, (g - 1) / 2)]
                };
                assert!(
                    expected.contains(&d),
                    "p={p} gen={g} x-cell length {d:?}"
                );
            }
            for w in f.vv.windows(2) {
                let d = w[1].abs_diff(&w[0]);
                if mesh.param_equal(Axis::Y, &w[0], &w[1]) {
                    continue;
                }
                let expected = if g % 2 == 0 {
                    if g == 0 {
                        vec![dy(1, 0)]
                    } else {
                        vec![dy(1, g / 2), dy(1, g / 2 - 1)]
                    }
                } else {
                    vec![dy(1, (g - 1) / 2)]
                };
                assert!(
                    expected.contains(&d),
                    "p={p} gen={g} y-cell length {d:?}"
                );
            }
        }
    }
}
