//! Explores corner-refinement driver parameters against the reference dof
//! columns of the square benchmark. Run with `--release`.

use tsbpx::assembly::interior_functions;
use tsbpx::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use tsbpx::refine::corner_refinement_step;
use tsbpx::tmesh::TMesh;
use tsbpx::tspline::TSplineSpace;

fn dofs(mesh: &TMesh) -> usize {
    let space = TSplineSpace::build(mesh).unwrap();
    interior_functions(&space).len()
}

fn max_gen(mesh: &TMesh) -> u32 {
    mesh.elements().map(|(_, g)| g).max().unwrap_or(0)
}

fn main() {
    let cases: [(usize, i64, [usize; 7]); 3] = [
        (2, 7, [85, 135, 216, 344, 569, 961, 1690]),
        (3, 8, [137, 215, 325, 496, 768, 1233, 2045]),
        (4, 10, [234, 339, 495, 705, 1047, 1575, 2505]),
    ];
    for (p, n, targets) in cases {
        let m = n + p as i64;
        println!("== degree {p}, n {n}, targets (levels 2..8): {targets:?}");
        // family A: maximal admissible square, first extent capped at s1
        for s1 in 3..=m {
            let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
            let mut seq = Vec::new();
            for _ in 0..8 {
                if corner_refinement_step(&mut mesh, s1).is_err() {
                    break;
                }
                seq.push((max_gen(&mesh), dofs(&mesh)));
            }
            println!("  maxsq s1={s1}: {seq:?}");
        }
        // family B: fixed square with closure
        for s1 in 3..=m {
            let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
            let mut seq = Vec::new();
            for _ in 0..8 {
                let square = IndexRect::new(
                    IndexVec2::new(DyadicIndex::zero(), DyadicIndex::zero()),
                    IndexVec2::new(
                        DyadicIndex::from_integer(s1),
                        DyadicIndex::from_integer(s1),
                    ),
                );
                let finest = max_gen(&mesh);
                let targets: Vec<IndexRect> = mesh
                    .elements()
                    .filter(|(r, g)| *g == finest && square.contains_rect(r))
                    .map(|(r, _)| *r)
                    .collect();
                if targets.is_empty() {
                    break;
                }
                for rect in &targets {
                    if mesh.contains(rect) {
                        mesh.refine_admissible(rect).unwrap();
                    }
                }
                seq.push((max_gen(&mesh), dofs(&mesh)));
            }
            println!("  fixsq s1={s1}: {seq:?}");
        }
    }
}
