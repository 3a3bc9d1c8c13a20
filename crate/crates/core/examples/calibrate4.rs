//! Reachable generation-2 dof counts around the references, all degrees.

use tsbpx::assembly::interior_functions;
use tsbpx::dyadic::{DyadicIndex, IndexRect, IndexVec2};
use tsbpx::tmesh::TMesh;
use tsbpx::tspline::TSplineSpace;

fn dofs(mesh: &TMesh) -> usize {
    interior_functions(&TSplineSpace::build(mesh).unwrap()).len()
}

fn refine_square(mesh: &mut TMesh, s: &DyadicIndex) -> bool {
    let finest = mesh.elements().map(|(_, g)| g).max().unwrap_or(0);
    let square = IndexRect::new(
        IndexVec2::new(DyadicIndex::zero(), DyadicIndex::zero()),
        IndexVec2::new(*s, *s),
    );
    let targets: Vec<IndexRect> = mesh
        .elements()
        .filter(|(r, g)| *g == finest && square.contains_rect(r))
        .map(|(r, _)| *r)
        .collect();
    if targets.is_empty() {
        return false;
    }
    for rect in &targets {
        if mesh.contains(rect) {
            mesh.refine_admissible(rect).unwrap();
        }
    }
    true
}

fn main() {
    for (p, n, target) in [(2usize, 9i64, 85usize), (3, 11, 137), (4, 14, 234)] {
        let m = n + p as i64;
        println!("== p={p} target(level2)={target} uniform2={}", {
            let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
            let s = DyadicIndex::from_integer(m);
            refine_square(&mut mesh, &s);
            refine_square(&mut mesh, &s);
            dofs(&mesh)
        });
        let mut mesh1 = TMesh::initial((p, p), (n, n)).unwrap();
        refine_square(&mut mesh1, &DyadicIndex::from_integer(m));
        for s2 in (2 * m - 8)..=(2 * m) {
            let mut mesh2 = mesh1.clone();
            if !refine_square(&mut mesh2, &DyadicIndex::new(s2, 1)) {
                continue;
            }
            println!("  s2={}/2 dofs={}", s2, dofs(&mesh2));
        }
    }
}
