//! Prints the reachable dof counts at generation 2 for all square pairs.

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
    let (p, n) = (2usize, 7i64);
    let m = n + p as i64;
    for s1 in 3..=m {
        let mut mesh1 = TMesh::initial((p, p), (n, n)).unwrap();
        let s1d = DyadicIndex::from_integer(s1);
        refine_square(&mut mesh1, &s1d);
        let d1 = dofs(&mesh1);
        let mut line = format!("s1={s1} d1={d1}: ");
        for s2 in 3..=(2 * s1) {
            let mut mesh2 = mesh1.clone();
            let s2d = DyadicIndex::new(s2, 1);
            if !refine_square(&mut mesh2, &s2d) {
                continue;
            }
            line.push_str(&format!("(s2={}/2,{}) ", s2, dofs(&mesh2)));
        }
        println!("{line}");
    }
}
