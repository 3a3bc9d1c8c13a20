//! Depth-first search over per-level refinement-square sizes: at each level,
//! all elements of the current finest generation inside `[0, s]^2` are
//! refined with admissibility closure; prefixes are kept only when the dof
//! count matches the reference column. Prints every match so the size rule
//! can be identified.

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

fn candidates(mesh: &TMesh, cap: &DyadicIndex) -> Vec<DyadicIndex> {
    let finest = mesh.elements().map(|(_, g)| g).max().unwrap_or(0);
    let mut cs: Vec<DyadicIndex> = mesh
        .elements()
        .filter(|(_, g)| *g == finest)
        .map(|(r, _)| r.hi.x.max(r.hi.y))
        .filter(|c| c <= cap)
        .collect();
    cs.sort();
    cs.dedup();
    cs
}

fn search(
    mesh: &TMesh,
    level: usize,
    cap: &DyadicIndex,
    path: &mut Vec<DyadicIndex>,
    targets: &[usize],
) {
    // table starts at level 2: targets[k] is the dof count at level k+2
    if level >= targets.len() + 1 {
        println!("  MATCH path {path:?}");
        return;
    }
    for s in candidates(mesh, cap).into_iter().rev() {
        let mut next = mesh.clone();
        if !refine_square(&mut next, &s) {
            continue;
        }
        let d = dofs(&next);
        if level == 1 { println!("  try gen1 s={s:?} dofs={d}"); }
        if targets[level - 1] != d {
            continue;
        }
        path.push(s);
        println!("  gen {level} s={s:?} dofs={d} path={path:?}");
        search(&next, level + 1, &s, path, targets);
        path.pop();
    }
}

fn main() {
    let cases: [(usize, i64, Vec<usize>); 3] = [
        (2, 9, vec![85, 135, 216, 344, 569]),
        (3, 11, vec![137, 215, 325, 496, 768]),
        (4, 14, vec![234, 339, 495, 705, 1047]),
    ];
    for (p, n, targets) in cases {
        println!("== degree {p} targets {targets:?}");
        let mesh = TMesh::initial((p, p), (n, n)).unwrap();
        let cap = DyadicIndex::from_integer(n + p as i64);
        let mut path = Vec::new();
        search(&mesh, 1, &cap, &mut path, &targets);
    }
}
