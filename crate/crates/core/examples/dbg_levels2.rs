use tsbpx::multilevel::aligned_micro_batches;
use tsbpx::refine::corner_refinement_step;
use tsbpx::tmesh::TMesh;
use tsbpx::tspline::{function_sets_for_batches, TSplineSpace};
use std::collections::BTreeSet;

fn main() {
    let (p, n) = (2usize, 9i64);
    let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
    corner_refinement_step(&mut mesh, n - 1).unwrap();
    let batches = aligned_micro_batches(&mesh);
    // take only the first batch and compare
    let first = vec![batches[0].clone()];
    let sets = match std::panic::catch_unwind(|| {
        function_sets_for_batches((p, p), (n, n), &first).unwrap()
    }) {
        Ok(s) => s,
        Err(_) => return,
    };
    let windowed: BTreeSet<_> = sets.steps[1].added.iter().map(|f| (f.anchor, f.key())).collect();
    // full rebuild diff
    let mut replay = TMesh::initial((p, p), (n, n)).unwrap();
    let before: BTreeSet<_> = TSplineSpace::build(&replay).unwrap().functions().iter().map(|f| f.key()).collect();
    for b in &batches[0].1 {
        replay.bisect_element_dir(&b.parent, b.direction).unwrap();
    }
    let space = TSplineSpace::build(&replay).unwrap();
    let full: BTreeSet<_> = space
        .functions()
        .iter()
        .filter(|f| !before.contains(&f.key()))
        .map(|f| (f.anchor, f.key()))
        .collect();
    println!("windowed {} full {}", windowed.len(), full.len());
    for (a, k) in full.difference(&windowed) {
        println!("missed: {a:?} {k:?}");
    }
}
