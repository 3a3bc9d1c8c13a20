use tsbpx::multilevel::aligned_micro_batches;
use tsbpx::refine::corner_refinement_step;
use tsbpx::tmesh::TMesh;
use tsbpx::tspline::TSplineSpace;
use std::collections::BTreeSet;

fn main() {
    let (p, n) = (2usize, 9i64);
    let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
    corner_refinement_step(&mut mesh, n - 1).unwrap();
    let batches = aligned_micro_batches(&mesh);
    println!("{} batches", batches.len());
    // replay manually with full rebuilds
    let mut replay = TMesh::initial((p, p), (n, n)).unwrap();
    let mut prev: BTreeSet<_> = TSplineSpace::build(&replay)
        .unwrap()
        .functions()
        .iter()
        .map(|f| f.key())
        .collect();
    for (label, batch) in &batches {
        for b in batch {
            replay.bisect_element_dir(&b.parent, b.direction).unwrap();
        }
        let now: BTreeSet<_> = TSplineSpace::build(&replay)
            .unwrap()
            .functions()
            .iter()
            .map(|f| f.key())
            .collect();
        let added = now.difference(&prev).count();
        let removed = prev.difference(&now).count();
        println!("batch label {label} size {}: +{added} -{removed} (dim {})", batch.len(), now.len());
        prev = now;
    }
}
