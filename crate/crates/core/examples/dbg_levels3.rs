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
    for take in 1..=batches.len() {
        let prefix: Vec<_> = batches[..take].to_vec();
        let result = std::panic::catch_unwind(|| {
            let sets = function_sets_for_batches((p, p), (n, n), &prefix).unwrap();
            sets.steps.iter().map(|s| s.added.len() as i64 - s.removed.len() as i64).sum::<i64>()
        });
        match result {
            Ok(net) => println!("prefix {take}: net {net}"),
            Err(_) => println!("prefix {take}: PANIC"),
        }
    }
    let _ = TSplineSpace::build(&mesh);
}
