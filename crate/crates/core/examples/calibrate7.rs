//! Aligned-group counts after Dirichlet reduction.

use tsbpx::multilevel::aligned_micro_batches;
use tsbpx::refine::corner_refinement_step;
use tsbpx::tmesh::TMesh;
use tsbpx::tspline::function_sets_for_batches;

fn main() {
    let cases: [(usize, i64, [usize; 5]); 3] = [
        (2, 9, [6, 11, 20, 28, 43]),
        (3, 11, [8, 14, 24, 33, 49]),
        (4, 14, [9, 16, 28, 38, 56]),
    ];
    for (p, n, targets) in cases {
        let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
        print!("p={p}: ");
        for target in targets {
            corner_refinement_step(&mut mesh, n - 1).unwrap();
            let batches = aligned_micro_batches(&mesh);
            let sets = function_sets_for_batches(mesh.degree(), mesh.basis_counts(), &batches).unwrap();
            let effective = sets
                .steps
                .iter()
                .filter(|s| s.added.iter().any(|f| !f.nonzero_on_boundary()))
                .count();
            print!("{effective}{} ", if effective == target { "=" } else { "!" });
        }
        println!();
    }
}
