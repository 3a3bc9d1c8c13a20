//! Aligned-group counts per level against the reference table.

use tsbpx::multilevel::aligned_micro_batches;
use tsbpx::refine::corner_refinement_step;
use tsbpx::tmesh::TMesh;

fn main() {
    // reference cumulative aligned-level counts at table levels 2..8
    let cases: [(usize, i64, [usize; 7]); 3] = [
        (2, 9, [6, 11, 20, 28, 43, 57, 84]),
        (3, 11, [8, 14, 24, 33, 49, 64, 92]),
        (4, 14, [9, 16, 28, 38, 56, 72, 102]),
    ];
    for (p, n, targets) in cases {
        let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
        print!("p={p}: ");
        for target in targets {
            corner_refinement_step(&mut mesh, n - 1).unwrap();
            let batches = aligned_micro_batches(&mesh);
            let total = 1 + batches.len(); // initial space plus groups
            print!("{total}{} ", if total == target { "=" } else { "!" });
        }
        println!();
    }
}
