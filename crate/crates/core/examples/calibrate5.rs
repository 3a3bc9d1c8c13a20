//! Verifies the corner driver against the reference dof columns, levels 2-9.

use tsbpx::assembly::interior_functions;
use tsbpx::refine::corner_refinement_step;
use tsbpx::tmesh::TMesh;
use tsbpx::tspline::TSplineSpace;

fn main() {
    let cases: [(usize, i64, [usize; 8]); 3] = [
        (2, 9, [85, 135, 216, 344, 569, 961, 1690, 3042]),
        (3, 11, [137, 215, 325, 496, 768, 1233, 2045, 3530]),
        (4, 14, [234, 339, 495, 705, 1047, 1575, 2505, 4101]),
    ];
    for (p, n, targets) in cases {
        let mut mesh = TMesh::initial((p, p), (n, n)).unwrap();
        print!("p={p}: ");
        let mut all_ok = true;
        for target in targets {
            corner_refinement_step(&mut mesh, n - 1).unwrap();
            let space = TSplineSpace::build(&mesh).unwrap();
            let d = interior_functions(&space).len();
            let ok = d == target;
            all_ok &= ok;
            print!("{d}{} ", if ok { "=" } else { "!" });
        }
        println!("{}", if all_ok { " ALL MATCH" } else { " MISMATCH" });
    }
}
