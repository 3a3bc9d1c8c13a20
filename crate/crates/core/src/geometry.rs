//! Geometry maps from the parametric square to physical patches.
//!
//! Two kinds are supported: the identity square and biquadratic Bernstein
//! patches, three of which form the committed curved L-shaped domain with
//! the reentrant corner at the image of the parametric origin.

/// A geometry map on `(0,1)^2`.
#[derive(Clone, Debug)]
pub enum GeometryMap {
    IdentitySquare,
    /// Biquadratic Bernstein patch: `ctrl[i][j]` moves with `x^i y^j`.
    Bernstein { ctrl: [[[f64; 2]; 3]; 3] },
}

fn bernstein2(t: f64) -> [f64; 3] {
    let s = 1.0 - t;
    [s * s, 2.0 * s * t, t * t]
}

fn bernstein2_deriv(t: f64) -> [f64; 3] {
    [2.0 * t - 2.0, 2.0 - 4.0 * t, 2.0 * t]
}

impl GeometryMap {
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            GeometryMap::IdentitySquare => (x, y),
            GeometryMap::Bernstein { ctrl } => {
                let bx = bernstein2(x);
                let by = bernstein2(y);
                let mut out = [0.0; 2];
                for (i, bxi) in bx.iter().enumerate() {
                    for (j, byj) in by.iter().enumerate() {
                        out[0] += bxi * byj * ctrl[i][j][0];
                        out[1] += bxi * byj * ctrl[i][j][1];
                    }
                }
                (out[0], out[1])
            }
        }
    }

    /// Jacobian `[[dX/dx, dX/dy], [dY/dx, dY/dy]]`.
    pub fn jacobian(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        match self {
            GeometryMap::IdentitySquare => [[1.0, 0.0], [0.0, 1.0]],
            GeometryMap::Bernstein { ctrl } => {
                let bx = bernstein2(x);
                let by = bernstein2(y);
                let dbx = bernstein2_deriv(x);
                let dby = bernstein2_deriv(y);
                let mut j = [[0.0; 2]; 2];
                for i in 0..3 {
                    for jj in 0..3 {
                        for d in 0..2 {
                            j[d][0] += dbx[i] * by[jj] * ctrl[i][jj][d];
                            j[d][1] += bx[i] * dby[jj] * ctrl[i][jj][d];
                        }
                    }
                }
                j
            }
        }
    }

    pub fn jacobian_det(&self, x: f64, y: f64) -> f64 {
        let j = self.jacobian(x, y);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }
}

/// Control net of the first curved-L patch, covering the sector from the
/// positive x-axis to the positive y-axis. Straight edges run from the
/// reentrant corner (the parametric origin) along both axes; the outer
/// boundary bulges outward. Committed as fixed data so results reproduce.
const CURVED_L_BASE: [[[f64; 2]; 3]; 3] = [
    [[0.0, 0.0], [0.0, 0.5], [0.0, 1.0]],
    [[0.5, 0.0], [0.62, 0.62], [0.44, 1.06]],
    [[1.0, 0.0], [1.06, 0.44], [0.92, 0.92]],
];

/// The three patches of the curved L-shaped domain. The middle patch is a
/// mirror image (negative Jacobian determinant) so that parametric meshes
/// match along both interfaces:
///
/// * patch 0 and patch 1 share their `x = 0` edges (the positive y-axis),
/// * patch 1 and patch 2 share their `y = 0` edges (the negative x-axis).
pub fn curved_l_patches() -> [GeometryMap; 3] {
    let mirror_x = |c: &[[[f64; 2]; 3]; 3]| {
        let mut out = *c;
        for row in out.iter_mut() {
            for p in row.iter_mut() {
                p[0] = -p[0];
            }
        }
        out
    };
    let negate = |c: &[[[f64; 2]; 3]; 3]| {
        let mut out = *c;
        for row in out.iter_mut() {
            for p in row.iter_mut() {
                p[0] = -p[0];
                p[1] = -p[1];
            }
        }
        out
    };
    [
        GeometryMap::Bernstein { ctrl: CURVED_L_BASE },
        GeometryMap::Bernstein { ctrl: mirror_x(&CURVED_L_BASE) },
        GeometryMap::Bernstein { ctrl: negate(&CURVED_L_BASE) },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_on;

    #[test]
    fn identity_map() {
        let g = GeometryMap::IdentitySquare;
        assert_eq!(g.eval(0.3, 0.7), (0.3, 0.7));
        assert_eq!(g.jacobian_det(0.3, 0.7), 1.0);
    }

    #[test]
    fn curved_l_edges_match_axes() {
        let [p0, p1, p2] = curved_l_patches();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            // interface 0: x = 0 edges of patches 0 and 1 trace the y-axis
            let a = p0.eval(0.0, t);
            let b = p1.eval(0.0, t);
            assert!((a.0 - 0.0).abs() < 1e-15 && (a.1 - t).abs() < 1e-15);
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
            // interface 1: y = 0 edges of patches 1 and 2 trace the negative x-axis
            let c = p1.eval(t, 0.0);
            let d = p2.eval(t, 0.0);
            assert!((c.0 + t).abs() < 1e-15 && c.1.abs() < 1e-15);
            assert!((c.0 - d.0).abs() < 1e-15 && (c.1 - d.1).abs() < 1e-15);
            // the outer straight edge of patch 0 lies on the positive x-axis
            let e = p0.eval(t, 0.0);
            assert!((e.1 - 0.0).abs() < 1e-15 && (e.0 - t).abs() < 1e-15);
        }
    }

    #[test]
    fn curved_l_jacobians_regular() {
        let (qx, _) = gauss_legendre_on(0.0, 1.0, 8);
        let patches = curved_l_patches();
        let expected_sign = [1.0, -1.0, 1.0];
        for (k, patch) in patches.iter().enumerate() {
            for &x in &qx {
                for &y in &qx {
                    let det = patch.jacobian_det(x, y);
                    assert!(
                        det * expected_sign[k] > 0.05,
                        "patch {k} det {det} at ({x},{y})"
                    );
                }
            }
        }
    }
}
