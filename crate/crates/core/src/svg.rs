//! Deterministic SVG export of T-meshes, extended T-meshes and Bézier meshes.
//! Edges are colored by the generation of the bisection that created them;
//! the index-domain views show repeated boundary knots with their natural
//! unit separation.

use crate::tmesh::{Axis, TMesh};
use crate::tspline::TSplineSpace;

const COLORS: [&str; 10] = [
    "#000000", "#d62728", "#1f77b4", "#e377c2", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
    "#7f7f7f", "#bcbd22",
];

fn color(gen: u32) -> &'static str {
    COLORS[(gen as usize) % COLORS.len()]
}

struct Canvas {
    out: String,
    scale: f64,
    height: f64,
}

impl Canvas {
    fn new(width: f64, height: f64, scale: f64) -> Self {
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
            width * scale + 20.0,
            height * scale + 20.0,
            width * scale + 20.0,
            height * scale + 20.0
        ));
        Canvas { out, scale, height }
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str, width: f64, dashed: bool) {
        let dash = if dashed { " stroke-dasharray=\"4 3\"" } else { "" };
        self.out.push_str(&format!(
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"{}\" stroke-width=\"{:.2}\"{}/>\n",
            10.0 + x0 * self.scale,
            10.0 + (self.height - y0) * self.scale,
            10.0 + x1 * self.scale,
            10.0 + (self.height - y1) * self.scale,
            stroke,
            width,
            dash
        ));
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// The T-mesh in the index domain, element edges colored by the generation
/// of the bisection that created them (initial grid in black).
pub fn mesh_svg(mesh: &TMesh) -> String {
    let (m1, m2) = mesh.extents();
    let mut canvas = Canvas::new(m1 as f64, m2 as f64, 40.0);
    // initial grid
    for i in 0..=m1 {
        canvas.line(i as f64, 0.0, i as f64, m2 as f64, color(0), 1.0, false);
    }
    for j in 0..=m2 {
        canvas.line(0.0, j as f64, m1 as f64, j as f64, color(0), 1.0, false);
    }
    // replay history to color each new edge by its generation
    let mut replay = TMesh::initial(mesh.degree(), mesh.basis_counts()).unwrap();
    for bis in if mesh.parity_respected() {
        mesh.history_by_generation()
    } else {
        mesh.history().to_vec()
    } {
        let children = replay.bisection_children(&bis.parent, bis.direction);
        if children.len() == 2 {
            match bis.direction {
                Axis::X => {
                    let x = crate::dyadic::DyadicIndex::midpoint(&bis.parent.lo.x, &bis.parent.hi.x);
                    canvas.line(
                        x.to_f64(),
                        bis.parent.lo.y.to_f64(),
                        x.to_f64(),
                        bis.parent.hi.y.to_f64(),
                        color(bis.generation),
                        1.0,
                        false,
                    );
                }
                Axis::Y => {
                    let y = crate::dyadic::DyadicIndex::midpoint(&bis.parent.lo.y, &bis.parent.hi.y);
                    canvas.line(
                        bis.parent.lo.x.to_f64(),
                        y.to_f64(),
                        bis.parent.hi.x.to_f64(),
                        y.to_f64(),
                        color(bis.generation),
                        1.0,
                        false,
                    );
                }
            }
        }
        replay.bisect_element_dir(&bis.parent, bis.direction).unwrap();
    }
    canvas.finish()
}

/// The extended T-mesh: the mesh plus dashed T-junction extensions.
pub fn extended_mesh_svg(mesh: &TMesh, space: &TSplineSpace) -> String {
    let mut base = mesh_svg(mesh);
    let closing = base.rfind("</svg>").unwrap();
    base.truncate(closing);
    let (_, m2) = mesh.extents();
    let scale = 40.0;
    let mut lines = String::new();
    for ext in space.extensions() {
        let (x0, y0, x1, y1) = if ext.horizontal {
            (
                ext.span.0.to_f64(),
                ext.junction.y.to_f64(),
                ext.span.1.to_f64(),
                ext.junction.y.to_f64(),
            )
        } else {
            (
                ext.junction.x.to_f64(),
                ext.span.0.to_f64(),
                ext.junction.x.to_f64(),
                ext.span.1.to_f64(),
            )
        };
        lines.push_str(&format!(
            "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#666666\" stroke-width=\"0.8\" stroke-dasharray=\"4 3\"/>\n",
            10.0 + x0 * scale,
            10.0 + (m2 as f64 - y0) * scale,
            10.0 + x1 * scale,
            10.0 + (m2 as f64 - y1) * scale,
        ));
    }
    base.push_str(&lines);
    base.push_str("</svg>\n");
    base
}

/// The Bézier mesh in the parametric domain.
pub fn bezier_svg(space: &TSplineSpace) -> String {
    let mut canvas = Canvas::new(1.0, 1.0, 400.0);
    for cell in space.bezier_mesh() {
        let (x0, x1, y0, y1) = cell.param;
        canvas.line(x0, y0, x1, y0, "#000000", 0.8, false);
        canvas.line(x0, y1, x1, y1, "#000000", 0.8, false);
        canvas.line(x0, y0, x0, y1, "#000000", 0.8, false);
        canvas.line(x1, y0, x1, y1, "#000000", 0.8, false);
    }
    canvas.finish()
}
