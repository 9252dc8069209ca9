//! Static SVG rendering of a planar region grid.

use std::fmt::Write;

use basinscope::region::RegionGrid;

const PLOT: f64 = 600.0;
const MARGIN: f64 = 48.0;

struct Frame {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.lo[0]) / (self.hi[0] - self.lo[0]) * PLOT
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN + (self.hi[1] - y) / (self.hi[1] - self.lo[1]) * PLOT
    }
}

fn num(x: f64) -> String {
    format!("{x:.2}")
}

/// Layers, bottom to top: `N_p^c` fill, `G_p` outline, optional oracle
/// boundary, axes and labels.
pub fn render(grid: &RegionGrid, boundary: Option<&[[f64; 2]]>) -> String {
    let w = &grid.window;
    assert_eq!(w.dim(), 2, "SVG output is planar");
    let f = Frame {
        lo: [w.lower[0], w.lower[1]],
        hi: [w.upper[0], w.upper[1]],
    };
    let res = w.resolution;
    let (dx, dy) = (w.cell_width(0), w.cell_width(1));
    let size = PLOT + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r#"<rect width="{size}" height="{size}" fill="white"/>"#);

    // row runs keep the file small at high resolution
    let _ = writeln!(s, r##"<g fill="#b4b4b4" stroke="none">"##);
    for row in 0..res {
        let mut col = 0;
        while col < res {
            if !grid.in_npc[row * res + col] {
                col += 1;
                continue;
            }
            let start = col;
            while col < res && grid.in_npc[row * res + col] {
                col += 1;
            }
            let x0 = f.px(w.lower[0] + start as f64 * dx);
            let x1 = f.px(w.lower[0] + col as f64 * dx);
            let y0 = f.py(w.lower[1] + (row + 1) as f64 * dy);
            let y1 = f.py(w.lower[1] + row as f64 * dy);
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                num(x0),
                num(y0),
                num(x1 - x0),
                num(y1 - y0)
            );
        }
    }
    s.push_str("</g>\n");

    let mut path = String::new();
    let inside = |c: isize, r: isize| {
        c >= 0 && r >= 0 && (c as usize) < res && (r as usize) < res && grid.in_gp[r as usize * res + c as usize]
    };
    for r in 0..res as isize {
        for c in 0..res as isize {
            if !inside(c, r) {
                continue;
            }
            let xl = w.lower[0] + c as f64 * dx;
            let yb = w.lower[1] + r as f64 * dy;
            let edges = [
                (!inside(c - 1, r), (xl, yb), (xl, yb + dy)),
                (!inside(c + 1, r), (xl + dx, yb), (xl + dx, yb + dy)),
                (!inside(c, r - 1), (xl, yb), (xl + dx, yb)),
                (!inside(c, r + 1), (xl, yb + dy), (xl + dx, yb + dy)),
            ];
            for (open, a, b) in edges {
                if open {
                    let _ = write!(
                        path,
                        "M{} {}L{} {}",
                        num(f.px(a.0)),
                        num(f.py(a.1)),
                        num(f.px(b.0)),
                        num(f.py(b.1))
                    );
                }
            }
        }
    }
    let _ = writeln!(
        s,
        r##"<path d="{path}" fill="none" stroke="#404040" stroke-width="0.7"/>"##
    );

    if let Some(poly) = boundary {
        let pts: Vec<String> = poly
            .iter()
            .map(|p| format!("{},{}", num(f.px(p[0])), num(f.py(p[1]))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2.5"/>"#,
            pts.join(" ")
        );
    }

    let (x0, y0) = (f.px(0.0), f.py(0.0));
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1" fill="none"><rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}"/><line x1="{MARGIN}" y1="{y}" x2="{e}" y2="{y}"/><line x1="{x}" y1="{MARGIN}" x2="{x}" y2="{e}"/></g>"#,
        y = num(y0),
        x = num(x0),
        e = MARGIN + PLOT
    );
    let _ = writeln!(
        s,
        r#"<g font-family="sans-serif" font-size="12" fill="black"><text x="{}" y="{}">x1</text><text x="{}" y="{}">x2</text><text x="{MARGIN}" y="{}">{}</text><text x="{}" y="{}" text-anchor="end">{}</text><text x="{}" y="{}" text-anchor="end">{}</text><text x="{}" y="{}" text-anchor="end">{}</text></g>"#,
        num(MARGIN + PLOT + 6.0),
        num(y0 + 4.0),
        num(x0 + 4.0),
        num(MARGIN - 6.0),
        num(MARGIN + PLOT + 16.0),
        num(f.lo[0]),
        num(MARGIN + PLOT),
        num(MARGIN + PLOT + 16.0),
        num(f.hi[0]),
        num(MARGIN - 4.0),
        num(MARGIN + PLOT),
        num(f.lo[1]),
        num(MARGIN - 4.0),
        num(MARGIN + 10.0),
        num(f.hi[1]),
    );
    s.push_str("</svg>\n");
    s
}
