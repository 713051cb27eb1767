//! Single-frame SVG of a plan: grid, task starts and goals, and each
//! agent's trajectory with its start and end marked.

use std::fmt::Write as _;

use cttapf::domain::{Cell, Instance, Solution};

const CELL: i32 = 32;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Top-left pixel of a cell; y grows upward in the grid.
fn px(inst: &Instance, c: Cell) -> (i32, i32) {
    (c.x * CELL, (inst.map.height() as i32 - 1 - c.y) * CELL)
}

fn centre(inst: &Instance, c: Cell) -> (i32, i32) {
    let (x, y) = px(inst, c);
    (x + CELL / 2, y + CELL / 2)
}

pub fn svg(inst: &Instance, sol: &Solution) -> String {
    let (w, h) = (inst.map.width() as i32 * CELL, inst.map.height() as i32 * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{}" viewBox="0 0 {w} {}" font-family="monospace" font-size="10">"#,
        h + 20,
        h + 20
    );
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#ffffff" stroke="#333"/>"##);
    for y in 0..inst.map.height() as i32 {
        for x in 0..inst.map.width() as i32 {
            let c = Cell::new(x, y);
            let (px_, py) = px(inst, c);
            let fill = if inst.map.is_passable(c) { "none" } else { "#444" };
            let _ = writeln!(
                s,
                r##"<rect x="{px_}" y="{py}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#ddd"/>"##
            );
        }
    }
    for task in &inst.tasks {
        for (cells, fill) in [(task.starts(), "#fde9a9"), (task.goals(), "#c9e8c2")] {
            for &c in cells {
                let (x, y) = px(inst, c);
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" opacity="0.8"/>"#,
                    x + 2,
                    y + 2,
                    CELL - 4,
                    CELL - 4
                );
            }
            let (x, y) = centre(inst, cells[0]);
            let tag = if fill == "#fde9a9" { "S" } else { "G" };
            let _ = writeln!(s, r#"<text x="{}" y="{}">{tag}{}</text>"#, x - 8, y - 4, task.id);
        }
    }
    for (i, path) in sol.paths.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = path
            .vertices
            .iter()
            .map(|&c| {
                let (x, y) = centre(inst, c);
                // Offset each agent slightly so shared corridors stay legible.
                format!("{},{}", x + (i as i32 % 5) - 2, y + (i as i32 % 5) - 2)
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2" opacity="0.8"/>"#,
            points.join(" ")
        );
        let (sx, sy) = centre(inst, path.vertices[0]);
        let _ = writeln!(s, r#"<circle cx="{sx}" cy="{sy}" r="6" fill="{colour}"/>"#);
        let _ = writeln!(s, r##"<text x="{}" y="{}" fill="#fff">{i}</text>"##, sx - 3, sy + 3);
        let (ex, ey) = centre(inst, path.last());
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="8" height="8" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            ex - 4,
            ey - 4
        );
    }
    let _ = writeln!(s, r#"<text x="4" y="{}">soc {}</text>"#, h + 14, sol.soc);
    s.push_str("</svg>\n");
    s
}
