use pack_core::{Instance, PackingResult};
use std::fmt::Write as _;

const CELL: f64 = 32.0;
const MARGIN: f64 = 12.0;

/// Qualitative palette; slices of one item share a color via `id % len`.
const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac", "#2f4b7c", "#a05195",
];

/// Renders a packing as SVG: one filled rectangle group per item (an item's
/// non-contiguous row slices share its color) over a cell grid, with the
/// occupied `W~ x H~` envelope outlined in dashed strokes.
pub fn render_svg(result: &PackingResult, instance: &Instance) -> String {
    let width = instance.w_star;
    let height = result.h_tilde.max(1);
    let w_tilde = result
        .placements
        .iter()
        .map(|p| p.x + instance.items[p.item].w)
        .max()
        .unwrap_or(0);
    let canvas_w = 2.0 * MARGIN + width as f64 * CELL;
    let canvas_h = 2.0 * MARGIN + height as f64 * CELL;
    // Grid row r (bottom-up) maps to SVG y top-down.
    let y_of = |row_top: usize| MARGIN + (height - row_top) as f64 * CELL;

    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{canvas_w}" height="{canvas_h}" viewBox="0 0 {canvas_w} {canvas_h}">"#
    )
    .expect("string write");
    svg.push('\n');
    write!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="#fbfbfb" stroke="#ddd"/>"##,
        width as f64 * CELL,
        height as f64 * CELL
    )
    .expect("string write");
    svg.push('\n');

    for placement in &result.placements {
        let item = &instance.items[placement.item];
        let color = PALETTE[placement.item % PALETTE.len()];
        writeln!(svg, r##"<g fill="{color}" stroke="#333" stroke-width="1">"##)
            .expect("string write");
        // Merge contiguous rows of one placement into single rectangles.
        let mut run_start = 0;
        while run_start < placement.rows.len() {
            let mut run_end = run_start;
            while run_end + 1 < placement.rows.len()
                && placement.rows[run_end + 1] == placement.rows[run_end] + 1
            {
                run_end += 1;
            }
            let rows = run_end - run_start + 1;
            writeln!(
                svg,
                r#"  <rect x="{}" y="{}" width="{}" height="{}"/>"#,
                MARGIN + placement.x as f64 * CELL,
                y_of(placement.rows[run_end] + 1),
                item.w as f64 * CELL,
                rows as f64 * CELL
            )
            .expect("string write");
            run_start = run_end + 1;
        }
        let label_row = placement.rows[0];
        writeln!(
            svg,
            r##"  <text x="{}" y="{}" fill="#000" stroke="none" font-size="12" font-family="sans-serif">{}</text>"##,
            MARGIN + placement.x as f64 * CELL + 4.0,
            y_of(label_row + 1) + 14.0,
            placement.item
        )
        .expect("string write");
        svg.push_str("</g>\n");
    }

    if w_tilde > 0 {
        writeln!(
            svg,
            r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#000" stroke-width="2" stroke-dasharray="8 5"/>"##,
            w_tilde as f64 * CELL,
            result.h_tilde as f64 * CELL
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    svg
}
