//! SVG heatmap of a [`PhaseGrid`].
//!
//! Columns are `mu`, rows are `sigma` (increasing upwards). Cells use a
//! blue-white-red diverging scale with white at 0.5.

use std::fmt::Write;

use crate::omega::PhaseGrid;

const PLOT: f64 = 480.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const BAR_WIDTH: f64 = 18.0;
const BLUE: [f64; 3] = [59.0, 76.0, 192.0];
const RED: [f64; 3] = [180.0, 4.0, 38.0];

/// Colour for a probability in [0, 1].
pub fn diverging_color(value: f64) -> String {
    let v = if value.is_nan() {
        0.5
    } else {
        value.clamp(0.0, 1.0)
    };
    let (end, t) = if v < 0.5 {
        (BLUE, (0.5 - v) * 2.0)
    } else {
        (RED, (v - 0.5) * 2.0)
    };
    let mix = |c: f64| (255.0 + (c - 255.0) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(end[0]), mix(end[1]), mix(end[2]))
}

pub fn render_svg(grid: &PhaseGrid, title: &str) -> String {
    let nx = grid.mu_axis.len();
    let ny = grid.sigma_axis.len();
    let cw = PLOT / nx as f64;
    let ch = PLOT / ny as f64;
    let width = LEFT + PLOT + 100.0;
    let height = TOP + PLOT + 60.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + PLOT / 2.0,
        escape(title)
    );
    for (i, column) in grid.cells.iter().enumerate() {
        for (j, cell) in column.iter().enumerate() {
            let x = LEFT + i as f64 * cw;
            let y = TOP + PLOT - (j + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"><title>mu={:.4} sigma={:.4} omega={:.4}</title></rect>"#,
                cw + 0.05,
                ch + 0.05,
                diverging_color(cell.value),
                grid.mu_axis[i],
                grid.sigma_axis[j],
                cell.value
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );

    for k in tick_indices(nx) {
        let x = LEFT + (k as f64 + 0.5) * cw;
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{:.2}</text>"#,
            TOP + PLOT + 16.0,
            grid.mu_axis[k]
        );
    }
    for k in tick_indices(ny) {
        let y = TOP + PLOT - (k as f64 + 0.5) * ch;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.2}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            grid.sigma_axis[k]
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="16">μ</text>"#,
        LEFT + PLOT / 2.0,
        TOP + PLOT + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" font-size="16">σ</text>"#,
        TOP + PLOT / 2.0
    );

    // colour bar
    let bx = LEFT + PLOT + 30.0;
    let segments = 50;
    let seg_h = PLOT / segments as f64;
    for k in 0..segments {
        let v = (k as f64 + 0.5) / segments as f64;
        let y = TOP + PLOT - (k + 1) as f64 * seg_h;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.1}" y="{y:.3}" width="{BAR_WIDTH}" height="{:.3}" fill="{}"/>"#,
            seg_h + 0.05,
            diverging_color(v)
        );
    }
    for v in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = TOP + PLOT - v * PLOT;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{v:.2}</text>"#,
            bx + BAR_WIDTH + 4.0,
            y + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_indices(len: usize) -> Vec<usize> {
    let stride = len.div_ceil(6).max(1);
    let mut ticks: Vec<usize> = (0..len).step_by(stride).collect();
    if ticks.last() != Some(&(len - 1)) {
        ticks.push(len - 1);
    }
    ticks
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::OmegaEstimate;

    #[test]
    fn color_scale_is_centered() {
        assert_eq!(diverging_color(0.5), "#ffffff");
        assert_eq!(diverging_color(0.0), "#3b4cc0");
        assert_eq!(diverging_color(1.0), "#b40426");
    }

    #[test]
    fn svg_has_one_rect_per_cell_and_axis_labels() {
        let cell = OmegaEstimate {
            value: 0.7,
            std_error: 0.01,
            reps: 10,
        };
        let grid = PhaseGrid {
            mu_axis: vec![0.0, 1.0, 2.0],
            sigma_axis: vec![0.5, 1.0],
            cells: vec![vec![cell; 2]; 3],
        };
        let svg = render_svg(&grid, "test <grid>");
        assert_eq!(svg.matches("<title>mu=").count(), 6);
        assert!(svg.contains(">μ</text>"));
        assert!(svg.contains(">σ</text>"));
        assert!(svg.contains("test &lt;grid&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
