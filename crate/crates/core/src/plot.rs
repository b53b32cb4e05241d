//! Minimal SVG heatmaps and line plots.

use std::fmt::Write;

/// Largest number of cells drawn per axis; larger fields are strided.
pub const MAX_CELLS: usize = 128;

const VIRIDIS: [(f64, f64, f64); 9] = [
    (68.0, 1.0, 84.0),
    (71.0, 44.0, 122.0),
    (59.0, 81.0, 139.0),
    (44.0, 113.0, 142.0),
    (33.0, 144.0, 141.0),
    (39.0, 173.0, 129.0),
    (92.0, 200.0, 99.0),
    (170.0, 220.0, 50.0),
    (253.0, 231.0, 37.0),
];

fn color(x: f64) -> String {
    if !x.is_finite() {
        return "#d0d0d0".into();
    }
    let x = x.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A row-major field over `x` (columns) and `y` (rows).
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub values: &'a [f64],
    /// Level lines drawn over the field, as (level, stroke colour).
    pub contours: Vec<(f64, &'a str)>,
    /// Direction field (radians, counter-clockwise from +x) drawn as arrows
    /// on a coarse lattice.
    pub arrows: Option<&'a [f64]>,
}

impl<'a> Heatmap<'a> {
    pub fn new(title: &'a str, x_label: &'a str, y_label: &'a str, x: &'a [f64], y: &'a [f64], values: &'a [f64]) -> Self {
        Heatmap { title, x_label, y_label, x, y, values, contours: Vec::new(), arrows: None }
    }

    /// Linear colour scale over the finite values, with a colorbar.
    pub fn render(&self) -> String {
        let (x, y, values) = (self.x, self.y, self.values);
        let (nx, ny) = (x.len(), y.len());
        let stride = |n: usize| n.div_ceil(MAX_CELLS).max(1);
        let (sx, sy) = (stride(nx), stride(ny));
        let cols: Vec<usize> = (0..nx).step_by(sx).collect();
        let rows: Vec<usize> = (0..ny).step_by(sy).collect();
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
        let span = if hi > lo { hi - lo } else { 1.0 };

        let (left, top, size) = (70.0, 40.0, 400.0);
        let (cw, ch) = (size / cols.len() as f64, size / rows.len() as f64);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#,
            w = left + size + 110.0,
            h = top + size + 50.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="22" font-size="14">{}</text>"#, left, escape(self.title));
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                let v = values[r * nx + c];
                // first row at the bottom
                let py = top + size - (ri + 1) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    left + ci as f64 * cw,
                    py,
                    cw + 0.05,
                    ch + 0.05,
                    color((v - lo) / span)
                );
            }
        }
        // cell centres in plot coordinates, indexed on the full grid
        let cx = |c: f64| left + (c / sx as f64 + 0.5) * cw;
        let cy = |r: f64| top + size - (r / sy as f64 + 0.5) * ch;
        for &(level, stroke) in &self.contours {
            let mut d = String::new();
            for ((c0, r0), (c1, r1)) in marching_squares(values, nx, ny, level) {
                let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", cx(c0), cy(r0), cx(c1), cy(r1));
            }
            if !d.is_empty() {
                let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#);
            }
        }
        if let Some(dirs) = self.arrows {
            let lattice = 12;
            let len = 0.35 * size / lattice as f64;
            for r in (0..lattice).map(|k| (2 * k + 1) * ny / (2 * lattice)) {
                for c in (0..lattice).map(|k| (2 * k + 1) * nx / (2 * lattice)) {
                    let (a, v) = (dirs[r * nx + c], values[r * nx + c]);
                    if !a.is_finite() || !v.is_finite() {
                        continue;
                    }
                    let (x0, y0) = (cx(c as f64), cy(r as f64));
                    let (dx, dy) = (len * a.cos(), -len * a.sin());
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1"/><circle cx="{:.2}" cy="{:.2}" r="1.6"/>"#,
                        x0 - dx,
                        y0 - dy,
                        x0 + dx,
                        y0 + dy,
                        x0 + dx,
                        y0 + dy
                    );
                }
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
        );
        for (frac, anchor) in [(0.0, "start"), (1.0, "end")] {
            if let (Some(xf), Some(yf)) = (x.first(), y.first()) {
                let xv = xf + frac * (x[nx - 1] - xf);
                let yv = yf + frac * (y[ny - 1] - yf);
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{}</text>"#,
                    left + frac * size,
                    top + size + 16.0,
                    num(xv)
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                    left - 6.0,
                    top + size - frac * size + 4.0,
                    num(yv)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + 0.5 * size,
            top + size + 36.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
            top + 0.5 * size,
            top + 0.5 * size,
            escape(self.y_label)
        );
        // colorbar
        let bx = left + size + 20.0;
        let steps = 64;
        for k in 0..steps {
            let f = k as f64 / (steps - 1) as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{bx}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
                top + size - (k + 1) as f64 * size / steps as f64,
                size / steps as f64 + 0.05,
                color(f)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{bx}" y="{top}" width="18" height="{size}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx + 24.0, top + 4.0, num(hi));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, bx + 24.0, top + size + 4.0, num(lo));
        s.push_str("</svg>\n");
        s
    }
}

type Segment = ((f64, f64), (f64, f64));

/// Level-line segments of a row-major field in (column, row) index
/// coordinates. Squares touching a non-finite value are skipped; saddles
/// are split by the centre average.
pub fn marching_squares(values: &[f64], nx: usize, ny: usize, level: f64) -> Vec<Segment> {
    let mut out = Vec::new();
    if nx < 2 || ny < 2 {
        return out;
    }
    let at = |c: usize, r: usize| values[r * nx + c];
    for r in 0..ny - 1 {
        for c in 0..nx - 1 {
            // corners counter-clockwise from bottom-left
            let corners = [(c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)];
            let v = corners.map(|(cc, rr)| at(cc, rr));
            if v.iter().any(|z| !z.is_finite()) {
                continue;
            }
            let above = v.map(|z| z >= level);
            let cross = |i: usize| -> Option<(f64, f64)> {
                let j = (i + 1) % 4;
                if above[i] == above[j] {
                    return None;
                }
                let f = (level - v[i]) / (v[j] - v[i]);
                let (a, b) = (corners[i], corners[j]);
                Some((a.0 as f64 + f * (b.0 as f64 - a.0 as f64), a.1 as f64 + f * (b.1 as f64 - a.1 as f64)))
            };
            let pts: Vec<(f64, f64)> = (0..4).filter_map(cross).collect();
            match pts.len() {
                2 => out.push((pts[0], pts[1])),
                4 => {
                    let centre_above = v.iter().sum::<f64>() / 4.0 >= level;
                    // edge k joins corners k and k+1; the corners on the
                    // opposite side from the centre get cut off
                    if centre_above == above[0] {
                        out.push((pts[0], pts[1]));
                        out.push((pts[2], pts[3]));
                    } else {
                        out.push((pts[3], pts[0]));
                        out.push((pts[1], pts[2]));
                    }
                }
                _ => {}
            }
        }
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One curve of a line plot.
pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |v: &[f64]| v.iter().copied().filter(|z| z.is_finite()).collect::<Vec<_>>();
    let xs: Vec<f64> = series.iter().flat_map(|s| finite(s.x)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| finite(s.y)).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi > lo) {
            (true, true) => (lo, hi),
            (true, false) => (lo - 0.5, lo + 0.5),
            _ => (0.0, 1.0),
        }
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let (left, top, w, h) = (70.0, 40.0, 480.0, 300.0);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * w;
    let py = |y: f64| top + h - (y - y0) / (y1 - y0) * h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"#,
        left + w + 170.0,
        top + h + 50.0
    );
    let _ = writeln!(s, r#"<text x="{left}" y="22" font-size="14">{}</text>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    for (v, x) in [(x0, left), (x1, left + w)] {
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            top + h + 16.0,
            num(v)
        );
    }
    for (v, y) in [(y0, top + h), (y1, top)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 4.0,
            num(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        left + 0.5 * w,
        top + h + 36.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        top + 0.5 * h,
        top + 0.5 * h,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let stride = ser.x.len().div_ceil(1000).max(1);
        let pts: Vec<String> = ser
            .x
            .iter()
            .zip(ser.y)
            .step_by(stride)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"/>"#,
            left + w + 12.0,
            left + w + 32.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            left + w + 38.0,
            ly + 4.0,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
