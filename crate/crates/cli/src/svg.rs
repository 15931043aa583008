//! Minimal SVG plots: β(E) step plots, domain rasters and loop overlays.

use std::f64::consts::TAU;
use std::fmt::Write;

const SIZE: f64 = 480.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

/// Step plot of `β_d(E)` for every `d`. Rows must be sorted by energy.
pub fn betti_steps(title: &str, rows: &[(f64, Vec<usize>)]) -> String {
    let mut out = String::new();
    header(&mut out, SIZE + 2.0 * PAD, SIZE + 2.0 * PAD);
    let _ = writeln!(out, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#);
    if rows.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let (e_lo, e_hi) = (rows[0].0, rows[rows.len() - 1].0);
    let span = if e_hi > e_lo { e_hi - e_lo } else { 1.0 };
    let b_max = rows.iter().flat_map(|r| r.1.iter().copied()).max().unwrap_or(0).max(1) as f64;
    let sx = |e: f64| PAD + (e - e_lo) / span * SIZE;
    let sy = |b: f64| PAD + SIZE - b / b_max * SIZE;
    let _ = writeln!(
        out,
        r##"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="#444"/>"##,
        PAD + SIZE,
        PAD + SIZE
    );
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="11">E = {e_lo}</text>"#,
        PAD + SIZE + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">E = {e_hi}</text>"#,
        PAD + SIZE,
        PAD + SIZE + 16.0
    );
    let dims = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    for d in 0..dims {
        let mut path = String::new();
        for (i, (e, b)) in rows.iter().enumerate() {
            let y = sy(b.get(d).copied().unwrap_or(0) as f64);
            if i == 0 {
                let _ = write!(path, "M{:.2} {:.2}", sx(*e), y);
            } else {
                let _ = write!(path, " H{:.2} V{:.2}", sx(*e), y);
            }
        }
        let color = COLORS[d % COLORS.len()];
        let _ = writeln!(out, r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="2"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">β{d}</text>"#,
            PAD + SIZE + 6.0,
            PAD + 14.0 * (d as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn grey(t: f64) -> String {
    let v = (255.0 * (0.35 + 0.6 * t.clamp(0.0, 1.0))).round() as u8;
    format!("#{v:02x}{v:02x}{v:02x}")
}

/// Raster of a 2D grid: inside vertices in blue, the rest shaded by `U`.
pub fn domain_raster(title: &str, shape: [usize; 2], values: &[f64], inside: &[bool]) -> String {
    let mut out = String::new();
    header(&mut out, SIZE + 2.0 * PAD, SIZE + 2.0 * PAD);
    let _ = writeln!(out, r#"<text x="{PAD}" y="24" font-family="sans-serif" font-size="14">{title}</text>"#);
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = (SIZE / shape[0] as f64, SIZE / shape[1] as f64);
    for j in 0..shape[1] {
        for i in 0..shape[0] {
            let v = i + shape[0] * j;
            let fill = if inside[v] {
                "#3b6fb6".to_string()
            } else {
                grey((values[v] - lo) / span)
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                PAD + i as f64 * w,
                PAD + SIZE - (j + 1) as f64 * h,
                w + 0.05,
                h + 0.05
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Loop drawn over a shaded potential slice. Points are lifted angles; the
/// polyline is broken where it crosses the fundamental square.
pub fn loop_overlay(title: &str, shape: [usize; 2], values: &[f64], points: &[[f64; 2]]) -> String {
    let inside = vec![false; values.len()];
    let mut out = domain_raster(title, shape, values, &inside);
    out.truncate(out.len() - "</svg>\n".len());
    let map = |p: [f64; 2]| {
        let x = p[0].rem_euclid(TAU) / TAU;
        let y = p[1].rem_euclid(TAU) / TAU;
        (PAD + x * SIZE, PAD + SIZE - y * SIZE)
    };
    let cell = |p: [f64; 2]| ((p[0] / TAU).floor() as i64, (p[1] / TAU).floor() as i64);
    let mut path = String::new();
    let mut pen_down = false;
    for pair in points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if cell(a) != cell(b) {
            pen_down = false;
            continue;
        }
        if !pen_down {
            let (xa, ya) = map(a);
            let _ = write!(path, "M{xa:.2} {ya:.2} ");
            pen_down = true;
        }
        let (xb, yb) = map(b);
        let _ = write!(path, "L{xb:.2} {yb:.2} ");
    }
    let _ = writeln!(
        out,
        r##"<path d="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##,
        path.trim_end()
    );
    out.push_str("</svg>\n");
    out
}
