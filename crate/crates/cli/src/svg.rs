//! Minimal SVG rendering of fitted components with their bands.

use std::fmt::Write as _;

use ipcw_additive::ConfidenceBand;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const PAD: f64 = 40.0;

struct Frame {
    x0: f64,
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + PAD + (x - self.x_lo) / (self.x_hi - self.x_lo) * (PANEL_W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        PANEL_H - PAD - (y - self.y_lo) / (self.y_hi - self.y_lo) * (PANEL_H - 2.0 * PAD)
    }
}

fn points(frame: &Frame, xs: &[f64], ys: &[f64]) -> String {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One panel per band: shaded boundary zone outside `interior`, the band polygon, the
/// estimate and, when given, the true component as a dashed line.
pub fn render(bands: &[ConfidenceBand], truth: Option<&[Vec<f64>]>, interior: (f64, f64)) -> String {
    let width = PANEL_W * bands.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{PANEL_H:.0}" viewBox="0 0 {width:.0} {PANEL_H:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, band) in bands.iter().enumerate() {
        let n = band.len();
        if n == 0 {
            continue;
        }
        let lower: Vec<f64> = (0..n).map(|i| band.lower(i)).collect();
        let upper: Vec<f64> = (0..n).map(|i| band.upper(i)).collect();
        let t = truth.and_then(|t| t.get(k));
        let mut y_lo = lower.iter().chain(t.into_iter().flatten()).copied().fold(f64::INFINITY, f64::min);
        let mut y_hi = upper.iter().chain(t.into_iter().flatten()).copied().fold(f64::NEG_INFINITY, f64::max);
        if !(y_hi > y_lo) {
            y_lo -= 0.5;
            y_hi += 0.5;
        }
        let pad = 0.05 * (y_hi - y_lo);
        let frame = Frame {
            x0: k as f64 * PANEL_W,
            x_lo: band.grid[0],
            x_hi: band.grid[n - 1],
            y_lo: y_lo - pad,
            y_hi: y_hi + pad,
        };
        let (top, bottom) = (frame.py(frame.y_hi), frame.py(frame.y_lo));
        let (left, right) = (frame.px(frame.x_lo), frame.px(frame.x_hi));
        let (a, b) = (interior.0.max(frame.x_lo), interior.1.min(frame.x_hi));
        for (x1, x2) in [(left, frame.px(a)), (frame.px(b), right)] {
            if x2 > x1 {
                let _ = writeln!(
                    s,
                    r##"<rect x="{x1:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#eeeeee"/>"##,
                    x2 - x1,
                    bottom - top
                );
            }
        }
        let mut poly = points(&frame, &band.grid, &upper);
        let rev_x: Vec<f64> = band.grid.iter().rev().copied().collect();
        let rev_y: Vec<f64> = lower.iter().rev().copied().collect();
        poly.push(' ');
        poly.push_str(&points(&frame, &rev_x, &rev_y));
        let _ = writeln!(
            s,
            r##"<polygon points="{poly}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##
        );
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##,
            points(&frame, &band.grid, &band.center)
        );
        if let Some(t) = t {
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5" stroke-dasharray="5,3"/>"##,
                points(&frame, &band.grid, t)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">component {}</text>"#,
            (left + right) / 2.0,
            top - 10.0,
            band.ell + 1
        );
        for (x, anchor) in [(frame.x_lo, "start"), (frame.x_hi, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{x}</text>"#,
                frame.px(x),
                bottom + 15.0
            );
        }
        for y in [frame.y_lo, frame.y_hi] {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#,
                left - 4.0,
                frame.py(y) + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
