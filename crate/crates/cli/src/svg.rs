//! Minimal SVG 1.1 writer for plots in a world-coordinate box.

use std::fmt::Write;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

pub struct Canvas {
    lo: [f64; 2],
    hi: [f64; 2],
    body: String,
}

impl Canvas {
    /// A canvas showing `[lo, hi]` with equal axis scales.
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        let (cx, cy) = (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
        let half = 0.5 * f64::max(hi[0] - lo[0], hi[1] - lo[1]).max(1e-9);
        Canvas {
            lo: [cx - half, cy - half],
            hi: [cx + half, cy + half],
            body: String::new(),
        }
    }

    /// A canvas fitting `points` with a 10% border.
    pub fn fitting<'a>(points: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            return Canvas::new([-1.0, -1.0], [1.0, 1.0]);
        }
        let pad = 0.1 * f64::max(hi[0] - lo[0], hi[1] - lo[1]).max(0.1);
        Canvas::new([lo[0] - pad, lo[1] - pad], [hi[0] + pad, hi[1] + pad])
    }

    pub fn scale(&self) -> f64 {
        (SIZE - 2.0 * MARGIN) / (self.hi[0] - self.lo[0])
    }

    pub fn map(&self, p: &[f64]) -> (f64, f64) {
        let s = self.scale();
        (
            MARGIN + (p[0] - self.lo[0]) * s,
            SIZE - MARGIN - (p[1] - self.lo[1]) * s,
        )
    }

    pub fn polyline(&mut self, pts: &[Vec<f64>], stroke: &str, width: f64) {
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    pub fn line(&mut self, a: &[f64], b: &[f64], stroke: &str, width: f64) {
        let (x1, y1) = self.map(a);
        let (x2, y2) = self.map(b);
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="{width}"/>"#
        );
    }

    pub fn dot(&mut self, p: &[f64], r: f64, fill: &str) {
        let (x, y) = self.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#);
    }

    /// Axis-aligned world rectangle.
    pub fn rect(&mut self, lo: &[f64], hi: &[f64], fill: &str) {
        let (x0, y1) = self.map(lo);
        let (x1, y0) = self.map(hi);
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }

    pub fn label(&mut self, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{MARGIN}" y="14" font-family="sans-serif" font-size="12">{}</text>"#,
            escape(text)
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Colour ramp from dark blue (0) to yellow (1).
pub fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (68.0 + t * (253.0 - 68.0)) as u8;
    let g = (1.0 + t * (231.0 - 1.0)) as u8;
    let b = (84.0 + t * (37.0 - 84.0)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Marching-squares segments of `{value = 0}` on a node grid.
///
/// `value(i, j)` is sampled at `pos(i, j)` for `i, j < n`.
pub fn contour<V, P>(n: usize, value: V, pos: P) -> Vec<[Vec<f64>; 2]>
where
    V: Fn(usize, usize) -> f64,
    P: Fn(usize, usize) -> [f64; 2],
{
    let mut segs = Vec::new();
    let cross = |a: (usize, usize), b: (usize, usize)| -> Option<Vec<f64>> {
        let (va, vb) = (value(a.0, a.1), value(b.0, b.1));
        if !(va.is_finite() && vb.is_finite()) || (va < 0.0) == (vb < 0.0) {
            return None;
        }
        let t = va / (va - vb);
        let (pa, pb) = (pos(a.0, a.1), pos(b.0, b.1));
        Some(vec![pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])])
    };
    for j in 0..n.saturating_sub(1) {
        for i in 0..n - 1 {
            let edges = [
                cross((i, j), (i + 1, j)),
                cross((i + 1, j), (i + 1, j + 1)),
                cross((i + 1, j + 1), (i, j + 1)),
                cross((i, j + 1), (i, j)),
            ];
            let hits: Vec<Vec<f64>> = edges.into_iter().flatten().collect();
            for pair in hits.chunks_exact(2) {
                segs.push([pair[0].clone(), pair[1].clone()]);
            }
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour_stays_on_the_circle() {
        let n = 41;
        let pos = |i: usize, j: usize| [-2.0 + 4.0 * i as f64 / 40.0, -2.0 + 4.0 * j as f64 / 40.0];
        let segs = contour(
            n,
            |i, j| {
                let p = pos(i, j);
                p[0].hypot(p[1]) - 1.0
            },
            pos,
        );
        assert!(!segs.is_empty());
        for s in &segs {
            for p in s {
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 0.02);
            }
        }
    }

    #[test]
    fn canvas_maps_corners() {
        let c = Canvas::new([0.0, 0.0], [1.0, 1.0]);
        assert_eq!(c.map(&[0.0, 0.0]), (MARGIN, SIZE - MARGIN));
        assert_eq!(c.map(&[1.0, 1.0]), (SIZE - MARGIN, MARGIN));
        assert!(c.finish().contains("<svg"));
    }
}
