//! Antialiased rasterization: Wu lines for label bands and profile-brush
//! sweeps for catheter ink.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::grid::Grid;
use crate::profile::ProjectionProfile;
use crate::spline::SplinePath;

/// Extra reach of each brush stamp along the path, past half the sample
/// spacing, so stamps overlap on the outside of bends.
const STAMP_OVERLAP: f64 = 0.5;

/// Offset between the parallel centerlines that build a label band.
const LABEL_LINE_SPACING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerRole {
    CatheterInk,
    LabelInk,
}

/// A canvas of coverage/intensity values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityLayer {
    pub grid: Grid<f64>,
    pub role: LayerRole,
}

impl IntensityLayer {
    pub fn new(width: usize, height: usize, role: LayerRole) -> Self {
        Self {
            grid: Grid::new(width, height),
            role,
        }
    }

    #[inline]
    fn plot(&mut self, x: isize, y: isize, value: f64) {
        if let Some(px) = self.grid.get_mut(x, y) {
            let v = value.clamp(0.0, 1.0);
            if v > *px {
                *px = v;
            }
        }
    }
}

/// Draws an antialiased segment with Wu's two-pixels-per-column scheme.
///
/// Pixel centers sit on integer coordinates. The segment is modelled the way
/// Wu's algorithm sees it: a band one pixel thick along the minor axis,
/// extended half a pixel past each end along the major axis. In every major
/// axis column the two pixels straddling the line receive the exact area of
/// the band inside them (for a horizontal line this is Wu's `1 - d`).
/// Coverage merges into the canvas by maximum.
pub fn wu_line(canvas: &mut IntensityLayer, p0: Point2, p1: Point2) {
    if !p0.is_finite() || !p1.is_finite() {
        return;
    }
    let steep = (p1.y - p0.y).abs() > (p1.x - p0.x).abs();
    // Work in (major, minor) coordinates.
    let (mut a, mut b) = if steep {
        ((p0.y, p0.x), (p1.y, p1.x))
    } else {
        ((p0.x, p0.y), (p1.x, p1.y))
    };
    if a.0 > b.0 {
        std::mem::swap(&mut a, &mut b);
    }
    // Local coordinates about an integer origin, so integer translations of
    // the input leave every intermediate value unchanged.
    let origin = (a.0.floor(), a.1.floor());
    let a = (a.0 - origin.0, a.1 - origin.1);
    let b = (b.0 - origin.0, b.1 - origin.1);
    let dx = b.0 - a.0;
    let gradient = if dx > 0.0 { (b.1 - a.1) / dx } else { 0.0 };

    let major_len = if steep {
        canvas.grid.height()
    } else {
        canvas.grid.width()
    } as f64;
    let start = a.0 - 0.5;
    let end = b.0 + 0.5;
    let first = (start + 0.5).floor().max(-origin.0);
    let last = (end - 0.5).ceil().min(major_len - 1.0 - origin.0);

    let mut col = first;
    while col <= last {
        // Portion of this column, relative to its center, inside the caps.
        let t0 = (start - col).max(-0.5);
        let t1 = (end - col).min(0.5);
        if t1 > t0 {
            let y = a.1 + gradient * (col - a.0);
            let yi = y.floor();
            let near = band_area(y - yi, gradient, t0, t1);
            let far = band_area(y - yi - 1.0, gradient, t0, t1);
            let c = (col + origin.0) as isize;
            let r0 = (yi + origin.1) as isize;
            let r1 = r0 + 1;
            if steep {
                canvas.plot(r0, c, near);
                canvas.plot(r1, c, far);
            } else {
                canvas.plot(c, r0, near);
                canvas.plot(c, r1, far);
            }
        }
        col += 1.0;
    }
}

/// Area of a unit pixel covered by a unit-thick band whose centerline sits
/// `d` above the pixel center at the column center and rises with `slope`,
/// restricted to column offsets `[t0, t1]` within `[-1/2, 1/2]`.
fn band_area(d: f64, slope: f64, t0: f64, t1: f64) -> f64 {
    // Vertical overlap of two unit intervals offset by e is the tent 1 - |e|.
    if slope.abs() < 1e-12 {
        return (1.0 - d.abs()).max(0.0) * (t1 - t0);
    }
    let lo = d + slope * t0;
    let hi = d + slope * t1;
    ((tent_integral(hi) - tent_integral(lo)) / slope).max(0.0)
}

/// Antiderivative of `max(0, 1 - |e|)`, zero at `-inf`.
fn tent_integral(e: f64) -> f64 {
    if e <= -1.0 {
        0.0
    } else if e <= 0.0 {
        0.5 * (1.0 + e) * (1.0 + e)
    } else if e <= 1.0 {
        1.0 - 0.5 * (1.0 - e) * (1.0 - e)
    } else {
        1.0
    }
}

/// Brush value at signed normal offset `b` (pixels). Samples sit at their
/// bin centers across `[-w/2, w/2]`; values are linearly interpolated and
/// fall linearly to zero at the outer edges.
pub fn brush_value(samples: &[f64], b: f64) -> f64 {
    let w = samples.len();
    if w == 0 {
        return 0.0;
    }
    let x = b + 0.5 * w as f64;
    if x <= 0.0 || x >= w as f64 {
        return 0.0;
    }
    let t = x - 0.5;
    if t < 0.0 {
        return samples[0] * (x / 0.5);
    }
    let last = (w - 1) as f64;
    if t > last {
        return samples[w - 1] * ((w as f64 - x) / 0.5);
    }
    let k = (t.floor() as usize).min(w - 1);
    let f = t - k as f64;
    if k + 1 < w {
        samples[k] + (samples[k + 1] - samples[k]) * f
    } else {
        samples[k]
    }
}

/// Sweeps `brush` along `path`, stamping it across the local normal.
///
/// Each path sample owns a rectangle reaching half the spacing to its
/// neighbours (plus a small overlap) along the tangent and half the brush
/// width along the normal `perp(tangent)`. Pixel centers inside it take the
/// brush value at their normal offset; stamps merge by maximum. Ink stops
/// flat at the path ends.
pub fn stroke_path(canvas: &mut IntensityLayer, path: &SplinePath, brush: &ProjectionProfile) -> Result<()> {
    let (w, h) = canvas.grid.dims();
    if brush.len() > w.min(h) {
        return Err(Error::invalid(format!(
            "brush width {} exceeds canvas {w}x{h}",
            brush.len()
        )));
    }
    if path.is_empty() || brush.is_empty() {
        return Ok(());
    }
    let n = path.len();
    let half_w = 0.5 * brush.len() as f64;
    let start = (path.points[0], path.tangents[0]);
    let end = (path.points[n - 1], path.tangents[n - 1]);

    for i in 0..n {
        let p = path.points[i];
        let t = path.tangents[i];
        let nrm = t.perp();
        let prev = if i > 0 { p.distance(path.points[i - 1]) } else { 0.0 };
        let next = if i + 1 < n { p.distance(path.points[i + 1]) } else { 0.0 };
        let reach = 0.5 * prev.max(next) + STAMP_OVERLAP;

        let ex = (t.x * reach).abs() + (nrm.x * half_w).abs();
        let ey = (t.y * reach).abs() + (nrm.y * half_w).abs();
        let x0 = (p.x - ex).floor().max(0.0) as usize;
        let y0 = (p.y - ey).floor().max(0.0) as usize;
        let x1 = ((p.x + ex).ceil().max(0.0) as usize).min(w - 1);
        let y1 = ((p.y + ey).ceil().max(0.0) as usize).min(h - 1);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for py in y0..=y1 {
            for px in x0..=x1 {
                let c = Point2::new(px as f64, py as f64);
                let rel = c - p;
                if rel.dot(t).abs() > reach {
                    continue;
                }
                let across = rel.dot(nrm);
                if across.abs() >= half_w {
                    continue;
                }
                if (c - start.0).dot(start.1) < 0.0 || (c - end.0).dot(end.1) > 0.0 {
                    continue;
                }
                let v = brush_value(&brush.samples, across);
                if v > 0.0 {
                    canvas.plot(px as isize, py as isize, v);
                }
            }
        }
    }
    Ok(())
}

/// Paints a binary band `width` pixels wide centred on `path`.
///
/// The band is the union of parallel Wu centerlines offset along the
/// normal at most `LABEL_LINE_SPACING` apart, out to `width / 2 - 1/4`;
/// pixels whose coverage reaches 0.5 are set to 1.
pub fn stroke_label(canvas: &mut IntensityLayer, path: &SplinePath, width: usize) -> Result<()> {
    if width == 0 {
        return Err(Error::invalid("label width must be at least 1"));
    }
    if path.is_empty() {
        return Ok(());
    }
    let (w, h) = canvas.grid.dims();
    let mut band = IntensityLayer::new(w, h, LayerRole::LabelInk);
    let half_span = 0.5 * width as f64 - 0.25;
    let lines = ((2.0 * half_span / LABEL_LINE_SPACING).ceil() as usize) + 1;
    let offsets: Vec<f64> = if lines == 1 {
        vec![0.0]
    } else {
        (0..lines)
            .map(|k| -half_span + 2.0 * half_span * k as f64 / (lines - 1) as f64)
            .collect()
    };

    let n = path.len();
    for &o in &offsets {
        if n == 1 {
            let q = path.points[0] + path.tangents[0].perp() * o;
            wu_line(&mut band, q, q);
            continue;
        }
        for i in 0..n - 1 {
            let (p0, p1) = (path.points[i], path.points[i + 1]);
            let (t0, t1) = (path.tangents[i], path.tangents[i + 1]);
            // Sharp turns: rotate the normal in steps so the offset follows an arc.
            let turn = (t0.x * t1.y - t0.y * t1.x).atan2(t0.dot(t1));
            let steps = ((turn.abs() * o.abs() / LABEL_LINE_SPACING).ceil() as usize).max(1);
            let at = |k: usize| {
                let f = k as f64 / steps as f64;
                let a = t0.y.atan2(t0.x) + turn * f;
                p0.lerp(p1, f) + Point2::new(a.cos(), a.sin()).perp() * o
            };
            let mut a = at(0);
            for k in 1..=steps {
                let b = at(k);
                wu_line(&mut band, a, b);
                a = b;
            }
        }
    }

    for (dst, &cov) in canvas.grid.as_mut_slice().iter_mut().zip(band.grid.as_slice()) {
        if cov >= 0.5 {
            *dst = 1.0;
        }
    }
    Ok(())
}
