//! B-spline catheter paths: random generation, De Boor evaluation and
//! arc-length flattening.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point2;

/// Maximum distance between the curve and its flattening chords, in pixels.
pub const CHORD_TOLERANCE: f64 = 0.1;

/// Initial uniform subdivisions per knot span before adaptive refinement.
const SPAN_SEEDS: usize = 8;
const MAX_DEPTH: u32 = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    pub degree: usize,
    pub control_points: Vec<Point2>,
    pub knots: Vec<f64>,
}

impl SplineSpec {
    pub fn new(degree: usize, control_points: Vec<Point2>, knots: Vec<f64>) -> Result<Self> {
        let spec = Self {
            degree,
            control_points,
            knots,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Spline with a clamped uniform knot vector (interpolates both end points).
    pub fn clamped_uniform(degree: usize, control_points: Vec<Point2>) -> Result<Self> {
        let knots = clamped_uniform_knots(control_points.len(), degree)?;
        Self::new(degree, control_points, knots)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.control_points.len();
        if self.degree < 1 {
            return Err(Error::invalid("spline degree must be at least 1"));
        }
        if n < self.degree + 1 {
            return Err(Error::invalid(format!(
                "degree {} needs at least {} control points, got {n}",
                self.degree,
                self.degree + 1
            )));
        }
        if self.knots.len() != n + self.degree + 1 {
            return Err(Error::invalid(format!(
                "expected {} knots, got {}",
                n + self.degree + 1,
                self.knots.len()
            )));
        }
        if self.knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::invalid("knot vector must be non-decreasing"));
        }
        if self.knots[self.degree] >= self.knots[n] {
            return Err(Error::invalid("spline parameter domain is empty"));
        }
        if self.control_points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("control points must be finite"));
        }
        Ok(())
    }

    /// Valid parameter interval `[knots[degree], knots[n]]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.control_points.len()])
    }

    pub fn translated(&self, v: Point2) -> Self {
        Self {
            degree: self.degree,
            control_points: self.control_points.iter().map(|&p| p + v).collect(),
            knots: self.knots.clone(),
        }
    }

    /// First-derivative curve, one degree lower, on the same domain.
    pub fn derivative(&self) -> Option<SplineSpec> {
        let p = self.degree;
        if p == 0 {
            return None;
        }
        let pts = &self.control_points;
        let control_points = (0..pts.len() - 1)
            .map(|i| {
                let span = self.knots[i + p + 1] - self.knots[i + 1];
                if span > 0.0 {
                    (pts[i + 1] - pts[i]) * (p as f64 / span)
                } else {
                    Point2::ZERO
                }
            })
            .collect();
        Some(SplineSpec {
            degree: p - 1,
            control_points,
            knots: self.knots[1..self.knots.len() - 1].to_vec(),
        })
    }

    /// De Boor evaluation without the domain check.
    fn eval(&self, u: f64) -> Point2 {
        let p = self.degree;
        let n = self.control_points.len();
        let k = self.span(u);
        let mut d: Vec<Point2> = (0..=p).map(|j| self.control_points[j + k - p]).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let left = self.knots[j + k - p];
                let right = self.knots[j + 1 + k - r];
                let denom = right - left;
                let alpha = if denom > 0.0 { (u - left) / denom } else { 0.0 };
                d[j] = d[j - 1] * (1.0 - alpha) + d[j] * alpha;
            }
        }
        debug_assert!(k < n);
        d[p]
    }

    /// Knot span index `k` in `[degree, n - 1]` with `knots[k] <= u < knots[k + 1]`;
    /// the right domain end belongs to the last non-empty span.
    fn span(&self, u: f64) -> usize {
        let n = self.control_points.len();
        let mut k = self.degree;
        while k + 1 < n && self.knots[k + 1] <= u {
            k += 1;
        }
        k
    }
}

/// Clamped uniform knots: `degree + 1` zeros, evenly spaced interior knots, `degree + 1` ones.
pub fn clamped_uniform_knots(n_ctrl: usize, degree: usize) -> Result<Vec<f64>> {
    if degree < 1 || n_ctrl < degree + 1 {
        return Err(Error::invalid(format!(
            "degree {degree} needs at least {} control points, got {n_ctrl}",
            degree + 1
        )));
    }
    let segments = n_ctrl - degree;
    let mut knots = Vec::with_capacity(n_ctrl + degree + 1);
    knots.extend(std::iter::repeat_n(0.0, degree + 1));
    for i in 1..segments {
        knots.push(i as f64 / segments as f64);
    }
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    Ok(knots)
}

/// Point on the curve at parameter `u` by De Boor's triangular recursion.
pub fn de_boor(spec: &SplineSpec, u: f64) -> Result<Point2> {
    let (lo, hi) = spec.domain();
    if !(lo..=hi).contains(&u) {
        return Err(Error::Domain { value: u, lo, hi });
    }
    Ok(spec.eval(u))
}

/// Random clamped spline with control points drawn uniformly over the
/// `width x height` image inset by 5% of its shorter side.
pub fn random_path<R: Rng + ?Sized>(
    rng: &mut R,
    width: f64,
    height: f64,
    n_ctrl: usize,
    degree: usize,
) -> Result<SplineSpec> {
    if n_ctrl < degree + 1 {
        return Err(Error::invalid(format!(
            "degree {degree} needs at least {} control points, got {n_ctrl}",
            degree + 1
        )));
    }
    let margin = 0.05 * width.min(height);
    let (x0, x1) = (margin, width - margin);
    let (y0, y1) = (margin, height - margin);
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::invalid("image too small for control-point inset"));
    }
    let pts = (0..n_ctrl)
        .map(|_| Point2::new(rng.random_range(x0..x1), rng.random_range(y0..y1)))
        .collect();
    SplineSpec::clamped_uniform(degree, pts)
}

/// Polyline approximation of a spline, resampled at near-uniform arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplinePath {
    pub points: Vec<Point2>,
    /// Unit tangents, one per point.
    pub tangents: Vec<Point2>,
    pub arc_step: f64,
}

impl SplinePath {
    pub fn empty(arc_step: f64) -> Self {
        Self {
            points: vec![],
            tangents: vec![],
            arc_step,
        }
    }

    /// Builds a path from points, deriving tangents from neighbouring points.
    pub fn from_points(points: Vec<Point2>, arc_step: f64) -> Self {
        let n = points.len();
        let tangents = (0..n)
            .map(|i| {
                let a = points[i.saturating_sub(1)];
                let b = points[(i + 1).min(n - 1)];
                (b - a).normalized().unwrap_or(Point2::new(1.0, 0.0))
            })
            .collect();
        Self {
            points,
            tangents,
            arc_step,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].distance(w[1])).sum()
    }

    pub fn translated(&self, v: Point2) -> Self {
        Self {
            points: self.points.iter().map(|&p| p + v).collect(),
            tangents: self.tangents.clone(),
            arc_step: self.arc_step,
        }
    }
}

/// Flattens `spec` to points spaced `arc_step` apart along the curve.
///
/// The curve is first subdivided adaptively until every chord is within
/// [`CHORD_TOLERANCE`] of the curve and no longer than `arc_step`, then
/// walked at equal arc-length intervals (spacing `L / round(L / arc_step)`,
/// both ends included). Each
/// output point lies on the curve; its tangent comes from the derivative
/// spline.
pub fn flatten(spec: &SplineSpec, arc_step: f64) -> Result<SplinePath> {
    if !(arc_step > 0.0 && arc_step.is_finite()) {
        return Err(Error::invalid(format!("arc step must be positive, got {arc_step}")));
    }
    spec.validate()?;

    let (params, pts) = adaptive_polyline(spec, arc_step);
    let mut cumulative = Vec::with_capacity(pts.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in pts.windows(2) {
        total += w[0].distance(w[1]);
        cumulative.push(total);
    }
    if total < 1e-9 {
        return Ok(SplinePath::empty(arc_step));
    }

    let segments = ((total / arc_step).round() as usize).max(1);
    let spacing = total / segments as f64;
    let deriv = spec.derivative();
    let (u_first, u_last) = spec.domain();

    let mut points = Vec::with_capacity(segments + 1);
    let mut tangents = Vec::with_capacity(segments + 1);
    let mut seg = 0;
    for m in 0..=segments {
        let (u, chord) = if m == 0 {
            (u_first, pts[1] - pts[0])
        } else if m == segments {
            let n = pts.len();
            (u_last, pts[n - 1] - pts[n - 2])
        } else {
            let target = m as f64 * spacing;
            while seg + 2 < cumulative.len() && cumulative[seg + 1] < target {
                seg += 1;
            }
            let seg_len = cumulative[seg + 1] - cumulative[seg];
            let f = if seg_len > 0.0 {
                ((target - cumulative[seg]) / seg_len).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (
                params[seg] + (params[seg + 1] - params[seg]) * f,
                pts[seg + 1] - pts[seg],
            )
        };
        points.push(spec.eval(u));
        let tangent = deriv
            .as_ref()
            .and_then(|d| d.eval(u).normalized())
            .or_else(|| chord.normalized())
            .unwrap_or(Point2::new(1.0, 0.0));
        tangents.push(tangent);
    }

    Ok(SplinePath {
        points,
        tangents,
        arc_step,
    })
}

/// Parameter/point pairs whose chords stay within tolerance of the curve and
/// are no longer than `max_len`, so that the parameter is close to linear in
/// arc length along each chord.
fn adaptive_polyline(spec: &SplineSpec, max_len: f64) -> (Vec<f64>, Vec<Point2>) {
    let (lo, hi) = spec.domain();
    let mut breaks: Vec<f64> = spec.knots.iter().copied().filter(|&k| k > lo && k < hi).collect();
    breaks.dedup();
    breaks.insert(0, lo);
    breaks.push(hi);

    let mut params = vec![lo];
    let mut pts = vec![spec.eval(lo)];
    for w in breaks.windows(2) {
        for s in 0..SPAN_SEEDS {
            let a = w[0] + (w[1] - w[0]) * s as f64 / SPAN_SEEDS as f64;
            let b = if s + 1 == SPAN_SEEDS {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * (s + 1) as f64 / SPAN_SEEDS as f64
            };
            let pa = *pts.last().unwrap();
            let pb = spec.eval(b);
            refine(spec, a, pa, b, pb, 0, max_len, &mut params, &mut pts);
        }
    }
    (params, pts)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    spec: &SplineSpec,
    a: f64,
    pa: Point2,
    b: f64,
    pb: Point2,
    depth: u32,
    max_len: f64,
    params: &mut Vec<f64>,
    pts: &mut Vec<Point2>,
) {
    let mid = 0.5 * (a + b);
    let pm = spec.eval(mid);
    let err = [0.25, 0.75]
        .iter()
        .map(|&f| chord_distance(spec.eval(a + (b - a) * f), pa, pb))
        .fold(chord_distance(pm, pa, pb), f64::max);
    if (err > CHORD_TOLERANCE || pa.distance(pb) > max_len) && depth < MAX_DEPTH {
        refine(spec, a, pa, mid, pm, depth + 1, max_len, params, pts);
        refine(spec, mid, pm, b, pb, depth + 1, max_len, params, pts);
    } else {
        params.push(b);
        pts.push(pb);
    }
}

fn chord_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}
