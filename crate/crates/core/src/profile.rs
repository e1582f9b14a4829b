//! Tube cross-sections and their parallel-beam projection profiles.
//!
//! A tube slice is an annulus of attenuation `c1` with an optional
//! radiopaque strip of attenuation `c2` on the inner `-x` wall. Projecting
//! the slice at an angle gives a 1D profile that is later used as the brush
//! tip when painting a tube along a path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Subsamples per pixel axis used for area-weighted boundary coverage.
const COVERAGE_SUBSAMPLES: usize = 8;

/// Samples at or below this fraction of the profile peak are outside the support
/// (footprint slivers of partially covered corner pixels fall below it).
const SUPPORT_REL_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Annulus with an embedded radiopaque strip (NGT, ETT).
    StripTube,
    /// Bare annulus; its 0 degree projection is the dual-edge profile (UAC, UVC).
    PlainTube,
}

/// Physical parameters of a tube slice, in cross-section pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossSectionSpec {
    /// Outer diameter.
    pub d1: f64,
    /// Inner (lumen) diameter.
    pub d2: f64,
    /// Attenuation of the tube wall.
    pub c1: f64,
    /// Attenuation of the radiopaque strip.
    pub c2: f64,
    /// Strip thickness, measured tangentially.
    pub t: f64,
    pub kind: ProfileKind,
}

impl Default for CrossSectionSpec {
    fn default() -> Self {
        Self {
            d1: 160.0,
            d2: 80.0,
            c1: 0.1,
            c2: 1.0,
            t: 30.0,
            kind: ProfileKind::StripTube,
        }
    }
}

impl CrossSectionSpec {
    pub fn plain_tube() -> Self {
        Self {
            kind: ProfileKind::PlainTube,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.d1, self.d2, self.c1, self.c2, self.t]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("cross-section parameters must be finite"));
        }
        if !(self.d1 > self.d2 && self.d2 > 0.0) {
            return Err(Error::invalid(format!(
                "need d1 > d2 > 0, got d1={} d2={}",
                self.d1, self.d2
            )));
        }
        if !(self.t > 0.0 && self.t <= self.d2) {
            return Err(Error::invalid(format!(
                "need 0 < t <= d2, got t={} d2={}",
                self.t, self.d2
            )));
        }
        if !(0.0 <= self.c1 && self.c1 <= self.c2) {
            return Err(Error::invalid(format!(
                "need 0 <= c1 <= c2, got c1={} c2={}",
                self.c1, self.c2
            )));
        }
        Ok(())
    }

    /// Smallest grid that holds the tube plus a one pixel margin on each side.
    pub fn min_grid_side(&self) -> usize {
        self.d1.ceil() as usize + 2
    }

    /// Attenuation at a point given relative to the tube axis.
    fn attenuation_at(&self, x: f64, y: f64) -> Material {
        let r_out = 0.5 * self.d1;
        let r_in = 0.5 * self.d2;
        let r2 = x * x + y * y;
        if r2 > r_out * r_out || r2 < r_in * r_in {
            return Material::Empty;
        }
        if self.kind == ProfileKind::StripTube && x <= -r_in && x >= -r_out && y.abs() <= 0.5 * self.t {
            Material::Strip
        } else {
            Material::Wall
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Material {
    Empty,
    Wall,
    Strip,
}

/// Square attenuation map of a tube slice, one unit per cross-section pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: Grid<f64>,
}

impl DensityField {
    pub fn side(&self) -> usize {
        self.grid.width()
    }

    pub fn zeros(side: usize) -> Self {
        Self {
            grid: Grid::new(side, side),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    GlobalMax,
}

/// One projection of a field; used as a brush tip once normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionProfile {
    pub samples: Vec<f64>,
    pub angle_deg: f64,
    pub normalization: Normalization,
}

impl ProjectionProfile {
    pub fn new(samples: Vec<f64>, angle_deg: f64, normalization: Normalization) -> Self {
        Self {
            samples,
            angle_deg,
            normalization,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().copied().fold(0.0, f64::max)
    }

    /// Inclusive index range of samples above a negligible fraction of the peak.
    pub fn support(&self) -> Option<(usize, usize)> {
        let peak = self.peak();
        if peak <= 0.0 {
            return None;
        }
        let eps = peak * SUPPORT_REL_EPS;
        let lo = self.samples.iter().position(|&v| v > eps)?;
        let hi = self.samples.iter().rposition(|&v| v > eps)?;
        Some((lo, hi))
    }

    pub fn support_width(&self) -> usize {
        self.support().map_or(0, |(lo, hi)| hi - lo + 1)
    }

    /// Indices of strict local maxima; plateaus count once, at their first sample.
    pub fn local_maxima(&self) -> Vec<usize> {
        let s = &self.samples;
        let mut out = Vec::new();
        let mut i = 0;
        while i < s.len() {
            let mut j = i;
            while j + 1 < s.len() && s[j + 1] == s[i] {
                j += 1;
            }
            let left_lower = i == 0 || s[i - 1] < s[i];
            let right_lower = j + 1 == s.len() || s[j + 1] < s[i];
            if left_lower && right_lower && s[i] > 0.0 {
                out.push(i);
            }
            i = j + 1;
        }
        out
    }
}

/// Rasterizes the tube slice centered in a `grid_side` square.
///
/// Each pixel holds the mean attenuation over an 8x8 grid of subsamples, so
/// boundary pixels carry their partial coverage.
pub fn render_cross_section(spec: &CrossSectionSpec, grid_side: usize) -> Result<DensityField> {
    spec.validate()?;
    let required = spec.min_grid_side();
    if grid_side < required {
        return Err(Error::GridTooSmall {
            got: grid_side,
            required,
        });
    }
    let n = COVERAGE_SUBSAMPLES;
    let center = 0.5 * grid_side as f64;
    let sub = 1.0 / n as f64;
    let grid = Grid::from_fn(grid_side, grid_side, |px, py| {
        let (mut wall, mut strip) = (0u32, 0u32);
        for sy in 0..n {
            let y = py as f64 + (sy as f64 + 0.5) * sub - center;
            for sx in 0..n {
                let x = px as f64 + (sx as f64 + 0.5) * sub - center;
                match spec.attenuation_at(x, y) {
                    Material::Empty => {}
                    Material::Wall => wall += 1,
                    Material::Strip => strip += 1,
                }
            }
        }
        (wall as f64 * spec.c1 + strip as f64 * spec.c2) / (n * n) as f64
    });
    Ok(DensityField { grid })
}

/// Number of unit-width detector bins: the field diagonal, rounded up.
pub fn detector_bins(field: &DensityField) -> usize {
    let (w, h) = field.grid.dims();
    ((w * w + h * h) as f64).sqrt().ceil() as usize
}

/// Parallel-beam projection of `field` at `angle_deg`.
///
/// Detector coordinate is `s = x cos(a) + y sin(a)` measured from the field
/// center (y grows downward). Every pixel is treated as a unit square of
/// constant attenuation; its chord-length footprint on the detector is a
/// trapezoid, integrated exactly over each bin. Samples are mean line
/// integrals over their bin, so `sum(samples) == sum(field)`.
pub fn project(field: &DensityField, angle_deg: f64) -> ProjectionProfile {
    let n_bins = detector_bins(field);
    let mut samples = vec![0.0; n_bins];
    let (w, h) = field.grid.dims();
    let theta = angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let (a, b) = (cos.abs(), sin.abs());
    let (wide, narrow) = if a >= b { (a, b) } else { (b, a) };
    let half_support = 0.5 * (a + b);
    let cx = 0.5 * w as f64;
    let cy = 0.5 * h as f64;
    let origin = 0.5 * n_bins as f64;

    for py in 0..h {
        let yc = py as f64 + 0.5 - cy;
        for px in 0..w {
            let v = field.grid[(px, py)];
            if v == 0.0 {
                continue;
            }
            let xc = px as f64 + 0.5 - cx;
            // Footprint support in detector-bin coordinates.
            let s0 = xc * cos + yc * sin + origin;
            let lo = s0 - half_support;
            let hi = s0 + half_support;
            let first = lo.floor().max(0.0) as usize;
            let last = (hi.ceil() as usize).min(n_bins);
            let mut prev = 0.0;
            for (k, slot) in samples.iter_mut().enumerate().take(last).skip(first) {
                let edge = (k + 1) as f64;
                let cdf = footprint_cdf(edge - lo, wide, narrow);
                *slot += v * (cdf - prev);
                prev = cdf;
            }
        }
    }

    ProjectionProfile::new(samples, angle_deg, Normalization::Raw)
}

/// CDF of a unit-area trapezoid: the chord length of a unit square crossed
/// by parallel rays, as a function of detector offset `u` from the left end
/// of its support. `wide >= narrow` are `|cos|` and `|sin|` in some order.
fn footprint_cdf(u: f64, wide: f64, narrow: f64) -> f64 {
    let total = wide + narrow;
    if u <= 0.0 {
        return 0.0;
    }
    if u >= total {
        return 1.0;
    }
    let h = 1.0 / wide;
    if narrow < 1e-12 {
        return (u * h).min(1.0);
    }
    if u <= narrow {
        h * u * u / (2.0 * narrow)
    } else if u <= wide {
        h * (0.5 * narrow + (u - narrow))
    } else {
        let r = total - u;
        1.0 - h * r * r / (2.0 * narrow)
    }
}

/// Projections at `n_angles` equally spaced angles over `[0, 180)`.
pub fn sinogram(field: &DensityField, n_angles: usize) -> Result<Vec<ProjectionProfile>> {
    if n_angles == 0 {
        return Err(Error::invalid("sinogram needs at least one angle"));
    }
    Ok((0..n_angles)
        .into_par_iter()
        .map(|i| project(field, i as f64 * 180.0 / n_angles as f64))
        .collect())
}

/// Divides every profile by the largest sample across the whole set.
pub fn normalize_global_max(profiles: &[ProjectionProfile]) -> Result<Vec<ProjectionProfile>> {
    let max = profiles
        .iter()
        .flat_map(|p| p.samples.iter().copied())
        .fold(0.0, f64::max);
    if max <= 0.0 || !max.is_finite() {
        return Err(Error::EmptyProfile);
    }
    Ok(profiles
        .iter()
        .map(|p| ProjectionProfile {
            samples: p.samples.iter().map(|v| v / max).collect(),
            angle_deg: p.angle_deg,
            normalization: Normalization::GlobalMax,
        })
        .collect())
}

/// Resamples the nonzero support of `profile` to `target_width` samples.
///
/// The support is reconstructed as a piecewise-linear function through the
/// sample centers (held flat past the outermost centers). When shrinking,
/// each output sample is the exact mean of that function over its bin; when
/// growing or at equal width it is point-sampled at the bin center, which
/// makes the equal-width case an identity. The result is rescaled so its
/// peak matches the source peak.
pub fn resample_profile(profile: &ProjectionProfile, target_width: usize) -> Result<ProjectionProfile> {
    if target_width < 2 {
        return Err(Error::invalid(format!(
            "target width must be at least 2, got {target_width}"
        )));
    }
    let (lo, hi) = profile.support().ok_or(Error::EmptyProfile)?;
    let src = &profile.samples[lo..=hi];
    let scale = src.len() as f64 / target_width as f64;

    let mut out: Vec<f64> = (0..target_width)
        .map(|j| {
            if scale <= 1.0 {
                linear_at(src, (j as f64 + 0.5) * scale)
            } else {
                let a = j as f64 * scale;
                let b = (j + 1) as f64 * scale;
                linear_integral(src, a, b) / (b - a)
            }
        })
        .collect();

    if scale > 1.0 {
        let src_peak = src.iter().copied().fold(0.0, f64::max);
        let out_peak = out.iter().copied().fold(0.0, f64::max);
        if out_peak > 0.0 {
            let gain = src_peak / out_peak;
            out.iter_mut().for_each(|v| *v *= gain);
        }
    }

    Ok(ProjectionProfile {
        samples: out,
        angle_deg: profile.angle_deg,
        normalization: profile.normalization,
    })
}

/// Piecewise-linear reconstruction of `s` (sample `k` centered at `k + 0.5`).
fn linear_at(s: &[f64], x: f64) -> f64 {
    let t = x - 0.5;
    if t <= 0.0 {
        return s[0];
    }
    let last = s.len() - 1;
    if t >= last as f64 {
        return s[last];
    }
    let k = t.floor() as usize;
    let f = t - k as f64;
    s[k] + (s[k + 1] - s[k]) * f
}

/// Exact integral of the reconstruction `linear_at(s, .)` over `[a, b]`.
fn linear_integral(s: &[f64], a: f64, b: f64) -> f64 {
    // Breakpoints of the reconstruction are the sample centers k + 0.5.
    let mut total = 0.0;
    let mut x = a;
    let mut knot = (a - 0.5).floor() + 1.5;
    while x < b {
        let next = knot.min(b);
        total += 0.5 * (linear_at(s, x) + linear_at(s, next)) * (next - x);
        x = next;
        knot += 1.0;
    }
    total
}

/// Dual-edge brush for bare tubes: the 0 degree projection, normalized and
/// resampled to `target_width`.
pub fn dual_edge_profile(spec: &CrossSectionSpec, target_width: usize) -> Result<ProjectionProfile> {
    if spec.kind != ProfileKind::PlainTube {
        return Err(Error::invalid("dual-edge profile requires a plain tube"));
    }
    let field = render_cross_section(spec, spec.min_grid_side())?;
    let raw = project(&field, 0.0);
    let normalized = normalize_global_max(std::slice::from_ref(&raw))?;
    resample_profile(&normalized[0], target_width)
}

/// Brushes for a strip tube at several angles, sharing one global normalizer.
pub fn strip_brushes(
    spec: &CrossSectionSpec,
    angles_deg: &[f64],
    target_width: usize,
) -> Result<Vec<ProjectionProfile>> {
    if angles_deg.is_empty() {
        return Err(Error::invalid("need at least one projection angle"));
    }
    let field = render_cross_section(spec, spec.min_grid_side())?;
    let raw: Vec<_> = angles_deg.iter().map(|&a| project(&field, a)).collect();
    normalize_global_max(&raw)?
        .iter()
        .map(|p| resample_profile(p, target_width))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_field() -> DensityField {
        let spec = CrossSectionSpec::default();
        render_cross_section(&spec, spec.min_grid_side()).unwrap()
    }

    #[test]
    fn defaults_match_tube_parameters() {
        let s = CrossSectionSpec::default();
        assert_eq!((s.d1, s.d2, s.c1, s.c2, s.t), (160.0, 80.0, 0.1, 1.0, 30.0));
        s.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_geometry() {
        let d = CrossSectionSpec::default();
        for s in [
            CrossSectionSpec { d2: 170.0, ..d },
            CrossSectionSpec { t: 0.0, ..d },
            CrossSectionSpec { t: 81.0, ..d },
            CrossSectionSpec { c1: 2.0, ..d },
        ] {
            assert!(s.validate().is_err());
        }
    }

    #[test]
    fn grid_too_small_reports_minimum() {
        let spec = CrossSectionSpec::default();
        match render_cross_section(&spec, 100) {
            Err(Error::GridTooSmall { got, required }) => {
                assert_eq!(got, 100);
                assert_eq!(required, 162);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn field_values_at_reference_pixels() {
        let f = default_field();
        let c = f.side() / 2;
        // Lumen.
        assert_eq!(f.grid[(c, c)], 0.0);
        // Right wall, far from the strip.
        assert_eq!(f.grid[(c + 60, c)], 0.1);
        // Strip interior on the left wall.
        assert_eq!(f.grid[(c - 60, c)], 1.0);
        // Exterior corner.
        assert_eq!(f.grid[(0, 0)], 0.0);
    }

    #[test]
    fn field_is_deterministic_and_in_range() {
        let a = default_field();
        let b = default_field();
        assert_eq!(a, b);
        assert!(a.grid.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn plain_tube_has_no_strip() {
        let spec = CrossSectionSpec::plain_tube();
        let f = render_cross_section(&spec, spec.min_grid_side()).unwrap();
        assert!(f.grid.max_value() <= 0.1 + 1e-12);
    }

    #[test]
    fn zero_field_projects_to_zero() {
        let f = DensityField::zeros(50);
        for a in [0.0, 17.0, 90.0, 135.5] {
            assert!(project(&f, a).samples.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_pixel_projection_conserves_mass() {
        let mut f = DensityField::zeros(9);
        f.grid[(4, 2)] = 3.0;
        for a in [0.0, 10.0, 45.0, 77.0, 90.0, 133.0] {
            let p = project(&f, a);
            let total: f64 = p.samples.iter().sum();
            assert!((total - 3.0).abs() < 1e-12, "angle {a}: {total}");
        }
    }

    #[test]
    fn footprint_cdf_is_monotone_and_complete() {
        for &(wide, narrow) in &[(1.0, 0.0), (0.8, 0.6), (0.75, 0.66), (0.95, 0.31)] {
            let total = wide + narrow;
            let mut prev = 0.0;
            for i in 0..=100 {
                let u = total * i as f64 / 100.0;
                let c = footprint_cdf(u, wide, narrow);
                assert!(c + 1e-15 >= prev);
                prev = c;
            }
            assert!((prev - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sinogram_rows_follow_angle_grid() {
        let f = default_field();
        let s = sinogram(&f, 1).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], project(&f, 0.0));
        let s = sinogram(&f, 6).unwrap();
        assert_eq!(s[3], project(&f, 90.0));
        assert!(sinogram(&f, 0).is_err());
    }

    #[test]
    fn normalization_examples() {
        let p = ProjectionProfile::new(vec![0.0, 2.0, 4.0], 0.0, Normalization::Raw);
        let n = normalize_global_max(&[p]).unwrap();
        assert_eq!(n[0].samples, vec![0.0, 0.5, 1.0]);
        assert_eq!(n[0].normalization, Normalization::GlobalMax);

        let a = ProjectionProfile::new(vec![1.0, 2.0], 0.0, Normalization::Raw);
        let b = ProjectionProfile::new(vec![4.0, 0.0], 30.0, Normalization::Raw);
        let n = normalize_global_max(&[a, b]).unwrap();
        assert_eq!(n[0].samples, vec![0.25, 0.5]);
        assert_eq!(n[1].samples, vec![1.0, 0.0]);

        let z = ProjectionProfile::new(vec![0.0; 4], 0.0, Normalization::Raw);
        assert!(matches!(normalize_global_max(&[z]), Err(Error::EmptyProfile)));
    }

    #[test]
    fn four_angle_set_normalizes_to_exact_unit_max() {
        let f = default_field();
        let raw: Vec<_> = [0.0, 30.0, 60.0, 90.0].iter().map(|&a| project(&f, a)).collect();
        let n = normalize_global_max(&raw).unwrap();
        let max = n.iter().flat_map(|p| p.samples.iter().copied()).fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        let again = normalize_global_max(&n).unwrap();
        assert_eq!(again, n);
    }

    #[test]
    fn resample_to_own_width_is_identity() {
        let p = ProjectionProfile::new(
            vec![0.0, 0.0, 0.2, 0.9, 0.4, 1.0, 0.3, 0.0],
            0.0,
            Normalization::GlobalMax,
        );
        let r = resample_profile(&p, 6).unwrap();
        let expect = [0.2, 0.9, 0.4, 1.0, 0.3];
        // Support is 5 wide; resampling to 5 must reproduce it.
        let r5 = resample_profile(&p, 5).unwrap();
        for (a, b) in r5.samples.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(r.len(), 6);
    }

    #[test]
    fn resample_preserves_symmetry() {
        let src: Vec<f64> = (0..41)
            .map(|i| {
                let x = (i as f64 - 20.0) / 20.0;
                (1.0 - x * x).max(0.0) + 0.3 * (-(x * 8.0).powi(2)).exp()
            })
            .collect();
        let p = ProjectionProfile::new(src, 0.0, Normalization::GlobalMax);
        for w in [2, 5, 6, 9, 17, 60] {
            let r = resample_profile(&p, w).unwrap();
            for i in 0..w {
                assert!((r.samples[i] - r.samples[w - 1 - i]).abs() < 1e-9, "width {w}");
            }
        }
    }

    #[test]
    fn resample_errors() {
        let p = ProjectionProfile::new(vec![0.0, 1.0, 0.0], 0.0, Normalization::Raw);
        assert!(resample_profile(&p, 1).is_err());
        let z = ProjectionProfile::new(vec![0.0; 3], 0.0, Normalization::Raw);
        assert!(matches!(resample_profile(&z, 4), Err(Error::EmptyProfile)));
    }

    #[test]
    fn linear_integral_matches_trapezoid_sum() {
        let s = [0.0, 1.0, 3.0, 2.0];
        // Whole domain [0, 4]: flat halves at both ends plus three trapezoids.
        let expect = 0.5 * 0.0 + 0.5 + 2.0 + 2.5 + 0.5 * 2.0;
        assert!((linear_integral(&s, 0.0, 4.0) - expect).abs() < 1e-12);
        assert!((linear_integral(&s, 1.5, 2.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dual_edge_rejects_strip_tube() {
        assert!(dual_edge_profile(&CrossSectionSpec::default(), 6).is_err());
    }

    #[test]
    fn dual_edge_has_two_symmetric_peaks() {
        let p = dual_edge_profile(&CrossSectionSpec::plain_tube(), 6).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.support_width(), 6);
        assert_eq!(p.local_maxima().len(), 2);
        for i in 0..6 {
            assert!((p.samples[i] - p.samples[5 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dual_edge_equals_explicit_composition() {
        let spec = CrossSectionSpec::plain_tube();
        let field = render_cross_section(&spec, spec.min_grid_side()).unwrap();
        let raw = project(&field, 0.0);
        let n = normalize_global_max(&[raw]).unwrap();
        let expect = resample_profile(&n[0], 6).unwrap();
        assert_eq!(dual_edge_profile(&spec, 6).unwrap(), expect);
    }

    #[test]
    fn local_maxima_handles_plateaus() {
        let p = ProjectionProfile::new(vec![0.0, 1.0, 1.0, 0.5, 0.7, 0.7], 0.0, Normalization::Raw);
        assert_eq!(p.local_maxima(), vec![1, 4]);
    }
}
