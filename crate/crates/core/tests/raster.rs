mod common;

use common::supersampled_line;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubesynth::profile::{strip_brushes, CrossSectionSpec, Normalization, ProjectionProfile};
use tubesynth::raster::*;
use tubesynth::spline::{flatten, random_path, SplinePath};
use tubesynth::{Grid, Point2};

fn layer(w: usize, h: usize) -> IntensityLayer {
    IntensityLayer::new(w, h, LayerRole::CatheterInk)
}

fn wu_error(p0: Point2, p1: Point2, w: usize, h: usize) -> f64 {
    let mut c = layer(w, h);
    wu_line(&mut c, p0, p1);
    let oracle = supersampled_line((p0.x, p0.y), (p1.x, p1.y), w, h);
    c.grid
        .iter()
        .zip(oracle.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn diagonal_matches_supersampling() {
    let e = wu_error(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0), 16, 16);
    assert!(e <= 0.15, "max error {e}");
}

#[test]
fn random_lines_match_supersampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let p0 = Point2::new(rng.random_range(2.0..30.0), rng.random_range(2.0..30.0));
        let p1 = Point2::new(rng.random_range(2.0..30.0), rng.random_range(2.0..30.0));
        let e = wu_error(p0, p1, 32, 32);
        assert!(e <= 0.15, "{p0:?} -> {p1:?}: {e}");
    }
}

fn dyadic(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..hi) * 256.0).round() / 256.0
}

#[test]
fn integer_translation_commutes() {
    // Coordinates on a 1/256 grid, so the translated inputs are exact.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let p0 = Point2::new(dyadic(&mut rng, 2.0, 20.0), dyadic(&mut rng, 2.0, 20.0));
        let p1 = Point2::new(dyadic(&mut rng, 2.0, 20.0), dyadic(&mut rng, 2.0, 20.0));
        let (dx, dy) = (5usize, 3usize);
        let mut a = layer(40, 40);
        wu_line(&mut a, p0, p1);
        let mut b = layer(40, 40);
        let v = Point2::new(dx as f64, dy as f64);
        wu_line(&mut b, p0 + v, p1 + v);
        for y in 0..35 {
            for x in 0..33 {
                assert_eq!(a.grid[(x, y)], b.grid[(x + dx, y + dy)]);
            }
        }
    }
}

#[test]
fn canvases_stay_in_unit_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut c = layer(48, 48);
    for _ in 0..50 {
        let p0 = Point2::new(rng.random_range(-10.0..60.0), rng.random_range(-10.0..60.0));
        let p1 = Point2::new(rng.random_range(-10.0..60.0), rng.random_range(-10.0..60.0));
        wu_line(&mut c, p0, p1);
    }
    assert!(c.grid.iter().all(|v| (0.0..=1.0).contains(v)));
}

fn horizontal_path(x0: f64, x1: f64, y: f64, step: f64) -> SplinePath {
    let n = ((x1 - x0) / step).round() as usize;
    SplinePath::from_points((0..=n).map(|i| Point2::new(x0 + i as f64 * step, y)).collect(), step)
}

#[test]
fn straight_sweep_reproduces_brush() {
    let brush = ProjectionProfile::new(vec![0.0, 1.0, 0.0], 0.0, Normalization::GlobalMax);
    let mut c = layer(40, 20);
    stroke_path(&mut c, &horizontal_path(5.0, 35.0, 10.0, 0.5), &brush).unwrap();
    for x in 8..=32 {
        let col: Vec<f64> = (0..20).map(|y| c.grid[(x, y)]).collect();
        for (y, v) in col.iter().enumerate() {
            let expect = if y == 10 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() <= 1e-6, "({x}, {y}) = {v}");
        }
    }
}

#[test]
fn straight_sweep_of_strip_brush_at_subpixel_offset() {
    let brush = strip_brushes(&CrossSectionSpec::default(), &[0.0], 9)
        .unwrap()
        .remove(0);
    let y0 = 20.25;
    let mut c = layer(60, 40);
    stroke_path(&mut c, &horizontal_path(5.0, 55.0, y0, 0.5), &brush).unwrap();
    for x in 10..=50 {
        for y in 0..40 {
            let expect = brush_value(&brush.samples, y as f64 - y0);
            assert!((c.grid[(x, y)] - expect).abs() <= 1e-6);
        }
    }
}

#[test]
fn quarter_circle_sections_match_brush() {
    let brush = strip_brushes(&CrossSectionSpec::default(), &[0.0], 9)
        .unwrap()
        .remove(0);
    let (cx, cy, r) = (10.0, 10.0, 60.0);
    let n = (r * std::f64::consts::FRAC_PI_2 / 0.5).round() as usize;
    let pts: Vec<_> = (0..=n)
        .map(|k| {
            let a = std::f64::consts::FRAC_PI_2 * k as f64 / n as f64;
            Point2::new(cx + r * a.cos(), cy + r * a.sin())
        })
        .collect();
    let mut c = layer(90, 90);
    stroke_path(&mut c, &SplinePath::from_points(pts, 0.5), &brush).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let a = (10.0 + 70.0 * k as f64 / 19.0).to_radians();
        let dir = Point2::new(a.cos(), a.sin());
        // Pixels near the radial line through angle a, compared with the brush
        // at their signed distance from the arc.
        for x in 0..90 {
            for y in 0..90 {
                let q = Point2::new(x as f64 - cx, y as f64 - cy);
                let along = q.dot(dir);
                let off = (q - dir * along).norm();
                if off > 0.5 || along < r - 6.0 || along > r + 6.0 {
                    continue;
                }
                let radial = q.norm() - r;
                // The path normal is perp(tangent), which points inwards here.
                let expect = brush_value(&brush.samples, -radial);
                worst = worst.max((c.grid[(x, y)] - expect).abs());
            }
        }
    }
    assert!(worst <= 0.05, "worst {worst}");
}

#[test]
fn label_band_contains_ink() {
    let brushes = strip_brushes(&CrossSectionSpec::default(), &[0.0, 30.0, 60.0, 90.0], 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..8 {
        let s = random_path(&mut rng, 128.0, 128.0, 6, 3).unwrap();
        let path = flatten(&s, 0.5).unwrap();
        let brush = &brushes[k % 4];
        let mut ink = layer(128, 128);
        stroke_path(&mut ink, &path, brush).unwrap();
        let mut label = IntensityLayer::new(128, 128, LayerRole::LabelInk);
        stroke_label(&mut label, &path, brush.support_width()).unwrap();
        for (i, (&v, &l)) in ink.grid.iter().zip(label.grid.iter()).enumerate() {
            assert!(v <= 0.1 || l == 1.0, "pixel {i}: ink {v} not labelled");
        }
        assert!(label.grid.iter().all(|&l| l == 0.0 || l == 1.0));
    }
}

#[test]
fn straight_label_band_width() {
    let mut c = IntensityLayer::new(40, 20, LayerRole::LabelInk);
    stroke_label(&mut c, &horizontal_path(5.0, 35.0, 10.0, 0.5), 3).unwrap();
    for x in 6..=34 {
        let rows: Vec<usize> = (0..20).filter(|&y| c.grid[(x, y)] == 1.0).collect();
        assert_eq!(rows, vec![9, 10, 11], "column {x}");
    }
}

#[test]
fn sweeps_of_disjoint_paths_commute() {
    let brush = strip_brushes(&CrossSectionSpec::default(), &[30.0], 9)
        .unwrap()
        .remove(0);
    let a = horizontal_path(5.0, 50.0, 12.0, 0.5);
    let b = horizontal_path(5.0, 50.0, 40.0, 0.5);
    let mut ab = layer(60, 60);
    stroke_path(&mut ab, &a, &brush).unwrap();
    stroke_path(&mut ab, &b, &brush).unwrap();
    let mut ba = layer(60, 60);
    stroke_path(&mut ba, &b, &brush).unwrap();
    stroke_path(&mut ba, &a, &brush).unwrap();
    assert_eq!(ab, ba);
}

#[test]
fn empty_path_changes_nothing() {
    let brush = ProjectionProfile::new(vec![0.5, 1.0, 0.5], 0.0, Normalization::GlobalMax);
    let mut c = layer(10, 10);
    c.grid = Grid::filled(10, 10, 0.25);
    let before = c.clone();
    stroke_path(&mut c, &SplinePath::empty(0.5), &brush).unwrap();
    stroke_label(&mut c, &SplinePath::empty(0.5), 3).unwrap();
    assert_eq!(c, before);
}
