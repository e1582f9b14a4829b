//! Brute-force reference computations shared by the integration suites.
//!
//! Nothing here calls into the code path it checks.
#![allow(dead_code)]

use rayon::prelude::*;
use tubesynth::grid::Grid;

/// Line integrals by marching 16 parallel rays per detector bin with a
/// 1/16 pixel step and nearest-pixel lookup; returns the per-bin mean.
pub fn ray_march_projection(field: &Grid<f64>, angle_deg: f64, n_bins: usize) -> Vec<f64> {
    const RAYS: usize = 16;
    const STEP: f64 = 1.0 / 16.0;
    let (w, h) = field.dims();
    let (cx, cy) = (0.5 * w as f64, 0.5 * h as f64);
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let half_len = 0.5 * ((w * w + h * h) as f64).sqrt() + 1.0;
    let steps = (2.0 * half_len / STEP).ceil() as usize;
    (0..n_bins)
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for r in 0..RAYS {
                let s = k as f64 + (r as f64 + 0.5) / RAYS as f64 - 0.5 * n_bins as f64;
                let mut line = 0.0;
                for i in 0..steps {
                    let t = -half_len + (i as f64 + 0.5) * STEP;
                    let x = s * cos - t * sin + cx;
                    let y = s * sin + t * cos + cy;
                    if x < 0.0 || y < 0.0 {
                        continue;
                    }
                    if let Some(v) = field.get(x as isize, y as isize) {
                        line += v * STEP;
                    }
                }
                acc += line;
            }
            acc / RAYS as f64
        })
        .collect()
}

/// B-spline point as the sum of Cox-de Boor basis functions times control points.
pub fn basis_sum_eval(degree: usize, ctrl: &[(f64, f64)], knots: &[f64], u: f64) -> (f64, f64) {
    let n = ctrl.len();
    let (mut x, mut y) = (0.0, 0.0);
    for (i, c) in ctrl.iter().enumerate() {
        let b = cox_de_boor(i, degree, knots, u, n);
        x += b * c.0;
        y += b * c.1;
    }
    (x, y)
}

fn cox_de_boor(i: usize, p: usize, knots: &[f64], u: f64, n_ctrl: usize) -> f64 {
    if p == 0 {
        let last_domain = knots[n_ctrl];
        // Close the last non-empty span on the right so u = end is covered.
        if u == last_domain {
            return if knots[i] < u && u <= knots[i + 1] && knots[i + 1] == last_domain {
                1.0
            } else {
                0.0
            };
        }
        return if knots[i] <= u && u < knots[i + 1] { 1.0 } else { 0.0 };
    }
    let mut out = 0.0;
    let d1 = knots[i + p] - knots[i];
    if d1 > 0.0 {
        out += (u - knots[i]) / d1 * cox_de_boor(i, p - 1, knots, u, n_ctrl);
    }
    let d2 = knots[i + p + 1] - knots[i + 1];
    if d2 > 0.0 {
        out += (knots[i + p + 1] - u) / d2 * cox_de_boor(i + 1, p - 1, knots, u, n_ctrl);
    }
    out
}

/// Coverage of each pixel (unit square centered on integer coordinates) by
/// a line one pixel thick along its minor axis, extended half a pixel past
/// both ends along its major axis, by 16x16 point supersampling.
pub fn supersampled_line(p0: (f64, f64), p1: (f64, f64), w: usize, h: usize) -> Grid<f64> {
    const N: usize = 16;
    let steep = (p1.1 - p0.1).abs() > (p1.0 - p0.0).abs();
    let swap = |p: (f64, f64)| if steep { (p.1, p.0) } else { p };
    let (mut a, mut b) = (swap(p0), swap(p1));
    if a.0 > b.0 {
        std::mem::swap(&mut a, &mut b);
    }
    let slope = if b.0 > a.0 { (b.1 - a.1) / (b.0 - a.0) } else { 0.0 };
    Grid::from_fn(w, h, |px, py| {
        let mut hits = 0usize;
        for sy in 0..N {
            for sx in 0..N {
                let x = px as f64 - 0.5 + (sx as f64 + 0.5) / N as f64;
                let y = py as f64 - 0.5 + (sy as f64 + 0.5) / N as f64;
                let (major, minor) = swap((x, y));
                let centre = a.1 + slope * (major - a.0);
                if major >= a.0 - 0.5 && major <= b.0 + 0.5 && (minor - centre).abs() <= 0.5 {
                    hits += 1;
                }
            }
        }
        hits as f64 / (N * N) as f64
    })
}

/// Removes 8-connected components smaller than `min_area` using recursive-free
/// stack flood fill.
pub fn flood_fill_filter(mask: &Grid<bool>, min_area: usize) -> Grid<bool> {
    let (w, h) = mask.dims();
    let mut seen = Grid::filled(w, h, false);
    let mut out = Grid::filled(w, h, false);
    for y in 0..h {
        for x in 0..w {
            if !mask[(x, y)] || seen[(x, y)] {
                continue;
            }
            let mut comp = vec![];
            let mut stack = vec![(x, y)];
            seen[(x, y)] = true;
            while let Some((cx, cy)) = stack.pop() {
                comp.push((cx, cy));
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let nx = cx as i64 + dx;
                        let ny = cy as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if mask[(nx, ny)] && !seen[(nx, ny)] {
                            seen[(nx, ny)] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            if comp.len() >= min_area {
                for p in comp {
                    out[p] = true;
                }
            }
        }
    }
    out
}

/// Mean of the piecewise-linear reconstruction (sample k at k + 0.5, flat
/// beyond the end centers) over `bins` equal bins, by midpoint quadrature.
pub fn binned_linear_reconstruction(src: &[f64], bins: usize) -> Vec<f64> {
    const Q: usize = 20_000;
    let width = src.len() as f64;
    let recon = |x: f64| {
        let t = x - 0.5;
        if t <= 0.0 {
            return src[0];
        }
        if t >= (src.len() - 1) as f64 {
            return src[src.len() - 1];
        }
        let k = t as usize;
        let f = t - k as f64;
        src[k] * (1.0 - f) + src[k + 1] * f
    };
    (0..bins)
        .map(|j| {
            let a = width * j as f64 / bins as f64;
            let b = width * (j + 1) as f64 / bins as f64;
            let step = (b - a) / Q as f64;
            (0..Q).map(|q| recon(a + (q as f64 + 0.5) * step)).sum::<f64>() / Q as f64
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn global_max_normalize(rows: &mut [Vec<f64>]) {
    let m = rows.iter().flatten().copied().fold(0.0, f64::max);
    for r in rows.iter_mut() {
        for v in r.iter_mut() {
            *v /= m;
        }
    }
}

/// Smooth chest-like test background: a bright mediastinum, darker lungs,
/// faint rib bands and mild seeded noise, all in `[0, 1]`.
pub fn synthetic_radiograph(w: usize, h: usize, seed: u64) -> Grid<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = (0.5 * w as f64, 0.55 * h as f64);
    Grid::from_fn(w, h, |x, y| {
        let dx = (x as f64 - cx) / w as f64;
        let dy = (y as f64 - cy) / h as f64;
        let body = 0.25 + 0.35 * (-(dx * dx) / 0.01).exp() + 0.15 * (-(dx * dx + dy * dy) / 0.2).exp();
        let ribs = 0.05 * (y as f64 / h as f64 * 40.0 + dx.abs() * 8.0).sin();
        (body + ribs + rng.random_range(-0.02..0.02)).clamp(0.0, 1.0)
    })
}

/// Writes `n` synthetic backgrounds as 8-bit PNGs named `bg_000.png`, ...
pub fn write_backgrounds(dir: &std::path::Path, n: usize, w: usize, h: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let img = synthetic_radiograph(w, h, 1000 + i as u64);
        tubesynth::io::write_gray8(&dir.join(format!("bg_{i:03}.png")), &img).unwrap();
    }
}

/// Global histogram equalization as the empirical CDF: the fraction of
/// pixels whose value does not exceed the pixel's own.
pub fn empirical_cdf_equalize(img: &Grid<f64>) -> Grid<f64> {
    let mut sorted: Vec<f64> = img.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    img.map(|&v| sorted.partition_point(|&s| s <= v) as f64 / n)
}

/// Pixel-by-pixel (tp, fp, fn, tn) with class 1 positive.
pub fn brute_confusion(pred: &Grid<bool>, truth: &Grid<u8>) -> (u64, u64, u64, u64) {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for y in 0..pred.height() {
        for x in 0..pred.width() {
            match (pred[(x, y)], truth[(x, y)] == 1) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    (tp, fp, fn_, tn)
}

/// SHA-256 of every file under `root`, keyed by relative path.
pub fn tree_hashes(root: &std::path::Path) -> std::collections::BTreeMap<String, String> {
    use sha2::{Digest, Sha256};
    let mut out = std::collections::BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let digest = Sha256::digest(std::fs::read(&p).unwrap());
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, digest.iter().map(|b| format!("{b:02x}")).collect());
            }
        }
    }
    out
}
