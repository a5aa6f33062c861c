//! Brute-force reference implementations used by the integration and
//! acceptance suites. Each one is written directly from the definition and
//! shares no code with the library beyond its data types.

#![allow(dead_code)]

use lanekit_core::accel::Matrix;
use lanekit_core::canny::{CannyParams, Direction, GradientField};
use lanekit_core::imaging::{GrayImage, Raster};
use lanekit_core::kernel::Kernel5x5;
use rand::Rng;

pub fn naive_matmul(a: &Matrix<i8>, b: &Matrix<i8>) -> Vec<i64> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut c = vec![0i64; m * n];
    for i in 0..m {
        for j in 0..n {
            for t in 0..k {
                c[i * n + j] += i64::from(a.get(i, t)) * i64::from(b.get(t, j));
            }
        }
    }
    c
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix<i8> {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-128..=127i32) as i8)
}

/// Zero-padded 5×5 correlation, truncating division.
pub fn conv_oracle(img: &Raster, k: &Kernel5x5) -> Raster {
    let (w, h) = (img.width as i64, img.height as i64);
    let mut out = Vec::with_capacity(img.data.len());
    for i in 0..h {
        for j in 0..w {
            let mut sum = 0i64;
            for di in -2..=2i64 {
                for dj in -2..=2i64 {
                    let (y, x) = (i + di, j + dj);
                    let v = if y < 0 || x < 0 || y >= h || x >= w {
                        0
                    } else {
                        i64::from(img.data[(y * w + x) as usize])
                    };
                    sum += v * i64::from(k.coeffs[(di + 2) as usize][(dj + 2) as usize]);
                }
            }
            out.push((sum / i64::from(k.divisor)) as i32);
        }
    }
    Raster {
        width: img.width,
        height: img.height,
        data: out,
    }
}

pub fn random_gray<R: Rng>(rng: &mut R, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.random())
}

fn mag(g: &GradientField, i: i64, j: i64) -> f64 {
    if i < 0 || j < 0 || i >= g.height as i64 || j >= g.width as i64 {
        return 0.0;
    }
    let p = (i as usize) * g.width + j as usize;
    f64::from(g.gx[p]).hypot(f64::from(g.gy[p]))
}

/// Suppression by exact magnitude: keep a pixel that beats its forward
/// neighbor and ties or beats its backward neighbor along the gradient.
pub fn nms_oracle(g: &GradientField, p: &CannyParams) -> Vec<bool> {
    let mut out = vec![false; g.width * g.height];
    for i in 0..g.height as i64 {
        for j in 0..g.width as i64 {
            let idx = i as usize * g.width + j as usize;
            let (fi, fj) = match g.direction[idx] {
                Direction::Deg0 => (0, 1),
                Direction::Deg45 => (1, 1),
                Direction::Deg90 => (1, 0),
                Direction::Deg135 => (1, -1),
                Direction::None => continue,
            };
            let m = mag(g, i, j);
            out[idx] = m >= f64::from(p.gradient_threshold)
                && m > mag(g, i + fi, j + fj)
                && m >= mag(g, i - fi, j - fj);
        }
    }
    out
}

/// Hysteresis by repeated sweeps until nothing changes.
pub fn hysteresis_oracle(flags: &[bool], g: &GradientField, p: &CannyParams) -> Vec<u8> {
    let (w, h) = (g.width as i64, g.height as i64);
    let m = |idx: usize| f64::from(g.gx[idx]).hypot(f64::from(g.gy[idx]));
    let mut out: Vec<u8> = (0..flags.len())
        .map(|idx| if flags[idx] && m(idx) >= f64::from(p.hysteresis_high) { 255 } else { 0 })
        .collect();
    loop {
        let mut changed = false;
        for i in 0..h {
            for j in 0..w {
                let idx = (i * w + j) as usize;
                if out[idx] == 255 || !flags[idx] || m(idx) < f64::from(p.hysteresis_low) {
                    continue;
                }
                let linked = (-1..=1).any(|di| {
                    (-1..=1).any(|dj| {
                        let (y, x) = (i + di, j + dj);
                        y >= 0 && x >= 0 && y < h && x < w && out[(y * w + x) as usize] == 255
                    })
                });
                if linked {
                    out[idx] = 255;
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

/// Vote grid indexed `(rho + offset) * 180 + theta`, built theta-major with
/// its own Q14 tables.
pub fn accumulate_oracle(img: &GrayImage, pixel_threshold: u8) -> (usize, Vec<u32>) {
    let (w, h) = (img.width(), img.height());
    let offset = ((w * w + h * h) as f64).sqrt().ceil() as usize;
    let mut votes = vec![0u32; (2 * offset + 1) * 180];
    for theta in 0..180usize {
        let rad = (theta as f64) * std::f64::consts::PI / 180.0;
        let c = (rad.cos() * 16384.0).round() as i64;
        let s = (rad.sin() * 16384.0).round() as i64;
        for i in 0..h {
            for j in 0..w {
                if img.get(i, j) >= pixel_threshold {
                    let exact = (j as i64 * c + i as i64 * s) as f64 / 16384.0;
                    let rho = exact.round() as i64;
                    votes[(rho + offset as i64) as usize * 180 + theta] += 1;
                }
            }
        }
    }
    (offset, votes)
}

/// Random gradient field with small values so that ties are common.
pub fn random_field<R: Rng>(rng: &mut R, w: usize, h: usize, p: &CannyParams) -> GradientField {
    let span = rng.random_range(30..=150);
    let n = w * h;
    let gx = (0..n).map(|_| rng.random_range(-span..=span)).collect();
    let gy = (0..n).map(|_| rng.random_range(-span..=span)).collect();
    GradientField::from_components(w, h, gx, gy, p, lanekit_core::backend::Numeric::Fixed)
}

/// Proptest settings with a fixed seed so every run draws the same cases.
pub fn fixed_seed(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x1a2e_c0de),
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    }
}
