//! Deterministic synthetic inputs: road scenes and painted Hough lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hough::{polar_to_segment, PolarLine};
use crate::imaging::{bresenham, GrayImage};

/// Layout of a straight road seen from the driver's seat.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadScene {
    pub width: usize,
    pub height: usize,
    /// Row of the horizon.
    pub horizon: f64,
    /// Column of the vanishing point.
    pub vanish_x: f64,
    /// Road edges at the bottom row.
    pub road_left: f64,
    pub road_right: f64,
    /// Lane marking width at the bottom row; shrinks towards the horizon.
    pub marking_width: f64,
    pub sky: u8,
    pub ground: u8,
    pub asphalt: u8,
    pub paint: u8,
    /// Number of dashes in the center line (0 = no center line).
    pub dashes: usize,
    /// Peak amplitude of the per-pixel noise added to flat regions.
    pub noise: u8,
    pub seed: u64,
}

impl RoadScene {
    pub fn random(seed: u64, width: usize, height: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (width as f64, height as f64);
        let half = rng.random_range(0.30..0.42) * w;
        let center = rng.random_range(0.45..0.55) * w;
        Self {
            width,
            height,
            horizon: rng.random_range(0.34..0.44) * h,
            vanish_x: rng.random_range(0.44..0.56) * w,
            road_left: center - half,
            road_right: center + half,
            marking_width: rng.random_range(0.018..0.028) * w,
            sky: rng.random_range(150..=200),
            ground: rng.random_range(70..=100),
            asphalt: rng.random_range(35..=55),
            paint: rng.random_range(215..=240),
            dashes: rng.random_range(4..=6),
            noise: 1,
            seed,
        }
    }

    /// Column of a line from the vanishing point to bottom column `x_bottom`
    /// at row `y`.
    fn along(&self, x_bottom: f64, y: f64) -> f64 {
        let t = (y - self.horizon) / (self.height as f64 - 1.0 - self.horizon);
        self.vanish_x + t * (x_bottom - self.vanish_x)
    }

    pub fn render(&self) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        let bottom = self.height as f64 - 1.0;
        let span = bottom - self.horizon;
        let mw = self.marking_width;
        let center_bottom = 0.5 * (self.road_left + self.road_right);
        GrayImage::from_fn(self.width, self.height, |i, j| {
            let (y, x) = (i as f64, j as f64);
            let base = if y < self.horizon {
                self.sky
            } else {
                let t = (y - self.horizon) / span;
                let left = self.along(self.road_left, y);
                let right = self.along(self.road_right, y);
                let m = mw * t;
                let on_left = x >= left && x < left + m;
                let on_right = x > right - m && x <= right;
                let c = self.along(center_bottom, y);
                // dashes are evenly spaced in perspective depth
                let phase = (t.sqrt() * (2 * self.dashes) as f64).floor() as usize;
                let on_center = self.dashes > 0 && phase % 2 == 1 && (x - c).abs() < 0.5 * m;
                if on_left || on_right || on_center {
                    self.paint
                } else if x >= left && x <= right {
                    self.asphalt
                } else {
                    self.ground
                }
            };
            if self.noise == 0 {
                base
            } else {
                let n = i32::from(self.noise);
                (i32::from(base) + rng.random_range(-n..=n)).clamp(0, 255) as u8
            }
        })
    }
}

/// Seeds of the bundled corpus images `road_01` .. `road_05`.
pub const CORPUS_SEEDS: [u64; 5] = [11, 23, 37, 41, 59];
pub const CORPUS_SIDE: usize = 512;

/// Bundled corpus image `n` (0-based), identical to `corpus/road_0{n+1}.pgm`.
pub fn corpus_image(n: usize) -> GrayImage {
    road_image(CORPUS_SEEDS[n], CORPUS_SIDE, CORPUS_SIDE)
}

/// Renders scene `seed` at the given size.
pub fn road_image(seed: u64, width: usize, height: usize) -> GrayImage {
    RoadScene::random(seed, width, height).render()
}

/// Draws the visible part of `line` with Bresenham. Returns the number of
/// pixels set, or 0 when the line misses the image.
pub fn paint_line(img: &mut GrayImage, line: &PolarLine, value: u8) -> usize {
    let Some(s) = polar_to_segment(line, img.width(), img.height()) else {
        return 0;
    };
    let pts = bresenham(s.x1, s.y1, s.x2, s.y2);
    for &(x, y) in &pts {
        img.set(y as usize, x as usize, value);
    }
    pts.len()
}

/// A random whole-degree line crossing at least `min_len` pixels of a
/// `width × height` image.
pub fn random_line<R: Rng>(rng: &mut R, width: usize, height: usize, min_len: usize) -> PolarLine {
    let diag = ((width * width + height * height) as f64).sqrt() as i32;
    loop {
        let theta = rng.random_range(0..180u32);
        let rho = rng.random_range(-diag..=diag);
        let line = PolarLine { rho, theta, votes: 0 };
        if let Some(s) = polar_to_segment(&line, width, height) {
            let len = (s.x2 - s.x1).abs().max((s.y2 - s.y1).abs()) as usize + 1;
            if len >= min_len {
                return line;
            }
        }
    }
}
