//! Canny edge detection over a pluggable convolution backend.
//!
//! Stages: Gaussian smoothing, 5×5 gradient, direction quantization,
//! non-maximum suppression with the gradient threshold, and hysteresis.
//!
//! Suppression and thresholds compare squared magnitudes `gx² + gy²`
//! against squared thresholds. That ordering is identical to comparing the
//! exact magnitude, so the integer and float paths make the same decisions
//! and flooring in the integer square root never creates artificial ties.

use std::collections::VecDeque;

use crate::backend::{ConvBackend, Numeric};
use crate::cost::Tally;
use crate::fixed::{isqrt, tan_bounds};
use crate::imaging::{GrayImage, Raster};
use crate::kernel::KernelSet;
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CannyParams {
    pub gradient_threshold: u32,
    /// Pixels whose magnitude falls below this get direction `None`.
    pub direction_threshold: u32,
    pub hysteresis_low: u32,
    pub hysteresis_high: u32,
    /// Q-format scale of the tan constants in the integer direction test.
    pub fixed_point_shift: u32,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            gradient_threshold: 40,
            direction_threshold: 0,
            hysteresis_low: 40,
            hysteresis_high: 80,
            fixed_point_shift: 10,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.hysteresis_low > self.hysteresis_high {
            return Err(Error::InvalidParams(format!(
                "hysteresis_low {} exceeds hysteresis_high {}",
                self.hysteresis_low, self.hysteresis_high
            )));
        }
        if self.fixed_point_shift > 16 {
            return Err(Error::InvalidParams(format!(
                "fixed_point_shift {} not in 0..=16",
                self.fixed_point_shift
            )));
        }
        Ok(())
    }
}

/// Quantized gradient direction, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
    None,
}

impl Direction {
    /// Row/column step towards the "forward" neighbor along the gradient.
    /// The backward neighbor is the negation.
    pub fn step(&self) -> Option<(isize, isize)> {
        match self {
            Direction::Deg0 => Some((0, 1)),
            Direction::Deg45 => Some((1, 1)),
            Direction::Deg90 => Some((1, 0)),
            Direction::Deg135 => Some((1, -1)),
            Direction::None => None,
        }
    }

    pub fn degrees(&self) -> Option<u32> {
        match self {
            Direction::Deg0 => Some(0),
            Direction::Deg45 => Some(45),
            Direction::Deg90 => Some(90),
            Direction::Deg135 => Some(135),
            Direction::None => None,
        }
    }
}

/// Bins the angle of `(gx, gy)` (folded into `[0°, 180°)`) with boundaries
/// at 22.5°, 67.5°, 112.5° and 157.5°, using cross-multiplication against
/// tan constants scaled by `2^shift`.
pub fn quantize_direction(gx: i32, gy: i32, shift: u32) -> Direction {
    if gx == 0 && gy == 0 {
        return Direction::None;
    }
    let (ax, ay) = (i64::from(gx).abs(), i64::from(gy).abs());
    let (t22, t67) = tan_bounds(shift);
    let scaled = ay << shift;
    if scaled < ax * t22 {
        Direction::Deg0
    } else if scaled < ax * t67 {
        if (gx > 0) == (gy > 0) {
            Direction::Deg45
        } else {
            Direction::Deg135
        }
    } else {
        Direction::Deg90
    }
}

/// Same binning as [`quantize_direction`] via `atan2`.
pub fn quantize_direction_float(gx: i32, gy: i32) -> Direction {
    if gx == 0 && gy == 0 {
        return Direction::None;
    }
    let folded = f64::from(gy.abs()).atan2(f64::from(gx.abs())).to_degrees();
    if folded < 22.5 {
        Direction::Deg0
    } else if folded < 67.5 {
        if (gx > 0) == (gy > 0) {
            Direction::Deg45
        } else {
            Direction::Deg135
        }
    } else {
        Direction::Deg90
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
    pub magnitude: Vec<u32>,
    pub direction: Vec<Direction>,
}

impl GradientField {
    /// `gx² + gy²` at flat index `p`.
    #[inline]
    pub fn energy(&self, p: usize) -> u64 {
        let (x, y) = (i64::from(self.gx[p]), i64::from(self.gy[p]));
        (x * x + y * y) as u64
    }

    fn energy_at(&self, i: isize, j: isize) -> u64 {
        if i < 0 || j < 0 || i >= self.height as isize || j >= self.width as isize {
            0
        } else {
            self.energy(i as usize * self.width + j as usize)
        }
    }

    /// Builds magnitudes and directions from raw gradients.
    pub fn from_components(
        width: usize,
        height: usize,
        gx: Vec<i32>,
        gy: Vec<i32>,
        params: &CannyParams,
        numeric: Numeric,
    ) -> Self {
        let min_energy = u64::from(params.direction_threshold).pow(2);
        let mut magnitude = Vec::with_capacity(gx.len());
        let mut direction = Vec::with_capacity(gx.len());
        for (&x, &y) in gx.iter().zip(&gy) {
            let e = (i64::from(x).pow(2) + i64::from(y).pow(2)) as u64;
            let (m, d) = match numeric {
                Numeric::Fixed => (isqrt(e), quantize_direction(x, y, params.fixed_point_shift)),
                Numeric::Float => ((e as f64).sqrt().round() as u32, quantize_direction_float(x, y)),
            };
            magnitude.push(m);
            direction.push(if e < min_energy { Direction::None } else { d });
        }
        Self {
            width,
            height,
            gx,
            gy,
            magnitude,
            direction,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    /// Pixels that survived suppression and the gradient threshold.
    pub flags: Vec<bool>,
    /// 255 where the pixel survived hysteresis, 0 elsewhere.
    pub out: GrayImage,
}

/// Non-maximum suppression along the quantized direction plus the gradient
/// threshold. A pixel survives when it is strictly above its forward
/// neighbor and at least its backward neighbor.
pub fn classify_edges(g: &GradientField, params: &CannyParams) -> Vec<bool> {
    let min_energy = u64::from(params.gradient_threshold).pow(2);
    let mut flags = vec![false; g.width * g.height];
    for i in 0..g.height {
        for j in 0..g.width {
            let p = i * g.width + j;
            let Some((di, dj)) = g.direction[p].step() else {
                continue;
            };
            let e = g.energy(p);
            if e < min_energy {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            let fwd = g.energy_at(ii + di, jj + dj);
            let bwd = g.energy_at(ii - di, jj - dj);
            flags[p] = e > fwd && e >= bwd;
        }
    }
    flags
}

/// Double threshold with 8-connected linking. Returns the edge map and the
/// number of pixels that were promoted (for cost accounting).
pub fn hysteresis(flags: &[bool], g: &GradientField, params: &CannyParams) -> EdgeMap {
    hysteresis_counted(flags, g, params).0
}

fn hysteresis_counted(flags: &[bool], g: &GradientField, params: &CannyParams) -> (EdgeMap, u64) {
    let (w, h) = (g.width, g.height);
    let high = u64::from(params.hysteresis_high).pow(2);
    let low = u64::from(params.hysteresis_low).pow(2);
    let mut out = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for p in 0..w * h {
        if flags[p] && g.energy(p) >= high {
            out[p] = 255;
            queue.push_back(p);
        }
    }
    let mut expanded = 0u64;
    while let Some(p) = queue.pop_front() {
        expanded += 1;
        let (i, j) = ((p / w) as isize, (p % w) as isize);
        for di in -1..=1 {
            for dj in -1..=1 {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                    continue;
                }
                let q = ni as usize * w + nj as usize;
                if out[q] == 0 && flags[q] && g.energy(q) >= low {
                    out[q] = 255;
                    queue.push_back(q);
                }
            }
        }
    }
    let map = EdgeMap {
        width: w,
        height: h,
        flags: flags.to_vec(),
        out: GrayImage::new(w, h, out).expect("dims match"),
    };
    (map, expanded)
}

/// The detector: thresholds plus the three masks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Canny {
    pub params: CannyParams,
    pub kernels: KernelSet,
}

impl Canny {
    pub fn new(params: CannyParams, kernels: KernelSet) -> Result<Self, Error> {
        params.validate()?;
        Ok(Self { params, kernels })
    }

    pub fn noise_reduction(
        &self,
        img: &GrayImage,
        backend: &mut ConvBackend,
        tally: &mut Tally,
    ) -> Result<Raster, Error> {
        let mut out = backend.convolve(&img.to_raster(), std::slice::from_ref(&self.kernels.gaussian), tally)?;
        Ok(out.pop().expect("one kernel"))
    }

    pub fn gradient(
        &self,
        nr: &Raster,
        backend: &mut ConvBackend,
        tally: &mut Tally,
    ) -> Result<GradientField, Error> {
        let kernels = [self.kernels.gradient_x, self.kernels.gradient_y];
        let mut g = backend.convolve(nr, &kernels, tally)?;
        let gy = g.pop().expect("two kernels").data;
        let gx = g.pop().expect("two kernels").data;
        let n = (nr.width * nr.height) as u64;
        tally.work.magnitude_pixels += n;
        tally.work.direction_pixels += n;
        Ok(GradientField::from_components(
            nr.width,
            nr.height,
            gx,
            gy,
            &self.params,
            backend.numeric(),
        ))
    }

    pub fn run(&self, img: &GrayImage, backend: &mut ConvBackend, tally: &mut Tally) -> Result<EdgeMap, Error> {
        if img.width() < 5 || img.height() < 5 {
            return Err(Error::ImageTooSmall {
                width: img.width(),
                height: img.height(),
            });
        }
        let nr = self.noise_reduction(img, backend, tally)?;
        let g = self.gradient(&nr, backend, tally)?;
        let flags = classify_edges(&g, &self.params);
        let (map, expanded) = hysteresis_counted(&flags, &g, &self.params);
        let n = (img.width() * img.height()) as u64;
        tally.work.nms_pixels += n;
        tally.work.hysteresis_pixels += n;
        tally.work.hysteresis_expansions += expanded;
        Ok(map)
    }
}

/// Runs the full detector with default masks.
pub fn run_canny(img: &GrayImage, params: &CannyParams, backend: &mut ConvBackend) -> Result<EdgeMap, Error> {
    Canny::new(*params, KernelSet::default())?.run(img, backend, &mut Tally::default())
}
