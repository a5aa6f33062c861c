//! Polar-line voting, peak extraction and endpoint generation.
//!
//! The accumulator has one row per integer ρ in `[-c, c]` (with `c` the
//! rounded-up image diagonal) and one column per whole degree in `[0, 180)`.
//! ρ is computed as `round(j·cosθ + i·sinθ)` with Q14 sine/cosine tables
//! for every backend, so voting never depends on the convolution backend.

use serde::{Deserialize, Serialize};

use crate::cost::WorkCounts;
use crate::fixed::{isqrt_ceil, trig_table};
use crate::imaging::GrayImage;
use crate::Error;

pub const THETA_BINS: usize = 180;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoughParams {
    /// Minimum votes for a peak. `None` picks `max(width, height) / 4`.
    pub vote_threshold: Option<u32>,
    /// Half-width of the square peak window, in bins.
    pub neighborhood_radius: usize,
    /// Edge pixels at or above this intensity vote.
    pub pixel_threshold: u8,
    /// Let the peak window continue past θ = 179 into θ = 0 (and back) with
    /// ρ negated, since `(ρ, θ)` and `(-ρ, θ - 180)` are the same line.
    /// When off, the window is clipped at the θ borders like at the ρ borders.
    pub wrap_theta: bool,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            vote_threshold: None,
            neighborhood_radius: 4,
            pixel_threshold: 250,
            wrap_theta: true,
        }
    }
}

impl HoughParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.vote_threshold == Some(0) {
            return Err(Error::InvalidParams("vote_threshold must be >= 1".into()));
        }
        if self.neighborhood_radius == 0 {
            return Err(Error::InvalidParams("neighborhood_radius must be >= 1".into()));
        }
        if self.wrap_theta && self.neighborhood_radius >= THETA_BINS / 2 {
            return Err(Error::InvalidParams("neighborhood_radius must be < 90 when wrapping theta".into()));
        }
        Ok(())
    }

    pub fn threshold_for(&self, width: usize, height: usize) -> u32 {
        self.vote_threshold
            .unwrap_or_else(|| (width.max(height) / 4).max(1) as u32)
    }
}

/// Vote grid indexed by `(ρ + rho_offset) · 180 + θ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HoughAccumulator {
    pub votes: Vec<u32>,
    pub rho_offset: usize,
    pub width: usize,
    pub height: usize,
}

impl HoughAccumulator {
    pub fn new(width: usize, height: usize) -> Self {
        let diag2 = (width as u64).pow(2) + (height as u64).pow(2);
        let rho_offset = isqrt_ceil(diag2) as usize;
        Self {
            votes: vec![0; (2 * rho_offset + 1) * THETA_BINS],
            rho_offset,
            width,
            height,
        }
    }

    pub fn rho_bins(&self) -> usize {
        2 * self.rho_offset + 1
    }

    pub fn index(&self, rho: i64, theta: usize) -> usize {
        (rho + self.rho_offset as i64) as usize * THETA_BINS + theta
    }

    pub fn get(&self, rho: i64, theta: usize) -> u32 {
        self.votes[self.index(rho, theta)]
    }

    pub fn total(&self) -> u64 {
        self.votes.iter().map(|&v| u64::from(v)).sum()
    }
}

/// A peak in the accumulator: normal angle θ in degrees, signed distance ρ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarLine {
    pub rho: i32,
    pub theta: u32,
    pub votes: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineSegment {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectedLine {
    pub segment: LineSegment,
    pub polar: PolarLine,
}

pub fn accumulate(edges: &GrayImage, params: &HoughParams) -> HoughAccumulator {
    accumulate_counted(edges, params, &mut WorkCounts::default())
}

pub fn accumulate_counted(edges: &GrayImage, params: &HoughParams, work: &mut WorkCounts) -> HoughAccumulator {
    let (w, h) = (edges.width(), edges.height());
    let mut acc = HoughAccumulator::new(w, h);
    let table = trig_table();
    let off = acc.rho_offset as i64;
    let mut voters = 0u64;
    for i in 0..h {
        for j in 0..w {
            if edges.get(i, j) < params.pixel_threshold {
                continue;
            }
            voters += 1;
            for theta in 0..THETA_BINS {
                let rho = table.rho(j as i64, i as i64, theta);
                acc.votes[(rho + off) as usize * THETA_BINS + theta] += 1;
            }
        }
    }
    work.hough_pixels += (w * h) as u64;
    work.hough_votes += voters * THETA_BINS as u64;
    acc
}

pub fn find_lines(acc: &HoughAccumulator, params: &HoughParams) -> Vec<PolarLine> {
    find_lines_counted(acc, params, &mut WorkCounts::default())
}

/// Bins at or above the threshold that are `>=` every bin in their window.
/// Among equal maxima sharing a window only the first in row-major scan
/// order is kept. The window is clipped at the ρ borders; at the θ borders it
/// is clipped or wrapped depending on [`HoughParams::wrap_theta`].
pub fn find_lines_counted(acc: &HoughAccumulator, params: &HoughParams, work: &mut WorkCounts) -> Vec<PolarLine> {
    let threshold = params.threshold_for(acc.width, acc.height);
    let r = params.neighborhood_radius as isize;
    let rows = acc.rho_bins();
    let bins = THETA_BINS as isize;
    let mut out = Vec::new();
    let mut reads = 0u64;
    for row in 0..rows {
        for theta in 0..THETA_BINS {
            let v = acc.votes[row * THETA_BINS + theta];
            if v < threshold {
                continue;
            }
            let (r0, r1) = (row.saturating_sub(r as usize), (row + r as usize).min(rows - 1));
            let mut peak = true;
            'window: for t in theta as isize - r..=theta as isize + r {
                let wrapped = !(0..bins).contains(&t);
                if wrapped && !params.wrap_theta {
                    continue;
                }
                let tt = t.rem_euclid(bins) as usize;
                for rr in r0..=r1 {
                    // ρ → -ρ across the seam
                    let rr = if wrapped { rows - 1 - rr } else { rr };
                    reads += 1;
                    let u = acc.votes[rr * THETA_BINS + tt];
                    let earlier = (rr, tt) < (row, theta);
                    if u > v || (earlier && u == v) {
                        peak = false;
                        break 'window;
                    }
                }
            }
            if peak {
                out.push(PolarLine {
                    rho: row as i32 - acc.rho_offset as i32,
                    theta: theta as u32,
                    votes: v,
                });
            }
        }
    }
    work.peak_bins += (rows * THETA_BINS) as u64;
    work.peak_window_reads += reads;
    out
}

/// Intersects `x·cosθ + y·sinθ = ρ` with the rectangle `[0, w-1] × [0, h-1]`.
/// Endpoints are rounded, clamped and ordered by `(x, y)`. Returns `None`
/// when the line misses the image or only touches a corner.
pub fn polar_to_segment(line: &PolarLine, width: usize, height: usize) -> Option<LineSegment> {
    if width == 0 || height == 0 {
        return None;
    }
    let (xmax, ymax) = ((width - 1) as f64, (height - 1) as f64);
    let rad = f64::from(line.theta).to_radians();
    let (c, s) = (rad.cos(), rad.sin());
    let rho = f64::from(line.rho);
    let eps = 1e-9;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4);
    if s.abs() > eps {
        for x in [0.0, xmax] {
            let y = (rho - x * c) / s;
            if (-eps..=ymax + eps).contains(&y) {
                pts.push((x, y));
            }
        }
    }
    if c.abs() > eps {
        for y in [0.0, ymax] {
            let x = (rho - y * s) / c;
            if (-eps..=xmax + eps).contains(&x) {
                pts.push((x, y));
            }
        }
    }
    let round = |(x, y): (f64, f64)| {
        (
            (x.round() as i32).clamp(0, width as i32 - 1),
            (y.round() as i32).clamp(0, height as i32 - 1),
        )
    };
    let mut best: Option<((i32, i32), (i32, i32), i64)> = None;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let (p, q) = (round(pts[a]), round(pts[b]));
            let d = i64::from(p.0 - q.0).pow(2) + i64::from(p.1 - q.1).pow(2);
            if d > 0 && best.is_none_or(|(_, _, bd)| d > bd) {
                best = Some((p.min(q), p.max(q), d));
            }
        }
    }
    best.map(|(p, q, _)| LineSegment {
        x1: p.0,
        y1: p.1,
        x2: q.0,
        y2: q.1,
    })
}

pub fn detect_lines(edges: &GrayImage, params: &HoughParams) -> Vec<DetectedLine> {
    let mut work = WorkCounts::default();
    let acc = accumulate_counted(edges, params, &mut work);
    let peaks = find_lines_counted(&acc, params, &mut work);
    lines_from_peaks(&peaks, edges.width(), edges.height(), &mut work)
}

/// Converts peaks to segments, dropping lines that miss the image.
pub fn lines_from_peaks(peaks: &[PolarLine], width: usize, height: usize, work: &mut WorkCounts) -> Vec<DetectedLine> {
    work.segments += peaks.len() as u64;
    peaks
        .iter()
        .filter_map(|p| {
            polar_to_segment(p, width, height).map(|segment| DetectedLine { segment, polar: *p })
        })
        .collect()
}

pub fn run_hough(edges: &GrayImage, params: &HoughParams) -> Result<Vec<LineSegment>, Error> {
    params.validate()?;
    Ok(detect_lines(edges, params).into_iter().map(|d| d.segment).collect())
}
