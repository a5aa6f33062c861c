//! Pluggable 5×5 convolution backends.
//!
//! All three backends compute the same zero-padded correlation
//! `out(p) = trunc(Σ kernel ∘ N5x5(p) / divisor)`:
//!
//! - [`BackendKind::ScalarFloat`]: `f64` accumulation.
//! - [`BackendKind::ScalarFixed`]: `i64` accumulation.
//! - [`BackendKind::AccelOffload`]: the dot products run on the simulated
//!   systolic array, either one 5×5 matrix product per pixel (the per-pixel
//!   value is the trace of `mask · neighᵀ`) or as batched im2col rows.
//!
//! The accelerator takes signed 8-bit operands, so offloaded pixels are
//! shifted by a zero point of 128 and the host adds `128 · Σ kernel` back
//! after `mvout`. Padding in the shifted domain is `-128`, which keeps the
//! border contribution at exactly zero.

use std::str::FromStr;

use crate::accel::{AccelConfig, AccelError, Accelerator, Matrix};
use crate::cost::Tally;
use crate::imaging::Raster;
use crate::kernel::Kernel5x5;
use crate::Error;

const ZERO_POINT: i32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BackendKind {
    #[serde(rename = "float")]
    ScalarFloat,
    #[serde(rename = "fixed")]
    ScalarFixed,
    #[serde(rename = "accel")]
    AccelOffload,
}

impl BackendKind {
    pub fn id(&self) -> &'static str {
        match self {
            BackendKind::ScalarFloat => "float",
            BackendKind::ScalarFixed => "fixed",
            BackendKind::AccelOffload => "accel",
        }
    }
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float" => Ok(BackendKind::ScalarFloat),
            "fixed" => Ok(BackendKind::ScalarFixed),
            "accel" => Ok(BackendKind::AccelOffload),
            other => Err(format!("unknown backend {other:?} (expected float, fixed or accel)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffloadMode {
    PerPixel,
    Batched,
}

impl FromStr for OffloadMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "perpixel" => Ok(OffloadMode::PerPixel),
            "batched" => Ok(OffloadMode::Batched),
            other => Err(format!("unknown accel mode {other:?} (expected perpixel or batched)")),
        }
    }
}

/// Arithmetic used by the stages that follow the convolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Numeric {
    Float,
    Fixed,
}

pub const DEFAULT_BATCH_ROWS: usize = 128;

#[derive(Debug)]
struct Offload {
    accel: Accelerator,
    mode: OffloadMode,
    batch_rows: usize,
}

/// A convolution engine. The offload variant owns its accelerator, so a
/// backend is single-owner; build one per worker.
#[derive(Debug)]
pub struct ConvBackend {
    kind: BackendKind,
    offload: Option<Offload>,
}

/// Result of a single-kernel convolution.
#[derive(Clone, Debug)]
pub struct ConvOutput {
    pub raster: Raster,
    pub tally: Tally,
}

impl ConvBackend {
    pub fn scalar_float() -> Self {
        Self {
            kind: BackendKind::ScalarFloat,
            offload: None,
        }
    }

    pub fn scalar_fixed() -> Self {
        Self {
            kind: BackendKind::ScalarFixed,
            offload: None,
        }
    }

    pub fn accel(cfg: AccelConfig, mode: OffloadMode, batch_rows: usize) -> Result<Self, AccelError> {
        if batch_rows == 0 {
            return Err(AccelError::InvalidConfig("batch_rows must be >= 1".into()));
        }
        Ok(Self {
            kind: BackendKind::AccelOffload,
            offload: Some(Offload {
                accel: Accelerator::new(cfg)?,
                mode,
                batch_rows,
            }),
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn mode(&self) -> Option<OffloadMode> {
        self.offload.as_ref().map(|o| o.mode)
    }

    pub fn numeric(&self) -> Numeric {
        match self.kind {
            BackendKind::ScalarFloat => Numeric::Float,
            _ => Numeric::Fixed,
        }
    }

    pub fn accelerator(&self) -> Option<&Accelerator> {
        self.offload.as_ref().map(|o| &o.accel)
    }

    /// Label such as `fixed` or `accel/batched`.
    pub fn label(&self) -> String {
        match self.mode() {
            Some(OffloadMode::PerPixel) => "accel/perpixel".into(),
            Some(OffloadMode::Batched) => "accel/batched".into(),
            None => self.kind.id().into(),
        }
    }

    /// Applies every kernel to `img`; kernels sharing an input share its
    /// operand gathering on the offload path.
    pub fn convolve(
        &mut self,
        img: &Raster,
        kernels: &[Kernel5x5],
        tally: &mut Tally,
    ) -> Result<Vec<Raster>, Error> {
        if img.width < 5 || img.height < 5 {
            return Err(Error::ImageTooSmall {
                width: img.width,
                height: img.height,
            });
        }
        match self.kind {
            BackendKind::ScalarFixed => Ok(kernels
                .iter()
                .map(|k| conv_fixed(img, k, tally))
                .collect()),
            BackendKind::ScalarFloat => Ok(kernels
                .iter()
                .map(|k| conv_float(img, k, tally))
                .collect()),
            BackendKind::AccelOffload => {
                let off = self.offload.as_mut().expect("offload backend owns an accelerator");
                off.convolve(img, kernels, tally)
            }
        }
    }
}

/// Single-kernel convolution with its cost tally.
pub fn conv5x5(img: &Raster, kernel: &Kernel5x5, backend: &mut ConvBackend) -> Result<ConvOutput, Error> {
    let mut tally = Tally::default();
    let raster = backend
        .convolve(img, std::slice::from_ref(kernel), &mut tally)?
        .pop()
        .expect("one kernel in, one raster out");
    Ok(ConvOutput { raster, tally })
}

/// Pixels `(i-2..=i+2, j-2..=j+2)` row-major; outside the raster reads 0.
pub fn neighborhood_matrix(img: &Raster, i: usize, j: usize) -> [[i32; 5]; 5] {
    let mut m = [[0; 5]; 5];
    for (di, row) in m.iter_mut().enumerate() {
        for (dj, v) in row.iter_mut().enumerate() {
            *v = img.get_padded(i as isize + di as isize - 2, j as isize + dj as isize - 2);
        }
    }
    m
}

/// Dot product of two 5×5 operands as `trace(mask · neighᵀ)` on the
/// accelerator.
pub fn conv_value_via_matmul(
    mask: &[[i8; 5]; 5],
    neigh: &[[i8; 5]; 5],
    accel: &mut Accelerator,
) -> Result<i64, AccelError> {
    let a = Matrix::from_fn(5, 5, |r, c| mask[r][c]);
    let bt = Matrix::from_fn(5, 5, |r, c| neigh[c][r]);
    let p = accel.tiled_matmul_auto(&a, &bt)?;
    Ok((0..5).map(|d| i64::from(p.c.get(d, d))).sum())
}

fn conv_fixed(img: &Raster, k: &Kernel5x5, tally: &mut Tally) -> Raster {
    let (w, h) = (img.width, img.height);
    let mut out = Raster::zeros(w, h);
    for i in 0..h {
        for j in 0..w {
            let mut sum: i64 = 0;
            for (di, krow) in k.coeffs.iter().enumerate() {
                for (dj, &c) in krow.iter().enumerate() {
                    let v = img.get_padded(i as isize + di as isize - 2, j as isize + dj as isize - 2);
                    sum += i64::from(c) * i64::from(v);
                }
            }
            out.data[i * w + j] = (sum / i64::from(k.divisor)) as i32;
        }
    }
    let n = (w * h) as u64;
    tally.work.conv_taps += 25 * n;
    tally.work.conv_outputs += n;
    out
}

fn conv_float(img: &Raster, k: &Kernel5x5, tally: &mut Tally) -> Raster {
    let (w, h) = (img.width, img.height);
    let coeffs: Vec<f64> = k.flat().iter().map(|&c| f64::from(c)).collect();
    let divisor = f64::from(k.divisor);
    let mut out = Raster::zeros(w, h);
    for i in 0..h {
        for j in 0..w {
            let mut sum = 0.0f64;
            for di in 0..5 {
                for dj in 0..5 {
                    let v = img.get_padded(i as isize + di as isize - 2, j as isize + dj as isize - 2);
                    sum += coeffs[di * 5 + dj] * f64::from(v);
                }
            }
            out.data[i * w + j] = (sum / divisor).trunc() as i32;
        }
    }
    let n = (w * h) as u64;
    tally.work.conv_taps += 25 * n;
    tally.work.conv_outputs += n;
    out
}

/// Input raster shifted to signed 8-bit with a 2-pixel border of `-128`.
struct Shifted {
    stride: usize,
    data: Vec<i8>,
}

impl Shifted {
    fn new(img: &Raster) -> Result<Self, Error> {
        let stride = img.width + 4;
        let mut data = vec![(-ZERO_POINT) as i8; stride * (img.height + 4)];
        for (idx, &v) in img.data.iter().enumerate() {
            if !(0..=255).contains(&v) {
                return Err(Error::OperandOutOfRange { value: v, index: idx });
            }
            let (i, j) = (idx / img.width, idx % img.width);
            data[(i + 2) * stride + j + 2] = (v - ZERO_POINT) as i8;
        }
        Ok(Self { stride, data })
    }

    /// The 5×5 window centered on `(i, j)` of the unpadded image.
    fn window_row(&self, i: usize, j: usize, di: usize) -> &[i8] {
        let o = (i + di) * self.stride + j;
        &self.data[o..o + 5]
    }
}

fn kernel_operand(k: &Kernel5x5, cfg: &AccelConfig) -> Result<[[i8; 5]; 5], Error> {
    let (lo, hi) = cfg.elem_range();
    let mut m = [[0i8; 5]; 5];
    for (r, row) in k.coeffs.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if i64::from(v) < lo || i64::from(v) > hi {
                return Err(Error::KernelOutOfRange(v));
            }
            m[r][c] = v as i8;
        }
    }
    Ok(m)
}

impl Offload {
    fn convolve(&mut self, img: &Raster, kernels: &[Kernel5x5], tally: &mut Tally) -> Result<Vec<Raster>, Error> {
        let cfg = *self.accel.config();
        let masks = kernels
            .iter()
            .map(|k| kernel_operand(k, &cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let corrections: Vec<i64> = kernels
            .iter()
            .map(|k| i64::from(ZERO_POINT) * i64::from(k.sum()))
            .collect();
        let shifted = Shifted::new(img)?;
        let (w, h) = (img.width, img.height);
        let n = w * h;
        tally.work.prepass_pixels += n as u64;

        let mut outs: Vec<Raster> = kernels.iter().map(|_| Raster::zeros(w, h)).collect();
        let before = self.accel.report();
        match self.mode {
            OffloadMode::PerPixel => {
                let mut neigh = [[0i8; 5]; 5];
                for p in 0..n {
                    let (i, j) = (p / w, p % w);
                    for (di, row) in neigh.iter_mut().enumerate() {
                        row.copy_from_slice(shifted.window_row(i, j, di));
                    }
                    tally.work.operand_elems += 25;
                    for (kk, mask) in masks.iter().enumerate() {
                        let dot = conv_value_via_matmul(mask, &neigh, &mut self.accel)?;
                        tally.work.trace_terms += 5;
                        outs[kk].data[p] = ((dot + corrections[kk]) / i64::from(kernels[kk].divisor)) as i32;
                    }
                    tally.work.offload_outputs += kernels.len() as u64;
                }
            }
            OffloadMode::Batched => {
                let weights = Matrix::from_fn(25, kernels.len(), |t, kk| masks[kk][t / 5][t % 5]);
                let mut start = 0;
                while start < n {
                    let rows = self.batch_rows.min(n - start);
                    let mut patches = Matrix::<i8>::zeros(rows, 25);
                    for r in 0..rows {
                        let p = start + r;
                        let (i, j) = (p / w, p % w);
                        for di in 0..5 {
                            for (dj, &v) in shifted.window_row(i, j, di).iter().enumerate() {
                                patches.set(r, di * 5 + dj, v);
                            }
                        }
                    }
                    tally.work.operand_elems += 25 * rows as u64;
                    let prod = self.accel.tiled_matmul_auto(&patches, &weights)?;
                    for r in 0..rows {
                        for (kk, out) in outs.iter_mut().enumerate() {
                            let dot = i64::from(prod.c.get(r, kk));
                            out.data[start + r] = ((dot + corrections[kk]) / i64::from(kernels[kk].divisor)) as i32;
                        }
                    }
                    tally.work.offload_outputs += (rows * kernels.len()) as u64;
                    start += rows;
                }
            }
        }
        tally.accel.add(&self.accel.report().since(&before));
        Ok(outs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Raster {
        Raster::from_fn(w, h, |i, j| (i * 10 + j) as i32)
    }

    #[test]
    fn neighborhood_copies_and_pads() {
        let img = ramp(8, 8);
        let m = neighborhood_matrix(&img, 4, 4);
        for di in 0..5 {
            for dj in 0..5 {
                assert_eq!(m[di][dj], ((2 + di) * 10 + 2 + dj) as i32);
            }
        }
        let c = neighborhood_matrix(&img, 0, 0);
        for di in 0..5 {
            for dj in 0..5 {
                let want = if di >= 2 && dj >= 2 { ((di - 2) * 10 + dj - 2) as i32 } else { 0 };
                assert_eq!(c[di][dj], want);
            }
        }
        let flat = Raster::from_fn(6, 6, |_, _| 9);
        assert_eq!(neighborhood_matrix(&flat, 3, 3), [[9; 5]; 5]);
    }

    #[test]
    fn trace_identity_cases() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let mut id = [[0i8; 5]; 5];
        for d in 0..5 {
            id[d][d] = 1;
        }
        assert_eq!(conv_value_via_matmul(&id, &id, &mut acc).unwrap(), 5);
        let mask = [[3i8; 5]; 5];
        assert_eq!(conv_value_via_matmul(&mask, &[[0; 5]; 5], &mut acc).unwrap(), 0);
    }

    #[test]
    fn identity_kernel_is_passthrough() {
        let img = ramp(9, 7);
        let k = Kernel5x5::identity(7);
        for mut b in [
            ConvBackend::scalar_fixed(),
            ConvBackend::scalar_float(),
            ConvBackend::accel(AccelConfig::default(), OffloadMode::PerPixel, 16).unwrap(),
            ConvBackend::accel(AccelConfig::default(), OffloadMode::Batched, 16).unwrap(),
        ] {
            assert_eq!(conv5x5(&img, &k, &mut b).unwrap().raster, img, "{}", b.label());
        }
    }

    #[test]
    fn offload_rejects_out_of_range() {
        let mut b = ConvBackend::accel(AccelConfig::default(), OffloadMode::Batched, 16).unwrap();
        let mut img = ramp(6, 6);
        img.data[7] = 300;
        assert!(matches!(
            conv5x5(&img, &Kernel5x5::gaussian(), &mut b),
            Err(Error::OperandOutOfRange { value: 300, index: 7 })
        ));
        let k = Kernel5x5::from_slice(&[200; 25], 1).unwrap();
        assert!(matches!(
            conv5x5(&ramp(6, 6), &k, &mut b),
            Err(Error::KernelOutOfRange(200))
        ));
    }

    #[test]
    fn too_small() {
        let mut b = ConvBackend::scalar_fixed();
        assert!(matches!(
            conv5x5(&Raster::zeros(4, 9), &Kernel5x5::gaussian(), &mut b),
            Err(Error::ImageTooSmall { width: 4, height: 9 })
        ));
    }

    #[test]
    fn names() {
        assert_eq!("accel".parse::<BackendKind>(), Ok(BackendKind::AccelOffload));
        assert!("gpu".parse::<BackendKind>().is_err());
        assert_eq!("batched".parse::<OffloadMode>(), Ok(OffloadMode::Batched));
    }
}
