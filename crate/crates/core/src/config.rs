//! `key = value` configuration files.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are
//! ignored. Keys not present keep their defaults, unknown keys are errors.
//! The shipped defaults live in `config/default.conf`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::accel::AccelConfig;
use crate::backend::{BackendKind, ConvBackend, OffloadMode, DEFAULT_BATCH_ROWS};
use crate::canny::CannyParams;
use crate::cost::ScalarCostModel;
use crate::hough::HoughParams;
use crate::kernel::{Kernel5x5, KernelSet};

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.conf");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {msg}")]
    Value { line: usize, key: String, msg: String },
}

/// Everything a pipeline run can be configured with.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub backend: BackendKind,
    pub canny: CannyParams,
    pub kernels: KernelSet,
    pub hough: HoughParams,
    pub accel_mode: OffloadMode,
    pub batch_rows: usize,
    pub accel: AccelConfig,
    pub cost: ScalarCostModel,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            backend: BackendKind::ScalarFixed,
            canny: CannyParams::default(),
            kernels: KernelSet::default(),
            hough: HoughParams::default(),
            accel_mode: OffloadMode::Batched,
            batch_rows: DEFAULT_BATCH_ROWS,
            accel: AccelConfig::default(),
            cost: ScalarCostModel::default(),
        }
    }
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
}

fn kernel_values(v: &str) -> Result<Vec<i32>, String> {
    v.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|t| !t.is_empty())
        .map(num::<i32>)
        .collect()
}

fn set_kernel(k: &mut Kernel5x5, v: &str) -> Result<(), String> {
    let vals = kernel_values(v)?;
    *k = Kernel5x5::from_slice(&vals, k.divisor).map_err(|e| e.to_string())?;
    Ok(())
}

fn set_divisor(k: &mut Kernel5x5, v: &str) -> Result<(), String> {
    *k = Kernel5x5::new(k.coeffs, num(v)?).map_err(|e| e.to_string())?;
    Ok(())
}

impl Settings {
    /// Applies the assignments in `text` on top of `self`.
    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            self.set(key, value).map_err(|e| match e {
                SetError::UnknownKey => ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                },
                SetError::BadValue(msg) => ConfigError::Value {
                    line,
                    key: key.to_string(),
                    msg,
                },
            })?;
        }
        Ok(())
    }

    /// Assigns one key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), SetError> {
        let c = &mut self.canny;
        let a = &mut self.accel;
        let m = &mut self.cost;
        match key {
            "backend" => self.backend = v.parse()?,
            "canny.gradient_threshold" => c.gradient_threshold = num(v)?,
            "canny.direction_threshold" => c.direction_threshold = num(v)?,
            "canny.hysteresis_low" => c.hysteresis_low = num(v)?,
            "canny.hysteresis_high" => c.hysteresis_high = num(v)?,
            "canny.fixed_point_shift" => c.fixed_point_shift = num(v)?,
            "kernel.gaussian" => set_kernel(&mut self.kernels.gaussian, v)?,
            "kernel.gaussian.divisor" => set_divisor(&mut self.kernels.gaussian, v)?,
            "kernel.gradient_x" => set_kernel(&mut self.kernels.gradient_x, v)?,
            "kernel.gradient_x.divisor" => set_divisor(&mut self.kernels.gradient_x, v)?,
            "kernel.gradient_y" => set_kernel(&mut self.kernels.gradient_y, v)?,
            "kernel.gradient_y.divisor" => set_divisor(&mut self.kernels.gradient_y, v)?,
            "hough.vote_threshold" => {
                self.hough.vote_threshold = if v == "auto" { None } else { Some(num(v)?) }
            }
            "hough.neighborhood_radius" => self.hough.neighborhood_radius = num(v)?,
            "hough.pixel_threshold" => self.hough.pixel_threshold = num(v)?,
            "hough.wrap_theta" => self.hough.wrap_theta = num(v)?,
            "accel.mode" => self.accel_mode = v.parse()?,
            "accel.batch_rows" => self.batch_rows = num(v)?,
            "accel.array_dim" => a.array_dim = num(v)?,
            "accel.elem_bits" => a.elem_bits = num(v)?,
            "accel.acc_bits" => a.acc_bits = num(v)?,
            "accel.scratchpad_bytes" => a.scratchpad_bytes = num(v)?,
            "accel.scratchpad_banks" => a.scratchpad_banks = num(v)?,
            "accel.accumulator_bytes" => a.accumulator_bytes = num(v)?,
            "accel.bus_bits" => a.bus_bits = num(v)?,
            "accel.issue_latency" => a.issue_latency = num(v)?,
            "accel.dataflow" => a.dataflow = v.parse()?,
            "accel.transfer_serialization" => a.transfer_serialization = num(v)?,
            "cost.cpi" => m.cpi = num(v)?,
            "cost.tap_ops" => m.tap_ops = num(v)?,
            "cost.conv_output_ops" => m.conv_output_ops = num(v)?,
            "cost.prepass_ops" => m.prepass_ops = num(v)?,
            "cost.operand_elem_ops" => m.operand_elem_ops = num(v)?,
            "cost.offload_output_ops" => m.offload_output_ops = num(v)?,
            "cost.trace_term_ops" => m.trace_term_ops = num(v)?,
            "cost.magnitude_ops" => m.magnitude_ops = num(v)?,
            "cost.direction_ops" => m.direction_ops = num(v)?,
            "cost.nms_ops" => m.nms_ops = num(v)?,
            "cost.hysteresis_pixel_ops" => m.hysteresis_pixel_ops = num(v)?,
            "cost.hysteresis_expansion_ops" => m.hysteresis_expansion_ops = num(v)?,
            "cost.hough_pixel_ops" => m.hough_pixel_ops = num(v)?,
            "cost.hough_vote_ops" => m.hough_vote_ops = num(v)?,
            "cost.peak_bin_ops" => m.peak_bin_ops = num(v)?,
            "cost.peak_window_ops" => m.peak_window_ops = num(v)?,
            "cost.segment_ops" => m.segment_ops = num(v)?,
            _ => return Err(SetError::UnknownKey),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut s = Self::default();
        s.apply(text)?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Checks cross-field constraints.
    pub fn validate(&self) -> Result<(), crate::Error> {
        self.canny.validate()?;
        self.hough.validate()?;
        self.accel.validate()?;
        if self.batch_rows == 0 {
            return Err(crate::Error::InvalidParams("accel.batch_rows must be >= 1".into()));
        }
        Ok(())
    }

    /// Backend of the given kind built from these settings.
    pub fn backend_of(&self, kind: BackendKind) -> Result<ConvBackend, crate::Error> {
        Ok(match kind {
            BackendKind::ScalarFloat => ConvBackend::scalar_float(),
            BackendKind::ScalarFixed => ConvBackend::scalar_fixed(),
            BackendKind::AccelOffload => ConvBackend::accel(self.accel, self.accel_mode, self.batch_rows)?,
        })
    }

    pub fn build_backend(&self) -> Result<ConvBackend, crate::Error> {
        self.backend_of(self.backend)
    }
}

/// Failure of a single assignment.
#[derive(Debug, PartialEq, Eq)]
pub enum SetError {
    UnknownKey,
    BadValue(String),
}

impl From<String> for SetError {
    fn from(msg: String) -> Self {
        SetError::BadValue(msg)
    }
}
