//! Backend speedup tables from cost-model cycles.
//!
//! Each configuration runs the detector over the same images. Its cycle
//! count is the scalar cost model applied to the host work plus whatever
//! the accelerator charged; time is cycles divided by the clock.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use lanekit_core::pipeline::Pipeline;
use lanekit_core::{load_pgm, BackendKind, GrayImage, OffloadMode, Settings};
use serde::Serialize;

use crate::BenchError;

pub const DEFAULT_MHZ: f64 = 50.0;

/// A backend at a clock frequency, written `fixed@50` or `accel/perpixel@80`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackendSpec {
    pub kind: BackendKind,
    /// Offload mode; `None` takes the mode from the settings.
    pub mode: Option<OffloadMode>,
    pub mhz: f64,
}

impl BackendSpec {
    pub fn new(kind: BackendKind, mhz: f64) -> Self {
        Self { kind, mode: None, mhz }
    }

    pub fn with_mode(mut self, mode: OffloadMode) -> Self {
        self.mode = Some(mode);
        self
    }

    /// Parses `id[@MHz]`, using `default_mhz` when no frequency is given.
    pub fn parse(s: &str, default_mhz: f64) -> Result<Self, BenchError> {
        let (id, mhz) = match s.split_once('@') {
            Some((id, f)) => {
                let mhz: f64 = f.parse().map_err(|_| BenchError::BadFrequency(s.into()))?;
                if !(mhz.is_finite() && mhz > 0.0) {
                    return Err(BenchError::BadFrequency(s.into()));
                }
                (id, mhz)
            }
            None => (s, default_mhz),
        };
        let (kind, mode) = match id.split_once('/') {
            Some((k, m)) => (k, Some(m)),
            None => (id, None),
        };
        let kind = BackendKind::from_str(kind).map_err(|_| BenchError::UnknownBackend(s.into()))?;
        let mode = match mode {
            None => None,
            Some(_) if kind != BackendKind::AccelOffload => return Err(BenchError::UnknownBackend(s.into())),
            Some(m) => Some(OffloadMode::from_str(m).map_err(|_| BenchError::UnknownBackend(s.into()))?),
        };
        Ok(Self { kind, mode, mhz })
    }

    fn resolved_mode(&self, settings: &Settings) -> Option<OffloadMode> {
        (self.kind == BackendKind::AccelOffload).then(|| self.mode.unwrap_or(settings.accel_mode))
    }

    pub fn label(&self, settings: &Settings) -> String {
        let id = match self.resolved_mode(settings) {
            Some(OffloadMode::PerPixel) => "accel/perpixel",
            Some(OffloadMode::Batched) => "accel/batched",
            None => self.kind.id(),
        };
        format!("{id}@{}", self.mhz)
    }
}

impl FromStr for BackendSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, DEFAULT_MHZ)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedupRow {
    pub backend: String,
    pub frequency_mhz: f64,
    /// Model cycles summed over all images.
    pub total_cycles: u64,
    /// `total_cycles / frequency`, milliseconds.
    pub derived_time_ms: f64,
    /// Baseline derived time over this row's derived time.
    pub speedup: f64,
    /// Host wall-clock time of the runs, milliseconds. Informational only.
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedupTable {
    pub baseline: String,
    pub images: usize,
    pub rows: Vec<SpeedupRow>,
}

/// Milliseconds taken by `cycles` at `mhz`.
pub fn derived_time_ms(cycles: u64, mhz: f64) -> f64 {
    cycles as f64 / (mhz * 1e3)
}

impl SpeedupTable {
    pub fn row(&self, backend: &str) -> Option<&SpeedupRow> {
        self.rows.iter().find(|r| r.backend == backend)
    }

    /// Columns: backend, frequency_mhz, total_cycles, derived_time_ms,
    /// speedup, wall_time_ms.
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["backend", "frequency_mhz", "total_cycles", "derived_time_ms", "speedup", "wall_time_ms"])?;
        for r in &self.rows {
            w.write_record([
                r.backend.clone(),
                r.frequency_mhz.to_string(),
                r.total_cycles.to_string(),
                format!("{:.6}", r.derived_time_ms),
                format!("{:.2}", r.speedup),
                format!("{:.3}", r.wall_time_ms),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "speedup vs {} over {} image(s)\n{:<22} {:>8} {:>14} {:>14} {:>8} {:>12}\n",
            self.baseline, self.images, "backend", "MHz", "model cycles", "model ms", "speedup", "host ms"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<22} {:>8} {:>14} {:>14.3} {:>7.2}x {:>12.1}",
                r.backend, r.frequency_mhz, r.total_cycles, r.derived_time_ms, r.speedup, r.wall_time_ms
            );
        }
        s
    }
}

/// Loads `images` and runs every configuration over them; `baseline`
/// indexes `configs`.
pub fn compare_backends(
    images: &[PathBuf],
    settings: &Settings,
    configs: &[BackendSpec],
    baseline: usize,
) -> Result<SpeedupTable, BenchError> {
    if configs.len() < 2 || baseline >= configs.len() {
        return Err(BenchError::NeedBaseline);
    }
    let loaded = images.iter().map(load_pgm).collect::<Result<Vec<_>, _>>()?;
    compare_images(&loaded, settings, configs, baseline)
}

pub fn compare_images(
    loaded: &[GrayImage],
    settings: &Settings,
    configs: &[BackendSpec],
    baseline: usize,
) -> Result<SpeedupTable, BenchError> {
    if configs.len() < 2 || baseline >= configs.len() {
        return Err(BenchError::NeedBaseline);
    }
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        let mut s = settings.clone();
        if let Some(m) = config.resolved_mode(settings) {
            s.accel_mode = m;
        }
        let mut pipeline = Pipeline::with_backend(&s, s.backend_of(config.kind)?)?;
        let mut cycles = 0u64;
        let t = Instant::now();
        for img in loaded {
            let det = pipeline.detect(img)?;
            cycles += s.cost.cycles(&det.tallies.total());
        }
        rows.push(SpeedupRow {
            backend: config.label(settings),
            frequency_mhz: config.mhz,
            total_cycles: cycles,
            derived_time_ms: derived_time_ms(cycles, config.mhz),
            speedup: 0.0,
            wall_time_ms: t.elapsed().as_secs_f64() * 1e3,
        });
    }
    let base = rows[baseline].derived_time_ms;
    for r in &mut rows {
        r.speedup = base / r.derived_time_ms;
    }
    Ok(SpeedupTable {
        baseline: rows[baseline].backend.clone(),
        images: loaded.len(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        let s = BackendSpec::parse("fixed@50", 80.0).unwrap();
        assert_eq!(s, BackendSpec::new(BackendKind::ScalarFixed, 50.0));
        let s = BackendSpec::parse("accel/perpixel", 80.0).unwrap();
        assert_eq!(s.mode, Some(OffloadMode::PerPixel));
        assert_eq!(s.mhz, 80.0);
        assert!(matches!(BackendSpec::parse("gpu@50", 50.0), Err(BenchError::UnknownBackend(_))));
        assert!(matches!(BackendSpec::parse("fixed/batched", 50.0), Err(BenchError::UnknownBackend(_))));
        assert!(matches!(BackendSpec::parse("fixed@fast", 50.0), Err(BenchError::BadFrequency(_))));
        assert!(matches!(BackendSpec::parse("fixed@0", 50.0), Err(BenchError::BadFrequency(_))));
    }

    #[test]
    fn frequency_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.pgm");
        lanekit_core::save_pgm(&lanekit_core::synth::road_image(4, 64, 48), &path).unwrap();
        let configs = [
            BackendSpec::new(BackendKind::ScalarFixed, 50.0),
            BackendSpec::new(BackendKind::ScalarFixed, 80.0),
            BackendSpec::new(BackendKind::ScalarFixed, 50.0),
        ];
        let t = compare_backends(&[path], &Settings::default(), &configs, 0).unwrap();
        assert_eq!(t.rows[0].speedup, 1.0);
        assert_eq!(t.rows[2].speedup, 1.0);
        assert_eq!(t.rows[0].total_cycles, t.rows[1].total_cycles);
        let ratio = t.rows[0].derived_time_ms / t.rows[1].derived_time_ms;
        assert!((ratio - 1.6).abs() < 1e-12);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("backend,frequency_mhz,total_cycles,derived_time_ms,speedup,wall_time_ms\n"));
        assert!(csv.lines().nth(1).unwrap().contains(",1.00,"));
    }

    #[test]
    fn needs_two_configs() {
        let one = [BackendSpec::new(BackendKind::ScalarFixed, 50.0)];
        assert!(matches!(
            compare_backends(&[], &Settings::default(), &one, 0),
            Err(BenchError::NeedBaseline)
        ));
    }
}
