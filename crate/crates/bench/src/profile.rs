//! Per-phase wall-clock profile of the detector.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lanekit_core::pipeline::{generate_outputs, Pipeline};
use lanekit_core::{load_pgm, BackendKind, Settings, Tally};
use serde::Serialize;

use crate::BenchError;

pub const LOAD: &str = "load";
pub const CANNY: &str = "canny";
pub const HOUGH: &str = "hough";
pub const COORDINATES: &str = "coordinates";
pub const GENERATION: &str = "generation";

/// Phases that make up line detection proper.
pub const DETECTION_PHASES: [&str; 3] = [CANNY, HOUGH, COORDINATES];

#[derive(Clone, Debug)]
pub struct ProfileOptions {
    pub repeats: usize,
    /// Write the edge map and overlay after detection, timed as its own phase.
    pub emit_output: bool,
    pub output_dir: PathBuf,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            emit_output: false,
            output_dir: std::env::temp_dir().join("lanekit-output"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseEntry {
    pub name: String,
    /// Mean over repeats, microseconds.
    pub wall_time_us: f64,
    /// Cost-model cycles of one run (host ops plus accelerator cycles).
    pub cycles: u64,
    /// Percentage of the summed mean wall time.
    pub share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub image: String,
    pub backend: String,
    pub repeats: usize,
    pub emit_output: bool,
    pub lines: usize,
    pub phases: Vec<PhaseEntry>,
}

impl PhaseReport {
    pub fn phase(&self, name: &str) -> Option<&PhaseEntry> {
        self.phases.iter().find(|p| p.name == name)
    }

    pub fn total_us(&self) -> f64 {
        self.phases.iter().map(|p| p.wall_time_us).sum()
    }

    /// Mean time of canny + hough + coordinates.
    pub fn detection_us(&self) -> f64 {
        DETECTION_PHASES
            .iter()
            .filter_map(|n| self.phase(n))
            .map(|p| p.wall_time_us)
            .sum()
    }

    /// Percentage of detection time spent in `name`.
    pub fn detection_share(&self, name: &str) -> f64 {
        self.phase(name).map_or(0.0, |p| 100.0 * p.wall_time_us / self.detection_us())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Columns: image, backend, phase, wall_time_us, cycles, share.
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["image", "backend", "phase", "wall_time_us", "cycles", "share"])?;
        for p in &self.phases {
            w.write_record([
                self.image.clone(),
                self.backend.clone(),
                p.name.clone(),
                format!("{:.1}", p.wall_time_us),
                p.cycles.to_string(),
                format!("{:.2}", p.share),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} [{}] mean of {} run(s), {} line(s)\n{:<12} {:>14} {:>8} {:>16}\n",
            self.image, self.backend, self.repeats, self.lines, "phase", "time (us)", "share", "model cycles"
        );
        for p in &self.phases {
            let _ = writeln!(s, "{:<12} {:>14.1} {:>7.2}% {:>16}", p.name, p.wall_time_us, p.share, p.cycles);
        }
        let _ = writeln!(s, "{:<12} {:>14.1} {:>7.2}%", "total", self.total_us(), 100.0);
        s
    }
}

fn micros(d: Duration) -> f64 {
    d.as_secs_f64() * 1e6
}

/// Runs load, canny, hough, coordinates (and generation) `repeats` times
/// on `path` and reports the mean time of each phase.
pub fn profile_pipeline(
    path: &Path,
    settings: &Settings,
    backend: BackendKind,
    opts: &ProfileOptions,
) -> Result<PhaseReport, BenchError> {
    if opts.repeats == 0 {
        return Err(BenchError::NoRepeats);
    }
    if opts.emit_output {
        std::fs::create_dir_all(&opts.output_dir)?;
    }
    let mut pipeline = Pipeline::with_backend(settings, settings.backend_of(backend)?)?;
    let label = pipeline.backend().label();
    let stem = path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned());
    let n_phases = if opts.emit_output { 5 } else { 4 };
    let mut sums = [Duration::ZERO; 5];
    let mut cycles = [0u64; 5];
    let mut lines = 0;
    for _ in 0..opts.repeats {
        let t = Instant::now();
        let img = load_pgm(path)?;
        sums[0] += t.elapsed();

        let mut tallies = [Tally::default(), Tally::default(), Tally::default()];
        let t = Instant::now();
        let edges = pipeline.canny_phase(&img, &mut tallies[0])?;
        sums[1] += t.elapsed();

        let t = Instant::now();
        let acc = pipeline.hough_phase(&edges.out, &mut tallies[1]);
        sums[2] += t.elapsed();

        let t = Instant::now();
        let found = pipeline.coordinates_phase(&acc, &mut tallies[2]);
        sums[3] += t.elapsed();
        lines = found.len();

        if opts.emit_output {
            let det = lanekit_core::Detection {
                edges,
                lines: found,
                tallies: Default::default(),
            };
            let t = Instant::now();
            generate_outputs(&img, &det, &opts.output_dir, &stem)?;
            sums[4] += t.elapsed();
        }
        for (c, t) in cycles[1..4].iter_mut().zip(&tallies) {
            *c = settings.cost.cycles(t);
        }
    }
    let names = [LOAD, CANNY, HOUGH, COORDINATES, GENERATION];
    let means: Vec<f64> = sums[..n_phases].iter().map(|&d| micros(d) / opts.repeats as f64).collect();
    let total: f64 = means.iter().sum();
    let phases = (0..n_phases)
        .map(|k| PhaseEntry {
            name: names[k].into(),
            wall_time_us: means[k],
            cycles: cycles[k],
            share: if total > 0.0 { 100.0 * means[k] / total } else { 0.0 },
        })
        .collect();
    Ok(PhaseReport {
        image: path.display().to_string(),
        backend: label,
        repeats: opts.repeats,
        emit_output: opts.emit_output,
        lines,
        phases,
    })
}
