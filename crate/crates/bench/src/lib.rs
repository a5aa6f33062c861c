//! Phase profiling, backend speedup tables, the parallel array-add
//! microbenchmark and the accelerator self-test.

pub mod array_add;
pub mod compare;
pub mod profile;
pub mod selftest;

pub use array_add::{array_add, array_add_bench, ScalingReport};
pub use compare::{compare_backends, compare_images, BackendSpec, SpeedupRow, SpeedupTable};
pub use profile::{profile_pipeline, PhaseEntry, PhaseReport, ProfileOptions};
pub use selftest::{accel_selftest, SelftestReport};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] lanekit_core::Error),
    #[error(transparent)]
    Image(#[from] lanekit_core::ImageError),
    #[error("unknown backend {0:?} (expected float, fixed, accel, accel/perpixel or accel/batched, optionally @MHz)")]
    UnknownBackend(String),
    #[error("bad frequency in {0:?}")]
    BadFrequency(String),
    #[error("a comparison needs at least two configurations and a baseline among them")]
    NeedBaseline,
    #[error("cannot split {n} elements evenly across {workers} workers")]
    InvalidPartition { n: usize, workers: usize },
    #[error("repeats must be >= 1")]
    NoRepeats,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Accel(#[from] lanekit_core::AccelError),
}
