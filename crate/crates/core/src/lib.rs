//! Lane detection (Canny edges, Hough voting, line extraction) over
//! interchangeable convolution backends, including offload to a simulated
//! systolic-array matrix accelerator.

pub mod accel;
pub mod backend;
pub mod canny;
pub mod config;
pub mod cost;
pub mod fixed;
pub mod hough;
pub mod imaging;
pub mod kernel;
pub mod pipeline;
pub mod synth;

pub use accel::{AccelConfig, AccelError, Accelerator, CycleReport, Dataflow, Matrix};
pub use backend::{conv5x5, BackendKind, ConvBackend, OffloadMode};
pub use canny::{run_canny, Canny, CannyParams, Direction, EdgeMap, GradientField};
pub use config::{ConfigError, Settings};
pub use cost::{ScalarCostModel, Tally, WorkCounts};
pub use hough::{
    accumulate, find_lines, polar_to_segment, run_hough, DetectedLine, HoughAccumulator, HoughParams, LineSegment,
    PolarLine,
};
pub use imaging::{load_pgm, render_overlay, save_pgm, GrayImage, ImageError, Raster, RgbImage};
pub use kernel::{Kernel5x5, KernelSet};
pub use pipeline::{Detection, PhaseTallies, Pipeline};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Accel(#[from] AccelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid kernel: {0}")]
    Kernel(#[from] kernel::KernelError),
    #[error("image is {width}x{height}; at least 5x5 is required")]
    ImageTooSmall { width: usize, height: usize },
    #[error("pixel value {value} at index {index} does not fit an 8-bit offload operand")]
    OperandOutOfRange { value: i32, index: usize },
    #[error("kernel coefficient {0} does not fit the accelerator element width")]
    KernelOutOfRange(i32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
