//! Functional and cycle-approximate model of a systolic-array matmul
//! accelerator with a banked scratchpad and a wide accumulator.
//!
//! Data moves in with [`Accelerator::mvin`], tiles run with
//! [`Accelerator::execute_tile`], and results leave through
//! [`Accelerator::mvout`]. [`Accelerator::tiled_matmul_auto`] plans and issues
//! all three for an arbitrary `M×K · K×N` product.
//!
//! Cost model, per command:
//! - transfers: `issue_latency + ceil(bytes * 8 / bus_bits)`
//! - tiles: `issue_latency + 2 * array_dim + rows`
//!
//! Commands never overlap. Bank conflicts are not modeled; banks only shape
//! the address space.

mod matrix;
mod plan;
mod report;
mod scratchpad;
mod sim;

pub use matrix::{Matrix, Region};
pub use plan::{Step, TilePlan};
pub use report::CycleReport;
pub use scratchpad::Scratchpad;
pub use sim::{Accelerator, MatmulOutput, TileOp};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dataflow {
    /// B tiles stay in the array while A rows stream past.
    WeightStationary,
    /// Partial sums for one output tile stay put while K is swept.
    OutputStationary,
}

impl std::str::FromStr for Dataflow {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ws" | "weight-stationary" => Ok(Dataflow::WeightStationary),
            "os" | "output-stationary" => Ok(Dataflow::OutputStationary),
            other => Err(format!("unknown dataflow {other:?} (expected ws or os)")),
        }
    }
}

/// Scratchpad row index. Row `r` lives in bank `r / rows_per_bank`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpAddr(pub usize);

/// Accumulator row index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccAddr(pub usize);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum AccelError {
    #[error("invalid accelerator config: {0}")]
    InvalidConfig(String),
    #[error("{what} overflow: rows {start}..{end} exceed capacity of {capacity} rows")]
    CapacityOverflow {
        what: &'static str,
        start: usize,
        end: usize,
        capacity: usize,
    },
    #[error("row of {cols} elements does not fit a {dim}-wide array row")]
    MisalignedRow { cols: usize, dim: usize },
    #[error("host region {region:?} outside a {rows}x{cols} matrix")]
    HostRegion {
        region: Region,
        rows: usize,
        cols: usize,
    },
    #[error("operand at scratchpad row {0} was never loaded")]
    NonResident(usize),
    #[error("tile dims {rows}x{inner}x{cols} exceed array dim {dim}")]
    DimOverflow {
        rows: usize,
        inner: usize,
        cols: usize,
        dim: usize,
    },
    #[error("zero-sized matmul operand")]
    ZeroDimension,
    #[error("inner dimensions disagree: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("element {value} outside the {bits}-bit input range")]
    ElementOutOfRange { value: i64, bits: u32 },
}

/// Accelerator geometry and cost parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelConfig {
    /// Processing elements per array side.
    pub array_dim: usize,
    pub elem_bits: u32,
    pub acc_bits: u32,
    pub scratchpad_bytes: usize,
    pub scratchpad_banks: usize,
    pub accumulator_bytes: usize,
    pub bus_bits: u32,
    /// Fixed cost of issuing any command from the host.
    pub issue_latency: u64,
    pub dataflow: Dataflow,
    /// Fraction of transfer cycles that are not hidden behind compute.
    /// 1.0 means fully sequential.
    pub transfer_serialization: f64,
}

impl Default for AccelConfig {
    fn default() -> Self {
        Self {
            array_dim: 16,
            elem_bits: 8,
            acc_bits: 32,
            scratchpad_bytes: 256 * 1024,
            scratchpad_banks: 4,
            accumulator_bytes: 64 * 1024,
            bus_bits: 128,
            issue_latency: 10,
            dataflow: Dataflow::WeightStationary,
            transfer_serialization: 1.0,
        }
    }
}

impl AccelConfig {
    pub fn validate(&self) -> Result<(), AccelError> {
        let bad = |m: String| Err(AccelError::InvalidConfig(m));
        if self.array_dim == 0 {
            return bad("array_dim must be >= 1".into());
        }
        if !(1..=8).contains(&self.elem_bits) {
            return bad(format!("elem_bits {} not in 1..=8", self.elem_bits));
        }
        if !(2..=32).contains(&self.acc_bits) {
            return bad(format!("acc_bits {} not in 2..=32", self.acc_bits));
        }
        if self.scratchpad_banks == 0 || !self.scratchpad_bytes.is_multiple_of(self.scratchpad_banks) {
            return bad(format!(
                "scratchpad_bytes {} not divisible into {} banks",
                self.scratchpad_bytes, self.scratchpad_banks
            ));
        }
        if self.bus_bits == 0 || !self.bus_bits.is_multiple_of(8) {
            return bad(format!("bus_bits {} must be a positive multiple of 8", self.bus_bits));
        }
        if self.sp_rows() < 2 {
            return bad("scratchpad holds fewer than two rows".into());
        }
        if !(0.0..=1.0).contains(&self.transfer_serialization) {
            return bad("transfer_serialization must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn elem_bytes(&self) -> usize {
        self.elem_bits.div_ceil(8) as usize
    }

    pub fn acc_bytes(&self) -> usize {
        self.acc_bits.div_ceil(8) as usize
    }

    pub fn sp_rows(&self) -> usize {
        self.scratchpad_bytes / (self.array_dim * self.elem_bytes())
    }

    pub fn rows_per_bank(&self) -> usize {
        self.sp_rows() / self.scratchpad_banks
    }

    pub fn acc_rows(&self) -> usize {
        self.accumulator_bytes / (self.array_dim * self.acc_bytes())
    }

    pub fn elem_range(&self) -> (i64, i64) {
        let h = 1i64 << (self.elem_bits - 1);
        (-h, h - 1)
    }

    pub fn acc_range(&self) -> (i64, i64) {
        let h = 1i64 << (self.acc_bits - 1);
        (-h, h - 1)
    }

    /// Cycles for moving `bytes` across the memory bus, including issue.
    pub fn transfer_cycles(&self, bytes: usize) -> u64 {
        self.issue_latency + ((bytes as u64) * 8).div_ceil(u64::from(self.bus_bits))
    }

    pub fn tile_cycles(&self, rows: usize) -> u64 {
        self.issue_latency + 2 * self.array_dim as u64 + rows as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let c = AccelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.sp_rows(), 16384);
        assert_eq!(c.rows_per_bank(), 4096);
        assert_eq!(c.acc_rows(), 1024);
        assert_eq!(c.transfer_cycles(256), 26);
        assert_eq!(c.transfer_cycles(1024), 74);
        assert_eq!(c.transfer_cycles(0), 10);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = AccelConfig::default();
        for c in [
            AccelConfig { array_dim: 0, ..base },
            AccelConfig { scratchpad_banks: 3, ..base },
            AccelConfig { bus_bits: 12, ..base },
            AccelConfig { elem_bits: 9, ..base },
            AccelConfig { transfer_serialization: 1.5, ..base },
        ] {
            assert!(matches!(c.validate(), Err(AccelError::InvalidConfig(_))), "{c:?}");
        }
    }

    #[test]
    fn dataflow_names() {
        assert_eq!("ws".parse::<Dataflow>(), Ok(Dataflow::WeightStationary));
        assert_eq!("OS".parse::<Dataflow>(), Ok(Dataflow::OutputStationary));
        assert!("xs".parse::<Dataflow>().is_err());
    }
}
