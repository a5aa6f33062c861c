//! Host-side work accounting and the scalar cycle model.
//!
//! Stages record *what* they did as event counts ([`WorkCounts`]); the
//! [`ScalarCostModel`] turns counts into host cycles. Accelerator cycles come
//! from the simulator's own [`CycleReport`] and are added unscaled.

use serde::{Deserialize, Serialize};

use crate::accel::CycleReport;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounts {
    /// Multiply-accumulate taps executed by a scalar convolution.
    pub conv_taps: u64,
    /// Output samples written by a scalar convolution.
    pub conv_outputs: u64,
    /// Pixels passed through the offload pre-pass (pad + zero-point shift).
    pub prepass_pixels: u64,
    /// Elements copied into accelerator operand buffers.
    pub operand_elems: u64,
    /// Offloaded results post-processed on the host (correction, divide, store).
    pub offload_outputs: u64,
    /// Diagonal entries summed to recover a per-pixel trace.
    pub trace_terms: u64,
    pub magnitude_pixels: u64,
    pub direction_pixels: u64,
    pub nms_pixels: u64,
    pub hysteresis_pixels: u64,
    /// Pixels promoted to edges while linking (each scans 8 neighbors).
    pub hysteresis_expansions: u64,
    pub hough_pixels: u64,
    pub hough_votes: u64,
    pub peak_bins: u64,
    pub peak_window_reads: u64,
    pub segments: u64,
}

impl WorkCounts {
    pub fn add(&mut self, o: &WorkCounts) {
        self.conv_taps += o.conv_taps;
        self.conv_outputs += o.conv_outputs;
        self.prepass_pixels += o.prepass_pixels;
        self.operand_elems += o.operand_elems;
        self.offload_outputs += o.offload_outputs;
        self.trace_terms += o.trace_terms;
        self.magnitude_pixels += o.magnitude_pixels;
        self.direction_pixels += o.direction_pixels;
        self.nms_pixels += o.nms_pixels;
        self.hysteresis_pixels += o.hysteresis_pixels;
        self.hysteresis_expansions += o.hysteresis_expansions;
        self.hough_pixels += o.hough_pixels;
        self.hough_votes += o.hough_votes;
        self.peak_bins += o.peak_bins;
        self.peak_window_reads += o.peak_window_reads;
        self.segments += o.segments;
    }
}

/// Host work plus accelerator cycles for one piece of the pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub work: WorkCounts,
    pub accel: CycleReport,
}

impl Tally {
    pub fn add(&mut self, o: &Tally) {
        self.work.add(&o.work);
        self.accel.add(&o.accel);
    }
}

/// Ops charged per event; one op costs `cpi` cycles.
///
/// The scalar tap price includes the two index additions and two bounds
/// checks that zero-padded borders require, on top of the two loads, the
/// multiply and the add. Offload operand copies read from a pre-padded
/// buffer and cost a load and a store.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarCostModel {
    pub cpi: f64,
    pub tap_ops: u64,
    pub conv_output_ops: u64,
    pub prepass_ops: u64,
    pub operand_elem_ops: u64,
    pub offload_output_ops: u64,
    pub trace_term_ops: u64,
    /// Squares, sum and a 32-step binary-search square root.
    pub magnitude_ops: u64,
    pub direction_ops: u64,
    pub nms_ops: u64,
    pub hysteresis_pixel_ops: u64,
    pub hysteresis_expansion_ops: u64,
    pub hough_pixel_ops: u64,
    pub hough_vote_ops: u64,
    pub peak_bin_ops: u64,
    pub peak_window_ops: u64,
    pub segment_ops: u64,
}

impl Default for ScalarCostModel {
    fn default() -> Self {
        Self {
            cpi: 1.0,
            tap_ops: 8,
            conv_output_ops: 3,
            prepass_ops: 3,
            operand_elem_ops: 2,
            offload_output_ops: 3,
            trace_term_ops: 1,
            magnitude_ops: 4 + 32 * 4,
            direction_ops: 8,
            nms_ops: 8,
            hysteresis_pixel_ops: 4,
            hysteresis_expansion_ops: 24,
            hough_pixel_ops: 2,
            hough_vote_ops: 6,
            peak_bin_ops: 2,
            peak_window_ops: 2,
            segment_ops: 60,
        }
    }
}

impl ScalarCostModel {
    pub fn ops(&self, w: &WorkCounts) -> u64 {
        w.conv_taps * self.tap_ops
            + w.conv_outputs * self.conv_output_ops
            + w.prepass_pixels * self.prepass_ops
            + w.operand_elems * self.operand_elem_ops
            + w.offload_outputs * self.offload_output_ops
            + w.trace_terms * self.trace_term_ops
            + w.magnitude_pixels * self.magnitude_ops
            + w.direction_pixels * self.direction_ops
            + w.nms_pixels * self.nms_ops
            + w.hysteresis_pixels * self.hysteresis_pixel_ops
            + w.hysteresis_expansions * self.hysteresis_expansion_ops
            + w.hough_pixels * self.hough_pixel_ops
            + w.hough_votes * self.hough_vote_ops
            + w.peak_bins * self.peak_bin_ops
            + w.peak_window_reads * self.peak_window_ops
            + w.segments * self.segment_ops
    }

    pub fn host_cycles(&self, w: &WorkCounts) -> u64 {
        (self.ops(w) as f64 * self.cpi).round() as u64
    }

    /// Host cycles plus accelerator cycles (no host/accelerator overlap).
    pub fn cycles(&self, t: &Tally) -> u64 {
        self.host_cycles(&t.work) + t.accel.total_cycles
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpi_scales_host_only() {
        let mut t = Tally::default();
        t.work.conv_taps = 10;
        t.accel.total_cycles = 7;
        let m = ScalarCostModel::default();
        assert_eq!(m.cycles(&t), 80 + 7);
        let m2 = ScalarCostModel { cpi: 2.0, ..m };
        assert_eq!(m2.cycles(&t), 160 + 7);
    }
}
