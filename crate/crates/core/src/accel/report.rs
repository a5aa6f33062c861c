use serde::{Deserialize, Serialize};

/// Cycle accounting for accelerator commands.
///
/// `total_cycles` is accumulated per command as
/// `compute + round(transfer_serialization * transfer)`, so with the default
/// serialization of 1.0 it equals `mvin + compute + mvout`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    pub mvin_cycles: u64,
    pub mvout_cycles: u64,
    pub compute_cycles: u64,
    pub total_cycles: u64,
    pub tiles_executed: u64,
    pub bytes_moved: u64,
}

impl CycleReport {
    pub fn add(&mut self, o: &CycleReport) {
        self.mvin_cycles += o.mvin_cycles;
        self.mvout_cycles += o.mvout_cycles;
        self.compute_cycles += o.compute_cycles;
        self.total_cycles += o.total_cycles;
        self.tiles_executed += o.tiles_executed;
        self.bytes_moved += o.bytes_moved;
    }

    /// Field-wise difference against an earlier snapshot of the same counters.
    pub fn since(&self, earlier: &CycleReport) -> CycleReport {
        CycleReport {
            mvin_cycles: self.mvin_cycles - earlier.mvin_cycles,
            mvout_cycles: self.mvout_cycles - earlier.mvout_cycles,
            compute_cycles: self.compute_cycles - earlier.compute_cycles,
            total_cycles: self.total_cycles - earlier.total_cycles,
            tiles_executed: self.tiles_executed - earlier.tiles_executed,
            bytes_moved: self.bytes_moved - earlier.bytes_moved,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    /// Header line plus one record, columns in field order.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self).expect("plain struct serializes");
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii csv")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_fields() {
        let r = CycleReport {
            mvin_cycles: 26,
            mvout_cycles: 74,
            compute_cycles: 58,
            total_cycles: 158,
            tiles_executed: 1,
            bytes_moved: 1536,
        };
        assert_eq!(
            r.to_csv(),
            "mvin_cycles,mvout_cycles,compute_cycles,total_cycles,tiles_executed,bytes_moved\n\
             26,74,58,158,1,1536\n"
        );
        let back: CycleReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
