use super::{
    AccAddr, AccelConfig, AccelError, CycleReport, Matrix, Region, Scratchpad, SpAddr, Step,
    TilePlan,
};

/// One systolic-array tile command.
#[derive(Clone, Copy, Debug)]
pub struct TileOp {
    pub a: SpAddr,
    pub b: SpAddr,
    pub d: Option<SpAddr>,
    pub out: AccAddr,
    pub rows: usize,
    pub inner: usize,
    pub cols: usize,
    /// Add into the existing accumulator contents instead of overwriting.
    pub accumulate: bool,
}

#[derive(Clone, Debug)]
pub struct MatmulOutput {
    pub c: Matrix<i32>,
    /// Cycles charged by this call alone.
    pub report: CycleReport,
    pub saturation_events: u64,
}

/// Single-owner accelerator state.
#[derive(Clone, Debug)]
pub struct Accelerator {
    cfg: AccelConfig,
    sp: Scratchpad,
    acc: Vec<i32>,
    report: CycleReport,
    saturations: u64,
}

impl Accelerator {
    pub fn new(cfg: AccelConfig) -> Result<Self, AccelError> {
        cfg.validate()?;
        Ok(Self {
            sp: Scratchpad::new(cfg.array_dim, cfg.rows_per_bank(), cfg.scratchpad_banks),
            acc: vec![0; cfg.acc_rows() * cfg.array_dim],
            report: CycleReport::default(),
            saturations: 0,
            cfg,
        })
    }

    pub fn config(&self) -> &AccelConfig {
        &self.cfg
    }

    /// Zeroes storage and counters.
    pub fn reset(&mut self) {
        self.sp.clear();
        self.acc.fill(0);
        self.report = CycleReport::default();
        self.saturations = 0;
    }

    pub fn report(&self) -> CycleReport {
        self.report
    }

    pub fn saturation_events(&self) -> u64 {
        self.saturations
    }

    pub fn scratchpad(&self) -> &Scratchpad {
        &self.sp
    }

    fn charge_transfer(&mut self, bytes: usize, inbound: bool) -> u64 {
        let c = self.cfg.transfer_cycles(bytes);
        if inbound {
            self.report.mvin_cycles += c;
        } else {
            self.report.mvout_cycles += c;
        }
        self.report.bytes_moved += bytes as u64;
        self.report.total_cycles += (c as f64 * self.cfg.transfer_serialization).round() as u64;
        c
    }

    fn check_rows(
        &self,
        what: &'static str,
        start: usize,
        rows: usize,
        capacity: usize,
    ) -> Result<(), AccelError> {
        if start + rows > capacity {
            return Err(AccelError::CapacityOverflow {
                what,
                start,
                end: start + rows,
                capacity,
            });
        }
        Ok(())
    }

    fn check_region<T>(&self, m: &Matrix<T>, region: Region) -> Result<(), AccelError>
    where
        T: Copy + Default,
    {
        if !region.fits(m.rows(), m.cols()) {
            return Err(AccelError::HostRegion {
                region,
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if region.cols > self.cfg.array_dim {
            return Err(AccelError::MisalignedRow {
                cols: region.cols,
                dim: self.cfg.array_dim,
            });
        }
        Ok(())
    }

    /// Copies a host region into consecutive scratchpad rows starting at `dst`.
    pub fn mvin(&mut self, host: &Matrix<i8>, region: Region, dst: SpAddr) -> Result<u64, AccelError> {
        self.check_region(host, region)?;
        self.check_rows("scratchpad", dst.0, region.rows, self.sp.rows())?;
        let (lo, hi) = self.cfg.elem_range();
        for r in 0..region.rows {
            let src = &host.row(region.row + r)[region.col..region.col + region.cols];
            if let Some(&v) = src.iter().find(|&&v| i64::from(v) < lo || i64::from(v) > hi) {
                return Err(AccelError::ElementOutOfRange {
                    value: v.into(),
                    bits: self.cfg.elem_bits,
                });
            }
        }
        for r in 0..region.rows {
            let src = &host.row(region.row + r)[region.col..region.col + region.cols];
            self.sp.write_row(dst.0 + r, src);
        }
        Ok(self.charge_transfer(region.rows * region.cols * self.cfg.elem_bytes(), true))
    }

    /// Copies accumulator rows starting at `src` into a host region.
    pub fn mvout(&mut self, src: AccAddr, host: &mut Matrix<i32>, region: Region) -> Result<u64, AccelError> {
        self.check_region(host, region)?;
        self.check_rows("accumulator", src.0, region.rows, self.cfg.acc_rows())?;
        let dim = self.cfg.array_dim;
        for r in 0..region.rows {
            let row = &self.acc[(src.0 + r) * dim..(src.0 + r) * dim + region.cols];
            for (c, &v) in row.iter().enumerate() {
                host.set(region.row + r, region.col + c, v);
            }
        }
        Ok(self.charge_transfer(region.rows * region.cols * self.cfg.acc_bytes(), false))
    }

    /// Copies scratchpad rows starting at `src` into a host region.
    pub fn mvout_scratchpad(
        &mut self,
        src: SpAddr,
        host: &mut Matrix<i8>,
        region: Region,
    ) -> Result<u64, AccelError> {
        self.check_region(host, region)?;
        self.check_rows("scratchpad", src.0, region.rows, self.sp.rows())?;
        for r in 0..region.rows {
            let row = self.sp.row(src.0 + r);
            for c in 0..region.cols {
                host.set(region.row + r, region.col + c, row[c]);
            }
        }
        Ok(self.charge_transfer(region.rows * region.cols * self.cfg.elem_bytes(), false))
    }

    fn require_resident(&self, start: SpAddr, rows: usize) -> Result<(), AccelError> {
        self.check_rows("scratchpad", start.0, rows, self.sp.rows())?;
        match (start.0..start.0 + rows).find(|&r| !self.sp.is_resident(r)) {
            Some(r) => Err(AccelError::NonResident(r)),
            None => Ok(()),
        }
    }

    /// `out (+)= A·B (+ D)` on one array-sized tile.
    ///
    /// A is `rows×inner` at `op.a`, B is `inner×cols` at `op.b`, D is
    /// `rows×cols`. Sums are exact and then saturated to `acc_bits`.
    pub fn execute_tile(&mut self, op: TileOp) -> Result<u64, AccelError> {
        let dim = self.cfg.array_dim;
        if op.rows > dim || op.inner > dim || op.cols > dim {
            return Err(AccelError::DimOverflow {
                rows: op.rows,
                inner: op.inner,
                cols: op.cols,
                dim,
            });
        }
        if op.rows == 0 || op.inner == 0 || op.cols == 0 {
            return Err(AccelError::ZeroDimension);
        }
        self.require_resident(op.a, op.rows)?;
        self.require_resident(op.b, op.inner)?;
        if let Some(d) = op.d {
            self.require_resident(d, op.rows)?;
        }
        self.check_rows("accumulator", op.out.0, op.rows, self.cfg.acc_rows())?;

        let (lo, hi) = self.cfg.acc_range();
        let sp = &self.sp;
        let b_rows: Vec<&[i8]> = (0..op.inner).map(|k| sp.row(op.b.0 + k)).collect();
        for r in 0..op.rows {
            let a_row = sp.row(op.a.0 + r);
            let d_row = op.d.map(|d| sp.row(d.0 + r));
            let out_row = &mut self.acc[(op.out.0 + r) * dim..(op.out.0 + r) * dim + op.cols];
            for (c, slot) in out_row.iter_mut().enumerate() {
                let mut sum: i64 = a_row[..op.inner]
                    .iter()
                    .zip(&b_rows)
                    .map(|(&x, row)| i64::from(x) * i64::from(row[c]))
                    .sum();
                if let Some(d_row) = d_row {
                    sum += i64::from(d_row[c]);
                }
                if op.accumulate {
                    sum += i64::from(*slot);
                }
                if sum < lo || sum > hi {
                    self.saturations += 1;
                }
                *slot = sum.clamp(lo, hi) as i32;
            }
        }

        let cycles = self.cfg.tile_cycles(op.rows);
        self.report.compute_cycles += cycles;
        self.report.total_cycles += cycles;
        self.report.tiles_executed += 1;
        Ok(cycles)
    }

    /// Full `M×K · K×N` product with automatically chosen tiling.
    ///
    /// Ragged edge tiles are zero-padded inside the array; only real data
    /// crosses the bus.
    pub fn tiled_matmul_auto(&mut self, a: &Matrix<i8>, b: &Matrix<i8>) -> Result<MatmulOutput, AccelError> {
        if a.cols() != b.rows() {
            return Err(AccelError::ShapeMismatch(a.cols(), b.rows()));
        }
        let plan = TilePlan::new(&self.cfg, a.rows(), a.cols(), b.cols())?;
        let before = self.report;
        let sat_before = self.saturations;
        let mut c = Matrix::zeros(plan.m, plan.n);

        let mut a_loaded = Residency::new(plan.a_resident, plan.row_blocks * plan.inner_blocks);
        let mut b_loaded = Residency::new(plan.b_resident, plan.inner_blocks * plan.col_blocks);

        for step in plan.steps() {
            match step {
                Step::Compute { i, j, k, first } => {
                    let (r0, rows) = TilePlan::span(i, plan.tile_rows, plan.m);
                    let (k0, inner) = TilePlan::span(k, plan.tile_inner, plan.k);
                    let (c0, cols) = TilePlan::span(j, plan.tile_cols, plan.n);
                    if a_loaded.needs_load(plan.a_tile_id(i, k)) {
                        let region = Region { row: r0, col: k0, rows, cols: inner };
                        self.mvin(a, region, plan.a_slot(i, k))?;
                    }
                    if b_loaded.needs_load(plan.b_tile_id(k, j)) {
                        let region = Region { row: k0, col: c0, rows: inner, cols };
                        self.mvin(b, region, plan.b_slot(k, j))?;
                    }
                    self.execute_tile(TileOp {
                        a: plan.a_slot(i, k),
                        b: plan.b_slot(k, j),
                        d: None,
                        out: plan.acc_slot(i),
                        rows,
                        inner,
                        cols,
                        accumulate: !first,
                    })?;
                }
                Step::Store { i, j } => {
                    let (r0, rows) = TilePlan::span(i, plan.tile_rows, plan.m);
                    let (c0, cols) = TilePlan::span(j, plan.tile_cols, plan.n);
                    let region = Region { row: r0, col: c0, rows, cols };
                    self.mvout(plan.acc_slot(i), &mut c, region)?;
                }
            }
        }

        Ok(MatmulOutput {
            c,
            report: self.report.since(&before),
            saturation_events: self.saturations - sat_before,
        })
    }
}

/// Which operand tiles currently sit in the scratchpad.
struct Residency {
    resident: bool,
    loaded: Vec<bool>,
    current: Option<usize>,
}

impl Residency {
    fn new(resident: bool, tiles: usize) -> Self {
        Self {
            resident,
            loaded: if resident { vec![false; tiles] } else { Vec::new() },
            current: None,
        }
    }

    fn needs_load(&mut self, tile: usize) -> bool {
        if self.resident {
            !std::mem::replace(&mut self.loaded[tile], true)
        } else if self.current == Some(tile) {
            false
        } else {
            self.current = Some(tile);
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accel::Dataflow;

    fn naive(a: &Matrix<i8>, b: &Matrix<i8>) -> Matrix<i64> {
        Matrix::from_fn(a.rows(), b.cols(), |r, c| {
            (0..a.cols()).map(|k| i64::from(a.get(r, k)) * i64::from(b.get(k, c))).sum()
        })
    }

    fn full(m: &Matrix<i8>) -> Region {
        m.full_region()
    }

    #[test]
    fn mvin_costs() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let a = Matrix::from_fn(16, 16, |r, c| (r * 16 + c) as i8);
        assert_eq!(acc.mvin(&a, full(&a), SpAddr(0)).unwrap(), 26);
        let empty = Matrix::<i8>::zeros(0, 16);
        assert_eq!(acc.mvin(&empty, full(&empty), SpAddr(100)).unwrap(), 10);
        assert!(!acc.scratchpad().is_resident(100));
    }

    #[test]
    fn mvin_errors() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let big = Matrix::<i8>::zeros(16385, 16);
        assert!(matches!(
            acc.mvin(&big, full(&big), SpAddr(0)),
            Err(AccelError::CapacityOverflow { .. })
        ));
        let wide = Matrix::<i8>::zeros(2, 17);
        assert!(matches!(
            acc.mvin(&wide, full(&wide), SpAddr(0)),
            Err(AccelError::MisalignedRow { cols: 17, dim: 16 })
        ));
        let m = Matrix::<i8>::zeros(2, 2);
        let r = Region { row: 1, col: 0, rows: 2, cols: 2 };
        assert!(matches!(acc.mvin(&m, r, SpAddr(0)), Err(AccelError::HostRegion { .. })));
    }

    #[test]
    fn narrow_elements_are_range_checked() {
        let cfg = AccelConfig { elem_bits: 4, ..AccelConfig::default() };
        let mut acc = Accelerator::new(cfg).unwrap();
        let m = Matrix::from_vec(1, 2, vec![7i8, 8]);
        assert_eq!(
            acc.mvin(&m, full(&m), SpAddr(0)),
            Err(AccelError::ElementOutOfRange { value: 8, bits: 4 })
        );
    }

    #[test]
    fn mvout_costs_and_roundtrip() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let mut host = Matrix::<i32>::zeros(16, 16);
        let r = host.full_region();
        assert_eq!(acc.mvout(AccAddr(0), &mut host, r).unwrap(), 74);

        let a = Matrix::from_fn(7, 9, |r, c| (r as i8 - 3) * (c as i8 - 4));
        acc.mvin(&a, full(&a), SpAddr(40)).unwrap();
        let mut back = Matrix::<i8>::zeros(7, 9);
        acc.mvout_scratchpad(SpAddr(40), &mut back, full(&a)).unwrap();
        assert_eq!(back, a);

        assert!(matches!(
            acc.mvout(AccAddr(1020), &mut host, Region { row: 0, col: 0, rows: 16, cols: 16 }),
            Err(AccelError::CapacityOverflow { .. })
        ));
    }

    fn load(acc: &mut Accelerator, m: &Matrix<i8>, at: usize) {
        acc.mvin(m, m.full_region(), SpAddr(at)).unwrap();
    }

    fn op(rows: usize, inner: usize, cols: usize, accumulate: bool) -> TileOp {
        TileOp {
            a: SpAddr(0),
            b: SpAddr(32),
            d: None,
            out: AccAddr(0),
            rows,
            inner,
            cols,
            accumulate,
        }
    }

    fn read_acc(acc: &mut Accelerator, rows: usize, cols: usize) -> Matrix<i32> {
        let mut out = Matrix::zeros(rows, cols);
        acc.mvout(AccAddr(0), &mut out, Region { row: 0, col: 0, rows, cols }).unwrap();
        out
    }

    #[test]
    fn identity_tile() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let id = Matrix::from_fn(4, 4, |r, c| i8::from(r == c));
        let b = Matrix::from_fn(4, 4, |r, c| (r * 4 + c) as i8 - 8);
        load(&mut acc, &id, 0);
        load(&mut acc, &b, 32);
        assert_eq!(acc.execute_tile(op(4, 4, 4, false)).unwrap(), 10 + 32 + 4);
        let out = read_acc(&mut acc, 4, 4);
        assert_eq!(out, Matrix::from_fn(4, 4, |r, c| i32::from(b.get(r, c))));
    }

    #[test]
    fn tile_accumulates_and_adds_bias() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let a = Matrix::from_fn(4, 4, |r, c| ((r * 7 + c * 3) % 11) as i8 - 5);
        let b = Matrix::from_fn(4, 4, |r, c| ((r * 5 + c) % 13) as i8 - 6);
        let d = Matrix::from_fn(4, 4, |r, c| (r + c) as i8);
        load(&mut acc, &a, 0);
        load(&mut acc, &b, 32);
        load(&mut acc, &d, 64);
        acc.execute_tile(op(4, 4, 4, false)).unwrap();
        acc.execute_tile(TileOp { d: Some(SpAddr(64)), ..op(4, 4, 4, true) }).unwrap();
        let prod = naive(&a, &b);
        let want = Matrix::from_fn(4, 4, |r, c| (2 * prod.get(r, c) + i64::from(d.get(r, c))) as i32);
        assert_eq!(read_acc(&mut acc, 4, 4), want);
    }

    #[test]
    fn tile_errors() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        assert_eq!(acc.execute_tile(op(4, 4, 4, false)), Err(AccelError::NonResident(0)));
        assert!(matches!(
            acc.execute_tile(op(17, 4, 4, false)),
            Err(AccelError::DimOverflow { .. })
        ));
    }

    #[test]
    fn saturates_at_acc_bits() {
        let cfg = AccelConfig { acc_bits: 16, ..AccelConfig::default() };
        let mut acc = Accelerator::new(cfg).unwrap();
        let a = Matrix::from_vec(1, 16, vec![127i8; 16]);
        let b = Matrix::from_vec(16, 1, vec![127i8; 16]);
        let out = acc.tiled_matmul_auto(&a, &b).unwrap();
        assert_eq!(out.c.get(0, 0), i32::from(i16::MAX));
        assert_eq!(out.saturation_events, 1);
    }

    #[test]
    fn scalar_product() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let out = acc
            .tiled_matmul_auto(&Matrix::from_vec(1, 1, vec![3]), &Matrix::from_vec(1, 1, vec![4]))
            .unwrap();
        assert_eq!(out.c.get(0, 0), 12);
        assert_eq!(out.report.tiles_executed, 1);
        assert_eq!(out.report, acc.report());
    }

    #[test]
    fn streaming_plan_still_exact() {
        // 64 scratchpad rows: 32 per operand half, so 48x48 A (9 tiles) must stream
        let cfg = AccelConfig {
            scratchpad_bytes: 64 * 16,
            dataflow: Dataflow::OutputStationary,
            ..AccelConfig::default()
        };
        let mut acc = Accelerator::new(cfg).unwrap();
        let a = Matrix::from_fn(48, 48, |r, c| ((r * 31 + c * 17) % 255) as i8);
        let b = Matrix::from_fn(48, 48, |r, c| ((r * 13 + c * 29) % 255) as i8);
        let out = acc.tiled_matmul_auto(&a, &b).unwrap();
        let want = naive(&a, &b);
        assert_eq!(out.c, Matrix::from_fn(48, 48, |r, c| want.get(r, c) as i32));
        assert!(out.report.bytes_moved > (48 * 48 * 2 + 48 * 48 * 4) as u64);
    }

    #[test]
    fn reset_clears_everything() {
        let mut acc = Accelerator::new(AccelConfig::default()).unwrap();
        let a = Matrix::from_fn(20, 20, |r, c| (r as i8) - (c as i8));
        let first = acc.tiled_matmul_auto(&a, &a).unwrap();
        acc.reset();
        assert_eq!(acc.report(), CycleReport::default());
        let mut host = Matrix::<i32>::from_fn(16, 16, |_, _| 5);
        let r = host.full_region();
        acc.mvout(AccAddr(0), &mut host, r).unwrap();
        assert!(host.data().iter().all(|&v| v == 0));
        acc.reset();
        let second = acc.tiled_matmul_auto(&a, &a).unwrap();
        assert_eq!(first.report, second.report);
        assert_eq!(first.c, second.c);
    }
}
