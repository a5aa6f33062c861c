use super::{AccAddr, AccelConfig, AccelError, Dataflow, SpAddr};

/// How an `M×K · K×N` product is cut into array-sized tiles and where each
/// tile lives.
///
/// The lower half of the scratchpad holds A tiles, the upper half B tiles.
/// An operand whose tiles all fit in its half is loaded once and kept
/// resident; otherwise its tiles share a single slot and are reloaded on use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TilePlan {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub tile_rows: usize,
    pub tile_inner: usize,
    pub tile_cols: usize,
    pub row_blocks: usize,
    pub inner_blocks: usize,
    pub col_blocks: usize,
    pub dataflow: Dataflow,
    pub a_resident: bool,
    pub b_resident: bool,
    /// Output tiles the accumulator holds at once.
    pub acc_tiles: usize,
    b_base: usize,
}

/// One command group in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    /// Multiply A(i,k) by B(k,j) into the accumulator slot of C(i,j).
    /// `first` overwrites instead of accumulating.
    Compute {
        i: usize,
        j: usize,
        k: usize,
        first: bool,
    },
    /// Move C(i,j) out of the accumulator.
    Store { i: usize, j: usize },
}

impl TilePlan {
    pub fn new(cfg: &AccelConfig, m: usize, k: usize, n: usize) -> Result<Self, AccelError> {
        if m == 0 || k == 0 || n == 0 {
            return Err(AccelError::ZeroDimension);
        }
        let dim = cfg.array_dim;
        let acc_rows = cfg.acc_rows();
        if acc_rows == 0 {
            return Err(AccelError::InvalidConfig(
                "accumulator cannot hold a single array row".into(),
            ));
        }
        let tile_rows = dim.min(acc_rows);
        let (tile_inner, tile_cols) = (dim, dim);
        let half = cfg.sp_rows() / 2;
        let upper = cfg.sp_rows() - half;
        if tile_rows > half || tile_inner > upper {
            return Err(AccelError::CapacityOverflow {
                what: "scratchpad",
                start: 0,
                end: tile_rows + tile_inner,
                capacity: cfg.sp_rows(),
            });
        }
        let row_blocks = m.div_ceil(tile_rows);
        let inner_blocks = k.div_ceil(tile_inner);
        let col_blocks = n.div_ceil(tile_cols);
        Ok(Self {
            m,
            k,
            n,
            tile_rows,
            tile_inner,
            tile_cols,
            row_blocks,
            inner_blocks,
            col_blocks,
            dataflow: cfg.dataflow,
            a_resident: row_blocks * inner_blocks * tile_rows <= half,
            b_resident: inner_blocks * col_blocks * tile_inner <= upper,
            acc_tiles: acc_rows / tile_rows,
            b_base: half,
        })
    }

    pub fn tile_count(&self) -> usize {
        self.row_blocks * self.inner_blocks * self.col_blocks
    }

    pub fn a_tile_id(&self, i: usize, k: usize) -> usize {
        i * self.inner_blocks + k
    }

    pub fn b_tile_id(&self, k: usize, j: usize) -> usize {
        k * self.col_blocks + j
    }

    pub fn a_slot(&self, i: usize, k: usize) -> SpAddr {
        if self.a_resident {
            SpAddr(self.a_tile_id(i, k) * self.tile_rows)
        } else {
            SpAddr(0)
        }
    }

    pub fn b_slot(&self, k: usize, j: usize) -> SpAddr {
        if self.b_resident {
            SpAddr(self.b_base + self.b_tile_id(k, j) * self.tile_inner)
        } else {
            SpAddr(self.b_base)
        }
    }

    pub fn acc_slot(&self, i: usize) -> AccAddr {
        match self.dataflow {
            Dataflow::OutputStationary => AccAddr(0),
            Dataflow::WeightStationary => AccAddr((i % self.acc_tiles) * self.tile_rows),
        }
    }

    /// `(start, len)` of block `b` along an axis of length `total`.
    pub fn span(b: usize, tile: usize, total: usize) -> (usize, usize) {
        let start = b * tile;
        (start, tile.min(total - start))
    }

    pub fn steps(&self) -> Vec<Step> {
        let mut out = Vec::with_capacity(self.tile_count() + self.row_blocks * self.col_blocks);
        match self.dataflow {
            Dataflow::OutputStationary => {
                for i in 0..self.row_blocks {
                    for j in 0..self.col_blocks {
                        for k in 0..self.inner_blocks {
                            out.push(Step::Compute { i, j, k, first: k == 0 });
                        }
                        out.push(Step::Store { i, j });
                    }
                }
            }
            Dataflow::WeightStationary => {
                for j in 0..self.col_blocks {
                    let mut i0 = 0;
                    while i0 < self.row_blocks {
                        let i1 = (i0 + self.acc_tiles).min(self.row_blocks);
                        for k in 0..self.inner_blocks {
                            for i in i0..i1 {
                                out.push(Step::Compute { i, j, k, first: k == 0 });
                            }
                        }
                        for i in i0..i1 {
                            out.push(Step::Store { i, j });
                        }
                        i0 = i1;
                    }
                }
            }
        }
        out
    }
}
