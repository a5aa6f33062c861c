/// A 5×5 integer mask with a positive common divisor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Kernel5x5 {
    pub coeffs: [[i32; 5]; 5],
    pub divisor: i32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("kernel divisor must be >= 1, got {0}")]
    Divisor(i32),
    #[error("expected 25 coefficients, got {0}")]
    Count(usize),
}

impl Kernel5x5 {
    pub fn new(coeffs: [[i32; 5]; 5], divisor: i32) -> Result<Self, KernelError> {
        if divisor < 1 {
            return Err(KernelError::Divisor(divisor));
        }
        Ok(Self { coeffs, divisor })
    }

    pub fn from_slice(values: &[i32], divisor: i32) -> Result<Self, KernelError> {
        if values.len() != 25 {
            return Err(KernelError::Count(values.len()));
        }
        let mut coeffs = [[0; 5]; 5];
        for (k, &v) in values.iter().enumerate() {
            coeffs[k / 5][k % 5] = v;
        }
        Self::new(coeffs, divisor)
    }

    /// Center tap equal to the divisor, zero elsewhere.
    pub fn identity(divisor: i32) -> Self {
        let mut coeffs = [[0; 5]; 5];
        coeffs[2][2] = divisor;
        Self { coeffs, divisor }
    }

    pub fn sum(&self) -> i32 {
        self.coeffs.iter().flatten().sum()
    }

    pub fn flat(&self) -> [i32; 25] {
        let mut out = [0; 25];
        for (k, v) in self.coeffs.iter().flatten().enumerate() {
            out[k] = *v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut coeffs = [[0; 5]; 5];
        for (r, row) in self.coeffs.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                coeffs[c][r] = v;
            }
        }
        Self {
            coeffs,
            divisor: self.divisor,
        }
    }

    /// Classic 5×5 Gaussian (σ ≈ 1.4), unit gain over 159.
    pub fn gaussian() -> Self {
        Self {
            coeffs: [
                [2, 4, 5, 4, 2],
                [4, 9, 12, 9, 4],
                [5, 12, 15, 12, 5],
                [4, 9, 12, 9, 4],
                [2, 4, 5, 4, 2],
            ],
            divisor: 159,
        }
    }

    /// Extended Sobel, horizontal derivative (positive for intensity rising to the right).
    pub fn sobel_x() -> Self {
        Self {
            coeffs: [
                [-1, -2, 0, 2, 1],
                [-4, -8, 0, 8, 4],
                [-6, -12, 0, 12, 6],
                [-4, -8, 0, 8, 4],
                [-1, -2, 0, 2, 1],
            ],
            divisor: 1,
        }
    }

    pub fn sobel_y() -> Self {
        Self::sobel_x().transpose()
    }
}

/// The three masks used by the detector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KernelSet {
    pub gaussian: Kernel5x5,
    pub gradient_x: Kernel5x5,
    pub gradient_y: Kernel5x5,
}

impl Default for KernelSet {
    fn default() -> Self {
        Self {
            gaussian: Kernel5x5::gaussian(),
            gradient_x: Kernel5x5::sobel_x(),
            gradient_y: Kernel5x5::sobel_y(),
        }
    }
}
