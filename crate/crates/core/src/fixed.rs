//! Integer helpers shared by the fixed-point paths: square root, Q-format
//! trig tables and rounding.

use std::sync::OnceLock;

/// Bit width of the sine/cosine tables used for Hough voting.
pub const TRIG_SHIFT: u32 = 14;

/// `tan(22.5°)` and `tan(67.5°)` in Q16.
const TAN_22_5_Q16: i64 = 27_146;
const TAN_67_5_Q16: i64 = 158_218;

/// Floor square root by binary search over the 32 result bits.
pub fn isqrt(n: u64) -> u32 {
    let mut root: u64 = 0;
    for bit in (0..32).rev() {
        let cand = root | (1 << bit);
        if cand * cand <= n {
            root = cand;
        }
    }
    root as u32
}

/// Smallest `r` with `r*r >= n`.
pub fn isqrt_ceil(n: u64) -> u32 {
    let r = isqrt(n);
    if u64::from(r) * u64::from(r) == n {
        r
    } else {
        r + 1
    }
}

fn requantize_q16(v: i64, shift: u32) -> i64 {
    debug_assert!(shift <= 16);
    if shift == 16 {
        v
    } else {
        let drop = 16 - shift;
        (v + (1 << (drop - 1))) >> drop
    }
}

/// `(tan 22.5°, tan 67.5°)` scaled by `2^shift`, rounded to nearest.
pub fn tan_bounds(shift: u32) -> (i64, i64) {
    (
        requantize_q16(TAN_22_5_Q16, shift),
        requantize_q16(TAN_67_5_Q16, shift),
    )
}

/// Divides by `2^shift`, rounding half away from zero.
pub fn round_shift(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        return v;
    }
    let half = 1i64 << (shift - 1);
    if v >= 0 {
        (v + half) >> shift
    } else {
        -((-v + half) >> shift)
    }
}

/// Q-format sine and cosine for whole degrees `0..180`.
#[derive(Debug)]
pub struct TrigTable {
    pub shift: u32,
    pub cos: [i64; 180],
    pub sin: [i64; 180],
}

impl TrigTable {
    pub fn new(shift: u32) -> Self {
        let scale = (1u64 << shift) as f64;
        let mut cos = [0i64; 180];
        let mut sin = [0i64; 180];
        for theta in 0..180 {
            let rad = (theta as f64).to_radians();
            cos[theta] = (rad.cos() * scale).round() as i64;
            sin[theta] = (rad.sin() * scale).round() as i64;
        }
        Self { shift, cos, sin }
    }

    /// `round(x·cosθ + y·sinθ)` in integer arithmetic.
    #[inline]
    pub fn rho(&self, x: i64, y: i64, theta: usize) -> i64 {
        round_shift(x * self.cos[theta] + y * self.sin[theta], self.shift)
    }
}

pub fn trig_table() -> &'static TrigTable {
    static TABLE: OnceLock<TrigTable> = OnceLock::new();
    TABLE.get_or_init(|| TrigTable::new(TRIG_SHIFT))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn isqrt_small() {
        assert_eq!(isqrt(0), 0);
        assert_eq!(isqrt(1), 1);
        assert_eq!(isqrt(24), 4);
        assert_eq!(isqrt(25), 5);
        assert_eq!(isqrt(3 * 3 + 4 * 4), 5);
        assert_eq!(isqrt(u64::from(u32::MAX) * u64::from(u32::MAX)), u32::MAX);
        assert_eq!(isqrt_ceil(26), 6);
        assert_eq!(isqrt_ceil(25), 5);
    }

    proptest! {
        #[test]
        fn isqrt_is_floor_root(n in 0u64..(1u64 << 62)) {
            let r = u64::from(isqrt(n));
            prop_assert!(r * r <= n);
            prop_assert!((r + 1) * (r + 1) > n);
        }
    }

    #[test]
    fn trig_table_precision() {
        let t = trig_table();
        let scale = (1u64 << t.shift) as f64;
        for theta in 0..180 {
            let rad = (theta as f64).to_radians();
            assert!((t.cos[theta] as f64 / scale - rad.cos()).abs() <= 1.0 / 512.0);
            assert!((t.sin[theta] as f64 / scale - rad.sin()).abs() <= 1.0 / 512.0);
        }
        assert_eq!(t.cos[0], 1 << TRIG_SHIFT);
        assert_eq!(t.sin[90], 1 << TRIG_SHIFT);
    }

    #[test]
    fn rounding_is_symmetric() {
        assert_eq!(round_shift(3, 1), 2);
        assert_eq!(round_shift(-3, 1), -2);
        assert_eq!(round_shift(5, 2), 1);
        assert_eq!(round_shift(-5, 2), -1);
        assert_eq!(round_shift(6, 2), 2);
        assert_eq!(round_shift(-6, 2), -2);
    }

    #[test]
    fn tan_constants() {
        assert_eq!(tan_bounds(10), (424, 2472));
        assert_eq!(tan_bounds(16), (TAN_22_5_Q16, TAN_67_5_Q16));
        let (lo, hi) = tan_bounds(16);
        assert!((lo as f64 / 65536.0 - 22.5f64.to_radians().tan()).abs() < 1e-5);
        assert!((hi as f64 / 65536.0 - 67.5f64.to_radians().tan()).abs() < 1e-5);
    }
}
