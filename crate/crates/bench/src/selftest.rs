//! Randomized check of the accelerator simulator against plain host
//! arithmetic.

use std::fmt::Write as _;

use lanekit_core::accel::{AccelConfig, Accelerator, Dataflow, Matrix};
use lanekit_core::backend::{conv5x5, conv_value_via_matmul, ConvBackend, OffloadMode};
use lanekit_core::imaging::Raster;
use lanekit_core::kernel::Kernel5x5;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::BenchError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestCheck {
    pub name: String,
    pub cases: usize,
    pub mismatches: usize,
    /// First failing case, if any.
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<SelftestCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.mismatches == 0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("accelerator self-test, seed {}\n", self.seed);
        for c in &self.checks {
            let verdict = if c.mismatches == 0 { "ok" } else { "MISMATCH" };
            let _ = write!(s, "{:<34} {:>5} cases  {verdict}", c.name, c.cases);
            if let Some(f) = &c.first_failure {
                let _ = write!(s, " ({} failing, first: {f})", c.mismatches);
            }
            s.push('\n');
        }
        s
    }
}

fn check(name: &str, cases: usize, mut run: impl FnMut(usize) -> Result<Option<String>, BenchError>) -> Result<SelftestCheck, BenchError> {
    let mut c = SelftestCheck {
        name: name.into(),
        cases,
        mismatches: 0,
        first_failure: None,
    };
    for k in 0..cases {
        if let Some(msg) = run(k)? {
            c.mismatches += 1;
            c.first_failure.get_or_insert(msg);
        }
    }
    Ok(c)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<i8> {
    Matrix::from_fn(rows, cols, |_, _| rng.random())
}

fn naive(a: &Matrix<i8>, b: &Matrix<i8>) -> Vec<i64> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut c = vec![0i64; m * n];
    for i in 0..m {
        for t in 0..k {
            let x = i64::from(a.get(i, t));
            for j in 0..n {
                c[i * n + j] += x * i64::from(b.get(t, j));
            }
        }
    }
    c
}

/// `cases` random `M×K·K×N` products with dimensions in `[1, 64]` on both
/// dataflows, the 5×5 trace identity, and offloaded convolution against the
/// scalar integer backend.
pub fn accel_selftest(cfg: &AccelConfig, cases: usize, seed: u64) -> Result<SelftestReport, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![];
    for dataflow in [Dataflow::WeightStationary, Dataflow::OutputStationary] {
        let mut acc = Accelerator::new(AccelConfig { dataflow, ..*cfg })?;
        let name = format!("tiled_matmul_auto {dataflow:?}");
        checks.push(check(&name, cases, |_| {
            let (m, k, n) = (rng.random_range(1..=64), rng.random_range(1..=64), rng.random_range(1..=64));
            let a = random_matrix(&mut rng, m, k);
            let b = random_matrix(&mut rng, k, n);
            let got: Vec<i64> = acc.tiled_matmul_auto(&a, &b)?.c.data().iter().map(|&v| i64::from(v)).collect();
            Ok((got != naive(&a, &b)).then(|| format!("{m}x{k}x{n}")))
        })?);
    }
    let mut acc = Accelerator::new(*cfg)?;
    checks.push(check("trace(M·Nᵀ) 5x5", cases, |k| {
        let m: [[i8; 5]; 5] = rng.random();
        let n: [[i8; 5]; 5] = rng.random();
        let want: i64 = (0..25).map(|t| i64::from(m[t / 5][t % 5]) * i64::from(n[t / 5][t % 5])).sum();
        let got = conv_value_via_matmul(&m, &n, &mut acc)?;
        Ok((got != want).then(|| format!("case {k}: {got} != {want}")))
    })?);
    let kernels = [Kernel5x5::gaussian(), Kernel5x5::sobel_x(), Kernel5x5::sobel_y()];
    let mut fixed = ConvBackend::scalar_fixed();
    let mut batched = ConvBackend::accel(*cfg, OffloadMode::Batched, 128)?;
    let mut perpixel = ConvBackend::accel(*cfg, OffloadMode::PerPixel, 128)?;
    checks.push(check("offloaded conv5x5 vs integer host", cases.min(100), |k| {
        let (w, h) = (rng.random_range(5..=32), rng.random_range(5..=32));
        let img = Raster::from_fn(w, h, |_, _| rng.random_range(0..=255));
        let kernel = &kernels[k % kernels.len()];
        let want = conv5x5(&img, kernel, &mut fixed)?.raster;
        let ok = conv5x5(&img, kernel, &mut batched)?.raster == want && conv5x5(&img, kernel, &mut perpixel)?.raster == want;
        Ok((!ok).then(|| format!("{w}x{h} kernel {k}")))
    })?);
    Ok(SelftestReport { seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_accelerator_passes() {
        let r = accel_selftest(&AccelConfig::default(), 40, 3).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        assert_eq!(r.checks.len(), 4);
        assert!(r.to_text().contains("OutputStationary"));
    }

    #[test]
    fn small_array_still_exact() {
        let cfg = AccelConfig { array_dim: 4, ..AccelConfig::default() };
        assert!(accel_selftest(&cfg, 20, 5).unwrap().passed());
    }
}
