//! Parallel addition of two long arrays, timed against a single worker.

use std::thread;
use std::time::Instant;

use serde::Serialize;

use crate::BenchError;

/// `out[i] = a[i] + b[i]` (wrapping), split into `workers` equal contiguous
/// chunks each handled by its own thread.
pub fn array_add(a: &[u32], b: &[u32], out: &mut [u32], workers: usize) -> Result<(), BenchError> {
    let n = out.len();
    assert!(a.len() == n && b.len() == n, "array lengths differ");
    if workers == 0 || !n.is_multiple_of(workers) {
        return Err(BenchError::InvalidPartition { n, workers });
    }
    if workers == 1 {
        add_chunk(a, b, out);
        return Ok(());
    }
    let chunk = n / workers;
    thread::scope(|s| {
        for ((o, x), y) in out.chunks_mut(chunk).zip(a.chunks(chunk)).zip(b.chunks(chunk)) {
            s.spawn(move || add_chunk(x, y, o));
        }
    });
    Ok(())
}

fn add_chunk(a: &[u32], b: &[u32], out: &mut [u32]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x.wrapping_add(*y);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub n: usize,
    pub workers: usize,
    pub repeats: usize,
    /// Wall time of all repeats with `workers` workers, seconds.
    pub wall_time_s: f64,
    /// Wall time of all repeats with one worker, seconds.
    pub baseline_wall_time_s: f64,
    pub speedup: f64,
    /// Element additions performed, `n * repeats`.
    pub element_ops: u64,
    pub matches_oracle: bool,
    pub available_cores: usize,
}

impl ScalingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Columns: n, workers, repeats, wall_time_s, baseline_wall_time_s,
    /// speedup, element_ops, matches_oracle, available_cores.
    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self)?;
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    pub fn to_text(&self) -> String {
        format!(
            "array add: n={} workers={} repeats={} ({} core(s) available)\n\
             {:<16} {:>12.6} s\n{:<16} {:>12.6} s\n{:<16} {:>12.3}x\n{:<16} {:>12}\n{:<16} {:>12}\n",
            self.n,
            self.workers,
            self.repeats,
            self.available_cores,
            "workers time",
            self.wall_time_s,
            "1-worker time",
            self.baseline_wall_time_s,
            "speedup",
            self.speedup,
            "element ops",
            self.element_ops,
            "matches oracle",
            self.matches_oracle,
        )
    }
}

fn timed_runs(a: &[u32], b: &[u32], out: &mut [u32], workers: usize, repeats: usize) -> Result<f64, BenchError> {
    let t = Instant::now();
    for _ in 0..repeats {
        array_add(a, b, out, workers)?;
    }
    Ok(t.elapsed().as_secs_f64())
}

/// Adds two deterministic length-`n` arrays `repeats` times with `workers`
/// workers and again with one, then checks the result element by element.
pub fn array_add_bench(n: usize, workers: usize, repeats: usize) -> Result<ScalingReport, BenchError> {
    if workers == 0 || !n.is_multiple_of(workers) {
        return Err(BenchError::InvalidPartition { n, workers });
    }
    if repeats == 0 {
        return Err(BenchError::NoRepeats);
    }
    let a: Vec<u32> = (0..n as u32).collect();
    let b: Vec<u32> = (0..n as u32).map(|i| i.wrapping_mul(0x9e37_79b9)).collect();
    // written once up front so page faults are not charged to the first run
    let mut out = vec![1u32; n];

    let baseline = timed_runs(&a, &b, &mut out, 1, repeats)?;
    let wall = if workers == 1 {
        baseline
    } else {
        out.fill(0);
        timed_runs(&a, &b, &mut out, workers, repeats)?
    };
    let matches_oracle = out.iter().zip(a.iter().zip(&b)).all(|(&o, (&x, &y))| o == x.wrapping_add(y));
    Ok(ScalingReport {
        n,
        workers,
        repeats,
        wall_time_s: wall,
        baseline_wall_time_s: baseline,
        speedup: baseline / wall,
        element_ops: n as u64 * repeats as u64,
        matches_oracle,
        available_cores: thread::available_parallelism().map_or(1, |c| c.get()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_sequential_sum() {
        let a: Vec<u32> = (0..60).map(|i| u32::MAX - i).collect();
        let b: Vec<u32> = (0..60).map(|i| i * 7).collect();
        let want: Vec<u32> = a.iter().zip(&b).map(|(x, y)| x.wrapping_add(*y)).collect();
        for workers in [1, 2, 3, 4, 5, 6, 60] {
            let mut out = vec![0; 60];
            array_add(&a, &b, &mut out, workers).unwrap();
            assert_eq!(out, want, "workers={workers}");
        }
    }

    #[test]
    fn uneven_partition_rejected() {
        let mut out = vec![0; 10];
        assert!(matches!(
            array_add(&[0; 10], &[0; 10], &mut out, 3),
            Err(BenchError::InvalidPartition { n: 10, workers: 3 })
        ));
        assert!(matches!(array_add_bench(10, 0, 1), Err(BenchError::InvalidPartition { .. })));
        assert!(matches!(array_add_bench(10, 1, 0), Err(BenchError::NoRepeats)));
    }

    #[test]
    fn single_worker_is_its_own_baseline() {
        let r = array_add_bench(1 << 12, 1, 3).unwrap();
        assert_eq!(r.speedup, 1.0);
        assert!(r.matches_oracle);
        assert_eq!(r.element_ops, 3 << 12);
        let r = array_add_bench(1 << 12, 4, 2).unwrap();
        assert!(r.matches_oracle);
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with(
            "n,workers,repeats,wall_time_s,baseline_wall_time_s,speedup,element_ops,matches_oracle,available_cores\n"
        ));
    }
}
