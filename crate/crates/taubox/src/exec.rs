//! Deterministic work distribution.
//!
//! Every parallel computation in this crate is expressed as a list of
//! independent jobs whose results are combined in job order. Job boundaries
//! never depend on the worker count, so results (including float sums) are
//! bit-identical for any `threads` value.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Runs `n_jobs` independent jobs on up to `threads` workers and returns the
/// results in job order.
pub fn run_jobs<R, F>(n_jobs: usize, threads: usize, job: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let threads = threads.max(1).min(n_jobs.max(1));
    if threads <= 1 || n_jobs <= 1 {
        return (0..n_jobs).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..n_jobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_jobs {
                    break;
                }
                let r = job(i);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("job completed"))
        .collect()
}

/// Splits `0..total` into fixed-size chunks (independent of thread count).
pub fn fixed_chunks(total: u64, chunk: u64) -> Vec<(u64, u64)> {
    let chunk = chunk.max(1);
    let mut out = Vec::new();
    let mut start = 0u64;
    while start < total {
        let end = (start + chunk).min(total);
        out.push((start, end));
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_in_job_order_any_thread_count() {
        let expected: Vec<u64> = (0..103u64).map(|i| i * i).collect();
        for threads in [1, 2, 4, 9] {
            let got = run_jobs(103, threads, |i| (i as u64) * (i as u64));
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn float_reduction_is_thread_count_invariant() {
        let jobs = fixed_chunks(1_000_000, 4096);
        let sum_with = |threads| {
            let parts = run_jobs(jobs.len(), threads, |j| {
                let (a, b) = jobs[j];
                let mut s = 0.0f64;
                for i in a..b {
                    s += 1.0 / (i + 1) as f64;
                }
                s
            });
            parts.iter().sum::<f64>()
        };
        let s1 = sum_with(1);
        let s4 = sum_with(4);
        assert_eq!(s1.to_bits(), s4.to_bits());
    }

    #[test]
    fn chunk_edges() {
        assert_eq!(fixed_chunks(0, 10), vec![]);
        assert_eq!(fixed_chunks(10, 10), vec![(0, 10)]);
        assert_eq!(fixed_chunks(11, 10), vec![(0, 10), (10, 11)]);
    }
}
