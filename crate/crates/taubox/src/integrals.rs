//! The singular integral: I_r(X) = integral over \[1,X\]^l of (log F(t))^r dt.
//!
//! F is validated positive on the box, so the integrand is smooth there and
//! tensor Gauss-Legendre converges spectrally; dimensions beyond 5 fall back
//! to seeded Monte Carlo. All error estimates come from two-resolution (or
//! two-sample-size) comparison; no asymptotic error constants are assumed.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::exec::run_jobs;
use crate::quadpoly::QuadPoly;
use crate::util::KahanSum;

/// Gauss points per panel.
const GL_ORDER: usize = 8;
/// Hard cap on tensor evaluations per resolution round.
const MAX_TENSOR_POINTS: u128 = 400_000_000;
/// Monte Carlo chunk size (fixed: keeps streams thread-count independent).
const MC_CHUNK: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadMethod {
    TensorGaussLegendre { initial_panels: usize },
    MonteCarlo { samples: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub method: QuadMethod,
    pub rel_tol: f64,
    pub seed: u64,
}

impl QuadratureSpec {
    /// Tensor quadrature through dimension 5, Monte Carlo beyond.
    pub fn default_for_dimension(ell: usize, seed: u64) -> Self {
        if ell <= 5 {
            QuadratureSpec {
                method: QuadMethod::TensorGaussLegendre { initial_panels: 2 },
                rel_tol: 1e-9,
                seed,
            }
        } else {
            QuadratureSpec {
                method: QuadMethod::MonteCarlo { samples: 1 << 20 },
                rel_tol: 1e-3,
                seed,
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegralEstimate {
    pub value: f64,
    /// Two-resolution (or statistical) error estimate, absolute.
    pub error_estimate: f64,
    pub evaluations: u64,
}

fn gl_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Nodes and weights of n-point Gauss-Legendre on \[-1, 1\], by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Single-resolution tensor Gauss-Legendre integral of `g` over the box
/// given by per-axis \[lo, hi\] with `panels` panels per axis. Chunked over
/// the outermost axis; partial sums reduced in order.
pub fn tensor_integral<G>(
    g: &G,
    lo: &[f64],
    hi: &[f64],
    panels: &[usize],
    threads: usize,
) -> f64
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let ell = lo.len();
    assert_eq!(hi.len(), ell);
    assert_eq!(panels.len(), ell);
    let (xi, wi) = gl_nodes();
    // per-axis node positions and weights
    let mut axis_nodes: Vec<Vec<(f64, f64)>> = Vec::with_capacity(ell);
    for d in 0..ell {
        let mut v = Vec::with_capacity(panels[d] * GL_ORDER);
        let w = (hi[d] - lo[d]) / panels[d] as f64;
        for p in 0..panels[d] {
            let a = lo[d] + w * p as f64;
            for j in 0..GL_ORDER {
                v.push((a + w * (xi[j] + 1.0) / 2.0, w / 2.0 * wi[j]));
            }
        }
        axis_nodes.push(v);
    }
    let outer = axis_nodes[0].len();
    let sums = run_jobs(outer, threads, |i0| {
        let mut acc = KahanSum::new();
        let mut pt = vec![0.0f64; ell];
        let mut idx = vec![0usize; ell];
        let (x0, w0) = axis_nodes[0][i0];
        pt[0] = x0;
        loop {
            let mut w = w0;
            for d in 1..ell {
                let (x, wd) = axis_nodes[d][idx[d]];
                pt[d] = x;
                w *= wd;
            }
            acc.add(w * g(&pt));
            // advance inner odometer
            let mut d = ell - 1;
            loop {
                if d == 0 {
                    return acc.value();
                }
                idx[d] += 1;
                if idx[d] < axis_nodes[d].len() {
                    break;
                }
                idx[d] = 0;
                d -= 1;
            }
        }
    });
    let mut total = KahanSum::new();
    for s in sums {
        total.add(s);
    }
    total.value()
}

/// I_r(X) with an error estimate from resolution doubling.
pub fn log_power_integral(
    f: &QuadPoly,
    x: u64,
    r: u32,
    spec: &QuadratureSpec,
    threads: usize,
) -> Result<IntegralEstimate> {
    if x < 1 {
        return Err(Error::InvalidArgument("X must be >= 1".into()));
    }
    if x == 1 {
        return Ok(IntegralEstimate {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let ell = f.ell();
    let lo = vec![1.0f64; ell];
    let hi = vec![x as f64; ell];
    // positivity is a hypothesis of the integrand; track violations
    let violated = std::sync::atomic::AtomicBool::new(false);
    let integrand = |t: &[f64]| -> f64 {
        let v = f.evaluate_f64(t);
        if v <= 0.0 {
            violated.store(true, std::sync::atomic::Ordering::Relaxed);
            return 0.0;
        }
        v.ln().powi(r as i32)
    };
    match spec.method {
        QuadMethod::TensorGaussLegendre { initial_panels } => {
            let mut panels = initial_panels.max(1);
            let mut prev: Option<(f64, u64)> = None;
            loop {
                let points = ((panels * GL_ORDER) as u128).checked_pow(ell as u32);
                if !matches!(points, Some(p) if p <= MAX_TENSOR_POINTS) {
                    return Err(Error::ToleranceNotAchieved {
                        what: "tensor quadrature budget",
                        requested: spec.rel_tol,
                        achieved: f64::INFINITY,
                    });
                }
                let v = tensor_integral(&integrand, &lo, &hi, &vec![panels; ell], threads);
                if violated.load(std::sync::atomic::Ordering::Relaxed) {
                    return Err(Error::HypothesisViolated(
                        "F is not positive everywhere on the box".into(),
                    ));
                }
                let evals = ((panels * GL_ORDER) as u64).pow(ell as u32);
                if let Some((v_prev, evals_prev)) = prev {
                    let err = (v - v_prev).abs();
                    if err <= spec.rel_tol * v.abs().max(1e-300) {
                        return Ok(IntegralEstimate {
                            value: v,
                            error_estimate: err,
                            evaluations: evals + evals_prev,
                        });
                    }
                }
                prev = Some((v, evals));
                panels *= 2;
            }
        }
        QuadMethod::MonteCarlo { samples } => {
            let volume: f64 = hi
                .iter()
                .zip(&lo)
                .map(|(h, l)| h - l)
                .product();
            let n_chunks = samples.div_ceil(MC_CHUNK).max(2);
            let stats = run_jobs(n_chunks as usize, threads, |c| {
                let mut rng = ChaCha12Rng::seed_from_u64(
                    spec.seed ^ (c as u64).wrapping_mul(0x9e3779b97f4a7c15),
                );
                let mut pt = vec![0.0f64; ell];
                let mut sum = KahanSum::new();
                let mut sumsq = KahanSum::new();
                let in_chunk = MC_CHUNK.min(samples.saturating_sub(c as u64 * MC_CHUNK));
                for _ in 0..in_chunk {
                    for d in 0..ell {
                        pt[d] = lo[d] + (hi[d] - lo[d]) * rng.gen::<f64>();
                    }
                    let v = integrand(&pt);
                    sum.add(v);
                    sumsq.add(v * v);
                }
                (sum.value(), sumsq.value(), in_chunk)
            });
            if violated.load(std::sync::atomic::Ordering::Relaxed) {
                return Err(Error::HypothesisViolated(
                    "F is not positive everywhere on the box".into(),
                ));
            }
            let mut total = KahanSum::new();
            let mut total_sq = KahanSum::new();
            let mut half = KahanSum::new();
            let mut n: u64 = 0;
            let mut n_half: u64 = 0;
            for (i, (s, sq, cnt)) in stats.iter().enumerate() {
                total.add(*s);
                total_sq.add(*sq);
                n += cnt;
                if i < stats.len() / 2 {
                    half.add(*s);
                    n_half += cnt;
                }
            }
            let mean = total.value() / n as f64;
            let var = (total_sq.value() / n as f64 - mean * mean).max(0.0);
            let stderr = volume * (var / n as f64).sqrt();
            let value = volume * mean;
            let half_value = volume * half.value() / n_half.max(1) as f64;
            let err = stderr.max((value - half_value).abs());
            Ok(IntegralEstimate {
                value,
                error_estimate: err,
                evaluations: n,
            })
        }
    }
}
