//! Exact divisor-power arithmetic: tables of tau_k (the number of ordered
//! k-factorizations), the box sum T over polynomial values, and tau_k sums in
//! arithmetic progressions.

use crate::error::{Error, Result};
use crate::exec::run_jobs;
use crate::quadpoly::{for_each_box_value, QuadPoly};

/// Memory guard for tau tables (two u64 arrays are live during construction).
pub const MAX_TABLE_LEN: u64 = 1 << 31;

/// Exact values tau_k(1..=N).
#[derive(Clone, Debug)]
pub struct DivisorTable {
    k: u32,
    values: Vec<u64>, // index 0 unused
}

impl DivisorTable {
    /// Sieves tau_k up to `n` by k-1 divisor-loop convolutions with the
    /// all-ones function, O(N log N) each.
    pub fn build(k: u32, n: u64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        if n > MAX_TABLE_LEN {
            return Err(Error::BudgetExceeded {
                what: "divisor table length",
                required: n as u128,
                budget: MAX_TABLE_LEN as u128,
            });
        }
        let len = n as usize + 1;
        let mut cur = vec![1u64; len];
        if len > 0 {
            cur[0] = 0;
        }
        for _ in 1..k {
            let mut next = vec![0u64; len];
            for d in 1..len {
                for m in (d..len).step_by(d) {
                    next[m] += cur[m / d];
                }
            }
            cur = next;
        }
        Ok(DivisorTable { k, values: cur })
    }

    pub fn order(&self) -> u32 {
        self.k
    }

    pub fn bound(&self) -> u64 {
        (self.values.len() - 1) as u64
    }

    #[inline]
    pub fn get(&self, n: u64) -> u64 {
        self.values[n as usize]
    }

    pub fn values(&self) -> &[u64] {
        &self.values[..]
    }

    /// Sum of tau_k(m) over m <= x with m = h (mod q).
    pub fn ap_sum(&self, x: u64, h: u64, q: u64) -> u128 {
        let x = x.min(self.bound());
        let mut s = 0u128;
        let mut m = h;
        while m <= x {
            if m >= 1 {
                s += self.values[m as usize] as u128;
            }
            m += q;
        }
        s
    }

    pub fn prefix_sum(&self, x: u64) -> u128 {
        let x = x.min(self.bound());
        (1..=x as usize).map(|m| self.values[m] as u128).sum()
    }
}

/// Sum of tau_k(m) over m <= x, m = h (mod q); x = 0 gives the empty sum.
pub fn tau_k_ap_sum(k: u32, x: u64, h: u64, q: u64) -> Result<u128> {
    if q < 1 || h < 1 || h > q {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= h <= q, got h={h}, q={q}"
        )));
    }
    if x == 0 {
        return Ok(0);
    }
    Ok(DivisorTable::build(k, x)?.ap_sum(x, h, q))
}

/// Axis sweep order for the box enumeration (two orders give an independent
/// recomputation path).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    Standard,
    Reversed,
}

/// Exact T = sum over the lattice box \[1,X\]^l of tau_k(F(x)).
///
/// Sieves tau_k up to `sieve_bound(F, X)` and enumerates the box in fixed
/// chunks whose partial sums are reduced in order, so the result is
/// identical for every thread count.
pub fn exact_t(
    f: &QuadPoly,
    k: u32,
    x: u64,
    table_budget: u64,
    threads: usize,
) -> Result<u128> {
    exact_t_with_order(f, k, x, table_budget, threads, SweepOrder::Standard)
}

pub fn exact_t_with_order(
    f: &QuadPoly,
    k: u32,
    x: u64,
    table_budget: u64,
    threads: usize,
    order: SweepOrder,
) -> Result<u128> {
    let v = f.validate(x);
    if !v.passes_for_diagnostics() {
        return Err(Error::HypothesisViolated(v.violations().join("; ")));
    }
    let bound = f.sieve_bound(x);
    if bound > table_budget as i128 {
        return Err(Error::BudgetExceeded {
            what: "tau table for exact_t",
            required: bound as u128,
            budget: table_budget as u128,
        });
    }
    let g = match order {
        SweepOrder::Standard => f.clone(),
        SweepOrder::Reversed => reverse_axes(f),
    };
    let table = DivisorTable::build(k, bound as u64)?;
    let jobs: Vec<(u64, u64)> = (1..=x).map(|a| (a, a + 1)).collect();
    let partials = run_jobs(jobs.len(), threads, |j| {
        let (lo, hi) = jobs[j];
        let mut s = 0u128;
        for_each_box_value(&g, x, lo, hi, &mut |v, _| {
            s += table.get(v as u64) as u128;
        });
        s
    });
    Ok(partials.iter().sum())
}

/// The same polynomial with coordinates reversed; enumerating it row-major
/// sweeps the original box in the opposite axis order.
fn reverse_axes(f: &QuadPoly) -> QuadPoly {
    let l = f.ell();
    let q = f.quad_coeffs();
    let mut qr = vec![0i64; l * l];
    for i in 0..l {
        for j in 0..l {
            qr[(l - 1 - i) * l + (l - 1 - j)] = q[i * l + j];
        }
    }
    let mut br: Vec<i64> = f.linear_coeffs().to_vec();
    br.reverse();
    QuadPoly::new(l, qr, br, f.constant()).expect("valid reversal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{binomial, factorize, splitmix64_next};

    fn q3() -> QuadPoly {
        QuadPoly::new(3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
    }

    fn w3() -> QuadPoly {
        QuadPoly::new(3, vec![0, 1, 0, 0, 0, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
    }

    /// Factorization-based oracle: tau_k(n) = prod C(a_i + k - 1, k - 1).
    fn tau_k_oracle(k: u32, n: u64) -> u64 {
        factorize(n)
            .iter()
            .map(|&(_, e)| binomial(e as u64 + k as u64 - 1, k as u64 - 1))
            .product()
    }

    #[test]
    fn table_examples() {
        let t2 = DivisorTable::build(2, 20).unwrap();
        assert_eq!(t2.get(12), 6);
        assert_eq!(t2.get(1), 1);
        let t3 = DivisorTable::build(3, 10).unwrap();
        assert_eq!(t3.get(4), 6);
        let t4 = DivisorTable::build(4, 5).unwrap();
        assert_eq!(t4.get(1), 1);
    }

    #[test]
    fn table_prime_power_law() {
        for k in 1..=5u32 {
            let t = DivisorTable::build(k, 256).unwrap();
            assert_eq!(t.get(1), 1);
            for p in [2u64, 3, 5, 7, 11] {
                assert_eq!(t.get(p), k as u64, "tau_{k}(p)");
            }
            for (p, a) in [(2u64, 8u32), (3, 5), (5, 3)] {
                assert_eq!(
                    t.get(p.pow(a)),
                    binomial(a as u64 + k as u64 - 1, k as u64 - 1)
                );
            }
        }
    }

    #[test]
    fn table_is_convolution_of_previous_order() {
        let n = 300u64;
        for k in 2..=4u32 {
            let prev = DivisorTable::build(k - 1, n).unwrap();
            let cur = DivisorTable::build(k, n).unwrap();
            for m in 1..=n {
                let conv: u64 = crate::util::divisors(m).iter().map(|&d| prev.get(m / d)).sum();
                assert_eq!(cur.get(m), conv, "m={m}, k={k}");
            }
        }
    }

    #[test]
    fn table_matches_factorization_oracle_on_random_n() {
        let mut state = 0xdead_beefu64;
        for k in [2u32, 3, 5] {
            let t = DivisorTable::build(k, 40_000).unwrap();
            for _ in 0..1000 {
                let n = 1 + splitmix64_next(&mut state) % 40_000;
                assert_eq!(t.get(n), tau_k_oracle(k, n), "n={n}, k={k}");
            }
        }
    }

    #[test]
    fn ap_sum_examples() {
        assert_eq!(tau_k_ap_sum(2, 10, 1, 2).unwrap(), 10);
        assert_eq!(tau_k_ap_sum(2, 10, 2, 2).unwrap(), 17);
        assert_eq!(tau_k_ap_sum(5, 0, 1, 3).unwrap(), 0);
        assert!(tau_k_ap_sum(2, 10, 3, 2).is_err());
    }

    #[test]
    fn ap_sums_partition_the_full_sum() {
        for k in [2u32, 3] {
            for &x in &[100u64, 1000, 10_000] {
                let t = DivisorTable::build(k, x).unwrap();
                let total = t.prefix_sum(x);
                for q in 1..=10u64 {
                    let parts: u128 = (1..=q).map(|h| t.ap_sum(x, h, q)).sum();
                    assert_eq!(parts, total, "k={k}, x={x}, q={q}");
                }
            }
        }
    }

    #[test]
    fn exact_t_examples() {
        assert_eq!(exact_t(&q3(), 2, 1, 1 << 20, 1).unwrap(), 2);
        assert_eq!(exact_t(&q3(), 2, 2, 1 << 20, 1).unwrap(), 29);
        assert_eq!(exact_t(&w3(), 2, 2, 1 << 20, 1).unwrap(), 22);
    }

    #[test]
    fn exact_t_matches_per_point_factorization() {
        for f in [q3(), w3()] {
            for k in [2u32, 3] {
                for x in 1..=5u64 {
                    let sieved = exact_t(&f, k, x, 1 << 20, 1).unwrap();
                    let mut direct = 0u128;
                    for_each_box_value(&f, x, 1, x + 1, &mut |v, _| {
                        direct += tau_k_oracle(k, v as u64) as u128;
                    });
                    assert_eq!(sieved, direct, "k={k}, X={x}");
                }
            }
        }
    }

    #[test]
    fn exact_t_order_and_threads_invariant() {
        for f in [q3(), w3()] {
            let a = exact_t_with_order(&f, 2, 9, 1 << 20, 1, SweepOrder::Standard).unwrap();
            let b = exact_t_with_order(&f, 2, 9, 1 << 20, 4, SweepOrder::Reversed).unwrap();
            assert_eq!(a, b);
        }
        // an asymmetric polynomial where axis order genuinely differs
        let f = QuadPoly::new(3, vec![1, 1, 0, 0, 2, 0, 0, 1, 1], vec![3, 0, 1], 2).unwrap();
        let a = exact_t_with_order(&f, 2, 7, 1 << 20, 1, SweepOrder::Standard).unwrap();
        let b = exact_t_with_order(&f, 2, 7, 1 << 20, 3, SweepOrder::Reversed).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_t_budget_error_reports_required() {
        let err = exact_t(&q3(), 2, 1000, 100, 1).unwrap_err();
        match err {
            Error::BudgetExceeded { required, .. } => assert_eq!(required, 3_000_000),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn exact_t_rejects_invalid_polynomial() {
        let neg = QuadPoly::new(3, vec![-1, 0, 0, 0, -1, 0, 0, 0, -1], vec![0, 0, 0], 0).unwrap();
        assert!(matches!(
            exact_t(&neg, 2, 3, 1 << 20, 1),
            Err(Error::HypothesisViolated(_))
        ));
    }
}
