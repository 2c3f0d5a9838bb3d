//! Arithmetic-local objects at each modulus: Ramanujan sums, the
//! residue-class weight f_k(q, delta, s), its additively twisted average
//! F_k(q, s), full character sums S_F(q, a), solution counts of F = 0 mod n,
//! and the normalized sums S_F(q) feeding the Euler product.
//!
//! F_k has two routes. The defining route is the Moebius-weighted divisor
//! sum over f_k jets (`twisted_weight_jet_moebius`); the production route is
//! a multiplicative closed form over prime powers (`twisted_weight_jet`).
//!
//! A word of warning on that closed form: a tempting derivation produces the
//! trailing factor (p^s - 1)/(p - 1), obtained from the incorrect base case
//! I_2 = (m+1)(1 - p^{-s}) for the inner factorization sum (direct
//! evaluation gives I_2 = 1 + m(1 - p^{-s})). At q = 2, k = 2, s = 1 that
//! wrong form yields 3/4 while the defining Moebius sum yields 1/2. The
//! correct trailing factor is (p - p^s)/(p - 1), which vanishes at s = 1.
//! The fast path ships the corrected form and is certified coefficientwise
//! against the defining sum for all p^m <= 128 before any singular-series
//! use; a mismatch aborts rather than warns.

use std::collections::BTreeSet;
use std::sync::Mutex;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::run_jobs;
use crate::jets::Jet;
use crate::quadpoly::QuadPoly;
use crate::util::{binomial, divisors, euler_phi, factorize, gcd, moebius};

/// Default per-call cap on enumerated points q^l.
pub const DEFAULT_ENUM_BUDGET: u64 = 100_000_000;
/// Memory guard for value-distribution arrays.
const MAX_DISTRIBUTION_MODULUS: u64 = 1 << 24;

/// Ramanujan sum c_q(a) = sum over h in Z_q^* of e(ah/q), by the closed form
/// c_q(a) = mu(q/g) phi(q) / phi(q/g) with g = gcd(a, q).
pub fn ramanujan_sum(q: u64, a: u64) -> Result<i64> {
    if q < 1 {
        return Err(Error::InvalidArgument("modulus must be >= 1".into()));
    }
    let g = gcd(a % q, q); // a = 0 mod q gives g = q
    let m = q / g;
    Ok(moebius(m) * (euler_phi(q) / euler_phi(m)) as i64)
}

/// Jet of (1 - p^{-s}) at s = 1.
pub fn euler_factor_jet(p: u64, order: usize) -> Jet {
    let lp = (p as f64).ln();
    let inv = Jet::exp_linear(-lp, order).scale(1.0 / p as f64);
    Jet::constant(1.0, order).sub_jet(&inv)
}

/// Jet of n^{-s} at s = 1.
fn inv_pow_jet(n: u64, order: usize) -> Jet {
    Jet::exp_linear(-((n as f64).ln()), order).scale(1.0 / n as f64)
}

/// Ordered k-tuples of positive integers with the given product.
fn ordered_factorizations(n: u64, k: u32) -> Vec<Vec<u64>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for d in divisors(n) {
        for mut rest in ordered_factorizations(n / d, k - 1) {
            let mut t = Vec::with_capacity(k as usize);
            t.push(d);
            t.append(&mut rest);
            out.push(t);
        }
    }
    out
}

/// Taylor jet at s = 1 of the residue-class weight
///
/// f_k(q, delta, s) = 1/(phi(q/delta) delta^s) prod_{p | q/delta} (1-p^{-s})^k
///                    * sum_{d_1...d_k = delta} prod_{i=1}^{k-1}
///                      prod_{p | d_{i+1}...d_k, p coprime to q/delta} (1-p^{-s}).
pub fn ap_weight_jet(q: u64, delta: u64, k: u32, order: usize) -> Result<Jet> {
    if q < 1 || delta < 1 || !q.is_multiple_of(delta) {
        return Err(Error::InvalidArgument(format!(
            "delta must divide q: q={q}, delta={delta}"
        )));
    }
    if k < 1 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let qd = q / delta;
    let mut prefix = inv_pow_jet(delta, order).scale(1.0 / euler_phi(qd) as f64);
    for (p, _) in factorize(qd) {
        prefix = prefix.mul_jet(&euler_factor_jet(p, order).int_pow(k));
    }
    // primes that can appear in the inner product, with jet power cache
    let delta_primes: Vec<u64> = factorize(delta)
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&p| !qd.is_multiple_of(p))
        .collect();
    let pow_cache: Vec<Vec<Jet>> = delta_primes
        .iter()
        .map(|&p| {
            let f = euler_factor_jet(p, order);
            (0..k as usize).map(|e| f.int_pow(e as u32)).collect()
        })
        .collect();
    let mut sum = Jet::zero(order);
    for tuple in ordered_factorizations(delta, k) {
        let mut term = Jet::constant(1.0, order);
        for (pi, &p) in delta_primes.iter().enumerate() {
            // p | d_{i+1}...d_k is monotone when scanning i downward, so the
            // exponent is the number of suffixes from the first divisible one
            let mut e = 0usize;
            let mut divisible = false;
            for i in (1..tuple.len()).rev() {
                if !divisible && tuple[i] % p == 0 {
                    divisible = true;
                }
                if divisible {
                    e += 1;
                }
            }
            if e > 0 {
                term = term.mul_jet(&pow_cache[pi][e]);
            }
        }
        sum = sum.add_jet(&term);
    }
    Ok(prefix.mul_jet(&sum))
}

/// F_k(q, s) by its defining Moebius sum over divisors:
/// sum_{delta | q} mu(q/delta) f_k(q, delta, s). Authoritative but slow.
pub fn twisted_weight_jet_moebius(q: u64, k: u32, order: usize) -> Result<Jet> {
    let mut acc = Jet::zero(order);
    for delta in divisors(q) {
        let mu = moebius(q / delta);
        if mu == 0 {
            continue;
        }
        acc = acc.add_jet(&ap_weight_jet(q, delta, k, order)?.scale(mu as f64));
    }
    Ok(acc)
}

/// Corrected closed form at a prime power:
///
/// F_k(p^m, s) = p^{-ms} [ sum_{v=1}^{k-1} (1-p^{-s})^{v-1} tau_v(p^{m-1})
///                         + (1-p^{-s})^{k-1} tau_k(p^{m-1}) (p - p^s)/(p-1) ].
fn prime_power_closed_form(p: u64, m: u32, k: u32, order: usize) -> Jet {
    let base = euler_factor_jet(p, order);
    let tau = |v: u32| binomial(m as u64 + v as u64 - 2, v as u64 - 1) as f64;
    let mut bracket = Jet::zero(order);
    let mut basepow = Jet::constant(1.0, order);
    for v in 1..k {
        bracket = bracket.add_jet(&basepow.scale(tau(v)));
        basepow = basepow.mul_jet(&base);
    }
    // (p - p^s)/(p-1) = p/(p-1) (1 - e^{(s-1) ln p}); vanishes at s = 1
    let lp = (p as f64).ln();
    let swing = Jet::constant(1.0, order)
        .sub_jet(&Jet::exp_linear(lp, order))
        .scale(p as f64 / (p as f64 - 1.0));
    bracket = bracket.add_jet(&basepow.mul_jet(&swing).scale(tau(k)));
    inv_pow_jet(p.pow(m), order).mul_jet(&bracket)
}

static CERTIFIED: Mutex<BTreeSet<u32>> = Mutex::new(BTreeSet::new());
const CLOSED_FORM_TOL: f64 = 1e-10;
const CLOSED_FORM_RANGE: u64 = 128;

/// Certifies the closed form against the defining Moebius sum for every
/// prime power p^m <= 128 at the given k, coefficientwise to 1e-10. Runs
/// once per k per process; any mismatch is fatal.
pub fn ensure_closed_form_certified(k: u32) -> Result<()> {
    if CERTIFIED.lock().unwrap().contains(&k) {
        return Ok(());
    }
    let order = k as usize + 6;
    for p in crate::util::primes_up_to(CLOSED_FORM_RANGE) {
        let mut m = 1u32;
        let mut pm = p;
        while pm <= CLOSED_FORM_RANGE {
            let fast = prime_power_closed_form(p, m, k, order);
            let oracle = twisted_weight_jet_moebius(pm, k, order)?;
            for j in 0..order {
                let d = (fast.coeff(j) - oracle.coeff(j)).abs();
                if d > CLOSED_FORM_TOL {
                    return Err(Error::InternalConsistency(format!(
                        "closed form for F_{k}({p}^{m}, s) deviates from the defining sum \
                         by {d:e} at coefficient {j}"
                    )));
                }
            }
            m += 1;
            pm = match pm.checked_mul(p) {
                Some(v) => v,
                None => break,
            };
        }
    }
    CERTIFIED.lock().unwrap().insert(k);
    Ok(())
}

/// F_k(q, s) by the certified closed form composed multiplicatively over the
/// prime powers of q. Fast path for all singular-series work.
pub fn twisted_weight_jet(q: u64, k: u32, order: usize) -> Result<Jet> {
    if q < 1 {
        return Err(Error::InvalidArgument("modulus must be >= 1".into()));
    }
    ensure_closed_form_certified(k)?;
    let mut acc = Jet::constant(1.0, order);
    for (p, e) in factorize(q) {
        acc = acc.mul_jet(&prime_power_closed_form(p, e, k, order));
    }
    Ok(acc)
}

/// Exact distribution of F mod q over (Z_q)^l: counts\[v\] = #{h : F(h) = v}.
#[derive(Clone, Debug)]
pub struct ValueDistribution {
    modulus: u64,
    ell: usize,
    counts: Vec<u64>,
}

impl ValueDistribution {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// rho_F(q): solutions of F = 0 mod q.
    pub fn zero_count(&self) -> u64 {
        self.counts[0]
    }

    /// S_F(q, a) = sum_h e(a F(h) / q); requires gcd(a, q) = 1.
    pub fn char_sum(&self, a: u64) -> Result<Complex64> {
        if self.modulus > 1 && gcd(a % self.modulus, self.modulus) != 1 {
            return Err(Error::InvalidArgument(format!(
                "char_sum requires gcd(a, q) = 1, got a={a}, q={}",
                self.modulus
            )));
        }
        Ok(self.twisted_count(a % self.modulus))
    }

    fn twisted_count(&self, a: u64) -> Complex64 {
        let q = self.modulus;
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        for (v, &n) in self.counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let r = ((a as u128 * v as u128) % q as u128) as f64;
            let (s, c) = (std::f64::consts::TAU * r / q as f64).sin_cos();
            re += c * n as f64;
            im += s * n as f64;
        }
        Complex64::new(re, im)
    }

    /// q^{-l} sum over a in Z_q^* of S_F(q, a).
    pub fn normalized_unit_sum(&self) -> Complex64 {
        let q = self.modulus;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..q {
            if gcd(a.max(1), q) == 1 && (a != 0 || q == 1) {
                acc += self.twisted_count(a);
            }
        }
        acc / (q as f64).powi(self.ell as i32)
    }
}

/// Enumerates (Z_q)^l with the quadratic value tracked incrementally mod q
/// along the innermost axis; per-thread partial counts merge exactly.
pub fn value_distribution(
    f: &QuadPoly,
    q: u64,
    budget: u64,
    threads: usize,
) -> Result<ValueDistribution> {
    if q < 1 {
        return Err(Error::InvalidArgument("modulus must be >= 1".into()));
    }
    let ell = f.ell() as u32;
    let points = (q as u128).checked_pow(ell).unwrap_or(u128::MAX);
    if points > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "value distribution points",
            required: points,
            budget: budget as u128,
        });
    }
    if q > MAX_DISTRIBUTION_MODULUS {
        return Err(Error::BudgetExceeded {
            what: "value distribution modulus",
            required: q as u128,
            budget: MAX_DISTRIBUTION_MODULUS as u128,
        });
    }
    let l = f.ell();
    let modi = q as i64;
    let red = |v: i64| -> u64 { v.rem_euclid(modi) as u64 };
    let sym: Vec<u64> = f.symmetrized().iter().map(|&v| red(v)).collect();
    let qm: Vec<u64> = f.quad_coeffs().iter().map(|&v| red(v)).collect();
    let bm: Vec<u64> = f.linear_coeffs().iter().map(|&v| red(v)).collect();
    let cm: u64 = red(f.constant());
    let last = l - 1;
    let step = sym[last * l + last];
    let outer: u64 = q.pow(ell - 1);

    let n_jobs = threads.max(1).min(outer.max(1) as usize);
    let bounds: Vec<(u64, u64)> = (0..n_jobs as u64)
        .map(|j| {
            (
                outer * j / n_jobs as u64,
                outer * (j + 1) / n_jobs as u64,
            )
        })
        .collect();
    let parts = run_jobs(n_jobs, threads, |jid| {
        let (lo, hi) = bounds[jid];
        let mut counts = vec![0u64; q as usize];
        let mut h = vec![0u64; l];
        for idx in lo..hi {
            // decode outer coordinates, base q, last axis starts at 0
            let mut t = idx;
            for d in (0..last).rev() {
                h[d] = t % q;
                t /= q;
            }
            h[last] = 0;
            // v = F(h) mod q
            let mut v: u64 = cm;
            for i in 0..l {
                let mut row: u128 = bm[i] as u128;
                for j in 0..l {
                    row += qm[i * l + j] as u128 * h[j] as u128 % q as u128;
                }
                v = ((v as u128 + row % q as u128 * h[i] as u128) % q as u128) as u64;
            }
            // delta for stepping the last coordinate, at h_last = 0
            let mut d: u64 = (qm[last * l + last] + bm[last]) % q;
            for u in 0..l {
                if u != last {
                    d = ((d as u128 + sym[last * l + u] as u128 * h[u] as u128) % q as u128)
                        as u64;
                }
            }
            let mut val = v;
            for _ in 0..q {
                counts[val as usize] += 1;
                val += d;
                if val >= q {
                    val -= q;
                }
                d += step;
                if d >= q {
                    d -= q;
                }
            }
        }
        counts
    });
    let mut counts = vec![0u64; q as usize];
    for part in parts {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(ValueDistribution {
        modulus: q,
        ell: l,
        counts,
    })
}

/// S_F(q, a) by full enumeration of (Z_q)^l via the value distribution.
pub fn char_sum(f: &QuadPoly, q: u64, a: u64, budget: u64, threads: usize) -> Result<Complex64> {
    value_distribution(f, q, budget, threads)?.char_sum(a)
}

/// rho_F(n) = #{h in (Z_n)^l : F(h) = 0 mod n}, by enumeration.
pub fn rho(f: &QuadPoly, n: u64, budget: u64, threads: usize) -> Result<u64> {
    Ok(value_distribution(f, n, budget, threads)?.zero_count())
}

/// S_F(p^m) from solution counts:
/// p^{-(l-1)m} rho(p^m) - p^{-(l-1)(m-1)} rho(p^{m-1}).
pub fn s_from_rho(p: u64, m: u32, rho_m: u64, rho_prev: u64, ell: usize) -> f64 {
    let e = (ell - 1) as i32;
    let scale_m = (p as f64).powi(-e * m as i32);
    let scale_prev = (p as f64).powi(-e * (m as i32 - 1));
    scale_m * rho_m as f64 - scale_prev * rho_prev as f64
}

const S_CROSS_CHECK_TOL: f64 = 1e-10;

/// Normalized character-sum average S_F(q) = q^{-l} sum_{a in Z_q^*} S_F(q,a).
///
/// Prime powers take the exact solution-count shortcut; every call also runs
/// the direct a-sum and demands a vanishing imaginary part and (for prime
/// powers) agreement between the two routes, to 1e-10.
pub fn s_normalized(f: &QuadPoly, q: u64, budget: u64, threads: usize) -> Result<f64> {
    if q == 1 {
        return Ok(1.0);
    }
    let dist = value_distribution(f, q, budget, threads)?;
    let direct = dist.normalized_unit_sum();
    if direct.im.abs() > S_CROSS_CHECK_TOL {
        return Err(Error::InternalConsistency(format!(
            "S_F({q}) a-sum has imaginary part {:e}",
            direct.im
        )));
    }
    let fact = factorize(q);
    if fact.len() == 1 {
        let (p, m) = fact[0];
        let rho_m = dist.zero_count();
        let rho_prev = rho(f, q / p, budget, threads)?;
        let shortcut = s_from_rho(p, m, rho_m, rho_prev, f.ell());
        if (shortcut - direct.re).abs() > S_CROSS_CHECK_TOL {
            return Err(Error::InternalConsistency(format!(
                "S_F({q}): solution-count route {shortcut} vs a-sum {} differ",
                direct.re
            )));
        }
        Ok(shortcut)
    } else {
        Ok(direct.re)
    }
}

/// Per-prime local data for the singular series and the local-dump report.
#[derive(Clone, Debug)]
pub struct LocalFactorTable {
    pub p: u64,
    pub k: u32,
    /// Depth actually computed (budget- and request-capped).
    pub depth: u32,
    /// rho_F(p^m) for m = 0..=depth.
    pub rho: Vec<u64>,
    /// S_F(p^m) for m = 0..=depth; the m = 0 slot holds S_F(1) = 1.
    pub s_local: Vec<f64>,
    /// F_k(p^m, .) jets for m = 1..=depth.
    pub fk_jets: Vec<Jet>,
}

impl LocalFactorTable {
    /// Largest depth m with (p^m)^l within budget, capped at `max_depth`.
    pub fn feasible_depth(p: u64, ell: u32, max_depth: u32, budget: u64) -> u32 {
        let mut depth = 0u32;
        let mut pm = 1u128;
        while depth < max_depth {
            pm = match pm.checked_mul(p as u128) {
                Some(v) => v,
                None => break,
            };
            match pm.checked_pow(ell) {
                Some(pts) if pts <= budget as u128 && pm <= MAX_DISTRIBUTION_MODULUS as u128 => {
                    depth += 1
                }
                _ => break,
            }
        }
        depth
    }
}

/// Builds the local table for one prime: exact solution counts at each
/// depth, normalized sums via the count formula cross-checked against the
/// direct a-sum, and certified F_k jets.
pub fn local_factor_table(
    f: &QuadPoly,
    k: u32,
    p: u64,
    max_depth: u32,
    order: usize,
    budget: u64,
    threads: usize,
) -> Result<LocalFactorTable> {
    let ell = f.ell() as u32;
    let depth = LocalFactorTable::feasible_depth(p, ell, max_depth, budget);
    if depth == 0 {
        return Err(Error::BudgetExceeded {
            what: "local factor depth",
            required: (p as u128).pow(ell),
            budget: budget as u128,
        });
    }
    let mut rho_v = vec![1u64];
    let mut s_local = vec![1.0f64];
    let mut fk_jets = Vec::new();
    let mut pm = 1u64;
    for m in 1..=depth {
        pm *= p;
        let dist = value_distribution(f, pm, budget, threads)?;
        let direct = dist.normalized_unit_sum();
        let s = s_from_rho(p, m, dist.zero_count(), rho_v[m as usize - 1], f.ell());
        if direct.im.abs() > S_CROSS_CHECK_TOL || (s - direct.re).abs() > S_CROSS_CHECK_TOL {
            return Err(Error::InternalConsistency(format!(
                "S_F({p}^{m}): count route {s} vs a-sum {}+{}i",
                direct.re, direct.im
            )));
        }
        rho_v.push(dist.zero_count());
        s_local.push(s);
        fk_jets.push(twisted_weight_jet(pm, k, order)?);
    }
    Ok(LocalFactorTable {
        p,
        k,
        depth,
        rho: rho_v,
        s_local,
        fk_jets,
    })
}

/// Least-squares growth exponent of max_a |S_F(q, a)| over primes q <= bound
/// (zero maxima are skipped; they carry no growth information).
pub fn char_sum_growth_exponent(
    f: &QuadPoly,
    prime_bound: u64,
    budget: u64,
    threads: usize,
) -> Result<f64> {
    let primes = crate::util::primes_up_to(prime_bound);
    let maxima = run_jobs(primes.len(), threads, |i| -> Result<f64> {
        let p = primes[i];
        let dist = value_distribution(f, p, budget, 1)?;
        let mut best = 0.0f64;
        for a in 1..p {
            best = best.max(dist.char_sum(a)?.norm());
        }
        Ok(best)
    });
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (p, m) in primes.iter().zip(maxima) {
        let m = m?;
        if m > 1e-9 {
            xs.push((*p as f64).ln());
            ys.push(m.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Diagnostic(
            "too few nonzero character-sum maxima to fit".into(),
        ));
    }
    Ok(crate::util::linear_fit(&xs, &ys).0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q3() -> QuadPoly {
        QuadPoly::new(3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
    }

    fn w3() -> QuadPoly {
        QuadPoly::new(3, vec![0, 1, 0, 0, 0, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
    }

    const B: u64 = DEFAULT_ENUM_BUDGET;

    #[test]
    fn ramanujan_examples() {
        assert_eq!(ramanujan_sum(6, 1).unwrap(), 1);
        assert_eq!(ramanujan_sum(4, 2).unwrap(), -2);
        assert_eq!(ramanujan_sum(1, 5).unwrap(), 1);
        assert_eq!(ramanujan_sum(9, 3).unwrap(), -3);
        assert_eq!(ramanujan_sum(5, 0).unwrap(), 4);
    }

    #[test]
    fn ramanujan_matches_direct_complex_sum() {
        for q in 1..=30u64 {
            for a in 0..q {
                let mut acc = Complex64::new(0.0, 0.0);
                for h in 1..=q {
                    if gcd(h, q) == 1 {
                        let theta = std::f64::consts::TAU * ((a * h) % q) as f64 / q as f64;
                        acc += Complex64::new(theta.cos(), theta.sin());
                    }
                }
                let exact = ramanujan_sum(q, a).unwrap() as f64;
                assert!(
                    (acc.re - exact).abs() < 1e-9 && acc.im.abs() < 1e-9,
                    "q={q}, a={a}: {acc} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn ap_weight_examples() {
        let f22 = ap_weight_jet(2, 2, 2, 5).unwrap();
        assert!((f22.value() - 0.75).abs() < 1e-14);
        let f21 = ap_weight_jet(2, 1, 2, 5).unwrap();
        assert!((f21.value() - 0.25).abs() < 1e-14);
        let f11 = ap_weight_jet(1, 1, 3, 5).unwrap();
        assert_eq!(f11.coeffs()[0], 1.0);
        assert!(f11.coeffs()[1..].iter().all(|&c| c == 0.0));
        assert!(ap_weight_jet(4, 3, 2, 5).is_err());
    }

    #[test]
    fn completeness_identity_hand_case() {
        // (1 - 2^{-s})^2 + 2^{-s}(2 - 2^{-s}) = 1 identically
        let a = ap_weight_jet(2, 1, 2, 6).unwrap();
        let b = ap_weight_jet(2, 2, 2, 6).unwrap();
        let total = a.add_jet(&b);
        assert!((total.coeff(0) - 1.0).abs() < 1e-14);
        for j in 1..6 {
            assert!(total.coeff(j).abs() < 1e-14, "coeff {j}");
        }
    }

    #[test]
    fn completeness_identity_small_sweep() {
        for q in 1..=20u64 {
            for k in [2u32, 3] {
                let mut total = Jet::zero(5);
                for h in 1..=q {
                    total = total.add_jet(&ap_weight_jet(q, gcd(h, q), k, 5).unwrap());
                }
                assert!((total.coeff(0) - 1.0).abs() < 1e-12, "q={q} k={k}");
                for j in 1..5 {
                    assert!(total.coeff(j).abs() < 1e-12, "q={q} k={k} coeff {j}");
                }
            }
        }
    }

    #[test]
    fn twisted_weight_oracle_examples() {
        assert_eq!(twisted_weight_jet_moebius(1, 2, 4).unwrap().value(), 1.0);
        let f2 = twisted_weight_jet_moebius(2, 2, 4).unwrap();
        assert!((f2.value() - 0.5).abs() < 1e-14);
        let f3 = twisted_weight_jet_moebius(3, 2, 4).unwrap();
        assert!((f3.value() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_certification_and_regression() {
        for k in 1..=5u32 {
            ensure_closed_form_certified(k).unwrap();
        }
        // fast path agrees with oracle on a composite
        let fast = twisted_weight_jet(6, 2, 5).unwrap();
        assert!((fast.value() - 1.0 / 6.0).abs() < 1e-12);
        // the incorrect trailing factor (p^s - 1)/(p - 1) would give 3/4
        // instead of 1/2 at q = 2, k = 2, s = 1
        let order = 5;
        let p = 2u64;
        let base = euler_factor_jet(p, order);
        // (p^s - 1)/(p - 1) = (p e^{(s-1) ln p} - 1)/(p - 1), equal to 1 at s = 1
        let wrong_swing = Jet::exp_linear((p as f64).ln(), order)
            .scale(p as f64)
            .sub_jet(&Jet::constant(1.0, order))
            .scale(1.0 / (p as f64 - 1.0));
        let wrong = inv_pow_jet(2, order)
            .mul_jet(&Jet::constant(1.0, order).add_jet(&base.mul_jet(&wrong_swing)));
        assert!((wrong.value() - 0.75).abs() < 1e-12, "wrong form value");
        let right = twisted_weight_jet(2, 2, order).unwrap();
        assert!((right.value() - 0.5).abs() < 1e-12, "corrected form value");
    }

    #[test]
    fn closed_form_value_at_one() {
        // F_k(p^m, 1) = p^{-m} sum_{v=1}^{k-1} (1-1/p)^{v-1} tau_v(p^{m-1})
        for (p, m, k) in [(2u64, 3u32, 3u32), (3, 2, 4), (5, 1, 2), (7, 2, 5)] {
            let jet = twisted_weight_jet(p.pow(m), k, k as usize + 2).unwrap();
            let mut expect = 0.0;
            let u = 1.0 - 1.0 / p as f64;
            for v in 1..k {
                expect +=
                    u.powi(v as i32 - 1) * binomial(m as u64 + v as u64 - 2, v as u64 - 1) as f64;
            }
            expect *= (p as f64).powi(-(m as i32));
            assert!(
                (jet.value() - expect).abs() < 1e-12,
                "p={p} m={m} k={k}: {} vs {expect}",
                jet.value()
            );
        }
    }

    #[test]
    fn twisted_weight_multiplicative_small() {
        for k in [2u32, 3] {
            for (q1, q2) in [(2u64, 3u64), (4, 9), (8, 5), (3, 25)] {
                let a = twisted_weight_jet(q1, k, 6).unwrap();
                let b = twisted_weight_jet(q2, k, 6).unwrap();
                let ab = twisted_weight_jet(q1 * q2, k, 6).unwrap();
                let prod = a.mul_jet(&b);
                for j in 0..6 {
                    assert!((ab.coeff(j) - prod.coeff(j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn independence_from_a() {
        // sum_h e(-ah/q) f_k(q, gcd(h,q), 1) is the same for every unit a
        for q in 2..=20u64 {
            for k in [2u32, 3] {
                let mut values = Vec::new();
                for a in 1..=q {
                    if gcd(a, q) != 1 {
                        continue;
                    }
                    let mut acc = Complex64::new(0.0, 0.0);
                    for h in 1..=q {
                        let w = ap_weight_jet(q, gcd(h, q), k, 3).unwrap().value();
                        let theta = -std::f64::consts::TAU * ((a * h) % q) as f64 / q as f64;
                        acc += Complex64::new(theta.cos(), theta.sin()) * w;
                    }
                    values.push(acc);
                }
                let first = values[0];
                for v in &values {
                    assert!((v - first).norm() < 1e-12, "q={q} k={k}");
                }
                // and equals F_k(q, 1)
                let fk = twisted_weight_jet_moebius(q, k, 3).unwrap().value();
                assert!(
                    (first.re - fk).abs() < 1e-12 && first.im.abs() < 1e-12,
                    "q={q} k={k}: {first} vs {fk}"
                );
            }
        }
    }

    #[test]
    fn euler_factor_jet_matches_finite_differences() {
        for p in [2u64, 5, 97] {
            let jet = euler_factor_jet(p, 4);
            let g = |s: f64| 1.0 - (p as f64).powf(-s);
            let h = 1e-4;
            let d1 = (g(1.0 + h) - g(1.0 - h)) / (2.0 * h);
            let d2 = (g(1.0 + h) - 2.0 * g(1.0) + g(1.0 - h)) / (h * h);
            assert!((jet.derivative_at_one(1) - d1).abs() < 1e-5 * d1.abs());
            assert!((jet.derivative_at_one(2) - d2).abs() < 1e-4 * d2.abs());
        }
    }

    #[test]
    fn char_sum_examples() {
        // S_F(1, .) = 1
        let d1 = value_distribution(&q3(), 1, B, 1).unwrap();
        let s1 = d1.char_sum(1).unwrap();
        assert!((s1.re - 1.0).abs() < 1e-15 && s1.im.abs() < 1e-15);
        // Q3: S(2,1) = 0
        let s21 = char_sum(&q3(), 2, 1, B, 1).unwrap();
        assert!(s21.norm() < 1e-10);
        // Q3: S(3,1) = -3 sqrt(3) i, |S| = 3^{3/2}
        let s31 = char_sum(&q3(), 3, 1, B, 1).unwrap();
        assert!(s31.re.abs() < 1e-9);
        assert!((s31.im + 3.0 * 3.0f64.sqrt()).abs() < 1e-9);
        assert!((s31.norm() - 3.0f64.powf(1.5)).abs() < 1e-9);
        // gcd violation is an error
        assert!(char_sum(&q3(), 4, 2, B, 1).is_err());
    }

    #[test]
    fn char_sum_conjugation_symmetry() {
        for f in [q3(), w3()] {
            for q in [3u64, 4, 5, 7, 9] {
                let dist = value_distribution(&f, q, B, 1).unwrap();
                for a in 1..q {
                    if gcd(a, q) != 1 {
                        continue;
                    }
                    let s = dist.char_sum(a).unwrap();
                    let sc = dist.char_sum(q - a).unwrap();
                    assert!((sc - s.conj()).norm() < 1e-12, "q={q} a={a}");
                }
            }
        }
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho(&q3(), 1, B, 1).unwrap(), 1);
        assert_eq!(rho(&q3(), 2, B, 1).unwrap(), 4);
        assert_eq!(rho(&w3(), 2, B, 1).unwrap(), 4);
        assert_eq!(rho(&q3(), 3, B, 1).unwrap(), 9);
    }

    #[test]
    fn value_distribution_thread_invariance() {
        for f in [q3(), w3()] {
            let a = value_distribution(&f, 8, B, 1).unwrap();
            let b = value_distribution(&f, 8, B, 4).unwrap();
            assert_eq!(a.counts(), b.counts());
            assert_eq!(a.counts().iter().sum::<u64>(), 512);
        }
    }

    #[test]
    fn s_normalized_examples() {
        assert_eq!(s_normalized(&q3(), 1, B, 1).unwrap(), 1.0);
        assert!(s_normalized(&q3(), 2, B, 1).unwrap().abs() < 1e-12);
        assert!(s_normalized(&q3(), 3, B, 1).unwrap().abs() < 1e-12);
        // W3 at 4: rho(4) = 20, rho(2) = 4 -> 20/16 - 4/4 = 1/4
        assert_eq!(rho(&w3(), 4, B, 1).unwrap(), 20);
        assert!((s_normalized(&w3(), 4, B, 1).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn s_normalized_multiplicative_small() {
        for f in [q3(), w3()] {
            for (q1, q2) in [(2u64, 3u64), (4, 3), (2, 9), (5, 4)] {
                let a = s_normalized(&f, q1, B, 1).unwrap();
                let b = s_normalized(&f, q2, B, 1).unwrap();
                let ab = s_normalized(&f, q1 * q2, B, 1).unwrap();
                assert!((ab - a * b).abs() < 1e-12, "q1={q1} q2={q2}");
            }
        }
    }

    #[test]
    fn local_table_builds_and_links() {
        let t = local_factor_table(&q3(), 2, 2, 4, 6, B, 1).unwrap();
        assert_eq!(t.depth, 4);
        assert_eq!(t.rho[0], 1);
        assert_eq!(t.rho[1], 4);
        for m in 1..=t.depth as usize {
            let expect = s_from_rho(2, m as u32, t.rho[m], t.rho[m - 1], 3);
            assert_eq!(t.s_local[m], expect);
        }
        assert_eq!(t.fk_jets.len(), 4);
    }

    #[test]
    fn budget_errors_carry_requirements() {
        match value_distribution(&q3(), 1000, 1000, 1) {
            Err(Error::BudgetExceeded { required, .. }) => {
                assert_eq!(required, 1_000_000_000u128)
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
