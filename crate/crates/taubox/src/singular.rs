//! Singular-series assembly.
//!
//! The main-term coefficients are
//!
//!   H_{k,r} = (1/r!) sum_{t=0}^{k-r-1} (1/t!) (d^t L/ds^t at 1) *
//!             Res((s-1)^{r+t} zeta(s)^k; s=1),
//!
//! where L(s) = sum_q S_F(q) F_k(q, s) carries the arithmetic of F. L is
//! computed as an Euler product of per-prime jets truncated at prime bound
//! P0 and depth M0; the same coefficients are recomputed from the direct
//! q-sum sum_{q<=Q0} S_F(q) beta_{k,r}(q) and the two routes must agree
//! within their combined (measured, heuristic) tail estimates.

use crate::error::{Error, Result};
use crate::exec::run_jobs;
use crate::jets::{residue_main_term, zeta_pow_laurent, Jet};
use crate::local::{
    ap_weight_jet, ensure_closed_form_certified, local_factor_table, s_normalized,
    twisted_weight_jet,
};
use crate::quadpoly::QuadPoly;
use crate::util::{gcd, KahanSum};

/// Guard coefficients carried beyond the k required ones.
pub const JET_GUARD: usize = 4;

/// Truncation parameters for the singular series.
#[derive(Clone, Copy, Debug)]
pub struct Truncation {
    /// Euler product runs over primes p <= p0.
    pub p0: u64,
    /// Maximum local depth; adaptive from 2 up to this cap.
    pub m0: u32,
    /// Direct q-sum cross-check bound.
    pub q0: u64,
    /// Target relative tolerance driving the adaptive depth rule.
    pub tol: f64,
    /// Enumeration budget per local call.
    pub budget: u64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            p0: 100,
            m0: 6,
            q0: 300,
            tol: 1e-6,
            budget: crate::local::DEFAULT_ENUM_BUDGET,
        }
    }
}

/// Decay model exponent used by all tail estimates: terms at modulus q are
/// modelled as C q^{-(l/2 - eps)} with eps = 0.1 absorbing log-like factors
/// at desk scale, and C measured over everything actually computed.
fn tail_exponent(ell: usize) -> f64 {
    ell as f64 / 2.0 - 0.1
}

const TAIL_SAFETY: f64 = 2.0;
const TAIL_FLOOR: f64 = 1e-9;

/// beta_{k,r}(q) = (1/r!) sum_{t=0}^{k-r-1} alpha_{k,r+1+t} c_t where c_t are
/// the Taylor coefficients of F_k(q, s) at s = 1.
pub fn beta_coeffs(q: u64, k: u32) -> Result<Vec<f64>> {
    let order = k as usize + JET_GUARD;
    let fk = twisted_weight_jet(q, k, order)?;
    beta_from_jet(&fk, k)
}

fn beta_from_jet(fk: &Jet, k: u32) -> Result<Vec<f64>> {
    let zeta = zeta_pow_laurent(k, k as usize + JET_GUARD)?;
    let mut out = Vec::with_capacity(k as usize);
    let mut r_fact = 1.0f64;
    for r in 0..k {
        if r > 0 {
            r_fact *= r as f64;
        }
        let mut acc = 0.0;
        for t in 0..(k - r) {
            let alpha = zeta.coeff(-((r + 1 + t) as i32));
            acc += alpha * fk.coeff(t as usize);
        }
        out.push(acc / r_fact);
    }
    Ok(out)
}

/// One prime's contribution to the Euler product.
#[derive(Clone, Debug)]
struct LocalFactor {
    p: u64,
    jet: Jet,
    depth: u32,
    /// The term jets S_F(p^m) F_k(p^m, .) actually summed.
    terms: Vec<Jet>,
}

/// L(s; k, F) as a jet at s = 1 plus tail bookkeeping.
#[derive(Clone, Debug)]
pub struct LJet {
    pub jet: Jet,
    /// Heuristic absolute uncertainty of each jet coefficient.
    pub coeff_tails: Vec<f64>,
    /// Depth actually reached at each prime (diagnostics, ascending p).
    pub depths: Vec<(u64, u32)>,
}

/// integral from a to infinity of (1 + ln x)^j x^{-e} dx, e > 1, by the
/// integration-by-parts recursion.
fn log_tail_integral(j: usize, a: f64, e: f64) -> f64 {
    let head = a.powf(1.0 - e) * (1.0 + a.ln()).powi(j as i32);
    if j == 0 {
        head / (e - 1.0)
    } else {
        (head + j as f64 * log_tail_integral(j - 1, a, e)) / (e - 1.0)
    }
}

/// Euler product over p <= P0 of (1 + sum_{m <= depth(p)} S_F(p^m) F_k(p^m, s)).
///
/// Depth is adaptive: at least 2 where the budget allows (first-order terms
/// can vanish identically, e.g. diagonal forms at p = 2, 3), deepened until
/// the last term contributes less than 1e-3 * tol, capped by M0 and the
/// enumeration budget. Requires l >= 3 for convergence of the product.
pub fn l_jet(f: &QuadPoly, k: u32, trunc: &Truncation, threads: usize) -> Result<LJet> {
    if f.ell() < 3 {
        return Err(Error::HypothesisViolated(format!(
            "singular series needs l >= 3, got {}",
            f.ell()
        )));
    }
    ensure_closed_form_certified(k)?;
    let order = k as usize + JET_GUARD;
    let primes = crate::util::primes_up_to(trunc.p0);
    let stop_below = 1e-3 * trunc.tol;
    let factors: Vec<Result<LocalFactor>> = run_jobs(primes.len(), threads, |i| {
        let p = primes[i];
        let table = local_factor_table(f, k, p, trunc.m0, order, trunc.budget, 1)?;
        let mut jet = Jet::constant(1.0, order);
        let mut terms = Vec::new();
        let mut used = 0u32;
        for m in 1..=table.depth {
            let term = table.fk_jets[m as usize - 1].scale(table.s_local[m as usize]);
            let size = term.max_abs();
            jet = jet.add_jet(&term);
            terms.push(term);
            used = m;
            if m >= 2 && size < stop_below {
                break;
            }
        }
        Ok(LocalFactor {
            p,
            jet,
            depth: used,
            terms,
        })
    });
    let e = tail_exponent(f.ell());
    // measured per-coefficient constants in the model
    // |term(p^m) coeff j| <= c[j] (1 + ln p^m)^j (p^m)^{-e}
    let mut c = vec![0.0f64; order];
    let mut factors_v = Vec::new();
    let mut depths = Vec::new();
    for fac in factors {
        let fac = fac?;
        if fac.jet.value() <= 0.0 {
            return Err(Error::Diagnostic(format!(
                "local factor at p = {} is not positive: {}",
                fac.p,
                fac.jet.value()
            )));
        }
        for (m, term) in fac.terms.iter().enumerate() {
            let pm = (fac.p as f64).powi(m as i32 + 1);
            for (j, cj) in c.iter_mut().enumerate() {
                *cj = cj.max(term.coeff(j).abs() * pm.powf(e) / (1.0 + pm.ln()).powi(j as i32));
            }
        }
        depths.push((fac.p, fac.depth));
        factors_v.push(fac);
    }
    // convergence guard: factors must approach 1
    if let Some(worst) = factors_v
        .iter()
        .rev()
        .take(5)
        .map(|f| (f.jet.value() - 1.0).abs() * (f.p as f64).powf(e - 0.5))
        .reduce(f64::max)
    {
        if worst > 10.0 {
            return Err(Error::Diagnostic(
                "local factors do not decay; Euler product looks divergent".into(),
            ));
        }
    }
    let mut jet = Jet::constant(1.0, order);
    for fac in &factors_v {
        jet = jet.mul_jet(&fac.jet);
    }
    let scale = jet.max_abs().max(1.0);
    let mut coeff_tails = Vec::with_capacity(order);
    for (j, &cj) in c.iter().enumerate() {
        // depths m > depth(p) dropped at each computed prime
        let mut depth_tail = 0.0f64;
        for fac in &factors_v {
            let pf = fac.p as f64;
            let next = pf.powi(fac.depth as i32 + 1);
            let first = (1.0 + next.ln()).powi(j as i32) * next.powf(-e);
            depth_tail += first + log_tail_integral(j, next, e + 1.0) / pf.ln();
        }
        // primes beyond P0 entirely absent; the 1.3/ln P0 factor is the
        // prime-count density bound pi(x) <= 1.3 x / ln x applied to the
        // integral comparison
        let prime_tail =
            1.3 / (trunc.p0 as f64).ln() * log_tail_integral(j, trunc.p0 as f64, e);
        coeff_tails.push(TAIL_SAFETY * scale * cj * (depth_tail + prime_tail) + TAIL_FLOOR);
    }
    Ok(LJet {
        jet,
        coeff_tails,
        depths,
    })
}

/// The assembled singular series for one (F, k).
#[derive(Clone, Debug)]
pub struct SingularSeries {
    pub k: u32,
    pub ell: usize,
    /// H_{k,0} .. H_{k,k-1} from the Euler-product route.
    pub h: Vec<f64>,
    pub l_jet: Jet,
    pub p0: u64,
    pub m0: u32,
    pub q0: u64,
    /// Largest combined dual-path uncertainty over r.
    pub tail_estimate: f64,
    /// Per-r tails of the Euler route.
    pub h_tails: Vec<f64>,
    /// Cross-check values from the direct q-sum and their tails.
    pub h_qsum: Vec<f64>,
    pub qsum_tails: Vec<f64>,
    /// Depth reached at each prime.
    pub depths: Vec<(u64, u32)>,
}

/// Both routes to H_{k,r}, cross-checked; disagreement beyond the combined
/// tail estimates is fatal.
pub fn h_coeffs(f: &QuadPoly, k: u32, trunc: &Truncation, threads: usize) -> Result<SingularSeries> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    let lj = l_jet(f, k, trunc, threads)?;
    let zeta = zeta_pow_laurent(k, k as usize + JET_GUARD)?;
    let mut h = Vec::with_capacity(k as usize);
    let mut h_tails = Vec::with_capacity(k as usize);
    let mut r_fact = 1.0f64;
    for r in 0..k {
        if r > 0 {
            r_fact *= r as f64;
        }
        let mut acc = 0.0;
        let mut tail = 0.0;
        for t in 0..(k - r) {
            // Res((s-1)^{r+t} zeta^k) is the coefficient of (s-1)^{-(r+t+1)},
            // and (1/t!) d^t L/ds^t at 1 is exactly the jet coefficient c_t
            let alpha = zeta.coeff(-((r + t + 1) as i32));
            acc += alpha * lj.jet.coeff(t as usize);
            tail += alpha.abs() * lj.coeff_tails[t as usize];
        }
        h.push(acc / r_fact);
        h_tails.push(tail / r_fact + TAIL_FLOOR);
    }

    // direct q-sum route with measured-decay tail
    let e = tail_exponent(f.ell());
    let order = k as usize + JET_GUARD;
    let per_q: Vec<Result<(f64, Vec<f64>)>> =
        run_jobs(trunc.q0 as usize, threads, |i| {
            let q = i as u64 + 1;
            let s = s_normalized(f, q, trunc.budget, 1)?;
            let fk = twisted_weight_jet(q, k, order)?;
            Ok((s, beta_from_jet(&fk, k)?))
        });
    let mut sums = vec![KahanSum::new(); k as usize];
    let mut c_r = vec![0.0f64; k as usize];
    for (i, item) in per_q.into_iter().enumerate() {
        let q = i as u64 + 1;
        let (s, betas) = item?;
        for (r, &b) in betas.iter().enumerate() {
            let term = s * b;
            sums[r].add(term);
            c_r[r] = c_r[r].max(term.abs() * (q as f64).powf(e));
        }
    }
    let h_qsum: Vec<f64> = sums.iter().map(|s| s.value()).collect();
    let qsum_tails: Vec<f64> = c_r
        .iter()
        .map(|c| TAIL_SAFETY * c * (trunc.q0 as f64).powf(1.0 - e) / (e - 1.0) + TAIL_FLOOR)
        .collect();

    let mut worst_combined = 0.0f64;
    for r in 0..k as usize {
        let diff = (h[r] - h_qsum[r]).abs();
        let allowed = h_tails[r] + qsum_tails[r];
        worst_combined = worst_combined.max(allowed);
        if diff > allowed {
            return Err(Error::InternalConsistency(format!(
                "H_{{{k},{r}}} routes disagree: Euler {} vs q-sum {} (|diff| {diff:e} > {allowed:e})",
                h[r], h_qsum[r]
            )));
        }
    }
    Ok(SingularSeries {
        k,
        ell: f.ell(),
        h,
        l_jet: lj.jet,
        p0: trunc.p0,
        m0: trunc.m0,
        q0: trunc.q0,
        tail_estimate: worst_combined,
        h_tails,
        h_qsum,
        qsum_tails,
        depths: lj.depths,
    })
}

/// Main term for the tau_k sum over an arithmetic progression h mod q:
/// Res(zeta(s)^k x^s / s f_k(q, delta, s); s = 1) with delta = gcd(h, q).
///
/// The approximation is only asserted for q <= x^{2/(k+1)}; callers that
/// care should check `smith_range_ok` and warn, not fail.
pub fn smith_main_term(k: u32, x: f64, h: u64, q: u64) -> Result<f64> {
    if q < 1 || h < 1 || h > q {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= h <= q, got h={h}, q={q}"
        )));
    }
    let delta = gcd(h, q);
    let g = ap_weight_jet(q, delta, k, k as usize + JET_GUARD)?;
    residue_main_term(k, x, &g)
}

/// The hypothesis q <= x^{2/(k+1)} of the AP approximation.
pub fn smith_range_ok(k: u32, x: f64, q: u64) -> bool {
    (q as f64) <= x.powf(2.0 / (k as f64 + 1.0))
}
