//! Direct evaluators for the exponential sums behind the asymptotic and
//! empirical checks of their approximation and bound shapes: the
//! divisor-weighted sum J_k(alpha, X), the box sum I_F(alpha, X), major-arc
//! residuals, minor-arc bound ratios, and the capped Weyl product.

use num_complex::Complex64;

use crate::divisor::DivisorTable;
use crate::error::{Error, Result};
use crate::exec::run_jobs;
use crate::integrals::{gauss_legendre, tensor_integral};
use crate::quadpoly::{for_each_box_value, QuadPoly};
use crate::singular::beta_coeffs;
use crate::util::{det_i128, dist_to_int, gcd, KahanSum};

/// A rational point with offset on the unit circle: alpha = a/q + beta.
#[derive(Clone, Copy, Debug)]
pub struct ArcPoint {
    pub a: u64,
    pub q: u64,
    pub beta: f64,
}

impl ArcPoint {
    pub fn new(a: u64, q: u64, beta: f64) -> Result<Self> {
        if q < 1 {
            return Err(Error::InvalidArgument("q must be >= 1".into()));
        }
        if q > 1 && gcd(a % q, q) != 1 {
            return Err(Error::InvalidArgument(format!(
                "arc point needs gcd(a, q) = 1, got a={a}, q={q}"
            )));
        }
        Ok(ArcPoint { a: a % q, q, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.a as f64 / self.q as f64 + self.beta
    }

    /// The minor-arc hypothesis |beta| <= q^{-2}.
    pub fn beta_in_range(&self) -> bool {
        self.beta.abs() <= 1.0 / (self.q as f64 * self.q as f64)
    }

    fn phase_at(&self, value: i64) -> f64 {
        // exact rational part keeps the phase accurate for large values
        let v = value.rem_euclid(self.q as i64) as u128;
        let r = (v * self.a as u128 % self.q as u128) as u64;
        let frac = r as f64 / self.q as f64 + value as f64 * self.beta;
        std::f64::consts::TAU * frac
    }
}

fn e_of(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

/// J_k(alpha, X) = sum_{m <= X} tau_k(m) e(m alpha), exact summation.
pub fn j_k_direct(k: u32, alpha: f64, x: u64) -> Result<Complex64> {
    let table = DivisorTable::build(k, x)?;
    Ok(j_k_direct_with(&table, alpha, x))
}

pub fn j_k_direct_with(table: &DivisorTable, alpha: f64, x: u64) -> Complex64 {
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for m in 1..=x.min(table.bound()) {
        let t = std::f64::consts::TAU * (m as f64 * alpha).fract();
        let (s, c) = t.sin_cos();
        let w = table.get(m) as f64;
        re.add(w * c);
        im.add(w * s);
    }
    Complex64::new(re.value(), im.value())
}

fn j_k_at_arc(table: &DivisorTable, point: &ArcPoint, x: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..=x.min(table.bound()) {
        acc += e_of(point.phase_at(m as i64)) * table.get(m) as f64;
    }
    acc
}

fn check_box_budget(f: &QuadPoly, x: u64, budget: u64) -> Result<()> {
    let points = (x as u128).checked_pow(f.ell() as u32).unwrap_or(u128::MAX);
    if points > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "box exponential sum",
            required: points,
            budget: budget as u128,
        });
    }
    if f.sieve_bound(x) > i64::MAX as i128 {
        return Err(Error::BudgetExceeded {
            what: "box value range",
            required: f.sieve_bound(x) as u128,
            budget: i64::MAX as u128,
        });
    }
    Ok(())
}

/// I_F(alpha, X) = sum over the lattice box of e(F(x) alpha).
pub fn i_f_direct(f: &QuadPoly, alpha: f64, x: u64, budget: u64) -> Result<Complex64> {
    check_box_budget(f, x, budget)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_box_value(f, x, 1, x + 1, &mut |v, _| {
        acc += e_of(std::f64::consts::TAU * (v as f64 * alpha).fract());
    });
    Ok(acc)
}

fn i_f_at_arc(f: &QuadPoly, point: &ArcPoint, x: u64, budget: u64) -> Result<Complex64> {
    check_box_budget(f, x, budget)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_box_value(f, x, 1, x + 1, &mut |v, _| {
        acc += e_of(point.phase_at(v));
    });
    Ok(acc)
}

/// integral from 1 to X of (ln u)^r e(u beta) du, by panel Gauss-Legendre
/// with at least 10 panels per oscillation period.
pub fn osc_log_integral(r: u32, x: f64, beta: f64) -> Complex64 {
    let periods = (beta.abs() * (x - 1.0)).ceil() as usize;
    // panel width <= 2 keeps the log singularity at u = 0 outside every
    // panel's convergence ellipse
    let min_panels = ((x - 1.0) / 2.0).ceil() as usize;
    let panels = (10 * periods).max(min_panels).max(8);
    let (nodes, weights) = gauss_legendre(8);
    let w = (x - 1.0) / panels as f64;
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    for p in 0..panels {
        let a = 1.0 + w * p as f64;
        for (xi, wi) in nodes.iter().zip(&weights) {
            let u = a + w * (xi + 1.0) / 2.0;
            let g = u.ln().powi(r as i32);
            let (s, c) = (std::f64::consts::TAU * beta * u).sin_cos();
            re.add(w / 2.0 * wi * g * c);
            im.add(w / 2.0 * wi * g * s);
        }
    }
    Complex64::new(re.value(), im.value())
}

/// integral over \[1,X\]^l of e(F(t) beta) dt by tensor Gauss-Legendre with
/// per-axis panel counts of at least 10 per oscillation period.
pub fn box_osc_integral(f: &QuadPoly, x: u64, beta: f64, threads: usize) -> Complex64 {
    let l = f.ell();
    let xf = x as f64;
    let s = f.symmetrized();
    let mut panels = Vec::with_capacity(l);
    for v in 0..l {
        let grad_bound: f64 = (0..l)
            .map(|j| s[v * l + j].unsigned_abs() as f64 * xf)
            .sum::<f64>()
            + f.linear_coeffs()[v].unsigned_abs() as f64;
        let cycles = beta.abs() * grad_bound * (xf - 1.0);
        panels.push(((10.0 * cycles).ceil() as usize).clamp(4, 256));
    }
    let lo = vec![1.0f64; l];
    let hi = vec![xf; l];
    let re = tensor_integral(
        &|t: &[f64]| (std::f64::consts::TAU * beta * f.evaluate_f64(t)).cos(),
        &lo,
        &hi,
        &panels,
        threads,
    );
    let im = tensor_integral(
        &|t: &[f64]| (std::f64::consts::TAU * beta * f.evaluate_f64(t)).sin(),
        &lo,
        &hi,
        &panels,
        threads,
    );
    Complex64::new(re, im)
}

/// Residuals of the two major-arc approximations at one arc point.
#[derive(Clone, Debug)]
pub struct MajorArcResidual {
    pub j_direct: Complex64,
    pub j_approx: Complex64,
    pub j_residual: f64,
    pub i_direct: Complex64,
    pub i_approx: Complex64,
    pub i_residual: f64,
}

/// Compares J_k against sum_r beta_{k,r}(q) * oscillatory log integrals and
/// I_F against q^{-l} S_F(q,a) * box oscillatory integral.
pub fn major_arc_residual(
    f: &QuadPoly,
    k: u32,
    point: &ArcPoint,
    x_divisor: u64,
    x_box: u64,
    budget: u64,
    threads: usize,
) -> Result<MajorArcResidual> {
    let table = DivisorTable::build(k, x_divisor)?;
    let j_direct = j_k_at_arc(&table, point, x_divisor);
    let betas = beta_coeffs(point.q, k)?;
    let mut j_approx = Complex64::new(0.0, 0.0);
    for (r, &b) in betas.iter().enumerate() {
        j_approx += osc_log_integral(r as u32, x_divisor as f64, point.beta) * b;
    }
    let i_direct = i_f_at_arc(f, point, x_box, budget)?;
    let s = crate::local::char_sum(f, point.q, point.a.max(1), budget, threads)?;
    let i_approx = box_osc_integral(f, x_box, point.beta, threads)
        * (s / (point.q as f64).powi(f.ell() as i32));
    Ok(MajorArcResidual {
        j_residual: (j_direct - j_approx).norm(),
        i_residual: (i_direct - i_approx).norm(),
        j_direct,
        j_approx,
        i_direct,
        i_approx,
    })
}

/// The proven minor-arc bound shape with constant 1:
/// X^l q^{-l/2} + X^{l/2} (ln q)^{l/2} + q^{l/2} (ln q)^{l/2}.
pub fn minor_arc_bound(ell: usize, q: u64, x: u64) -> f64 {
    let l = ell as f64;
    let xf = x as f64;
    let qf = q as f64;
    let lq = qf.ln();
    xf.powf(l) * qf.powf(-l / 2.0)
        + xf.powf(l / 2.0) * lq.powf(l / 2.0)
        + qf.powf(l / 2.0) * lq.powf(l / 2.0)
}

/// |I_F(alpha, X)| divided by the bound shape; requires |beta| <= q^{-2}.
pub fn minor_arc_ratio(f: &QuadPoly, point: &ArcPoint, x: u64, budget: u64) -> Result<f64> {
    if !point.beta_in_range() {
        return Err(Error::HypothesisViolated(format!(
            "minor-arc point needs |beta| <= q^-2, got beta={}, q={}",
            point.beta, point.q
        )));
    }
    let i = i_f_at_arc(f, point, x, budget)?;
    Ok(i.norm() / minor_arc_bound(f.ell(), point.q, x))
}

/// One row of the minor-arc sweep report.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub alpha: f64,
    pub q: u64,
    pub a: u64,
    pub beta: f64,
    pub i_abs: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Sweeps all reduced fractions a/q for the given moduli, at offsets beta in
/// {0, 1/(2q^2)}, recording |I_F|, the bound and their ratio.
pub fn minor_arc_sweep(
    f: &QuadPoly,
    qs: &[u64],
    x: u64,
    budget: u64,
    threads: usize,
) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &q in qs {
        for a in 1..=q {
            if gcd(a, q) != 1 && q > 1 {
                continue;
            }
            for half in [false, true] {
                let beta = if half { 0.5 / (q as f64 * q as f64) } else { 0.0 };
                points.push(ArcPoint::new(a % q, q, beta)?);
            }
        }
    }
    let rows = run_jobs(points.len(), threads, |i| -> Result<SweepRow> {
        let pt = points[i];
        let iv = i_f_at_arc(f, &pt, x, budget)?;
        let bound = minor_arc_bound(f.ell(), pt.q, x);
        Ok(SweepRow {
            alpha: pt.alpha(),
            q: pt.q,
            a: pt.a,
            beta: pt.beta,
            i_abs: iv.norm(),
            bound,
            ratio: iv.norm() / bound,
        })
    });
    rows.into_iter().collect()
}

/// H(X, A, alpha) = sum over the box of prod_v min(X, ||a_v^t x alpha||^{-1})
/// for a nonsingular integer matrix A given by rows.
pub fn weyl_product(rows: &[Vec<i64>], alpha: f64, x: u64) -> Result<f64> {
    let l = rows.len();
    if l == 0 || rows.iter().any(|r| r.len() != l) {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: rows.iter().map(|r| r.len()).max().unwrap_or(0),
        });
    }
    let flat: Vec<i128> = rows.iter().flatten().map(|&v| v as i128).collect();
    if det_i128(l, &flat) == 0 {
        return Err(Error::InvalidArgument(
            "weyl product needs a nonsingular matrix".into(),
        ));
    }
    let xf = x as f64;
    let mut total = 0.0f64;
    let mut pt = vec![1i64; l];
    loop {
        let mut prod = 1.0f64;
        for row in rows {
            let dot: i64 = row.iter().zip(&pt).map(|(&a, &t)| a * t).sum();
            let d = dist_to_int(dot as f64 * alpha);
            prod *= if d <= 1.0 / xf { xf } else { xf.min(1.0 / d) };
        }
        total += prod;
        let mut axis = l;
        loop {
            if axis == 0 {
                return Ok(total);
            }
            axis -= 1;
            if pt[axis] < x as i64 {
                pt[axis] += 1;
                for t in pt[axis + 1..].iter_mut() {
                    *t = 1;
                }
                break;
            }
        }
    }
}

/// Grid check outcomes for the parseval and orthogonality identities.
#[derive(Clone, Copy, Debug)]
pub struct GridCheck {
    pub grid_value: f64,
    pub exact_value: f64,
    pub rel_err: f64,
}

/// integral over \[0,1\] of |J_k(alpha, N)|^2 = sum_{m<=N} tau_k(m)^2, by the
/// rectangle rule on the Nyquist grid of step 1/(2N+2), which integrates
/// every frequency present exactly.
pub fn parseval_check(k: u32, n: u64, threads: usize) -> Result<GridCheck> {
    let table = DivisorTable::build(k, n)?;
    let t_count = 2 * n + 2;
    let grid_sums = run_jobs(t_count as usize, threads, |t| {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 1..=n {
            let theta = std::f64::consts::TAU * ((m * t as u64) % t_count) as f64 / t_count as f64;
            acc += e_of(theta) * table.get(m) as f64;
        }
        acc.norm_sqr()
    });
    let mut grid = KahanSum::new();
    for v in grid_sums {
        grid.add(v);
    }
    let grid_value = grid.value() / t_count as f64;
    let exact: f64 = (1..=n).map(|m| (table.get(m) as f64).powi(2)).sum();
    Ok(GridCheck {
        grid_value,
        exact_value: exact,
        rel_err: (grid_value - exact).abs() / exact,
    })
}

/// integral over \[0,1\] of I_F(alpha, X) J_k(-alpha, N_F) recovers the exact
/// box sum T; grid step 1/(2(N_F+1)) makes the rectangle rule exact for the
/// integer frequencies present.
pub fn orthogonality_check(
    f: &QuadPoly,
    k: u32,
    x: u64,
    budget: u64,
    threads: usize,
) -> Result<GridCheck> {
    let bound = f.sieve_bound(x);
    // the Nyquist grid costs O(bound^2) work and O(bound) memory
    if bound > budget.min(10_000_000) as i128 {
        return Err(Error::BudgetExceeded {
            what: "orthogonality check table",
            required: bound as u128,
            budget: budget.min(10_000_000) as u128,
        });
    }
    let n = bound as u64;
    let table = DivisorTable::build(k, n)?;
    // distribution of box values (exact, small range)
    let mut counts = vec![0u64; n as usize + 1];
    for_each_box_value(f, x, 1, x + 1, &mut |v, _| {
        counts[v as usize] += 1;
    });
    let t_count = 2 * (n + 1);
    let grid_sums = run_jobs(t_count as usize, threads, |t| {
        let mut i_acc = Complex64::new(0.0, 0.0);
        for (v, &c) in counts.iter().enumerate() {
            if c > 0 {
                let theta =
                    std::f64::consts::TAU * ((v as u64 * t as u64) % t_count) as f64 / t_count as f64;
                i_acc += e_of(theta) * c as f64;
            }
        }
        let mut j_acc = Complex64::new(0.0, 0.0);
        for m in 1..=n {
            let theta = std::f64::consts::TAU * ((m * t as u64) % t_count) as f64 / t_count as f64;
            j_acc += e_of(theta) * table.get(m) as f64;
        }
        // J(-alpha) = conj(J(alpha)) for real weights
        i_acc * j_acc.conj()
    });
    let mut re = KahanSum::new();
    for v in &grid_sums {
        re.add(v.re);
    }
    let grid_value = re.value() / t_count as f64;
    let exact = crate::divisor::exact_t(f, k, x, budget, threads)? as f64;
    Ok(GridCheck {
        grid_value,
        exact_value: exact,
        rel_err: (grid_value - exact).abs() / exact,
    })
}
