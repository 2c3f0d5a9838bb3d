//! Truncated power series ("jets") at s = 1, the Laurent data of zeta(s)^k,
//! Stieltjes constants, and residue extraction.
//!
//! A `Jet` stores coefficients c_0..c_{K-1} of sum c_j (s-1)^j; products are
//! truncated at the working order. All functions expanded at s = 1 in this
//! crate are real-analytic there, so coefficients are plain f64.
//!
//! The Stieltjes constants come from the defining limit
//! gamma_n = lim (sum_{l<=M} log^n l / l - log^{n+1} M / (n+1)) accelerated
//! with Euler-Maclaurin corrections at the cutoff. The two subtracted
//! quantities grow like log^{n+1} M, so the cutoff arithmetic runs in
//! double-double; results are certified by agreement between cutoffs M and 2M.

use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use crate::dd::{ln_table, Dd};
use crate::error::{Error, Result};

/// Truncated Taylor expansion at s = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least one coefficient");
        Jet { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Jet::new(vec![0.0; order.max(1)])
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut v = vec![0.0; order.max(1)];
        v[0] = c;
        Jet::new(v)
    }

    /// The variable (s - 1) itself.
    pub fn variable(order: usize) -> Self {
        let mut v = vec![0.0; order.max(2)];
        v[1] = 1.0;
        Jet::new(v)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, j: usize) -> f64 {
        self.coeffs.get(j).copied().unwrap_or(0.0)
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// d^t/ds^t at s = 1, i.e. t! c_t.
    pub fn derivative_at_one(&self, t: usize) -> f64 {
        factorial(t) * self.coeff(t)
    }

    pub fn eval(&self, ds: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * ds + c;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn pad_to(&self, order: usize) -> Jet {
        let mut v = self.coeffs.clone();
        v.resize(order.max(v.len()), 0.0);
        Jet::new(v)
    }

    pub fn scale(&self, f: f64) -> Jet {
        Jet::new(self.coeffs.iter().map(|c| c * f).collect())
    }

    pub fn add_jet(&self, o: &Jet) -> Jet {
        let n = self.order().max(o.order());
        Jet::new((0..n).map(|j| self.coeff(j) + o.coeff(j)).collect())
    }

    pub fn sub_jet(&self, o: &Jet) -> Jet {
        let n = self.order().max(o.order());
        Jet::new((0..n).map(|j| self.coeff(j) - o.coeff(j)).collect())
    }

    /// Truncated product at order max(|a|, |b|).
    pub fn mul_jet(&self, o: &Jet) -> Jet {
        let n = self.order().max(o.order());
        let mut v = vec![0.0f64; n];
        for i in 0..self.order().min(n) {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            for j in 0..o.order().min(n - i) {
                v[i + j] += a * o.coeffs[j];
            }
        }
        Jet::new(v)
    }

    /// Multiplicative inverse as a truncated series; requires c_0 != 0.
    pub fn reciprocal(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 {
            return Err(Error::InvalidArgument(
                "reciprocal of jet with zero constant term".into(),
            ));
        }
        let n = self.order();
        let mut r = vec![0.0f64; n];
        r[0] = 1.0 / a0;
        for j in 1..n {
            let mut s = 0.0;
            for i in 1..=j {
                s += self.coeff(i) * r[j - i];
            }
            r[j] = -s / a0;
        }
        Ok(Jet::new(r))
    }

    pub fn int_pow(&self, n: u32) -> Jet {
        let mut out = Jet::constant(1.0, self.order());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = out.mul_jet(&base);
            }
            base = base.mul_jet(&base);
            n >>= 1;
        }
        out
    }

    /// e^{a (s-1)}: coefficients a^j / j!.
    pub fn exp_linear(a: f64, order: usize) -> Jet {
        let mut v = vec![0.0f64; order.max(1)];
        let mut term = 1.0;
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = term;
            term *= a / (j + 1) as f64;
        }
        Jet::new(v)
    }

    /// Jet of x^s / s at s = 1 for x > 0:
    /// x e^{(s-1) ln x} / (1 + (s-1)).
    pub fn x_pow_s_over_s(x: f64, order: usize) -> Jet {
        assert!(x > 0.0);
        let exp = Jet::exp_linear(x.ln(), order);
        let geom = Jet::new((0..order.max(1)).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect());
        exp.mul_jet(&geom).scale(x)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.add_jet(o)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.sub_jet(o)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        self.mul_jet(o)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0f64, |a, i| a * i as f64)
}

/// Laurent expansion sum_{j >= -m} c_j (s-1)^j truncated above.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    pole_order: usize,
    coeffs: Vec<f64>, // coeffs[i] multiplies (s-1)^(i - pole_order)
}

impl LaurentSeries {
    pub fn from_jet_with_pole(jet: Jet, pole_order: usize) -> Self {
        LaurentSeries {
            pole_order,
            coeffs: jet.coeffs,
        }
    }

    pub fn pole_order(&self) -> usize {
        self.pole_order
    }

    /// Coefficient of (s-1)^power.
    pub fn coeff(&self, power: i32) -> f64 {
        let idx = power + self.pole_order as i32;
        if idx < 0 {
            return 0.0;
        }
        self.coeffs.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// Product; pole orders add, truncation at the shorter tail.
    pub fn mul(&self, o: &LaurentSeries) -> LaurentSeries {
        let a = Jet::new(self.coeffs.clone());
        let b = Jet::new(o.coeffs.clone());
        LaurentSeries {
            pole_order: self.pole_order + o.pole_order,
            coeffs: a.mul_jet(&b).coeffs,
        }
    }

    /// Multiplying by (s-1)^pole_order yields the underlying jet.
    pub fn shift_to_jet(&self) -> Jet {
        Jet::new(self.coeffs.clone())
    }
}

const STIELTJES_MAX: usize = 16;
const STIELTJES_CUTOFF: usize = 120;
/// Certification threshold for agreement between cutoffs M and 2M.
const STIELTJES_CONSISTENCY: f64 = 1e-11;

static STIELTJES: OnceLock<Result<Vec<f64>>> = OnceLock::new();

/// Stieltjes constants gamma_0..gamma_{n_max}, each accurate to well below
/// 1e-10; computed once per process and cached.
pub fn stieltjes_constants(n_max: usize) -> Result<Vec<f64>> {
    if n_max > STIELTJES_MAX {
        return Err(Error::InvalidArgument(format!(
            "stieltjes constants supported up to index {STIELTJES_MAX}, requested {n_max}"
        )));
    }
    let all = STIELTJES.get_or_init(|| {
        let a = stieltjes_at_cutoff(STIELTJES_MAX, STIELTJES_CUTOFF);
        let b = stieltjes_at_cutoff(STIELTJES_MAX, 2 * STIELTJES_CUTOFF);
        let worst = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        if worst > STIELTJES_CONSISTENCY {
            Err(Error::ToleranceNotAchieved {
                what: "stieltjes cutoff consistency",
                requested: STIELTJES_CONSISTENCY,
                achieved: worst,
            })
        } else {
            Ok(b)
        }
    });
    all.clone().map(|v| v[..=n_max].to_vec())
}

/// Bernoulli numbers B_2..B_20 as (numerator, denominator).
const BERNOULLI: [(f64, f64); 10] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
];

/// gamma_n for n <= n_max by the limit definition at cutoff `m`, with
/// Euler-Maclaurin corrections: partial sum of log^n l / l, minus
/// log^{n+1} m/(n+1), minus f(m)/2, minus sum B_2j/(2j)! f^(2j-1)(m), where
/// f(x) = log^n x / x.
fn stieltjes_at_cutoff(n_max: usize, m: usize) -> Vec<f64> {
    let lns = ln_table(m);
    let mut sums = vec![Dd::ZERO; n_max + 1];
    for (l, &ln_l) in lns.iter().enumerate().skip(1) {
        let inv = Dd::ONE / Dd::from_f64(l as f64);
        let mut pw = inv; // ln(l)^n / l
        for s in sums.iter_mut() {
            *s = *s + pw;
            pw = pw * ln_l;
        }
    }
    let ln_m = lns[m];
    let m_dd = Dd::from_f64(m as f64);
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut gamma = sums[n];
        // integral term ln^{n+1}(m)/(n+1)
        gamma = gamma - ln_m.powi(n as u32 + 1) / Dd::from_f64((n + 1) as f64);
        // midpoint term f(m)/2
        let f_m = ln_m.powi(n as u32) / m_dd;
        gamma = gamma - f_m.scale(0.5);
        // derivative terms; f^{(d)}(x) = x^{-(d+1)} sum_i c[i] ln^i x
        let mut c = vec![Dd::ZERO; n + 1];
        c[n] = Dd::ONE;
        let mut deriv_order = 0usize;
        for (j, &(num, den)) in BERNOULLI.iter().enumerate() {
            let target = 2 * (j + 1) - 1; // need f^{(2j+1... )}, odd orders
            while deriv_order < target {
                // c'[i] = (i+1) c[i+1] - (deriv_order+1) c[i]
                let mut nc = vec![Dd::ZERO; n + 1];
                for i in 0..=n {
                    let mut v = c[i].scale(-((deriv_order + 1) as f64));
                    if i < n {
                        v = v + c[i + 1].scale((i + 1) as f64);
                    }
                    nc[i] = v;
                }
                c = nc;
                deriv_order += 1;
            }
            let mut poly = Dd::ZERO;
            for i in (0..=n).rev() {
                poly = poly * ln_m + c[i];
            }
            let deriv = poly / m_dd.powi(target as u32 + 1);
            let factor = Dd::from_f64(num) / Dd::from_f64(den) / factorial_dd(2 * (j + 1));
            gamma = gamma - factor * deriv;
        }
        out.push(gamma.to_f64());
    }
    out
}

fn factorial_dd(n: usize) -> Dd {
    let mut acc = Dd::ONE;
    for i in 2..=n {
        acc = acc * Dd::from_f64(i as f64);
    }
    acc
}

/// Jet of (s-1) zeta(s) at s = 1: 1 + sum_n (-1)^n gamma_n/n! (s-1)^{n+1}.
pub fn shifted_zeta_jet(order: usize) -> Result<Jet> {
    let order = order.max(1);
    let need = order.saturating_sub(2);
    if need > STIELTJES_MAX {
        return Err(Error::InvalidArgument(format!(
            "jet order {order} needs stieltjes index {need} > {STIELTJES_MAX}"
        )));
    }
    let gammas = stieltjes_constants(need)?;
    let mut v = vec![0.0f64; order];
    v[0] = 1.0;
    let mut fact = 1.0f64;
    for n in 0..=need.min(order.saturating_sub(2)) {
        if order < 2 {
            break;
        }
        if n > 0 {
            fact *= n as f64;
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        v[n + 1] = sign * gammas[n] / fact;
    }
    Ok(Jet::new(v))
}

/// Laurent expansion of zeta(s)^k at s = 1 with pole order k; the
/// coefficient of (s-1)^{-r} is the residue of (s-1)^{r-1} zeta(s)^k.
pub fn zeta_pow_laurent(k: u32, order: usize) -> Result<LaurentSeries> {
    if order < k as usize {
        return Err(Error::InvalidArgument(format!(
            "zeta^k needs order >= k, got order {order} < k {k}"
        )));
    }
    let jet = shifted_zeta_jet(order)?.int_pow(k);
    Ok(LaurentSeries::from_jet_with_pole(jet, k as usize))
}

/// alpha_{k,r} = Res((s-1)^{r-1} zeta(s)^k; s=1), the coefficient of
/// (s-1)^{-r} in zeta^k.
pub fn zeta_alpha(k: u32, r: u32) -> Result<f64> {
    let ls = zeta_pow_laurent(k, k as usize + 2)?;
    Ok(ls.coeff(-(r as i32)))
}

/// Res(zeta(s)^k x^s / s * G(s); s = 1): multiply the shifted-zeta power by
/// the jets of x^s/s and G and read off the coefficient of (s-1)^{k-1}.
pub fn residue_main_term(k: u32, x: f64, g: &Jet) -> Result<f64> {
    if g.order() < k as usize {
        return Err(Error::InvalidArgument(format!(
            "residue needs jet order >= k = {k}, got {}",
            g.order()
        )));
    }
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidArgument("x must be positive".into()));
    }
    let ord = g.order().max(k as usize);
    let zsk = shifted_zeta_jet(ord)?.int_pow(k);
    let xs = Jet::x_pow_s_over_s(x, ord);
    let prod = zsk.mul_jet(&xs).mul_jet(g);
    Ok(prod.coeff(k as usize - 1))
}
