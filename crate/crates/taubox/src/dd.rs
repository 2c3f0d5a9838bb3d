//! Minimal double-double arithmetic (~31 significant digits).
//!
//! Only used by the Stieltjes-constant computation, where the defining limit
//! subtracts two quantities of size ~1e4 and plain f64 would lose the digits
//! the rest of the crate relies on. Every constructor returns a normalized
//! pair (hi, lo) with |lo| <= ulp(hi)/2.

use std::ops::{Add, Div, Mul, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// ln 2 to double-double precision.
    pub const LN_2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.3190468138462996e-17,
    };

    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn scale(self, x: f64) -> Dd {
        self * Dd::from_f64(x)
    }

    pub fn powi(self, n: u32) -> Dd {
        let mut out = Dd::ONE;
        let mut base = self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            n >>= 1;
        }
        out
    }

    /// ln(1+u) for |u| <= 1/2 by the alternating series.
    pub fn ln1p_small(u: Dd) -> Dd {
        debug_assert!(u.hi.abs() <= 0.5 + 1e-15);
        let mut term = u;
        let mut sum = u;
        let mut j = 2u32;
        loop {
            term = term * u;
            let sign = if j.is_multiple_of(2) { -1.0 } else { 1.0 };
            let contrib = term.scale(sign) / Dd::from_f64(j as f64);
            sum = sum + contrib;
            if contrib.hi.abs() < 1e-35 || j > 400 {
                break;
            }
            j += 1;
        }
        sum
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let e = e + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + Dd {
            hi: -o.hi,
            lo: -o.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r2 = r - o * Dd::from_f64(q2);
        let q3 = r2.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// Natural logs of 1..=n to double-double precision.
///
/// ln(2m) = ln m + ln 2; odd arguments step from the preceding even one via
/// ln1p(1/(l-1)), whose argument is <= 1/2 for l >= 3.
pub fn ln_table(n: usize) -> Vec<Dd> {
    let mut t = vec![Dd::ZERO; n + 1];
    for l in 2..=n {
        t[l] = if l % 2 == 0 {
            t[l / 2] + Dd::LN_2
        } else {
            let u = Dd::ONE / Dd::from_f64((l - 1) as f64);
            t[l - 1] + Dd::ln1p_small(u)
        };
    }
    t
}
