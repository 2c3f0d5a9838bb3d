//! Integer quadratic polynomials F(x) = x^t Q x + b^t x + c on boxes
//! \[1,X\]^l, together with the hypothesis checks the asymptotic engine
//! requires: nondegenerate symmetrized matrix and strict positivity of F on
//! the box.

use crate::error::{Error, Result};
use crate::util::det_i128;

/// Coefficient magnitude cap. Keeps symmetrized entries, per-step deltas and
/// mod-q reductions inside i64 without overflow checks in hot loops.
pub const MAX_COEFF: i64 = 1 << 31;

/// F(x) = x^t Q x + b^t x + c with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadPoly {
    ell: usize,
    q: Vec<i64>, // row-major l x l
    b: Vec<i64>,
    c: i64,
}

impl QuadPoly {
    pub fn new(ell: usize, q: Vec<i64>, b: Vec<i64>, c: i64) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if q.len() != ell * ell {
            return Err(Error::DimensionMismatch {
                expected: ell * ell,
                got: q.len(),
            });
        }
        if b.len() != ell {
            return Err(Error::DimensionMismatch {
                expected: ell,
                got: b.len(),
            });
        }
        if q.iter().chain(b.iter()).chain([&c]).any(|&v| v.abs() > MAX_COEFF) {
            return Err(Error::InvalidArgument(format!(
                "coefficient magnitude exceeds {MAX_COEFF}"
            )));
        }
        Ok(QuadPoly { ell, q, b, c })
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn quad_coeffs(&self) -> &[i64] {
        &self.q
    }

    pub fn linear_coeffs(&self) -> &[i64] {
        &self.b
    }

    pub fn constant(&self) -> i64 {
        self.c
    }

    /// Entries of Q + Q^t, row-major.
    pub fn symmetrized(&self) -> Vec<i64> {
        let l = self.ell;
        let mut s = vec![0i64; l * l];
        for i in 0..l {
            for j in 0..l {
                s[i * l + j] = self.q[i * l + j] + self.q[j * l + i];
            }
        }
        s
    }

    /// det(Q + Q^t), exact.
    pub fn discriminant(&self) -> i128 {
        let s: Vec<i128> = self.symmetrized().iter().map(|&v| v as i128).collect();
        det_i128(self.ell, &s)
    }

    /// Exact value of F at an integer point, wide accumulation throughout.
    pub fn evaluate(&self, x: &[i64]) -> Result<i128> {
        if x.len() != self.ell {
            return Err(Error::DimensionMismatch {
                expected: self.ell,
                got: x.len(),
            });
        }
        let l = self.ell;
        let mut acc = self.c as i128;
        for i in 0..l {
            let xi = x[i] as i128;
            acc += self.b[i] as i128 * xi;
            for (j, &xj) in x.iter().enumerate() {
                acc += self.q[i * l + j] as i128 * xi * xj as i128;
            }
        }
        Ok(acc)
    }

    /// F at a real point; used by quadrature.
    pub fn evaluate_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.ell);
        let l = self.ell;
        let mut acc = self.c as f64;
        for i in 0..l {
            let mut row = self.b[i] as f64;
            for (j, &xj) in x.iter().enumerate() {
                row += self.q[i * l + j] as f64 * xj;
            }
            acc += x[i] * row;
        }
        acc
    }

    /// Upper bound for F over \[1,X\]^l: sum |a_ij| X^2 + sum |b_r| X + |c|.
    /// Sieve arrays are sized by this, so it must dominate every attained
    /// value even for mixed-sign coefficients.
    pub fn sieve_bound(&self, x: u64) -> i128 {
        let x = x as i128;
        let qa: i128 = self.q.iter().map(|&v| (v as i128).abs()).sum();
        let ba: i128 = self.b.iter().map(|&v| (v as i128).abs()).sum();
        qa * x * x + ba * x + (self.c as i128).abs()
    }

    /// F(X, X, ..., X) = X^2 sum a_ij + X sum b_r + c. Equals `sieve_bound`
    /// when every coefficient is nonnegative; reported for reference only.
    pub fn corner_value(&self, x: u64) -> i128 {
        let x = x as i128;
        let qs: i128 = self.q.iter().map(|&v| v as i128).sum();
        let bs: i128 = self.b.iter().map(|&v| v as i128).sum();
        qs * x * x + bs * x + self.c as i128
    }

    /// Checks the hypotheses on the box \[1,X\]^l. Violations are reported,
    /// not thrown.
    pub fn validate(&self, x: u64) -> Validation {
        let disc = self.discriminant();
        let pos = self.positivity_on_box(x);
        Validation {
            discriminant: disc,
            nondegenerate: disc != 0,
            positive_on_box: pos.positive,
            positivity_certified: pos.certified,
            positivity_witness: pos.witness,
            min_found: pos.min_found,
            ell_at_least_3: self.ell >= 3,
        }
    }

    fn positivity_on_box(&self, x: u64) -> Positivity {
        let l = self.ell as u32;
        let exhaustive_ok = (x as u128)
            .checked_pow(l)
            .map(|n| n <= 10_000_000)
            .unwrap_or(false);
        if exhaustive_ok {
            let (min, argmin) = self.exhaustive_min(x);
            Positivity {
                positive: min >= 1,
                witness: (min < 1).then_some((argmin, min)),
                certified: true,
                min_found: Some(min),
            }
        } else {
            self.relaxed_min(x)
        }
    }

    fn exhaustive_min(&self, x: u64) -> (i128, Vec<i64>) {
        let mut best = i128::MAX;
        let mut arg = vec![1i64; self.ell];
        for_each_box_value(self, x, 1, x + 1, &mut |v, pt| {
            if (v as i128) < best {
                best = v as i128;
                arg = pt.to_vec();
            }
        });
        (best, arg)
    }

    /// Continuous relaxation: minimize over every face of the box (each
    /// coordinate fixed at 1, fixed at X, or free; stationary point of the
    /// free block by a linear solve). Rounds conservatively: a verdict of
    /// "positive" requires continuous min > 1/2, since the lattice min is an
    /// integer no smaller than the continuous min.
    fn relaxed_min(&self, x: u64) -> Positivity {
        let l = self.ell;
        if l > 12 {
            // 3^l face enumeration too large: conservative rejection
            return Positivity {
                positive: false,
                witness: None,
                certified: false,
                min_found: None,
            };
        }
        let s = self.symmetrized();
        let xf = x as f64;
        let mut cont_min = f64::INFINITY;
        let mut candidates: Vec<Vec<i64>> = Vec::new();
        let mut assign = vec![0u8; l]; // 0 = low, 1 = high, 2 = free
        loop {
            self.face_minimum(&s, xf, &assign, &mut cont_min, &mut candidates);
            // next assignment in base 3
            let mut i = 0;
            while i < l {
                assign[i] += 1;
                if assign[i] < 3 {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
            if i == l {
                break;
            }
        }
        if cont_min > 0.5 {
            return Positivity {
                positive: true,
                witness: None,
                certified: true,
                min_found: Some(cont_min.ceil() as i128),
            };
        }
        // continuous min not positive: check nearby lattice points for a
        // definite witness, otherwise reject conservatively
        for cand in &candidates {
            if let Ok(v) = self.evaluate(cand) {
                if v <= 0 {
                    return Positivity {
                        positive: false,
                        witness: Some((cand.clone(), v)),
                        certified: true,
                        min_found: Some(v),
                    };
                }
            }
        }
        Positivity {
            positive: false,
            witness: None,
            certified: false,
            min_found: None,
        }
    }

    fn face_minimum(
        &self,
        s: &[i64],
        xf: f64,
        assign: &[u8],
        cont_min: &mut f64,
        candidates: &mut Vec<Vec<i64>>,
    ) {
        let l = self.ell;
        let free: Vec<usize> = (0..l).filter(|&i| assign[i] == 2).collect();
        let mut pt = vec![0.0f64; l];
        for i in 0..l {
            pt[i] = match assign[i] {
                0 => 1.0,
                1 => xf,
                _ => 0.0,
            };
        }
        if !free.is_empty() {
            // solve S_ff t = -(b_f + S_{f,fixed} x_fixed)
            let m = free.len();
            let mut a = vec![0.0f64; m * m];
            let mut rhs = vec![0.0f64; m];
            for (r, &i) in free.iter().enumerate() {
                let mut v = self.b[i] as f64;
                for j in 0..l {
                    if assign[j] == 2 {
                        continue;
                    }
                    v += s[i * l + j] as f64 * pt[j];
                }
                rhs[r] = -v;
                for (cidx, &j) in free.iter().enumerate() {
                    a[r * m + cidx] = s[i * l + j] as f64;
                }
            }
            let Some(sol) = solve_dense(m, &mut a, &mut rhs) else {
                return; // degenerate block: its minimum lies on a sub-face
            };
            for (r, &i) in free.iter().enumerate() {
                if !(sol[r] > 1.0 && sol[r] < xf) {
                    return; // stationary point outside the open face
                }
                pt[i] = sol[r];
            }
        }
        let v = self.evaluate_f64(&pt);
        if v < *cont_min {
            *cont_min = v;
        }
        if v <= 0.5 {
            let cand: Vec<i64> = pt
                .iter()
                .map(|&t| (t.round() as i64).clamp(1, xf as i64))
                .collect();
            candidates.push(cand);
        }
    }
}

/// Positivity verdict on a box; `certified` distinguishes a proven verdict
/// from a conservative rejection.
struct Positivity {
    positive: bool,
    witness: Option<(Vec<i64>, i128)>,
    certified: bool,
    min_found: Option<i128>,
}

/// Gaussian elimination with partial pivoting; None if (nearly) singular.
fn solve_dense(n: usize, a: &mut [f64], rhs: &mut [f64]) -> Option<Vec<f64>> {
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| {
            a[i * n + k]
                .abs()
                .partial_cmp(&a[j * n + k].abs())
                .unwrap()
        })?;
        if a[piv * n + k].abs() < 1e-12 {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            rhs.swap(k, piv);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut sol = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for j in i + 1..n {
            v -= a[i * n + j] * sol[j];
        }
        sol[i] = v / a[i * n + i];
    }
    Some(sol)
}

/// Hypothesis report for a polynomial on a box.
#[derive(Clone, Debug)]
pub struct Validation {
    pub discriminant: i128,
    pub nondegenerate: bool,
    pub positive_on_box: bool,
    /// True when the positivity verdict is proven (exhaustive scan or
    /// continuous bound); false marks a conservative rejection.
    pub positivity_certified: bool,
    /// A lattice point with F <= 0, when one was found.
    pub positivity_witness: Option<(Vec<i64>, i128)>,
    pub min_found: Option<i128>,
    pub ell_at_least_3: bool,
}

impl Validation {
    /// All hypotheses of the asymptotic engine hold.
    pub fn passes(&self) -> bool {
        self.nondegenerate && self.positive_on_box && self.ell_at_least_3
    }

    /// Hypotheses needed by exact computation and diagnostics only.
    pub fn passes_for_diagnostics(&self) -> bool {
        self.nondegenerate && self.positive_on_box
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.nondegenerate {
            out.push("det(Q + Q^t) = 0 (degenerate quadratic part)".to_string());
        }
        if !self.positive_on_box {
            match &self.positivity_witness {
                Some((pt, v)) => out.push(format!("F({pt:?}) = {v} <= 0 on the box")),
                None => out.push("positivity on the box could not be certified".to_string()),
            }
        }
        if !self.ell_at_least_3 {
            out.push("dimension < 3 (asymptotic engine requires l >= 3)".to_string());
        }
        out
    }
}

/// Visits every lattice point with first coordinate in [lo, hi) and the
/// remaining coordinates ranging over \[1, X\], in row-major order, passing the
/// exact value of F and the point itself. The value is updated incrementally
/// along the innermost axis (the per-step delta of a quadratic is affine).
pub fn for_each_box_value<Cb: FnMut(i64, &[i64])>(
    f: &QuadPoly,
    x: u64,
    lo: u64,
    hi: u64,
    cb: &mut Cb,
) {
    let l = f.ell;
    assert!(
        f.sieve_bound(x) <= i64::MAX as i128,
        "box values exceed i64; reduce X or coefficients"
    );
    let s = f.symmetrized();
    let xi = x as i64;
    let last = l - 1;
    let s_last_last = s[last * l + last];
    let mut pt = vec![1i64; l];
    if l == 1 {
        // the slab range is the whole loop
        pt[0] = lo as i64;
        let mut v = f.evaluate(&pt).expect("dim ok") as i64;
        let mut d = s[0] * lo as i64 + f.q[0] + f.b[0];
        for t in lo..hi {
            pt[0] = t as i64;
            cb(v, &pt);
            v += d;
            d += s[0];
        }
        return;
    }
    for x0 in lo..hi {
        pt[0] = x0 as i64;
        for p in pt[1..].iter_mut() {
            *p = 1;
        }
        loop {
            // inner sweep over the last axis
            pt[last] = 1;
            let mut v = f.evaluate(&pt).expect("dim ok") as i64;
            let mut base = f.q[last * l + last] + f.b[last];
            for u in 0..l {
                if u != last {
                    base += s[last * l + u] * pt[u];
                }
            }
            let mut d = base + s_last_last; // delta from x_last = 1 to 2
            for t in 1..=xi {
                pt[last] = t;
                cb(v, &pt);
                v += d;
                d += s_last_last;
            }
            // odometer over middle axes 1..last
            let mut axis = last - 1;
            loop {
                if axis == 0 {
                    // exhausted middle axes for this x0
                    break;
                }
                if pt[axis] < xi {
                    pt[axis] += 1;
                    for p in pt[axis + 1..last].iter_mut() {
                        *p = 1;
                    }
                    break;
                }
                axis -= 1;
            }
            if axis == 0 {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::splitmix64_next;
    use proptest::prelude::*;

    pub fn q3() -> QuadPoly {
        QuadPoly::new(3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
    }

    pub fn w3() -> QuadPoly {
        QuadPoly::new(3, vec![0, 1, 0, 0, 0, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(q3().evaluate(&[1, 1, 1]).unwrap(), 3);
        assert_eq!(w3().evaluate(&[2, 3, 1]).unwrap(), 7);
        assert_eq!(q3().evaluate(&[2, 2, 2]).unwrap(), 12);
    }

    #[test]
    fn evaluate_dimension_error() {
        assert!(matches!(
            q3().evaluate(&[1, 2]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn sieve_bound_examples() {
        assert_eq!(q3().sieve_bound(10), 300);
        assert_eq!(w3().sieve_bound(10), 200);
        let f = QuadPoly::new(3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1], vec![1, 1, 1], 5).unwrap();
        assert_eq!(f.sieve_bound(10), 335);
        assert_eq!(f.corner_value(10), 335);
    }

    #[test]
    fn corner_value_differs_for_mixed_signs() {
        let f = QuadPoly::new(2, vec![1, 0, 0, -1], vec![0, 0], 0).unwrap();
        assert_eq!(f.corner_value(10), 0);
        assert_eq!(f.sieve_bound(10), 200);
    }

    #[test]
    fn validate_w3_indefinite_passes() {
        let v = w3().validate(10);
        assert_eq!(v.discriminant, -2);
        assert!(v.passes(), "indefinite fixture must pass: {:?}", v.violations());
    }

    #[test]
    fn validate_degenerate_rejected() {
        // (x1+x2)^2 + x3^2
        let f = QuadPoly::new(3, vec![1, 2, 0, 0, 1, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap();
        let v = f.validate(10);
        assert_eq!(v.discriminant, 0);
        assert!(!v.passes());
        assert!(v.violations()[0].contains("degenerate"));
    }

    #[test]
    fn validate_negative_rejected_with_witness() {
        let f = QuadPoly::new(3, vec![-1, 0, 0, 0, -1, 0, 0, 0, -1], vec![0, 0, 0], 0).unwrap();
        let v = f.validate(10);
        assert!(!v.positive_on_box);
        // already fails at (1,1,1); the reported witness is some point with F <= 0
        assert_eq!(f.evaluate(&[1, 1, 1]).unwrap(), -3);
        let (pt, val) = v.positivity_witness.expect("witness");
        assert!(val <= 0);
        assert_eq!(f.evaluate(&pt).unwrap(), val);
    }

    #[test]
    fn validate_zero_attained_rejected() {
        // F = (x1-1)^2-ish: x1^2 - 2 x1 + 1 + x2^2 + x3^2 - 2 attains 0? Use
        // a simple poly attaining exactly 0 at (1,1,1): x1^2+x2^2+x3^2-3.
        let f = QuadPoly::new(3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1], vec![0, 0, 0], -3).unwrap();
        let v = f.validate(5);
        assert!(!v.positive_on_box, "F attaining 0 must be rejected");
    }

    #[test]
    fn relaxed_positivity_on_large_box() {
        // X^3 > 1e7 forces the continuous-relaxation path
        let v = q3().validate(100_000);
        assert!(v.positive_on_box && v.positivity_certified);
        let w = w3().validate(100_000);
        assert!(w.positive_on_box && w.positivity_certified);
        let neg = QuadPoly::new(3, vec![-1, 0, 0, 0, -1, 0, 0, 0, -1], vec![0, 0, 0], 0).unwrap();
        let vn = neg.validate(100_000);
        assert!(!vn.positive_on_box);
        assert!(vn.positivity_witness.is_some());
    }

    /// Second, independently associated evaluation: c + sum_i x_i (b_i + sum_j a_ij x_j).
    fn horner_eval(f: &QuadPoly, x: &[i64]) -> i128 {
        let l = f.ell();
        let mut acc = f.constant() as i128;
        for i in 0..l {
            let mut row = f.linear_coeffs()[i] as i128;
            for (j, &xj) in x.iter().enumerate() {
                row += f.quad_coeffs()[i * l + j] as i128 * xj as i128;
            }
            acc += x[i] as i128 * row;
        }
        acc
    }

    #[test]
    fn evaluate_agrees_with_horner_on_random_pairs() {
        let mut state = 0x5eed_0001u64;
        for _ in 0..10_000 {
            let ell = 1 + (splitmix64_next(&mut state) % 4) as usize;
            let rnd = |s: &mut u64, m: i64| (splitmix64_next(s) % (2 * m as u64 + 1)) as i64 - m;
            let q: Vec<i64> = (0..ell * ell).map(|_| rnd(&mut state, 50)).collect();
            let b: Vec<i64> = (0..ell).map(|_| rnd(&mut state, 50)).collect();
            let c = rnd(&mut state, 50);
            let f = QuadPoly::new(ell, q, b, c).unwrap();
            let x: Vec<i64> = (0..ell).map(|_| rnd(&mut state, 1000)).collect();
            assert_eq!(f.evaluate(&x).unwrap(), horner_eval(&f, &x));
        }
    }

    #[test]
    fn box_scan_matches_direct_evaluation() {
        for f in [q3(), w3()] {
            let x = 4u64;
            let mut seen = Vec::new();
            for_each_box_value(&f, x, 1, x + 1, &mut |v, pt| {
                assert_eq!(v as i128, f.evaluate(pt).unwrap());
                seen.push(v);
            });
            assert_eq!(seen.len(), 64);
        }
        // one-dimensional scan
        let f1 = QuadPoly::new(1, vec![2], vec![3], 1).unwrap();
        let mut vals = Vec::new();
        for_each_box_value(&f1, 5, 1, 6, &mut |v, _| vals.push(v));
        assert_eq!(vals, vec![6, 15, 28, 45, 66]);
        // four axes engage two middle odometer wheels
        let f4 = QuadPoly::new(
            4,
            vec![1, 2, 0, 1, 0, 1, 0, 0, 3, 0, 2, 0, 0, 1, 0, 1],
            vec![1, -2, 0, 5],
            -3,
        )
        .unwrap();
        let mut n = 0u64;
        for_each_box_value(&f4, 3, 1, 4, &mut |v, pt| {
            assert_eq!(v as i128, f4.evaluate(pt).unwrap());
            n += 1;
        });
        assert_eq!(n, 81);
    }

    proptest! {
        #[test]
        fn sieve_bound_dominates_box(
            ell in 1usize..=3,
            seed in any::<u64>(),
        ) {
            let mut state = seed;
            let rnd = |s: &mut u64, m: i64| (splitmix64_next(s) % (2 * m as u64 + 1)) as i64 - m;
            let q: Vec<i64> = (0..ell * ell).map(|_| rnd(&mut state, 20)).collect();
            let b: Vec<i64> = (0..ell).map(|_| rnd(&mut state, 20)).collect();
            let c = rnd(&mut state, 20);
            let f = QuadPoly::new(ell, q, b, c).unwrap();
            let x = 10u64;
            let bound = f.sieve_bound(x);
            let mut worst = i128::MIN;
            for_each_box_value(&f, x, 1, x + 1, &mut |v, _| {
                worst = worst.max(v as i128);
            });
            prop_assert!(worst <= bound, "max {worst} > bound {bound}");
        }
    }
}
