//! Thin multiprecision real and complex types over `astro_float::BigFloat`.
//!
//! Every value carries its working precision in bits; binary operations use
//! the larger precision of the two operands. Rounding is to nearest even.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, RoundingMode, Sign, Word};
use num_complex::Complex64;

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Debug, Clone)]
pub struct Real {
    v: BigFloat,
    p: usize,
}

impl Real {
    pub fn from_f64(x: f64, p: usize) -> Self {
        Real {
            v: BigFloat::from_f64(x, p),
            p,
        }
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        Real {
            v: BigFloat::from_i64(x, p),
            p,
        }
    }

    pub fn zero(p: usize) -> Self {
        Self::from_i64(0, p)
    }

    pub fn one(p: usize) -> Self {
        Self::from_i64(1, p)
    }

    /// Exact rational `num / den` rounded once.
    pub fn ratio(num: u64, den: u64, p: usize) -> Self {
        let a = BigFloat::from_u64(num, p + 64);
        let b = BigFloat::from_u64(den, p + 64);
        Real { v: a.div(&b, p, RM), p }
    }

    pub fn prec(&self) -> usize {
        self.p
    }

    pub fn sqrt(&self) -> Self {
        Real {
            v: self.v.sqrt(self.p, RM),
            p: self.p,
        }
    }

    pub fn abs(&self) -> Self {
        Real {
            v: self.v.abs(),
            p: self.p,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        !self.v.is_nan() && !self.v.is_inf()
    }

    pub fn recip(&self) -> Self {
        Real {
            v: self.v.reciprocal(self.p, RM),
            p: self.p,
        }
    }

    pub fn powi(&self, k: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Real::one(self.p);
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Nearest double (truncated below the last retained bit).
    pub fn to_f64(&self) -> f64 {
        let Some((m, _, s, e, _)) = self.v.as_raw_parts() else {
            return if self.v.is_inf_pos() {
                f64::INFINITY
            } else if self.v.is_inf_neg() {
                f64::NEG_INFINITY
            } else {
                f64::NAN
            };
        };
        let wb = core::mem::size_of::<Word>() as i32 * 8;
        let mut acc = 0.0;
        let mut shift = e;
        // the most significant words live at the end of the slice
        for &w in m.iter().rev().take((128 / wb) as usize + 1) {
            shift -= wb;
            acc += libm::ldexp(w as f64, shift);
        }
        if s == Sign::Neg {
            -acc
        } else {
            acc
        }
    }

    pub fn cmp_abs(&self, other: &Real) -> Ordering {
        match self.v.abs_cmp(&other.v) {
            Some(x) if x < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            _ => Ordering::Greater,
        }
    }
}

macro_rules! real_binop {
    ($tr:ident, $f:ident) => {
        impl<'a> $tr<&'a Real> for &'a Real {
            type Output = Real;
            #[inline]
            fn $f(self, rhs: &'a Real) -> Real {
                let p = self.p.max(rhs.p);
                Real {
                    v: self.v.$f(&rhs.v, p, RM),
                    p,
                }
            }
        }
        impl $tr<Real> for Real {
            type Output = Real;
            #[inline]
            fn $f(self, rhs: Real) -> Real {
                (&self).$f(&rhs)
            }
        }
    };
}
real_binop!(Add, add);
real_binop!(Sub, sub);
real_binop!(Mul, mul);
real_binop!(Div, div);

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real {
            v: BigFloat::neg(&self.v),
            p: self.p,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Complex {
    pub re: Real,
    pub im: Real,
}

impl Complex {
    pub fn new(re: Real, im: Real) -> Self {
        Complex { re, im }
    }

    pub fn from_real(re: Real) -> Self {
        let p = re.p;
        Complex {
            re,
            im: Real::zero(p),
        }
    }

    pub fn from_c64(z: Complex64, p: usize) -> Self {
        Complex {
            re: Real::from_f64(z.re, p),
            im: Real::from_f64(z.im, p),
        }
    }

    pub fn zero(p: usize) -> Self {
        Complex::from_real(Real::zero(p))
    }

    pub fn one(p: usize) -> Self {
        Complex::from_real(Real::one(p))
    }

    pub fn prec(&self) -> usize {
        self.re.p.max(self.im.p)
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(&self) -> Self {
        Complex {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn norm_sqr(&self) -> Real {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn scale(&self, r: &Real) -> Self {
        Complex {
            re: &self.re * r,
            im: &self.im * r,
        }
    }

    pub fn add_real(&self, r: &Real) -> Self {
        Complex {
            re: &self.re + r,
            im: self.im.clone(),
        }
    }

    pub fn sub_real(&self, r: &Real) -> Self {
        Complex {
            re: &self.re - r,
            im: self.im.clone(),
        }
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr().recip();
        Complex {
            re: &self.re * &d,
            im: -&(&self.im * &d),
        }
    }

    pub fn powi(&self, k: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Complex::one(self.prec());
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Integer power, negative exponents through the reciprocal.
    pub fn powi_signed(&self, k: i64) -> Self {
        if k >= 0 {
            self.powi(k as usize)
        } else {
            self.recip().powi((-k) as usize)
        }
    }

    /// `|re| + |im|`, a cheap magnitude for pivoting.
    pub fn l1(&self) -> Real {
        &self.re.abs() + &self.im.abs()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl<'a> Add<&'a Complex> for &'a Complex {
    type Output = Complex;
    #[inline]
    fn add(self, rhs: &'a Complex) -> Complex {
        Complex {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl<'a> Sub<&'a Complex> for &'a Complex {
    type Output = Complex;
    #[inline]
    fn sub(self, rhs: &'a Complex) -> Complex {
        Complex {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl<'a> Mul<&'a Complex> for &'a Complex {
    type Output = Complex;
    #[inline]
    fn mul(self, rhs: &'a Complex) -> Complex {
        Complex {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl<'a> Div<&'a Complex> for &'a Complex {
    type Output = Complex;
    fn div(self, rhs: &'a Complex) -> Complex {
        self * &rhs.recip()
    }
}

impl Neg for &Complex {
    type Output = Complex;
    fn neg(self) -> Complex {
        Complex {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

macro_rules! complex_owned {
    ($tr:ident, $f:ident) => {
        impl $tr<Complex> for Complex {
            type Output = Complex;
            #[inline]
            fn $f(self, rhs: Complex) -> Complex {
                (&self).$f(&rhs)
            }
        }
    };
}
complex_owned!(Add, add);
complex_owned!(Sub, sub);
complex_owned!(Mul, mul);
complex_owned!(Div, div);

/// `e^{i pi k / 2^m}` for `k = 0..2^{m+1}`, built from half-angle square
/// roots only, so no transcendental constants are needed.
pub fn roots_of_unity(m: u32, p: usize) -> Vec<Complex> {
    let wp = p + 32;
    // start from e^{i pi / 2} = i and halve m-1 times
    let two = Real::from_i64(2, wp);
    let mut c = Real::zero(wp);
    let mut s = Real::one(wp);
    for _ in 1..m {
        let c2 = (&(&Real::one(wp) + &c) / &two).sqrt();
        s = &s / &(&two * &c2);
        c = c2;
    }
    if m == 0 {
        c = Real::from_i64(-1, wp);
        s = Real::zero(wp);
    }
    let step = Complex::new(c, s);
    let count = 1usize << (m + 1);
    let mut out = Vec::with_capacity(count);
    let mut z = Complex::one(wp);
    for k in 0..count {
        // re-anchor periodically to keep rounding drift negligible
        if k > 0 && k % 64 == 0 {
            z = step.powi(k);
        }
        out.push(Complex::new(
            Real {
                v: z.re.v.clone(),
                p,
            }
            .round_to(p),
            Real {
                v: z.im.v.clone(),
                p,
            }
            .round_to(p),
        ));
        z = &z * &step;
    }
    out
}

impl Real {
    fn round_to(mut self, p: usize) -> Self {
        let _ = self.v.set_precision(p, RM);
        self.p = p;
        self
    }
}

/// Solves `A x = b` by Gaussian elimination with full pivoting.
/// Returns `None` when a pivot vanishes exactly.
pub fn solve(mut a: Vec<Vec<Complex>>, mut b: Vec<Complex>) -> Option<Vec<Complex>> {
    let n = b.len();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut pi, mut pj) = (k, k);
        let mut best = a[k][k].l1();
        for i in k..n {
            for j in k..n {
                let m = a[i][j].l1();
                if m.cmp_abs(&best) == Ordering::Greater {
                    best = m;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best.is_zero() {
            return None;
        }
        a.swap(k, pi);
        b.swap(k, pi);
        if pj != k {
            for row in a.iter_mut() {
                row.swap(k, pj);
            }
            perm.swap(k, pj);
        }
        let inv = a[k][k].recip();
        for i in k + 1..n {
            let f = &a[i][k] * &inv;
            if f.re.is_zero() && f.im.is_zero() {
                continue;
            }
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] = &a[i][j] - &t;
            }
            let t = &f * &b[k];
            b[i] = &b[i] - &t;
        }
    }
    let p = b.first().map_or(64, |z| z.prec());
    let mut y = vec_zero(n, p);
    for k in (0..n).rev() {
        let mut acc = b[k].clone();
        for j in k + 1..n {
            acc = &acc - &(&a[k][j] * &y[j]);
        }
        y[k] = &acc / &a[k][k];
    }
    let mut x = vec_zero(n, p);
    for k in 0..n {
        x[perm[k]] = y[k].clone();
    }
    Some(x)
}

fn vec_zero(n: usize, p: usize) -> Vec<Complex> {
    (0..n).map(|_| Complex::zero(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn to_f64_roundtrip() {
        for x in [1.0, -2.5, 1e-300, 3.14159e200, 0.1, -7.0e-5] {
            assert_eq!(Real::from_f64(x, 256).to_f64(), x);
        }
        assert_eq!(Real::zero(128).to_f64(), 0.0);
        let third = Real::ratio(1, 3, 256);
        assert!((third.to_f64() - 1.0 / 3.0).abs() < 1e-17);
    }

    #[test]
    fn unit_roots() {
        let r = roots_of_unity(4, 256);
        assert_eq!(r.len(), 32);
        for (k, z) in r.iter().enumerate() {
            let t = core::f64::consts::PI * k as f64 / 16.0;
            assert!((z.re.to_f64() - libm::cos(t)).abs() < 1e-15);
            assert!((z.im.to_f64() - libm::sin(t)).abs() < 1e-15);
        }
        // |z|^2 = 1 at full precision
        let e = (&r[7].norm_sqr() - &Real::one(256)).to_f64().abs();
        assert!(e < 1e-70, "{e}");
    }

    #[test]
    fn small_solve() {
        let p = 192;
        let c = |a: f64, b: f64| Complex::from_c64(Complex64::new(a, b), p);
        let a = alloc::vec![
            alloc::vec![c(0.0, 0.0), c(2.0, 1.0)],
            alloc::vec![c(1.0, -1.0), c(3.0, 0.0)],
        ];
        let x = solve(a, alloc::vec![c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        // check residual
        let r0 = (&x[1] * &c(2.0, 1.0)).to_c64() - Complex64::new(1.0, 0.0);
        let r1 = (&(&x[0] * &c(1.0, -1.0)) + &(&x[1] * &c(3.0, 0.0))).to_c64() - Complex64::new(0.0, 2.0);
        assert!(r0.norm() < 1e-15 && r1.norm() < 1e-15);
    }
}
