//! Closed-form constants, the saddle equation, the liquid region and its
//! boundary, and the limiting lozenge densities.
//!
//! Macroscopic coordinates `(xi, eta)` relate to the 2x2 block indices by
//! `x = N (1 + xi)`, `y = N (1 + eta)`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::domain;
use crate::model::DensityTriple;
use crate::mp::{Complex, Real};
use crate::roots::{horner, real_poly_roots};
use crate::{Error, Result};

/// Imaginary parts at or below this are treated as real.
pub const IM_TOL: f64 = 1e-9;

/// Upper roots below this, next to a larger one, are split real roots.
const SPLIT_TOL: f64 = 1e-6;

type C = Complex64;

#[inline]
fn cr(x: f64) -> C {
    C::new(x, 0.0)
}

/// Constants attached to a value of alpha in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaConstants {
    pub alpha: f64,
    pub c: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r_plus: C,
    pub r_minus: C,
    pub radius0: f64,
    pub radius_alpha: f64,
    pub radius1: f64,
    pub theta0: f64,
    pub theta_alpha: f64,
    pub theta1: f64,
}

impl AlphaConstants {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(domain!("alpha must lie in (0, 1), got {alpha}"));
        }
        let a = alpha;
        let sa = a.sqrt();
        let c = (a / (1.0 - a + a * a)).sqrt();
        let r_plus = C::new(c * (1.0 + a) / 2.0, c * 3f64.sqrt() * (1.0 - a) / 2.0);
        Ok(AlphaConstants {
            alpha: a,
            c,
            r1: -sa,
            r2: sa * (a * c + sa) / (c + sa),
            r3: sa * (c + sa) / (a * c + sa),
            r_plus,
            r_minus: r_plus.conj(),
            radius0: sa,
            radius_alpha: (1.0 - a) * sa,
            radius1: (1.0 - a) / sa,
            theta0: r_plus.arg(),
            theta_alpha: (r_plus - a / c).arg(),
            theta1: (r_plus - 1.0 / c).arg(),
        })
    }

    /// The five double poles `0 < alpha c < alpha/c < c < 1/c` of `Q`.
    pub fn poles(&self) -> [f64; 5] {
        let (a, c) = (self.alpha, self.c);
        [0.0, a * c, a / c, c, 1.0 / c]
    }

    /// Numerator `Pi(z) = (z-r1)^2 (z-r2)^2 (z-r3)^2 (z-r+)(z-r-)`.
    pub fn pi_eval(&self, z: C) -> C {
        let s = (z - self.r1) * (z - self.r2) * (z - self.r3);
        s * s * (z - self.r_plus) * (z - self.r_minus)
    }

    /// `D(z) = z (z - alpha c)(z - alpha/c)(z - c)(z - 1/c)`.
    pub fn pole_product(&self, z: C) -> C {
        self.poles().iter().fold(cr(1.0), |acc, p| acc * (z - p))
    }

    /// `Q(z) = Pi(z) / (4 D(z)^2)`.
    pub fn q_eval(&self, z: C) -> Result<C> {
        for p in self.poles() {
            if (z - p).norm() < 1e-12 {
                return Err(domain!("Q evaluated within 1e-12 of the pole {p}"));
            }
        }
        let d = self.pole_product(z);
        Ok(self.pi_eval(z) / (d * d * 4.0))
    }

    /// `z* = 1/c + R1^2 / (z - 1/c)`.
    pub fn star(&self, z: C) -> Result<C> {
        let ci = 1.0 / self.c;
        if (z - ci).norm() == 0.0 {
            return Err(domain!("star operation is singular at 1/c"));
        }
        Ok(cr(ci) + self.radius1 * self.radius1 / (z - ci))
    }

    /// Coefficients `(a(z), b(z))` of the saddle left-hand side
    /// `f(z; xi, eta) = a(z) xi + b(z) eta`.
    pub fn lhs_coeffs(&self, z: C) -> (C, C) {
        let (a, c) = (self.alpha, self.c);
        let ca = 0.5 / z - 0.5 * ((z - a * c).inv() + (z - a / c).inv());
        let cb = -0.5 / z + 0.5 * ((z - c).inv() + (z - 1.0 / c).inv());
        (ca, cb)
    }

    fn lhs_coeffs_deriv(&self, z: C) -> (C, C) {
        let (a, c) = (self.alpha, self.c);
        let sq = |v: C| v * v;
        let da = -0.5 / sq(z) + 0.5 * (sq(z - a * c).inv() + sq(z - a / c).inv());
        let db = 0.5 / sq(z) - 0.5 * (sq(z - c).inv() + sq(z - 1.0 / c).inv());
        (da, db)
    }

    /// Left side of the saddle equation.
    pub fn lhs(&self, z: C, xi: f64, eta: f64) -> C {
        let (a, b) = self.lhs_coeffs(z);
        a * xi + b * eta
    }

    /// Real square root of `Q` on the real line, analytic away from the
    /// poles: `sigma (s-r1)(s-r2)(s-r3)|s-r+| / (2 D(s))`, with its derivative.
    pub fn sqrt_q_real(&self, s: f64, sigma: f64) -> (f64, f64) {
        let nr = [self.r1, self.r2, self.r3];
        let n = nr.iter().fold(1.0, |a, r| a * (s - r));
        let dn = (0..3)
            .map(|i| (0..3).filter(|&j| j != i).fold(1.0, |a, j| a * (s - nr[j])))
            .sum::<f64>();
        let (re, im) = (self.r_plus.re, self.r_plus.im);
        let m = ((s - re) * (s - re) + im * im).sqrt();
        let dm = (s - re) / m;
        let (d, dd) = horner(&self.pole_poly(), cr(s));
        let (d, dd) = (d.re, dd.re);
        let v = sigma * n * m / (2.0 * d);
        let dv = sigma * ((dn * m + n * dm) * d - n * m * dd) / (2.0 * d * d);
        (v, dv)
    }

    fn pole_poly(&self) -> Vec<f64> {
        let mut p = vec![1.0];
        for r in self.poles() {
            p = poly_mul(&p, &[-r, 1.0]);
        }
        p
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    out
}

fn from_roots(rs: &[f64]) -> Vec<f64> {
    rs.iter().fold(vec![1.0], |p, r| poly_mul(&p, &[-r, 1.0]))
}

/// `(xi, eta)` in the closed hexagon `|xi|, |eta|, |eta - xi| <= 1`.
pub fn in_hexagon(xi: f64, eta: f64) -> bool {
    xi.abs() <= 1.0 && eta.abs() <= 1.0 && (eta - xi).abs() <= 1.0
}

fn in_open_hexagon(xi: f64, eta: f64) -> bool {
    xi.abs() < 1.0 && eta.abs() < 1.0 && (eta - xi).abs() < 1.0
}

/// The cleared saddle equation `M(z) = Pi(z) - L(z)^2` with
/// `L = (z-1)(z+1)(z-alpha c)(z-alpha/c) eta - (z-alpha)(z+alpha)(z-c)(z-1/c) xi`,
/// as real coefficients, lowest degree first.
pub fn saddle_polynomial(k: &AlphaConstants, xi: f64, eta: f64) -> Vec<f64> {
    let (a, c) = (k.alpha, k.c);
    let rp = k.r_plus;
    let sq = from_roots(&[k.r1, k.r1, k.r2, k.r2, k.r3, k.r3]);
    let pi = poly_mul(&sq, &[rp.norm_sqr(), -2.0 * rp.re, 1.0]);
    let l1: Vec<f64> = from_roots(&[1.0, -1.0, a * c, a / c]).iter().map(|v| v * eta).collect();
    let l2: Vec<f64> = from_roots(&[a, -a, c, 1.0 / c]).iter().map(|v| v * xi).collect();
    let l = poly_sub(&l1, &l2);
    poly_sub(&pi, &poly_mul(&l, &l))
}

/// `M` and `M'` from the factored form, which stays accurate where `M` has
/// near-double roots.
pub fn m_eval(k: &AlphaConstants, z: C, xi: f64, eta: f64) -> (C, C) {
    let (a, c) = (k.alpha, k.c);
    let prod = |rs: &[f64]| -> (C, C) {
        rs.iter().fold((cr(1.0), cr(0.0)), |(p, dp), r| (p * (z - r), dp * (z - r) + p))
    };
    let (s, ds) = prod(&[k.r1, k.r2, k.r3]);
    let t = (z - k.r_plus) * (z - k.r_minus);
    let dt = 2.0 * z - 2.0 * k.r_plus.re;
    let (pa, dpa) = prod(&[1.0, -1.0, a * c, a / c]);
    let (pb, dpb) = prod(&[a, -a, c, 1.0 / c]);
    let l = pa * eta - pb * xi;
    let dl = dpa * eta - dpb * xi;
    (s * s * t - l * l, 2.0 * s * ds * t + s * s * dt - 2.0 * l * dl)
}

/// Constants of alpha needed to evaluate `M`, at `prec` bits.
struct MpConstants {
    one: Real,
    a: Real,
    c: Real,
    ci: Real,
    ac: Real,
    a_c: Real,
    r: [Real; 3],
    /// `2 Re r+ = c (1 + alpha)`
    twice_re: Real,
}

impl MpConstants {
    fn new(alpha: f64, prec: usize) -> Self {
        let one = Real::one(prec);
        let a = Real::from_f64(alpha, prec);
        let sa = a.sqrt();
        let c = (&a / &(&(&one - &a) + &(&a * &a))).sqrt();
        let ci = &one / &c;
        let ac = &a * &c;
        let a_c = &a / &c;
        let r2 = &(&sa * &(&ac + &sa)) / &(&c + &sa);
        let r3 = &(&sa * &(&c + &sa)) / &(&ac + &sa);
        let twice_re = &c * &(&one + &a);
        MpConstants { r: [-&sa, r2, r3], one, a, c, ci, ac, a_c, twice_re }
    }
}

fn poly_mul_mp(a: &[Real], b: &[Real]) -> Vec<Real> {
    let p = a[0].prec();
    let mut out = vec![Real::zero(p); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    out
}

fn from_roots_mp(rs: &[&Real], one: &Real) -> Vec<Real> {
    rs.iter().fold(vec![one.clone()], |p, r| poly_mul_mp(&p, &[-*r, one.clone()]))
}

/// `M` at `0, alpha c, alpha/c, c, 1/c, r1, r2, r3` in `prec`-bit arithmetic,
/// with the special points themselves computed at that precision. In double
/// precision the factored form loses digits as alpha approaches 1, where all
/// of these points crowd together.
pub fn m_special_values_mp(alpha: f64, xi: f64, eta: f64, prec: usize) -> [f64; 8] {
    let k = MpConstants::new(alpha, prec);
    let (one, a, c) = (&k.one, &k.a, &k.c);
    let [r1, r2, r3] = &k.r;
    let (x, y) = (Real::from_f64(xi, prec), Real::from_f64(eta, prec));
    let pts = [Real::zero(prec), k.ac.clone(), k.a_c.clone(), c.clone(), k.ci.clone(), r1.clone(), r2.clone(), r3.clone()];
    let mut out = [0.0; 8];
    for (o, z) in out.iter_mut().zip(&pts) {
        let prod = |rs: &[&Real]| rs.iter().fold(one.clone(), |acc, q| &acc * &(z - *q));
        let s = prod(&[r1, r2, r3]);
        let t = &(&(z * z) - &(&k.twice_re * z)) + a;
        let pa = prod(&[one, &-one, &k.ac, &k.a_c]);
        let pb = prod(&[a, &-a, c, &k.ci]);
        let l = &(&pa * &y) - &(&pb * &x);
        *o = (&(&(&s * &s) * &t) - &(&l * &l)).to_f64();
    }
    out
}

/// Coefficients of `M`, lowest degree first, in `prec`-bit arithmetic.
fn saddle_polynomial_mp(alpha: f64, xi: f64, eta: f64, prec: usize) -> Vec<Real> {
    let k = MpConstants::new(alpha, prec);
    let one = &k.one;
    let [r1, r2, r3] = &k.r;
    let sq = from_roots_mp(&[r1, r1, r2, r2, r3, r3], one);
    let pi = poly_mul_mp(&sq, &[k.a.clone(), -&k.twice_re, one.clone()]);
    let (x, y) = (Real::from_f64(xi, prec), Real::from_f64(eta, prec));
    let pa = from_roots_mp(&[one, &-one, &k.ac, &k.a_c], one);
    let pb = from_roots_mp(&[&k.a, &-&k.a, &k.c, &k.ci], one);
    let l: Vec<Real> = pa.iter().zip(&pb).map(|(u, v)| &(u * &y) - &(v * &x)).collect();
    let ll = poly_mul_mp(&l, &l);
    pi.iter().zip(&ll).map(|(u, v)| u - v).collect()
}

/// Roots of `M` refined from double-precision starting values by Aberth
/// steps at `prec` bits.
fn saddle_roots_mp(k: &AlphaConstants, xi: f64, eta: f64, prec: usize) -> Vec<C> {
    let coef = saddle_polynomial_mp(k.alpha, xi, eta, prec);
    let mut z: Vec<Complex> = real_poly_roots(&saddle_polynomial(k, xi, eta))
        .into_iter()
        .map(|r| Complex::from_c64(r, prec))
        .collect();
    if z.len() + 1 != coef.len() {
        return z.iter().map(Complex::to_c64).collect();
    }
    let one = Complex::one(prec);
    let tol = 2f64.powi(8 - prec as i32);
    for _ in 0..400 {
        let mut step: f64 = 0.0;
        for i in 0..z.len() {
            let mut p = Complex::zero(prec);
            let mut dp = Complex::zero(prec);
            for cf in coef.iter().rev() {
                dp = &(&dp * &z[i]) + &p;
                p = (&p * &z[i]).add_real(cf);
            }
            if p.re.is_zero() && p.im.is_zero() {
                continue;
            }
            let ratio = &p / &dp;
            let mut s = Complex::zero(prec);
            for j in 0..z.len() {
                if j != i {
                    s = &s + &(&z[i] - &z[j]).recip();
                }
            }
            let w = &ratio / &(&one - &(&ratio * &s));
            step = step.max(w.l1().to_f64() / (1.0 + z[i].l1().to_f64()));
            z[i] = &z[i] - &w;
        }
        if step < tol {
            break;
        }
    }
    z.iter().map(Complex::to_c64).collect()
}

/// Newton refinement on the factored `M`; a numerically split double real
/// root is pulled back onto the axis.
fn polish(k: &AlphaConstants, mut z: C, xi: f64, eta: f64) -> C {
    for _ in 0..200 {
        let (m, dm) = m_eval(k, z, xi, eta);
        let step = m / dm;
        if !step.is_finite() {
            break;
        }
        z -= step;
        if step.norm() <= 1e-17 * z.norm().max(1e-3) {
            break;
        }
    }
    z
}

/// The upper-half-plane saddle and its companion value `w = f(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleData {
    pub xi: f64,
    pub eta: f64,
    pub s: C,
    pub w: C,
    pub inside_liquid: bool,
    /// `|s - 1/c| - R1`.
    pub circle_class: f64,
}

/// Solves for the saddle in the upper half-plane. `Ok(None)` means the
/// point is outside the liquid region.
pub fn find_saddle(k: &AlphaConstants, xi: f64, eta: f64) -> Result<Option<SaddleData>> {
    if !in_open_hexagon(xi, eta) {
        return Err(domain!("({xi}, {eta}) is not in the open hexagon"));
    }
    let roots = real_poly_roots(&saddle_polynomial(k, xi, eta));
    let mut up: Vec<C> = roots
        .into_iter()
        .filter(|z| z.im > IM_TOL)
        .map(|z| polish(k, z, xi, eta))
        .filter(|z| z.im > IM_TOL)
        .collect();
    up.sort_by(|a, b| b.im.total_cmp(&a.im));
    let Some(&s) = up.first() else { return Ok(None) };
    // a nearly double real root splits by about sqrt(eps); only a second
    // root well off the axis is a genuine failure
    if up.get(1).is_some_and(|z| z.im > SPLIT_TOL) {
        return Err(Error::Numerical(alloc::format!(
            "two saddles in the upper half-plane at ({xi}, {eta})"
        )));
    }
    Ok(Some(SaddleData {
        xi,
        eta,
        s,
        w: k.lhs(s, xi, eta),
        inside_liquid: true,
        circle_class: (s - 1.0 / k.c).norm() - k.radius1,
    }))
}

/// Explicit inverse `(s, w) -> (xi, eta)` of the saddle map.
pub fn inverse_map(k: &AlphaConstants, s: C, w: C) -> Result<(f64, f64)> {
    let (a, c) = (k.alpha, k.c);
    for p in [1.0, -1.0, a * c, a / c] {
        if (s - p).norm() < 1e-14 {
            return Err(domain!("inverse map is singular at s = {p}"));
        }
    }
    let f = -(s - a) * (s + a) * (s - c) * (s - 1.0 / c) / ((s - a * c) * (s - a / c) * (s - 1.0) * (s + 1.0));
    let g = 2.0 * s * (s - c) * (s - 1.0 / c) * w / ((s - 1.0) * (s + 1.0));
    if f.im.abs() < 1e-300 {
        return Err(Error::Numerical("inverse map matrix is singular".into()));
    }
    let xi = g.im / f.im;
    Ok((xi, g.re - f.re * xi))
}

/// Limiting densities at saddle `s` (upper half-plane).
pub fn density_from_saddle(k: &AlphaConstants, s: C) -> DensityTriple {
    let (a, c) = (k.alpha, k.c);
    let s0 = s.arg();
    let sac = (s - a * c).arg();
    let sa = (s - a / c).arg();
    let sc = (s - c).arg();
    let sci = (s - 1.0 / c).arg();
    let m = |v: [[f64; 2]; 2]| v.map(|r| r.map(|e| e / PI));
    DensityTriple {
        p: [
            m([[sac - s0, sa], [sac, sa - s0]]),
            m([[sci - sac, sci - sa], [sc - sac, sc - sa]]),
            m([[PI - sci + s0, PI - sci], [PI - sc, PI - sc + s0]]),
        ],
    }
}

pub fn density_matrices(k: &AlphaConstants, xi: f64, eta: f64) -> Result<DensityTriple> {
    match find_saddle(k, xi, eta)? {
        Some(d) => Ok(density_from_saddle(k, d.s)),
        None => Err(Error::OutsideLiquid),
    }
}

/// Where a boundary point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Regular,
    /// `s` at one of `r1, r2, r3`.
    Cusp,
    /// `s` tends to a pole of `Q` or to infinity.
    Tangency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    /// Real parameter; infinite at the tangency point reached as `s -> inf`.
    pub s: f64,
    /// Sign of the real square root of `Q` used.
    pub branch: i8,
    pub xi: f64,
    pub eta: f64,
    pub kind: BoundaryKind,
    /// Index `j` of the frozen region `F_j` bordering this point, for
    /// regular points.
    pub family: Option<u8>,
}

/// Solves the envelope system `f = w`, `f' = w'` at real `s`.
pub fn envelope_point(k: &AlphaConstants, s: f64, sigma: f64) -> Option<(f64, f64)> {
    let (a, b) = k.lhs_coeffs(cr(s));
    let (da, db) = k.lhs_coeffs_deriv(cr(s));
    let (w, dw) = k.sqrt_q_real(s, sigma);
    let (a, b, da, db) = (a.re, b.re, da.re, db.re);
    let det = a * db - b * da;
    let scale = (a.abs() + b.abs()) * (da.abs() + db.abs());
    if !(det.abs() > 1e-13 * scale) {
        return None;
    }
    let xi = (w * db - b * dw) / det;
    let eta = (a * dw - w * da) / det;
    (xi.is_finite() && eta.is_finite()).then_some((xi, eta))
}

/// Limit of the envelope point as `s -> p` from above (`side = 1`) or below,
/// by Richardson extrapolation. Infinite `p` uses `s = +-1/h`.
fn envelope_limit(k: &AlphaConstants, p: f64, side: f64, sigma: f64) -> Option<(f64, f64)> {
    let at = |h: f64| {
        let s = if p.is_infinite() { p.signum() / h } else { p + side * h };
        envelope_point(k, s, sigma)
    };
    let h0 = 1e-3;
    let mut t: Vec<(f64, f64)> = Vec::new();
    for i in 0..4 {
        t.push(at(h0 / (1u32 << i) as f64)?);
    }
    // repeated halving, eliminating h, h^2, h^3
    for m in 1..4 {
        let f = (1u32 << m) as f64;
        for i in (m..4).rev() {
            t[i] = ((f * t[i].0 - t[i - 1].0) / (f - 1.0), (f * t[i].1 - t[i - 1].1) / (f - 1.0));
        }
    }
    Some(t[3])
}

/// Frozen region index per open interval of the real line, ordered as
/// `(-inf,0), (0,ac), (ac,a/c), (a/c,c), (c,1/c), (1/c,inf)`.
pub const INTERVAL_FAMILY: [u8; 6] = [5, 1, 4, 2, 6, 3];

fn intervals(k: &AlphaConstants) -> [(f64, f64); 6] {
    let p = k.poles();
    [
        (f64::NEG_INFINITY, p[0]),
        (p[0], p[1]),
        (p[1], p[2]),
        (p[2], p[3]),
        (p[3], p[4]),
        (p[4], f64::INFINITY),
    ]
}

fn interval_point(lo: f64, hi: f64, u: f64) -> f64 {
    if lo.is_infinite() {
        hi - (PI * u / 2.0).tan().recip()
    } else if hi.is_infinite() {
        lo + (PI * u / 2.0).tan()
    } else {
        lo + (hi - lo) * (1.0 - (PI * u).cos()) / 2.0
    }
}

/// Points of the arctic curve traced from the envelope system, ordered as
/// a closed curve: the `+` branch for `s` from `-inf` to `inf`, then the
/// `-` branch (the point reflection of the first). The `+` branch at `+inf`
/// continues into the `-` branch at `-inf`.
pub fn arctic_boundary(k: &AlphaConstants, num_points: usize) -> Result<Vec<BoundaryPoint>> {
    if num_points < 12 {
        return Err(domain!("num_points must be at least 12, got {num_points}"));
    }
    let per = (num_points / 12).max(1);
    let ivs = intervals(k);
    let cusps = [k.r1, k.r2, k.r3];
    let mut out = Vec::new();
    for sigma in [1.0, -1.0] {
        let br = sigma as i8;
        for (i, &(lo, hi)) in ivs.iter().enumerate() {
            // tangency point at the left end; the one at +inf of this
            // branch is the one at -inf of the other
            if let Some((xi, eta)) = envelope_limit(k, lo, 1.0, sigma) {
                out.push(BoundaryPoint { s: lo, branch: br, xi, eta, kind: BoundaryKind::Tangency, family: None });
            }
            let mut pts: Vec<(f64, BoundaryKind)> = (1..=per)
                .map(|m| (interval_point(lo, hi, m as f64 / (per + 1) as f64), BoundaryKind::Regular))
                .collect();
            for &r in &cusps {
                if r > lo && r < hi {
                    pts.push((r, BoundaryKind::Cusp));
                }
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (s, kind) in pts {
                if let Some((xi, eta)) = envelope_point(k, s, sigma) {
                    let family = (kind == BoundaryKind::Regular).then_some(INTERVAL_FAMILY[i]);
                    out.push(BoundaryPoint { s, branch: br, xi, eta, kind, family });
                }
            }
        }
    }
    Ok(out)
}

/// Residuals of one circle law on one line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LineReport {
    pub label: &'static str,
    pub liquid_points: usize,
    pub max_radius_residual: f64,
    pub arc_failures: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CircleReport {
    pub lines: Vec<LineReport>,
    pub sign_checked: usize,
    pub sign_failures: usize,
}

impl CircleReport {
    pub fn max_residual(&self) -> f64 {
        self.lines.iter().fold(0.0, |m, l| m.max(l.max_radius_residual))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
            && self.lines.iter().all(|l| l.arc_failures == 0 && l.liquid_points > 0)
            && self.sign_failures == 0
    }
}

/// Checks that each of the six special lines is mapped onto its circle and
/// arc, and the sign law of `|s - 1/c| - R1` on a `grid x grid` mesh.
pub fn circle_membership_suite(k: &AlphaConstants, num_points: usize, grid: usize) -> Result<CircleReport> {
    let (a, c) = (k.alpha, k.c);
    let ci = 1.0 / c;
    let ang_tol = 1e-7;
    // (label, direction, centre, radius, arc test on the argument about the centre)
    type Arc = fn(&AlphaConstants, f64) -> bool;
    let lines: [(&'static str, (f64, f64), f64, f64, Arc); 6] = [
        ("xi=0", (0.0, 1.0), ci, k.radius1, |k, t| t <= k.theta1 + 1e-7),
        ("eta=xi/2", (1.0, 0.5), ci, k.radius1, |k, t| t >= k.theta1 - 1e-7),
        ("eta=xi", (1.0, 1.0), 0.0, k.radius0, |k, t| t <= k.theta0 + 1e-7),
        ("eta=-xi", (1.0, -1.0), 0.0, k.radius0, |k, t| t >= k.theta0 - 1e-7),
        ("eta=0", (1.0, 0.0), a / c, k.radius_alpha, |k, t| t >= k.theta_alpha - 1e-7),
        ("eta=2xi", (1.0, 2.0), a / c, k.radius_alpha, |k, t| t <= k.theta_alpha + 1e-7),
    ];
    let _ = ang_tol;
    let mut rep = CircleReport::default();
    for (label, (dx, dy), centre, radius, arc) in lines {
        let mut lr = LineReport { label, ..Default::default() };
        for m in 0..num_points {
            let t = -1.0 + 2.0 * (m as f64 + 0.5) / num_points as f64;
            let (xi, eta) = (t * dx, t * dy);
            if !in_open_hexagon(xi, eta) {
                continue;
            }
            let Some(sd) = find_saddle(k, xi, eta)? else { continue };
            lr.liquid_points += 1;
            let z = sd.s - centre;
            lr.max_radius_residual = lr.max_radius_residual.max((z.norm() - radius).abs());
            if !arc(k, z.arg()) {
                lr.arc_failures += 1;
            }
        }
        rep.lines.push(lr);
    }
    for i in 0..grid {
        for j in 0..grid {
            let xi = -1.0 + 2.0 * (i as f64 + 0.5) / grid as f64;
            let eta = -1.0 + 2.0 * (j as f64 + 0.5) / grid as f64;
            if !in_open_hexagon(xi, eta) {
                continue;
            }
            let Some(sd) = find_saddle(k, xi, eta)? else { continue };
            let g = xi * (eta - xi / 2.0);
            if g.abs() < 1e-9 || sd.circle_class.abs() < 1e-12 {
                continue;
            }
            rep.sign_checked += 1;
            if sd.circle_class.signum() != -g.signum() {
                rep.sign_failures += 1;
            }
        }
    }
    Ok(rep)
}

/// The six bracket triples of frozen and semi-frozen regions `F_1..F_6`.
pub fn frozen_limit(family: u8) -> DensityTriple {
    let o = [[1.0, 1.0], [1.0, 1.0]];
    let z = [[0.0, 0.0], [0.0, 0.0]];
    let p = match family {
        1 => [o, z, z],
        2 => [z, o, z],
        3 => [z, z, o],
        4 => [[[0.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 0.0]], z],
        5 => [[[0.0, 1.0], [1.0, 0.0]], z, [[1.0, 0.0], [0.0, 1.0]]],
        6 => [z, [[1.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 1.0]]],
        _ => panic!("frozen family index {family} out of 1..=6"),
    };
    DensityTriple { p }
}

/// Family of the frozen region containing a point outside the liquid
/// region: that of the nearest regular point of a traced boundary. Each
/// frozen region touches the curve along a single arc, so this is exact
/// away from the tangency points once the trace is fine enough.
pub fn frozen_family_near(boundary: &[BoundaryPoint], xi: f64, eta: f64) -> Option<u8> {
    boundary
        .iter()
        .filter(|p| p.family.is_some())
        .min_by(|a, b| {
            let da = (a.xi - xi).powi(2) + (a.eta - eta).powi(2);
            let db = (b.xi - xi).powi(2) + (b.eta - eta).powi(2);
            da.total_cmp(&db)
        })
        .and_then(|p| p.family)
}

/// Limiting densities anywhere in the open hexagon: the saddle formulas in
/// the liquid region, the bracket triple of the surrounding frozen region
/// elsewhere.
pub fn limit_density(k: &AlphaConstants, boundary: &[BoundaryPoint], xi: f64, eta: f64) -> Result<DensityTriple> {
    match find_saddle(k, xi, eta)? {
        Some(d) => Ok(density_from_saddle(k, d.s)),
        None => frozen_family_near(boundary, xi, eta)
            .map(frozen_limit)
            .ok_or_else(|| domain!("boundary trace has no regular points")),
    }
}

/// Unit normal of the arctic curve at parameter `s`, by central differences.
pub fn boundary_normal(k: &AlphaConstants, s: f64, sigma: f64) -> Option<(f64, f64)> {
    let h = 1e-6 * s.abs().max(1e-2);
    let (x1, y1) = envelope_point(k, s + h, sigma)?;
    let (x0, y0) = envelope_point(k, s - h, sigma)?;
    let (tx, ty) = (x1 - x0, y1 - y0);
    let n = (tx * tx + ty * ty).sqrt();
    (n > 0.0).then_some((-ty / n, tx / n))
}

/// Liquid point at distance `dist` from the boundary point with parameter
/// `s`, or `None` if neither side of the normal is liquid.
pub fn probe_inside(k: &AlphaConstants, s: f64, sigma: f64, dist: f64) -> Result<Option<(f64, f64, SaddleData)>> {
    let Some((xi, eta)) = envelope_point(k, s, sigma) else { return Ok(None) };
    let Some((nx, ny)) = boundary_normal(k, s, sigma) else { return Ok(None) };
    for sgn in [1.0, -1.0] {
        let (px, py) = (xi + sgn * dist * nx, eta + sgn * dist * ny);
        if !in_open_hexagon(px, py) {
            continue;
        }
        if let Some(sd) = find_saddle(k, px, py)? {
            return Ok(Some((px, py, sd)));
        }
    }
    Ok(None)
}

/// Coalescence measure of the roots of `M` at a boundary point: the
/// distance from `s` to the second nearest root, relative to `1 + |s|`.
/// Zero exactly when `M` has a double root at `s`. Roots are refined at
/// 160 bits, since a triple root at a cusp is resolved only to about
/// `eps^(1/3)` in double precision.
pub fn discriminant_proxy(k: &AlphaConstants, s: f64, xi: f64, eta: f64) -> f64 {
    let mut d: Vec<f64> = saddle_roots_mp(k, xi, eta, 160)
        .iter()
        .map(|z| (z - s).norm())
        .collect();
    d.sort_by(f64::total_cmp);
    d.get(1).copied().unwrap_or(f64::INFINITY) / (1.0 + s.abs())
}

/// Tolerance for [`discriminant_proxy`]. Rounding `(xi, eta)` to double
/// splits a triple root by about `eps^(1/3)`.
pub const PROXY_TOL: f64 = 1e-4;

/// Whether exactly one of the two points at distance `eps` along the
/// normal at boundary parameter `s` is liquid. `eps` shrinks near the
/// cusps, where the curve turns back within the probe distance, and where
/// a third root of `M` close to `s` signals another piece of the boundary
/// nearby (distance in the plane scales like the root gap squared).
pub fn probe_flips(k: &AlphaConstants, s: f64, sigma: f64, eps: f64) -> Result<Option<bool>> {
    let Some((xi, eta)) = envelope_point(k, s, sigma) else { return Ok(None) };
    let Some((nx, ny)) = boundary_normal(k, s, sigma) else { return Ok(None) };
    let mut near: f64 = 1.0;
    for r in [k.r1, k.r2, k.r3] {
        for sg in [1.0, -1.0] {
            if let Some((cx, cy)) = envelope_point(k, r, sg) {
                near = near.min(((cx - xi).powi(2) + (cy - eta).powi(2)).sqrt());
            }
        }
    }
    let mut d: Vec<f64> = real_poly_roots(&saddle_polynomial(k, xi, eta))
        .iter()
        .map(|z| (z - s).norm())
        .collect();
    d.sort_by(f64::total_cmp);
    let gap = d.get(2).copied().unwrap_or(1.0) / (1.0 + s.abs());
    let eps = eps.min(0.1 * near).min(0.1 * gap * gap);
    let liquid = |t: f64| -> Result<bool> {
        let (x, y) = (xi + t * nx, eta + t * ny);
        if !in_open_hexagon(x, y) {
            return Ok(false);
        }
        Ok(find_saddle(k, x, y)?.is_some())
    };
    Ok(Some(liquid(eps)? != liquid(-eps)?))
}

/// Largest entrywise deviation from the bracket triple of `F_family`, at
/// the liquid point a distance `dist` from the boundary point with
/// parameter `s` (branch `sigma`).
pub fn frozen_deviation_at(k: &AlphaConstants, family: u8, s: f64, sigma: f64, dist: f64) -> Result<f64> {
    let (_, _, sd) = probe_inside(k, s, sigma, dist)?
        .ok_or_else(|| Error::Numerical(alloc::format!("no liquid side at s = {s}")))?;
    Ok(density_from_saddle(k, sd.s).max_abs_diff(&frozen_limit(family)))
}

/// [`frozen_deviation_at`] with `s` in the middle of the interval of
/// `F_family`.
pub fn frozen_deviation(k: &AlphaConstants, family: u8, dist: f64) -> Result<f64> {
    let i = INTERVAL_FAMILY
        .iter()
        .position(|&f| f == family)
        .ok_or_else(|| domain!("frozen family index {family} out of 1..=6"))?;
    let (lo, hi) = intervals(k)[i];
    let s = interval_point(lo, hi, 0.5);
    frozen_deviation_at(k, family, s, 1.0, dist)
}
