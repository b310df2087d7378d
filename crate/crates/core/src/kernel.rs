//! Finite-N correlation kernel from scalar non-Hermitian orthogonal
//! polynomials, evaluated by trapezoid quadrature on circles around `1/c`.
//!
//! `N` is half the hexagon size. Every integrand here is a product of
//! integer powers of the five factors `z, z - c, z - 1/c, z - alpha c,
//! z - alpha/c` times a polynomial, so the double contour integrals split
//! into sums `sum_ab C_ab A_a B_b` over single integrals, where `C` holds
//! the coefficients of the reproducing kernel.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::domain;
use crate::model::{Alpha, DensityTriple};
use crate::mp::{roots_of_unity, solve, Complex, Real};
use crate::{Error, Result};

/// Exponents of `[z, z - c, z - 1/c, z - alpha c, z - alpha/c]`.
type Exps = [i64; 5];

#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    /// Half the hexagon size.
    pub n_half: usize,
    pub alpha: Alpha,
    /// Quadrature nodes per circle, a power of two.
    pub nodes: usize,
    pub precision_bits: usize,
    /// Contour radius relative to the default `(R1 + 1/c - c) / 2`.
    pub radius_scale: f64,
}

impl KernelConfig {
    pub fn new(n_half: usize, alpha: Alpha) -> Self {
        KernelConfig {
            n_half,
            alpha,
            nodes: 1024,
            precision_bits: 256,
            radius_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_half == 0 {
            return Err(domain!("N must be at least 1"));
        }
        if self.nodes < 64 || !self.nodes.is_power_of_two() {
            return Err(domain!("nodes must be a power of two >= 64, got {}", self.nodes));
        }
        if self.precision_bits < 128 {
            return Err(domain!("precision must be at least 128 bits, got {}", self.precision_bits));
        }
        let a = self.alpha.value();
        if !(a > 0.0 && a < 1.0) {
            return Err(domain!("alpha must lie in (0, 1), got {a}"));
        }
        Ok(())
    }
}

/// Monic `p_{2N}` and `q_{2N-1}`, coefficients lowest degree first.
#[derive(Debug, Clone)]
pub struct ScalarOPs {
    pub p: Vec<Complex>,
    pub q: Vec<Complex>,
    /// `max_k |int p W z^k| / max_k |m_{2N+k}|`, `k < 2N`.
    pub p_residual: f64,
    /// Same for `q`, with the last condition `int q W z^{2N-1} = -1`.
    pub q_residual: f64,
}

/// Quadrature node with the factor values and their inverses.
#[derive(Debug, Clone)]
struct Node {
    z: Complex,
    /// `z e^{i theta} rho / M`: weight for `(1/2 pi i) int f dz`.
    wt: Complex,
    f: [Complex; 5],
    finv: [Complex; 5],
    pows: Vec<Complex>,
}

/// Two circles of equal radius about `1/c`; the `zeta` grid is offset by
/// half a step from the `omega` grid.
#[derive(Debug, Clone)]
pub struct ContourGrid {
    pub center: f64,
    pub radius: f64,
    omega: Vec<Node>,
    zeta: Vec<Node>,
}

impl ContourGrid {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega_nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.omega.iter().map(|n| n.z.to_c64())
    }
}

#[derive(Debug, Clone)]
struct Consts {
    a: Real,
    c: Real,
    one_minus_a: Real,
    /// `[0, c, 1/c, alpha c, alpha/c]`.
    shifts: [Real; 5],
}

impl Consts {
    fn monomial(&self, k: [i64; 3]) -> Real {
        let pw = |r: &Real, e: i64| if e >= 0 { r.powi(e as usize) } else { r.recip().powi((-e) as usize) };
        &(&pw(&self.a, k[0]) * &pw(&self.c, k[1])) * &pw(&self.one_minus_a, k[2])
    }
}

/// `alpha^k0 c^k1 (1 - alpha)^k2 * fw(omega) * fz(zeta)`.
#[derive(Debug, Clone, Copy)]
struct Term {
    k: [i64; 3],
    w: Exps,
    z: Exps,
}

const fn t(k: [i64; 3], w: Exps, z: Exps) -> Term {
    Term { k, w, z }
}

const Z0: Exps = [0, -1, 0, 0, 0];
const Z1: Exps = [0, -1, -1, 0, 0];
const Z2: Exps = [-1, -1, 0, 1, 0];
const Z3: Exps = [0, -1, -1, 1, 0];
const E: Exps = [0; 5];
const K1: [i64; 3] = [0; 3];

/// Kernel block integrands for even and odd columns.
const HK: [[[Term; 2]; 2]; 2] = [
    [
        [t(K1, E, Z0), t([-1, 1, 1], E, Z1)],
        [t([1, -2, -1], [-1, 1, 0, 0, 0], Z0), t([0, -1, 0], [-1, 1, 0, 0, 0], Z1)],
    ],
    [
        [t([0, 1, 0], [0, 0, 0, -1, 0], Z2), t([0, 1, 1], [0, 0, 0, -1, 0], Z3)],
        [t([0, 0, -1], [0, 1, 0, -1, 0], Z2), t(K1, [0, 1, 0, -1, 0], Z3)],
    ],
];

/// Integrands of the three lozenge probability matrices; the third gives
/// `ones - P3`.
const HP: [[[Term; 2]; 2]; 3] = [
    [
        [t([1, 1, 0], [-1, 1, 1, -1, 0], Z1), t(K1, [0, 1, 1, -1, -1], Z3)],
        [t(K1, [0, 1, 0, -1, 0], Z0), t([1, -1, 0], [0, 1, 0, -1, -1], Z2)],
    ],
    [
        [t([-1, 1, 1], [0, 1, 0, -1, 0], Z1), t([0, -1, 1], [0, 1, 0, -1, -1], Z3)],
        [t([0, 1, 1], [0, 0, 0, -1, 0], Z0), t([1, 1, 1], [1, 0, 0, -1, -1], Z2)],
    ],
    [
        [t([0, -1, 0], [-1, 1, 0, 0, 0], Z1), t(K1, [0, 1, 0, -1, 0], Z3)],
        [t(K1, E, Z0), t([0, 1, 0], [0, 0, 0, -1, 0], Z2)],
    ],
];

/// A 2x2 block of the kernel on the diagonal of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBlock {
    /// `m[i][j] = K(2x+eps, 2y+j; 2x+eps, 2y+i)`.
    pub m: [[Complex64; 2]; 2],
}

impl KernelBlock {
    pub fn max_imag(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |a, z| a.max(z.im.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDensity {
    pub triple: DensityTriple,
    /// Largest imaginary part discarded.
    pub max_imag: f64,
}

/// Moments, orthogonal polynomials and reproducing kernel for one
/// configuration.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub cfg: KernelConfig,
    consts: Consts,
    grid: ContourGrid,
    moments: Vec<Complex>,
    ops: ScalarOPs,
    /// `R(omega, zeta) = sum_ab coeff[a][b] omega^a zeta^b`.
    coeff: Vec<Vec<Complex>>,
}

fn pow_signed(f: &Complex, finv: &Complex, e: i64) -> Complex {
    if e >= 0 {
        f.powi(e as usize)
    } else {
        finv.powi((-e) as usize)
    }
}

fn product(node: &Node, e: &Exps) -> Complex {
    let mut acc = Complex::one(node.z.prec());
    for i in 0..5 {
        if e[i] != 0 {
            acc = &acc * &pow_signed(&node.f[i], &node.finv[i], e[i]);
        }
    }
    acc
}

fn real_of(alpha: Alpha, p: usize) -> Real {
    match alpha {
        Alpha::Rational { num, den } => Real::ratio(num, den, p),
        Alpha::Float(a) => Real::from_f64(a, p),
    }
}

/// Maximum modulus of a vector, as f64.
fn max_abs(v: &[Complex]) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.to_c64().norm()))
}

impl Kernel {
    pub fn new(cfg: KernelConfig) -> Result<Self> {
        cfg.validate()?;
        let p = cfg.precision_bits;
        let n2 = 2 * cfg.n_half;
        let a = real_of(cfg.alpha, p);
        let one = Real::one(p);
        let one_minus_a = &one - &a;
        let c = (&a / &(&one_minus_a + &(&a * &a))).sqrt();
        let ci = c.recip();
        let shifts = [Real::zero(p), c.clone(), ci.clone(), &a * &c, &a * &ci];
        let consts = Consts { a: a.clone(), c: c.clone(), one_minus_a: one_minus_a.clone(), shifts };

        let r1 = &one_minus_a / &a.sqrt();
        let rho = &(&(&r1 + &ci) - &c) * &Real::from_f64(0.5 * cfg.radius_scale, p);
        let (cf, rf) = (ci.to_f64(), rho.to_f64());
        if !(rf > cf - c.to_f64() && rf < cf) {
            return Err(domain!("contour radius {rf} must enclose c and 1/c and exclude 0"));
        }
        let m = cfg.nodes.trailing_zeros();
        let units = roots_of_unity(m, p);
        let inv_m = Real::ratio(1, cfg.nodes as u64, p);
        let make = |u: &Complex| -> Node {
            let ru = u.scale(&rho);
            let z = ru.add_real(&ci);
            let wt = ru.scale(&inv_m);
            let f: [Complex; 5] = core::array::from_fn(|i| z.sub_real(&consts.shifts[i]));
            let finv: [Complex; 5] = core::array::from_fn(|i| f[i].recip());
            let mut pows = Vec::with_capacity(n2);
            let mut pw = Complex::one(p);
            for _ in 0..n2 {
                pows.push(pw.clone());
                pw = &pw * &z;
            }
            Node { z, wt, f, finv, pows }
        };
        let omega: Vec<Node> = units.iter().step_by(2).map(make).collect();
        let zeta: Vec<Node> = units.iter().skip(1).step_by(2).map(make).collect();
        let grid = ContourGrid { center: cf, radius: rf, omega, zeta };

        let nn = n2 as i64;
        let w_exps: Exps = [-nn, -nn, -nn, nn, nn];
        let mut moments = vec![Complex::zero(p); 2 * n2];
        for node in &grid.omega {
            let mut g = &node.wt * &product(node, &w_exps);
            for mk in moments.iter_mut() {
                *mk = &*mk + &g;
                g = &g * &node.z;
            }
        }

        let ops = solve_ops(&moments, n2)?;
        let coeff = kernel_coefficients(&ops, n2, p);
        Ok(Kernel { cfg, consts, grid, moments, ops, coeff })
    }

    pub fn grid(&self) -> &ContourGrid {
        &self.grid
    }

    /// `m_k = (1/2 pi i) int z^k W(z) dz`, `k < 4N`.
    pub fn moments(&self) -> &[Complex] {
        &self.moments
    }

    pub fn ops(&self) -> &ScalarOPs {
        &self.ops
    }

    /// `W(z) = ((z - alpha c)(z - alpha/c) / (z (z - c)(z - 1/c)))^{2N}`.
    pub fn weight_w(&self, z: Complex64) -> Result<Complex> {
        let p = self.cfg.precision_bits;
        let zz = Complex::from_c64(z, p);
        let f: [Complex; 5] = core::array::from_fn(|i| zz.sub_real(&self.consts.shifts[i]));
        for v in &f[..3] {
            if v.to_c64().norm() < 1e-12 {
                return Err(domain!("W evaluated at a pole"));
            }
        }
        let base = &(&f[3] * &f[4]) / &(&(&f[0] * &f[1]) * &f[2]);
        Ok(base.powi(2 * self.cfg.n_half))
    }

    /// `(p(w) q(z) - p(z) q(w)) / (z - w)` from its coefficient matrix, so
    /// no cancellation at `w = z`.
    pub fn reproducing_kernel(&self, w: &Complex, z: &Complex) -> Complex {
        let n2 = 2 * self.cfg.n_half;
        let wp = powers(w, n2);
        let zp = powers(z, n2);
        let mut acc = Complex::zero(self.cfg.precision_bits);
        for (a, row) in self.coeff.iter().enumerate() {
            let mut r = Complex::zero(self.cfg.precision_bits);
            for (b, cab) in row.iter().enumerate() {
                r = &r + &(cab * &zp[b]);
            }
            acc = &acc + &(&r * &wp[a]);
        }
        acc
    }

    /// `|(1/2 pi i) int w^k W(w) R(w, z) dw - z^k|`.
    pub fn reproducing_error(&self, k: usize, z: Complex64) -> f64 {
        let p = self.cfg.precision_bits;
        let n2 = 2 * self.cfg.n_half;
        let zz = Complex::from_c64(z, p);
        let zp = powers(&zz, n2);
        let mut acc = Complex::zero(p);
        for (a, row) in self.coeff.iter().enumerate() {
            let mut r = Complex::zero(p);
            for (b, cab) in row.iter().enumerate() {
                r = &r + &(cab * &zp[b]);
            }
            acc = &acc + &(&r * &self.moments[k + a]);
        }
        (acc - zz.powi(k)).to_c64().norm()
    }

    /// `sum_ab C_ab A_a B_b` for each term, `A` over the omega circle and `B`
    /// over the zeta circle, at block `(x, y)`.
    fn integrate(&self, x: i64, y: i64, terms: &[Term]) -> Vec<Complex64> {
        let nn = self.cfg.n_half as i64;
        let n2 = 2 * self.cfg.n_half;
        let p = self.cfg.precision_bits;
        let base_w: Exps = [x - y - nn, y - 2 * nn, y - 2 * nn, 2 * nn - x, 2 * nn - x];
        let base_z: Exps = [-nn + y - x, -y, -y, x, x];
        let mut ws: Vec<Exps> = Vec::new();
        let mut zs: Vec<Exps> = Vec::new();
        for tm in terms {
            if !ws.contains(&tm.w) {
                ws.push(tm.w);
            }
            if !zs.contains(&tm.z) {
                zs.push(tm.z);
            }
        }
        let vectors = |nodes: &[Node], base: &Exps, list: &[Exps]| -> Vec<Vec<Complex>> {
            let mut out = vec![vec![Complex::zero(p); n2]; list.len()];
            for node in nodes {
                let g0 = &node.wt * &product(node, base);
                for (e, acc) in list.iter().zip(out.iter_mut()) {
                    let g = &g0 * &product(node, e);
                    for (va, pa) in acc.iter_mut().zip(&node.pows) {
                        *va = &*va + &(&g * pa);
                    }
                }
            }
            out
        };
        let av = vectors(&self.grid.omega, &base_w, &ws);
        let bv = vectors(&self.grid.zeta, &base_z, &zs);
        // C B for each zeta vector
        let cb: Vec<Vec<Complex>> = bv
            .iter()
            .map(|b| {
                self.coeff
                    .iter()
                    .map(|row| row.iter().zip(b).fold(Complex::zero(p), |acc, (c, v)| &acc + &(c * v)))
                    .collect()
            })
            .collect();
        terms
            .iter()
            .map(|tm| {
                let ia = ws.iter().position(|e| *e == tm.w).unwrap();
                let ib = zs.iter().position(|e| *e == tm.z).unwrap();
                let s = av[ia].iter().zip(&cb[ib]).fold(Complex::zero(p), |acc, (a, b)| &acc + &(a * b));
                s.scale(&self.consts.monomial(tm.k)).to_c64()
            })
            .collect()
    }

    /// `[K(2x+eps, 2y+j; 2x+eps, 2y+i)]_{i,j}`; the diagonal holds the
    /// occupation probabilities at heights `2y` and `2y+1` of column `2x+eps`.
    pub fn kernel_block(&self, x: usize, y: i64, eps: u8) -> Result<KernelBlock> {
        let n2 = 2 * self.cfg.n_half;
        if x == 0 || x >= n2 {
            return Err(domain!("x must lie in 1..{}, got {x}", n2 - 1));
        }
        if eps > 1 {
            return Err(domain!("eps must be 0 or 1, got {eps}"));
        }
        let terms: Vec<Term> = HK[eps as usize].iter().flatten().copied().collect();
        let v = self.integrate(x as i64, y, &terms);
        Ok(KernelBlock { m: [[v[0], v[1]], [v[2], v[3]]] })
    }

    /// Lozenge probability matrices of block `(x, y)`.
    pub fn finite_density_matrices(&self, x: usize, y: usize) -> Result<FiniteDensity> {
        let n2 = 2 * self.cfg.n_half;
        if x == 0 || x >= n2 {
            return Err(domain!("x must lie in 1..{}, got {x}", n2 - 1));
        }
        if y >= n2 {
            return Err(domain!("y must lie in 0..{}, got {y}", n2 - 1));
        }
        let terms: Vec<Term> = HP.iter().flatten().flatten().copied().collect();
        let v = self.integrate(x as i64, y as i64, &terms);
        let mut d = DensityTriple::default();
        let mut im: f64 = 0.0;
        for k in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    let z = v[4 * k + 2 * i + j];
                    im = im.max(z.im.abs());
                    d.p[k][i][j] = if k == 2 { 1.0 - z.re } else { z.re };
                }
            }
        }
        Ok(FiniteDensity { triple: d, max_imag: im })
    }
}

/// Density matrices with nodes and precision doubled until two successive
/// results agree to `tol`; returns the result and the configuration used.
pub fn refined_density(
    cfg: &KernelConfig,
    x: usize,
    y: usize,
    tol: f64,
    max_doublings: u32,
) -> Result<(FiniteDensity, KernelConfig)> {
    let mut cur = cfg.clone();
    let mut prev = Kernel::new(cur.clone())?.finite_density_matrices(x, y)?;
    for _ in 0..max_doublings {
        let mut next = cur.clone();
        next.nodes *= 2;
        next.precision_bits *= 2;
        let d = Kernel::new(next.clone())?.finite_density_matrices(x, y)?;
        if d.triple.max_abs_diff(&prev.triple) < tol {
            return Ok((d, next));
        }
        prev = d;
        cur = next;
    }
    Err(Error::Numerical(alloc::format!(
        "quadrature did not settle to {tol} after {max_doublings} doublings"
    )))
}

fn powers(z: &Complex, n: usize) -> Vec<Complex> {
    let mut out = Vec::with_capacity(n);
    let mut pw = Complex::one(z.prec());
    for _ in 0..n {
        out.push(pw.clone());
        pw = &pw * z;
    }
    out
}

/// Hankel solves for `p_{2N}` and `q_{2N-1}` from the moments.
pub fn solve_ops(moments: &[Complex], n2: usize) -> Result<ScalarOPs> {
    if moments.len() < 2 * n2 {
        return Err(domain!("need {} moments, got {}", 2 * n2, moments.len()));
    }
    let p = moments[0].prec();
    let hankel = || -> Vec<Vec<Complex>> { (0..n2).map(|k| (0..n2).map(|j| moments[j + k].clone()).collect()).collect() };
    let rhs_p: Vec<Complex> = (0..n2).map(|k| -&moments[n2 + k]).collect();
    let mut rhs_q = vec![Complex::zero(p); n2];
    rhs_q[n2 - 1] = Complex::from_real(Real::from_i64(-1, p));
    let fail = || Error::Numerical("orthogonal polynomial system is singular at this precision".into());
    let mut pc = solve(hankel(), rhs_p).ok_or_else(fail)?;
    pc.push(Complex::one(p));
    let qc = solve(hankel(), rhs_q).ok_or_else(fail)?;
    let scale = max_abs(&moments[n2..2 * n2]).max(f64::MIN_POSITIVE);
    let mut pr: f64 = 0.0;
    let mut qr: f64 = 0.0;
    for k in 0..n2 {
        let sp = pc.iter().enumerate().fold(Complex::zero(p), |acc, (j, a)| &acc + &(a * &moments[j + k]));
        pr = pr.max(sp.to_c64().norm());
        let mut sq = qc.iter().enumerate().fold(Complex::zero(p), |acc, (j, a)| &acc + &(a * &moments[j + k]));
        if k == n2 - 1 {
            sq = sq.add_real(&Real::one(p));
        }
        qr = qr.max(sq.to_c64().norm());
    }
    Ok(ScalarOPs { p: pc, q: qc, p_residual: pr / scale, q_residual: qr })
}

/// Coefficients of `(p(w) q(z) - p(z) q(w)) / (z - w)`.
fn kernel_coefficients(ops: &ScalarOPs, n2: usize, prec: usize) -> Vec<Vec<Complex>> {
    let mut c = vec![vec![Complex::zero(prec); n2]; n2];
    for (i, pi) in ops.p.iter().enumerate() {
        for (j, qj) in ops.q.iter().enumerate() {
            let v = pi * qj;
            // (w^i z^j - w^j z^i) / (z - w) = sum_k w^{j-1-k} z^{i+k} for i < j
            if i < j {
                for k in 0..j - i {
                    c[j - 1 - k][i + k] = &c[j - 1 - k][i + k] + &v;
                }
            } else if i > j {
                for k in 0..i - j {
                    c[i - 1 - k][j + k] = &c[i - 1 - k][j + k] - &v;
                }
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, a: Alpha) -> Kernel {
        let mut cfg = KernelConfig::new(n, a);
        cfg.nodes = 256;
        cfg.precision_bits = 192;
        Kernel::new(cfg).unwrap()
    }

    #[test]
    fn config_guards() {
        let mut cfg = KernelConfig::new(1, Alpha::Rational { num: 1, den: 2 });
        cfg.nodes = 100;
        assert!(Kernel::new(cfg.clone()).is_err());
        cfg.nodes = 64;
        cfg.precision_bits = 64;
        assert!(Kernel::new(cfg).is_err());
        assert!(Kernel::new(KernelConfig::new(1, Alpha::Rational { num: 1, den: 1 })).is_err());
    }

    #[test]
    fn coefficient_form_matches_quotient() {
        let k = small(2, Alpha::Rational { num: 1, den: 2 });
        let p = k.cfg.precision_bits;
        let w = Complex::from_c64(Complex64::new(0.3, 0.4), p);
        let z = Complex::from_c64(Complex64::new(-0.7, 1.1), p);
        let ev = |c: &[Complex], x: &Complex| c.iter().rev().fold(Complex::zero(p), |acc, a| &(&acc * x) + a);
        let direct = &(&(&ev(&k.ops.p, &w) * &ev(&k.ops.q, &z)) - &(&ev(&k.ops.p, &z) * &ev(&k.ops.q, &w))) / &(&z - &w);
        let r = k.reproducing_kernel(&w, &z);
        assert!((direct.to_c64() - r.to_c64()).norm() < 1e-30 * r.to_c64().norm().max(1.0));
        let r2 = k.reproducing_kernel(&z, &w);
        assert!((r.to_c64() - r2.to_c64()).norm() < 1e-30 * r.to_c64().norm().max(1.0));
    }

    #[test]
    fn residuals_are_small() {
        let k = small(2, Alpha::Rational { num: 3, den: 10 });
        assert!(k.ops.p_residual < 1e-40, "{}", k.ops.p_residual);
        assert!(k.ops.q_residual < 1e-40, "{}", k.ops.q_residual);
        assert_eq!(k.ops.p.len(), 5);
        assert_eq!(k.ops.q.len(), 4);
    }
}
