//! Exact weighted enumeration by column transfer over path states.
//!
//! A column state is the strictly increasing height vector of the `n`
//! paths at column `x`, packed 5 bits per path into a `u64`. Going from
//! column `x` to `x + 1` is done one path at a time (top path first), so
//! each sub-step branches only two ways.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::domain;
use crate::mp::Real;
use crate::model::{edge_weight_exponent, Alpha, DensityTriple, ModelParams, TilingState};
use crate::{Error, Result};

/// Largest `n` accepted by the transfer-based routines.
pub const MAX_TRANSFER_N: usize = 12;
/// Largest `n` accepted by the depth-first brute force.
pub const MAX_BRUTE_N: usize = 4;

const BITS: u32 = 5;
const MASK: u64 = (1 << BITS) - 1;

#[inline]
fn get(key: u64, j: usize) -> i64 {
    ((key >> (BITS * j as u32)) & MASK) as i64
}

#[inline]
fn put(key: u64, j: usize, v: i64) -> u64 {
    let s = BITS * j as u32;
    (key & !(MASK << s)) | ((v as u64) << s)
}

fn pack(h: impl Iterator<Item = i64>) -> u64 {
    h.enumerate().fold(0, |k, (j, v)| put(k, j, v))
}

/// `Z(alpha) = sum_e coeffs[e] alpha^e`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExponentPolynomial {
    pub coeffs: BTreeMap<u32, BigUint>,
}

impl ExponentPolynomial {
    pub fn min_term(&self) -> Option<(u32, &BigUint)> {
        self.coeffs.iter().next().map(|(e, c)| (*e, c))
    }

    /// Exponent following the minimal one, if any.
    pub fn second_exponent(&self) -> Option<u32> {
        self.coeffs.keys().nth(1).copied()
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    /// `Z(1)`, the number of tilings.
    pub fn total(&self) -> BigUint {
        self.coeffs.values().fold(BigUint::zero(), |a, c| a + c)
    }

    /// Horner evaluation in double precision.
    pub fn eval_f64(&self, alpha: f64) -> f64 {
        let Some(top) = self.degree() else { return 0.0 };
        let mut acc = 0.0;
        for e in (0..=top).rev() {
            acc = acc * alpha + self.coeffs.get(&e).map_or(0.0, |c| c.to_f64().unwrap_or(f64::INFINITY));
        }
        acc
    }

    pub fn eval_rational(&self, num: u64, den: u64) -> BigRational {
        let mut acc = BigRational::zero();
        let a = BigRational::new(num.into(), den.into());
        let Some(top) = self.degree() else { return acc };
        for e in (0..=top).rev() {
            acc *= &a;
            if let Some(c) = self.coeffs.get(&e) {
                acc += BigRational::from_integer(c.clone().into());
            }
        }
        acc
    }

    pub fn eval(&self, alpha: Alpha) -> f64 {
        match alpha {
            Alpha::Rational { num, den } => ratio_to_f64(&self.eval_rational(num, den)),
            Alpha::Float(a) => self.eval_f64(a),
        }
    }

    /// `{"exponent": "coefficient"}` as ordered string pairs.
    pub fn to_string_map(&self) -> Vec<(alloc::string::String, alloc::string::String)> {
        self.coeffs.iter().map(|(e, c)| (e.to_string(), c.to_string())).collect()
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Values carried by transfer states.
trait Ring {
    type V: Clone;
    fn one(&self) -> Self::V;
    fn add_into(&self, acc: &mut Self::V, v: &Self::V);
    fn weighted(&self, v: &Self::V, e: u32) -> Self::V;
    /// Normalises a finished column, returning the log of the divisor.
    fn rescale(&self, _col: &mut [(u64, Self::V)]) -> f64 {
        0.0
    }
}

/// Dense polynomial `sum_k c[k] alpha^(lo + k)`.
#[derive(Clone, Debug)]
struct Dense<C> {
    lo: u32,
    c: Vec<C>,
}

trait Coeff: Clone + Zero {
    fn acc(&mut self, o: &Self);
}

impl Coeff for u128 {
    #[inline]
    fn acc(&mut self, o: &Self) {
        *self = self.checked_add(*o).expect("coefficient overflow");
    }
}

impl Coeff for BigUint {
    #[inline]
    fn acc(&mut self, o: &Self) {
        *self += o;
    }
}

struct PolyRing<C>(core::marker::PhantomData<C>);

impl<C: Coeff + One> Ring for PolyRing<C> {
    type V = Dense<C>;
    fn one(&self) -> Dense<C> {
        Dense {
            lo: 0,
            c: vec![C::one()],
        }
    }
    fn add_into(&self, acc: &mut Dense<C>, v: &Dense<C>) {
        if acc.c.is_empty() {
            *acc = v.clone();
            return;
        }
        let lo = acc.lo.min(v.lo);
        let hi = (acc.lo as usize + acc.c.len()).max(v.lo as usize + v.c.len());
        if lo < acc.lo {
            let pad = (acc.lo - lo) as usize;
            let mut c = vec![C::zero(); pad];
            c.append(&mut acc.c);
            acc.c = c;
            acc.lo = lo;
        }
        acc.c.resize(hi - lo as usize, C::zero());
        let off = (v.lo - lo) as usize;
        for (k, x) in v.c.iter().enumerate() {
            acc.c[off + k].acc(x);
        }
    }
    fn weighted(&self, v: &Dense<C>, e: u32) -> Dense<C> {
        Dense {
            lo: v.lo + e,
            c: v.c.clone(),
        }
    }
}

/// Exact evaluation at `alpha = a/b`: the step weight `alpha^e` is replaced
/// by `a^e b^(2-e)`, which scales every complete path system by the same
/// power of `b`.
struct IntRing {
    w: [BigUint; 3],
}

impl IntRing {
    fn new(a: u64, b: u64) -> Self {
        let (a, b) = (BigUint::from(a), BigUint::from(b));
        IntRing {
            w: [&b * &b, &a * &b, &a * &a],
        }
    }
}

impl Ring for IntRing {
    type V = BigUint;
    fn one(&self) -> BigUint {
        BigUint::one()
    }
    fn add_into(&self, acc: &mut BigUint, v: &BigUint) {
        *acc += v;
    }
    fn weighted(&self, v: &BigUint, e: u32) -> BigUint {
        v * &self.w[e as usize]
    }
}

struct FloatRing {
    w: [f64; 3],
}

impl Ring for FloatRing {
    type V = f64;
    fn one(&self) -> f64 {
        1.0
    }
    fn add_into(&self, acc: &mut f64, v: &f64) {
        *acc += *v;
    }
    fn weighted(&self, v: &f64, e: u32) -> f64 {
        v * self.w[e as usize]
    }
    fn rescale(&self, col: &mut [(u64, f64)]) -> f64 {
        let m = col.iter().fold(0.0f64, |m, (_, v)| m.max(*v));
        if m > 0.0 {
            for (_, v) in col.iter_mut() {
                *v /= m;
            }
            libm::log(m)
        } else {
            0.0
        }
    }
}

type Column<V> = Vec<(u64, V)>;

fn merge<R: Ring>(ring: &R, mut v: Column<R::V>) -> Column<R::V> {
    v.sort_unstable_by_key(|p| p.0);
    let mut out: Column<R::V> = Vec::with_capacity(v.len());
    for (k, x) in v {
        match out.last_mut() {
            Some((lk, lx)) if *lk == k => ring.add_into(lx, &x),
            _ => out.push((k, x)),
        }
    }
    out
}

/// Runs the transfer from column 0 to column `2n`. `exp(x, y1, y2)` gives
/// the step exponent. Returns every column when `keep` is set, otherwise
/// only the final one, together with the accumulated log rescaling.
fn sweep<R: Ring>(
    n: usize,
    ring: &R,
    exp: impl Fn(usize, i64, i64) -> u32,
    keep: bool,
) -> (Vec<Column<R::V>>, f64) {
    let mut log_scale = 0.0;
    let ni = n as i64;
    let mut cols = Vec::new();
    let mut cur: Column<R::V> = vec![(pack(0..ni), ring.one())];
    for x in 0..2 * n {
        let xi = x as i64 + 1;
        let (lo, hi) = ((xi - ni).max(0), xi.min(ni));
        for j in (0..n).rev() {
            let mut next = Vec::with_capacity(cur.len() * 2);
            for (k, v) in &cur {
                let h = get(*k, j);
                for d in 0..2 {
                    let h2 = h + d;
                    let o = h2 - j as i64;
                    if o < lo || o > hi {
                        continue;
                    }
                    if j + 1 < n && h2 >= get(*k, j + 1) {
                        continue;
                    }
                    next.push((put(*k, j, h2), ring.weighted(v, exp(x, h, h2))));
                }
            }
            cur = merge(ring, next);
        }
        log_scale += ring.rescale(&mut cur);
        if keep {
            cols.push(cur.clone());
        }
    }
    if keep {
        let mut all = Vec::with_capacity(2 * n + 1);
        all.push(vec![(pack(0..ni), ring.one())]);
        all.extend(cols);
        (all, log_scale)
    } else {
        (vec![cur], log_scale)
    }
}

fn guard(n: usize, limit: usize, what: &'static str) -> Result<()> {
    if n > limit {
        return Err(Error::ResourceGuard { what, limit, got: n });
    }
    if n < 2 || !n.is_multiple_of(2) {
        return Err(domain!("hexagon size must be even and at least 2, got {n}"));
    }
    Ok(())
}

fn edge(x: usize, y1: i64, y2: i64) -> u32 {
    edge_weight_exponent(x, y1, y2).expect("transfer only takes valid steps")
}

fn dense_to_poly<C: Coeff + Into<BigUint>>(d: Dense<C>) -> ExponentPolynomial {
    let mut coeffs = BTreeMap::new();
    for (k, c) in d.c.into_iter().enumerate() {
        if !c.is_zero() {
            coeffs.insert(d.lo + k as u32, c.into());
        }
    }
    ExponentPolynomial { coeffs }
}

/// `Z(alpha)` as an exact polynomial.
pub fn partition_polynomial(n: usize) -> Result<ExponentPolynomial> {
    guard(n, MAX_TRANSFER_N, "transfer enumeration size n")?;
    // tiling counts fit in 128 bits up to n = 10
    if n <= 10 {
        let ring = PolyRing::<u128>(Default::default());
        let last = sweep(n, &ring, edge, false).0.pop().unwrap();
        Ok(dense_to_poly(last[0].1.clone()))
    } else {
        let ring = PolyRing::<BigUint>(Default::default());
        let last = sweep(n, &ring, edge, false).0.pop().unwrap();
        Ok(dense_to_poly(last[0].1.clone()))
    }
}

/// `Z(alpha)` by the transfer in double precision.
pub fn partition_f64(n: usize, alpha: f64) -> Result<f64> {
    guard(n, MAX_TRANSFER_N, "transfer enumeration size n")?;
    let ring = FloatRing {
        w: [1.0, alpha, alpha * alpha],
    };
    let (last, log_scale) = sweep(n, &ring, edge, false);
    Ok(last[0][0].1 * libm::exp(log_scale))
}

/// `Z(a/b)` exactly.
pub fn partition_rational(n: usize, num: u64, den: u64) -> Result<BigRational> {
    guard(n, MAX_TRANSFER_N, "transfer enumeration size n")?;
    let ring = IntRing::new(num, den);
    let last = sweep(n, &ring, edge, false).0.pop().unwrap();
    let scale = BigUint::from(den).pow(2 * (2 * n * n) as u32);
    Ok(BigRational::new(last[0].1.clone().into(), scale.into()))
}

/// Every tiling, by depth-first search over paths from the top one down.
pub fn brute_force_tilings(n: usize) -> Result<Vec<TilingState>> {
    guard(n, MAX_BRUTE_N, "brute-force enumeration size n")?;
    let w = 2 * n + 1;
    let mut out = Vec::new();
    let mut rows = vec![vec![0i32; w]; n];
    fn path(
        n: usize,
        j: usize,
        x: usize,
        rows: &mut Vec<Vec<i32>>,
        out: &mut Vec<TilingState>,
    ) {
        let end = (n + j) as i32;
        if x == 2 * n {
            if rows[j][x] != end {
                return;
            }
            if j == 0 {
                let flat = rows.iter().flatten().copied().collect();
                out.push(TilingState::from_flat_unchecked(n, flat));
            } else {
                rows[j - 1][0] = j as i32 - 1;
                path(n, j - 1, 0, rows, out);
            }
            return;
        }
        for d in 0..2 {
            let v = rows[j][x] + d;
            // must still be able to reach the endpoint
            if v > end || end - v > (2 * n - x - 1) as i32 {
                continue;
            }
            if j + 1 < n && v >= rows[j + 1][x + 1] {
                continue;
            }
            rows[j][x + 1] = v;
            path(n, j, x + 1, rows, out);
        }
    }
    rows[n - 1][0] = n as i32 - 1;
    path(n, n - 1, 0, &mut rows, &mut out);
    Ok(out)
}

/// `Z(alpha)` as the determinant of single-path weighted counts.
///
/// The determinant cancels heavily for small alpha, so both the path
/// counts and the elimination run at 192 bits.
pub fn lgv_partition(n: usize, alpha: f64) -> Result<f64> {
    guard(n, MAX_TRANSFER_N, "LGV size n")?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain!("alpha must lie in (0, 1], got {alpha}"));
    }
    const P: usize = 192;
    let a = Real::from_f64(alpha, P);
    let wts = [Real::one(P), a.clone(), &a * &a];
    let top = 2 * n;
    let mut m: Vec<Vec<Real>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = vec![Real::zero(P); top];
        f[i] = Real::one(P);
        for x in 0..2 * n {
            let mut g = vec![Real::zero(P); top];
            for y in 0..top {
                if f[y].is_zero() {
                    continue;
                }
                let flat = &f[y] * &wts[edge(x, y as i64, y as i64) as usize];
                g[y] = &g[y] + &flat;
                if y + 1 < top {
                    let up = &f[y] * &wts[edge(x, y as i64, y as i64 + 1) as usize];
                    g[y + 1] = &g[y + 1] + &up;
                }
            }
            f = g;
        }
        m.push(f[n..2 * n].to_vec());
    }
    Ok(det(m).to_f64())
}

fn det(mut a: Vec<Vec<Real>>) -> Real {
    let n = a.len();
    let mut d = Real::one(a[0][0].prec());
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].cmp_abs(&a[j][k])).unwrap();
        if a[p][k].is_zero() {
            return Real::zero(d.prec());
        }
        if p != k {
            a.swap(p, k);
            d = -&d;
        }
        d = &d * &a[k][k];
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            for j in k..n {
                let t = &f * &a[k][j];
                a[i][j] = &a[i][j] - &t;
            }
        }
    }
    d
}

/// Exact one-point statistics of the path ensemble.
#[derive(Debug, Clone)]
pub struct Marginals {
    pub n: usize,
    /// `occ[x][y]`: probability that a path passes through `(x, y)`.
    pub occ: Vec<Vec<f64>>,
    /// Same, as exact rationals when alpha is rational.
    pub occ_exact: Option<Vec<Vec<BigRational>>>,
}

/// Forward and backward transfer sweeps, combined per column.
pub fn marginals(params: &ModelParams) -> Result<Marginals> {
    let n = params.n;
    guard(n, MAX_TRANSFER_N, "transfer enumeration size n")?;
    let top = 2 * n;
    let rev = |x: usize, y1: i64, y2: i64| {
        let m = top as i64 - 1;
        edge(top - 1 - x, m - y2, m - y1)
    };
    let flip = |k: u64| pack((0..n).map(|j| top as i64 - 1 - get(k, n - 1 - j)));
    match params.alpha {
        Alpha::Rational { num, den } => {
            let ring = IntRing::new(num, den);
            let f = sweep(n, &ring, edge, true).0;
            let b = sweep(n, &ring, rev, true).0;
            let mut occ_exact = vec![vec![BigRational::zero(); top]; top + 1];
            for x in 0..=top {
                let bc = &b[top - x];
                let mut acc = vec![BigUint::zero(); top];
                let mut z = BigUint::zero();
                for (k, fv) in &f[x] {
                    let kb = flip(*k);
                    let Ok(i) = bc.binary_search_by_key(&kb, |p| p.0) else { continue };
                    let p = fv * &bc[i].1;
                    for j in 0..n {
                        acc[get(*k, j) as usize] += &p;
                    }
                    z += p;
                }
                for y in 0..top {
                    occ_exact[x][y] = BigRational::new(acc[y].clone().into(), z.clone().into());
                }
            }
            let occ = occ_exact.iter().map(|r| r.iter().map(ratio_to_f64).collect()).collect();
            Ok(Marginals {
                n,
                occ,
                occ_exact: Some(occ_exact),
            })
        }
        Alpha::Float(a) => {
            let ring = FloatRing { w: [1.0, a, a * a] };
            let f = sweep(n, &ring, edge, true).0;
            let b = sweep(n, &ring, rev, true).0;
            let mut occ = vec![vec![0.0; top]; top + 1];
            for x in 0..=top {
                let bc = &b[top - x];
                let mut z = 0.0;
                for (k, fv) in &f[x] {
                    let Ok(i) = bc.binary_search_by_key(&flip(*k), |p| p.0) else { continue };
                    let p = fv * bc[i].1;
                    for j in 0..n {
                        occ[x][get(*k, j) as usize] += p;
                    }
                    z += p;
                }
                for v in occ[x].iter_mut() {
                    *v /= z;
                }
            }
            Ok(Marginals {
                n,
                occ,
                occ_exact: None,
            })
        }
    }
}

impl Marginals {
    pub fn occupancy(&self, x: usize, y: i64) -> f64 {
        if x > 2 * self.n || y < 0 || y >= 2 * self.n as i64 {
            return 0.0;
        }
        self.occ[x][y as usize]
    }

    /// Lozenge probabilities at lattice site `(x, y)` from expected heights.
    pub fn lozenge_probs(&self, x: usize, y: usize) -> [f64; 3] {
        let eh = |x: usize, y: usize| (0..y).map(|k| self.occupancy(x, k as i64)).sum::<f64>();
        [
            eh(x, y + 1) - eh(x + 1, y + 1),
            eh(x + 1, y + 1) - eh(x, y),
            1.0 - self.occupancy(x, y as i64),
        ]
    }

    pub fn lozenge_probs_exact(&self, x: usize, y: usize) -> Option<[BigRational; 3]> {
        let occ = self.occ_exact.as_ref()?;
        let o = |x: usize, k: usize| {
            if x <= 2 * self.n && k < 2 * self.n {
                occ[x][k].clone()
            } else {
                BigRational::zero()
            }
        };
        let eh = |x: usize, y: usize| (0..y).fold(BigRational::zero(), |a, k| a + o(x, k));
        Some([
            eh(x, y + 1) - eh(x + 1, y + 1),
            eh(x + 1, y + 1) - eh(x, y),
            BigRational::one() - o(x, y),
        ])
    }

    fn check_block(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.n || y >= self.n {
            return Err(domain!(
                "density block ({x}, {y}) outside 0..{} x 0..{}",
                self.n,
                self.n
            ));
        }
        Ok(())
    }

    /// The 2x2 block at `(x, y)`, `0 <= x, y < 2N`.
    pub fn density(&self, x: usize, y: usize) -> Result<DensityTriple> {
        self.check_block(x, y)?;
        let mut d = DensityTriple::default();
        for (xp, yp) in [(2 * x, 2 * y), (2 * x + 1, 2 * y), (2 * x, 2 * y + 1), (2 * x + 1, 2 * y + 1)] {
            let (r, c) = DensityTriple::slot(xp, yp);
            let p = match self.lozenge_probs_exact(xp, yp) {
                Some(q) => [ratio_to_f64(&q[0]), ratio_to_f64(&q[1]), ratio_to_f64(&q[2])],
                None => self.lozenge_probs(xp, yp),
            };
            for k in 0..3 {
                d.p[k][r][c] = p[k];
            }
        }
        Ok(d)
    }

    /// Exact block as rationals, `[type][row][col]`.
    pub fn density_exact(&self, x: usize, y: usize) -> Result<Option<Vec<Vec<Vec<BigRational>>>>> {
        self.check_block(x, y)?;
        if self.occ_exact.is_none() {
            return Ok(None);
        }
        let mut d = vec![vec![vec![BigRational::zero(); 2]; 2]; 3];
        for (xp, yp) in [(2 * x, 2 * y), (2 * x + 1, 2 * y), (2 * x, 2 * y + 1), (2 * x + 1, 2 * y + 1)] {
            let (r, c) = DensityTriple::slot(xp, yp);
            let q = self.lozenge_probs_exact(xp, yp).unwrap();
            for (k, v) in q.into_iter().enumerate() {
                d[k][r][c] = v;
            }
        }
        Ok(Some(d))
    }
}

pub fn exact_occupancy(n: usize, alpha: Alpha, x: usize, y: i64) -> Result<f64> {
    let m = marginals(&ModelParams::new(n, alpha)?)?;
    if x > 2 * n {
        return Err(domain!("column {x} outside 0..={}", 2 * n));
    }
    Ok(m.occupancy(x, y))
}

pub fn exact_density_matrices(n: usize, alpha: Alpha, x: usize, y: usize) -> Result<DensityTriple> {
    let p = ModelParams::new(n, alpha)?;
    if x >= n || y >= n {
        return Err(domain!("density block ({x}, {y}) outside 0..{n} x 0..{n}"));
    }
    marginals(&p)?.density(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiling_weight_exponent;

    #[test]
    fn small_counts() {
        let z = partition_polynomial(2).unwrap();
        assert_eq!(z.total(), BigUint::from(20u32));
        assert_eq!(z.min_term().unwrap(), (1, &BigUint::one()));
        assert_eq!(brute_force_tilings(2).unwrap().len(), 20);
    }

    #[test]
    fn brute_matches_transfer_n2() {
        let mut poly = ExponentPolynomial::default();
        for t in brute_force_tilings(2).unwrap() {
            t.validate().unwrap();
            *poly.coeffs.entry(tiling_weight_exponent(&t).unwrap()).or_default() += 1u32;
        }
        assert_eq!(poly, partition_polynomial(2).unwrap());
    }

    #[test]
    fn guards() {
        assert!(matches!(partition_polynomial(14), Err(Error::ResourceGuard { .. })));
        assert!(matches!(brute_force_tilings(6), Err(Error::ResourceGuard { .. })));
        assert!(matches!(partition_polynomial(3), Err(Error::Domain(_))));
    }

    #[test]
    fn occupancy_boundaries() {
        let m = marginals(&ModelParams::new(4, Alpha::Float(0.3)).unwrap()).unwrap();
        for x in 0..=8 {
            let s: f64 = (0..8).map(|y| m.occupancy(x, y)).sum();
            assert!((s - 4.0).abs() < 1e-12);
        }
        for y in 0..8 {
            assert_eq!(m.occupancy(0, y), if y < 4 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn exact_sum_rule() {
        let m = marginals(&ModelParams::new(4, Alpha::Rational { num: 3, den: 10 }).unwrap()).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                let d = m.density_exact(x, y).unwrap().unwrap();
                for r in 0..2 {
                    for c in 0..2 {
                        let s = &d[0][r][c] + &d[1][r][c] + &d[2][r][c];
                        assert!(s.is_one());
                        for k in 0..3 {
                            assert!(d[k][r][c] >= BigRational::zero() && d[k][r][c] <= BigRational::one());
                        }
                    }
                }
            }
        }
    }
}
