//! Lattice geometry, weights and tiling representations.
//!
//! Paths are stored with integer heights `h_j(x) = p_j(x) - 1/2`, where
//! `p_j` are the half-integer path heights of the lattice-path picture.
//! With this shift path `j` runs from `(0, j)` to `(2n, n + j)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::domain;
use crate::{Error, Result};

/// The weight parameter. Exact rationals are kept as such so that
/// enumeration can produce exact probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Rational { num: u64, den: u64 },
    Float(f64),
}

impl Alpha {
    pub fn rational(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(domain!("alpha denominator is zero"));
        }
        let g = gcd(num, den);
        Ok(Alpha::Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(&self) -> f64 {
        match *self {
            Alpha::Rational { num, den } => num as f64 / den as f64,
            Alpha::Float(a) => a,
        }
    }

    /// Parses `p/q`, a decimal like `0.3`, or scientific notation like `5e-4`.
    /// Decimal input becomes an exact rational whenever it fits in 64 bits.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse::<u64>().map_err(|_| domain!("bad alpha numerator {a:?}"))?;
            let den = b.trim().parse::<u64>().map_err(|_| domain!("bad alpha denominator {b:?}"))?;
            return Alpha::rational(num, den);
        }
        if let Some(r) = parse_decimal(s) {
            return Ok(r);
        }
        let f = s.parse::<f64>().map_err(|_| domain!("cannot parse alpha {s:?}"))?;
        Ok(Alpha::Float(f))
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Alpha::Rational { num, den } if den == 1 => write!(f, "{num}"),
            Alpha::Rational { num, den } => write!(f, "{num}/{den}"),
            Alpha::Float(a) => write!(f, "{a}"),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    if a == 0 {
        1
    } else {
        a
    }
}

fn parse_decimal(s: &str) -> Option<Alpha> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut num: u64 = 0;
    for b in int.bytes().chain(frac.bytes()) {
        num = num.checked_mul(10)?.checked_add((b - b'0') as u64)?;
    }
    let scale = exp - frac.len() as i32;
    let (mut n, mut d) = (num, 1u64);
    if scale >= 0 {
        for _ in 0..scale {
            n = n.checked_mul(10)?;
        }
    } else {
        for _ in 0..(-scale) {
            d = d.checked_mul(10)?;
        }
    }
    Alpha::rational(n, d).ok()
}

/// Hexagon size `n = 2N` and weight parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: Alpha,
}

impl ModelParams {
    pub fn new(n: usize, alpha: Alpha) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(domain!("hexagon size must be even and at least 2, got {n}"));
        }
        let a = alpha.value();
        if !(a > 0.0 && a <= 1.0) {
            return Err(domain!("alpha must lie in (0, 1], got {a}"));
        }
        Ok(ModelParams { n, alpha })
    }

    #[allow(non_snake_case)]
    pub fn N(&self) -> usize {
        self.n / 2
    }
}

/// Exponent `e` of the weight `alpha^e` of the step `(x, y1) -> (x+1, y2)`;
/// `None` when the step is not an edge of the path graph.
pub fn edge_weight_exponent(x: usize, y1: i64, y2: i64) -> Option<u32> {
    if y2 == y1 {
        Some(if x % 2 == 1 && y1.rem_euclid(2) == 0 { 2 } else { 0 })
    } else if y2 == y1 + 1 {
        Some(if (x as i64 + y1).rem_euclid(2) == 1 { 1 } else { 0 })
    } else {
        None
    }
}

/// `n` non-intersecting paths, heights stored row-major: `heights[j * (2n+1) + x]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TilingState {
    n: usize,
    heights: Vec<i32>,
}

impl TilingState {
    pub fn from_rows(n: usize, rows: &[Vec<i32>]) -> Result<Self> {
        if rows.len() != n {
            return Err(Error::InvalidTiling(alloc::format!(
                "expected {n} paths, got {}",
                rows.len()
            )));
        }
        let mut heights = Vec::with_capacity(n * (2 * n + 1));
        for r in rows {
            if r.len() != 2 * n + 1 {
                return Err(Error::InvalidTiling(alloc::format!(
                    "path of length {} but expected {}",
                    r.len(),
                    2 * n + 1
                )));
            }
            heights.extend_from_slice(r);
        }
        let t = TilingState { n, heights };
        t.validate()?;
        Ok(t)
    }

    pub(crate) fn from_flat_unchecked(n: usize, heights: Vec<i32>) -> Self {
        TilingState { n, heights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self, j: usize, x: usize) -> i32 {
        self.heights[j * (2 * self.n + 1) + x]
    }

    #[inline]
    pub(crate) fn set(&mut self, j: usize, x: usize, v: i32) {
        let w = 2 * self.n + 1;
        self.heights[j * w + x] = v;
    }

    pub fn path(&self, j: usize) -> &[i32] {
        let w = 2 * self.n + 1;
        &self.heights[j * w..(j + 1) * w]
    }

    pub fn rows(&self) -> Vec<Vec<i32>> {
        (0..self.n).map(|j| self.path(j).to_vec()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidTiling("empty tiling".into()));
        }
        let bad = |m: String| Err(Error::InvalidTiling(m));
        for j in 0..n {
            if self.h(j, 0) != j as i32 || self.h(j, 2 * n) != (n + j) as i32 {
                return bad(alloc::format!("path {j} has wrong endpoints"));
            }
            for x in 0..2 * n {
                let d = self.h(j, x + 1) - self.h(j, x);
                if d != 0 && d != 1 {
                    return bad(alloc::format!("path {j} has step {d} at x={x}"));
                }
            }
            if j + 1 < n {
                for x in 0..=2 * n {
                    if self.h(j, x) >= self.h(j + 1, x) {
                        return bad(alloc::format!("paths {j} and {} touch at x={x}", j + 1));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `e(T)` with `W(T) = alpha^e(T)`, summed over all path steps.
pub fn tiling_weight_exponent(t: &TilingState) -> Result<u32> {
    t.validate()?;
    Ok(exponent_unchecked(t))
}

pub(crate) fn exponent_unchecked(t: &TilingState) -> u32 {
    let n = t.n;
    let mut e = 0;
    for j in 0..n {
        for x in 0..2 * n {
            e += edge_weight_exponent(x, t.h(j, x) as i64, t.h(j, x + 1) as i64)
                .expect("validated tiling");
        }
    }
    e
}

/// The three lozenge shapes; indices 0, 1, 2 match `P1`, `P2`, `P3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LozengeType {
    R,
    U,
    D,
}

impl LozengeType {
    pub const ALL: [LozengeType; 3] = [LozengeType::R, LozengeType::U, LozengeType::D];

    pub fn index(self) -> usize {
        match self {
            LozengeType::R => 0,
            LozengeType::U => 1,
            LozengeType::D => 2,
        }
    }
}

/// Lozenge-based weight: an oblique lozenge marked `(i, j)` costs `alpha`
/// when `i + j` is odd, a horizontal one costs `alpha^2` when `i` is odd and
/// `j` is even. The marker is the tail vertex of the corresponding step.
pub fn tiling_weight_exponent_via_lozenges(t: &TilingState) -> Result<u32> {
    t.validate()?;
    let h = height_field(t);
    let mut e = 0;
    for (x, y) in hexagon_cells(t.n) {
        match classify_lozenge(&h, x, y)? {
            LozengeType::R if (x + y) % 2 == 1 => e += 1,
            LozengeType::U if x % 2 == 1 && y % 2 == 0 => e += 2,
            _ => {}
        }
    }
    Ok(e)
}

/// `h(x, y) = #{ j : h_j(x) <= y - 1 }` on the `(2n+1) x (2n+1)` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightField {
    n: usize,
    h: Vec<u32>,
}

impl HeightField {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.h[x * (2 * self.n + 1) + y]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub fn height_field(t: &TilingState) -> HeightField {
    let n = t.n;
    let w = 2 * n + 1;
    let mut h = vec![0u32; w * w];
    for x in 0..w {
        for j in 0..n {
            let v = t.h(j, x);
            for y in (v + 1).max(0) as usize..w {
                h[x * w + y] += 1;
            }
        }
    }
    HeightField { n, h }
}

/// Cells `(x, y)` of the hexagon: `x < 2n` and
/// `max(0, x-n) <= y <= min(x, n) + n - 1`. There are `3n^2` of them.
pub fn hexagon_cells(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..2 * n).flat_map(move |x| {
        let lo = x.saturating_sub(n);
        let hi = x.min(n) + n;
        (lo..hi).map(move |y| (x, y))
    })
}

pub fn classify_lozenge(h: &HeightField, x: usize, y: usize) -> Result<LozengeType> {
    let n = h.n;
    if x >= 2 * n || y >= 2 * n {
        return Err(domain!("cell ({x}, {y}) outside the height grid"));
    }
    let g = |a, b| h.get(a, b) as i64;
    let r = g(x, y + 1) - g(x + 1, y + 1) == 1;
    let u = g(x + 1, y + 1) - g(x, y) == 1;
    let d = g(x, y + 1) - g(x, y) == 0;
    match (r, u, d) {
        (true, false, false) => Ok(LozengeType::R),
        (false, true, false) => Ok(LozengeType::U),
        (false, false, true) => Ok(LozengeType::D),
        _ => Err(Error::InvalidTiling(alloc::format!(
            "cell ({x}, {y}) matches {} lozenge rules",
            r as u8 + u as u8 + d as u8
        ))),
    }
}

/// Counts of R, U, D lozenges; each equals `n^2` for a valid tiling.
pub fn lozenge_counts(t: &TilingState) -> Result<[usize; 3]> {
    let h = height_field(t);
    let mut c = [0; 3];
    for (x, y) in hexagon_cells(t.n) {
        c[classify_lozenge(&h, x, y)?.index()] += 1;
    }
    Ok(c)
}

/// Step words of the minimal-weight tiling, `-` flat and `/` up.
fn t_max_steps(n: usize, j: usize) -> Vec<u8> {
    let m = n / 2;
    let mut s = Vec::with_capacity(3 * n);
    let rep = |s: &mut Vec<u8>, pat: &[u8], k: usize| {
        for _ in 0..k {
            s.extend_from_slice(pat);
        }
    };
    if j < m {
        let k = n - 1 - 2 * j;
        rep(&mut s, b"-/", j + 1);
        rep(&mut s, b"-", k);
        rep(&mut s, b"/", k);
        rep(&mut s, b"-/", j);
    } else {
        let i = n - 1 - j;
        let k = n - 2 * i;
        rep(&mut s, b"-/", i);
        s.push(b'-');
        rep(&mut s, b"/", k);
        rep(&mut s, b"-", k);
        rep(&mut s, b"/-", i);
        s.truncate(2 * n);
    }
    s
}

/// The unique tiling of minimal exponent `n^2/4`.
pub fn t_max(n: usize) -> Result<TilingState> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(domain!("hexagon size must be even and at least 2, got {n}"));
    }
    let rows: Vec<Vec<i32>> = (0..n)
        .map(|j| {
            let mut h = j as i32;
            let mut r = vec![h];
            for &c in &t_max_steps(n, j) {
                h += (c == b'/') as i32;
                r.push(h);
            }
            r
        })
        .collect();
    TilingState::from_rows(n, &rows)
}

/// Three 2x2 matrices of lozenge probabilities. Row 0 holds height `2y+1`,
/// row 1 height `2y`; column 0 is `2x`, column 1 is `2x+1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DensityTriple {
    pub p: [[[f64; 2]; 2]; 3],
}

impl DensityTriple {
    /// Largest entrywise deviation of `P1 + P2 + P3` from the all-ones matrix.
    pub fn sum_rule_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let s = self.p[0][i][j] + self.p[1][i][j] + self.p[2][i][j];
                r = r.max((s - 1.0).abs());
            }
        }
        r
    }

    pub fn max_abs_diff(&self, other: &DensityTriple) -> f64 {
        let mut r: f64 = 0.0;
        for k in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    r = r.max((self.p[k][i][j] - other.p[k][i][j]).abs());
                }
            }
        }
        r
    }

    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.p.iter().flat_map(|m| m.iter().flat_map(|r| r.iter().copied()))
    }

    /// `(row, col)` of the matrix entry describing the lattice site `(X, Y)`.
    pub fn slot(xp: usize, yp: usize) -> (usize, usize) {
        (1 - yp % 2, xp % 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_examples() {
        assert_eq!(edge_weight_exponent(1, 0, 0), Some(2));
        assert_eq!(edge_weight_exponent(0, 0, 0), Some(0));
        assert_eq!(edge_weight_exponent(0, 1, 2), Some(1));
        assert_eq!(edge_weight_exponent(2, 0, 2), None);
    }

    #[test]
    fn alpha_parse() {
        assert_eq!(Alpha::parse("0.3").unwrap(), Alpha::Rational { num: 3, den: 10 });
        assert_eq!(Alpha::parse("1").unwrap(), Alpha::Rational { num: 1, den: 1 });
        assert_eq!(Alpha::parse("6/20").unwrap(), Alpha::Rational { num: 3, den: 10 });
        assert_eq!(Alpha::parse("5e-4").unwrap(), Alpha::Rational { num: 1, den: 2000 });
        assert!(ModelParams::new(3, Alpha::Float(0.5)).is_err());
        assert!(ModelParams::new(4, Alpha::Float(0.0)).is_err());
        assert!(ModelParams::new(4, Alpha::Float(1.5)).is_err());
    }

    #[test]
    fn t_max_small() {
        let t = t_max(2).unwrap();
        assert_eq!(t.rows(), vec![vec![0, 0, 1, 1, 2], vec![1, 1, 2, 3, 3]]);
        for (n, e) in [(2, 1), (4, 4), (6, 9), (8, 16), (20, 100)] {
            let t = t_max(n).unwrap();
            assert_eq!(tiling_weight_exponent(&t).unwrap(), e);
            assert_eq!(tiling_weight_exponent_via_lozenges(&t).unwrap(), e);
        }
    }

    #[test]
    fn t_max_height_field_n2() {
        // rows are x = 0..4, columns y = 0..4
        let h = height_field(&t_max(2).unwrap());
        let want = [
            [0, 1, 2, 2, 2],
            [0, 1, 2, 2, 2],
            [0, 0, 1, 2, 2],
            [0, 0, 1, 1, 2],
            [0, 0, 0, 1, 2],
        ];
        for x in 0..5 {
            for y in 0..5 {
                assert_eq!(h.get(x, y), want[x][y], "({x},{y})");
            }
        }
        assert_eq!(classify_lozenge(&h, 0, 0).unwrap(), LozengeType::U);
        assert_eq!(classify_lozenge(&h, 1, 0).unwrap(), LozengeType::R);
        assert_eq!(classify_lozenge(&h, 2, 0).unwrap(), LozengeType::D);
    }

    #[test]
    fn cells_and_counts() {
        for n in [2, 4, 6] {
            assert_eq!(hexagon_cells(n).count(), 3 * n * n);
            assert_eq!(lozenge_counts(&t_max(n).unwrap()).unwrap(), [n * n; 3]);
        }
    }

    #[test]
    fn rejects_bad_tilings() {
        assert!(TilingState::from_rows(2, &[vec![0, 0, 1, 1, 2], vec![0, 1, 2, 3, 3]]).is_err());
        assert!(TilingState::from_rows(2, &[vec![0, 0, 1, 1, 2], vec![1, 1, 1, 3, 3]]).is_err());
        assert!(TilingState::from_rows(2, &[vec![0, 1, 1, 1, 2], vec![1, 1, 2, 3, 3]]).is_err());
    }
}
