//! Polynomial roots by simultaneous Aberth–Ehrlich iteration with a final
//! Newton polish per root.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Value and derivative at `z`; coefficients are lowest degree first.
pub fn horner<T>(c: &[T], z: Complex64) -> (Complex64, Complex64)
where
    T: Copy + Into<Complex64>,
{
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a.into();
    }
    (p, dp)
}

/// Drops leading coefficients below `rel_tol` times the largest one.
pub fn trim(c: &[f64], rel_tol: f64) -> &[f64] {
    let m = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut d = c.len();
    while d > 1 && c[d - 1].abs() <= rel_tol * m {
        d -= 1;
    }
    &c[..d]
}

/// All complex roots of the real polynomial `c` (lowest degree first).
pub fn real_poly_roots(c: &[f64]) -> Vec<Complex64> {
    let c = trim(c, 1e-12);
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<f64> = c.iter().map(|v| v / lead).collect();
    // Cauchy-type radius for the starting circle
    let r = monic[..deg]
        .iter()
        .enumerate()
        .map(|(k, a)| a.abs().powf(1.0 / (deg - k) as f64))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let t = 2.0 * core::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::from_polar(r, t)
        })
        .collect();
    let abs: Vec<f64> = monic.iter().map(|v| v.abs()).collect();
    let mut done = vec![false; deg];
    for _ in 0..500 {
        let mut active = false;
        for i in 0..deg {
            if done[i] {
                continue;
            }
            let (p, dp) = horner(&monic, z[i]);
            // stop once |p| is within rounding of its evaluation
            let bound = abs.iter().rev().fold(0.0, |acc, a| acc * z[i].norm() + a);
            if p.norm() <= 8.0 * f64::EPSILON * bound {
                done[i] = true;
                continue;
            }
            active = true;
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    s += (z[i] - z[j]).inv();
                }
            }
            let off = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if off.is_finite() {
                z[i] -= off;
            }
        }
        if !active {
            break;
        }
    }
    for zi in z.iter_mut() {
        let (p, dp) = horner(&monic, *zi);
        let step = p / dp;
        if step.is_finite() && step.norm() < 1e-6 * zi.norm().max(1.0) {
            *zi -= step;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_roots() {
        // (z-1)(z+2)(z^2+1) = z^4 + z^3 - z^2 + z - 2
        let mut r = real_poly_roots(&[-2.0, 1.0, -1.0, 1.0, 1.0]);
        r.sort_by(|a, b| (a.re.round(), a.im).partial_cmp(&(b.re.round(), b.im)).unwrap());
        let want = [(-2.0, 0.0), (0.0, -1.0), (0.0, 1.0), (1.0, 0.0)];
        for (z, w) in r.iter().zip(want) {
            assert!((z - Complex64::new(w.0, w.1)).norm() < 1e-13, "{z}");
        }
    }

    #[test]
    fn degree_reduction() {
        let r = real_poly_roots(&[-1.0, 0.0, 1.0, 1e-17]);
        assert_eq!(r.len(), 2);
    }
}
