use hexaperiod_core::enumerate::marginals;
use hexaperiod_core::kernel::*;
use hexaperiod_core::model::{Alpha, ModelParams};
use hexaperiod_core::mp::Complex;
use num_complex::Complex64 as C;

fn kernel(n_half: usize, alpha: Alpha, nodes: usize, bits: usize) -> Kernel {
    let mut cfg = KernelConfig::new(n_half, alpha);
    cfg.nodes = nodes;
    cfg.precision_bits = bits;
    Kernel::new(cfg).unwrap()
}

const HALF: Alpha = Alpha::Rational { num: 1, den: 2 };
const A3: Alpha = Alpha::Rational { num: 3, den: 10 };

#[test]
fn kernel_diagonal_matches_enumeration() {
    for (nh, a) in [(1usize, HALF), (1, A3), (2, A3), (2, HALF)] {
        let k = kernel(nh, a, 256, 192);
        let m = marginals(&ModelParams::new(2 * nh, a).unwrap()).unwrap();
        for x in 1..2 * nh {
            for eps in 0..2u8 {
                let col = 2 * x + eps as usize;
                let mut total = 0.0;
                for y in 0..2 * nh as i64 {
                    let b = k.kernel_block(x, y, eps).unwrap();
                    assert!(b.max_imag() < 1e-8);
                    for i in 0..2 {
                        let want = m.occupancy(col, 2 * y + i as i64);
                        let got = b.m[i][i].re;
                        assert!((got - want).abs() < 1e-8, "N={nh} a={a:?} col={col} y={y} i={i}: {got} vs {want}");
                        total += got;
                    }
                }
                assert!((total - 2.0 * nh as f64).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn finite_density_matches_enumeration() {
    for (nh, a) in [(1usize, HALF), (1, A3), (2, A3), (2, HALF)] {
        let k = kernel(nh, a, 256, 192);
        let m = marginals(&ModelParams::new(2 * nh, a).unwrap()).unwrap();
        for x in 1..2 * nh {
            for y in 0..2 * nh {
                let d = k.finite_density_matrices(x, y).unwrap();
                let want = m.density(x, y).unwrap();
                assert!(d.max_imag < 1e-8);
                assert!(d.triple.max_abs_diff(&want) < 1e-8, "N={nh} a={a:?} ({x},{y}) {:?} vs {:?}", d.triple, want);
                assert!(d.triple.sum_rule_residual() < 1e-8);
            }
        }
    }
}

#[test]
fn sum_rule_and_column_sums_n3() {
    let k = kernel(3, Alpha::Float(0.7), 512, 192);
    for x in 1..6 {
        for eps in 0..2u8 {
            let mut total = 0.0;
            for y in 0..6 {
                let b = k.kernel_block(x, y, eps).unwrap();
                total += b.m[0][0].re + b.m[1][1].re;
                for i in 0..2 {
                    assert!((-1e-6..=1.0 + 1e-6).contains(&b.m[i][i].re));
                }
            }
            assert!((total - 6.0).abs() < 1e-7, "x={x} eps={eps} total={total}");
        }
        for y in 0..6 {
            let d = k.finite_density_matrices(x, y).unwrap();
            assert!(d.triple.sum_rule_residual() < 1e-8);
            assert!(d.triple.entries().all(|v| (-1e-6..=1.0 + 1e-6).contains(&v)));
        }
    }
}

#[test]
fn reproducing_property() {
    let pts = [C::new(0.3, 0.2), C::new(-1.0, 0.5), C::new(2.0, -1.0), C::new(0.0, 0.0), C::new(1.5, 0.01)];
    for nh in 1..=4 {
        for a in [A3, HALF] {
            let k = kernel(nh, a, 512, 256);
            for deg in 0..2 * nh {
                for z in pts {
                    let e = k.reproducing_error(deg, z);
                    assert!(e < 1e-8 * z.norm().max(1.0).powi(deg as i32), "N={nh} deg={deg} z={z} err={e}");
                }
            }
            assert!(k.ops().p_residual < 1e-50);
            assert!(k.ops().q_residual < 1e-50);
        }
    }
}

#[test]
fn star_symmetry_of_reproducing_kernel() {
    let nh = 3;
    let k = kernel(nh, HALF, 256, 256);
    let a: f64 = 0.5;
    let c = (a / (1.0 - a + a * a)).sqrt();
    let ci = 1.0 / c;
    let r1 = (1.0 - a) / a.sqrt();
    let star = |z: C| ci + r1 * r1 / (z - ci);
    let p = 256;
    for (t1, t2) in [(0.3, 1.7), (2.0, -2.5), (0.9, 0.91)] {
        let w = ci + C::from_polar(r1, t1);
        let z = ci + C::from_polar(r1, t2);
        let lhs = k.reproducing_kernel(&Complex::from_c64(star(w), p), &Complex::from_c64(star(z), p)).to_c64();
        let rk = k.reproducing_kernel(&Complex::from_c64(w, p), &Complex::from_c64(z, p)).to_c64();
        let e = (4 * nh - 2) as i32;
        let rhs = rk * r1.powi(e) / ((w - ci) * (z - ci)).powi(2 * nh as i32 - 1);
        assert!((lhs - rhs).norm() < 1e-7 * rhs.norm(), "{lhs} vs {rhs}");
    }
}

#[test]
fn weight_symmetry_and_residues() {
    let k = kernel(2, HALF, 128, 192);
    let a: f64 = 0.5;
    let c = (a / (1.0 - a + a * a)).sqrt();
    let ci = 1.0 / c;
    let r1 = (1.0 - a) / a.sqrt();
    for t in [0.4, 1.9, -2.2] {
        let z = ci + C::from_polar(r1, t);
        let zs = ci + r1 * r1 / (z - ci);
        let lhs = k.weight_w(zs).unwrap().to_c64() * r1.powi(8);
        let rhs = (z - ci).powi(8) * k.weight_w(z).unwrap().to_c64();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
        // direct double evaluation of the rational base
        let base = (z - a * c) * (z - a / c) / (z * (z - c) * (z - ci));
        assert!((k.weight_w(z).unwrap().to_c64() - base.powi(4)).norm() < 1e-12 * base.norm().powi(4));
    }
    assert!(k.weight_w(C::new(c, 0.0)).is_err());

    // N = 1: m_0 is the sum of the residues of W at the double poles c and 1/c
    let k1 = kernel(1, HALF, 256, 192);
    let g = |z0: f64, other: f64| {
        let v = ((z0 - a * c) * (z0 - a / c)).powi(2) / (z0 * (z0 - other)).powi(2);
        v * (2.0 / (z0 - a * c) + 2.0 / (z0 - a / c) - 2.0 / z0 - 2.0 / (z0 - other))
    };
    let res = g(c, ci) + g(ci, c);
    let m0 = k1.moments()[0].to_c64();
    assert!((m0.re - res).abs() < 1e-12 * res.abs() && m0.im.abs() < 1e-12 * res.abs(), "{m0} vs {res}");
}

#[test]
fn node_doubling_and_contour_invariance() {
    for nh in [1usize, 3, 6] {
        let k1 = kernel(nh, A3, 1024, 256);
        let k2 = kernel(nh, A3, 2048, 256);
        for (a, b) in k1.moments().iter().zip(k2.moments()) {
            let d = (a - b).to_c64().norm();
            assert!(d <= 1e-32 * b.to_c64().norm(), "N={nh}: {d}");
        }
    }
    let base = kernel(2, A3, 1024, 192);
    let mut cfg = base.cfg.clone();
    cfg.radius_scale = 0.95;
    let shrunk = Kernel::new(cfg).unwrap();
    for x in 1..4 {
        for y in 0..4 {
            for eps in 0..2 {
                let u = base.kernel_block(x, y, eps).unwrap();
                let v = shrunk.kernel_block(x, y, eps).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        let d = (u.m[i][j] - v.m[i][j]).norm();
                        assert!(d < 1e-9, "({x},{y},{eps}) {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn center_density_approaches_limit() {
    use hexaperiod_core::asymptotics::{density_matrices, AlphaConstants};
    let lim = density_matrices(&AlphaConstants::new(0.5).unwrap(), 0.0, 0.0).unwrap();
    let mut last = f64::INFINITY;
    for n in [4usize, 8, 16] {
        let k = Kernel::new(KernelConfig::new(n, HALF)).unwrap();
        let d = k.finite_density_matrices(n, n).unwrap();
        let dist = d.triple.max_abs_diff(&lim);
        assert!(dist < last, "N={n}: {dist} >= {last}");
        last = dist;
    }
}

#[test]
fn refinement_settles() {
    let mut cfg = KernelConfig::new(2, A3);
    cfg.nodes = 128;
    cfg.precision_bits = 128;
    let (d, used) = refined_density(&cfg, 1, 1, 1e-10, 4).unwrap();
    assert!(used.nodes >= 256);
    let m = marginals(&ModelParams::new(4, A3).unwrap()).unwrap();
    assert!(d.triple.max_abs_diff(&m.density(1, 1).unwrap()) < 1e-8);
}
