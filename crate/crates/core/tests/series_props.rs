//! Property tests for multi-index polynomial arithmetic against independent
//! oracles: dense convolution, exact rational evaluation, finite differences.

use basinscope::linalg::CMatrix;
use basinscope::series::Poly;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Signed;
use proptest::prelude::*;

const DIM: usize = 2;
const MAX_EXP: u32 = 4;

/// Dyadic coefficients keep products exact in binary floating point.
fn poly_strategy() -> impl Strategy<Value = Poly> {
    prop::collection::vec(
        (prop::collection::vec(0..=MAX_EXP, DIM), -16i32..=16),
        0..7,
    )
    .prop_map(|terms| {
        Poly::from_real_terms(
            DIM,
            terms
                .into_iter()
                .map(|(e, c)| (e, f64::from(c) / 8.0)),
        )
        .unwrap()
    })
}

fn point_strategy() -> impl Strategy<Value = [f64; 2]> {
    [-1.5f64..1.5, -1.5f64..1.5]
}

fn ev(p: &Poly, x: &[f64; 2]) -> f64 {
    p.evaluate_real(x).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Dense `(MAX_EXP+1)²` coefficient table, convolved directly.
fn dense(p: &Poly) -> Vec<Vec<f64>> {
    let n = (2 * MAX_EXP + 1) as usize;
    let mut d = vec![vec![0.0; n]; n];
    for (j, c) in p.terms() {
        d[j.get(0) as usize][j.get(1) as usize] += c.re;
    }
    d
}

fn convolve(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    if i + k < n && j + l < n {
                        out[i + k][j + l] += a[i][j] * b[k][l];
                    }
                }
            }
        }
    }
    out
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn exact_eval(p: &Poly, x: &[f64; 2]) -> BigRational {
    let (x0, x1) = (rational(x[0]), rational(x[1]));
    let mut acc = BigRational::from_integer(BigInt::from(0));
    for (j, c) in p.terms() {
        let mut term = rational(c.re);
        for _ in 0..j.get(0) {
            term *= &x0;
        }
        for _ in 0..j.get(1) {
            term *= &x1;
        }
        acc += term;
    }
    acc
}

proptest! {
    #[test]
    fn addition_is_associative(a in poly_strategy(), b in poly_strategy(), c in poly_strategy(), x in point_strategy()) {
        let l = a.add(&b).unwrap().add(&c).unwrap();
        let r = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(close(ev(&l, &x), ev(&r, &x), 1e-10));
    }

    #[test]
    fn multiplication_distributes(a in poly_strategy(), b in poly_strategy(), c in poly_strategy(), x in point_strategy()) {
        let trunc = a.degree() + b.degree().max(c.degree());
        let l = a.multiply(&b.add(&c).unwrap(), trunc).unwrap();
        let r = a.multiply(&b, trunc).unwrap().add(&a.multiply(&c, trunc).unwrap()).unwrap();
        prop_assert!(close(ev(&l, &x), ev(&r, &x), 1e-10));
        prop_assert!(close(ev(&l, &x), ev(&a, &x) * (ev(&b, &x) + ev(&c, &x)), 1e-10));
    }

    #[test]
    fn multiply_matches_dense_convolution(a in poly_strategy(), b in poly_strategy()) {
        let prod = a.multiply(&b, 2 * MAX_EXP * 2).unwrap();
        let want = convolve(&dense(&a), &dense(&b));
        let got = dense(&prod);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn truncated_product_drops_only_high_degrees(a in poly_strategy(), b in poly_strategy(), t in 0u32..8) {
        let full = a.multiply(&b, 100).unwrap();
        let cut = a.multiply(&b, t).unwrap();
        prop_assert_eq!(cut, full.truncate(t));
    }

    #[test]
    fn evaluation_matches_exact_rationals(a in poly_strategy(), x in point_strategy()) {
        let exact = exact_eval(&a, &x);
        let approx = ev(&a, &x);
        let back = rational(approx);
        let err = (back - &exact).abs();
        let scale = exact.abs() + BigRational::from_integer(BigInt::from(1));
        let tol = rational(1e-13) * scale;
        prop_assert!(err <= tol, "{approx} vs {exact}");
    }

    #[test]
    fn gradient_obeys_product_rule(a in poly_strategy(), b in poly_strategy(), x in point_strategy()) {
        let ab = a.multiply(&b, 100).unwrap();
        let (ga, gb, gab) = (a.gradient(), b.gradient(), ab.gradient());
        for i in 0..DIM {
            let want = ev(&ga[i], &x) * ev(&b, &x) + ev(&a, &x) * ev(&gb[i], &x);
            prop_assert!(close(ev(&gab[i], &x), want, 1e-9));
        }
    }

    #[test]
    fn gradient_matches_finite_differences(a in poly_strategy(), x in point_strategy()) {
        let h = 1e-5;
        let g = a.gradient();
        for i in 0..DIM {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let fd = (ev(&a, &xp) - ev(&a, &xm)) / (2.0 * h);
            prop_assert!(close(ev(&g[i], &x), fd, 1e-6), "{} vs {fd}", ev(&g[i], &x));
        }
    }

    #[test]
    fn recenter_round_trip(a in poly_strategy(), c in point_strategy()) {
        let back = a.recenter_real(&c).unwrap().recenter_real(&[-c[0], -c[1]]).unwrap();
        let scale = 1.0 + a.max_coeff_modulus();
        let diff = back.sub(&a).unwrap();
        prop_assert!(diff.max_coeff_modulus() < 1e-9 * scale);
    }

    #[test]
    fn recenter_is_a_shift(a in poly_strategy(), c in point_strategy(), y in point_strategy()) {
        let q = a.recenter_real(&c).unwrap();
        let shifted = [c[0] + y[0], c[1] + y[1]];
        prop_assert!(close(ev(&q, &y), ev(&a, &shifted), 1e-10));
    }

    #[test]
    fn linear_composition_is_pointwise(a in poly_strategy(), m in prop::array::uniform4(-2.0f64..2.0), x in point_strategy()) {
        let mat = CMatrix::from_rows(&[
            vec![Complex64::new(m[0], 0.0), Complex64::new(m[1], 0.0)],
            vec![Complex64::new(m[2], 0.0), Complex64::new(m[3], 0.0)],
        ]);
        let comp = a.compose_linear(&mat, 100).unwrap();
        let y = [m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]];
        prop_assert!(close(ev(&comp, &x), ev(&a, &y), 1e-9));
    }
}

#[test]
fn recenter_square_example() {
    let p = Poly::from_real_terms(1, [(vec![2], 1.0)]).unwrap();
    let q = p.recenter_real(&[1.0]).unwrap();
    let want = Poly::from_real_terms(1, [(vec![0], 1.0), (vec![1], 2.0), (vec![2], 1.0)]).unwrap();
    assert_eq!(q, want);
}
