//! Property tests for the algebraic identities and structural invariants.

use proptest::prelude::*;
use rieszsym_core::geometry::{kelvin_value, power_difference_bound};
use rieszsym_core::gjms::{b_form_product, integer_order_product, multiplier};
use rieszsym_core::movingspheres::{kernel_k, kernel_k_forms};
use rieszsym_core::nonlinearity::{hn_ratio, ConditionSample};
use rieszsym_core::{radial_field, rel_diff, InversionSphere, NonlinearitySpec, Point};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    (r > 0.1).then(|| v.iter().map(|c| c / r).collect())
}

/// Centre `x`, radius `λ` and two points `x + λ t θ` with `t ∈ [0.1, 10]`.
///
/// Keeping `|ξ - x| / λ` within two decades of 1 bounds the conditioning of
/// the image coordinates, which is what the 1e-12 tolerances assume.
fn configuration() -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>, Vec<f64>)> {
    (2usize..7)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-2.0f64..2.0, n),
                -1.0f64..1.0,
                prop::collection::vec(-1.0f64..1.0, n),
                -1.0f64..1.0,
                prop::collection::vec(-1.0f64..1.0, n),
                -1.0f64..1.0,
            )
        })
        .prop_filter_map("degenerate direction", |(x, ll, d1, t1, d2, t2)| {
            let lambda = 10f64.powf(ll);
            let (e1, e2) = (unit(&d1)?, unit(&d2)?);
            let at = |e: &[f64], t: f64| -> Vec<f64> {
                x.iter().zip(e).map(|(c, v)| c + lambda * 10f64.powf(t) * v).collect()
            };
            let (xi, z) = (at(&e1, t1), at(&e2, t2));
            Some((x, lambda, xi, z))
        })
}

/// Largest coordinate scale over the smallest distance being compared.
fn conditioning(pts: &[&[f64]], d: f64) -> f64 {
    pts.iter().flat_map(|p| p.iter()).fold(1e-300f64, |m, c| m.max(c.abs())) / d
}

/// Centre `x`, a unit direction `θ` and an exponent `u` so that
/// `x + λ(1 + 10^u)θ` lies outside `B_λ(x)`.
fn exterior_setup() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    (2usize..7)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
                -3.0f64..2.0,
            )
        })
        .prop_filter_map("degenerate direction", |(x, d, u)| Some((x, unit(&d)?, u)))
}

fn outside(x: &[f64], lambda: f64, theta: &[f64], u: f64) -> Vec<f64> {
    x.iter()
        .zip(theta)
        .map(|(c, t)| c + lambda * (1.0 + 10f64.powf(u)) * t)
        .collect()
}

fn sphere(x: &[f64], lambda: f64) -> InversionSphere {
    InversionSphere::new(Point::new(x).unwrap(), lambda).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn inversion_is_an_involution((x, lambda, xi, _z) in configuration()) {
        let s = sphere(&x, lambda);
        let back = s.invert(&s.invert(&xi).unwrap()).unwrap();
        prop_assert!(dist(&back, &xi) <= 1e-12 * dist(&xi, &x).max(1e-300) * conditioning(&[&x, &xi], dist(&xi, &x)));
    }

    #[test]
    fn distance_identity((x, lambda, xi, z) in configuration()) {
        let s = sphere(&x, lambda);
        let (xi_h, z_h) = (s.invert(&xi).unwrap(), s.invert(&z).unwrap());
        prop_assume!(conditioning(&[&x, &xi, &z], dist(&xi, &z)) < 1e3);
        prop_assume!(conditioning(&[&x, &xi_h, &z_h], dist(&xi_h, &z_h)) < 1e3);
        let lhs = dist(&z, &x) * dist(&xi, &x) * dist(&xi_h, &z_h);
        prop_assert!(rel_diff(lhs, lambda * lambda * dist(&xi, &z)) < 1e-12);
    }

    #[test]
    fn product_identity((x, lambda, _xi, z) in configuration()) {
        let z_h = sphere(&x, lambda).invert(&z).unwrap();
        prop_assert!(rel_diff(dist(&z_h, &x) * dist(&z, &x), lambda * lambda) < 1e-13);
    }

    #[test]
    fn double_kelvin((x, lambda, xi, _z) in configuration(), p in 0.1f64..6.0) {
        let n = x.len();
        let u = radial_field(n, |r| (1.0 + r * r).powf(0.7) + 0.3 * (-r).exp());
        let s = sphere(&x, lambda);
        let xi_h = s.invert(&xi).unwrap();
        let lhs = kelvin_value(&u, &s, p, &xi_h).unwrap();
        let rhs = (lambda / dist(&xi, &x)).powf(p) * (1.0 + xi.iter().map(|c| c * c).sum::<f64>()).powf(0.7)
            + (lambda / dist(&xi, &x)).powf(p) * 0.3 * (-xi.iter().map(|c| c * c).sum::<f64>().sqrt()).exp();
        prop_assert!(rel_diff(lhs, rhs) < 1e-12);
    }

    #[test]
    fn power_difference_inequality(a in 1e-6f64..10.0, b in 1e-6f64..10.0, s in 1e-3f64..5.0) {
        let lhs = (a.powf(s) - b.powf(s)).abs();
        prop_assert!(lhs <= power_difference_bound(a, b, s) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn kernel_positive_and_forms_agree(
        (x, theta, u) in exterior_setup(),
        lambda in 0.01f64..10.0,
        d in prop::collection::vec(-1.0f64..1.0, 6),
        v in -2.0f64..2.0,
        p in 0.1f64..6.0,
    ) {
        let xi = outside(&x, lambda, &theta, u);
        let Some(phi) = unit(&d[..x.len()]) else { return Ok(()) };
        let z = outside(&x, lambda, &phi, v);
        let k = kernel_k(&x, lambda, &xi, &z, p).unwrap();
        prop_assert!(k > 0.0);
        let (k1, k2) = kernel_k_forms(&x, lambda, &xi, &z, p).unwrap();
        prop_assert!(rel_diff(k1, k2) < 1e-10, "{} {}", k1, k2);
        // The literal forms cancel near the sphere; the stable form does not.
        prop_assert!(rel_diff(k, k1) < 1e-9 / 10f64.powf(u.min(v).min(0.0)), "{} {}", k, k1);
    }

    #[test]
    fn kernel_vanishes_on_sphere((x, lambda, xi, z) in configuration(), p in 0.1f64..6.0) {
        let d = dist(&xi, &x);
        prop_assume!(d > 1e-6 && dist(&z, &x) > 1e-6 * lambda);
        let on: Vec<f64> = x.iter().zip(&xi).map(|(c, v)| c + lambda * (v - c) / d).collect();
        let k = kernel_k(&x, lambda, &on, &z, p).unwrap();
        prop_assert!(k.abs() <= 1e-12 * dist(&on, &z).powf(p).max(1e-300));
    }

    #[test]
    fn hn_ratio_below_one((x, theta, u) in exterior_setup(), frac in 1e-6f64..0.999_999) {
        let xn = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assume!(xn > 1e-6);
        let lambda = frac * (1.0 + xn * xn).sqrt();
        let z = outside(&x, lambda, &theta, u);
        prop_assert!(hn_ratio(&x, lambda, &z).unwrap() < 1.0);
    }

    #[test]
    fn margin_monotone_in_b(
        (x, theta, u) in exterior_setup(),
        frac in 0.01f64..0.99,
        a in 1e-3f64..1e3,
        up in 0.0f64..3.0,
        q in 0.1f64..8.0,
    ) {
        let xn = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assume!(xn > 1e-3);
        let lambda = frac * xn;
        let z = outside(&x, lambda, &theta, u);
        let spec = NonlinearitySpec::hyder_ngo(0.0, q, 2.0, x.len()).unwrap();
        let sample = |b: f64| ConditionSample {
            x: Point::new(&x).unwrap(),
            lambda,
            z: Point::new(&z).unwrap(),
            a,
            b,
        };
        let at_a = spec.condition_at(&sample(a)).unwrap();
        let at_b = spec.condition_at(&sample(a * 10f64.powf(up))).unwrap();
        prop_assert!(at_b.lhs - at_b.rhs >= (at_a.lhs - at_a.rhs) - 1e-12 * at_a.lhs.max(at_a.rhs));
    }

    #[test]
    fn multipliers_increase_past_poles(s in 0.05f64..6.0, n in 2usize..10, l in 0usize..300) {
        let h = l as f64 + n as f64 / 2.0 - s;
        prop_assume!(h > 1e-9);
        prop_assert!(multiplier(s, n, l + 1) > multiplier(s, n, l));
    }

    #[test]
    fn integer_order_consistency(s in 1u32..5, n in 3usize..9, l in 0usize..51) {
        let a = multiplier(s as f64, n, l);
        let p = integer_order_product(s, n, l);
        let b = b_form_product(s, n, l);
        prop_assert!((a - p).abs() <= 1e-10 * p.abs().max(1.0));
        prop_assert!((b - p).abs() <= 1e-10 * p.abs().max(1.0));
    }
}

#[test]
fn bubble_is_invariant_under_unit_kelvin() {
    let c = 1.0725146985555128;
    for p in [0.5, 2.0, 3.3] {
        let u = radial_field(3, move |r: f64| c * (1.0 + r * r).powf(0.5 * p));
        let s = InversionSphere::new(Point::origin(3), 1.0).unwrap();
        for xi in [[0.1, 0.2, 0.3], [2.0, 0.0, -1.0], [40.0, 3.0, 2.0]] {
            let k = kelvin_value(&u, &s, p, &xi).unwrap();
            let direct = c * (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).powf(0.5 * p);
            assert!(rel_diff(k, direct) < 1e-13);
        }
    }
}
