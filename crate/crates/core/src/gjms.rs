//! The fractional GJMS operator on the round sphere `S^n`.
//!
//! `P_{2s}` acts diagonally on spherical harmonics of degree `l` with the
//! multiplier `α_{2s,n}(l) = Γ(l + n/2 + s) / Γ(l + n/2 - s)`, set to zero
//! where the denominator has a pole. Only zonal functions (harmonics depending
//! on the polar angle from the north pole `N`) are represented; evaluation
//! uses Gegenbauer polynomials normalised to 1 at `N`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln_gamma_signed, norm, pow, round, sqrt};

/// Tolerance for deciding that `l + n/2 - s` is a nonpositive integer.
const POLE_TOL: f64 = 1e-12;

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::param("s", "must be positive and finite"));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", "must be at least 2"));
    }
    Ok(())
}

/// Whether `x` is a nonpositive integer up to `POLE_TOL`.
fn is_pole(x: f64) -> bool {
    x <= POLE_TOL && (x - round(x)).abs() <= POLE_TOL
}

/// `α_{2s,n}(l) = Γ(l + n/2 + s) / Γ(l + n/2 - s)`, zero at denominator poles.
///
/// Integer `2s` uses the rising factorial; other orders go through log space
/// so that large `l` does not overflow.
pub fn multiplier(s: f64, n: usize, l: usize) -> f64 {
    let h = l as f64 + 0.5 * n as f64;
    let (a, b) = (h + s, h - s);
    if is_pole(b) {
        return 0.0;
    }
    // For integer 2s the ratio is the rising factorial (b)_{2s}, exact in
    // floating point for small arguments.
    let m = 2.0 * s;
    if m == round(m) && m <= 64.0 {
        return (0..m as usize).map(|k| b + k as f64).product();
    }
    log_ratio(a, b)
}

/// `Γ(a)/Γ(b)` through log-gamma with sign tracking.
fn log_ratio(a: f64, b: f64) -> f64 {
    let (la, sa) = ln_gamma_signed(a);
    let (lb, sb) = ln_gamma_signed(b);
    sa * sb * exp(la - lb)
}

/// Eigenvalue `l(l + n - 1)` of `-Δ` on `S^n`.
pub fn laplacian_eigenvalue(n: usize, l: usize) -> f64 {
    let l = l as f64;
    l * (l + n as f64 - 1.0)
}

/// Eigenvalue of `B = sqrt(-Δ + (n-1)²/4)` on degree-`l` harmonics, computed
/// from the square root. It equals `l + (n-1)/2`.
pub fn operator_b_eigenvalue(n: usize, l: usize) -> f64 {
    let h = 0.5 * (n as f64 - 1.0);
    sqrt(laplacian_eigenvalue(n, l) + h * h)
}

/// `Π_{k=1}^{s} (λ_l + (n/2 - k)(n/2 + k - 1))`: the integer-order GJMS
/// operator as a product of shifted Laplacians.
pub fn integer_order_product(s: u32, n: usize, l: usize) -> f64 {
    let lam = laplacian_eigenvalue(n, l);
    let h = 0.5 * n as f64;
    (1..=s).map(|k| lam + (h - k as f64) * (h + k as f64 - 1.0)).product()
}

/// `Π_{k=1}^{s} (B_l² - ((2s - 2k + 1)/2)²)` with `B_l = l + (n-1)/2`.
pub fn b_form_product(s: u32, n: usize, l: usize) -> f64 {
    let b = l as f64 + 0.5 * (n as f64 - 1.0);
    (1..=s)
        .map(|k| {
            let c = 0.5 * (2.0 * s as f64 - 2.0 * k as f64 + 1.0);
            b * b - c * c
        })
        .product()
}

/// `α_{2s,n}(l)` for `l = 0..=max_degree`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiplierTable {
    s: f64,
    n: usize,
    entries: Vec<f64>,
}

impl MultiplierTable {
    pub fn new(s: f64, n: usize, max_degree: usize) -> Result<Self> {
        check_s(s)?;
        check_n(n)?;
        let entries = (0..=max_degree).map(|l| multiplier(s, n, l)).collect();
        Ok(MultiplierTable { s, n, entries })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, l: usize) -> Option<f64> {
        self.entries.get(l).copied()
    }

    /// Degrees `l` where the pole rule set `α = 0`.
    pub fn poles(&self) -> Vec<usize> {
        let h = 0.5 * self.n as f64;
        (0..self.entries.len())
            .filter(|&l| is_pole(l as f64 + h - self.s))
            .collect()
    }
}

/// `v = Σ_l v_l Y_l` with `Y_l` the zonal harmonic of degree `l` about the
/// north pole, normalised by `Y_l(N) = 1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZonalFunction {
    n: usize,
    coeffs: Vec<f64>,
}

impl ZonalFunction {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coeffs", "must be finite"));
        }
        Ok(ZonalFunction { n, coeffs })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        ZonalFunction::new(n, alloc::vec![c])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Largest degree with a nonzero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| *c != 0.0)
    }

    /// `Σ v_l Y_l` at polar cosine `t = ⟨ω, N⟩`.
    pub fn eval_cos(&self, t: f64) -> f64 {
        let alpha = 0.5 * (self.n as f64 - 1.0);
        let mut acc = 0.0;
        let (mut prev, mut cur) = (0.0, 1.0);
        for (l, c) in self.coeffs.iter().enumerate() {
            if l == 1 {
                (prev, cur) = (cur, t);
            } else if l >= 2 {
                let lf = l as f64;
                let next = ((2.0 * lf + 2.0 * alpha - 2.0) * t * cur - (lf - 1.0) * prev) / (lf + 2.0 * alpha - 1.0);
                (prev, cur) = (cur, next);
            }
            acc += c * cur;
        }
        acc
    }

    /// Evaluates at a point of `S^n ⊂ R^{n+1}`; the last coordinate is the
    /// polar axis.
    pub fn eval(&self, omega: &[f64]) -> Result<f64> {
        if omega.len() != self.n + 1 {
            return Err(Error::Dimension {
                expected: self.n + 1,
                got: omega.len(),
            });
        }
        let r = norm(omega);
        if (r - 1.0).abs() > 1e-9 {
            return Err(Error::domain("point is not on the unit sphere"));
        }
        Ok(self.eval_cos(omega[self.n] / r))
    }
}

/// `P_{2s} v = Σ α_{2s,n}(l) v_l Y_l`.
pub fn apply_gjms_zonal(v: &ZonalFunction, table: &MultiplierTable) -> Result<ZonalFunction> {
    if v.n != table.n {
        return Err(Error::Dimension {
            expected: table.n,
            got: v.n,
        });
    }
    if let Some(d) = v.degree() {
        if d > table.max_degree() {
            return Err(Error::Truncation {
                degree: d,
                max_degree: table.max_degree(),
            });
        }
    }
    let coeffs = v.coeffs.iter().zip(&table.entries).map(|(c, a)| c * a).collect();
    Ok(ZonalFunction { n: v.n, coeffs })
}

/// `π_N^{-1}(x) = (2x / (1 + |x|²), (|x|² - 1)/(|x|² + 1))`.
pub fn inverse_stereographic(x: &[f64]) -> Vec<f64> {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    let d = 1.0 + r2;
    let mut out: Vec<f64> = x.iter().map(|c| 2.0 * c / d).collect();
    out.push((r2 - 1.0) / d);
    out
}

/// `u(x) = (2 / (1 + |x|²))^{(n - 2s)/2} v(π_N^{-1}(x))`.
pub fn stereo_pullback<V>(v: V, s: f64, n: usize, x: &[f64]) -> Result<f64>
where
    V: Fn(&[f64]) -> Result<f64>,
{
    check_s(s)?;
    check_n(n)?;
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    let r2: f64 = x.iter().map(|c| c * c).sum();
    let factor = pow(2.0 / (1.0 + r2), 0.5 * (n as f64 - 2.0 * s));
    Ok(factor * v(&inverse_stereographic(x))?)
}

/// `lim_{|x|→∞} u(x) / |x|^{2s-n} = 2^{(n-2s)/2} v(N)`, since `π_N^{-1}(x) → N`.
pub fn pullback_growth_limit(v_at_north: f64, s: f64, n: usize) -> f64 {
    pow(2.0, 0.5 * (n as f64 - 2.0 * s)) * v_at_north
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rel_diff;

    #[test]
    fn log_path_matches_rising_factorial() {
        for (s, n) in [(1.0, 4usize), (1.5, 3), (2.5, 7), (4.0, 8)] {
            for l in [0usize, 1, 5, 50, 500] {
                let h = l as f64 + 0.5 * n as f64;
                if h - s <= 0.0 {
                    continue;
                }
                let exact = multiplier(s, n, l);
                assert!(rel_diff(log_ratio(h + s, h - s), exact) < 1e-11, "{s} {n} {l}");
            }
        }
    }

    #[test]
    fn multiplier_examples() {
        assert!(rel_diff(multiplier(1.0, 4, 0), 2.0) < 1e-14);
        assert!(rel_diff(multiplier(1.0, 3, 1), 3.75) < 1e-14);
        assert!(rel_diff(multiplier(1.0, 3, 1), laplacian_eigenvalue(3, 1) + 0.75) < 1e-14);
        assert_eq!(multiplier(3.0, 4, 0), 0.0);
        assert!(rel_diff(multiplier(1.0, 3, 0), 0.75) < 1e-14);
    }

    #[test]
    fn pole_rule_is_exact() {
        let t = MultiplierTable::new(3.0, 4, 5).unwrap();
        assert_eq!(t.poles(), alloc::vec![0, 1]);
        assert_eq!(t.get(0), Some(0.0));
        assert_eq!(t.get(1), Some(0.0));
        assert!(t.get(2).unwrap() != 0.0);
        // Half-integer s with odd n.
        let t = MultiplierTable::new(2.5, 3, 3).unwrap();
        assert_eq!(t.poles(), alloc::vec![0, 1]);
    }

    #[test]
    fn large_degree_does_not_overflow() {
        let a = multiplier(2.3, 5, 10_000);
        assert!(a.is_finite() && a > 0.0);
        // α ~ l^{2s} for large l.
        let h = 10_000.0 + 2.5;
        assert!(rel_diff(a, pow(h, 4.6)) < 1e-3);
    }

    #[test]
    fn integer_order_agrees_with_products() {
        for s in 1..=4u32 {
            for n in 3..=8 {
                for l in 0..=50 {
                    let a = multiplier(s as f64, n, l);
                    let p = integer_order_product(s, n, l);
                    let b = b_form_product(s, n, l);
                    let scale = p.abs().max(1.0);
                    assert!((a - p).abs() <= 1e-10 * scale, "{s} {n} {l}: {a} {p}");
                    assert!((b - p).abs() <= 1e-10 * scale, "{s} {n} {l}: {b} {p}");
                }
            }
        }
    }

    #[test]
    fn b_eigenvalue_is_shifted_degree() {
        assert_eq!(operator_b_eigenvalue(3, 0), 1.0);
        assert_eq!(operator_b_eigenvalue(5, 2), 4.0);
        for n in 2..12 {
            for l in 0..200 {
                assert_eq!(operator_b_eigenvalue(n, l), l as f64 + 0.5 * (n as f64 - 1.0));
            }
        }
    }

    #[test]
    fn zonal_application() {
        let t = MultiplierTable::new(1.0, 3, 4).unwrap();
        let v = ZonalFunction::constant(3, 1.0).unwrap();
        let w = apply_gjms_zonal(&v, &t).unwrap();
        assert!(rel_diff(w.coeffs()[0], 0.75) < 1e-14);

        let t = MultiplierTable::new(3.0, 4, 1).unwrap();
        let v = ZonalFunction::new(4, alloc::vec![2.0, -1.0]).unwrap();
        assert!(apply_gjms_zonal(&v, &t).unwrap().coeffs().iter().all(|c| *c == 0.0));

        let v = ZonalFunction::new(4, alloc::vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            apply_gjms_zonal(&v, &t),
            Err(Error::Truncation {
                degree: 3,
                max_degree: 1
            })
        ));
    }

    #[test]
    fn zonal_harmonics_match_closed_forms() {
        // n = 2: Legendre polynomials.
        let t = 0.3f64;
        let v = ZonalFunction::new(2, alloc::vec![0.0, 0.0, 1.0]).unwrap();
        assert!((v.eval_cos(t) - 0.5 * (3.0 * t * t - 1.0)).abs() < 1e-15);
        // n = 3: Chebyshev of the second kind, U_l(t)/(l+1).
        let v = ZonalFunction::new(3, alloc::vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((v.eval_cos(t) - (8.0 * t * t * t - 4.0 * t) / 4.0).abs() < 1e-15);
        let v = ZonalFunction::new(5, alloc::vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((v.eval_cos(1.0) - 10.0).abs() < 1e-13);
    }

    #[test]
    fn pullback_examples() {
        let one = |_: &[f64]| Ok(1.0);
        let x = [0.4, -1.0, 2.0];
        let r2 = 0.16 + 1.0 + 4.0;
        let u = stereo_pullback(one, 0.7, 3, &x).unwrap();
        assert!(rel_diff(u, pow(2.0 / (1.0 + r2), 0.5 * (3.0 - 1.4))) < 1e-14);

        let v = ZonalFunction::new(3, alloc::vec![1.0, 0.5, 0.25]).unwrap();
        let eval = |w: &[f64]| v.eval(w);
        let u = stereo_pullback(eval, 1.5, 3, &x).unwrap();
        assert!(rel_diff(u, v.eval(&inverse_stereographic(&x)).unwrap()) < 1e-14);

        let (s, n) = (2.5, 3);
        let north = v.eval_cos(1.0);
        let limit = pullback_growth_limit(north, s, n);
        let mut last = f64::INFINITY;
        for r in [1e2, 1e3, 1e4, 1e5] {
            let y = [r, 0.0, 0.0];
            let ratio = stereo_pullback(eval, s, n, &y).unwrap() / pow(r, 2.0 * s - n as f64);
            let err = (ratio - limit).abs();
            assert!(err < last);
            last = err;
        }
        assert!(last < 1e-4 * limit.abs());
    }

    #[test]
    fn inverse_stereographic_lands_on_sphere() {
        for x in [[0.0, 0.0], [1.0, 0.0], [3.0, -4.0]] {
            let w = inverse_stereographic(&x);
            assert!((norm(&w) - 1.0).abs() < 1e-15);
        }
        assert_eq!(inverse_stereographic(&[0.0, 0.0]), alloc::vec![0.0, 0.0, -1.0]);
    }
}
