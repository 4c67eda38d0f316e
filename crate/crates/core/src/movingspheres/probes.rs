use alloc::vec::Vec;

use super::kernel::kelvin_gap;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::Point;
use crate::math::{abs, norm, pow, sqrt};
use crate::par::map_indexed;

/// Unit directions with good angular coverage of `S^{n-1}`.
///
/// For `n = 3` these are the 12 icosahedron vertices (a spherical 5-design);
/// otherwise `±e_i` together with `(±e_i ± e_j)/√2`, which form a 3-design.
pub fn design_directions(n: usize) -> Vec<Vec<f64>> {
    if n == 3 {
        let g = 0.5 * (1.0 + sqrt(5.0));
        let s = 1.0 / sqrt(1.0 + g * g);
        let mut out = Vec::with_capacity(12);
        for a in [-1.0, 1.0] {
            for b in [-1.0, 1.0] {
                out.push(alloc::vec![0.0, a * s, b * g * s]);
                out.push(alloc::vec![a * s, b * g * s, 0.0]);
                out.push(alloc::vec![b * g * s, 0.0, a * s]);
            }
        }
        return out;
    }
    let mut out = Vec::new();
    for i in 0..n {
        for sign in [-1.0, 1.0] {
            let mut v = alloc::vec![0.0; n];
            v[i] = sign;
            out.push(v);
        }
    }
    let h = 1.0 / sqrt(2.0);
    for i in 0..n {
        for j in i + 1..n {
            for (a, b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut v = alloc::vec![0.0; n];
                v[i] = a * h;
                v[j] = b * h;
                out.push(v);
            }
        }
    }
    out
}

/// Probe set for the comparison `u_{x,λ} ≥ u` outside `B_λ(x)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeConfig {
    /// Probe spheres `|y - x| = λ · 10^{k · decades / (radii - 1)}`.
    pub radii: usize,
    pub decades: f64,
    /// An extra probe sphere at `far_factor · λ` standing in for infinity.
    pub far_factor: f64,
    /// Relative slack: a gap counts as negative only below `-slack · u(y)`.
    pub slack: f64,
    /// Number of `λ` values in the initial geometric scan.
    pub scan_points: usize,
    /// Smallest scanned `λ` as a fraction of `|x|`.
    pub scan_floor: f64,
    /// Bisection stops at this resolution relative to `|x|`.
    pub resolution: f64,
    pub max_bisections: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            radii: 13,
            decades: 3.0,
            far_factor: 1e6,
            slack: 1e-8,
            scan_points: 32,
            scan_floor: 1e-3,
            resolution: 1e-4,
            max_bisections: 40,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii < 2 || self.scan_points < 2 {
            return Err(Error::param("probes", "need at least two radii and two scan points"));
        }
        if !(self.decades > 0.0 && self.far_factor >= 1.0 && self.slack >= 0.0) {
            return Err(Error::param("probes", "need decades > 0, far_factor ≥ 1, slack ≥ 0"));
        }
        if !(self.scan_floor > 0.0 && self.resolution > 0.0) {
            return Err(Error::param("probes", "need scan_floor > 0 and resolution > 0"));
        }
        Ok(())
    }

    /// `λ_cap = 2 (|x| + 1)`: the largest `λ` scanned.
    pub fn lambda_cap(&self, x_norm: f64) -> f64 {
        2.0 * (x_norm + 1.0)
    }
}

/// A probe point where `u_{x,λ}(y) - u(y)` was most negative.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GapWitness {
    pub lambda: f64,
    pub y: Vec<f64>,
    pub gap: f64,
    pub u_y: f64,
}

impl GapWitness {
    /// `gap / u(y)`.
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.u_y
    }
}

fn probe_points(x: &Point, lambda: f64, cfg: &ProbeConfig, dirs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut radii: Vec<f64> = (0..cfg.radii)
        .map(|k| lambda * pow(10.0, cfg.decades * k as f64 / (cfg.radii - 1) as f64))
        .collect();
    radii.push(lambda * cfg.far_factor);
    let mut out = Vec::with_capacity(radii.len() * dirs.len());
    for r in &radii {
        for d in dirs {
            out.push(x.offset(d, *r).coords().to_vec());
        }
    }
    out
}

fn probe_directions(x: &Point) -> Vec<Vec<f64>> {
    let mut dirs = design_directions(x.dim());
    let xn = x.norm();
    if xn > 0.0 {
        let xhat: Vec<f64> = x.iter().map(|c| c / xn).collect();
        dirs.push(xhat.iter().map(|c| -c).collect());
        dirs.push(xhat);
    }
    dirs
}

/// Minimum over the probe set of `(u_{x,λ}(y) - u(y)) / u(y)`, with the
/// probe where it is attained.
pub fn min_gap<F: Field + ?Sized>(u: &F, x: &Point, lambda: f64, p: f64, cfg: &ProbeConfig) -> Result<GapWitness> {
    let dirs = probe_directions(x);
    min_gap_with(u, x, lambda, p, cfg, &dirs)
}

fn min_gap_with<F: Field + ?Sized>(
    u: &F,
    x: &Point,
    lambda: f64,
    p: f64,
    cfg: &ProbeConfig,
    dirs: &[Vec<f64>],
) -> Result<GapWitness> {
    let pts = probe_points(x, lambda, cfg, dirs);
    let vals = map_indexed(pts.len(), |i| -> Result<(f64, f64)> {
        let gap = kelvin_gap(u, x, lambda, p, &pts[i])?;
        Ok((gap, u.value(&pts[i])?))
    });
    let mut best: Option<GapWitness> = None;
    for (i, v) in vals.into_iter().enumerate() {
        let (gap, u_y) = v?;
        let rel = gap / u_y;
        if best.as_ref().is_none_or(|b| rel < b.relative_gap()) {
            best = Some(GapWitness {
                lambda,
                y: pts[i].clone(),
                gap,
                u_y,
            });
        }
    }
    best.ok_or_else(|| Error::domain("empty probe set"))
}

/// Outcome of the critical-radius search at one centre.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LambdaBar {
    pub x: Point,
    /// Largest `λ` for which every `λ' ≤ λ` tested passed.
    pub estimate: f64,
    /// Every scanned `λ` up to `λ_cap` passed; the true value may be larger.
    pub saturated: bool,
    /// The comparison already failed at the smallest scanned `λ`, which a
    /// solution of the equation never does.
    pub failed_at_small_lambda: bool,
    /// The first failing probe found, if any.
    pub witness: Option<GapWitness>,
    /// `(λ, min relative gap)` for every `λ` evaluated, in evaluation order.
    pub scan: Vec<(f64, f64)>,
}

/// Estimates `λ̄(x) = sup{μ : u_{x,λ} ≥ u on |y - x| ≥ λ for all λ < μ}`.
///
/// Scans `λ` geometrically from `scan_floor · |x|` to `λ_cap`, then bisects
/// between the last pass and the first failure.
pub fn lambda_bar_estimate<F: Field + ?Sized>(u: &F, x: &Point, p: f64, cfg: &ProbeConfig) -> Result<LambdaBar> {
    cfg.validate()?;
    let xn = x.norm();
    if !(xn > 0.0) {
        return Err(Error::domain("λ̄(x) is only defined for x ≠ 0"));
    }
    if x.dim() != u.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: x.dim(),
        });
    }
    let dirs = probe_directions(x);
    let mut scan = Vec::new();
    let eval = |lambda: f64, scan: &mut Vec<(f64, f64)>| -> Result<(bool, GapWitness)> {
        let w = min_gap_with(u, x, lambda, p, cfg, &dirs)?;
        scan.push((lambda, w.relative_gap()));
        Ok((w.relative_gap() >= -cfg.slack, w))
    };
    let lo = cfg.scan_floor * xn;
    let cap = cfg.lambda_cap(xn);
    let m = cfg.scan_points;
    let mut last_pass = None;
    let mut first_fail = None;
    for k in 0..m {
        let lambda = lo * pow(cap / lo, k as f64 / (m - 1) as f64);
        let (ok, w) = eval(lambda, &mut scan)?;
        if ok {
            last_pass = Some(lambda);
        } else {
            first_fail = Some((lambda, w));
            break;
        }
    }
    let Some((mut hi, mut witness)) = first_fail else {
        return Ok(LambdaBar {
            x: x.clone(),
            estimate: cap,
            saturated: true,
            failed_at_small_lambda: false,
            witness: None,
            scan,
        });
    };
    let Some(mut good) = last_pass else {
        return Ok(LambdaBar {
            x: x.clone(),
            estimate: 0.0,
            saturated: false,
            failed_at_small_lambda: true,
            witness: Some(witness),
            scan,
        });
    };
    for _ in 0..cfg.max_bisections {
        if hi - good <= cfg.resolution * xn {
            break;
        }
        let mid = 0.5 * (good + hi);
        let (ok, w) = eval(mid, &mut scan)?;
        if ok {
            good = mid;
        } else {
            hi = mid;
            witness = w;
        }
    }
    Ok(LambdaBar {
        x: x.clone(),
        estimate: good,
        saturated: false,
        failed_at_small_lambda: false,
        witness: Some(witness),
        scan,
    })
}

/// Outcome of the small-radius monotonicity check along one ray.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonotonicityReport {
    /// Estimate of `sup |∇ log u|` over the probe ball.
    pub grad_log_sup: f64,
    /// `min(1, p / (2 sup |∇ log u|))`.
    pub predicted_radius: f64,
    /// End of the interval actually checked (`λ₁` when supplied).
    pub checked_radius: f64,
    pub samples: usize,
    /// Consecutive samples where `r^{-p/2} u(x + rθ)` increased by more than
    /// `1e-9` relative.
    pub increases: usize,
    /// Finite differences at two step sizes disagreed by more than 10%.
    pub unstable_gradient: bool,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        !self.unstable_gradient && self.increases == 0
    }
}

/// Checks that `r ↦ r^{-p/2} u(x + rθ)` is nonincreasing on
/// `(0, min(1, p / (2 sup|∇ log u|)))`, with the supremum taken over
/// `B_{r_probe}(x)`. `lambda1` overrides the interval end.
pub fn small_lambda_monotonicity<F: Field + ?Sized>(
    u: &F,
    x: &Point,
    p: f64,
    theta: &[f64],
    r_probe: f64,
    lambda1: Option<f64>,
) -> Result<MonotonicityReport> {
    let n = x.dim();
    if theta.len() != n || u.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: theta.len(),
        });
    }
    let tn = norm(theta);
    if !(tn > 0.0) || !(r_probe > 0.0) {
        return Err(Error::param("theta", "direction must be nonzero and r_probe positive"));
    }
    let theta: Vec<f64> = theta.iter().map(|c| c / tn).collect();
    let (g1, g2) = grad_log_sup(u, x, r_probe)?;
    let unstable = abs(g1 - g2) > 0.1 * g1.max(g2).max(1e-12);
    let g = g1.max(g2);
    let predicted = if g > 0.0 { (p / (2.0 * g)).min(1.0) } else { 1.0 };
    let checked = lambda1.unwrap_or(predicted).min(r_probe);
    let samples = 2000;
    let mut increases = 0;
    let mut prev = f64::INFINITY;
    for k in 1..=samples {
        let r = checked * k as f64 / samples as f64;
        let v = pow(r, -0.5 * p) * u.value(&x.offset(&theta, r))?;
        if v > prev * (1.0 + 1e-9) {
            increases += 1;
        }
        prev = v;
    }
    Ok(MonotonicityReport {
        grad_log_sup: g,
        predicted_radius: predicted,
        checked_radius: checked,
        samples,
        increases,
        unstable_gradient: unstable,
    })
}

/// Central-difference `sup |∇ log u|` over a probe set in `B_r(x)` at step
/// sizes `h` and `h/2`.
fn grad_log_sup<F: Field + ?Sized>(u: &F, x: &Point, r: f64) -> Result<(f64, f64)> {
    let n = x.dim();
    let dirs = design_directions(n);
    let mut pts = alloc::vec![x.clone()];
    for k in 1..=64 {
        let rad = r * k as f64 / 64.0;
        for d in &dirs {
            pts.push(x.offset(d, rad));
        }
    }
    let h = 1e-4 * r.min(1.0);
    let grads = map_indexed(pts.len(), |i| -> Result<(f64, f64)> {
        let y = &pts[i];
        let mut out = [0.0f64; 2];
        for (slot, step) in out.iter_mut().zip([h, 0.5 * h]) {
            let mut s2 = 0.0;
            for j in 0..n {
                let mut e = alloc::vec![0.0; n];
                e[j] = 1.0;
                let up = u.value(&y.offset(&e, step))?;
                let dn = u.value(&y.offset(&e, -step))?;
                let d = (crate::math::ln(up) - crate::math::ln(dn)) / (2.0 * step);
                s2 += d * d;
            }
            *slot = sqrt(s2);
        }
        Ok((out[0], out[1]))
    });
    let mut g = (0.0f64, 0.0f64);
    for v in grads {
        let (a, b) = v?;
        g = (g.0.max(a), g.1.max(b));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{radial_field, ShiftedField};

    fn bubble() -> impl Field {
        radial_field(3, |r| 1.0725146985555128 * (1.0 + r * r))
    }

    #[test]
    fn icosahedron_is_unit_and_balanced() {
        let d = design_directions(3);
        assert_eq!(d.len(), 12);
        for k in 0..3 {
            assert!(d.iter().map(|v| v[k]).sum::<f64>().abs() < 1e-14);
        }
        assert!(d.iter().all(|v| (norm(v) - 1.0).abs() < 1e-14));
        assert_eq!(design_directions(4).len(), 8 + 24);
    }

    #[test]
    fn bubble_lambda_bar_exceeds_norm() {
        for xn in [0.1, 0.5, 2.0, 9.0] {
            let x = Point::on_axis(3, 1, xn);
            let lb = lambda_bar_estimate(&bubble(), &x, 2.0, &ProbeConfig::default()).unwrap();
            assert!(lb.estimate >= xn * (1.0 - 1e-3), "{xn}: {}", lb.estimate);
            let exact = sqrt(1.0 + xn * xn);
            assert!(
                lb.saturated || (lb.estimate - exact).abs() < 2e-3 * exact,
                "{xn}: {}",
                lb.estimate
            );
        }
    }

    #[test]
    fn symmetric_about_centre_saturates() {
        let c = [0.5, 0.0, 0.0];
        let u = ShiftedField::new(radial_field(3, |r| pow(1.0 + r * r, 0.5)), &c).unwrap();
        let lb = lambda_bar_estimate(&u, &Point::new(&c).unwrap(), 2.0, &ProbeConfig::default()).unwrap();
        assert!(lb.saturated && lb.witness.is_none());
    }

    #[test]
    fn asymmetric_field_has_witness() {
        let u = crate::field::FnField::new(3, |y: &[f64]| {
            let r2 = y.iter().map(|c| c * c).sum::<f64>();
            let b = (y[0] - 2.0).powi(2) + y[1] * y[1] + y[2] * y[2];
            1.07 * (1.0 + r2) + 50.0 * libm::exp(-b)
        });
        let x = Point::new(&[-2.0, 0.0, 0.0]).unwrap();
        let lb = lambda_bar_estimate(&u, &x, 2.0, &ProbeConfig::default()).unwrap();
        assert!(lb.estimate < 2.0 * (1.0 - 1e-3), "{}", lb.estimate);
        let w = lb.witness.unwrap();
        assert!(w.gap < 0.0 && w.lambda > lb.estimate);
    }

    #[test]
    fn monotonicity_for_constant_and_bubble() {
        let one = radial_field(3, |_| 2.0);
        let x = Point::on_axis(3, 0, 1.0);
        let r = small_lambda_monotonicity(&one, &x, 2.0, &[-1.0, 0.0, 0.0], 1.0, None).unwrap();
        assert!(r.holds() && r.predicted_radius == 1.0);

        let r = small_lambda_monotonicity(&bubble(), &x, 2.0, &[-1.0, 0.0, 0.0], 1.0, None).unwrap();
        assert!(r.holds(), "{r:?}");
        // |∇ log u| = 2|y|/(1+|y|²) peaks at |y| = 1 with value 1.
        assert!((r.grad_log_sup - 1.0).abs() < 1e-3, "{}", r.grad_log_sup);
        assert!((r.predicted_radius - 1.0).abs() < 1e-3);
    }

    #[test]
    fn spike_shrinks_interval() {
        let spike = radial_field(3, |r| 1.0 + 50.0 * libm::exp(-100.0 * (r - 1.2) * (r - 1.2)));
        let x = Point::on_axis(3, 0, 1.0);
        let r = small_lambda_monotonicity(&spike, &x, 2.0, &[1.0, 0.0, 0.0], 0.5, None).unwrap();
        assert!(r.predicted_radius < 0.2, "{}", r.predicted_radius);
        assert!(r.increases == 0 && !r.unstable_gradient, "{r:?}");
        let forced = small_lambda_monotonicity(&spike, &x, 2.0, &[1.0, 0.0, 0.0], 0.5, Some(0.5)).unwrap();
        assert!(forced.increases > 0);
    }
}
