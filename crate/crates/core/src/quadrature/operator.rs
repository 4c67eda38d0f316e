use alloc::vec::Vec;

use super::grid::{RadialGrid, TailModel};
use super::radial::RadialField;
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::math::{abs, ceil, exp, floor, ln, log10, pow, powi, sin, sphere_area, PI};
use crate::nonlinearity::NonlinearitySpec;
use crate::par::map_indexed;

/// Relative closeness `|ρ - r| ≤ NEAR_DIAGONAL · (ρ + r)` at which the
/// angular rule is doubled for non-even `p`.
const NEAR_DIAGONAL: f64 = 0.05;
const TAIL_POINTS: usize = 24;
const MID_POINTS: usize = 16;
const MID_PANELS_PER_DECADE: f64 = 4.0;

/// Gauss–Legendre rule for `θ ↦ (ρ² + r² - 2ρr cos θ)^{p/2}` against
/// `|S^{n-2}| sin^{n-2} θ dθ` on `[0, π]`.
#[derive(Debug, Clone)]
pub(crate) struct AngularRule {
    half_p: f64,
    even: bool,
    coarse: Vec<(f64, f64)>,
    fine: Vec<(f64, f64)>,
}

impl AngularRule {
    pub(crate) fn new(p: f64, n: usize, order: usize) -> Self {
        let half_p = 0.5 * p;
        let even = half_p == floor(half_p) && half_p < 64.0;
        let build = |m: usize| -> Vec<(f64, f64)> {
            let s = sphere_area(n - 2);
            GaussLegendre::new(m)
                .mapped(0.0, PI)
                .map(|(t, w)| {
                    let h = sin(0.5 * t);
                    (h * h, s * w * powi(sin(t), n as i32 - 2))
                })
                .collect()
        };
        AngularRule {
            half_p,
            even,
            coarse: build(order),
            fine: if even { Vec::new() } else { build(2 * order) },
        }
    }

    /// `A_p(ρ, r)`, written with `(ρ - r)² + 4ρr sin²(θ/2)` to avoid
    /// cancellation near the diagonal.
    pub(crate) fn eval(&self, rho: f64, r: f64) -> f64 {
        let d2 = (rho - r) * (rho - r);
        let c = 4.0 * rho * r;
        if self.even {
            let k = self.half_p as i32;
            return self.coarse.iter().map(|(s2, w)| w * powi(d2 + c * s2, k)).sum();
        }
        let rule = if abs(rho - r) <= NEAR_DIAGONAL * (rho + r) {
            &self.fine
        } else {
            &self.coarse
        };
        rule.iter().map(|(s2, w)| w * pow(d2 + c * s2, self.half_p)).sum()
    }
}

/// `A_p(ρ, r) = ∫_{S^{n-1}} |ρ e_1 - r θ|^p dσ(θ)`, the spherical average of
/// the kernel scaled by `|S^{n-1}|`.
pub fn angular_kernel(rho: f64, r: f64, p: f64, n: usize, order: usize) -> Result<f64> {
    if order < 4 {
        return Err(Error::param("order", "must be at least 4"));
    }
    if n < 2 {
        return Err(Error::param("n", "dimension must be at least 2"));
    }
    if !(p > 0.0) || !(rho >= 0.0) || !(r >= 0.0) {
        return Err(Error::param("p", "need p > 0 and ρ, r ≥ 0"));
    }
    Ok(AngularRule::new(p, n, order).eval(rho, r))
}

/// How the source term was continued beyond `R_max` in one application.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum SourceTail {
    /// The grid's tail model is `None`.
    Truncated,
    /// The source vanishes at the outermost node.
    Compact,
    PowerLaw {
        exponent: f64,
    },
    /// The decay is too slow for the operator to converge; the integral was
    /// truncated at `R_max`.
    NonIntegrable {
        exponent: f64,
    },
}

impl SourceTail {
    pub fn is_integrable(&self) -> bool {
        !matches!(self, SourceTail::NonIntegrable { .. })
    }
}

#[derive(Debug, Clone, Copy)]
struct TailAnchor {
    r_n: f64,
    f_n: f64,
    gamma: f64,
}

fn fit_tail(grid: &RadialGrid, source: &[f64], required: f64) -> (SourceTail, Option<TailAnchor>) {
    let m = source.len();
    let (r_n, f_n) = (grid.nodes()[m - 1], source[m - 1]);
    if matches!(grid.tail(), TailModel::None) {
        return (SourceTail::Truncated, None);
    }
    if !(f_n > 0.0) {
        return (SourceTail::Compact, None);
    }
    let gamma = match grid.tail() {
        TailModel::PowerLaw(g) => g,
        _ => {
            let k = grid.fit_window();
            let pts: Vec<(f64, f64)> = (m - k..m)
                .filter(|&i| source[i] > 0.0)
                .map(|i| (ln(grid.nodes()[i]), ln(source[i])))
                .collect();
            if pts.len() < 2 {
                return (SourceTail::Compact, None);
            }
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            -sxy / sxx
        }
    };
    if gamma > required {
        (
            SourceTail::PowerLaw { exponent: gamma },
            Some(TailAnchor { r_n, f_n, gamma }),
        )
    } else {
        (SourceTail::NonIntegrable { exponent: gamma }, None)
    }
}

/// Quadrature for `∫_{|y| > R_max} |ρ e_1 - y|^p g(|y|) dy` with `g` a power
/// law, precomputed for one output radius.
#[derive(Debug, Clone)]
struct TailRow {
    /// `(r, w r^{n-1} A_p(ρ, r))` on `[R_max, ρ]` when `ρ > R_max`.
    mid: Vec<(f64, f64)>,
    /// Start of the far range, `max(R_max, ρ)`.
    base: f64,
    /// `(t, w, h(t) - h(0))` with `h(t) = (t/base)^p A_p(ρ, base/t)`.
    far: Vec<(f64, f64, f64)>,
    h0: f64,
}

impl TailRow {
    fn new(rule: &AngularRule, n: usize, p: f64, r_max: f64, rho: f64) -> Self {
        let mut mid = Vec::new();
        if rho > r_max {
            let gl = GaussLegendre::new(MID_POINTS);
            let panels = ceil(MID_PANELS_PER_DECADE * log10(rho / r_max)).max(1.0) as usize;
            let (a, b) = (ln(r_max), ln(rho));
            let h = (b - a) / panels as f64;
            for k in 0..panels {
                let lo = a + h * k as f64;
                for (t, w) in gl.mapped(lo, lo + h) {
                    let r = exp(t);
                    mid.push((r, w * r * powi(r, n as i32 - 1) * rule.eval(rho, r)));
                }
            }
        }
        let base = rho.max(r_max);
        let h0 = sphere_area(n - 1);
        let gl = GaussLegendre::new(TAIL_POINTS);
        let far = gl
            .mapped(0.0, 0.5)
            .chain(gl.mapped(0.5, 1.0))
            .map(|(t, w)| {
                let h = pow(t / base, p) * rule.eval(rho, base / t);
                (t, w, h - h0)
            })
            .collect();
        TailRow { mid, base, far, h0 }
    }

    fn apply(&self, anchor: &TailAnchor, n: usize, p: f64) -> f64 {
        let TailAnchor { r_n, f_n, gamma } = *anchor;
        let g = |r: f64| f_n * exp(-gamma * ln(r / r_n));
        let mid: f64 = self.mid.iter().map(|(r, c)| c * g(*r)).sum();
        let a = gamma - n as f64 - p - 1.0;
        let integral = self.h0 / (a + 1.0) + self.far.iter().map(|(t, w, d)| w * pow(*t, a) * d).sum::<f64>();
        let scale = f_n * exp(gamma * ln(r_n / self.base) + (n as f64 + p) * ln(self.base));
        mid + scale * integral
    }
}

/// Result of one application of the integral operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOutput {
    pub values: Vec<f64>,
    pub tail: SourceTail,
}

/// The discretised operator `(Tg)(ρ) = ∫ |ρ e_1 - y|^p g(|y|) dy` for radial
/// sources `g ≥ 0` given at the nodes of a grid, evaluated at fixed output
/// radii. The quadrature matrix is built once and reused across applications.
#[derive(Debug, Clone)]
pub struct RieszOperator {
    grid: RadialGrid,
    p: f64,
    out: Vec<f64>,
    matrix: Vec<f64>,
    tails: Vec<TailRow>,
}

impl RieszOperator {
    pub fn new(grid: &RadialGrid, p: f64, out: &[f64]) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::param("p", "must be positive and finite"));
        }
        if out.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::param("out_nodes", "radii must be nonnegative and finite"));
        }
        let n = grid.n();
        let rule = AngularRule::new(p, n, grid.angular_order());
        let m = grid.len();
        let coef: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(grid.weights())
            .map(|(r, w)| w * powi(*r, n as i32 - 1))
            .collect();
        let rows = map_indexed(out.len(), |k| {
            let rho = out[k];
            let row: Vec<f64> = grid
                .nodes()
                .iter()
                .zip(&coef)
                .map(|(r, c)| c * rule.eval(rho, *r))
                .collect();
            (row, TailRow::new(&rule, n, p, grid.r_max(), rho))
        });
        let mut matrix = Vec::with_capacity(out.len() * m);
        let mut tails = Vec::with_capacity(out.len());
        for (row, tail) in rows {
            matrix.extend(row);
            tails.push(tail);
        }
        Ok(RieszOperator {
            grid: grid.clone(),
            p,
            out: out.to_vec(),
            matrix,
            tails,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn out_nodes(&self) -> &[f64] {
        &self.out
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Applies the operator to source values `g(r_i) ≥ 0` at the grid nodes.
    pub fn apply_source(&self, source: &[f64]) -> Result<OperatorOutput> {
        let m = self.grid.len();
        if source.len() != m {
            return Err(Error::Dimension {
                expected: m,
                got: source.len(),
            });
        }
        if source.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(Error::domain("source values must be nonnegative and finite"));
        }
        let n = self.grid.n();
        let (tail, anchor) = fit_tail(&self.grid, source, n as f64 + self.p);
        let values = map_indexed(self.out.len(), |k| {
            let row = &self.matrix[k * m..(k + 1) * m];
            let body: f64 = row.iter().zip(source).map(|(a, g)| a * g).sum();
            match &anchor {
                Some(a) => body + self.tails[k].apply(a, n, self.p),
                None => body,
            }
        });
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range {
                node: k,
                radius: self.out[k],
            });
        }
        Ok(OperatorOutput { values, tail })
    }

    /// `T(u)` at the output radii for `g = f(r, u(r))`.
    pub fn apply_field(&self, u: &RadialField, spec: &NonlinearitySpec) -> Result<OperatorOutput> {
        self.apply_source(&source_values(&self.grid, u.values(), spec)?)
    }
}

/// `f(r_i, u_i)` at the grid nodes.
pub fn source_values(grid: &RadialGrid, u: &[f64], spec: &NonlinearitySpec) -> Result<Vec<f64>> {
    if spec.n() != grid.n() {
        return Err(Error::Dimension {
            expected: grid.n(),
            got: spec.n(),
        });
    }
    grid.nodes().iter().zip(u).map(|(r, v)| spec.eval(*r, *v)).collect()
}

/// `T(u)` on the nodes of `out`, as a field on that grid.
pub fn apply_operator(u: &RadialField, spec: &NonlinearitySpec, out: &RadialGrid) -> Result<(RadialField, SourceTail)> {
    let op = RieszOperator::new(u.grid(), spec.p(), out.nodes())?;
    let res = op.apply_field(u, spec)?;
    Ok((RadialField::new(out.clone(), res.values)?, res.tail))
}

/// `∫ (1 + |z|^p) f(|z|, u(z)) dz` split into the grid part and the tail.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntegrabilityReport {
    /// Grid part plus tail; infinite when divergent.
    pub value: f64,
    pub truncated: f64,
    pub tail: f64,
    pub tail_model: SourceTail,
    pub divergent: bool,
}

/// Checks `∫ (1 + |z|^p) g(|z|) dz < ∞` for a radial source on `grid`.
pub fn integrability_of_source(grid: &RadialGrid, p: f64, source: &[f64]) -> Result<IntegrabilityReport> {
    if source.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: source.len(),
        });
    }
    let n = grid.n() as f64;
    let truncated: f64 = grid
        .volume_weights()
        .iter()
        .zip(grid.nodes())
        .zip(source)
        .map(|((w, r), g)| w * (1.0 + pow(*r, p)) * g)
        .sum();
    let (model, anchor) = fit_tail(grid, source, n + p);
    let (tail, divergent) = match (model, anchor) {
        (SourceTail::NonIntegrable { .. }, _) => (f64::INFINITY, true),
        (_, Some(TailAnchor { r_n, f_n, gamma })) => {
            let r = grid.r_max();
            let amp = sphere_area(grid.n() - 1) * f_n * pow(r_n / r, gamma);
            (amp * (pow(r, n) / (gamma - n) + pow(r, n + p) / (gamma - n - p)), false)
        }
        _ => (0.0, false),
    };
    Ok(IntegrabilityReport {
        value: truncated + tail,
        truncated,
        tail,
        tail_model: model,
        divergent,
    })
}

pub fn integrability_check(u: &RadialField, spec: &NonlinearitySpec) -> Result<IntegrabilityReport> {
    let source = source_values(u.grid(), u.values(), spec)?;
    integrability_of_source(u.grid(), spec.p(), &source)
}

/// `∫ g(|z|) dz` over `R^n` including the power-law tail.
pub fn source_integral(grid: &RadialGrid, p: f64, source: &[f64]) -> Result<f64> {
    let n = grid.n() as f64;
    let body: f64 = grid.volume_weights().iter().zip(source).map(|(w, g)| w * g).sum();
    match fit_tail(grid, source, n + p) {
        (_, Some(TailAnchor { r_n, f_n, gamma })) => {
            let r = grid.r_max();
            Ok(body + sphere_area(grid.n() - 1) * f_n * pow(r_n / r, gamma) * pow(r, n) / (gamma - n))
        }
        (SourceTail::NonIntegrable { exponent }, _) => Err(Error::NonIntegrable {
            exponent,
            required: n + p,
        }),
        _ => Ok(body),
    }
}
