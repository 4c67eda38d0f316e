//! Damped Picard iteration `u ← (1 - θ) u + θ T(u)` on a radial grid.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, pow, PI};
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::{
    integrability_of_source, source_integral, source_values, FieldTail, IntegrabilityReport, RadialField, RadialGrid,
    RieszOperator,
};

/// Starting iterate.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Init {
    Constant(f64),
    /// `c (1 + r²)^{p/2}`.
    Bubble(f64),
    /// Values of an existing field, interpolated onto the solve grid.
    Field(RadialField),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// `θ ∈ (0, 1]`.
    pub damping: f64,
    /// Target for the pointwise relative residual `max_i |u_i - T(u)_i| / u_i`.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Consecutive residual increases that count as divergence.
    pub divergence_window: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 500,
            init: Init::Constant(1.0),
            divergence_window: 10,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::param("damping", "must lie in (0, 1]"));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::param("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if self.divergence_window == 0 {
            return Err(Error::param("divergence_window", "must be at least 1"));
        }
        match &self.init {
            Init::Constant(c) | Init::Bubble(c) if !(*c > 0.0) || !c.is_finite() => {
                Err(Error::param("init", "initial amplitude must be positive"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    /// `∫ (1 + |z|^p) f(|z|, u(z)) dz`; infinite when the tail diverges.
    pub integrability_value: f64,
    pub integrability: IntegrabilityReport,
    /// `∫ f(|z|, u(z)) dz`.
    pub source_integral: f64,
    /// The radius `ρ* = 10³ R_max` of the growth probe.
    pub growth_probe_radius: f64,
    /// `|T(u)(ρ*) ρ*^{-p} / ∫ f - 1|`.
    pub growth_ratio_error: f64,
    /// Iterations in which the source decayed too slowly and the operator was
    /// truncated at `R_max`.
    pub truncated_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: RadialField,
    pub diagnostics: SolveDiagnostics,
}

/// `c` such that `c (1 + r²)^{p/2}` solves the Hyder–Ngô equation with `ε = 0`:
/// `c = A^{1/(1+q)}`, `A = π^{n/2} Γ((p+n)/2) / Γ((p+2n)/2)`.
pub fn bubble_amplitude(n: usize, p: f64, q: f64) -> f64 {
    let (n, s) = (n as f64, 1.0 / (1.0 + q));
    let (lg_a, _) = crate::math::ln_gamma_signed(0.5 * (p + n));
    let (lg_b, _) = crate::math::ln_gamma_signed(0.5 * (p + 2.0 * n));
    pow(pow(PI, 0.5 * n) * crate::math::exp(lg_a - lg_b), s)
}

/// `u(r) = c (1 + r²)^{p/2}`.
pub fn bubble(c: f64, p: f64) -> impl Fn(f64) -> f64 + Copy + Send + Sync {
    move |r| c * pow(1.0 + r * r, 0.5 * p)
}

fn initial_values(grid: &RadialGrid, p: f64, init: &Init) -> Vec<f64> {
    match init {
        Init::Constant(c) => alloc::vec![*c; grid.len()],
        Init::Bubble(c) => grid.nodes().iter().map(|r| bubble(*c, p)(*r)).collect(),
        Init::Field(f) => grid.nodes().iter().map(|r| f.eval(*r)).collect(),
    }
}

fn sup_rel(u: &[f64], t: &[f64]) -> f64 {
    u.iter()
        .zip(t)
        .map(|(a, b)| abs(a - b) / abs(*a).max(1e-300))
        .fold(0.0, f64::max)
}

/// Solves `u = T(u)` by damped Picard iteration.
///
/// Stops as soon as the residual of the current iterate is at most `tol` and
/// returns that iterate, so the reported residual belongs to the returned
/// field. Fails with [`Error::Divergence`] on a run of `divergence_window`
/// consecutive residual increases or a non-positive iterate, and with
/// [`Error::NotConverged`] when `max_iter` is exhausted.
pub fn picard_solve(spec: &NonlinearitySpec, grid: &RadialGrid, cfg: &SolveConfig) -> Result<Solution> {
    cfg.validate()?;
    if spec.n() != grid.n() {
        return Err(Error::Dimension {
            expected: grid.n(),
            got: spec.n(),
        });
    }
    let p = spec.p();
    let op = RieszOperator::new(grid, p, grid.nodes())?;
    let mut u = initial_values(grid, p, &cfg.init);
    let mut history = Vec::new();
    let mut streak = 0usize;
    let mut truncated = 0usize;
    let diverged = |it: usize, reason: alloc::string::String, history: &Vec<f64>| Error::Divergence {
        iterations: it,
        reason,
        residual_history: history.clone(),
    };
    for it in 1..=cfg.max_iter {
        if let Some(i) = u.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(diverged(
                it - 1,
                format!("iterate is not positive and finite at r = {}", grid.nodes()[i]),
                &history,
            ));
        }
        let source = match source_values(grid, &u, spec) {
            Ok(s) => s,
            Err(Error::Contract { alpha, beta, value }) => {
                return Err(diverged(
                    it - 1,
                    format!("f({alpha:e}, {beta:e}) = {value:e} left the admissible range"),
                    &history,
                ))
            }
            Err(e) => return Err(e),
        };
        let out = match op.apply_source(&source) {
            Ok(o) => o,
            Err(Error::Range { radius, .. }) => {
                return Err(diverged(it - 1, format!("operator overflow at r = {radius}"), &history))
            }
            Err(e) => return Err(e),
        };
        if !out.tail.is_integrable() {
            truncated += 1;
        }
        let res = sup_rel(&u, &out.values);
        if !res.is_finite() {
            return Err(diverged(it - 1, "residual is not finite".into(), &history));
        }
        if let Some(prev) = history.last() {
            streak = if res > *prev { streak + 1 } else { 0 };
        }
        history.push(res);
        if res <= cfg.tol && out.tail.is_integrable() {
            let field = RadialField::new(grid.clone(), u)?.with_tail(FieldTail::Growth { p });
            let diagnostics = diagnostics(spec, &field, &source, it, history, truncated)?;
            return Ok(Solution { field, diagnostics });
        }
        if streak >= cfg.divergence_window {
            return Err(diverged(
                it,
                format!("residual grew for {} consecutive iterations", cfg.divergence_window),
                &history,
            ));
        }
        let th = cfg.damping;
        for (a, b) in u.iter_mut().zip(&out.values) {
            *a = (1.0 - th) * *a + th * b;
        }
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iter,
        residual: history.last().copied().unwrap_or(f64::INFINITY),
        residual_history: history,
    })
}

fn diagnostics(
    spec: &NonlinearitySpec,
    u: &RadialField,
    source: &[f64],
    iterations: usize,
    history: Vec<f64>,
    truncated: usize,
) -> Result<SolveDiagnostics> {
    let grid = u.grid();
    let p = spec.p();
    let integrability = integrability_of_source(grid, p, source)?;
    let total = source_integral(grid, p, source).unwrap_or(f64::INFINITY);
    let probe = 1e3 * grid.r_max();
    let far = RieszOperator::new(grid, p, &[probe])?.apply_source(source)?.values[0];
    Ok(SolveDiagnostics {
        iterations,
        final_residual: *history.last().unwrap(),
        residual_history: history,
        integrability_value: integrability.value,
        integrability,
        source_integral: total,
        growth_probe_radius: probe,
        growth_ratio_error: abs(far / pow(probe, p) / total - 1.0),
        truncated_iterations: truncated,
    })
}

/// `max_i |u_i - T(u)_i| / u_i` over the nodes of `u`'s grid.
pub fn residual(u: &RadialField, spec: &NonlinearitySpec) -> Result<f64> {
    let op = RieszOperator::new(u.grid(), spec.p(), u.grid().nodes())?;
    let t = op.apply_field(u, spec)?;
    Ok(sup_rel(u.values(), &t.values))
}

/// `T(u)` on `u`'s own grid: one undamped Picard step.
pub fn picard_step(u: &RadialField, spec: &NonlinearitySpec) -> Result<RadialField> {
    let op = RieszOperator::new(u.grid(), spec.p(), u.grid().nodes())?;
    let t = op.apply_field(u, spec)?;
    Ok(RadialField::new(u.grid().clone(), t.values)?.with_tail(u.tail()))
}
