//! Right-hand sides `f(α, β) > 0` and the comparison condition on them.
//!
//! Symmetry of solutions follows when, for every `x ≠ 0`, `0 < λ < |x|`,
//! `|z - x| > λ` and `a ≤ b`,
//!
//! ```text
//! f(|z|, a) > (λ / |z - x|)^{p+2n} · f(|z^{x,λ}|, (λ / |z - x|)^p · b).
//! ```
//!
//! Sampling can only falsify this, never prove it. For the Hyder–Ngô family
//! with `ε = 0` the condition is equivalent to `(b/a)^q > R^{(p+2n-pq)/2}`
//! where `R` is [`hn_ratio`], which gives an independent evaluation path.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{invert_into, Point};
use crate::math::{dist, norm, pow, sqrt};
use crate::par::map_indexed;
use crate::sampling::{log_uniform, open01, unit_vector, Stream};

/// A strict inequality `lhs > rhs` counts as holding only when
/// `lhs - rhs > STRICT_TOL · max(lhs, rhs)`.
pub const STRICT_TOL: f64 = 1e-14;

/// Violations kept verbatim in a report; the rest are only counted.
pub const MAX_RECORDED_VIOLATIONS: usize = 64;

pub type CustomFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Family {
    /// `ε (1+α²)^{-(p+n)} β + (1+α²)^{(pq-p-2n)/2} β^{-q}`.
    HyderNgo { epsilon: f64, q: f64 },
    /// `(1+α²)^{m} β^{κ}` with `m = weight_exponent`.
    PurePower { kappa: f64, weight_exponent: f64 },
    /// Any continuous positive function; positivity is asserted per evaluation.
    Custom { label: String, f: CustomFn },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::HyderNgo { epsilon, q } => f
                .debug_struct("HyderNgo")
                .field("epsilon", epsilon)
                .field("q", q)
                .finish(),
            Family::PurePower { kappa, weight_exponent } => f
                .debug_struct("PurePower")
                .field("kappa", kappa)
                .field("weight_exponent", weight_exponent)
                .finish(),
            Family::Custom { label, .. } => f.debug_struct("Custom").field("label", label).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    family: Family,
    p: f64,
    n: usize,
}

impl NonlinearitySpec {
    pub fn new(family: Family, p: f64, n: usize) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::param("p", "must be positive and finite"));
        }
        if n < 2 {
            return Err(Error::param("n", "dimension must be at least 2"));
        }
        match &family {
            Family::HyderNgo { epsilon, q } => {
                if !(*epsilon >= 0.0) || !epsilon.is_finite() {
                    return Err(Error::param("epsilon", "must be nonnegative and finite"));
                }
                if !(*q > 0.0) || !q.is_finite() {
                    return Err(Error::param("q", "must be positive and finite"));
                }
            }
            Family::PurePower { kappa, weight_exponent } => {
                if !kappa.is_finite() || !weight_exponent.is_finite() {
                    return Err(Error::param("kappa", "exponents must be finite"));
                }
            }
            Family::Custom { .. } => {}
        }
        Ok(NonlinearitySpec { family, p, n })
    }

    pub fn hyder_ngo(epsilon: f64, q: f64, p: f64, n: usize) -> Result<Self> {
        Self::new(Family::HyderNgo { epsilon, q }, p, n)
    }

    pub fn pure_power(kappa: f64, weight_exponent: f64, p: f64, n: usize) -> Result<Self> {
        Self::new(Family::PurePower { kappa, weight_exponent }, p, n)
    }

    pub fn custom<F>(label: &str, p: f64, n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            Family::Custom {
                label: label.into(),
                f: Arc::new(f),
            },
            p,
            n,
        )
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(p + 2n) / p`, the Hyder–Ngô threshold for `q`.
    pub fn critical_q(&self) -> f64 {
        (self.p + 2.0 * self.n as f64) / self.p
    }

    /// The `q` of a Hyder–Ngô family with `ε = 0`.
    pub fn hyder_ngo_pure_q(&self) -> Option<f64> {
        match self.family {
            Family::HyderNgo { epsilon: 0.0, q } => Some(q),
            _ => None,
        }
    }

    /// Whether `β ↦ f(α, β)` is known to be nonincreasing.
    pub fn is_nonincreasing_in_beta(&self) -> bool {
        match self.family {
            Family::HyderNgo { epsilon, .. } => epsilon == 0.0,
            Family::PurePower { kappa, .. } => kappa <= 0.0,
            Family::Custom { .. } => false,
        }
    }

    /// `f(α, β)`.
    pub fn eval(&self, alpha: f64, beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::domain("f(α, β) requires β > 0"));
        }
        if !(alpha >= 0.0) {
            return Err(Error::domain("f(α, β) requires α ≥ 0"));
        }
        let w = 1.0 + alpha * alpha;
        let (p, n) = (self.p, self.n as f64);
        let value = match &self.family {
            Family::HyderNgo { epsilon, q } => {
                let main = pow(w, 0.5 * (p * q - p - 2.0 * n)) * pow(beta, -q);
                if *epsilon == 0.0 {
                    main
                } else {
                    epsilon * pow(w, -(p + n)) * beta + main
                }
            }
            Family::PurePower { kappa, weight_exponent } => pow(w, *weight_exponent) * pow(beta, *kappa),
            Family::Custom { f, .. } => f(alpha, beta),
        };
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Contract { alpha, beta, value })
        }
    }

    /// Both sides of the comparison condition at one admissible sample.
    pub fn condition_at(&self, sample: &ConditionSample) -> Result<ConditionEval> {
        sample.validate()?;
        if sample.x.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: sample.x.dim(),
            });
        }
        let mut image = [0.0f64; 16];
        let mut heap;
        let image: &mut [f64] = if self.n <= 16 {
            &mut image[..self.n]
        } else {
            heap = alloc::vec![0.0; self.n];
            &mut heap
        };
        let s = invert_into(&sample.x, sample.lambda, &sample.z, image);
        let ratio = sample.lambda / s;
        let lhs = self.eval(norm(&sample.z), sample.a)?;
        let rhs = pow(ratio, self.p + 2.0 * self.n as f64) * self.eval(norm(image), pow(ratio, self.p) * sample.b)?;
        Ok(ConditionEval::new(lhs, rhs))
    }

    /// The equivalent inequality `(b/a)^q > R^{(p+2n-pq)/2}` for Hyder–Ngô with
    /// `ε = 0`; `None` for other families.
    pub fn hn_reformulation_at(&self, sample: &ConditionSample) -> Result<Option<ConditionEval>> {
        let Some(q) = self.hyder_ngo_pure_q() else {
            return Ok(None);
        };
        sample.validate()?;
        let r = hn_ratio(&sample.x, sample.lambda, &sample.z)?;
        let lhs = pow(sample.b / sample.a, q);
        let rhs = pow(r, 0.5 * (self.p + 2.0 * self.n as f64 - self.p * q));
        Ok(Some(ConditionEval::new(lhs, rhs)))
    }
}

/// One point of the quantifier domain `x ≠ 0, 0 < λ < |x|, |z - x| > λ, 0 < a ≤ b`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionSample {
    pub x: Point,
    pub lambda: f64,
    pub z: Point,
    pub a: f64,
    pub b: f64,
}

impl ConditionSample {
    pub fn validate(&self) -> Result<()> {
        if self.x.dim() != self.z.dim() {
            return Err(Error::Dimension {
                expected: self.x.dim(),
                got: self.z.dim(),
            });
        }
        let xn = self.x.norm();
        if !(xn > 0.0) {
            return Err(Error::domain("condition sample needs x ≠ 0"));
        }
        if !(self.lambda > 0.0 && self.lambda < xn) {
            return Err(Error::domain("condition sample needs 0 < λ < |x|"));
        }
        if !(dist(&self.z, &self.x) > self.lambda) {
            return Err(Error::domain("condition sample needs |z - x| > λ"));
        }
        if !(self.a > 0.0 && self.a <= self.b) || !self.b.is_finite() {
            return Err(Error::domain("condition sample needs 0 < a ≤ b"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionEval {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs - STRICT_TOL · max(lhs, rhs)`; positive iff the strict
    /// inequality holds beyond roundoff.
    pub margin: f64,
}

impl ConditionEval {
    fn new(lhs: f64, rhs: f64) -> Self {
        ConditionEval {
            lhs,
            rhs,
            margin: lhs - rhs - STRICT_TOL * lhs.max(rhs),
        }
    }

    pub fn holds(&self) -> bool {
        self.margin > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Violation {
    pub sample: ConditionSample,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionReport {
    pub samples_tested: usize,
    /// Draws outside the quantifier domain that were discarded and redrawn.
    pub rejected: usize,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    pub min_margin: f64,
    /// Samples where the Hyder–Ngô reformulation disagreed with the direct
    /// evaluation. `None` when the family has no reformulation.
    pub reformulation_mismatches: Option<usize>,
}

impl ConditionReport {
    fn empty(has_reformulation: bool) -> Self {
        ConditionReport {
            samples_tested: 0,
            rejected: 0,
            violation_count: 0,
            violations: Vec::new(),
            min_margin: f64::INFINITY,
            reformulation_mismatches: has_reformulation.then_some(0),
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, spec: &NonlinearitySpec, sample: ConditionSample) -> Result<()> {
        let eval = spec.condition_at(&sample)?;
        if let Some(alt) = spec.hn_reformulation_at(&sample)? {
            if alt.holds() != eval.holds() {
                *self.reformulation_mismatches.get_or_insert(0) += 1;
            }
        }
        self.samples_tested += 1;
        self.min_margin = self.min_margin.min(eval.margin);
        if !eval.holds() {
            self.violation_count += 1;
            if self.violations.len() < MAX_RECORDED_VIOLATIONS {
                self.violations.push(Violation {
                    sample,
                    lhs: eval.lhs,
                    rhs: eval.rhs,
                    margin: eval.margin,
                });
            }
        }
        Ok(())
    }

    /// Associative merge of two partial reports.
    pub fn merge(mut self, other: ConditionReport) -> ConditionReport {
        self.samples_tested += other.samples_tested;
        self.rejected += other.rejected;
        self.violation_count += other.violation_count;
        for v in other.violations {
            if self.violations.len() < MAX_RECORDED_VIOLATIONS {
                self.violations.push(v);
            }
        }
        self.min_margin = self.min_margin.min(other.min_margin);
        self.reformulation_mismatches = match (self.reformulation_mismatches, other.reformulation_mismatches) {
            (Some(a), Some(b)) => Some(a + b),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Distribution of random condition samples.
///
/// `|x|` is log-uniform, `λ` uniform in `(0, |x|)`, `z = x + rθ` with `r`
/// log-uniform in `(λ, span·λ)` and `θ` uniform on the sphere, `a`
/// log-uniform and `b = a · 10^{U[0, b_decades]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Independent streams; fixed so results do not depend on thread count.
    pub streams: usize,
    pub x_norm_range: (f64, f64),
    pub z_span: f64,
    pub a_range: (f64, f64),
    pub b_decades: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0x5eed,
            streams: 16,
            x_norm_range: (1e-2, 1e2),
            z_span: 1e3,
            a_range: (1e-3, 1e3),
            b_decades: 3.0,
        }
    }
}

impl SamplerConfig {
    /// One draw; may fall outside the open quantifier domain at the edges, in
    /// which case the caller rejects it.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> ConditionSample {
        let xn = log_uniform(rng, self.x_norm_range.0, self.x_norm_range.1);
        let x = Point::from_iter_unchecked(unit_vector(rng, n).into_iter().map(|c| c * xn));
        let lambda = xn * rng.random::<f64>();
        let r = lambda * pow(self.z_span, rng.random::<f64>());
        let z = x.offset(&unit_vector(rng, n), r);
        let a = log_uniform(rng, self.a_range.0, self.a_range.1);
        let b = a * pow(10.0, self.b_decades * rng.random::<f64>());
        ConditionSample { x, lambda, z, a, b }
    }
}

/// Random falsification test of the comparison condition with `count` samples.
pub fn check_condition(spec: &NonlinearitySpec, sampler: &SamplerConfig, count: usize) -> Result<ConditionReport> {
    if count == 0 {
        return Err(Error::param("count", "at least one sample is required"));
    }
    let streams = sampler.streams.max(1).min(count);
    let has_alt = spec.hyder_ngo_pure_q().is_some();
    let parts = map_indexed(streams, |k| -> Result<ConditionReport> {
        let quota = count / streams + usize::from(k < count % streams);
        let mut rng = Stream::new(sampler.seed, k as u64);
        let mut report = ConditionReport::empty(has_alt);
        while report.samples_tested < quota {
            let sample = sampler.draw(&mut rng, spec.n);
            if sample.validate().is_err() {
                report.rejected += 1;
                continue;
            }
            report.record(spec, sample)?;
        }
        Ok(report)
    });
    let mut total = ConditionReport::empty(has_alt);
    for part in parts {
        total = total.merge(part?);
    }
    Ok(total)
}

/// Grid search concentrated where the condition is tight: `b/a → 1` and
/// `|z - x| → λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedSearch {
    pub x_norms: Vec<f64>,
    /// `λ / |x|`, each in `(0, 1)`.
    pub lambda_fractions: Vec<f64>,
    /// `|z - x| / λ`, each `> 1`.
    pub z_offsets: Vec<f64>,
    /// `b / a`, each `≥ 1`.
    pub b_over_a: Vec<f64>,
    /// Angles of `z - x` from `x̂` in the plane spanned by `e_1` and `e_2`.
    pub angles: Vec<f64>,
}

impl Default for DirectedSearch {
    fn default() -> Self {
        use crate::math::PI;
        DirectedSearch {
            x_norms: (0..9).map(|k| pow(10.0, -2.0 + 0.5 * k as f64)).collect(),
            lambda_fractions: alloc::vec![0.05, 0.25, 0.5, 0.75, 0.95, 0.999],
            z_offsets: alloc::vec![1.0 + 1e-6, 1.001, 1.1, 2.0, 10.0, 100.0, 1000.0],
            b_over_a: alloc::vec![1.0, 1.0 + 1e-6, 1.01],
            angles: alloc::vec![0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI, PI, 1.5 * PI],
        }
    }
}

pub fn directed_search(spec: &NonlinearitySpec, search: &DirectedSearch) -> Result<ConditionReport> {
    let n = spec.n;
    let has_alt = spec.hyder_ngo_pure_q().is_some();
    let parts = map_indexed(search.x_norms.len(), |i| -> Result<ConditionReport> {
        let xn = search.x_norms[i];
        let x = Point::on_axis(n, 0, xn);
        let mut report = ConditionReport::empty(has_alt);
        for &frac in &search.lambda_fractions {
            let lambda = frac * xn;
            for &off in &search.z_offsets {
                for &angle in &search.angles {
                    let mut dir = alloc::vec![0.0; n];
                    dir[0] = crate::math::cos(angle);
                    dir[1] = crate::math::sin(angle);
                    let z = x.offset(&dir, off * lambda);
                    for &ratio in &search.b_over_a {
                        let sample = ConditionSample {
                            x: x.clone(),
                            lambda,
                            z: z.clone(),
                            a: 1.0,
                            b: ratio,
                        };
                        if sample.validate().is_err() {
                            report.rejected += 1;
                            continue;
                        }
                        report.record(spec, sample)?;
                    }
                }
            }
        }
        Ok(report)
    });
    let mut total = ConditionReport::empty(has_alt);
    for part in parts {
        total = total.merge(part?);
    }
    Ok(total)
}

/// `λ²/|z-x|² · (1 + |z|²) / (1 + |z^{x,λ}|²)`, which is `< 1` whenever
/// `x ≠ 0`, `|z - x| > λ` and `λ < sqrt(1 + |x|²)`.
pub fn hn_ratio(x: &[f64], lambda: f64, z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: z.len(),
        });
    }
    let xn = norm(x);
    if !(xn > 0.0) {
        return Err(Error::domain("hn_ratio needs x ≠ 0"));
    }
    if !(lambda > 0.0 && lambda < sqrt(1.0 + xn * xn)) {
        return Err(Error::domain("hn_ratio needs 0 < λ < sqrt(1 + |x|²)"));
    }
    let s = dist(z, x);
    if !(s > lambda) {
        return Err(Error::domain("hn_ratio needs |z - x| > λ"));
    }
    let image: Vec<f64> = x
        .iter()
        .zip(z)
        .map(|(xi, zi)| xi + lambda * lambda * (zi - xi) / (s * s))
        .collect();
    let zn2: f64 = z.iter().map(|c| c * c).sum();
    let in2: f64 = image.iter().map(|c| c * c).sum();
    Ok((lambda / s) * (lambda / s) * (1.0 + zn2) / (1.0 + in2))
}

/// Draws a random admissible point for [`hn_ratio`].
pub fn draw_hn_ratio_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (Point, f64, Point) {
    let xn = log_uniform(rng, 1e-2, 1e2);
    let x = Point::from_iter_unchecked(unit_vector(rng, n).into_iter().map(|c| c * xn));
    let lambda = sqrt(1.0 + xn * xn) * open01(rng);
    let r = lambda * pow(1e3, open01(rng));
    let z = x.offset(&unit_vector(rng, n), r);
    (x, lambda, z)
}
