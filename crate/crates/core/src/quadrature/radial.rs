use alloc::vec::Vec;

use super::grid::RadialGrid;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::math::{abs, exp, ln, norm, pow};

/// How a [`RadialField`] is continued beyond its last node `r_N`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FieldTail {
    /// `u(r) = u(r_N)`.
    Flat,
    /// `u(r) = u(r_N) (r / r_N)^e`.
    PowerLaw(f64),
    /// `u(r) = u(r_N) + L (r^p - r_N^p)` with `L` from the last two nodes,
    /// matching the `|y|^p` growth of solutions.
    Growth { p: f64 },
}

/// A positive radial function sampled on a [`RadialGrid`].
///
/// Between nodes it is a monotone cubic Hermite interpolant of `ln u` against
/// `ln r`, which keeps it positive and free of spurious extrema. Below the
/// first node it is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<f64>,
    log_r: Vec<f64>,
    log_u: Vec<f64>,
    slopes: Vec<f64>,
    tail: FieldTail,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain(alloc::format!(
                "field value {} at r = {} is not positive and finite",
                values[i],
                grid.nodes()[i]
            )));
        }
        let log_r: Vec<f64> = grid.nodes().iter().map(|r| ln(*r)).collect();
        let log_u: Vec<f64> = values.iter().map(|v| ln(*v)).collect();
        let slopes = monotone_slopes(&log_r, &log_u);
        Ok(RadialField {
            grid,
            values,
            log_r,
            log_u,
            slopes,
            tail: FieldTail::Flat,
        })
    }

    /// Samples `g` at the grid nodes.
    pub fn from_fn(grid: RadialGrid, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|r| g(*r)).collect();
        Self::new(grid, values)
    }

    pub fn with_tail(mut self, tail: FieldTail) -> Self {
        self.tail = tail;
        self
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> FieldTail {
        self.tail
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// Whether `r` lies beyond the last node, where the tail model is used.
    pub fn is_extrapolated(&self, r: f64) -> bool {
        r > *self.grid.nodes().last().unwrap()
    }

    /// `u(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        let last = nodes.len() - 1;
        if !(r > nodes[0]) {
            return self.values[0];
        }
        if r >= nodes[last] {
            return self.eval_tail(r);
        }
        let t = ln(r);
        let i = nodes.partition_point(|x| *x <= r) - 1;
        let h = self.log_r[i + 1] - self.log_r[i];
        let s = (t - self.log_r[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        exp(h00 * self.log_u[i] + h10 * h * self.slopes[i] + h01 * self.log_u[i + 1] + h11 * h * self.slopes[i + 1])
    }

    fn eval_tail(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        let last = nodes.len() - 1;
        let (rn, un) = (nodes[last], self.values[last]);
        match self.tail {
            FieldTail::Flat => un,
            FieldTail::PowerLaw(e) => un * pow(r / rn, e),
            FieldTail::Growth { p } => {
                let (rm, um) = (nodes[last - 1], self.values[last - 1]);
                let slope = (un - um) / (pow(rn, p) - pow(rm, p));
                let v = un + slope * (pow(r, p) - pow(rn, p));
                if v > 0.0 {
                    v
                } else {
                    un
                }
            }
        }
    }

    /// Maximum pointwise relative difference against `g` at the nodes.
    pub fn max_rel_error(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(r, v)| {
                let e = g(*r);
                abs(v - e) / abs(e).max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

impl Field for RadialField {
    fn dim(&self) -> usize {
        self.grid.n()
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.grid.n() {
            return Err(Error::Dimension {
                expected: self.grid.n(),
                got: y.len(),
            });
        }
        Ok(self.eval(norm(y)))
    }

    fn is_radial(&self) -> bool {
        true
    }
}

/// Node derivatives for a monotone cubic Hermite interpolant.
///
/// Starts from the derivative of the local 5-point Lagrange interpolant, then
/// zeroes it at discrete extrema and clamps it to three times the smaller
/// neighbouring secant, which is sufficient for monotonicity on each interval.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let secant: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    (0..m)
        .map(|i| {
            let lo = i.saturating_sub(2).min(m.saturating_sub(5));
            let hi = (lo + 5).min(m);
            let mut d = lagrange_derivative(&x[lo..hi], &y[lo..hi], x[i]);
            let left = if i > 0 { Some(secant[i - 1]) } else { None };
            let right = secant.get(i).copied();
            match (left, right) {
                (Some(a), Some(b)) => {
                    if a * b <= 0.0 || d * a <= 0.0 {
                        d = 0.0;
                    } else {
                        let cap = 3.0 * abs(a).min(abs(b));
                        if abs(d) > cap {
                            d = cap * d.signum();
                        }
                    }
                }
                (Some(a), None) | (None, Some(a)) => {
                    if d * a <= 0.0 {
                        d = 0.0;
                    } else if abs(d) > 3.0 * abs(a) {
                        d = 3.0 * a;
                    }
                }
                (None, None) => d = 0.0,
            }
            d
        })
        .collect()
}

fn lagrange_derivative(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let k = xs.len();
    let mut total = 0.0;
    for j in 0..k {
        let mut denom = 1.0;
        for m in 0..k {
            if m != j {
                denom *= xs[j] - xs[m];
            }
        }
        // d/dt Π_{m≠j} (t - x_m)
        let mut numer = 0.0;
        for l in 0..k {
            if l == j {
                continue;
            }
            numer += xs[..k]
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j && m != l)
                .map(|(_, xm)| t - xm)
                .product::<f64>();
        }
        total += ys[j] * numer / denom;
    }
    total
}
