use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::math::{exp, ln, pow, powi, sphere_area};

pub const DEFAULT_R_MIN: f64 = 1e-4;
pub const DEFAULT_R_MAX: f64 = 100.0;
pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_ANGULAR_ORDER: usize = 64;
/// Gauss–Legendre points per log-radius panel.
pub const PANEL_POINTS: usize = 8;

/// How the source term is continued beyond `R_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum TailModel {
    /// Truncate the integral at `R_max`.
    None,
    /// Power law `r^{-γ}` with `γ` fitted over the outermost panel.
    Fitted,
    /// Power law `r^{-γ}` with a fixed `γ`.
    PowerLaw(f64),
}

/// Radial quadrature on `[0, R_max]`.
///
/// `weights` integrate in `dr`: `Σ w_i g(r_i) ≈ ∫_0^{R_max} g(r) dr` for
/// integrands that behave like `r^{n-1}` near the origin. The ball `[0, r_min]`
/// is folded into the first weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    r_min: f64,
    r_max: f64,
    tail: TailModel,
    angular_order: usize,
    panel_points: usize,
}

impl RadialGrid {
    /// The default grid: `N = 256` nodes on `[1e-4, 100]`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::log_panels(n, DEFAULT_R_MIN, DEFAULT_R_MAX, DEFAULT_NODES)
    }

    /// `nodes / PANEL_POINTS` Gauss–Legendre panels of equal width in `ln r`.
    pub fn log_panels(n: usize, r_min: f64, r_max: f64, nodes: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "dimension must be at least 2"));
        }
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::param("r_max", "need 0 < r_min < r_max < ∞"));
        }
        if nodes < 2 * PANEL_POINTS || nodes % PANEL_POINTS != 0 {
            return Err(Error::param(
                "nodes",
                alloc::format!("must be a multiple of {PANEL_POINTS} and at least {}", 2 * PANEL_POINTS),
            ));
        }
        let panels = nodes / PANEL_POINTS;
        let rule = GaussLegendre::new(PANEL_POINTS);
        let (t0, t1) = (ln(r_min), ln(r_max));
        let h = (t1 - t0) / panels as f64;
        let mut rs = Vec::with_capacity(nodes);
        let mut ws = Vec::with_capacity(nodes);
        for k in 0..panels {
            let a = t0 + h * k as f64;
            for (t, w) in rule.mapped(a, a + h) {
                let r = exp(t);
                rs.push(r);
                ws.push(w * r);
            }
        }
        ws[0] += pow(r_min, n as f64) / (n as f64 * powi(rs[0], n as i32 - 1));
        Ok(RadialGrid {
            n,
            nodes: rs,
            weights: ws,
            r_min,
            r_max,
            tail: TailModel::Fitted,
            angular_order: DEFAULT_ANGULAR_ORDER,
            panel_points: PANEL_POINTS,
        })
    }

    /// A grid on arbitrary ascending nodes, e.g. read back from a file.
    ///
    /// Weights are the trapezoid rule in `ln r`, with the ball below the first
    /// node folded into its weight. `R_max` is the last node.
    pub fn from_nodes(n: usize, nodes: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "dimension must be at least 2"));
        }
        if nodes.len() < 4 {
            return Err(Error::param("nodes", "need at least 4 nodes"));
        }
        if !(nodes[0] > 0.0) || nodes.iter().any(|r| !r.is_finite()) {
            return Err(Error::param("nodes", "radii must be positive and finite"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("nodes", "radii must be strictly increasing"));
        }
        let m = nodes.len();
        let mut ws = alloc::vec![0.0; m];
        for i in 0..m - 1 {
            let h = ln(nodes[i + 1]) - ln(nodes[i]);
            ws[i] += 0.5 * h * nodes[i];
            ws[i + 1] += 0.5 * h * nodes[i + 1];
        }
        ws[0] += nodes[0] / n as f64;
        Ok(RadialGrid {
            n,
            r_min: nodes[0],
            r_max: nodes[m - 1],
            weights: ws,
            nodes,
            tail: TailModel::Fitted,
            angular_order: DEFAULT_ANGULAR_ORDER,
            panel_points: 4,
        })
    }

    pub fn with_tail(mut self, tail: TailModel) -> Self {
        self.tail = tail;
        self
    }

    pub fn with_angular_order(mut self, order: usize) -> Result<Self> {
        if order < 4 {
            return Err(Error::param("angular_order", "must be at least 4"));
        }
        self.angular_order = order;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    pub fn angular_order(&self) -> usize {
        self.angular_order
    }

    /// Number of outermost nodes used to fit tail exponents.
    pub(crate) fn fit_window(&self) -> usize {
        self.panel_points.min(self.len())
    }

    /// `|S^{n-1}| r_i^{n-1} w_i`: weights for `∫_{B_{R_max}} g(|y|) dy`.
    pub fn volume_weights(&self) -> Vec<f64> {
        let s = sphere_area(self.n - 1);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| s * powi(*r, self.n as i32 - 1) * w)
            .collect()
    }

    /// Same resolution per unit `ln r`, twice the nodes and angular order.
    pub fn refined(&self) -> Result<Self> {
        let g = Self::log_panels(self.n, self.r_min, self.r_max, 2 * self.len())?;
        g.with_tail(self.tail).with_angular_order(2 * self.angular_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{ball_volume, rel_diff};

    #[test]
    fn volume_of_ball_is_exact() {
        for n in 2..=6 {
            let g = RadialGrid::standard(n).unwrap();
            let v: f64 = g.volume_weights().iter().sum();
            assert!(rel_diff(v, ball_volume(n, 100.0)) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn nodes_ascending_and_weights_positive() {
        let g = RadialGrid::standard(3).unwrap();
        assert_eq!(g.len(), 256);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|w| *w > 0.0));
        assert!(g.nodes()[0] > 1e-4 && *g.nodes().last().unwrap() < 100.0);
    }

    #[test]
    fn integrates_smooth_radial_functions() {
        // ∫_{R^3} e^{-r²} dy = π^{3/2}
        let g = RadialGrid::log_panels(3, 1e-4, 12.0, 256).unwrap();
        let v: f64 = g
            .volume_weights()
            .iter()
            .zip(g.nodes())
            .map(|(w, r)| w * exp(-r * r))
            .sum();
        assert!(rel_diff(v, pow(core::f64::consts::PI, 1.5)) < 1e-10);
    }

    #[test]
    fn from_nodes_volume_is_close() {
        let base = RadialGrid::standard(3).unwrap();
        let g = RadialGrid::from_nodes(3, base.nodes().to_vec()).unwrap();
        let v: f64 = g.volume_weights().iter().sum();
        assert!(rel_diff(v, ball_volume(3, g.r_max())) < 1e-2);
        assert!(RadialGrid::from_nodes(3, alloc::vec![1.0, 0.5, 2.0, 3.0]).is_err());
    }

    #[test]
    fn invalid_grids() {
        assert!(RadialGrid::log_panels(3, 1e-4, 100.0, 100).is_err());
        assert!(RadialGrid::log_panels(1, 1e-4, 100.0, 256).is_err());
        assert!(RadialGrid::log_panels(3, 1.0, 0.5, 256).is_err());
        assert!(RadialGrid::standard(3).unwrap().with_angular_order(3).is_err());
    }
}
