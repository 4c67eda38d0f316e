//! Run configuration.
//!
//! Configs are flat `section.key = value` lines with `#` comments, which is
//! valid TOML with dotted keys:
//!
//! ```text
//! seed = 7
//! problem.n = 3
//! problem.p = 2.0
//! problem.family = "hyder_ngo"
//! problem.q = 2.0
//! grid.nodes = 256
//! ```
//!
//! Every key is optional; unknown keys are rejected with their line number.

use std::path::{Path, PathBuf};

use rieszsym_core::movingspheres::{ProbeConfig, SymmetryConfig};
use rieszsym_core::nonlinearity::{DirectedSearch, SamplerConfig};
use rieszsym_core::quadrature::RadialGrid;
use rieszsym_core::solver::{bubble_amplitude, Init, SolveConfig};
use rieszsym_core::NonlinearitySpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub solve: SolveSection,
    pub verify: VerifySection,
    pub checkf: CheckfSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    HyderNgo,
    PurePower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub n: usize,
    pub p: f64,
    pub family: FamilyName,
    pub epsilon: f64,
    pub q: f64,
    pub kappa: f64,
    pub weight_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub r_min: f64,
    pub r_max: f64,
    pub nodes: usize,
    pub angular_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitName {
    Constant,
    Bubble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub divergence_window: usize,
    pub init: InitName,
    /// Constant value, or bubble amplitude (`0` means the exact amplitude).
    pub init_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Number of centres `x`, with `|x|` log-uniform in `x_norm_range`.
    pub x_samples: usize,
    pub x_norm_range: [f64; 2],
    /// Probe spheres per `λ`.
    pub radii: usize,
    pub slack: f64,
    pub resolution: f64,
    /// Relative tolerance of the reflection and ray checks.
    pub tol: f64,
    /// Random probe directions for the symmetry check; `0` uses the design set.
    pub directions: usize,
    /// Radii per direction for the symmetry check.
    pub sym_radii: usize,
    pub sym_range: [f64; 2],
    /// Translate the loaded solution by this vector before verifying.
    pub shift: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckfSection {
    pub count: usize,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            problem: ProblemSection::default(),
            grid: GridSection::default(),
            solve: SolveSection::default(),
            verify: VerifySection::default(),
            checkf: CheckfSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            n: 3,
            p: 2.0,
            family: FamilyName::HyderNgo,
            epsilon: 0.0,
            q: 2.0,
            kappa: 1.0,
            weight_exponent: 0.0,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            r_min: 1e-4,
            r_max: 100.0,
            nodes: 256,
            angular_order: 64,
        }
    }
}

impl Default for SolveSection {
    fn default() -> Self {
        let d = SolveConfig::default();
        SolveSection {
            damping: d.damping,
            tol: d.tol,
            max_iter: d.max_iter,
            divergence_window: d.divergence_window,
            init: InitName::Constant,
            init_value: 1.0,
        }
    }
}

impl Default for VerifySection {
    fn default() -> Self {
        let probes = ProbeConfig::default();
        VerifySection {
            x_samples: 8,
            x_norm_range: [0.1, 10.0],
            radii: probes.radii,
            slack: probes.slack,
            resolution: probes.resolution,
            tol: 1e-6,
            directions: 0,
            sym_radii: 40,
            sym_range: [1e-2, 1e2],
            shift: Vec::new(),
        }
    }
}

impl Default for CheckfSection {
    fn default() -> Self {
        CheckfSection {
            count: 100_000,
            directed: true,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(anchor(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let pr = &self.problem;
        if pr.n < 2 {
            return bad("problem.n must be at least 2");
        }
        if !(pr.p > 0.0 && pr.p.is_finite()) {
            return bad("problem.p must be positive");
        }
        let g = &self.grid;
        if !(g.r_min > 0.0 && g.r_max > g.r_min) {
            return bad("grid.r_min must be positive and below grid.r_max");
        }
        let s = &self.solve;
        if !(s.tol > 0.0) || !(s.damping > 0.0 && s.damping <= 1.0) {
            return bad("solve.tol must be positive and solve.damping in (0, 1]");
        }
        let v = &self.verify;
        if !(v.slack >= 0.0 && v.tol >= 0.0 && v.resolution > 0.0) {
            return bad("verify tolerances must be nonnegative and verify.resolution positive");
        }
        if !(v.x_norm_range[0] > 0.0 && v.x_norm_range[1] >= v.x_norm_range[0]) {
            return bad("verify.x_norm_range must be positive and ascending");
        }
        if !(v.sym_range[0] > 0.0 && v.sym_range[1] > v.sym_range[0]) {
            return bad("verify.sym_range must be positive and ascending");
        }
        if !v.shift.is_empty() && v.shift.len() != pr.n {
            return bad("verify.shift must have problem.n entries");
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<NonlinearitySpec, CliError> {
        let pr = &self.problem;
        let spec = match pr.family {
            FamilyName::HyderNgo => NonlinearitySpec::hyder_ngo(pr.epsilon, pr.q, pr.p, pr.n),
            FamilyName::PurePower => NonlinearitySpec::pure_power(pr.kappa, pr.weight_exponent, pr.p, pr.n),
        };
        spec.map_err(|e| CliError::Config(format!("problem: {e}")))
    }

    pub fn radial_grid(&self) -> Result<RadialGrid, CliError> {
        let g = &self.grid;
        RadialGrid::log_panels(self.problem.n, g.r_min, g.r_max, g.nodes)
            .and_then(|grid| grid.with_angular_order(g.angular_order))
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn solve_config(&self) -> Result<SolveConfig, CliError> {
        let s = &self.solve;
        let init = match s.init {
            InitName::Constant => Init::Constant(s.init_value),
            InitName::Bubble if s.init_value == 0.0 => {
                let pr = &self.problem;
                Init::Bubble(bubble_amplitude(pr.n, pr.p, pr.q))
            }
            InitName::Bubble => Init::Bubble(s.init_value),
        };
        let cfg = SolveConfig {
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            init,
            divergence_window: s.divergence_window,
        };
        cfg.validate().map_err(|e| CliError::Config(format!("solve: {e}")))?;
        Ok(cfg)
    }

    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig {
            radii: self.verify.radii,
            slack: self.verify.slack,
            resolution: self.verify.resolution,
            ..ProbeConfig::default()
        }
    }

    pub fn symmetry_config(&self, directions: Vec<Vec<f64>>) -> SymmetryConfig {
        let v = &self.verify;
        let mut sym = SymmetryConfig::standard(self.problem.n, v.sym_range[0], v.sym_range[1], v.tol);
        let m = v.sym_radii;
        sym.radii = (0..m)
            .map(|k| v.sym_range[0] * (v.sym_range[1] / v.sym_range[0]).powf(k as f64 / (m.max(2) - 1) as f64))
            .collect();
        if !directions.is_empty() {
            sym.directions = directions;
        }
        sym
    }

    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            ..SamplerConfig::default()
        }
    }

    pub fn directed_search(&self) -> Option<DirectedSearch> {
        self.checkf.directed.then(DirectedSearch::default)
    }
}

/// Prefixes a TOML error with `line N:`.
fn anchor(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {msg}")
        }
        None => msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn dotted_keys_and_comments() {
        let cfg = RunConfig::parse(
            "# bubble\nseed = 9\nproblem.q = 2.5 # inline\ngrid.nodes = 128\nverify.shift = [0.3, 0.0, 0.0]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.problem.q, 2.5);
        assert_eq!(cfg.grid.nodes, 128);
        assert_eq!(cfg.verify.shift, vec![0.3, 0.0, 0.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RunConfig::parse("seed = 1\n\nproblem.bogus = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = RunConfig::parse("seed = 1\nproblem.n = \"three\"\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn semantic_checks() {
        assert!(RunConfig::parse("problem.p = -1.0").is_err());
        assert!(RunConfig::parse("problem.n = 1").is_err());
        assert!(RunConfig::parse("verify.shift = [1.0]").is_err());
        assert!(RunConfig::parse("solve.damping = 0.0").is_err());
    }
}
