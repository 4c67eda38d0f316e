//! The four subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rieszsym_core::field::{Field, ShiftedField};
use rieszsym_core::gjms::MultiplierTable;
use rieszsym_core::movingspheres::{design_directions, moving_sphere_report, MovingSphereReport, Verdict, Witness};
use rieszsym_core::nonlinearity::{check_condition, directed_search, ConditionReport};
use rieszsym_core::sampling::{log_uniform, unit_vector, Stream};
use rieszsym_core::solver::{bubble, bubble_amplitude, picard_solve, SolveDiagnostics};
use rieszsym_core::{Error as CoreError, Family, Point};
use serde::Serialize;

use crate::config::RunConfig;
use crate::io::{read_solution, solution_csv, write_atomic, write_json};
use crate::{CliError, Outcome, Status, SCHEMA_VERSION};

/// Stream ids, one per consumer of the run seed.
const STREAM_CENTRES: u64 = 0x100;
const STREAM_DIRECTIONS: u64 = 0x200;

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    /// Excluded from reproducibility comparisons.
    timestamp: String,
    command: &'static str,
    status: Status,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn envelope<'a, T: Serialize>(
    command: &'static str,
    status: Status,
    config: &'a RunConfig,
    body: T,
) -> Envelope<'a, T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        timestamp: timestamp(),
        command,
        status,
        config,
        body,
    }
}

#[derive(Serialize)]
struct SolveBody<'a> {
    outcome: &'static str,
    message: Option<String>,
    diagnostics: Option<&'a SolveDiagnostics>,
    residual_history: &'a [f64],
    /// `max |u / u_bubble - 1|` over the grid, when the exact solution is known.
    bubble_sup_rel_error: Option<f64>,
    bubble_amplitude: Option<f64>,
}

/// Known closed-form solution for the Hyder–Ngô family with `ε = 0`.
fn exact_amplitude(cfg: &RunConfig, spec_family: &Family) -> Option<f64> {
    match spec_family {
        Family::HyderNgo { epsilon, q } if *epsilon == 0.0 => Some(bubble_amplitude(cfg.problem.n, cfg.problem.p, *q)),
        _ => None,
    }
}

/// Runs the Picard solver and writes `solution.csv` and `diagnostics.json`.
pub fn solve(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let spec = cfg.spec()?;
    let grid = cfg.radial_grid()?;
    let solve_cfg = cfg.solve_config()?;
    let amp = exact_amplitude(cfg, spec.family());
    let started = Instant::now();
    let result = picard_solve(&spec, &grid, &solve_cfg);
    let elapsed = started.elapsed().as_secs_f64();
    let diag_path = out_dir.join("diagnostics.json");
    match result {
        Ok(sol) => {
            let err = amp.map(|c| {
                let b = bubble(c, cfg.problem.p);
                sol.field
                    .grid()
                    .nodes()
                    .iter()
                    .zip(sol.field.values())
                    .map(|(r, u)| (u / b(*r) - 1.0).abs())
                    .fold(0.0, f64::max)
            });
            let sol_path = out_dir.join("solution.csv");
            write_atomic(&sol_path, &solution_csv(&sol.field, cfg.problem.p)?)?;
            let body = SolveBody {
                outcome: "converged",
                message: None,
                diagnostics: Some(&sol.diagnostics),
                residual_history: &sol.diagnostics.residual_history,
                bubble_sup_rel_error: err,
                bubble_amplitude: amp,
            };
            write_json(&diag_path, &envelope("solve", Status::Pass, cfg, body))?;
            let mut summary = format!(
                "converged in {} iterations (residual {:.3e}, {:.2}s)",
                sol.diagnostics.iterations, sol.diagnostics.final_residual, elapsed
            );
            if let Some(e) = err {
                summary.push_str(&format!(", sup-rel error vs bubble {e:.3e}"));
            }
            Ok(Outcome {
                status: Status::Pass,
                summary,
                artifacts: vec![sol_path, diag_path],
            })
        }
        Err(e) if e.is_divergence() => {
            let (outcome, history) = match &e {
                CoreError::Divergence { residual_history, .. } => ("diverged", residual_history.as_slice()),
                CoreError::NotConverged { residual_history, .. } => ("not_converged", residual_history.as_slice()),
                _ => unreachable!(),
            };
            let body = SolveBody {
                outcome,
                message: Some(e.to_string()),
                diagnostics: None,
                residual_history: history,
                bubble_sup_rel_error: None,
                bubble_amplitude: amp,
            };
            write_json(&diag_path, &envelope("solve", Status::Divergence, cfg, body))?;
            Ok(Outcome {
                status: Status::Divergence,
                summary: e.to_string(),
                artifacts: vec![diag_path],
            })
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct VerifyBody<'a> {
    solution: String,
    shift: &'a [f64],
    verdict: &'static str,
    witness: Option<&'a Witness>,
    /// Index into `reports` of the centre that produced the witness.
    witness_centre: Option<usize>,
    reports: &'a [MovingSphereReport],
}

/// Deterministic centres with `|x|` log-uniform in the configured range.
pub fn sample_centres(cfg: &RunConfig) -> Vec<Point> {
    let mut rng = Stream::new(cfg.seed, STREAM_CENTRES);
    let [lo, hi] = cfg.verify.x_norm_range;
    (0..cfg.verify.x_samples)
        .map(|_| {
            let r = if hi > lo { log_uniform(&mut rng, lo, hi) } else { lo };
            let d = unit_vector(&mut rng, cfg.problem.n);
            Point::new(&d.iter().map(|c| c * r).collect::<Vec<_>>()).expect("finite centre")
        })
        .collect()
}

fn symmetry_directions(cfg: &RunConfig) -> Vec<Vec<f64>> {
    let n = cfg.problem.n;
    match cfg.verify.directions {
        0 => design_directions(n),
        k => {
            let mut rng = Stream::new(cfg.seed, STREAM_DIRECTIONS);
            (0..k).map(|_| unit_vector(&mut rng, n)).collect()
        }
    }
}

/// Moving-sphere and symmetry checks on a stored solution. Writes
/// `verify.json` and the per-`λ` curves `min_gap.csv`.
pub fn verify(cfg: &RunConfig, solution: &Path, out_dir: &Path) -> Result<Outcome, CliError> {
    let file = read_solution(solution)?;
    if file.n != cfg.problem.n || file.p != cfg.problem.p {
        return Err(CliError::Input(format!(
            "solution has n={} p={} but the config has n={} p={}",
            file.n, file.p, cfg.problem.n, cfg.problem.p
        )));
    }
    let field = file.field()?;
    let shift = cfg.verify.shift.clone();
    let u: Box<dyn Field> = if shift.iter().any(|s| *s != 0.0) {
        Box::new(ShiftedField::new(&field, &shift)?)
    } else {
        Box::new(&field)
    };
    let probes = cfg.probe_config();
    let sym = cfg.symmetry_config(symmetry_directions(cfg));
    let mut reports = Vec::new();
    for x in sample_centres(cfg) {
        reports.push(moving_sphere_report(u.as_ref(), &x, cfg.problem.p, &probes, &sym)?);
    }
    let violation = reports
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.verdict.witness().map(|w| (i, w)));
    let (status, verdict) = if violation.is_some() {
        (Status::Violation, "violation_found")
    } else if reports.is_empty() || reports.iter().any(|r| matches!(r.verdict, Verdict::Inconclusive(_))) {
        (Status::Inconclusive, "inconclusive")
    } else {
        (Status::Pass, "symmetry_certified")
    };
    let body = VerifyBody {
        solution: solution.display().to_string(),
        shift: &shift,
        verdict,
        witness: violation.map(|(_, w)| w),
        witness_centre: violation.map(|(i, _)| i),
        reports: &reports,
    };
    let json_path = out_dir.join("verify.json");
    write_json(&json_path, &envelope("verify", status, cfg, body))?;
    let curve_path = out_dir.join("min_gap.csv");
    write_atomic(&curve_path, &min_gap_csv(&reports)?)?;
    let min_lb = reports
        .iter()
        .map(|r| r.lambda_bar_est / r.x.norm())
        .fold(f64::INFINITY, f64::min);
    let summary = match violation {
        Some((i, w)) => format!("{verdict}: {:?} witness at y = {:?} (centre {i})", w.kind, w.y),
        None => format!("{verdict}: {} centres, min λ̄(x)/|x| = {min_lb:.4}", reports.len()),
    };
    Ok(Outcome {
        status,
        summary,
        artifacts: vec![json_path, curve_path],
    })
}

fn min_gap_csv(reports: &[MovingSphereReport]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["centre", "x_norm", "lambda", "min_gap"]).map_err(io)?;
        for (i, r) in reports.iter().enumerate() {
            for (l, g) in r.lambda_values.iter().zip(&r.min_gap) {
                w.write_record([
                    i.to_string(),
                    format!("{:e}", r.x.norm()),
                    format!("{l:e}"),
                    format!("{g:e}"),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct CheckfBody<'a> {
    random: &'a ConditionReport,
    directed: Option<&'a ConditionReport>,
}

/// Random and directed falsification of the comparison condition. Writes
/// `checkf.json`.
pub fn checkf(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    if cfg.checkf.count == 0 {
        return Err(CliError::Config("checkf.count must be at least 1".into()));
    }
    let spec = cfg.spec()?;
    let random = check_condition(&spec, &cfg.sampler(), cfg.checkf.count)?;
    let directed = match cfg.directed_search() {
        Some(search) => Some(directed_search(&spec, &search)?),
        None => None,
    };
    let violations = random.violation_count + directed.as_ref().map_or(0, |d| d.violation_count);
    let mismatches = random.reformulation_mismatches.unwrap_or(0)
        + directed.as_ref().and_then(|d| d.reformulation_mismatches).unwrap_or(0);
    let status = if violations == 0 {
        Status::Pass
    } else {
        Status::Violation
    };
    let path = out_dir.join("checkf.json");
    let body = CheckfBody {
        random: &random,
        directed: directed.as_ref(),
    };
    write_json(&path, &envelope("checkf", status, cfg, body))?;
    Ok(Outcome {
        status,
        summary: format!(
            "{} random + {} directed samples, {violations} violations, {mismatches} reformulation mismatches, min margin {:.3e}",
            random.samples_tested,
            directed.as_ref().map_or(0, |d| d.samples_tested),
            random.min_margin
        ),
        artifacts: vec![path],
    })
}

/// `l,alpha` rows for `l = 0..=max_degree`.
pub fn gjms_csv(s: f64, n: usize, max_degree: i64) -> Result<Vec<u8>, CliError> {
    let max_degree = usize::try_from(max_degree)
        .map_err(|_| CliError::Usage(format!("--max-degree must be nonnegative, got {max_degree}")))?;
    let table = MultiplierTable::new(s, n, max_degree)?;
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["l", "alpha"]).map_err(io)?;
        for (l, a) in table.entries().iter().enumerate() {
            w.write_record([l.to_string(), fmt_value(*a)]).map_err(io)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes the multiplier table to `out` (as `gjms.csv`) or returns it for
/// stdout.
pub fn gjms(s: f64, n: usize, max_degree: i64, out_dir: Option<&Path>) -> Result<(Outcome, Vec<u8>), CliError> {
    let csv = gjms_csv(s, n, max_degree)?;
    let mut artifacts: Vec<PathBuf> = Vec::new();
    if let Some(dir) = out_dir {
        let path = dir.join("gjms.csv");
        write_atomic(&path, &csv)?;
        artifacts.push(path);
    }
    Ok((
        Outcome {
            status: Status::Pass,
            summary: format!("α_{{2s,n}}(l) for s={s}, n={n}, l=0..={max_degree}"),
            artifacts,
        },
        csv,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gjms_rows() {
        let csv = String::from_utf8(gjms_csv(1.0, 4, 3).unwrap()).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("l,alpha"));
        for (l, line) in lines.enumerate() {
            let (k, a) = line.split_once(',').unwrap();
            assert_eq!(k.parse::<usize>().unwrap(), l);
            let want = ((l + 1) * (l + 2)) as f64;
            assert!((a.parse::<f64>().unwrap() - want).abs() < 1e-12 * want);
        }
        let csv = String::from_utf8(gjms_csv(3.0, 4, 0).unwrap()).unwrap();
        assert_eq!(csv, "l,alpha\n0,0\n");
        assert!(matches!(gjms_csv(1.0, 4, -1), Err(CliError::Usage(_))));
    }

    #[test]
    fn centres_are_reproducible() {
        let cfg = RunConfig::default();
        let a = sample_centres(&cfg);
        assert_eq!(a, sample_centres(&cfg));
        assert_eq!(a.len(), cfg.verify.x_samples);
        assert!(a.iter().all(|x| (0.1..=10.0).contains(&x.norm())));
    }

    #[test]
    fn checkf_rejects_zero_count() {
        let mut cfg = RunConfig::default();
        cfg.checkf.count = 0;
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(checkf(&cfg, dir.path()), Err(CliError::Config(_))));
    }
}
