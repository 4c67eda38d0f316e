//! Solution CSV files and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use rieszsym_core::quadrature::{FieldTail, RadialField, RadialGrid};

use crate::CliError;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// A radial solution as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub n: usize,
    pub p: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

/// `# n=<n> p=<p>` followed by `r,u` rows in round-trip precision.
pub fn solution_csv(field: &RadialField, p: f64) -> Result<Vec<u8>, CliError> {
    let mut out = format!("# n={} p={}\n", field.n(), p).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["r", "u"]).map_err(csv_err)?;
        for (r, u) in field.grid().nodes().iter().zip(field.values()) {
            w.write_record([format!("{r:e}"), format!("{u:e}")]).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Input(e.to_string())
}

pub fn read_solution(path: &Path) -> Result<SolutionFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read solution {}: {e}", path.display())))?;
    parse_solution(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, String> {
    let first = text.lines().next().unwrap_or("");
    let meta = first
        .strip_prefix('#')
        .ok_or_else(|| "line 1: expected `# n=<n> p=<p>`".to_string())?;
    let (mut n, mut p) = (None, None);
    for tok in meta.split_whitespace() {
        match tok.split_once('=') {
            Some(("n", v)) => n = v.parse::<usize>().ok(),
            Some(("p", v)) => p = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let (n, p) = match (n, p) {
        (Some(n), Some(p)) => (n, p),
        _ => return Err("line 1: missing or malformed n= / p=".into()),
    };
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rd.headers().map_err(|e| e.to_string())?.clone();
    if headers.len() != 2 || &headers[0] != "r" || &headers[1] != "u" {
        return Err("expected header `r,u`".into());
    }
    let (mut r, mut u) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = rec.position().map_or(0, |pos| pos.line());
        let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("line {line}: {e}"));
        let (ri, ui) = (parse(&rec[0])?, parse(&rec[1])?);
        if !(ui > 0.0) || !ui.is_finite() {
            return Err(format!("line {line}: field value {ui} is not positive"));
        }
        r.push(ri);
        u.push(ui);
    }
    Ok(SolutionFile { n, p, r, u })
}

impl SolutionFile {
    /// Interpolated field with the `ρ^p` growth tail.
    pub fn field(&self) -> Result<RadialField, CliError> {
        let grid = RadialGrid::from_nodes(self.n, self.r.clone())?;
        Ok(RadialField::new(grid, self.u.clone())?.with_tail(FieldTail::Growth { p: self.p }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let grid = RadialGrid::log_panels(3, 1e-3, 10.0, 32).unwrap();
        let field = RadialField::from_fn(grid, |r| 1.0 + r * r / 3.0).unwrap();
        let bytes = solution_csv(&field, 2.0).unwrap();
        let back = parse_solution(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(back.n, 3);
        assert_eq!(back.p, 2.0);
        assert_eq!(back.r, field.grid().nodes());
        assert_eq!(back.u, field.values());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_solution("r,u\n1,2\n").is_err());
        assert!(parse_solution("# n=3 p=2\nr,u\n0.1,1.0\n0.2,-1.0\n")
            .unwrap_err()
            .contains("line 4"));
        assert!(parse_solution("# n=3 p=2\nr,v\n0.1,1.0\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
