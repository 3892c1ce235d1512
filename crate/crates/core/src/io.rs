//! Persistence: the plain-text solution file format shared by all modules,
//! multi-profile path snapshots, CSV helpers, and the JSON report document.
//!
//! Solution files carry header lines `N=`, `p=`, `c=`, `mu=`, `R_max=`,
//! `n=`, then one `r value` pair per line. Floats round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::SolveReport;
use crate::model::field::RadialField;
use crate::model::grid::RadialGrid;
use crate::model::params::Params;

/// Header of a solution file.
#[derive(Debug, Clone, Copy)]
pub struct SolutionHeader {
    pub dim: usize,
    pub p: f64,
    pub c: f64,
    pub mu: f64,
    pub r_max: f64,
    pub n: usize,
}

/// Render a field with its parameters in the solution file format.
pub fn solution_to_string(field: &RadialField, params: &Params) -> String {
    let grid = field.grid();
    let mut s = String::new();
    let _ = writeln!(s, "N={}", grid.dim());
    let _ = writeln!(s, "p={:.17e}", params.p);
    let _ = writeln!(s, "c={:.17e}", params.c);
    let _ = writeln!(s, "mu={:.17e}", params.mu);
    let _ = writeln!(s, "R_max={:.17e}", grid.r_max());
    let _ = writeln!(s, "n={}", grid.intervals());
    for (r, v) in grid.nodes().iter().zip(field.values()) {
        let _ = writeln!(s, "{r:.17e} {v:.17e}");
    }
    s
}

pub fn write_solution(path: &Path, field: &RadialField, params: &Params) -> Result<()> {
    write_atomic(path, solution_to_string(field, params).as_bytes())
}

fn parse_header_line(line: &str, key: &str, lineno: usize) -> Result<f64> {
    let rest = line.strip_prefix(key).ok_or_else(|| Error::Parse {
        line: lineno,
        message: format!("expected header `{key}...`, got `{line}`"),
    })?;
    rest.trim().parse::<f64>().map_err(|e| Error::Parse {
        line: lineno,
        message: format!("bad number after `{key}`: {e}"),
    })
}

/// Parse a solution file into (params, field).
pub fn parse_solution(text: &str) -> Result<(Params, RadialField)> {
    let mut lines = text.lines().enumerate();
    let mut next_line = |key: &str| -> Result<(usize, String)> {
        loop {
            match lines.next() {
                Some((i, l)) if l.trim().is_empty() => {
                    let _ = (i, l);
                    continue;
                }
                Some((i, l)) => return Ok((i + 1, l.to_string())),
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        message: format!("missing header line `{key}`"),
                    })
                }
            }
        }
    };
    let (i, l) = next_line("N=")?;
    let dim = parse_header_line(&l, "N=", i)? as usize;
    let (i, l) = next_line("p=")?;
    let p = parse_header_line(&l, "p=", i)?;
    let (i, l) = next_line("c=")?;
    let c = parse_header_line(&l, "c=", i)?;
    let (i, l) = next_line("mu=")?;
    let mu = parse_header_line(&l, "mu=", i)?;
    let (i, l) = next_line("R_max=")?;
    let r_max = parse_header_line(&l, "R_max=", i)?;
    let (i, l) = next_line("n=")?;
    let n = parse_header_line(&l, "n=", i)? as usize;

    let params = Params::new(dim, p, c, mu)?;
    let grid = RadialGrid::build(dim, r_max, n)?;
    let mut values = Vec::with_capacity(n + 1);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let _r: f64 = parts
            .next()
            .ok_or(Error::Parse { line: i + 1, message: "missing radius".into() })?
            .parse()
            .map_err(|e| Error::Parse { line: i + 1, message: format!("bad radius: {e}") })?;
        let v: f64 = parts
            .next()
            .ok_or(Error::Parse { line: i + 1, message: "missing value".into() })?
            .parse()
            .map_err(|e| Error::Parse { line: i + 1, message: format!("bad value: {e}") })?;
        values.push(v);
    }
    if values.len() != n + 1 {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {} data lines, found {}", n + 1, values.len()),
        });
    }
    let field = RadialField::new(grid, values)?;
    Ok((params, field))
}

pub fn read_solution(path: &Path) -> Result<(Params, RadialField)> {
    let text = fs::read_to_string(path)?;
    parse_solution(&text)
}

/// Multi-profile snapshot: solution blocks separated by `---` lines.
pub fn path_snapshot_to_string(fields: &[RadialField], params: &Params) -> String {
    let mut s = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            s.push_str("---\n");
        }
        s.push_str(&solution_to_string(f, params));
    }
    s
}

pub fn parse_path_snapshot(text: &str) -> Result<Vec<(Params, RadialField)>> {
    text.split("---")
        .filter(|b| !b.trim().is_empty())
        .map(parse_solution)
        .collect()
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = dir.to_path_buf();
    let stem = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    tmp.push(format!(".{stem}.tmp.{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV writer with a fixed float format so artifacts are byte-reproducible.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self { buf: format!("{header}\n") }
    }

    pub fn row(&mut self, cells: &[CsvCell<'_>]) {
        let mut first = true;
        for cell in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match cell {
                CsvCell::Num(x) => {
                    let _ = write!(self.buf, "{x:.12e}");
                }
                CsvCell::Int(i) => {
                    let _ = write!(self.buf, "{i}");
                }
                CsvCell::Str(s) => {
                    self.buf.push_str(s);
                }
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }

    pub fn write(self, path: &Path) -> Result<()> {
        write_atomic(path, self.finish().as_bytes())
    }
}

pub enum CsvCell<'a> {
    Num(f64),
    Int(i64),
    Str(&'a str),
}

/// JSON-facing report document embedding the solution file text.
#[derive(Debug, Serialize)]
pub struct SolveReportDoc {
    pub kind: String,
    pub dim: usize,
    pub p: f64,
    pub c: f64,
    pub mu: f64,
    pub lambda: f64,
    pub j_value: f64,
    pub q_value: f64,
    pub pohozaev_residual: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub classification: String,
    pub status: String,
    pub solution: String,
}

impl SolveReportDoc {
    pub fn new(report: &SolveReport, params: &Params) -> Self {
        Self {
            kind: format!("{:?}", report.classification),
            dim: params.dim,
            p: params.p,
            c: report.c,
            mu: report.mu,
            lambda: report.lambda,
            j_value: report.j_value,
            q_value: report.q_value,
            pohozaev_residual: report.pohozaev_residual,
            grad_norm: report.grad_norm,
            iters: report.iters,
            classification: format!("{:?}", report.classification),
            status: format!("{:?}", report.status),
            solution: solution_to_string(&report.field, &params.with_mu(report.mu)),
        }
    }
}

/// Rebuild a grid/field pair on a refined grid (n doubled), used by the
/// refinement-order checks.
pub fn refine_field(field: &RadialField) -> Result<RadialField> {
    let g = field.grid();
    let fine = RadialGrid::build(g.dim(), g.r_max(), 2 * g.intervals())?;
    Ok(RadialField::from_fn(fine, |r| field.interp(r)))
}

/// Helper shared by CLI and tests: grid from header fields.
pub fn grid_from_header(h: &SolutionHeader) -> Result<Arc<RadialGrid>> {
    RadialGrid::build(h.dim, h.r_max, h.n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::field::gaussian_bump;

    #[test]
    fn solution_round_trip_is_exact() {
        let grid = RadialGrid::build(3, 17.5, 230).unwrap();
        let u = gaussian_bump(&grid, 2.2, 1.37).unwrap();
        let params = Params::new(3, 2.8, 1.37, 0.05).unwrap();
        let text = solution_to_string(&u, &params);
        let (p2, u2) = parse_solution(&text).unwrap();
        assert_eq!(p2.dim, 3);
        assert_eq!(p2.p, 2.8);
        assert_eq!(p2.mu, 0.05);
        assert_eq!(u.values(), u2.values());
        assert_eq!(u.grid().intervals(), u2.grid().intervals());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "N=3\np=2.5\nc=1\nmu=oops\nR_max=10\nn=16\n";
        match parse_solution(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        let short = "N=3\np=2.5\nc=1\nmu=0\nR_max=10\nn=32\n0 1\n";
        assert!(matches!(parse_solution(short), Err(Error::Parse { .. })));
    }

    #[test]
    fn path_snapshot_round_trip() {
        let grid = RadialGrid::build(2, 9.0, 64).unwrap();
        let params = Params::new(2, 4.0, 0.9, 0.0).unwrap();
        let a = gaussian_bump(&grid, 1.0, 0.9).unwrap();
        let b = gaussian_bump(&grid, 2.0, 0.9).unwrap();
        let text = path_snapshot_to_string(&[a.clone(), b.clone()], &params);
        let parsed = parse_path_snapshot(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].1.values(), a.values());
        assert_eq!(parsed[1].1.values(), b.values());
    }

    #[test]
    fn csv_is_deterministic() {
        let mut c1 = Csv::new("a,b");
        c1.row(&[CsvCell::Num(1.0 / 3.0), CsvCell::Str("x")]);
        let mut c2 = Csv::new("a,b");
        c2.row(&[CsvCell::Num(1.0 / 3.0), CsvCell::Str("x")]);
        assert_eq!(c1.finish(), c2.finish());
    }
}
