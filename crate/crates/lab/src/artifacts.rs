//! CSV and JSON artifacts. Every CSV starts with `#` comment rows carrying
//! the command, the config hash and the seed.

use std::fs;
use std::path::{Path, PathBuf};

use pevol_core::coefficients::ConditionReport;
use pevol_core::fit::line_fit;
use pevol_core::grid::SymbolGrid2D;
use pevol_core::lab::GrowthRecord;
use pevol_core::solver::Trajectory;
use serde::Serialize;

use crate::config::Command;
use crate::{LabError, Result};

/// Provenance stamped on every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Stamp {
    pub fn new(command: Command, config_sha256: String, seed: u64) -> Self {
        Self { command: command.as_str().into(), config_sha256, seed }
    }

    fn comment_rows(&self) -> String {
        format!("# pevol {}\n# config_sha256={}\n# seed={}\n", self.command, self.config_sha256, self.seed)
    }
}

/// Shortest round-trip decimal.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Writes a stamped CSV; returns the path.
pub fn write_csv<I>(dir: &Path, name: &str, stamp: &Stamp, columns: &[&str], rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut buf = stamp.comment_rows().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| LabError::io(Path::new(name), e))?;
    }
    let path = dir.join(name);
    fs::write(&path, buf).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

/// Writes `value` pretty-printed with the stamp under `"stamp"`.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, stamp: &Stamp, value: &T) -> Result<PathBuf> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        stamp: &'a Stamp,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut text = serde_json::to_string_pretty(&Wrapped { stamp, body: value })?;
    text.push('\n');
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

/// Reads a stamped CSV back: comment rows, header and records.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let comments: Vec<String> = text.lines().take_while(|l| l.starts_with('#')).map(String::from).collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.map(|r| r.iter().map(String::from).collect())).collect::<std::result::Result<_, _>>()?;
    Ok((comments, header, rows))
}

/// `<family>_<p>_<k>.csv`: one row per checkpoint with every localized norm.
pub fn write_record(dir: &Path, family: &str, p: u32, stamp: &Stamp, r: &GrowthRecord) -> Result<PathBuf> {
    let names: Vec<String> = r.indices.iter().map(|(a, b)| format!("v_{a}_{b}")).collect();
    let mut columns = vec!["k", "rho_k", "n", "t", "sigma_k", "bk_integral", "solution_norm"];
    columns.extend(names.iter().map(String::as_str));
    let rows = (0..r.times.len()).map(|i| {
        let mut row = vec![
            r.k.to_string(),
            num(r.rho_k),
            num(r.n),
            num(r.times[i]),
            num(r.sigma[i]),
            num(r.bk[i]),
            num(r.solution_norms[i]),
        ];
        row.extend(r.norms[i].iter().map(|v| num(*v)));
        row
    });
    write_csv(dir, &format!("{family}_{p}_{}.csv", r.k), stamp, &columns, rows)
}

/// `(t, node index, re, im)` for every checkpoint.
pub fn write_trajectory(dir: &Path, name: &str, stamp: &Stamp, traj: &Trajectory) -> Result<PathBuf> {
    let rows = traj.states.iter().flat_map(|s| {
        s.values
            .iter()
            .enumerate()
            .map(move |(j, v)| vec![num(s.t), j.to_string(), num(v.re), num(v.im)])
    });
    write_csv(dir, name, stamp, &["t", "node", "re", "im"], rows)
}

/// `(t, l2_norm, log_norm)` at the checkpoints.
pub fn write_norms(dir: &Path, name: &str, stamp: &Stamp, traj: &Trajectory, grid: &SymbolGrid2D) -> Result<PathBuf> {
    let rows = traj.states.iter().map(|s| {
        let n = s.norm(grid);
        vec![num(s.t), num(n), num(n.ln())]
    });
    write_csv(dir, name, stamp, &["t", "l2_norm", "log_norm"], rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    GrowthCurve,
    ExponentFit,
    ConditionProfile,
}

impl PlotKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GrowthCurve => "growth-curve",
            Self::ExponentFit => "exponent-fit",
            Self::ConditionProfile => "condition-profile",
        }
    }
}

pub enum PlotSource<'a> {
    Records(&'a [GrowthRecord]),
    Condition(&'a ConditionReport),
}

/// Tidy plot data: `growth-curve` and `exponent-fit` from growth records,
/// `condition-profile` from a condition report.
pub fn emit_plotdata(dir: &Path, prefix: &str, stamp: &Stamp, kind: PlotKind, source: PlotSource<'_>) -> Result<PathBuf> {
    let name = format!("{prefix}_{}.csv", kind.as_str());
    match (kind, source) {
        (PlotKind::GrowthCurve, PlotSource::Records(recs)) => {
            if recs.is_empty() {
                return Err(LabError::Empty);
            }
            let rows = recs.iter().flat_map(|r| {
                r.times.iter().zip(&r.sigma).map(move |(t, s)| vec![r.k.to_string(), num(*t), num(*s), num(s.ln())])
            });
            write_csv(dir, &name, stamp, &["k", "t", "sigma", "log_sigma"], rows)
        }
        (PlotKind::ExponentFit, PlotSource::Records(recs)) => {
            if recs.is_empty() {
                return Err(LabError::Empty);
            }
            let xs: Vec<f64> = recs.iter().map(|r| r.rho_k).collect();
            let ys: Vec<f64> = recs.iter().map(|r| r.sigma_end().ln()).collect();
            let fit = line_fit(&xs, &ys);
            let rows = xs.iter().zip(&ys).map(|(x, y)| {
                let f = fit.eval(*x);
                vec![num(*x), num(*y), num(f), num(y - f)]
            });
            write_csv(dir, &name, stamp, &["rho_k", "log_sigma_end", "fit_value", "residual"], rows)
        }
        (PlotKind::ConditionProfile, PlotSource::Condition(rep)) => {
            if rep.rho_grid.is_empty() {
                return Err(LabError::Empty);
            }
            let rows = rep
                .rho_grid
                .iter()
                .zip(&rep.sup_integrals)
                .map(|(r, s)| vec![num(*r), num(*s), num(rep.bound_value(*r))]);
            write_csv(dir, &name, stamp, &["rho", "sup_integral", "M_log_bound"], rows)
        }
        (k, _) => Err(LabError::Config(format!("plot kind {} does not match its source", k.as_str()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stamped_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let stamp = Stamp::new(Command::Solve, "ab".repeat(32), 7);
        let path = write_csv(dir.path(), "x.csv", &stamp, &["a", "b"], vec![vec![num(0.1), num(-2.5e-300)]]).unwrap();
        let (comments, header, rows) = read_csv(&path).unwrap();
        assert_eq!(comments, vec!["# pevol solve".to_string(), format!("# config_sha256={}", "ab".repeat(32)), "# seed=7".into()]);
        assert_eq!(header, vec!["a", "b"]);
        assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), -2.5e-300);
    }
}
