//! CSV artifacts and network checkpoints.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading a
//! file back gives the same bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use sigbsde_core::bsde::BsdeSolution;
use sigbsde_core::matrix::SampleMatrix;
use sigbsde_core::metrics::ErrorReport;
use sigbsde_core::mlp::Mlp;
use sigbsde_core::simulate::PathBatch;

use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(path: &Path, field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| Error::Parse {
        origin: path.display().to_string(),
        line: 0,
        message: format!("bad number {field:?}"),
    })
}

macro_rules! w {
    ($wtr:expr, $path:expr, $rec:expr) => {
        $wtr.write_record($rec).map_err(|e| Error::csv($path, e))?
    };
}

fn finish(mut wtr: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// `sample,k,t,value` for the first `max_samples` paths.
pub fn write_paths(path: &Path, batch: &PathBatch, max_samples: usize) -> Result<()> {
    let mut wtr = writer(path)?;
    w!(wtr, path, ["sample", "k", "t", "value"]);
    for j in 0..batch.samples().min(max_samples) {
        for k in 0..=batch.grid.steps() {
            w!(
                wtr,
                path,
                [
                    j.to_string(),
                    k.to_string(),
                    batch.grid.time(k).to_string(),
                    batch.values.get(j, k).to_string()
                ]
            );
        }
    }
    finish(wtr, path)
}

/// Reads `sample,k,t,value` back into the time column and a sample matrix.
pub fn read_paths(path: &Path) -> Result<(Vec<f64>, SampleMatrix)> {
    let mut rows: Vec<(usize, usize, f64, f64)> = Vec::new();
    for rec in reader(path)?.deserialize() {
        rows.push(rec.map_err(|e| Error::csv(path, e))?);
    }
    let samples = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let points = rows.iter().map(|r| r.1 + 1).max().unwrap_or(0);
    if rows.len() != samples * points {
        return Err(Error::Parse {
            origin: path.display().to_string(),
            line: 0,
            message: format!("expected {} rows, found {}", samples * points, rows.len()),
        });
    }
    let mut times = vec![0.0; points];
    let mut m = SampleMatrix::zeros(samples, points);
    for (j, k, t, v) in rows {
        times[k] = t;
        m.set(j, k, v);
    }
    Ok((times, m))
}

/// `sample,k,t,X,Y,Z`, with `Z` empty at the terminal index.
pub fn write_solution(path: &Path, sol: &BsdeSolution, max_samples: usize) -> Result<()> {
    let mut wtr = writer(path)?;
    w!(wtr, path, ["sample", "k", "t", "X", "Y", "Z"]);
    let n = sol.grid.steps();
    for j in 0..sol.y.samples().min(max_samples) {
        for k in 0..=n {
            let z = if k < n { sol.z.get(j, k).to_string() } else { String::new() };
            w!(
                wtr,
                path,
                [
                    j.to_string(),
                    k.to_string(),
                    sol.grid.time(k).to_string(),
                    sol.forward.values.get(j, k).to_string(),
                    sol.y.get(j, k).to_string(),
                    z
                ]
            );
        }
    }
    finish(wtr, path)
}

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub iteration: usize,
    pub erl2_y: Option<f64>,
    pub erl2_z: Option<f64>,
    /// `ok`, `oracle-only`, or the solver error.
    pub status: String,
}

/// `iteration,erl2_y,erl2_z,status` in iteration order; failed iterations
/// have empty errors and the message as status.
pub fn write_report(path: &Path, report: &ErrorReport) -> Result<()> {
    let mut rows: Vec<ReportRow> = report
        .iterations
        .iter()
        .zip(report.erl2_y.iter().zip(&report.erl2_z))
        .map(|(&iteration, (&erl2_y, &erl2_z))| ReportRow {
            iteration,
            erl2_y,
            erl2_z,
            status: if erl2_y.is_some() { "ok" } else { "oracle-only" }.into(),
        })
        .collect();
    rows.extend(report.failures.iter().map(|(i, msg)| ReportRow {
        iteration: *i,
        erl2_y: None,
        erl2_z: None,
        status: msg.clone(),
    }));
    rows.sort_by_key(|r| r.iteration);

    let mut wtr = writer(path)?;
    w!(wtr, path, ["iteration", "erl2_y", "erl2_z", "status"]);
    for r in rows {
        w!(
            wtr,
            path,
            [r.iteration.to_string(), opt(r.erl2_y), opt(r.erl2_z), r.status]
        );
    }
    finish(wtr, path)
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let mut out = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let iteration = rec[0].parse().map_err(|_| Error::Parse {
            origin: path.display().to_string(),
            line: out.len() + 2,
            message: format!("bad iteration {:?}", &rec[0]),
        })?;
        out.push(ReportRow {
            iteration,
            erl2_y: parse_opt(path, &rec[1])?,
            erl2_z: parse_opt(path, &rec[2])?,
            status: rec[3].to_string(),
        });
    }
    Ok(out)
}

/// `epoch,loss`.
pub fn write_losses(path: &Path, losses: &[f64]) -> Result<()> {
    let mut wtr = writer(path)?;
    w!(wtr, path, ["epoch", "loss"]);
    for (e, l) in losses.iter().enumerate() {
        w!(wtr, path, [e.to_string(), l.to_string()]);
    }
    finish(wtr, path)
}

pub fn read_losses(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for rec in reader(path)?.deserialize() {
        let (_, loss): (usize, f64) = rec.map_err(|e| Error::csv(path, e))?;
        out.push(loss);
    }
    Ok(out)
}

/// `samples,mean_erl2_y,std_erl2_y`.
pub fn write_scaling(path: &Path, rows: &[(usize, f64, f64)]) -> Result<()> {
    let mut wtr = writer(path)?;
    w!(wtr, path, ["samples", "mean_erl2_y", "std_erl2_y"]);
    for (m, mean, sd) in rows {
        w!(wtr, path, [m.to_string(), mean.to_string(), sd.to_string()]);
    }
    finish(wtr, path)
}

/// Network checkpoint: a `layers,...` line with the widths, then
/// `param,value` rows in layer order, weights row-major before biases.
pub fn write_checkpoint(path: &Path, net: &Mlp) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let sizes: Vec<String> = net.sizes().iter().map(|s| s.to_string()).collect();
    let mut text = format!("layers,{}\nparam,value\n", sizes.join(","));
    for (i, p) in net.flatten().iter().enumerate() {
        text.push_str(&format!("{i},{p}\n"));
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Mlp> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let bad = |line: usize, message: String| Error::Parse {
        origin: origin.clone(),
        line,
        message,
    };
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| bad(1, "empty checkpoint".into()))?;
    let sizes = head
        .strip_prefix("layers,")
        .ok_or_else(|| bad(1, "expected `layers,...`".into()))?
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| bad(1, e.to_string()))?;
    if lines.next().map(str::trim) != Some("param,value") {
        return Err(bad(2, "expected `param,value` header".into()));
    }
    let mut params = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (idx, value) = line
            .split_once(',')
            .ok_or_else(|| bad(i + 3, "expected `param,value`".into()))?;
        if idx.trim().parse::<usize>().ok() != Some(params.len()) {
            return Err(bad(i + 3, format!("parameter index {idx} out of order")));
        }
        params.push(value.trim().parse::<f64>().map_err(|e| bad(i + 3, e.to_string()))?);
    }
    Ok(Mlp::unflatten(&sizes, &params)?)
}
