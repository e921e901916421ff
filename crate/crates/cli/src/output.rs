//! Trace and report files. Numbers in CSV use 17 significant digits; JSON
//! uses the shortest representation that round-trips.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracfite::weighted::{GradedGrid, WeightedFn};
use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, CliResult};

/// Stands in for f and g at the first node, where they may be infinite.
pub const NA: &str = "NA";

pub const TRACE_HEADER: [&str; 5] = ["t", "w_f", "f", "w_g", "g"];

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn raw_values(w: &WeightedFn<f64>) -> Vec<Option<f64>> {
    let grid = w.grid();
    grid.nodes()
        .iter()
        .enumerate()
        .map(|(j, &t)| if j == 0 { None } else { w.eval_raw(t).ok() })
        .collect()
}

/// Renders the trace of a solved pair (f, g) in the requested format.
pub fn render_trace(f: &WeightedFn<f64>, g: &WeightedFn<f64>, format: Format) -> String {
    let nodes = f.grid().nodes();
    let (rf, rg) = (raw_values(f), raw_values(g));
    match format {
        Format::Csv => {
            let mut out = TRACE_HEADER.join(",");
            out.push('\n');
            let cell = |v: Option<f64>| v.map_or_else(|| NA.to_string(), num);
            for j in 0..nodes.len() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    num(nodes[j]),
                    num(f.samples()[j]),
                    cell(rf[j]),
                    num(g.samples()[j]),
                    cell(rg[j])
                );
            }
            out
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Trace<'a> {
                t: &'a [f64],
                w_f: &'a [f64],
                f: Vec<Option<f64>>,
                w_g: &'a [f64],
                g: Vec<Option<f64>>,
            }
            to_json(&Trace {
                t: nodes,
                w_f: f.samples(),
                f: rf,
                w_g: g.samples(),
                g: rg,
            })
        }
    }
}

pub fn trace_name(format: Format, partial: bool) -> &'static str {
    match (format, partial) {
        (Format::Csv, false) => "trace.csv",
        (Format::Csv, true) => "trace.partial.csv",
        (Format::Json, false) => "trace.json",
        (Format::Json, true) => "trace.partial.json",
    }
}

/// Regularized parts read back from a trace file.
#[derive(Debug, Clone)]
pub struct StoredTrace {
    pub f: WeightedFn<f64>,
    pub g: WeightedFn<f64>,
}

fn bad(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Config(format!("{}: {}", path.display(), msg.into()))
}

/// Reads a trace written by `render_trace` and rebuilds its graded grid.
pub fn read_trace(path: &PathBuf) -> CliResult<StoredTrace> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.clone(),
        source,
    })?;
    let (t, wf, wg) = if text.trim_start().starts_with('{') {
        #[derive(serde::Deserialize)]
        struct Cols {
            t: Vec<f64>,
            w_f: Vec<f64>,
            w_g: Vec<f64>,
        }
        let c: Cols = serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.clone(),
            source,
        })?;
        (c.t, c.w_f, c.w_g)
    } else {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
        if header != TRACE_HEADER {
            return Err(bad(path, "header must be t,w_f,f,w_g,g"));
        }
        let (mut t, mut wf, mut wg) = (Vec::new(), Vec::new(), Vec::new());
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |i: usize| -> CliResult<f64> {
                cols.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(path, format!("row {} column {}", k + 2, i + 1)))
            };
            t.push(parse(0)?);
            wf.push(parse(1)?);
            wg.push(parse(3)?);
        }
        (t, wf, wg)
    };
    let grid = Arc::new(infer_grid(&t).ok_or_else(|| bad(path, "t column is not a graded grid"))?);
    Ok(StoredTrace {
        f: WeightedFn::from_samples(0.0, grid.clone(), wf)?,
        g: WeightedFn::from_samples(0.0, grid, wg)?,
    })
}

/// Recovers (a, c, n, r) from the nodes and checks every node against them.
fn infer_grid(t: &[f64]) -> Option<GradedGrid<f64>> {
    let n = t.len().checked_sub(1).filter(|&n| n >= 2)?;
    let (a, c) = (t[0], t[n]);
    let frac = (t[1] - a) / (c - a);
    let r = frac.ln() / (1.0 / n as f64).ln();
    // configs give r with few decimals; prefer the snapped value when it
    // reproduces the stored nodes bit for bit
    let snapped = (r * 1e6).round() / 1e6;
    let exact = GradedGrid::new(a, c, n, snapped)
        .ok()
        .filter(|g| g.nodes() == t);
    exact.or_else(|| {
        let grid = GradedGrid::new(a, c, n, r).ok()?;
        let ok = grid
            .nodes()
            .iter()
            .zip(t)
            .all(|(x, y)| (x - y).abs() <= 1e-12 * (c - a).abs().max(1.0));
        ok.then_some(grid)
    })
}
