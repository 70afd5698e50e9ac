//! Sweeps over one configuration variable, seeds and schemes, with CSV and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::isl::MessageLedger;
use crate::pipeline::{Instance, Scheme};
use crate::wmmse::Trace;

pub const RESULTS_HEADER: &str =
    "scheme,sweep_var,sweep_value,seed,sum_rate_bps,objective,iterations,latency_units,overhead_dims,wall_ms,status";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    None,
    PowerDbm,
    Antennas,
    Rfc,
    Sats,
    Uts,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::None => "none",
            SweepVar::PowerDbm => "power_dbm",
            SweepVar::Antennas => "antennas",
            SweepVar::Rfc => "rfc",
            SweepVar::Sats => "sats",
            SweepVar::Uts => "uts",
        }
    }

    /// Applies `value` to a copy of `cfg`.
    pub fn apply(self, cfg: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = cfg.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::Experiment(format!(
                    "{} must be a positive integer, got {value}",
                    self.name()
                )))
            }
        };
        match self {
            SweepVar::None => {}
            SweepVar::PowerDbm => c.power_budget_dbm = value,
            SweepVar::Antennas => c.panel_dims = panel_for(count()?),
            SweepVar::Rfc => c.num_rfc = count()?,
            SweepVar::Sats => c.num_sats = count()?,
            SweepVar::Uts => c.num_uts = count()?,
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepVar::None,
            SweepVar::PowerDbm,
            SweepVar::Antennas,
            SweepVar::Rfc,
            SweepVar::Sats,
            SweepVar::Uts,
        ]
        .into_iter()
        .find(|v| v.name() == s.trim())
        .ok_or_else(|| Error::Parse(format!("unknown sweep variable '{s}'")))
    }
}

/// Most square `N_h x N_v` panel with `N_h <= N_v` and `N_h * N_v = n`.
pub fn panel_for(n: usize) -> (usize, usize) {
    let mut h = (n as f64).sqrt() as usize;
    while h > 1 && !n.is_multiple_of(h) {
        h -= 1;
    }
    let h = h.max(1);
    (h, n / h)
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub sweep_var: SweepVar,
    /// Ignored (one point at the base config) when `sweep_var` is `None`.
    pub sweep_values: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub num_seeds: usize,
    pub k_eval: usize,
    /// Wall-clock timing makes output non-reproducible; when off, `wall_ms` is 0.
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Experiment("scheme list is empty".into()));
        }
        if self.num_seeds == 0 {
            return Err(Error::Experiment("num_seeds must be at least 1".into()));
        }
        if self.sweep_var != SweepVar::None {
            if self.sweep_values.is_empty() {
                return Err(Error::Experiment("sweep has no values".into()));
            }
            if self.sweep_values.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::Experiment("sweep values must be strictly increasing".into()));
            }
        }
        self.base.validate()
    }

    fn points(&self) -> Vec<f64> {
        match self.sweep_var {
            SweepVar::None => vec![f64::NAN],
            _ => self.sweep_values.clone(),
        }
    }

    fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|i| self.base.rng_seed + i).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub seed: u64,
    pub sum_rate_bps: f64,
    pub objective: f64,
    pub iterations: usize,
    pub latency_units: u64,
    pub overhead_dims: u64,
    pub wall_ms: u64,
    pub status: String,
}

impl ResultRow {
    pub fn ok(&self) -> bool {
        self.status.starts_with("ok")
    }
}

#[derive(Debug, Clone)]
pub struct CellArtifacts {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub seed: u64,
    pub trace: Trace,
    pub ledger: Option<MessageLedger>,
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub sweep_var: SweepVar,
    pub rows: Vec<ResultRow>,
    pub artifacts: Vec<CellArtifacts>,
}

impl ResultTable {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(ResultRow::ok)
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

fn error_row(scheme: Scheme, var: SweepVar, value: f64, seed: u64, e: &Error) -> ResultRow {
    ResultRow {
        scheme,
        sweep_var: var,
        sweep_value: value,
        seed,
        sum_rate_bps: f64::NAN,
        objective: f64::NAN,
        iterations: 0,
        latency_units: 0,
        overhead_dims: 0,
        wall_ms: 0,
        status: format!("error: {}", e.to_string().replace([',', '\n'], ";")),
    }
}

/// Runs every `(sweep value, seed)` cell in parallel; all schemes of a cell share one
/// scenario. Failed cells produce error rows and do not stop the run.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let cells: Vec<(f64, u64)> = spec
        .points()
        .into_iter()
        .flat_map(|v| spec.seeds().into_iter().map(move |s| (v, s)))
        .collect();
    let per_cell: Vec<(Vec<ResultRow>, Vec<CellArtifacts>)> = cells
        .par_iter()
        .map(|&(value, seed)| run_cell(spec, value, seed))
        .collect();
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for (r, a) in per_cell {
        rows.extend(r);
        artifacts.extend(a);
    }
    Ok(ResultTable {
        sweep_var: spec.sweep_var,
        rows,
        artifacts,
    })
}

fn run_cell(spec: &ExperimentSpec, value: f64, seed: u64) -> (Vec<ResultRow>, Vec<CellArtifacts>) {
    let var = spec.sweep_var;
    let inst = (if var == SweepVar::None {
        Ok(spec.base.clone())
    } else {
        var.apply(&spec.base, value)
    })
    .and_then(|mut cfg| {
        cfg.rng_seed = seed;
        Instance::build(&cfg, spec.k_eval)
    });
    let inst = match inst {
        Ok(i) => i,
        Err(e) => {
            log::warn!("cell {}={} seed {seed}: {e}", var.name(), fmt_value(value));
            return (
                spec.schemes
                    .iter()
                    .map(|&s| error_row(s, var, value, seed, &e))
                    .collect(),
                Vec::new(),
            );
        }
    };
    let mut rows = Vec::new();
    let mut arts = Vec::new();
    for &scheme in &spec.schemes {
        let start = Instant::now();
        match inst.run(scheme) {
            Ok(out) => {
                let wall_ms = if spec.record_timing {
                    start.elapsed().as_millis() as u64
                } else {
                    0
                };
                rows.push(ResultRow {
                    scheme,
                    sweep_var: var,
                    sweep_value: value,
                    seed,
                    sum_rate_bps: out.report.sum_rate_bps,
                    objective: out.report.objective,
                    iterations: out.iterations,
                    latency_units: out.latency_units,
                    overhead_dims: out.ledger.as_ref().map_or(0, MessageLedger::total_dims),
                    wall_ms,
                    status: if out.flagged {
                        "ok_regularized".into()
                    } else {
                        "ok".into()
                    },
                });
                arts.push(CellArtifacts {
                    scheme,
                    sweep_value: value,
                    seed,
                    trace: out.trace,
                    ledger: out.ledger,
                });
            }
            Err(e) => {
                log::warn!("{scheme} {}={} seed {seed}: {e}", var.name(), fmt_value(value));
                rows.push(error_row(scheme, var, value, seed, &e));
            }
        }
    }
    (rows, arts)
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scheme,
            r.sweep_var.name(),
            fmt_value(r.sweep_value),
            r.seed,
            r.sum_rate_bps,
            r.objective,
            r.iterations,
            r.latency_units,
            r.overhead_dims,
            r.wall_ms,
            r.status
        );
    }
    out
}

/// Mean and standard error of the successful rows of one `(scheme, sweep value)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub sweep_value: f64,
    pub count: usize,
    pub mean_sum_rate_bps: f64,
    pub stderr_sum_rate_bps: f64,
    pub mean_iterations: f64,
    pub mean_latency_units: f64,
}

pub fn summarize(table: &ResultTable) -> Vec<SummaryRow> {
    let mut keys: Vec<(Scheme, f64)> = Vec::new();
    for r in &table.rows {
        if !keys.iter().any(|&(s, v)| s == r.scheme && same_value(v, r.sweep_value)) {
            keys.push((r.scheme, r.sweep_value));
        }
    }
    keys.into_iter()
        .map(|(scheme, value)| {
            let ok: Vec<&ResultRow> = table
                .rows
                .iter()
                .filter(|r| r.scheme == scheme && same_value(r.sweep_value, value) && r.ok())
                .collect();
            let n = ok.len() as f64;
            let mean = ok.iter().map(|r| r.sum_rate_bps).sum::<f64>() / n;
            let var = if ok.len() > 1 {
                ok.iter().map(|r| (r.sum_rate_bps - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            SummaryRow {
                scheme,
                sweep_value: value,
                count: ok.len(),
                mean_sum_rate_bps: mean,
                stderr_sum_rate_bps: (var / n).sqrt(),
                mean_iterations: ok.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                mean_latency_units: ok.iter().map(|r| r.latency_units as f64).sum::<f64>() / n,
            }
        })
        .collect()
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

pub fn summary_csv(var: SweepVar, rows: &[SummaryRow]) -> String {
    let mut out = String::from(
        "scheme,sweep_var,sweep_value,count,mean_sum_rate_bps,stderr_sum_rate_bps,mean_iterations,mean_latency_units\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scheme,
            var.name(),
            fmt_value(r.sweep_value),
            r.count,
            r.mean_sum_rate_bps,
            r.stderr_sum_rate_bps,
            r.mean_iterations,
            r.mean_latency_units
        );
    }
    out
}

pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("iter,sum_rate,utility\n");
    for (i, r) in trace.sum_rate.iter().enumerate() {
        let u = trace.utility.get(i).map_or(String::new(), |u| u.to_string());
        let _ = writeln!(out, "{i},{r},{u}");
    }
    out
}

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Mean sum rate per scheme against the sweep value as a standalone SVG line plot.
pub fn plot_svg(var: SweepVar, rows: &[SummaryRow]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let mut schemes: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
    schemes.dedup();
    schemes.sort();
    schemes.dedup();
    let xs: Vec<f64> = rows
        .iter()
        .map(|r| if r.sweep_value.is_nan() { 0.0 } else { r.sweep_value })
        .collect();
    let ys: Vec<f64> = rows
        .iter()
        .map(|r| r.mean_sum_rate_bps)
        .filter(|y| y.is_finite())
        .collect();
    let (x0, x1) = bounds(&xs);
    let (_, y1) = bounds(&ys);
    let y0 = 0.0;
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {} L{} {} M{m} {} L{m} {m}" stroke="black" fill="none"/>"#,
        h - m,
        w - m,
        h - m,
        h - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 15.0,
        var.name()
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">sum rate [bps]</text>"#,
        h / 2.0,
        h / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#,
        m - 4.0,
        m + 4.0,
        y1
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">0</text>"#,
        m - 4.0,
        h - m + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{m}" y="{}" text-anchor="middle">{}</text>"#,
        h - m + 16.0,
        x0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w - m,
        h - m + 16.0,
        x1
    );
    for (i, scheme) in schemes.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.scheme == *scheme && r.mean_sum_rate_bps.is_finite())
            .map(|r| {
                (
                    px(if r.sweep_value.is_nan() { 0.0 } else { r.sweep_value }),
                    py(r.mean_sum_rate_bps),
                )
            })
            .collect();
        if pts.len() > 1 {
            let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
                d.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{scheme}</text>"#,
            w - m - 70.0,
            m + 14.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `results.csv`, `summary.csv`, per-run traces and ledgers, and one plot.
pub fn emit_outputs(table: &ResultTable, dir: &Path) -> Result<Vec<PathBuf>> {
    if table.rows.is_empty() {
        return Err(Error::Experiment("result table is empty".into()));
    }
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![write(dir, "results.csv", &results_csv(&table.rows))?];
    let summary = summarize(table);
    written.push(write(dir, "summary.csv", &summary_csv(table.sweep_var, &summary))?);
    for a in &table.artifacts {
        let suffix = if table.sweep_var == SweepVar::None {
            String::new()
        } else {
            format!("_{}-{}", table.sweep_var.name(), a.sweep_value)
        };
        written.push(write(
            dir,
            &format!("convergence_{}_{}{suffix}.csv", a.scheme, a.seed),
            &trace_csv(&a.trace),
        )?);
        if let Some(l) = &a.ledger {
            written.push(write(
                dir,
                &format!("ledger_{}_{}{suffix}.csv", a.scheme, a.seed),
                &l.to_csv(),
            )?);
        }
    }
    written.push(write(
        dir,
        &format!("plot_{}.svg", table.sweep_var.name()),
        &plot_svg(table.sweep_var, &summary),
    )?);
    Ok(written)
}
