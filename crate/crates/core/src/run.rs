//! End-to-end pipelines: build, solve, evaluate, simulate, sweep, and the
//! CSV and plot-script outputs.
//!
//! CSV columns, in order:
//!
//! `scenario, parameter, value, mode, source, metric_mode`, the eight
//! metrics (`p_block, n_connections, n_queue, n_drop, lambda_bar, p_drop,
//! throughput, delay`), their 99% half-widths prefixed `hw_` (simulation
//! rows only), `truncation_check` (analytic no-CAC rows only), `residual`
//! (analytic rows only) and `wall_time_s`.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{
    build_transition_matrix, solve_stationary, truncation_check, StationaryDistribution,
    TransitionMatrix, TRUNCATION_WARNING,
};
use crate::config::{numeric_keys, SystemConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport, METRIC_NAMES};
use crate::mmpp::mean_rate;
use crate::sim::{simulate, SimConfig, SimReport};
use crate::traffic::AdmissionMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    Both,
}

impl Command {
    fn analytic(self) -> bool {
        matches!(self, Command::Analyze | Command::Both)
    }

    fn simulated(self) -> bool {
        matches!(self, Command::Simulate | Command::Both)
    }
}

/// A solved chain with its metrics.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub matrix: TransitionMatrix,
    pub pi: StationaryDistribution,
    pub report: MetricsReport,
    /// Boundary mass at `C_tr`; `None` under CAC.
    pub truncation: Option<f64>,
    pub wall_time_s: f64,
}

pub fn analyze(config: &SystemConfig) -> Result<Analysis> {
    let start = Instant::now();
    let matrix = build_transition_matrix(config)?;
    let pi = solve_stationary(&matrix, &config.solver.options())?;
    let report = evaluate(&pi, &matrix, mean_rate(&config.mmpp)?, config.metric_mode);
    let truncation = match config.mode {
        AdmissionMode::NoCac => Some(truncation_check(&pi)?),
        AdmissionMode::Cac => None,
    };
    Ok(Analysis {
        matrix,
        pi,
        report,
        truncation,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub scenario: String,
    pub parameter: String,
    pub value: Option<f64>,
    pub mode: &'static str,
    pub source: &'static str,
    pub metric_mode: &'static str,
    pub p_block: f64,
    pub n_connections: f64,
    pub n_queue: f64,
    pub n_drop: f64,
    pub lambda_bar: f64,
    pub p_drop: f64,
    pub throughput: f64,
    pub delay: f64,
    pub hw_p_block: Option<f64>,
    pub hw_n_connections: Option<f64>,
    pub hw_n_queue: Option<f64>,
    pub hw_n_drop: Option<f64>,
    pub hw_lambda_bar: Option<f64>,
    pub hw_p_drop: Option<f64>,
    pub hw_throughput: Option<f64>,
    pub hw_delay: Option<f64>,
    pub truncation_check: Option<f64>,
    pub residual: Option<f64>,
    pub wall_time_s: f64,
}

impl CsvRow {
    pub fn metrics(&self) -> [f64; 8] {
        [
            self.p_block,
            self.n_connections,
            self.n_queue,
            self.n_drop,
            self.lambda_bar,
            self.p_drop,
            self.throughput,
            self.delay,
        ]
    }
}

/// Where a row came from in a sweep or single run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub parameter: Option<(String, f64)>,
}

impl Scenario {
    pub fn base() -> Self {
        Scenario {
            id: "base".into(),
            parameter: None,
        }
    }
}

fn analytic_row(scenario: &Scenario, config: &SystemConfig, a: &Analysis) -> CsvRow {
    let r = &a.report;
    CsvRow {
        scenario: scenario.id.clone(),
        parameter: scenario.parameter.as_ref().map_or(String::new(), |p| p.0.clone()),
        value: scenario.parameter.as_ref().map(|p| p.1),
        mode: config.mode.as_str(),
        source: "analytic",
        metric_mode: r.mode.as_str(),
        p_block: r.p_block,
        n_connections: r.n_connections,
        n_queue: r.n_queue,
        n_drop: r.n_drop,
        lambda_bar: r.lambda_bar,
        p_drop: r.p_drop,
        throughput: r.throughput,
        delay: r.delay,
        hw_p_block: None,
        hw_n_connections: None,
        hw_n_queue: None,
        hw_n_drop: None,
        hw_lambda_bar: None,
        hw_p_drop: None,
        hw_throughput: None,
        hw_delay: None,
        truncation_check: a.truncation,
        residual: Some(a.pi.residual()),
        wall_time_s: a.wall_time_s,
    }
}

fn sim_row(scenario: &Scenario, config: &SystemConfig, s: &SimReport, wall_time_s: f64) -> CsvRow {
    let e = s.estimates();
    let hw = |i: usize| Some(e[i].half_width);
    CsvRow {
        scenario: scenario.id.clone(),
        parameter: scenario.parameter.as_ref().map_or(String::new(), |p| p.0.clone()),
        value: scenario.parameter.as_ref().map(|p| p.1),
        mode: config.mode.as_str(),
        source: "sim",
        metric_mode: "consistent",
        p_block: e[0].mean,
        n_connections: e[1].mean,
        n_queue: e[2].mean,
        n_drop: e[3].mean,
        lambda_bar: e[4].mean,
        p_drop: e[5].mean,
        throughput: e[6].mean,
        delay: e[7].mean,
        hw_p_block: hw(0),
        hw_n_connections: hw(1),
        hw_n_queue: hw(2),
        hw_n_drop: hw(3),
        hw_lambda_bar: hw(4),
        hw_p_drop: hw(5),
        hw_throughput: hw(6),
        hw_delay: hw(7),
        truncation_check: None,
        residual: None,
        wall_time_s,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub rows: Vec<CsvRow>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    fn extend(&mut self, other: RunOutput) {
        self.rows.extend(other.rows);
        self.warnings.extend(other.warnings);
    }
}

/// Runs one configuration in its configured admission mode.
pub fn run(config: &SystemConfig, command: Command, sim: &SimConfig, scenario: &Scenario) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    if command.analytic() {
        let a = analyze(config)?;
        if let Some(t) = a.truncation {
            if t >= TRUNCATION_WARNING {
                out.warnings.push(format!(
                    "scenario {}: boundary probability {t:.3e} at C_tr = {} is not below {TRUNCATION_WARNING:e}; raise C_tr",
                    scenario.id, config.truncation_level
                ));
            }
        }
        if !a.report.delay_defined() {
            out.warnings.push(format!(
                "scenario {} ({}): zero throughput, delay undefined",
                scenario.id,
                config.mode.as_str()
            ));
        }
        out.rows.push(analytic_row(scenario, config, &a));
    }
    if command.simulated() {
        let start = Instant::now();
        let s = simulate(config, sim)?;
        out.rows.push(sim_row(scenario, config, &s, start.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// One scalar key swept over `start, start + step, ...` up to `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub start: f64,
    pub step: f64,
    pub end: f64,
}

impl SweepSpec {
    /// Parses `key=start:step:end`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Sweep(format!("{msg} in `{text}`; expected key=start:step:end"));
        let (key, range) = text.split_once('=').ok_or_else(|| bad("missing `=`"))?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected three `:`-separated numbers"));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("non-numeric bound"));
        let spec = SweepSpec {
            key: key.trim().to_string(),
            start: num(parts[0])?,
            step: num(parts[1])?,
            end: num(parts[2])?,
        };
        spec.points()?;
        Ok(spec)
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !numeric_keys().any(|k| k == self.key) {
            return Err(Error::Sweep(format!("`{}` is not a sweepable key", self.key)));
        }
        if !(self.start.is_finite() && self.step.is_finite() && self.end.is_finite()) {
            return Err(Error::Sweep("bounds must be finite".into()));
        }
        if self.step == 0.0 {
            return Err(Error::Sweep("step must be nonzero".into()));
        }
        let span = (self.end - self.start) / self.step;
        if span < -1e-9 {
            return Err(Error::Sweep("step points away from end".into()));
        }
        let count = (span + 1e-9).floor() as usize + 1;
        if count > 100_000 {
            return Err(Error::Sweep(format!("{count} points is too many")));
        }
        // Round away accumulated binary noise such as 0.30000000000000004.
        Ok((0..count)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                format!("{v:.12e}").parse().expect("formatted float parses")
            })
            .collect())
    }
}

/// Runs every sweep point under both CAC (threshold `C`) and no CAC
/// (truncation `C_tr`). Points run concurrently; rows come back in sweep
/// order, CAC before no-CAC at each point.
pub fn sweep(config: &SystemConfig, spec: &SweepSpec, command: Command, sim: &SimConfig) -> Result<RunOutput> {
    let points = spec.points()?;
    let jobs: Vec<(usize, f64, AdmissionMode)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| [AdmissionMode::Cac, AdmissionMode::NoCac].map(|m| (i, v, m)))
        .collect();
    let outputs = jobs
        .par_iter()
        .map(|&(i, value, mode)| {
            let point = config.with_override(&spec.key, value)?.with_mode(mode);
            let scenario = Scenario {
                id: format!("{}-{i}", spec.key),
                parameter: Some((spec.key.clone(), value)),
            };
            run(&point, command, sim, &scenario)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = RunOutput::default();
    outputs.into_iter().for_each(|o| out.extend(o));
    Ok(out)
}

pub fn write_csv<W: Write>(rows: &[CsvRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        // Header only.
        w.write_record(csv_header())?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = ["scenario", "parameter", "value", "mode", "source", "metric_mode"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
    h.extend(METRIC_NAMES.iter().map(|s| format!("hw_{s}")));
    h.extend(["truncation_check", "residual", "wall_time_s"].map(String::from));
    h
}

/// Gnuplot script drawing one chart per metric against the swept value,
/// one series per admission mode (and per source when simulated).
pub fn plot_script(csv_file: &str, spec: &SweepSpec, rows: &[CsvRow]) -> String {
    let header = csv_header();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap() + 1;
    let mut sources: Vec<&str> = rows.iter().map(|r| r.source).collect();
    sources.dedup();
    sources.sort_unstable();
    sources.dedup();
    let mut s = String::new();
    s.push_str("# gnuplot script; run with: gnuplot <this file>\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside\n");
    s.push_str("set grid\n");
    s.push_str("set terminal pngcairo size 800,500\n");
    for name in METRIC_NAMES {
        s.push_str(&format!("set output '{}_{name}.png'\n", spec.key));
        s.push_str(&format!("set title '{name} vs {}'\n", spec.key));
        s.push_str(&format!("set xlabel '{}'\nset ylabel '{name}'\n", spec.key));
        let mut series = Vec::new();
        for mode in ["cac", "no_cac"] {
            for source in &sources {
                series.push(format!(
                    "'{csv_file}' skip 1 using {}:((strcol({})eq'{mode}' && strcol({})eq'{source}') ? ${} : 1/0) with linespoints title '{mode} {source}'",
                    col("value"),
                    col("mode"),
                    col("source"),
                    col(name)
                ));
            }
        }
        s.push_str(&format!("plot {}\n", series.join(", \\\n     ")));
    }
    s
}
