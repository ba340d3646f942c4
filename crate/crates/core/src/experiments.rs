//! Monte-Carlo sweeps, aggregation and CSV output.
//!
//! Every trial index owns one seed. All schemes and all swept values of that
//! trial see the same channel stream, so scheme differences and trends are
//! paired comparisons.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ao::{self, run_ao, Scheme};
use crate::beamforming::{solve_relaxed, build_lifted, QosTargets, ScaOptions};
use crate::channel::{assemble_channels, sample_geometry};
use crate::error::{Error, Result};
use crate::gapso::{self, SwarmTraceRow};
use crate::par::{self, Execution};
use crate::scenario::{dbm_to_watts, fpa_baseline_layout, ScenarioConfig};
use crate::streams::{stream_rng, trial_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PMaxDbm,
    NAntennas,
    MAps,
    PathlossExponent,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] = [
        SweepParam::PMaxDbm,
        SweepParam::NAntennas,
        SweepParam::MAps,
        SweepParam::PathlossExponent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PMaxDbm => "p_max_dbm",
            SweepParam::NAntennas => "n_antennas",
            SweepParam::MAps => "m_aps",
            SweepParam::PathlossExponent => "pathloss_exponent",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= 1e6 {
                Ok(v as usize)
            } else {
                Err(Error::config(self.name(), format!("expected a positive integer, got {v}")))
            }
        };
        match self {
            SweepParam::PMaxDbm => cfg.p_max_w = dbm_to_watts(value),
            SweepParam::NAntennas => cfg.antennas_per_ap = count(value)?,
            SweepParam::MAps => cfg.set_num_aps(count(value)?),
            SweepParam::PathlossExponent => cfg.pathloss_exponent = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::config("param", format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub schemes: Vec<Scheme>,
    pub base: ScenarioConfig,
    pub seed: u64,
    pub exec: Execution,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("values", "value list is empty"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "need at least one trial"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "scheme list is empty"));
        }
        for &v in &self.values {
            self.param.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub scheme: Scheme,
    pub param: SweepParam,
    pub value: f64,
    pub trial: usize,
    #[serde(rename = "R_sec_bps")]
    pub secrecy_bps: Option<f64>,
    #[serde(rename = "R_c_bps")]
    pub rate_c_bps: Option<f64>,
    pub feasible: bool,
    pub rounds: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub param: SweepParam,
    pub rows: Vec<ExperimentRow>,
}

/// Runs every (value, trial) job, each job running all schemes on one shared
/// channel realization. Rows come back in (value, trial, scheme) order.
pub fn run_sweep(spec: &SweepSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let jobs: Vec<(f64, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    let inner = if spec.exec.is_parallel() { Execution::Sequential } else { spec.exec };
    let results = par::map(spec.exec, &jobs, |&(value, trial)| -> Result<Vec<ExperimentRow>> {
        let cfg = spec.param.apply(&spec.base, value)?;
        let seed = trial_seed(spec.seed, trial as u64);
        let geom = sample_geometry(&cfg, &mut stream_rng(seed, Stream::Channel));
        let mut schemes = spec.schemes.clone();
        schemes.sort();
        schemes.dedup();
        schemes
            .into_iter()
            .map(|scheme| {
                let start = Instant::now();
                let r = run_ao(&geom, &cfg, scheme, seed, inner)?;
                let keep = r.feasible || scheme == Scheme::Random;
                Ok(ExperimentRow {
                    scheme,
                    param: spec.param,
                    value,
                    trial,
                    secrecy_bps: r.report.filter(|_| keep).map(|x| x.secrecy_bps),
                    rate_c_bps: r.report.filter(|_| keep).map(|x| x.rate_c_bps),
                    feasible: r.feasible,
                    rounds: r.rounds,
                    wall_time_s: start.elapsed().as_secs_f64(),
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(ExperimentResult {
        param: spec.param,
        rows,
    })
}

pub fn write_rows<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("experiment rows", e))?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<ExperimentRow>, _>>()?)
}

/// Mean and 95% t-interval of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub n: usize,
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

pub fn t_interval(xs: &[f64]) -> Option<Interval> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some(Interval { n, mean, low: mean, high: mean });
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    let half = t * (var / n as f64).sqrt();
    Some(Interval {
        n,
        mean,
        low: mean - half,
        high: mean + half,
    })
}

/// One-sided paired t-test of `mean(a - b) > 0`; returns the p-value.
pub fn paired_one_sided_p(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    if n < 2 {
        return 1.0;
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return if mean > 0.0 { 0.0 } else { 1.0 };
    }
    let t = mean / (var / n as f64).sqrt();
    StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .sf(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub value: f64,
    pub interval: Interval,
    pub feasible_fraction: f64,
}

fn distinct_values(rows: &[ExperimentRow]) -> Vec<f64> {
    let mut v: Vec<f64> = rows.iter().map(|r| r.value).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Per-value summaries of one scheme over the rows carrying a secrecy rate.
pub fn summarize(rows: &[ExperimentRow], scheme: Scheme) -> Result<Vec<SummaryRow>> {
    let mine: Vec<&ExperimentRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
    if mine.is_empty() {
        return Err(Error::NoRows(scheme.name().into()));
    }
    let values = distinct_values(rows);
    Ok(values
        .into_iter()
        .filter_map(|value| {
            let at: Vec<&&ExperimentRow> = mine.iter().filter(|r| r.value == value).collect();
            let xs: Vec<f64> = at.iter().filter_map(|r| r.secrecy_bps).collect();
            let feasible = at.iter().filter(|r| r.feasible).count() as f64 / at.len().max(1) as f64;
            t_interval(&xs).map(|interval| SummaryRow {
                scheme,
                value,
                interval,
                feasible_fraction: feasible,
            })
        })
        .collect())
}

/// Schemes present in `rows`, in canonical order.
pub fn schemes_in(rows: &[ExperimentRow]) -> Vec<Scheme> {
    let mut s: Vec<Scheme> = rows.iter().map(|r| r.scheme).collect();
    s.sort();
    s.dedup();
    s
}

/// Plot data `(x, scheme, mean, ci_low, ci_high)` for the given schemes,
/// ordered by x, then scheme.
pub fn plot_rows(rows: &[ExperimentRow], schemes: &[Scheme]) -> Result<Vec<SummaryRow>> {
    let mut out = Vec::new();
    for &s in schemes {
        out.extend(summarize(rows, s)?);
    }
    out.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.scheme.cmp(&b.scheme)));
    Ok(out)
}

pub fn write_plot_rows<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "scheme", "mean", "ci_low", "ci_high"])?;
    for r in rows {
        w.write_record([
            r.value.to_string(),
            r.scheme.name().to_string(),
            r.interval.mean.to_string(),
            r.interval.low.to_string(),
            r.interval.high.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("plot data", e))?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "scheme", "n", "mean", "ci_low", "ci_high", "feasible_fraction"])?;
    for r in rows {
        w.write_record([
            r.value.to_string(),
            r.scheme.name().to_string(),
            r.interval.n.to_string(),
            r.interval.mean.to_string(),
            r.interval.low.to_string(),
            r.interval.high.to_string(),
            r.feasible_fraction.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("summary", e))?;
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

pub fn rows_file_name(param: SweepParam) -> String {
    format!("sweep_{}.csv", param.name())
}

/// Writes `sweep_<param>.csv` (one row per scheme, value and trial) and
/// `summary_<param>.csv` into `dir`.
pub fn write_sweep(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let rows_path = dir.join(rows_file_name(result.param));
    write_rows(&result.rows, create_file(&rows_path)?)?;
    let summary_path = dir.join(format!("summary_{}.csv", result.param.name()));
    let summary = plot_rows(&result.rows, &schemes_in(&result.rows))?;
    write_summary(&summary, create_file(&summary_path)?)?;
    Ok(vec![rows_path, summary_path])
}

/// One plot-data CSV per sweep result, named after the swept parameter.
pub fn emit_plotdata(result: &ExperimentResult, dir: &Path) -> Result<PathBuf> {
    let plot = plot_rows(&result.rows, &schemes_in(&result.rows))?;
    if plot.is_empty() {
        return Err(Error::NoRows("any".into()));
    }
    create_dir(dir)?;
    let path = dir.join(format!("{}.csv", result.param.name()));
    write_plot_rows(&plot, create_file(&path)?)?;
    Ok(path)
}

/// Reads every `sweep_<param>.csv` in `dir`.
pub fn load_results(dir: &Path) -> Result<Vec<ExperimentResult>> {
    let mut out = Vec::new();
    for param in SweepParam::ALL {
        let path = dir.join(rows_file_name(param));
        if !path.exists() {
            continue;
        }
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let rows = read_rows(file)?;
        if let Some(r) = rows.iter().find(|r| r.param != param) {
            return Err(Error::Parse {
                path,
                message: format!("row for parameter {} in the {} file", r.param, param),
            });
        }
        out.push(ExperimentResult { param, rows });
    }
    if out.is_empty() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no sweep_*.csv files"),
        ));
    }
    Ok(out)
}

/// Traces of one convergence run.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTraces {
    /// True relaxed objective per SCA iteration at the FPA layout, bits/s/Hz.
    pub sca: Vec<f64>,
    /// First-round swarm traces of the two swarm schemes.
    pub gapso: Vec<SwarmTraceRow>,
    pub pso: Vec<SwarmTraceRow>,
    pub ao_gapso: Vec<ao::AoRound>,
    pub ao_pso: Vec<ao::AoRound>,
}

/// SCA and swarm convergence on the channel realization of `seed`.
pub fn run_convergence(cfg: &ScenarioConfig, seed: u64, exec: Execution) -> Result<ConvergenceTraces> {
    cfg.validate()?;
    let geom = sample_geometry(cfg, &mut stream_rng(seed, Stream::Channel));
    let ch = assemble_channels(&geom, &fpa_baseline_layout(cfg)?, cfg)?;
    let qos = QosTargets::from_config(cfg);
    let relaxed = solve_relaxed(&build_lifted(&ch), &qos, None, cfg, &ScaOptions::from_config(cfg))?;
    let ga = run_ao(&geom, cfg, Scheme::Gapso, seed, exec)?;
    let ps = run_ao(&geom, cfg, Scheme::Pso, seed, exec)?;
    let first = |r: &ao::AoResult| r.swarm_traces.first().cloned().unwrap_or_default();
    Ok(ConvergenceTraces {
        sca: relaxed.trace,
        gapso: first(&ga),
        pso: first(&ps),
        ao_gapso: ga.trace,
        ao_pso: ps.trace,
    })
}

pub fn write_convergence(tr: &ConvergenceTraces, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let sca_path = dir.join("sca_trace.csv");
    {
        let mut w = csv::Writer::from_writer(create_file(&sca_path)?);
        w.write_record(["iteration", "objective_bits_per_hz"])?;
        for (i, v) in tr.sca.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&sca_path, e))?;
    }
    let mut paths = vec![sca_path];
    for (name, rows) in [("swarm_gapso.csv", &tr.gapso), ("swarm_pso.csv", &tr.pso)] {
        let p = dir.join(name);
        gapso::write_trace_csv(rows, create_file(&p)?)?;
        paths.push(p);
    }
    for (name, rows) in [("ao_gapso.csv", &tr.ao_gapso), ("ao_pso.csv", &tr.ao_pso)] {
        let p = dir.join(name);
        ao::write_trace_csv(rows, create_file(&p)?)?;
        paths.push(p);
    }
    Ok(paths)
}
