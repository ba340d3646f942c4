//! Alternating optimization of beamformer and antenna positions, and the
//! benchmark schemes.
//!
//! Each MA round freezes the beamformer, runs the swarm over positions and
//! accepts the swarm's layout only when its fitness beats the incumbent.
//! Otherwise the loop stops. The beamformer is then re-solved at the new
//! layout, warm-started from the frozen one, and the frozen beamformer is
//! kept if the re-solve comes out worse. So the per-round secrecy trace
//! never decreases.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::beamforming::{solve_p2, BeamformingSolution, QosTargets, ScaOptions};
use crate::channel::{assemble_channels, ChannelGeometry, ChannelSet};
use crate::error::{Error, Result};
use crate::gapso::{self, FitnessContext, SwarmMode, SwarmTraceRow};
use crate::par::Execution;
use crate::rates::RateReport;
use crate::scenario::{fpa_baseline_layout, MaLayout, ScenarioConfig};
use crate::streams::{stream_rng, Stream};
use crate::{CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Gapso,
    Pso,
    Fpa,
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Gapso, Scheme::Pso, Scheme::Fpa, Scheme::Random];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Gapso => "gapso",
            Scheme::Pso => "pso",
            Scheme::Fpa => "fpa",
            Scheme::Random => "random",
        }
    }

    fn swarm_mode(self) -> Option<SwarmMode> {
        match self {
            Scheme::Gapso => Some(SwarmMode::GaPso),
            Scheme::Pso => Some(SwarmMode::Pso),
            Scheme::Fpa | Scheme::Random => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| Error::config("schemes", format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Gain at or below the AO tolerance, including a rejected swarm layout.
    Converged,
    RoundCap,
    /// Fixed-layout schemes run exactly one round.
    SingleRound,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoRound {
    pub round: usize,
    pub secrecy_bps: f64,
    pub sca_iterations: usize,
    pub swarm_best_fitness: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoResult {
    pub scheme: Scheme,
    pub layout: MaLayout,
    /// `None` when no beamformer meets the QoS constraints.
    pub w: Option<CVector>,
    /// Last successful beamforming solve.
    pub beamforming: Option<BeamformingSolution>,
    pub report: Option<RateReport>,
    pub trace: Vec<AoRound>,
    pub swarm_traces: Vec<Vec<SwarmTraceRow>>,
    pub rounds: usize,
    /// Whether the reported solution satisfies the secondary-link QoS.
    pub feasible: bool,
    pub stop: StopReason,
}

impl AoResult {
    pub fn secrecy_bps(&self) -> Option<f64> {
        self.report.map(|r| r.secrecy_bps)
    }
}

/// Per-AP isotropic random directions at full power.
pub fn scheme_random_beamformer<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> CVector {
    let n = cfg.antennas_per_ap;
    let mut w = CVector::from_fn(cfg.stacked_len(), |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    for m in 0..cfg.num_aps {
        let p = w.rows(m * n, n).norm_squared();
        w.rows_mut(m * n, n).scale_mut((cfg.p_max_w / p).sqrt());
    }
    w
}

fn is_infeasibility(e: &Error) -> bool {
    matches!(e, Error::Infeasible(_) | Error::NoFeasibleCandidate { .. })
}

fn qos_met(ch: &ChannelSet, w: &CVector, qos: &QosTargets, cfg: &ScenarioConfig) -> bool {
    let r = RateReport::evaluate(ch, w, cfg);
    qos.satisfied(r.beta_c, r.gamma_s)
}

/// Runs one scheme on one channel realization. Per-trial randomness comes
/// from the streams of `seed`.
pub fn run_ao(geom: &ChannelGeometry, cfg: &ScenarioConfig, scheme: Scheme, seed: u64, exec: Execution) -> Result<AoResult> {
    cfg.validate()?;
    let qos = QosTargets::from_config(cfg);
    let mut layout = fpa_baseline_layout(cfg)?;
    let mut ch = assemble_channels(geom, &layout, cfg)?;
    let b = cfg.bandwidth_hz;

    if scheme == Scheme::Random {
        let w = scheme_random_beamformer(cfg, &mut stream_rng(seed, Stream::RandomBeam));
        let report = RateReport::evaluate(&ch, &w, cfg);
        let feasible = qos.satisfied(report.beta_c, report.gamma_s);
        return Ok(AoResult {
            scheme,
            layout,
            w: Some(w),
            beamforming: None,
            report: Some(report),
            trace: vec![AoRound {
                round: 1,
                secrecy_bps: report.secrecy_bps,
                sca_iterations: 0,
                swarm_best_fitness: None,
                feasible,
            }],
            swarm_traces: Vec::new(),
            rounds: 1,
            feasible,
            stop: StopReason::SingleRound,
        });
    }

    let opts = ScaOptions::from_config(cfg);
    let mut rand_rng = stream_rng(seed, Stream::Randomization);
    let mut swarm_rng = stream_rng(seed, Stream::Swarm);
    let first = match solve_p2(&ch, &qos, None, cfg, &opts, &mut rand_rng) {
        Ok(s) => s,
        Err(e) if is_infeasibility(&e) => {
            return Ok(AoResult {
                scheme,
                layout,
                w: None,
                beamforming: None,
                report: None,
                trace: vec![AoRound {
                    round: 1,
                    secrecy_bps: 0.0,
                    sca_iterations: 0,
                    swarm_best_fitness: None,
                    feasible: false,
                }],
                swarm_traces: Vec::new(),
                rounds: 1,
                feasible: false,
                stop: StopReason::Infeasible,
            })
        }
        Err(e) => return Err(e),
    };
    let mut w = first.w.clone();
    let mut value = first.secrecy;
    let mut trace = vec![AoRound {
        round: 1,
        secrecy_bps: value * b,
        sca_iterations: first.sca_iterations,
        swarm_best_fitness: None,
        feasible: true,
    }];
    let mut beamforming = first;
    let mut swarm_traces = Vec::new();

    let stop = match scheme.swarm_mode() {
        None => StopReason::SingleRound,
        Some(mode) => loop {
            if trace.len() >= cfg.ao_max_rounds {
                break StopReason::RoundCap;
            }
            let ctx = FitnessContext {
                w: &w,
                geometry: geom,
                cfg,
                qos,
            };
            let incumbent = gapso::fitness(&layout, &ctx)?;
            let out = gapso::run(&ctx, mode, Some(&layout), exec, &mut swarm_rng)?;
            swarm_traces.push(out.trace);
            let eval = out.best_eval;
            if !(eval.qos_ok && eval.violations == 0 && eval.value > incumbent.value) {
                break StopReason::Converged;
            }
            layout = out.best;
            ch = assemble_channels(geom, &layout, cfg)?;
            let warm = &w * w.adjoint();
            let mut sca_iterations = 0;
            let mut next = eval.secrecy;
            match solve_p2(&ch, &qos, Some(&warm), cfg, &opts, &mut rand_rng) {
                Ok(s) if s.secrecy >= eval.secrecy && qos_met(&ch, &s.w, &qos, cfg) => {
                    w = s.w.clone();
                    next = s.secrecy;
                    sca_iterations = s.sca_iterations;
                    beamforming = s;
                }
                Ok(_) => {}
                Err(e) if is_infeasibility(&e) || matches!(e, Error::NonMonotone { .. }) => {}
                Err(e) => return Err(e),
            }
            let gain = next - value;
            value = next;
            trace.push(AoRound {
                round: trace.len() + 1,
                secrecy_bps: value * b,
                sca_iterations,
                swarm_best_fitness: Some(eval.value),
                feasible: true,
            });
            if gain <= cfg.tolerances.ao {
                break StopReason::Converged;
            }
        },
    };
    let report = RateReport::evaluate(&ch, &w, cfg);
    let feasible = qos_met(&ch, &w, &qos, cfg);
    Ok(AoResult {
        scheme,
        layout,
        w: Some(w),
        beamforming: Some(beamforming),
        report: Some(report),
        rounds: trace.len(),
        trace,
        swarm_traces,
        feasible,
        stop,
    })
}

pub fn write_trace_csv<W: Write>(rows: &[AoRound], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "R_sec_bits_per_s", "sca_iters", "swarm_best_fitness", "feasible"])?;
    for r in rows {
        w.write_record([
            r.round.to_string(),
            r.secrecy_bps.to_string(),
            r.sca_iterations.to_string(),
            r.swarm_best_fitness.map(|f| f.to_string()).unwrap_or_default(),
            r.feasible.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("ao trace", e))?;
    Ok(())
}
