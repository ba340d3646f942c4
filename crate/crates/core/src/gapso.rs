//! GA-modified particle swarm over antenna positions.
//!
//! Each particle holds one candidate layout for every AP. Fitness is the
//! secrecy rate of the frozen beamformer at the particle's channels, minus a
//! fixed penalty per pair of antennas closer than the minimum distance and
//! one more penalty when the secondary-link QoS fails. Crossover and mutation
//! fire with linearly decaying probabilities; in [`SwarmMode::Pso`] both are
//! off.
//!
//! One iteration draws every random number sequentially, evaluates fitness
//! (possibly in parallel), then reduces personal and global bests
//! sequentially, so a fixed seed gives a bitwise identical run in either
//! execution mode.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::beamforming::QosTargets;
use crate::channel::{assemble_channels, ChannelGeometry};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rates::{secrecy_spectral_efficiency, sinr_primary, snr_secondary};
use crate::scenario::{lattice_points, MaLayout, Node, ScenarioConfig, SwarmParams, Vec3};
use crate::CVector;

/// Attempts per AP to draw a random layout that meets the minimum distance.
pub const INIT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwarmMode {
    GaPso,
    Pso,
}

/// Immutable inputs of one swarm run.
#[derive(Debug, Clone)]
pub struct FitnessContext<'a> {
    pub w: &'a CVector,
    pub geometry: &'a ChannelGeometry,
    pub cfg: &'a ScenarioConfig,
    pub qos: QosTargets,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessEval {
    pub value: f64,
    /// Secrecy spectral efficiency, bits/s/Hz.
    pub secrecy: f64,
    pub violations: usize,
    pub qos_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<Vec3>,
    pub velocity: Vec<Vec3>,
    pub best_position: Vec<Vec3>,
    pub best_fitness: f64,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub gbest_position: Vec<Vec3>,
    pub gbest: FitnessEval,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmTraceRow {
    pub iteration: usize,
    pub gbest_fitness: f64,
    pub mean_fitness: f64,
    pub violations_in_gbest: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best: MaLayout,
    pub best_eval: FitnessEval,
    pub trace: Vec<SwarmTraceRow>,
}

fn pair_violations(points: &[Vec3], d: f64) -> usize {
    let mut count = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].distance(points[j]) < d {
                count += 1;
            }
        }
    }
    count
}

fn coords_violations(coords: &[Vec3], per_ap: usize, d: f64) -> usize {
    coords.chunks(per_ap).map(|ap| pair_violations(ap, d)).sum()
}

/// Unordered intra-AP antenna pairs closer than `d`, summed over APs.
pub fn violation_set_size(layout: &MaLayout, d: f64) -> usize {
    coords_violations(layout.coords(), layout.per_ap(), d)
}

fn evaluate_coords(coords: &[Vec3], ctx: &FitnessContext) -> Result<FitnessEval> {
    let cfg = ctx.cfg;
    let layout = MaLayout::new(cfg.antennas_per_ap, coords.to_vec())?;
    let ch = assemble_channels(ctx.geometry, &layout, cfg)?;
    let gamma_p = sinr_primary(&ch, ctx.w, Node::Pu, cfg);
    let gamma_e = sinr_primary(&ch, ctx.w, Node::Eve, cfg);
    let gamma_s = sinr_primary(&ch, ctx.w, Node::Su, cfg);
    let beta_c = snr_secondary(&ch, ctx.w, cfg);
    let secrecy = secrecy_spectral_efficiency(gamma_p, gamma_e);
    let violations = coords_violations(coords, cfg.antennas_per_ap, cfg.min_ma_distance_m);
    let qos_ok = ctx.qos.satisfied(beta_c, gamma_s);
    let tau = cfg.swarm.penalty;
    let value = secrecy - tau * violations as f64 - if qos_ok { 0.0 } else { tau };
    Ok(FitnessEval {
        value,
        secrecy,
        violations,
        qos_ok,
    })
}

/// Penalized fitness of one layout under the frozen beamformer.
pub fn fitness(layout: &MaLayout, ctx: &FitnessContext) -> Result<FitnessEval> {
    evaluate_coords(layout.coords(), ctx)
}

/// `ωv + c1 r1 (pbest − ψ) + c2 r2 (gbest − ψ)`, coordinate-wise.
#[allow(clippy::too_many_arguments)]
pub fn update_velocity(
    velocity: &[Vec3],
    position: &[Vec3],
    pbest: &[Vec3],
    gbest: &[Vec3],
    omega: f64,
    c1: f64,
    c2: f64,
    r1: f64,
    r2: f64,
) -> Vec<Vec3> {
    (0..velocity.len())
        .map(|i| {
            let (v, p) = (velocity[i], position[i]);
            let f = |v: f64, p: f64, pb: f64, gb: f64| omega * v + c1 * r1 * (pb - p) + c2 * r2 * (gb - p);
            Vec3::new(
                f(v.x, p.x, pbest[i].x, gbest[i].x),
                f(v.y, p.y, pbest[i].y, gbest[i].y),
                f(v.z, p.z, pbest[i].z, gbest[i].z),
            )
        })
        .collect()
}

/// Clamps each velocity coordinate to `[-vmax, vmax]`.
pub fn clamp_velocity(velocity: &mut [Vec3], vmax: f64) {
    for v in velocity {
        *v = Vec3::new(v.x.clamp(-vmax, vmax), v.y.clamp(-vmax, vmax), v.z.clamp(-vmax, vmax));
    }
}

fn clamp_coords(coords: &mut [Vec3], cfg: &ScenarioConfig) {
    let n = cfg.antennas_per_ap;
    for (i, p) in coords.iter_mut().enumerate() {
        *p = cfg.region(i / n).clamp(*p);
    }
}

/// `ψ + v`, then clamped coordinate-wise onto each AP's region box.
pub fn update_position(position: &[Vec3], velocity: &[Vec3], cfg: &ScenarioConfig) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = position
        .iter()
        .zip(velocity)
        .map(|(p, v)| Vec3::new(p.x + v.x, p.y + v.y, p.z + v.z))
        .collect();
    clamp_coords(&mut out, cfg);
    out
}

fn linear_decay(s: usize, total: usize, max: f64, min: f64) -> f64 {
    if total == 0 {
        return max;
    }
    max - (max - min) * s as f64 / total as f64
}

/// Inertia weight at iteration `s` of `total`.
pub fn inertia(s: usize, total: usize, max: f64, min: f64) -> f64 {
    linear_decay(s, total, max, min)
}

/// Crossover and mutation probabilities at iteration `s` of `total`.
pub fn schedules(s: usize, total: usize, params: &SwarmParams) -> (f64, f64) {
    (
        linear_decay(s, total, params.crossover_max, params.crossover_min),
        linear_decay(s, total, params.mutation_max, params.mutation_min),
    )
}

/// Arithmetic blend of two parents with a shared weight `r3`.
pub fn crossover(a: &[Vec3], b: &[Vec3], r3: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let mix = |x: Vec3, y: Vec3, t: f64| {
        Vec3::new(t * x.x + (1.0 - t) * y.x, t * x.y + (1.0 - t) * y.y, t * x.z + (1.0 - t) * y.z)
    };
    let ca = a.iter().zip(b).map(|(&x, &y)| mix(x, y, r3)).collect();
    let cb = a.iter().zip(b).map(|(&x, &y)| mix(x, y, 1.0 - r3)).collect();
    (ca, cb)
}

/// Adds `noise` to antenna `index`, then clamps onto its region box.
pub fn mutate(position: &[Vec3], index: usize, noise: Vec3, cfg: &ScenarioConfig) -> Vec<Vec3> {
    let mut out = position.to_vec();
    let p = out[index];
    out[index] = Vec3::new(p.x + noise.x, p.y + noise.y, p.z + noise.z);
    clamp_coords(&mut out, cfg);
    out
}

/// Random in-region layout meeting the minimum distance at every AP, with a
/// centered lattice as the fallback after [`INIT_ATTEMPTS`] failures.
pub fn random_layout<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<MaLayout> {
    let n = cfg.antennas_per_ap;
    let h = cfg.region_size_m / 2.0;
    let d = cfg.min_ma_distance_m;
    let mut coords = Vec::with_capacity(n * cfg.num_aps);
    for m in 0..cfg.num_aps {
        let region = cfg.region(m);
        let mut chosen = None;
        for _ in 0..INIT_ATTEMPTS {
            let pts: Vec<Vec3> = (0..n)
                .map(|_| region.local(rng.random_range(-h..=h), rng.random_range(-h..=h)))
                .collect();
            if pair_violations(&pts, d) == 0 {
                chosen = Some(pts);
                break;
            }
        }
        let pts = match chosen {
            Some(p) => p,
            None => lattice_points(n, cfg.region_size_m, d)
                .ok_or_else(|| Error::config("min_ma_distance_m", "packing infeasible for the region"))?
                .into_iter()
                .map(|(u, v)| region.local(u, v))
                .collect(),
        };
        coords.extend(pts);
    }
    MaLayout::new(n, coords)
}

fn random_velocity<R: Rng + ?Sized>(cfg: &ScenarioConfig, r: f64, rng: &mut R) -> Vec<Vec3> {
    let normal = cfg.region_normal;
    (0..cfg.stacked_len())
        .map(|_| {
            let mut v = Vec3::new(rng.random_range(-r..=r), rng.random_range(-r..=r), rng.random_range(-r..=r));
            v.set(normal, 0.0);
            v
        })
        .collect()
}

/// In-plane Gaussian perturbation of `center` with spread `sigma`, redrawn per
/// AP until the minimum distance holds; an AP keeps its `center` block after
/// [`INIT_ATTEMPTS`] failures.
pub fn perturbed_layout<R: Rng + ?Sized>(center: &MaLayout, sigma: f64, cfg: &ScenarioConfig, rng: &mut R) -> Result<MaLayout> {
    let n = cfg.antennas_per_ap;
    let d = cfg.min_ma_distance_m;
    let normal = cfg.region_normal;
    let mut coords = Vec::with_capacity(n * cfg.num_aps);
    for m in 0..cfg.num_aps {
        let region = cfg.region(m);
        let base = center.ap(m);
        let mut chosen = None;
        for _ in 0..INIT_ATTEMPTS {
            let pts: Vec<Vec3> = base
                .iter()
                .map(|&p| {
                    let mut e = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                    e.set(normal, 0.0);
                    region.clamp(Vec3::new(p.x + sigma * e.x, p.y + sigma * e.y, p.z + sigma * e.z))
                })
                .collect();
            if pair_violations(&pts, d) == 0 {
                chosen = Some(pts);
                break;
            }
        }
        coords.extend(chosen.unwrap_or_else(|| base.to_vec()));
    }
    MaLayout::new(n, coords)
}

/// Spread of particle `i` of `q`: geometric from `λ/1000` up to `λ/20`.
pub fn init_spread(i: usize, q: usize, cfg: &ScenarioConfig) -> f64 {
    let lo = cfg.wavelength_m / 1000.0;
    let hi = cfg.wavelength_m / 20.0;
    if q <= 2 {
        return lo;
    }
    lo * (hi / lo).powf((i - 1) as f64 / (q - 2) as f64)
}

impl Swarm {
    /// Initial population. Without an incumbent, particles are uniform
    /// in-region layouts with velocities in `±A/10`. With one, particle 0 is
    /// the incumbent and particle `i` a perturbation of it with spread
    /// [`init_spread`] and velocities within that spread: under a frozen
    /// beamformer only layouts close to the incumbent score near it.
    pub fn initialize<R: Rng + ?Sized>(
        ctx: &FitnessContext,
        incumbent: Option<&MaLayout>,
        exec: Execution,
        rng: &mut R,
    ) -> Result<Swarm> {
        let cfg = ctx.cfg;
        let q = cfg.swarm.particles.max(1);
        let mut starts = Vec::with_capacity(q);
        for i in 0..q {
            let (layout, vr) = match incumbent {
                Some(l) if i == 0 => (l.clone(), init_spread(1, q, cfg)),
                Some(l) => {
                    let sigma = init_spread(i, q, cfg);
                    (perturbed_layout(l, sigma, cfg, rng)?, sigma)
                }
                None => (random_layout(cfg, rng)?, cfg.region_size_m / 10.0),
            };
            starts.push((layout.into_coords(), random_velocity(cfg, vr, rng)));
        }
        let evals = par::map(exec, &starts, |(pos, _)| evaluate_coords(pos, ctx));
        let mut particles = Vec::with_capacity(q);
        let mut best: Option<(usize, FitnessEval)> = None;
        for (i, ((position, velocity), eval)) in starts.into_iter().zip(evals).enumerate() {
            let eval = eval?;
            if best.is_none_or(|(_, b)| eval.value > b.value) {
                best = Some((i, eval));
            }
            particles.push(Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_fitness: eval.value,
                fitness: eval.value,
            });
        }
        let (bi, gbest) = best.expect("at least one particle");
        Ok(Swarm {
            gbest_position: particles[bi].position.clone(),
            particles,
            gbest,
            iteration: 0,
        })
    }

    pub fn trace_row(&self) -> SwarmTraceRow {
        let mean = self.particles.iter().map(|p| p.fitness).sum::<f64>() / self.particles.len() as f64;
        SwarmTraceRow {
            iteration: self.iteration,
            gbest_fitness: self.gbest.value,
            mean_fitness: mean,
            violations_in_gbest: self.gbest.violations,
        }
    }

    /// One iteration at index `s` of `total`.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        ctx: &FitnessContext,
        mode: SwarmMode,
        s: usize,
        total: usize,
        exec: Execution,
        rng: &mut R,
    ) -> Result<()> {
        let cfg = ctx.cfg;
        let sp = &cfg.swarm;
        let omega = inertia(s, total, sp.inertia_max, sp.inertia_min);
        let (p_cs, p_mt) = match mode {
            SwarmMode::GaPso => schedules(s, total, sp),
            SwarmMode::Pso => (0.0, 0.0),
        };
        let vmax = cfg.region_size_m / 2.0;
        let q = self.particles.len();
        for i in 0..q {
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let p = &mut self.particles[i];
            let mut v = update_velocity(
                &p.velocity,
                &p.position,
                &p.best_position,
                &self.gbest_position,
                omega,
                sp.c1,
                sp.c2,
                r1,
                r2,
            );
            clamp_velocity(&mut v, vmax);
            p.position = update_position(&p.position, &v, cfg);
            p.velocity = v;

            let eta1: f64 = rng.random();
            if eta1 < p_cs && q >= 2 {
                let a = rng.random_range(0..q);
                let mut b = rng.random_range(0..q - 1);
                if b >= a {
                    b += 1;
                }
                let r3: f64 = rng.random();
                let (ca, cb) = crossover(&self.particles[a].position, &self.particles[b].position, r3);
                self.particles[a].position = ca;
                self.particles[b].position = cb;
            }
            let eta2: f64 = rng.random();
            if eta2 < p_mt {
                let idx = rng.random_range(0..cfg.stacked_len());
                let noise = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
                let p = &mut self.particles[i];
                p.position = mutate(&p.position, idx, noise, cfg);
            }
        }
        let evals = par::map(exec, &self.particles, |p| evaluate_coords(&p.position, ctx));
        for (p, eval) in self.particles.iter_mut().zip(evals) {
            let eval = eval?;
            p.fitness = eval.value;
            if eval.value > p.best_fitness {
                p.best_fitness = eval.value;
                p.best_position = p.position.clone();
            }
            if eval.value > self.gbest.value {
                self.gbest = eval;
                self.gbest_position = p.position.clone();
            }
        }
        self.iteration = s;
        Ok(())
    }
}

/// Runs `cfg.swarm.iterations` iterations and returns the global best layout.
pub fn run<R: Rng + ?Sized>(
    ctx: &FitnessContext,
    mode: SwarmMode,
    incumbent: Option<&MaLayout>,
    exec: Execution,
    rng: &mut R,
) -> Result<SwarmOutcome> {
    let total = ctx.cfg.swarm.iterations;
    let mut swarm = Swarm::initialize(ctx, incumbent, exec, rng)?;
    let mut trace = vec![swarm.trace_row()];
    for s in 1..=total {
        swarm.step(ctx, mode, s, total, exec, rng)?;
        trace.push(swarm.trace_row());
    }
    Ok(SwarmOutcome {
        best: MaLayout::new(ctx.cfg.antennas_per_ap, swarm.gbest_position)?,
        best_eval: swarm.gbest,
        trace,
    })
}

pub fn write_trace_csv<W: Write>(rows: &[SwarmTraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "gbest_fitness", "mean_fitness", "violations_in_gbest"])?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            r.gbest_fitness.to_string(),
            r.mean_fitness.to_string(),
            r.violations_in_gbest.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("swarm trace", e))?;
    Ok(())
}
