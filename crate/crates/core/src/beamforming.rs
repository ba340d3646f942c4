//! Lifted secrecy beamforming: SCA over the relaxed semidefinite problem and
//! recovery of a beamvector from its solution.
//!
//! With `W = w w^H`, the secrecy objective in bits/s/Hz is
//! `g1 - g2 - g3 + g4` where
//!
//! ```text
//! g1 = log2(Tr((αG_p + H_p)W) + σ_p²)   g2 = log2(αTr(G_p W) + σ_p²)
//! g3 = log2(Tr((αG_e + H_e)W) + σ_e²)   g4 = log2(αTr(G_e W) + σ_e²)
//! ```
//!
//! g2 and g3 are replaced by their tangent planes at the current point, which
//! gives a concave lower bound that is tight at the expansion point. The
//! solver works on `V = W / P_max` with every log argument divided by its
//! noise power; the constant `log2 σ²` terms cancel pairwise.

use std::f64::consts::LN_2;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::ChannelSet;
use crate::convex::{self, AffineConstraint, ConeProblem, LogTerm, Sense, SolverOptions};
use crate::error::{Error, Result};
use crate::rates::{bisect_beta_star, secrecy_spectral_efficiency};
use crate::scenario::{Node, ScenarioConfig};
use crate::{CMatrix, CVector, C64};

/// Eigenvalue ratio `λ2/λ1` at or below which `W` is treated as rank one.
pub const RANK_ONE_RATIO: f64 = 1e-6;
/// Gaussian randomization draws when `W` is not rank one.
pub const RANDOMIZATION_DRAWS: usize = 200;
/// Relative slack allowed on the QoS constraints of a recovered beamvector.
pub const QOS_TOLERANCE: f64 = 1e-6;
/// Decrease of the true objective, beyond the solver gap, treated as a bug.
pub const MONOTONE_TOLERANCE: f64 = 1e-8;
pub const MAX_SCA_ITERATIONS: usize = 50;

/// Stacked effective channels and their outer products.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedMatrices {
    /// `h_ξ` stacked over APs, indexed by [`Node::index`].
    pub h: [CVector; 3],
    /// `g_ξ = [H_1 g_{b,ξ}; …; H_M g_{b,ξ}]`.
    pub g: [CVector; 3],
    pub h_outer: [CMatrix; 3],
    pub g_outer: [CMatrix; 3],
    pub antennas_per_ap: usize,
}

impl LiftedMatrices {
    pub fn dim(&self) -> usize {
        self.h[0].len()
    }

    pub fn num_aps(&self) -> usize {
        self.dim() / self.antennas_per_ap
    }

    pub fn h_mat(&self, node: Node) -> &CMatrix {
        &self.h_outer[node.index()]
    }

    pub fn g_mat(&self, node: Node) -> &CMatrix {
        &self.g_outer[node.index()]
    }

    /// `(|h_ξ^H w|², |g_ξ^H w|²)`.
    pub fn powers(&self, w: &CVector, node: Node) -> (f64, f64) {
        let i = node.index();
        (self.h[i].dotc(w).norm_sqr(), self.g[i].dotc(w).norm_sqr())
    }

    /// `(Tr(H_ξ W), Tr(G_ξ W))`.
    pub fn trace_powers(&self, w: &CMatrix, node: Node) -> (f64, f64) {
        (convex::inner(self.h_mat(node), w), convex::inner(self.g_mat(node), w))
    }
}

pub fn build_lifted(ch: &ChannelSet) -> LiftedMatrices {
    let n = ch.antennas_per_ap();
    let m_count = ch.num_aps();
    let stack = |block: &dyn Fn(usize) -> CVector| -> CVector {
        let mut out = CVector::zeros(m_count * n);
        for m in 0..m_count {
            out.rows_mut(m * n, n).copy_from(&block(m));
        }
        out
    };
    let h = Node::ALL.map(|node| stack(&|m| ch.direct(m, node).clone()));
    let g = Node::ALL.map(|node| stack(&|m| ch.ap_to_bd[m].adjoint() * ch.backscatter(node)));
    let outer = |v: &CVector| v * v.adjoint();
    LiftedMatrices {
        h_outer: [outer(&h[0]), outer(&h[1]), outer(&h[2])],
        g_outer: [outer(&g[0]), outer(&g[1]), outer(&g[2])],
        h,
        g,
        antennas_per_ap: n,
    }
}

/// Secondary-link QoS thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosTargets {
    /// Minimum backscatter SNR `β*` meeting the secondary rate.
    pub beta_star: f64,
    /// Minimum SINR `κ` at the SU for decoding the primary symbol.
    pub kappa: f64,
}

impl QosTargets {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        QosTargets {
            beta_star: bisect_beta_star(cfg.rate_th_secondary_bps, cfg.bandwidth_hz, cfg.tolerances.bisection),
            kappa: cfg.primary_sinr_threshold(),
        }
    }

    /// Whether `(β_c, γ_s)` meets both targets up to [`QOS_TOLERANCE`].
    pub fn satisfied(&self, beta_c: f64, gamma_s: f64) -> bool {
        beta_c >= self.beta_star * (1.0 - QOS_TOLERANCE) && gamma_s >= self.kappa * (1.0 - QOS_TOLERANCE)
    }
}

/// Vector-form quantities for one beamformer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorEval {
    pub gamma_p: f64,
    pub gamma_e: f64,
    pub gamma_s: f64,
    pub beta_c: f64,
    /// `log2(1+γ_p) - log2(1+γ_e)` without clipping at zero.
    pub secrecy_raw: f64,
}

impl VectorEval {
    pub fn new(lifted: &LiftedMatrices, w: &CVector, cfg: &ScenarioConfig) -> Self {
        let a = cfg.reflection_coeff;
        let sinr = |node: Node| {
            let (h, g) = lifted.powers(w, node);
            h / (a * g + cfg.noise_w(node))
        };
        let gamma_p = sinr(Node::Pu);
        let gamma_e = sinr(Node::Eve);
        VectorEval {
            gamma_p,
            gamma_e,
            gamma_s: sinr(Node::Su),
            beta_c: a * lifted.powers(w, Node::Su).1 / cfg.noise_w(Node::Su),
            secrecy_raw: (gamma_p.ln_1p() - gamma_e.ln_1p()) / LN_2,
        }
    }

    pub fn secrecy(&self) -> f64 {
        secrecy_spectral_efficiency(self.gamma_p, self.gamma_e)
    }
}

/// The four log arguments, each divided by its noise power, as affine
/// functions `1 + ⟨A, V⟩` of the normalized matrix `V = W/P_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecrecyProblem {
    pub a1: CMatrix,
    pub a2: CMatrix,
    pub a3: CMatrix,
    pub a4: CMatrix,
    pub constraints: Vec<AffineConstraint>,
    pub p_max: f64,
}

impl SecrecyProblem {
    pub fn new(lifted: &LiftedMatrices, qos: &QosTargets, cfg: &ScenarioConfig) -> Self {
        let p = cfg.p_max_w;
        let a = cfg.reflection_coeff;
        let scaled = |m: CMatrix, s: f64| m * C64::new(s, 0.0);
        let (sp, se, ss) = (cfg.noise_w(Node::Pu), cfg.noise_w(Node::Eve), cfg.noise_w(Node::Su));
        let gp = lifted.g_mat(Node::Pu);
        let ge = lifted.g_mat(Node::Eve);
        let gs = lifted.g_mat(Node::Su);
        let a1 = scaled(gp * C64::new(a, 0.0) + lifted.h_mat(Node::Pu), p / sp);
        let a2 = scaled(gp.clone(), a * p / sp);
        let a3 = scaled(ge * C64::new(a, 0.0) + lifted.h_mat(Node::Eve), p / se);
        let a4 = scaled(ge.clone(), a * p / se);
        let dim = lifted.dim();
        let n = lifted.antennas_per_ap;
        let mut constraints = Vec::new();
        if qos.beta_star > 0.0 {
            constraints.push(AffineConstraint {
                label: "backscatter_snr".into(),
                matrix: scaled(gs.clone(), a * p / (ss * qos.beta_star)),
                bound: 1.0,
                sense: Sense::AtLeast,
            });
        }
        if qos.kappa > 0.0 {
            let m = lifted.h_mat(Node::Su) - gs * C64::new(qos.kappa * a, 0.0);
            constraints.push(AffineConstraint {
                label: "su_primary_sinr".into(),
                matrix: scaled(m, p / (qos.kappa * ss)),
                bound: 1.0,
                sense: Sense::AtLeast,
            });
        }
        for m in 0..lifted.num_aps() {
            constraints.push(AffineConstraint {
                label: format!("power_ap{m}"),
                matrix: ConeProblem::block_trace_selector(dim, m, n),
                bound: 1.0,
                sense: Sense::AtMost,
            });
        }
        SecrecyProblem {
            a1,
            a2,
            a3,
            a4,
            constraints,
            p_max: p,
        }
    }

    fn log2_arg(a: &CMatrix, v: &CMatrix) -> f64 {
        (1.0 + convex::inner(a, v)).log2()
    }

    /// True objective `g1 - g2 - g3 + g4` in bits/s/Hz at normalized `V`.
    pub fn objective(&self, v: &CMatrix) -> f64 {
        Self::log2_arg(&self.a1, v) - Self::log2_arg(&self.a2, v) - Self::log2_arg(&self.a3, v)
            + Self::log2_arg(&self.a4, v)
    }

    /// Concave minorant tangent at `vt`, as a cone problem over `V`.
    pub fn surrogate(&self, vt: &CMatrix) -> Result<ConeProblem> {
        let d2 = 1.0 + convex::inner(&self.a2, vt);
        let d3 = 1.0 + convex::inner(&self.a3, vt);
        if !(d2 > 0.0 && d3 > 0.0) {
            return Err(Error::Domain("expansion point has a non-positive log argument".into()));
        }
        let grad = &self.a2 * C64::new(1.0 / (LN_2 * d2), 0.0) + &self.a3 * C64::new(1.0 / (LN_2 * d3), 0.0);
        let mut prob = ConeProblem::new(vt.nrows());
        for a in [&self.a1, &self.a4] {
            prob.log_terms.push(LogTerm {
                weight: 1.0 / LN_2,
                offset: 1.0,
                matrix: a.clone(),
            });
        }
        prob.constant = -d2.log2() - d3.log2() + convex::inner(&grad, vt);
        prob.linear = -grad;
        prob.constraints = self.constraints.clone();
        Ok(prob)
    }

    pub fn normalize(&self, w: &CMatrix) -> CMatrix {
        w / C64::new(self.p_max, 0.0)
    }

    pub fn denormalize(&self, v: &CMatrix) -> CMatrix {
        v * C64::new(self.p_max, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// Relaxed optimum `W*` in watts.
    pub w_matrix: CMatrix,
    /// Stacked beamvector `[w_1; …; w_M]`.
    pub w: CVector,
    /// Surrogate value at `W*`, bits/s/Hz.
    pub surrogate_value: f64,
    /// True objective at `W*`, bits/s/Hz.
    pub relaxed_value: f64,
    /// Secrecy spectral efficiency of `w`, bits/s/Hz.
    pub secrecy: f64,
    pub sca_iterations: usize,
    /// True objective before the first and after every accepted SCA step.
    pub trace: Vec<f64>,
    /// `λ2/λ1` of `W*`.
    pub eigen_ratio: f64,
    pub rank_one: bool,
}

impl BeamformingSolution {
    pub fn block(&self, m: usize, n: usize) -> CVector {
        self.w.rows(m * n, n).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaOptions {
    /// Stop once the true-objective gain is at most this (bits/s/Hz).
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl ScaOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        ScaOptions {
            epsilon: cfg.tolerances.sca,
            max_iterations: MAX_SCA_ITERATIONS,
        }
    }
}

/// Result of the relaxed SCA loop before beamvector recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub w_matrix: CMatrix,
    pub surrogate_value: f64,
    pub value: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Feasible, possibly on the PSD boundary: positive semidefinite with
/// non-negative slacks.
fn is_expansion_point(shell: &ConeProblem, v: &CMatrix) -> bool {
    let floor = -1e-12 * v.trace().re.abs().max(f64::MIN_POSITIVE);
    shell.constraints.iter().all(|c| c.slack(v) >= 0.0)
        && v.clone().symmetric_eigenvalues().iter().all(|&e| e >= floor)
}

/// SCA loop over the relaxed problem.
///
/// `w_init` (watts) is the first expansion point when it is feasible;
/// otherwise a feasibility seed built around it is used.
pub fn solve_relaxed(
    lifted: &LiftedMatrices,
    qos: &QosTargets,
    w_init: Option<&CMatrix>,
    cfg: &ScenarioConfig,
    opts: &ScaOptions,
) -> Result<RelaxedSolution> {
    let sp = SecrecyProblem::new(lifted, qos, cfg);
    let hint = w_init.map(|w| sp.normalize(w));
    let mut shell = ConeProblem::new(lifted.dim());
    shell.constraints = sp.constraints.clone();
    let seed = convex::feasibility_seed(&shell, hint.as_ref())?;
    let mut vt = match hint {
        Some(h) if is_expansion_point(&shell, &h) => h,
        _ => seed.clone(),
    };
    let mut value = sp.objective(&vt);
    let mut trace = vec![value];
    let mut surrogate_value = value;
    let mut iterations = 0;
    let solver = SolverOptions {
        tol: cfg.tolerances.barrier,
        ..Default::default()
    };
    while iterations < opts.max_iterations {
        let prob = sp.surrogate(&vt)?;
        // The expansion point sits on the boundary; start deep inside instead.
        let start = convex::hermitize(&((&vt + &seed) * C64::new(0.5, 0.0)));
        let sol = convex::solve(&prob, Some(&start), &solver)?;
        let next = sp.objective(&sol.w);
        if next < value - sol.gap_bound - MONOTONE_TOLERANCE {
            return Err(Error::NonMonotone {
                previous: value,
                current: next,
            });
        }
        iterations += 1;
        if next < value {
            break;
        }
        let gain = next - value;
        vt = sol.w;
        value = next;
        surrogate_value = sol.objective;
        trace.push(value);
        if gain <= opts.epsilon {
            break;
        }
    }
    Ok(RelaxedSolution {
        w_matrix: sp.denormalize(&vt),
        surrogate_value,
        value,
        iterations,
        trace,
    })
}

/// Solves the beamforming subproblem for fixed channels and recovers `w*`.
pub fn solve_p2<R: Rng + ?Sized>(
    ch: &ChannelSet,
    qos: &QosTargets,
    w_init: Option<&CMatrix>,
    cfg: &ScenarioConfig,
    opts: &ScaOptions,
    rng: &mut R,
) -> Result<BeamformingSolution> {
    let lifted = build_lifted(ch);
    let relaxed = solve_relaxed(&lifted, qos, w_init, cfg, opts)?;
    let rec = extract_beamvector(&relaxed.w_matrix, &lifted, qos, cfg, rng)?;
    Ok(BeamformingSolution {
        w_matrix: relaxed.w_matrix,
        secrecy: VectorEval::new(&lifted, &rec.w, cfg).secrecy(),
        w: rec.w,
        surrogate_value: relaxed.surrogate_value,
        relaxed_value: relaxed.value,
        sca_iterations: relaxed.iterations,
        trace: relaxed.trace,
        eigen_ratio: rec.eigen_ratio,
        rank_one: rec.rank_one,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub w: CVector,
    pub eigen_ratio: f64,
    pub rank_one: bool,
}

/// Scales each over-budget block down to exactly `P_max`.
pub fn clip_blocks(w: &CVector, n: usize, p_max: f64) -> CVector {
    let mut out = w.clone();
    for m in 0..w.len() / n {
        let p = out.rows(m * n, n).norm_squared();
        if p > p_max {
            out.rows_mut(m * n, n).scale_mut((p_max / p).sqrt());
        }
    }
    out
}

/// Largest common scaling keeping every block within `P_max`.
pub fn common_scale(w: &CVector, n: usize, p_max: f64) -> CVector {
    let worst = (0..w.len() / n)
        .map(|m| w.rows(m * n, n).norm_squared())
        .fold(0.0f64, f64::max);
    if worst > 0.0 {
        w * C64::new((p_max / worst).sqrt(), 0.0)
    } else {
        w.clone()
    }
}

/// Recovers a beamvector from the relaxed optimum.
///
/// Rank-one `W*` yields its principal component directly when that meets the
/// QoS targets. Otherwise the principal component and [`RANDOMIZATION_DRAWS`]
/// draws from `CN(0, W*)`, each scaled to the power budget both per block and
/// by a common factor, compete on secrecy among those meeting the QoS targets.
pub fn extract_beamvector<R: Rng + ?Sized>(
    w_matrix: &CMatrix,
    lifted: &LiftedMatrices,
    qos: &QosTargets,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<Recovered> {
    let n = lifted.antennas_per_ap;
    let p = cfg.p_max_w;
    let eig = convex::hermitize(w_matrix).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    if l1 <= 0.0 {
        return Err(Error::Domain("relaxed solution is zero".into()));
    }
    let l2 = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    let ratio = l2 / l1;
    let principal = clip_blocks(&(eig.eigenvectors.column(order[0]) * C64::new(l1.sqrt(), 0.0)), n, p);
    // Truncation can still break a QoS target by more than the tolerance;
    // randomization then takes over.
    let principal_ok = {
        let e = VectorEval::new(lifted, &principal, cfg);
        qos.satisfied(e.beta_c, e.gamma_s)
    };
    if ratio <= RANK_ONE_RATIO && principal_ok {
        return Ok(Recovered {
            w: principal,
            eigen_ratio: ratio,
            rank_one: true,
        });
    }
    let sqrt_lambda: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let draw = |rng: &mut R| -> CVector {
        let z = CVector::from_fn(sqrt_lambda.len(), |i, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im) * (sqrt_lambda[i] * std::f64::consts::FRAC_1_SQRT_2)
        });
        &eig.eigenvectors * z
    };
    let mut candidates = vec![principal.clone(), common_scale(&principal, n, p)];
    for _ in 0..RANDOMIZATION_DRAWS {
        let w = draw(rng);
        candidates.push(clip_blocks(&w, n, p));
        candidates.push(common_scale(&w, n, p));
    }
    let best = candidates
        .into_iter()
        .map(|w| (VectorEval::new(lifted, &w, cfg), w))
        .filter(|(e, _)| qos.satisfied(e.beta_c, e.gamma_s))
        .max_by(|a, b| a.0.secrecy_raw.total_cmp(&b.0.secrecy_raw));
    match best {
        Some((_, w)) => Ok(Recovered {
            w,
            eigen_ratio: ratio,
            rank_one: false,
        }),
        None => Err(Error::NoFeasibleCandidate {
            candidates: 2 * RANDOMIZATION_DRAWS + 2,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{assemble_channels, sample_geometry};
    use crate::rates::RateReport;
    use crate::scenario::{default_scenario, fpa_baseline_layout};
    use crate::streams::{stream_rng, Stream};
    use approx::assert_relative_eq;

    fn setup(seed: u64) -> (ChannelSet, ScenarioConfig) {
        let cfg = default_scenario();
        let geom = sample_geometry(&cfg, &mut stream_rng(seed, Stream::Channel));
        let ch = assemble_channels(&geom, &fpa_baseline_layout(&cfg).unwrap(), &cfg).unwrap();
        (ch, cfg)
    }

    fn random_vec<R: Rng>(n: usize, rng: &mut R) -> CVector {
        CVector::from_fn(n, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
    }

    #[test]
    fn lifted_unit_vector() {
        let mut e1 = CVector::zeros(3);
        e1[0] = C64::new(1.0, 0.0);
        let outer = &e1 * e1.adjoint();
        assert_eq!(outer[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(outer.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn lifted_traces_match_vector_form() {
        let (ch, cfg) = setup(1);
        let lifted = build_lifted(&ch);
        let mut rng = stream_rng(2, Stream::Randomization);
        for _ in 0..50 {
            let w = random_vec(cfg.stacked_len(), &mut rng);
            let big_w = &w * w.adjoint();
            let report = RateReport::evaluate(&ch, &w, &cfg);
            let eval = VectorEval::new(&lifted, &w, &cfg);
            assert_relative_eq!(eval.gamma_p, report.gamma_p, max_relative = 1e-10);
            assert_relative_eq!(eval.gamma_e, report.gamma_e, max_relative = 1e-10);
            assert_relative_eq!(eval.beta_c, report.beta_c, max_relative = 1e-10);
            for node in Node::ALL {
                let (h, g) = lifted.powers(&w, node);
                let (th, tg) = lifted.trace_powers(&big_w, node);
                assert_relative_eq!(h, th, max_relative = 1e-10);
                assert_relative_eq!(g, tg, max_relative = 1e-10);
            }
            let sp = SecrecyProblem::new(&lifted, &QosTargets::from_config(&cfg), &cfg);
            assert_relative_eq!(sp.objective(&sp.normalize(&big_w)), eval.secrecy_raw, epsilon = 1e-9);
        }
    }

    #[test]
    fn surrogate_is_tight_and_a_lower_bound() {
        let (ch, cfg) = setup(3);
        let lifted = build_lifted(&ch);
        let sp = SecrecyProblem::new(&lifted, &QosTargets::from_config(&cfg), &cfg);
        let mut rng = stream_rng(4, Stream::Randomization);
        let n = cfg.stacked_len();
        let psd = |rng: &mut _| {
            let a = random_vec(n, rng);
            let b = random_vec(n, rng);
            (&a * a.adjoint() + &b * b.adjoint()) * C64::new(0.01, 0.0)
        };
        let vt = psd(&mut rng);
        let prob = sp.surrogate(&vt).unwrap();
        assert_relative_eq!(prob.objective(&vt), sp.objective(&vt), epsilon = 1e-12);
        for _ in 0..100 {
            let v = psd(&mut rng);
            assert!(prob.objective(&v) <= sp.objective(&v) + 1e-9);
        }
        // tangent slope of g2 against a central difference
        let dir = psd(&mut rng);
        let g2 = |v: &CMatrix| (1.0 + convex::inner(&sp.a2, v)).log2();
        let h = 1e-6;
        let fd = (g2(&(&vt + &dir * C64::new(h, 0.0))) - g2(&(&vt - &dir * C64::new(h, 0.0)))) / (2.0 * h);
        let d2 = 1.0 + convex::inner(&sp.a2, &vt);
        let analytic = convex::inner(&sp.a2, &dir) / (LN_2 * d2);
        assert_relative_eq!(analytic, fd, max_relative = 1e-4);
    }

    #[test]
    fn mrt_closed_form_without_eavesdropper_or_backscatter() {
        let mut cfg = default_scenario();
        cfg.set_num_aps(1);
        cfg.reflection_coeff = 0.0;
        cfg.rate_th_primary_bps = 0.0;
        cfg.rate_th_secondary_bps = 0.0;
        let geom = sample_geometry(&cfg, &mut stream_rng(5, Stream::Channel));
        let mut ch = assemble_channels(&geom, &fpa_baseline_layout(&cfg).unwrap(), &cfg).unwrap();
        ch.ap_to_node[0][Node::Eve.index()].fill(C64::new(0.0, 0.0));
        let qos = QosTargets::from_config(&cfg);
        assert_eq!((qos.beta_star, qos.kappa), (0.0, 0.0));
        let sol = solve_p2(&ch, &qos, None, &cfg, &ScaOptions::from_config(&cfg), &mut stream_rng(6, Stream::Randomization))
            .unwrap();
        let hp = ch.direct(0, Node::Pu).norm_squared();
        let expected = (1.0 + cfg.p_max_w * hp / cfg.noise_w(Node::Pu)).log2();
        assert!(sol.sca_iterations <= 2);
        assert_relative_eq!(sol.secrecy, expected, max_relative = 1e-6);
    }

    #[test]
    fn infinite_epsilon_runs_one_iteration() {
        let (ch, cfg) = setup(7);
        let qos = QosTargets::from_config(&cfg);
        let opts = ScaOptions {
            epsilon: f64::INFINITY,
            max_iterations: MAX_SCA_ITERATIONS,
        };
        let lifted = build_lifted(&ch);
        match solve_relaxed(&lifted, &qos, None, &cfg, &opts) {
            Ok(sol) => assert_eq!(sol.iterations, 1),
            Err(e) => assert!(matches!(e, Error::Infeasible(_)), "{e}"),
        }
    }

    #[test]
    fn rank_one_recovery_returns_the_vector() {
        let (ch, cfg) = setup(8);
        let lifted = build_lifted(&ch);
        let mut rng = stream_rng(9, Stream::Randomization);
        let mut w = random_vec(cfg.stacked_len(), &mut rng);
        w = common_scale(&w, cfg.antennas_per_ap, cfg.p_max_w);
        let big_w = &w * w.adjoint();
        let zero = QosTargets {
            beta_star: 0.0,
            kappa: 0.0,
        };
        let rec = extract_beamvector(&big_w, &lifted, &zero, &cfg, &mut rng).unwrap();
        assert!(rec.rank_one);
        assert_relative_eq!(rec.w.dotc(&w).norm(), w.norm() * rec.w.norm(), max_relative = 1e-9);
        let sp = SecrecyProblem::new(&lifted, &zero, &cfg);
        let eval = VectorEval::new(&lifted, &rec.w, &cfg);
        assert_relative_eq!(eval.secrecy_raw, sp.objective(&sp.normalize(&big_w)), epsilon = 1e-9);
    }

    #[test]
    fn rank_one_principal_must_meet_qos() {
        let (ch, cfg) = setup(12);
        let lifted = build_lifted(&ch);
        let mut rng = stream_rng(13, Stream::Randomization);
        let w = common_scale(&random_vec(cfg.stacked_len(), &mut rng), cfg.antennas_per_ap, cfg.p_max_w);
        let eval = VectorEval::new(&lifted, &w, &cfg);
        let qos = QosTargets {
            beta_star: 1.01 * eval.beta_c,
            kappa: 0.0,
        };
        match extract_beamvector(&(&w * w.adjoint()), &lifted, &qos, &cfg, &mut rng) {
            Ok(rec) => {
                assert!(!rec.rank_one);
                let e = VectorEval::new(&lifted, &rec.w, &cfg);
                assert!(qos.satisfied(e.beta_c, e.gamma_s));
            }
            Err(e) => assert!(matches!(e, Error::NoFeasibleCandidate { .. }), "{e}"),
        }
    }

    #[test]
    fn randomization_respects_power() {
        let (ch, cfg) = setup(10);
        let lifted = build_lifted(&ch);
        let mut rng = stream_rng(11, Stream::Randomization);
        let n = cfg.antennas_per_ap;
        let w = CMatrix::identity(cfg.stacked_len(), cfg.stacked_len()) * C64::new(cfg.p_max_w / n as f64, 0.0);
        let zero = QosTargets {
            beta_star: 0.0,
            kappa: 0.0,
        };
        let rec = extract_beamvector(&w, &lifted, &zero, &cfg, &mut rng).unwrap();
        assert!(!rec.rank_one);
        for m in 0..cfg.num_aps {
            assert!(rec.w.rows(m * n, n).norm_squared() <= cfg.p_max_w * (1.0 + 1e-8));
        }
    }
}
