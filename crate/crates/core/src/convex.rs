//! Log-barrier interior-point solver for the lifted beamforming subproblems.
//!
//! Problem family (all matrices Hermitian, `W ⪰ 0` of size `n`):
//!
//! ```text
//! maximize   Σ_i w_i log(a_i + ⟨A_i, W⟩) + ⟨C, W⟩ + const
//! subject to ⟨B_j, W⟩ ≤ b_j  or  ⟨B_j, W⟩ ≥ b_j
//! ```
//!
//! with `⟨X, Y⟩ = Re tr(X^H Y)`. The barrier `-μ log det W - μ Σ log slack_j`
//! is minimized by damped Newton steps for a geometrically decreasing `μ`.
//! Every Hessian is the operator `Δ ↦ μ W⁻¹ΔW⁻¹` plus one rank-one term
//! `c_k U_k ⟨U_k, Δ⟩` per log term and constraint, so the Newton system is
//! solved exactly with the Woodbury identity (the inverse of the base operator
//! is `X ↦ W X W / μ`) at `O(k n³)` cost instead of forming the `n² x n²`
//! Hessian.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::matrix_text;
use crate::{CMatrix, C64};

/// Real inner product `Re tr(A^H B)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).norm() <= tol * m.norm().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogTerm {
    pub weight: f64,
    pub offset: f64,
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineConstraint {
    pub label: String,
    pub matrix: CMatrix,
    pub bound: f64,
    pub sense: Sense,
}

impl AffineConstraint {
    /// Signed slack: non-negative when satisfied.
    pub fn slack(&self, w: &CMatrix) -> f64 {
        let v = inner(&self.matrix, w);
        match self.sense {
            Sense::AtMost => self.bound - v,
            Sense::AtLeast => v - self.bound,
        }
    }

    fn sign(&self) -> f64 {
        match self.sense {
            Sense::AtMost => -1.0,
            Sense::AtLeast => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeProblem {
    pub dim: usize,
    pub log_terms: Vec<LogTerm>,
    pub linear: CMatrix,
    pub constant: f64,
    pub constraints: Vec<AffineConstraint>,
}

impl ConeProblem {
    pub fn new(dim: usize) -> Self {
        ConeProblem {
            dim,
            log_terms: Vec::new(),
            linear: CMatrix::zeros(dim, dim),
            constant: 0.0,
            constraints: Vec::new(),
        }
    }

    /// Selector whose inner product with `W` is the trace of diagonal block `block`.
    pub fn block_trace_selector(dim: usize, block: usize, size: usize) -> CMatrix {
        let mut s = CMatrix::zeros(dim, dim);
        for k in block * size..(block + 1) * size {
            s[(k, k)] = C64::new(1.0, 0.0);
        }
        s
    }

    pub fn objective(&self, w: &CMatrix) -> f64 {
        let logs: f64 = self
            .log_terms
            .iter()
            .map(|t| t.weight * (t.offset + inner(&t.matrix, w)).ln())
            .sum();
        logs + inner(&self.linear, w) + self.constant
    }

    pub fn slacks(&self, w: &CMatrix) -> Vec<f64> {
        self.constraints.iter().map(|c| c.slack(w)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let check = |m: &CMatrix, what: &str| -> Result<()> {
            if m.shape() != (n, n) {
                return Err(Error::Dimension(format!("{what} is {:?}, expected {n}x{n}", m.shape())));
            }
            if !is_hermitian(m, 1e-10) {
                return Err(Error::Domain(format!("{what} is not Hermitian")));
            }
            Ok(())
        };
        check(&self.linear, "linear objective")?;
        for (i, t) in self.log_terms.iter().enumerate() {
            check(&t.matrix, &format!("log term {i}"))?;
            if !(t.offset > 0.0) || !(t.weight > 0.0) {
                return Err(Error::Domain(format!("log term {i} needs positive offset and weight")));
            }
        }
        for c in &self.constraints {
            check(&c.matrix, &format!("constraint {}", c.label))?;
        }
        Ok(())
    }

    /// Text dump of every matrix and scalar, for external cross-checks.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let scalar = |v: f64| CMatrix::from_element(1, 1, C64::new(v, 0.0));
        matrix_text::write_section(&mut out, "constant", &scalar(self.constant));
        matrix_text::write_section(&mut out, "linear", &self.linear);
        for (i, t) in self.log_terms.iter().enumerate() {
            matrix_text::write_section(&mut out, &format!("log{i}_weight"), &scalar(t.weight));
            matrix_text::write_section(&mut out, &format!("log{i}_offset"), &scalar(t.offset));
            matrix_text::write_section(&mut out, &format!("log{i}_matrix"), &t.matrix);
        }
        for c in &self.constraints {
            let tag = match c.sense {
                Sense::AtMost => "le",
                Sense::AtLeast => "ge",
            };
            matrix_text::write_section(&mut out, &format!("{}_{tag}_bound", c.label), &scalar(c.bound));
            matrix_text::write_section(&mut out, &format!("{}_{tag}_matrix", c.label), &c.matrix);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target for the duality-measure surrogate `ν μ`.
    pub tol: f64,
    pub max_newton: usize,
    /// Initial barrier weight.
    pub mu0: f64,
    pub mu_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_newton: 2000,
            mu0: 1.0,
            mu_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSolution {
    pub w: CMatrix,
    pub objective: f64,
    /// Constraint slacks at `w` (non-negative when satisfied).
    pub residuals: Vec<f64>,
    pub newton_iterations: usize,
    /// Objective after each centering step.
    pub outer_objectives: Vec<f64>,
    /// Final `ν μ`.
    pub gap_bound: f64,
    pub converged: bool,
}

const MAX_CENTERING_STEPS: usize = 200;

/// Lower Cholesky factor and `log det` of a positive-definite matrix.
fn factor(w: &CMatrix) -> Option<(CMatrix, f64)> {
    let chol = Cholesky::new(w.clone())?;
    // Complex square roots never fail, so a non-positive pivot shows up as a
    // non-real diagonal entry of L.
    let l = chol.unpack();
    let diag = l.diagonal();
    if diag.iter().any(|d| !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re) {
        return None;
    }
    let log_det = 2.0 * diag.iter().map(|d| d.re.ln()).sum::<f64>();
    log_det.is_finite().then_some((l, log_det))
}

/// Newton system `(μ W⁻¹·W⁻¹ + Σ c_k U_k⟨U_k,·⟩) Δ = R` in the coordinates
/// `X = L⁻¹ Δ L⁻ᴴ`, where the barrier Hessian is `μ I` and the remaining
/// terms are rank one: `(μ I + Σ V_k⟨V_k,·⟩) X = L^H R L` with
/// `V_k = √c_k L^H U_k L`, solved through a `k x k` positive-definite system.
struct NewtonSystem {
    l: CMatrix,
    mu: f64,
    factors: Vec<CMatrix>,
    gram: Option<GramSolver>,
}

/// Solver for `(μ I + G) y = t` with `G` a Gram matrix.
enum GramSolver {
    Cholesky(Cholesky<f64, Dyn>),
    /// Rounding can make a nearly singular Gram matrix with entries far above
    /// `μ` fail Cholesky; its eigenvalues are then clamped at zero.
    Eigen { q: DMatrix<f64>, inv: DVector<f64> },
}

impl GramSolver {
    fn new(gram: DMatrix<f64>, mu: f64) -> Self {
        let k = gram.nrows();
        let shifted = &gram + DMatrix::<f64>::identity(k, k) * mu;
        if let Some(c) = Cholesky::new(shifted) {
            return GramSolver::Cholesky(c);
        }
        let eig = gram.symmetric_eigen();
        let inv = eig.eigenvalues.map(|l| 1.0 / (l.max(0.0) + mu));
        GramSolver::Eigen {
            q: eig.eigenvectors,
            inv,
        }
    }

    fn solve(&self, t: &DVector<f64>) -> DVector<f64> {
        match self {
            GramSolver::Cholesky(c) => c.solve(t),
            GramSolver::Eigen { q, inv } => q * (q.transpose() * t).component_mul(inv),
        }
    }
}

impl NewtonSystem {
    fn new(l: CMatrix, mu: f64, terms: &[(&CMatrix, f64)]) -> Self {
        let lh = l.adjoint();
        let factors: Vec<CMatrix> = terms
            .iter()
            .map(|(u, c)| hermitize(&(&lh * *u * &l)) * C64::new(c.sqrt(), 0.0))
            .collect();
        let k = factors.len();
        let gram = (k > 0).then(|| {
            let m = DMatrix::<f64>::from_fn(k, k, |a, b| inner(&factors[a], &factors[b]));
            GramSolver::new(m, mu)
        });
        NewtonSystem { l, mu, factors, gram }
    }

    fn scale(&self, r: &CMatrix) -> CMatrix {
        hermitize(&(self.l.adjoint() * r * &self.l))
    }

    /// Solves for `R = rhs + barrier·W⁻¹`; returns `Δ` and `⟨R, Δ⟩`.
    fn solve(&self, rhs: &CMatrix, barrier: f64) -> (CMatrix, f64) {
        let mut r = self.scale(rhs);
        for i in 0..r.nrows() {
            r[(i, i)] += C64::new(barrier, 0.0);
        }
        let mut x = r.clone();
        if let Some(g) = &self.gram {
            let t = DVector::from_iterator(self.factors.len(), self.factors.iter().map(|v| inner(v, &r)));
            let y = g.solve(&t);
            for (v, yk) in self.factors.iter().zip(y.iter()) {
                x -= v * C64::new(*yk, 0.0);
            }
        }
        x /= C64::new(self.mu, 0.0);
        let dot = inner(&r, &x);
        (hermitize(&(&self.l * x * self.l.adjoint())), dot)
    }
}

fn barrier_value(prob: &ConeProblem, w: &CMatrix, mu: f64) -> Option<f64> {
    let (_, log_det) = factor(w)?;
    let mut value = -prob.constant - inner(&prob.linear, w) - mu * log_det;
    for t in &prob.log_terms {
        let arg = t.offset + inner(&t.matrix, w);
        if !(arg > 0.0) {
            return None;
        }
        value -= t.weight * arg.ln();
    }
    for c in &prob.constraints {
        let s = c.slack(w);
        if !(s > 0.0) {
            return None;
        }
        value -= mu * s.ln();
    }
    value.is_finite().then_some(value)
}

/// Strictly feasible means positive definite with positive slacks and log arguments.
pub fn is_strictly_feasible(prob: &ConeProblem, w: &CMatrix) -> bool {
    factor(w).is_some()
        && prob.constraints.iter().all(|c| c.slack(w) > 0.0)
        && prob
            .log_terms
            .iter()
            .all(|t| t.offset + inner(&t.matrix, w) > 0.0)
}

/// Step length for a Newton direction with decrement `λ² = dec/μ`.
///
/// Full steps inside the quadratic region; otherwise Armijo backtracking from
/// 1 down to the damped step `1/(1+λ)`. When the scaled barrier is
/// self-concordant (every log weight at least `μ`) the damped step is known to
/// stay in the domain and decrease it, so it is taken even if round-off hides
/// the decrease.
fn step_length(
    decrement: f64,
    mu: f64,
    self_concordant: bool,
    value_at: &dyn Fn(f64) -> Option<f64>,
    f0: f64,
) -> Option<f64> {
    let lambda = (decrement / mu).max(0.0).sqrt();
    let damped = 1.0 / (1.0 + lambda);
    let mut s = 1.0;
    if lambda < 0.25 {
        while s > 1e-14 {
            if value_at(s).is_some() {
                return Some(s);
            }
            s *= 0.5;
        }
        return None;
    }
    while s >= damped {
        if let Some(f1) = value_at(s) {
            if f1 <= f0 - 0.25 * s * decrement {
                return Some(s);
            }
        }
        s *= 0.5;
    }
    s = damped;
    while s > 1e-14 {
        if let Some(f1) = value_at(s) {
            let armijo = f1 <= f0 - 0.25 * s * decrement;
            if armijo || (self_concordant && f1 <= f0 + 1e-12 * f0.abs().max(1.0)) {
                return Some(s);
            }
        }
        s *= 0.5;
    }
    None
}

/// Damped Newton centering for fixed `μ`; returns the number of steps taken.
fn center(prob: &ConeProblem, w: &mut CMatrix, mu: f64, budget: usize) -> Result<usize> {
    let self_concordant = prob.log_terms.iter().all(|t| t.weight >= mu);
    for step in 0..budget {
        let (l, _) = factor(w).ok_or_else(|| Error::Domain("iterate left the PSD cone".into()))?;
        // Negative gradient without the `μ W⁻¹` barrier part.
        let mut rhs = prob.linear.clone();
        let mut terms: Vec<(&CMatrix, f64)> = Vec::with_capacity(prob.log_terms.len() + prob.constraints.len());
        for t in &prob.log_terms {
            let arg = t.offset + inner(&t.matrix, w);
            rhs += &t.matrix * C64::new(t.weight / arg, 0.0);
            terms.push((&t.matrix, t.weight / (arg * arg)));
        }
        for c in &prob.constraints {
            let s = c.slack(w);
            rhs += &c.matrix * C64::new(c.sign() * mu / s, 0.0);
            terms.push((&c.matrix, mu / (s * s)));
        }
        let sys = NewtonSystem::new(l, mu, &terms);
        let (delta, decrement) = sys.solve(&hermitize(&rhs), mu);
        if !decrement.is_finite() {
            return Err(Error::Domain("non-finite Newton decrement".into()));
        }
        if decrement <= 1e-10 * mu {
            return Ok(step);
        }
        let f0 = barrier_value(prob, w, mu).ok_or_else(|| Error::Domain("infeasible iterate".into()))?;
        let at = |s: f64| barrier_value(prob, &hermitize(&(&*w + &delta * C64::new(s, 0.0))), mu);
        let sl = step_length(decrement, mu, self_concordant, &at, f0);
        match sl {
            Some(s) => *w = hermitize(&(&*w + &delta * C64::new(s, 0.0))),
            // Stalled at round-off level.
            None => return Ok(step + 1),
        }
    }
    Ok(budget)
}

/// Maximizes the cone problem from a strictly feasible start (or the phase-1
/// seed when `start` is `None`).
pub fn solve(prob: &ConeProblem, start: Option<&CMatrix>, opts: &SolverOptions) -> Result<ConeSolution> {
    prob.validate()?;
    let mut w = match start {
        Some(s) if is_strictly_feasible(prob, s) => hermitize(s),
        Some(_) => return Err(Error::Infeasible("starting point is not strictly feasible".into())),
        None => feasibility_seed(prob, None)?,
    };
    let nu = (prob.dim + prob.constraints.len()) as f64;
    let mut mu = opts.mu0;
    let mut newton = 0;
    let mut outer = Vec::new();
    let mut converged = false;
    loop {
        let budget = opts.max_newton.saturating_sub(newton).min(MAX_CENTERING_STEPS);
        let used = center(prob, &mut w, mu, budget)?;
        newton += used;
        outer.push(prob.objective(&w));
        if mu * nu <= opts.tol {
            converged = true;
            break;
        }
        if newton >= opts.max_newton {
            break;
        }
        mu /= opts.mu_factor;
    }
    Ok(ConeSolution {
        objective: prob.objective(&w),
        residuals: prob.slacks(&w),
        newton_iterations: newton,
        outer_objectives: outer,
        gap_bound: mu * nu,
        converged,
        w,
    })
}

/// Scale of the identity start: half of what the tightest `≤` constraint allows.
fn identity_scale(prob: &ConeProblem) -> f64 {
    let eye = CMatrix::identity(prob.dim, prob.dim);
    prob.constraints
        .iter()
        .filter(|c| c.sense == Sense::AtMost)
        .filter_map(|c| {
            let t = inner(&c.matrix, &eye);
            (t > 0.0 && c.bound > 0.0).then(|| 0.5 * c.bound / t)
        })
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
        .unwrap_or(1e-3)
}

/// A strictly feasible, positive-definite starting point.
///
/// Tries a scaled identity, then the identity plus the largest multiple of
/// `hint` the `≤` constraints admit, and otherwise runs a phase-1 barrier
/// problem maximizing the minimum relative slack `t` over `(W, t)`.
pub fn feasibility_seed(prob: &ConeProblem, hint: Option<&CMatrix>) -> Result<CMatrix> {
    let n = prob.dim;
    let s0 = identity_scale(prob);
    let eye = CMatrix::identity(n, n);
    let base = &eye * C64::new(s0, 0.0);
    let mut candidates = vec![base.clone()];
    if let Some(h) = hint {
        let half = &eye * C64::new(0.5 * s0, 0.0);
        let gamma = prob
            .constraints
            .iter()
            .filter(|c| c.sense == Sense::AtMost)
            .filter_map(|c| {
                let hv = inner(&c.matrix, h);
                (hv > 0.0).then(|| (0.9 * c.bound - inner(&c.matrix, &half)) / hv)
            })
            .fold(1.0f64, |a, v| if v.is_finite() { a.min(v) } else { a })
            .max(0.0);
        candidates.push(hermitize(&(half + h * C64::new(gamma, 0.0))));
    }
    if let Some(c) = candidates.iter().find(|c| prob.constraints.iter().all(|k| k.slack(c) > 0.0)) {
        return Ok(c.clone());
    }
    let start = candidates.pop().expect("at least one candidate");
    phase_one(prob, start)
}

fn phase_one(prob: &ConeProblem, mut w: CMatrix) -> Result<CMatrix> {
    // Scaled constraints ⟨B̃_j, W⟩ - b̃_j ≥ t with unit-magnitude bounds.
    let scaled: Vec<(CMatrix, f64)> = prob
        .constraints
        .iter()
        .map(|c| {
            let scale = if c.bound != 0.0 { c.bound.abs() } else { 1.0 };
            let sign = c.sign();
            (&c.matrix * C64::new(sign / scale, 0.0), sign * c.bound / scale)
        })
        .collect();
    let slack = |w: &CMatrix, t: f64| -> Vec<f64> { scaled.iter().map(|(b, v)| inner(b, w) - v - t).collect() };
    let value = |w: &CMatrix, t: f64, mu: f64| -> Option<f64> {
        let (_, log_det) = factor(w)?;
        let mut v = -t - mu * log_det;
        for s in slack(w, t) {
            if !(s > 0.0) {
                return None;
            }
            v -= mu * s.ln();
        }
        v.is_finite().then_some(v)
    };
    let mut t = slack(&w, 0.0).into_iter().fold(f64::INFINITY, f64::min) - 1.0;
    let nu = (prob.dim + scaled.len()) as f64;
    let mut mu = 1.0;
    let tol = 1e-7;
    for _outer in 0..60 {
        for _ in 0..MAX_CENTERING_STEPS {
            let (l, _) = factor(&w).ok_or_else(|| Error::Domain("phase-1 iterate left the cone".into()))?;
            let s = slack(&w, t);
            // Negative gradients, the W part without its `μ W⁻¹` barrier term.
            let mut rhs_w = CMatrix::zeros(prob.dim, prob.dim);
            let mut rhs_t = 1.0;
            let mut cross = CMatrix::zeros(prob.dim, prob.dim);
            let mut d = 0.0;
            let mut terms = Vec::with_capacity(scaled.len());
            for ((b, _), sj) in scaled.iter().zip(s.iter()) {
                rhs_w += b * C64::new(mu / sj, 0.0);
                rhs_t -= mu / sj;
                let c = mu / (sj * sj);
                cross -= b * C64::new(c, 0.0);
                d += c;
                terms.push((b, c));
            }
            let sys = NewtonSystem::new(l, mu, &terms);
            let (x1, dec1) = sys.solve(&hermitize(&rhs_w), mu);
            let (x2, _) = sys.solve(&cross, 0.0);
            let cross_x1 = inner(&cross, &x1);
            let schur = d - inner(&cross, &x2);
            let dt = (rhs_t - cross_x1) / schur;
            let dw = &x1 - &x2 * C64::new(dt, 0.0);
            let decrement = dec1 - dt * cross_x1 + rhs_t * dt;
            if !decrement.is_finite() {
                return Err(Error::Domain("phase-1 Newton step is not finite".into()));
            }
            if decrement <= 1e-10 * mu {
                break;
            }
            let f0 = value(&w, t, mu).ok_or_else(|| Error::Domain("phase-1 iterate infeasible".into()))?;
            let at = |step: f64| value(&hermitize(&(&w + &dw * C64::new(step, 0.0))), t + step * dt, mu);
            match step_length(decrement, mu, true, &at, f0) {
                Some(step) => {
                    w = hermitize(&(&w + &dw * C64::new(step, 0.0)));
                    t += step * dt;
                }
                None => break,
            }
            if t >= 1.0 {
                break;
            }
        }
        let strict = slack(&w, 0.0).into_iter().all(|s| s > 0.0);
        if strict && (t >= 1.0 || mu * nu <= tol) {
            return Ok(w);
        }
        if mu * nu <= tol {
            break;
        }
        mu /= 10.0;
    }
    if slack(&w, 0.0).into_iter().all(|s| s > 0.0) {
        return Ok(w);
    }
    Err(Error::Infeasible(format!(
        "maximum minimum scaled slack is {t:.3e} <= 0"
    )))
}
