use cfsr::beamforming::{build_lifted, QosTargets, SecrecyProblem};
use cfsr::channel::{assemble_channels, sample_geometry};
use cfsr::convex::{feasibility_seed, solve, AffineConstraint, ConeProblem, LogTerm, Sense, SolverOptions};
use cfsr::scenario::{default_scenario, fpa_baseline_layout};
use cfsr::streams::{stream_rng, trial_seed, Stream, TrialRng};
use cfsr::{CMatrix, CVector, C64};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn psd(n: usize, rank: usize, rng: &mut TrialRng) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for _ in 0..rank {
        let v = CVector::from_fn(n, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
        m += &v * v.adjoint();
    }
    m
}

/// `n²` full-rank log terms make the objective strictly concave, so the
/// maximizer is unique.
fn strictly_concave(n: usize, rng: &mut TrialRng) -> ConeProblem {
    let mut p = ConeProblem::new(n);
    for _ in 0..n * n {
        p.log_terms.push(LogTerm {
            weight: rng.random_range(0.5..1.5),
            offset: rng.random_range(0.5..2.0),
            matrix: psd(n, n, rng),
        });
    }
    p.linear = -psd(n, 1, rng) * C64::new(0.5, 0.0);
    p.constraints.push(AffineConstraint {
        label: "trace".into(),
        matrix: CMatrix::identity(n, n),
        bound: 1.0,
        sense: Sense::AtMost,
    });
    let b = psd(n, 1, rng);
    let top = b.clone().symmetric_eigenvalues().max();
    p.constraints.push(AffineConstraint {
        label: "floor".into(),
        matrix: b,
        bound: 0.1 * top,
        sense: Sense::AtLeast,
    });
    p
}

/// Every datum times `c`: log arguments shift the objective by a constant and
/// the remaining terms scale it, so the maximizer is unchanged.
fn scaled(p: &ConeProblem, c: f64) -> ConeProblem {
    let k = C64::new(c, 0.0);
    let mut q = p.clone();
    for t in &mut q.log_terms {
        t.weight *= c;
        t.offset *= c;
        t.matrix *= k;
    }
    q.linear *= k;
    for con in &mut q.constraints {
        con.matrix *= k;
        con.bound *= c;
    }
    q
}

#[test]
fn maximizer_is_scale_invariant() {
    let mut rng = stream_rng(31, Stream::Randomization);
    let opts = SolverOptions {
        tol: 1e-10,
        ..Default::default()
    };
    for i in 0..10 {
        let n = 2 + i % 2;
        let p = strictly_concave(n, &mut rng);
        let base = solve(&p, None, &opts).unwrap();
        for c in [0.5, 4.0, 30.0] {
            let sol = solve(&scaled(&p, c), None, &opts).unwrap();
            let d = (&sol.w - &base.w).norm();
            assert!(d <= 1e-4 * base.w.norm(), "instance {i}, c = {c}: {d:e}");
        }
    }
}

#[test]
fn feasibility_seed_is_strictly_feasible_on_full_instances() {
    let cfg = default_scenario();
    let qos = QosTargets::from_config(&cfg);
    let mut strict = 0;
    for t in 0..10 {
        let geom = sample_geometry(&cfg, &mut stream_rng(trial_seed(42, t), Stream::Channel));
        let ch = assemble_channels(&geom, &fpa_baseline_layout(&cfg).unwrap(), &cfg).unwrap();
        let sp = SecrecyProblem::new(&build_lifted(&ch), &qos, &cfg);
        let mut shell = ConeProblem::new(cfg.stacked_len());
        shell.constraints = sp.constraints.clone();
        let Ok(w0) = feasibility_seed(&shell, None) else {
            continue;
        };
        strict += 1;
        assert!(shell.slacks(&w0).iter().all(|s| *s > 0.0), "{:?}", shell.slacks(&w0));
        assert!(w0.clone().symmetric_eigenvalues().min() > 0.0);
    }
    assert!(strict > 0);
}
