use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfsr::ao::Scheme;
use cfsr::beamforming::{build_lifted, QosTargets, SecrecyProblem};
use cfsr::channel::{assemble_channels, sample_geometry};
use cfsr::convex::{feasibility_seed, ConeProblem};
use cfsr::experiments::{
    emit_plotdata, load_results, run_convergence, run_sweep, write_convergence, write_sweep, SweepParam, SweepSpec,
};
use cfsr::par::Execution;
use cfsr::scenario::{default_scenario, fpa_baseline_layout, load_scenario, ScenarioConfig};
use cfsr::streams::{stream_rng, Stream};
use cfsr::Error;

/// Secure transmission simulations for movable-antenna cell-free symbiotic radio.
#[derive(Parser)]
#[command(name = "simulate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep of one scenario parameter over several schemes.
    Sweep(SweepArgs),
    /// SCA, swarm and AO convergence traces for one channel realization.
    Converge(ConvergeArgs),
    /// Plot data (x, scheme, mean, ci_low, ci_high) from sweep results.
    Plotdata(PlotArgs),
    /// Channel matrices and the first beamforming subproblem in text matrix form.
    Dump(DumpArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file; the built-in default scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SwarmArgs {
    /// Swarm size Q.
    #[arg(long, default_value_t = 60)]
    particles: usize,
    /// Swarm iterations S.
    #[arg(long, default_value_t = 60)]
    iterations: usize,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// One of p_max_dbm, n_antennas, m_aps, pathloss_exponent.
    #[arg(long)]
    param: String,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Comma-separated subset of gapso, pso, fpa, random.
    #[arg(long, value_delimiter = ',', default_value = "gapso,pso,fpa,random")]
    schemes: Vec<String>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    swarm: SwarmArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, default_value = "convergence")]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    swarm: SwarmArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in", default_value = "results")]
    input: PathBuf,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long, default_value = "dump")]
    out: PathBuf,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

fn scenario(args: &ScenarioArgs) -> cfsr::Result<ScenarioConfig> {
    let mut cfg = match &args.scenario {
        Some(p) => load_scenario(p)?,
        None => default_scenario(),
    };
    cfg.rng_seed = args.seed;
    Ok(cfg)
}

fn with_swarm(mut cfg: ScenarioConfig, args: &SwarmArgs) -> cfsr::Result<(ScenarioConfig, Execution)> {
    cfg.swarm.particles = args.particles;
    cfg.swarm.iterations = args.iterations;
    cfg.validate()?;
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    Ok((cfg, exec))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write_text(path: &Path, text: &str) -> cfsr::Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> cfsr::Result<()> {
    match cli.command {
        Command::Sweep(a) => {
            let (base, exec) = with_swarm(scenario(&a.scenario)?, &a.swarm)?;
            let schemes = a.schemes.iter().map(|s| s.parse()).collect::<cfsr::Result<Vec<Scheme>>>()?;
            let spec = SweepSpec {
                param: a.param.parse()?,
                values: a.values,
                trials: a.trials,
                schemes,
                base,
                seed: a.scenario.seed,
                exec,
            };
            let result = run_sweep(&spec)?;
            report(&write_sweep(&result, &a.out)?);
        }
        Command::Converge(a) => {
            let (cfg, exec) = with_swarm(scenario(&a.scenario)?, &a.swarm)?;
            let traces = run_convergence(&cfg, a.scenario.seed, exec)?;
            report(&write_convergence(&traces, &a.out)?);
        }
        Command::Plotdata(a) => {
            let mut paths = Vec::new();
            for result in load_results(&a.input)? {
                paths.push(emit_plotdata(&result, &a.out)?);
            }
            report(&paths);
        }
        Command::Dump(a) => {
            let cfg = scenario(&a.scenario)?;
            let geom = sample_geometry(&cfg, &mut stream_rng(a.scenario.seed, Stream::Channel));
            let ch = assemble_channels(&geom, &fpa_baseline_layout(&cfg)?, &cfg)?;
            let sp = SecrecyProblem::new(&build_lifted(&ch), &QosTargets::from_config(&cfg), &cfg);
            let mut shell = ConeProblem::new(cfg.stacked_len());
            shell.constraints = sp.constraints.clone();
            let problem = sp.surrogate(&feasibility_seed(&shell, None)?)?;
            std::fs::create_dir_all(&a.out).map_err(|source| Error::Io {
                path: a.out.clone(),
                source,
            })?;
            let (cp, pp) = (a.out.join("channels.txt"), a.out.join("problem.txt"));
            write_text(&cp, &ch.to_text())?;
            write_text(&pp, &problem.to_text())?;
            report(&[cp, pp]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Sweep parameter names are validated before any work starts.
    if let Command::Sweep(a) = &cli.command {
        if let Err(e) = a.param.parse::<SweepParam>() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else if e.is_io() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
