use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::Rng;

use permdyn::harness::{run_experiment, write_outputs, Dynamics, ExperimentConfig};
use permdyn::limits;
use permdyn::partition::{
    count_upcrossings, coupling_step, sample_poidir, sup_norm_discrepancy, CouplingState,
};
use permdyn::perm::{sample_uniform_transposition, CyclePermutation};
use permdyn::rng::derive_rng_stream;
use permdyn::walks::compare_finite_vs_infinite;
use permdyn::Result;

#[derive(Parser)]
#[command(
    name = "permdyn",
    about = "Random walks on dynamic permutations: simulations, limit curves, \
             partition couplings and finite-speed checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run walk trials under one of the dynamics and write trials.csv plus
    /// summary.json into the output directory.
    Simulate {
        /// Dynamics: cdp (merge-only), cfdp (uniform transpositions) or
        /// deg2 (edge rewiring).
        #[arg(long)]
        dynamics: Dynamics,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Run length in units of n (default: 3 for cfdp/deg2, (n-1)/n for cdp).
        #[arg(long)]
        horizon: Option<f64>,
        /// Spacing of the scaled-time sampling grid.
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
        /// Drop-down gate exponent a: the gate is t > n(1 + n^a)/2.
        #[arg(long, default_value_t = -0.25, allow_hyphen_values = true)]
        eps_exponent: f64,
        /// Pin the walk start to this vertex (1-indexed) instead of drawing
        /// it uniformly per trial.
        #[arg(long)]
        pin_v0: Option<usize>,
        /// Local (on-giant) mixing threshold.
        #[arg(long, default_value_t = 0.05)]
        local_eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the limit curves zeta, phi and eta∘phi as CSV.
    Limits {
        #[arg(long)]
        umax: f64,
        #[arg(long)]
        step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Couple two independent PoiDir(theta) split-merge chains with shared
    /// markers; write per-step largest block and sup-norm discrepancy.
    Coupling {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Level parameter: upcrossings of largest block over 1 - eps are
        /// reported.
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact comparison of the finite-speed walk (rho steps per permutation)
    /// against the instantly-uniformizing walk on one random trajectory.
    Fspeed {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        rho: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        seed: u64,
    },
}

fn cmd_simulate(
    dynamics: Dynamics,
    n: usize,
    trials: usize,
    seed: u64,
    horizon: Option<f64>,
    grid_step: f64,
    eps_exponent: f64,
    pin_v0: Option<usize>,
    local_eps: f64,
    out: PathBuf,
) -> Result<()> {
    let mut config = ExperimentConfig::new(dynamics, n, trials, seed);
    if let Some(h) = horizon {
        config.horizon = h;
    }
    config.grid_step = grid_step;
    config.eps_exponent = eps_exponent;
    if pin_v0 == Some(0) {
        return Err(permdyn::Error::Config("--pin-v0 is 1-indexed".into()));
    }
    config.pin_v0 = pin_v0.map(|v| v - 1);
    config.local_eps = local_eps;
    let (records, summary) = run_experiment(&config)?;
    write_outputs(&records, &summary, &out)?;
    let drops = summary.dropdown_samples.len();
    println!(
        "wrote {} trials to {}: {}/{} dropped, KS vs limit = {}",
        trials,
        out.display(),
        drops,
        trials,
        summary
            .ks_vs_limit
            .map_or("n/a".to_string(), |k| format!("{k:.4}")),
    );
    Ok(())
}

fn cmd_limits(umax: f64, step: f64, out: PathBuf) -> Result<()> {
    if !(umax > 0.0) || !(step > 0.0) {
        return Err(permdyn::Error::Config("umax and step must be positive".into()));
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(&out)?);
    writeln!(file, "u,zeta,phi,eta_of_phi")?;
    let count = (umax / step + 1e-9).floor() as usize;
    for k in 0..=count {
        let u = k as f64 * step;
        let z = limits::zeta(u)?;
        let p = limits::phi(u)?;
        let e = limits::eta(p)?;
        writeln!(file, "{},{:.8e},{:.8e},{:.8e}", u, z, p, e)?;
    }
    file.flush()?;
    println!("wrote {} rows to {}", count + 1, out.display());
    Ok(())
}

fn cmd_coupling(
    theta: f64,
    eps: f64,
    steps: u64,
    replicas: usize,
    seed: u64,
    out: PathBuf,
) -> Result<()> {
    std::fs::create_dir_all(&out)?;
    let path = out.join("coupling.csv");
    let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(file, "replica,step,largest_block,sup_norm")?;
    let mut total_upcrossings = 0usize;
    let mut final_sup = 0.0f64;
    for replica in 0..replicas {
        let mut rng = derive_rng_stream(seed, replica as u64);
        let left = sample_poidir(&mut rng, theta)?;
        let right = sample_poidir(&mut rng, theta)?;
        let mut state = CouplingState::new(left, right)?;
        let mut largest_series = Vec::with_capacity(steps as usize + 1);
        largest_series.push(state.left.largest());
        writeln!(
            file,
            "{},0,{:.8e},{:.8e}",
            replica + 1,
            state.left.largest(),
            sup_norm_discrepancy(&state)
        )?;
        for step in 1..=steps {
            coupling_step(&mut state, &mut rng, 1e-12);
            largest_series.push(state.left.largest());
            writeln!(
                file,
                "{},{},{:.8e},{:.8e}",
                replica + 1,
                step,
                state.left.largest(),
                sup_norm_discrepancy(&state)
            )?;
        }
        total_upcrossings += count_upcrossings(&largest_series, eps);
        final_sup += sup_norm_discrepancy(&state);
    }
    file.flush()?;
    println!(
        "wrote {} to {}: mean upcrossings of {:.3} = {:.2}, mean final sup-norm = {:.4}",
        replicas,
        path.display(),
        1.0 - eps,
        total_upcrossings as f64 / replicas as f64,
        final_sup / replicas as f64
    );
    Ok(())
}

fn cmd_fspeed(n: usize, rho: usize, steps: usize, seed: u64) -> Result<()> {
    let mut rng = derive_rng_stream(seed, 0);
    let mut perm = CyclePermutation::identity(n)?;
    let mut trajectory = vec![perm.clone()];
    for _ in 0..steps {
        let (a, b) = sample_uniform_transposition(&mut rng, n)?;
        perm.apply_transposition(a, b)?;
        trajectory.push(perm.clone());
    }
    let v0 = rng.random_range(0..n);
    let distances = compare_finite_vs_infinite(&trajectory, v0, rho)?;
    println!("step,tv_finite_vs_infinite");
    for (i, d) in distances.iter().enumerate() {
        println!("{},{:.8e}", i + 1, d);
    }
    let max = distances.iter().copied().fold(0.0f64, f64::max);
    println!("# max over {} steps at rho={}: {:.6}", steps, rho, max);
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            dynamics,
            n,
            trials,
            seed,
            horizon,
            grid_step,
            eps_exponent,
            pin_v0,
            local_eps,
            out,
        } => cmd_simulate(
            dynamics, n, trials, seed, horizon, grid_step, eps_exponent, pin_v0,
            local_eps, out,
        ),
        Command::Limits { umax, step, out } => cmd_limits(umax, step, out),
        Command::Coupling { theta, eps, steps, replicas, seed, out } => {
            cmd_coupling(theta, eps, steps, replicas, seed, out)
        }
        Command::Fspeed { n, rho, steps, seed } => cmd_fspeed(n, rho, steps, seed),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
