//! Batch command-line front end: placement search, single-draw
//! beamforming, Monte-Carlo sweeps, and a built-in verification suite.
//!
//! Exit codes: 0 on success, 2 when the scene admits no feasible mounting
//! point, 3 when the fraction of degraded solver runs in a sweep exceeds
//! the configured limit. Transmit power crosses this boundary in dBm and
//! is converted to watts immediately.

mod verify;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ris_secrecy::beamforming::{exhaustive_reflect_oracle, optimize_beamforming, TighteningParams};
use ris_secrecy::channel::{dbm_to_watts, f_factors, ChannelSet, FadingParams, LinkBudget};
use ris_secrecy::harness::{
    configure_workers_from_env, load_scene, sweep, write_gnuplot_script, write_sweep_csv,
    ExperimentConfig, HarnessError, Scheme, SweepAxis,
};
use ris_secrecy::placement::{brute_force_placement, outer_optimize, PlacementGrid};

const EXIT_INFEASIBLE: i32 = 2;
const EXIT_DEGRADED: i32 = 3;

#[derive(Parser)]
#[command(
    name = "ris-secrecy",
    version,
    about = "RIS placement and passive-beamforming secrecy-rate experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the surface mounting position for a scene.
    Place {
        /// Scene description file (TOML).
        #[arg(long)]
        scene: PathBuf,
        /// Also run the exhaustive position search and report the gap.
        #[arg(long)]
        oracle: bool,
        /// Position step of the exhaustive search, in meters.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Optimize the reflect coefficients for one channel draw at the
    /// optimal mounting position.
    Beamform {
        /// Scene description file (TOML).
        #[arg(long)]
        scene: PathBuf,
        /// Number of reflecting units.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Transmit power in dBm.
        #[arg(long, default_value_t = 10.0)]
        ps: f64,
        /// Channel draw seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also run the exhaustive reflect oracle (requires n <= 3).
        #[arg(long)]
        oracle: bool,
    },
    /// Monte-Carlo sweep of the location schemes over one axis; writes
    /// CSV and a gnuplot script into the output directory.
    Sweep {
        /// Scene description file (TOML).
        #[arg(long)]
        scene: PathBuf,
        /// Swept parameter: ps, n, x-max, y-max, or z-max.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Comma-separated schemes out of joint, near-source, near-dest,
        /// random.
        #[arg(long, value_delimiter = ',', default_value = "joint,near-source,near-dest,random")]
        schemes: Vec<String>,
        /// Channel draws per sweep point and scheme.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Base seed; trial t draws its channels from seed + t.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for the CSV and plot script.
        #[arg(long)]
        out: PathBuf,
        /// Reflecting units when the axis does not sweep them.
        #[arg(long, default_value_t = 16)]
        n: usize,
        /// Transmit power in dBm when the axis does not sweep it.
        #[arg(long, default_value_t = 10.0)]
        ps: f64,
        /// Candidate lattice step for the location schemes, in meters.
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        /// Exit with status 3 when any scheme's degraded-solve fraction
        /// exceeds this.
        #[arg(long, default_value_t = 0.05)]
        max_degraded: f64,
    },
    /// Run the built-in verification suite and report each check.
    Verify,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = configure_workers_from_env() {
        log::info!("worker pool size {n} from the environment");
    }
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Place { scene, oracle, step } => cmd_place(&scene, oracle, step),
        Command::Beamform {
            scene,
            n,
            ps,
            seed,
            oracle,
        } => cmd_beamform(&scene, n, ps, seed, oracle),
        Command::Sweep {
            scene,
            axis,
            values,
            schemes,
            trials,
            seed,
            out,
            n,
            ps,
            step,
            max_degraded,
        } => cmd_sweep(SweepArgs {
            scene,
            axis,
            values,
            schemes,
            trials,
            seed,
            out,
            n,
            ps,
            step,
            max_degraded,
        }),
        Command::Verify => Ok(verify::run()),
    }
}

fn cmd_place(scene_path: &PathBuf, oracle: bool, step: f64) -> Result<i32> {
    let scene = load_scene(scene_path).with_context(|| scene_path.display().to_string())?;
    let budget = LinkBudget::reference();
    let grid = PlacementGrid::reference();
    let start = Instant::now();
    let res = outer_optimize(&scene, &budget, &grid);
    if !res.feasible {
        eprintln!("infeasible: no mounting point satisfies the scene constraints");
        return Ok(EXIT_INFEASIBLE);
    }
    println!(
        "p_opt = [{:.4}, {:.4}, {:.4}] m",
        res.p_opt.x, res.p_opt.y, res.p_opt.z
    );
    println!("g_opt = {:.9e}", res.g_opt);
    println!("feasible = true");
    println!("candidate pairs evaluated (inner tier) = {}", res.inner_evals);
    println!("positions checked (outer tier) = {}", res.candidates_checked);
    println!("elapsed = {:.2?}", start.elapsed());
    if oracle {
        if !(step > 0.0) {
            bail!("oracle step must be positive, got {step}");
        }
        let start = Instant::now();
        let brute = brute_force_placement(&scene, &budget, step);
        if !brute.feasible {
            eprintln!("infeasible: the exhaustive search found no mounting point");
            return Ok(EXIT_INFEASIBLE);
        }
        println!(
            "oracle p = [{:.4}, {:.4}, {:.4}] m, g = {:.9e} (step {step} m, {:.2?})",
            brute.p_opt.x,
            brute.p_opt.y,
            brute.p_opt.z,
            brute.g_opt,
            start.elapsed()
        );
        println!("g_opt / g_oracle = {:.6}", res.g_opt / brute.g_opt);
    }
    Ok(0)
}

fn cmd_beamform(scene_path: &PathBuf, n: usize, ps: f64, seed: u64, oracle: bool) -> Result<i32> {
    if n == 0 {
        bail!("at least one reflecting unit is required");
    }
    if oracle && n > 3 {
        bail!("the exhaustive oracle is exponential in the unit count; use n <= 3");
    }
    let scene = load_scene(scene_path).with_context(|| scene_path.display().to_string())?;
    let mut budget = LinkBudget::reference();
    budget.tx_power = dbm_to_watts(ps);
    let placement = outer_optimize(&scene, &budget, &PlacementGrid::reference());
    if !placement.feasible {
        eprintln!("infeasible: no mounting point satisfies the scene constraints");
        return Ok(EXIT_INFEASIBLE);
    }
    println!(
        "mounting point = [{:.4}, {:.4}, {:.4}] m (g = {:.6e})",
        placement.p_opt.x, placement.p_opt.y, placement.p_opt.z, placement.g_opt
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch = ChannelSet::draw(n, &FadingParams::reference(), &mut rng);
    let params = TighteningParams::reference();
    let out = optimize_beamforming(&ch, placement.p_opt, &scene, &budget, &params)?;
    println!("reflect coefficients (n = {n}, ps = {ps} dBm, seed = {seed}):");
    for (k, x) in out.q.iter().enumerate() {
        println!(
            "  unit {k:>2}: modulus {:.6}  phase {:+.6} rad",
            x.norm(),
            x.arg()
        );
    }
    println!("rate ratio F = {:.6}", out.ratio);
    println!("secrecy rate = {:.6} bit/s/Hz", out.rate);
    println!("relaxation bound on F = {:.6}", out.ratio_bound);
    println!(
        "rank-one ratio = {:.9}, converged = {}, degraded = {}",
        out.rank_ratio, out.converged, out.degraded
    );
    if out.used_randomization {
        println!("randomized recovery beat the eigenpair readout");
    }
    if out.floored {
        println!("no recovered row kept the advantage; reflecting nothing is optimal");
    }
    println!("tightening iterations:");
    for it in &out.iterations {
        println!(
            "  {:>2}: threshold {:.6}  step {:.3e}  {:?}  rank ratio {:.9}  objective {:.9e}",
            it.iter, it.threshold, it.step, it.status, it.rank_ratio, it.objective
        );
    }
    if oracle {
        let factors = f_factors(placement.p_opt, &budget, &scene)
            .map_err(|e| anyhow!("rate factors at the mounting point: {e}"))?;
        let start = Instant::now();
        let (_, f_star) = exhaustive_reflect_oracle(&ch, &factors, budget.noise_power, 64, 8);
        println!(
            "oracle F = {:.6} over 64 phases x 8 levels ({:.2?}); pipeline attains {:.4} of it",
            f_star,
            start.elapsed(),
            out.ratio / f_star
        );
    }
    Ok(0)
}

struct SweepArgs {
    scene: PathBuf,
    axis: String,
    values: Vec<f64>,
    schemes: Vec<String>,
    trials: usize,
    seed: u64,
    out: PathBuf,
    n: usize,
    ps: f64,
    step: f64,
    max_degraded: f64,
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let axis = SweepAxis::parse(&args.axis).ok_or_else(|| {
        anyhow!(
            "unknown axis '{}'; expected one of ps, n, x-max, y-max, z-max",
            args.axis
        )
    })?;
    let schemes: Vec<Scheme> = args
        .schemes
        .iter()
        .map(|s| {
            Scheme::parse(s).ok_or_else(|| {
                anyhow!("unknown scheme '{s}'; expected joint, near-source, near-dest, or random")
            })
        })
        .collect::<Result<_>>()?;
    if schemes.is_empty() {
        bail!("at least one scheme is required");
    }
    if args.values.is_empty() {
        bail!("at least one axis value is required");
    }
    if args.trials == 0 {
        bail!("at least one trial is required");
    }
    let scene = load_scene(&args.scene).with_context(|| args.scene.display().to_string())?;
    let mut cfg = ExperimentConfig::reference(scene);
    cfg.n_units = args.n;
    cfg.budget.tx_power = dbm_to_watts(args.ps);
    cfg.trials = args.trials;
    cfg.candidate_step = args.step;
    cfg.base_seed = args.seed;

    let start = Instant::now();
    let result = match sweep(&cfg, axis, &args.values, &schemes) {
        Ok(result) => result,
        Err(HarnessError::InfeasiblePlacement) => {
            eprintln!("infeasible: a sweep point admits no mounting point");
            return Ok(EXIT_INFEASIBLE);
        }
        Err(err) => return Err(err.into()),
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let csv_name = format!("sweep-{}.csv", axis.label());
    let gp_name = format!("sweep-{}.gp", axis.label());
    let png_name = format!("sweep-{}.png", axis.label());
    let csv_path = args.out.join(&csv_name);
    let gp_path = args.out.join(&gp_name);
    let mut csv = std::fs::File::create(&csv_path)
        .with_context(|| format!("creating {}", csv_path.display()))?;
    write_sweep_csv(&mut csv, &result)?;
    let mut gp =
        std::fs::File::create(&gp_path).with_context(|| format!("creating {}", gp_path.display()))?;
    write_gnuplot_script(&mut gp, &csv_name, &png_name, &result)?;

    let mut worst_degraded = 0.0f64;
    for point in &result.points {
        for run in &point.runs {
            println!(
                "{} = {:<7} {:<12} mean rate {:.6} +- {:.6}  degraded {:.4}",
                axis.label(),
                point.axis_value,
                run.scheme.label(),
                run.mean_rate,
                run.std_error,
                run.degraded_fraction
            );
            worst_degraded = worst_degraded.max(run.degraded_fraction);
        }
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", gp_path.display());
    println!("elapsed = {:.2?}", start.elapsed());
    if worst_degraded > args.max_degraded {
        eprintln!(
            "solver degradation {worst_degraded:.4} exceeds the allowed fraction {:.4}",
            args.max_degraded
        );
        return Ok(EXIT_DEGRADED);
    }
    Ok(0)
}
