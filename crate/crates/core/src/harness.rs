//! Experiment harness: scene files, the benchmark scene, candidate
//! enumeration, benchmark location schemes, seeded Monte-Carlo trials over
//! channel draws, parameter sweeps, and CSV/gnuplot emission.
//!
//! Reproducibility contract: trial `t` of any run draws its channels from
//! a fresh generator seeded with `base_seed + t`, so every scheme and every
//! sweep point sees the same fading realizations and scheme comparisons
//! are paired. The random-location scheme draws from a separate, salted
//! stream so it cannot perturb the channel sequence.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::beamforming::{optimize_reflect, TighteningParams};
use crate::channel::{
    dbm_to_watts, f_factors, ChannelError, ChannelSet, FadingParams, LinkBudget, RateFactors,
};
use crate::geometry::{
    circle_intersection, corner_distances, distance, los_clear, plane_normals, Bounds,
    GeometryError, Obstacle, Scene, Vec3,
};
use crate::placement::{outer_optimize, PlacementGrid, PlacementResult};
use crate::sdp::SdpError;

/// Environment variable naming the rayon worker count.
pub const WORKERS_ENV: &str = "RIS_SECRECY_WORKERS";

/// Builds the global rayon pool from [`WORKERS_ENV`] when the variable is
/// set to a positive integer; returns the applied count.
pub fn configure_workers_from_env() -> Option<usize> {
    let n: usize = std::env::var(WORKERS_ENV).ok()?.parse().ok()?;
    if n == 0 {
        return None;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .ok()?;
    Some(n)
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("scene file: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Solver(#[from] SdpError),
    #[error("no feasible mounting point in the search region")]
    InfeasiblePlacement,
    #[error("scheme '{0}' selects no locations")]
    EmptyScheme(&'static str),
    #[error("sweep axis '{axis}' rejects value {value}: {reason}")]
    AxisValue {
        axis: &'static str,
        value: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomConfig {
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodesConfig {
    source: Vec3,
    destination: Vec3,
    eavesdropper: Vec3,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FarFieldConfig {
    radius: f64,
}

/// On-disk scene description; see `scenes/default.toml` for the layout.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    room: RoomConfig,
    nodes: NodesConfig,
    obstacle: Obstacle,
    ris_bounds: Bounds,
    far_field: FarFieldConfig,
}

impl SceneConfig {
    pub fn into_scene(self) -> Result<Scene, GeometryError> {
        Scene::new(
            Vec3::new(self.room.x, self.room.y, self.room.z),
            self.nodes.source,
            self.nodes.destination,
            self.nodes.eavesdropper,
            self.obstacle,
            self.ris_bounds,
            self.far_field.radius,
        )
    }
}

/// Parses a scene from TOML text.
pub fn parse_scene(text: &str) -> Result<Scene, HarnessError> {
    let config: SceneConfig = toml::from_str(text)?;
    Ok(config.into_scene()?)
}

/// Loads a scene from a TOML file.
pub fn load_scene(path: &Path) -> Result<Scene, HarnessError> {
    parse_scene(&std::fs::read_to_string(path)?)
}

/// The built-in benchmark scene: a 10 x 10 x 3 m room, a wall segment
/// splitting the far half, the source on one side and the destination and
/// eavesdropper on the other, with the whole room available for mounting.
pub fn benchmark_scene() -> Scene {
    Scene::new(
        Vec3::new(10.0, 10.0, 3.0),
        Vec3::new(4.0, 6.0, 2.0),
        Vec3::new(8.0, 7.0, 1.5),
        Vec3::new(8.5, 7.0, 1.5),
        Obstacle {
            lower_left: Vec3::new(5.0, 5.0, 0.0),
            upper_left: Vec3::new(5.0, 5.0, 3.0),
            lower_right: Vec3::new(5.0, 10.0, 0.0),
            upper_right: Vec3::new(5.0, 10.0, 3.0),
        },
        Bounds {
            x: (0.0, 10.0),
            y: (0.0, 10.0),
            z: (0.0, 3.0),
        },
        0.5,
    )
    .expect("benchmark scene is valid")
}

/// Everything one experiment needs beyond the command itself.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scene: Scene,
    pub budget: LinkBudget,
    pub fading: FadingParams,
    pub n_units: usize,
    pub grid: PlacementGrid,
    pub tighten: TighteningParams,
    pub trials: usize,
    /// Step of the candidate lattice the location schemes select from.
    pub candidate_step: f64,
    pub base_seed: u64,
}

impl ExperimentConfig {
    pub fn reference(scene: Scene) -> ExperimentConfig {
        let fading = FadingParams::reference();
        let base_seed = fading.seed;
        ExperimentConfig {
            scene,
            budget: LinkBudget::reference(),
            fading,
            n_units: 16,
            grid: PlacementGrid::reference(),
            tighten: TighteningParams::reference(),
            trials: 200,
            candidate_step: 0.1,
            base_seed,
        }
    }
}

/// RIS location selection schemes compared in the experiments.
#[derive(Clone, Copy, Debug, Eq, Hash, PartialEq)]
pub enum Scheme {
    /// The two-tier placement optimum with optimized beamforming.
    Joint,
    /// The candidate locations closest to the source.
    NearSource,
    /// The candidate locations closest to the destination.
    NearDest,
    /// Uniformly drawn candidate locations.
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Joint,
        Scheme::NearSource,
        Scheme::NearDest,
        Scheme::Random,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Joint => "joint",
            Scheme::NearSource => "near-source",
            Scheme::NearDest => "near-dest",
            Scheme::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.label() == s)
    }
}

/// A feasible mounting point with its grid distances.
#[derive(Clone, Copy, Debug)]
pub struct Candidate {
    pub p: Vec3,
    pub d_si: f64,
    pub d_id: f64,
}

/// Enumerates every feasible mounting point of the distance-pair lattice
/// at the given step: heights from the floor up, the same anchored
/// distance grids and feasibility filters as the placement search.
pub fn candidate_locations(scene: &Scene, step: f64) -> Result<Vec<Candidate>, HarnessError> {
    assert!(step > 0.0);
    let normals = plane_normals(scene)?;
    let (d_si_max, d_id_max) = corner_distances(scene);
    let d_sd = scene.d_sd();
    let d_f = scene.far_field;
    let eps = 1e-9;
    let mut out = Vec::new();
    let n_slabs = (scene.bounds.z.1 / step + eps).floor() as u64;
    for j in 0..=n_slabs {
        let z = j as f64 * step;
        if z < scene.bounds.z.0 - eps {
            continue;
        }
        let mut k = 0u64;
        loop {
            let d_si = d_f + k as f64 * step;
            if d_si > d_si_max + eps {
                break;
            }
            let lower = (d_sd - d_si).abs().max(d_f);
            let m_start = (((lower - d_f) / step) - eps).ceil().max(0.0) as u64;
            for m in m_start.. {
                let d_id = d_f + m as f64 * step;
                if d_id > d_id_max + eps {
                    break;
                }
                for p in circle_intersection(z, d_si, d_id, scene) {
                    if p.x < scene.bounds.x.0
                        || p.x > scene.bounds.x.1
                        || p.y < scene.bounds.y.0
                        || p.y > scene.bounds.y.1
                    {
                        continue;
                    }
                    if distance(p, scene.eavesdropper) < d_f {
                        continue;
                    }
                    let (src_clear, dst_clear) = los_clear(p, scene, &normals);
                    if !src_clear || !dst_clear {
                        continue;
                    }
                    out.push(Candidate { p, d_si, d_id });
                }
            }
            k += 1;
        }
    }
    Ok(out)
}

/// Fraction of the candidate set each proximity scheme keeps.
const SELECT_FRACTION: f64 = 1e-3;
/// Locations drawn by the random scheme.
const RANDOM_LOCATIONS: usize = 10;
/// Salt separating the location-draw stream from the channel streams.
const RANDOM_STREAM_SALT: u64 = 0x9E3779B97F4A7C15;

/// Resolves a scheme to its mounting points. `p_opt` is the placement
/// optimum used by [`Scheme::Joint`]; proximity schemes keep the
/// `ceil(0.1%)` candidates with the smallest relevant distance; the random
/// scheme draws without replacement from a stream salted away from the
/// channel seeds.
pub fn scheme_locations(
    scheme: Scheme,
    candidates: &[Candidate],
    p_opt: Vec3,
    base_seed: u64,
) -> Result<Vec<Vec3>, HarnessError> {
    if scheme == Scheme::Joint {
        return Ok(vec![p_opt]);
    }
    if candidates.is_empty() {
        return Err(HarnessError::EmptyScheme(scheme.label()));
    }
    let n_keep = ((candidates.len() as f64 * SELECT_FRACTION).ceil() as usize)
        .max(1)
        .min(candidates.len());
    match scheme {
        Scheme::Joint => unreachable!(),
        Scheme::NearSource | Scheme::NearDest => {
            let key = |c: &Candidate| match scheme {
                Scheme::NearSource => c.d_si,
                _ => c.d_id,
            };
            let mut sorted: Vec<&Candidate> = candidates.iter().collect();
            sorted.sort_by(|a, b| key(a).total_cmp(&key(b)));
            Ok(sorted[..n_keep].iter().map(|c| c.p).collect())
        }
        Scheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(RANDOM_STREAM_SALT));
            let amount = RANDOM_LOCATIONS.min(candidates.len());
            let picks = rand::seq::index::sample(&mut rng, candidates.len(), amount);
            Ok(picks.into_iter().map(|i| candidates[i].p).collect())
        }
    }
}

/// Monte-Carlo outcome of one scheme at fixed settings.
#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub locations: Vec<Vec3>,
    /// Per-trial secrecy rate averaged over the scheme's locations, one
    /// entry per trial in seed order.
    pub trial_means: Vec<f64>,
    pub mean_rate: f64,
    pub std_error: f64,
    /// Fraction of (trial, location) pipelines whose tightening loop did
    /// not reach the rank target.
    pub degraded_fraction: f64,
    pub base_seed: u64,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs the trial loop for one scheme. Trial `t` seeds its channel
/// generator with `base_seed + t`, draws one channel set, and averages the
/// optimized secrecy rate over the scheme's locations.
pub fn run_scheme(
    cfg: &ExperimentConfig,
    scheme: Scheme,
    locations: &[Vec3],
) -> Result<SchemeRun, HarnessError> {
    assert!(cfg.trials >= 1, "at least one trial");
    if locations.is_empty() {
        return Err(HarnessError::EmptyScheme(scheme.label()));
    }
    let factor_list: Vec<RateFactors> = locations
        .iter()
        .map(|&p| f_factors(p, &cfg.budget, &cfg.scene))
        .collect::<Result<_, _>>()?;
    let noise = cfg.budget.noise_power;
    let per_trial: Result<Vec<(f64, usize)>, SdpError> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.base_seed.wrapping_add(t as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = ChannelSet::draw(cfg.n_units, &cfg.fading, &mut rng);
            let mut sum = 0.0;
            let mut degraded = 0usize;
            for factors in &factor_list {
                let out = optimize_reflect(&ch, factors, noise, &cfg.tighten)?;
                sum += out.rate;
                degraded += out.degraded as usize;
            }
            Ok((sum / factor_list.len() as f64, degraded))
        })
        .collect();
    let per_trial = per_trial?;
    let trial_means: Vec<f64> = per_trial.iter().map(|x| x.0).collect();
    let degraded: usize = per_trial.iter().map(|x| x.1).sum();
    let (mean_rate, std_error) = mean_and_se(&trial_means);
    Ok(SchemeRun {
        scheme,
        locations: locations.to_vec(),
        trial_means,
        mean_rate,
        std_error,
        degraded_fraction: degraded as f64 / (cfg.trials * locations.len()) as f64,
        base_seed: cfg.base_seed,
    })
}

/// Mean and standard error of the per-trial difference `a - b`; the right
/// uncertainty for comparing schemes run on common channel draws.
pub fn paired_difference(a: &SchemeRun, b: &SchemeRun) -> (f64, f64) {
    assert_eq!(a.trial_means.len(), b.trial_means.len());
    let diffs: Vec<f64> = a
        .trial_means
        .iter()
        .zip(&b.trial_means)
        .map(|(x, y)| x - y)
        .collect();
    mean_and_se(&diffs)
}

/// Swept experiment parameter.
#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum SweepAxis {
    /// Transmit power in dBm.
    TxPowerDbm,
    /// Reflecting unit count.
    Units,
    /// Upper x limit of the mounting bounds.
    XMax,
    /// Upper y limit of the mounting bounds.
    YMax,
    /// Upper z limit of the mounting bounds.
    ZMax,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::TxPowerDbm,
        SweepAxis::Units,
        SweepAxis::XMax,
        SweepAxis::YMax,
        SweepAxis::ZMax,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::TxPowerDbm => "ps",
            SweepAxis::Units => "n",
            SweepAxis::XMax => "x-max",
            SweepAxis::YMax => "y-max",
            SweepAxis::ZMax => "z-max",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        SweepAxis::ALL.into_iter().find(|x| x.label() == s)
    }

    pub fn axis_title(self) -> &'static str {
        match self {
            SweepAxis::TxPowerDbm => "transmit power (dBm)",
            SweepAxis::Units => "reflecting units",
            SweepAxis::XMax => "mounting x limit (m)",
            SweepAxis::YMax => "mounting y limit (m)",
            SweepAxis::ZMax => "mounting z limit (m)",
        }
    }
}

/// Applies one axis value to a configuration, rebuilding the scene when
/// the axis narrows the mounting bounds.
pub fn apply_axis(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<ExperimentConfig, HarnessError> {
    let mut out = cfg.clone();
    match axis {
        SweepAxis::TxPowerDbm => {
            out.budget.tx_power = dbm_to_watts(value);
        }
        SweepAxis::Units => {
            let n = value.round();
            if n < 1.0 || (n - value).abs() > 1e-9 {
                return Err(HarnessError::AxisValue {
                    axis: axis.label(),
                    value,
                    reason: "unit count must be a positive integer",
                });
            }
            out.n_units = n as usize;
        }
        SweepAxis::XMax | SweepAxis::YMax | SweepAxis::ZMax => {
            let mut bounds = cfg.scene.bounds;
            let slot = match axis {
                SweepAxis::XMax => &mut bounds.x,
                SweepAxis::YMax => &mut bounds.y,
                _ => &mut bounds.z,
            };
            if value <= slot.0 {
                return Err(HarnessError::AxisValue {
                    axis: axis.label(),
                    value,
                    reason: "upper bound must exceed the lower bound",
                });
            }
            slot.1 = value;
            out.scene = Scene::new(
                cfg.scene.room,
                cfg.scene.source,
                cfg.scene.destination,
                cfg.scene.eavesdropper,
                cfg.scene.obstacle,
                bounds,
                cfg.scene.far_field,
            )?;
        }
    }
    Ok(out)
}

/// One sweep value: the re-run placement and every scheme's trials.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub placement: PlacementResult,
    pub runs: Vec<SchemeRun>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// The run of one scheme at one point, if present.
    pub fn run(&self, axis_value: f64, scheme: Scheme) -> Option<&SchemeRun> {
        self.points
            .iter()
            .find(|p| p.axis_value == axis_value)?
            .runs
            .iter()
            .find(|r| r.scheme == scheme)
    }
}

/// Runs placement, candidate enumeration, and every requested scheme at
/// each axis value.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    schemes: &[Scheme],
) -> Result<SweepResult, HarnessError> {
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let local = apply_axis(cfg, axis, value)?;
        let placement = outer_optimize(&local.scene, &local.budget, &local.grid);
        if !placement.feasible {
            return Err(HarnessError::InfeasiblePlacement);
        }
        let candidates = candidate_locations(&local.scene, local.candidate_step)?;
        let mut runs = Vec::with_capacity(schemes.len());
        for &scheme in schemes {
            let locations =
                scheme_locations(scheme, &candidates, placement.p_opt, local.base_seed)?;
            log::info!(
                "axis {}={value}: scheme {} over {} locations",
                axis.label(),
                scheme.label(),
                locations.len()
            );
            runs.push(run_scheme(&local, scheme, &locations)?);
        }
        points.push(SweepPoint {
            axis_value: value,
            placement,
            runs,
        });
    }
    Ok(SweepResult { axis, points })
}

/// Writes a sweep as RFC-4180 CSV: header
/// `axis,scheme,mean_rate,stderr,n_trials,seed`, one row per
/// (value, scheme).
pub fn write_sweep_csv(out: &mut dyn Write, sweep: &SweepResult) -> std::io::Result<()> {
    write!(out, "axis,scheme,mean_rate,stderr,n_trials,seed\r\n")?;
    for point in &sweep.points {
        for run in &point.runs {
            write!(
                out,
                "{},{},{},{},{},{}\r\n",
                point.axis_value,
                run.scheme.label(),
                run.mean_rate,
                run.std_error,
                run.trial_means.len(),
                run.base_seed
            )?;
        }
    }
    Ok(())
}

/// Writes a gnuplot script rendering the CSV written by
/// [`write_sweep_csv`] to `<stem>.png` with one error-bar line per scheme.
pub fn write_gnuplot_script(
    out: &mut dyn Write,
    csv_name: &str,
    png_name: &str,
    sweep: &SweepResult,
) -> std::io::Result<()> {
    writeln!(out, "set datafile separator ','")?;
    writeln!(out, "set term pngcairo size 900,600")?;
    writeln!(out, "set output '{png_name}'")?;
    writeln!(out, "set xlabel '{}'", sweep.axis.axis_title())?;
    writeln!(out, "set ylabel 'mean secrecy rate (bit/s/Hz)'")?;
    writeln!(out, "set key top left")?;
    let schemes: Vec<Scheme> = sweep
        .points
        .first()
        .map(|p| p.runs.iter().map(|r| r.scheme).collect())
        .unwrap_or_default();
    writeln!(out, "plot \\")?;
    for (i, scheme) in schemes.iter().enumerate() {
        let sep = if i + 1 == schemes.len() { "" } else { ", \\" };
        writeln!(
            out,
            "  '{csv_name}' skip 1 using (strcol(2) eq '{label}' ? $1 : NaN):3:4 \
             with yerrorlines title '{label}'{sep}",
            label = scheme.label()
        )?;
    }
    Ok(())
}
