//! Built-in verification suite: bounded, deterministic spot checks of the
//! library's numerical contracts. Each check prints one line; the command
//! exits nonzero when any check fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ris_secrecy::beamforming::{
    exhaustive_reflect_oracle, gap_spectrum, normalized_lift, optimize_reflect,
    relaxed_ratio_problem, TighteningParams,
};
use ris_secrecy::channel::{ChannelSet, FadingParams, LinkBudget, LinkDistances, RateFactors};
use ris_secrecy::cmat::{CMat, C64};
use ris_secrecy::harness::{
    benchmark_scene, sweep, write_sweep_csv, ExperimentConfig, Scheme, SweepAxis,
};
use ris_secrecy::placement::{brute_force_placement, outer_optimize, PlacementGrid};
use ris_secrecy::sdp::{solve_sdp, HermitianMatrix, SdpProblem, SdpStatus};

type Check = fn() -> Result<String, String>;

pub fn run() -> i32 {
    let checks: [(&str, Check); 6] = [
        ("spectral-structure", check_spectral),
        ("lift-equivalence", check_lift),
        ("sdp-certificates", check_certificates),
        ("pipeline-vs-oracle", check_pipeline),
        ("sweep-determinism", check_determinism),
        ("placement-oracle", check_placement),
    ];
    let mut failures = 0usize;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("ok   {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failures == 0 {
        println!("verification passed ({} checks)", checks.len());
        0
    } else {
        eprintln!("verification failed ({failures} of {} checks)", checks.len());
        1
    }
}

/// Distances of the benchmark placement optimum; the verification scale.
fn reference_factors() -> (RateFactors, f64) {
    let budget = LinkBudget::reference();
    let d = LinkDistances {
        d_si: 1.4,
        d_id: 3.8,
        d_ie: 4.2152,
    };
    (RateFactors::new(&d, &budget), budget.noise_power)
}

/// The channel-difference matrix of every random draw must show the
/// structure of a difference of two rank-one terms: rank at most two,
/// trace identity, eigenvalues inside the sum bounds and matching the
/// closed form, a positive top eigenvalue, and no trace/eigenvalue
/// confusion in the sign-critical regime.
fn check_spectral() -> Result<String, String> {
    let fading = FadingParams::reference();
    let budget = LinkBudget::reference();
    let triples = [(1.4, 3.8, 4.2), (2.0, 2.5, 3.0), (1.0, 5.0, 1.2)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5645524946590001);
    let mut draws = 0usize;
    for n in [2usize, 4, 8, 16] {
        for k in 0..200 {
            let (d_si, d_id, d_ie) = triples[k % triples.len()];
            let a = RateFactors::new(&LinkDistances { d_si, d_id, d_ie }, &budget)
                .eavesdropper_weight();
            let ch = ChannelSet::draw(n, &fading, &mut rng);
            let rep = gap_spectrum(&ch, a);
            let scale = 1.0 + rep.frob_norm;
            if rep.negative_semidefinite {
                return Err(format!("n={n} draw {k}: no positive direction found"));
            }
            if !rep.weyl_ok {
                return Err(format!("n={n} draw {k}: eigenvalue outside the sum bounds"));
            }
            if rep.trace_gap > 1e-9 * scale {
                return Err(format!("n={n} draw {k}: trace gap {}", rep.trace_gap));
            }
            if rep.rank_two_residual > 1e-10 * scale {
                return Err(format!(
                    "n={n} draw {k}: rank-two residual {}",
                    rep.rank_two_residual
                ));
            }
            if rep.closed_form_gap > 1e-8 * scale {
                return Err(format!(
                    "n={n} draw {k}: closed-form gap {}",
                    rep.closed_form_gap
                ));
            }
            if rep.shifted_spectrum_margin.is_finite()
                && rep.shifted_spectrum_margin <= 1e-9 * scale
            {
                return Err(format!(
                    "n={n} draw {k}: trace nearly an eigenvalue in the sign-critical regime"
                ));
            }
            draws += 1;
        }
    }
    Ok(format!("{draws} draws over n in {{2,4,8,16}}"))
}

fn random_cmat(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Scale-normalizing a feasible point of the fractional form must
/// preserve the objective value exactly and land on the equality row.
fn check_lift() -> Result<String, String> {
    let (factors, nv) = reference_factors();
    let fading = FadingParams::reference();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5645524946590002);
    let mut count = 0usize;
    for n in [2usize, 4, 8] {
        for k in 0..8 {
            let ch = ChannelSet::draw(n, &fading, &mut rng);
            let g = random_cmat(n, &mut rng);
            let raw = g.matmul(&g.adjoint());
            let max_diag = (0..n).fold(0.0f64, |m, i| m.max(raw[(i, i)].re));
            let psi = HermitianMatrix::new(raw.scale(1.0 / max_diag));
            let (phi, t) = normalized_lift(&psi, &ch, &factors, nv);
            let fractional = (nv * factors.f1 + factors.f3 * psi.quad_form(&ch.h_sie))
                / (nv * factors.f1 + factors.f2 * psi.quad_form(&ch.h_sid));
            let problem = relaxed_ratio_problem(&ch, &factors, nv, None)
                .map_err(|e| format!("n={n} point {k}: {e}"))?;
            let lifted = problem.objective(&phi, t);
            if (lifted - fractional).abs() > 1e-10 * fractional {
                return Err(format!(
                    "n={n} point {k}: lifted {lifted} vs fractional {fractional}"
                ));
            }
            let row = problem.a0 * t + problem.a_mat.mat().hs_inner_re(phi.mat());
            if (row - 1.0).abs() > 1e-10 {
                return Err(format!("n={n} point {k}: equality row {row}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} lifted points at 1e-10 relative"))
}

/// A strictly feasible instance with full-rank data: an interior pair is
/// drawn first and the equality row rescaled through it, mirroring how
/// the random-instance certificate contract is stated.
fn slater_instance(n: usize, rng: &mut ChaCha8Rng) -> SdpProblem {
    let g = random_cmat(n, rng);
    let c_mat = g.add_scaled(&g.adjoint(), 1.0).scale(0.5);
    let c0 = rng.gen_range(-1.0..1.0);
    let g = random_cmat(n, rng);
    let mut a_mat = g.matmul(&g.adjoint()).scale(1.0 / n as f64);
    for i in 0..n {
        a_mat[(i, i)] += 0.2;
    }
    let mut a0 = rng.gen_range(0.1..1.0);
    let g = random_cmat(n, rng);
    let phi0 = g.matmul(&g.adjoint()).scale(1.0 / n as f64);
    let t0 = (0..n).fold(0.0f64, |m, i| m.max(phi0[(i, i)].re)) * 1.5 + 0.1;
    let row = a0 * t0 + a_mat.hs_inner_re(&phi0);
    a_mat = a_mat.scale(1.0 / row);
    a0 /= row;
    SdpProblem::new(
        c0,
        HermitianMatrix::new(c_mat),
        a0,
        HermitianMatrix::new(a_mat),
        None,
    )
    .expect("generated instance is valid")
}

/// Random feasible instances must come back optimal with a full
/// certificate at the requested tolerance.
fn check_certificates() -> Result<String, String> {
    let tol = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5645524946590003);
    let mut steps = 0usize;
    for k in 0..15 {
        let n = 2 + k % 7;
        let problem = slater_instance(n, &mut rng);
        let sol = solve_sdp(&problem, tol);
        if sol.status != SdpStatus::Optimal {
            return Err(format!("instance {k} (n={n}): status {:?}", sol.status));
        }
        let gap_limit = tol * (1.0 + sol.objective_value.abs());
        if sol.kkt.primal > tol || sol.kkt.dual > tol || sol.kkt.gap.abs() > gap_limit {
            return Err(format!(
                "instance {k} (n={n}): residuals {:.3e}/{:.3e}/{:.3e}",
                sol.kkt.primal, sol.kkt.dual, sol.kkt.gap
            ));
        }
        steps += sol.newton_steps;
    }
    Ok(format!("15 instances certified at 1e-6, {steps} Newton steps"))
}

/// The relaxation-tightening-recovery pipeline must reach at least 98% of
/// the exhaustive per-unit grid at desk-scale unit counts.
fn check_pipeline() -> Result<String, String> {
    let (factors, nv) = reference_factors();
    let fading = FadingParams::reference();
    let params = TighteningParams::reference();
    for (n, seed) in [(1usize, 5u64), (1, 6), (2, 7), (2, 8), (3, 9)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = ChannelSet::draw(n, &fading, &mut rng);
        let out = optimize_reflect(&ch, &factors, nv, &params)
            .map_err(|e| format!("n={n} seed {seed}: {e}"))?;
        let (_, f_star) = exhaustive_reflect_oracle(&ch, &factors, nv, 32, 5);
        if out.ratio < 0.98 * f_star {
            return Err(format!(
                "n={n} seed {seed}: pipeline {} vs oracle {f_star}",
                out.ratio
            ));
        }
    }
    Ok("5 instances at n in {1,2,3} within 2% of the grid".to_string())
}

/// Two sweeps from the same configuration must serialize byte-for-byte
/// identically.
fn check_determinism() -> Result<String, String> {
    let mut cfg = ExperimentConfig::reference(benchmark_scene());
    cfg.n_units = 2;
    cfg.trials = 2;
    cfg.candidate_step = 0.5;
    let schemes = [Scheme::Joint, Scheme::NearDest];
    let values = [10.0];
    let mut emitted: Vec<Vec<u8>> = Vec::new();
    for _ in 0..2 {
        let result =
            sweep(&cfg, SweepAxis::TxPowerDbm, &values, &schemes).map_err(|e| e.to_string())?;
        let mut bytes = Vec::new();
        write_sweep_csv(&mut bytes, &result).map_err(|e| e.to_string())?;
        emitted.push(bytes);
    }
    if emitted[0] != emitted[1] {
        return Err("two identical sweeps serialized differently".to_string());
    }
    Ok(format!("{} identical CSV bytes", emitted[0].len()))
}

/// The two-tier search must stay within 3% of an exhaustive position
/// grid on the benchmark scene.
fn check_placement() -> Result<String, String> {
    let scene = benchmark_scene();
    let budget = LinkBudget::reference();
    let outer = outer_optimize(&scene, &budget, &PlacementGrid::reference());
    if !outer.feasible {
        return Err("two-tier search found no feasible mounting point".to_string());
    }
    let brute = brute_force_placement(&scene, &budget, 0.5);
    if !brute.feasible {
        return Err("exhaustive search found no feasible mounting point".to_string());
    }
    let ratio = outer.g_opt / brute.g_opt;
    if ratio > 1.03 {
        return Err(format!("two-tier vs exhaustive objective ratio {ratio}"));
    }
    Ok(format!("objective ratio {ratio:.6} vs exhaustive grid"))
}
