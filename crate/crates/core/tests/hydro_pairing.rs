//! Cross-module checks tying replica runs to the spectral reference:
//! first-mode pairings, CLT scaling of replica averages, and bit-exact
//! reproducibility of the convergence tables.

use kmp_models::engine::{
    run_replicas, InitialState, Observable, ObservationPlan, ObservedValue, ReplicaExperiment,
};
use kmp_models::hydro::{convergence_experiment, solve_heat, TestFunction};
use kmp_models::measures::{InitialMeasureSpec, Profile};
use kmp_models::models::ModelSpec;

fn sine_profile() -> Profile {
    Profile::Sine { base: 2.0, amp: 1.0 }
}

fn pairing_stats(
    spec: &ModelSpec,
    g: TestFunction,
    sites: usize,
    t: f64,
    replicas: u64,
    seed: u64,
) -> (f64, f64) {
    let ims = InitialMeasureSpec::new(spec.clone(), sine_profile(), 4.0).unwrap();
    let exp = ReplicaExperiment {
        spec: spec.clone(),
        sites,
        init: InitialState::ProfileMeasure(ims),
        plan: ObservationPlan::new(vec![t], vec![Observable::Pairing(g)]).unwrap(),
        seed,
        replicas,
    };
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for outcome in run_replicas(&exp) {
        let obs = outcome.result.unwrap();
        let ObservedValue::Scalar(v) = obs[0].values[0] else {
            unreachable!()
        };
        sum += v;
        sum_sq += v * v;
    }
    let r = replicas as f64;
    let mean = sum / r;
    let var = (sum_sq / r - mean * mean).max(0.0) * r / (r - 1.0);
    (mean, (var / r).sqrt())
}

#[test]
fn first_mode_pairings_match_spectral_prediction() {
    // N = 128, R = 500: ⟨π_t, G⟩ within 4 SE of the damped Fourier mode for
    // the sine mode (0.5·e^{−D(2π)²t}) and the absent cosine mode (0)
    let t = 0.02;
    for spec in [
        ModelSpec::gkmp(0.5).unwrap(),
        ModelSpec::dkmp(),
        ModelSpec::harm(1.0).unwrap(),
    ] {
        let heat = solve_heat(&sine_profile(), spec.diffusion_coefficient(), 16);
        for g in [TestFunction::Sin(1), TestFunction::Cos(1)] {
            let target = heat.pairing_integral(&g, t);
            let (mean, se) = pairing_stats(&spec, g, 128, t, 500, 42);
            assert!(
                (mean - target).abs() < 4.0 * se,
                "{} {}: {mean} vs {target} (se {se})",
                spec.kind.name(),
                g.id()
            );
        }
    }
}

#[test]
fn replica_standard_error_follows_clt_scaling() {
    // quadrupling R should halve the SE of the pairing estimate
    let spec = ModelSpec::dkmp();
    let (_, se_small) = pairing_stats(&spec, TestFunction::Sin(1), 32, 0.01, 200, 9);
    let (_, se_large) = pairing_stats(&spec, TestFunction::Sin(1), 32, 0.01, 800, 9);
    let ratio = se_small / se_large;
    assert!(
        ratio > 1.4 && ratio < 2.9,
        "SE ratio {ratio} far from the CLT factor 2"
    );
}

#[test]
fn stationary_constant_profile_error_sits_at_the_noise_floor() {
    // ρ₀ ≡ ρ̂: the run is stationary and the L1 error against the constant
    // solution is pure Monte Carlo noise (≈ 0.035 expected at these sizes)
    let spec = ModelSpec::dkmp();
    let profile = Profile::Const(2.0);
    let (rows, _) =
        convergence_experiment(&spec, &profile, 2.0, &[64], &[0.03], 400, 5, 8).unwrap();
    let l1 = rows.iter().find(|r| r.norm == "l1").unwrap();
    assert!(
        l1.error < 0.08,
        "stationary error {} above the noise budget",
        l1.error
    );
}

#[test]
fn convergence_tables_are_bit_identical_under_a_fixed_seed() {
    let spec = ModelSpec::dkmp();
    let run = || {
        convergence_experiment(&spec, &sine_profile(), 4.0, &[32, 64], &[0.02], 20, 77, 8)
            .unwrap()
    };
    let (rows_a, cells_a) = run();
    let (rows_b, cells_b) = run();
    assert_eq!(rows_a.len(), rows_b.len());
    for (a, b) in rows_a.iter().zip(rows_b.iter()) {
        assert_eq!(a.error.to_bits(), b.error.to_bits());
        assert_eq!(a.se.to_bits(), b.se.to_bits());
    }
    for (a, b) in cells_a.iter().zip(cells_b.iter()) {
        assert_eq!(a.mean, b.mean);
    }
}
