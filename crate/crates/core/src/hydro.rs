//! Hydrodynamic-limit verification: empirical pairings, the spectral heat
//! reference solution on the torus, binned density profiles and the
//! convergence experiment.
//!
//! The reference PDE solution is spectral and exact in time: the initial
//! profile is expanded in Fourier modes on a fine grid (trapezoid rule,
//! which is spectrally accurate for periodic integrands) and each mode is
//! damped by `exp(−D(2πk)²t)`. Comparison errors are then dominated by the
//! Monte Carlo and lattice effects under test, not by a PDE solver.

use crate::engine::{self, InitialState, Observable, ObservationPlan, ObservedValue, ReplicaExperiment};
use crate::lattice::Config;
use crate::measures::Profile;
use crate::models::ModelSpec;
use crate::{Error, Result};

/// Smooth periodic test functions paired against the empirical measure.
///
/// Presets: the constant `1` and `cos(2πmu)`, `sin(2πmu)` for `m ≤ 8` —
/// all C², so they are also admissible for the martingale diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TestFunction {
    One,
    Cos(u8),
    Sin(u8),
}

impl TestFunction {
    pub fn parse(id: &str) -> Result<Self> {
        let bad = || Error::InvalidPlan(format!("unknown test function '{id}'"));
        if id == "1" {
            return Ok(TestFunction::One);
        }
        let (name, m) = id.split_once(':').ok_or_else(bad)?;
        let m: u8 = m.trim().parse().map_err(|_| bad())?;
        if m == 0 || m > 8 {
            return Err(bad());
        }
        match name {
            "cos" => Ok(TestFunction::Cos(m)),
            "sin" => Ok(TestFunction::Sin(m)),
            _ => Err(bad()),
        }
    }

    pub fn id(&self) -> String {
        match self {
            TestFunction::One => "1".into(),
            TestFunction::Cos(m) => format!("cos:{m}"),
            TestFunction::Sin(m) => format!("sin:{m}"),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Cos(m) => (std::f64::consts::TAU * *m as f64 * u).cos(),
            TestFunction::Sin(m) => (std::f64::consts::TAU * *m as f64 * u).sin(),
        }
    }

    /// Grid values `G(x/N)`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        (0..n).map(|x| self.eval(x as f64 / n as f64)).collect()
    }
}

/// Empirical pairing `⟨π, G⟩ = (1/N) Σ_x η_x G(x/N)` against grid values.
pub fn pair(config: &Config, g_grid: &[f64]) -> f64 {
    debug_assert_eq!(config.len(), g_grid.len());
    let n = config.len();
    let mut acc = 0.0;
    for x in 0..n {
        acc += config.value(x) * g_grid[x];
    }
    acc / n as f64
}

/// Fourier-evolved heat solution `ρ(t, u) = Σ_k ρ̂_k(0) e^{−D(2πk)²t} e^{2πiku}`.
///
/// Coefficients are stored for `k = 0..=k_max` with the negative modes
/// implied by conjugate symmetry (the field is real).
#[derive(Debug, Clone)]
pub struct HeatSolution {
    pub d: f64,
    /// `(re, im)` of `ρ̂_k(0) = ∫ ρ₀(u) e^{−2πiku} du` for `k = 0..=k_max`.
    coef: Vec<(f64, f64)>,
}

/// Grid resolution for the Fourier transform of the initial profile.
const FOURIER_GRID: usize = 4096;

/// Expand the initial profile and attach the diffusion coefficient.
pub fn solve_heat(profile: &Profile, d: f64, k_max: usize) -> HeatSolution {
    let m = FOURIER_GRID;
    let samples: Vec<f64> = (0..m).map(|j| profile.eval(j as f64 / m as f64)).collect();
    let mut coef = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, &v) in samples.iter().enumerate() {
            let phase = -std::f64::consts::TAU * k as f64 * j as f64 / m as f64;
            re += v * phase.cos();
            im += v * phase.sin();
        }
        coef.push((re / m as f64, im / m as f64));
    }
    HeatSolution { d, coef }
}

impl HeatSolution {
    /// Conserved spatial mean `∫ρ(t, u) du = ρ̂₀`.
    pub fn mass(&self) -> f64 {
        self.coef[0].0
    }

    fn damping(&self, k: usize, t: f64) -> f64 {
        (-self.d * (std::f64::consts::TAU * k as f64).powi(2) * t).exp()
    }

    /// Point evaluation; real by conjugate symmetry.
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        let mut acc = self.coef[0].0;
        for (k, &(re, im)) in self.coef.iter().enumerate().skip(1) {
            let damp = self.damping(k, t);
            let phase = std::f64::consts::TAU * k as f64 * u;
            acc += 2.0 * damp * (re * phase.cos() - im * phase.sin());
        }
        acc
    }

    /// Exact `∫ G(u) ρ(t, u) du` for the test-function presets, straight
    /// from the Fourier coefficients.
    pub fn pairing_integral(&self, g: &TestFunction, t: f64) -> f64 {
        match g {
            TestFunction::One => self.mass(),
            TestFunction::Cos(m) => {
                let k = *m as usize;
                if k < self.coef.len() {
                    self.coef[k].0 * self.damping(k, t)
                } else {
                    0.0
                }
            }
            TestFunction::Sin(m) => {
                let k = *m as usize;
                if k < self.coef.len() {
                    -self.coef[k].1 * self.damping(k, t)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Block averages: bin `b` holds `(B/N)·Σ_{x in block b} η_x`, the local
/// density estimate. `B` must divide `N`.
pub fn binned_profile(config: &Config, bins: usize) -> Result<Vec<f64>> {
    let n = config.len();
    if bins == 0 || n % bins != 0 {
        return Err(Error::BinCount { sites: n, bins });
    }
    let block = n / bins;
    let mut out = vec![0.0; bins];
    for (b, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..block {
            acc += config.value(b * block + j);
        }
        *slot = acc / block as f64;
    }
    Ok(out)
}

/// Norms for profile-versus-solution comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    pub fn name(&self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }
}

/// Distance between a (replica-averaged) binned profile and the heat
/// solution sampled at the bin centers.
pub fn profile_error(mean_bins: &[f64], heat: &HeatSolution, t: f64, norm: Norm) -> f64 {
    let b = mean_bins.len();
    let diffs = mean_bins.iter().enumerate().map(|(i, &v)| {
        let center = (i as f64 + 0.5) / b as f64;
        v - heat.eval(t, center)
    });
    match norm {
        Norm::L1 => diffs.map(f64::abs).sum::<f64>() / b as f64,
        Norm::L2 => (diffs.map(|d| d * d).sum::<f64>() / b as f64).sqrt(),
    }
}

/// Sup over test functions of |mean pairing − ∫Gρ(t)|; the integral is
/// exact in Fourier space.
pub fn pairing_sup_error(
    mean_pairings: &[(TestFunction, f64)],
    heat: &HeatSolution,
    t: f64,
) -> f64 {
    mean_pairings
        .iter()
        .map(|(g, v)| (v - heat.pairing_integral(g, t)).abs())
        .fold(0.0, f64::max)
}

/// One row of the convergence table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub t: f64,
    pub norm: String,
    pub error: f64,
    pub se: f64,
}

/// Mean binned profile with jackknife standard errors and the reference
/// values at the bin centers; one per `(N, t)` cell.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ProfileCell {
    pub n: usize,
    pub t: f64,
    pub centers: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Replica-averaged hydrodynamic convergence experiment.
///
/// For each lattice size, `replicas` trajectories start from the
/// profile-associated measure and are observed at each macroscopic time;
/// the L1/L2 distance of the mean binned profile to the spectral solution
/// is reported with a leave-one-out jackknife standard error. Deterministic
/// for a fixed seed.
pub fn convergence_experiment(
    spec: &ModelSpec,
    profile: &Profile,
    rho_hat: f64,
    n_list: &[usize],
    t_list: &[f64],
    replicas: u64,
    seed: u64,
    bins: usize,
) -> Result<(Vec<ConvergenceRow>, Vec<ProfileCell>)> {
    let heat = solve_heat(profile, spec.diffusion_coefficient(), 32);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &n in n_list {
        let ims = crate::measures::InitialMeasureSpec::new(spec.clone(), profile.clone(), rho_hat)?;
        let plan = ObservationPlan::new(
            t_list.to_vec(),
            vec![Observable::BinnedProfile(bins)],
        )?;
        let experiment = ReplicaExperiment {
            spec: spec.clone(),
            sites: n,
            init: InitialState::ProfileMeasure(ims),
            plan,
            seed,
            replicas,
        };
        let outcomes = engine::run_replicas(&experiment);
        // per time index: replica × bin matrix
        let mut per_time: Vec<Vec<Vec<f64>>> = vec![Vec::new(); t_list.len()];
        for outcome in outcomes {
            let obs = outcome.result?;
            for (ti, ob) in obs.iter().enumerate() {
                if let ObservedValue::Profile(p) = &ob.values[0] {
                    per_time[ti].push(p.clone());
                }
            }
        }
        for (ti, &t) in t_list.iter().enumerate() {
            let reps = &per_time[ti];
            let r = reps.len();
            let mut mean = vec![0.0; bins];
            for rep in reps {
                for (b, v) in rep.iter().enumerate() {
                    mean[b] += v;
                }
            }
            for v in &mut mean {
                *v /= r as f64;
            }
            let mut se_bins = vec![0.0; bins];
            for rep in reps {
                for (b, v) in rep.iter().enumerate() {
                    se_bins[b] += (v - mean[b]).powi(2);
                }
            }
            for v in &mut se_bins {
                *v = (*v / (r as f64 * (r as f64 - 1.0))).sqrt();
            }
            for norm in [Norm::L1, Norm::L2] {
                let err = profile_error(&mean, &heat, t, norm);
                // leave-one-out jackknife on the error of the mean profile
                let mut jack = Vec::with_capacity(r);
                for leave in 0..r {
                    let mut m = vec![0.0; bins];
                    for (b, slot) in m.iter_mut().enumerate() {
                        *slot = (mean[b] * r as f64 - reps[leave][b]) / (r as f64 - 1.0);
                    }
                    jack.push(profile_error(&m, &heat, t, norm));
                }
                let jack_mean = jack.iter().sum::<f64>() / r as f64;
                let se = ((r as f64 - 1.0) / r as f64
                    * jack.iter().map(|j| (j - jack_mean).powi(2)).sum::<f64>())
                .sqrt();
                rows.push(ConvergenceRow {
                    n,
                    t,
                    norm: norm.name().into(),
                    error: err,
                    se,
                });
            }
            let centers: Vec<f64> = (0..bins).map(|b| (b as f64 + 0.5) / bins as f64).collect();
            let reference: Vec<f64> = centers.iter().map(|&c| heat.eval(t, c)).collect();
            cells.push(ProfileCell {
                n,
                t,
                centers,
                mean,
                se: se_bins,
                reference,
            });
        }
    }
    Ok((rows, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Config;

    #[test]
    fn pairing_arithmetic() {
        let g = TestFunction::Cos(1).grid(4);
        let cfg = Config::Particle(vec![1, 2, 3, 4]);
        assert!((pair(&cfg, &g) + 0.5).abs() < 1e-12);
        let ones = TestFunction::One.grid(4);
        assert!((pair(&cfg, &ones) - cfg.total_mass() / 4.0).abs() < 1e-12);
        let zero = Config::zeros_particle(4);
        assert_eq!(pair(&zero, &g), 0.0);
    }

    #[test]
    fn test_function_parsing() {
        assert_eq!(TestFunction::parse("1").unwrap(), TestFunction::One);
        assert_eq!(TestFunction::parse("cos:3").unwrap(), TestFunction::Cos(3));
        assert_eq!(TestFunction::parse("sin:8").unwrap(), TestFunction::Sin(8));
        assert!(TestFunction::parse("cos:0").is_err());
        assert!(TestFunction::parse("cos:9").is_err());
        assert!(TestFunction::parse("tan:1").is_err());
    }

    #[test]
    fn heat_constant_profile_is_fixed() {
        let heat = solve_heat(&Profile::Const(2.5), 0.5, 16);
        for &t in &[0.0, 0.01, 1.0] {
            for &u in &[0.0, 0.3, 0.77] {
                assert!((heat.eval(t, u) - 2.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn heat_single_mode_decay_is_exact() {
        // ρ₀ = 2 + sin(2πu), D = 1/2: ρ(t,u) = 2 + e^{−2π²t} sin(2πu)
        let profile = Profile::Sine {
            base: 2.0,
            amp: 1.0,
        };
        let heat = solve_heat(&profile, 0.5, 16);
        for &t in &[0.0, 0.02, 0.1, 0.5] {
            let damp = (-2.0 * std::f64::consts::PI.powi(2) * t).exp();
            for &u in &[0.0, 0.125, 0.4, 0.9] {
                let expect = 2.0 + damp * (std::f64::consts::TAU * u).sin();
                assert!(
                    (heat.eval(t, u) - expect).abs() < 1e-12,
                    "t={t} u={u}: {} vs {expect}",
                    heat.eval(t, u)
                );
            }
            // mass conserved
            assert!((heat.mass() - 2.0).abs() < 1e-12);
            // exact pairing integrals
            assert!(
                (heat.pairing_integral(&TestFunction::Sin(1), t) - 0.5 * damp).abs() < 1e-12
            );
            assert!(heat.pairing_integral(&TestFunction::Cos(1), t).abs() < 1e-12);
        }
    }

    #[test]
    fn binning_edges() {
        let cfg = Config::Energy(vec![1.0, 3.0, 5.0, 7.0]);
        // B = N returns the raw configuration
        assert_eq!(binned_profile(&cfg, 4).unwrap(), vec![1.0, 3.0, 5.0, 7.0]);
        // B = 1 returns the mean
        assert_eq!(binned_profile(&cfg, 1).unwrap(), vec![4.0]);
        let flat = Config::Energy(vec![2.0; 8]);
        assert_eq!(binned_profile(&flat, 2).unwrap(), vec![2.0, 2.0]);
        assert!(binned_profile(&cfg, 3).is_err());
    }

    #[test]
    fn profile_error_of_identical_inputs_is_zero() {
        let profile = Profile::Sine {
            base: 2.0,
            amp: 1.0,
        };
        let heat = solve_heat(&profile, 0.5, 16);
        let t = 0.03;
        let bins: Vec<f64> = (0..16)
            .map(|b| heat.eval(t, (b as f64 + 0.5) / 16.0))
            .collect();
        assert!(profile_error(&bins, &heat, t, Norm::L1) < 1e-13);
        assert!(profile_error(&bins, &heat, t, Norm::L2) < 1e-13);
        let pairings = vec![(TestFunction::Sin(1), heat.pairing_integral(&TestFunction::Sin(1), t))];
        assert!(pairing_sup_error(&pairings, &heat, t) < 1e-13);
    }
}
