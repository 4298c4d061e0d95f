//! Browser bindings: three interactive views on the gradient chains.
//!
//! * [`DemoSim`] — a live trajectory of one model under diffusive scaling,
//!   with its binned empirical profile and the exact heat-equation curve it
//!   should track;
//! * [`attract_scan`] — the attractiveness rate-criterion scan, returning a
//!   JSON summary;
//! * [`CouplingDemo`] — two gKMP copies driven by the same clocks and Beta
//!   draws, exhibiting pathwise order preservation.
//!
//! Everything is deterministic in the seed, so a page reload replays the
//! same trajectory.

use wasm_bindgen::prelude::*;

use kmp_models::analysis::scan_criterion;
use kmp_models::engine::{run_diffusive, ObservationPlan, SimState};
use kmp_models::hydro::{binned_profile, solve_heat, HeatSolution};
use kmp_models::lattice::{Config, Torus};
use kmp_models::measures::{sample_dominated_pair, InitialMeasureSpec, Profile};
use kmp_models::models::{apply_gkmp_exchange, ModelKind, ModelSpec};
use kmp_models::numerics::{sample_beta, RngStream};

fn js_err(e: kmp_models::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// A single evolving trajectory plus its spectral reference solution.
#[wasm_bindgen]
pub struct DemoSim {
    spec: ModelSpec,
    state: SimState,
    heat: HeatSolution,
    profile: Profile,
    macro_time: f64,
}

impl DemoSim {
    /// Plain-Rust constructor (also what the host-side tests drive).
    pub fn try_new(
        model: &str,
        spin: f64,
        sites: usize,
        base: f64,
        amp: f64,
        seed: u32,
    ) -> Result<DemoSim, kmp_models::Error> {
        let kind = ModelKind::parse(model)?;
        let spec = ModelSpec::new(kind, spin)?;
        let profile = Profile::Sine { base, amp };
        let rho_hat = profile.sup().max(1.0) + 1.0;
        let ims = InitialMeasureSpec::new(spec.clone(), profile.clone(), rho_hat)?;
        let mut rng = RngStream::new(seed as u64, 0);
        let config = kmp_models::measures::sample_profile_measure(&ims, sites, &mut rng)?;
        let heat = solve_heat(&profile, spec.diffusion_coefficient(), 16);
        let state = SimState::new(&spec, config, rng)?;
        Ok(DemoSim {
            spec,
            state,
            heat,
            profile,
            macro_time: 0.0,
        })
    }
}

#[wasm_bindgen]
impl DemoSim {
    /// `model`: `gkmp | dkmp | harm`; the initial profile is
    /// `base + amp·sin(2πu)` sampled site by site.
    #[wasm_bindgen(constructor)]
    pub fn new(
        model: &str,
        spin: f64,
        sites: usize,
        base: f64,
        amp: f64,
        seed: u32,
    ) -> Result<DemoSim, JsError> {
        DemoSim::try_new(model, spin, sites, base, amp, seed).map_err(js_err)
    }

    /// Advance the trajectory by `d_macro_t` macroscopic time units
    /// (micro time `N²·d_macro_t`).
    pub fn advance(&mut self, d_macro_t: f64) -> Result<(), JsError> {
        if !(d_macro_t > 0.0) {
            return Ok(());
        }
        self.macro_time += d_macro_t;
        let plan = ObservationPlan::new(vec![self.macro_time], vec![]).map_err(js_err)?;
        run_diffusive(&mut self.state, &self.spec, &plan).map_err(js_err)?;
        Ok(())
    }

    pub fn macro_time(&self) -> f64 {
        self.macro_time
    }

    pub fn mass(&self) -> f64 {
        self.state.config.total_mass()
    }

    pub fn diffusion(&self) -> f64 {
        self.spec.diffusion_coefficient()
    }

    pub fn sites(&self) -> usize {
        self.state.config.len()
    }

    /// Raw site occupations.
    pub fn site_values(&self) -> Vec<f64> {
        (0..self.state.config.len())
            .map(|x| self.state.config.value(x))
            .collect()
    }

    /// Block-averaged empirical density over `bins` blocks.
    pub fn binned(&self, bins: usize) -> Result<Vec<f64>, JsError> {
        binned_profile(&self.state.config, bins).map_err(js_err)
    }

    /// Heat-equation reference density at the current macro time.
    pub fn reference(&self, points: usize) -> Vec<f64> {
        (0..points)
            .map(|j| self.heat.eval(self.macro_time, (j as f64 + 0.5) / points as f64))
            .collect()
    }

    /// The initial density profile, for context in the plot.
    pub fn initial_profile(&self, points: usize) -> Vec<f64> {
        (0..points)
            .map(|j| self.profile.eval((j as f64 + 0.5) / points as f64))
            .collect()
    }
}

/// Run the attractiveness rate-criterion scan and return its JSON report
/// (`report_only` marks the harmonic spins below 1/2, where the criterion
/// outcome is exploratory).
#[wasm_bindgen]
pub fn attract_scan(
    model: &str,
    spin: f64,
    n_max: u32,
    index_max: u32,
) -> Result<String, JsError> {
    let kind = ModelKind::parse(model).map_err(js_err)?;
    let spec = ModelSpec::new(kind, spin).map_err(js_err)?;
    let report = scan_criterion(&spec, n_max as u64, index_max as u64).map_err(js_err)?;
    let report_only = spec.kind == ModelKind::Harm && spec.spin < 0.5;
    let wrapped = serde_json::json!({
        "report_only": report_only,
        "criterion": report,
    });
    Ok(wrapped.to_string())
}

/// Two gKMP trajectories under the basic coupling: same bond clocks, same
/// Beta draws, started from an ordered pair.
#[wasm_bindgen]
pub struct CouplingDemo {
    spin: f64,
    torus: Torus,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rng: RngStream,
    micro_time: f64,
    events: u64,
    min_gap: f64,
}

#[wasm_bindgen]
impl CouplingDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(sites: usize, spin: f64, seed: u32) -> Result<CouplingDemo, JsError> {
        let spec = ModelSpec::gkmp(spin).map_err(js_err)?;
        let profile = Profile::Sine { base: 1.5, amp: 1.0 };
        // the local Gamma scale is ρ₀/(2s); the dominating parameter must sit above it
        let rho_hat = profile.sup() / (2.0 * spin) + 1.0;
        let ims = InitialMeasureSpec::new(spec, profile, rho_hat).map_err(js_err)?;
        let mut rng = RngStream::new(seed as u64, 1);
        let (lo, hi) = sample_dominated_pair(&ims, sites, &mut rng).map_err(js_err)?;
        let (Config::Energy(lower), Config::Energy(upper)) = (lo, hi) else {
            unreachable!("gkmp samples energy configurations")
        };
        Ok(CouplingDemo {
            spin,
            torus: Torus::new(sites).map_err(js_err)?,
            lower,
            upper,
            rng,
            micro_time: 0.0,
            events: 0,
            min_gap: f64::INFINITY,
        })
    }

    /// Apply `count` coupled bond events.
    pub fn step_events(&mut self, count: usize) -> Result<(), JsError> {
        let n = self.lower.len();
        for _ in 0..count {
            self.micro_time += self.rng.exponential(n as f64);
            let bond = self.rng.next_below(n as u64) as usize;
            let u = sample_beta(2.0 * self.spin, 2.0 * self.spin, &mut self.rng).map_err(js_err)?;
            let y = self.torus.neighbor(bond, 1);
            let (lx, ly) = apply_gkmp_exchange(self.lower[bond], self.lower[y], u);
            let (ux, uy) = apply_gkmp_exchange(self.upper[bond], self.upper[y], u);
            self.lower[bond] = lx;
            self.lower[y] = ly;
            self.upper[bond] = ux;
            self.upper[y] = uy;
            self.events += 1;
            for site in [bond, y] {
                self.min_gap = self.min_gap.min(self.upper[site] - self.lower[site]);
            }
        }
        Ok(())
    }

    pub fn lower(&self) -> Vec<f64> {
        self.lower.clone()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.upper.clone()
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn micro_time(&self) -> f64 {
        self.micro_time
    }

    /// Smallest `upper − lower` gap seen at any touched site so far;
    /// attractiveness keeps this non-negative (up to float rounding).
    pub fn min_gap(&self) -> f64 {
        if self.min_gap.is_finite() {
            self.min_gap
        } else {
            0.0
        }
    }
}
