//! Exact continuous-time simulation of the three dynamics.
//!
//! gKMP and dKMP are bond-clock models: every one of the `N` bonds rings at
//! rate 1, so the total rate is constant and selection is a uniform draw.
//! The harmonic model has state-dependent rates `Σ_k c_k(η_x)` per site and
//! direction; those live in a Fenwick-backed [`RateIndex`] so holding times,
//! event selection and the ≤ 4 post-jump rate updates all stay `O(log N)`.
//!
//! Holding times are drawn by inversion from the owning stream, which makes
//! a trajectory a deterministic function of `(seed, stream_id)`. Observables
//! are read from the right-continuous path: the state reported at macro time
//! `t` is the configuration after the last event at micro time `≤ N²t`.

mod fenwick;
mod martingale;

pub use fenwick::RateIndex;

use crate::hydro::{self, TestFunction};
use crate::lattice::{Config, Torus};
use crate::measures::{self, InitialMeasureSpec};
use crate::models::{
    apply_dkmp_exchange, apply_gkmp_exchange, harm, BondEvent, ModelKind, ModelSpec,
};
use crate::numerics::{sample_beta, RngStream};
use crate::{Error, Result};

use martingale::MartingaleTracker;

/// How many events may pass between debug-mode audits of the Harm rate
/// index against a full recomputation.
const AUDIT_EVERY: usize = 8192;

/// Signed value changes at the two sites an event touched.
#[derive(Debug, Clone, Copy)]
pub struct SiteDelta {
    pub x: usize,
    pub y: usize,
    pub dx: f64,
    pub dy: f64,
}

struct HarmIndex {
    table: harm::RateTable,
    index: RateIndex,
    events_since_audit: usize,
}

impl HarmIndex {
    fn new(spin: f64, config: &Config) -> Self {
        let n = config.len();
        let mut table = harm::RateTable::new(spin);
        let mut values = vec![0.0; 2 * n];
        for x in 0..n {
            let r = table.total(config.value(x) as u64);
            values[2 * x] = r;
            values[2 * x + 1] = r;
        }
        HarmIndex {
            table,
            index: RateIndex::from_values(&values),
            events_since_audit: 0,
        }
    }

    fn site_updated(&mut self, x: usize, occupancy: u64) {
        let r = self.table.total(occupancy);
        self.index.set(2 * x, r);
        self.index.set(2 * x + 1, r);
    }
}

/// One running trajectory: configuration, micro clock, owning stream and,
/// for Harm, the incremental rate index.
pub struct SimState {
    pub torus: Torus,
    pub config: Config,
    pub micro_time: f64,
    rng: RngStream,
    harm: Option<HarmIndex>,
}

impl SimState {
    pub fn new(spec: &ModelSpec, config: Config, rng: RngStream) -> Result<Self> {
        let torus = Torus::new(config.len())?;
        if spec.is_particle() != config.is_particle() {
            return Err(Error::InvalidPlan(format!(
                "{} model cannot run on a {} configuration",
                spec.kind.name(),
                if config.is_particle() { "particle" } else { "energy" },
            )));
        }
        let harm = (spec.kind == ModelKind::Harm).then(|| HarmIndex::new(spec.spin, &config));
        Ok(SimState {
            torus,
            config,
            micro_time: 0.0,
            rng,
            harm,
        })
    }

    /// Draw the next holding time and event without applying it.
    /// Draw order: holding time, location, payload.
    fn propose(&mut self, spec: &ModelSpec) -> Result<(f64, BondEvent)> {
        let n = self.torus.sites();
        match spec.kind {
            ModelKind::GKmp => {
                let dt = self.rng.exponential(n as f64);
                let bond = self.rng.next_below(n as u64) as usize;
                let fraction = sample_beta(2.0 * spec.spin, 2.0 * spec.spin, &mut self.rng)?;
                Ok((dt, BondEvent::GkmpExchange { site: bond, fraction }))
            }
            ModelKind::DKmp => {
                let dt = self.rng.exponential(n as f64);
                let bond = self.rng.next_below(n as u64) as usize;
                let pool = self.config.value(bond) as u64
                    + self.config.value(self.torus.neighbor(bond, 1)) as u64;
                let assigned_left = self.rng.next_below(pool + 1);
                Ok((dt, BondEvent::DkmpExchange { site: bond, assigned_left }))
            }
            ModelKind::Harm => {
                let harm_idx = self.harm.as_mut().expect("harm state has a rate index");
                let total = harm_idx.index.total();
                if total <= 0.0 {
                    return Err(Error::FrozenState);
                }
                let dt = self.rng.exponential(total);
                let entry = harm_idx.index.select(self.rng.next_f64() * total);
                let site = entry / 2;
                let dir: i8 = if entry % 2 == 0 { 1 } else { -1 };
                let occupancy = self.config.value(site) as u64;
                debug_assert!(occupancy > 0);
                let count = harm_idx.table.pick_count(occupancy, self.rng.next_f64());
                Ok((dt, BondEvent::HarmJump { site, dir, count }))
            }
        }
    }

    /// Apply a proposed event to the configuration (and the rate index).
    fn apply(&mut self, _spec: &ModelSpec, event: &BondEvent) -> SiteDelta {
        match *event {
            BondEvent::GkmpExchange { site, fraction } => {
                let y = self.torus.neighbor(site, 1);
                let Config::Energy(v) = &mut self.config else {
                    unreachable!("gKMP runs on energy configurations");
                };
                let (old_x, old_y) = (v[site], v[y]);
                let (new_x, new_y) = apply_gkmp_exchange(old_x, old_y, fraction);
                v[site] = new_x;
                v[y] = new_y;
                SiteDelta {
                    x: site,
                    y,
                    dx: new_x - old_x,
                    dy: new_y - old_y,
                }
            }
            BondEvent::DkmpExchange { site, assigned_left } => {
                let y = self.torus.neighbor(site, 1);
                let Config::Particle(v) = &mut self.config else {
                    unreachable!("dKMP runs on particle configurations");
                };
                let (old_x, old_y) = (v[site], v[y]);
                let (new_x, new_y) =
                    apply_dkmp_exchange(old_x, old_y, assigned_left).expect("payload in range");
                v[site] = new_x;
                v[y] = new_y;
                SiteDelta {
                    x: site,
                    y,
                    dx: new_x as f64 - old_x as f64,
                    dy: new_y as f64 - old_y as f64,
                }
            }
            BondEvent::HarmJump { site, dir, count } => {
                let y = self.torus.neighbor(site, dir);
                let Config::Particle(v) = &mut self.config else {
                    unreachable!("Harm runs on particle configurations");
                };
                debug_assert!(count >= 1 && count <= v[site]);
                v[site] -= count;
                v[y] += count;
                let (new_x, new_y) = (v[site], v[y]);
                let harm_idx = self.harm.as_mut().expect("harm state has a rate index");
                harm_idx.site_updated(site, new_x);
                harm_idx.site_updated(y, new_y);
                harm_idx.events_since_audit += 1;
                if cfg!(debug_assertions) && harm_idx.events_since_audit >= AUDIT_EVERY {
                    harm_idx.events_since_audit = 0;
                    debug_assert!(
                        self.rate_index_drift().unwrap_or(0.0) < 1e-9,
                        "rate index drifted from the configuration"
                    );
                }
                SiteDelta {
                    x: site,
                    y,
                    dx: -(count as f64),
                    dy: count as f64,
                }
            }
        }
    }

    /// Perform one event: advance the clock by an exponential holding time
    /// of the current total rate, select and apply the transition. With zero
    /// total rate (empty Harm configuration) the state is frozen and the
    /// caller decides how far to advance the clock.
    pub fn step(&mut self, spec: &ModelSpec) -> Result<BondEvent> {
        let (dt, event) = self.propose(spec)?;
        self.micro_time += dt;
        self.apply(spec, &event);
        Ok(event)
    }

    /// Max absolute gap between the incremental Harm rate entries and a full
    /// recomputation; `None` for bond-clock models.
    pub fn rate_index_drift(&mut self) -> Option<f64> {
        let n = self.torus.sites();
        let mut occupancies = Vec::with_capacity(n);
        for x in 0..n {
            occupancies.push(self.config.value(x) as u64);
        }
        let harm_idx = self.harm.as_mut()?;
        let mut worst = 0.0f64;
        for (x, &occ) in occupancies.iter().enumerate() {
            let expect = harm_idx.table.total(occ);
            for e in [2 * x, 2 * x + 1] {
                worst = worst.max((harm_idx.index.value(e) - expect).abs());
            }
        }
        Some(worst)
    }
}

/// What to record at each observation time.
#[derive(Debug, Clone)]
pub enum Observable {
    TotalMass,
    Pairing(TestFunction),
    BinnedProfile(usize),
    Martingale(TestFunction),
    Snapshot,
}

/// Scheduled macroscopic observation times plus the observable list.
#[derive(Debug, Clone)]
pub struct ObservationPlan {
    pub macro_times: Vec<f64>,
    pub observables: Vec<Observable>,
}

impl ObservationPlan {
    pub fn new(macro_times: Vec<f64>, observables: Vec<Observable>) -> Result<Self> {
        for pair in macro_times.windows(2) {
            if pair[1] < pair[0] {
                return Err(Error::InvalidPlan("macro times must be non-decreasing".into()));
            }
        }
        if macro_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidPlan("macro times must be finite and non-negative".into()));
        }
        Ok(ObservationPlan {
            macro_times,
            observables,
        })
    }
}

/// One recorded observable value.
#[derive(Debug, Clone)]
pub enum ObservedValue {
    Scalar(f64),
    Profile(Vec<f64>),
    Martingale { m_t: f64, qv_integral: f64 },
    Snapshot(Config),
}

/// All observables at one macro time.
#[derive(Debug, Clone)]
pub struct Observation {
    pub macro_time: f64,
    pub values: Vec<ObservedValue>,
}

/// Run the diffusively rescaled trajectory, emitting each observable at
/// micro time `N²t` for every scheduled `t` (right-continuous paths: the
/// state after the last event at or before the threshold).
pub fn run_diffusive(
    state: &mut SimState,
    spec: &ModelSpec,
    plan: &ObservationPlan,
) -> Result<Vec<Observation>> {
    let n = state.torus.sites();
    let n2 = (n * n) as f64;
    let thresholds: Vec<f64> = plan.macro_times.iter().map(|t| t * n2).collect();
    let mut out = Vec::with_capacity(thresholds.len());
    if thresholds.is_empty() {
        return Ok(out);
    }

    // grids are shared by pairing observables and the emit closure
    let grids: Vec<Option<Vec<f64>>> = plan
        .observables
        .iter()
        .map(|ob| match ob {
            Observable::Pairing(g) => Some(g.grid(n)),
            _ => None,
        })
        .collect();

    let mut trackers: Vec<(usize, MartingaleTracker)> = plan
        .observables
        .iter()
        .enumerate()
        .filter_map(|(i, ob)| match ob {
            Observable::Martingale(g) => Some((
                i,
                MartingaleTracker::new(
                    spec.clone(),
                    state.torus,
                    &state.config,
                    g.grid(n),
                    state.micro_time,
                ),
            )),
            _ => None,
        })
        .collect();

    let emit = |state: &SimState,
                trackers: &[(usize, MartingaleTracker)],
                macro_time: f64|
     -> Result<Observation> {
        let mut values = Vec::with_capacity(plan.observables.len());
        for (i, ob) in plan.observables.iter().enumerate() {
            values.push(match ob {
                Observable::TotalMass => ObservedValue::Scalar(state.config.total_mass()),
                Observable::Pairing(_) => ObservedValue::Scalar(hydro::pair(
                    &state.config,
                    grids[i].as_deref().expect("grid built for every pairing"),
                )),
                Observable::BinnedProfile(bins) => {
                    ObservedValue::Profile(hydro::binned_profile(&state.config, *bins)?)
                }
                Observable::Martingale(_) => {
                    let tracker = &trackers
                        .iter()
                        .find(|(j, _)| *j == i)
                        .expect("tracker built for every martingale observable")
                        .1;
                    ObservedValue::Martingale {
                        m_t: tracker.martingale(&state.config),
                        qv_integral: tracker.qv_integral(),
                    }
                }
                Observable::Snapshot => ObservedValue::Snapshot(state.config.clone()),
            });
        }
        Ok(Observation { macro_time, values })
    };

    let mut ti = 0usize;
    // thresholds at or before the current clock (typically t = 0)
    while ti < thresholds.len() && thresholds[ti] <= state.micro_time {
        out.push(emit(state, &trackers, plan.macro_times[ti])?);
        ti += 1;
    }

    while ti < thresholds.len() {
        match state.propose(spec) {
            Err(Error::FrozenState) => {
                // legal absorbing state: the clock jumps between thresholds
                while ti < thresholds.len() {
                    for (_, tracker) in &mut trackers {
                        tracker.advance_to(thresholds[ti]);
                    }
                    state.micro_time = thresholds[ti];
                    out.push(emit(state, &trackers, plan.macro_times[ti])?);
                    ti += 1;
                }
            }
            Err(e) => return Err(e),
            Ok((dt, event)) => {
                let event_time = state.micro_time + dt;
                while ti < thresholds.len() && thresholds[ti] < event_time {
                    for (_, tracker) in &mut trackers {
                        tracker.advance_to(thresholds[ti]);
                    }
                    out.push(emit(state, &trackers, plan.macro_times[ti])?);
                    ti += 1;
                }
                if ti >= thresholds.len() {
                    state.micro_time = *thresholds.last().unwrap();
                    break;
                }
                for (_, tracker) in &mut trackers {
                    tracker.advance_to(event_time);
                }
                let delta = state.apply(spec, &event);
                state.micro_time = event_time;
                for (_, tracker) in &mut trackers {
                    tracker.on_change(&delta, &state.config);
                }
            }
        }
    }
    Ok(out)
}

/// How each replica draws its starting configuration.
#[derive(Debug, Clone)]
pub enum InitialState {
    /// I.i.d. sites from the invariant measure with parameter `rho`.
    Invariant { rho: f64 },
    /// Profile-associated product measure.
    ProfileMeasure(InitialMeasureSpec),
    /// The same fixed configuration for every replica.
    Fixed(Config),
}

/// A replicated experiment: independent trajectories with streams derived
/// from `(seed, replica index)`.
#[derive(Debug, Clone)]
pub struct ReplicaExperiment {
    pub spec: ModelSpec,
    pub sites: usize,
    pub init: InitialState,
    pub plan: ObservationPlan,
    pub seed: u64,
    pub replicas: u64,
}

/// Per-replica result; failures are surfaced without aborting the others.
#[derive(Debug)]
pub struct ReplicaOutcome {
    pub replica: u64,
    pub result: Result<Vec<Observation>>,
}

fn run_one(exp: &ReplicaExperiment, replica: u64) -> ReplicaOutcome {
    let result = (|| {
        let mut rng = RngStream::new(exp.seed, replica);
        let config = match &exp.init {
            InitialState::Invariant { rho } => {
                let ispec = measures::InvariantSpec::new(exp.spec.clone(), *rho)?;
                measures::sample_invariant(&ispec, exp.sites, &mut rng)?
            }
            InitialState::ProfileMeasure(ims) => {
                measures::sample_profile_measure(ims, exp.sites, &mut rng)?
            }
            InitialState::Fixed(config) => config.clone(),
        };
        let mut state = SimState::new(&exp.spec, config, rng)?;
        run_diffusive(&mut state, &exp.spec, &exp.plan)
    })();
    ReplicaOutcome { replica, result }
}

/// Run all replicas (in parallel when the `parallel` feature is on). The
/// per-replica outputs depend only on `(seed, replica)`, never on the
/// execution order.
pub fn run_replicas(exp: &ReplicaExperiment) -> Vec<ReplicaOutcome> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..exp.replicas)
            .into_par_iter()
            .map(|replica| run_one(exp, replica))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..exp.replicas).map(|replica| run_one(exp, replica)).collect()
    }
}
