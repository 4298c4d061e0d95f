//! Invariant product measures, their closed-form moments, and the
//! profile-associated initial measures used by the hydrodynamic experiments.
//!
//! Marginals per model:
//!
//! * gKMP — `Gamma(2s, ρ)` (shape, scale); raw moments `ρ^m Γ(2s+m)/Γ(2s)`;
//! * dKMP — geometric with mean `ρ`; factorial moments `m!·ρ^m`;
//! * Harm — negative binomial `(2s, p = ρ/(1+ρ))`; factorial moments
//!   `ρ^m Γ(2s+m)/Γ(2s)`.
//!
//! A configuration "associated to a profile" `ρ₀` is sampled with
//! independent sites whose local parameter is chosen so the *site mean*
//! equals `ρ₀(x/N)`: the gKMP and Harm marginals have mean `2sρ`, so their
//! local parameter is `ρ₀/(2s)`, while dKMP uses `ρ₀` directly. Dominated
//! pairs couple the profile measure under a homogeneous invariant measure
//! through shared per-site randomness, which keeps the sitewise order exact
//! along the sample, not just in law.

use std::path::Path;

use crate::lattice::Config;
use crate::models::{ModelKind, ModelSpec};
use crate::numerics::{
    geometric_pmf, geometric_quantile, log_gamma, negative_binomial_pmf,
    negative_binomial_quantile, sample_gamma, sample_geometric_mean, sample_negative_binomial,
    RngStream,
};
use crate::{Error, Result};

/// An invariant measure: a model plus its marginal parameter `ρ > 0`.
#[derive(Debug, Clone, Copy)]
pub struct InvariantSpec {
    pub model: ModelSpec,
    pub rho: f64,
}

impl InvariantSpec {
    pub fn new(model: ModelSpec, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain {
                what: "invariant measure parameter rho must be positive",
                value: rho,
            });
        }
        Ok(InvariantSpec { model, rho })
    }

    /// Mean occupation per site: `2sρ` for gKMP/Harm, `ρ` for dKMP.
    pub fn site_mean(&self) -> f64 {
        match self.model.kind {
            ModelKind::GKmp | ModelKind::Harm => 2.0 * self.model.spin * self.rho,
            ModelKind::DKmp => self.rho,
        }
    }

    /// Raw second moment `E[η²]`, used by stationarity and domination checks.
    pub fn site_second_moment(&self) -> f64 {
        match moment(self, 2) {
            (MomentKind::Raw, m2) => m2,
            // E[η(η−1)] = m2 − mean for the particle marginals
            (MomentKind::Factorial, f2) => f2 + self.site_mean(),
        }
    }
}

/// Whether [`moment`] returns a raw moment `E[η^m]` or a factorial moment
/// `E[η(η−1)···(η−m+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    Raw,
    Factorial,
}

/// Closed-form moment of order `m ≥ 1` of the invariant marginal.
///
/// gKMP yields raw moments `ρ^m Γ(2s+m)/Γ(2s)`; dKMP and Harm yield the
/// factorial moments `m!ρ^m` and `ρ^m Γ(2s+m)/Γ(2s)`. The kind is part of
/// the return value so callers cannot mix the two up.
pub fn moment(spec: &InvariantSpec, m: u32) -> (MomentKind, f64) {
    let mf = m as f64;
    let rho_m = spec.rho.powi(m as i32);
    match spec.model.kind {
        ModelKind::GKmp => {
            let two_s = 2.0 * spec.model.spin;
            let ratio = (log_gamma(two_s + mf).unwrap() - log_gamma(two_s).unwrap()).exp();
            (MomentKind::Raw, rho_m * ratio)
        }
        ModelKind::DKmp => {
            let mut fact = 1.0;
            for j in 2..=m {
                fact *= j as f64;
            }
            (MomentKind::Factorial, fact * rho_m)
        }
        ModelKind::Harm => {
            let two_s = 2.0 * spec.model.spin;
            let ratio = (log_gamma(two_s + mf).unwrap() - log_gamma(two_s).unwrap()).exp();
            (MomentKind::Factorial, rho_m * ratio)
        }
    }
}

fn sample_marginal(model: &ModelSpec, rho: f64, rng: &mut RngStream) -> Result<MarginalDraw> {
    match model.kind {
        ModelKind::GKmp => Ok(MarginalDraw::Energy(sample_gamma(
            2.0 * model.spin,
            rho,
            rng,
        )?)),
        ModelKind::DKmp => Ok(MarginalDraw::Particle(sample_geometric_mean(rho, rng)?)),
        ModelKind::Harm => Ok(MarginalDraw::Particle(sample_negative_binomial(
            2.0 * model.spin,
            rho,
            rng,
        )?)),
    }
}

enum MarginalDraw {
    Energy(f64),
    Particle(u64),
}

/// I.i.d. configuration from the invariant measure.
pub fn sample_invariant(spec: &InvariantSpec, n: usize, rng: &mut RngStream) -> Result<Config> {
    if spec.model.is_particle() {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            match sample_marginal(&spec.model, spec.rho, rng)? {
                MarginalDraw::Particle(k) => v.push(k),
                MarginalDraw::Energy(_) => unreachable!(),
            }
        }
        Ok(Config::Particle(v))
    } else {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            match sample_marginal(&spec.model, spec.rho, rng)? {
                MarginalDraw::Energy(e) => v.push(e),
                MarginalDraw::Particle(_) => unreachable!(),
            }
        }
        Ok(Config::Energy(v))
    }
}

/// Macroscopic density profile `ρ₀ : 𝕋 → ℝ₊`, 1-periodic.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub enum Profile {
    /// Constant density `c ≥ 0`.
    Const(f64),
    /// `base + amp·sin(2πu)` with `base ≥ |amp|`.
    Sine { base: f64, amp: f64 },
    /// `left` on `[0, split)`, `right` on `[split, 1)`.
    Step { left: f64, right: f64, split: f64 },
    /// Tabulated values on a uniform grid, nearest-point evaluation.
    Table(Vec<f64>),
}

impl Profile {
    /// Evaluate at `u` (taken modulo 1).
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.rem_euclid(1.0);
        match self {
            Profile::Const(c) => *c,
            Profile::Sine { base, amp } => base + amp * (std::f64::consts::TAU * u).sin(),
            Profile::Step { left, right, split } => {
                if u < *split {
                    *left
                } else {
                    *right
                }
            }
            Profile::Table(values) => {
                let m = values.len();
                let idx = ((u * m as f64).round() as usize) % m;
                values[idx]
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Profile::Const(c) => *c,
            Profile::Sine { base, amp } => base + amp.abs(),
            Profile::Step { left, right, .. } => left.max(*right),
            Profile::Table(values) => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    fn validate(self) -> Result<Self> {
        let ok = match &self {
            Profile::Const(c) => *c >= 0.0 && c.is_finite(),
            Profile::Sine { base, amp } => {
                base.is_finite() && amp.is_finite() && *base >= amp.abs()
            }
            Profile::Step { left, right, split } => {
                *left >= 0.0 && *right >= 0.0 && (0.0..=1.0).contains(split)
            }
            Profile::Table(values) => {
                !values.is_empty() && values.iter().all(|v| *v >= 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidProfile(format!("{self:?} violates bounds")))
        }
    }

    /// Parse the closed-form presets: `const:c`, `sine:a,b`, `step:c1,c2,u*`.
    pub fn parse(preset: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidProfile(format!("'{preset}': {msg}"));
        let (name, args) = preset
            .split_once(':')
            .ok_or_else(|| bad("expected name:args"))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("non-numeric argument"))?;
        match (name, nums.as_slice()) {
            ("const", [c]) => Profile::Const(*c).validate(),
            ("sine", [a, b]) => Profile::Sine { base: *a, amp: *b }.validate(),
            ("step", [l, r, s]) => Profile::Step {
                left: *l,
                right: *r,
                split: *s,
            }
            .validate(),
            _ => Err(bad("unknown preset or wrong arity")),
        }
    }

    /// Load a tabulated profile from a CSV of `u,value` rows (header
    /// optional); values are re-sorted onto a uniform grid by `u`.
    pub fn from_table_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
                return Err(Error::InvalidProfile(format!("bad table row '{line}'")));
            };
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(u), Ok(v)) => rows.push((u, v)),
                _ => continue, // header row
            }
        }
        if rows.is_empty() {
            return Err(Error::InvalidProfile("empty profile table".into()));
        }
        rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Profile::Table(rows.into_iter().map(|(_, v)| v).collect()).validate()
    }

    /// Dispatch on any preset string, including `table:<path>`.
    pub fn from_preset(preset: &str) -> Result<Self> {
        if let Some(path) = preset.strip_prefix("table:") {
            Profile::from_table_csv(Path::new(path))
        } else {
            Profile::parse(preset)
        }
    }
}

/// Profile-associated initial measure, stochastically dominated by the
/// invariant measure with parameter `rho_hat`.
#[derive(Debug, Clone)]
pub struct InitialMeasureSpec {
    pub model: ModelSpec,
    pub profile: Profile,
    pub rho_hat: f64,
}

impl InitialMeasureSpec {
    pub fn new(model: ModelSpec, profile: Profile, rho_hat: f64) -> Result<Self> {
        if !(rho_hat > 0.0) || !rho_hat.is_finite() {
            return Err(Error::Domain {
                what: "domination parameter rho_hat must be positive",
                value: rho_hat,
            });
        }
        Ok(InitialMeasureSpec {
            model,
            profile,
            rho_hat,
        })
    }

    /// Local marginal parameter at macroscopic position `u`, chosen so the
    /// site mean equals `ρ₀(u)`.
    pub fn local_param(&self, u: f64) -> f64 {
        let rho0 = self.profile.eval(u);
        match self.model.kind {
            ModelKind::GKmp | ModelKind::Harm => rho0 / (2.0 * self.model.spin),
            ModelKind::DKmp => rho0,
        }
    }
}

/// Independent-site configuration whose site means follow the profile.
/// Sites where the profile vanishes are deterministically empty.
pub fn sample_profile_measure(
    spec: &InitialMeasureSpec,
    n: usize,
    rng: &mut RngStream,
) -> Result<Config> {
    if spec.model.is_particle() {
        let mut v = Vec::with_capacity(n);
        for x in 0..n {
            let rho = spec.local_param(x as f64 / n as f64);
            if rho == 0.0 {
                v.push(0);
                continue;
            }
            match sample_marginal(&spec.model, rho, rng)? {
                MarginalDraw::Particle(k) => v.push(k),
                MarginalDraw::Energy(_) => unreachable!(),
            }
        }
        Ok(Config::Particle(v))
    } else {
        let mut v = Vec::with_capacity(n);
        for x in 0..n {
            let rho = spec.local_param(x as f64 / n as f64);
            if rho == 0.0 {
                v.push(0.0);
                continue;
            }
            match sample_marginal(&spec.model, rho, rng)? {
                MarginalDraw::Energy(e) => v.push(e),
                MarginalDraw::Particle(_) => unreachable!(),
            }
        }
        Ok(Config::Energy(v))
    }
}

/// Verify that every site-local marginal is stochastically dominated by the
/// `ν_ρ̂` marginal.
///
/// For the Gamma marginals this is the scale-family ordering `ρ_loc ≤ ρ̂`.
/// For the particle marginals the CDFs are compared pointwise up to a far
/// tail quantile of the dominating law (the tails themselves are ordered by
/// parameter monotonicity of the geometric/negative-binomial families).
pub fn check_domination(spec: &InitialMeasureSpec, n: usize) -> Result<()> {
    for x in 0..n {
        let rho_loc = spec.local_param(x as f64 / n as f64);
        if rho_loc == 0.0 {
            continue;
        }
        match spec.model.kind {
            ModelKind::GKmp => {
                if rho_loc > spec.rho_hat * (1.0 + 1e-12) {
                    return Err(Error::DominationViolated {
                        site: x,
                        detail: format!(
                            "gamma scale {rho_loc} exceeds dominating scale {}",
                            spec.rho_hat
                        ),
                    });
                }
            }
            ModelKind::DKmp => {
                check_discrete_domination(
                    x,
                    |k| geometric_pmf(rho_loc, k),
                    |k| geometric_pmf(spec.rho_hat, k),
                    geometric_quantile(spec.rho_hat, 1.0 - 1e-13),
                )?;
            }
            ModelKind::Harm => {
                let r = 2.0 * spec.model.spin;
                check_discrete_domination(
                    x,
                    |k| negative_binomial_pmf(r, rho_loc, k).unwrap(),
                    |k| negative_binomial_pmf(r, spec.rho_hat, k).unwrap(),
                    negative_binomial_quantile(r, spec.rho_hat, 1.0 - 1e-13),
                )?;
            }
        }
    }
    Ok(())
}

fn check_discrete_domination(
    site: usize,
    pmf_lo: impl Fn(u64) -> f64,
    pmf_hi: impl Fn(u64) -> f64,
    k_cut: u64,
) -> Result<()> {
    let mut cdf_lo = 0.0;
    let mut cdf_hi = 0.0;
    for k in 0..=k_cut {
        cdf_lo += pmf_lo(k);
        cdf_hi += pmf_hi(k);
        if cdf_lo < cdf_hi - 1e-12 {
            return Err(Error::DominationViolated {
                site,
                detail: format!("CDF crossing at k = {k}: {cdf_lo} < {cdf_hi}"),
            });
        }
    }
    Ok(())
}

/// Sample a coupled pair `(η, ξ)` with `η` profile-distributed, `ξ` drawn
/// from the homogeneous `ν_ρ̂`, and `η_x ≤ ξ_x` at every site exactly.
///
/// Particle marginals share a per-site uniform pushed through both inverse
/// CDFs; the Gamma marginals share a standard Gamma(2s, 1) draw scaled by
/// the two parameters, which realizes the same monotone coupling.
pub fn sample_dominated_pair(
    spec: &InitialMeasureSpec,
    n: usize,
    rng: &mut RngStream,
) -> Result<(Config, Config)> {
    check_domination(spec, n)?;
    match spec.model.kind {
        ModelKind::GKmp => {
            let shape = 2.0 * spec.model.spin;
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for x in 0..n {
                let rho_loc = spec.local_param(x as f64 / n as f64);
                let g = sample_gamma(shape, 1.0, rng)?;
                lo.push(rho_loc * g);
                hi.push(spec.rho_hat * g);
            }
            Ok((Config::Energy(lo), Config::Energy(hi)))
        }
        ModelKind::DKmp => {
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for x in 0..n {
                let rho_loc = spec.local_param(x as f64 / n as f64);
                let u = rng.next_f64();
                lo.push(if rho_loc == 0.0 {
                    0
                } else {
                    geometric_quantile(rho_loc, u)
                });
                hi.push(geometric_quantile(spec.rho_hat, u));
            }
            Ok((Config::Particle(lo), Config::Particle(hi)))
        }
        ModelKind::Harm => {
            let r = 2.0 * spec.model.spin;
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for x in 0..n {
                let rho_loc = spec.local_param(x as f64 / n as f64);
                let u = rng.next_f64();
                lo.push(if rho_loc == 0.0 {
                    0
                } else {
                    negative_binomial_quantile(r, rho_loc, u)
                });
                hi.push(negative_binomial_quantile(r, spec.rho_hat, u));
            }
            Ok((Config::Particle(lo), Config::Particle(hi)))
        }
    }
}
