//! The three model kernels and their exact generator actions.
//!
//! Each model acts bond by bond on the torus. The per-bond generator applied
//! to the observables `η_x` and `η_x η_{x+1}` has closed forms, and those
//! closed forms are what the martingale diagnostics and quadratic-variation
//! bounds are built on. Every closed form here is paired with an independent
//! kernel-expectation route (finite sums for the particle models, quadrature
//! against the Beta weight for gKMP) so the two can be checked against each
//! other.

pub mod harm;

use crate::lattice::{Config, Torus};
use crate::numerics::{integrate_01, log_gamma};
use crate::{Error, Result};

/// Which of the three dynamics a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    /// Generalized Kipnis–Marchioro–Presutti energy redistribution.
    GKmp,
    /// Discrete KMP: uniform particle redistribution on a bond.
    DKmp,
    /// Harmonic generalized zero-range family.
    Harm,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gkmp" => Ok(ModelKind::GKmp),
            "dkmp" => Ok(ModelKind::DKmp),
            "harm" | "harmonic" => Ok(ModelKind::Harm),
            other => Err(Error::InvalidPlan(format!(
                "unknown model '{other}' (expected gkmp | dkmp | harm)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::GKmp => "gkmp",
            ModelKind::DKmp => "dkmp",
            ModelKind::Harm => "harm",
        }
    }
}

/// A model kind together with its spin parameter `s > 0`.
///
/// The spin labels the gKMP and Harm families. The discrete KMP kernel is
/// the classical uniform-redistribution model; its spec pins `s = 1/2` so
/// that `2s = 1` matches its geometric marginals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub spin: f64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, spin: f64) -> Result<Self> {
        if !(spin > 0.0) || !spin.is_finite() {
            return Err(Error::Domain {
                what: "spin must be positive",
                value: spin,
            });
        }
        Ok(ModelSpec { kind, spin })
    }

    pub fn gkmp(spin: f64) -> Result<Self> {
        Self::new(ModelKind::GKmp, spin)
    }

    pub fn dkmp() -> Self {
        ModelSpec {
            kind: ModelKind::DKmp,
            spin: 0.5,
        }
    }

    pub fn harm(spin: f64) -> Result<Self> {
        Self::new(ModelKind::Harm, spin)
    }

    /// Harmonic chains are only proven attractive for `2s ≥ 1`; callers that
    /// rely on order preservation should surface this warning rather than
    /// refuse to run.
    pub fn attractiveness_warning(&self) -> Option<String> {
        if self.kind == ModelKind::Harm && self.spin < 0.5 {
            Some(format!(
                "harmonic model with spin {} < 1/2: attractiveness is not established in this regime",
                self.spin
            ))
        } else {
            None
        }
    }

    pub fn is_particle(&self) -> bool {
        matches!(self.kind, ModelKind::DKmp | ModelKind::Harm)
    }

    /// Diffusion coefficient of the hydrodynamic equation:
    /// `1/2` for gKMP and dKMP, `1/(2s)` for Harm.
    pub fn diffusion_coefficient(&self) -> f64 {
        match self.kind {
            ModelKind::GKmp | ModelKind::DKmp => 0.5,
            ModelKind::Harm => 1.0 / (2.0 * self.spin),
        }
    }
}

/// A single applied bond event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BondEvent {
    /// gKMP: the bond `(site, site+1)` re-split its energy, the left site
    /// keeping the `fraction` share of the pooled pair sum.
    GkmpExchange { site: usize, fraction: f64 },
    /// dKMP: the bond re-split its particles, the left site keeping
    /// `assigned_left` of them.
    DkmpExchange { site: usize, assigned_left: u64 },
    /// Harm: `count ≥ 1` particles jumped from `site` to its `dir` neighbor.
    HarmJump { site: usize, dir: i8, count: u64 },
}

/// Beta redistribution weight `γ_s(u) = Γ(4s)/Γ(2s)² · u^{2s−1}(1−u)^{2s−1}`.
pub fn redistribution_weight(spin: f64, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain {
            what: "redistribution weight argument must lie in (0,1)",
            value: u,
        });
    }
    Ok(redistribution_weight_parts(spin, u, 1.0 - u))
}

/// Cancellation-free form of the Beta weight taking `u` and `1−u`
/// separately; this is the variant quadrature should use.
pub fn redistribution_weight_parts(spin: f64, u: f64, one_minus_u: f64) -> f64 {
    let coef = (log_gamma(4.0 * spin).unwrap() - 2.0 * log_gamma(2.0 * spin).unwrap()).exp();
    coef * u.powf(2.0 * spin - 1.0) * one_minus_u.powf(2.0 * spin - 1.0)
}

/// gKMP bond update: the pooled pair energy is re-split as
/// `(u·(ηx+ηy), (1−u)·(ηx+ηy))`, both sides computed from the pre-sum so
/// the pair total is conserved to one rounding.
pub fn apply_gkmp_exchange(ex: f64, ey: f64, u: f64) -> (f64, f64) {
    let total = ex + ey;
    (u * total, (1.0 - u) * total)
}

/// dKMP bond update: `r` of the pooled `ηx + ηy` particles stay left.
pub fn apply_dkmp_exchange(nx: u64, ny: u64, r: u64) -> Result<(u64, u64)> {
    let total = nx + ny;
    if r > total {
        return Err(Error::OutOfRange {
            what: "dKMP redistribution value r",
            value: r as i64,
            max: total as i64,
        });
    }
    Ok((r, total - r))
}

/// Instantaneous current over the bond `(x, x+1)`:
/// `W_{x,x+1} = D·(η_{x+1} − η_x)`.
pub fn instantaneous_current(spec: &ModelSpec, config: &Config, x: usize, torus: Torus) -> f64 {
    let y = torus.neighbor(x, 1);
    spec.diffusion_coefficient() * (config.value(y) - config.value(x))
}

/// Microscopic generator action on the occupation observable:
/// `L η_x = D·(η_{x+1} + η_{x−1} − 2η_x)` (no `N²` factor).
pub fn generator_eta(spec: &ModelSpec, config: &Config, x: usize, torus: Torus) -> f64 {
    let right = config.value(torus.neighbor(x, 1));
    let left = config.value(torus.neighbor(x, -1));
    spec.diffusion_coefficient() * (right + left - 2.0 * config.value(x))
}

/// The same quantity evaluated straight from the jump kernels: quadrature
/// against the Beta weight for gKMP, exact finite sums for dKMP and Harm.
/// Used to validate the gradient identity against [`generator_eta`].
pub fn generator_eta_kernel(
    spec: &ModelSpec,
    config: &Config,
    x: usize,
    torus: Torus,
    tol: f64,
) -> Result<f64> {
    let right = torus.neighbor(x, 1);
    let left = torus.neighbor(x, -1);
    match spec.kind {
        ModelKind::GKmp => {
            let ex = config.value(x);
            // bond (x, x+1): x is the left site and receives u·(pair sum)
            let sum_r = ex + config.value(right);
            let spin = spec.spin;
            let bond_right = integrate_01(
                |u, omu| redistribution_weight_parts(spin, u, omu) * (u * sum_r - ex),
                tol,
            )?
            .value;
            // bond (x−1, x): x is the right site and receives (1−u)·(pair sum)
            let sum_l = config.value(left) + ex;
            let bond_left = integrate_01(
                |u, omu| redistribution_weight_parts(spin, u, omu) * (omu * sum_l - ex),
                tol,
            )?
            .value;
            Ok(bond_right + bond_left)
        }
        ModelKind::DKmp => {
            let nx = particle_at(config, x)?;
            let nr = particle_at(config, right)?;
            let nl = particle_at(config, left)?;
            // bond (x, x+1): x becomes r, uniform over 0..=nx+nr
            let mut acc = 0.0;
            let tot_r = nx + nr;
            for r in 0..=tot_r {
                acc += (r as f64 - nx as f64) / (tot_r as f64 + 1.0);
            }
            // bond (x−1, x): x becomes (pair total − r)
            let tot_l = nl + nx;
            for r in 0..=tot_l {
                acc += ((tot_l - r) as f64 - nx as f64) / (tot_l as f64 + 1.0);
            }
            Ok(acc)
        }
        ModelKind::Harm => {
            let nx = particle_at(config, x)?;
            let nr = particle_at(config, right)?;
            let nl = particle_at(config, left)?;
            let s = spec.spin;
            let inflow_right: f64 = (1..=nr).map(|k| k as f64 * harm::rate(nr, k, s)).sum();
            let inflow_left: f64 = (1..=nl).map(|k| k as f64 * harm::rate(nl, k, s)).sum();
            let outflow: f64 = (1..=nx).map(|k| k as f64 * harm::rate(nx, k, s)).sum();
            Ok(inflow_right + inflow_left - 2.0 * outflow)
        }
    }
}

fn particle_at(config: &Config, x: usize) -> Result<u64> {
    match config {
        Config::Particle(v) => Ok(v[x]),
        Config::Energy(_) => Err(Error::InvalidPlan(
            "particle kernel evaluated on an energy configuration".into(),
        )),
    }
}

/// Closed form of the per-bond generator on the product observable,
/// `L_{x,x+1}(η_x η_{x+1})`:
///
/// * gKMP: `(ηx+ηy)²·s/(4s+1) − ηx·ηy`
/// * dKMP: `ηx²/6 + ηy²/6 − (2/3)ηxηy − ηx/6 − ηy/6`
/// * Harm: `(1/(2s))(ηx−ηy)² − (1/(2s(2s+1)))(ηx² + ηy² + 2sηx + 2sηy)`
pub fn generator_product(spec: &ModelSpec, ex: f64, ey: f64) -> f64 {
    match spec.kind {
        ModelKind::GKmp => {
            let s = spec.spin;
            (ex + ey).powi(2) * s / (4.0 * s + 1.0) - ex * ey
        }
        ModelKind::DKmp => {
            (ex * ex + ey * ey) / 6.0 - 2.0 / 3.0 * ex * ey - (ex + ey) / 6.0
        }
        ModelKind::Harm => {
            let two_s = 2.0 * spec.spin;
            (ex - ey).powi(2) / two_s
                - (ex * ex + ey * ey + two_s * ex + two_s * ey) / (two_s * (two_s + 1.0))
        }
    }
}

/// Brute-force kernel expectation of `L_{x,x+1}(η_x η_{x+1})`: exhaustive
/// enumeration for the particle models, quadrature for gKMP.
pub fn generator_product_kernel(spec: &ModelSpec, ex: f64, ey: f64, tol: f64) -> Result<f64> {
    match spec.kind {
        ModelKind::GKmp => {
            let total = ex + ey;
            let spin = spec.spin;
            let product = ex * ey;
            Ok(integrate_01(
                |u, omu| {
                    redistribution_weight_parts(spin, u, omu)
                        * (u * total * omu * total - product)
                },
                tol,
            )?
            .value)
        }
        ModelKind::DKmp => {
            let nx = ex as u64;
            let ny = ey as u64;
            let total = nx + ny;
            let mut acc = 0.0;
            for r in 0..=total {
                acc += (r * (total - r)) as f64 - (nx * ny) as f64;
            }
            Ok(acc / (total as f64 + 1.0))
        }
        ModelKind::Harm => {
            let nx = ex as u64;
            let ny = ey as u64;
            let s = spec.spin;
            let prod = (nx * ny) as f64;
            let mut acc = 0.0;
            for k in 1..=nx {
                let new = ((nx - k) * (ny + k)) as f64;
                acc += harm::rate(nx, k, s) * (new - prod);
            }
            for k in 1..=ny {
                let new = ((nx + k) * (ny - k)) as f64;
                acc += harm::rate(ny, k, s) * (new - prod);
            }
            Ok(acc)
        }
    }
}
