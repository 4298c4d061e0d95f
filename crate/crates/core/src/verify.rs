//! User-facing exact-identity suites.
//!
//! Each suite pits a closed form against an independent route (finite
//! enumeration, quadrature, or a direct inequality scan) and reports the
//! worst residual it saw. Residuals are relative: `|a − b| / max(1, |b|)`,
//! so targets of very different magnitudes share one tolerance scale.

use crate::analysis::{carre_du_champ, carre_du_champ_kernel};
use crate::hydro::TestFunction;
use crate::lattice::{Config, Torus};
use crate::models::{
    generator_eta, generator_eta_kernel, generator_product, generator_product_kernel,
    redistribution_weight_parts, ModelSpec,
};
use crate::numerics::{integrate_01, log_gamma, RngStream};
use crate::Result;

/// Outcome of one suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub checks: u64,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn residual(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Gradient identity: the kernel-expectation generator action on `η_x`
/// equals `D·(η_{x+1} + η_{x−1} − 2η_x)` on random configurations.
///
/// `d_scale` multiplies the closed-form diffusion coefficient; anything but
/// 1.0 is a deliberate fault injection used as a negative control of the
/// harness itself.
pub fn gradient_identity_suite(seed: u64, d_scale: f64) -> Result<SuiteResult> {
    let configs_per_model = 200;
    let mut rng = RngStream::new(seed, 0);
    let mut worst = 0.0f64;
    let mut passed = true;
    let mut checks = 0u64;
    let mut detail = String::new();
    for spec in [
        ModelSpec::gkmp(0.5)?,
        ModelSpec::gkmp(2.0)?,
        ModelSpec::dkmp(),
        ModelSpec::harm(0.5)?,
        ModelSpec::harm(1.5)?,
    ] {
        let n = if spec.is_particle() { 16 } else { 8 };
        let torus = Torus::new(n)?;
        // particle sums are exact; gKMP goes through quadrature
        let tol = if spec.is_particle() { 1e-9 } else { 1e-7 };
        let mut model_worst = 0.0f64;
        for _ in 0..configs_per_model {
            let config = if spec.is_particle() {
                Config::Particle((0..n).map(|_| rng.next_below(51)).collect())
            } else {
                Config::Energy((0..n).map(|_| 50.0 * rng.next_f64()).collect())
            };
            for x in 0..n {
                let closed = d_scale * generator_eta(&spec, &config, x, torus);
                let kernel = generator_eta_kernel(&spec, &config, x, torus, 1e-11)?;
                model_worst = model_worst.max(residual(closed, kernel));
                checks += 1;
            }
        }
        passed &= model_worst <= tol;
        worst = worst.max(model_worst);
        detail.push_str(&format!(
            "{} s={}: worst {:.3e} (tol {:.0e}); ",
            spec.kind.name(),
            spec.spin,
            model_worst,
            tol
        ));
    }
    Ok(SuiteResult {
        name: "gradient-identity".into(),
        passed,
        checks,
        worst_residual: worst,
        tolerance: 1e-7,
        detail,
    })
}

/// The two Gamma-ratio sum identities behind the harmonic generator
/// computations, plus the Beta-weight variance moment `I(s) = s/(4s+1)`:
///
/// ```text
/// Σ_{k=1..n} Γ(n+1)Γ(a−k+n) / (Γ(a+n)Γ(n−k+1))   = n/a
/// Σ_{k=1..n} k·Γ(n+1)Γ(a−k+n) / (Γ(a+n)Γ(n−k+1)) = (a+n)n/(a(a+1))
/// ```
pub fn appendix_identity_suite() -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for &a in &[0.5, 1.0, 1.7, 2.0, 4.0, 6.0] {
        for n in 1..=200u64 {
            let nf = n as f64;
            let mut s0 = 0.0; // Kahan-compensated plain sum
            let mut s1 = 0.0;
            let (mut c0, mut c1) = (0.0f64, 0.0f64);
            for k in 1..=n {
                let kf = k as f64;
                let term = (log_gamma(nf + 1.0)? + log_gamma(a - kf + nf)?
                    - log_gamma(a + nf)?
                    - log_gamma(nf - kf + 1.0)?)
                .exp();
                let y0 = term - c0;
                let t0 = s0 + y0;
                c0 = (t0 - s0) - y0;
                s0 = t0;
                let y1 = kf * term - c1;
                let t1 = s1 + y1;
                c1 = (t1 - s1) - y1;
                s1 = t1;
            }
            worst = worst.max(residual(s0, nf / a));
            worst = worst.max(residual(s1, (a + nf) * nf / (a * (a + 1.0))));
            checks += 2;
        }
    }
    // quadrature route for the Beta variance moment
    for &s in &[0.25, 0.5, 1.0, 2.0, 5.0] {
        let q = integrate_01(
            |u, omu| redistribution_weight_parts(s, u, omu) * u * omu,
            1e-12,
        )?;
        worst = worst.max((q.value - s / (4.0 * s + 1.0)).abs());
        checks += 1;
    }
    Ok(SuiteResult {
        name: "appendix-identities".into(),
        passed: worst <= 1e-10,
        checks,
        worst_residual: worst,
        tolerance: 1e-10,
        detail: "Gamma-ratio sums (n ≤ 200) and Beta variance moments".into(),
    })
}

/// Generator-product oracle: closed forms of `L_{x,x+1}(η_x η_{x+1})` equal
/// brute-force kernel expectations (exhaustive pair enumeration for the
/// particle models, quadrature for gKMP).
pub fn generator_product_suite(seed: u64) -> Result<SuiteResult> {
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for spec in [
        ModelSpec::dkmp(),
        ModelSpec::harm(0.5)?,
        ModelSpec::harm(1.0)?,
        ModelSpec::harm(2.0)?,
    ] {
        for nx in 0..=60u64 {
            for ny in 0..=(60 - nx) {
                let closed = generator_product(&spec, nx as f64, ny as f64);
                let kernel = generator_product_kernel(&spec, nx as f64, ny as f64, 1e-12)?;
                worst = worst.max(residual(closed, kernel));
                checks += 1;
            }
        }
    }
    let mut rng = RngStream::new(seed, 1);
    for &s in &[0.25, 0.5, 1.0, 2.0] {
        let spec = ModelSpec::gkmp(s)?;
        for _ in 0..200 {
            let ex = 40.0 * rng.next_f64();
            let ey = 40.0 * rng.next_f64();
            let closed = generator_product(&spec, ex, ey);
            let kernel = generator_product_kernel(&spec, ex, ey, 1e-11)?;
            worst = worst.max(residual(closed, kernel));
            checks += 1;
        }
    }
    Ok(SuiteResult {
        name: "generator-product-oracle".into(),
        passed: worst <= 1e-8,
        checks,
        worst_residual: worst,
        tolerance: 1e-8,
        detail: "pair sums ≤ 60 exhaustive; 800 random gKMP pairs by quadrature".into(),
    })
}

/// Quadratic-variation key bound:
/// `D(η_x − η_y)² − L_{x,x+1}(η_x η_y) ≤ D(η_x² + η_y²)` with zero
/// violations on integer grids and random real pairs.
pub fn carre_du_champ_bound_suite(seed: u64) -> Result<SuiteResult> {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut violations = 0u64;
    let mut checks = 0u64;
    for spec in [
        ModelSpec::dkmp(),
        ModelSpec::harm(0.5)?,
        ModelSpec::harm(1.0)?,
        ModelSpec::harm(3.0)?,
    ] {
        let d = spec.diffusion_coefficient();
        for nx in 0..=100u64 {
            for ny in 0..=100u64 {
                let (ex, ey) = (nx as f64, ny as f64);
                let lhs = d * (ex - ey).powi(2) - generator_product(&spec, ex, ey);
                let bound = d * (ex * ex + ey * ey);
                let excess = lhs - bound;
                worst_excess = worst_excess.max(excess);
                if excess > 1e-9 * bound.max(1.0) {
                    violations += 1;
                }
                checks += 1;
            }
        }
    }
    let mut rng = RngStream::new(seed, 2);
    for &s in &[0.25, 0.5, 1.0, 2.0] {
        let spec = ModelSpec::gkmp(s)?;
        let d = spec.diffusion_coefficient();
        for _ in 0..10_000 {
            let ex = 100.0 * rng.next_f64();
            let ey = 100.0 * rng.next_f64();
            let lhs = d * (ex - ey).powi(2) - generator_product(&spec, ex, ey);
            let bound = d * (ex * ex + ey * ey);
            let excess = lhs - bound;
            worst_excess = worst_excess.max(excess);
            if excess > 1e-9 * bound.max(1.0) {
                violations += 1;
            }
            checks += 1;
        }
    }
    Ok(SuiteResult {
        name: "carre-du-champ-bound".into(),
        passed: violations == 0,
        checks,
        worst_residual: worst_excess,
        tolerance: 0.0,
        detail: format!("{violations} violations; worst excess {worst_excess:.3e}"),
    })
}

/// Carré-du-champ oracle: the closed-form Υ equals the kernel-expectation Υ
/// on random small configurations.
pub fn carre_du_champ_oracle_suite(seed: u64) -> Result<SuiteResult> {
    let mut rng = RngStream::new(seed, 3);
    let g = TestFunction::Cos(1).grid(8);
    let mut worst = 0.0f64;
    let mut checks = 0u64;
    for spec in [
        ModelSpec::gkmp(0.5)?,
        ModelSpec::dkmp(),
        ModelSpec::harm(1.0)?,
    ] {
        for _ in 0..50 {
            let config = if spec.is_particle() {
                Config::Particle((0..8).map(|_| rng.next_below(20)).collect())
            } else {
                Config::Energy((0..8).map(|_| 20.0 * rng.next_f64()).collect())
            };
            let closed = carre_du_champ(&spec, &config, &g);
            let kernel = carre_du_champ_kernel(&spec, &config, &g, 1e-11)?;
            worst = worst.max(residual(closed, kernel));
            checks += 1;
        }
    }
    Ok(SuiteResult {
        name: "carre-du-champ-oracle".into(),
        passed: worst <= 1e-8,
        checks,
        worst_residual: worst,
        tolerance: 1e-8,
        detail: "closed vs kernel Υ on 150 random configurations".into(),
    })
}

/// Run every suite. `d_scale` feeds the gradient suite's fault-injection
/// hook (1.0 for a normal run).
pub fn run_all(seed: u64, d_scale: f64) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        gradient_identity_suite(seed, d_scale)?,
        appendix_identity_suite()?,
        generator_product_suite(seed)?,
        carre_du_champ_bound_suite(seed)?,
        carre_du_champ_oracle_suite(seed)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_with_honest_coefficients() {
        for suite in run_all(2026, 1.0).unwrap() {
            assert!(
                suite.passed,
                "suite {} failed: worst residual {} ({})",
                suite.name, suite.worst_residual, suite.detail
            );
        }
    }

    #[test]
    fn corrupted_diffusion_coefficient_fails_the_gradient_suite() {
        let suite = gradient_identity_suite(2026, 1.05).unwrap();
        assert!(!suite.passed, "fault injection must be detected");
    }
}
