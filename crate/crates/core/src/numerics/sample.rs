//! Samplers and mass functions for the invariant-measure marginals.
//!
//! Gamma sampling uses Marsaglia–Tsang with the `U^{1/a}` boost for shapes
//! below one; Beta is the two-Gamma ratio; the negative binomial is drawn as
//! a Gamma-mixed Poisson, which matches the mass function
//! `(1/(1+ρ))^r (ρ/(1+ρ))^k Γ(r+k)/(k! Γ(r))` exactly. Quantile functions
//! are provided for the discrete marginals so ordered pairs can be coupled
//! through shared uniforms.

use super::rng::RngStream;
use super::special::log_gamma;
use crate::{Error, Result};

fn require_positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value: v })
    }
}

/// Gamma variate with the given shape and scale.
pub fn sample_gamma(shape: f64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    require_positive("gamma shape", shape)?;
    require_positive("gamma scale", scale)?;
    Ok(standard_gamma(shape, rng) * scale)
}

/// Standard Gamma(shape, 1) variate; shape > 0.
pub(crate) fn standard_gamma(shape: f64, rng: &mut RngStream) -> f64 {
    if shape < 1.0 {
        // Γ(a) = Γ(a+1) · U^{1/a}
        let boost = rng.next_open01().powf(1.0 / shape);
        return standard_gamma(shape + 1.0, rng) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x = rng.normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v3 = v * v * v;
        let u = rng.next_open01();
        if u.ln() < 0.5 * x * x + d - d * v3 + d * v3.ln() {
            return d * v3;
        }
    }
}

/// Beta(a, b) variate in `(0, 1)`.
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    require_positive("beta shape a", a)?;
    require_positive("beta shape b", b)?;
    loop {
        let x = standard_gamma(a, rng);
        let y = standard_gamma(b, rng);
        let s = x + y;
        if s > 0.0 {
            let r = x / s;
            if r > 0.0 && r < 1.0 {
                return Ok(r);
            }
        }
        // astronomically rare underflow of both gammas: redraw
    }
}

/// Poisson variate; exact for any finite positive mean.
///
/// Knuth multiplication for small means; larger means are split in half
/// recursively, which stays exact in distribution and avoids the `e^{-λ}`
/// underflow.
pub fn sample_poisson(mean: f64, rng: &mut RngStream) -> Result<u64> {
    require_positive("poisson mean", mean)?;
    Ok(poisson_inner(mean, rng))
}

fn poisson_inner(mean: f64, rng: &mut RngStream) -> u64 {
    if mean > 400.0 {
        return poisson_inner(mean * 0.5, rng) + poisson_inner(mean * 0.5, rng);
    }
    let limit = (-mean).exp();
    let mut k = 0u64;
    let mut prod = rng.next_open01();
    while prod > limit {
        k += 1;
        prod *= rng.next_open01();
    }
    k
}

/// Geometric variate with the given mean: `P(k) = (1/(1+ρ))(ρ/(1+ρ))^k`.
pub fn sample_geometric_mean(rho: f64, rng: &mut RngStream) -> Result<u64> {
    require_positive("geometric mean", rho)?;
    let u = rng.next_f64();
    Ok(geometric_quantile(rho, u))
}

/// Geometric mass at `k` for the mean-`ρ` parametrization.
pub fn geometric_pmf(rho: f64, k: u64) -> f64 {
    let q = rho / (1.0 + rho);
    q.powi(k as i32) / (1.0 + rho)
}

/// Smallest `k` with `P(X ≤ k) ≥ u`; monotone in both `ρ` and `u`.
pub fn geometric_quantile(rho: f64, u: f64) -> u64 {
    if u <= 0.0 {
        return 0;
    }
    let log_q = (rho / (1.0 + rho)).ln();
    // F(k) = 1 − q^{k+1}  ⇒  k = ⌈ln(1−u)/ln q⌉ − 1
    let raw = ((1.0 - u).ln() / log_q).ceil() - 1.0;
    if raw < 0.0 {
        0
    } else {
        raw as u64
    }
}

/// Negative binomial variate: `P(k) = (1/(1+ρ))^r (ρ/(1+ρ))^k Γ(r+k)/(k!Γ(r))`.
///
/// Drawn as Poisson with a Gamma(r, ρ) mixed mean.
pub fn sample_negative_binomial(r: f64, rho: f64, rng: &mut RngStream) -> Result<u64> {
    require_positive("negative binomial size r", r)?;
    require_positive("negative binomial mean parameter", rho)?;
    let lambda = standard_gamma(r, rng) * rho;
    if lambda <= 0.0 {
        return Ok(0);
    }
    Ok(poisson_inner(lambda, rng))
}

/// Negative binomial mass at `k`, computed in log space.
pub fn negative_binomial_pmf(r: f64, rho: f64, k: u64) -> Result<f64> {
    require_positive("negative binomial size r", r)?;
    require_positive("negative binomial mean parameter", rho)?;
    let kf = k as f64;
    let log_p = log_gamma(r + kf)? - log_gamma(kf + 1.0)? - log_gamma(r)?
        + kf * (rho / (1.0 + rho)).ln()
        - r * (1.0 + rho).ln();
    Ok(log_p.exp())
}

/// Smallest `k` with `P(X ≤ k) ≥ u`, by forward accumulation of the mass
/// recurrence `p_{k+1} = p_k · (ρ/(1+ρ)) · (r+k)/(k+1)`.
pub fn negative_binomial_quantile(r: f64, rho: f64, u: f64) -> u64 {
    let q = rho / (1.0 + rho);
    let mut p = (1.0 + rho).powf(-r);
    let mut cdf = p;
    let mut k = 0u64;
    while cdf < u && k < 100_000_000 {
        p *= q * (r + k as f64) / (k as f64 + 1.0);
        cdf += p;
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::special::log_gamma;

    fn moments(draws: &[f64]) -> (f64, f64) {
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn beta_symmetric_mean() {
        let mut rng = RngStream::new(11, 0);
        let n = 200_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_beta(2.0, 2.0, &mut rng).unwrap())
            .collect();
        let (mean, var) = moments(&draws);
        // Beta(2,2): mean 1/2, variance 1/20
        let se_mean = (1.0 / 20.0f64).sqrt() / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se_mean);
        let se_var = (2.0 / n as f64).sqrt() * (1.0 / 20.0);
        assert!((var - 0.05).abs() < 5.0 * se_var, "var = {var}");
        assert!(sample_beta(-1.0, 2.0, &mut rng).is_err());
    }

    #[test]
    fn beta_uniform_case_kolmogorov_smirnov() {
        // Beta(1,1) is uniform on [0,1]; two-sided KS at the 1% level.
        let mut rng = RngStream::new(5, 3);
        let n = 100_000usize;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_beta(1.0, 1.0, &mut rng).unwrap())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d = 0.0f64;
        for (i, &x) in draws.iter().enumerate() {
            let hi = (i as f64 + 1.0) / n as f64 - x;
            let lo = x - i as f64 / n as f64;
            d = d.max(hi).max(lo);
        }
        let critical = 1.6276 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} over critical {critical}");
    }

    #[test]
    fn gamma_moments_match() {
        let mut rng = RngStream::new(21, 0);
        let n = 1_000_000;
        let (shape, scale) = (1.0, 2.0); // 2s = 1, ρ = 2
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_gamma(shape, scale, &mut rng).unwrap())
            .collect();
        let (mean, var) = moments(&draws);
        let se = (shape * scale * scale / n as f64).sqrt();
        assert!((mean - shape * scale).abs() < 4.0 * se);
        assert!((var - shape * scale * scale).abs() < 0.05);

        // m-th raw moment of Gamma(2s, ρ): ρ^m Γ(2s+m)/Γ(2s)
        for m in 1..=3u32 {
            let emp = draws.iter().map(|d| d.powi(m as i32)).sum::<f64>() / n as f64;
            let expect = scale.powi(m as i32)
                * (log_gamma(shape + m as f64).unwrap() - log_gamma(shape).unwrap()).exp();
            let emp_var = draws
                .iter()
                .map(|d| (d.powi(m as i32) - emp).powi(2))
                .sum::<f64>()
                / (n as f64 - 1.0);
            let se_m = (emp_var / n as f64).sqrt();
            assert!(
                (emp - expect).abs() < 4.0 * se_m,
                "moment {m}: {emp} vs {expect}"
            );
        }
        // Gamma(1, ρ) is exponential; Gamma(0.5, 2) has mean 1
        let mean_half: f64 = (0..n)
            .map(|_| sample_gamma(0.5, 2.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean_half - 1.0).abs() < 4.0 * (0.5 * 4.0f64 / n as f64).sqrt());
        assert!(sample_gamma(0.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn geometric_pmf_and_draws() {
        // mean ρ = 1: P(0) = 1/2, P(1) = 1/4
        assert!((geometric_pmf(1.0, 0) - 0.5).abs() < 1e-15);
        assert!((geometric_pmf(1.0, 1) - 0.25).abs() < 1e-15);

        let mut rng = RngStream::new(100, 0);
        let n = 500_000;
        let rho = 1.5;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_geometric_mean(rho, &mut rng).unwrap() as f64)
            .collect();
        let (mean, var) = moments(&draws);
        let se = (rho * (1.0 + rho) / n as f64).sqrt();
        assert!((mean - rho).abs() < 4.0 * se);
        assert!((var - rho * (1.0 + rho)).abs() < 0.05);
        assert!(sample_geometric_mean(0.0, &mut rng).is_err());
    }

    #[test]
    fn negative_binomial_reduces_to_geometric_at_r_one() {
        for k in 0..20u64 {
            let nb = negative_binomial_pmf(1.0, 0.7, k).unwrap();
            let geo = geometric_pmf(0.7, k);
            assert!((nb - geo).abs() < 1e-13, "k = {k}: {nb} vs {geo}");
        }
    }

    #[test]
    fn negative_binomial_mean_matches_first_factorial_moment() {
        let mut rng = RngStream::new(7, 1);
        let n = 1_000_000;
        let (r, rho) = (2.0, 0.5); // 2s = 2: mean 2sρ = 1
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_negative_binomial(r, rho, &mut rng).unwrap() as f64)
            .collect();
        let (mean, var) = moments(&draws);
        let se = (var / n as f64).sqrt();
        assert!((mean - r * rho).abs() < 4.0 * se, "{mean} vs {}", r * rho);
        assert!(sample_negative_binomial(2.0, -1.0, &mut rng).is_err());
    }

    #[test]
    fn quantiles_invert_cdfs() {
        // geometric: quantile at the cdf midpoint returns the same k
        let rho = 2.0;
        let mut cdf = 0.0;
        for k in 0..40u64 {
            let p = geometric_pmf(rho, k);
            let u = cdf + 0.5 * p;
            assert_eq!(geometric_quantile(rho, u), k);
            cdf += p;
        }
        let (r, rho) = (1.7, 0.8);
        let mut cdf = 0.0;
        for k in 0..40u64 {
            let p = negative_binomial_pmf(r, rho, k).unwrap();
            let u = cdf + 0.5 * p;
            assert_eq!(negative_binomial_quantile(r, rho, u), k);
            cdf += p;
        }
    }

    #[test]
    fn poisson_mean_small_and_split_regime() {
        let mut rng = RngStream::new(77, 0);
        for &mean in &[3.0, 950.0] {
            let n = 40_000;
            let draws: Vec<f64> = (0..n)
                .map(|_| sample_poisson(mean, &mut rng).unwrap() as f64)
                .collect();
            let (m, v) = moments(&draws);
            let se = (mean / n as f64).sqrt();
            assert!((m - mean).abs() < 4.0 * se, "mean {mean}: got {m}");
            assert!((v / mean - 1.0).abs() < 0.1, "variance ratio at {mean}: {v}");
        }
    }
}
