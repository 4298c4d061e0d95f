//! Harmonic multi-particle jump rates.
//!
//! From a site holding `n` particles, `k ≤ n` of them jump together to a
//! fixed neighbor at rate
//!
//! ```text
//! c_k(n) = (1/k) · Γ(n+1) Γ(n−k+2s) / (Γ(n−k+1) Γ(n+2s))
//! ```
//!
//! At `2s = 1` the Gamma factors cancel and the rate is the harmonic `1/k`,
//! whence the family's name. The total departure rate `Σ_k c_k(n)` has no
//! closed form and is evaluated numerically.
//!
//! The one-shot [`rate`] goes through log-gamma so it stays valid for any
//! real spin and large `n`. The event loop instead uses [`RateTable`], which
//! grows per-occupation cumulative rate rows lazily through the exact
//! rational recurrence
//!
//! ```text
//! A_1 = n / (n − 1 + 2s),   A_k = A_{k−1} · (n−k+1)/(n−k+2s),   c_k = A_k / k
//! ```
//!
//! so selecting the jump size is a binary search and no Gamma evaluation
//! sits on the hot path.

use crate::numerics::log_gamma;

/// Rate for `k` particles to leave a site of occupation `n` toward one fixed
/// neighbor. Zero when `k = 0` or `k > n`.
pub fn rate(n: u64, k: u64, spin: f64) -> f64 {
    if k == 0 || k > n {
        return 0.0;
    }
    let nf = n as f64;
    let kf = k as f64;
    let two_s = 2.0 * spin;
    let log_ratio = log_gamma(nf + 1.0).unwrap() + log_gamma(nf - kf + two_s).unwrap()
        - log_gamma(nf - kf + 1.0).unwrap()
        - log_gamma(nf + two_s).unwrap();
    log_ratio.exp() / kf
}

/// Total departure rate toward one neighbor, `Σ_{k=1..n} c_k(n)`.
pub fn total_rate(n: u64, spin: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let two_s = 2.0 * spin;
    let nf = n as f64;
    let mut a = nf / (nf - 1.0 + two_s);
    let mut sum = a; // k = 1 term (A_1 / 1)
    for k in 2..=n {
        let kf = k as f64;
        a *= (nf - kf + 1.0) / (nf - kf + two_s);
        sum += a / kf;
    }
    sum
}

/// Lazily grown per-occupation cumulative rate rows.
///
/// `row(n)[j-1] = Σ_{k ≤ j} c_k(n)`; rows are built on first use, so memory
/// tracks the largest occupation actually reached by a trajectory.
#[derive(Debug, Clone)]
pub struct RateTable {
    spin: f64,
    rows: Vec<Option<Box<[f64]>>>,
}

impl RateTable {
    pub fn new(spin: f64) -> Self {
        RateTable {
            spin,
            rows: Vec::new(),
        }
    }

    pub fn spin(&self) -> f64 {
        self.spin
    }

    fn build_row(n: u64, spin: f64) -> Box<[f64]> {
        let two_s = 2.0 * spin;
        let nf = n as f64;
        let mut cum = Vec::with_capacity(n as usize);
        let mut a = nf / (nf - 1.0 + two_s);
        let mut sum = a;
        cum.push(sum);
        for k in 2..=n {
            let kf = k as f64;
            a *= (nf - kf + 1.0) / (nf - kf + two_s);
            sum += a / kf;
            cum.push(sum);
        }
        cum.into_boxed_slice()
    }

    fn row(&mut self, n: u64) -> &[f64] {
        let idx = n as usize;
        if idx >= self.rows.len() {
            self.rows.resize(idx + 1, None);
        }
        if self.rows[idx].is_none() {
            self.rows[idx] = Some(Self::build_row(n, self.spin));
        }
        self.rows[idx].as_deref().unwrap()
    }

    /// Total one-directional departure rate at occupation `n`.
    pub fn total(&mut self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            *self.row(n).last().unwrap()
        }
    }

    /// Select the jump size for a uniform draw `u ∈ [0, 1)`: the smallest
    /// `k` whose cumulative rate covers `u · total`.
    pub fn pick_count(&mut self, n: u64, u: f64) -> u64 {
        debug_assert!(n >= 1);
        let row = self.row(n);
        let target = u * row[row.len() - 1];
        (row.partition_point(|&c| c <= target) as u64 + 1).min(n)
    }

    /// Tail sum `Σ_{k > threshold} c_k(n)`; `threshold ≤ 0` gives the total.
    pub fn tail(&mut self, n: u64, threshold: i64) -> f64 {
        if n == 0 || threshold >= n as i64 {
            return 0.0;
        }
        let row = self.row(n);
        let total = row[row.len() - 1];
        if threshold <= 0 {
            total
        } else {
            total - row[(threshold - 1) as usize]
        }
    }
}
