//! Discrete torus geometry and occupation configurations.
//!
//! Sites live in `{0, …, N−1}` with neighbor arithmetic wrapping modulo `N`.
//! A configuration is either a vector of non-negative energies (gKMP) or a
//! vector of particle counts (dKMP, Harm). Configurations serialize to CSV
//! rows `(site, value)` and to a compact binary snapshot:
//!
//! ```text
//! magic "OCC1" (4 bytes) | kind u8 (0 energy, 1 particle) | n u64 LE | payload
//! ```
//!
//! with the payload `n` little-endian `f64` (energy) or `u64` (particle)
//! words.

use std::io::{Read, Write};

use crate::{Error, Result};

/// The discrete one-dimensional torus with `n ≥ 2` sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Torus {
    n: usize,
}

impl Torus {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidPlan(format!("torus needs at least 2 sites, got {n}")));
        }
        Ok(Torus { n })
    }

    #[inline]
    pub fn sites(&self) -> usize {
        self.n
    }

    /// Periodic neighbor: `(x + dir) mod n` with `dir ∈ {+1, −1}`.
    #[inline]
    pub fn neighbor(&self, x: usize, dir: i8) -> usize {
        debug_assert!(x < self.n);
        match dir {
            1 => {
                if x + 1 == self.n {
                    0
                } else {
                    x + 1
                }
            }
            -1 => {
                if x == 0 {
                    self.n - 1
                } else {
                    x - 1
                }
            }
            _ => panic!("direction must be +1 or -1"),
        }
    }
}

/// Occupation variables on the torus: real-valued energies or integer
/// particle counts.
#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Energy(Vec<f64>),
    Particle(Vec<u64>),
}

impl Config {
    pub fn zeros_energy(n: usize) -> Self {
        Config::Energy(vec![0.0; n])
    }

    pub fn zeros_particle(n: usize) -> Self {
        Config::Particle(vec![0; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        match self {
            Config::Energy(v) => v.len(),
            Config::Particle(v) => v.len(),
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_particle(&self) -> bool {
        matches!(self, Config::Particle(_))
    }

    /// Occupation at `x` as a double.
    #[inline]
    pub fn value(&self, x: usize) -> f64 {
        match self {
            Config::Energy(v) => v[x],
            Config::Particle(v) => v[x] as f64,
        }
    }

    /// Conserved quantity `Σ_x η_x`.
    pub fn total_mass(&self) -> f64 {
        match self {
            Config::Energy(v) => v.iter().sum(),
            Config::Particle(v) => v.iter().map(|&k| k as f64).sum(),
        }
    }

    /// Exact particle total; `None` for energy configurations.
    pub fn total_particles(&self) -> Option<u64> {
        match self {
            Config::Particle(v) => Some(v.iter().sum()),
            Config::Energy(_) => None,
        }
    }

    /// CSV rows `site,value` with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "site,value")?;
        for x in 0..self.len() {
            match self {
                Config::Energy(v) => writeln!(w, "{x},{}", v[x])?,
                Config::Particle(v) => writeln!(w, "{x},{}", v[x])?,
            }
        }
        Ok(())
    }

    /// Compact binary snapshot (see module docs for the layout).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"OCC1")?;
        match self {
            Config::Energy(v) => {
                w.write_all(&[0u8])?;
                w.write_all(&(v.len() as u64).to_le_bytes())?;
                for &e in v {
                    w.write_all(&e.to_le_bytes())?;
                }
            }
            Config::Particle(v) => {
                w.write_all(&[1u8])?;
                w.write_all(&(v.len() as u64).to_le_bytes())?;
                for &k in v {
                    w.write_all(&k.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Inverse of [`Config::write_snapshot`].
    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"OCC1" {
            return Err(Error::BadSnapshot(format!("magic {magic:?}")));
        }
        let mut kind = [0u8; 1];
        r.read_exact(&mut kind)?;
        let mut len_bytes = [0u8; 8];
        r.read_exact(&mut len_bytes)?;
        let n = u64::from_le_bytes(len_bytes) as usize;
        let mut word = [0u8; 8];
        match kind[0] {
            0 => {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    r.read_exact(&mut word)?;
                    v.push(f64::from_le_bytes(word));
                }
                Ok(Config::Energy(v))
            }
            1 => {
                let mut v = Vec::with_capacity(n);
                for _ in 0..n {
                    r.read_exact(&mut word)?;
                    v.push(u64::from_le_bytes(word));
                }
                Ok(Config::Particle(v))
            }
            k => Err(Error::BadSnapshot(format!("unknown kind byte {k}"))),
        }
    }
}

/// Discrete Laplacian `Δ_N η_x = N²(η_{x+1} + η_{x−1} − 2η_x)`.
pub fn discrete_laplacian(config: &Config, x: usize, torus: Torus) -> f64 {
    let n2 = (torus.sites() * torus.sites()) as f64;
    let right = config.value(torus.neighbor(x, 1));
    let left = config.value(torus.neighbor(x, -1));
    n2 * (right + left - 2.0 * config.value(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn neighbor_wraps() {
        let t = Torus::new(8).unwrap();
        assert_eq!(t.neighbor(7, 1), 0);
        assert_eq!(t.neighbor(0, -1), 7);
        assert_eq!(t.neighbor(3, 1), 4);
        assert!(Torus::new(1).is_err());
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(Config::zeros_particle(5).total_mass(), 0.0);
        let c = Config::Particle(vec![2, 3, 5]);
        assert_eq!(c.total_mass(), 10.0);
        assert_eq!(c.total_particles(), Some(10));
    }

    #[test]
    fn laplacian_examples() {
        let t = Torus::new(4).unwrap();
        let constant = Config::Energy(vec![2.5; 4]);
        for x in 0..4 {
            assert_eq!(discrete_laplacian(&constant, x, t), 0.0);
        }
        // N = 4, η = (0,1,0,0): Δ at x = 0 is 16·(1 + 0 − 0) = 16
        let bump = Config::Particle(vec![0, 1, 0, 0]);
        assert_eq!(discrete_laplacian(&bump, 0, t), 16.0);
        assert_eq!(discrete_laplacian(&bump, 1, t), -32.0);
    }

    #[test]
    fn laplacian_linearity() {
        let t = Torus::new(6).unwrap();
        let a = Config::Energy(vec![1.0, 4.0, 2.0, 0.5, 3.0, 0.0]);
        let b = Config::Energy(vec![2.0, 1.0, 0.0, 5.0, 1.5, 2.5]);
        let sum = Config::Energy(
            (0..6).map(|x| a.value(x) + 2.0 * b.value(x)).collect(),
        );
        for x in 0..6 {
            let lhs = discrete_laplacian(&sum, x, t);
            let rhs = discrete_laplacian(&a, x, t) + 2.0 * discrete_laplacian(&b, x, t);
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn laplacian_telescopes_to_zero(values in proptest::collection::vec(0.0f64..50.0, 4..32)) {
            let t = Torus::new(values.len()).unwrap();
            let c = Config::Energy(values);
            let total: f64 = (0..c.len()).map(|x| discrete_laplacian(&c, x, t)).sum();
            let scale = (t.sites() * t.sites()) as f64 * c.total_mass().max(1.0);
            prop_assert!(total.abs() <= 1e-12 * scale);
        }

        #[test]
        fn snapshot_roundtrip_energy(values in proptest::collection::vec(0.0f64..100.0, 2..64)) {
            let c = Config::Energy(values);
            let mut buf = Vec::new();
            c.write_snapshot(&mut buf).unwrap();
            let back = Config::read_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(c, back);
        }

        #[test]
        fn snapshot_roundtrip_particle(values in proptest::collection::vec(0u64..1000, 2..64)) {
            let c = Config::Particle(values);
            let mut buf = Vec::new();
            c.write_snapshot(&mut buf).unwrap();
            let back = Config::read_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(c, back);
        }
    }

    #[test]
    fn snapshot_rejects_garbage() {
        let bad = b"NOPE\x00\x00\x00\x00\x00\x00\x00\x00\x00";
        assert!(Config::read_snapshot(&bad[..]).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = Config::Particle(vec![4, 0, 7]);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "site,value");
        assert_eq!(lines[2], "1,0");
        assert_eq!(lines.len(), 4);
    }
}
