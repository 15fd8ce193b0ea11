//! Deterministic splittable RNG for path simulation.
//!
//! SplitMix64: stable output across platforms, trivially splittable by
//! seeding one stream per path index. Not cryptographically secure.

/// Deterministic RNG with a single 64-bit state.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Stream for one path: a pure function of `(base_seed, path_index)`,
    /// identical no matter which worker thread draws it.
    pub fn for_path(base_seed: u64, path_index: u64) -> Self {
        let salted = base_seed ^ mix(path_index.wrapping_add(1).wrapping_mul(GAMMA));
        Self { state: mix(salted) }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    #[inline]
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic() {
        let mut a = SplitMix64::for_path(42, 7);
        let mut b = SplitMix64::for_path(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ_between_paths_and_seeds() {
        let first: Vec<u64> = {
            let mut r = SplitMix64::for_path(42, 0);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let other_path: Vec<u64> = {
            let mut r = SplitMix64::for_path(42, 1);
            (0..8).map(|_| r.next_u64()).collect()
        };
        let other_seed: Vec<u64> = {
            let mut r = SplitMix64::for_path(43, 0);
            (0..8).map(|_| r.next_u64()).collect()
        };
        assert_ne!(first, other_path);
        assert_ne!(first, other_seed);
    }

    #[test]
    fn uniforms_land_in_unit_interval_with_sane_mean() {
        let mut r = SplitMix64::new(1);
        let n = 10_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn gaussian_has_sane_moments() {
        let mut r = SplitMix64::new(9);
        let n = 20_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let g = r.next_gaussian();
            s1 += g;
            s2 += g * g;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }
}
