//! Seeded random constants.

use crate::C64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Derive an independent seed from a master seed and a counter.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    /// Uniform on the complex unit circle.
    pub fn unit_complex(&mut self) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * self.uniform())
    }

    pub fn unit_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.unit_complex()).collect()
    }

    /// Standard normal via Box-Muller.
    pub fn gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Complex normal with independent standard real and imaginary parts.
    pub fn complex_gaussian(&mut self) -> C64 {
        C64::new(self.gaussian(), self.gaussian())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_modulus() {
        let mut r = Rng::new(7);
        for _ in 0..100 {
            assert!((r.unit_complex().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn reproducible() {
        let a = Rng::new(3).unit_vec(5);
        let b = Rng::new(3).unit_vec(5);
        assert_eq!(a, b);
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }

    #[test]
    fn gaussian_moments() {
        let mut r = Rng::new(11);
        let xs: Vec<f64> = (0..20000).map(|_| r.gaussian()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }
}
