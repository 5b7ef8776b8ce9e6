#![allow(dead_code)]

use descriptor_core::corpus::{random_spectrum, Constructed};
use descriptor_core::pencil::DecompositionOptions;
use descriptor_core::solver::DescriptorSystem;
use descriptor_core::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nilpotent block layouts used across the tests, indexed by `choice % 6`.
pub fn blocks(choice: usize) -> Vec<usize> {
    match choice % 6 {
        0 => vec![],
        1 => vec![1],
        2 => vec![2],
        3 => vec![3],
        4 => vec![2, 1],
        _ => vec![1, 1],
    }
}

/// A pencil with a random slow spectrum of dimension `1..=slow_max` inside
/// `radius`, the given nilpotent layout and conditioning at most 5.
pub fn constructed(rng: &mut ChaCha8Rng, slow: usize, pairs: usize, nilpotent: &[usize], radius: f64) -> Constructed {
    let spectrum = random_spectrum(rng, slow, pairs, radius, 0.1);
    Constructed::random(rng, spectrum.matrix(), nilpotent, 5.0).expect("canonical data is valid")
}

pub fn system(c: &Constructed) -> DescriptorSystem {
    let m = c.pencil.dim();
    DescriptorSystem::decompose(c.pencil.clone(), DMatrix::identity(m, m), None, &DecompositionOptions::default())
        .expect("constructed pencils are regular")
}
