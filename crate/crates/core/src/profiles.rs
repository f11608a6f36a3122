//! Seeded random smooth radial profiles for property checks and oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::radial::{RadialField, SharedGrid};

/// Sum of one to three terms a e^{-(r/w)²} or a e^{-((r² - c²)/(2cw))²}; every
/// term is a smooth function of r², hence smooth on R^N. A shell term has
/// radial width about w near r = c, so w is kept well above the node spacing
/// of the default grid. With `signed` the amplitudes may be negative.
pub fn random_profile(grid: &SharedGrid, rng: &mut impl Rng, signed: bool) -> Result<RadialField> {
    let terms = rng.random_range(1..=3);
    let mut parts = Vec::with_capacity(terms);
    for _ in 0..terms {
        let amp = if signed {
            rng.random_range(-1.0..1.0)
        } else {
            rng.random_range(0.2..1.5)
        };
        let shell: f64 = if rng.random_bool(0.5) {
            rng.random_range(0.5..3.0)
        } else {
            0.0
        };
        let width: f64 = if shell > 0.0 {
            rng.random_range(0.3..1.0)
        } else {
            rng.random_range(0.4..2.0)
        };
        parts.push((amp, width, shell));
    }
    RadialField::from_fn(grid, |r| {
        parts
            .iter()
            .map(|&(a, w, c)| {
                if c == 0.0 {
                    a * (-(r / w).powi(2)).exp()
                } else {
                    a * (-((r * r - c * c) / (2.0 * c * w)).powi(2)).exp()
                }
            })
            .sum()
    })
}

pub fn random_profiles(grid: &SharedGrid, seed: u64, count: usize, signed: bool) -> Result<Vec<RadialField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_profile(grid, &mut rng, signed)).collect()
}
