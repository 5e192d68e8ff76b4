//! Seeded random number generation.
//!
//! One generator for the whole stack: splitmix64. There is no global RNG;
//! every stochastic operation takes an explicit `&mut Rng`, which is what
//! makes full-run reproducibility possible.

/// splitmix64 generator (Vigna's reference constants).
///
/// Identical seeds produce identical output sequences on every platform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)`: the top 53 bits of the next output divided
    /// by 2^53.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates shuffle, walking from the last index down with
    /// `swap index = floor(uniform * (i + 1))`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = (self.next_uniform() * (i + 1) as f64) as usize;
            items.swap(i, j);
        }
    }
}
