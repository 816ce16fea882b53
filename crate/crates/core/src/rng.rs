//! Portable deterministic pseudo-random generator.
//!
//! SplitMix64 with Box-Muller gaussians. Every frozen structure in the
//! crate (sensing banks, hash embeddings, synthetic tasks) is generated
//! from this stream so that regeneration is bit-identical everywhere.

/// SplitMix64 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_A: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_B: u64 = 0x94D0_49BB_1331_11EB;

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Next raw 64-bit output; advances the state.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(MIX_A);
        z = (z ^ (z >> 27)).wrapping_mul(MIX_B);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1): next_u64 scaled by 2^-64.
    pub fn uniform01(&mut self) -> f64 {
        self.next_u64() as f64 * 2f64.powi(-64)
    }

    /// Standard gaussian via Box-Muller; consumes exactly two uniform draws.
    pub fn gaussian(&mut self) -> f64 {
        // 1 - u is in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.uniform01();
        let u2 = self.uniform01();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Fair coin flip.
    pub fn coin(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Vector of `dim` standard gaussians.
    pub fn gaussian_vec(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.gaussian()).collect()
    }

    /// Unit-norm gaussian direction of dimension `dim`.
    pub fn unit_vec(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v = self.gaussian_vec(dim);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// First `take` entries of a Fisher-Yates partial shuffle of 0..n.
    pub fn sample_without_replacement(&mut self, take: usize, n: usize) -> Vec<usize> {
        debug_assert!(take <= n);
        let mut arr: Vec<usize> = (0..n).collect();
        for j in 0..take {
            let t = j + self.below((n - j) as u64) as usize;
            arr.swap(j, t);
        }
        arr.truncate(take);
        arr
    }
}
