//! SplitMix64. The generator and the derived draws are normative: a corpus is
//! reproducible byte for byte in any language that follows them.

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

/// One SplitMix64 step: returns `(new_state, output)`.
#[inline]
pub fn splitmix64_next(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (state, z ^ (z >> 31))
}

/// Uniform draw in `[0, 1)` from the top 53 bits of the output.
#[inline]
pub fn unit_interval(output: u64) -> f64 {
    (output >> 11) as f64 * INV_2_53
}

/// Returns `(new_state, u < p)` for one uniform `u`.
#[inline]
pub fn bernoulli(state: u64, p: f64) -> (u64, bool) {
    let (state, out) = splitmix64_next(state);
    (state, unit_interval(out) < p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
    draws: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state, draws: 0 }
    }

    /// Generator for the run at enumeration ordinal `ordinal` of a corpus.
    pub fn for_run(seed: u64, ordinal: u64) -> Self {
        Self::new(seed.wrapping_add(ordinal.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    /// Number of outputs consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn next_u64(&mut self) -> u64 {
        let (state, out) = splitmix64_next(self.state);
        self.state = state;
        self.draws += 1;
        out
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_interval(self.next_u64())
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// `floor(u * n)` for one uniform `u`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_f64() * n as f64) as usize).min(n - 1)
    }
}
