//! The sampling PRNG: PCG32 (XSH-RR, 64-bit state) whose initial state and
//! stream selector are the first two outputs of splitmix64 over the user seed.
//!
//! Bounded draws use rejection against `2^32 mod bound` (or `2^64 mod bound`
//! for bounds above `u32::MAX`), so every value in `0..bound` is equally
//! likely. Reimplementations in other languages reproduce the same stream.

use rand_core::Rng;
use rand_pcg::Pcg32;

/// splitmix64 (Steele, Lea & Flood), used only to spread the user seed.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub struct SampleRng(Pcg32);

impl SampleRng {
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let state = sm.next_u64();
        let stream = sm.next_u64();
        SampleRng(Pcg32::new(state, stream))
    }

    /// Raw PCG32 with the reference `pcg32_srandom_r(initstate, initseq)`.
    pub fn from_pcg_state(initstate: u64, initseq: u64) -> Self {
        SampleRng(Pcg32::new(initstate, initseq))
    }

    pub fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    /// High word first.
    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        (hi << 32) | self.next_u32() as u64
    }

    /// Uniform integer in `0..bound`. Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        if bound <= u32::MAX as u64 {
            let b = bound as u32;
            let threshold = b.wrapping_neg() % b;
            loop {
                let r = self.next_u32();
                if r >= threshold {
                    return (r % b) as u64;
                }
            }
        }
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }
}
