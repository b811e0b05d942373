//! Deterministic generator shared bit-for-bit with the emitted C runtime.

const MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xorshift64* generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    /// Generator for table number `stream` (declaration order) under `seed`.
    /// The state is never zero.
    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let state = splitmix64(seed.wrapping_add(stream.wrapping_mul(GOLDEN_GAMMA)));
        Self {
            state: if state == 0 { GOLDEN_GAMMA } else { state },
        }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(MULTIPLIER)
    }

    /// +1 when the top bit of the next draw is clear, otherwise -1.
    pub fn next_bipolar(&mut self) -> i32 {
        if self.next_u64() >> 63 == 0 {
            1
        } else {
            -1
        }
    }
}
