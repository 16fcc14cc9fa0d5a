//! Linear congruential generators with a compact, beacon-sized state.
//!
//! Only the evolving `state` is ever put on the air. Multiplier, increment and
//! modulus are network-wide configuration known to every node.

use thiserror::Error;

/// Number of bytes used to carry an LCG state inside a beacon.
pub const ENCODED_LEN: usize = 6;

const MAX_MODULUS: u64 = 1 << 48;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PrngError {
    #[error("encoded LCG state must be exactly {ENCODED_LEN} bytes, got {0}")]
    BadLength(usize),
    #[error("modulus {0} is not a power of two in [2, 2^48]")]
    BadModulus(u64),
    #[error("state {state} is out of range for modulus {modulus}")]
    StateOutOfRange { state: u64, modulus: u64 },
}

/// A linear congruential generator `x' = (a*x + c) mod m`, `m` a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LcgState {
    pub state: u64,
    pub multiplier: u64,
    pub increment: u64,
    pub modulus: u64,
}

impl LcgState {
    /// Inter-beacon generator constants (full period mod 2^31).
    pub const PRIMARY_MULTIPLIER: u64 = 1_103_515_245;
    pub const PRIMARY_INCREMENT: u64 = 12_345;
    pub const PRIMARY_MODULUS: u64 = 1 << 31;

    /// Sub-beacon probability generator constants (full period mod 2^32).
    /// They differ from the primary ones so that a reseeded sub-beacon stream
    /// is not just the continuation of the inter-beacon stream.
    pub const SUB_MULTIPLIER: u64 = 22_695_477;
    pub const SUB_INCREMENT: u64 = 1;
    pub const SUB_MODULUS: u64 = 1 << 32;

    pub fn new(state: u64, multiplier: u64, increment: u64, modulus: u64) -> Result<Self, PrngError> {
        if !(2..=MAX_MODULUS).contains(&modulus) || !modulus.is_power_of_two() {
            return Err(PrngError::BadModulus(modulus));
        }
        if state >= modulus {
            return Err(PrngError::StateOutOfRange { state, modulus });
        }
        Ok(Self {
            state,
            multiplier: multiplier & (modulus - 1),
            increment: increment & (modulus - 1),
            modulus,
        })
    }

    /// Inter-beacon generator seeded with `seed` (reduced modulo 2^31).
    pub fn primary(seed: u64) -> Self {
        Self {
            state: seed & (Self::PRIMARY_MODULUS - 1),
            multiplier: Self::PRIMARY_MULTIPLIER,
            increment: Self::PRIMARY_INCREMENT,
            modulus: Self::PRIMARY_MODULUS,
        }
    }

    /// Sub-beacon generator seeded with `seed` (reduced modulo 2^32).
    pub fn sub(seed: u64) -> Self {
        Self {
            state: seed & (Self::SUB_MODULUS - 1),
            multiplier: Self::SUB_MULTIPLIER,
            increment: Self::SUB_INCREMENT,
            modulus: Self::SUB_MODULUS,
        }
    }

    /// Same constants, different state.
    pub fn with_state(&self, state: u64) -> Result<Self, PrngError> {
        Self::new(state, self.multiplier, self.increment, self.modulus)
    }

    /// Advances the generator and returns `(u, next)` with `u = next.state / modulus`.
    pub fn next(&self) -> (f64, LcgState) {
        // m divides 2^64, so wrapping arithmetic followed by masking is exact.
        let mask = self.modulus - 1;
        let state = self
            .multiplier
            .wrapping_mul(self.state)
            .wrapping_add(self.increment)
            & mask;
        let next = LcgState { state, ..*self };
        (state as f64 / self.modulus as f64, next)
    }

    /// Infinite stream of uniforms starting after the current state.
    pub fn uniforms(self) -> impl Iterator<Item = f64> {
        let mut s = self;
        std::iter::from_fn(move || {
            let (u, n) = s.next();
            s = n;
            Some(u)
        })
    }

    /// Little-endian 6-byte encoding of the state only.
    pub fn encode_state(&self) -> [u8; ENCODED_LEN] {
        let bytes = self.state.to_le_bytes();
        let mut out = [0u8; ENCODED_LEN];
        out.copy_from_slice(&bytes[..ENCODED_LEN]);
        out
    }

    /// Decodes a state produced by [`encode_state`](Self::encode_state) and
    /// attaches the network-wide constants of `template`.
    pub fn decode_state(bytes: &[u8], template: &LcgState) -> Result<LcgState, PrngError> {
        if bytes.len() != ENCODED_LEN {
            return Err(PrngError::BadLength(bytes.len()));
        }
        let mut buf = [0u8; 8];
        buf[..ENCODED_LEN].copy_from_slice(bytes);
        template.with_state(u64::from_le_bytes(buf))
    }
}
