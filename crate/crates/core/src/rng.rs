//! Reproducible random substreams.
//!
//! A run has one master seed. Every random quantity is drawn from its own
//! substream addressed by `(purpose, round, index)`, so schedules, client
//! data, canaries and noise can each be regenerated independently and in any
//! order. The address is hashed into the 256-bit state of a xoshiro256++
//! generator with splitmix64.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::scalar::Real;

/// What a substream is used for. The discriminant is part of the address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Canary = 1,
    UnobservedCanary = 2,
    Noise = 3,
    ClientData = 4,
    Schedule = 5,
    Auxiliary = 6,
}

pub type SubstreamRng = Xoshiro256PlusPlus;

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of one substream under a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub purpose: Purpose,
    pub round: u64,
    pub index: u64,
}

impl StreamKey {
    pub fn new(seed: u64, purpose: Purpose, round: u64, index: u64) -> Self {
        Self { seed, purpose, round, index }
    }

    /// Opens the generator for this address.
    pub fn rng(&self) -> SubstreamRng {
        // Each field goes through the full finalizer; chaining only the
        // additive state would make nearby addresses collide.
        let mut h = {
            let mut s = self.seed;
            splitmix64(&mut s)
        };
        for word in [self.purpose as u64, self.round, self.index] {
            let mut s = h ^ word;
            h = splitmix64(&mut s);
        }
        let mut state = h;
        let mut bytes = [0u8; 32];
        for chunk in bytes.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Xoshiro256PlusPlus::from_seed(bytes)
    }
}

/// Convenience wrapper: `StreamKey::new(..).rng()`.
pub fn substream(seed: u64, purpose: Purpose, round: u64, index: u64) -> SubstreamRng {
    StreamKey::new(seed, purpose, round, index).rng()
}

/// Fills `out` with independent standard normal draws.
///
/// Draws are made in `f64` and narrowed, so the `f32` and `f64` paths see
/// the same underlying variates.
pub fn fill_standard_normal<T: Real, R: rand::Rng + ?Sized>(rng: &mut R, out: &mut [T]) {
    for x in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *x = T::of(z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn same_address_same_stream() {
        let a: Vec<u64> = (0..4).map({
            let mut r = substream(7, Purpose::Canary, 0, 3);
            move |_| r.next_u64()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = substream(7, Purpose::Canary, 0, 3);
            move |_| r.next_u64()
        }).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn neighbouring_addresses_differ() {
        let first = |k: StreamKey| k.rng().next_u64();
        let base = StreamKey::new(7, Purpose::Canary, 0, 3);
        let variants = [
            StreamKey { seed: 8, ..base },
            StreamKey { purpose: Purpose::Noise, ..base },
            StreamKey { round: 1, ..base },
            StreamKey { index: 4, ..base },
        ];
        for v in variants {
            assert_ne!(first(base), first(v), "{v:?}");
        }
        // Swapping round and index must not alias.
        assert_ne!(
            first(StreamKey::new(1, Purpose::Noise, 2, 3)),
            first(StreamKey::new(1, Purpose::Noise, 3, 2))
        );
    }

    #[test]
    fn nearby_addresses_do_not_alias() {
        let purposes = [
            Purpose::Canary,
            Purpose::UnobservedCanary,
            Purpose::Noise,
            Purpose::ClientData,
            Purpose::Schedule,
            Purpose::Auxiliary,
        ];
        let mut seen = std::collections::HashSet::new();
        for seed in 0..4u64 {
            for purpose in purposes {
                for round in 0..8u64 {
                    for index in 0..64u64 {
                        let mut r = substream(seed, purpose, round, index);
                        assert!(seen.insert((r.next_u64(), r.next_u64())), "{seed} {purpose:?} {round} {index}");
                    }
                }
            }
        }
    }

    #[test]
    fn normal_fill_moments() {
        let mut rng = substream(1, Purpose::Auxiliary, 0, 0);
        let mut buf = vec![0.0f64; 200_000];
        fill_standard_normal(&mut rng, &mut buf);
        let n = buf.len() as f64;
        let mean = buf.iter().sum::<f64>() / n;
        let var = buf.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 5.0 / n.sqrt());
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n).sqrt());
    }
}
