use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The one generator used for every stochastic simulation in the crate.
pub type SimRng = Xoshiro256PlusPlus;

/// Generator seeded from a single 64-bit value (expanded with SplitMix64).
pub fn seeded_rng(seed: u64) -> SimRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
