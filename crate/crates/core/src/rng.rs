use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream used by every sampler in the crate.
pub type SimRng = ChaCha8Rng;

/// Independent, reproducible stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids are `domain << 32 | index`, so stages never share a stream.
pub(crate) fn stream_id(domain: u32, index: usize) -> u64 {
    (u64::from(domain) << 32) | index as u64
}

pub(crate) const DOMAIN_STAGE1: u32 = 1;
pub(crate) const DOMAIN_SUPPLEMENTAL: u32 = 2;
pub(crate) const DOMAIN_STAGE2: u32 = 3;
