use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::rare_sets::Engine;

/// Knobs shared by every certificate builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CertifyOptions {
    /// `None` picks [`Engine::auto`] for each domain.
    pub engine: Option<Engine>,
    /// Random members checked per family when exhaustive checking is too large.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { engine: None, samples: 64, seed: 0x5eed_c0de }
    }
}

impl CertifyOptions {
    pub fn with_engine(engine: Engine) -> Self {
        CertifyOptions { engine: Some(engine), ..Default::default() }
    }

    pub fn engine_for(&self, domain_log2: u32) -> Engine {
        self.engine.unwrap_or_else(|| Engine::auto(domain_log2))
    }

    /// A generator that depends only on the seed and the tags, never on
    /// scheduling, so parallel runs sample the same members.
    pub fn rng(&self, tags: &[u64]) -> ChaCha8Rng {
        let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for &t in tags {
            h = splitmix(h ^ t);
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
