use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Reproducible random stream keyed by `(seed, stream_id)`.
///
/// Streams with the same key produce identical sequences. Distinct stream ids
/// select distinct ChaCha streams under the same key, so replicates can be
/// drawn in any order or in parallel without changing their values.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// An independent child stream, determined only by this stream's key and
    /// `tag` (not by how many draws have been taken).
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, mix_stream_id(&[self.stream_id, tag]))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable hash of a tuple of integers, used to derive stream ids such as
/// `(cell, replicate)`.
pub fn mix_stream_id(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x2545_f491_4f6c_dd1d, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
