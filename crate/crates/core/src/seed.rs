//! Reproducible random streams.
//!
//! Every replicate draws from its own ChaCha8 stream, keyed by the master seed
//! and a purpose tag, with the replicate index as the stream number. Results
//! therefore do not depend on how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Different purposes never share randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Gaussian,
    Exponential,
    Truncation,
    Uniform,
    /// Gaussian draws for a second, independent process (e.g. a limit law).
    Reference,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Gaussian => 0x6761_7573_7300_0001,
            Stream::Exponential => 0x6578_706f_6e00_0002,
            Stream::Truncation => 0x7472_756e_6300_0003,
            Stream::Uniform => 0x756e_6966_0000_0004,
            Stream::Reference => 0x7265_6600_0000_0005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    master: u64,
}

impl Seeds {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// A child family for an independent sub-experiment.
    pub fn derive(&self, label: &str) -> Seeds {
        let mut h = self.master ^ 0x9e37_79b9_7f4a_7c15;
        for b in label.bytes() {
            h = splitmix(h ^ u64::from(b));
        }
        Seeds { master: h }
    }

    pub fn rng(&self, stream: Stream, replicate: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.master ^ stream.tag()));
        rng.set_stream(replicate);
        rng
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = Seeds::new(42);
        let a: u64 = s.rng(Stream::Gaussian, 7).random();
        let b: u64 = s.rng(Stream::Gaussian, 7).random();
        let c: u64 = s.rng(Stream::Gaussian, 8).random();
        let d: u64 = s.rng(Stream::Exponential, 7).random();
        let e: u64 = Seeds::new(43).rng(Stream::Gaussian, 7).random();
        assert_eq!(a, b);
        assert!(a != c && a != d && a != e);
        assert_ne!(s.derive("lhs"), s.derive("rhs"));
    }
}
