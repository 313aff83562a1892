//! Seeded random streams, one per concern and replication.
//!
//! Every stream seed is a SplitMix64 mix of the master seed, the replication
//! key and the stream name, so two protocols run with the same key see the
//! same activation draws.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Activation,
    Acb,
    Preamble,
    Priority,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Activation => 0x6163_7469_7661_7465,
            Stream::Acb => 0x0000_0000_0061_6362,
            Stream::Preamble => 0x7072_6561_6d62_6c65,
            Stream::Priority => 0x7072_696f_7269_7479,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes an arbitrary label into a 64-bit key (FNV-1a, then SplitMix64).
pub fn label_key(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(h)
}

pub fn stream_seed(master: u64, key: u64, stream: Stream) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(key)) ^ stream.tag())
}

pub fn stream(master: u64, key: u64, stream: Stream) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, key, stream))
}

/// The four random streams consumed by one replication.
#[derive(Debug, Clone)]
pub struct RoundStreams {
    pub acb: StreamRng,
    pub preamble: StreamRng,
    pub priority: StreamRng,
}

impl RoundStreams {
    pub fn new(master: u64, key: u64) -> Self {
        Self {
            acb: stream(master, key, Stream::Acb),
            preamble: stream(master, key, Stream::Preamble),
            priority: stream(master, key, Stream::Priority),
        }
    }
}
