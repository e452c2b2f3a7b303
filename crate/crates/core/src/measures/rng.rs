use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator behind every [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// A named, reproducible random stream: ChaCha8 keyed by `seed`, on the
/// ChaCha stream `stream_id`. Identical pairs give identical sequences on
/// every platform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A sub-stream for work item `index`. Children of distinct indices, and
    /// of distinct parents, land on unrelated stream ids.
    pub fn child(&self, index: u64) -> RngStream {
        RngStream { seed: self.seed, stream_id: splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(1))) }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_streams_agree() {
        let a: Vec<u64> = (0..8)
            .map({
                let mut r = RngStream::new(7, 3).rng();
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..8)
            .map({
                let mut r = RngStream::new(7, 3).rng();
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn first_word_is_pinned() {
        // guards the cross-platform sequence against dependency drift
        let x: u64 = RngStream::new(0, 0).rng().random();
        let y: u64 = RngStream::new(0, 0).child(0).rng().random();
        assert_eq!((x, y), (13_080_132_717_333_068_652, 9_394_094_308_876_814_173));
    }

    #[test]
    fn children_are_distinct() {
        let s = RngStream::new(1, 0);
        let ids: std::collections::HashSet<u64> = (0..10_000).map(|i| s.child(i).stream_id).collect();
        assert_eq!(ids.len(), 10_000);
        assert_ne!(s.child(0).child(1).stream_id, s.child(1).child(0).stream_id);
    }
}
