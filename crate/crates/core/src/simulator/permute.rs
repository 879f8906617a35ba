use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::record::StreamRecord;

use super::rng::SimRng;

/// Block size of [`Order::Block32`].
pub const BLOCK_LEN: usize = 32;

/// How much temporal structure to keep when replaying a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    /// Original order.
    Chronological,
    /// Consecutive blocks of 32 records, block order shuffled.
    Block32,
    /// Every record shuffled independently.
    Shuffle,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::Chronological, Order::Block32, Order::Shuffle];

    pub fn name(self) -> &'static str {
        match self {
            Order::Chronological => "chronological",
            Order::Block32 => "block32",
            Order::Shuffle => "shuffle",
        }
    }
}

impl std::str::FromStr for Order {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Order::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| crate::Error::param("order", format!("unknown order `{s}`")))
    }
}

/// Reorders a stream. Non-chronological orders renumber `t` from 0 and keep
/// the original index in `meta["orig_t"]`; chronological returns the input
/// untouched.
pub fn permute_stream(stream: &[StreamRecord], order: Order, seed: u64) -> Vec<StreamRecord> {
    let mut idx: Vec<usize> = (0..stream.len()).collect();
    match order {
        Order::Chronological => return stream.to_vec(),
        Order::Block32 => {
            let mut blocks: Vec<&[usize]> = idx.chunks(BLOCK_LEN).collect();
            SimRng::new(seed).shuffle(&mut blocks);
            idx = blocks.concat();
        }
        Order::Shuffle => SimRng::new(seed).shuffle(&mut idx),
    }
    idx.into_iter()
        .enumerate()
        .map(|(t, i)| {
            let mut r = stream[i].clone();
            r.meta.insert("orig_t".into(), Value::from(r.t));
            r.t = t as u64;
            r
        })
        .collect()
}
