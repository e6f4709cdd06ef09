//! Deterministic parallel scans over integer weights.
//!
//! Weights are visited in the canonical order `0, +1, -1, +2, -2, ...`; the
//! position of a weight in that order is its *rank*. Work is cut into fixed
//! chunks of ranks that do not depend on the number of threads, and results
//! are merged by rank, so every scan returns the same answer on any pool.

use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

/// Ranks per chunk.
pub const CHUNK_LEN: u64 = 4096;
/// Chunks evaluated together before a first-hit scan checks for a hit.
pub const BATCH_CHUNKS: u64 = 64;
/// Draws per random sub-stream.
pub const STREAM_LEN: u64 = 4096;

/// Weight at position `rank` of `0, +1, -1, +2, -2, ...`.
#[inline]
pub fn canonical_weight(rank: u64) -> i64 {
    let magnitude = rank.div_ceil(2) as i64;
    if rank % 2 == 1 {
        magnitude
    } else {
        -magnitude
    }
}

#[inline]
pub fn canonical_rank(weight: i64) -> u64 {
    let m = weight.unsigned_abs();
    if weight > 0 {
        2 * m - 1
    } else {
        2 * m
    }
}

/// Number of ranks covering all weights with `|q| <= cap`.
pub fn rank_count(cap: u64) -> u64 {
    cap.saturating_mul(2).saturating_add(1)
}

fn chunk_ranges(start: u64, end: u64) -> Vec<(u64, u64)> {
    (start..end)
        .step_by(CHUNK_LEN as usize)
        .map(|lo| (lo, (lo + CHUNK_LEN).min(end)))
        .collect()
}

/// Smallest rank in `0..end` whose weight the probe accepts.
///
/// `make_probe` builds one probe per chunk, so probes may keep scratch state.
pub fn first_hit<T, E, P>(
    end: u64,
    make_probe: impl Fn() -> P + Sync,
) -> Result<Option<(u64, T)>, E>
where
    T: Send,
    E: Send,
    P: FnMut(i64) -> Result<Option<T>, E>,
{
    let batch_len = CHUNK_LEN * BATCH_CHUNKS;
    let mut batch_start = 0;
    while batch_start < end {
        let batch_end = batch_start.saturating_add(batch_len).min(end);
        let results: Vec<Result<Option<(u64, T)>, E>> = chunk_ranges(batch_start, batch_end)
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut probe = make_probe();
                for rank in lo..hi {
                    if let Some(hit) = probe(canonical_weight(rank))? {
                        return Ok(Some((rank, hit)));
                    }
                }
                Ok(None)
            })
            .collect();
        for result in results {
            if let Some(hit) = result? {
                return Ok(Some(hit));
            }
        }
        batch_start = batch_end;
    }
    Ok(None)
}

/// Rank in `0..end` with the smallest score; ties go to the smaller rank.
pub fn argmin<E, S>(end: u64, make_scorer: impl Fn() -> S + Sync) -> Result<Option<(u64, f64)>, E>
where
    E: Send,
    S: FnMut(i64) -> Result<f64, E>,
{
    let per_chunk: Vec<Result<Option<(u64, f64)>, E>> = chunk_ranges(0, end)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut score = make_scorer();
            let mut best: Option<(u64, f64)> = None;
            for rank in lo..hi {
                let s = score(canonical_weight(rank))?;
                if best.is_none_or(|(_, b)| s < b) {
                    best = Some((rank, s));
                }
            }
            Ok(best)
        })
        .collect();
    let mut best: Option<(u64, f64)> = None;
    for chunk in per_chunk {
        if let Some((rank, s)) = chunk? {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((rank, s));
            }
        }
    }
    Ok(best)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `total` draws into `(stream, count)` pieces of [`STREAM_LEN`].
pub fn streams(total: u64) -> Vec<(u64, u64)> {
    (0..total.div_ceil(STREAM_LEN))
        .map(|s| (s, STREAM_LEN.min(total - s * STREAM_LEN)))
        .collect()
}

/// Uniform draw from `[-cap, cap]` for caps of any size.
pub fn uniform_weight<R: Rng>(rng: &mut R, cap: &BigUint) -> BigInt {
    let span: BigUint = cap * 2u32 + 1u32;
    let bits = span.bits();
    let bytes = bits.div_ceil(8) as usize;
    let excess = (bytes as u64 * 8 - bits) as u32;
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill(&mut buf[..]);
        let candidate = BigUint::from_bytes_le(&buf) >> excess;
        if candidate < span {
            return BigInt::from(candidate) - BigInt::from(cap.clone());
        }
    }
}
