//! Process-global accounting of matrix storage, in float elements.
//!
//! Every [`Matrix`](super::Matrix) registers its element count on
//! construction and deregisters it on drop. The running total and its
//! high-water mark are what the benchmarks report as memory: counting
//! payload floats instead of heap bytes keeps the numbers identical
//! across allocators and platforms.
//!
//! The counters are atomics, so concurrent use is safe, but peak readings
//! are only meaningful when the measured section runs single-threaded.

use std::sync::atomic::{AtomicU64, Ordering};

static LIVE_FLOATS: AtomicU64 = AtomicU64::new(0);
static PEAK_FLOATS: AtomicU64 = AtomicU64::new(0);
static LARGEST_BLOCK_FLOATS: AtomicU64 = AtomicU64::new(0);

/// Handle to the global float-allocation counter.
pub struct AllocationCounter;

impl AllocationCounter {
    /// Float elements currently held by live matrices.
    pub fn live_floats() -> u64 {
        LIVE_FLOATS.load(Ordering::SeqCst)
    }

    /// High-water mark of [`live_floats`](Self::live_floats) since the
    /// last [`reset`](Self::reset).
    pub fn peak_floats() -> u64 {
        PEAK_FLOATS.load(Ordering::SeqCst)
    }

    /// Element count of the largest single matrix constructed since the
    /// last [`reset`](Self::reset).
    pub fn largest_block_floats() -> u64 {
        LARGEST_BLOCK_FLOATS.load(Ordering::SeqCst)
    }

    /// Start a new measurement window: the peak collapses to the current
    /// live total and the largest-block record clears.
    pub fn reset() {
        PEAK_FLOATS.store(LIVE_FLOATS.load(Ordering::SeqCst), Ordering::SeqCst);
        LARGEST_BLOCK_FLOATS.store(0, Ordering::SeqCst);
    }
}

pub(crate) fn record_alloc(floats: usize) {
    let floats = floats as u64;
    let live = LIVE_FLOATS.fetch_add(floats, Ordering::SeqCst) + floats;
    PEAK_FLOATS.fetch_max(live, Ordering::SeqCst);
    LARGEST_BLOCK_FLOATS.fetch_max(floats, Ordering::SeqCst);
}

pub(crate) fn record_free(floats: usize) {
    LIVE_FLOATS.fetch_sub(floats as u64, Ordering::SeqCst);
}
