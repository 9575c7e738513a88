//! Runtime-ordered variants: sort by requested runtime, then apply the
//! FCFS prefix rule to the sorted queue.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{SchedulingContext, SchedulingPolicy, WaitQueue};
use crate::resource::{Headroom, ResourcePool};

fn select_by_key<K: Ord>(queue: &WaitQueue, pool: &ResourcePool, key: impl Fn(u64) -> K) -> Vec<usize> {
    // Only the fitting prefix of the sorted order is needed, so heapify and
    // pop until the first misfit instead of sorting the whole queue. The
    // position breaks ties, which keeps equal keys in arrival order.
    let mut heap: BinaryHeap<Reverse<(K, usize)>> =
        (0..queue.len()).map(|pos| Reverse((key(queue.job(pos).requested_runtime), pos))).collect();
    let mut room = Headroom::of(pool);
    let mut picked = Vec::new();
    while let Some(Reverse((_, pos))) = heap.pop() {
        let job = queue.job(pos);
        if !room.fits(job) {
            break;
        }
        room.take(job);
        picked.push(pos);
    }
    picked
}

pub fn select_sjf(queue: &WaitQueue, pool: &ResourcePool) -> Vec<usize> {
    select_by_key(queue, pool, |r| r)
}

pub fn select_ljf(queue: &WaitQueue, pool: &ResourcePool) -> Vec<usize> {
    select_by_key(queue, pool, Reverse)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SjfPolicy;

impl SchedulingPolicy for SjfPolicy {
    fn name(&self) -> &str {
        "sjf"
    }

    fn select(&self, ctx: &SchedulingContext<'_>) -> Vec<usize> {
        select_sjf(ctx.queue, ctx.pool)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LjfPolicy;

impl SchedulingPolicy for LjfPolicy {
    fn name(&self) -> &str {
        "ljf"
    }

    fn select(&self, ctx: &SchedulingContext<'_>) -> Vec<usize> {
        select_ljf(ctx.queue, ctx.pool)
    }
}
