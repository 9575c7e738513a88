use super::{SchedulingContext, SchedulingPolicy, WaitQueue};
use crate::resource::{Headroom, ResourcePool};

/// Longest fitting prefix of `queue`; nothing passes the first job that
/// does not fit.
pub fn select_fcfs(queue: &WaitQueue, pool: &ResourcePool) -> Vec<usize> {
    fcfs_prefix(queue, &mut Headroom::of(pool))
}

pub(crate) fn fcfs_prefix(queue: &WaitQueue, room: &mut Headroom) -> Vec<usize> {
    let mut picked = Vec::new();
    for (pos, entry) in queue.iter().enumerate() {
        if !room.fits(&entry.job) {
            break;
        }
        room.take(&entry.job);
        picked.push(pos);
    }
    picked
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FcfsPolicy;

impl SchedulingPolicy for FcfsPolicy {
    fn name(&self) -> &str {
        "fcfs"
    }

    fn select(&self, ctx: &SchedulingContext<'_>) -> Vec<usize> {
        select_fcfs(ctx.queue, ctx.pool)
    }
}
