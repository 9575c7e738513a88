//! EASY backfilling.
//!
//! The queue head gets a single reservation at the shadow time, the earliest
//! instant at which expected completions free enough capacity for it. A
//! later job may jump ahead only if it ends by the shadow time or fits in the
//! capacity left over once the head has taken its share. Estimates come from
//! requested runtimes; a job that overran its estimate is treated as ending
//! now, and the reservation is recomputed at every scheduling point.

use super::fcfs::fcfs_prefix;
use super::{RunningJob, SchedulingContext, SchedulingPolicy, WaitQueue};
use crate::resource::{Headroom, ResourcePool};
use crate::sim::SimTime;
use crate::workload::Job;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reservation {
    /// Queue position of the blocked head.
    pub head: usize,
    pub shadow_time: SimTime,
    pub extra_cores: u64,
    /// `None` when memory is not enforced.
    pub extra_memory: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackfillPlan {
    /// Everything to start, FCFS prefix first, then backfilled jobs.
    pub picked: Vec<usize>,
    pub reservation: Option<Reservation>,
    /// Subset of `picked` that jumped the blocked head.
    pub backfilled: Vec<usize>,
}

/// Shadow time and spare capacity for `head` given the free room now and
/// the expected releases.
pub fn reserve(head: &Job, room: Headroom, now: SimTime, releases: &[RunningJob]) -> Option<(SimTime, Headroom)> {
    let mut ends: Vec<(SimTime, u64, u64)> = releases
        .iter()
        .map(|r| (r.expected_end.max(now), r.cores, r.memory))
        .collect();
    ends.sort_unstable();
    let mut free = room;
    let mut i = 0;
    while i < ends.len() {
        let t = ends[i].0;
        while i < ends.len() && ends[i].0 == t {
            free.cores += ends[i].1;
            if let Some(m) = free.memory.as_mut() {
                *m += ends[i].2;
            }
            i += 1;
        }
        if free.fits(head) {
            free.take(head);
            return Some((t, free));
        }
    }
    None
}

pub fn plan_backfill(queue: &WaitQueue, pool: &ResourcePool, now: SimTime, running: &[RunningJob]) -> BackfillPlan {
    let mut room = Headroom::of(pool);
    let mut picked = fcfs_prefix(queue, &mut room);
    let head = picked.len();
    if head == queue.len() {
        return BackfillPlan { picked, ..Default::default() };
    }

    let mut releases = running.to_vec();
    releases.extend(picked.iter().map(|&p| {
        let j = queue.job(p);
        RunningJob {
            cores: j.required_cores.into(),
            memory: if room.memory.is_some() { j.required_memory } else { 0 },
            expected_end: now + j.requested_runtime,
        }
    }));
    let Some((shadow_time, mut extra)) = reserve(queue.job(head), room, now, &releases) else {
        return BackfillPlan { picked, ..Default::default() };
    };

    let mut backfilled = Vec::new();
    for pos in head + 1..queue.len() {
        let job = queue.job(pos);
        if !room.fits(job) {
            continue;
        }
        if now + job.requested_runtime <= shadow_time {
            room.take(job);
        } else if extra.fits(job) {
            room.take(job);
            extra.take(job);
        } else {
            continue;
        }
        picked.push(pos);
        backfilled.push(pos);
    }
    BackfillPlan {
        picked,
        reservation: Some(Reservation {
            head,
            shadow_time,
            extra_cores: extra.cores,
            extra_memory: extra.memory,
        }),
        backfilled,
    }
}

pub fn select_backfill(queue: &WaitQueue, pool: &ResourcePool, now: SimTime, running: &[RunningJob]) -> Vec<usize> {
    plan_backfill(queue, pool, now, running).picked
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BackfillPolicy;

impl SchedulingPolicy for BackfillPolicy {
    fn name(&self) -> &str {
        "backfill"
    }

    fn select(&self, ctx: &SchedulingContext<'_>) -> Vec<usize> {
        select_backfill(ctx.queue, ctx.pool, ctx.now, ctx.running)
    }

    fn needs_running(&self) -> bool {
        true
    }
}
