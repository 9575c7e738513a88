use super::{SchedulingContext, SchedulingPolicy, WaitQueue};
use crate::resource::{Headroom, ResourcePool};

/// Repeatedly starts the fitting job that leaves the fewest idle cores,
/// earliest arrival first on ties, until nothing fits.
pub fn select_best_fit(queue: &WaitQueue, pool: &ResourcePool) -> Vec<usize> {
    let mut room = Headroom::of(pool);
    let mut taken = vec![false; queue.len()];
    let mut picked = Vec::new();
    loop {
        let best = queue
            .iter()
            .enumerate()
            .filter(|(pos, e)| !taken[*pos] && room.fits(&e.job))
            .min_by_key(|(pos, e)| (room.cores - u64::from(e.job.required_cores), *pos));
        let Some((pos, entry)) = best else { break };
        room.take(&entry.job);
        taken[pos] = true;
        picked.push(pos);
    }
    picked
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BestFitPolicy;

impl SchedulingPolicy for BestFitPolicy {
    fn name(&self) -> &str {
        "bestfit"
    }

    fn select(&self, ctx: &SchedulingContext<'_>) -> Vec<usize> {
        select_best_fit(ctx.queue, ctx.pool)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::Job;

    fn queue() -> WaitQueue {
        WaitQueue::from_jobs([
            Job::new("J1", 0, 7, 1, 1),
            Job::new("J2", 0, 10, 1, 1),
            Job::new("J3", 0, 3, 1, 1),
        ])
    }

    #[test]
    fn exact_fit_wins() {
        assert_eq!(select_best_fit(&queue(), &ResourcePool::new(10)), vec![1]);
    }

    #[test]
    fn second_round_uses_reduced_pool() {
        assert_eq!(select_best_fit(&queue(), &ResourcePool::new(9)), vec![0]);
    }

    #[test]
    fn nothing_fits() {
        assert!(select_best_fit(&queue(), &ResourcePool::new(2)).is_empty());
    }

    #[test]
    fn ties_go_to_earliest_arrival() {
        let q = WaitQueue::from_jobs([Job::new("a", 0, 2, 1, 1), Job::new("b", 0, 2, 1, 1), Job::new("c", 0, 1, 1, 1)]);
        // leftover 2 for a/b, 3 for c; after a: leftover 0 for b
        assert_eq!(select_best_fit(&q, &ResourcePool::new(4)), vec![0, 1]);
    }
}
