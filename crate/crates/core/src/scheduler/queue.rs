use std::collections::VecDeque;

use crate::workload::{arrival_cmp, Job};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueuedJob {
    /// Caller-defined handle, e.g. the job's index in its workload.
    pub slot: usize,
    pub job: Job,
}

/// Jobs waiting to start, kept in arrival order.
#[derive(Debug, Clone, Default)]
pub struct WaitQueue {
    entries: VecDeque<QueuedJob>,
}

impl WaitQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a queue with slots equal to arrival rank.
    pub fn from_jobs(jobs: impl IntoIterator<Item = Job>) -> Self {
        let mut jobs: Vec<Job> = jobs.into_iter().collect();
        jobs.sort_by(arrival_cmp);
        let mut q = Self::new();
        for (slot, job) in jobs.into_iter().enumerate() {
            q.push(slot, job);
        }
        q
    }

    /// Inserts keeping arrival order. Appending is the common case.
    pub fn push(&mut self, slot: usize, job: Job) {
        let at = match self.entries.back() {
            Some(last) if arrival_cmp(&last.job, &job).is_gt() => {
                self.entries.partition_point(|e| arrival_cmp(&e.job, &job).is_le())
            }
            _ => self.entries.len(),
        };
        self.entries.insert(at, QueuedJob { slot, job });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, pos: usize) -> Option<&QueuedJob> {
        self.entries.get(pos)
    }

    pub fn job(&self, pos: usize) -> &Job {
        &self.entries[pos].job
    }

    pub fn iter(&self) -> impl Iterator<Item = &QueuedJob> {
        self.entries.iter()
    }

    pub fn jobs(&self) -> impl Iterator<Item = &Job> {
        self.entries.iter().map(|e| &e.job)
    }

    /// Removes the given positions and returns them in the given order.
    /// Positions must be distinct and in range.
    pub fn take(&mut self, positions: &[usize]) -> Vec<QueuedJob> {
        if positions.is_empty() {
            return Vec::new();
        }
        if positions.iter().enumerate().all(|(i, &p)| i == p) {
            return self.entries.drain(..positions.len()).collect();
        }
        let mut order = vec![usize::MAX; self.entries.len()];
        for (rank, &p) in positions.iter().enumerate() {
            assert_eq!(order[p], usize::MAX, "position {p} selected twice");
            order[p] = rank;
        }
        let mut out: Vec<Option<QueuedJob>> = vec![None; positions.len()];
        let mut kept = VecDeque::with_capacity(self.entries.len() - positions.len());
        for (pos, entry) in self.entries.drain(..).enumerate() {
            match order[pos] {
                usize::MAX => kept.push_back(entry),
                rank => out[rank] = Some(entry),
            }
        }
        self.entries = kept;
        out.into_iter().map(|e| e.expect("every position filled")).collect()
    }
}
