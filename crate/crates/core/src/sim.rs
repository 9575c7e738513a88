//! Time-ordered event queue and run loop.
//!
//! Events are totally ordered by `(time, seq)`, where `seq` is the insertion
//! counter. Equal-time events therefore dispatch in insertion order, which is
//! what makes two runs over the same inputs produce the same dispatch log.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulated time in whole seconds.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn secs(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add<u64> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: u64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = u64;

    fn sub(self, rhs: SimTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for SimTime {
    fn from(v: u64) -> Self {
        SimTime(v)
    }
}

/// What an event refers to. Ids are indices into the owning engine's tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventPayload {
    JobArrival(usize),
    JobStart(usize),
    JobCompletion(usize),
    TaskReady(usize),
    TaskCompletion(usize),
    SchedulerWake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRecord {
    pub time: SimTime,
    pub seq: u64,
    pub payload: EventPayload,
}

impl EventRecord {
    fn key(&self) -> (SimTime, u64) {
        (self.time, self.seq)
    }
}

impl Ord for EventRecord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for EventRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot schedule event at t={at} before current time t={now}")]
    SchedulingInPast { at: SimTime, now: SimTime },
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<EventRecord>>,
    now: SimTime,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Enqueues `payload` at `time` and returns the assigned sequence number.
    pub fn schedule_event(&mut self, time: SimTime, payload: EventPayload) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::SchedulingInPast { at: time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(EventRecord { time, seq, payload }));
        Ok(seq)
    }

    pub fn peek(&self) -> Option<&EventRecord> {
        self.heap.peek().map(|Reverse(e)| e)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.peek().map(|e| e.time)
    }

    /// Removes the minimum `(time, seq)` event and advances the clock to it.
    pub fn pop_next(&mut self) -> Option<EventRecord> {
        let Reverse(ev) = self.heap.pop()?;
        debug_assert!(ev.time >= self.now);
        self.now = ev.time;
        Some(ev)
    }

    /// Dispatches events until the queue drains, returning the final time.
    ///
    /// The handler may enqueue further events through the queue it is handed;
    /// an attempt to schedule into the past aborts the run.
    pub fn run<F, E>(&mut self, mut handler: F) -> Result<SimTime, E>
    where
        F: FnMut(&mut EventQueue, EventRecord) -> Result<(), E>,
        E: From<SimError>,
    {
        while let Some(ev) = self.pop_next() {
            handler(self, ev)?;
        }
        Ok(self.now)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EventPayload::*;

    fn drain(q: &mut EventQueue) -> Vec<(u64, EventPayload)> {
        std::iter::from_fn(|| q.pop_next()).map(|e| (e.time.0, e.payload)).collect()
    }

    #[test]
    fn single_event_is_head_with_seq_zero() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(5), JobArrival(0)).unwrap();
        let head = q.peek().unwrap();
        assert_eq!((head.time, head.seq), (SimTime(5), 0));
    }

    #[test]
    fn equal_times_pop_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(5), JobArrival(0)).unwrap();
        q.schedule_event(SimTime(5), JobArrival(1)).unwrap();
        assert_eq!(drain(&mut q), vec![(5, JobArrival(0)), (5, JobArrival(1))]);
    }

    #[test]
    fn pops_sorted_by_time() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(7), JobArrival(0)).unwrap();
        q.schedule_event(SimTime(3), JobArrival(1)).unwrap();
        q.schedule_event(SimTime(5), JobArrival(2)).unwrap();
        assert_eq!(
            drain(&mut q),
            vec![(3, JobArrival(1)), (5, JobArrival(2)), (7, JobArrival(0))]
        );
    }

    #[test]
    fn pop_advances_clock() {
        let mut q = EventQueue::new();
        assert!(q.pop_next().is_none());
        q.schedule_event(SimTime(3), JobArrival(1)).unwrap();
        q.schedule_event(SimTime(3), JobArrival(2)).unwrap();
        assert_eq!(q.pop_next().unwrap().payload, JobArrival(1));
        assert_eq!(q.now(), SimTime(3));
        let next = q.pop_next().unwrap();
        assert_eq!((next.time, next.payload), (SimTime(3), JobArrival(2)));
    }

    #[test]
    fn scheduling_in_the_past_is_rejected() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(4), SchedulerWake).unwrap();
        q.pop_next();
        assert_eq!(
            q.schedule_event(SimTime(3), SchedulerWake),
            Err(SimError::SchedulingInPast { at: SimTime(3), now: SimTime(4) })
        );
        assert!(q.schedule_event(SimTime(4), SchedulerWake).is_ok());
    }

    #[test]
    fn run_on_empty_queue_returns_zero() {
        let mut q = EventQueue::new();
        let end = q.run(|_, _| Ok::<_, SimError>(())).unwrap();
        assert_eq!(end, SimTime(0));
    }

    #[test]
    fn run_single_event() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(10), SchedulerWake).unwrap();
        assert_eq!(q.run(|_, _| Ok::<_, SimError>(())).unwrap(), SimTime(10));
    }

    #[test]
    fn run_dispatches_handler_scheduled_events() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(2), JobArrival(0)).unwrap();
        let mut seen = Vec::new();
        let end = q
            .run(|q, ev| {
                seen.push(ev.time.0);
                if ev.payload == JobArrival(0) {
                    q.schedule_event(SimTime(4), JobCompletion(0))?;
                }
                Ok::<_, SimError>(())
            })
            .unwrap();
        assert_eq!(seen, vec![2, 4]);
        assert_eq!(end, SimTime(4));
    }

    #[test]
    fn run_propagates_past_scheduling() {
        let mut q = EventQueue::new();
        q.schedule_event(SimTime(9), SchedulerWake).unwrap();
        let err = q.run(|q, _| q.schedule_event(SimTime(1), SchedulerWake).map(|_| ()));
        assert!(matches!(err, Err(SimError::SchedulingInPast { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dispatch_is_ordered_and_reproducible(times in proptest::collection::vec(0u64..50, 0..60)) {
                let build = || {
                    let mut q = EventQueue::new();
                    for (i, t) in times.iter().enumerate() {
                        q.schedule_event(SimTime(*t), JobArrival(i)).unwrap();
                    }
                    q
                };
                let mut a = build();
                let mut log_a = Vec::new();
                a.run(|q, ev| {
                    log_a.push(ev);
                    // Chain a follow-up for every third event to exercise handler inserts.
                    if let JobArrival(i) = ev.payload {
                        if i % 3 == 0 {
                            q.schedule_event(ev.time + (i as u64 % 5), JobCompletion(i))?;
                        }
                    }
                    Ok::<_, SimError>(())
                }).unwrap();
                for w in log_a.windows(2) {
                    prop_assert!(w[0].time <= w[1].time);
                    if w[0].time == w[1].time {
                        prop_assert!(w[0].seq < w[1].seq);
                    }
                }
                let mut b = build();
                let mut log_b = Vec::new();
                b.run(|q, ev| {
                    log_b.push(ev);
                    if let JobArrival(i) = ev.payload {
                        if i % 3 == 0 {
                            q.schedule_event(ev.time + (i as u64 % 5), JobCompletion(i))?;
                        }
                    }
                    Ok::<_, SimError>(())
                }).unwrap();
                prop_assert_eq!(log_a, log_b);
            }
        }
    }
}
