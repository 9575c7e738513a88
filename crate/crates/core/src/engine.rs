//! Simulation orchestration: arrivals feed the wait queue, the policy picks
//! jobs, the pool grants resources, completions release them.
//!
//! The scheduler runs once per timestamp that saw an arrival, completion or
//! release. Those events only mark a wake as pending; the wake itself is an
//! event enqueued at the current time, so it dispatches after every event
//! already queued for that instant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::metrics::{JobRecord, MetricsLog, Unfinished};
use crate::resource::{ResourceError, ResourcePool, ResourceRequest};
use crate::scheduler::{Policy, RunningJob, SchedulingContext, SchedulingPolicy, WaitQueue};
use crate::sim::{EventPayload, EventQueue, SimError, SimTime};
use crate::workflow::{TaskId, TaskState, WorkflowError, WorkflowSpec};
use crate::workload::{JobState, Workload};

#[derive(Debug, Clone)]
pub enum SimulationInput {
    Workload(Workload),
    Workflow(WorkflowSpec),
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub policy: Arc<dyn SchedulingPolicy>,
    pub total_cores: u64,
    /// KB; 0 leaves memory unenforced.
    pub total_memory: u64,
    pub input: SimulationInput,
    /// Events after this time are not processed.
    pub stop_time: Option<SimTime>,
    /// Re-verify pool conservation and start constraints after every event.
    pub check_invariants: bool,
}

impl SimulationConfig {
    pub fn batch(workload: Workload, policy: Arc<dyn SchedulingPolicy>, total_cores: u64) -> Self {
        SimulationConfig {
            policy,
            total_cores,
            total_memory: 0,
            input: SimulationInput::Workload(workload),
            stop_time: None,
            check_invariants: cfg!(debug_assertions),
        }
    }

    /// Workflows carry their own budget; cores and memory come from it.
    pub fn workflow(spec: WorkflowSpec) -> Self {
        SimulationConfig {
            policy: Policy::Fcfs.strategy(),
            total_cores: spec.resources_available.cpu,
            total_memory: spec.resources_available.memory,
            input: SimulationInput::Workflow(spec),
            stop_time: None,
            check_invariants: cfg!(debug_assertions),
        }
    }

    pub fn with_memory(mut self, kb: u64) -> Self {
        self.total_memory = kb;
        self
    }

    pub fn with_stop_time(mut self, t: SimTime) -> Self {
        self.stop_time = Some(t);
        self
    }

    pub fn with_invariant_checks(mut self, on: bool) -> Self {
        self.check_invariants = on;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Arrival,
    Start,
    Completion,
    TaskReady,
    TaskStart,
    TaskCompletion,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Arrival => "arrival",
            EventKind::Start => "start",
            EventKind::Completion => "completion",
            EventKind::TaskReady => "task_ready",
            EventKind::TaskStart => "task_start",
            EventKind::TaskCompletion => "task_completion",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoggedEvent {
    pub time: SimTime,
    pub kind: EventKind,
    /// Index into [`SimulationResult::entity_ids`].
    pub entity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub metrics: MetricsLog,
    pub final_time: SimTime,
    pub event_log: Vec<LoggedEvent>,
    /// Job or task id per entity index (workload order, or ascending task id).
    pub entity_ids: Vec<String>,
    pub truncated: bool,
}

impl SimulationResult {
    pub fn entity_id(&self, entity: usize) -> &str {
        &self.entity_ids[entity]
    }

    /// Records keyed by id, for lookups in tests and reports.
    pub fn record(&self, id: &str) -> Option<&JobRecord> {
        self.metrics.records.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibleJob {
    pub id: String,
    pub cores: u64,
    pub memory: u64,
}

impl fmt::Display for InfeasibleJob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "job {} needs {} cores", self.id, self.cores)?;
        if self.memory > 0 {
            write!(f, " / {} KB", self.memory)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{} job(s) can never run on {total_cores} cores{}: {}",
        .jobs.len(),
        if *.total_memory > 0 { format!(" / {} KB", .total_memory) } else { String::new() },
        .jobs.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("; "))]
    InfeasibleJobs { jobs: Vec<InfeasibleJob>, total_cores: u64, total_memory: u64 },
    #[error("machine must have at least one core")]
    NoCores,
    #[error("expected a {expected} input")]
    WrongInput { expected: &'static str },
    #[error("policy '{policy}' returned an invalid selection: {reason}")]
    BadSelection { policy: String, reason: String },
    #[error("invariant violated at t={time}: {reason}")]
    Invariant { time: SimTime, reason: String },
    #[error(transparent)]
    Resource(#[from] ResourceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
}

fn wake(events: &mut EventQueue, pending: &mut bool) -> Result<(), SimError> {
    if !*pending {
        events.schedule_event(events.now(), EventPayload::SchedulerWake)?;
        *pending = true;
    }
    Ok(())
}

fn past_stop(events: &EventQueue, stop: Option<SimTime>) -> bool {
    matches!((events.peek_time(), stop), (Some(t), Some(s)) if t > s)
}

/// Replays a workload under the configured policy.
pub fn run_batch(config: &SimulationConfig) -> Result<SimulationResult, EngineError> {
    let SimulationInput::Workload(workload) = &config.input else {
        return Err(EngineError::WrongInput { expected: "workload" });
    };
    if config.total_cores == 0 {
        return Err(EngineError::NoCores);
    }
    let jobs = &workload.jobs;
    let infeasible: Vec<InfeasibleJob> = jobs
        .iter()
        .filter(|j| {
            u64::from(j.required_cores) > config.total_cores
                || (config.total_memory > 0 && j.required_memory > config.total_memory)
        })
        .map(|j| InfeasibleJob { id: j.job_id.clone(), cores: j.required_cores.into(), memory: j.required_memory })
        .collect();
    if !infeasible.is_empty() {
        return Err(EngineError::InfeasibleJobs {
            jobs: infeasible,
            total_cores: config.total_cores,
            total_memory: config.total_memory,
        });
    }

    let policy = config.policy.as_ref();
    let n = jobs.len();
    let mut events = EventQueue::new();
    for (i, job) in jobs.iter().enumerate() {
        events.schedule_event(job.submit_time, EventPayload::JobArrival(i))?;
    }
    let mut pool = ResourcePool::with_memory(config.total_cores, config.total_memory);
    let mut waiting = WaitQueue::new();
    let mut running: BTreeMap<usize, RunningJob> = BTreeMap::new();
    let mut state = vec![JobState::Queued; n];
    let mut arrived = vec![false; n];
    let mut start = vec![SimTime::ZERO; n];
    let mut finish = vec![SimTime::ZERO; n];
    let mut log = Vec::with_capacity(3 * n);
    let mut wake_pending = false;
    let mut scratch: Vec<RunningJob> = Vec::new();

    while !past_stop(&events, config.stop_time) {
        let Some(ev) = events.pop_next() else { break };
        let now = ev.time;
        match ev.payload {
            EventPayload::JobArrival(i) => {
                arrived[i] = true;
                waiting.push(i, jobs[i].clone());
                log.push(LoggedEvent { time: now, kind: EventKind::Arrival, entity: i });
                wake(&mut events, &mut wake_pending)?;
            }
            EventPayload::JobCompletion(i) => {
                pool.deallocate(&jobs[i].job_id)?;
                running.remove(&i);
                advance(&mut state[i], JobState::Completed, now)?;
                finish[i] = now;
                log.push(LoggedEvent { time: now, kind: EventKind::Completion, entity: i });
                wake(&mut events, &mut wake_pending)?;
            }
            EventPayload::SchedulerWake => {
                wake_pending = false;
                if waiting.is_empty() {
                    continue;
                }
                scratch.clear();
                if policy.needs_running() {
                    scratch.extend(running.values().copied());
                }
                let ctx = SchedulingContext { queue: &waiting, pool: &pool, now, running: &scratch };
                let picks = policy.select(&ctx);
                check_selection(policy.name(), &picks, waiting.len())?;
                for entry in waiting.take(&picks) {
                    let i = entry.slot;
                    let job = &jobs[i];
                    pool.allocate(&job.job_id, job).map_err(|e| EngineError::BadSelection {
                        policy: policy.name().to_string(),
                        reason: e.to_string(),
                    })?;
                    advance(&mut state[i], JobState::Running, now)?;
                    start[i] = now;
                    running.insert(
                        i,
                        RunningJob {
                            cores: job.required_cores.into(),
                            memory: if pool.memory_enforced() { job.required_memory } else { 0 },
                            expected_end: now + job.requested_runtime,
                        },
                    );
                    log.push(LoggedEvent { time: now, kind: EventKind::Start, entity: i });
                    events.schedule_event(now + job.actual_runtime, EventPayload::JobCompletion(i))?;
                }
            }
            other => {
                return Err(EngineError::Invariant { time: now, reason: format!("unexpected batch event {other:?}") })
            }
        }
        if config.check_invariants {
            pool.check_conservation().map_err(|e| EngineError::Invariant { time: now, reason: e.to_string() })?;
            if running.len() != pool.allocation_count() {
                return Err(EngineError::Invariant { time: now, reason: "running set and pool disagree".into() });
            }
        }
    }

    let truncated = !events.is_empty();
    let mut records = Vec::with_capacity(n);
    let mut unfinished = Vec::new();
    for (i, job) in jobs.iter().enumerate() {
        match state[i] {
            JobState::Completed => {
                let mut r = JobRecord::new(job.job_id.clone(), job.submit_time, start[i], finish[i], job.required_cores.into());
                r.trace_wait = job.recorded_wait;
                records.push(r);
            }
            s => unfinished.push(Unfinished {
                id: job.job_id.clone(),
                state: if !arrived[i] { "not_submitted".into() } else { format!("{s:?}").to_lowercase() },
                submit: job.submit_time,
                start: (s == JobState::Running).then_some(start[i]),
            }),
        }
    }
    Ok(SimulationResult {
        metrics: MetricsLog { records, total_cores: config.total_cores, unfinished },
        final_time: events.now(),
        event_log: log,
        entity_ids: jobs.iter().map(|j| j.job_id.clone()).collect(),
        truncated,
    })
}

fn advance(state: &mut JobState, to: JobState, now: SimTime) -> Result<(), EngineError> {
    if !state.can_become(to) {
        return Err(EngineError::Invariant { time: now, reason: format!("illegal job transition {state:?} -> {to:?}") });
    }
    *state = to;
    Ok(())
}

fn check_selection(policy: &str, picks: &[usize], len: usize) -> Result<(), EngineError> {
    let mut seen = BTreeSet::new();
    for &p in picks {
        if p >= len || !seen.insert(p) {
            return Err(EngineError::BadSelection {
                policy: policy.to_string(),
                reason: format!("position {p} out of range or repeated (queue length {len})"),
            });
        }
    }
    Ok(())
}

/// Executes a workflow against its own resource budget. Ready tasks are
/// dispatched in ascending id order; the first one that does not fit blocks
/// the rest until resources free up.
pub fn run_workflow(config: &SimulationConfig) -> Result<SimulationResult, EngineError> {
    let SimulationInput::Workflow(spec) = &config.input else {
        return Err(EngineError::WrongInput { expected: "workflow" });
    };
    let mut spec = spec.clone();
    spec.reset();
    let budget = spec.resources_available;
    let tasks: Vec<_> = spec.tasks().to_vec();
    let n = tasks.len();
    let pos = |id: TaskId, spec: &WorkflowSpec| spec.dag().position(id).expect("task id from spec");

    let mut events = EventQueue::new();
    let mut pool = ResourcePool::with_memory(budget.cpu, budget.memory);
    let mut ready: BTreeMap<TaskId, SimTime> = BTreeMap::new();
    let mut start = vec![SimTime::ZERO; n];
    let mut finish = vec![SimTime::ZERO; n];
    let mut log = Vec::with_capacity(3 * n);
    let mut wake_pending = false;
    let keys: Vec<String> = tasks.iter().map(|t| t.task_id.to_string()).collect();

    for id in spec.ready_tasks() {
        ready.insert(id, SimTime::ZERO);
        log.push(LoggedEvent { time: SimTime::ZERO, kind: EventKind::TaskReady, entity: pos(id, &spec) });
    }
    if !ready.is_empty() {
        wake(&mut events, &mut wake_pending)?;
    }

    while !past_stop(&events, config.stop_time) {
        let Some(ev) = events.pop_next() else { break };
        let now = ev.time;
        match ev.payload {
            EventPayload::TaskCompletion(i) => {
                pool.deallocate(&keys[i])?;
                spec.complete_task(tasks[i].task_id)?;
                finish[i] = now;
                log.push(LoggedEvent { time: now, kind: EventKind::TaskCompletion, entity: i });
                for id in spec.ready_tasks() {
                    ready.insert(id, now);
                    log.push(LoggedEvent { time: now, kind: EventKind::TaskReady, entity: pos(id, &spec) });
                }
                wake(&mut events, &mut wake_pending)?;
            }
            EventPayload::SchedulerWake => {
                wake_pending = false;
                while let Some((&id, _)) = ready.first_key_value() {
                    let i = pos(id, &spec);
                    if !pool.can_allocate(&tasks[i]) {
                        break;
                    }
                    ready.pop_first();
                    pool.allocate(&keys[i], &tasks[i])?;
                    spec.start_task(id)?;
                    if config.check_invariants {
                        let unmet = tasks[i].dependencies.iter().find(|d| {
                            spec.task(**d).map(|t| t.state) != Some(TaskState::Completed)
                        });
                        if let Some(d) = unmet {
                            return Err(EngineError::Invariant {
                                time: now,
                                reason: format!("task {id} started before dependency {d} completed"),
                            });
                        }
                    }
                    start[i] = now;
                    log.push(LoggedEvent { time: now, kind: EventKind::TaskStart, entity: i });
                    events.schedule_event(now + tasks[i].execution_time, EventPayload::TaskCompletion(i))?;
                }
            }
            other => {
                return Err(EngineError::Invariant { time: now, reason: format!("unexpected workflow event {other:?}") })
            }
        }
        if config.check_invariants {
            pool.check_conservation().map_err(|e| EngineError::Invariant { time: now, reason: e.to_string() })?;
        }
    }

    let truncated = !events.is_empty();
    let ready_at = ready_times(&log);
    let mut records = Vec::with_capacity(n);
    let mut unfinished = Vec::new();
    for (i, task) in spec.tasks().iter().enumerate() {
        let submit = ready_at.get(&i).copied().unwrap_or(SimTime::ZERO);
        if task.state == TaskState::Completed {
            records.push(JobRecord::new(keys[i].clone(), submit, start[i], finish[i], task.cores().into()));
        } else {
            unfinished.push(Unfinished {
                id: keys[i].clone(),
                state: format!("{:?}", task.state).to_lowercase(),
                submit,
                start: (task.state == TaskState::Running).then_some(start[i]),
            });
        }
    }
    if !truncated && !unfinished.is_empty() {
        return Err(EngineError::Invariant { time: events.now(), reason: "workflow stalled with unfinished tasks".into() });
    }
    Ok(SimulationResult {
        metrics: MetricsLog { records, total_cores: budget.cpu, unfinished },
        final_time: events.now(),
        event_log: log,
        entity_ids: keys,
        truncated,
    })
}

fn ready_times(log: &[LoggedEvent]) -> BTreeMap<usize, SimTime> {
    log.iter().filter(|e| e.kind == EventKind::TaskReady).map(|e| (e.entity, e.time)).collect()
}

/// Runs whichever input the config carries.
pub fn run(config: &SimulationConfig) -> Result<SimulationResult, EngineError> {
    match config.input {
        SimulationInput::Workload(_) => run_batch(config),
        SimulationInput::Workflow(_) => run_workflow(config),
    }
}
