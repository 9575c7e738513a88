//! DAG workflows: task model, adjacency-list dependency graph, ready-task
//! detection and completion-triggered release.

mod generate;
mod schema;

use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::cmp::Reverse;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::resource::ResourceRequest;

pub use generate::{generate_dag, DagShape, GenerateParams};
pub use schema::{load_workflow, load_workflow_file, ResourcesDoc, TaskDoc, WorkflowDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskState {
    Waiting,
    /// Dependencies satisfied, resources not yet granted.
    Ready,
    Running,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub task_id: TaskId,
    pub execution_time: u64,
    pub required_cpu: u32,
    pub required_memory: u64,
    pub dependencies: Vec<TaskId>,
    pub state: TaskState,
}

impl ResourceRequest for Task {
    fn cores(&self) -> u32 {
        self.required_cpu
    }

    fn memory(&self) -> u64 {
        self.required_memory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub cpu: u64,
    pub memory: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("duplicate task id {0}")]
    DuplicateId(TaskId),
    #[error("task {task} depends on unknown task {dependency}")]
    UnknownDependency { task: TaskId, dependency: TaskId },
    #[error("task {0} depends on itself")]
    SelfDependency(TaskId),
    #[error("dependency cycle through tasks {}", join_ids(.0))]
    Cycle(Vec<TaskId>),
    #[error("preemption is not supported")]
    PreemptionUnsupported,
    #[error("task {task} needs {cpu} cpu / {memory} memory but the workflow budget is {budget_cpu} cpu / {budget_memory} memory")]
    InfeasibleTask { task: TaskId, cpu: u32, memory: u64, budget_cpu: u64, budget_memory: u64 },
    #[error("task {task}: {reason}")]
    InvalidTask { task: TaskId, reason: String },
    #[error("unknown scheduling_policy '{0}' (supported: Static, FCFS)")]
    UnknownPolicy(String),
    #[error("resources_available.cpu must be at least 1")]
    EmptyBudget,
}

fn join_ids(ids: &[TaskId]) -> String {
    ids.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" -> ")
}

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("invalid workflow JSON: {0}")]
    Parse(String),
    #[error("invalid workflow: {0}")]
    Validation(#[from] ValidationError),
    #[error("task {task}: cannot go from {from:?} to {to:?}")]
    IllegalTransition { task: TaskId, from: TaskState, to: TaskState },
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Dependency graph over task indices (tasks sorted by id).
///
/// `successors[i]` lists the tasks that wait on task `i`; `indegree[i]`
/// counts its dependencies. `remaining[i]` is the run-time countdown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    ids: Vec<TaskId>,
    index: HashMap<TaskId, usize>,
    successors: Vec<Vec<usize>>,
    indegree: Vec<u32>,
    remaining: Vec<u32>,
}

impl Dag {
    /// Builds the adjacency lists. Does not check for cycles.
    pub fn build(tasks: &[Task]) -> Result<Dag, ValidationError> {
        let mut ids: Vec<TaskId> = tasks.iter().map(|t| t.task_id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(ValidationError::DuplicateId(w[0]));
        }
        let index: HashMap<TaskId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut successors = vec![Vec::new(); ids.len()];
        let mut indegree = vec![0u32; ids.len()];
        for task in tasks {
            let me = index[&task.task_id];
            let mut seen = BTreeSet::new();
            for &dep in &task.dependencies {
                if dep == task.task_id {
                    return Err(ValidationError::SelfDependency(dep));
                }
                let &from = index.get(&dep).ok_or(ValidationError::UnknownDependency {
                    task: task.task_id,
                    dependency: dep,
                })?;
                // Repeated dependency ids collapse to one edge.
                if seen.insert(from) {
                    successors[from].push(me);
                    indegree[me] += 1;
                }
            }
        }
        for s in &mut successors {
            s.sort_unstable();
        }
        let remaining = indegree.clone();
        Ok(Dag { ids, index, successors, indegree, remaining })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[TaskId] {
        &self.ids
    }

    pub fn position(&self, id: TaskId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn successors(&self, id: TaskId) -> Option<Vec<TaskId>> {
        let i = self.position(id)?;
        Some(self.successors[i].iter().map(|&s| self.ids[s]).collect())
    }

    pub fn indegree(&self, id: TaskId) -> Option<u32> {
        self.position(id).map(|i| self.indegree[i])
    }

    /// Dependencies still outstanding during a run.
    pub fn unmet(&self, id: TaskId) -> Option<u32> {
        self.position(id).map(|i| self.remaining[i])
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// Kahn's algorithm with the smallest ready id first.
    pub fn topological_order(&self) -> Result<Vec<TaskId>, ValidationError> {
        let mut indeg = self.indegree.clone();
        let mut heap: BinaryHeap<Reverse<usize>> =
            (0..self.len()).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(Reverse(i)) = heap.pop() {
            order.push(self.ids[i]);
            for &s in &self.successors[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    heap.push(Reverse(s));
                }
            }
        }
        if order.len() == self.len() {
            return Ok(order);
        }
        Err(ValidationError::Cycle(self.find_cycle(&indeg)))
    }

    /// Walks predecessor edges among the nodes Kahn could not remove; every
    /// such node has a remaining predecessor, so the walk must revisit one.
    fn find_cycle(&self, leftover: &[u32]) -> Vec<TaskId> {
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for (from, succ) in self.successors.iter().enumerate() {
            for &to in succ {
                if leftover[from] > 0 {
                    preds[to].push(from);
                }
            }
        }
        let start = (0..self.len()).find(|&i| leftover[i] > 0).expect("cycle has members");
        let mut seen_at = vec![usize::MAX; self.len()];
        let mut path = Vec::new();
        let mut cur = start;
        while seen_at[cur] == usize::MAX {
            seen_at[cur] = path.len();
            path.push(cur);
            cur = *preds[cur].iter().min().expect("leftover node has a leftover predecessor");
        }
        let mut cycle: Vec<TaskId> = path[seen_at[cur]..].iter().map(|&i| self.ids[i]).collect();
        // Walked backwards along dependency edges; report in execution direction.
        cycle.reverse();
        cycle
    }
}

/// Validated workflow plus its run-time state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowSpec {
    pub workflow_id: String,
    /// Sorted by id; `tasks[i]` is DAG node `i`.
    tasks: Vec<Task>,
    dag: Dag,
    pub resources_available: Budget,
    pub scheduling_policy: String,
    pub preemption: bool,
    released: BTreeSet<usize>,
}

impl WorkflowSpec {
    /// Validates and builds the DAG. Either the whole spec is valid or an
    /// error is returned.
    pub fn new(
        workflow_id: impl Into<String>,
        mut tasks: Vec<Task>,
        resources_available: Budget,
        scheduling_policy: impl Into<String>,
        preemption: bool,
    ) -> Result<Self, ValidationError> {
        let scheduling_policy = scheduling_policy.into();
        if preemption {
            return Err(ValidationError::PreemptionUnsupported);
        }
        if !matches!(scheduling_policy.to_ascii_lowercase().as_str(), "static" | "fcfs") {
            return Err(ValidationError::UnknownPolicy(scheduling_policy));
        }
        if resources_available.cpu == 0 {
            return Err(ValidationError::EmptyBudget);
        }
        tasks.sort_by_key(|t| t.task_id);
        let dag = Dag::build(&tasks)?;
        dag.topological_order()?;
        for t in &mut tasks {
            if t.execution_time == 0 {
                return Err(ValidationError::InvalidTask { task: t.task_id, reason: "execution_time must be positive".into() });
            }
            if t.required_cpu == 0 {
                return Err(ValidationError::InvalidTask { task: t.task_id, reason: "resources.cpu must be positive".into() });
            }
            let mem_short = resources_available.memory > 0 && t.required_memory > resources_available.memory;
            if u64::from(t.required_cpu) > resources_available.cpu || mem_short {
                return Err(ValidationError::InfeasibleTask {
                    task: t.task_id,
                    cpu: t.required_cpu,
                    memory: t.required_memory,
                    budget_cpu: resources_available.cpu,
                    budget_memory: resources_available.memory,
                });
            }
            t.state = TaskState::Waiting;
        }
        let released = (0..tasks.len()).filter(|&i| dag.indegree[i] == 0).collect();
        Ok(WorkflowSpec {
            workflow_id: workflow_id.into(),
            tasks,
            dag,
            resources_available,
            scheduling_policy,
            preemption,
            released,
        })
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn task(&self, id: TaskId) -> Option<&Task> {
        self.dag.position(id).map(|i| &self.tasks[i])
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn all_completed(&self) -> bool {
        self.tasks.iter().all(|t| t.state == TaskState::Completed)
    }

    /// Moves every waiting task whose dependencies are all complete to
    /// `Ready` and returns them in ascending id order.
    pub fn ready_tasks(&mut self) -> Vec<TaskId> {
        let released = std::mem::take(&mut self.released);
        released
            .into_iter()
            .map(|i| {
                debug_assert_eq!(self.tasks[i].state, TaskState::Waiting);
                debug_assert_eq!(self.dag.remaining[i], 0);
                self.tasks[i].state = TaskState::Ready;
                self.tasks[i].task_id
            })
            .collect()
    }

    /// `Ready` → `Running`.
    pub fn start_task(&mut self, id: TaskId) -> Result<(), WorkflowError> {
        let i = self.dag.position(id).ok_or(WorkflowError::UnknownTask(id))?;
        self.transition(i, TaskState::Ready, TaskState::Running)
    }

    /// `Running` → `Completed`; returns successors whose last dependency
    /// this was, in ascending id order. They stay `Waiting` until the next
    /// [`ready_tasks`](Self::ready_tasks) call.
    pub fn complete_task(&mut self, id: TaskId) -> Result<Vec<TaskId>, WorkflowError> {
        let i = self.dag.position(id).ok_or(WorkflowError::UnknownTask(id))?;
        self.transition(i, TaskState::Running, TaskState::Completed)?;
        let mut freed = Vec::new();
        for k in 0..self.dag.successors[i].len() {
            let s = self.dag.successors[i][k];
            self.dag.remaining[s] -= 1;
            if self.dag.remaining[s] == 0 {
                self.released.insert(s);
                freed.push(self.tasks[s].task_id);
            }
        }
        Ok(freed)
    }

    fn transition(&mut self, i: usize, from: TaskState, to: TaskState) -> Result<(), WorkflowError> {
        let task = &mut self.tasks[i];
        if task.state != from {
            return Err(WorkflowError::IllegalTransition { task: task.task_id, from: task.state, to });
        }
        task.state = to;
        Ok(())
    }

    /// Restores every task to `Waiting` so the spec can be run again.
    pub fn reset(&mut self) {
        for t in &mut self.tasks {
            t.state = TaskState::Waiting;
        }
        self.dag.remaining = self.dag.indegree.clone();
        self.released = (0..self.tasks.len()).filter(|&i| self.dag.indegree[i] == 0).collect();
    }

    pub fn with_budget(mut self, budget: Budget) -> Result<Self, ValidationError> {
        self.reset();
        WorkflowSpec::new(
            std::mem::take(&mut self.workflow_id),
            std::mem::take(&mut self.tasks),
            budget,
            std::mem::take(&mut self.scheduling_policy),
            self.preemption,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const LISTING: &str = r#"{
  "tasks": [
    {"id": 1, "execution_time": 100, "resources": {"cpu": 2, "memory": 1024}, "dependencies": []},
    {"id": 2, "execution_time": 150, "resources": {"cpu": 1, "memory": 512}, "dependencies": [1]},
    {"id": 3, "execution_time": 200, "resources": {"cpu": 1, "memory": 512}, "dependencies": [1]},
    {"id": 4, "execution_time": 300, "resources": {"cpu": 2, "memory": 1024}, "dependencies": [2, 3]}
  ],
  "resources_available": {"cpu": 10, "memory": 8192},
  "scheduling_policy": "Static",
  "preemption": false
}"#;

    fn t(id: u64, deps: &[u64]) -> Task {
        Task {
            task_id: TaskId(id),
            execution_time: 1,
            required_cpu: 1,
            required_memory: 0,
            dependencies: deps.iter().map(|&d| TaskId(d)).collect(),
            state: TaskState::Waiting,
        }
    }

    fn spec(tasks: Vec<Task>) -> Result<WorkflowSpec, ValidationError> {
        WorkflowSpec::new("w", tasks, Budget { cpu: 4, memory: 0 }, "Static", false)
    }

    fn ids(v: &[u64]) -> Vec<TaskId> {
        v.iter().map(|&i| TaskId(i)).collect()
    }

    #[test]
    fn listing_adjacency_and_indegree() {
        let spec = load_workflow(LISTING).unwrap();
        let dag = spec.dag();
        assert_eq!(spec.len(), 4);
        assert_eq!(dag.successors(TaskId(1)).unwrap(), ids(&[2, 3]));
        assert_eq!(dag.successors(TaskId(2)).unwrap(), ids(&[4]));
        assert_eq!(dag.successors(TaskId(3)).unwrap(), ids(&[4]));
        assert_eq!(dag.successors(TaskId(4)).unwrap(), ids(&[]));
        let indeg: Vec<u32> = (1..=4).map(|i| dag.indegree(TaskId(i)).unwrap()).collect();
        assert_eq!(indeg, vec![0, 1, 1, 2]);
        assert_eq!(dag.edge_count() as u32, indeg.iter().sum::<u32>());
        assert_eq!(dag.topological_order().unwrap(), ids(&[1, 2, 3, 4]));
    }

    #[test]
    fn ready_and_release_sequence() {
        let mut spec = load_workflow(LISTING).unwrap();
        assert_eq!(spec.ready_tasks(), ids(&[1]));
        assert!(spec.ready_tasks().is_empty());
        spec.start_task(TaskId(1)).unwrap();
        assert_eq!(spec.complete_task(TaskId(1)).unwrap(), ids(&[2, 3]));
        assert_eq!(spec.ready_tasks(), ids(&[2, 3]));
        spec.start_task(TaskId(2)).unwrap();
        spec.start_task(TaskId(3)).unwrap();
        assert!(spec.complete_task(TaskId(2)).unwrap().is_empty());
        assert_eq!(spec.dag().unmet(TaskId(4)), Some(1));
        assert_eq!(spec.complete_task(TaskId(3)).unwrap(), ids(&[4]));
        assert_eq!(spec.ready_tasks(), ids(&[4]));
        spec.start_task(TaskId(4)).unwrap();
        spec.complete_task(TaskId(4)).unwrap();
        assert!(spec.all_completed());
        assert!(spec.ready_tasks().is_empty());
    }

    #[test]
    fn completing_a_waiting_task_is_illegal() {
        let mut spec = load_workflow(LISTING).unwrap();
        assert!(matches!(
            spec.complete_task(TaskId(4)),
            Err(WorkflowError::IllegalTransition { from: TaskState::Waiting, .. })
        ));
        assert!(matches!(spec.start_task(TaskId(2)), Err(WorkflowError::IllegalTransition { .. })));
        assert!(matches!(spec.complete_task(TaskId(99)), Err(WorkflowError::UnknownTask(_))));
    }

    #[test]
    fn cycles_are_reported_with_members() {
        match spec(vec![t(1, &[2]), t(2, &[1])]) {
            Err(ValidationError::Cycle(c)) => {
                let mut c = c;
                c.sort();
                assert_eq!(c, ids(&[1, 2]));
            }
            other => panic!("{other:?}"),
        }
        match spec(vec![t(1, &[3]), t(2, &[1]), t(3, &[2]), t(4, &[3])]) {
            Err(ValidationError::Cycle(c)) => {
                assert_eq!(c.len(), 3);
                assert!(!c.contains(&TaskId(4)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert_eq!(spec(vec![t(1, &[]), t(1, &[])]).unwrap_err(), ValidationError::DuplicateId(TaskId(1)));
        assert_eq!(spec(vec![t(1, &[1])]).unwrap_err(), ValidationError::SelfDependency(TaskId(1)));
        assert_eq!(
            spec(vec![t(1, &[7])]).unwrap_err(),
            ValidationError::UnknownDependency { task: TaskId(1), dependency: TaskId(7) }
        );
        let mut big = t(1, &[]);
        big.required_cpu = 20;
        assert!(matches!(spec(vec![big]), Err(ValidationError::InfeasibleTask { .. })));
        assert_eq!(
            WorkflowSpec::new("w", vec![t(1, &[])], Budget { cpu: 1, memory: 0 }, "Static", true).unwrap_err(),
            ValidationError::PreemptionUnsupported
        );
        assert!(matches!(
            WorkflowSpec::new("w", vec![t(1, &[])], Budget { cpu: 1, memory: 0 }, "Dynamic", false),
            Err(ValidationError::UnknownPolicy(_))
        ));
    }

    #[test]
    fn single_task_and_chain_order() {
        assert_eq!(spec(vec![t(5, &[])]).unwrap().dag().topological_order().unwrap(), ids(&[5]));
        let dag = Dag::build(&[t(1, &[3]), t(2, &[1]), t(3, &[])]).unwrap();
        assert_eq!(dag.topological_order().unwrap(), ids(&[3, 1, 2]));
        let cyclic = Dag::build(&[t(1, &[3]), t(2, &[1]), t(3, &[2])]).unwrap();
        assert!(matches!(cyclic.topological_order(), Err(ValidationError::Cycle(_))));
    }

    #[test]
    fn duplicate_dependency_entries_collapse() {
        let mut s = spec(vec![t(1, &[]), t(2, &[1, 1])]).unwrap();
        assert_eq!(s.dag().indegree(TaskId(2)), Some(1));
        s.ready_tasks();
        s.start_task(TaskId(1)).unwrap();
        assert_eq!(s.complete_task(TaskId(1)).unwrap(), ids(&[2]));
    }

    #[test]
    fn reset_allows_rerun() {
        let mut s = load_workflow(LISTING).unwrap();
        s.ready_tasks();
        s.start_task(TaskId(1)).unwrap();
        s.complete_task(TaskId(1)).unwrap();
        s.reset();
        assert_eq!(s.ready_tasks(), ids(&[1]));
        assert_eq!(s.dag().unmet(TaskId(4)), Some(2));
    }
}
