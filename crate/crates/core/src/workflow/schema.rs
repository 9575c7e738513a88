//! JSON workflow input.
//!
//! ```json
//! {
//!   "tasks": [
//!     {"id": 1, "execution_time": 100, "resources": {"cpu": 2, "memory": 1024}, "dependencies": []}
//!   ],
//!   "resources_available": {"cpu": 10, "memory": 8192},
//!   "scheduling_policy": "Static",
//!   "preemption": false
//! }
//! ```
//!
//! Unknown keys are rejected. `workflow_id` is optional and defaults to the
//! file stem (or `"workflow"` for in-memory text).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Budget, Task, TaskId, TaskState, WorkflowError, WorkflowSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcesDoc {
    pub cpu: u64,
    pub memory: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDoc {
    pub id: u64,
    pub execution_time: u64,
    pub resources: ResourcesDoc,
    pub dependencies: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkflowDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workflow_id: Option<String>,
    pub tasks: Vec<TaskDoc>,
    pub resources_available: ResourcesDoc,
    pub scheduling_policy: String,
    pub preemption: bool,
}

impl WorkflowDocument {
    pub fn into_spec(self, default_id: &str) -> Result<WorkflowSpec, WorkflowError> {
        let mut tasks = Vec::with_capacity(self.tasks.len());
        for t in self.tasks {
            let cpu = u32::try_from(t.resources.cpu).map_err(|_| WorkflowError::Parse(format!("task {}: cpu out of range", t.id)))?;
            tasks.push(Task {
                task_id: TaskId(t.id),
                execution_time: t.execution_time,
                required_cpu: cpu,
                required_memory: t.resources.memory,
                dependencies: t.dependencies.into_iter().map(TaskId).collect(),
                state: TaskState::Waiting,
            });
        }
        let budget = Budget { cpu: self.resources_available.cpu, memory: self.resources_available.memory };
        let id = self.workflow_id.unwrap_or_else(|| default_id.to_string());
        Ok(WorkflowSpec::new(id, tasks, budget, self.scheduling_policy, self.preemption)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

impl From<&WorkflowSpec> for WorkflowDocument {
    fn from(spec: &WorkflowSpec) -> Self {
        WorkflowDocument {
            workflow_id: Some(spec.workflow_id.clone()),
            tasks: spec
                .tasks()
                .iter()
                .map(|t| TaskDoc {
                    id: t.task_id.0,
                    execution_time: t.execution_time,
                    resources: ResourcesDoc { cpu: t.required_cpu.into(), memory: t.required_memory },
                    dependencies: t.dependencies.iter().map(|d| d.0).collect(),
                })
                .collect(),
            resources_available: ResourcesDoc {
                cpu: spec.resources_available.cpu,
                memory: spec.resources_available.memory,
            },
            scheduling_policy: spec.scheduling_policy.clone(),
            preemption: spec.preemption,
        }
    }
}

pub fn load_workflow(json_text: &str) -> Result<WorkflowSpec, WorkflowError> {
    parse_document(json_text)?.into_spec("workflow")
}

pub fn load_workflow_file(path: impl AsRef<Path>) -> Result<WorkflowSpec, WorkflowError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| WorkflowError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("workflow");
    parse_document(&text)?.into_spec(stem)
}

fn parse_document(text: &str) -> Result<WorkflowDocument, WorkflowError> {
    serde_json::from_str(text).map_err(|e| WorkflowError::Parse(e.to_string()))
}
