//! Seeded synthetic DAGs in the JSON workflow schema.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::schema::{ResourcesDoc, TaskDoc, WorkflowDocument};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DagShape {
    Chain,
    ForkJoin,
    Diamond,
    Layered,
}

impl FromStr for DagShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chain" => Ok(DagShape::Chain),
            "fork-join" | "forkjoin" => Ok(DagShape::ForkJoin),
            "diamond" => Ok(DagShape::Diamond),
            "layered" | "random" => Ok(DagShape::Layered),
            other => Err(format!("unknown DAG shape '{other}' (chain, fork-join, diamond, layered)")),
        }
    }
}

impl fmt::Display for DagShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DagShape::Chain => "chain",
            DagShape::ForkJoin => "fork-join",
            DagShape::Diamond => "diamond",
            DagShape::Layered => "layered",
        })
    }
}

#[derive(Debug, Clone)]
pub struct GenerateParams {
    pub shape: DagShape,
    pub tasks: usize,
    pub seed: u64,
    /// Budget cpu; task demands are drawn from 1..=min(max_task_cpu, budget).
    pub budget_cpu: u64,
    pub budget_memory: u64,
    pub max_task_cpu: u64,
    pub max_execution_time: u64,
    /// Shuffle ids so that id order is not a topological order.
    pub shuffle_ids: bool,
}

impl Default for GenerateParams {
    fn default() -> Self {
        GenerateParams {
            shape: DagShape::Layered,
            tasks: 20,
            seed: 0,
            budget_cpu: 10,
            budget_memory: 0,
            max_task_cpu: 4,
            max_execution_time: 100,
            shuffle_ids: true,
        }
    }
}

/// Builds an acyclic workflow document. Node `k` only ever depends on
/// nodes generated before it, which makes the result acyclic by
/// construction regardless of the id shuffle.
pub fn generate_dag(params: &GenerateParams) -> WorkflowDocument {
    let n = params.tasks;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let preds: Vec<Vec<usize>> = match params.shape {
        DagShape::Chain => (0..n).map(|k| if k == 0 { vec![] } else { vec![k - 1] }).collect(),
        DagShape::ForkJoin => (0..n)
            .map(|k| match k {
                0 => vec![],
                _ if k + 1 == n && n > 2 => (1..k).collect(),
                _ => vec![0],
            })
            .collect(),
        DagShape::Diamond => diamond(n),
        DagShape::Layered => layered(n, &mut rng),
    };

    let mut ids: Vec<u64> = (1..=n as u64).collect();
    if params.shuffle_ids {
        ids.shuffle(&mut rng);
    }
    let cpu_cap = params.max_task_cpu.clamp(1, params.budget_cpu.max(1));
    let mem_cap = params.budget_memory;
    let exec_cap = params.max_execution_time.max(1);
    let tasks = (0..n)
        .map(|k| {
            let mut deps: Vec<u64> = preds[k].iter().map(|&p| ids[p]).collect();
            deps.sort_unstable();
            TaskDoc {
                id: ids[k],
                execution_time: rng.gen_range(1..=exec_cap),
                resources: ResourcesDoc {
                    cpu: rng.gen_range(1..=cpu_cap),
                    memory: if mem_cap == 0 { 0 } else { rng.gen_range(0..=mem_cap) },
                },
                dependencies: deps,
            }
        })
        .collect();
    WorkflowDocument {
        workflow_id: Some(format!("{}-{}-s{}", params.shape, n, params.seed)),
        tasks,
        resources_available: ResourcesDoc { cpu: params.budget_cpu.max(1), memory: params.budget_memory },
        scheduling_policy: "Static".into(),
        preemption: false,
    }
}

// Repeated diamonds: top → (left, right) → bottom, bottom feeds the next top.
fn diamond(n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|k| {
            let base = k - k % 3;
            match k % 3 {
                0 if k == 0 => vec![],
                0 => vec![k - 2, k - 1],
                1 => vec![base],
                _ => vec![base],
            }
        })
        .collect()
}

fn layered(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let width = ((n as f64).sqrt().ceil() as usize).max(1);
    let mut layer_of = Vec::with_capacity(n);
    let mut layer_start = vec![0usize];
    let mut layer = 0;
    let mut in_layer = 0;
    let mut target = rng.gen_range(1..=width);
    for k in 0..n {
        if in_layer == target {
            layer += 1;
            layer_start.push(k);
            in_layer = 0;
            target = rng.gen_range(1..=width);
        }
        layer_of.push(layer);
        in_layer += 1;
    }
    (0..n)
        .map(|k| {
            let l = layer_of[k];
            if l == 0 {
                return vec![];
            }
            let prev = layer_start[l - 1]..layer_start[l];
            let mut deps = vec![rng.gen_range(prev)];
            let extra = rng.gen_range(0..=2);
            for _ in 0..extra {
                let d = rng.gen_range(0..layer_start[l]);
                if !deps.contains(&d) {
                    deps.push(d);
                }
            }
            deps
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_shape_is_a_valid_workflow() {
        for shape in [DagShape::Chain, DagShape::ForkJoin, DagShape::Diamond, DagShape::Layered] {
            for n in [1, 2, 3, 7, 50] {
                let doc = generate_dag(&GenerateParams { shape, tasks: n, seed: n as u64, ..Default::default() });
                let spec = doc.into_spec("g").unwrap_or_else(|e| panic!("{shape} {n}: {e}"));
                assert_eq!(spec.len(), n);
            }
        }
    }

    #[test]
    fn same_seed_same_document() {
        let p = GenerateParams { tasks: 40, seed: 9, ..Default::default() };
        assert_eq!(generate_dag(&p), generate_dag(&p));
        let q = GenerateParams { seed: 10, ..p.clone() };
        assert_ne!(generate_dag(&p), generate_dag(&q));
    }

    #[test]
    fn chain_is_serial() {
        let doc = generate_dag(&GenerateParams { shape: DagShape::Chain, tasks: 4, shuffle_ids: false, ..Default::default() });
        let deps: Vec<_> = doc.tasks.iter().map(|t| t.dependencies.clone()).collect();
        assert_eq!(deps, vec![vec![], vec![1], vec![2], vec![3]]);
    }
}
