//! Scheduling policies.
//!
//! Every policy is a pure decision over a [`SchedulingContext`]: it returns
//! the queue positions to start now, in start order, without touching the
//! pool. Policies live behind [`SchedulingPolicy`] and are looked up by name
//! in a [`PolicyRegistry`], so the engine and the CLI never match on a
//! concrete variant.

mod backfill;
mod best_fit;
mod fcfs;
mod ordered;
mod queue;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::resource::ResourcePool;
use crate::sim::SimTime;

pub use backfill::{plan_backfill, reserve, select_backfill, BackfillPlan, BackfillPolicy, Reservation};
pub use best_fit::{select_best_fit, BestFitPolicy};
pub use fcfs::{select_fcfs, FcfsPolicy};
pub use ordered::{select_ljf, select_sjf, LjfPolicy, SjfPolicy};
pub use queue::{QueuedJob, WaitQueue};

/// A job that holds resources, as a scheduler sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunningJob {
    pub cores: u64,
    pub memory: u64,
    /// start + requested runtime. May lie in the past for jobs that
    /// overran their estimate.
    pub expected_end: SimTime,
}

#[derive(Debug, Clone, Copy)]
pub struct SchedulingContext<'a> {
    pub queue: &'a WaitQueue,
    pub pool: &'a ResourcePool,
    pub now: SimTime,
    pub running: &'a [RunningJob],
}

pub trait SchedulingPolicy: Send + Sync {
    /// Registry key, also used for CLI flags and output directories.
    fn name(&self) -> &str;

    /// Queue positions to start now, in start order.
    fn select(&self, ctx: &SchedulingContext<'_>) -> Vec<usize>;

    /// Whether `select` looks at `ctx.running`; lets the engine skip
    /// building that list.
    fn needs_running(&self) -> bool {
        false
    }
}

impl fmt::Debug for dyn SchedulingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SchedulingPolicy({})", self.name())
    }
}

/// The built-in policy family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Fcfs,
    FcfsBackfill,
    FcfsBestFit,
    Sjf,
    Ljf,
}

impl Policy {
    pub const ALL: [Policy; 5] =
        [Policy::Fcfs, Policy::FcfsBackfill, Policy::FcfsBestFit, Policy::Sjf, Policy::Ljf];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Fcfs => "fcfs",
            Policy::FcfsBackfill => "backfill",
            Policy::FcfsBestFit => "bestfit",
            Policy::Sjf => "sjf",
            Policy::Ljf => "ljf",
        }
    }

    pub fn strategy(self) -> Arc<dyn SchedulingPolicy> {
        match self {
            Policy::Fcfs => Arc::new(FcfsPolicy),
            Policy::FcfsBackfill => Arc::new(BackfillPolicy),
            Policy::FcfsBestFit => Arc::new(BestFitPolicy),
            Policy::Sjf => Arc::new(SjfPolicy),
            Policy::Ljf => Arc::new(LjfPolicy),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown scheduling policy '{name}' (known: {})", .known.join(", "))]
pub struct UnknownPolicy {
    pub name: String,
    pub known: Vec<String>,
}

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace(['-', '_', '+'], "");
        match key.as_str() {
            "fcfs" => Ok(Policy::Fcfs),
            "backfill" | "fcfsbackfill" | "easy" => Ok(Policy::FcfsBackfill),
            "bestfit" | "fcfsbestfit" => Ok(Policy::FcfsBestFit),
            "sjf" => Ok(Policy::Sjf),
            "ljf" => Ok(Policy::Ljf),
            _ => Err(UnknownPolicy {
                name: s.to_string(),
                known: Policy::ALL.iter().map(|p| p.name().to_string()).collect(),
            }),
        }
    }
}

/// Name → strategy table.
#[derive(Clone, Default)]
pub struct PolicyRegistry {
    entries: BTreeMap<String, Arc<dyn SchedulingPolicy>>,
}

impl PolicyRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        for p in Policy::ALL {
            reg.register(p.strategy());
        }
        reg
    }

    /// Registers under `policy.name()`, returning any strategy it replaced.
    pub fn register(&mut self, policy: Arc<dyn SchedulingPolicy>) -> Option<Arc<dyn SchedulingPolicy>> {
        self.entries.insert(policy.name().to_string(), policy)
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SchedulingPolicy>, UnknownPolicy> {
        if let Some(p) = self.entries.get(name) {
            return Ok(Arc::clone(p));
        }
        // Fall back to the builtin aliases ("easy", "fcfs-backfill", ...).
        name.parse::<Policy>()
            .ok()
            .and_then(|p| self.entries.get(p.name()))
            .cloned()
            .ok_or_else(|| UnknownPolicy { name: name.to_string(), known: self.names() })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().cloned().collect()
    }
}

impl fmt::Debug for PolicyRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_resolves_all_builtin_names() {
        let reg = PolicyRegistry::builtin();
        assert_eq!(reg.names(), vec!["backfill", "bestfit", "fcfs", "ljf", "sjf"]);
        for p in Policy::ALL {
            assert_eq!(reg.get(p.name()).unwrap().name(), p.name());
        }
        assert_eq!(reg.get("EASY").unwrap().name(), "backfill");
        let err = reg.get("dras").unwrap_err();
        assert!(err.to_string().contains("dras"));
    }

    #[test]
    fn custom_policy_can_be_registered() {
        struct Nothing;
        impl SchedulingPolicy for Nothing {
            fn name(&self) -> &str {
                "idle"
            }
            fn select(&self, _: &SchedulingContext<'_>) -> Vec<usize> {
                Vec::new()
            }
        }
        let mut reg = PolicyRegistry::builtin();
        assert!(reg.register(Arc::new(Nothing)).is_none());
        assert_eq!(reg.get("idle").unwrap().name(), "idle");
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("FCFS".parse::<Policy>().unwrap(), Policy::Fcfs);
        assert_eq!("fcfs+backfill".parse::<Policy>().unwrap(), Policy::FcfsBackfill);
        assert_eq!("best-fit".parse::<Policy>().unwrap(), Policy::FcfsBestFit);
        assert!("rr".parse::<Policy>().is_err());
    }
}
