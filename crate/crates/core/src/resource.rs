//! Homogeneous core pool with optional memory accounting.

use std::collections::HashMap;

use thiserror::Error;

use crate::workload::Job;

/// Anything that asks the pool for cores and memory.
pub trait ResourceRequest {
    fn cores(&self) -> u32;
    fn memory(&self) -> u64;
}

impl ResourceRequest for Job {
    fn cores(&self) -> u32 {
        self.required_cores
    }

    fn memory(&self) -> u64 {
        self.required_memory
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocation {
    pub cores: u64,
    pub memory: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResourceError {
    #[error("'{id}' needs {cores} cores / {memory} KB, only {available_cores} cores / {available_memory} KB free")]
    InsufficientResources {
        id: String,
        cores: u64,
        memory: u64,
        available_cores: u64,
        available_memory: u64,
    },
    #[error("'{0}' is already allocated")]
    DoubleAllocation(String),
    #[error("'{0}' holds no allocation")]
    UnknownAllocation(String),
    #[error("conservation violated: {0}")]
    ConservationViolated(String),
}

#[derive(Debug, Clone)]
pub struct ResourcePool {
    total_cores: u64,
    available_cores: u64,
    /// 0 disables memory enforcement.
    total_memory: u64,
    available_memory: u64,
    allocated_cores: u64,
    allocated_memory: u64,
    allocations: HashMap<String, Allocation>,
}

impl ResourcePool {
    pub fn new(total_cores: u64) -> Self {
        Self::with_memory(total_cores, 0)
    }

    pub fn with_memory(total_cores: u64, total_memory: u64) -> Self {
        ResourcePool {
            total_cores,
            available_cores: total_cores,
            total_memory,
            available_memory: total_memory,
            allocated_cores: 0,
            allocated_memory: 0,
            allocations: HashMap::new(),
        }
    }

    pub fn total_cores(&self) -> u64 {
        self.total_cores
    }

    pub fn available_cores(&self) -> u64 {
        self.available_cores
    }

    pub fn total_memory(&self) -> u64 {
        self.total_memory
    }

    pub fn available_memory(&self) -> u64 {
        self.available_memory
    }

    pub fn memory_enforced(&self) -> bool {
        self.total_memory > 0
    }

    pub fn allocation(&self, id: &str) -> Option<Allocation> {
        self.allocations.get(id).copied()
    }

    pub fn allocation_count(&self) -> usize {
        self.allocations.len()
    }

    /// Whether the request fits in what is free right now.
    pub fn can_allocate<R: ResourceRequest + ?Sized>(&self, req: &R) -> bool {
        u64::from(req.cores()) <= self.available_cores
            && (!self.memory_enforced() || req.memory() <= self.available_memory)
    }

    pub fn allocate<R: ResourceRequest + ?Sized>(&mut self, id: &str, req: &R) -> Result<(), ResourceError> {
        if self.allocations.contains_key(id) {
            return Err(ResourceError::DoubleAllocation(id.to_string()));
        }
        if !self.can_allocate(req) {
            return Err(ResourceError::InsufficientResources {
                id: id.to_string(),
                cores: req.cores().into(),
                memory: req.memory(),
                available_cores: self.available_cores,
                available_memory: self.available_memory,
            });
        }
        let alloc = Allocation {
            cores: req.cores().into(),
            memory: if self.memory_enforced() { req.memory() } else { 0 },
        };
        self.available_cores -= alloc.cores;
        self.available_memory -= alloc.memory;
        self.allocated_cores += alloc.cores;
        self.allocated_memory += alloc.memory;
        self.allocations.insert(id.to_string(), alloc);
        debug_assert!(self.counters_balanced());
        Ok(())
    }

    pub fn deallocate(&mut self, id: &str) -> Result<Allocation, ResourceError> {
        let alloc = self
            .allocations
            .remove(id)
            .ok_or_else(|| ResourceError::UnknownAllocation(id.to_string()))?;
        self.available_cores += alloc.cores;
        self.available_memory += alloc.memory;
        self.allocated_cores -= alloc.cores;
        self.allocated_memory -= alloc.memory;
        debug_assert!(self.counters_balanced());
        Ok(alloc)
    }

    fn counters_balanced(&self) -> bool {
        self.available_cores + self.allocated_cores == self.total_cores
            && self.available_cores <= self.total_cores
            && (!self.memory_enforced()
                || self.available_memory + self.allocated_memory == self.total_memory)
    }

    /// Full check: recomputes allocated totals from the allocation table.
    pub fn check_conservation(&self) -> Result<(), ResourceError> {
        let (cores, memory) = self
            .allocations
            .values()
            .fold((0u64, 0u64), |(c, m), a| (c + a.cores, m + a.memory));
        if self.available_cores > self.total_cores || self.available_cores + cores != self.total_cores {
            return Err(ResourceError::ConservationViolated(format!(
                "available {} + allocated {} != total {} cores",
                self.available_cores, cores, self.total_cores
            )));
        }
        if self.memory_enforced() && self.available_memory + memory != self.total_memory {
            return Err(ResourceError::ConservationViolated(format!(
                "available {} + allocated {} != total {} KB",
                self.available_memory, memory, self.total_memory
            )));
        }
        if cores != self.allocated_cores || memory != self.allocated_memory {
            return Err(ResourceError::ConservationViolated("running totals drifted".into()));
        }
        Ok(())
    }
}

/// Free capacity snapshot that selectors consume as they build a start list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Headroom {
    pub cores: u64,
    /// `None` when memory is not enforced.
    pub memory: Option<u64>,
}

impl Headroom {
    pub fn of(pool: &ResourcePool) -> Self {
        Headroom {
            cores: pool.available_cores,
            memory: pool.memory_enforced().then_some(pool.available_memory),
        }
    }

    pub fn fits<R: ResourceRequest + ?Sized>(&self, req: &R) -> bool {
        u64::from(req.cores()) <= self.cores && self.memory.map_or(true, |m| req.memory() <= m)
    }

    /// Caller must have checked `fits`.
    pub fn take<R: ResourceRequest + ?Sized>(&mut self, req: &R) {
        self.cores -= u64::from(req.cores());
        if let Some(m) = self.memory.as_mut() {
            *m -= req.memory();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(cores: u32) -> Job {
        Job::new("x", 0, cores, 1, 1)
    }

    #[test]
    fn exact_fit_and_shortfall() {
        let pool = ResourcePool::new(4);
        assert!(pool.can_allocate(&job(4)));
        let mut pool = ResourcePool::new(4);
        pool.allocate("a", &job(2)).unwrap();
        assert!(!pool.can_allocate(&job(3)));
    }

    #[test]
    fn memory_guard_only_when_enforced() {
        let mut pool = ResourcePool::with_memory(8, 1024);
        pool.allocate("a", &job(1).with_memory(512)).unwrap();
        assert_eq!(pool.available_memory(), 512);
        assert!(!pool.can_allocate(&job(1).with_memory(1024)));
        assert!(ResourcePool::new(8).can_allocate(&job(1).with_memory(1 << 30)));
    }

    #[test]
    fn allocate_deducts_cores() {
        let mut pool = ResourcePool::new(4);
        pool.allocate("j", &job(3)).unwrap();
        assert_eq!(pool.available_cores(), 1);
        assert_eq!(pool.allocation("j"), Some(Allocation { cores: 3, memory: 0 }));
    }

    #[test]
    fn double_allocation_rejected() {
        let mut pool = ResourcePool::new(4);
        pool.allocate("j", &job(1)).unwrap();
        assert_eq!(pool.allocate("j", &job(1)), Err(ResourceError::DoubleAllocation("j".into())));
        assert_eq!(pool.available_cores(), 3);
    }

    #[test]
    fn failed_allocation_is_side_effect_free() {
        let mut pool = ResourcePool::new(4);
        pool.allocate("a", &job(2)).unwrap();
        let err = pool.allocate("b", &job(3)).unwrap_err();
        assert!(matches!(err, ResourceError::InsufficientResources { .. }));
        assert_eq!(pool.available_cores(), 2);
        assert_eq!(pool.allocation_count(), 1);
    }

    #[test]
    fn deallocate_returns_cores() {
        let mut pool = ResourcePool::new(4);
        pool.allocate("j", &job(3)).unwrap();
        pool.deallocate("j").unwrap();
        assert_eq!(pool.available_cores(), 4);
        assert_eq!(pool.deallocate("j"), Err(ResourceError::UnknownAllocation("j".into())));
    }

    #[test]
    fn partial_release_keeps_other_allocations() {
        let mut pool = ResourcePool::new(4);
        pool.allocate("J1", &job(2)).unwrap();
        pool.allocate("J2", &job(2)).unwrap();
        pool.deallocate("J1").unwrap();
        assert_eq!(pool.available_cores(), 2);
        assert!(pool.allocation("J2").is_some());
        pool.check_conservation().unwrap();
    }

    #[test]
    fn headroom_tracks_virtual_takes() {
        let pool = ResourcePool::with_memory(6, 100);
        let mut h = Headroom::of(&pool);
        assert!(h.fits(&job(2).with_memory(60)));
        h.take(&job(2).with_memory(60));
        assert!(!h.fits(&job(1).with_memory(50)));
        assert!(h.fits(&job(4).with_memory(40)));
        assert_eq!(pool.available_cores(), 6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum Op {
            Alloc(u8, u32, u64),
            Free(u8),
        }

        fn op() -> impl Strategy<Value = Op> {
            prop_oneof![
                (0u8..12, 1u32..9, 0u64..300).prop_map(|(i, c, m)| Op::Alloc(i, c, m)),
                (0u8..12).prop_map(Op::Free),
            ]
        }

        proptest! {
            #[test]
            fn conservation_under_random_ops(ops in proptest::collection::vec(op(), 0..80), mem in prop_oneof![Just(0u64), 200u64..1000]) {
                let mut pool = ResourcePool::with_memory(16, mem);
                for op in ops {
                    let before = (pool.available_cores(), pool.available_memory(), pool.allocation_count());
                    let ok = match op {
                        Op::Alloc(i, c, m) => pool.allocate(&i.to_string(), &job(c).with_memory(m)).is_ok(),
                        Op::Free(i) => pool.deallocate(&i.to_string()).is_ok(),
                    };
                    if !ok {
                        prop_assert_eq!(before, (pool.available_cores(), pool.available_memory(), pool.allocation_count()));
                    }
                    prop_assert!(pool.check_conservation().is_ok());
                }
            }

            #[test]
            fn allocate_then_free_is_identity(pre in 0u32..8, c in 1u32..9) {
                let mut pool = ResourcePool::new(16);
                if pre > 0 {
                    pool.allocate("pre", &job(pre)).unwrap();
                }
                let before = pool.available_cores();
                pool.allocate("x", &job(c)).unwrap();
                pool.deallocate("x").unwrap();
                prop_assert_eq!(pool.available_cores(), before);
            }
        }
    }
}
