//! Test-only helpers: a brute-force time-stepping oracle of the batch
//! policies, random workload generators and synthetic traces.
#![allow(dead_code)]

pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hpcsim::workload::{synthetic_workload, SyntheticJob, Workload};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random workload: ≤ 50 jobs, ≤ 16 cores, runtimes ≤ 100 s.
/// Requested runtimes over- and under-estimate so backfill sees both.
pub fn random_workload(seed: u64) -> (Workload, u64) {
    let mut r = rng(seed);
    let cores: u64 = r.gen_range(1..=16);
    let n = r.gen_range(1..=50);
    let span = r.gen_range(0..=300u64);
    let spec: Vec<SyntheticJob> = (0..n)
        .map(|_| {
            // Bunch arrivals so equal timestamps are common.
            let submit = if r.gen_bool(0.3) { 0 } else { r.gen_range(0..=span) / 5 * 5 };
            let c = r.gen_range(1..=cores) as u32;
            let run = if r.gen_bool(0.05) { 0 } else { r.gen_range(1..=100) };
            let req = match r.gen_range(0..3) {
                0 => run,
                1 => r.gen_range(run..=run + 100),
                _ => r.gen_range(0..=run),
            };
            (submit, c, run, req)
        })
        .collect();
    (synthetic_workload(&spec).unwrap(), cores)
}

/// Seeded SWF text with `n` jobs on a `machine`-core system, offered load
/// around 0.7.
pub fn synthetic_swf(n: usize, machine: u32, seed: u64) -> String {
    let mut r = rng(seed);
    let mut out = String::with_capacity(n * 64);
    out.push_str(&format!("; Version: 2.2\n; MaxJobs: {n}\n; MaxProcs: {machine}\n"));
    let max_pow = (machine as f64).log2().floor() as u32;
    let mut t: u64 = 0;
    // Mean job area (cores × runtime) used to pace arrivals.
    let mean_cores = ((1u64 << (max_pow + 1)) - 1) as f64 / (max_pow + 1) as f64;
    let mean_run = 1800.0;
    let gap = mean_cores * mean_run / (machine as f64 * 0.7);
    for id in 1..=n {
        let u: f64 = r.gen_range(f64::EPSILON..1.0);
        t += (-u.ln() * gap) as u64;
        let cores = 1u32 << r.gen_range(0..=max_pow);
        let run = r.gen_range(1..=3600u64);
        let req = if r.gen_bool(0.5) { run } else { run + r.gen_range(0..=3600) };
        let wait = r.gen_range(0..=100);
        out.push_str(&format!(
            "{id} {t} {wait} {run} {cores} -1 -1 {cores} {req} -1 1 1 1 1 1 -1 -1 -1\n"
        ));
    }
    out
}
