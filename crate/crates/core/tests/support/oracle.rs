//! One-second time-stepping reference simulator.
//!
//! Walks the clock second by second, releasing jobs whose finish equals the
//! current second, admitting arrivals, and applying the policy rule written
//! out directly over plain vectors. Shares no code with the engine or the
//! library selectors.

use hpcsim::workload::Workload;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Fcfs,
    Backfill,
    BestFit,
    Sjf,
    Ljf,
}

impl Rule {
    pub const ALL: [Rule; 5] = [Rule::Fcfs, Rule::Backfill, Rule::BestFit, Rule::Sjf, Rule::Ljf];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Fcfs => "fcfs",
            Rule::Backfill => "backfill",
            Rule::BestFit => "bestfit",
            Rule::Sjf => "sjf",
            Rule::Ljf => "ljf",
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct J {
    submit: u64,
    cores: u64,
    run: u64,
    req: u64,
}

#[derive(Debug, Clone, Copy)]
struct Busy {
    job: usize,
    finish: u64,
    estimate: u64,
}

/// `(start, finish)` per job, indexed like `workload.jobs`.
pub fn simulate(workload: &Workload, total: u64, rule: Rule) -> Vec<(u64, u64)> {
    let jobs: Vec<J> = workload
        .jobs
        .iter()
        .map(|j| J { submit: j.submit_time.0, cores: j.required_cores as u64, run: j.actual_runtime, req: j.requested_runtime })
        .collect();
    let n = jobs.len();
    let mut out = vec![(u64::MAX, u64::MAX); n];
    let mut free = total;
    let mut queue: Vec<usize> = Vec::new();
    let mut busy: Vec<Busy> = Vec::new();
    let mut done = 0;
    let mut next_arrival = 0;
    let mut t = 0u64;
    while done < n {
        let mut event = false;
        loop {
            let before = busy.len();
            busy.retain(|b| {
                if b.finish == t {
                    free += jobs[b.job].cores;
                    false
                } else {
                    true
                }
            });
            let finished = before - busy.len();
            done += finished;
            event |= finished > 0;
            while next_arrival < n && jobs[next_arrival].submit == t {
                queue.push(next_arrival);
                next_arrival += 1;
                event = true;
            }
            if !event {
                break;
            }
            event = false;
            let chosen = decide(rule, &jobs, &queue, free, t, &busy);
            for &i in &chosen {
                free -= jobs[i].cores;
                out[i] = (t, t + jobs[i].run);
                busy.push(Busy { job: i, finish: t + jobs[i].run, estimate: t + jobs[i].req });
                // A zero-length job finishes this same second and forces another pass.
                event |= jobs[i].run == 0;
            }
            queue.retain(|q| !chosen.contains(q));
        }
        t += 1;
    }
    out
}

fn prefix(jobs: &[J], order: &[usize], mut free: u64) -> Vec<usize> {
    let mut picked = Vec::new();
    for &i in order {
        if jobs[i].cores > free {
            break;
        }
        free -= jobs[i].cores;
        picked.push(i);
    }
    picked
}

fn decide(rule: Rule, jobs: &[J], queue: &[usize], free: u64, now: u64, busy: &[Busy]) -> Vec<usize> {
    match rule {
        Rule::Fcfs => prefix(jobs, queue, free),
        Rule::Sjf | Rule::Ljf => {
            let mut order = queue.to_vec();
            // Insertion sort, stable by construction.
            for k in 1..order.len() {
                let mut m = k;
                while m > 0 && before(rule, jobs, order[m], order[m - 1]) {
                    order.swap(m, m - 1);
                    m -= 1;
                }
            }
            prefix(jobs, &order, free)
        }
        Rule::BestFit => {
            let mut free = free;
            let mut left = queue.to_vec();
            let mut picked = Vec::new();
            loop {
                let mut best: Option<(u64, usize)> = None;
                for (k, &i) in left.iter().enumerate() {
                    if jobs[i].cores <= free {
                        let waste = free - jobs[i].cores;
                        if best.map_or(true, |(w, _)| waste < w) {
                            best = Some((waste, k));
                        }
                    }
                }
                let Some((_, k)) = best else { break };
                let i = left.remove(k);
                free -= jobs[i].cores;
                picked.push(i);
            }
            picked
        }
        Rule::Backfill => {
            let mut picked = prefix(jobs, queue, free);
            if picked.len() == queue.len() {
                return picked;
            }
            let mut room = free - picked.iter().map(|&i| jobs[i].cores).sum::<u64>();
            let head = queue[picked.len()];
            let mut ends: Vec<(u64, u64)> = busy.iter().map(|b| (b.estimate.max(now), jobs[b.job].cores)).collect();
            ends.extend(picked.iter().map(|&i| (now + jobs[i].req, jobs[i].cores)));
            let horizon = ends.iter().map(|e| e.0).max().unwrap_or(now);
            let free_at = |s: u64| room + ends.iter().filter(|e| e.0 <= s).map(|e| e.1).sum::<u64>();
            let Some(shadow) = (now..=horizon).find(|&s| free_at(s) >= jobs[head].cores) else {
                return picked;
            };
            let mut extra = free_at(shadow) - jobs[head].cores;
            for &i in &queue[picked.len() + 1..] {
                if jobs[i].cores > room {
                    continue;
                }
                if now + jobs[i].req <= shadow {
                    room -= jobs[i].cores;
                    picked.push(i);
                } else if jobs[i].cores <= extra {
                    room -= jobs[i].cores;
                    extra -= jobs[i].cores;
                    picked.push(i);
                }
            }
            picked
        }
    }
}

fn before(rule: Rule, jobs: &[J], a: usize, b: usize) -> bool {
    match rule {
        Rule::Sjf => jobs[a].req < jobs[b].req,
        _ => jobs[a].req > jobs[b].req,
    }
}
