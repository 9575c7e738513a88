use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Context};

use super::{CliError, ExportArg, GenDagArgs, GnuplotArgs, OutputArgs, SimulateArgs, SweepArgs, TraceArgs, WorkflowArgs, Command};
use crate::engine::{run_batch, run_workflow, SimulationConfig, SimulationResult};
use crate::metrics::{export, read_series_csv, write_event_log, ExportFormat, SummaryStats};
use crate::scheduler::{Policy, PolicyRegistry};
use crate::sim::SimTime;
use crate::workflow::{generate_dag, load_workflow_file, Budget, GenerateParams};
use crate::workload::{load_workload, parse_workload, TraceFormat, Workload, WorkloadError};

pub(super) fn execute(cmd: Command, out: &mut dyn Write) -> Result<u8, CliError> {
    match cmd {
        Command::Simulate(a) => simulate(a, out),
        Command::Workflow(a) => workflow(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::ValidateTrace(a) => validate_trace(a, out),
        Command::GenDag(a) => gen_dag(a, out),
        Command::Gnuplot(a) => gnuplot(a, out),
    }
}

fn load_trace(trace: &TraceArgs) -> Result<Workload, CliError> {
    let format: TraceFormat = trace.format.into();
    let w = load_workload(&trace.input, format).map_err(|e| anyhow!(e))?;
    if w.rounded_fields > 0 {
        log::warn!("{} fractional time field(s) truncated to whole seconds", w.rounded_fields);
    }
    Ok(w)
}

fn machine_cores(flag: Option<u64>, workload: &Workload) -> Result<u64, CliError> {
    match flag {
        Some(c) => Ok(c),
        None if workload.machine_cores > 0 => Ok(workload.machine_cores.into()),
        None => Err(CliError::Usage("--cores is required: the trace header has no MaxProcs".into())),
    }
}

fn write_outputs(result: &SimulationResult, output: &OutputArgs, dir: &Path) -> anyhow::Result<()> {
    let format = match output.export {
        ExportArg::Csv => ExportFormat::Csv,
        ExportArg::Json => ExportFormat::Json,
    };
    export(&result.metrics, format, dir, output.cdf_points as usize)?;
    if output.event_log {
        write_event_log(result, &dir.join("events.csv"))?;
    }
    Ok(())
}

fn print_summary(out: &mut dyn Write, label: &str, s: &SummaryStats, result: &SimulationResult) -> anyhow::Result<()> {
    writeln!(out, "policy:      {label}")?;
    writeln!(out, "jobs:        {}", s.jobs)?;
    writeln!(out, "mean_wait:   {:.2}", s.mean_wait)?;
    writeln!(out, "median_wait: {:.2}", s.median_wait)?;
    writeln!(out, "max_wait:    {}", s.max_wait)?;
    writeln!(out, "makespan:    {}", s.makespan)?;
    writeln!(out, "utilization: {:.4}", s.utilization)?;
    writeln!(out, "final_time:  {}", result.final_time)?;
    if result.truncated {
        writeln!(out, "unfinished:  {} (stopped at stop_time)", result.metrics.unfinished.len())?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let registry = PolicyRegistry::builtin();
    let policy = registry.get(&a.policy).map_err(|e| CliError::Usage(e.to_string()))?;
    let workload = load_trace(&a.trace)?;
    let cores = machine_cores(a.machine.cores, &workload)?;
    let mut config = SimulationConfig::batch(workload, Arc::clone(&policy), cores).with_memory(a.machine.memory);
    if let Some(t) = a.stop_time {
        config = config.with_stop_time(SimTime(t));
    }
    let result = run_batch(&config).map_err(|e| anyhow!("policy {}: {e}", policy.name()))?;
    write_outputs(&result, &a.output, &a.output.out)?;
    print_summary(out, policy.name(), &result.metrics.summary(), &result)?;
    Ok(0)
}

fn workflow(a: WorkflowArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut spec = load_workflow_file(&a.input).map_err(|e| anyhow!(e))?;
    if a.cores.is_some() || a.memory.is_some() {
        let budget = Budget {
            cpu: a.cores.unwrap_or(spec.resources_available.cpu),
            memory: a.memory.unwrap_or(spec.resources_available.memory),
        };
        spec = spec.with_budget(budget).map_err(|e| anyhow!("invalid workflow: {e}"))?;
    }
    let id = spec.workflow_id.clone();
    let mut config = SimulationConfig::workflow(spec);
    if let Some(t) = a.stop_time {
        config = config.with_stop_time(SimTime(t));
    }
    let result = run_workflow(&config).map_err(|e| anyhow!(e))?;
    write_outputs(&result, &a.output, &a.output.out)?;
    writeln!(out, "workflow:    {id}").map_err(anyhow::Error::from)?;
    print_summary(out, "static", &result.metrics.summary(), &result)?;
    Ok(0)
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let workload = load_trace(&a.trace)?;
    let cores = machine_cores(a.machine.cores, &workload)?;
    let memory = a.machine.memory;
    let runs: Vec<(Policy, Result<SimulationResult, String>)> = std::thread::scope(|s| {
        let handles: Vec<_> = Policy::ALL
            .iter()
            .map(|&p| {
                let workload = &workload;
                s.spawn(move || {
                    let config = SimulationConfig::batch(workload.clone(), p.strategy(), cores).with_memory(memory);
                    (p, run_batch(&config).map_err(|e| e.to_string()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });

    let failures: Vec<String> = runs
        .iter()
        .filter_map(|(p, r)| r.as_ref().err().map(|e| format!("policy {p}: {e}")))
        .collect();
    if !failures.is_empty() {
        return Err(CliError::Runtime(anyhow!(failures.join("\n"))));
    }

    let mut table = String::from("policy,jobs,mean_wait,median_wait,max_wait,makespan,utilization\n");
    writeln!(out, "{:<10} {:>8} {:>12} {:>12} {:>10} {:>10} {:>12}", "policy", "jobs", "mean_wait", "median_wait", "max_wait", "makespan", "utilization")
        .map_err(anyhow::Error::from)?;
    for (p, r) in &runs {
        let result = r.as_ref().expect("failures handled above");
        write_outputs(result, &a.output, &a.output.out.join(p.name()))?;
        let s = result.metrics.summary();
        let _ = writeln!(
            table,
            "{},{},{:.2},{:.2},{},{},{:.4}",
            p, s.jobs, s.mean_wait, s.median_wait, s.max_wait, s.makespan, s.utilization
        );
        writeln!(
            out,
            "{:<10} {:>8} {:>12.2} {:>12.2} {:>10} {:>10} {:>12.4}",
            p.name(), s.jobs, s.mean_wait, s.median_wait, s.max_wait, s.makespan, s.utilization
        )
        .map_err(anyhow::Error::from)?;
    }
    let path = a.output.out.join("comparison.csv");
    std::fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?;
    Ok(0)
}

fn validate_trace(a: TraceArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("cannot read {}", a.input.display()))?;
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(anyhow::Error::from);
    match parse_workload(&text, a.format.into(), a.input.display().to_string()) {
        Ok(workload) => {
            w(out, format!("jobs: {}", workload.len()))?;
            w(out, format!("machine_cores: {}", workload.machine_cores))?;
            w(out, format!("max_job_cores: {}", workload.max_cores()))?;
            w(out, format!("rounded_fields: {}", workload.rounded_fields))?;
            w(out, "errors: 0".to_string())?;
            Ok(0)
        }
        Err(WorkloadError::Malformed(errors)) => {
            for e in &errors {
                w(out, e.to_string())?;
            }
            w(out, format!("errors: {}", errors.len()))?;
            Ok(1)
        }
        Err(e) => {
            w(out, format!("error: {e}"))?;
            w(out, "errors: 1".to_string())?;
            Ok(1)
        }
    }
}

fn gen_dag(a: GenDagArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    if a.tasks == 0 {
        return Err(CliError::Usage("--tasks must be at least 1".into()));
    }
    let doc = generate_dag(&GenerateParams {
        shape: a.shape.into(),
        tasks: a.tasks,
        seed: a.seed,
        budget_cpu: a.cpu,
        budget_memory: a.memory,
        max_task_cpu: a.max_task_cpu,
        max_execution_time: a.max_execution_time,
        shuffle_ids: true,
    });
    let mut json = doc.to_json_pretty();
    json.push('\n');
    match a.out {
        Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(json.as_bytes()).map_err(anyhow::Error::from)?,
    }
    Ok(0)
}

fn gnuplot(a: GnuplotArgs, out: &mut dyn Write) -> Result<u8, CliError> {
    let mut written = 0;
    for name in ["occupied", "running"] {
        let csv = a.dir.join(format!("{name}.csv"));
        if !csv.exists() {
            continue;
        }
        let series = read_series_csv(&csv).map_err(|e| anyhow!(e))?;
        let mut dat = format!("# time {name}\n");
        // Emit both ends of each step so `with lines` draws the staircase.
        for (k, &(t, v)) in series.points.iter().enumerate() {
            if k > 0 {
                let _ = writeln!(dat, "{} {}", t, series.points[k - 1].1);
            }
            let _ = writeln!(dat, "{t} {v}");
        }
        std::fs::write(a.dir.join(format!("{name}.dat")), dat).context("writing gnuplot data")?;
        written += 1;
    }
    let cdf = a.dir.join("wait_cdf.csv");
    if cdf.exists() {
        let text = std::fs::read_to_string(&cdf).context("reading wait_cdf.csv")?;
        let dat: String = std::iter::once("# wait fraction\n".to_string())
            .chain(text.lines().skip(1).map(|l| format!("{}\n", l.replace(',', " "))))
            .collect();
        std::fs::write(a.dir.join("wait_cdf.dat"), dat).context("writing gnuplot data")?;
        written += 1;
    }
    if written == 0 {
        return Err(CliError::Runtime(anyhow!("no series CSV files in {}", a.dir.display())));
    }
    writeln!(out, "wrote {written} gnuplot data file(s) to {}", a.dir.display()).map_err(anyhow::Error::from)?;
    Ok(0)
}
