use std::process::ExitCode;

use anyhow::Context;

use cbce::intervals::{partition_ds, partition_gc, Interval};
use cbce::sleeping_cb::Truncation;
use cbce_cli::config::{parse_args, CheckArgs, CheckKind, Command, PartitionArgs, ScheduleArg};
use cbce_cli::csv_io::Trace;
use cbce_cli::simulate::{run_lea, run_oco};
use cbce_cli::sweeps::{self, SweepReport};

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args()) {
        Ok(cli) => cli,
        Err(e) => match e.downcast_ref::<clap::Error>() {
            Some(ce) => ce.exit(),
            None => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
    };
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::RunLea(args) => {
            let traces = run_lea(&args)?;
            summarize(&traces, &args.common.out);
        }
        Command::RunOco(args) => {
            let traces = run_oco(&args)?;
            summarize(&traces, &args.common.out);
        }
        Command::CheckBounds(args) => return Ok(check_bounds(&args)),
        Command::Partition(args) => partition(&args)?,
    }
    Ok(true)
}

/// Mean total loss per algorithm across seeds.
fn summarize(traces: &[Trace], out: &std::path::Path) {
    let mut labels: Vec<&str> = Vec::new();
    for t in traces {
        if !labels.contains(&t.algorithm.as_str()) {
            labels.push(&t.algorithm);
        }
    }
    for label in labels {
        let totals: Vec<f64> = traces.iter().filter(|t| t.algorithm == label).map(Trace::total).collect();
        let mean = totals.iter().sum::<f64>() / totals.len() as f64;
        println!("{label:<12} seeds={:<4} mean total loss={mean:.4}", totals.len());
    }
    println!("wrote {}", out.display());
}

fn check_bounds(args: &CheckArgs) -> bool {
    let truncation = if args.inject_fault { Truncation::Flipped } else { Truncation::Standard };
    let n = |default: usize| args.instances.unwrap_or(default);
    let wanted = |k: CheckKind| args.check == CheckKind::All || args.check == k;
    let mut reports: Vec<SweepReport> = Vec::new();
    if wanted(CheckKind::ActiveCardinality) {
        reports.push(sweeps::active_cardinality(args.t_max));
    }
    if wanted(CheckKind::Partitions) {
        reports.push(sweeps::partitions(n(1000), args.t_max.min(16384), args.seed));
    }
    if wanted(CheckKind::Wealth) {
        reports.push(sweeps::wealth(n(1000), 64, args.seed));
    }
    if wanted(CheckKind::SleepingBound) {
        reports.push(sweeps::sleeping_bound(n(200), args.seed, truncation));
    }
    if wanted(CheckKind::MetaBound) {
        reports.push(sweeps::meta_bound(n(100), 256, 100, args.seed, truncation));
    }
    if wanted(CheckKind::Ogd) {
        reports.push(sweeps::ogd(n(100), 1024, args.seed));
    }
    if wanted(CheckKind::Conversion) {
        reports.push(sweeps::conversion(n(5), 100, 900, args.seed));
    }
    for r in &reports {
        println!("{r}");
    }
    let ok = reports.iter().all(SweepReport::passed);
    println!("{}", if ok { "all checks passed" } else { "bound violations found" });
    ok
}

fn partition(args: &PartitionArgs) -> anyhow::Result<()> {
    let interval = Interval::new(args.start, args.end).context("invalid interval")?;
    let blocks = match args.schedule {
        ScheduleArg::Gc => partition_gc(interval),
        ScheduleArg::Ds => partition_ds(interval, args.g)?,
    };
    for b in blocks {
        println!("{b}");
    }
    Ok(())
}
