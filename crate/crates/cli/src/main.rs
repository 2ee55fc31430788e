mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use dirinfo::estimators::{bound_sandwich, sweep, CapacityRecord, InitialState, SolveSettings, SweepPoint};
use dirinfo::{solve, ChannelFactors, FscKernel, RunStatus};

use config::NamedChannel;

/// Feedback capacity of finite-state channels by alternating maximization
/// of directed information.
#[derive(Parser)]
#[command(name = "dirinfo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one block length and print the capacity summary.
    Solve {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Block length.
        #[arg(long)]
        n: usize,
        /// Feedback delay.
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Write the per-iteration bounds `iter,I_L,I_U,gap` to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve a grid of block lengths, delays or trapdoor sizes.
    Sweep {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Block lengths: `8`, `1..8` or `2,4,6`.
        #[arg(long)]
        n: String,
        /// Feedback delays, same syntax as `--n`.
        #[arg(long, default_value = "1")]
        d: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check a channel definition and print table sizes for a run.
    Validate {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
}

#[derive(Args)]
struct ChannelArgs {
    /// `bsc:p`, `trapdoor:m`, `trapdoor:a..b` (sweep only), `ising`, or a channel file.
    #[arg(long)]
    channel: String,
    /// `identity`, `const`, or explicit pairs `y:z,y:z,...`.
    #[arg(long, default_value = "identity")]
    feedback: String,
}

#[derive(Args)]
struct RunArgs {
    /// Stop once I_U - I_L drops below this many bits.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
    /// Initial channel state: `fixed:k` or `sandwich` (all states, with bounds).
    #[arg(long, default_value = "fixed:0")]
    s0: String,
    /// Write the CSV result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent points (default: DIRINFO_WORKERS or all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Permit runs whose table estimate exceeds 1 GiB.
    #[arg(long)]
    allow_large: bool,
    /// Leave the `seconds` column empty so output is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

impl RunArgs {
    fn settings(&self, delay: usize, channel: &NamedChannel, feedback: &str) -> Result<SolveSettings> {
        if self.eps.is_nan() || self.eps <= 0.0 {
            bail!("--eps must be positive, got {}", self.eps);
        }
        if delay == 0 {
            bail!("--d must be at least 1");
        }
        Ok(SolveSettings {
            delay,
            feedback: config::parse_feedback(feedback, channel.fsc.y_size())?,
            tolerance: self.eps,
            max_iterations: self.max_iter,
        })
    }

    fn initial_state(&self, channels: &[NamedChannel]) -> Result<InitialState> {
        let s0 = config::parse_initial_state(&self.s0)?;
        if let InitialState::Fixed(k) = s0 {
            for c in channels {
                if k >= c.fsc.s_size() {
                    bail!(
                        "--s0: state {k} does not exist, `{}` has {} states",
                        c.label,
                        c.fsc.s_size()
                    );
                }
            }
        }
        Ok(s0)
    }

    fn check_size(&self, fsc: &FscKernel, n: usize) -> Result<()> {
        let bytes = config::estimated_bytes(fsc.x_size(), fsc.y_size(), n);
        if bytes > config::LARGE_RUN_BYTES && !self.allow_large {
            bail!(
                "--n {n}: tables need about {:.2} GiB; pass --allow-large to run anyway",
                bytes / config::LARGE_RUN_BYTES
            );
        }
        Ok(())
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("--out: cannot create {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn exit_for(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn cmd_solve(channel: &ChannelArgs, n: usize, d: usize, trace: Option<&PathBuf>, run: &RunArgs) -> Result<ExitCode> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    let ch = config::parse_channel(&channel.channel)?;
    let settings = run.settings(d, &ch, &channel.feedback)?;
    let s0 = run.initial_state(std::slice::from_ref(&ch))?;
    run.check_size(&ch.fsc, n)?;

    let start = Instant::now();
    let (record, best) = match s0 {
        InitialState::Fixed(k) => {
            let r = solve(settings.problem(&ch.fsc, n, k)?)?;
            let rec = CapacityRecord {
                n,
                upper: None,
                estimate: r.capacity().unwrap_or(f64::NAN),
                lower: None,
                delta: None,
                converged: r.status() == RunStatus::Converged,
                iterations: r.iteration(),
                seconds: 0.0,
            };
            (rec, r)
        }
        InitialState::Sandwich => {
            let s = bound_sandwich(&ch.fsc, n, &settings)?;
            let rec = CapacityRecord {
                n,
                upper: Some(s.upper),
                estimate: s.estimate,
                lower: Some(s.lower),
                delta: None,
                converged: s.converged,
                iterations: s.best_run.iteration(),
                seconds: 0.0,
            };
            (rec, s.best_run)
        }
    };
    let record = CapacityRecord {
        seconds: start.elapsed().as_secs_f64(),
        ..record
    };

    if let Some(path) = trace {
        let f = File::create(path).with_context(|| format!("--trace: cannot create {}", path.display()))?;
        report::write_trace(BufWriter::new(f), best.history())?;
    }
    report::write_summary(run.output()?, d, &record, !run.no_timing)?;
    if let RunStatus::NotConverged { gap } = best.status() {
        eprintln!("warning: iteration cap {} reached with gap {gap:.3e}", run.max_iter);
    }
    Ok(exit_for(record.converged))
}

fn cmd_sweep(channel: &ChannelArgs, n: &str, d: &str, run: &RunArgs) -> Result<ExitCode> {
    let channels = config::parse_channels(&channel.channel)?;
    let ns = config::parse_range(n).context("--n")?;
    let ds = config::parse_range(d).context("--d")?;
    if ns.contains(&0) {
        bail!("--n: block lengths must be at least 1");
    }
    let channel_ranged = channels.len() > 1;
    let delay_ranged = config::is_ranged(d);
    if !(channel_ranged || delay_ranged || config::is_ranged(n)) {
        bail!("sweep needs a range in --n, --d or --channel; use `solve` for a single point");
    }
    let s0 = run.initial_state(&channels)?;
    let n_max = *ns.iter().max().unwrap();
    for c in &channels {
        run.check_size(&c.fsc, n_max)?;
    }

    let mut points = Vec::new();
    for c in &channels {
        for &delay in &ds {
            let label = match (channel_ranged, delay_ranged) {
                (true, true) => format!("{};d={delay}", c.label),
                (false, true) => format!("d={delay}"),
                _ => c.label.clone(),
            };
            points.push(SweepPoint::new(
                label,
                c.fsc.clone(),
                run.settings(delay, c, &channel.feedback)?,
            ));
        }
    }

    let workers = config::worker_count(run.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")?;
    let result = pool.install(|| sweep(&points, &ns, s0));

    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut all_converged = true;
    for (label, curve) in &result.curves {
        for (n, e) in &curve.failures {
            all_ok = false;
            eprintln!("error: point {label} n={n}: {e}");
        }
        for &k in &ns {
            let record = curve.get(k);
            all_converged &= record.is_none_or(|r| r.converged);
            rows.push(report::SweepRow {
                param: label,
                n: k,
                record,
            });
        }
    }
    report::write_sweep(run.output()?, &rows, !run.no_timing)?;

    if result.curves.len() > 1 {
        let t = &result.trend;
        let values: Vec<String> = t
            .values
            .iter()
            .map(|(l, v)| format!("{l}={}", report::sig9(*v)))
            .collect();
        eprintln!(
            "trend: {} (strictly decreasing: {}, non-increasing: {})",
            values.join(" "),
            t.strictly_decreasing,
            t.non_increasing
        );
    }
    if !all_ok {
        return Ok(ExitCode::FAILURE);
    }
    Ok(exit_for(all_converged))
}

fn shape(rows: f64, cols: usize) -> String {
    format!("{rows:.0} x {cols}")
}

fn cmd_validate(channel: &ChannelArgs, n: usize, d: usize) -> Result<ExitCode> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    if d == 0 {
        bail!("--d must be at least 1");
    }
    let ch = config::parse_channel(&channel.channel)?;
    let fsc = &ch.fsc;
    let (x, y, s) = (fsc.x_size(), fsc.y_size(), fsc.s_size());
    let fb = config::parse_feedback(&channel.feedback, y)?;
    let z = fb.as_ref().map_or(y, |f| f.z_size());
    for s0 in 0..s {
        let unrolled = fsc.unroll(2, s0)?;
        ChannelFactors::from_tables(2, x, y, unrolled.tables().to_vec())
            .with_context(|| format!("unrolled channel from state {s0}"))?;
    }
    if ch.label == "ising" && d == 1 {
        eprintln!("warning: the Ising channel with delay 1 is not a practical configuration; proceeding");
    }

    let mut out = io::stdout().lock();
    writeln!(
        out,
        "channel {}: |X|={x} |Y|={y} |S|={s}, unrolls cleanly from every state",
        ch.label
    )?;
    writeln!(out, "run n={n} d={d} |Z|={z}")?;
    for i in 1..=n {
        let channel_rows = ((x * y) as f64).powi(i as i32 - 1) * x as f64;
        let kernel_rows = (x as f64).powi(i as i32 - 1) * (z as f64).powi(i.saturating_sub(d) as i32);
        writeln!(
            out,
            "  step {i}: channel factor {}, kernel table {}",
            shape(channel_rows, y),
            shape(kernel_rows, x)
        )?;
    }
    let cells = config::table_cells(x, y, n);
    let bytes = config::estimated_bytes(x, y, n);
    writeln!(
        out,
        "estimated table cells n(|X||Y|)^n = {cells:.0} ({:.3} GiB at 8 bytes per cell)",
        bytes / config::LARGE_RUN_BYTES
    )?;
    if bytes > config::LARGE_RUN_BYTES {
        writeln!(out, "runs of this size require --allow-large")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Solve {
            channel,
            n,
            d,
            trace,
            run,
        } => cmd_solve(channel, *n, *d, trace.as_ref(), run),
        Command::Sweep { channel, n, d, run } => cmd_sweep(channel, n, d, run),
        Command::Validate { channel, n, d } => cmd_validate(channel, *n, *d),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::FAILURE,
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
