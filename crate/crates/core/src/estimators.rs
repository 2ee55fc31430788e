//! Capacity estimates for finite-state channels assembled from block-length
//! solutions.
//!
//! For an FSC with state set `S`, the block-`n` optimum depends on the
//! initial state. [`bound_sandwich`] solves every initial state and reports
//!
//! * `C̄_n = max_{s0} C_n(s0) + log2|S| / n`,
//! * `C_n = max_{s0} C_n(s0)`,
//! * `C*_n = min_{s0'} I_L(r*, q_{s0'}) - log2|S| / n`, where `r*` is the
//!   kernel of the maximizing `s0` and `q_{s0'}` its exact posterior on the
//!   channel started in `s0'`.
//!
//! The rate estimator `Δ_n = (n+1) C_{n+1} - n C_n` usually settles faster
//! than `C_n` itself.

use std::time::Instant;

use rayon::prelude::*;

use crate::baa::{BaaProblem, BaaRun, RunStatus, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use crate::channel::{FeedbackMap, FscKernel};
use crate::error::{domain, Error, Result};

/// Everything except the channel and horizon that a solve needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSettings {
    pub delay: usize,
    /// `None` means identity feedback.
    pub feedback: Option<FeedbackMap>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            delay: 1,
            feedback: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SolveSettings {
    pub fn with_delay(delay: usize) -> Self {
        Self {
            delay,
            ..Self::default()
        }
    }

    /// Block-`n` problem for `fsc` started in `s0`.
    pub fn problem(&self, fsc: &FscKernel, n: usize, s0: usize) -> Result<BaaProblem> {
        let mut p = BaaProblem::new(fsc.unroll(n, s0)?, self.delay)?
            .with_tolerance(self.tolerance)?
            .with_max_iterations(self.max_iterations);
        if let Some(f) = &self.feedback {
            p = p.with_feedback(f.clone())?;
        }
        Ok(p)
    }
}

/// How the initial channel state is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Fixed(usize),
    /// Solve every initial state and report the bound triple.
    Sandwich,
}

/// Output of [`bound_sandwich`]. `best_run` is the solved run of the
/// maximizing initial state.
pub struct Sandwich {
    pub upper: f64,
    pub estimate: f64,
    pub lower: f64,
    pub best_s0: usize,
    /// Every per-state solve converged.
    pub converged: bool,
    pub best_run: BaaRun,
}

pub fn bound_sandwich(fsc: &FscKernel, n: usize, settings: &SolveSettings) -> Result<Sandwich> {
    if n == 0 {
        return Err(domain("horizon must be at least 1"));
    }
    let penalty = (fsc.s_size() as f64).log2() / n as f64;
    let mut best: Option<(usize, BaaRun)> = None;
    let mut converged = true;
    for s0 in 0..fsc.s_size() {
        let run = crate::baa::solve(settings.problem(fsc, n, s0)?)?;
        converged &= run.converged();
        let better = match &best {
            None => true,
            Some((_, b)) => run.capacity() > b.capacity(),
        };
        if better {
            best = Some((s0, run));
        }
    }
    let (best_s0, best_run) = best.expect("an FSC has at least one state");
    let estimate = best_run.capacity().unwrap_or(f64::NAN);
    let kernel = best_run.kernel().expect("solved run has a kernel").clone();

    let mut worst = f64::INFINITY;
    for s0 in 0..fsc.s_size() {
        let value = if s0 == best_s0 {
            // q of the best run is already the exact posterior of its kernel
            estimate
        } else {
            let mut run = BaaRun::init(settings.problem(fsc, n, s0)?)?;
            run.set_kernel(kernel.clone())?;
            run.update_q()?;
            run.lower_bound()?
        };
        worst = worst.min(value);
    }
    Ok(Sandwich {
        upper: estimate + penalty,
        estimate,
        lower: worst - penalty,
        best_s0,
        converged,
        best_run,
    })
}

/// One horizon of a [`CapacityCurve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityRecord {
    pub n: usize,
    pub upper: Option<f64>,
    pub estimate: f64,
    pub lower: Option<f64>,
    /// `(n+1) C_{n+1} - n C_n`, filled in once both horizons are known.
    pub delta: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub seconds: f64,
}

/// Per-horizon records sorted by `n`, plus horizons that failed outright.
#[derive(Debug, Clone, Default)]
pub struct CapacityCurve {
    pub records: Vec<CapacityRecord>,
    pub failures: Vec<(usize, Error)>,
}

impl CapacityCurve {
    pub fn from_parts(mut records: Vec<CapacityRecord>, mut failures: Vec<(usize, Error)>) -> Self {
        records.sort_by_key(|r| r.n);
        failures.sort_by_key(|f| f.0);
        let mut curve = Self { records, failures };
        curve.fill_deltas();
        curve
    }

    pub fn get(&self, n: usize) -> Option<&CapacityRecord> {
        self.records.iter().find(|r| r.n == n)
    }

    fn fill_deltas(&mut self) {
        let deltas: Vec<Option<f64>> = self.records.iter().map(|r| rate_estimator(self, r.n).ok()).collect();
        for (r, d) in self.records.iter_mut().zip(deltas) {
            r.delta = d;
        }
    }

    /// The record with the largest `n` that carries a rate estimate.
    pub fn last_delta(&self) -> Option<(usize, f64)> {
        self.records.iter().rev().find_map(|r| r.delta.map(|d| (r.n, d)))
    }
}

/// `Δ_n = (n+1) C_{n+1} - n C_n`; both horizons must be present and converged.
pub fn rate_estimator(curve: &CapacityCurve, n: usize) -> Result<f64> {
    let get = |k: usize| {
        curve
            .get(k)
            .filter(|r| r.converged)
            .map(|r| r.estimate)
            .ok_or(Error::MissingHorizon(k))
    };
    let a = get(n)?;
    let b = get(n + 1)?;
    Ok((n + 1) as f64 * b - n as f64 * a)
}

/// Solves one horizon; `seconds` is wall-clock time for the whole point.
pub fn capacity_record(
    fsc: &FscKernel,
    n: usize,
    s0: InitialState,
    settings: &SolveSettings,
) -> Result<CapacityRecord> {
    let start = Instant::now();
    let mut rec = match s0 {
        InitialState::Fixed(s) => {
            let run = crate::baa::solve(settings.problem(fsc, n, s)?)?;
            CapacityRecord {
                n,
                upper: None,
                estimate: run.capacity().unwrap_or(f64::NAN),
                lower: None,
                delta: None,
                converged: run.status() == RunStatus::Converged,
                iterations: run.iteration(),
                seconds: 0.0,
            }
        }
        InitialState::Sandwich => {
            let s = bound_sandwich(fsc, n, settings)?;
            CapacityRecord {
                n,
                upper: Some(s.upper),
                estimate: s.estimate,
                lower: Some(s.lower),
                delta: None,
                converged: s.converged,
                iterations: s.best_run.iteration(),
                seconds: 0.0,
            }
        }
    };
    rec.seconds = start.elapsed().as_secs_f64();
    Ok(rec)
}

/// Solves every horizon in `horizons`, in parallel on the current rayon pool.
pub fn capacity_curve(
    fsc: &FscKernel,
    horizons: &[usize],
    s0: InitialState,
    settings: &SolveSettings,
) -> CapacityCurve {
    sweep(&[SweepPoint::new("", fsc.clone(), settings.clone())], horizons, s0)
        .curves
        .pop()
        .map(|(_, c)| c)
        .unwrap_or_default()
}

/// One parameter value of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: String,
    pub channel: FscKernel,
    pub settings: SolveSettings,
}

impl SweepPoint {
    pub fn new(label: impl Into<String>, channel: FscKernel, settings: SolveSettings) -> Self {
        Self {
            label: label.into(),
            channel,
            settings,
        }
    }
}

/// Whether a per-parameter summary moves in one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    /// `(label, value)` for every parameter that produced a value; the value
    /// is the rate estimate at the largest available horizon, or `C_n` there
    /// when no rate estimate exists.
    pub values: Vec<(String, f64)>,
    pub strictly_decreasing: bool,
    pub non_increasing: bool,
}

impl Trend {
    /// `slack` absorbs solver tolerance in the non-increasing check.
    pub fn from_values(values: Vec<(String, f64)>, slack: f64) -> Self {
        let strictly_decreasing = values.windows(2).all(|w| w[1].1 < w[0].1);
        let non_increasing = values.windows(2).all(|w| w[1].1 <= w[0].1 + slack);
        Self {
            values,
            strictly_decreasing,
            non_increasing,
        }
    }
}

pub struct SweepResult {
    pub curves: Vec<(String, CapacityCurve)>,
    pub trend: Trend,
}

fn summary_value(curve: &CapacityCurve) -> Option<f64> {
    let top = curve.records.last()?;
    match curve.last_delta() {
        Some((n, d)) if n + 1 == top.n => Some(d),
        _ => Some(top.estimate),
    }
}

/// Solves every `(point, horizon)` pair. Failures stay attached to their
/// point; the order of `curves` follows `points`.
pub fn sweep(points: &[SweepPoint], horizons: &[usize], s0: InitialState) -> SweepResult {
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| horizons.iter().map(move |&n| (p, n)))
        .collect();
    let results: Vec<(usize, usize, Result<CapacityRecord>)> = jobs
        .par_iter()
        .map(|&(p, n)| {
            let pt = &points[p];
            (p, n, capacity_record(&pt.channel, n, s0, &pt.settings))
        })
        .collect();

    type Outcomes = (Vec<CapacityRecord>, Vec<(usize, Error)>);
    let mut per_point: Vec<Outcomes> = vec![(Vec::new(), Vec::new()); points.len()];
    for (p, n, r) in results {
        match r {
            Ok(rec) => per_point[p].0.push(rec),
            Err(e) => per_point[p].1.push((n, e)),
        }
    }
    let curves: Vec<(String, CapacityCurve)> = points
        .iter()
        .zip(per_point)
        .map(|(pt, (recs, fails))| (pt.label.clone(), CapacityCurve::from_parts(recs, fails)))
        .collect();
    let slack = points.iter().map(|p| p.settings.tolerance).fold(0.0, f64::max) * 2.0;
    let values = curves
        .iter()
        .filter_map(|(l, c)| summary_value(c).map(|v| (l.clone(), v)))
        .collect();
    SweepResult {
        curves,
        trend: Trend::from_values(values, slack),
    }
}
