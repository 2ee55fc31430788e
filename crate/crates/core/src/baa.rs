//! Alternating maximization of directed information over causally
//! conditioned input distributions.
//!
//! One iteration updates the kernel `r` backwards in time against the
//! current posterior `q`, recomputes `q` as the exact Bayes posterior of the
//! new `r`, and evaluates the bound pair `(I_L, I_U)`. The run stops once
//! `I_U - I_L < tolerance`.

use crate::causal::{information_sum, CausalKernel, ChannelFactors, HistoryLattice, KernelAxis, PosteriorTable};
use crate::channel::FeedbackMap;
use crate::error::{domain, structure, Error, Result};
use crate::seqspace::{alternating_reduce, Reduction};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// A fixed channel `p(y^n||x^n)` together with the information pattern of
/// the encoder (delay and feedback map) and stopping parameters.
#[derive(Debug, Clone)]
pub struct BaaProblem {
    channel: ChannelFactors,
    delay: usize,
    feedback: FeedbackMap,
    tolerance: f64,
    max_iterations: usize,
}

impl BaaProblem {
    /// Delay-`delay` output feedback with the default tolerance and cap.
    pub fn new(channel: ChannelFactors, delay: usize) -> Result<Self> {
        if delay == 0 {
            return Err(domain("feedback delay must be at least 1"));
        }
        let feedback = FeedbackMap::identity(channel.y_size());
        Ok(Self {
            channel,
            delay,
            feedback,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        })
    }

    pub fn with_feedback(mut self, feedback: FeedbackMap) -> Result<Self> {
        if feedback.y_size() != self.channel.y_size() {
            return Err(structure(format!(
                "feedback map covers {} outputs, channel has {}",
                feedback.y_size(),
                self.channel.y_size()
            )));
        }
        self.feedback = feedback;
        Ok(self)
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if tolerance.is_nan() || tolerance <= 0.0 {
            return Err(domain(format!("tolerance must be positive, got {tolerance}")));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn channel(&self) -> &ChannelFactors {
        &self.channel
    }

    pub fn horizon(&self) -> usize {
        self.channel.horizon()
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn feedback(&self) -> &FeedbackMap {
        &self.feedback
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }
}

/// Lower and upper bound of one iteration, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    pub lower: f64,
    pub upper: f64,
}

impl BoundPair {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Running,
    Converged,
    /// The iteration cap was reached with this gap still open.
    NotConverged {
        gap: f64,
    },
}

/// Quantities of one forward sweep for a fixed kernel.
struct Forward {
    /// `r(x^n||z^{n-d})` indexed by `(x^n, y^{n-1})`.
    kernel_products: Vec<f64>,
    /// `p(y^n)` indexed by output sequence.
    y_marginal: Vec<f64>,
}

/// Mutable state of the alternating maximization.
pub struct BaaRun {
    problem: BaaProblem,
    lattice: HistoryLattice,
    /// `prod_{j<=i} p_j` per level.
    prefix: Vec<Vec<f64>>,
    kernel: Option<CausalKernel>,
    posterior: PosteriorTable,
    iteration: usize,
    history: Vec<BoundPair>,
    status: RunStatus,
    cells_last_iteration: u64,
    // scratch reused across iterations
    tail: Vec<f64>,
    tail_next: Vec<f64>,
    num: Vec<f64>,
    den: Vec<f64>,
    scratch: Vec<f64>,
}

impl BaaRun {
    /// Uniform starting posterior `q = |X|^{-n}`; no kernel yet.
    pub fn init(problem: BaaProblem) -> Result<Self> {
        let ch = problem.channel();
        let lattice = HistoryLattice::new(ch.horizon(), problem.delay, ch.x_size(), ch.y_size(), &problem.feedback)?;
        let prefix = ch.prefix_products();
        let posterior = PosteriorTable::uniform(ch.horizon(), ch.x_size(), ch.y_size())?;
        Ok(Self {
            problem,
            lattice,
            prefix,
            kernel: None,
            posterior,
            iteration: 0,
            history: Vec::new(),
            status: RunStatus::Running,
            cells_last_iteration: 0,
            tail: Vec::new(),
            tail_next: Vec::new(),
            num: Vec::new(),
            den: Vec::new(),
            scratch: Vec::new(),
        })
    }

    pub fn problem(&self) -> &BaaProblem {
        &self.problem
    }

    pub fn kernel(&self) -> Option<&CausalKernel> {
        self.kernel.as_ref()
    }

    pub fn posterior(&self) -> &PosteriorTable {
        &self.posterior
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// `(I_L, I_U)` of every completed iteration.
    pub fn history(&self) -> &[BoundPair] {
        &self.history
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// The capacity estimate `C_n`: the last lower bound.
    pub fn capacity(&self) -> Option<f64> {
        self.history.last().map(|b| b.lower)
    }

    pub fn gap(&self) -> Option<f64> {
        self.history.last().map(BoundPair::gap)
    }

    /// Table cells visited by the last call to [`BaaRun::iterate`].
    pub fn cells_last_iteration(&self) -> u64 {
        self.cells_last_iteration
    }

    /// Replaces the posterior; used to study the r-update for a given `q`.
    pub fn set_posterior(&mut self, q: PosteriorTable) -> Result<()> {
        let ch = self.problem.channel();
        if q.horizon() != ch.horizon() || q.x_size() != ch.x_size() || q.y_size() != ch.y_size() {
            return Err(structure("posterior shape does not match the problem"));
        }
        self.posterior = q;
        Ok(())
    }

    pub fn set_kernel(&mut self, kernel: CausalKernel) -> Result<()> {
        self.check_kernel(&kernel)?;
        self.kernel = Some(kernel);
        Ok(())
    }

    fn check_kernel(&self, k: &CausalKernel) -> Result<()> {
        let ch = self.problem.channel();
        if k.horizon() != ch.horizon()
            || k.x_size() != ch.x_size()
            || k.delay() != self.problem.delay
            || k.feedback() != &self.problem.feedback
        {
            return Err(structure("kernel does not match the problem"));
        }
        Ok(())
    }

    fn current_kernel(&self) -> Result<&CausalKernel> {
        self.kernel
            .as_ref()
            .ok_or_else(|| structure("no kernel yet: run update_r_backward first"))
    }

    /// Backward pass `i = n, ..., 1`: each `r_i` maximizes the objective for
    /// the current posterior given the already updated `r_{i+1..n}`.
    ///
    /// Per history `h = (x^{i-1}, z^{i-d})` and candidate `x_i`, the exponent
    /// is the `p`-weighted average, over outputs `y^i` whose delayed prefix
    /// maps to `z^{i-d}`, of the expected tail value
    /// `E_i(x^i, y^i) = E[log q - sum_{j>i} log r_j | x^i, y^i]`;
    /// `r_i(.|h)` is its base-2 softmax over `x_i`.
    pub fn update_r_backward(&mut self) -> Result<&CausalKernel> {
        if self.posterior.values().iter().any(|&v| v < 0.0 || v.is_nan()) {
            return Err(Error::Structure("posterior has negative entries".into()));
        }
        let n = self.problem.horizon();
        let x = self.problem.channel().x_size();
        let y = self.problem.channel().y_size();
        let xy = x * y;
        let mut kernel = match self.kernel.take() {
            Some(k) => k,
            None => CausalKernel::uniform(n, self.problem.delay, x, self.problem.feedback.clone())?,
        };
        let mut cells = 0u64;

        let mut tail = std::mem::take(&mut self.tail);
        let mut tail_next = std::mem::take(&mut self.tail_next);
        tail.clear();
        tail.extend(self.posterior.values().iter().map(|v| v.log2()));

        for i in (1..=n).rev() {
            let map = self.lattice.kernel_map(i);
            let pc = &self.prefix[i - 1];
            let table_len = kernel.table(i).len();
            self.num.clear();
            self.num.resize(table_len, 0.0);
            self.den.clear();
            self.den.resize(table_len, 0.0);
            for (e, (&w, &t)) in pc.iter().zip(tail.iter()).enumerate() {
                if w > 0.0 {
                    let k = map[e / y] as usize;
                    self.den[k] += w;
                    self.num[k] += w * t;
                }
            }
            cells += pc.len() as u64;

            let table = &mut kernel.tables_mut()[i - 1];
            for ((row, num), den) in table
                .chunks_exact_mut(x)
                .zip(self.num.chunks_exact(x))
                .zip(self.den.chunks_exact(x))
            {
                for ((slot, &a), &b) in row.iter_mut().zip(num).zip(den) {
                    *slot = if b > 0.0 { a / b } else { f64::NEG_INFINITY };
                }
                normalize_log2_row(row);
            }
            cells += table_len as u64;

            // E_{i-1}(h) = sum_{x_i, y_i} r_i p_i (E_i - log2 r_i)
            let p = self.problem.channel().table(i);
            let parents = pc.len() / xy;
            tail_next.clear();
            tail_next.resize(parents, 0.0);
            for (h, slot) in tail_next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for xi in 0..x {
                    let rv = table[map[h * x + xi] as usize];
                    if rv == 0.0 {
                        continue;
                    }
                    let lr = rv.log2();
                    let base = (h * x + xi) * y;
                    for e in base..base + y {
                        let w = rv * p[e];
                        if w > 0.0 {
                            acc += w * (tail[e] - lr);
                        }
                    }
                }
                *slot = acc;
            }
            cells += pc.len() as u64;
            std::mem::swap(&mut tail, &mut tail_next);
        }
        self.tail = tail;
        self.tail_next = tail_next;
        self.cells_last_iteration = cells;
        self.kernel = Some(kernel);
        Ok(self.kernel.as_ref().unwrap())
    }

    fn forward(&mut self) -> Result<Forward> {
        let kernel = self
            .kernel
            .as_ref()
            .ok_or_else(|| structure("no kernel yet: run update_r_backward first"))?;
        let mut kp = Vec::new();
        self.lattice.kernel_products(kernel, &mut kp, &mut self.scratch);
        let y = self.problem.channel().y_size();
        let pc = &self.prefix[self.problem.horizon() - 1];
        let yidx = self.lattice.y_index();
        let mut marg = vec![0.0; self.lattice.y_count()];
        for (e, &p) in pc.iter().enumerate() {
            marg[yidx[e] as usize] += p * kp[e / y];
        }
        Ok(Forward {
            kernel_products: kp,
            y_marginal: marg,
        })
    }

    fn posterior_from(&self, fwd: &Forward) -> PosteriorTable {
        let n = self.problem.horizon();
        let x = self.problem.channel().x_size();
        let y = self.problem.channel().y_size();
        let pc = &self.prefix[n - 1];
        let yidx = self.lattice.y_index();
        let u = (x as f64).powi(-(n as i32));
        let values = pc
            .iter()
            .enumerate()
            .map(|(e, &p)| {
                let py = fwd.y_marginal[yidx[e] as usize];
                if py > 0.0 {
                    p * fwd.kernel_products[e / y] / py
                } else {
                    u
                }
            })
            .collect();
        PosteriorTable::from_values_unchecked(n, x, y, values)
    }

    fn lower_from(&self, fwd: &Forward) -> f64 {
        let n = self.problem.horizon();
        let y = self.problem.channel().y_size();
        information_sum(&self.prefix[n - 1], &fwd.kernel_products, self.posterior.values(), y) / n as f64
    }

    fn upper_from(&self, fwd: &Forward) -> Result<f64> {
        let n = self.problem.horizon();
        let y = self.problem.channel().y_size();
        let kernel = self.current_kernel()?;
        let map = self.lattice.kernel_map(n);
        let yidx = self.lattice.y_index();
        let mut div = vec![0.0; kernel.table(n).len()];
        for (e, &p) in self.prefix[n - 1].iter().enumerate() {
            if p > 0.0 {
                let py = fwd.y_marginal[yidx[e] as usize];
                let k = map[e / y] as usize;
                div[k] += if py > 0.0 { p * (p / py).log2() } else { f64::INFINITY };
            }
        }
        let codec = kernel.step_codec(n)?;
        let schedule: Vec<Reduction> = crate::causal::kernel_axes(n, self.problem.delay)
            .into_iter()
            .map(|a| match a {
                KernelAxis::Input(_) => Reduction::Max,
                KernelAxis::Feedback(_) => Reduction::Sum,
            })
            .collect();
        Ok(alternating_reduce(&div, codec.sizes(), &schedule)? / n as f64)
    }

    /// Replaces `q` by the Bayes posterior of the current kernel.
    pub fn update_q(&mut self) -> Result<&PosteriorTable> {
        let fwd = self.forward()?;
        self.posterior = self.posterior_from(&fwd);
        Ok(&self.posterior)
    }

    /// `I_L = I(r, q) / n` for the current kernel and posterior, bits per use.
    pub fn lower_bound(&mut self) -> Result<f64> {
        let fwd = self.forward()?;
        Ok(self.lower_from(&fwd))
    }

    /// `I_U` for the current kernel, bits per use: the nested
    /// `max_{x^d} sum_{z_1} max_{x_{d+1}} ... max_{x_n}` fold of the per-input
    /// divergence between `p(y^n||x^n)` and the output marginal. It is
    /// `+inf` when the kernel leaves a reachable output without support.
    pub fn upper_bound(&mut self) -> Result<f64> {
        let fwd = self.forward()?;
        self.upper_from(&fwd)
    }

    /// One full iteration: r-update, q-update, bounds.
    pub fn iterate(&mut self) -> Result<BoundPair> {
        self.update_r_backward()?;
        let cells_r = self.cells_last_iteration;
        let fwd = self.forward()?;
        self.posterior = self.posterior_from(&fwd);
        let pair = BoundPair {
            lower: self.lower_from(&fwd),
            upper: self.upper_from(&fwd)?,
        };
        let full = self.prefix[self.problem.horizon() - 1].len() as u64;
        // forward products, marginal, posterior, lower bound, upper bound
        self.cells_last_iteration = cells_r + 5 * full;
        self.iteration += 1;
        self.history.push(pair);
        Ok(pair)
    }

    /// Iterates until the gap closes below the tolerance or the cap is hit.
    pub fn run_to_convergence(&mut self) -> Result<RunStatus> {
        let tol = self.problem.tolerance;
        while self.iteration < self.problem.max_iterations {
            let pair = self.iterate()?;
            if pair.gap() < tol {
                self.status = RunStatus::Converged;
                return Ok(self.status);
            }
        }
        self.status = RunStatus::NotConverged {
            gap: self.gap().unwrap_or(f64::INFINITY),
        };
        Ok(self.status)
    }
}

/// Runs the alternating maximization from the uniform start.
pub fn solve(problem: BaaProblem) -> Result<BaaRun> {
    let mut run = BaaRun::init(problem)?;
    run.run_to_convergence()?;
    Ok(run)
}

/// In-place base-2 softmax of log-masses; an all `-inf` row becomes uniform.
fn normalize_log2_row(row: &mut [f64]) {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_nan() {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|v| *v = u);
        return;
    }
    let mut s = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp2();
        s += *v;
    }
    row.iter_mut().for_each(|v| *v /= s);
}

/// Result of the single-letter Blahut–Arimoto iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicSolution {
    /// Capacity in bits (the final lower bound).
    pub capacity: f64,
    pub upper: f64,
    pub input: Vec<f64>,
    pub iterations: usize,
}

/// Classical Blahut–Arimoto for a memoryless channel `w[x][y]`.
pub fn classic_baa(w: &[Vec<f64>], tolerance: f64, max_iterations: usize) -> Result<ClassicSolution> {
    let nx = w.len();
    let ny = w.first().map_or(0, |r| r.len());
    if nx == 0 || ny == 0 || w.iter().any(|r| r.len() != ny) {
        return Err(structure("channel matrix must be non-empty and rectangular"));
    }
    for (i, row) in w.iter().enumerate() {
        crate::error::check_row("channel matrix", i, row)?;
    }
    let mut r = vec![1.0 / nx as f64; nx];
    let mut out = ClassicSolution {
        capacity: 0.0,
        upper: f64::INFINITY,
        input: r.clone(),
        iterations: 0,
    };
    let mut py = vec![0.0; ny];
    for it in 1..=max_iterations.max(1) {
        py.iter_mut().for_each(|v| *v = 0.0);
        for (rx, row) in r.iter().zip(w) {
            for (slot, &p) in py.iter_mut().zip(row) {
                *slot += rx * p;
            }
        }
        // divergence D(w(.|x) || p_Y) per input
        let div: Vec<f64> = w
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&py)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, &q)| p * (p / q).log2())
                    .sum()
            })
            .collect();
        let lower: f64 = r.iter().zip(&div).map(|(a, b)| a * b).sum();
        let upper = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out = ClassicSolution {
            capacity: lower,
            upper,
            input: r.clone(),
            iterations: it,
        };
        if upper - lower < tolerance {
            break;
        }
        let mut s = 0.0;
        for (rx, d) in r.iter_mut().zip(&div) {
            *rx *= d.exp2();
            s += *rx;
        }
        r.iter_mut().for_each(|v| *v /= s);
    }
    Ok(out)
}
