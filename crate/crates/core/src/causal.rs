//! Causally conditioned PMFs stored as per-step conditional tables, the
//! channel side `p(y^n||x^n)`, posteriors `q(x^n|y^n)` and the directed
//! information between them.
//!
//! # Layouts
//!
//! *Joint layout.* Input/output prefixes are indexed in the interleaved order
//! `(x_1, y_1, x_2, y_2, ..., x_i, y_i)`, big-endian. A level-`i` table has
//! `(|X||Y|)^i` entries, and dropping the last digit (`index / |Y|`) gives the
//! row `(x^i, y^{i-1})`.
//!
//! *Kernel layout.* Step `i` of a causal kernel with delay `d` is indexed by
//! `(x^{i-1}, z^{i-d}, x_i)` in the order `x_1 .. x_d, z_1, x_{d+1}, z_2,
//! x_{d+2}, ...` truncated after `x_i`, i.e. each `z_k` sits immediately
//! before the input `x_{k+d}` it may influence. The last digit is `x_i`, so
//! `index / |X|` is the row.

use crate::channel::FeedbackMap;
use crate::error::{check_row, domain, structure, Error, Result};
use crate::seqspace::SequenceCodec;

/// Axis of a kernel table (1-based positions).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelAxis {
    Input(usize),
    Feedback(usize),
}

/// Axes of the step-`step` kernel table, outermost first; the last is `x_step`.
pub fn kernel_axes(step: usize, delay: usize) -> Vec<KernelAxis> {
    let mut axes = Vec::with_capacity(2 * step);
    for j in 1..=step {
        if j > delay {
            axes.push(KernelAxis::Feedback(j - delay));
        }
        axes.push(KernelAxis::Input(j));
    }
    axes
}

/// Number of entries in a level-`level` joint prefix table.
pub(crate) fn joint_len(x_size: usize, y_size: usize, level: usize) -> Result<usize> {
    (x_size * y_size)
        .checked_pow(level as u32)
        .ok_or_else(|| domain("joint table size overflows"))
}

/// Interleaves `x^n` and `y^n` sequence indices into the joint layout.
pub fn joint_index(n: usize, x_size: usize, y_size: usize, x_index: usize, y_index: usize) -> usize {
    let mut idx = 0;
    for k in (0..n).rev() {
        let xd = (x_index / x_size.pow(k as u32)) % x_size;
        let yd = (y_index / y_size.pow(k as u32)) % y_size;
        idx = (idx * x_size + xd) * y_size + yd;
    }
    idx
}

/// `r(x^n || z^{n-d})` as a product of per-step conditional tables
/// `r_i(x_i | x^{i-1}, z^{i-d})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalKernel {
    horizon: usize,
    delay: usize,
    x_size: usize,
    feedback: FeedbackMap,
    tables: Vec<Vec<f64>>,
}

impl CausalKernel {
    fn check_shape(horizon: usize, delay: usize, x_size: usize) -> Result<()> {
        if horizon == 0 {
            return Err(domain("horizon must be at least 1"));
        }
        if delay == 0 {
            return Err(domain("feedback delay must be at least 1"));
        }
        if x_size < 2 {
            return Err(domain("input alphabet needs at least 2 symbols"));
        }
        Ok(())
    }

    fn step_rows(horizon: usize, delay: usize, x_size: usize, z_size: usize) -> Result<Vec<usize>> {
        (1..=horizon)
            .map(|i| {
                let xs = x_size.checked_pow(i as u32 - 1);
                let zs = z_size.checked_pow(i.saturating_sub(delay) as u32);
                xs.zip(zs)
                    .and_then(|(a, b)| a.checked_mul(b))
                    .and_then(|r| r.checked_mul(x_size).map(|_| r))
                    .ok_or_else(|| domain("kernel table size overflows"))
            })
            .collect()
    }

    /// Every row uniform over `x_i`.
    pub fn uniform(horizon: usize, delay: usize, x_size: usize, feedback: FeedbackMap) -> Result<Self> {
        Self::check_shape(horizon, delay, x_size)?;
        let rows = Self::step_rows(horizon, delay, x_size, feedback.z_size())?;
        let u = 1.0 / x_size as f64;
        Ok(Self {
            horizon,
            delay,
            x_size,
            feedback,
            tables: rows.iter().map(|&r| vec![u; r * x_size]).collect(),
        })
    }

    /// Builds a kernel from flat step tables in the kernel layout, checking
    /// shapes and row-stochasticity.
    pub fn from_tables(
        horizon: usize,
        delay: usize,
        x_size: usize,
        feedback: FeedbackMap,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::check_shape(horizon, delay, x_size)?;
        let rows = Self::step_rows(horizon, delay, x_size, feedback.z_size())?;
        if tables.len() != horizon {
            return Err(structure(format!(
                "expected {horizon} step tables, got {}",
                tables.len()
            )));
        }
        for (i, (t, &r)) in tables.iter().zip(&rows).enumerate() {
            if t.len() != r * x_size {
                return Err(structure(format!(
                    "step {} table has {} entries, expected {}",
                    i + 1,
                    t.len(),
                    r * x_size
                )));
            }
            for (row, chunk) in t.chunks_exact(x_size).enumerate() {
                check_row(&format!("kernel step {}", i + 1), row, chunk)?;
            }
        }
        Ok(Self {
            horizon,
            delay,
            x_size,
            feedback,
            tables,
        })
    }

    /// Builds a kernel by asking `row` for the distribution of `x_i` given
    /// each history `(step, x^{i-1}, z^{i-d})`.
    pub fn from_fn<F>(horizon: usize, delay: usize, x_size: usize, feedback: FeedbackMap, mut row: F) -> Result<Self>
    where
        F: FnMut(usize, &[usize], &[usize]) -> Vec<f64>,
    {
        let mut k = Self::uniform(horizon, delay, x_size, feedback)?;
        for i in 1..=horizon {
            let codec = k.step_codec(i)?;
            let axes = kernel_axes(i, delay);
            let rows = k.tables[i - 1].len() / x_size;
            let mut tab = Vec::with_capacity(rows * x_size);
            for r in 0..rows {
                let digits = codec.decode((r * x_size) as u64)?;
                let (xh, zh) = split_history(&axes, &digits);
                let probs = row(i, &xh, &zh);
                if probs.len() != x_size {
                    return Err(structure(format!("row callback returned {} entries", probs.len())));
                }
                tab.extend(probs);
            }
            k.tables[i - 1] = tab;
        }
        let CausalKernel {
            horizon,
            delay,
            x_size,
            feedback,
            tables,
        } = k;
        Self::from_tables(horizon, delay, x_size, feedback, tables)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn z_size(&self) -> usize {
        self.feedback.z_size()
    }

    pub fn feedback(&self) -> &FeedbackMap {
        &self.feedback
    }

    /// Length of the feedback history `z^{i-d}` seen at step `i`.
    pub fn feedback_len(&self, step: usize) -> usize {
        step.saturating_sub(self.delay)
    }

    /// Flat table of step `step` (1-based) in the kernel layout.
    pub fn table(&self, step: usize) -> &[f64] {
        &self.tables[step - 1]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    pub(crate) fn tables_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tables
    }

    /// Codec of the step-`step` table, digits in [`kernel_axes`] order.
    pub fn step_codec(&self, step: usize) -> Result<SequenceCodec> {
        let z = self.z_size();
        SequenceCodec::new(
            kernel_axes(step, self.delay)
                .into_iter()
                .map(|a| match a {
                    KernelAxis::Input(_) => self.x_size,
                    KernelAxis::Feedback(_) => z,
                })
                .collect(),
        )
    }

    /// `r_i(x_i | x^{i-1}, z^{i-d})`.
    pub fn prob(&self, step: usize, x_hist: &[usize], z_hist: &[usize], x_i: usize) -> Result<f64> {
        if step == 0 || step > self.horizon {
            return Err(domain(format!("step {step} outside 1..={}", self.horizon)));
        }
        if x_hist.len() != step - 1 || z_hist.len() != self.feedback_len(step) {
            return Err(structure(format!(
                "step {step} needs {} past inputs and {} feedback symbols, got {} and {}",
                step - 1,
                self.feedback_len(step),
                x_hist.len(),
                z_hist.len()
            )));
        }
        let digits = merge_history(&kernel_axes(step, self.delay), x_hist, z_hist, x_i);
        let idx = self.step_codec(step)?.encode(&digits)?;
        Ok(self.tables[step - 1][idx as usize])
    }

    /// `r(x^n || z^{n-d}) = prod_i r_i(x_i | x^{i-1}, z^{i-d})`.
    pub fn evaluate(&self, x_seq: &[usize], z_seq: &[usize]) -> Result<f64> {
        let zn = self.feedback_len(self.horizon);
        if x_seq.len() != self.horizon || z_seq.len() != zn {
            return Err(structure(format!(
                "expected {} inputs and {} feedback symbols, got {} and {}",
                self.horizon,
                zn,
                x_seq.len(),
                z_seq.len()
            )));
        }
        let mut p = 1.0;
        for i in 1..=self.horizon {
            p *= self.prob(i, &x_seq[..i - 1], &z_seq[..self.feedback_len(i)], x_seq[i - 1])?;
        }
        Ok(p)
    }

    /// The kernel of horizon `n - 1` obtained by summing out `x_n`, which
    /// amounts to dropping the last step table.
    pub fn marginalize_last(&self) -> Result<Self> {
        if self.horizon < 2 {
            return Err(domain("cannot marginalize a kernel of horizon 1"));
        }
        Ok(Self {
            horizon: self.horizon - 1,
            delay: self.delay,
            x_size: self.x_size,
            feedback: self.feedback.clone(),
            tables: self.tables[..self.horizon - 1].to_vec(),
        })
    }

    /// The whole `r(x^n || z^{n-d})` as one table in the step-`n` layout.
    /// Intended for small horizons.
    pub fn full_table(&self) -> Result<Vec<f64>> {
        let codec = self.step_codec(self.horizon)?;
        let axes = kernel_axes(self.horizon, self.delay);
        (0..codec.len())
            .map(|idx| {
                let digits = codec.decode(idx)?;
                let (mut xs, zs) = split_history(&axes, &digits);
                xs.push(*digits.last().unwrap());
                self.evaluate(&xs, &zs)
            })
            .collect()
    }

    /// Factors a full causally conditioned table (step-`n` layout) back into
    /// step tables. Histories of zero mass receive uniform rows.
    pub fn from_full_table(
        horizon: usize,
        delay: usize,
        x_size: usize,
        feedback: FeedbackMap,
        full: &[f64],
    ) -> Result<Self> {
        let proto = Self::uniform(horizon, delay, x_size, feedback)?;
        let full_codec = proto.step_codec(horizon)?;
        if full.len() as u64 != full_codec.len() {
            return Err(structure(format!(
                "full table has {} entries, expected {}",
                full.len(),
                full_codec.len()
            )));
        }
        let full_axes = kernel_axes(horizon, delay);
        // marginal of x^i given z^{i-d}: sum out x_{i+1..n}, fix later feedback to 0
        let marginal = |i: usize, xs: &[usize], zs: &[usize]| -> Result<f64> {
            let tail = x_size.pow((horizon - i) as u32);
            let mut total = 0.0;
            for t in 0..tail {
                let mut x_all = xs.to_vec();
                let mut rest = t;
                let mut tail_digits = vec![0; horizon - i];
                for slot in tail_digits.iter_mut().rev() {
                    *slot = rest % x_size;
                    rest /= x_size;
                }
                x_all.extend(tail_digits);
                let mut z_all = zs.to_vec();
                z_all.resize(horizon.saturating_sub(delay), 0);
                let digits = merge_history(&full_axes, &x_all[..horizon - 1], &z_all, x_all[horizon - 1]);
                total += full[full_codec.encode(&digits)? as usize];
            }
            Ok(total)
        };
        let mut tables = Vec::with_capacity(horizon);
        for i in 1..=horizon {
            let codec = proto.step_codec(i)?;
            let axes = kernel_axes(i, delay);
            let mut tab = vec![0.0; codec.len() as usize];
            for (r, row) in tab.chunks_exact_mut(x_size).enumerate() {
                let digits = codec.decode((r * x_size) as u64)?;
                let (xh, zh) = split_history(&axes, &digits);
                let mut masses = Vec::with_capacity(x_size);
                for xi in 0..x_size {
                    let mut xs = xh.clone();
                    xs.push(xi);
                    masses.push(marginal(i, &xs, &zh)?);
                }
                let tot: f64 = masses.iter().sum();
                for (slot, m) in row.iter_mut().zip(&masses) {
                    *slot = if tot > 0.0 { m / tot } else { 1.0 / x_size as f64 };
                }
            }
            tables.push(tab);
        }
        let feedback = proto.feedback;
        Self::from_tables(horizon, delay, x_size, feedback, tables)
    }
}

fn split_history(axes: &[KernelAxis], digits: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    // the last axis is the current input
    for (a, &d) in axes.iter().zip(digits).take(axes.len() - 1) {
        match a {
            KernelAxis::Input(_) => xs.push(d),
            KernelAxis::Feedback(_) => zs.push(d),
        }
    }
    (xs, zs)
}

fn merge_history(axes: &[KernelAxis], xs: &[usize], zs: &[usize], x_last: usize) -> Vec<usize> {
    axes.iter()
        .map(|a| match *a {
            KernelAxis::Input(j) if j > xs.len() => x_last,
            KernelAxis::Input(j) => xs[j - 1],
            KernelAxis::Feedback(k) => zs[k - 1],
        })
        .collect()
}

/// `p(y^n || x^n)` as per-step tables `p_i(y_i | x^i, y^{i-1})` in the joint
/// layout: table `i` has `(|X||Y|)^i` entries and rows of length `|Y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFactors {
    horizon: usize,
    x_size: usize,
    y_size: usize,
    tables: Vec<Vec<f64>>,
}

impl ChannelFactors {
    pub fn from_tables(horizon: usize, x_size: usize, y_size: usize, tables: Vec<Vec<f64>>) -> Result<Self> {
        if horizon == 0 {
            return Err(domain("horizon must be at least 1"));
        }
        if x_size < 2 || y_size < 2 {
            return Err(domain("channel alphabets need at least 2 symbols"));
        }
        if tables.len() != horizon {
            return Err(structure(format!(
                "expected {horizon} factor tables, got {}",
                tables.len()
            )));
        }
        for (i, t) in tables.iter().enumerate() {
            let want = joint_len(x_size, y_size, i + 1)?;
            if t.len() != want {
                return Err(structure(format!(
                    "factor {} has {} entries, expected {want}",
                    i + 1,
                    t.len()
                )));
            }
            for (row, chunk) in t.chunks_exact(y_size).enumerate() {
                check_row(&format!("channel factor {}", i + 1), row, chunk)?;
            }
        }
        Ok(Self {
            horizon,
            x_size,
            y_size,
            tables,
        })
    }

    pub(crate) fn from_tables_unchecked(horizon: usize, x_size: usize, y_size: usize, tables: Vec<Vec<f64>>) -> Self {
        Self {
            horizon,
            x_size,
            y_size,
            tables,
        }
    }

    /// Builds the factors by asking `row` for `p(. | x^i, y^{i-1})`.
    pub fn from_fn<F>(horizon: usize, x_size: usize, y_size: usize, mut row: F) -> Result<Self>
    where
        F: FnMut(&[usize], &[usize]) -> Vec<f64>,
    {
        let mut tables = Vec::with_capacity(horizon);
        for i in 1..=horizon {
            let rows = joint_len(x_size, y_size, i)? / y_size;
            let codec = SequenceCodec::new(
                (0..2 * i - 1)
                    .map(|k| if k % 2 == 0 { x_size } else { y_size })
                    .collect(),
            )?;
            let mut tab = Vec::with_capacity(rows * y_size);
            for r in 0..rows {
                let d = codec.decode(r as u64)?;
                let xs: Vec<usize> = d.iter().step_by(2).copied().collect();
                let ys: Vec<usize> = d.iter().skip(1).step_by(2).copied().collect();
                let p = row(&xs, &ys);
                if p.len() != y_size {
                    return Err(structure(format!("row callback returned {} entries", p.len())));
                }
                tab.extend(p);
            }
            tables.push(tab);
        }
        Self::from_tables(horizon, x_size, y_size, tables)
    }

    /// Memoryless channel `w[x][y]` used at every step.
    pub fn memoryless(w: &[Vec<f64>], horizon: usize) -> Result<Self> {
        let y_size = w.first().map_or(0, |r| r.len());
        if w.iter().any(|r| r.len() != y_size) {
            return Err(structure("ragged channel matrix"));
        }
        Self::from_fn(horizon, w.len(), y_size, |xs, _| w[*xs.last().unwrap()].clone())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// Flat factor table of step `step` (1-based).
    pub fn table(&self, step: usize) -> &[f64] {
        &self.tables[step - 1]
    }

    pub fn tables(&self) -> &[Vec<f64>] {
        &self.tables
    }

    /// `p(y_i | x^i, y^{i-1})`.
    pub fn factor(&self, x_hist: &[usize], y_hist: &[usize], y_i: usize) -> Result<f64> {
        let i = x_hist.len();
        if i == 0 || i > self.horizon || y_hist.len() + 1 != i {
            return Err(structure("factor needs x^i and y^{i-1} with 1 <= i <= n"));
        }
        let mut idx = 0usize;
        for k in 0..i {
            let y = if k + 1 == i { y_i } else { y_hist[k] };
            if x_hist[k] >= self.x_size || y >= self.y_size {
                return Err(domain(format!("symbol out of range at position {}", k + 1)));
            }
            idx = (idx * self.x_size + x_hist[k]) * self.y_size + y;
        }
        Ok(self.tables[i - 1][idx])
    }

    /// `p(y^n || x^n)`.
    pub fn evaluate(&self, x_seq: &[usize], y_seq: &[usize]) -> Result<f64> {
        if x_seq.len() != self.horizon || y_seq.len() != self.horizon {
            return Err(structure("sequence lengths must equal the horizon"));
        }
        let mut p = 1.0;
        for i in 1..=self.horizon {
            p *= self.factor(&x_seq[..i], &y_seq[..i - 1], y_seq[i - 1])?;
        }
        Ok(p)
    }

    /// Prefix products `prod_{j<=i} p_j` for every level `i`, joint layout.
    pub fn prefix_products(&self) -> Vec<Vec<f64>> {
        let block = self.x_size * self.y_size;
        let mut out: Vec<Vec<f64>> = Vec::with_capacity(self.horizon);
        for (i, t) in self.tables.iter().enumerate() {
            let v = if i == 0 {
                t.clone()
            } else {
                let prev = &out[i - 1];
                t.iter().enumerate().map(|(e, &p)| prev[e / block] * p).collect()
            };
            out.push(v);
        }
        out
    }

    /// The block channel as a matrix: row `x^n`, column `y^n`, both in
    /// big-endian sequence order.
    pub fn block_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.horizon;
        let nx = self.x_size.pow(n as u32);
        let ny = self.y_size.pow(n as u32);
        let full = self.prefix_products().pop().unwrap_or_default();
        let mut m = vec![vec![0.0; ny]; nx];
        for (e, p) in full.into_iter().enumerate() {
            let (xi, yi) = split_joint_index(e, n, self.x_size, self.y_size);
            m[xi][yi] = p;
        }
        m
    }
}

/// Inverse of [`joint_index`]: `(x^n index, y^n index)`.
pub(crate) fn split_joint_index(mut e: usize, n: usize, x: usize, y: usize) -> (usize, usize) {
    let (mut xi, mut yi) = (0, 0);
    let (mut xw, mut yw) = (1, 1);
    for _ in 0..n {
        yi += (e % y) * yw;
        e /= y;
        xi += (e % x) * xw;
        e /= x;
        xw *= x;
        yw *= y;
    }
    (xi, yi)
}

/// `q(x^n | y^n)` in the joint layout. Rows of outputs with zero probability
/// hold the uniform placeholder `|X|^{-n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    horizon: usize,
    x_size: usize,
    y_size: usize,
    values: Vec<f64>,
}

impl PosteriorTable {
    pub fn uniform(horizon: usize, x_size: usize, y_size: usize) -> Result<Self> {
        let len = joint_len(x_size, y_size, horizon)?;
        let u = (x_size as f64).powi(-(horizon as i32));
        Ok(Self {
            horizon,
            x_size,
            y_size,
            values: vec![u; len],
        })
    }

    /// Builds `q` from `f(x_index, y_index)` and checks every row.
    pub fn from_fn<F>(horizon: usize, x_size: usize, y_size: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut q = Self::uniform(horizon, x_size, y_size)?;
        let nx = x_size.pow(horizon as u32);
        let ny = y_size.pow(horizon as u32);
        for y in 0..ny {
            for x in 0..nx {
                q.values[joint_index(horizon, x_size, y_size, x, y)] = f(x, y);
            }
        }
        q.validate()?;
        Ok(q)
    }

    pub(crate) fn from_values_unchecked(horizon: usize, x_size: usize, y_size: usize, values: Vec<f64>) -> Self {
        Self {
            horizon,
            x_size,
            y_size,
            values,
        }
    }

    /// Checks that every `y^n` row is a probability vector over `x^n`.
    pub fn validate(&self) -> Result<()> {
        let nx = self.x_size.pow(self.horizon as u32);
        let ny = self.y_size.pow(self.horizon as u32);
        let mut row = vec![0.0; nx];
        for y in 0..ny {
            for (x, slot) in row.iter_mut().enumerate() {
                *slot = self.values[joint_index(self.horizon, self.x_size, self.y_size, x, y)];
            }
            check_row("posterior", y, &row)?;
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    /// `q(x^n | y^n)` addressed by sequence indices.
    pub fn get(&self, x_index: usize, y_index: usize) -> f64 {
        self.values[joint_index(self.horizon, self.x_size, self.y_size, x_index, y_index)]
    }

    /// Raw values in the joint layout.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entrywise `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.values.len() != other.values.len() {
            return Err(structure("posterior tables differ in shape"));
        }
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
            ..self.clone()
        })
    }
}

/// Precomputed index maps connecting the joint layout to the kernel layout
/// for a given horizon, delay and feedback map.
#[derive(Debug, Clone)]
pub struct HistoryLattice {
    horizon: usize,
    x_size: usize,
    y_size: usize,
    /// `kernel_maps[i-1][(x^{i-1}, y^{i-1}, x_i)]` = entry of `(x^i, z^{i-d})` in step table `i`.
    kernel_maps: Vec<Vec<u32>>,
    /// `y^n` sequence index of every full joint entry.
    y_index: Vec<u32>,
}

impl HistoryLattice {
    pub fn new(horizon: usize, delay: usize, x_size: usize, y_size: usize, feedback: &FeedbackMap) -> Result<Self> {
        if feedback.y_size() != y_size {
            return Err(structure(format!(
                "feedback map is defined on {} outputs, channel has {y_size}",
                feedback.y_size()
            )));
        }
        let full = joint_len(x_size, y_size, horizon)?;
        if full > u32::MAX as usize {
            return Err(domain(format!("joint table of {full} entries is too large")));
        }
        let z_size = feedback.z_size();
        let xy = x_size * y_size;
        let mut kernel_maps: Vec<Vec<u32>> = Vec::with_capacity(horizon);
        for i in 1..=horizon {
            let hist = xy.pow(i as u32 - 1);
            let mut map = Vec::with_capacity(hist * x_size);
            for h in 0..hist {
                let mut base = if i == 1 {
                    0
                } else {
                    kernel_maps[i - 2][h / y_size] as usize
                };
                if i > delay {
                    // y_{i-d} is the digit (d-1) (x,y)-pairs from the end of h
                    let y = (h / xy.pow(delay as u32 - 1)) % y_size;
                    base = base * z_size + feedback.apply(y);
                }
                for x in 0..x_size {
                    map.push((base * x_size + x) as u32);
                }
            }
            kernel_maps.push(map);
        }
        let mut y_index: Vec<u32> = vec![0];
        for _ in 0..horizon {
            let mut next = Vec::with_capacity(y_index.len() * xy);
            for &v in &y_index {
                for _x in 0..x_size {
                    for y in 0..y_size {
                        next.push(v * y_size as u32 + y as u32);
                    }
                }
            }
            y_index = next;
        }
        Ok(Self {
            horizon,
            x_size,
            y_size,
            kernel_maps,
            y_index,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub(crate) fn kernel_map(&self, step: usize) -> &[u32] {
        &self.kernel_maps[step - 1]
    }

    pub(crate) fn y_index(&self) -> &[u32] {
        &self.y_index
    }

    pub(crate) fn y_count(&self) -> usize {
        self.y_size.pow(self.horizon as u32)
    }

    /// `r(x^n||z^{n-d})` for every `(x^n, y^{n-1})`, i.e. indexed by the
    /// full joint index divided by `|Y|`.
    pub(crate) fn kernel_products(&self, kernel: &CausalKernel, out: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let x = self.x_size;
        let y = self.y_size;
        out.clear();
        out.push(1.0);
        for i in 1..=self.horizon {
            let map = self.kernel_map(i);
            let r = kernel.table(i);
            std::mem::swap(out, scratch);
            out.clear();
            out.reserve(map.len());
            for (e, &k) in map.iter().enumerate() {
                // e = h * |X| + x_i with h = (x^{i-1}, y^{i-1}); its parent row is h / |Y|
                let parent = if i == 1 { 0 } else { (e / x) / y };
                out.push(scratch[parent] * r[k as usize]);
            }
        }
    }

    fn check(&self, kernel: &CausalKernel, channel: &ChannelFactors) -> Result<()> {
        if kernel.horizon() != self.horizon || channel.horizon() != self.horizon {
            return Err(structure("kernel and channel horizons differ"));
        }
        if kernel.x_size() != self.x_size || channel.x_size() != self.x_size || channel.y_size() != self.y_size {
            return Err(structure("kernel and channel alphabets differ"));
        }
        Ok(())
    }
}

/// Joint distribution `p(x^n, y^n) = r(x^n||z^{n-d}) p(y^n||x^n)` in the joint layout.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    horizon: usize,
    x_size: usize,
    y_size: usize,
    values: Vec<f64>,
}

impl JointTable {
    pub fn get(&self, x_index: usize, y_index: usize) -> f64 {
        self.values[joint_index(self.horizon, self.x_size, self.y_size, x_index, y_index)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `p(y^n)` indexed by the output sequence index.
    pub fn y_marginal(&self) -> Vec<f64> {
        let ny = self.y_size.pow(self.horizon as u32);
        let nx = self.x_size.pow(self.horizon as u32);
        (0..ny).map(|y| (0..nx).map(|x| self.get(x, y)).sum()).collect()
    }

    /// Bayes posterior `p(x^n | y^n)`; zero-probability outputs get uniform rows.
    pub fn posterior(&self) -> PosteriorTable {
        let marg = self.y_marginal();
        let u = (self.x_size as f64).powi(-(self.horizon as i32));
        let mut values = self.values.clone();
        let ny = marg.len();
        let nx = self.x_size.pow(self.horizon as u32);
        for (y, &py) in marg.iter().enumerate().take(ny) {
            for x in 0..nx {
                let e = joint_index(self.horizon, self.x_size, self.y_size, x, y);
                values[e] = if py > 0.0 { self.values[e] / py } else { u };
            }
        }
        PosteriorTable::from_values_unchecked(self.horizon, self.x_size, self.y_size, values)
    }
}

/// `p(x^n, y^n)` for a kernel driven by (a deterministic reduction of) the
/// delayed channel output.
pub fn joint(kernel: &CausalKernel, channel: &ChannelFactors) -> Result<JointTable> {
    let lattice = HistoryLattice::new(
        channel.horizon(),
        kernel.delay(),
        channel.x_size(),
        channel.y_size(),
        kernel.feedback(),
    )?;
    lattice.check(kernel, channel)?;
    let values = joint_values(&lattice, kernel, channel);
    Ok(JointTable {
        horizon: channel.horizon(),
        x_size: channel.x_size(),
        y_size: channel.y_size(),
        values,
    })
}

fn joint_values(lattice: &HistoryLattice, kernel: &CausalKernel, channel: &ChannelFactors) -> Vec<f64> {
    let mut r = Vec::new();
    let mut scratch = Vec::new();
    lattice.kernel_products(kernel, &mut r, &mut scratch);
    let pc = channel.prefix_products();
    let y = channel.y_size();
    pc[channel.horizon() - 1]
        .iter()
        .enumerate()
        .map(|(e, &p)| r[e / y] * p)
        .collect()
}

/// `sum p(y^n||x^n) r(x^n||z^{n-d}) log2[q(x^n|y^n) / r(x^n||z^{n-d})]` in bits.
///
/// Terms of zero joint weight contribute nothing; a positive-weight term
/// with `q = 0` makes the result `-inf`.
pub fn directed_information(kernel: &CausalKernel, channel: &ChannelFactors, q: &PosteriorTable) -> Result<f64> {
    let lattice = HistoryLattice::new(
        channel.horizon(),
        kernel.delay(),
        channel.x_size(),
        channel.y_size(),
        kernel.feedback(),
    )?;
    lattice.check(kernel, channel)?;
    if q.horizon() != channel.horizon() || q.x_size() != channel.x_size() || q.y_size() != channel.y_size() {
        return Err(structure("posterior shape does not match the channel"));
    }
    if q.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Structure("posterior has negative entries".into()));
    }
    let mut r = Vec::new();
    let mut scratch = Vec::new();
    lattice.kernel_products(kernel, &mut r, &mut scratch);
    let pc = channel.prefix_products();
    let y = channel.y_size();
    Ok(information_sum(&pc[channel.horizon() - 1], &r, q.values(), y))
}

/// `sum_e p_e r_e log2(q_e / r_e)` with the 0 log 0 = 0 convention.
pub(crate) fn information_sum(pc: &[f64], r: &[f64], q: &[f64], y_size: usize) -> f64 {
    let mut acc = 0.0;
    for (e, (&p, &qv)) in pc.iter().zip(q).enumerate() {
        let rv = r[e / y_size];
        let w = p * rv;
        if w > 0.0 {
            acc += w * (qv.log2() - rv.log2());
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FeedbackMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|a| a / s).collect()
    }

    fn random_kernel(rng: &mut ChaCha8Rng, n: usize, d: usize, x: usize, fb: FeedbackMap) -> CausalKernel {
        CausalKernel::from_fn(n, d, x, fb, |_, _, _| random_row(rng, x)).unwrap()
    }

    fn random_channel(rng: &mut ChaCha8Rng, n: usize, x: usize, y: usize) -> ChannelFactors {
        ChannelFactors::from_fn(n, x, y, |_, _| random_row(rng, y)).unwrap()
    }

    fn all_seqs(size: usize, len: usize) -> Vec<Vec<usize>> {
        let c = SequenceCodec::uniform(size, len).unwrap();
        (0..c.len()).map(|i| c.decode(i).unwrap()).collect()
    }

    #[test]
    fn kernel_axes_order() {
        use KernelAxis::*;
        assert_eq!(
            kernel_axes(3, 1),
            vec![Input(1), Feedback(1), Input(2), Feedback(2), Input(3)]
        );
        assert_eq!(
            kernel_axes(4, 2),
            vec![Input(1), Input(2), Feedback(1), Input(3), Feedback(2), Input(4)]
        );
        assert_eq!(kernel_axes(2, 5), vec![Input(1), Input(2)]);
    }

    #[test]
    fn step_table_shapes() {
        let k = CausalKernel::uniform(4, 2, 3, FeedbackMap::identity(2)).unwrap();
        for i in 1usize..=4 {
            let rows = 3usize.pow(i as u32 - 1) * 2usize.pow(i.saturating_sub(2) as u32);
            assert_eq!(k.table(i).len(), rows * 3);
        }
    }

    #[test]
    fn uniform_kernel_evaluates_to_quarter() {
        let k = CausalKernel::uniform(2, 1, 2, FeedbackMap::identity(2)).unwrap();
        for x in all_seqs(2, 2) {
            for z in all_seqs(2, 1) {
                assert!((k.evaluate(&x, &z).unwrap() - 0.25).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn deterministic_kernel() {
        let k = CausalKernel::from_fn(2, 1, 2, FeedbackMap::identity(2), |_, _, _| vec![1.0, 0.0]).unwrap();
        for z in all_seqs(2, 1) {
            assert_eq!(k.evaluate(&[0, 0], &z).unwrap(), 1.0);
            assert_eq!(k.evaluate(&[0, 1], &z).unwrap(), 0.0);
            assert_eq!(k.evaluate(&[1, 0], &z).unwrap(), 0.0);
        }
        let m = k.marginalize_last().unwrap();
        assert_eq!(m.evaluate(&[0], &[]).unwrap(), 1.0);
        assert_eq!(m.evaluate(&[1], &[]).unwrap(), 0.0);
    }

    #[test]
    fn evaluate_length_mismatch() {
        let k = CausalKernel::uniform(2, 1, 2, FeedbackMap::identity(2)).unwrap();
        assert!(matches!(k.evaluate(&[0], &[0]), Err(Error::Structure(_))));
        assert!(matches!(k.evaluate(&[0, 0], &[]), Err(Error::Structure(_))));
    }

    #[test]
    fn random_kernel_sums_to_one_for_each_feedback() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_kernel(&mut rng, 3, 1, 2, FeedbackMap::identity(2));
        for z in all_seqs(2, 2) {
            let s: f64 = all_seqs(2, 3).iter().map(|x| k.evaluate(x, &z).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn marginalize_examples() {
        let k = CausalKernel::uniform(3, 1, 2, FeedbackMap::identity(2)).unwrap();
        assert_eq!(
            k.marginalize_last().unwrap(),
            CausalKernel::uniform(2, 1, 2, FeedbackMap::identity(2)).unwrap()
        );
        assert!(matches!(
            CausalKernel::uniform(1, 1, 2, FeedbackMap::identity(2))
                .unwrap()
                .marginalize_last(),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn marginalize_matches_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, d, x, fb) in [
            (2, 1, 2, FeedbackMap::identity(2)),
            (3, 1, 2, FeedbackMap::identity(2)),
            (4, 1, 2, FeedbackMap::identity(2)),
            (4, 2, 2, FeedbackMap::identity(3)),
            (3, 1, 3, FeedbackMap::new(vec![0, 1, 1]).unwrap()),
        ] {
            let k = random_kernel(&mut rng, n, d, x, fb.clone());
            let m = k.marginalize_last().unwrap();
            let zlen = n.saturating_sub(d);
            for z in all_seqs(fb.z_size(), zlen) {
                for xp in all_seqs(x, n - 1) {
                    let mut total = 0.0;
                    for xn in 0..x {
                        let mut xs = xp.clone();
                        xs.push(xn);
                        total += k.evaluate(&xs, &z).unwrap();
                    }
                    let want = m.evaluate(&xp, &z[..(n - 1).saturating_sub(d)]).unwrap();
                    assert!((total - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn prefix_chain_identity() {
        // r_i(x_i | hist) * evaluate(prefix i-1) == evaluate(prefix i)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_kernel(&mut rng, 4, 1, 2, FeedbackMap::identity(2));
        let prefixes: Vec<CausalKernel> = {
            let mut v = vec![k.clone()];
            for _ in 0..3 {
                let last = v.last().unwrap().marginalize_last().unwrap();
                v.push(last);
            }
            v.reverse();
            v
        };
        for z in all_seqs(2, 3) {
            for xs in all_seqs(2, 4) {
                for i in 2..=4 {
                    let prev = prefixes[i - 2].evaluate(&xs[..i - 1], &z[..i - 2]).unwrap();
                    let cur = prefixes[i - 1].evaluate(&xs[..i], &z[..i - 1]).unwrap();
                    let step = k.prob(i, &xs[..i - 1], &z[..i - 1], xs[i - 1]).unwrap();
                    assert!((step * prev - cur).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn from_tables_rejects_bad_rows() {
        let fb = FeedbackMap::identity(2);
        let bad = vec![vec![0.6, 0.5]];
        assert!(matches!(
            CausalKernel::from_tables(1, 1, 2, fb.clone(), bad),
            Err(Error::NotStochastic { .. })
        ));
        let neg = vec![vec![1.5, -0.5]];
        assert!(CausalKernel::from_tables(1, 1, 2, fb.clone(), neg).is_err());
        let short = vec![vec![0.5, 0.5]];
        assert!(matches!(
            CausalKernel::from_tables(2, 1, 2, fb, short),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn full_table_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, d) in [(1, 1), (2, 1), (3, 1), (3, 2), (3, 3)] {
            let k = random_kernel(&mut rng, n, d, 2, FeedbackMap::identity(2));
            let full = k.full_table().unwrap();
            let back = CausalKernel::from_full_table(n, d, 2, FeedbackMap::identity(2), &full).unwrap();
            for (a, b) in k.tables().iter().flatten().zip(back.tables().iter().flatten()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_factor_rows_reconstruct_pmf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=4 {
            let ch = random_channel(&mut rng, n, 2, 2);
            for xs in all_seqs(2, n) {
                let s: f64 = all_seqs(2, n).iter().map(|ys| ch.evaluate(&xs, ys).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_uniform() {
        let k = CausalKernel::uniform(2, 1, 2, FeedbackMap::identity(2)).unwrap();
        let ch = ChannelFactors::memoryless(&[vec![0.5, 0.5], vec![0.5, 0.5]], 2).unwrap();
        let j = joint(&k, &ch).unwrap();
        assert!(j.values().iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-15));
    }

    #[test]
    fn joint_identity_channel() {
        let k = CausalKernel::from_tables(1, 1, 2, FeedbackMap::identity(2), vec![vec![0.3, 0.7]]).unwrap();
        let ch = ChannelFactors::memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        let j = joint(&k, &ch).unwrap();
        assert_eq!(j.get(0, 0), 0.3);
        assert_eq!(j.get(1, 1), 0.7);
        assert_eq!(j.get(0, 1), 0.0);
        assert_eq!(j.get(1, 0), 0.0);
    }

    #[test]
    fn joint_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (d, fb) in [
            (1, FeedbackMap::identity(2)),
            (2, FeedbackMap::identity(2)),
            (1, FeedbackMap::constant(2)),
        ] {
            let k = random_kernel(&mut rng, 3, d, 2, fb.clone());
            let ch = random_channel(&mut rng, 3, 2, 2);
            let j = joint(&k, &ch).unwrap();
            assert!((j.total() - 1.0).abs() < 1e-9);
            let seqs = all_seqs(2, 3);
            for (xi, xs) in seqs.iter().enumerate() {
                for (yi, ys) in seqs.iter().enumerate() {
                    let zs: Vec<usize> = ys[..3usize.saturating_sub(d)].iter().map(|&y| fb.apply(y)).collect();
                    let want = k.evaluate(xs, &zs).unwrap() * ch.evaluate(xs, ys).unwrap();
                    assert!((j.get(xi, yi) - want).abs() < 1e-15);
                }
            }
            let marg = j.y_marginal();
            for (yi, ys) in seqs.iter().enumerate() {
                let mut brute = 0.0;
                for xs in &seqs {
                    let zs: Vec<usize> = ys[..3usize.saturating_sub(d)].iter().map(|&y| fb.apply(y)).collect();
                    brute += k.evaluate(xs, &zs).unwrap() * ch.evaluate(xs, ys).unwrap();
                }
                assert!((marg[yi] - brute).abs() < 1e-15);
            }
        }
    }

    fn definitional_information(k: &CausalKernel, ch: &ChannelFactors) -> f64 {
        // sum p(x,y) log2 p(y||x)/p(y), by enumeration
        let n = ch.horizon();
        let seqs = all_seqs(2, n);
        let fb = k.feedback();
        let zl = n.saturating_sub(k.delay());
        let mut py = vec![0.0; seqs.len()];
        let mut pj = vec![vec![0.0; seqs.len()]; seqs.len()];
        for (xi, xs) in seqs.iter().enumerate() {
            for (yi, ys) in seqs.iter().enumerate() {
                let zs: Vec<usize> = ys[..zl].iter().map(|&y| fb.apply(y)).collect();
                let v = k.evaluate(xs, &zs).unwrap() * ch.evaluate(xs, ys).unwrap();
                pj[xi][yi] = v;
                py[yi] += v;
            }
        }
        let mut acc = 0.0;
        for (xi, xs) in seqs.iter().enumerate() {
            for (yi, ys) in seqs.iter().enumerate() {
                if pj[xi][yi] > 0.0 {
                    acc += pj[xi][yi] * (ch.evaluate(xs, ys).unwrap() / py[yi]).log2();
                }
            }
        }
        acc
    }

    #[test]
    fn information_with_exact_posterior_is_definitional() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            for d in [1, 2] {
                let k = random_kernel(&mut rng, n, d, 2, FeedbackMap::identity(2));
                let ch = random_channel(&mut rng, n, 2, 2);
                let q = joint(&k, &ch).unwrap().posterior();
                let got = directed_information(&k, &ch, &q).unwrap();
                let want = definitional_information(&k, &ch);
                assert!((got - want).abs() < 1e-10, "n={n} d={d}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn information_examples() {
        // input-independent channel
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = ChannelFactors::from_fn(3, 2, 2, |_, ys| {
            if ys.last() == Some(&1) {
                vec![0.2, 0.8]
            } else {
                vec![0.6, 0.4]
            }
        })
        .unwrap();
        let k = random_kernel(&mut rng, 3, 1, 2, FeedbackMap::identity(2));
        let q = joint(&k, &ch).unwrap().posterior();
        assert!(directed_information(&k, &ch, &q).unwrap().abs() < 1e-12);

        // noiseless bit
        let k = CausalKernel::uniform(1, 1, 2, FeedbackMap::identity(2)).unwrap();
        let ch = ChannelFactors::memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1).unwrap();
        let q = joint(&k, &ch).unwrap().posterior();
        assert!((directed_information(&k, &ch, &q).unwrap() - 1.0).abs() < 1e-15);

        // BSC(0.3): 1 - h(0.3)
        let ch = ChannelFactors::memoryless(&[vec![0.7, 0.3], vec![0.3, 0.7]], 1).unwrap();
        let q = joint(&k, &ch).unwrap().posterior();
        let v = directed_information(&k, &ch, &q).unwrap();
        assert!((v - 0.1187).abs() < 5e-5, "{v}");
    }

    #[test]
    fn concavity_on_full_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fb = FeedbackMap::identity(2);
        for trial in 0..6 {
            let n = 1 + trial % 3;
            let ch = random_channel(&mut rng, n, 2, 2);
            let k1 = random_kernel(&mut rng, n, 1, 2, fb.clone());
            let k2 = random_kernel(&mut rng, n, 1, 2, fb.clone());
            // arbitrary posteriors, not the exact ones
            let rows = 2usize.pow(n as u32);
            let q1 = PosteriorTable::from_fn(n, 2, 2, {
                let t: Vec<Vec<f64>> = (0..rows).map(|_| random_row(&mut rng, rows)).collect();
                move |x, y| t[y][x]
            })
            .unwrap();
            let q2 = PosteriorTable::from_fn(n, 2, 2, {
                let t: Vec<Vec<f64>> = (0..rows).map(|_| random_row(&mut rng, rows)).collect();
                move |x, y| t[y][x]
            })
            .unwrap();
            let f1 = k1.full_table().unwrap();
            let f2 = k2.full_table().unwrap();
            let i1 = directed_information(&k1, &ch, &q1).unwrap();
            let i2 = directed_information(&k2, &ch, &q2).unwrap();
            for lambda in [0.25, 0.5, 0.75] {
                let mixed: Vec<f64> = f1
                    .iter()
                    .zip(&f2)
                    .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                    .collect();
                let km = CausalKernel::from_full_table(n, 1, 2, fb.clone(), &mixed).unwrap();
                let qm = q1.mix(&q2, lambda).unwrap();
                let im = directed_information(&km, &ch, &qm).unwrap();
                assert!(im >= lambda * i1 + (1.0 - lambda) * i2 - 1e-10);
            }
        }
    }

    #[test]
    fn posterior_validation() {
        assert!(PosteriorTable::from_fn(1, 2, 2, |_, _| 0.7).is_err());
        let q = PosteriorTable::from_fn(1, 2, 2, |x, y| if x == y { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(q.get(1, 1), 1.0);
        assert_eq!(q.get(0, 1), 0.0);
    }

    #[test]
    fn joint_index_interleaves() {
        // x = (1,0), y = (0,1) -> digits x1 y1 x2 y2 = 1 0 0 1 = 9
        assert_eq!(joint_index(2, 2, 2, 0b10, 0b01), 9);
        // ternary x, binary y, n=1: x=2,y=1 -> 2*2+1
        assert_eq!(joint_index(1, 3, 2, 2, 1), 5);
    }

    #[test]
    fn split_joint_index_inverts_joint_index() {
        for (n, x, y) in [(1usize, 2usize, 2usize), (2, 3, 2), (3, 2, 3)] {
            for xi in 0..x * x.pow(n as u32 - 1) {
                for yi in 0..y.pow(n as u32) {
                    let e = joint_index(n, x, y, xi, yi);
                    assert_eq!(split_joint_index(e, n, x, y), (xi, yi));
                }
            }
        }
    }

    #[test]
    fn block_matrix_rows_are_distributions() {
        let ch = crate::channel::FscKernel::trapdoor(2).unwrap().unroll(3, 1).unwrap();
        let m = ch.block_matrix();
        assert_eq!((m.len(), m[0].len()), (8, 8));
        for (xi, row) in m.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let xs = [(xi >> 2) & 1, (xi >> 1) & 1, xi & 1];
            for (yi, &v) in row.iter().enumerate() {
                let ys = [(yi >> 2) & 1, (yi >> 1) & 1, yi & 1];
                assert_eq!(v, ch.evaluate(&xs, &ys).unwrap());
            }
        }
    }
}
