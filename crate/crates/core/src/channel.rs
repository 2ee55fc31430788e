//! Stationary finite-state channels `p(y, s' | x, s)`, their unrolling into
//! per-step factors `p(y_i | x^i, y^{i-1}, s_0)`, and the built-in channel
//! families (BSC, M-cell trapdoor, Ising).

use std::fmt;
use std::str::FromStr;

use crate::causal::{joint_len, ChannelFactors};
use crate::error::{check_row, domain, Error, Result};

/// Deterministic per-symbol reduction `z = f(y)` of the fed-back output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeedbackMap {
    table: Vec<usize>,
    z_size: usize,
}

impl FeedbackMap {
    /// `table[y]` is `f(y)`; the image must be exactly `0..=max`.
    pub fn new(table: Vec<usize>) -> Result<Self> {
        if table.is_empty() {
            return Err(domain("feedback map needs at least one output symbol"));
        }
        let z_size = table.iter().max().unwrap() + 1;
        let mut hit = vec![false; z_size];
        for &z in &table {
            hit[z] = true;
        }
        if let Some(z) = hit.iter().position(|h| !h) {
            return Err(domain(format!("feedback symbol {z} is not the image of any output")));
        }
        Ok(Self { table, z_size })
    }

    /// `f(y) = y`.
    pub fn identity(y_size: usize) -> Self {
        Self {
            table: (0..y_size).collect(),
            z_size: y_size,
        }
    }

    /// `f(y) = 0`: the encoder learns nothing from the output.
    pub fn constant(y_size: usize) -> Self {
        Self {
            table: vec![0; y_size],
            z_size: 1,
        }
    }

    pub fn apply(&self, y: usize) -> usize {
        self.table[y]
    }

    pub fn y_size(&self) -> usize {
        self.table.len()
    }

    pub fn z_size(&self) -> usize {
        self.z_size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    /// `{y : f(y) = z}`.
    pub fn fiber(&self, z: usize) -> Vec<usize> {
        (0..self.table.len()).filter(|&y| self.table[y] == z).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(y, &z)| y == z)
    }
}

/// `t(y, s' | x, s)` stored as rows `(x, s)` (x-major) of length `|Y||S|`
/// (y-major, s'-minor).
#[derive(Debug, Clone, PartialEq)]
pub struct FscKernel {
    x_size: usize,
    y_size: usize,
    s_size: usize,
    table: Vec<f64>,
}

impl FscKernel {
    pub fn new(x_size: usize, y_size: usize, s_size: usize, table: Vec<f64>) -> Result<Self> {
        if x_size < 2 || y_size < 2 {
            return Err(domain("channel alphabets need at least 2 symbols"));
        }
        if s_size == 0 {
            return Err(domain("channel needs at least one state"));
        }
        let row = y_size * s_size;
        if table.len() != x_size * s_size * row {
            return Err(Error::Structure(format!(
                "transition table has {} entries, expected {}",
                table.len(),
                x_size * s_size * row
            )));
        }
        for (r, chunk) in table.chunks_exact(row).enumerate() {
            check_row("fsc transition", r, chunk)?;
        }
        Ok(Self {
            x_size,
            y_size,
            s_size,
            table,
        })
    }

    /// One-state channel with transition matrix `w[x][y]`.
    pub fn memoryless(w: &[Vec<f64>]) -> Result<Self> {
        let y_size = w.first().map_or(0, |r| r.len());
        if w.iter().any(|r| r.len() != y_size) {
            return Err(Error::Structure("ragged channel matrix".into()));
        }
        Self::new(w.len(), y_size, 1, w.concat())
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    /// `t(y, s' | x, s)`.
    pub fn transition(&self, x: usize, s: usize, y: usize, s_next: usize) -> f64 {
        self.table[((x * self.s_size + s) * self.y_size + y) * self.s_size + s_next]
    }

    /// `sum_{s'} t(y, s' | x, s)`.
    pub fn output_prob(&self, x: usize, s: usize, y: usize) -> f64 {
        (0..self.s_size).map(|sn| self.transition(x, s, y, sn)).sum()
    }

    /// Factors `p(y_i | x^i, y^{i-1}, s_0)` for `i = 1..=n`, computed with a
    /// normalized forward state belief. Histories that cannot occur get
    /// uniform rows, and so does everything below them.
    pub fn unroll(&self, horizon: usize, s0: usize) -> Result<ChannelFactors> {
        if horizon == 0 {
            return Err(domain("horizon must be at least 1"));
        }
        if s0 >= self.s_size {
            return Err(domain(format!("initial state {s0} outside 0..{}", self.s_size)));
        }
        let mut tables = Vec::with_capacity(horizon);
        for i in 1..=horizon {
            tables.push(vec![0.0; joint_len(self.x_size, self.y_size, i)?]);
        }
        let mut belief = vec![0.0; self.s_size];
        belief[s0] = 1.0;
        self.unroll_from(&mut tables, 0, 0, Some(&belief));
        Ok(ChannelFactors::from_tables_unchecked(
            horizon,
            self.x_size,
            self.y_size,
            tables,
        ))
    }

    // depth-first over (x_i, y_i); `belief` is p(s_{i-1} | x^{i-1}, y^{i-1}, s_0)
    fn unroll_from(&self, tables: &mut [Vec<f64>], level: usize, prefix: usize, belief: Option<&[f64]>) {
        if level == tables.len() {
            return;
        }
        let uniform = 1.0 / self.y_size as f64;
        let mut next = vec![0.0; self.s_size];
        for x in 0..self.x_size {
            let row = (prefix * self.x_size + x) * self.y_size;
            for y in 0..self.y_size {
                let child = match belief {
                    Some(b) => {
                        next.iter_mut().for_each(|v| *v = 0.0);
                        for (s, &bs) in b.iter().enumerate() {
                            if bs == 0.0 {
                                continue;
                            }
                            for (sn, slot) in next.iter_mut().enumerate() {
                                *slot += bs * self.transition(x, s, y, sn);
                            }
                        }
                        let py: f64 = next.iter().sum();
                        tables[level][row + y] = py;
                        if py > 0.0 {
                            next.iter_mut().for_each(|v| *v /= py);
                            true
                        } else {
                            false
                        }
                    }
                    None => {
                        tables[level][row + y] = uniform;
                        false
                    }
                };
                let nb = if child { Some(next.clone()) } else { None };
                self.unroll_from(tables, level + 1, row + y, nb.as_deref());
            }
        }
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(domain(format!("crossover probability {p} outside [0, 1]")));
        }
        Self::memoryless(&[vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    /// Trapdoor channel whose box holds `m` cells: state `s` counts the ones
    /// among the `m - 1` stored bits, the output is a uniformly chosen cell
    /// after the input joins the box, and `s' = s + x - y`.
    pub fn trapdoor(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(domain(format!("trapdoor needs at least 2 cells, got {m}")));
        }
        let s_size = m;
        let mut table = vec![0.0; 2 * s_size * 2 * s_size];
        for x in 0..2 {
            for s in 0..s_size {
                let ones = s + x;
                let p1 = ones as f64 / m as f64;
                let base = (x * s_size + s) * 2 * s_size;
                if p1 < 1.0 {
                    table[base + ones] = 1.0 - p1;
                }
                if p1 > 0.0 {
                    table[base + s_size + ones - 1] = p1;
                }
            }
        }
        Self::new(2, 2, s_size, table)
    }

    /// Ising channel: the state is the previous input; the output equals the
    /// input when it agrees with the state, otherwise it is either of the two
    /// with probability 1/2.
    pub fn ising() -> Result<Self> {
        let mut table = vec![0.0; 16];
        for x in 0..2 {
            for s in 0..2 {
                let base = (x * 2 + s) * 4;
                if x == s {
                    table[base + x * 2 + x] = 1.0;
                } else {
                    table[base + x * 2 + x] = 0.5;
                    table[base + s * 2 + x] = 0.5;
                }
            }
        }
        Self::new(2, 2, 2, table)
    }

    /// Parses the line-oriented text format: a header `fsc |X| |Y| |S|`
    /// followed by `|X||S|` rows (x-major, s-minor) of `|Y||S|`
    /// probabilities (y-major, s'-minor). `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |message: String| Error::Parse { line: line_no, message };
            match header {
                None => {
                    let tok: Vec<&str> = line.split_whitespace().collect();
                    if tok.len() != 4 || tok[0] != "fsc" {
                        return Err(perr(format!("expected header `fsc |X| |Y| |S|`, found `{line}`")));
                    }
                    let dims: Vec<usize> = tok[1..]
                        .iter()
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|e| perr(format!("bad dimension `{t}`: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    header = Some((dims[0], dims[1], dims[2]));
                }
                Some((_, y, s)) => {
                    let vals: Vec<f64> = line
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<f64>()
                                .map_err(|e| perr(format!("bad probability `{t}`: {e}")))
                        })
                        .collect::<Result<_>>()?;
                    if vals.len() != y * s {
                        return Err(perr(format!("expected {} probabilities, found {}", y * s, vals.len())));
                    }
                    rows.push((line_no, vals));
                }
            }
        }
        let (x, y, s) = header.ok_or(Error::Parse {
            line: 0,
            message: "missing `fsc` header".into(),
        })?;
        if rows.len() != x * s {
            return Err(Error::Parse {
                line: rows.last().map_or(0, |r| r.0),
                message: format!("expected {} rows, found {}", x * s, rows.len()),
            });
        }
        for (r, (line, vals)) in rows.iter().enumerate() {
            check_row("fsc transition", r, vals).map_err(|e| Error::Parse {
                line: *line,
                message: e.to_string(),
            })?;
        }
        let table: Vec<f64> = rows.into_iter().flat_map(|(_, v)| v).collect();
        Self::new(x, y, s, table)
    }

    /// Text form accepted by [`FscKernel::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("fsc {} {} {}\n", self.x_size, self.y_size, self.s_size);
        for chunk in self.table.chunks_exact(self.y_size * self.s_size) {
            let line: Vec<String> = chunk.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// A built-in channel family member, written `bsc:p`, `trapdoor:m` or `ising`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinChannel {
    Bsc(f64),
    Trapdoor(usize),
    Ising,
}

impl BuiltinChannel {
    pub fn build(&self) -> Result<FscKernel> {
        match *self {
            BuiltinChannel::Bsc(p) => FscKernel::bsc(p),
            BuiltinChannel::Trapdoor(m) => FscKernel::trapdoor(m),
            BuiltinChannel::Ising => FscKernel::ising(),
        }
    }
}

impl fmt::Display for BuiltinChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinChannel::Bsc(p) => write!(f, "bsc:{p}"),
            BuiltinChannel::Trapdoor(m) => write!(f, "trapdoor:{m}"),
            BuiltinChannel::Ising => write!(f, "ising"),
        }
    }
}

impl FromStr for BuiltinChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("bsc", Some(a)) => a
                .parse::<f64>()
                .map(BuiltinChannel::Bsc)
                .map_err(|e| domain(format!("bsc crossover `{a}`: {e}"))),
            ("trapdoor", Some(a)) => a
                .parse::<usize>()
                .map(BuiltinChannel::Trapdoor)
                .map_err(|e| domain(format!("trapdoor cell count `{a}`: {e}"))),
            ("ising", None) => Ok(BuiltinChannel::Ising),
            _ => Err(domain(format!("unknown channel `{s}`"))),
        }
    }
}
