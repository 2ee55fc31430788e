//! Mixed-radix index spaces for fixed-length symbol sequences and the
//! nested max/sum folds evaluated over them.
//!
//! Every table in this crate is a flat `Vec<f64>` addressed by a
//! big-endian mixed-radix index: the first position is the most significant
//! digit, so all sequences sharing a prefix occupy one contiguous block.

use crate::error::{domain, structure, Result};

/// Cardinalities of the input, output and feedback alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlphabetSpec {
    pub x_size: usize,
    pub y_size: usize,
    pub z_size: usize,
}

impl AlphabetSpec {
    pub fn new(x_size: usize, y_size: usize, z_size: usize) -> Result<Self> {
        if x_size < 2 || y_size < 2 {
            return Err(domain(format!(
                "input and output alphabets need at least 2 symbols, got |X|={x_size}, |Y|={y_size}"
            )));
        }
        if z_size < 1 {
            return Err(domain("feedback alphabet must be non-empty"));
        }
        Ok(Self { x_size, y_size, z_size })
    }
}

/// Bijection between sequences `(s_1, ..., s_n)` with `s_k < sizes[k]` and
/// the integers `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceCodec {
    sizes: Vec<usize>,
    len: u64,
}

impl SequenceCodec {
    /// Fails if any size is zero or the index space does not fit in 64 bits.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        let mut len: u64 = 1;
        for (pos, &s) in sizes.iter().enumerate() {
            if s == 0 {
                return Err(domain(format!("alphabet at position {pos} is empty")));
            }
            len = len
                .checked_mul(s as u64)
                .ok_or_else(|| domain("sequence index space overflows 64 bits"))?;
        }
        Ok(Self { sizes, len })
    }

    /// Codec for `horizon` symbols over one alphabet of `size` symbols.
    pub fn uniform(size: usize, horizon: usize) -> Result<Self> {
        Self::new(vec![size; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of distinct sequences.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn encode(&self, seq: &[usize]) -> Result<u64> {
        if seq.len() != self.sizes.len() {
            return Err(structure(format!(
                "sequence of length {} does not match horizon {}",
                seq.len(),
                self.sizes.len()
            )));
        }
        let mut idx = 0u64;
        for (pos, (&sym, &size)) in seq.iter().zip(&self.sizes).enumerate() {
            if sym >= size {
                return Err(domain(format!(
                    "symbol {sym} at position {pos} exceeds alphabet size {size}"
                )));
            }
            idx = idx * size as u64 + sym as u64;
        }
        Ok(idx)
    }

    pub fn decode(&self, index: u64) -> Result<Vec<usize>> {
        if index >= self.len {
            return Err(domain(format!(
                "index {index} outside sequence space of size {}",
                self.len
            )));
        }
        let mut out = vec![0; self.sizes.len()];
        let mut rest = index;
        for (slot, &size) in out.iter_mut().zip(&self.sizes).rev() {
            *slot = (rest % size as u64) as usize;
            rest /= size as u64;
        }
        Ok(out)
    }
}

/// How one axis is folded by [`alternating_reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Max,
    Sum,
}

/// Folds a dense table over `sizes` (outermost axis first) down to a scalar,
/// reducing the innermost axis first with the reduction `schedule[k]` given
/// for axis `k`.
///
/// With `sizes = [2, 2]` and `schedule = [Max, Sum]` the result is
/// `max_a sum_b t[a][b]`. The fold runs left to right, so results are
/// bit-reproducible.
pub fn alternating_reduce(table: &[f64], sizes: &[usize], schedule: &[Reduction]) -> Result<f64> {
    if sizes.len() != schedule.len() {
        return Err(structure(format!(
            "schedule has {} entries for {} axes",
            schedule.len(),
            sizes.len()
        )));
    }
    let expected = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| structure("table shape overflows"))?;
    if expected != table.len() || sizes.contains(&0) {
        return Err(structure(format!(
            "table has {} entries, axes {:?} need {}",
            table.len(),
            sizes,
            expected
        )));
    }
    let mut cur: Vec<f64> = table.to_vec();
    for (&size, &red) in sizes.iter().zip(schedule).rev() {
        cur = cur
            .chunks_exact(size)
            .map(|block| match red {
                Reduction::Sum => block.iter().sum(),
                Reduction::Max => block.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
            .collect();
    }
    Ok(cur[0])
}
