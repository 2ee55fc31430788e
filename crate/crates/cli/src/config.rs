//! Parsing of the textual run parameters: channel specs, integer ranges,
//! feedback maps and initial-state handling.

use std::path::Path;

use anyhow::{bail, Context, Result};
use dirinfo::estimators::InitialState;
use dirinfo::{BuiltinChannel, FeedbackMap, FscKernel};

/// A channel to solve together with the label used in CSV output.
#[derive(Debug, Clone)]
pub struct NamedChannel {
    pub label: String,
    pub fsc: FscKernel,
}

/// Resolves `--channel`: a built-in name (`bsc:p`, `trapdoor:m`,
/// `trapdoor:a..b`, `ising`) or a path to a channel file. A trapdoor range
/// yields one channel per cell count.
pub fn parse_channels(spec: &str) -> Result<Vec<NamedChannel>> {
    if let Some(range) = spec
        .strip_prefix("trapdoor:")
        .filter(|r| r.contains("..") || r.contains(','))
    {
        return parse_range(range)
            .with_context(|| format!("--channel: bad trapdoor cell range `{range}`"))?
            .into_iter()
            .map(|m| {
                let b = BuiltinChannel::Trapdoor(m);
                let fsc = b.build().with_context(|| format!("--channel: `{b}`"))?;
                Ok(NamedChannel {
                    label: b.to_string(),
                    fsc,
                })
            })
            .collect();
    }
    Ok(vec![parse_channel(spec)?])
}

pub fn parse_channel(spec: &str) -> Result<NamedChannel> {
    match spec.parse::<BuiltinChannel>() {
        Ok(b) => {
            let fsc = b
                .build()
                .with_context(|| format!("--channel: invalid channel `{spec}`"))?;
            Ok(NamedChannel {
                label: b.to_string(),
                fsc,
            })
        }
        Err(builtin_err) => {
            let path = Path::new(spec);
            if !path.is_file() {
                bail!("--channel: `{spec}` is neither a built-in channel nor a readable file ({builtin_err})");
            }
            let text = std::fs::read_to_string(path).with_context(|| format!("--channel: reading `{spec}`"))?;
            let fsc = FscKernel::parse(&text).with_context(|| format!("--channel: malformed channel file `{spec}`"))?;
            Ok(NamedChannel {
                label: spec.to_string(),
                fsc,
            })
        }
    }
}

/// `5`, `1..8` (inclusive) or `2,4,6`. Empty ranges are rejected.
pub fn parse_range(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    let values: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("range start `{a}`"))?;
        let b: usize = b.trim().parse().with_context(|| format!("range end `{b}`"))?;
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|t| t.trim().parse::<usize>().with_context(|| format!("value `{t}`")))
            .collect::<Result<_>>()?
    };
    if values.is_empty() {
        bail!("range `{text}` is empty");
    }
    Ok(values)
}

pub fn is_ranged(text: &str) -> bool {
    text.contains("..") || text.contains(',')
}

/// `identity`, `const` or explicit pairs `y:z,y:z,...` covering every output.
pub fn parse_feedback(text: &str, y_size: usize) -> Result<Option<FeedbackMap>> {
    match text.trim() {
        "identity" => Ok(None),
        "const" | "constant" => Ok(Some(FeedbackMap::constant(y_size))),
        pairs => {
            let mut table = vec![None; y_size];
            for pair in pairs.split(',') {
                let (y, z) = pair
                    .split_once(':')
                    .with_context(|| format!("--feedback: expected `y:z`, found `{pair}`"))?;
                let y: usize = y.trim().parse().with_context(|| format!("--feedback: output `{y}`"))?;
                let z: usize = z
                    .trim()
                    .parse()
                    .with_context(|| format!("--feedback: feedback symbol `{z}`"))?;
                if y >= y_size {
                    bail!("--feedback: output {y} outside the alphabet of size {y_size}");
                }
                if table[y].replace(z).is_some() {
                    bail!("--feedback: output {y} mapped twice");
                }
            }
            let table: Vec<usize> = table
                .into_iter()
                .enumerate()
                .map(|(y, z)| z.with_context(|| format!("--feedback: output {y} has no image")))
                .collect::<Result<_>>()?;
            Ok(Some(FeedbackMap::new(table).context("--feedback")?))
        }
    }
}

/// `fixed:k` or `sandwich`.
pub fn parse_initial_state(text: &str) -> Result<InitialState> {
    match text.trim() {
        "sandwich" => Ok(InitialState::Sandwich),
        other => match other.strip_prefix("fixed:") {
            Some(k) => Ok(InitialState::Fixed(
                k.parse().with_context(|| format!("--s0: bad state index `{k}`"))?,
            )),
            None => bail!("--s0: expected `fixed:k` or `sandwich`, found `{other}`"),
        },
    }
}

/// Table cells `n (|X||Y|)^n` of a block-`n` run.
pub fn table_cells(x: usize, y: usize, n: usize) -> f64 {
    n as f64 * ((x * y) as f64).powi(n as i32)
}

pub const LARGE_RUN_BYTES: f64 = 1024.0 * 1024.0 * 1024.0;

/// Estimated bytes of a block-`n` run (8-byte cells).
pub fn estimated_bytes(x: usize, y: usize, n: usize) -> f64 {
    8.0 * table_cells(x, y, n)
}

/// Worker count: the flag, then `DIRINFO_WORKERS`, then all cores.
pub fn worker_count(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        return Ok(w);
    }
    match std::env::var("DIRINFO_WORKERS") {
        Ok(v) => {
            let w: usize = v.trim().parse().with_context(|| format!("DIRINFO_WORKERS: `{v}`"))?;
            if w == 0 {
                bail!("DIRINFO_WORKERS must be at least 1");
            }
            Ok(w)
        }
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}
