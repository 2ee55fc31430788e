//! CSV rendering. Every number is written with 9 significant digits.

use std::io::Write;

use anyhow::Result;
use dirinfo::estimators::CapacityRecord;
use dirinfo::BoundPair;

/// Formats `v` with 9 significant digits: fixed notation for moderate
/// magnitudes, exponent notation otherwise.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // exponent after rounding to 9 digits
    let sci = format!("{v:.8e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-3..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        format!("{v:.decimals$}")
    } else {
        sci
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

pub fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_trace<W: Write>(out: W, history: &[BoundPair]) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["iter", "I_L", "I_U", "gap"])?;
    for (k, b) in history.iter().enumerate() {
        w.write_record([(k + 1).to_string(), sig9(b.lower), sig9(b.upper), sig9(b.gap())])?;
    }
    w.flush()?;
    Ok(())
}

pub fn seconds_field(seconds: f64, timing: bool) -> String {
    if timing {
        format!("{seconds:.3}")
    } else {
        String::new()
    }
}

/// The one-line summary of `solve`; bound columns only in sandwich mode.
pub fn write_summary<W: Write>(out: W, d: usize, rec: &CapacityRecord, timing: bool) -> Result<()> {
    let mut w = csv_writer(out);
    let sandwich = rec.upper.is_some();
    let conv = rec.converged.to_string();
    let secs = seconds_field(rec.seconds, timing);
    if sandwich {
        w.write_record(["n", "d", "C_upper", "C_n", "C_lower", "converged", "iters", "seconds"])?;
        w.write_record([
            rec.n.to_string(),
            d.to_string(),
            opt(rec.upper),
            sig9(rec.estimate),
            opt(rec.lower),
            conv,
            rec.iterations.to_string(),
            secs,
        ])?;
    } else {
        w.write_record(["n", "d", "C_n", "converged", "iters", "seconds"])?;
        w.write_record([
            rec.n.to_string(),
            d.to_string(),
            sig9(rec.estimate),
            conv,
            rec.iterations.to_string(),
            secs,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep row; `None` marks a point that failed.
pub struct SweepRow<'a> {
    pub param: &'a str,
    pub n: usize,
    pub record: Option<&'a CapacityRecord>,
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow<'_>], timing: bool) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record([
        "param",
        "n",
        "C_upper",
        "C_n",
        "C_lower",
        "delta_n",
        "converged",
        "seconds",
    ])?;
    for row in rows {
        match row.record {
            Some(r) => w.write_record([
                row.param.to_string(),
                r.n.to_string(),
                opt(r.upper),
                sig9(r.estimate),
                opt(r.lower),
                opt(r.delta),
                r.converged.to_string(),
                seconds_field(r.seconds, timing),
            ])?,
            None => w.write_record([
                row.param.to_string(),
                row.n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "error".into(),
                String::new(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}
