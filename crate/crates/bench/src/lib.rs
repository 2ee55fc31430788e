//! Fixtures shared by the criterion benchmarks.

use dirinfo::baa::BaaRun;
use dirinfo::{BaaProblem, FscKernel};

/// A trapdoor(2) run at block length `n` after `warmup` iterations.
pub fn trapdoor_run(n: usize, delay: usize, warmup: usize) -> BaaRun {
    let ch = FscKernel::trapdoor(2)
        .and_then(|k| k.unroll(n, 0))
        .expect("trapdoor unrolls");
    let mut run = BaaRun::init(BaaProblem::new(ch, delay).expect("valid problem")).expect("run fits in memory");
    for _ in 0..warmup {
        run.iterate().expect("iteration succeeds");
    }
    run
}
