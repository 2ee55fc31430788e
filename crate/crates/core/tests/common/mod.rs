//! Independent reference computations shared by the integration tests.
//! Everything here works on whole sequences by brute-force enumeration and
//! never touches the solver's tables directly.
#![allow(dead_code, clippy::needless_range_loop)]

use dirinfo::{CausalKernel, ChannelFactors, FeedbackMap, PosteriorTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector with every entry bounded away from zero.
pub fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|a| a / s).collect()
}

/// Random probability vector that may contain exact zeros.
pub fn sparse_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            return v.into_iter().map(|a| a / s).collect();
        }
    }
}

pub fn random_channel(rng: &mut ChaCha8Rng, n: usize, x: usize, y: usize) -> ChannelFactors {
    ChannelFactors::from_fn(n, x, y, |_, _| random_row(rng, y)).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, n: usize, d: usize, x: usize, fb: FeedbackMap) -> CausalKernel {
    CausalKernel::from_fn(n, d, x, fb, |_, _, _| random_row(rng, x)).unwrap()
}

pub fn digits(mut idx: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

/// `z^{n-d}` seen by the encoder for output sequence `ys`.
pub fn feedback_seq(ys: &[usize], n: usize, d: usize, fb: &FeedbackMap) -> Vec<usize> {
    ys[..n.saturating_sub(d)].iter().map(|&y| fb.apply(y)).collect()
}

/// `p(x^n, y^n)` as `[x_index][y_index]` by enumeration.
pub fn joint_matrix(k: &CausalKernel, ch: &ChannelFactors) -> Vec<Vec<f64>> {
    let n = ch.horizon();
    let (x, y) = (ch.x_size(), ch.y_size());
    let nx = x.pow(n as u32);
    let ny = y.pow(n as u32);
    let mut m = vec![vec![0.0; ny]; nx];
    for (xi, row) in m.iter_mut().enumerate() {
        let xs = digits(xi, x, n);
        for (yi, slot) in row.iter_mut().enumerate() {
            let ys = digits(yi, y, n);
            let z = feedback_seq(&ys, n, k.delay(), k.feedback());
            *slot = k.evaluate(&xs, &z).unwrap() * ch.evaluate(&xs, &ys).unwrap();
        }
    }
    m
}

/// `I(X^n -> Y^n) = sum p(x^n, y^n) log2 p(y^n||x^n) / p(y^n)` in bits.
pub fn directed_information_bruteforce(k: &CausalKernel, ch: &ChannelFactors) -> f64 {
    let n = ch.horizon();
    let (x, y) = (ch.x_size(), ch.y_size());
    let j = joint_matrix(k, ch);
    let ny = y.pow(n as u32);
    let py: Vec<f64> = (0..ny).map(|yi| j.iter().map(|r| r[yi]).sum()).collect();
    let mut total = 0.0;
    for (xi, row) in j.iter().enumerate() {
        let xs = digits(xi, x, n);
        for (yi, &p) in row.iter().enumerate() {
            if p > 0.0 {
                let ys = digits(yi, y, n);
                total += p * (ch.evaluate(&xs, &ys).unwrap() / py[yi]).log2();
            }
        }
    }
    total
}

/// `sum p(x^n, y^n) log2 q(x^n|y^n) / r(x^n||z^{n-d})`, the objective
/// evaluated for an arbitrary posterior.
pub fn objective_bruteforce(k: &CausalKernel, ch: &ChannelFactors, q: &PosteriorTable) -> f64 {
    let n = ch.horizon();
    let (x, y) = (ch.x_size(), ch.y_size());
    let j = joint_matrix(k, ch);
    let mut total = 0.0;
    for (xi, row) in j.iter().enumerate() {
        let xs = digits(xi, x, n);
        for (yi, &p) in row.iter().enumerate() {
            if p > 0.0 {
                let ys = digits(yi, y, n);
                let r = k.evaluate(&xs, &feedback_seq(&ys, n, k.delay(), k.feedback())).unwrap();
                total += p * (q.get(xi, yi) / r).log2();
            }
        }
    }
    total
}

/// Exact posterior by Bayes' rule on the enumerated joint.
pub fn posterior_bruteforce(k: &CausalKernel, ch: &ChannelFactors) -> PosteriorTable {
    let n = ch.horizon();
    let j = joint_matrix(k, ch);
    let ny = ch.y_size().pow(n as u32);
    let py: Vec<f64> = (0..ny).map(|yi| j.iter().map(|r| r[yi]).sum()).collect();
    let u = (ch.x_size() as f64).powi(-(n as i32));
    PosteriorTable::from_fn(n, ch.x_size(), ch.y_size(), |xi, yi| {
        if py[yi] > 0.0 {
            j[xi][yi] / py[yi]
        } else {
            u
        }
    })
    .unwrap()
}

/// Posterior rows multiplied by random factors in `[1-a, 1+a]` and renormalized.
pub fn perturb_posterior(q: &PosteriorTable, rng: &mut ChaCha8Rng, a: f64) -> PosteriorTable {
    let n = q.horizon();
    let nx = q.x_size().pow(n as u32);
    let ny = q.y_size().pow(n as u32);
    let mut m = vec![vec![0.0; nx]; ny];
    for (yi, row) in m.iter_mut().enumerate() {
        for (xi, slot) in row.iter_mut().enumerate() {
            *slot = q.get(xi, yi) * rng.gen_range(1.0 - a..1.0 + a);
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / nx as f64);
        }
    }
    PosteriorTable::from_fn(n, q.x_size(), q.y_size(), |xi, yi| m[yi][xi]).unwrap()
}

/// Every kernel row is a probability vector within 1e-12.
pub fn kernel_rows_ok(k: &CausalKernel) -> bool {
    k.tables().iter().all(|t| {
        t.chunks_exact(k.x_size())
            .all(|r| r.iter().all(|&v| v >= 0.0) && (r.iter().sum::<f64>() - 1.0).abs() <= 1e-12)
    })
}

/// Posterior rows of outputs with positive probability sum to 1 within 1e-12.
pub fn posterior_rows_ok(q: &PosteriorTable, k: &CausalKernel, ch: &ChannelFactors) -> bool {
    let n = ch.horizon();
    let j = joint_matrix(k, ch);
    let nx = q.x_size().pow(n as u32);
    let ny = q.y_size().pow(n as u32);
    (0..ny).all(|yi| {
        let py: f64 = j.iter().map(|r| r[yi]).sum();
        let s: f64 = (0..nx).map(|xi| q.get(xi, yi)).sum();
        py == 0.0 || (s - 1.0).abs() <= 1e-12
    })
}

/// Brute-force `C_2` (bits per use) of a binary channel with delay-1
/// feedback. The kernel has five free numbers: `a = r(x1=0)` and
/// `b[x1][y1] = r(x2=0|x1,y1)`. By the chain rule
/// `I(X^2->Y^2) = I(X1;Y1) + sum_{y1} p(y1) I(X1 X2; Y2 | y1)`, and the
/// second term splits into one problem per `y1` over `(b[0][y1], b[1][y1])`.
/// Each search runs a grid of step 0.01 followed by local refinement down
/// to 1e-4.
pub fn grid_capacity_n2(ch: &ChannelFactors) -> f64 {
    let p1 = |x1: usize, y1: usize| ch.factor(&[x1], &[], y1).unwrap();
    let p2 = |x1: usize, x2: usize, y1: usize, y2: usize| ch.factor(&[x1, x2], &[y1], y2).unwrap();
    let h = |v: &[f64]| -> f64 { v.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum() };

    // p(y1) * I(X1 X2; Y2 | y1) for p(x1|y1) = w, b0 = r(x2=0|x1=0,y1), b1 likewise
    let inner = |y1: usize, py1: f64, w: [f64; 2], b0: f64, b1: f64| -> f64 {
        let b = [b0, b1];
        let mut py2 = [0.0; 2];
        let mut cond = 0.0;
        for x1 in 0..2 {
            for x2 in 0..2 {
                let px = w[x1] * if x2 == 0 { b[x1] } else { 1.0 - b[x1] };
                let row = [p2(x1, x2, y1, 0), p2(x1, x2, y1, 1)];
                py2[0] += px * row[0];
                py2[1] += px * row[1];
                cond += px * h(&row);
            }
        }
        py1 * (h(&py2) - cond)
    };

    let search2 = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
        let mut best = (f64::NEG_INFINITY, 0.5, 0.5);
        for i in 0..=100 {
            for j in 0..=100 {
                let (u, v) = (i as f64 / 100.0, j as f64 / 100.0);
                let val = f(u, v);
                if val > best.0 {
                    best = (val, u, v);
                }
            }
        }
        for step in [1e-3, 1e-4] {
            let (_, cu, cv) = best;
            for i in -10..=10 {
                for j in -10..=10 {
                    let u = (cu + i as f64 * step).clamp(0.0, 1.0);
                    let v = (cv + j as f64 * step).clamp(0.0, 1.0);
                    let val = f(u, v);
                    if val > best.0 {
                        best = (val, u, v);
                    }
                }
            }
        }
        best.0
    };

    let outer = |a: f64| -> f64 {
        let r1 = [a, 1.0 - a];
        let mut total = 0.0;
        let mut py1 = [0.0; 2];
        let mut cond = 0.0;
        for x1 in 0..2 {
            let row = [p1(x1, 0), p1(x1, 1)];
            py1[0] += r1[x1] * row[0];
            py1[1] += r1[x1] * row[1];
            cond += r1[x1] * h(&row);
        }
        total += h(&py1) - cond;
        for y1 in 0..2 {
            if py1[y1] == 0.0 {
                continue;
            }
            let w = [r1[0] * p1(0, y1) / py1[y1], r1[1] * p1(1, y1) / py1[y1]];
            total += search2(&|u, v| inner(y1, py1[y1], w, u, v));
        }
        total
    };

    let mut best = (f64::NEG_INFINITY, 0.5);
    for i in 0..=100 {
        let a = i as f64 / 100.0;
        let v = outer(a);
        if v > best.0 {
            best = (v, a);
        }
    }
    for step in [1e-3, 1e-4] {
        let c = best.1;
        for i in -10..=10 {
            let a = (c + i as f64 * step).clamp(0.0, 1.0);
            let v = outer(a);
            if v > best.0 {
                best = (v, a);
            }
        }
    }
    best.0 / 2.0
}
