//! Independent oracles shared by the integration tests. Everything here is
//! a direct linear scan or double loop, with no shared code paths with the
//! library beyond its public types.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `sum_i x_i exp(-2 pi j k i / n)` by the double loop.
pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let ang = -2.0 * std::f64::consts::PI * ((k * i) % n) as f64 / n as f64;
                    Complex64::from_polar(v, ang)
                })
                .sum()
        })
        .collect()
}

/// Brute-force evaluation of the feature at every order-statistic level of
/// `s`, the smoothed values at frequency indices `m..m + s.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Oracle {
    pub set_a: Vec<f64>,
    pub set_s: Vec<f64>,
    pub iota: f64,
    pub g: usize,
    pub d: f64,
    pub a: usize,
    pub b: usize,
}

pub fn oracle_a(s: &[f64], x: f64) -> usize {
    (0..s.len()).find(|&k| s[k] <= x).expect("level below minimum")
}

pub fn oracle_b(s: &[f64], x: f64) -> usize {
    let a = oracle_a(s, x);
    let max = s[a..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (a..s.len()).filter(|&k| s[k] == max).max().unwrap()
}

pub fn oracle_d(s: &[f64], x: f64) -> f64 {
    let b = oracle_b(s, x);
    x - s[..=b].iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn oracle_extract(s: &[f64], m: usize) -> Oracle {
    let mut mu = s.to_vec();
    mu.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut set_a: Vec<f64> = Vec::new();
    let mut set_s: Vec<f64> = Vec::new();
    for &x in &mu {
        let (a, b) = (oracle_a(s, x), oracle_b(s, x));
        if s[b] == x {
            if !set_a.contains(&x) {
                set_a.push(x);
            }
            if b > a && !set_s.contains(&x) {
                set_s.push(x);
            }
        }
    }
    let sort_desc = |v: &mut Vec<f64>| v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sort_desc(&mut set_a);
    sort_desc(&mut set_s);

    // iota = max of argmax_{x in S} d(x)
    let mut iota = 0.0;
    let mut best_d = f64::NEG_INFINITY;
    for &x in &set_s {
        let d = oracle_d(s, x);
        if d > best_d || (d == best_d && x > iota) {
            best_d = d;
            iota = x;
        }
    }
    if iota > 0.0 {
        let (a, b) = (oracle_a(s, iota), oracle_b(s, iota));
        Oracle { set_a, set_s, iota, g: b - a, d: oracle_d(s, iota), a: a + m, b: b + m }
    } else {
        Oracle { set_a, set_s, iota: 0.0, g: 0, d: 0.0, a: m, b: m }
    }
}

/// Random smoothed spectrum: continuous values, or small integers so that
/// ties between levels are common.
pub fn random_smoothed(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    if r.random_bool(0.5) {
        (0..len).map(|_| r.random_range(0.0..10.0)).collect()
    } else {
        let top = r.random_range(1..6u32);
        (0..len).map(|_| r.random_range(0..=top) as f64).collect()
    }
}

/// `1/sqrt(x+1) + 0.5 sin(2 pi x / 6) 1_[30,90](x) + 5` at `x = 0.12 i`.
pub fn decaying_burst(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = 0.12 * i as f64;
            let burst = if (30.0..=90.0).contains(&x) {
                0.5 * (2.0 * std::f64::consts::PI * x / 6.0).sin()
            } else {
                0.0
            };
            1.0 / (x + 1.0).sqrt() + burst + 5.0
        })
        .collect()
}

/// `1/2 ||y - x||^2 + lambda sum |x_{i-1} - 2 x_i + x_{i+1}|`.
pub fn trend_objective(y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(x).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    let pen: f64 = x.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).sum();
    fit + lambda * pen
}

/// Closed-form least-squares line through `(i, y_i)`.
pub fn least_squares_line(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mean_t = (n - 1.0) / 2.0;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let t = i as f64 - mean_t;
        sty += t * (v - mean_y);
        stt += t * t;
    }
    let slope = sty / stt;
    (0..y.len()).map(|i| mean_y + slope * (i as f64 - mean_t)).collect()
}

/// Minimizes a convex function of `x` by cyclic coordinate golden-section
/// search with shrinking brackets, followed by pattern moves along the
/// directions that keep second differences fixed.
pub fn coordinate_search(y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = y.len();
    let f = |x: &[f64]| trend_objective(y, x, lambda);
    let mut x = y.to_vec();
    let mut step = y.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    // the objective is not separable along coordinates at kinks, so also
    // search along lines (affine directions) and pairs of neighbours
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
    }
    dirs.push(vec![1.0; n]);
    dirs.push((0..n).map(|i| i as f64).collect());
    for i in 0..n {
        for j in i + 1..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e[j] = 1.0;
            dirs.push(e.clone());
            e[j] = -1.0;
            dirs.push(e);
        }
    }
    // hat functions move a knot's height while keeping the rest linear
    for c in 1..n - 1 {
        for l in 0..c {
            for r in c + 1..n {
                let e: Vec<f64> = (0..n)
                    .map(|i| {
                        if i <= l || i >= r {
                            0.0
                        } else if i <= c {
                            (i - l) as f64 / (c - l) as f64
                        } else {
                            (r - i) as f64 / (r - c) as f64
                        }
                    })
                    .collect();
                dirs.push(e);
            }
        }
    }
    while step > 1e-13 {
        let mut improved = true;
        while improved {
            improved = false;
            for d in &dirs {
                let line = |t: f64| {
                    let z: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + t * b).collect();
                    f(&z)
                };
                let t = golden(&line, -step, step);
                let cur = f(&x);
                if line(t) < cur - 1e-15 * (1.0 + cur.abs()) {
                    for (a, b) in x.iter_mut().zip(d) {
                        *a += t * b;
                    }
                    improved = true;
                }
            }
        }
        step *= 0.5;
    }
    let v = f(&x);
    (x, v)
}

fn golden(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid) <= f(0.0) {
        mid
    } else {
        0.0
    }
}
