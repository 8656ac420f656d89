//! Reusable DFT plans over `rustfft`.
//!
//! Sign convention: the forward transform is `X_k = sum_i x_i exp(-2 pi j k i / n)`,
//! the inverse carries the `1/n` factor.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A reusable transform plan for one length. Cheap to clone and shareable
/// across threads.
#[derive(Clone)]
pub struct FftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("len", &self.len).finish()
    }
}

impl FftPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform (no normalisation).
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        self.forward.process(buf);
    }

    /// In-place inverse transform, scaled by `1/n`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// Forward transform of a real sequence.
    pub fn forward_real(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let r = (i * k) % n;
                        v * Complex64::from_polar(1.0, sign * 2.0 * PI * r as f64 / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        (0..n).map(|_| Complex64::new(next(), next())).collect()
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        for n in [1usize, 2, 3, 4, 5, 7, 8, 12, 16, 17, 31, 64, 100, 127, 1025] {
            let x = pseudo_random(n, n as u64);
            let plan = FftPlan::new(n);
            let mut y = x.clone();
            plan.forward(&mut y);
            let expect = naive(&x, -1.0);
            let scale: f64 = expect.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in y.iter().zip(&expect) {
                assert!((a - b).norm() <= 1e-11 * scale, "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_matches_naive_for_odd_length() {
        let x = pseudo_random(45, 9);
        let plan = FftPlan::new(45);
        let mut y = x.clone();
        plan.inverse(&mut y);
        let expect: Vec<Complex64> = naive(&x, 1.0).into_iter().map(|z| z / 45.0).collect();
        for (a, b) in y.iter().zip(&expect) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        for n in [6usize, 64, 1000, 4096] {
            let x = pseudo_random(n, 3);
            let plan = FftPlan::new(n);
            let mut y = x.clone();
            plan.forward(&mut y);
            plan.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).norm() <= 1e-12);
            }
        }
    }
}
