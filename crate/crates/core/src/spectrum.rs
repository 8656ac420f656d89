//! Discrete Fourier analysis of a uniformly sampled signal: DFT, offset
//! normalisation, the windowed-RMS amplitude spectrum and its order statistics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftPlan;

/// Smallest accepted series length.
pub const MIN_LEN: usize = 4;

/// Required ratio between `|theta_0|` and the largest other DFT magnitude.
pub const OFFSET_MARGIN: f64 = 2.0;

/// A uniformly sampled real-valued series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    dt: f64,
    pub label: String,
}

impl Signal {
    /// Builds a signal, checking length, sampling interval and finiteness.
    pub fn new(samples: Vec<f64>, dt: f64) -> Result<Self> {
        if samples.len() < MIN_LEN {
            return Err(Error::Input(format!(
                "signal needs at least {MIN_LEN} samples, got {}",
                samples.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Input(format!("sampling interval must be positive, got {dt}")));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!("sample {i} is not finite ({})", samples[i])));
        }
        Ok(Self {
            samples,
            dt,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same sampling grid, new values. Used by stages that transform the samples.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            dt: self.dt,
            label: self.label.clone(),
        }
    }
}

/// DFT coefficients together with their `2m`-regularised magnitudes and
/// order statistics.
///
/// `smoothed[i]` holds the value at frequency index `k = m + i`, so valid
/// frequency indices run over `m..=n - m - 1`. Feature extraction only
/// looks at `m..=search_end`: the spectrum of a real series is mirror
/// symmetric, and scanning past `n / 2` would find the mirror image of the
/// low-frequency energy instead of a genuine spike.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpectrum {
    pub theta: Vec<Complex64>,
    pub m: usize,
    pub smoothed: Vec<f64>,
    pub mu: Vec<f64>,
    pub dt: f64,
    /// Last frequency index searched by feature extraction.
    pub search_end: usize,
}

/// Last non-redundant frequency index of a real series of length `n`
/// smoothed at half-width `m`.
pub fn real_search_end(n: usize, m: usize) -> usize {
    (n / 2).min(n - m - 1)
}

impl AmplitudeSpectrum {
    /// Builds the spectrum from the DFT coefficients of a real series; the
    /// search stops at the non-redundant half.
    pub fn from_theta(theta: Vec<Complex64>, m: usize, dt: f64) -> Result<Self> {
        let smoothed = regularize(&theta, m)?;
        let mu = order_stats(&smoothed);
        let search_end = real_search_end(theta.len(), m);
        Ok(Self {
            theta,
            m,
            smoothed,
            mu,
            dt,
            search_end,
        })
    }

    /// Offset-normalises the signal, transforms it and regularises at `m`.
    pub fn from_signal(signal: &Signal, m: usize) -> Result<Self> {
        Self::from_theta(normalized_dft(signal), m, signal.dt())
    }

    /// Builds a spectrum directly from smoothed values (frequency indices
    /// `m..=m + smoothed.len() - 1`), searched over its whole range.
    /// `theta` is left empty.
    pub fn from_smoothed(smoothed: Vec<f64>, m: usize, dt: f64) -> Result<Self> {
        if smoothed.is_empty() {
            return Err(Error::Input("empty spectrum".into()));
        }
        if let Some(i) = smoothed.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Input(format!(
                "smoothed value at offset {i} must be finite and nonnegative"
            )));
        }
        let mu = order_stats(&smoothed);
        let search_end = m + smoothed.len() - 1;
        Ok(Self {
            theta: Vec::new(),
            m,
            smoothed,
            mu,
            dt,
            search_end,
        })
    }

    /// Restricts feature extraction to frequency indices `m..=end`.
    pub fn with_search_end(mut self, end: usize) -> Result<Self> {
        if end < self.m || end > self.last_index() {
            return Err(Error::Parameter(format!(
                "search end {end} outside {}..={}",
                self.m,
                self.last_index()
            )));
        }
        self.search_end = end;
        Ok(self)
    }

    /// The searched part of `smoothed`.
    pub fn searched(&self) -> &[f64] {
        &self.smoothed[..=self.search_end - self.m]
    }

    /// Length of the underlying series.
    pub fn n(&self) -> usize {
        self.smoothed.len() + 2 * self.m
    }

    /// Last valid frequency index, `n - m - 1`.
    pub fn last_index(&self) -> usize {
        self.m + self.smoothed.len() - 1
    }

    /// Smoothed magnitude at frequency index `k`.
    pub fn at(&self, k: usize) -> f64 {
        self.smoothed[k - self.m]
    }

    /// Bin spacing in Hz, `1 / (n dt)`.
    pub fn bin_hz(&self) -> f64 {
        self.bins_to_hz(1.0)
    }

    /// `bins / (n dt)`.
    pub fn bins_to_hz(&self, bins: f64) -> f64 {
        bins / (self.n() as f64 * self.dt)
    }
}

/// DFT of the signal samples, `theta_k = sum_i x_i exp(-2 pi j k i / n)`.
pub fn dft(signal: &Signal) -> Vec<Complex64> {
    FftPlan::new(signal.len()).forward_real(signal.samples())
}

/// DFT of an arbitrary real slice; rejects non-finite samples.
pub fn dft_samples(samples: &[f64]) -> Result<Vec<Complex64>> {
    if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::Input(format!("sample {i} is not finite")));
    }
    Ok(FftPlan::new(samples.len()).forward_real(samples))
}

/// Inverse DFT (with the `1/n` factor).
pub fn idft(theta: &[Complex64]) -> Vec<Complex64> {
    let mut buf = theta.to_vec();
    FftPlan::new(theta.len()).inverse(&mut buf);
    buf
}

/// Constant that, added to every sample, makes `|theta_0|` at least
/// `OFFSET_MARGIN` times the largest other DFT magnitude. Zero when the
/// condition already holds.
pub fn offset_constant(theta: &[Complex64]) -> f64 {
    let n = theta.len() as f64;
    let peak = theta[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dc = theta[0].norm();
    if dc > 0.0 && dc >= OFFSET_MARGIN * peak {
        return 0.0;
    }
    if peak == 0.0 {
        // zero signal: any positive shift works
        return 1.0;
    }
    let sum = theta[0].re;
    let sign = if sum < 0.0 { -1.0 } else { 1.0 };
    // small overshoot so rounding in the recomputed sum cannot drop below the margin
    let target = sign * OFFSET_MARGIN * peak * (1.0 + 1e-9);
    (target - sum) / n
}

/// Shifts the signal by a constant so the zero-frequency coefficient dominates.
pub fn enforce_offset(signal: &Signal) -> Signal {
    let c = offset_constant(&dft(signal));
    if c == 0.0 {
        return signal.clone();
    }
    signal.with_samples(signal.samples().iter().map(|x| x + c).collect())
}

/// DFT of the offset-normalised signal.
///
/// Adding `C` to every sample only moves `theta_0` by `nC`, so the shift is
/// applied to that coefficient directly rather than transforming twice.
pub fn normalized_dft(signal: &Signal) -> Vec<Complex64> {
    normalized_dft_with(&FftPlan::new(signal.len()), signal.samples())
}

/// [`normalized_dft`] with a caller-supplied plan, for repeated transforms
/// of one length.
pub fn normalized_dft_with(plan: &FftPlan, samples: &[f64]) -> Vec<Complex64> {
    let mut theta = plan.forward_real(samples);
    let c = offset_constant(&theta);
    let n = theta.len() as f64;
    theta[0] += Complex64::new(c * n, 0.0);
    theta
}

/// Windowed RMS of the DFT magnitudes over `2m + 1` neighbours, for
/// frequency indices `m..=n - m - 1`.
pub fn regularize(theta: &[Complex64], m: usize) -> Result<Vec<f64>> {
    let n = theta.len();
    if n == 0 || 2 * m > n - 1 {
        return Err(Error::Parameter(format!(
            "smoothing half-width {m} out of range for n = {n} (need 0 <= m <= (n-1)/2)"
        )));
    }
    if m == 0 {
        return Ok(theta.iter().map(|z| z.norm()).collect());
    }
    let power: Vec<f64> = theta.iter().map(|z| z.norm_sqr()).collect();
    let width = (2 * m + 1) as f64;
    // direct sums: a running sum would carry the rounding error of the
    // dominant theta_0 term into every later window
    Ok(power
        .windows(2 * m + 1)
        .map(|w| (w.iter().sum::<f64>() / width).sqrt())
        .collect())
}

/// Values sorted into nondecreasing order.
pub fn order_stats(smoothed: &[f64]) -> Vec<f64> {
    let mut mu = smoothed.to_vec();
    mu.sort_by(|a, b| a.total_cmp(b));
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let r = ((i * k) % n) as f64;
                        v * Complex64::from_polar(1.0, -2.0 * PI * r / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn rejects_bad_signals() {
        assert!(matches!(Signal::new(vec![1.0; 3], 1.0), Err(Error::Input(_))));
        assert!(matches!(Signal::new(vec![1.0; 8], 0.0), Err(Error::Input(_))));
        assert!(matches!(
            Signal::new(vec![1.0, f64::NAN, 0.0, 0.0], 1.0),
            Err(Error::Input(_))
        ));
        assert!(dft_samples(&[1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn constant_signal_concentrates_in_dc() {
        let s = Signal::new(vec![2.5; 10], 1.0).unwrap();
        let theta = dft(&s);
        assert!((theta[0].re - 25.0).abs() < 1e-12);
        for z in &theta[1..] {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn cosine_lands_in_its_bin() {
        let n = 64;
        let (k0, amp) = (5, 1.5);
        let x: Vec<f64> = (0..n)
            .map(|i| amp * (2.0 * PI * (k0 * i) as f64 / n as f64).cos())
            .collect();
        let theta = dft(&Signal::new(x, 1.0).unwrap());
        for (k, z) in theta.iter().enumerate() {
            if k == k0 || k == n - k0 {
                assert!((z.norm() - n as f64 * amp / 2.0).abs() < 1e-10);
            } else {
                assert!(z.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn offset_on_zero_mean_sine() {
        let n = 1024;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 7.0 * i as f64 / n as f64).sin()).collect();
        let out = enforce_offset(&Signal::new(x, 1.0).unwrap());
        let theta = dft(&out);
        let peak = theta[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(theta[0].norm() >= 2.0 * peak);
        assert!(theta[0].norm() >= n as f64);
    }

    #[test]
    fn offset_leaves_dominant_signal_alone() {
        let s = Signal::new(vec![10.0, 11.0, 9.0, 10.5, 10.2, 9.7], 1.0).unwrap();
        assert_eq!(enforce_offset(&s), s);
        // and a second application is a no-op
        let x: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
        let once = enforce_offset(&Signal::new(x, 1.0).unwrap());
        assert_eq!(enforce_offset(&once), once);
    }

    #[test]
    fn offset_on_alternating_signal() {
        let x: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        // oracle: before shifting the alias bin k = 4 holds everything
        let before = naive_dft(&x);
        assert!(before[0].norm() < 1e-12);
        assert!((before[4].norm() - 8.0).abs() < 1e-12);
        let out = enforce_offset(&Signal::new(x, 1.0).unwrap());
        let after = naive_dft(out.samples());
        assert!(after[0].norm() >= 2.0 * after[4].norm());
        assert!((after[4].norm() - 8.0).abs() < 1e-9);
    }

    #[test]
    fn normalized_dft_matches_shifted_transform() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
        let s = Signal::new(x, 1.0).unwrap();
        let a = normalized_dft(&s);
        let b = dft(&enforce_offset(&s));
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_signal_gets_positive_offset() {
        let s = Signal::new(vec![0.0; 8], 1.0).unwrap();
        let theta = dft(&enforce_offset(&s));
        assert!(theta[0].norm() > 0.0);
    }

    #[test]
    fn regularize_m0_is_magnitude() {
        let theta: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64, -(k as f64) / 3.0)).collect();
        let r = regularize(&theta, 0).unwrap();
        for (a, z) in r.iter().zip(&theta) {
            assert_eq!(*a, z.norm());
        }
    }

    #[test]
    fn regularize_constant_magnitude() {
        let theta: Vec<Complex64> = (0..20).map(|k| Complex64::from_polar(3.0, k as f64)).collect();
        for m in 0..=9 {
            let r = regularize(&theta, m).unwrap();
            assert_eq!(r.len(), 20 - 2 * m);
            for v in r {
                assert!((v - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn regularize_matches_window_loop() {
        let theta: Vec<Complex64> = (0..16)
            .map(|k| Complex64::new(((k * 37) % 13) as f64 - 6.0, ((k * 11) % 7) as f64))
            .collect();
        let m = 3;
        let r = regularize(&theta, m).unwrap();
        for k in m..16 - m {
            let mut acc = 0.0;
            for l in k - m..=k + m {
                acc += theta[l].norm_sqr();
            }
            let expect = (acc / 7.0).sqrt();
            assert!((r[k - m] - expect).abs() <= 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn regularize_range_check() {
        let theta = vec![Complex64::new(1.0, 0.0); 9];
        assert!(regularize(&theta, 4).is_ok());
        assert!(matches!(regularize(&theta, 5), Err(Error::Parameter(_))));
        let theta = vec![Complex64::new(1.0, 0.0); 10];
        assert!(regularize(&theta, 4).is_ok());
        assert!(regularize(&theta, 5).is_err());
    }

    #[test]
    fn order_stats_sorts() {
        assert_eq!(order_stats(&[3.0, 1.0, 2.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(order_stats(&[1.0, 2.0, 2.0, 5.0]), vec![1.0, 2.0, 2.0, 5.0]);
    }

    #[test]
    fn spectrum_indexing() {
        let s = Signal::new((0..20).map(|i| (i as f64 * 0.3).cos() + 4.0).collect(), 0.5).unwrap();
        let sp = AmplitudeSpectrum::from_signal(&s, 3).unwrap();
        assert_eq!(sp.n(), 20);
        assert_eq!(sp.last_index(), 16);
        assert_eq!(sp.mu.len(), 14);
        assert_eq!(sp.at(3), sp.smoothed[0]);
        assert!((sp.bin_hz() - 0.1).abs() < 1e-15);
    }
}
