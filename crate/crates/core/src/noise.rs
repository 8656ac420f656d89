//! Noise level estimation from finest-scale wavelet coefficients, and
//! VisuShrink denoising.
//!
//! The transform is the periodised orthogonal discrete wavelet transform with
//! the 16-tap least-asymmetric (Symmlet 8) filter, decomposed all the way down
//! to one scaling coefficient. Coefficients are stored dyadically: index 0 is
//! the scaling coefficient and `w[j][k]` lives at `2^j + k`, for
//! `j = 0..=J` with `n = 2^(J+1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Signal;

/// Standard normal third quartile, `Phi^{-1}(3/4)`.
pub const NORMAL_Q75: f64 = 0.674_489_750_196_081_7;

/// Default lowest resolution level that is thresholded.
pub const DEFAULT_J0: usize = 4;

/// Smallest transform length.
pub const MIN_LEN: usize = 8;

/// Symmlet 8 scaling filter.
const SYMMLET8: [f64; 16] = [
    0.001_889_950_332_759_460_9,
    -0.000_302_920_514_721_366_8,
    -0.014_952_258_337_048_23,
    0.003_808_752_013_890_615,
    0.049_137_179_673_607_506,
    -0.027_219_029_917_056_003,
    -0.051_945_838_107_709_04,
    0.364_441_894_835_331_4,
    0.777_185_751_700_523_5,
    0.481_359_651_258_372_2,
    -0.061_273_359_067_658_524,
    -0.143_294_238_350_809_7,
    0.007_607_487_324_917_605,
    0.031_695_087_811_492_98,
    -0.000_542_132_331_791_148_1,
    -0.003_382_415_951_006_125_6,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveletFilter {
    /// Least-asymmetric, 16 taps.
    Symmlet8,
}

impl WaveletFilter {
    pub fn lowpass(self) -> &'static [f64] {
        match self {
            WaveletFilter::Symmlet8 => &SYMMLET8,
        }
    }

    /// Quadrature mirror `g[l] = (-1)^l h[L-1-l]`.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let len = h.len();
        (0..len)
            .map(|l| if l % 2 == 0 { h[len - 1 - l] } else { -h[len - 1 - l] })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub coeffs: Vec<f64>,
    /// Finest level; `coeffs.len() == 2^(J+1)`.
    pub finest_level: usize,
    pub filter: WaveletFilter,
    /// Length before reflection padding.
    pub original_len: usize,
}

impl WaveletDecomposition {
    pub fn padded_len(&self) -> usize {
        self.coeffs.len()
    }

    /// Detail coefficients at level `j`.
    pub fn level(&self, j: usize) -> &[f64] {
        &self.coeffs[1 << j..2 << j]
    }

    /// Finest-level coefficients whose filter support lies inside the
    /// unpadded data. All of them when no padding took place.
    pub fn interior_finest(&self) -> &[f64] {
        let finest = self.level(self.finest_level);
        if self.original_len == self.padded_len() {
            return finest;
        }
        let taps = self.filter.lowpass().len();
        // coefficient k reads samples 2k ..= 2k + taps - 1
        let count = if self.original_len >= taps {
            ((self.original_len - taps) / 2 + 1).min(finest.len())
        } else {
            0
        };
        if count == 0 {
            finest
        } else {
            &finest[..count]
        }
    }

    /// Inverse transform, truncated to the original length.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = inverse_dwt(&self.coeffs, self.filter);
        out.truncate(self.original_len);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    pub sigma_hat: f64,
    /// Transform length after padding.
    pub n_used: usize,
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let len = x.len();
    let half = len / 2;
    let mut lo = vec![0.0; half];
    let mut hi = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (l, (hl, gl)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + l) % len];
            a += hl * v;
            d += gl * v;
        }
        lo[k] = a;
        hi[k] = d;
    }
    (lo, hi)
}

fn synthesis_step(lo: &[f64], hi: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let len = 2 * lo.len();
    let mut x = vec![0.0; len];
    for k in 0..lo.len() {
        for (l, (hl, gl)) in h.iter().zip(g).enumerate() {
            x[(2 * k + l) % len] += hl * lo[k] + gl * hi[k];
        }
    }
    x
}

/// Forward periodised transform of a power-of-two length slice.
pub fn forward_dwt(x: &[f64], filter: WaveletFilter) -> Vec<f64> {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let h = filter.lowpass();
    let g = filter.highpass();
    let mut out = vec![0.0; n];
    let mut approx = x.to_vec();
    while approx.len() > 1 {
        let (lo, hi) = analysis_step(&approx, h, &g);
        let half = lo.len();
        out[half..2 * half].copy_from_slice(&hi);
        approx = lo;
    }
    out[0] = approx[0];
    out
}

/// Inverse of [`forward_dwt`].
pub fn inverse_dwt(coeffs: &[f64], filter: WaveletFilter) -> Vec<f64> {
    let n = coeffs.len();
    let h = filter.lowpass();
    let g = filter.highpass();
    let mut approx = vec![coeffs[0]];
    let mut half = 1;
    while half < n {
        approx = synthesis_step(&approx, &coeffs[half..2 * half], h, &g);
        half *= 2;
    }
    approx
}

/// Pads by half-sample symmetric reflection up to the next power of two.
pub fn reflect_pad(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let target = n.next_power_of_two();
    let mut out = x.to_vec();
    let mut k = 0;
    while out.len() < target {
        // mirror back and forth for very short inputs
        let period = 2 * n;
        let r = k % period;
        let idx = if r < n { n - 1 - r } else { r - n };
        out.push(x[idx]);
        k += 1;
    }
    out
}

pub fn wavelet_transform(signal: &Signal) -> Result<WaveletDecomposition> {
    wavelet_transform_samples(signal.samples())
}

pub fn wavelet_transform_samples(x: &[f64]) -> Result<WaveletDecomposition> {
    if x.len() < MIN_LEN {
        return Err(Error::Input(format!(
            "wavelet transform needs at least {MIN_LEN} samples, got {}",
            x.len()
        )));
    }
    let padded = reflect_pad(x);
    let filter = WaveletFilter::Symmlet8;
    Ok(WaveletDecomposition {
        coeffs: forward_dwt(&padded, filter),
        finest_level: padded.len().trailing_zeros() as usize - 1,
        filter,
        original_len: x.len(),
    })
}

/// Median, averaging the two central order statistics for even counts.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// `median(|w_J|) / Phi^{-1}(3/4)` over the finest-level coefficients.
pub fn estimate_sigma(decomp: &WaveletDecomposition) -> NoiseEstimate {
    let abs: Vec<f64> = decomp.interior_finest().iter().map(|w| w.abs()).collect();
    NoiseEstimate {
        sigma_hat: median(&abs) / NORMAL_Q75,
        n_used: decomp.padded_len(),
    }
}

/// Convenience wrapper: transform then estimate.
pub fn estimate_sigma_signal(signal: &Signal) -> Result<NoiseEstimate> {
    Ok(estimate_sigma(&wavelet_transform(signal)?))
}

fn soft(w: f64, threshold: f64) -> f64 {
    let mag = (w.abs() - threshold).max(0.0);
    mag.copysign(w)
}

/// Soft-thresholds levels `j0..=J` at `threshold` and reconstructs.
pub fn shrink(decomp: &WaveletDecomposition, j0: usize, threshold: f64) -> Result<Vec<f64>> {
    if j0 > decomp.finest_level {
        return Err(Error::Parameter(format!(
            "cutoff level {j0} exceeds finest level {}",
            decomp.finest_level
        )));
    }
    let mut shrunk = decomp.clone();
    for w in &mut shrunk.coeffs[1 << j0..] {
        *w = soft(*w, threshold);
    }
    Ok(shrunk.reconstruct())
}

/// VisuShrink: universal threshold `sigma_hat sqrt(2 ln n)` on levels `j0..=J`.
pub fn visushrink(signal: &Signal, j0: usize) -> Result<Signal> {
    let decomp = wavelet_transform(signal)?;
    let est = estimate_sigma(&decomp);
    let threshold = est.sigma_hat * (2.0 * (est.n_used as f64).ln()).sqrt();
    Ok(signal.with_samples(shrink(&decomp, j0, threshold)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_is_orthonormal() {
        let h = WaveletFilter::Symmlet8.lowpass();
        let sum: f64 = h.iter().sum();
        assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12);
        for shift in (0..16).step_by(2) {
            let c: f64 = (0..16 - shift).map(|l| h[l] * h[l + shift]).sum();
            let expect = if shift == 0 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-12, "shift {shift}: {c}");
        }
    }

    #[test]
    fn highpass_has_vanishing_moments() {
        let g = WaveletFilter::Symmlet8.highpass();
        for p in 0..8 {
            let (mut moment, mut scale) = (0.0, 0.0);
            for (k, gk) in g.iter().enumerate() {
                let t = (k as f64).powi(p) * gk;
                moment += t;
                scale += t.abs();
            }
            assert!(moment.abs() <= 1e-9 * scale, "moment {p}: {moment}");
        }
    }

    #[test]
    fn zero_signal_zero_coefficients() {
        let d = wavelet_transform_samples(&[0.0; 64]).unwrap();
        assert!(d.coeffs.iter().all(|w| *w == 0.0));
        assert_eq!(d.finest_level, 5);
        assert_eq!(d.level(5).len(), 32);
    }

    #[test]
    fn short_input_rejected() {
        assert!(matches!(wavelet_transform_samples(&[1.0; 7]), Err(Error::Input(_))));
    }

    #[test]
    fn constant_is_annihilated_at_fine_levels() {
        // the tabulated filter is orthonormal to about 1e-13
        let d = wavelet_transform_samples(&[3.0; 128]).unwrap();
        for j in 0..=d.finest_level {
            assert!(d.level(j).iter().all(|w| w.abs() < 1e-9));
        }
    }

    #[test]
    fn roundtrip_tiny_lengths() {
        for n in [8usize, 16, 32] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 5 + 3) % 7) as f64 - 2.5).collect();
            let back = inverse_dwt(&forward_dwt(&x, WaveletFilter::Symmlet8), WaveletFilter::Symmlet8);
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reflection_padding() {
        assert_eq!(reflect_pad(&[1.0, 2.0, 3.0, 4.0, 5.0]), vec![1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 4.0, 3.0]);
        assert_eq!(reflect_pad(&[1.0, 2.0]).len(), 2);
        let d = wavelet_transform_samples(&(0..100).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        assert_eq!(d.padded_len(), 128);
        assert_eq!(d.reconstruct().len(), 100);
        // coefficients 0..=42 read samples up to 2*42 + 15 = 99
        assert_eq!(d.interior_finest().len(), 43);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn equal_finest_coefficients() {
        let mut coeffs = vec![0.0; 32];
        for w in &mut coeffs[16..] {
            *w = -0.7;
        }
        let d = WaveletDecomposition {
            coeffs,
            finest_level: 4,
            filter: WaveletFilter::Symmlet8,
            original_len: 32,
        };
        let est = estimate_sigma(&d);
        assert!((est.sigma_hat - 0.7 / NORMAL_Q75).abs() < 1e-15);
    }

    #[test]
    fn zero_threshold_is_identity() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).sin() * 2.0 + 1.0).collect();
        let d = wavelet_transform_samples(&x).unwrap();
        let out = shrink(&d, 0, 0.0).unwrap();
        for (a, b) in out.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(shrink(&d, 6, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn soft_threshold_never_grows() {
        for &w in &[-3.0, -0.2, 0.0, 0.1, 5.0] {
            for &t in &[0.0, 0.15, 1.0] {
                assert!(soft(w, t).abs() <= w.abs());
                assert!(soft(w, t) * w >= 0.0);
            }
        }
    }
}
