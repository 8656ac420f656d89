//! Extraction of the high-frequency feature `(G, D)` from a regularised
//! amplitude spectrum, and the data-driven choice of the smoothing width.
//!
//! For an energy level `x` the scan works with three index functions over
//! the smoothed spectrum `s_k`, `m <= k <= n - m - 1`:
//!
//! * `a(x)`: first index with `s_k <= x`, where the search leaves the
//!   low-frequency range;
//! * `b(x)`: last index attaining the maximum of `s` over `a(x)..`;
//! * `d(x) = x - min_{m <= k <= b(x)} s_k`.
//!
//! Levels are the order statistics of `s`. A level belongs to the candidate
//! set when it is attained at `b(x)`, and to the spike set when additionally
//! `b(x) > a(x)`. The reported feature is the spike level with the largest
//! `d`, ties going to the higher level.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{
    normalized_dft, order_stats, real_search_end, regularize, AmplitudeSpectrum, Signal,
};

/// The `(G, D)` pair and the indices supporting it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HFFeature {
    /// Frequency-bin gap `b - a`.
    pub g_index: usize,
    /// Gap in Hz, `g_index / (n dt)`.
    pub g_hz: f64,
    /// Relative amplitude of the selected spike.
    pub d_value: f64,
    /// Selected energy level; zero when there is no spike.
    pub iota: f64,
    pub a_index: usize,
    pub b_index: usize,
    pub m_used: usize,
}

impl HFFeature {
    fn empty(m: usize) -> Self {
        Self {
            g_index: 0,
            g_hz: 0.0,
            d_value: 0.0,
            iota: 0.0,
            a_index: m,
            b_index: m,
            m_used: m,
        }
    }
}

/// Candidate levels and spike levels, in decreasing order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSets {
    pub set_a: Vec<f64>,
    pub set_s: Vec<f64>,
}

/// Precomputed prefix minima and suffix arg-maxima of a smoothed spectrum,
/// answering `a`, `b` and `d` queries in logarithmic time.
#[derive(Debug, Clone)]
pub struct LevelScan<'a> {
    spectrum: &'a AmplitudeSpectrum,
    /// Searched values, `smoothed[..=search_end - m]`.
    s: &'a [f64],
    /// Distinct searched values, highest first.
    levels: Vec<f64>,
    /// `prefix_min[i] = min(s[0..=i])`, nonincreasing.
    prefix_min: Vec<f64>,
    /// `suffix_argmax[i]` = largest `j >= i` with `s[j] = max(s[i..])`.
    suffix_argmax: Vec<usize>,
}

impl<'a> LevelScan<'a> {
    pub fn new(spectrum: &'a AmplitudeSpectrum) -> Self {
        let s = spectrum.searched();
        let len = s.len();
        let mut levels = if len == spectrum.smoothed.len() {
            spectrum.mu.clone()
        } else {
            order_stats(s)
        };
        levels.reverse();
        levels.dedup();
        let mut prefix_min = Vec::with_capacity(len);
        let mut run = f64::INFINITY;
        for &v in s {
            run = run.min(v);
            prefix_min.push(run);
        }
        let mut suffix_argmax = vec![0; len];
        let mut best = len - 1;
        for i in (0..len).rev() {
            // strict comparison keeps the later index on ties
            if s[i] > s[best] {
                best = i;
            }
            suffix_argmax[i] = best;
        }
        Self {
            spectrum,
            s,
            levels,
            prefix_min,
            suffix_argmax,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        let min = *self.prefix_min.last().expect("nonempty spectrum");
        if x < min || x.is_nan() {
            return Err(Error::Domain { level: x, min });
        }
        Ok(())
    }

    // offsets into `smoothed`; callers add `m` for frequency indices
    fn a_offset(&self, x: f64) -> usize {
        self.prefix_min.partition_point(|&v| v > x)
    }

    fn b_offset(&self, x: f64) -> usize {
        self.suffix_argmax[self.a_offset(x)]
    }

    fn d_at(&self, x: f64, b_off: usize) -> f64 {
        x - self.prefix_min[b_off]
    }

    pub fn a(&self, x: f64) -> Result<usize> {
        self.check(x)?;
        Ok(self.a_offset(x) + self.spectrum.m)
    }

    pub fn b(&self, x: f64) -> Result<usize> {
        self.check(x)?;
        Ok(self.b_offset(x) + self.spectrum.m)
    }

    pub fn d(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.d_at(x, self.b_offset(x)))
    }

    pub fn candidate_sets(&self) -> CandidateSets {
        let s = self.s;
        let mut sets = CandidateSets::default();
        for &x in &self.levels {
            let a = self.a_offset(x);
            let b = self.suffix_argmax[a];
            if s[b] == x {
                sets.set_a.push(x);
                if b > a {
                    sets.set_s.push(x);
                }
            }
        }
        sets
    }

    pub fn extract(&self) -> HFFeature {
        let s = self.s;
        let m = self.spectrum.m;
        // (level, d, a, b) of the best spike so far; levels arrive in
        // decreasing order, so a strict `>` keeps the higher level on ties
        let mut best: Option<(f64, f64, usize, usize)> = None;
        for &x in &self.levels {
            let a = self.a_offset(x);
            let b = self.suffix_argmax[a];
            if s[b] != x || b <= a {
                continue;
            }
            let d = self.d_at(x, b);
            if best.is_none_or(|(_, bd, _, _)| d > bd) {
                best = Some((x, d, a, b));
            }
        }
        match best {
            Some((iota, d, a, b)) if iota > 0.0 => {
                let g = b - a;
                HFFeature {
                    g_index: g,
                    g_hz: self.spectrum.bins_to_hz(g as f64),
                    d_value: d,
                    iota,
                    a_index: a + m,
                    b_index: b + m,
                    m_used: m,
                }
            }
            _ => HFFeature::empty(m),
        }
    }
}

/// First frequency index whose smoothed value is at most `x`.
pub fn a_index(x: f64, spectrum: &AmplitudeSpectrum) -> Result<usize> {
    LevelScan::new(spectrum).a(x)
}

/// Last index of the maximum of the smoothed spectrum over `a(x)..`.
pub fn b_index(x: f64, spectrum: &AmplitudeSpectrum) -> Result<usize> {
    LevelScan::new(spectrum).b(x)
}

/// `x` minus the smallest smoothed value up to `b(x)`.
pub fn d_value(x: f64, spectrum: &AmplitudeSpectrum) -> Result<f64> {
    LevelScan::new(spectrum).d(x)
}

pub fn candidate_sets(spectrum: &AmplitudeSpectrum) -> CandidateSets {
    LevelScan::new(spectrum).candidate_sets()
}

/// The high-frequency feature of the spectrum.
pub fn extract(spectrum: &AmplitudeSpectrum) -> HFFeature {
    LevelScan::new(spectrum).extract()
}

/// Strictly increasing smoothing widths `1 = m_1 < ... < m_K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmoothingSchedule {
    m_seq: Vec<usize>,
}

impl SmoothingSchedule {
    pub fn new(m_seq: Vec<usize>) -> Result<Self> {
        if m_seq.first() != Some(&1) {
            return Err(Error::Parameter("smoothing schedule must start at 1".into()));
        }
        if m_seq.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("smoothing schedule must be strictly increasing".into()));
        }
        Ok(Self { m_seq })
    }

    /// `m_i = i` for `i = 1..=k`, with `k` capped at `(n - 1) / 2`.
    pub fn linear(n: usize, k: usize) -> Result<Self> {
        let k = k.min(n.saturating_sub(1) / 2);
        Self::new((1..=k).collect())
    }

    /// The square-root rule: `K = ceil(sqrt(n))`.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::linear(n, (n as f64).sqrt().ceil() as usize)
    }

    pub fn m_seq(&self) -> &[usize] {
        &self.m_seq
    }

    pub fn k(&self) -> usize {
        self.m_seq.len()
    }
}

/// Outcome of the smoothing-width search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSelection {
    pub m: usize,
    /// `G` at each schedule entry.
    pub g_values: Vec<usize>,
}

/// Picks the schedule entry where `G` jumps the most between consecutive
/// widths.
pub fn select_m(signal: &Signal, schedule: &SmoothingSchedule) -> Result<usize> {
    select_m_detailed(signal, schedule).map(|s| s.m)
}

pub fn select_m_detailed(signal: &Signal, schedule: &SmoothingSchedule) -> Result<MSelection> {
    if schedule.k() < 2 {
        return Err(Error::Parameter(format!(
            "smoothing schedule needs at least 2 entries, got {}",
            schedule.k()
        )));
    }
    let n = signal.len();
    let m_max = *schedule.m_seq.last().unwrap();
    if 2 * m_max > n - 1 {
        return Err(Error::Parameter(format!(
            "largest smoothing width {m_max} exceeds (n-1)/2 for n = {n}"
        )));
    }
    let theta = normalized_dft(signal);
    let g_values = schedule
        .m_seq
        .par_iter()
        .map(|&m| {
            let smoothed = regularize(&theta, m)?;
            let sp = AmplitudeSpectrum::from_smoothed(smoothed, m, signal.dt())?
                .with_search_end(real_search_end(n, m))?;
            Ok(extract(&sp).g_index)
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(MSelection {
        m: pick_from_gaps(schedule.m_seq(), &g_values),
        g_values,
    })
}

/// Given `G` at every schedule entry, returns the selected width.
pub fn pick_from_gaps(m_seq: &[usize], g_values: &[usize]) -> usize {
    let mut star = 1;
    let mut jump = 0usize;
    for i in 1..g_values.len() {
        let diff = g_values[i].abs_diff(g_values[i - 1]);
        if diff > jump {
            jump = diff;
            star = i;
        }
    }
    if g_values[star] > g_values[star - 1] {
        m_seq[star]
    } else {
        m_seq[star - 1]
    }
}
