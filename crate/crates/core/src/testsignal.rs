//! Synthetic benchmark: a Lennard-Jones shaped trend spliced to an affine
//! ramp, a time-localised sine with a parabolic envelope, and Gaussian noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spectrum::Signal;

/// Length of the reference configuration.
pub const REFERENCE_LEN: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSignalParams {
    pub n: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Repulsive exponent.
    pub p: f64,
    /// Attractive exponent.
    pub q: f64,
    /// Last index of the affine ramp; the potential takes over after it.
    pub j_connect: usize,
    /// Oscillation window `[j0, j1]`.
    pub j0: usize,
    pub j1: usize,
    /// Oscillation amplitude.
    pub c_a: f64,
    /// Oscillation frequency in cycles per hour.
    pub c_f: f64,
    pub sigma: f64,
    /// Sample spacing in hours.
    pub dt_hours: f64,
    pub seed: u64,
}

impl Default for TestSignalParams {
    /// The reference configuration: 100 000 samples over 84 hours.
    fn default() -> Self {
        Self {
            n: REFERENCE_LEN,
            c1: 0.4,
            c2: 2.0,
            c3: 2.0,
            c4: 2.0,
            p: 6.0,
            q: 3.0,
            j_connect: 1890,
            j0: 1700,
            j1: 3400,
            c_a: 0.05,
            c_f: 10.0,
            sigma: 0.025,
            dt_hours: 8.4e-4,
            seed: 0,
        }
    }
}

impl TestSignalParams {
    /// The reference configuration resampled to `n` points over the same
    /// time span: window and splice indices scale with `n`, the spacing
    /// scales inversely.
    pub fn scaled(n: usize) -> Self {
        let base = Self::default();
        let ratio = n as f64 / REFERENCE_LEN as f64;
        let scale = |j: usize| ((j as f64 * ratio).round() as usize).max(1);
        Self {
            n,
            j_connect: scale(base.j_connect),
            j0: scale(base.j0),
            j1: scale(base.j1),
            dt_hours: base.dt_hours / ratio,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Parameter(msg));
        if self.n < crate::spectrum::MIN_LEN {
            return fail(format!("n = {} is too short", self.n));
        }
        if self.j_connect == 0 {
            return fail("splice index must be positive (the potential is undefined at 0)".into());
        }
        if self.j_connect + 1 >= self.n {
            return fail(format!("splice index {} must be below n - 1", self.j_connect));
        }
        if !(0 < self.j0 && self.j0 < self.j1 && self.j1 + 1 < self.n) {
            return fail(format!(
                "oscillation window must satisfy 0 < j0 < j1 < n - 1, got [{}, {}]",
                self.j0, self.j1
            ));
        }
        if !(self.p > self.q && self.q > 0.0) {
            return fail(format!("exponents must satisfy p > q > 0, got p = {}, q = {}", self.p, self.q));
        }
        if !(self.dt_hours.is_finite() && self.dt_hours > 0.0) {
            return fail(format!("sample spacing must be positive, got {}", self.dt_hours));
        }
        if !(self.c_a >= 0.0 && self.c_f >= 0.0 && self.sigma >= 0.0) {
            return fail("amplitude, frequency and noise level must be nonnegative".into());
        }
        Ok(())
    }

    /// Time of sample `i` in hours.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt_hours
    }

    /// Sampling interval in seconds.
    pub fn dt_seconds(&self) -> f64 {
        self.dt_hours * 3600.0
    }

    /// Record length in hours, `n dt`.
    pub fn duration_hours(&self) -> f64 {
        self.n as f64 * self.dt_hours
    }

    /// Expected DFT bin of the oscillation.
    pub fn oscillation_bin(&self) -> f64 {
        self.c_f * self.duration_hours()
    }

    /// `c1 [(c2/t)^p - c3 (c2/t)^q] + c4`.
    pub fn potential(&self, t: f64) -> f64 {
        let r = self.c2 / t;
        self.c1 * (r.powf(self.p) - self.c3 * r.powf(self.q)) + self.c4
    }
}

/// The trend: affine ramp on `0..=j`, potential afterwards. The potential is
/// evaluated at the sample time in hours.
pub fn lj_trend(params: &TestSignalParams) -> Result<Vec<f64>> {
    params.validate()?;
    let j = params.j_connect;
    let pj = params.potential(params.time(j));
    let pj1 = params.potential(params.time(j + 1));
    let slope = (pj1 - pj) / (j + 1) as f64;
    Ok((0..params.n)
        .map(|i| {
            if i <= j {
                slope * i as f64 + pj
            } else {
                params.potential(params.time(i))
            }
        })
        .collect())
}

/// Parabolic-envelope sine on `[j0, j1]`, zero elsewhere. The envelope
/// peaks at `c_a` in the middle of the window.
pub fn oscillation(params: &TestSignalParams) -> Result<Vec<f64>> {
    params.validate()?;
    let (j0, j1) = (params.j0 as f64, params.j1 as f64);
    let norm = 4.0 / ((j1 - j0) * (j1 - j0));
    Ok((0..params.n)
        .map(|i| {
            if i < params.j0 || i > params.j1 {
                return 0.0;
            }
            let x = i as f64;
            let phase = 2.0 * std::f64::consts::PI * params.c_f * params.time(i);
            params.c_a * (x - j0) * (j1 - x) * norm * phase.sin()
        })
        .collect())
}

/// Trend plus oscillation, without noise.
pub fn clean(params: &TestSignalParams) -> Result<Vec<f64>> {
    let t = lj_trend(params)?;
    let o = oscillation(params)?;
    Ok(t.iter().zip(&o).map(|(a, b)| a + b).collect())
}

/// `T + O + sigma xi`, sampled every `dt_hours` (reported in seconds).
pub fn generate(params: &TestSignalParams) -> Result<Signal> {
    let mut s = clean(params)?;
    if params.sigma > 0.0 {
        let xi = rng::gaussian(params.seed, rng::SIGNAL_STREAM, params.n);
        for (v, e) in s.iter_mut().zip(xi) {
            *v += params.sigma * e;
        }
    }
    Ok(Signal::new(s, params.dt_seconds())?.with_label("synthetic"))
}
