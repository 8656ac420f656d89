//! Monte Carlo significance test for a high-frequency feature.
//!
//! Under the null hypothesis the signal is a smooth trend plus white
//! Gaussian noise. Replicates `trend + sigma * eps` are pushed through the
//! same spectrum and extraction pipeline as the observed signal, giving a
//! cloud of `(G, D)` pairs. The empirical probability `P(g, d)` is the
//! fraction of cloud points dominating `(g, d)` in both coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::features::{select_m_detailed, HFFeature, LevelScan, MSelection, SmoothingSchedule};
use crate::fft::FftPlan;
use crate::noise::estimate_sigma_signal;
use crate::rng;
use crate::spectrum::{
    normalized_dft_with, real_search_end, regularize, AmplitudeSpectrum, Signal,
};
use crate::trend::{l1_trend_filter, TrendEstimate, DEFAULT_TOL};

/// One simulated feature: gap in frequency bins and relative amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub g: usize,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendSource {
    /// The trend was supplied by the caller.
    Provided,
    /// l1 trend filter estimate.
    L1Filter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaSource {
    Provided,
    /// Median absolute finest-level wavelet coefficient.
    WaveletMad,
}

/// The simulated null features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCloud {
    pub points: Vec<CloudPoint>,
    pub seed: u64,
    pub m_used: usize,
    pub sigma: f64,
    /// Sampling interval of the replicates, for Hz conversion.
    pub dt: f64,
    pub trend_source: TrendSource,
    pub sigma_source: SigmaSource,
}

impl NullCloud {
    /// Wraps precomputed points. Fails on an empty cloud or negative coordinates.
    pub fn from_points(points: Vec<CloudPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("cloud must contain at least one point".into()));
        }
        if let Some(p) = points.iter().find(|p| !(p.d >= 0.0 && p.d.is_finite())) {
            return Err(Error::Input(format!("cloud amplitude {} must be finite and nonnegative", p.d)));
        }
        Ok(Self {
            points,
            seed: 0,
            m_used: 0,
            sigma: 0.0,
            dt: 1.0,
            trend_source: TrendSource::Provided,
            sigma_source: SigmaSource::Provided,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `P(g, d)` at every cloud point, in cloud order.
    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.points.len() as f64;
        dominance_counts(&self.points)
            .into_iter()
            .map(|c| c as f64 / n)
            .collect()
    }
}

/// Simulates `replicates` null signals `trend + sigma * eps` and extracts
/// their features at smoothing width `m`.
///
/// Replicate `k` (1-based) draws its noise from stream `k` of `seed`, so the
/// cloud does not depend on thread scheduling.
pub fn simulate_null(
    trend: &[f64],
    sigma: f64,
    replicates: usize,
    m: usize,
    seed: u64,
    dt: f64,
) -> Result<NullCloud> {
    let n = trend.len();
    if replicates == 0 {
        return Err(Error::Parameter("number of replicates must be at least 1".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Parameter(format!("noise level must be nonnegative, got {sigma}")));
    }
    if n < crate::spectrum::MIN_LEN {
        return Err(Error::Input(format!("trend needs at least {} samples", crate::spectrum::MIN_LEN)));
    }
    if 2 * m > n - 1 {
        return Err(Error::Parameter(format!(
            "smoothing half-width {m} out of range for n = {n}"
        )));
    }
    if let Some(i) = trend.iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("trend value {i} is not finite")));
    }
    let plan = FftPlan::new(n);
    let points = (1..=replicates as u64)
        .into_par_iter()
        .map(|k| {
            let eps = rng::gaussian(seed, k, n);
            let y: Vec<f64> = trend.iter().zip(&eps).map(|(t, e)| t + sigma * e).collect();
            let theta = normalized_dft_with(&plan, &y);
            let smoothed = regularize(&theta, m)?;
            let sp = AmplitudeSpectrum::from_smoothed(smoothed, m, dt)?
                .with_search_end(real_search_end(n, m))?;
            let f = LevelScan::new(&sp).extract();
            Ok(CloudPoint {
                g: f.g_index,
                d: f.d_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NullCloud {
        points,
        seed,
        m_used: m,
        sigma,
        dt,
        trend_source: TrendSource::Provided,
        sigma_source: SigmaSource::Provided,
    })
}

/// Fraction of cloud points with `G >= g` and `D >= d`.
pub fn empirical_p(cloud: &NullCloud, g: f64, d: f64) -> f64 {
    let hits = cloud
        .points
        .iter()
        .filter(|p| p.g as f64 >= g && p.d >= d)
        .count();
    hits as f64 / cloud.points.len() as f64
}

/// Number of points dominating each point (itself included), in
/// `O(N log N)`: sweep by decreasing `G`, counting `D` ranks in a Fenwick tree.
fn dominance_counts(points: &[CloudPoint]) -> Vec<usize> {
    let n = points.len();
    let mut ds: Vec<f64> = points.iter().map(|p| p.d).collect();
    ds.sort_by(f64::total_cmp);
    ds.dedup();
    // rank 0 = largest D, so a prefix sum counts D >= d
    let rank = |d: f64| ds.len() - 1 - ds.partition_point(|v| *v < d);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| points[j].g.cmp(&points[i].g));
    let mut tree = vec![0usize; ds.len() + 1];
    let mut counts = vec![0; n];
    let mut start = 0;
    while start < n {
        let g = points[order[start]].g;
        let end = start + order[start..].iter().take_while(|&&i| points[i].g == g).count();
        for &i in &order[start..end] {
            let mut r = rank(points[i].d) + 1;
            while r < tree.len() {
                tree[r] += 1;
                r += r & r.wrapping_neg();
            }
        }
        for &i in &order[start..end] {
            let mut r = rank(points[i].d) + 1;
            let mut c = 0;
            while r > 0 {
                c += tree[r];
                r -= r & r.wrapping_neg();
            }
            counts[i] = c;
        }
        start = end;
    }
    counts
}

/// Smallest `P` over the cloud points dominated by the statistic, with the
/// point attaining it. `(1, None)` when no point is dominated.
fn min_dominated(cloud: &NullCloud, probs: &[f64], stat: &HFFeature) -> (f64, Option<CloudPoint>) {
    cloud
        .points
        .iter()
        .zip(probs)
        .filter(|(p, _)| stat.g_index >= p.g && stat.d_value >= p.d)
        .fold((1.0, None), |(best, at), (p, &pr)| {
            if at.is_none() || pr < best {
                (pr, Some(*p))
            } else {
                (best, at)
            }
        })
}

/// Minimum of `P` over the cloud points dominated by the statistic; 1 when
/// none is dominated.
pub fn p_value_proxy(cloud: &NullCloud, stat: &HFFeature) -> f64 {
    min_dominated(cloud, &cloud.probabilities(), stat).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    RejectNull,
    AcceptNull,
}

/// Parameters and sources that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub replicates: usize,
    pub m_used: usize,
    pub sigma: f64,
    pub trend_source: TrendSource,
    pub sigma_source: SigmaSource,
    /// Trend filter penalty, when the trend was estimated.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: HFFeature,
    pub p_value_proxy: f64,
    /// Smallest attainable `P` over the cloud.
    pub alpha_star: f64,
    pub decision: Decision,
    /// Cloud point `(G, D)` whose `P` gave the p-value proxy.
    pub thresholds_hit: Option<CloudPoint>,
    pub provenance: Provenance,
}

/// Compares the statistic against the cloud. Rejects iff `p <= alpha*`.
pub fn decide(cloud: &NullCloud, stat: &HFFeature) -> Result<TestReport> {
    if cloud.is_empty() {
        return Err(Error::Parameter("cloud must contain at least one point".into()));
    }
    let probs = cloud.probabilities();
    let alpha_star = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let (p, hit) = min_dominated(cloud, &probs, stat);
    Ok(TestReport {
        statistic: *stat,
        p_value_proxy: p,
        alpha_star,
        decision: if p <= alpha_star {
            Decision::RejectNull
        } else {
            Decision::AcceptNull
        },
        thresholds_hit: hit,
        provenance: Provenance {
            seed: cloud.seed,
            replicates: cloud.len(),
            m_used: cloud.m_used,
            sigma: cloud.sigma,
            trend_source: cloud.trend_source,
            sigma_source: cloud.sigma_source,
            lambda: None,
        },
    })
}

/// How the smoothing width is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    /// Largest-jump rule over `m = 1..=K`, `K = ceil(sqrt(n))` when `None`.
    Auto { k: Option<usize> },
    Schedule(SmoothingSchedule),
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Trend filter penalty.
    pub lambda: f64,
    pub replicates: usize,
    pub seed: u64,
    pub smoothing: Smoothing,
    /// Relative duality-gap tolerance of the trend filter.
    pub trend_tol: f64,
    /// Replaces the l1 trend estimate.
    pub trend_override: Option<Vec<f64>>,
    /// Replaces the wavelet noise estimate.
    pub sigma_override: Option<f64>,
}

impl TestConfig {
    pub fn new(lambda: f64, replicates: usize, seed: u64) -> Self {
        Self {
            lambda,
            replicates,
            seed,
            smoothing: Smoothing::Auto { k: None },
            trend_tol: DEFAULT_TOL,
            trend_override: None,
            sigma_override: None,
        }
    }
}

/// Everything computed by [`run_full_test_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestRun {
    pub report: TestReport,
    pub cloud: NullCloud,
    /// Present when the width was selected from a schedule.
    pub selection: Option<MSelection>,
    /// Present when the trend was estimated.
    pub trend: Option<TrendEstimate>,
    pub trend_values: Vec<f64>,
}

/// Selects `m`, extracts the statistic, estimates trend and noise level,
/// simulates the null cloud at the same `m` and decides.
pub fn run_full_test(signal: &Signal, config: &TestConfig) -> Result<TestReport> {
    run_full_test_detailed(signal, config).map(|r| r.report)
}

pub fn run_full_test_detailed(signal: &Signal, config: &TestConfig) -> Result<TestRun> {
    let n = signal.len();
    let (m, selection) = match &config.smoothing {
        Smoothing::Fixed(m) => (*m, None),
        Smoothing::Auto { k } => {
            let schedule = match k {
                Some(k) => SmoothingSchedule::linear(n, *k),
                None => SmoothingSchedule::default_for(n),
            }
            .stage("select_m")?;
            let sel = select_m_detailed(signal, &schedule).stage("select_m")?;
            (sel.m, Some(sel))
        }
        Smoothing::Schedule(schedule) => {
            let sel = select_m_detailed(signal, schedule).stage("select_m")?;
            (sel.m, Some(sel))
        }
    };
    let spectrum = AmplitudeSpectrum::from_signal(signal, m).stage("statistic")?;
    let statistic = LevelScan::new(&spectrum).extract();

    let (trend_values, trend, trend_source) = match &config.trend_override {
        Some(t) => {
            if t.len() != n {
                return Err(Error::Input(format!(
                    "trend has {} samples, signal has {n}",
                    t.len()
                )))
                .stage("trend");
            }
            (t.clone(), None, TrendSource::Provided)
        }
        None => {
            let est = l1_trend_filter(signal, config.lambda, config.trend_tol).stage("trend")?;
            (est.values.clone(), Some(est), TrendSource::L1Filter)
        }
    };
    let (sigma, sigma_source) = match config.sigma_override {
        Some(s) => (s, SigmaSource::Provided),
        None => (
            estimate_sigma_signal(signal).stage("noise")?.sigma_hat,
            SigmaSource::WaveletMad,
        ),
    };

    let mut cloud = simulate_null(&trend_values, sigma, config.replicates, m, config.seed, signal.dt())
        .stage("simulate_null")?;
    cloud.trend_source = trend_source;
    cloud.sigma_source = sigma_source;
    let mut report = decide(&cloud, &statistic).stage("decide")?;
    report.provenance.lambda = trend.as_ref().map(|t| t.lambda);
    Ok(TestRun {
        report,
        cloud,
        selection,
        trend,
        trend_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(g: usize, d: f64) -> CloudPoint {
        CloudPoint { g, d }
    }

    fn feature(g: usize, d: f64) -> HFFeature {
        HFFeature {
            g_index: g,
            g_hz: g as f64,
            d_value: d,
            iota: d,
            a_index: 0,
            b_index: g,
            m_used: 1,
        }
    }

    fn brute(points: &[CloudPoint]) -> Vec<usize> {
        points
            .iter()
            .map(|p| points.iter().filter(|q| q.g >= p.g && q.d >= p.d).count())
            .collect()
    }

    #[test]
    fn counts_match_brute_force_with_ties() {
        let pts = vec![
            pt(3, 1.0),
            pt(3, 1.0),
            pt(1, 2.0),
            pt(5, 0.5),
            pt(3, 0.5),
            pt(0, 0.0),
            pt(5, 2.0),
            pt(1, 1.0),
        ];
        assert_eq!(dominance_counts(&pts), brute(&pts));
    }

    #[test]
    fn origin_has_probability_one() {
        let c = NullCloud::from_points(vec![pt(2, 0.3), pt(0, 0.0), pt(7, 1.2)]).unwrap();
        assert_eq!(empirical_p(&c, 0.0, 0.0), 1.0);
    }

    #[test]
    fn single_point_cloud() {
        let c = NullCloud::from_points(vec![pt(4, 0.7)]).unwrap();
        let r = decide(&c, &feature(1, 0.1)).unwrap();
        assert_eq!(r.alpha_star, 1.0);
        assert_eq!(r.p_value_proxy, 1.0);
        assert_eq!(r.thresholds_hit, None);
    }

    #[test]
    fn general_position_gives_one_over_n() {
        let pts: Vec<_> = (0..10).map(|i| pt(i, (10 - i) as f64 * 0.1)).collect();
        let c = NullCloud::from_points(pts).unwrap();
        let r = decide(&c, &feature(100, 100.0)).unwrap();
        assert_eq!(r.alpha_star, 0.1);
        assert_eq!(r.p_value_proxy, 0.1);
        assert_eq!(r.decision, Decision::RejectNull);
    }

    #[test]
    fn zero_statistic_accepts() {
        let c = NullCloud::from_points(vec![pt(2, 0.3), pt(5, 0.1), pt(1, 0.9)]).unwrap();
        let r = decide(&c, &feature(0, 0.0)).unwrap();
        assert_eq!(r.p_value_proxy, 1.0);
        assert_eq!(r.decision, Decision::AcceptNull);
    }

    #[test]
    fn empty_cloud_rejected() {
        assert!(NullCloud::from_points(vec![]).is_err());
    }

    #[test]
    fn noiseless_monotone_trend_gives_origin_cloud() {
        let trend: Vec<f64> = (0..64).map(|i| (-(i as f64) / 10.0).exp()).collect();
        let c = simulate_null(&trend, 0.0, 5, 2, 1, 1.0).unwrap();
        assert!(c.points.iter().all(|p| p.g == 0 && p.d == 0.0));
    }

    #[test]
    fn simulate_validates() {
        let trend = vec![0.0; 32];
        assert!(simulate_null(&trend, 1.0, 0, 1, 0, 1.0).is_err());
        assert!(simulate_null(&trend, -1.0, 3, 1, 0, 1.0).is_err());
        assert!(simulate_null(&trend, 1.0, 3, 16, 0, 1.0).is_err());
    }

    #[test]
    fn stage_labels_propagate() {
        let s = Signal::new((0..64).map(|i| (i as f64).sin()).collect(), 1.0).unwrap();
        let mut cfg = TestConfig::new(1.0, 4, 0);
        cfg.trend_override = Some(vec![0.0; 10]);
        let err = run_full_test(&s, &cfg).unwrap_err();
        assert!(err.to_string().starts_with("trend:"), "{err}");
        cfg.trend_override = None;
        cfg.smoothing = Smoothing::Fixed(40);
        let err = run_full_test(&s, &cfg).unwrap_err();
        assert!(err.to_string().starts_with("statistic:"), "{err}");
    }
}
