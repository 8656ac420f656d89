//! l1 trend filtering.
//!
//! Solves
//!
//! ```text
//! minimize  1/2 ||y - x||^2 + lambda ||D x||_1
//! ```
//!
//! where `D` is the `(n-2) x n` second-difference operator, with a
//! primal-dual interior-point method on the box-constrained dual
//!
//! ```text
//! minimize  1/2 z' D D' z - y' D' z   subject to  -lambda <= z <= lambda
//! ```
//!
//! and recovers the primal point as `x = y - D' z`. Each Newton step solves a
//! pentadiagonal system, so an iteration is `O(n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Signal;

/// Relative duality-gap tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 200;
/// Knot threshold, relative to `max |y|`.
pub const KINK_TOL: f64 = 1e-6;

const ALPHA: f64 = 0.01;
const BETA: f64 = 0.5;
const MU: f64 = 2.0;
const MAX_LS_ITER: usize = 20;

/// Named regularisation weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaPreset {
    /// Light-scattering recordings.
    Sls31,
    /// Synthetic benchmark signal.
    Synth301,
}

impl LambdaPreset {
    pub fn value(self) -> f64 {
        match self {
            LambdaPreset::Sls31 => 31.0,
            LambdaPreset::Synth301 => 301.0,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "sls31" => Some(Self::Sls31),
            "synth301" => Some(Self::Synth301),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEstimate {
    pub values: Vec<f64>,
    pub lambda: f64,
    /// Interior indices `i` where `|x[i-1] - 2 x[i] + x[i+1]|` exceeds the kink tolerance.
    pub knots: Vec<usize>,
    pub objective: f64,
    pub dual_gap: f64,
    pub iterations: usize,
}

/// `1/2 ||y - x||^2 + lambda ||D x||_1`.
pub fn objective(y: &[f64], x: &[f64], lambda: f64) -> f64 {
    let fit: f64 = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * 0.5;
    fit + lambda * second_diff(x).iter().map(|v| v.abs()).sum::<f64>()
}

/// `D x`, length `n - 2`.
pub fn second_diff(x: &[f64]) -> Vec<f64> {
    x.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
}
/// `y - D' z`, summed with error compensation. `D' z` is of order lambda
/// while the result is of order `y`; plain summation leaves errors of
/// `eps * lambda` in every entry, which the duality gap multiplies by
/// `lambda n`.
fn primal_from_dual(y: &[f64], z: &[f64]) -> Vec<f64> {
    let m = z.len();
    let at = |k: isize| if k >= 0 && (k as usize) < m { z[k as usize] } else { 0.0 };
    (0..y.len())
        .map(|j| {
            let j = j as isize;
            neumaier_sum(&[y[j as usize], -at(j), 2.0 * at(j - 1), -at(j - 2)])
        })
        .collect()
}

fn neumaier_sum(terms: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for &v in terms {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Least-squares affine fit `alpha i + beta`.
pub fn affine_fit(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    let mean_i = (n - 1.0) / 2.0;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxy += di * (v - mean_y);
        sxx += di * di;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (0..y.len())
        .map(|i| mean_y + slope * (i as f64 - mean_i))
        .collect()
}

/// Smallest `lambda` for which the solution is the affine fit:
/// `|| (D D')^{-1} D y ||_inf`.
///
/// `z = (D D')^{-1} D y` is the unique solution of `D' z = r` with `r` the
/// affine-fit residual, and that triangular recurrence is a double running
/// sum of `r`. This avoids factoring `D D'`, whose condition number grows
/// like `n^4`.
pub fn lambda_max(signal: &Signal) -> f64 {
    lambda_max_samples(signal.samples())
}

pub fn lambda_max_samples(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 0.0;
    }
    let fit = affine_fit(y);
    let r: Vec<f64> = y.iter().zip(&fit).map(|(v, f)| v - f).collect();
    dual_from_residual(&r).iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// The `z` (length `n - 2`) with `D' z = r`, by forward substitution: a
/// double running sum. Exact only when `r` is orthogonal to affine sequences.
fn dual_from_residual(r: &[f64]) -> Vec<f64> {
    let mut running = 0.0;
    let mut z = 0.0;
    r[..r.len() - 2]
        .iter()
        .map(|v| {
            running += v;
            z += running;
            z
        })
        .collect()
}

/// Exact solution for a guessed knot set: the least-squares fit, over
/// piecewise-linear sequences kinked only at `active` (second-difference
/// indices), of the penalised objective with the kink signs fixed to
/// `signs`. Returns the primal and the dual recovered from its residual.
fn fit_on_knots(y: &[f64], active: &[usize], signs: &[f64], lambda: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    // hat-function nodes; second-difference index k kinks sample k + 1
    let mut nodes = Vec::with_capacity(active.len() + 2);
    nodes.push(0);
    nodes.extend(active.iter().map(|k| k + 1));
    nodes.push(n - 1);
    let nb = nodes.len();
    let len: Vec<f64> = nodes.windows(2).map(|w| (w[1] - w[0]) as f64).collect();

    // tridiagonal Gram matrix and right-hand side
    let mut diag = vec![0.0; nb];
    let mut off = vec![0.0; nb - 1];
    let mut rhs = vec![0.0; nb];
    for j in 0..nb - 1 {
        for i in nodes[j]..nodes[j + 1] {
            let right = (i - nodes[j]) as f64 / len[j];
            let left = 1.0 - right;
            diag[j] += left * left;
            diag[j + 1] += right * right;
            off[j] += left * right;
            rhs[j] += left * y[i];
            rhs[j + 1] += right * y[i];
        }
    }
    diag[nb - 1] += 1.0;
    rhs[nb - 1] += y[n - 1];
    for (a, &s) in signs.iter().enumerate() {
        let j = a + 1;
        rhs[j - 1] -= lambda * s / len[j - 1];
        rhs[j] += lambda * s * (1.0 / len[j - 1] + 1.0 / len[j]);
        rhs[j + 1] -= lambda * s / len[j];
    }

    // Thomas algorithm; the Gram matrix is symmetric positive definite
    let mut c = rhs;
    let mut d = diag;
    for j in 1..nb {
        let w = off[j - 1] / d[j - 1];
        d[j] -= w * off[j - 1];
        c[j] -= w * c[j - 1];
    }
    c[nb - 1] /= d[nb - 1];
    for j in (0..nb - 1).rev() {
        c[j] = (c[j] - off[j] * c[j + 1]) / d[j];
    }

    let mut x = vec![0.0; n];
    for j in 0..nb - 1 {
        for i in nodes[j]..nodes[j + 1] {
            let right = (i - nodes[j]) as f64 / len[j];
            x[i] = (1.0 - right) * c[j] + right * c[j + 1];
        }
    }
    x[n - 1] = c[nb - 1];
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let r: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
    Some((x, dual_from_residual(&r)))
}

/// Tries to turn an interior-point iterate into an exact optimum by
/// guessing the knot set from the near-saturated dual entries. Accepted
/// only if the result satisfies the optimality conditions.
fn polish(y: &[f64], z: &[f64], lambda: f64) -> Option<(Vec<f64>, f64)> {
    for slack in [1e-3, 1e-6, 1e-9, 1e-12] {
        let active: Vec<usize> = (0..z.len()).filter(|&k| z[k].abs() >= lambda * (1.0 - slack)).collect();
        let signs: Vec<f64> = active.iter().map(|&k| z[k].signum()).collect();
        let Some((x, zp)) = fit_on_knots(y, &active, &signs, lambda) else {
            continue;
        };
        // rounding in the running sums can overshoot the box slightly; a
        // wrong knot set overshoots by orders of magnitude more
        if zp.iter().any(|v| v.abs() > lambda * (1.0 + 1e-6)) {
            continue;
        }
        let u = second_diff(&x);
        let scale = u.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        if active.iter().zip(&signs).any(|(&k, s)| u[k] * s < -1e-9 * scale) {
            continue;
        }
        let zc: Vec<f64> = zp.iter().map(|v| v.clamp(-lambda, lambda)).collect();
        // x is not exactly y - D'z here; the mismatch e adds |e|^2 / 2
        let mismatch: f64 = primal_from_dual(y, &zc)
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let gap = gap_at(&x, &zc, lambda) + 0.5 * mismatch;
        return Some((x, gap));
    }
    None
}

/// Indices where the second difference of `x` exceeds `threshold`.
pub fn knots(x: &[f64], threshold: f64) -> Vec<usize> {
    second_diff(x)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Symmetric positive-definite pentadiagonal system, factored as `L D L'`.
#[derive(Debug, Clone)]
pub(crate) struct Penta {
    d: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl Penta {
    /// `diag[i] = A[i][i]`, `off1[i] = A[i][i+1]`, `off2[i] = A[i][i+2]`.
    pub(crate) fn factor(diag: &[f64], off1: &[f64], off2: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut d = vec![0.0; m];
        let mut l1 = vec![0.0; m];
        let mut l2 = vec![0.0; m];
        for i in 0..m {
            if i >= 2 {
                l2[i] = off2[i - 2] / d[i - 2];
            }
            if i >= 1 {
                let mut v = off1[i - 1];
                if i >= 2 {
                    v -= l2[i] * l1[i - 1] * d[i - 2];
                }
                l1[i] = v / d[i - 1];
            }
            let mut di = diag[i];
            if i >= 1 {
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if i >= 2 {
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if !(di > 0.0) || !di.is_finite() {
                return Err(Error::Internal(format!("pentadiagonal pivot {i} is {di}")));
            }
            d[i] = di;
        }
        Ok(Self { d, l1, l2 })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let m = self.d.len();
        let mut w = rhs.to_vec();
        for i in 0..m {
            if i >= 1 {
                w[i] -= self.l1[i] * w[i - 1];
            }
            if i >= 2 {
                w[i] -= self.l2[i] * w[i - 2];
            }
        }
        for i in 0..m {
            w[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            if i + 1 < m {
                w[i] -= self.l1[i + 1] * w[i + 1];
            }
            if i + 2 < m {
                w[i] -= self.l2[i + 2] * w[i + 2];
            }
        }
        w
    }
}

/// `D D' z` for the constant-coefficient band `(1, -4, 6, -4, 1)`.
fn ddt_mul(z: &[f64]) -> Vec<f64> {
    let m = z.len();
    (0..m)
        .map(|i| {
            let mut v = 6.0 * z[i];
            if i >= 1 {
                v -= 4.0 * z[i - 1];
            }
            if i + 1 < m {
                v -= 4.0 * z[i + 1];
            }
            if i >= 2 {
                v += z[i - 2];
            }
            if i + 2 < m {
                v += z[i + 2];
            }
            v
        })
        .collect()
}

fn norm2(parts: &[&[f64]]) -> f64 {
    parts
        .iter()
        .flat_map(|p| p.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Duality gap between `x` and dual point `z`, in the cancellation-free
/// form `sum_i (lambda |u_i| - z_i u_i)` with `u = D x`. Exact when
/// `x = y - D' z`.
fn gap_at(x: &[f64], z: &[f64], lambda: f64) -> f64 {
    second_diff(x)
        .iter()
        .zip(z)
        .map(|(u, zi)| lambda * u.abs() - zi * u)
        .sum::<f64>()
        .max(0.0)
}

/// l1 trend filter with relative duality-gap tolerance `tol`: the solver
/// stops once `gap <= tol (1 + |objective|)`.
pub fn l1_trend_filter(signal: &Signal, lambda: f64, tol: f64) -> Result<TrendEstimate> {
    l1_trend_filter_samples(signal.samples(), lambda, tol)
}

pub fn l1_trend_filter_samples(y: &[f64], lambda: f64, tol: f64) -> Result<TrendEstimate> {
    let n = y.len();
    if n < 3 {
        return Err(Error::Input(format!("trend filtering needs n >= 3, got {n}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Parameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite sample".into()));
    }
    let kink = KINK_TOL * y.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let finish = |values: Vec<f64>, gap: f64, iterations: usize| TrendEstimate {
        knots: knots(&values, kink),
        objective: objective(y, &values, lambda),
        values,
        lambda,
        dual_gap: gap,
        iterations,
    };
    if lambda == 0.0 {
        // the box collapses to z = 0, whose primal point is y itself
        return Ok(finish(y.to_vec(), 0.0, 0));
    }

    let m = n - 2;
    let dy = second_diff(y);
    let mut z = vec![0.0; m];
    let mut mu1 = vec![1.0; m];
    let mut mu2 = vec![1.0; m];
    let mut f1: Vec<f64> = z.iter().map(|v| v - lambda).collect();
    let mut f2: Vec<f64> = z.iter().map(|v| -v - lambda).collect();
    let mut t = 1e-10;
    let mut step = f64::INFINITY;
    let mut best: Option<(Vec<f64>, f64)> = None;

    for iter in 0..MAX_ITER {
        let x = primal_from_dual(y, &z);
        let gap = gap_at(&x, &z, lambda);
        let obj = objective(y, &x, lambda);
        if best.as_ref().is_none_or(|(_, g)| gap < *g) {
            best = Some((x.clone(), gap));
        }
        if gap <= tol * (1.0 + obj.abs()) {
            return Ok(finish(x, gap, iter));
        }
        if let Some((px, pgap)) = polish(y, &z, lambda) {
            if pgap <= tol * (1.0 + objective(y, &px, lambda).abs()) {
                return Ok(finish(px, pgap, iter));
            }
        }
        if step >= 0.2 {
            t = (2.0 * m as f64 * MU / gap).max(1.2 * t);
        }
        let inv_t = 1.0 / t;

        // Newton step on the perturbed KKT system
        let ddtz = ddt_mul(&z);
        let w: Vec<f64> = (0..m).map(|i| dy[i] - (mu1[i] - mu2[i])).collect();
        let res_dual: Vec<f64> = (0..m).map(|i| ddtz[i] - w[i]).collect();
        let res_cent: Vec<f64> = (0..m)
            .map(|i| -mu1[i] * f1[i] - inv_t)
            .chain((0..m).map(|i| -mu2[i] * f2[i] - inv_t))
            .collect();
        let residual = norm2(&[&res_dual, &res_cent]);

        let diag: Vec<f64> = (0..m).map(|i| 6.0 - mu1[i] / f1[i] - mu2[i] / f2[i]).collect();
        let off1 = vec![-4.0; m.saturating_sub(1)];
        let off2 = vec![1.0; m.saturating_sub(2)];
        let rhs: Vec<f64> = (0..m)
            .map(|i| -ddtz[i] + dy[i] + inv_t / f1[i] - inv_t / f2[i])
            .collect();
        let dz = Penta::factor(&diag, &off1, &off2)?.solve(&rhs);
        let dmu1: Vec<f64> = (0..m).map(|i| -(mu1[i] + (inv_t + dz[i] * mu1[i]) / f1[i])).collect();
        let dmu2: Vec<f64> = (0..m).map(|i| -(mu2[i] + (inv_t - dz[i] * mu2[i]) / f2[i])).collect();

        step = 1.0;
        for i in 0..m {
            if dmu1[i] < 0.0 {
                step = step.min(0.99 * -mu1[i] / dmu1[i]);
            }
            if dmu2[i] < 0.0 {
                step = step.min(0.99 * -mu2[i] / dmu2[i]);
            }
        }

        // backtracking line search on the residual norm
        let mut accepted = None;
        for _ in 0..MAX_LS_ITER {
            let nz: Vec<f64> = (0..m).map(|i| z[i] + step * dz[i]).collect();
            let nmu1: Vec<f64> = (0..m).map(|i| mu1[i] + step * dmu1[i]).collect();
            let nmu2: Vec<f64> = (0..m).map(|i| mu2[i] + step * dmu2[i]).collect();
            let nf1: Vec<f64> = nz.iter().map(|v| v - lambda).collect();
            let nf2: Vec<f64> = nz.iter().map(|v| -v - lambda).collect();
            let feasible = nf1.iter().chain(&nf2).all(|v| *v < 0.0);
            if feasible {
                let nddtz = ddt_mul(&nz);
                let nres_dual: Vec<f64> = (0..m).map(|i| nddtz[i] - dy[i] + nmu1[i] - nmu2[i]).collect();
                let nres_cent: Vec<f64> = (0..m)
                    .map(|i| -nmu1[i] * nf1[i] - inv_t)
                    .chain((0..m).map(|i| -nmu2[i] * nf2[i] - inv_t))
                    .collect();
                if norm2(&[&nres_dual, &nres_cent]) <= (1.0 - ALPHA * step) * residual {
                    accepted = Some((nz, nmu1, nmu2, nf1, nf2));
                    break;
                }
            }
            step *= BETA;
        }
        // no sufficient decrease: take the last (tiny, feasible) step anyway
        let (nz, nmu1, nmu2, nf1, nf2) = match accepted {
            Some(v) => v,
            None => {
                let nz: Vec<f64> = (0..m).map(|i| z[i] + step * dz[i]).collect();
                if nz.iter().any(|v| v.abs() >= lambda) {
                    break;
                }
                let nmu1 = (0..m).map(|i| mu1[i] + step * dmu1[i]).collect();
                let nmu2 = (0..m).map(|i| mu2[i] + step * dmu2[i]).collect();
                let nf1 = nz.iter().map(|v| v - lambda).collect();
                let nf2 = nz.iter().map(|v| -v - lambda).collect();
                (nz, nmu1, nmu2, nf1, nf2)
            }
        };
        z = nz;
        mu1 = nmu1;
        mu2 = nmu2;
        f1 = nf1;
        f2 = nf2;
    }

    let (best, gap) = best.expect("at least one iterate");
    let obj = objective(y, &best, lambda);
    Err(Error::Convergence {
        iterations: MAX_ITER,
        gap,
        tol: tol * (1.0 + obj.abs()),
        best,
    })
}
