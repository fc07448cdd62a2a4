//! ARIMA(p, d, q) baseline fitted by conditional sum of squares.
//!
//! On the `d`-times differenced series `w`:
//!
//! ```text
//! w_t = c + Σ φ_i w_{t-i} + e_t + Σ θ_j e_{t-j}
//! ```
//!
//! Pre-sample innovations are zero and the first `p` values are conditioned
//! on. Coefficients come from Nelder–Mead started at a Hannan–Rissanen
//! regression estimate.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::WindowSpec;
use crate::optim::NelderMead;
use crate::series::{Origin, TimeSeries};
use crate::{Error, Result};

/// Roots of the AR polynomial must lie beyond this modulus.
pub const STATIONARITY_MARGIN: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl Default for ArimaSpec {
    fn default() -> Self {
        Self { p: 2, d: 1, q: 2 }
    }
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        let spec = Self { p, d, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p + self.q == 0 {
            return Err(Error::invalid("p + q", "need at least one AR or MA term"));
        }
        Ok(())
    }

    /// Shortest series `fit` accepts.
    pub fn min_length(&self) -> usize {
        10 * (self.p + self.q + 1) + self.d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub spec: ArimaSpec,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub intercept: f64,
    pub sigma2: f64,
    pub fitted_on: usize,
}

impl ArimaModel {
    /// Model with given coefficients; checks orders and stationarity.
    pub fn new(spec: ArimaSpec, ar: Vec<f64>, ma: Vec<f64>, intercept: f64, sigma2: f64) -> Result<Self> {
        spec.validate()?;
        if ar.len() != spec.p {
            return Err(Error::ShapeMismatch {
                what: "ar coefficients",
                expected: spec.p,
                actual: ar.len(),
            });
        }
        if ma.len() != spec.q {
            return Err(Error::ShapeMismatch {
                what: "ma coefficients",
                expected: spec.q,
                actual: ma.len(),
            });
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be positive and finite"));
        }
        for (k, &v) in ar.iter().chain(&ma).chain([&intercept]).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: k, value: v });
            }
        }
        let modulus = min_root_modulus(&ar);
        if modulus <= STATIONARITY_MARGIN {
            return Err(Error::NonStationary {
                min_root_modulus: modulus,
            });
        }
        Ok(Self {
            spec,
            ar,
            ma,
            intercept,
            sigma2,
            fitted_on: 0,
        })
    }

    /// Smallest history `forecast` accepts.
    pub fn min_history(&self) -> usize {
        self.spec.p.max(self.spec.q) + self.spec.d
    }

    /// `t`-step-ahead point forecast from the end of `history`.
    pub fn forecast(&self, history: &[f64], horizon: usize) -> Result<f64> {
        self.check_forecast(history.len(), horizon)?;
        let levels = difference_levels(history, self.spec.d);
        let w = &levels[self.spec.d];
        let resid = residuals(w, &self.ar, &self.ma, self.intercept);
        Ok(self.forecast_from(&levels, &resid, w.len(), horizon))
    }

    /// Forecasts on the same grid as the LSTM's `predict_series`: element `i`
    /// predicts index `i + T + t - 1` from everything up to index `i + T - 1`.
    /// The model is not refitted.
    pub fn rolling_forecast(&self, series: &[f64], spec: &WindowSpec) -> Result<TimeSeries> {
        spec.validate()?;
        let (t_in, horizon) = (spec.input_length, spec.horizon);
        if series.len() < spec.span() {
            return Err(Error::InsufficientData {
                required: spec.span(),
                actual: series.len(),
            });
        }
        self.check_forecast(t_in, horizon)?;
        let d = self.spec.d;
        let levels = difference_levels(series, d);
        // Residuals depend only on the past, so one pass serves every origin.
        let resid = residuals(&levels[d], &self.ar, &self.ma, self.intercept);
        let out = (0..spec.sample_count(series.len()))
            .map(|i| {
                let end = i + t_in;
                self.forecast_from(&levels, &resid, end - d, horizon)
            })
            .collect();
        TimeSeries::new(out, 1.0, Origin::Derived)
    }

    fn check_forecast(&self, history: usize, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        let need = self.min_history().max(1);
        if history < need {
            return Err(Error::InsufficientData {
                required: need,
                actual: history,
            });
        }
        Ok(())
    }

    /// `levels[j]` is the `j`-th difference of the full series; only the
    /// first `n` entries of `levels[d]` (and matching prefixes above) are
    /// treated as observed.
    fn forecast_from(&self, levels: &[Vec<f64>], resid: &[f64], n: usize, horizon: usize) -> f64 {
        let (p, q, d) = (self.spec.p, self.spec.q, self.spec.d);
        let w = &levels[d][..n];
        let mut ext: Vec<f64> = Vec::with_capacity(p + horizon);
        ext.extend_from_slice(&w[n.saturating_sub(p)..]);
        let lead = ext.len();
        let mut future = vec![0.0; horizon];
        for h in 0..horizon {
            let mut v = self.intercept;
            for i in 1..=p {
                let at = lead + h;
                if at >= i {
                    v += self.ar[i - 1] * ext[at - i];
                }
            }
            for j in 1..=q {
                // innovation index n + h - j in observed time; zero once in the future
                if j > h && n + h >= j {
                    v += self.ma[j - 1] * resid[n + h - j];
                }
            }
            ext.push(v);
            future[h] = v;
        }
        // Integrate back up through each differencing level.
        for level in (0..d).rev() {
            let mut last = levels[level][n + (d - level) - 1];
            for f in future.iter_mut() {
                last += *f;
                *f = last;
            }
        }
        future[horizon - 1]
    }
}

/// `out[j]` is the `j`-th difference, `out[0]` the input.
pub fn difference_levels(series: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut out = vec![series.to_vec()];
    for _ in 0..d {
        let prev = out.last().expect("non-empty");
        let next = prev.windows(2).map(|w| w[1] - w[0]).collect();
        out.push(next);
    }
    out
}

pub fn difference(series: &[f64], d: usize) -> Vec<f64> {
    difference_levels(series, d).pop().expect("non-empty")
}

/// CSS residuals; entries before index `p` are zero.
fn residuals(w: &[f64], ar: &[f64], ma: &[f64], c: f64) -> Vec<f64> {
    let p = ar.len();
    let mut e = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = c;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * w[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                pred += theta * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e
}

fn css(w: &[f64], ar: &[f64], ma: &[f64], c: f64) -> f64 {
    let e = residuals(w, ar, ma, c);
    e[ar.len()..].iter().map(|v| v * v).sum()
}

/// Smallest modulus among roots of `1 - φ₁z - … - φ_p z^p`; infinite when
/// the polynomial is constant.
pub fn min_root_modulus(ar: &[f64]) -> f64 {
    let degree = match ar.iter().rposition(|&v| v != 0.0) {
        Some(k) => k + 1,
        None => return f64::INFINITY,
    };
    // Roots of the reciprocal polynomial z^p - φ₁z^{p-1} - … - φ_p are the
    // inverses of the originals.
    let coeffs: Vec<f64> = ar[..degree].iter().map(|v| -v).collect();
    let largest = durand_kerner(&coeffs)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    1.0 / largest
}

/// Roots of the monic `z^n + a₁z^{n-1} + … + a_n`.
fn durand_kerner(a: &[f64]) -> Vec<Complex64> {
    let n = a.len();
    let eval = |z: Complex64| a.iter().fold(Complex64::new(1.0, 0.0), |acc, &c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let scale = 1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut roots: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * scale).collect();
    for _ in 0..500 {
        let mut shift = 0.0f64;
        for k in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    denom *= roots[k] - roots[j];
                }
            }
            let delta = eval(roots[k]) / denom;
            if delta.re.is_finite() && delta.im.is_finite() {
                roots[k] -= delta;
                shift = shift.max(delta.norm());
            }
        }
        if shift < 1e-14 {
            break;
        }
    }
    roots
}

/// Least squares via normal equations and Gaussian elimination; `None` if
/// singular.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = rows.first()?.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (r, &yv) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += r[i] * r[j];
            }
            a[i][k] += r[i] * yv;
        }
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for j in col..=k {
                    a[row][j] -= factor * a[col][j];
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Hannan–Rissanen: long AR for innovations, then a joint regression.
fn initial_estimate(w: &[f64], p: usize, q: usize) -> Vec<f64> {
    let fallback = || {
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let mut x = vec![0.0; 1 + p + q];
        x[0] = mean;
        x
    };
    let long = (p.max(q) + 8).min(w.len() / 4);
    let mut innov = vec![0.0; w.len()];
    if q > 0 {
        let rows: Vec<Vec<f64>> = (long..w.len())
            .map(|t| core::iter::once(1.0).chain((1..=long).map(|i| w[t - i])).collect())
            .collect();
        let Some(beta) = least_squares(&rows, &w[long..]) else {
            return fallback();
        };
        for (t, row) in (long..w.len()).zip(&rows) {
            innov[t] = w[t] - row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let start = if q > 0 { long + q } else { p };
    if start >= w.len() {
        return fallback();
    }
    let rows: Vec<Vec<f64>> = (start..w.len())
        .map(|t| {
            core::iter::once(1.0)
                .chain((1..=p).map(|i| w[t - i]))
                .chain((1..=q).map(|j| innov[t - j]))
                .collect()
        })
        .collect();
    least_squares(&rows, &w[start..]).unwrap_or_else(fallback)
}

pub fn fit(series: &[f64], spec: ArimaSpec) -> Result<ArimaModel> {
    spec.validate()?;
    let w = difference(series, spec.d);
    let need = 10 * (spec.p + spec.q + 1);
    if series.len() < spec.d || w.len() < need {
        return Err(Error::InsufficientData {
            required: spec.min_length(),
            actual: series.len(),
        });
    }
    for (k, &v) in series.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { index: k, value: v });
        }
    }
    let (p, q) = (spec.p, spec.q);
    let n_eff = (w.len() - p) as f64;
    let objective = |x: &[f64]| {
        let (c, ar, ma) = (x[0], &x[1..1 + p], &x[1 + p..]);
        let s = css(&w, ar, ma, c) / n_eff;
        if s.is_finite() {
            s
        } else {
            f64::MAX
        }
    };

    let start = initial_estimate(&w, p, q);
    let mut x0 = start.clone();
    // Pull a non-stationary or non-invertible start back inside.
    if min_root_modulus(&x0[1..1 + p]) <= STATIONARITY_MARGIN || !invertible(&x0[1 + p..]) {
        x0[1..].iter_mut().for_each(|v| *v *= 0.0);
    }
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let spread = libm::sqrt(w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64);
    let mut steps = vec![0.1; 1 + p + q];
    steps[0] = 0.1 * spread.max(1e-8);

    let nm = NelderMead::default();
    let best = nm.minimize(objective, &x0, &steps);
    if !best.converged {
        return Err(Error::NonConvergence {
            iterations: best.iterations,
            objective: best.value,
        });
    }
    let x = best.x;
    let ar = x[1..1 + p].to_vec();
    let ma = x[1 + p..].to_vec();
    let sigma2 = best.value;
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let mut model = ArimaModel::new(spec, ar, ma, x[0], sigma2)?;
    model.fitted_on = series.len();
    Ok(model)
}

fn invertible(ma: &[f64]) -> bool {
    let flipped: Vec<f64> = ma.iter().map(|v| -v).collect();
    min_root_modulus(&flipped) > STATIONARITY_MARGIN
}

/// Smallest `d ≤ max_d` after which one more difference no longer lowers
/// the variance.
pub fn auto_difference_order(series: &[f64], max_d: usize) -> usize {
    let variance = |v: &[f64]| {
        if v.len() < 2 {
            return f64::INFINITY;
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
    };
    let mut current = series.to_vec();
    let mut d = 0;
    while d < max_d {
        let next = difference(&current, 1);
        if variance(&next) >= variance(&current) {
            break;
        }
        current = next;
        d += 1;
    }
    d
}

/// Gaussian ARMA sample path with `burn_in` discarded leading steps.
pub fn simulate_arma(ar: &[f64], ma: &[f64], intercept: f64, sigma: f64, n: usize, burn_in: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n + burn_in;
    let mut x = vec![0.0; total];
    let mut e = vec![0.0; total];
    for t in 0..total {
        let z: f64 = StandardNormal.sample(&mut rng);
        e[t] = sigma * z;
        let mut v = intercept + e[t];
        for (i, phi) in ar.iter().enumerate() {
            if t > i {
                v += phi * x[t - 1 - i];
            }
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j {
                v += theta * e[t - 1 - j];
            }
        }
        x[t] = v;
    }
    x.split_off(burn_in)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_hand_recursion() {
        let m = ArimaModel::new(ArimaSpec::new(1, 0, 0).unwrap(), vec![0.5], vec![], 0.0, 1.0).unwrap();
        assert_eq!(m.forecast(&[9.0, 4.0], 1).unwrap(), 2.0);
        assert_eq!(m.forecast(&[9.0, 4.0], 2).unwrap(), 1.0);
    }

    #[test]
    fn random_walk_repeats_last_value() {
        let m = ArimaModel::new(ArimaSpec::new(1, 1, 0).unwrap(), vec![0.0], vec![], 0.0, 1.0).unwrap();
        let hist = [1.0, 3.5, 2.0, 7.25];
        for h in 1..=5 {
            assert_eq!(m.forecast(&hist, h).unwrap(), 7.25);
        }
    }

    #[test]
    fn zero_horizon_and_short_history_rejected() {
        let m = ArimaModel::new(ArimaSpec::new(2, 1, 2).unwrap(), vec![0.1, 0.1], vec![0.0, 0.0], 0.0, 1.0).unwrap();
        assert!(matches!(m.forecast(&[1.0; 10], 0), Err(Error::InvalidParameter { .. })));
        assert!(matches!(m.forecast(&[1.0; 2], 1), Err(Error::InsufficientData { required: 3, .. })));
    }

    #[test]
    fn rolling_matches_per_origin_forecast() {
        let m = ArimaModel::new(ArimaSpec::new(2, 1, 2).unwrap(), vec![0.4, -0.2], vec![0.3, 0.1], 0.01, 1.0).unwrap();
        let series: Vec<f64> = (0..80).map(|k| libm::sin(k as f64 * 0.21) + 0.01 * k as f64).collect();
        let spec = WindowSpec::multi_step(10, 4).unwrap();
        let rolled = m.rolling_forecast(&series, &spec).unwrap();
        assert_eq!(rolled.len(), 80 - 10 - 4 + 1);
        for (i, &r) in rolled.iter().enumerate() {
            assert_eq!(r, m.forecast(&series[..i + 10], 4).unwrap());
        }
    }

    #[test]
    fn rolling_random_walk_is_lagged_series() {
        let m = ArimaModel::new(ArimaSpec::new(1, 1, 0).unwrap(), vec![0.0], vec![], 0.0, 1.0).unwrap();
        let series: Vec<f64> = (0..30).map(|k| (k * k % 7) as f64).collect();
        let spec = WindowSpec::multi_step(5, 3).unwrap();
        let rolled = m.rolling_forecast(&series, &spec).unwrap();
        for (i, &r) in rolled.iter().enumerate() {
            assert_eq!(r, series[i + 4]);
        }
    }

    #[test]
    fn ar1_rolling_by_hand() {
        let m = ArimaModel::new(ArimaSpec::new(1, 0, 0).unwrap(), vec![0.5], vec![], 0.0, 1.0).unwrap();
        let series = [8.0, 4.0, 2.0, 6.0, 10.0];
        let rolled = m.rolling_forecast(&series, &WindowSpec::multi_step(2, 2).unwrap()).unwrap();
        assert_eq!(rolled.values(), &[1.0, 0.5]);
    }

    #[test]
    fn root_modulus() {
        // 1 - 0.5z has root 2
        assert!((min_root_modulus(&[0.5]) - 2.0).abs() < 1e-12);
        // 1 - 1.5z + 0.5z^2 = (1 - z)(1 - 0.5z): roots 1 and 2
        assert!((min_root_modulus(&[1.5, -0.5]) - 1.0).abs() < 1e-9);
        // complex pair: 1 - z + 0.5z^2, |root|^2 = 2
        assert!((min_root_modulus(&[1.0, -0.5]) - libm::sqrt(2.0)).abs() < 1e-9);
        assert_eq!(min_root_modulus(&[0.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn non_stationary_model_rejected() {
        let err = ArimaModel::new(ArimaSpec::new(1, 0, 0).unwrap(), vec![1.2], vec![], 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonStationary { .. }));
    }

    #[test]
    fn fit_white_noise_ar1_near_zero() {
        let x = simulate_arma(&[], &[], 0.0, 1.0, 5000, 0, 1);
        let m = fit(&x, ArimaSpec::new(1, 0, 0).unwrap()).unwrap();
        assert!(m.ar[0].abs() < 0.05, "{:?}", m.ar);
        assert!((m.sigma2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn fit_rejects_short_series() {
        let err = fit(&[1.0; 40], ArimaSpec::new(2, 1, 2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::InsufficientData { required: 51, actual: 40 }));
    }

    #[test]
    fn spec_requires_a_term() {
        assert!(ArimaSpec::new(0, 1, 0).is_err());
    }

    #[test]
    fn difference_order_heuristic() {
        let noise = simulate_arma(&[], &[], 0.0, 1.0, 2000, 0, 3);
        assert_eq!(auto_difference_order(&noise, 2), 0);
        let walk: Vec<f64> = noise
            .iter()
            .scan(0.0, |s, v| {
                *s += v;
                Some(*s)
            })
            .collect();
        assert_eq!(auto_difference_order(&walk, 2), 1);
    }
}
