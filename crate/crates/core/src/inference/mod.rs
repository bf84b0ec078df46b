//! Asymptotic variances of the trend estimators, the standard error of `c2`,
//! and chi-squared tests of `H0: c = 0`.
//!
//! All variances are those of the limit law of `sqrt(k) (c_hat - c)` under an
//! undersmoothed `k` (no asymptotic bias term).

pub mod chisq;

use serde::Serialize;

pub use chisq::{chisq_cdf, chisq_quantile, chisq_sf};

use crate::error::{Error, Result};
use crate::evt::{combined_index, IndexVariant, TailSlice};
use crate::trend::{Estimator, SamplePanel, TrendFit, EPS_GAMMA};

/// Below this `|gamma|` the `var_c2` coefficients switch to their Taylor
/// expansions in `gamma`.
pub const SERIES_GAMMA: f64 = 1e-6;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Arguments shared by the variance formulas. `s` holds `s_1..s_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceInputs {
    pub c: f64,
    pub gamma: f64,
    s: Vec<f64>,
}

impl VarianceInputs {
    pub fn new(c: f64, gamma: f64, s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Config("need at least one time point".into()));
        }
        if s[0] <= 0.0 || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "time points must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self { c, gamma, s })
    }

    /// `s_j = j / m` for `j = 1..=m`.
    pub fn equally_spaced(c: f64, gamma: f64, m: usize) -> Result<Self> {
        Self::new(c, gamma, (1..=m).map(|j| j as f64 / m as f64).collect())
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn m(&self) -> usize {
        self.s.len()
    }

    fn sums(&self) -> (f64, f64) {
        let sum: f64 = self.s.iter().sum();
        let sum_sq: f64 = self.s.iter().map(|x| x * x).sum();
        (sum, sum_sq)
    }
}

pub fn var_c1(inputs: &VarianceInputs, gamma_plus: f64) -> Result<f64> {
    if !(gamma_plus > 0.0) {
        return Err(Error::NotPositive {
            what: "gamma_plus",
            value: gamma_plus,
        });
    }
    let (sum, sum_sq) = inputs.sums();
    let m = inputs.m() as f64;
    Ok((sum_sq + sum * sum) / (sum_sq * sum_sq * gamma_plus * gamma_plus)
        + inputs.c * inputs.c / m)
}

pub fn var_c3(inputs: &VarianceInputs) -> f64 {
    let (sum, _) = inputs.sums();
    let num: f64 = inputs.s.iter().map(|sj| 1.0 + (-inputs.c * sj).exp()).sum();
    num / (sum * sum)
}

/// `sigma^2_Gamma(gamma)`, the asymptotic variance of the moment estimator.
pub fn sigma_gamma_sq(gamma: f64) -> f64 {
    if gamma >= 0.0 {
        1.0 + gamma * gamma
    } else {
        let g = gamma;
        (1.0 - g).powi(2) * (1.0 - 2.0 * g) * (1.0 - g + 6.0 * g * g)
            / ((1.0 - 3.0 * g) * (1.0 - 4.0 * g))
    }
}

/// `sigma^2_{A_0}(gamma)`, the asymptotic variance of the scale estimator.
pub fn sigma_a0_sq(gamma: f64) -> f64 {
    if gamma >= 0.0 {
        2.0 + gamma * gamma
    } else {
        let g = gamma;
        let num = 2.0 - 16.0 * g + 51.0 * g.powi(2) - 69.0 * g.powi(3) + 50.0 * g.powi(4)
            - 24.0 * g.powi(5);
        num / ((1.0 - 2.0 * g) * (1.0 - 3.0 * g) * (1.0 - 4.0 * g))
    }
}

/// `(1 - e^{-u} - u) / gamma^2` with `u = c gamma s`.
fn index_coefficient(c: f64, gamma: f64, s: f64) -> f64 {
    let cs = c * s;
    if gamma.abs() < SERIES_GAMMA {
        -cs * cs / 2.0 + cs.powi(3) * gamma / 6.0
    } else {
        let u = cs * gamma;
        (-(-u).exp_m1() - u) / (gamma * gamma)
    }
}

/// `(1 - e^{-u}) / gamma` with `u = c gamma s`.
fn scale_coefficient(c: f64, gamma: f64, s: f64) -> f64 {
    let cs = c * s;
    if gamma.abs() < SERIES_GAMMA {
        cs - cs * cs * gamma / 2.0 + cs.powi(3) * gamma * gamma / 6.0
    } else {
        -(-cs * gamma).exp_m1() / gamma
    }
}

pub fn var_c2(inputs: &VarianceInputs) -> f64 {
    let (c, gamma) = (inputs.c, inputs.gamma);
    let m = inputs.m() as f64;
    let (_, sum_sq) = inputs.sums();
    let (mut index_term, mut decay_term, mut scale_term) = (0.0, 0.0, 0.0);
    for &sj in &inputs.s {
        index_term += sj * index_coefficient(c, gamma, sj);
        decay_term += sj * (-c * gamma * sj).exp();
        scale_term += sj * scale_coefficient(c, gamma, sj);
    }
    let num = index_term * index_term * sigma_gamma_sq(gamma) / m
        + sum_sq
        + decay_term * decay_term
        + scale_term * scale_term * sigma_a0_sq(gamma);
    num / (sum_sq * sum_sq)
}

/// Plug-in asymptotic standard error of a `c2` fit: `sqrt(var_c2 / k)` at
/// `(c_hat, gamma_hat)`.
pub fn se_c2(fit: &TrendFit, s: &[f64]) -> Result<f64> {
    if fit.estimator != Estimator::C2 {
        return Err(Error::Config(format!(
            "standard error is only available for c2, got {}",
            fit.estimator
        )));
    }
    let gamma = fit
        .gamma_hat
        .ok_or_else(|| Error::Config("c2 fit carries no index estimate".into()))?;
    let inputs = VarianceInputs::new(fit.c_hat, gamma, s.to_vec())?;
    Ok((var_c2(&inputs) / fit.k as f64).sqrt())
}

/// Returns `fit` with `se_hat` filled in.
pub fn with_se(fit: TrendFit, s: &[f64]) -> Result<TrendFit> {
    let se = se_c2(&fit, s)?;
    Ok(TrendFit {
        se_hat: Some(se),
        ..fit
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub df: u32,
    pub alpha: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

impl TestReport {
    /// Compares `statistic` with the `1 - alpha` quantile of chi2(df).
    pub fn new(statistic: f64, df: u32, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if df == 0 {
            return Err(Error::Config("degrees of freedom must be positive".into()));
        }
        let critical_value = chisq_quantile(1.0 - alpha, df);
        Ok(Self {
            statistic,
            df,
            alpha,
            critical_value,
            p_value: chisq_sf(statistic, df),
            reject: statistic > critical_value,
        })
    }
}

/// `Q1 = sum_j k/2 ((log X_{n-k,n}(s_j) - log X_{n-k,n}(0)) / gamma_plus)^2`.
/// `thresholds` runs over `j = 0..=m`.
pub fn q1_statistic(thresholds: &[f64], gamma_plus: f64, k: usize) -> Result<f64> {
    if gamma_plus <= EPS_GAMMA {
        return Err(Error::IndexNotPositive { gamma: gamma_plus });
    }
    for (j, &t) in thresholds.iter().enumerate() {
        if t <= 0.0 {
            return Err(Error::NonPositive { value: t }.in_group(j));
        }
    }
    let log0 = thresholds[0].ln();
    let half_k = k as f64 / 2.0;
    Ok(thresholds[1..]
        .iter()
        .map(|t| {
            let z = (t.ln() - log0) / gamma_plus;
            half_k * z * z
        })
        .sum())
}

/// `Q2 = sum_j k/2 (count_j / k - 1)^2`.
pub fn q2_statistic(counts: &[usize], k: usize) -> f64 {
    let kf = k as f64;
    counts
        .iter()
        .map(|&n| {
            let d = n as f64 / kf - 1.0;
            kf / 2.0 * d * d
        })
        .sum()
}

fn panel_df(panel: &SamplePanel) -> u32 {
    u32::try_from(panel.m()).unwrap_or(u32::MAX)
}

pub fn test_q1(panel: &SamplePanel, k: usize, alpha: f64) -> Result<TestReport> {
    let tails = panel.tails(k)?;
    let thresholds: Vec<f64> = tails.iter().map(TailSlice::threshold).collect();
    for (j, &t) in thresholds.iter().enumerate() {
        if t <= 0.0 {
            return Err(Error::NonPositive { value: t }.in_group(j));
        }
    }
    let gamma_plus = combined_index(&tails[1..], IndexVariant::Hill)?.gamma_hat;
    let q = q1_statistic(&thresholds, gamma_plus, k)?;
    TestReport::new(q, panel_df(panel), alpha)
}

pub fn test_q2(panel: &SamplePanel, k: usize, alpha: f64) -> Result<TestReport> {
    let counts = panel.exceedance_counts(k)?;
    TestReport::new(q2_statistic(&counts, k), panel_df(panel), alpha)
}
