//! Least-squares estimators of the trend constant `c` in
//! `(1 - F_s(x)) / (1 - F_0(x)) -> exp(c s)`.
//!
//! * `c1` compares log thresholds across time points and needs `gamma > 0`.
//! * `c2` compares threshold differences scaled by the group-0 scale estimate.
//! * `c3` counts exceedances of the group-0 threshold; it needs no index
//!   estimate and is invariant under increasing transforms of the data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{
    combined_index, moment_scale, Group, IndexVariant, TailSlice,
};

/// Below this magnitude an index estimate counts as zero.
pub const EPS_GAMMA: f64 = 1e-8;

/// Independent groups observed at `0 = s_0 < s_1 < ... < s_m`.
///
/// Group sizes may differ; a shared `k` is applied to all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPanel")]
pub struct SamplePanel {
    groups: Vec<Group>,
    #[serde(skip)]
    sorted: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawPanel {
    groups: Vec<Group>,
}

impl TryFrom<RawPanel> for SamplePanel {
    type Error = Error;

    fn try_from(raw: RawPanel) -> Result<Self> {
        SamplePanel::new(raw.groups)
    }
}

impl SamplePanel {
    pub fn new(groups: Vec<Group>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidPanel(format!(
                "need at least 2 groups (s_0 and s_1), got {}",
                groups.len()
            )));
        }
        if groups[0].time_point() != 0.0 {
            return Err(Error::InvalidPanel(format!(
                "group 0 must sit at s_0 = 0, got {}",
                groups[0].time_point()
            )));
        }
        for (j, pair) in groups.windows(2).enumerate() {
            if pair[1].time_point() <= pair[0].time_point() {
                return Err(Error::InvalidPanel(format!(
                    "time points must increase strictly: s_{} = {} <= s_{} = {}",
                    j + 1,
                    pair[1].time_point(),
                    j,
                    pair[0].time_point()
                )));
            }
        }
        let sorted = groups
            .iter()
            .map(|g| {
                let mut v = g.values().to_vec();
                v.sort_unstable_by(f64::total_cmp);
                v
            })
            .collect();
        Ok(Self { groups, sorted })
    }

    /// Builds a panel with equally spaced time points `s_j = j / m`.
    pub fn equally_spaced(samples: Vec<Vec<f64>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidPanel(format!(
                "need at least 2 groups, got {}",
                samples.len()
            )));
        }
        let m = (samples.len() - 1) as f64;
        let groups = samples
            .into_iter()
            .enumerate()
            .map(|(j, values)| Group::new(j as f64 / m, values))
            .collect::<Result<Vec<_>>>()?;
        Self::new(groups)
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Number of time points after `s_0`.
    pub fn m(&self) -> usize {
        self.groups.len() - 1
    }

    /// `s_0, ..., s_m`.
    pub fn time_points(&self) -> Vec<f64> {
        self.groups.iter().map(Group::time_point).collect()
    }

    /// `s_1, ..., s_m`.
    pub fn trend_times(&self) -> Vec<f64> {
        self.groups[1..].iter().map(Group::time_point).collect()
    }

    pub fn min_group_size(&self) -> usize {
        self.groups.iter().map(Group::len).min().unwrap_or(0)
    }

    /// Values of group `j`, sorted ascending.
    pub fn sorted_values(&self, j: usize) -> &[f64] {
        &self.sorted[j]
    }

    pub fn tail(&self, j: usize, k: usize) -> Result<TailSlice> {
        TailSlice::from_sorted(&self.sorted[j], k).map_err(|e| e.in_group(j))
    }

    /// Tail slices of every group, `j = 0..=m`.
    pub fn tails(&self, k: usize) -> Result<Vec<TailSlice>> {
        (0..self.groups.len()).map(|j| self.tail(j, k)).collect()
    }

    /// `X_{n-k,n}(s_j)` for `j = 0..=m`.
    pub fn thresholds(&self, k: usize) -> Result<Vec<f64>> {
        Ok(self.tails(k)?.iter().map(TailSlice::threshold).collect())
    }

    /// Number of observations in groups `1..=m` strictly above `X_{n-k,n}(0)`.
    pub fn exceedance_counts(&self, k: usize) -> Result<Vec<usize>> {
        let threshold = self.tail(0, k)?.threshold();
        Ok(self.sorted[1..]
            .iter()
            .map(|v| v.len() - v.partition_point(|&x| x <= threshold))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    C1,
    C2,
    C3,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::C1, Estimator::C2, Estimator::C3];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::C1 => "c1",
            Estimator::C2 => "c2",
            Estimator::C3 => "c3",
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "c1" => Ok(Estimator::C1),
            "c2" => Ok(Estimator::C2),
            "c3" => Ok(Estimator::C3),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// One trend estimate and the nuisance estimates it was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendFit {
    pub estimator: Estimator,
    pub c_hat: f64,
    pub k: usize,
    /// Combined Hill estimate for `c1`, combined moment estimate for `c2`.
    pub gamma_hat: Option<f64>,
    /// Group-0 scale estimate, `c2` only.
    pub a0_hat: Option<f64>,
    pub se_hat: Option<f64>,
}

impl TrendFit {
    fn new(estimator: Estimator, c_hat: f64, k: usize) -> Self {
        Self {
            estimator,
            c_hat,
            k,
            gamma_hat: None,
            a0_hat: None,
            se_hat: None,
        }
    }

    /// Relative change in exceedance probability over `delta_s` time units.
    pub fn risk_change_per_period(&self, delta_s: f64) -> f64 {
        risk_change_per_period(self.c_hat, delta_s)
    }
}

/// `exp(c * delta_s) - 1`.
pub fn risk_change_per_period(c: f64, delta_s: f64) -> f64 {
    (c * delta_s).exp_m1()
}

fn sum_sq(s: &[f64]) -> f64 {
    s.iter().map(|x| x * x).sum()
}

/// `c1` from its ingredients.
///
/// `s` holds `s_1..s_m`, `thresholds` holds `X_{n-k,n}(s_j)` for `j = 0..=m`.
pub fn c1_from_parts(s: &[f64], thresholds: &[f64], gamma_plus: f64) -> Result<f64> {
    debug_assert_eq!(thresholds.len(), s.len() + 1);
    if gamma_plus <= EPS_GAMMA {
        return Err(Error::IndexNotPositive { gamma: gamma_plus });
    }
    for (j, &t) in thresholds.iter().enumerate() {
        if t <= 0.0 {
            return Err(Error::NonPositive { value: t }.in_group(j));
        }
    }
    let log0 = thresholds[0].ln();
    let num: f64 = s
        .iter()
        .zip(&thresholds[1..])
        .map(|(sj, t)| sj * (t.ln() - log0))
        .sum();
    Ok(num / (gamma_plus * sum_sq(s)))
}

/// Per-time-point summand of `c2`:
/// `(1/gamma) log(1 + gamma dx / a0)`, or `dx / a0` when `|gamma| < EPS_GAMMA`.
fn c2_summand(j: usize, gamma: f64, scaled_dx: f64) -> Result<f64> {
    if gamma.abs() < EPS_GAMMA {
        return Ok(scaled_dx);
    }
    let arg = 1.0 + gamma * scaled_dx;
    if arg <= 0.0 {
        return Err(Error::LogDomain { j, value: arg });
    }
    Ok((gamma * scaled_dx).ln_1p() / gamma)
}

/// `c2` from its ingredients. `thresholds` runs over `j = 0..=m`.
pub fn c2_from_parts(s: &[f64], thresholds: &[f64], gamma: f64, a0: f64) -> Result<f64> {
    debug_assert_eq!(thresholds.len(), s.len() + 1);
    if !(a0 > 0.0) {
        return Err(Error::NotPositive {
            what: "scale estimate a0",
            value: a0,
        });
    }
    let base = thresholds[0];
    let mut num = 0.0;
    for (i, (sj, t)) in s.iter().zip(&thresholds[1..]).enumerate() {
        num += sj * c2_summand(i + 1, gamma, (t - base) / a0)?;
    }
    Ok(num / sum_sq(s))
}

/// `log(count / k)` for each `j = 1..=m`.
pub fn log_relative_risks(counts: &[usize], k: usize) -> Result<Vec<f64>> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            if count == 0 {
                Err(Error::NoExceedances { j: i + 1 })
            } else {
                Ok((count as f64 / k as f64).ln())
            }
        })
        .collect()
}

/// `c3` from exceedance counts of the group-0 threshold at `j = 1..=m`.
pub fn c3_from_parts(s: &[f64], counts: &[usize], k: usize) -> Result<f64> {
    debug_assert_eq!(counts.len(), s.len());
    let num: f64 = log_relative_risks(counts, k)?.iter().sum();
    Ok(num / s.iter().sum::<f64>())
}

pub fn estimate_c1(panel: &SamplePanel, k: usize) -> Result<TrendFit> {
    let tails = panel.tails(k)?;
    let thresholds: Vec<f64> = tails.iter().map(TailSlice::threshold).collect();
    for (j, &t) in thresholds.iter().enumerate() {
        if t <= 0.0 {
            return Err(Error::NonPositive { value: t }.in_group(j));
        }
    }
    let gamma_plus = combined_index(&tails[1..], IndexVariant::Hill)?.gamma_hat;
    let c_hat = c1_from_parts(&panel.trend_times(), &thresholds, gamma_plus)?;
    Ok(TrendFit {
        gamma_hat: Some(gamma_plus),
        ..TrendFit::new(Estimator::C1, c_hat, k)
    })
}

pub fn estimate_c2(panel: &SamplePanel, k: usize) -> Result<TrendFit> {
    let tails = panel.tails(k)?;
    let thresholds: Vec<f64> = tails.iter().map(TailSlice::threshold).collect();
    let a0 = moment_scale(&tails[0]).map_err(|e| e.in_group(0))?.a_hat;
    let gamma = combined_index(&tails[1..], IndexVariant::Moment)?.gamma_hat;
    let c_hat = c2_from_parts(&panel.trend_times(), &thresholds, gamma, a0)?;
    Ok(TrendFit {
        gamma_hat: Some(gamma),
        a0_hat: Some(a0),
        ..TrendFit::new(Estimator::C2, c_hat, k)
    })
}

pub fn estimate_c3(panel: &SamplePanel, k: usize) -> Result<TrendFit> {
    let counts = panel.exceedance_counts(k)?;
    let c_hat = c3_from_parts(&panel.trend_times(), &counts, k)?;
    Ok(TrendFit::new(Estimator::C3, c_hat, k))
}

pub fn estimate(panel: &SamplePanel, k: usize, estimator: Estimator) -> Result<TrendFit> {
    match estimator {
        Estimator::C1 => estimate_c1(panel, k),
        Estimator::C2 => estimate_c2(panel, k),
        Estimator::C3 => estimate_c3(panel, k),
    }
}

/// Empirical log-relative risk `(s_j, log(count_j / k))` for `j = 0..=m`,
/// with `(0, 0)` first.
pub fn relative_risk_path(panel: &SamplePanel, k: usize) -> Result<Vec<(f64, f64)>> {
    let counts = panel.exceedance_counts(k)?;
    let logs = log_relative_risks(&counts, k)?;
    Ok(std::iter::once((0.0, 0.0))
        .chain(panel.trend_times().into_iter().zip(logs))
        .collect())
}

/// Every estimate at one `k`; `None` where the estimator was not computable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub gamma_plus: Option<f64>,
    pub gamma_moment: Option<f64>,
    pub a0: Option<f64>,
}

pub fn sweep_row(panel: &SamplePanel, k: usize) -> SweepRow {
    let tails = panel.tails(k).ok();
    let gamma_plus = tails
        .as_ref()
        .and_then(|t| combined_index(&t[1..], IndexVariant::Hill).ok())
        .map(|e| e.gamma_hat);
    let gamma_moment = tails
        .as_ref()
        .and_then(|t| combined_index(&t[1..], IndexVariant::Moment).ok())
        .map(|e| e.gamma_hat);
    let a0 = tails
        .as_ref()
        .and_then(|t| moment_scale(&t[0]).ok())
        .map(|e| e.a_hat);
    SweepRow {
        k,
        c1: estimate_c1(panel, k).ok().map(|f| f.c_hat),
        c2: estimate_c2(panel, k).ok().map(|f| f.c_hat),
        c3: estimate_c3(panel, k).ok().map(|f| f.c_hat),
        gamma_plus,
        gamma_moment,
        a0,
    }
}

/// Evaluates all estimators at each `k`, in parallel over `k`.
pub fn sweep(panel: &SamplePanel, ks: &[usize]) -> Vec<SweepRow> {
    ks.par_iter().map(|&k| sweep_row(panel, k)).collect()
}
