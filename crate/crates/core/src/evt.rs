//! Upper order statistics and the extreme value index and scale estimators
//! built on them.
//!
//! Every estimator here works on a [`TailSlice`]: the `k + 1` largest values
//! of a group, sorted ascending, whose first element `X_{n-k,n}` is the
//! threshold. Log-spacings are taken relative to that threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observations recorded at one time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGroup")]
pub struct Group {
    time_point: f64,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGroup {
    time_point: f64,
    values: Vec<f64>,
}

impl TryFrom<RawGroup> for Group {
    type Error = Error;

    fn try_from(raw: RawGroup) -> Result<Self> {
        Group::new(raw.time_point, raw.values)
    }
}

impl Group {
    /// Requires at least two finite values and a finite, nonnegative time point.
    pub fn new(time_point: f64, values: Vec<f64>) -> Result<Self> {
        if !time_point.is_finite() || time_point < 0.0 {
            return Err(Error::InvalidGroup(format!(
                "time point must be finite and >= 0, got {time_point}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidGroup(format!(
                "need at least 2 values, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGroup(format!(
                "value at position {pos} is not finite ({})",
                values[pos]
            )));
        }
        Ok(Self { time_point, values })
    }

    pub fn time_point(&self) -> f64 {
        self.time_point
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tail(&self, k: usize) -> Result<TailSlice> {
        tail_slice(&self.values, k)
    }
}

/// The `k + 1` largest values of a sample, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSlice {
    k: usize,
    n: usize,
    order_stats: Vec<f64>,
}

impl TailSlice {
    /// Builds a slice from a sample that is already sorted ascending.
    pub fn from_sorted(sorted: &[f64], k: usize) -> Result<Self> {
        let n = sorted.len();
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, n });
        }
        Ok(Self {
            k,
            n,
            order_stats: sorted[n - k - 1..].to_vec(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Size of the sample the slice was taken from.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `X_{n-k,n}, ..., X_{n,n}`.
    pub fn order_stats(&self) -> &[f64] {
        &self.order_stats
    }

    /// `X_{n-k,n}`.
    pub fn threshold(&self) -> f64 {
        self.order_stats[0]
    }

    /// First and second moments of the log-spacings above the threshold.
    fn log_moments(&self) -> Result<(f64, f64)> {
        let threshold = self.threshold();
        if threshold <= 0.0 {
            return Err(Error::NonPositive { value: threshold });
        }
        let log_threshold = threshold.ln();
        let (mut m1, mut m2) = (0.0, 0.0);
        for &x in &self.order_stats[1..] {
            let d = x.ln() - log_threshold;
            m1 += d;
            m2 += d * d;
        }
        let k = self.k as f64;
        Ok((m1 / k, m2 / k))
    }
}

/// Extracts the `k + 1` largest values of `values`, sorted ascending.
///
/// Duplicates are kept. Runs in `O(n + k log k)`.
pub fn tail_slice(values: &[f64], k: usize) -> Result<TailSlice> {
    let n = values.len();
    if k == 0 || k >= n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut buf = values.to_vec();
    let cut = n - k - 1;
    buf.select_nth_unstable_by(cut, f64::total_cmp);
    let mut top = buf.split_off(cut);
    top.sort_unstable_by(f64::total_cmp);
    Ok(TailSlice {
        k,
        n,
        order_stats: top,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexVariant {
    Hill,
    Moment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexEstimate {
    pub gamma_hat: f64,
    pub variant: IndexVariant,
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleEstimate {
    pub a_hat: f64,
    pub k: usize,
}

/// Hill's estimator: mean log-spacing of the top `k` values over the threshold.
pub fn hill_estimator(slice: &TailSlice) -> Result<IndexEstimate> {
    let (m1, _) = slice.log_moments()?;
    Ok(IndexEstimate {
        gamma_hat: m1,
        variant: IndexVariant::Hill,
        k: slice.k,
    })
}

/// `1 - 1/2 (1 - M1^2/M2)^{-1}`, the negative part of the moment estimator.
fn gamma_minus(m1: f64, m2: f64) -> Result<f64> {
    if m2 <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    let denom = 1.0 - m1 * m1 / m2;
    // M1^2 <= M2 always; equality means every spacing is identical.
    if denom <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    Ok(1.0 - 0.5 / denom)
}

/// Moment estimator of the extreme value index, valid for any sign of gamma.
pub fn moment_estimator(slice: &TailSlice) -> Result<IndexEstimate> {
    let (m1, m2) = slice.log_moments()?;
    let g_minus = gamma_minus(m1, m2)?;
    Ok(IndexEstimate {
        gamma_hat: m1 + g_minus,
        variant: IndexVariant::Moment,
        k: slice.k,
    })
}

/// Scale estimator paired with the moment estimator:
/// `X_{n-k,n} * M1 * (1 - gamma_minus)`.
pub fn moment_scale(slice: &TailSlice) -> Result<ScaleEstimate> {
    let (m1, m2) = slice.log_moments()?;
    let g_minus = gamma_minus(m1, m2)?;
    let a_hat = slice.threshold() * m1 * (1.0 - g_minus);
    if !(a_hat > 0.0 && a_hat.is_finite()) {
        return Err(Error::DegenerateSample);
    }
    Ok(ScaleEstimate { a_hat, k: slice.k })
}

pub fn index_estimate(slice: &TailSlice, variant: IndexVariant) -> Result<IndexEstimate> {
    match variant {
        IndexVariant::Hill => hill_estimator(slice),
        IndexVariant::Moment => moment_estimator(slice),
    }
}

/// Averages per-group index estimates over the groups at `s_1..s_m`.
///
/// `slices[i]` is taken to be the group at time point `j = i + 1`; errors are
/// annotated with that `j`. All slices must share the same `k`.
pub fn combined_index(slices: &[TailSlice], variant: IndexVariant) -> Result<IndexEstimate> {
    let first = slices
        .first()
        .ok_or_else(|| Error::InvalidPanel("no groups to combine".into()))?;
    let k = first.k;
    let mut sum = 0.0;
    for (i, slice) in slices.iter().enumerate() {
        if slice.k != k {
            return Err(Error::InvalidPanel(format!(
                "slices disagree on k ({} vs {k}) at j = {}",
                slice.k,
                i + 1
            )));
        }
        sum += index_estimate(slice, variant)
            .map_err(|e| e.in_group(i + 1))?
            .gamma_hat;
    }
    Ok(IndexEstimate {
        gamma_hat: sum / slices.len() as f64,
        variant,
        k,
    })
}
