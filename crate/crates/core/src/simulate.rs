//! Monte Carlo engine: samplers with an injected tail trend, replicated
//! panels, and per-`k` summaries of the three trend estimators.
//!
//! Each group of each replication draws from its own ChaCha8 stream, keyed by
//! `(seed, replication, group)`, so results do not depend on how replications
//! are scheduled across threads.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trend::{estimate, Estimator, SamplePanel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `F(x) = 1 - (1 + gamma x)^{-1/gamma}`.
    Gpd,
    /// `F(x) = 1 - x^{-1/gamma}`, `x >= 1`.
    Pareto,
    /// Standard Cauchy, `gamma = 1`.
    Cauchy,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gpd => "gpd",
            Family::Pareto => "pareto",
            Family::Cauchy => "cauchy",
        }
    }

    /// The extreme value index actually used for this family.
    pub fn effective_gamma(self, gamma: f64) -> f64 {
        match self {
            Family::Cauchy => 1.0,
            _ => gamma,
        }
    }

    /// Tail quantile function `U(t) = F^{-1}(1 - 1/t)`.
    pub fn tail_quantile(self, gamma: f64, t: f64) -> f64 {
        match self {
            Family::Gpd => {
                if gamma == 0.0 {
                    t.ln()
                } else {
                    (gamma * t.ln()).exp_m1() / gamma
                }
            }
            Family::Pareto => t.powf(gamma),
            Family::Cauchy => (std::f64::consts::PI * (0.5 - 1.0 / t)).tan(),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gpd" => Ok(Family::Gpd),
            "pareto" => Ok(Family::Pareto),
            "cauchy" => Ok(Family::Cauchy),
            other => Err(Error::InvalidDesign(format!("unknown family '{other}'"))),
        }
    }
}

/// Random stream for one group of one replication.
pub fn substream(seed: u64, replication: u64, group: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&replication.to_le_bytes());
    key[16..24].copy_from_slice(&group.to_le_bytes());
    key[24..].copy_from_slice(b"tailtrnd");
    ChaCha8Rng::from_seed(key)
}

/// Inverse-transform draw for a uniform `u` in `[0, 1)`.
pub fn base_quantile(family: Family, gamma: f64, u: f64) -> f64 {
    match family {
        Family::Gpd => {
            let log_tail = (-u).ln_1p();
            if gamma == 0.0 {
                -log_tail
            } else {
                (-gamma * log_tail).exp_m1() / gamma
            }
        }
        Family::Pareto => (-gamma * (-u).ln_1p()).exp(),
        Family::Cauchy => (std::f64::consts::PI * (u - 0.5)).tan(),
    }
}

pub fn sample_base<R: Rng + ?Sized>(family: Family, gamma: f64, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| base_quantile(family, gamma, rng.random::<f64>()))
        .collect()
}

/// Maps base draws to the law at time `s`, whose exceedance probabilities are
/// `exp(c s)` times those of the base law in the tail.
pub fn inject_trend(family: Family, gamma: f64, c: f64, s: f64, draws: &mut [f64]) {
    match family {
        Family::Gpd => {
            if gamma == 0.0 {
                let shift = c * s;
                draws.iter_mut().for_each(|x| *x += shift);
            } else {
                let u = c * s * gamma;
                let (scale, shift) = (u.exp(), u.exp_m1() / gamma);
                draws.iter_mut().for_each(|x| *x = scale * *x + shift);
            }
        }
        Family::Pareto => {
            let scale = (c * s * gamma).exp();
            draws.iter_mut().for_each(|x| *x *= scale);
        }
        Family::Cauchy => {
            let scale = (c * s).exp();
            draws.iter_mut().for_each(|x| *x *= scale);
        }
    }
}

fn default_k_grid() -> Vec<usize> {
    (5..=100).step_by(5).collect()
}

fn default_seed() -> u64 {
    1
}

fn default_gamma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimDesign {
    pub family: Family,
    /// Ignored for `cauchy`.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub c: f64,
    pub n: usize,
    pub m: usize,
    pub replications: usize,
    #[serde(default = "default_k_grid")]
    pub k_grid: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDesign(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.m == 0 {
            return bad("m must be positive".into());
        }
        if self.replications == 0 {
            return bad("replications must be positive".into());
        }
        if self.k_grid.is_empty() {
            return bad("k_grid must not be empty".into());
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k == 0 || k >= self.n) {
            return bad(format!("k = {k} must satisfy 1 <= k < n = {}", self.n));
        }
        if !self.c.is_finite() || !self.gamma.is_finite() {
            return bad("c and gamma must be finite".into());
        }
        if self.family == Family::Pareto && self.gamma <= 0.0 {
            return bad(format!("pareto needs gamma > 0, got {}", self.gamma));
        }
        Ok(())
    }

    pub fn effective_gamma(&self) -> f64 {
        self.family.effective_gamma(self.gamma)
    }

    /// Panel of replication `rep`: `m + 1` groups at `s_j = j / m`.
    pub fn panel(&self, rep: usize) -> Result<SamplePanel> {
        let gamma = self.effective_gamma();
        let samples = (0..=self.m)
            .map(|j| {
                let mut rng = substream(self.seed, rep as u64, j as u64);
                let mut draws = sample_base(self.family, gamma, self.n, &mut rng);
                let s = j as f64 / self.m as f64;
                inject_trend(self.family, gamma, self.c, s, &mut draws);
                draws
            })
            .collect();
        SamplePanel::equally_spaced(samples)
    }
}

/// Summary of one estimator at one `k` across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimRow {
    pub k: usize,
    pub estimator: Estimator,
    /// Mean over successful replications; `None` if none succeeded.
    pub mean: Option<f64>,
    /// Sample standard deviation over successful replications.
    pub sd: Option<f64>,
    pub successes: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub design: SimDesign,
    pub rows: Vec<SimRow>,
}

impl SimResult {
    pub fn row(&self, k: usize, estimator: Estimator) -> Option<&SimRow> {
        self.rows
            .iter()
            .find(|r| r.k == k && r.estimator == estimator)
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
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

fn summarize(k: usize, estimator: Estimator, estimates: &[Option<f64>]) -> SimRow {
    let ok: Vec<f64> = estimates.iter().flatten().copied().collect();
    let successes = ok.len();
    let mean = (successes > 0).then(|| compensated_sum(ok.iter().copied()) / successes as f64);
    let sd = mean.filter(|_| successes > 1).map(|mu| {
        let ss = compensated_sum(ok.iter().map(|x| (x - mu) * (x - mu)));
        (ss / (successes - 1) as f64).sqrt()
    });
    SimRow {
        k,
        estimator,
        mean,
        sd,
        successes,
        errors: estimates.len() - successes,
    }
}

/// Estimates of one replication: `[k index][estimator index]`.
type RepEstimates = Vec<[Option<f64>; 3]>;

fn run_replication(design: &SimDesign, rep: usize) -> Result<RepEstimates> {
    let panel = design.panel(rep)?;
    Ok(design
        .k_grid
        .iter()
        .map(|&k| Estimator::ALL.map(|e| estimate(&panel, k, e).ok().map(|f| f.c_hat)))
        .collect())
}

pub fn run_design(design: &SimDesign) -> Result<SimResult> {
    run_design_with_progress(design, |_| {})
}

/// As [`run_design`], calling `progress(done)` after each replication finishes.
pub fn run_design_with_progress<F>(design: &SimDesign, progress: F) -> Result<SimResult>
where
    F: Fn(usize) + Sync,
{
    design.validate()?;
    let done = AtomicUsize::new(0);
    let per_rep: Vec<RepEstimates> = (0..design.replications)
        .into_par_iter()
        .map(|rep| {
            let out = run_replication(design, rep);
            progress(done.fetch_add(1, Ordering::Relaxed) + 1);
            out
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(design.k_grid.len() * 3);
    for (ki, &k) in design.k_grid.iter().enumerate() {
        for (ei, &estimator) in Estimator::ALL.iter().enumerate() {
            let column: Vec<Option<f64>> = per_rep.iter().map(|r| r[ki][ei]).collect();
            rows.push(summarize(k, estimator, &column));
        }
    }
    Ok(SimResult {
        design: design.clone(),
        rows,
    })
}
