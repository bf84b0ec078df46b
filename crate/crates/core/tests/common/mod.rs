//! Test-only reference implementations. Everything here is written straight
//! from the formulas, working on raw (unsorted) group data with full sorts and
//! 1-based order-statistic indexing, and shares no code with the library.
#![allow(dead_code)]

pub mod oracle {
    /// `X_{i,n}` with 1-based `i`, via a full sort.
    pub fn order_stat(values: &[f64], i: usize) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[i - 1]
    }

    /// `X_{n-k,n}`.
    pub fn threshold(values: &[f64], k: usize) -> f64 {
        order_stat(values, values.len() - k)
    }

    /// `M^(r) = (1/k) sum_{i=0}^{k-1} (log X_{n-i,n} - log X_{n-k,n})^r`.
    pub fn log_moment(values: &[f64], k: usize, r: i32) -> f64 {
        let n = values.len();
        let base = order_stat(values, n - k).ln();
        let mut total = 0.0;
        for i in 0..k {
            total += (order_stat(values, n - i).ln() - base).powi(r);
        }
        total / k as f64
    }

    pub fn hill(values: &[f64], k: usize) -> f64 {
        let n = values.len();
        let mut logs = 0.0;
        for i in 0..k {
            logs += order_stat(values, n - i).ln();
        }
        logs / k as f64 - order_stat(values, n - k).ln()
    }

    pub fn moment(values: &[f64], k: usize) -> f64 {
        let m1 = log_moment(values, k, 1);
        let m2 = log_moment(values, k, 2);
        m1 + 1.0 - 0.5 / (1.0 - m1 * m1 / m2)
    }

    pub fn scale(values: &[f64], k: usize) -> f64 {
        let m1 = log_moment(values, k, 1);
        let m2 = log_moment(values, k, 2);
        let gamma_minus = 1.0 - 0.5 / (1.0 - m1 * m1 / m2);
        threshold(values, k) * m1 * (1.0 - gamma_minus)
    }

    /// `groups[0]` sits at `s = 0`; `s` holds `s_1..s_m`.
    pub fn c1(groups: &[Vec<f64>], s: &[f64], k: usize) -> f64 {
        let m = s.len();
        let mut gamma_plus = 0.0;
        for j in 1..=m {
            gamma_plus += hill(&groups[j], k);
        }
        gamma_plus /= m as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 1..=m {
            num += s[j - 1] * (threshold(&groups[j], k).ln() - threshold(&groups[0], k).ln());
            den += s[j - 1] * s[j - 1];
        }
        num / (gamma_plus * den)
    }

    pub fn combined_moment(groups: &[Vec<f64>], k: usize) -> f64 {
        let m = groups.len() - 1;
        (1..=m).map(|j| moment(&groups[j], k)).sum::<f64>() / m as f64
    }

    pub fn c2(groups: &[Vec<f64>], s: &[f64], k: usize) -> f64 {
        let gamma = combined_moment(groups, k);
        let a0 = scale(&groups[0], k);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 1..=s.len() {
            let dx = threshold(&groups[j], k) - threshold(&groups[0], k);
            num += s[j - 1] * (1.0 + gamma * dx / a0).ln() / gamma;
            den += s[j - 1] * s[j - 1];
        }
        num / den
    }

    pub fn count_above(values: &[f64], level: f64) -> usize {
        values.iter().filter(|&&x| x > level).count()
    }

    pub fn c3(groups: &[Vec<f64>], s: &[f64], k: usize) -> f64 {
        let level = threshold(&groups[0], k);
        let mut num = 0.0;
        for j in 1..=s.len() {
            num += (count_above(&groups[j], level) as f64 / k as f64).ln();
        }
        num / s.iter().sum::<f64>()
    }

    pub fn q1(groups: &[Vec<f64>], k: usize) -> f64 {
        let m = groups.len() - 1;
        let gamma_plus = (1..=m).map(|j| hill(&groups[j], k)).sum::<f64>() / m as f64;
        let mut q = 0.0;
        for j in 1..=m {
            let d = (threshold(&groups[j], k).ln() - threshold(&groups[0], k).ln()) / gamma_plus;
            q += k as f64 / 2.0 * d * d;
        }
        q
    }

    pub fn q2(groups: &[Vec<f64>], k: usize) -> f64 {
        let level = threshold(&groups[0], k);
        let mut q = 0.0;
        for g in &groups[1..] {
            let d = count_above(g, level) as f64 / k as f64 - 1.0;
            q += k as f64 / 2.0 * d * d;
        }
        q
    }

    pub fn var_c1(c: f64, gamma_plus: f64, s: &[f64]) -> f64 {
        let m = s.len() as f64;
        let s1: f64 = s.iter().sum();
        let s2: f64 = s.iter().map(|x| x * x).sum();
        1.0 / (s2 * s2) * (1.0 / (gamma_plus * gamma_plus)) * (s2 + s1 * s1) + c * c / m
    }

    pub fn var_c3(c: f64, s: &[f64]) -> f64 {
        let s1: f64 = s.iter().sum();
        s.iter().map(|x| 1.0 + (-c * x).exp()).sum::<f64>() / (s1 * s1)
    }

    pub fn sigma_gamma_sq(g: f64) -> f64 {
        if g >= 0.0 {
            1.0 + g * g
        } else {
            (1.0 - g) * (1.0 - g) * (1.0 - 2.0 * g) * (1.0 - g + 6.0 * g * g)
                / ((1.0 - 3.0 * g) * (1.0 - 4.0 * g))
        }
    }

    pub fn sigma_a0_sq(g: f64) -> f64 {
        if g >= 0.0 {
            2.0 + g * g
        } else {
            (2.0 - 16.0 * g + 51.0 * g * g - 69.0 * g * g * g + 50.0 * g * g * g * g
                - 24.0 * g * g * g * g * g)
                / ((1.0 - 2.0 * g) * (1.0 - 3.0 * g) * (1.0 - 4.0 * g))
        }
    }

    /// Direct evaluation; only meaningful away from `gamma = 0`.
    pub fn var_c2(c: f64, g: f64, s: &[f64]) -> f64 {
        let m = s.len() as f64;
        let s2: f64 = s.iter().map(|x| x * x).sum();
        let a: f64 = s
            .iter()
            .map(|x| x * (1.0 - (-c * g * x).exp() - c * g * x) / (g * g))
            .sum();
        let b: f64 = s.iter().map(|x| x * (-c * g * x).exp()).sum();
        let d: f64 = s.iter().map(|x| x * (1.0 - (-c * g * x).exp()) / g).sum();
        (a * a * sigma_gamma_sq(g) / m + s2 + b * b + d * d * sigma_a0_sq(g)) / (s2 * s2)
    }

    pub fn se_c2(c: f64, g: f64, s: &[f64], k: usize) -> f64 {
        let m = s.len() as f64;
        let s2: f64 = s.iter().map(|x| x * x).sum();
        let mut a = 0.0;
        let mut b = 0.0;
        let mut d = 0.0;
        for &x in s {
            let e = (-c * g * x).exp();
            a += x * (1.0 - e - c * g * x) / (g * g);
            b += x * e;
            d += x * (1.0 - e) / g;
        }
        let inner = a * a * sigma_gamma_sq(g) / m + s2 + b * b + d * d * sigma_a0_sq(g);
        1.0 / (k as f64).sqrt() * (1.0 / s2) * inner.sqrt()
    }
}

pub mod stats {
    pub fn mean(x: &[f64]) -> f64 {
        x.iter().sum::<f64>() / x.len() as f64
    }

    pub fn sd(x: &[f64]) -> f64 {
        let mu = mean(x);
        (x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
    }

    pub fn median(x: &[f64]) -> f64 {
        let mut v = x.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    /// One-sample Kolmogorov-Smirnov distance against `cdf`.
    pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let mut v = sample.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        v.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                f64::max((i + 1) as f64 / n - f, f - i as f64 / n)
            })
            .fold(0.0, f64::max)
    }

    /// Asymptotic p-value of the KS distance `d` for sample size `n`.
    pub fn ks_p_value(d: f64, n: usize) -> f64 {
        let sn = (n as f64).sqrt();
        let lambda = (sn + 0.12 + 0.11 / sn) * d;
        let mut sum = 0.0;
        for j in 1..=100 {
            let j = j as f64;
            let term = 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
            sum += term;
            if term.abs() < 1e-12 {
                break;
            }
        }
        sum.clamp(0.0, 1.0)
    }

    /// `|a - b| / max(|a|, |b|)`, with equal values (including zeros) giving 0.
    pub fn rel_err(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }
}
