use serde::Serialize;

use super::lattice::walk_endpoint;
use super::rng::{map_paths, mean_stderr};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    use std::f64::consts::PI;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form, fast for small lambda
        let y = -PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            s += (k * k * y).exp();
        }
        (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            s += if j % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// `Q((sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D)`, `ne = n m / (n + m)`.
/// Ties, including atoms shared by both samples, are handled exactly in `D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = a[i].min(b[j]);
        while i < na && a[i] <= x {
            i += 1;
        }
        while j < nb && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    let en = ne.sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTimeRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Means of `(2N-1) N^-2 T(0, N+1; N^2 t; Y^rf)` across lattice sizes and the
/// Cauchy check on the last three of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTimeCauchy {
    pub t: f64,
    pub r: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub rows: Vec<LocalTimeRow>,
    /// `|m_b - m_c|` for the last two sizes.
    pub late_gap: f64,
    /// `|m_a - m_b|` for the preceding pair.
    pub early_gap: f64,
    /// Root-sum-square of the three standard errors involved.
    pub pooled_stderr: f64,
    pub pass: bool,
}

/// Rescaled wall time of the reflected walk started at the site nearest
/// `r (N+1)`, one sample per path. Path `i` uses the same stream for every `N`.
pub fn rescaled_wall_time_samples(n: usize, r: f64, t: f64, n_paths: usize, seed: u64) -> Vec<f64> {
    let nf = n as f64;
    let x0 = (r * (nf + 1.0)).round() as usize;
    let horizon = nf * nf * t;
    map_paths(n_paths, seed, |rng| {
        let (_, wall) = walk_endpoint(n, x0, horizon, 1.0, rng);
        (2.0 * nf - 1.0) / (nf * nf) * wall
    })
}

pub fn local_time_cauchy(
    ns: &[usize],
    r: f64,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<LocalTimeCauchy> {
    if ns.len() < 3 {
        return Err(Error::config("the Cauchy check needs at least three lattice sizes"));
    }
    if ns.iter().any(|&n| n < 2) {
        return Err(Error::config("lattice sizes must be at least 2"));
    }
    if !(0.0..=1.0).contains(&r) || !(t > 0.0) {
        return Err(Error::config(format!("need r in [0, 1] and t > 0, got r = {r}, t = {t}")));
    }
    if n_paths < 2 {
        return Err(Error::config("need at least two paths"));
    }
    let rows: Vec<LocalTimeRow> = ns
        .iter()
        .map(|&n| {
            let (mean, stderr) = mean_stderr(&rescaled_wall_time_samples(n, r, t, n_paths, seed));
            LocalTimeRow { n, mean, stderr }
        })
        .collect();
    let k = rows.len();
    let (a, b, c) = (&rows[k - 3], &rows[k - 2], &rows[k - 1]);
    let late_gap = (b.mean - c.mean).abs();
    let early_gap = (a.mean - b.mean).abs();
    let pooled_stderr = (a.stderr.powi(2) + b.stderr.powi(2) + c.stderr.powi(2)).sqrt();
    Ok(LocalTimeCauchy {
        t,
        r,
        n_paths,
        seed,
        pass: late_gap < early_gap + 3.0 * pooled_stderr,
        rows,
        late_gap,
        early_gap,
        pooled_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_join() {
        let lo = kolmogorov_q(1.18 - 1e-9);
        let hi = kolmogorov_q(1.18 + 1e-9);
        assert!((lo - hi).abs() < 1e-8);
        // tabulated critical values
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 2e-4);
        assert!(kolmogorov_q(0.3) > 0.9999);
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let a: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 2000.0).collect();
        let b: Vec<f64> = (0..1500).map(|i| (i as f64 + 0.3) / 1500.0).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.5);
        let c: Vec<f64> = b.iter().map(|x| x + 0.1).collect();
        let r = ks_two_sample(&a, &c);
        assert!((r.statistic - 0.1).abs() < 2e-3);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn ks_handles_shared_atoms() {
        let a = [0.0, 0.0, 0.0, 0.5, 1.0];
        let b = [0.0, 0.0, 0.0, 0.5, 1.0];
        assert_eq!(ks_two_sample(&a, &b).statistic, 0.0);
    }

    #[test]
    fn rescaled_wall_time_approaches_exact_mean() {
        // E L_1 from r = 1/2 for reflected motion on [0, 1]
        let exact = super::super::reflected::reflected_local_time_mean(0.5, 1.0);
        let s = rescaled_wall_time_samples(80, 0.5, 1.0, 2000, 3);
        let (m, se) = mean_stderr(&s);
        // lattice of N+2 sites rescaled by N: relative bias O(1/N)
        assert!((m - exact).abs() < 3.0 * se + 3.0 * exact / 80.0, "{m} +- {se} vs {exact}");
    }
}
