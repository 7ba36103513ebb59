//! Statistical machinery that turns distributional claims into pass/fail
//! checks: Hurst estimation, empirical characteristic functions,
//! Kolmogorov-Smirnov tests, and covariance estimates with Monte Carlo
//! errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walks::RealPath;

/// Result of a log-log self-similarity regression.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HurstReport {
    pub estimate: f64,
    pub stderr: f64,
    pub method: String,
    /// Times (dyadic) used as regression abscissae.
    pub scales: Vec<f64>,
}

/// Real part of an empirical characteristic function on a theta grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EcfReport {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
}

/// Two-sided KS test outcome with the asymptotic p-value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: f64,
}

/// Covariance matrix over a time grid with jackknife standard errors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CovReport {
    pub times: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample mean together with its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    (mean(xs), (sample_var(xs) / xs.len() as f64).sqrt())
}

/// Sample variance together with its standard error (from the fourth moment).
pub fn variance_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let v = sample_var(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let se = ((m4 - v * v * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
    (v, se)
}

fn median_of(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Estimate a self-similarity exponent from an ensemble of paths on a common
/// uniform grid: ordinary least squares of `ln median |X_t|` against `ln t`
/// over dyadic times. The median is used instead of the mean so that
/// heavy-tailed (alpha < 2) marginals do not destabilize the regression.
pub fn estimate_hurst(ensemble: &[RealPath]) -> Result<HurstReport> {
    if ensemble.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "Hurst estimation needs >= 100 paths, got {}",
            ensemble.len()
        )));
    }
    let steps = ensemble[0].steps();
    let dt = ensemble[0].dt();
    if ensemble.iter().any(|p| p.steps() != steps || p.dt() != dt) {
        return Err(Error::InvalidParameter("ensemble paths must share one grid".into()));
    }
    // Dyadic indices n, n/2, n/4, ... (at most 6 scales, at least 4).
    let mut indices = Vec::new();
    let mut k = steps;
    while k >= 1 && indices.len() < 6 {
        indices.push(k);
        k /= 2;
    }
    if indices.len() < 4 {
        return Err(Error::InvalidParameter("need >= 4 dyadic scales".into()));
    }
    let mut xs = Vec::with_capacity(indices.len());
    let mut ys = Vec::with_capacity(indices.len());
    let mut scales = Vec::with_capacity(indices.len());
    for &idx in &indices {
        let med = median_of(ensemble.iter().map(|p| p.values()[idx].abs()).collect());
        if !(med > 0.0 && med.is_finite()) {
            return Err(Error::Estimation(format!(
                "degenerate ensemble: median |X_t| = {med} at t = {}",
                idx as f64 * dt
            )));
        }
        scales.push(idx as f64 * dt);
        xs.push((idx as f64 * dt).ln());
        ys.push(med.ln());
    }
    let xm = mean(&xs);
    let ym = mean(&ys);
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = ym + slope * (x - xm);
            (y - fit) * (y - fit)
        })
        .sum();
    let dof = (xs.len() - 2) as f64;
    let stderr = (rss / dof / sxx).sqrt().max(1e-12);
    Ok(HurstReport { estimate: slope, stderr, method: "median-abs log-log".into(), scales })
}

/// Empirical characteristic function (real part) on a theta grid.
pub fn ecf(samples: &[f64], thetas: &[f64]) -> Result<EcfReport> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("ecf needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    let mut values = Vec::with_capacity(thetas.len());
    let mut stderrs = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        if theta == 0.0 {
            values.push(1.0);
            stderrs.push(0.0);
            continue;
        }
        let cos: Vec<f64> = samples.iter().map(|x| (theta * x).cos()).collect();
        let m = mean(&cos);
        values.push(m);
        stderrs.push((sample_var(&cos) / n).sqrt());
    }
    Ok(EcfReport { thetas: thetas.to_vec(), values, stderrs })
}

/// Sup distance between two ecf reports on the same theta grid.
pub fn ecf_distance(a: &EcfReport, b: &EcfReport) -> Result<f64> {
    if a.thetas != b.thetas {
        return Err(Error::InvalidParameter("ecf reports use different theta grids".into()));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Asymptotic Kolmogorov distribution tail `Q(lambda)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// p-value for a KS statistic at effective sample size `n_eff`
/// (Stephens' small-sample correction on the asymptotic law).
pub fn ks_p_value(statistic: f64, n_eff: f64) -> f64 {
    let sqrt_n = n_eff.sqrt();
    kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic)
}

/// Two-sample KS statistic sup |F1 - F2|. Ties are stepped over jointly so
/// that discrete samples (lattice increments) are handled correctly.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a: Vec<f64> = a.to_vec();
    let mut b: Vec<f64> = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Reference distribution for a KS test.
pub enum KsReference<'a> {
    Samples(&'a [f64]),
    Cdf(&'a dyn Fn(f64) -> f64),
}

/// One- or two-sample KS test with asymptotic p-value.
pub fn ks_test(samples: &[f64], reference: KsReference<'_>) -> Result<KsResult> {
    if samples.len() < 50 {
        return Err(Error::InvalidParameter("KS test needs >= 50 samples".into()));
    }
    match reference {
        KsReference::Samples(other) => {
            if other.len() < 50 {
                return Err(Error::InvalidParameter("KS test needs >= 50 samples".into()));
            }
            let d = ks_two_sample_statistic(samples, other);
            let n_eff =
                (samples.len() * other.len()) as f64 / (samples.len() + other.len()) as f64;
            Ok(KsResult { statistic: d, p_value: ks_p_value(d, n_eff), n_effective: n_eff })
        }
        KsReference::Cdf(cdf) => {
            let mut xs = samples.to_vec();
            xs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let n = xs.len() as f64;
            let mut d: f64 = 0.0;
            for (i, x) in xs.iter().enumerate() {
                let f = cdf(*x);
                d = d.max((f - i as f64 / n).abs());
                d = d.max(((i + 1) as f64 / n - f).abs());
            }
            Ok(KsResult { statistic: d, p_value: ks_p_value(d, n), n_effective: n })
        }
    }
}

/// Centered covariance of two coordinates with jackknife standard error.
pub fn cov_stderr(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    assert_eq!(n, ys.len());
    assert!(n >= 3);
    let nf = n as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let cov = (sxy - sx * sy / nf) / (nf - 1.0);
    // Leave-one-out covariances in O(1) each from the running sums.
    let mut loo = Vec::with_capacity(n);
    for i in 0..n {
        let sx_i = sx - xs[i];
        let sy_i = sy - ys[i];
        let sxy_i = sxy - xs[i] * ys[i];
        loo.push((sxy_i - sx_i * sy_i / (nf - 1.0)) / (nf - 2.0));
    }
    let lm = mean(&loo);
    let se = ((nf - 1.0) / nf * loo.iter().map(|c| (c - lm) * (c - lm)).sum::<f64>()).sqrt();
    (cov, se)
}

/// Covariance matrix of ensemble values at the given time indices.
///
/// `rows` holds one replicate per entry, each with a value per time point.
pub fn cov_matrix(rows: &[Vec<f64>], times: &[f64]) -> Result<CovReport> {
    if rows.len() < 50 {
        return Err(Error::InvalidParameter("covariance needs >= 50 replicates".into()));
    }
    let k = times.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("replicate rows must match the time grid".into()));
    }
    let mut cov = vec![vec![0.0; k]; k];
    let mut stderr = vec![vec![0.0; k]; k];
    for i in 0..k {
        let xi: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        for j in i..k {
            let xj: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let (c, se) = cov_stderr(&xi, &xj);
            cov[i][j] = c;
            cov[j][i] = c;
            stderr[i][j] = se;
            stderr[j][i] = se;
        }
    }
    Ok(CovReport { times: times.to_vec(), cov, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::walks::TimeGrid;
    use rand_distr::{Distribution, StandardNormal};

    fn stream() -> RandomStream {
        RandomStream::new(0x57a7_57a7_57a7_57a7)
    }

    #[test]
    fn exact_line_gives_unit_slope() {
        let mut paths = Vec::new();
        for r in 0..120 {
            let c = 0.5 + r as f64 / 60.0;
            let values: Vec<f64> = (0..=64).map(|k| c * k as f64 / 64.0).collect();
            paths.push(RealPath::new(1.0 / 64.0, values).unwrap());
        }
        let rep = estimate_hurst(&paths).unwrap();
        assert!((rep.estimate - 1.0).abs() < 1e-12, "slope {}", rep.estimate);
        assert!(rep.stderr > 0.0);
    }

    #[test]
    fn hurst_is_scale_invariant() {
        let grid = TimeGrid::unit(256).unwrap();
        let mut paths = Vec::new();
        for r in 0..150 {
            paths.push(crate::rng::gen_fbm_path(0.5, &grid, &stream().child("si", r)).unwrap());
        }
        let base = estimate_hurst(&paths).unwrap();
        let scaled: Vec<RealPath> = paths
            .iter()
            .map(|p| {
                RealPath::new(p.dt(), p.values().iter().map(|v| 3.7 * v).collect()).unwrap()
            })
            .collect();
        let rep = estimate_hurst(&scaled).unwrap();
        assert!((rep.estimate - base.estimate).abs() < 1e-12);
    }

    #[test]
    fn brownian_ensemble_hurst() {
        let grid = TimeGrid::unit(1 << 12).unwrap();
        let mut paths = Vec::new();
        for r in 0..1000 {
            paths.push(crate::rng::gen_fbm_path(0.5, &grid, &stream().child("bm", r)).unwrap());
        }
        let rep = estimate_hurst(&paths).unwrap();
        assert!((rep.estimate - 0.5).abs() < 0.03, "estimate {}", rep.estimate);
    }

    #[test]
    fn fbm_quarter_ensemble_hurst() {
        let grid = TimeGrid::unit(1 << 10).unwrap();
        let mut paths = Vec::new();
        for r in 0..2000 {
            paths.push(crate::rng::gen_fbm_path(0.25, &grid, &stream().child("fq", r)).unwrap());
        }
        let rep = estimate_hurst(&paths).unwrap();
        assert!((rep.estimate - 0.25).abs() < 0.03, "estimate {}", rep.estimate);
    }

    #[test]
    fn degenerate_ensemble_is_an_error() {
        let paths: Vec<RealPath> =
            (0..120).map(|_| RealPath::new(0.1, vec![0.0; 17]).unwrap()).collect();
        assert!(matches!(estimate_hurst(&paths), Err(Error::Estimation(_))));
    }

    #[test]
    fn ecf_basics() {
        let zeros = vec![0.0; 100];
        let rep = ecf(&zeros, &[0.0, 0.7, 2.0]).unwrap();
        assert_eq!(rep.values, vec![1.0, 1.0, 1.0]);

        let mut rng = stream().child("ecf", 0).rng();
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                std::f64::consts::SQRT_2 * z
            })
            .collect();
        let rep = ecf(&xs, &[1.0]).unwrap();
        let target = (-1.0f64).exp();
        assert!(
            (rep.values[0] - target).abs() < 3.0 * rep.stderrs[0],
            "ecf {} vs {target}",
            rep.values[0]
        );

        let a = ecf(&xs, &[0.5, 1.0]).unwrap();
        let b = ecf(&xs, &[0.5, 1.0]).unwrap();
        assert_eq!(ecf_distance(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn ecf_is_symmetric_under_sign_flip() {
        let mut rng = stream().child("sym", 0).rng();
        let xs: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let thetas = [0.3, 1.1, 2.7];
        let a = ecf(&xs, &thetas).unwrap();
        let b = ecf(&neg, &thetas).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn ks_self_test_is_zero() {
        let mut rng = stream().child("ks0", 0).rng();
        let xs: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let res = ks_test(&xs, KsReference::Samples(&xs)).unwrap();
        assert_eq!(res.statistic, 0.0);
    }

    #[test]
    fn ks_normal_calibration() {
        use statrs::distribution::ContinuousCDF;
        let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
        let mut rng = stream().child("ksn", 0).rng();
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let res = ks_test(&xs, KsReference::Cdf(&|x| normal.cdf(x))).unwrap();
        assert!(res.p_value > 0.01, "p = {}", res.p_value);
    }

    #[test]
    fn brownian_covariance_matrix() {
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let rows: Vec<Vec<f64>> = (0..4000)
            .map(|r| {
                let p = crate::rng::gen_fbm_path(0.5, &grid, &stream().child("cv", r)).unwrap();
                vec![p.value_at(0.5).unwrap(), p.value_at(1.0).unwrap()]
            })
            .collect();
        let rep = cov_matrix(&rows, &[0.5, 1.0]).unwrap();
        assert!(
            (rep.cov[0][1] - 0.5).abs() < 3.0 * rep.stderr[0][1],
            "cov {} vs 0.5 (se {})",
            rep.cov[0][1],
            rep.stderr[0][1]
        );
    }
}
