//! Seeded, reproducible random sources.
//!
//! Everything stochastic in this crate flows through [`RandomStream`]: a
//! master seed plus an ordered lineage of `(tag, index)` derivation steps.
//! Equal `(seed, lineage)` pairs yield bit-identical draws; distinct
//! lineages yield statistically independent ChaCha12 streams, so replicate
//! loops can run in any order (or in parallel) without changing results.
//!
//! Scale convention: a symmetric alpha-stable variable with scale `sigma`
//! has characteristic function `exp(-sigma^alpha |theta|^alpha)`. For
//! `alpha = 2` this makes the variance `2 sigma^2`, not `sigma^2`; every
//! distributional check in this crate accounts for that factor.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::walks::{RealPath, TimeGrid};

/// Largest sequence length accepted by the dense fractional Gaussian noise
/// fallback (the Levinson recursion is O(n^2)).
pub const FGN_DENSE_FALLBACK_MAX: usize = 1 << 13;

/// Circulant eigenvalues in `[-NEG_EIGENVALUE_TOL, 0)` are clamped to zero;
/// anything more negative triggers the dense fallback.
pub const NEG_EIGENVALUE_TOL: f64 = 1e-10;

/// A reproducible random source: master seed plus derivation lineage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomStream {
    master_seed: u64,
    lineage: Vec<(String, u64)>,
}

impl RandomStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, lineage: Vec::new() }
    }

    /// Derive an independent child stream for `(tag, index)`.
    pub fn child(&self, tag: &str, index: u64) -> Self {
        let mut lineage = self.lineage.clone();
        lineage.push((tag.to_string(), index));
        Self { master_seed: self.master_seed, lineage }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn lineage(&self) -> &[(String, u64)] {
        &self.lineage
    }

    /// 32-byte key identifying this stream (SHA-256 of seed and lineage).
    pub fn key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        for (tag, index) in &self.lineage {
            hasher.update((tag.len() as u64).to_le_bytes());
            hasher.update(tag.as_bytes());
            hasher.update(index.to_le_bytes());
        }
        hasher.finalize().into()
    }

    /// Fresh generator positioned at the start of this stream's sequence.
    ///
    /// Calling `rng()` twice gives two identical generators; callers wanting
    /// distinct randomness must derive distinct children.
    pub fn rng(&self) -> ChaCha12Rng {
        ChaCha12Rng::from_seed(self.key())
    }
}

/// Parameters of a symmetric alpha-stable law, cf `exp(-sigma^alpha |theta|^alpha)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableParams {
    pub alpha: f64,
    pub sigma: f64,
}

impl StableParams {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "stability index alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale sigma must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self { alpha, sigma })
    }
}

/// One standard (sigma = 1) symmetric alpha-stable draw via the
/// Chambers-Mallows-Stuck transform.
pub(crate) fn sas_standard<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    // V uniform on (-pi/2, pi/2), W standard exponential; both open at 0.
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let v = PI * (u - 0.5);
    let w: f64 = loop {
        let e = rng.random::<f64>();
        if e > 0.0 {
            break -e.ln();
        }
    };
    if alpha == 1.0 {
        // Symmetric case degenerates to the Cauchy law.
        return v.tan();
    }
    if alpha == 2.0 {
        // CMS at alpha = 2 reduces to N(0, 2) exactly.
        return 2.0 * v.sin() * w.sqrt();
    }
    let s = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let t = ((1.0 - alpha) * v).cos() / w;
    s * t.powf((1.0 - alpha) / alpha)
}

/// `n` i.i.d. symmetric alpha-stable draws with the given parameters.
pub fn sample_sas(params: StableParams, n: usize, stream: &RandomStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let mut rng = stream.rng();
    Ok((0..n).map(|_| params.sigma * sas_standard(params.alpha, &mut rng)).collect())
}

/// Reward laws available for sceneries.
///
/// All three are symmetric and normalized so that partial sums divided by
/// `n^{1/alpha}` converge to the sigma = 1 stable law: for `gaussian` and
/// `rademacher` (alpha = 2 only) that means per-draw variance 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneryLaw {
    ExactStable,
    Gaussian,
    Rademacher,
}

impl SceneryLaw {
    pub fn validate(self, alpha: f64) -> Result<()> {
        match self {
            SceneryLaw::ExactStable => {
                StableParams::new(alpha, 1.0)?;
                Ok(())
            }
            SceneryLaw::Gaussian | SceneryLaw::Rademacher => {
                if alpha == 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "{self:?} scenery requires alpha = 2, got {alpha}"
                    )))
                }
            }
        }
    }

    pub(crate) fn draw<R: Rng>(self, alpha: f64, rng: &mut R) -> f64 {
        match self {
            SceneryLaw::ExactStable => sas_standard(alpha, rng),
            SceneryLaw::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                std::f64::consts::SQRT_2 * z
            }
            SceneryLaw::Rademacher => {
                if rng.random::<bool>() {
                    std::f64::consts::SQRT_2
                } else {
                    -std::f64::consts::SQRT_2
                }
            }
        }
    }
}

/// `n` i.i.d. draws from a scenery law.
pub fn sample_scenery_law(
    kind: SceneryLaw,
    alpha: f64,
    n: usize,
    stream: &RandomStream,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    kind.validate(alpha)?;
    let mut rng = stream.rng();
    Ok((0..n).map(|_| kind.draw(alpha, &mut rng)).collect())
}

/// Autocovariance of fractional Gaussian noise at lag `k` (unit variance of
/// the unit-spacing increment, so partial sums have variance `n^{2H}`).
pub fn fgn_autocovariance(hurst: f64, k: u64) -> f64 {
    let k = k as f64;
    let two_h = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn validate_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("Hurst index must lie in (0, 1), got {hurst}")))
    }
}

/// Cache of circulant eigenvalues keyed by (half-size, Hurst bits): they are
/// a deterministic function of (n, H) and dominate the cost of repeated
/// path generation in ensemble runs.
fn circulant_eigenvalues(m: usize, hurst: f64) -> std::sync::Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), std::sync::Arc<Vec<f64>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(m, hurst.to_bits())) {
        return hit.clone();
    }
    let size = 2 * m;
    let mut row: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); size];
    for (j, cell) in row.iter_mut().enumerate().take(m + 1) {
        *cell = Complex64::new(fgn_autocovariance(hurst, j as u64), 0.0);
    }
    for j in 1..m {
        row[size - j] = row[j];
    }
    let fft = FftPlanner::new().plan_fft_forward(size);
    fft.process(&mut row);
    let eigen: Vec<f64> = row.iter().map(|c| c.re).collect();
    let arc = std::sync::Arc::new(eigen);
    cache.lock().unwrap().insert((m, hurst.to_bits()), arc.clone());
    arc
}

/// Davies-Harte synthesis from clamped circulant eigenvalues. Returns `None`
/// when some eigenvalue is below `-NEG_EIGENVALUE_TOL`.
fn fgn_circulant(hurst: f64, n: usize, rng: &mut ChaCha12Rng) -> Option<Vec<f64>> {
    let m = n.next_power_of_two();
    let size = 2 * m;
    let eigen = circulant_eigenvalues(m, hurst);
    let min = eigen.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -NEG_EIGENVALUE_TOL {
        return None;
    }
    let lam = |k: usize| eigen[k].max(0.0);

    let mut coeff: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); size];
    let g0: f64 = StandardNormal.sample(rng);
    let gm: f64 = StandardNormal.sample(rng);
    let norm = 1.0 / (size as f64);
    coeff[0] = Complex64::new((lam(0) * norm).sqrt() * g0, 0.0);
    coeff[m] = Complex64::new((lam(m) * norm).sqrt() * gm, 0.0);
    for k in 1..m {
        let a = (lam(k) * norm / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        coeff[k] = Complex64::new(a * re, a * im);
        coeff[size - k] = coeff[k].conj();
    }
    let fft = FftPlanner::new().plan_fft_forward(size);
    fft.process(&mut coeff);
    Some(coeff.iter().take(n).map(|c| c.re).collect())
}

/// Exact O(n^2) sequential sampler (Levinson recursion on the Toeplitz
/// covariance); the fallback when the circulant embedding fails.
fn fgn_levinson(hurst: f64, n: usize, rng: &mut ChaCha12Rng) -> Result<Vec<f64>> {
    if n > FGN_DENSE_FALLBACK_MAX {
        return Err(Error::Resource(format!(
            "dense fGn fallback supports n <= {FGN_DENSE_FALLBACK_MAX}, requested {n}"
        )));
    }
    let r: Vec<f64> = (0..n as u64).map(|k| fgn_autocovariance(hurst, k)).collect();
    let mut out = Vec::with_capacity(n);
    let z0: f64 = StandardNormal.sample(rng);
    out.push(z0 * r[0].sqrt());
    let mut phi = vec![0.0f64; n];
    let mut prev = vec![0.0f64; n];
    let mut var = r[0];
    for k in 1..n {
        let mut acc = r[k];
        for j in 1..k {
            acc -= prev[j] * r[k - j];
        }
        let refl = acc / var;
        phi[k] = refl;
        for j in 1..k {
            phi[j] = prev[j] - refl * prev[k - j];
        }
        var *= 1.0 - refl * refl;
        if var <= 0.0 {
            return Err(Error::Numeric("Levinson recursion lost positive definiteness".into()));
        }
        let mean: f64 = (1..=k).map(|j| phi[j] * out[k - j]).sum();
        let z: f64 = StandardNormal.sample(rng);
        out.push(mean + z * var.sqrt());
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    Ok(out)
}

/// `n` values of fractional Gaussian noise with Hurst index `hurst`.
///
/// The partial sum of the first `m` values has variance `m^{2H}` exactly in
/// law. `hurst = 1/2` short-circuits to white noise.
pub fn gen_fgn(hurst: f64, n: usize, stream: &RandomStream) -> Result<Vec<f64>> {
    validate_hurst(hurst)?;
    if n == 0 {
        return Err(Error::InvalidParameter("fGn length must be >= 1".into()));
    }
    let mut rng = stream.rng();
    if hurst == 0.5 {
        return Ok((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    match fgn_circulant(hurst, n, &mut rng) {
        Some(values) => Ok(values),
        None => fgn_levinson(hurst, n, &mut rng),
    }
}

/// Fractional Brownian motion sampled on a uniform grid starting at 0.
///
/// Covariance `(s^{2H} + t^{2H} - |t-s|^{2H}) / 2`; value 0 at t = 0.
pub fn gen_fbm_path(hurst: f64, grid: &TimeGrid, stream: &RandomStream) -> Result<RealPath> {
    validate_hurst(hurst)?;
    let noise = gen_fgn(hurst, grid.steps(), stream)?;
    let scale = grid.dt().powf(hurst);
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for x in noise {
        acc += scale * x;
        values.push(acc);
    }
    RealPath::new(grid.dt(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> RandomStream {
        RandomStream::new(0x5ce0_e9a5_6015_fec5)
    }

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    fn var(xs: &[f64]) -> f64 {
        let m = mean(xs);
        xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
    }

    #[test]
    fn identical_streams_are_bit_identical() {
        let params = StableParams::new(1.5, 1.0).unwrap();
        let a = sample_sas(params, 1000, &stream().child("x", 3)).unwrap();
        let b = sample_sas(params, 1000, &stream().child("x", 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_sas(params, 1000, &stream().child("x", 4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_case_has_variance_two() {
        let params = StableParams::new(2.0, 1.0).unwrap();
        let xs = sample_sas(params, 1_000_000, &stream().child("var2", 0)).unwrap();
        let v = var(&xs);
        assert!((v - 2.0).abs() / 2.0 < 0.01, "variance {v} not within 1% of 2");
    }

    #[test]
    fn cauchy_case_has_unit_quartiles() {
        // alpha = 1, sigma = 1 is the standard Cauchy; F(1) = 3/4 by the arctan law.
        let params = StableParams::new(1.0, 1.0).unwrap();
        let mut xs = sample_sas(params, 1_000_000, &stream().child("cauchy", 0)).unwrap();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q25 = xs[xs.len() / 4];
        let q75 = xs[3 * xs.len() / 4];
        assert!((q25 + 1.0).abs() < 0.02, "lower quartile {q25}");
        assert!((q75 - 1.0).abs() < 0.02, "upper quartile {q75}");
    }

    #[test]
    fn stable_cf_matches_target_at_theta_one() {
        let params = StableParams::new(1.5, 1.0).unwrap();
        let xs = sample_sas(params, 1_000_000, &stream().child("cf", 0)).unwrap();
        let cos: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
        let m = mean(&cos);
        let se = (var(&cos) / cos.len() as f64).sqrt();
        let target = (-1.0f64).exp();
        assert!((m - target).abs() < 3.0 * se, "ecf {m} vs {target} (se {se})");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StableParams::new(0.0, 1.0).is_err());
        assert!(StableParams::new(2.5, 1.0).is_err());
        assert!(StableParams::new(1.0, 0.0).is_err());
        assert!(sample_scenery_law(SceneryLaw::Gaussian, 1.5, 10, &stream()).is_err());
        assert!(sample_scenery_law(SceneryLaw::Rademacher, 1.9, 10, &stream()).is_err());
    }

    #[test]
    fn rademacher_is_two_point_symmetric() {
        let xs = sample_scenery_law(SceneryLaw::Rademacher, 2.0, 1000, &stream().child("rad", 0))
            .unwrap();
        let c = std::f64::consts::SQRT_2;
        assert!(xs.iter().all(|x| *x == c || *x == -c));
        assert!(xs.iter().any(|x| *x > 0.0) && xs.iter().any(|x| *x < 0.0));
    }

    #[test]
    fn gaussian_scenery_mean_is_zero() {
        let xs = sample_scenery_law(SceneryLaw::Gaussian, 2.0, 1_000_000, &stream().child("g", 0))
            .unwrap();
        let m = mean(&xs);
        let se = (var(&xs) / xs.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "mean {m} vs 0 (se {se})");
    }

    #[test]
    fn exact_stable_scenery_cf_at_theta_two() {
        let xs =
            sample_scenery_law(SceneryLaw::ExactStable, 1.2, 1_000_000, &stream().child("es", 0))
                .unwrap();
        let cos: Vec<f64> = xs.iter().map(|x| (2.0 * x).cos()).collect();
        let m = mean(&cos);
        let se = (var(&cos) / cos.len() as f64).sqrt();
        let target = (-(2.0f64.powf(1.2))).exp();
        assert!((m - target).abs() < 3.0 * se, "ecf {m} vs {target} (se {se})");
    }

    /// Sample autocovariance at a lag together with its rough standard error.
    fn lag_autocov(xs: &[f64], lag: usize) -> (f64, f64) {
        let m = mean(xs);
        let prods: Vec<f64> =
            (0..xs.len() - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).collect();
        let c = mean(&prods);
        let se = (var(&prods) / prods.len() as f64).sqrt();
        (c, se)
    }

    #[test]
    fn fgn_half_is_white_noise() {
        let xs = gen_fgn(0.5, 100_000, &stream().child("wn", 0)).unwrap();
        let (c, se) = lag_autocov(&xs, 1);
        assert!(c.abs() < 3.0 * se, "lag-1 autocov {c} (se {se})");
    }

    #[test]
    fn fgn_lag_one_autocovariance() {
        // 0.5 * (2^{1.5} - 2) at H = 3/4.
        let xs = gen_fgn(0.75, 100_000, &stream().child("fgn", 0)).unwrap();
        let (c, se) = lag_autocov(&xs, 1);
        let target = 0.5 * (2.0f64.powf(1.5) - 2.0);
        // The error bars on long-memory autocovariances are wider than the iid
        // formula suggests; allow 5x.
        assert!((c - target).abs() < 5.0 * se, "lag-1 autocov {c} vs {target} (se {se})");
    }

    #[test]
    fn fgn_partial_sum_variance_slope() {
        // Var of partial sums should scale like m^{2H}; fit the log-log slope
        // over an ensemble (disjoint blocks of a single path are too strongly
        // correlated under long memory to resolve a 0.05 slope tolerance).
        let reps = 1600;
        let n = 1 << 12;
        let ms = [1usize << 8, 1 << 10, 1 << 12];
        let mut sums = vec![Vec::with_capacity(reps); ms.len()];
        for r in 0..reps {
            let xs = gen_fgn(0.75, n, &stream().child("slope", r as u64)).unwrap();
            for (i, &m) in ms.iter().enumerate() {
                sums[i].push(xs[..m].iter().sum::<f64>());
            }
        }
        let xs: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
        let ys: Vec<f64> = sums.iter().map(|s| var(s).ln()).collect();
        let xm = mean(&xs);
        let ym = mean(&ys);
        let slope: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - xm) * (y - ym))
            .sum::<f64>()
            / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
        assert!((slope - 1.5).abs() < 0.05, "slope {slope} vs 1.5");
    }

    #[test]
    fn fgn_is_stationary_between_halves() {
        let xs = gen_fgn(0.75, 100_000, &stream().child("stat", 0)).unwrap();
        for lag in [1usize, 4] {
            let (c1, se1) = lag_autocov(&xs[..50_000], lag);
            let (c2, se2) = lag_autocov(&xs[50_000..], lag);
            let se = (se1 * se1 + se2 * se2).sqrt();
            assert!((c1 - c2).abs() < 3.0 * se, "lag {lag}: {c1} vs {c2} (se {se})");
        }
    }

    #[test]
    fn fbm_starts_at_zero() {
        let grid = TimeGrid::new(0.01, 100).unwrap();
        let path = gen_fbm_path(0.3, &grid, &stream().child("fbm0", 0)).unwrap();
        assert_eq!(path.values()[0], 0.0);
    }

    #[test]
    fn brownian_covariance_at_half_and_one() {
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let reps = 10_000;
        let mut prods = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = gen_fbm_path(0.5, &grid, &stream().child("bmcov", r as u64)).unwrap();
            prods.push(p.value_at(0.5).unwrap() * p.value_at(1.0).unwrap());
        }
        let m = mean(&prods);
        let se = (var(&prods) / reps as f64).sqrt();
        assert!((m - 0.5).abs() < 3.0 * se, "cov {m} vs 0.5 (se {se})");
    }

    #[test]
    fn fbm_quarter_unit_variance_at_one() {
        let grid = TimeGrid::new(0.125, 8).unwrap();
        let reps = 10_000;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = gen_fbm_path(0.25, &grid, &stream().child("fbmvar", r as u64)).unwrap();
            vals.push(p.value_at(1.0).unwrap());
        }
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        let m = mean(&sq);
        let se = (var(&sq) / reps as f64).sqrt();
        assert!((m - 1.0).abs() < 3.0 * se, "Var(Y_1) {m} vs 1 (se {se})");
    }

    #[test]
    fn sampler_symmetry_sign_flip() {
        // X and -X' (independent) must agree in law for every sampler.
        let ks = |a: &[f64], b: &[f64]| crate::stats::ks_two_sample_statistic(a, b);
        for (tag, xs) in [
            (
                "sas",
                sample_sas(StableParams::new(1.3, 1.0).unwrap(), 20_000, &stream().child("s1", 0))
                    .unwrap(),
            ),
            (
                "gauss",
                sample_scenery_law(SceneryLaw::Gaussian, 2.0, 20_000, &stream().child("s2", 0))
                    .unwrap(),
            ),
        ] {
            let flipped: Vec<f64> = sample_sas(
                StableParams::new(if tag == "sas" { 1.3 } else { 2.0 }, 1.0).unwrap(),
                20_000,
                &stream().child("s3", 0),
            )
            .unwrap()
            .iter()
            .map(|x| -x)
            .collect();
            let d = ks(&xs, &flipped);
            let p = crate::stats::ks_p_value(d, 10_000.0);
            assert!(p > 0.01, "{tag}: sign-flip KS p = {p}");
        }
    }
}
