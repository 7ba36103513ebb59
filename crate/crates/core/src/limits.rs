//! Local times and the continuum limit processes.
//!
//! Six processes are simulated, indexed by flavor x kernel:
//!
//! * `delta`  — one driver path `Y`, kernel integrated against a stable
//!   measure on the line (stable process in random scenery for the
//!   local-time kernel, stable process at random time for the indicator);
//! * `gamma`  — `M` driver copies against a product measure on
//!   `Omega' x R` (local-time / indicator fractional stable motion);
//! * `lambda` — the copy-averaged kernel (a Monte Carlo stand-in for the
//!   expectation over `Omega'`) against a line measure; alpha > 1 required.
//!
//! Self-similarity exponents: `H = 1 - H' + H'/alpha` for local-time
//! kernels, `H = H'/alpha` for indicator kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Kernel, MeasureGrid1D, ProductMeasureGrid};
use crate::rng::{gen_fbm_path, RandomStream, StableParams};
use crate::walks::{gen_walk, CollectingSpec, RealPath, TimeGrid};

/// Default number of occupation bins: path range / 256.
pub const DEFAULT_BINS: usize = 256;

/// Binned occupation density of a path up to a horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeProfile {
    lo: f64,
    width: f64,
    densities: Vec<f64>,
    horizon: f64,
}

/// Bin layout for occupation profiles.
#[derive(Clone, Copy, Debug)]
pub enum BinLayout {
    /// Cover the path range with this many bins.
    Count(usize),
    /// Fixed layout; bins are prepended/appended automatically when the
    /// path leaves the range.
    Fixed { lo: f64, width: f64, count: usize },
}

/// Incremental occupation accumulator: segments are deposited one at a
/// time, so per-horizon snapshots of a growing path cost O(bins) each.
#[derive(Clone, Debug)]
pub struct ProfileBuilder {
    lo: f64,
    width: f64,
    masses: Vec<f64>,
    elapsed: f64,
}

impl ProfileBuilder {
    pub fn new(lo: f64, width: f64, count: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || count == 0 {
            return Err(Error::InvalidParameter(format!(
                "bad bin layout: lo {lo}, width {width}, count {count}"
            )));
        }
        Ok(Self { lo, width, masses: vec![0.0; count], elapsed: 0.0 })
    }

    fn bin_of(&self, y: f64) -> i64 {
        ((y - self.lo) / self.width).floor() as i64
    }

    fn ensure_bin(&mut self, idx: i64) -> usize {
        if idx < 0 {
            let extra = (-idx) as usize;
            let mut new_masses = vec![0.0; extra + self.masses.len()];
            new_masses[extra..].copy_from_slice(&self.masses);
            self.masses = new_masses;
            self.lo -= extra as f64 * self.width;
            return 0;
        }
        if idx as usize >= self.masses.len() {
            self.masses.resize(idx as usize + 1, 0.0);
        }
        idx as usize
    }

    /// Deposit one linear segment: time `dt` spent moving from `y0` to `y1`,
    /// distributed across bins proportionally to the length covered in each.
    pub fn push_segment(&mut self, y0: f64, y1: f64, dt: f64) {
        self.elapsed += dt;
        if y0 == y1 {
            let idx = self.bin_of(y0);
            let idx = self.ensure_bin(idx);
            self.masses[idx] += dt;
            return;
        }
        let (lo_y, hi_y) = (y0.min(y1), y0.max(y1));
        // Ensure the low end first: prepending shifts indices, so the high
        // end is located afterwards.
        let lo_idx = self.bin_of(lo_y);
        let lo_idx = self.ensure_bin(lo_idx);
        let mut hi_bin = self.bin_of(hi_y);
        // A segment ending exactly on a bin edge deposits nothing above it.
        if self.lo + self.width * hi_bin as f64 == hi_y && hi_bin as usize > lo_idx {
            hi_bin -= 1;
        }
        let hi_idx = self.ensure_bin(hi_bin);
        let span = hi_y - lo_y;
        for idx in lo_idx..=hi_idx {
            let b_lo = self.lo + self.width * idx as f64;
            let b_hi = b_lo + self.width;
            let overlap = (hi_y.min(b_hi) - lo_y.max(b_lo)).max(0.0);
            if overlap > 0.0 {
                self.masses[idx] += dt * overlap / span;
            }
        }
    }

    /// Snapshot the accumulated occupation as a density profile.
    pub fn profile(&self) -> LocalTimeProfile {
        LocalTimeProfile {
            lo: self.lo,
            width: self.width,
            densities: self.masses.iter().map(|m| m / self.width).collect(),
            horizon: self.elapsed,
        }
    }
}

impl LocalTimeProfile {
    /// Occupation density of a sampled path (treated as piecewise linear).
    pub fn from_path(path: &RealPath, layout: BinLayout) -> Result<Self> {
        let mut builder = match layout {
            BinLayout::Count(count) => {
                if count == 0 {
                    return Err(Error::InvalidParameter("bin count must be >= 1".into()));
                }
                let (lo, hi) = (path.min_value(), path.max_value());
                if hi <= lo {
                    return Err(Error::Estimation(
                        "path range is degenerate; occupation density is a point mass".into(),
                    ));
                }
                ProfileBuilder::new(lo, (hi - lo) / count as f64, count)?
            }
            BinLayout::Fixed { lo, width, count } => ProfileBuilder::new(lo, width, count)?,
        };
        let dt = path.dt();
        for w in path.values().windows(2) {
            builder.push_segment(w[0], w[1], dt);
        }
        Ok(builder.profile())
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Total occupation mass (must equal the horizon).
    pub fn total_mass(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.width
    }

    /// Exact integral of the density over `[a, b]` (fractional bins included).
    pub fn integral_over(&self, a: f64, b: f64) -> f64 {
        let (a, b) = (a.min(b), a.max(b));
        let mut acc = 0.0;
        for (j, d) in self.densities.iter().enumerate() {
            let b_lo = self.lo + self.width * j as f64;
            let b_hi = b_lo + self.width;
            let overlap = (b.min(b_hi) - a.max(b_lo)).max(0.0);
            acc += d * overlap;
        }
        acc
    }

    /// Integral of the squared density (used by moment conditions).
    pub fn square_integral(&self) -> f64 {
        self.densities.iter().map(|d| d * d).sum::<f64>() * self.width
    }

    pub fn as_kernel(&self) -> Kernel {
        Kernel::Piecewise { lo: self.lo, step: self.width, values: self.densities.clone() }
    }
}

/// Occupation density of a path over bins (spec name for the constructor).
pub fn local_time(path: &RealPath, layout: BinLayout) -> Result<LocalTimeProfile> {
    LocalTimeProfile::from_path(path, layout)
}

/// Driver (random time / collecting) process for the limit simulations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "driver")]
pub enum DriverSpec {
    /// Exact fractional Brownian motion.
    Fbm { hurst: f64 },
    /// Symmetric beta-stable Levy motion approximated by a rounded-step
    /// walk rescaled at `resolution` steps per unit time.
    StableLevy { beta: f64, resolution: usize },
}

impl DriverSpec {
    pub fn hurst(&self) -> f64 {
        match self {
            DriverSpec::Fbm { hurst } => *hurst,
            DriverSpec::StableLevy { beta, .. } => 1.0 / beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriverSpec::Fbm { hurst } => {
                if *hurst > 0.0 && *hurst < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("fBm Hurst {hurst} outside (0, 1)")))
                }
            }
            DriverSpec::StableLevy { beta, resolution } => {
                CollectingSpec::BetaStable { beta: *beta }.validate()?;
                if *resolution == 0 {
                    return Err(Error::InvalidParameter("driver resolution must be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Sample one driver path on the grid.
    pub fn sample(&self, grid: &TimeGrid, stream: &RandomStream) -> Result<RealPath> {
        self.validate()?;
        match self {
            DriverSpec::Fbm { hurst } => gen_fbm_path(*hurst, grid, stream),
            DriverSpec::StableLevy { beta, resolution } => {
                let n = ((grid.t_max() * *resolution as f64).ceil() as usize).max(1);
                let walk = gen_walk(&CollectingSpec::BetaStable { beta: *beta }, n, stream)?;
                let scale = (*resolution as f64).powf(-1.0 / beta);
                let mut values = Vec::with_capacity(grid.steps() + 1);
                for t in grid.times() {
                    values.push(scale * walk.interpolate(*resolution as f64 * t)?);
                }
                RealPath::new(grid.dt(), values)
            }
        }
    }
}

/// Which integral kernel a limit process uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Indicator,
    LocalTime,
}

/// Which measure-space structure a limit process uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Delta,
    Gamma,
    Lambda,
}

/// Full specification of a limit-process simulation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimitSpec {
    pub flavor: Flavor,
    pub kernel: KernelKind,
    pub alpha: f64,
    pub driver: DriverSpec,
    /// Number of driver copies for gamma/lambda.
    pub m_copies: usize,
    /// Measure grid resolution.
    pub cells: usize,
    /// Override for the measure domain half-width (default 4 sup |Y|).
    pub domain_l: Option<f64>,
    /// For lambda + indicator + Brownian driver: evaluate the averaged
    /// kernel by the exact Gaussian tail instead of copy averaging.
    pub lambda_exact_gaussian: bool,
}

impl LimitSpec {
    pub fn new(flavor: Flavor, kernel: KernelKind, alpha: f64, driver: DriverSpec) -> Self {
        Self {
            flavor,
            kernel,
            alpha,
            driver,
            m_copies: 1 << 10,
            cells: 1 << 12,
            domain_l: None,
            lambda_exact_gaussian: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        StableParams::new(self.alpha, 1.0)?;
        self.driver.validate()?;
        if self.flavor == Flavor::Lambda && self.alpha <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda processes require alpha > 1, got {}",
                self.alpha
            )));
        }
        if self.cells == 0 || (self.flavor != Flavor::Delta && self.m_copies == 0) {
            return Err(Error::InvalidParameter("cells and m_copies must be >= 1".into()));
        }
        if self.lambda_exact_gaussian
            && !(self.flavor == Flavor::Lambda
                && self.kernel == KernelKind::Indicator
                && matches!(self.driver, DriverSpec::Fbm { .. }))
        {
            return Err(Error::InvalidParameter(
                "exact Gaussian kernel only applies to lambda/indicator with an fBm driver".into(),
            ));
        }
        Ok(())
    }
}

/// Self-similarity exponent of a limit process.
pub fn hurst_target(alpha: f64, hurst_prime: f64, kernel: KernelKind) -> Result<f64> {
    StableParams::new(alpha, 1.0)?;
    if !(hurst_prime > 0.0 && hurst_prime < 1.0) {
        return Err(Error::InvalidParameter(format!("H' = {hurst_prime} outside (0, 1)")));
    }
    Ok(match kernel {
        KernelKind::LocalTime => 1.0 - hurst_prime + hurst_prime / alpha,
        KernelKind::Indicator => hurst_prime / alpha,
    })
}

fn domain_halfwidth(spec: &LimitSpec, paths: &[RealPath]) -> f64 {
    spec.domain_l.unwrap_or_else(|| {
        let sup = paths
            .iter()
            .map(|p| p.max_value().abs().max(p.min_value().abs()))
            .fold(0.0f64, f64::max);
        (4.0 * sup).max(1.0)
    })
}

/// Per-time kernels for one driver path.
fn kernels_for_path(
    path: &RealPath,
    kind: KernelKind,
    grid: &TimeGrid,
) -> Result<Vec<Kernel>> {
    let times = grid.times();
    match kind {
        KernelKind::Indicator => {
            times.iter().map(|&t| Ok(Kernel::indicator(path.value_at(t)?))).collect()
        }
        KernelKind::LocalTime => {
            // Incremental occupation over a layout fixed from the whole path.
            let (lo, hi) = (path.min_value(), path.max_value());
            if hi <= lo {
                return Err(Error::Estimation("degenerate driver path range".into()));
            }
            let width = (hi - lo) / DEFAULT_BINS as f64;
            let mut builder = ProfileBuilder::new(lo, width, DEFAULT_BINS)?;
            let mut kernels = Vec::with_capacity(times.len());
            kernels.push(Kernel::indicator(0.0)); // empty at t = 0
            let values = path.values();
            let per_kernel = path.steps() / grid.steps();
            debug_assert_eq!(per_kernel * grid.steps(), path.steps());
            for k in 1..=grid.steps() {
                for j in ((k - 1) * per_kernel)..(k * per_kernel) {
                    builder.push_segment(values[j], values[j + 1], path.dt());
                }
                kernels.push(builder.profile().as_kernel());
            }
            Ok(kernels)
        }
    }
}

/// Simulate one realization of a limit process on the grid.
///
/// Delta uses one driver path and one line measure; gamma uses `m_copies`
/// drivers and a product measure; lambda uses the copy-averaged kernel and
/// a line measure. The value at t = 0 is exactly 0.
pub fn simulate_limit(spec: &LimitSpec, grid: &TimeGrid, stream: &RandomStream) -> Result<RealPath> {
    spec.validate()?;
    let times = grid.times();
    match spec.flavor {
        Flavor::Delta => {
            let y = spec.driver.sample(grid, &stream.child("driver", 0))?;
            let l = domain_halfwidth(spec, std::slice::from_ref(&y));
            let measure =
                MeasureGrid1D::sample(-l, l, spec.cells, spec.alpha, &stream.child("measure", 0))?;
            let kernels = kernels_for_path(&y, spec.kernel, grid)?;
            let values: Vec<f64> =
                kernels.iter().map(|k| measure.integral(k)).collect::<Result<_>>()?;
            RealPath::new(grid.dt(), values)
        }
        Flavor::Gamma => {
            let ys: Vec<RealPath> = (0..spec.m_copies)
                .map(|i| spec.driver.sample(grid, &stream.child("copy", i as u64)))
                .collect::<Result<_>>()?;
            let l = domain_halfwidth(spec, &ys);
            let measure = ProductMeasureGrid::sample(
                spec.m_copies,
                -l,
                l,
                spec.cells,
                spec.alpha,
                &stream.child("measure", 0),
            )?;
            let per_copy: Vec<Vec<Kernel>> = ys
                .iter()
                .map(|y| kernels_for_path(y, spec.kernel, grid))
                .collect::<Result<_>>()?;
            let mut values = Vec::with_capacity(times.len());
            for j in 0..times.len() {
                let kernels: Vec<Kernel> =
                    per_copy.iter().map(|ks| ks[j].clone()).collect();
                values.push(measure.integral(&kernels)?);
            }
            RealPath::new(grid.dt(), values)
        }
        Flavor::Lambda => {
            let ys: Vec<RealPath> = (0..spec.m_copies)
                .map(|i| spec.driver.sample(grid, &stream.child("copy", i as u64)))
                .collect::<Result<_>>()?;
            let l = domain_halfwidth(spec, &ys);
            let measure =
                MeasureGrid1D::sample(-l, l, spec.cells, spec.alpha, &stream.child("measure", 0))?;
            if spec.lambda_exact_gaussian {
                let hurst = spec.driver.hurst();
                let mut values = vec![0.0];
                for &t in &times[1..] {
                    let sigma = t.powf(hurst);
                    let normal = statrs::distribution::Normal::new(0.0, sigma)
                        .map_err(|e| Error::Numeric(e.to_string()))?;
                    use statrs::distribution::ContinuousCDF;
                    let f = move |x: f64| 1.0 - normal.cdf(x.abs());
                    // The Gaussian tail is negligible beyond 12 sigma.
                    values.push(measure.integral_fn(f, (-12.0 * sigma, 12.0 * sigma))?);
                }
                return RealPath::new(grid.dt(), values);
            }
            let per_copy: Vec<Vec<Kernel>> = ys
                .iter()
                .map(|y| kernels_for_path(y, spec.kernel, grid))
                .collect::<Result<_>>()?;
            let inv_m = 1.0 / spec.m_copies as f64;
            let mut values = Vec::with_capacity(times.len());
            let (d_lo, _) = measure.domain();
            let cells = measure.cells();
            let h = measure.h();
            for j in 0..times.len() {
                // Copy-averaged kernel tabulated exactly on the measure cells.
                let mut avg = vec![0.0f64; cells];
                let mut support_lo = f64::INFINITY;
                let mut support_hi = f64::NEG_INFINITY;
                for ks in &per_copy {
                    let (s_lo, s_hi) = ks[j].support();
                    support_lo = support_lo.min(s_lo);
                    support_hi = support_hi.max(s_hi);
                }
                if support_hi > support_lo {
                    let first = (((support_lo - d_lo) / h).floor().max(0.0)) as usize;
                    let last = ((((support_hi - d_lo) / h).ceil()) as usize).min(cells);
                    for ks in &per_copy {
                        for cell in first..last {
                            let c_lo = d_lo + h * cell as f64;
                            avg[cell] += inv_m * ks[j].cell_average(c_lo, c_lo + h);
                        }
                    }
                }
                let kernel = Kernel::Piecewise { lo: d_lo, step: h, values: avg };
                values.push(measure.integral(&kernel)?);
            }
            RealPath::new(grid.dt(), values)
        }
    }
}

/// Monte Carlo check of the local-time scaling relation: the mean of
/// `integral l(c, x)^2 dx` against `c^{2(1-H') + H'}` times the mean at
/// horizon 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub c: f64,
    pub ratio: f64,
    pub expected_ratio: f64,
    pub mean_at_c: f64,
    pub stderr_at_c: f64,
    pub mean_at_one: f64,
    pub stderr_at_one: f64,
    pub pass: bool,
}

pub fn localtime_scaling_check(
    driver: &DriverSpec,
    c: f64,
    replicates: usize,
    steps_per_unit: usize,
    stream: &RandomStream,
) -> Result<ScalingReport> {
    driver.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale factor must be positive, got {c}")));
    }
    let hurst = driver.hurst();
    let expected_ratio = c.powf(2.0 * (1.0 - hurst) + hurst);
    let square_means = |horizon: f64, tag: &str| -> Result<Vec<f64>> {
        let steps = ((horizon * steps_per_unit as f64).round() as usize).max(1);
        let grid = TimeGrid::new(horizon / steps as f64, steps)?;
        (0..replicates)
            .map(|r| {
                let y = driver.sample(&grid, &stream.child(tag, r as u64))?;
                Ok(local_time(&y, BinLayout::Count(DEFAULT_BINS))?.square_integral())
            })
            .collect()
    };
    // c == 1 is the identity configuration: reuse the same stream lineage so
    // the ratio is exactly 1.
    let tag_c = if c == 1.0 { "unit" } else { "scaled" };
    let at_c = square_means(c, tag_c)?;
    let at_one = square_means(1.0, "unit")?;
    let (mean_at_c, stderr_at_c) = crate::stats::mean_stderr(&at_c);
    let (mean_at_one, stderr_at_one) = crate::stats::mean_stderr(&at_one);
    let ratio = mean_at_c / mean_at_one;
    let tol = 3.0
        * (stderr_at_c.powi(2) + (expected_ratio * stderr_at_one).powi(2)).sqrt();
    let pass = (mean_at_c - expected_ratio * mean_at_one).abs() <= tol;
    Ok(ScalingReport {
        c,
        ratio,
        expected_ratio,
        mean_at_c,
        stderr_at_c,
        mean_at_one,
        stderr_at_one,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn stream() -> RandomStream {
        RandomStream::new(0x10c4_17e5_10c4_17e5)
    }

    #[test]
    fn identity_path_has_unit_density() {
        let values: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let path = RealPath::new(0.01, values).unwrap();
        let profile = local_time(&path, BinLayout::Fixed { lo: 0.0, width: 0.1, count: 10 })
            .unwrap();
        for d in profile.densities() {
            assert!((d - 1.0).abs() < 1e-9, "density {d}");
        }
        assert!((profile.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn doubled_speed_halves_density() {
        let values: Vec<f64> = (0..=100).map(|k| 2.0 * k as f64 / 100.0).collect();
        let path = RealPath::new(0.01, values).unwrap();
        let profile =
            local_time(&path, BinLayout::Fixed { lo: 0.0, width: 0.2, count: 10 }).unwrap();
        for d in profile.densities() {
            assert!((d - 0.5).abs() < 1e-9, "density {d}");
        }
    }

    #[test]
    fn occupation_matches_direct_time_count() {
        let grid = TimeGrid::unit(1 << 14).unwrap();
        let path = crate::rng::gen_fbm_path(0.5, &grid, &stream().child("occ", 0)).unwrap();
        let profile = local_time(&path, BinLayout::Count(DEFAULT_BINS)).unwrap();
        // Direct occupation of [a, b] for a piecewise-linear path.
        let direct = |a: f64, b: f64| -> f64 {
            let mut acc = 0.0;
            for w in path.values().windows(2) {
                let (lo, hi) = (w[0].min(w[1]), w[0].max(w[1]));
                if hi == lo {
                    if lo >= a && lo <= b {
                        acc += path.dt();
                    }
                } else {
                    acc += path.dt() * ((b.min(hi) - a.max(lo)).max(0.0)) / (hi - lo);
                }
            }
            acc
        };
        let mut rng = stream().child("intervals", 0).rng();
        use rand::Rng;
        let (lo, hi) = (path.min_value(), path.max_value());
        for _ in 0..20 {
            let a = lo + (hi - lo) * rng.random::<f64>() * 0.7;
            let len = (hi - lo) * (0.25 + 0.35 * rng.random::<f64>());
            let b = (a + len).min(hi);
            let occ = direct(a, b);
            let est = profile.integral_over(a, b);
            assert!(
                (occ - est).abs() / occ < 0.02,
                "interval [{a}, {b}]: occupation {occ} vs profile {est}"
            );
        }
    }

    #[test]
    fn mass_conservation() {
        for r in 0..5 {
            let grid = TimeGrid::new(1.0 / 256.0, 512).unwrap();
            let path = crate::rng::gen_fbm_path(0.7, &grid, &stream().child("mass", r)).unwrap();
            let profile = local_time(&path, BinLayout::Count(100)).unwrap();
            let rel = (profile.total_mass() - 2.0).abs() / 2.0;
            assert!(rel < 1e-9, "mass {} vs horizon 2", profile.total_mass());
        }
    }

    #[test]
    fn automatic_bin_extension() {
        let values = vec![0.0, 1.0, -2.0, 3.5];
        let path = RealPath::new(0.25, values).unwrap();
        let profile =
            local_time(&path, BinLayout::Fixed { lo: 0.0, width: 0.5, count: 2 }).unwrap();
        assert!(profile.lo() <= -2.0);
        assert!(profile.lo() + profile.width() * profile.densities().len() as f64 >= 3.5);
        // Three segments of duration 0.25 each.
        assert!((profile.total_mass() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn hurst_target_values() {
        assert_eq!(hurst_target(2.0, 0.5, KernelKind::LocalTime).unwrap(), 0.75);
        assert_eq!(hurst_target(2.0, 0.5, KernelKind::Indicator).unwrap(), 0.25);
        assert_eq!(hurst_target(1.0, 0.3, KernelKind::LocalTime).unwrap(), 1.0);
        assert!(hurst_target(2.5, 0.5, KernelKind::Indicator).is_err());
    }

    #[test]
    fn limit_processes_start_at_zero() {
        let grid = TimeGrid::unit(8).unwrap();
        for flavor in [Flavor::Delta, Flavor::Gamma, Flavor::Lambda] {
            for kernel in [KernelKind::Indicator, KernelKind::LocalTime] {
                let mut spec = LimitSpec::new(flavor, kernel, 2.0, DriverSpec::Fbm { hurst: 0.5 });
                spec.m_copies = 4;
                spec.cells = 128;
                let path = simulate_limit(&spec, &grid, &stream().child("z", 0)).unwrap();
                assert_eq!(path.values()[0], 0.0, "{flavor:?}/{kernel:?}");
            }
        }
    }

    #[test]
    fn lambda_requires_heavy_alpha() {
        let spec = LimitSpec::new(
            Flavor::Lambda,
            KernelKind::Indicator,
            0.9,
            DriverSpec::Fbm { hurst: 0.5 },
        );
        assert!(simulate_limit(&spec, &TimeGrid::unit(4).unwrap(), &stream()).is_err());
    }

    #[test]
    fn indicator_kernel_depends_only_on_endpoint() {
        // Two paths agreeing at a grid time get identical indicator kernels
        // there (and so identical delta values under shared measure draws),
        // and the kernel support stays inside the path range.
        let grid = TimeGrid::unit(4).unwrap();
        let a = RealPath::new(0.25, vec![0.0, 0.4, -0.3, 0.9, 0.7]).unwrap();
        let b = RealPath::new(0.25, vec![0.0, -1.1, 0.2, 0.5, 0.7]).unwrap();
        let ka = kernels_for_path(&a, KernelKind::Indicator, &grid).unwrap();
        let kb = kernels_for_path(&b, KernelKind::Indicator, &grid).unwrap();
        assert_eq!(ka[4], kb[4]);
        let s = stream().child("endpoint", 0);
        let measure = MeasureGrid1D::sample(-4.0, 4.0, 512, 2.0, &s).unwrap();
        assert_eq!(measure.integral(&ka[4]).unwrap(), measure.integral(&kb[4]).unwrap());
        for k in &ka {
            let (lo, hi) = k.support();
            assert!(lo >= a.min_value().min(0.0) && hi <= a.max_value().max(0.0));
        }
    }

    #[test]
    fn delta_indicator_matches_mixture_cf() {
        // At fixed t the delta-indicator value is a Gaussian mixture with
        // conditional variance 2 |Y_t|; its cf is E' exp(-theta^2 |Y_t|),
        // computed here by quadrature against the |Y_t| density.
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let mut spec =
            LimitSpec::new(Flavor::Delta, KernelKind::Indicator, 2.0, DriverSpec::Fbm {
                hurst: 0.5,
            });
        spec.cells = 1024;
        let reps = 4000;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let path = simulate_limit(&spec, &grid, &stream().child("mix", r as u64)).unwrap();
            vals.push(path.value_at(1.0).unwrap());
        }
        let thetas = [0.5f64, 1.0, 2.0];
        let rep = stats::ecf(&vals, &thetas).unwrap();
        for (j, &theta) in thetas.iter().enumerate() {
            // Quadrature of 2 phi(y) exp(-theta^2 y) over y > 0 (sigma_1 = 1).
            let mut target = 0.0;
            let dy = 1e-4;
            let mut y: f64 = 0.5 * dy;
            while y < 12.0 {
                let phi = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
                target += 2.0 * phi * (-theta * theta * y).exp() * dy;
                y += dy;
            }
            assert!(
                (rep.values[j] - target).abs() < 3.0 * rep.stderrs[j].max(1e-3),
                "theta {theta}: ecf {} vs quadrature {target}",
                rep.values[j]
            );
        }
    }

    #[test]
    fn gamma_indicator_endpoint_variance() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let mut spec =
            LimitSpec::new(Flavor::Gamma, KernelKind::Indicator, 2.0, DriverSpec::Fbm {
                hurst: 0.5,
            });
        spec.m_copies = 1 << 10;
        spec.cells = 1024;
        let reps = 4000;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let path = simulate_limit(&spec, &grid, &stream().child("gvar", r as u64)).unwrap();
            vals.push(path.value_at(1.0).unwrap());
        }
        let (v, _) = stats::variance_stderr(&vals);
        let target = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((v - target).abs() / target < 0.05, "variance {v} vs {target}");
    }

    #[test]
    fn lambda_copy_average_agrees_with_exact_gaussian_kernel() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let mut spec =
            LimitSpec::new(Flavor::Lambda, KernelKind::Indicator, 2.0, DriverSpec::Fbm {
                hurst: 0.5,
            });
        spec.m_copies = 1 << 9;
        spec.cells = 1024;
        let reps = 2000;
        let mut avg_vals = Vec::with_capacity(reps);
        let mut exact_vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let s = stream().child("lam", r as u64);
            let path = simulate_limit(&spec, &grid, &s).unwrap();
            avg_vals.push(path.value_at(1.0).unwrap());
            let mut exact = spec.clone();
            exact.lambda_exact_gaussian = true;
            exact.domain_l = Some(12.0);
            let path = simulate_limit(&exact, &grid, &s.child("exact", 0)).unwrap();
            exact_vals.push(path.value_at(1.0).unwrap());
        }
        let (v1, se1) = stats::variance_stderr(&avg_vals);
        let (v2, se2) = stats::variance_stderr(&exact_vals);
        let se = (se1 * se1 + se2 * se2).sqrt();
        assert!((v1 - v2).abs() < 3.0 * se, "copy-avg var {v1} vs exact {v2} (se {se})");
    }

    #[test]
    fn delta_and_gamma_have_stationary_increments() {
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let mut spec =
            LimitSpec::new(Flavor::Delta, KernelKind::Indicator, 2.0, DriverSpec::Fbm {
                hurst: 0.5,
            });
        spec.cells = 512;
        let reps = 2000;
        let mut first = Vec::with_capacity(reps);
        let mut second = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = simulate_limit(&spec, &grid, &stream().child("si", r as u64)).unwrap();
            first.push(p.value_at(0.5).unwrap());
            second.push(p.value_at(1.0).unwrap() - p.value_at(0.5).unwrap());
        }
        let d = stats::ks_two_sample_statistic(&first, &second);
        let p = stats::ks_p_value(d, reps as f64 / 2.0);
        assert!(p > 0.01, "delta increment stationarity p = {p}");
    }

    #[test]
    fn levy_driver_has_heavy_jumps() {
        let driver = DriverSpec::StableLevy { beta: 1.3, resolution: 1 << 12 };
        let grid = TimeGrid::unit(256).unwrap();
        let path = driver.sample(&grid, &stream().child("levy", 0)).unwrap();
        assert_eq!(path.values()[0], 0.0);
        assert_eq!(path.steps(), 256);
    }

    #[test]
    fn scaling_identity_at_unit_c() {
        let rep = localtime_scaling_check(
            &DriverSpec::Fbm { hurst: 0.5 },
            1.0,
            50,
            1 << 10,
            &stream().child("sc1", 0),
        )
        .unwrap();
        assert_eq!(rep.ratio, 1.0);
        assert!(rep.pass);
    }

    #[test]
    fn scaling_bm_c4() {
        let rep = localtime_scaling_check(
            &DriverSpec::Fbm { hurst: 0.5 },
            4.0,
            400,
            1 << 10,
            &stream().child("sc4", 0),
        )
        .unwrap();
        assert!(rep.pass, "ratio {} vs {} (8 expected)", rep.ratio, rep.expected_ratio);
        assert_eq!(rep.expected_ratio, 8.0);
    }

    #[test]
    fn scaling_fbm_075_c2() {
        let rep = localtime_scaling_check(
            &DriverSpec::Fbm { hurst: 0.75 },
            2.0,
            400,
            1 << 10,
            &stream().child("sc2", 0),
        )
        .unwrap();
        let expected = 2f64.powf(1.25);
        assert!((rep.expected_ratio - expected).abs() < 1e-12);
        assert!(rep.pass, "ratio {} vs {}", rep.ratio, rep.expected_ratio);
    }
}
