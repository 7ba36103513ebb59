//! Recursive construction of fractional stable motions.
//!
//! Starting from a base self-similar process, each step integrates either
//! the local-time kernel (`+` on the line, `*` on the product space) or the
//! indicator kernel (`-` on the line, `x` on the product space) of the
//! previous level against a fresh stable random measure. The Hurst exponent
//! composes through `phi_plus(x) = 1 - x + x/alpha` for local-time steps
//! and `phi_minus(x) = x/alpha` for indicator steps; with alpha = 2 and a
//! Brownian base, words of product-space symbols reach every dyadic Hurst
//! parameter in (0, 1).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::{BinLayout, KernelKind, LocalTimeProfile, DEFAULT_BINS};
use crate::measure::{Kernel, MeasureGrid1D, ProductMeasureGrid};
use crate::rng::{gen_fbm_path, RandomStream};
use crate::stats;
use crate::walks::{RealPath, TimeGrid};

/// One recursion step: which kernel, and which measure space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symbol {
    /// Local-time kernel against a line measure.
    Plus,
    /// Indicator kernel against a line measure.
    Minus,
    /// Local-time kernel against a product measure.
    Star,
    /// Indicator kernel against a product measure.
    Times,
}

impl Symbol {
    pub fn kernel_kind(self) -> KernelKind {
        match self {
            Symbol::Plus | Symbol::Star => KernelKind::LocalTime,
            Symbol::Minus | Symbol::Times => KernelKind::Indicator,
        }
    }

    fn uses_product_measure(self) -> bool {
        matches!(self, Symbol::Star | Symbol::Times)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symbol::Plus => "+",
            Symbol::Minus => "-",
            Symbol::Star => "*",
            Symbol::Times => "x",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "plus" => Ok(Symbol::Plus),
            "-" | "minus" => Ok(Symbol::Minus),
            "*" | "star" => Ok(Symbol::Star),
            "x" | "X" | "times" => Ok(Symbol::Times),
            other => Err(Error::InvalidParameter(format!(
                "unknown recursion symbol {other:?} (expected +, -, *, or x)"
            ))),
        }
    }
}

/// A word over the four recursion symbols, e.g. parsed from "x,x,*".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecursionWord(pub Vec<Symbol>);

impl FromStr for RecursionWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Ok(RecursionWord(Vec::new()));
        }
        let symbols: Result<Vec<Symbol>> = trimmed.split(',').map(Symbol::from_str).collect();
        Ok(RecursionWord(symbols?))
    }
}

impl fmt::Display for RecursionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn validate_phi_domain(x: f64, alpha: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst argument {x} outside (0, 1)")));
    }
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "recursion requires alpha in (1, 2], got {alpha}"
        )));
    }
    Ok(())
}

/// Hurst-exponent map of one recursion step: `1 - x + x/alpha` for
/// local-time symbols, `x/alpha` for indicator symbols.
pub fn phi(symbol: Symbol, x: f64, alpha: f64) -> Result<f64> {
    validate_phi_domain(x, alpha)?;
    Ok(match symbol.kernel_kind() {
        KernelKind::LocalTime => 1.0 - x + x / alpha,
        KernelKind::Indicator => x / alpha,
    })
}

/// Left-to-right composition of the per-symbol maps applied to `h0`.
pub fn compose_hurst(word: &RecursionWord, h0: f64, alpha: f64) -> Result<f64> {
    let mut h = h0;
    validate_phi_domain(h0, alpha)?;
    for &symbol in &word.0 {
        h = phi(symbol, h, alpha)?;
    }
    Ok(h)
}

/// Generator of i.i.d. sampled paths of the current process on a fixed grid.
pub type PathGenerator = Arc<dyn Fn(&RandomStream) -> Result<RealPath> + Send + Sync>;

/// State of the recursive construction: stability index, current Hurst
/// exponent, working grid, and a path generator for the current process.
#[derive(Clone)]
pub struct RecursionState {
    alpha: f64,
    hurst: f64,
    grid: TimeGrid,
    level: usize,
    generator: PathGenerator,
}

impl RecursionState {
    /// Base process: fractional Brownian motion with exponent `h0`.
    pub fn base_fbm(h0: f64, alpha: f64, grid: TimeGrid) -> Result<Self> {
        validate_phi_domain(h0, alpha)?;
        let generator: PathGenerator =
            Arc::new(move |stream: &RandomStream| gen_fbm_path(h0, &grid, stream));
        Ok(Self { alpha, hurst: h0, grid, level: 0, generator })
    }

    /// Custom base process (used to wire in degenerate processes in tests
    /// and alternative drivers).
    pub fn from_generator(
        alpha: f64,
        hurst: f64,
        grid: TimeGrid,
        generator: PathGenerator,
    ) -> Result<Self> {
        validate_phi_domain(hurst, alpha)?;
        Ok(Self { alpha, hurst, grid, level: 0, generator })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn sample_path(&self, stream: &RandomStream) -> Result<RealPath> {
        (self.generator)(stream)
    }
}

/// Per-time kernel of a sampled path for a recursion step. A path whose
/// range is degenerate (a constant path) deposits its occupation mass in a
/// single narrow bin instead of failing; this only arises for pathological
/// generators.
fn step_kernels(path: &RealPath, kind: KernelKind, grid: &TimeGrid) -> Result<Vec<Kernel>> {
    match kind {
        KernelKind::Indicator => grid
            .times()
            .iter()
            .map(|&t| Ok(Kernel::indicator(path.value_at(t)?)))
            .collect(),
        KernelKind::LocalTime => {
            let (lo, hi) = (path.min_value(), path.max_value());
            let width = if hi > lo { (hi - lo) / DEFAULT_BINS as f64 } else { 1.0 / DEFAULT_BINS as f64 };
            let mut builder = crate::limits::ProfileBuilder::new(lo, width, DEFAULT_BINS)?;
            let values = path.values();
            let mut kernels = Vec::with_capacity(grid.steps() + 1);
            kernels.push(Kernel::indicator(0.0));
            for k in 1..=grid.steps() {
                builder.push_segment(values[k - 1], values[k], path.dt());
                kernels.push(builder.profile().as_kernel());
            }
            Ok(kernels)
        }
    }
}

/// Apply one recursion step, producing the next level's state.
///
/// The new generator samples the previous level afresh (one path for line
/// symbols, `m_copies` for product symbols), draws a fresh measure, and
/// integrates the per-time kernels; the tracked Hurst exponent advances by
/// [`phi`].
pub fn recurse_step(
    state: &RecursionState,
    symbol: Symbol,
    m_copies: usize,
    cells: usize,
) -> Result<RecursionState> {
    if symbol.uses_product_measure() && m_copies == 0 {
        return Err(Error::InvalidParameter("product-measure steps need m_copies >= 1".into()));
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("measure grid needs cells >= 1".into()));
    }
    let new_hurst = phi(symbol, state.hurst, state.alpha)?;
    let prev = state.clone();
    let grid = state.grid;
    let alpha = state.alpha;
    let kind = symbol.kernel_kind();
    let generator: PathGenerator = Arc::new(move |stream: &RandomStream| {
        if symbol.uses_product_measure() {
            let paths: Vec<RealPath> = (0..m_copies)
                .map(|i| prev.sample_path(&stream.child("copy", i as u64)))
                .collect::<Result<_>>()?;
            let sup = paths
                .iter()
                .map(|p| p.max_value().abs().max(p.min_value().abs()))
                .fold(0.0f64, f64::max);
            let l = (4.0 * sup).max(1.0);
            let measure = ProductMeasureGrid::sample(
                m_copies,
                -l,
                l,
                cells,
                alpha,
                &stream.child("measure", 0),
            )?;
            let per_copy: Vec<Vec<Kernel>> = paths
                .iter()
                .map(|p| step_kernels(p, kind, &grid))
                .collect::<Result<_>>()?;
            let mut values = Vec::with_capacity(grid.steps() + 1);
            for j in 0..=grid.steps() {
                let kernels: Vec<Kernel> = per_copy.iter().map(|ks| ks[j].clone()).collect();
                values.push(measure.integral(&kernels)?);
            }
            RealPath::new(grid.dt(), values)
        } else {
            let path = prev.sample_path(&stream.child("driver", 0))?;
            let sup = path.max_value().abs().max(path.min_value().abs());
            let l = (4.0 * sup).max(1.0);
            let measure =
                MeasureGrid1D::sample(-l, l, cells, alpha, &stream.child("measure", 0))?;
            let kernels = step_kernels(&path, kind, &grid)?;
            let values: Vec<f64> =
                kernels.iter().map(|k| measure.integral(k)).collect::<Result<_>>()?;
            RealPath::new(grid.dt(), values)
        }
    });
    Ok(RecursionState {
        alpha: state.alpha,
        hurst: new_hurst,
        grid: state.grid,
        level: state.level + 1,
        generator,
    })
}

/// One Monte Carlo stability proxy: a value, its standard error, and the
/// value recomputed at doubled effort.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityProxy {
    pub value: f64,
    pub stderr: f64,
    pub doubled: f64,
    pub doubled_stderr: f64,
    pub stable: bool,
}

impl StabilityProxy {
    fn from_pair(value: (f64, f64), doubled: (f64, f64)) -> Self {
        let tol = 3.0 * (value.1 * value.1 + doubled.1 * doubled.1).sqrt();
        Self {
            value: value.0,
            stderr: value.1,
            doubled: doubled.0,
            doubled_stderr: doubled.1,
            stable: (value.0 - doubled.0).abs() <= tol,
        }
    }
}

/// Statistical proxies for the four moment/regularity conditions a base
/// process must satisfy for the recursion to stay well defined:
/// (a) positive finite mean absolute value at t = 1;
/// (b) square-integrable local time at horizon 1 (stable under bin halving);
/// (c) bounded continuous marginal density (kernel-density max stable under
///     bandwidth halving — a soft check);
/// (d) integrable running supremum on [0, 1].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub abs_mean: StabilityProxy,
    pub abs_mean_positive: bool,
    pub local_time_square: StabilityProxy,
    pub density_max: StabilityProxy,
    pub sup_mean: StabilityProxy,
    pub alpha_moment: StabilityProxy,
    pub pass: bool,
}

fn kde_max(samples: &[f64], bandwidth: f64) -> f64 {
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return f64::INFINITY;
    }
    let mut best = 0.0f64;
    let points = 200;
    for j in 0..=points {
        let x = lo + (hi - lo) * j as f64 / points as f64;
        let v: f64 = samples
            .iter()
            .map(|s| (-0.5 * ((x - s) / bandwidth).powi(2)).exp())
            .sum::<f64>()
            * norm;
        best = best.max(v);
    }
    best
}

/// Evaluate the condition proxies on `replicates` sampled paths (and
/// `2 * replicates` for the doubling comparisons).
pub fn check_conditions(
    state: &RecursionState,
    replicates: usize,
    stream: &RandomStream,
) -> Result<ConditionReport> {
    if replicates < 50 {
        return Err(Error::InvalidParameter("condition checks need >= 50 replicates".into()));
    }
    struct PathStats {
        abs1: Vec<f64>,
        signed1: Vec<f64>,
        lt2: Vec<f64>,
        lt2_fine: Vec<f64>,
        sup: Vec<f64>,
        alpha_m: Vec<f64>,
    }
    let sample_stats = |count: usize, tag: &str| -> Result<PathStats> {
        let mut out = PathStats {
            abs1: Vec::with_capacity(count),
            signed1: Vec::with_capacity(count),
            lt2: Vec::with_capacity(count),
            lt2_fine: Vec::with_capacity(count),
            sup: Vec::with_capacity(count),
            alpha_m: Vec::with_capacity(count),
        };
        for r in 0..count {
            let path = state.sample_path(&stream.child(tag, r as u64))?;
            let t_end = path.t_max().min(1.0);
            let end = path.value_at(t_end)?;
            out.signed1.push(end);
            out.abs1.push(end.abs());
            out.alpha_m.push(end.abs().powf(state.alpha));
            out.sup.push(path.values().iter().fold(0.0f64, |a, v| a.max(v.abs())));
            for (bins, dest) in
                [(DEFAULT_BINS, &mut out.lt2), (2 * DEFAULT_BINS, &mut out.lt2_fine)]
            {
                match LocalTimeProfile::from_path(&path, BinLayout::Count(bins)) {
                    Ok(profile) => dest.push(profile.square_integral()),
                    Err(_) => dest.push(f64::INFINITY),
                }
            }
        }
        Ok(out)
    };
    let base = sample_stats(replicates, "cond")?;
    let doubled = sample_stats(2 * replicates, "cond2")?;

    let abs_mean = StabilityProxy::from_pair(
        stats::mean_stderr(&base.abs1),
        stats::mean_stderr(&doubled.abs1),
    );
    let abs_mean_positive = abs_mean.doubled > 3.0 * abs_mean.doubled_stderr;

    // (b): same paths, doubled bin resolution.
    let lt_finite = base.lt2.iter().chain(&base.lt2_fine).all(|v| v.is_finite());
    let local_time_square = StabilityProxy::from_pair(
        stats::mean_stderr(&base.lt2),
        stats::mean_stderr(&base.lt2_fine),
    );

    // (c): soft kernel-density check at two bandwidths.
    let spread = stats::mean_stderr(&base.abs1).0.max(1e-6);
    let bw = 0.4 * spread;
    let max_coarse = kde_max(&base.signed1, bw);
    let max_fine = kde_max(&base.signed1, 0.5 * bw);
    let density_max = StabilityProxy {
        value: max_coarse,
        stderr: 0.0,
        doubled: max_fine,
        doubled_stderr: 0.0,
        stable: max_fine.is_finite()
            && max_coarse.is_finite()
            && (max_fine - max_coarse).abs() <= 0.25 * max_coarse.abs().max(1e-12),
    };

    let sup_mean = StabilityProxy::from_pair(
        stats::mean_stderr(&base.sup),
        stats::mean_stderr(&doubled.sup),
    );
    let alpha_moment = StabilityProxy::from_pair(
        stats::mean_stderr(&base.alpha_m),
        stats::mean_stderr(&doubled.alpha_m),
    );

    let pass = abs_mean_positive
        && abs_mean.stable
        && lt_finite
        && local_time_square.stable
        && density_max.stable
        && sup_mean.stable;
    Ok(ConditionReport {
        abs_mean,
        abs_mean_positive,
        local_time_square,
        density_max,
        sup_mean,
        alpha_moment,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream() -> RandomStream {
        RandomStream::new(0xfeed_f00d_dead_beef)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(Symbol::Minus, 0.5, 2.0).unwrap(), 0.25);
        assert_eq!(phi(Symbol::Plus, 0.5, 2.0).unwrap(), 0.75);
        let twice = phi(Symbol::Minus, phi(Symbol::Minus, 0.5, 2.0).unwrap(), 2.0).unwrap();
        assert_eq!(twice, 0.125);
        assert!(phi(Symbol::Plus, 0.5, 1.0).is_err());
        assert!(phi(Symbol::Plus, 1.0, 2.0).is_err());
    }

    #[test]
    fn compose_examples() {
        let empty = RecursionWord(vec![]);
        assert_eq!(compose_hurst(&empty, 0.37, 2.0).unwrap(), 0.37);
        let xx = RecursionWord(vec![Symbol::Times, Symbol::Times]);
        assert_eq!(compose_hurst(&xx, 0.5, 2.0).unwrap(), 0.125);
        let x_star = RecursionWord(vec![Symbol::Times, Symbol::Star]);
        assert_eq!(compose_hurst(&x_star, 0.5, 2.0).unwrap(), 0.875);
    }

    #[test]
    fn word_parsing_round_trip() {
        let word: RecursionWord = "x,x,*".parse().unwrap();
        assert_eq!(word.0, vec![Symbol::Times, Symbol::Times, Symbol::Star]);
        assert_eq!(word.to_string(), "x,x,*");
        let empty: RecursionWord = "".parse().unwrap();
        assert!(empty.0.is_empty());
        assert!("q,+".parse::<RecursionWord>().is_err());
    }

    #[test]
    fn hurst_bookkeeping_matches_composition() {
        let grid = TimeGrid::unit(8).unwrap();
        let word = RecursionWord(vec![Symbol::Times, Symbol::Minus, Symbol::Star]);
        let mut state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        for &s in &word.0 {
            state = recurse_step(&state, s, 2, 64).unwrap();
        }
        assert_eq!(state.hurst(), compose_hurst(&word, 0.5, 2.0).unwrap());
        assert_eq!(state.level(), 3);
    }

    #[test]
    fn first_level_times_covariance_is_fbm_quarter() {
        // One product-space indicator step from Brownian motion targets a
        // Gaussian process with Hurst 1/4 and variance scale 2 E'|Y_1|.
        let grid = TimeGrid::new(0.25, 4).unwrap();
        let state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        let next = recurse_step(&state, Symbol::Times, 1 << 9, 2048).unwrap();
        assert_eq!(next.hurst(), 0.25);
        let reps = 1200;
        let mut s_vals = Vec::with_capacity(reps);
        let mut t_vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = next.sample_path(&stream().child("cov", r as u64)).unwrap();
            s_vals.push(p.value_at(0.25).unwrap());
            t_vals.push(p.value_at(1.0).unwrap());
        }
        let (cov, se) = stats::cov_stderr(&s_vals, &t_vals);
        let scale = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        let expected = scale * 0.5 * (0.25f64.sqrt() + 1.0 - 0.75f64.sqrt());
        assert!((cov - expected).abs() < 3.0 * se, "cov {cov} vs {expected} (se {se})");
    }

    #[test]
    fn minus_level_matches_gaussian_mixture_cf() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        let next = recurse_step(&state, Symbol::Minus, 1, 1024).unwrap();
        let reps = 3000;
        let mut vals = Vec::with_capacity(reps);
        for r in 0..reps {
            let p = next.sample_path(&stream().child("mix", r as u64)).unwrap();
            vals.push(p.value_at(1.0).unwrap());
        }
        let theta = 1.0f64;
        let rep = stats::ecf(&vals, &[theta]).unwrap();
        let mut target = 0.0;
        let dy = 1e-4;
        let mut y: f64 = 0.5 * dy;
        while y < 12.0 {
            let phi_y = (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt();
            target += 2.0 * phi_y * (-theta * theta * y).exp() * dy;
            y += dy;
        }
        assert!(
            (rep.values[0] - target).abs() < 3.0 * rep.stderrs[0],
            "ecf {} vs {target}",
            rep.values[0]
        );
    }

    #[test]
    fn recursion_levels_start_at_zero() {
        let grid = TimeGrid::unit(4).unwrap();
        let state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        for symbol in [Symbol::Plus, Symbol::Minus, Symbol::Star, Symbol::Times] {
            let next = recurse_step(&state, symbol, 4, 128).unwrap();
            let p = next.sample_path(&stream().child("zero", 0)).unwrap();
            assert_eq!(p.values()[0], 0.0, "{symbol}");
        }
    }

    #[test]
    fn alpha_two_product_levels_are_gaussian() {
        let grid = TimeGrid::new(0.5, 2).unwrap();
        let state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        let level1 = recurse_step(&state, Symbol::Times, 32, 512).unwrap();
        let level2 = recurse_step(&level1, Symbol::Times, 32, 512).unwrap();
        for (tag, level) in [("level1", &level1), ("level2", &level2)] {
            let reps = 500;
            let mut vals = Vec::with_capacity(reps);
            for r in 0..reps {
                let p = level.sample_path(&stream().child(tag, r as u64)).unwrap();
                vals.push(p.value_at(1.0).unwrap());
            }
            let (m, _) = stats::mean_stderr(&vals);
            let (v, _) = stats::variance_stderr(&vals);
            use statrs::distribution::ContinuousCDF;
            let normal = statrs::distribution::Normal::new(m, v.sqrt()).unwrap();
            let res = stats::ks_test(&vals, stats::KsReference::Cdf(&|x| normal.cdf(x))).unwrap();
            assert!(res.p_value > 0.01, "{tag}: KS normality p = {}", res.p_value);
        }
    }

    #[test]
    fn dyadic_hurst_estimates() {
        // k product-indicator steps from Brownian motion target 2^{-(k+1)}.
        // The Hurst slope is insensitive to the copy count, so the deeper
        // level uses fewer copies per grid to keep the nesting affordable.
        let grid = TimeGrid::unit(16).unwrap();
        let state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        let level1 = recurse_step(&state, Symbol::Times, 1 << 8, 512).unwrap();
        let mut paths = Vec::new();
        for r in 0..512 {
            paths.push(level1.sample_path(&stream().child("dy1", r)).unwrap());
        }
        let rep = stats::estimate_hurst(&paths).unwrap();
        assert!((rep.estimate - 0.25).abs() < 0.05, "level-1 estimate {}", rep.estimate);

        let level1_small = recurse_step(&state, Symbol::Times, 32, 512).unwrap();
        let level2 = recurse_step(&level1_small, Symbol::Times, 32, 512).unwrap();
        let mut paths = Vec::new();
        for r in 0..384 {
            paths.push(level2.sample_path(&stream().child("dy2", r)).unwrap());
        }
        let rep = stats::estimate_hurst(&paths).unwrap();
        assert!((rep.estimate - 0.125).abs() < 0.05, "level-2 estimate {}", rep.estimate);
    }

    #[test]
    fn conditions_pass_for_brownian_motion() {
        let grid = TimeGrid::unit(256).unwrap();
        let state = RecursionState::base_fbm(0.5, 2.0, grid).unwrap();
        let report = check_conditions(&state, 400, &stream().child("pp", 0)).unwrap();
        assert!(report.pass, "report: {report:?}");
        let target = (2.0 / std::f64::consts::PI).sqrt();
        assert!(
            (report.abs_mean.value - target).abs() < 3.0 * report.abs_mean.stderr,
            "E|Y_1| = {} vs {target}",
            report.abs_mean.value
        );
    }

    #[test]
    fn conditions_sup_proxy_for_rough_fbm() {
        let grid = TimeGrid::unit(256).unwrap();
        let state = RecursionState::base_fbm(0.25, 2.0, grid).unwrap();
        let report = check_conditions(&state, 300, &stream().child("pp25", 0)).unwrap();
        assert!(report.sup_mean.stable);
        assert!(report.sup_mean.value.is_finite());
    }

    #[test]
    fn degenerate_zero_process_fails_positivity() {
        let grid = TimeGrid::unit(32).unwrap();
        let generator: PathGenerator = Arc::new(move |_stream: &RandomStream| {
            RealPath::new(1.0 / 32.0, vec![0.0; 33])
        });
        let state = RecursionState::from_generator(2.0, 0.5, grid, generator).unwrap();
        let report = check_conditions(&state, 100, &stream().child("dz", 0)).unwrap();
        assert!(!report.abs_mean_positive);
        assert!(!report.pass);
        assert_eq!(report.abs_mean.value, 0.0);
    }

    #[test]
    fn finite_alpha_moment_proxy() {
        let grid = TimeGrid::unit(64).unwrap();
        let state = RecursionState::base_fbm(0.5, 1.5, grid).unwrap();
        let report = check_conditions(&state, 300, &stream().child("am", 0)).unwrap();
        assert!(report.alpha_moment.stable);
    }
}
