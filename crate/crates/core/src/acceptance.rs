//! The acceptance suite: every distributional theorem handled by this crate
//! as an executable pass/fail check at pinned sizes, tolerances, and seeds.
//!
//! Each check returns a [`Verdict`] whose JSON form is byte-identical
//! across reruns with the same seed (wall-clock timings are deliberately
//! excluded; the test harness asserts runtime budgets separately).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::ContinuousCDF;

use crate::error::Result;
use crate::limits::{
    hurst_target, local_time, localtime_scaling_check, simulate_limit, BinLayout, DriverSpec,
    Flavor, KernelKind, LimitSpec, DEFAULT_BINS,
};
use crate::measure::{Kernel, MeasureGrid1D};
use crate::recursion::{compose_hurst, phi, RecursionState, RecursionWord, Symbol};
use crate::rng::{gen_fbm_path, sample_sas, RandomStream, SceneryLaw, StableParams};
use crate::scenery::{
    dual_definition_deviation, rant_check, rwrs, schema, PrefixTable,
    SceneryField, SchemaMode, Site, IDENTITY_TOL,
};
use crate::stats;
use crate::timechange::{extract_bm_minus, extract_bm_times, ExtractConfig};
use crate::walks::{gen_walk, CollectingSpec, RealPath, TimeGrid};

/// Default master seed of the acceptance suite.
pub const DEFAULT_SEED: u64 = 20140214;

/// Outcome of one acceptance check. Serializes deterministically: no
/// timestamps, no wall times, struct-ordered fields, sorted JSON maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub seed: u64,
    pub config_hash: String,
    pub details: serde_json::Value,
}

fn suite_hash(seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"scenery acceptance suite v1;");
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn verdict(name: &str, seed: u64, pass: bool, details: serde_json::Value) -> Verdict {
    Verdict { name: name.to_string(), pass, seed, config_hash: suite_hash(seed), details }
}

fn root(seed: u64, tag: &str) -> RandomStream {
    RandomStream::new(seed).child(tag, 0)
}

/// Theta grid used by the characteristic-function comparisons.
fn theta_grid() -> Vec<f64> {
    (0..=24).map(|j| -3.0 + 0.25 * j as f64).collect()
}

/// Check 1: the alternating-sign and prefix-sum formulations of the walk at
/// random time agree path by path (1000 simple-walk/Gaussian-scenery pairs
/// of length 10^4, relative deviation < 1e-9).
pub fn check_dual_definitions(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "dual");
    let pairs = 1000usize;
    let n = 10_000usize;
    let deviations: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|r| {
            let field = SceneryField::new(
                SceneryLaw::Gaussian,
                2.0,
                Site::Edge,
                &stream.child("scenery", r as u64),
            )?;
            let walk = gen_walk(&CollectingSpec::Simple, n, &stream.child("walk", r as u64))?;
            dual_definition_deviation(&field, &walk)
        })
        .collect::<Result<_>>()?;
    let max_dev = deviations.iter().cloned().fold(0.0, f64::max);
    Ok(verdict(
        "dual-definitions",
        seed,
        max_dev < IDENTITY_TOL,
        serde_json::json!({
            "pairs": pairs,
            "steps": n,
            "max_relative_deviation": max_dev,
            "tolerance": IDENTITY_TOL,
        }),
    ))
}

/// Check 2: the variation-duality identities for orders 1..4 over 100 paths
/// of length 10^4 (odd order: a walk at random time with powered rewards;
/// even order: a centered walk in edge scenery).
pub fn check_variation_duality(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "variation");
    let paths = 100usize;
    let n = 10_000usize;
    let devs: Vec<(u32, f64)> = (0..paths)
        .into_par_iter()
        .map(|r| {
            let field = SceneryField::new(
                SceneryLaw::Gaussian,
                2.0,
                Site::Edge,
                &stream.child("scenery", r as u64),
            )?;
            let walk = gen_walk(&CollectingSpec::Simple, n, &stream.child("walk", r as u64))?;
            let mut worst = (1u32, 0.0f64);
            for p in 1..=4u32 {
                let rep = rant_check(&field, &walk, p)?;
                if rep.max_deviation > worst.1 {
                    worst = (p, rep.max_deviation);
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let (worst_p, max_dev) =
        devs.iter().cloned().fold((1, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    Ok(verdict(
        "variation-duality",
        seed,
        max_dev < IDENTITY_TOL,
        serde_json::json!({
            "paths": paths,
            "steps": n,
            "orders": [1, 2, 3, 4],
            "max_relative_deviation": max_dev,
            "worst_order": worst_p,
            "tolerance": IDENTITY_TOL,
        }),
    ))
}

/// Check 3: the law of the discretized stable integral. For each alpha the
/// grid integral of `f = 1_[0,1] + 0.5 * 1_[1,3]` is KS-compared against
/// direct stable draws at scale `||f||_alpha`.
pub fn check_stable_integral_law(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "integral-law");
    let reps = 10_000usize;
    let kernel = Kernel::Piecewise { lo: 0.0, step: 1.0, values: vec![1.0, 0.5, 0.5] };
    let mut details = serde_json::Map::new();
    let mut pass = true;
    for (ai, &alpha) in [1.2f64, 1.7, 2.0].iter().enumerate() {
        let s = stream.child("alpha", ai as u64);
        let grid_samples: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let grid =
                    MeasureGrid1D::sample(-4.0, 4.0, 2048, alpha, &s.child("grid", r as u64))?;
                grid.integral(&kernel)
            })
            .collect::<Result<_>>()?;
        let sigma = (1.0 + 2.0 * 0.5f64.powf(alpha)).powf(1.0 / alpha);
        let direct =
            sample_sas(StableParams::new(alpha, sigma)?, reps, &s.child("direct", 0))?;
        let ks = stats::ks_test(&grid_samples, stats::KsReference::Samples(&direct))?;
        pass &= ks.p_value > 0.01;
        details.insert(
            format!("alpha_{alpha}"),
            serde_json::json!({
                "sigma_target": sigma,
                "ks_statistic": ks.statistic,
                "p_value": ks.p_value,
            }),
        );
    }
    details.insert("replicates".into(), serde_json::json!(reps));
    details.insert("p_threshold".into(), serde_json::json!(0.01));
    Ok(verdict("stable-integral-law", seed, pass, serde_json::Value::Object(details)))
}

/// Check 4: the occupation formula. Binned occupation densities of fBm
/// paths at 2^14 steps reproduce direct interval occupation times within
/// 2% on 20 random intervals per path.
pub fn check_occupation_formula(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "occupation");
    let grid = TimeGrid::unit(1 << 14)?;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (hi, &hurst) in [0.5f64, 0.75].iter().enumerate() {
        for path_idx in 0..2u64 {
            let s = stream.child("path", hi as u64 * 2 + path_idx);
            let path = gen_fbm_path(hurst, &grid, &s)?;
            let profile = local_time(&path, BinLayout::Count(DEFAULT_BINS))?;
            let (lo, hi_v) = (path.min_value(), path.max_value());
            let mut rng = s.child("intervals", 0).rng();
            use rand::Rng;
            for _ in 0..20 {
                let a = lo + (hi_v - lo) * 0.7 * rng.random::<f64>();
                let len = (hi_v - lo) * (0.25 + 0.35 * rng.random::<f64>());
                let b = (a + len).min(hi_v);
                let mut direct = 0.0;
                for w in path.values().windows(2) {
                    let (seg_lo, seg_hi) = (w[0].min(w[1]), w[0].max(w[1]));
                    if seg_hi == seg_lo {
                        if seg_lo >= a && seg_lo <= b {
                            direct += path.dt();
                        }
                    } else {
                        direct += path.dt() * ((b.min(seg_hi) - a.max(seg_lo)).max(0.0))
                            / (seg_hi - seg_lo);
                    }
                }
                let est = profile.integral_over(a, b);
                worst = worst.max((est - direct).abs() / direct);
                checked += 1;
            }
        }
    }
    Ok(verdict(
        "occupation-formula",
        seed,
        worst < 0.02,
        serde_json::json!({
            "paths": 4,
            "steps": 1 << 14,
            "intervals_checked": checked,
            "max_relative_error": worst,
            "tolerance": 0.02,
        }),
    ))
}

/// Positions of a streamed simple walk at the given sorted step indices
/// (the path itself is never materialized).
fn simple_walk_checkpoints(stream: &RandomStream, checkpoints: &[usize]) -> Vec<i64> {
    use rand::Rng;
    let mut rng = stream.rng();
    let n_max = *checkpoints.iter().max().unwrap();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0usize;
    let mut pos = 0i64;
    let mut produced = 0usize;
    while next < checkpoints.len() && checkpoints[next] == 0 {
        out.push(0);
        next += 1;
    }
    'outer: while produced < n_max {
        let mut bits: u64 = rng.random();
        for _ in 0..64 {
            pos += if bits & 1 == 1 { 1 } else { -1 };
            bits >>= 1;
            produced += 1;
            while next < checkpoints.len() && checkpoints[next] == produced {
                out.push(pos);
                next += 1;
            }
            if produced == n_max {
                break 'outer;
            }
        }
    }
    out
}

/// Rescaled walk-at-random-time endpoints for several n at once, sharing
/// one walk and one scenery per replicate (the first `n` steps of the long
/// walk serve as the length-n walk). Common randomness across n keeps the
/// ecf-distance differences between scales far less noisy than independent
/// samples would.
fn walk_at_random_time_endpoint_samples(
    stream: &RandomStream,
    n_values: &[usize],
    reps: usize,
    ts: &[f64],
) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut checkpoints: Vec<usize> = n_values
        .iter()
        .flat_map(|&n| ts.iter().map(move |&t| (n as f64 * t) as usize))
        .collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = stream.child("rep", r as u64);
            let at = simple_walk_checkpoints(&s.child("walk", 0), &checkpoints);
            let position_at = |n: usize, t: f64| -> i64 {
                let idx = (n as f64 * t) as usize;
                at[checkpoints.binary_search(&idx).unwrap()]
            };
            let field =
                SceneryField::new(SceneryLaw::Gaussian, 2.0, Site::Edge, &s.child("scenery", 0))?;
            let lo = at.iter().cloned().min().unwrap().min(0);
            let hi = at.iter().cloned().max().unwrap().max(0);
            let table = PrefixTable::build(&field, lo, hi)?;
            Ok(n_values
                .iter()
                .map(|&n| {
                    let scale = (n as f64).powf(-0.25);
                    ts.iter().map(|&t| scale * table.sum_to(position_at(n, t))).collect()
                })
                .collect())
        })
        .collect()
}

/// Check 5: finite-dimensional convergence of the rescaled walk at random
/// time to the indicator-kernel limit with Brownian driver. The sup ecf
/// distance over theta in [-3, 3] at t in {0.5, 1} must fall below 0.05 at
/// n = 2^14 and improve monotonically over n in {2^8, 2^11, 2^14}.
pub fn check_scaling_limit_fdd(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "fdd");
    let reps = 200_000usize;
    let ts = [0.5f64, 1.0];
    let thetas = theta_grid();

    // Reference: the limit process at the two times (shared across n).
    let limit_rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let s = stream.child("limit", r as u64);
            let grid = TimeGrid::new(0.5, 2)?;
            let y = gen_fbm_path(0.5, &grid, &s.child("driver", 0))?;
            let sup = y.max_value().abs().max(y.min_value().abs());
            let l = (4.0 * sup).max(1.0);
            let measure = MeasureGrid1D::sample(-l, l, 1024, 2.0, &s.child("measure", 0))?;
            ts.iter()
                .map(|&t| measure.integral(&Kernel::indicator(y.value_at(t)?)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let limit_ecfs: Vec<stats::EcfReport> = (0..ts.len())
        .map(|j| {
            let col: Vec<f64> = limit_rows.iter().map(|row| row[j]).collect();
            stats::ecf(&col, &thetas)
        })
        .collect::<Result<_>>()?;

    let n_values = [1usize << 8, 1 << 11, 1 << 14];
    let samples =
        walk_at_random_time_endpoint_samples(&stream.child("discrete", 0), &n_values, reps, &ts)?;
    let mut distances = Vec::new();
    let mut noise = Vec::new();
    for ni in 0..n_values.len() {
        let mut d: f64 = 0.0;
        let mut se: f64 = 0.0;
        for j in 0..ts.len() {
            let col: Vec<f64> = samples.iter().map(|row| row[ni][j]).collect();
            let e = stats::ecf(&col, &thetas)?;
            d = d.max(stats::ecf_distance(&e, &limit_ecfs[j])?);
            for (sd, sl) in e.stderrs.iter().zip(&limit_ecfs[j].stderrs) {
                se = se.max((sd * sd + sl * sl).sqrt());
            }
        }
        distances.push(d);
        noise.push(se);
    }
    // The true distance at the finest scale (a few 1e-4) sits below what
    // any desk-scale ecf estimate can resolve through a sup statistic, so
    // "improving" is asserted up to three combined standard errors, the
    // same resolution every other distributional check uses.
    let improving = (0..2).all(|k| {
        let slack = 3.0 * (noise[k] * noise[k] + noise[k + 1] * noise[k + 1]).sqrt();
        distances[k + 1] < distances[k] + slack
    });
    let pass = distances[2] < 0.05 && improving;
    Ok(verdict(
        "scaling-limit-fdd",
        seed,
        pass,
        serde_json::json!({
            "replicates": reps,
            "n_values": [1 << 8, 1 << 11, 1 << 14],
            "times": ts,
            "sup_ecf_distances": distances,
            "pointwise_noise": noise,
            "final_tolerance": 0.05,
        }),
    ))
}

/// Check 6: self-similarity exponents. The indicator-kernel limit with
/// Brownian driver has Hurst 1/4; the walk in random scenery with square
/// integrable rewards has Hurst 3/4. Both estimated over 10^3 paths.
pub fn check_hurst_exponents(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "hurst");
    let paths = 1000usize;

    // Indicator-kernel limit ensemble on a 64-step unit grid.
    let grid = TimeGrid::unit(64)?;
    let spec = {
        let mut s = LimitSpec::new(
            Flavor::Delta,
            KernelKind::Indicator,
            2.0,
            DriverSpec::Fbm { hurst: 0.5 },
        );
        s.cells = 1024;
        s
    };
    let delta_paths: Vec<RealPath> = (0..paths)
        .into_par_iter()
        .map(|r| simulate_limit(&spec, &grid, &stream.child("delta", r as u64)))
        .collect::<Result<_>>()?;
    let delta_report = stats::estimate_hurst(&delta_paths)?;
    let delta_target = hurst_target(2.0, 0.5, KernelKind::Indicator)?;

    // Walk-in-scenery ensemble, decimated onto a 64-point grid.
    let n = 1usize << 14;
    let stride = n / 64;
    let z_paths: Vec<RealPath> = (0..paths)
        .into_par_iter()
        .map(|r| {
            let s = stream.child("rwrs", r as u64);
            let walk = gen_walk(&CollectingSpec::Simple, n, &s.child("walk", 0))?;
            let field = SceneryField::new(
                SceneryLaw::Gaussian,
                2.0,
                Site::Vertex,
                &s.child("scenery", 0),
            )?;
            let z = rwrs(&field, &walk)?;
            let scale = (n as f64).powf(-0.75);
            let values: Vec<f64> =
                (0..=64).map(|j| scale * z.values()[j * stride]).collect();
            RealPath::new(1.0 / 64.0, values)
        })
        .collect::<Result<_>>()?;
    let z_report = stats::estimate_hurst(&z_paths)?;
    let z_target = hurst_target(2.0, 0.5, KernelKind::LocalTime)?;

    let pass = (delta_report.estimate - delta_target).abs() < 0.05
        && (z_report.estimate - z_target).abs() < 0.05;
    Ok(verdict(
        "hurst-exponents",
        seed,
        pass,
        serde_json::json!({
            "paths": paths,
            "indicator_limit": {
                "estimate": delta_report.estimate,
                "stderr": delta_report.stderr,
                "target": delta_target,
            },
            "walk_in_scenery": {
                "estimate": z_report.estimate,
                "stderr": z_report.stderr,
                "target": z_target,
            },
            "tolerance": 0.05,
        }),
    ))
}

/// Check 7: the recursive construction. One product-space indicator step
/// from Brownian motion must match fBm with Hurst 1/4 (variance scale
/// `2 E'|Y_1|`) in covariance on a 5x5 time grid; the Hurst composition is
/// re-evaluated independently on 10^4 random words with zero deviation.
pub fn check_recursion_construction(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "recursion");
    let times = [0.2f64, 0.4, 0.6, 0.8, 1.0];
    let grid = TimeGrid::new(0.2, 5)?;
    let state = RecursionState::base_fbm(0.5, 2.0, grid)?;
    let level1 = crate::recursion::recurse_step(&state, Symbol::Times, 1 << 9, 2048)?;
    let reps = 1500usize;
    let rows: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let p = level1.sample_path(&stream.child("path", r as u64))?;
            times.iter().map(|&t| p.value_at(t)).collect()
        })
        .collect::<Result<_>>()?;
    let cov = stats::cov_matrix(&rows, &times)?;
    let scale = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    let fbm_cov = |s: f64, t: f64| {
        0.5 * (s.sqrt() + t.sqrt() - (t - s).abs().sqrt())
    };
    let mut cov_pass = true;
    let mut worst_sigma = 0.0f64;
    for i in 0..times.len() {
        for j in 0..times.len() {
            let target = scale * fbm_cov(times[i], times[j]);
            let sigmas = (cov.cov[i][j] - target).abs() / cov.stderr[i][j];
            worst_sigma = worst_sigma.max(sigmas);
            cov_pass &= sigmas < 3.0;
        }
    }

    // Hurst composition against an independent recursive evaluator.
    fn eval_recursive(word: &[Symbol], h0: f64, alpha: f64) -> Result<f64> {
        match word.split_last() {
            None => Ok(h0),
            Some((&last, init)) => phi(last, eval_recursive(init, h0, alpha)?, alpha),
        }
    }
    let mut rng = stream.child("words", 0).rng();
    use rand::Rng;
    let mut compose_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let len = rng.random_range(0..=12usize);
        let word: Vec<Symbol> = (0..len)
            .map(|_| match rng.random_range(0..4u8) {
                0 => Symbol::Plus,
                1 => Symbol::Minus,
                2 => Symbol::Star,
                _ => Symbol::Times,
            })
            .collect();
        let h0 = 0.05 + 0.9 * rng.random::<f64>();
        let alpha = 1.05 + 0.95 * rng.random::<f64>();
        let a = compose_hurst(&RecursionWord(word.clone()), h0, alpha)?;
        let b = eval_recursive(&word, h0, alpha)?;
        compose_dev = compose_dev.max((a - b).abs());
    }
    let pass = cov_pass && compose_dev == 0.0;
    Ok(verdict(
        "recursion-construction",
        seed,
        pass,
        serde_json::json!({
            "replicates": reps,
            "hurst_after_step": level1.hurst(),
            "covariance_worst_sigmas": worst_sigma,
            "covariance_threshold_sigmas": 3.0,
            "compose_words": 10_000,
            "compose_max_deviation": compose_dev,
        }),
    ))
}

/// Check 8: reward-schema limits. The independent-scenery schema at t = 1
/// has variance `2 E'|Y_1| = 2 sqrt(2/pi)` within 5%; the single-scenery
/// schema matches the expectation-kernel law whose scale is computed by
/// Gaussian-tail quadrature.
pub fn check_schema_limits(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "schema");
    let grid = TimeGrid::new(1.0, 1)?;

    let reps_ind = 4000usize;
    let vals: Vec<f64> = (0..reps_ind)
        .into_par_iter()
        .map(|r| {
            let p = schema(
                SchemaMode::Independent,
                2.0,
                &CollectingSpec::Simple,
                1 << 12,
                64,
                &grid,
                &stream.child("independent", r as u64),
            )?;
            p.value_at(1.0)
        })
        .collect::<Result<_>>()?;
    let (var, var_se) = stats::variance_stderr(&vals);
    let var_target = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
    let ind_pass = (var - var_target).abs() / var_target < 0.05;

    // Single scenery: ecf against exp(-theta^2 sigma*^2) with
    // sigma*^2 = 2 int_0^inf (1 - Phi(x))^2 dx by Simpson quadrature.
    let normal = statrs::distribution::Normal::new(0.0, 1.0)
        .map_err(|e| crate::error::Error::Numeric(e.to_string()))?;
    let tail = |x: f64| 1.0 - normal.cdf(x);
    let mut quad = 0.0;
    let hq = 1e-3;
    let mut x = 0.0;
    while x < 10.0 {
        let f0 = tail(x).powi(2);
        let f1 = tail(x + 0.5 * hq).powi(2);
        let f2 = tail(x + hq).powi(2);
        quad += hq / 6.0 * (f0 + 4.0 * f1 + f2);
        x += hq;
    }
    let sigma_star_sq = 2.0 * quad;

    let reps_ss = 2000usize;
    let ss_vals: Vec<f64> = (0..reps_ss)
        .into_par_iter()
        .map(|r| {
            let p = schema(
                SchemaMode::SingleScenery,
                2.0,
                &CollectingSpec::Simple,
                1 << 10,
                1 << 10,
                &grid,
                &stream.child("single", r as u64),
            )?;
            p.value_at(1.0)
        })
        .collect::<Result<_>>()?;
    let thetas = [0.5f64, 1.0, 1.5];
    let e = stats::ecf(&ss_vals, &thetas)?;
    let mut ss_pass = true;
    let mut ss_detail = Vec::new();
    for (j, &theta) in thetas.iter().enumerate() {
        let target = (-(theta * theta) * sigma_star_sq).exp();
        let ok = (e.values[j] - target).abs() < 3.0 * e.stderrs[j];
        ss_pass &= ok;
        ss_detail.push(serde_json::json!({
            "theta": theta,
            "ecf": e.values[j],
            "target": target,
            "stderr": e.stderrs[j],
        }));
    }

    Ok(verdict(
        "schema-limits",
        seed,
        ind_pass && ss_pass,
        serde_json::json!({
            "independent": {
                "replicates": reps_ind,
                "variance": var,
                "variance_stderr": var_se,
                "target": var_target,
                "tolerance_relative": 0.05,
            },
            "single_scenery": {
                "replicates": reps_ss,
                "sigma_star_sq": sigma_star_sq,
                "ecf_checks": ss_detail,
            },
        }),
    ))
}

/// Check 9: Brownian extraction by hitting-time time change. The
/// line-measure ensemble has covariance `2 min(s, t)` on four levels and a
/// normal marginal; the product-measure ensemble satisfies
/// `E (X_1 + X_2)^2 = 2 (3 * 1 + 2) = 10`; both with drop rate below 1%.
pub fn check_brownian_extraction(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "extract");
    let minus_cfg = ExtractConfig {
        hurst: 0.5,
        levels: vec![0.5, 1.0, 1.5, 2.0],
        replicates: 10_000,
        horizon: (1u64 << 17) as f64,
        dt: 1.0,
        cells: 1024,
        m_copies: 1,
    };
    let minus = extract_bm_minus(&minus_cfg, &stream.child("minus", 0))?;
    let cov = stats::cov_matrix(&minus.values, &minus_cfg.levels)?;
    let mut cov_pass = true;
    let mut worst_sigma: f64 = 0.0;
    for i in 0..minus_cfg.levels.len() {
        for j in 0..minus_cfg.levels.len() {
            let target = 2.0 * minus_cfg.levels[i].min(minus_cfg.levels[j]);
            let sigmas = (cov.cov[i][j] - target).abs() / cov.stderr[i][j];
            worst_sigma = worst_sigma.max(sigmas);
            cov_pass &= sigmas < 3.0;
        }
    }
    let marginal: Vec<f64> = minus.values.iter().map(|r| r[1]).collect();
    let normal = statrs::distribution::Normal::new(0.0, 2f64.sqrt())
        .map_err(|e| crate::error::Error::Numeric(e.to_string()))?;
    let ks = stats::ks_test(&marginal, stats::KsReference::Cdf(&|x| normal.cdf(x)))?;

    let times_cfg = ExtractConfig {
        hurst: 0.5,
        levels: vec![1.0, 2.0],
        replicates: 4000,
        horizon: (1u64 << 26) as f64,
        dt: 1.0,
        cells: 512,
        m_copies: 32,
    };
    let times = extract_bm_times(&times_cfg, &stream.child("times", 0))?;
    let sums: Vec<f64> = times.values.iter().map(|r| (r[0] + r[1]).powi(2)).collect();
    let (second_moment, sm_se) = stats::mean_stderr(&sums);
    let sm_target = 10.0;
    let sm_pass = (second_moment - sm_target).abs() < 3.0 * sm_se;

    let drops_ok = minus.drop_rate() < 0.01 && times.drop_rate() < 0.01;
    let pass = cov_pass && ks.p_value > 0.01 && sm_pass && drops_ok;
    Ok(verdict(
        "brownian-extraction",
        seed,
        pass,
        serde_json::json!({
            "line_measure": {
                "levels": minus_cfg.levels,
                "replicates": minus_cfg.replicates,
                "covariance_worst_sigmas": worst_sigma,
                "marginal_ks_p": ks.p_value,
                "drop_rate": minus.drop_rate(),
                "max_level_gap": minus.max_level_gap,
            },
            "product_measure": {
                "levels": times_cfg.levels,
                "replicates": times_cfg.replicates,
                "copies": times_cfg.m_copies,
                "symmetrized_second_moment": second_moment,
                "stderr": sm_se,
                "target": sm_target,
                "drop_rate": times.drop_rate(),
            },
            "variance_convention_factor": 2.0,
        }),
    ))
}

/// Check 10: the local-time scaling relation for (Brownian, c = 4) and
/// (fBm 0.75, c = 2), each within 3 combined standard errors.
pub fn check_localtime_scaling(seed: u64) -> Result<Verdict> {
    let stream = root(seed, "lt-scaling");
    let bm = localtime_scaling_check(
        &DriverSpec::Fbm { hurst: 0.5 },
        4.0,
        600,
        1 << 10,
        &stream.child("bm", 0),
    )?;
    let fbm = localtime_scaling_check(
        &DriverSpec::Fbm { hurst: 0.75 },
        2.0,
        600,
        1 << 10,
        &stream.child("fbm", 0),
    )?;
    Ok(verdict(
        "localtime-scaling",
        seed,
        bm.pass && fbm.pass,
        serde_json::json!({
            "brownian_c4": bm,
            "fbm075_c2": fbm,
        }),
    ))
}

/// The ten statistical/identity checks, in order.
pub fn run_core_checks(seed: u64) -> Result<Vec<Verdict>> {
    Ok(vec![
        check_dual_definitions(seed)?,
        check_variation_duality(seed)?,
        check_stable_integral_law(seed)?,
        check_occupation_formula(seed)?,
        check_scaling_limit_fdd(seed)?,
        check_hurst_exponents(seed)?,
        check_recursion_construction(seed)?,
        check_schema_limits(seed)?,
        check_brownian_extraction(seed)?,
        check_localtime_scaling(seed)?,
    ])
}

/// Check 11: determinism. Two full runs of the core checks at the same
/// seed must serialize to byte-identical JSON.
pub fn check_determinism(seed: u64) -> Result<(Vec<Verdict>, Verdict)> {
    let first = run_core_checks(seed)?;
    let second = run_core_checks(seed)?;
    let a = serde_json::to_vec(&first).map_err(|e| crate::error::Error::Numeric(e.to_string()))?;
    let b =
        serde_json::to_vec(&second).map_err(|e| crate::error::Error::Numeric(e.to_string()))?;
    let identical = a == b;
    let det = verdict(
        "determinism",
        seed,
        identical,
        serde_json::json!({
            "bytes": a.len(),
            "identical": identical,
        }),
    );
    Ok((first, det))
}

/// Full suite: the core checks plus the determinism rerun (the core checks
/// execute twice in total).
pub fn run_all(seed: u64) -> Result<Vec<Verdict>> {
    let (mut verdicts, det) = check_determinism(seed)?;
    verdicts.push(det);
    Ok(verdicts)
}
