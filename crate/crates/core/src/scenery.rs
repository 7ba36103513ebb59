//! Sceneries, edge signs, and the discrete reward processes.
//!
//! A scenery attaches one i.i.d. symmetric reward to every vertex (or edge)
//! of the integer lattice. A walk accumulates rewards in two ways:
//!
//! * `rwrs` — the walk-in-scenery sum `Z_n = sum eta(W(k))`;
//! * `rwrt_signed` / `rwrt_indicator` — the walk-at-random-time sum `A_n`,
//!   either by the alternating edge-sign rule or as the two-sided prefix
//!   sum evaluated at `W(n)`. Both formulations agree path by path.
//!
//! Edge `e` is identified with the interval `[e, e+1]`, so the edges crossed
//! by a jump from `a` to `b` are `min(a,b), ..., max(a,b) - 1`.

use std::collections::HashMap;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{RandomStream, SceneryLaw, StableParams};
use crate::walks::{interpolate, CollectingSpec, LatticePath, RealPath, TimeGrid};

/// Whether scenery rewards sit on vertices or edges of the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Site {
    Vertex,
    Edge,
}

/// Lazily indexed i.i.d. scenery on the integer lattice.
///
/// `value(i)` is a pure function of `(stream, i)`: sites are never stored,
/// so walks may roam arbitrarily far without preallocation, and repeated
/// queries always agree bit for bit.
#[derive(Clone, Debug)]
pub struct SceneryField {
    kind: SceneryLaw,
    alpha: f64,
    site: Site,
    key: [u8; 32],
    scale: f64,
}

impl SceneryField {
    pub fn new(kind: SceneryLaw, alpha: f64, site: Site, stream: &RandomStream) -> Result<Self> {
        kind.validate(alpha)?;
        Ok(Self { kind, alpha, site, key: stream.key(), scale: 1.0 })
    }

    /// Multiply every reward by `scale` (setting 0 gives the degenerate
    /// zero scenery used to test that all reward processes vanish).
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> SceneryLaw {
        self.kind
    }

    /// Closed-form p-th moment of the reward law, when available.
    pub fn moment(&self, p: u32) -> Result<f64> {
        if p % 2 == 1 {
            return Ok(0.0); // symmetric laws
        }
        let base = match self.kind {
            SceneryLaw::Gaussian => {
                // E[eta^{2q}] = (2q-1)!! * 2^q for eta ~ N(0, 2).
                let q = p / 2;
                let mut double_fact = 1.0;
                let mut k = 2 * q as i64 - 1;
                while k > 1 {
                    double_fact *= k as f64;
                    k -= 2;
                }
                double_fact * 2f64.powi(q as i32)
            }
            SceneryLaw::Rademacher => 2f64.powi((p / 2) as i32),
            SceneryLaw::ExactStable => {
                if self.alpha == 2.0 {
                    // Exact-stable with alpha = 2 is N(0, 2).
                    let q = p / 2;
                    let mut double_fact = 1.0;
                    let mut k = 2 * q as i64 - 1;
                    while k > 1 {
                        double_fact *= k as f64;
                        k -= 2;
                    }
                    double_fact * 2f64.powi(q as i32)
                } else {
                    return Err(Error::Unsupported(format!(
                        "exact-stable scenery with alpha = {} has no finite moment of order {p}",
                        self.alpha
                    )));
                }
            }
        };
        Ok(base * self.scale.powi(p as i32))
    }

    /// Deterministic reward at site `i`.
    pub fn value(&self, i: i64) -> f64 {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update(i.to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(hasher.finalize().into());
        self.scale * self.kind.draw(self.alpha, &mut rng)
    }

    /// Rewards over an inclusive site range.
    pub fn values_range(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|i| self.value(i)).collect()
    }
}

/// Two-sided prefix sums of a scenery: `S(x) = sum of eta(e) over e in [0, x]`,
/// where `e in [0, x]` means `0 <= e < x` for positive `x` and `x <= e < 0`
/// for negative `x`; `S(0) = 0`.
pub struct PrefixTable {
    lo: i64,
    cum: Vec<f64>,
}

impl PrefixTable {
    /// Tabulate `S` for arguments in `[lo, hi]` (must straddle 0).
    pub fn build(field: &SceneryField, lo: i64, hi: i64) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidParameter("prefix range must contain 0".into()));
        }
        // cum[k] = S(lo + k). Ascending-index summation on each side keeps
        // the ordering deterministic.
        let mut cum = vec![0.0; (hi - lo + 1) as usize];
        let zero_idx = (-lo) as usize;
        let mut acc = 0.0;
        for x in 1..=hi {
            acc += field.value(x - 1);
            cum[zero_idx + x as usize] = acc;
        }
        acc = 0.0;
        for x in (lo..0).rev() {
            acc = field.value(x) + acc;
            cum[(x - lo) as usize] = acc;
        }
        Ok(Self { lo, cum })
    }

    pub fn sum_to(&self, x: i64) -> f64 {
        self.cum[(x - self.lo) as usize]
    }
}

/// Cumulative reward path with `values[0] = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardPath {
    values: Vec<f64>,
}

impl RewardPath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values[0] != 0.0 {
            return Err(Error::InvalidParameter("reward path must start at 0".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len_steps(&self) -> usize {
        self.values.len() - 1
    }

    /// Linear interpolation at fractional index `t`.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        interpolate(&self.values, t)
    }
}

/// Alternating signs on the edge set; unvisited edges carry +1.
#[derive(Clone, Debug, Default)]
pub struct EdgeSignState {
    signs: HashMap<i64, i8>,
}

impl EdgeSignState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sign(&self, edge: i64) -> i8 {
        *self.signs.get(&edge).unwrap_or(&1)
    }

    pub fn flip(&mut self, edge: i64) {
        let e = self.signs.entry(edge).or_insert(1);
        *e = -*e;
    }
}

fn require_site(field: &SceneryField, site: Site, what: &str) -> Result<()> {
    if field.site() != site {
        return Err(Error::InvalidParameter(format!(
            "{what} requires a {site:?}-indexed scenery, got {:?}",
            field.site()
        )));
    }
    Ok(())
}

/// Walk in random scenery: `Z_n = sum_{k<=n} eta(W(k))`.
pub fn rwrs(field: &SceneryField, walk: &LatticePath) -> Result<RewardPath> {
    require_site(field, Site::Vertex, "rwrs")?;
    let lo = walk.min_position();
    let cache = field.values_range(lo, walk.max_position());
    let mut values = Vec::with_capacity(walk.positions().len());
    values.push(0.0);
    let mut acc = 0.0;
    for &pos in &walk.positions()[1..] {
        acc += cache[(pos - lo) as usize];
        values.push(acc);
    }
    RewardPath::new(values)
}

/// Edges crossed by the k-th step, i.e. those between `a` and `b`.
fn edges_of_step(a: i64, b: i64) -> std::ops::Range<i64> {
    a.min(b)..a.max(b)
}

/// Walk at random time, alternating-sign formulation: at each step collect
/// the signed rewards of every crossed edge, then flip those signs.
pub fn rwrt_signed(field: &SceneryField, walk: &LatticePath) -> Result<RewardPath> {
    rwrt_signed_with_state(field, walk).map(|(path, _)| path)
}

/// Same as [`rwrt_signed`], also returning the final edge-sign state.
pub fn rwrt_signed_with_state(
    field: &SceneryField,
    walk: &LatticePath,
) -> Result<(RewardPath, EdgeSignState)> {
    require_site(field, Site::Edge, "rwrt_signed")?;
    let lo = walk.min_position();
    let hi = walk.max_position();
    let cache = if hi > lo { field.values_range(lo, hi - 1) } else { Vec::new() };
    let mut signs = EdgeSignState::new();
    let mut values = Vec::with_capacity(walk.positions().len());
    values.push(0.0);
    let mut acc = 0.0;
    for k in 1..walk.positions().len() {
        let a = walk.positions()[k - 1];
        let b = walk.positions()[k];
        for e in edges_of_step(a, b) {
            acc += f64::from(signs.sign(e)) * cache[(e - lo) as usize];
        }
        for e in edges_of_step(a, b) {
            signs.flip(e);
        }
        values.push(acc);
    }
    Ok((RewardPath::new(values)?, signs))
}

/// Walk at random time, prefix-sum formulation: `A_n = S(W(n))`.
pub fn rwrt_indicator(field: &SceneryField, walk: &LatticePath) -> Result<RewardPath> {
    require_site(field, Site::Edge, "rwrt_indicator")?;
    let lo = walk.min_position().min(0);
    let hi = walk.max_position().max(0);
    let table = PrefixTable::build(field, lo, hi)?;
    let values: Vec<f64> = walk.positions().iter().map(|&p| table.sum_to(p)).collect();
    RewardPath::new(values)
}

/// Relative deviation `|a - b| / max(1, |a|, |b|)` used by the exact
/// per-path identity checks.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}

/// Largest relative deviation between the two RWRT formulations over a path.
pub fn dual_definition_deviation(field: &SceneryField, walk: &LatticePath) -> Result<f64> {
    let signed = rwrt_signed(field, walk)?;
    let indicator = rwrt_indicator(field, walk)?;
    Ok(signed
        .values()
        .iter()
        .zip(indicator.values())
        .map(|(&a, &b)| relative_deviation(a, b))
        .fold(0.0, f64::max))
}

/// Running p-th power sum of increments.
pub fn pth_variation(path: &RewardPath, p: u32) -> Result<RewardPath> {
    if p == 0 {
        return Err(Error::InvalidParameter("variation order must be >= 1".into()));
    }
    let mut values = Vec::with_capacity(path.values().len());
    values.push(0.0);
    let mut acc = 0.0;
    for w in path.values().windows(2) {
        acc += (w[1] - w[0]).powi(p as i32);
        values.push(acc);
    }
    RewardPath::new(values)
}

/// Outcome of the variation-duality identity check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariationReport {
    pub p: u32,
    pub max_deviation: f64,
    pub pass: bool,
    pub moment: f64,
}

/// Per-index deviation tolerance of the exact identities.
pub const IDENTITY_TOL: f64 = 1e-9;

/// Check the variation duality on one path: for odd `p` the p-th variation
/// of `A_n` is itself a walk at random time with rewards `eta^p`; for even
/// `p`, after subtracting `n E[eta^p]`, it is a walk in (edge) scenery with
/// rewards `eta^p - E[eta^p]`. Verified for unit-step collecting walks,
/// where each step crosses exactly one edge.
pub fn rant_check(field: &SceneryField, walk: &LatticePath, p: u32) -> Result<VariationReport> {
    require_site(field, Site::Edge, "rant_check")?;
    if p == 0 {
        return Err(Error::InvalidParameter("variation order must be >= 1".into()));
    }
    if walk
        .positions()
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() != 1)
    {
        return Err(Error::Unsupported(
            "variation duality is verified for unit-step collecting walks only".into(),
        ));
    }
    let moment = field.moment(p)?;
    let a = rwrt_signed(field, walk)?;
    let variation = pth_variation(&a, p)?;

    let lo = walk.min_position();
    let hi = walk.max_position();
    let powered: Vec<f64> = if hi > lo {
        field.values_range(lo, hi - 1).iter().map(|v| v.powi(p as i32)).collect()
    } else {
        Vec::new()
    };

    let mut max_dev: f64 = 0.0;
    if p % 2 == 1 {
        // Odd order: prefix sums of eta^p evaluated at W(k) (no centering,
        // the law is symmetric).
        let lo_all = lo.min(0);
        let hi_all = hi.max(0);
        let mut cum = vec![0.0; (hi_all - lo_all + 1) as usize];
        let zero_idx = (-lo_all) as usize;
        let mut acc = 0.0;
        for x in 1..=hi_all {
            acc += powered[(x - 1 - lo) as usize];
            cum[zero_idx + x as usize] = acc;
        }
        acc = 0.0;
        for x in (lo_all..0).rev() {
            acc = powered[(x - lo) as usize] + acc;
            cum[(x - lo_all) as usize] = acc;
        }
        for (k, &pos) in walk.positions().iter().enumerate() {
            let rhs = cum[(pos - lo_all) as usize];
            max_dev = max_dev.max(relative_deviation(variation.values()[k], rhs));
        }
    } else {
        // Even order: centered rewards collected edge by edge. The deviation
        // is normalized by the uncentered variation as well: `V - n E[eta^p]`
        // cancels catastrophically in f64, so demanding 1e-9 relative to the
        // centered value alone would exceed what the arithmetic carries.
        let mut acc = 0.0;
        for (k, w) in walk.positions().windows(2).enumerate() {
            let e = w[0].min(w[1]);
            acc += powered[(e - lo) as usize] - moment;
            let v = variation.values()[k + 1];
            let lhs = v - (k + 1) as f64 * moment;
            let scale = 1.0f64.max(lhs.abs()).max(acc.abs()).max(v.abs());
            max_dev = max_dev.max((lhs - acc).abs() / scale);
        }
    }
    Ok(VariationReport { p, max_deviation: max_dev, pass: max_dev < IDENTITY_TOL, moment })
}

/// How reward copies share sceneries in a schema sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemaMode {
    /// Fresh scenery for every copy; normalization `c_n^{-1/alpha}`.
    Independent,
    /// One shared scenery; normalization `c_n^{-1}`; requires alpha > 1.
    SingleScenery,
}

/// Alternating random reward schema: the normalized sum over `c_n` copies of
/// `n^{-H} A_{nt}`, with `H = H'/alpha`, sampled on `grid`.
pub fn schema(
    mode: SchemaMode,
    alpha: f64,
    spec: &CollectingSpec,
    n: usize,
    c_n: usize,
    grid: &TimeGrid,
    stream: &RandomStream,
) -> Result<RealPath> {
    spec.validate()?;
    StableParams::new(alpha, 1.0)?;
    if mode == SchemaMode::SingleScenery && alpha <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "single-scenery schema requires alpha > 1, got {alpha}"
        )));
    }
    if n == 0 || c_n == 0 {
        return Err(Error::InvalidParameter("n and c_n must be >= 1".into()));
    }
    let h = spec.hurst() / alpha;
    let walk_steps = (n as f64 * grid.t_max()).ceil() as usize;
    let n_scale = (n as f64).powf(-h);
    let times = grid.times();
    let mut acc = vec![0.0f64; times.len()];
    for copy in 0..c_n {
        let scenery_index = match mode {
            SchemaMode::Independent => copy as u64,
            SchemaMode::SingleScenery => 0,
        };
        let field = SceneryField::new(
            SceneryLaw::ExactStable,
            alpha,
            Site::Edge,
            &stream.child("scenery", scenery_index),
        )?;
        let walk = crate::walks::gen_walk(spec, walk_steps, &stream.child("walk", copy as u64))?;
        let rewards = rwrt_indicator(&field, &walk)?;
        for (j, &t) in times.iter().enumerate() {
            acc[j] += n_scale * rewards.interpolate(n as f64 * t)?;
        }
    }
    let copy_scale = match mode {
        SchemaMode::Independent => (c_n as f64).powf(-1.0 / alpha),
        SchemaMode::SingleScenery => 1.0 / c_n as f64,
    };
    let values: Vec<f64> = acc.into_iter().map(|v| copy_scale * v).collect();
    RealPath::new(grid.dt(), values)
}
