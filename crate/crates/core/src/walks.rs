//! Discrete collecting / random-time processes and their rescalings.
//!
//! A collecting process is an integer-valued path `W(0..n)` with `W(0) = 0`
//! whose rescaling `n^{-H'} W(nt)` converges to an H'-self-similar,
//! stationary-increment limit. Three kinds are supported: the simple +-1
//! walk (H' = 1/2), a walk with rounded symmetric beta-stable steps
//! (H' = 1/beta), and the ceiling of fractional-Gaussian partial sums
//! (H' free in (0, 1)).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{gen_fgn, sas_standard, RandomStream};

/// Rounded beta-stable steps are clamped to this magnitude so that lattice
/// arithmetic cannot overflow; the clamp probability is below 1e-40 per draw
/// for beta > 1.
const MAX_STABLE_STEP: i64 = 1 << 40;

/// Uniform time grid `0, dt, 2 dt, ..., steps * dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("grid needs at least one step".into()));
        }
        Ok(Self { dt, steps })
    }

    /// Grid over [0, 1] with `steps` uniform steps.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(1.0 / steps as f64, steps)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn t_max(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// Integer lattice path with `positions[0] = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePath {
    positions: Vec<i64>,
}

impl LatticePath {
    pub fn new(positions: Vec<i64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter("lattice path cannot be empty".into()));
        }
        if positions[0] != 0 {
            return Err(Error::InvalidParameter("lattice path must start at 0".into()));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    /// Number of steps (one less than the number of positions).
    pub fn len_steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn min_position(&self) -> i64 {
        *self.positions.iter().min().unwrap()
    }

    pub fn max_position(&self) -> i64 {
        *self.positions.iter().max().unwrap()
    }

    /// Linear interpolation at a fractional index.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let values: Vec<f64> = self.positions.iter().map(|&p| p as f64).collect();
        interpolate(&values, t)
    }
}

/// Real-valued path on a uniform grid starting at t = 0 with value 0.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPath {
    dt: f64,
    values: Vec<f64>,
}

impl RealPath {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid spacing must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("real path cannot be empty".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter("real path must start at 0".into()));
        }
        Ok(Self { dt, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| k as f64 * self.dt)
    }

    /// Linear interpolation at time `t` in `[0, t_max]`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        interpolate(&self.values, t / self.dt)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Which collecting process to generate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CollectingSpec {
    /// Simple +-1 random walk, H' = 1/2.
    Simple,
    /// Exact symmetric beta-stable steps rounded to the nearest integer
    /// (stays in the beta-stable domain of attraction), H' = 1/beta.
    BetaStable { beta: f64 },
    /// Ceiling of partial sums of fractional Gaussian noise, H' given.
    GaussianDependent { hurst: f64 },
}

impl CollectingSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CollectingSpec::Simple => Ok(()),
            CollectingSpec::BetaStable { beta } => {
                // beta <= 1 is rejected: E|Y_t| < infinity requires beta > 1.
                if *beta > 1.0 && *beta <= 2.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "beta-stable steps require beta in (1, 2], got {beta}"
                    )))
                }
            }
            CollectingSpec::GaussianDependent { hurst } => {
                if *hurst > 0.0 && *hurst < 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "dependent walk requires Hurst in (0, 1), got {hurst}"
                    )))
                }
            }
        }
    }

    /// Self-similarity index H' of the scaling limit.
    pub fn hurst(&self) -> f64 {
        match self {
            CollectingSpec::Simple => 0.5,
            CollectingSpec::BetaStable { beta } => 1.0 / beta,
            CollectingSpec::GaussianDependent { hurst } => *hurst,
        }
    }
}

/// Generate a collecting process with `n` steps.
pub fn gen_walk(spec: &CollectingSpec, n: usize, stream: &RandomStream) -> Result<LatticePath> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("walk length must be >= 1".into()));
    }
    let mut positions = Vec::with_capacity(n + 1);
    positions.push(0i64);
    match spec {
        CollectingSpec::Simple => {
            let mut rng = stream.rng();
            let mut pos = 0i64;
            let mut produced = 0usize;
            'outer: loop {
                let mut bits: u64 = rng.random();
                for _ in 0..64 {
                    pos += if bits & 1 == 1 { 1 } else { -1 };
                    bits >>= 1;
                    positions.push(pos);
                    produced += 1;
                    if produced == n {
                        break 'outer;
                    }
                }
            }
        }
        CollectingSpec::BetaStable { beta } => {
            let mut rng = stream.rng();
            let mut pos = 0i64;
            for _ in 0..n {
                let step = sas_standard(*beta, &mut rng).round();
                let step = step.clamp(-(MAX_STABLE_STEP as f64), MAX_STABLE_STEP as f64) as i64;
                pos += step;
                positions.push(pos);
            }
        }
        CollectingSpec::GaussianDependent { hurst } => {
            let noise = gen_fgn(*hurst, n, stream)?;
            let mut g = 0.0f64;
            for x in noise {
                g += x;
                positions.push(g.ceil() as i64);
            }
        }
    }
    LatticePath::new(positions)
}

/// Linear interpolation of a discretely indexed sequence at fractional
/// index `t`: `v[floor t] + (t - floor t)(v[ceil t] - v[floor t])`.
pub fn interpolate(values: &[f64], t: f64) -> Result<f64> {
    let last = (values.len() - 1) as f64;
    if !(0.0..=last).contains(&t) {
        return Err(Error::OutOfRange(format!(
            "index {t} outside [0, {last}]"
        )));
    }
    let lo = t.floor() as usize;
    if lo as f64 == t {
        return Ok(values[lo]);
    }
    let frac = t - lo as f64;
    Ok(values[lo] + frac * (values[lo + 1] - values[lo]))
}

/// Rescale the first `n` steps of a lattice path onto a unit time grid:
/// `X_n(k/n) = n^{-H'} W(k)`.
pub fn rescale(path: &LatticePath, n: usize, hurst: f64) -> Result<RealPath> {
    if path.len_steps() < n {
        return Err(Error::OutOfRange(format!(
            "path has {} steps, cannot rescale over n = {n}",
            path.len_steps()
        )));
    }
    let scale = (n as f64).powf(-hurst);
    let values: Vec<f64> = path.positions[..=n].iter().map(|&p| scale * p as f64).collect();
    RealPath::new(1.0 / n as f64, values)
}

/// Same rescaling for an already real-valued sequence (e.g. a reward path).
pub fn rescale_values(values: &[f64], n: usize, hurst: f64) -> Result<RealPath> {
    if values.len() < n + 1 {
        return Err(Error::OutOfRange(format!(
            "sequence has {} entries, cannot rescale over n = {n}",
            values.len()
        )));
    }
    let scale = (n as f64).powf(-hurst);
    let scaled: Vec<f64> = values[..=n].iter().map(|&v| scale * v).collect();
    RealPath::new(1.0 / n as f64, scaled)
}
