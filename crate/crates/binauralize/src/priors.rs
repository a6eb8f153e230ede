//! Logistic-ramp left/right target maps, the annealing schedule, and the
//! spatial prior loss that pushes the two attention heads toward opposite
//! sides early in training.

use crate::error::{Error, Result};
use crate::visual::AttentionMap;

/// Geometry and shape of the logistic target ramps.
///
/// The ramp is parameterized by a center column `x0` and per-column slope `q`;
/// the left map decays with increasing column index, the right map mirrors it.
#[derive(Debug, Clone, Copy)]
pub struct PriorConfig {
    pub height: usize,
    pub width: usize,
    /// Logistic slope per column. Defaults to `8 / width` so the ramp
    /// transitions over roughly the middle half of the grid.
    pub slope: f64,
    /// Ramp center in 1-based column units. Defaults to `(width + 1) / 2`.
    pub center: f64,
    /// Guard for normalization.
    pub eps: f64,
}

impl PriorConfig {
    /// Scale-free defaults for an `height x width` grid.
    pub fn for_grid(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            slope: 8.0 / width as f64,
            center: (width as f64 + 1.0) / 2.0,
            eps: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidArg("prior grid dims must be positive".into()));
        }
        if !self.slope.is_finite() || self.slope <= 0.0 {
            return Err(Error::InvalidArg("prior slope must be positive".into()));
        }
        if self.center < 1.0 || self.center > self.width as f64 {
            return Err(Error::InvalidArg(format!(
                "prior center {} outside [1, {}]",
                self.center, self.width
            )));
        }
        Ok(())
    }
}

/// A nonnegative `H x W` grid normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl TargetMap {
    fn from_unnormalized(height: usize, width: usize, mut values: Vec<f64>, eps: f64) -> Self {
        let total: f64 = values.iter().sum();
        let norm = total + eps;
        for v in values.iter_mut() {
            *v /= norm;
        }
        Self {
            height,
            width,
            values,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, h: usize, w: usize) -> f64 {
        self.values[h * self.width + w]
    }

    /// Total mass in columns strictly left of the grid midline.
    pub fn left_half_mass(&self) -> f64 {
        let half = self.width / 2;
        let mut sum = 0.0;
        for h in 0..self.height {
            for w in 0..half {
                sum += self.at(h, w);
            }
        }
        sum
    }
}

/// Linear decay weight `lambda_0 * max(0, 1 - t/T_anneal)`.
#[derive(Debug, Clone, Copy)]
pub struct AnnealSchedule {
    pub lambda0: f64,
    pub t_anneal: u64,
}

impl AnnealSchedule {
    pub fn new(lambda0: f64, t_anneal: u64) -> Result<Self> {
        if lambda0 < 0.0 {
            return Err(Error::InvalidArg("lambda0 must be nonnegative".into()));
        }
        if t_anneal == 0 {
            return Err(Error::InvalidArg("t_anneal must be at least 1".into()));
        }
        Ok(Self { lambda0, t_anneal })
    }
}

/// Builds the left/right logistic target maps, each normalized to sum 1.
///
/// Columns use 1-based index `x`; the left map is proportional to
/// `1 / (1 + exp(q*(x - x0)))`, the right map to `1 / (1 + exp(-q*(x - x0)))`,
/// constant down each column.
pub fn logistic_targets(cfg: &PriorConfig) -> Result<(TargetMap, TargetMap)> {
    cfg.validate()?;
    let mut left = Vec::with_capacity(cfg.height * cfg.width);
    let mut right = Vec::with_capacity(cfg.height * cfg.width);
    for _ in 0..cfg.height {
        for col in 0..cfg.width {
            let x = (col + 1) as f64;
            let z = cfg.slope * (x - cfg.center);
            left.push(1.0 / (1.0 + z.exp()));
            right.push(1.0 / (1.0 + (-z).exp()));
        }
    }
    Ok((
        TargetMap::from_unnormalized(cfg.height, cfg.width, left, cfg.eps),
        TargetMap::from_unnormalized(cfg.height, cfg.width, right, cfg.eps),
    ))
}

/// `lambda_0 * max(0, 1 - t/T_anneal)`: non-increasing, exactly 0 for
/// `t >= T_anneal`.
pub fn anneal_weight(t: u64, sched: &AnnealSchedule) -> f64 {
    let frac = 1.0 - t as f64 / sched.t_anneal as f64;
    sched.lambda0 * frac.max(0.0)
}

/// Mean of squared per-cell differences.
fn mse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n
}

/// The weighted spatial prior
/// `lambda_t * [MSE(Attn_L, W_L) + MSE(Attn_R, W_R)]`.
pub fn prior_loss(
    attn_l: &AttentionMap,
    attn_r: &AttentionMap,
    targets: &(TargetMap, TargetMap),
    lambda_t: f64,
) -> Result<f64> {
    let (wl, wr) = targets;
    for (map, target) in [(attn_l, wl), (attn_r, wr)] {
        if map.height() != target.height() || map.width() != target.width() {
            return Err(Error::ShapeMismatch(format!(
                "prior_loss attention {}x{} vs target {}x{}",
                map.height(),
                map.width(),
                target.height(),
                target.width()
            )));
        }
    }
    Ok(lambda_t * (mse(attn_l.values(), wl.values()) + mse(attn_r.values(), wr.values())))
}
