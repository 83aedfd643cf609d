//! Synthetic shifting environments.
//!
//! Every draw is a pure function of `(seed, t)`: step `t` reads from stream
//! `t` of a ChaCha8 generator keyed by `seed`, and Gaussians come from
//! `rand_distr::Normal` (ziggurat sampling). Generation for one step never
//! depends on earlier steps, so seeds and steps can be produced in any order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::blackbox::{dot, norm, LossFunction};
use crate::error::{Error, Result};
use crate::intervals::Interval;

fn step_rng(seed: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t);
    rng
}

fn check_cover(intervals: impl Iterator<Item = Interval>, horizon: u64) -> Result<()> {
    let mut next = 1;
    for i in intervals {
        if i.start != next || i.end < i.start {
            return Err(Error::InvalidParameter(format!(
                "segments must tile [1..{horizon}] in order; found {i} where start {next} was expected"
            )));
        }
        next = i.end + 1;
    }
    if next != horizon + 1 {
        return Err(Error::InvalidParameter(format!("segments stop at {} of {horizon}", next - 1)));
    }
    Ok(())
}

/// Clamp `raw * scale` to `[0, 1]`.
pub fn normalize_loss(raw: f64, scale: f64) -> f64 {
    (raw * scale).clamp(0.0, 1.0)
}

/// Favored expert of a segment (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub interval: Interval,
    pub favored: usize,
}

/// How the favored expert's loss is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FavoredLoss {
    /// `min(1, [|x| - bonus]_+)` from the same draw as everyone else.
    Discounted { bonus: f64 },
    /// A constant level, ignoring the draw.
    Constant { level: f64 },
}

/// Shifting-expert LEA environment.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaScenario {
    pub n_experts: usize,
    pub horizon: u64,
    pub segments: Vec<Segment>,
    pub noise_sigma: f64,
    pub favored: FavoredLoss,
    /// Added to every non-favored loss before the cap.
    pub other_offset: f64,
    pub seed: u64,
}

impl LeaScenario {
    /// Three equal segments favoring experts 0, 1, 2 in turn.
    pub fn new(n_experts: usize, horizon: u64, seed: u64) -> Result<Self> {
        let s = Self {
            n_experts,
            horizon,
            segments: equal_segments(horizon, 3)?
                .into_iter()
                .enumerate()
                .map(|(k, interval)| Segment { interval, favored: k % n_experts.max(1) })
                .collect(),
            noise_sigma: 0.5,
            favored: FavoredLoss::Discounted { bonus: 0.5 },
            other_offset: 0.0,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_experts == 0 || self.horizon == 0 {
            return Err(Error::InvalidParameter("n_experts and horizon must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise_sigma {}", self.noise_sigma)));
        }
        if !(self.other_offset >= 0.0 && self.other_offset.is_finite()) {
            return Err(Error::InvalidParameter(format!("other_offset {}", self.other_offset)));
        }
        match self.favored {
            FavoredLoss::Discounted { bonus } if !(bonus >= 0.0 && bonus.is_finite()) => {
                return Err(Error::InvalidParameter(format!("favored_bonus {bonus}")));
            }
            FavoredLoss::Constant { level } if !(0.0..=1.0).contains(&level) => {
                return Err(Error::InvalidParameter(format!("favored level {level}")));
            }
            _ => {}
        }
        if let Some(s) = self.segments.iter().find(|s| s.favored >= self.n_experts) {
            return Err(Error::InvalidParameter(format!(
                "favored expert {} out of range for {} experts",
                s.favored, self.n_experts
            )));
        }
        check_cover(self.segments.iter().map(|s| s.interval), self.horizon)
    }

    pub fn segment_at(&self, t: u64) -> Option<&Segment> {
        self.segments.iter().find(|s| s.interval.contains(t))
    }

    /// Raw Gaussian draws `x_{t,i}` for step `t`.
    pub fn raw_draws(&self, t: u64) -> Vec<f64> {
        let normal = Normal::new(0.0, self.noise_sigma).expect("sigma validated");
        let mut rng = step_rng(self.seed, t);
        (0..self.n_experts).map(|_| normal.sample(&mut rng)).collect()
    }

    /// Loss vector at step `t` (1-based).
    pub fn losses(&self, t: u64) -> Result<Vec<f64>> {
        let seg = self.segment_at(t).ok_or_else(|| {
            Error::InvalidParameter(format!("step {t} outside [1..{}]", self.horizon))
        })?;
        let mut out = self.raw_draws(t);
        for (i, x) in out.iter_mut().enumerate() {
            *x = if i == seg.favored {
                favored_loss(*x, self.favored)
            } else {
                other_loss(*x, self.other_offset)
            };
        }
        Ok(out)
    }
}

/// `min(1, |x| + offset)`.
pub fn other_loss(raw: f64, offset: f64) -> f64 {
    (raw.abs() + offset).min(1.0)
}

pub fn favored_loss(raw: f64, kind: FavoredLoss) -> f64 {
    match kind {
        FavoredLoss::Discounted { bonus } => (raw.abs() - bonus).clamp(0.0, 1.0),
        FavoredLoss::Constant { level } => level,
    }
}

/// `k` consecutive intervals tiling `[1..horizon]`, the last absorbing any
/// remainder.
pub fn equal_segments(horizon: u64, k: u64) -> Result<Vec<Interval>> {
    if k == 0 || horizon < k {
        return Err(Error::InvalidParameter(format!("cannot split {horizon} steps into {k}")));
    }
    let len = horizon / k;
    (0..k)
        .map(|j| {
            let end = if j + 1 == k { horizon } else { (j + 1) * len };
            Interval::new(j * len + 1, end)
        })
        .collect()
}

/// `min(1, ||x - center||^2 / scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLoss {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl QuadraticLoss {
    fn sq_dist(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum()
    }
}

impl LossFunction for QuadraticLoss {
    fn value(&self, x: &[f64]) -> f64 {
        (self.sq_dist(x) / self.scale).min(1.0)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        if self.sq_dist(x) / self.scale >= 1.0 {
            return vec![0.0; x.len()];
        }
        x.iter().zip(&self.center).map(|(a, c)| 2.0 * (a - c) / self.scale).collect()
    }
}

/// Segment of an OCO scenario with its minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OcoSegment {
    pub interval: Interval,
    pub center: Vec<f64>,
}

/// Shifting quadratic OCO environment on the centered ball of the given
/// diameter.
///
/// With `noise_radius = r > 0` the center at each step is displaced by a
/// uniformly random vector of norm exactly `r`, so the segment minimizer
/// pays about `r^2 / scale` per step. `scale >= (diameter/2 + max ||c|| + r)^2`
/// keeps every loss below the clamp, where it is convex and smooth.
#[derive(Debug, Clone, PartialEq)]
pub struct OcoScenario {
    pub dimension: usize,
    pub diameter: f64,
    pub scale: f64,
    pub segments: Vec<OcoSegment>,
    pub noise_radius: f64,
    pub horizon: u64,
    pub seed: u64,
}

impl OcoScenario {
    /// Three segments on the plane with centers spaced on a circle of
    /// radius 1/2, diameter 2 and scale 4 (below the clamp everywhere).
    pub fn new(horizon: u64, seed: u64) -> Result<Self> {
        let centers = [
            vec![0.5, 0.0],
            vec![-0.25, 0.25 * 3f64.sqrt()],
            vec![-0.25, -0.25 * 3f64.sqrt()],
        ];
        let segments = equal_segments(horizon, 3)?
            .into_iter()
            .zip(centers)
            .map(|(interval, center)| OcoSegment { interval, center })
            .collect();
        let s = Self {
            dimension: 2,
            diameter: 2.0,
            scale: 4.0,
            segments,
            noise_radius: 0.0,
            horizon,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    /// Same geometry with centers jittered at radius `r`; the scale grows to
    /// `(1 + 1/2 + r)^2` so the clamp stays inactive.
    pub fn with_noise(mut self, r: f64) -> Result<Self> {
        let reach = self.diameter / 2.0 + self.max_center_norm() + r;
        self.noise_radius = r;
        self.scale = self.scale.max(reach * reach);
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn max_center_norm(&self) -> f64 {
        self.segments.iter().map(|s| norm(&s.center)).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.horizon == 0 {
            return Err(Error::InvalidParameter("dimension and horizon must be positive".into()));
        }
        if !(self.diameter > 0.0 && self.scale > 0.0 && self.noise_radius >= 0.0) {
            return Err(Error::InvalidParameter("diameter, scale must be positive".into()));
        }
        for s in &self.segments {
            if s.center.len() != self.dimension {
                return Err(Error::LengthMismatch { expected: self.dimension, got: s.center.len() });
            }
            if norm(&s.center) > self.diameter / 2.0 {
                return Err(Error::InvalidParameter(format!(
                    "center of {} lies outside the domain",
                    s.interval
                )));
            }
        }
        check_cover(self.segments.iter().map(|s| s.interval), self.horizon)
    }

    pub fn segment_at(&self, t: u64) -> Option<&OcoSegment> {
        self.segments.iter().find(|s| s.interval.contains(t))
    }

    /// Largest gradient norm inside the domain (valid while the clamp is
    /// inactive).
    pub fn lipschitz(&self) -> f64 {
        2.0 * (self.diameter / 2.0 + self.max_center_norm() + self.noise_radius) / self.scale
    }

    /// Loss at step `t` (1-based).
    pub fn loss(&self, t: u64) -> Result<QuadraticLoss> {
        let seg = self.segment_at(t).ok_or_else(|| {
            Error::InvalidParameter(format!("step {t} outside [1..{}]", self.horizon))
        })?;
        let mut center = seg.center.clone();
        if self.noise_radius > 0.0 {
            let mut rng = step_rng(self.seed, t);
            let dir: Vec<f64> =
                (0..self.dimension).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&dir);
            if n > 0.0 {
                for (c, d) in center.iter_mut().zip(&dir) {
                    *c += self.noise_radius * d / n;
                }
            }
        }
        Ok(QuadraticLoss { center, scale: self.scale })
    }

    /// Smallest total loss over `interval` of a fixed point in the domain,
    /// and the point. Exact while the clamp is inactive: the sum of the
    /// quadratics is minimized at the projected mean center.
    pub fn best_fixed(&self, interval: Interval) -> Result<(f64, Vec<f64>)> {
        let losses = interval.steps().map(|t| self.loss(t)).collect::<Result<Vec<_>>>()?;
        let mut mean = vec![0.0; self.dimension];
        for l in &losses {
            for (m, c) in mean.iter_mut().zip(&l.center) {
                *m += c / losses.len() as f64;
            }
        }
        let r = self.diameter / 2.0;
        let n = dot(&mean, &mean).sqrt();
        if n > r {
            mean.iter_mut().for_each(|m| *m *= r / n);
        }
        let total = losses.iter().map(|l| l.value(&mean)).sum();
        Ok((total, mean))
    }
}
