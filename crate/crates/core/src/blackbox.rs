//! Base learners that the meta algorithms restart on schedule intervals.
//!
//! Every learner speaks the same protocol: [`BlackBox::predict`] returns a
//! decision, then [`BlackBox::observe`] hands over the loss function of that
//! step. LEA learners produce probability vectors over experts; OCO learners
//! produce points in an origin-centred Euclidean ball.

use crate::error::{Error, Result};
use crate::potentials::PotentialKind;
use crate::sleeping_cb::{normalize, ExpertPrediction, SleepingCb};

/// A convex loss on decisions, evaluated by the meta algorithms and learners.
pub trait LossFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
}

/// Linear LEA loss `<losses, p>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLoss {
    pub losses: Vec<f64>,
}

impl LinearLoss {
    pub fn new(losses: Vec<f64>) -> Self {
        Self { losses }
    }
}

impl LossFunction for LinearLoss {
    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.losses, x)
    }

    fn gradient(&self, _x: &[f64]) -> Vec<f64> {
        self.losses.clone()
    }
}

/// An online learner restarted by a meta algorithm.
pub trait BlackBox {
    /// Decision for the current step.
    fn predict(&mut self) -> Vec<f64>;
    /// Reveal the loss of the current step.
    fn observe(&mut self, loss: &dyn LossFunction) -> Result<()>;
}

/// Creates fresh black-box runs.
pub trait BlackBoxFactory {
    type Learner: BlackBox;

    /// New run starting at `start`; `warm_start` is the meta algorithm's
    /// previous decision when warm starting is enabled.
    fn spawn(&self, start: u64, warm_start: Option<&[f64]>) -> Result<Self::Learner>;
}

/// Coin-betting LEA learner: Sleeping CB with every expert always awake.
#[derive(Debug, Clone)]
pub struct CbLea {
    inner: SleepingCb,
    awake: Vec<bool>,
    pending: Option<ExpertPrediction>,
}

impl CbLea {
    pub fn new(prior: Vec<f64>, kind: PotentialKind) -> Result<Self> {
        let n = prior.len();
        Ok(Self {
            inner: SleepingCb::new(prior, kind)?,
            awake: vec![true; n],
            pending: None,
        })
    }

    pub fn uniform(n: usize, kind: PotentialKind) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n], kind)
    }

    /// Current weights over experts.
    pub fn weights(&mut self) -> Vec<f64> {
        if self.pending.is_none() {
            let pred = self
                .inner
                .predict(&self.awake)
                .expect("all experts are awake and lengths match");
            self.pending = Some(pred);
        }
        self.pending.as_ref().map(|p| p.weights.clone()).unwrap_or_default()
    }

    /// One full round: weights, then feedback with `losses`. Returns the
    /// weights that were played.
    pub fn step(&mut self, losses: &[f64]) -> Result<Vec<f64>> {
        let weights = self.weights();
        self.observe_losses(losses)?;
        Ok(weights)
    }

    pub fn observe_losses(&mut self, losses: &[f64]) -> Result<()> {
        if self.pending.is_none() {
            self.weights();
        }
        let pred = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        self.inner.update(&pred, losses)?;
        Ok(())
    }

    pub fn inner(&self) -> &SleepingCb {
        &self.inner
    }
}

impl BlackBox for CbLea {
    fn predict(&mut self) -> Vec<f64> {
        self.weights()
    }

    fn observe(&mut self, loss: &dyn LossFunction) -> Result<()> {
        let weights = self.weights();
        let losses = loss.gradient(&weights);
        self.observe_losses(&losses)
    }
}

/// Spawns [`CbLea`] runs over `n` experts. A warm-started run at time `t`
/// uses the prior `(1 - 1/t) p + (1/t) u` for the meta decision `p` and the
/// uniform `u`.
#[derive(Debug, Clone, Copy)]
pub struct CbLeaFactory {
    pub n_experts: usize,
    pub potential: PotentialKind,
}

impl BlackBoxFactory for CbLeaFactory {
    type Learner = CbLea;

    fn spawn(&self, start: u64, warm_start: Option<&[f64]>) -> Result<CbLea> {
        match warm_start {
            Some(prev) => {
                if prev.len() != self.n_experts {
                    return Err(Error::LengthMismatch { expected: self.n_experts, got: prev.len() });
                }
                let mut prior: Vec<f64> = prev.iter().map(|&p| p.max(0.0)).collect();
                normalize(&mut prior);
                // keep every expert reachable: weight 1/start on uniform
                let mix = 1.0 / start.max(1) as f64;
                let floor = mix / self.n_experts as f64;
                for p in &mut prior {
                    *p = (1.0 - mix) * *p + floor;
                }
                CbLea::new(prior, self.potential)
            }
            None => CbLea::uniform(self.n_experts, self.potential),
        }
    }
}

/// Geometry and regularity constants of an OCO problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcoConfig {
    /// Diameter `B` of the decision ball (radius `B / 2`).
    pub diameter: f64,
    /// Lipschitz constant `G` of the losses.
    pub lipschitz: f64,
    /// Constant `L` in the FTRL regulariser `sqrt(L^2 + sum |g|^2) / 2`.
    pub smoothness_lipschitz: f64,
    pub dimension: usize,
}

impl OcoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.diameter) && positive(self.lipschitz) && positive(self.smoothness_lipschitz))
        {
            return Err(Error::InvalidParameter("B, G and L must be positive".into()));
        }
        if self.dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.diameter
    }

    /// Radial projection onto the decision ball.
    pub fn project(&self, x: &mut [f64]) {
        let norm = norm(x);
        let r = self.radius();
        if norm > r {
            let scale = r / norm;
            for v in x.iter_mut() {
                *v *= scale;
            }
        }
    }

    fn warm_point(&self, warm_start: Option<&[f64]>) -> Result<Vec<f64>> {
        match warm_start {
            Some(p) if p.len() != self.dimension => {
                Err(Error::LengthMismatch { expected: self.dimension, got: p.len() })
            }
            Some(p) => {
                let mut x = p.to_vec();
                self.project(&mut x);
                Ok(x)
            }
            None => Ok(vec![0.0; self.dimension]),
        }
    }
}

/// Projected online gradient descent with step `B / (G sqrt(tau))` on the
/// run's local clock `tau`.
#[derive(Debug, Clone)]
pub struct Ogd {
    config: OcoConfig,
    point: Vec<f64>,
    local_step: u64,
}

impl Ogd {
    pub fn new(config: OcoConfig, start: Option<&[f64]>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            point: config.warm_point(start)?,
            config,
            local_step: 1,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Apply `gradient` (taken at the current point) and return the new point.
    pub fn step(&mut self, gradient: &[f64]) -> Result<Vec<f64>> {
        if gradient.len() != self.config.dimension {
            return Err(Error::LengthMismatch { expected: self.config.dimension, got: gradient.len() });
        }
        let g_norm = norm(gradient);
        if g_norm > self.config.lipschitz * (1.0 + 1e-12) {
            return Err(Error::GradientTooLarge { norm: g_norm, bound: self.config.lipschitz });
        }
        let eta = self.config.diameter / (self.config.lipschitz * (self.local_step as f64).sqrt());
        for (x, g) in self.point.iter_mut().zip(gradient) {
            *x -= eta * g;
        }
        self.config.project(&mut self.point);
        self.local_step += 1;
        Ok(self.point.clone())
    }
}

impl BlackBox for Ogd {
    fn predict(&mut self) -> Vec<f64> {
        self.point.clone()
    }

    fn observe(&mut self, loss: &dyn LossFunction) -> Result<()> {
        let gradient = loss.gradient(&self.point);
        self.step(&gradient).map(|_| ())
    }
}

/// FTRL on linearised losses with the adaptive quadratic regulariser
/// `sqrt(L^2 + sum_s |g_s|^2) / 2 * |x - center|^2`.
#[derive(Debug, Clone)]
pub struct Ftrl {
    config: OcoConfig,
    center: Vec<f64>,
    gradient_sum: Vec<f64>,
    squared_norm_sum: f64,
}

impl Ftrl {
    pub fn new(config: OcoConfig, center: Option<&[f64]>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            center: config.warm_point(center)?,
            gradient_sum: vec![0.0; config.dimension],
            squared_norm_sum: 0.0,
            config,
        })
    }

    /// Minimiser of the regularised linear sum before projection.
    pub fn unprojected_point(&self) -> Vec<f64> {
        let scale = (self.config.smoothness_lipschitz.powi(2) + self.squared_norm_sum).sqrt();
        self.center
            .iter()
            .zip(&self.gradient_sum)
            .map(|(c, g)| c - g / scale)
            .collect()
    }

    pub fn point(&self) -> Vec<f64> {
        let mut x = self.unprojected_point();
        self.config.project(&mut x);
        x
    }

    /// Accumulate `gradient` and return the next point.
    pub fn step(&mut self, gradient: &[f64]) -> Result<Vec<f64>> {
        if gradient.len() != self.config.dimension {
            return Err(Error::LengthMismatch { expected: self.config.dimension, got: gradient.len() });
        }
        for (s, g) in self.gradient_sum.iter_mut().zip(gradient) {
            *s += g;
        }
        self.squared_norm_sum += dot(gradient, gradient);
        Ok(self.point())
    }
}

impl BlackBox for Ftrl {
    fn predict(&mut self) -> Vec<f64> {
        self.point()
    }

    fn observe(&mut self, loss: &dyn LossFunction) -> Result<()> {
        let gradient = loss.gradient(&self.point());
        self.step(&gradient).map(|_| ())
    }
}

/// Spawns [`Ogd`] runs.
#[derive(Debug, Clone, Copy)]
pub struct OgdFactory(pub OcoConfig);

impl BlackBoxFactory for OgdFactory {
    type Learner = Ogd;

    fn spawn(&self, _start: u64, warm_start: Option<&[f64]>) -> Result<Ogd> {
        Ogd::new(self.0, warm_start)
    }
}

/// Spawns [`Ftrl`] runs.
#[derive(Debug, Clone, Copy)]
pub struct FtrlFactory(pub OcoConfig);

impl BlackBoxFactory for FtrlFactory {
    type Learner = Ftrl;

    fn spawn(&self, _start: u64, warm_start: Option<&[f64]>) -> Result<Ftrl> {
        Ftrl::new(self.0, warm_start)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg1(diameter: f64, lipschitz: f64) -> OcoConfig {
        OcoConfig { diameter, lipschitz, smoothness_lipschitz: 1.0, dimension: 1 }
    }

    #[test]
    fn cb_lea_first_step_uniform() {
        let mut cb = CbLea::uniform(4, PotentialKind::an()).unwrap();
        assert_eq!(cb.step(&[0.1, 0.2, 0.3, 0.4]).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn cb_lea_injected_prior_first_step() {
        let mut cb = CbLea::new(vec![0.9, 0.1], PotentialKind::an()).unwrap();
        assert_eq!(cb.predict(), vec![0.9, 0.1]);
    }

    #[test]
    fn cb_lea_warm_prior() {
        let f = CbLeaFactory { n_experts: 2, potential: PotentialKind::kt() };
        let mut cb = f.spawn(5, Some(&[0.9, 0.1])).unwrap();
        let w = cb.predict();
        assert!((w[0] - 0.82).abs() < 1e-15 && (w[1] - 0.18).abs() < 1e-15);
        // a collapsed decision still leaves every expert a positive prior
        let w = f.spawn(100, Some(&[1.0, 0.0])).unwrap().predict();
        assert!((w[1] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn cb_lea_matches_full_mask_sleeping_cb() {
        let losses = [[0.3, 0.9, 0.5], [0.1, 0.8, 0.6], [0.2, 0.7, 0.0], [0.9, 0.1, 0.4]];
        let mut cb = CbLea::uniform(3, PotentialKind::an()).unwrap();
        let mut reference = SleepingCb::uniform(3, PotentialKind::an()).unwrap();
        for l in &losses {
            let w = cb.step(l).unwrap();
            let pred = reference.predict(&[true; 3]).unwrap();
            assert_eq!(w, pred.weights);
            reference.update(&pred, l).unwrap();
        }
    }

    #[test]
    fn ogd_zero_gradient_fixed_point() {
        let mut ogd = Ogd::new(cfg1(2.0, 1.0), Some(&[0.3])).unwrap();
        assert_eq!(ogd.step(&[0.0]).unwrap(), vec![0.3]);
    }

    #[test]
    fn ogd_projects_first_step() {
        let mut ogd = Ogd::new(cfg1(2.0, 1.0), None).unwrap();
        assert_eq!(ogd.step(&[1.0]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn ogd_rejects_large_gradient() {
        let mut ogd = Ogd::new(cfg1(2.0, 1.0), None).unwrap();
        assert!(matches!(ogd.step(&[1.5]), Err(Error::GradientTooLarge { .. })));
    }

    #[test]
    fn ogd_warm_start_clipped() {
        let ogd = Ogd::new(cfg1(2.0, 1.0), Some(&[3.0])).unwrap();
        assert_eq!(ogd.point(), &[1.0]);
    }

    #[test]
    fn ftrl_examples() {
        let cfg = OcoConfig { diameter: 4.0, lipschitz: 1.0, smoothness_lipschitz: 1.0, dimension: 1 };
        let mut f = Ftrl::new(cfg, None).unwrap();
        assert_eq!(f.point(), vec![0.0]);
        f.step(&[1.0]).unwrap();
        assert!((f.unprojected_point()[0] + 1.0 / 2f64.sqrt()).abs() < 1e-15);

        let mut neg = Ftrl::new(cfg, None).unwrap();
        let mut pos = Ftrl::new(cfg, None).unwrap();
        for g in [0.3, -0.7, 0.2] {
            pos.step(&[g]).unwrap();
            neg.step(&[-g]).unwrap();
        }
        assert_eq!(pos.point()[0], -neg.point()[0]);
    }

    #[test]
    fn ball_projection() {
        let cfg = OcoConfig { diameter: 2.0, lipschitz: 1.0, smoothness_lipschitz: 1.0, dimension: 2 };
        let mut x = [3.0, 4.0];
        cfg.project(&mut x);
        assert!((x[0] - 0.6).abs() < 1e-15 && (x[1] - 0.8).abs() < 1e-15);
    }
}
