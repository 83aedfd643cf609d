//! CBCE: coin betting for changing environments.
//!
//! Black-box runs are started on the intervals of a [`Schedule`] and treated
//! as sleeping experts: a run is awake exactly on its interval. The runs are
//! weighted by Sleeping CB and the meta decision is their weighted average.
//! After the loss `f_t` is revealed, run `J` receives the flip
//! `f_t(x_t) - f_t(x_t^J)`, truncated at zero when its wager was not
//! positive.

use crate::blackbox::{BlackBoxFactory, LossFunction};
use crate::error::{Error, Result};
use crate::intervals::{floor_log2, Interval, Schedule};
use crate::pool::{OnlineAlgorithm, RunPool};
use crate::potentials::{BettorState, PotentialKind};
use crate::sleeping_cb::{clipped_weights, Truncation};

/// Prior over black-box runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorKind {
    /// Every run gets the same weight.
    #[default]
    Uniform,
    /// Weight `1 / (J1^2 (1 + floor(log2 J1)))` for a run starting at `J1`.
    BarPi,
}

/// Unnormalised prior weight of a run starting at `start`. The
/// normalisation constant cancels in the meta algorithm.
pub fn prior_weight(kind: PriorKind, start: u64) -> f64 {
    match kind {
        PriorKind::Uniform => 1.0,
        PriorKind::BarPi => {
            let s = start as f64;
            1.0 / (s * s * (1.0 + f64::from(floor_log2(start))))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbceConfig {
    pub schedule: Schedule,
    pub potential: PotentialKind,
    pub prior: PriorKind,
    /// Constant multiplying every prior weight; has no effect on decisions.
    pub prior_scale: f64,
    pub warm_start: bool,
    pub truncation: Truncation,
}

impl Default for CbceConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::DataStreaming { g: 2 },
            potential: PotentialKind::an(),
            prior: PriorKind::Uniform,
            prior_scale: 1.0,
            warm_start: true,
            truncation: Truncation::Standard,
        }
    }
}

/// Meta-level state kept for every run.
#[derive(Debug, Clone)]
pub struct RunBettor {
    pub bettor: BettorState,
    pub prior: f64,
}

/// Output of [`Cbce::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetaDecision {
    pub t: u64,
    /// Weighted average of the run decisions.
    pub point: Vec<f64>,
    /// Weight of each live run, aligned with `run_intervals`.
    pub run_weights: Vec<f64>,
    pub run_intervals: Vec<Interval>,
    pub run_decisions: Vec<Vec<f64>>,
    pub wagers: Vec<f64>,
    pub used_fallback: bool,
}

/// Per-step record produced by [`Cbce::observe`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetaStep {
    pub t: u64,
    /// `f_t(x_t)`.
    pub meta_loss: f64,
    /// `sum_J p_J f_t(x_t^J)`; at least `meta_loss` for convex `f_t`.
    pub averaged_run_loss: f64,
    pub run_intervals: Vec<Interval>,
    pub run_losses: Vec<f64>,
    pub flips: Vec<f64>,
    pub weighted_flip_sum: f64,
}

/// The CBCE meta algorithm over black boxes produced by `F`.
pub struct Cbce<F: BlackBoxFactory> {
    config: CbceConfig,
    pool: RunPool<F, RunBettor>,
    t: u64,
    pending: Option<MetaDecision>,
}

impl<F: BlackBoxFactory> Cbce<F> {
    pub fn new(config: CbceConfig, factory: F) -> Result<Self> {
        config.potential.validate()?;
        if !(config.prior_scale > 0.0 && config.prior_scale.is_finite()) {
            return Err(Error::InvalidParameter("prior scale must be positive".into()));
        }
        Ok(Self {
            pool: RunPool::new(config.schedule, factory, config.warm_start)?,
            config,
            t: 0,
            pending: None,
        })
    }

    pub fn config(&self) -> &CbceConfig {
        &self.config
    }

    /// Index of the last predicted step (0 before the first prediction).
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn live_runs(&self) -> usize {
        self.pool.runs().len()
    }

    /// Spawn the runs starting at the next step and combine all live runs.
    pub fn predict(&mut self) -> Result<MetaDecision> {
        if self.pending.is_some() {
            return Err(Error::InvalidParameter("predict called twice without observe".into()));
        }
        let t = self.t + 1;
        let (prior_kind, scale) = (self.config.prior, self.config.prior_scale);
        self.pool.begin_step(t, |j| RunBettor {
            bettor: BettorState::new(),
            prior: scale * prior_weight(prior_kind, j.start),
        })?;
        let runs = self.pool.runs();
        let awake = vec![true; runs.len()];
        let priors: Vec<f64> = runs.iter().map(|r| r.state.prior).collect();
        let fractions: Vec<f64> = runs
            .iter()
            .map(|r| r.state.bettor.betting_fraction(self.config.potential))
            .collect();
        let log_wealth: Vec<f64> = runs.iter().map(|r| r.state.bettor.log_wealth()).collect();
        let (run_weights, used_fallback) = clipped_weights(&priors, &awake, &fractions, &log_wealth);
        let wagers = fractions
            .iter()
            .zip(&log_wealth)
            .map(|(&f, &lw)| if f == 0.0 { 0.0 } else { f * lw.exp() })
            .collect();
        let run_intervals = runs.iter().map(|r| r.interval).collect();
        let run_decisions = runs.iter().map(|r| r.decision.clone()).collect();
        let point = self.pool.combine(&run_weights);
        self.pool.remember_decision(&point);
        let decision = MetaDecision {
            t,
            point,
            run_weights,
            run_intervals,
            run_decisions,
            wagers,
            used_fallback,
        };
        self.t = t;
        self.pending = Some(decision.clone());
        Ok(decision)
    }

    /// Reveal `f_t`, update every live run's bettor and black box.
    pub fn observe(&mut self, loss: &dyn LossFunction) -> Result<MetaStep> {
        let decision = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        let meta_loss = unit_loss(loss.value(&decision.point), usize::MAX)?;
        let run_losses = self
            .pool
            .run_losses(loss)
            .into_iter()
            .enumerate()
            .map(|(i, l)| unit_loss(l, i))
            .collect::<Result<Vec<_>>>()?;
        let averaged_run_loss =
            decision.run_weights.iter().zip(&run_losses).map(|(p, l)| p * l).sum();
        let potential = self.config.potential;
        let truncation = self.config.truncation;
        let mut flips = Vec::with_capacity(run_losses.len());
        let mut weighted_flip_sum = 0.0;
        for ((run, &l), &wager) in
            self.pool.runs_mut().iter_mut().zip(&run_losses).zip(&decision.wagers)
        {
            let mut r = meta_loss - l;
            if r.abs() <= ROUNDING_TOLERANCE {
                r = 0.0;
            }
            let g = truncation.flip(r, wager).clamp(-1.0, 1.0);
            weighted_flip_sum += run.state.prior * g * wager;
            run.state.bettor.step(true, g, potential)?;
            flips.push(g);
        }
        self.pool.observe_all(loss)?;
        Ok(MetaStep {
            t: decision.t,
            meta_loss,
            averaged_run_loss,
            run_intervals: decision.run_intervals,
            run_losses,
            flips,
            weighted_flip_sum,
        })
    }
}

impl<F: BlackBoxFactory> OnlineAlgorithm for Cbce<F> {
    fn decide(&mut self) -> Result<Vec<f64>> {
        self.predict().map(|d| d.point)
    }

    fn feedback(&mut self, loss: &dyn LossFunction) -> Result<f64> {
        self.observe(loss).map(|s| s.meta_loss)
    }
}

/// Differences below this are rounding noise: a meta decision averaged from
/// identical run decisions can evaluate a few ulps away from them.
pub const ROUNDING_TOLERANCE: f64 = 1e-12;

/// Accept a loss in `[0, 1]`, clamping values that miss it by rounding only.
fn unit_loss(value: f64, index: usize) -> Result<f64> {
    if (-ROUNDING_TOLERANCE..=1.0 + ROUNDING_TOLERANCE).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(Error::LossOutOfRange { index, value })
    }
}

/// Meta regret bound of CBCE with the KT potential on a schedule interval:
/// `sqrt(|J| (7 ln J2 + 5))`.
pub fn interval_meta_bound(j: Interval) -> f64 {
    (j.len() as f64 * (7.0 * (j.end as f64).ln() + 5.0)).sqrt()
}

/// Strongly adaptive regret bound of CBCE with the KT potential on an
/// arbitrary interval, given a black box whose anytime regret is at most
/// `a1 * t^alpha`:
/// `4 / (2^alpha - 1) * a1 |I|^alpha + 8 sqrt(|I| (7 ln I2 + 5))`.
pub fn sa_regret_bound(i: Interval, alpha: f64, a1: f64) -> f64 {
    let len = i.len() as f64;
    4.0 / (2f64.powf(alpha) - 1.0) * a1 * len.powf(alpha) + 8.0 * interval_meta_bound(i)
}

/// Which bound [`meta_regret_bound`] should evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetaBoundForm {
    /// Meta regret against the run on a schedule interval.
    Interval(Interval),
    /// Regret on an arbitrary interval including the black-box regret.
    StronglyAdaptive { interval: Interval, alpha: f64, a1: f64 },
}

/// Explicit meta regret bound. The AN potential only carries first-order
/// bounds up to unspecified constants, so the explicit KT-form value is
/// returned for both potentials.
pub fn meta_regret_bound(_potential: PotentialKind, form: MetaBoundForm) -> f64 {
    match form {
        MetaBoundForm::Interval(j) => interval_meta_bound(j),
        MetaBoundForm::StronglyAdaptive { interval, alpha, a1 } => {
            sa_regret_bound(interval, alpha, a1)
        }
    }
}
