//! Run bookkeeping shared by the meta algorithms.

use crate::blackbox::{BlackBox, BlackBoxFactory, LossFunction};
use crate::error::Result;
use crate::intervals::{Interval, Schedule};

/// Common driver interface for every complete online algorithm (meta
/// algorithms and plain experts-level learners alike).
pub trait OnlineAlgorithm {
    /// Decision for the next step.
    fn decide(&mut self) -> Result<Vec<f64>>;
    /// Reveal the loss of the step just decided; returns the loss suffered.
    fn feedback(&mut self, loss: &dyn LossFunction) -> Result<f64>;
}

/// One black-box run living on `interval`, plus the meta algorithm's
/// per-run state.
#[derive(Debug, Clone)]
pub struct Run<B, S> {
    pub interval: Interval,
    pub learner: B,
    pub state: S,
    /// The run's decision at the current step.
    pub decision: Vec<f64>,
}

/// Live runs of a schedule. Runs are spawned when their interval starts and
/// dropped once it has ended, so after [`RunPool::begin_step`] every run in
/// the pool is awake.
#[derive(Debug, Clone)]
pub struct RunPool<F: BlackBoxFactory, S> {
    schedule: Schedule,
    factory: F,
    warm_start: bool,
    runs: Vec<Run<F::Learner, S>>,
    last_decision: Option<Vec<f64>>,
}

impl<F: BlackBoxFactory, S> RunPool<F, S> {
    pub fn new(schedule: Schedule, factory: F, warm_start: bool) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            schedule,
            factory,
            warm_start,
            runs: Vec::new(),
            last_decision: None,
        })
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Retire expired runs, spawn the runs starting at `t`, and collect the
    /// decision of every live run.
    pub fn begin_step(&mut self, t: u64, mut init: impl FnMut(&Interval) -> S) -> Result<()> {
        self.runs.retain(|r| r.interval.end >= t);
        let warm = if self.warm_start && t >= 2 { self.last_decision.as_deref() } else { None };
        for interval in self.schedule.starts_at(t)? {
            let learner = self.factory.spawn(t, warm)?;
            let state = init(&interval);
            self.runs.push(Run { interval, learner, state, decision: Vec::new() });
        }
        for run in &mut self.runs {
            run.decision = run.learner.predict();
        }
        Ok(())
    }

    pub fn runs(&self) -> &[Run<F::Learner, S>] {
        &self.runs
    }

    pub fn runs_mut(&mut self) -> &mut [Run<F::Learner, S>] {
        &mut self.runs
    }

    /// Convex combination of the run decisions.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let dim = self.runs.first().map_or(0, |r| r.decision.len());
        let mut point = vec![0.0; dim];
        for (run, &w) in self.runs.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            for (p, x) in point.iter_mut().zip(&run.decision) {
                *p += w * x;
            }
        }
        point
    }

    pub fn remember_decision(&mut self, point: &[f64]) {
        self.last_decision = Some(point.to_vec());
    }

    /// Loss of every live run's current decision.
    pub fn run_losses(&self, loss: &dyn LossFunction) -> Vec<f64> {
        self.runs.iter().map(|r| loss.value(&r.decision)).collect()
    }

    /// Forward the loss to every live run.
    pub fn observe_all(&mut self, loss: &dyn LossFunction) -> Result<()> {
        for run in &mut self.runs {
            run.learner.observe(loss)?;
        }
        Ok(())
    }
}
