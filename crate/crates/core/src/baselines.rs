//! Baseline algorithms for changing environments: SAOL and AdaNormalHedge.TV
//! as meta algorithms over the same run schedules as CBCE, and Fixed Share
//! directly over the experts.

use crate::blackbox::{BlackBoxFactory, LossFunction};
use crate::error::{Error, Result};
use crate::intervals::Schedule;
use crate::pool::{OnlineAlgorithm, RunPool};
use crate::sleeping_cb::{normalize, validate_losses};

/// Per-run SAOL state: multiplicative weight and learning rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaolRun {
    pub weight: f64,
    pub eta: f64,
}

/// Strongly adaptive online learner: multiplicative weights over the live
/// runs with learning rate `min(1/2, 1/sqrt(|I|))` for a run on `I`.
pub struct Saol<F: BlackBoxFactory> {
    pool: RunPool<F, SaolRun>,
    t: u64,
    pending: Option<SaolDecision>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaolDecision {
    pub point: Vec<f64>,
    pub run_weights: Vec<f64>,
}

impl<F: BlackBoxFactory> Saol<F> {
    pub fn new(schedule: Schedule, factory: F, warm_start: bool) -> Result<Self> {
        Ok(Self {
            pool: RunPool::new(schedule, factory, warm_start)?,
            t: 0,
            pending: None,
        })
    }

    pub fn runs(&self) -> impl Iterator<Item = &SaolRun> {
        self.pool.runs().iter().map(|r| &r.state)
    }

    pub fn predict(&mut self) -> Result<SaolDecision> {
        let t = self.t + 1;
        self.pool.begin_step(t, |j| {
            let eta = (1.0 / (j.len() as f64).sqrt()).min(0.5);
            SaolRun { weight: eta, eta }
        })?;
        let mut run_weights: Vec<f64> =
            self.pool.runs().iter().map(|r| r.state.weight.max(0.0)).collect();
        if run_weights.iter().sum::<f64>() > 0.0 {
            normalize(&mut run_weights);
        } else {
            run_weights = vec![1.0 / run_weights.len() as f64; run_weights.len()];
        }
        let point = self.pool.combine(&run_weights);
        self.pool.remember_decision(&point);
        self.t = t;
        let decision = SaolDecision { point, run_weights };
        self.pending = Some(decision.clone());
        Ok(decision)
    }

    pub fn observe(&mut self, loss: &dyn LossFunction) -> Result<f64> {
        let decision = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        let meta_loss = loss.value(&decision.point);
        let run_losses = self.pool.run_losses(loss);
        for (run, l) in self.pool.runs_mut().iter_mut().zip(run_losses) {
            let r = (meta_loss - l).clamp(-1.0, 1.0);
            run.state.weight *= 1.0 + run.state.eta * r;
        }
        self.pool.observe_all(loss)?;
        Ok(meta_loss)
    }
}

impl<F: BlackBoxFactory> OnlineAlgorithm for Saol<F> {
    fn decide(&mut self) -> Result<Vec<f64>> {
        self.predict().map(|d| d.point)
    }

    fn feedback(&mut self, loss: &dyn LossFunction) -> Result<f64> {
        self.observe(loss)
    }
}

/// Per-run AdaNormalHedge state: cumulative regret and cumulative absolute
/// regret against the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtvRun {
    pub regret: f64,
    pub abs_regret: f64,
    pub prior: f64,
}

/// `ln Phi(R, C)` with `Phi(R, C) = exp([R]_+^2 / (3C))` and `Phi(R, 0) = 1`.
pub fn atv_log_potential(r: f64, c: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else {
        let rp = r.max(0.0);
        rp * rp / (3.0 * c)
    }
}

/// `ln( (Phi(R+1, C+1) - Phi(R-1, C+1)) / 2 )`, or `-inf` when the weight is 0.
pub fn atv_log_weight(r: f64, c: f64) -> f64 {
    let hi = atv_log_potential(r + 1.0, c + 1.0);
    let lo = atv_log_potential(r - 1.0, c + 1.0);
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    // ln(e^hi - e^lo) = hi + ln(1 - e^(lo - hi))
    hi + (-(lo - hi).exp()).ln_1p() - std::f64::consts::LN_2
}

/// AdaNormalHedge weight `(Phi(R+1, C+1) - Phi(R-1, C+1)) / 2`.
pub fn atv_weight(r: f64, c: f64) -> f64 {
    atv_log_weight(r, c).exp()
}

/// Normalised AdaNormalHedge weights over runs, falling back to the
/// normalised prior when every weight is zero.
pub fn atv_run_weights(runs: &[AtvRun]) -> Vec<f64> {
    let log_terms: Vec<f64> =
        runs.iter().map(|r| r.prior.ln() + atv_log_weight(r.regret, r.abs_regret)).collect();
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = if max.is_finite() {
        log_terms.iter().map(|l| (l - max).exp()).collect()
    } else {
        runs.iter().map(|r| r.prior).collect()
    };
    normalize(&mut weights);
    weights
}

/// AdaNormalHedge.TV used as a meta algorithm over schedule runs.
pub struct Atv<F: BlackBoxFactory> {
    pool: RunPool<F, AtvRun>,
    t: u64,
    pending: Option<Vec<f64>>,
}

impl<F: BlackBoxFactory> Atv<F> {
    pub fn new(schedule: Schedule, factory: F, warm_start: bool) -> Result<Self> {
        Ok(Self {
            pool: RunPool::new(schedule, factory, warm_start)?,
            t: 0,
            pending: None,
        })
    }

    pub fn runs(&self) -> impl Iterator<Item = &AtvRun> {
        self.pool.runs().iter().map(|r| &r.state)
    }

    /// Returns `(point, run_weights)`.
    pub fn predict(&mut self) -> Result<(Vec<f64>, Vec<f64>)> {
        let t = self.t + 1;
        self.pool.begin_step(t, |_| AtvRun { regret: 0.0, abs_regret: 0.0, prior: 1.0 })?;
        let states: Vec<AtvRun> = self.pool.runs().iter().map(|r| r.state).collect();
        let weights = atv_run_weights(&states);
        let point = self.pool.combine(&weights);
        self.pool.remember_decision(&point);
        self.t = t;
        self.pending = Some(point.clone());
        Ok((point, weights))
    }

    pub fn observe(&mut self, loss: &dyn LossFunction) -> Result<f64> {
        let point = self.pending.take().ok_or(Error::NoPendingPrediction)?;
        let meta_loss = loss.value(&point);
        let run_losses = self.pool.run_losses(loss);
        for (run, l) in self.pool.runs_mut().iter_mut().zip(run_losses) {
            let r = meta_loss - l;
            run.state.regret += r;
            run.state.abs_regret += r.abs();
        }
        self.pool.observe_all(loss)?;
        Ok(meta_loss)
    }
}

impl<F: BlackBoxFactory> OnlineAlgorithm for Atv<F> {
    fn decide(&mut self) -> Result<Vec<f64>> {
        self.predict().map(|(p, _)| p)
    }

    fn feedback(&mut self, loss: &dyn LossFunction) -> Result<f64> {
        self.observe(loss)
    }
}

/// Fixed Share over `N` experts.
#[derive(Debug, Clone)]
pub struct FixedShare {
    weights: Vec<f64>,
    eta: f64,
    alpha: f64,
}

impl FixedShare {
    pub fn new(n: usize, eta: f64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one expert".into()));
        }
        if !(eta > 0.0 && eta.is_finite()) || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("bad Fixed Share eta={eta} alpha={alpha}")));
        }
        Ok(Self { weights: vec![1.0 / n as f64; n], eta, alpha })
    }

    /// Parameters tuned for a known horizon `T` and shift count `m`:
    /// `alpha = m / (T - 1)`, `eta = sqrt(8 (m ln N + m + 1) / T)`.
    pub fn tuned(n: usize, horizon: u64, shifts: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::InvalidParameter("Fixed Share tuning needs T >= 2".into()));
        }
        let (m, t) = (shifts as f64, horizon as f64);
        let alpha = (m / (t - 1.0)).min(1.0);
        let eta = (8.0 * (m * (n as f64).ln() + m + 1.0) / t).sqrt();
        Self::new(n, eta, alpha)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Exponential update followed by uniform sharing; returns the new weights.
    pub fn step(&mut self, losses: &[f64]) -> Result<Vec<f64>> {
        if losses.len() != self.weights.len() {
            return Err(Error::LengthMismatch { expected: self.weights.len(), got: losses.len() });
        }
        validate_losses(losses)?;
        // losses lie in [0, 1], so the factors never underflow to a zero total
        for (w, l) in self.weights.iter_mut().zip(losses) {
            *w *= (-self.eta * l).exp();
        }
        normalize(&mut self.weights);
        let share = self.alpha / self.weights.len() as f64;
        for w in &mut self.weights {
            *w = share + (1.0 - self.alpha) * *w;
        }
        Ok(self.weights.clone())
    }
}

impl OnlineAlgorithm for FixedShare {
    fn decide(&mut self) -> Result<Vec<f64>> {
        Ok(self.weights.clone())
    }

    fn feedback(&mut self, loss: &dyn LossFunction) -> Result<f64> {
        let value = loss.value(&self.weights);
        let losses = loss.gradient(&self.weights);
        self.step(&losses)?;
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blackbox::{CbLeaFactory, LinearLoss};
    use crate::potentials::PotentialKind;

    fn factory(n: usize) -> CbLeaFactory {
        CbLeaFactory { n_experts: n, potential: PotentialKind::an() }
    }

    #[test]
    fn fixed_share_examples() {
        let mut fs = FixedShare::new(2, 2f64.ln(), 0.0).unwrap();
        let w = fs.step(&[0.0, 1.0]).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);

        let mut fs = FixedShare::new(3, 1.3, 1.0).unwrap();
        let w = fs.step(&[0.0, 1.0, 0.4]).unwrap();
        assert!(w.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        let mut fs = FixedShare::new(2, 2f64.ln(), 0.5).unwrap();
        let w = fs.step(&[0.0, 1.0]).unwrap();
        assert!((w[0] - (0.25 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
        assert!((w[1] - (0.25 + 0.5 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn fixed_share_tuning() {
        let fs = FixedShare::tuned(1000, 900, 2).unwrap();
        assert!((fs.alpha() - 2.0 / 899.0).abs() < 1e-15);
        let eta = (8.0 * (2.0 * 1000f64.ln() + 3.0) / 900.0).sqrt();
        assert!((fs.eta() - eta).abs() < 1e-15);
    }

    #[test]
    fn atv_fresh_weight() {
        let w = atv_weight(0.0, 0.0);
        assert!((w - 0.5 * ((1.0f64 / 3.0).exp() - 1.0)).abs() < 1e-15);
        assert!((w - 0.1978).abs() < 1e-4);
    }

    #[test]
    fn atv_weight_zero_when_far_behind() {
        assert_eq!(atv_weight(-5.0, 7.0), 0.0);
    }

    #[test]
    fn single_run_gets_full_weight() {
        let mut saol = Saol::new(Schedule::GeometricCovering, factory(2), false).unwrap();
        let d = saol.predict().unwrap();
        assert_eq!(d.run_weights, vec![1.0]);
        let mut atv = Atv::new(Schedule::GeometricCovering, factory(2), false).unwrap();
        let (_, w) = atv.predict().unwrap();
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn saol_new_runs_start_at_eta() {
        let mut saol = Saol::new(Schedule::DataStreaming { g: 2 }, factory(3), true).unwrap();
        for t in 1..=40u64 {
            saol.predict().unwrap();
            let newest = saol.runs().last().copied().unwrap();
            let len = Schedule::DataStreaming { g: 2 }.starts_at(t).unwrap()[0].len();
            let eta = (1.0 / (len as f64).sqrt()).min(0.5);
            assert_eq!(newest, SaolRun { weight: eta, eta });
            saol.observe(&LinearLoss::new(vec![0.1, 0.9, 0.5])).unwrap();
        }
    }

    #[test]
    fn atv_falls_back_when_all_weights_vanish() {
        let behind = AtvRun { regret: -10.0, abs_regret: 10.0, prior: 1.0 };
        assert_eq!(atv_log_weight(behind.regret, behind.abs_regret), f64::NEG_INFINITY);
        let w = atv_run_weights(&[behind, AtvRun { prior: 3.0, ..behind }]);
        assert_eq!(w, vec![0.25, 0.75]);
        let fresh = AtvRun { regret: 0.0, abs_regret: 0.0, prior: 1.0 };
        assert_eq!(atv_run_weights(&[behind, fresh]), vec![0.0, 1.0]);
    }
}
