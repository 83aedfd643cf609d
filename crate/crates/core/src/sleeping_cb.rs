//! Sleeping CB: coin-betting aggregation over experts that may be asleep.
//!
//! Every expert owns a [`BettorState`]. At each step the awake experts are
//! weighted proportionally to `prior * [wager]_+`; if no awake expert has a
//! positive wager the prior restricted to the awake set is used instead.
//! After the losses are revealed, expert `i` receives the flip
//! `g = h - loss_i` when its wager was positive and `[h - loss_i]_+`
//! otherwise, where `h` is the loss of the weighted prediction.

use crate::error::{Error, Result};
use crate::potentials::{BettorState, PotentialKind};

/// Tolerance on the prior's total mass.
pub const PRIOR_SUM_TOLERANCE: f64 = 1e-12;

/// Which branch of the flip truncation receives the raw regret.
///
/// `Flipped` exists only as a negative control for the bound checkers; it
/// swaps the two branches and breaks every guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    #[default]
    Standard,
    Flipped,
}

impl Truncation {
    /// Flip fed to a bettor whose instantaneous regret is `regret` and whose
    /// wager for the step was `wager`.
    pub fn flip(self, regret: f64, wager: f64) -> f64 {
        let positive = wager > 0.0;
        let raw_branch = match self {
            Truncation::Standard => positive,
            Truncation::Flipped => !positive,
        };
        if raw_branch {
            regret
        } else {
            regret.max(0.0)
        }
    }
}

/// Output of [`SleepingCb::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertPrediction {
    /// Probability weights over all experts; zero on sleeping experts.
    pub weights: Vec<f64>,
    pub awake: Vec<bool>,
    /// Amount wagered by each expert (zero for sleeping experts).
    pub wagers: Vec<f64>,
    /// Whether the prior fallback was used.
    pub used_fallback: bool,
}

/// Per-step quantities produced by [`SleepingCb::update`].
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    /// Loss of the prediction over the awake experts.
    pub loss: f64,
    /// Flip fed to every bettor (zero for sleeping experts).
    pub flips: Vec<f64>,
    /// `sum_i prior_i * awake_i * flip_i * wager_i`; never positive under
    /// the standard truncation.
    pub weighted_flip_sum: f64,
}

/// Sleeping CB aggregator over a fixed set of experts.
#[derive(Debug, Clone)]
pub struct SleepingCb {
    prior: Vec<f64>,
    bettors: Vec<BettorState>,
    kind: PotentialKind,
    truncation: Truncation,
}

impl SleepingCb {
    pub fn new(prior: Vec<f64>, kind: PotentialKind) -> Result<Self> {
        kind.validate()?;
        validate_distribution(&prior)?;
        let bettors = vec![BettorState::new(); prior.len()];
        Ok(Self {
            prior,
            bettors,
            kind,
            truncation: Truncation::Standard,
        })
    }

    pub fn uniform(n: usize, kind: PotentialKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one expert".into()));
        }
        Self::new(vec![1.0 / n as f64; n], kind)
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn bettors(&self) -> &[BettorState] {
        &self.bettors
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// Weights for the current step given which experts are awake.
    pub fn predict(&self, awake: &[bool]) -> Result<ExpertPrediction> {
        check_len(self.len(), awake.len())?;
        if !awake.iter().any(|&a| a) {
            return Err(Error::EmptyAwakeSet);
        }
        let fractions: Vec<f64> = self
            .bettors
            .iter()
            .zip(awake)
            .map(|(b, &a)| if a { b.betting_fraction(self.kind) } else { 0.0 })
            .collect();
        let log_wealth: Vec<f64> = self.bettors.iter().map(BettorState::log_wealth).collect();
        let (weights, used_fallback) =
            clipped_weights(&self.prior, awake, &fractions, &log_wealth);
        let wagers = fractions
            .iter()
            .zip(&log_wealth)
            .map(|(&f, &lw)| if f == 0.0 { 0.0 } else { f * lw.exp() })
            .collect();
        Ok(ExpertPrediction {
            weights,
            awake: awake.to_vec(),
            wagers,
            used_fallback,
        })
    }

    /// Feed the revealed losses back into every bettor.
    pub fn update(&mut self, pred: &ExpertPrediction, losses: &[f64]) -> Result<UpdateOutcome> {
        check_len(self.len(), losses.len())?;
        check_len(self.len(), pred.weights.len())?;
        validate_losses(losses)?;
        let loss: f64 = pred
            .weights
            .iter()
            .zip(losses)
            .zip(&pred.awake)
            .filter(|(_, &a)| a)
            .map(|((p, l), _)| p * l)
            .sum();
        let mut flips = vec![0.0; self.len()];
        let mut weighted_flip_sum = 0.0;
        for i in 0..self.len() {
            if !pred.awake[i] {
                continue;
            }
            let g = self.truncation.flip(loss - losses[i], pred.wagers[i]).clamp(-1.0, 1.0);
            flips[i] = g;
            weighted_flip_sum += self.prior[i] * g * pred.wagers[i];
        }
        for ((bettor, &g), &a) in self.bettors.iter_mut().zip(&flips).zip(&pred.awake) {
            bettor.step(a, g, self.kind)?;
        }
        Ok(UpdateOutcome {
            loss,
            flips,
            weighted_flip_sum,
        })
    }
}

/// Normalised `prior * awake * [fraction]_+ * wealth`, with the awake-prior
/// fallback when every term is zero. Wealth is supplied in log space and the
/// normalisation is done relative to the largest term.
pub(crate) fn clipped_weights(
    prior: &[f64],
    awake: &[bool],
    fractions: &[f64],
    log_wealth: &[f64],
) -> (Vec<f64>, bool) {
    let log_terms: Vec<Option<f64>> = (0..prior.len())
        .map(|i| {
            (awake[i] && prior[i] > 0.0 && fractions[i] > 0.0)
                .then(|| prior[i].ln() + fractions[i].ln() + log_wealth[i])
        })
        .collect();
    let max = log_terms.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_finite() {
        let mut weights: Vec<f64> = log_terms
            .iter()
            .map(|t| t.map_or(0.0, |v| (v - max).exp()))
            .collect();
        normalize(&mut weights);
        (weights, false)
    } else {
        let mut weights: Vec<f64> = prior
            .iter()
            .zip(awake)
            .map(|(&p, &a)| if a { p } else { 0.0 })
            .collect();
        let mass: f64 = weights.iter().sum();
        if mass > 0.0 {
            normalize(&mut weights);
        } else {
            // every awake expert has zero prior mass: spread evenly
            let n_awake = awake.iter().filter(|&&a| a).count() as f64;
            for (w, &a) in weights.iter_mut().zip(awake) {
                *w = if a { 1.0 / n_awake } else { 0.0 };
            }
        }
        (weights, true)
    }
}

pub(crate) fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

pub(crate) fn validate_losses(losses: &[f64]) -> Result<()> {
    match losses.iter().position(|l| !(0.0..=1.0).contains(l)) {
        Some(index) => Err(Error::LossOutOfRange {
            index,
            value: losses[index],
        }),
        None => Ok(()),
    }
}

pub(crate) fn validate_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter("prior is empty".into()));
    }
    if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter("prior has a negative or non-finite entry".into()));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PRIOR_SUM_TOLERANCE {
        return Err(Error::InvalidParameter(format!("prior sums to {total}, not 1")));
    }
    Ok(())
}

/// Statistics of a single comparator expert `j` needed by the regret bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparatorStats {
    /// Prior mass `pi_j` in `(0, 1]`.
    pub prior: f64,
    /// Number of steps on which `j` was awake.
    pub awake_steps: u64,
    /// Total horizon `T`.
    pub horizon: u64,
    /// Sum of absolute flips `j` received (only used by AN).
    pub abs_flip_sum: f64,
}

/// Upper bound on the sleeping regret against expert `j`.
///
/// KT: `sqrt(2 S (ln(1/pi_j) + ln(T)/2 + 2))`.
/// AN: `sqrt(2 W (ln(1/pi_j) + ln(W)/2))` with `W = 1 + sum|z_j|`.
pub fn regret_bound(kind: PotentialKind, stats: &ComparatorStats) -> f64 {
    let kl = (1.0 / stats.prior).ln();
    match kind {
        PotentialKind::Kt { .. } => {
            let s = stats.awake_steps as f64;
            (2.0 * s * (kl + 0.5 * (stats.horizon as f64).ln() + 2.0)).sqrt()
        }
        PotentialKind::An { .. } => {
            let w = 1.0 + stats.abs_flip_sum;
            (2.0 * w * (kl + 0.5 * w.ln())).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_uses_prior() {
        let cb = SleepingCb::uniform(2, PotentialKind::kt()).unwrap();
        let pred = cb.predict(&[true, true]).unwrap();
        assert_eq!(pred.weights, vec![0.5, 0.5]);
        assert!(pred.used_fallback);
    }

    #[test]
    fn fallback_restricted_to_awake() {
        let cb = SleepingCb::uniform(3, PotentialKind::kt()).unwrap();
        let pred = cb.predict(&[true, false, true]).unwrap();
        assert_eq!(pred.weights, vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn empty_awake_set_rejected() {
        let cb = SleepingCb::uniform(3, PotentialKind::an()).unwrap();
        assert_eq!(cb.predict(&[false; 3]), Err(Error::EmptyAwakeSet));
    }

    #[test]
    fn second_step_concentrates_on_better_expert() {
        // step 1: p = (1/2, 1/2), losses (0, 1) -> h = 1/2, flips (1/2, -1/2)
        // wagers were 0 so both flips are truncated: (1/2, 0).
        // step 2: beta_1 = (1/2)/2 > 0, beta_2 = 0 -> p = (1, 0).
        let mut cb = SleepingCb::uniform(2, PotentialKind::kt()).unwrap();
        let pred = cb.predict(&[true, true]).unwrap();
        let out = cb.update(&pred, &[0.0, 1.0]).unwrap();
        assert_eq!(out.flips, vec![0.5, 0.0]);
        let pred = cb.predict(&[true, true]).unwrap();
        assert!(pred.wagers[0] > 0.0);
        assert!(pred.wagers[1] <= 0.0);
        assert_eq!(pred.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn truncation_cases() {
        let r = 0.5 - 0.8;
        assert!((Truncation::Standard.flip(r, 0.3) - (-0.3)).abs() < 1e-15);
        assert_eq!(Truncation::Standard.flip(r, -0.1), 0.0);
        assert_eq!(Truncation::Standard.flip(r, 0.0), 0.0);
        assert_eq!(Truncation::Flipped.flip(r, -0.1), r);
    }

    #[test]
    fn single_awake_expert_self_comparison() {
        let mut cb = SleepingCb::uniform(3, PotentialKind::an()).unwrap();
        let before = cb.bettors().to_vec();
        let pred = cb.predict(&[false, true, false]).unwrap();
        assert_eq!(pred.weights, vec![0.0, 1.0, 0.0]);
        let out = cb.update(&pred, &[0.9, 0.3, 0.1]).unwrap();
        assert_eq!(out.loss, 0.3);
        assert_eq!(out.flips, vec![0.0, 0.0, 0.0]);
        assert_eq!(cb.bettors()[0], before[0]);
        assert_eq!(cb.bettors()[2], before[2]);
        assert_eq!(cb.bettors()[1].awake_count(), 1);
    }

    #[test]
    fn rejects_out_of_range_loss() {
        let mut cb = SleepingCb::uniform(2, PotentialKind::kt()).unwrap();
        let pred = cb.predict(&[true, true]).unwrap();
        assert_eq!(
            cb.update(&pred, &[0.2, 1.2]),
            Err(Error::LossOutOfRange { index: 1, value: 1.2 })
        );
    }

    #[test]
    fn rejects_bad_prior() {
        assert!(SleepingCb::new(vec![0.5, 0.6], PotentialKind::kt()).is_err());
        assert!(SleepingCb::new(vec![1.5, -0.5], PotentialKind::kt()).is_err());
    }

    #[test]
    fn bound_examples() {
        let kt = PotentialKind::kt();
        let b = regret_bound(
            kt,
            &ComparatorStats { prior: 0.5, awake_steps: 4, horizon: 4, abs_flip_sum: 0.0 },
        );
        let expected = (8.0 * (2f64.ln() + 0.5 * 4f64.ln() + 2.0)).sqrt();
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 5.206).abs() < 2e-3);
        let b = regret_bound(
            kt,
            &ComparatorStats { prior: 1.0, awake_steps: 1, horizon: 1, abs_flip_sum: 0.0 },
        );
        assert!((b - 2.0).abs() < 1e-15);
        let b = regret_bound(
            PotentialKind::an(),
            &ComparatorStats { prior: 1.0, awake_steps: 10, horizon: 10, abs_flip_sum: 0.0 },
        );
        assert_eq!(b, 0.0);
    }
}
