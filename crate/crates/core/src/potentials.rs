//! Coin-betting potentials and the per-expert bettor they drive.
//!
//! A bettor starts with wealth 1 and, at every step it is awake, wagers a
//! signed fraction `beta` of its current wealth on the next coin flip
//! `z in [-1, 1]`. The fraction is derived from a potential `F` so that the
//! wealth never drops below `F` evaluated on the observed flips. Two
//! potentials are provided:
//!
//! * **KT** (Krichevsky-Trofimov), parameterised by a time shift `delta >= 0`.
//!   Its fraction is `sum(z) / (S + delta)` where `S` counts awake steps
//!   including the current one.
//! * **AN** (adaptive normal), parameterised by `xi > 0`. Its fraction is
//!   `2 sigma(2 sum(z) / (xi + sum|z| + 1)) - 1`.
//!
//! Wealth is tracked in log space. KT potentials are evaluated through
//! `ln Gamma` since `Gamma` itself overflows for arguments near 171.

use crate::error::{Error, Result};

/// Potential family used by a bettor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    /// Krichevsky-Trofimov potential with time shift `delta`.
    Kt { delta: f64 },
    /// Adaptive normal potential with offset `xi`.
    An { xi: f64 },
}

impl PotentialKind {
    /// KT with `delta = 0`.
    pub const fn kt() -> Self {
        PotentialKind::Kt { delta: 0.0 }
    }

    /// AN with `xi = 1`.
    pub const fn an() -> Self {
        PotentialKind::An { xi: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialKind::Kt { delta } if !(delta >= 0.0 && delta.is_finite()) => Err(
                Error::InvalidParameter(format!("KT delta must be finite and >= 0, got {delta}")),
            ),
            PotentialKind::An { xi } if !(xi > 0.0 && xi.is_finite()) => Err(
                Error::InvalidParameter(format!("AN xi must be finite and > 0, got {xi}")),
            ),
            _ => Ok(()),
        }
    }

    /// Short lowercase label (`kt` or `an`).
    pub fn label(&self) -> &'static str {
        match self {
            PotentialKind::Kt { .. } => "kt",
            PotentialKind::An { .. } => "an",
        }
    }
}

impl Default for PotentialKind {
    fn default() -> Self {
        PotentialKind::an()
    }
}

/// Coin-betting state of one expert (or one black-box run).
#[derive(Debug, Clone, PartialEq)]
pub struct BettorState {
    sum_z: f64,
    abs_sum_z: f64,
    awake_count: u64,
    log_wealth: f64,
    /// Running AN penalty `sum_s |z_s| / (2 (xi + abs_sum_{s-1} + 1))`.
    an_penalty: f64,
}

impl Default for BettorState {
    fn default() -> Self {
        Self::new()
    }
}

impl BettorState {
    pub fn new() -> Self {
        Self {
            sum_z: 0.0,
            abs_sum_z: 0.0,
            awake_count: 0,
            log_wealth: 0.0,
            an_penalty: 0.0,
        }
    }

    /// Signed flip sum over all steps so far.
    pub fn sum_z(&self) -> f64 {
        self.sum_z
    }

    /// Sum of absolute flips so far.
    pub fn abs_sum_z(&self) -> f64 {
        self.abs_sum_z
    }

    /// Number of steps on which the bettor was awake.
    pub fn awake_count(&self) -> u64 {
        self.awake_count
    }

    /// Natural log of the current wealth.
    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    /// Current wealth `1 + sum_s z_s w_s`.
    pub fn wealth(&self) -> f64 {
        self.log_wealth.exp()
    }

    /// Accumulated AN penalty term.
    pub fn an_penalty(&self) -> f64 {
        self.an_penalty
    }

    /// Betting fraction for the step in progress, assuming the bettor is
    /// awake at that step. For KT the awake count used in the denominator
    /// therefore includes the current step.
    pub fn betting_fraction(&self, kind: PotentialKind) -> f64 {
        match kind {
            PotentialKind::Kt { delta } => {
                let denom = (self.awake_count + 1) as f64 + delta;
                self.sum_z / denom
            }
            PotentialKind::An { xi } => {
                let y = 2.0 * self.sum_z / (xi + self.abs_sum_z + 1.0);
                // 2 sigma(y) - 1 == tanh(y / 2)
                (0.5 * y).tanh()
            }
        }
    }

    /// Amount wagered on the step in progress: `beta * wealth`.
    pub fn wager(&self, kind: PotentialKind) -> f64 {
        self.betting_fraction(kind) * self.wealth()
    }

    /// Advance the bettor by one step.
    ///
    /// Asleep steps leave the state untouched and require `z == 0`.
    pub fn step(&mut self, awake: bool, z: f64, kind: PotentialKind) -> Result<()> {
        if !(-1.0..=1.0).contains(&z) {
            return Err(Error::FlipOutOfRange(z));
        }
        if !awake {
            if z != 0.0 {
                return Err(Error::SleepingFlip(z));
            }
            return Ok(());
        }
        let beta = self.betting_fraction(kind);
        self.log_wealth += (z * beta).ln_1p();
        if let PotentialKind::An { xi } = kind {
            self.an_penalty += z.abs() / (2.0 * (xi + self.abs_sum_z + 1.0));
        }
        self.sum_z += z;
        self.abs_sum_z += z.abs();
        self.awake_count += 1;
        Ok(())
    }

    /// Replay a full flip history from a fresh state.
    pub fn replay(history: &[(bool, f64)], kind: PotentialKind) -> Result<Self> {
        let mut state = Self::new();
        for &(awake, z) in history {
            state.step(awake, z, kind)?;
        }
        Ok(state)
    }

    /// Natural log of the potential evaluated on this bettor's history.
    pub fn log_potential(&self, kind: PotentialKind) -> f64 {
        match kind {
            PotentialKind::Kt { delta } => kt_log_potential(self.sum_z, self.awake_count, delta),
            PotentialKind::An { xi } => {
                self.sum_z * self.sum_z / (2.0 * (xi + self.abs_sum_z)) - self.an_penalty
            }
        }
    }

    /// Potential value `F` of this bettor's history.
    ///
    /// Fails with [`Error::Overflow`] (carrying the log value) when the
    /// potential is not representable as an `f64`.
    pub fn potential_value(&self, kind: PotentialKind) -> Result<f64> {
        let log_value = self.log_potential(kind);
        let value = log_value.exp();
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Overflow { log_value })
        }
    }
}

/// `ln F` for the KT potential with `awake_count` awake steps and flip sum
/// `sum_z`:
///
/// `2^S Gamma(d+1) Gamma((S+d+1)/2 + x/2) Gamma((S+d+1)/2 - x/2)
///  / (Gamma((d+1)/2)^2 Gamma(S+d+1))`.
pub fn kt_log_potential(sum_z: f64, awake_count: u64, delta: f64) -> f64 {
    let s = awake_count as f64;
    let half = 0.5 * (s + delta + 1.0);
    s * std::f64::consts::LN_2 + libm::lgamma(delta + 1.0) + libm::lgamma(half + 0.5 * sum_z)
        + libm::lgamma(half - 0.5 * sum_z)
        - 2.0 * libm::lgamma(0.5 * (delta + 1.0))
        - libm::lgamma(s + delta + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kt_first_fraction_is_zero() {
        let s = BettorState::new();
        assert_eq!(s.betting_fraction(PotentialKind::kt()), 0.0);
    }

    #[test]
    fn kt_fraction_after_two_heads() {
        let s = BettorState::replay(&[(true, 1.0), (true, 1.0)], PotentialKind::kt()).unwrap();
        assert!((s.betting_fraction(PotentialKind::kt()) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn an_fraction_after_one_head() {
        let s = BettorState::replay(&[(true, 1.0)], PotentialKind::an()).unwrap();
        let sigma = 1.0 / (1.0 + (-2.0f64 / 3.0).exp());
        let expected = 2.0 * sigma - 1.0;
        assert!((s.betting_fraction(PotentialKind::an()) - expected).abs() < 1e-15);
        assert!((expected - 0.32151).abs() < 1e-5);
    }

    #[test]
    fn potential_examples() {
        let fresh = BettorState::new();
        assert_eq!(fresh.potential_value(PotentialKind::kt()).unwrap(), 1.0);
        assert_eq!(fresh.potential_value(PotentialKind::an()).unwrap(), 1.0);

        let an = BettorState::replay(&[(true, 1.0)], PotentialKind::an()).unwrap();
        assert!((an.potential_value(PotentialKind::an()).unwrap() - 1.0).abs() < 1e-15);

        let kt = BettorState::replay(&[(true, 1.0)], PotentialKind::kt()).unwrap();
        assert!((kt.potential_value(PotentialKind::kt()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_kt_step_keeps_wealth() {
        let mut s = BettorState::new();
        s.step(true, 1.0, PotentialKind::kt()).unwrap();
        assert_eq!(s.wealth(), 1.0);
        assert_eq!(s.sum_z(), 1.0);
        assert_eq!(s.awake_count(), 1);
    }

    #[test]
    fn sleeping_step_is_noop() {
        let mut s = BettorState::replay(&[(true, 0.4), (true, -0.2)], PotentialKind::an()).unwrap();
        let before = s.clone();
        s.step(false, 0.0, PotentialKind::an()).unwrap();
        assert_eq!(s, before);
        assert_eq!(s.step(false, 0.1, PotentialKind::an()), Err(Error::SleepingFlip(0.1)));
    }

    #[test]
    fn rejects_large_flip() {
        let mut s = BettorState::new();
        assert_eq!(s.step(true, 1.5, PotentialKind::kt()), Err(Error::FlipOutOfRange(1.5)));
    }

    #[test]
    fn zero_flips_keep_unit_wealth() {
        for kind in [PotentialKind::kt(), PotentialKind::an()] {
            let s = BettorState::replay(&vec![(true, 0.0); 50], kind).unwrap();
            assert_eq!(s.wealth(), 1.0);
        }
    }

    #[test]
    fn overflow_reports_log_value() {
        let mut s = BettorState::new();
        for _ in 0..5000 {
            s.step(true, 1.0, PotentialKind::kt()).unwrap();
        }
        match s.potential_value(PotentialKind::kt()) {
            Err(Error::Overflow { log_value }) => assert!(log_value > 709.0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(PotentialKind::Kt { delta: -1.0 }.validate().is_err());
        assert!(PotentialKind::An { xi: 0.0 }.validate().is_err());
        assert!(PotentialKind::Kt { delta: 2.0 }.validate().is_ok());
    }
}
