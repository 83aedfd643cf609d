//! Post-hoc regret accounting over recorded losses.

use crate::error::{Error, Result};
use crate::intervals::Interval;

/// Per-step losses of an algorithm and of a finite set of comparators.
///
/// Comparators are the experts for LEA, or the points of a comparator grid
/// for OCO. Time is 1-indexed in every query.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    algo_losses: Vec<f64>,
    expert_losses: Vec<Vec<f64>>,
    algo_prefix: Vec<f64>,
    expert_prefix: Vec<Vec<f64>>,
}

impl RegretLedger {
    /// `expert_losses[t][i]` is comparator `i`'s loss at step `t + 1`.
    pub fn new(algo_losses: Vec<f64>, expert_losses: Vec<Vec<f64>>) -> Result<Self> {
        if algo_losses.len() != expert_losses.len() {
            return Err(Error::LengthMismatch {
                expected: algo_losses.len(),
                got: expert_losses.len(),
            });
        }
        let n = expert_losses.first().map_or(0, Vec::len);
        if n == 0 && !algo_losses.is_empty() {
            return Err(Error::InvalidParameter("ledger needs at least one comparator".into()));
        }
        for row in &expert_losses {
            if row.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: row.len() });
            }
        }
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        if let Some(index) = algo_losses.iter().position(|v| !in_unit(v)) {
            return Err(Error::LossOutOfRange { index, value: algo_losses[index] });
        }
        for row in &expert_losses {
            if let Some(index) = row.iter().position(|v| !in_unit(v)) {
                return Err(Error::LossOutOfRange { index, value: row[index] });
            }
        }

        let mut algo_prefix = Vec::with_capacity(algo_losses.len() + 1);
        algo_prefix.push(0.0);
        let mut acc = 0.0;
        for &l in &algo_losses {
            acc += l;
            algo_prefix.push(acc);
        }
        let mut expert_prefix = Vec::with_capacity(expert_losses.len() + 1);
        expert_prefix.push(vec![0.0; n]);
        for row in &expert_losses {
            let last = expert_prefix.last().expect("prefix starts non-empty");
            let next = last.iter().zip(row).map(|(a, b)| a + b).collect();
            expert_prefix.push(next);
        }
        Ok(Self { algo_losses, expert_losses, algo_prefix, expert_prefix })
    }

    pub fn horizon(&self) -> u64 {
        self.algo_losses.len() as u64
    }

    pub fn n_comparators(&self) -> usize {
        self.expert_losses.first().map_or(0, Vec::len)
    }

    pub fn algo_losses(&self) -> &[f64] {
        &self.algo_losses
    }

    pub fn expert_losses(&self) -> &[Vec<f64>] {
        &self.expert_losses
    }

    fn check(&self, i: Interval) -> Result<()> {
        if i.start == 0 {
            return Err(Error::ZeroTime);
        }
        if i.end > self.horizon() {
            return Err(Error::InvalidParameter(format!(
                "interval {i} exceeds horizon {}",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// Algorithm's total loss on `i`.
    pub fn algo_loss(&self, i: Interval) -> Result<f64> {
        self.check(i)?;
        Ok(self.algo_prefix[i.end as usize] - self.algo_prefix[i.start as usize - 1])
    }

    /// Total loss of every comparator on `i`.
    pub fn comparator_losses(&self, i: Interval) -> Result<Vec<f64>> {
        self.check(i)?;
        let hi = &self.expert_prefix[i.end as usize];
        let lo = &self.expert_prefix[i.start as usize - 1];
        Ok(hi.iter().zip(lo).map(|(a, b)| a - b).collect())
    }

    /// Loss of the best fixed comparator on `i`.
    pub fn best_comparator_loss(&self, i: Interval) -> Result<f64> {
        Ok(self.comparator_losses(i)?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Regret on `i` against the best fixed comparator for `i`.
    pub fn sa_regret(&self, i: Interval) -> Result<f64> {
        Ok(self.algo_loss(i)? - self.best_comparator_loss(i)?)
    }

    /// Regret on `i` against comparator `j`.
    pub fn regret_against(&self, i: Interval, j: usize) -> Result<f64> {
        let losses = self.comparator_losses(i)?;
        let lj = *losses
            .get(j)
            .ok_or_else(|| Error::InvalidParameter(format!("no comparator {j}")))?;
        Ok(self.algo_loss(i)? - lj)
    }

    /// Static regret over the full horizon.
    pub fn static_regret(&self) -> Result<f64> {
        if self.horizon() == 0 {
            return Ok(0.0);
        }
        self.sa_regret(Interval { start: 1, end: self.horizon() })
    }

    /// Smallest total loss of a comparator sequence with at most `m` switches.
    ///
    /// Dynamic programme over (time, comparator, switches used), keeping for
    /// each switch count the best value over all comparators so a switch
    /// costs O(1): O(T N m) overall.
    pub fn best_m_shift_loss(&self, m: usize) -> f64 {
        let n = self.n_comparators();
        if self.expert_losses.is_empty() {
            return 0.0;
        }
        // best[k][i]: minimum loss of a sequence ending at i after k switches
        let mut best = vec![vec![f64::INFINITY; n]; m + 1];
        best[0].clone_from(&self.expert_losses[0]);
        for row in &self.expert_losses[1..] {
            let row_min: Vec<f64> =
                best.iter().map(|b| b.iter().copied().fold(f64::INFINITY, f64::min)).collect();
            for k in (0..=m).rev() {
                for i in 0..n {
                    let stay = best[k][i];
                    let switch = if k > 0 { row_min[k - 1] } else { f64::INFINITY };
                    best[k][i] = stay.min(switch) + row[i];
                }
            }
        }
        best.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Regret against the best comparator sequence with at most `m` switches.
    pub fn m_shift_regret(&self, m: usize) -> f64 {
        let total = self.algo_prefix.last().copied().unwrap_or(0.0);
        total - self.best_m_shift_loss(m)
    }
}

/// `c sqrt((m + 1) T ln T)`: the m-shift regret implied by an SA-regret
/// bound of the form `c sqrt(|I| ln T)` on every interval.
pub fn conversion_bound(c: f64, m: u64, horizon: u64) -> f64 {
    let t = horizon as f64;
    c * ((m as f64 + 1.0) * t * t.ln()).sqrt()
}
