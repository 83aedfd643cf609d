//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use cbce::blackbox::{CbLeaFactory, LinearLoss};
use cbce::cbce::{Cbce, CbceConfig};
use cbce::intervals::Interval;
use cbce::potentials::PotentialKind;
use cbce::sleeping_cb::{regret_bound, ComparatorStats, SleepingCb};
use rand::Rng;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0` by the Lanczos approximation.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `ln F` of a flip history restricted to awake steps.
pub fn log_potential(flips: &[f64], kind: PotentialKind) -> f64 {
    match kind {
        PotentialKind::Kt { delta } => {
            let s = flips.len() as f64;
            let x: f64 = flips.iter().sum();
            let h = (s + delta + 1.0) / 2.0;
            s * 2f64.ln() + ln_gamma(delta + 1.0) + ln_gamma(h + x / 2.0) + ln_gamma(h - x / 2.0)
                - 2.0 * ln_gamma((delta + 1.0) / 2.0)
                - ln_gamma(s + delta + 1.0)
        }
        PotentialKind::An { xi } => {
            let mut z_bar = 0.0;
            let mut penalty = 0.0;
            for z in flips {
                penalty += z.abs() / (2.0 * (xi + z_bar + 1.0));
                z_bar += z.abs();
            }
            let x: f64 = flips.iter().sum();
            x * x / (2.0 * (xi + z_bar)) - penalty
        }
    }
}

/// Betting fraction from the potential ratio with the history extended by
/// `+1` and `-1`; the ratio is formed in log space.
pub fn ratio_fraction(flips: &[f64], kind: PotentialKind) -> f64 {
    let mut up = flips.to_vec();
    up.push(1.0);
    let mut down = flips.to_vec();
    down.push(-1.0);
    let d = log_potential(&up, kind) - log_potential(&down, kind);
    // (e^a - e^b) / (e^a + e^b) = tanh((a - b) / 2)
    (0.5 * d).tanh()
}

/// Coin-betting experts algorithm in its original non-sleeping form, with
/// wealth in linear space.
pub struct ReferenceCb {
    pub prior: Vec<f64>,
    pub kind: PotentialKind,
    sums: Vec<f64>,
    abs_sums: Vec<f64>,
    wealth: Vec<f64>,
    t: u64,
}

impl ReferenceCb {
    pub fn new(prior: Vec<f64>, kind: PotentialKind) -> Self {
        let n = prior.len();
        Self { prior, kind, sums: vec![0.0; n], abs_sums: vec![0.0; n], wealth: vec![1.0; n], t: 0 }
    }

    fn wagers(&self) -> Vec<f64> {
        (0..self.prior.len())
            .map(|i| {
                let beta = match self.kind {
                    PotentialKind::Kt { delta } => self.sums[i] / ((self.t + 1) as f64 + delta),
                    PotentialKind::An { xi } => {
                        let y = 2.0 * self.sums[i] / (xi + self.abs_sums[i] + 1.0);
                        2.0 / (1.0 + (-y).exp()) - 1.0
                    }
                };
                beta * self.wealth[i]
            })
            .collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let raw: Vec<f64> =
            self.prior.iter().zip(self.wagers()).map(|(p, w)| p * w.max(0.0)).collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            raw.iter().map(|v| v / total).collect()
        } else {
            self.prior.clone()
        }
    }

    pub fn update(&mut self, losses: &[f64]) {
        let p = self.weights();
        let w = self.wagers();
        let h: f64 = p.iter().zip(losses).map(|(a, b)| a * b).sum();
        for i in 0..self.prior.len() {
            let r = h - losses[i];
            let g = if w[i] > 0.0 { r } else { r.max(0.0) };
            self.wealth[i] += g * w[i];
            self.sums[i] += g;
            self.abs_sums[i] += g.abs();
        }
        self.t += 1;
    }
}

/// Smallest loss of any comparator sequence with at most `m` switches, by
/// enumerating every sequence.
pub fn exhaustive_m_shift(expert_losses: &[Vec<f64>], m: usize) -> f64 {
    fn go(losses: &[Vec<f64>], t: usize, prev: usize, switches: usize, m: usize, acc: f64) -> f64 {
        if t == losses.len() {
            return acc;
        }
        let mut best = f64::INFINITY;
        for i in 0..losses[t].len() {
            let s = switches + usize::from(t > 0 && i != prev);
            if s <= m {
                best = best.min(go(losses, t + 1, i, s, m, acc + losses[t][i]));
            }
        }
        best
    }
    go(expert_losses, 0, 0, 0, m, 0.0)
}

/// Random LEA losses with a per-expert bias, and awake masks with at least
/// one awake expert per step. `awake_prob = 1` gives the all-awake case.
pub fn lea_instance(
    rng: &mut impl Rng,
    n: usize,
    horizon: usize,
    awake_prob: f64,
) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
    let bias: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let spread = rng.gen_range(0.0..0.5);
    let mut losses = Vec::with_capacity(horizon);
    let mut masks = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        losses.push(
            bias.iter()
                .map(|b| (b + spread * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0))
                .collect(),
        );
        let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(awake_prob)).collect();
        if !mask.iter().any(|&a| a) {
            mask[rng.gen_range(0..n)] = true;
        }
        masks.push(mask);
    }
    (losses, masks)
}

/// Realized sleeping regret and its bound for every expert after running
/// Sleeping CB with a uniform prior.
pub fn sleeping_regrets(
    kind: PotentialKind,
    losses: &[Vec<f64>],
    masks: &[Vec<bool>],
) -> Vec<(f64, f64)> {
    let n = losses[0].len();
    let mut cb = SleepingCb::uniform(n, kind).unwrap();
    let mut regret = vec![0.0; n];
    for (l, mask) in losses.iter().zip(masks) {
        let pred = cb.predict(mask).unwrap();
        let out = cb.update(&pred, l).unwrap();
        for i in 0..n {
            if mask[i] {
                regret[i] += out.loss - l[i];
            }
        }
    }
    (0..n)
        .map(|i| {
            let b = &cb.bettors()[i];
            let stats = ComparatorStats {
                prior: cb.prior()[i],
                awake_steps: b.awake_count(),
                horizon: losses.len() as u64,
                abs_flip_sum: b.abs_sum_z(),
            };
            (regret[i], regret_bound(kind, &stats))
        })
        .collect()
}

/// Per-step meta losses and per-run cumulative losses of CBCE over CB
/// black boxes on a linear loss sequence.
pub struct CbceTrace {
    pub meta_losses: Vec<f64>,
    pub run_totals: HashMap<Interval, f64>,
    pub max_weighted_flip_sum: f64,
}

pub fn run_cbce_lea(config: CbceConfig, black_box: PotentialKind, losses: &[Vec<f64>]) -> CbceTrace {
    let factory = CbLeaFactory { n_experts: losses[0].len(), potential: black_box };
    let mut meta = Cbce::new(config, factory).unwrap();
    let mut trace = CbceTrace {
        meta_losses: Vec::with_capacity(losses.len()),
        run_totals: HashMap::new(),
        max_weighted_flip_sum: f64::NEG_INFINITY,
    };
    for l in losses {
        meta.predict().unwrap();
        let step = meta.observe(&LinearLoss::new(l.clone())).unwrap();
        trace.meta_losses.push(step.meta_loss);
        for (j, rl) in step.run_intervals.iter().zip(&step.run_losses) {
            *trace.run_totals.entry(*j).or_insert(0.0) += rl;
        }
        trace.max_weighted_flip_sum = trace.max_weighted_flip_sum.max(step.weighted_flip_sum);
    }
    trace
}

/// Meta regret of every completed run: `(interval, realized, bound)`.
pub fn meta_regrets(trace: &CbceTrace) -> Vec<(Interval, f64, f64)> {
    let horizon = trace.meta_losses.len() as u64;
    trace
        .run_totals
        .iter()
        .filter(|(j, _)| j.end <= horizon)
        .map(|(j, run_total)| {
            let meta: f64 = trace.meta_losses[j.start as usize - 1..j.end as usize].iter().sum();
            (*j, meta - run_total, cbce::cbce::interval_meta_bound(*j))
        })
        .collect()
}
