//! Paired multi-seed comparisons on the shifting scenarios.

use rayon::prelude::*;

use cbce::cbce::PriorKind;
use cbce::intervals::Schedule;
use cbce::potentials::PotentialKind;
use cbce::regret::RegretLedger;
use cbce::scenarios::{FavoredLoss, LeaScenario, OcoScenario};

use crate::config::BlackBoxArg;
use crate::csv_io::Trace;
use crate::simulate::{AlgoSpec, LeaRun, MetaSettings, OcoRun};

/// One-sided sign test: `P(X >= wins)` for `X ~ Binomial(trials, 1/2)`.
pub fn sign_test_p(wins: usize, trials: usize) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    // ln C(n, k) accumulated incrementally
    let n = trials as f64;
    let mut log_c = 0.0;
    let mut tail = 0.0;
    for k in 0..=trials {
        if k > 0 {
            log_c += (n - k as f64 + 1.0).ln() - (k as f64).ln();
        }
        if k >= wins {
            tail += (log_c - n * std::f64::consts::LN_2).exp();
        }
    }
    tail.min(1.0)
}

/// Paired comparison of two algorithms across seeds on some per-seed score
/// (lower is better).
#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub what: String,
    pub mean_ours: f64,
    pub mean_theirs: f64,
    pub wins: usize,
    pub ties: usize,
    pub seeds: usize,
    pub p_value: f64,
}

impl PairedComparison {
    pub fn new(what: impl Into<String>, ours: &[f64], theirs: &[f64]) -> Self {
        let wins = ours.iter().zip(theirs).filter(|(a, b)| a < b).count();
        let ties = ours.iter().zip(theirs).filter(|(a, b)| a == b).count();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
        Self {
            what: what.into(),
            mean_ours: mean(ours),
            mean_theirs: mean(theirs),
            wins,
            ties,
            seeds: ours.len(),
            p_value: sign_test_p(wins, ours.len() - ties),
        }
    }

    /// Lower mean and a significant sign test at `alpha`.
    pub fn significant(&self, alpha: f64) -> bool {
        self.mean_ours < self.mean_theirs && self.p_value < alpha
    }
}

/// Settings of the shifting-expert comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionSetup {
    pub n_experts: usize,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    /// Steps after each switch compared against Fixed Share.
    pub window: u64,
}

impl Default for ReproductionSetup {
    fn default() -> Self {
        Self { n_experts: 1000, horizon: 900, seeds: (0..50).collect(), window: 100 }
    }
}

/// Run CBCE(AN), SAOL and Fixed Share (m = 2) on the shifting-expert
/// scenario with DS g = 2 and warm starts, and compare CBCE(AN) with SAOL on
/// total loss and with Fixed Share after each switch.
pub fn reproduce(setup: &ReproductionSetup) -> anyhow::Result<Vec<PairedComparison>> {
    let scenario = LeaScenario::new(setup.n_experts, setup.horizon, 0)?;
    let switches: Vec<u64> = scenario.segments.iter().skip(1).map(|s| s.interval.start).collect();
    let run = LeaRun {
        scenario,
        algorithms: vec![AlgoSpec::Cbce(PotentialKind::an()), AlgoSpec::Saol, AlgoSpec::FixedShare { shifts: 2 }],
        meta: MetaSettings { schedule: Schedule::DataStreaming { g: 2 }, prior: PriorKind::Uniform, warm_start: true },
        black_box: PotentialKind::an(),
    };
    let per_seed: Vec<Vec<Trace>> =
        setup.seeds.par_iter().map(|&s| run.simulate(s)).collect::<anyhow::Result<_>>()?;
    let column = |k: usize, score: &dyn Fn(&Trace) -> f64| -> Vec<f64> {
        per_seed.iter().map(|traces| score(&traces[k])).collect()
    };
    let total = |t: &Trace| t.total();
    let mut out = vec![PairedComparison::new("total loss, CBCE(AN) vs SAOL", &column(0, &total), &column(1, &total))];
    for &s in &switches {
        let end = (s + setup.window - 1).min(setup.horizon);
        let window = move |t: &Trace| t.window(s, end);
        out.push(PairedComparison::new(
            format!("loss on [{s}..{end}], CBCE(AN) vs Fixed Share"),
            &column(0, &window),
            &column(2, &window),
        ));
    }
    Ok(out)
}

/// Per-segment regrets of the low and high variants on one seed.
type SegmentPair = (Vec<f64>, Vec<f64>);

/// Fraction of seeds on which a low-loss variant has smaller regret than
/// its high-loss twin on every segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderReport {
    pub what: &'static str,
    pub successes: usize,
    pub seeds: usize,
    pub mean_low_regret: f64,
    pub mean_high_regret: f64,
}

impl FirstOrderReport {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.seeds.max(1) as f64
    }

    fn from_pairs(what: &'static str, pairs: &[SegmentPair]) -> Self {
        let successes =
            pairs.iter().filter(|(lo, hi)| lo.iter().zip(hi).all(|(a, b)| a < b)).count();
        let mean = |sel: &dyn Fn(&SegmentPair) -> f64| {
            pairs.iter().map(sel).sum::<f64>() / pairs.len().max(1) as f64
        };
        Self {
            what,
            successes,
            seeds: pairs.len(),
            mean_low_regret: mean(&|p| p.0.iter().sum()),
            mean_high_regret: mean(&|p| p.1.iter().sum()),
        }
    }
}

fn first_order_meta() -> MetaSettings {
    MetaSettings { schedule: Schedule::DataStreaming { g: 2 }, prior: PriorKind::Uniform, warm_start: true }
}

/// LEA twins: the favored expert loses 0 (low) or `min(1, |x|)` (high, about
/// 0.4 on average) while every other expert loses `min(1, 1/2 + |x|)` in
/// both. Per-segment regret is measured against the best expert of the
/// segment.
pub fn first_order_lea(n_experts: usize, horizon: u64, seeds: &[u64]) -> anyhow::Result<FirstOrderReport> {
    let base = LeaScenario { other_offset: 0.5, ..LeaScenario::new(n_experts, horizon, 0)? };
    let low = LeaScenario { favored: FavoredLoss::Constant { level: 0.0 }, ..base.clone() };
    let high = LeaScenario { favored: FavoredLoss::Discounted { bonus: 0.0 }, ..base };
    let segment_regrets = |scenario: &LeaScenario, seed: u64| -> anyhow::Result<Vec<f64>> {
        let run = LeaRun {
            scenario: scenario.clone(),
            algorithms: vec![AlgoSpec::Cbce(PotentialKind::an())],
            meta: first_order_meta(),
            black_box: PotentialKind::an(),
        };
        let trace = run.simulate(seed)?.remove(0);
        let sc = scenario.with_seed(seed);
        let experts = (1..=horizon).map(|t| sc.losses(t)).collect::<Result<Vec<_>, _>>()?;
        let ledger = RegretLedger::new(trace.losses, experts)?;
        sc.segments.iter().map(|s| Ok(ledger.sa_regret(s.interval)?)).collect()
    };
    let pairs = seeds
        .par_iter()
        .map(|&s| Ok((segment_regrets(&low, s)?, segment_regrets(&high, s)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(FirstOrderReport::from_pairs("LEA", &pairs))
}

/// OCO twins: quadratics centred exactly on the segment minimizer (low,
/// comparator loss 0) or on a jittered center at distance `radius` (high,
/// comparator loss about `radius^2 / scale`). Both use the same scale so the
/// clamp stays inactive. Per-segment regret is measured against the best
/// fixed point of the segment.
pub fn first_order_oco(horizon: u64, radius: f64, seeds: &[u64]) -> anyhow::Result<FirstOrderReport> {
    let high = OcoScenario::new(horizon, 0)?.with_noise(radius)?;
    let low = OcoScenario { noise_radius: 0.0, ..high.clone() };
    let segment_regrets = |scenario: &OcoScenario, seed: u64| -> anyhow::Result<Vec<f64>> {
        let run = OcoRun {
            scenario: scenario.clone(),
            algorithms: vec![AlgoSpec::Cbce(PotentialKind::an())],
            meta: first_order_meta(),
            black_box: BlackBoxArg::Ftrl,
        };
        let trace = run.simulate(seed)?.remove(0);
        let sc = scenario.with_seed(seed);
        sc.segments
            .iter()
            .map(|s| Ok(trace.window(s.interval.start, s.interval.end) - sc.best_fixed(s.interval)?.0))
            .collect()
    };
    let pairs = seeds
        .par_iter()
        .map(|&s| Ok((segment_regrets(&low, s)?, segment_regrets(&high, s)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(FirstOrderReport::from_pairs("OCO", &pairs))
}

/// Jitter radius giving the noisy OCO twin a comparator loss of `level` per
/// step on the default geometry (reach 3/2 before jitter).
pub fn radius_for_level(level: f64) -> f64 {
    // r^2 / (3/2 + r)^2 = level
    let s = level.sqrt();
    1.5 * s / (1.0 - s)
}
