//! Randomized bound-compliance sweeps behind `check-bounds`.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cbce::blackbox::{BlackBox, CbLeaFactory, LinearLoss, LossFunction, OcoConfig, Ogd};
use cbce::cbce::{interval_meta_bound, sa_regret_bound, Cbce, CbceConfig, PriorKind};
use cbce::intervals::{
    check_ds_partition, check_gc_partition, floor_log2, partition_ds, partition_gc, Interval,
    Schedule,
};
use cbce::potentials::{BettorState, PotentialKind};
use cbce::regret::{conversion_bound, RegretLedger};
use cbce::scenarios::LeaScenario;
use cbce::sleeping_cb::{regret_bound, ComparatorStats, SleepingCb, Truncation};

/// Slack for floating-point accumulation in realized-versus-bound checks.
pub const BOUND_SLACK: f64 = 1e-9;

/// Outcome of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub name: &'static str,
    /// Number of individual comparisons made.
    pub checked: usize,
    /// Largest realized / bound ratio seen (0 when not applicable).
    pub worst_ratio: f64,
    /// Descriptions of the first violations found.
    pub violations: Vec<String>,
    pub violation_count: usize,
}

impl SweepReport {
    fn new(name: &'static str) -> Self {
        Self { name, checked: 0, worst_ratio: 0.0, violations: Vec::new(), violation_count: 0 }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violation_count += 1;
            if self.violations.len() < 10 {
                self.violations.push(describe());
            }
        }
    }

    fn compare(&mut self, realized: f64, bound: f64, describe: impl FnOnce() -> String) {
        if bound > 0.0 {
            self.worst_ratio = self.worst_ratio.max(realized / bound);
        }
        self.record(realized <= bound + BOUND_SLACK, || {
            format!("{}: realized {realized:.6} > bound {bound:.6}", describe())
        });
    }
}

impl fmt::Display for SweepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok" } else { "VIOLATED" };
        write!(
            f,
            "{:<20} {status:<8} checks={} violations={} worst realized/bound={:.4}",
            self.name, self.checked, self.violation_count, self.worst_ratio
        )?;
        for v in &self.violations {
            write!(f, "\n    {v}")?;
        }
        Ok(())
    }
}

/// `|Active(t)| = floor(log2 t) + 1` for GC, for every `t` up to `t_max`.
pub fn active_cardinality(t_max: u64) -> SweepReport {
    let mut rep = SweepReport::new("active-cardinality");
    for t in 1..=t_max {
        let n = Schedule::GeometricCovering.active(t).map(|a| a.len()).unwrap_or(0);
        let want = floor_log2(t) as usize + 1;
        rep.record(n == want, || format!("t={t}: |Active|={n}, expected {want}"));
    }
    rep
}

/// GC and DS (`g` = 1..4) partition laws on random targets in `[1..t_max]`.
pub fn partitions(instances: usize, t_max: u64, seed: u64) -> SweepReport {
    let mut rep = SweepReport::new("partitions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let (a, b) = (rng.gen_range(1..=t_max), rng.gen_range(1..=t_max));
        let target = Interval { start: a.min(b), end: a.max(b) };
        let gc = check_gc_partition(target, &partition_gc(target));
        rep.record(gc.is_ok(), || format!("GC {target}: {}", gc.clone().unwrap_err()));
        for g in 1..=4 {
            let res = partition_ds(target, g)
                .map_err(|e| e.to_string())
                .and_then(|blocks| check_ds_partition(target, g, &blocks));
            rep.record(res.is_ok(), || format!("DS g={g} {target}: {}", res.unwrap_err()));
        }
    }
    rep
}

fn kinds() -> [PotentialKind; 2] {
    [PotentialKind::kt(), PotentialKind::an()]
}

/// Final wealth dominates the potential of the flip history.
pub fn wealth(instances: usize, horizon: usize, seed: u64) -> SweepReport {
    let mut rep = SweepReport::new("wealth");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..instances {
        let history: Vec<(bool, f64)> = (0..horizon)
            .map(|_| {
                let awake = rng.gen_bool(0.7);
                (awake, if awake { rng.gen_range(-1.0..=1.0) } else { 0.0 })
            })
            .collect();
        for kind in kinds() {
            let state = match BettorState::replay(&history, kind) {
                Ok(s) => s,
                Err(e) => {
                    rep.record(false, || format!("instance {i}: {e}"));
                    continue;
                }
            };
            let f = state.potential_value(kind).unwrap_or(f64::INFINITY);
            rep.record(state.wealth() >= f - BOUND_SLACK, || {
                format!("instance {i} {}: wealth {} < potential {f}", kind.label(), state.wealth())
            });
        }
    }
    rep
}

/// Random LEA losses with per-expert biases and awake masks with at least
/// one awake expert per step.
pub fn random_lea_instance(
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

/// Sleeping CB regret against every expert versus Corollaries 1 and 2, and
/// the non-expansion of the weighted flips at every step.
pub fn sleeping_bound(instances: usize, seed: u64, truncation: Truncation) -> SweepReport {
    let mut rep = SweepReport::new("sleeping-bound");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inst in 0..instances {
        let n = rng.gen_range(1..=8);
        let horizon = rng.gen_range(1..=512);
        let awake_prob = rng.gen_range(0.2..=1.0);
        let (losses, masks) = random_lea_instance(&mut rng, n, horizon, awake_prob);
        for kind in kinds() {
            let mut cb = SleepingCb::uniform(n, kind).expect("n >= 1").with_truncation(truncation);
            let mut regret = vec![0.0; n];
            let mut max_flip_sum = f64::NEG_INFINITY;
            for (l, mask) in losses.iter().zip(&masks) {
                let pred = cb.predict(mask).expect("one expert awake");
                let out = cb.update(&pred, l).expect("losses in range");
                max_flip_sum = max_flip_sum.max(out.weighted_flip_sum);
                for i in (0..n).filter(|&i| mask[i]) {
                    regret[i] += out.loss - l[i];
                }
            }
            rep.record(max_flip_sum <= 1e-12, || {
                format!("instance {inst} {}: weighted flip sum {max_flip_sum:e} > 0", kind.label())
            });
            for (j, &r) in regret.iter().enumerate() {
                let b = &cb.bettors()[j];
                let stats = ComparatorStats {
                    prior: cb.prior()[j],
                    awake_steps: b.awake_count(),
                    horizon: horizon as u64,
                    abs_flip_sum: b.abs_sum_z(),
                };
                rep.compare(r, regret_bound(kind, &stats), || {
                    format!("instance {inst} (N={n}, T={horizon}) {} expert {j}", kind.label())
                });
            }
        }
    }
    rep
}

/// CBCE configuration matching the meta regret analysis: GC intervals, the
/// `1 / (J1^2 (1 + floor log2 J1))` prior, KT bettors, cold-started runs.
pub fn analysis_config(truncation: Truncation) -> CbceConfig {
    CbceConfig {
        schedule: Schedule::GeometricCovering,
        potential: PotentialKind::kt(),
        prior: PriorKind::BarPi,
        prior_scale: 1.0,
        warm_start: false,
        truncation,
    }
}

/// Meta losses, per-run totals and the largest weighted flip sum of CBCE
/// over CB(KT) black boxes.
pub struct MetaTrace {
    pub meta_losses: Vec<f64>,
    pub run_totals: HashMap<Interval, f64>,
    pub max_weighted_flip_sum: f64,
}

pub fn trace_cbce(config: CbceConfig, losses: &[Vec<f64>]) -> cbce::Result<MetaTrace> {
    let factory = CbLeaFactory { n_experts: losses[0].len(), potential: PotentialKind::kt() };
    let mut meta = Cbce::new(config, factory)?;
    let mut tr = MetaTrace {
        meta_losses: Vec::with_capacity(losses.len()),
        run_totals: HashMap::new(),
        max_weighted_flip_sum: f64::NEG_INFINITY,
    };
    for l in losses {
        meta.predict()?;
        let step = meta.observe(&LinearLoss::new(l.clone()))?;
        tr.meta_losses.push(step.meta_loss);
        for (j, rl) in step.run_intervals.iter().zip(&step.run_losses) {
            *tr.run_totals.entry(*j).or_insert(0.0) += rl;
        }
        tr.max_weighted_flip_sum = tr.max_weighted_flip_sum.max(step.weighted_flip_sum);
    }
    Ok(tr)
}

/// `A1` such that CB(KT) over `n` experts has regret at most `A1 sqrt(t)`
/// for every `t <= horizon` (KT Sleeping CB bound with a uniform prior).
pub fn cb_anytime_constant(n: usize, horizon: u64) -> f64 {
    (2.0 * ((n as f64).ln() + 0.5 * (horizon as f64).ln() + 2.0)).sqrt()
}

/// Per-interval meta bound on every completed GC interval and the strongly
/// adaptive bound on random sub-intervals, for CBCE(KT) over CB(KT).
pub fn meta_bound(
    instances: usize,
    horizon: usize,
    sub_intervals: usize,
    seed: u64,
    truncation: Truncation,
) -> SweepReport {
    let mut rep = SweepReport::new("meta-bound");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inst in 0..instances {
        let n = rng.gen_range(1..=8);
        let (losses, _) = random_lea_instance(&mut rng, n, horizon, 1.0);
        let tr = match trace_cbce(analysis_config(truncation), &losses) {
            Ok(tr) => tr,
            Err(e) => {
                rep.record(false, || format!("instance {inst}: {e}"));
                continue;
            }
        };
        rep.record(tr.max_weighted_flip_sum <= 1e-12, || {
            format!("instance {inst}: weighted flip sum {:e} > 0", tr.max_weighted_flip_sum)
        });
        let mut runs: Vec<_> = tr.run_totals.iter().filter(|(j, _)| j.end as usize <= horizon).collect();
        runs.sort_by_key(|(j, _)| **j);
        for (j, run_total) in runs {
            let meta: f64 = tr.meta_losses[j.start as usize - 1..j.end as usize].iter().sum();
            rep.compare(meta - run_total, interval_meta_bound(*j), || {
                format!("instance {inst} (N={n}) meta bound on {j}")
            });
        }
        let ledger = RegretLedger::new(tr.meta_losses, losses).expect("unit losses");
        let a1 = cb_anytime_constant(n, horizon as u64);
        for _ in 0..sub_intervals {
            let (a, b) = (rng.gen_range(1..=horizon as u64), rng.gen_range(1..=horizon as u64));
            let i = Interval { start: a.min(b), end: a.max(b) };
            let realized = ledger.sa_regret(i).expect("interval inside horizon");
            rep.compare(realized, sa_regret_bound(i, 0.5, a1), || {
                format!("instance {inst} (N={n}) SA bound on {i}")
            });
        }
    }
    rep
}

/// `a |x - c| + b x` on the line.
struct Kinked {
    a: f64,
    b: f64,
    c: f64,
}

impl LossFunction for Kinked {
    fn value(&self, x: &[f64]) -> f64 {
        self.a * (x[0] - self.c).abs() + self.b * x[0]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let s = if x[0] > self.c {
            1.0
        } else if x[0] < self.c {
            -1.0
        } else {
            0.0
        };
        vec![self.a * s + self.b]
    }
}

/// OGD static regret on 1-d piecewise-linear losses versus `1.5 B G sqrt(T)`.
pub fn ogd(instances: usize, horizon: usize, seed: u64) -> SweepReport {
    let mut rep = SweepReport::new("ogd");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inst in 0..instances {
        let diameter = rng.gen_range(0.5..4.0);
        let g = rng.gen_range(0.5..4.0);
        let r = diameter / 2.0;
        let fs: Vec<Kinked> = (0..horizon)
            .map(|_| {
                let a = rng.gen_range(0.0..g);
                Kinked { a, b: rng.gen_range(-(g - a)..=(g - a)), c: rng.gen_range(-r..=r) }
            })
            .collect();
        let config = OcoConfig { diameter, lipschitz: g, smoothness_lipschitz: g, dimension: 1 };
        let mut learner = Ogd::new(config, None).expect("valid config");
        let mut total = 0.0;
        for f in &fs {
            total += f.value(&learner.predict());
            if let Err(e) = learner.observe(f) {
                rep.record(false, || format!("instance {inst}: {e}"));
            }
        }
        // a sum of convex piecewise-linear functions is minimized at a kink or an endpoint
        let best = fs
            .iter()
            .map(|f| f.c)
            .chain([-r, r])
            .map(|x| fs.iter().map(|f| f.value(&[x])).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let bound = 1.5 * diameter * g * (horizon as f64).sqrt();
        rep.compare(total - best, bound, || format!("instance {inst} (B={diameter:.3}, G={g:.3})"));
    }
    rep
}

/// Per-interval constant `c` with `SA-regret(I) <= c sqrt(|I| ln T)` implied
/// by the strongly adaptive bound with alpha = 1/2 and the KT Sleeping CB
/// constant `A1`.
pub fn conversion_constant(n: usize, horizon: u64) -> f64 {
    let ln_t = (horizon as f64).ln();
    let a1 = cb_anytime_constant(n, horizon);
    4.0 * a1 / ((2f64.sqrt() - 1.0) * ln_t.sqrt()) + 8.0 * (7.0 + 5.0 / ln_t).sqrt()
}

/// m-shift regret of CBCE(KT) over CB(KT) on the shifting-expert scenario
/// versus the SA-to-m-shift conversion bound.
pub fn conversion(instances: usize, n_experts: usize, horizon: u64, seed: u64) -> SweepReport {
    let mut rep = SweepReport::new("conversion");
    for inst in 0..instances {
        let s = seed.wrapping_add(inst as u64);
        let scenario = match LeaScenario::new(n_experts, horizon, s) {
            Ok(sc) => sc,
            Err(e) => {
                rep.record(false, || format!("scenario: {e}"));
                return rep;
            }
        };
        let losses: Vec<Vec<f64>> =
            (1..=horizon).map(|t| scenario.losses(t).expect("t inside horizon")).collect();
        let tr = match trace_cbce(analysis_config(Truncation::Standard), &losses) {
            Ok(tr) => tr,
            Err(e) => {
                rep.record(false, || format!("seed {s}: {e}"));
                continue;
            }
        };
        let ledger = RegretLedger::new(tr.meta_losses, losses).expect("unit losses");
        let c = conversion_constant(n_experts, horizon);
        let shifts = scenario.segments.len() - 1;
        for m in 0..=shifts {
            rep.compare(ledger.m_shift_regret(m), conversion_bound(c, m as u64, horizon), || {
                format!("seed {s} m={m}")
            });
        }
    }
    rep
}
