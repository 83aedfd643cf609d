//! Scenario simulation for the run subcommands.

use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, Context};
use rayon::prelude::*;

use cbce::baselines::{Atv, FixedShare, Saol};
use cbce::blackbox::{CbLeaFactory, FtrlFactory, LinearLoss, LossFunction, OcoConfig, OgdFactory};
use cbce::cbce::{Cbce, CbceConfig, PriorKind};
use cbce::intervals::Schedule;
use cbce::pool::OnlineAlgorithm;
use cbce::potentials::PotentialKind;
use cbce::scenarios::{equal_segments, LeaScenario, OcoScenario, Segment};

use crate::config::{Algorithm, BlackBoxArg, LeaArgs, MetaArgs, OcoArgs, PotentialArg};
use crate::csv_io::{write_traces, Trace};

/// Meta-level settings shared by every algorithm in a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaSettings {
    pub schedule: Schedule,
    pub prior: PriorKind,
    pub warm_start: bool,
}

impl MetaSettings {
    pub fn from_args(args: &MetaArgs) -> Self {
        Self { schedule: args.schedule(), prior: args.prior.into(), warm_start: args.warm_start }
    }

    fn cbce(&self, potential: PotentialKind) -> CbceConfig {
        CbceConfig {
            schedule: self.schedule,
            potential,
            prior: self.prior,
            warm_start: self.warm_start,
            ..CbceConfig::default()
        }
    }
}

/// An algorithm with its resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgoSpec {
    Cbce(PotentialKind),
    Saol,
    Atv,
    FixedShare { shifts: u64 },
}

impl AlgoSpec {
    pub fn resolve(a: Algorithm, default_potential: PotentialArg, shifts: u64) -> Self {
        match a {
            Algorithm::Cbce(p) => AlgoSpec::Cbce(p.unwrap_or(default_potential).into()),
            Algorithm::Saol => AlgoSpec::Saol,
            Algorithm::Atv => AlgoSpec::Atv,
            Algorithm::FixedShare => AlgoSpec::FixedShare { shifts },
        }
    }

    pub fn label(&self) -> String {
        match self {
            AlgoSpec::Cbce(p) => format!("cbce-{}", p.label()),
            AlgoSpec::Saol => "saol".into(),
            AlgoSpec::Atv => "atv".into(),
            AlgoSpec::FixedShare { .. } => "fixedshare".into(),
        }
    }
}

/// Complete description of an LEA run.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaRun {
    pub scenario: LeaScenario,
    pub algorithms: Vec<AlgoSpec>,
    pub meta: MetaSettings,
    pub black_box: PotentialKind,
}

impl LeaRun {
    pub fn from_args(args: &LeaArgs) -> anyhow::Result<Self> {
        let c = &args.common;
        let segments = equal_segments(c.horizon, args.segments)?
            .into_iter()
            .enumerate()
            .map(|(k, interval)| Segment { interval, favored: k % args.n_experts.max(1) })
            .collect();
        let scenario = LeaScenario {
            n_experts: args.n_experts,
            horizon: c.horizon,
            segments,
            noise_sigma: args.noise_sigma,
            favored: cbce::scenarios::FavoredLoss::Discounted { bonus: args.favored_bonus },
            other_offset: 0.0,
            seed: 0,
        };
        scenario.validate()?;
        let algorithms =
            c.meta.0.iter().map(|&a| AlgoSpec::resolve(a, c.potential, args.shifts)).collect();
        let run = Self {
            scenario,
            algorithms,
            meta: MetaSettings::from_args(c),
            black_box: args.black_box_potential.into(),
        };
        run.meta.schedule.validate()?;
        Ok(run)
    }

    fn build(&self, spec: AlgoSpec) -> anyhow::Result<Box<dyn OnlineAlgorithm>> {
        let factory = CbLeaFactory { n_experts: self.scenario.n_experts, potential: self.black_box };
        let m = self.meta;
        Ok(match spec {
            AlgoSpec::Cbce(p) => Box::new(Cbce::new(m.cbce(p), factory)?),
            AlgoSpec::Saol => Box::new(Saol::new(m.schedule, factory, m.warm_start)?),
            AlgoSpec::Atv => Box::new(Atv::new(m.schedule, factory, m.warm_start)?),
            AlgoSpec::FixedShare { shifts } => {
                Box::new(FixedShare::tuned(self.scenario.n_experts, self.scenario.horizon, shifts)?)
            }
        })
    }

    /// Every algorithm on the loss stream of `seed`.
    pub fn simulate(&self, seed: u64) -> anyhow::Result<Vec<Trace>> {
        let scenario = self.scenario.with_seed(seed);
        let losses = (1..=scenario.horizon)
            .map(|t| scenario.losses(t).map(LinearLoss::new))
            .collect::<Result<Vec<_>, _>>()?;
        self.algorithms
            .iter()
            .map(|&spec| {
                let mut algo = self.build(spec)?;
                let label = spec.label();
                let losses = run_algorithm(algo.as_mut(), &losses)
                    .with_context(|| format!("{label}, seed {seed}"))?;
                Ok(Trace { seed, algorithm: label, losses })
            })
            .collect()
    }
}

/// Complete description of an OCO run.
#[derive(Debug, Clone, PartialEq)]
pub struct OcoRun {
    pub scenario: OcoScenario,
    pub algorithms: Vec<AlgoSpec>,
    pub meta: MetaSettings,
    pub black_box: BlackBoxArg,
}

impl OcoRun {
    pub fn from_args(args: &OcoArgs) -> anyhow::Result<Self> {
        let c = &args.common;
        let mut scenario = OcoScenario::new(c.horizon, 0)?;
        if args.noise_radius > 0.0 {
            scenario = scenario.with_noise(args.noise_radius)?;
        }
        let algorithms = c
            .meta
            .0
            .iter()
            .map(|&a| match a {
                Algorithm::FixedShare => bail!("fixedshare needs a finite expert set; not valid for run-oco"),
                a => Ok(AlgoSpec::resolve(a, c.potential, 0)),
            })
            .collect::<anyhow::Result<_>>()?;
        let run = Self {
            scenario,
            algorithms,
            meta: MetaSettings::from_args(c),
            black_box: args.black_box,
        };
        run.meta.schedule.validate()?;
        Ok(run)
    }

    pub fn oco_config(&self) -> OcoConfig {
        let g = self.scenario.lipschitz();
        OcoConfig {
            diameter: self.scenario.diameter,
            lipschitz: g,
            smoothness_lipschitz: g,
            dimension: self.scenario.dimension,
        }
    }

    fn build(&self, spec: AlgoSpec) -> anyhow::Result<Box<dyn OnlineAlgorithm>> {
        let m = self.meta;
        let cfg = self.oco_config();
        Ok(match (self.black_box, spec) {
            (BlackBoxArg::Ftrl, AlgoSpec::Cbce(p)) => Box::new(Cbce::new(m.cbce(p), FtrlFactory(cfg))?),
            (BlackBoxArg::Ogd, AlgoSpec::Cbce(p)) => Box::new(Cbce::new(m.cbce(p), OgdFactory(cfg))?),
            (BlackBoxArg::Ftrl, AlgoSpec::Saol) => Box::new(Saol::new(m.schedule, FtrlFactory(cfg), m.warm_start)?),
            (BlackBoxArg::Ogd, AlgoSpec::Saol) => Box::new(Saol::new(m.schedule, OgdFactory(cfg), m.warm_start)?),
            (BlackBoxArg::Ftrl, AlgoSpec::Atv) => Box::new(Atv::new(m.schedule, FtrlFactory(cfg), m.warm_start)?),
            (BlackBoxArg::Ogd, AlgoSpec::Atv) => Box::new(Atv::new(m.schedule, OgdFactory(cfg), m.warm_start)?),
            (_, AlgoSpec::FixedShare { .. }) => bail!("fixedshare is not an OCO algorithm"),
        })
    }

    pub fn simulate(&self, seed: u64) -> anyhow::Result<Vec<Trace>> {
        let scenario = self.scenario.with_seed(seed);
        let losses = (1..=scenario.horizon)
            .map(|t| scenario.loss(t))
            .collect::<Result<Vec<_>, _>>()?;
        self.algorithms
            .iter()
            .map(|&spec| {
                let mut algo = self.build(spec)?;
                let label = spec.label();
                let losses = run_algorithm(algo.as_mut(), &losses)
                    .with_context(|| format!("{label}, seed {seed}"))?;
                Ok(Trace { seed, algorithm: label, losses })
            })
            .collect()
    }
}

/// Drive `algo` through the loss sequence and return its per-step losses.
pub fn run_algorithm<L: LossFunction>(
    algo: &mut dyn OnlineAlgorithm,
    losses: &[L],
) -> cbce::Result<Vec<f64>> {
    losses
        .iter()
        .map(|f| {
            algo.decide()?;
            algo.feedback(f)
        })
        .collect()
}

/// Simulate all seeds in parallel; traces come back ordered by seed, then
/// by algorithm in configuration order.
pub fn simulate_seeds<F>(seeds: &[u64], simulate: F) -> anyhow::Result<Vec<Trace>>
where
    F: Fn(u64) -> anyhow::Result<Vec<Trace>> + Sync,
{
    let per_seed = seeds.par_iter().map(|&s| simulate(s)).collect::<anyhow::Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}

fn write_csv(path: &std::path::Path, traces: &[Trace]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_traces(BufWriter::new(file), traces)
        .with_context(|| format!("writing {}", path.display()))
}

pub fn run_lea(args: &LeaArgs) -> anyhow::Result<Vec<Trace>> {
    let run = LeaRun::from_args(args)?;
    let traces = simulate_seeds(&args.common.seeds.resolve(), |s| run.simulate(s))?;
    write_csv(&args.common.out, &traces)?;
    Ok(traces)
}

pub fn run_oco(args: &OcoArgs) -> anyhow::Result<Vec<Trace>> {
    let run = OcoRun::from_args(args)?;
    let traces = simulate_seeds(&args.common.seeds.resolve(), |s| run.simulate(s))?;
    write_csv(&args.common.out, &traces)?;
    Ok(traces)
}
