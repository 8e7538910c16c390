//! Experiment orchestration: per-trial simulation of the three dynamics,
//! drop-down and local-mixing detection, statistical summaries and
//! deterministic CSV/JSON output.

use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::deg2::{self, Deg2Graph, Deg2Mass};
use crate::error::{Error, Result};
use crate::graph::{dropdown_check, ComponentForest};
use crate::limits;
use crate::perm::{
    sample_cross_cycle_transposition, sample_uniform_transposition, CyclePermutation,
};
use crate::rng::derive_rng_stream;
use crate::stats::{ks_distance, median, quantile};
use crate::walks::{init_mass, tv_to_uniform, tv_to_uniform_on_component};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    Cdp,
    Cfdp,
    Deg2,
}

impl Dynamics {
    pub fn default_horizon(self, n: usize) -> f64 {
        match self {
            Dynamics::Cdp => (n - 1) as f64 / n as f64,
            Dynamics::Cfdp | Dynamics::Deg2 => 3.0,
        }
    }
}

impl std::str::FromStr for Dynamics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cdp" => Ok(Dynamics::Cdp),
            "cfdp" => Ok(Dynamics::Cfdp),
            "deg2" => Ok(Dynamics::Deg2),
            other => Err(Error::Config(format!("unknown dynamics '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub dynamics: Dynamics,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Horizon in units of n: the run length is round(horizon * n) steps.
    pub horizon: f64,
    /// Spacing of the scaled-time sampling grid s = t/n.
    pub grid_step: f64,
    /// Drop-down gate exponent: the gate is t > n(1 + n^eps_exponent)/2.
    pub eps_exponent: f64,
    /// Walk start: fixed vertex (0-indexed) or drawn uniformly per trial.
    pub pin_v0: Option<usize>,
    /// Threshold for the local (on-giant) mixing time diagnostic.
    pub local_eps: f64,
}

impl ExperimentConfig {
    pub fn new(dynamics: Dynamics, n: usize, trials: usize, master_seed: u64) -> Self {
        Self {
            dynamics,
            n,
            trials,
            master_seed,
            horizon: dynamics.default_horizon(n),
            grid_step: 0.05,
            eps_exponent: -0.25,
            pin_v0: None,
            local_eps: 0.05,
        }
    }

    pub fn steps(&self) -> u64 {
        (self.horizon * self.n as f64).round() as u64
    }

    /// Grid of (s, t) sample points: multiples of grid_step up to horizon.
    pub fn sample_grid(&self) -> Vec<(f64, u64)> {
        let count = (self.horizon / self.grid_step + 1e-9).floor() as usize;
        (1..=count)
            .map(|k| {
                let s = k as f64 * self.grid_step;
                (s, (s * self.n as f64).round() as u64)
            })
            .collect()
    }

    pub fn eps_n(&self) -> f64 {
        (self.n as f64).powf(self.eps_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSize { min: 2, got: self.n });
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(self.horizon > 0.0) || !(self.grid_step > 0.0) {
            return Err(Error::Config("horizon and grid step must be positive".into()));
        }
        if self.dynamics == Dynamics::Cdp && self.steps() > self.n as u64 - 1 {
            return Err(Error::Config(format!(
                "merge-only dynamics exhaust after n-1 steps; horizon {} exceeds that",
                self.horizon
            )));
        }
        if self.sample_grid().is_empty() {
            return Err(Error::Config("sampling grid is empty within the horizon".into()));
        }
        if let Some(v0) = self.pin_v0 {
            if v0 >= self.n {
                return Err(Error::OutOfRange { element: v0, n: self.n });
            }
        }
        if !(self.local_eps > 0.0 && self.local_eps < 1.0) {
            return Err(Error::Config("local mixing threshold must be in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SamplePoint {
    pub t: u64,
    pub s: f64,
    pub tv: f64,
    pub cmax_frac: f64,
    pub largest_cycle_frac: f64,
    pub support_size: usize,
    pub dropped: bool,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub v0: usize,
    pub dropdown_time: Option<u64>,
    pub local_mixing_time: Option<u64>,
    pub samples: Vec<SamplePoint>,
}

fn run_trial_perm(config: &ExperimentConfig, trial: usize) -> Result<TrialRecord> {
    let mut rng = derive_rng_stream(config.master_seed, trial as u64);
    let n = config.n;
    let v0 = match config.pin_v0 {
        Some(v) => v,
        None => rand::Rng::random_range(&mut rng, 0..n),
    };
    let mut perm = CyclePermutation::identity(n)?;
    let mut mass = init_mass(&perm, v0)?;
    let mut forest = ComponentForest::new(n)?;
    let eps_n = config.eps_n();
    let grid = config.sample_grid();
    let mut samples = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;
    let mut dropdown_time = None;
    let mut local_mixing_time = None;
    for t in 1..=config.steps() {
        let (a, b) = match config.dynamics {
            Dynamics::Cdp => sample_cross_cycle_transposition(&mut rng, &perm)?,
            Dynamics::Cfdp => sample_uniform_transposition(&mut rng, n)?,
            Dynamics::Deg2 => unreachable!("rewiring dynamics use their own loop"),
        };
        let effect = perm.apply_transposition(a, b)?;
        mass.update_on_effect(&effect, &perm)?;
        forest.add_edge(a, b)?;
        if dropdown_time.is_none() && dropdown_check(&mass, &perm, &mut forest, eps_n) {
            dropdown_time = Some(t);
        }
        if local_mixing_time.is_none() {
            if let Some(td) = dropdown_time {
                if t > td {
                    let (root, size) = forest.largest();
                    let local = tv_to_uniform_on_component(
                        &mass,
                        &perm,
                        |rep| forest.find(rep) == root,
                        size,
                    )?;
                    if local < config.local_eps {
                        local_mixing_time = Some(t);
                    }
                }
            }
        }
        while grid_idx < grid.len() && grid[grid_idx].1 == t {
            let (s, _) = grid[grid_idx];
            samples.push(SamplePoint {
                t,
                s,
                tv: tv_to_uniform(&mass, &perm),
                cmax_frac: forest.largest().1 as f64 / n as f64,
                largest_cycle_frac: perm.largest_cycle().1 as f64 / n as f64,
                support_size: mass.support_size(&perm),
                dropped: dropdown_time.is_some(),
            });
            grid_idx += 1;
        }
    }
    Ok(TrialRecord { trial, v0, dropdown_time, local_mixing_time, samples })
}

fn run_trial_deg2(config: &ExperimentConfig, trial: usize) -> Result<TrialRecord> {
    let mut rng = derive_rng_stream(config.master_seed, trial as u64);
    let n = config.n;
    let v0 = match config.pin_v0 {
        Some(v) => v,
        None => rand::Rng::random_range(&mut rng, 0..n),
    };
    let mut graph = Deg2Graph::init_self_loops(n)?;
    let mut mass = Deg2Mass::point_mass(&graph, v0)?;
    let mut forest = ComponentForest::new(n)?;
    let eps_n = config.eps_n();
    let grid = config.sample_grid();
    let mut samples = Vec::with_capacity(grid.len());
    let mut grid_idx = 0usize;
    let mut dropdown_time = None;
    let mut local_mixing_time = None;
    for t in 1..=config.steps() {
        let outcome = graph.rewire_step(&mut rng);
        mass.update_on_effect(&outcome.effect);
        let (x, y) = deg2::associated_edge(outcome.endpoints);
        forest.add_edge(x, y)?;
        if dropdown_time.is_none()
            && deg2::deg2_dropdown_check(&mass, &graph, &mut forest, eps_n)
        {
            dropdown_time = Some(t);
        }
        if local_mixing_time.is_none() {
            if let Some(td) = dropdown_time {
                if t > td {
                    let (root, size) = forest.largest();
                    let m = size as f64;
                    let local: f64 = mass
                        .iter()
                        .map(|(label, mval)| {
                            let info = graph.comp_info(label).expect("live label");
                            if forest.find(info.rep as usize) == root {
                                (mval - info.size as f64 / m).max(0.0)
                            } else {
                                mval
                            }
                        })
                        .sum();
                    if local < config.local_eps {
                        local_mixing_time = Some(t);
                    }
                }
            }
        }
        while grid_idx < grid.len() && grid[grid_idx].1 == t {
            let (s, _) = grid[grid_idx];
            samples.push(SamplePoint {
                t,
                s,
                tv: mass.tv_to_uniform(&graph),
                cmax_frac: forest.largest().1 as f64 / n as f64,
                largest_cycle_frac: graph.largest_component().1 as f64 / n as f64,
                support_size: mass.support_size(&graph),
                dropped: dropdown_time.is_some(),
            });
            grid_idx += 1;
        }
    }
    Ok(TrialRecord { trial, v0, dropdown_time, local_mixing_time, samples })
}

pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialRecord> {
    match config.dynamics {
        Dynamics::Cdp | Dynamics::Cfdp => run_trial_perm(config, trial),
        Dynamics::Deg2 => run_trial_deg2(config, trial),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridDeviation {
    pub s: f64,
    pub median_abs_dev: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalMixingSummary {
    pub count: usize,
    pub q25: Option<f64>,
    pub q50: Option<f64>,
    pub q75: Option<f64>,
    pub q90: Option<f64>,
    pub frac_within_log2_window: Option<f64>,
    pub window: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub dropdown_samples: Vec<f64>,
    pub ks_vs_limit: Option<f64>,
    pub profile_deviation_pre: Vec<GridDeviation>,
    pub profile_deviation_post: Vec<GridDeviation>,
    pub local_mixing_gap_quantiles: LocalMixingSummary,
}

/// Per grid point, median over trials of the distance between the observed
/// tv and its limit target: 1 before the trial's drop-down, 1 - limit(s)
/// after. Trials are bucketed by their own drop-down time at each s.
pub fn compare_profile<F: Fn(f64) -> f64>(
    records: &[TrialRecord],
    limit_fn: F,
    grid: &[(f64, u64)],
) -> Result<(Vec<GridDeviation>, Vec<GridDeviation>)> {
    for r in records {
        if r.samples.len() != grid.len() {
            return Err(Error::Config(format!(
                "trial {} sampled {} grid points, expected {}",
                r.trial,
                r.samples.len(),
                grid.len()
            )));
        }
    }
    let mut pre = Vec::with_capacity(grid.len());
    let mut post = Vec::with_capacity(grid.len());
    for (idx, &(s, t)) in grid.iter().enumerate() {
        let mut pre_devs = Vec::new();
        let mut post_devs = Vec::new();
        for r in records {
            let sample = &r.samples[idx];
            let after_drop = matches!(r.dropdown_time, Some(td) if t > td);
            if after_drop {
                post_devs.push((sample.tv - (1.0 - limit_fn(s))).abs());
            } else {
                pre_devs.push((sample.tv - 1.0).abs());
            }
        }
        pre.push(GridDeviation {
            s,
            median_abs_dev: median(&pre_devs).ok(),
            trials: pre_devs.len(),
        });
        post.push(GridDeviation {
            s,
            median_abs_dev: median(&post_devs).ok(),
            trials: post_devs.len(),
        });
    }
    Ok((pre, post))
}

/// Limit CDF of the scaled drop-down time for each dynamics.
pub fn dropdown_limit_cdf(dynamics: Dynamics) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        if x <= 0.5 {
            return 0.0;
        }
        match dynamics {
            Dynamics::Cdp => limits::eta(x.min(1.0 - 1e-12)).unwrap_or(0.0),
            Dynamics::Cfdp | Dynamics::Deg2 => limits::zeta(x).unwrap_or(0.0),
        }
    }
}

/// Limit curve the post-drop tv deviates from: tv -> 1 - limit(s).
pub fn profile_limit(dynamics: Dynamics) -> impl Fn(f64) -> f64 {
    dropdown_limit_cdf(dynamics)
}

pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Result<Summary> {
    let n = config.n as f64;
    let dropdown_samples: Vec<f64> = records
        .iter()
        .filter_map(|r| r.dropdown_time.map(|t| t as f64 / n))
        .collect();
    let ks_vs_limit = if dropdown_samples.is_empty() {
        None
    } else {
        Some(ks_distance(
            &dropdown_samples,
            records.len(),
            dropdown_limit_cdf(config.dynamics),
        )?)
    };
    let grid = config.sample_grid();
    let (profile_deviation_pre, profile_deviation_post) =
        compare_profile(records, profile_limit(config.dynamics), &grid)?;

    let window = (n.ln() * n.ln()).ceil() as u64;
    let gate = (0.5 + 0.05) * n;
    let gaps: Vec<f64> = records
        .iter()
        .filter(|r| matches!(r.dropdown_time, Some(td) if td as f64 >= gate))
        .filter_map(|r| match (r.dropdown_time, r.local_mixing_time) {
            (Some(td), Some(tl)) => Some((tl - td) as f64),
            _ => None,
        })
        .collect();
    let local_mixing_gap_quantiles = LocalMixingSummary {
        count: gaps.len(),
        q25: quantile(&gaps, 0.25).ok(),
        q50: quantile(&gaps, 0.50).ok(),
        q75: quantile(&gaps, 0.75).ok(),
        q90: quantile(&gaps, 0.90).ok(),
        frac_within_log2_window: if gaps.is_empty() {
            None
        } else {
            Some(gaps.iter().filter(|&&g| g <= window as f64).count() as f64 / gaps.len() as f64)
        },
        window,
    };
    Ok(Summary {
        config: config.clone(),
        dropdown_samples,
        ks_vs_limit,
        profile_deviation_pre,
        profile_deviation_post,
        local_mixing_gap_quantiles,
    })
}

/// Run all trials (in parallel, in trial order) and summarize.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, Summary)> {
    config.validate()?;
    let records: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<_>>()?;
    let summary = summarize(config, &records)?;
    Ok((records, summary))
}

fn fmt9(x: f64) -> String {
    format!("{:.8e}", x)
}

/// Trial CSV: one row per sampled grid point, trial ids and v0 1-indexed,
/// floats with 9 significant digits.
pub fn write_trials_csv<W: std::io::Write>(records: &[TrialRecord], out: &mut W) -> Result<()> {
    writeln!(
        out,
        "trial,v0,t,s,tv,cmax_frac,largest_cycle_frac,support_size,dropped"
    )?;
    for r in records {
        for s in &r.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.trial + 1,
                r.v0 + 1,
                s.t,
                fmt9(s.s),
                fmt9(s.tv),
                fmt9(s.cmax_frac),
                fmt9(s.largest_cycle_frac),
                s.support_size,
                u8::from(s.dropped)
            )?;
        }
    }
    Ok(())
}

pub fn write_outputs(
    records: &[TrialRecord],
    summary: &Summary,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = std::io::BufWriter::new(std::fs::File::create(dir.join("trials.csv"))?);
    write_trials_csv(records, &mut csv)?;
    csv.flush()?;
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::Config(format!("summary serialization failed: {e}")))?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}
