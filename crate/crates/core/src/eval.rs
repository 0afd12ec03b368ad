//! Experiment harness: single-path and fused MSEs for one simulated walk, and
//! the multi-seed reliability study built on top of it.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{equal_weights, random_weights};
use crate::error::{Error, Result};
use crate::learning::{evaluate, reward, train, LearningConfig};
use crate::model::{tracking_error, Scenario, SyncedEstimates, Trajectory, WeightVector};
use crate::rng::{run_seed, stream_rng, Stream};
use crate::sim::{generate_trajectory, EnvironmentSpec};
use crate::trackers::{simulate_aoa_path, simulate_pdr_path, simulate_rssi_path, TrackerNoiseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Aoa,
    Rssi,
    Pdr,
    RlIff,
    Random,
    Equal,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Aoa,
        Method::Rssi,
        Method::Pdr,
        Method::RlIff,
        Method::Random,
        Method::Equal,
    ];
    pub const FUSION: [Method; 3] = [Method::RlIff, Method::Random, Method::Equal];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Aoa => "aoa",
            Method::Rssi => "rssi",
            Method::Pdr => "pdr",
            Method::RlIff => "rl_iff",
            Method::Random => "random",
            Method::Equal => "equal",
        }
    }

    pub fn is_fusion(&self) -> bool {
        Self::FUSION.contains(self)
    }

    /// Fixed selector weights for the single-path methods.
    pub fn selector(&self) -> Option<WeightVector> {
        match self {
            Method::Aoa => Some(WeightVector::aoa_only()),
            Method::Rssi => Some(WeightVector::rssi_only()),
            Method::Pdr => Some(WeightVector::pdr_only()),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

/// Outcome of one method on one walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub env_id: String,
    pub scenario: Scenario,
    pub method: Method,
    /// Square meters.
    pub mse: f64,
    pub weights: Option<WeightVector>,
    /// Cumulative reward per episode (fusion methods only).
    pub episode_rewards: Vec<i64>,
    /// Full-trajectory MSE per episode (fusion methods only).
    pub episode_mses: Vec<f64>,
    pub seed: u64,
}

/// Everything needed to run one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvironmentSpec,
    pub scenario: Scenario,
    pub noise: TrackerNoiseConfig,
    pub learning: LearningConfig,
    /// Evaluation episodes averaged for the random baseline's reported MSE.
    pub test_episodes: usize,
    pub repetitions: usize,
    /// Master seed; repetition `i` runs with `seed + i`.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvironmentSpec::default(),
            scenario: Scenario::Rectangular,
            noise: TrackerNoiseConfig::default(),
            learning: LearningConfig::default(),
            test_episodes: 100,
            repetitions: 20,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.noise.validate()?;
        self.learning.validate()?;
        if self.test_episodes == 0 {
            return Err(Error::invalid("test_episodes must be at least 1"));
        }
        Ok(())
    }

    /// Copy with every component seeded from `seed`.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut cfg = self.clone();
        cfg.seed = seed;
        cfg.noise.seed = seed;
        cfg.learning.seed = seed;
        cfg
    }
}

/// Simulates ground truth plus the three tracker paths.
///
/// The walk and all tracker noise are drawn from `noise.seed`.
pub fn simulate_trajectory(
    env: &EnvironmentSpec,
    scenario: Scenario,
    noise: &TrackerNoiseConfig,
) -> Result<Trajectory> {
    let truth = generate_trajectory(env, scenario, noise.seed)?;
    let rssi = simulate_rssi_path(&truth, noise)?;
    let pdr = simulate_pdr_path(&truth, noise)?;
    let aoa = simulate_aoa_path(&truth, noise)?;
    let records = truth
        .iter()
        .enumerate()
        .map(|(k, p)| SyncedEstimates {
            t: k as u64,
            truth: *p,
            rssi: rssi[k],
            pdr: pdr[k],
            aoa: aoa[k],
        })
        .collect();
    Trajectory::new(env.env_id.clone(), scenario, records)
}

/// Rewards are summed over records `1..n`, the same steps a training episode scores.
fn episode_reward_and_mse(
    trajectory: &Trajectory,
    mut weights: impl FnMut() -> WeightVector,
) -> Result<(i64, f64)> {
    let mut total = 0i64;
    let mut sq = 0.0;
    for (k, e) in trajectory.records().iter().enumerate() {
        let err = tracking_error(e, &weights());
        if k > 0 {
            total += reward(err)? as i64;
        }
        sq += err * err;
    }
    Ok((total, sq / trajectory.len() as f64))
}

fn report(trajectory: &Trajectory, method: Method, mse: f64, weights: Option<WeightVector>, seed: u64) -> RunReport {
    RunReport {
        env_id: trajectory.env_id().to_string(),
        scenario: trajectory.scenario(),
        method,
        mse,
        weights,
        episode_rewards: Vec::new(),
        episode_mses: Vec::new(),
        seed,
    }
}

/// Runs every method on an existing trajectory.
///
/// Reports come back in [`Method::ALL`] order.
pub fn evaluate_methods(
    trajectory: &Trajectory,
    learning: &LearningConfig,
    test_episodes: usize,
) -> Result<Vec<RunReport>> {
    let seed = learning.seed;
    let mut reports = Vec::with_capacity(Method::ALL.len());
    for method in [Method::Aoa, Method::Rssi, Method::Pdr] {
        let w = method.selector().expect("single-path method");
        reports.push(report(trajectory, method, evaluate(trajectory, &w), Some(w), seed));
    }

    reports.push(train(trajectory, learning)?.report);

    let mut rng = stream_rng(seed, Stream::RandomBaseline);
    let mut random = report(trajectory, Method::Random, 0.0, None, seed);
    for _ in 0..learning.episodes {
        let (r, m) = episode_reward_and_mse(trajectory, || random_weights(&mut rng))?;
        random.episode_rewards.push(r);
        random.episode_mses.push(m);
    }
    let mut test_sum = 0.0;
    for _ in 0..test_episodes {
        test_sum += episode_reward_and_mse(trajectory, || random_weights(&mut rng))?.1;
    }
    random.mse = test_sum / test_episodes as f64;
    reports.push(random);

    let w = equal_weights();
    let (r, m) = episode_reward_and_mse(trajectory, || w)?;
    let mut equal = report(trajectory, Method::Equal, m, Some(w), seed);
    equal.episode_rewards = vec![r; learning.episodes];
    equal.episode_mses = vec![m; learning.episodes];
    reports.push(equal);

    Ok(reports)
}

/// Simulates one walk from `cfg.seed` and runs every method on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    let cfg = cfg.with_seed(cfg.seed);
    let trajectory = simulate_trajectory(&cfg.env, cfg.scenario, &cfg.noise)?;
    evaluate_methods(&trajectory, &cfg.learning, cfg.test_episodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseSummary {
    pub mean: f64,
    /// Sample standard deviation (n - 1).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl MseSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Mean absolute episode-to-episode change of cumulative reward over the final
/// 10% of episodes (at least the last two).
pub fn stability(episode_rewards: &[i64]) -> f64 {
    let n = episode_rewards.len();
    if n < 2 {
        return 0.0;
    }
    let tail = n.div_ceil(10).max(2);
    let window = &episode_rewards[n - tail..];
    window
        .windows(2)
        .map(|w| (w[1] - w[0]).unsigned_abs() as f64)
        .sum::<f64>()
        / (tail - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub env_id: String,
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    pub runs: BTreeMap<Method, Vec<RunReport>>,
    pub summary: BTreeMap<Method, MseSummary>,
    /// Mean stability metric across repetitions, fusion methods only.
    pub stability: BTreeMap<Method, f64>,
}

impl ReliabilityReport {
    pub fn repetitions(&self) -> usize {
        self.seeds.len()
    }

    /// Same report with the per-episode traces dropped.
    pub fn without_traces(&self) -> Self {
        let mut out = self.clone();
        for run in out.runs.values_mut().flatten() {
            run.episode_rewards = Vec::new();
            run.episode_mses = Vec::new();
        }
        out
    }
}

/// Repeats [`run_experiment`] over `cfg.seed + i` for `i in 0..repetitions`.
pub fn run_reliability(cfg: &ExperimentConfig, repetitions: usize) -> Result<ReliabilityReport> {
    if repetitions < 2 {
        return Err(Error::invalid(format!(
            "repetitions must be at least 2, got {repetitions}"
        )));
    }
    let seeds: Vec<u64> = (0..repetitions as u64).map(|i| run_seed(cfg.seed, i)).collect();
    run_reliability_with_seeds(cfg, &seeds)
}

/// Reliability study over an explicit seed list. Repetitions run in parallel;
/// the result does not depend on completion order.
pub fn run_reliability_with_seeds(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<ReliabilityReport> {
    if seeds.len() < 2 {
        return Err(Error::invalid(format!(
            "repetitions must be at least 2, got {}",
            seeds.len()
        )));
    }
    cfg.validate()?;
    let per_seed: Vec<Vec<RunReport>> = seeds
        .par_iter()
        .map(|&s| run_experiment(&cfg.with_seed(s)))
        .collect::<Result<_>>()?;

    let mut runs: BTreeMap<Method, Vec<RunReport>> = BTreeMap::new();
    for reports in per_seed {
        for r in reports {
            runs.entry(r.method).or_default().push(r);
        }
    }
    let summary = runs
        .iter()
        .map(|(m, rs)| {
            let mses: Vec<f64> = rs.iter().map(|r| r.mse).collect();
            (*m, MseSummary::from_values(&mses))
        })
        .collect();
    let stability = runs
        .iter()
        .filter(|(m, _)| m.is_fusion())
        .map(|(m, rs)| {
            let s = rs.iter().map(|r| stability(&r.episode_rewards)).sum::<f64>() / rs.len() as f64;
            (*m, s)
        })
        .collect();

    Ok(ReliabilityReport {
        env_id: cfg.env.env_id.clone(),
        scenario: cfg.scenario,
        seeds: seeds.to_vec(),
        runs,
        summary,
        stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default().with_seed(seed);
        cfg.env.n_steps = 60;
        cfg.learning.episodes = 50;
        cfg.test_episodes = 5;
        cfg
    }

    #[test]
    fn stability_metric() {
        assert_eq!(stability(&[]), 0.0);
        assert_eq!(stability(&[5; 100]), 0.0);
        // last 10 of 100: alternating 0/10 -> every change is 10
        let v: Vec<i64> = (0..100).map(|i| if i % 2 == 0 { 0 } else { 10 }).collect();
        assert_eq!(stability(&v), 10.0);
        assert_eq!(stability(&[1, 4]), 3.0);
    }

    #[test]
    fn summary_statistics() {
        let s = MseSummary::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }

    #[test]
    fn experiment_reports_every_method() {
        let reports = run_experiment(&small(3)).unwrap();
        let methods: Vec<Method> = reports.iter().map(|r| r.method).collect();
        assert_eq!(methods, Method::ALL);
        for r in &reports {
            assert!(r.mse >= 0.0);
            if r.method.is_fusion() {
                assert_eq!(r.episode_rewards.len(), 50);
                assert_eq!(r.episode_mses.len(), 50);
            } else {
                assert!(r.episode_rewards.is_empty());
            }
        }
    }

    #[test]
    fn single_path_mse_matches_selector_evaluation() {
        let cfg = small(4);
        let traj = simulate_trajectory(&cfg.env, cfg.scenario, &cfg.noise).unwrap();
        let reports = evaluate_methods(&traj, &cfg.learning, 3).unwrap();
        for r in reports.iter().filter(|r| !r.method.is_fusion()) {
            assert_eq!(r.mse, evaluate(&traj, &r.method.selector().unwrap()));
        }
    }

    #[test]
    fn noiseless_experiment_is_exact() {
        let mut cfg = small(1);
        cfg.noise = TrackerNoiseConfig::noiseless();
        for r in run_experiment(&cfg).unwrap() {
            assert!(r.mse < 1e-20, "{} {}", r.method, r.mse);
        }
    }

    #[test]
    fn reliability_completeness_and_forced_seeds() {
        let cfg = small(10);
        let rep = run_reliability(&cfg, 3).unwrap();
        assert_eq!(rep.seeds, vec![10, 11, 12]);
        for m in Method::ALL {
            let runs = &rep.runs[&m];
            assert_eq!(runs.len(), 3);
            let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
            assert_eq!(seeds, rep.seeds);
        }
        assert_eq!(rep.stability.len(), 3);

        let same = run_reliability_with_seeds(&cfg, &[7, 7]).unwrap();
        for s in same.summary.values() {
            assert_eq!(s.std, 0.0);
        }
        assert!(run_reliability(&cfg, 1).is_err());
    }
}
