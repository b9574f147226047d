use super::{compute_kernel, effective_dimension, svm_train_predict, SvmConfig};
use crate::encodings::{iqp_encode_cloud, normalize_to_angle_range, Dataset};
use crate::error::{Error, Result};
use crate::groupproj::{
    amplify_symmetric_subspace, direct_projection, symmetric_group, FiniteGroupData, ProjectionWeights, RepMap,
};
use crate::qsim::Statevector;
use crate::rng::derive_seed;
use crate::stats::{mean, std_dev};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSweepConfig {
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub svm: SvmConfig,
    #[serde(default = "default_fraction")]
    pub variance_fraction: f64,
    /// Samples per repetition and α whose direct projection is cross-checked
    /// against the LCU program.
    #[serde(default = "default_lcu_checks")]
    pub lcu_checks: usize,
}

fn default_alphas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
fn default_repetitions() -> usize {
    10
}
fn default_samples() -> usize {
    100
}
fn default_points() -> usize {
    3
}
fn default_fraction() -> f64 {
    0.95
}
fn default_lcu_checks() -> usize {
    5
}

impl Default for AlphaSweepConfig {
    fn default() -> Self {
        AlphaSweepConfig {
            alphas: default_alphas(),
            repetitions: default_repetitions(),
            samples: default_samples(),
            points: default_points(),
            seed: 0,
            svm: SvmConfig::default(),
            variance_fraction: default_fraction(),
            lcu_checks: default_lcu_checks(),
        }
    }
}

impl AlphaSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Config("alphas must be a nonempty list inside [0, 1]".into()));
        }
        if self.repetitions == 0 || self.samples < 5 {
            return Err(Error::Config("need repetitions ≥ 1 and samples ≥ 5".into()));
        }
        if !(2..=4).contains(&self.points) {
            return Err(Error::Config(format!("points must be 2..=4, got {}", self.points)));
        }
        Ok(())
    }
}

/// Outcome of one repetition at one α.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaTrial {
    pub alpha: f64,
    pub repetition: usize,
    pub accuracy: f64,
    pub effective_dimension: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub mean_accuracy: f64,
    pub std: f64,
    pub mean_effective_dimension: f64,
    pub repetitions: usize,
    pub all_converged: bool,
}

/// `(a₀P̂₀ + (1−α)Σ_{r>0} P̂_r)|ψ⟩` normalized, by direct summation. At
/// α = 0 the operator is the identity and `psi` is returned as is.
pub fn amplify_direct(psi: &Statevector, alpha: f64, group: &FiniteGroupData, rep: &RepMap) -> Result<Statevector> {
    if alpha == 0.0 {
        return Ok(psi.clone());
    }
    let weights = ProjectionWeights::symmetric_amplification(group.num_irreps(), alpha)?;
    direct_projection(group, rep, &weights, psi)?.0.normalized()
}

/// Kernel, SVM test accuracy and effective dimension for one set of states.
pub fn evaluate_states(
    states: &[Statevector],
    dataset: &Dataset,
    config: &AlphaSweepConfig,
) -> Result<(f64, usize, bool)> {
    let kernel = compute_kernel(states)?;
    let svm = svm_train_predict(&kernel, &dataset.labels, &dataset.train, &dataset.test, &config.svm)?;
    let dim = effective_dimension(states, config.variance_fraction)?;
    Ok((svm.accuracy, dim, svm.converged))
}

/// The sphere/torus dataset of one repetition and its IQP-encoded states.
pub fn repetition_data(config: &AlphaSweepConfig, repetition: usize) -> Result<(Dataset, Vec<Statevector>)> {
    let raw = Dataset::shapes(config.samples, config.points, derive_seed(config.seed, repetition as u64))?;
    let data = normalize_to_angle_range(&raw)?;
    let states = data.clouds.iter().map(iqp_encode_cloud).collect::<Result<Vec<_>>>()?;
    Ok((data, states))
}

/// Every (repetition, α) trial, ordered by repetition then α.
pub fn alpha_sweep_trials(config: &AlphaSweepConfig) -> Result<Vec<AlphaTrial>> {
    config.validate()?;
    let group = symmetric_group(config.points)?;
    let rep = RepMap::qudit_permutation(&group, 2)?;
    let per_rep = (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            let (data, states) = repetition_data(config, r)?;
            config
                .alphas
                .par_iter()
                .map(|&alpha| {
                    let amplified = states
                        .iter()
                        .map(|s| amplify_direct(s, alpha, &group, &rep))
                        .collect::<Result<Vec<_>>>()?;
                    if alpha > 0.0 {
                        for (s, direct) in states.iter().zip(&amplified).take(config.lcu_checks) {
                            let (lcu, _) = amplify_symmetric_subspace(s, alpha, &group, &rep)?;
                            let err = lcu.max_abs_diff(direct)?;
                            if err > 1e-10 {
                                return Err(Error::Numerical(format!(
                                    "LCU and direct amplification differ by {err:e} at alpha {alpha}"
                                )));
                            }
                        }
                    }
                    let (accuracy, effective_dimension, converged) = evaluate_states(&amplified, &data, config)?;
                    Ok(AlphaTrial { alpha, repetition: r, accuracy, effective_dimension, converged })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_rep.into_iter().flatten().collect())
}

/// Per-α mean test accuracy, its standard deviation and the mean effective
/// dimension over repetitions.
pub fn alpha_sweep_experiment(config: &AlphaSweepConfig) -> Result<Vec<AlphaRow>> {
    let trials = alpha_sweep_trials(config)?;
    Ok(summarize(config, &trials))
}

pub fn summarize(config: &AlphaSweepConfig, trials: &[AlphaTrial]) -> Vec<AlphaRow> {
    config
        .alphas
        .iter()
        .map(|&alpha| {
            let at: Vec<&AlphaTrial> = trials.iter().filter(|t| t.alpha == alpha).collect();
            let acc: Vec<f64> = at.iter().map(|t| t.accuracy).collect();
            let dims: Vec<f64> = at.iter().map(|t| t.effective_dimension as f64).collect();
            AlphaRow {
                alpha,
                mean_accuracy: mean(&acc),
                std: if acc.len() > 1 { std_dev(&acc) } else { 0.0 },
                mean_effective_dimension: mean(&dims),
                repetitions: at.len(),
                all_converged: at.iter().all(|t| t.converged),
            }
        })
        .collect()
}
