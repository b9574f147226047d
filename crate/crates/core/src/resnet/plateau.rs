use super::circuit::parse_generators;
use super::loss::{checked_gradient, decompose_with};
use super::ParamCircuit;
use crate::error::{Error, Result};
use crate::qsim::{expectation_value, prepare_basis_state, GateAction, Observable, Pauli};
use crate::rng::{derive_seed, seeded};
use crate::stats::{mean, variance};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Gradient-variance experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub n_list: Vec<usize>,
    pub samples: usize,
    #[serde(default = "default_sublayers")]
    pub sublayers_w1: usize,
    #[serde(default = "default_sublayers")]
    pub sublayers_w2: usize,
    #[serde(default = "default_generators_w1")]
    pub generators_w1: Vec<String>,
    #[serde(default = "default_generators_w2")]
    pub generators_w2: Vec<String>,
    /// Pauli string on the leading qubits, padded with identities.
    #[serde(default = "default_observable")]
    pub observable: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub residual: bool,
}

fn default_sublayers() -> usize {
    5
}
fn default_generators_w1() -> Vec<String> {
    vec!["XY".into(), "YX".into(), "YZ".into()]
}
fn default_generators_w2() -> Vec<String> {
    vec!["XY".into()]
}
fn default_observable() -> String {
    "YY".into()
}
fn default_true() -> bool {
    true
}

impl PlateauConfig {
    pub fn new(n_list: Vec<usize>, samples: usize, seed: u64, residual: bool) -> Self {
        PlateauConfig {
            n_list,
            samples,
            sublayers_w1: default_sublayers(),
            sublayers_w2: default_sublayers(),
            generators_w1: default_generators_w1(),
            generators_w2: default_generators_w2(),
            observable: default_observable(),
            seed,
            residual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 2 || n > 16) {
            return Err(Error::Config(format!("n_list entry {n} outside [2, 16]")));
        }
        if self.samples < 50 {
            return Err(Error::Config(format!("samples = {} is below the minimum of 50", self.samples)));
        }
        if self.sublayers_w2 == 0 {
            return Err(Error::Config("sublayers_w2 must be at least 1 (the gradient is taken in W2)".into()));
        }
        parse_generators(&self.generators_w1).map_err(|e| Error::Config(format!("generators_w1: {e}")))?;
        let g2 = parse_generators(&self.generators_w2).map_err(|e| Error::Config(format!("generators_w2: {e}")))?;
        if g2.is_empty() {
            return Err(Error::Config("generators_w2 must not be empty".into()));
        }
        for &n in &self.n_list {
            self.observable_for(n)?;
        }
        Ok(())
    }

    fn observable_for(&self, n: usize) -> Result<Observable> {
        let mut ps = Pauli::parse_string(&self.observable).map_err(|e| Error::Config(format!("observable: {e}")))?;
        if ps.len() > n {
            return Err(Error::Config(format!("observable '{}' longer than {n} qubits", self.observable)));
        }
        ps.resize(n, Pauli::I);
        Ok(Observable::Pauli(ps))
    }
}

/// One sampled parameter setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateauSample {
    pub gradient: f64,
    pub nonunitary: f64,
}

/// Aggregated result for one qubit count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateauRow {
    pub n: usize,
    pub variance: f64,
    pub mean_abs_nonunitary: f64,
    pub samples: usize,
    pub seed: u64,
    pub residual: bool,
}

/// Samples `∂L/∂θ` for the first parameter of W2 with every parameter drawn
/// uniformly from `[0, 2π)`, starting from `|0…0⟩`.
///
/// The residual model's loss is the normalized post-selected expectation of
/// `W2 (I + W1)/2`; the plain model's loss is `⟨ψ|W1†W2† O W2W1|ψ⟩`.
pub fn plateau_samples(config: &PlateauConfig, n: usize) -> Result<Vec<PlateauSample>> {
    let g1 = parse_generators(&config.generators_w1)?;
    let g2 = parse_generators(&config.generators_w2)?;
    let obs = config.observable_for(n)?;
    let psi0 = prepare_basis_state(n, 0)?;
    let n_seed = derive_seed(config.seed, n as u64);
    (0..config.samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeded(derive_seed(n_seed, s as u64));
            let c1 = ParamCircuit::random(n, g1.clone(), config.sublayers_w1, &mut rng)?;
            let c2 = ParamCircuit::random(n, g2.clone(), config.sublayers_w2, &mut rng)?;
            let mut w1_psi = psi0.clone();
            c1.apply(&mut w1_psi)?;
            let loss = |t: &[f64]| -> f64 {
                let w2 = GateAction::Sequence(c2.with_params(t.to_vec()).expect("same length").gates());
                if config.residual {
                    decompose_with(&psi0, &w1_psi, &w2, &obs).map(|d| d.total_normalized).unwrap_or(f64::NAN)
                } else {
                    let mut s = w1_psi.clone();
                    s.apply(&w2).and_then(|_| expectation_value(&s, &obs)).unwrap_or(f64::NAN)
                }
            };
            let gradient = checked_gradient(&loss, c2.params(), 0)?;
            let nonunitary = decompose_with(&psi0, &w1_psi, &c2.to_gate(), &obs)?.l_nonunitary;
            Ok(PlateauSample { gradient, nonunitary })
        })
        .collect()
}

pub fn plateau_experiment(config: &PlateauConfig) -> Result<Vec<PlateauRow>> {
    config.validate()?;
    config
        .n_list
        .iter()
        .map(|&n| {
            let samples = plateau_samples(config, n)?;
            let grads: Vec<f64> = samples.iter().map(|s| s.gradient).collect();
            let abs_nu: Vec<f64> = samples.iter().map(|s| s.nonunitary.abs()).collect();
            let variance = variance(&grads);
            if !variance.is_finite() {
                return Err(Error::Numerical(format!("gradient variance at n = {n} is not finite")));
            }
            Ok(PlateauRow {
                n,
                variance,
                mean_abs_nonunitary: mean(&abs_nu),
                samples: config.samples,
                seed: config.seed,
                residual: config.residual,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_positive() {
        let cfg = PlateauConfig::new(vec![2], 200, 5, false);
        let a = plateau_experiment(&cfg).unwrap();
        let b = plateau_experiment(&cfg).unwrap();
        assert!(a[0].variance > 0.0);
        assert_eq!(a[0].variance.to_bits(), b[0].variance.to_bits());
    }

    #[test]
    fn identity_w1_matches_w2_only_model() {
        let mut res = PlateauConfig::new(vec![3], 60, 9, true);
        res.sublayers_w1 = 0;
        let mut plain = res.clone();
        plain.residual = false;
        let a = plateau_experiment(&res).unwrap();
        let b = plateau_experiment(&plain).unwrap();
        assert!((a[0].variance - b[0].variance).abs() < 1e-10);
    }

    #[test]
    fn config_errors() {
        assert!(PlateauConfig::new(vec![1], 100, 0, true).validate().is_err());
        assert!(PlateauConfig::new(vec![2], 10, 0, true).validate().is_err());
        let mut c = PlateauConfig::new(vec![2], 100, 0, true);
        c.observable = "YYY".into();
        assert!(c.validate().is_err());
        let e = serde_json::from_str::<PlateauConfig>(r#"{"samples": 10}"#).unwrap_err();
        assert!(e.to_string().contains("n_list"));
    }
}
