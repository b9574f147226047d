use super::{check_beta, resnet_forward, ResidualLayer};
use crate::error::{Error, Result};
use crate::qsim::{haar_unitary_with, prepare_basis_state, CMatrix, GateAction, Statevector, C64};
use crate::rng::{seeded, Rng};
use serde::{Deserialize, Serialize};

/// `((1−β)I + βW_L) ⋯ ((1−β)I + βW_1) W_0` where `W_l` stacks `2^{l−1}` sublayers
/// and `W_0` is a single sublayer.
#[derive(Clone, Debug)]
pub struct UniformEnsemble {
    pub w0: Vec<GateAction>,
    /// Sublayers of `W_1, …, W_L`.
    pub layers: Vec<Vec<GateAction>>,
    pub beta: f64,
}

impl UniformEnsemble {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn residual_layers(&self) -> Result<Vec<ResidualLayer>> {
        self.layers
            .iter()
            .map(|subs| ResidualLayer::new(GateAction::Sequence(subs.clone()), self.beta))
            .collect()
    }

    /// Dense effective (unnormalized) operator `Σ_S weight_S · U_S`.
    pub fn effective_operator(&self, num_qubits: usize) -> Result<CMatrix> {
        let d = 1 << num_qubits;
        let mut acc = CMatrix::zeros(d, d);
        for t in expand_ensemble(self) {
            acc += t.gate.to_matrix(num_qubits)? * C64::new(t.weight, 0.0);
        }
        Ok(acc)
    }
}

/// One term of the expanded product.
#[derive(Clone, Debug)]
pub struct EnsembleTerm {
    /// Residual layers (1-based) whose unitary branch is taken.
    pub layers: Vec<usize>,
    /// Total sublayer count including `W_0`.
    pub depth: usize,
    pub weight: f64,
    pub gate: GateAction,
}

/// Draws `W_0` and `W_1..W_L` sublayer by sublayer from `sublayer`.
pub fn build_uniform_ensemble(
    l: usize,
    beta: f64,
    sublayer: &mut dyn FnMut(&mut Rng) -> Result<GateAction>,
    seed: u64,
) -> Result<UniformEnsemble> {
    if l < 1 {
        return Err(Error::Domain("ensemble needs at least one residual layer".into()));
    }
    check_beta(beta)?;
    let mut rng = seeded(seed);
    let w0 = vec![sublayer(&mut rng)?];
    let mut layers = Vec::with_capacity(l);
    for i in 1..=l {
        let subs = (0..1usize << (i - 1)).map(|_| sublayer(&mut rng)).collect::<Result<Vec<_>>>()?;
        layers.push(subs);
    }
    Ok(UniformEnsemble { w0, layers, beta })
}

/// All `2^L` products obtained by choosing `I` or `W_l` in every factor.
pub fn expand_ensemble(ens: &UniformEnsemble) -> Vec<EnsembleTerm> {
    let l = ens.depth();
    (0..1usize << l)
        .map(|mask| {
            let mut gates = ens.w0.clone();
            let mut chosen = Vec::new();
            let mut weight = 1.0;
            for (i, subs) in ens.layers.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    gates.extend(subs.iter().cloned());
                    chosen.push(i + 1);
                    weight *= ens.beta;
                } else {
                    weight *= 1.0 - ens.beta;
                }
            }
            EnsembleTerm {
                depth: gates.len(),
                layers: chosen,
                weight,
                gate: GateAction::Sequence(gates),
            }
        })
        .collect()
}

/// `1/π_S` for the ensemble acting on `W_0|0⟩`.
pub fn expected_attempts(ens: &UniformEnsemble, num_qubits: usize) -> Result<f64> {
    let mut psi: Statevector = prepare_basis_state(num_qubits, 0)?;
    psi.apply_all(&ens.w0)?;
    let r = resnet_forward(&ens.residual_layers()?, &psi)?;
    Ok(1.0 / r.pi_total)
}

/// Expected repetitions with Haar-random sublayers on `n` qubits.
pub fn ensemble_expected_attempts(l: usize, beta: f64, n: usize, seed: u64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} must lie strictly between 0 and 1")));
    }
    let qubits: Vec<usize> = (0..n).collect();
    let mut haar = |rng: &mut Rng| GateAction::dense(qubits.clone(), haar_unitary_with(rng, 1 << n));
    let ens = build_uniform_ensemble(l, beta, &mut haar, seed)?;
    expected_attempts(&ens, n)
}

/// Dense operator realized by [`resnet_forward`] on `W_0|j⟩`, column by
/// column, with each post-selected state rescaled by `√π`.
pub fn forward_operator(ens: &UniformEnsemble, num_qubits: usize) -> Result<CMatrix> {
    let d = 1 << num_qubits;
    let layers = ens.residual_layers()?;
    let mut out = CMatrix::zeros(d, d);
    for j in 0..d {
        let mut psi = prepare_basis_state(num_qubits, j)?;
        psi.apply_all(&ens.w0)?;
        let r = resnet_forward(&layers, &psi)?;
        let scale = r.pi_total.sqrt();
        for (i, a) in r.state.amplitudes().iter().enumerate() {
            out[(i, j)] = a * scale;
        }
    }
    Ok(out)
}

/// Settings for checking the ensemble expansion against the forward pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(default = "default_l_list")]
    pub l_list: Vec<usize>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_ensemble_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_l_list() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_beta() -> f64 {
    0.5
}
fn default_ensemble_n() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleRow {
    pub l: usize,
    pub terms: usize,
    pub min_depth: usize,
    pub max_depth: usize,
    /// Every depth in `1..=2^L` occurs exactly once.
    pub depths_complete: bool,
    /// Largest entry difference between the expanded and forward operators.
    pub max_error: f64,
}

impl EnsembleConfig {
    /// Haar sublayers; one row per `L`.
    pub fn run(&self) -> Result<Vec<EnsembleRow>> {
        if self.l_list.is_empty() || self.n == 0 || self.n > 8 {
            return Err(Error::Config("need a non-empty l_list and 1 ≤ n ≤ 8".into()));
        }
        let qubits: Vec<usize> = (0..self.n).collect();
        let mut haar = |rng: &mut Rng| GateAction::dense(qubits.clone(), haar_unitary_with(rng, 1 << self.n));
        self.l_list
            .iter()
            .map(|&l| {
                let ens = build_uniform_ensemble(l, self.beta, &mut haar, self.seed)?;
                let terms = expand_ensemble(&ens);
                let mut depths: Vec<usize> = terms.iter().map(|t| t.depth).collect();
                depths.sort_unstable();
                let diff = ens.effective_operator(self.n)? - forward_operator(&ens, self.n)?;
                Ok(EnsembleRow {
                    l,
                    terms: terms.len(),
                    min_depth: depths[0],
                    max_depth: depths[depths.len() - 1],
                    depths_complete: depths == (1..=1usize << l).collect::<Vec<_>>(),
                    max_error: diff.iter().map(|z| z.norm()).fold(0.0, f64::max),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptsConfig {
    pub l_list: Vec<usize>,
    pub betas: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttemptsRow {
    pub l: usize,
    pub beta: f64,
    pub expected_attempts: f64,
    pub n: usize,
    pub seed: u64,
}

impl AttemptsConfig {
    pub fn run(&self) -> Result<Vec<AttemptsRow>> {
        if self.l_list.is_empty() || self.betas.is_empty() {
            return Err(Error::Config("l_list and betas must be non-empty".into()));
        }
        if self.n == 0 || self.n > 12 {
            return Err(Error::Config(format!("n = {} outside [1, 12]", self.n)));
        }
        let mut rows = Vec::new();
        for &l in &self.l_list {
            for &beta in &self.betas {
                let expected_attempts = ensemble_expected_attempts(l, beta, self.n, self.seed)?;
                rows.push(AttemptsRow {
                    l,
                    beta,
                    expected_attempts,
                    n: self.n,
                    seed: self.seed,
                });
            }
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resnet::{beta_lower_bound, ParamCircuit};
    use crate::qsim::Statevector;

    fn circuit_factory(n: usize) -> impl FnMut(&mut Rng) -> Result<GateAction> {
        move |rng: &mut Rng| {
            let c = ParamCircuit::random(n, vec!["XY".parse()?, "YZ".parse()?], 1, rng)?;
            Ok(c.to_gate())
        }
    }

    #[test]
    fn depths_cover_range() {
        for l in 1..=3 {
            let ens = build_uniform_ensemble(l, 0.5, &mut circuit_factory(2), 1).unwrap();
            let mut depths: Vec<usize> = expand_ensemble(&ens)
                .iter()
                .map(|t| 1 + t.layers.iter().map(|&i| 1 << (i - 1)).sum::<usize>())
                .collect();
            depths.sort_unstable();
            assert_eq!(depths, (1..=1 << l).collect::<Vec<_>>());
            let mut counted: Vec<usize> = expand_ensemble(&ens).iter().map(|t| t.depth).collect();
            counted.sort_unstable();
            assert_eq!(counted, depths);
        }
    }

    #[test]
    fn expansion_matches_forward() {
        let n = 3;
        let mut rng = crate::rng::seeded(8);
        for l in 1..=3 {
            let ens = build_uniform_ensemble(l, 0.5, &mut circuit_factory(n), l as u64).unwrap();
            let a = ens.effective_operator(n).unwrap();
            let psi = Statevector::new(n, haar_unitary_with(&mut rng, 8).column(0).iter().cloned().collect()).unwrap();
            let mut start = psi.clone();
            start.apply_all(&ens.w0).unwrap();
            let r = resnet_forward(&ens.residual_layers().unwrap(), &start).unwrap();
            let direct = &a * nalgebra::DVector::from_column_slice(psi.amplitudes());
            for (x, y) in direct.iter().zip(r.state.amplitudes()) {
                assert!((x - y * r.pi_total.sqrt()).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn trivial_limits() {
        let t = ensemble_expected_attempts(3, 1.0 - 1e-9, 3, 2).unwrap();
        assert!((t - 1.0).abs() < 1e-6);
        let mut id = |_: &mut Rng| Ok(GateAction::identity());
        let ens = build_uniform_ensemble(3, 0.5, &mut id, 0).unwrap();
        assert!((expected_attempts(&ens, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn attempts_ordering_in_beta() {
        let betas = [0.5, 0.6, 0.7, 0.8, 0.9];
        let vals: Vec<f64> = betas.iter().map(|&b| ensemble_expected_attempts(3, b, 3, 11).unwrap()).collect();
        let bound: f64 = (0..3).map(|_| beta_lower_bound(0.6).unwrap()).product();
        assert!(vals[1] >= 1.0 && vals[1] <= 1.0 / bound);
        assert!(vals.iter().skip(1).all(|&v| v <= vals[0]));
        let inversions = vals.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(inversions <= 1, "{vals:?}");
    }
}
