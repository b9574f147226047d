//! Residual (skip-connection) layers realised with a one-ancilla LCU, their
//! success probabilities, the three-term loss decomposition, gradient-variance
//! experiments and the layer ensembles built from them.

mod circuit;
mod ensemble;
mod input_skip;
mod loss;
mod plateau;

pub use circuit::{Generator, ParamCircuit};
pub use ensemble::{
    build_uniform_ensemble, ensemble_expected_attempts, expand_ensemble, expected_attempts, forward_operator,
    AttemptsConfig, AttemptsRow, EnsembleConfig, EnsembleRow, EnsembleTerm, UniformEnsemble,
};
pub use input_skip::{input_skip_forward, input_skip_oracle, InputSkipSpec};
pub use loss::{loss_decomposition, loss_gradient, shift_rule_gradient, checked_gradient, LossDecomposition};
pub use plateau::{plateau_experiment, PlateauConfig, PlateauRow, PlateauSample};

use crate::error::{Error, Result};
use crate::lcu::{run_lcu, LcuProgram};
use crate::qsim::{inner_product, CMatrix, GateAction, Statevector, C64};

/// `W` with residual strength `β`: the layer maps `ψ` to the normalization of
/// `(1−β)ψ + βWψ`.
#[derive(Clone, Debug)]
pub struct ResidualLayer {
    pub unitary: GateAction,
    beta: f64,
}

impl ResidualLayer {
    pub fn new(unitary: GateAction, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(ResidualLayer { unitary, beta })
    }

    pub fn from_circuit(circuit: &ParamCircuit, beta: f64) -> Result<Self> {
        Self::new(circuit.to_gate(), beta)
    }

    /// Dense unitary acting on all target qubits.
    pub fn from_matrix(matrix: CMatrix, beta: f64) -> Result<Self> {
        let n = matrix.nrows().trailing_zeros() as usize;
        Self::new(GateAction::dense((0..n).collect(), matrix)?, beta)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// One-ancilla program with prep amplitudes `(√(1−β), √β)`.
    pub fn lcu_program(&self) -> Result<LcuProgram> {
        let amps = [C64::new((1.0 - self.beta).sqrt(), 0.0), C64::new(self.beta.sqrt(), 0.0)];
        LcuProgram::from_amplitudes(&amps, vec![None, Some(self.unitary.clone())])
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta = {beta} outside [0, 1]")));
    }
    Ok(())
}

/// Runs one residual layer through the LCU simulator.
pub fn residual_step(state: &Statevector, layer: &ResidualLayer) -> Result<(Statevector, f64)> {
    let out = run_lcu(&layer.lcu_program()?, state)?;
    Ok((out.post_state, out.pi_success))
}

/// Closed form `1 − 2β(1−β)(1 − Re⟨ψ|W|ψ⟩)`.
pub fn residual_probability(state: &Statevector, layer: &ResidualLayer) -> Result<f64> {
    let mut w_psi = state.clone();
    w_psi.apply(&layer.unitary)?;
    let re = inner_product(state, &w_psi)?.re;
    let b = layer.beta;
    Ok(1.0 - 2.0 * b * (1.0 - b) * (1.0 - re))
}

/// `1 − 4β(1−β)`, the worst case over states and unitaries.
pub fn beta_lower_bound(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(1.0 - 4.0 * beta * (1.0 - beta))
}

#[derive(Clone, Debug)]
pub struct ForwardResult {
    pub state: Statevector,
    pub pi_total: f64,
    pub per_layer: Vec<f64>,
}

/// Applies residual layers in order; the overall success probability is the
/// product of the per-layer probabilities.
pub fn resnet_forward(layers: &[ResidualLayer], psi0: &Statevector) -> Result<ForwardResult> {
    let mut state = psi0.clone();
    let mut per_layer = Vec::with_capacity(layers.len());
    for (i, layer) in layers.iter().enumerate() {
        let (next, p) = residual_step(&state, layer).map_err(|e| e.with_context(format!("layer {i}")))?;
        state = next;
        per_layer.push(p);
    }
    Ok(ForwardResult {
        state,
        pi_total: per_layer.iter().product(),
        per_layer,
    })
}
