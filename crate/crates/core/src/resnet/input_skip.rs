use crate::error::{Error, Result};
use crate::lcu::{run_lcu, LcuProgram};
use crate::qsim::{GateAction, Statevector, C64};

/// Layers `W_1..W_L` with a skip connection from the input to every layer,
/// weighted by `γ_f`.
#[derive(Clone, Debug)]
pub struct InputSkipSpec {
    pub layers: Vec<GateAction>,
    pub gammas: Vec<C64>,
}

impl InputSkipSpec {
    pub fn new(layers: Vec<GateAction>, gammas: Vec<C64>) -> Result<Self> {
        if layers.is_empty() || layers.len() != gammas.len() {
            return Err(Error::Domain(format!("{} layers with {} gammas", layers.len(), gammas.len())));
        }
        let norm: f64 = gammas.iter().map(|g| g.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("sum of |gamma|^2 is {norm}, expected 1")));
        }
        Ok(InputSkipSpec { layers, gammas })
    }

    /// `W_L ⋯ W_f` (1-based `f`).
    fn suffix(&self, f: usize) -> GateAction {
        GateAction::Sequence(self.layers[f - 1..].to_vec())
    }

    /// Program on `⌈log₂ L⌉` ancillas whose branch `f−1` applies `W_L ⋯ W_f`.
    pub fn lcu_program(&self) -> Result<LcuProgram> {
        let l = self.layers.len();
        let k = l.next_power_of_two().trailing_zeros() as usize;
        let mut amps = self.gammas.clone();
        amps.resize(1 << k, C64::new(0.0, 0.0));
        let selects = (1..=l).map(|f| Some(self.suffix(f))).collect();
        LcuProgram::from_amplitudes(&amps, selects)
    }
}

/// Normalized `Σ_f |γ_f|² W_L⋯W_f |ψ0⟩` and its success probability.
pub fn input_skip_forward(spec: &InputSkipSpec, psi0: &Statevector) -> Result<(Statevector, f64)> {
    let out = run_lcu(&spec.lcu_program()?, psi0)?;
    Ok((out.post_state, out.pi_success))
}

/// Direct summation of the same operator (unnormalized).
pub fn input_skip_oracle(spec: &InputSkipSpec, psi0: &Statevector) -> Result<Statevector> {
    let mut acc = Statevector::zero(psi0.num_qubits());
    for (f, g) in spec.gammas.iter().enumerate() {
        let mut s = psi0.clone();
        s.apply(&spec.suffix(f + 1))?;
        acc.axpy(C64::new(g.norm_sqr(), 0.0), &s)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{c64, gates, haar_unitary_with, prepare_basis_state};
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn single_layer() {
        let spec = InputSkipSpec::new(vec![gates::h(0)], vec![c64(0.0, 1.0)]).unwrap();
        let (s, p) = input_skip_forward(&spec, &prepare_basis_state(1, 0).unwrap()).unwrap();
        let plus = Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(s.max_abs_diff(&plus).unwrap() < 1e-12);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_layers_x_then_identity() {
        let g = c64(FRAC_1_SQRT_2, 0.0);
        let spec = InputSkipSpec::new(vec![gates::x(0), GateAction::identity()], vec![g, g]).unwrap();
        let (s, p) = input_skip_forward(&spec, &prepare_basis_state(1, 0).unwrap()).unwrap();
        let plus = Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(s.max_abs_diff(&plus).unwrap() < 1e-12);
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn worked_two_gate_case() {
        // W2 (I + W1)/2 with W1 = X: π = (1 + Re⟨0|X|0⟩)/2
        let g = c64(FRAC_1_SQRT_2, 0.0);
        let spec = InputSkipSpec::new(vec![gates::x(0), gates::h(0)], vec![g, g]).unwrap();
        let (_, p) = input_skip_forward(&spec, &prepare_basis_state(1, 0).unwrap()).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn matches_oracle_for_random_specs() {
        let mut rng = crate::rng::seeded(21);
        for l in 1..=5 {
            let layers: Vec<GateAction> = (0..l)
                .map(|_| GateAction::dense(vec![0, 1], haar_unitary_with(&mut rng, 4)).unwrap())
                .collect();
            let mut gammas: Vec<C64> = (0..l).map(|_| c64(rng.gen(), rng.gen())).collect();
            let norm = gammas.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
            gammas.iter_mut().for_each(|g| *g /= norm);
            let spec = InputSkipSpec::new(layers, gammas).unwrap();
            let psi = prepare_basis_state(2, 1).unwrap();
            let (s, p) = input_skip_forward(&spec, &psi).unwrap();
            let o = input_skip_oracle(&spec, &psi).unwrap();
            assert!((o.norm_sqr() - p).abs() < 1e-10);
            assert!(s.max_abs_diff(&o.normalized().unwrap()).unwrap() < 1e-10);
        }
    }

    #[test]
    fn rejects_unnormalized_gammas() {
        assert!(InputSkipSpec::new(vec![gates::x(0)], vec![c64(0.5, 0.0)]).is_err());
        assert!(InputSkipSpec::new(vec![gates::x(0)], vec![]).is_err());
    }
}
