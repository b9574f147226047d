//! Linear combination of unitaries: prepare an ancilla register, apply a
//! unitary selected by the ancilla basis state, unprepare, and post-select.
//!
//! The ancilla register always occupies the most significant qubits of the
//! joint state, followed by the target register.

use crate::error::{Error, Result};
use crate::qsim::{
    complete_to_unitary, post_select_register, prepare_basis_state, CVector, GateAction, Register, Statevector, C64,
};

#[derive(Clone, Debug)]
pub struct LcuProgram {
    ancilla_qubits: usize,
    prepare: Vec<GateAction>,
    unprepare: Vec<GateAction>,
    unitaries: Vec<GateAction>,
    select: Vec<Option<usize>>,
    select_circuit: Option<Vec<GateAction>>,
    success_index: usize,
}

/// Result of a post-selected LCU run.
#[derive(Clone, Debug)]
pub struct LcuOutcome {
    /// Normalized target state after post-selection.
    pub post_state: Statevector,
    pub pi_success: f64,
    /// Norm of the unnormalized post-selected target vector.
    pub omega_prime: f64,
}

impl LcuProgram {
    /// General program. `prepare` and `unprepare` act on ancilla qubits
    /// `0..ancilla_qubits`; `unitaries` act on target qubits numbered from 0;
    /// `select[a]` names the unitary applied when the ancilla holds `a`
    /// (`None` means identity).
    pub fn new(
        ancilla_qubits: usize,
        prepare: Vec<GateAction>,
        unprepare: Vec<GateAction>,
        unitaries: Vec<GateAction>,
        select: Vec<Option<usize>>,
    ) -> Result<Self> {
        let p = LcuProgram {
            ancilla_qubits,
            prepare,
            unprepare,
            unitaries,
            select,
            select_circuit: None,
            success_index: 0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Program whose preparation maps `|0⟩` to `amplitudes` and whose
    /// unpreparation is the inverse; ancilla `j` selects `selects[j]`.
    ///
    /// The effective operator is `Σ_j |amplitudes_j|² U_j`.
    pub fn from_amplitudes(amplitudes: &[C64], selects: Vec<Option<GateAction>>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::Domain(format!("{len} prep amplitudes is not a power of two")));
        }
        if selects.len() > len {
            return Err(Error::Domain(format!("{} selects for {len} ancilla states", selects.len())));
        }
        let k = len.trailing_zeros() as usize;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("prep amplitudes have norm {norm}, expected 1")));
        }
        let prep = preparation_gate(amplitudes)?;
        let unprep: Vec<GateAction> = prep.iter().map(|g| g.adjoint()).collect();
        let mut unitaries = Vec::new();
        let mut select = vec![None; len];
        for (j, s) in selects.into_iter().enumerate() {
            if let Some(u) = s {
                select[j] = Some(unitaries.len());
                unitaries.push(u);
            }
        }
        Self::new(k, prep, unprep, unitaries, select)
    }

    /// Post-select on ancilla basis state `index` instead of `|0…0⟩`.
    pub fn with_success_index(mut self, index: usize) -> Result<Self> {
        if index >= 1 << self.ancilla_qubits {
            return Err(Error::Domain(format!("success index {index} out of range")));
        }
        self.success_index = index;
        Ok(self)
    }

    /// Replaces the block-wise select stage of [`run_lcu`] with an explicit gate
    /// list on the joint register (ancilla qubits first). The select table is
    /// still used by [`apply_lcu_oracle`], so the two must describe the same
    /// operator.
    pub fn with_select_circuit(mut self, gates: Vec<GateAction>) -> Self {
        self.select_circuit = Some(gates);
        self
    }

    pub fn select_circuit(&self) -> Option<&[GateAction]> {
        self.select_circuit.as_deref()
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla_qubits
    }

    pub fn success_index(&self) -> usize {
        self.success_index
    }

    pub fn unitaries(&self) -> &[GateAction] {
        &self.unitaries
    }

    pub fn select_table(&self) -> &[Option<usize>] {
        &self.select
    }

    pub fn prepare(&self) -> &[GateAction] {
        &self.prepare
    }

    pub fn unprepare(&self) -> &[GateAction] {
        &self.unprepare
    }

    /// Ancilla state after preparation.
    pub fn prep_amplitudes(&self) -> Result<Vec<C64>> {
        let mut s = prepare_basis_state(self.ancilla_qubits, 0)?;
        s.apply_all(&self.prepare)?;
        Ok(s.into_amplitudes())
    }

    /// Complex weight `c_j = ⟨s|V|j⟩⟨j|P|0⟩` of each ancilla branch, where `P`
    /// prepares, `V` unprepares and `s` is the success index.
    pub fn branch_weights(&self) -> Result<Vec<C64>> {
        let p = self.prep_amplitudes()?;
        let mut row = prepare_basis_state(self.ancilla_qubits, self.success_index)?;
        for g in self.unprepare.iter().rev() {
            row.apply(&g.adjoint())?;
        }
        Ok(row.amplitudes().iter().zip(&p).map(|(r, a)| r.conj() * a).collect())
    }

    /// Select stage as explicit controlled gates on the joint register.
    pub fn select_gates(&self) -> Vec<GateAction> {
        let k = self.ancilla_qubits;
        let anc: Vec<usize> = (0..k).collect();
        self.select
            .iter()
            .enumerate()
            .filter_map(|(a, s)| s.map(|u| GateAction::controlled_on_value(&anc, a, self.unitaries[u].shifted(k))))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let k = self.ancilla_qubits;
        if self.select.len() != 1 << k {
            return Err(Error::Validation(format!(
                "select table has {} entries for {k} ancilla qubits",
                self.select.len()
            )));
        }
        for (i, s) in self.select.iter().enumerate() {
            if let Some(u) = s {
                if *u >= self.unitaries.len() {
                    return Err(Error::Validation(format!("select entry {i} names missing unitary {u}")));
                }
            }
        }
        for g in self.prepare.iter().chain(&self.unprepare) {
            if g.support().iter().any(|&q| q >= k) {
                return Err(Error::Validation("preparation gate acts outside the ancilla register".into()));
            }
        }
        Ok(())
    }

    fn apply_select(&self, joint: &mut Statevector, n: usize) -> Result<()> {
        if let Some(gates) = &self.select_circuit {
            return joint.apply_all(gates);
        }
        let block = 1usize << n;
        let amps = joint.amplitudes_mut();
        for (a, s) in self.select.iter().enumerate() {
            if let Some(u) = s {
                self.unitaries[*u].apply_to(&mut amps[a * block..(a + 1) * block], n)?;
            }
        }
        Ok(())
    }

    /// Joint ancilla + target state just before post-selection.
    pub fn joint_state(&self, target: &Statevector) -> Result<Statevector> {
        let n = target.num_qubits();
        let mut joint = prepare_basis_state(self.ancilla_qubits, 0)?.tensor(target);
        joint.apply_all(&self.prepare)?;
        self.apply_select(&mut joint, n)?;
        joint.apply_all(&self.unprepare)?;
        Ok(joint)
    }
}

/// Dense preparation unitary on qubits `0..k` sending `|0⟩` to `amplitudes`.
fn preparation_gate(amplitudes: &[C64]) -> Result<Vec<GateAction>> {
    let k = amplitudes.len().trailing_zeros() as usize;
    if k == 0 {
        return Ok(Vec::new());
    }
    let v = CVector::from_column_slice(amplitudes);
    let u = complete_to_unitary(std::slice::from_ref(&v), amplitudes.len())?;
    Ok(vec![GateAction::dense((0..k).collect(), u)?])
}

/// Full simulation: prepare, select, unprepare, post-select on the success state.
pub fn run_lcu(program: &LcuProgram, target: &Statevector) -> Result<LcuOutcome> {
    let joint = program.joint_state(target)?;
    let anc = Register::new("ancilla", 0, program.ancilla_qubits);
    let (post_state, pi_success) = post_select_register(&joint, &anc, program.success_index)?;
    Ok(LcuOutcome {
        post_state,
        pi_success,
        omega_prime: pi_success.sqrt(),
    })
}

/// Direct sum `Σ_j c_j U_j|ψ⟩` with the branch weights of [`LcuProgram::branch_weights`].
/// Returns the unnormalized vector and its squared norm.
pub fn apply_lcu_oracle(program: &LcuProgram, target: &Statevector) -> Result<(Statevector, f64)> {
    let weights = program.branch_weights()?;
    let mut acc = Statevector::zero(target.num_qubits());
    for (a, w) in weights.iter().enumerate() {
        if w.norm() == 0.0 {
            continue;
        }
        match program.select[a] {
            Some(u) => {
                let mut branch = target.clone();
                branch.apply(&program.unitaries[u])?;
                acc.axpy(*w, &branch)?;
            }
            None => acc.axpy(*w, target)?,
        }
    }
    let p = acc.norm_sqr();
    Ok((acc, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{c64, gates, haar_unitary_with, CMatrix};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn uniform(k: usize) -> Vec<C64> {
        vec![c64((1.0 / (1 << k) as f64).sqrt(), 0.0); 1 << k]
    }

    #[test]
    fn identity_plus_x() {
        let p = LcuProgram::from_amplitudes(&uniform(1), vec![None, Some(gates::x(0))]).unwrap();
        let out = run_lcu(&p, &prepare_basis_state(1, 0).unwrap()).unwrap();
        let plus = Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(out.post_state.max_abs_diff(&plus).unwrap() < 1e-12);
        assert!((out.pi_success - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_sum() {
        let id = || Some(GateAction::identity());
        let p = LcuProgram::from_amplitudes(&uniform(1), vec![id(), id()]).unwrap();
        let t = Statevector::from_real(1, &[0.6, 0.8]).unwrap();
        let out = run_lcu(&p, &t).unwrap();
        assert!(out.post_state.max_abs_diff(&t).unwrap() < 1e-12);
        assert!((out.pi_success - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_paulis_hand_arithmetic() {
        let sel = vec![None, Some(gates::x(0)), Some(gates::y(0)), Some(gates::z(0))];
        let p = LcuProgram::from_amplitudes(&uniform(2), sel).unwrap();
        let t = prepare_basis_state(1, 0).unwrap();
        // (I + X + Y + Z)|0⟩/4 = (2|0⟩ + (1+i)|1⟩)/4
        let (v, pi) = apply_lcu_oracle(&p, &t).unwrap();
        let expected = Statevector::new(1, vec![c64(0.5, 0.0), c64(0.25, 0.25)]).unwrap();
        assert!(v.max_abs_diff(&expected).unwrap() < 1e-12);
        assert!((pi - 3.0 / 8.0).abs() < 1e-12);
        let out = run_lcu(&p, &t).unwrap();
        assert!((out.pi_success - 3.0 / 8.0).abs() < 1e-12);
        assert!(out.post_state.max_abs_diff(&expected.normalized().unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn cancellation() {
        let minus_i = GateAction::dense(vec![0], CMatrix::identity(2, 2) * c64(-1.0, 0.0)).unwrap();
        let p = LcuProgram::from_amplitudes(&uniform(1), vec![None, Some(minus_i)]).unwrap();
        let t = Statevector::from_real(1, &[0.6, 0.8]).unwrap();
        let (v, pi) = apply_lcu_oracle(&p, &t).unwrap();
        assert!(v.norm() < 1e-15 && pi < 1e-15);
        assert!(run_lcu(&p, &t).unwrap_err().is_post_selection());
    }

    #[test]
    fn single_branch_is_identity() {
        let p = LcuProgram::from_amplitudes(&[c64(1.0, 0.0)], vec![None]).unwrap();
        let t = Statevector::from_real(2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let (v, pi) = apply_lcu_oracle(&p, &t).unwrap();
        assert!(v.max_abs_diff(&t).unwrap() < 1e-15);
        assert!((pi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn global_phase_unitary_gives_unit_probability() {
        // X and X·e^{0}: effective operator X, a unitary → π = 1
        let p = LcuProgram::from_amplitudes(&uniform(1), vec![Some(gates::x(0)), Some(gates::x(0))]).unwrap();
        let out = run_lcu(&p, &Statevector::from_real(1, &[0.6, 0.8]).unwrap()).unwrap();
        assert!((out.pi_success - 1.0).abs() < 1e-12);
        // I and Z on |+⟩ give |0⟩ with π = 1/2 < 1
        let p = LcuProgram::from_amplitudes(&uniform(1), vec![None, Some(gates::z(0))]).unwrap();
        let out = run_lcu(&p, &Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()).unwrap();
        assert!((out.pi_success - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_programs() {
        assert!(LcuProgram::from_amplitudes(&[c64(1.0, 0.0), c64(1.0, 0.0)], vec![]).is_err());
        assert!(LcuProgram::from_amplitudes(&uniform(1).repeat(3)[..3], vec![]).is_err());
        assert!(LcuProgram::new(1, vec![], vec![], vec![], vec![Some(0), None]).is_err());
        assert!(LcuProgram::new(1, vec![gates::h(1)], vec![], vec![], vec![None, None]).is_err());
    }

    fn random_amplitudes(rng: &mut impl Rng, len: usize) -> Vec<C64> {
        let u = haar_unitary_with(rng, len);
        u.column(0).iter().cloned().collect()
    }

    fn random_program(seed: u64) -> (LcuProgram, Statevector) {
        let mut rng = crate::rng::seeded(seed);
        let k = rng.gen_range(1..=3);
        let n = rng.gen_range(1..=4);
        let amps = random_amplitudes(&mut rng, 1 << k);
        let selects = (0..1 << k)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    None
                } else {
                    Some(GateAction::dense((0..n).collect(), haar_unitary_with(&mut rng, 1 << n)).unwrap())
                }
            })
            .collect();
        let mut p = LcuProgram::from_amplitudes(&amps, selects).unwrap();
        if rng.gen_bool(0.3) {
            // arbitrary unprepare and success index exercise the general weight formula
            let v = haar_unitary_with(&mut rng, 1 << k);
            p.unprepare = vec![GateAction::dense((0..k).collect(), v).unwrap()];
            p.success_index = rng.gen_range(0..1 << k);
        }
        let t = Statevector::new(n, random_amplitudes(&mut rng, 1 << n)).unwrap();
        (p, t)
    }

    #[test]
    fn oracle_equivalence_200_programs() {
        for seed in 0..200 {
            let (p, t) = random_program(seed);
            let out = run_lcu(&p, &t).unwrap();
            let (v, pi) = apply_lcu_oracle(&p, &t).unwrap();
            assert!((out.pi_success - pi).abs() < 1e-10, "seed {seed}");
            assert!(out.pi_success >= 0.0 && out.pi_success <= 1.0 + 1e-12);
            let v = v.normalized().unwrap();
            assert!(out.post_state.max_abs_diff(&v).unwrap() < 1e-10, "seed {seed}");
        }
    }

    proptest! {
        #[test]
        fn block_select_matches_controlled_gates(seed in any::<u64>()) {
            let (p, t) = random_program(seed);
            let k = p.ancilla_qubits;
            let mut a = prepare_basis_state(k, 0).unwrap().tensor(&t);
            a.apply_all(&p.prepare).unwrap();
            let mut b = a.clone();
            p.apply_select(&mut a, t.num_qubits()).unwrap();
            b.apply_all(&p.select_gates()).unwrap();
            prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }

        #[test]
        fn identity_selects_return_input(seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let k = rng.gen_range(1..=3);
            let amps = random_amplitudes(&mut rng, 1 << k);
            let p = LcuProgram::from_amplitudes(&amps, vec![None; 1 << k]).unwrap();
            let t = Statevector::new(2, random_amplitudes(&mut rng, 4)).unwrap();
            let out = run_lcu(&p, &t).unwrap();
            prop_assert!((out.pi_success - 1.0).abs() < 1e-10);
            prop_assert!(out.post_state.max_abs_diff(&t).unwrap() < 1e-10);
        }

        #[test]
        fn weights_are_squared_amplitudes(seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let k = rng.gen_range(1..=3);
            let amps = random_amplitudes(&mut rng, 1 << k);
            let p = LcuProgram::from_amplitudes(&amps, vec![None; 1 << k]).unwrap();
            for (w, a) in p.branch_weights().unwrap().iter().zip(&amps) {
                prop_assert!((w - c64(a.norm_sqr(), 0.0)).norm() < 1e-12);
            }
        }
    }
}
