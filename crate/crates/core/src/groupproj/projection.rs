use super::{symmetric_group, FiniteGroupData, RepMap};
use crate::error::{Error, Result};
use crate::lcu::{run_lcu, LcuProgram};
use crate::qsim::{complete_to_unitary, unitary_with_first_column, CMatrix, CVector, GateAction, Statevector, C64};

/// Pre-initialization weights `a_r`, one per irrep.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionWeights {
    a: Vec<C64>,
}

impl ProjectionWeights {
    pub fn new(a: Vec<C64>) -> Result<Self> {
        if a.iter().all(|x| x.norm() == 0.0) {
            return Err(Error::Domain("projection weights are all zero".into()));
        }
        Ok(ProjectionWeights { a })
    }

    pub fn from_real(a: &[f64]) -> Result<Self> {
        Self::new(a.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Selects irrep `r` alone.
    pub fn single(num_irreps: usize, r: usize) -> Result<Self> {
        if r >= num_irreps {
            return Err(Error::Domain(format!("irrep {r} out of range for {num_irreps} irreps")));
        }
        let mut a = vec![C64::new(0.0, 0.0); num_irreps];
        a[r] = C64::new(1.0, 0.0);
        Ok(ProjectionWeights { a })
    }

    /// `a₀ = 1` on the trivial irrep and `1 − α` elsewhere.
    pub fn symmetric_amplification(num_irreps: usize, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("alpha {alpha} outside [0, 1]")));
        }
        let mut a = vec![C64::new(1.0 - alpha, 0.0); num_irreps];
        a[0] = C64::new(1.0, 0.0);
        Ok(ProjectionWeights { a })
    }

    pub fn a(&self) -> &[C64] {
        &self.a
    }

    /// `Σ_r |a_r n_r|²`.
    pub fn omega(&self, degrees: &[f64]) -> f64 {
        self.a.iter().zip(degrees).map(|(a, n)| (a * n).norm_sqr()).sum()
    }

    /// Normalized amplitudes `∝ a_r n_r`.
    pub fn prep_amplitudes(&self, degrees: &[f64]) -> Vec<C64> {
        let norm = self.omega(degrees).sqrt();
        self.a.iter().zip(degrees).map(|(a, n)| a * *n / norm).collect()
    }

    fn check(&self, group: &FiniteGroupData) -> Result<()> {
        if self.a.len() != group.num_irreps() {
            return Err(Error::Domain(format!(
                "{} weights for {} irreps of {}",
                self.a.len(),
                group.num_irreps(),
                group.name()
            )));
        }
        Ok(())
    }
}

fn check_rep(group: &FiniteGroupData, rep: &RepMap, psi: &Statevector) -> Result<()> {
    if rep.actions().len() != group.order() {
        return Err(Error::Domain(format!(
            "representation has {} elements, group has {}",
            rep.actions().len(),
            group.order()
        )));
    }
    if psi.num_qubits() != rep.num_qubits() {
        return Err(Error::Domain(format!(
            "state has {} qubits, representation acts on {}",
            psi.num_qubits(),
            rep.num_qubits()
        )));
    }
    Ok(())
}

/// `Σ_r a_r P̂_r|ψ⟩` by direct summation over group elements, with its squared norm.
pub fn direct_projection(
    group: &FiniteGroupData,
    rep: &RepMap,
    weights: &ProjectionWeights,
    psi: &Statevector,
) -> Result<(Statevector, f64)> {
    weights.check(group)?;
    check_rep(group, rep, psi)?;
    let order = group.order() as f64;
    let mut acc = Statevector::zero(psi.num_qubits());
    for g in 0..group.order() {
        let coef: C64 = weights
            .a
            .iter()
            .enumerate()
            .map(|(r, a)| a * group.degree(r) / order * group.element_character(r, g).conj())
            .sum();
        if coef.norm() == 0.0 {
            continue;
        }
        acc.axpy(coef, &rep.apply(g, psi)?)?;
    }
    let w = acc.norm_sqr();
    Ok((acc, w))
}

/// `P̂_r|ψ⟩ = (n_r/|G|) Σ_g χ_r(g)* U_g|ψ⟩` and its weight `⟨ψ_r|ψ_r⟩`.
pub fn apply_projector(group: &FiniteGroupData, rep: &RepMap, r: usize, psi: &Statevector) -> Result<(Statevector, f64)> {
    direct_projection(group, rep, &ProjectionWeights::single(group.num_irreps(), r)?, psi)
}

/// `⟨ψ_r|ψ_r⟩` for every irrep.
pub fn subspace_weights(group: &FiniteGroupData, rep: &RepMap, psi: &Statevector) -> Result<Vec<f64>> {
    (0..group.num_irreps()).map(|r| Ok(apply_projector(group, rep, r, psi)?.1)).collect()
}

fn register_width(states: usize) -> usize {
    if states <= 2 {
        1
    } else {
        (usize::BITS - (states - 1).leading_zeros()) as usize
    }
}

fn column(len: usize, entries: impl Iterator<Item = C64>) -> CVector {
    let mut v = CVector::zeros(len);
    for (i, x) in entries.enumerate() {
        v[i] = x;
    }
    v
}

/// `χ̂`: column `r` holds `χ_r(g_i)*/√|G|` over elements `i`, remaining
/// columns completed to a unitary.
pub fn character_matrix(group: &FiniteGroupData) -> Result<CMatrix> {
    let dim = 1 << register_width(group.order());
    let scale = 1.0 / (group.order() as f64).sqrt();
    let cols: Vec<CVector> = (0..group.num_irreps())
        .map(|r| column(dim, (0..group.order()).map(|g| group.element_character(r, g).conj() * scale)))
        .collect();
    complete_to_unitary(&cols, dim)
}

/// `χ̃`: column `r` holds `√d_ν χ_r(ν)*/√|G|` over classes `ν`, remaining
/// columns completed to a unitary.
pub fn class_character_matrix(group: &FiniteGroupData) -> Result<CMatrix> {
    let dim = 1 << register_width(group.classes().len());
    let order = group.order() as f64;
    let cols: Vec<CVector> = (0..group.num_irreps())
        .map(|r| {
            column(
                dim,
                group
                    .classes()
                    .iter()
                    .enumerate()
                    .map(|(c, members)| group.character(r, c).conj() * (members.len() as f64 / order).sqrt()),
            )
        })
        .collect();
    complete_to_unitary(&cols, dim)
}

fn prep_gate(qubits: Vec<usize>, amplitudes: &[C64]) -> Result<GateAction> {
    let v = column(1 << qubits.len(), amplitudes.iter().copied());
    GateAction::dense(qubits, unitary_with_first_column(&v)?)
}

/// LCU program for `Σ_r a_r P̂_r` with one ancilla basis state per group
/// element: prepare `γ̂` then `χ̂`, select `U_{g_i}`, unprepare with `χ̂†`.
/// The post-selected state is `Σ_r a_r P̂_r|ψ⟩` normalized.
pub fn build_projection_program(
    group: &FiniteGroupData,
    rep: &RepMap,
    weights: &ProjectionWeights,
) -> Result<LcuProgram> {
    weights.check(group)?;
    let k = register_width(group.order());
    let qubits: Vec<usize> = (0..k).collect();
    let gamma = prep_gate(qubits.clone(), &weights.prep_amplitudes(&group.degrees()))?;
    let chi = character_matrix(group)?;
    let chi_dag = GateAction::dense(qubits.clone(), chi.adjoint())?;
    let chi = GateAction::dense(qubits, chi)?;
    let select = (0..1usize << k).map(|i| (i < group.order()).then_some(i)).collect();
    LcuProgram::new(k, vec![gamma, chi], vec![chi_dag], rep.actions().to_vec(), select)
}

/// Variant indexed by conjugacy classes: a class register prepared by `γ̂`
/// then `χ̃`, plus one register per class holding a uniform superposition
/// over that class's elements. Same effective operator as
/// [`build_projection_program`].
pub fn conjugacy_class_program(
    group: &FiniteGroupData,
    rep: &RepMap,
    weights: &ProjectionWeights,
) -> Result<LcuProgram> {
    weights.check(group)?;
    let classes = group.classes();
    let kc = register_width(classes.len());
    let widths: Vec<usize> = classes
        .iter()
        .map(|c| if c.len() == 1 { 0 } else { register_width(c.len()) })
        .collect();
    let total = kc + widths.iter().sum::<usize>();
    let class_qubits: Vec<usize> = (0..kc).collect();
    let chi = class_character_matrix(group)?;
    let mut prepare = vec![
        prep_gate(class_qubits.clone(), &weights.prep_amplitudes(&group.degrees()))?,
        GateAction::dense(class_qubits.clone(), chi.clone())?,
    ];
    let mut unprepare = Vec::new();
    let mut starts = Vec::with_capacity(classes.len());
    let mut next = kc;
    for (members, &w) in classes.iter().zip(&widths) {
        starts.push(next);
        if w > 0 {
            let amp = C64::new(1.0 / (members.len() as f64).sqrt(), 0.0);
            let omega = prep_gate((next..next + w).collect(), &vec![amp; members.len()])?;
            unprepare.push(omega.adjoint());
            prepare.push(omega);
        }
        next += w;
    }
    unprepare.push(GateAction::dense(class_qubits, chi.adjoint())?);
    let select = (0..1usize << total)
        .map(|a| {
            let c = a >> (total - kc);
            let members = classes.get(c)?;
            let w = widths[c];
            let l = (a >> (total - starts[c] - w)) & ((1 << w) - 1);
            members.get(l).copied()
        })
        .collect();
    LcuProgram::new(total, prepare, unprepare, rep.actions().to_vec(), select)
}

/// Success probability of a projection program, alongside two closed forms.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionProbability {
    /// `Σ_r |a_r|² ⟨ψ_r|ψ_r⟩ / Σ_r |a_r n_r|²`, the value a simulation produces.
    pub simulated: f64,
    /// `Σ_r |a_r|² ⟨ψ_r|ψ_r⟩ / Ω²` with `Ω = Σ_r |a_r n_r|²`.
    pub omega_sq_form: f64,
    /// `⟨ψ_r|ψ_r⟩` when a single irrep is selected.
    pub single_weight: Option<f64>,
}

pub fn projection_success_probability(
    weights: &ProjectionWeights,
    subspace_weights: &[f64],
    degrees: &[f64],
) -> Result<ProjectionProbability> {
    let a = weights.a();
    if a.len() != subspace_weights.len() || a.len() != degrees.len() {
        return Err(Error::Domain("weights, subspace weights and degrees differ in length".into()));
    }
    let total: f64 = subspace_weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("subspace weights sum to {total}, expected 1")));
    }
    let num: f64 = a.iter().zip(subspace_weights).map(|(a, w)| a.norm_sqr() * w).sum();
    let omega = weights.omega(degrees);
    let nonzero: Vec<usize> = (0..a.len()).filter(|&r| a[r].norm() != 0.0).collect();
    Ok(ProjectionProbability {
        simulated: num / omega,
        omega_sq_form: num / (omega * omega),
        single_weight: (nonzero.len() == 1).then(|| subspace_weights[nonzero[0]]),
    })
}

/// Projects onto the permutation-symmetric subspace of `n_qudits` qudits of
/// `qudit_bits` qubits each, via the LCU program. Returns the normalized
/// state and the success probability.
pub fn permutation_symmetrize(psi: &Statevector, n_qudits: usize, qudit_bits: usize) -> Result<(Statevector, f64)> {
    let group = symmetric_group(n_qudits)?;
    let rep = RepMap::qudit_permutation(&group, qudit_bits)?;
    let weights = ProjectionWeights::single(group.num_irreps(), 0)?;
    let out = run_lcu(&build_projection_program(&group, &rep, &weights)?, psi)?;
    Ok((out.post_state, out.pi_success))
}

/// Runs the projection program with weights `a₀ = 1`, `a_r = 1 − α`.
pub fn amplify_symmetric_subspace(
    psi: &Statevector,
    alpha: f64,
    group: &FiniteGroupData,
    rep: &RepMap,
) -> Result<(Statevector, f64)> {
    let weights = ProjectionWeights::symmetric_amplification(group.num_irreps(), alpha)?;
    let out = run_lcu(&build_projection_program(group, rep, &weights)?, psi)?;
    Ok((out.post_state, out.pi_success))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{c64, haar_unitary_with, is_unitary};
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_state(n: usize, seed: u64) -> Statevector {
        let mut rng = seeded(seed);
        let u = haar_unitary_with(&mut rng, 1 << n);
        Statevector::from_amplitudes(u.column(0).iter().copied().collect()).unwrap()
    }

    fn setup(n: usize) -> (FiniteGroupData, RepMap) {
        let g = symmetric_group(n).unwrap();
        let rep = RepMap::qubit_permutation(&g).unwrap();
        (g, rep)
    }

    fn real(n: usize, amps: &[(usize, f64)]) -> Statevector {
        let mut v = vec![0.0; 1 << n];
        for &(i, a) in amps {
            v[i] = a;
        }
        Statevector::from_real(n, &v).unwrap()
    }

    #[test]
    fn projector_examples() {
        let (s2, rep2) = setup(2);
        let (v, w) = apply_projector(&s2, &rep2, 0, &Statevector::basis(2, 0b01).unwrap()).unwrap();
        assert!(v.max_abs_diff(&real(2, &[(1, 0.5), (2, 0.5)])).unwrap() < 1e-15);
        assert!((w - 0.5).abs() < 1e-15);

        let (s3, rep3) = setup(3);
        let (v, w) = apply_projector(&s3, &rep3, 2, &Statevector::basis(3, 0b001).unwrap()).unwrap();
        assert!(v.norm() < 1e-15 && w < 1e-30);

        // ⟨d₁|0011⟩ = 2·√3/6 = 1/√3, ⟨d₂|0011⟩ = 0
        let (s4, rep4) = setup(4);
        let (v, w) = apply_projector(&s4, &rep4, 2, &Statevector::basis(4, 0b0011).unwrap()).unwrap();
        let c = 3f64.sqrt() / 6.0 / 3f64.sqrt();
        let d1_scaled = real(4, &[(3, 2. * c), (12, 2. * c), (5, -c), (10, -c), (6, -c), (9, -c)]);
        assert!(v.max_abs_diff(&d1_scaled).unwrap() < 1e-14);
        assert!((w - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn projector_algebra() {
        for n in 2..=4 {
            let (g, rep) = setup(n);
            let dim = 1 << n;
            let mats: Vec<CMatrix> = (0..g.num_irreps())
                .map(|r| {
                    let cols: Vec<CVector> = (0..dim)
                        .map(|i| {
                            let (v, _) = apply_projector(&g, &rep, r, &Statevector::basis(n, i).unwrap()).unwrap();
                            CVector::from_column_slice(v.amplitudes())
                        })
                        .collect();
                    CMatrix::from_columns(&cols)
                })
                .collect();
            let mut sum = CMatrix::zeros(dim, dim);
            for (r, p) in mats.iter().enumerate() {
                assert!((p * p - p).norm() < 1e-10);
                for (s, q) in mats.iter().enumerate() {
                    if r != s {
                        assert!((p * q).norm() < 1e-10);
                    }
                }
                for u in rep.actions() {
                    let u = u.to_matrix(n).unwrap();
                    assert!((p * &u - &u * p).norm() < 1e-10);
                }
                sum += p;
            }
            assert!((sum - CMatrix::identity(dim, dim)).norm() < 1e-10);
        }
    }

    #[test]
    fn character_matrices_are_unitary() {
        for n in 2..=4 {
            let g = symmetric_group(n).unwrap();
            assert!(is_unitary(&character_matrix(&g).unwrap(), 1e-12));
            assert!(is_unitary(&class_character_matrix(&g).unwrap(), 1e-12));
        }
    }

    #[test]
    fn s3_class_matrix_matches_table() {
        let g = symmetric_group(3).unwrap();
        let m = class_character_matrix(&g).unwrap();
        let (r2, r3) = (2f64.sqrt(), 3f64.sqrt());
        let rows = [[1., 2., 1., 0.], [r3, 0., -r3, 0.], [r2, -r2, r2, 0.], [0., 0., 0., 6f64.sqrt()]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)] - c64(rows[i][j] / 6f64.sqrt(), 0.)).norm() < 1e-12, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn symmetric_projection_program() {
        let (s2, rep) = setup(2);
        let w = ProjectionWeights::from_real(&[1.0, 0.0]).unwrap();
        let out = run_lcu(&build_projection_program(&s2, &rep, &w).unwrap(), &Statevector::basis(2, 1).unwrap()).unwrap();
        let expected = real(2, &[(1, FRAC_1_SQRT_2), (2, FRAC_1_SQRT_2)]);
        assert!(out.post_state.max_abs_diff(&expected).unwrap() < 1e-12);
        assert!((out.pi_success - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_ones_weights_leave_state_unchanged() {
        for n in 2..=4 {
            let (g, rep) = setup(n);
            let psi = random_state(n, 40 + n as u64);
            let w = ProjectionWeights::from_real(&vec![1.0; g.num_irreps()]).unwrap();
            let out = run_lcu(&build_projection_program(&g, &rep, &w).unwrap(), &psi).unwrap();
            assert!(out.post_state.max_abs_diff(&psi).unwrap() < 1e-10);
            // ψ is unchanged, so the success probability is 1/Σ n_r² = 1/|G|
            assert!((out.pi_success - 1.0 / g.order() as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn class_pipeline_on_001() {
        let (s3, rep) = setup(3);
        let w = ProjectionWeights::single(3, 0).unwrap();
        let out = run_lcu(&conjugacy_class_program(&s3, &rep, &w).unwrap(), &Statevector::basis(3, 1).unwrap()).unwrap();
        let t = 1.0 / 3f64.sqrt();
        assert!(out.post_state.max_abs_diff(&real(3, &[(1, t), (2, t), (4, t)])).unwrap() < 1e-12);
    }

    #[test]
    fn success_probability_examples() {
        let one = ProjectionWeights::single(2, 0).unwrap();
        let p = projection_success_probability(&one, &[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((p.simulated - 1.0).abs() < 1e-15);
        let p = projection_success_probability(&one, &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        assert!((p.simulated - 0.5).abs() < 1e-15);
        assert!(projection_success_probability(&one, &[0.5, 0.4], &[1.0, 1.0]).is_err());

        // S₄, irrep with n_r = 2 on |0011⟩: run_lcu is the reference
        let (s4, rep) = setup(4);
        let psi = Statevector::basis(4, 0b0011).unwrap();
        let w = ProjectionWeights::single(5, 2).unwrap();
        let sim = run_lcu(&build_projection_program(&s4, &rep, &w).unwrap(), &psi).unwrap().pi_success;
        let p = projection_success_probability(&w, &subspace_weights(&s4, &rep, &psi).unwrap(), &s4.degrees()).unwrap();
        assert!((p.simulated - sim).abs() < 1e-12);
        assert!((p.simulated - 1.0 / 12.0).abs() < 1e-12);
        assert!((p.single_weight.unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_examples() {
        let (v, pi) = permutation_symmetrize(&Statevector::basis(2, 1).unwrap(), 2, 1).unwrap();
        assert!(v.max_abs_diff(&real(2, &[(1, FRAC_1_SQRT_2), (2, FRAC_1_SQRT_2)])).unwrap() < 1e-12);
        assert!((pi - 0.5).abs() < 1e-12);
        let zero = Statevector::basis(3, 0).unwrap();
        let (v, pi) = permutation_symmetrize(&zero, 3, 1).unwrap();
        assert!(v.max_abs_diff(&zero).unwrap() < 1e-12 && (pi - 1.0).abs() < 1e-12);
        // |01⟩ − |10⟩ has no symmetric component
        let singlet = real(2, &[(1, FRAC_1_SQRT_2), (2, -FRAC_1_SQRT_2)]);
        assert!(permutation_symmetrize(&singlet, 2, 1).unwrap_err().is_post_selection());
    }

    #[test]
    fn symmetrize_product_state_matches_explicit_sum() {
        let mut rng = seeded(12);
        let qubits: Vec<Statevector> = (0..3).map(|_| random_state(1, rng.gen())).collect();
        let psi = qubits[0].tensor(&qubits[1]).tensor(&qubits[2]);
        let (v, _) = permutation_symmetrize(&psi, 3, 1).unwrap();
        let mut acc = Statevector::zero(3);
        for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let term = qubits[p[0]].tensor(&qubits[p[1]]).tensor(&qubits[p[2]]);
            acc.axpy(c64(1.0, 0.0), &term).unwrap();
        }
        let acc = acc.normalized().unwrap();
        assert!(v.max_abs_diff(&acc).unwrap() < 1e-10);
    }

    #[test]
    fn amplification_examples() {
        let (s2, rep) = setup(2);
        let psi = random_state(2, 3);
        let (v, _) = amplify_symmetric_subspace(&psi, 0.0, &s2, &rep).unwrap();
        assert!(v.max_abs_diff(&psi).unwrap() < 1e-10);
        let ket01 = Statevector::basis(2, 1).unwrap();
        let (v, _) = amplify_symmetric_subspace(&ket01, 1.0, &s2, &rep).unwrap();
        assert!(v.max_abs_diff(&real(2, &[(1, FRAC_1_SQRT_2), (2, FRAC_1_SQRT_2)])).unwrap() < 1e-12);
        // half-strength antisymmetric part: (|01⟩+|10⟩)/2 + 0.5·(|01⟩−|10⟩)/2 = 0.75|01⟩ + 0.25|10⟩
        let (v, _) = amplify_symmetric_subspace(&ket01, 0.5, &s2, &rep).unwrap();
        let n = (0.75f64.powi(2) + 0.25f64.powi(2)).sqrt();
        assert!(v.max_abs_diff(&real(2, &[(1, 0.75 / n), (2, 0.25 / n)])).unwrap() < 1e-12);
        assert!(amplify_symmetric_subspace(&ket01, 1.5, &s2, &rep).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn lcu_matches_direct(seed in any::<u64>(), n in 2usize..=4) {
            let (g, rep) = setup(n);
            let mut rng = seeded(seed);
            let a: Vec<C64> = (0..g.num_irreps()).map(|_| c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let w = ProjectionWeights::new(a).unwrap();
            let psi = random_state(n, rng.gen());
            let (direct, _) = direct_projection(&g, &rep, &w, &psi).unwrap();
            let direct = direct.normalized().unwrap();
            let out = run_lcu(&build_projection_program(&g, &rep, &w).unwrap(), &psi).unwrap();
            prop_assert!(out.post_state.max_abs_diff(&direct).unwrap() < 1e-10);
            let classes = run_lcu(&conjugacy_class_program(&g, &rep, &w).unwrap(), &psi).unwrap();
            prop_assert!(classes.post_state.max_abs_diff(&direct).unwrap() < 1e-10);
            prop_assert!((classes.pi_success - out.pi_success).abs() < 1e-10);
            let sw = subspace_weights(&g, &rep, &psi).unwrap();
            let p = projection_success_probability(&w, &sw, &g.degrees()).unwrap();
            prop_assert!((p.simulated - out.pi_success).abs() < 1e-10);
        }
    }
}
