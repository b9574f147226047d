//! Projections onto irreducible-representation subspaces of finite groups
//! acting on quantum registers.

mod projection;
mod schur;

pub use projection::{
    amplify_symmetric_subspace, apply_projector, build_projection_program, character_matrix,
    class_character_matrix, conjugacy_class_program, direct_projection, permutation_symmetrize,
    projection_success_probability, subspace_weights, ProjectionProbability, ProjectionWeights,
};
pub use schur::{
    rotational_invariance_experiment, OverlapRow, RotationConfig, SchurBasisS4, S4_TWO_DIM_IRREP,
};

use crate::error::{Error, Result};
use crate::qsim::{GateAction, Statevector, C64};
use crate::rng::seeded;
use serde::Deserialize;
use std::path::Path;

const CHARACTER_TOL: f64 = 1e-12;

/// Multiplication table, conjugacy classes and character table of a finite
/// group. Elements are indices `0..order`; `compose[a][b]` is `a∘b` (apply
/// `b` first). Character row 0 must be the trivial representation.
#[derive(Clone, Debug)]
pub struct FiniteGroupData {
    name: String,
    compose: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    characters: Vec<Vec<C64>>,
    permutations: Option<Vec<Vec<usize>>>,
}

/// On-disk form of a user-supplied group.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    name: String,
    compose: Vec<Vec<usize>>,
    classes: Vec<Vec<usize>>,
    characters: Vec<Vec<f64>>,
    #[serde(default)]
    characters_imag: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    permutations: Option<Vec<Vec<usize>>>,
}

impl FiniteGroupData {
    /// Builds and validates a group. `characters[r][c]` is the character of
    /// irrep `r` on class `c`.
    pub fn new(
        name: impl Into<String>,
        compose: Vec<Vec<usize>>,
        classes: Vec<Vec<usize>>,
        characters: Vec<Vec<C64>>,
        permutations: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let order = compose.len();
        if order == 0 || compose.iter().any(|row| row.len() != order) {
            return Err(Error::Validation("composition table must be square and nonempty".into()));
        }
        if compose.iter().flatten().any(|&g| g >= order) {
            return Err(Error::Validation("composition table is not closed".into()));
        }
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| compose[e][g] == g && compose[g][e] == g))
            .ok_or_else(|| Error::Validation("no identity element".into()))?;
        let inverse = (0..order)
            .map(|g| {
                (0..order)
                    .find(|&h| compose[g][h] == identity && compose[h][g] == identity)
                    .ok_or_else(|| Error::Validation(format!("element {g} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut class_of = vec![usize::MAX; order];
        for (c, class) in classes.iter().enumerate() {
            for &g in class {
                if g >= order || class_of[g] != usize::MAX {
                    return Err(Error::Validation(format!("class {c} repeats or overflows element {g}")));
                }
                class_of[g] = c;
            }
        }
        if class_of.contains(&usize::MAX) {
            return Err(Error::Validation("conjugacy classes do not cover the group".into()));
        }
        let group = FiniteGroupData {
            name: name.into(),
            compose,
            inverse,
            identity,
            classes,
            class_of,
            characters,
            permutations,
        };
        group.validate()?;
        Ok(group)
    }

    /// Reads a group from JSON with fields `name`, `compose`, `classes`,
    /// `characters` (real parts), optional `characters_imag` and optional
    /// `permutations`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: GroupFile = serde_json::from_str(text)?;
        let characters = match &f.characters_imag {
            None => f.characters.iter().map(|row| row.iter().map(|&re| C64::new(re, 0.0)).collect()).collect(),
            Some(im) => {
                if im.len() != f.characters.len() || im.iter().zip(&f.characters).any(|(a, b)| a.len() != b.len()) {
                    return Err(Error::Config("characters_imag must match the shape of characters".into()));
                }
                f.characters
                    .iter()
                    .zip(im)
                    .map(|(re, im)| re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
                    .collect()
            }
        };
        Self::new(f.name, f.compose, f.classes, characters, f.permutations)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Checks group axioms, that classes are conjugacy classes, character
    /// orthogonality and `Σ n_r² = |G|`.
    pub fn validate(&self) -> Result<()> {
        let n = self.order();
        // associativity: exhaustive for small groups, seeded sample otherwise
        let triples: Box<dyn Iterator<Item = (usize, usize, usize)>> = if n <= 32 {
            Box::new((0..n).flat_map(move |a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c)))))
        } else {
            use rand::Rng;
            let mut rng = seeded(0);
            Box::new((0..20_000).map(move |_| (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n))))
        };
        for (a, b, c) in triples {
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                return Err(Error::Validation(format!("composition not associative at ({a},{b},{c})")));
            }
        }
        for (c, class) in self.classes.iter().enumerate() {
            let rep = *class.first().ok_or_else(|| Error::Validation(format!("class {c} is empty")))?;
            let mut orbit: Vec<usize> = (0..n).map(|g| self.mul(self.mul(g, rep), self.inverse[g])).collect();
            orbit.sort_unstable();
            orbit.dedup();
            let mut members = class.clone();
            members.sort_unstable();
            if orbit != members {
                return Err(Error::Validation(format!("class {c} is not a conjugacy class")));
            }
        }
        let r = self.characters.len();
        if r != self.classes.len() {
            return Err(Error::Validation(format!(
                "{r} character rows for {} conjugacy classes",
                self.classes.len()
            )));
        }
        if self.characters.iter().any(|row| row.len() != self.classes.len()) {
            return Err(Error::Validation("character row length differs from class count".into()));
        }
        if self.characters[0].iter().any(|x| (x - C64::new(1.0, 0.0)).norm() > CHARACTER_TOL) {
            return Err(Error::Validation("first character row must be the trivial representation".into()));
        }
        for j in 0..r {
            for k in 0..r {
                let ip = self.character_inner(&self.characters[j], &self.characters[k]);
                let expected = if j == k { 1.0 } else { 0.0 };
                if (ip - C64::new(expected, 0.0)).norm() > CHARACTER_TOL {
                    return Err(Error::Validation(format!("characters {j} and {k} violate orthogonality")));
                }
            }
        }
        let sum_sq: f64 = (0..r).map(|i| self.degree(i).powi(2)).sum();
        if (sum_sq - n as f64).abs() > 1e-9 {
            return Err(Error::Validation(format!("sum of squared degrees {sum_sq} differs from |G| = {n}")));
        }
        if let Some(perms) = &self.permutations {
            if perms.len() != n {
                return Err(Error::Validation("one permutation per element required".into()));
            }
            for a in 0..n {
                for b in 0..n {
                    let composed: Vec<usize> = perms[b].iter().map(|&i| perms[a][i]).collect();
                    if composed != perms[self.mul(a, b)] {
                        return Err(Error::Validation("permutations do not follow the composition table".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(1/|G|) Σ_ν d_ν f(ν) g(ν)*` over class functions.
    pub fn character_inner(&self, f: &[C64], g: &[C64]) -> C64 {
        let s: C64 = self
            .classes
            .iter()
            .zip(f.iter().zip(g))
            .map(|(class, (a, b))| a * b.conj() * class.len() as f64)
            .sum();
        s / self.order() as f64
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.compose.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    /// `a∘b`.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.compose[a][b]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverse[g]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    pub fn class_of(&self, g: usize) -> usize {
        self.class_of[g]
    }

    pub fn num_irreps(&self) -> usize {
        self.characters.len()
    }

    /// `χ_r` on class `c`.
    pub fn character(&self, r: usize, class: usize) -> C64 {
        self.characters[r][class]
    }

    /// `χ_r(g)`.
    pub fn element_character(&self, r: usize, g: usize) -> C64 {
        self.characters[r][self.class_of[g]]
    }

    /// `n_r = χ_r(identity)`.
    pub fn degree(&self, r: usize) -> f64 {
        self.element_character(r, self.identity).re
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.num_irreps()).map(|r| self.degree(r)).collect()
    }

    /// Element `g` as a permutation of `0..n` (`p[i]` is the image of `i`), if known.
    pub fn permutation(&self, g: usize) -> Option<&[usize]> {
        self.permutations.as_ref().map(|p| p[g].as_slice())
    }

    /// Degree `n` of the permutation action, if the elements are permutations.
    pub fn permutation_degree(&self) -> Option<usize> {
        self.permutations.as_ref().map(|p| p[0].len())
    }
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in all_permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

/// Cycle lengths in descending order.
fn cycle_type(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut lens = Vec::new();
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        lens.push(len);
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    lens
}

/// The symmetric group `S_n` for `n ∈ {2, 3, 4}` with elements in
/// lexicographic order (identity first).
///
/// Classes, by cycle type: S₂ `(I), (12)`; S₃ `(I), (12), (123)`;
/// S₄ `(I), (12), (12)(34), (123), (1234)`.
pub fn symmetric_group(n: usize) -> Result<FiniteGroupData> {
    let (types, table): (Vec<Vec<usize>>, Vec<Vec<f64>>) = match n {
        2 => (vec![vec![1, 1], vec![2]], vec![vec![1., 1.], vec![1., -1.]]),
        3 => (
            vec![vec![1, 1, 1], vec![2, 1], vec![3]],
            vec![vec![1., 1., 1.], vec![2., 0., -1.], vec![1., -1., 1.]],
        ),
        4 => (
            vec![vec![1, 1, 1, 1], vec![2, 1, 1], vec![2, 2], vec![3, 1], vec![4]],
            vec![
                vec![1., 1., 1., 1., 1.],
                vec![1., -1., 1., 1., -1.],
                vec![2., 0., 2., -1., 0.],
                vec![3., -1., -1., 0., 1.],
                vec![3., 1., -1., 0., -1.],
            ],
        ),
        _ => {
            return Err(Error::Domain(format!(
                "built-in symmetric groups cover n = 2..=4, got {n}; supply FiniteGroupData instead"
            )))
        }
    };
    let perms = all_permutations(n);
    let index = |p: &[usize]| perms.iter().position(|q| q == p).expect("closed under composition");
    let compose = perms
        .iter()
        .map(|a| {
            perms
                .iter()
                .map(|b| index(&b.iter().map(|&i| a[i]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    let classes = types
        .iter()
        .map(|t| (0..perms.len()).filter(|&g| &cycle_type(&perms[g]) == t).collect())
        .collect();
    let characters = table.into_iter().map(|row| row.into_iter().map(|x| C64::new(x, 0.0)).collect()).collect();
    FiniteGroupData::new(format!("S{n}"), compose, classes, characters, Some(perms))
}

/// A unitary representation: one gate per group element on a register of
/// `num_qubits` qubits.
#[derive(Clone, Debug)]
pub struct RepMap {
    num_qubits: usize,
    actions: Vec<GateAction>,
}

impl RepMap {
    pub fn new(num_qubits: usize, actions: Vec<GateAction>) -> Self {
        RepMap { num_qubits, actions }
    }

    /// `U_σ` moves the qudit at position `i` to position `σ(i)`; qudits have
    /// `qudit_bits` qubits each, qudit 0 most significant.
    pub fn qudit_permutation(group: &FiniteGroupData, qudit_bits: usize) -> Result<Self> {
        let n = group
            .permutation_degree()
            .ok_or_else(|| Error::Domain(format!("group {} has no permutation action", group.name())))?;
        if qudit_bits == 0 {
            return Err(Error::Domain("qudits need at least one qubit".into()));
        }
        let num_qubits = n * qudit_bits;
        let mask = (1usize << qudit_bits) - 1;
        let actions = (0..group.order())
            .map(|g| {
                let sigma = group.permutation(g).expect("checked above");
                let map = (0..1usize << num_qubits)
                    .map(|x| {
                        (0..n).fold(0, |acc, i| {
                            let digit = (x >> ((n - 1 - i) * qudit_bits)) & mask;
                            acc | digit << ((n - 1 - sigma[i]) * qudit_bits)
                        })
                    })
                    .collect();
                GateAction::permutation((0..num_qubits).collect(), map)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RepMap { num_qubits, actions })
    }

    /// Qubit-permuting representation of a permutation group.
    pub fn qubit_permutation(group: &FiniteGroupData) -> Result<Self> {
        Self::qudit_permutation(group, 1)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn action(&self, g: usize) -> &GateAction {
        &self.actions[g]
    }

    pub fn actions(&self) -> &[GateAction] {
        &self.actions
    }

    /// `U_g|ψ⟩`.
    pub fn apply(&self, g: usize, psi: &Statevector) -> Result<Statevector> {
        let mut s = psi.clone();
        s.apply(&self.actions[g])?;
        Ok(s)
    }

    /// Checks `U_a U_b |ψ⟩ = U_{a∘b} |ψ⟩` for every pair on a seeded random
    /// state, within 1e-10.
    pub fn check_homomorphism(&self, group: &FiniteGroupData, seed: u64) -> Result<()> {
        if self.actions.len() != group.order() {
            return Err(Error::Validation(format!(
                "{} actions for a group of order {}",
                self.actions.len(),
                group.order()
            )));
        }
        use rand::Rng;
        let mut rng = seeded(seed);
        let amps = (0..1usize << self.num_qubits).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let psi = Statevector::from_amplitudes(amps.collect())?.normalized()?;
        let images = (0..group.order()).map(|g| self.apply(g, &psi)).collect::<Result<Vec<_>>>()?;
        for a in 0..group.order() {
            for b in 0..group.order() {
                let lhs = self.apply(a, &images[b])?;
                if lhs.max_abs_diff(&images[group.mul(a, b)])? > 1e-10 {
                    return Err(Error::Validation(format!("U_{a} U_{b} differs from U_(ab)")));
                }
            }
        }
        Ok(())
    }

    /// Multiplicity of each irrep, `m_r = (1/|G|) Σ_g tr(U_g) χ_r(g)*`.
    pub fn multiplicities(&self, group: &FiniteGroupData) -> Result<Vec<f64>> {
        let traces = self
            .actions
            .iter()
            .map(|a| Ok(a.to_matrix(self.num_qubits)?.trace()))
            .collect::<Result<Vec<C64>>>()?;
        Ok((0..group.num_irreps())
            .map(|r| {
                let s: C64 = traces.iter().enumerate().map(|(g, t)| t * group.element_character(r, g).conj()).sum();
                s.re / group.order() as f64
            })
            .collect())
    }
}
