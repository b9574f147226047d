use super::{is_unitary, CMatrix, C64, MATRIX_TOL};
use crate::error::{Error, Result};

/// A unitary action on a subset of qubits of a larger register.
///
/// Within an action the first listed qubit is the most significant bit of the
/// local index used by `matrix` and `map`.
#[derive(Clone, Debug, PartialEq)]
pub enum GateAction {
    /// Dense unitary on `qubits`.
    Dense { qubits: Vec<usize>, matrix: CMatrix },
    /// Basis permutation: local basis state `l` is sent to `map[l]`.
    Permutation { qubits: Vec<usize>, map: Vec<usize> },
    /// `inner` applied only where every `(qubit, value)` control matches.
    Controlled { controls: Vec<(usize, bool)>, inner: Box<GateAction> },
    /// Actions applied left to right.
    Sequence(Vec<GateAction>),
}

impl GateAction {
    /// Dense gate, validated for shape, distinct qubits and unitarity.
    pub fn dense(qubits: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let g = GateAction::Dense { qubits, matrix };
        g.check_structure()?;
        Ok(g)
    }

    /// Basis permutation, validated to be a bijection.
    pub fn permutation(qubits: Vec<usize>, map: Vec<usize>) -> Result<Self> {
        let g = GateAction::Permutation { qubits, map };
        g.check_structure()?;
        Ok(g)
    }

    pub fn controlled(controls: Vec<(usize, bool)>, inner: GateAction) -> Self {
        GateAction::Controlled { controls, inner: Box::new(inner) }
    }

    /// Shorthand for controls that all require `|1⟩`.
    pub fn controlled_on_ones(controls: &[usize], inner: GateAction) -> Self {
        Self::controlled(controls.iter().map(|&c| (c, true)).collect(), inner)
    }

    /// Controls a register of qubits (MSB first) on holding the integer `value`.
    pub fn controlled_on_value(controls: &[usize], value: usize, inner: GateAction) -> Self {
        let k = controls.len();
        let cs = controls
            .iter()
            .enumerate()
            .map(|(i, &q)| (q, (value >> (k - 1 - i)) & 1 == 1))
            .collect();
        Self::controlled(cs, inner)
    }

    pub fn identity() -> Self {
        GateAction::Sequence(Vec::new())
    }

    /// The inverse action.
    pub fn adjoint(&self) -> GateAction {
        match self {
            GateAction::Dense { qubits, matrix } => GateAction::Dense {
                qubits: qubits.clone(),
                matrix: matrix.adjoint(),
            },
            GateAction::Permutation { qubits, map } => {
                let mut inv = vec![0; map.len()];
                for (l, &m) in map.iter().enumerate() {
                    inv[m] = l;
                }
                GateAction::Permutation { qubits: qubits.clone(), map: inv }
            }
            GateAction::Controlled { controls, inner } => GateAction::Controlled {
                controls: controls.clone(),
                inner: Box::new(inner.adjoint()),
            },
            GateAction::Sequence(seq) => GateAction::Sequence(seq.iter().rev().map(|g| g.adjoint()).collect()),
        }
    }

    /// Re-indexes every qubit by `+offset`, e.g. to move a target-register gate
    /// below an ancilla register.
    pub fn shifted(&self, offset: usize) -> GateAction {
        self.remapped(&|q| q + offset)
    }

    /// Re-indexes every qubit through `f`.
    pub fn remapped(&self, f: &dyn Fn(usize) -> usize) -> GateAction {
        match self {
            GateAction::Dense { qubits, matrix } => GateAction::Dense {
                qubits: qubits.iter().map(|&q| f(q)).collect(),
                matrix: matrix.clone(),
            },
            GateAction::Permutation { qubits, map } => GateAction::Permutation {
                qubits: qubits.iter().map(|&q| f(q)).collect(),
                map: map.clone(),
            },
            GateAction::Controlled { controls, inner } => GateAction::Controlled {
                controls: controls.iter().map(|&(q, v)| (f(q), v)).collect(),
                inner: Box::new(inner.remapped(f)),
            },
            GateAction::Sequence(seq) => GateAction::Sequence(seq.iter().map(|g| g.remapped(f)).collect()),
        }
    }

    /// Every qubit touched, controls included.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_support(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_support(&self, out: &mut Vec<usize>) {
        match self {
            GateAction::Dense { qubits, .. } | GateAction::Permutation { qubits, .. } => out.extend(qubits),
            GateAction::Controlled { controls, inner } => {
                out.extend(controls.iter().map(|c| c.0));
                inner.collect_support(out);
            }
            GateAction::Sequence(seq) => seq.iter().for_each(|g| g.collect_support(out)),
        }
    }

    /// Number of primitive (dense or permutation) gates.
    pub fn primitive_count(&self) -> usize {
        match self {
            GateAction::Dense { .. } | GateAction::Permutation { .. } => 1,
            GateAction::Controlled { inner, .. } => inner.primitive_count(),
            GateAction::Sequence(seq) => seq.iter().map(|g| g.primitive_count()).sum(),
        }
    }

    /// Full `2^n × 2^n` matrix of the action on `num_qubits` qubits.
    pub fn to_matrix(&self, num_qubits: usize) -> Result<CMatrix> {
        let d = 1usize << num_qubits;
        let mut m = CMatrix::zeros(d, d);
        let mut col = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            col.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.apply_to(&mut col, num_qubits)?;
            for i in 0..d {
                m[(i, j)] = col[i];
            }
        }
        Ok(m)
    }

    /// Applies the action to a raw amplitude buffer over `num_qubits` qubits.
    pub fn apply_to(&self, amps: &mut [C64], num_qubits: usize) -> Result<()> {
        if amps.len() != 1usize << num_qubits {
            return Err(Error::Domain("amplitude buffer does not match qubit count".into()));
        }
        self.check_structure()?;
        self.check_range(num_qubits, &[])?;
        self.apply_masked(amps, num_qubits, 0, 0);
        Ok(())
    }

    fn check_structure(&self) -> Result<()> {
        match self {
            GateAction::Dense { qubits, matrix } => {
                check_distinct(qubits)?;
                let d = 1usize << qubits.len();
                if matrix.nrows() != d || matrix.ncols() != d {
                    return Err(Error::Validation(format!(
                        "{}x{} matrix on {} qubits",
                        matrix.nrows(),
                        matrix.ncols(),
                        qubits.len()
                    )));
                }
                if !is_unitary(matrix, MATRIX_TOL) {
                    return Err(Error::Validation("dense gate matrix is not unitary".into()));
                }
                Ok(())
            }
            GateAction::Permutation { qubits, map } => {
                check_distinct(qubits)?;
                let d = 1usize << qubits.len();
                if map.len() != d {
                    return Err(Error::Validation(format!(
                        "permutation of length {} on {} qubits",
                        map.len(),
                        qubits.len()
                    )));
                }
                let mut seen = vec![false; d];
                for &m in map {
                    if m >= d || seen[m] {
                        return Err(Error::Validation("basis map is not a bijection".into()));
                    }
                    seen[m] = true;
                }
                Ok(())
            }
            GateAction::Controlled { controls, inner } => {
                let cq: Vec<usize> = controls.iter().map(|c| c.0).collect();
                check_distinct(&cq)?;
                inner.check_structure()
            }
            GateAction::Sequence(seq) => seq.iter().try_for_each(|g| g.check_structure()),
        }
    }

    fn check_range(&self, num_qubits: usize, controls: &[usize]) -> Result<()> {
        let in_range = |q: usize| -> Result<()> {
            if q >= num_qubits {
                return Err(Error::Domain(format!("qubit {q} out of range for {num_qubits} qubits")));
            }
            if controls.contains(&q) {
                return Err(Error::Validation(format!("qubit {q} is both control and target")));
            }
            Ok(())
        };
        match self {
            GateAction::Dense { qubits, .. } | GateAction::Permutation { qubits, .. } => {
                qubits.iter().try_for_each(|&q| in_range(q))
            }
            GateAction::Controlled { controls: cs, inner } => {
                let mut all = controls.to_vec();
                for &(q, _) in cs {
                    in_range(q)?;
                    all.push(q);
                }
                inner.check_range(num_qubits, &all)
            }
            GateAction::Sequence(seq) => seq.iter().try_for_each(|g| g.check_range(num_qubits, controls)),
        }
    }

    fn apply_masked(&self, amps: &mut [C64], n: usize, cmask: usize, cval: usize) {
        match self {
            GateAction::Dense { qubits, matrix } => {
                let offsets = local_offsets(qubits, n);
                let tmask = *offsets.last().unwrap();
                let d = offsets.len();
                let mut buf = vec![C64::new(0.0, 0.0); d];
                for base in 0..amps.len() {
                    if base & tmask != 0 || base & cmask != cval {
                        continue;
                    }
                    for (b, &o) in buf.iter_mut().zip(&offsets) {
                        *b = amps[base | o];
                    }
                    for (r, &o) in offsets.iter().enumerate() {
                        let mut acc = C64::new(0.0, 0.0);
                        for (c, b) in buf.iter().enumerate() {
                            acc += matrix[(r, c)] * b;
                        }
                        amps[base | o] = acc;
                    }
                }
            }
            GateAction::Permutation { qubits, map } => {
                let offsets = local_offsets(qubits, n);
                let tmask = *offsets.last().unwrap();
                let mut buf = vec![C64::new(0.0, 0.0); offsets.len()];
                for base in 0..amps.len() {
                    if base & tmask != 0 || base & cmask != cval {
                        continue;
                    }
                    for (l, &o) in offsets.iter().enumerate() {
                        buf[map[l]] = amps[base | o];
                    }
                    for (b, &o) in buf.iter().zip(&offsets) {
                        amps[base | o] = *b;
                    }
                }
            }
            GateAction::Controlled { controls, inner } => {
                let (mut m, mut v) = (cmask, cval);
                for &(q, want) in controls {
                    let bit = 1usize << (n - 1 - q);
                    m |= bit;
                    if want {
                        v |= bit;
                    }
                }
                inner.apply_masked(amps, n, m, v);
            }
            GateAction::Sequence(seq) => {
                for g in seq {
                    g.apply_masked(amps, n, cmask, cval);
                }
            }
        }
    }
}

/// Global index offset of every local basis state (first qubit = local MSB).
fn local_offsets(qubits: &[usize], n: usize) -> Vec<usize> {
    let m = qubits.len();
    (0..1usize << m)
        .map(|l| {
            qubits
                .iter()
                .enumerate()
                .filter(|(i, _)| (l >> (m - 1 - i)) & 1 == 1)
                .fold(0, |acc, (_, &q)| acc | 1 << (n - 1 - q))
        })
        .collect()
}

fn check_distinct(qubits: &[usize]) -> Result<()> {
    for (i, q) in qubits.iter().enumerate() {
        if qubits[..i].contains(q) {
            return Err(Error::Validation(format!("qubit {q} listed twice")));
        }
    }
    Ok(())
}

/// Standard gate matrices and constructors.
pub mod gates {
    use super::super::{c64, CMatrix};
    use super::GateAction;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn identity_matrix(dim: usize) -> CMatrix {
        CMatrix::identity(dim, dim)
    }

    pub fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
    }

    pub fn pauli_y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
    }

    pub fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(-1., 0.)])
    }

    pub fn hadamard() -> CMatrix {
        let h = FRAC_1_SQRT_2;
        CMatrix::from_row_slice(2, 2, &[c64(h, 0.), c64(h, 0.), c64(h, 0.), c64(-h, 0.)])
    }

    /// diag(1, e^{iφ}).
    pub fn phase(phi: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(1., 0.), c64(0., 0.), c64(0., 0.), c64(phi.cos(), phi.sin())])
    }

    /// exp(−iθ/2 (n·σ)) for a unit axis `n`.
    pub fn rotation(axis: [f64; 3], theta: f64) -> CMatrix {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let [nx, ny, nz] = axis;
        CMatrix::from_row_slice(
            2,
            2,
            &[c64(c, -s * nz), c64(-s * ny, -s * nx), c64(s * ny, -s * nx), c64(c, s * nz)],
        )
    }

    pub fn h(q: usize) -> GateAction {
        GateAction::Dense { qubits: vec![q], matrix: hadamard() }
    }

    pub fn x(q: usize) -> GateAction {
        GateAction::Permutation { qubits: vec![q], map: vec![1, 0] }
    }

    pub fn y(q: usize) -> GateAction {
        GateAction::Dense { qubits: vec![q], matrix: pauli_y() }
    }

    pub fn z(q: usize) -> GateAction {
        GateAction::Dense { qubits: vec![q], matrix: pauli_z() }
    }

    pub fn cnot(control: usize, target: usize) -> GateAction {
        GateAction::controlled_on_ones(&[control], x(target))
    }

    /// Multi-controlled X on `target`, all controls on `|1⟩`.
    pub fn mcx(controls: &[usize], target: usize) -> GateAction {
        GateAction::controlled_on_ones(controls, x(target))
    }
}
