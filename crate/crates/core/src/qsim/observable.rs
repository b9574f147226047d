use super::{is_hermitian, CMatrix, Statevector, C64, MATRIX_TOL};
use crate::error::{Error, Result};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        use super::gates::*;
        match self {
            Pauli::I => identity_matrix(2),
            Pauli::X => pauli_x(),
            Pauli::Y => pauli_y(),
            Pauli::Z => pauli_z(),
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::Domain(format!("'{other}' is not a Pauli label"))),
        }
    }

    /// Parses a string such as `"YYI"`, one letter per qubit from qubit 0.
    pub fn parse_string(s: &str) -> Result<Vec<Pauli>> {
        s.chars().map(Pauli::from_char).collect()
    }

    /// Dense matrix of a Pauli string.
    pub fn string_matrix(ps: &[Pauli]) -> CMatrix {
        ps.iter().fold(CMatrix::identity(1, 1), |acc, p| acc.kronecker(&p.matrix()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Pauli(Vec<Pauli>),
    Dense(CMatrix),
}

impl Observable {
    pub fn dense(m: CMatrix) -> Result<Self> {
        if !is_hermitian(&m, MATRIX_TOL) {
            return Err(Error::Validation("observable is not Hermitian".into()));
        }
        Ok(Observable::Dense(m))
    }

    pub fn num_qubits(&self) -> Option<usize> {
        match self {
            Observable::Pauli(ps) => Some(ps.len()),
            Observable::Dense(m) => m.nrows().is_power_of_two().then(|| m.nrows().trailing_zeros() as usize),
        }
    }

    pub fn to_matrix(&self) -> CMatrix {
        match self {
            Observable::Pauli(ps) => Pauli::string_matrix(ps),
            Observable::Dense(m) => m.clone(),
        }
    }

    /// `O|ψ⟩`.
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        self.check_size(state)?;
        let amps = state.amplitudes();
        let out = match self {
            Observable::Pauli(ps) => {
                let n = ps.len();
                let mut out = vec![C64::new(0.0, 0.0); amps.len()];
                for (i, a) in amps.iter().enumerate() {
                    let (j, ph) = pauli_action(ps, n, i);
                    out[j] = ph * a;
                }
                out
            }
            Observable::Dense(m) => {
                if !is_hermitian(m, MATRIX_TOL) {
                    return Err(Error::Validation("observable is not Hermitian".into()));
                }
                (0..amps.len())
                    .map(|r| (0..amps.len()).map(|c| m[(r, c)] * amps[c]).sum())
                    .collect()
            }
        };
        Statevector::new(state.num_qubits(), out)
    }

    fn check_size(&self, state: &Statevector) -> Result<()> {
        if self.num_qubits() != Some(state.num_qubits()) {
            return Err(Error::Domain(format!(
                "observable size does not match {}-qubit state",
                state.num_qubits()
            )));
        }
        Ok(())
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(Observable::Pauli(Pauli::parse_string(s)?))
    }
}

/// Image basis index and phase of `P|i⟩`.
fn pauli_action(ps: &[Pauli], n: usize, i: usize) -> (usize, C64) {
    let mut j = i;
    let mut ph = C64::new(1.0, 0.0);
    for (q, p) in ps.iter().enumerate() {
        let bit = 1usize << (n - 1 - q);
        let one = i & bit != 0;
        match p {
            Pauli::I => {}
            Pauli::X => j ^= bit,
            Pauli::Y => {
                j ^= bit;
                ph *= if one { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
            }
            Pauli::Z => {
                if one {
                    ph = -ph;
                }
            }
        }
    }
    (j, ph)
}

/// `⟨ψ|O|ψ⟩`; errors if the imaginary residue exceeds 1e-10.
pub fn expectation_value(state: &Statevector, obs: &Observable) -> Result<f64> {
    let o_psi = obs.apply(state)?;
    let v = super::inner_product(state, &o_psi)?;
    if v.im.abs() > 1e-10 * state.norm_sqr().max(1.0) {
        return Err(Error::Validation(format!("expectation has imaginary part {}", v.im)));
    }
    Ok(v.re)
}
