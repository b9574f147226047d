use crate::error::{Error, Result};
use crate::qsim::{CMatrix, GateAction, Pauli, Statevector, C64};
use rand::Rng;
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

/// Two-qubit Pauli product `P_a ⊗ P_b` used as a gate generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Generator(pub Pauli, pub Pauli);

impl Generator {
    pub fn matrix(&self) -> CMatrix {
        self.0.matrix().kronecker(&self.1.matrix())
    }

    /// `exp(iθ H) = cos θ I + i sin θ H` (valid because `H² = I`).
    pub fn gate_matrix(&self, theta: f64) -> CMatrix {
        let h = self.matrix();
        CMatrix::identity(4, 4) * C64::new(theta.cos(), 0.0) + h * C64::new(0.0, theta.sin())
    }
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let ps = Pauli::parse_string(s)?;
        match ps[..] {
            [a, b] => Ok(Generator(a, b)),
            _ => Err(Error::Domain(format!("generator '{s}' must name two Paulis"))),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.0, self.1)
    }
}

/// Layered ansatz of parameterised two-qubit gates `exp(iθ H)`.
///
/// Each sublayer applies, for every generator in order, the gate on the pairs
/// (0,1), (2,3), ... and then on (1,2), (3,4), .... Zero sublayers gives the
/// identity circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCircuit {
    num_qubits: usize,
    generators: Vec<Generator>,
    sublayers: usize,
    params: Vec<f64>,
}

impl ParamCircuit {
    pub fn new(num_qubits: usize, generators: Vec<Generator>, sublayers: usize, params: Vec<f64>) -> Result<Self> {
        if num_qubits < 2 {
            return Err(Error::Domain("a two-qubit gate ansatz needs at least 2 qubits".into()));
        }
        let expected = Self::param_count(num_qubits, generators.len(), sublayers);
        if params.len() != expected {
            return Err(Error::Domain(format!("{} params given, circuit needs {expected}", params.len())));
        }
        Ok(ParamCircuit {
            num_qubits,
            generators,
            sublayers,
            params,
        })
    }

    /// Parameters drawn uniformly from `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(num_qubits: usize, generators: Vec<Generator>, sublayers: usize, rng: &mut R) -> Result<Self> {
        let count = Self::param_count(num_qubits, generators.len(), sublayers);
        let params = (0..count).map(|_| rng.gen_range(0.0..TAU)).collect();
        Self::new(num_qubits, generators, sublayers, params)
    }

    pub fn param_count(num_qubits: usize, generators: usize, sublayers: usize) -> usize {
        sublayers * generators * num_qubits.saturating_sub(1)
    }

    /// Pairs in application order within one generator block.
    pub fn pairs(num_qubits: usize) -> Vec<(usize, usize)> {
        let odd = (0..num_qubits.saturating_sub(1)).step_by(2);
        let even = (1..num_qubits.saturating_sub(1)).step_by(2);
        odd.chain(even).map(|j| (j, j + 1)).collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn sublayers(&self) -> usize {
        self.sublayers
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.num_qubits, self.generators.clone(), self.sublayers, params)
    }

    pub fn gates(&self) -> Vec<GateAction> {
        let pairs = Self::pairs(self.num_qubits);
        let mut out = Vec::with_capacity(self.params.len());
        let mut it = self.params.iter();
        for _ in 0..self.sublayers {
            for g in &self.generators {
                for &(a, b) in &pairs {
                    let theta = *it.next().expect("param count checked at construction");
                    out.push(GateAction::Dense {
                        qubits: vec![a, b],
                        matrix: g.gate_matrix(theta),
                    });
                }
            }
        }
        out
    }

    /// Gate list of one sublayer, for building deeper layers sublayer by sublayer.
    pub fn sublayer_gates(&self, index: usize) -> Vec<GateAction> {
        let per = self.generators.len() * (self.num_qubits - 1);
        self.gates().into_iter().skip(index * per).take(per).collect()
    }

    pub fn to_gate(&self) -> GateAction {
        GateAction::Sequence(self.gates())
    }

    pub fn apply(&self, state: &mut Statevector) -> Result<()> {
        state.apply_all(&self.gates())
    }
}

/// Parses a list such as `["XY", "YX"]`.
pub(crate) fn parse_generators(names: &[String]) -> Result<Vec<Generator>> {
    names.iter().map(|s| s.parse()).collect()
}
