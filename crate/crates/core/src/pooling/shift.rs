use crate::error::{Error, Result};
use crate::qsim::{gates, GateAction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Add,
    Subtract,
}

/// Cyclic `i → i ± amount (mod 2^width)` on one axis register.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftOp {
    pub axis: Axis,
    pub amount: usize,
    pub direction: Direction,
}

impl ShiftOp {
    pub fn add(axis: Axis, amount: usize) -> Self {
        ShiftOp { axis, amount, direction: Direction::Add }
    }

    pub fn subtract(axis: Axis, amount: usize) -> Self {
        ShiftOp { axis, amount, direction: Direction::Subtract }
    }

    /// Permutation on `qubits` (MSB first).
    pub fn on(&self, qubits: &[usize]) -> Result<GateAction> {
        let d = 1usize << qubits.len();
        if self.amount >= d {
            return Err(Error::Domain(format!("shift {} not below register dimension {d}", self.amount)));
        }
        let map = (0..d)
            .map(|i| match self.direction {
                Direction::Add => (i + self.amount) % d,
                Direction::Subtract => (i + d - self.amount) % d,
            })
            .collect();
        GateAction::permutation(qubits.to_vec(), map)
    }
}

/// The shift as a permutation on qubits `0..width`.
pub fn shift_operator(op: &ShiftOp, width: usize) -> Result<GateAction> {
    op.on(&(0..width).collect::<Vec<_>>())
}

/// Add-1 on qubits `0..width` (qubit 0 most significant) as a cascade of
/// multi-controlled X gates: bit `k` flips when every less significant bit is 1,
/// processed from the most significant bit down.
pub fn lower_increment_circuit(width: usize) -> Result<Vec<GateAction>> {
    if width == 0 {
        return Err(Error::Domain("register width must be at least 1".into()));
    }
    Ok((0..width)
        .map(|k| {
            let controls: Vec<usize> = (k + 1..width).collect();
            if controls.is_empty() {
                gates::x(k)
            } else {
                gates::mcx(&controls, k)
            }
        })
        .collect())
}

/// Subtract-1: the increment cascade in reverse order.
pub fn lower_decrement_circuit(width: usize) -> Result<Vec<GateAction>> {
    let mut g = lower_increment_circuit(width)?;
    g.reverse();
    Ok(g)
}

/// Constant in the `≤ c · width²` bound of [`increment_basic_op_estimate`].
pub const BASIC_OPS_PER_WIDTH_SQ: usize = 30;

/// Basic-gate estimate for the increment cascade. An X or CNOT counts 1; a
/// `c`-controlled X with `c ≥ 2` is costed as a V-chain of `2c − 3` Toffolis
/// (using `c − 2` borrowed ancillas) at 15 one- and two-qubit gates each.
pub fn increment_basic_op_estimate(width: usize) -> usize {
    (0..width).map(|c| if c <= 1 { 1 } else { 15 * (2 * c - 3) }).sum()
}
