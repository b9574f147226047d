//! Dense statevector simulation.
//!
//! Basis indices follow a fixed convention throughout the crate: qubit 0 is the
//! most significant bit of the amplitude index. On an `n`-qubit state, qubit `q`
//! therefore lives at bit position `n - 1 - q`. Every register (ancilla, image
//! axis, qudit) is a contiguous run of qubits, read MSB-first.

mod gate;
mod haar;
mod linalg;
mod observable;
mod state;

pub use gate::{gates, GateAction};
pub use haar::{haar_random_unitary, haar_unitary_with};
pub use linalg::{complete_to_unitary, is_hermitian, is_unitary, kron, unitary_with_first_column};
pub use observable::{expectation_value, Observable, Pauli};
pub use state::{inner_product, post_select_register, prepare_basis_state, Register, RegisterLayout, Statevector};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Unitarity / hermiticity tolerance for matrices supplied by callers.
pub const MATRIX_TOL: f64 = 1e-10;
/// Post-selection branches below this probability are treated as impossible.
pub const POST_SELECT_THRESHOLD: f64 = 1e-14;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Applies `action` to a copy of `state`.
pub fn apply_gate(state: &Statevector, action: &GateAction) -> crate::Result<Statevector> {
    let mut out = state.clone();
    out.apply(action)?;
    Ok(out)
}
