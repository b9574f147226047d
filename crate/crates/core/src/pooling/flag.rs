use crate::error::{Error, Result};
use crate::qsim::{post_select_register, prepare_basis_state, GateAction, Register, Statevector};

/// Discards pixels whose window would run past the original image: keeps
/// `x ≤ N − D` and `y ≤ N − D`. Two flag qubits are raised by comparator
/// permutations and post-selected on `|00⟩`.
pub fn flag_discard(state: &Statevector, original_extent: usize, d: usize) -> Result<(Statevector, f64)> {
    let circuit = flag_discard_circuit(state.num_qubits(), original_extent, d)?;
    let mut joint = prepare_basis_state(2, 0)?.tensor(state);
    joint.apply_all(&circuit)?;
    post_select_register(&joint, &Register::new("flags", 0, 2), 0)
}

/// Comparator gates on `[flag_x, flag_y, x…, y…]`: flag ^= [coordinate > N − D].
pub fn flag_discard_circuit(image_qubits: usize, original_extent: usize, d: usize) -> Result<Vec<GateAction>> {
    if image_qubits % 2 != 0 {
        return Err(Error::Domain("an image state needs an even qubit count".into()));
    }
    let bits = image_qubits / 2;
    if d == 0 || d > original_extent || original_extent > 1 << bits {
        return Err(Error::Domain(format!(
            "window {d} and extent {original_extent} invalid for a {}-wide grid",
            1 << bits
        )));
    }
    let limit = original_extent - d;
    let dim = 1usize << (bits + 1);
    // local index = (coordinate << 1) | flag
    let map: Vec<usize> = (0..dim).map(|l| if l >> 1 > limit { l ^ 1 } else { l }).collect();
    let x: Vec<usize> = (2..2 + bits).chain([0]).collect();
    let y: Vec<usize> = (2 + bits..2 + 2 * bits).chain([1]).collect();
    Ok(vec![GateAction::permutation(x, map.clone())?, GateAction::permutation(y, map)?])
}
