use crate::error::{Error, Result};
use crate::qsim::{expectation_value, inner_product, GateAction, Observable, Statevector, POST_SELECT_THRESHOLD};
use std::f64::consts::FRAC_PI_4;

/// The three terms of the β = 1/2 residual loss `⟨O⟩` after `W2 (I + W1)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossDecomposition {
    /// `⟨ψ|W2† O W2|ψ⟩`, the shallow branch.
    pub l_no_bp: f64,
    /// `⟨ψ|W1† W2† O W2 W1|ψ⟩`, the deep branch.
    pub l_bp: f64,
    /// `2 Re⟨ψ|W2† O W2 W1|ψ⟩`, the cross term.
    pub l_nonunitary: f64,
    /// `(l_no_bp + l_bp + l_nonunitary) / (4 Ω′²)`; NaN when the branch is impossible.
    pub total_normalized: f64,
    /// `‖(ψ + W1ψ)/2‖²`, the success probability of the residual layer.
    pub omega_prime_sq: f64,
}

impl LossDecomposition {
    pub fn branch_impossible(&self) -> bool {
        self.omega_prime_sq < POST_SELECT_THRESHOLD
    }
}

pub fn loss_decomposition(
    psi0: &Statevector,
    w1: &GateAction,
    w2: &GateAction,
    obs: &Observable,
) -> Result<LossDecomposition> {
    let mut w1_psi = psi0.clone();
    w1_psi.apply(w1)?;
    decompose_with(psi0, &w1_psi, w2, obs)
}

/// Same as [`loss_decomposition`] with `W1|ψ⟩` precomputed.
pub(crate) fn decompose_with(
    psi0: &Statevector,
    w1_psi: &Statevector,
    w2: &GateAction,
    obs: &Observable,
) -> Result<LossDecomposition> {
    let mut shallow = psi0.clone();
    shallow.apply(w2)?;
    let mut deep = w1_psi.clone();
    deep.apply(w2)?;
    let l_no_bp = expectation_value(&shallow, obs)?;
    let l_bp = expectation_value(&deep, obs)?;
    let l_nonunitary = 2.0 * inner_product(&shallow, &obs.apply(&deep)?)?.re;
    let omega_prime_sq = psi0.add(w1_psi)?.norm_sqr() / 4.0;
    let total_normalized = if omega_prime_sq < POST_SELECT_THRESHOLD {
        f64::NAN
    } else {
        (l_no_bp + l_bp + l_nonunitary) / (4.0 * omega_prime_sq)
    };
    Ok(LossDecomposition {
        l_no_bp,
        l_bp,
        l_nonunitary,
        total_normalized,
        omega_prime_sq,
    })
}

/// Central finite difference with step 1e-5.
pub fn loss_gradient(loss: &dyn Fn(&[f64]) -> f64, theta: &[f64], index: usize) -> f64 {
    let h = 1e-5;
    let mut t = theta.to_vec();
    t[index] = theta[index] + h;
    let up = loss(&t);
    t[index] = theta[index] - h;
    let down = loss(&t);
    (up - down) / (2.0 * h)
}

/// Exact derivative `f(θ+π/4) − f(θ−π/4)` for a parameter entering through
/// `exp(iθH)` with `H² = I`.
pub fn shift_rule_gradient(loss: &dyn Fn(&[f64]) -> f64, theta: &[f64], index: usize) -> f64 {
    let mut t = theta.to_vec();
    t[index] = theta[index] + FRAC_PI_4;
    let up = loss(&t);
    t[index] = theta[index] - FRAC_PI_4;
    let down = loss(&t);
    up - down
}

/// Shift-rule gradient, cross-checked against finite differences to 1e-5.
pub fn checked_gradient(loss: &dyn Fn(&[f64]) -> f64, theta: &[f64], index: usize) -> Result<f64> {
    let exact = shift_rule_gradient(loss, theta, index);
    let fd = loss_gradient(loss, theta, index);
    if (exact - fd).abs() > 1e-5 {
        return Err(Error::Numerical(format!(
            "shift rule {exact} and finite difference {fd} disagree for parameter {index}"
        )));
    }
    Ok(exact)
}
