use super::{GateAction, C64, POST_SELECT_THRESHOLD};
use crate::error::{Error, Result};

/// Complex amplitude vector over `num_qubits` qubits (qubit 0 = most significant bit).
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl Statevector {
    pub fn new(num_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << num_qubits {
            return Err(Error::Domain(format!(
                "{} amplitudes cannot describe {num_qubits} qubits",
                amps.len()
            )));
        }
        Ok(Statevector { num_qubits, amps })
    }

    /// Builds a state from real amplitudes.
    pub fn from_real(num_qubits: usize, amps: &[f64]) -> Result<Self> {
        Self::new(num_qubits, amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Infers the qubit count from a power-of-two length.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::Domain(format!("length {} is not a power of two", amps.len())));
        }
        let n = amps.len().trailing_zeros() as usize;
        Self::new(n, amps)
    }

    pub fn zero(num_qubits: usize) -> Self {
        Statevector {
            num_qubits,
            amps: vec![C64::new(0.0, 0.0); 1 << num_qubits],
        }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        prepare_basis_state(num_qubits, index)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm; a (numerically) zero vector cannot be normalized.
    pub fn normalize(&mut self) -> Result<f64> {
        let n2 = self.norm_sqr();
        if n2 < POST_SELECT_THRESHOLD {
            return Err(Error::post_selection(n2));
        }
        let inv = 1.0 / n2.sqrt();
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(n2)
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, factor: C64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// `self + other`, both over the same qubits.
    pub fn add(&self, other: &Statevector) -> Result<Statevector> {
        self.check_same_size(other)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(Statevector { num_qubits: self.num_qubits, amps })
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: C64, other: &Statevector) -> Result<()> {
        self.check_same_size(other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Tensor product with `self` on the leading (most significant) qubits.
    pub fn tensor(&self, other: &Statevector) -> Statevector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Statevector {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        }
    }

    pub fn inner(&self, other: &Statevector) -> Result<C64> {
        inner_product(self, other)
    }

    /// Largest elementwise amplitude difference.
    pub fn max_abs_diff(&self, other: &Statevector) -> Result<f64> {
        self.check_same_size(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Difference to `other` after removing the best global phase.
    pub fn phase_insensitive_distance(&self, other: &Statevector) -> Result<f64> {
        let ov = inner_product(other, self)?;
        let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
        let mut rotated = self.clone();
        rotated.scale(phase);
        rotated.max_abs_diff(other)
    }

    /// Applies `action` in place.
    pub fn apply(&mut self, action: &GateAction) -> Result<()> {
        action.apply_to(&mut self.amps, self.num_qubits)
    }

    /// Applies a list of actions in order.
    pub fn apply_all<'a>(&mut self, actions: impl IntoIterator<Item = &'a GateAction>) -> Result<()> {
        for a in actions {
            self.apply(a)?;
        }
        Ok(())
    }

    /// Marginal outcome distribution of a contiguous register.
    pub fn register_probabilities(&self, register: &Register) -> Result<Vec<f64>> {
        register.check_within(self.num_qubits)?;
        let shift = self.num_qubits - register.start - register.len;
        let mask = (1usize << register.len) - 1;
        let mut probs = vec![0.0; 1 << register.len];
        for (i, a) in self.amps.iter().enumerate() {
            probs[(i >> shift) & mask] += a.norm_sqr();
        }
        Ok(probs)
    }

    fn check_same_size(&self, other: &Statevector) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::Domain(format!(
                "qubit count mismatch: {} vs {}",
                self.num_qubits, other.num_qubits
            )));
        }
        Ok(())
    }
}

/// Computational basis state `|index⟩` on `num_qubits` qubits.
pub fn prepare_basis_state(num_qubits: usize, index: usize) -> Result<Statevector> {
    if num_qubits >= usize::BITS as usize || index >= 1usize << num_qubits {
        return Err(Error::Domain(format!(
            "basis index {index} out of range for {num_qubits} qubits"
        )));
    }
    let mut s = Statevector::zero(num_qubits);
    s.amps[index] = C64::new(1.0, 0.0);
    Ok(s)
}

/// `⟨a|b⟩`, conjugating the left argument.
pub fn inner_product(a: &Statevector, b: &Statevector) -> Result<C64> {
    a.check_same_size(b)?;
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// A named contiguous run of qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, start: usize, len: usize) -> Self {
        Register { name: name.into(), start, len }
    }

    pub fn dim(&self) -> usize {
        1 << self.len
    }

    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }

    fn check_within(&self, num_qubits: usize) -> Result<()> {
        if self.start + self.len > num_qubits {
            return Err(Error::Domain(format!(
                "register '{}' [{}, {}) exceeds {num_qubits} qubits",
                self.name,
                self.start,
                self.start + self.len
            )));
        }
        Ok(())
    }
}

/// Disjoint registers covering `[0, num_qubits)` in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    /// Lays registers out contiguously from qubit 0.
    pub fn new(specs: &[(&str, usize)]) -> Result<Self> {
        let mut registers = Vec::with_capacity(specs.len());
        let mut start = 0;
        for &(name, len) in specs {
            if registers.iter().any(|r: &Register| r.name == name) {
                return Err(Error::Domain(format!("duplicate register name '{name}'")));
            }
            registers.push(Register::new(name, start, len));
            start += len;
        }
        Ok(RegisterLayout { registers })
    }

    pub fn num_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.len).sum()
    }

    pub fn get(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Domain(format!("no register named '{name}'")))
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }
}

/// Projects `register` onto `outcome`, returning the renormalized state on the
/// remaining qubits (in their original order) and the branch probability.
pub fn post_select_register(
    state: &Statevector,
    register: &Register,
    outcome: usize,
) -> Result<(Statevector, f64)> {
    let (unnormalized, p) = project_register(state, register, outcome)?;
    if p < POST_SELECT_THRESHOLD {
        return Err(Error::post_selection(p));
    }
    let mut out = unnormalized;
    out.scale(C64::new(1.0 / p.sqrt(), 0.0));
    Ok((out, p))
}

/// Unnormalized conditional amplitudes for `register = outcome` and their squared norm.
pub fn project_register(
    state: &Statevector,
    register: &Register,
    outcome: usize,
) -> Result<(Statevector, f64)> {
    register.check_within(state.num_qubits)?;
    if outcome >= register.dim() {
        return Err(Error::Domain(format!(
            "outcome {outcome} out of range for register '{}' of {} qubits",
            register.name, register.len
        )));
    }
    let n = state.num_qubits;
    let low_bits = n - register.start - register.len;
    let high_bits = register.start;
    let rest = n - register.len;
    let mut amps = Vec::with_capacity(1 << rest);
    for high in 0..(1usize << high_bits) {
        for low in 0..(1usize << low_bits) {
            let idx = (high << (register.len + low_bits)) | (outcome << low_bits) | low;
            amps.push(state.amps[idx]);
        }
    }
    let out = Statevector { num_qubits: rest, amps };
    let p = out.norm_sqr();
    Ok((out, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> Statevector {
        Statevector::from_real(2, &[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
    }

    #[test]
    fn basis_states() {
        let s = prepare_basis_state(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let s = prepare_basis_state(2, 3).unwrap();
        assert_eq!(s.amplitudes()[3], C64::new(1.0, 0.0));
        assert!(s.is_normalized(1e-12));
        let s = prepare_basis_state(3, 5).unwrap();
        assert_eq!(s.amplitudes()[5], C64::new(1.0, 0.0));
        assert!(matches!(prepare_basis_state(2, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn inner_products() {
        let zero = prepare_basis_state(1, 0).unwrap();
        let plus = Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!((inner_product(&zero, &plus).unwrap() - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((inner_product(&plus, &plus).unwrap().re - 1.0).abs() < 1e-15);
        let a = prepare_basis_state(2, 1).unwrap();
        let b = prepare_basis_state(2, 2).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), C64::new(0.0, 0.0));
        assert!(inner_product(&a, &zero).is_err());
    }

    #[test]
    fn inner_product_conjugates_left() {
        let a = Statevector::new(1, vec![C64::new(0.0, 1.0), C64::new(0.0, 0.0)]).unwrap();
        let b = prepare_basis_state(1, 0).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), C64::new(0.0, -1.0));
    }

    #[test]
    fn post_select_bell() {
        let q0 = Register::new("q0", 0, 1);
        let (s, p) = post_select_register(&bell(), &q0, 0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(s.num_qubits(), 1);
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn post_select_zero_overlap() {
        let s = prepare_basis_state(2, 1).unwrap(); // |01⟩
        let q0 = Register::new("q0", 0, 1);
        assert!(post_select_register(&s, &q0, 1).unwrap_err().is_post_selection());
    }

    #[test]
    fn post_select_born_rule() {
        // √0.25|0⟩|φ⟩ + √0.75|1⟩|χ⟩ with φ = |+⟩, χ = |1⟩
        let phi = Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let chi = prepare_basis_state(1, 1).unwrap();
        let mut s = prepare_basis_state(1, 0).unwrap().tensor(&phi);
        s.scale(C64::new(0.5, 0.0));
        s.axpy(C64::new(0.75f64.sqrt(), 0.0), &prepare_basis_state(1, 1).unwrap().tensor(&chi))
            .unwrap();
        let (post, p) = post_select_register(&s, &Register::new("a", 0, 1), 0).unwrap();
        assert!((p - 0.25).abs() < 1e-14);
        assert!(post.max_abs_diff(&phi).unwrap() < 1e-14);
    }

    #[test]
    fn post_select_middle_register_keeps_order() {
        // |q0 q1 q2⟩ = |1 0 1⟩ → select q1 = 0 leaves |q0 q2⟩ = |11⟩
        let s = prepare_basis_state(3, 0b101).unwrap();
        let (post, p) = post_select_register(&s, &Register::new("m", 1, 1), 0).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(post.amplitudes()[3], C64::new(1.0, 0.0));
    }

    #[test]
    fn layout_lookup() {
        let layout = RegisterLayout::new(&[("anc", 2), ("x", 3), ("y", 3)]).unwrap();
        assert_eq!(layout.num_qubits(), 8);
        assert_eq!(layout.get("y").unwrap().start, 5);
        assert!(layout.get("z").is_err());
        assert!(RegisterLayout::new(&[("a", 1), ("a", 2)]).is_err());
    }
}
