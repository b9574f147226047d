use super::{
    amplitude_encode_image, classical_conv_oracle, classical_pool_oracle, shift::ShiftOp, Axis, BoundaryMode, FilterSpec,
    ImageGrid, PoolingSpec,
};
use crate::error::{Error, Result};
use crate::lcu::{run_lcu, LcuOutcome, LcuProgram};
use crate::qsim::{complete_to_unitary, CVector, GateAction, Statevector, C64};

/// How ancilla states whose composed shift would exceed the window are handled
/// when `D` is not a power of two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DegeneracyScheme {
    /// Control amounts `2^{l−1}, …, 2, 1`; states with composed shift `≥ D`
    /// get zero amplitude.
    #[default]
    ZeroHighShifts,
    /// Control amounts `D − 2^{l−1}, 2^{l−2}, …, 1`; for every shift reached by
    /// two ancilla states, the later state gets zero amplitude.
    AdjustedFinal,
}

/// Per-axis ancilla preparation: control amount of each ancilla qubit (most
/// significant first) and the amplitude of every ancilla basis state.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisPrep {
    pub amounts: Vec<usize>,
    pub amplitudes: Vec<C64>,
}

impl AxisPrep {
    pub fn ancillas(&self) -> usize {
        self.amounts.len()
    }

    /// Total subtraction applied when the axis ancillas hold `state`.
    pub fn composed_shift(&self, state: usize) -> usize {
        let l = self.amounts.len();
        (0..l).filter(|i| state >> (l - 1 - i) & 1 == 1).map(|i| self.amounts[i]).sum()
    }

    /// Effective weight of each shift `0..=max`.
    pub fn shift_histogram(&self) -> Vec<f64> {
        let mut h = Vec::new();
        for (a, amp) in self.amplitudes.iter().enumerate() {
            let s = self.composed_shift(a);
            if h.len() <= s {
                h.resize(s + 1, 0.0);
            }
            h[s] += amp.norm_sqr();
        }
        h
    }
}

/// `⌈log₂ d⌉` (zero for `d ≤ 1`).
pub fn axis_ancillas(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        d.next_power_of_two().trailing_zeros() as usize
    }
}

pub fn axis_prep(d: usize, scheme: DegeneracyScheme) -> Result<AxisPrep> {
    axis_prep_with(d, axis_ancillas(d), scheme)
}

/// Preparation over `l` ancillas realising `(1/d) Σ_{Δ<d} T_Δ`; requires
/// `2^{l−1} < d ≤ 2^l`.
pub fn axis_prep_with(d: usize, l: usize, scheme: DegeneracyScheme) -> Result<AxisPrep> {
    if d == 0 || axis_ancillas(d) != l {
        return Err(Error::Domain(format!("{l} ancillas do not fit a window of {d}")));
    }
    if l == 0 {
        return Ok(AxisPrep { amounts: vec![], amplitudes: vec![C64::new(1.0, 0.0)] });
    }
    let mut amounts: Vec<usize> = (0..l).map(|i| 1 << (l - 1 - i)).collect();
    if scheme == DegeneracyScheme::AdjustedFinal {
        amounts[0] = d - (1 << (l - 1));
    }
    let mut prep = AxisPrep {
        amounts,
        amplitudes: vec![C64::new(0.0, 0.0); 1 << l],
    };
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let mut seen = vec![false; d];
    for a in 0..1usize << l {
        let s = prep.composed_shift(a);
        if s < d && !seen[s] {
            seen[s] = true;
            prep.amplitudes[a] = amp;
        }
    }
    Ok(prep)
}

/// Default-scheme amplitudes over `2^l` ancilla states.
pub fn prep_amplitudes_degeneracy_free(d: usize, l: usize) -> Result<Vec<C64>> {
    Ok(axis_prep_with(d, l, DegeneracyScheme::ZeroHighShifts)?.amplitudes)
}

/// A pooling/convolution LCU together with its register bookkeeping.
///
/// Joint register: x ancillas, y ancillas, x axis, y axis.
#[derive(Clone, Debug)]
pub struct PoolProgram {
    pub program: LcuProgram,
    pub bits: usize,
    pub ancillas_per_axis: usize,
    pub amounts: Vec<usize>,
}

impl PoolProgram {
    /// Select-stage gates that act on the given axis register.
    pub fn controlled_shift_count(&self, axis: Axis) -> usize {
        let l = self.ancillas_per_axis;
        let anc = match axis {
            Axis::X => 0..l,
            Axis::Y => l..2 * l,
        };
        self.program
            .select_circuit()
            .unwrap_or(&[])
            .iter()
            .filter(|g| matches!(g, GateAction::Controlled { controls, .. } if controls.len() == 1 && anc.contains(&controls[0].0)))
            .count()
    }

    /// Shift terms in the select table (the count a one-gate-per-term select would need).
    pub fn select_term_count(&self) -> usize {
        let weights = self.program.branch_weights().unwrap_or_default();
        weights.iter().filter(|w| w.norm() > 0.0).count()
    }
}

fn axis_qubits(axis: Axis, bits: usize) -> Vec<usize> {
    match axis {
        Axis::X => (0..bits).collect(),
        Axis::Y => (bits..2 * bits).collect(),
    }
}

/// Select table entry for composed shifts `(sx, sy)`.
fn shift_pair(sx: usize, sy: usize, bits: usize) -> Result<Option<GateAction>> {
    let mut seq = Vec::new();
    if sx > 0 {
        seq.push(ShiftOp::subtract(Axis::X, sx).on(&axis_qubits(Axis::X, bits))?);
    }
    if sy > 0 {
        seq.push(ShiftOp::subtract(Axis::Y, sy).on(&axis_qubits(Axis::Y, bits))?);
    }
    Ok((!seq.is_empty()).then_some(GateAction::Sequence(seq)))
}

fn build_program(joint_amplitudes: Option<&[C64]>, axis: &AxisPrep, bits: usize) -> Result<PoolProgram> {
    let l = axis.ancillas();
    let k = 2 * l;
    let prepare = match joint_amplitudes {
        None if l > 0 => {
            let u = complete_to_unitary(&[CVector::from_column_slice(&axis.amplitudes)], 1 << l)?;
            vec![
                GateAction::dense((0..l).collect(), u.clone())?,
                GateAction::dense((l..k).collect(), u)?,
            ]
        }
        Some(amps) if l > 0 => {
            let u = complete_to_unitary(&[CVector::from_column_slice(amps)], 1 << k)?;
            vec![GateAction::dense((0..k).collect(), u)?]
        }
        _ => vec![],
    };
    let unprepare = prepare.iter().rev().map(|g| g.adjoint()).collect();
    let mut unitaries = Vec::new();
    let mut select = Vec::with_capacity(1 << k);
    for ax in 0..1usize << l {
        for ay in 0..1usize << l {
            let gate = shift_pair(axis.composed_shift(ax) % (1 << bits), axis.composed_shift(ay) % (1 << bits), bits)?;
            select.push(gate.map(|g| {
                unitaries.push(g);
                unitaries.len() - 1
            }));
        }
    }
    let mut circuit = Vec::with_capacity(k);
    for (i, &amount) in axis.amounts.iter().enumerate() {
        let x = ShiftOp::subtract(Axis::X, amount % (1 << bits)).on(&axis_qubits(Axis::X, bits))?;
        circuit.push(GateAction::controlled(vec![(i, true)], x.shifted(k)));
    }
    for (i, &amount) in axis.amounts.iter().enumerate() {
        let y = ShiftOp::subtract(Axis::Y, amount % (1 << bits)).on(&axis_qubits(Axis::Y, bits))?;
        circuit.push(GateAction::controlled(vec![(l + i, true)], y.shifted(k)));
    }
    let program = LcuProgram::new(k, prepare, unprepare, unitaries, select)?.with_select_circuit(circuit);
    Ok(PoolProgram {
        program,
        bits,
        ancillas_per_axis: l,
        amounts: axis.amounts.clone(),
    })
}

/// Average-pooling program on a `2^bits × 2^bits` grid with the default
/// degeneracy scheme.
pub fn build_pool_program(spec: &PoolingSpec, n_side_bits: usize) -> Result<PoolProgram> {
    build_pool_program_with(spec, n_side_bits, DegeneracyScheme::default())
}

pub fn build_pool_program_with(spec: &PoolingSpec, n_side_bits: usize, scheme: DegeneracyScheme) -> Result<PoolProgram> {
    spec.validate(1 << n_side_bits)?;
    build_program(None, &axis_prep(spec.d, scheme)?, n_side_bits)
}

/// Convolution program: the ancilla state selecting shift `(Δx, Δy)` carries
/// amplitude `sqrt(ω_{Δx,Δy} / Σω)`.
pub fn build_conv_program(filter: &FilterSpec, n_side_bits: usize) -> Result<PoolProgram> {
    let d = filter.d();
    if d > 1 << n_side_bits {
        return Err(Error::Domain(format!("filter side {d} exceeds the grid")));
    }
    let axis = axis_prep(d, DegeneracyScheme::ZeroHighShifts)?;
    let l = axis.ancillas();
    let total = filter.total();
    let mut amps = vec![C64::new(0.0, 0.0); 1 << (2 * l)];
    for ax in 0..1usize << l {
        for ay in 0..1usize << l {
            let (sx, sy) = (axis.composed_shift(ax), axis.composed_shift(ay));
            if sx < d && sy < d {
                amps[(ax << l) | ay] = C64::new((filter.weight(sx, sy) / total).sqrt(), 0.0);
            }
        }
    }
    build_program(Some(&amps), &axis, n_side_bits)
}

/// Copies an image state on a `2^bits` grid into the top-left of a `2^new_bits` grid.
pub fn embed_state(state: &Statevector, new_bits: usize) -> Result<Statevector> {
    let bits = state.num_qubits() / 2;
    if new_bits < bits || state.num_qubits() % 2 != 0 {
        return Err(Error::Domain("cannot embed image state into a smaller grid".into()));
    }
    let (n, m) = (1usize << bits, 1usize << new_bits);
    let mut out = Statevector::zero(2 * new_bits);
    for i in 0..n {
        for j in 0..n {
            out.amplitudes_mut()[i * m + j] = state.amplitudes()[i * n + j];
        }
    }
    Ok(out)
}

/// Amplitudes of the top-left `n × n` region (row-major), not renormalized.
pub fn restrict_state(state: &Statevector, n: usize) -> Vec<C64> {
    let m = 1usize << (state.num_qubits() / 2);
    (0..n).flat_map(|i| (0..n).map(move |j| i * m + j)).map(|idx| state.amplitudes()[idx]).collect()
}

fn run_on_grid(state: &Statevector, d: usize, mode: BoundaryMode, build: impl Fn(usize) -> Result<PoolProgram>) -> Result<LcuOutcome> {
    if state.num_qubits() % 2 != 0 {
        return Err(Error::Domain("an image state needs an even qubit count".into()));
    }
    let bits = state.num_qubits() / 2;
    let n = 1usize << bits;
    let working = match mode {
        BoundaryMode::Periodic => state.clone(),
        BoundaryMode::ZeroPadded => embed_state(state, (n + d - 1).next_power_of_two().trailing_zeros() as usize)?,
    };
    let program = build(working.num_qubits() / 2)?;
    run_lcu(&program.program, &working)
}

/// Pools an encoded image by full LCU simulation. In zero-padded mode the
/// state is first embedded into a grid large enough that no window wraps onto
/// image pixels; the returned state lives on that larger grid.
pub fn apply_pooling(state: &Statevector, spec: &PoolingSpec) -> Result<LcuOutcome> {
    spec.validate(1 << (state.num_qubits() / 2))?;
    run_on_grid(state, spec.d, spec.mode, |bits| build_pool_program(spec, bits))
}

pub fn apply_conv(state: &Statevector, filter: &FilterSpec, mode: BoundaryMode) -> Result<LcuOutcome> {
    run_on_grid(state, filter.d(), mode, |bits| build_conv_program(filter, bits))
}

/// `‖(Σ ω T̂ / Σω) ψ‖²` computed classically on the circuit's working grid.
pub fn conv_success_probability(img: &ImageGrid, filter: &FilterSpec, mode: BoundaryMode) -> Result<f64> {
    let omega = img.norm_constant();
    if omega == 0.0 {
        return Err(Error::Domain("all-zero image".into()));
    }
    let n = img.n_side();
    let side = match mode {
        BoundaryMode::Periodic => n.next_power_of_two(),
        BoundaryMode::ZeroPadded => (n + filter.d() - 1).next_power_of_two(),
    };
    let grid = img.embed(side)?;
    let pooled = classical_conv_oracle(&grid, filter, BoundaryMode::Periodic);
    Ok(pooled.pixels().iter().map(|p| p * p).sum::<f64>() / (omega * omega))
}

/// Direct-formula `π_S = ‖(1/D²) Σ T̂ |ψ⟩‖²`.
pub fn pool_success_probability(img: &ImageGrid, spec: &PoolingSpec) -> Result<f64> {
    spec.validate(img.n_side())?;
    conv_success_probability(img, &FilterSpec::uniform(spec.d)?, spec.mode)
}

/// Comparison of a simulated pooling run with the classical oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolCheck {
    /// Largest `|ψ_out·√π − oracle/Ω|` over the image region.
    pub max_amplitude_error: f64,
    pub pi_simulated: f64,
    pub pi_formula: f64,
}

/// Runs the pooling LCU on the encoded image and compares it with the
/// classical oracle and the direct probability formula.
pub fn verify_pooling(img: &ImageGrid, spec: &PoolingSpec) -> Result<PoolCheck> {
    let out = apply_pooling(&amplitude_encode_image(img)?, spec)?;
    let omega = img.norm_constant();
    let expected = classical_pool_oracle(img, spec);
    let got = restrict_state(&out.post_state, img.n_side());
    let scale = out.pi_success.sqrt();
    let max_amplitude_error = got
        .iter()
        .zip(expected.pixels())
        .map(|(g, e)| (g * scale - C64::new(e / omega, 0.0)).norm())
        .fold(0.0, f64::max);
    Ok(PoolCheck { max_amplitude_error, pi_simulated: out.pi_success, pi_formula: pool_success_probability(img, spec)? })
}
