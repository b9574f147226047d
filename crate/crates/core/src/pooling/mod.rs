//! Average pooling and convolution on amplitude-encoded images.
//!
//! An `N × N` image (`N = 2^b`) is encoded on `2b` qubits: the row index `x`
//! occupies qubits `0..b` and the column index `y` qubits `b..2b`, so the
//! amplitude index is `x·N + y`. Pixel shifts are cyclic subtractions on one
//! axis register, selected by a small ancilla register per axis.

mod flag;
mod mnist;
mod program;
mod shift;

pub use flag::{flag_discard, flag_discard_circuit};
pub use mnist::{
    load_mnist_dir, mnist_probability_sweep, read_idx_images, read_idx_labels, SweepAxis, SweepConfig, SweepRow,
};
pub use program::{
    apply_conv, apply_pooling, axis_ancillas, axis_prep, axis_prep_with, build_conv_program, build_pool_program,
    build_pool_program_with, conv_success_probability, embed_state, pool_success_probability,
    prep_amplitudes_degeneracy_free, restrict_state, verify_pooling, AxisPrep, DegeneracyScheme, PoolCheck,
    PoolProgram,
};
pub use shift::{
    increment_basic_op_estimate, lower_decrement_circuit, lower_increment_circuit, shift_operator, Axis, Direction,
    ShiftOp, BASIC_OPS_PER_WIDTH_SQ,
};

use crate::error::{Error, Result};
use crate::qsim::{Statevector, C64};

/// Square grayscale image, row-major, non-negative pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageGrid {
    n_side: usize,
    pixels: Vec<f64>,
}

impl ImageGrid {
    pub fn new(n_side: usize, pixels: Vec<f64>) -> Result<Self> {
        if n_side == 0 || pixels.len() != n_side * n_side {
            return Err(Error::Domain(format!("{} pixels do not form a {n_side}x{n_side} image", pixels.len())));
        }
        if let Some(p) = pixels.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Domain(format!("pixel value {p} is not a finite non-negative number")));
        }
        Ok(ImageGrid { n_side, pixels })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("image rows must form a square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn uniform(n_side: usize, value: f64) -> Result<Self> {
        Self::new(n_side, vec![value; n_side * n_side])
    }

    pub fn n_side(&self) -> usize {
        self.n_side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.n_side + j]
    }

    /// `Ω = sqrt(Σ v²)`.
    pub fn norm_constant(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    /// Places the image in the top-left corner of an `m × m` zero grid.
    pub fn embed(&self, m: usize) -> Result<Self> {
        if m < self.n_side {
            return Err(Error::Domain(format!("cannot embed a {0}x{0} image in {m}x{m}", self.n_side)));
        }
        let mut pixels = vec![0.0; m * m];
        for i in 0..self.n_side {
            pixels[i * m..i * m + self.n_side].copy_from_slice(&self.pixels[i * self.n_side..(i + 1) * self.n_side]);
        }
        Ok(ImageGrid { n_side: m, pixels })
    }

    /// Embeds into the next power-of-two side (no-op if already one).
    pub fn embed_pow2(&self) -> Self {
        self.embed(self.n_side.next_power_of_two()).expect("next power of two is not smaller")
    }

    /// Top-left `n × n` corner.
    pub fn crop(&self, n: usize) -> Result<Self> {
        if n > self.n_side {
            return Err(Error::Domain(format!("cannot crop {0}x{0} to {n}x{n}", self.n_side)));
        }
        let pixels = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        Ok(ImageGrid { n_side: n, pixels })
    }

    /// Area-weighted resampling to `n × n`.
    pub fn downsample(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_side {
            return Err(Error::Domain(format!("cannot downsample {} to {n}", self.n_side)));
        }
        let scale = self.n_side as f64 / n as f64;
        // overlap of source cell s with target cell t along one axis
        let weights = |t: usize| -> Vec<(usize, f64)> {
            let (lo, hi) = (t as f64 * scale, (t + 1) as f64 * scale);
            (lo.floor() as usize..(hi.ceil() as usize).min(self.n_side))
                .map(|s| (s, (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0)))
                .filter(|&(_, w)| w > 0.0)
                .collect()
        };
        let axis: Vec<Vec<(usize, f64)>> = (0..n).map(weights).collect();
        let area = scale * scale;
        let mut pixels = Vec::with_capacity(n * n);
        for wi in &axis {
            for wj in &axis {
                let mut acc = 0.0;
                for &(si, a) in wi {
                    for &(sj, b) in wj {
                        acc += a * b * self.get(si, sj);
                    }
                }
                pixels.push(acc / area);
            }
        }
        Ok(ImageGrid { n_side: n, pixels })
    }

    pub fn is_zero(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0.0)
    }
}

/// Boundary treatment of the pooling window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Indices wrap modulo the grid side.
    Periodic,
    /// Pixels outside the image read as zero.
    ZeroPadded,
}

/// `D × D` averaging window, stride 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolingSpec {
    pub d: usize,
    pub mode: BoundaryMode,
}

impl PoolingSpec {
    pub fn periodic(d: usize) -> Self {
        PoolingSpec { d, mode: BoundaryMode::Periodic }
    }

    pub fn zero_padded(d: usize) -> Self {
        PoolingSpec { d, mode: BoundaryMode::ZeroPadded }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.d == 0 || self.d > n {
            return Err(Error::Domain(format!("window D = {} invalid for N = {n}", self.d)));
        }
        Ok(())
    }

    /// Grid side on which the circuit runs for an `n × n` image.
    pub fn working_side(&self, n: usize) -> usize {
        match self.mode {
            BoundaryMode::Periodic => n.next_power_of_two(),
            BoundaryMode::ZeroPadded => (n + self.d - 1).next_power_of_two(),
        }
    }
}

/// `D × D` non-negative filter weights `ω[Δx][Δy]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterSpec {
    d: usize,
    weights: Vec<f64>,
}

impl FilterSpec {
    pub fn new(d: usize, weights: Vec<f64>) -> Result<Self> {
        if d == 0 || weights.len() != d * d {
            return Err(Error::Domain(format!("{} weights do not form a {d}x{d} filter", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("filter weights must be finite and non-negative".into()));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Domain("filter has no nonzero weight".into()));
        }
        Ok(FilterSpec { d, weights })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(d, vec![1.0; d * d])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weight(&self, dx: usize, dy: usize) -> f64 {
        self.weights[dx * self.d + dy]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Amplitude `v_ij / Ω` on `|x = i⟩|y = j⟩`; non-power-of-two images are
/// zero-padded to the next power of two.
pub fn amplitude_encode_image(img: &ImageGrid) -> Result<Statevector> {
    let omega = img.norm_constant();
    if omega == 0.0 {
        return Err(Error::Domain("cannot encode an all-zero image".into()));
    }
    let img = img.embed_pow2();
    let bits = img.n_side.trailing_zeros() as usize;
    Statevector::new(2 * bits, img.pixels.iter().map(|&p| C64::new(p / omega, 0.0)).collect())
}

/// Reads a real image back from an encoded state (real parts).
pub fn decode_image(state: &Statevector) -> Result<ImageGrid> {
    let n = state.num_qubits();
    if n % 2 != 0 {
        return Err(Error::Domain("an image state needs an even qubit count".into()));
    }
    let side = 1 << (n / 2);
    Ok(ImageGrid {
        n_side: side,
        pixels: state.amplitudes().iter().map(|a| a.re).collect(),
    })
}

/// Weighted classical convolution `v′_ij = Σ ω_{Δx,Δy} v_{i+Δx, j+Δy} / Σω`.
pub fn classical_conv_oracle(img: &ImageGrid, filter: &FilterSpec, mode: BoundaryMode) -> ImageGrid {
    let n = img.n_side;
    let read = |i: usize, j: usize| -> f64 {
        match mode {
            BoundaryMode::Periodic => img.get(i % n, j % n),
            BoundaryMode::ZeroPadded if i < n && j < n => img.get(i, j),
            BoundaryMode::ZeroPadded => 0.0,
        }
    };
    let total = filter.total();
    let mut pixels = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for dx in 0..filter.d {
                for dy in 0..filter.d {
                    let w = filter.weight(dx, dy);
                    if w != 0.0 {
                        acc += w * read(i + dx, j + dy);
                    }
                }
            }
            pixels.push(acc / total);
        }
    }
    ImageGrid { n_side: n, pixels }
}

/// `v′_ij = (1/D²) Σ_{Δx,Δy<D} v_{i+Δx, j+Δy}`.
pub fn classical_pool_oracle(img: &ImageGrid, spec: &PoolingSpec) -> ImageGrid {
    let filter = FilterSpec::uniform(spec.d).expect("D ≥ 1");
    classical_conv_oracle(img, &filter, spec.mode)
}
