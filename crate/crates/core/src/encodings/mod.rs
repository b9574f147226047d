//! Data encoders: Bloch-sphere points, a two-qubit IQP-style point encoding,
//! and point-cloud datasets.

mod cloud;

pub use crate::pooling::{load_mnist_dir, read_idx_images, read_idx_labels};
pub use cloud::{
    normalize_to_angle_range, rotate_cloud, rotate_point, sample_shape_cloud, sample_shape_cloud_with, Dataset,
    PointCloud, Shape, Spherical, TORUS_MAJOR_RADIUS, TORUS_MINOR_RADIUS,
};

use crate::error::Result;
use crate::qsim::{c64, gates, GateAction, Statevector};
use std::f64::consts::PI;

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_encode(theta: f64, phi: f64) -> Statevector {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    Statevector::new(1, vec![c64(c, 0.0), c64(phi.cos() * s, phi.sin() * s)]).expect("two amplitudes")
}

/// Bloch encoding of the direction of `p`; the radius is dropped.
pub fn bloch_encode_point(p: [f64; 3]) -> Statevector {
    let s = Spherical::from_cartesian(p);
    bloch_encode(s.theta, s.phi)
}

/// Product state `|p₁⟩⊗|p₂⟩⊗…` of Bloch-encoded points, first point on the
/// most significant qubit.
pub fn bloch_encode_cloud(cloud: &PointCloud) -> Statevector {
    tensor_all(cloud.points().iter().map(|&p| bloch_encode_point(p)))
}

/// Entangling angle `(2/π²)(π−x)(π−y)(π−z)`.
pub fn iqp_entangling_angle(x: f64, y: f64, z: f64) -> f64 {
    2.0 / (PI * PI) * (PI - x) * (PI - y) * (PI - z)
}

/// One layer: `H⊗H`, `P(x)` on qubit 0, `P(y)` on qubit 1, then a controlled
/// phase by the entangling angle.
pub fn iqp_layer(x: f64, y: f64, z: f64) -> Vec<GateAction> {
    let cp = GateAction::controlled_on_ones(
        &[0],
        GateAction::Dense { qubits: vec![1], matrix: gates::phase(iqp_entangling_angle(x, y, z)) },
    );
    vec![
        gates::h(0),
        gates::h(1),
        GateAction::Dense { qubits: vec![0], matrix: gates::phase(x) },
        GateAction::Dense { qubits: vec![1], matrix: gates::phase(y) },
        cp,
    ]
}

/// Two IQP layers applied to `|00⟩`. Inputs are expected in `[−π/2, π/2]`.
pub fn iqp_encode(x: f64, y: f64, z: f64) -> Result<Statevector> {
    let mut s = Statevector::basis(2, 0)?;
    let layer = iqp_layer(x, y, z);
    s.apply_all(&layer)?;
    s.apply_all(&layer)?;
    Ok(s)
}

/// IQP encoding of every point (two qubits each), tensored in order.
pub fn iqp_encode_cloud(cloud: &PointCloud) -> Result<Statevector> {
    let parts = cloud.points().iter().map(|&[x, y, z]| iqp_encode(x, y, z)).collect::<Result<Vec<_>>>()?;
    Ok(tensor_all(parts))
}

fn tensor_all(parts: impl IntoIterator<Item = Statevector>) -> Statevector {
    parts
        .into_iter()
        .reduce(|acc, s| acc.tensor(&s))
        .unwrap_or_else(|| Statevector::new(0, vec![c64(1.0, 0.0)]).expect("scalar state"))
}
