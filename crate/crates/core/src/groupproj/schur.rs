use super::{build_projection_program, symmetric_group, ProjectionWeights, RepMap};
use crate::encodings::{bloch_encode_cloud, rotate_cloud, sample_shape_cloud_with, Shape};
use crate::error::{Error, Result};
use crate::lcu::run_lcu;
use crate::qsim::{kron, CMatrix, GateAction, Statevector};
use crate::rng::{derive_seed, seeded};
use rand_distr::{Distribution, UnitSphere};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Index of the two-dimensional irrep of S₄ in [`symmetric_group`]`(4)`.
pub const S4_TWO_DIM_IRREP: usize = 2;

/// The two 4-qubit vectors spanning the two-dimensional S₄ irrep inside
/// `(C²)^⊗4`; both are invariant under `U⊗U⊗U⊗U` for `U ∈ SU(2)`.
#[derive(Clone, Debug)]
pub struct SchurBasisS4 {
    pub d1: Statevector,
    pub d2: Statevector,
}

impl Default for SchurBasisS4 {
    fn default() -> Self {
        Self::new()
    }
}

impl SchurBasisS4 {
    pub fn new() -> Self {
        let a = 3f64.sqrt() / 6.0;
        let mut d1 = vec![0.0; 16];
        for (i, c) in [(0b0011, 2.), (0b1100, 2.), (0b0101, -1.), (0b1010, -1.), (0b0110, -1.), (0b1001, -1.)] {
            d1[i] = a * c;
        }
        let mut d2 = vec![0.0; 16];
        for (i, c) in [(0b0101, 0.5), (0b1010, 0.5), (0b0110, -0.5), (0b1001, -0.5)] {
            d2[i] = c;
        }
        SchurBasisS4 {
            d1: Statevector::from_real(4, &d1).expect("16 amplitudes"),
            d2: Statevector::from_real(4, &d2).expect("16 amplitudes"),
        }
    }

    /// Largest of `‖(U⊗4) d_i − d_i‖` for a single-qubit unitary `u`
    /// rescaled to determinant 1.
    pub fn invariance_error(&self, u: &CMatrix) -> Result<f64> {
        let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
        let su = u * det.sqrt().inv();
        let u4 = kron(&kron(&su, &su), &kron(&su, &su));
        let gate = GateAction::dense(vec![0, 1, 2, 3], u4)?;
        let mut worst: f64 = 0.0;
        for d in [&self.d1, &self.d2] {
            let mut s = d.clone();
            s.apply(&gate)?;
            worst = worst.max(s.max_abs_diff(d)?);
        }
        Ok(worst)
    }

    /// Norm of the component of `psi` orthogonal to `span{d₁, d₂}`.
    pub fn span_residual(&self, psi: &Statevector) -> Result<f64> {
        let mut rest = psi.clone();
        for d in [&self.d1, &self.d2] {
            let c = d.inner(psi)?;
            rest.axpy(-c, d)?;
        }
        Ok(rest.norm())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub clouds: usize,
    pub angles: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapRow {
    pub theta: f64,
    pub overlap_invariant: f64,
    pub overlap_raw: f64,
    pub cloud_id: usize,
}

/// For each seeded 4-point cloud on the unit sphere and each angle in
/// `[0, π]`: rotate the cloud about a seeded random axis, Bloch-encode both
/// clouds, project both onto the two-dimensional S₄ irrep with the LCU
/// program, and record `|⟨proj₀|proj_Θ⟩|` and the raw `|⟨ψ₀|ψ_Θ⟩|`.
pub fn rotational_invariance_experiment(config: &RotationConfig) -> Result<Vec<OverlapRow>> {
    if config.clouds == 0 || config.angles == 0 {
        return Err(Error::Config("clouds and angles must be positive".into()));
    }
    let group = symmetric_group(4)?;
    let rep = RepMap::qubit_permutation(&group)?;
    let weights = ProjectionWeights::single(group.num_irreps(), S4_TWO_DIM_IRREP)?;
    let program = build_projection_program(&group, &rep, &weights)?;
    let thetas: Vec<f64> = if config.angles == 1 {
        vec![0.0]
    } else {
        (0..config.angles).map(|j| PI * j as f64 / (config.angles - 1) as f64).collect()
    };
    let per_cloud = (0..config.clouds)
        .into_par_iter()
        .map(|id| {
            let mut rng = seeded(derive_seed(config.seed, id as u64));
            // resample the rare clouds with no component in the irrep
            let (cloud, psi0, proj0) = loop {
                let cloud = sample_shape_cloud_with(Shape::Sphere, 4, &mut rng)?;
                let psi0 = bloch_encode_cloud(&cloud);
                match run_lcu(&program, &psi0) {
                    Ok(out) if out.pi_success > 1e-8 => break (cloud, psi0, out.post_state),
                    Ok(_) => continue,
                    Err(e) if e.is_post_selection() => continue,
                    Err(e) => return Err(e),
                }
            };
            let axis: [f64; 3] = UnitSphere.sample(&mut rng);
            thetas
                .iter()
                .map(|&theta| {
                    let psi = bloch_encode_cloud(&rotate_cloud(&cloud, axis, theta)?);
                    let proj = run_lcu(&program, &psi)?.post_state;
                    Ok(OverlapRow {
                        theta,
                        overlap_invariant: proj0.inner(&proj)?.norm(),
                        overlap_raw: psi0.inner(&psi)?.norm(),
                        cloud_id: id,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_cloud.into_iter().flatten().collect())
}
