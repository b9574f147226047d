use crate::error::{Error, Result};
use crate::qsim::Statevector;
use nalgebra::{DMatrix, SymmetricEigen};

/// Smallest number of leading principal components whose variance reaches
/// `variance_fraction` of the total. States are featurized by stacking real
/// then imaginary parts. Identical states give 0.
pub fn effective_dimension(states: &[Statevector], variance_fraction: f64) -> Result<usize> {
    if states.len() < 2 {
        return Err(Error::Domain("effective dimension needs at least two states".into()));
    }
    if !(0.0..=1.0).contains(&variance_fraction) {
        return Err(Error::Domain(format!("variance fraction {variance_fraction} outside [0, 1]")));
    }
    let dim = states[0].dim();
    if states.iter().any(|s| s.dim() != dim) {
        return Err(Error::Domain("states differ in dimension".into()));
    }
    let m = states.len();
    let mut x = DMatrix::from_fn(m, 2 * dim, |i, j| {
        let a = states[i].amplitudes()[j % dim];
        if j < dim {
            a.re
        } else {
            a.im
        }
    });
    for mut col in x.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let cov = x.transpose() * &x / (m - 1) as f64;
    let mut eig: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().map(|&e| e.max(0.0)).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = eig.iter().sum();
    if total <= 1e-24 {
        return Ok(0);
    }
    let target = variance_fraction * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for (k, e) in eig.iter().enumerate() {
        acc += e;
        if acc >= target {
            return Ok(k + 1);
        }
    }
    Ok(eig.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupproj::permutation_symmetrize;
    use crate::qsim::{c64, haar_unitary_with};
    use crate::rng::seeded;

    #[test]
    fn identical_states_need_none() {
        let s = Statevector::basis(2, 1).unwrap();
        assert_eq!(effective_dimension(&vec![s; 5], 0.95).unwrap(), 0);
    }

    #[test]
    fn two_equal_directions() {
        let mut states = Vec::new();
        for b in 0..2 {
            for sign in [1.0, -1.0] {
                let mut s = Statevector::basis(2, b).unwrap();
                s.scale(c64(sign, 0.0));
                states.push(s);
            }
        }
        assert_eq!(effective_dimension(&states, 0.95).unwrap(), 2);
    }

    #[test]
    fn symmetrized_products_have_lower_dimension() {
        let mut rng = seeded(8);
        let qubit = |rng: &mut _| {
            let u = haar_unitary_with(rng, 2);
            Statevector::from_amplitudes(u.column(0).iter().copied().collect()).unwrap()
        };
        let raw: Vec<Statevector> = (0..60)
            .map(|_| {
                let (a, b, c) = (qubit(&mut rng), qubit(&mut rng), qubit(&mut rng));
                a.tensor(&b).tensor(&c)
            })
            .collect();
        let sym: Vec<Statevector> = raw.iter().map(|s| permutation_symmetrize(s, 3, 1).unwrap().0).collect();
        let d_raw = effective_dimension(&raw, 0.95).unwrap();
        let d_sym = effective_dimension(&sym, 0.95).unwrap();
        assert!(d_sym < d_raw, "{d_sym} vs {d_raw}");
    }
}
