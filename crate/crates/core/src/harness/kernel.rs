use crate::error::{Error, Result};
use crate::qsim::Statevector;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Fidelity kernel `K_ij = |⟨ψ_i|ψ_j⟩|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
}

impl KernelMatrix {
    /// Wraps `values` after checking symmetry (1e-12), unit diagonal (1e-10)
    /// and positive semidefiniteness (smallest eigenvalue ≥ −1e-8).
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::Validation("kernel matrix is not square".into()));
        }
        for i in 0..n {
            if (values[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(Error::Validation(format!("kernel diagonal entry {i} is {}", values[(i, i)])));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Validation(format!("kernel not symmetric at ({i},{j})")));
                }
            }
        }
        if n > 0 {
            let min = SymmetricEigen::new(values.clone()).eigenvalues.min();
            if min < -1e-8 {
                return Err(Error::Validation(format!("kernel has negative eigenvalue {min:e}")));
            }
        }
        Ok(KernelMatrix { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

pub fn compute_kernel(states: &[Statevector]) -> Result<KernelMatrix> {
    let n = states.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = states[i].inner(&states[i])?.norm_sqr();
        for j in 0..i {
            let v = states[i].inner(&states[j])?.norm_sqr();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    KernelMatrix::new(k)
}

/// Soft-margin SVM settings. One iteration updates one working pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, tol: 1e-4, max_iterations: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    /// Dual coefficients, one per training point.
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// False when the iteration cap was hit before the KKT gap fell below `tol`.
    pub converged: bool,
    pub iterations: usize,
}

/// Trains on the training block `k` (indexed like `labels`, entries ±1) with
/// SMO using second-order working-set selection.
pub fn svm_train(k: &DMatrix<f64>, labels: &[i32], config: &SvmConfig) -> Result<SvmModel> {
    let n = labels.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::Domain(format!("kernel block {}x{} for {n} labels", k.nrows(), k.ncols())));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::Domain("labels must be +1 or -1".into()));
    }
    const TAU: f64 = 1e-12;
    let c = config.c;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let q = |i: usize, j: usize| y[i] * y[j] * k[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
    let low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in (0..n).filter(|&t| up(t, &alpha)) {
            if -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut best = f64::INFINITY;
        for t in (0..n).filter(|&t| low(t, &alpha)) {
            let v = -y[t] * grad[t];
            g_min = g_min.min(v);
            if i != usize::MAX && v < g_max {
                let b = g_max - v;
                let a = (k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)]).max(TAU);
                if -b * b / a <= best {
                    best = -b * b / a;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < config.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }
    // bias from free vectors, else the midpoint of the feasible interval
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else {
        lb
    };
    Ok(SvmModel { alpha, bias: -rho, converged, iterations })
}

impl SvmModel {
    /// Decision value `Σ_t α_t y_t K(t, x) + b` from kernel entries against
    /// the training points.
    pub fn decision(&self, kernel_row: &[f64], labels: &[i32]) -> f64 {
        self.alpha
            .iter()
            .zip(labels)
            .zip(kernel_row)
            .map(|((a, &y), k)| a * y as f64 * k)
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, kernel_row: &[f64], labels: &[i32]) -> i32 {
        if self.decision(kernel_row, labels) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmResult {
    pub accuracy: f64,
    /// False when training stopped at the iteration cap; `accuracy` is then partial.
    pub converged: bool,
    pub iterations: usize,
}

/// Trains on `train` and returns the accuracy on `test`.
pub fn svm_train_predict(
    kernel: &KernelMatrix,
    labels: &[i32],
    train: &[usize],
    test: &[usize],
    config: &SvmConfig,
) -> Result<SvmResult> {
    if labels.len() != kernel.len() {
        return Err(Error::Domain(format!("{} labels for a {}-point kernel", labels.len(), kernel.len())));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Domain("train and test sets must be nonempty".into()));
    }
    let k = kernel.values();
    let block = DMatrix::from_fn(train.len(), train.len(), |a, b| k[(train[a], train[b])]);
    let train_labels: Vec<i32> = train.iter().map(|&t| labels[t]).collect();
    let model = svm_train(&block, &train_labels, config)?;
    let correct = test
        .iter()
        .filter(|&&s| {
            let row: Vec<f64> = train.iter().map(|&t| k[(s, t)]).collect();
            model.predict(&row, &train_labels) == labels[s]
        })
        .count();
    Ok(SvmResult {
        accuracy: correct as f64 / test.len() as f64,
        converged: model.converged,
        iterations: model.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::c64;
    use crate::rng::seeded;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn kernel_examples() {
        let zero = Statevector::basis(1, 0).unwrap();
        let one = Statevector::basis(1, 1).unwrap();
        let plus = Statevector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let k = compute_kernel(&[zero.clone(), zero.clone()]).unwrap();
        assert!((k.get(0, 1) - 1.0).abs() < 1e-15);
        let k = compute_kernel(&[zero.clone(), one]).unwrap();
        assert_eq!(k.get(0, 1), 0.0);
        let k = compute_kernel(&[zero, plus]).unwrap();
        assert!((k.get(0, 1) - 0.5).abs() < 1e-15);
        assert!(KernelMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    /// Two clusters of basis states: class +1 on |0⟩,|1⟩ and class −1 on |2⟩,|3⟩.
    fn clusters() -> (KernelMatrix, Vec<i32>) {
        let mut states = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let b = i % 4;
            let mut amps = vec![c64(0., 0.); 4];
            amps[b] = c64(1., 0.);
            states.push(Statevector::new(2, amps).unwrap());
            labels.push(if b < 2 { 1 } else { -1 });
        }
        // within-cluster overlap so test points see their cluster
        let mixed: Vec<Statevector> = states
            .iter()
            .map(|s| {
                let b = s.amplitudes().iter().position(|a| a.norm() > 0.5).unwrap();
                let partner = b ^ 1;
                let mut amps = vec![c64(0., 0.); 4];
                amps[b] = c64(0.8, 0.);
                amps[partner] = c64(0.6, 0.);
                Statevector::new(2, amps).unwrap()
            })
            .collect();
        (compute_kernel(&mixed).unwrap(), labels)
    }

    #[test]
    fn separable_clusters() {
        let (k, labels) = clusters();
        let train: Vec<usize> = (0..16).collect();
        let test: Vec<usize> = (16..20).collect();
        let r = svm_train_predict(&k, &labels, &train, &test, &SvmConfig::default()).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert!(r.converged);
    }

    #[test]
    fn memorizes_duplicates() {
        let (k, labels) = clusters();
        let idx: Vec<usize> = (0..20).collect();
        let r = svm_train_predict(&k, &labels, &idx, &idx, &SvmConfig::default()).unwrap();
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn identity_kernel_predicts_majority() {
        let labels = [1, 1, 1, 1, 1, -1, -1];
        for sign in [1, -1] {
            let y: Vec<i32> = labels.iter().map(|l| l * sign).collect();
            let m = svm_train(&DMatrix::identity(7, 7), &y, &SvmConfig::default()).unwrap();
            // an unseen point has zero overlap with every training point
            assert_eq!(m.predict(&[0.0; 7], &y), sign);
        }
    }

    #[test]
    fn random_labels_near_chance() {
        let mut rng = seeded(21);
        let states: Vec<Statevector> = (0..200)
            .map(|_| {
                let amps = (0..8).map(|_| c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
                Statevector::new(3, amps).unwrap().normalized().unwrap()
            })
            .collect();
        let k = compute_kernel(&states).unwrap();
        let labels: Vec<i32> = (0..200).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let mut idx: Vec<usize> = (0..200).collect();
        idx.shuffle(&mut rng);
        let r = svm_train_predict(&k, &labels, &idx[..160], &idx[160..], &SvmConfig::default()).unwrap();
        assert!((r.accuracy - 0.5).abs() <= 0.15, "accuracy {}", r.accuracy);
    }

    #[test]
    fn dual_solution_satisfies_kkt() {
        let (k, labels) = clusters();
        let m = svm_train(k.values(), &labels, &SvmConfig::default()).unwrap();
        let s: f64 = m.alpha.iter().zip(&labels).map(|(a, &y)| a * y as f64).sum();
        assert!(s.abs() < 1e-10);
        assert!(m.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }
}
