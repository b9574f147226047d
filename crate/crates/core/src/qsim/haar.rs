use super::{CMatrix, C64};
use rand::Rng;
use rand_distr::StandardNormal;

/// Haar-distributed `dim × dim` unitary, deterministic in `seed`.
pub fn haar_random_unitary(dim: usize, seed: u64) -> CMatrix {
    haar_unitary_with(&mut crate::rng::seeded(seed), dim)
}

/// Haar-distributed unitary drawn from `rng`: QR of a complex Ginibre matrix
/// with the phases of `diag(R)` moved into `Q`.
pub fn haar_unitary_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::is_unitary;

    #[test]
    fn unitary_and_deterministic() {
        let u = haar_random_unitary(2, 1);
        assert!(is_unitary(&u, 1e-10));
        assert_eq!(u, haar_random_unitary(2, 1));
        assert_ne!(u, haar_random_unitary(2, 2));
        assert!(is_unitary(&haar_random_unitary(16, 9), 1e-10));
    }

    #[test]
    fn trace_second_moment() {
        // ∫ |tr U|² dU = 1 for every dimension
        let mut rng = crate::rng::seeded(77);
        let n = 2000;
        let mean: f64 = (0..n).map(|_| haar_unitary_with(&mut rng, 2).trace().norm_sqr()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.1, "mean |tr U|^2 = {mean}");
    }

    #[test]
    fn left_invariance() {
        // V·U has the same distribution as U: compare E|U_00|^4 = 2/(d(d+1)) for both
        let d = 3;
        let v = haar_random_unitary(d, 5);
        let mut rng = crate::rng::seeded(6);
        let n = 4000;
        let (mut a, mut b) = (0.0, 0.0);
        for _ in 0..n {
            let u = haar_unitary_with(&mut rng, d);
            a += u[(0, 0)].norm_sqr().powi(2);
            b += (&v * &u)[(0, 0)].norm_sqr().powi(2);
        }
        let expected = 2.0 / (d * (d + 1)) as f64;
        assert!((a / n as f64 - expected).abs() < 0.02);
        assert!((b / n as f64 - expected).abs() < 0.02);
    }
}
