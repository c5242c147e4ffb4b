//! Seeded samplers used by the property tests and the acceptance suite.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{CovState, GaussianPure};
use crate::matcore::{GenMatrix, Mat, SymMatrix, TolerancePolicy};
use crate::symplectic::random_symplectic_with;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let g = Mat::from_fn(n, n, |_, _| normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// `Q·diag(e^{spread·g})·Qᵀ` with Haar-like `Q` and Gaussian `g`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, n: usize, log_spread: f64) -> SymMatrix {
    let q = random_orthogonal(rng, n);
    let d: Vec<f64> = (0..n).map(|_| (log_spread * normal(rng)).exp()).collect();
    let dm = Mat::from_diagonal(&DVector::from_vec(d));
    SymMatrix::from_mat_lossy(&q * dm * q.transpose())
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> SymMatrix {
    let g = Mat::from_fn(n, n, |_, _| normal(rng));
    SymMatrix::from_mat_lossy((&g + g.transpose()) * (0.5 * scale))
}

pub fn random_invertible<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> GenMatrix {
    loop {
        let l = Mat::identity(n, n) + Mat::from_fn(n, n, |_, _| spread * normal(rng) / (n as f64).sqrt());
        if l.determinant().abs() > 0.1 {
            return GenMatrix::new(l).expect("finite");
        }
    }
}

/// Largest condition number accepted by [`cov_with_nu`].
pub const MAX_COND: f64 = 1e6;

/// `Σ = Sᵀ·diag(ν, ν)·S` with prescribed symplectic eigenvalues. `S` is
/// redrawn until `κ(Σ) ≤ MAX_COND`.
pub fn cov_with_nu<R: Rng + ?Sized>(rng: &mut R, hbar: f64, nu: &[f64], spread: f64) -> CovState {
    let n = nu.len();
    let mut d = nu.to_vec();
    d.extend_from_slice(nu);
    let diag = SymMatrix::from_diagonal(&d);
    let sigma = loop {
        let s = random_symplectic_with(rng, n, spread);
        let sigma = diag.congruence(s.as_mat());
        let ev = sigma.eigenvalues();
        if ev[0] > 0.0 && ev[ev.len() - 1] / ev[0] <= MAX_COND {
            break sigma;
        }
    };
    CovState::new(hbar, sigma, &TolerancePolicy::default()).expect("SPD by construction")
}

/// Quantum state with `ν_j = (ħ/2)(1 + |ξ_j|)`; with probability `blob_prob`
/// all `ξ_j = 0` and the state is a pure blob.
pub fn random_quantum_cov<R: Rng + ?Sized>(rng: &mut R, n: usize, hbar: f64, blob_prob: f64) -> CovState {
    let blob = rng.random_bool(blob_prob);
    let nu: Vec<f64> = (0..n)
        .map(|_| if blob { hbar / 2.0 } else { hbar / 2.0 * (1.0 + normal(rng).abs()) })
        .collect();
    cov_with_nu(rng, hbar, &nu, 0.6)
}

/// State violating the quantum condition: its smallest symplectic eigenvalue
/// lies in `[0.1, 0.9]·ħ/2`.
pub fn random_non_quantum_cov<R: Rng + ?Sized>(rng: &mut R, n: usize, hbar: f64) -> CovState {
    let mut nu: Vec<f64> = (0..n).map(|_| hbar / 2.0 * (1.0 + normal(rng).abs())).collect();
    let k = rng.random_range(0..n);
    nu[k] = hbar / 2.0 * rng.random_range(0.1..0.9);
    cov_with_nu(rng, hbar, &nu, 0.6)
}

pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, n: usize, hbar: f64) -> GaussianPure {
    let w = random_spd(rng, n, 0.5);
    let y = random_symmetric(rng, n, 0.7);
    GaussianPure::new(hbar, w, y, &TolerancePolicy::default()).expect("W SPD")
}

/// Random `(A, B)` whose product has eigenvalues in `[lo, 1]`.
pub fn random_quantum_pair<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64) -> (SymMatrix, SymMatrix) {
    let tol = TolerancePolicy::default();
    let a = random_spd(rng, n, 0.6);
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=1.0)).collect();
    let q = random_orthogonal(rng, n);
    let core = SymMatrix::from_mat_lossy(&q * Mat::from_diagonal(&DVector::from_vec(t)) * q.transpose());
    let a_inv_half = a.inv_sqrt(&tol).expect("SPD");
    let b = core.congruence(a_inv_half.as_mat());
    (a, b)
}
