//! Centered Gaussian quantum states described by their covariance matrix.
//!
//! The quantum condition `Σ + (iħ/2)J ⪰ 0` is evaluated through its real
//! equivalent: every symplectic eigenvalue of `Σ` is at least `ħ/2`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matcore::{rel_diff, schur_complement, Blocks, Mat, Pivot, SymMatrix, TolerancePolicy};
use crate::polarity::{check_hbar, is_quantum_pair, DualPairReport, EllipsoidBody, Space};
use crate::symplectic::{generator, symplectic_eigenvalues, williamson, Generator, SymplecticMatrix};

/// Covariance matrix `Σ` of a centered state together with `ħ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovState {
    hbar: f64,
    sigma: SymMatrix,
    nu: Vec<f64>,
}

impl CovState {
    pub fn new(hbar: f64, sigma: SymMatrix, tol: &TolerancePolicy) -> Result<Self> {
        check_hbar(hbar)?;
        let nu = symplectic_eigenvalues(&sigma, tol)?;
        Ok(Self { hbar, sigma, nu })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn n(&self) -> usize {
        self.sigma.dim() / 2
    }

    /// Symplectic eigenvalues, ascending.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn nu_min(&self) -> f64 {
        self.nu[0]
    }

    pub fn blocks(&self) -> Blocks {
        Blocks::of(self.sigma.as_mat()).expect("even dimension checked at construction")
    }

    /// Covariance ellipsoid `{z : ½Σ⁻¹z·z ≤ 1} = {z : Mz·z ≤ ħ}`, `M = (ħ/2)Σ⁻¹`.
    pub fn ellipsoid(&self, tol: &TolerancePolicy) -> Result<PhaseEllipsoid> {
        let m = self.sigma.inverse(tol)?.scale(self.hbar / 2.0);
        PhaseEllipsoid::new(self.hbar, m, tol)
    }

    /// `S Σ Sᵀ`.
    pub fn transformed(&self, s: &SymplecticMatrix, tol: &TolerancePolicy) -> Result<CovState> {
        let sigma = SymMatrix::from_mat_lossy(s.as_mat() * self.sigma.as_mat() * s.as_mat().transpose());
        CovState::new(self.hbar, sigma, tol)
    }

    /// Absolute slack on `ν_min ≥ ħ/2`.
    fn nu_slack(&self, tol: &TolerancePolicy) -> f64 {
        tol.slack_at(self.sigma.spectral_norm())
    }
}

/// Phase-space ellipsoid `{z : Mz·z ≤ ħ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEllipsoid {
    hbar: f64,
    m: SymMatrix,
}

impl PhaseEllipsoid {
    pub fn new(hbar: f64, m: SymMatrix, tol: &TolerancePolicy) -> Result<Self> {
        check_hbar(hbar)?;
        if !m.dim().is_multiple_of(2) {
            return Err(Error::DimensionOdd { dim: m.dim() });
        }
        m.check_pd(tol)?;
        Ok(Self { hbar, m })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn m(&self) -> &SymMatrix {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.dim() / 2
    }

    /// Covariance `Σ = (ħ/2)M⁻¹` of the Gaussian with this ellipsoid.
    pub fn covariance(&self, tol: &TolerancePolicy) -> Result<CovState> {
        CovState::new(self.hbar, self.m.inverse(tol)?.scale(self.hbar / 2.0), tol)
    }

    pub fn as_body(&self, tol: &TolerancePolicy) -> Result<EllipsoidBody> {
        EllipsoidBody::new(Space::Phase, self.m.clone(), self.hbar, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumCondition {
    pub holds: bool,
    pub nu_min: f64,
    /// `ν_min − ħ/2`.
    pub margin: f64,
}

pub fn quantum_condition(state: &CovState, tol: &TolerancePolicy) -> QuantumCondition {
    let half = state.hbar / 2.0;
    let margin = state.nu_min() - half;
    QuantumCondition {
        holds: margin >= -state.nu_slack(tol),
        nu_min: state.nu_min(),
        margin,
    }
}

/// Robertson–Schrödinger inequality for degree of freedom `j` (1-based):
/// `σ_xx σ_pp ≥ σ_xp² + ħ²/4`.
pub fn rsup_check(state: &CovState, j: usize, tol: &TolerancePolicy) -> Result<bool> {
    let n = state.n();
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let s = state.sigma.as_mat();
    let (xx, pp, xp) = (s[(j - 1, j - 1)], s[(n + j - 1, n + j - 1)], s[(j - 1, n + j - 1)]);
    let lhs = xx * pp;
    let rhs = xp * xp + state.hbar * state.hbar / 4.0;
    let norm = state.sigma.spectral_norm();
    Ok(lhs >= rhs - tol.psd_slack * norm * norm)
}

/// Orthogonal projections `Ω_X = {(M/M_PP)x·x ≤ ħ}`, `Ω_P = {(M/M_XX)p·p ≤ ħ}`.
pub fn project(omega: &PhaseEllipsoid, tol: &TolerancePolicy) -> Result<(EllipsoidBody, EllipsoidBody)> {
    let ax = schur_complement(&omega.m, Pivot::Lower, tol)?;
    let bp = schur_complement(&omega.m, Pivot::Upper, tol)?;
    Ok((
        EllipsoidBody::new(Space::Position, ax, omega.hbar, tol)?,
        EllipsoidBody::new(Space::Momentum, bp, omega.hbar, tol)?,
    ))
}

/// Certifies that the projections of the covariance ellipsoid form a quantum
/// dual pair `Ω_X^ħ ⊆ Ω_P`. Only defined for states obeying the quantum
/// condition.
pub fn projection_pair_check(state: &CovState, tol: &TolerancePolicy) -> Result<DualPairReport> {
    let qc = quantum_condition(state, tol);
    if !qc.holds {
        return Err(Error::QuantumConditionViolated {
            nu_min: qc.nu_min,
            half_hbar: state.hbar / 2.0,
        });
    }
    let (x, p) = project(&state.ellipsoid(tol)?, tol)?;
    is_quantum_pair(&x, &p, state.hbar, tol)
}

/// Parameters `(W, Y)` of the pure Gaussian
/// `φ_WY(x) ∝ exp[−(W + iY)x·x / 2ħ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPure {
    hbar: f64,
    w: SymMatrix,
    y: SymMatrix,
}

impl GaussianPure {
    pub fn new(hbar: f64, w: SymMatrix, y: SymMatrix, tol: &TolerancePolicy) -> Result<Self> {
        check_hbar(hbar)?;
        if w.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                found: y.dim(),
            });
        }
        w.check_pd(tol)?;
        Ok(Self { hbar, w, y })
    }

    /// The standard Gaussian `φ₀`: `W = I`, `Y = 0`.
    pub fn standard(hbar: f64, n: usize) -> Self {
        Self {
            hbar,
            w: SymMatrix::identity(n),
            y: SymMatrix::zeros(n),
        }
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn w(&self) -> &SymMatrix {
        &self.w
    }

    pub fn y(&self) -> &SymMatrix {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.w.dim()
    }

    fn w_inv(&self) -> SymMatrix {
        self.w
            .inverse(&TolerancePolicy::default())
            .expect("W positive definite by construction")
    }
}

/// Wigner matrix `G = [[W + YW⁻¹Y, YW⁻¹], [W⁻¹Y, W⁻¹]]` and the factor
/// `S = [[W^{1/2}, 0], [W^{−1/2}Y, W^{−1/2}]]` with `G = SᵀS`.
pub fn wigner_g(psi: &GaussianPure, tol: &TolerancePolicy) -> Result<(SymMatrix, SymplecticMatrix)> {
    let n = psi.n();
    let winv = psi.w_inv();
    let y = psi.y.as_mat();
    let g = Blocks {
        xx: psi.w.as_mat() + y * winv.as_mat() * y,
        xp: y * winv.as_mat(),
        px: winv.as_mat() * y,
        pp: winv.as_mat().clone(),
    }
    .assemble();
    let w_half = psi.w.sqrt(tol)?;
    let w_inv_half = psi.w.inv_sqrt(tol)?;
    let mut s = Mat::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (n, n)).copy_from(w_half.as_mat());
    s.view_mut((n, 0), (n, n)).copy_from(&(w_inv_half.as_mat() * y));
    s.view_mut((n, n), (n, n)).copy_from(w_inv_half.as_mat());
    let s = SymplecticMatrix::certify(s, tol)?;
    let g = SymMatrix::from_mat_lossy(g);
    let recon = rel_diff(&(s.as_mat().transpose() * s.as_mat()), g.as_mat());
    if recon > tol.rel_eq {
        return Err(Error::VerificationFailed {
            what: "G = SᵀS",
            residual: recon,
        });
    }
    Ok((g, s))
}

/// `Σ = (ħ/2)·[[W⁻¹, −W⁻¹Y], [−YW⁻¹, W + YW⁻¹Y]]`.
pub fn sigma_from_wy(psi: &GaussianPure, tol: &TolerancePolicy) -> Result<CovState> {
    let winv = psi.w_inv();
    let y = psi.y.as_mat();
    let xp = -(winv.as_mat() * y);
    let pp = SymMatrix::from_mat_lossy(psi.w.as_mat() + y * winv.as_mat() * y);
    let sigma = SymMatrix::from_blocks(&winv, &xp, &pp).scale(psi.hbar / 2.0);
    CovState::new(psi.hbar, sigma, tol)
}

/// Inverse of [`sigma_from_wy`] for pure states: `W = (ħ/2)Σ_XX⁻¹`,
/// `Y = −Σ_XPᵀΣ_XX⁻¹`, with the `Σ_PP` block used as a residual check.
pub fn wy_from_sigma(state: &CovState, tol: &TolerancePolicy) -> Result<GaussianPure> {
    let half = state.hbar / 2.0;
    let deviation = state.nu.iter().map(|v| (v - half).abs()).fold(0.0, f64::max);
    if deviation > tol.rel_eq * half {
        return Err(Error::NotPure { deviation });
    }
    let b = state.blocks();
    let sxx = SymMatrix::from_mat_lossy(b.xx.clone());
    let sxx_inv = sxx.inverse(tol)?;
    let w = sxx_inv.scale(half);
    let y = SymMatrix::from_mat_lossy(-(b.xp.transpose() * sxx_inv.as_mat()));
    let psi = GaussianPure::new(state.hbar, w, y, tol)?;
    let winv = psi.w_inv();
    let pp = (psi.w.as_mat() + psi.y.as_mat() * winv.as_mat() * psi.y.as_mat()) * half;
    let residual = rel_diff(&pp, &b.pp);
    if residual > tol.rel_eq {
        return Err(Error::ResidualTooLarge {
            what: "momentum block Σ_PP",
            residual,
        });
    }
    Ok(psi)
}

/// Parameters of the Fourier transform of `φ_WY` (global phase dropped):
/// `W′ = (W + YW⁻¹Y)⁻¹`, `Y′ = −W⁻¹Y(W + YW⁻¹Y)⁻¹`.
pub fn fourier_gaussian(psi: &GaussianPure, tol: &TolerancePolicy) -> Result<GaussianPure> {
    let winv = psi.w_inv();
    let y = psi.y.as_mat();
    let big = SymMatrix::from_mat_lossy(psi.w.as_mat() + y * winv.as_mat() * y);
    let big_inv = big.inverse(tol)?;
    let y2 = SymMatrix::from_mat_lossy(-(winv.as_mat() * y * big_inv.as_mat()));
    GaussianPure::new(psi.hbar, big_inv, y2, tol)
}

/// Action of a metaplectic generator on `(W, Y)`; the covering operator's
/// phase is not tracked.
pub fn metaplectic_apply(g: &Generator, psi: &GaussianPure, tol: &TolerancePolicy) -> Result<GaussianPure> {
    if g.n() != psi.n() {
        return Err(Error::DimensionMismatch {
            expected: psi.n(),
            found: g.n(),
        });
    }
    match g {
        Generator::Vp(p) => GaussianPure::new(psi.hbar, psi.w.clone(), psi.y.sub(p), tol),
        Generator::Ml(l) => {
            generator(g, tol)?;
            GaussianPure::new(
                psi.hbar,
                psi.w.congruence(l.as_mat()),
                psi.y.congruence(l.as_mat()),
                tol,
            )
        }
        Generator::J(_) => fourier_gaussian(psi, tol),
    }
}

/// `μ = (ħ/2)ⁿ (det Σ)^{−1/2}`.
pub fn purity(state: &CovState) -> f64 {
    (state.hbar / 2.0).powi(state.n() as i32) / state.sigma.det().sqrt()
}

/// `μ = Π_j (ħ/2)/ν_j`.
pub fn purity_from_nu(state: &CovState) -> f64 {
    state.nu.iter().map(|v| state.hbar / 2.0 / v).product()
}

#[derive(Debug, Clone)]
pub struct BlobVerdict {
    pub is_blob: bool,
    /// `S` with `Σ = (ħ/2)SᵀS` when `is_blob`.
    pub witness: Option<SymplecticMatrix>,
    pub max_deviation: f64,
}

/// A covariance ellipsoid is a quantum blob `S(B²ⁿ(√ħ))` iff every symplectic
/// eigenvalue equals `ħ/2`.
pub fn is_quantum_blob(state: &CovState, tol: &TolerancePolicy) -> Result<BlobVerdict> {
    let half = state.hbar / 2.0;
    let dev = state.nu.iter().map(|v| (v / half - 1.0).abs()).fold(0.0, f64::max);
    let is_blob = dev <= tol.rel_eq;
    let witness = if is_blob {
        let w = williamson(&state.sigma, tol)?;
        Some(w.s)
    } else {
        None
    };
    Ok(BlobVerdict {
        is_blob,
        witness,
        max_deviation: dev,
    })
}

/// A mixed Gaussian state with its purity cached.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixed {
    state: CovState,
    purity: f64,
}

impl GaussianMixed {
    pub fn new(state: CovState) -> Self {
        let purity = purity(&state);
        Self { state, purity }
    }

    pub fn state(&self) -> &CovState {
        &self.state
    }

    pub fn purity(&self) -> f64 {
        self.purity
    }
}

/// Anything that determines a centered Gaussian covariance matrix.
pub trait Covariance {
    fn covariance(&self) -> Result<CovState>;
}

impl Covariance for CovState {
    fn covariance(&self) -> Result<CovState> {
        Ok(self.clone())
    }
}

impl Covariance for GaussianMixed {
    fn covariance(&self) -> Result<CovState> {
        Ok(self.state.clone())
    }
}

impl Covariance for GaussianPure {
    fn covariance(&self) -> Result<CovState> {
        sigma_from_wy(self, &TolerancePolicy::default())
    }
}

fn gaussian_density(cov: &SymMatrix, z: &[f64]) -> Result<f64> {
    if z.len() != cov.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov.dim(),
            found: z.len(),
        });
    }
    let inv = cov.inverse(&TolerancePolicy::default())?;
    let d = cov.dim() as f64;
    Ok((2.0 * PI).powf(-d / 2.0) / cov.det().sqrt() * (-0.5 * inv.quad_form(z)).exp())
}

/// Wigner function `(2π)^{−n}(det Σ)^{−1/2} exp(−½Σ⁻¹z·z)`.
pub fn wigner_eval<S: Covariance>(state: &S, z: &[f64]) -> Result<f64> {
    gaussian_density(state.covariance()?.sigma(), z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Position,
    Momentum,
}

/// Marginal density of the Wigner function on the position or momentum axis.
pub fn marginal<S: Covariance>(state: &S, axis: Axis, coordinate: &[f64]) -> Result<f64> {
    let b = state.covariance()?.blocks();
    let block = match axis {
        Axis::Position => b.xx,
        Axis::Momentum => b.pp,
    };
    gaussian_density(&SymMatrix::from_mat_lossy(block), coordinate)
}

/// `M = (ħ/2)Σ⁻¹` is symplectic exactly for pure states.
pub fn ellipsoid_matrix_is_symplectic(state: &CovState, tol: &TolerancePolicy) -> Result<f64> {
    let m = state.ellipsoid(tol)?;
    Ok(crate::symplectic::symplectic_residual(m.m().as_mat()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::random_symplectic;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn cov(hbar: f64, rows: &[Vec<f64>]) -> CovState {
        CovState::new(hbar, SymMatrix::from_rows(rows).unwrap(), &tol()).unwrap()
    }

    #[test]
    fn quantum_condition_examples() {
        let h = 0.8;
        let blob = CovState::new(h, SymMatrix::scaled_identity(4, h / 2.0), &tol()).unwrap();
        let q = quantum_condition(&blob, &tol());
        assert!(q.holds && q.margin.abs() < 1e-15);
        let sub = CovState::new(h, SymMatrix::scaled_identity(4, h / 4.0), &tol()).unwrap();
        let q = quantum_condition(&sub, &tol());
        assert!(!q.holds);
        assert!((q.nu_min - h / 4.0).abs() < 1e-15);
        // n = 1 diagonal: holds iff σxx σpp ≥ ħ²/4.
        for (sxx, spp) in [(1.0, 0.0625), (1.0, 0.06), (0.2, 0.3125), (0.2, 0.4)] {
            let s = cov(0.5, &[vec![sxx, 0.0], vec![0.0, spp]]);
            let expect = sxx * spp >= 0.0625 - 1e-15;
            assert_eq!(quantum_condition(&s, &tol()).holds, expect, "{sxx} {spp}");
        }
    }

    #[test]
    fn rsup_examples() {
        let blob = CovState::new(1.0, SymMatrix::scaled_identity(4, 0.5), &tol()).unwrap();
        assert!(rsup_check(&blob, 1, &tol()).unwrap());
        assert!(rsup_check(&blob, 2, &tol()).unwrap());
        assert!(matches!(rsup_check(&blob, 3, &tol()), Err(Error::IndexOutOfRange { .. })));
        let h = 3f64.sqrt() / 2.0;
        let s = cov(1.0, &[vec![1.0, h], vec![h, 1.0]]);
        assert!(rsup_check(&s, 1, &tol()).unwrap());
        let s = cov(1.0, &[vec![1.0, 0.9], vec![0.9, 1.0]]);
        assert!(!rsup_check(&s, 1, &tol()).unwrap());
    }

    #[test]
    fn projection_of_identity_is_ball() {
        let omega = PhaseEllipsoid::new(2.0, SymMatrix::identity(4), &tol()).unwrap();
        let (x, p) = project(&omega, &tol()).unwrap();
        for b in [x, p] {
            assert!(rel_diff(b.shape().as_mat(), &Mat::identity(2, 2)) < 1e-15);
            assert_eq!(b.level(), 2.0);
        }
    }

    #[test]
    fn projection_matches_boundary_maximization() {
        let (a, b, c) = (2.0, 0.7, 1.5);
        let hbar = 1.0;
        let omega = PhaseEllipsoid::new(hbar, SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap(), &tol()).unwrap();
        let (x, _) = project(&omega, &tol()).unwrap();
        // Oracle: largest |x| on the ellipse boundary via a fine angular scan
        // followed by golden-section refinement.
        let radius = |th: f64| {
            let (u, v) = (th.cos(), th.sin());
            (hbar / (a * u * u + 2.0 * b * u * v + c * v * v)).sqrt() * u
        };
        let mut best = 0.0;
        let mut arg = 0.0;
        for k in 0..2000 {
            let th = k as f64 * std::f64::consts::PI / 2000.0 - std::f64::consts::FRAC_PI_2;
            if radius(th) > best {
                best = radius(th);
                arg = th;
            }
        }
        let (mut lo, mut hi) = (arg - 0.01, arg + 0.01);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if radius(m1) < radius(m2) {
                lo = m1
            } else {
                hi = m2
            }
        }
        let xmax = radius(0.5 * (lo + hi));
        let predicted = (hbar / (a - b * b / c)).sqrt();
        assert!((xmax - predicted).abs() < 1e-9);
        assert!((x.shape().get(0, 0) - (a - b * b / c)).abs() < 1e-14);
    }

    #[test]
    fn projection_of_dilated_ball() {
        let hbar = 1.0;
        let l = GenMatrixHelper::l();
        let s = generator(&Generator::Ml(l.clone()), &tol()).unwrap();
        // S(B(√ħ)) = {z : S⁻ᵀS⁻¹ z·z ≤ ħ}.
        let sinv = s.inverse();
        let m = SymMatrix::identity(4).congruence(sinv.as_mat());
        let (x, p) = project(&PhaseEllipsoid::new(hbar, m, &tol()).unwrap(), &tol()).unwrap();
        let ball = EllipsoidBody::ball(Space::Position, 2, hbar.sqrt()).unwrap();
        let linv = l.inverse().unwrap();
        let expect_x = ball.linear_image(linv.as_mat()).unwrap();
        let expect_p = ball.linear_image(&l.as_mat().transpose()).unwrap();
        assert!(rel_diff(x.shape().as_mat(), expect_x.shape().as_mat()) < 1e-13);
        assert!(rel_diff(p.shape().as_mat(), expect_p.shape().as_mat()) < 1e-13);
    }

    struct GenMatrixHelper;
    impl GenMatrixHelper {
        fn l() -> crate::matcore::GenMatrix {
            crate::matcore::GenMatrix::from_rows(&[vec![1.5, 0.2], vec![-0.4, 0.9]]).unwrap()
        }
    }

    #[test]
    fn pair_check_examples() {
        let blob = CovState::new(1.0, SymMatrix::scaled_identity(2, 0.5), &tol()).unwrap();
        let r = projection_pair_check(&blob, &tol()).unwrap();
        assert!(r.is_saturated);
        let s = cov(1.0, &[vec![1.0, 0.8], vec![0.8, 1.0]]);
        let r = projection_pair_check(&s, &tol()).unwrap();
        assert!(r.is_pair && !r.is_saturated);
        // Scalar Schur complements: A = B = (ħ/2)/σ·... λ = ħ²/(4σxxσpp).
        assert!((r.lambda[0] - 0.25).abs() < 1e-14);
        let bad = CovState::new(1.0, SymMatrix::scaled_identity(2, 0.2), &tol()).unwrap();
        assert!(matches!(
            projection_pair_check(&bad, &tol()),
            Err(Error::QuantumConditionViolated { .. })
        ));
    }

    #[test]
    fn wigner_g_examples() {
        let (g, _) = wigner_g(&GaussianPure::standard(1.0, 3), &tol()).unwrap();
        assert!(rel_diff(g.as_mat(), &Mat::identity(6, 6)) < 1e-15);
        let psi = GaussianPure::new(1.0, SymMatrix::identity(1), SymMatrix::identity(1), &tol()).unwrap();
        let (g, s) = wigner_g(&psi, &tol()).unwrap();
        assert!(rel_diff(g.as_mat(), &Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0])) < 1e-15);
        assert!(s.residual() < 1e-15);
    }

    #[test]
    fn sigma_wy_examples() {
        let s = sigma_from_wy(&GaussianPure::standard(1.0, 2), &tol()).unwrap();
        assert!(rel_diff(s.sigma().as_mat(), &(Mat::identity(4, 4) * 0.5)) < 1e-15);
        let h = 3f64.sqrt() / 2.0;
        let st = cov(1.0, &[vec![1.0, h], vec![h, 1.0]]);
        let psi = wy_from_sigma(&st, &tol()).unwrap();
        assert!((psi.w().get(0, 0) - 0.5).abs() < 1e-14);
        assert!((psi.y().get(0, 0) + h).abs() < 1e-14);
        let mixed = CovState::new(1.0, SymMatrix::identity(2), &tol()).unwrap();
        assert!(matches!(wy_from_sigma(&mixed, &tol()), Err(Error::NotPure { .. })));
    }

    #[test]
    fn fourier_examples() {
        let f = fourier_gaussian(&GaussianPure::standard(1.0, 2), &tol()).unwrap();
        assert!(rel_diff(f.w().as_mat(), &Mat::identity(2, 2)) < 1e-15);
        assert!(f.y().as_mat().amax() < 1e-15);
        let psi = GaussianPure::new(1.0, SymMatrix::identity(1), SymMatrix::identity(1), &tol()).unwrap();
        let f = fourier_gaussian(&psi, &tol()).unwrap();
        // 1/(1 + i) = (1 − i)/2
        assert!((f.w().get(0, 0) - 0.5).abs() < 1e-15);
        assert!((f.y().get(0, 0) + 0.5).abs() < 1e-15);
        let ff = fourier_gaussian(&f, &tol()).unwrap();
        assert!((ff.w().get(0, 0) - 1.0).abs() < 1e-14);
        assert!((ff.y().get(0, 0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn metaplectic_examples() {
        let psi = GaussianPure::standard(1.0, 1);
        let same = metaplectic_apply(&Generator::Vp(SymMatrix::zeros(1)), &psi, &tol()).unwrap();
        assert_eq!(same, psi);
        let l = crate::matcore::GenMatrix::from_rows(&[vec![2.0]]).unwrap();
        let out = metaplectic_apply(&Generator::Ml(l), &psi, &tol()).unwrap();
        assert_eq!(out.w().get(0, 0), 4.0);
        assert_eq!(out.y().get(0, 0), 0.0);
        let singular = crate::matcore::GenMatrix::from_rows(&[vec![0.0]]).unwrap();
        assert!(matches!(
            metaplectic_apply(&Generator::Ml(singular), &psi, &tol()),
            Err(Error::SingularL { .. })
        ));
    }

    #[test]
    fn purity_examples() {
        let blob = CovState::new(2.0, SymMatrix::scaled_identity(4, 1.0), &tol()).unwrap();
        assert!((purity(&blob) - 1.0).abs() < 1e-15);
        let m = CovState::new(1.0, SymMatrix::identity(2), &tol()).unwrap();
        assert!((purity(&m) - 0.5).abs() < 1e-15);
        assert!((purity_from_nu(&m) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn blob_examples() {
        let hbar = 1.3;
        let s = random_symplectic(3, 2, 0.6);
        let sigma = SymMatrix::identity(4).congruence(s.as_mat()).scale(hbar / 2.0);
        let st = CovState::new(hbar, sigma, &tol()).unwrap();
        let v = is_quantum_blob(&st, &tol()).unwrap();
        assert!(v.is_blob);
        let w = v.witness.unwrap();
        let recon = SymMatrix::identity(4).congruence(w.as_mat()).scale(hbar / 2.0);
        assert!(rel_diff(recon.as_mat(), st.sigma().as_mat()) < 1e-9);

        let d = CovState::new(hbar, SymMatrix::from_diagonal(&[hbar, hbar / 4.0]), &tol()).unwrap();
        assert!(is_quantum_blob(&d, &tol()).unwrap().is_blob);
        let big = CovState::new(hbar, SymMatrix::scaled_identity(2, hbar), &tol()).unwrap();
        assert!(!is_quantum_blob(&big, &tol()).unwrap().is_blob);
    }

    #[test]
    fn wigner_at_origin() {
        let v = wigner_eval(&GaussianPure::standard(1.0, 1), &[0.0, 0.0]).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn wigner_integrates_to_one_and_marginal_matches() {
        let st = cov(1.0, &[vec![0.8, 0.3], vec![0.3, 0.9]]);
        let sx = st.sigma().get(0, 0).sqrt();
        let sp = st.sigma().get(1, 1).sqrt();
        let m = 600;
        let (hx, hp) = (12.0 * sx / m as f64, 12.0 * sp / m as f64);
        let trap = |k: usize| if k == 0 || k == m { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for i in 0..=m {
            for j in 0..=m {
                let z = [-6.0 * sx + i as f64 * hx, -6.0 * sp + j as f64 * hp];
                total += trap(i) * trap(j) * wigner_eval(&st, &z).unwrap();
            }
        }
        assert!((total * hx * hp - 1.0).abs() < 1e-6);
        for x in [-1.0, 0.0, 0.4, 2.0] {
            let mut acc = 0.0;
            for j in 0..=m {
                acc += trap(j) * wigner_eval(&st, &[x, -6.0 * sp + j as f64 * hp]).unwrap();
            }
            let mx = marginal(&st, Axis::Position, &[x]).unwrap();
            assert!((acc * hp - mx).abs() < 1e-6);
        }
    }
}
