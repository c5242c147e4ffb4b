//! Pauli reconstruction: Gaussian states whose covariance ellipsoid projects
//! onto prescribed position and momentum ellipsoids.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{
    is_quantum_blob, project, purity, purity_from_nu, quantum_condition, wy_from_sigma, CovState, GaussianMixed,
    GaussianPure,
};
use crate::matcore::{principal_sqrt, rel_diff, GenMatrix, Mat, SymMatrix, TolerancePolicy};
use crate::polarity::check_hbar;
use crate::sampling::{normal, seeded};
use crate::symplectic::{generator, symplectic_residual, Generator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambiguity {
    Unique,
    SignPair,
}

impl Ambiguity {
    pub fn name(self) -> &'static str {
        match self {
            Ambiguity::Unique => "Unique",
            Ambiguity::SignPair => "SignPair",
        }
    }
}

/// Worst residuals over all partners of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Verification {
    /// Relative distance between the projected shadows and the inputs.
    pub reprojection: f64,
    /// `‖MᵀJM − J‖/‖M‖²` for `M = (ħ/2)Σ⁻¹`.
    pub symplectic: f64,
    /// Relative residual of `Σ_PP = (ħ/2)(W + YW⁻¹Y)`.
    pub momentum_block: f64,
}

impl Verification {
    fn merge(self, o: Verification) -> Verification {
        Verification {
            reprojection: self.reprojection.max(o.reprojection),
            symplectic: self.symplectic.max(o.symplectic),
            momentum_block: self.momentum_block.max(o.momentum_block),
        }
    }

    pub fn worst(&self) -> f64 {
        self.reprojection.max(self.symplectic).max(self.momentum_block)
    }
}

/// Pure Gaussians sharing the same position and momentum shadows.
#[derive(Debug, Clone)]
pub struct PauliSolution {
    pub partners: Vec<GaussianPure>,
    pub blob_sigmas: Vec<CovState>,
    pub ambiguity: Ambiguity,
    /// Rank of the off-diagonal block `Σ_XP`.
    pub xp_rank: usize,
    pub verification: Verification,
}

/// Bound applied to every post-verification residual.
pub fn verification_bound(tol: &TolerancePolicy) -> f64 {
    tol.rel_eq.max(1e-8)
}

fn check_partner(
    state: &CovState,
    a: &SymMatrix,
    b: &SymMatrix,
    tol: &TolerancePolicy,
) -> Result<(GaussianPure, Verification)> {
    let hbar = state.hbar();
    let (x, p) = project(&state.ellipsoid(tol)?, tol)?;
    let reprojection = rel_diff(x.normalized(hbar).shape().as_mat(), a.as_mat())
        .max(rel_diff(p.normalized(hbar).shape().as_mat(), b.as_mat()));
    let m = state.ellipsoid(tol)?;
    let symplectic = symplectic_residual(m.m().as_mat());
    let bound = verification_bound(tol);
    let strict = TolerancePolicy { rel_eq: bound, ..*tol };
    let psi = wy_from_sigma(state, &strict)?;
    let winv = psi.w().inverse(tol)?;
    let y = psi.y().as_mat();
    let pp = (psi.w().as_mat() + y * winv.as_mat() * y) * (hbar / 2.0);
    let momentum_block = rel_diff(&pp, &state.blocks().pp);
    let v = Verification {
        reprojection,
        symplectic,
        momentum_block,
    };
    for (what, r) in [
        ("shadow reprojection", reprojection),
        ("M symplectic", symplectic),
        ("momentum block", momentum_block),
    ] {
        if r.is_nan() || r > bound {
            return Err(Error::VerificationFailed { what, residual: r });
        }
    }
    Ok((psi, v))
}

/// One-mode Pauli problem: every pure Gaussian with `⟨x²⟩ = σxx`,
/// `⟨p²⟩ = σpp`.
pub fn pauli_1d(sigma_xx: f64, sigma_pp: f64, hbar: f64, tol: &TolerancePolicy) -> Result<PauliSolution> {
    check_hbar(hbar)?;
    if !(sigma_xx.is_finite() && sigma_pp.is_finite()) {
        return Err(Error::NonFinite);
    }
    if sigma_xx <= 0.0 || sigma_pp <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: sigma_xx.min(sigma_pp),
            floor: 0.0,
        });
    }
    let product = sigma_xx * sigma_pp;
    let bound = hbar * hbar / 4.0;
    if product < bound - tol.slack_at(product) {
        return Err(Error::SubHeisenberg { product, bound });
    }
    let sxp = (product - bound).max(0.0).sqrt();
    let unique = sxp <= tol.rel_eq * product.sqrt();
    let signs: &[f64] = if unique { &[1.0] } else { &[1.0, -1.0] };
    let a = SymMatrix::from_diagonal(&[hbar / (2.0 * sigma_xx)]);
    let b = SymMatrix::from_diagonal(&[hbar / (2.0 * sigma_pp)]);
    let mut sol = PauliSolution {
        partners: Vec::new(),
        blob_sigmas: Vec::new(),
        ambiguity: if unique { Ambiguity::Unique } else { Ambiguity::SignPair },
        xp_rank: usize::from(!unique),
        verification: Verification::default(),
    };
    for &s in signs {
        let c = if unique { 0.0 } else { s * sxp };
        let sigma = SymMatrix::from_rows(&[vec![sigma_xx, c], vec![c, sigma_pp]])?;
        let st = CovState::new(hbar, sigma, tol)?;
        let (psi, v) = check_partner(&st, &a, &b, tol)?;
        sol.verification = sol.verification.merge(v);
        sol.partners.push(psi);
        sol.blob_sigmas.push(st);
    }
    Ok(sol)
}

/// The unique quantum blob in `X × X^ħ` projecting onto both factors, for
/// `X = {Ax·x ≤ ħ}`.
pub fn reconstruct_saturated(a: &SymMatrix, hbar: f64, tol: &TolerancePolicy) -> Result<PauliSolution> {
    check_hbar(hbar)?;
    a.check_pd(tol)?;
    let a_inv = a.inverse(tol)?;
    let sigma = SymMatrix::block_diag(&a_inv, a).scale(hbar / 2.0);
    let st = CovState::new(hbar, sigma, tol)?;
    let (psi, v) = check_partner(&st, a, &a_inv, tol)?;
    let direct = GaussianPure::new(hbar, a.clone(), SymMatrix::zeros(a.dim()), tol)?;
    let drift = rel_diff(psi.w().as_mat(), direct.w().as_mat()).max(psi.y().as_mat().norm());
    if drift > verification_bound(tol) {
        return Err(Error::VerificationFailed {
            what: "saturated state (W, Y) = (A, 0)",
            residual: drift,
        });
    }
    let blob = is_quantum_blob(&st, tol)?;
    if !blob.is_blob {
        return Err(Error::VerificationFailed {
            what: "saturated state is a blob",
            residual: blob.max_deviation,
        });
    }
    Ok(PauliSolution {
        partners: vec![direct],
        blob_sigmas: vec![st],
        ambiguity: Ambiguity::Unique,
        xp_rank: 0,
        verification: v,
    })
}

/// Eigenvalues of `AB` (ascending), computed as the spectrum of
/// `A^{1/2}BA^{1/2}`.
pub fn pair_eigenvalues(a: &SymMatrix, b: &SymMatrix, tol: &TolerancePolicy) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    a.check_pd(tol)?;
    b.check_pd(tol)?;
    let a_half = a.sqrt(tol)?;
    Ok(b.congruence(a_half.as_mat()).eigenvalues())
}

fn require_pair(lambda: &[f64], tol: &TolerancePolicy) -> Result<()> {
    let lmax = lambda.last().copied().unwrap_or(0.0);
    if lmax > 1.0 + tol.rel_eq {
        return Err(Error::NotQuantumPair { lambda_max: lmax });
    }
    Ok(())
}

fn diag_fn(m: &SymMatrix, f: impl Fn(f64) -> f64) -> Mat {
    let e = m.eigen();
    let d: Vec<f64> = e.values.iter().map(|&v| f(v)).collect();
    &e.vectors * Mat::from_diagonal(&DVector::from_vec(d)) * e.vectors.transpose()
}

/// The two quantum blobs in `X × P` projecting onto `X = {Ax·x ≤ ħ}` and
/// `P = {Bp·p ≤ ħ}`.
///
/// `Σ_XX = (ħ/2)A⁻¹`, `Σ_PP = (ħ/2)B⁻¹`, and `Σ_PX = ±(ħ/2)D^{1/2}` with
/// `D = B⁻¹A⁻¹ − I` rooted through the similarity `D = A^{1/2}KA^{−1/2}`,
/// `K = A^{−1/2}B⁻¹A^{−1/2} − I ⪰ 0`.
pub fn reconstruct_pair(a: &SymMatrix, b: &SymMatrix, hbar: f64, tol: &TolerancePolicy) -> Result<PauliSolution> {
    check_hbar(hbar)?;
    let lambda = pair_eigenvalues(a, b, tol)?;
    require_pair(&lambda, tol)?;
    if lambda.iter().all(|l| (l - 1.0).abs() <= tol.rel_eq) {
        let mut sol = reconstruct_saturated(a, hbar, tol)?;
        let (_, v) = check_partner(&sol.blob_sigmas[0], a, b, tol)?;
        sol.verification = v;
        return Ok(sol);
    }
    let n = a.dim();
    let a_half = a.sqrt(tol)?;
    let a_inv_half = a.inv_sqrt(tol)?;
    let b_inv = b.inverse(tol)?;
    let k = b_inv.congruence(a_inv_half.as_mat()).sub(&SymMatrix::identity(n));
    let k_half = diag_fn(&k, |v| v.max(0.0).sqrt());
    let xp_rank = lambda.iter().filter(|&&l| l < 1.0 - tol.rel_eq).count();

    // Σ_PX = (ħ/2)·A^{1/2}K^{1/2}A^{−1/2}; the top-right block is its transpose.
    let d_half = a_half.as_mat() * &k_half * a_inv_half.as_mat();
    if xp_rank == n {
        let d = a_half.as_mat() * k.as_mat() * a_inv_half.as_mat();
        let schur_root = principal_sqrt(&GenMatrix::new(d)?, tol)?;
        let gap = rel_diff(schur_root.as_mat(), &d_half);
        if gap > verification_bound(tol) {
            return Err(Error::VerificationFailed {
                what: "principal root of B⁻¹A⁻¹ − I",
                residual: gap,
            });
        }
    }
    let sxx = a.inverse(tol)?.scale(hbar / 2.0);
    let spp = b_inv.scale(hbar / 2.0);
    let mut sol = PauliSolution {
        partners: Vec::new(),
        blob_sigmas: Vec::new(),
        ambiguity: Ambiguity::SignPair,
        xp_rank,
        verification: Verification::default(),
    };
    for s in [1.0, -1.0] {
        let xp = d_half.transpose() * (s * hbar / 2.0);
        let sigma = SymMatrix::from_blocks(&sxx, &xp, &spp);
        let st = CovState::new(hbar, sigma, tol)?;
        let (psi, v) = check_partner(&st, a, b, tol)?;
        sol.verification = sol.verification.merge(v);
        sol.partners.push(psi);
        sol.blob_sigmas.push(st);
    }
    Ok(sol)
}

/// Purity of the maximal-volume state next to the values suggested by
/// other closed forms, all evaluated on the same `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PurityFlags {
    /// `Π λ_j^{1/2}`, which matches the constructed state.
    pub closed_form: f64,
    /// `Π λ_j²` over the eigenvalues below one.
    pub squared_exponent: f64,
    /// `Π λ_j`.
    pub unit_exponent: f64,
    /// `Π λ_j^{1/4}`, obtained when the reduced covariance is taken as
    /// `(ħ/2)diag(λ^{−1/4}, λ^{−1/4})`.
    pub quarter_exponent: f64,
    /// True when `squared_exponent` differs from the computed purity.
    pub squared_exponent_mismatch: bool,
    pub quarter_exponent_mismatch: bool,
}

#[derive(Debug, Clone)]
pub struct MaxVolumeState {
    pub state: GaussianMixed,
    /// Eigenvalues of `AB`, ascending.
    pub lambda: Vec<f64>,
    /// `(ħ/2)ⁿ(det Σ)^{−1/2}`.
    pub purity: f64,
    /// `Π (ħ/2)/ν_j`.
    pub purity_from_nu: f64,
    pub flags: PurityFlags,
    pub reprojection: f64,
    /// Distance to the block-diagonal form `(ħ/2)diag(A⁻¹, B⁻¹)`.
    pub block_form_gap: f64,
}

/// Largest-volume Gaussian state whose covariance ellipsoid lies in `X × P`
/// and projects onto `X` and `P`.
///
/// Built in the frame where `LᵀAL = L⁻¹BL⁻ᵀ = diag(√λ)`: there the body is
/// `{Σ√λ_j(x_j² + p_j²) ≤ ħ}`, with covariance `(ħ/2)diag(λ^{−1/2}, λ^{−1/2})`.
pub fn max_volume_state(a: &SymMatrix, b: &SymMatrix, hbar: f64, tol: &TolerancePolicy) -> Result<MaxVolumeState> {
    check_hbar(hbar)?;
    let lambda = pair_eigenvalues(a, b, tol)?;
    require_pair(&lambda, tol)?;
    let bd = crate::symplectic::balanced_diagonalize(a, b, tol)?;
    let inv_root: Vec<f64> = bd.lambda.iter().map(|l| hbar / 2.0 / l.sqrt()).collect();
    let mut d = inv_root.clone();
    d.extend_from_slice(&inv_root);
    let reduced = SymMatrix::from_diagonal(&d);
    let ml = generator(&Generator::Ml(bd.l.clone()), tol)?;
    // z = M_L⁻¹ z′, so Σ = M_L⁻¹ Σ′ M_L⁻ᵀ.
    let back = ml.inverse();
    let sigma = reduced.congruence(&back.as_mat().transpose());
    let st = CovState::new(hbar, sigma, tol)?;

    let (x, p) = project(&st.ellipsoid(tol)?, tol)?;
    let reprojection = rel_diff(x.normalized(hbar).shape().as_mat(), a.as_mat())
        .max(rel_diff(p.normalized(hbar).shape().as_mat(), b.as_mat()));
    let block = SymMatrix::block_diag(&a.inverse(tol)?, &b.inverse(tol)?).scale(hbar / 2.0);
    let block_form_gap = rel_diff(st.sigma().as_mat(), block.as_mat());
    let bound = verification_bound(tol);
    if reprojection > bound {
        return Err(Error::VerificationFailed {
            what: "shadow reprojection",
            residual: reprojection,
        });
    }
    if block_form_gap > bound {
        return Err(Error::VerificationFailed {
            what: "block-diagonal form",
            residual: block_form_gap,
        });
    }

    let mu = purity(&st);
    let mu_nu = purity_from_nu(&st);
    let below: Vec<f64> = lambda.iter().copied().filter(|&l| l < 1.0 - tol.rel_eq).collect();
    let closed_form: f64 = lambda.iter().map(|l| l.sqrt()).product();
    let squared_exponent: f64 = below.iter().map(|l| l * l).product();
    let unit_exponent: f64 = lambda.iter().product();
    let quarter_exponent: f64 = lambda.iter().map(|l| l.powf(0.25)).product();
    let close = |v: f64| (v - mu).abs() <= bound * mu.max(1e-300);
    let flags = PurityFlags {
        closed_form,
        squared_exponent,
        unit_exponent,
        quarter_exponent,
        squared_exponent_mismatch: !close(squared_exponent),
        quarter_exponent_mismatch: !close(quarter_exponent),
    };
    Ok(MaxVolumeState {
        state: GaussianMixed::new(st),
        lambda,
        purity: mu,
        purity_from_nu: mu_nu,
        flags,
        reprojection,
        block_form_gap,
    })
}

/// Outcome of a randomized search over states with prescribed shadows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub trials: usize,
    /// Candidates that satisfied the probe's admissibility test.
    pub admissible: usize,
    /// Candidates that beat the reference (a blob different from it, or a
    /// larger determinant).
    pub violations: usize,
}

fn shadow_candidate<R: Rng + ?Sized>(
    rng: &mut R,
    sxx: &SymMatrix,
    spp: &SymMatrix,
    hbar: f64,
    tol: &TolerancePolicy,
) -> Option<CovState> {
    let n = sxx.dim();
    let scale = 10f64.powf(-rng.random_range(0.0..6.0)) * hbar;
    let xp = Mat::from_fn(n, n, |_, _| scale * normal(rng));
    let sigma = SymMatrix::from_blocks(sxx, &xp, spp);
    if !sigma.is_pd(tol) {
        return None;
    }
    CovState::new(hbar, sigma, tol).ok()
}

/// Searches `Σ = [[(ħ/2)A⁻¹, C], [Cᵀ, (ħ/2)A]]` over random `C ≠ 0` for blobs
/// other than the saturated one. All such `Σ` reproject onto `X` and `X^ħ`.
pub fn saturated_uniqueness_probe(
    a: &SymMatrix,
    hbar: f64,
    seed: u64,
    trials: usize,
    tol: &TolerancePolicy,
) -> Result<ProbeReport> {
    let reference = reconstruct_saturated(a, hbar, tol)?;
    let sxx = a.inverse(tol)?.scale(hbar / 2.0);
    let spp = a.scale(hbar / 2.0);
    let mut rng = seeded(seed);
    let mut report = ProbeReport {
        trials,
        admissible: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let Some(st) = shadow_candidate(&mut rng, &sxx, &spp, hbar, tol) else {
            continue;
        };
        if !quantum_condition(&st, tol).holds {
            continue;
        }
        report.admissible += 1;
        let gap = rel_diff(st.sigma().as_mat(), reference.blob_sigmas[0].sigma().as_mat());
        if is_quantum_blob(&st, tol)?.is_blob && gap > 1e-8 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Compares `det Σ` of random quantum states with the shadows `X`, `P`
/// against the maximal-volume state.
pub fn volume_maximality_probe(
    a: &SymMatrix,
    b: &SymMatrix,
    hbar: f64,
    seed: u64,
    trials: usize,
    tol: &TolerancePolicy,
) -> Result<ProbeReport> {
    let best = max_volume_state(a, b, hbar, tol)?;
    let best_det = best.state.state().sigma().det();
    let sxx = a.inverse(tol)?.scale(hbar / 2.0);
    let spp = b.inverse(tol)?.scale(hbar / 2.0);
    let mut rng = seeded(seed);
    let mut report = ProbeReport {
        trials,
        admissible: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let Some(st) = shadow_candidate(&mut rng, &sxx, &spp, hbar, tol) else {
            continue;
        };
        if !quantum_condition(&st, tol).holds {
            continue;
        }
        report.admissible += 1;
        if st.sigma().det() > best_det * (1.0 + tol.rel_eq) {
            report.violations += 1;
        }
    }
    Ok(report)
}
