//! Symplectic capacities of ellipsoids and of products `X × P` of
//! position/momentum ellipsoids.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian::{quantum_condition, CovState, PhaseEllipsoid};
use crate::matcore::{loewner_leq, SymMatrix, TolerancePolicy};
use crate::polarity::{check_hbar, factorial, unit_ball_volume, ConvexBody, EllipsoidBody, Space};
use crate::reconstruct::pair_eigenvalues;
use crate::symplectic::symplectic_eigenvalues;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapacityFormula {
    EllipsoidNuMax,
    ProductScaling,
}

impl CapacityFormula {
    pub fn name(self) -> &'static str {
        match self {
            CapacityFormula::EllipsoidNuMax => "EllipsoidNuMax",
            CapacityFormula::ProductScaling => "ProductScaling",
        }
    }
}

/// The two independent routes to `c_max(X × P)` and the inverse-eigenvalue
/// expression `4ħ·max_j λ_j⁻¹`, kept for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCrossCheck {
    /// `max{μ : μX^ħ ⊆ P}` from the spectrum: `λ_max^{−1/2}`.
    pub scaling_eigen: f64,
    /// Same factor located by bisection on the Löwner order.
    pub scaling_search: f64,
    pub inverse_eigen_formula: f64,
    pub inverse_eigen_mismatch: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub value: f64,
    pub formula: CapacityFormula,
    /// Symplectic eigenvalues (ellipsoids) or eigenvalues of `AB` (products),
    /// ascending.
    pub witnesses: Vec<f64>,
    pub cross_check: Option<ProductCrossCheck>,
}

/// Capacity of `{Mz·z ≤ level}`: `π·level/ν_max(M)`.
pub fn capacity_of_level_set(m: &SymMatrix, level: f64, tol: &TolerancePolicy) -> Result<CapacityReport> {
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::InvalidArgument(format!("level must be positive, got {level}")));
    }
    m.check_pd(tol)?;
    let nu = symplectic_eigenvalues(m, tol)?;
    let nu_max = *nu.last().expect("n ≥ 1");
    Ok(CapacityReport {
        value: PI * level / nu_max,
        formula: CapacityFormula::EllipsoidNuMax,
        witnesses: nu,
        cross_check: None,
    })
}

/// Capacity of the phase-space ellipsoid `{Mz·z ≤ ħ}`.
pub fn capacity_ellipsoid(omega: &PhaseEllipsoid, tol: &TolerancePolicy) -> Result<CapacityReport> {
    capacity_of_level_set(omega.m(), omega.hbar(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumThreshold {
    pub capacity: f64,
    pub quantum: bool,
    /// Verdict of `ν_min(Σ) ≥ ħ/2`, computed separately.
    pub nu_verdict: bool,
}

impl QuantumThreshold {
    pub fn agrees(&self) -> bool {
        self.quantum == self.nu_verdict
    }
}

/// Capacity of the covariance ellipsoid and the test `c ≥ πħ`.
pub fn capacity_quantum_threshold(state: &CovState, tol: &TolerancePolicy) -> Result<QuantumThreshold> {
    let omega = state.ellipsoid(tol)?;
    let c = capacity_ellipsoid(&omega, tol)?.value;
    let hbar = state.hbar();
    // c = 2π ν_min(Σ), so the ν-side slack scales by 2π.
    let slack = 2.0 * PI * tol.slack_at(state.sigma().spectral_norm());
    Ok(QuantumThreshold {
        capacity: c,
        quantum: c >= PI * hbar - slack,
        nu_verdict: quantum_condition(state, tol).holds,
    })
}

fn check_product_sides(x: &EllipsoidBody, p: &EllipsoidBody) -> Result<()> {
    if x.space() != Space::Position {
        return Err(Error::SpaceMismatch {
            body: x.space().name(),
            side: "position",
        });
    }
    if p.space() != Space::Momentum {
        return Err(Error::SpaceMismatch {
            body: p.space().name(),
            side: "momentum",
        });
    }
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

/// Largest `μ` with `μX^ħ ⊆ P`, i.e. `μ²B ⪯ A⁻¹`, by bisection.
fn scaling_by_search(a: &SymMatrix, b: &SymMatrix, tol: &TolerancePolicy) -> Result<f64> {
    let a_inv = a.inverse(tol)?;
    let fits = |mu: f64| loewner_leq(&b.scale(mu * mu), &a_inv, tol);
    let (mut lo, mut hi) = (0.0, 1.0);
    while fits(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e150 {
            return Err(Error::VerificationFailed {
                what: "scaling search bracket",
                residual: hi,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fits(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Cylindrical capacity `c_max(X × P) = 4ħ·max{μ : μX^ħ ⊆ P}` of a product
/// of ellipsoids `X = {Ax·x ≤ ħ}`, `P = {Bp·p ≤ ħ}`.
///
/// In the frame where both are `{Σ√λ_j u_j² ≤ ħ}` the factor is
/// `λ_max^{−1/2}`; it is also located by a Löwner bisection and the two must
/// agree to `rel_eq`.
pub fn cmax_product(x: &EllipsoidBody, p: &EllipsoidBody, hbar: f64, tol: &TolerancePolicy) -> Result<CapacityReport> {
    check_hbar(hbar)?;
    check_product_sides(x, p)?;
    let a = x.normalized(hbar).shape().clone();
    let b = p.normalized(hbar).shape().clone();
    let lambda = pair_eigenvalues(&a, &b, tol)?;
    let lmax = *lambda.last().expect("n ≥ 1");
    let lmin = lambda[0];
    let scaling_eigen = 1.0 / lmax.sqrt();
    let scaling_search = scaling_by_search(&a, &b, tol)?;
    let gap = (scaling_eigen - scaling_search).abs() / scaling_eigen;
    if gap > tol.rel_eq {
        return Err(Error::VerificationFailed {
            what: "c_max eigenvalue formula vs scaling search",
            residual: gap,
        });
    }
    let value = 4.0 * hbar * scaling_eigen;
    let inverse_eigen_formula = 4.0 * hbar / lmin;
    Ok(CapacityReport {
        value,
        formula: CapacityFormula::ProductScaling,
        witnesses: lambda,
        cross_check: Some(ProductCrossCheck {
            scaling_eigen,
            scaling_search,
            inverse_eigen_formula,
            inverse_eigen_mismatch: (inverse_eigen_formula - value).abs() > tol.rel_eq * value,
        }),
    })
}

/// Bodies accepted by [`isoperimetric_check`].
#[derive(Debug, Clone)]
pub enum IsoBody {
    Ellipsoid(PhaseEllipsoid),
    Product(EllipsoidBody, EllipsoidBody),
    Convex(ConvexBody),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoReport {
    pub lhs: f64,
    pub rhs: f64,
    pub volume: f64,
    pub holds: bool,
}

/// `c(K) ≤ (n!)^{1/n}|K|^{1/n}` with `c` the ellipsoid capacity or `c_max`
/// for products.
pub fn isoperimetric_check(body: &IsoBody, hbar: f64, tol: &TolerancePolicy) -> Result<IsoReport> {
    let (lhs, volume, n) = match body {
        IsoBody::Ellipsoid(omega) => {
            let c = capacity_ellipsoid(omega, tol)?.value;
            let d = 2 * omega.n();
            let vol = unit_ball_volume(d) * omega.hbar().powi(omega.n() as i32) / omega.m().det().sqrt();
            (c, vol, omega.n())
        }
        IsoBody::Product(x, p) => {
            let c = cmax_product(x, p, hbar, tol)?.value;
            (c, x.volume() * p.volume(), x.dim())
        }
        IsoBody::Convex(_) => {
            return Err(Error::UnsupportedBody {
                op: "isoperimetric_check",
            })
        }
    };
    let nf = n as f64;
    let rhs = factorial(n).powf(1.0 / nf) * volume.powf(1.0 / nf);
    Ok(IsoReport {
        lhs,
        rhs,
        volume,
        holds: lhs <= rhs + tol.rel_eq * rhs,
    })
}
