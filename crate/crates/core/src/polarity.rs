//! Centrally symmetric convex bodies and their ħ-polar duals.
//!
//! The ħ-polar dual of `X ⊂ ℝⁿ_x` is `X^ħ = {p : p·x ≤ ħ for all x ∈ X}`.
//! Ellipsoids, boxes and cross-polytopes are closed under this operation and
//! are dualized exactly.

use nalgebra::DVector;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::matcore::{SymMatrix, TolerancePolicy};
use crate::symplectic::{j_matrix, SymplecticMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Position,
    Momentum,
    Phase,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Position => "position",
            Space::Momentum => "momentum",
            Space::Phase => "phase",
        }
    }

    fn dual(self) -> Result<Space> {
        match self {
            Space::Position => Ok(Space::Momentum),
            Space::Momentum => Ok(Space::Position),
            Space::Phase => Err(Error::PhaseSpaceBody),
        }
    }
}

/// Volume of the Euclidean unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0)
}

pub(crate) fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// `{u : A u·u ≤ level}` with `A` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidBody {
    space: Space,
    a: SymMatrix,
    level: f64,
}

impl EllipsoidBody {
    pub fn new(space: Space, a: SymMatrix, level: f64, tol: &TolerancePolicy) -> Result<Self> {
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::InvalidArgument(format!("ellipsoid level must be > 0, got {level}")));
        }
        a.check_pd(tol)?;
        Ok(Self { space, a, level })
    }

    /// Euclidean ball of radius `r`.
    pub fn ball(space: Space, dim: usize, r: f64) -> Result<Self> {
        Self::new(space, SymMatrix::identity(dim), r * r, &TolerancePolicy::default())
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn shape(&self) -> &SymMatrix {
        &self.a
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Same set, rewritten with level `hbar`: `A → A·hbar/level`.
    pub fn normalized(&self, hbar: f64) -> EllipsoidBody {
        Self {
            space: self.space,
            a: self.a.scale(hbar / self.level),
            level: hbar,
        }
    }

    pub fn volume(&self) -> f64 {
        let d = self.dim();
        unit_ball_volume(d) * self.level.powf(d as f64 / 2.0) / self.a.det().sqrt()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.a.quad_form(u) <= self.level
    }

    /// Image under an invertible linear map `L`: shape `L⁻ᵀ A L⁻¹`.
    pub fn linear_image(&self, l: &crate::matcore::Mat) -> Result<EllipsoidBody> {
        let inv = l
            .clone()
            .try_inverse()
            .ok_or(Error::SingularL { det: l.determinant() })?;
        Ok(Self {
            space: self.space,
            a: self.a.congruence(&inv),
            level: self.level,
        })
    }
}

/// The box `Π [−a_i, a_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBody {
    space: Space,
    half_widths: Vec<f64>,
}

impl BoxBody {
    pub fn new(space: Space, half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() || !half_widths.iter().all(|a| a.is_finite() && *a > 0.0) {
            return Err(Error::InvalidArgument("box half-widths must be finite and > 0".into()));
        }
        Ok(Self { space, half_widths })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn volume(&self) -> f64 {
        self.half_widths.iter().map(|a| 2.0 * a).product()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().zip(&self.half_widths).all(|(x, a)| x.abs() <= *a)
    }
}

/// `{u : Σ w_i |u_i| ≤ level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPolytopeBody {
    space: Space,
    weights: Vec<f64>,
    level: f64,
}

impl CrossPolytopeBody {
    pub fn new(space: Space, weights: Vec<f64>, level: f64) -> Result<Self> {
        if weights.is_empty() || !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidArgument("cross-polytope weights must be finite and > 0".into()));
        }
        if !(level.is_finite() && level > 0.0) {
            return Err(Error::InvalidArgument(format!("cross-polytope level must be > 0, got {level}")));
        }
        Ok(Self { space, weights, level })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `2ᵈ levelᵈ / (d! Π w_i)`, from the decomposition into `2ᵈ` simplices.
    pub fn volume(&self) -> f64 {
        let d = self.dim();
        let prod: f64 = self.weights.iter().product();
        (2.0 * self.level).powi(d as i32) / (factorial(d) * prod)
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().zip(&self.weights).map(|(x, w)| w * x.abs()).sum::<f64>() <= self.level
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ellipsoid(EllipsoidBody),
    Box(BoxBody),
    CrossPolytope(CrossPolytopeBody),
}

impl ConvexBody {
    pub fn space(&self) -> Space {
        match self {
            ConvexBody::Ellipsoid(e) => e.space(),
            ConvexBody::Box(b) => b.space(),
            ConvexBody::CrossPolytope(c) => c.space(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ellipsoid(e) => e.dim(),
            ConvexBody::Box(b) => b.dim(),
            ConvexBody::CrossPolytope(c) => c.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ConvexBody::Ellipsoid(e) => e.volume(),
            ConvexBody::Box(b) => b.volume(),
            ConvexBody::CrossPolytope(c) => c.volume(),
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            ConvexBody::Ellipsoid(e) => e.contains(u),
            ConvexBody::Box(b) => b.contains(u),
            ConvexBody::CrossPolytope(c) => c.contains(u),
        }
    }
}

impl From<EllipsoidBody> for ConvexBody {
    fn from(e: EllipsoidBody) -> Self {
        ConvexBody::Ellipsoid(e)
    }
}

impl From<BoxBody> for ConvexBody {
    fn from(b: BoxBody) -> Self {
        ConvexBody::Box(b)
    }
}

impl From<CrossPolytopeBody> for ConvexBody {
    fn from(c: CrossPolytopeBody) -> Self {
        ConvexBody::CrossPolytope(c)
    }
}

/// Dual of an ellipsoid: `{A u·u ≤ h}^ħ = {A⁻¹ p·p ≤ ħ²/h}`.
pub fn ellipsoid_dual(body: &EllipsoidBody, hbar: f64) -> Result<EllipsoidBody> {
    check_hbar(hbar)?;
    let tol = TolerancePolicy::default();
    Ok(EllipsoidBody {
        space: body.space.dual()?,
        a: body.a.inverse(&tol)?,
        level: hbar * hbar / body.level,
    })
}

pub fn polar_dual(body: &ConvexBody, hbar: f64) -> Result<ConvexBody> {
    check_hbar(hbar)?;
    Ok(match body {
        ConvexBody::Ellipsoid(e) => ConvexBody::Ellipsoid(ellipsoid_dual(e, hbar)?),
        ConvexBody::Box(b) => ConvexBody::CrossPolytope(CrossPolytopeBody {
            space: b.space.dual()?,
            weights: b.half_widths.clone(),
            level: hbar,
        }),
        ConvexBody::CrossPolytope(c) => ConvexBody::Box(BoxBody {
            space: c.space.dual()?,
            half_widths: c.weights.iter().map(|w| hbar * w / c.level).collect(),
        }),
    })
}

pub(crate) fn check_hbar(hbar: f64) -> Result<()> {
    if hbar.is_finite() && hbar > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("hbar must be finite and > 0, got {hbar}")))
    }
}

/// `h_K(d) = sup_{u ∈ K} u·d` for the unit vector along `direction`.
pub fn support_function(body: &ConvexBody, direction: &[f64]) -> Result<f64> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) || direction.len() != body.dim() {
        return Err(Error::InvalidArgument("direction must be nonzero and match the body dimension".into()));
    }
    let d: Vec<f64> = direction.iter().map(|v| v / norm).collect();
    Ok(match body {
        ConvexBody::Ellipsoid(e) => {
            let inv = e.a.inverse(&TolerancePolicy::default())?;
            (e.level * inv.quad_form(&d)).sqrt()
        }
        ConvexBody::Box(b) => b.half_widths.iter().zip(&d).map(|(a, x)| a * x.abs()).sum(),
        ConvexBody::CrossPolytope(c) => {
            c.level * c.weights.iter().zip(&d).map(|(w, x)| x.abs() / w).fold(0.0, f64::max)
        }
    })
}

/// Outcome of testing `X^ħ ⊆ P` for a pair of ellipsoids.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPairReport {
    pub is_pair: bool,
    pub is_saturated: bool,
    /// Eigenvalues of `AB` after level normalization, descending.
    pub lambda: Vec<f64>,
    /// A point on the boundary of `X^ħ` lying outside `P` when the pair fails.
    pub witness: Option<Vec<f64>>,
}

/// Tests whether `(X, P)` is a quantum dual pair, i.e. `X^ħ ⊆ P`.
///
/// Both bodies are rescaled to level `ħ`; the pair holds iff every eigenvalue
/// of `AB` is at most 1 and is saturated (`P = X^ħ`) iff all equal 1.
pub fn is_quantum_pair(
    x: &EllipsoidBody,
    p: &EllipsoidBody,
    hbar: f64,
    tol: &TolerancePolicy,
) -> Result<DualPairReport> {
    check_hbar(hbar)?;
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: p.dim(),
        });
    }
    let a = x.normalized(hbar).a;
    let b = p.normalized(hbar).a;
    let a_half = a.sqrt(tol)?;
    let c = b.congruence(a_half.as_mat());
    let eig = c.eigen();
    let mut lambda = eig.values.clone();
    lambda.reverse();
    let lmax = lambda[0];
    let is_pair = lmax <= 1.0 + tol.rel_eq;
    let is_saturated = lambda.iter().all(|l| (l - 1.0).abs() <= tol.rel_eq);
    let witness = if is_pair {
        None
    } else {
        let top = eig.vectors.column(eig.values.len() - 1).into_owned();
        let w = a_half.as_mat() * top * hbar.sqrt();
        Some(w.as_slice().to_vec())
    };
    Ok(DualPairReport {
        is_pair,
        is_saturated,
        lambda,
        witness,
    })
}

/// One of the two coordinate Lagrangian planes `ℓ_X = ℝⁿ × 0`, `ℓ_P = 0 × ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Plane {
    X,
    P,
}

/// An ellipsoid lying in the Lagrangian plane `S·ℓ`, stored as the frame `S`,
/// the model plane `ℓ` and the body in model coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianBody {
    pub frame: SymplecticMatrix,
    pub plane: Plane,
    pub body: EllipsoidBody,
}

impl LagrangianBody {
    pub fn new(frame: SymplecticMatrix, body: EllipsoidBody) -> Result<Self> {
        let plane = match body.space() {
            Space::Position => Plane::X,
            Space::Momentum => Plane::P,
            Space::Phase => return Err(Error::PhaseSpaceBody),
        };
        if frame.n() != body.dim() {
            return Err(Error::DimensionMismatch {
                expected: frame.n(),
                found: body.dim(),
            });
        }
        Ok(Self { frame, plane, body })
    }

    /// Phase-space point `S·(u, 0)` or `S·(0, u)`.
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let n = self.frame.n();
        let mut z = vec![0.0; 2 * n];
        let off = match self.plane {
            Plane::X => 0,
            Plane::P => n,
        };
        z[off..off + n].copy_from_slice(u);
        self.frame.apply(&z)
    }

    /// Image under `S₀`: same model body, frame `S₀·S`.
    pub fn push_forward(&self, s0: &SymplecticMatrix) -> LagrangianBody {
        Self {
            frame: s0.compose(&self.frame),
            plane: self.plane,
            body: self.body.clone(),
        }
    }
}

/// Symplectic form `ω(z, z′) = Jz·z′ = p·x′ − x·p′`.
pub fn omega(z: &[f64], w: &[f64]) -> f64 {
    let n = z.len() / 2;
    let jz = j_matrix(n) * DVector::from_column_slice(z);
    jz.dot(&DVector::from_column_slice(w))
}

/// Dual of a body in the Lagrangian plane `ℓ = S·ℓ_X` inside the transversal
/// plane `ℓ′ = S·ℓ_P`: `X^ħ_{ℓ′} = S·(S⁻¹ X)^ħ`.
pub fn lagrangian_polar_dual(body: &LagrangianBody, hbar: f64) -> Result<LagrangianBody> {
    let dual = ellipsoid_dual(&body.body, hbar)?;
    LagrangianBody::new(body.frame.clone(), dual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::rel_diff;
    use crate::symplectic::random_symplectic;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn ellipsoid(space: Space, a: &[f64], level: f64) -> EllipsoidBody {
        EllipsoidBody::new(space, SymMatrix::from_diagonal(a), level, &tol()).unwrap()
    }

    #[test]
    fn ball_dualizes_to_reciprocal_ball() {
        let hbar = 0.7;
        let r = 2.5;
        let x = EllipsoidBody::ball(Space::Position, 3, r).unwrap();
        let d = ellipsoid_dual(&x, hbar).unwrap();
        assert_eq!(d.space(), Space::Momentum);
        let radius = (d.level() / d.shape().get(0, 0)).sqrt();
        assert!((radius - hbar / r).abs() < 1e-14);
    }

    #[test]
    fn interval_dual() {
        let hbar = 1.0;
        let sxx = 0.8_f64;
        let half = (2.0 * sxx).sqrt();
        let b = ConvexBody::from(BoxBody::new(Space::Position, vec![half]).unwrap());
        let d = polar_dual(&b, hbar).unwrap();
        // The 1-D cross-polytope {a|p| ≤ ħ} is the interval [−ħ/a, ħ/a].
        let dd = support_function(&d, &[1.0]).unwrap();
        assert!((dd - hbar / half).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_shape_dual() {
        let x = ellipsoid(Space::Position, &[2.0, 0.5], 1.0);
        let d = ellipsoid_dual(&x, 1.0).unwrap();
        assert!(rel_diff(d.shape().as_mat(), SymMatrix::from_diagonal(&[0.5, 2.0]).as_mat()) < 1e-15);
        assert_eq!(d.level(), 1.0);
    }

    #[test]
    fn phase_space_bodies_have_no_polar_dual() {
        let z = ellipsoid(Space::Phase, &[1.0, 1.0], 1.0);
        assert_eq!(ellipsoid_dual(&z, 1.0), Err(Error::PhaseSpaceBody));
    }

    #[test]
    fn box_biduality() {
        let b = ConvexBody::from(BoxBody::new(Space::Momentum, vec![0.3, 2.0, 5.0]).unwrap());
        let dd = polar_dual(&polar_dual(&b, 1.3).unwrap(), 1.3).unwrap();
        match dd {
            ConvexBody::Box(bb) => {
                for (u, v) in bb.half_widths().iter().zip([0.3, 2.0, 5.0]) {
                    assert!((u - v).abs() < 1e-14);
                }
            }
            other => panic!("expected box, got {other:?}"),
        }
    }

    #[test]
    fn pair_examples() {
        let t = tol();
        let id = ellipsoid(Space::Position, &[1.0, 1.0], 1.0);
        let r = is_quantum_pair(&id, &ellipsoid(Space::Momentum, &[1.0, 1.0], 1.0), 1.0, &t).unwrap();
        assert!(r.is_pair && r.is_saturated);
        let r = is_quantum_pair(&id, &ellipsoid(Space::Momentum, &[0.5, 0.5], 1.0), 1.0, &t).unwrap();
        assert!(r.is_pair && !r.is_saturated);
        assert!((r.lambda[0] - 0.5).abs() < 1e-15);

        let x2 = ellipsoid(Space::Position, &[2.0, 2.0], 1.0);
        let p = ellipsoid(Space::Momentum, &[1.0, 1.0], 1.0);
        let r = is_quantum_pair(&x2, &p, 1.0, &t).unwrap();
        assert!(!r.is_pair);
        let w = r.witness.unwrap();
        // On the boundary of X^ħ, strictly outside P.
        let xd = ellipsoid_dual(&x2, 1.0).unwrap();
        assert!((xd.shape().quad_form(&w) - xd.level()).abs() < 1e-12);
        assert!(!p.contains(&w));
    }

    #[test]
    fn support_examples() {
        let unit = ConvexBody::from(EllipsoidBody::ball(Space::Position, 2, 1.0).unwrap());
        assert!((support_function(&unit, &[3.0, -4.0]).unwrap() - 1.0).abs() < 1e-15);
        let b = ConvexBody::from(BoxBody::new(Space::Position, vec![1.0, 3.0]).unwrap());
        assert_eq!(support_function(&b, &[1.0, 0.0]).unwrap(), 1.0);
        assert!(support_function(&b, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn lagrangian_identity_frame_is_plain_duality() {
        let x = ellipsoid(Space::Position, &[2.0, 3.0], 0.5);
        let lb = LagrangianBody::new(SymplecticMatrix::identity(2), x.clone()).unwrap();
        let d = lagrangian_polar_dual(&lb, 1.0).unwrap();
        assert_eq!(d.body, ellipsoid_dual(&x, 1.0).unwrap());
        assert_eq!(d.plane, Plane::P);
        let back = lagrangian_polar_dual(&d, 1.0).unwrap();
        assert_eq!(back.plane, Plane::X);
        assert!(rel_diff(back.body.shape().as_mat(), x.shape().as_mat()) < 1e-14);
        assert!((back.body.level() - x.level()).abs() < 1e-15);
    }

    #[test]
    fn lagrangian_duality_attains_hbar_on_boundary() {
        let hbar = 0.9;
        let s = random_symplectic(5, 2, 0.7);
        let a = SymMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.8]]).unwrap();
        let x = EllipsoidBody::new(Space::Position, a, hbar, &tol()).unwrap();
        let lb = LagrangianBody::new(s, x.clone()).unwrap();
        let dual = lagrangian_polar_dual(&lb, hbar).unwrap();
        let inv = x.shape().inverse(&tol()).unwrap();
        for dir in [[1.0, 0.0], [0.6, -0.8], [-0.2, 0.9]] {
            // Boundary point p of the model dual, and the maximizer x* in X.
            let q = dual.body.shape().quad_form(&dir);
            let p: Vec<f64> = dir.iter().map(|v| v * (dual.body.level() / q).sqrt()).collect();
            let ainv_p = inv.as_mat() * DVector::from_column_slice(&p);
            let scale = (x.level() / inv.quad_form(&p)).sqrt();
            let xs: Vec<f64> = ainv_p.iter().map(|v| v * scale).collect();
            let w = omega(&lb.embed(&xs), &dual.embed(&p)).abs();
            assert!((w - hbar).abs() < 1e-10, "{w}");
        }
    }
}
