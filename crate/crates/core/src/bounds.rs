//! Mahler volumes, the Hardy classifier and Donoho–Stark concentration
//! estimates, each with a sampling oracle.

use std::f64::consts::PI;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::capacity::capacity_of_level_set;
use crate::error::{Error, Result};
use crate::gaussian::{Axis, Covariance, GaussianPure};
use crate::matcore::{SymMatrix, TolerancePolicy};
use crate::polarity::{check_hbar, factorial, polar_dual, ConvexBody, Space};
use crate::reconstruct::pair_eigenvalues;
use crate::sampling::seeded;

type Membership = Box<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Membership predicate with a bounding box, for hit-or-miss volumes.
pub struct BodyOracle {
    dim: usize,
    contains: Membership,
    half_widths: Vec<f64>,
    exact_volume: Option<f64>,
}

impl std::fmt::Debug for BodyOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BodyOracle")
            .field("dim", &self.dim)
            .field("half_widths", &self.half_widths)
            .field("exact_volume", &self.exact_volume)
            .finish()
    }
}

impl BodyOracle {
    pub fn new(
        half_widths: Vec<f64>,
        contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        exact_volume: Option<f64>,
    ) -> Result<Self> {
        if let Some(&bad) = half_widths.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::DegenerateBox { half_width: bad });
        }
        if half_widths.is_empty() {
            return Err(Error::DegenerateBox { half_width: 0.0 });
        }
        Ok(Self {
            dim: half_widths.len(),
            contains: Box::new(contains),
            half_widths,
            exact_volume,
        })
    }

    /// Oracle for a supported convex body with its tight bounding box.
    pub fn from_body(body: &ConvexBody) -> Result<Self> {
        let half_widths = match body {
            ConvexBody::Ellipsoid(e) => {
                let inv = e.shape().inverse(&TolerancePolicy::default())?;
                (0..e.dim()).map(|i| (e.level() * inv.get(i, i)).sqrt()).collect()
            }
            ConvexBody::Box(b) => b.half_widths().to_vec(),
            ConvexBody::CrossPolytope(c) => c.weights().iter().map(|w| c.level() / w).collect(),
        };
        let exact = body.volume();
        let owned = body.clone();
        Self::new(half_widths, move |u| owned.contains(u), Some(exact))
    }

    /// `K × L` in the concatenated coordinates.
    pub fn product(k: BodyOracle, l: BodyOracle) -> Result<Self> {
        let dk = k.dim;
        let mut hw = k.half_widths.clone();
        hw.extend_from_slice(&l.half_widths);
        let exact = k.exact_volume.zip(l.exact_volume).map(|(a, b)| a * b);
        Self::new(hw, move |u| (k.contains)(&u[..dk]) && (l.contains)(&u[dk..]), exact)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn exact_volume(&self) -> Option<f64> {
        self.exact_volume
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        (self.contains)(u)
    }

    pub fn box_volume(&self) -> f64 {
        self.half_widths.iter().map(|a| 2.0 * a).product()
    }

    /// Spot check that no point just outside a face of the bounding box
    /// belongs to the body.
    pub fn check_bounding_box(&self, seed: u64, probes: usize) -> bool {
        let mut rng = seeded(seed);
        let mut u = vec![0.0; self.dim];
        (0..probes).all(|_| {
            for (x, a) in u.iter_mut().zip(&self.half_widths) {
                *x = rng.random_range(-1.0..1.0) * a;
            }
            let face = rng.random_range(0..self.dim);
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            u[face] = side * self.half_widths[face] * (1.0 + 1e-9);
            !self.contains(&u)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl VolumeEstimate {
    /// Whether `value` lies within `k` standard errors (exact hit when the
    /// error is zero).
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error + 1e-12 * value.abs()
    }
}

/// Hit-or-miss volume over the bounding box, deterministic per seed.
pub fn mc_volume(body: &BodyOracle, seed: u64, samples: usize) -> Result<VolumeEstimate> {
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!("mc_volume needs at least 10⁴ samples, got {samples}")));
    }
    let mut rng = seeded(seed);
    let mut u = vec![0.0; body.dim];
    let mut hits = 0usize;
    for _ in 0..samples {
        for (x, a) in u.iter_mut().zip(&body.half_widths) {
            *x = rng.random_range(-1.0..=1.0) * a;
        }
        if body.contains(&u) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    let vb = body.box_volume();
    Ok(VolumeEstimate {
        estimate: vb * p,
        std_error: vb * (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
    })
}

/// `(πħ)ⁿ/Γ(n/2+1)²`, the Mahler volume of any centered ellipsoid.
pub fn mahler_ellipsoid(n: usize, hbar: f64) -> f64 {
    (PI * hbar).powi(n as i32) / gamma(n as f64 / 2.0 + 1.0).powi(2)
}

/// `(4ħ)ⁿ/n!`, the Mahler volume of a box (and of a cross-polytope).
pub fn mahler_box(n: usize, hbar: f64) -> f64 {
    (4.0 * hbar).powi(n as i32) / factorial(n)
}

/// `(πħ)ⁿ/(4ⁿn!)`.
pub fn kuperberg_lower(n: usize, hbar: f64) -> f64 {
    (PI * hbar).powi(n as i32) / (4f64.powi(n as i32) * factorial(n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MahlerReport {
    pub upsilon: f64,
    pub volume: f64,
    pub dual_volume: f64,
    pub lower_kuperberg: f64,
    pub lower_conjecture: f64,
    pub upper_santalo: f64,
    pub within_bounds: bool,
}

/// `υ(X) = |X|·|X^ħ|` for an ellipsoid, box or cross-polytope.
///
/// The product of the two computed volumes is checked against the
/// shape-independent closed form of its class.
pub fn mahler_volume(body: &ConvexBody, hbar: f64, tol: &TolerancePolicy) -> Result<MahlerReport> {
    check_hbar(hbar)?;
    if body.space() == Space::Phase {
        return Err(Error::UnsupportedBody { op: "mahler_volume" });
    }
    let n = body.dim();
    let dual = polar_dual(body, hbar)?;
    let volume = body.volume();
    let dual_volume = dual.volume();
    let upsilon = volume * dual_volume;
    let closed = match body {
        ConvexBody::Ellipsoid(_) => mahler_ellipsoid(n, hbar),
        ConvexBody::Box(_) | ConvexBody::CrossPolytope(_) => mahler_box(n, hbar),
    };
    let gap = (upsilon - closed).abs() / closed;
    if gap > tol.rel_eq.max(1e-12) {
        return Err(Error::VerificationFailed {
            what: "Mahler volume closed form",
            residual: gap,
        });
    }
    let lower_kuperberg = kuperberg_lower(n, hbar);
    let upper_santalo = mahler_ellipsoid(n, hbar);
    let slack = tol.rel_eq * upper_santalo;
    Ok(MahlerReport {
        upsilon,
        volume,
        dual_volume,
        lower_kuperberg,
        lower_conjecture: mahler_box(n, hbar),
        upper_santalo,
        within_bounds: lower_kuperberg - slack <= upsilon && upsilon <= upper_santalo + slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyCase {
    NoFunction,
    UniqueGaussian,
    InfiniteFamily,
}

impl HardyCase {
    pub fn name(self) -> &'static str {
        match self {
            HardyCase::NoFunction => "NoFunction",
            HardyCase::UniqueGaussian => "UniqueGaussian",
            HardyCase::InfiniteFamily => "InfiniteFamily",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HardyVerdict {
    /// Eigenvalues of `AB`, descending.
    pub lambdas: Vec<f64>,
    pub case: HardyCase,
    /// Capacity of `{Ax·x + Bp·p ≤ ħ}`: `πħ/√λ_max`.
    pub hardy_capacity: f64,
    pub state: Option<GaussianPure>,
    pub note: Option<&'static str>,
}

/// Classifies the bounds `|ψ(x)| ≤ Ce^{−Ax·x/2ħ}`, `|ψ̂(p)| ≤ Ce^{−Bp·p/2ħ}`.
pub fn hardy_classify(a: &SymMatrix, b: &SymMatrix, hbar: f64, tol: &TolerancePolicy) -> Result<HardyVerdict> {
    check_hbar(hbar)?;
    let mut lambdas = pair_eigenvalues(a, b, tol)?;
    lambdas.reverse();
    let lmax = lambdas[0];
    let case = if lmax > 1.0 + tol.rel_eq {
        HardyCase::NoFunction
    } else if lambdas.iter().all(|l| (l - 1.0).abs() <= tol.rel_eq) {
        HardyCase::UniqueGaussian
    } else {
        HardyCase::InfiniteFamily
    };
    let hardy_capacity = PI * hbar / lmax.sqrt();
    // Symplectic eigenvalues of diag(A, B) are √λ_j.
    let via_nu = capacity_of_level_set(&SymMatrix::block_diag(a, b), hbar, tol)?.value;
    let gap = (via_nu - hardy_capacity).abs() / hardy_capacity;
    if gap > tol.rel_eq.max(1e-10) {
        return Err(Error::VerificationFailed {
            what: "Hardy capacity",
            residual: gap,
        });
    }
    let state = match case {
        HardyCase::UniqueGaussian => Some(GaussianPure::new(hbar, a.clone(), SymMatrix::zeros(a.dim()), tol)?),
        _ => None,
    };
    let note = match case {
        HardyCase::InfiniteFamily => Some("finite combinations of rescaled Hermite functions"),
        _ => None,
    };
    Ok(HardyVerdict {
        lambdas,
        case,
        hardy_capacity,
        state,
        note,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcentrationMethod {
    /// Product of one-dimensional tails over a box aligned with the
    /// covariance axes.
    ErfProduct,
    /// Chi-square tail for ellipsoids similar to the covariance ellipsoid.
    ChiSquare,
    /// Randomly shifted Halton points.
    QuasiMonteCarlo,
}

impl ConcentrationMethod {
    pub fn name(self) -> &'static str {
        match self {
            ConcentrationMethod::ErfProduct => "ErfProduct",
            ConcentrationMethod::ChiSquare => "ChiSquare",
            ConcentrationMethod::QuasiMonteCarlo => "QuasiMonteCarlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    /// `ε` with `ε² = ∫_{complement} density`.
    pub eps: f64,
    /// Standard error of `ε²` (zero for closed forms).
    pub std_error: f64,
    pub method: ConcentrationMethod,
}

const QMC_SHIFTS: usize = 16;
const PRIMES: [u8; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107,
    109, 113, 127, 131,
];

fn side_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Position => "position",
        Axis::Momentum => "momentum",
    }
}

/// Concentration of a centered Gaussian state's position or momentum
/// marginal on a body; `samples` is only used by the quasi-Monte Carlo path.
pub fn concentration<S: Covariance>(
    state: &S,
    body: &ConvexBody,
    side: Axis,
    seed: u64,
    samples: usize,
    tol: &TolerancePolicy,
) -> Result<Concentration> {
    let want = match side {
        Axis::Position => Space::Position,
        Axis::Momentum => Space::Momentum,
    };
    if body.space() != want {
        return Err(Error::SpaceMismatch {
            body: body.space().name(),
            side: side_name(side),
        });
    }
    let cov = state.covariance()?;
    if body.dim() != cov.n() {
        return Err(Error::DimensionMismatch {
            expected: cov.n(),
            found: body.dim(),
        });
    }
    let b = cov.blocks();
    let c = SymMatrix::from_mat_lossy(match side {
        Axis::Position => b.xx,
        Axis::Momentum => b.pp,
    });
    let n = c.dim();
    let scale = c.spectral_norm();
    let off_diag = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| c.get(i, j).abs())
        .fold(0.0, f64::max);

    if let ConvexBody::Box(bx) = body {
        if off_diag <= tol.rel_eq * scale {
            // P(outside) = 1 − Π(1 − erfc(a_i/√(2σ_i²))), summed in log form.
            let log_inside: f64 = bx
                .half_widths()
                .iter()
                .enumerate()
                .map(|(i, a)| (-erfc(a / (2.0 * c.get(i, i)).sqrt())).ln_1p())
                .sum();
            let tail = -log_inside.exp_m1();
            return Ok(Concentration {
                eps: tail.max(0.0).sqrt(),
                std_error: 0.0,
                method: ConcentrationMethod::ErfProduct,
            });
        }
    }
    if let ConvexBody::Ellipsoid(e) = body {
        // Au·u with u ~ N(0, C) is κ·χ²_n when C^{1/2}AC^{1/2} = κI.
        let c_half = c.sqrt(tol)?;
        let k = e.shape().congruence(c_half.as_mat());
        let ev = k.eigenvalues();
        let kappa = ev.iter().sum::<f64>() / n as f64;
        if ev.iter().all(|v| (v - kappa).abs() <= tol.rel_eq * kappa) {
            let tail = gamma_ur(n as f64 / 2.0, e.level() / (2.0 * kappa));
            return Ok(Concentration {
                eps: tail.max(0.0).sqrt(),
                std_error: 0.0,
                method: ConcentrationMethod::ChiSquare,
            });
        }
    }
    qmc_tail(&c, body, seed, samples, tol)
}

fn qmc_tail(c: &SymMatrix, body: &ConvexBody, seed: u64, samples: usize, tol: &TolerancePolicy) -> Result<Concentration> {
    let n = c.dim();
    if n > PRIMES.len() {
        return Err(Error::InvalidArgument(format!("quasi-Monte Carlo supports n ≤ {}", PRIMES.len())));
    }
    if samples < QMC_SHIFTS * 64 {
        return Err(Error::InvalidArgument(format!("need at least {} samples", QMC_SHIFTS * 64)));
    }
    c.check_pd(tol)?;
    let chol = c
        .as_mat()
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: c.eigenvalues()[0],
            floor: 0.0,
        })?
        .l();
    let normal = Normal::standard();
    let per = samples / QMC_SHIFTS;
    let mut rng = seeded(seed);
    let mut g = vec![0.0; n];
    let mut estimates = Vec::with_capacity(QMC_SHIFTS);
    for _ in 0..QMC_SHIFTS {
        let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut outside = 0usize;
        for i in 1..=per {
            for (d, gd) in g.iter_mut().enumerate() {
                let u = (halton::number(PRIMES[d], i) + shift[d]).fract();
                *gd = normal.inverse_cdf(u.clamp(1e-300, 1.0 - 1e-16));
            }
            let z: Vec<f64> = (0..n).map(|r| (0..=r).map(|k| chol[(r, k)] * g[k]).sum()).collect();
            if !body.contains(&z) {
                outside += 1;
            }
        }
        estimates.push(outside as f64 / per as f64);
    }
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(Concentration {
        eps: mean.sqrt(),
        std_error: (var / m).sqrt(),
        method: ConcentrationMethod::QuasiMonteCarlo,
    })
}

/// Endpoints of the admissible range of `ε_X + ε_{X^ħ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DonohoStarkBand {
    /// `1 − 1/(2^{n/2}Γ(n/2+1))`.
    pub lower: f64,
    /// `1 − 1/(8^{n/2}√(n!))`, from the Kuperberg bound.
    pub upper_kuperberg: f64,
    /// `1 − 2/((2π)^{n/2}√(n!))`, the form quoted for the Mahler bound.
    pub upper_mahler: f64,
    /// `1 − (2/π)^{n/2}/√(n!)`, obtained by solving
    /// `(4ħ)ⁿ/n! = (2πħ)ⁿ(1 − s)²` for `s`.
    pub upper_mahler_solved: f64,
}

pub fn donoho_stark_band(n: usize) -> DonohoStarkBand {
    let nf = n as f64;
    let root_fact = factorial(n).sqrt();
    DonohoStarkBand {
        lower: 1.0 - 1.0 / (2f64.powf(nf / 2.0) * gamma(nf / 2.0 + 1.0)),
        upper_kuperberg: 1.0 - 1.0 / (8f64.powf(nf / 2.0) * root_fact),
        upper_mahler: 1.0 - 2.0 / ((2.0 * PI).powf(nf / 2.0) * root_fact),
        upper_mahler_solved: 1.0 - (2.0 / PI).powf(nf / 2.0) / root_fact,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub eps_x: f64,
    pub eps_p: f64,
    /// `|X|·|P|`.
    pub ds_lhs: f64,
    /// `(2πħ)ⁿ(1 − ε_X − ε_P)²`.
    pub ds_rhs: f64,
    /// `None` when `ε_X + ε_P ≥ 1` and the inequality says nothing.
    pub holds: Option<bool>,
    /// Present when `P = X^ħ`.
    pub band: Option<DonohoStarkBand>,
}

impl ConcentrationReport {
    pub fn vacuous(&self) -> bool {
        self.holds.is_none()
    }
}

/// `|X||P| ≥ (2πħ)ⁿ(1 − ε_X − ε_P)²`.
pub fn donoho_stark_check(
    eps_x: f64,
    eps_p: f64,
    x: &ConvexBody,
    p: &ConvexBody,
    hbar: f64,
    tol: &TolerancePolicy,
) -> Result<ConcentrationReport> {
    check_hbar(hbar)?;
    for e in [eps_x, eps_p] {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidArgument(format!("concentration {e} outside [0, 1]")));
        }
    }
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: p.dim(),
        });
    }
    let n = x.dim();
    let ds_lhs = x.volume() * p.volume();
    let gap = 1.0 - eps_x - eps_p;
    let ds_rhs = (2.0 * PI * hbar).powi(n as i32) * gap.max(0.0).powi(2);
    let holds = (gap > 0.0).then_some(ds_lhs >= ds_rhs * (1.0 - tol.rel_eq));
    let band = match polar_dual(x, hbar) {
        Ok(d) if same_body(&d, p, tol) => Some(donoho_stark_band(n)),
        _ => None,
    };
    Ok(ConcentrationReport {
        eps_x,
        eps_p,
        ds_lhs,
        ds_rhs,
        holds,
        band,
    })
}

fn close(a: f64, b: f64, tol: &TolerancePolicy) -> bool {
    (a - b).abs() <= tol.rel_eq * a.abs().max(b.abs())
}

fn same_body(a: &ConvexBody, b: &ConvexBody, tol: &TolerancePolicy) -> bool {
    if a.space() != b.space() || a.dim() != b.dim() {
        return false;
    }
    match (a, b) {
        (ConvexBody::Ellipsoid(e), ConvexBody::Ellipsoid(f)) => {
            let h = e.level();
            crate::matcore::rel_diff(e.shape().as_mat(), f.normalized(h).shape().as_mat()) <= tol.rel_eq
        }
        (ConvexBody::Box(e), ConvexBody::Box(f)) => {
            e.half_widths().iter().zip(f.half_widths()).all(|(u, v)| close(*u, *v, tol))
        }
        (ConvexBody::CrossPolytope(e), ConvexBody::CrossPolytope(f)) => e
            .weights()
            .iter()
            .zip(f.weights())
            .all(|(u, v)| close(u / e.level(), v / f.level(), tol)),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::CovState;
    use crate::polarity::{BoxBody, CrossPolytopeBody, EllipsoidBody};

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn ell(space: Space, d: &[f64]) -> ConvexBody {
        EllipsoidBody::new(space, SymMatrix::from_diagonal(d), 1.0, &tol()).unwrap().into()
    }

    #[test]
    fn mahler_examples() {
        let iv: ConvexBody = BoxBody::new(Space::Position, vec![0.37]).unwrap().into();
        assert!((mahler_volume(&iv, 1.0, &tol()).unwrap().upsilon - 4.0).abs() < 1e-14);
        let r = mahler_volume(&ell(Space::Position, &[2.0, 0.5]), 1.0, &tol()).unwrap();
        assert!((r.upsilon - PI * PI).abs() < 1e-12 && r.within_bounds);
        let bx: ConvexBody = BoxBody::new(Space::Momentum, vec![0.3, 2.0]).unwrap().into();
        let r = mahler_volume(&bx, 1.0, &tol()).unwrap();
        assert!((r.upsilon - 8.0).abs() < 1e-12 && r.within_bounds);
        let cp: ConvexBody = CrossPolytopeBody::new(Space::Position, vec![1.0, 3.0, 0.5], 2.0).unwrap().into();
        assert!((mahler_volume(&cp, 1.0, &tol()).unwrap().upsilon - 64.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn mc_examples() {
        let sq = BodyOracle::new(vec![1.0, 1.0], |_| true, Some(4.0)).unwrap();
        let v = mc_volume(&sq, 1, 10_000).unwrap();
        assert_eq!((v.estimate, v.std_error), (4.0, 0.0));
        let disk = BodyOracle::new(vec![1.0, 1.0], |u| u[0] * u[0] + u[1] * u[1] <= 1.0, None).unwrap();
        assert!(mc_volume(&disk, 2, 1_000_000).unwrap().agrees_with(PI, 3.0));
        let e = BodyOracle::from_body(&ell(Space::Position, &[2.0, 0.5])).unwrap();
        assert!(e.check_bounding_box(3, 1000));
        let v = mc_volume(&e, 4, 1_000_000).unwrap();
        assert!(v.agrees_with(e.exact_volume().unwrap(), 3.0));
        assert!(matches!(
            BodyOracle::new(vec![1.0, 0.0], |_| true, None),
            Err(Error::DegenerateBox { .. })
        ));
        assert!(mc_volume(&sq, 1, 100).is_err());
    }

    #[test]
    fn hardy_examples() {
        let one = SymMatrix::identity(1);
        let v = hardy_classify(&one, &one, 1.0, &tol()).unwrap();
        assert_eq!(v.case, HardyCase::UniqueGaussian);
        assert_eq!(v.state.unwrap().w().get(0, 0), 1.0);
        let v = hardy_classify(&SymMatrix::identity(2), &SymMatrix::scaled_identity(2, 0.5), 1.0, &tol()).unwrap();
        assert_eq!(v.case, HardyCase::InfiniteFamily);
        assert!((v.hardy_capacity - PI / 0.5f64.sqrt()).abs() < 1e-12);
        let v = hardy_classify(&SymMatrix::scaled_identity(2, 2.0), &SymMatrix::identity(2), 1.0, &tol()).unwrap();
        assert_eq!(v.case, HardyCase::NoFunction);
    }

    #[test]
    fn concentration_examples() {
        let phi = GaussianPure::standard(1.0, 1);
        let x: ConvexBody = BoxBody::new(Space::Position, vec![1.0]).unwrap().into();
        let c = concentration(&phi, &x, Axis::Position, 0, 0, &tol()).unwrap();
        assert!((c.eps * c.eps - erfc(1.0)).abs() < 1e-14);
        assert!((c.eps * c.eps - 0.157299).abs() < 1e-6);

        let huge: ConvexBody = BoxBody::new(Space::Position, vec![1e9, 1e9]).unwrap().into();
        let phi2 = GaussianPure::standard(1.0, 2);
        assert_eq!(concentration(&phi2, &huge, Axis::Position, 0, 0, &tol()).unwrap().eps, 0.0);

        let ball = ell(Space::Position, &[1.0, 1.0]);
        let dual = polar_dual(&ball, 1.0).unwrap();
        let ex = concentration(&phi2, &ball, Axis::Position, 0, 0, &tol()).unwrap();
        let ep = concentration(&phi2, &dual, Axis::Momentum, 0, 0, &tol()).unwrap();
        assert!((ex.eps - ep.eps).abs() < 1e-15);
        assert!(matches!(
            concentration(&phi2, &dual, Axis::Position, 0, 0, &tol()),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn qmc_matches_closed_form() {
        // A tilted state on a box forces the quasi-Monte Carlo path; compare
        // with the chi-square route on a matching ellipsoid instead.
        let st = CovState::new(
            1.0,
            SymMatrix::from_rows(&[
                vec![0.7, 0.2, 0.0, 0.0],
                vec![0.2, 0.6, 0.0, 0.0],
                vec![0.0, 0.0, 0.8, 0.0],
                vec![0.0, 0.0, 0.0, 0.9],
            ])
            .unwrap(),
            &tol(),
        )
        .unwrap();
        let c = SymMatrix::from_rows(&[vec![0.7, 0.2], vec![0.2, 0.6]]).unwrap();
        let shape = c.inverse(&tol()).unwrap();
        let e: ConvexBody = EllipsoidBody::new(Space::Position, shape, 2.0, &tol()).unwrap().into();
        let exact = concentration(&st, &e, Axis::Position, 0, 0, &tol()).unwrap();
        assert_eq!(exact.method, ConcentrationMethod::ChiSquare);
        assert!((exact.eps.powi(2) - (-1.0f64).exp()).abs() < 1e-14);
        let q = qmc_tail(&c, &e, 9, 200_000, &tol()).unwrap();
        assert!((q.eps.powi(2) - exact.eps.powi(2)).abs() <= 4.0 * q.std_error + 1e-4);
    }

    #[test]
    fn band_values() {
        let b = donoho_stark_band(6);
        assert!((b.lower - (1.0 - 1.0 / 48.0)).abs() < 1e-14);
        assert!((b.upper_mahler - 0.99970).abs() < 5e-6);
        let b1 = donoho_stark_band(1);
        assert!((b1.lower - (1.0 - (2.0 / PI).sqrt())).abs() < 1e-14);
    }

    #[test]
    fn ds_vacuous() {
        let x = ell(Space::Position, &[1.0]);
        let p = polar_dual(&x, 1.0).unwrap();
        let r = donoho_stark_check(0.6, 0.6, &x, &p, 1.0, &tol()).unwrap();
        assert!(r.vacuous());
        assert!(r.band.is_some());
    }
}
