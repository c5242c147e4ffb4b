//! The real symplectic group `Sp(n)` acting on phase space `(x, p) ∈ ℝ²ⁿ`.
//!
//! Coordinates are ordered `(x₁..xₙ, p₁..pₙ)` and the standard form is
//! `J = [[0, I], [−I, 0]]`. Williamson output follows the convention
//! `Σ = Sᵀ·diag(ν, ν)·S`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matcore::{rel_diff, Blocks, GenMatrix, Mat, SymMatrix, TolerancePolicy};

/// `[[0, I], [−I, 0]]` as a raw matrix.
pub fn j_matrix(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `‖SᵀJS − J‖_F / ‖S‖_F²`.
pub fn symplectic_residual(s: &Mat) -> f64 {
    let d = s.nrows();
    if !d.is_multiple_of(2) || s.ncols() != d {
        return f64::INFINITY;
    }
    let j = j_matrix(d / 2);
    let r = (s.transpose() * &j * s - &j).norm();
    r / s.norm_squared().max(f64::MIN_POSITIVE)
}

/// A certified element of `Sp(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    n: usize,
    mat: Mat,
}

impl SymplecticMatrix {
    /// Certifies `‖SᵀJS − J‖ ≤ rel_eq·‖S‖²`.
    pub fn certify(m: Mat, tol: &TolerancePolicy) -> Result<Self> {
        let d = m.nrows();
        if !d.is_multiple_of(2) || d == 0 {
            return Err(Error::DimensionOdd { dim: d });
        }
        if m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.ncols(),
            });
        }
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let residual = symplectic_residual(&m);
        if residual > tol.rel_eq {
            return Err(Error::NotSymplectic { residual });
        }
        Ok(Self { n: d / 2, mat: m })
    }

    /// Wraps a matrix that is symplectic by construction.
    pub(crate) fn trusted(m: Mat) -> Self {
        debug_assert!(symplectic_residual(&m) < 1e-6, "{}", symplectic_residual(&m));
        Self {
            n: m.nrows() / 2,
            mat: m,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::trusted(Mat::identity(2 * n, 2 * n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.mat)
    }

    /// `S⁻¹ = −J Sᵀ J`.
    pub fn inverse(&self) -> Self {
        let j = j_matrix(self.n);
        Self::trusted(-(&j * self.mat.transpose() * &j))
    }

    pub fn transpose(&self) -> Self {
        Self::trusted(self.mat.transpose())
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> Self {
        Self::trusted(&self.mat * &other.mat)
    }

    pub fn det(&self) -> f64 {
        self.mat.determinant()
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (&self.mat * DVector::from_column_slice(z)).as_slice().to_vec()
    }
}

pub fn standard_j(n: usize) -> SymplecticMatrix {
    SymplecticMatrix::trusted(j_matrix(n))
}

/// Generators of `Sp(n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// Shear `V_{−P} = [[I, 0], [P, I]]`, `P` symmetric.
    Vp(SymMatrix),
    /// Dilation `M_L = [[L⁻¹, 0], [0, Lᵀ]]`, `L` invertible.
    Ml(GenMatrix),
    /// The standard form `J` in `n` degrees of freedom.
    J(usize),
}

impl Generator {
    pub fn n(&self) -> usize {
        match self {
            Generator::Vp(p) => p.dim(),
            Generator::Ml(l) => l.rows(),
            Generator::J(n) => *n,
        }
    }
}

pub fn generator(kind: &Generator, tol: &TolerancePolicy) -> Result<SymplecticMatrix> {
    let m = match kind {
        Generator::Vp(p) => {
            let n = p.dim();
            let mut m = Mat::identity(2 * n, 2 * n);
            m.view_mut((n, 0), (n, n)).copy_from(p.as_mat());
            m
        }
        Generator::Ml(l) => {
            let n = l.rows();
            if l.cols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.cols(),
                });
            }
            let det = l.det();
            let scale = l.as_mat().amax().max(f64::MIN_POSITIVE).powi(n as i32);
            if det.abs() <= tol.strict_pd_floor * scale {
                return Err(Error::SingularL { det });
            }
            let inv = l.inverse()?;
            let mut m = Mat::zeros(2 * n, 2 * n);
            m.view_mut((0, 0), (n, n)).copy_from(inv.as_mat());
            m.view_mut((n, n), (n, n)).copy_from(&l.as_mat().transpose());
            m
        }
        Generator::J(n) => j_matrix(*n),
    };
    SymplecticMatrix::certify(m, tol)
}

fn check_even_pd(m: &SymMatrix, tol: &TolerancePolicy) -> Result<usize> {
    let d = m.dim();
    if !d.is_multiple_of(2) {
        return Err(Error::DimensionOdd { dim: d });
    }
    m.check_pd(tol)?;
    Ok(d / 2)
}

/// `K = M^{1/2} J M^{1/2}`: skew-symmetric with eigenvalues `±iν_j`.
fn skew_form(m: &SymMatrix, n: usize, tol: &TolerancePolicy) -> Result<(Mat, SymMatrix)> {
    let root = m.sqrt(tol)?;
    let k = root.as_mat() * j_matrix(n) * root.as_mat();
    Ok((k, root))
}

/// Symplectic eigenvalues of an SPD matrix, ascending.
pub fn symplectic_eigenvalues(m: &SymMatrix, tol: &TolerancePolicy) -> Result<Vec<f64>> {
    let n = check_even_pd(m, tol)?;
    let (k, _) = skew_form(m, n, tol)?;
    let ktk = SymMatrix::from_mat_lossy(k.transpose() * &k);
    let mu = ktk.eigenvalues();
    Ok((0..n)
        .map(|j| (0.5 * (mu[2 * j] + mu[2 * j + 1])).max(0.0).sqrt())
        .collect())
}

/// `Σ = Sᵀ·diag(ν, ν)·S` with `ν` ascending.
#[derive(Debug, Clone)]
pub struct WilliamsonDecomposition {
    pub s: SymplecticMatrix,
    pub nu: Vec<f64>,
}

impl WilliamsonDecomposition {
    pub fn diag(&self) -> SymMatrix {
        let mut d = self.nu.clone();
        d.extend_from_slice(&self.nu);
        SymMatrix::from_diagonal(&d)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.diag().congruence(self.s.as_mat())
    }
}

fn normalize_sign(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

pub fn williamson(sigma: &SymMatrix, tol: &TolerancePolicy) -> Result<WilliamsonDecomposition> {
    let n = check_even_pd(sigma, tol)?;
    let d = 2 * n;
    let (k, root) = skew_form(sigma, n, tol)?;
    let ktk = SymMatrix::from_mat_lossy(k.transpose() * &k);
    let eig = ktk.eigen();

    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut pairs: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(n);
    for _ in 0..n {
        // Residuals of the eigenvectors of KᵀK against the pairs already
        // extracted. Each residual stays inside its K-invariant eigenspace.
        let residuals: Vec<DVector<f64>> = (0..d)
            .map(|c| {
                let mut r = eig.vectors.column(c).into_owned();
                for q in &chosen {
                    let proj = q.dot(&r);
                    r.axpy(-proj, q, 1.0);
                }
                r
            })
            .collect();
        let norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        let best_norm = norms.iter().cloned().fold(0.0, f64::max);
        // Prefer the most position-like candidate so that block-diagonal
        // inputs give block-diagonal S.
        let pick = (0..d)
            .filter(|&c| norms[c] >= 0.5 * best_norm)
            .max_by(|&a, &b| {
                let score = |c: usize| residuals[c].rows(0, n).norm() / norms[c];
                score(a)
                    .partial_cmp(&score(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(b.cmp(&a))
            })
            .expect("non-empty candidate set");
        let mut e = &residuals[pick] / norms[pick];
        normalize_sign(&mut e);
        let mut f = -(&k * &e);
        for q in chosen.iter().chain(std::iter::once(&e)) {
            let proj = q.dot(&f);
            f.axpy(-proj, q, 1.0);
        }
        let fnorm = f.norm();
        if fnorm <= tol.floor_at(1.0) {
            return Err(Error::VerificationFailed {
                what: "williamson pairing",
                residual: fnorm,
            });
        }
        f /= fnorm;
        let nu = e.dot(&(&k * &f));
        chosen.push(e.clone());
        chosen.push(f.clone());
        pairs.push((nu, e, f));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut q = Mat::zeros(d, d);
    let mut nu = Vec::with_capacity(n);
    for (j, (v, e, f)) in pairs.iter().enumerate() {
        q.set_column(j, e);
        q.set_column(n + j, f);
        nu.push(*v);
    }
    let inv_sqrt_d: Vec<f64> = nu.iter().chain(nu.iter()).map(|v| 1.0 / v.sqrt()).collect();
    let dm = Mat::from_diagonal(&DVector::from_vec(inv_sqrt_d));
    let s = dm * q.transpose() * root.as_mat();

    let out = WilliamsonDecomposition {
        s: SymplecticMatrix { n, mat: s },
        nu,
    };
    let recon = rel_diff(out.reconstruct().as_mat(), sigma.as_mat());
    let verify_tol = (tol.rel_eq * 1e3).max(1e-8);
    if recon > verify_tol {
        return Err(Error::VerificationFailed {
            what: "williamson reconstruction",
            residual: recon,
        });
    }
    let sres = out.s.residual();
    if sres > verify_tol {
        return Err(Error::NotSymplectic { residual: sres });
    }
    Ok(out)
}

/// `Lᵀ A L = L⁻¹ B L⁻ᵀ = diag(√λ)` with `λ` the (ascending) eigenvalues of `AB`.
#[derive(Debug, Clone)]
pub struct BalancedDiag {
    pub l: GenMatrix,
    pub lambda: Vec<f64>,
}

impl BalancedDiag {
    pub fn sqrt_lambda(&self) -> Vec<f64> {
        self.lambda.iter().map(|v| v.sqrt()).collect()
    }

    /// Largest relative residual of the two defining identities.
    pub fn residual(&self, a: &SymMatrix, b: &SymMatrix) -> f64 {
        let l = self.l.as_mat();
        let target = Mat::from_diagonal(&DVector::from_vec(self.sqrt_lambda()));
        let lhs = l.transpose() * a.as_mat() * l;
        let linv = l.clone().try_inverse().unwrap_or_else(|| Mat::zeros(l.nrows(), l.ncols()));
        let rhs = &linv * b.as_mat() * linv.transpose();
        rel_diff(&lhs, &target).max(rel_diff(&rhs, &target))
    }
}

pub fn balanced_diagonalize(a: &SymMatrix, b: &SymMatrix, tol: &TolerancePolicy) -> Result<BalancedDiag> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    a.check_pd(tol)?;
    b.check_pd(tol)?;
    let a_half = a.sqrt(tol)?;
    let a_inv_half = a.inv_sqrt(tol)?;
    let c = b.congruence(a_half.as_mat());
    let eig = c.eigen();
    let root_lambda: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).powf(0.25)).collect();
    let l = a_inv_half.as_mat() * &eig.vectors * Mat::from_diagonal(&DVector::from_vec(root_lambda));
    Ok(BalancedDiag {
        l: GenMatrix::new(l)?,
        lambda: eig.values,
    })
}

/// Residuals of the block form of `SᵀJS = J`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSymplecticReport {
    pub holds: bool,
    /// `‖M_XXᵀM_PP − M_PXᵀM_XP − I‖`.
    pub identity_residual: f64,
    /// Asymmetry of `M_XXᵀM_PX`.
    pub xx_px_asymmetry: f64,
    /// Asymmetry of `M_XPᵀM_PP`.
    pub xp_pp_asymmetry: f64,
}

pub fn block_symplectic_check(m: &GenMatrix, tol: &TolerancePolicy) -> Result<BlockSymplecticReport> {
    let b = Blocks::of(m.as_mat())?;
    let n = b.xx.nrows();
    let scale = m.as_mat().norm_squared().max(f64::MIN_POSITIVE);
    let ident = (b.xx.transpose() * &b.pp - b.px.transpose() * &b.xp - Mat::identity(n, n)).norm() / scale;
    let asym = |x: Mat| (&x - x.transpose()).norm() / scale;
    let r1 = asym(b.xx.transpose() * &b.px);
    let r2 = asym(b.xp.transpose() * &b.pp);
    Ok(BlockSymplecticReport {
        holds: ident <= tol.rel_eq && r1 <= tol.rel_eq && r2 <= tol.rel_eq,
        identity_residual: ident,
        xx_px_asymmetry: r1,
        xp_pp_asymmetry: r2,
    })
}

/// Seeded sampler: a product of 3–8 random generators with entries scaled by
/// `spread`. `J` enters as conjugation `Jᵀ V J` so that `spread = 0` yields the
/// identity.
pub fn random_symplectic(seed: u64, n: usize, spread: f64) -> SymplecticMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_symplectic_with(&mut rng, n, spread)
}

pub fn random_symplectic_with<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> SymplecticMatrix {
    let factors = rng.random_range(3..=8);
    let j = j_matrix(n);
    let mut acc = Mat::identity(2 * n, 2 * n);
    for _ in 0..factors {
        let f = match rng.random_range(0..3) {
            0 => shear(rng, n, spread),
            1 => dilation(rng, n, spread),
            _ => j.transpose() * shear(rng, n, spread) * &j,
        };
        acc *= f;
    }
    SymplecticMatrix::trusted(acc)
}

fn gaussian_mat<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn shear<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> Mat {
    let g = gaussian_mat(rng, n);
    let p = (&g + g.transpose()) * (0.5 * spread);
    let mut m = Mat::identity(2 * n, 2 * n);
    m.view_mut((n, 0), (n, n)).copy_from(&p);
    m
}

fn dilation<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> Mat {
    let scale = spread / (n as f64).sqrt();
    let l = loop {
        let l = Mat::identity(n, n) + gaussian_mat(rng, n) * scale;
        if l.determinant().abs() > 0.1 {
            break l;
        }
    };
    let inv = l.clone().try_inverse().expect("det bounded away from zero");
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&inv);
    m.view_mut((n, n), (n, n)).copy_from(&l.transpose());
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn j_properties() {
        let j1 = standard_j(1);
        assert_eq!(j1.as_mat(), &Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        for n in 1..4 {
            let j = j_matrix(n);
            assert_eq!(&j * &j, -Mat::identity(2 * n, 2 * n));
            assert_eq!(j.transpose(), -&j);
            assert_eq!(standard_j(n).inverse().as_mat(), &j.transpose());
        }
    }

    #[test]
    fn generator_examples() {
        let t = tol();
        let id = generator(&Generator::Vp(SymMatrix::zeros(2)), &t).unwrap();
        assert_eq!(id.as_mat(), &Mat::identity(4, 4));
        let ml = generator(&Generator::Ml(GenMatrix::from_rows(&[vec![2.0]]).unwrap()), &t).unwrap();
        assert_eq!(ml.as_mat(), &Mat::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 2.0]));
        let singular = GenMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(generator(&Generator::Ml(singular), &t), Err(Error::SingularL { .. })));
    }

    #[test]
    fn ml_composition_law() {
        let t = tol();
        let l1 = GenMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 3.0]]).unwrap();
        let l2 = GenMatrix::from_rows(&[vec![-1.0, 0.3], vec![0.7, 1.1]]).unwrap();
        let lhs = generator(&Generator::Ml(l1.clone()), &t)
            .unwrap()
            .compose(&generator(&Generator::Ml(l2.clone()), &t).unwrap());
        let rhs = generator(&Generator::Ml(l2.mul(&l1)), &t).unwrap();
        assert!(rel_diff(lhs.as_mat(), rhs.as_mat()) < 1e-14);
    }

    #[test]
    fn symplectic_eigenvalue_examples() {
        let t = tol();
        for n in 1..4 {
            let nu = symplectic_eigenvalues(&SymMatrix::identity(2 * n), &t).unwrap();
            assert!(nu.iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
        let nu = symplectic_eigenvalues(&SymMatrix::from_diagonal(&[2.0, 8.0]), &t).unwrap();
        assert!((nu[0] - 4.0).abs() < 1e-13);
        assert!(matches!(
            symplectic_eigenvalues(&SymMatrix::from_diagonal(&[1.0, 0.0]), &t),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn williamson_diagonal_example() {
        let (a, b) = (3.0_f64, 0.5_f64);
        let w = williamson(&SymMatrix::from_diagonal(&[a, b]), &tol()).unwrap();
        assert!((w.nu[0] - (a * b).sqrt()).abs() < 1e-13);
        let s = w.s.as_mat();
        assert!((s[(0, 0)].abs() - (a / b).powf(0.25)).abs() < 1e-12);
        assert!((s[(1, 1)].abs() - (b / a).powf(0.25)).abs() < 1e-12);
        assert!(s[(0, 1)].abs() < 1e-12 && s[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn williamson_scalar_is_orthosymplectic() {
        let c = 2.5;
        let w = williamson(&SymMatrix::scaled_identity(6, c), &tol()).unwrap();
        assert!(w.nu.iter().all(|v| (v - c).abs() < 1e-12));
        let s = w.s.as_mat();
        assert!(rel_diff(&(s.transpose() * s), &Mat::identity(6, 6)) < 1e-12);
        assert!(w.s.residual() < 1e-12);
    }

    #[test]
    fn balanced_examples() {
        let t = tol();
        let id = SymMatrix::identity(3);
        let bd = balanced_diagonalize(&id, &id, &t).unwrap();
        assert!(rel_diff(bd.l.as_mat(), &Mat::identity(3, 3)) < 1e-14);
        let a = SymMatrix::from_diagonal(&[4.0, 1.0]);
        let b = SymMatrix::from_diagonal(&[1.0, 4.0]);
        let bd = balanced_diagonalize(&a, &b, &t).unwrap();
        assert!(bd.lambda.iter().all(|v| (v - 4.0).abs() < 1e-13));
        assert!(bd.residual(&a, &b) < 1e-13);
    }

    #[test]
    fn block_check_examples() {
        let t = tol();
        assert!(block_symplectic_check(&GenMatrix::identity(4), &t).unwrap().holds);
        let p = SymMatrix::from_rows(&[vec![1.0, -2.0], vec![-2.0, 0.5]]).unwrap();
        let v = generator(&Generator::Vp(p), &t).unwrap();
        assert!(block_symplectic_check(&GenMatrix::new(v.into_mat()).unwrap(), &t).unwrap().holds);
        let bad = GenMatrix::new(Mat::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 2.0, 2.0]))).unwrap();
        let r = block_symplectic_check(&bad, &t).unwrap();
        assert!(!r.holds);
        assert!(r.identity_residual > 0.0);
        assert_eq!(r.xx_px_asymmetry, 0.0);
    }

    #[test]
    fn sampler_determinism_and_identity() {
        assert_eq!(random_symplectic(7, 3, 0.0).as_mat(), &Mat::identity(6, 6));
        assert_eq!(random_symplectic(11, 2, 0.8), random_symplectic(11, 2, 0.8));
        assert_ne!(random_symplectic(11, 2, 0.8), random_symplectic(12, 2, 0.8));
    }
}
