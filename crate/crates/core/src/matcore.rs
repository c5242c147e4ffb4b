//! Dense real matrix kernel for the small dimensions used throughout the crate.
//!
//! Storage is [`nalgebra::DMatrix`]; the newtypes [`SymMatrix`] and
//! [`GenMatrix`] carry the shape/symmetry contracts the rest of the crate
//! relies on. All positive-(semi)definiteness checks are eigenvalue based so
//! that a failure can report the offending eigenvalue.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Numerical tolerances shared by every certificate in the crate.
///
/// `psd_slack` and `strict_pd_floor` are relative: they are multiplied by the
/// spectral norm of the matrix under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub rel_eq: f64,
    pub psd_slack: f64,
    pub strict_pd_floor: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rel_eq: 1e-9,
            psd_slack: 1e-12,
            strict_pd_floor: 1e-10,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rel_eq: f64, psd_slack: f64, strict_pd_floor: f64) -> Result<Self> {
        for (name, v) in [
            ("rel_eq", rel_eq),
            ("psd_slack", psd_slack),
            ("strict_pd_floor", strict_pd_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            rel_eq,
            psd_slack,
            strict_pd_floor,
        })
    }

    pub fn with_rel_eq(self, rel_eq: f64) -> Result<Self> {
        Self::new(rel_eq, self.psd_slack, self.strict_pd_floor)
    }

    /// Absolute eigenvalue slack for a matrix of spectral norm `scale`.
    pub fn slack_at(&self, scale: f64) -> f64 {
        self.psd_slack * scale
    }

    /// Absolute positive-definiteness floor for a matrix of spectral norm `scale`.
    pub fn floor_at(&self, scale: f64) -> f64 {
        self.strict_pd_floor * scale
    }
}

/// Relative Frobenius distance `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: &Mat, b: &Mat) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn check_finite(m: &Mat) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &Mat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    Ok(())
}

fn max_asymmetry(m: &Mat) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev
}

fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
///
/// Each eigenvector is sign-normalized so its first entry of magnitude above
/// `1e-12` is positive, which makes the output reproducible.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    pub fn reconstruct(&self) -> Mat {
        let d = Mat::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let d = Mat::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| f(v)),
        ));
        &self.vectors * d * self.vectors.transpose()
    }
}

fn sym_eigen(m: &Mat) -> SymEigen {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = Mat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (k, &idx) in order.iter().enumerate() {
        values.push(eig.eigenvalues[idx]);
        let mut col = eig.eigenvectors.column(idx).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(k, &col);
    }
    SymEigen { values, vectors }
}

/// Real symmetric matrix. Construction symmetrizes `(M + Mᵀ)/2`; inputs whose
/// asymmetry exceeds `rel_eq` (relative to the largest entry) are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        Self::with_tolerance(m, &TolerancePolicy::default())
    }

    pub fn with_tolerance(m: Mat, tol: &TolerancePolicy) -> Result<Self> {
        check_square(&m)?;
        check_finite(&m)?;
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let dev = max_asymmetry(&m);
        if dev > tol.rel_eq * scale {
            return Err(Error::Asymmetric { deviation: dev });
        }
        Ok(Self(symmetrize(&m)))
    }

    /// Symmetrizes without the asymmetry check; for matrices that are
    /// symmetric in exact arithmetic (congruences, inverses, products of
    /// commuting factors).
    pub fn from_mat_lossy(m: Mat) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(symmetrize(&m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(mat_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self(Mat::identity(n, n) * c)
    }

    pub fn zeros(n: usize) -> Self {
        Self(Mat::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(Mat::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// `[[a, 0], [0, b]]`.
    pub fn block_diag(a: &SymMatrix, b: &SymMatrix) -> Self {
        let (p, q) = (a.dim(), b.dim());
        let mut m = Mat::zeros(p + q, p + q);
        m.view_mut((0, 0), (p, p)).copy_from(&a.0);
        m.view_mut((p, p), (q, q)).copy_from(&b.0);
        Self(m)
    }

    /// Assembles `[[xx, xp], [xpᵀ, pp]]`.
    pub fn from_blocks(xx: &SymMatrix, xp: &Mat, pp: &SymMatrix) -> Self {
        let n = xx.dim();
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&xx.0);
        m.view_mut((0, n), (n, n)).copy_from(xp);
        m.view_mut((n, 0), (n, n)).copy_from(&xp.transpose());
        m.view_mut((n, n), (n, n)).copy_from(&pp.0);
        Self::from_mat_lossy(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn eigen(&self) -> SymEigen {
        sym_eigen(&self.0)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Ok iff the smallest eigenvalue clears `strict_pd_floor × ‖M‖`.
    pub fn check_pd(&self, tol: &TolerancePolicy) -> Result<()> {
        let vals = self.eigenvalues();
        let norm = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let floor = tol.floor_at(norm);
        let min = vals[0];
        if min > floor && min > 0.0 {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
                floor,
            })
        }
    }

    pub fn is_pd(&self, tol: &TolerancePolicy) -> bool {
        self.check_pd(tol).is_ok()
    }

    pub fn is_psd(&self, tol: &TolerancePolicy) -> bool {
        let vals = self.eigenvalues();
        let norm = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        vals[0] >= -tol.slack_at(norm)
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse(&self, tol: &TolerancePolicy) -> Result<SymMatrix> {
        self.check_pd(tol)?;
        Ok(Self::from_mat_lossy(self.eigen().map(|v| 1.0 / v)))
    }

    /// Principal square root of a positive semidefinite matrix.
    pub fn sqrt(&self, tol: &TolerancePolicy) -> Result<SymMatrix> {
        let eig = self.eigen();
        let norm = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if eig.values[0] < -tol.slack_at(norm) {
            return Err(Error::NegativeSpectrum {
                eigenvalue: eig.values[0],
            });
        }
        Ok(Self::from_mat_lossy(eig.map(|v| v.max(0.0).sqrt())))
    }

    /// `M^{-1/2}` for positive definite `M`.
    pub fn inv_sqrt(&self, tol: &TolerancePolicy) -> Result<SymMatrix> {
        self.check_pd(tol)?;
        Ok(Self::from_mat_lossy(self.eigen().map(|v| 1.0 / v.sqrt())))
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `Tᵀ M T`.
    pub fn congruence(&self, t: &Mat) -> SymMatrix {
        Self::from_mat_lossy(t.transpose() * &self.0 * t)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        Self(&self.0 * c)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self(&self.0 - &other.0)
    }

    /// `M u · u`.
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        let v = DVector::from_column_slice(u);
        v.dot(&(&self.0 * &v))
    }

    /// Splits an even-dimensional matrix into its four `n × n` blocks.
    pub fn blocks(&self) -> Result<Blocks> {
        Blocks::of(&self.0)
    }
}

/// The `n × n` blocks of a `2n × 2n` matrix, in position/momentum order.
#[derive(Debug, Clone)]
pub struct Blocks {
    pub xx: Mat,
    pub xp: Mat,
    pub px: Mat,
    pub pp: Mat,
}

impl Blocks {
    pub fn of(m: &Mat) -> Result<Self> {
        let d = m.nrows();
        if !d.is_multiple_of(2) || m.ncols() != d {
            return Err(Error::DimensionOdd { dim: d });
        }
        let n = d / 2;
        Ok(Self {
            xx: m.view((0, 0), (n, n)).into_owned(),
            xp: m.view((0, n), (n, n)).into_owned(),
            px: m.view((n, 0), (n, n)).into_owned(),
            pp: m.view((n, n), (n, n)).into_owned(),
        })
    }

    pub fn assemble(&self) -> Mat {
        let n = self.xx.nrows();
        let mut m = Mat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.xx);
        m.view_mut((0, n), (n, n)).copy_from(&self.xp);
        m.view_mut((n, 0), (n, n)).copy_from(&self.px);
        m.view_mut((n, n), (n, n)).copy_from(&self.pp);
        m
    }
}

pub(crate) fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let c = rows[0].len();
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::DimensionMismatch {
            expected: c,
            found: bad.len(),
        });
    }
    let m = Mat::from_fn(r, c, |i, j| rows[i][j]);
    check_finite(&m)?;
    Ok(m)
}

/// General real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GenMatrix(Mat);

impl GenMatrix {
    pub fn new(m: Mat) -> Result<Self> {
        check_finite(&m)?;
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self(mat_from_rows(rows)?))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn transpose(&self) -> GenMatrix {
        Self(self.0.transpose())
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn inverse(&self) -> Result<GenMatrix> {
        check_square(&self.0)?;
        self.0
            .clone()
            .try_inverse()
            .map(Self)
            .ok_or(Error::SingularL { det: self.det() })
    }

    pub fn mul(&self, other: &GenMatrix) -> GenMatrix {
        Self(&self.0 * &other.0)
    }
}

impl From<SymMatrix> for GenMatrix {
    fn from(s: SymMatrix) -> Self {
        GenMatrix(s.0)
    }
}

/// Which diagonal block of `M` is inverted in [`schur_complement`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivot {
    /// `M / M_XX = M_PP − M_PX M_XX⁻¹ M_XP`.
    Upper,
    /// `M / M_PP = M_XX − M_XP M_PP⁻¹ M_PX`.
    Lower,
}

pub fn schur_complement(m: &SymMatrix, pivot: Pivot, tol: &TolerancePolicy) -> Result<SymMatrix> {
    let b = m.blocks()?;
    let (keep, cross_l, pivot_block, cross_r) = match pivot {
        Pivot::Lower => (&b.xx, &b.xp, &b.pp, &b.px),
        Pivot::Upper => (&b.pp, &b.px, &b.xx, &b.xp),
    };
    let piv = SymMatrix::from_mat_lossy(pivot_block.clone());
    let inv = piv.inverse(tol)?;
    Ok(SymMatrix::from_mat_lossy(
        keep - cross_l * inv.as_mat() * cross_r,
    ))
}

/// Löwner order `A ⪯ B`: smallest eigenvalue of `B − A` is at least
/// `−psd_slack × max(‖A‖, ‖B‖)`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: &TolerancePolicy) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let scale = a.spectral_norm().max(b.spectral_norm());
    let diff = b.sub(a);
    Ok(diff.eigenvalues()[0] >= -tol.slack_at(scale))
}

/// Principal square root.
///
/// Symmetric inputs go through the eigendecomposition and must be PSD.
/// Non-symmetric inputs must have real non-negative spectrum and be
/// diagonalizable; they are handled by a real Schur recurrence and the result
/// is certified by `‖X² − M‖ ≤ rel_eq ‖M‖`.
pub fn principal_sqrt(m: &GenMatrix, tol: &TolerancePolicy) -> Result<GenMatrix> {
    let a = m.as_mat();
    check_square(a)?;
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if max_asymmetry(a) <= tol.rel_eq * scale {
        let s = SymMatrix::from_mat_lossy(a.clone());
        return Ok(s.sqrt(tol)?.into());
    }
    let x = schur_sqrt(a, tol)?;
    let residual = rel_diff(&(&x * &x), a);
    if residual > tol.rel_eq {
        return Err(Error::NotDiagonalizable { residual });
    }
    Ok(GenMatrix(x))
}

fn schur_sqrt(a: &Mat, tol: &TolerancePolicy) -> Result<Mat> {
    let n = a.nrows();
    let norm = a.norm();
    let (q, t) = Schur::new(a.clone()).unpack();

    // Diagonal block boundaries of the quasi-triangular factor.
    let mut starts = Vec::new();
    let mut i = 0;
    while i < n {
        starts.push(i);
        if i + 1 < n && t[(i + 1, i)].abs() > 1e-14 * norm {
            i += 2;
        } else {
            i += 1;
        }
    }
    let sizes: Vec<usize> = starts
        .iter()
        .enumerate()
        .map(|(k, &s)| starts.get(k + 1).copied().unwrap_or(n) - s)
        .collect();
    let nb = starts.len();

    let mut r = Mat::zeros(n, n);
    for k in 0..nb {
        let (s, z) = (starts[k], sizes[k]);
        let blk = t.view((s, s), (z, z)).into_owned();
        let root = if z == 1 {
            let v = blk[(0, 0)];
            if v < -tol.slack_at(norm) {
                return Err(Error::NegativeSpectrum { eigenvalue: v });
            }
            Mat::from_element(1, 1, v.max(0.0).sqrt())
        } else {
            sqrt_2x2(&blk, norm, tol)?
        };
        r.view_mut((s, s), (z, z)).copy_from(&root);
    }

    for gap in 1..nb {
        for bi in 0..(nb - gap) {
            let bj = bi + gap;
            let (si, zi) = (starts[bi], sizes[bi]);
            let (sj, zj) = (starts[bj], sizes[bj]);
            let mut c = t.view((si, sj), (zi, zj)).into_owned();
            for bk in (bi + 1)..bj {
                let (sk, zk) = (starts[bk], sizes[bk]);
                c -= r.view((si, sk), (zi, zk)) * r.view((sk, sj), (zk, zj));
            }
            let rii = r.view((si, si), (zi, zi)).into_owned();
            let rjj = r.view((sj, sj), (zj, zj)).into_owned();
            let x = solve_sylvester(&rii, &rjj, &c, norm)?;
            r.view_mut((si, sj), (zi, zj)).copy_from(&x);
        }
    }
    Ok(&q * r * q.transpose())
}

/// Square root of a 2×2 block whose eigenvalues have non-negative real part.
fn sqrt_2x2(b: &Mat, norm: f64, tol: &TolerancePolicy) -> Result<Mat> {
    let tr = b.trace();
    let det = b.determinant();
    let disc = tr * tr - 4.0 * det;
    // A complex pair with a non-negligible imaginary part means the spectrum
    // is not real.
    if disc < 0.0 && (-disc).sqrt() > tol.rel_eq.sqrt() * norm.max(1.0) {
        return Err(Error::NotDiagonalizable {
            residual: (-disc).sqrt() / 2.0,
        });
    }
    if disc >= 0.0 {
        let lo = (tr - disc.sqrt()) / 2.0;
        if lo < -tol.slack_at(norm) {
            return Err(Error::NegativeSpectrum { eigenvalue: lo });
        }
    }
    let s = det.max(0.0).sqrt();
    let t2 = tr + 2.0 * s;
    if t2 <= 0.0 {
        if b.amax() <= tol.slack_at(norm) {
            return Ok(Mat::zeros(2, 2));
        }
        return Err(Error::NotDiagonalizable { residual: b.amax() });
    }
    Ok((b + Mat::identity(2, 2) * s) / t2.sqrt())
}

/// Solves `R_ii X + X R_jj = C` for blocks of size 1 or 2.
fn solve_sylvester(rii: &Mat, rjj: &Mat, c: &Mat, norm: f64) -> Result<Mat> {
    let (p, q) = (rii.nrows(), rjj.nrows());
    let dim = p * q;
    // Column-major vec: (I_q ⊗ R_ii + R_jjᵀ ⊗ I_p) vec(X) = vec(C).
    let mut k = Mat::zeros(dim, dim);
    for col in 0..q {
        for row in 0..p {
            let eq = col * p + row;
            for r2 in 0..p {
                k[(eq, col * p + r2)] += rii[(row, r2)];
            }
            for c2 in 0..q {
                k[(eq, c2 * p + row)] += rjj[(c2, col)];
            }
        }
    }
    let rhs = DVector::from_column_slice(c.as_slice());
    if rhs.amax() <= 1e-14 * norm.max(1.0) {
        return Ok(Mat::zeros(p, q));
    }
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotDiagonalizable { residual: rhs.amax() })?;
    Ok(Mat::from_column_slice(p, q, sol.as_slice()))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(tM)` by scaling and squaring with a degree-13 Padé approximant.
pub fn mat_exp(m: &GenMatrix, t: f64) -> Result<GenMatrix> {
    let a0 = m.as_mat();
    check_square(a0)?;
    let n = a0.nrows();
    if t == 0.0 {
        return Ok(GenMatrix::identity(n));
    }
    if !t.is_finite() {
        return Err(Error::Infinite { norm: f64::INFINITY });
    }
    let a = a0 * t;
    let norm1 = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    if norm1.is_nan() || norm1 > 1e3 {
        return Err(Error::Infinite { norm: norm1 });
    }

    const THETA13: f64 = 5.371920351148152;
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = Mat::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or(Error::Infinite { norm: norm1 })?;
    for _ in 0..s {
        r = &r * &r;
    }
    check_finite(&r).map_err(|_| Error::Infinite { norm: norm1 })?;
    Ok(GenMatrix(r))
}
