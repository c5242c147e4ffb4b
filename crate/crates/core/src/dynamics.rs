//! Linear Hamiltonian flows `ż = J·H″·z` and their action on covariance
//! ellipsoids.

use crate::error::{Error, Result};
use crate::gaussian::{projection_pair_check, quantum_condition, CovState};
use crate::matcore::{mat_exp, GenMatrix, Pivot, SymMatrix, TolerancePolicy};
use crate::polarity::{unit_ball_volume, DualPairReport};
use crate::symplectic::{j_matrix, SymplecticMatrix};

/// `H(z) = ½ H″z·z`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadHamiltonian {
    hess: SymMatrix,
}

impl QuadHamiltonian {
    pub fn new(hess: SymMatrix) -> Result<Self> {
        let d = hess.dim();
        if d == 0 || !d.is_multiple_of(2) {
            return Err(Error::DimensionOdd { dim: d });
        }
        Ok(Self { hess })
    }

    /// `H = ½(|x|² + |p|²)`.
    pub fn oscillator(n: usize) -> Self {
        Self {
            hess: SymMatrix::identity(2 * n),
        }
    }

    /// `H = ½|p|²`.
    pub fn free_particle(n: usize) -> Self {
        let mut d = vec![0.0; n];
        d.extend(std::iter::repeat_n(1.0, n));
        Self {
            hess: SymMatrix::from_diagonal(&d),
        }
    }

    pub fn hess(&self) -> &SymMatrix {
        &self.hess
    }

    pub fn n(&self) -> usize {
        self.hess.dim() / 2
    }

    pub fn energy(&self, z: &[f64]) -> f64 {
        0.5 * self.hess.quad_form(z)
    }
}

/// Piecewise-constant Hessian: segments are applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<(QuadHamiltonian, f64)>,
}

impl Schedule {
    pub fn new(segments: Vec<(QuadHamiltonian, f64)>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidArgument("schedule has no segments".into()));
        };
        let n = first.0.n();
        for (h, dt) in &segments {
            if h.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: 2 * n,
                    found: 2 * h.n(),
                });
            }
            if !(dt.is_finite() && *dt >= 0.0) {
                return Err(Error::InvalidArgument(format!("segment duration {dt} must be finite and ≥ 0")));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(QuadHamiltonian, f64)] {
        &self.segments
    }

    pub fn n(&self) -> usize {
        self.segments[0].0.n()
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.1).sum()
    }
}

/// `S_t = exp(t·J·H″)`, certified symplectic.
pub fn flow(h: &QuadHamiltonian, t: f64, tol: &TolerancePolicy) -> Result<SymplecticMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} is not finite")));
    }
    let gen = GenMatrix::new(j_matrix(h.n()) * h.hess.as_mat())?;
    let s = mat_exp(&gen, t)?;
    SymplecticMatrix::certify(s.into_mat(), tol)
}

/// `Σ_t = S_t Σ S_tᵀ`. A quantum initial state must stay quantum.
pub fn evolve_cov(state: &CovState, h: &QuadHamiltonian, t: f64, tol: &TolerancePolicy) -> Result<CovState> {
    if h.n() != state.n() {
        return Err(Error::DimensionMismatch {
            expected: 2 * state.n(),
            found: 2 * h.n(),
        });
    }
    let s = flow(h, t, tol)?;
    let out = state.transformed(&s, tol)?;
    let before = quantum_condition(state, tol);
    let after = quantum_condition(&out, tol);
    if before.holds && !after.holds {
        return Err(Error::VerificationFailed {
            what: "quantum condition under evolution",
            residual: (after.nu_min - before.nu_min).abs(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumePoint {
    pub t: f64,
    pub vol_x: f64,
    pub vol_p: f64,
    /// Present when the state satisfies the quantum condition.
    pub pair: Option<DualPairReport>,
}

/// Volumes of the position and momentum shadows of `Ω_t` along a time grid.
///
/// `|Ω_{t,X}| = ω_n ħ^{n/2} (det M_t / det M_{t,PP})^{−1/2}` and likewise for
/// the momentum side.
pub fn projection_volume_series(
    state: &CovState,
    h: &QuadHamiltonian,
    grid: &[f64],
    tol: &TolerancePolicy,
) -> Result<Vec<VolumePoint>> {
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid contains a non-finite value".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be ascending".into()));
    }
    let n = state.n();
    let hbar = state.hbar();
    let unit = unit_ball_volume(n) * hbar.powf(n as f64 / 2.0);
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let st = evolve_cov(state, h, t, tol)?;
        let m = st.ellipsoid(tol)?;
        let b = m.m().blocks()?;
        let det_m = m.m().det();
        let det_pp = SymMatrix::from_mat_lossy(b.pp).det();
        let det_xx = SymMatrix::from_mat_lossy(b.xx).det();
        let pair = if quantum_condition(&st, tol).holds {
            Some(projection_pair_check(&st, tol)?)
        } else {
            None
        };
        out.push(VolumePoint {
            t,
            vol_x: unit / (det_m / det_pp).sqrt(),
            vol_p: unit / (det_m / det_xx).sqrt(),
            pair,
        });
    }
    Ok(out)
}

/// `S_{t_k}⋯S_{t_1}` for a piecewise-constant schedule.
pub fn flow_schedule(sched: &Schedule, tol: &TolerancePolicy) -> Result<SymplecticMatrix> {
    let mut acc = SymplecticMatrix::identity(sched.n());
    for (h, dt) in &sched.segments {
        acc = flow(h, *dt, tol)?.compose(&acc);
    }
    SymplecticMatrix::certify(acc.into_mat(), tol)
}

/// Schur-complement route to the shadow shapes, kept for cross-checks.
pub fn shadow_shapes(state: &CovState, tol: &TolerancePolicy) -> Result<(SymMatrix, SymMatrix)> {
    let m = state.ellipsoid(tol)?;
    Ok((
        crate::matcore::schur_complement(m.m(), Pivot::Lower, tol)?,
        crate::matcore::schur_complement(m.m(), Pivot::Upper, tol)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{rel_diff, Mat};

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn closed_form_flows() {
        for t in [0.0, 0.3, 1.7, -2.2, 9.0] {
            let s = flow(&QuadHamiltonian::oscillator(1), t, &tol()).unwrap();
            let want = Mat::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
            assert!((s.as_mat() - want).norm() < 1e-13, "t = {t}");
            let s = flow(&QuadHamiltonian::free_particle(1), t, &tol()).unwrap();
            let want = Mat::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]);
            assert!((s.as_mat() - want).norm() < 1e-13);
        }
        assert_eq!(flow(&QuadHamiltonian::oscillator(2), 0.0, &tol()).unwrap().as_mat(), &Mat::identity(4, 4));
    }

    #[test]
    fn covariance_examples() {
        let h = 0.9;
        let st = CovState::new(h, SymMatrix::scaled_identity(2, h / 2.0), &tol()).unwrap();
        let out = evolve_cov(&st, &QuadHamiltonian::oscillator(1), 2.5, &tol()).unwrap();
        assert!(rel_diff(out.sigma().as_mat(), st.sigma().as_mat()) < 1e-14);

        let st = CovState::new(1.0, SymMatrix::from_rows(&[vec![0.8, 0.3], vec![0.3, 0.9]]).unwrap(), &tol()).unwrap();
        let t = 1.9;
        let out = evolve_cov(&st, &QuadHamiltonian::free_particle(1), t, &tol()).unwrap();
        assert!((out.sigma().get(0, 0) - (0.8 + 2.0 * t * 0.3 + t * t * 0.9)).abs() < 1e-13);
        assert!((out.sigma().get(1, 1) - 0.9).abs() < 1e-14);
    }

    #[test]
    fn series_examples() {
        let st = CovState::new(1.0, SymMatrix::scaled_identity(2, 0.5), &tol()).unwrap();
        let grid: Vec<f64> = (0..6).map(|k| k as f64).collect();
        let osc = projection_volume_series(&st, &QuadHamiltonian::oscillator(1), &grid, &tol()).unwrap();
        for p in &osc {
            assert!((p.vol_x - osc[0].vol_x).abs() < 1e-12 && (p.vol_p - osc[0].vol_p).abs() < 1e-12);
        }
        let free = projection_volume_series(&st, &QuadHamiltonian::free_particle(1), &grid, &tol()).unwrap();
        for p in &free {
            let want = free[0].vol_x * (1.0 + p.t * p.t).sqrt();
            assert!((p.vol_x - want).abs() < 1e-12 * want);
            assert!(p.pair.as_ref().unwrap().is_pair);
        }
        assert!(projection_volume_series(&st, &QuadHamiltonian::oscillator(1), &[1.0, 0.0], &tol()).is_err());
    }

    #[test]
    fn schedules() {
        let h = QuadHamiltonian::oscillator(1);
        let single = flow_schedule(&Schedule::new(vec![(h.clone(), 0.7)]).unwrap(), &tol()).unwrap();
        assert!(rel_diff(single.as_mat(), flow(&h, 0.7, &tol()).unwrap().as_mat()) < 1e-15);
        let two = flow_schedule(&Schedule::new(vec![(h.clone(), 0.7), (h.clone(), 1.1)]).unwrap(), &tol()).unwrap();
        assert!(rel_diff(two.as_mat(), flow(&h, 1.8, &tol()).unwrap().as_mat()) < 1e-13);

        let f = QuadHamiltonian::free_particle(1);
        let ab = flow_schedule(&Schedule::new(vec![(h.clone(), 0.5), (f.clone(), 1.0)]).unwrap(), &tol()).unwrap();
        let ba = flow_schedule(&Schedule::new(vec![(f, 1.0), (h, 0.5)]).unwrap(), &tol()).unwrap();
        assert!(rel_diff(ab.as_mat(), ba.as_mat()) > 1e-2);
        assert!(Schedule::new(vec![(QuadHamiltonian::oscillator(1), -1.0)]).is_err());
    }
}
