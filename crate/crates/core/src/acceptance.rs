//! Seeded end-to-end checks shared by the `acceptance` test target and the
//! CLI `selftest` command.

use std::f64::consts::PI;
use std::fmt;

use crate::bounds::{
    concentration, donoho_stark_band, donoho_stark_check, mahler_box, mahler_ellipsoid, mahler_volume, mc_volume,
    BodyOracle,
};
use crate::capacity::{capacity_quantum_threshold, cmax_product};
use crate::dynamics::{evolve_cov, flow, projection_volume_series, QuadHamiltonian};
use crate::error::Result;
use crate::gaussian::{
    is_quantum_blob, marginal, projection_pair_check, purity, wigner_eval, Axis, CovState, GaussianPure,
};
use crate::matcore::{SymMatrix, TolerancePolicy};
use crate::polarity::{ellipsoid_dual, polar_dual, BoxBody, ConvexBody, EllipsoidBody, Space};
use crate::reconstruct::{max_volume_state, pauli_1d, reconstruct_pair, reconstruct_saturated, Ambiguity};
use crate::sampling::{cov_with_nu, random_non_quantum_cov, random_quantum_cov, random_quantum_pair, random_spd, seeded};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// The check ran and missed a listed value that contradicts an
    /// independently verified one; see `divergence`.
    Divergent,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Divergent => "FAIL (documented divergence)",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub status: Status,
    pub detail: String,
    pub divergence: Option<String>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "criterion {:>2} [{}] {}: {}", self.id, self.status.label(), self.title, self.detail)?;
        if let Some(d) = &self.divergence {
            write!(f, " | {d}")?;
        }
        Ok(())
    }
}

fn verdict(id: u8, title: &'static str, ok: bool, detail: String) -> CriterionResult {
    CriterionResult {
        id,
        title,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
        divergence: None,
    }
}

fn errored(id: u8, title: &'static str, e: Error) -> CriterionResult {
    verdict(id, title, false, format!("error: {e}"))
}

macro_rules! guarded {
    ($id:expr, $title:expr, $body:expr) => {
        match (|| -> Result<CriterionResult> { $body })() {
            Ok(r) => r,
            Err(e) => errored($id, $title, e),
        }
    };
}

const T1: &str = "quantum condition vs capacity threshold";

/// 1000 states, half of them violating the quantum condition.
pub fn criterion_1(seed: u64) -> CriterionResult {
    guarded!(1, T1, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let (mut agree, mut worst) = (0usize, 0.0f64);
        let total = 1000;
        for i in 0..total {
            let n = 1 + i % 4;
            let hbar = [1.0, 0.5, 2.0][i % 3];
            let st = if i % 2 == 0 {
                random_quantum_cov(&mut rng, n, hbar, 0.2)
            } else {
                random_non_quantum_cov(&mut rng, n, hbar)
            };
            let q = capacity_quantum_threshold(&st, &tol)?;
            let direct = 2.0 * PI * st.nu_min();
            worst = worst.max((q.capacity - direct).abs() / direct);
            if q.agrees() && q.quantum == (i % 2 == 0) {
                agree += 1;
            }
        }
        Ok(verdict(
            1,
            T1,
            agree == total && worst <= 1e-9,
            format!("{agree}/{total} verdicts agree; max |c − 2πν_min|/c = {worst:.2e}"),
        ))
    })
}

const T2: &str = "projections of quantum states form dual pairs";

/// 1000 quantum states; saturation must occur exactly for blobs with
/// vanishing `Σ_XP` (the product-frame blobs).
pub fn criterion_2(seed: u64) -> CriterionResult {
    guarded!(2, T2, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let total = 1000;
        let (mut pairs, mut sat_ok) = (0usize, 0usize);
        let (mut saturated, mut aligned_blobs) = (0usize, 0usize);
        for i in 0..total {
            let n = 1 + i % 3;
            let hbar = if i % 5 == 0 { 0.7 } else { 1.0 };
            let (st, aligned_blob) = match i % 3 {
                0 => (random_quantum_cov(&mut rng, n, hbar, 0.0), false),
                1 => (cov_with_nu(&mut rng, hbar, &vec![hbar / 2.0; n], 0.6), false),
                _ => {
                    let a = random_spd(&mut rng, n, 0.6);
                    (reconstruct_saturated(&a, hbar, &tol)?.blob_sigmas.remove(0), true)
                }
            };
            let rep = projection_pair_check(&st, &tol)?;
            if rep.is_pair {
                pairs += 1;
            }
            let blob = is_quantum_blob(&st, &tol)?.is_blob;
            let xp_zero = st.blocks().xp.norm() <= 1e-9 * st.sigma().as_mat().norm();
            let expect = blob && xp_zero;
            if rep.is_saturated == expect && (!aligned_blob || rep.is_saturated) {
                sat_ok += 1;
            }
            saturated += usize::from(rep.is_saturated);
            aligned_blobs += usize::from(aligned_blob);
        }
        Ok(verdict(
            2,
            T2,
            pairs == total && sat_ok == total,
            format!(
                "{pairs}/{total} dual-pair certificates; saturation matches blob ∧ Σ_XP = 0 in {sat_ok}/{total} \
                 ({saturated} saturated, {aligned_blobs} product-frame blobs)"
            ),
        ))
    })
}

const T3: &str = "c_max of dual pairs";

pub fn criterion_3(seed: u64) -> CriterionResult {
    guarded!(3, T3, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let mut worst_sat = 0.0f64;
        for i in 0..300 {
            let n = 1 + i % 4;
            let hbar = [1.0, 0.3, 2.5][i % 3];
            let a = random_spd(&mut rng, n, 0.7);
            let x = EllipsoidBody::new(Space::Position, a, hbar, &tol)?;
            let p = ellipsoid_dual(&x, hbar)?;
            let c = cmax_product(&x, &p, hbar, &tol)?;
            worst_sat = worst_sat.max((c.value - 4.0 * hbar).abs() / (4.0 * hbar));
        }
        let (mut worst_routes, mut below) = (0.0f64, 0usize);
        for i in 0..300 {
            let n = 1 + i % 4;
            let (a, b) = random_quantum_pair(&mut rng, n, 0.05);
            let x = EllipsoidBody::new(Space::Position, a, 1.0, &tol)?;
            let p = EllipsoidBody::new(Space::Momentum, b, 1.0, &tol)?;
            let c = cmax_product(&x, &p, 1.0, &tol)?;
            let cc = c.cross_check.expect("product report");
            worst_routes = worst_routes.max((cc.scaling_eigen - cc.scaling_search).abs() / cc.scaling_eigen);
            if c.value < 4.0 * (1.0 - 1e-12) {
                below += 1;
            }
        }
        Ok(verdict(
            3,
            T3,
            worst_sat <= 1e-10 && worst_routes <= 1e-9 && below == 0,
            format!(
                "max rel err of c_max(X×X^ħ) vs 4ħ = {worst_sat:.2e} (300 A); eigen vs scaling-search = \
                 {worst_routes:.2e} (300 pairs); pairs below 4ħ: {below}"
            ),
        ))
    })
}

const T4: &str = "one-mode Pauli partners";

pub fn criterion_4() -> CriterionResult {
    guarded!(4, T4, {
        let tol = TolerancePolicy::default();
        let s = pauli_1d(1.0, 1.0, 1.0, &tol)?;
        let r3 = 3f64.sqrt() / 2.0;
        let xp: Vec<f64> = s.blob_sigmas.iter().map(|st| st.blocks().xp[(0, 0)]).collect();
        let signs_ok = xp.len() == 2 && (xp[0] - r3).abs() < 1e-12 && (xp[1] + r3).abs() < 1e-12;
        let mut blobs = true;
        for st in &s.blob_sigmas {
            blobs &= is_quantum_blob(st, &tol)?.is_blob;
        }
        let reproj = s.verification.reprojection;
        let rejected = [(0.4, 0.4, 1.0), (0.1, 2.0, 1.0), (1.0, 0.2, 1.0)]
            .iter()
            .all(|&(a, b, h)| matches!(pauli_1d(a, b, h, &tol), Err(Error::SubHeisenberg { .. })));
        Ok(verdict(
            4,
            T4,
            signs_ok && blobs && reproj <= 1e-12 && s.ambiguity == Ambiguity::SignPair && rejected,
            format!(
                "σxp = {:+.12}, {:+.12}; both blobs: {blobs}; reprojection {reproj:.1e}; sub-Heisenberg rejected: \
                 {rejected}",
                xp.first().copied().unwrap_or(f64::NAN),
                xp.get(1).copied().unwrap_or(f64::NAN)
            ),
        ))
    })
}

const T5: &str = "reconstruction round trip";

pub fn criterion_5(seed: u64) -> CriterionResult {
    guarded!(5, T5, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let (mut ok, mut worst, mut worst_purity, mut noncommuting) = (0usize, 0.0f64, 0.0f64, 0usize);
        let total = 200;
        for i in 0..total {
            let n = 1 + i % 3;
            let (a, b) = random_quantum_pair(&mut rng, n, 0.05);
            let comm = (a.as_mat() * b.as_mat() - b.as_mat() * a.as_mat()).norm();
            if n > 1 && comm > 1e-3 {
                noncommuting += 1;
            }
            let sol = reconstruct_pair(&a, &b, 1.0, &tol)?;
            let mut good = sol.verification.worst() <= 1e-8;
            for st in &sol.blob_sigmas {
                let dev = (purity(st) - 1.0).abs();
                worst_purity = worst_purity.max(dev);
                good &= dev <= 1e-8;
            }
            let mv = max_volume_state(&a, &b, 1.0, &tol)?;
            good &= mv.reprojection <= 1e-8;
            worst = worst.max(sol.verification.worst()).max(mv.reprojection);
            ok += usize::from(good);
        }
        let sat = reconstruct_saturated(&random_spd(&mut rng, 3, 0.6), 1.0, &tol)?;
        let sat_ok = sat.verification.worst() <= 1e-8;
        Ok(verdict(
            5,
            T5,
            ok == total && sat_ok && noncommuting > 0,
            format!(
                "{ok}/{total} pairs verified (worst residual {worst:.2e}, worst |μ − 1| {worst_purity:.2e}, \
                 {noncommuting} non-commuting at n = 2, 3); saturated solver verified: {sat_ok}"
            ),
        ))
    })
}

const T6: &str = "max-volume state purity";

pub fn criterion_6(seed: u64) -> CriterionResult {
    guarded!(6, T6, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let (mut worst, mut flagged, mut generic) = (0.0f64, 0usize, 0usize);
        for i in 0..200 {
            let (a, b) = random_quantum_pair(&mut rng, 1 + i % 4, 0.05);
            let m = max_volume_state(&a, &b, 1.0, &tol)?;
            worst = worst.max((m.purity - m.purity_from_nu).abs());
            if m.lambda.iter().any(|l| *l < 1.0 - 1e-6) {
                generic += 1;
                flagged += usize::from(m.flags.squared_exponent_mismatch && m.flags.quarter_exponent_mismatch);
            }
        }
        let one = SymMatrix::from_diagonal(&[1.0]);
        let quarter = SymMatrix::from_diagonal(&[0.25]);
        let ex = max_volume_state(&one, &quarter, 1.0, &tol)?;
        let core_ok = worst <= 1e-10 && flagged == generic;
        #[allow(clippy::approx_constant)]
        let listed = 0.70711;
        let matches_listed = (ex.purity - listed).abs() < 5e-6;
        let mut r = verdict(
            6,
            T6,
            core_ok,
            format!(
                "det-route vs ν-route purity max |Δ| = {worst:.2e} on 200 pairs; exponent flags raised on \
                 {flagged}/{generic}"
            ),
        );
        if core_ok && !matches_listed {
            r.status = Status::Divergent;
            r.divergence = Some(format!(
                "λ = 1/4, n = 1: μ = {:.5} (Πλ^{{1/2}}, reprojecting John ellipsoid Σ = diag(1/2, 2)); listed \
                 value {listed} = Πλ^{{1/4}} is not reproduced",
                ex.purity
            ));
        }
        Ok(r)
    })
}

const T7: &str = "conservation under quadratic flows";

pub fn criterion_7(seed: u64) -> CriterionResult {
    guarded!(7, T7, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let grid: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let (mut det_drift, mut nu_drift, mut pair_fail) = (0.0f64, 0.0f64, 0usize);
        for i in 0..100 {
            let n = 1 + i % 3;
            let st = random_quantum_cov(&mut rng, n, 1.0, 0.3);
            let h = QuadHamiltonian::new(random_spd(&mut rng, 2 * n, 0.5))?;
            let d0 = st.sigma().det();
            for &t in &grid {
                let s = evolve_cov(&st, &h, t, &tol)?;
                det_drift = det_drift.max((s.sigma().det() - d0).abs() / d0);
                for (a, b) in s.nu().iter().zip(st.nu()) {
                    nu_drift = nu_drift.max((a - b).abs() / b);
                }
            }
            let series = projection_volume_series(&st, &h, &grid, &tol)?;
            pair_fail += series.iter().filter(|p| !p.pair.as_ref().is_some_and(|r| r.is_pair)).count();
        }
        let free = QuadHamiltonian::free_particle(1);
        let st = CovState::new(1.0, SymMatrix::from_rows(&[vec![0.9, -0.35], vec![-0.35, 0.6]])?, &tol)?;
        let mut free_err = 0.0f64;
        for &t in &grid {
            let s = evolve_cov(&st, &free, t, &tol)?;
            let want = 0.9 + 2.0 * t * -0.35 + t * t * 0.6;
            free_err = free_err.max((s.sigma().get(0, 0) - want).abs() / want);
        }
        let flow_ok = flow(&free, 0.0, &tol)?.as_mat() == &crate::matcore::Mat::identity(2, 2);
        Ok(verdict(
            7,
            T7,
            det_drift <= 1e-8 && nu_drift <= 1e-8 && pair_fail == 0 && free_err <= 1e-10 && flow_ok,
            format!(
                "100 runs × 21 times: det drift {det_drift:.2e}, ν drift {nu_drift:.2e}, pair failures {pair_fail}; \
                 free-particle σxx(t) rel err {free_err:.2e}"
            ),
        ))
    })
}

const T8: &str = "Wigner marginal by quadrature";

pub fn criterion_8() -> CriterionResult {
    guarded!(8, T8, {
        let tol = TolerancePolicy::default();
        let st = CovState::new(1.0, SymMatrix::from_rows(&[vec![0.8, 0.3], vec![0.3, 0.9]])?, &tol)?;
        let sp = st.sigma().get(1, 1).sqrt();
        let sx = st.sigma().get(0, 0).sqrt();
        let m = 1200;
        let h = 12.0 * sp / m as f64;
        let mut worst = 0.0f64;
        for k in 0..11 {
            let x = -3.0 * sx + 0.6 * sx * k as f64;
            let mut acc = 0.0;
            for j in 0..=m {
                let p = -6.0 * sp + h * j as f64;
                let w = if j == 0 || j == m { 0.5 } else { 1.0 };
                acc += w * wigner_eval(&st, &[x, p])?;
            }
            let quad = acc * h;
            worst = worst.max((quad - marginal(&st, Axis::Position, &[x])?).abs());
        }
        Ok(verdict(8, T8, worst <= 1e-6, format!("max |quadrature − marginal| = {worst:.2e} at 11 points")))
    })
}

const T9: &str = "Mahler volumes and bound chain";

pub fn criterion_9(seed: u64) -> CriterionResult {
    guarded!(9, T9, {
        let tol = TolerancePolicy::default();
        let mut rng = seeded(seed);
        let iv: ConvexBody = BoxBody::new(Space::Position, vec![0.8])?.into();
        let area = mahler_volume(&iv, 1.0, &tol)?.upsilon;
        let area_ok = (area - 4.0).abs() <= 1e-15;
        let mut worst_ell = 0.0f64;
        for n in 1..=6 {
            let want = mahler_ellipsoid(n, 1.0);
            for _ in 0..100 {
                let x: ConvexBody = EllipsoidBody::new(Space::Position, random_spd(&mut rng, n, 0.8), 1.0, &tol)?.into();
                let u = mahler_volume(&x, 1.0, &tol)?.upsilon;
                worst_ell = worst_ell.max((u - want).abs() / want);
            }
        }
        let mut chain_ok = true;
        for n in 1..=8 {
            let widths: Vec<f64> = (0..n).map(|k| 0.5 + 0.3 * k as f64).collect();
            let r = mahler_volume(&BoxBody::new(Space::Position, widths)?.into(), 1.0, &tol)?;
            chain_ok &= r.within_bounds
                && r.lower_kuperberg <= r.lower_conjecture * (1.0 + 1e-12)
                && r.lower_conjecture <= r.upper_santalo * (1.0 + 1e-12)
                && (r.upsilon - mahler_box(n, 1.0)).abs() <= 1e-12 * r.upsilon;
        }
        let mut mc_ok = true;
        let mut mc_worst = 0.0f64;
        for n in 1..=3 {
            let e: ConvexBody = EllipsoidBody::new(Space::Position, random_spd(&mut rng, n, 0.4), 1.0, &tol)?.into();
            let b: ConvexBody = BoxBody::new(Space::Position, (0..n).map(|k| 0.7 + 0.2 * k as f64).collect())?.into();
            for (k, body) in [e, b].into_iter().enumerate() {
                let dual = polar_dual(&body, 1.0)?;
                let oracle = BodyOracle::product(BodyOracle::from_body(&body)?, BodyOracle::from_body(&dual)?)?;
                let est = mc_volume(&oracle, seed ^ (n as u64 * 31 + k as u64), 1_000_000)?;
                let want = mahler_volume(&body, 1.0, &tol)?.upsilon;
                if est.std_error > 0.0 {
                    mc_worst = mc_worst.max((est.estimate - want).abs() / est.std_error);
                }
                mc_ok &= est.agrees_with(want, 3.0);
            }
        }
        Ok(verdict(
            9,
            T9,
            area_ok && worst_ell <= 1e-10 && chain_ok && mc_ok,
            format!(
                "n = 1 area {area}; ellipsoid υ max rel dev {worst_ell:.2e} (600 A); box chain n ≤ 8 ok: {chain_ok}; \
                 MC within 3σ: {mc_ok} (max {mc_worst:.2}σ)"
            ),
        ))
    })
}

const T10: &str = "Donoho–Stark band and concentrations";

pub fn criterion_10() -> CriterionResult {
    guarded!(10, T10, {
        let tol = TolerancePolicy::default();
        let band = donoho_stark_band(6);
        let lower_ok = (band.lower - 0.97917).abs() < 5e-6;
        let upper_ok = (band.upper_mahler - 0.99970).abs() < 5e-6;
        let mut ds_ok = true;
        let mut checked = 0;
        for n in 1..=2 {
            let phi = GaussianPure::standard(1.0, n);
            for r in [0.5, 1.0, 2.0, 4.0] {
                let x: ConvexBody = EllipsoidBody::ball(Space::Position, n, r)?.into();
                let p = polar_dual(&x, 1.0)?;
                let ex = concentration(&phi, &x, Axis::Position, 0, 0, &tol)?.eps;
                let ep = concentration(&phi, &p, Axis::Momentum, 0, 0, &tol)?.eps;
                let rep = donoho_stark_check(ex, ep, &x, &p, 1.0, &tol)?;
                ds_ok &= rep.holds.unwrap_or(true) && rep.band.is_some();
                checked += 1;
            }
        }
        Ok(verdict(
            10,
            T10,
            lower_ok && upper_ok && ds_ok,
            format!(
                "n = 6 band [{:.5}, {:.5}]; Donoho–Stark satisfied at {checked} radii: {ds_ok}",
                band.lower, band.upper_mahler
            ),
        ))
    })
}

/// Seed used by the acceptance suite when none is given.
pub const DEFAULT_SEED: u64 = 20240917;

/// Criteria 1–10 with seeds derived from `seed`.
pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    vec![
        criterion_1(seed),
        criterion_2(seed.wrapping_add(1)),
        criterion_3(seed.wrapping_add(2)),
        criterion_4(),
        criterion_5(seed.wrapping_add(4)),
        criterion_6(seed.wrapping_add(5)),
        criterion_7(seed.wrapping_add(6)),
        criterion_8(),
        criterion_9(seed.wrapping_add(8)),
        criterion_10(),
    ]
}

/// Checks of the form (id, reason) whose listed value is known not to be
/// reproducible.
pub const DOCUMENTED_DIVERGENCES: &[(u8, &str)] = &[(
    6,
    "listed purity Πλ^{1/4} belongs to an ellipsoid that does not reproject onto X and P; the reprojecting maximum-volume state has Πλ^{1/2}",
)];
