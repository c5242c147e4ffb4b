use qpolar::acceptance::{self, Status};
use qpolar::bounds::{
    concentration, donoho_stark_band, donoho_stark_check, hardy_classify, kuperberg_lower, mahler_box,
    mahler_ellipsoid, mahler_volume, mc_volume, BodyOracle, DonohoStarkBand,
};
use qpolar::capacity::{
    capacity_ellipsoid, capacity_quantum_threshold, cmax_product, isoperimetric_check, CapacityReport, IsoBody,
    IsoReport,
};
use qpolar::dynamics::{evolve_cov, flow, projection_volume_series, QuadHamiltonian};
use qpolar::gaussian::{
    is_quantum_blob, project, projection_pair_check, purity, quantum_condition, rsup_check, Axis, CovState,
    GaussianPure, PhaseEllipsoid,
};
use qpolar::matcore::{mat_exp, rel_diff, GenMatrix, SymMatrix, TolerancePolicy};
use qpolar::polarity::{
    is_quantum_pair, polar_dual, BoxBody, ConvexBody, CrossPolytopeBody, DualPairReport, EllipsoidBody, Space,
};
use qpolar::reconstruct::{
    max_volume_state, pair_eigenvalues, pauli_1d, reconstruct_pair, reconstruct_saturated,
    saturated_uniqueness_probe, verification_bound, volume_maximality_probe, PauliSolution, ProbeReport,
};
use qpolar::symplectic::{symplectic_eigenvalues, symplectic_residual, williamson};
use qpolar::Error;
use serde_json::{json, Value};

use crate::json::{body as body_json, ellipsoid as ellipsoid_json, flag, mat, num, nums};
use crate::problem::ProblemFile;
use crate::CliError;

pub const COMMANDS: &[&str] = &[
    "dual",
    "pair-check",
    "williamson",
    "project",
    "reconstruct",
    "capacity",
    "evolve",
    "mahler",
    "hardy",
    "donoho-stark",
    "selftest",
];

const DEFAULT_QMC_SAMPLES: usize = 1 << 16;

/// What a command hands back to the report writer.
pub struct Outcome {
    pub result: Value,
    pub certificates: Value,
    pub flags: Vec<Value>,
    pub status: String,
    pub exit: i32,
}

impl Outcome {
    fn ok(status: &str, result: Value, certificates: Value) -> Self {
        Outcome {
            result,
            certificates,
            flags: Vec::new(),
            status: status.to_string(),
            exit: 0,
        }
    }

    fn with_flags(mut self, flags: Vec<Value>) -> Self {
        self.flags = flags;
        self
    }
}

pub struct Ctx<'a> {
    pub pf: &'a ProblemFile,
    pub tol: TolerancePolicy,
    pub seed: u64,
}

impl Ctx<'_> {
    fn hbar(&self) -> f64 {
        self.pf.hbar
    }

    fn n(&self) -> usize {
        self.pf.n
    }

    fn bound(&self) -> f64 {
        verification_bound(&self.tol)
    }

    fn certify(&self, what: &'static str, residual: f64) -> Result<(), CliError> {
        if residual.is_finite() && residual <= self.bound() {
            Ok(())
        } else {
            Err(Error::VerificationFailed { what, residual }.into())
        }
    }

    fn state(&self) -> Result<CovState, CliError> {
        let sigma = self.pf.sym("Sigma", true, &self.tol)?;
        Ok(CovState::new(self.hbar(), sigma, &self.tol)?)
    }

    fn space(&self) -> Result<Space, CliError> {
        match self.pf.params.space.as_deref().unwrap_or("position") {
            "position" => Ok(Space::Position),
            "momentum" => Ok(Space::Momentum),
            other => Err(CliError::Validation(format!(
                "space must be \"position\" or \"momentum\", got {other:?}"
            ))),
        }
    }

    /// The body described by `params.body` (default: ellipsoid from matrix `A`).
    fn body(&self) -> Result<ConvexBody, CliError> {
        let space = self.space()?;
        let p = &self.pf.params;
        let level = p.level.unwrap_or(self.hbar());
        match p.body.as_deref().unwrap_or("ellipsoid") {
            "ellipsoid" => {
                let a = self.pf.sym("A", false, &self.tol)?;
                Ok(EllipsoidBody::new(space, a, level, &self.tol)?.into())
            }
            "box" => {
                let hw = p
                    .half_widths
                    .clone()
                    .ok_or_else(|| CliError::Validation("box body needs params.half_widths".into()))?;
                self.check_len("half_widths", hw.len())?;
                Ok(BoxBody::new(space, hw)?.into())
            }
            "cross-polytope" => {
                let w = p
                    .weights
                    .clone()
                    .ok_or_else(|| CliError::Validation("cross-polytope body needs params.weights".into()))?;
                self.check_len("weights", w.len())?;
                Ok(CrossPolytopeBody::new(space, w, level)?.into())
            }
            other => Err(CliError::Validation(format!(
                "body must be \"ellipsoid\", \"box\" or \"cross-polytope\", got {other:?}"
            ))),
        }
    }

    fn check_len(&self, what: &str, len: usize) -> Result<(), CliError> {
        if len != self.n() {
            return Err(CliError::Validation(format!("params.{what} has {len} entries, expected n = {}", self.n())));
        }
        Ok(())
    }

    fn pair_bodies(&self) -> Result<(EllipsoidBody, EllipsoidBody), CliError> {
        let a = self.pf.sym("A", false, &self.tol)?;
        let b = self.pf.sym("B", false, &self.tol)?;
        let x = EllipsoidBody::new(Space::Position, a, self.hbar(), &self.tol)?;
        let p = EllipsoidBody::new(Space::Momentum, b, self.hbar(), &self.tol)?;
        Ok((x, p))
    }

    fn mode(&self, allowed: &[&str]) -> Result<String, CliError> {
        let mode = self
            .pf
            .params
            .mode
            .clone()
            .ok_or_else(|| CliError::Validation(format!("missing params.mode (one of {})", allowed.join(", "))))?;
        if !allowed.contains(&mode.as_str()) {
            return Err(CliError::Validation(format!(
                "params.mode {mode:?} not one of {}",
                allowed.join(", ")
            )));
        }
        Ok(mode)
    }
}

pub fn run(command: &str, ctx: &Ctx) -> Result<Outcome, CliError> {
    match command {
        "dual" => dual(ctx),
        "pair-check" => pair_check(ctx),
        "williamson" => williamson_cmd(ctx),
        "project" => project_cmd(ctx),
        "reconstruct" => reconstruct(ctx),
        "capacity" => capacity(ctx),
        "evolve" => evolve(ctx),
        "mahler" => mahler(ctx),
        "hardy" => hardy(ctx),
        "donoho-stark" => donoho_stark(ctx),
        "selftest" => selftest(ctx.seed),
        other => Err(CliError::Validation(format!("unknown command {other:?}"))),
    }
}

fn pair_json(r: &DualPairReport) -> Value {
    json!({
        "is_pair": r.is_pair,
        "is_saturated": r.is_saturated,
        "lambda": nums(&r.lambda),
        "witness": r.witness.as_deref().map(nums).unwrap_or(Value::Null),
    })
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Distance between two bodies of the same kind, after level normalization.
fn body_gap(a: &ConvexBody, b: &ConvexBody, hbar: f64) -> f64 {
    match (a, b) {
        (ConvexBody::Ellipsoid(x), ConvexBody::Ellipsoid(y)) => {
            rel_diff(x.normalized(hbar).shape().as_mat(), y.normalized(hbar).shape().as_mat())
        }
        (ConvexBody::Box(x), ConvexBody::Box(y)) => max_rel(x.half_widths(), y.half_widths()),
        (ConvexBody::CrossPolytope(x), ConvexBody::CrossPolytope(y)) => {
            let nx: Vec<f64> = x.weights().iter().map(|w| w / x.level()).collect();
            let ny: Vec<f64> = y.weights().iter().map(|w| w / y.level()).collect();
            max_rel(&nx, &ny)
        }
        _ => f64::INFINITY,
    }
}

fn dual(ctx: &Ctx) -> Result<Outcome, CliError> {
    let x = ctx.body()?;
    let d = polar_dual(&x, ctx.hbar())?;
    let dd = polar_dual(&d, ctx.hbar())?;
    let bidual = body_gap(&x, &dd, ctx.hbar());
    ctx.certify("bidual", bidual)?;
    let saturation = match (&x, &d) {
        (ConvexBody::Ellipsoid(e), ConvexBody::Ellipsoid(de)) => {
            let (xe, pe) = if e.space() == Space::Position { (e, de) } else { (de, e) };
            let r = is_quantum_pair(xe, pe, ctx.hbar(), &ctx.tol)?;
            if !r.is_saturated {
                return Err(Error::VerificationFailed {
                    what: "saturation of (X, X^hbar)",
                    residual: r.lambda.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max),
                }
                .into());
            }
            json!({
                "note": "the body and its polar dual form a saturated quantum pair",
                "pair": pair_json(&r),
            })
        }
        _ => Value::Null,
    };
    Ok(Outcome::ok(
        "ok",
        json!({
            "body": body_json(&x),
            "dual": body_json(&d),
            "saturation": saturation,
        }),
        json!({ "bidual_residual": num(bidual), "bound": num(ctx.bound()) }),
    ))
}

fn pair_check(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (x, p) = ctx.pair_bodies()?;
    let r = is_quantum_pair(&x, &p, ctx.hbar(), &ctx.tol)?;
    let mut direct = pair_eigenvalues(x.shape(), p.shape(), &ctx.tol)?;
    direct.reverse();
    let gap = max_rel(&r.lambda, &direct);
    ctx.certify("eigenvalues of AB", gap)?;
    let status = if r.is_saturated {
        "saturated"
    } else if r.is_pair {
        "pair"
    } else {
        "not-a-pair"
    };
    Ok(Outcome::ok(
        status,
        pair_json(&r),
        json!({ "lambda_route_gap": num(gap), "bound": num(ctx.bound()) }),
    ))
}

fn williamson_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let sigma = ctx.pf.sym("Sigma", true, &ctx.tol)?;
    let w = williamson(&sigma, &ctx.tol)?;
    let reconstruction = rel_diff(w.reconstruct().as_mat(), sigma.as_mat());
    let direct = symplectic_eigenvalues(&sigma, &ctx.tol)?;
    let nu_gap = max_rel(&w.nu, &direct);
    ctx.certify("Williamson reconstruction", reconstruction)?;
    ctx.certify("symplectic eigenvalue routes", nu_gap)?;
    let state = CovState::new(ctx.hbar(), sigma, &ctx.tol)?;
    let qc = quantum_condition(&state, &ctx.tol);
    Ok(Outcome::ok(
        if qc.holds { "quantum" } else { "non-quantum" },
        json!({
            "nu": nums(&w.nu),
            "S": mat(w.s.as_mat()),
            "quantum_condition": {
                "holds": qc.holds,
                "nu_min": num(qc.nu_min),
                "margin": num(qc.margin),
            },
        }),
        json!({
            "reconstruction_residual": num(reconstruction),
            "symplectic_residual": num(w.s.residual()),
            "nu_route_gap": num(nu_gap),
            "bound": num(ctx.bound()),
        }),
    ))
}

fn project_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let state = ctx.state()?;
    let omega = state.ellipsoid(&ctx.tol)?;
    let (x, p) = project(&omega, &ctx.tol)?;
    let qc = quantum_condition(&state, &ctx.tol);
    let pair = if qc.holds {
        projection_pair_check(&state, &ctx.tol)?
    } else {
        is_quantum_pair(&x, &p, ctx.hbar(), &ctx.tol)?
    };
    let rsup = (1..=ctx.n())
        .map(|j| rsup_check(&state, j, &ctx.tol))
        .collect::<Result<Vec<_>, _>>()?;

    // marginal route: the shadow of Ω on X is {(ħ/2)Σ_XX⁻¹x·x ≤ ħ}
    let h2 = ctx.hbar() / 2.0;
    let b = state.blocks();
    let xx = SymMatrix::from_mat_lossy(b.xx).inverse(&ctx.tol)?.scale(h2);
    let pp = SymMatrix::from_mat_lossy(b.pp).inverse(&ctx.tol)?.scale(h2);
    let gx = rel_diff(x.normalized(ctx.hbar()).shape().as_mat(), xx.as_mat());
    let gp = rel_diff(p.normalized(ctx.hbar()).shape().as_mat(), pp.as_mat());
    ctx.certify("position shadow routes", gx)?;
    ctx.certify("momentum shadow routes", gp)?;
    if qc.holds && !pair.is_pair {
        return Err(Error::VerificationFailed {
            what: "dual pair of a quantum state's shadows",
            residual: pair.lambda[0] - 1.0,
        }
        .into());
    }

    let status = if !qc.holds {
        "non-quantum"
    } else if pair.is_saturated {
        "saturated"
    } else {
        "pair"
    };
    Ok(Outcome::ok(
        status,
        json!({
            "position_shadow": ellipsoid_json(&x),
            "momentum_shadow": ellipsoid_json(&p),
            "pair": pair_json(&pair),
            "quantum_condition": {
                "holds": qc.holds,
                "nu_min": num(qc.nu_min),
                "margin": num(qc.margin),
            },
            "rsup": rsup,
            "purity": num(purity(&state)),
        }),
        json!({
            "position_route_gap": num(gx),
            "momentum_route_gap": num(gp),
            "bound": num(ctx.bound()),
        }),
    ))
}

fn pure_json(psi: &GaussianPure) -> Value {
    json!({ "W": mat(psi.w().as_mat()), "Y": mat(psi.y().as_mat()) })
}

fn solution_json(sol: &PauliSolution, tol: &TolerancePolicy) -> Result<Value, CliError> {
    let mut partners = Vec::new();
    for (psi, cov) in sol.partners.iter().zip(&sol.blob_sigmas) {
        let blob = is_quantum_blob(cov, tol)?;
        partners.push(json!({
            "Sigma": mat(cov.sigma().as_mat()),
            "state": pure_json(psi),
            "is_blob": blob.is_blob,
            "blob_deviation": num(blob.max_deviation),
        }));
    }
    Ok(json!({
        "ambiguity": sol.ambiguity.name(),
        "xp_rank": sol.xp_rank,
        "partners": partners,
    }))
}

fn verification_json(sol: &PauliSolution, bound: f64) -> Value {
    json!({
        "reprojection": num(sol.verification.reprojection),
        "symplectic": num(sol.verification.symplectic),
        "momentum_block": num(sol.verification.momentum_block),
        "bound": num(bound),
    })
}

fn probe_json(r: &ProbeReport) -> Value {
    json!({ "trials": r.trials, "admissible": r.admissible, "violations": r.violations })
}

fn reconstruct(ctx: &Ctx) -> Result<Outcome, CliError> {
    let mode = ctx.mode(&["pauli-1d", "saturated", "pair", "max-volume"])?;
    let hbar = ctx.hbar();
    let tol = &ctx.tol;
    let trials = ctx.pf.params.probe_trials;
    match mode.as_str() {
        "pauli-1d" => {
            if ctx.n() != 1 {
                return Err(CliError::Validation("pauli-1d needs n = 1".into()));
            }
            let p = &ctx.pf.params;
            let sxx = ctx.pf.require_f64(p.sigma_xx, "sigma_xx")?;
            let spp = ctx.pf.require_f64(p.sigma_pp, "sigma_pp")?;
            let sol = pauli_1d(sxx, spp, hbar, tol)?;
            let xp: Vec<f64> = sol.blob_sigmas.iter().map(|s| s.sigma().get(0, 1)).collect();
            let mut result = solution_json(&sol, tol)?;
            result["sigma_xp"] = nums(&xp);
            Ok(Outcome::ok(sol.ambiguity.name(), result, verification_json(&sol, ctx.bound())))
        }
        "saturated" => {
            let a = ctx.pf.sym("A", false, tol)?;
            let sol = reconstruct_saturated(&a, hbar, tol)?;
            let mut result = solution_json(&sol, tol)?;
            let mut certs = verification_json(&sol, ctx.bound());
            if let Some(t) = trials {
                certs["uniqueness_probe"] = probe_json(&saturated_uniqueness_probe(&a, hbar, ctx.seed, t, tol)?);
            }
            // W = A⁻² (Σ_XX = (ħ/2)A²) would give the shadow {A⁻²x·x ≤ ħ}
            let a_inv = a.inverse(tol)?;
            let alt_shadow = SymMatrix::from_mat_lossy(a_inv.as_mat() * a_inv.as_mat());
            let alt_gap = rel_diff(alt_shadow.as_mat(), a.as_mat());
            result["position_block_choice"] = json!("Sigma_XX = (hbar/2) A^-1, W = A");
            let flags = vec![flag(
                "saturated_position_block",
                "the alternative position block (hbar/2) A^2 (W = A^-2) does not reproject onto X; reprojection gap reported",
                json!({ "adopted_gap": num(sol.verification.reprojection), "alternative_gap": num(alt_gap) }),
            )];
            Ok(Outcome::ok(sol.ambiguity.name(), result, certs).with_flags(flags))
        }
        "pair" => {
            let (x, p) = ctx.pair_bodies()?;
            let sol = reconstruct_pair(x.shape(), p.shape(), hbar, tol)?;
            Ok(Outcome::ok(
                sol.ambiguity.name(),
                solution_json(&sol, tol)?,
                verification_json(&sol, ctx.bound()),
            ))
        }
        _ => {
            let (x, p) = ctx.pair_bodies()?;
            let mv = max_volume_state(x.shape(), p.shape(), hbar, tol)?;
            let st = mv.state.state();
            let mut certs = json!({
                "purity_route_gap": num((mv.purity - mv.purity_from_nu).abs()),
                "reprojection": num(mv.reprojection),
                "block_form_gap": num(mv.block_form_gap),
                "bound": num(ctx.bound()),
            });
            if let Some(t) = trials {
                certs["volume_maximality_probe"] =
                    probe_json(&volume_maximality_probe(x.shape(), p.shape(), hbar, ctx.seed, t, tol)?);
            }
            let f = &mv.flags;
            let mut flags = Vec::new();
            if f.squared_exponent_mismatch {
                flags.push(flag(
                    "purity_squared_exponent",
                    "closed form with exponent 2 on the eigenvalues of AB differs from the computed purity",
                    json!({ "computed": num(mv.purity), "alternative": num(f.squared_exponent) }),
                ));
            }
            if f.quarter_exponent_mismatch {
                flags.push(flag(
                    "purity_quarter_exponent",
                    "closed form with exponent 1/4 on the eigenvalues of AB differs from the computed purity; that ellipsoid does not reproject onto X and P",
                    json!({ "computed": num(mv.purity), "alternative": num(f.quarter_exponent) }),
                ));
            }
            Ok(Outcome::ok(
                "ok",
                json!({
                    "Sigma": mat(st.sigma().as_mat()),
                    "lambda": nums(&mv.lambda),
                    "nu": nums(st.nu()),
                    "purity": num(mv.purity),
                    "purity_from_nu": num(mv.purity_from_nu),
                    "purity_closed_forms": {
                        "sqrt_exponent": num(f.closed_form),
                        "unit_exponent": num(f.unit_exponent),
                        "squared_exponent": num(f.squared_exponent),
                        "quarter_exponent": num(f.quarter_exponent),
                    },
                }),
                certs,
            )
            .with_flags(flags))
        }
    }
}

fn capacity_json(r: &CapacityReport) -> Value {
    json!({
        "value": num(r.value),
        "formula": r.formula.name(),
        "witnesses": nums(&r.witnesses),
    })
}

fn iso_json(r: &IsoReport) -> Value {
    json!({ "lhs": num(r.lhs), "rhs": num(r.rhs), "volume": num(r.volume), "holds": r.holds })
}

fn capacity(ctx: &Ctx) -> Result<Outcome, CliError> {
    let mode = ctx.mode(&["ellipsoid", "covariance", "product"])?;
    let hbar = ctx.hbar();
    let tol = &ctx.tol;
    match mode.as_str() {
        "ellipsoid" => {
            let m = ctx.pf.sym("M", true, tol)?;
            let omega = PhaseEllipsoid::new(hbar, m, tol)?;
            let c = capacity_ellipsoid(&omega, tol)?;
            let iso = isoperimetric_check(&IsoBody::Ellipsoid(omega), hbar, tol)?;
            Ok(Outcome::ok(
                "ok",
                json!({ "capacity": capacity_json(&c), "isoperimetric": iso_json(&iso) }),
                json!({}),
            ))
        }
        "covariance" => {
            let state = ctx.state()?;
            let th = capacity_quantum_threshold(&state, tol)?;
            if !th.agrees() {
                return Err(Error::VerificationFailed {
                    what: "capacity threshold vs symplectic eigenvalue verdict",
                    residual: (th.capacity - std::f64::consts::PI * hbar).abs(),
                }
                .into());
            }
            let omega = state.ellipsoid(tol)?;
            let c = capacity_ellipsoid(&omega, tol)?;
            let iso = isoperimetric_check(&IsoBody::Ellipsoid(omega), hbar, tol)?;
            Ok(Outcome::ok(
                if th.quantum { "quantum" } else { "non-quantum" },
                json!({
                    "capacity": capacity_json(&c),
                    "quantum": th.quantum,
                    "threshold": num(std::f64::consts::PI * hbar),
                    "isoperimetric": iso_json(&iso),
                }),
                json!({ "nu_verdict": th.nu_verdict, "verdicts_agree": th.agrees() }),
            ))
        }
        _ => {
            let (x, p) = ctx.pair_bodies()?;
            let c = cmax_product(&x, &p, hbar, tol)?;
            let iso = isoperimetric_check(&IsoBody::Product(x, p), hbar, tol)?;
            let mut certs = json!({});
            let mut flags = Vec::new();
            if let Some(cc) = &c.cross_check {
                certs = json!({
                    "scaling_eigen": num(cc.scaling_eigen),
                    "scaling_search": num(cc.scaling_search),
                    "scaling_gap": num((cc.scaling_eigen - cc.scaling_search).abs() / cc.scaling_eigen),
                });
                if cc.inverse_eigen_mismatch {
                    flags.push(flag(
                        "product_capacity_inverse_eigen_form",
                        "4 hbar / lambda_min of AB differs from the computed c_max = 4 hbar / sqrt(lambda_max)",
                        json!({ "computed": num(c.value), "alternative": num(cc.inverse_eigen_formula) }),
                    ));
                }
            }
            Ok(Outcome::ok(
                "ok",
                json!({ "c_max": capacity_json(&c), "isoperimetric": iso_json(&iso) }),
                certs,
            )
            .with_flags(flags))
        }
    }
}

fn evolve(ctx: &Ctx) -> Result<Outcome, CliError> {
    let tol = &ctx.tol;
    let state = ctx.state()?;
    let h = QuadHamiltonian::new(ctx.pf.sym("H", true, tol)?)?;
    let grid = ctx.pf.params.t_grid.clone().unwrap_or_else(|| vec![0.0]);
    if grid.is_empty() {
        return Err(CliError::Validation("params.t_grid is empty".into()));
    }
    let series = projection_volume_series(&state, &h, &grid, tol)?;
    let det0 = state.sigma().det();
    let mut det_drift = 0.0_f64;
    let mut nu_drift = 0.0_f64;
    let mut sym_res = 0.0_f64;
    let mut points = Vec::new();
    for pt in &series {
        let st = evolve_cov(&state, &h, pt.t, tol)?;
        let s = flow(&h, pt.t, tol)?;
        det_drift = det_drift.max((st.sigma().det() - det0).abs() / det0.abs());
        nu_drift = nu_drift.max(max_rel(st.nu(), state.nu()));
        sym_res = sym_res.max(s.residual());
        points.push(json!({
            "t": num(pt.t),
            "Sigma": mat(st.sigma().as_mat()),
            "vol_x": num(pt.vol_x),
            "vol_p": num(pt.vol_p),
            "pair": pt.pair.as_ref().map(pair_json).unwrap_or(Value::Null),
        }));
    }
    ctx.certify("determinant conservation", det_drift)?;
    ctx.certify("symplectic eigenvalue conservation", nu_drift)?;
    let quantum = quantum_condition(&state, tol).holds;
    if quantum && series.iter().any(|p| !p.pair.as_ref().is_some_and(|r| r.is_pair)) {
        return Err(Error::VerificationFailed { what: "dual pair along the flow", residual: f64::NAN }.into());
    }

    // the same generator without J: exp(tH″) is symplectic only in special cases
    let t_last = *grid.last().unwrap_or(&0.0);
    let bare = mat_exp(&GenMatrix::new(h.hess().as_mat().clone())?, t_last)
        .map(|m| symplectic_residual(m.as_mat()))
        .unwrap_or(f64::INFINITY);
    let flags = vec![flag(
        "flow_generator",
        "the flow is exp(tJH''); the symplecticity residual of exp(tH'') at the last grid time is reported for comparison",
        json!({ "t": num(t_last), "flow_residual": num(sym_res), "bare_exponential_residual": num(bare) }),
    )];
    Ok(Outcome::ok(
        if quantum { "pair-preserved" } else { "non-quantum" },
        json!({ "series": points }),
        json!({
            "det_drift": num(det_drift),
            "nu_drift": num(nu_drift),
            "flow_symplectic_residual": num(sym_res),
            "bound": num(ctx.bound()),
        }),
    )
    .with_flags(flags))
}

fn mahler(ctx: &Ctx) -> Result<Outcome, CliError> {
    let tol = &ctx.tol;
    let hbar = ctx.hbar();
    let n = ctx.n();
    let x = ctx.body()?;
    let r = mahler_volume(&x, hbar, tol)?;
    let closed = json!({
        "ellipsoid": num(mahler_ellipsoid(n, hbar)),
        "box": num(mahler_box(n, hbar)),
        "kuperberg_lower": num(kuperberg_lower(n, hbar)),
    });
    let mut certs = json!({ "within_bounds": r.within_bounds });
    if let Some(samples) = ctx.pf.params.samples {
        let d = polar_dual(&x, hbar)?;
        let ex = mc_volume(&BodyOracle::from_body(&x)?, ctx.seed, samples)?;
        let ed = mc_volume(&BodyOracle::from_body(&d)?, ctx.seed.wrapping_add(1), samples)?;
        certs["monte_carlo"] = json!({
            "samples": samples,
            "volume": { "estimate": num(ex.estimate), "std_error": num(ex.std_error), "within_3se": ex.agrees_with(r.volume, 3.0) },
            "dual_volume": { "estimate": num(ed.estimate), "std_error": num(ed.std_error), "within_3se": ed.agrees_with(r.dual_volume, 3.0) },
        });
    }
    Ok(Outcome::ok(
        if r.within_bounds { "within-bounds" } else { "outside-bounds" },
        json!({
            "body": body_json(&x),
            "upsilon": num(r.upsilon),
            "volume": num(r.volume),
            "dual_volume": num(r.dual_volume),
            "bounds": {
                "kuperberg_lower": num(r.lower_kuperberg),
                "conjectured_lower": num(r.lower_conjecture),
                "santalo_upper": num(r.upper_santalo),
            },
            "closed_forms": closed,
        }),
        certs,
    ))
}

fn hardy(ctx: &Ctx) -> Result<Outcome, CliError> {
    let (x, p) = ctx.pair_bodies()?;
    let v = hardy_classify(x.shape(), p.shape(), ctx.hbar(), &ctx.tol)?;
    Ok(Outcome::ok(
        v.case.name(),
        json!({
            "case": v.case.name(),
            "lambdas": nums(&v.lambdas),
            "hardy_capacity": num(v.hardy_capacity),
            "state": v.state.as_ref().map(pure_json).unwrap_or(Value::Null),
            "note": v.note,
        }),
        json!({}),
    ))
}

fn band_json(b: &DonohoStarkBand) -> Value {
    json!({
        "lower": num(b.lower),
        "upper_kuperberg": num(b.upper_kuperberg),
        "upper_mahler": num(b.upper_mahler),
        "upper_mahler_solved": num(b.upper_mahler_solved),
    })
}

fn donoho_stark(ctx: &Ctx) -> Result<Outcome, CliError> {
    let tol = &ctx.tol;
    let hbar = ctx.hbar();
    let x = ctx.body()?;
    if x.space() != Space::Position {
        return Err(CliError::Validation("donoho-stark needs a position-space body".into()));
    }
    let p: ConvexBody = if ctx.pf.has("B") {
        let b = ctx.pf.sym("B", false, tol)?;
        EllipsoidBody::new(Space::Momentum, b, hbar, tol)?.into()
    } else {
        polar_dual(&x, hbar)?
    };
    let params = &ctx.pf.params;
    let mut measured = Value::Null;
    let (eps_x, eps_p) = match (params.eps_x, params.eps_p) {
        (Some(a), Some(b)) => (a, b),
        (None, None) => {
            let samples = params.samples.unwrap_or(DEFAULT_QMC_SAMPLES);
            let (cx, cp) = if ctx.pf.has("Sigma") {
                let s = ctx.state()?;
                (
                    concentration(&s, &x, Axis::Position, ctx.seed, samples, tol)?,
                    concentration(&s, &p, Axis::Momentum, ctx.seed.wrapping_add(1), samples, tol)?,
                )
            } else {
                let s = GaussianPure::standard(hbar, ctx.n());
                (
                    concentration(&s, &x, Axis::Position, ctx.seed, samples, tol)?,
                    concentration(&s, &p, Axis::Momentum, ctx.seed.wrapping_add(1), samples, tol)?,
                )
            };
            measured = json!({
                "state": if ctx.pf.has("Sigma") { "Sigma" } else { "standard Gaussian" },
                "eps_x": { "value": num(cx.eps), "std_error": num(cx.std_error), "method": cx.method.name() },
                "eps_p": { "value": num(cp.eps), "std_error": num(cp.std_error), "method": cp.method.name() },
            });
            (cx.eps, cp.eps)
        }
        _ => return Err(CliError::Validation("give both params.eps_x and params.eps_p, or neither".into())),
    };
    let r = donoho_stark_check(eps_x, eps_p, &x, &p, hbar, tol)?;
    let status = match r.holds {
        None => "vacuous",
        Some(true) => "holds",
        Some(false) => "violated",
    };
    Ok(Outcome::ok(
        status,
        json!({
            "X": body_json(&x),
            "P": body_json(&p),
            "eps_x": num(r.eps_x),
            "eps_p": num(r.eps_p),
            "lhs": num(r.ds_lhs),
            "rhs": num(r.ds_rhs),
            "holds": r.holds,
            "vacuous": r.vacuous(),
            "band_if_dual": r.band.as_ref().map(band_json).unwrap_or(Value::Null),
            "band": band_json(&donoho_stark_band(ctx.n())),
            "measured": measured,
        }),
        json!({}),
    ))
}

fn selftest(seed: u64) -> Result<Outcome, CliError> {
    let results = acceptance::run_all(seed);
    let mut rows = Vec::new();
    for r in &results {
        eprintln!("{r}");
        rows.push(json!({
            "id": r.id,
            "title": r.title,
            "status": r.status.label(),
            "detail": r.detail,
            "divergence": r.divergence,
        }));
    }
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    let divergent = results.iter().filter(|r| r.status == Status::Divergent).count();
    eprintln!(
        "{} passed, {} failed, {} documented divergence(s)",
        results.len() - failed - divergent,
        failed,
        divergent
    );
    let mut out = Outcome::ok(
        if failed == 0 { "pass" } else { "fail" },
        json!({ "criteria": rows }),
        json!({ "failed": failed, "divergent": divergent }),
    );
    out.flags = acceptance::DOCUMENTED_DIVERGENCES
        .iter()
        .map(|(id, why)| flag(&format!("criterion_{id}"), why, Value::Null))
        .collect();
    if failed > 0 {
        out.exit = 3;
    }
    Ok(out)
}
