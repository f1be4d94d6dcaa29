use std::path::PathBuf;
use std::sync::Arc;

use cusp_extend::distortion::{
    alpha_range, cgamma, cusp_extension_norm_bound, displayed_extension_norm_bound, kpq_bound_closed_form,
    kpq_numeric_with, kpq_pow_q_bound_closed_form, reflection_norm_bound, ExponentPair, RefinementPolicy,
};
use cusp_extend::eigen::{cusp_eigen_bound, mesh_for, minimize_mu_on_mesh, payne_weinberger, MinimizeOptions};
use cusp_extend::extension::{verify_manifest, ExtensionGrids, FunctionManifest, GradientMode};
use cusp_extend::geometry::{gamma_from_tilde, graded_grid, DomainKind, DomainSpec, GridSpec, Region};
use cusp_extend::maps::{p_dilatation, radial_classify, CuspShape};
use cusp_extend::parse::{parse_domain, parse_grid, parse_map, parse_point, MapSpec};
use cusp_extend::Error;
use serde_json::{json, Value};

use crate::json::{self, num};
use crate::{
    AlphaRangeArgs, Command, Descent, DistortionCommand, EigenBoundArgs, EigenCommand, EigenMinArgs,
    ExtendCommand, ExtendVerifyArgs, Failure, KpqArgs, MapsClassifyArgs, MapsCommand, MapsEvalArgs, Outcome,
    ReproduceArgs, Section,
};

/// Largest quadrature grid accepted for a single evaluation.
const MAX_GRID_NODES: usize = 1 << 20;
/// Largest radial or angular count for the eigenvalue meshes.
const MAX_MESH_COUNT: usize = 1024;
const MAX_DOUBLINGS: usize = 8;
const MAX_RESTARTS: usize = 64;
const MAX_ITERS: usize = 100_000;

pub(crate) fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Maps(MapsCommand::Eval(_)) => "maps-eval",
        Command::Maps(MapsCommand::Classify(_)) => "maps-classify",
        Command::Distortion(DistortionCommand::Kpq(_)) => "distortion-kpq",
        Command::AlphaRange(_) => "alpha-range",
        Command::Extend(ExtendCommand::Verify(_)) => "extend-verify",
        Command::Eigen(EigenCommand::Min(_)) => "eigen-min",
        Command::Eigen(EigenCommand::Bound(_)) => "eigen-bound",
        Command::PaperReproduce(_) => "paper-reproduce",
        Command::Run(_) => "run",
    }
}

pub(crate) fn output_path(cmd: &Command) -> Option<&PathBuf> {
    match cmd {
        Command::Maps(MapsCommand::Eval(a)) => a.output.json.as_ref(),
        Command::Maps(MapsCommand::Classify(a)) => a.output.json.as_ref(),
        Command::Distortion(DistortionCommand::Kpq(a)) => a.output.json.as_ref(),
        Command::AlphaRange(a) => a.output.json.as_ref(),
        Command::Extend(ExtendCommand::Verify(a)) => a.output.json.as_ref(),
        Command::Eigen(EigenCommand::Min(a)) => a.output.json.as_ref(),
        Command::Eigen(EigenCommand::Bound(a)) => a.output.json.as_ref(),
        Command::PaperReproduce(a) => a.output.json.as_ref(),
        Command::Run(_) => None,
    }
}

pub(crate) fn dispatch(cmd: &Command) -> Result<Outcome, Failure> {
    match cmd {
        Command::Maps(MapsCommand::Eval(a)) => maps_eval(a),
        Command::Maps(MapsCommand::Classify(a)) => maps_classify(a),
        Command::Distortion(DistortionCommand::Kpq(a)) => distortion_kpq(a),
        Command::AlphaRange(a) => alpha_range_cmd(a),
        Command::Extend(ExtendCommand::Verify(a)) => extend_verify(a),
        Command::Eigen(EigenCommand::Min(a)) => eigen_min(a),
        Command::Eigen(EigenCommand::Bound(a)) => eigen_bound(a),
        Command::PaperReproduce(a) => paper_reproduce(a),
        Command::Run(_) => Err(Failure::Usage("run cannot be dispatched directly".into())),
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn grid_for(region: Region, text: &str) -> Result<GridSpec, Failure> {
    let spec = parse_grid(text)?;
    let nodes = graded_grid(region, spec)?.node_count();
    if nodes > MAX_GRID_NODES {
        return Err(invalid(format!("grid has {nodes} nodes, limit is {MAX_GRID_NODES}")));
    }
    Ok(spec)
}

fn mesh_grid(text: &str) -> Result<GridSpec, Failure> {
    let spec = parse_grid(text)?;
    if spec.n > MAX_MESH_COUNT || spec.n_angular.is_some_and(|m| m > MAX_MESH_COUNT) {
        return Err(invalid(format!("eigenvalue meshes allow at most {MAX_MESH_COUNT} cells per direction")));
    }
    Ok(spec)
}

fn descent_options(d: &Descent) -> Result<MinimizeOptions, Failure> {
    if d.restarts == 0 || d.restarts > MAX_RESTARTS {
        return Err(invalid(format!("restarts must lie in 1..={MAX_RESTARTS}")));
    }
    if d.max_iters == 0 || d.max_iters > MAX_ITERS {
        return Err(invalid(format!("max-iters must lie in 1..={MAX_ITERS}")));
    }
    if !(d.tol.is_finite() && d.tol > 0.0 && d.tol < 1.0) {
        return Err(invalid(format!("tol must lie in (0,1), got {}", d.tol)));
    }
    Ok(MinimizeOptions { max_iters: d.max_iters, restarts: d.restarts, seed: d.seed, tol: d.tol })
}

fn exponent(name: &str, x: f64) -> Result<f64, Failure> {
    if x.is_finite() && x >= 1.0 {
        Ok(x)
    } else {
        Err(invalid(format!("{name} must be a finite number >= 1, got {x}")))
    }
}

fn domain_json(d: &DomainSpec) -> Value {
    json!({
        "kind": format!("{:?}", d.kind),
        "n": d.n,
        "gamma_tilde": json::opt(d.gamma_tilde),
        "gamma": json::opt(d.gamma),
        "measure": num(d.measure()),
    })
}

fn maps_eval(a: &MapsEvalArgs) -> Result<Outcome, Failure> {
    let map = parse_map(&a.map)?;
    let point = parse_point(&a.point)?;
    if let Some(p) = a.p {
        exponent("p", p)?;
    }
    let jet = map.evaluate(&point).map_err(|e| match e {
        Error::Domain(m) => invalid(format!("point outside domain: {m}")),
        other => other.into(),
    })?;
    let mut out = json::jet(&jet);
    if let Some(p) = a.p {
        out["p_dilatation"] = num(p_dilatation(&jet, p));
    }
    Ok(Outcome::ok(out))
}

fn maps_classify(a: &MapsClassifyArgs) -> Result<Outcome, Failure> {
    let spec = match parse_map(&a.map)? {
        MapSpec::Radial { spec, .. } => spec,
        _ => return Err(invalid("classification applies to radial maps only")),
    };
    let class = radial_classify(&spec, spec.dimension(), a.p)?;
    let mut out = json::radial_class(&class);
    out["alphas"] = json::nums(&spec.alphas);
    out["alpha_sum"] = num(spec.alpha_sum);
    out["p"] = num(a.p);
    Ok(Outcome::ok(out))
}

/// The region a map is integrated over and, for forward reflections, the cusp data.
fn map_region(map: &MapSpec) -> Result<(Region, Option<(f64, usize)>), Failure> {
    Ok(match map {
        MapSpec::Identity { n } => (Region::domain(DomainSpec::ball(*n)?), None),
        MapSpec::Radial { spec, .. } => (Region::domain(DomainSpec::ball(spec.dimension())?), None),
        MapSpec::Reflection { reflection, inverse } => {
            let g = reflection.gamma;
            let n = reflection.n;
            let (domain, n_eff) = match reflection.shape {
                CuspShape::Pick if n == 2 => (DomainSpec::cusp2d_with_gamma(g)?, 2),
                CuspShape::Pick => (DomainSpec::pick(n, 0.5)?.with_gamma(g)?, n),
                CuspShape::Ridge => (DomainSpec::ridge(n, 0.5)?.with_gamma(g)?, n - 1),
            };
            if *inverse {
                (Region::domain(domain), None)
            } else {
                (Region::complement(domain)?, Some((g, n_eff)))
            }
        }
    })
}

fn distortion_kpq(a: &KpqArgs) -> Result<Outcome, Failure> {
    let map = parse_map(&a.map)?;
    let exps = ExponentPair::new(a.p, a.q)?;
    let (region, cusp) = map_region(&map)?;
    let grid = grid_for(region, &a.grid)?;
    if a.max_doublings > MAX_DOUBLINGS {
        return Err(invalid(format!("max-doublings must be <= {MAX_DOUBLINGS}")));
    }
    let policy = RefinementPolicy { max_doublings: a.max_doublings, ..RefinementPolicy::default() };

    let mapping = map.build();
    let mut rep = kpq_numeric_with(mapping.as_ref(), &region, &exps, grid, &policy)?;
    if let Some((gamma, n_eff)) = cusp {
        match kpq_bound_closed_form(gamma, &exps, n_eff) {
            Ok(b) => rep = rep.with_bound(b),
            Err(Error::Divergence(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, rep.to_csv()).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    let mut out = json::distortion(&rep);
    out["dominated"] = rep.dominated(0.02).map(Value::Bool).unwrap_or(Value::Null);
    if a.require_convergence && !rep.converged {
        let why = format!("K_(p,q) refinement did not converge ({:?})", rep.verdict);
        return Ok(Outcome::failing(out, why));
    }
    Ok(Outcome::ok(out))
}

/// `(γ, effective dimension)` of a cusp-type domain; ridges use the cross-section dimension.
fn cusp_data(d: &DomainSpec) -> Result<(f64, usize), Failure> {
    if !d.is_cusp() {
        return Err(invalid("expected a cusp2d, pick or ridge domain"));
    }
    let n_eff = if d.kind == DomainKind::RidgeND { d.n - 1 } else { d.n };
    Ok((d.cusp_gamma()?, n_eff))
}

fn alpha_range_cmd(a: &AlphaRangeArgs) -> Result<Outcome, Failure> {
    let (gamma, n) = match (&a.domain, a.gamma_tilde, a.gamma) {
        (Some(d), None, None) => cusp_data(&parse_domain(d)?)?,
        (None, Some(gt), None) => {
            if !(gt > 0.0 && gt < 1.0) {
                return Err(invalid(format!("gamma_tilde must lie in (0,1), got {gt}")));
            }
            (gamma_from_tilde(gt), a.n)
        }
        (None, None, Some(g)) => (g, a.n),
        _ => return Err(invalid("give exactly one of --domain, --gamma-tilde, --gamma")),
    };
    let range = alpha_range(gamma, n, a.p)?;
    Ok(Outcome::ok(json!({
        "gamma": num(gamma),
        "gamma_tilde": num(1.0 / (1.0 + gamma)),
        "n": n,
        "p": num(a.p),
        "alpha_range": json::alpha_range(&range),
        "q_range": [num(range.lo * a.p), num(range.hi * a.p)],
    })))
}

fn extend_verify(a: &ExtendVerifyArgs) -> Result<Outcome, Failure> {
    let domain = parse_domain(&a.domain)?;
    let exps = ExponentPair::new(a.p, a.q)?;
    if domain.kind != DomainKind::Cusp2D {
        return Err(invalid("extend verify supports cusp2d domains"));
    }
    let manifest = match &a.functions {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            FunctionManifest::from_toml(&text)?
        }
        None => FunctionManifest::standard(),
    };
    manifest.validate(domain.n)?;
    let cusp = grid_for(Region::domain(domain), &a.grid)?;
    let complement = grid_for(Region::complement(domain)?, &a.grid)?;
    let mode = match a.fd_step {
        None => GradientMode::Analytic,
        Some(h) if h.is_finite() && h > 0.0 && h < 0.1 => GradientMode::CentralDifference(h),
        Some(h) => return Err(invalid(format!("fd-step must lie in (0, 0.1), got {h}"))),
    };
    let gamma = domain.cusp_gamma()?;
    // Fails early with a divergence error when α is outside the admissible range.
    let factor = cusp_extension_norm_bound(gamma, &exps, 2, domain.measure())?;
    let checks = verify_manifest(&manifest, &domain, &exps, mode, &ExtensionGrids { cusp, complement })?;
    let passed = checks.iter().filter(|c| c.pass).count();
    let out = json!({
        "domain": domain_json(&domain),
        "exps": json::exponents(&exps),
        "rhs_factor": num(factor),
        "checks": checks.iter().map(json::extension_check).collect::<Vec<_>>(),
        "passed": passed,
        "total": checks.len(),
    });
    if a.require_pass && passed < checks.len() {
        let why = format!("{} of {} extension checks failed", checks.len() - passed, checks.len());
        return Ok(Outcome::failing(out, why));
    }
    Ok(Outcome::ok(out))
}

fn eigen_min(a: &EigenMinArgs) -> Result<Outcome, Failure> {
    let domain = parse_domain(&a.domain)?;
    let p = exponent("p", a.p)?;
    let q = exponent("q", a.q)?;
    let grid = mesh_grid(&a.grid)?;
    let opts = descent_options(&a.descent)?;
    let mesh = Arc::new(mesh_for(&Region::domain(domain), &grid)?);
    let res = minimize_mu_on_mesh(mesh, p, q, &opts)?;
    let convex = matches!(domain.kind, DomainKind::Disc2D | DomainKind::Square2D | DomainKind::BallND);
    let pw = if convex && p == 2.0 && q == 2.0 { Some(payne_weinberger(domain.diameter())?) } else { None };
    Ok(Outcome::ok(json!({
        "domain": domain_json(&domain),
        "p": num(p),
        "q": num(q),
        "eigen": json::eigen(&res),
        "payne_weinberger": json::opt(pw),
    })))
}

fn eigen_bound(a: &EigenBoundArgs) -> Result<Outcome, Failure> {
    let domain = parse_domain(&a.domain)?;
    if !matches!(domain.kind, DomainKind::Cusp2D | DomainKind::PickND) {
        return Err(invalid("eigen bound expects a cusp2d or pick domain"));
    }
    let gamma_tilde = domain.gamma_tilde.ok_or_else(|| invalid("domain has no gamma_tilde"))?;
    let p = exponent("p", a.p)?;
    let r = exponent("r", a.r)?;
    let q = a.alpha * p;
    // Validates α against (1/p, n/(γ+n)) before any eigenvalue is computed.
    cusp_eigen_bound(gamma_tilde, domain.n, p, a.alpha, 1.0)?;
    let grid = mesh_grid(&a.grid)?;
    let opts = descent_options(&a.descent)?;
    let (mu_ball, computed) = match a.mu_ball {
        Some(mu) => (mu, Value::Null),
        None => {
            if domain.n != 2 {
                return Err(invalid("the ball eigenvalue can only be computed for n = 2; pass --mu-ball"));
            }
            let mesh = Arc::new(mesh_for(&Region::domain(DomainSpec::disc()), &grid)?);
            let res = minimize_mu_on_mesh(mesh, q, r, &opts)?;
            (res.mu, json::eigen(&res))
        }
    };
    let bound = cusp_eigen_bound(gamma_tilde, domain.n, p, a.alpha, mu_ball)?;
    Ok(Outcome::ok(json!({
        "bound": num(bound),
        "mu_ball_input": num(mu_ball),
        "mu_ball_solver": computed,
        "parameters": {
            "gamma_tilde": num(gamma_tilde),
            "gamma": num(gamma_from_tilde(gamma_tilde)),
            "n": domain.n,
            "p": num(p),
            "alpha": num(a.alpha),
            "q": num(q),
            "r": num(r),
        },
    })))
}

fn paper_reproduce(a: &ReproduceArgs) -> Result<Outcome, Failure> {
    let gt = a.gamma_tilde;
    if !(gt > 0.0 && gt < 1.0) {
        return Err(invalid(format!("gamma_tilde must lie in (0,1), got {gt}")));
    }
    let gamma = gamma_from_tilde(gt);
    match a.section {
        Section::Cusp2d => reproduce_cusp(a, gamma),
        Section::Picks | Section::Ridges => reproduce_nd(a, gamma),
        Section::Eigen => reproduce_eigen(a, gamma),
    }
}

fn reproduce_cusp(a: &ReproduceArgs, gamma: f64) -> Result<Outcome, Failure> {
    let exps = ExponentPair::new(a.p, a.q)?;
    let domain = DomainSpec::cusp2d_with_gamma(gamma)?;
    let region = Region::complement(domain)?;
    let grid = grid_for(region, &a.grid)?;
    let range = alpha_range(gamma, 2, a.p)?;
    let bound = kpq_bound_closed_form(gamma, &exps, 2)?;
    let norm_bound = cusp_extension_norm_bound(gamma, &exps, 2, domain.measure())?;
    let displayed = displayed_extension_norm_bound(gamma, &exps, 2)?;
    let reflection = cusp_extend::maps::CuspReflection::planar(gamma)?;
    let rep = kpq_numeric_with(&reflection, &region, &exps, grid, &RefinementPolicy::default())?.with_bound(bound);
    let out = json!({
        "section": "2.3-2d",
        "gamma_tilde": num(a.gamma_tilde),
        "gamma": num(gamma),
        "exps": json::exponents(&exps),
        "alpha_range": json::alpha_range(&range),
        "reflection_norm_bound": num(reflection_norm_bound(gamma)),
        "c_gamma": num(cgamma(gamma, a.p)?),
        "kpq_numeric": json::distortion(&rep),
        "kpq_bound_closed_form": num(bound),
        "kpq_dominated": rep.dominated(0.02).map(Value::Bool).unwrap_or(Value::Null),
        "cusp_measure": num(domain.measure()),
        "extension_norm_bound": num(norm_bound),
        "extension_norm_bound_displayed": num(displayed),
    });
    if !rep.converged {
        let why = format!("K_(p,q) refinement did not converge ({:?})", rep.verdict);
        return Ok(Outcome::failing(out, why));
    }
    Ok(Outcome::ok(out))
}

fn reproduce_nd(a: &ReproduceArgs, gamma: f64) -> Result<Outcome, Failure> {
    let exps = ExponentPair::new(a.p, a.q)?;
    let (label, domain) = match a.section {
        Section::Picks => ("2.3-picks", DomainSpec::pick(a.n, 0.5)?.with_gamma(gamma)?),
        _ => ("2.3-ridges", DomainSpec::ridge(a.n, 0.5)?.with_gamma(gamma)?),
    };
    let (_, m) = cusp_data(&domain)?;
    let range = alpha_range(gamma, m, a.p)?;
    let kq = kpq_pow_q_bound_closed_form(gamma, &exps, m)?;
    Ok(Outcome::ok(json!({
        "section": label,
        "n": a.n,
        "cross_section_dimension": m,
        "gamma_tilde": num(a.gamma_tilde),
        "gamma": num(gamma),
        "exps": json::exponents(&exps),
        "alpha_range": json::alpha_range(&range),
        "q_max": num(range.hi * a.p),
        "c_gamma": num(cgamma(gamma, a.p)?),
        "kpq_pow_q_bound_closed_form": num(kq),
        "kpq_bound_closed_form": num(kq.powf(1.0 / exps.q)),
        "cusp_measure": num(domain.measure()),
        "extension_norm_bound": num(cusp_extension_norm_bound(gamma, &exps, m, domain.measure())?),
        "extension_norm_bound_displayed": num(displayed_extension_norm_bound(gamma, &exps, m)?),
    })))
}

fn reproduce_eigen(a: &ReproduceArgs, gamma: f64) -> Result<Outcome, Failure> {
    let p = exponent("p", a.p)?;
    let r = exponent("r", a.r)?;
    let q = a.alpha * p;
    cusp_eigen_bound(a.gamma_tilde, 2, p, a.alpha, 1.0)?;
    let disc_grid = mesh_grid(&a.disc_grid)?;
    let cusp_grid = mesh_grid(&a.cusp_grid)?;
    let opts = descent_options(&a.descent)?;
    let cusp = DomainSpec::cusp2d_with_gamma(gamma)?;
    let disc_mesh = Arc::new(mesh_for(&Region::domain(DomainSpec::disc()), &disc_grid)?);
    let cusp_mesh = Arc::new(mesh_for(&Region::domain(cusp), &cusp_grid)?);

    let ball = minimize_mu_on_mesh(disc_mesh, q, r, &opts)?;
    let bound = cusp_eigen_bound(a.gamma_tilde, 2, p, a.alpha, ball.mu)?;
    let target = minimize_mu_on_mesh(cusp_mesh, p, r, &opts)?;
    let pass = target.mu >= bound;
    let out = json!({
        "section": "4-eigen",
        "gamma_tilde": num(a.gamma_tilde),
        "gamma": num(gamma),
        "p": num(p),
        "q": num(q),
        "r": num(r),
        "alpha": num(a.alpha),
        "mu_ball": json::eigen(&ball),
        "bound": num(bound),
        "mu_cusp": json::eigen(&target),
        "pass": pass,
    });
    if !pass {
        let why = format!("computed eigenvalue {} is below the bound {bound}", target.mu);
        return Ok(Outcome::failing(out, why));
    }
    Ok(Outcome::ok(out))
}
