//! JSON helpers. Non-finite numbers become the strings "inf", "-inf" and "nan".

use cusp_extend::distortion::{AlphaRange, DistortionReport, ExponentPair};
use cusp_extend::eigen::EigenResult;
use cusp_extend::extension::ExtensionCheck;
use cusp_extend::maps::{MapJet, RadialClass};
use serde_json::{json, Value};

pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(num).collect())
}

pub fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn jet(j: &MapJet) -> Value {
    json!({
        "image": nums(&j.image),
        "differential": j.rows().iter().map(|r| nums(r)).collect::<Vec<_>>(),
        "op_norm": num(j.op_norm),
        "jacobian": num(j.jacobian),
    })
}

pub fn exponents(e: &ExponentPair) -> Value {
    json!({ "p": num(e.p), "q": num(e.q), "kappa": num(e.kappa), "alpha": num(e.alpha) })
}

pub fn distortion(r: &DistortionReport) -> Value {
    json!({
        "exps": exponents(&r.exps),
        "estimate": num(r.estimate),
        "refinement_series": r.refinement_series.iter().map(|(n, v)| json!([n, num(*v)])).collect::<Vec<_>>(),
        "converged": r.converged,
        "verdict": format!("{:?}", r.verdict),
        "closed_form_bound": opt(r.closed_form_bound),
    })
}

pub fn alpha_range(r: &AlphaRange) -> Value {
    json!({ "lo": num(r.lo), "hi": num(r.hi), "empty": r.is_empty() })
}

pub fn eigen(r: &EigenResult) -> Value {
    json!({
        "mu": num(r.mu),
        "constraint_residual": num(r.constraint_residual),
        "iterations": r.iterations,
        "seed": r.seed,
        "restart_mus": nums(&r.restart_mus),
        "node_count": r.node_count,
        "history": nums(&r.history),
    })
}

pub fn extension_check(c: &ExtensionCheck) -> Value {
    json!({
        "name": c.name,
        "lhs": num(c.lhs),
        "seminorm_p": num(c.seminorm_p),
        "rhs_factor": num(c.rhs_factor),
        "rhs": num(c.rhs),
        "pass": c.pass,
    })
}

pub fn radial_class(c: &RadialClass) -> Value {
    json!({
        "case": format!("{:?}", c.case),
        "quasiconformal": c.quasiconformal,
        "p_quasiconformal": c.p_quasiconformal,
        "p_range": [num(c.p_range.0), num(c.p_range.1)],
    })
}
