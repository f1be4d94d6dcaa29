//! The functional `K_{p,q}(φ; Ω) = ‖K_p‖_{L_κ(Ω)}`, its closed-form bounds for the
//! cusp reflections, admissible exponent ranges and duality exponents.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_volume, graded_grid, GradedGrid, GridSpec, Region};
use crate::maps::{p_dilatation, Mapping};

/// Exponents `1 < p`, `1 ≤ q ≤ p` with `1/q − 1/p = 1/κ` and `α = q/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
    /// `pq/(p − q)`, infinite when `p = q`.
    pub kappa: f64,
    pub alpha: f64,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::input(format!("p must lie in (1,inf), got {p}")));
        }
        if !(q.is_finite() && (1.0..=p).contains(&q)) {
            return Err(Error::input(format!("q must lie in [1, p] = [1, {p}], got {q}")));
        }
        let kappa = if q == p { f64::INFINITY } else { p * q / (p - q) };
        Ok(Self { p, q, kappa, alpha: q / p })
    }

    pub fn is_diagonal(&self) -> bool {
        self.q == self.p
    }

    /// The exponent `α/(1 − α)` applied to `|Dφ|^p/|J|`; equals `κ/p`.
    pub fn correction_exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }
}

/// Stopping rules for grid doubling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPolicy {
    pub max_doublings: usize,
    pub rel_tol: f64,
    pub divergence_ratio: f64,
    pub divergence_run: usize,
    /// The angular count doubles only while the refined grid stays under this many nodes.
    pub node_budget: usize,
}

impl Default for RefinementPolicy {
    fn default() -> Self {
        Self { max_doublings: 5, rel_tol: 0.01, divergence_ratio: 1.1, divergence_run: 3, node_budget: 1 << 22 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    Diverged,
    Inconclusive,
}

/// A `K_{p,q}` estimate with its refinement history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub exps: ExponentPair,
    pub estimate: f64,
    pub refinement_series: Vec<(usize, f64)>,
    pub converged: bool,
    pub verdict: Verdict,
    pub closed_form_bound: Option<f64>,
}

impl DistortionReport {
    pub fn with_bound(mut self, bound: f64) -> Self {
        self.closed_form_bound = Some(bound);
        self
    }

    /// Ratios of successive estimates.
    pub fn ratios(&self) -> Vec<f64> {
        self.refinement_series.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }

    /// `estimate ≤ bound·(1 + slack)`; `None` without a bound or without convergence.
    pub fn dominated(&self, slack: f64) -> Option<bool> {
        match (self.converged, self.closed_form_bound) {
            (true, Some(b)) => Some(self.estimate <= b * (1.0 + slack)),
            _ => None,
        }
    }

    /// Refinement series as `N,estimate` lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,estimate\n");
        for (n, v) in &self.refinement_series {
            out.push_str(&format!("{n},{v}\n"));
        }
        out
    }
}

/// `K_{p,q}` on one fixed grid: the weighted `L_κ` norm of `K_p`, or its maximum when `p = q`.
pub fn kpq_on_grid(map: &dyn Mapping, grid: &GradedGrid, exps: &ExponentPair) -> Result<f64> {
    if map.dimension() != grid.region.dimension() {
        return Err(Error::input(format!(
            "map dimension {} does not match region dimension {}",
            map.dimension(),
            grid.region.dimension()
        )));
    }
    let k_p = |point: &[f64]| -> Result<f64> { Ok(p_dilatation(&map.jet_at(point)?, exps.p)) };
    if exps.is_diagonal() {
        grid.maximum(|node| k_p(&node.point))
    } else {
        let kappa = exps.kappa;
        let sum = grid.integrate(|node| Ok(k_p(&node.point)?.powf(kappa)))?;
        Ok(sum.powf(1.0 / kappa))
    }
}

fn refine(region: &Region, spec: GridSpec, budget: usize) -> GridSpec {
    let doubled = GridSpec { n: 2 * spec.n, beta: spec.beta, n_angular: Some(2 * spec.angular()) };
    let fits = graded_grid(*region, doubled).map(|g| g.node_count() <= budget).unwrap_or(false);
    if fits {
        doubled
    } else {
        GridSpec { n: 2 * spec.n, beta: spec.beta, n_angular: Some(spec.angular()) }
    }
}

/// `K_{p,q}(φ; region)` with grid doubling from `grid` under the default policy.
pub fn kpq_numeric(
    map: &dyn Mapping,
    region: &Region,
    exps: &ExponentPair,
    grid: GridSpec,
) -> Result<DistortionReport> {
    kpq_numeric_with(map, region, exps, grid, &RefinementPolicy::default())
}

pub fn kpq_numeric_with(
    map: &dyn Mapping,
    region: &Region,
    exps: &ExponentPair,
    grid: GridSpec,
    policy: &RefinementPolicy,
) -> Result<DistortionReport> {
    let mut spec = grid;
    let mut series: Vec<(usize, f64)> = Vec::new();
    let mut verdict = Verdict::Inconclusive;
    let mut growth_run = 0usize;
    for level in 0..=policy.max_doublings {
        let g = graded_grid(*region, spec)?;
        let est = kpq_on_grid(map, &g, exps)?;
        if let Some(&(_, prev)) = series.last() {
            let ratio = est / prev;
            if est.is_finite() && prev.is_finite() && ((est - prev) / prev).abs() < policy.rel_tol {
                series.push((spec.n, est));
                verdict = Verdict::Converged;
                break;
            }
            growth_run = if ratio >= policy.divergence_ratio || (est.is_infinite() && prev.is_finite()) {
                growth_run + 1
            } else {
                0
            };
        }
        series.push((spec.n, est));
        if growth_run >= policy.divergence_run || (est.is_infinite() && level > 0) {
            verdict = Verdict::Diverged;
            break;
        }
        spec = refine(region, spec, policy.node_budget);
    }
    let estimate = series.last().map(|s| s.1).unwrap_or(f64::NAN);
    Ok(DistortionReport {
        exps: *exps,
        estimate,
        refinement_series: series,
        converged: verdict == Verdict::Converged,
        verdict,
        closed_form_bound: None,
    })
}

/// Admissible interval `[1/p, n/(γ + n))` for `α = q/p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    pub lo: f64,
    pub hi: f64,
}

impl AlphaRange {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lo && alpha < self.hi
    }
}

fn check_gamma_n(gamma: f64, n: usize) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    if n < 2 {
        return Err(Error::input(format!("dimension must be >= 2, got {n}")));
    }
    Ok(())
}

pub fn alpha_range(gamma: f64, n: usize, p: f64) -> Result<AlphaRange> {
    check_gamma_n(gamma, n)?;
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::input(format!("p must lie in (1,inf), got {p}")));
    }
    let nf = n as f64;
    Ok(AlphaRange { lo: 1.0 / p, hi: nf / (gamma + nf) })
}

/// `C_γ = π(1 + (γ+1)²π⁴/(π−1)⁴ + 1/(π−1)²)^{p/2}`.
pub fn cgamma(gamma: f64, p: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::input(format!("gamma must be positive, got {gamma}")));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("p must be >= 1, got {p}")));
    }
    Ok(PI * reflection_norm_bound(gamma).powf(p))
}

/// Uniform bound `(1 + (γ+1)²π⁴/(π−1)⁴ + 1/(π−1)²)^{1/2}` on `|Dφ|` for the cusp reflection.
pub fn reflection_norm_bound(gamma: f64) -> f64 {
    let pm1 = PI - 1.0;
    (1.0 + (gamma + 1.0).powi(2) * PI.powi(4) / pm1.powi(4) + 1.0 / (pm1 * pm1)).sqrt()
}

/// `C_γ^α ((1−α)/(n(1−α) − αγ))^{1−α}`, the term shared by the `K^q` and `‖E‖` bounds.
fn cusp_term(gamma: f64, exps: &ExponentPair, n: usize) -> Result<f64> {
    let range = alpha_range(gamma, n, exps.p)?;
    let a = exps.alpha;
    if !range.contains(a) {
        return Err(Error::Divergence(format!(
            "alpha = {a} outside the admissible range [{}, {}) for gamma = {gamma}, n = {n}",
            range.lo, range.hi
        )));
    }
    let c = cgamma(gamma, exps.p)?;
    let integral = (1.0 - a) / (n as f64 * (1.0 - a) - a * gamma);
    Ok(c.powf(a) * integral.powf(1.0 - a))
}

/// `(2π)^{1−α} C_γ^α ((1−α)/(n(1−α) − αγ))^{1−α}`, the closed-form bound on `K_{p,q}^q`.
pub fn kpq_pow_q_bound_closed_form(gamma: f64, exps: &ExponentPair, n: usize) -> Result<f64> {
    let term = cusp_term(gamma, exps, n)?;
    Ok((2.0 * PI).powf(1.0 - exps.alpha) * term)
}

/// Closed-form bound on `K_{p,q}` itself (the `q`-th root of [`kpq_pow_q_bound_closed_form`]).
pub fn kpq_bound_closed_form(gamma: f64, exps: &ExponentPair, n: usize) -> Result<f64> {
    Ok(kpq_pow_q_bound_closed_form(gamma, exps, n)?.powf(1.0 / exps.q))
}

/// `‖E‖ ≤ (|Ω̃|^{(p−q)/p} + K^q)^{1/q}` for `q < p` and `(1 + K^p)^{1/p}` for `q = p`.
pub fn extension_norm_bound(measure_tilde: f64, kpq: f64, exps: &ExponentPair) -> Result<f64> {
    if !(kpq >= 0.0) {
        return Err(Error::input(format!("K_(p,q) must be nonnegative, got {kpq}")));
    }
    if exps.is_diagonal() {
        return Ok((1.0 + kpq.powf(exps.p)).powf(1.0 / exps.p));
    }
    if !(measure_tilde > 0.0 && measure_tilde.is_finite()) {
        return Err(Error::input(format!("measure must be positive, got {measure_tilde}")));
    }
    let p = exps.p;
    let q = exps.q;
    Ok((measure_tilde.powf((p - q) / p) + kpq.powf(q)).powf(1.0 / q))
}

/// The displayed cusp bound `(|𝔹ⁿ|^{1−α} + C_γ^α((1−α)/(n(1−α) − αγ))^{1−α})^{1/q}`,
/// which uses the ball measure and drops the `(2π)^{1−α}` factor.
pub fn displayed_extension_norm_bound(gamma: f64, exps: &ExponentPair, n: usize) -> Result<f64> {
    let term = cusp_term(gamma, exps, n)?;
    Ok((ball_volume(n).powf(1.0 - exps.alpha) + term).powf(1.0 / exps.q))
}

/// `‖E‖` bound from the closed-form `K^q` bound and the cusp measure.
pub fn cusp_extension_norm_bound(
    gamma: f64,
    exps: &ExponentPair,
    n: usize,
    measure_tilde: f64,
) -> Result<f64> {
    extension_norm_bound(measure_tilde, kpq_bound_closed_form(gamma, exps, n)?, exps)
}

/// `p' = p/(p − n + 1)`, `q' = q/(q − n + 1)` for `n − 1 < q ≤ p`.
pub fn duality_exponents(p: f64, q: f64, n: usize) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::input(format!("dimension must be >= 2, got {n}")));
    }
    let m = n as f64 - 1.0;
    if !(q.is_finite() && p.is_finite() && q > m && q <= p) {
        return Err(Error::input(format!("duality needs n-1 < q <= p < inf, got p = {p}, q = {q}, n = {n}")));
    }
    Ok((p / (p - m), q / (q - m)))
}

/// The planar dual exponent `p/(p − 1)`.
pub fn dual_exponent_2d(p: f64) -> Result<f64> {
    Ok(duality_exponents(p, p, 2)?.0)
}

/// Forward and inverse `K` series of a duality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub p: f64,
    pub q: f64,
    pub p_dual: f64,
    pub q_dual: f64,
    pub forward: DistortionReport,
    pub inverse: Option<DistortionReport>,
    pub both_converged: bool,
    /// Why the inverse check was skipped, if it was.
    pub skipped: Option<String>,
}

/// Compute `K_{p,q}(φ)` on `forward_region` and, if that converges, `K_{q',p'}(φ⁻¹)` on
/// `inverse_region`. Planar maps only.
#[allow(clippy::too_many_arguments)]
pub fn duality_check(
    forward: &dyn Mapping,
    inverse: &dyn Mapping,
    forward_region: &Region,
    inverse_region: &Region,
    p: f64,
    q: f64,
    n: usize,
    grid: GridSpec,
) -> Result<DualityReport> {
    if n != 2 {
        return Err(Error::input(format!("duality check is planar only, got n = {n}")));
    }
    let exps = ExponentPair::new(p, q)?;
    let (p_dual, q_dual) = duality_exponents(p, q, n)?;
    let inverse_exps = ExponentPair::new(q_dual, p_dual)?;
    let fwd = kpq_numeric(forward, forward_region, &exps, grid)?;
    let (inv, skipped) = if fwd.converged {
        (Some(kpq_numeric(inverse, inverse_region, &inverse_exps, grid)?), None)
    } else {
        (None, Some(format!("forward series {:?}", fwd.verdict)))
    };
    let both_converged = fwd.converged && inv.as_ref().is_some_and(|r| r.converged);
    Ok(DualityReport { p, q, p_dual, q_dual, forward: fwd, inverse: inv, both_converged, skipped })
}

/// [`duality_check`] for the planar cusp reflection, gated on the admissible α range.
pub fn cusp_duality_check(gamma: f64, p: f64, q: f64, grid: GridSpec) -> Result<DualityReport> {
    use crate::geometry::DomainSpec;
    use crate::maps::{CuspReflection, InverseReflection};

    let exps = ExponentPair::new(p, q)?;
    let domain = DomainSpec::cusp2d_with_gamma(gamma)?;
    let refl = CuspReflection::planar(gamma)?;
    let inverse = InverseReflection(refl);
    let complement = Region::complement(domain)?;
    let cusp = Region::domain(domain);
    let (p_dual, q_dual) = duality_exponents(p, q, 2)?;
    let range = alpha_range(gamma, 2, p)?;
    if !range.contains(exps.alpha) {
        let mut fwd = kpq_numeric(&refl, &complement, &exps, grid)?;
        if fwd.converged {
            fwd.converged = false;
            fwd.verdict = Verdict::Inconclusive;
        }
        return Ok(DualityReport {
            p,
            q,
            p_dual,
            q_dual,
            forward: fwd,
            inverse: None,
            both_converged: false,
            skipped: Some(format!("alpha = {} outside [{}, {})", exps.alpha, range.lo, range.hi)),
        });
    }
    duality_check(&refl, &inverse, &complement, &cusp, p, q, 2, grid)
}
