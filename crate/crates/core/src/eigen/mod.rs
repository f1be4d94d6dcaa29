//! Neumann `(p,q)`-eigenvalues by constrained minimization of the Rayleigh quotient
//! `‖∇u‖_p^p/‖u‖_q^p` over piecewise-linear functions with `∫|u|^{q−2}u = 0`,
//! and the eigenvalue lower bounds built from extension norms.

pub mod banded;
pub mod mesh;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::cgamma;
use crate::error::{Error, Result};
use crate::geometry::{ball_volume, gamma_from_tilde, DomainKind, GridSpec, Part, Region};

use banded::{BandCholesky, BandMatrix};
pub use mesh::{Mesh, MeshKind};

/// Smoothing of `|∇u|^p` for `p < 2`: `(|∇u|² + ε²)^{p/2}`.
pub const ENERGY_EPS: f64 = 1e-8;

const ARMIJO_C: f64 = 1e-4;
const ARMIJO_SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;
const MASS_SHIFT: f64 = 1.0;
const REFACTOR_EVERY: usize = 10;
const STALL_RUN: usize = 5;

/// Nodal values of a piecewise-linear function on a mesh.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::input(format!(
                "{} values for a mesh with {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("grid function has non-finite values"));
        }
        Ok(Self { mesh, values })
    }

    pub fn sample<F: Fn(&[f64; 2]) -> f64>(mesh: Arc<Mesh>, f: F) -> Self {
        let values = mesh.interpolate(f);
        Self { mesh, values }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { mesh: self.mesh.clone(), values: self.values.iter().map(|v| c * v).collect() }
    }

    fn is_constant(&self) -> bool {
        let (lo, hi) = min_max(&self.values);
        let scale = lo.abs().max(hi.abs());
        hi - lo <= 1e-14 * scale || scale == 0.0
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Mesh used for `region` at resolution `grid`: `grid.n` cells per side or rings,
/// `grid.n_angular` nodes per ring (64 on the disc, 16 across the cusp by default).
pub fn mesh_for(region: &Region, grid: &GridSpec) -> Result<Mesh> {
    grid.validate()?;
    region.domain.validate()?;
    if region.part != Part::Domain {
        return Err(Error::input("eigenvalues are computed on domains, not complements"));
    }
    let d = &region.domain;
    match d.kind {
        DomainKind::Square2D => Mesh::square(grid.n),
        DomainKind::Disc2D => Mesh::disc(grid.n, grid.n_angular.unwrap_or(64), grid.beta),
        DomainKind::BallND if d.n == 2 => Mesh::disc(grid.n, grid.n_angular.unwrap_or(64), grid.beta),
        DomainKind::Cusp2D => Mesh::cusp(d.cusp_gamma()?, grid.n, grid.n_angular.unwrap_or(16), grid.beta),
        DomainKind::PickND if d.n == 2 => {
            Mesh::cusp(d.cusp_gamma()?, grid.n, grid.n_angular.unwrap_or(16), grid.beta)
        }
        _ => Err(Error::input(format!("eigenvalue solver supports planar domains only, got n = {}", d.n))),
    }
}

#[inline]
fn energy_density(s: f64, p: f64) -> f64 {
    if p < 2.0 {
        (s + ENERGY_EPS * ENERGY_EPS).powf(0.5 * p)
    } else {
        s.powf(0.5 * p)
    }
}

/// `Σ_T A_T |∇u_T|^p`, smoothed for `p < 2`.
pub fn energy(mesh: &Mesh, u: &[f64], p: f64) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| {
            let g = mesh.triangle_gradient(t, u);
            mesh.areas[t] * energy_density(g[0] * g[0] + g[1] * g[1], p)
        })
        .sum()
}

/// Gradient of [`energy`] with respect to the nodal values (the discrete p-Laplacian).
pub fn energy_gradient(mesh: &Mesh, u: &[f64], p: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = mesh.triangle_gradient(t, u);
        let s = g[0] * g[0] + g[1] * g[1];
        let coef = if p < 2.0 {
            p * (s + ENERGY_EPS * ENERGY_EPS).powf(0.5 * p - 1.0)
        } else if p == 2.0 {
            2.0
        } else {
            p * s.powf(0.5 * p - 1.0)
        };
        let c = coef * mesh.areas[t];
        for (i, &a) in tri.iter().enumerate() {
            let gh = mesh.grads[t][i];
            out[a] += c * (g[0] * gh[0] + g[1] * gh[1]);
        }
    }
    out
}

/// `∫|u|^q`, by the edge-midpoint rule.
pub fn lq_power(mesh: &Mesh, u: &[f64], q: f64) -> f64 {
    mesh.midpoint_integral(u, |t| t.abs().powf(q))
}

fn lq_power_gradient(mesh: &Mesh, u: &[f64], q: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (e, w) in mesh.edges.iter().zip(&mesh.edge_weights) {
        let m = 0.5 * (u[e[0]] + u[e[1]]);
        let d = 0.5 * w * q * m.abs().powf(q - 1.0) * m.signum();
        out[e[0]] += d;
        out[e[1]] += d;
    }
    out
}

#[inline]
fn signed_power(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(e) * t.signum()
    }
}

/// `∫|u|^{q−2}u`.
pub fn constraint_value(mesh: &Mesh, u: &[f64], q: f64) -> f64 {
    mesh.midpoint_integral(u, |t| signed_power(t, q - 1.0))
}

/// Gradient of [`constraint_value`], smoothed where `q < 2`.
fn constraint_normal(mesh: &Mesh, u: &[f64], q: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for (e, w) in mesh.edges.iter().zip(&mesh.edge_weights) {
        let m = 0.5 * (u[e[0]] + u[e[1]]);
        let d = 0.5 * w * (q - 1.0) * (m * m + ENERGY_EPS * ENERGY_EPS).powf(0.5 * (q - 2.0));
        out[e[0]] += d;
        out[e[1]] += d;
    }
    out
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must lie in (1,inf), got {v}")))
    }
}

/// `‖∇u‖_p^p / ‖u‖_q^p`.
pub fn rayleigh(u: &GridFunction, p: f64, q: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0 && q.is_finite() && q >= 1.0) {
        return Err(Error::input(format!("exponents must be >= 1, got p = {p}, q = {q}")));
    }
    if u.is_constant() {
        return Err(Error::Degenerate("Rayleigh quotient of a constant function".into()));
    }
    let mesh = &u.mesh;
    let num: f64 = (0..mesh.triangles.len())
        .map(|t| {
            let g = mesh.triangle_gradient(t, &u.values);
            mesh.areas[t] * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p)
        })
        .sum();
    let lq = lq_power(mesh, &u.values, q);
    Ok(num / lq.powf(p / q))
}

/// `|∫|u|^{q−2}u|`.
pub fn constraint_residual(u: &GridFunction, q: f64) -> f64 {
    constraint_value(&u.mesh, &u.values, q).abs()
}

fn projection_shift(mesh: &Mesh, u: &[f64], q: f64) -> f64 {
    if q == 2.0 {
        let total: f64 = mesh.edge_weights.iter().sum();
        return mesh.midpoint_integral(u, |t| t) / total;
    }
    // F(c) = ∫|u − c|^{q−2}(u − c) is continuous and strictly decreasing, with
    // F(min u) ≥ 0 ≥ F(max u). Illinois regula falsi keeps the bracket.
    let f = |c: f64| mesh.midpoint_integral(u, |t| signed_power(t - c, q - 1.0));
    let (mut lo, mut hi) = min_max(u);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return lo;
    }
    if fhi == 0.0 {
        return hi;
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let mut c = (lo * fhi - hi * flo) / (fhi - flo);
        if !(c > lo && c < hi) {
            c = 0.5 * (lo + hi);
        }
        if c <= lo || c >= hi {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if fc > 0.0 {
            lo = c;
            flo = fc;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = c;
            fhi = fc;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
        if hi - lo <= 4.0 * f64::EPSILON * (lo.abs() + hi.abs()) {
            break;
        }
    }
    if flo.abs() < fhi.abs() { lo } else { hi }
}

/// `u − c` with `c` the unique shift making `∫|u − c|^{q−2}(u − c) = 0`.
pub fn constraint_project(u: &GridFunction, q: f64) -> Result<GridFunction> {
    check_exponent("q", q)?;
    if u.is_constant() {
        return Err(Error::Degenerate("cannot project a constant function".into()));
    }
    let c = projection_shift(&u.mesh, &u.values, q);
    Ok(GridFunction { mesh: u.mesh.clone(), values: u.values.iter().map(|v| v - c).collect() })
}

/// Descent controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Relative decrease below which an iteration counts as stalled.
    pub tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_iters: 500, restarts: 5, seed: 42, tol: 1e-10 }
    }
}

/// Outcome of [`minimize_mu`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub mu: f64,
    #[serde(skip)]
    pub minimizer: Vec<f64>,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
    /// Seed of the winning restart.
    pub seed: u64,
    /// Final value of each restart, in seed order.
    pub restart_mus: Vec<f64>,
    pub node_count: usize,
}

struct Descent {
    values: Vec<f64>,
    history: Vec<f64>,
    iterations: usize,
}

fn objective(mesh: &Mesh, u: &[f64], p: f64, q: f64) -> f64 {
    energy(mesh, u, p) / lq_power(mesh, u, q).powf(p / q)
}

/// Shift onto the constraint and scale to `‖u‖_q = 1`.
fn normalize(mesh: &Mesh, u: &mut [f64], q: f64) -> Result<()> {
    let c = projection_shift(mesh, u, q);
    for v in u.iter_mut() {
        *v -= c;
    }
    let n = lq_power(mesh, u, q);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Degenerate("iterate collapsed to a constant".into()));
    }
    let s = n.powf(-1.0 / q);
    for v in u.iter_mut() {
        *v *= s;
    }
    Ok(())
}

/// `Σ_T ω_T A_T ∇φ_a·∇φ_b + σ M_lumped` with `ω_T = p(|∇u_T|² + δ²)^{(p−2)/2}`.
fn preconditioner(mesh: &Mesh, u: &[f64], p: f64) -> Result<BandCholesky> {
    let n = mesh.node_count();
    let grads: Vec<[f64; 2]> = (0..mesh.triangles.len()).map(|t| mesh.triangle_gradient(t, u)).collect();
    let area: f64 = mesh.areas.iter().sum();
    let mean_sq: f64 = grads.iter().zip(&mesh.areas).map(|(g, a)| a * (g[0] * g[0] + g[1] * g[1])).sum::<f64>() / area;
    let delta2 = (1e-6 * mean_sq).max(ENERGY_EPS * ENERGY_EPS);
    let mut a = BandMatrix::zeros(n, mesh.bandwidth);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = grads[t];
        let s = g[0] * g[0] + g[1] * g[1];
        let w = if p == 2.0 { 2.0 } else { p * (s + delta2).powf(0.5 * (p - 2.0)) };
        let area_t = mesh.areas[t];
        let gh = &mesh.grads[t];
        for i in 0..3 {
            for j in 0..=i {
                let k = w * area_t * (gh[i][0] * gh[j][0] + gh[i][1] * gh[j][1]);
                a.add(tri[i], tri[j], k);
            }
            a.add(tri[i], tri[i], MASS_SHIFT * area_t / 3.0);
        }
    }
    a.cholesky()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned projected gradient descent with Armijo backtracking from `u0`.
fn descend(mesh: &Mesh, p: f64, q: f64, u0: Vec<f64>, opts: &MinimizeOptions) -> Result<Descent> {
    let mut u = u0;
    normalize(mesh, &mut u, q)?;
    let mut r = objective(mesh, &u, p, q);
    let mut history = vec![r];
    let mut step = 1.0;
    let mut stall = 0;
    let mut factor: Option<BandCholesky> = None;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it + 1;
        if factor.is_none() || (p != 2.0 && it % REFACTOR_EVERY == 0) {
            factor = Some(preconditioner(mesh, &u, p)?);
        }
        let chol = factor.as_ref().expect("factor present");
        let e = energy(mesh, &u, p);
        let nq = lq_power(mesh, &u, q);
        let ge = energy_gradient(mesh, &u, p);
        let gn = lq_power_gradient(mesh, &u, q);
        let scale = nq.powf(-p / q);
        let g: Vec<f64> = ge.iter().zip(&gn).map(|(a, b)| scale * (a - (p / q) * (e / nq) * b)).collect();
        let m = constraint_normal(mesh, &u, q);
        let z = chol.solve(&g);
        let y = chol.solve(&m);
        let lambda = dot(&m, &z) / dot(&m, &y);
        let d: Vec<f64> = z.iter().zip(&y).map(|(a, b)| -(a - lambda * b)).collect();
        let slope = dot(&g, &d);
        if !(slope < 0.0) {
            break;
        }
        let trial_at = |t: f64| -> Option<(Vec<f64>, f64)> {
            let mut trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            normalize(mesh, &mut trial, q).ok()?;
            let rt = objective(mesh, &trial, p, q);
            rt.is_finite().then_some((trial, rt))
        };
        // Quadratic model through R(0), R'(0) and R(step), then Armijo backtracking.
        let mut accepted = None;
        let mut t = step;
        if let Some((trial, rt)) = trial_at(step) {
            let curvature = rt - r - slope * step;
            let mut best = (step, trial, rt);
            if curvature > 0.0 {
                let t_star = (-slope * step * step / (2.0 * curvature)).clamp(0.05 * step, 20.0 * step);
                if let Some((trial2, rt2)) = trial_at(t_star) {
                    if rt2 < best.2 {
                        best = (t_star, trial2, rt2);
                    }
                }
            }
            if best.2 <= r + ARMIJO_C * best.0 * slope {
                t = best.0;
                accepted = Some((best.1, best.2));
            } else {
                t = best.0.min(step) * ARMIJO_SHRINK;
            }
        } else {
            t *= ARMIJO_SHRINK;
        }
        if accepted.is_none() {
            for _ in 0..MAX_BACKTRACKS {
                if let Some((trial, rt)) = trial_at(t) {
                    if rt <= r + ARMIJO_C * t * slope {
                        accepted = Some((trial, rt));
                        break;
                    }
                }
                t *= ARMIJO_SHRINK;
            }
        }
        let Some((next, r_next)) = accepted else { break };
        if r_next > r * (1.0 + 1e-12) {
            return Err(Error::StepSize(format!("objective increased from {r} to {r_next} at iteration {it}")));
        }
        let decrease = (r - r_next) / r;
        u = next;
        r = r_next;
        history.push(r);
        step = t.min(1e6);
        stall = if decrease < opts.tol { stall + 1 } else { 0 };
        if stall >= STALL_RUN {
            break;
        }
    }
    Ok(Descent { values: u, history, iterations })
}

/// Random smooth start: a combination of low-degree monomials plus small noise.
fn initial_guess(mesh: &Mesh, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xlo, xhi) = min_max(&mesh.points.iter().map(|p| p[0]).collect::<Vec<_>>());
    let (ylo, yhi) = min_max(&mesh.points.iter().map(|p| p[1]).collect::<Vec<_>>());
    let (cx, cy) = (0.5 * (xlo + xhi), 0.5 * (ylo + yhi));
    let (sx, sy) = (0.5 * (xhi - xlo).max(1e-12), 0.5 * (yhi - ylo).max(1e-12));
    let coeffs: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    mesh.points
        .iter()
        .map(|pt| {
            let x = (pt[0] - cx) / sx;
            let y = (pt[1] - cy) / sy;
            let basis = [x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y];
            let smooth: f64 = basis.iter().zip(&coeffs).map(|(b, c)| b * c).sum();
            smooth + 0.01 * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

/// Minimize the Rayleigh quotient on `mesh` from `opts.restarts` seeded starts.
pub fn minimize_mu_on_mesh(mesh: Arc<Mesh>, p: f64, q: f64, opts: &MinimizeOptions) -> Result<EigenResult> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::input("restarts and max_iters must be positive"));
    }
    let runs: Vec<Result<(u64, Descent, f64)>> = (0..opts.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i);
            let d = descend(&mesh, p, q, initial_guess(&mesh, seed), opts)?;
            let gf = GridFunction { mesh: mesh.clone(), values: d.values.clone() };
            let mu = rayleigh(&gf, p, q)?;
            Ok((seed, d, mu))
        })
        .collect();
    let mut runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let restart_mus: Vec<f64> = runs.iter().map(|r| r.2).collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.2 < runs[best].2 {
            best = i;
        }
    }
    let (seed, d, mu) = runs.swap_remove(best);
    let residual = constraint_value(&mesh, &d.values, q).abs();
    Ok(EigenResult {
        mu,
        minimizer: d.values,
        constraint_residual: residual,
        iterations: d.iterations,
        history: d.history,
        seed,
        restart_mus,
        node_count: mesh.node_count(),
    })
}

/// `μ_{p,q}(region)` by seeded restarts of the projected descent.
pub fn minimize_mu(region: &Region, p: f64, q: f64, grid: &GridSpec, opts: &MinimizeOptions) -> Result<EigenResult> {
    let mesh = Arc::new(mesh_for(region, grid)?);
    minimize_mu_on_mesh(mesh, p, q, opts)
}

/// `(1/‖E‖^p)·μ_{q,r}(Ω)^{p/q}`.
pub fn monotonicity_bound(mu_q_r_superdomain: f64, ext_norm: f64, p: f64, q: f64) -> Result<f64> {
    if !(ext_norm > 0.0 && mu_q_r_superdomain > 0.0) {
        return Err(Error::input("extension norm and eigenvalue must be positive"));
    }
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::input(format!("exponents must be >= 1, got p = {p}, q = {q}")));
    }
    Ok(ext_norm.powf(-p) * mu_q_r_superdomain.powf(p / q))
}

/// `(|𝔹ⁿ|^{1−α} + C_γ^α((1−α)/(n(1−α) − αγ))^{1−α})^{−1/α}·μ_{q,r}(𝔹)^{1/α}`.
pub fn cusp_eigen_bound(gamma_tilde: f64, n: usize, p: f64, alpha: f64, mu_q_r_ball: f64) -> Result<f64> {
    if !(gamma_tilde > 0.0 && gamma_tilde < 1.0) {
        return Err(Error::input(format!("gamma_tilde must lie in (0,1), got {gamma_tilde}")));
    }
    if n < 2 {
        return Err(Error::input(format!("dimension must be >= 2, got {n}")));
    }
    check_exponent("p", p)?;
    if !(mu_q_r_ball > 0.0 && mu_q_r_ball.is_finite()) {
        return Err(Error::input(format!("ball eigenvalue must be positive, got {mu_q_r_ball}")));
    }
    let gamma = gamma_from_tilde(gamma_tilde);
    let nf = n as f64;
    let hi = nf / (gamma + nf);
    if !(alpha > 1.0 / p && alpha < hi) {
        return Err(Error::Divergence(format!("alpha = {alpha} outside ({}, {hi})", 1.0 / p)));
    }
    let integral = (1.0 - alpha) / (nf * (1.0 - alpha) - alpha * gamma);
    let sum = ball_volume(n).powf(1.0 - alpha) + cgamma(gamma, p)?.powf(alpha) * integral.powf(1.0 - alpha);
    Ok(sum.powf(-1.0 / alpha) * mu_q_r_ball.powf(1.0 / alpha))
}

/// `π²/d²`.
pub fn payne_weinberger(diameter: f64) -> Result<f64> {
    if !(diameter > 0.0) {
        return Err(Error::input(format!("diameter must be positive, got {diameter}")));
    }
    Ok(PI * PI / (diameter * diameter))
}
