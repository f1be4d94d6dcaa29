//! Parametric domains, membership, measures and radially graded quadrature grids.
//!
//! Cusp-type domains are described in polar/spherical coordinates measured from the
//! positive `x_1` axis. A point belongs to the cusp when its polar angle `θ_1` satisfies
//! `θ_1 < r^γ` with `0 < r < 1`; in the plane this is `|θ| < r^γ`, the union of the
//! upper cusp, the unit interval on the axis and its mirror image.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, ordered_parallel_max, ordered_parallel_sum, sin_power_integral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainKind {
    Disc2D,
    BallND,
    Cusp2D,
    PickND,
    RidgeND,
    Square2D,
}

/// A parametric domain: kind, ambient dimension and, for cusp kinds, the Hölder data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub n: usize,
    pub gamma_tilde: Option<f64>,
    pub gamma: Option<f64>,
}

/// `γ = (1 − γ̃)/γ̃`.
pub fn gamma_from_tilde(gamma_tilde: f64) -> f64 {
    (1.0 - gamma_tilde) / gamma_tilde
}

/// Inverse of [`gamma_from_tilde`].
pub fn tilde_from_gamma(gamma: f64) -> f64 {
    1.0 / (1.0 + gamma)
}

fn check_gamma_tilde(gamma_tilde: f64) -> Result<()> {
    if gamma_tilde.is_finite() && gamma_tilde > 0.0 && gamma_tilde < 1.0 {
        Ok(())
    } else {
        Err(Error::input(format!("gamma_tilde must lie in (0,1), got {gamma_tilde}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("gamma must lie in (0,inf), got {gamma}")))
    }
}

impl DomainSpec {
    pub fn disc() -> Self {
        Self { kind: DomainKind::Disc2D, n: 2, gamma_tilde: None, gamma: None }
    }

    pub fn square() -> Self {
        Self { kind: DomainKind::Square2D, n: 2, gamma_tilde: None, gamma: None }
    }

    pub fn ball(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("ball dimension must be >= 2, got {n}")));
        }
        Ok(Self { kind: DomainKind::BallND, n, gamma_tilde: None, gamma: None })
    }

    pub fn cusp2d(gamma_tilde: f64) -> Result<Self> {
        check_gamma_tilde(gamma_tilde)?;
        Ok(Self {
            kind: DomainKind::Cusp2D,
            n: 2,
            gamma_tilde: Some(gamma_tilde),
            gamma: Some(gamma_from_tilde(gamma_tilde)),
        })
    }

    pub fn cusp2d_with_gamma(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            kind: DomainKind::Cusp2D,
            n: 2,
            gamma_tilde: Some(tilde_from_gamma(gamma)),
            gamma: Some(gamma),
        })
    }

    pub fn pick(n: usize, gamma_tilde: f64) -> Result<Self> {
        check_gamma_tilde(gamma_tilde)?;
        if n < 2 {
            return Err(Error::input(format!("pick dimension must be >= 2, got {n}")));
        }
        Ok(Self {
            kind: DomainKind::PickND,
            n,
            gamma_tilde: Some(gamma_tilde),
            gamma: Some(gamma_from_tilde(gamma_tilde)),
        })
    }

    pub fn ridge(n: usize, gamma_tilde: f64) -> Result<Self> {
        check_gamma_tilde(gamma_tilde)?;
        if n < 3 {
            return Err(Error::input(format!("ridge dimension must be >= 3, got {n}")));
        }
        Ok(Self {
            kind: DomainKind::RidgeND,
            n,
            gamma_tilde: Some(gamma_tilde),
            gamma: Some(gamma_from_tilde(gamma_tilde)),
        })
    }

    /// Replace the cusp data by an explicit `γ`.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !self.is_cusp() {
            return Err(Error::input("gamma only applies to cusp, pick and ridge domains"));
        }
        self.gamma = Some(gamma);
        self.gamma_tilde = Some(tilde_from_gamma(gamma));
        Ok(self)
    }

    pub fn is_cusp(&self) -> bool {
        matches!(self.kind, DomainKind::Cusp2D | DomainKind::PickND | DomainKind::RidgeND)
    }

    /// The cusp exponent `γ`; an input error for non-cusp kinds.
    pub fn cusp_gamma(&self) -> Result<f64> {
        self.gamma
            .ok_or_else(|| Error::input(format!("{:?} has no cusp exponent", self.kind)))
    }

    /// Dimension of the spherical part carrying the cusp (`n − 1` for ridges).
    pub fn cusp_dimension(&self) -> usize {
        match self.kind {
            DomainKind::RidgeND => self.n - 1,
            _ => self.n,
        }
    }

    /// Checks the structural invariants; constructors already enforce them.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::Disc2D | DomainKind::Cusp2D | DomainKind::Square2D if self.n != 2 => {
                return Err(Error::input(format!("{:?} requires n = 2", self.kind)));
            }
            DomainKind::RidgeND if self.n < 3 => {
                return Err(Error::input("ridge requires n >= 3"));
            }
            _ if self.n < 2 => return Err(Error::input("dimension must be >= 2")),
            _ => {}
        }
        if self.is_cusp() {
            let (gt, g) = match (self.gamma_tilde, self.gamma) {
                (Some(gt), Some(g)) => (gt, g),
                _ => return Err(Error::input("cusp domains need gamma_tilde or gamma")),
            };
            check_gamma_tilde(gt)?;
            check_gamma(g)?;
            if (g - gamma_from_tilde(gt)).abs() > 1e-12 * (1.0 + g) {
                return Err(Error::input("gamma and gamma_tilde are inconsistent"));
            }
        }
        Ok(())
    }

    /// Whether `point` lies in the open domain.
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.n {
            return Err(Error::input(format!(
                "point has dimension {}, domain has dimension {}",
                point.len(),
                self.n
            )));
        }
        Ok(match self.kind {
            DomainKind::Disc2D | DomainKind::BallND => norm(point) < 1.0,
            DomainKind::Square2D => point.iter().all(|&c| c > 0.0 && c < 1.0),
            DomainKind::Cusp2D | DomainKind::PickND => in_pick(point, self.gamma.unwrap_or(f64::NAN)),
            DomainKind::RidgeND => {
                let z = point[self.n - 1];
                z > 0.0 && z < 1.0 && in_pick(&point[..self.n - 1], self.gamma.unwrap_or(f64::NAN))
            }
        })
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match self.kind {
            DomainKind::Disc2D => PI,
            DomainKind::Square2D => 1.0,
            DomainKind::BallND => ball_volume(self.n),
            DomainKind::Cusp2D => 2.0 / (self.gamma.unwrap_or(f64::NAN) + 2.0),
            DomainKind::PickND => pick_measure(self.n, self.gamma.unwrap_or(f64::NAN)),
            DomainKind::RidgeND => pick_measure(self.n - 1, self.gamma.unwrap_or(f64::NAN)),
        }
    }

    /// The superdomain used by the reflection construction: disc, ball or
    /// `B_{n−1} × (0,1)`; `None` for domains without a reflection.
    pub fn superdomain_measure(&self) -> Option<f64> {
        match self.kind {
            DomainKind::Cusp2D => Some(PI),
            DomainKind::PickND => Some(ball_volume(self.n)),
            DomainKind::RidgeND => Some(ball_volume(self.n - 1)),
            _ => None,
        }
    }

    /// Euclidean diameter, used by the convex-domain eigenvalue bound.
    pub fn diameter(&self) -> f64 {
        match self.kind {
            DomainKind::Disc2D | DomainKind::BallND => 2.0,
            DomainKind::Square2D => 2f64.sqrt(),
            // Rim points (1, ±1) in polar coordinates are the farthest pair.
            DomainKind::Cusp2D | DomainKind::PickND => 2.0 * 1f64.sin(),
            DomainKind::RidgeND => (4.0 * 1f64.sin().powi(2) + 1.0).sqrt(),
        }
    }
}

/// `‖x‖₂`.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Radius and polar angle from the positive `x_1` axis: `(r, θ_1)`, `θ_1 ∈ [0, π]`.
pub fn axis_polar(x: &[f64]) -> (f64, f64) {
    let r = norm(x);
    let perp = norm(&x[1..]);
    (r, perp.atan2(x[0]))
}

fn in_pick(x: &[f64], gamma: f64) -> bool {
    let (r, theta) = axis_polar(x);
    r > 0.0 && r < 1.0 && theta < r.powf(gamma)
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Surface area of the unit sphere `S^m ⊂ R^{m+1}`.
pub fn sphere_area(m: usize) -> f64 {
    (m as f64 + 1.0) * ball_volume(m + 1)
}

/// Measure of the rotationally symmetric pick `{θ_1 < r^γ, r < 1}` in `R^n`.
fn pick_measure(n: usize, gamma: f64) -> f64 {
    if n == 2 {
        return 2.0 / (gamma + 2.0);
    }
    let cap = sphere_area(n - 2);
    let f = |r: f64| r.powi(n as i32 - 1) * sin_power_integral(n - 2, r.powf(gamma).min(PI));
    cap * adaptive_simpson(&f, 0.0, 1.0, 1e-13)
}

/// Which part of a cusp configuration a grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    /// The domain itself.
    Domain,
    /// The superdomain minus the closure of the domain (cusp kinds only).
    Complement,
}

/// A domain together with the part of it being discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub domain: DomainSpec,
    pub part: Part,
}

impl Region {
    pub fn domain(domain: DomainSpec) -> Self {
        Self { domain, part: Part::Domain }
    }

    pub fn complement(domain: DomainSpec) -> Result<Self> {
        if domain.superdomain_measure().is_none() {
            return Err(Error::input(format!(
                "{:?} has no superdomain; complement region unsupported",
                domain.kind
            )));
        }
        Ok(Self { domain, part: Part::Complement })
    }

    pub fn dimension(&self) -> usize {
        self.domain.n
    }

    pub fn measure(&self) -> f64 {
        match self.part {
            Part::Domain => self.domain.measure(),
            Part::Complement => {
                self.domain.superdomain_measure().unwrap_or(f64::NAN) - self.domain.measure()
            }
        }
    }

    /// Membership in the region (open set).
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        let inside = self.domain.contains(point)?;
        Ok(match self.part {
            Part::Domain => inside,
            Part::Complement => {
                let n = self.domain.n;
                let in_super = match self.domain.kind {
                    DomainKind::RidgeND => {
                        let z = point[n - 1];
                        z > 0.0 && z < 1.0 && norm(&point[..n - 1]) < 1.0
                    }
                    _ => norm(point) < 1.0,
                };
                if !in_super || inside {
                    false
                } else {
                    // Exclude the shared boundary θ_1 = r^γ.
                    let lead = match self.domain.kind {
                        DomainKind::RidgeND => &point[..n - 1],
                        _ => point,
                    };
                    let (r, theta) = axis_polar(lead);
                    theta > r.powf(self.domain.gamma.unwrap_or(f64::NAN))
                }
            }
        })
    }
}

/// Grid resolution: radial count `n`, angular count per axis, and radial grading exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub beta: f64,
    pub n_angular: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 128, beta: 2.0, n_angular: None }
    }
}

impl GridSpec {
    pub fn new(n: usize, beta: f64) -> Self {
        Self { n, beta, n_angular: None }
    }

    pub fn with_angular(mut self, n_angular: usize) -> Self {
        self.n_angular = Some(n_angular);
        self
    }

    pub fn angular(&self) -> usize {
        self.n_angular.unwrap_or(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::input(format!("grid N must be >= 8, got {}", self.n)));
        }
        if !(self.beta.is_finite() && self.beta >= 1.0) {
            return Err(Error::input(format!("grid beta must be >= 1, got {}", self.beta)));
        }
        if self.angular() < 2 {
            return Err(Error::input("angular node count must be >= 2"));
        }
        Ok(())
    }
}

/// One quadrature node: native coordinates, Cartesian position and cell weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub native: Vec<f64>,
    pub point: Vec<f64>,
    pub weight: f64,
}

/// Midpoint tensor grid in polar/spherical coordinates with radial grading
/// `r_k = ((k − ½)/N)^β`.
///
/// Nodes are generated ring by ring on demand; the whole node list can be
/// materialized with [`GradedGrid::nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradedGrid {
    pub region: Region,
    pub n: usize,
    pub n_angular: usize,
    pub grading_beta: f64,
}

/// Build the graded grid covering `region`.
pub fn graded_grid(region: Region, spec: GridSpec) -> Result<GradedGrid> {
    spec.validate()?;
    region.domain.validate()?;
    if region.domain.kind == DomainKind::Square2D && region.part != Part::Domain {
        return Err(Error::input("square has no complement region"));
    }
    Ok(GradedGrid { region, n: spec.n, n_angular: spec.angular(), grading_beta: spec.beta })
}

impl GradedGrid {
    /// Number of rings (radial shells, or rows for the square).
    pub fn ring_count(&self) -> usize {
        self.n
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        let m = self.n_angular;
        let per_ring = match self.region.domain.kind {
            DomainKind::Square2D => m,
            DomainKind::Disc2D | DomainKind::Cusp2D => {
                if self.region.part == Part::Complement { 2 * m } else { m }
            }
            DomainKind::BallND | DomainKind::PickND => {
                if self.region.domain.n == 2 && self.region.part == Part::Complement {
                    2 * m
                } else {
                    m.pow(self.region.domain.n as u32 - 1)
                }
            }
            DomainKind::RidgeND => {
                let k = self.region.domain.n - 1;
                let lead = if k == 2 && self.region.part == Part::Complement {
                    2 * m
                } else {
                    m.pow(k as u32 - 1)
                };
                lead * m
            }
        };
        per_ring * self.n
    }

    /// Radial edges `(e_{k−1}, e_k)` and the node radius of ring `k` (0-based).
    fn radial(&self, k: usize) -> (f64, f64, f64) {
        let nf = self.n as f64;
        let b = self.grading_beta;
        let lo = (k as f64 / nf).powf(b);
        let hi = ((k + 1) as f64 / nf).powf(b);
        let mid = ((k as f64 + 0.5) / nf).powf(b);
        (lo, hi, mid)
    }

    /// Nodes of ring `k`, in canonical order.
    pub fn ring(&self, k: usize) -> Vec<GridNode> {
        let domain = self.region.domain;
        match domain.kind {
            DomainKind::Square2D => {
                let m = self.n_angular;
                let h = 1.0 / self.n as f64;
                let hx = 1.0 / m as f64;
                let y = (k as f64 + 0.5) * h;
                (0..m)
                    .map(|j| {
                        let x = (j as f64 + 0.5) * hx;
                        GridNode { native: vec![x, y], point: vec![x, y], weight: h * hx }
                    })
                    .collect()
            }
            DomainKind::RidgeND => {
                let lead_dim = domain.n - 1;
                let lead = self.spherical_ring(k, lead_dim);
                let m = self.n_angular;
                let hz = 1.0 / m as f64;
                let mut out = Vec::with_capacity(lead.len() * m);
                for node in &lead {
                    for j in 0..m {
                        let z = (j as f64 + 0.5) * hz;
                        let mut native = node.native.clone();
                        native.push(z);
                        let mut point = node.point.clone();
                        point.push(z);
                        out.push(GridNode { native, point, weight: node.weight * hz });
                    }
                }
                out
            }
            _ => self.spherical_ring(k, domain.n),
        }
    }

    /// Angular intervals for `θ_1` at radius `r` (or `θ` in the plane).
    fn first_angle_intervals(&self, r: f64, dim: usize) -> Vec<(f64, f64)> {
        let cusp = self.region.domain.is_cusp();
        let a = if cusp { r.powf(self.region.domain.gamma.unwrap_or(f64::NAN)).min(PI) } else { PI };
        match (dim, cusp, self.region.part) {
            (2, false, _) => vec![(-PI, PI)],
            (2, true, Part::Domain) => vec![(-a, a)],
            (2, true, Part::Complement) => vec![(a, PI), (-PI, -a)],
            (_, false, _) => vec![(0.0, PI)],
            (_, true, Part::Domain) => vec![(0.0, a)],
            (_, true, Part::Complement) => vec![(a, PI)],
        }
    }

    fn spherical_ring(&self, k: usize, dim: usize) -> Vec<GridNode> {
        let (lo, hi, r) = self.radial(k);
        let d = dim as f64;
        let shell = (hi.powf(d) - lo.powf(d)) / d;
        let m = self.n_angular;

        // Per-axis (node angle, cell weight) lists.
        let mut first = Vec::new();
        for (a, b) in self.first_angle_intervals(r, dim) {
            let h = (b - a) / m as f64;
            for j in 0..m {
                let t0 = a + j as f64 * h;
                let t1 = t0 + h;
                let w = if dim == 2 {
                    h
                } else {
                    sin_power_integral(dim - 2, t1) - sin_power_integral(dim - 2, t0)
                };
                first.push((t0 + 0.5 * h, w));
            }
        }
        let mut axes: Vec<Vec<(f64, f64)>> = vec![first];
        if dim > 2 {
            // Middle angles θ_2..θ_{dim−2} on (0, π), weight sin^{dim−1−i}.
            for i in 2..dim - 1 {
                let power = dim - 1 - i;
                let h = PI / m as f64;
                axes.push(
                    (0..m)
                        .map(|j| {
                            let t0 = j as f64 * h;
                            let w = sin_power_integral(power, t0 + h) - sin_power_integral(power, t0);
                            (t0 + 0.5 * h, w)
                        })
                        .collect(),
                );
            }
            let h = 2.0 * PI / m as f64;
            axes.push((0..m).map(|j| ((j as f64 + 0.5) * h, h)).collect());
        }

        let total: usize = axes.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let angles: Vec<f64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i].0).collect();
            let w: f64 = idx.iter().zip(&axes).map(|(&i, ax)| ax[i].1).product();
            let point = spherical_to_cartesian(r, &angles);
            let mut native = Vec::with_capacity(dim);
            native.push(r);
            native.extend_from_slice(&angles);
            out.push(GridNode { native, point, weight: shell * w });
            // Odometer increment, last axis fastest.
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// Materialize every node in canonical order.
    pub fn nodes(&self) -> Vec<GridNode> {
        (0..self.n).flat_map(|k| self.ring(k)).collect()
    }

    /// Quadrature weights in node order.
    pub fn weights(&self) -> Vec<f64> {
        self.nodes().into_iter().map(|n| n.weight).collect()
    }

    /// `Σ f(node)·w` with a reduction order fixed by ring index.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&GridNode) -> Result<f64> + Sync + Send,
    {
        ordered_parallel_sum(self.n, |k| {
            let mut acc = 0.0;
            for (i, node) in self.ring(k).iter().enumerate() {
                let v = f(node).map_err(|e| Error::MapEvaluation { ring: k, node: i, source: Box::new(e) })?;
                acc += v * node.weight;
            }
            Ok(acc)
        })
    }

    /// `max f(node)` over all nodes.
    pub fn maximum<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&GridNode) -> Result<f64> + Sync + Send,
    {
        ordered_parallel_max(self.n, |k| {
            let mut best = f64::NEG_INFINITY;
            for (i, node) in self.ring(k).iter().enumerate() {
                let v = f(node).map_err(|e| Error::MapEvaluation { ring: k, node: i, source: Box::new(e) })?;
                best = best.max(v);
            }
            Ok(best)
        })
    }

    pub fn weight_sum(&self) -> f64 {
        self.integrate(|_| Ok(1.0)).unwrap_or(f64::NAN)
    }

    /// Smallest node radius (the innermost ring).
    pub fn min_radius(&self) -> f64 {
        self.radial(0).2
    }
}

/// Cartesian coordinates of `(r, θ_1, …, θ_{n−1})`; in the plane `(r, θ)`.
pub fn spherical_to_cartesian(r: f64, angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut x = vec![0.0; n];
    let mut s = r;
    for i in 0..n - 2 {
        x[i] = s * angles[i].cos();
        s *= angles[i].sin();
    }
    x[n - 2] = s * angles[n - 2].cos();
    x[n - 1] = s * angles[n - 2].sin();
    x
}
