//! Closed-form reflections and example homeomorphisms with their differentials.
//!
//! Two jet models are provided for the cusp reflection. The *coordinate* model
//! differentiates `φ(r, s) = (r, r^γ(πr − s)/(π − r^γ))` in the arc-length
//! coordinates `(r, s = θr)` and reports those values as Euclidean ones. The
//! *Euclidean* model is the exact Cartesian differential of the same angular
//! reflection; both share the Jacobian `−r^γ/(π − r^γ)` in the plane.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{axis_polar, norm};

/// Radii below this are treated as numerically singular.
pub const MIN_RADIUS: f64 = 1e-12;

/// Relative slack for admissibility checks on the `(r, s)` strip boundaries.
const STRIP_SLACK: f64 = 1e-12;

/// Image point, differential, spectral norm and Jacobian of a map at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MapJet {
    pub image: Vec<f64>,
    pub differential: DMatrix<f64>,
    pub op_norm: f64,
    pub jacobian: f64,
}

impl MapJet {
    pub fn new(image: Vec<f64>, differential: DMatrix<f64>) -> Self {
        let op_norm = spectral_norm(&differential);
        let jacobian = differential.determinant();
        Self { image, differential, op_norm, jacobian }
    }

    /// Jet with a precomputed Jacobian (exact closed forms beat LU here).
    pub fn with_jacobian(image: Vec<f64>, differential: DMatrix<f64>, jacobian: f64) -> Self {
        let op_norm = spectral_norm(&differential);
        Self { image, differential, op_norm, jacobian }
    }

    pub fn identity(x: &[f64]) -> Self {
        let n = x.len();
        Self { image: x.to_vec(), differential: DMatrix::identity(n, n), op_norm: 1.0, jacobian: 1.0 }
    }

    pub fn dimension(&self) -> usize {
        self.image.len()
    }

    /// Differential rows, for reporting.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.differential.nrows())
            .map(|i| self.differential.row(i).iter().copied().collect())
            .collect()
    }

    /// Jet of the inverse map at the image point.
    pub fn inverse(&self, preimage: Vec<f64>) -> Result<Self> {
        let inv = self
            .differential
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular differential".into()))?;
        Ok(Self::with_jacobian(preimage, inv, 1.0 / self.jacobian))
    }
}

impl Serialize for MapJet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("MapJet", 4)?;
        st.serialize_field("image", &self.image)?;
        st.serialize_field("differential", &self.rows())?;
        st.serialize_field("op_norm", &self.op_norm)?;
        st.serialize_field("jacobian", &self.jacobian)?;
        st.end()
    }
}

/// Spectral norm: max |entry| for diagonal matrices, closed form for 2×2, SVD otherwise.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (r, c) = m.shape();
    let diagonal = (0..r).all(|i| (0..c).all(|j| i == j || m[(i, j)] == 0.0));
    if diagonal {
        return (0..r.min(c)).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    }
    if r == 2 && c == 2 {
        let fro2 = m.iter().map(|v| v * v).sum::<f64>();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        return (0.5 * (fro2 + disc)).sqrt();
    }
    m.clone().svd(false, false).singular_values.max()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("gamma must be positive, got {gamma}")))
    }
}

/// The reflection `(r, s) ↦ (r, r^γ(πr − s)/(π − r^γ))` on the upper half strip
/// `r^{γ+1} ≤ s ≤ πr`; negative `s` is handled by conjugation with `H(x, y) = (x, −y)`.
pub fn cusp_reflection_2d(gamma: f64, r: f64, s: f64) -> Result<MapJet> {
    check_gamma(gamma)?;
    if !(r > MIN_RADIUS && r < 1.0) {
        return Err(Error::domain(format!("radius {r} outside (0,1)")));
    }
    let sign = if s < 0.0 { -1.0 } else { 1.0 };
    let s_up = s.abs();
    let rg = r.powf(gamma);
    let lo = rg * r;
    let hi = PI * r;
    if !(s_up >= lo * (1.0 - STRIP_SLACK) && s_up <= hi * (1.0 + STRIP_SLACK)) {
        return Err(Error::domain(format!(
            "s = {s} outside the admissible strip [{lo}, {hi}] at r = {r}"
        )));
    }
    let denom = PI - rg;
    let num = PI * r - s_up;
    let big_s = rg * num / denom;
    let drg = gamma * r.powf(gamma - 1.0);
    let ds_dr = drg * num / denom + rg * (PI * denom + drg * num) / (denom * denom);
    let ds_ds = -rg / denom;
    let differential = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, sign * ds_dr, ds_ds]);
    Ok(MapJet::with_jacobian(vec![r, sign * big_s], differential, ds_ds))
}

/// Inverse of [`cusp_reflection_2d`]: `s = πr − S(π − r^γ)/r^γ` with `r = R`.
pub fn cusp_reflection_inverse_2d(gamma: f64, big_r: f64, big_s: f64) -> Result<(f64, f64)> {
    check_gamma(gamma)?;
    if !(big_r > MIN_RADIUS && big_r < 1.0) {
        return Err(Error::domain(format!("radius {big_r} outside (0,1)")));
    }
    let sign = if big_s < 0.0 { -1.0 } else { 1.0 };
    let s_up = big_s.abs();
    let rg = big_r.powf(gamma);
    let top = rg * big_r;
    if s_up > top * (1.0 + STRIP_SLACK) {
        return Err(Error::domain(format!("S = {big_s} outside the cusp (|S| <= {top})")));
    }
    let s = PI * big_r - s_up * (PI - rg) / rg;
    Ok((big_r, sign * s))
}

/// Pick reflection in `R^n` on `(r, s, θ_2, …, θ_{n−1})`: the planar `(r, s)` block
/// and the identity on the remaining angles.
pub fn pick_reflection_nd(gamma: f64, n: usize, point: &[f64]) -> Result<MapJet> {
    if n < 2 || point.len() != n {
        return Err(Error::input(format!("pick point must have {n} >= 2 coordinates")));
    }
    let planar = cusp_reflection_2d(gamma, point[0], point[1])?;
    let mut d = DMatrix::identity(n, n);
    d.view_mut((0, 0), (2, 2)).copy_from(&planar.differential);
    let mut image = planar.image.clone();
    image.extend_from_slice(&point[2..]);
    Ok(MapJet::with_jacobian(image, d, planar.jacobian))
}

/// Ridge reflection: the `(n−1)`-dimensional pick reflection times the identity
/// in the last coordinate, which must lie in `(0, 1)`.
pub fn ridge_reflection_nd(gamma: f64, n: usize, point: &[f64]) -> Result<MapJet> {
    if n < 3 || point.len() != n {
        return Err(Error::input(format!("ridge point must have {n} >= 3 coordinates")));
    }
    let z = point[n - 1];
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::domain(format!("ridge coordinate {z} outside (0,1)")));
    }
    let lead = pick_reflection_nd(gamma, n - 1, &point[..n - 1])?;
    let mut d = DMatrix::identity(n, n);
    d.view_mut((0, 0), (n - 1, n - 1)).copy_from(&lead.differential);
    let mut image = lead.image.clone();
    image.push(z);
    Ok(MapJet::with_jacobian(image, d, lead.jacobian))
}

/// Exponents of the radial map `x ↦ (x_1|x|^{α_1}, …, x_n|x|^{α_n})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMapSpec {
    pub alphas: Vec<f64>,
    pub alpha_sum: f64,
}

impl RadialMapSpec {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() < 2 {
            return Err(Error::input("radial map needs at least two exponents"));
        }
        if alphas.iter().any(|a| !a.is_finite() || *a <= -1.0) {
            return Err(Error::input("radial exponents must be finite and > -1"));
        }
        if alphas.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::input("radial exponents must be sorted nondecreasing"));
        }
        let alpha_sum = alphas.iter().sum();
        Ok(Self { alphas, alpha_sum })
    }

    pub fn dimension(&self) -> usize {
        self.alphas.len()
    }
}

fn check_radial_point(spec: &RadialMapSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dimension() {
        return Err(Error::input(format!(
            "point has dimension {}, map has dimension {}",
            x.len(),
            spec.dimension()
        )));
    }
    let r = norm(x);
    if r < MIN_RADIUS {
        return Err(Error::domain("radial map jet is singular at the origin"));
    }
    Ok(r)
}

/// Radial map with the diagonal differential `(1 + α_i x_i²/|x|²)|x|^{α_i}`.
pub fn radial_map(spec: &RadialMapSpec, x: &[f64]) -> Result<MapJet> {
    let r = check_radial_point(spec, x)?;
    let n = x.len();
    let image: Vec<f64> = x.iter().zip(&spec.alphas).map(|(xi, a)| xi * r.powf(*a)).collect();
    let diag: Vec<f64> = x
        .iter()
        .zip(&spec.alphas)
        .map(|(xi, a)| (1.0 + a * xi * xi / (r * r)) * r.powf(*a))
        .collect();
    let jacobian = diag.iter().product();
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 });
    Ok(MapJet::with_jacobian(image, d, jacobian))
}

/// Radial map with the full differential `δ_ij|x|^{α_i} + α_i x_i x_j |x|^{α_i − 2}`.
pub fn radial_map_exact(spec: &RadialMapSpec, x: &[f64]) -> Result<MapJet> {
    let r = check_radial_point(spec, x)?;
    let n = x.len();
    let image: Vec<f64> = x.iter().zip(&spec.alphas).map(|(xi, a)| xi * r.powf(*a)).collect();
    let d = DMatrix::from_fn(n, n, |i, j| {
        let a = spec.alphas[i];
        let delta = if i == j { 1.0 } else { 0.0 };
        r.powf(a) * (delta + a * x[i] * x[j] / (r * r))
    });
    Ok(MapJet::new(image, d))
}

/// `K_p(x) = |Dφ|/|J|^{1/p}`, with `0` on `{Dφ = 0, J = 0}` and `+∞` where only `J` vanishes.
pub fn p_dilatation(jet: &MapJet, p: f64) -> f64 {
    let j = jet.jacobian.abs();
    if j > 0.0 {
        jet.op_norm / j.powf(1.0 / p)
    } else if jet.op_norm == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Which branch of the classification applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialCase {
    /// `α_1 > 0`: p-quasiconformal for `p ≥ α/α_1`.
    PositiveLeading,
    /// `α/α_1 = n`: all exponents equal, the map is quasiconformal.
    EqualExponents,
    /// `α_1 < 0`: p-quasiconformal for `1 ≤ p ≤ α/α_1`.
    NegativeLeading,
}

/// Outcome of [`radial_classify`] at one exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialClass {
    pub case: RadialCase,
    pub quasiconformal: bool,
    pub p_quasiconformal: bool,
    /// Closed range of admissible `p` (`lo > hi` when empty, `hi = ∞` when unbounded).
    pub p_range: (f64, f64),
}

/// Decide p-quasiconformality of the radial map from the sign of `α_1` and the
/// ratio `α/α_1`.
pub fn radial_classify(spec: &RadialMapSpec, n: usize, p: f64) -> Result<RadialClass> {
    if n != spec.dimension() {
        return Err(Error::input(format!(
            "dimension {n} does not match {} exponents",
            spec.dimension()
        )));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("p must be >= 1, got {p}")));
    }
    let a1 = spec.alphas[0];
    let total = spec.alpha_sum;
    let scale = 1.0 + spec.alphas.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let all_equal = spec.alphas.iter().all(|a| (a - a1).abs() <= 1e-12 * scale);
    if a1 == 0.0 && !all_equal {
        return Err(Error::Indeterminate(format!(
            "alpha_1 = 0 with alpha = {total} is not covered by the classification"
        )));
    }
    let (case, p_range) = if a1 == 0.0 {
        // The identity.
        (RadialCase::EqualExponents, (1.0, f64::INFINITY))
    } else {
        let ratio = if all_equal { n as f64 } else { total / a1 };
        let range = if a1 > 0.0 { (ratio, f64::INFINITY) } else { (1.0, ratio) };
        let case = if all_equal {
            RadialCase::EqualExponents
        } else if a1 > 0.0 {
            RadialCase::PositiveLeading
        } else {
            RadialCase::NegativeLeading
        };
        (case, range)
    };
    let tol = 1e-12 * p;
    let p_quasiconformal = p >= p_range.0 - tol && p <= p_range.1 + tol;
    Ok(RadialClass { case, quasiconformal: all_equal, p_quasiconformal, p_range })
}

/// `(1 + α_1)^p/|1 + α| · |x|^{α_1 p − α}`, the pointwise upper estimate of
/// `|Dφ|^p/|J|` for the radial map.
pub fn radial_distortion_estimate(spec: &RadialMapSpec, p: f64, r: f64) -> f64 {
    let a1 = spec.alphas[0];
    let a = spec.alpha_sum;
    (1.0 + a1).powf(p) / (1.0 + a).abs() * r.powf(a1 * p - a)
}

/// Which differential the cusp reflection reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum JetModel {
    /// Differential in arc-length coordinates `(r, s)`.
    #[default]
    Coordinate,
    /// Exact Cartesian differential.
    Euclidean,
}

/// Shape of the cusp family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CuspShape {
    /// Planar cusp (`n = 2`) or rotationally symmetric pick.
    Pick,
    /// Cusp cross-section times `(0, 1)` in the last coordinate.
    Ridge,
}

/// The angular reflection of `B \ Ω̃` onto `Ω̃` acting on Cartesian points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspReflection {
    pub gamma: f64,
    pub n: usize,
    pub shape: CuspShape,
    pub model: JetModel,
}

/// A map evaluated on Cartesian points.
pub trait Mapping: Send + Sync {
    fn dimension(&self) -> usize;
    fn jet_at(&self, x: &[f64]) -> Result<MapJet>;
}

/// The identity of `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity {
    pub n: usize,
}

impl Mapping for Identity {
    fn dimension(&self) -> usize {
        self.n
    }

    fn jet_at(&self, x: &[f64]) -> Result<MapJet> {
        Ok(MapJet::identity(x))
    }
}

/// Angular data of a point relative to the `x_1` axis: `(r, θ_1, u)` with `u` the unit
/// vector of the component orthogonal to `x_1` (`e_2` on the axis).
fn axis_frame(x: &[f64]) -> (f64, f64, Vec<f64>) {
    let (r, theta) = axis_polar(x);
    let perp = norm(&x[1..]);
    let mut u = vec![0.0; x.len()];
    if perp > 0.0 {
        for i in 1..x.len() {
            u[i] = x[i] / perp;
        }
    } else {
        u[1] = 1.0;
    }
    (r, theta, u)
}

impl CuspReflection {
    pub fn planar(gamma: f64) -> Result<Self> {
        Self::new(gamma, 2, CuspShape::Pick)
    }

    pub fn new(gamma: f64, n: usize, shape: CuspShape) -> Result<Self> {
        check_gamma(gamma)?;
        match shape {
            CuspShape::Pick if n < 2 => return Err(Error::input("pick reflection needs n >= 2")),
            CuspShape::Ridge if n < 3 => return Err(Error::input("ridge reflection needs n >= 3")),
            _ => {}
        }
        Ok(Self { gamma, n, shape, model: JetModel::Coordinate })
    }

    pub fn with_model(mut self, model: JetModel) -> Self {
        self.model = model;
        self
    }

    fn lead_dim(&self) -> usize {
        match self.shape {
            CuspShape::Pick => self.n,
            CuspShape::Ridge => self.n - 1,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::input(format!(
                "point has dimension {}, reflection acts in dimension {}",
                x.len(),
                self.n
            )));
        }
        if self.shape == CuspShape::Ridge {
            let z = x[self.n - 1];
            if !(z > 0.0 && z < 1.0) {
                return Err(Error::domain(format!("ridge coordinate {z} outside (0,1)")));
            }
        }
        Ok(())
    }

    /// Reflect a point of the complement into the cusp; boundary points are fixed.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let k = self.lead_dim();
        let (r, theta, u) = axis_frame(&x[..k]);
        if !(r > MIN_RADIUS && r < 1.0) {
            return Err(Error::domain(format!("radius {r} outside (0,1)")));
        }
        let rg = r.powf(self.gamma);
        if theta < rg * (1.0 - STRIP_SLACK) {
            return Err(Error::domain(format!(
                "point lies inside the cusp (θ = {theta} < r^γ = {rg})"
            )));
        }
        let big_theta = (rg * (PI - theta) / (PI - rg)).min(rg);
        let mut y = x.to_vec();
        y[0] = r * big_theta.cos();
        for i in 1..k {
            y[i] = r * big_theta.sin() * u[i];
        }
        Ok(y)
    }

    /// Map a point of the cusp back to the complement.
    pub fn invert(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        let k = self.lead_dim();
        let (r, big_theta, u) = axis_frame(&y[..k]);
        if !(r > MIN_RADIUS && r < 1.0) {
            return Err(Error::domain(format!("radius {r} outside (0,1)")));
        }
        let rg = r.powf(self.gamma);
        if big_theta > rg * (1.0 + STRIP_SLACK) {
            return Err(Error::domain(format!(
                "point lies outside the cusp (θ = {big_theta} > r^γ = {rg})"
            )));
        }
        let theta = (PI - big_theta * (PI - rg) / rg).max(rg);
        let mut x = y.to_vec();
        x[0] = r * theta.cos();
        for i in 1..k {
            x[i] = r * theta.sin() * u[i];
        }
        Ok(x)
    }

    /// Exact Cartesian differential of [`CuspReflection::apply`].
    pub fn euclidean_jet(&self, x: &[f64]) -> Result<MapJet> {
        let image = self.apply(x)?;
        let k = self.lead_dim();
        let (r, theta, u) = axis_frame(&x[..k]);
        let g = self.gamma;
        let rg = r.powf(g);
        let denom = PI - rg;
        let big_theta = (rg * (PI - theta) / denom).min(rg);
        let dtheta_dr = (PI - theta) * g * r.powf(g - 1.0) * PI / (denom * denom);
        let dtheta_dtheta = -rg / denom;
        let sin_t = theta.sin();
        let rho = if sin_t > 1e-300 { big_theta.sin() / sin_t } else { -dtheta_dtheta };

        let mut e1 = vec![0.0; k];
        e1[0] = 1.0;
        let er: Vec<f64> = x[..k].iter().map(|v| v / r).collect();
        let et: Vec<f64> = (0..k).map(|i| -theta.sin() * e1[i] + theta.cos() * u[i]).collect();
        let er2: Vec<f64> = image[..k].iter().map(|v| v / r).collect();
        let et2: Vec<f64> = (0..k).map(|i| -big_theta.sin() * e1[i] + big_theta.cos() * u[i]).collect();

        let mut d = DMatrix::identity(self.n, self.n);
        for i in 0..k {
            for j in 0..k {
                let rest = if i == j { 1.0 } else { 0.0 } - e1[i] * e1[j] - u[i] * u[j];
                d[(i, j)] = er2[i] * er[j]
                    + et2[i] * (r * dtheta_dr * er[j] + dtheta_dtheta * et[j])
                    + rho * rest;
            }
        }
        let jacobian = dtheta_dtheta * rho.powi(k as i32 - 2);
        Ok(MapJet::with_jacobian(image, d, jacobian))
    }

    /// Differential in the arc-length coordinates, reported at a Cartesian point.
    pub fn coordinate_jet(&self, x: &[f64]) -> Result<MapJet> {
        let image = self.apply(x)?;
        let k = self.lead_dim();
        let (r, theta) = axis_polar(&x[..k]);
        // In the plane the lower half is handled by conjugation with H.
        let s = if k == 2 && x[1] < 0.0 { -theta * r } else { theta * r };
        let mut native = vec![0.0; self.n];
        native[0] = r;
        native[1] = s;
        if self.shape == CuspShape::Ridge {
            native[self.n - 1] = x[self.n - 1];
        }
        let jet = match self.shape {
            CuspShape::Pick => pick_reflection_nd(self.gamma, self.n, &native)?,
            CuspShape::Ridge => ridge_reflection_nd(self.gamma, self.n, &native)?,
        };
        Ok(MapJet::with_jacobian(image, jet.differential, jet.jacobian))
    }
}

impl Mapping for CuspReflection {
    fn dimension(&self) -> usize {
        self.n
    }

    fn jet_at(&self, x: &[f64]) -> Result<MapJet> {
        match self.model {
            JetModel::Coordinate => self.coordinate_jet(x),
            JetModel::Euclidean => self.euclidean_jet(x),
        }
    }
}

/// The inverse reflection `Ω̃ → B \ Ω̃`, with jets obtained by inverting the forward jet.
#[derive(Debug, Clone, Copy)]
pub struct InverseReflection(pub CuspReflection);

impl Mapping for InverseReflection {
    fn dimension(&self) -> usize {
        self.0.n
    }

    fn jet_at(&self, y: &[f64]) -> Result<MapJet> {
        let x = self.0.invert(y)?;
        self.0.jet_at(&x)?.inverse(x)
    }
}

/// Radial map as a [`Mapping`], with either the printed diagonal or the exact differential.
#[derive(Debug, Clone)]
pub struct RadialMapping {
    pub spec: RadialMapSpec,
    pub exact: bool,
}

impl Mapping for RadialMapping {
    fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    fn jet_at(&self, x: &[f64]) -> Result<MapJet> {
        if self.exact {
            radial_map_exact(&self.spec, x)
        } else {
            radial_map(&self.spec, x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(gamma: f64, r: f64, s: f64) -> [[f64; 2]; 2] {
        let f = |r: f64, s: f64| cusp_reflection_2d(gamma, r, s).unwrap().image;
        let hr = 1e-6 * r;
        let hs = 1e-6 * r;
        let (a, b) = (f(r + hr, s), f(r - hr, s));
        let (c, d) = (f(r, s + hs), f(r, s - hs));
        [
            [(a[0] - b[0]) / (2.0 * hr), (c[0] - d[0]) / (2.0 * hs)],
            [(a[1] - b[1]) / (2.0 * hr), (c[1] - d[1]) / (2.0 * hs)],
        ]
    }

    #[test]
    fn boundary_points_fixed_and_ray_collapses() {
        let g = 1.3;
        let r: f64 = 0.4;
        let top = r.powf(g + 1.0);
        let jet = cusp_reflection_2d(g, r, top).unwrap();
        assert!((jet.image[1] - top).abs() < 1e-15);
        let jet = cusp_reflection_2d(g, r, PI * r).unwrap();
        assert!(jet.image[1].abs() < 1e-15);
    }

    #[test]
    fn jacobian_closed_form_gamma_one() {
        let jet = cusp_reflection_2d(1.0, 0.5, 0.25 * PI).unwrap();
        let expected = 0.5 / (PI - 0.5);
        assert!((jet.jacobian.abs() - expected).abs() < 1e-15);
        assert!(jet.jacobian < 0.0);
        assert!((expected - 0.189_279_751_107_925).abs() < 1e-14);
        let fd = fd_jacobian(1.0, 0.5, 0.25 * PI);
        let det = fd[0][0] * fd[1][1] - fd[0][1] * fd[1][0];
        assert!((det - jet.jacobian).abs() < 1e-6 * expected);
    }

    #[test]
    fn strip_violations_rejected() {
        assert!(matches!(cusp_reflection_2d(1.0, 0.5, 0.1), Err(Error::Domain(_))));
        assert!(matches!(cusp_reflection_2d(1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(cusp_reflection_2d(1.0, 1e-13, 1e-13), Err(Error::Domain(_))));
        assert!(matches!(cusp_reflection_inverse_2d(1.0, 0.5, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn inverse_examples() {
        let (g, big_r): (f64, f64) = (0.7, 0.6);
        let top = big_r.powf(g + 1.0);
        let (_, s) = cusp_reflection_inverse_2d(g, big_r, top).unwrap();
        assert!((s - top).abs() < 1e-14);
        let (_, s) = cusp_reflection_inverse_2d(g, big_r, 1e-14).unwrap();
        assert!((s - PI * big_r).abs() < 1e-12);
        let (r, s) = cusp_reflection_inverse_2d(g, big_r, 0.5 * top).unwrap();
        let back = cusp_reflection_2d(g, r, s).unwrap().image;
        assert!((back[1] - 0.5 * top).abs() < 1e-14);
    }

    #[test]
    fn lower_half_by_conjugation() {
        let up = cusp_reflection_2d(1.0, 0.5, 1.0).unwrap();
        let down = cusp_reflection_2d(1.0, 0.5, -1.0).unwrap();
        assert_eq!(up.image[1], -down.image[1]);
        assert_eq!(up.op_norm, down.op_norm);
        assert_eq!(up.jacobian, down.jacobian);
    }

    #[test]
    fn pick_and_ridge_reduce_to_planar() {
        let planar = cusp_reflection_2d(1.0, 0.5, 0.9).unwrap();
        let pick = pick_reflection_nd(1.0, 3, &[0.5, 0.9, 1.1]).unwrap();
        assert_eq!(pick.jacobian, planar.jacobian);
        assert!((pick.op_norm - planar.op_norm).abs() < 1e-12);
        assert_eq!(pick.image[2], 1.1);
        assert!((pick.jacobian.abs() - 0.189_279_751_107_925).abs() < 1e-14);
        let ridge = ridge_reflection_nd(1.0, 3, &[0.5, 0.9, 0.3]).unwrap();
        assert_eq!(ridge.jacobian, planar.jacobian);
        assert_eq!(ridge.image[2], 0.3);
        let top = 0.5f64.powi(2);
        let fixed = pick_reflection_nd(1.0, 3, &[0.5, top, 0.2]).unwrap();
        assert!((fixed.image[1] - top).abs() < 1e-15);
        assert!(ridge_reflection_nd(1.0, 3, &[0.5, 0.9, 1.3]).is_err());
    }

    #[test]
    fn radial_identity_and_axis_values() {
        let id = RadialMapSpec::new(vec![0.0, 0.0]).unwrap();
        let jet = radial_map(&id, &[0.3, -0.2]).unwrap();
        assert_eq!(jet.image, vec![0.3, -0.2]);
        assert_eq!(jet.jacobian, 1.0);
        assert_eq!(jet.differential, DMatrix::identity(2, 2));

        let spec = RadialMapSpec::new(vec![-0.5, 1.0]).unwrap();
        let x = 0.36;
        let jet = radial_map(&spec, &[x, 0.0]).unwrap();
        assert!((jet.differential[(0, 0)] - 0.5 * x.powf(-0.5)).abs() < 1e-14);
        assert!((jet.differential[(1, 1)] - x).abs() < 1e-14);
        assert!(matches!(radial_map(&spec, &[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn radial_equal_exponents_jacobian_lower_bound() {
        let a = 0.4;
        let spec = RadialMapSpec::new(vec![a, a, a]).unwrap();
        for x in [[0.1, 0.2, 0.3], [0.5, 0.0, 0.0], [0.2, -0.6, 0.1]] {
            let jet = radial_map(&spec, &x).unwrap();
            let r = norm(&x);
            assert!(jet.jacobian >= r.powf(3.0 * a) * (1.0 + a) - 1e-15);
        }
    }

    #[test]
    fn radial_spec_validation() {
        assert!(RadialMapSpec::new(vec![1.0, 0.5]).is_err());
        assert!(RadialMapSpec::new(vec![-1.0, 0.5]).is_err());
        assert!(RadialMapSpec::new(vec![0.5]).is_err());
    }

    #[test]
    fn dilatation_conventions() {
        let id = MapJet::identity(&[0.1, 0.2]);
        assert_eq!(p_dilatation(&id, 3.0), 1.0);
        let zero = MapJet::new(vec![0.0, 0.0], DMatrix::zeros(2, 2));
        assert_eq!(p_dilatation(&zero, 2.0), 0.0);
        let flat = MapJet::new(vec![0.0, 0.0], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(p_dilatation(&flat, 2.0), f64::INFINITY);
        let jet = cusp_reflection_2d(1.0, 0.5, 0.25 * PI).unwrap();
        let k = p_dilatation(&jet, 2.0);
        assert!((k - jet.op_norm / (0.5 / (PI - 0.5f64)).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn classification_cases() {
        let pq = |spec: &RadialMapSpec, p: f64| radial_classify(spec, spec.dimension(), p).unwrap();
        let qc = RadialMapSpec::new(vec![1.0, 1.0]).unwrap();
        let c = pq(&qc, 2.0);
        assert_eq!(c.case, RadialCase::EqualExponents);
        assert!(c.quasiconformal && c.p_quasiconformal);
        assert!(!pq(&qc, 1.5).p_quasiconformal);

        let c1 = RadialMapSpec::new(vec![0.5, 1.5]).unwrap();
        assert_eq!(pq(&c1, 4.0).case, RadialCase::PositiveLeading);
        assert!(pq(&c1, 4.0).p_quasiconformal);
        assert!(!pq(&c1, 3.0).p_quasiconformal);
        assert!(!pq(&c1, 4.0).quasiconformal);

        let c3 = RadialMapSpec::new(vec![-0.5, 0.2]).unwrap();
        for p in [1.0, 1.5, 3.0] {
            let c = pq(&c3, p);
            assert_eq!(c.case, RadialCase::NegativeLeading);
            assert!(!c.p_quasiconformal);
            assert!(c.p_range.0 > c.p_range.1);
        }
        let c3b = RadialMapSpec::new(vec![-0.4, -0.3, 0.2]).unwrap();
        assert!(pq(&c3b, 1.2).p_quasiconformal);
        assert!(pq(&c3b, 1.25).p_quasiconformal);
        assert!(!pq(&c3b, 1.3).p_quasiconformal);

        let zero = RadialMapSpec::new(vec![0.0, 0.0]).unwrap();
        assert!(pq(&zero, 7.0).p_quasiconformal);
        let indet = RadialMapSpec::new(vec![0.0, 0.5]).unwrap();
        assert!(matches!(radial_classify(&indet, 2, 2.0), Err(Error::Indeterminate(_))));
        assert!(radial_classify(&c1, 3, 2.0).is_err());
        assert!(radial_classify(&c1, 2, 0.5).is_err());
    }

    #[test]
    fn euclidean_jet_matches_finite_differences() {
        for (refl, x) in [
            (CuspReflection::planar(1.0).unwrap(), vec![-0.3, 0.4]),
            (CuspReflection::planar(0.5).unwrap(), vec![0.1, -0.5]),
            (CuspReflection::new(1.0, 3, CuspShape::Pick).unwrap(), vec![-0.2, 0.3, 0.4]),
            (CuspReflection::new(2.0, 4, CuspShape::Pick).unwrap(), vec![0.1, 0.3, -0.2, 0.4]),
            (CuspReflection::new(1.0, 3, CuspShape::Ridge).unwrap(), vec![-0.2, 0.3, 0.4]),
        ] {
            let jet = refl.euclidean_jet(&x).unwrap();
            let n = x.len();
            for j in 0..n {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let (fp, fm) = (refl.apply(&xp).unwrap(), refl.apply(&xm).unwrap());
                for i in 0..n {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    assert!((fd - jet.differential[(i, j)]).abs() < 1e-6, "{refl:?} ({i},{j})");
                }
            }
            let det = jet.differential.determinant();
            assert!((det - jet.jacobian).abs() < 1e-10 * det.abs().max(1e-3));
        }
    }

    #[test]
    fn planar_euclidean_and_coordinate_jacobians_agree() {
        let refl = CuspReflection::planar(1.0).unwrap();
        let x = [0.2, 0.35];
        let a = refl.euclidean_jet(&x).unwrap();
        let b = refl.coordinate_jet(&x).unwrap();
        assert!((a.jacobian - b.jacobian).abs() < 1e-14);
    }

    #[test]
    fn inverse_reflection_round_trip() {
        let refl = CuspReflection::new(0.8, 3, CuspShape::Pick).unwrap();
        let x = [-0.1, 0.3, -0.4];
        let y = refl.apply(&x).unwrap();
        let back = refl.invert(&y).unwrap();
        for i in 0..3 {
            assert!((back[i] - x[i]).abs() < 1e-12);
        }
        let inv = InverseReflection(refl);
        let jet = inv.jet_at(&y).unwrap();
        let fwd = refl.jet_at(&x).unwrap();
        assert!((jet.jacobian * fwd.jacobian - 1.0).abs() < 1e-12);
        assert!(refl.apply(&[0.5, 0.01, 0.0]).is_err());
    }
}
