//! The extension operator `E f = f` on the cusp and `f ∘ φ` on its complement,
//! gradient seminorms and the extension inequality check.

use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::{extension_norm_bound, kpq_bound_closed_form, ExponentPair};
use crate::error::{Error, Result};
use crate::geometry::{graded_grid, norm, DomainKind, DomainSpec, GradedGrid, GridSpec, Region};
use crate::maps::{CuspReflection, CuspShape, JetModel};

/// The test-function battery shipped with the library.
pub const STANDARD_BATTERY: &str = include_str!("../data/battery.toml");

/// Slack on the extension inequality.
pub const EXTENSION_SLACK: f64 = 0.05;

/// A scalar function with a gradient.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Closed-form catalogue entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Catalogue {
    /// `c`
    Constant { value: f64 },
    /// `x_i`
    Coordinate { axis: usize },
    /// `x_i²`
    Square { axis: usize },
    /// `x_1² − x_2²`
    Saddle,
    /// `|x|^a x_1/|x|`, i.e. `r^a cos θ` in the plane
    RadialCos { power: f64 },
    /// `|x|^a`
    RadialPower { power: f64 },
}

impl Catalogue {
    /// Check parameters against the ambient dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Catalogue::Constant { value } if !value.is_finite() => {
                Err(Error::input("constant value must be finite"))
            }
            Catalogue::Coordinate { axis } | Catalogue::Square { axis } if axis >= n => {
                Err(Error::input(format!("axis {axis} out of range for dimension {n}")))
            }
            Catalogue::RadialCos { power } | Catalogue::RadialPower { power }
                if !(power.is_finite() && power > 0.0) =>
            {
                Err(Error::input(format!("radial power must be positive, got {power}")))
            }
            _ => Ok(()),
        }
    }
}

fn check_radius(x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::domain("radial function gradient is undefined at the origin"))
    }
}

impl ScalarField for Catalogue {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(match *self {
            Catalogue::Constant { value } => value,
            Catalogue::Coordinate { axis } => x[axis],
            Catalogue::Square { axis } => x[axis] * x[axis],
            Catalogue::Saddle => x[0] * x[0] - x[1] * x[1],
            Catalogue::RadialCos { power } => {
                let r = norm(x);
                if r == 0.0 { 0.0 } else { x[0] * r.powf(power - 1.0) }
            }
            Catalogue::RadialPower { power } => norm(x).powf(power),
        })
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        let mut g = vec![0.0; n];
        match *self {
            Catalogue::Constant { .. } => {}
            Catalogue::Coordinate { axis } => g[axis] = 1.0,
            Catalogue::Square { axis } => g[axis] = 2.0 * x[axis],
            Catalogue::Saddle => {
                g[0] = 2.0 * x[0];
                g[1] = -2.0 * x[1];
            }
            Catalogue::RadialCos { power } => {
                let r = check_radius(x)?;
                let base = r.powf(power - 1.0);
                let c = (power - 1.0) * x[0] * r.powf(power - 3.0);
                for i in 0..n {
                    g[i] = c * x[i];
                }
                g[0] += base;
            }
            Catalogue::RadialPower { power } => {
                let r = check_radius(x)?;
                let c = power * r.powf(power - 2.0);
                for i in 0..n {
                    g[i] = c * x[i];
                }
            }
        }
        Ok(g)
    }
}

/// `a·f + b·g`.
pub struct LinearCombination {
    pub terms: Vec<(f64, Arc<dyn ScalarField>)>,
}

impl ScalarField for LinearCombination {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (c, f) in &self.terms {
            acc += c * f.value(x)?;
        }
        Ok(acc)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; x.len()];
        for (c, f) in &self.terms {
            for (a, g) in acc.iter_mut().zip(f.gradient(x)?) {
                *a += c * g;
            }
        }
        Ok(acc)
    }
}

/// One named manifest entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub name: String,
    #[serde(flatten)]
    pub function: Catalogue,
}

/// A list of catalogue functions, read from TOML `[[function]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionManifest {
    #[serde(rename = "function", default)]
    pub functions: Vec<FunctionEntry>,
}

impl FunctionManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: Self = toml::from_str(text).map_err(|e| Error::input(format!("manifest: {e}")))?;
        if manifest.functions.is_empty() {
            return Err(Error::input("manifest lists no functions"));
        }
        let mut seen = HashSet::new();
        for entry in &manifest.functions {
            if entry.name.trim().is_empty() {
                return Err(Error::input("function name must be nonempty"));
            }
            if !seen.insert(entry.name.as_str()) {
                return Err(Error::input(format!("duplicate function name '{}'", entry.name)));
            }
        }
        Ok(manifest)
    }

    pub fn standard() -> Self {
        Self::from_toml(STANDARD_BATTERY).expect("bundled battery parses")
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for entry in &self.functions {
            entry.function.validate(n).map_err(|e| Error::input(format!("function '{}': {e}", entry.name)))?;
        }
        Ok(())
    }
}

/// How gradients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GradientMode {
    Analytic,
    CentralDifference(f64),
}

/// A function on a region together with its gradient scheme.
#[derive(Clone)]
pub struct SampledFunction {
    pub region: Region,
    pub field: Arc<dyn ScalarField>,
    pub gradient_mode: GradientMode,
}

impl SampledFunction {
    pub fn new(region: Region, field: Arc<dyn ScalarField>) -> Self {
        Self { region, field, gradient_mode: GradientMode::Analytic }
    }

    pub fn with_mode(mut self, mode: GradientMode) -> Self {
        self.gradient_mode = mode;
        self
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.field.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.gradient_mode {
            GradientMode::Analytic => self.field.gradient(x),
            GradientMode::CentralDifference(h) => central_difference(self.field.as_ref(), x, h),
        }
    }
}

/// Central differences, falling back to one-sided ones where a stencil point is undefined.
pub fn central_difference(f: &dyn ScalarField, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::input(format!("difference step must be positive, got {h}")));
    }
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f.value(&probe);
        probe[i] = x[i] - h;
        let fm = f.value(&probe);
        probe[i] = x[i];
        g[i] = match (fp, fm) {
            (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
            (Ok(a), Err(_)) => (a - f.value(x)?) / h,
            (Err(_), Ok(b)) => (f.value(x)? - b) / h,
            (Err(e), Err(_)) => return Err(e),
        };
    }
    Ok(g)
}

/// `E f` on the superdomain for a cusp or pick reflection.
pub struct ExtendedField {
    pub inner: Arc<dyn ScalarField>,
    pub domain: DomainSpec,
    pub reflection: CuspReflection,
}

impl ExtendedField {
    /// Where to evaluate `f`: `x` itself on the closed cusp, `φ(x)` on the complement.
    fn source(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        if self.domain.contains(x)? {
            return Ok(None);
        }
        let y = self.reflection.apply(x)?;
        if !self.domain.contains(&y)? && !on_cusp_boundary(&self.domain, &y) {
            return Err(Error::Consistency(format!("reflected point {y:?} of {x:?} lies outside the cusp")));
        }
        Ok(Some(y))
    }
}

fn on_cusp_boundary(domain: &DomainSpec, y: &[f64]) -> bool {
    let lead = if domain.kind == DomainKind::RidgeND { &y[..y.len() - 1] } else { y };
    let (r, theta) = crate::geometry::axis_polar(lead);
    let a = r.powf(domain.gamma.unwrap_or(f64::NAN));
    r < 1.0 && (theta - a).abs() <= 1e-12 * a.max(1e-300)
}

impl ScalarField for ExtendedField {
    fn value(&self, x: &[f64]) -> Result<f64> {
        match self.source(x)? {
            None => self.inner.value(x),
            Some(y) => self.inner.value(&y),
        }
    }

    /// Chain rule `∇(f∘φ)(x) = Dφ(x)ᵀ ∇f(φ(x))` on the complement.
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.source(x)? {
            None => self.inner.gradient(x),
            Some(y) => {
                let jet = self.reflection.euclidean_jet(x)?;
                let gy = self.inner.gradient(&y)?;
                let n = x.len();
                Ok((0..n).map(|j| (0..n).map(|i| jet.differential[(i, j)] * gy[i]).sum()).collect())
            }
        }
    }
}

/// The reflection of a cusp-type domain with the exact Cartesian differential.
pub fn reflection_for(domain: &DomainSpec) -> Result<CuspReflection> {
    let gamma = domain.cusp_gamma()?;
    let shape = if domain.kind == DomainKind::RidgeND { CuspShape::Ridge } else { CuspShape::Pick };
    Ok(CuspReflection::new(gamma, domain.n, shape)?.with_model(JetModel::Euclidean))
}

/// `E f`: `f` on the cusp `Ω̃`, `f ∘ φ` on the rest of the superdomain.
pub fn extend(f: &SampledFunction) -> Result<SampledFunction> {
    let domain = f.region.domain;
    if !domain.is_cusp() || f.region.part != crate::geometry::Part::Domain {
        return Err(Error::input("extend expects a function on a cusp, pick or ridge domain"));
    }
    let reflection = reflection_for(&domain)?;
    let field = ExtendedField { inner: f.field.clone(), domain, reflection };
    Ok(SampledFunction {
        region: Region::domain(domain),
        field: Arc::new(field),
        gradient_mode: f.gradient_mode,
    })
}

/// `(Σ |∇f(x_c)|^p w_c)^{1/p}` over the grid nodes.
pub fn gradient_seminorm(f: &SampledFunction, p: f64, grid: &GradedGrid) -> Result<f64> {
    Ok(gradient_power_integral(f, p, grid)?.powf(1.0 / p))
}

fn gradient_power_integral(f: &SampledFunction, p: f64, grid: &GradedGrid) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::input(format!("p must be >= 1, got {p}")));
    }
    grid.integrate(|node| Ok(norm(&f.gradient(&node.point)?).powf(p)))
}

/// Grids used by [`verify_extension_inequality`]; the superdomain integral is split
/// over the cusp and its complement so no cell straddles the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionGrids {
    pub cusp: GridSpec,
    pub complement: GridSpec,
}

impl Default for ExtensionGrids {
    fn default() -> Self {
        Self { cusp: GridSpec::default(), complement: GridSpec::default() }
    }
}

/// Outcome of one extension inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionCheck {
    pub name: String,
    /// `‖∇E f‖_{L_q(Ω)}`
    pub lhs: f64,
    /// `‖∇f‖_{L_p(Ω̃)}`
    pub seminorm_p: f64,
    pub rhs_factor: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Check `‖∇E f‖_{L_q(Ω)} ≤ ‖E‖·‖∇f‖_{L_p(Ω̃)}` with the closed-form `‖E‖` bound.
pub fn verify_extension_inequality(
    name: &str,
    field: Arc<dyn ScalarField>,
    domain: &DomainSpec,
    exps: &ExponentPair,
    mode: GradientMode,
    grids: &ExtensionGrids,
) -> Result<ExtensionCheck> {
    domain.validate()?;
    if domain.kind != DomainKind::Cusp2D && !(domain.kind == DomainKind::PickND && domain.n == 2) {
        return Err(Error::input("extension inequality check supports the planar cusp only"));
    }
    let gamma = domain.cusp_gamma()?;
    let rhs_factor = extension_norm_bound(domain.measure(), kpq_bound_closed_form(gamma, exps, 2)?, exps)?;

    let cusp = Region::domain(*domain);
    let complement = Region::complement(*domain)?;
    let f = SampledFunction::new(cusp, field).with_mode(mode);
    let ef = extend(&f)?;
    let cusp_grid = graded_grid(cusp, grids.cusp)?;
    let complement_grid = graded_grid(complement, grids.complement)?;

    let inner_q = gradient_power_integral(&ef, exps.q, &cusp_grid)?;
    let outer_q = gradient_power_integral(&ef, exps.q, &complement_grid)?;
    let lhs = (inner_q + outer_q).powf(1.0 / exps.q);
    let seminorm_p = gradient_seminorm(&f, exps.p, &cusp_grid)?;
    let rhs = rhs_factor * seminorm_p;
    let pass = lhs <= rhs * (1.0 + EXTENSION_SLACK);
    Ok(ExtensionCheck { name: name.to_string(), lhs, seminorm_p, rhs_factor, rhs, pass })
}

/// Run [`verify_extension_inequality`] for every manifest entry, in manifest order.
pub fn verify_manifest(
    manifest: &FunctionManifest,
    domain: &DomainSpec,
    exps: &ExponentPair,
    mode: GradientMode,
    grids: &ExtensionGrids,
) -> Result<Vec<ExtensionCheck>> {
    manifest.validate(domain.n)?;
    manifest
        .functions
        .par_iter()
        .map(|entry| {
            let field: Arc<dyn ScalarField> = Arc::new(entry.function.clone());
            verify_extension_inequality(&entry.name, field, domain, exps, mode, grids)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cusp() -> DomainSpec {
        DomainSpec::cusp2d(0.5).unwrap()
    }

    #[test]
    fn standard_battery_has_six_entries() {
        let m = FunctionManifest::standard();
        assert_eq!(m.functions.len(), 6);
        m.validate(2).unwrap();
    }

    #[test]
    fn manifest_errors() {
        assert!(FunctionManifest::from_toml("").is_err());
        assert!(FunctionManifest::from_toml("[[function]]\nname='a'\nkind='bogus'").is_err());
        let dup = "[[function]]\nname='a'\nkind='saddle'\n[[function]]\nname='a'\nkind='saddle'";
        assert!(FunctionManifest::from_toml(dup).is_err());
        let m = FunctionManifest::from_toml("[[function]]\nname='z'\nkind='coordinate'\naxis=2").unwrap();
        assert!(m.validate(2).is_err());
        let m = FunctionManifest::from_toml("[[function]]\nname='r'\nkind='radial_power'\npower=-1.0").unwrap();
        assert!(m.validate(2).is_err());
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let x = [0.31, -0.42];
        for entry in FunctionManifest::standard().functions {
            let g = entry.function.gradient(&x).unwrap();
            let fd = central_difference(&entry.function, &x, 1e-6).unwrap();
            for i in 0..2 {
                assert!((g[i] - fd[i]).abs() <= 1e-4 * g[i].abs().max(1e-3), "{}", entry.name);
            }
        }
    }

    #[test]
    fn constants_extend_to_constants() {
        let f = SampledFunction::new(Region::domain(cusp()), Arc::new(Catalogue::Constant { value: 1.0 }));
        let ef = extend(&f).unwrap();
        for x in [[0.5, 0.1], [-0.3, 0.4], [0.0, -0.9]] {
            assert_eq!(ef.value(&x).unwrap(), 1.0);
            assert_eq!(ef.gradient(&x).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn coordinate_extends_through_reflection() {
        let f = SampledFunction::new(Region::domain(cusp()), Arc::new(Catalogue::Coordinate { axis: 0 }));
        let ef = extend(&f).unwrap();
        let refl = reflection_for(&cusp()).unwrap();
        let z = [-0.2, 0.5];
        assert_eq!(ef.value(&z).unwrap(), refl.apply(&z).unwrap()[0]);
        let r: f64 = 0.6;
        let b = [r * r.cos(), r * r.sin()];
        assert!((ef.value(&b).unwrap() - b[0]).abs() < 1e-14);
    }

    #[test]
    fn chain_rule_matches_differences_for_radial_power() {
        let f = SampledFunction::new(Region::domain(cusp()), Arc::new(Catalogue::RadialPower { power: 0.3 }));
        let ef = extend(&f).unwrap();
        for x in [[-0.2, 0.5], [0.1, -0.6], [-0.7, 0.05]] {
            let g = ef.gradient(&x).unwrap();
            let fd = central_difference(ef.field.as_ref(), &x, 1e-6).unwrap();
            for i in 0..2 {
                assert!((g[i] - fd[i]).abs() <= 1e-4 * g[i].abs().max(1e-2));
            }
        }
    }

    #[test]
    fn seminorm_oracles_on_disc() {
        let disc = Region::domain(DomainSpec::disc());
        let grid = graded_grid(disc, GridSpec::new(64, 1.0)).unwrap();
        let x = SampledFunction::new(disc, Arc::new(Catalogue::Coordinate { axis: 0 }));
        assert!((gradient_seminorm(&x, 2.0, &grid).unwrap() - PI.sqrt()).abs() < 1e-12);
        let s = SampledFunction::new(disc, Arc::new(Catalogue::Saddle));
        assert!((gradient_seminorm(&s, 2.0, &grid).unwrap() - (2.0 * PI).sqrt()).abs() < 1e-3);
        let c = SampledFunction::new(disc, Arc::new(Catalogue::Constant { value: 3.0 }));
        assert_eq!(gradient_seminorm(&c, 2.0, &grid).unwrap(), 0.0);
    }

    #[test]
    fn inequality_for_coordinate_and_constant() {
        let e = ExponentPair::new(2.0, 1.0).unwrap();
        let grids = ExtensionGrids { cusp: GridSpec::new(32, 2.0), complement: GridSpec::new(32, 2.0) };
        let chk = verify_extension_inequality(
            "x",
            Arc::new(Catalogue::Coordinate { axis: 0 }),
            &cusp(),
            &e,
            GradientMode::Analytic,
            &grids,
        )
        .unwrap();
        assert!(chk.pass && chk.lhs > 0.0);
        let chk = verify_extension_inequality(
            "one",
            Arc::new(Catalogue::Constant { value: 1.0 }),
            &cusp(),
            &e,
            GradientMode::Analytic,
            &grids,
        )
        .unwrap();
        assert!(chk.pass && chk.lhs == 0.0);
        let disc = DomainSpec::disc();
        assert!(verify_extension_inequality("x", Arc::new(Catalogue::Saddle), &disc, &e, GradientMode::Analytic, &grids).is_err());
    }
}
