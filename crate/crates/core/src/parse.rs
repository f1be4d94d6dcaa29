//! Text syntax for domains, grids, maps and points.
//!
//! Every item is `name` or `name:key=value,key=value`. List values (radial exponents)
//! continue over bare tokens: `radial:alphas=0.5,1.5,exact=true`.

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, GridSpec};
use crate::maps::{
    cusp_reflection_2d, pick_reflection_nd, ridge_reflection_nd, CuspReflection, CuspShape,
    Identity, InverseReflection, JetModel, MapJet, Mapping, RadialMapSpec, RadialMapping,
};

/// Upper limit on grid counts accepted from text, to keep malformed input from
/// requesting absurd allocations.
pub const MAX_GRID_COUNT: usize = 1 << 16;
const MAX_DIMENSION: usize = 16;

/// Ordered `key=value` pairs. A value may hold several comma-separated items.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyValues {
    pairs: Vec<(String, Vec<String>)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, Vec<String>)> = Vec::new();
        if text.trim().is_empty() {
            return Ok(Self { pairs });
        }
        for token in text.split(',') {
            let token = token.trim();
            match token.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim();
                    if k.is_empty() {
                        return Err(Error::input(format!("empty key in '{token}'")));
                    }
                    if pairs.iter().any(|(existing, _)| existing == k) {
                        return Err(Error::input(format!("duplicate key '{k}'")));
                    }
                    pairs.push((k.to_string(), vec![v.trim().to_string()]));
                }
                None => match pairs.last_mut() {
                    Some((_, values)) if !token.is_empty() => values.push(token.to_string()),
                    _ => return Err(Error::input(format!("expected key=value, got '{token}'"))),
                },
            }
        }
        Ok(Self { pairs })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|(k, _)| k.as_str())
    }

    fn get(&self, key: &str) -> Option<&[String]> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_slice())
    }

    fn single(&self, key: &str) -> Result<Option<&str>> {
        match self.get(key) {
            None => Ok(None),
            Some([v]) => Ok(Some(v.as_str())),
            Some(_) => Err(Error::input(format!("'{key}' takes a single value"))),
        }
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        self.single(key)?.map(|v| parse_real(key, v)).transpose()
    }

    pub fn count(&self, key: &str) -> Result<Option<usize>> {
        self.single(key)?.map(|v| parse_count(key, v)).transpose()
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>> {
        self.single(key)?
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::input(format!("'{key}' expects true or false, got '{v}'"))),
            })
            .transpose()
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|vs| vs.iter().map(|v| parse_real(key, v)).collect())
            .transpose()
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, what: &str, allowed: &[&str]) -> Result<()> {
        for k in self.keys() {
            if !allowed.contains(&k) {
                return Err(Error::input(format!(
                    "unknown key '{k}' for {what} (expected one of: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

fn parse_real(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::input(format!("'{key}' expects a number, got '{v}'")))?;
    if !x.is_finite() {
        return Err(Error::input(format!("'{key}' must be finite, got '{v}'")));
    }
    Ok(x)
}

fn parse_count(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::input(format!("'{key}' expects a nonnegative integer, got '{v}'")))
}

fn split_head(text: &str) -> Result<(&str, KeyValues)> {
    let text = text.trim();
    let (head, rest) = text.split_once(':').unwrap_or((text, ""));
    let head = head.trim();
    if head.is_empty() {
        return Err(Error::input("missing name before ':'"));
    }
    Ok((head, KeyValues::parse(rest)?))
}

fn dimension(kv: &KeyValues, default: Option<usize>) -> Result<usize> {
    let n = match (kv.count("n")?, default) {
        (Some(n), _) | (None, Some(n)) => n,
        (None, None) => return Err(Error::input("missing dimension 'n'")),
    };
    if n > MAX_DIMENSION {
        return Err(Error::input(format!("dimension {n} exceeds the limit {MAX_DIMENSION}")));
    }
    Ok(n)
}

/// `γ` from either `gamma_tilde` (in (0,1)) or `gamma` (positive), not both.
fn cusp_gamma(kv: &KeyValues) -> Result<f64> {
    match (kv.real("gamma_tilde")?, kv.real("gamma")?) {
        (Some(_), Some(_)) => Err(Error::input("give gamma_tilde or gamma, not both")),
        (Some(gt), None) => {
            if gt > 0.0 && gt < 1.0 {
                Ok((1.0 - gt) / gt)
            } else {
                Err(Error::input(format!("gamma_tilde must lie in (0,1), got {gt}")))
            }
        }
        (None, Some(g)) => {
            if g > 0.0 {
                Ok(g)
            } else {
                Err(Error::input(format!("gamma must lie in (0,inf), got {g}")))
            }
        }
        (None, None) => Err(Error::input("cusp needs gamma_tilde in (0,1) or gamma > 0")),
    }
}

/// Parses `disc`, `square`, `ball:n=3`, `cusp2d:gamma_tilde=0.5`, `pick:n=3,gamma=1`,
/// `ridge:n=3,gamma_tilde=0.5`.
pub fn parse_domain(text: &str) -> Result<DomainSpec> {
    let (head, kv) = split_head(text)?;
    let spec = match head {
        "disc" => {
            kv.only("disc", &[])?;
            DomainSpec::disc()
        }
        "square" => {
            kv.only("square", &[])?;
            DomainSpec::square()
        }
        "ball" => {
            kv.only("ball", &["n"])?;
            DomainSpec::ball(dimension(&kv, Some(2))?)?
        }
        "cusp2d" => {
            kv.only("cusp2d", &["gamma_tilde", "gamma"])?;
            DomainSpec::cusp2d_with_gamma(cusp_gamma(&kv)?)?
        }
        "pick" | "ridge" => {
            kv.only(head, &["n", "gamma_tilde", "gamma"])?;
            let n = dimension(&kv, None)?;
            let gamma = cusp_gamma(&kv)?;
            let base = if head == "pick" { DomainSpec::pick(n, 0.5)? } else { DomainSpec::ridge(n, 0.5)? };
            base.with_gamma(gamma)?
        }
        _ => {
            return Err(Error::input(format!(
                "unknown domain '{head}' (expected disc, square, ball, cusp2d, pick or ridge)"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Parses `N=128,beta=2[,angular=64]`; omitted keys take the defaults.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let kv = KeyValues::parse(text)?;
    kv.only("grid", &["N", "n", "beta", "angular"])?;
    let mut spec = GridSpec::default();
    match (kv.count("N")?, kv.count("n")?) {
        (Some(_), Some(_)) => return Err(Error::input("give N once")),
        (Some(n), None) | (None, Some(n)) => spec.n = n,
        (None, None) => {}
    }
    if let Some(beta) = kv.real("beta")? {
        spec.beta = beta;
    }
    if let Some(m) = kv.count("angular")? {
        spec.n_angular = Some(m);
    }
    if spec.n > MAX_GRID_COUNT || spec.angular() > MAX_GRID_COUNT {
        return Err(Error::input(format!("grid counts must be <= {MAX_GRID_COUNT}")));
    }
    spec.validate()?;
    Ok(spec)
}

/// A parsed map description.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Identity { n: usize },
    Reflection { reflection: CuspReflection, inverse: bool },
    Radial { spec: RadialMapSpec, exact: bool },
}

impl MapSpec {
    pub fn dimension(&self) -> usize {
        match self {
            MapSpec::Identity { n } => *n,
            MapSpec::Reflection { reflection, .. } => reflection.n,
            MapSpec::Radial { spec, .. } => spec.dimension(),
        }
    }

    pub fn build(&self) -> Box<dyn Mapping> {
        match self {
            MapSpec::Identity { n } => Box::new(Identity { n: *n }),
            MapSpec::Reflection { reflection, inverse: false } => Box::new(*reflection),
            MapSpec::Reflection { reflection, inverse: true } => Box::new(InverseReflection(*reflection)),
            MapSpec::Radial { spec, exact } => Box::new(RadialMapping { spec: spec.clone(), exact: *exact }),
        }
    }

    /// Evaluates the jet at a point. Native cusp coordinates go straight to the
    /// coordinate formulas; Cartesian points go through [`Mapping::jet_at`].
    pub fn evaluate(&self, point: &PointSpec) -> Result<MapJet> {
        let n = self.dimension();
        if point.dimension() != n {
            return Err(Error::input(format!(
                "point has dimension {}, map has dimension {n}",
                point.dimension()
            )));
        }
        match (self, point) {
            (MapSpec::Reflection { reflection, inverse: false }, PointSpec::Native(v)) => {
                match reflection.shape {
                    CuspShape::Pick if n == 2 => cusp_reflection_2d(reflection.gamma, v[0], v[1]),
                    CuspShape::Pick => pick_reflection_nd(reflection.gamma, n, v),
                    CuspShape::Ridge => ridge_reflection_nd(reflection.gamma, n, v),
                }
            }
            (MapSpec::Reflection { inverse: true, .. }, PointSpec::Native(_)) => Err(Error::input(
                "the inverse reflection takes Cartesian points (x1=..,x2=..)",
            )),
            (_, PointSpec::Native(_)) => {
                Err(Error::input("native (r,s) points only apply to reflection maps"))
            }
            (_, PointSpec::Cartesian(x)) => self.build().jet_at(x),
        }
    }
}

/// Parses `identity:n=2`, `cusp2d:gamma=1`, `pick:n=3,gamma_tilde=0.5`, `ridge:n=3,gamma=1`
/// (options `model=coordinate|euclidean`, `inverse=true`) and `radial:alphas=a1,a2,..`
/// (option `exact=true`).
pub fn parse_map(text: &str) -> Result<MapSpec> {
    let (head, kv) = split_head(text)?;
    match head {
        "identity" => {
            kv.only("identity", &["n"])?;
            let n = dimension(&kv, Some(2))?;
            if n < 1 {
                return Err(Error::input("dimension must be >= 1"));
            }
            Ok(MapSpec::Identity { n })
        }
        "cusp2d" | "pick" | "ridge" => {
            kv.only(head, &["n", "gamma_tilde", "gamma", "model", "inverse"])?;
            let gamma = cusp_gamma(&kv)?;
            let (n, shape) = match head {
                "cusp2d" => {
                    if dimension(&kv, Some(2))? != 2 {
                        return Err(Error::input("cusp2d requires n = 2"));
                    }
                    (2, CuspShape::Pick)
                }
                "pick" => (dimension(&kv, None)?, CuspShape::Pick),
                _ => (dimension(&kv, None)?, CuspShape::Ridge),
            };
            let model = match kv.single("model")? {
                None | Some("coordinate") => JetModel::Coordinate,
                Some("euclidean") => JetModel::Euclidean,
                Some(other) => {
                    return Err(Error::input(format!(
                        "model must be coordinate or euclidean, got '{other}'"
                    )))
                }
            };
            let reflection = CuspReflection::new(gamma, n, shape)?.with_model(model);
            Ok(MapSpec::Reflection { reflection, inverse: kv.flag("inverse")?.unwrap_or(false) })
        }
        "radial" => {
            kv.only("radial", &["alphas", "exact"])?;
            let alphas = kv
                .reals("alphas")?
                .ok_or_else(|| Error::input("radial map needs alphas=a1,a2,.."))?;
            if alphas.len() > MAX_DIMENSION {
                return Err(Error::input(format!("at most {MAX_DIMENSION} exponents")));
            }
            Ok(MapSpec::Radial {
                spec: RadialMapSpec::new(alphas)?,
                exact: kv.flag("exact")?.unwrap_or(false),
            })
        }
        _ => Err(Error::input(format!(
            "unknown map '{head}' (expected identity, cusp2d, pick, ridge or radial)"
        ))),
    }
}

/// A point in native cusp coordinates `(r, s, θ_2, …)` or Cartesian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    Native(Vec<f64>),
    Cartesian(Vec<f64>),
}

impl PointSpec {
    pub fn dimension(&self) -> usize {
        match self {
            PointSpec::Native(v) | PointSpec::Cartesian(v) => v.len(),
        }
    }
}

/// Parses `r=0.5,s=0.7854[,theta2=..,..][,z=..]`, `r=0.5,theta=1.2` (planar polar,
/// converted to Cartesian), `x=..,y=..` or `x1=..,x2=..,..`.
pub fn parse_point(text: &str) -> Result<PointSpec> {
    let kv = KeyValues::parse(text)?;
    let keys: Vec<&str> = kv.keys().collect();
    if keys.is_empty() {
        return Err(Error::input("empty point"));
    }
    let need = |k: &str| -> Result<f64> {
        kv.real(k)?.ok_or_else(|| Error::input(format!("point is missing '{k}'")))
    };
    if keys.contains(&"s") {
        let extra = keys.iter().filter(|k| k.starts_with("theta")).count();
        let allowed: Vec<String> = ["r", "s", "z"]
            .iter()
            .map(|s| s.to_string())
            .chain((2..2 + extra).map(|i| format!("theta{i}")))
            .collect();
        let allowed: Vec<&str> = allowed.iter().map(String::as_str).collect();
        kv.only("native point", &allowed)?;
        let mut v = vec![need("r")?, need("s")?];
        for i in 2..2 + extra {
            v.push(need(&format!("theta{i}"))?);
        }
        if let Some(z) = kv.real("z")? {
            v.push(z);
        }
        return Ok(PointSpec::Native(v));
    }
    if keys.contains(&"theta") {
        kv.only("polar point", &["r", "theta"])?;
        let (r, t) = (need("r")?, need("theta")?);
        return Ok(PointSpec::Cartesian(vec![r * t.cos(), r * t.sin()]));
    }
    if keys.contains(&"x") {
        kv.only("planar point", &["x", "y"])?;
        return Ok(PointSpec::Cartesian(vec![need("x")?, need("y")?]));
    }
    let n = keys.len();
    if n > MAX_DIMENSION {
        return Err(Error::input(format!("at most {MAX_DIMENSION} coordinates")));
    }
    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    kv.only("Cartesian point", &names)?;
    Ok(PointSpec::Cartesian(names.iter().map(|k| need(k)).collect::<Result<_>>()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainKind;

    #[test]
    fn domains() {
        let d = parse_domain("cusp2d:gamma_tilde=0.5").unwrap();
        assert_eq!(d.kind, DomainKind::Cusp2D);
        assert_eq!(d.gamma, Some(1.0));
        let d = parse_domain("pick:n=3,gamma_tilde=0.5").unwrap();
        assert_eq!((d.kind, d.n), (DomainKind::PickND, 3));
        assert_eq!(parse_domain("ridge:n=4,gamma=2").unwrap().gamma_tilde, Some(1.0 / 3.0));
        assert_eq!(parse_domain("disc").unwrap(), DomainSpec::disc());
        assert_eq!(parse_domain(" square ").unwrap(), DomainSpec::square());
        assert_eq!(parse_domain("ball:n=4").unwrap().n, 4);
    }

    #[test]
    fn domain_errors() {
        let msg = parse_domain("cusp2d:gamma_tilde=1.5").unwrap_err().to_string();
        assert!(msg.contains("(0,1)"), "{msg}");
        for bad in [
            "",
            "cusp2d",
            "cusp2d:gamma_tilde=0.5,gamma=1",
            "cusp2d:gamma=-1",
            "cusp2d:gamma_tilde=nan",
            "pick:gamma_tilde=0.5",
            "ridge:n=2,gamma=1",
            "disc:n=3",
            "ball:n=1",
            "ball:n=99",
            "torus",
            "pick:n=3,n=3,gamma=1",
            "cusp2d:=0.5",
        ] {
            let e = parse_domain(bad).unwrap_err();
            assert!(e.is_validation(), "{bad}: {e}");
        }
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("N=128,beta=2").unwrap(), GridSpec::new(128, 2.0));
        assert_eq!(parse_grid("N=64").unwrap(), GridSpec::new(64, 2.0));
        assert_eq!(parse_grid("").unwrap(), GridSpec::default());
        assert_eq!(parse_grid("n=16,beta=1,angular=32").unwrap().angular(), 32);
        for bad in ["N=4", "beta=0.5", "N=1e3", "N=100000000", "N=16,N=32", "M=3", "beta=inf"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn maps_and_points() {
        let m = parse_map("cusp2d:gamma=1").unwrap();
        let p = parse_point("r=0.5,s=0.7854").unwrap();
        let jet = m.evaluate(&p).unwrap();
        assert!((jet.jacobian.abs() - 0.5 / (std::f64::consts::PI - 0.5)).abs() < 1e-12);

        let m = parse_map("radial:alphas=0.5,1.5,exact=true").unwrap();
        match &m {
            MapSpec::Radial { spec, exact } => {
                assert_eq!(spec.alphas, vec![0.5, 1.5]);
                assert!(exact);
            }
            _ => panic!("expected radial"),
        }
        let jet = m.evaluate(&parse_point("x=0.3,y=0.4").unwrap()).unwrap();
        assert_eq!(jet.image.len(), 2);

        let m = parse_map("pick:n=3,gamma_tilde=0.5").unwrap();
        let jet = m.evaluate(&parse_point("r=0.5,s=0.7854,theta2=0.3").unwrap()).unwrap();
        assert_eq!(jet.image[2], 0.3);

        let m = parse_map("ridge:n=3,gamma=1").unwrap();
        assert!(m.evaluate(&parse_point("r=0.5,s=0.7854,z=0.5").unwrap()).is_ok());

        assert_eq!(parse_point("x1=1,x2=2,x3=3").unwrap(), PointSpec::Cartesian(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse_map("identity").unwrap().dimension(), 2);
        assert!(parse_map("cusp2d:gamma=1,inverse=true").unwrap().evaluate(&p).is_err());
    }

    #[test]
    fn map_errors() {
        for bad in [
            "radial",
            "radial:alphas=1,0.5",
            "radial:alphas=-1,0",
            "radial:alphas=0.5",
            "cusp2d:gamma=1,model=fancy",
            "cusp2d:n=3,gamma=1",
            "pick:gamma=1",
            "cusp2d:gamma=1,inverse=maybe",
            "moebius",
            ",,",
        ] {
            assert!(parse_map(bad).is_err(), "{bad}");
        }
        for bad in ["", "r=0.5", "s=0.1", "x=1", "x1=1,x3=2", "r=0.5,s=0.1,theta3=1", "r=a,s=1"] {
            assert!(parse_point(bad).is_err(), "{bad}");
        }
        let m = parse_map("cusp2d:gamma=1").unwrap();
        assert!(m.evaluate(&parse_point("x1=0.1,x2=0.2,x3=0.3").unwrap()).is_err());
    }
}
