use std::sync::Arc;

use cusp_extend::distortion::{alpha_range, ExponentPair};
use cusp_extend::extension::{
    extend, gradient_seminorm, verify_manifest, Catalogue, ExtensionGrids, FunctionManifest, GradientMode,
    LinearCombination, SampledFunction, ScalarField,
};
use cusp_extend::geometry::{gamma_from_tilde, graded_grid, DomainSpec, GridSpec, Region};
use proptest::prelude::*;

fn field(c: Catalogue) -> Arc<dyn ScalarField> {
    Arc::new(c)
}

fn battery() -> Vec<Arc<dyn ScalarField>> {
    vec![
        field(Catalogue::Constant { value: 1.0 }),
        field(Catalogue::Coordinate { axis: 0 }),
        field(Catalogue::Coordinate { axis: 1 }),
        field(Catalogue::Square { axis: 0 }),
        field(Catalogue::Saddle),
        field(Catalogue::RadialCos { power: 0.6 }),
    ]
}

#[test]
fn restriction_is_exact_on_the_cusp() {
    for domain in [DomainSpec::cusp2d(0.5).unwrap(), DomainSpec::pick(3, 0.5).unwrap(), DomainSpec::ridge(3, 0.5).unwrap()]
    {
        let region = Region::domain(domain);
        let grid = graded_grid(region, GridSpec::new(16, 2.0).with_angular(8)).unwrap();
        for f in [field(Catalogue::Coordinate { axis: 1 }), field(Catalogue::RadialPower { power: 1.5 })] {
            let sampled = SampledFunction::new(region, f);
            let ext = extend(&sampled).unwrap();
            for node in grid.nodes() {
                assert_eq!(ext.value(&node.point).unwrap(), sampled.value(&node.point).unwrap());
                assert_eq!(ext.gradient(&node.point).unwrap(), sampled.gradient(&node.point).unwrap());
            }
        }
    }
}

#[test]
fn extension_is_defined_on_the_complement() {
    let domain = DomainSpec::pick(3, 0.5).unwrap();
    let ext = extend(&SampledFunction::new(Region::domain(domain), field(Catalogue::Saddle))).unwrap();
    let grid = graded_grid(Region::complement(domain).unwrap(), GridSpec::new(12, 2.0).with_angular(6)).unwrap();
    for node in grid.nodes() {
        assert!(ext.value(&node.point).unwrap().is_finite());
        assert!(ext.gradient(&node.point).unwrap().iter().all(|g| g.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linearity(a in -5.0f64..5.0, b in -5.0f64..5.0, i in 0usize..6, j in 0usize..6, tilde in 0.2f64..0.8) {
        let domain = DomainSpec::cusp2d(tilde).unwrap();
        let region = Region::domain(domain);
        let fs = battery();
        let (f, g) = (fs[i].clone(), fs[j].clone());
        let combo: Arc<dyn ScalarField> = Arc::new(LinearCombination { terms: vec![(a, f.clone()), (b, g.clone())] });
        let ef = extend(&SampledFunction::new(region, f)).unwrap();
        let eg = extend(&SampledFunction::new(region, g)).unwrap();
        let ec = extend(&SampledFunction::new(region, combo)).unwrap();
        let grid = graded_grid(Region::complement(domain).unwrap(), GridSpec::new(8, 2.0)).unwrap();
        for node in grid.nodes() {
            let x = &node.point;
            let lhs = ec.value(x).unwrap();
            let rhs = a * ef.value(x).unwrap() + b * eg.value(x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
            let gl = ec.gradient(x).unwrap();
            let gf = ef.gradient(x).unwrap();
            let gg = eg.gradient(x).unwrap();
            for k in 0..2 {
                let expected = a * gf[k] + b * gg[k];
                prop_assert!((gl[k] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn seminorm_homogeneity(c in prop_oneof![Just(-3.0), Just(0.1), Just(7.0), -10.0f64..10.0], i in 1usize..6, p in 1.0f64..4.0) {
        let domain = DomainSpec::cusp2d(0.5).unwrap();
        let region = Region::domain(domain);
        let f = battery()[i].clone();
        let scaled: Arc<dyn ScalarField> = Arc::new(LinearCombination { terms: vec![(c, f.clone())] });
        let grid = graded_grid(region, GridSpec::new(16, 2.0)).unwrap();
        let base = gradient_seminorm(&SampledFunction::new(region, f), p, &grid).unwrap();
        let s = gradient_seminorm(&SampledFunction::new(region, scaled), p, &grid).unwrap();
        prop_assert!((s - c.abs() * base).abs() <= 1e-12 * c.abs() * base);
    }
}

#[test]
fn chain_rule_agrees_with_differences_of_the_composition() {
    let domain = DomainSpec::cusp2d(0.5).unwrap();
    let region = Region::domain(domain);
    let grid = graded_grid(Region::complement(domain).unwrap(), GridSpec::new(16, 2.0)).unwrap();
    for f in battery() {
        let analytic = extend(&SampledFunction::new(region, f.clone())).unwrap();
        let differenced = extend(&SampledFunction::new(region, f)).unwrap().with_mode(GradientMode::CentralDifference(1e-7));
        for node in grid.nodes().iter().filter(|n| n.native[0] > 0.05) {
            let ga = analytic.gradient(&node.point).unwrap();
            let gd = differenced.gradient(&node.point).unwrap();
            let scale = 1.0 + ga[0].abs().max(ga[1].abs());
            assert!((ga[0] - gd[0]).abs() < 1e-4 * scale && (ga[1] - gd[1]).abs() < 1e-4 * scale, "{ga:?} vs {gd:?}");
        }
    }
}

#[test]
fn norm_inequality_across_configurations() {
    let manifest = FunctionManifest::standard();
    let grids = ExtensionGrids { cusp: GridSpec::new(48, 2.0), complement: GridSpec::new(48, 2.0) };
    let mut configs = 0;
    for tilde in [0.3, 0.5, 0.7] {
        let gamma = gamma_from_tilde(tilde);
        let domain = DomainSpec::cusp2d(tilde).unwrap();
        for p in [2.0, 3.0, 4.0] {
            let range = alpha_range(gamma, 2, p).unwrap();
            if range.is_empty() {
                continue;
            }
            for t in [0.0, 0.5] {
                let alpha = range.lo + t * (range.hi - range.lo);
                let exps = ExponentPair::new(p, alpha * p).unwrap();
                let checks = verify_manifest(&manifest, &domain, &exps, GradientMode::Analytic, &grids).unwrap();
                for c in &checks {
                    assert!(c.pass, "tilde {tilde}, p {p}, q {}: {} {} > {}", exps.q, c.name, c.lhs, c.rhs);
                }
                configs += 1;
            }
        }
    }
    assert!(configs >= 8, "{configs}");
}

#[test]
fn manifest_round_trip_and_rejection() {
    let text = "[[function]]\nname = \"x\"\nkind = \"coordinate\"\naxis = 0\n\n[[function]]\nname = \"rc\"\nkind = \"radial_cos\"\npower = 0.6\n";
    let m = FunctionManifest::from_toml(text).unwrap();
    assert_eq!(m.functions.len(), 2);
    assert_eq!(m.functions[1].function, Catalogue::RadialCos { power: 0.6 });
    assert!(FunctionManifest::from_toml("[[function]]\nname = \"x\"\nkind = \"nope\"\n").is_err());
    assert!(FunctionManifest::from_toml("[[function]]\nname = \"x\"\nkind = \"coordinate\"\naxis = 0\nextra = 1\n").is_err());
    let bad_axis = FunctionManifest::from_toml("[[function]]\nname = \"x\"\nkind = \"coordinate\"\naxis = 5\n").unwrap();
    assert!(bad_axis.validate(2).is_err());
    assert!(FunctionManifest::standard().validate(2).is_ok());
}
