use cusp_extend::distortion::{
    alpha_range, kpq_bound_closed_form, kpq_numeric, kpq_on_grid, kpq_pow_q_bound_closed_form, ExponentPair,
    Verdict,
};
use cusp_extend::geometry::{graded_grid, DomainSpec, GridSpec, Region};
use cusp_extend::maps::{CuspReflection, Identity};
use proptest::prelude::*;

fn cusp_complement(gamma: f64) -> Region {
    Region::complement(DomainSpec::cusp2d_with_gamma(gamma).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Discrete Hölder on a fixed grid: the grid weights play the role of the measure.
    #[test]
    fn holder_consistency(gamma in 0.3f64..3.0, p in 1.2f64..4.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assume!(hi - lo > 1e-3);
        let q1 = 1.0 + lo * (p - 1.0);
        let q2 = 1.0 + hi * (p - 1.0);
        let e1 = ExponentPair::new(p, q1).unwrap();
        let e2 = ExponentPair::new(p, q2).unwrap();
        let refl = CuspReflection::planar(gamma).unwrap();
        let grid = graded_grid(cusp_complement(gamma), GridSpec::new(16, 2.0)).unwrap();
        let measure = grid.weight_sum();
        prop_assert!(measure <= std::f64::consts::PI);
        let k1 = kpq_on_grid(&refl, &grid, &e1).unwrap();
        let k2 = kpq_on_grid(&refl, &grid, &e2).unwrap();
        let scale = measure.powf(1.0 / e1.kappa - 1.0 / e2.kappa);
        prop_assert!(k1 <= k2 * scale * (1.0 + 1e-12), "{k1} > {k2}·{scale}");
    }

    #[test]
    fn identity_normalization(p in 1.1f64..5.0, t in 0.0f64..1.0, which in 0usize..3) {
        let q = 1.0 + t * (p - 1.0);
        let (region, n) = match which {
            0 => (Region::domain(DomainSpec::disc()), 2),
            1 => (Region::domain(DomainSpec::square()), 2),
            _ => (Region::domain(DomainSpec::ball(3).unwrap()), 3),
        };
        let e = ExponentPair::new(p, q).unwrap();
        let grid = graded_grid(region, GridSpec::new(16, 2.0)).unwrap();
        let k = kpq_on_grid(&Identity { n }, &grid, &e).unwrap();
        let expected = if e.is_diagonal() { 1.0 } else { grid.weight_sum().powf(1.0 / e.kappa) };
        prop_assert!((k - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn closed_form_dominance() {
    let mut checked = 0;
    for gamma in [0.5, 1.0, 2.0] {
        for p in [1.5, 2.0, 3.0] {
            let range = alpha_range(gamma, 2, p).unwrap();
            if range.is_empty() {
                continue;
            }
            let alpha = 0.5 * (range.lo + range.hi);
            let exps = ExponentPair::new(p, alpha * p).unwrap();
            let bound = kpq_bound_closed_form(gamma, &exps, 2).unwrap();
            assert!(
                (kpq_pow_q_bound_closed_form(gamma, &exps, 2).unwrap() - bound.powf(exps.q)).abs()
                    < 1e-12 * bound.powf(exps.q)
            );
            let refl = CuspReflection::planar(gamma).unwrap();
            let rep = kpq_numeric(&refl, &cusp_complement(gamma), &exps, GridSpec::new(32, 2.0))
                .unwrap()
                .with_bound(bound);
            assert!(rep.converged, "gamma {gamma}, p {p}: {:?}", rep.refinement_series);
            assert_eq!(rep.dominated(0.02), Some(true), "gamma {gamma}, p {p}: {} > {bound}", rep.estimate);
            checked += 1;
        }
    }
    assert!(checked >= 6);
}

#[test]
fn divergence_above_the_range() {
    for (gamma, p, alpha) in [(1.0, 2.0, 0.9), (0.5, 3.0, 0.95)] {
        let range = alpha_range(gamma, 2, p).unwrap();
        assert!(alpha >= range.hi);
        assert!(kpq_bound_closed_form(gamma, &ExponentPair::new(p, alpha * p).unwrap(), 2).is_err());
        let exps = ExponentPair::new(p, alpha * p).unwrap();
        let refl = CuspReflection::planar(gamma).unwrap();
        let rep = kpq_numeric(&refl, &cusp_complement(gamma), &exps, GridSpec::new(32, 2.0)).unwrap();
        assert_eq!(rep.verdict, Verdict::Diverged, "{:?}", rep.refinement_series);
        let ratios = rep.ratios();
        assert!(ratios.iter().rev().take(3).all(|r| *r >= 1.1), "{ratios:?}");
        assert!(rep.refinement_series.windows(2).all(|w| w[1].1 > w[0].1));
    }
}

#[test]
fn csv_export_lists_the_series() {
    let refl = CuspReflection::planar(1.0).unwrap();
    let exps = ExponentPair::new(2.0, 1.0).unwrap();
    let rep = kpq_numeric(&refl, &cusp_complement(1.0), &exps, GridSpec::new(32, 2.0)).unwrap();
    let csv = rep.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,estimate");
    assert_eq!(lines.len(), rep.refinement_series.len() + 1);
    assert!(lines[1].starts_with("32,"));
}
