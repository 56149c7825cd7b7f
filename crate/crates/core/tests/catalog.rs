use solitonlab::catalog::{
    builtin, entry_ids, lemma21_audit, schouten_bounds_audit, soliton_residual, EntryParams,
    Exactness, RadialSample, SolitonInstance,
};
use solitonlab::geometry::{
    bianchi_residual, curvature_at, tagged_curvature, weighted_operators_at, BoxDomain, Interval,
    MetricChart,
};
use solitonlab::Expression;

fn entry(id: &str) -> SolitonInstance {
    builtin().unwrap().instance(id).unwrap()
}

#[test]
fn gaussian_is_exact_in_several_dimensions() {
    for n in 2..=4 {
        let s = EntryParams::Gaussian {
            n,
            lambda: 1.0,
            rho: None,
        }
        .build()
        .unwrap();
        let rep = lemma21_audit(&s, &s.sample_points(100, 1)).unwrap();
        assert!(rep.summary.max_soliton <= 1e-10, "{:?}", rep.summary);
        assert!(rep.summary.max_lemma.iter().all(|&v| v <= 1e-8), "{:?}", rep.summary);
    }
}

#[test]
fn product_einstein_is_exact() {
    let s = entry("product-einstein");
    let rep = lemma21_audit(&s, &s.sample_points(50, 2)).unwrap();
    assert!(rep.summary.max_soliton <= 1e-9, "{:?}", rep.summary);
    assert!(rep.summary.max_lemma.iter().all(|&v| v <= 1e-6), "{:?}", rep.summary);
    let r = rep.points[0].scalar;
    assert!((r - 4.0).abs() < 1e-10, "{r}");
}

#[test]
fn exact_entries_pass_lemma_audit() {
    for id in entry_ids() {
        let s = entry(id);
        if s.exactness != Exactness::Exact {
            continue;
        }
        let rep = lemma21_audit(&s, &s.sample_points(100, 3)).unwrap();
        assert!(rep.summary.max_soliton <= 1e-9, "{id}: {:?}", rep.summary);
        assert!(rep.summary.max_lemma.iter().all(|&v| v <= 1e-6), "{id}: {:?}", rep.summary);
        let max = rep.points.iter().map(|p| p.soliton).fold(0.0, f64::max);
        assert_eq!(max, rep.summary.max_soliton);
    }
}

#[test]
fn corrected_example_23_is_exact() {
    let s = EntryParams::Example23 {
        m: 2,
        n: 3,
        c: 1.0,
        alpha: vec![0.6, 0.0, 0.8],
        corrected: true,
    }
    .build()
    .unwrap();
    let rep = lemma21_audit(&s, &s.sample_points(50, 4)).unwrap();
    assert!(rep.summary.max_soliton <= 1e-9, "{:?}", rep.summary);
    assert!(rep.summary.max_lemma.iter().all(|&v| v <= 1e-6), "{:?}", rep.summary);
}

#[test]
fn bianchi_identity_on_every_catalog_metric() {
    for id in entry_ids() {
        let s = entry(id);
        for x in s.sample_points(100, 5) {
            let b = bianchi_residual(&s.metric, &x).unwrap();
            assert!(b <= 1e-5, "{id} at {x:?}: {b:e}");
        }
    }
}

#[test]
fn closed_form_curvature_of_model_spaces() {
    let sphere = entry("sphere");
    let hyp = entry("hyperbolic-plane");
    for x in sphere.sample_points(20, 6) {
        let c = curvature_at(&sphere.metric, &x).unwrap();
        assert!((c.scalar - 2.0).abs() <= 1e-8, "{}", c.scalar);
    }
    for x in hyp.sample_points(20, 7) {
        let c = curvature_at(&hyp.metric, &x).unwrap();
        assert!((c.scalar + 2.0).abs() <= 1e-8, "{}", c.scalar);
        // Ric = −g in two dimensions
        let g = hyp.metric.metric_at(&x).unwrap();
        for (r, gv) in c.ricci.iter().zip(&g) {
            assert!((r + gv).abs() <= 1e-8);
        }
    }
}

#[test]
fn tagged_shortcuts_agree_with_generic_path_on_catalog() {
    for id in entry_ids() {
        let s = entry(id);
        for x in s.sample_points(10, 8) {
            let Some((ric, r)) = tagged_curvature(&s.metric, &x).unwrap() else {
                continue;
            };
            let c = curvature_at(&s.metric, &x).unwrap();
            assert!((c.scalar - r).abs() <= 1e-8 * (1.0 + r.abs()), "{id}");
            for (a, b) in c.ricci.iter().zip(&ric) {
                assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{id}");
            }
        }
        let dev = s.metric.structure_deviation(&s.sample_points(10, 9)).unwrap();
        assert!(dev <= 1e-10, "{id}: {dev}");
    }
}

#[test]
fn scaling_the_metric_scales_scalar_curvature() {
    let s = entry("example-2.2");
    let x = [0.3, -0.4, 1.0];
    let base = curvature_at(&s.metric, &x).unwrap();
    for c in [2.0, 10.0] {
        let coeffs = s
            .metric
            .packed_coefficients()
            .iter()
            .map(|e| Expression::parse(&format!("{c:?}*({e})")).unwrap())
            .collect();
        let scaled = MetricChart::new(s.metric.domain().clone(), coeffs).unwrap();
        let k = curvature_at(&scaled, &x).unwrap();
        assert!((k.scalar - base.scalar / c).abs() <= 1e-8);
        for (a, b) in k.christoffel.iter().zip(&base.christoffel) {
            assert!((a - b).abs() <= 1e-8);
        }
    }
}

#[test]
fn rotational_radial_ricci() {
    let n = 4;
    let mut axes = vec![Interval::open(0.0, 5.0)];
    axes.extend(std::iter::repeat(Interval::open(0.0, std::f64::consts::PI)).take(n - 2));
    axes.push(Interval::REAL_LINE);
    let phi = "sinh(x1) + x1^3/10";
    let m = MetricChart::rotationally_symmetric(BoxDomain { axes }, Expression::parse(phi).unwrap())
        .unwrap();
    let x = [1.2, 0.9, 1.7, 0.4];
    let c = curvature_at(&m, &x).unwrap();
    let r: f64 = x[0];
    let (p, p2) = (r.sinh() + r.powi(3) / 10.0, r.sinh() + 0.6 * r);
    let want = -(n as f64 - 1.0) * p2 / p;
    assert!((c.ricci[0] - want).abs() <= 1e-8, "{} vs {want}", c.ricci[0]);
}

#[test]
fn residual_ignores_constant_shift_of_potential() {
    for id in entry_ids() {
        let s = entry(id);
        let mut shifted = s.clone();
        shifted.f = Expression::parse(&format!("({}) + 3.7", s.f)).unwrap();
        for x in s.sample_points(10, 10) {
            let a = soliton_residual(&s, &x).unwrap();
            let b = soliton_residual(&shifted, &x).unwrap();
            assert!((a - b).abs() <= 1e-12, "{id}: {a} vs {b}");
        }
    }
}

#[test]
fn example_23_scalar_curvature_and_schouten_violation() {
    let s = entry("example-2.3");
    let c = curvature_at(&s.metric, &s.base_point).unwrap();
    assert!((c.scalar + 12.0).abs() <= 1e-8, "{}", c.scalar);
    let samples: Vec<RadialSample> = (0..=20)
        .map(|i| {
            let t = i as f64 * 0.2;
            let mut x = vec![0.0; 5];
            x[1] = t;
            RadialSample {
                distance: t,
                point: x,
            }
        })
        .collect();
    let rep = schouten_bounds_audit(&s, &samples, 1e-9).unwrap();
    assert!(rep.scalar_negative);
    assert!(rep.bounds_violated);
    assert!(rep.min_margins[0] < 0.0);
}

#[test]
fn gaussian_schouten_margins_and_constants() {
    let s = entry("gaussian");
    let samples: Vec<RadialSample> = (0..=40)
        .map(|i| {
            let t = i as f64 * 0.1;
            RadialSample {
                distance: t,
                point: vec![t * 0.6, t * 0.8],
            }
        })
        .collect();
    let rep = schouten_bounds_audit(&s, &samples, 1e-9).unwrap();
    assert!(!rep.bounds_violated, "{:?}", rep.min_margins);
    for smp in &rep.samples {
        assert!(smp.grad_lower_margin.abs() <= 1e-12);
    }
    assert_eq!(rep.a1, Some(0.0));
    assert_eq!(rep.a2, Some(0.0));
    let mut no_hint = s.clone();
    no_hint.f0_hint = None;
    let rep = schouten_bounds_audit(&no_hint, &samples, 1e-9).unwrap();
    assert!(rep.f0_estimated && rep.f0.abs() < 1e-12);
}

#[test]
fn non_schouten_entry_rejected() {
    let s = entry("example-2.1");
    assert!(schouten_bounds_audit(&s, &[], 1e-9).is_err());
}

#[test]
fn claimed_example_findings_are_reported() {
    // example-2.1 at x1 = 1: compare Ric + ∇²f with the stated scalar times g.
    let s = entry("example-2.1");
    let x = [1.0, 0.0, 0.0];
    let w = weighted_operators_at(&s.metric, &s.f, &Expression::parse("x1").unwrap(), &x).unwrap();
    let g = s.metric.metric_at(&x).unwrap();
    let ch: f64 = 1.0f64.cosh();
    let stated = -(2.0 + 4.0 * 2.0f64.cosh()) / (3.0 * ch.powi(4));
    let dev: f64 = (0..9).map(|i| (w.ric_f[i] - stated * g[i]).powi(2)).sum::<f64>().sqrt();
    let residual = soliton_residual(&s, &x).unwrap();
    println!("example-2.1: |Ric_f - printed g| = {dev:.6e}, soliton residual = {residual:.6e}");
    assert!(dev.is_finite() && residual.is_finite());

    let s = entry("example-2.2");
    let r0 = curvature_at(&s.metric, &[0.0; 3]).unwrap().scalar;
    let residual = soliton_residual(&s, &[0.0; 3]).unwrap();
    println!("example-2.2: R(0) = {r0:.6}, printed -4/3, soliton residual = {residual:.6e}");
    // true scalar curvature −(3 + cosh 2x)/cosh⁴x
    assert!((r0 + 4.0).abs() <= 1e-10);
}

mod properties {
    use super::*;
    use proptest::prelude::*;
    use solitonlab::geometry::scalar_curvature;

    fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.5..1.5f64, n)
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

        #[test]
        fn gaussian_family_is_exact(
            (n, x) in (2usize..=5).prop_flat_map(|n| (Just(n), point(n))),
            lambda in 0.1..4.0f64,
            rho in proptest::option::of(-1.0..1.0f64),
        ) {
            let s = EntryParams::Gaussian { n, lambda, rho }.build().unwrap();
            prop_assert!(soliton_residual(&s, &x).unwrap() <= 1e-9);
        }

        #[test]
        fn round_sphere_scalar_curvature(
            (n, x) in (2usize..=4).prop_flat_map(|n| (Just(n), point(n))),
            a in 0.5..3.0f64,
        ) {
            let s = EntryParams::Sphere { n, a }.build().unwrap();
            let r = scalar_curvature(&s.metric, &x).unwrap();
            let want = (n * (n - 1)) as f64 / (a * a);
            prop_assert!((r - want).abs() <= 1e-8 * want.max(1.0), "{} vs {}", r, want);
            prop_assert!(bianchi_residual(&s.metric, &x).unwrap() <= 1e-5);
        }

        #[test]
        fn residual_is_blind_to_constants(x in point(3), c in -50.0..50.0f64) {
            let s = EntryParams::ProductEinstein { n: 3, k: 2, rho: 0.25, lambda: 1.0 }.build().unwrap();
            let mut shifted = s.clone();
            shifted.f = Expression::parse(&format!("({}) + {c:?}", s.f)).unwrap();
            let (a, b) = (soliton_residual(&s, &x).unwrap(), soliton_residual(&shifted, &x).unwrap());
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
