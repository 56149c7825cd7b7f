use solitonlab::catalog::{builtin, entry_ids, EntryParams, SolitonInstance};
use solitonlab::geodesic::{
    cut_radius, orthonormal_frame, riccati_audit, shoot, tangent_from_direction, GeodesicRay,
    ShootOptions,
};
use std::f64::consts::PI;
use std::time::Instant;

fn entry(id: &str) -> SolitonInstance {
    builtin().unwrap().instance(id).unwrap()
}

fn circle(k: usize, m: usize) -> Vec<f64> {
    let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
    vec![t.cos(), t.sin()]
}

fn ray(s: &SolitonInstance, theta: &[f64], r_max: f64) -> GeodesicRay {
    let frame = orthonormal_frame(&s.metric, &s.base_point).unwrap();
    let v = tangent_from_direction(&frame, theta);
    let opts = ShootOptions {
        r_max,
        ..Default::default()
    };
    shoot(&s.metric, Some(&s.f), &s.base_point, &v, &opts).unwrap()
}

#[test]
fn euclidean_area_element() {
    for n in [2usize, 3, 4] {
        let s = EntryParams::EuclideanFlat { n }.build().unwrap();
        let mut theta = vec![0.0; n];
        theta[0] = 0.6;
        theta[n - 1] = 0.8;
        let r = ray(&s, &theta, 3.0);
        for smp in r.samples.iter().skip(1) {
            let want = smp.r.powi(n as i32 - 1);
            assert!((smp.jacobian - want).abs() <= 1e-10 * want.max(1.0));
            assert!((smp.w - (n as f64 - 1.0) / smp.r).abs() <= 1e-8 / smp.r.powi(2));
        }
        assert!(cut_radius(&r).is_none());
    }
}

#[test]
fn round_sphere_area_element_and_conjugate_radius() {
    let s = entry("sphere");
    for k in 0..16 {
        let r = ray(&s, &circle(k, 16), 10.0);
        let conj = cut_radius(&r).expect("conjugate point");
        assert!((conj - PI).abs() <= 1e-4, "direction {k}: {conj}");
        for smp in r.samples.iter().filter(|s| s.r <= PI) {
            assert!((smp.jacobian - smp.r.sin()).abs() <= 1e-7, "{} {}", smp.r, smp.jacobian);
        }
        assert!(r.max_energy_drift <= 1e-8, "{}", r.max_energy_drift);
    }
}

#[test]
fn three_sphere_conjugate_radius() {
    let s = EntryParams::Sphere { n: 3, a: 1.0 }.build().unwrap();
    let theta = [0.0, 0.6, 0.8];
    let r = ray(&s, &theta, 10.0);
    let conj = cut_radius(&r).expect("conjugate point");
    assert!((conj - PI).abs() <= 1e-4, "{conj}");
    // det A = sin² r touches zero without changing sign
    let mid = r.samples.iter().find(|s| (s.r - 3.0).abs() < 1e-9).unwrap();
    assert!((mid.jacobian - 3.0f64.sin().powi(2)).abs() < 1e-7);
}

#[test]
fn hyperbolic_plane_area_element() {
    let s = entry("hyperbolic-plane");
    let r = ray(&s, &circle(3, 16), 10.0);
    assert!(cut_radius(&r).is_none());
    assert!(r.left_domain_at.is_none());
    for smp in r.samples.iter().skip(1) {
        let want = smp.r.sinh();
        assert!((smp.jacobian - want).abs() <= 1e-7 * want.max(1.0), "{} {}", smp.r, smp.jacobian);
    }
}

#[test]
fn area_element_is_isotropic_on_model_spaces() {
    for id in ["sphere", "hyperbolic-plane"] {
        let s = entry(id);
        let rays: Vec<GeodesicRay> = (0..16).map(|k| ray(&s, &circle(k, 16), 2.5)).collect();
        for i in 0..rays[0].samples.len() {
            let vals: Vec<f64> = rays.iter().map(|r| r.samples[i].jacobian).collect();
            let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min);
            assert!(spread <= 1e-6, "{id} r = {}: {spread}", rays[0].samples[i].r);
        }
    }
}

#[test]
fn small_radius_series_and_energy() {
    for id in entry_ids() {
        let s = entry(id);
        let n = s.dim();
        let mut theta = vec![0.0; n];
        theta[0] = 0.8;
        theta[1] = -0.6;
        let r = ray(&s, &theta, 1.0);
        let first = &r.samples[1];
        let ratio = first.jacobian / first.r.powi(n as i32 - 1);
        assert!((ratio - 1.0).abs() <= 1e-4, "{id}: {ratio}");
        assert!(r.max_energy_drift <= 1e-8, "{id}: {}", r.max_energy_drift);
    }
}

#[test]
fn rk4_is_fourth_order() {
    let s = entry("example-2.2");
    let frame = orthonormal_frame(&s.metric, &s.base_point).unwrap();
    let v = tangent_from_direction(&frame, &[0.8, 0.0, 0.6]);
    let run = |h: f64| {
        let opts = ShootOptions {
            h,
            r_max: 1.0,
            stop_at_conjugate: true,
        };
        shoot(&s.metric, None, &s.base_point, &v, &opts).unwrap()
    };
    let reference = run(1.25e-3 / 8.0);
    let err = |r: &GeodesicRay| {
        let a = &r.samples.last().unwrap().x;
        let b = &reference.samples.last().unwrap().x;
        a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    };
    let coarse = err(&run(1e-2));
    let fine = err(&run(5e-3));
    assert!(coarse / fine >= 12.0, "{coarse:e} / {fine:e}");
}

#[test]
fn riccati_equality_cases() {
    let flat = EntryParams::EuclideanFlat { n: 2 }.build().unwrap();
    let r = ray(&flat, &circle(1, 16), 3.0);
    for p in riccati_audit(&r) {
        assert!(p.slack.abs() <= 1e-6, "r = {}: {}", p.r, p.slack);
    }
    let s = entry("sphere");
    let r = ray(&s, &circle(5, 16), 10.0);
    let audit = riccati_audit(&r);
    let half = audit.iter().min_by(|a, b| (a.r - PI / 2.0).abs().total_cmp(&(b.r - PI / 2.0).abs())).unwrap();
    assert!(half.slack.abs() <= 1e-6, "{:?}", half);
}

#[test]
fn riccati_inequality_on_catalog() {
    for id in entry_ids() {
        let s = entry(id);
        let n = s.dim();
        let t = Instant::now();
        for k in 0..16 {
            let mut theta = vec![0.0; n];
            let c = circle(k, 16);
            theta[0] = c[0];
            theta[n - 1] = c[1];
            let r = ray(&s, &theta, 10.0);
            let worst = riccati_audit(&r).iter().map(|p| p.slack).fold(f64::MIN, f64::max);
            assert!(worst <= 1e-5, "{id} direction {k}: {worst:e}");
        }
        println!("{id}: {:.2?}", t.elapsed());
    }
}

#[test]
fn csv_dump_has_expected_columns() {
    let s = entry("gaussian");
    let r = ray(&s, &circle(0, 8), 0.01);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("r,x1,x2,J,w,Ric_rr,f\n"));
    assert_eq!(text.lines().count(), r.samples.len() + 1);
}
