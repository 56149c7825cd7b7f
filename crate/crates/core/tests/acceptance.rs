//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use serde_json::Value;
use solitonlab::catalog::{
    builtin, entry_ids, lemma21_audit, soliton_residual, EntryParams, Exactness, SolitonInstance,
};
use solitonlab::geodesic::{orthonormal_frame, riccati_audit, shoot, tangent_from_direction, GeodesicRay, ShootOptions};
use solitonlab::geometry::{bianchi_residual, curvature_at};
use solitonlab::scenario::{run, RunOptions, Scenario};
use solitonlab::spectral::{smallest_nonzero, theorem12_audit, SpectralProblem, TRUNCATION_WIDTHS};
use solitonlab::volume::{
    ball_volume, compare, weighted_ball_volume, ComparisonOptions, SphereGrid, DEFAULT_VOLUME_STEP,
};
use solitonlab::{Expression, MetricChart};
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

const SOLITON_TOL: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-8;
const PRODUCT_TOL: f64 = 1e-8;
const FAST_SECONDS: f64 = 5.0;
const BIANCHI_TOL: f64 = 1e-5;
const CLOSED_FORM_TOL: f64 = 1e-8;
const RICCATI_SLACK_TOL: f64 = 1e-5;
const RICCATI_EQUALITY_TOL: f64 = 1e-6;
const RICCATI_DIRECTIONS: usize = 16;
const EUCLIDEAN_VOLUME_TOL: f64 = 1e-3;
const HEMISPHERE_TOL: f64 = 2e-3;
const REFINEMENT_TOL: f64 = 2e-3;
const VOLUME_SECONDS: f64 = 60.0;
const BOUND_MARGIN_TOL: f64 = 5e-3;
const BOUND_EQUALITY_TOL: f64 = 5e-3;
const QUADRATURE_TOL: f64 = 3e-3;
const RADII: [f64; 3] = [0.5, 1.0, 2.0];
const OU_WINDOW: (f64, f64) = (0.99, 1.01);
const OU_SECONDS: f64 = 30.0;
const PAIRING_TOL: f64 = 1e-3;
const SCALAR_TOL: f64 = 1e-8;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn entry(id: &str) -> std::result::Result<SolitonInstance, String> {
    builtin().map_err(fail)?.instance(id).map_err(fail)
}

fn gaussian(n: usize) -> std::result::Result<SolitonInstance, String> {
    EntryParams::Gaussian { n, lambda: 1.0, rho: None }.build().map_err(fail)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("solitonlab-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn scenario_file(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

/// `2π∫₀^R g(s) s ds` by a 20000-panel midpoint rule.
fn radial_quadrature(g: impl Fn(f64) -> f64, r: f64) -> f64 {
    let m = 20_000;
    let ds = r / m as f64;
    2.0 * PI * (0..m).map(|i| (i as f64 + 0.5) * ds).map(|s| g(s) * s * ds).sum::<f64>()
}

fn unit_ball(n: usize) -> f64 {
    match n {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => unreachable!(),
    }
}

fn gaussian_exactness() -> Check {
    let t = Instant::now();
    let (mut worst_sol, mut worst_id) = (0.0f64, 0.0f64);
    for n in 2..=4 {
        let s = gaussian(n)?;
        let rep = lemma21_audit(&s, &s.sample_points(100, 11 + n as u64)).map_err(fail)?;
        let id = rep.summary.max_lemma.iter().copied().fold(0.0, f64::max);
        ensure(rep.summary.max_soliton <= SOLITON_TOL, || format!("n = {n}: soliton residual {:.3e}", rep.summary.max_soliton))?;
        ensure(id <= IDENTITY_TOL, || format!("n = {n}: identity residual {id:.3e}"))?;
        worst_sol = worst_sol.max(rep.summary.max_soliton);
        worst_id = worst_id.max(id);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < FAST_SECONDS, || format!("took {secs:.2} s"))?;
    Ok(format!("n = 2..4, soliton {worst_sol:.1e}, identities {worst_id:.1e}, {secs:.2} s"))
}

fn product_einstein_exactness() -> Check {
    let t = Instant::now();
    let s = EntryParams::ProductEinstein { n: 3, k: 2, rho: 0.25, lambda: 1.0 }.build().map_err(fail)?;
    // fiber S²(a) has R = 2/a²
    let r = curvature_at(&s.metric, &s.base_point).map_err(fail)?.scalar;
    let a = (2.0 / r).sqrt();
    ensure((a - 0.5f64.sqrt()).abs() <= CLOSED_FORM_TOL, || format!("fiber radius {a}"))?;
    let rep = lemma21_audit(&s, &s.sample_points(100, 21)).map_err(fail)?;
    let id = rep.summary.max_lemma.iter().copied().fold(0.0, f64::max);
    ensure(rep.summary.max_soliton <= PRODUCT_TOL && id <= PRODUCT_TOL, || {
        format!("soliton {:.3e}, identities {id:.3e}", rep.summary.max_soliton)
    })?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < FAST_SECONDS, || format!("took {secs:.2} s"))?;
    Ok(format!("fiber radius {a:.6}, soliton {:.1e}, identities {id:.1e}, {secs:.2} s", rep.summary.max_soliton))
}

fn curvature_engine() -> Check {
    let mut worst = 0.0f64;
    for id in entry_ids() {
        let s = entry(id)?;
        for x in s.sample_points(50, 31) {
            let b = bianchi_residual(&s.metric, &x).map_err(fail)?;
            ensure(b <= BIANCHI_TOL, || format!("{id} at {x:?}: Bianchi {b:.3e}"))?;
            worst = worst.max(b);
        }
    }
    let mut closed = 0.0f64;
    for (id, scalar) in [("sphere", 2.0), ("hyperbolic-plane", -2.0)] {
        let s = entry(id)?;
        for x in s.sample_points(50, 32) {
            let c = curvature_at(&s.metric, &x).map_err(fail)?;
            let g = s.metric.metric_at(&x).map_err(fail)?;
            let ric = c.ricci.iter().zip(&g).map(|(r, gv)| (r - scalar / 2.0 * gv).abs()).fold(0.0, f64::max);
            let err = (c.scalar - scalar).abs().max(ric);
            ensure(err <= CLOSED_FORM_TOL, || format!("{id} at {x:?}: {err:.3e}"))?;
            closed = closed.max(err);
        }
    }
    Ok(format!("Bianchi {worst:.1e} over {} entries, model spaces {closed:.1e}", entry_ids().len()))
}

fn direction(n: usize, k: usize) -> Vec<f64> {
    let t = 2.0 * PI * (k as f64 + 0.5) / RICCATI_DIRECTIONS as f64;
    let mut theta = vec![0.0; n];
    theta[0] = t.cos();
    theta[n - 1] = t.sin();
    theta
}

fn ray(s: &SolitonInstance, theta: &[f64], r_max: f64) -> std::result::Result<GeodesicRay, String> {
    let frame = orthonormal_frame(&s.metric, &s.base_point).map_err(fail)?;
    let v = tangent_from_direction(&frame, theta);
    // stops at the first conjugate point
    let opts = ShootOptions { r_max, stop_at_conjugate: true, ..Default::default() };
    shoot(&s.metric, Some(&s.f), &s.base_point, &v, &opts).map_err(fail)
}

fn riccati() -> Check {
    let mut worst = f64::MIN;
    for id in entry_ids() {
        let s = entry(id)?;
        for k in 0..RICCATI_DIRECTIONS {
            let r = ray(&s, &direction(s.dim(), k), 10.0)?;
            let w = riccati_audit(&r).iter().map(|p| p.slack).fold(f64::MIN, f64::max);
            ensure(w <= RICCATI_SLACK_TOL, || format!("{id} direction {k}: slack {w:.3e}"))?;
            worst = worst.max(w);
        }
    }
    let flat = EntryParams::EuclideanFlat { n: 2 }.build().map_err(fail)?;
    let mut flat_eq = 0.0f64;
    for k in 0..RICCATI_DIRECTIONS {
        for p in riccati_audit(&ray(&flat, &direction(2, k), 3.0)?) {
            flat_eq = flat_eq.max(p.slack.abs());
        }
    }
    ensure(flat_eq <= RICCATI_EQUALITY_TOL, || format!("Euclidean equality off by {flat_eq:.3e}"))?;
    let sphere = entry("sphere")?;
    let audit = riccati_audit(&ray(&sphere, &direction(2, 5), 10.0)?);
    let half = audit
        .iter()
        .min_by(|a, b| (a.r - PI / 2.0).abs().total_cmp(&(b.r - PI / 2.0).abs()))
        .ok_or("empty sphere audit")?;
    ensure((half.r - PI / 2.0).abs() <= 1e-3, || format!("no sample near pi/2, nearest {}", half.r))?;
    ensure(half.slack.abs() <= RICCATI_EQUALITY_TOL, || format!("S² slack at pi/2: {:.3e}", half.slack))?;
    Ok(format!(
        "max slack {worst:.1e} over {} entries x {RICCATI_DIRECTIONS} directions, equality {flat_eq:.1e} (R²), {:.1e} (S²)",
        entry_ids().len(),
        half.slack.abs()
    ))
}

fn ball_volumes() -> Check {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let m = MetricChart::euclidean(n).map_err(fail)?;
        let grid = SphereGrid::default_for(n).map_err(fail)?;
        let v = ball_volume(&m, &vec![0.0; n], &RADII, &grid, DEFAULT_VOLUME_STEP).map_err(fail)?;
        for (got, r) in v.iter().zip(RADII) {
            let e = rel(*got, unit_ball(n) * r.powi(n as i32));
            ensure(e <= EUCLIDEAN_VOLUME_TOL, || format!("n = {n}, r = {r}: {got} off by {e:.2e}"))?;
            worst = worst.max(e);
        }
    }
    let s = entry("sphere")?;
    let grid = SphereGrid::default_for(2).map_err(fail)?;
    let hemi = ball_volume(&s.metric, s.center(), &[PI / 2.0], &grid, DEFAULT_VOLUME_STEP).map_err(fail)?[0];
    let he = rel(hemi, 2.0 * PI);
    ensure(he <= HEMISPHERE_TOL, || format!("hemisphere {hemi} off by {he:.2e}"))?;
    let cases: Vec<(MetricChart, Vec<f64>, f64)> = vec![
        (MetricChart::euclidean(2).map_err(fail)?, vec![0.0; 2], 2.0),
        (MetricChart::euclidean(3).map_err(fail)?, vec![0.0; 3], 1.0),
        (s.metric.clone(), s.center().to_vec(), PI / 2.0),
        (entry("product-einstein")?.metric, vec![0.0; 3], 1.0),
    ];
    let mut refine = 0.0f64;
    for (m, p, r) in cases {
        let n = m.dim();
        let coarse = ball_volume(&m, &p, &[r], &SphereGrid::default_for(n).map_err(fail)?, DEFAULT_VOLUME_STEP);
        let fine = ball_volume(&m, &p, &[r], &SphereGrid::refined_for(n).map_err(fail)?, DEFAULT_VOLUME_STEP / 2.0);
        let (c, f) = (coarse.map_err(fail)?[0], fine.map_err(fail)?[0]);
        let e = rel(c, f);
        ensure(e <= REFINEMENT_TOL, || format!("n = {n}, r = {r}: refinement moves {c} to {f}"))?;
        refine = refine.max(e);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < VOLUME_SECONDS, || format!("took {secs:.1} s"))?;
    Ok(format!("Euclidean {worst:.1e}, hemisphere {he:.1e}, refinement {refine:.1e}, {secs:.1} s"))
}

fn unweighted_bound() -> Check {
    let opts = ComparisonOptions { radii: RADII.to_vec(), ..Default::default() };
    let mut worst = f64::INFINITY;
    for s in [gaussian(2)?, gaussian(3)?, entry("product-einstein")?] {
        let rep = compare(&s, &opts).map_err(fail)?;
        ensure(rep.rows.len() == RADII.len(), || format!("{}: unreachable radii {:?}", s.id, rep.unreachable_radii))?;
        for row in &rep.rows {
            let m = row.margin13 / row.vol;
            ensure(m >= -BOUND_MARGIN_TOL, || format!("{} n = {}, r = {}: margin {m:.3e}", s.id, s.dim(), row.r))?;
            if s.id == "gaussian" {
                ensure(m.abs() <= BOUND_EQUALITY_TOL, || format!("gaussian n = {}, r = {}: not equal, {m:.3e}", s.dim(), row.r))?;
            }
            worst = worst.min(m);
        }
    }
    let g = compare(&gaussian(2)?, &ComparisonOptions { radii: vec![1.0], ..Default::default() }).map_err(fail)?;
    let pi = rel(g.rows[0].bound13, PI);
    ensure(pi <= BOUND_EQUALITY_TOL, || format!("n = 2, r = 1 bound {} is not pi", g.rows[0].bound13))?;
    Ok(format!("min relative margin {worst:.2e}, n = 2 r = 1 bound {:.6}", g.rows[0].bound13))
}

fn weighted_bound() -> Check {
    let opts = ComparisonOptions { radii: RADII.to_vec(), ..Default::default() };
    let mut checked = Vec::new();
    let mut findings = Vec::new();
    for id in entry_ids() {
        let s = entry(id)?;
        let rep = compare(&s, &opts).map_err(fail)?;
        let ok = rep.rows.iter().all(|r| r.holds14);
        if s.exactness == Exactness::Exact {
            // instances with λ = 0 or no geodesic ball in the chart still get rows
            ensure(ok, || format!("{id}: {:?}", rep.rows.iter().find(|r| !r.holds14)))?;
            checked.push(id);
        } else if !ok {
            findings.push(id);
        }
    }
    for n in [2, 3] {
        let rep = compare(&gaussian(n)?, &opts).map_err(fail)?;
        for row in &rep.rows {
            let e = rel(row.bound14, row.volf);
            ensure(e <= BOUND_EQUALITY_TOL, || format!("gaussian n = {n}, r = {}: off by {e:.2e}", row.r))?;
        }
    }
    let s = gaussian(2)?;
    let vf = weighted_ball_volume(&s, &[0.0, 0.0], &[2.0], &SphereGrid::default_for(2).map_err(fail)?, DEFAULT_VOLUME_STEP)
        .map_err(fail)?[0];
    let oracle = radial_quadrature(|s| (-0.5 * s * s).exp(), 2.0);
    let closed = 2.0 * PI * (1.0 - (-2.0f64).exp());
    ensure((oracle - closed).abs() <= 1e-8, || format!("quadrature oracle {oracle} vs {closed}"))?;
    let e = rel(vf, oracle);
    ensure(e <= QUADRATURE_TOL, || format!("Vol_f = {vf}, oracle {oracle}"))?;
    Ok(format!(
        "holds on {} exact entries, Vol_f(2) = {vf:.4} vs {oracle:.4}; claimed entries violating: {findings:?}",
        checked.len()
    ))
}

fn gaussian_growth_bound() -> Check {
    let radii: Vec<f64> = (1..=8).map(|i| i as f64 * 0.5).collect();
    let rep = compare(&gaussian(2)?, &ComparisonOptions { radii, delta: Some(0.0), ..Default::default() }).map_err(fail)?;
    let c = rep.corollary15.as_ref().ok_or("no growth constants found")?;
    ensure(c.r0 <= 2.0, || format!("r0 = {}", c.r0))?;
    let rows: Vec<_> = rep.rows.iter().filter(|r| r.r >= c.r0).collect();
    ensure(rows.last().map(|r| r.r) == Some(4.0), || "grid does not reach r = 4".into())?;
    for row in &rows {
        ensure(row.holds15 == Some(true), || format!("r = {}: {:?} vs {}", row.r, row.bound15, row.volf))?;
    }
    let row = rep.rows.iter().find(|r| r.r == 1.0).ok_or("no row at r = 1")?;
    let b = row.bound15.ok_or("no bound at r = 1")?;
    let oracle = radial_quadrature(|s| (0.5 * s * s).exp(), 1.0);
    let closed = 2.0 * PI * (0.5f64.exp() - 1.0);
    ensure((oracle - closed).abs() <= 1e-8, || format!("quadrature oracle {oracle} vs {closed}"))?;
    ensure(rel(b, oracle) <= QUADRATURE_TOL, || format!("bound {b} vs {oracle}"))?;
    Ok(format!("r0 = {}, holds on {} radii up to 4, bound(1) = {b:.4} vs {oracle:.4}", c.r0, rows.len()))
}

fn spectral_gap() -> Check {
    let t = Instant::now();
    let ou = SpectralProblem::new(1, 10.0, 2001, Expression::parse("x1^2/2").map_err(fail)?).map_err(fail)?;
    let l1 = smallest_nonzero(&ou, 2).map_err(fail)?.lambda1();
    let secs = t.elapsed().as_secs_f64();
    ensure((OU_WINDOW.0..=OU_WINDOW.1).contains(&l1), || format!("1-d lambda1 = {l1}"))?;
    ensure(secs < OU_SECONDS, || format!("1-d solve took {secs:.1} s"))?;

    let g = gaussian(2)?;
    let rep = theorem12_audit(&g, &SpectralProblem::for_instance(&g, 8.0, 401).map_err(fail)?).map_err(fail)?;
    let e = &rep.result.eigenvalues;
    let pair = (e[2] - e[1]).abs();
    ensure(pair <= PAIRING_TOL && (e[1] - 1.0).abs() <= 0.01, || format!("2-d eigenvalues {e:?}"))?;
    ensure(rep.holds, || format!("lambda1 = {} < lambda - eps = {}", rep.lambda1, rep.lambda - rep.refinement_error))?;

    let flat = EntryParams::EuclideanFlat { n: 2 }.build().map_err(fail)?;
    let ctl = theorem12_audit(&flat, &SpectralProblem::for_instance(&flat, 8.0, 201).map_err(fail)?).map_err(fail)?;
    let series: Vec<f64> = ctl.truncation.iter().map(|t| t.eigenvalues[1]).collect();
    ensure(ctl.truncation.iter().map(|t| t.half_width).eq(TRUNCATION_WIDTHS), || "unexpected widths".into())?;
    ensure(series.windows(2).all(|w| w[1] < w[0]) && ctl.no_spectral_gap, || format!("f = 0: lambda1 {series:?}"))?;
    Ok(format!(
        "1-d lambda1 = {l1:.6} in {secs:.1} s; 2-d lambda1 = {:.6}, pair split {pair:.1e}, eps = {:.1e}; f = 0 lambda1 {:?}",
        rep.lambda1,
        rep.refinement_error,
        series.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
    ))
}

fn example_finding() -> Check {
    let sc = Scenario::load(&scenario_file("example-2.3-audit.json")).map_err(fail)?;
    let dir = scratch("ex23");
    let o = run(&sc, &RunOptions { out_dir: Some(dir.clone()), ..Default::default() }).map_err(fail)?;
    let text = std::fs::read_to_string(dir.join("report.json")).map_err(fail)?;
    let _ = std::fs::remove_dir_all(&dir);
    let r: Value = serde_json::from_str(&text).map_err(fail)?;
    let s = sc.soliton.instance().map_err(fail)?;
    ensure(s.dim() == 5, || format!("dimension {}", s.dim()))?;
    let sch = &r["tasks"]["schouten-bounds"]["details"];
    let scalar = sch["scalar_at_base"].as_f64().ok_or("no scalar_at_base in report")?;
    ensure((scalar + 12.0).abs() <= SCALAR_TOL, || format!("R(0) = {scalar}"))?;
    ensure(sch["bounds_violated"] == true, || "no violation flag".into())?;
    ensure(o.exit_code == 0 && r["exit_code"] == 0, || format!("exit code {}", o.exit_code))?;
    // the unmodified potential is not a soliton; the report should say so without failing
    let residual = soliton_residual(&s, &s.base_point).map_err(fail)?;
    Ok(format!("R(0) = {scalar:.9}, violation flagged, exit 0 (soliton residual at base {residual:.2e})"))
}

fn determinism() -> Check {
    let sc = Scenario::load(&scenario_file("gaussian-full.json")).map_err(fail)?;
    let mut reports = Vec::new();
    for tag in ["a", "b"] {
        let dir = scratch(&format!("det-{tag}"));
        let o = run(&sc, &RunOptions { out_dir: Some(dir.clone()), ..Default::default() }).map_err(fail)?;
        ensure(o.exit_code == 0, || format!("run {tag} exited {}", o.exit_code))?;
        reports.push(std::fs::read(dir.join("report.json")).map_err(fail)?);
        let _ = std::fs::remove_dir_all(&dir);
    }
    ensure(reports[0] == reports[1], || "report.json differs between runs".into())?;
    Ok(format!("two runs, {} identical bytes", reports[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("gaussian exactness", gaussian_exactness),
        ("product-einstein exactness", product_einstein_exactness),
        ("curvature engine", curvature_engine),
        ("riccati inequality", riccati),
        ("ball volumes", ball_volumes),
        ("unweighted volume bound", unweighted_bound),
        ("weighted volume bound", weighted_bound),
        ("gaussian-growth volume bound", gaussian_growth_bound),
        ("spectral gap", spectral_gap),
        ("example-2.3 finding", example_finding),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
