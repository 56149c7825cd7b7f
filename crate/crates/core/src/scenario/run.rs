use super::{Parameters, Resolution, Scenario, SphereGridSize, Task, SCHEMA_VERSION};
use crate::catalog::{
    builtin, lemma21_audit, schouten_bounds_audit, soliton_residual, Exactness, RadialSample, SolitonClass,
    SolitonInstance, SolitonSpec,
};
use crate::error::{Error, Result};
use crate::geodesic::{orthonormal_frame, riccati_report, shoot, tangent_from_direction, ShootOptions};
use crate::geometry::{bianchi_residual, curvature_at};
use crate::spectral::{self, SpectralProblem};
use crate::volume::{compare, ComparisonOptions, ComparisonReport, SphereGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "SOLITONLAB_OUT";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub parallel: bool,
    pub resolution: Resolution,
}

impl RunOptions {
    /// `--out`, then `SOLITONLAB_OUT`, then the scenario's `output`, then
    /// `solitonlab-out/<name>`.
    pub fn output_dir(&self, sc: &Scenario) -> PathBuf {
        if let Some(d) = &self.out_dir {
            return d.clone();
        }
        if let Some(d) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(d);
        }
        sc.output
            .clone()
            .unwrap_or_else(|| PathBuf::from("solitonlab-out").join(&sc.name))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Pass,
    /// A hard invariant failed.
    Fail,
    /// A claimed property failed where it is not guaranteed (soft).
    Finding,
    Skipped,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskReport {
    pub status: TaskStatus,
    /// Whether a violation here is an invariant failure.
    pub hard: bool,
    pub summary: String,
    pub findings: Vec<String>,
    pub failures: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub details: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub schema: u32,
    pub scenario: String,
    pub entry: String,
    pub exactness: Exactness,
    pub resolution: Resolution,
    pub soliton: SolitonSpec,
    pub parameters: Parameters,
    /// Keyed by task name.
    pub tasks: BTreeMap<String, TaskReport>,
    pub findings: Vec<String>,
    pub failures: Vec<String>,
    pub exit_code: i32,
}

impl ScenarioReport {
    /// Plain-text summary, one line per task.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {} ({}, {:?})", self.scenario, self.entry, self.exactness);
        let _ = writeln!(s, "{:<16} {:<8} detail", "task", "status");
        for (name, t) in &self.tasks {
            let status = serde_json::to_value(t.status).ok();
            let status = status.as_ref().and_then(Value::as_str).unwrap_or("?");
            let _ = writeln!(s, "{name:<16} {status:<8} {}", t.summary);
        }
        for f in &self.findings {
            let _ = writeln!(s, "finding: {f}");
        }
        for f in &self.failures {
            let _ = writeln!(s, "FAILURE: {f}");
        }
        let _ = writeln!(s, "exit code {}", self.exit_code);
        s
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub report: ScenarioReport,
    pub out_dir: PathBuf,
}

struct TaskOutput {
    task: Task,
    report: TaskReport,
    files: Vec<(String, String)>,
    elapsed: f64,
}

/// Checks of one task, classified as they are recorded.
struct Outcome {
    hard: bool,
    findings: Vec<String>,
    failures: Vec<String>,
}

impl Outcome {
    fn new(hard: bool) -> Self {
        Outcome {
            hard,
            findings: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// A check that is an invariant when `hard`, a finding otherwise.
    fn check(&mut self, ok: bool, hard: bool, message: impl FnOnce() -> String) {
        if ok {
            return;
        }
        if hard {
            self.failures.push(message());
        } else {
            self.findings.push(message());
        }
    }

    fn finish(self, summary: String, details: Value) -> TaskReport {
        let status = if !self.failures.is_empty() {
            TaskStatus::Fail
        } else if !self.findings.is_empty() {
            TaskStatus::Finding
        } else {
            TaskStatus::Pass
        };
        TaskReport {
            status,
            hard: self.hard,
            summary,
            findings: self.findings,
            failures: self.failures,
            error: None,
            details,
        }
    }
}

fn skipped(reason: String) -> TaskReport {
    TaskReport {
        status: TaskStatus::Skipped,
        hard: false,
        summary: reason,
        findings: Vec::new(),
        failures: Vec::new(),
        error: None,
        details: Value::Null,
    }
}

fn errored(e: &Error) -> TaskReport {
    TaskReport {
        status: TaskStatus::Error,
        hard: true,
        summary: e.to_string(),
        findings: Vec::new(),
        failures: Vec::new(),
        error: Some(e.to_string()),
        details: Value::Null,
    }
}

fn csv_row(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(",")
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Unit directions in frame coordinates: evenly spaced angles for `n = 2`,
/// seeded Gaussian samples otherwise.
fn directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if s > 1e-8 {
                break v.iter().map(|x| x / s).collect();
            }
        })
        .collect()
}

fn identity_audit(s: &SolitonInstance, p: &Parameters) -> Result<TaskOutput> {
    let t = &p.tolerances;
    let exact = s.exactness == Exactness::Exact;
    let pts = s.sample_points(p.points, p.seed);
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|x| Ok((soliton_residual(s, x)?, bianchi_residual(&s.metric, x)?)))
        .collect::<Result<_>>()?;
    let max_soliton = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let mean_soliton = rows.iter().map(|r| r.0).sum::<f64>() / rows.len().max(1) as f64;
    let max_bianchi = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut o = Outcome::new(true);
    o.check(max_bianchi <= t.bianchi, true, || {
        format!("Bianchi residual {max_bianchi:.3e} exceeds {:e}", t.bianchi)
    });
    o.check(max_soliton <= t.soliton, exact, || {
        format!("soliton equation residual {max_soliton:.3e} exceeds {:e}", t.soliton)
    });
    let mut csv = csv_row((1..=s.dim()).map(|i| format!("x{i}")).chain(["soliton".into(), "bianchi".into()]));
    csv.push('\n');
    for (x, r) in pts.iter().zip(&rows) {
        csv.push_str(&csv_row(x.iter().map(|v| num(*v)).chain([num(r.0), num(r.1)])));
        csv.push('\n');
    }
    let report = o.finish(
        format!("max soliton residual {max_soliton:.3e}, max Bianchi residual {max_bianchi:.3e}"),
        json!({
            "points": pts.len(),
            "seed": p.seed,
            "max_soliton": max_soliton,
            "mean_soliton": mean_soliton,
            "max_bianchi": max_bianchi,
        }),
    );
    Ok(TaskOutput {
        task: Task::IdentityAudit,
        report,
        files: vec![("identity-audit.csv".into(), csv)],
        elapsed: 0.0,
    })
}

fn lemma21(s: &SolitonInstance, p: &Parameters) -> Result<TaskOutput> {
    let t = &p.tolerances;
    let exact = s.exactness == Exactness::Exact;
    let pts = s.sample_points(p.points, p.seed);
    let rep = lemma21_audit(s, &pts)?;
    let worst = rep.summary.max_lemma.iter().copied().fold(0.0, f64::max);
    let mut o = Outcome::new(exact);
    let names = ["laplacian_f", "grad_scalar", "laplacian_scalar"];
    for (name, v) in names.iter().zip(rep.summary.max_lemma) {
        o.check(v <= t.lemma, exact, || format!("identity `{name}` residual {v:.3e} exceeds {:e}", t.lemma));
    }
    let mut csv = csv_row(
        (1..=s.dim())
            .map(|i| format!("x{i}"))
            .chain(["soliton", "laplacian_f", "grad_scalar", "laplacian_scalar", "scalar"].map(String::from)),
    );
    csv.push('\n');
    for r in &rep.points {
        csv.push_str(&csv_row(
            r.point
                .iter()
                .map(|v| num(*v))
                .chain([num(r.soliton), num(r.lemma[0]), num(r.lemma[1]), num(r.lemma[2]), num(r.scalar)]),
        ));
        csv.push('\n');
    }
    let report = o.finish(
        format!("max identity residual {worst:.3e}"),
        json!({ "points": pts.len(), "summary": rep.summary }),
    );
    Ok(TaskOutput {
        task: Task::Lemma21,
        report,
        files: vec![("lemma21.csv".into(), csv)],
        elapsed: 0.0,
    })
}

fn schouten(s: &SolitonInstance, p: &Parameters) -> Result<TaskOutput> {
    if !s.is_schouten() {
        return Ok(TaskOutput {
            task: Task::SchoutenBounds,
            report: skipped(format!(
                "not a Schouten soliton (rho = {}, expected {})",
                s.rho,
                s.schouten_rho()
            )),
            files: Vec::new(),
            elapsed: 0.0,
        });
    }
    let sp = &p.schouten;
    let n = s.dim();
    let base = &s.base_point;
    let h = (sp.spacing / 10.0).min(1e-2);
    let stride = (sp.spacing / h).round().max(1.0) as usize;
    let frame = orthonormal_frame(&s.metric, base)?;
    let opts = ShootOptions {
        h,
        r_max: sp.r_max,
        stop_at_conjugate: true,
    };
    let rays = directions(n, sp.rays, p.seed)
        .par_iter()
        .map(|th| shoot(&s.metric, Some(&s.f), base, &tangent_from_direction(&frame, th), &opts))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = vec![RadialSample {
        distance: 0.0,
        point: base.clone(),
    }];
    for ray in &rays {
        for smp in ray.samples.iter().skip(stride).step_by(stride) {
            samples.push(RadialSample {
                distance: smp.r,
                point: smp.x.clone(),
            });
        }
    }
    let rep = schouten_bounds_audit(s, &samples, p.tolerances.schouten)?;
    let scalar_at_base = curvature_at(&s.metric, base)?.scalar;
    // the bounds assume a complete metric, which cannot be certified here:
    // violations are findings
    let mut o = Outcome::new(false);
    if rep.scalar_negative {
        o.findings.push(format!(
            "R < 0 (R = {scalar_at_base:.6} at the base point): the Schouten bound 0 <= R*lambda fails, so the metric cannot be complete"
        ));
    }
    o.findings.extend(rep.findings.iter().cloned());
    let mut csv = String::from("distance,scalar,r_lower_margin,r_upper_margin,grad_lower_margin,grad_upper_margin\n");
    for x in &rep.samples {
        csv.push_str(&csv_row([
            num(x.distance),
            num(x.scalar),
            num(x.r_lower_margin),
            num(x.r_upper_margin),
            num(x.grad_lower_margin),
            num(x.grad_upper_margin),
        ]));
        csv.push('\n');
    }
    let summary = format!(
        "R(base) = {scalar_at_base:.6}, bounds violated: {}, min margins {:.3e}",
        rep.bounds_violated,
        rep.min_margins.iter().copied().fold(f64::INFINITY, f64::min)
    );
    let report = o.finish(
        summary,
        json!({
            "scalar_at_base": scalar_at_base,
            "bounds_violated": rep.bounds_violated,
            "scalar_negative": rep.scalar_negative,
            "f0": rep.f0,
            "f0_estimated": rep.f0_estimated,
            "min_margins": rep.min_margins,
            "a1": rep.a1,
            "a2": rep.a2,
            "samples": rep.samples.len(),
            "far_samples": rep.far_samples,
            "tolerance": rep.tolerance,
        }),
    );
    Ok(TaskOutput {
        task: Task::SchoutenBounds,
        report,
        files: vec![("schouten-bounds.csv".into(), csv)],
        elapsed: 0.0,
    })
}

fn riccati(s: &SolitonInstance, p: &Parameters) -> Result<TaskOutput> {
    let rp = &p.riccati;
    let n = s.dim();
    if n < 2 {
        return Ok(TaskOutput {
            task: Task::Riccati,
            report: skipped("geodesic rays need dimension >= 2".into()),
            files: Vec::new(),
            elapsed: 0.0,
        });
    }
    let base = s.center();
    let frame = orthonormal_frame(&s.metric, base)?;
    let opts = ShootOptions {
        h: rp.h,
        r_max: rp.r_max,
        stop_at_conjugate: true,
    };
    let dirs = directions(n, rp.directions, p.seed);
    let audits = dirs
        .par_iter()
        .map(|th| {
            let ray = shoot(&s.metric, Some(&s.f), base, &tangent_from_direction(&frame, th), &opts)?;
            Ok((ray.conjugate_radius, ray.last_radius(), riccati_report(&ray)))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_slack = audits
        .iter()
        .map(|a| a.2.max_slack)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut o = Outcome::new(true);
    let tol = p.tolerances.riccati;
    o.check(max_slack <= tol, true, || format!("Riccati slack {max_slack:.3e} exceeds {tol:e}"));
    let mut csv = String::from("direction,r,slack,error_estimate\n");
    for (k, a) in audits.iter().enumerate() {
        for pt in &a.2.points {
            csv.push_str(&csv_row([k.to_string(), num(pt.r), num(pt.slack), num(pt.error_estimate)]));
            csv.push('\n');
        }
    }
    let rays: Vec<Value> = audits
        .iter()
        .zip(&dirs)
        .map(|(a, d)| {
            json!({
                "direction": d,
                "conjugate_radius": a.0,
                "last_radius": a.1,
                "window_end": a.2.window_end,
                "audited_points": a.2.points.len(),
                "unresolved_tail": a.2.unresolved_tail,
                "max_slack": a.2.max_slack,
            })
        })
        .collect();
    let report = o.finish(
        format!("max slack {max_slack:.3e} over {} directions", dirs.len()),
        json!({ "base_point": base, "h": rp.h, "r_max": rp.r_max, "max_slack": max_slack, "rays": rays }),
    );
    Ok(TaskOutput {
        task: Task::Riccati,
        report,
        files: vec![("riccati.csv".into(), csv)],
        elapsed: 0.0,
    })
}

fn sphere_grid(n: usize, size: Option<SphereGridSize>, res: Resolution) -> Result<SphereGrid> {
    let size = size.unwrap_or(match res {
        Resolution::Low => SphereGridSize::Coarse,
        Resolution::Default => SphereGridSize::Default,
        Resolution::High => SphereGridSize::Refined,
    });
    match size {
        SphereGridSize::Coarse => SphereGrid::coarse_for(n),
        SphereGridSize::Default => SphereGrid::default_for(n),
        SphereGridSize::Refined => SphereGrid::refined_for(n),
    }
}

fn volume_tasks(s: &SolitonInstance, p: &Parameters, res: Resolution, tasks: &[Task]) -> Result<Vec<TaskOutput>> {
    let n = s.dim();
    let skip = |t: Task| -> Option<String> {
        match t {
            Task::Volume13 if !(s.lambda > 0.0) => {
                Some(format!("the unweighted volume bound needs a shrinking soliton, lambda = {}", s.lambda))
            }
            Task::Volume15 if !(p.delta > -s.lambda) => {
                Some(format!("the Gaussian-growth bound needs delta > -lambda, got delta = {} and lambda = {}", p.delta, s.lambda))
            }
            _ => None,
        }
    };
    let active: Vec<Task> = tasks.iter().copied().filter(|&t| skip(t).is_none()).collect();
    let rep = if active.is_empty() {
        None
    } else {
        let opts = ComparisonOptions {
            base_point: None,
            radii: p.r_grid.clone(),
            h: p.h,
            grid: Some(sphere_grid(n, p.sphere_grid, res)?),
            delta: active.contains(&Task::Volume15).then_some(p.delta),
        };
        Some(compare(s, &opts)?)
    };
    Ok(tasks
        .iter()
        .map(|&t| match (skip(t), &rep) {
            (None, Some(rep)) => volume_output(s, p, rep, t),
            (reason, _) => TaskOutput {
                task: t,
                report: skipped(reason.unwrap_or_default()),
                files: Vec::new(),
                elapsed: 0.0,
            },
        })
        .collect())
}

fn volume_output(s: &SolitonInstance, p: &Parameters, rep: &ComparisonReport, task: Task) -> TaskOutput {
    let exact = s.exactness == Exactness::Exact;
    let tol = p.tolerances.volume;
    let mut o = Outcome::new(exact);
    for r in &rep.unreachable_radii {
        o.findings.push(format!("ball of radius {r} leaves the chart; not evaluated"));
    }
    let holds = |vol: f64, bound: f64| vol <= bound * (1.0 + tol);
    let equal = |vol: f64, bound: f64| (bound - vol).abs() <= tol * vol.abs();
    let (header, rows): (&str, Vec<Value>) = match task {
        Task::Volume13 => (
            "r,vol,bound13,margin13,equal13,holds13",
            rep.rows
                .iter()
                .map(|r| {
                    let ok = holds(r.vol, r.bound13);
                    o.check(ok, exact, || {
                        format!("Vol(B({})) = {:.6} exceeds the volume bound {:.6}", r.r, r.vol, r.bound13)
                    });
                    json!({"r": r.r, "vol": r.vol, "bound13": r.bound13, "margin13": r.margin13,
                           "equal13": equal(r.vol, r.bound13), "holds13": ok})
                })
                .collect(),
        ),
        Task::Volume14 => (
            "r,volf,bound14,margin14,equal14,holds14",
            rep.rows
                .iter()
                .map(|r| {
                    let ok = holds(r.volf, r.bound14);
                    o.check(ok, exact, || {
                        format!("Vol_f(B({})) = {:.6} exceeds the weighted bound {:.6}", r.r, r.volf, r.bound14)
                    });
                    json!({"r": r.r, "volf": r.volf, "bound14": r.bound14, "margin14": r.margin14,
                           "equal14": equal(r.volf, r.bound14), "holds14": ok})
                })
                .collect(),
        ),
        _ => {
            if rep.corollary15.is_none() {
                o.findings.push("no growth constants found for the quadratic-growth bound".into());
            }
            (
                "r,volf,bound15,margin15,holds15",
                rep.rows
                    .iter()
                    .map(|r| {
                        let ok = r.bound15.map(|b| holds(r.volf, b));
                        if let (Some(false), Some(b)) = (ok, r.bound15) {
                            o.check(false, exact, || {
                                format!("Vol_f(B({})) = {:.6} exceeds the quadratic-growth bound {b:.6}", r.r, r.volf)
                            });
                        }
                        json!({"r": r.r, "volf": r.volf, "bound15": r.bound15, "margin15": r.margin15, "holds15": ok})
                    })
                    .collect(),
            )
        }
    };
    let keys: Vec<&str> = header.split(',').collect();
    let mut csv = format!("{header}\n");
    for row in &rows {
        let cells = keys.iter().map(|k| match &row[*k] {
            Value::Null => String::new(),
            Value::Number(x) => x.as_f64().map(num).unwrap_or_default(),
            v => v.to_string(),
        });
        csv.push_str(&csv_row(cells));
        csv.push('\n');
    }
    let checked = rows.len();
    let mut details = json!({
        "base_point": rep.base_point,
        "directions": rep.directions,
        "h": rep.h,
        "hypotheses": rep.hypotheses,
        "unreachable_radii": rep.unreachable_radii,
        "warnings": rep.warnings,
        "rows": rows,
    });
    if task == Task::Volume15 {
        details["corollary15"] = serde_json::to_value(&rep.corollary15).unwrap_or(Value::Null);
    }
    let summary = format!(
        "{checked} radii, {} violations, {} unreachable",
        o.failures.len() + o.findings.iter().filter(|f| f.contains("exceeds")).count(),
        rep.unreachable_radii.len()
    );
    TaskOutput {
        task,
        report: o.finish(summary, details),
        files: vec![(format!("{}.csv", task.name()), csv)],
        elapsed: 0.0,
    }
}

/// Grid points per axis for the spectral task.
pub fn spectral_points(dim: usize, res: Resolution) -> usize {
    match (dim, res) {
        (1, Resolution::Low) => 1001,
        (1, Resolution::Default) => 2001,
        (1, Resolution::High) => 4001,
        (_, Resolution::Low) => 201,
        (_, Resolution::Default) => 401,
        (_, Resolution::High) => 801,
    }
}

fn spectral_task(s: &SolitonInstance, p: &Parameters, res: Resolution) -> Result<TaskOutput> {
    let n = s.dim();
    if n > spectral::MAX_SPECTRAL_DIM || !spectral::is_euclidean_background(s) {
        return Ok(TaskOutput {
            task: Task::Spectral,
            report: skipped(format!("spectral audits need a Euclidean background of dimension <= {}", spectral::MAX_SPECTRAL_DIM)),
            files: Vec::new(),
            elapsed: 0.0,
        });
    }
    let points = p.spectral.points.unwrap_or_else(|| spectral_points(n, res));
    let half_width = match p.spectral.half_width {
        Some(l) => l,
        None => spectral::confining_half_width(n, &s.f)?.unwrap_or(8.0),
    };
    let prob = SpectralProblem::for_instance(s, half_width, points)?;
    let rep = spectral::theorem12_audit(s, &prob)?;
    let exact = s.exactness == Exactness::Exact;
    let confining = s.lambda > 0.0;
    let hard = exact && confining;
    let mut o = Outcome::new(hard);
    o.check(rep.holds, hard, || {
        format!(
            "lambda1 = {:.6} below lambda - eps = {:.6}",
            rep.lambda1,
            rep.lambda - rep.refinement_error
        )
    });
    // a flat background with a gradient soliton potential is the Gaussian,
    // the equality case
    let equality = (rep.lambda1 - rep.lambda).abs() <= p.tolerances.spectral * rep.lambda.abs().max(1e-3);
    o.check(equality, hard, || {
        format!("|lambda1 - lambda| = {:.3e} exceeds the equality tolerance", (rep.lambda1 - rep.lambda).abs())
    });
    if confining {
        o.check(rep.gaps_bounded && !rep.no_spectral_gap, hard, || {
            "eigenvalue gaps not stable under domain growth".to_string()
        });
    } else if rep.no_spectral_gap {
        o.findings.push(format!(
            "no spectral gap: lambda1 -> 0 as the box grows (lambda = {}, no confinement)",
            s.lambda
        ));
    }
    for w in &rep.result.warnings {
        o.findings.push(w.clone());
    }
    let mut eig = String::from("k,eigenvalue,residual\n");
    for (k, (v, r)) in rep.result.eigenvalues.iter().zip(&rep.result.residuals).enumerate() {
        eig.push_str(&csv_row([k.to_string(), num(*v), num(*r)]));
        eig.push('\n');
    }
    let mut trunc = String::from("half_width,k,eigenvalue\n");
    for t in &rep.truncation {
        for (k, v) in t.eigenvalues.iter().enumerate() {
            trunc.push_str(&csv_row([num(t.half_width), k.to_string(), num(*v)]));
            trunc.push('\n');
        }
    }
    let mut slice = Vec::new();
    rep.result.write_slice_csv(1, &mut slice)?;
    let summary = format!(
        "lambda1 = {:.6} (lambda = {}, eps = {:.2e}), N = {points}, L = {half_width}",
        rep.lambda1, rep.lambda, rep.refinement_error
    );
    let mut details = serde_json::to_value(&rep).unwrap_or(Value::Null);
    details["equality_within_tolerance"] = Value::Bool(equality);
    Ok(TaskOutput {
        task: Task::Spectral,
        report: o.finish(summary, details),
        files: vec![
            ("spectral.csv".into(), eig),
            ("spectral-truncation.csv".into(), trunc),
            ("spectral-slice.csv".into(), String::from_utf8_lossy(&slice).into_owned()),
        ],
        elapsed: 0.0,
    })
}

/// One independent unit of work; the volume job serves all volume tasks.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Job {
    Single(Task),
    Volume,
}

fn run_job(s: &SolitonInstance, sc: &Scenario, res: Resolution, job: Job) -> Vec<TaskOutput> {
    let p = &sc.parameters;
    let start = Instant::now();
    let timed = |mut outs: Vec<TaskOutput>| {
        let elapsed = start.elapsed().as_secs_f64();
        outs.iter_mut().for_each(|o| o.elapsed = elapsed);
        outs
    };
    let failed = |tasks: Vec<Task>, e: Error| -> Vec<TaskOutput> {
        tasks
            .into_iter()
            .map(|task| TaskOutput {
                task,
                report: errored(&e),
                files: Vec::new(),
                elapsed: 0.0,
            })
            .collect()
    };
    match job {
        Job::Volume => {
            let tasks: Vec<Task> = sc.tasks.iter().copied().filter(|t| t.is_volume()).collect();
            timed(volume_tasks(s, p, res, &tasks).unwrap_or_else(|e| failed(tasks, e)))
        }
        Job::Single(task) => {
            let out = match task {
                Task::IdentityAudit => identity_audit(s, p),
                Task::Lemma21 => lemma21(s, p),
                Task::SchoutenBounds => schouten(s, p),
                Task::Riccati => riccati(s, p),
                Task::Spectral => spectral_task(s, p, res),
                _ => unreachable!("volume tasks run as one job"),
            };
            timed(out.map(|o| vec![o]).unwrap_or_else(|e| failed(vec![task], e)))
        }
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Run every task of `sc`, write `report.json`, per-task CSVs and the
/// `run.log` sidecar, and return the exit code (0 iff no hard failure).
pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunOutcome> {
    let started = unix_seconds();
    let s = sc.soliton.instance()?;
    let mut tasks: Vec<Task> = sc.tasks.clone();
    tasks.sort();
    let mut jobs: Vec<Job> = Vec::new();
    for &t in &tasks {
        let job = if t.is_volume() { Job::Volume } else { Job::Single(t) };
        if !jobs.contains(&job) {
            jobs.push(job);
        }
    }
    let outputs: Vec<TaskOutput> = if opts.parallel {
        jobs.par_iter()
            .flat_map_iter(|&j| run_job(&s, sc, opts.resolution, j))
            .collect()
    } else {
        jobs.iter()
            .flat_map(|&j| run_job(&s, sc, opts.resolution, j))
            .collect()
    };

    let mut by_name = BTreeMap::new();
    let mut files = BTreeMap::new();
    let mut log = String::new();
    for o in outputs {
        let _ = writeln!(
            log,
            "{:.3} task={} status={:?} elapsed_s={:.3}",
            started, o.task.name(), o.report.status, o.elapsed
        );
        for (name, body) in o.files {
            files.insert(name, body);
        }
        by_name.insert(o.task.name().to_string(), o.report);
    }
    let mut findings = Vec::new();
    let mut failures = Vec::new();
    for (name, t) in &by_name {
        findings.extend(t.findings.iter().map(|f| format!("{name}: {f}")));
        failures.extend(t.failures.iter().map(|f| format!("{name}: {f}")));
        if let Some(e) = &t.error {
            failures.push(format!("{name}: error: {e}"));
        }
    }
    let exit_code = if failures.is_empty() { 0 } else { 1 };
    let report = ScenarioReport {
        schema: SCHEMA_VERSION,
        scenario: sc.name.clone(),
        entry: s.id.clone(),
        exactness: s.exactness,
        resolution: opts.resolution,
        soliton: s.to_spec(),
        parameters: sc.parameters.clone(),
        tasks: by_name,
        findings,
        failures,
        exit_code,
    };

    let out_dir = opts.output_dir(sc);
    std::fs::create_dir_all(&out_dir)?;
    let mut body = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    body.push('\n');
    std::fs::write(out_dir.join("report.json"), body)?;
    for (name, body) in &files {
        std::fs::write(out_dir.join(name), body)?;
    }
    let _ = writeln!(log, "{:.3} finished exit_code={exit_code}", unix_seconds());
    std::fs::write(out_dir.join("run.log"), log)?;
    Ok(RunOutcome {
        exit_code,
        report,
        out_dir,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CatalogFilter {
    #[default]
    All,
    Exact,
    Schouten,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogRow {
    pub id: String,
    pub dim: usize,
    pub rho: f64,
    pub lambda: f64,
    pub class: SolitonClass,
    pub exactness: Exactness,
    pub schouten: bool,
    pub description: String,
}

/// Built-in entries in catalog order.
pub fn catalog_rows(filter: CatalogFilter) -> Result<Vec<CatalogRow>> {
    let cat = builtin()?;
    let mut rows = Vec::new();
    for e in &cat.entries {
        let s = SolitonInstance::from_spec(&e.soliton)?;
        let keep = match filter {
            CatalogFilter::All => true,
            CatalogFilter::Exact => s.exactness == Exactness::Exact,
            CatalogFilter::Schouten => s.is_schouten(),
        };
        if keep {
            rows.push(CatalogRow {
                id: s.id.clone(),
                dim: s.dim(),
                rho: s.rho,
                lambda: s.lambda,
                class: s.class(),
                exactness: s.exactness,
                schouten: s.is_schouten(),
                description: s.description.clone(),
            });
        }
    }
    Ok(rows)
}

pub fn write_catalog_table(rows: &[CatalogRow], mut out: impl Write) -> Result<()> {
    writeln!(
        out,
        "{:<18} {:>3} {:>10} {:>10} {:<10} {:<14} {:<8} description",
        "id", "n", "rho", "lambda", "class", "exactness", "schouten"
    )?;
    for r in rows {
        let class = serde_json::to_value(r.class).ok();
        let exact = serde_json::to_value(r.exactness).ok();
        writeln!(
            out,
            "{:<18} {:>3} {:>10.6} {:>10.6} {:<10} {:<14} {:<8} {}",
            r.id,
            r.dim,
            r.rho,
            r.lambda,
            class.as_ref().and_then(Value::as_str).unwrap_or("?"),
            exact.as_ref().and_then(Value::as_str).unwrap_or("?"),
            r.schouten,
            r.description
        )?;
    }
    Ok(())
}
