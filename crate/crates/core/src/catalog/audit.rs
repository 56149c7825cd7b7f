use super::SolitonInstance;
use crate::error::{Error, Result};
use crate::geometry::curvature::{grad_scalar_curvature, laplacian_scalar_curvature, Curvature};
use crate::geometry::weighted::covariant_hessian;
use rayon::prelude::*;
use serde::Serialize;

/// `‖Ric + ∇²f − (ρR + λ)g‖_g` at `x`.
pub fn soliton_residual(s: &SolitonInstance, x: &[f64]) -> Result<f64> {
    check_point(s, x)?;
    let c = Curvature::at(&s.metric, x)?;
    Ok(residual_from(s, &c, x)?.sqrt())
}

fn residual_from(s: &SolitonInstance, c: &Curvature, x: &[f64]) -> Result<f64> {
    let fj = s.f.eval_jet(x)?;
    let hess = covariant_hessian(&c.conn, &fj);
    let k = s.rho * c.scalar + s.lambda;
    let t: Vec<f64> = (0..hess.len())
        .map(|i| c.ricci[i] + hess[i] - k * c.conn.g[i])
        .collect();
    Ok(c.conn.norm2_tensor(&t).max(0.0))
}

fn check_point(s: &SolitonInstance, x: &[f64]) -> Result<()> {
    if x.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: x.len(),
        });
    }
    if !s.metric.domain().contains_interior(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct PointResiduals {
    pub point: Vec<f64>,
    pub soliton: f64,
    /// Identity items `Δf`, `∇R` and `ΔR`.
    pub lemma: [f64; 3],
    pub scalar: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentitySummary {
    pub max_soliton: f64,
    pub mean_soliton: f64,
    pub max_lemma: [f64; 3],
    pub mean_lemma: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub entry: String,
    pub points: Vec<PointResiduals>,
    pub summary: IdentitySummary,
}

/// Residuals of the three identity items and of the soliton equation at one point.
pub fn lemma21_residuals(s: &SolitonInstance, x: &[f64]) -> Result<PointResiduals> {
    check_point(s, x)?;
    let c = Curvature::at(&s.metric, x)?;
    let conn = &c.conn;
    let n = conn.n;
    let nn = n as f64;
    let (rho, lambda, r) = (s.rho, s.lambda, c.scalar);
    let fj = s.f.eval_jet(x)?;
    let df = fj.gradient();
    let hess = covariant_hessian(conn, &fj);

    let item1 = (conn.trace(&hess) - ((nn * rho - 1.0) * r + nn * lambda)).abs();

    let grad_r = grad_scalar_curvature(&s.metric, x)?;
    let k = 1.0 - 2.0 * (nn - 1.0) * rho;
    let up_f = conn.raise(df);
    let mut v = vec![0.0; n];
    for j in 0..n {
        let ric_f: f64 = (0..n).map(|l| c.ricci[j * n + l] * up_f[l]).sum();
        v[j] = k * grad_r[j] - 2.0 * ric_f;
    }
    let item2 = conn.norm2_covector(&v).max(0.0).sqrt();

    let lap_r = laplacian_scalar_curvature(&s.metric, x)?;
    let grad_dot: f64 = (0..n).map(|i| grad_r[i] * up_f[i]).sum();
    let ric2 = conn.norm2_tensor(&c.ricci);
    let item3 = (k * lap_r - grad_dot - 2.0 * (rho * r * r - ric2 + lambda * r)).abs();

    Ok(PointResiduals {
        point: x.to_vec(),
        soliton: residual_from(s, &c, x)?.sqrt(),
        lemma: [item1, item2, item3],
        scalar: r,
    })
}

/// Soliton and identity residuals over `points`, evaluated in parallel and
/// reported in input order.
pub fn lemma21_audit(s: &SolitonInstance, points: &[Vec<f64>]) -> Result<IdentityReport> {
    let rows: Vec<PointResiduals> = points
        .par_iter()
        .map(|x| lemma21_residuals(s, x))
        .collect::<Result<_>>()?;
    let m = rows.len().max(1) as f64;
    let mut summary = IdentitySummary {
        max_soliton: 0.0,
        mean_soliton: 0.0,
        max_lemma: [0.0; 3],
        mean_lemma: [0.0; 3],
    };
    for p in &rows {
        summary.max_soliton = summary.max_soliton.max(p.soliton);
        summary.mean_soliton += p.soliton / m;
        for i in 0..3 {
            summary.max_lemma[i] = summary.max_lemma[i].max(p.lemma[i]);
            summary.mean_lemma[i] += p.lemma[i] / m;
        }
    }
    Ok(IdentityReport {
        entry: s.id.clone(),
        points: rows,
        summary,
    })
}

/// A point at known distance from the base point (typically a geodesic sample).
#[derive(Clone, Debug, Serialize)]
pub struct RadialSample {
    pub distance: f64,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchoutenSample {
    pub distance: f64,
    pub point: Vec<f64>,
    pub scalar: f64,
    /// `Rλ`, should be ≥ 0.
    pub r_lower_margin: f64,
    /// `2(n−1)λ² − Rλ`, should be ≥ 0.
    pub r_upper_margin: f64,
    /// `|∇f|² − 2λ(f − f₀)`, should be ≥ 0.
    pub grad_lower_margin: f64,
    /// `4λ(f − f₀) − |∇f|²`, should be ≥ 0.
    pub grad_upper_margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchoutenReport {
    pub entry: String,
    pub f0: f64,
    pub f0_estimated: bool,
    pub samples: Vec<SchoutenSample>,
    pub min_margins: [f64; 4],
    /// True when any curvature or gradient bound fails beyond `tolerance`.
    pub bounds_violated: bool,
    pub scalar_negative: bool,
    pub tolerance: f64,
    /// Smallest grid constants for the quadratic growth bounds, over samples
    /// at distance > 2; `None` when no grid value works.
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub far_samples: usize,
    pub findings: Vec<String>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimum (λ ≥ 0) or maximum (λ < 0) of `f` by golden-section search along
/// each coordinate axis of the sample box through the base point.
pub fn estimate_f0(s: &SolitonInstance) -> Result<f64> {
    let sign = if s.lambda < 0.0 { -1.0 } else { 1.0 };
    let p = &s.base_point;
    let mut best = sign * s.f.eval(p)?;
    let mut y = p.clone();
    for k in 0..s.dim() {
        let ax = &s.sample_box.axes[k];
        let (mut a, mut b) = (ax.lo, ax.hi);
        let mut eval = |t: f64| -> Result<f64> {
            y.copy_from_slice(p);
            y[k] = t;
            Ok(sign * s.f.eval(&y)?)
        };
        let mut c = b - GOLDEN * (b - a);
        let mut d = a + GOLDEN * (b - a);
        let (mut fc, mut fd) = (eval(c)?, eval(d)?);
        for _ in 0..200 {
            if (b - a).abs() < 1e-10 {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - GOLDEN * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + GOLDEN * (b - a);
                fd = eval(d)?;
            }
        }
        best = best.min(fc).min(fd).min(eval(a)?).min(eval(b)?);
    }
    Ok(sign * best)
}

/// Curvature and potential bounds for Schouten solitons at the given samples.
pub fn schouten_bounds_audit(
    s: &SolitonInstance,
    samples: &[RadialSample],
    tolerance: f64,
) -> Result<SchoutenReport> {
    if !s.is_schouten() {
        return Err(Error::NotSchouten {
            rho: s.rho,
            expected: s.schouten_rho(),
        });
    }
    let (f0, f0_estimated) = match s.f0_hint {
        Some(v) => (v, false),
        None => (estimate_f0(s)?, true),
    };
    let n = s.dim() as f64;
    let lambda = s.lambda;
    let rows: Vec<(SchoutenSample, f64)> = samples
        .par_iter()
        .map(|smp| {
            let x = &smp.point;
            let r = Curvature::at(&s.metric, x)?.scalar;
            let fj = s.f.eval_jet(x)?;
            let conn = crate::geometry::Connection::at(&s.metric, x)?;
            let grad2 = conn.norm2_covector(fj.gradient());
            let df = fj.value() - f0;
            Ok((
                SchoutenSample {
                    distance: smp.distance,
                    point: x.clone(),
                    scalar: r,
                    r_lower_margin: r * lambda,
                    r_upper_margin: 2.0 * (n - 1.0) * lambda * lambda - r * lambda,
                    grad_lower_margin: grad2 - 2.0 * lambda * df,
                    grad_upper_margin: 4.0 * lambda * df - grad2,
                },
                df,
            ))
        })
        .collect::<Result<_>>()?;

    let mut min_margins = [f64::INFINITY; 4];
    let mut scalar_negative = false;
    for (smp, _) in &rows {
        let m = [
            smp.r_lower_margin,
            smp.r_upper_margin,
            smp.grad_lower_margin,
            smp.grad_upper_margin,
        ];
        for i in 0..4 {
            min_margins[i] = min_margins[i].min(m[i]);
        }
        scalar_negative |= smp.scalar < -tolerance;
    }
    let bounds_violated = min_margins.iter().any(|&m| m < -tolerance);

    let far: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(smp, _)| smp.distance > 2.0)
        .map(|(smp, df)| (smp.distance, *df))
        .collect();
    let grid = (0..=1000).map(|i| i as f64 * 0.01);
    let (a1, a2) = if far.is_empty() {
        (None, None)
    } else {
        let fits1 = |a: f64| {
            far.iter()
                .all(|&(d, df)| 0.25 * lambda * (d - a).powi(2) <= df + tolerance)
        };
        let fits2 = |a: f64| far.iter().all(|&(d, df)| df <= lambda * (d + a).powi(2) + tolerance);
        (grid.clone().find(|&a| fits1(a)), grid.clone().find(|&a| fits2(a)))
    };

    let mut findings = Vec::new();
    if scalar_negative {
        findings.push(format!(
            "R < 0 at sampled points, curvature bound 0 <= R*lambda violated (min R*lambda = {:.6e})",
            min_margins[0]
        ));
    }
    if min_margins[1] < -tolerance {
        findings.push("upper curvature bound R*lambda <= 2(n-1)lambda^2 violated".into());
    }
    if min_margins[2] < -tolerance || min_margins[3] < -tolerance {
        findings.push("gradient bounds 2lambda(f-f0) <= |grad f|^2 <= 4lambda(f-f0) violated".into());
    }
    if !far.is_empty() && (a1.is_none() || a2.is_none()) {
        findings.push("no grid constants in [0, 10] satisfy the quadratic growth bounds".into());
    }
    Ok(SchoutenReport {
        entry: s.id.clone(),
        f0,
        f0_estimated,
        samples: rows.into_iter().map(|(s, _)| s).collect(),
        min_margins,
        bounds_violated,
        scalar_negative,
        tolerance,
        a1,
        a2,
        far_samples: far.len(),
        findings,
    })
}
