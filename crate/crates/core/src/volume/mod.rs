//! Geodesic-ball volumes, weighted volumes and the comparison bounds built
//! from the potential along radial geodesics.

mod grid;
mod radial;

pub use grid::{sphere_area, SphereGrid};
pub use radial::{cumulative, integral_to};

use crate::catalog::SolitonInstance;
use crate::error::{Error, Result};
use crate::geodesic::{orthonormal_frame, shoot, tangent_from_direction, GeodesicRay, ShootOptions};
use crate::geometry::weighted::covariant_hessian;
use crate::geometry::{Connection, MetricChart};
use crate::Expression;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// Radial step used for volume rays at default resolution.
pub const DEFAULT_VOLUME_STEP: f64 = 1e-2;
/// Relative margin below which a bound counts as attained.
pub const EQUALITY_TOLERANCE: f64 = 5e-3;

/// Rays from `p` in every grid direction, shot to `r_max` without stopping
/// at conjugate points.
#[derive(Clone, Debug)]
pub struct RayBundle {
    pub base_point: Vec<f64>,
    pub h: f64,
    pub grid: SphereGrid,
    pub rays: Vec<GeodesicRay>,
}

impl RayBundle {
    pub fn shoot(
        chart: &MetricChart,
        f: Option<&Expression>,
        p: &[f64],
        grid: &SphereGrid,
        h: f64,
        r_max: f64,
    ) -> Result<Self> {
        let n = chart.dim();
        if grid.dim != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: grid.dim,
            });
        }
        let frame = orthonormal_frame(chart, p)?;
        let opts = ShootOptions {
            h,
            r_max: r_max + 2.0 * h,
            stop_at_conjugate: false,
        };
        let rays = grid
            .directions
            .par_iter()
            .map(|theta| shoot(chart, f, p, &tangent_from_direction(&frame, theta), &opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(RayBundle {
            base_point: p.to_vec(),
            h,
            grid: grid.clone(),
            rays,
        })
    }

    /// Largest radius every ray reaches inside the chart.
    pub fn reach(&self) -> f64 {
        self.rays
            .iter()
            .map(|r| match r.left_domain_at {
                Some(_) => r.last_radius(),
                None => f64::INFINITY,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ_θ w(θ) ∫₀^{min(r, ρ(θ))} J(θ, s)·e^{−f} ds` (`weighted = false` drops `e^{−f}`).
    fn volumes(&self, radii: &[f64], weighted: bool) -> Result<Vec<f64>> {
        let per_ray: Vec<Vec<f64>> = self
            .rays
            .iter()
            .map(|ray| {
                let v: Vec<f64> = ray
                    .samples
                    .iter()
                    .map(|s| match (weighted, s.f) {
                        (false, _) => Ok(s.jacobian),
                        (true, Some(f)) => Ok(s.jacobian * (-f).exp()),
                        (true, None) => Err(Error::Invalid("ray carries no potential values".into())),
                    })
                    .collect::<Result<_>>()?;
                let cum = cumulative(&v, ray.h);
                let rho = ray.conjugate_radius.unwrap_or(f64::INFINITY);
                radii
                    .iter()
                    .map(|&r| {
                        let u = r.min(rho);
                        require(ray, u)?;
                        Ok(integral_to(&v, &cum, ray.h, u))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(reduce(&self.grid.weights, &per_ray, radii.len()))
    }

    /// Per-radius `Σ_θ w(θ) ∫₀^r e^{E(θ,s)} s^{n−1} ds` for the exponent `E` at the ray samples.
    fn bound_with(&self, radii: &[f64], exponents: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.grid.dim as i32;
        let per_ray: Vec<Vec<f64>> = self
            .rays
            .iter()
            .zip(exponents)
            .map(|(ray, e)| {
                let v: Vec<f64> = ray
                    .samples
                    .iter()
                    .zip(e)
                    .map(|(s, e)| e.exp() * s.r.powi(n - 1))
                    .collect();
                let cum = cumulative(&v, ray.h);
                radii
                    .iter()
                    .map(|&r| {
                        require(ray, r)?;
                        Ok(integral_to(&v, &cum, ray.h, r))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(reduce(&self.grid.weights, &per_ray, radii.len()))
    }
}

fn require(ray: &GeodesicRay, r: f64) -> Result<()> {
    if r > ray.last_radius() + 1e-12 {
        return Err(Error::LeftDomain {
            r: ray.last_radius(),
        });
    }
    Ok(())
}

/// Weighted sum over directions in grid order (independent of worker count).
fn reduce(weights: &[f64], per_ray: &[Vec<f64>], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (w, vals) in weights.iter().zip(per_ray) {
        for (o, v) in out.iter_mut().zip(vals) {
            *o += w * v;
        }
    }
    out
}

/// Volumes of geodesic balls about `p`, cut at the first conjugate point of each ray.
pub fn ball_volume(chart: &MetricChart, p: &[f64], radii: &[f64], grid: &SphereGrid, h: f64) -> Result<Vec<f64>> {
    let b = RayBundle::shoot(chart, None, p, grid, h, max_radius(radii)?)?;
    b.volumes(radii, false)
}

/// Weighted volumes `∫_{B_p(r)} e^{−f} dV`.
pub fn weighted_ball_volume(
    s: &SolitonInstance,
    p: &[f64],
    radii: &[f64],
    grid: &SphereGrid,
    h: f64,
) -> Result<Vec<f64>> {
    let b = RayBundle::shoot(&s.metric, Some(&s.f), p, grid, h, max_radius(radii)?)?;
    b.volumes(radii, true)
}

fn max_radius(radii: &[f64]) -> Result<f64> {
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Invalid("radii must be finite, non-negative and non-empty".into()));
    }
    Ok(radii.iter().copied().fold(0.0, f64::max))
}

/// Derivatives of `f` along a ray at `s = 0`: `(f(p), ∂_s f, ∂²_s f)`.
#[derive(Clone, Copy, Debug)]
struct RadialTaylor {
    f0: f64,
    f1: f64,
    f2: f64,
    /// `ρR(p)`
    rho_r0: f64,
}

fn taylor(s: &SolitonInstance, ray: &GeodesicRay) -> Result<RadialTaylor> {
    let p = &ray.samples[0].x;
    let conn = Connection::at(&s.metric, p)?;
    let jet = s.f.eval_jet(p)?;
    let hess = covariant_hessian(&conn, &jet);
    let v = &ray.direction;
    let n = v.len();
    let f1 = (0..n).map(|i| jet.gradient()[i] * v[i]).sum();
    let f2 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| hess[i * n + j] * v[i] * v[j])
        .sum();
    Ok(RadialTaylor {
        f0: jet.value(),
        f1,
        f2,
        rho_r0: s.rho * ray.samples[0].scalar,
    })
}

fn potential_values(ray: &GeodesicRay) -> Result<Vec<f64>> {
    ray.samples
        .iter()
        .map(|s| s.f.ok_or_else(|| Error::Invalid("ray carries no potential values".into())))
        .collect()
}

/// `Φ` at every sample of the ray.
fn phi_samples(s: &SolitonInstance, ray: &GeodesicRay) -> Result<Vec<f64>> {
    let t = taylor(s, ray)?;
    let f = potential_values(ray)?;
    let cf = cumulative(&f, ray.h);
    let lambda = s.lambda;
    Ok(ray
        .samples
        .iter()
        .enumerate()
        .map(|(k, smp)| {
            let r = smp.r;
            if r < 2.0 * ray.h {
                r * r * (t.f2 - lambda) / 6.0
            } else {
                -lambda * r * r / 6.0 + f[k] + t.f0 - 2.0 * cf[k] / r
            }
        })
        .collect())
}

/// `Ψ` at every sample of the ray.
fn psi_samples(s: &SolitonInstance, ray: &GeodesicRay) -> Result<Vec<f64>> {
    let t = taylor(s, ray)?;
    let f = potential_values(ray)?;
    let cf = cumulative(&f, ray.h);
    let trr: Vec<f64> = ray.samples.iter().map(|x| x.r * s.rho * x.scalar).collect();
    let inner = cumulative(&trr, ray.h);
    let outer = cumulative(&inner, ray.h);
    let lambda = s.lambda;
    Ok(ray
        .samples
        .iter()
        .enumerate()
        .map(|(k, smp)| {
            let r = smp.r;
            if r < 2.0 * ray.h {
                -t.f0 - r * t.f1 - r * r * (lambda / 6.0 + t.f2 / 3.0 + t.rho_r0 / 6.0)
            } else {
                -lambda * r * r / 6.0 + t.f0 - 2.0 * cf[k] / r - outer[k] / r
            }
        })
        .collect())
}

/// `Φ(θ, r) = −λr²/6 + f(θ,r) + f(p) − (2/r)∫₀^r f(θ,s) ds`, by series below `2h`.
pub fn phi(s: &SolitonInstance, ray: &GeodesicRay, r: f64) -> Result<f64> {
    require(ray, r)?;
    let t = taylor(s, ray)?;
    if r < 2.0 * ray.h {
        return Ok(r * r * (t.f2 - s.lambda) / 6.0);
    }
    let f = potential_values(ray)?;
    let cf = cumulative(&f, ray.h);
    let fr = radial::interpolate(&f, ray.h, r);
    Ok(-s.lambda * r * r / 6.0 + fr + t.f0 - 2.0 * integral_to(&f, &cf, ray.h, r) / r)
}

/// `Ψ(θ, r) = −λr²/6 + f(p) − (2/r)∫₀^r f ds − (1/r)∫₀^r∫₀^s tρR dt ds`, by series below `2h`.
pub fn psi(s: &SolitonInstance, ray: &GeodesicRay, r: f64) -> Result<f64> {
    require(ray, r)?;
    let t = taylor(s, ray)?;
    if r < 2.0 * ray.h {
        return Ok(-t.f0 - r * t.f1 - r * r * (s.lambda / 6.0 + t.f2 / 3.0 + t.rho_r0 / 6.0));
    }
    let f = potential_values(ray)?;
    let cf = cumulative(&f, ray.h);
    let trr: Vec<f64> = ray.samples.iter().map(|x| x.r * s.rho * x.scalar).collect();
    let inner = cumulative(&trr, ray.h);
    let outer = cumulative(&inner, ray.h);
    Ok(-s.lambda * r * r / 6.0 + t.f0
        - 2.0 * integral_to(&f, &cf, ray.h, r) / r
        - integral_to(&inner, &outer, ray.h, r) / r)
}

/// Upper bound for `Vol(B_p(r))` with integrand `e^Φ s^{n−1}`.
pub fn bound_13(s: &SolitonInstance, p: &[f64], radii: &[f64], grid: &SphereGrid, h: f64) -> Result<Vec<f64>> {
    let b = RayBundle::shoot(&s.metric, Some(&s.f), p, grid, h, max_radius(radii)?)?;
    bound13_from(s, &b, radii)
}

/// Upper bound for `Vol_f(B_p(r))` with integrand `e^Ψ s^{n−1}`.
pub fn bound_14(s: &SolitonInstance, p: &[f64], radii: &[f64], grid: &SphereGrid, h: f64) -> Result<Vec<f64>> {
    let b = RayBundle::shoot(&s.metric, Some(&s.f), p, grid, h, max_radius(radii)?)?;
    bound14_from(s, &b, radii)
}

fn bound13_from(s: &SolitonInstance, b: &RayBundle, radii: &[f64]) -> Result<Vec<f64>> {
    let e = b.rays.iter().map(|r| phi_samples(s, r)).collect::<Result<Vec<_>>>()?;
    b.bound_with(radii, &e)
}

fn bound14_from(s: &SolitonInstance, b: &RayBundle, radii: &[f64]) -> Result<Vec<f64>> {
    let e = b.rays.iter().map(|r| psi_samples(s, r)).collect::<Result<Vec<_>>>()?;
    b.bound_with(radii, &e)
}

/// Constants of the quadratic-growth bound for `Vol_f`.
#[derive(Clone, Debug, Serialize)]
pub struct Corollary15 {
    pub delta: f64,
    /// `(λ + δ)/2`
    pub c: f64,
    pub a: f64,
    pub r0: f64,
    /// Smallest sampled `ρR`.
    pub min_rho_r: f64,
}

/// Estimate `a` and `r₀` from the potential along the rays of `b` (radii up to `r_max`).
///
/// `a` is the smallest value on the grid `0, 0.01, …, 10` with
/// `f(x) ≥ c·d(x)² − a·d(x)` on every sample; `r₀` is the smallest radius on
/// the grid of step 0.01 from which `f(p) − c r² + a r ≤ r²/2` holds up to `r_max`.
pub fn corollary15_params(s: &SolitonInstance, b: &RayBundle, delta: f64, r_max: f64) -> Result<Option<Corollary15>> {
    if !(delta > -s.lambda) {
        return Err(Error::Invalid(format!(
            "delta = {delta} must exceed -lambda = {}",
            -s.lambda
        )));
    }
    let c = 0.5 * (s.lambda + delta);
    let mut samples = Vec::new();
    let mut min_rho_r = f64::INFINITY;
    for ray in &b.rays {
        for smp in ray.samples.iter().filter(|x| x.r <= r_max + 1e-12) {
            let f = smp
                .f
                .ok_or_else(|| Error::Invalid("ray carries no potential values".into()))?;
            samples.push((smp.r, f));
            min_rho_r = min_rho_r.min(s.rho * smp.scalar);
        }
    }
    let fits = |a: f64| {
        samples
            .iter()
            .all(|&(d, f)| f >= c * d * d - a * d - 1e-9 * (1.0 + f.abs()))
    };
    let Some(a) = (0..=1000).map(|i| i as f64 * 0.01).find(|&a| fits(a)) else {
        return Ok(None);
    };
    let f0 = s.f.eval(&b.base_point)?;
    let holds = |r: f64| f0 - c * r * r + a * r <= 0.5 * r * r;
    let steps = (r_max / 0.01).round() as usize;
    let mut r0 = None;
    for i in (1..=steps).rev() {
        if holds(i as f64 * 0.01) {
            r0 = Some(i as f64 * 0.01);
        } else {
            break;
        }
    }
    Ok(r0.map(|r0| Corollary15 {
        delta,
        c,
        a,
        r0,
        min_rho_r,
    }))
}

/// `Σ_θ w(θ) ∫₀^r e^{s²/2} s^{n−1} ds`, for `r ≥ r₀` (else `None`).
pub fn bound_15(grid: &SphereGrid, radii: &[f64], params: &Corollary15, h: f64) -> Vec<Option<f64>> {
    let n = grid.dim as i32;
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let steps = (r_max / h).ceil() as usize + 2;
    let v: Vec<f64> = (0..=steps)
        .map(|k| {
            let s = k as f64 * h;
            (0.5 * s * s).exp() * s.powi(n - 1)
        })
        .collect();
    let cum = cumulative(&v, h);
    let area = grid.total_weight();
    radii
        .iter()
        .map(|&r| (r >= params.r0 - 1e-12).then(|| area * integral_to(&v, &cum, h, r)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ComparisonOptions {
    /// Defaults to the instance's ball center.
    pub base_point: Option<Vec<f64>>,
    pub radii: Vec<f64>,
    pub h: f64,
    /// Defaults to `SphereGrid::default_for(n)`.
    pub grid: Option<SphereGrid>,
    /// Lower bound for `ρR`; the quadratic-growth bound is evaluated when set.
    pub delta: Option<f64>,
}

impl Default for ComparisonOptions {
    fn default() -> Self {
        ComparisonOptions {
            base_point: None,
            radii: vec![0.5, 1.0, 2.0],
            h: DEFAULT_VOLUME_STEP,
            grid: None,
            delta: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub r: f64,
    pub vol: f64,
    pub bound13: f64,
    pub volf: f64,
    pub bound14: f64,
    pub bound15: Option<f64>,
    /// `bound − volume`
    pub margin13: f64,
    pub margin14: f64,
    pub margin15: Option<f64>,
    /// `|margin| ≤ 0.5%` of the volume.
    pub equal13: bool,
    pub equal14: bool,
    /// `volume ≤ bound·(1 + 0.5%)`.
    pub holds13: bool,
    pub holds14: bool,
    pub holds15: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Hypotheses {
    pub lambda_positive: bool,
    pub rho_positive: bool,
    pub min_scalar: f64,
    pub scalar_nonnegative: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub schema: u32,
    pub entry: String,
    pub dim: usize,
    pub base_point: Vec<f64>,
    pub h: f64,
    pub directions: usize,
    pub rows: Vec<ComparisonRow>,
    /// Radii whose balls leave the chart (no row reported).
    pub unreachable_radii: Vec<f64>,
    pub hypotheses: Hypotheses,
    pub corollary15: Option<Corollary15>,
    pub warnings: Vec<String>,
}

fn relative(margin: f64, vol: f64) -> f64 {
    margin / vol.abs().max(f64::MIN_POSITIVE)
}

/// Volumes, weighted volumes and all bounds on one shared set of rays.
pub fn compare(s: &SolitonInstance, opts: &ComparisonOptions) -> Result<ComparisonReport> {
    let n = s.dim();
    let p = opts.base_point.clone().unwrap_or_else(|| s.center().to_vec());
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => SphereGrid::default_for(n)?,
    };
    let r_max = max_radius(&opts.radii)?;
    let b = RayBundle::shoot(&s.metric, Some(&s.f), &p, &grid, opts.h, r_max)?;
    let reach = b.reach();
    let (radii, unreachable_radii): (Vec<f64>, Vec<f64>) =
        opts.radii.iter().partition(|&&r| r <= reach + 1e-12);

    let mut warnings = Vec::new();
    if !unreachable_radii.is_empty() {
        warnings.push(format!(
            "rays leave the chart at r = {reach:.4}; radii {unreachable_radii:?} not evaluated"
        ));
    }
    let min_scalar = b
        .rays
        .iter()
        .flat_map(|r| r.samples.iter().filter(|x| x.r <= r_max.min(reach) + 1e-12))
        .map(|x| x.scalar)
        .fold(f64::INFINITY, f64::min);
    let hypotheses = Hypotheses {
        lambda_positive: s.lambda > 0.0,
        rho_positive: s.rho > 0.0,
        min_scalar,
        scalar_nonnegative: min_scalar >= -1e-9,
    };
    if !(hypotheses.lambda_positive && hypotheses.rho_positive && hypotheses.scalar_nonnegative) {
        warnings.push(format!(
            "volume bound hypotheses violated (lambda > 0: {}, rho > 0: {}, min R = {:.6e})",
            hypotheses.lambda_positive, hypotheses.rho_positive, min_scalar
        ));
    }

    let vol = b.volumes(&radii, false)?;
    let volf = b.volumes(&radii, true)?;
    let b13 = bound13_from(s, &b, &radii)?;
    let b14 = bound14_from(s, &b, &radii)?;
    let corollary15 = match opts.delta {
        Some(delta) if !radii.is_empty() => {
            let top = radii.iter().copied().fold(0.0, f64::max);
            let c = corollary15_params(s, &b, delta, top)?;
            match &c {
                None => warnings.push("no growth constants found for the quadratic bound".into()),
                Some(c) if c.min_rho_r < delta => warnings.push(format!(
                    "rho*R >= delta violated on samples (min rho*R = {:.6e}, delta = {delta})",
                    c.min_rho_r
                )),
                Some(_) => {}
            }
            c
        }
        _ => None,
    };
    let b15 = match &corollary15 {
        Some(c) => bound_15(&grid, &radii, c, opts.h),
        None => vec![None; radii.len()],
    };
    let tol = EQUALITY_TOLERANCE;
    let rows = (0..radii.len())
        .map(|i| {
            let (m13, m14) = (b13[i] - vol[i], b14[i] - volf[i]);
            let m15 = b15[i].map(|b| b - volf[i]);
            ComparisonRow {
                r: radii[i],
                vol: vol[i],
                bound13: b13[i],
                volf: volf[i],
                bound14: b14[i],
                bound15: b15[i],
                margin13: m13,
                margin14: m14,
                margin15: m15,
                equal13: relative(m13, vol[i]).abs() <= tol,
                equal14: relative(m14, volf[i]).abs() <= tol,
                holds13: vol[i] <= b13[i] * (1.0 + tol),
                holds14: volf[i] <= b14[i] * (1.0 + tol),
                holds15: b15[i].map(|b| volf[i] <= b * (1.0 + tol)),
            }
        })
        .collect();
    Ok(ComparisonReport {
        schema: 1,
        entry: s.id.clone(),
        dim: n,
        base_point: p,
        h: opts.h,
        directions: grid.len(),
        rows,
        unreachable_radii,
        hypotheses,
        corollary15,
        warnings,
    })
}

impl ComparisonReport {
    /// Flat table, one row per radius; empty cells for bounds not evaluated.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "r,vol,bound13,volf,bound14,bound15,margin13,margin14,margin15,equal13,equal14,holds13,holds14,holds15"
        )?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{},{:?},{:?},{},{},{},{},{},{}",
                r.r,
                r.vol,
                r.bound13,
                r.volf,
                r.bound14,
                opt(r.bound15),
                r.margin13,
                r.margin14,
                opt(r.margin15),
                r.equal13,
                r.equal14,
                r.holds13,
                r.holds14,
                r.holds15.map(|b| b.to_string()).unwrap_or_default()
            )?;
        }
        Ok(())
    }
}
