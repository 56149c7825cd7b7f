//! Geodesic shooting with parallel-transported Jacobi fields.
//!
//! The transverse Jacobi matrix `A` solves `A'' = −K A` in a parallel frame
//! `E_1..E_{n−1}` orthogonal to the velocity, with `K_bc = ⟨R(E_c, γ')γ', E_b⟩`,
//! `A(0) = 0` and `A'(0) = I`. Then `J = det A` is the polar area element and
//! `w = tr(A' A⁻¹) = ∂_r log J`.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{Connection, MetricChart};
use nalgebra::DMatrix;
use serde::Serialize;
use std::io::Write;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_R_MAX: f64 = 10.0;
/// Energy drift that aborts a ray.
pub const ENERGY_TOLERANCE: f64 = 1e-6;
const MAX_SUBSTEPS: usize = 1024;
/// Euclidean coordinate speed of a g-unit ray beyond which the chart is
/// treated as degenerate (e.g. near the point at infinity of a stereographic chart).
pub const CHART_SPEED_LIMIT: f64 = 1e3;
/// Target of `h · |Γ(γ', ·)|` per substep.
const SUBSTEP_RATE: f64 = 0.05;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootOptions {
    pub h: f64,
    pub r_max: f64,
    /// Stop one step after the first conjugate point.
    pub stop_at_conjugate: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            h: DEFAULT_STEP,
            r_max: DEFAULT_R_MAX,
            stop_at_conjugate: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RaySample {
    pub r: f64,
    pub x: Vec<f64>,
    pub velocity: Vec<f64>,
    pub jacobian: f64,
    pub w: f64,
    pub ric_rr: f64,
    pub scalar: f64,
    pub f: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicRay {
    pub dim: usize,
    /// Initial g-unit velocity at the base point.
    pub direction: Vec<f64>,
    pub h: f64,
    pub r_max: f64,
    pub samples: Vec<RaySample>,
    /// First conjugate point, `None` when none was found before the end of the ray.
    pub conjugate_radius: Option<f64>,
    /// Radius of the last sample when the ray left the chart domain.
    pub left_domain_at: Option<f64>,
    pub max_energy_drift: f64,
}

impl GeodesicRay {
    pub fn last_radius(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.r)
    }

    /// `Err(LeftDomain)` when the ray stopped at the boundary before `r`.
    pub fn require(&self, r: f64) -> Result<()> {
        match self.left_domain_at {
            Some(end) if end < r => Err(Error::LeftDomain { r: end }),
            _ => Ok(()),
        }
    }

    /// Ray dump with columns `r, x1..xn, J, w, Ric_rr, f`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = vec!["r".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        header.extend(["J", "w", "Ric_rr", "f"].map(String::from));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = vec![format!("{:?}", s.r)];
            row.extend(s.x.iter().map(|v| format!("{v:?}")));
            row.push(format!("{:?}", s.jacobian));
            row.push(format!("{:?}", s.w));
            row.push(format!("{:?}", s.ric_rr));
            row.push(s.f.map(|v| format!("{v:?}")).unwrap_or_default());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Columns of `L⁻ᵀ` where `g = L Lᵀ`: a g-orthonormal basis at `p`.
pub fn orthonormal_frame(chart: &MetricChart, p: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = chart.dim();
    let g = DMatrix::from_row_slice(n, n, &chart.metric_at(p)?);
    let chol = g.cholesky().ok_or_else(|| Error::SingularMetric { point: p.to_vec() })?;
    let l = chol.l();
    let linv_t = l
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric { point: p.to_vec() })?
        .transpose();
    Ok((0..n).map(|j| linv_t.column(j).iter().copied().collect()).collect())
}

/// The g-unit tangent vector `Σ θ_a F_a` for a Euclidean unit vector `θ`.
pub fn tangent_from_direction(frame: &[Vec<f64>], theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let mut v = vec![0.0; n];
    for (a, col) in frame.iter().enumerate() {
        for k in 0..n {
            v[k] += theta[a] * col[k];
        }
    }
    v
}

struct Layout {
    n: usize,
}

impl Layout {
    fn m(&self) -> usize {
        self.n - 1
    }
    fn x(&self) -> std::ops::Range<usize> {
        0..self.n
    }
    fn v(&self) -> std::ops::Range<usize> {
        self.n..2 * self.n
    }
    fn e(&self, a: usize) -> std::ops::Range<usize> {
        let s = 2 * self.n + a * self.n;
        s..s + self.n
    }
    fn a0(&self) -> usize {
        2 * self.n + self.m() * self.n
    }
    fn b0(&self) -> usize {
        self.a0() + self.m() * self.m()
    }
    fn len(&self) -> usize {
        self.b0() + self.m() * self.m()
    }
}

/// Geometry at a state: the transverse curvature matrix and derived scalars.
struct Local {
    conn: Connection,
    riem: Vec<f64>,
}

impl Local {
    fn at(chart: &MetricChart, x: &[f64]) -> Result<Self> {
        if !chart.domain().contains_interior(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        let conn = Connection::at(chart, x)?;
        let riem = conn.riemann();
        Ok(Local { conn, riem })
    }

    /// `K_bc = g(R(E_c, v)v, E_b)`, symmetrized.
    fn transverse(&self, lay: &Layout, y: &[f64]) -> DMatrix<f64> {
        let n = lay.n;
        let m = lay.m();
        let v = &y[lay.v()];
        // R(X, v)v as a linear map on X: M[l][i] = Riem[l][k][i][j] v^k v^j
        let mut map = vec![0.0; n * n];
        for l in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    for j in 0..n {
                        s += self.riem[((l * n + k) * n + i) * n + j] * v[k] * v[j];
                    }
                }
                map[l * n + i] = s;
            }
        }
        let mut k = DMatrix::zeros(m, m);
        for c in 0..m {
            let ec = &y[lay.e(c)];
            let rc: Vec<f64> = (0..n)
                .map(|l| (0..n).map(|i| map[l * n + i] * ec[i]).sum())
                .collect();
            for b in 0..m {
                k[(b, c)] = self.conn.inner(&rc, &y[lay.e(b)]);
            }
        }
        (&k + k.transpose()) * 0.5
    }

    fn scalar(&self) -> f64 {
        let ric = self.conn.ricci_from(&self.riem);
        self.conn.trace(&ric)
    }

    /// Operator-norm estimate of `Γ(v, ·)` for substep control.
    fn rate(&self, lay: &Layout, y: &[f64]) -> f64 {
        let n = lay.n;
        let v = &y[lay.v()];
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                let s: f64 = (0..n).map(|i| self.conn.christoffel(k, i, j) * v[i]).sum();
                row += s.abs();
            }
            worst = worst.max(row);
        }
        worst
    }
}

fn derivative(lay: &Layout, local: &Local, y: &[f64]) -> Vec<f64> {
    let n = lay.n;
    let m = lay.m();
    let mut dy = vec![0.0; lay.len()];
    let v = &y[lay.v()];
    let conn = &local.conn;
    dy[lay.x()].copy_from_slice(v);
    let transport = |u: &[f64], out: &mut [f64]| {
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += conn.christoffel(k, i, j) * v[i] * u[j];
                }
            }
            out[k] = -s;
        }
    };
    let mut tmp = vec![0.0; n];
    transport(v, &mut tmp);
    dy[lay.v()].copy_from_slice(&tmp);
    for a in 0..m {
        transport(&y[lay.e(a)], &mut tmp);
        dy[lay.e(a)].copy_from_slice(&tmp);
    }
    let (a0, b0) = (lay.a0(), lay.b0());
    dy[a0..a0 + m * m].copy_from_slice(&y[b0..b0 + m * m]);
    let k = local.transverse(lay, y);
    let a = DMatrix::from_row_slice(m, m, &y[a0..a0 + m * m]);
    let ka = -(k * a);
    for r in 0..m {
        for c in 0..m {
            dy[b0 + r * m + c] = ka[(r, c)];
        }
    }
    dy
}

fn axpy(y: &[f64], t: f64, d: &[f64]) -> Vec<f64> {
    y.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

/// One classical RK4 step of size `tau`; `first` is the geometry at `y`.
fn rk4(chart: &MetricChart, lay: &Layout, y: &[f64], first: &Local, tau: f64) -> Result<Vec<f64>> {
    let k1 = derivative(lay, first, y);
    let y2 = axpy(y, 0.5 * tau, &k1);
    let k2 = derivative(lay, &Local::at(chart, &y2[lay.x()])?, &y2);
    let y3 = axpy(y, 0.5 * tau, &k2);
    let k3 = derivative(lay, &Local::at(chart, &y3[lay.x()])?, &y3);
    let y4 = axpy(y, tau, &k3);
    let k4 = derivative(lay, &Local::at(chart, &y4[lay.x()])?, &y4);
    Ok((0..y.len())
        .map(|i| y[i] + tau / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Advance by `tau` with enough substeps to resolve the local Christoffel rate.
fn advance(chart: &MetricChart, lay: &Layout, y: &[f64], local: &Local, tau: f64) -> Result<Vec<f64>> {
    let k = local.transverse(lay, y);
    let curv = k.iter().fold(0.0f64, |a, v| a.max(v.abs())).sqrt();
    let rate = local.rate(lay, y).max(curv);
    let steps = ((tau.abs() * rate / SUBSTEP_RATE).ceil() as usize).clamp(1, MAX_SUBSTEPS);
    let sub = tau / steps as f64;
    let mut cur = rk4(chart, lay, y, local, sub)?;
    for _ in 1..steps {
        let l = Local::at(chart, &cur[lay.x()])?;
        cur = rk4(chart, lay, &cur, &l, sub)?;
    }
    Ok(cur)
}

fn jacobi(lay: &Layout, y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = lay.m();
    let a = DMatrix::from_row_slice(m, m, &y[lay.a0()..lay.a0() + m * m]);
    let b = DMatrix::from_row_slice(m, m, &y[lay.b0()..lay.b0() + m * m]);
    (a, b)
}

fn det_a(lay: &Layout, y: &[f64]) -> f64 {
    jacobi(lay, y).0.determinant()
}

fn sigma_min(lay: &Layout, y: &[f64]) -> f64 {
    let (a, _) = jacobi(lay, y);
    a.singular_values().min()
}

fn initial_state(chart: &MetricChart, lay: &Layout, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = lay.n;
    let m = lay.m();
    let conn = Connection::at(chart, p)?;
    // Gram–Schmidt in g starting from v, completed by the orthonormal frame.
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for cand in orthonormal_frame(chart, p)? {
        if basis.len() == n {
            break;
        }
        let mut u = cand;
        for _ in 0..2 {
            for e in &basis {
                let c = conn.inner(&u, e);
                for k in 0..n {
                    u[k] -= c * e[k];
                }
            }
        }
        let norm = conn.inner(&u, &u).sqrt();
        if norm > 1e-8 {
            basis.push(u.iter().map(|x| x / norm).collect());
        }
    }
    if basis.len() != n {
        return Err(Error::Invalid("could not complete a transverse frame".into()));
    }
    let mut y = vec![0.0; lay.len()];
    y[lay.x()].copy_from_slice(p);
    y[lay.v()].copy_from_slice(v);
    for a in 0..m {
        y[lay.e(a)].copy_from_slice(&basis[a + 1]);
    }
    for a in 0..m {
        y[lay.b0() + a * m + a] = 1.0;
    }
    Ok(y)
}

fn sample_at(
    lay: &Layout,
    local: &Local,
    y: &[f64],
    r: f64,
    f: Option<&Expression>,
) -> Result<(RaySample, f64)> {
    let x = y[lay.x()].to_vec();
    let v = &y[lay.v()];
    let m = lay.m();
    let (a, b) = jacobi(lay, y);
    let (jac, w) = if r == 0.0 {
        (0.0, f64::INFINITY)
    } else {
        let det = a.determinant();
        let w = match a.clone().lu().solve(&DMatrix::identity(m, m)) {
            Some(inv) => (b * inv).trace(),
            None => f64::NAN,
        };
        (det, w)
    };
    let drift = (local.conn.inner(v, v) - 1.0).abs();
    Ok((
        RaySample {
            r,
            f: f.map(|e| e.eval(&x)).transpose()?,
            x,
            velocity: v.to_vec(),
            jacobian: jac,
            w,
            ric_rr: local.transverse(lay, y).trace(),
            scalar: local.scalar(),
        },
        drift,
    ))
}

/// Integrate the geodesic through `p` with g-unit initial velocity `v`.
pub fn shoot(
    chart: &MetricChart,
    f: Option<&Expression>,
    p: &[f64],
    v: &[f64],
    opts: &ShootOptions,
) -> Result<GeodesicRay> {
    let n = chart.dim();
    if n < 2 {
        return Err(Error::Invalid("geodesic rays need dimension >= 2".into()));
    }
    if p.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if p.len() != n { p.len() } else { v.len() },
        });
    }
    if !(opts.h > 0.0 && opts.h <= 1e-2) || !(opts.r_max > 0.0) {
        return Err(Error::Invalid("step must lie in (0, 1e-2] and r_max must be positive".into()));
    }
    if !chart.domain().contains_interior(p) {
        return Err(Error::OutsideDomain { point: p.to_vec() });
    }
    let lay = Layout { n };
    let local0 = Local::at(chart, p)?;
    if (local0.conn.inner(v, v) - 1.0).abs() > 1e-10 {
        return Err(Error::Invalid("initial direction is not g-unit".into()));
    }
    let mut y = initial_state(chart, &lay, p, v)?;
    let h = opts.h;
    let steps = (opts.r_max / h).round() as usize;
    let (s0, _) = sample_at(&lay, &local0, &y, 0.0, f)?;
    let mut ray = GeodesicRay {
        dim: n,
        direction: v.to_vec(),
        h,
        r_max: opts.r_max,
        samples: vec![s0],
        conjugate_radius: None,
        left_domain_at: None,
        max_energy_drift: 0.0,
    };
    let mut local = local0;
    // recent states for conjugate-point refinement: (r, state, σ_min, |B|)
    let mut history: Vec<(f64, Vec<f64>, f64, f64)> = Vec::with_capacity(3);
    for k in 1..=steps {
        let r_prev = (k - 1) as f64 * h;
        let r = k as f64 * h;
        if y[lay.v()].iter().map(|c| c * c).sum::<f64>().sqrt() > CHART_SPEED_LIMIT {
            ray.left_domain_at = Some(r_prev);
            break;
        }
        let next = match advance(chart, &lay, &y, &local, h) {
            Ok(s) => s,
            Err(Error::OutsideDomain { .. } | Error::SingularMetric { .. } | Error::Domain(_)) => {
                ray.left_domain_at = Some(r_prev);
                break;
            }
            Err(e) => return Err(e),
        };
        let next_local = match Local::at(chart, &next[lay.x()]) {
            Ok(l) => l,
            Err(Error::OutsideDomain { .. } | Error::SingularMetric { .. } | Error::Domain(_)) => {
                ray.left_domain_at = Some(r_prev);
                break;
            }
            Err(e) => return Err(e),
        };
        let (sample, drift) = sample_at(&lay, &next_local, &next, r, f)?;
        if !(drift <= ENERGY_TOLERANCE) {
            return Err(Error::StepTooLarge { drift });
        }
        ray.max_energy_drift = ray.max_energy_drift.max(drift);

        if ray.conjugate_radius.is_none() && k >= 2 {
            let d_prev = det_a(&lay, &y);
            let d_next = sample.jacobian;
            if d_prev.signum() != d_next.signum() && d_prev != 0.0 {
                ray.conjugate_radius = Some(bisect_sign(chart, &lay, &y, &local, r_prev, h, d_prev)?);
            }
        }
        let (_, bmat) = jacobi(&lay, &next);
        history.push((r, next.clone(), sigma_min(&lay, &next), bmat.norm()));
        if history.len() > 3 {
            history.remove(0);
        }
        if ray.conjugate_radius.is_none() && history.len() == 3 {
            let (s0, s1, s2) = (history[0].2, history[1].2, history[2].2);
            if s1 < s0 && s1 < s2 && s1 <= 2.0 * h * history[1].3.max(1e-300) {
                let (r0, y0) = (history[0].0, history[0].1.clone());
                let l0 = Local::at(chart, &y0[lay.x()])?;
                ray.conjugate_radius = Some(golden_sigma(chart, &lay, &y0, &l0, r0, h)?);
            }
        }
        ray.samples.push(sample);
        y = next;
        local = next_local;
        if opts.stop_at_conjugate && ray.conjugate_radius.is_some() {
            break;
        }
    }
    Ok(ray)
}

/// Root of `det A` within one step, by bisection on a single RK4 step to `h/100`.
fn bisect_sign(
    chart: &MetricChart,
    lay: &Layout,
    y: &[f64],
    local: &Local,
    r0: f64,
    h: f64,
    d0: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > h / 100.0 {
        let mid = 0.5 * (lo + hi);
        let d = det_a(lay, &advance(chart, lay, y, local, mid)?);
        if d.signum() == d0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(r0 + 0.5 * (lo + hi))
}

/// Minimum of `σ_min(A)` over `[r0, r0 + 2h]` by golden-section search.
fn golden_sigma(chart: &MetricChart, lay: &Layout, y: &[f64], local: &Local, r0: f64, h: f64) -> Result<f64> {
    const G: f64 = 0.618_033_988_749_894_8;
    let eval = |t: f64| -> Result<f64> { Ok(sigma_min(lay, &advance(chart, lay, y, local, t)?)) };
    let (mut a, mut b) = (0.0, 2.0 * h);
    let mut c = b - G * (b - a);
    let mut d = a + G * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > h / 100.0 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - G * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + G * (b - a);
            fd = eval(d)?;
        }
    }
    Ok(r0 + 0.5 * (a + b))
}

/// First conjugate radius of a ray, `None` for the +∞ marker.
pub fn cut_radius(ray: &GeodesicRay) -> Option<f64> {
    ray.conjugate_radius
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RiccatiPoint {
    pub r: f64,
    pub slack: f64,
    /// Estimated truncation error of `w'`.
    pub error_estimate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiccatiAudit {
    pub points: Vec<RiccatiPoint>,
    /// Last audited radius.
    pub window_end: f64,
    /// Samples after the window where the sampling no longer resolves `w`
    /// (next to a conjugate point or a singular chart boundary).
    pub unresolved_tail: usize,
    pub max_slack: f64,
}

/// Estimated error of `w'` above which samples are not audited.
pub const RICCATI_RESOLUTION: f64 = 1e-6;

/// `w' + w²/(n−1) + Ric(∂r, ∂r)` at samples with `r ∈ [h, ρ(θ) − h]`.
pub fn riccati_audit(ray: &GeodesicRay) -> Vec<RiccatiPoint> {
    riccati_report(ray).points
}

/// [`riccati_audit`] with window bookkeeping.
///
/// `w'` comes from fourth-order differences of the sampled product `u = r w`
/// (`w' = u'/r − u/r²`), which is smooth at the base point where `w` itself
/// has a pole; `u(0) = n − 1`. The window also ends at the first sample whose
/// estimated truncation error exceeds [`RICCATI_RESOLUTION`], which happens
/// only where `w` itself blows up.
pub fn riccati_report(ray: &GeodesicRay) -> RiccatiAudit {
    let s = &ray.samples;
    let h = ray.h;
    let n1 = ray.dim as f64 - 1.0;
    let end = ray.conjugate_radius.unwrap_or(f64::INFINITY) - h;
    let u = |k: usize| if k == 0 { n1 } else { s[k].r * s[k].w };
    let len = s.len();
    let mut points = Vec::new();
    let mut unresolved_tail = 0;
    let mut window_end = 0.0;
    for k in 1..len {
        let r = s[k].r;
        if r > end + 1e-12 {
            break;
        }
        let du = if k == 1 && len > 4 {
            (-3.0 * u(0) - 10.0 * u(1) + 18.0 * u(2) - 6.0 * u(3) + u(4)) / (12.0 * h)
        } else if k >= 2 && k + 2 < len {
            (u(k - 2) - 8.0 * u(k - 1) + 8.0 * u(k + 1) - u(k + 2)) / (12.0 * h)
        } else {
            break;
        };
        // Richardson estimate against the same stencil at spacing 2h; the
        // first samples rely on u being smooth at the base point.
        let error_estimate = if k < 4 {
            0.0
        } else if k + 4 < len {
            let wide = (u(k - 4) - 8.0 * u(k - 2) + 8.0 * u(k + 2) - u(k + 4)) / (24.0 * h);
            (wide - du).abs() / (15.0 * r)
        } else {
            f64::INFINITY
        };
        if !(error_estimate <= RICCATI_RESOLUTION) {
            unresolved_tail = len - k;
            break;
        }
        let dw = du / r - u(k) / (r * r);
        let w = s[k].w;
        window_end = r;
        points.push(RiccatiPoint {
            r,
            slack: dw + w * w / n1 + s[k].ric_rr,
            error_estimate,
        });
    }
    let max_slack = points.iter().map(|p| p.slack).fold(f64::NEG_INFINITY, f64::max);
    RiccatiAudit {
        points,
        window_end,
        unresolved_tail,
        max_slack,
    }
}
