//! Levi-Civita connection and curvature of a coordinate metric.
//!
//! Metric derivatives come exactly from the dual-number evaluator. Quantities
//! needing a third derivative of the metric (`∇R`, `div Ric`, `ΔR`) use
//! Richardson-extrapolated central differences of exact curvature values.

use super::chart::MetricChart;
use crate::error::{Error, Result};
use crate::expr::MAX_DIM;
use serde::Serialize;

/// Step for first derivatives of curvature quantities.
pub const GRAD_STEP: f64 = 1e-4;
/// Step for second derivatives of the scalar curvature (larger, to keep the
/// rounding noise of the second difference below 1e-8).
pub const HESS_STEP: f64 = 2e-3;

/// Metric, inverse and Christoffel symbols (with their first derivatives) at a point.
#[derive(Clone, Debug)]
pub struct Connection {
    pub n: usize,
    /// `g_ij`, row-major.
    pub g: Vec<f64>,
    /// `g^ij`, row-major.
    pub ginv: Vec<f64>,
    /// `Γ^k_ij` at `(k*n + i)*n + j`.
    pub gamma: Vec<f64>,
    /// `∂_m Γ^k_ij` at `((m*n + k)*n + i)*n + j`.
    pub dgamma: Vec<f64>,
}

impl Connection {
    pub fn at(chart: &MetricChart, x: &[f64]) -> Result<Self> {
        let n = chart.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let mut g = vec![0.0; n * n];
        // dg[(i*n + j)*n + k] = ∂_k g_ij ; d2g[((i*n + j)*n + k)*n + l] = ∂_kl g_ij
        let mut dg = vec![0.0; n * n * n];
        let mut d2g = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in i..n {
                let e = chart.coefficient(i, j);
                if e.is_literal(0.0) {
                    continue;
                }
                let jet = e.eval_jet(x)?;
                let (a, b) = (i * n + j, j * n + i);
                g[a] = jet.value();
                g[b] = g[a];
                for k in 0..n {
                    let d = jet.gradient()[k];
                    dg[a * n + k] = d;
                    dg[b * n + k] = d;
                    for l in k..n {
                        let h = jet.hessian(k, l);
                        d2g[(a * n + k) * n + l] = h;
                        d2g[(a * n + l) * n + k] = h;
                        d2g[(b * n + k) * n + l] = h;
                        d2g[(b * n + l) * n + k] = h;
                    }
                }
            }
        }
        let ginv = invert_spd(&g, n).ok_or_else(|| Error::SingularMetric { point: x.to_vec() })?;

        // Γ_lij and t_m,lij = ∂_m Γ_lij − ∂_m g_lb Γ^b_ij, symmetric in (i, j).
        let mut first = vec![0.0; n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5
                        * (dg[(j * n + l) * n + i] + dg[(i * n + l) * n + j]
                            - dg[(i * n + j) * n + l]);
                    first[(l * n + i) * n + j] = v;
                    first[(l * n + j) * n + i] = v;
                }
            }
        }
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for l in 0..n {
                let gkl = ginv[k * n + l];
                if gkl == 0.0 {
                    continue;
                }
                for ij in 0..n * n {
                    gamma[k * n * n + ij] += gkl * first[l * n * n + ij];
                }
            }
        }
        let mut t = vec![0.0; n * n * n * n];
        for m in 0..n {
            for l in 0..n {
                let row = (m * n + l) * n * n;
                for i in 0..n {
                    for j in i..n {
                        let mut v = 0.5
                            * (d2g[((j * n + l) * n + i) * n + m]
                                + d2g[((i * n + l) * n + j) * n + m]
                                - d2g[((i * n + j) * n + l) * n + m]);
                        for b in 0..n {
                            let d = dg[(l * n + b) * n + m];
                            if d != 0.0 {
                                v -= d * gamma[(b * n + i) * n + j];
                            }
                        }
                        t[row + i * n + j] = v;
                        t[row + j * n + i] = v;
                    }
                }
            }
        }
        // ∂_m Γ^k_ij = g^kl t_m,lij
        let mut dgamma = vec![0.0; n * n * n * n];
        for m in 0..n {
            for k in 0..n {
                let out = (m * n + k) * n * n;
                for l in 0..n {
                    let gkl = ginv[k * n + l];
                    if gkl == 0.0 {
                        continue;
                    }
                    let row = (m * n + l) * n * n;
                    for ij in 0..n * n {
                        dgamma[out + ij] += gkl * t[row + ij];
                    }
                }
            }
        }
        Ok(Connection {
            n,
            g,
            ginv,
            gamma,
            dgamma,
        })
    }

    #[inline]
    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    /// `Riem[l][k][i][j] = (R(∂_i, ∂_j) ∂_k)^l`, flattened at `((l*n + k)*n + i)*n + j`.
    pub fn riemann(&self) -> Vec<f64> {
        let n = self.n;
        let gm = |k: usize, i: usize, j: usize| self.gamma[(k * n + i) * n + j];
        let dgm = |m: usize, k: usize, i: usize, j: usize| self.dgamma[((m * n + k) * n + i) * n + j];
        let mut r = vec![0.0; n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut s = dgm(i, l, j, k) - dgm(j, l, i, k);
                        for m in 0..n {
                            s += gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                        }
                        r[((l * n + k) * n + i) * n + j] = s;
                        r[((l * n + k) * n + j) * n + i] = -s;
                    }
                }
            }
        }
        r
    }

    /// Ricci tensor from a Riemann tensor produced by [`Connection::riemann`].
    pub fn ricci_from(&self, riem: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut ric = vec![0.0; n * n];
        for j in 0..n {
            for k in j..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += riem[((i * n + k) * n + i) * n + j];
                }
                ric[j * n + k] = s;
                ric[k * n + j] = s;
            }
        }
        ric
    }

    pub fn trace(&self, t: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.ginv[i * n + j] * t[i * n + j];
            }
        }
        s
    }

    /// `|T|²_g` for a covariant 2-tensor.
    pub fn norm2_tensor(&self, t: &[f64]) -> f64 {
        let n = self.n;
        let mut raised = vec![0.0; n * n]; // T^i_j = g^ia T_aj
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += self.ginv[i * n + a] * t[a * n + j];
                }
                raised[i * n + j] = s;
            }
        }
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += raised[i * n + j] * raised[j * n + i];
            }
        }
        s
    }

    /// `|ω|²_g` for a covector.
    pub fn norm2_covector(&self, w: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.ginv[i * n + j] * w[i] * w[j];
            }
        }
        s
    }

    /// `g(u, v)` for vectors.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[i * n + j] * u[i] * v[j];
            }
        }
        s
    }

    /// Raise the index of a covector.
    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.ginv[i * n + j] * w[j]).sum())
            .collect()
    }
}

/// Inverse of a symmetric positive definite matrix, or `None` if Cholesky fails.
pub(crate) fn invert_spd(a: &[f64], n: usize) -> Option<Vec<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return None;
    }
    if n > MAX_DIM {
        return None;
    }
    // A = L Lᵀ, then A⁻¹ = L⁻ᵀ L⁻¹.
    let mut l = [0.0; MAX_DIM * MAX_DIM];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * MAX_DIM + k] * l[j * MAX_DIM + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        l[j * MAX_DIM + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * MAX_DIM + k] * l[j * MAX_DIM + k];
            }
            l[i * MAX_DIM + j] = s / d;
        }
    }
    let mut li = [0.0; MAX_DIM * MAX_DIM];
    for j in 0..n {
        li[j * MAX_DIM + j] = 1.0 / l[j * MAX_DIM + j];
        for i in j + 1..n {
            let mut s = 0.0;
            for k in j..i {
                s -= l[i * MAX_DIM + k] * li[k * MAX_DIM + j];
            }
            li[i * MAX_DIM + j] = s / l[i * MAX_DIM + i];
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in j..n {
                s += li[k * MAX_DIM + i] * li[k * MAX_DIM + j];
            }
            out[i * n + j] = s;
            out[j * n + i] = s;
        }
    }
    Some(out)
}

/// Curvature summary at a point.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureJet {
    pub point: Vec<f64>,
    /// `Γ^k_ij` at `(k*n + i)*n + j`.
    pub christoffel: Vec<f64>,
    /// Row-major `R_ij`.
    pub ricci: Vec<f64>,
    pub scalar: f64,
    pub ricci_norm2: f64,
    /// Covector `∂_i R`.
    pub grad_scalar: Vec<f64>,
}

/// Ricci tensor and scalar curvature, without derivatives.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub conn: Connection,
    pub ricci: Vec<f64>,
    pub scalar: f64,
}

impl Curvature {
    pub fn at(chart: &MetricChart, x: &[f64]) -> Result<Self> {
        let conn = Connection::at(chart, x)?;
        let riem = conn.riemann();
        let ricci = conn.ricci_from(&riem);
        let scalar = conn.trace(&ricci);
        Ok(Curvature {
            conn,
            ricci,
            scalar,
        })
    }
}

fn check_interior(chart: &MetricChart, x: &[f64]) -> Result<()> {
    if x.len() != chart.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim(),
            got: x.len(),
        });
    }
    if !chart.domain().contains_interior(x) {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    Ok(())
}

pub fn scalar_curvature(chart: &MetricChart, x: &[f64]) -> Result<f64> {
    Ok(Curvature::at(chart, x)?.scalar)
}

/// Richardson-extrapolated central difference of a vector-valued map along
/// every coordinate axis: `out[k]` is `∂_k F` (each of length `F.len()`).
pub(crate) fn central_gradient<F>(x: &[f64], step: f64, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    let mut y = x.to_vec();
    for k in 0..n {
        let mut diff = |h: f64| -> Result<Vec<f64>> {
            y[k] = x[k] + h;
            let p = f(&y)?;
            y[k] = x[k] - h;
            let m = f(&y)?;
            y[k] = x[k];
            Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let coarse = diff(step)?;
        let fine = diff(0.5 * step)?;
        out.push(
            fine.iter()
                .zip(&coarse)
                .map(|(f, c)| (4.0 * f - c) / 3.0)
                .collect(),
        );
    }
    Ok(out)
}

/// `∂_i R` by Richardson-extrapolated central differences.
pub fn grad_scalar_curvature(chart: &MetricChart, x: &[f64]) -> Result<Vec<f64>> {
    let d = central_gradient(x, GRAD_STEP, |y| Ok(vec![scalar_curvature(chart, y)?]))?;
    Ok(d.into_iter().map(|v| v[0]).collect())
}

/// Coordinate Hessian `∂_ij R` by Richardson-extrapolated central differences.
pub fn hessian_scalar_curvature(chart: &MetricChart, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let r0 = scalar_curvature(chart, x)?;
    let mut y = x.to_vec();
    let mut eval = |shifts: &[(usize, f64)]| -> Result<f64> {
        y.copy_from_slice(x);
        for &(k, h) in shifts {
            y[k] += h;
        }
        scalar_curvature(chart, &y)
    };
    let mut second = |i: usize, j: usize, h: f64| -> Result<f64> {
        if i == j {
            Ok((eval(&[(i, h)])? - 2.0 * r0 + eval(&[(i, -h)])?) / (h * h))
        } else {
            Ok((eval(&[(i, h), (j, h)])? - eval(&[(i, h), (j, -h)])?
                - eval(&[(i, -h), (j, h)])?
                + eval(&[(i, -h), (j, -h)])?)
                / (4.0 * h * h))
        }
    };
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let coarse = second(i, j, HESS_STEP)?;
            let fine = second(i, j, 0.5 * HESS_STEP)?;
            let v = (4.0 * fine - coarse) / 3.0;
            hess[i * n + j] = v;
            hess[j * n + i] = v;
        }
    }
    Ok(hess)
}

/// Connection, Ricci, scalar curvature, `|Ric|²` and `∇R` at an interior point.
pub fn curvature_at(chart: &MetricChart, x: &[f64]) -> Result<CurvatureJet> {
    check_interior(chart, x)?;
    let c = Curvature::at(chart, x)?;
    let grad_scalar = grad_scalar_curvature(chart, x)?;
    Ok(CurvatureJet {
        point: x.to_vec(),
        ricci_norm2: c.conn.norm2_tensor(&c.ricci),
        christoffel: c.conn.gamma.clone(),
        ricci: c.ricci,
        scalar: c.scalar,
        grad_scalar,
    })
}

/// `ΔR = g^ij (∂_ij R − Γ^k_ij ∂_k R)`.
pub fn laplacian_scalar_curvature(chart: &MetricChart, x: &[f64]) -> Result<f64> {
    let conn = Connection::at(chart, x)?;
    let grad = grad_scalar_curvature(chart, x)?;
    let hess = hessian_scalar_curvature(chart, x)?;
    let n = conn.n;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut cov = hess[i * n + j];
            for k in 0..n {
                cov -= conn.christoffel(k, i, j) * grad[k];
            }
            s += conn.ginv[i * n + j] * cov;
        }
    }
    Ok(s)
}

/// `|div Ric − ½ ∇R|_g`, the contracted second Bianchi identity residual.
pub fn bianchi_residual(chart: &MetricChart, x: &[f64]) -> Result<f64> {
    check_interior(chart, x)?;
    let n = chart.dim();
    let c = Curvature::at(chart, x)?;
    // ∂_k (Ric, R) stacked: first n*n entries Ric, last R.
    let d = central_gradient(x, GRAD_STEP, |y| {
        let c = Curvature::at(chart, y)?;
        let mut v = c.ricci;
        v.push(c.scalar);
        Ok(v)
    })?;
    let conn = &c.conn;
    let mut residual = vec![0.0; n];
    for (j, res) in residual.iter_mut().enumerate() {
        let mut div = 0.0;
        for i in 0..n {
            for k in 0..n {
                let gik = conn.ginv[i * n + k];
                if gik == 0.0 {
                    continue;
                }
                // ∇_k R_ij
                let mut cov = d[k][i * n + j];
                for m in 0..n {
                    cov -= conn.christoffel(m, k, i) * c.ricci[m * n + j]
                        + conn.christoffel(m, k, j) * c.ricci[i * n + m];
                }
                div += gik * cov;
            }
        }
        *res = div - 0.5 * d[j][n * n];
    }
    Ok(conn.norm2_covector(&residual).sqrt())
}
