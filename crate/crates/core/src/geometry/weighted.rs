//! f-weighted operators: Hessian, Laplacian, drifted Laplacian and the
//! Bakry-Émery Ricci tensor.

use super::chart::MetricChart;
use super::curvature::{Connection, Curvature};
use crate::error::Result;
use crate::expr::{Expression, Jet};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct WeightedOperators {
    /// Covariant Hessian `∇²f`, row-major.
    pub hess_f: Vec<f64>,
    pub laplacian_f: f64,
    /// `Δ_f u = Δu − ⟨∇f, ∇u⟩`.
    pub drift_laplacian_u: f64,
    /// `Ric + ∇²f`, row-major.
    pub ric_f: Vec<f64>,
}

/// `∂²u − Γ·∂u` for a jet.
pub fn covariant_hessian(conn: &Connection, jet: &Jet) -> Vec<f64> {
    let n = conn.n;
    let grad = jet.gradient();
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut v = jet.hessian(i, j);
            for k in 0..n {
                v -= conn.christoffel(k, i, j) * grad[k];
            }
            h[i * n + j] = v;
            h[j * n + i] = v;
        }
    }
    h
}

/// `∇²f`, `Δf`, `Δ_f u` and `Ric_f` at `x`.
pub fn weighted_operators_at(
    chart: &MetricChart,
    f: &Expression,
    u: &Expression,
    x: &[f64],
) -> Result<WeightedOperators> {
    let c = Curvature::at(chart, x)?;
    weighted_from(&c, f, u, x)
}

pub(crate) fn weighted_from(
    c: &Curvature,
    f: &Expression,
    u: &Expression,
    x: &[f64],
) -> Result<WeightedOperators> {
    let conn = &c.conn;
    let n = conn.n;
    let fj = f.eval_jet(x)?;
    let uj = u.eval_jet(x)?;
    let hess_f = covariant_hessian(conn, &fj);
    let hess_u = covariant_hessian(conn, &uj);
    let laplacian_f = conn.trace(&hess_f);
    let mut drift = conn.trace(&hess_u);
    for i in 0..n {
        for j in 0..n {
            drift -= conn.ginv[i * n + j] * fj.gradient()[i] * uj.gradient()[j];
        }
    }
    let ric_f = c.ricci.iter().zip(&hess_f).map(|(a, b)| a + b).collect();
    Ok(WeightedOperators {
        hess_f,
        laplacian_f,
        drift_laplacian_u: drift,
        ric_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_on_flat_space() {
        let lambda = 0.7;
        let m = MetricChart::euclidean(3).unwrap();
        let f = Expression::parse(&format!("{lambda}*(x1^2+x2^2+x3^2)/2")).unwrap();
        let u = Expression::parse("x1").unwrap();
        let x = [0.4, -1.2, 2.0];
        let w = weighted_operators_at(&m, &f, &u, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { lambda } else { 0.0 };
                assert!((w.hess_f[i * 3 + j] - want).abs() < 1e-14);
                assert!((w.ric_f[i * 3 + j] - want).abs() < 1e-14);
            }
        }
        assert!((w.laplacian_f - 3.0 * lambda).abs() < 1e-14);
        assert!((w.drift_laplacian_u + lambda * x[0]).abs() < 1e-14);
    }
}
