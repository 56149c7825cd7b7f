//! Closed-form Ricci and scalar curvature for tagged charts, used as an
//! independent check of the generic Christoffel path.

use super::chart::{MetricChart, Structure};
use crate::error::{Error, Result};

/// Ricci tensor (row-major) and scalar curvature from the structure tag, or
/// `None` for untagged charts.
pub fn tagged_curvature(chart: &MetricChart, x: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
    let n = chart.dim();
    let Some(s) = chart.structure() else {
        return Ok(None);
    };
    let mut ric = vec![0.0; n * n];
    let scalar;
    match s {
        Structure::Euclidean => scalar = 0.0,
        Structure::Conformal { phi } => {
            let j = phi.eval_jet(x)?;
            let d = j.gradient();
            let nn = n as f64;
            let lap: f64 = (0..n).map(|i| j.hessian(i, i)).sum();
            let grad2: f64 = d.iter().map(|v| v * v).sum();
            for a in 0..n {
                for b in 0..n {
                    let mut v = -(nn - 2.0) * (j.hessian(a, b) - d[a] * d[b]);
                    if a == b {
                        v -= lap + (nn - 2.0) * grad2;
                    }
                    ric[a * n + b] = v;
                }
            }
            scalar = -(-2.0 * j.value()).exp()
                * (2.0 * (nn - 1.0) * lap + (nn - 2.0) * (nn - 1.0) * grad2);
        }
        Structure::WarpedProduct {
            base,
            warping,
            fiber_dim,
        } => {
            if fiber_dim + 1 != n {
                return Err(Error::Invalid("warped fiber dimension mismatch".into()));
            }
            let m = *fiber_dim as f64;
            let b = base.eval_jet(x)?;
            let h = warping.eval_jet(x)?;
            let (bv, b1) = (b.value(), b.gradient()[0]);
            let (hv, h1, h2) = (h.value(), h.gradient()[0], h.hessian(0, 0));
            let gamma = b1 / (2.0 * bv);
            // derivatives of h in arclength along the base
            let h_tt = (h2 - gamma * h1) / bv;
            let h_t2 = h1 * h1 / bv;
            ric[0] = -m * (h2 - gamma * h1) / hv;
            let fiber = -(h_tt / hv + (m - 1.0) * h_t2 / (hv * hv));
            for i in 1..n {
                ric[i * n + i] = fiber * hv * hv;
            }
            scalar = -2.0 * m * h_tt / hv - m * (m - 1.0) * h_t2 / (hv * hv);
        }
        Structure::RotationallySymmetric { phi } => {
            let p = phi.eval_jet(x)?;
            let (pv, p1, p2) = (p.value(), p.gradient()[0], p.hessian(0, 0));
            let nn = n as f64;
            ric[0] = -(nn - 1.0) * p2 / pv;
            let ang = -p2 / pv + (nn - 2.0) * (1.0 - p1 * p1) / (pv * pv);
            let g = chart.metric_at(x)?;
            for i in 1..n {
                ric[i * n + i] = ang * g[i * n + i];
            }
            scalar = -2.0 * (nn - 1.0) * p2 / pv + (nn - 1.0) * (nn - 2.0) * (1.0 - p1 * p1) / (pv * pv);
        }
    }
    Ok(Some((ric, scalar)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;
    use crate::geometry::chart::{BoxDomain, Interval};
    use crate::geometry::curvature::Curvature;

    fn compare(chart: &MetricChart, x: &[f64]) {
        let (ric, r) = tagged_curvature(chart, x).unwrap().unwrap();
        let c = Curvature::at(chart, x).unwrap();
        assert!((c.scalar - r).abs() < 1e-9 * (1.0 + r.abs()), "{} vs {}", c.scalar, r);
        for (a, b) in c.ricci.iter().zip(&ric) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn conformal_matches_generic() {
        let m = MetricChart::conformal(
            BoxDomain::whole_space(4),
            Expression::parse("0.3*x1 - 0.2*x2*x3 + sin(x4)").unwrap(),
        )
        .unwrap();
        compare(&m, &[0.1, 0.5, -0.7, 1.3]);
    }

    #[test]
    fn warped_matches_generic() {
        let m = MetricChart::warped_product(
            BoxDomain::whole_space(3),
            Expression::parse("cosh(x1)^2").unwrap(),
            Expression::parse("cosh(x1)").unwrap(),
        )
        .unwrap();
        compare(&m, &[0.4, 1.0, -2.0]);
        let d = BoxDomain {
            axes: vec![Interval::open(0.0, f64::INFINITY), Interval::REAL_LINE, Interval::REAL_LINE],
        };
        let m = MetricChart::warped_product(
            d,
            Expression::parse("1").unwrap(),
            Expression::parse("coth(x1)").unwrap(),
        )
        .unwrap();
        compare(&m, &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn rotational_matches_generic() {
        let d = BoxDomain {
            axes: vec![
                Interval::open(0.0, f64::INFINITY),
                Interval::open(0.0, std::f64::consts::PI),
                Interval::REAL_LINE,
            ],
        };
        let m = MetricChart::rotationally_symmetric(d, Expression::parse("sinh(x1)").unwrap()).unwrap();
        compare(&m, &[0.8, 1.1, 0.3]);
        let (_, r) = tagged_curvature(&m, &[0.8, 1.1, 0.3]).unwrap().unwrap();
        assert!((r + 6.0).abs() < 1e-12);
    }
}
