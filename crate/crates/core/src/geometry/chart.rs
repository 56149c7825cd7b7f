use crate::error::{Error, Result};
use crate::expr::{Expression, MAX_DIM};
use serde::{Deserialize, Serialize};

/// One axis of a chart domain. Infinite ends are always open.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "AxisRepr", into = "AxisRepr")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct AxisRepr {
    #[serde(default)]
    min: Option<f64>,
    #[serde(default)]
    max: Option<f64>,
    #[serde(default)]
    min_closed: bool,
    #[serde(default)]
    max_closed: bool,
}

impl From<AxisRepr> for Interval {
    fn from(a: AxisRepr) -> Self {
        Interval {
            lo: a.min.unwrap_or(f64::NEG_INFINITY),
            hi: a.max.unwrap_or(f64::INFINITY),
            lo_closed: a.min.is_some() && a.min_closed,
            hi_closed: a.max.is_some() && a.max_closed,
        }
    }
}

impl From<Interval> for AxisRepr {
    fn from(i: Interval) -> Self {
        AxisRepr {
            min: i.lo.is_finite().then_some(i.lo),
            max: i.hi.is_finite().then_some(i.hi),
            min_closed: i.lo_closed,
            max_closed: i.hi_closed,
        }
    }
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_closed: false,
        hi_closed: false,
    };

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

/// Axis-aligned box with per-axis open/closed ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxDomain {
    pub axes: Vec<Interval>,
}

impl BoxDomain {
    pub fn whole_space(n: usize) -> Self {
        BoxDomain {
            axes: vec![Interval::REAL_LINE; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len()
            && x.iter().all(|v| v.is_finite())
            && self.axes.iter().zip(x).all(|(a, &v)| a.contains(v))
    }

    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len()
            && x.iter().all(|v| v.is_finite())
            && self.axes.iter().zip(x).all(|(a, &v)| a.contains_interior(v))
    }
}

/// Optional description of how a metric was built. When present it selects a
/// closed-form curvature path that is cross-checked against the generic one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Structure {
    Euclidean,
    /// `g = exp(2φ) δ`.
    Conformal { phi: Expression },
    /// `g = b(x1) dx1² + h(x1)² (flat metric on the remaining coordinates)`.
    WarpedProduct {
        base: Expression,
        warping: Expression,
        fiber_dim: usize,
    },
    /// Geodesic polar coordinates `(r, θ_1, …, θ_{n-1})`:
    /// `g = dr² + φ(r)² g_{S^{n-1}}` with the round metric in hyperspherical angles.
    RotationallySymmetric { phi: Expression },
}

/// A coordinate metric on a box. Coefficients are stored as the packed
/// upper triangle, row-major (`g11, g12, …, g1n, g22, …`).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricChart {
    dim: usize,
    domain: BoxDomain,
    coeffs: Vec<Expression>,
    structure: Option<Structure>,
}

pub(crate) fn packed(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MetricChart {
    pub fn new(domain: BoxDomain, coeffs: Vec<Expression>) -> Result<Self> {
        let n = domain.dim();
        if n == 0 {
            return Err(Error::Invalid("metric dimension must be positive".into()));
        }
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        if coeffs.len() != n * (n + 1) / 2 {
            return Err(Error::Invalid(format!(
                "expected {} packed coefficients for dimension {n}, got {}",
                n * (n + 1) / 2,
                coeffs.len()
            )));
        }
        if let Some(e) = coeffs.iter().find(|e| e.arity() > n) {
            return Err(Error::Invalid(format!(
                "coefficient `{e}` reads a coordinate beyond dimension {n}"
            )));
        }
        Ok(MetricChart {
            dim: n,
            domain,
            coeffs,
            structure: None,
        })
    }

    /// Build from a full symmetric matrix of expressions.
    pub fn from_matrix(domain: BoxDomain, rows: Vec<Vec<Expression>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid("metric matrix must be square".into()));
        }
        let mut coeffs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::Invalid(format!(
                        "metric matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                coeffs.push(rows[i][j].clone());
            }
        }
        MetricChart::new(domain, coeffs)
    }

    pub fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = Some(structure);
        self
    }

    pub fn euclidean(n: usize) -> Result<Self> {
        let mut coeffs = Vec::new();
        for i in 0..n {
            for j in i..n {
                coeffs.push(Expression::constant(if i == j { 1.0 } else { 0.0 }));
            }
        }
        Ok(MetricChart::new(BoxDomain::whole_space(n), coeffs)?.with_structure(Structure::Euclidean))
    }

    /// `exp(2φ) δ` on `domain`.
    pub fn conformal(domain: BoxDomain, phi: Expression) -> Result<Self> {
        let n = domain.dim();
        let factor = Expression::parse(&format!("exp(2*({phi}))"))?;
        let mut coeffs = Vec::new();
        for i in 0..n {
            for j in i..n {
                coeffs.push(if i == j {
                    factor.clone()
                } else {
                    Expression::constant(0.0)
                });
            }
        }
        Ok(MetricChart::new(domain, coeffs)?.with_structure(Structure::Conformal { phi }))
    }

    /// `b(x1) dx1² + h(x1)² δ_F` with a flat fiber of dimension `domain.dim() - 1`.
    pub fn warped_product(domain: BoxDomain, base: Expression, warping: Expression) -> Result<Self> {
        let n = domain.dim();
        if n < 2 || base.arity() > 1 || warping.arity() > 1 {
            return Err(Error::Invalid(
                "warped products need a one-dimensional base depending on x1 only".into(),
            ));
        }
        let fiber = Expression::parse(&format!("({warping})^2"))?;
        let mut coeffs = Vec::new();
        for i in 0..n {
            for j in i..n {
                coeffs.push(match (i, j) {
                    (0, 0) => base.clone(),
                    (a, b) if a == b => fiber.clone(),
                    _ => Expression::constant(0.0),
                });
            }
        }
        Ok(MetricChart::new(domain, coeffs)?.with_structure(Structure::WarpedProduct {
            base,
            warping,
            fiber_dim: n - 1,
        }))
    }

    /// `dr² + φ(r)² g_{S^{n-1}}` in hyperspherical angles.
    pub fn rotationally_symmetric(domain: BoxDomain, phi: Expression) -> Result<Self> {
        let n = domain.dim();
        if n < 2 || phi.arity() > 1 {
            return Err(Error::Invalid(
                "rotationally symmetric charts need n >= 2 and φ depending on x1 only".into(),
            ));
        }
        let mut coeffs = Vec::new();
        for i in 0..n {
            for j in i..n {
                coeffs.push(if i != j {
                    Expression::constant(0.0)
                } else if i == 0 {
                    Expression::constant(1.0)
                } else {
                    let mut s = format!("({phi})^2");
                    for a in 1..i {
                        s.push_str(&format!("*sin(x{})^2", a + 1));
                    }
                    Expression::parse(&s)?
                });
            }
        }
        Ok(MetricChart::new(domain, coeffs)?.with_structure(Structure::RotationallySymmetric { phi }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn structure(&self) -> Option<&Structure> {
        self.structure.as_ref()
    }

    pub fn coefficient(&self, i: usize, j: usize) -> &Expression {
        &self.coeffs[packed(self.dim, i, j)]
    }

    pub fn packed_coefficients(&self) -> &[Expression] {
        &self.coeffs
    }

    /// Full coefficient matrix (for serialization).
    pub fn matrix(&self) -> Vec<Vec<Expression>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.coefficient(i, j).clone()).collect())
            .collect()
    }

    /// Metric values `g_ij(x)` as a dense row-major matrix.
    pub fn metric_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.coefficient(i, j).eval(x)?;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    /// Coefficients recomputed from the structure tag, if any.
    fn structure_coefficients(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        let n = self.dim;
        let Some(s) = &self.structure else {
            return Ok(None);
        };
        let mut g = vec![0.0; n * n];
        match s {
            Structure::Euclidean => {
                for i in 0..n {
                    g[i * n + i] = 1.0;
                }
            }
            Structure::Conformal { phi } => {
                let c = (2.0 * phi.eval(x)?).exp();
                for i in 0..n {
                    g[i * n + i] = c;
                }
            }
            Structure::WarpedProduct {
                base,
                warping,
                fiber_dim,
            } => {
                if *fiber_dim + 1 != n {
                    return Err(Error::Invalid("warped fiber dimension mismatch".into()));
                }
                g[0] = base.eval(x)?;
                let h = warping.eval(x)?;
                for i in 1..n {
                    g[i * n + i] = h * h;
                }
            }
            Structure::RotationallySymmetric { phi } => {
                let p = phi.eval(x)?;
                g[0] = 1.0;
                let mut s = p * p;
                for i in 1..n {
                    g[i * n + i] = s;
                    s *= x[i].sin().powi(2);
                }
            }
        }
        Ok(Some(g))
    }

    /// Largest deviation between the tag and the coefficients over `points`.
    pub fn structure_deviation(&self, points: &[Vec<f64>]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in points {
            if let Some(tagged) = self.structure_coefficients(x)? {
                let g = self.metric_at(x)?;
                for (a, b) in g.iter().zip(&tagged) {
                    worst = worst.max((a - b).abs() / (1.0 + b.abs()));
                }
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_layout_is_row_major_upper() {
        assert_eq!(packed(3, 0, 0), 0);
        assert_eq!(packed(3, 0, 2), 2);
        assert_eq!(packed(3, 1, 1), 3);
        assert_eq!(packed(3, 2, 1), 4);
        assert_eq!(packed(3, 2, 2), 5);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let e = |s: &str| Expression::parse(s).unwrap();
        let rows = vec![vec![e("1"), e("x1")], vec![e("x2"), e("1")]];
        assert!(MetricChart::from_matrix(BoxDomain::whole_space(2), rows).is_err());
    }

    #[test]
    fn domain_flags() {
        let half = Interval {
            lo: 0.0,
            hi: 1.0,
            lo_closed: true,
            hi_closed: false,
        };
        assert!(half.contains(0.0));
        assert!(!half.contains(1.0));
        assert!(!half.contains_interior(0.0));
        let json = serde_json::to_string(&half).unwrap();
        let back: Interval = serde_json::from_str(&json).unwrap();
        assert_eq!(back, half);
        let line: Interval = serde_json::from_str("{}").unwrap();
        assert_eq!(line, Interval::REAL_LINE);
    }

    #[test]
    fn tagged_constructors_are_consistent() {
        let pts: Vec<Vec<f64>> = vec![vec![0.3, 0.7, -0.2], vec![1.1, 2.0, 0.5]];
        let conf = MetricChart::conformal(
            BoxDomain::whole_space(3),
            Expression::parse("0.5*x1 - x3").unwrap(),
        )
        .unwrap();
        assert!(conf.structure_deviation(&pts).unwrap() < 1e-12);
        let rot = MetricChart::rotationally_symmetric(
            BoxDomain::whole_space(3),
            Expression::parse("sin(x1)").unwrap(),
        )
        .unwrap();
        assert!(rot.structure_deviation(&pts).unwrap() < 1e-12);
        let warped = MetricChart::warped_product(
            BoxDomain::whole_space(3),
            Expression::parse("cosh(x1)^2").unwrap(),
            Expression::parse("cosh(x1)").unwrap(),
        )
        .unwrap();
        assert!(warped.structure_deviation(&pts).unwrap() < 1e-12);
    }
}
