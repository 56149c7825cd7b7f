//! Soliton instances, the built-in catalog and the pointwise identity audits.

mod audit;
mod entries;

pub use audit::{
    estimate_f0, lemma21_audit, lemma21_residuals, schouten_bounds_audit, soliton_residual,
    IdentityReport, IdentitySummary, PointResiduals, RadialSample, SchoutenReport, SchoutenSample,
};
pub use entries::{builtin, entry_ids, Catalog, CatalogEntry, EntryParams};

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{BoxDomain, Interval, MetricChart, Structure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    Exact,
    Claimed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonClass {
    Shrinking,
    Steady,
    Expanding,
}

impl SolitonClass {
    pub fn of(lambda: f64) -> Self {
        if lambda > 0.0 {
            SolitonClass::Shrinking
        } else if lambda < 0.0 {
            SolitonClass::Expanding
        } else {
            SolitonClass::Steady
        }
    }
}

/// Serialized form of a metric: full coefficient matrix, optional domain and
/// structure tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub coefficients: Vec<Vec<Expression>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Structure>,
}

impl MetricSpec {
    pub fn from_chart(chart: &MetricChart) -> Self {
        let domain = chart.domain();
        MetricSpec {
            coefficients: chart.matrix(),
            domain: if *domain == BoxDomain::whole_space(chart.dim()) {
                None
            } else {
                Some(domain.clone())
            },
            structure: chart.structure().cloned(),
        }
    }

    pub fn build(&self) -> Result<MetricChart> {
        let n = self.coefficients.len();
        let domain = self.domain.clone().unwrap_or_else(|| BoxDomain::whole_space(n));
        if domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: domain.dim(),
            });
        }
        let chart = MetricChart::from_matrix(domain, self.coefficients.clone())?;
        Ok(match &self.structure {
            Some(s) => chart.with_structure(s.clone()),
            None => chart,
        })
    }
}

/// Serialized soliton: the schema shared by the shipped catalog and inline
/// scenario definitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub metric: MetricSpec,
    pub potential: Expression,
    pub rho: f64,
    pub lambda: f64,
    #[serde(default = "default_exactness")]
    pub exactness: Exactness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<SolitonClass>,
    pub base_point: Vec<f64>,
    /// Center for ball-volume audits when it differs from `base_point`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<BoxDomain>,
}

fn default_exactness() -> Exactness {
    Exactness::Claimed
}

/// Metric, potential and soliton constants.
#[derive(Clone, Debug)]
pub struct SolitonInstance {
    pub id: String,
    pub description: String,
    pub metric: MetricChart,
    pub f: Expression,
    pub rho: f64,
    pub lambda: f64,
    pub exactness: Exactness,
    pub base_point: Vec<f64>,
    /// Center for ball-volume audits (charts whose pole is near `base_point`).
    pub ball_center: Option<Vec<f64>>,
    pub f0_hint: Option<f64>,
    /// Finite box inside the chart domain used for random audit points.
    pub sample_box: BoxDomain,
}

impl SolitonInstance {
    pub fn from_spec(spec: &SolitonSpec) -> Result<Self> {
        let metric = spec.metric.build()?;
        let n = metric.dim();
        if spec.potential.arity() > n {
            return Err(Error::Invalid(format!(
                "potential reads a coordinate beyond dimension {n}"
            )));
        }
        if spec.base_point.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: spec.base_point.len(),
            });
        }
        if !metric.domain().contains_interior(&spec.base_point) {
            return Err(Error::OutsideDomain {
                point: spec.base_point.clone(),
            });
        }
        if let Some(c) = &spec.ball_center {
            if c.len() != n || !metric.domain().contains_interior(c) {
                return Err(Error::Invalid("ball_center must be an interior point of the chart".into()));
            }
        }
        if !spec.rho.is_finite() || !spec.lambda.is_finite() {
            return Err(Error::Invalid("rho and lambda must be finite".into()));
        }
        if let Some(c) = spec.class {
            if c != SolitonClass::of(spec.lambda) {
                return Err(Error::Invalid(format!(
                    "class {c:?} does not match the sign of lambda = {}",
                    spec.lambda
                )));
            }
        }
        let sample_box = match &spec.sample_box {
            Some(b) => {
                if b.dim() != n || b.axes.iter().any(|a| !a.lo.is_finite() || !a.hi.is_finite()) {
                    return Err(Error::Invalid("sample_box must be a finite box of the chart dimension".into()));
                }
                b.clone()
            }
            None => default_sample_box(metric.domain(), &spec.base_point),
        };
        Ok(SolitonInstance {
            id: spec.id.clone(),
            description: spec.description.clone(),
            metric,
            f: spec.potential.clone(),
            rho: spec.rho,
            lambda: spec.lambda,
            exactness: spec.exactness,
            base_point: spec.base_point.clone(),
            ball_center: spec.ball_center.clone(),
            f0_hint: spec.f0,
            sample_box,
        })
    }

    pub fn to_spec(&self) -> SolitonSpec {
        SolitonSpec {
            id: self.id.clone(),
            description: self.description.clone(),
            metric: MetricSpec::from_chart(&self.metric),
            potential: self.f.clone(),
            rho: self.rho,
            lambda: self.lambda,
            exactness: self.exactness,
            class: Some(self.class()),
            base_point: self.base_point.clone(),
            ball_center: self.ball_center.clone(),
            f0: self.f0_hint,
            sample_box: Some(self.sample_box.clone()),
        }
    }

    /// `ball_center`, falling back to `base_point`.
    pub fn center(&self) -> &[f64] {
        self.ball_center.as_deref().unwrap_or(&self.base_point)
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn class(&self) -> SolitonClass {
        SolitonClass::of(self.lambda)
    }

    pub fn schouten_rho(&self) -> f64 {
        1.0 / (2.0 * (self.dim() as f64 - 1.0))
    }

    pub fn is_schouten(&self) -> bool {
        self.dim() > 1 && (self.rho - self.schouten_rho()).abs() <= 1e-12
    }

    /// `count` deterministic pseudo-random interior points of the sample box.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count && attempts < 100 * count.max(1) {
            attempts += 1;
            let x: Vec<f64> = (0..n)
                .map(|i| {
                    let a = &self.sample_box.axes[i];
                    a.lo + (a.hi - a.lo) * rng.gen::<f64>()
                })
                .collect();
            if self.metric.domain().contains_interior(&x) {
                out.push(x);
            }
        }
        out
    }
}

/// `p ± 1` per axis, clipped to stay inside an open domain.
fn default_sample_box(domain: &BoxDomain, p: &[f64]) -> BoxDomain {
    let axes = domain
        .axes
        .iter()
        .zip(p)
        .map(|(a, &c)| {
            let lo = (c - 1.0).max(if a.lo.is_finite() { 0.5 * (a.lo + c) } else { f64::NEG_INFINITY });
            let hi = (c + 1.0).min(if a.hi.is_finite() { 0.5 * (a.hi + c) } else { f64::INFINITY });
            Interval {
                lo,
                hi,
                lo_closed: true,
                hi_closed: true,
            }
        })
        .collect();
    BoxDomain { axes }
}
