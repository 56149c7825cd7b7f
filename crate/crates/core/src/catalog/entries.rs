use super::{soliton_residual, Exactness, SolitonInstance, SolitonSpec};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{BoxDomain, Interval, MetricChart};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Builder parameters of a catalog family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EntryParams {
    EuclideanFlat {
        n: usize,
    },
    Gaussian {
        n: usize,
        lambda: f64,
        /// Defaults to the Schouten value `1/(2(n−1))`.
        #[serde(default)]
        rho: Option<f64>,
    },
    ProductEinstein {
        n: usize,
        k: usize,
        rho: f64,
        lambda: f64,
    },
    #[serde(rename = "example-2.1")]
    Example21,
    #[serde(rename = "example-2.2")]
    Example22,
    #[serde(rename = "example-2.3")]
    Example23 {
        m: usize,
        n: usize,
        c: f64,
        alpha: Vec<f64>,
        /// Use `(c/2)e^{2ξ}` in place of `(c/2)e^{ξ}`, which is not a soliton.
        #[serde(default)]
        corrected: bool,
    },
    Sphere {
        n: usize,
        a: f64,
    },
    HyperbolicPlane,
}

impl EntryParams {
    pub fn id(&self) -> &'static str {
        match self {
            EntryParams::EuclideanFlat { .. } => "euclidean-flat",
            EntryParams::Gaussian { .. } => "gaussian",
            EntryParams::ProductEinstein { .. } => "product-einstein",
            EntryParams::Example21 => "example-2.1",
            EntryParams::Example22 => "example-2.2",
            EntryParams::Example23 { .. } => "example-2.3",
            EntryParams::Sphere { .. } => "sphere",
            EntryParams::HyperbolicPlane => "hyperbolic-plane",
        }
    }

    /// Default parameters of the family `id`.
    pub fn default_for(id: &str) -> Result<Self> {
        Ok(match id {
            "euclidean-flat" => EntryParams::EuclideanFlat { n: 3 },
            "gaussian" => EntryParams::Gaussian {
                n: 2,
                lambda: 1.0,
                rho: None,
            },
            "product-einstein" => EntryParams::ProductEinstein {
                n: 3,
                k: 2,
                rho: 0.25,
                lambda: 1.0,
            },
            "example-2.1" => EntryParams::Example21,
            "example-2.2" => EntryParams::Example22,
            "example-2.3" => EntryParams::Example23 {
                m: 2,
                n: 3,
                c: 1.0,
                alpha: vec![1.0, 0.0, 0.0],
                corrected: false,
            },
            "sphere" => EntryParams::Sphere { n: 2, a: 1.0 },
            "hyperbolic-plane" => EntryParams::HyperbolicPlane,
            other => return Err(Error::UnknownCatalogEntry(other.to_string())),
        })
    }

    pub fn build(&self) -> Result<SolitonInstance> {
        match self {
            EntryParams::EuclideanFlat { n } => euclidean_flat(*n),
            EntryParams::Gaussian { n, lambda, rho } => gaussian(*n, *lambda, *rho),
            EntryParams::ProductEinstein { n, k, rho, lambda } => product_einstein(*n, *k, *rho, *lambda),
            EntryParams::Example21 => example_21(),
            EntryParams::Example22 => example_22(),
            EntryParams::Example23 {
                m,
                n,
                c,
                alpha,
                corrected,
            } => example_23(*m, *n, *c, alpha, *corrected),
            EntryParams::Sphere { n, a } => sphere(*n, *a),
            EntryParams::HyperbolicPlane => hyperbolic_plane(),
        }
    }
}

fn parse(s: &str) -> Result<Expression> {
    Expression::parse(s)
}

fn cube(n: usize, lo: f64, hi: f64) -> BoxDomain {
    BoxDomain {
        axes: vec![
            Interval {
                lo,
                hi,
                lo_closed: true,
                hi_closed: true
            };
            n
        ],
    }
}

fn sum_of_squares(range: std::ops::Range<usize>) -> String {
    range.map(|i| format!("x{}^2", i + 1)).collect::<Vec<_>>().join("+")
}

fn check_dim(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Invalid(format!("dimension must be at least {min}")));
    }
    if n > crate::expr::MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn instance(
    id: &str,
    description: &str,
    metric: MetricChart,
    f: Expression,
    rho: f64,
    lambda: f64,
    exactness: Exactness,
    base_point: Vec<f64>,
    f0_hint: Option<f64>,
    sample_box: BoxDomain,
) -> SolitonInstance {
    SolitonInstance {
        id: id.into(),
        description: description.into(),
        metric,
        f,
        rho,
        lambda,
        exactness,
        base_point,
        ball_center: None,
        f0_hint,
        sample_box,
    }
}

pub fn euclidean_flat(n: usize) -> Result<SolitonInstance> {
    check_dim(n, 1)?;
    Ok(instance(
        "euclidean-flat",
        "flat R^n with constant potential",
        MetricChart::euclidean(n)?,
        Expression::constant(0.0),
        0.0,
        0.0,
        Exactness::Exact,
        vec![0.0; n],
        Some(0.0),
        cube(n, -2.0, 2.0),
    ))
}

pub fn gaussian(n: usize, lambda: f64, rho: Option<f64>) -> Result<SolitonInstance> {
    check_dim(n, 2)?;
    let rho = rho.unwrap_or(1.0 / (2.0 * (n as f64 - 1.0)));
    let f = parse(&format!("{lambda:?}*({})/2", sum_of_squares(0..n)))?;
    Ok(instance(
        "gaussian",
        "flat R^n with f = lambda|x|^2/2",
        MetricChart::euclidean(n)?,
        f,
        rho,
        lambda,
        Exactness::Exact,
        vec![0.0; n],
        Some(0.0),
        cube(n, -2.0, 2.0),
    ))
}

/// `R^{n−k} × S^k(a)` with `R_Σ = kλ/(1−ρk)`; the sphere is in stereographic
/// coordinates on the last `k` axes.
pub fn product_einstein(n: usize, k: usize, rho: f64, lambda: f64) -> Result<SolitonInstance> {
    check_dim(n, 3)?;
    if k < 2 || k > n {
        return Err(Error::Invalid("product fiber dimension must satisfy 2 <= k <= n".into()));
    }
    let denom = 1.0 - rho * k as f64;
    let a2 = (k as f64 - 1.0) * denom / lambda;
    if denom == 0.0 || !(a2 > 0.0) || !a2.is_finite() {
        return Err(Error::Invalid(
            "product parameters must give a sphere factor with positive curvature".into(),
        ));
    }
    let a = a2.sqrt();
    let sphere_factor = format!("4/(1+({})/{a2:?})^2", sum_of_squares(n - k..n));
    let mut coeffs = Vec::new();
    for i in 0..n {
        for j in i..n {
            coeffs.push(if i != j {
                Expression::constant(0.0)
            } else if i < n - k {
                Expression::constant(1.0)
            } else {
                parse(&sphere_factor)?
            });
        }
    }
    let metric = MetricChart::new(BoxDomain::whole_space(n), coeffs)?;
    let f = if n > k {
        parse(&format!("{:?}*({})/2", lambda / denom, sum_of_squares(0..n - k)))?
    } else {
        Expression::constant(0.0)
    };
    let mut p = vec![0.0; n];
    p[n - k] = a;
    let mut sample_box = cube(n, -1.0, 1.0);
    for ax in &mut sample_box.axes[n - k..] {
        ax.lo = -2.0 * a;
        ax.hi = 2.0 * a;
    }
    let mut s = instance(
        "product-einstein",
        "R^{n-k} x S^k(a) with f = (lambda/(1-rho k))|x|^2/2",
        metric,
        f,
        rho,
        lambda,
        Exactness::Exact,
        p,
        Some(0.0),
        sample_box,
    );
    // the sphere factor's stereographic pole lies a quarter circle from `p`
    s.ball_center = Some(vec![0.0; n]);
    Ok(s)
}

/// Warped product `dx1² + coth²(x1) δ_F` on `x1 > 0` with a flat 2-fiber.
pub fn example_21() -> Result<SolitonInstance> {
    let domain = BoxDomain {
        axes: vec![Interval::open(0.0, f64::INFINITY), Interval::REAL_LINE, Interval::REAL_LINE],
    };
    let metric = MetricChart::warped_product(domain, parse("1")?, parse("coth(x1)")?)?;
    let mut sample_box = cube(3, -1.0, 1.0);
    sample_box.axes[0].lo = 0.5;
    sample_box.axes[0].hi = 3.0;
    Ok(instance(
        "example-2.1",
        "warped product over x1 > 0 with h = coth(x1), f = (2/3)log cosh(x1), steady, rho = 1/3",
        metric,
        parse("(2/3)*log(cosh(x1))")?,
        1.0 / 3.0,
        0.0,
        Exactness::Claimed,
        vec![1.0, 0.0, 0.0],
        None,
        sample_box,
    ))
}

/// `cosh²(x1) dx1² + cosh²(x1) δ_F`, read as `f = (8 log cosh x1 + cos 2x1)/12`.
pub fn example_22() -> Result<SolitonInstance> {
    let metric = MetricChart::warped_product(
        BoxDomain::whole_space(3),
        parse("cosh(x1)^2")?,
        parse("cosh(x1)")?,
    )?;
    Ok(instance(
        "example-2.2",
        "warped product with base metric cosh^2(x1) and h = cosh(x1), rho = lambda = 1/3",
        metric,
        parse("(8*log(cosh(x1)) + cos(2*x1))/12")?,
        1.0 / 3.0,
        1.0 / 3.0,
        Exactness::Claimed,
        vec![0.0; 3],
        None,
        cube(3, -2.0, 2.0),
    ))
}

/// `e^{2ξ}(δ_n ⊕ δ_F)` on `m + n` dimensions with `ξ = Σ α_i x_i` over the first `n` axes.
pub fn example_23(m: usize, n: usize, c: f64, alpha: &[f64], corrected: bool) -> Result<SolitonInstance> {
    if n < 3 || m < 1 {
        return Err(Error::Invalid("example-2.3 needs n >= 3 and m >= 1".into()));
    }
    let total = m + n;
    check_dim(total, 4)?;
    if alpha.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha.len(),
        });
    }
    let norm2: f64 = alpha.iter().map(|a| a * a).sum();
    if (norm2 - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid("alpha must be a unit vector".into()));
    }
    let xi = alpha
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != 0.0)
        .map(|(i, a)| format!("{a:?}*x{}", i + 1))
        .collect::<Vec<_>>()
        .join("+");
    let phi = parse(&xi)?;
    let metric = MetricChart::conformal(BoxDomain::whole_space(total), phi)?;
    let growth = if corrected { "2*" } else { "" };
    let f = parse(&format!(
        "({c:?}/2)*exp({growth}({xi})) + ({:?}/2)*({xi})",
        total as f64 - 2.0
    ))?;
    Ok(instance(
        "example-2.3",
        "conformally flat e^{2 xi} delta on m+n dimensions, Schouten with lambda = c (incomplete)",
        metric,
        f,
        1.0 / (2.0 * (total as f64 - 1.0)),
        c,
        if corrected {
            Exactness::Exact
        } else {
            Exactness::Claimed
        },
        vec![0.0; total],
        None,
        cube(total, -1.0, 1.0),
    ))
}

/// Round sphere of radius `a` in stereographic coordinates; the base point
/// lies on the equator so its antipode has finite coordinates.
pub fn sphere(n: usize, a: f64) -> Result<SolitonInstance> {
    check_dim(n, 2)?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Invalid("sphere radius must be positive".into()));
    }
    let phi = parse(&format!("log(2/(1+({})/{:?}))", sum_of_squares(0..n), a * a))?;
    let metric = MetricChart::conformal(BoxDomain::whole_space(n), phi)?;
    let mut p = vec![0.0; n];
    p[0] = a;
    let mut s = instance(
        "sphere",
        "round sphere of radius a, Einstein with constant potential",
        metric,
        Expression::constant(0.0),
        0.0,
        (n as f64 - 1.0) / (a * a),
        Exactness::Exact,
        p,
        Some(0.0),
        cube(n, -2.0 * a, 2.0 * a),
    );
    s.ball_center = Some(vec![0.0; n]);
    Ok(s)
}

/// Upper half-plane `δ/x2²`.
pub fn hyperbolic_plane() -> Result<SolitonInstance> {
    let domain = BoxDomain {
        axes: vec![Interval::REAL_LINE, Interval::open(0.0, f64::INFINITY)],
    };
    let metric = MetricChart::conformal(domain, parse("-log(x2)")?)?;
    let mut sample_box = cube(2, -1.0, 1.0);
    sample_box.axes[1].lo = 0.5;
    sample_box.axes[1].hi = 2.0;
    Ok(instance(
        "hyperbolic-plane",
        "upper half-plane, Einstein with constant potential",
        metric,
        Expression::constant(0.0),
        0.0,
        -1.0,
        Exactness::Exact,
        vec![0.0, 1.0],
        Some(0.0),
        sample_box,
    ))
}

/// One shipped catalog record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    pub params: EntryParams,
    pub soliton: SolitonSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub schema: u32,
    pub entries: Vec<CatalogEntry>,
}

/// Points and tolerance of the load-time exactness check.
pub const LOAD_CHECK_POINTS: usize = 100;
pub const LOAD_CHECK_TOLERANCE: f64 = 1e-9;

const CATALOG_JSON: &str = include_str!("../../data/catalog.json");

impl Catalog {
    /// Parse a catalog and verify every exact entry.
    pub fn from_json(text: &str) -> Result<Self> {
        let cat: Catalog =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("catalog: {e}")))?;
        if cat.schema != 1 {
            return Err(Error::Invalid(format!("unsupported catalog schema {}", cat.schema)));
        }
        for e in &cat.entries {
            let s = SolitonInstance::from_spec(&e.soliton)?;
            if s.exactness == Exactness::Exact {
                for x in s.sample_points(LOAD_CHECK_POINTS, 0x5eed) {
                    let r = soliton_residual(&s, &x)?;
                    if !(r < LOAD_CHECK_TOLERANCE) {
                        return Err(Error::Invalid(format!(
                            "exact catalog entry `{}` has soliton residual {r:e} at {x:?}",
                            s.id
                        )));
                    }
                }
            }
        }
        Ok(cat)
    }

    /// Catalog records generated from the default builder parameters.
    pub fn from_builders() -> Result<Self> {
        let entries = entry_ids()
            .iter()
            .map(|id| {
                let params = EntryParams::default_for(id)?;
                let soliton = params.build()?.to_spec();
                Ok(CatalogEntry { params, soliton })
            })
            .collect::<Result<_>>()?;
        Ok(Catalog { schema: 1, entries })
    }

    pub fn get(&self, id: &str) -> Result<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.soliton.id == id)
            .ok_or_else(|| Error::UnknownCatalogEntry(id.to_string()))
    }

    pub fn instance(&self, id: &str) -> Result<SolitonInstance> {
        SolitonInstance::from_spec(&self.get(id)?.soliton)
    }
}

/// Entry ids in catalog order.
pub fn entry_ids() -> &'static [&'static str] {
    &[
        "euclidean-flat",
        "gaussian",
        "product-einstein",
        "example-2.1",
        "example-2.2",
        "example-2.3",
        "sphere",
        "hyperbolic-plane",
    ]
}

/// The shipped catalog, parsed and checked once.
pub fn builtin() -> Result<&'static Catalog> {
    static CATALOG: OnceLock<std::result::Result<Catalog, Error>> = OnceLock::new();
    CATALOG
        .get_or_init(|| Catalog::from_json(CATALOG_JSON))
        .as_ref()
        .map_err(Clone::clone)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_catalog_matches_builders() {
        let shipped: Catalog = serde_json::from_str(CATALOG_JSON).unwrap();
        let built = Catalog::from_builders().unwrap();
        assert_eq!(shipped.entries, built.entries);
    }

    #[test]
    fn builtin_loads_and_has_eight_entries() {
        let cat = builtin().unwrap();
        assert_eq!(cat.entries.len(), 8);
        for (e, id) in cat.entries.iter().zip(entry_ids()) {
            assert_eq!(&e.soliton.id, id);
            assert_eq!(e.params.id(), *id);
        }
    }

    #[test]
    #[ignore = "writes data/catalog.json from the builders"]
    fn regenerate_catalog_json() {
        let built = Catalog::from_builders().unwrap();
        let text = serde_json::to_string_pretty(&built).unwrap() + "\n";
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/data/catalog.json"), text).unwrap();
    }
}
