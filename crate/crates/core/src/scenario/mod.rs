//! Scenario configs: which soliton, which audits, which numerical parameters.

mod run;

pub use run::{
    catalog_rows, run, spectral_points, write_catalog_table, CatalogFilter, CatalogRow, RunOptions, RunOutcome,
    ScenarioReport, TaskReport, TaskStatus, OUT_ENV,
};

use crate::catalog::{builtin, EntryParams, SolitonInstance, SolitonSpec};
use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    IdentityAudit,
    #[serde(rename = "lemma21")]
    Lemma21,
    SchoutenBounds,
    Riccati,
    #[serde(rename = "volume-13")]
    Volume13,
    #[serde(rename = "volume-14")]
    Volume14,
    #[serde(rename = "volume-15")]
    Volume15,
    Spectral,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::IdentityAudit,
        Task::Lemma21,
        Task::SchoutenBounds,
        Task::Riccati,
        Task::Volume13,
        Task::Volume14,
        Task::Volume15,
        Task::Spectral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::IdentityAudit => "identity-audit",
            Task::Lemma21 => "lemma21",
            Task::SchoutenBounds => "schouten-bounds",
            Task::Riccati => "riccati",
            Task::Volume13 => "volume-13",
            Task::Volume14 => "volume-14",
            Task::Volume15 => "volume-15",
            Task::Spectral => "spectral",
        }
    }

    pub fn is_volume(self) -> bool {
        matches!(self, Task::Volume13 | Task::Volume14 | Task::Volume15)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    Low,
    #[default]
    Default,
    High,
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Resolution::Low),
            "default" => Ok(Resolution::Default),
            "high" => Ok(Resolution::High),
            other => Err(Error::Invalid(format!("unknown resolution `{other}` (low|default|high)"))),
        }
    }
}

/// Direction grid on the unit sphere for volume tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereGridSize {
    Coarse,
    Default,
    Refined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub soliton: f64,
    pub lemma: f64,
    pub bianchi: f64,
    pub riccati: f64,
    pub volume: f64,
    pub spectral: f64,
    pub schouten: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            soliton: 1e-8,
            lemma: 1e-6,
            bianchi: 1e-5,
            riccati: 1e-5,
            volume: 5e-3,
            spectral: 1e-2,
            schouten: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RiccatiParams {
    pub directions: usize,
    pub h: f64,
    pub r_max: f64,
}

impl Default for RiccatiParams {
    fn default() -> Self {
        RiccatiParams {
            directions: 16,
            h: 1e-3,
            r_max: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchoutenParams {
    pub rays: usize,
    pub r_max: f64,
    pub spacing: f64,
}

impl Default for SchoutenParams {
    fn default() -> Self {
        SchoutenParams {
            rays: 8,
            r_max: 4.0,
            spacing: 0.1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralParams {
    /// Grid points per axis; by resolution and dimension when absent.
    pub points: Option<usize>,
    /// Box half-width; the `e^{−f} ≤ 1e-12` rule when absent.
    pub half_width: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Parameters {
    /// Random audit points for the identity tasks.
    pub points: usize,
    pub seed: u64,
    pub r_grid: Vec<f64>,
    /// Radial step of the volume rays.
    pub h: f64,
    pub sphere_grid: Option<SphereGridSize>,
    pub delta: f64,
    pub riccati: RiccatiParams,
    pub schouten: SchoutenParams,
    pub spectral: SpectralParams,
    pub tolerances: Tolerances,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            points: 100,
            seed: 0x5eed,
            r_grid: vec![0.5, 1.0, 2.0],
            h: crate::volume::DEFAULT_VOLUME_STEP,
            sphere_grid: None,
            delta: 0.0,
            riccati: RiccatiParams::default(),
            schouten: SchoutenParams::default(),
            spectral: SpectralParams::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Catalog reference with optional builder parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogRef {
    pub catalog: String,
    #[serde(default)]
    pub params: Option<EntryParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SolitonRef {
    Catalog(CatalogRef),
    Inline(SolitonSpec),
}

impl SolitonRef {
    pub fn instance(&self) -> Result<SolitonInstance> {
        match self {
            SolitonRef::Catalog(c) => match &c.params {
                Some(p) if p.id() != c.catalog => Err(Error::Invalid(format!(
                    "params describe `{}` but the reference names `{}`",
                    p.id(),
                    c.catalog
                ))),
                Some(p) => p.build(),
                None => builtin()?.instance(&c.catalog),
            },
            SolitonRef::Inline(spec) => SolitonInstance::from_spec(spec),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub soliton: SolitonRef,
    pub tasks: Vec<Task>,
    pub parameters: Parameters,
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default = "schema_version")]
    schema: u32,
    name: String,
    soliton: serde_json::Value,
    tasks: Vec<Task>,
    #[serde(default)]
    parameters: serde_json::Value,
    #[serde(default)]
    output: Option<PathBuf>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Deserialize `value` found at JSON pointer `base`, reporting the pointer
/// of the offending member on failure.
fn decode<T: DeserializeOwned>(value: serde_json::Value, base: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut path = base.to_string();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => path.push_str(&format!("/{index}")),
                Segment::Map { key } => path.push_str(&format!("/{}", escape(key))),
                Segment::Enum { variant } => path.push_str(&format!("/{}", escape(variant))),
                Segment::Unknown => {}
            }
        }
        let message = e.inner().to_string();
        // serde reports a missing member at its parent
        if let Some(field) = between(&message, "missing field `", "`") {
            path.push_str(&format!("/{}", escape(field)));
        } else if let Some(field) = between(&message, "unknown field `", "`") {
            path.push_str(&format!("/{}", escape(field)));
        }
        config_error(if path.is_empty() { "/".to_string() } else { path }, message)
    })
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn between<'a>(s: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let i = s.find(start)? + start.len();
    let j = s[i..].find(end)?;
    Some(&s[i..i + j])
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| config_error("/", format!("invalid JSON: {e}")))?;
        let raw: RawScenario = decode(value, "")?;
        if raw.schema != SCHEMA_VERSION {
            return Err(config_error("/schema", format!("unsupported schema {}", raw.schema)));
        }
        let soliton = match &raw.soliton {
            serde_json::Value::Object(map) if map.contains_key("catalog") => {
                SolitonRef::Catalog(decode(raw.soliton.clone(), "/soliton")?)
            }
            serde_json::Value::Object(_) => SolitonRef::Inline(decode(raw.soliton.clone(), "/soliton")?),
            serde_json::Value::String(id) => SolitonRef::Catalog(CatalogRef {
                catalog: id.clone(),
                params: None,
            }),
            _ => return Err(config_error("/soliton", "expected a catalog id or an object")),
        };
        let parameters: Parameters = match raw.parameters {
            serde_json::Value::Null => Parameters::default(),
            v => decode(v, "/parameters")?,
        };
        let sc = Scenario {
            schema: raw.schema,
            name: raw.name,
            soliton,
            tasks: raw.tasks,
            parameters,
            output: raw.output,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("/", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that need more than the schema: tolerances, grids, the soliton.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config_error("/name", "name must be non-empty and contain no path separators"));
        }
        if self.tasks.is_empty() {
            return Err(config_error("/tasks", "at least one task is required"));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].contains(t) {
                return Err(config_error(format!("/tasks/{i}"), format!("duplicate task `{}`", t.name())));
            }
        }
        let p = &self.parameters;
        let t = &p.tolerances;
        for (name, v) in [
            ("soliton", t.soliton),
            ("lemma", t.lemma),
            ("bianchi", t.bianchi),
            ("riccati", t.riccati),
            ("volume", t.volume),
            ("spectral", t.spectral),
            ("schouten", t.schouten),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(format!("/parameters/tolerances/{name}"), "tolerances must be positive"));
            }
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if p.points == 0 {
            return Err(config_error("/parameters/points", "must be positive"));
        }
        if p.r_grid.is_empty() || !p.r_grid.iter().all(|&r| positive(r)) || p.r_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error("/parameters/r_grid", "radii must be positive and increasing"));
        }
        if !positive(p.h) {
            return Err(config_error("/parameters/h", "must be positive"));
        }
        if !p.delta.is_finite() {
            return Err(config_error("/parameters/delta", "must be finite"));
        }
        if p.riccati.directions == 0 {
            return Err(config_error("/parameters/riccati/directions", "must be positive"));
        }
        if !positive(p.riccati.h) {
            return Err(config_error("/parameters/riccati/h", "must be positive"));
        }
        if !positive(p.riccati.r_max) {
            return Err(config_error("/parameters/riccati/r_max", "must be positive"));
        }
        if p.schouten.rays == 0 {
            return Err(config_error("/parameters/schouten/rays", "must be positive"));
        }
        if !positive(p.schouten.r_max) {
            return Err(config_error("/parameters/schouten/r_max", "must be positive"));
        }
        if !positive(p.schouten.spacing) {
            return Err(config_error("/parameters/schouten/spacing", "must be positive"));
        }
        if let Some(n) = p.spectral.points {
            if n % 2 == 0 || n < crate::spectral::MIN_POINTS {
                return Err(config_error(
                    "/parameters/spectral/points",
                    format!("must be odd and >= {}", crate::spectral::MIN_POINTS),
                ));
            }
        }
        if let Some(l) = p.spectral.half_width {
            if !positive(l) {
                return Err(config_error("/parameters/spectral/half_width", "must be positive"));
            }
        }
        self.soliton.instance().map_err(|e| {
            let path = match (&self.soliton, &e) {
                (SolitonRef::Catalog(_), Error::UnknownCatalogEntry(_)) => "/soliton/catalog",
                (SolitonRef::Catalog(c), _) if c.params.is_some() => "/soliton/params",
                _ => "/soliton",
            };
            config_error(path, e.to_string())
        })?;
        Ok(())
    }
}
