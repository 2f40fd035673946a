//! Run configuration: a TOML file with `[model]`, `[scheme]`, `[fbm]`,
//! `[ensemble]` and `[output]` sections, optionally patched by
//! `section.key=value` overrides. Every field is optional at parse time;
//! commands resolve what they need and report missing or invalid values by
//! their `section.key` name.

use std::path::{Path, PathBuf};

use fbm_stm_core::fbm::{FbmGrid, SamplerMethod};
use fbm_stm_core::lab::{default_stride, EnsembleConfig, DEFAULT_DROP_MARGIN, DEFAULT_SLOPE_TOL};
use fbm_stm_core::models::{AssumptionConstants, LinearTestModel, NonlinearModel, SignConvention};
use fbm_stm_core::stm::ThetaScheme;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// `kappa` either as a number or tied to the Hurst index as `"2H"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    TwoH,
    Value(f64),
}

impl Kappa {
    pub fn resolve(self, hurst: f64) -> f64 {
        match self {
            Kappa::TwoH => 2.0 * hurst,
            Kappa::Value(k) => k,
        }
    }
}

impl std::str::FromStr for Kappa {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("2h") {
            return Ok(Kappa::TwoH);
        }
        t.parse::<f64>()
            .map(Kappa::Value)
            .map_err(|_| format!("expected a number or \"2H\", got {s:?}"))
    }
}

impl std::fmt::Display for Kappa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kappa::TwoH => f.write_str("2H"),
            Kappa::Value(k) => write!(f, "{k}"),
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Kappa::TwoH => s.serialize_str("2H"),
            Kappa::Value(k) => s.serialize_f64(*k),
        }
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct KappaVisitor;

        impl Visitor<'_> for KappaVisitor {
            type Value = Kappa;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or the string \"2H\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Kappa, E> {
                Ok(Kappa::Value(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Kappa, E> {
                Ok(Kappa::Value(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Kappa, E> {
                Ok(Kappa::Value(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Kappa, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(KappaVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKindName {
    Linear,
    CubicDrift,
    CubicDriftSinDiffusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionName {
    Canonical,
    PlusLambda,
}

impl From<ConventionName> for SignConvention {
    fn from(c: ConventionName) -> Self {
        match c {
            ConventionName::Canonical => SignConvention::Canonical,
            ConventionName::PlusLambda => SignConvention::PlusLambda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Cholesky,
    Circulant,
}

impl From<MethodName> for SamplerMethod {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Cholesky => SamplerMethod::ExactCholesky,
            MethodName::Circulant => SamplerMethod::CirculantEmbedding,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ModelKindName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Kappa>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbmSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drop_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub fbm: FbmSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputSection,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "model",
        &["kind", "convention", "lambda", "lambda_bar", "mu", "kappa", "x0"],
    ),
    ("scheme", &["theta", "dt", "n_steps"]),
    ("fbm", &["hurst", "method"]),
    (
        "ensemble",
        &[
            "n_paths",
            "master_seed",
            "record_stride",
            "burn_in_fraction",
            "slope_tol",
            "drop_margin",
        ],
    ),
    ("output", &["directory", "format"]),
];

fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    KNOWN_KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> CliResult<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::config("config", e.message().to_string()))?;
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    /// Reads an optional file and applies `section.key=value` overrides on top.
    pub fn load_with_overrides(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::config("config", e.message().to_string()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    /// Converts key by key so that errors carry the `section.key` name.
    pub fn from_table(table: toml::Table) -> CliResult<Self> {
        for (section, value) in &table {
            let keys = known_keys(section).ok_or_else(|| CliError::config(section.clone(), "unknown section"))?;
            let inner = value
                .as_table()
                .ok_or_else(|| CliError::config(section.clone(), "expected a table"))?;
            for (key, v) in inner {
                let name = format!("{section}.{key}");
                if !keys.contains(&key.as_str()) {
                    return Err(CliError::config(name, "unknown key"));
                }
                check_value(section, key, v.clone()).map_err(|m| CliError::config(name, m))?;
            }
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config("config", e.message().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Type-checks one value in isolation.
fn check_value(section: &str, key: &str, v: toml::Value) -> Result<(), String> {
    fn as_<T: serde::de::DeserializeOwned>(v: toml::Value) -> Result<(), String> {
        v.try_into::<T>().map(|_| ()).map_err(|e| e.message().to_string())
    }
    match (section, key) {
        ("model", "kind") => as_::<ModelKindName>(v),
        ("model", "convention") => as_::<ConventionName>(v),
        ("model", "kappa") => as_::<Kappa>(v),
        ("fbm", "method") => as_::<MethodName>(v),
        ("scheme", "n_steps")
        | ("ensemble", "n_paths")
        | ("ensemble", "master_seed")
        | ("ensemble", "record_stride") => as_::<u64>(v),
        ("output", _) => as_::<String>(v),
        _ => as_::<f64>(v),
    }
}

/// `section.key=value`; the value is read as a TOML literal and falls back to
/// a bare string.
pub fn apply_override(table: &mut toml::Table, text: &str) -> CliResult<()> {
    let (path, raw) = text
        .split_once('=')
        .ok_or_else(|| CliError::config(text, "override must look like section.key=value"))?;
    let path = path.trim();
    let (section, key) = path
        .split_once('.')
        .ok_or_else(|| CliError::config(path, "override key must be section.key"))?;
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let inner = entry
        .as_table_mut()
        .ok_or_else(|| CliError::config(section, "expected a table"))?;
    inner.insert(key.to_string(), value);
    Ok(())
}

fn require<T: Copy>(v: Option<T>, key: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::config(key, "missing required key"))
}

fn check(ok: bool, key: &str, message: &str) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, message))
    }
}

fn finite(v: f64, key: &str) -> CliResult<f64> {
    check(v.is_finite(), key, "must be finite")?;
    Ok(v)
}

/// Model ready to simulate.
#[derive(Debug, Clone)]
pub enum ModelSpec {
    Linear(LinearTestModel),
    Nonlinear(NonlinearModel),
}

impl ModelSpec {
    pub fn kappa(&self) -> f64 {
        match self {
            ModelSpec::Linear(m) => m.kappa,
            ModelSpec::Nonlinear(m) => m.constants.kappa,
        }
    }
}

/// Grid and sampling settings shared by every subcommand that draws paths.
#[derive(Debug, Clone)]
pub struct SamplingSetup {
    pub grid: FbmGrid,
    pub ensemble: EnsembleConfig,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SimulationSetup {
    pub model: ModelSpec,
    pub kappa: Kappa,
    pub scheme: ThetaScheme,
    pub sampling: SamplingSetup,
    pub slope_tol: f64,
    pub drop_margin: f64,
}

impl RunConfig {
    pub fn hurst(&self) -> CliResult<f64> {
        let h = finite(require(self.fbm.hurst, "fbm.hurst")?, "fbm.hurst")?;
        check((0.5..1.0).contains(&h), "fbm.hurst", "must lie in [0.5, 1)")?;
        Ok(h)
    }

    pub fn dt(&self) -> CliResult<f64> {
        let dt = finite(require(self.scheme.dt, "scheme.dt")?, "scheme.dt")?;
        check(dt > 0.0, "scheme.dt", "must be positive")?;
        Ok(dt)
    }

    pub fn n_steps(&self) -> CliResult<usize> {
        let n = require(self.scheme.n_steps, "scheme.n_steps")?;
        check(n >= 1, "scheme.n_steps", "must be at least 1")?;
        Ok(n as usize)
    }

    pub fn theta(&self) -> CliResult<f64> {
        let t = finite(require(self.scheme.theta, "scheme.theta")?, "scheme.theta")?;
        check((0.0..=1.0).contains(&t), "scheme.theta", "must lie in [0, 1]")?;
        Ok(t)
    }

    pub fn output_dir(&self) -> CliResult<PathBuf> {
        if let Some(f) = &self.output.format {
            check(f == "csv", "output.format", "only \"csv\" is supported")?;
        }
        Ok(PathBuf::from(
            self.output.directory.clone().unwrap_or_else(|| "out".into()),
        ))
    }

    pub fn sampling(&self) -> CliResult<SamplingSetup> {
        let hurst = self.hurst()?;
        let dt = self.dt()?;
        let n_steps = self.n_steps()?;
        let grid = FbmGrid::new(hurst, dt, n_steps)?;
        let e = &self.ensemble;
        let n_paths = require(e.n_paths, "ensemble.n_paths")?;
        check(n_paths >= 2, "ensemble.n_paths", "must be at least 2")?;
        let seed = require(e.master_seed, "ensemble.master_seed")?;
        let stride = e
            .record_stride
            .map(|s| s as usize)
            .unwrap_or_else(|| default_stride(n_steps));
        check(stride >= 1, "ensemble.record_stride", "must be positive")?;
        let burn = finite(e.burn_in_fraction.unwrap_or(0.2), "ensemble.burn_in_fraction")?;
        check(
            (0.0..0.5).contains(&burn),
            "ensemble.burn_in_fraction",
            "must lie in [0, 0.5)",
        )?;
        let method = self.fbm.method.unwrap_or(MethodName::Circulant);
        if method == MethodName::Cholesky {
            check(
                n_steps <= fbm_stm_core::fbm::DEFAULT_CHOLESKY_CAP,
                "fbm.method",
                "cholesky supports at most 4096 steps; use circulant",
            )?;
        }
        let ensemble = EnsembleConfig::new(n_paths as usize, seed, stride, burn)?.with_sampler(method.into());
        Ok(SamplingSetup {
            grid,
            ensemble,
            output_dir: self.output_dir()?,
        })
    }

    pub fn simulation(&self) -> CliResult<SimulationSetup> {
        let sampling = self.sampling()?;
        let hurst = sampling.grid.hurst();
        let scheme = ThetaScheme::new(self.theta()?, sampling.grid.dt(), sampling.grid.n_steps())?;
        let m = &self.model;
        let kappa_spec = require(m.kappa, "model.kappa")?;
        let kappa = finite(kappa_spec.resolve(hurst), "model.kappa")?;
        check(kappa >= 1.0, "model.kappa", "must be at least 1")?;
        let convention: SignConvention = m.convention.unwrap_or(ConventionName::Canonical).into();
        let lambda = convention.to_canonical(finite(require(m.lambda, "model.lambda")?, "model.lambda")?);
        let mu = finite(require(m.mu, "model.mu")?, "model.mu")?;
        let x0 = finite(require(m.x0, "model.x0")?, "model.x0")?;
        let model = match m.kind.unwrap_or(ModelKindName::Linear) {
            ModelKindName::Linear => {
                check(
                    m.lambda_bar.is_none(),
                    "model.lambda_bar",
                    "only used by nonlinear models",
                )?;
                check(x0 != 0.0, "model.x0", "must be non-zero")?;
                ModelSpec::Linear(LinearTestModel::new(lambda, mu, kappa, x0)?)
            }
            kind => {
                check(lambda > 0.0, "model.lambda", "must be positive (after sign convention)")?;
                check(mu > 0.0, "model.mu", "must be positive")?;
                let lambda_bar = finite(m.lambda_bar.unwrap_or(lambda), "model.lambda_bar")?;
                check(lambda_bar >= lambda, "model.lambda_bar", "must be at least lambda")?;
                let c = AssumptionConstants::new(lambda, lambda_bar, mu, kappa)?;
                ModelSpec::Nonlinear(if kind == ModelKindName::CubicDrift {
                    NonlinearModel::cubic_drift(c, x0)?
                } else {
                    NonlinearModel::cubic_drift_sin_diffusion(c, x0)?
                })
            }
        };
        let slope_tol = finite(
            self.ensemble.slope_tol.unwrap_or(DEFAULT_SLOPE_TOL),
            "ensemble.slope_tol",
        )?;
        check(slope_tol >= 0.0, "ensemble.slope_tol", "must be non-negative")?;
        let drop_margin = finite(
            self.ensemble.drop_margin.unwrap_or(DEFAULT_DROP_MARGIN),
            "ensemble.drop_margin",
        )?;
        check(drop_margin >= 0.0, "ensemble.drop_margin", "must be non-negative")?;
        Ok(SimulationSetup {
            model,
            kappa: kappa_spec,
            scheme,
            sampling,
            slope_tol,
            drop_margin,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"
[model]
kind = "linear"
convention = "plus_lambda"
lambda = -9.0
mu = 2.0
kappa = "2H"
x0 = 3.0

[scheme]
theta = 0.8
dt = 0.5
n_steps = 1024

[fbm]
hurst = 0.7
method = "circulant"

[ensemble]
n_paths = 2000
master_seed = 20240601
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = RunConfig::from_toml_str(FIG1).unwrap();
        assert_eq!(cfg.model.kappa, Some(Kappa::TwoH));
        let sim = cfg.simulation().unwrap();
        match sim.model {
            ModelSpec::Linear(m) => {
                assert_eq!(m.lambda, 9.0);
                assert_eq!(m.kappa, 1.4);
            }
            _ => panic!("expected linear"),
        }
        assert_eq!(sim.sampling.ensemble.record_stride, 1);
    }

    #[test]
    fn dump_round_trips() {
        let cfg = RunConfig::from_toml_str(FIG1).unwrap();
        let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
        let numeric =
            RunConfig::load_with_overrides(None, &["model.kappa=1.25".into(), "scheme.dt=0.1".into()]).unwrap();
        assert_eq!(RunConfig::from_toml_str(&numeric.to_toml_string()).unwrap(), numeric);
    }

    #[test]
    fn errors_name_the_key() {
        let err = RunConfig::from_toml_str("[fbm]\nhurts = 0.7\n").unwrap_err();
        assert_eq!(err.to_string(), "fbm.hurts: unknown key");
        let err = RunConfig::from_toml_str("[scheme]\ntheta = \"x\"\n").unwrap_err();
        assert!(err.to_string().starts_with("scheme.theta:"));
        let mut cfg = RunConfig::from_toml_str(FIG1).unwrap();
        cfg.fbm.hurst = None;
        let err = cfg.simulation().unwrap_err();
        assert_eq!(err.to_string(), "fbm.hurst: missing required key");
        assert_eq!(err.exit_code(), 2);
        cfg.fbm.hurst = Some(1.2);
        assert!(cfg.simulation().unwrap_err().to_string().starts_with("fbm.hurst:"));
    }

    #[test]
    fn overrides_patch_values() {
        let dir = std::env::temp_dir().join(format!("fbm-stm-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, FIG1).unwrap();
        let cfg = RunConfig::load_with_overrides(
            Some(&path),
            &[
                "scheme.theta=0.4".into(),
                "model.kind=cubic_drift".into(),
                "output.directory=runs/a".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.scheme.theta, Some(0.4));
        assert_eq!(cfg.model.kind, Some(ModelKindName::CubicDrift));
        assert_eq!(cfg.output.directory.as_deref(), Some("runs/a"));
        assert!(RunConfig::load_with_overrides(Some(&path), &["nokey=1".into()]).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn kappa_parsing() {
        assert_eq!("2H".parse::<Kappa>().unwrap(), Kappa::TwoH);
        assert_eq!("2h".parse::<Kappa>().unwrap(), Kappa::TwoH);
        assert_eq!("1.5".parse::<Kappa>().unwrap(), Kappa::Value(1.5));
        assert!("3H".parse::<Kappa>().is_err());
        assert_eq!(Kappa::TwoH.resolve(0.7), 1.4);
    }
}
