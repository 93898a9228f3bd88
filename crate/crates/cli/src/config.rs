//! Layered JSON configuration: typed defaults, then a config file, then
//! command-line flags, then `--set key.path=value` overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use srf_core::graph::{CslConfig, FeatureMode, CSL_DEFAULT_NODES, CSL_DEFAULT_PER_CLASS, CSL_DEFAULT_SKIPS};
use srf_core::gnn::GnnConfig;
use srf_core::kernels::KernelTag;
use srf_core::metrics::{
    DistortionConfig, EquivarianceConfig, ExpressivenessConfig, OversmoothConfig, OversquashConfig, UnbiasednessConfig,
    UniquenessConfig,
};
use srf_core::sketch::{Bandwidth, SketchKind, SrfConfig, DEFAULT_ORDER};

/// Recursively merges `patch` into `base`; objects merge key by key, every
/// other value replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Parses `a.b.c=value`. The value is read as JSON when it parses, as a
/// plain string otherwise.
pub fn parse_override(spec: &str) -> Result<(String, Value)> {
    let (key, raw) = spec
        .split_once('=')
        .with_context(|| format!("override '{spec}' is not of the form key=value"))?;
    if key.is_empty() || key.split('.').any(str::is_empty) {
        bail!("override '{spec}' has an empty key segment");
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

/// Sets the value at a dotted path. Numeric segments index arrays; missing
/// or null object levels are created.
pub fn set_path(root: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let len = items.len();
                let idx: usize = seg
                    .parse()
                    .ok()
                    .filter(|&i| i < len)
                    .with_context(|| format!("'{key}': index '{seg}' invalid for array of length {len}"))?;
                if last {
                    items[idx] = value;
                    return Ok(());
                }
                &mut items[idx]
            }
            _ => bail!("'{key}': '{}' is not an object or array", segments[..depth].join(".")),
        };
    }
    unreachable!("loop returns on the last segment")
}

/// Builds a typed config from its defaults, an optional JSON file and the
/// overrides in order. Returns the value and its fully resolved JSON form.
pub fn resolve<T: Serialize + DeserializeOwned + Default>(
    file: Option<&Path>,
    overrides: &[(String, Value)],
) -> Result<(T, Value)> {
    let mut value = serde_json::to_value(T::default())?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let patch: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if !patch.is_object() {
            bail!("config {} must contain a JSON object", path.display());
        }
        merge(&mut value, patch);
    }
    for (k, v) in overrides {
        set_path(&mut value, k, v.clone())?;
    }
    let typed: T = serde_json::from_value(value).context("invalid configuration")?;
    let resolved = serde_json::to_value(&typed)?;
    Ok((typed, resolved))
}

pub fn default_srf() -> SrfConfig {
    SrfConfig {
        kernel: KernelTag::Rbf,
        dim: 16,
        bandwidth: Bandwidth::default(),
        sketch: SketchKind::DenseAg,
        order: DEFAULT_ORDER,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeGen {
    pub seed: u64,
    pub depth: usize,
    pub train: usize,
    pub test: usize,
}

impl Default for TreeGen {
    fn default() -> Self {
        Self {
            seed: 0,
            depth: 3,
            train: 4_000,
            test: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CslGen {
    pub seed: u64,
    pub n_nodes: usize,
    pub skips: Vec<usize>,
    pub per_class: usize,
}

impl Default for CslGen {
    fn default() -> Self {
        Self {
            seed: 0,
            n_nodes: CSL_DEFAULT_NODES,
            skips: CSL_DEFAULT_SKIPS.to_vec(),
            per_class: CSL_DEFAULT_PER_CLASS,
        }
    }
}

impl CslGen {
    pub fn csl(&self) -> CslConfig {
        CslConfig {
            n_nodes: self.n_nodes,
            skips: self.skips.clone(),
            per_class: self.per_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnpGen {
    pub seed: u64,
    pub n: usize,
    pub p: f64,
    pub features: usize,
    pub mode: FeatureMode,
}

impl Default for GnpGen {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 100,
            p: 0.05,
            features: 16,
            mode: FeatureMode::Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrfRun {
    pub seed: u64,
    pub srf: SrfConfig,
    /// Replace the fitted map by the identity projection (`R = I`, `D = F`).
    pub identity_projection: bool,
}

impl Default for SrfRun {
    fn default() -> Self {
        Self {
            seed: 0,
            srf: default_srf(),
            identity_projection: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossNodeConfig {
    pub nodes: usize,
    pub dim: usize,
}

impl Default for CrossNodeConfig {
    fn default() -> Self {
        Self { nodes: 16, dim: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckRun {
    pub seed: u64,
    /// Kernels for the unbiasedness check.
    pub kernels: Vec<KernelTag>,
    pub unbiasedness: UnbiasednessConfig,
    pub distortion: DistortionConfig,
    pub cross_node: CrossNodeConfig,
    pub uniqueness: UniquenessConfig,
    pub equivariance: EquivarianceConfig,
}

impl Default for CheckRun {
    fn default() -> Self {
        Self {
            seed: 0,
            kernels: KernelTag::ALL.to_vec(),
            unbiasedness: UnbiasednessConfig::default(),
            distortion: DistortionConfig::default(),
            cross_node: CrossNodeConfig::default(),
            uniqueness: UniquenessConfig::default(),
            equivariance: EquivarianceConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpressivenessCriteria {
    pub chance_bound: f64,
    pub srf_bound: f64,
}

impl Default for ExpressivenessCriteria {
    fn default() -> Self {
        Self {
            chance_bound: 0.20,
            srf_bound: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OversquashCriteria {
    pub easy_depths: Vec<usize>,
    pub fit_bound: f64,
    pub hard_depths: Vec<usize>,
    pub margin: f64,
}

impl Default for OversquashCriteria {
    fn default() -> Self {
        Self {
            easy_depths: vec![2, 3],
            fit_bound: 0.99,
            hard_depths: vec![5, 6],
            margin: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OversmoothCriteria {
    pub decay: f64,
    pub lift: f64,
}

impl Default for OversmoothCriteria {
    fn default() -> Self {
        Self { decay: 0.01, lift: 10.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchRun<B, C> {
    pub bench: B,
    pub criteria: C,
}

pub type ExpressivenessRun = BenchRun<ExpressivenessConfig, ExpressivenessCriteria>;
pub type OversquashRun = BenchRun<OversquashConfig, OversquashCriteria>;
pub type OversmoothRun = BenchRun<OversmoothConfig, OversmoothCriteria>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRun {
    /// Replaces `gnn.seed`; drives the feature-map, sketch, init and shuffle streams.
    pub seed: u64,
    pub gnn: GnnConfig,
    /// Embeddings computed on the fly when no sidecar is given.
    pub srf: Option<SrfConfig>,
}

impl Default for TrainRun {
    fn default() -> Self {
        Self {
            seed: 0,
            gnn: GnnConfig::default(),
            srf: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_parse_json_or_string() {
        assert_eq!(parse_override("a.b=3").unwrap(), ("a.b".into(), json!(3)));
        assert_eq!(parse_override("k=rbf").unwrap(), ("k".into(), json!("rbf")));
        assert_eq!(parse_override("s=[1,2]").unwrap().1, json!([1, 2]));
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
    }

    #[test]
    fn set_path_creates_and_indexes() {
        let mut v = json!({"a": {"b": 1}, "xs": [1, 2], "n": null});
        set_path(&mut v, "a.c", json!(2)).unwrap();
        set_path(&mut v, "xs.1", json!(5)).unwrap();
        set_path(&mut v, "n.kernel", json!("rbf")).unwrap();
        assert_eq!(v, json!({"a": {"b": 1, "c": 2}, "xs": [1, 5], "n": {"kernel": "rbf"}}));
        assert!(set_path(&mut v, "xs.7", json!(0)).is_err());
        assert!(set_path(&mut v, "a.b.c", json!(0)).is_err());
    }

    #[test]
    fn resolve_layers_file_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"gnn": {"epochs": 7, "hidden": 9}}"#).unwrap();
        let over = vec![("gnn.hidden".to_string(), json!(11)), ("seed".to_string(), json!(4))];
        let (cfg, resolved) = resolve::<TrainRun>(Some(&path), &over).unwrap();
        assert_eq!((cfg.gnn.epochs, cfg.gnn.hidden, cfg.seed), (7, 11, 4));
        assert_eq!(resolved["gnn"]["epochs"], json!(7));
        let (again, _) = resolve::<TrainRun>(None, &[]).unwrap();
        assert_eq!(again, TrainRun::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(resolve::<TrainRun>(None, &[("gnn.hiden".into(), json!(3))]).is_err());
        assert!(resolve::<GnpGen>(None, &[("p".into(), json!("x"))]).is_err());
    }

    #[test]
    fn bench_configs_roundtrip() {
        let (r, v) = resolve::<OversmoothRun>(None, &[]).unwrap();
        assert_eq!(serde_json::from_value::<OversmoothRun>(v).unwrap(), r);
        let (e, _) = resolve::<ExpressivenessRun>(None, &[("bench.seeds".into(), json!([3]))]).unwrap();
        assert_eq!(e.bench.seeds, vec![3]);
    }
}
