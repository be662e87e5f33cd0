//! JSON run configurations with flag overrides.
//!
//! Every command resolves its settings into one of these structs, writes the
//! result back out as `manifest.json`, and can be replayed from that manifest
//! alone. Flags win over config-file values. A seed must always be present;
//! there is no silent default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nhpp_core::{
    AnalyticKind, CovariateField, Error, McmcConfig, PriorSpec, ProposalScale, Region, Result,
    SimMethod,
};

/// Covariate description in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateConfig {
    CoordX,
    CoordY,
    Product,
    SquareX,
    DistanceTo {
        cx: f64,
        cy: f64,
        #[serde(default)]
        name: Option<String>,
    },
    Raster {
        path: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
}

impl CovariateConfig {
    /// Load the covariate, resolving raster paths relative to `base`.
    pub fn load(&self, base: &Path) -> Result<CovariateField> {
        Ok(match self {
            CovariateConfig::CoordX => CovariateField::coord_x(),
            CovariateConfig::CoordY => CovariateField::coord_y(),
            CovariateConfig::Product => CovariateField::product(),
            CovariateConfig::SquareX => CovariateField::square_x(),
            CovariateConfig::DistanceTo { cx, cy, name } => CovariateField::analytic(
                name.clone().unwrap_or_else(|| "dist".to_string()),
                AnalyticKind::DistanceTo { cx: *cx, cy: *cy },
            ),
            CovariateConfig::Raster { path, name } => {
                let resolved = resolve(base, path);
                let raster = nhpp_core::io::read_raster(&resolved)?;
                let name = name.clone().unwrap_or_else(|| {
                    resolved
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "raster".to_string())
                });
                CovariateField::raster(name, raster)
            }
        })
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// MCMC settings with an optional named profile; explicit fields override
/// the profile's chain lengths.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct McmcSection {
    #[serde(default)]
    pub profile: Option<String>,
    #[serde(default)]
    pub n_iter: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub thin: Option<usize>,
    #[serde(default)]
    pub proposal_sd: Option<ProposalScale>,
    #[serde(default)]
    pub adapt: Option<bool>,
}

impl McmcSection {
    pub fn build(&self, seed: u64) -> Result<McmcConfig> {
        let mut cfg = match self.profile.as_deref() {
            None | Some("sim2018") => McmcConfig::sim2018(seed),
            Some("paper51") => McmcConfig::paper51(seed),
            Some("paper52") => McmcConfig::paper52(seed),
            Some(other) => {
                return Err(Error::Config(format!(
                    "unknown profile '{other}'; expected sim2018, paper51, or paper52"
                )))
            }
        };
        if let Some(n) = self.n_iter {
            cfg.n_iter = n;
        }
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
        if let Some(t) = self.thin {
            cfg.thin = t;
        }
        if let Some(p) = &self.proposal_sd {
            cfg.proposal_sd = p.clone();
        }
        if let Some(a) = self.adapt {
            cfg.adapt = a;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn default_region() -> Region {
    Region::unit_square()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub preset: u8,
    pub seed: Option<u64>,
    #[serde(default = "default_method")]
    pub method: SimMethod,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

pub fn default_method() -> SimMethod {
    SimMethod::PerCell { nx: 100, ny: 100 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub points: PathBuf,
    #[serde(default = "default_region")]
    pub region: Region,
    #[serde(default)]
    pub covariates: Vec<CovariateConfig>,
    /// One-based covariate indices of the fitted model; empty = homogeneous.
    #[serde(default)]
    pub model: Vec<usize>,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub mcmc: McmcSection,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateConfig {
    /// Enumerate every nonempty subset (optionally plus the homogeneous model).
    All { include_homogeneous: bool },
    /// Explicit list of one-based index subsets.
    Explicit(Vec<Vec<usize>>),
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig::All {
            include_homogeneous: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectConfig {
    pub points: PathBuf,
    #[serde(default = "default_region")]
    pub region: Region,
    pub covariates: Vec<CovariateConfig>,
    #[serde(default)]
    pub candidates: CandidateConfig,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub mcmc: McmcSection,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    pub preset: u8,
    pub replicates: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_method")]
    pub method: SimMethod,
    #[serde(default)]
    pub mcmc: McmcSection,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_schedule() -> Vec<usize> {
    vec![25, 50, 100, 200]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Run the built-in two-sample fixture instead of fitting data.
    #[serde(default)]
    pub fixture: bool,
    #[serde(default)]
    pub points: Option<PathBuf>,
    #[serde(default = "default_region")]
    pub region: Region,
    #[serde(default)]
    pub covariates: Vec<CovariateConfig>,
    #[serde(default)]
    pub model: Vec<usize>,
    #[serde(default)]
    pub prior: Option<PriorSpec>,
    #[serde(default)]
    pub mcmc: McmcSection,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: Option<(usize, usize)>,
    #[serde(default = "default_schedule")]
    pub schedule: Vec<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Parse a config file into `T`, surfacing missing files as I/O errors.
pub fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// The seed is mandatory: refuse to run with silent nondeterminism.
pub fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::Config("a seed is required (use --seed or the config file)".into()))
}

/// Resolve the output directory, create it, and verify it is writable.
pub fn prepare_out_dir(out_dir: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"").map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let _ = std::fs::remove_file(&probe);
    Ok(dir)
}

/// Convert one-based config indices to a zero-based model spec.
pub fn model_from_one_based(indices: &[usize], p: usize) -> Result<nhpp_core::ModelSpec> {
    let mut zero = Vec::with_capacity(indices.len());
    for &i in indices {
        if i == 0 {
            return Err(Error::Config(
                "model indices are one-based; 0 is not a covariate".into(),
            ));
        }
        zero.push(i - 1);
    }
    nhpp_core::ModelSpec::new(zero, p)
}

/// Manifest: the resolved config plus the command name, replayable as-is.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, T: Serialize> {
    pub command: &'a str,
    #[serde(flatten)]
    pub config: &'a T,
}

pub fn write_manifest<T: Serialize>(dir: &Path, command: &str, config: &T) -> Result<()> {
    nhpp_core::io::write_json(&dir.join("manifest.json"), &Manifest { command, config })
}
