//! Run configuration (TOML). Relative paths resolve against the config
//! file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ttc_core::planner::{RankSpec, DEFAULT_MAX_FACTOR, DEFAULT_PROBLEM_CAP};

use crate::error::{config_err, Result};
use crate::mask::MaskMode;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    pub input: InputConfig,
    #[serde(default)]
    pub mask: MaskConfig,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub ranks: RankConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub cv: CvConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    /// Single image (.ppm/.pgm/.png).
    pub image: Option<PathBuf>,
    /// Directory of frames, read in lexicographic order.
    pub video: Option<PathBuf>,
    /// Ground truth for metrics. Without it, metrics are computed against
    /// the input when the mask was generated (a synthetic experiment).
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    /// Mask CSV; when absent a mask is drawn from `fraction` and `mode`.
    pub file: Option<PathBuf>,
    pub fraction: f64,
    pub mode: MaskMode,
    /// Defaults to the top-level seed.
    pub seed: Option<u64>,
}

impl Default for MaskConfig {
    fn default() -> Self {
        MaskConfig {
            file: None,
            fraction: 0.1,
            mode: MaskMode::Iid,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    /// Per-mode factor lists; overrides the automatic factorization.
    pub factors: Option<Vec<Vec<usize>>>,
    pub max_factor: usize,
    pub problem_cap: usize,
    /// Zero-pad the two spatial modes to these sizes (padded entries are
    /// unobserved and cropped from the output).
    pub pad_to: Option<[usize; 2]>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            factors: None,
            max_factor: DEFAULT_MAX_FACTOR,
            problem_cap: DEFAULT_PROBLEM_CAP,
            pad_to: None,
        }
    }
}

/// Either explicit `R_2..R_d` or a schedule `(r2, rmid, rdm1, rd)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    pub explicit: Option<Vec<usize>>,
    pub r2: usize,
    pub rmid: usize,
    pub rdm1: Option<usize>,
    pub rd: Option<usize>,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            explicit: None,
            r2: 4,
            rmid: 8,
            rdm1: None,
            rd: Some(3),
        }
    }
}

impl RankConfig {
    pub fn spec(&self) -> RankSpec {
        match &self.explicit {
            Some(r) => RankSpec::Explicit(r.clone()),
            None => RankSpec::Schedule {
                r2: self.r2,
                rmid: self.rmid,
                r_dm1: self.rdm1,
                r_d: self.rd,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Interp,
    Zero,
}

/// One weight for every TV mode, or one per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda {
    Uniform(f64),
    PerMode(Vec<f64>),
}

impl Lambda {
    pub fn expand(&self, modes: usize) -> Result<Vec<f64>> {
        match self {
            Lambda::Uniform(l) => Ok(vec![*l; modes]),
            Lambda::PerMode(v) if v.len() == modes => Ok(v.clone()),
            Lambda::PerMode(v) => Err(config_err!("{} lambda values for {modes} TV modes", v.len())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// 1-based modes carrying a TV term; empty disables TV.
    pub tv_modes: Vec<usize>,
    pub lambda: Lambda,
    pub adapt_lambda: bool,
    pub gamma: f64,
    pub sweeps: usize,
    pub tolerance: f64,
    pub init: InitKind,
    /// Box size of the interpolation init; derived from the observed
    /// fraction when absent.
    pub box_size: Option<usize>,
    /// Fold every mode after the two spatial ones into the first core
    /// (requires a sensor mask).
    pub grouped: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tv_modes: Vec::new(),
            lambda: Lambda::Uniform(1.0),
            adapt_lambda: true,
            gamma: 0.0,
            sweeps: 10,
            tolerance: 1e-6,
            init: InitKind::Interp,
            box_size: None,
            grouped: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub trials: usize,
    pub holdout: f64,
    pub candidates: Vec<RankConfig>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            trials: 10,
            holdout: 0.1,
            candidates: Vec::new(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| config_err!("config: {e}"))
    }

    /// Parses `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err!("{}: {e}", path.display()))?;
        let mut cfg = Config::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(x) = p.as_mut() {
                if x.is_relative() {
                    *x = base.join(&*x);
                }
            }
        };
        fix(&mut self.input.image);
        fix(&mut self.input.video);
        fix(&mut self.input.truth);
        fix(&mut self.mask.file);
        if self.output.dir.is_relative() {
            self.output.dir = base.join(&self.output.dir);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mask_seed(&self) -> u64 {
        self.mask.seed.unwrap_or(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = Config::from_toml("[input]\nimage = \"a.ppm\"\n").unwrap();
        assert_eq!(cfg.solver.sweeps, 10);
        assert_eq!(cfg.mask.mode, MaskMode::Iid);
        assert_eq!(cfg.layout.max_factor, 10);
        assert_eq!(cfg.ranks.spec(), RankSpec::Schedule { r2: 4, rmid: 8, r_dm1: None, r_d: Some(3) });
    }

    #[test]
    fn full_config_parses() {
        let text = r#"
            seed = 5
            [input]
            image = "img.ppm"
            [mask]
            fraction = 0.2
            mode = "sensor"
            [layout]
            factors = [[6, 4, 4], [6, 4, 4], [3]]
            [ranks]
            explicit = [4, 8, 8, 8, 8, 3]
            [solver]
            tv_modes = [1, 2]
            lambda = [1.0, 0.5]
            init = "zero"
            [[cv.candidates]]
            r2 = 2
            rmid = 4
            [[cv.candidates]]
            r2 = 4
            rmid = 8
            rd = 3
        "#;
        let cfg = Config::from_toml(text).unwrap();
        assert_eq!(cfg.solver.lambda.expand(2).unwrap(), vec![1.0, 0.5]);
        assert!(cfg.solver.lambda.expand(3).is_err());
        assert_eq!(cfg.cv.candidates.len(), 2);
        assert_eq!(cfg.solver.init, InitKind::Zero);
        let again = Config::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml("[input]\nimage = \"a\"\n[solver]\nsweps = 3\n").is_err());
        assert!(Config::from_toml("[solver]\nsweeps = 3\n").is_err());
    }

    #[test]
    fn relative_paths_resolve() {
        let mut cfg = Config::from_toml("[input]\nimage = \"a.ppm\"\n[mask]\nfile = \"/abs/m.csv\"\n").unwrap();
        cfg.resolve(Path::new("/data/run"));
        assert_eq!(cfg.input.image.unwrap(), PathBuf::from("/data/run/a.ppm"));
        assert_eq!(cfg.mask.file.unwrap(), PathBuf::from("/abs/m.csv"));
        assert_eq!(cfg.output.dir, PathBuf::from("/data/run/out"));
    }
}
