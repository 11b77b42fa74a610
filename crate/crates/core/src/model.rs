//! Platform constants, tuning parameters and launch-shape arithmetic.
//!
//! A platform is `nd` devices of `nu` compute units with `np` processing
//! elements each. Global-memory work costs `gmt` ticks per unit of
//! local-memory work. The tuner chooses a workgroup size `wg` and a tile
//! size `ts`, both powers of two in `2..=size/2`; [`derive_launch`] turns
//! that choice into the number of workgroups and of simultaneously working
//! devices, units and elements.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global-memory cost factor used when none is configured.
pub const DEFAULT_GMT: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub nd: u32,
    pub nu: u32,
    pub np: u32,
    #[serde(default = "default_gmt")]
    pub gmt: u32,
}

fn default_gmt() -> u32 {
    DEFAULT_GMT
}

impl PlatformConfig {
    pub fn new(nd: u32, nu: u32, np: u32, gmt: u32) -> Result<Self> {
        let platform = PlatformConfig { nd, nu, np, gmt };
        platform.validate()?;
        Ok(platform)
    }

    /// One device with one unit: the abstraction used for the experiments.
    pub fn single_unit(np: u32, gmt: u32) -> Result<Self> {
        Self::new(1, 1, np, gmt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nd == 0 || self.nu == 0 || self.np == 0 || self.gmt == 0 {
            return Err(Error::InvalidPlatform(format!(
                "nd, nu, np and gmt must all be at least 1 (got {self})"
            )));
        }
        if !self.np.is_power_of_two() {
            return Err(Error::InvalidPlatform(format!(
                "np must be a power of two (got {})",
                self.np
            )));
        }
        Ok(())
    }

    pub fn total_elements(&self) -> u32 {
        self.nd * self.nu * self.np
    }
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            nd: 1,
            nu: 1,
            np: 4,
            gmt: DEFAULT_GMT,
        }
    }
}

impl fmt::Display for PlatformConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "nd={} nu={} np={} gmt={}",
            self.nd, self.nu, self.np, self.gmt
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Abstract,
    Minimum,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelKind::Abstract => "abstract",
            KernelKind::Minimum => "minimum",
        })
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abstract" => Ok(KernelKind::Abstract),
            "minimum" => Ok(KernelKind::Minimum),
            other => Err(Error::InvalidProblem(format!(
                "unknown kernel kind {other:?}"
            ))),
        }
    }
}

/// Input size, kernel kind and (for the minimum kernel) the input array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub size: u32,
    pub kernel: KernelKind,
    pub input: Option<Vec<i64>>,
}

impl ProblemSpec {
    pub fn abstract_kernel(size: u32) -> Result<Self> {
        let problem = ProblemSpec {
            size,
            kernel: KernelKind::Abstract,
            input: None,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn minimum(input: Vec<i64>) -> Result<Self> {
        let size = u32::try_from(input.len())
            .map_err(|_| Error::InvalidProblem("input array too long".into()))?;
        let problem = ProblemSpec {
            size,
            kernel: KernelKind::Minimum,
            input: Some(input),
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Minimum kernel over the descending array `size, size-1, ..., 1`.
    pub fn minimum_default(size: u32) -> Result<Self> {
        Self::minimum((0..size).map(|i| i64::from(size - i)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        log2_size(self.size)?;
        match (&self.kernel, &self.input) {
            (KernelKind::Abstract, None) => Ok(()),
            (KernelKind::Abstract, Some(_)) => Err(Error::InvalidProblem(
                "the abstract kernel takes no input array".into(),
            )),
            (KernelKind::Minimum, None) => Err(Error::InvalidProblem(
                "the minimum kernel requires an input array".into(),
            )),
            (KernelKind::Minimum, Some(input)) if input.len() != self.size as usize => {
                Err(Error::InvalidProblem(format!(
                    "input has {} elements, size is {}",
                    input.len(),
                    self.size
                )))
            }
            (KernelKind::Minimum, Some(_)) => Ok(()),
        }
    }
}

/// `n` such that `size == 2^n`, requiring `n >= 2`.
pub fn log2_size(size: u32) -> Result<u32> {
    if !size.is_power_of_two() || size < 4 {
        return Err(Error::InvalidProblem(format!(
            "size must be a power of two and at least 4 (got {size})"
        )));
    }
    Ok(size.trailing_zeros())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TuningParams {
    pub wg: u32,
    pub ts: u32,
}

impl TuningParams {
    pub fn new(wg: u32, ts: u32) -> Self {
        TuningParams { wg, ts }
    }

    pub fn validate(&self, size: u32) -> Result<()> {
        log2_size(size)?;
        let bad = |reason: &str| Error::InvalidParams {
            wg: self.wg,
            ts: self.ts,
            size,
            reason: reason.to_string(),
        };
        if !self.wg.is_power_of_two() || !self.ts.is_power_of_two() {
            return Err(bad("wg and ts must be powers of two"));
        }
        if self.wg < 2 || self.wg > size / 2 {
            return Err(bad("wg must lie in 2..=size/2"));
        }
        if self.ts < 2 || self.ts > size / 2 {
            return Err(bad("ts must lie in 2..=size/2"));
        }
        Ok(())
    }
}

impl fmt::Display for TuningParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "wg={} ts={}", self.wg, self.ts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LaunchPlan {
    /// Number of workgroups, never below one.
    pub wgs: u32,
    pub nwd: u32,
    pub nwu: u32,
    pub nwe: u32,
    pub all_nwe: u32,
}

impl LaunchPlan {
    /// Work items each processing element serves per workgroup.
    pub fn rounds(&self, params: TuningParams) -> u32 {
        params.wg / self.nwe
    }
}

/// Launch shape for `params` on `platform`.
///
/// The workgroup count uses integer division and is then clamped to one, so
/// a configuration with `wg * ts > size` runs a single partially filled group.
/// The device count follows the two-step assignment literally: first
/// `wgs / nu` (or `nd` when the groups exceed all units), then forced to one
/// when `wgs / nu` is zero.
pub fn derive_launch(
    platform: &PlatformConfig,
    size: u32,
    params: TuningParams,
) -> Result<LaunchPlan> {
    platform.validate()?;
    params.validate(size)?;
    let PlatformConfig { nd, nu, np, .. } = *platform;

    let wgs = (size / (params.wg * params.ts)).max(1);
    let mut nwd = if wgs <= nu * nd { wgs / nu } else { nd };
    if wgs / nu == 0 {
        nwd = 1;
    }
    let nwu = if wgs <= nu { wgs } else { nu };
    let nwe = if params.wg <= np { params.wg } else { np };
    Ok(LaunchPlan {
        wgs,
        nwd,
        nwu,
        nwe,
        all_nwe: nwe * nwu * nwd,
    })
}

/// Every `(wg, ts)` pair for `size = 2^n`, both ranging over `2^1..=2^(n-1)`,
/// in ascending lexicographic order.
pub fn enumerate_configs(size: u32) -> Result<Vec<TuningParams>> {
    let n = log2_size(size)?;
    let powers: Vec<u32> = (1..n).map(|i| 1u32 << i).collect();
    Ok(powers
        .iter()
        .flat_map(|&wg| powers.iter().map(move |&ts| TuningParams::new(wg, ts)))
        .collect())
}

/// On-disk configuration: `{"platform": {...}, "problem": {...}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConfigFile {
    #[serde(default)]
    pub platform: PlatformConfig,
    #[serde(default)]
    pub problem: ProblemSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProblemSection {
    pub size: Option<u32>,
    #[serde(default)]
    pub kernel: KernelKind,
    pub input_path: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ConfigFile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // input paths are relative to the config file
        if let (Some(input), Some(dir)) = (&config.problem.input_path, path.parent()) {
            if input.is_relative() {
                config.problem.input_path = Some(dir.join(input));
            }
        }
        Ok(config)
    }
}

/// Reads one decimal integer per line. Blank lines are ignored.
pub fn read_input_array(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read input {}: {e}", path.display())))?;
    parse_input_array(&text)
}

pub fn parse_input_array(text: &str) -> Result<Vec<i64>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.trim()
                .parse::<i64>()
                .map_err(|e| Error::Config(format!("input line {}: {:?}: {e}", i + 1, line.trim())))
        })
        .collect()
}
