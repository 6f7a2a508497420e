//! Run configuration files: line-oriented `key = value` pairs with `#`
//! comments.
//!
//! ```text
//! # 41x41 square, entry in the middle
//! region = open:41x41
//! algorithm = SLTT-EA
//! approach = 2
//! dt = 1
//! e0 = 15
//! ```
//!
//! `region` is either a path to a region file (relative paths resolve
//! against the config file's directory) or one of two generated shapes:
//! `line:N` / `line:N:J` for an N-cell corridor entered at cell J (1-based,
//! default 1), and `open:WxH` for a wall-free rectangle entered at its
//! middle cell.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sleac_core::agent::ParamsError;
use sleac_core::grid::RegionError;
use sleac_core::{Coord, Region, SimParams};
use thiserror::Error;

/// Keys accepted in a config file and by `--vary`.
pub const KEYS: [&str; 12] = [
    "region",
    "algorithm",
    "approach",
    "scheduler",
    "dt",
    "e0",
    "ecrit_mobile",
    "ecrit_settled",
    "alpha",
    "m",
    "seed",
    "max_steps",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    MissingSeparator { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("no region given")]
    MissingRegion,
    #[error("cannot read region file {path}: {source}")]
    RegionFile { path: PathBuf, source: io::Error },
    #[error("cannot read config file {path}: {source}")]
    ConfigFile { path: PathBuf, source: io::Error },
    #[error("invalid region `{label}`: {source}")]
    Region { label: String, source: RegionError },
    #[error("invalid parameter combination: {0}")]
    Params(#[from] ParamsError),
}

/// Where the region of a run comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RegionSource {
    File(PathBuf),
    /// `n` cells in a row, entered at 1-based cell `entry`.
    Line { n: usize, entry: usize },
    /// Wall-free rectangle entered at `(height/2, width/2)`.
    Open { width: usize, height: usize },
}

impl RegionSource {
    pub fn parse(value: &str, base_dir: Option<&Path>) -> Result<Self, String> {
        let parse_n = |s: &str, what: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("{what} `{s}` is not a non-negative integer"))
        };
        if let Some(rest) = value.strip_prefix("line:") {
            let mut parts = rest.split(':');
            let n = parse_n(parts.next().unwrap_or(""), "length")?;
            let entry = match parts.next() {
                Some(j) => parse_n(j, "entry cell")?,
                None => 1,
            };
            if parts.next().is_some() {
                return Err("expected line:N or line:N:J".into());
            }
            if entry < 1 || entry > n {
                return Err(format!("entry cell {entry} outside 1..={n}"));
            }
            return Ok(RegionSource::Line { n, entry });
        }
        if let Some(rest) = value.strip_prefix("open:") {
            let (w, h) = rest
                .split_once('x')
                .ok_or_else(|| "expected open:WxH".to_string())?;
            return Ok(RegionSource::Open {
                width: parse_n(w, "width")?,
                height: parse_n(h, "height")?,
            });
        }
        let path = PathBuf::from(value);
        Ok(match base_dir {
            Some(dir) if path.is_relative() => RegionSource::File(dir.join(path)),
            _ => RegionSource::File(path),
        })
    }

    pub fn load(&self) -> Result<Region, ConfigError> {
        let wrap = |source| ConfigError::Region {
            label: self.label(),
            source,
        };
        match self {
            RegionSource::File(path) => {
                let text = fs::read_to_string(path).map_err(|source| ConfigError::RegionFile {
                    path: path.clone(),
                    source,
                })?;
                Region::parse(&text).map_err(wrap)
            }
            RegionSource::Line { n, entry } => Region::linear(*n, entry - 1).map_err(wrap),
            RegionSource::Open { width, height } => {
                Region::open(*width, *height, Coord::new(height / 2, width / 2)).map_err(wrap)
            }
        }
    }

    /// Short name used in output rows.
    pub fn label(&self) -> String {
        match self {
            RegionSource::File(path) => path.display().to_string(),
            RegionSource::Line { n, entry } => format!("line:{n}:{entry}"),
            RegionSource::Open { width, height } => format!("open:{width}x{height}"),
        }
    }
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub region: RegionSource,
    pub params: SimParams,
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| "not a number of the expected kind".to_string())
}

/// Applies one `key = value` setting to a partial configuration.
pub fn apply(
    params: &mut SimParams,
    region: &mut Option<RegionSource>,
    key: &str,
    value: &str,
    base_dir: Option<&Path>,
) -> Result<(), String> {
    match key {
        "region" => *region = Some(RegionSource::parse(value, base_dir)?),
        "algorithm" => params.algorithm = value.parse().map_err(|e| format!("{e}"))?,
        "approach" => params.approach = value.parse().map_err(|e| format!("{e}"))?,
        "scheduler" => params.scheduler = value.parse().map_err(|e| format!("{e}"))?,
        "dt" => params.dt = parse_num(value)?,
        "e0" => params.e0 = parse_num(value)?,
        "ecrit_mobile" => params.ecrit_mobile = parse_num(value)?,
        "ecrit_settled" => params.ecrit_settled = parse_num(value)?,
        "alpha" => params.alpha = parse_num(value)?,
        "m" => params.m = parse_num(value)?,
        "seed" => params.seed = parse_num(value)?,
        "max_steps" => {
            params.max_steps = match value {
                "none" | "default" => None,
                v => Some(parse_num(v)?),
            }
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

impl Config {
    /// Parses config text; `base_dir` anchors relative region paths.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut params = SimParams::default();
        let mut region = None;
        let mut seen: Vec<String> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::MissingSeparator { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if seen.iter().any(|s| s == key) {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(key.to_string());
            apply(&mut params, &mut region, key, value, base_dir).map_err(|reason| {
                ConfigError::InvalidValue {
                    line,
                    key: key.to_string(),
                    value: value.to_string(),
                    reason,
                }
            })?;
        }
        let region = region.ok_or(ConfigError::MissingRegion)?;
        params.validate()?;
        Ok(Config { region, params })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent())
    }

    /// Returns a copy with one key overridden, as used by sweeps.
    pub fn with(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut params = self.params.clone();
        let mut region = Some(self.region.clone());
        apply(&mut params, &mut region, key, value, None).map_err(|reason| {
            ConfigError::InvalidValue {
                line: 0,
                key: key.to_string(),
                value: value.to_string(),
                reason,
            }
        })?;
        params.validate()?;
        Ok(Config {
            region: region.ok_or(ConfigError::MissingRegion)?,
            params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sleac_core::{Algorithm, Approach, SchedulerKind};

    #[test]
    fn full_config_round_trip() {
        let text = "\
# comment line
region = line:10:4
algorithm = SLTT-EA   # trailing comment
approach = 2
scheduler = adversarial
dt = 4
e0 = 30
ecrit_mobile = 2
ecrit_settled = 0.5
alpha = 0.025
m = 10
seed = 7
max_steps = 500
";
        let c = Config::parse(text, None).unwrap();
        assert_eq!(c.region, RegionSource::Line { n: 10, entry: 4 });
        let p = &c.params;
        assert_eq!(p.algorithm, Algorithm::Sltt);
        assert_eq!(p.approach, Approach::MaxCoverage);
        assert_eq!(p.scheduler, SchedulerKind::Adversarial);
        assert_eq!((p.dt, p.e0, p.ecrit_mobile, p.m, p.seed), (4, 30, 2, 10, 7));
        assert_eq!((p.ecrit_settled, p.alpha), (0.5, 0.025));
        assert_eq!(p.max_steps, Some(500));
        assert_eq!(c.region.load().unwrap().entry(), Coord::new(0, 3));
    }

    #[test]
    fn each_error_is_distinct() {
        let bad = |t: &str| Config::parse(t, None).unwrap_err();
        assert!(matches!(bad("region line:3"), ConfigError::MissingSeparator { line: 1 }));
        assert!(matches!(bad("colour = red"), ConfigError::UnknownKey { .. }));
        assert!(matches!(
            bad("region = line:3\nregion = line:4"),
            ConfigError::DuplicateKey { line: 2, .. }
        ));
        assert!(matches!(bad("region = line:3\ndt = two"), ConfigError::InvalidValue { line: 2, .. }));
        assert!(matches!(bad("dt = 2"), ConfigError::MissingRegion));
        assert!(matches!(bad("region = line:3\ne0 = 1"), ConfigError::Params(_)));
        assert!(matches!(
            bad("region = line:3:9"),
            ConfigError::InvalidValue { .. }
        ));
    }

    #[test]
    fn missing_region_file_is_reported_on_load() {
        let c = Config::parse("region = /nonexistent/region.txt", None).unwrap();
        assert!(matches!(c.region.load(), Err(ConfigError::RegionFile { .. })));
    }

    #[test]
    fn relative_region_paths_use_base_dir() {
        let c = Config::parse("region = r.txt", Some(Path::new("/tmp/cfg"))).unwrap();
        assert_eq!(c.region, RegionSource::File(PathBuf::from("/tmp/cfg/r.txt")));
    }

    #[test]
    fn open_region_is_entered_in_the_middle() {
        let r = RegionSource::parse("open:41x41", None).unwrap().load().unwrap();
        assert_eq!((r.n(), r.m()), (1681, 3280));
        assert_eq!(r.entry(), Coord::new(20, 20));
    }

    #[test]
    fn overrides_validate() {
        let c = Config::parse("region = line:5", None).unwrap();
        assert_eq!(c.with("dt", "8").unwrap().params.dt, 8);
        assert!(c.with("e0", "1").is_err());
        assert!(c.with("speed", "1").is_err());
    }
}
