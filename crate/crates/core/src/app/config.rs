use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::geo::Scheme;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("reference city `{0}` is not among the configured cities")]
    UnknownReference(String),
    #[error("unknown city `{0}`")]
    UnknownCity(String),
    #[error("city name `{0}` appears more than once")]
    DuplicateCity(String),
    #[error("city name `{0}` cannot be used as a directory name")]
    BadCityName(String),
    #[error("input path {0} is used more than once")]
    DuplicatePath(PathBuf),
    #[error("class_count must be between 2 and 9, got {0}")]
    ClassCount(usize),
    #[error("top_fraction must lie in (0, 1], got {0}")]
    TopFraction(f64),
    #[error("no cities configured")]
    NoCities,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CityConfig {
    pub name: String,
    pub attr_path: PathBuf,
    pub geom_path: PathBuf,
    pub crimes_path: PathBuf,
    /// Optional external vacancy measure (`geoid,likely,very_likely`) to
    /// validate PERCVAC against.
    #[serde(default)]
    pub vacancy_index_path: Option<PathBuf>,
}

fn default_class_count() -> usize {
    5
}

fn default_top_fraction() -> f64 {
    0.10
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A full run. Relative paths resolve against the config file's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cities: Vec<CityConfig>,
    pub reference_city: String,
    #[serde(default)]
    pub weights_scheme: Scheme,
    #[serde(default = "default_class_count")]
    pub class_count: usize,
    #[serde(default = "default_top_fraction")]
    pub top_fraction: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Classify each city by its own natural breaks instead of the
    /// reference city's.
    #[serde(default)]
    pub per_city_breaks: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for c in &mut self.cities {
            fix(&mut c.attr_path);
            fix(&mut c.geom_path);
            fix(&mut c.crimes_path);
            if let Some(v) = c.vacancy_index_path.as_mut() {
                fix(v);
            }
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cities.is_empty() {
            return Err(ConfigError::NoCities);
        }
        let mut names = BTreeSet::new();
        let mut paths = BTreeSet::new();
        for c in &self.cities {
            let bad = c.name.is_empty()
                || c.name.starts_with('.')
                || c.name.contains(['/', '\\'])
                || c.name.chars().any(char::is_control);
            if bad {
                return Err(ConfigError::BadCityName(c.name.clone()));
            }
            if !names.insert(c.name.as_str()) {
                return Err(ConfigError::DuplicateCity(c.name.clone()));
            }
            let own = [Some(&c.attr_path), Some(&c.geom_path), Some(&c.crimes_path), c.vacancy_index_path.as_ref()];
            for p in own.into_iter().flatten() {
                if !paths.insert(p.clone()) {
                    return Err(ConfigError::DuplicatePath(p.clone()));
                }
            }
        }
        if !names.contains(self.reference_city.as_str()) {
            return Err(ConfigError::UnknownReference(self.reference_city.clone()));
        }
        if !(2..=9).contains(&self.class_count) {
            return Err(ConfigError::ClassCount(self.class_count));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(ConfigError::TopFraction(self.top_fraction));
        }
        Ok(())
    }

    pub fn city(&self, name: &str) -> Result<&CityConfig, ConfigError> {
        self.cities
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| ConfigError::UnknownCity(name.into()))
    }

    pub fn reference(&self) -> &CityConfig {
        self.city(&self.reference_city).expect("validated")
    }
}
