use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gazeprop::{AffinityParams, PropagationParams};

/// What the final per-superpixel score is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Expected exponential loss boosting on the soft estimates.
    Eel,
    /// Exponential loss boosting on estimates hardened at 0.5.
    El,
    /// The propagated estimates themselves, no classifier.
    Prob,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Eel, Mode::El, Mode::Prob];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Eel => "eel",
            Mode::El => "el",
            Mode::Prob => "prob",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eel" => Ok(Mode::Eel),
            "el" => Ok(Mode::El),
            "prob" => Ok(Mode::Prob),
            other => Err(Error::Config(format!("unknown mode {other:?} (eel, el, prob)"))),
        }
    }
}

/// Source of the per-superpixel orientation used by the affinity graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThetaSource {
    Gradient,
    /// Directory of `flow_NNNNN.flo` files, one per frame.
    Flow(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureSource {
    Pyramid,
    /// Binary feature file covering every superpixel.
    Precomputed(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sp_size: u32,
    pub compactness: f64,
    pub alpha: f64,
    pub sigma_a: f64,
    pub sigma_d: f64,
    pub tau: f64,
    pub diffusion_iters: usize,
    pub squared_affinity: bool,
    pub rounds: usize,
    pub u_fraction: f64,
    pub seed: u64,
    pub theta_source: ThetaSource,
    pub features: FeatureSource,
    pub mode: Mode,
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sp_size: 15,
            compactness: 10.0,
            alpha: 0.95,
            sigma_a: 0.5,
            sigma_d: 50.0,
            tau: 50.0,
            diffusion_iters: 10,
            squared_affinity: false,
            rounds: 50,
            u_fraction: 0.10,
            seed: 0,
            theta_source: ThetaSource::Gradient,
            features: FeatureSource::Pyramid,
            mode: Mode::Eel,
            workers: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = {value:?}: {e}")))
}

impl PipelineConfig {
    pub fn propagation(&self) -> PropagationParams {
        PropagationParams {
            alpha: self.alpha,
            affinity: AffinityParams {
                sigma_a: self.sigma_a,
                sigma_d: self.sigma_d,
                tau: self.tau,
                squared: self.squared_affinity,
            },
            iterations: self.diffusion_iters,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.sp_size == 0 {
            return fail("sp_size must be positive".into());
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return fail(format!("compactness {} must be positive", self.compactness));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha {} outside (0, 1)", self.alpha));
        }
        for (name, v) in [("sigma_a", self.sigma_a), ("sigma_d", self.sigma_d)] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} {v} must be positive"));
            }
        }
        if self.tau.is_nan() || self.tau < 0.0 {
            return fail(format!("tau {} must be nonnegative", self.tau));
        }
        if !(self.u_fraction > 0.0 && self.u_fraction <= 1.0) {
            return fail(format!("u_fraction {} outside (0, 1]", self.u_fraction));
        }
        if self.rounds == 0 {
            return fail("rounds must be at least 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sp_size" => self.sp_size = parse_value(key, value)?,
            "compactness" => self.compactness = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "sigma_a" => self.sigma_a = parse_value(key, value)?,
            "sigma_d" => self.sigma_d = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "diffusion_iters" => self.diffusion_iters = parse_value(key, value)?,
            "squared_affinity" => self.squared_affinity = parse_value(key, value)?,
            "rounds" => self.rounds = parse_value(key, value)?,
            "u_fraction" => self.u_fraction = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "mode" => self.mode = value.parse()?,
            "workers" => self.workers = Some(parse_value(key, value)?),
            "theta_source" => {
                self.theta_source = match value.split_once(':') {
                    None if value == "gradient" => ThetaSource::Gradient,
                    Some(("flow", dir)) if !dir.is_empty() => ThetaSource::Flow(dir.into()),
                    _ => return Err(Error::Config(format!("theta_source {value:?} (gradient or flow:DIR)"))),
                }
            }
            "features" => {
                self.features = match value.split_once(':') {
                    None if value == "pyramid" => FeatureSource::Pyramid,
                    Some(("precomputed", file)) if !file.is_empty() => FeatureSource::Precomputed(file.into()),
                    _ => return Err(Error::Config(format!("features {value:?} (pyramid or precomputed:FILE)"))),
                }
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment. Relative
    /// paths stay relative to the working directory.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::default();
        c.apply_str(&text)?;
        Ok(c)
    }

    /// Inverse of `apply_str`.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("sp_size", self.sp_size.to_string());
        put("compactness", self.compactness.to_string());
        put("alpha", self.alpha.to_string());
        put("sigma_a", self.sigma_a.to_string());
        put("sigma_d", self.sigma_d.to_string());
        put("tau", self.tau.to_string());
        put("diffusion_iters", self.diffusion_iters.to_string());
        put("squared_affinity", self.squared_affinity.to_string());
        put("rounds", self.rounds.to_string());
        put("u_fraction", self.u_fraction.to_string());
        put("seed", self.seed.to_string());
        put(
            "theta_source",
            match &self.theta_source {
                ThetaSource::Gradient => "gradient".into(),
                ThetaSource::Flow(d) => format!("flow:{}", d.display()),
            },
        );
        put(
            "features",
            match &self.features {
                FeatureSource::Pyramid => "pyramid".into(),
                FeatureSource::Precomputed(p) => format!("precomputed:{}", p.display()),
            },
        );
        put("mode", self.mode.to_string());
        if let Some(w) = self.workers {
            put("workers", w.to_string());
        }
        s
    }
}
