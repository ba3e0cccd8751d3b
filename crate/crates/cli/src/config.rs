//! Run configuration: per-experiment defaults overridden by a flat
//! `key = value` file.

use std::path::PathBuf;

use hodge_core::datasets::{GeneratorConfig, GeneratorKind};
use hodge_core::spectral::{ZeroTol, DEFAULT_GAMMA_MIN};
use serde::Serialize;

use crate::sweep::{linspace, OperatorChoice};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    /// Zero for errors that concern the resolved config as a whole.
    pub line: usize,
    pub message: String,
}

fn whole(message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: 0,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Generate,
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Generate => "generate",
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
            Experiment::Exp5 => "exp5",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKindChoice {
    Extended,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TolMode {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub n_d: usize,
    pub n_t: usize,
    pub d_min: f64,
    pub d_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub grid: GridSpec,
    pub seed: u64,
    /// Generator parameters; `n_times` and `seed` mirror the grid and seed.
    pub generator: GeneratorConfig,
    pub operator: OperatorKindChoice,
    pub epsilon: f64,
    pub mu: f64,
    pub zero_tol: f64,
    pub zero_tol_mode: TolMode,
    pub gamma_min: f64,
    /// Persistence-selected frame rank; zero keeps the full kernel.
    pub k: usize,
    /// Fixed scale of the dumbbell holonomy loops.
    pub d_ref: f64,
    pub sigmas: Vec<f64>,
    pub n_seeds: u64,
    /// Noise added by `generate`.
    pub noise: f64,
    pub formats: Vec<Format>,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let kind = match experiment {
            Experiment::Exp1 => GeneratorKind::VineyardLike,
            Experiment::Exp4 => GeneratorKind::DumbbellDeform,
            _ => GeneratorKind::DoubleCirclesApproach,
        };
        let mut cfg = RunConfig {
            experiment,
            grid: GridSpec {
                n_d: 30,
                n_t: 40,
                d_min: 0.3,
                d_max: 2.0,
            },
            seed: 7,
            generator: GeneratorConfig::new(kind),
            operator: OperatorKindChoice::Extended,
            epsilon: 0.02,
            mu: 1.0,
            zero_tol: 1e-8,
            zero_tol_mode: TolMode::Relative,
            gamma_min: DEFAULT_GAMMA_MIN,
            k: 2,
            d_ref: 0.36,
            sigmas: vec![0.0025, 0.005, 0.01, 0.02, 0.04],
            n_seeds: 20,
            noise: 0.0,
            formats: vec![Format::Csv, Format::Json],
            out: PathBuf::from("out"),
        };
        match experiment {
            Experiment::Exp2 => {
                // Unequal radii and a vertical fly-by make the two dominant
                // classes exchange lifetime order exactly at closest approach.
                cfg.generator.size_contrast = 0.08;
                cfg.generator.fly_by = 8.0;
                cfg.generator.s_min = 2.1;
                cfg.grid.n_t = 41;
            }
            // Samples on the triangle corners keep every polar step on one leg.
            Experiment::Exp1 => cfg.grid.n_t = 41,
            Experiment::Exp4 => cfg.k = 3,
            Experiment::Exp5 => {
                // Nearly touching circles joined by a contractible bridge
                // patch. Bridge triangles switch on at rates that differ across
                // the patch, so the two loop modes mix and the curvature is
                // genuinely nonzero while the kernel rank stays two.
                cfg.generator.n_points_per_feature = 8;
                cfg.generator.s_min = 2.05;
                cfg.generator.s_max = 2.3;
                cfg.generator.fly_by = 0.3;
                cfg.grid = GridSpec {
                    n_d: 10,
                    n_t: 12,
                    d_min: 0.92,
                    d_max: 1.2,
                };
                cfg.operator = OperatorKindChoice::Smooth;
                cfg.mu = 0.3;
                cfg.zero_tol = 2e-2;
                cfg.zero_tol_mode = TolMode::Absolute;
            }
            _ => {}
        }
        cfg.sync();
        cfg
    }

    fn sync(&mut self) {
        self.generator.n_times = self.grid.n_t;
        self.generator.seed = self.seed;
    }

    /// Defaults overridden by the `key = value` lines of `text`.
    pub fn parse(experiment: Experiment, text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line,
                    message: format!("expected key = value, got {content:?}"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key) {
                return Err(ConfigError {
                    line,
                    message: format!("duplicate key {key}"),
                });
            }
            entries.push((line, key, value));
        }
        let mut cfg = RunConfig::defaults(experiment);
        // The generator kind selects its own defaults before any override.
        if let Some(&(line, key, value)) = entries.iter().find(|e| e.1 == "generator") {
            cfg.set(key, value)
                .map_err(|message| ConfigError { line, message })?;
            let generator = GeneratorConfig::new(cfg.generator.kind);
            cfg.generator = generator;
        }
        for (line, key, value) in entries {
            cfg.set(key, value)
                .map_err(|message| ConfigError { line, message })?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        let g = &mut self.generator;
        match key {
            "n_d" => self.grid.n_d = num(key, value)?,
            "n_t" => self.grid.n_t = num(key, value)?,
            "d_min" => self.grid.d_min = num(key, value)?,
            "d_max" => self.grid.d_max = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "generator" => {
                g.kind = match value {
                    "double_circles" => GeneratorKind::DoubleCirclesApproach,
                    "size_only" => GeneratorKind::SizeOnlyControl,
                    "dumbbell_deform" => GeneratorKind::DumbbellDeform,
                    "dumbbell_rotate" => GeneratorKind::DumbbellRotate,
                    "vineyard_like" => GeneratorKind::VineyardLike,
                    _ => return Err(format!("unknown generator {value:?}")),
                }
            }
            "period" => g.period = num(key, value)?,
            "n_points" => g.n_points_per_feature = num(key, value)?,
            "jitter" => g.jitter = num(key, value)?,
            "radius" => g.radius = num(key, value)?,
            "s_min" => g.s_min = num(key, value)?,
            "s_max" => g.s_max = num(key, value)?,
            "size_contrast" => g.size_contrast = num(key, value)?,
            "fly_by" => g.fly_by = num(key, value)?,
            "size_amplitude" => g.size_amplitude = num(key, value)?,
            "outer_radius_left" => g.outer_radius_left = num(key, value)?,
            "outer_radius_right" => g.outer_radius_right = num(key, value)?,
            "outer_offset" => g.outer_offset = num(key, value)?,
            "middle_radius" => g.middle_radius = num(key, value)?,
            "middle_points" => g.middle_points = num(key, value)?,
            "deform_amplitude" => g.deform_amplitude = num(key, value)?,
            "operator" => {
                self.operator = match value {
                    "extended" => OperatorKindChoice::Extended,
                    "smooth" => OperatorKindChoice::Smooth,
                    _ => {
                        return Err(format!(
                            "operator must be extended or smooth, got {value:?}"
                        ))
                    }
                }
            }
            "epsilon" => self.epsilon = num(key, value)?,
            "mu" => self.mu = num(key, value)?,
            "zero_tol" => self.zero_tol = num(key, value)?,
            "zero_tol_mode" => {
                self.zero_tol_mode = match value {
                    "relative" => TolMode::Relative,
                    "absolute" => TolMode::Absolute,
                    _ => {
                        return Err(format!(
                            "zero_tol_mode must be relative or absolute, got {value:?}"
                        ))
                    }
                }
            }
            "gamma_min" => self.gamma_min = num(key, value)?,
            "k" => self.k = num(key, value)?,
            "d_ref" => self.d_ref = num(key, value)?,
            "sigmas" => {
                self.sigmas = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<Result<_, _>>()?;
            }
            "n_seeds" => self.n_seeds = num(key, value)?,
            "noise" => self.noise = num(key, value)?,
            "formats" => {
                let mut formats = Vec::new();
                for f in value.split(',').map(str::trim) {
                    let f = match f {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        "svg" => Format::Svg,
                        _ => return Err(format!("unknown format {f:?}")),
                    };
                    if !formats.contains(&f) {
                        formats.push(f);
                    }
                }
                self.formats = formats;
            }
            "out" => self.out = PathBuf::from(value),
            _ => return Err(format!("unknown key {key}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.d_min < g.d_max) || !g.d_min.is_finite() || !g.d_max.is_finite() {
            return Err(whole(format!(
                "need d_min < d_max, got {} and {}",
                g.d_min, g.d_max
            )));
        }
        if g.n_d < 8 || g.n_t < 8 {
            return Err(whole(format!(
                "n_d and n_t must be at least 8, got {} and {}",
                g.n_d, g.n_t
            )));
        }
        for (name, v) in [("epsilon", self.epsilon), ("zero_tol", self.zero_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(whole(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(whole(format!("mu must be non-negative, got {}", self.mu)));
        }
        if !(self.gamma_min >= 0.0) {
            return Err(whole(format!(
                "gamma_min must be non-negative, got {}",
                self.gamma_min
            )));
        }
        if !(self.d_ref > 0.0 && self.d_ref.is_finite()) {
            return Err(whole(format!("d_ref must be positive, got {}", self.d_ref)));
        }
        if self.sigmas.len() < 2 || self.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(whole("sigmas needs at least two non-negative values"));
        }
        if self.n_seeds == 0 {
            return Err(whole("n_seeds must be positive"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(whole(format!(
                "noise must be non-negative, got {}",
                self.noise
            )));
        }
        self.generator.validate().map_err(|e| whole(e.to_string()))
    }

    pub fn d_values(&self) -> Vec<f64> {
        linspace(self.grid.d_min, self.grid.d_max, self.grid.n_d)
    }

    pub fn zero_tol(&self) -> ZeroTol {
        match self.zero_tol_mode {
            TolMode::Relative => ZeroTol::Relative(self.zero_tol),
            TolMode::Absolute => ZeroTol::Absolute(self.zero_tol),
        }
    }

    pub fn operator(&self) -> OperatorChoice {
        match self.operator {
            OperatorKindChoice::Extended => OperatorChoice::Extended,
            OperatorKindChoice::Smooth => OperatorChoice::Smooth {
                epsilon: self.epsilon,
                mu: self.mu,
            },
        }
    }

    pub fn frame_rank(&self) -> Option<usize> {
        (self.k > 0).then_some(self.k)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
