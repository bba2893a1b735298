//! Run configuration: defaults, INI loading and validation.

use std::path::{Path, PathBuf};

use ini::Ini;
use mushroom_core::geometry::MushroomGeometry;
use mushroom_core::quasimodes::CutoffProfile;
use serde::Serialize;

use crate::CliError;

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "MUSHROOM_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".mushroom-cache";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryBlock {
    pub r1: f64,
    pub r2: f64,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverBlock {
    pub h: f64,
    pub count: usize,
    pub method: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasimodeBlock {
    pub eps: f64,
    pub lambda_max: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowBlock {
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    /// `None` lets the flow module pick four grid steps.
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub geometry: GeometryBlock,
    pub solver: SolverBlock,
    pub quasimode: QuasimodeBlock,
    pub flow: FlowBlock,
    pub seed: u64,
    #[serde(skip)]
    pub cache_dir: PathBuf,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryBlock { r1: 1.0, r2: 2.0, t: 1.0 },
            solver: SolverBlock {
                h: mushroom_core::eigensolver::DEFAULT_H,
                count: 100,
                method: "five-point".into(),
            },
            quasimode: QuasimodeBlock { eps: 0.05, lambda_max: 100.0, c: 0.5 },
            flow: FlowBlock { t0: 0.9, t1: 1.1, samples: 21, delta: None },
            seed: 0,
            cache_dir: PathBuf::from(DEFAULT_CACHE_DIR),
            out_dir: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::validation(format!("config: {}", msg.into()))
}

fn num<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| invalid(format!("[{section}] {key} = {v:?} is not a valid number")))
}

impl RunConfig {
    /// Defaults overlaid with the INI file, if any.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| invalid(format!("cannot read {}: {e}", p.display())))?;
            cfg.apply_ini(&text)?;
        }
        Ok(cfg)
    }

    pub fn apply_ini(&mut self, text: &str) -> Result<(), CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| invalid(e.to_string()))?;
        for (section, props) in ini.iter() {
            let s = section.unwrap_or("run");
            for (k, v) in props.iter() {
                match (s, k) {
                    ("geometry", "r1") => self.geometry.r1 = num(s, k, v)?,
                    ("geometry", "r2") => self.geometry.r2 = num(s, k, v)?,
                    ("geometry", "t") => self.geometry.t = num(s, k, v)?,
                    ("solver", "h") => self.solver.h = num(s, k, v)?,
                    ("solver", "count") => self.solver.count = num(s, k, v)?,
                    ("solver", "method") => self.solver.method = v.trim().to_string(),
                    ("quasimode", "eps") => self.quasimode.eps = num(s, k, v)?,
                    ("quasimode", "lambda_max") => self.quasimode.lambda_max = num(s, k, v)?,
                    ("quasimode", "c") => self.quasimode.c = num(s, k, v)?,
                    ("flow", "t0") => self.flow.t0 = num(s, k, v)?,
                    ("flow", "t1") => self.flow.t1 = num(s, k, v)?,
                    ("flow", "samples") => self.flow.samples = num(s, k, v)?,
                    ("flow", "delta") => {
                        self.flow.delta = match v.trim() {
                            "auto" | "" => None,
                            _ => Some(num(s, k, v)?),
                        }
                    }
                    ("run", "seed") => self.seed = num(s, k, v)?,
                    ("run", "cache_dir") => self.cache_dir = PathBuf::from(v.trim()),
                    ("run", "out_dir") => self.out_dir = Some(PathBuf::from(v.trim())),
                    _ => return Err(invalid(format!("unknown key [{s}] {k}"))),
                }
            }
        }
        Ok(())
    }

    /// Checks every block against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.geometry;
        let geom = MushroomGeometry::new(g.r1, g.r2, g.t)?;
        let s = &self.solver;
        if !(s.h.is_finite() && s.h > 0.0 && s.h <= g.r1 / 4.0) {
            return Err(invalid(format!("solver h = {} must lie in (0, r1/4]", s.h)));
        }
        if s.count == 0 || s.count > 5000 {
            return Err(invalid(format!("solver count = {} must lie in [1, 5000]", s.count)));
        }
        if s.method != "five-point" {
            return Err(invalid(format!("unknown solver method {:?} (supported: five-point)", s.method)));
        }
        let q = &self.quasimode;
        CutoffProfile::new(g.r1, q.eps)?;
        if !(q.lambda_max > 0.0 && q.lambda_max <= 1e3) {
            return Err(invalid(format!("quasimode lambda_max = {} must lie in (0, 1000]", q.lambda_max)));
        }
        if !(q.c.is_finite() && q.c >= 0.0) {
            return Err(invalid(format!("quasimode c = {} must be finite and >= 0", q.c)));
        }
        let f = &self.flow;
        if !(f.t0 < f.t1) {
            return Err(invalid(format!("flow needs t0 < t1, got [{}, {}]", f.t0, f.t1)));
        }
        geom.with_t(f.t0)?;
        geom.with_t(f.t1)?;
        if f.samples < 2 {
            return Err(invalid(format!("flow samples = {} must be >= 2", f.samples)));
        }
        if let Some(d) = f.delta {
            if !(d > 0.0 && d < g.r1 / 2.0) {
                return Err(invalid(format!("flow delta = {d} must lie in (0, r1/2)")));
            }
        }
        Ok(())
    }

    pub fn mushroom(&self) -> Result<MushroomGeometry, CliError> {
        Ok(MushroomGeometry::new(self.geometry.r1, self.geometry.r2, self.geometry.t)?)
    }
}

/// Cache directory: command line, then environment, then config file.
pub fn resolve_cache_dir(flag: Option<&Path>, from_config: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => from_config.to_path_buf(),
    }
}
