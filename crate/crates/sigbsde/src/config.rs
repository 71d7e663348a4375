//! Run configuration: flat `key = value` files with command-line overrides.
//!
//! ```text
//! # comment
//! benchmark = entropic
//! samples = 8192
//! theta = 0.3
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sigbsde_core::bsde::Scheme;
use sigbsde_core::metrics::ExperimentConfig;
use sigbsde_core::risk::{Benchmark, CirParams};
use sigbsde_core::signature::TimeScaling;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub benchmark: String,
    pub samples: usize,
    pub steps: usize,
    pub horizon: f64,
    pub depth: usize,
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
    pub scheme: String,
    pub picard_iters: usize,
    pub picard_tol: f64,
    pub scaling: String,
    pub theta: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub x0: f64,
    pub r: f64,
    pub big_r: f64,
    pub out: PathBuf,
    /// Worker threads for independent iterations.
    pub threads: usize,
    /// Number of samples written to `paths.csv` and `solution.csv`.
    pub dump_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            benchmark: "entropic".into(),
            samples: 1 << 13,
            steps: 500,
            horizon: 1.0,
            depth: 3,
            lambda: 0.3,
            iterations: 50,
            seed: 0,
            scheme: "explicit".into(),
            picard_iters: 10,
            picard_tol: 1e-10,
            scaling: "raw".into(),
            theta: 0.3,
            beta: 1.0,
            a: 1.0,
            b: 1.0,
            sigma: 1.0,
            x0: 1.0,
            r: 0.0,
            big_r: 1.0,
            out: PathBuf::from("out"),
            threads: 1,
            dump_samples: 256,
        }
    }
}

pub const KEYS: &[&str] = &[
    "benchmark",
    "samples",
    "steps",
    "horizon",
    "depth",
    "ridge",
    "iterations",
    "seed",
    "scheme",
    "picard_iters",
    "picard_tol",
    "scaling",
    "theta",
    "beta",
    "a",
    "b",
    "sigma",
    "x0",
    "r",
    "R",
    "out",
    "threads",
    "dump_samples",
];

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl RunConfig {
    /// Sets one key. `ridge` is the penalty `λ`, `r`/`R` the rate bounds.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "benchmark" => self.benchmark = v.to_string(),
            "samples" => self.samples = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "horizon" => self.horizon = parse(key, v)?,
            "depth" => self.depth = parse(key, v)?,
            "ridge" | "lambda" => self.lambda = parse(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "scheme" => self.scheme = v.to_string(),
            "picard_iters" => self.picard_iters = parse(key, v)?,
            "picard_tol" => self.picard_tol = parse(key, v)?,
            "scaling" => self.scaling = v.to_string(),
            "theta" => self.theta = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "a" => self.a = parse(key, v)?,
            "b" => self.b = parse(key, v)?,
            "sigma" => self.sigma = parse(key, v)?,
            "x0" => self.x0 = parse(key, v)?,
            "r" => self.r = parse(key, v)?,
            "R" => self.big_r = parse(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = parse(key, v)?,
            "dump_samples" => self.dump_samples = parse(key, v)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                origin: origin.to_string(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".into()))?;
            self.set(key, value).map_err(parse_err)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// `key = value` echo that [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let value = match *key {
                "benchmark" => self.benchmark.clone(),
                "samples" => self.samples.to_string(),
                "steps" => self.steps.to_string(),
                "horizon" => self.horizon.to_string(),
                "depth" => self.depth.to_string(),
                "ridge" => self.lambda.to_string(),
                "iterations" => self.iterations.to_string(),
                "seed" => self.seed.to_string(),
                "scheme" => self.scheme.clone(),
                "picard_iters" => self.picard_iters.to_string(),
                "picard_tol" => self.picard_tol.to_string(),
                "scaling" => self.scaling.clone(),
                "theta" => self.theta.to_string(),
                "beta" => self.beta.to_string(),
                "a" => self.a.to_string(),
                "b" => self.b.to_string(),
                "sigma" => self.sigma.to_string(),
                "x0" => self.x0.to_string(),
                "r" => self.r.to_string(),
                "R" => self.big_r.to_string(),
                "out" => self.out.display().to_string(),
                "threads" => self.threads.to_string(),
                "dump_samples" => self.dump_samples.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    pub fn benchmark(&self) -> Result<Benchmark> {
        let b = match self.benchmark.as_str() {
            "linear" => Benchmark::linear(self.beta)?,
            "entropic" => Benchmark::entropic(self.theta)?,
            "cir" => Benchmark::cir(CirParams {
                a: self.a,
                b: self.b,
                sigma: self.sigma,
                x0: self.x0,
            })?,
            "ambiguous" => Benchmark::ambiguous(self.r, self.big_r)?,
            other => {
                return Err(Error::usage(format!(
                    "unknown benchmark {other:?}; expected one of linear, entropic, cir, ambiguous"
                )))
            }
        };
        Ok(b)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        match self.scheme.as_str() {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit {
                max_iters: self.picard_iters,
                tol: self.picard_tol,
            }),
            other => Err(Error::usage(format!(
                "unknown scheme {other:?}; expected explicit or implicit"
            ))),
        }
    }

    pub fn time_scaling(&self) -> Result<TimeScaling> {
        match self.scaling.as_str() {
            "raw" => Ok(TimeScaling::Raw),
            "normalized" => Ok(TimeScaling::Normalized),
            other => Err(Error::usage(format!(
                "unknown scaling {other:?}; expected raw or normalized"
            ))),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let cfg = ExperimentConfig {
            benchmark: self.benchmark()?,
            samples: self.samples,
            steps: self.steps,
            horizon: self.horizon,
            depth: self.depth,
            lambda: self.lambda,
            iterations: self.iterations,
            seed: self.seed,
            scheme: self.scheme()?,
            scaling: self.time_scaling()?,
        };
        cfg.validate()?;
        if self.threads == 0 {
            return Err(Error::usage("threads must be at least 1"));
        }
        Ok(cfg)
    }
}
