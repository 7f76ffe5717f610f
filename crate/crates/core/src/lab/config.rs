//! Flat key=value experiment configuration, overridable by CLI flags.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::trace::min_resolvable_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    TheoremCheck,
    DomainConvergence,
    MehlerOracle,
    PropertySuite,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theorem-check" => Ok(ExperimentKind::TheoremCheck),
            "domain-convergence" => Ok(ExperimentKind::DomainConvergence),
            "mehler-oracle" => Ok(ExperimentKind::MehlerOracle),
            "property-suite" => Ok(ExperimentKind::PropertySuite),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::TheoremCheck => "theorem-check",
            ExperimentKind::DomainConvergence => "domain-convergence",
            ExperimentKind::MehlerOracle => "mehler-oracle",
            ExperimentKind::PropertySuite => "property-suite",
        }
    }
}

pub fn default_half_width(dim: usize) -> f64 {
    if dim == 1 {
        8.0
    } else {
        6.0
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    pub domain: String,
    /// Smooth the parsed domain with this radius before use.
    pub smooth_delta: Option<f64>,
    pub u0: String,
    pub half_width: Option<f64>,
    pub spacing: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub time_count: usize,
    /// Comparison time for the whole-space oracle experiment.
    pub t_compare: f64,
    pub lambdas: Vec<f64>,
    pub faces: (usize, usize),
    pub delta0: f64,
    pub conv_tol: f64,
    pub upper_tol: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment: kind,
            dim: if kind == ExperimentKind::DomainConvergence {
                2
            } else {
                1
            },
            domain: match kind {
                ExperimentKind::DomainConvergence => "ball:1".into(),
                _ => "interval:-1,1".into(),
            },
            smooth_delta: None,
            u0: "sign".into(),
            half_width: None,
            spacing: match kind {
                ExperimentKind::DomainConvergence => 1.0 / 64.0,
                _ => 1.0 / 1024.0,
            },
            t_min: 1e-3,
            t_max: 1.0,
            time_count: 24,
            t_compare: 0.5,
            lambdas: vec![0.5, 1.0, 2.0],
            faces: (4, 12),
            delta0: 0.05,
            conv_tol: 0.03,
            upper_tol: 0.01,
            seed: 42,
            out_dir: PathBuf::from("oubv-out"),
        }
    }

    pub fn resolved_half_width(&self) -> f64 {
        self.half_width.unwrap_or_else(|| default_half_width(self.dim))
    }

    /// Reads `key = value` lines; '#' starts a comment.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad number '{v}' for key '{key}'")))
        };
        match key {
            "experiment" => self.experiment = ExperimentKind::parse(value)?,
            "dim" => {
                self.dim = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad dim '{value}'")))?;
            }
            "domain" => self.domain = value.to_string(),
            "smooth_delta" => self.smooth_delta = Some(parse_f64(value)?),
            "u0" => self.u0 = value.to_string(),
            "L" => self.half_width = Some(parse_f64(value)?),
            "h" => self.spacing = parse_f64(value)?,
            "tmin" => self.t_min = parse_f64(value)?,
            "tmax" => self.t_max = parse_f64(value)?,
            "nt" => {
                self.time_count = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad nt '{value}'")))?;
            }
            "t_compare" => self.t_compare = parse_f64(value)?,
            "lambda" => {
                let mut lambdas = Vec::new();
                for part in value.split(',') {
                    lambdas.push(parse_f64(part.trim())?);
                }
                if lambdas.is_empty() {
                    return Err(Error::Config("empty lambda list".into()));
                }
                self.lambdas = lambdas;
            }
            "faces" => {
                let Some((a, b)) = value.split_once(':') else {
                    return Err(Error::Config(format!("faces needs 'lo:hi', got '{value}'")));
                };
                let lo = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad faces '{value}'")))?;
                let hi = b
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad faces '{value}'")))?;
                self.faces = (lo, hi);
            }
            "delta0" => self.delta0 = parse_f64(value)?,
            "conv_tol" => self.conv_tol = parse_f64(value)?,
            "upper_tol" => self.upper_tol = parse_f64(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed '{value}'")))?;
            }
            "out" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Config(format!("dim = {} not in 1..=3", self.dim)));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::Config(format!("h = {}", self.spacing)));
        }
        if self.experiment == ExperimentKind::TheoremCheck {
            let floor = min_resolvable_time(self.spacing);
            if self.t_min < floor {
                return Err(Error::Config(format!(
                    "tmin = {} is below the resolvable threshold (10h)^2 = {floor}",
                    self.t_min
                )));
            }
            if !(self.t_max > self.t_min) || self.time_count < 2 {
                return Err(Error::Config(
                    "time ladder needs tmax > tmin and nt >= 2".into(),
                ));
            }
        }
        if self.experiment == ExperimentKind::DomainConvergence {
            let (lo, hi) = self.faces;
            if lo < 3 || hi < lo {
                return Err(Error::Config(format!("bad faces range {lo}:{hi}")));
            }
            if self.dim != 2 {
                return Err(Error::Config(
                    "domain-convergence runs in dimension 2".into(),
                ));
            }
        }
        Ok(())
    }

    /// Ordered echo of every setting; the seed is part of every output file.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("experiment".into(), self.experiment.as_str().to_string()),
            ("dim".into(), self.dim.to_string()),
            ("domain".into(), self.domain.clone()),
        ];
        if let Some(d) = self.smooth_delta {
            kv.push(("smooth_delta".into(), format!("{d}")));
        }
        kv.push(("u0".into(), self.u0.clone()));
        kv.push(("L".into(), format!("{}", self.resolved_half_width())));
        kv.push(("h".into(), format!("{}", self.spacing)));
        match self.experiment {
            ExperimentKind::TheoremCheck => {
                kv.push(("tmin".into(), format!("{}", self.t_min)));
                kv.push(("tmax".into(), format!("{}", self.t_max)));
                kv.push(("nt".into(), self.time_count.to_string()));
                kv.push(("conv_tol".into(), format!("{}", self.conv_tol)));
                kv.push(("upper_tol".into(), format!("{}", self.upper_tol)));
            }
            ExperimentKind::DomainConvergence => {
                kv.push((
                    "faces".into(),
                    format!("{}:{}", self.faces.0, self.faces.1),
                ));
                kv.push((
                    "lambda".into(),
                    self.lambdas
                        .iter()
                        .map(|l| format!("{l}"))
                        .collect::<Vec<_>>()
                        .join(","),
                ));
                kv.push(("delta0".into(), format!("{}", self.delta0)));
            }
            ExperimentKind::MehlerOracle => {
                kv.push(("t_compare".into(), format!("{}", self.t_compare)));
            }
            ExperimentKind::PropertySuite => {}
        }
        kv.push(("seed".into(), self.seed.to_string()));
        kv
    }
}
