//! Experiment reports: config echo, named verdicts with numeric margins, and
//! the environment fingerprint under which every figure was produced.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Signed slack: nonnegative means the criterion held with room to spare.
    pub margin: f64,
    pub detail: String,
}

impl Verdict {
    pub fn from_margin(name: impl Into<String>, margin: f64, detail: impl Into<String>) -> Self {
        Verdict {
            name: name.into(),
            pass: margin >= 0.0,
            margin,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: String,
    pub config_echo: Vec<(String, String)>,
    /// Resolutions and tolerances in force during the run.
    pub fingerprint: Vec<(String, String)>,
    pub warnings: Vec<String>,
    pub verdicts: Vec<Verdict>,
    pub artifacts: Vec<PathBuf>,
}

impl Report {
    pub fn new(experiment: &str, config_echo: Vec<(String, String)>) -> Self {
        Report {
            experiment: experiment.to_string(),
            config_echo,
            fingerprint: Vec::new(),
            warnings: Vec::new(),
            verdicts: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn fingerprint(&mut self, key: &str, value: String) {
        self.fingerprint.push((key.to_string(), value));
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for v in &self.verdicts {
            let _ = writeln!(
                s,
                "{} {:<40} margin={:+.6e}  {}",
                if v.pass { "PASS" } else { "FAIL" },
                v.name,
                v.margin,
                v.detail
            );
        }
        let _ = writeln!(
            s,
            "{}: {}/{} verdicts pass",
            self.experiment,
            self.verdicts.iter().filter(|v| v.pass).count(),
            self.verdicts.len()
        );
        s
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment report: {}", self.experiment);
        let _ = writeln!(s, "\n[config]");
        for (k, v) in &self.config_echo {
            let _ = writeln!(s, "{k} = {v}");
        }
        if !self.fingerprint.is_empty() {
            let _ = writeln!(s, "\n[fingerprint]");
            for (k, v) in &self.fingerprint {
                let _ = writeln!(s, "{k} = {v}");
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(s, "\n[warnings]");
            for w in &self.warnings {
                let _ = writeln!(s, "- {w}");
            }
        }
        let _ = writeln!(s, "\n[verdicts]");
        s.push_str(&self.summary());
        if !self.artifacts.is_empty() {
            let _ = writeln!(s, "\n[artifacts]");
            for a in &self.artifacts {
                let _ = writeln!(s, "- {}", a.display());
            }
        }
        s
    }

    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = dir.join("report.txt");
        // the artifact list includes the report itself
        if !self.artifacts.contains(&path) {
            self.artifacts.push(path.clone());
        }
        std::fs::write(&path, self.render())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    }
}
